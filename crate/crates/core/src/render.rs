//! Software rasterization of scenes into RGB frames and label grids, plus
//! PNG encoding of both.
//!
//! Pixel `(row, col)` is covered by an entity when its center
//! `((col + 0.5) / res, (row + 0.5) / res)` lies inside the entity's shape.
//! Entities paint in scene order, agent last; background is black.

use std::io::Cursor;

use thiserror::Error;

use crate::geometry::{for_each_covered_pixel, Entity, GeometryError, SceneSpec, SCALE};

/// Observation side length used by every task.
pub const OBS_RESOLUTION: usize = 64;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("png encode: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("label {0} does not fit an 8-bit label image")]
    LabelRange(u32),
    #[error("unsupported png layout: {0}")]
    Unsupported(String),
}

/// Row-major 8-bit RGB image.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn black(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; width * height * 3] }
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        encode_png(self.width, self.height, png::ColorType::Rgb, &self.data)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, ImageError> {
        let (width, height, channels, data) = decode_png(bytes)?;
        let data = match channels {
            3 => data,
            4 => data.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
            1 => data.iter().flat_map(|&g| [g, g, g]).collect(),
            2 => data.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
            n => return Err(ImageError::Unsupported(format!("{n} channels"))),
        };
        Ok(Self { width, height, data })
    }
}

/// Row-major integer label grid.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LabelGrid {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u32>,
}

impl LabelGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u32>) -> Self {
        assert_eq!(data.len(), width * height, "label buffer size");
        Self { width, height, data }
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.width + col]
    }

    /// Number of pixels carrying `label`.
    pub fn count(&self, label: u32) -> usize {
        self.data.iter().filter(|&&l| l == label).count()
    }

    /// Encodes as an 8-bit grayscale PNG; labels above 255 are rejected.
    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        let bytes = self
            .data
            .iter()
            .map(|&l| u8::try_from(l).map_err(|_| ImageError::LabelRange(l)))
            .collect::<Result<Vec<u8>, _>>()?;
        encode_png(self.width, self.height, png::ColorType::Grayscale, &bytes)
    }

    /// Decodes a label PNG. Grayscale images map values to labels; color
    /// images map each distinct color to its packed `0xRRGGBB` value, so a
    /// colored segmentation can be scored without a palette.
    pub fn from_png(bytes: &[u8]) -> Result<Self, ImageError> {
        let (width, height, channels, data) = decode_png(bytes)?;
        let labels = match channels {
            1 => data.iter().map(|&v| v as u32).collect(),
            2 => data.chunks_exact(2).map(|p| p[0] as u32).collect(),
            3 | 4 => data
                .chunks_exact(channels)
                .map(|p| (p[0] as u32) << 16 | (p[1] as u32) << 8 | p[2] as u32)
                .collect(),
            n => return Err(ImageError::Unsupported(format!("{n} channels"))),
        };
        Ok(Self { width, height, data: labels })
    }
}

fn encode_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    data: &[u8],
) -> Result<Vec<u8>, ImageError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(data)?;
        writer.finish()?;
    }
    Ok(out)
}

fn decode_png(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>), ImageError> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageError::Unsupported("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf)?;
    buf.truncate(info.buffer_size());
    let channels = info.color_type.samples();
    Ok((info.width as usize, info.height as usize, channels, buf))
}

fn check_resolution(resolution: usize) -> Result<(), GeometryError> {
    if resolution < 8 {
        return Err(GeometryError::Resolution(resolution));
    }
    Ok(())
}

#[inline]
fn cover(entity: &Entity, resolution: usize, f: impl FnMut(usize, usize)) {
    let s = SCALE as f64;
    for_each_covered_pixel(
        entity.shape,
        entity.size.0 as f64 / s,
        (entity.pos.x as f64 / s, entity.pos.y as f64 / s),
        resolution,
        f,
    );
}

/// Renders `scene` into a fresh `resolution`² RGB image.
pub fn rasterize_scene(scene: &SceneSpec, resolution: usize) -> Result<RgbImage, GeometryError> {
    let mut img = RgbImage::default();
    rasterize_scene_into(scene, resolution, &mut img)?;
    Ok(img)
}

/// Like [`rasterize_scene`], reusing `out`'s allocation.
pub fn rasterize_scene_into(
    scene: &SceneSpec,
    resolution: usize,
    out: &mut RgbImage,
) -> Result<(), GeometryError> {
    check_resolution(resolution)?;
    scene.validate()?;
    out.width = resolution;
    out.height = resolution;
    out.data.clear();
    out.data.resize(resolution * resolution * 3, 0);
    for entity in scene.draw_order() {
        let rgb = entity.color.rgb();
        let data = &mut out.data;
        cover(entity, resolution, |r, c| {
            let i = (r * resolution + c) * 3;
            data[i..i + 3].copy_from_slice(&rgb);
        });
    }
    Ok(())
}

/// Topmost-entity label per pixel: 0 background, `i + 1` for object `i`,
/// `N + 1` for the agent.
pub fn rasterize_segmentation(
    scene: &SceneSpec,
    resolution: usize,
) -> Result<LabelGrid, GeometryError> {
    check_resolution(resolution)?;
    scene.validate()?;
    let mut grid = LabelGrid::new(resolution, resolution);
    for (i, entity) in scene.draw_order().enumerate() {
        let label = i as u32 + 1;
        let data = &mut grid.data;
        cover(entity, resolution, |r, c| data[r * resolution + c] = label);
    }
    Ok(grid)
}
