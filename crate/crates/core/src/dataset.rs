//! Pretraining image dataset: per-scene PNGs, optional segmentation masks,
//! and JSON-lines metadata, with a manifest that makes runs resumable.
//!
//! Layout under the output directory:
//!
//! ```text
//! manifest.json
//! train/000000.png  train/000000_mask.png  ...  train/metadata.jsonl
//! val/000000.png    ...                         val/metadata.jsonl
//! ```
//!
//! Train scene `i` uses seed `base_seed + i`; val scene `j` uses
//! `base_seed + 2^32 + j`, so the splits never share a scene.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::env::GtState;
use crate::geometry::{ColorName, Entity, GeometryError, Point, SceneSpec, ShapeKind, Size};
use crate::params::{ParamsError, TaskKind, TaskParams};
use crate::render::{rasterize_scene, rasterize_segmentation, ImageError, OBS_RESOLUTION};
use crate::sampler::{sample_scene, SampleError};

/// Seed offset of the validation split.
pub const VAL_SEED_OFFSET: u64 = 1 << 32;
/// Scenes generated in parallel between manifest checkpoints.
const CHUNK: usize = 2048;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("existing manifest in {0} belongs to a different dataset spec")]
    SpecMismatch(PathBuf),
    #[error("manifest: {0}")]
    Manifest(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub n_train: usize,
    pub n_val: usize,
    pub params: TaskParams,
    pub resolution: usize,
    pub emit_masks: bool,
    pub base_seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_train: 1_000_000,
            n_val: 100_000,
            params: TaskParams::defaults(TaskKind::Pretraining),
            resolution: OBS_RESOLUTION,
            emit_masks: false,
            base_seed: 0,
        }
    }
}

impl DatasetSpec {
    /// SHA-256 (hex) over the canonical text of every field.
    pub fn digest(&self) -> String {
        let text = format!(
            "{}n_train = {}\nn_val = {}\nresolution = {}\nemit_masks = {}\nbase_seed = {}\n",
            self.params.to_config_string(),
            self.n_train,
            self.n_val,
            self.resolution,
            self.emit_masks,
            self.base_seed
        );
        hex(&Sha256::digest(text.as_bytes()))
    }

    pub fn seed(&self, split: Split, index: usize) -> u64 {
        match split {
            Split::Train => self.base_seed + index as u64,
            Split::Val => self.base_seed + VAL_SEED_OFFSET + index as u64,
        }
    }

    fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.n_train,
            Split::Val => self.n_val,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub const ALL: [Split; 2] = [Split::Train, Split::Val];

    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub color: ColorName,
    pub shape: ShapeKind,
    pub size: f64,
    pub x: f64,
    pub y: f64,
}

/// One `metadata.jsonl` line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub index: usize,
    pub seed: u64,
    pub objects: Vec<ObjectRecord>,
    /// Ground-truth rows `[color, shape, size index, x, y]`.
    pub gt: Vec<[f64; 5]>,
}

impl SceneRecord {
    pub fn new(index: usize, seed: u64, scene: &SceneSpec) -> Result<Self, DatasetError> {
        let objects = scene
            .objects
            .iter()
            .map(|e| {
                let (x, y) = e.pos.to_fraction();
                ObjectRecord { color: e.color, shape: e.shape, size: e.size.fraction(), x, y }
            })
            .collect();
        let gt = GtState::from_scene(scene)
            .map_err(|e| DatasetError::Manifest(e.to_string()))?
            .rows;
        Ok(Self { index, seed, objects, gt })
    }

    /// Rebuilds the scene this record was written from.
    pub fn to_scene(&self) -> Result<SceneSpec, DatasetError> {
        let objects = self
            .objects
            .iter()
            .map(|o| {
                Ok(Entity::new(o.shape, o.color, Size::from_fraction(o.size)?, Point::from_fraction(o.x, o.y)))
            })
            .collect::<Result<Vec<_>, GeometryError>>()?;
        Ok(SceneSpec { agent: None, objects })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub count: usize,
    pub completed: usize,
    pub first_item_hash: Option<String>,
    pub last_item_hash: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec_digest: String,
    pub base_seed: u64,
    pub resolution: usize,
    pub emit_masks: bool,
    pub complete: bool,
    pub train: SplitManifest,
    pub val: SplitManifest,
}

impl Manifest {
    fn fresh(spec: &DatasetSpec) -> Self {
        let split = |count| SplitManifest { count, completed: 0, first_item_hash: None, last_item_hash: None };
        Self {
            spec_digest: spec.digest(),
            base_seed: spec.base_seed,
            resolution: spec.resolution,
            emit_masks: spec.emit_masks,
            complete: false,
            train: split(spec.n_train),
            val: split(spec.n_val),
        }
    }

    fn split_mut(&mut self, split: Split) -> &mut SplitManifest {
        match split {
            Split::Train => &mut self.train,
            Split::Val => &mut self.val,
        }
    }

    pub fn read(dir: &Path) -> Result<Option<Self>, DatasetError> {
        let path = dir.join("manifest.json");
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| DatasetError::Manifest(e.to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(DatasetError::Io { path, source }),
        }
    }

    fn write(&self, dir: &Path) -> Result<(), DatasetError> {
        let path = dir.join("manifest.json");
        let tmp = dir.join("manifest.json.tmp");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|source| DatasetError::Io { path, source })
    }
}

/// Everything written for one scene.
pub struct Item {
    pub image_png: Vec<u8>,
    pub mask_png: Option<Vec<u8>>,
    pub metadata_line: String,
}

impl Item {
    /// SHA-256 (hex) over the image, mask and metadata bytes.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(&self.image_png);
        if let Some(mask) = &self.mask_png {
            h.update(mask);
        }
        h.update(self.metadata_line.as_bytes());
        hex(&h.finalize())
    }
}

pub fn generate_item(spec: &DatasetSpec, split: Split, index: usize) -> Result<Item, DatasetError> {
    let seed = spec.seed(split, index);
    let scene = sample_scene(&spec.params, seed)?;
    let image_png = rasterize_scene(&scene, spec.resolution)?.to_png()?;
    let mask_png = if spec.emit_masks {
        Some(rasterize_segmentation(&scene, spec.resolution)?.to_png()?)
    } else {
        None
    };
    let record = SceneRecord::new(index, seed, &scene)?;
    let metadata_line = serde_json::to_string(&record).expect("record serializes");
    Ok(Item { image_png, mask_png, metadata_line })
}

/// Writes (or resumes) the dataset in `dir` and returns the final manifest.
/// On a write failure the manifest is left recording how many scenes of each
/// split are complete, and the error is returned.
pub fn generate_dataset(spec: &DatasetSpec, dir: &Path) -> Result<Manifest, DatasetError> {
    spec.params.validate()?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = match Manifest::read(dir)? {
        Some(m) if m.spec_digest != spec.digest() => return Err(DatasetError::SpecMismatch(dir.into())),
        Some(m) => m,
        None => Manifest::fresh(spec),
    };
    for split in Split::ALL {
        let sub = dir.join(split.dir_name());
        fs::create_dir_all(&sub).map_err(io_err(&sub))?;
        let meta_path = sub.join("metadata.jsonl");
        let done = manifest.split_mut(split).completed;
        truncate_lines(&meta_path, done).map_err(io_err(&meta_path))?;
        let mut meta = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&meta_path)
            .map_err(io_err(&meta_path))?;
        let total = spec.count(split);
        let mut start = done;
        while start < total {
            let end = (start + CHUNK).min(total);
            let items = (start..end)
                .into_par_iter()
                .map(|i| generate_item(spec, split, i))
                .collect::<Result<Vec<_>, _>>()?;
            let written = write_chunk(&sub, start, &items, &mut meta);
            if let Err(e) = written {
                let _ = manifest.write(dir);
                return Err(e);
            }
            manifest.split_mut(split).completed = end;
            manifest.write(dir)?;
            start = end;
        }
        let hash_of = |i: usize| generate_item(spec, split, i).map(|item| item.content_hash());
        let m = manifest.split_mut(split);
        if total > 0 {
            m.first_item_hash = Some(hash_of(0)?);
            m.last_item_hash = Some(hash_of(total - 1)?);
        }
    }
    manifest.complete = true;
    manifest.write(dir)?;
    Ok(manifest)
}

pub fn image_name(index: usize) -> String {
    format!("{index:06}.png")
}

pub fn mask_name(index: usize) -> String {
    format!("{index:06}_mask.png")
}

fn write_chunk(sub: &Path, start: usize, items: &[Item], meta: &mut File) -> Result<(), DatasetError> {
    let mut lines = String::new();
    for (k, item) in items.iter().enumerate() {
        let i = start + k;
        let path = sub.join(image_name(i));
        fs::write(&path, &item.image_png).map_err(|source| DatasetError::Io { path, source })?;
        if let Some(mask) = &item.mask_png {
            let path = sub.join(mask_name(i));
            fs::write(&path, mask).map_err(|source| DatasetError::Io { path, source })?;
        }
        lines.push_str(&item.metadata_line);
        lines.push('\n');
    }
    meta.write_all(lines.as_bytes())
        .and_then(|_| meta.flush())
        .map_err(|source| DatasetError::Io { path: sub.join("metadata.jsonl"), source })
}

/// Keeps the first `keep` lines of `path` (if it exists).
fn truncate_lines(path: &Path, keep: usize) -> io::Result<()> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(e),
    };
    let mut len = 0u64;
    let mut reader = BufReader::new(file);
    let mut line = Vec::new();
    for _ in 0..keep {
        line.clear();
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 {
            break;
        }
        len += n as u64;
    }
    OpenOptions::new().write(true).open(path)?.set_len(len)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
