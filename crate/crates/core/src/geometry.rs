//! Entities, scene description, shape geometry and the touch predicate.
//!
//! Positions and sizes are fixed-point integers: the arena side is
//! [`SCALE`] units, so `0.05` is exactly 500 units and `0.15` is 1500. All
//! dynamics predicates (bounds, touch, minimum distance) are evaluated on
//! these integers and are therefore exact. Only rasterization uses floating
//! point, restricted to `+ - * /` on literal vertex tables.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shape_table;

/// Arena side length in fixed-point units.
pub const SCALE: i32 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid entity: {0}")]
    InvalidEntity(String),
    #[error("resolution {0} is below the minimum of 8 pixels")]
    Resolution(usize),
    #[error("unknown shape name {0:?}")]
    UnknownShape(String),
    #[error("unknown color name {0:?}")]
    UnknownColor(String),
    #[error("size {0} outside (0, 0.5]")]
    InvalidSize(f64),
}

macro_rules! named_enum {
    (
        $(#[$meta:meta])*
        pub enum $name:ident : $err:ident { $($variant:ident => $label:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(u8)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Stable integer code (the ground-truth index).
            #[inline]
            pub fn code(self) -> u8 {
                self as u8
            }

            pub fn from_code(code: u8) -> Option<Self> {
                Self::ALL.get(code as usize).copied()
            }

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = GeometryError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim() {
                    $($label => Ok($name::$variant),)+
                    other => Err(GeometryError::$err(other.to_string())),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.name())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

named_enum! {
    /// Sprite shapes, in ground-truth index order.
    pub enum ShapeKind : UnknownShape {
        Square => "square",
        Triangle => "triangle",
        Star4 => "star_4",
        Circle => "circle",
        Pentagon => "pentagon",
        Hexagon => "hexagon",
        Octagon => "octagon",
        Star5 => "star_5",
        Star6 => "star_6",
        Spoke4 => "spoke_4",
        Spoke5 => "spoke_5",
        Spoke6 => "spoke_6",
    }
}

named_enum! {
    /// Sprite colors, in ground-truth index order.
    pub enum ColorName : UnknownColor {
        Blue => "blue",
        Green => "green",
        Yellow => "yellow",
        Red => "red",
        Cyan => "cyan",
        Pink => "pink",
        Brown => "brown",
    }
}

impl ColorName {
    pub fn rgb(self) -> [u8; 3] {
        match self {
            ColorName::Blue => [0, 0, 255],
            ColorName::Green => [0, 200, 0],
            ColorName::Yellow => [255, 255, 0],
            ColorName::Red => [255, 0, 0],
            ColorName::Cyan => [0, 255, 255],
            ColorName::Pink => [255, 105, 180],
            ColorName::Brown => [139, 69, 19],
        }
    }
}

/// Side of an entity's bounding square, in arena units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Size(pub i32);

impl Size {
    pub const SMALL: Size = Size(1_500);
    pub const LARGE: Size = Size(2_200);
    /// Sizes with a ground-truth index, in index order.
    pub const CLASSES: [Size; 2] = [Size::SMALL, Size::LARGE];

    pub fn from_fraction(f: f64) -> Result<Self, GeometryError> {
        if !(f > 0.0 && f <= 0.5) {
            return Err(GeometryError::InvalidSize(f));
        }
        Ok(Size((f * SCALE as f64).round() as i32))
    }

    pub fn fraction(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    /// Ground-truth size index, if this is one of [`Size::CLASSES`].
    pub fn class_index(self) -> Option<u8> {
        Size::CLASSES.iter().position(|&s| s == self).map(|i| i as u8)
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fraction())
    }
}

/// Arena position in fixed-point units; y grows downward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const CENTER: Point = Point { x: SCALE / 2, y: SCALE / 2 };

    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn from_fraction(x: f64, y: f64) -> Self {
        Self {
            x: (x * SCALE as f64).round() as i32,
            y: (y * SCALE as f64).round() as i32,
        }
    }

    pub fn to_fraction(self) -> (f64, f64) {
        (self.x as f64 / SCALE as f64, self.y as f64 / SCALE as f64)
    }

    #[inline]
    pub fn dist_sq(self, other: Point) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Entity {
    pub shape: ShapeKind,
    pub color: ColorName,
    pub size: Size,
    pub pos: Point,
}

impl Entity {
    pub fn new(shape: ShapeKind, color: ColorName, size: Size, pos: Point) -> Self {
        Self { shape, color, size, pos }
    }

    /// The agent sprite: a red circle of the task object size.
    pub fn agent(pos: Point) -> Self {
        Self::new(ShapeKind::Circle, ColorName::Red, Size::SMALL, pos)
    }

    /// Closed range of center coordinates keeping the bounding box inside
    /// the arena. Empty (lo > hi) only for sizes above the arena side.
    #[inline]
    pub fn coord_bounds(size: Size) -> (i32, i32) {
        let lo = (size.0 + 1) / 2;
        (lo, SCALE - lo)
    }

    #[inline]
    pub fn in_bounds_at(&self, pos: Point) -> bool {
        let (lo, hi) = Self::coord_bounds(self.size);
        (lo..=hi).contains(&pos.x) && (lo..=hi).contains(&pos.y)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.size.0 <= 0 || self.size.0 > SCALE / 2 {
            return Err(GeometryError::InvalidEntity(format!(
                "size {} outside (0, 0.5]",
                self.size
            )));
        }
        if !self.in_bounds_at(self.pos) {
            let (x, y) = self.pos.to_fraction();
            return Err(GeometryError::InvalidEntity(format!(
                "{} {} of size {} at ({x}, {y}) leaves the arena",
                self.color, self.shape, self.size
            )));
        }
        Ok(())
    }
}

/// Touch predicate: center distance strictly below the mean of the sizes.
#[inline]
pub fn entities_touch(a: &Entity, b: &Entity) -> bool {
    touches_at(a.pos, a.size, b.pos, b.size)
}

/// [`entities_touch`] with explicit positions, used for tentative moves.
#[inline]
pub fn touches_at(pa: Point, sa: Size, pb: Point, sb: Size) -> bool {
    let reach = (sa.0 + sb.0) as i64;
    4 * pa.dist_sq(pb) < reach * reach
}

/// Everything that gets drawn: objects in paint order, then the agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SceneSpec {
    pub agent: Option<Entity>,
    pub objects: Vec<Entity>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if let Some(agent) = &self.agent {
            if agent.shape != ShapeKind::Circle || agent.color != ColorName::Red {
                return Err(GeometryError::InvalidEntity(
                    "agent must be a red circle".to_string(),
                ));
            }
            agent.validate()?;
        }
        self.objects.iter().try_for_each(Entity::validate)
    }

    /// Entities in paint order, agent last.
    pub fn draw_order(&self) -> impl Iterator<Item = &Entity> {
        self.objects.iter().chain(self.agent.iter())
    }
}

// ---------------------------------------------------------------------------
// Shape geometry in unit coordinates: the bounding square is [-1, 1]^2.

type Tri = [[f64; 2]; 3];
const MAX_TRIS: usize = 12;

#[derive(Clone, Copy, Debug)]
#[allow(clippy::large_enum_variant)]
pub(crate) enum UnitShape {
    Square,
    Circle,
    Fan { tris: [Tri; MAX_TRIS], len: usize },
}

impl UnitShape {
    fn fan(tris: &[Tri]) -> Self {
        let mut buf = [[[0.0; 2]; 3]; MAX_TRIS];
        buf[..tris.len()].copy_from_slice(tris);
        UnitShape::Fan { tris: buf, len: tris.len() }
    }

    /// Fan of triangles from the origin over consecutive polygon vertices.
    fn closed_fan(verts: &[[f64; 2]]) -> Self {
        let n = verts.len();
        let tris: Vec<Tri> = (0..n)
            .map(|i| [[0.0, 0.0], verts[i], verts[(i + 1) % n]])
            .collect();
        Self::fan(&tris)
    }

    fn spokes(rim: &[[f64; 2]]) -> Self {
        let tris: Vec<Tri> = rim
            .chunks_exact(2)
            .map(|pair| [[0.0, 0.0], pair[0], pair[1]])
            .collect();
        Self::fan(&tris)
    }

    fn build(kind: ShapeKind) -> Self {
        use shape_table::*;
        match kind {
            ShapeKind::Square => UnitShape::Square,
            ShapeKind::Circle => UnitShape::Circle,
            ShapeKind::Triangle => {
                let h = TRIANGLE_HALF_HEIGHT;
                Self::fan(&[[[0.0, -h], [1.0, h], [-1.0, h]]])
            }
            ShapeKind::Pentagon => Self::closed_fan(&PENTAGON),
            ShapeKind::Hexagon => Self::closed_fan(&HEXAGON),
            ShapeKind::Octagon => Self::closed_fan(&OCTAGON),
            ShapeKind::Star4 => Self::closed_fan(&STAR_4),
            ShapeKind::Star5 => Self::closed_fan(&STAR_5),
            ShapeKind::Star6 => Self::closed_fan(&STAR_6),
            ShapeKind::Spoke4 => Self::spokes(&SPOKE_4),
            ShapeKind::Spoke5 => Self::spokes(&SPOKE_5),
            ShapeKind::Spoke6 => Self::spokes(&SPOKE_6),
        }
    }

    pub(crate) fn get(kind: ShapeKind) -> &'static UnitShape {
        static TABLE: OnceLock<Vec<UnitShape>> = OnceLock::new();
        &TABLE.get_or_init(|| ShapeKind::ALL.iter().map(|&k| Self::build(k)).collect())
            [kind as usize]
    }

    /// Boundary-inclusive membership of a unit-coordinate point.
    #[inline]
    pub(crate) fn contains(&self, u: f64, v: f64) -> bool {
        match self {
            UnitShape::Square => u.abs() <= 1.0 && v.abs() <= 1.0,
            UnitShape::Circle => u * u + v * v <= 1.0,
            UnitShape::Fan { tris, len } => tris[..*len].iter().any(|t| in_triangle(t, u, v)),
        }
    }
}

/// Edge-test slack. Fan triangles share edges through the interior, and a
/// point on a shared edge must land in at least one of them despite rounding.
const EDGE_EPS: f64 = 1e-12;

#[inline]
fn in_triangle(t: &Tri, u: f64, v: f64) -> bool {
    let edge = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (v - a[1]) - (b[1] - a[1]) * (u - a[0]);
    let d0 = edge(t[0], t[1]);
    let d1 = edge(t[1], t[2]);
    let d2 = edge(t[2], t[0]);
    let neg = d0 < -EDGE_EPS || d1 < -EDGE_EPS || d2 < -EDGE_EPS;
    let pos = d0 > EDGE_EPS || d1 > EDGE_EPS || d2 > EDGE_EPS;
    !(neg && pos)
}

/// Visits every pixel (row, col) whose center lies inside a shape of
/// side `size` (arena fraction) centered at `center` (arena fraction).
#[inline]
pub(crate) fn for_each_covered_pixel(
    shape: ShapeKind,
    size: f64,
    center: (f64, f64),
    resolution: usize,
    mut f: impl FnMut(usize, usize),
) {
    let res = resolution as f64;
    let half = size * res / 2.0;
    let (cx, cy) = (center.0 * res, center.1 * res);
    let span = |c: f64| {
        let lo = (c - half - 0.5).ceil().max(0.0) as usize;
        let hi = (c + half - 0.5).floor().min(res - 1.0);
        (lo, hi)
    };
    let (c0, c1) = span(cx);
    let (r0, r1) = span(cy);
    if c1 < 0.0 || r1 < 0.0 {
        return;
    }
    let unit = UnitShape::get(shape);
    for r in r0..=r1 as usize {
        let v = (r as f64 + 0.5 - cy) / half;
        for c in c0..=c1 as usize {
            let u = (c as f64 + 0.5 - cx) / half;
            if unit.contains(u, v) {
                f(r, c);
            }
        }
    }
}

/// Row-major boolean pixel grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub resolution: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.resolution + col]
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Pixel-center coverage mask of a single shape.
pub fn shape_mask(
    shape: ShapeKind,
    size: f64,
    center: (f64, f64),
    resolution: usize,
) -> Result<Mask, GeometryError> {
    if resolution < 8 {
        return Err(GeometryError::Resolution(resolution));
    }
    let h = size / 2.0;
    let fits = |c: f64| c - h >= 0.0 && c + h <= 1.0;
    if !(size > 0.0 && size <= 0.5) || !fits(center.0) || !fits(center.1) {
        return Err(GeometryError::InvalidEntity(format!(
            "{shape} of size {size} at ({}, {}) leaves the arena",
            center.0, center.1
        )));
    }
    let mut bits = vec![false; resolution * resolution];
    for_each_covered_pixel(shape, size, center, resolution, |r, c| {
        bits[r * resolution + c] = true;
    });
    Ok(Mask { resolution, bits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(x: f64, y: f64, size: Size) -> Entity {
        Entity::new(ShapeKind::Square, ColorName::Blue, size, Point::from_fraction(x, y))
    }

    #[test]
    fn code_tables_are_stable() {
        assert_eq!(ShapeKind::ALL.len(), 12);
        assert_eq!(ColorName::ALL.len(), 7);
        assert_eq!(ShapeKind::Circle.code(), 3);
        assert_eq!(ShapeKind::Spoke6.code(), 11);
        assert_eq!(ColorName::Red.code(), 3);
        assert_eq!(ColorName::Brown.code(), 6);
        for (i, s) in ShapeKind::ALL.iter().enumerate() {
            assert_eq!(s.code() as usize, i);
            assert_eq!(s.name().parse::<ShapeKind>().unwrap(), *s);
        }
        assert!("hexagram".parse::<ShapeKind>().is_err());
    }

    #[test]
    fn vertex_tables_match_trigonometry() {
        use std::f64::consts::PI;
        let check = |table: &[[f64; 2]], angle: &dyn Fn(usize) -> (f64, f64)| {
            for (i, v) in table.iter().enumerate() {
                let (r, a) = angle(i);
                assert!((v[0] - r * a.cos()).abs() < 1e-12);
                assert!((v[1] - r * a.sin()).abs() < 1e-12);
            }
        };
        check(&shape_table::PENTAGON, &|i| (1.0, -PI / 2.0 + 2.0 * PI * i as f64 / 5.0));
        check(&shape_table::OCTAGON, &|i| (1.0, -PI / 2.0 + 2.0 * PI * i as f64 / 8.0));
        check(&shape_table::STAR_5, &|i| {
            (if i % 2 == 0 { 1.0 } else { 0.5 }, -PI / 2.0 + PI * i as f64 / 5.0)
        });
        check(&shape_table::SPOKE_4, &|i| {
            let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
            (1.0, -PI / 2.0 + 2.0 * PI * (i / 2) as f64 / 4.0 + sign * PI / 12.0)
        });
    }

    #[test]
    fn touch_boundary_is_exclusive() {
        let s = Size::SMALL;
        assert!(entities_touch(&obj(0.5, 0.5, s), &obj(0.64, 0.5, s)));
        assert!(!entities_touch(&obj(0.5, 0.5, s), &obj(0.65, 0.5, s)));
        let l = Size::LARGE;
        assert!(entities_touch(&obj(0.5, 0.5, l), &obj(0.65, 0.5, l)));
    }

    #[test]
    fn touch_is_symmetric_and_reflexive() {
        let a = obj(0.3, 0.4, Size::SMALL);
        let b = obj(0.4, 0.45, Size::LARGE);
        assert_eq!(entities_touch(&a, &b), entities_touch(&b, &a));
        assert!(entities_touch(&a, &a));
    }

    #[test]
    fn bounds_follow_half_size() {
        assert_eq!(Entity::coord_bounds(Size::SMALL), (750, 9_250));
        assert!(obj(0.075, 0.925, Size::SMALL).validate().is_ok());
        assert!(obj(0.07, 0.5, Size::SMALL).validate().is_err());
    }

    #[test]
    fn circle_mask_center_and_corner() {
        let m = shape_mask(ShapeKind::Circle, 0.15, (0.5, 0.5), 64).unwrap();
        assert!(m.get(32, 32));
        assert!(!m.get(0, 0));
    }

    #[test]
    fn out_of_arena_mask_is_rejected() {
        let err = shape_mask(ShapeKind::Square, 0.15, (0.05, 0.5), 64).unwrap_err();
        assert!(matches!(err, GeometryError::InvalidEntity(_)));
        assert_eq!(
            shape_mask(ShapeKind::Square, 0.15, (0.5, 0.5), 4).unwrap_err(),
            GeometryError::Resolution(4)
        );
    }

    #[test]
    fn triangle_points_up() {
        let m = shape_mask(ShapeKind::Triangle, 0.5, (0.5, 0.5), 64).unwrap();
        // Widest near the bottom of the box, narrow near the top.
        let row_width = |r: usize| (0..64).filter(|&c| m.get(r, c)).count();
        assert!(row_width(40) > row_width(24));
    }
}
