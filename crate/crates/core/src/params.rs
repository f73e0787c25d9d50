//! Task kinds, generation parameters, distribution shifts and the plain-text
//! parameter file format.
//!
//! The parameter file is one `key = value` pair per line; `#` starts a
//! comment. Keys: `kind`, `n_objects`, `colors`, `shapes`, `sizes`
//! (comma-separated lists), `min_center_distance`, `wall_margin` (arena
//! fractions), `max_steps`, `shift`. Omitted keys take the defaults for
//! `kind`, which must be present.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{ColorName, GeometryError, ShapeKind, Size, SCALE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("shift {shift} is not compatible with {kind}")]
    IncompatibleShift { shift: ShiftSpec, kind: TaskKind },
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskKind {
    ObjectGoal,
    ObjectInteraction,
    ObjectComparison,
    PropertyComparison,
    /// Scene generation only; never runs episodes.
    Pretraining,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::ObjectGoal,
        TaskKind::ObjectInteraction,
        TaskKind::ObjectComparison,
        TaskKind::PropertyComparison,
        TaskKind::Pretraining,
    ];
    pub const EPISODIC: [TaskKind; 4] = [
        TaskKind::ObjectGoal,
        TaskKind::ObjectInteraction,
        TaskKind::ObjectComparison,
        TaskKind::PropertyComparison,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::ObjectGoal => "object_goal",
            TaskKind::ObjectInteraction => "object_interaction",
            TaskKind::ObjectComparison => "object_comparison",
            TaskKind::PropertyComparison => "property_comparison",
            TaskKind::Pretraining => "pretraining",
        }
    }

    pub fn is_episodic(self) -> bool {
        self != TaskKind::Pretraining
    }

    /// Any contact with an object ends the episode.
    pub fn is_touch_terminating(self) -> bool {
        matches!(
            self,
            TaskKind::ObjectGoal | TaskKind::ObjectComparison | TaskKind::PropertyComparison
        )
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, TaskKind::ObjectComparison | TaskKind::PropertyComparison)
    }

    pub fn default_max_steps(self) -> u32 {
        match self {
            TaskKind::ObjectInteraction => 200,
            TaskKind::Pretraining => 0,
            _ => 100,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = ParamsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| ParamsError::Invalid(format!("unknown task {s:?}")))
    }
}

/// Controlled distribution shift relative to the in-distribution settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShiftSpec {
    /// Distractor count for Goal/Interaction, object count for Comparisons.
    UnseenCount(usize),
    /// Step along the fixed color progression; 0 is in-distribution.
    UnseenColors(u8),
    /// Step along the fixed shape progression (Comparisons); 0 is in-distribution.
    UnseenShapes(u8),
    /// Four colors, three shapes, two sizes (Comparisons).
    Stress,
}

use ColorName::{Blue, Brown, Cyan, Green, Pink, Red, Yellow};
use ShapeKind::{Spoke4, Square, Star4, Star5, Triangle};

const SINGLE_TARGET_COLORS: [[ColorName; 4]; 4] = [
    [Blue, Green, Yellow, Red],
    [Blue, Green, Yellow, Pink],
    [Blue, Green, Brown, Pink],
    [Blue, Cyan, Brown, Pink],
];
const COMPARISON_COLORS: [[ColorName; 2]; 3] = [[Blue, Green], [Blue, Pink], [Cyan, Pink]];
const COMPARISON_SHAPES: [[ShapeKind; 2]; 3] = [[Square, Triangle], [Star5, Triangle], [Star5, Spoke4]];
const STRESS_COLORS: [ColorName; 4] = [Blue, Green, Yellow, Red];
const STRESS_SHAPES: [ShapeKind; 3] = [Square, Triangle, Star4];

impl ShiftSpec {
    /// Column label in sweep tables, with `(in)` marking the
    /// in-distribution setting of `kind`.
    pub fn label(self, kind: TaskKind) -> String {
        let in_dist = self.is_identity_for(kind);
        let base = match self {
            ShiftSpec::UnseenCount(n) => n.to_string(),
            ShiftSpec::UnseenColors(l) | ShiftSpec::UnseenShapes(l) => l.to_string(),
            ShiftSpec::Stress => "stress".to_string(),
        };
        if in_dist {
            format!("{base}(in)")
        } else {
            base
        }
    }

    pub fn is_identity_for(self, kind: TaskKind) -> bool {
        match self {
            ShiftSpec::UnseenCount(n) => Some(n) == in_distribution_count(kind),
            ShiftSpec::UnseenColors(l) | ShiftSpec::UnseenShapes(l) => l == 0,
            ShiftSpec::Stress => false,
        }
    }

    /// The in-distribution member of this shift's family, if it has one.
    pub fn family_identity(self, kind: TaskKind) -> Option<ShiftSpec> {
        match self {
            ShiftSpec::UnseenCount(_) => in_distribution_count(kind).map(ShiftSpec::UnseenCount),
            ShiftSpec::UnseenColors(_) => Some(ShiftSpec::UnseenColors(0)),
            ShiftSpec::UnseenShapes(_) => Some(ShiftSpec::UnseenShapes(0)),
            ShiftSpec::Stress => None,
        }
    }

    pub fn family_name(self) -> &'static str {
        match self {
            ShiftSpec::UnseenCount(_) => "count",
            ShiftSpec::UnseenColors(_) => "colors",
            ShiftSpec::UnseenShapes(_) => "shapes",
            ShiftSpec::Stress => "stress",
        }
    }
}

impl fmt::Display for ShiftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShiftSpec::UnseenCount(n) => write!(f, "count:{n}"),
            ShiftSpec::UnseenColors(l) => write!(f, "colors:{l}"),
            ShiftSpec::UnseenShapes(l) => write!(f, "shapes:{l}"),
            ShiftSpec::Stress => f.write_str("stress"),
        }
    }
}

impl FromStr for ShiftSpec {
    type Err = ParamsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ParamsError::Invalid(format!("bad shift {s:?}"));
        if s == "stress" {
            return Ok(ShiftSpec::Stress);
        }
        let (tag, value) = s.split_once(':').ok_or_else(bad)?;
        match tag.trim() {
            "count" => Ok(ShiftSpec::UnseenCount(value.trim().parse().map_err(|_| bad())?)),
            "colors" => Ok(ShiftSpec::UnseenColors(value.trim().parse().map_err(|_| bad())?)),
            "shapes" => Ok(ShiftSpec::UnseenShapes(value.trim().parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

/// In-distribution value of the `UnseenCount` payload.
fn in_distribution_count(kind: TaskKind) -> Option<usize> {
    match kind {
        TaskKind::ObjectGoal => Some(3),
        TaskKind::ObjectInteraction => Some(2),
        TaskKind::ObjectComparison | TaskKind::PropertyComparison => Some(4),
        TaskKind::Pretraining => None,
    }
}

/// Scene generation and episode parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaskParams {
    pub kind: TaskKind,
    pub n_objects: usize,
    pub color_pool: Vec<ColorName>,
    pub shape_pool: Vec<ShapeKind>,
    pub size_pool: Vec<Size>,
    /// Minimum pairwise center distance, arena units.
    pub min_center_distance: i32,
    /// Minimum center-to-wall distance, arena units (Interaction only).
    pub wall_margin: i32,
    pub max_steps: u32,
    pub shift: Option<ShiftSpec>,
}

impl TaskParams {
    /// In-distribution settings for `kind`.
    pub fn defaults(kind: TaskKind) -> Self {
        let (n_objects, colors, shapes, sizes): (usize, &[ColorName], &[ShapeKind], &[Size]) =
            match kind {
                TaskKind::ObjectGoal => {
                    (4, &SINGLE_TARGET_COLORS[0], &[Square, Triangle, Star4], &[Size::SMALL])
                }
                TaskKind::ObjectInteraction => {
                    (3, &SINGLE_TARGET_COLORS[0], &[Square], &[Size::SMALL])
                }
                TaskKind::ObjectComparison | TaskKind::PropertyComparison => {
                    (4, &COMPARISON_COLORS[0], &COMPARISON_SHAPES[0], &[Size::SMALL])
                }
                TaskKind::Pretraining => (
                    5,
                    &SINGLE_TARGET_COLORS[0],
                    &[Square, Triangle, Star4, ShapeKind::Circle],
                    &Size::CLASSES,
                ),
            };
        Self {
            kind,
            n_objects,
            color_pool: colors.to_vec(),
            shape_pool: shapes.to_vec(),
            size_pool: sizes.to_vec(),
            min_center_distance: 1_500,
            wall_margin: if kind == TaskKind::ObjectInteraction { 1_500 } else { 0 },
            max_steps: kind.default_max_steps(),
            shift: None,
        }
    }

    /// Structural checks that do not require sampling.
    pub fn validate(&self) -> Result<(), ParamsError> {
        let invalid = |m: &str| Err(ParamsError::Invalid(m.to_string()));
        if self.color_pool.is_empty() || self.shape_pool.is_empty() || self.size_pool.is_empty() {
            return invalid("pools must be non-empty");
        }
        if self.n_objects == 0 {
            return invalid("n_objects must be at least 1");
        }
        if self.n_objects > 255 {
            return invalid("n_objects must fit an 8-bit label");
        }
        if self.size_pool.iter().any(|s| s.0 <= 0 || s.0 > SCALE / 2) {
            return invalid("sizes must lie in (0, 0.5]");
        }
        if self.min_center_distance < 0 || self.wall_margin < 0 {
            return invalid("distances must be non-negative");
        }
        match self.kind {
            TaskKind::ObjectGoal => {
                if !self.color_pool.contains(&Blue) || !self.shape_pool.contains(&Square) {
                    return invalid("object_goal pools must contain the blue square target");
                }
                let has_distractor_type = self
                    .color_pool
                    .iter()
                    .any(|&c| self.shape_pool.iter().any(|&s| (c, s) != (Blue, Square)));
                if self.n_objects > 1 && !has_distractor_type {
                    return invalid("object_goal pools admit no distractor type");
                }
            }
            TaskKind::ObjectInteraction => {
                if self.shape_pool != [Square] {
                    return invalid("object_interaction objects are all squares");
                }
                if !self.color_pool.contains(&Blue) {
                    return invalid("object_interaction color pool must contain blue");
                }
                if self.n_objects > 1 && self.color_pool.iter().all(|&c| c == Blue) {
                    return invalid("object_interaction needs a non-blue distractor color");
                }
            }
            TaskKind::ObjectComparison | TaskKind::PropertyComparison => {
                if self.n_objects < 3 {
                    return invalid("comparison tasks need at least 3 objects");
                }
                let distinct = |n: usize| n > 1;
                let varied = [
                    distinct(dedup_len(&self.color_pool)),
                    distinct(dedup_len(&self.shape_pool)),
                    distinct(dedup_len(&self.size_pool)),
                ];
                if !varied.iter().any(|&v| v) {
                    return invalid("comparison tasks need at least one attribute with two values");
                }
            }
            TaskKind::Pretraining => {}
        }
        if self.kind.is_episodic() && self.max_steps == 0 {
            return invalid("max_steps must be positive");
        }
        Ok(())
    }

    /// 64-bit digest of the canonical parameter-file text.
    pub fn digest(&self) -> u64 {
        let hash = Sha256::digest(self.to_config_string().as_bytes());
        u64::from_le_bytes(hash[..8].try_into().expect("8 bytes"))
    }

    pub fn to_config_string(&self) -> String {
        fn list<T: fmt::Display>(xs: &[T]) -> String {
            xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
        }
        let frac = |u: i32| u as f64 / SCALE as f64;
        let mut s = String::new();
        s.push_str(&format!("kind = {}\n", self.kind));
        s.push_str(&format!("n_objects = {}\n", self.n_objects));
        s.push_str(&format!("colors = {}\n", list(&self.color_pool)));
        s.push_str(&format!("shapes = {}\n", list(&self.shape_pool)));
        s.push_str(&format!("sizes = {}\n", list(&self.size_pool)));
        s.push_str(&format!("min_center_distance = {}\n", frac(self.min_center_distance)));
        s.push_str(&format!("wall_margin = {}\n", frac(self.wall_margin)));
        s.push_str(&format!("max_steps = {}\n", self.max_steps));
        match self.shift {
            Some(shift) => s.push_str(&format!("shift = {shift}\n")),
            None => s.push_str("shift = none\n"),
        }
        s
    }

    pub fn from_config_str(text: &str) -> Result<Self, ParamsError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ParamsError::Parse {
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            if entries.insert(k.trim().to_string(), (i + 1, v.trim().to_string())).is_some() {
                return Err(ParamsError::Parse { line: i + 1, msg: format!("duplicate key {}", k.trim()) });
            }
        }
        let (kind_line, kind) = entries
            .remove("kind")
            .ok_or(ParamsError::Parse { line: 0, msg: "missing `kind`".into() })?;
        let kind: TaskKind = kind
            .parse()
            .map_err(|e: ParamsError| ParamsError::Parse { line: kind_line, msg: e.to_string() })?;
        let mut p = TaskParams::defaults(kind);
        for (key, (line, value)) in entries {
            let err = |msg: String| ParamsError::Parse { line, msg };
            let fraction = |v: &str| -> Result<i32, ParamsError> {
                let f: f64 = v.parse().map_err(|_| err(format!("bad number {v:?}")))?;
                Ok((f * SCALE as f64).round() as i32)
            };
            match key.as_str() {
                "n_objects" => {
                    p.n_objects = value.parse().map_err(|_| err(format!("bad count {value:?}")))?
                }
                "colors" => p.color_pool = parse_list(&value).map_err(|e| err(e.to_string()))?,
                "shapes" => p.shape_pool = parse_list(&value).map_err(|e| err(e.to_string()))?,
                "sizes" => {
                    p.size_pool = value
                        .split(',')
                        .map(|v| {
                            let f: f64 =
                                v.trim().parse().map_err(|_| err(format!("bad size {v:?}")))?;
                            Size::from_fraction(f).map_err(|e| err(e.to_string()))
                        })
                        .collect::<Result<_, _>>()?
                }
                "min_center_distance" => p.min_center_distance = fraction(&value)?,
                "wall_margin" => p.wall_margin = fraction(&value)?,
                "max_steps" => {
                    p.max_steps = value.parse().map_err(|_| err(format!("bad step count {value:?}")))?
                }
                "shift" => {
                    p.shift = match value.as_str() {
                        "none" => None,
                        v => Some(v.parse().map_err(|e: ParamsError| err(e.to_string()))?),
                    }
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        Ok(p)
    }
}

fn parse_list<T: FromStr<Err = GeometryError>>(s: &str) -> Result<Vec<T>, GeometryError> {
    s.split(',').map(|v| v.trim().parse()).collect()
}

fn dedup_len<T: PartialEq>(xs: &[T]) -> usize {
    xs.iter().enumerate().filter(|(i, x)| !xs[..*i].contains(x)).count()
}

/// Applies a distribution shift. The shift tag is recorded on the result
/// unless the shift is the identity for these parameters.
pub fn apply_shift(params: &TaskParams, shift: ShiftSpec) -> Result<TaskParams, ParamsError> {
    let kind = params.kind;
    let incompatible = || Err(ParamsError::IncompatibleShift { shift, kind });
    let mut out = params.clone();
    match (shift, kind) {
        (_, TaskKind::Pretraining) => return incompatible(),
        (ShiftSpec::UnseenCount(n), TaskKind::ObjectGoal | TaskKind::ObjectInteraction) => {
            out.n_objects = n + 1;
        }
        (ShiftSpec::UnseenCount(n), _) => {
            if n < 3 {
                return incompatible();
            }
            out.n_objects = n;
        }
        (ShiftSpec::UnseenColors(l), TaskKind::ObjectGoal | TaskKind::ObjectInteraction) => {
            match SINGLE_TARGET_COLORS.get(l as usize) {
                Some(pool) => out.color_pool = pool.to_vec(),
                None => return incompatible(),
            }
        }
        (ShiftSpec::UnseenColors(l), _) => match COMPARISON_COLORS.get(l as usize) {
            Some(pool) => out.color_pool = pool.to_vec(),
            None => return incompatible(),
        },
        (ShiftSpec::UnseenShapes(l), k) if k.is_comparison() => {
            match COMPARISON_SHAPES.get(l as usize) {
                Some(pool) => out.shape_pool = pool.to_vec(),
                None => return incompatible(),
            }
        }
        (ShiftSpec::Stress, k) if k.is_comparison() => {
            out.color_pool = STRESS_COLORS.to_vec();
            out.shape_pool = STRESS_SHAPES.to_vec();
            out.size_pool = Size::CLASSES.to_vec();
        }
        _ => return incompatible(),
    }
    if out == *params {
        return Ok(out);
    }
    out.shift = if shift.is_identity_for(kind) { None } else { Some(shift) };
    Ok(out)
}
