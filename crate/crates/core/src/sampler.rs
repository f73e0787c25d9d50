//! Seeded scene generation for every task kind.
//!
//! Generation happens in two phases. Attributes (shape, color, size and the
//! target's slot in the object list) come from the attribute stream;
//! positions come from one stream per object slot. The target is placed
//! first, so its position is uniform over the admissible region; other
//! objects are then placed in list order by rejection against everything
//! already placed. All rejections, attribute and position alike, count
//! against a single per-scene budget of [`MAX_ATTEMPTS`].
//!
//! Attribute draws only ever use indices into the pools, so two parameter
//! sets that differ by a value-for-value substitution of a pool (the color
//! and shape shifts) produce the same layout for the same seed.

use thiserror::Error;

use crate::geometry::{
    touches_at, ColorName, Entity, Point, SceneSpec, ShapeKind, Size, SCALE,
};
use crate::env::goal_region_contains;
use crate::params::{ParamsError, TaskKind, TaskParams};
use crate::rng::{streams, StreamRng};

/// Rejection budget per scene.
pub const MAX_ATTEMPTS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("scene generation failed after {attempts} attempts")]
    GenerationFailed { attempts: u32 },
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// A generated scene together with its target slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledScene {
    pub scene: SceneSpec,
    /// Index of the target in `scene.objects`; `None` for pretraining.
    pub target: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Attrs {
    shape: ShapeKind,
    color: ColorName,
    size: Size,
}

struct Budget {
    used: u32,
}

impl Budget {
    fn spend(&mut self) -> Result<(), SampleError> {
        self.used += 1;
        if self.used > MAX_ATTEMPTS {
            return Err(SampleError::GenerationFailed { attempts: self.used - 1 });
        }
        Ok(())
    }
}

/// Generates the scene for `(params, seed)`.
pub fn sample_scene(params: &TaskParams, seed: u64) -> Result<SceneSpec, SampleError> {
    sample_scene_with_target(params, seed).map(|s| s.scene)
}

/// [`sample_scene`], also reporting which object is the target.
pub fn sample_scene_with_target(params: &TaskParams, seed: u64) -> Result<SampledScene, SampleError> {
    params.validate()?;
    let mut budget = Budget { used: 0 };
    let mut rng = StreamRng::new(seed, streams::ATTRIBUTES);
    let (attrs, target) = match params.kind {
        TaskKind::ObjectGoal => single_target_attrs(params, &mut rng, &mut budget, |a| {
            (a.color, a.shape) == (ColorName::Blue, ShapeKind::Square)
        })?,
        TaskKind::ObjectInteraction => {
            single_target_attrs(params, &mut rng, &mut budget, |a| a.color == ColorName::Blue)?
        }
        TaskKind::ObjectComparison => odd_object_attrs(params, &mut rng, &mut budget)?,
        TaskKind::PropertyComparison => odd_property_attrs(params, &mut rng, &mut budget)?,
        TaskKind::Pretraining => {
            let attrs = (0..params.n_objects).map(|_| draw_attrs(params, &mut rng)).collect();
            (attrs, None)
        }
    };
    let positions = place(params, seed, target, &attrs, &mut budget)?;
    let objects = attrs
        .iter()
        .zip(positions)
        .map(|(a, pos)| Entity::new(a.shape, a.color, a.size, pos))
        .collect();
    let agent = params.kind.is_episodic().then(|| Entity::agent(Point::CENTER));
    Ok(SampledScene { scene: SceneSpec { agent, objects }, target })
}

fn draw_attrs(params: &TaskParams, rng: &mut StreamRng) -> Attrs {
    Attrs {
        shape: *rng.pick(&params.shape_pool),
        color: *rng.pick(&params.color_pool),
        size: *rng.pick(&params.size_pool),
    }
}

/// Goal and Interaction: one blue-square target in a random slot, every
/// other object redrawn until it is not target-like.
fn single_target_attrs(
    params: &TaskParams,
    rng: &mut StreamRng,
    budget: &mut Budget,
    target_like: impl Fn(&Attrs) -> bool,
) -> Result<(Vec<Attrs>, Option<usize>), SampleError> {
    let n = params.n_objects;
    let slot = rng.below(n as u64) as usize;
    let mut attrs = Vec::with_capacity(n);
    for i in 0..n {
        if i == slot {
            attrs.push(Attrs {
                shape: ShapeKind::Square,
                color: ColorName::Blue,
                size: *rng.pick(&params.size_pool),
            });
            continue;
        }
        loop {
            let a = draw_attrs(params, rng);
            if !target_like(&a) {
                attrs.push(a);
                break;
            }
            budget.spend()?;
        }
    }
    Ok((attrs, Some(slot)))
}

/// Distinct values of a pool, in first-occurrence order.
fn distinct<T: Copy + PartialEq>(pool: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for &v in pool {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Object Comparison: choose the odd type, then fill the other slots from
/// the remaining types until every one of them occurs at least twice.
fn odd_object_attrs(
    params: &TaskParams,
    rng: &mut StreamRng,
    budget: &mut Budget,
) -> Result<(Vec<Attrs>, Option<usize>), SampleError> {
    let n = params.n_objects;
    let mut types = Vec::new();
    for &shape in &distinct(&params.shape_pool) {
        for &color in &distinct(&params.color_pool) {
            for &size in &distinct(&params.size_pool) {
                types.push(Attrs { shape, color, size });
            }
        }
    }
    let odd = rng.below(types.len() as u64) as usize;
    let slot = rng.below(n as u64) as usize;
    let others: Vec<usize> = (0..types.len()).filter(|&t| t != odd).collect();
    let mut counts = vec![0usize; types.len()];
    let mut fill = vec![0usize; n];
    loop {
        counts.iter_mut().for_each(|c| *c = 0);
        for (i, f) in fill.iter_mut().enumerate() {
            if i != slot {
                *f = *rng.pick(&others);
                counts[*f] += 1;
            }
        }
        if counts.iter().all(|&c| c == 0 || c >= 2) {
            break;
        }
        budget.spend()?;
    }
    fill[slot] = odd;
    Ok((fill.into_iter().map(|t| types[t]).collect(), Some(slot)))
}

/// Property Comparison: choose the unique attribute and its value, fill the
/// rest, and keep the draw only if that value is the scene's sole unique
/// attribute value.
fn odd_property_attrs(
    params: &TaskParams,
    rng: &mut StreamRng,
    budget: &mut Budget,
) -> Result<(Vec<Attrs>, Option<usize>), SampleError> {
    let n = params.n_objects;
    let shapes = distinct(&params.shape_pool);
    let colors = distinct(&params.color_pool);
    let sizes = distinct(&params.size_pool);
    // Attributes that can carry a unique value: 0 = color, 1 = shape, 2 = size.
    let candidates: Vec<u8> = [(0u8, colors.len()), (1, shapes.len()), (2, sizes.len())]
        .into_iter()
        .filter(|&(_, len)| len > 1)
        .map(|(a, _)| a)
        .collect();
    let attribute = *rng.pick(&candidates);
    let slot = rng.below(n as u64) as usize;
    let (value, rest) = {
        let len = [colors.len(), shapes.len(), sizes.len()][attribute as usize];
        let v = rng.below(len as u64) as usize;
        (v, (0..len).filter(|&i| i != v).collect::<Vec<_>>())
    };
    loop {
        let attrs: Vec<Attrs> = (0..n)
            .map(|i| {
                let mut a = Attrs {
                    color: *rng.pick(&colors),
                    shape: *rng.pick(&shapes),
                    size: *rng.pick(&sizes),
                };
                let idx = if i == slot { value } else { *rng.pick(&rest) };
                match attribute {
                    0 => a.color = colors[idx],
                    1 => a.shape = shapes[idx],
                    _ => a.size = sizes[idx],
                }
                a
            })
            .collect();
        if unique_value_count(&attrs) == 1 {
            return Ok((attrs, Some(slot)));
        }
        budget.spend()?;
    }
}

/// Number of attribute values (over color, shape and size) held by exactly
/// one object.
fn unique_value_count(attrs: &[Attrs]) -> usize {
    fn singles<T: PartialEq>(vals: Vec<T>) -> usize {
        vals.iter().filter(|v| vals.iter().filter(|w| w == v).count() == 1).count()
    }
    singles(attrs.iter().map(|a| a.color).collect())
        + singles(attrs.iter().map(|a| a.shape).collect())
        + singles(attrs.iter().map(|a| a.size).collect())
}

/// Inclusive coordinate range for an object center under `params`.
pub fn placement_range(params: &TaskParams, size: Size) -> (i32, i32) {
    let (lo, hi) = Entity::coord_bounds(size);
    (lo.max(params.wall_margin), hi.min(SCALE - params.wall_margin))
}

fn place(
    params: &TaskParams,
    seed: u64,
    target: Option<usize>,
    attrs: &[Attrs],
    budget: &mut Budget,
) -> Result<Vec<Point>, SampleError> {
    let order: Vec<usize> = target
        .into_iter()
        .chain((0..attrs.len()).filter(|&i| Some(i) != target))
        .collect();
    let min_sq = (params.min_center_distance as i64).pow(2);
    let has_agent = params.kind.is_episodic();
    let mut placed: Vec<(usize, Point)> = Vec::with_capacity(attrs.len());
    for &i in &order {
        let a = attrs[i];
        let (lo, hi) = placement_range(params, a.size);
        if lo > hi {
            return Err(SampleError::GenerationFailed { attempts: budget.used });
        }
        let mut rng = StreamRng::new(seed, streams::POSITION_BASE + i as u64);
        loop {
            let p = Point::new(rng.range_inclusive(lo, hi), rng.range_inclusive(lo, hi));
            let clear_of_agent = !has_agent || !touches_at(p, a.size, Point::CENTER, Size::SMALL);
            let spaced = placed.iter().all(|&(_, q)| p.dist_sq(q) >= min_sq);
            let outside_goal = params.kind != TaskKind::ObjectInteraction
                || Some(i) != target
                || !goal_region_contains(p);
            if clear_of_agent && spaced && outside_goal {
                placed.push((i, p));
                break;
            }
            budget.spend()?;
        }
    }
    placed.sort_unstable_by_key(|&(i, _)| i);
    Ok(placed.into_iter().map(|(_, p)| p).collect())
}
