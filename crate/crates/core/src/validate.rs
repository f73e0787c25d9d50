//! Brute-force re-check of every scene generation constraint.
//!
//! Deliberately shares no code with the sampler beyond the geometric
//! primitives: distances are recomputed pairwise and uniqueness is counted
//! with nested scans.

use std::fmt;

use crate::env::goal_region_contains;
use crate::geometry::{entities_touch, ColorName, Entity, Point, SceneSpec, ShapeKind};
use crate::params::{TaskKind, TaskParams};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ObjectCount { expected: usize, found: usize },
    Agent(String),
    OutOfBounds { index: usize },
    PoolMembership { index: usize },
    TooClose { a: usize, b: usize },
    TouchesAgentSpawn { index: usize },
    WallMargin { index: usize },
    TargetCount { found: usize },
    NotSquare { index: usize },
    TargetInGoal,
    OddObjectCount { found: usize },
    NoUniqueProperty,
    MultipleUniqueProperties { found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ObjectCount { expected, found } => {
                write!(f, "object count: expected {expected}, found {found}")
            }
            Violation::Agent(msg) => write!(f, "agent: {msg}"),
            Violation::OutOfBounds { index } => write!(f, "object {index} out of bounds"),
            Violation::PoolMembership { index } => {
                write!(f, "object {index} has an attribute outside the pools")
            }
            Violation::TooClose { a, b } => {
                write!(f, "objects {a} and {b} closer than the minimum center distance")
            }
            Violation::TouchesAgentSpawn { index } => {
                write!(f, "object {index} touches the agent spawn")
            }
            Violation::WallMargin { index } => write!(f, "wall margin: object {index}"),
            Violation::TargetCount { found } => write!(f, "expected one target, found {found}"),
            Violation::NotSquare { index } => write!(f, "object {index} is not a square"),
            Violation::TargetInGoal => write!(f, "target starts in the goal region"),
            Violation::OddObjectCount { found } => {
                write!(f, "expected one object with a unique type, found {found}")
            }
            Violation::NoUniqueProperty => write!(f, "no unique property"),
            Violation::MultipleUniqueProperties { found } => {
                write!(f, "multiple unique properties ({found})")
            }
        }
    }
}

/// Checks `scene` against every generation rule for `params`.
pub fn validate_scene(scene: &SceneSpec, params: &TaskParams) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    let objs = &scene.objects;

    if objs.len() != params.n_objects {
        v.push(Violation::ObjectCount { expected: params.n_objects, found: objs.len() });
    }

    match (&scene.agent, params.kind.is_episodic()) {
        (Some(a), true) => {
            if a.pos != Point::CENTER {
                v.push(Violation::Agent("not at the spawn point".into()));
            }
            if a.shape != ShapeKind::Circle || a.color != ColorName::Red {
                v.push(Violation::Agent("not a red circle".into()));
            }
        }
        (None, true) => v.push(Violation::Agent("missing".into())),
        (Some(_), false) => v.push(Violation::Agent("present in a pretraining scene".into())),
        (None, false) => {}
    }

    for (i, o) in objs.iter().enumerate() {
        if o.validate().is_err() {
            v.push(Violation::OutOfBounds { index: i });
        }
        let target_like = matches!(params.kind, TaskKind::ObjectGoal | TaskKind::ObjectInteraction)
            && o.color == ColorName::Blue
            && o.shape == ShapeKind::Square;
        let in_pools = params.color_pool.contains(&o.color)
            && params.shape_pool.contains(&o.shape)
            && params.size_pool.contains(&o.size);
        if !in_pools && !target_like {
            v.push(Violation::PoolMembership { index: i });
        }
        if let Some(agent) = &scene.agent {
            if entities_touch(o, agent) {
                v.push(Violation::TouchesAgentSpawn { index: i });
            }
        }
        if params.wall_margin > 0 {
            let m = params.wall_margin;
            let hi = crate::geometry::SCALE - m;
            if o.pos.x < m || o.pos.y < m || o.pos.x > hi || o.pos.y > hi {
                v.push(Violation::WallMargin { index: i });
            }
        }
    }

    let min_sq = (params.min_center_distance as i64).pow(2);
    for a in 0..objs.len() {
        for b in a + 1..objs.len() {
            if objs[a].pos.dist_sq(objs[b].pos) < min_sq {
                v.push(Violation::TooClose { a, b });
            }
        }
    }

    match params.kind {
        TaskKind::ObjectGoal => {
            let found = count_where(objs, |o| {
                o.color == ColorName::Blue && o.shape == ShapeKind::Square
            });
            if found != 1 {
                v.push(Violation::TargetCount { found });
            }
        }
        TaskKind::ObjectInteraction => {
            for (i, o) in objs.iter().enumerate() {
                if o.shape != ShapeKind::Square {
                    v.push(Violation::NotSquare { index: i });
                }
            }
            let found = count_where(objs, |o| o.color == ColorName::Blue);
            if found != 1 {
                v.push(Violation::TargetCount { found });
            } else if objs
                .iter()
                .any(|o| o.color == ColorName::Blue && goal_region_contains(o.pos))
            {
                v.push(Violation::TargetInGoal);
            }
        }
        TaskKind::ObjectComparison => {
            let found = (0..objs.len())
                .filter(|&i| {
                    count_where(objs, |o| {
                        (o.shape, o.color, o.size) == (objs[i].shape, objs[i].color, objs[i].size)
                    }) == 1
                })
                .count();
            if found != 1 {
                v.push(Violation::OddObjectCount { found });
            }
        }
        TaskKind::PropertyComparison => match unique_property_holders(objs).len() {
            0 => v.push(Violation::NoUniqueProperty),
            1 => {}
            found => v.push(Violation::MultipleUniqueProperties { found }),
        },
        TaskKind::Pretraining => {}
    }

    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

fn count_where(objs: &[Entity], pred: impl Fn(&Entity) -> bool) -> usize {
    objs.iter().filter(|o| pred(o)).count()
}

/// One entry per attribute value held by exactly one object: the holder's
/// index.
fn unique_property_holders(objs: &[Entity]) -> Vec<usize> {
    let mut holders = Vec::new();
    for (i, o) in objs.iter().enumerate() {
        if count_where(objs, |p| p.color == o.color) == 1 {
            holders.push(i);
        }
        if count_where(objs, |p| p.shape == o.shape) == 1 {
            holders.push(i);
        }
        if count_where(objs, |p| p.size == o.size) == 1 {
            holders.push(i);
        }
    }
    holders
}
