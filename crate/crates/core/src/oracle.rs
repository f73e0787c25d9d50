//! Ground-truth reference agents.
//!
//! Both planners run breadth-first search over exactly the states the
//! environment can reach, using the environment's own transition kernels,
//! so a plan reported solvable replays to success step for step. Actions
//! expand in code order (Up, Down, Left, Right) and plans never exceed the
//! step budget.

use std::collections::VecDeque;

use thiserror::Error;

use crate::env::{
    goal_region_contains, push_move, touch_move, Action, GtState, PushMove, TouchMove, MOVE_STEP,
};
use crate::geometry::{ColorName, Entity, Point, SceneSpec, ShapeKind};
use crate::params::TaskKind;
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("malformed scene: {0}")]
    MalformedScene(String),
    #[error("no target rule for task {0}")]
    Unsupported(TaskKind),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<Action>,
    pub solvable: bool,
    pub expanded_nodes: usize,
}

/// Index (into the scene's objects) of the task target, read off the
/// ground-truth matrix with equality tests only.
pub fn identify_target(gt: &GtState, kind: TaskKind) -> Result<usize, OracleError> {
    let rows = gt.object_rows();
    let code = |row: &[f64; 5], col: usize| row[col] as i64;
    let candidates: Vec<usize> = match kind {
        TaskKind::ObjectGoal => (0..rows.len())
            .filter(|&i| {
                code(&rows[i], 0) == ColorName::Blue.code() as i64
                    && code(&rows[i], 1) == ShapeKind::Square.code() as i64
            })
            .collect(),
        TaskKind::ObjectComparison => (0..rows.len())
            .filter(|&i| {
                let same = |j: &usize| (0..3).all(|c| code(&rows[*j], c) == code(&rows[i], c));
                (0..rows.len()).filter(same).count() == 1
            })
            .collect(),
        TaskKind::PropertyComparison => (0..rows.len())
            .flat_map(|i| {
                (0..3).filter_map(move |c| {
                    let n = (0..rows.len()).filter(|&j| code(&rows[j], c) == code(&rows[i], c)).count();
                    (n == 1).then_some(i)
                })
            })
            .collect(),
        other => return Err(OracleError::Unsupported(other)),
    };
    match candidates.as_slice() {
        [i] => Ok(*i),
        [] => Err(OracleError::MalformedScene("no target candidate".into())),
        many => Err(OracleError::MalformedScene(format!("{} target candidates", many.len()))),
    }
}

/// Uniform action from the policy stream.
pub fn random_action(rng: &mut StreamRng) -> Action {
    Action::ALL[rng.below(4) as usize]
}

/// Sorted coordinates an entity can occupy along one axis.
struct Axis {
    coords: Vec<i32>,
}

impl Axis {
    /// Closure of `start` under clamped moves of one step (agent motion).
    fn clamped(start: i32, lo: i32, hi: i32) -> Self {
        let mut coords = vec![start];
        let mut frontier = vec![start];
        while let Some(c) = frontier.pop() {
            for n in [(c - MOVE_STEP).clamp(lo, hi), (c + MOVE_STEP).clamp(lo, hi)] {
                if !coords.contains(&n) {
                    coords.push(n);
                    frontier.push(n);
                }
            }
        }
        coords.sort_unstable();
        Self { coords }
    }

    /// `start + k * step` within `[lo, hi]` (pushed-object motion).
    fn strided(start: i32, lo: i32, hi: i32) -> Self {
        let first = start - (start - lo).div_euclid(MOVE_STEP) * MOVE_STEP;
        let coords = (0..).map(|k| first + k * MOVE_STEP).take_while(|&c| c <= hi).collect();
        Self { coords }
    }

    #[inline]
    fn index(&self, c: i32) -> usize {
        self.coords.binary_search(&c).expect("coordinate on the axis")
    }

    fn len(&self) -> usize {
        self.coords.len()
    }
}

struct Search {
    parent: Vec<u32>,
    action: Vec<u8>,
    depth: Vec<u16>,
}

const UNSEEN: u32 = u32::MAX;

impl Search {
    fn new(n: usize, start: usize) -> Self {
        let mut s = Self { parent: vec![UNSEEN; n], action: vec![0; n], depth: vec![0; n] };
        s.parent[start] = start as u32;
        s
    }

    #[inline]
    fn visit(&mut self, node: usize, from: usize, a: Action) -> bool {
        if self.parent[node] != UNSEEN {
            return false;
        }
        self.parent[node] = from as u32;
        self.action[node] = a.code();
        self.depth[node] = self.depth[from] + 1;
        true
    }

    fn path_to(&self, mut node: usize, last: Action) -> Vec<Action> {
        let mut actions = vec![last];
        while self.parent[node] as usize != node {
            actions.push(Action::ALL[self.action[node] as usize]);
            node = self.parent[node] as usize;
        }
        actions.reverse();
        actions
    }
}

fn scene_agent(scene: &SceneSpec) -> Result<Entity, OracleError> {
    scene.agent.ok_or_else(|| OracleError::MalformedScene("scene has no agent".into()))
}

/// Shortest action sequence that makes the agent touch `target` without
/// first touching any other object, within [`TaskKind::ObjectGoal`]'s step
/// budget.
pub fn plan_reach(scene: &SceneSpec, target: usize) -> Result<Plan, OracleError> {
    plan_reach_within(scene, target, TaskKind::ObjectGoal.default_max_steps())
}

pub fn plan_reach_within(scene: &SceneSpec, target: usize, budget: u32) -> Result<Plan, OracleError> {
    let agent = scene_agent(scene)?;
    if target >= scene.objects.len() {
        return Err(OracleError::MalformedScene(format!("target {target} out of range")));
    }
    let (lo, hi) = Entity::coord_bounds(agent.size);
    let xs = Axis::clamped(agent.pos.x, lo, hi);
    let ys = Axis::clamped(agent.pos.y, lo, hi);
    let node = |p: Point| xs.index(p.x) * ys.len() + ys.index(p.y);
    let start = node(agent.pos);
    let mut search = Search::new(xs.len() * ys.len(), start);
    let mut queue = VecDeque::from([start]);
    let mut expanded = 0;
    let mut probe = agent;
    while let Some(cur) = queue.pop_front() {
        expanded += 1;
        if search.depth[cur] as u32 >= budget {
            continue;
        }
        probe.pos = Point::new(xs.coords[cur / ys.len()], ys.coords[cur % ys.len()]);
        for a in Action::ALL {
            match touch_move(&probe, &scene.objects, target, a) {
                TouchMove::Target(_) => {
                    return Ok(Plan {
                        actions: search.path_to(cur, a),
                        solvable: true,
                        expanded_nodes: expanded,
                    })
                }
                TouchMove::Other(..) => {}
                TouchMove::Free(p) => {
                    let next = node(p);
                    if search.visit(next, cur, a) {
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    Ok(Plan { actions: vec![], solvable: false, expanded_nodes: expanded })
}

/// Shortest push sequence bringing the blue target into the goal region,
/// within [`TaskKind::ObjectInteraction`]'s step budget. Distractors are
/// treated as immovable: moves that would push one are never taken.
pub fn plan_push(scene: &SceneSpec) -> Result<Plan, OracleError> {
    plan_push_within(scene, TaskKind::ObjectInteraction.default_max_steps())
}

pub fn plan_push_within(scene: &SceneSpec, budget: u32) -> Result<Plan, OracleError> {
    let agent = scene_agent(scene)?;
    let blue: Vec<usize> = (0..scene.objects.len())
        .filter(|&i| scene.objects[i].color == ColorName::Blue)
        .collect();
    let &[target] = blue.as_slice() else {
        return Err(OracleError::MalformedScene(format!("{} blue objects", blue.len())));
    };
    let t0 = scene.objects[target];
    let (alo, ahi) = Entity::coord_bounds(agent.size);
    let (tlo, thi) = Entity::coord_bounds(t0.size);
    let (axs, ays) = (Axis::clamped(agent.pos.x, alo, ahi), Axis::clamped(agent.pos.y, alo, ahi));
    let (txs, tys) = (Axis::strided(t0.pos.x, tlo, thi), Axis::strided(t0.pos.y, tlo, thi));
    let dims = [axs.len(), ays.len(), txs.len(), tys.len()];
    let node = |a: Point, t: Point| {
        ((axs.index(a.x) * dims[1] + ays.index(a.y)) * dims[2] + txs.index(t.x)) * dims[3]
            + tys.index(t.y)
    };
    let unpack = |mut n: usize| {
        let ty = n % dims[3];
        n /= dims[3];
        let tx = n % dims[2];
        n /= dims[2];
        let ay = n % dims[1];
        let ax = n / dims[1];
        (
            Point::new(axs.coords[ax], ays.coords[ay]),
            Point::new(txs.coords[tx], tys.coords[ty]),
        )
    };
    let start = node(agent.pos, t0.pos);
    let mut search = Search::new(dims.iter().product(), start);
    let mut queue = VecDeque::from([start]);
    let mut expanded = 0;
    let mut objects = scene.objects.clone();
    let mut probe = agent;
    while let Some(cur) = queue.pop_front() {
        expanded += 1;
        if search.depth[cur] as u32 >= budget {
            continue;
        }
        let (a_pos, t_pos) = unpack(cur);
        probe.pos = a_pos;
        objects[target].pos = t_pos;
        for a in Action::ALL {
            let next = match push_move(&probe, &objects, a) {
                PushMove::Blocked => continue,
                PushMove::Free(p) => node(p, t_pos),
                PushMove::Push { object, .. } if object != target => continue,
                PushMove::Push { agent: p, to, .. } => {
                    if goal_region_contains(to) {
                        return Ok(Plan {
                            actions: search.path_to(cur, a),
                            solvable: true,
                            expanded_nodes: expanded,
                        });
                    }
                    node(p, to)
                }
            };
            if search.visit(next, cur, a) {
                queue.push_back(next);
            }
        }
    }
    Ok(Plan { actions: vec![], solvable: false, expanded_nodes: expanded })
}
