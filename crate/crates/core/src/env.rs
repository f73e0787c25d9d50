//! Episode dynamics: reset, step, reward, timeout, ground-truth state and
//! batched stepping.
//!
//! The agent moves [`MOVE_STEP`] per action, clamped to the arena. In the
//! touch-terminating tasks any contact with an object ends the episode,
//! rewarded only when the contacted object is the target. In Object
//! Interaction a contacted object is pushed one step along with the agent;
//! the whole move is blocked when two objects are contacted or the pushed
//! object would hit another object or a wall.

use thiserror::Error;

use crate::geometry::{touches_at, Entity, GeometryError, Point, SceneSpec, Size, SCALE};
use crate::params::{TaskKind, TaskParams};
use crate::render::{rasterize_scene_into, RgbImage, OBS_RESOLUTION};
use crate::sampler::{sample_scene_with_target, SampleError};

/// Agent displacement per action, arena units (0.05).
pub const MOVE_STEP: i32 = 500;
/// Side of the bottom-left goal square, arena units (0.2).
pub const GOAL_SIDE: i32 = 2_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("task {0} does not run episodes")]
    UnsupportedTask(TaskKind),
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("batch length mismatch: {states} states, {actions} actions")]
    LengthMismatch { states: usize, actions: usize },
    #[error("size {0} has no ground-truth index")]
    UnindexedSize(Size),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Action {
    /// Expansion order used by the planners.
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Option<Self> {
        usize::try_from(code).ok().and_then(|c| Self::ALL.get(c).copied())
    }

    /// Displacement in arena units; up is toward row 0.
    #[inline]
    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Up => (0, -MOVE_STEP),
            Action::Down => (0, MOVE_STEP),
            Action::Left => (-MOVE_STEP, 0),
            Action::Right => (MOVE_STEP, 0),
        }
    }
}

/// True iff a center position lies strictly inside the bottom-left goal
/// square.
#[inline]
pub fn goal_region_contains(p: Point) -> bool {
    p.x < GOAL_SIDE && p.y > SCALE - GOAL_SIDE
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EnvState {
    pub kind: TaskKind,
    pub scene: SceneSpec,
    pub target_index: Option<usize>,
    pub step_count: u32,
    pub max_steps: u32,
    pub terminal: bool,
    pub success: bool,
    pub timeout: bool,
}

impl EnvState {
    pub fn agent(&self) -> &Entity {
        self.scene.agent.as_ref().expect("episodic scenes have an agent")
    }

    /// Advances the state without rendering.
    pub fn step_state(&mut self, action: Action) -> Result<Transition, EnvError> {
        if self.terminal {
            return Err(EnvError::EpisodeFinished);
        }
        let agent = *self.agent();
        let mut t = Transition::default();
        if self.kind.is_touch_terminating() {
            let target = self.target_index.expect("touch tasks have a target");
            match touch_move(&agent, &self.scene.objects, target, action) {
                TouchMove::Free(p) => self.set_agent(p),
                TouchMove::Target(p) => {
                    self.set_agent(p);
                    t.touched_index = Some(target);
                    t.success = true;
                }
                TouchMove::Other(p, i) => {
                    self.set_agent(p);
                    t.touched_index = Some(i);
                    self.terminal = true;
                }
            }
        } else {
            match push_move(&agent, &self.scene.objects, action) {
                PushMove::Free(p) => self.set_agent(p),
                PushMove::Blocked => {}
                PushMove::Push { agent, object, to } => {
                    self.set_agent(agent);
                    self.scene.objects[object].pos = to;
                    t.touched_index = Some(object);
                    if Some(object) == self.target_index && goal_region_contains(to) {
                        t.success = true;
                    }
                }
            }
        }
        self.step_count += 1;
        if t.success {
            self.success = true;
            self.terminal = true;
            t.reward = 1.0;
        } else if !self.terminal && self.step_count >= self.max_steps {
            self.terminal = true;
            self.timeout = true;
            t.timeout = true;
        }
        t.done = self.terminal;
        Ok(t)
    }

    fn set_agent(&mut self, p: Point) {
        if let Some(a) = self.scene.agent.as_mut() {
            a.pos = p;
        }
    }
}

/// Outcome of a state-only step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    pub timeout: bool,
    pub touched_index: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepInfo {
    pub success: bool,
    pub timeout: bool,
    pub touched_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: RgbImage,
    pub gt: GtState,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Per-entity ground truth: `[color, shape, size index, x, y]`. Row 0 is the
/// agent when the scene has one; objects follow in scene order.
#[derive(Clone, Debug, PartialEq)]
pub struct GtState {
    pub rows: Vec<[f64; 5]>,
    pub has_agent_row: bool,
}

impl GtState {
    pub fn from_scene(scene: &SceneSpec) -> Result<Self, EnvError> {
        let row = |e: &Entity| -> Result<[f64; 5], EnvError> {
            let size = e.size.class_index().ok_or(EnvError::UnindexedSize(e.size))?;
            let (x, y) = e.pos.to_fraction();
            Ok([e.color.code() as f64, e.shape.code() as f64, size as f64, x, y])
        };
        let rows = scene
            .agent
            .iter()
            .chain(&scene.objects)
            .map(row)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { rows, has_agent_row: scene.agent.is_some() })
    }

    /// Object rows only.
    pub fn object_rows(&self) -> &[[f64; 5]] {
        &self.rows[usize::from(self.has_agent_row)..]
    }
}

pub fn gt_state(state: &EnvState) -> Result<GtState, EnvError> {
    GtState::from_scene(&state.scene)
}

/// Fresh episode for `(params, seed)`: agent at the center, no steps taken.
pub fn make_env(params: &TaskParams, seed: u64) -> Result<EnvState, EnvError> {
    if !params.kind.is_episodic() {
        return Err(EnvError::UnsupportedTask(params.kind));
    }
    let sampled = sample_scene_with_target(params, seed)?;
    Ok(EnvState {
        kind: params.kind,
        scene: sampled.scene,
        target_index: sampled.target,
        step_count: 0,
        max_steps: params.max_steps,
        terminal: false,
        success: false,
        timeout: false,
    })
}

/// Steps one environment and renders the resulting observation.
pub fn step(state: &mut EnvState, action: Action) -> Result<StepResult, EnvError> {
    let t = state.step_state(action)?;
    observe(state, t)
}

fn observe(state: &EnvState, t: Transition) -> Result<StepResult, EnvError> {
    let mut observation = RgbImage::default();
    rasterize_scene_into(&state.scene, OBS_RESOLUTION, &mut observation)?;
    Ok(StepResult {
        observation,
        gt: gt_state(state)?,
        reward: t.reward,
        done: t.done,
        info: StepInfo { success: t.success, timeout: t.timeout, touched_index: t.touched_index },
    })
}

fn check_batch(states: &[EnvState], actions: &[Action]) -> Result<(), EnvError> {
    if states.len() != actions.len() {
        return Err(EnvError::LengthMismatch { states: states.len(), actions: actions.len() });
    }
    if states.iter().any(|s| s.terminal) {
        return Err(EnvError::EpisodeFinished);
    }
    Ok(())
}

/// Steps every environment with its action; elementwise identical to
/// calling [`step`] in order. No state is modified when validation fails.
pub fn batch_step(states: &mut [EnvState], actions: &[Action]) -> Result<Vec<StepResult>, EnvError> {
    check_batch(states, actions)?;
    states.iter_mut().zip(actions).map(|(s, &a)| step(s, a)).collect()
}

/// State-only batch step writing into a caller-owned buffer.
pub fn batch_step_states(
    states: &mut [EnvState],
    actions: &[Action],
    out: &mut Vec<Transition>,
) -> Result<(), EnvError> {
    check_batch(states, actions)?;
    out.clear();
    for (s, &a) in states.iter_mut().zip(actions) {
        out.push(s.step_state(a)?);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Transition kernels, shared with the planners.

#[inline]
pub(crate) fn tentative_agent(agent: &Entity, action: Action) -> Point {
    let (dx, dy) = action.delta();
    let (lo, hi) = Entity::coord_bounds(agent.size);
    Point::new((agent.pos.x + dx).clamp(lo, hi), (agent.pos.y + dy).clamp(lo, hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TouchMove {
    Free(Point),
    Target(Point),
    /// Contact with a non-target; carries the lowest touched index.
    Other(Point, usize),
}

#[inline]
pub(crate) fn touch_move(agent: &Entity, objects: &[Entity], target: usize, action: Action) -> TouchMove {
    let p = tentative_agent(agent, action);
    let touching = |o: &Entity| touches_at(p, agent.size, o.pos, o.size);
    if touching(&objects[target]) {
        return TouchMove::Target(p);
    }
    match objects.iter().position(touching) {
        Some(i) => TouchMove::Other(p, i),
        None => TouchMove::Free(p),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum PushMove {
    Free(Point),
    Blocked,
    Push { agent: Point, object: usize, to: Point },
}

#[inline]
pub(crate) fn push_move(agent: &Entity, objects: &[Entity], action: Action) -> PushMove {
    let p = tentative_agent(agent, action);
    let mut touched = None;
    for (i, o) in objects.iter().enumerate() {
        if touches_at(p, agent.size, o.pos, o.size) {
            if touched.is_some() {
                return PushMove::Blocked;
            }
            touched = Some(i);
        }
    }
    let Some(i) = touched else {
        return PushMove::Free(p);
    };
    let (dx, dy) = action.delta();
    let obj = &objects[i];
    let to = Point::new(obj.pos.x + dx, obj.pos.y + dy);
    if !obj.in_bounds_at(to) {
        return PushMove::Blocked;
    }
    let hits_other = objects
        .iter()
        .enumerate()
        .any(|(j, o)| j != i && touches_at(to, obj.size, o.pos, o.size));
    if hits_other {
        PushMove::Blocked
    } else {
        PushMove::Push { agent: p, object: i, to }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ColorName, ShapeKind};

    fn square(color: ColorName, x: f64, y: f64) -> Entity {
        Entity::new(ShapeKind::Square, color, Size::SMALL, Point::from_fraction(x, y))
    }

    fn state(kind: TaskKind, objects: Vec<Entity>, target: usize) -> EnvState {
        EnvState {
            kind,
            scene: SceneSpec { agent: Some(Entity::agent(Point::CENTER)), objects },
            target_index: Some(target),
            step_count: 0,
            max_steps: kind.default_max_steps(),
            terminal: false,
            success: false,
            timeout: false,
        }
    }

    #[test]
    fn free_move_right() {
        let mut s = state(TaskKind::ObjectGoal, vec![square(ColorName::Blue, 0.2, 0.2)], 0);
        let r = step(&mut s, Action::Right).unwrap();
        assert_eq!(s.agent().pos, Point::from_fraction(0.55, 0.5));
        assert_eq!((r.reward, r.done), (0.0, false));
        assert_eq!(r.observation.data.len(), 64 * 64 * 3);
    }

    #[test]
    fn reaching_target_succeeds() {
        let mut s = state(TaskKind::ObjectGoal, vec![square(ColorName::Blue, 0.64, 0.5)], 0);
        let r = step(&mut s, Action::Right).unwrap();
        assert!(r.done && r.info.success);
        assert_eq!(r.reward, 1.0);
        assert_eq!(step(&mut s, Action::Left).unwrap_err(), EnvError::EpisodeFinished);
    }

    #[test]
    fn touching_distractor_fails_with_lowest_index() {
        let objs = vec![
            square(ColorName::Blue, 0.1, 0.1),
            square(ColorName::Red, 0.5, 0.36),
            square(ColorName::Green, 0.5, 0.34),
        ];
        let mut s = state(TaskKind::ObjectComparison, objs, 0);
        let r = s.step_state(Action::Up).unwrap();
        assert!(r.done && !r.success);
        assert_eq!(r.touched_index, Some(1));
    }

    #[test]
    fn clamps_at_wall() {
        let mut s = state(TaskKind::ObjectGoal, vec![square(ColorName::Blue, 0.9, 0.9)], 0);
        s.scene.agent.as_mut().unwrap().pos = Point::new(1_000, 5_000);
        s.step_state(Action::Left).unwrap();
        assert_eq!(s.agent().pos, Point::new(750, 5_000));
        s.step_state(Action::Left).unwrap();
        assert_eq!(s.agent().pos, Point::new(750, 5_000));
    }

    #[test]
    fn push_moves_one_object() {
        let objs = vec![square(ColorName::Blue, 0.5, 0.66), square(ColorName::Red, 0.2, 0.2)];
        let mut s = state(TaskKind::ObjectInteraction, objs, 0);
        let t = s.step_state(Action::Down).unwrap();
        assert_eq!(t.touched_index, Some(0));
        assert_eq!(s.agent().pos, Point::from_fraction(0.5, 0.55));
        assert_eq!(s.scene.objects[0].pos, Point::from_fraction(0.5, 0.71));
    }

    #[test]
    fn push_into_distractor_is_blocked() {
        let objs = vec![square(ColorName::Blue, 0.64, 0.5), square(ColorName::Red, 0.83, 0.5)];
        let mut s = state(TaskKind::ObjectInteraction, objs.clone(), 0);
        s.step_state(Action::Right).unwrap();
        assert_eq!(s.agent().pos, Point::CENTER);
        assert_eq!(s.scene.objects, objs);
    }

    #[test]
    fn two_contacts_block() {
        let objs = vec![square(ColorName::Blue, 0.62, 0.44), square(ColorName::Red, 0.62, 0.58)];
        let mut s = state(TaskKind::ObjectInteraction, objs.clone(), 0);
        s.step_state(Action::Right).unwrap();
        assert_eq!(s.agent().pos, Point::CENTER);
        assert_eq!(s.scene.objects, objs);
    }

    #[test]
    fn push_into_goal_succeeds() {
        let objs = vec![square(ColorName::Blue, 0.22, 0.85)];
        let mut s = state(TaskKind::ObjectInteraction, objs, 0);
        s.scene.agent.as_mut().unwrap().pos = Point::from_fraction(0.35, 0.85);
        let t = s.step_state(Action::Left).unwrap();
        assert_eq!(t.reward, 1.0);
        assert!(s.success && s.terminal);
    }

    #[test]
    fn timeout_after_max_steps() {
        let mut s = state(TaskKind::ObjectGoal, vec![square(ColorName::Blue, 0.1, 0.1)], 0);
        s.max_steps = 2;
        s.step_state(Action::Right).unwrap();
        let t = s.step_state(Action::Left).unwrap();
        assert!(t.done && t.timeout && !t.success);
        assert_eq!(t.reward, 0.0);
    }

    #[test]
    fn gt_rows_follow_code_tables() {
        let scene = SceneSpec { agent: Some(Entity::agent(Point::CENTER)), objects: vec![] };
        assert_eq!(GtState::from_scene(&scene).unwrap().rows, vec![[3.0, 3.0, 0.0, 0.5, 0.5]]);
        let scene = SceneSpec { agent: None, objects: vec![square(ColorName::Blue, 0.2, 0.8)] };
        assert_eq!(GtState::from_scene(&scene).unwrap().rows, vec![[0.0, 0.0, 0.0, 0.2, 0.8]]);
    }

    #[test]
    fn pretraining_has_no_episodes() {
        let p = TaskParams::defaults(TaskKind::Pretraining);
        assert_eq!(make_env(&p, 0).unwrap_err(), EnvError::UnsupportedTask(TaskKind::Pretraining));
    }

    #[test]
    fn batch_rejects_length_mismatch() {
        let p = TaskParams::defaults(TaskKind::ObjectGoal);
        let mut states = vec![make_env(&p, 1).unwrap()];
        let err = batch_step(&mut states, &[Action::Up, Action::Down]).unwrap_err();
        assert_eq!(err, EnvError::LengthMismatch { states: 1, actions: 2 });
    }

    #[test]
    fn goal_region_boundaries() {
        assert!(goal_region_contains(Point::from_fraction(0.1, 0.9)));
        assert!(!goal_region_contains(Point::from_fraction(0.5, 0.5)));
        assert!(!goal_region_contains(Point::from_fraction(0.2, 0.9)));
    }
}
