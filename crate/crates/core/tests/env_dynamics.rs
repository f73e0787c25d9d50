//! Environment dynamics against a brute-force reference stepper written
//! directly from the movement rules, plus the episode invariants.

use ocrl_core::env::{
    batch_step, batch_step_states, goal_region_contains, gt_state, make_env, step, Action, EnvError,
    EnvState, GtState,
};
use ocrl_core::geometry::{ColorName, Entity, Point, SceneSpec, ShapeKind, Size};
use ocrl_core::params::{apply_shift, ShiftSpec, TaskKind, TaskParams};
use ocrl_core::rng::StreamRng;
use ocrl_core::sampler::sample_scene;
use proptest::prelude::*;

fn touching(p: Point, sp: Size, q: Point, sq: Size) -> bool {
    let (dx, dy) = ((p.x - q.x) as i64, (p.y - q.y) as i64);
    4 * (dx * dx + dy * dy) < ((sp.0 + sq.0) as i64).pow(2)
}

fn within(p: Point, size: Size) -> bool {
    let h = size.0 / 2;
    p.x - h >= 0 && p.y - h >= 0 && p.x + h <= 10_000 && p.y + h <= 10_000
}

#[derive(Debug, PartialEq)]
struct RefOutcome {
    agent: Point,
    objects: Vec<Point>,
    reward: f64,
    success: bool,
    failed: bool,
    touched: Option<usize>,
}

/// One step of the rules, on plain positions.
fn reference_step(kind: TaskKind, agent: &Entity, objects: &[Entity], target: usize, a: Action) -> RefOutcome {
    let (dx, dy) = match a {
        Action::Up => (0, -500),
        Action::Down => (0, 500),
        Action::Left => (-500, 0),
        Action::Right => (500, 0),
    };
    let h = agent.size.0 / 2;
    let tentative = Point::new((agent.pos.x + dx).clamp(h, 10_000 - h), (agent.pos.y + dy).clamp(h, 10_000 - h));
    let touched: Vec<usize> = (0..objects.len())
        .filter(|&i| touching(tentative, agent.size, objects[i].pos, objects[i].size))
        .collect();
    let mut out = RefOutcome {
        agent: agent.pos,
        objects: objects.iter().map(|o| o.pos).collect(),
        reward: 0.0,
        success: false,
        failed: false,
        touched: None,
    };
    if kind != TaskKind::ObjectInteraction {
        out.agent = tentative;
        if touched.contains(&target) {
            out.success = true;
            out.reward = 1.0;
            out.touched = Some(target);
        } else if let Some(&first) = touched.first() {
            out.failed = true;
            out.touched = Some(first);
        }
        return out;
    }
    match touched.as_slice() {
        [] => out.agent = tentative,
        [j] => {
            let o = objects[*j];
            let moved = Point::new(o.pos.x + dx, o.pos.y + dy);
            let collides = (0..objects.len())
                .any(|k| k != *j && touching(moved, o.size, objects[k].pos, objects[k].size));
            if within(moved, o.size) && !collides {
                out.agent = tentative;
                out.objects[*j] = moved;
                out.touched = Some(*j);
                if *j == target && moved.x < 2000 && moved.y > 8000 {
                    out.success = true;
                    out.reward = 1.0;
                }
            }
        }
        _ => {}
    }
    out
}

fn random_rollout_matches_reference(kind: TaskKind, params: &TaskParams, seed: u64) {
    let mut state = make_env(params, seed).unwrap();
    let mut rng = StreamRng::new(seed, 99);
    while !state.terminal {
        let a = Action::ALL[rng.below(4) as usize];
        let expected = reference_step(kind, state.agent(), &state.scene.objects, state.target_index.unwrap(), a);
        let t = state.step_state(a).unwrap();
        let got = RefOutcome {
            agent: state.agent().pos,
            objects: state.scene.objects.iter().map(|o| o.pos).collect(),
            reward: t.reward,
            success: t.success,
            failed: state.terminal && !t.success && !t.timeout,
            touched: t.touched_index,
        };
        assert_eq!(got, expected, "{kind} seed {seed} step {}", state.step_count);
    }
}

#[test]
fn dynamics_match_reference_stepper() {
    for kind in TaskKind::EPISODIC {
        let base = TaskParams::defaults(kind);
        let crowded = apply_shift(&base, ShiftSpec::UnseenCount(if kind.is_comparison() { 6 } else { 3 })).unwrap();
        for p in [base, crowded] {
            for seed in 0..300 {
                random_rollout_matches_reference(kind, &p, seed);
            }
        }
    }
}

fn square(color: ColorName, x: f64, y: f64) -> Entity {
    Entity::new(ShapeKind::Square, color, Size::SMALL, Point::from_fraction(x, y))
}

fn state_with(kind: TaskKind, agent: Point, objects: Vec<Entity>, target: usize) -> EnvState {
    EnvState {
        kind,
        scene: SceneSpec { agent: Some(Entity::agent(agent)), objects },
        target_index: Some(target),
        step_count: 0,
        max_steps: kind.default_max_steps(),
        terminal: false,
        success: false,
        timeout: false,
    }
}

#[test]
fn blocked_push_is_checked_by_brute_force() {
    // Every placement of a distractor on a lattice around the target's next
    // cell: the push is blocked exactly when the moved target would touch it.
    let target = square(ColorName::Blue, 0.5, 0.4);
    let agent = Point::from_fraction(0.4, 0.4);
    let next = Point::from_fraction(0.55, 0.4);
    let mut blocked_cases = 0;
    for gx in 0..=20 {
        for gy in 0..=20 {
            let d = Point::new(4500 + gx * 150, 2500 + gy * 150);
            let distractor = Entity::new(ShapeKind::Square, ColorName::Red, Size::SMALL, d);
            if touching(d, Size::SMALL, target.pos, Size::SMALL) || touching(d, Size::SMALL, agent, Size::SMALL) {
                continue;
            }
            let tentative = Point::from_fraction(0.45, 0.4);
            if touching(d, Size::SMALL, tentative, Size::SMALL) {
                continue;
            }
            let mut s = state_with(TaskKind::ObjectInteraction, agent, vec![target, distractor], 0);
            let t = s.step_state(Action::Right).unwrap();
            let blocked = touching(next, Size::SMALL, d, Size::SMALL);
            if blocked {
                blocked_cases += 1;
                assert_eq!(s.agent().pos, agent);
                assert_eq!(s.scene.objects[0].pos, target.pos);
                assert_eq!(t.reward, 0.0);
            } else {
                assert_eq!(s.agent().pos, tentative);
                assert_eq!(s.scene.objects[0].pos, next);
            }
            assert_eq!(s.scene.objects[1].pos, d);
        }
    }
    assert!(blocked_cases > 20, "{blocked_cases}");
}

#[test]
fn two_object_contact_blocks_the_move() {
    let objects = vec![square(ColorName::Blue, 0.6, 0.45), square(ColorName::Red, 0.6, 0.6)];
    let mut s = state_with(TaskKind::ObjectInteraction, Point::from_fraction(0.5, 0.5), objects.clone(), 0);
    s.step_state(Action::Right).unwrap();
    assert_eq!(s.agent().pos, Point::from_fraction(0.5, 0.5));
    assert_eq!(s.scene.objects, objects);
}

#[test]
fn pushing_the_target_into_the_goal_succeeds() {
    let objects = vec![square(ColorName::Blue, 0.2, 0.85)];
    let mut s = state_with(TaskKind::ObjectInteraction, Point::from_fraction(0.3, 0.85), objects, 0);
    let t = s.step_state(Action::Left).unwrap();
    assert_eq!(s.scene.objects[0].pos, Point::from_fraction(0.15, 0.85));
    assert!(t.success && t.done && s.success);
    assert_eq!(t.reward, 1.0);
}

#[test]
fn distractor_in_goal_has_no_effect() {
    let objects = vec![square(ColorName::Blue, 0.7, 0.3), square(ColorName::Red, 0.2, 0.85)];
    let mut s = state_with(TaskKind::ObjectInteraction, Point::from_fraction(0.3, 0.85), objects, 0);
    let t = s.step_state(Action::Left).unwrap();
    assert!(goal_region_contains(s.scene.objects[1].pos));
    assert!(!t.done && t.reward == 0.0);
}

#[test]
fn spec_step_examples() {
    let mut s = state_with(TaskKind::ObjectGoal, Point::CENTER, vec![square(ColorName::Blue, 0.9, 0.9)], 0);
    let t = step(&mut s, Action::Right).unwrap();
    assert_eq!(s.agent().pos, Point::from_fraction(0.55, 0.5));
    assert!(!t.done && t.reward == 0.0);

    let mut s = state_with(TaskKind::ObjectGoal, Point::CENTER, vec![square(ColorName::Blue, 0.64, 0.5)], 0);
    let t = step(&mut s, Action::Right).unwrap();
    assert!(t.done && t.info.success);
    assert_eq!(t.reward, 1.0);

    assert!(goal_region_contains(Point::from_fraction(0.1, 0.9)));
    assert!(!goal_region_contains(Point::from_fraction(0.5, 0.5)));
    assert!(!goal_region_contains(Point::from_fraction(0.2, 0.9)));
}

#[test]
fn touching_a_distractor_fails_with_lowest_index() {
    let objects = vec![
        square(ColorName::Blue, 0.9, 0.9),
        square(ColorName::Red, 0.62, 0.41),
        square(ColorName::Green, 0.62, 0.59),
    ];
    let mut s = state_with(TaskKind::ObjectGoal, Point::CENTER, objects, 0);
    let t = s.step_state(Action::Right).unwrap();
    assert!(t.done && !t.success && t.reward == 0.0);
    assert_eq!(t.touched_index, Some(1));
    assert_eq!(s.step_state(Action::Left), Err(EnvError::EpisodeFinished));
}

#[test]
fn gt_examples() {
    let scene = SceneSpec { agent: Some(Entity::agent(Point::CENTER)), objects: vec![] };
    assert_eq!(GtState::from_scene(&scene).unwrap().rows, vec![[3.0, 3.0, 0.0, 0.5, 0.5]]);
    let scene = SceneSpec { agent: None, objects: vec![square(ColorName::Blue, 0.2, 0.8)] };
    assert_eq!(GtState::from_scene(&scene).unwrap().rows, vec![[0.0, 0.0, 0.0, 0.2, 0.8]]);
}

fn scene_from_gt(gt: &GtState) -> SceneSpec {
    let entity = |r: &[f64; 5]| {
        Entity::new(
            ShapeKind::from_code(r[1] as u8).unwrap(),
            ColorName::from_code(r[0] as u8).unwrap(),
            Size::CLASSES[r[2] as usize],
            Point::from_fraction(r[3], r[4]),
        )
    };
    let agent = gt.has_agent_row.then(|| entity(&gt.rows[0]));
    SceneSpec { agent, objects: gt.object_rows().iter().map(entity).collect() }
}

#[test]
fn gt_round_trips_scenes() {
    let mut n = 0;
    for kind in TaskKind::ALL {
        let base = TaskParams::defaults(kind);
        let params = apply_shift(&base, ShiftSpec::Stress).unwrap_or(base);
        for seed in 0..250 {
            let scene = sample_scene(&params, seed).unwrap();
            let gt = GtState::from_scene(&scene).unwrap();
            assert_eq!(gt.rows.len(), scene.objects.len() + usize::from(scene.agent.is_some()));
            assert_eq!(scene_from_gt(&gt), scene);
            n += 1;
        }
    }
    assert_eq!(n, 1250);
}

#[test]
fn make_env_contracts() {
    let p = TaskParams::defaults(TaskKind::ObjectGoal);
    assert_eq!(make_env(&p, 7).unwrap(), make_env(&p, 7).unwrap());
    let c = make_env(&TaskParams::defaults(TaskKind::ObjectComparison), 7).unwrap();
    assert_eq!(c.scene.objects.len(), 4);
    assert_eq!(
        make_env(&TaskParams::defaults(TaskKind::Pretraining), 0),
        Err(EnvError::UnsupportedTask(TaskKind::Pretraining))
    );
    let gt = gt_state(&c).unwrap();
    assert_eq!(gt.rows.len(), 5);
    assert_eq!(gt.rows[0][..3], [3.0, 3.0, 0.0]);
}

#[test]
fn batch_step_equals_sequential_steps() {
    let p = TaskParams::defaults(TaskKind::ObjectInteraction);
    let mut batch: Vec<EnvState> = (0..64).map(|s| make_env(&p, s).unwrap()).collect();
    let mut seq = batch.clone();
    let actions: Vec<Action> = (0..64).map(|i| Action::ALL[i % 4]).collect();
    let results = batch_step(&mut batch, &actions).unwrap();
    for ((s, &a), r) in seq.iter_mut().zip(&actions).zip(&results) {
        assert_eq!(&step(s, a).unwrap(), r);
    }
    assert_eq!(batch, seq);

    let mut one = vec![make_env(&p, 3).unwrap()];
    let mut single = one[0].clone();
    assert_eq!(batch_step(&mut one, &[Action::Up]).unwrap()[0], step(&mut single, Action::Up).unwrap());

    let before = batch.clone();
    assert!(matches!(batch_step(&mut batch, &actions[..3]), Err(EnvError::LengthMismatch { .. })));
    let mut out = Vec::new();
    assert!(batch_step_states(&mut batch, &actions[..3], &mut out).is_err());
    assert_eq!(batch, before);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn episode_invariants(
        kind in prop::sample::select(TaskKind::EPISODIC.to_vec()),
        seed in any::<u64>(),
        actions in prop::collection::vec(0u8..4, 0..250),
    ) {
        let mut s = make_env(&TaskParams::defaults(kind), seed).unwrap();
        let initial = s.scene.objects.clone();
        let mut total = 0.0;
        for code in actions {
            if s.terminal {
                prop_assert_eq!(s.step_state(Action::Up), Err(EnvError::EpisodeFinished));
                break;
            }
            let before = s.scene.objects.clone();
            let t = s.step_state(Action::ALL[code as usize]).unwrap();
            prop_assert!(t.reward == 0.0 || t.reward == 1.0);
            total += t.reward;
            prop_assert!(total <= 1.0);
            prop_assert!(s.step_count <= s.max_steps);
            for e in s.scene.agent.iter().chain(&s.scene.objects) {
                prop_assert!(e.validate().is_ok());
            }
            if kind == TaskKind::ObjectInteraction {
                let moved: Vec<(i32, i32)> = before
                    .iter()
                    .zip(&s.scene.objects)
                    .filter(|(a, b)| a.pos != b.pos)
                    .map(|(a, b)| ((b.pos.x - a.pos.x).abs(), (b.pos.y - a.pos.y).abs()))
                    .collect();
                prop_assert!(moved.len() <= 1);
                if let Some(&d) = moved.first() {
                    prop_assert!(d == (500, 0) || d == (0, 500));
                }
            } else {
                prop_assert_eq!(&s.scene.objects, &initial);
            }
        }
        prop_assert_eq!(s.success, total == 1.0);
    }
}
