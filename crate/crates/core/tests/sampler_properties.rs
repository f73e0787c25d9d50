use std::collections::BTreeSet;

use ocrl_core::geometry::{ColorName, Entity, Point, ShapeKind, Size, SCALE};
use ocrl_core::params::{apply_shift, ShiftSpec, TaskKind, TaskParams};
use ocrl_core::sampler::{placement_range, sample_scene, sample_scene_with_target};
use ocrl_core::validate::validate_scene;
use proptest::prelude::*;

/// Counts from the OOD tables: Goal distractors 2..=5, Interaction
/// distractors 0..=3, Comparison objects 3..=6.
fn table_counts(kind: TaskKind) -> Vec<usize> {
    match kind {
        TaskKind::ObjectGoal => (2..=5).collect(),
        TaskKind::ObjectInteraction => (0..=3).collect(),
        TaskKind::ObjectComparison | TaskKind::PropertyComparison => (3..=6).collect(),
        TaskKind::Pretraining => vec![],
    }
}

fn compatible_params(kind: TaskKind) -> Vec<TaskParams> {
    let base = TaskParams::defaults(kind);
    let shifts = table_counts(kind)
        .into_iter()
        .map(ShiftSpec::UnseenCount)
        .chain((0..=3).map(ShiftSpec::UnseenColors))
        .chain((0..=2).map(ShiftSpec::UnseenShapes))
        .chain([ShiftSpec::Stress]);
    std::iter::once(base.clone())
        .chain(shifts.filter_map(|s| apply_shift(&base, s).ok()))
        .collect()
}

#[test]
fn every_shifted_config_generates_valid_scenes() {
    for kind in TaskKind::ALL {
        for p in compatible_params(kind) {
            for seed in 0..300 {
                let s = sample_scene(&p, seed).unwrap_or_else(|e| panic!("{kind} {:?}: {e}", p.shift));
                assert_eq!(validate_scene(&s, &p), Ok(()), "{kind} {:?} seed {seed}", p.shift);
            }
        }
    }
}

#[test]
fn shift_progressions_follow_the_tables() {
    use ColorName::*;
    use ShapeKind::*;
    let goal = TaskParams::defaults(TaskKind::ObjectGoal);
    let colors: Vec<Vec<ColorName>> = (0..=3)
        .map(|l| apply_shift(&goal, ShiftSpec::UnseenColors(l)).unwrap().color_pool)
        .collect();
    assert_eq!(
        colors,
        vec![
            vec![Blue, Green, Yellow, Red],
            vec![Blue, Green, Yellow, Pink],
            vec![Blue, Green, Brown, Pink],
            vec![Blue, Cyan, Brown, Pink],
        ]
    );
    let comp = TaskParams::defaults(TaskKind::ObjectComparison);
    let colors: Vec<Vec<ColorName>> = (0..=2)
        .map(|l| apply_shift(&comp, ShiftSpec::UnseenColors(l)).unwrap().color_pool)
        .collect();
    assert_eq!(colors, vec![vec![Blue, Green], vec![Blue, Pink], vec![Cyan, Pink]]);
    let shapes: Vec<Vec<ShapeKind>> = (0..=2)
        .map(|l| apply_shift(&comp, ShiftSpec::UnseenShapes(l)).unwrap().shape_pool)
        .collect();
    assert_eq!(shapes, vec![vec![Square, Triangle], vec![Star5, Triangle], vec![Star5, Spoke4]]);

    let stress = apply_shift(&comp, ShiftSpec::Stress).unwrap();
    assert_eq!((stress.color_pool.len(), stress.shape_pool.len(), stress.size_pool.len()), (4, 3, 2));

    assert_eq!(apply_shift(&goal, ShiftSpec::UnseenCount(3)).unwrap(), goal);
    assert_eq!(apply_shift(&goal, ShiftSpec::UnseenCount(5)).unwrap().n_objects, 6);
    let inter = TaskParams::defaults(TaskKind::ObjectInteraction);
    assert_eq!(apply_shift(&inter, ShiftSpec::UnseenCount(0)).unwrap().n_objects, 1);
    assert_eq!(apply_shift(&comp, ShiftSpec::UnseenCount(6)).unwrap().n_objects, 6);
    assert!(apply_shift(&goal, ShiftSpec::UnseenShapes(1)).is_err());
    assert!(apply_shift(&TaskParams::defaults(TaskKind::Pretraining), ShiftSpec::UnseenColors(1)).is_err());
}

#[test]
fn goal_target_survives_color_shift() {
    let p = apply_shift(&TaskParams::defaults(TaskKind::ObjectGoal), ShiftSpec::UnseenColors(3)).unwrap();
    for seed in 0..500 {
        let s = sample_scene_with_target(&p, seed).unwrap();
        let t = s.scene.objects[s.target.unwrap()];
        assert_eq!((t.color, t.shape), (ColorName::Blue, ShapeKind::Square));
        let blue_squares = s
            .scene
            .objects
            .iter()
            .filter(|o| (o.color, o.shape) == (ColorName::Blue, ShapeKind::Square))
            .count();
        assert_eq!(blue_squares, 1);
    }
}

#[test]
fn pretraining_scenes_match_the_dataset_description() {
    use ColorName::*;
    use ShapeKind::*;
    let p = TaskParams::defaults(TaskKind::Pretraining);
    for seed in 0..1000 {
        let s = sample_scene(&p, seed).unwrap();
        assert_eq!(s.objects.len(), 5);
        assert!(s.agent.is_none());
        for o in &s.objects {
            assert!([Square, Triangle, Star4, Circle].contains(&o.shape));
            assert!([Blue, Green, Yellow, Red].contains(&o.color));
            assert!(Size::CLASSES.contains(&o.size));
        }
    }
}

/// With a 2x2 type space and exactly one object of unique type, four objects
/// can only split as 1 + 3: enumerate every assignment to confirm.
#[test]
fn comparison_partition_is_one_plus_three() {
    let mut partitions = BTreeSet::new();
    for code in 0..4u32.pow(4) {
        let types: Vec<u32> = (0..4).map(|k| (code >> (2 * k)) & 3).collect();
        let counts: Vec<usize> = (0..4).map(|t| types.iter().filter(|&&x| x == t).count()).collect();
        if counts.iter().filter(|&&c| c == 1).count() == 1 {
            let mut p: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
            p.sort_unstable();
            partitions.insert(p);
        }
    }
    assert_eq!(partitions, BTreeSet::from([vec![1, 3]]));

    let params = TaskParams::defaults(TaskKind::ObjectComparison);
    for seed in 0..2000 {
        let s = sample_scene(&params, seed).unwrap();
        let key = |o: &Entity| (o.color, o.shape, o.size);
        let mut counts: Vec<usize> = s
            .objects
            .iter()
            .map(key)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|t| s.objects.iter().filter(|o| key(o) == t).count())
            .collect();
        counts.sort_unstable();
        assert_eq!(counts, vec![1, 3], "seed {seed}");
    }
}

/// Expected share of each 4x4 arena cell under the uniform law on the
/// admissible lattice: integer centers in the placement range that do not
/// touch the agent spawn.
fn admissible_cell_mass(params: &TaskParams, size: Size) -> [f64; 16] {
    let (lo, hi) = placement_range(params, size);
    let reach = (size.0 as i64 + Size::SMALL.0 as i64).pow(2);
    let mut counts = [0u64; 16];
    let cell = |c: i32| (c as usize * 4 / SCALE as usize).min(3);
    for x in lo..=hi {
        let dx = (x - SCALE / 2) as i64;
        for y in lo..=hi {
            let dy = (y - SCALE / 2) as i64;
            if 4 * (dx * dx + dy * dy) >= reach {
                counts[cell(y) * 4 + cell(x)] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    counts.map(|c| c as f64 / total as f64)
}

#[test]
fn goal_target_position_is_uniform() {
    let params = TaskParams::defaults(TaskKind::ObjectGoal);
    let mass = admissible_cell_mass(&params, Size::SMALL);
    let n = 10_000;
    let mut observed = [0u64; 16];
    for seed in 0..n {
        let s = sample_scene_with_target(&params, seed).unwrap();
        let Point { x, y } = s.scene.objects[s.target.unwrap()].pos;
        let cell = |c: i32| (c as usize * 4 / SCALE as usize).min(3);
        observed[cell(y) * 4 + cell(x)] += 1;
    }
    let chi2: f64 = observed
        .iter()
        .zip(mass)
        .map(|(&o, m)| {
            let e = m * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    // 15 degrees of freedom; scipy.stats.chi2.ppf(0.999, 15) = 37.697.
    assert!(chi2 < 37.697, "chi2 = {chi2}, observed {observed:?}");
}

#[test]
fn interaction_targets_avoid_goal_and_walls() {
    let p = TaskParams::defaults(TaskKind::ObjectInteraction);
    for seed in 0..2000 {
        let s = sample_scene_with_target(&p, seed).unwrap();
        let t = s.scene.objects[s.target.unwrap()];
        assert!(!(t.pos.x < 2000 && t.pos.y > 8000));
        for o in &s.scene.objects {
            assert!(o.pos.x >= 1500 && o.pos.y >= 1500 && o.pos.x <= 8500 && o.pos.y <= 8500);
            assert_eq!(o.shape, ShapeKind::Square);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn sampled_scenes_always_validate(
        kind in prop::sample::select(TaskKind::ALL.to_vec()),
        pick in any::<prop::sample::Index>(),
        seed in any::<u64>(),
    ) {
        let options = compatible_params(kind);
        let p = &options[pick.index(options.len())];
        let s = sample_scene(p, seed).unwrap();
        prop_assert_eq!(validate_scene(&s, p), Ok(()));
        prop_assert_eq!(&s, &sample_scene(p, seed).unwrap());
    }
}
