use std::sync::OnceLock;

use proptest::prelude::*;
use tabletop_core::dataset::{generate_synthetic_demos, synthetic_demonstration, SyntheticConfig};
use tabletop_core::geometry::{table_to_virtual, TableBounds, TablePoint};
use tabletop_core::linalg::Vec2;
use tabletop_core::perception::{segment_dirt, BaselinePredictor, ColorConfig, DirtType};
use tabletop_core::seed::rng_from_seed;
use tabletop_core::simulator::{
    execute_trajectory, metric_m1, render_scene, run_episode, spawn_scene, Pipeline, Scene, SpawnParams,
    DEFAULT_PUSH_STEP, DEFAULT_SPONGE_RADIUS,
};
use tabletop_core::tpgmm::{em_fit, EmConfig, TpGmmModel, Trajectory};

const R: f64 = DEFAULT_SPONGE_RADIUS;

fn line(a: Vec2, b: Vec2) -> Trajectory {
    let pts: Vec<Vec2> = (0..200).map(|i| {
        let s = i as f64 / 199.0;
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }).collect();
    Trajectory::from_positions(&pts).unwrap()
}

fn one_particle(p: Vec2, step: f64) -> Scene {
    Scene::lentils(vec![p], 240, 240.0, TableBounds::DEFAULT, R).unwrap().with_push_step(step).unwrap()
}

#[test]
fn particle_on_the_path_leaves_sideways() {
    let (y0, start, end) = (-0.2, -0.74, -0.30);
    for offset in [0.002, -0.002] {
        let p = [-0.70, y0 + offset];
        let traj = line([start, y0], [end, y0]);
        let coarse = execute_trajectory(&one_particle(p, DEFAULT_PUSH_STEP), &traj).particles()[0];
        let fine = execute_trajectory(&one_particle(p, DEFAULT_PUSH_STEP / 10.0), &traj).particles()[0];
        assert!((coarse[0] - fine[0]).hypot(coarse[1] - fine[1]) < 1e-3, "{coarse:?} vs {fine:?}");

        // sliding contact: tan(θ/2) grows as exp(s / r) until the particle
        // reaches the side of the disc at θ = π/2 and is left behind
        let d = offset.abs();
        let contact = p[0] - (R * R - d * d).sqrt();
        let theta0 = d.atan2((R * R - d * d).sqrt());
        let travel = R * (1.0 / (theta0 / 2.0).tan()).ln();
        let expect = [contact + travel, y0 + offset.signum() * R];
        assert!((fine[0] - expect[0]).hypot(fine[1] - expect[1]) < 1e-3, "{fine:?} vs {expect:?}");

        let lateral = fine[1] - y0;
        assert_eq!(lateral.signum(), offset.signum());
        assert!((lateral.abs() - R).abs() < 1e-3);
    }
}

#[test]
fn passes_away_from_dirt_change_nothing() {
    let params = SpawnParams::default();
    for kind in [DirtType::Marker, DirtType::Lentils] {
        let scene = spawn_scene(kind, &params, &mut rng_from_seed(4)).unwrap();
        let far = line([-0.74, 0.5], [-0.26, 0.5]);
        assert_eq!(execute_trajectory(&scene, &far), scene);
    }
}

#[test]
fn stroke_inside_the_capsule_is_wiped_out() {
    let traj = {
        let demo = synthetic_demonstration(DirtType::Marker, &SyntheticConfig::default(), &mut rng_from_seed(8)).unwrap();
        demo.trajectory().clone()
    };
    let h = 240.0;
    let px: Vec<Vec2> = traj.positions().map(|p| {
        let q = table_to_virtual(TablePoint::from_array(p), h);
        [q.x, q.y]
    }).collect();
    let reach = R * h - 1.0;
    let mut ink = vec![0.0f32; 240 * 240];
    for row in 0..240 {
        for col in 0..240 {
            let inside = px.windows(2).any(|w| {
                let (a, b) = (w[0], w[1]);
                let ab = [b[0] - a[0], b[1] - a[1]];
                let ap = [col as f64 - a[0], row as f64 - a[1]];
                let len2 = ab[0] * ab[0] + ab[1] * ab[1];
                let s = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
                (ap[0] - s * ab[0]).hypot(ap[1] - s * ab[1]) <= reach
            });
            if inside && (row + col) % 3 == 0 {
                ink[row * 240 + col] = 1.0;
            }
        }
    }
    let scene = Scene::marker(ink, 240, h, TableBounds::DEFAULT, R).unwrap();
    let after = execute_trajectory(&scene, &traj);
    let m1 = metric_m1(&[scene.ink_area() as f64, after.ink_area() as f64]).unwrap();
    assert!(scene.ink_area() > 0);
    assert_eq!(m1.values, vec![100.0, 0.0]);
}

#[test]
fn one_lentil_renders_where_it_lies() {
    for p in [[-0.5, -0.2], [-0.61, 0.03], [-0.3333, -0.3777]] {
        let scene = Scene::lentils(vec![p], 240, 240.0, TableBounds::DEFAULT, R).unwrap();
        let mask = segment_dirt(&render_scene(&scene), &ColorConfig::default());
        assert!(mask.count() > 0);
        let n = mask.count() as f64;
        let c = mask.pixels().fold([0.0, 0.0], |acc, (x, y)| [acc[0] + x as f64 / n, acc[1] + y as f64 / n]);
        let q = table_to_virtual(TablePoint::from_array(p), 240.0);
        assert!((c[0] - q.x).hypot(c[1] - q.y) <= 1.0);
    }
}

#[test]
fn spawned_lentils_stay_on_the_table() {
    let params = SpawnParams::default();
    let b = params.table_bounds;
    for seed in 0..100 {
        let scene = spawn_scene(DirtType::Lentils, &params, &mut rng_from_seed(seed)).unwrap();
        assert_eq!(scene.particles().len(), params.lentil_count);
        assert!(scene.particles().iter().all(|p| b.contains(TablePoint::from_array(*p))));
    }
}

#[test]
fn halving_the_push_step_barely_moves_lentils() {
    let cfg = SyntheticConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut rng = rng_from_seed(seed);
        let demo = synthetic_demonstration(DirtType::Lentils, &cfg, &mut rng).unwrap();
        let scene = spawn_scene(DirtType::Lentils, &cfg.spawn, &mut rng_from_seed(seed)).unwrap();
        let a = execute_trajectory(&scene, demo.trajectory());
        let b = execute_trajectory(&scene.clone().with_push_step(DEFAULT_PUSH_STEP / 2.0).unwrap(), demo.trajectory());
        let total: f64 = a.particles().iter().zip(b.particles()).map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1])).sum();
        worst = worst.max(total / a.particles().len() as f64);
    }
    assert!(worst < 1e-2, "largest mean change {worst}");
}

fn model() -> &'static TpGmmModel {
    static MODEL: OnceLock<TpGmmModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let ds = generate_synthetic_demos(40, &SyntheticConfig::default(), 3).unwrap();
        em_fit(&ds.views(), 5, &EmConfig::default()).unwrap()
    })
}

#[test]
fn episodes_are_reproducible() {
    let predictor = BaselinePredictor::default();
    let colors = ColorConfig::default();
    let pipeline = Pipeline { predictor: &predictor, model: model(), colors: &colors };
    let scene = spawn_scene(DirtType::Lentils, &SpawnParams::default(), &mut rng_from_seed(12)).unwrap();
    assert_eq!(run_episode(&scene, &pipeline, 5).unwrap(), run_episode(&scene, &pipeline, 5).unwrap());
    let clean = Scene::marker(vec![0.0; 240 * 240], 240, 240.0, TableBounds::DEFAULT, R).unwrap();
    assert_eq!(run_episode(&clean, &pipeline, 5).unwrap_err().code(), "ZeroInitialArea");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn episode_invariants(seed in any::<u64>(), lentils in any::<bool>()) {
        let kind = if lentils { DirtType::Lentils } else { DirtType::Marker };
        let predictor = BaselinePredictor::default();
        let colors = ColorConfig::default();
        let pipeline = Pipeline { predictor: &predictor, model: model(), colors: &colors };
        let scene = spawn_scene(kind, &SpawnParams::default(), &mut rng_from_seed(seed)).unwrap();
        let ep = run_episode(&scene, &pipeline, 5).unwrap();
        prop_assert_eq!(ep.series.values[0], 100.0);
        prop_assert_eq!(ep.series.len(), 5);
        let mut current = scene.clone();
        for t in ep.trajectories.iter().flatten() {
            let next = execute_trajectory(&current, t);
            prop_assert!(next.ink_total() <= current.ink_total());
            prop_assert!(next.ink().iter().zip(current.ink()).all(|(a, b)| a <= b));
            prop_assert_eq!(next.particles().len(), scene.particles().len());
            let b = next.table_bounds();
            prop_assert!(next.particles().iter().all(|p| b.contains(TablePoint::from_array(*p))));
            current = next;
        }
        prop_assert_eq!(&current, &ep.final_scene);
    }
}
