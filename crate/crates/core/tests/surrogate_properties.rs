use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splinecolloc::linalg::Matrix;
use splinecolloc::osc2d::{gauss_coords, SpaceFit, SurfaceFitter};
use splinecolloc::surrogate::mpnn::rollout_on_tape;
use splinecolloc::surrogate::train::{loss_and_gradient, LossRoot};
use splinecolloc::surrogate::{
    mpnn_step, rollout, train, Boundary, Dataset, GridGraph, LossContext, MpnnConfig, MpnnParams, Tape,
    ToyConfig, TrainConfig, Variant,
};
use splinecolloc::trajectory::Trajectory;

fn unit(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn random_state(rng: &mut impl Rng, n: usize, c: usize) -> Matrix {
    Matrix::from_vec(n, c, (0..n * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn step_is_permutation_equivariant(seed in any::<u64>(), cells in 1usize..4, channels in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = gauss_coords(&unit(cells)).unwrap();
        let g = GridGraph::grid(&xs, &xs).unwrap();
        let n = g.n_nodes();
        let p = MpnnParams::init(MpnnConfig { channels, hidden: 8, processors: 2 }, seed).unwrap();
        let s = random_state(&mut rng, n, channels);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let gp = g.permuted(&perm).unwrap();
        let mut sp = Matrix::zeros(n, channels);
        for i in 0..n {
            sp.row_mut(perm[i]).copy_from_slice(s.row(i));
        }
        let a = mpnn_step(&p, &g, &s).unwrap();
        let b = mpnn_step(&p, &gp, &sp).unwrap();
        for i in 0..n {
            prop_assert_eq!(a.row(i), b.row(perm[i]));
        }
    }

    #[test]
    fn rollout_composes_single_steps(seed in any::<u64>(), steps in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = gauss_coords(&unit(2)).unwrap();
        let g = GridGraph::grid(&xs, &xs).unwrap();
        let p = MpnnParams::init(MpnnConfig { channels: 2, hidden: 8, processors: 1 }, seed).unwrap();
        let s0 = random_state(&mut rng, g.n_nodes(), 2);
        let frames = rollout(&p, &g, &s0, steps).unwrap();
        prop_assert_eq!(frames.len(), steps + 1);
        prop_assert_eq!(&frames[0], &s0);
        let mut s = s0;
        for f in &frames[1..] {
            s = mpnn_step(&p, &g, &s).unwrap();
            prop_assert_eq!(f, &s);
        }
    }

    #[test]
    fn loss_decomposes_and_scales_quadratically(seed in any::<u64>()) {
        let (ctx, exact) = polynomial_context();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<Matrix> = exact.iter().map(|f| random_state(&mut rng, f.rows(), f.cols())).collect();
        let with = |s: f64| -> Vec<Matrix> {
            exact.iter().zip(&noise).map(|(e, n)| {
                let mut m = n.clone();
                m.scale(s);
                m.add_assign(e);
                m
            }).collect()
        };
        let l1 = ctx.evaluate(&with(1.0)).unwrap();
        let l2 = ctx.evaluate(&with(2.0)).unwrap();
        prop_assert_eq!(l1.total, l1.sample + l1.interp);
        prop_assert!((l2.total - 4.0 * l1.total).abs() <= 1e-8 * l2.total);
    }
}

/// Field cubic in x and y and quadratic in t, sampled on a 2-cell Gauss
/// layout with frames at t = 0, 0.2, ..., 1 (K = 5).
fn field(x: f64, y: f64, t: f64) -> f64 {
    (1.0 + x - 2.0 * x * x * x) * (0.5 - y * y + y * y * y) * (1.0 + t - 0.7 * t * t)
}

fn polynomial_context() -> (LossContext, Vec<Matrix>) {
    let bp = unit(2);
    let xs = gauss_coords(&bp).unwrap();
    let fit = SurfaceFitter::new(bp.clone(), bp.clone(), xs.clone(), xs.clone()).unwrap();
    let space = SpaceFit::Tensor(fit);
    let pts = space.points();
    let at = |t: f64| Matrix::from_vec(pts.len(), 1, pts.iter().map(|&(x, y)| field(x, y, t)).collect()).unwrap();
    let times: Vec<f64> = (0..=5).map(|k| k as f64 * 0.2).collect();
    let frames: Vec<Matrix> = times.iter().map(|&t| at(t)).collect();
    let interp: Vec<f64> = (1..=10).map(|k| k as f64 * 0.1).collect();
    let fine = [0.05, 0.3, 0.55, 0.8, 0.95];
    let fine_targets = interp
        .iter()
        .map(|&t| {
            let v = fine.iter().flat_map(|&y| fine.iter().map(move |&x| field(x, y, t))).collect();
            Matrix::from_vec(fine.len() * fine.len(), 1, v).unwrap()
        })
        .collect();
    let ctx = LossContext::new(&times, 3, &space, frames[1..].to_vec(), &interp, &fine, &fine, fine_targets).unwrap();
    (ctx, frames)
}

#[test]
fn exact_predictions_have_zero_loss() {
    let (ctx, frames) = polynomial_context();
    let l = ctx.evaluate(&frames).unwrap();
    assert_eq!(l.sample, 0.0);
    assert!(l.interp <= 1e-24, "L_i = {}", l.interp);
}

#[test]
fn sample_gradient_needs_no_spline_nodes() {
    let ds = Dataset::heat_toy(&ToyConfig { cells: 2, steps: 2, r_time: 2, train: 1, test: 0, ..Default::default() }).unwrap();
    let ep = ds.episode(&ds.train[0], None).unwrap();
    let p = MpnnParams::init(MpnnConfig { channels: 1, hidden: 8, processors: 2 }, 3).unwrap();
    let (_, full) = loss_and_gradient(&p, &ep, LossRoot::Sample).unwrap();

    let mut tape = Tape::new();
    let pv = p.record(&mut tape, true);
    let s0 = tape.constant(ep.initial.clone());
    let frames = rollout_on_tape(&mut tape, &pv, &ep.graph, s0, ep.loss.steps()).unwrap();
    let ls = ep.loss.sample_loss_on_tape(&mut tape, &frames).unwrap();
    let g = tape.backward(ls).unwrap();
    for ((v, t), f) in pv.vars().iter().zip(p.tensors()).zip(&full) {
        assert_eq!(&g.get_or_zeros(*v, t.rows(), t.cols()), f);
    }
}

#[test]
fn unused_leaf_has_zero_gradient() {
    let mut tape = Tape::new();
    let a = tape.leaf(Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap());
    let unused = tape.leaf(Matrix::from_vec(1, 1, vec![3.0]).unwrap());
    let target = std::sync::Arc::new(Matrix::zeros(1, 2));
    let l = tape.squared_error(a, target).unwrap();
    let g = tape.backward(l).unwrap();
    assert_eq!(g.get_or_zeros(unused, 1, 1).data(), &[0.0]);
    assert_eq!(g.get_or_zeros(a, 1, 2).data(), &[2.0, 4.0]);
    assert!(tape.backward(l).is_err());
}

#[test]
fn zero_model_keeps_state() {
    let xs = gauss_coords(&unit(2)).unwrap();
    let g = GridGraph::grid(&xs, &xs).unwrap();
    let p = MpnnParams::zeros(MpnnConfig { channels: 1, hidden: 4, processors: 1 }).unwrap();
    let s0 = random_state(&mut ChaCha8Rng::seed_from_u64(1), g.n_nodes(), 1);
    for f in rollout(&p, &g, &s0, 3).unwrap() {
        assert_eq!(f, s0);
    }
}

#[test]
fn constant_fields_are_learned() {
    let n = 16;
    let centres: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let cfg = ToyConfig { cells: 2, steps: 2, r_time: 2, train: 4, test: 0, ..Default::default() };
    let trajs = (0..4)
        .map(|i| {
            let c = 0.2 + 0.2 * i as f64;
            let times = (0..5).map(|k| k as f64 * 0.1).collect();
            Trajectory::new(times, centres.clone(), centres.clone(), 1, vec![c; 5 * n * n]).unwrap()
        })
        .collect();
    let ds = Dataset::from_trajectories("constant", Boundary::Neumann, trajs, &cfg).unwrap();
    let tc = TrainConfig { variant: Variant::E2e, epochs: 50, batch_size: 1, hidden: 16, processors: 1, ..Default::default() };
    let out = train(&ds, &tc).unwrap();
    let first = out.metrics[0].loss;
    let last = out.metrics.last().unwrap().loss;
    assert!(last <= 1e-2 * first, "loss {first:e} -> {last:e}");
}
