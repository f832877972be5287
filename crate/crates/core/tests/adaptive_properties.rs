use proptest::prelude::*;
use splinecolloc::adaptive::{adapt_points, AdaptiveConfig, AdaptivePoints};
use splinecolloc::linalg::Matrix;
use splinecolloc::osc2d::{gauss_coords, SpaceFit, SpaceTimeSurrogate, SurfaceFitter};

const TIMES: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Surrogate of `f(x, y, t)` sampled at the Gauss layout of `bx × by`.
fn surrogate(bx: &[f64], by: &[f64], f: impl Fn(f64, f64, f64) -> f64) -> (SpaceTimeSurrogate, AdaptivePoints) {
    let xs = gauss_coords(bx).unwrap();
    let ys = gauss_coords(by).unwrap();
    let fit = SurfaceFitter::new(bx.to_vec(), by.to_vec(), xs.clone(), ys.clone()).unwrap();
    let mut frames = Matrix::zeros(TIMES.len(), xs.len() * ys.len());
    for (k, &t) in TIMES.iter().enumerate() {
        for (iy, &y) in ys.iter().enumerate() {
            for (ix, &x) in xs.iter().enumerate() {
                frames.set(k, iy * xs.len() + ix, f(x, y, t));
            }
        }
    }
    let st = SpaceTimeSurrogate::new(&TIMES, SpaceFit::Tensor(fit), 1, &frames, 3).unwrap();
    let pts = AdaptivePoints::tensor(bx.to_vec(), by.to_vec(), &xs, &ys).unwrap();
    (st, pts)
}

fn moving_field(a: f64, b: f64, c: f64) -> impl Fn(f64, f64, f64) -> f64 {
    move |x, y, t| (a * (x - c * t)).sin() * (b * y + t).cos() + 0.3 * (x * y - c * t).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn containment_and_step_bound(cells in 2usize..6, a in 1.0f64..6.0, b in 1.0f64..6.0, c in -1.5f64..1.5, t in 0.05f64..0.95) {
        let bp = uniform(0.0, 1.0, cells);
        let (st, pts) = surrogate(&bp, &bp, moving_field(a, b, c));
        let cfg = AdaptiveConfig::default();
        let beta = cfg.step(&bp, &bp).unwrap();
        let out = adapt_points(&pts, &st, t, &cfg).unwrap();
        for k in 0..pts.len() {
            let (x0, y0) = pts.positions()[k];
            let (x1, y1) = out.positions()[k];
            let (cx, cy) = pts.cells()[k];
            prop_assert!((x1 - x0).hypot(y1 - y0) <= beta * (1.0 + 1e-12));
            prop_assert!(x1 >= bp[cx] && x1 <= bp[cx + 1] && y1 >= bp[cy] && y1 <= bp[cy + 1]);
            if pts.is_fixed(k) {
                prop_assert_eq!((x1, y1), (x0, y0));
            }
        }
    }

    #[test]
    fn stationary_field_is_fixed_point(cells in 2usize..6, a in 0.5f64..5.0, b in 0.5f64..5.0, t in 0.05f64..0.95) {
        let bp = uniform(0.0, 1.0, cells);
        let (st, pts) = surrogate(&bp, &bp, |x, y, _| (a * x).sin() + (b * y).cos() * x);
        let out = adapt_points(&pts, &st, t, &AdaptiveConfig::default()).unwrap();
        prop_assert_eq!(out, pts);
    }

    #[test]
    fn translation_equivariance(cells in 2usize..6, a in 1.0f64..5.0, c in -1.0f64..1.0, dx in -3.0f64..3.0, dy in -3.0f64..3.0) {
        let bp = uniform(0.0, 1.0, cells);
        let f = moving_field(a, 2.0, c);
        let (st0, p0) = surrogate(&bp, &bp, &f);
        let bx: Vec<f64> = bp.iter().map(|v| v + dx).collect();
        let by: Vec<f64> = bp.iter().map(|v| v + dy).collect();
        let (st1, p1) = surrogate(&bx, &by, |x, y, t| f(x - dx, y - dy, t));
        let cfg = AdaptiveConfig::default();
        let a0 = adapt_points(&p0, &st0, 0.4, &cfg).unwrap();
        let a1 = adapt_points(&p1, &st1, 0.4, &cfg).unwrap();
        for (u, v) in a0.positions().iter().zip(a1.positions()) {
            prop_assert!((u.0 + dx - v.0).abs() <= 1e-10 && (u.1 + dy - v.1).abs() <= 1e-10);
        }
    }
}

/// Front of `tanh((x + c t − x0) / σ)` travelling in −x; `∂u/∂t` peaks on it.
fn front(x: f64, t: f64) -> f64 {
    ((x + 0.4 * t - 0.7) / 0.15).tanh()
}

/// Front position located from the reference solution: the sample where a
/// centred time difference of `front` is largest.
fn crest_at(t: f64) -> f64 {
    let h = 1e-5;
    (0..=4000)
        .map(|i| i as f64 / 4000.0)
        .max_by(|&a, &b| {
            let da = front(a, t + h) - front(a, t - h);
            let db = front(b, t + h) - front(b, t - h);
            da.total_cmp(&db)
        })
        .unwrap()
}

#[test]
fn points_approach_travelling_crest() {
    let bp = uniform(0.0, 1.0, 6);
    let (st, pts) = surrogate(&bp, &bp, |x, _, t| front(x, t));
    let t = 0.5;
    let crest = crest_at(t);
    let out = adapt_points(&pts, &st, t, &AdaptiveConfig::default()).unwrap();
    let free: Vec<usize> = (0..pts.len()).filter(|&k| !pts.is_fixed(k)).collect();
    let mean = |p: &AdaptivePoints| free.iter().map(|&k| (p.positions()[k].0 - crest).abs()).sum::<f64>() / free.len() as f64;
    let (before, after) = (mean(&pts), mean(&out));
    assert!(after < before, "mean distance {before} -> {after}");
}
