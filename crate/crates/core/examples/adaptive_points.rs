//! Move Gauss points toward a travelling front. The front is sampled in time,
//! interpolated with a space-time spline, and each free point takes one step
//! along the normalized gradient of du/dt.
//!
//! cargo run --release --example adaptive_points -- [cells=6] [t=0.5]

use splinecolloc::adaptive::{adapt_points, AdaptiveConfig, AdaptivePoints};
use splinecolloc::linalg::Matrix;
use splinecolloc::osc2d::{gauss_coords, SpaceFit, SpaceTimeSurrogate, SurfaceFitter};

fn front(x: f64, y: f64, t: f64) -> f64 {
    ((x + 0.3 * y + 0.4 * t - 0.7) / 0.15).tanh()
}

fn main() -> splinecolloc::Result<()> {
    let mut args = std::env::args().skip(1);
    let cells: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(6);
    let t: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.5);

    let bp: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    let xs = gauss_coords(&bp)?;
    let times: Vec<f64> = (0..=5).map(|k| k as f64 * 0.2).collect();
    let mut frames = Matrix::zeros(times.len(), xs.len() * xs.len());
    for (k, &tk) in times.iter().enumerate() {
        for (iy, &y) in xs.iter().enumerate() {
            for (ix, &x) in xs.iter().enumerate() {
                frames.set(k, iy * xs.len() + ix, front(x, y, tk));
            }
        }
    }
    let fit = SurfaceFitter::new(bp.clone(), bp.clone(), xs.clone(), xs.clone())?;
    let st = SpaceTimeSurrogate::new(&times, SpaceFit::Tensor(fit), 1, &frames, 3)?;
    let pts = AdaptivePoints::tensor(bp.clone(), bp.clone(), &xs, &xs)?;
    let cfg = AdaptiveConfig::default();
    let moved = adapt_points(&pts, &st, t, &cfg)?;

    println!("step length {:.4}", cfg.step(&bp, &bp)?);
    println!("x0,y0,x1,y1,fixed");
    for k in 0..pts.len() {
        let ((x0, y0), (x1, y1)) = (pts.positions()[k], moved.positions()[k]);
        println!("{x0:.5},{y0:.5},{x1:.5},{y1:.5},{}", pts.is_fixed(k));
    }
    Ok(())
}
