//! Solve u + u' = sin 2πx + 2π cos 2πx on [0, 1] with zero boundary values
//! and print the polynomial pieces and the error against sin 2πx.
//!
//! cargo run --example osc_ode -- [cells] [order]

use splinecolloc::osc1d::{solve_osc1d, sine_ode_problem};

fn main() -> splinecolloc::Result<()> {
    let mut args = std::env::args().skip(1);
    let cells: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let order: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);

    let sol = solve_osc1d(&sine_ode_problem(cells, order)?)?;
    let bp = sol.breakpoints().to_vec();
    for (i, c) in sol.global_coeffs().iter().enumerate() {
        let terms: Vec<String> = c.iter().enumerate().map(|(j, v)| format!("{v:+.4}x^{j}")).collect();
        println!("[{:.4}, {:.4}]  {}", bp[i], bp[i + 1], terms.join(" "));
    }

    let mut max_err = 0.0f64;
    for k in 0..1000 {
        let x = k as f64 / 999.0;
        let e = (sol.evaluate(x, 0)? - (2.0 * std::f64::consts::PI * x).sin()).abs();
        max_err = max_err.max(e);
    }
    println!("max |u - sin 2πx| over 1000 points: {max_err:.6}");
    println!("condition estimate: {:.3e}", sol.condition_estimate());
    Ok(())
}
