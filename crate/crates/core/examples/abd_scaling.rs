//! Time factorize + solve of random almost block diagonal systems and fit the
//! log-log slope. Block width grows like sqrt(n), so the expected slope is 2.
//!
//! cargo run --release --example abd_scaling -- [max_n=4096] [seconds=0.3]

use splinecolloc::abd::{benchmark_scaling, BlockWidth};

fn main() -> splinecolloc::Result<()> {
    let mut args = std::env::args().skip(1);
    let max_n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4096);
    let secs: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.3);

    let sizes: Vec<usize> = std::iter::successors(Some(256), |n| Some(n * 2)).take_while(|&n| n <= max_n).collect();
    let report = benchmark_scaling(&sizes, BlockWidth::Sqrt, secs, 0)?;
    print!("{}", report.to_csv());
    if let Some(e) = report.exponent {
        println!("fitted exponent: {e:.3}");
    }
    Ok(())
}
