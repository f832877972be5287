//! Mean squared error of OSC interpolation against nearest, linear and cubic
//! baselines on the four analytic test fields.
//!
//! cargo run --release --example interp_compare -- [problem] [cells]

use splinecolloc::baselines::{best_resolution, compare_methods, ErrorTable};

fn main() -> splinecolloc::Result<()> {
    let mut args = std::env::args().skip(1);
    let problems: Vec<String> = match args.next() {
        Some(p) => vec![p],
        None => ["1d-linear", "1d-nonlinear", "2d-linear", "2d-nonlinear"].map(String::from).to_vec(),
    };
    let cells: Option<usize> = args.next().and_then(|a| a.parse().ok());

    println!("{}", ErrorTable::csv_header());
    for p in &problems {
        let table = match cells {
            Some(n) => compare_methods(p, n)?,
            None => best_resolution(p)?,
        };
        print!("{}", table.to_csv_rows());
        eprintln!("{p}: ranking osc <= cubic <= linear <= nearest holds: {}", table.ranking_holds());
    }
    Ok(())
}
