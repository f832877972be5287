//! Generate heat and damped wave trajectories and print their energy decay.
//!
//! cargo run --release --example pde_data -- [seed]

use splinecolloc::datagen::{gaussian_bumps, heat_solve, l2_energy, wave_energies, wave_initial, wave_solve, HeatConfig, WaveConfig};

fn main() -> splinecolloc::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0);

    let heat = HeatConfig::standard(0.01, 0.1, 1.0);
    let tr = heat_solve(&heat, &gaussian_bumps(heat.n, seed))?;
    println!("heat: {} frames on {}x{}, dt {:.3e}", tr.n_times(), tr.nx(), tr.ny(), heat.dt);
    for (t, e) in tr.times().iter().zip(l2_energy(&tr, 0)) {
        println!("  t = {t:.2}  ||u||^2 = {e:.6e}");
    }

    let wave = WaveConfig::default();
    let (w0, v0) = wave_initial(wave.n, seed);
    let tr = wave_solve(&wave, &w0, &v0)?;
    println!("wave: {} frames, courant {:.3}", tr.n_times(), wave.courant());
    for (t, e) in tr.times().iter().zip(wave_energies(&wave, &tr)) {
        println!("  t = {t:.3}  E = {e:.6e}");
    }
    Ok(())
}
