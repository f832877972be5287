//! Train the message-passing surrogate on a toy dataset and print the
//! per-epoch losses and the test-split losses.
//!
//! cargo run --release --example train_surrogate -- [heat|wave] [post|e2e|e2e-adaptive] [epochs] [hidden] [batch]

use std::time::Instant;

use splinecolloc::surrogate::{train, Dataset, ToyConfig, ToyKind, TrainConfig, Variant};

fn main() -> splinecolloc::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: ToyKind = args.next().as_deref().unwrap_or("heat").parse()?;
    let variant: Variant = args.next().as_deref().unwrap_or("e2e").parse()?;
    let epochs: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let hidden: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(64);
    let batch_size: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);

    let t0 = Instant::now();
    let ds = Dataset::toy(kind, &ToyConfig::default())?;
    println!("{}: {} nodes, {} train / {} test trajectories ({:.1?})", ds.name, ds.graph().n_nodes(), ds.train.len(), ds.test.len(), t0.elapsed());

    let cfg = TrainConfig { variant, epochs, hidden, batch_size, ..Default::default() };
    let t0 = Instant::now();
    let out = train(&ds, &cfg)?;
    for m in out.metrics.iter().filter(|m| m.epoch % 5 == 0 || m.epoch == 1) {
        println!("epoch {:4}  L {:.4e}  L_s {:.4e}  L_i {:.4e}", m.epoch, m.loss, m.sample, m.interp);
    }
    println!("test ({variant}): L {:.4e}  L_s {:.4e}  L_i {:.4e}  [{:.1?}]", out.test.total, out.test.sample, out.test.interp, t0.elapsed());
    Ok(())
}
