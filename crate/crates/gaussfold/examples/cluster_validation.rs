//! Fit a row-clustering model on one fold and choose the cluster count by
//! conditional log-likelihood on the other.
//!
//! Run with: `cargo run --release --example cluster_validation`

use gaussfold::casestudy::{run_block_experiment, BlockExperimentConfig};

fn main() -> gaussfold::Result<()> {
    let cfg = BlockExperimentConfig {
        blocks: vec![4, 4, 4],
        within_corr: 0.8,
        b: 60,
        rho: 0.6,
        q1: 0.5_f64.powf(0.25),
        replicates: 20,
        base_seed: 314,
    };
    let out = run_block_experiment(&cfg)?;
    println!(
        "true block count {}, selected counts {:?}",
        out.true_blocks, out.selected_counts
    );
    println!("recovery rate: {:.2}", out.recovery_rate);

    // one validation curve in full
    let curve = &out.curves[0];
    println!("replicate 0 conditional log-likelihood by cluster count:");
    for (h, cll) in &curve.points {
        let marker = if *h == curve.best_h { "  <- selected" } else { "" };
        println!("  h = {h:>2}: {cll:.2}{marker}");
    }
    Ok(())
}
