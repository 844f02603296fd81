//! Sweep embedding size and questions per iteration, reporting every
//! iteration of each run.
//!
//! ```bash
//! cargo run -p avlem --release --example sweep
//! ```

use avlem::corpus::synthetic::generate_synthetic;
use avlem::evaluation::{run_sweep, EvalConfig, SweepGrid};
use avlem::model::{FeedbackUse, Variant};
use avlem::training::TrainConfig;

fn main() -> anyhow::Result<()> {
    let synth = generate_synthetic(&Default::default(), 9)?;
    let grid = SweepGrid {
        dims: vec![16, 32, 64],
        m: vec![1, 2, 3],
        max_iterations: 3,
    };
    let train = TrainConfig {
        seed: 9,
        ..TrainConfig::default()
    };
    let rows = run_sweep(
        &synth.corpus,
        &synth.split,
        Variant::Full,
        FeedbackUse::Negative,
        &train,
        &EvalConfig::default(),
        &grid,
    )?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
