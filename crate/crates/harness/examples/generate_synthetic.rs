//! Writes the synthetic seasonal dataset used by the test suite.
//!
//! cargo run -p armd-harness --example generate_synthetic -- out.csv

use armd_harness::synthetic::{generate, write_csv, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "synthetic_seasonal.csv".into());
    let series = generate(&SyntheticConfig::default())?;
    write_csv(path.as_ref(), &series)?;
    println!("wrote {} timesteps x {} channels to {path}", series.n_timesteps(), series.n_channels());
    Ok(())
}
