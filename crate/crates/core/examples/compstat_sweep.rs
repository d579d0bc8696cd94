//! Second-best wages along a shift of the principal's beliefs, written as
//! CSV to stdout.
//!
//! `cargo run --example compstat_sweep > sweep.csv`

use std::path::PathBuf;

use hetcontract::compstat::{sweep, Party, SolverKind, Tilt};
use hetcontract::io::{read_problem, sweep_csv};

fn main() -> hetcontract::Result<()> {
    let inst = read_problem(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems/cara_three_state.json"))?;
    let tilt = Tilt::new("H", Party::Principal, 1, 2);
    let grid: Vec<f64> = (0..11).map(|i| 0.01 * i as f64).collect();
    let result = sweep(&inst, "H", &tilt, &grid, SolverKind::SecondBest)?;
    for (k, v) in result.verdicts.iter().enumerate() {
        eprintln!("w_{k}: {v:?}");
    }
    print!("{}", sweep_csv(&result, &["L".to_string()]));
    Ok(())
}
