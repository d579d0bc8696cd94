//! Indifference curves, iso-cost lines and the contract point for a
//! two-state problem, as CSV.
//!
//! `cargo run --example figure_data > figure.csv`

use std::path::PathBuf;

use hetcontract::io::{figure_csv, read_problem};
use hetcontract::second_best::figure_data;

fn main() -> hetcontract::Result<()> {
    let inst = read_problem(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems/two_state_log.json"))?;
    print!("{}", figure_csv(&figure_data(&inst, 41)?));
    Ok(())
}
