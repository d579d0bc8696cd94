//! Brute-force grid search against the solver on random two-action
//! instances.
//!
//! `cargo run --release --example oracle_audit [count] [points]`

use hetcontract::oracle::{audit, OracleMode};
use hetcontract::random::{seeded, two_action_instance};
use hetcontract::UtilityModel;

fn main() -> hetcontract::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);
    let points: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let mut rng = seeded(7);
    for i in 0..count {
        let states = 2 + i % 2;
        let inst = two_action_instance(&mut rng, states, UtilityModel::log())?;
        match audit(&inst, "H", points, OracleMode::SecondBest, 1e-9) {
            Ok(a) => println!(
                "#{i} S={states} solver {:.6} oracle {:.6} gap {:.2e} cell {:.2e} within {}",
                a.solver_cost, a.oracle.cost, a.gap, a.oracle.cell_variation, a.within_cell
            ),
            Err(e) => println!("#{i} S={states} {e}"),
        }
    }
    Ok(())
}
