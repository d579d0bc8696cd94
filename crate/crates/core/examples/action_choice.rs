//! Which action the principal implements once incentives are priced.
//!
//! `cargo run --example action_choice`

use std::path::PathBuf;

use hetcontract::io::read_problem;
use hetcontract::second_best::choose_action;

fn main() -> hetcontract::Result<()> {
    let inst = read_problem(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems/three_actions_crra.json"))?;
    let choice = choose_action(&inst, 1e-9)?;
    for p in &choice.profits {
        println!(
            "{:>6}  revenue {:.4}  wage cost {:.4} (first best {:.4})  profit {:.4}",
            p.action, p.revenue, p.wage_cost, p.first_best_wage_cost, p.profit
        );
    }
    println!("chosen {}  observable-effort choice {}", choice.chosen, choice.first_best_choice);
    Ok(())
}
