//! First-best contracts when principal and agent disagree.
//!
//! `cargo run --example first_best`

use hetcontract::first_best::{belief_order, first_best_compstat, solve_first_best, DEFAULT_TOL};
use hetcontract::{ActionSpec, Distribution, ProblemInstance, UtilityModel};

fn main() -> hetcontract::Result<()> {
    let principal = Distribution::new(vec![0.5, 0.3, 0.2])?;
    let agent = Distribution::new(vec![0.2, 0.3, 0.5])?;
    let inst = ProblemInstance::new(
        vec![1.0, 2.0, 3.0],
        vec![ActionSpec::new("work", 0.2, principal, agent.clone())],
        0.5,
        UtilityModel::log(),
    )?;

    let sol = solve_first_best(&inst, "work", DEFAULT_TOL)?;
    println!("wages            {:?}", sol.wages);
    println!("belief order     {:?}", belief_order(&inst, "work")?);
    println!("cost (principal) {:.6}", sol.expected_cost_principal);

    // Same problem with the principal adopting the agent's view.
    let shared = inst.with_action_beliefs(0, agent.clone(), agent)?;
    let flat = solve_first_best(&shared, "work", DEFAULT_TOL)?;
    println!("shared beliefs   {:?}  cost {:.6}", flat.wages, flat.expected_cost_principal);

    let cs = first_best_compstat(&inst, "work", 0, 2, 0.05)?;
    println!("shift 0.05 onto state 0 from state 2: changes {:?}", cs.wage_changes);
    println!("  w_0 down and w_2 up: {}", cs.pair_moves_hold);
    Ok(())
}
