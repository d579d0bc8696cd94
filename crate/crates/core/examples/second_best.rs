//! Second-best contract for a problem file, with its KKT certificate.
//!
//! `cargo run --example second_best [problem.json]`

use std::path::PathBuf;

use hetcontract::io::read_problem;
use hetcontract::second_best::{kkt_certificate, monotonicity_report, solve_second_best};

fn main() -> hetcontract::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems/three_actions_crra.json"));
    let inst = read_problem(&path)?;
    let target = inst.costliest_action().to_string();

    let sol = solve_second_best(&inst, &target, 1e-9)?;
    println!("action {target}");
    println!("  wages   {:?}", sol.wages);
    println!("  lambda  {:.6}", sol.lambda);
    for ((name, mu), binding) in sol.alternatives.iter().zip(&sol.mu).zip(&sol.binding) {
        println!("  mu[{name}] = {mu:.6}  binding {binding}");
    }
    println!("  coincides with first best: {}", sol.coincides_with_first_best);

    let cert = kkt_certificate(&inst, &sol)?;
    println!("  KKT holds at 1e-8: {}", cert.holds(1e-8));
    let mono = monotonicity_report(&sol, &inst, &target)?;
    println!("  wage shape {:?}", mono.shape);
    Ok(())
}
