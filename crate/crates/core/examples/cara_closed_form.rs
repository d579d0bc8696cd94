//! Three-state CARA contract from the scalar wage equation, checked against
//! the general solver, and a comparative-statics sweep.
//!
//! `cargo run --example cara_closed_form`

use hetcontract::cara::{cara_compstat, CaraSystem};
use hetcontract::second_best::solve_second_best;
use hetcontract::Distribution;

fn main() -> hetcontract::Result<()> {
    let sys = CaraSystem::new(
        Distribution::new(vec![0.2, 0.3, 0.5])?,
        Distribution::new(vec![0.5, 0.3, 0.2])?,
        Distribution::new(vec![0.3, 0.4, 0.3])?,
        0.2,
        -0.5,
    )?;
    let (k1, k2, k3) = sys.kappas();
    println!("kappas {k1:.4} {k2:.4} {k3:.4}  gamma_2 {:.4}", sys.gamma2());

    let sol = sys.solve(1e-14)?;
    println!("closed form  {:?}  regime {:?}", sol.wages, sol.regime);
    println!("residual     {:.2e}", sys.residuals(sol.wages, sol.lambda, sol.mu).max_abs());

    let numeric = solve_second_best(&sys.to_instance(vec![1.0, 2.0, 3.0])?, "H", 1e-12)?;
    println!("numeric      {:?}", numeric.wages);
    println!("first best   {:?}", sys.first_best());

    let grid: Vec<f64> = (0..6).map(|i| 0.02 * i as f64).collect();
    let sweep = cara_compstat(&sys, 1, 2, &grid)?;
    for row in &sweep.rows {
        println!("eps {:.2}  w {:?}", row.eps, row.wages);
    }
    println!("w_1 down, w_2 up: {}  state 0 path {:?}", sweep.verdict, sweep.third_state);
    Ok(())
}
