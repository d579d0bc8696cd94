//! Four-state contract through the utility spread m between the top two
//! states: the inner three-wage problem at fixed m, the outer search over m,
//! and the direct four-state solve for comparison.
//!
//! `cargo run --example spread_decomposition`

use hetcontract::spread::{compare_with_direct, inner_cost, SpreadProblem};
use hetcontract::{ActionSpec, Distribution, ProblemInstance, UtilityModel};

fn main() -> hetcontract::Result<()> {
    let inst = ProblemInstance::new(
        vec![1.0, 2.0, 3.0, 4.0],
        vec![
            ActionSpec::new(
                "H",
                0.08,
                Distribution::new(vec![0.15, 0.2, 0.3, 0.35])?,
                Distribution::new(vec![0.1, 0.15, 0.3, 0.45])?,
            ),
            ActionSpec::homogeneous("L", 0.0, Distribution::new(vec![0.3, 0.3, 0.25, 0.15])?),
        ],
        -0.6,
        UtilityModel::cara(1.0)?,
    )?;
    let sp = SpreadProblem::new(inst)?;
    println!("ordering holds: {}", sp.ordering_holds()?);

    for m in [0.0, 0.05, 0.1, 0.15] {
        let c = inner_cost(&sp, m)?;
        println!("m {m:.2}  cost {:.8}  dC/dm {:+.6}", c.total, c.derivative);
    }

    let rep = compare_with_direct(&sp, 1e-10)?;
    println!("m*            {:.8}", rep.iterative.m_star);
    println!("iterative     {:?}", rep.iterative.wages);
    println!("direct        {:?}", rep.direct.wages);
    println!("cost delta    {:.2e}", rep.cost_delta);
    Ok(())
}
