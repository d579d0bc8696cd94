//! Where tilting the principal's beliefs makes the incentive constraint go
//! slack, so the second best coincides with the first best.
//!
//! `cargo run --example regime_detection`

use hetcontract::compstat::{detect_regime_change, Party, Tilt};
use hetcontract::{ActionSpec, Distribution, ProblemInstance, UtilityModel};

fn main() -> hetcontract::Result<()> {
    for ratio in [1.2f64, 1.5, 2.0] {
        let inst = ProblemInstance::new(
            vec![0.0, 1.0],
            vec![
                ActionSpec::homogeneous("H", ratio.ln(), Distribution::new(vec![0.25, 0.75])?),
                ActionSpec::homogeneous("L", 0.0, Distribution::new(vec![0.75, 0.25])?),
            ],
            2f64.ln(),
            UtilityModel::log(),
        )?;
        let tilt = Tilt::new("H", Party::Principal, 0, 1);
        let rc = detect_regime_change(&inst, "H", &tilt, 0.0, 0.7, 32)?;
        let r2 = ratio * ratio;
        println!(
            "c = ln {ratio}: eps* = {:.6} (log-utility formula {:.6}), coincides above: {}",
            rc.eps_star,
            0.75 * (r2 - 1.0) / (3.0 + r2),
            rc.coincides_above
        );
    }
    Ok(())
}
