use proptest::prelude::*;

use hetcontract::belief::{mlrp_dominates, reduce_distribution, Distribution};
use hetcontract::first_best::{solve_first_best, DEFAULT_TOL};
use hetcontract::io::{parse_problem, serialize_problem};
use hetcontract::shape::power;
use hetcontract::{ActionSpec, ProblemInstance, UtilityModel};

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n)
}

/// A pair `(f, g)` with `f / g` increasing: `f` is `g` times increasing factors.
fn ordered_pair() -> impl Strategy<Value = (Distribution, Distribution)> {
    (3usize..8).prop_flat_map(|n| (weights(n), prop::collection::vec(0.0f64..1.0, n))).prop_map(|(g, steps)| {
        let mut factor = 1.0;
        let f: Vec<f64> = g
            .iter()
            .zip(&steps)
            .map(|(x, d)| {
                factor += d;
                x * factor
            })
            .collect();
        (Distribution::from_weights(&f).unwrap(), Distribution::from_weights(&g).unwrap())
    })
}

fn utility_model() -> impl Strategy<Value = UtilityModel> {
    prop_oneof![
        Just(UtilityModel::log()),
        Just(UtilityModel::sqrt()),
        (0.2f64..3.0).prop_map(|r| UtilityModel::cara(r).unwrap()),
        (0.3f64..0.9).prop_map(|g| UtilityModel::crra(g).unwrap()),
    ]
}

fn instance() -> impl Strategy<Value = ProblemInstance> {
    (2usize..6, utility_model(), 0.5f64..3.0, 0.0f64..0.5)
        .prop_flat_map(|(n, u, w0, c)| (weights(n), weights(n), Just(u), Just(w0), Just(c)))
        .prop_map(|(p, a, u, w0, c)| {
            let ubar = u.evaluate(w0).unwrap();
            let cost = c * (u.evaluate(w0 + 1.0).unwrap() - ubar);
            ProblemInstance::new(
                (0..p.len()).map(|s| s as f64).collect(),
                vec![ActionSpec::new(
                    "a",
                    cost,
                    Distribution::from_weights(&p).unwrap(),
                    Distribution::from_weights(&a).unwrap(),
                )],
                ubar,
                u,
            )
            .unwrap()
        })
}

proptest! {
    #[test]
    fn reduction_keeps_the_order((f, g) in ordered_pair(), k in 2usize..8) {
        prop_assume!(k <= f.len());
        prop_assert!(mlrp_dominates(&f, &g).unwrap());
        let (rf, rg) = (reduce_distribution(&f, k).unwrap(), reduce_distribution(&g, k).unwrap());
        prop_assert_eq!(rf.len(), k);
        prop_assert!((rf.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(mlrp_dominates(&rf, &rg).unwrap());
    }

    #[test]
    fn problem_files_round_trip(inst in instance()) {
        let text = serialize_problem(&inst);
        let back = parse_problem(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize_problem(&back), text);
    }

    #[test]
    fn power_ignores_a_common_shift(w in weights(5), p in weights(5), shift in -3.0f64..3.0) {
        let p = Distribution::from_weights(&p).unwrap();
        let shifted: Vec<f64> = w.iter().map(|x| x + shift).collect();
        let a = power(p.probs(), &w);
        prop_assert!((power(p.probs(), &shifted) - a).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn first_best_meets_participation(inst in instance()) {
        let sol = solve_first_best(&inst, "a", DEFAULT_TOL).unwrap();
        let a = &inst.actions()[0];
        let u = inst.utility();
        let utility: f64 = a.agent_beliefs.probs().iter().zip(&sol.wages).map(|(p, w)| p * u.evaluate(*w).unwrap()).sum();
        prop_assert!((utility - inst.reservation_utility() - a.cost).abs() < 1e-9);
    }

    #[test]
    fn shifted_beliefs_stay_normalised(p in weights(4), frac in 0.0f64..0.99) {
        let d = Distribution::from_weights(&p).unwrap();
        let eps = frac * d.probs()[1].min(d.probs()[2]);
        let s = d.shifted(2, 1, eps).unwrap();
        prop_assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((s.probs()[2] - d.probs()[2] - eps).abs() < 1e-15);
    }
}
