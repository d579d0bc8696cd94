//! Likelihood-ratio comparisons and lumping the top states together.
//!
//! `cargo run --example mlrp_reduction`

use hetcontract::belief::{mlrp_compare, reduce_distribution};
use hetcontract::random::{mlrp_pair, seeded};

fn main() -> hetcontract::Result<()> {
    let mut rng = seeded(3);
    let (high, low) = mlrp_pair(&mut rng, 6);
    println!("high {:?}", high.probs());
    println!("low  {:?}", low.probs());
    for k in (2..=6).rev() {
        let (h, l) = (reduce_distribution(&high, k)?, reduce_distribution(&low, k)?);
        println!("k={k}  {:?}", mlrp_compare(&h, &l)?);
    }
    Ok(())
}
