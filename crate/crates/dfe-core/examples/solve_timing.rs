//! Quick profiling harness for the weight-program solve path.
use dfe_core::measurement::RngStream;
use dfe_core::oasis_gt::{build_pauli_povm, optimize_weights, GtOptions};
use dfe_core::state::make_haar;
use std::time::Instant;

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4);
    let trials: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let batch: usize = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(96);
    let povm = build_pauli_povm(n).unwrap();
    let opts = GtOptions {
        pricing_batch: batch,
        ..GtOptions::default()
    };
    for t in 0..trials {
        let mut rng = RngStream::new(99, t);
        let o = make_haar(n, &mut rng).unwrap();
        let start = Instant::now();
        let (_w, _law, obj) = optimize_weights(&povm, &o, &opts).unwrap();
        println!("trial {t}: obj={obj:.6} in {:?}", start.elapsed());
    }
}
