//! Throughput probe for the sampling oracle.

use std::time::Instant;
use wrl_core::anisotropy::{build_symmetric_polygon, SymmetricPolygonSpec};
use wrl_core::qmc::interaction_oracle_multi;

fn main() {
    let p = build_symmetric_polygon(SymmetricPolygonSpec { n: 6, angle: None }).unwrap();
    let alphas = [0.25, 0.5, 1.0, 1.5, 1.9];
    for exp in [20u32, 22] {
        let n = 1u64 << exp;
        let t0 = Instant::now();
        let est = interaction_oracle_multi(&p, &p, &alphas, n, 42);
        let dt = t0.elapsed();
        let ns = dt.as_nanos() as f64 / n as f64;
        println!(
            "2^{exp} samples: {:.1} ns/sample, total {:?}, V(alpha=1)={:.6} +- {:.2e}",
            ns, dt, est[2].value, est[2].std_error
        );
    }
}
