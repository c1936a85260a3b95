//! Quick timing probe for the quadrature engine at several settings.

use std::time::Instant;
use wrl_core::anisotropy::{build_symmetric_polygon, SymmetricPolygonSpec};
use wrl_core::riesz::{best_effort, self_energy};
use wrl_core::{QuadratureSpec, RieszParams};

fn main() {
    let params = RieszParams::new(1.0).unwrap();
    for n in [4usize, 6, 8] {
        let p = build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None }).unwrap();
        for (name, spec) in [
            ("default", QuadratureSpec::default()),
            ("coarse", QuadratureSpec::coarse()),
        ] {
            let t0 = Instant::now();
            let v = best_effort(self_energy(&p, &params, &spec)).unwrap();
            let dt = t0.elapsed();
            println!(
                "n={n} {name}: V={:.10} est={:.2e} in {:?}",
                v.value, v.error_estimate, dt
            );
        }
    }
    let p = build_symmetric_polygon(SymmetricPolygonSpec { n: 6, angle: None }).unwrap();
    let spec = QuadratureSpec::default();
    let t0 = Instant::now();
    let reps = 5;
    for _ in 0..reps {
        let _ = best_effort(self_energy(&p, &params, &spec)).unwrap();
    }
    println!("hexagon default amortized: {:?}", t0.elapsed() / reps);
}
