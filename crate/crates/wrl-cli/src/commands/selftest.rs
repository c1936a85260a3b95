//! `wrl selftest` — deterministic health checks of the numerical kernels
//! against frozen references, closed-form identities, and the independent
//! sampling oracle. All randomness is internally seeded, so the results
//! section is identical from run to run and across worker counts; any
//! failing check exits with code 3 after the artifacts are written.

use clap::Args;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use wrl_core::anisotropy::{build_symmetric_polygon, verify_class_membership, SymmetricPolygonSpec};
use wrl_core::geometry::Vec2;
use wrl_core::minimize::{split_comparison, Winner};
use wrl_core::qmc::self_energy_oracle;
use wrl_core::render::{polygon_scene, PolygonStyle};
use wrl_core::riesz::{interaction, potential, riesz_constant, self_energy, QuadratureSpec};
use wrl_core::variation::{criticality_residual, first_variation_analytic, reduced_nonlocal};
use wrl_core::{ConvexPolygon, CrystallineTension, RieszParams, VariationFrame};

use crate::errors::CliError;
use crate::output::num;
use crate::Ctx;

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {}

struct Check {
    name: &'static str,
    passed: bool,
    observed: f64,
    bound: f64,
    detail: String,
}

fn unit_square() -> ConvexPolygon {
    ConvexPolygon::new(vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ])
    .expect("unit square")
}

fn right_triangle() -> ConvexPolygon {
    ConvexPolygon::new(vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0)])
        .expect("right triangle")
        .centered()
}

fn trapezoid_unit_area() -> ConvexPolygon {
    let p = ConvexPolygon::new(vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(2.0, 0.0),
        Vec2::new(0.8, 1.0),
        Vec2::new(0.0, 1.0),
    ])
    .expect("trapezoid");
    let s = p.area().sqrt().recip();
    p.centered().scaled(s)
}

pub fn run(_args: &SelftestArgs, ctx: &Ctx) -> Result<String, CliError> {
    let spec = QuadratureSpec::default();
    let coarse = QuadratureSpec::coarse();
    let a_half = RieszParams::new(0.5).expect("alpha 0.5");
    let a_one = RieszParams::new(1.0).expect("alpha 1");
    let square = unit_square();
    let mut checks: Vec<Check> = Vec::new();

    // Frozen self-energy references for the unit square.
    for (alpha, expect) in [(1.0, 2.9732095982473787f64), (1.9, 56.533481912459508f64)] {
        let p = RieszParams::new(alpha).expect("valid alpha");
        let v = self_energy(&square, &p, &spec)?;
        let rel = (v.value - expect).abs() / expect;
        checks.push(Check {
            name: if alpha == 1.0 { "square_self_energy_reference" } else { "square_self_energy_strong_exponent" },
            passed: rel < 1e-8,
            observed: rel,
            bound: 1e-8,
            detail: format!("V = {} vs reference {expect} at exponent {alpha}", v.value),
        });
    }

    // Homogeneity: V(lambda E) = lambda^(4 - alpha) V(E).
    {
        let v1 = self_energy(&square, &a_half, &spec)?;
        let v2 = self_energy(&square.scaled(2.0), &a_half, &spec)?;
        let predicted = 2.0f64.powf(4.0 - 0.5) * v1.value;
        let rel = (v2.value - predicted).abs() / predicted;
        checks.push(Check {
            name: "self_energy_scaling_law",
            passed: rel < 1e-6,
            observed: rel,
            bound: 1e-6,
            detail: format!("V(2E) = {} vs lambda^(4-alpha) V(E) = {predicted}", v2.value),
        });
    }

    // Pair interaction is symmetric bit for bit.
    {
        let tri = right_triangle().translated(Vec2::new(2.5, 0.3));
        let ab = interaction(&square, &tri, &a_one, &coarse)?;
        let ba = interaction(&tri, &square, &a_one, &coarse)?;
        let equal = ab.value == ba.value;
        checks.push(Check {
            name: "interaction_symmetry_bit_exact",
            passed: equal,
            observed: (ab.value - ba.value).abs(),
            bound: 0.0,
            detail: format!("I(E,F) = {}, I(F,E) = {}", ab.value, ba.value),
        });
    }

    // Frozen potential reference at the square's center.
    {
        let expect = 3.5254943480781721f64;
        let v = potential(&square, Vec2::new(0.5, 0.5), &a_one, &spec);
        let rel = (v.value - expect).abs() / expect;
        checks.push(Check {
            name: "potential_center_reference",
            passed: rel < 1e-10,
            observed: rel,
            bound: 1e-10,
            detail: format!("v_E(center) = {} vs reference {expect}", v.value),
        });
    }

    // Sharp potential bound c |E|^(1 - alpha/2).
    {
        let mut worst = f64::MIN;
        for alpha in [0.5, 1.0, 1.5] {
            let p = RieszParams::new(alpha).expect("valid alpha");
            let bound = riesz_constant(alpha); // |E| = 1
            let v = potential(&square, square.centroid(), &p, &spec);
            worst = worst.max(v.value / bound);
        }
        checks.push(Check {
            name: "potential_respects_sharp_bound",
            passed: worst <= 1.0,
            observed: worst,
            bound: 1.0,
            detail: "max over exponents of potential(centroid) / bound".into(),
        });
    }

    // Criticality residuals: square and hexagon vanish, the right triangle
    // vanishes by the translation identity, the trapezoid does not vanish.
    {
        let r = criticality_residual(&square, &a_one, &spec);
        checks.push(Check {
            name: "square_criticality_residual",
            passed: r.residual < 1e-6,
            observed: r.residual,
            bound: 1e-6,
            detail: format!("quadrature error {:.1e}", r.quadrature_error),
        });
        let hexagon = build_symmetric_polygon(SymmetricPolygonSpec { n: 6, angle: None })?;
        let rh = criticality_residual(&hexagon, &a_one, &spec);
        checks.push(Check {
            name: "hexagon_criticality_residual",
            passed: rh.residual < 1e-6,
            observed: rh.residual,
            bound: 1e-6,
            detail: format!("quadrature error {:.1e}", rh.quadrature_error),
        });
        let rt = criticality_residual(&right_triangle(), &a_one, &spec);
        checks.push(Check {
            name: "triangle_translation_identity",
            passed: rt.residual < 1e-10,
            observed: rt.residual,
            bound: 1e-10,
            detail: "every triangle is critical: offsets act as translations".into(),
        });
        let rz = criticality_residual(&trapezoid_unit_area(), &a_one, &spec);
        checks.push(Check {
            name: "trapezoid_is_not_critical",
            passed: rz.residual > 1e-2,
            observed: rz.residual,
            bound: 1e-2,
            detail: "a lopsided shape must show a visible residual".into(),
        });
    }

    // Area restoration across random bounded offsets.
    {
        let pentagon = build_symmetric_polygon(SymmetricPolygonSpec { n: 5, angle: None })?;
        let frame = VariationFrame::new(&pentagon);
        let eps = frame.max_feasible_epsilon();
        let base_area = pentagon.area();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let d: Vec<f64> = (0..frame.num_sides() - 1)
                .map(|_| rng.random_range(-0.1 * eps..0.1 * eps))
                .collect();
            let (q, _) = frame.restored_polygon(&d)?;
            worst = worst.max((q.area() - base_area).abs());
        }
        checks.push(Check {
            name: "area_restoration",
            passed: worst < 1e-12,
            observed: worst,
            bound: 1e-12,
            detail: "20 random bounded offsets, compensating side restores area".into(),
        });
    }

    // Closed-form first variation against a centered difference.
    {
        let trap = trapezoid_unit_area();
        let frame = VariationFrame::new(&trap);
        let dim = frame.num_sides() - 1;
        let h = 1e-3;
        let mut dp = vec![0.0; dim];
        dp[0] = h;
        let mut dm = vec![0.0; dim];
        dm[0] = -h;
        let vp = reduced_nonlocal(&trap, &dp, &a_one, &spec)?;
        let vm = reduced_nonlocal(&trap, &dm, &a_one, &spec)?;
        let fd = (vp.value - vm.value) / (2.0 * h);
        let an = first_variation_analytic(&trap, 0, frame.num_sides() - 1, &a_one, &spec)?;
        let rel = (fd - an).abs() / an.abs().max(1e-12);
        checks.push(Check {
            name: "first_variation_closed_form",
            passed: rel < 1e-3,
            observed: rel,
            bound: 1e-3,
            detail: format!("finite difference {fd} vs closed form {an}"),
        });
    }

    // Tension <-> equilibrium-shape round trip.
    {
        let hexagon = build_symmetric_polygon(SymmetricPolygonSpec { n: 6, angle: None })?;
        let t = CrystallineTension::from_polygon(&hexagon)?;
        let w = t.wulff_shape();
        let defect = w.symmetric_difference_area(&CrystallineTension::from_polygon(&w)?.wulff_shape());
        let calib = (t.perimeter(&w) / (2.0 * w.area()) - 1.0).abs();
        checks.push(Check {
            name: "equilibrium_shape_roundtrip",
            passed: defect < 1e-9 && calib < 1e-12,
            observed: defect.max(calib),
            bound: 1e-9,
            detail: format!("roundtrip defect {defect:.1e}, calibration defect {calib:.1e}"),
        });
    }

    // The single-vs-split winner changes exactly once along the coupling
    // sweep (the comparison is affine vs affine in gamma).
    {
        let t = CrystallineTension::from_polygon(
            &build_symmetric_polygon(SymmetricPolygonSpec { n: 4, angle: None })?,
        )?;
        let gammas: Vec<f64> = (0..12)
            .map(|i| 1e-3 * (1e6f64).powf(i as f64 / 11.0))
            .collect();
        let mut winners = Vec::new();
        for &g in &gammas {
            winners.push(split_comparison(&t, g, &[0.5, 0.5], &a_one, &coarse)?.winner);
        }
        let flips = winners.windows(2).filter(|w| w[0] != w[1]).count();
        checks.push(Check {
            name: "split_crossing_is_unique",
            passed: flips == 1 && winners[0] == Winner::Single && winners[11] == Winner::Split,
            observed: flips as f64,
            bound: 1.0,
            detail: "single mass wins at weak coupling, pieces at strong".into(),
        });
    }

    // Independent sampling oracle agrees within 3 combined sigma.
    {
        let q = self_energy(&square, &a_one, &spec)?;
        let o = self_energy_oracle(&square, 1.0, 1 << 18, 2024);
        let diff = (q.value - o.value).abs();
        let three_sigma = 3.0 * (o.std_error + q.error_estimate);
        checks.push(Check {
            name: "sampling_oracle_agreement",
            passed: diff <= three_sigma,
            observed: diff,
            bound: three_sigma,
            detail: format!(
                "quadrature {} vs oracle {} (sigma {:.2e}, 2^18 points)",
                q.value, o.value, o.std_error
            ),
        });
    }

    // Family membership verdicts.
    {
        let pentagon = build_symmetric_polygon(SymmetricPolygonSpec { n: 5, angle: None })?;
        let member = verify_class_membership(&pentagon);
        let outsider = verify_class_membership(&trapezoid_unit_area());
        checks.push(Check {
            name: "family_membership_verdicts",
            passed: member.is_member && !outsider.is_member,
            observed: member.symmetry_defect.max(if outsider.is_member { 1.0 } else { 0.0 }),
            bound: 1e-9,
            detail: format!(
                "regular pentagon member: {}; trapezoid member: {}",
                member.is_member, outsider.is_member
            ),
        });
    }

    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                c.passed.to_string(),
                num(c.observed),
                num(c.bound),
            ]
        })
        .collect();
    ctx.run.write_csv(&["check", "passed", "observed", "bound"], &rows)?;

    let hexagon = build_symmetric_polygon(SymmetricPolygonSpec { n: 6, angle: None })?;
    let svg = polygon_scene(
        &[
            (&square, PolygonStyle::outline("#1a4f8a").labeled("square")),
            (
                &hexagon.translated(Vec2::new(2.2, 0.0)),
                PolygonStyle::outline("#c2452d").labeled("hexagon"),
            ),
            (
                &right_triangle().translated(Vec2::new(4.4, 0.0)),
                PolygonStyle::outline("#3a7d44").labeled("triangle"),
            ),
        ],
        720,
    );
    ctx.run.write_svg(&svg)?;

    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let all_passed = failed.is_empty();
    let results = json!({
        "all_passed": all_passed,
        "num_checks": checks.len(),
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "passed": c.passed,
            "observed": c.observed,
            "bound": c.bound,
            "detail": c.detail,
        })).collect::<Vec<_>>(),
    });
    let config = json!({ "note": "all checks use fixed internal seeds" });
    ctx.write_summary(config, results)?;

    if all_passed {
        Ok(format!("all {} checks passed", checks.len()))
    } else {
        Err(CliError::Numerical(format!(
            "selftest: {} of {} checks failed: {}",
            failed.len(),
            checks.len(),
            failed.join(", ")
        )))
    }
}
