//! `wrl rigidity` — splits a polygon's sides into those pinned by the
//! surface tension (normal matches an equilibrium-shape normal) and the
//! free remainder, where a local minimizer must level the potential; reports
//! the potential spread over the free sides and the implied level.

use clap::Args;
use serde_json::json;

use wrl_core::minimize::rigidity_diagnostic_with_sampling;
use wrl_core::render::{polygon_scene, PolygonStyle};

use crate::errors::CliError;
use crate::output::num;
use crate::quad::{resolve_quadrature, QuadArgs};
use crate::shape::{resolve_shape, resolve_tension, ShapeArgs, TensionArgs, TensionFallback};
use crate::Ctx;

#[derive(Debug, Clone, Args)]
pub struct RigidityArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,

    #[command(flatten)]
    pub tension: TensionArgs,

    #[command(flatten)]
    pub quad: QuadArgs,

    /// Angular tolerance (radians) for matching side normals to
    /// equilibrium-shape normals.
    #[arg(long, value_name = "RADIANS")]
    pub angular_tol: Option<f64>,

    /// Potential samples per free side before extrema polishing.
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
}

pub fn run(args: &RigidityArgs, ctx: &Ctx) -> Result<String, CliError> {
    let layers = ctx.layers();
    let (polygon, shape_echo) = resolve_shape(&args.shape, &layers)?;
    let (tension, tension_echo) =
        resolve_tension(&args.tension, &layers, TensionFallback::Regular(4))?;
    let (params, spec, quad_echo) = resolve_quadrature(&args.quad, &layers)?;
    let angular_tol = layers.f64("angular_tol", args.angular_tol, 1e-6);
    if !(angular_tol > 0.0) {
        return Err(CliError::Config(format!(
            "angular tol must be positive, got {angular_tol}"
        )));
    }
    let samples = layers.usize("samples", args.samples, 24);

    let report = rigidity_diagnostic_with_sampling(
        &polygon, &tension, &params, &spec, angular_tol, samples,
    );

    let wulff = tension.wulff_shape();
    let wulff_normals: Vec<_> = wulff.sides().iter().map(|s| s.normal).collect();
    let rows: Vec<Vec<String>> = polygon
        .sides()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let gap = wulff_normals
                .iter()
                .map(|w| s.normal.dot(w).clamp(-1.0, 1.0).acos())
                .fold(f64::MAX, f64::min);
            vec![
                i.to_string(),
                num(s.normal.y.atan2(s.normal.x)),
                num(gap),
                report.gamma_aligned_sides.contains(&i).to_string(),
            ]
        })
        .collect();
    ctx.run.write_csv(&["side", "normal_angle", "min_gap_to_equilibrium_normal", "aligned"], &rows)?;

    let svg = polygon_scene(
        &[
            (&polygon, PolygonStyle::filled("#1a4f8a", "#9db8d9").labeled("shape")),
            (&wulff, PolygonStyle::outline("#c2452d").labeled("equilibrium shape")),
        ],
        640,
    );
    ctx.run.write_svg(&svg)?;

    let config = json!({
        "shape": shape_echo,
        "tension": tension_echo,
        "quadrature": quad_echo,
        "angular_tol": angular_tol,
        "samples": samples,
    });
    let results = json!({
        "aligned_sides": report.gamma_aligned_sides,
        "free_sides": report.free_sides,
        "potential_spread": report.potential_spread,
        "potential_level_estimate": report.v0_estimate,
    });
    ctx.write_summary(config, results)?;

    Ok(format!(
        "{} aligned sides, {} free; potential spread on free sides {:.4e}{}",
        report.gamma_aligned_sides.len(),
        report.free_sides.len(),
        report.potential_spread,
        match report.v0_estimate {
            Some(v) => format!(", level estimate {v:.6}"),
            None => String::new(),
        }
    ))
}
