//! `wrl criticality` — side averages of the interaction potential and the
//! normalized residual whose vanishing characterizes criticality for
//! area-preserving side translations.

use clap::Args;
use serde_json::json;

use wrl_core::render::{polygon_scene, PolygonStyle};
use wrl_core::variation::criticality_residual;

use crate::errors::CliError;
use crate::output::num;
use crate::quad::{resolve_quadrature, QuadArgs};
use crate::shape::{resolve_shape, ShapeArgs};
use crate::Ctx;

#[derive(Debug, Clone, Args)]
pub struct CriticalityArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,

    #[command(flatten)]
    pub quad: QuadArgs,

    /// Residual below which the shape is reported as critical.
    #[arg(long, value_name = "TOL")]
    pub tol: Option<f64>,
}

pub fn run(args: &CriticalityArgs, ctx: &Ctx) -> Result<String, CliError> {
    let layers = ctx.layers();
    let (polygon, shape_echo) = resolve_shape(&args.shape, &layers)?;
    let (params, spec, quad_echo) = resolve_quadrature(&args.quad, &layers)?;
    let tol = layers.f64("tol", args.tol, 1e-4);
    if !(tol > 0.0) {
        return Err(CliError::Config(format!("tol must be positive, got {tol}")));
    }

    let report = criticality_residual(&polygon, &params, &spec);
    let mean = report.side_averages.iter().sum::<f64>() / report.side_averages.len() as f64;
    let critical = report.residual <= tol;

    let rows: Vec<Vec<String>> = report
        .side_averages
        .iter()
        .enumerate()
        .map(|(i, &a)| vec![i.to_string(), num(a), num(a - mean)])
        .collect();
    ctx.run.write_csv(&["side", "average_potential", "deviation_from_mean"], &rows)?;

    let label = format!("residual {:.3e}", report.residual);
    let svg = polygon_scene(
        &[(&polygon, PolygonStyle::filled("#1a4f8a", "#9db8d9").labeled(&label))],
        640,
    );
    ctx.run.write_svg(&svg)?;

    let config = json!({ "shape": shape_echo, "quadrature": quad_echo, "tol": tol });
    let results = json!({
        "side_averages": report.side_averages,
        "mean_side_average": mean,
        "residual": report.residual,
        "quadrature_error": report.quadrature_error,
        "critical_at_tol": critical,
    });
    ctx.write_summary(config, results)?;

    Ok(format!(
        "criticality residual {:.3e} (quadrature error {:.1e}) -> {}",
        report.residual,
        report.quadrature_error,
        if critical { "critical at tol" } else { "not critical at tol" }
    ))
}
