//! `wrl energy` — total energy of one polygon: anisotropic perimeter plus
//! gamma times the Riesz self interaction, with the closed-form potential
//! and interaction bounds and the mass-scaling identity as cross checks.

use clap::Args;
use serde_json::json;

use wrl_core::minimize::{mass_scaling_check, total_energy};
use wrl_core::render::{polygon_scene, PolygonStyle};
use wrl_core::riesz::{analytic_bounds, potential};

use crate::errors::CliError;
use crate::output::num;
use crate::quad::{resolve_quadrature, QuadArgs};
use crate::shape::{resolve_shape, resolve_tension, ShapeArgs, TensionArgs, TensionFallback};
use crate::Ctx;

#[derive(Debug, Clone, Args)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,

    #[command(flatten)]
    pub tension: TensionArgs,

    #[command(flatten)]
    pub quad: QuadArgs,

    /// Coupling strength of the nonlocal term.
    #[arg(long, value_name = "GAMMA")]
    pub gamma: Option<f64>,
}

pub fn run(args: &EnergyArgs, ctx: &Ctx) -> Result<String, CliError> {
    let layers = ctx.layers();
    let (polygon, shape_echo) = resolve_shape(&args.shape, &layers)?;
    let (tension, tension_echo) =
        resolve_tension(&args.tension, &layers, TensionFallback::OwnShape(&polygon))?;
    let (params, spec, quad_echo) = resolve_quadrature(&args.quad, &layers)?;
    let gamma = layers.f64("gamma", args.gamma, 1.0);

    let report = total_energy(&polygon, &tension, gamma, &params, &spec)?;
    let bounds = analytic_bounds(&polygon, &polygon, &params);
    let centroid_potential = potential(&polygon, polygon.centroid(), &params, &spec);
    let scaling = mass_scaling_check(&polygon, &tension, gamma, &params, &spec)?;

    let sides = polygon.sides();
    let rows: Vec<Vec<String>> = sides
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i.to_string(),
                num(s.length),
                num(s.normal.x),
                num(s.normal.y),
                num(tension.value(s.normal)),
            ]
        })
        .collect();
    ctx.run.write_csv(&["side", "length", "normal_x", "normal_y", "psi"], &rows)?;

    let w = tension.wulff_shape();
    let svg = polygon_scene(
        &[
            (&polygon, PolygonStyle::filled("#1a4f8a", "#9db8d9").labeled("shape")),
            (&w, PolygonStyle::outline("#c2452d").labeled("equilibrium shape")),
        ],
        640,
    );
    ctx.run.write_svg(&svg)?;

    let config = json!({
        "shape": shape_echo,
        "tension": tension_echo,
        "quadrature": quad_echo,
        "gamma": gamma,
    });
    let results = json!({
        "perimeter_term": report.perimeter_term,
        "nonlocal_term": { "value": report.nonlocal_term.value,
                           "error_estimate": report.nonlocal_term.error_estimate },
        "total": report.total,
        "area": polygon.area(),
        "analytic_bounds": {
            "potential_sup": bounds.potential_sup,
            "interaction": bounds.interaction,
            "lipschitz_factor": bounds.lipschitz_factor,
        },
        "centroid_potential": centroid_potential.value,
        "centroid_potential_within_bound": centroid_potential.value <= bounds.potential_sup,
        "nonlocal_within_bound": report.nonlocal_term.value <= bounds.interaction,
        "mass_scaling": {
            "mass": scaling.mass,
            "lhs": scaling.lhs,
            "rhs": scaling.rhs,
            "rel_err": scaling.rel_err,
        },
    });
    ctx.write_summary(config, results)?;

    Ok(format!(
        "total {:.8} = perimeter {:.8} + gamma {} x nonlocal {:.8} (est err {:.1e})",
        report.total, report.perimeter_term, gamma, report.nonlocal_term.value,
        report.nonlocal_term.error_estimate
    ))
}
