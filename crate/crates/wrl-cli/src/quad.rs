//! Shared kernel and quadrature flags: the Riesz exponent plus the knobs of
//! the deterministic quadrature (preset, depth, order, tolerance).

use clap::Args;
use serde_json::{json, Value};

use wrl_core::riesz::QuadratureSpec;
use wrl_core::RieszParams;

use crate::config::Layers;
use crate::errors::CliError;

#[derive(Debug, Clone, Args)]
pub struct QuadArgs {
    /// Riesz exponent in (0.01, 1.99).
    #[arg(long, value_name = "ALPHA")]
    pub alpha: Option<f64>,

    /// Cheap quadrature preset for interactive use.
    #[arg(long)]
    pub coarse: bool,

    /// Refinement depth override (also raises angular/line orders).
    #[arg(long, value_name = "N")]
    pub depth: Option<usize>,

    /// Gauss-Legendre base order override.
    #[arg(long, value_name = "N")]
    pub order: Option<usize>,

    /// Relative error target checked against the refinement estimate.
    #[arg(long, value_name = "TOL")]
    pub rel_tol: Option<f64>,
}

/// Resolves the exponent and quadrature controls with the usual precedence
/// (flag, then config-file section, then default) and returns them with a
/// JSON echo for the summary's config block.
pub fn resolve_quadrature(
    args: &QuadArgs,
    layers: &Layers,
) -> Result<(RieszParams, QuadratureSpec, Value), CliError> {
    let alpha = layers.f64("alpha", args.alpha, 1.0);
    let params = RieszParams::new(alpha)?;
    let coarse = layers.switch("coarse", args.coarse);
    let mut spec = if coarse { QuadratureSpec::coarse() } else { QuadratureSpec::default() };
    if let Some(d) = layers.opt_usize("depth", args.depth) {
        spec.refinement_depth = d;
    }
    if let Some(o) = layers.opt_usize("order", args.order) {
        if o < 2 {
            return Err(CliError::Config(format!("quadrature order must be at least 2, got {o}")));
        }
        spec.base_order = o;
    }
    if let Some(t) = layers.opt_f64("rel_tol", args.rel_tol) {
        if !(t > 0.0) {
            return Err(CliError::Config(format!("rel tol must be positive, got {t}")));
        }
        spec.target_rel_tol = t;
    }
    let echo = json!({
        "alpha": alpha,
        "coarse": coarse,
        "base_order": spec.base_order,
        "refinement_depth": spec.refinement_depth,
        "target_rel_tol": spec.target_rel_tol,
    });
    Ok((params, spec, echo))
}
