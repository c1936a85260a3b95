//! `wrl minimize` — multi-start projected descent of the total energy over
//! bounded side translations at fixed area, either at fixed coupling
//! strengths or, with `--threshold`, estimating the coupling below which
//! the base shape persists as the in-class minimizer.

use clap::Args;
use serde_json::json;

use wrl_core::minimize::{
    gamma_threshold_estimate, minimize_over_class, SolverOptions, ThresholdOptions,
};
use wrl_core::render::{loglog_chart, overlay_svg, Series};
use wrl_core::VariationFrame;

use crate::config::parse_log_sweep;
use crate::errors::CliError;
use crate::output::num;
use crate::quad::{resolve_quadrature, QuadArgs};
use crate::shape::{resolve_shape, resolve_tension, ShapeArgs, TensionArgs, TensionFallback};
use crate::Ctx;

#[derive(Debug, Clone, Args)]
pub struct MinimizeArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,

    #[command(flatten)]
    pub tension: TensionArgs,

    #[command(flatten)]
    pub quad: QuadArgs,

    /// Coupling strength (single run).
    #[arg(long, value_name = "GAMMA", conflicts_with = "gamma_sweep")]
    pub gamma: Option<f64>,

    /// Couplings as lo:hi:count (log spaced).
    #[arg(long, value_name = "LO:HI:K")]
    pub gamma_sweep: Option<String>,

    /// Displacement bound; default: half the feasible maximum.
    #[arg(long, value_name = "EPS")]
    pub epsilon: Option<f64>,

    /// Number of descent starts (zero start plus random).
    #[arg(long, value_name = "N")]
    pub starts: Option<usize>,

    /// Iteration cap per start.
    #[arg(long, value_name = "N")]
    pub max_iters: Option<usize>,

    /// Projected-gradient convergence tolerance.
    #[arg(long, value_name = "TOL")]
    pub tol: Option<f64>,

    /// Estimate the persistence threshold instead of minimizing at fixed
    /// couplings.
    #[arg(long)]
    pub threshold: bool,

    /// Threshold mode: first coupling probed.
    #[arg(long, value_name = "GAMMA")]
    pub gamma_start: Option<f64>,

    /// Threshold mode: largest coupling probed.
    #[arg(long, value_name = "GAMMA")]
    pub gamma_max: Option<f64>,

    /// Threshold mode: sup-norm displacement below which the base persists.
    #[arg(long, value_name = "TOL")]
    pub predicate_tol: Option<f64>,

    /// Threshold mode: bisection rounds on the bracket.
    #[arg(long, value_name = "N")]
    pub bisections: Option<usize>,
}

pub fn run(args: &MinimizeArgs, ctx: &Ctx) -> Result<String, CliError> {
    let layers = ctx.layers();
    let (polygon, shape_echo) = resolve_shape(&args.shape, &layers)?;
    let (tension, tension_echo) =
        resolve_tension(&args.tension, &layers, TensionFallback::OwnShape(&polygon))?;
    let (params, spec, quad_echo) = resolve_quadrature(&args.quad, &layers)?;

    let frame = VariationFrame::new(&polygon);
    let max_eps = frame.max_feasible_epsilon();
    let epsilon = layers.f64("epsilon", args.epsilon, 0.5 * max_eps);
    if !(epsilon > 0.0) {
        return Err(CliError::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let solver = SolverOptions {
        max_iters: layers.usize("max_iters", args.max_iters, 80),
        tol: layers.f64("tol", args.tol, 1e-6),
        num_starts: layers.usize("starts", args.starts, 10),
        seed: ctx.seed,
    };

    let base_config = json!({
        "shape": shape_echo,
        "tension": tension_echo,
        "quadrature": quad_echo,
        "epsilon": epsilon,
        "starts": solver.num_starts,
        "max_iters": solver.max_iters,
        "tol": solver.tol,
    });

    if layers.switch("threshold", args.threshold) {
        let opts = ThresholdOptions {
            gamma_start: layers.f64("gamma_start", args.gamma_start, 1e-4),
            gamma_max: layers.f64("gamma_max", args.gamma_max, 1e3),
            predicate_tol: layers.f64("predicate_tol", args.predicate_tol, 1e-4),
            bisections: layers.usize("bisections", args.bisections, 10),
            solver,
        };
        let report = gamma_threshold_estimate(&polygon, &tension, epsilon, &params, &spec, &opts)?;

        let rows: Vec<Vec<String>> = report
            .tested
            .iter()
            .map(|s| vec![num(s.gamma), num(s.d_star_sup), s.base_persists.to_string()])
            .collect();
        ctx.run.write_csv(&["gamma", "d_star_sup", "base_persists"], &rows)?;

        let svg = loglog_chart(
            &[Series {
                points: report.tested.iter().map(|s| (s.gamma, s.d_star_sup)).collect(),
                color: "#1a4f8a".into(),
                label: "minimizer displacement".into(),
                connect: false,
            }],
            "displacement of the in-class minimizer vs coupling",
            "gamma",
            "sup displacement",
            720,
            520,
        );
        ctx.run.write_svg(&svg)?;

        let mut config = base_config;
        config["threshold"] = json!({
            "gamma_start": opts.gamma_start,
            "gamma_max": opts.gamma_max,
            "predicate_tol": opts.predicate_tol,
            "bisections": opts.bisections,
        });
        let results = json!({
            "gamma_hat": report.gamma_hat,
            "bracket": report.bracket,
            "transition_found": report.transition_found,
            "tested": report.tested,
        });
        ctx.write_summary(config, results)?;

        return Ok(match (report.transition_found, report.gamma_hat) {
            (true, Some(g)) => format!(
                "persistence threshold near gamma = {g:.6e} (bracket {:?})",
                report.bracket
            ),
            _ => format!(
                "no persistence transition found over the probed range (bracket {:?})",
                report.bracket
            ),
        });
    }

    let gammas: Vec<f64> = match layers.opt_string("gamma_sweep", args.gamma_sweep.as_deref()) {
        Some(text) => parse_log_sweep(&text)?,
        None => vec![layers.f64("gamma", args.gamma, 1.0)],
    };

    let mut rows = Vec::with_capacity(gammas.len());
    let mut runs = Vec::with_capacity(gammas.len());
    let mut last_result = None;
    for &gamma in &gammas {
        let r = minimize_over_class(&polygon, &tension, gamma, epsilon, &params, &spec, &solver)?;
        rows.push(vec![
            num(gamma),
            num(r.sup_norm()),
            num(r.energy_at_zero.total),
            num(r.energy_at_dstar.total),
            r.converged.to_string(),
            r.iterations.to_string(),
        ]);
        runs.push(json!({
            "gamma": gamma,
            "sup_norm": r.sup_norm(),
            "d_star": r.d_star.d,
            "epsilon_used": r.d_star.epsilon,
            "energy_at_zero": r.energy_at_zero,
            "energy_at_dstar": r.energy_at_dstar,
            "converged": r.converged,
            "iterations": r.iterations,
            "start_records": r.start_records,
        }));
        last_result = Some(r);
    }
    ctx.run.write_csv(
        &["gamma", "d_star_sup", "energy_at_zero", "energy_at_dstar", "converged", "iterations"],
        &rows,
    )?;

    let last = last_result.expect("at least one coupling");
    let minimizer = frame
        .polygon_from_offsets(&last.d_star.d)
        .map_err(wrl_core::minimize::MinimizeError::Variation)?;
    ctx.run.write_svg(&overlay_svg(&polygon, &minimizer, 640))?;

    let results = json!({ "runs": runs });
    ctx.write_summary(base_config, results)?;

    let moved = last.sup_norm();
    Ok(if gammas.len() == 1 {
        format!(
            "gamma {}: minimizer displacement {moved:.3e}, energy {:.8} (base {:.8})",
            gammas[0], last.energy_at_dstar.total, last.energy_at_zero.total
        )
    } else {
        format!(
            "{} couplings swept; at gamma {} displacement {moved:.3e}",
            gammas.len(),
            gammas[gammas.len() - 1]
        )
    })
}
