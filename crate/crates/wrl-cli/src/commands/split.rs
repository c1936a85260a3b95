//! `wrl split` — compares one unit mass against the same mass divided into
//! far-apart pieces (no cross interaction), both evaluated through the
//! scaling identity on the unit-area equilibrium shape, across a sweep of
//! coupling strengths; brackets the crossing where splitting starts to win.

use clap::Args;
use serde_json::json;

use wrl_core::minimize::{split_comparison, Winner};
use wrl_core::render::{loglog_chart, Series};

use crate::config::{parse_float_list, parse_log_sweep};
use crate::errors::CliError;
use crate::output::num;
use crate::quad::{resolve_quadrature, QuadArgs};
use crate::shape::{resolve_tension, TensionArgs, TensionFallback};
use crate::Ctx;

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub tension: TensionArgs,

    #[command(flatten)]
    pub quad: QuadArgs,

    /// Mass fractions of the far-apart pieces, comma separated; must sum
    /// to 1.
    #[arg(long, value_name = "M1,M2,...")]
    pub fractions: Option<String>,

    /// Single coupling strength instead of a sweep.
    #[arg(long, value_name = "GAMMA", conflicts_with = "gamma_sweep")]
    pub gamma: Option<f64>,

    /// Couplings as lo:hi:count (log spaced).
    #[arg(long, value_name = "LO:HI:K")]
    pub gamma_sweep: Option<String>,
}

fn winner_name(w: Winner) -> &'static str {
    match w {
        Winner::Single => "single",
        Winner::Split => "split",
        Winner::Tie => "tie",
    }
}

pub fn run(args: &SplitArgs, ctx: &Ctx) -> Result<String, CliError> {
    let layers = ctx.layers();
    let (tension, tension_echo) =
        resolve_tension(&args.tension, &layers, TensionFallback::Regular(4))?;
    let (params, spec, quad_echo) = resolve_quadrature(&args.quad, &layers)?;
    let fractions_text = layers
        .opt_string("fractions", args.fractions.as_deref())
        .unwrap_or_else(|| "0.5,0.5".to_string());
    let fractions = parse_float_list(&fractions_text)?;

    let gammas: Vec<f64> = match (args.gamma, layers.opt_string("gamma_sweep", args.gamma_sweep.as_deref())) {
        (Some(g), _) => vec![g],
        (None, Some(text)) => parse_log_sweep(&text)?,
        (None, None) => match layers.opt_f64("gamma", None) {
            Some(g) => vec![g],
            None => parse_log_sweep("1e-2:1e2:25")?,
        },
    };

    let mut rows = Vec::with_capacity(gammas.len());
    let mut reports = Vec::with_capacity(gammas.len());
    for &gamma in &gammas {
        let r = split_comparison(&tension, gamma, &fractions, &params, &spec)?;
        rows.push(vec![
            num(gamma),
            num(r.single_energy),
            num(r.split_energy),
            winner_name(r.winner).to_string(),
        ]);
        reports.push(r);
    }
    ctx.run.write_csv(&["gamma", "single_energy", "split_energy", "winner"], &rows)?;

    // Bracket the first change of winner along the sweep.
    let mut crossing: Option<(f64, f64)> = None;
    for pair in reports.windows(2) {
        if pair[0].winner != pair[1].winner {
            crossing = Some((pair[0].gamma, pair[1].gamma));
            break;
        }
    }

    let svg = loglog_chart(
        &[
            Series {
                points: reports.iter().map(|r| (r.gamma, r.single_energy)).collect(),
                color: "#1a4f8a".into(),
                label: "single mass".into(),
                connect: true,
            },
            Series {
                points: reports.iter().map(|r| (r.gamma, r.split_energy)).collect(),
                color: "#c2452d".into(),
                label: "far-apart pieces".into(),
                connect: true,
            },
        ],
        "single mass vs far-apart pieces",
        "gamma",
        "energy",
        720,
        520,
    );
    ctx.run.write_svg(&svg)?;

    let config = json!({
        "tension": tension_echo,
        "quadrature": quad_echo,
        "fractions": fractions,
    });
    let results = json!({
        "rows": reports,
        "winner_at_low": winner_name(reports[0].winner),
        "winner_at_high": winner_name(reports[reports.len() - 1].winner),
        "crossing_bracket": crossing,
    });
    ctx.write_summary(config, results)?;

    Ok(match crossing {
        Some((lo, hi)) => format!(
            "winner changes from {} to {} between gamma {lo:.4e} and {hi:.4e}",
            winner_name(reports[0].winner),
            winner_name(reports[reports.len() - 1].winner)
        ),
        None => format!(
            "winner is {} across all {} couplings",
            winner_name(reports[0].winner),
            gammas.len()
        ),
    })
}
