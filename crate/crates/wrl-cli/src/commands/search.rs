//! `wrl search-critical` — multi-start descent of the criticality surrogate
//! over unit-area n-gons, reporting near-critical candidates and whether
//! each belongs to the symmetric equilateral family.

use clap::Args;
use serde_json::json;

use wrl_core::anisotropy::{build_symmetric_polygon, SymmetricPolygonSpec};
use wrl_core::minimize::{search_noncritical, SearchOptions};
use wrl_core::render::{polygon_scene, PolygonStyle};

use crate::errors::CliError;
use crate::output::num;
use crate::quad::{resolve_quadrature, QuadArgs};
use crate::Ctx;

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub quad: QuadArgs,

    /// Number of sides of the candidate polygons.
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,

    /// Number of random starting polygons.
    #[arg(long, value_name = "N")]
    pub starts: Option<usize>,

    /// Iteration cap per start.
    #[arg(long, value_name = "N")]
    pub max_iters: Option<usize>,

    /// Candidates are reported below this criticality residual.
    #[arg(long, value_name = "TOL")]
    pub report_tol: Option<f64>,

    /// Also start from the regular n-gon (a known family member).
    #[arg(long)]
    pub include_family: bool,
}

pub fn run(args: &SearchArgs, ctx: &Ctx) -> Result<String, CliError> {
    let layers = ctx.layers();
    let (params, spec, quad_echo) = resolve_quadrature(&args.quad, &layers)?;
    let n = layers.usize("n", args.n, 5);
    let include_family = layers.switch("include_family", args.include_family);

    let mut opts = SearchOptions {
        num_starts: layers.usize("starts", args.starts, 6),
        max_iters: layers.usize("max_iters", args.max_iters, 40),
        report_tol: layers.f64("report_tol", args.report_tol, 1e-3),
        seed: ctx.seed,
        seeds: Vec::new(),
    };
    if include_family {
        opts.seeds.push(build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None })?);
    }

    let candidates = search_noncritical(n, &params, &spec, &opts)?;

    let rows: Vec<Vec<String>> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                i.to_string(),
                num(c.residual),
                num(c.surrogate),
                c.membership.is_member.to_string(),
                num(c.membership.symmetry_defect),
                num(c.membership.side_length_spread),
                c.descent_monotone.to_string(),
            ]
        })
        .collect();
    ctx.run.write_csv(
        &[
            "candidate",
            "residual",
            "surrogate",
            "family_member",
            "symmetry_defect",
            "side_length_spread",
            "descent_monotone",
        ],
        &rows,
    )?;

    // Draw up to three candidates side by side.
    let palette = ["#1a4f8a", "#c2452d", "#3a7d44"];
    let shown: Vec<_> = candidates
        .iter()
        .take(3)
        .enumerate()
        .map(|(i, c)| {
            let label = format!("candidate {i}, residual {:.2e}", c.residual);
            (
                c.polygon.translated(wrl_core::geometry::Vec2::new(2.6 * i as f64, 0.0)),
                PolygonStyle::outline(palette[i % palette.len()]).labeled(&label),
            )
        })
        .collect();
    let items: Vec<(&wrl_core::ConvexPolygon, PolygonStyle)> =
        shown.iter().map(|(p, s)| (p, s.clone())).collect();
    let svg = if items.is_empty() {
        polygon_scene(
            &[(
                &build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None })?,
                PolygonStyle::outline("#888888").labeled("no candidates; regular reference"),
            )],
            720,
        )
    } else {
        polygon_scene(&items, 720)
    };
    ctx.run.write_svg(&svg)?;

    let config = json!({
        "quadrature": quad_echo,
        "n": n,
        "starts": opts.num_starts,
        "max_iters": opts.max_iters,
        "report_tol": opts.report_tol,
        "include_family": include_family,
    });
    let outside = candidates.iter().filter(|c| !c.membership.is_member).count();
    let results = json!({
        "num_candidates": candidates.len(),
        "num_outside_family": outside,
        "candidates": candidates,
    });
    ctx.write_summary(config, results)?;

    Ok(format!(
        "{} near-critical candidates below residual {:.1e}; {} outside the symmetric family",
        candidates.len(),
        opts.report_tol,
        outside
    ))
}
