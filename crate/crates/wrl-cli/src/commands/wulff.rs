//! `wrl wulff` — read a surface tension off a polygon's vertices, emit its
//! equilibrium shape, and verify the calibration identity (anisotropic
//! perimeter equals twice the area) together with the tension <-> shape
//! round trip.

use clap::Args;
use serde_json::json;

use wrl_core::geometry::Vec2;
use wrl_core::render::{polygon_scene, PolygonStyle};
use wrl_core::CrystallineTension;

use crate::errors::CliError;
use crate::output::num;
use crate::shape::{resolve_shape, ShapeArgs};
use crate::Ctx;

#[derive(Debug, Clone, Args)]
pub struct WulffArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,

    /// Number of support-function samples written to the CSV.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

pub fn run(args: &WulffArgs, ctx: &Ctx) -> Result<String, CliError> {
    let layers = ctx.layers();
    let (polygon, shape_echo) = resolve_shape(&args.shape, &layers)?;
    let generators = polygon.centered();
    let tension = CrystallineTension::from_polygon(&generators)?;
    let w = tension.wulff_shape();

    let area = w.area();
    let perimeter = tension.perimeter(&w);
    let calibration_ratio = perimeter / (2.0 * area);

    // Round trip: the equilibrium shape read back as a tension must
    // reproduce itself.
    let again = CrystallineTension::from_polygon(&w)?.wulff_shape();
    let roundtrip_defect = w.symmetric_difference_area(&again);

    // The equilibrium shape is the unit ball of the dual norm.
    let dual_defect = w
        .vertices()
        .iter()
        .map(|&v| (tension.dual_value(v) - 1.0).abs())
        .fold(0.0f64, f64::max);

    let samples = args.samples.max(8);
    let mut rows = Vec::with_capacity(samples);
    for k in 0..samples {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let dir = Vec2::new(theta.cos(), theta.sin());
        rows.push(vec![num(theta), num(tension.value(dir))]);
    }
    ctx.run.write_csv(&["theta", "psi"], &rows)?;

    let svg = polygon_scene(
        &[(&w, PolygonStyle::filled("#1a4f8a", "#9db8d9").labeled("equilibrium shape"))],
        640,
    );
    ctx.run.write_svg(&svg)?;

    let config = json!({ "shape": shape_echo, "samples": samples });
    let results = json!({
        "vertices": w.vertices().iter().map(|v| [v.x, v.y]).collect::<Vec<_>>(),
        "num_sides": w.num_sides(),
        "area": area,
        "anisotropic_perimeter": perimeter,
        "calibration_ratio": calibration_ratio,
        "roundtrip_defect": roundtrip_defect,
        "dual_unit_ball_defect": dual_defect,
    });
    ctx.write_summary(config, results)?;

    Ok(format!(
        "equilibrium shape: {} sides, area {:.6}, perimeter / (2 area) - 1 = {:.2e}",
        w.num_sides(),
        area,
        calibration_ratio - 1.0
    ))
}
