//! Shared shape selection: every subcommand that acts on a polygon accepts
//! `--regular N`, `--n N --angle A` (symmetric two-angle family member), or
//! `--polygon FILE` (JSON `{"vertices": [[x, y], ...]}`), falling back to the
//! config file section and finally to the unit-area square.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use serde_json::{json, Value};

use wrl_core::anisotropy::{build_symmetric_polygon, SymmetricPolygonSpec};
use wrl_core::geometry::{ConvexPolygon, Vec2};
use wrl_core::CrystallineTension;

use crate::config::Layers;
use crate::errors::CliError;

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    /// Regular polygon with this many sides (unit area).
    #[arg(long, value_name = "N")]
    pub regular: Option<usize>,

    /// Side count for a symmetric two-angle family member (unit area).
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,

    /// Interior angle (radians) selecting the family member; requires --n.
    #[arg(long, value_name = "RADIANS")]
    pub angle: Option<f64>,

    /// JSON file with {"vertices": [[x, y], ...]} describing a convex polygon.
    #[arg(long, value_name = "FILE")]
    pub polygon: Option<PathBuf>,
}

#[derive(Deserialize)]
struct PolygonFile {
    vertices: Vec<[f64; 2]>,
}

pub fn load_polygon_file(path: &PathBuf) -> Result<ConvexPolygon, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read polygon file {}: {e}", path.display())))?;
    let parsed: PolygonFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("polygon file {}: {e}", path.display())))?;
    let verts: Vec<Vec2> = parsed.vertices.iter().map(|&[x, y]| Vec2::new(x, y)).collect();
    ConvexPolygon::new(verts)
        .map_err(|e| CliError::Config(format!("polygon file {}: {e}", path.display())))
}

/// Resolves the polygon and a JSON description of how it was chosen.
pub fn resolve_shape(args: &ShapeArgs, layers: &Layers) -> Result<(ConvexPolygon, Value), CliError> {
    let modes = [args.regular.is_some(), args.n.is_some(), args.polygon.is_some()];
    if modes.iter().filter(|&&m| m).count() > 1 {
        return Err(CliError::Config(
            "choose one of --regular, --n/--angle, --polygon".into(),
        ));
    }
    if args.angle.is_some() && args.n.is_none() {
        return Err(CliError::Config("--angle requires --n".into()));
    }

    if let Some(path) = &args.polygon {
        let p = load_polygon_file(path)?;
        return Ok((p, json!({ "shape": "polygon-file", "path": path.display().to_string() })));
    }
    if let Some(n) = args.n {
        let p = build_symmetric_polygon(SymmetricPolygonSpec { n, angle: args.angle })?;
        return Ok((p, json!({ "shape": "symmetric-family", "n": n, "angle": args.angle })));
    }
    if let Some(n) = args.regular {
        let p = build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None })?;
        return Ok((p, json!({ "shape": "regular", "n": n })));
    }

    // Config-file fallbacks, same precedence order as the flags.
    if let Some(path) = layers.opt_path("polygon", None) {
        let p = load_polygon_file(&path)?;
        return Ok((p, json!({ "shape": "polygon-file", "path": path.display().to_string() })));
    }
    if let Some(n) = layers.opt_usize("n", None) {
        let angle = layers.opt_f64("angle", None);
        let p = build_symmetric_polygon(SymmetricPolygonSpec { n, angle })?;
        return Ok((p, json!({ "shape": "symmetric-family", "n": n, "angle": angle })));
    }
    if let Some(n) = layers.opt_usize("regular", None) {
        let p = build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None })?;
        return Ok((p, json!({ "shape": "regular", "n": n })));
    }

    let p = build_symmetric_polygon(SymmetricPolygonSpec { n: 4, angle: None })?;
    Ok((p, json!({ "shape": "regular", "n": 4 })))
}

/// Surface-tension selection for commands that take one independently of
/// the polygon under study.
#[derive(Debug, Clone, Args)]
pub struct TensionArgs {
    /// Tension whose equilibrium shape is the regular N-gon.
    #[arg(long, value_name = "N")]
    pub tension_regular: Option<usize>,

    /// Tension generated by the vertices of this polygon file (centered).
    #[arg(long, value_name = "FILE")]
    pub tension_polygon: Option<PathBuf>,
}

/// What to use when neither tension flag nor config key is present.
pub enum TensionFallback<'a> {
    /// The studied polygon's own hull, centered: its normal fan is then a
    /// subset of the tension's, so every side is tension-aligned.
    OwnShape(&'a ConvexPolygon),
    Regular(usize),
}

pub fn resolve_tension(
    args: &TensionArgs,
    layers: &Layers,
    fallback: TensionFallback,
) -> Result<(CrystallineTension, Value), CliError> {
    if args.tension_regular.is_some() && args.tension_polygon.is_some() {
        return Err(CliError::Config(
            "choose one of --tension-regular, --tension-polygon".into(),
        ));
    }
    if let Some(path) = &args.tension_polygon {
        let k = load_polygon_file(path)?.centered();
        let t = CrystallineTension::from_polygon(&k)?;
        return Ok((t, json!({ "tension": "polygon-file", "path": path.display().to_string() })));
    }
    if let Some(n) = args.tension_regular {
        let k = build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None })?;
        let t = CrystallineTension::from_polygon(&k)?;
        return Ok((t, json!({ "tension": "regular", "n": n })));
    }
    if let Some(path) = layers.opt_path("tension_polygon", None) {
        let k = load_polygon_file(&path)?.centered();
        let t = CrystallineTension::from_polygon(&k)?;
        return Ok((t, json!({ "tension": "polygon-file", "path": path.display().to_string() })));
    }
    if let Some(n) = layers.opt_usize("tension_regular", None) {
        let k = build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None })?;
        let t = CrystallineTension::from_polygon(&k)?;
        return Ok((t, json!({ "tension": "regular", "n": n })));
    }
    match fallback {
        TensionFallback::OwnShape(p) => {
            let t = CrystallineTension::from_polygon(&p.centered())?;
            Ok((t, json!({ "tension": "own-shape" })))
        }
        TensionFallback::Regular(n) => {
            let k = build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None })?;
            let t = CrystallineTension::from_polygon(&k)?;
            Ok((t, json!({ "tension": "regular", "n": n })))
        }
    }
}
