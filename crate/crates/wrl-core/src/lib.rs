//! Numerical laboratory for planar crystalline isoperimetric problems with a
//! Riesz repulsion term.
//!
//! The crate works with convex polygons only. It provides exact polygon
//! geometry ([`geometry`]), crystalline surface tensions and their Wulff
//! shapes ([`anisotropy`]), deterministic quadrature for Riesz interaction
//! energies and potentials ([`riesz`]), the class of side-translation
//! variations with volume restoration ([`variation`]), and energy-minimization
//! diagnostics over that class ([`minimize`]).

pub mod anisotropy;
pub mod geometry;
pub mod minimize;
pub mod qmc;
pub mod quadrature;
pub mod render;
pub mod riesz;
pub mod variation;

pub use anisotropy::{AnisotropyError, CrystallineTension};
pub use geometry::{ConvexPolygon, GeometryError, HalfPlane, Isometry};
pub use minimize::{EnergyReport, MinimizationResult, MinimizeError, RigidityReport};
pub use riesz::{EnergyValue, QuadratureSpec, RieszError, RieszParams};
pub use variation::{VariationError, VariationFrame, VariationVector};
