//! Side-translation variations of a convex polygon at fixed area.
//!
//! A polygon with n sides is perturbed by moving side i outward by d_i
//! along its normal and re-intersecting the half-planes; the normal fan
//! must survive. One designated side compensates so the area is restored
//! exactly, which turns the self energy into a reduced function
//! V(d_1, ..., d_{n-1}) whose first variation has a closed form in terms
//! of side averages of the potential. Criticality (all side averages
//! equal) and the quadratic growth of |V(P) - V(P~)| in the symmetric
//! difference are both probed here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexPolygon, GeometryError, HalfPlane, Vec2};
use crate::quadrature::pairwise_sum;
use crate::riesz::{
    self_energy, side_average_potential, EnergyValue, QuadratureSpec, RieszError, RieszParams,
};

#[derive(Debug, Clone, Error)]
pub enum VariationError {
    #[error("offsets leave the variation class (normal fan changed): {0}")]
    Infeasible(String),
    #[error("no volume-restoring offset exists inside the feasible box: {0}")]
    NoRoot(String),
    #[error("probe direction is the zero vector")]
    DegenerateDirection,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Riesz(#[from] RieszError),
}

/// Displacements of all n sides with their common bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationVector {
    pub d: Vec<f64>,
    pub epsilon: f64,
}

impl VariationVector {
    pub fn validate(&self, frame: &VariationFrame) -> Result<(), VariationError> {
        if self.d.len() != frame.num_sides() {
            return Err(VariationError::Infeasible(format!(
                "{} offsets for {} sides",
                self.d.len(),
                frame.num_sides()
            )));
        }
        if self.epsilon > frame.max_feasible_epsilon() {
            return Err(VariationError::Infeasible(format!(
                "epsilon {} exceeds the feasibility margin {}",
                self.epsilon,
                frame.max_feasible_epsilon()
            )));
        }
        if let Some(bad) = self.d.iter().find(|x| x.abs() >= self.epsilon) {
            return Err(VariationError::Infeasible(format!(
                "offset {} reaches the bound {}",
                bad, self.epsilon
            )));
        }
        Ok(())
    }
}

/// Fixed normal fan of a base polygon, with the bookkeeping to map sides of
/// a rebuilt polygon back to base indices (canonicalization may rotate the
/// vertex order).
#[derive(Debug, Clone)]
pub struct VariationFrame {
    base: ConvexPolygon,
    normals: Vec<Vec2>,
    offsets: Vec<f64>,
    lengths: Vec<f64>,
    target_area: f64,
}

impl VariationFrame {
    pub fn new(base: &ConvexPolygon) -> Self {
        let sides = base.sides();
        Self {
            base: base.clone(),
            normals: sides.iter().map(|s| s.normal).collect(),
            offsets: sides.iter().map(|s| s.normal.dot(&s.a)).collect(),
            lengths: sides.iter().map(|s| s.length).collect(),
            target_area: base.area(),
        }
    }

    pub fn base(&self) -> &ConvexPolygon {
        &self.base
    }

    pub fn num_sides(&self) -> usize {
        self.normals.len()
    }

    pub fn base_lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Largest displacement bound that provably preserves the normal fan:
    /// every vertex moves at most |d| / sin(gap) per incident side, so a
    /// quarter of min length over the worst secant sum keeps all lengths
    /// positive with a factor-two margin.
    pub fn max_feasible_epsilon(&self) -> f64 {
        let n = self.num_sides();
        let min_len = self.lengths.iter().cloned().fold(f64::MAX, f64::min);
        let mut max_secant = 0.0f64;
        for i in 0..n {
            let prev = self.normals[(i + n - 1) % n];
            let next = self.normals[(i + 1) % n];
            let s = 1.0 / cross(prev, self.normals[i]).abs()
                + 1.0 / cross(self.normals[i], next).abs();
            max_secant = max_secant.max(s);
        }
        0.25 * min_len / max_secant
    }

    /// Rebuild the polygon with side i displaced by d[i]. The zero vector
    /// returns the base polygon unchanged (bit for bit).
    pub fn polygon_from_offsets(&self, d: &[f64]) -> Result<ConvexPolygon, VariationError> {
        assert_eq!(d.len(), self.num_sides(), "one offset per side");
        if d.iter().all(|&x| x == 0.0) {
            return Ok(self.base.clone());
        }
        let planes: Vec<HalfPlane> = self
            .normals
            .iter()
            .zip(self.offsets.iter().zip(d))
            .map(|(&n, (&h, &di))| HalfPlane { normal: n, offset: h + di })
            .collect();
        let poly = crate::geometry::intersect_halfplanes(&planes)
            .map_err(|e| VariationError::Infeasible(format!("intersection failed: {e}")))?;
        if poly.num_sides() != self.num_sides() {
            return Err(VariationError::Infeasible(format!(
                "{} sides collapsed to {}",
                self.num_sides(),
                poly.num_sides()
            )));
        }
        self.side_map(&poly)?;
        Ok(poly)
    }

    /// For each base side, the index of the rebuilt polygon's side with the
    /// same normal.
    pub fn side_map(&self, poly: &ConvexPolygon) -> Result<Vec<usize>, VariationError> {
        let sides = poly.sides();
        self.normals
            .iter()
            .map(|n| {
                sides
                    .iter()
                    .position(|s| (s.normal - n).norm() < 1e-9)
                    .ok_or_else(|| {
                        VariationError::Infeasible("a side normal disappeared".into())
                    })
            })
            .collect()
    }

    /// Side lengths of a rebuilt polygon, in base order.
    pub fn matched_lengths(&self, poly: &ConvexPolygon) -> Result<Vec<f64>, VariationError> {
        let map = self.side_map(poly)?;
        let sides = poly.sides();
        Ok(map.iter().map(|&j| sides[j].length).collect())
    }

    /// Solve for the last side's displacement restoring the base area, by
    /// Newton (the area derivative in the last offset is exactly that
    /// side's current length) with a bisection fallback.
    pub fn volume_adjust(&self, d_partial: &[f64]) -> Result<f64, VariationError> {
        let n = self.num_sides();
        assert_eq!(d_partial.len(), n - 1, "free offsets leave one side out");
        if d_partial.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        let tol = 1e-13 * self.target_area.max(1.0);
        let mut d = d_partial.to_vec();
        d.push(0.0);
        let probe = |t: f64, d: &mut [f64]| -> Option<(f64, f64)> {
            d[n - 1] = t;
            let poly = self.polygon_from_offsets(d).ok()?;
            let len = *self.matched_lengths(&poly).ok()?.last().unwrap();
            Some((poly.area() - self.target_area, len))
        };

        let mut t = 0.0f64;
        let (mut g, mut len) = probe(t, &mut d)
            .ok_or_else(|| VariationError::Infeasible("free offsets alone break the fan".into()))?;
        for _ in 0..50 {
            if g.abs() < tol {
                return Ok(t);
            }
            let mut step = -g / len;
            // Keep the iterate feasible by halving toward the current point.
            let mut tried = None;
            for _ in 0..40 {
                if let Some(next) = probe(t + step, &mut d) {
                    tried = Some((t + step, next));
                    break;
                }
                step *= 0.5;
            }
            match tried {
                Some((tn, (gn, ln))) => {
                    t = tn;
                    g = gn;
                    len = ln;
                }
                None => break,
            }
        }
        if g.abs() < tol {
            return Ok(t);
        }

        // Bisection fallback: area is strictly increasing in the offset, so
        // expand a bracket around the last iterate.
        let scale = (self.target_area.sqrt()).max(1e-6);
        let mut lo = t;
        let mut hi = t;
        let mut glo = g;
        let mut ghi = g;
        let mut h = 1e-3 * scale;
        for _ in 0..60 {
            if glo > 0.0 {
                if let Some((gl, _)) = probe(lo - h, &mut d) {
                    lo -= h;
                    glo = gl;
                } else {
                    h *= 0.5;
                    continue;
                }
            } else if ghi < 0.0 {
                if let Some((gh, _)) = probe(hi + h, &mut d) {
                    hi += h;
                    ghi = gh;
                } else {
                    h *= 0.5;
                    continue;
                }
            }
            if glo <= 0.0 && ghi >= 0.0 {
                break;
            }
            h *= 2.0;
        }
        if !(glo <= 0.0 && ghi >= 0.0) {
            return Err(VariationError::NoRoot(format!(
                "area defect keeps sign {:+.3e} on the feasible box",
                g
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match probe(mid, &mut d) {
                Some((gm, _)) => {
                    if gm.abs() < tol {
                        return Ok(mid);
                    }
                    if gm < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                None => {
                    return Err(VariationError::NoRoot("bracket left the feasible box".into()))
                }
            }
            if hi - lo < f64::EPSILON * scale {
                break;
            }
        }
        let mid = 0.5 * (lo + hi);
        match probe(mid, &mut d) {
            Some((gm, _)) if gm.abs() < 1e3 * tol => Ok(mid),
            _ => Err(VariationError::NoRoot("bisection stalled above tolerance".into())),
        }
    }

    /// The volume-restored polygon for free offsets, together with the
    /// compensating displacement.
    pub fn restored_polygon(
        &self,
        d_partial: &[f64],
    ) -> Result<(ConvexPolygon, f64), VariationError> {
        let dn = self.volume_adjust(d_partial)?;
        let mut d = d_partial.to_vec();
        d.push(dn);
        Ok((self.polygon_from_offsets(&d)?, dn))
    }
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Displace sides by v and re-intersect; no area constraint.
pub fn perturbed_polygon(
    p: &ConvexPolygon,
    v: &VariationVector,
) -> Result<ConvexPolygon, VariationError> {
    let frame = VariationFrame::new(p);
    v.validate(&frame)?;
    frame.polygon_from_offsets(&v.d)
}

/// The compensating displacement of the last side restoring area(P).
pub fn volume_adjust(p: &ConvexPolygon, d_partial: &[f64]) -> Result<f64, VariationError> {
    VariationFrame::new(p).volume_adjust(d_partial)
}

/// Reduced self energy: V(d_1, ..., d_{n-1}) at fixed area.
pub fn reduced_nonlocal(
    p: &ConvexPolygon,
    d_partial: &[f64],
    params: &RieszParams,
    spec: &QuadratureSpec,
) -> Result<EnergyValue, VariationError> {
    let frame = VariationFrame::new(p);
    let (poly, _) = frame.restored_polygon(d_partial)?;
    Ok(self_energy(&poly, params, spec)?)
}

/// Closed-form first variation of the reduced self energy:
/// dV/dd_i = 2 l_i (avg_i - avg_j) with side j compensating the area.
pub fn first_variation_analytic(
    p: &ConvexPolygon,
    i: usize,
    j: usize,
    params: &RieszParams,
    spec: &QuadratureSpec,
) -> Result<f64, VariationError> {
    assert_ne!(i, j, "the varied side cannot compensate itself");
    let avg_i = side_average_potential(p, i, params, spec);
    let avg_j = side_average_potential(p, j, params, spec);
    let len_i = p.sides()[i].length;
    Ok(2.0 * len_i * (avg_i.value - avg_j.value))
}

/// Side averages of the potential and their normalized spread; zero spread
/// characterizes criticality for area-preserving side translations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub side_averages: Vec<f64>,
    /// max over pairs of |avg_i - avg_j| / mean.
    pub residual: f64,
    /// Propagated quadrature error on the residual, same normalization.
    pub quadrature_error: f64,
}

pub fn criticality_residual(
    p: &ConvexPolygon,
    params: &RieszParams,
    spec: &QuadratureSpec,
) -> CriticalityReport {
    let vals: Vec<EnergyValue> = (0..p.num_sides())
        .map(|i| side_average_potential(p, i, params, spec))
        .collect();
    let avgs: Vec<f64> = vals.iter().map(|v| v.value).collect();
    let mean = pairwise_sum(&avgs) / avgs.len() as f64;
    let max = avgs.iter().cloned().fold(f64::MIN, f64::max);
    let min = avgs.iter().cloned().fold(f64::MAX, f64::min);
    let err = vals.iter().map(|v| v.error_estimate).fold(0.0, f64::max);
    CriticalityReport {
        side_averages: avgs,
        residual: (max - min) / mean.abs(),
        quadrature_error: 2.0 * err / mean.abs(),
    }
}

/// One sample of the quadratic-growth probe.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbeSample {
    pub t: f64,
    pub symdiff: f64,
    pub energy_diff: f64,
    pub error_estimate: f64,
    /// True when |energy_diff| sits below ten times the quadrature error
    /// and the sample is excluded from the fit.
    pub discarded: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticProbeReport {
    pub samples: Vec<ProbeSample>,
    /// Log-log slope of |V(P) - V(P(t dir))| against |P sym P(t dir)|.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Largest ratio |energy difference| / symdiff^2 over kept samples.
    pub c0_estimate: Option<f64>,
}

/// Probes |V(P) - V(P~)| <= c0 |P sym P~|^2 along one direction of the
/// reduced class: quadratic log-log slope is the signature of criticality,
/// linear slope of a nonzero first variation.
pub fn quadratic_bound_probe(
    p: &ConvexPolygon,
    direction: &[f64],
    scales: &[f64],
    params: &RieszParams,
    spec: &QuadratureSpec,
) -> Result<QuadraticProbeReport, VariationError> {
    let frame = VariationFrame::new(p);
    assert_eq!(direction.len(), frame.num_sides() - 1, "reduced direction");
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(VariationError::DegenerateDirection);
    }
    let unit: Vec<f64> = direction.iter().map(|x| x / norm).collect();
    let v0 = self_energy(p, params, spec)?;
    let mut samples = Vec::with_capacity(scales.len());
    for &t in scales {
        let d: Vec<f64> = unit.iter().map(|x| t * x).collect();
        let (poly, _) = frame.restored_polygon(&d)?;
        let vt = self_energy(&poly, params, spec)?;
        let energy_diff = vt.value - v0.value;
        let error_estimate = vt.error_estimate + v0.error_estimate;
        samples.push(ProbeSample {
            t,
            symdiff: p.symmetric_difference_area(&poly),
            energy_diff,
            error_estimate,
            discarded: energy_diff.abs() < 10.0 * error_estimate,
        });
    }
    let kept: Vec<&ProbeSample> = samples.iter().filter(|s| !s.discarded).collect();
    let (slope, intercept, c0) = if kept.len() >= 2 {
        let xs: Vec<f64> = kept.iter().map(|s| s.symdiff.ln()).collect();
        let ys: Vec<f64> = kept.iter().map(|s| s.energy_diff.abs().ln()).collect();
        let slope = crate::riesz::least_squares_slope(&xs, &ys);
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let c0 = kept
            .iter()
            .map(|s| s.energy_diff.abs() / (s.symdiff * s.symdiff))
            .fold(0.0, f64::max);
        (Some(slope), Some(my - slope * mx), Some(c0))
    } else {
        (None, None, None)
    };
    Ok(QuadraticProbeReport { samples, slope, intercept, c0_estimate: c0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::{build_symmetric_polygon, SymmetricPolygonSpec};
    use approx::assert_relative_eq;

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    fn regular(n: usize) -> ConvexPolygon {
        build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None }).unwrap()
    }

    #[test]
    fn zero_offsets_return_the_base_polygon() {
        let p = regular(5);
        let frame = VariationFrame::new(&p);
        let q = frame.polygon_from_offsets(&[0.0; 5]).unwrap();
        assert!(p.approx_eq(&q, 0.0));
    }

    #[test]
    fn square_side_offset_gives_rectangle() {
        // Canonical square sides: bottom, right, top, left. Displacing the
        // right side outward by 0.1 yields the 1.1 x 1 rectangle.
        let frame = VariationFrame::new(&unit_square());
        let q = frame.polygon_from_offsets(&[0.0, 0.1, 0.0, 0.0]).unwrap();
        let expect = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.1, 0.0),
            Vec2::new(1.1, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        assert!(q.approx_eq(&expect, 1e-12));
    }

    #[test]
    fn collapsing_offsets_are_infeasible() {
        let frame = VariationFrame::new(&unit_square());
        // Full side length inward: the polygon empties.
        assert!(matches!(
            frame.polygon_from_offsets(&[-1.0, 0.0, 0.0, 0.0]),
            Err(VariationError::Infeasible(_))
        ));
        // A deep cut on a regular pentagon removes the two adjacent sides
        // while keeping a nonempty interior: the fan changed.
        let p = regular(5);
        let frame = VariationFrame::new(&p);
        let apothem = p.sides()[0].normal.dot(&(p.sides()[0].a - p.centroid())).abs();
        let mut d = [0.0; 5];
        d[0] = -1.6 * apothem;
        assert!(matches!(
            frame.polygon_from_offsets(&d),
            Err(VariationError::Infeasible(_))
        ));
    }

    #[test]
    fn moderate_inward_cut_keeps_the_fan_of_a_square() {
        let frame = VariationFrame::new(&unit_square());
        let q = frame.polygon_from_offsets(&[-0.5, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(q.num_sides(), 4);
        assert_relative_eq!(q.area(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn volume_adjust_zero_and_exact_square_cases() {
        let frame = VariationFrame::new(&unit_square());
        assert_eq!(frame.volume_adjust(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        // Bottom side out by d, left side compensates: (1+d)(1+dn) = 1.
        let d1 = 0.1;
        let dn = frame.volume_adjust(&[d1, 0.0, 0.0]).unwrap();
        assert_relative_eq!(dn, -d1 / (1.0 + d1), epsilon = 1e-12);
        // Right side out by d, left side compensates: parallel pair, the
        // restoration is exactly linear.
        let dn = frame.volume_adjust(&[0.0, d1, 0.0]).unwrap();
        assert_relative_eq!(dn, -d1, epsilon = 1e-12);
    }

    #[test]
    fn volume_restoration_is_exact_across_random_offsets() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for n in [4usize, 5, 6, 7] {
            let p = regular(n);
            let frame = VariationFrame::new(&p);
            let eps = frame.max_feasible_epsilon();
            for _ in 0..25 {
                let d: Vec<f64> =
                    (0..n - 1).map(|_| rng.random_range(-0.5 * eps..0.5 * eps)).collect();
                let (poly, _) = frame.restored_polygon(&d).unwrap();
                assert!((poly.area() - p.area()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjacent_compensation_coefficient_is_minus_one() {
        // On a regular polygon the compensating side has the same length,
        // so dn = -d1 + O(d1^2); the fitted linear coefficient is -1.
        let p = regular(5);
        let frame = VariationFrame::new(&p);
        let hs: Vec<f64> = [1e-3, 5e-4, 2.5e-4].to_vec();
        for &h in &hs {
            let mut d = vec![0.0; 4];
            d[0] = h;
            let dn = frame.volume_adjust(&d).unwrap();
            let coeff = dn / h;
            assert!((coeff + 1.0).abs() < 0.01, "coefficient {coeff}");
        }
    }

    #[test]
    fn area_derivative_in_last_offset_is_side_length() {
        let p = regular(6);
        let frame = VariationFrame::new(&p);
        let h = 1e-6;
        let mut plus = vec![0.01, -0.004, 0.002, 0.0, 0.0, h];
        let mut minus = plus.clone();
        minus[5] = -h;
        let a_plus = frame.polygon_from_offsets(&plus).unwrap().area();
        let a_minus = frame.polygon_from_offsets(&minus).unwrap().area();
        plus[5] = 0.0;
        let mid = frame.polygon_from_offsets(&plus).unwrap();
        let len = *frame.matched_lengths(&mid).unwrap().last().unwrap();
        assert_relative_eq!((a_plus - a_minus) / (2.0 * h), len, max_relative = 1e-8);
    }

    #[test]
    fn feasibility_is_monotone_in_scale() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let p = regular(7);
        let frame = VariationFrame::new(&p);
        let eps = frame.max_feasible_epsilon();
        for _ in 0..20 {
            let d: Vec<f64> = (0..7).map(|_| rng.random_range(-eps..eps)).collect();
            if frame.polygon_from_offsets(&d).is_ok() {
                for s in [0.75, 0.5, 0.25] {
                    let ds: Vec<f64> = d.iter().map(|x| s * x).collect();
                    assert!(frame.polygon_from_offsets(&ds).is_ok());
                }
            }
        }
    }

    #[test]
    fn symmetric_difference_linear_coefficient_is_side_length() {
        let p = regular(5);
        let frame = VariationFrame::new(&p);
        for i in 0..5 {
            let mut d = vec![0.0; 5];
            let h = 1e-4;
            d[i] = h;
            let q = frame.polygon_from_offsets(&d).unwrap();
            let coeff = p.symmetric_difference_area(&q) / h;
            assert_relative_eq!(coeff, frame.base_lengths()[i], max_relative = 0.01);
        }
    }

    #[test]
    fn reduced_nonlocal_at_zero_is_the_self_energy() {
        let p = unit_square();
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::default();
        let direct = self_energy(&p, &params, &spec).unwrap();
        let reduced = reduced_nonlocal(&p, &[0.0, 0.0, 0.0], &params, &spec).unwrap();
        assert_eq!(direct.value.to_bits(), reduced.value.to_bits());
    }

    #[test]
    fn criticality_residual_separates_square_from_lopsided_quadrilateral() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::default();
        let sq = unit_square();
        let rep = criticality_residual(&sq, &params, &spec);
        assert!(rep.residual < 1e-5, "square residual {}", rep.residual);
        // A right trapezoid has no symmetry matching its sides and n = 4
        // sides, so its side averages genuinely spread.
        let trap = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(0.8, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap()
        .centered();
        let rep = criticality_residual(&trap, &params, &spec);
        assert!(rep.residual > 0.01, "trapezoid residual {}", rep.residual);
    }

    #[test]
    fn every_triangle_is_critical_by_translation_invariance() {
        // Fixed-normal area-preserving offsets of a triangle are pure
        // translations, so translation invariance of the interaction forces
        // all three side averages of the potential to coincide — for every
        // triangle, however lopsided. A sharp cross-check of the
        // side-average machinery on an asymmetric shape.
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::default();
        let tri = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap()
        .centered();
        let rep = criticality_residual(&tri, &params, &spec);
        assert!(rep.residual < 1e-10, "triangle residual {}", rep.residual);
    }

    #[test]
    fn first_variation_vanishes_on_class_members_and_pushes_rectangle_to_square() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::default();
        let p = regular(6);
        for i in 0..5 {
            let g = first_variation_analytic(&p, i, 5, &params, &spec).unwrap();
            assert!(g.abs() < 1e-6, "side {i}: {g}");
        }
        // A wide 2 x 0.5 rectangle, canonical sides: bottom (long), right
        // (short), top (long), left (short). Pushing the bottom outward
        // with the left side compensating trades width for height, moving
        // the aspect ratio toward the square; concentration increases the
        // interaction, so V rises and the first variation is positive.
        let rect = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 0.5),
            Vec2::new(0.0, 0.5),
        ])
        .unwrap();
        let g = first_variation_analytic(&rect, 0, 3, &params, &spec).unwrap();
        let h = 1e-4;
        let frame = VariationFrame::new(&rect);
        let vp = {
            let (q, _) = frame.restored_polygon(&[h, 0.0, 0.0]).unwrap();
            self_energy(&q, &params, &spec).unwrap().value
        };
        let vm = {
            let (q, _) = frame.restored_polygon(&[-h, 0.0, 0.0]).unwrap();
            self_energy(&q, &params, &spec).unwrap().value
        };
        let fd = (vp - vm) / (2.0 * h);
        assert!(
            (g - fd).abs() <= (1e-4 * fd.abs()).max(1e-6),
            "analytic {g} vs centered difference {fd}"
        );
        assert!(g > 1e-3, "squeezing toward the square must raise V, got {g}");
    }

    #[test]
    fn hexagon_antisymmetric_difference_is_suppressed() {
        // At a critical polygon the linear term cancels, so V(h) - V(-h)
        // collapses by orders of magnitude against h * |V'| scales.
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::default();
        let p = regular(6);
        let frame = VariationFrame::new(&p);
        let h = 1e-2;
        let vp = {
            let (q, _) = frame.restored_polygon(&[h, 0.0, 0.0, 0.0, 0.0]).unwrap();
            self_energy(&q, &params, &spec).unwrap().value
        };
        let vm = {
            let (q, _) = frame.restored_polygon(&[-h, 0.0, 0.0, 0.0, 0.0]).unwrap();
            self_energy(&q, &params, &spec).unwrap().value
        };
        // A noncritical shape at this perturbation size shows |V(h)-V(-h)|
        // of order 2 h |dV| ~ 1e-2; criticality should beat that by orders.
        assert!(
            (vp - vm).abs() < 1e-4,
            "odd part too large: {}",
            (vp - vm).abs()
        );
    }

    #[test]
    fn quadratic_probe_slope_two_on_hexagon_linear_on_skewed_pentagon() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::default();
        let hexagon = regular(6);
        let scales: Vec<f64> = (0..5).map(|k| 1e-2 * 2f64.powi(k)).collect();
        let rep = quadratic_bound_probe(
            &hexagon,
            &[1.0, -0.3, 0.2, 0.1, -0.5],
            &scales,
            &params,
            &spec,
        )
        .unwrap();
        let slope = rep.slope.expect("enough samples kept");
        assert!(slope >= 1.9, "critical slope {slope}");

        // An irregular pentagon has a nonzero first variation: slope near 1.
        let pent = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.3, -0.1),
            Vec2::new(1.9, 0.9),
            Vec2::new(0.9, 1.4),
            Vec2::new(-0.2, 0.8),
        ])
        .unwrap();
        let pent = pent.scaled(1.0 / pent.area().sqrt());
        // Smaller scales keep the fit inside the linear-dominated window;
        // at larger offsets the quadratic correction drags the slope up.
        let fine: Vec<f64> = (0..5).map(|k| 2e-3 * 2f64.powi(k)).collect();
        let rep = quadratic_bound_probe(
            &pent,
            &[1.0, 0.0, 0.0, 0.0],
            &fine,
            &params,
            &spec,
        )
        .unwrap();
        let slope = rep.slope.expect("enough samples kept");
        assert!((slope - 1.0).abs() <= 0.15, "noncritical slope {slope}");
    }

    #[test]
    fn zero_direction_is_rejected() {
        let p = regular(4);
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        assert!(matches!(
            quadratic_bound_probe(&p, &[0.0, 0.0, 0.0], &[1e-2], &params, &spec),
            Err(VariationError::DegenerateDirection)
        ));
    }

    #[test]
    fn variation_vector_serde_roundtrip_and_validation() {
        let v = VariationVector { d: vec![0.01, -0.02, 0.0, 0.005], epsilon: 0.03 };
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"d\""));
        assert!(json.contains("\"epsilon\""));
        let back: VariationVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back.d, v.d);
        let frame = VariationFrame::new(&unit_square());
        // epsilon above the feasibility margin is rejected.
        let bad = VariationVector { d: vec![0.0; 4], epsilon: 10.0 };
        assert!(bad.validate(&frame).is_err());
        let good = VariationVector { d: vec![0.0; 4], epsilon: 0.9 * frame.max_feasible_epsilon() };
        assert!(good.validate(&frame).is_ok());
    }
}
