//! Crystalline surface tensions, their Wulff shapes, and the family of
//! reflection-symmetric equilateral polygons the energy lab works over.
//!
//! A crystalline tension is the support function of a convex polygon with
//! the origin in its interior: psi(v) = max_i v . g_i over a finite, minimal
//! generator set. Its Wulff shape is exactly the hull of the generators, so
//! tension and shape convert back and forth without loss.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{hull_of_points, ConvexPolygon, GeometryError, Isometry, Vec2};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnisotropyError {
    #[error("generator set is degenerate: {0}")]
    Degenerate(String),
    #[error("origin is not strictly inside the generator hull")]
    OriginOutside,
    #[error("angle {angle} is outside the feasible open interval ({lo}, {hi}) for n = {n}")]
    AngleOutOfRange { n: usize, angle: f64, lo: f64, hi: f64 },
    #[error("n = {n} is odd; only the regular polygon exists, so an angle may not be prescribed")]
    OddNWithAngle { n: usize },
}

/// Crystalline surface tension in minimal form: the stored generators are
/// exactly the vertices of the Wulff shape, counterclockwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TensionJson", into = "TensionJson")]
pub struct CrystallineTension {
    generators: Vec<Vec2>,
}

#[derive(Serialize, Deserialize)]
struct TensionJson {
    generators: Vec<[f64; 2]>,
}

impl From<CrystallineTension> for TensionJson {
    fn from(t: CrystallineTension) -> Self {
        TensionJson { generators: t.generators.iter().map(|g| [g.x, g.y]).collect() }
    }
}

impl TryFrom<TensionJson> for CrystallineTension {
    type Error = AnisotropyError;
    fn try_from(j: TensionJson) -> Result<Self, AnisotropyError> {
        CrystallineTension::new(j.generators.into_iter().map(|[x, y]| Vec2::new(x, y)).collect())
    }
}

impl CrystallineTension {
    /// Builds from any generator set, silently dropping generators interior
    /// to the hull. Fails if the hull is degenerate or does not contain the
    /// origin strictly inside.
    pub fn new(generators: Vec<Vec2>) -> Result<Self, AnisotropyError> {
        Self::new_report(generators).map(|(t, _)| t)
    }

    /// Like [`new`](Self::new) but also reports whether the input was
    /// already minimal.
    pub fn new_report(generators: Vec<Vec2>) -> Result<(Self, bool), AnisotropyError> {
        let hull = hull_of_points(&generators)
            .map_err(|e| AnisotropyError::Degenerate(e.to_string()))?;
        let margin = -1e-12 * hull.diameter();
        if !hull
            .halfplanes()
            .iter()
            .all(|h| h.signed_distance(Vec2::zeros()) < margin)
        {
            return Err(AnisotropyError::OriginOutside);
        }
        let minimal = hull.num_sides() == generators.len();
        Ok((Self { generators: hull.vertices().to_vec() }, minimal))
    }

    /// Reads a tension back off a convex polygon: the polygon becomes the
    /// Wulff shape. The origin must lie strictly inside; center the polygon
    /// first if needed.
    pub fn from_polygon(k: &ConvexPolygon) -> Result<Self, AnisotropyError> {
        Self::new(k.vertices().to_vec())
    }

    pub fn generators(&self) -> &[Vec2] {
        &self.generators
    }

    /// psi(v) = max_i v . g_i. Positively 1-homogeneous and convex.
    pub fn value(&self, v: Vec2) -> f64 {
        self.generators.iter().map(|g| v.dot(g)).fold(f64::MIN, f64::max)
    }

    /// The dual norm psi*(x); the Wulff shape is its closed unit ball.
    pub fn dual_value(&self, x: Vec2) -> f64 {
        let w = self.wulff_shape();
        w.sides()
            .iter()
            .map(|s| x.dot(&s.normal) / s.normal.dot(&s.a))
            .fold(f64::MIN, f64::max)
    }

    /// Hull of the generators. Never fails for a validated tension.
    pub fn wulff_shape(&self) -> ConvexPolygon {
        ConvexPolygon::new(self.generators.clone()).expect("validated generator hull")
    }

    /// Anisotropic perimeter: sum of psi(normal) * length over the sides.
    pub fn perimeter(&self, p: &ConvexPolygon) -> f64 {
        p.sides().iter().map(|s| self.value(s.normal) * s.length).sum()
    }
}

/// Request for a member of the symmetric polygon family: `n` sides, all of
/// equal length, reflection symmetric about every vertex angle bisector.
/// For even `n` the family is the one-parameter curve indexed by one of the
/// two alternating interior angles; `angle: None` requests the regular
/// polygon. Odd `n` admits only the regular polygon.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SymmetricPolygonSpec {
    pub n: usize,
    pub angle: Option<f64>,
}

/// Interior angle of the regular n-gon.
pub fn regular_angle(n: usize) -> f64 {
    (n as f64 - 2.0) * std::f64::consts::PI / n as f64
}

/// Builds the requested family member at unit area, in canonical form.
///
/// Construction glues `n` congruent triangles around the center, each with
/// apex angle 2 pi / n and base angles alpha/2 and beta/2, where beta is
/// determined by the closing constraint (n/2)(alpha + beta) = (n - 2) pi.
pub fn build_symmetric_polygon(spec: SymmetricPolygonSpec) -> Result<ConvexPolygon, AnisotropyError> {
    use std::f64::consts::PI;
    let n = spec.n;
    if n < 3 {
        return Err(AnisotropyError::Degenerate(format!("n = {n} is below 3")));
    }
    let alpha = match spec.angle {
        None => regular_angle(n),
        Some(a) if n % 2 == 1 => {
            if (a - regular_angle(n)).abs() > 1e-12 {
                return Err(AnisotropyError::OddNWithAngle { n });
            }
            regular_angle(n)
        }
        Some(a) => {
            let lo = (n as f64 - 4.0) * PI / n as f64;
            if !(a > lo && a < PI) {
                return Err(AnisotropyError::AngleOutOfRange { n, angle: a, lo, hi: PI });
            }
            a
        }
    };
    let beta = 2.0 * (n as f64 - 2.0) * PI / n as f64 - alpha;
    let tau = 2.0 * PI / n as f64;
    // Unit side length; law of sines in each gluing triangle.
    let r_alpha = (0.5 * beta).sin() / tau.sin();
    let r_beta = (0.5 * alpha).sin() / tau.sin();
    let area = 0.5 * n as f64 * r_alpha * r_beta * tau.sin();
    let s = area.sqrt().recip();
    let verts = (0..n)
        .map(|k| {
            let r = if k % 2 == 0 { r_alpha } else { r_beta } * s;
            let phi = k as f64 * tau;
            Vec2::new(r * phi.cos(), r * phi.sin())
        })
        .collect();
    ConvexPolygon::new(verts).map_err(|e: GeometryError| AnisotropyError::Degenerate(e.to_string()))
}

/// Outcome of testing a polygon against the symmetric family's definition.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub is_member: bool,
    /// Largest vertex displacement produced by any vertex-bisector
    /// reflection, in units of the diameter.
    pub symmetry_defect: f64,
    pub area_deviation: f64,
    pub side_length_spread: f64,
    /// Reflection across the interior angle bisector at each vertex.
    #[serde(skip)]
    bisectors: Vec<Isometry>,
}

/// Relative tolerance on the bisector reflection defect, scaled by diameter.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Checks unit area, equal side lengths, and reflection symmetry across the
/// angle bisector at every vertex.
pub fn verify_class_membership(p: &ConvexPolygon) -> MembershipReport {
    let verts = p.vertices();
    let n = verts.len();
    let diam = p.diameter();
    let mut defect = 0.0f64;
    let mut bisectors = Vec::with_capacity(n);
    for k in 0..n {
        let v = verts[k];
        let prev = verts[(k + n - 1) % n];
        let next = verts[(k + 1) % n];
        let din = (prev - v).normalize();
        let dout = (next - v).normalize();
        let bis = din + dout;
        // Interior bisector; mirror-symmetric polygons keep it nonzero
        // because interior angles stay below pi.
        let iso = Isometry::reflection(v, bis);
        bisectors.push(iso);
        let reflected = p.apply_isometry(&iso);
        defect = defect.max(canonical_distance(p, &reflected));
    }
    let lengths: Vec<f64> = p.sides().iter().map(|s| s.length).collect();
    let spread = lengths.iter().fold(f64::MIN, |a, &b| a.max(b))
        - lengths.iter().fold(f64::MAX, |a, &b| a.min(b));
    let area_dev = (p.area() - 1.0).abs();
    let tol = MEMBERSHIP_TOL * diam;
    MembershipReport {
        is_member: defect <= tol && spread <= tol && area_dev <= 1e-9,
        symmetry_defect: defect / diam,
        area_deviation: area_dev,
        side_length_spread: spread,
        bisectors,
    }
}

impl MembershipReport {
    pub fn bisector_reflections(&self) -> &[Isometry] {
        &self.bisectors
    }

    /// Isometry fixing the polygon and carrying side `i` onto side `j`,
    /// composed from bisector reflections; meaningful only for members.
    /// The reflection at vertex k + 1 swaps sides k and k + 1, so stepping
    /// the index one side at a time reaches any target.
    pub fn side_witness(&self, i: usize, j: usize) -> Isometry {
        let n = self.bisectors.len();
        let steps = (j + n - (i % n)) % n;
        let mut iso = Isometry::identity();
        let mut cur = i % n;
        for _ in 0..steps {
            let next = (cur + 1) % n;
            iso = self.bisectors[next].after(&iso);
            cur = next;
        }
        iso
    }
}

/// Smallest max-vertex distance between canonical forms over cyclic shifts;
/// infinity when the vertex counts differ.
fn canonical_distance(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    let a = p.vertices();
    let b = q.vertices();
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    let mut best = f64::INFINITY;
    for s in 0..n {
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max((a[i] - b[(i + s) % n]).norm());
            if worst >= best {
                break;
            }
        }
        best = best.min(worst);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn corner_square_tension() -> CrystallineTension {
        CrystallineTension::new(vec![
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
        ])
        .unwrap()
    }

    #[test]
    fn tension_value_is_support_of_generators() {
        let t = corner_square_tension();
        // Support of the square [-1,1]^2 is |v1| + |v2|.
        assert_relative_eq!(t.value(Vec2::new(1.0, 0.0)), 1.0);
        assert_relative_eq!(t.value(Vec2::new(0.6, -0.8)), 1.4, max_relative = 1e-14);
        // Homogeneity and subadditivity on random directions.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let u = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let v = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let lam = rng.random_range(0.0..3.0);
            assert_relative_eq!(t.value(lam * u), lam * t.value(u), epsilon = 1e-12);
            assert!(t.value(u + v) <= t.value(u) + t.value(v) + 1e-12);
        }
    }

    #[test]
    fn interior_generators_are_dropped_with_report() {
        let mut gens = corner_square_tension().generators().to_vec();
        gens.push(Vec2::new(0.2, 0.1));
        let (t, minimal) = CrystallineTension::new_report(gens).unwrap();
        assert!(!minimal);
        assert_eq!(t.generators().len(), 4);
        assert!(t.wulff_shape().approx_eq(&corner_square_tension().wulff_shape(), 1e-14));
    }

    #[test]
    fn origin_outside_and_degenerate_hulls_error() {
        let shifted: Vec<Vec2> = corner_square_tension()
            .generators()
            .iter()
            .map(|g| g + Vec2::new(3.0, 0.0))
            .collect();
        assert_eq!(CrystallineTension::new(shifted).unwrap_err(), AnisotropyError::OriginOutside);
        let line = vec![Vec2::new(-1.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        assert!(matches!(
            CrystallineTension::new(line),
            Err(AnisotropyError::Degenerate(_))
        ));
    }

    #[test]
    fn polygon_tension_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3usize, 4, 5, 6, 8] {
            let p = crate::geometry::random_convex_polygon(&mut rng, n).centered();
            let t = CrystallineTension::from_polygon(&p).unwrap();
            assert!(t.wulff_shape().approx_eq(&p, 1e-12 * p.diameter()));
        }
    }

    #[test]
    fn wulff_perimeter_equals_twice_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3usize, 4, 6, 7] {
            let w = crate::geometry::random_convex_polygon(&mut rng, n).centered();
            let t = CrystallineTension::from_polygon(&w).unwrap();
            assert_relative_eq!(t.perimeter(&w), 2.0 * w.area(), max_relative = 1e-12);
        }
    }

    #[test]
    fn dual_value_tests_wulff_membership() {
        let t = corner_square_tension();
        let w = t.wulff_shape();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let x = Vec2::new(rng.random_range(-1.6..1.6), rng.random_range(-1.6..1.6));
            let dual = t.dual_value(x);
            let inside = w.contains(x, -1e-9);
            let outside = !w.contains(x, 1e-9);
            if dual < 1.0 - 1e-9 {
                assert!(inside, "dual < 1 must mean strict interior, x = {x:?}");
            }
            if dual > 1.0 + 1e-9 {
                assert!(outside, "dual > 1 must mean strict exterior, x = {x:?}");
            }
        }
    }

    #[test]
    fn wulff_inequality_holds_on_random_competitors() {
        let t = corner_square_tension();
        let w = t.wulff_shape();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 3..=8 {
            let p = crate::geometry::random_convex_polygon(&mut rng, n);
            let lower = 2.0 * (w.area() * p.area()).sqrt();
            assert!(t.perimeter(&p) >= lower - 1e-10);
        }
    }

    #[test]
    fn regular_polygons_have_unit_area_and_membership() {
        for n in 3..=8 {
            let p = build_symmetric_polygon(SymmetricPolygonSpec { n, angle: None }).unwrap();
            assert_relative_eq!(p.area(), 1.0, max_relative = 1e-13);
            let report = verify_class_membership(&p);
            assert!(report.is_member, "regular {n}-gon must be in the class: {report:?}");
        }
    }

    #[test]
    fn hexagon_family_member_alternates_prescribed_angles() {
        let alpha = 0.6 * PI;
        let p =
            build_symmetric_polygon(SymmetricPolygonSpec { n: 6, angle: Some(alpha) }).unwrap();
        assert_relative_eq!(p.area(), 1.0, max_relative = 1e-13);
        assert!(verify_class_membership(&p).is_member);
        // Interior angles alternate alpha and beta with 3(alpha + beta) =
        // 4 pi; read them back off the vertices.
        let verts = p.vertices();
        let beta = 2.0 * 4.0 * PI / 6.0 - alpha;
        let mut seen = Vec::new();
        for k in 0..6 {
            let v = verts[k];
            let a = (verts[(k + 5) % 6] - v).normalize();
            let b = (verts[(k + 1) % 6] - v).normalize();
            seen.push(a.dot(&b).clamp(-1.0, 1.0).acos());
        }
        for k in 0..6 {
            let expect = if (seen[0] - alpha).abs() < 1e-9 {
                if k % 2 == 0 { alpha } else { beta }
            } else {
                if k % 2 == 0 { beta } else { alpha }
            };
            assert_relative_eq!(seen[k], expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn rhombus_is_the_four_sided_family() {
        let p = build_symmetric_polygon(SymmetricPolygonSpec { n: 4, angle: Some(PI / 3.0) })
            .unwrap();
        assert_relative_eq!(p.area(), 1.0, max_relative = 1e-13);
        let lengths: Vec<f64> = p.sides().iter().map(|s| s.length).collect();
        for l in &lengths {
            assert_relative_eq!(*l, lengths[0], max_relative = 1e-12);
        }
        assert!(verify_class_membership(&p).is_member);
    }

    #[test]
    fn family_angle_validation() {
        assert!(matches!(
            build_symmetric_polygon(SymmetricPolygonSpec { n: 5, angle: Some(0.55 * PI) }),
            Err(AnisotropyError::OddNWithAngle { n: 5 })
        ));
        // Odd n with the regular angle itself is accepted.
        assert!(build_symmetric_polygon(SymmetricPolygonSpec {
            n: 5,
            angle: Some(regular_angle(5))
        })
        .is_ok());
        assert!(matches!(
            build_symmetric_polygon(SymmetricPolygonSpec { n: 6, angle: Some(PI) }),
            Err(AnisotropyError::AngleOutOfRange { .. })
        ));
        let lo = 2.0 * PI / 6.0;
        assert!(matches!(
            build_symmetric_polygon(SymmetricPolygonSpec { n: 6, angle: Some(lo) }),
            Err(AnisotropyError::AngleOutOfRange { .. })
        ));
    }

    #[test]
    fn irregular_polygons_are_not_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = crate::geometry::random_convex_polygon(&mut rng, 6);
        assert!(!verify_class_membership(&p).is_member);
        // A rectangle is equilateral only when square; 2:1 rectangle fails.
        let r = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0f64.sqrt(), 0.0),
            Vec2::new(2.0f64.sqrt(), 0.5f64.sqrt()),
            Vec2::new(0.0, 0.5f64.sqrt()),
        ])
        .unwrap();
        assert_relative_eq!(r.area(), 1.0, max_relative = 1e-12);
        assert!(!verify_class_membership(&r).is_member);
    }

    #[test]
    fn side_witnesses_fix_the_polygon_and_map_sides() {
        let p = build_symmetric_polygon(SymmetricPolygonSpec { n: 6, angle: Some(0.6 * PI) })
            .unwrap();
        let report = verify_class_membership(&p);
        assert!(report.is_member);
        let sides = p.sides();
        for i in 0..6 {
            for j in 0..6 {
                let iso = report.side_witness(i, j);
                let q = p.apply_isometry(&iso);
                assert!(p.approx_eq(&q, 1e-9), "witness must fix the polygon");
                let (a, b) = (iso.apply(sides[i].a), iso.apply(sides[i].b));
                let (ta, tb) = (sides[j].a, sides[j].b);
                let fwd = (a - ta).norm().max((b - tb).norm());
                let rev = (a - tb).norm().max((b - ta).norm());
                assert!(
                    fwd.min(rev) < 1e-9,
                    "witness must carry side {i} onto side {j}"
                );
            }
        }
    }
}
