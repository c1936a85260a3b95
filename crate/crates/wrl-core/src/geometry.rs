//! Exact convex polygon geometry.
//!
//! Every polygon in this crate lives in canonical form: vertices in
//! counterclockwise order, consecutive collinear runs merged, and the list
//! rotated so the lexicographically smallest vertex (by x, then y) comes
//! first. Canonical form makes structural equality a plain vertex-by-vertex
//! comparison, which the deterministic output guarantees rely on.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Relative tolerance for merging collinear vertex runs, applied as
/// `cross < COLLINEAR_REL_TOL * scale^2` with `scale` the bounding box extent.
const COLLINEAR_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("polygon is degenerate: {0}")]
    Degenerate(&'static str),
    #[error("half-plane intersection is empty or unbounded")]
    EmptyOrUnbounded,
    #[error("linear part is not orthogonal")]
    NotOrthogonal,
}

/// Closed half-plane `{ x : normal . x <= offset }` with unit normal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: Vec2,
    pub offset: f64,
}

impl HalfPlane {
    /// Normalizes `normal` to unit length, scaling `offset` to keep the set.
    pub fn new(normal: Vec2, offset: f64) -> Result<Self, GeometryError> {
        let n = normal.norm();
        if n < 1e-300 {
            return Err(GeometryError::Degenerate("zero normal"));
        }
        Ok(Self { normal: normal / n, offset: offset / n })
    }

    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.normal.dot(&p) - self.offset
    }
}

/// Rigid motion of the plane, possibly orientation reversing.
#[derive(Debug, Clone, Copy)]
pub struct Isometry {
    pub linear: Matrix2<f64>,
    pub translation: Vec2,
}

impl Isometry {
    pub fn identity() -> Self {
        Self { linear: Matrix2::identity(), translation: Vec2::zeros() }
    }

    pub fn translation(v: Vec2) -> Self {
        Self { linear: Matrix2::identity(), translation: v }
    }

    /// Rotation by `angle` about `center`.
    pub fn rotation(center: Vec2, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let linear = Matrix2::new(c, -s, s, c);
        Self { linear, translation: center - linear * center }
    }

    /// Reflection across the line through `point` with direction `dir`.
    pub fn reflection(point: Vec2, dir: Vec2) -> Self {
        let d = dir / dir.norm();
        // Householder-style reflection matrix for the line spanned by d.
        let linear = Matrix2::new(
            d.x * d.x - d.y * d.y,
            2.0 * d.x * d.y,
            2.0 * d.x * d.y,
            d.y * d.y - d.x * d.x,
        );
        Self { linear, translation: point - linear * point }
    }

    /// Builds from an explicit linear part, rejecting non-orthogonal input.
    pub fn from_parts(linear: Matrix2<f64>, translation: Vec2) -> Result<Self, GeometryError> {
        let dev = (linear.transpose() * linear - Matrix2::identity()).norm();
        if dev > 1e-9 {
            return Err(GeometryError::NotOrthogonal);
        }
        Ok(Self { linear, translation })
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        self.linear * p + self.translation
    }

    /// Composition acting as `self` after `first`.
    pub fn after(&self, first: &Isometry) -> Isometry {
        Isometry {
            linear: self.linear * first.linear,
            translation: self.linear * first.translation + self.translation,
        }
    }
}

/// One side of a polygon, from vertex `a` to vertex `b` counterclockwise.
/// `normal` is the outward unit normal.
#[derive(Debug, Clone, Copy)]
pub struct Side {
    pub a: Vec2,
    pub b: Vec2,
    pub normal: Vec2,
    pub length: f64,
}

impl Side {
    pub fn midpoint(&self) -> Vec2 {
        0.5 * (self.a + self.b)
    }

    /// Point at arclength fraction `t` in [0, 1] from `a`.
    pub fn point_at(&self, t: f64) -> Vec2 {
        self.a + t * (self.b - self.a)
    }
}

#[derive(Serialize, Deserialize)]
struct PolygonJson {
    vertices: Vec<[f64; 2]>,
}

impl From<ConvexPolygon> for PolygonJson {
    fn from(p: ConvexPolygon) -> Self {
        PolygonJson { vertices: p.verts.iter().map(|v| [v.x, v.y]).collect() }
    }
}

impl TryFrom<PolygonJson> for ConvexPolygon {
    type Error = GeometryError;
    fn try_from(j: PolygonJson) -> Result<Self, GeometryError> {
        ConvexPolygon::new(j.vertices.into_iter().map(|[x, y]| Vec2::new(x, y)).collect())
    }
}

/// Convex polygon in canonical form. Construction validates convexity and
/// positive area; all later operations may assume both.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "PolygonJson", into = "PolygonJson")]
pub struct ConvexPolygon {
    verts: Vec<Vec2>,
}

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn bbox_scale(pts: &[Vec2]) -> f64 {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    (xmax - xmin).max(ymax - ymin).max(1e-300)
}

impl ConvexPolygon {
    /// Accepts a cyclic vertex sequence in either orientation, canonicalizes
    /// it, and validates strict convexity after collinear merging.
    pub fn new(mut verts: Vec<Vec2>) -> Result<Self, GeometryError> {
        if verts.len() < 3 {
            return Err(GeometryError::Degenerate("fewer than 3 vertices"));
        }
        if verts.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(GeometryError::Degenerate("non-finite vertex"));
        }
        let area2: f64 = signed_area2(&verts);
        if area2 < 0.0 {
            verts.reverse();
        }
        let scale = bbox_scale(&verts);
        let tol = COLLINEAR_REL_TOL * scale * scale;

        // Merge consecutive duplicates and collinear runs. A pass can expose
        // new collinearity at the seam, so iterate until stable.
        loop {
            let n = verts.len();
            if n < 3 {
                return Err(GeometryError::Degenerate("collapses under merging"));
            }
            let mut kept: Vec<Vec2> = Vec::with_capacity(n);
            for i in 0..n {
                let prev = verts[(i + n - 1) % n];
                let cur = verts[i];
                let next = verts[(i + 1) % n];
                if (cur - prev).norm() <= COLLINEAR_REL_TOL.sqrt() * scale * 1e-3 {
                    continue;
                }
                if cross(prev, cur, next) <= tol {
                    // Convexity demands a strict left turn; drop flat vertices
                    // now and reject right turns below.
                    if cross(prev, cur, next) < -tol {
                        return Err(GeometryError::Degenerate("reflex vertex"));
                    }
                    continue;
                }
                kept.push(cur);
            }
            if kept.len() == verts.len() {
                break;
            }
            verts = kept;
        }
        if verts.len() < 3 || signed_area2(&verts) <= tol {
            return Err(GeometryError::Degenerate("zero area"));
        }
        for i in 0..verts.len() {
            let n = verts.len();
            if cross(verts[i], verts[(i + 1) % n], verts[(i + 2) % n]) <= 0.0 {
                return Err(GeometryError::Degenerate("not strictly convex"));
            }
        }
        let first = (0..verts.len())
            .min_by(|&i, &j| {
                (verts[i].x, verts[i].y)
                    .partial_cmp(&(verts[j].x, verts[j].y))
                    .unwrap()
            })
            .unwrap();
        verts.rotate_left(first);
        Ok(Self { verts })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.verts
    }

    pub fn num_sides(&self) -> usize {
        self.verts.len()
    }

    pub fn area(&self) -> f64 {
        0.5 * signed_area2(&self.verts)
    }

    pub fn perimeter(&self) -> f64 {
        self.sides().iter().map(|s| s.length).sum()
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.verts.len();
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a2 = 0.0;
        for i in 0..n {
            let p = self.verts[i];
            let q = self.verts[(i + 1) % n];
            let w = p.x * q.y - q.x * p.y;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
            a2 += w;
        }
        Vec2::new(cx, cy) / (3.0 * a2)
    }

    pub fn diameter(&self) -> f64 {
        let mut d2 = 0.0f64;
        for (i, p) in self.verts.iter().enumerate() {
            for q in &self.verts[i + 1..] {
                d2 = d2.max((p - q).norm_squared());
            }
        }
        d2.sqrt()
    }

    pub fn sides(&self) -> Vec<Side> {
        let n = self.verts.len();
        (0..n)
            .map(|i| {
                let a = self.verts[i];
                let b = self.verts[(i + 1) % n];
                let e = b - a;
                let length = e.norm();
                Side { a, b, normal: Vec2::new(e.y, -e.x) / length, length }
            })
            .collect()
    }

    /// Outward half-plane representation; intersecting them recovers `self`.
    pub fn halfplanes(&self) -> Vec<HalfPlane> {
        self.sides()
            .iter()
            .map(|s| HalfPlane { normal: s.normal, offset: s.normal.dot(&s.a) })
            .collect()
    }

    pub fn support(&self, dir: Vec2) -> f64 {
        self.verts.iter().map(|v| v.dot(&dir)).fold(f64::MIN, f64::max)
    }

    /// True when `p` lies in the closed polygon within `tol` (absolute).
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        self.halfplanes().iter().all(|h| h.signed_distance(p) <= tol)
    }

    pub fn translated(&self, v: Vec2) -> ConvexPolygon {
        ConvexPolygon::new(self.verts.iter().map(|p| p + v).collect())
            .expect("translation preserves convexity")
    }

    /// Translate so the centroid sits at the origin.
    pub fn centered(&self) -> ConvexPolygon {
        self.translated(-self.centroid())
    }

    /// Dilation about the origin by `s > 0`.
    pub fn scaled(&self, s: f64) -> ConvexPolygon {
        assert!(s > 0.0, "scale factor must be positive");
        ConvexPolygon::new(self.verts.iter().map(|p| p * s).collect())
            .expect("dilation preserves convexity")
    }

    pub fn apply_isometry(&self, iso: &Isometry) -> ConvexPolygon {
        ConvexPolygon::new(self.verts.iter().map(|p| iso.apply(*p)).collect())
            .expect("isometry preserves convexity")
    }

    /// Fan triangulation about the centroid: `[centroid, v_i, v_{i+1}]`.
    pub fn triangulate(&self) -> Vec<[Vec2; 3]> {
        let c = self.centroid();
        let n = self.verts.len();
        (0..n).map(|i| [c, self.verts[i], self.verts[(i + 1) % n]]).collect()
    }

    /// Clips `self` by the complement-free intersection with `other`.
    /// Returns `None` when the overlap has empty interior, including pure
    /// edge or vertex contact.
    pub fn intersection(&self, other: &ConvexPolygon) -> Option<ConvexPolygon> {
        let mut poly: Vec<Vec2> = self.verts.clone();
        for h in other.halfplanes() {
            poly = clip_by_halfplane(&poly, &h);
            if poly.len() < 3 {
                return None;
            }
        }
        ConvexPolygon::new(poly).ok()
    }

    pub fn symmetric_difference_area(&self, other: &ConvexPolygon) -> f64 {
        let inter = self.intersection(other).map(|p| p.area()).unwrap_or(0.0);
        self.area() + other.area() - 2.0 * inter
    }

    /// Vertex-wise equality of canonical forms within absolute `tol`.
    /// Handles the canonical rotation being sensitive to ties by comparing
    /// under all cyclic shifts when counts match.
    pub fn approx_eq(&self, other: &ConvexPolygon, tol: f64) -> bool {
        let n = self.verts.len();
        if n != other.verts.len() {
            return false;
        }
        'shift: for s in 0..n {
            for i in 0..n {
                if (self.verts[i] - other.verts[(i + s) % n]).norm() > tol {
                    continue 'shift;
                }
            }
            return true;
        }
        false
    }
}

fn signed_area2(verts: &[Vec2]) -> f64 {
    let n = verts.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = verts[i];
        let q = verts[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    a
}

/// Sutherland-Hodgman clip of a convex CCW vertex loop by one half-plane.
fn clip_by_halfplane(poly: &[Vec2], h: &HalfPlane) -> Vec<Vec2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = poly[i];
        let next = poly[(i + 1) % n];
        let dc = h.signed_distance(cur);
        let dn = h.signed_distance(next);
        if dc <= 0.0 {
            out.push(cur);
        }
        if (dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0) {
            out.push(cur + (dc / (dc - dn)) * (next - cur));
        }
    }
    out
}

/// Bounded intersection of closed half-planes `normal . x <= offset` by the
/// sorted-deque sweep. Every vertex is the direct solution of its two
/// defining side lines, so coordinates carry no precision loss from
/// clipping against auxiliary geometry — offsets round-trip at working
/// precision, which downstream root-finding on areas depends on.
pub fn intersect_halfplanes(planes: &[HalfPlane]) -> Result<ConvexPolygon, GeometryError> {
    use std::collections::VecDeque;
    if planes.len() < 3 {
        return Err(GeometryError::EmptyOrUnbounded);
    }
    let cross2 = |a: Vec2, b: Vec2| a.x * b.y - a.y * b.x;
    let ang = |h: &HalfPlane| h.normal.y.atan2(h.normal.x);
    let mut idx: Vec<usize> = (0..planes.len()).collect();
    idx.sort_by(|&a, &b| ang(&planes[a]).partial_cmp(&ang(&planes[b])).unwrap());

    // Merge same-direction planes, keeping the tighter one; reject outright
    // contradictions between opposing parallel planes.
    let mut sorted: Vec<HalfPlane> = Vec::with_capacity(planes.len());
    for &i in &idx {
        let h = planes[i];
        if let Some(last) = sorted.last_mut() {
            if cross2(last.normal, h.normal).abs() < 1e-12 && last.normal.dot(&h.normal) > 0.0 {
                if h.offset < last.offset {
                    *last = h;
                }
                continue;
            }
        }
        sorted.push(h);
    }
    if sorted.len() >= 2 {
        let first = sorted[0];
        let last = *sorted.last().unwrap();
        if cross2(last.normal, first.normal).abs() < 1e-12 && last.normal.dot(&first.normal) > 0.0
        {
            if last.offset < first.offset {
                sorted[0] = last;
            }
            sorted.pop();
        }
    }
    if sorted.len() < 3 {
        return Err(GeometryError::EmptyOrUnbounded);
    }

    // Bounded intersections need the normals to positively span the plane:
    // any cyclic gap of pi or more leaves an escape direction.
    let angles: Vec<f64> = sorted.iter().map(ang).collect();
    for k in 0..angles.len() {
        let next = if k + 1 < angles.len() {
            angles[k + 1]
        } else {
            angles[0] + std::f64::consts::TAU
        };
        if next - angles[k] >= std::f64::consts::PI - 1e-12 {
            return Err(GeometryError::EmptyOrUnbounded);
        }
    }

    let scale = sorted
        .iter()
        .map(|h| h.offset.abs())
        .fold(1.0f64, f64::max);
    let inter = |a: &HalfPlane, b: &HalfPlane| -> Option<Vec2> {
        let det = cross2(a.normal, b.normal);
        if det.abs() < 1e-14 {
            return None;
        }
        Some(Vec2::new(
            (a.offset * b.normal.y - b.offset * a.normal.y) / det,
            (a.normal.x * b.offset - b.normal.x * a.offset) / det,
        ))
    };
    let viol = |h: &HalfPlane, v: Vec2| h.normal.dot(&v) - h.offset > 1e-12 * (scale + v.norm());

    let mut dq: VecDeque<HalfPlane> = VecDeque::new();
    for &h in &sorted {
        while dq.len() >= 2 {
            match inter(&dq[dq.len() - 2], &dq[dq.len() - 1]) {
                Some(v) if viol(&h, v) => {
                    dq.pop_back();
                }
                _ => break,
            }
        }
        while dq.len() >= 2 {
            match inter(&dq[0], &dq[1]) {
                Some(v) if viol(&h, v) => {
                    dq.pop_front();
                }
                _ => break,
            }
        }
        if let Some(back) = dq.back() {
            // Opposing near-parallel planes: empty when the strip closes.
            if cross2(back.normal, h.normal).abs() < 1e-12
                && back.normal.dot(&h.normal) < 0.0
                && back.offset + h.offset < 0.0
            {
                return Err(GeometryError::EmptyOrUnbounded);
            }
        }
        dq.push_back(h);
    }
    loop {
        let mut changed = false;
        while dq.len() >= 3 {
            match inter(&dq[dq.len() - 2], &dq[dq.len() - 1]) {
                Some(v) if viol(&dq[0], v) => {
                    dq.pop_back();
                    changed = true;
                }
                _ => break,
            }
        }
        while dq.len() >= 3 {
            match inter(&dq[0], &dq[1]) {
                Some(v) if viol(&dq[dq.len() - 1], v) => {
                    dq.pop_front();
                    changed = true;
                }
                _ => break,
            }
        }
        if !changed {
            break;
        }
    }
    if dq.len() < 3 {
        return Err(GeometryError::EmptyOrUnbounded);
    }

    let m = dq.len();
    let mut verts = Vec::with_capacity(m);
    for k in 0..m {
        let v = inter(&dq[k], &dq[(k + 1) % m]).ok_or(GeometryError::EmptyOrUnbounded)?;
        verts.push(v);
    }
    // Contradictory configurations can slip through the sweep as a false
    // polygon; every input plane must hold at every vertex.
    for h in planes {
        for v in &verts {
            if h.normal.dot(v) - h.offset > 1e-9 * (scale + v.norm()) {
                return Err(GeometryError::EmptyOrUnbounded);
            }
        }
    }
    ConvexPolygon::new(verts).map_err(|_| GeometryError::EmptyOrUnbounded)
}

/// Andrew's monotone chain hull. Collinear boundary points are dropped.
pub fn hull_of_points(points: &[Vec2]) -> Result<ConvexPolygon, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::Degenerate("fewer than 3 points"));
    }
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| (*a - *b).norm() == 0.0);
    let eps = COLLINEAR_REL_TOL * bbox_scale(&pts).powi(2);
    let build = |iter: &mut dyn Iterator<Item = Vec2>| {
        let mut chain: Vec<Vec2> = Vec::new();
        for p in iter {
            while chain.len() >= 2
                && cross(chain[chain.len() - 2], chain[chain.len() - 1], p) <= eps
            {
                chain.pop();
            }
            chain.push(p);
        }
        chain
    };
    let mut lower = build(&mut pts.iter().copied());
    let mut upper = build(&mut pts.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    ConvexPolygon::new(lower)
}

/// Uniformly random point in a triangle, by square-root reflection.
pub fn sample_triangle(tri: &[Vec2; 3], u: f64, v: f64) -> Vec2 {
    let su = u.sqrt();
    tri[0] * (1.0 - su) + tri[1] * (su * (1.0 - v)) + tri[2] * (su * v)
}

/// Random convex polygon with `n` sides, built from the hull of random
/// points and retried until the hull has exactly `n` vertices. Used by the
/// search lab and the test corpus.
pub fn random_convex_polygon<R: rand::Rng>(rng: &mut R, n: usize) -> ConvexPolygon {
    assert!((3..=32).contains(&n));
    loop {
        let cloud: Vec<Vec2> = (0..3 * n)
            .map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        if let Ok(hull) = hull_of_points(&cloud) {
            if hull.num_sides() == n {
                let a = hull.area();
                let c = hull.centroid();
                return hull.translated(-c).scaled(1.0 / a.sqrt());
            }
        }
    }
}
