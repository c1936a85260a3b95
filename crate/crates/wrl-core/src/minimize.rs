//! The total energy (anisotropic perimeter plus a gamma-weighted nonlocal
//! term), its constrained minimization over the fixed-fan variation class,
//! and the diagnostics built on top of it: the empirical gamma threshold
//! where the symmetric shape stops being the in-class minimizer, the
//! rigidity partition of a candidate's boundary by Wulff-normal alignment,
//! the single-piece-versus-split comparison under mass scaling, and a
//! residual-descent search for critical polygons outside the symmetric
//! family.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anisotropy::{
    verify_class_membership, AnisotropyError, CrystallineTension, MembershipReport,
};
use crate::geometry::{random_convex_polygon, ConvexPolygon, GeometryError};
use crate::quadrature::{gauss_rule, pairwise_sum};
use crate::riesz::{
    best_effort, boundary_potential, self_energy, side_average_potential, EnergyValue,
    QuadratureSpec, RieszError, RieszParams,
};
use crate::variation::{criticality_residual, VariationError, VariationFrame, VariationVector};

#[derive(Debug, Clone, Error)]
pub enum MinimizeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Anisotropy(#[from] AnisotropyError),
    #[error(transparent)]
    Riesz(#[from] RieszError),
    #[error(transparent)]
    Variation(#[from] VariationError),
}

// ---------------------------------------------------------------------------
// Total energy and mass scaling.

/// Perimeter and nonlocal contributions to the total energy at one gamma.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub gamma: f64,
    pub perimeter_term: f64,
    pub nonlocal_term: EnergyValue,
    /// Exactly perimeter_term + gamma * nonlocal_term.value.
    pub total: f64,
}

/// Anisotropic perimeter plus gamma times the self interaction.
pub fn total_energy(
    e: &ConvexPolygon,
    tension: &CrystallineTension,
    gamma: f64,
    params: &RieszParams,
    spec: &QuadratureSpec,
) -> Result<EnergyReport, MinimizeError> {
    if !(gamma >= 0.0) {
        return Err(MinimizeError::InvalidInput(format!(
            "gamma must be a nonnegative number, got {gamma}"
        )));
    }
    let perimeter_term = tension.perimeter(e);
    let nonlocal_term = self_energy(e, params, spec)?;
    Ok(EnergyReport {
        gamma,
        perimeter_term,
        nonlocal_term,
        total: perimeter_term + gamma * nonlocal_term.value,
    })
}

/// Both sides of the mass-scaling identity
/// `E_gamma(E) = m^(1/2) [P(E~) + gamma m^(3/2 - alpha/2) V(E~)]`
/// with `m = |E|` and `E~ = m^(-1/2) E`, evaluated independently.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MassScalingReport {
    pub mass: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

pub fn mass_scaling_check(
    e: &ConvexPolygon,
    tension: &CrystallineTension,
    gamma: f64,
    params: &RieszParams,
    spec: &QuadratureSpec,
) -> Result<MassScalingReport, MinimizeError> {
    let mass = e.area();
    let lhs = total_energy(e, tension, gamma, params, spec)?.total;
    let unit = e.scaled(1.0 / mass.sqrt());
    let perim = tension.perimeter(&unit);
    let nonlocal = self_energy(&unit, params, spec)?.value;
    let rhs = mass.sqrt() * (perim + gamma * mass.powf(1.5 - 0.5 * params.alpha()) * nonlocal);
    Ok(MassScalingReport {
        mass,
        lhs,
        rhs,
        rel_err: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE),
    })
}

// ---------------------------------------------------------------------------
// Projected quasi-Newton descent on a box.

#[derive(Debug, Clone)]
struct DescentOutcome {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
    monotone: bool,
}

/// BFGS with coordinates clamped to [-bound, bound]; infeasible points
/// carry value +infinity and are rejected by the line search. Convergence
/// is the fixed-point residual |x - clamp(x - g)|_inf < tol.
fn projected_bfgs<F, G>(
    x0: &[f64],
    bound: f64,
    tol: f64,
    max_iters: usize,
    f: F,
    grad: G,
) -> DescentOutcome
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let dim = x0.len();
    let clamp = |v: &mut [f64]| {
        for c in v.iter_mut() {
            *c = c.clamp(-bound, bound);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut fx = f(&x);
    let mut monotone = true;
    if !fx.is_finite() {
        return DescentOutcome { x, f: fx, iterations: 0, converged: false, monotone };
    }
    let mut g = match grad(&x) {
        Some(g) => g,
        None => return DescentOutcome { x, f: fx, iterations: 0, converged: false, monotone },
    };
    let mut h = DMatrix::<f64>::identity(dim, dim);
    let mut iterations = 0usize;
    let mut converged = false;
    for _ in 0..max_iters {
        let pg = (0..dim)
            .map(|i| (x[i] - (x[i] - g[i]).clamp(-bound, bound)).abs())
            .fold(0.0f64, f64::max);
        if pg < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let gv = DVector::from_column_slice(&g);
        let mut dir = -(&h * &gv);
        if dir.dot(&gv) >= 0.0 {
            h = DMatrix::identity(dim, dim);
            dir = -gv.clone();
        }
        let mut accepted: Option<(Vec<f64>, f64)> = None;
        let mut t = 1.0f64;
        for _ in 0..30 {
            let mut xt: Vec<f64> = (0..dim).map(|i| x[i] + t * dir[i]).collect();
            clamp(&mut xt);
            let moved: f64 = (0..dim).map(|i| (xt[i] - x[i]).abs()).fold(0.0, f64::max);
            if moved < 1e-16 * bound.max(1.0) {
                break;
            }
            let pred: f64 = (0..dim).map(|i| g[i] * (xt[i] - x[i])).sum();
            let ft = f(&xt);
            if ft.is_finite() && pred < 0.0 && ft <= fx + 1e-4 * pred {
                accepted = Some((xt, ft));
                break;
            }
            t *= 0.5;
        }
        let (xt, ft) = match accepted {
            Some(a) => a,
            None => break,
        };
        let gt = match grad(&xt) {
            Some(g) => g,
            None => {
                monotone &= ft <= fx + 1e-15;
                x = xt;
                fx = ft;
                break;
            }
        };
        let s = DVector::from_iterator(dim, (0..dim).map(|i| xt[i] - x[i]));
        let y = DVector::from_iterator(dim, (0..dim).map(|i| gt[i] - g[i]));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let id = DMatrix::<f64>::identity(dim, dim);
            let left = &id - rho * &s * y.transpose();
            h = &left * h * left.transpose() + rho * &s * s.transpose();
        }
        monotone &= ft <= fx + 1e-15;
        x = xt;
        fx = ft;
        g = gt;
    }
    DescentOutcome { x, f: fx, iterations, converged, monotone }
}

// ---------------------------------------------------------------------------
// Constrained minimization over the variation class.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Projected-gradient convergence tolerance.
    pub tol: f64,
    /// Total number of starts: the zero vector plus num_starts - 1 random
    /// points in (-epsilon/2, epsilon/2)^(n-1).
    pub num_starts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iters: 80, tol: 1e-6, num_starts: 10, seed: 42 }
    }
}

/// How one descent start ended: where it landed, how far that is from the
/// base shape, and whether the run converged monotonically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartRecord {
    pub start_index: usize,
    pub final_energy: f64,
    /// Sup norm over the n - 1 free offsets at the final point.
    pub sup_norm: f64,
    /// Sup norm of the side offsets after removing the rigid-translation
    /// component (the final shape and the base are centroid-aligned before
    /// comparing per-side support offsets). Shapes whose offset coordinates
    /// contain exact translation directions — any polygon with opposite
    /// normal pairs, like the square or regular hexagon — have flat valleys
    /// of energy-equal translates, so this is the meaningful distance from
    /// the base shape. `None` when the final point is infeasible.
    pub aligned_sup_norm: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub monotone: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizationResult {
    /// All n side offsets of the best minimizer found (the last one is the
    /// volume-restoring displacement), with the bound they respect.
    pub d_star: VariationVector,
    pub energy_at_dstar: EnergyReport,
    pub energy_at_zero: EnergyReport,
    pub converged: bool,
    pub iterations: usize,
    /// One record per start, in start order (index 0 is the zero start).
    pub start_records: Vec<StartRecord>,
}

impl MinimizationResult {
    /// Largest displacement magnitude over all sides.
    pub fn sup_norm(&self) -> f64 {
        self.d_star.d.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

struct ReducedEnergy<'a> {
    frame: &'a VariationFrame,
    tension: &'a CrystallineTension,
    gamma: f64,
    params: &'a RieszParams,
    spec: &'a QuadratureSpec,
    bound: f64,
}

impl ReducedEnergy<'_> {
    fn polygon(&self, d: &[f64]) -> Option<(ConvexPolygon, f64)> {
        let (q, dn) = self.frame.restored_polygon(d).ok()?;
        if dn.abs() >= self.bound {
            return None;
        }
        Some((q, dn))
    }

    /// Reduced total energy; infeasible offsets carry +infinity so the line
    /// search rejects them, and a quadrature-tolerance miss contributes its
    /// best-effort value rather than aborting the descent.
    fn value(&self, d: &[f64]) -> f64 {
        match self.polygon(d) {
            Some((q, _)) => {
                let perim = self.tension.perimeter(&q);
                match best_effort(self_energy(&q, self.params, self.spec)) {
                    Ok(v) => perim + self.gamma * v.value,
                    Err(_) => f64::INFINITY,
                }
            }
            None => f64::INFINITY,
        }
    }

    /// The full report at a feasible point, tolerance misses downgraded.
    fn report(&self, q: &ConvexPolygon) -> Result<EnergyReport, MinimizeError> {
        let perimeter_term = self.tension.perimeter(q);
        let nonlocal_term = best_effort(self_energy(q, self.params, self.spec))?;
        Ok(EnergyReport {
            gamma: self.gamma,
            perimeter_term,
            nonlocal_term,
            total: perimeter_term + self.gamma * nonlocal_term.value,
        })
    }

    /// Perimeter part by a centered difference of the reduced perimeter;
    /// nonlocal part by the closed form 2 l_i (avg_i - avg_last) with all
    /// side averages computed once at the current polygon.
    fn gradient(&self, d: &[f64]) -> Option<Vec<f64>> {
        let n = self.frame.num_sides();
        let (q, _) = self.polygon(d)?;
        let map = self.frame.side_map(&q).ok()?;
        let sides = q.sides();
        let fd_step = 1e-6;
        let nonlocal: Vec<f64> = if self.gamma > 0.0 {
            (0..n)
                .map(|k| side_average_potential(&q, map[k], self.params, self.spec).value)
                .collect()
        } else {
            vec![0.0; n]
        };
        let mut g = vec![0.0; d.len()];
        for i in 0..d.len() {
            let mut dp = d.to_vec();
            dp[i] += fd_step;
            let mut dm = d.to_vec();
            dm[i] -= fd_step;
            let (qp, _) = self.frame.restored_polygon(&dp).ok()?;
            let (qm, _) = self.frame.restored_polygon(&dm).ok()?;
            let perim_slope =
                (self.tension.perimeter(&qp) - self.tension.perimeter(&qm)) / (2.0 * fd_step);
            let v_slope = if self.gamma > 0.0 {
                2.0 * sides[map[i]].length * (nonlocal[i] - nonlocal[n - 1])
            } else {
                0.0
            };
            g[i] = perim_slope + self.gamma * v_slope;
        }
        Some(g)
    }
}

/// Sup over sides of the support-offset difference between the restored
/// polygon at `x` and the frame's base, after centroid-aligning the two
/// shapes; this quotients out the rigid translations that the offset
/// coordinates can represent exactly on polygons with opposite normals.
fn aligned_sup_norm(frame: &VariationFrame, x: &[f64]) -> Option<f64> {
    let (q, _) = frame.restored_polygon(x).ok()?;
    let map = frame.side_map(&q).ok()?;
    let base = frame.base();
    let shift = base.centroid() - q.centroid();
    let q_sides = q.sides();
    let mut sup = 0.0f64;
    for (k, b) in base.sides().iter().enumerate() {
        let nu = b.normal;
        let off_q = nu.dot(&(q_sides[map[k]].a + shift));
        sup = sup.max((off_q - nu.dot(&b.a)).abs());
    }
    Some(sup)
}

/// Minimizes the reduced total energy over side offsets in
/// (-epsilon, epsilon)^(n-1) with the last side restoring the area, from
/// the zero start plus random multi-starts. The best run is returned; a
/// run that stalls before reaching the projected-gradient tolerance is
/// flagged rather than treated as an error.
pub fn minimize_over_class(
    p: &ConvexPolygon,
    tension: &CrystallineTension,
    gamma: f64,
    epsilon: f64,
    params: &RieszParams,
    spec: &QuadratureSpec,
    opts: &SolverOptions,
) -> Result<MinimizationResult, MinimizeError> {
    if !(gamma >= 0.0) {
        return Err(MinimizeError::InvalidInput(format!(
            "gamma must be a nonnegative number, got {gamma}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(MinimizeError::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if opts.num_starts == 0 {
        return Err(MinimizeError::InvalidInput("at least one start is required".into()));
    }
    let frame = VariationFrame::new(p);
    let n = frame.num_sides();
    let eps = epsilon.min(frame.max_feasible_epsilon());
    let bound = eps * (1.0 - 1e-9);
    let energy = ReducedEnergy {
        frame: &frame,
        tension,
        gamma,
        params,
        spec,
        bound,
    };

    let dim = n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // Random starts are drawn in (-eps/2, eps/2)^(n-1), resampling (then
    // shrinking toward zero as a last resort) until the volume-restored
    // polygon is feasible: the compensating offset of a raw draw can exceed
    // the displacement bound, and an infeasible start cannot descend at all.
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    for _ in 1..opts.num_starts {
        let mut pick: Vec<f64> =
            (0..dim).map(|_| rng.random_range(-0.5 * eps..0.5 * eps)).collect();
        for _ in 0..64 {
            if energy.polygon(&pick).is_some() {
                break;
            }
            pick = (0..dim).map(|_| rng.random_range(-0.5 * eps..0.5 * eps)).collect();
        }
        while energy.polygon(&pick).is_none() {
            for c in pick.iter_mut() {
                *c *= 0.5;
            }
        }
        starts.push(pick);
    }

    let run = |x0: &Vec<f64>| {
        projected_bfgs(
            x0,
            bound,
            opts.tol,
            opts.max_iters,
            |d| energy.value(d),
            |d| energy.gradient(d),
        )
    };
    #[cfg(feature = "parallel")]
    let outcomes: Vec<DescentOutcome> = {
        use rayon::prelude::*;
        starts.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<DescentOutcome> = starts.iter().map(run).collect();

    let mut best = 0usize;
    for (k, o) in outcomes.iter().enumerate() {
        if o.f < outcomes[best].f {
            best = k;
        }
    }
    let start_records: Vec<StartRecord> = outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| StartRecord {
            start_index: k,
            final_energy: o.f,
            sup_norm: o.x.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            aligned_sup_norm: aligned_sup_norm(&frame, &o.x),
            iterations: o.iterations,
            converged: o.converged,
            monotone: o.monotone,
        })
        .collect();
    let winner = &outcomes[best];
    let (q, dn) = frame
        .restored_polygon(&winner.x)
        .map_err(MinimizeError::Variation)?;
    let mut d_full = winner.x.clone();
    d_full.push(dn);
    let energy_at_dstar = energy.report(&q)?;
    let energy_at_zero = energy.report(frame.base())?;
    Ok(MinimizationResult {
        d_star: VariationVector { d: d_full, epsilon: eps },
        energy_at_dstar,
        energy_at_zero,
        converged: winner.converged,
        iterations: winner.iterations,
        start_records,
    })
}

// ---------------------------------------------------------------------------
// Empirical gamma threshold.

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdSample {
    pub gamma: f64,
    pub d_star_sup: f64,
    /// True when the minimizer stayed within predicate_tol of the base shape.
    pub base_persists: bool,
}

/// Empirical estimate of the gamma below which the base polygon remains the
/// in-class minimizer. The estimate brackets the first failure of the
/// persistence predicate; it is a surrogate for the true threshold, never
/// claimed equal to it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub gamma_hat: Option<f64>,
    /// (largest gamma seen persisting, smallest gamma seen failing).
    pub bracket: Option<(f64, f64)>,
    pub tested: Vec<ThresholdSample>,
    pub transition_found: bool,
}

#[derive(Debug, Clone)]
pub struct ThresholdOptions {
    pub gamma_start: f64,
    pub gamma_max: f64,
    /// Sup-norm displacement below which the base shape counts as persisting.
    pub predicate_tol: f64,
    pub bisections: usize,
    pub solver: SolverOptions,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            gamma_start: 1e-4,
            gamma_max: 1e3,
            predicate_tol: 1e-4,
            bisections: 10,
            solver: SolverOptions::default(),
        }
    }
}

pub fn gamma_threshold_estimate(
    p: &ConvexPolygon,
    tension: &CrystallineTension,
    epsilon: f64,
    params: &RieszParams,
    spec: &QuadratureSpec,
    opts: &ThresholdOptions,
) -> Result<ThresholdReport, MinimizeError> {
    let mut tested: Vec<ThresholdSample> = Vec::new();
    let probe = |gamma: f64, tested: &mut Vec<ThresholdSample>| -> Result<bool, MinimizeError> {
        let res = minimize_over_class(p, tension, gamma, epsilon, params, spec, &opts.solver)?;
        let sup = res.sup_norm();
        let ok = sup < opts.predicate_tol;
        tested.push(ThresholdSample { gamma, d_star_sup: sup, base_persists: ok });
        Ok(ok)
    };

    // Find a persisting gamma, walking down if the starting one already fails.
    let mut lo = opts.gamma_start;
    let mut lo_ok = probe(lo, &mut tested)?;
    let mut shrink = 0;
    while !lo_ok && shrink < 12 {
        lo /= 4.0;
        lo_ok = probe(lo, &mut tested)?;
        shrink += 1;
    }
    if !lo_ok {
        return Ok(ThresholdReport {
            gamma_hat: None,
            bracket: Some((0.0, lo)),
            tested,
            transition_found: false,
        });
    }
    // Double until the predicate fails.
    let mut hi = lo * 2.0;
    loop {
        if hi > opts.gamma_max {
            return Ok(ThresholdReport {
                gamma_hat: None,
                bracket: Some((lo, opts.gamma_max)),
                tested,
                transition_found: false,
            });
        }
        if !probe(hi, &mut tested)? {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    // Geometric bisection on the bracket.
    for _ in 0..opts.bisections {
        let mid = (lo * hi).sqrt();
        if probe(mid, &mut tested)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdReport {
        gamma_hat: Some((lo * hi).sqrt()),
        bracket: Some((lo, hi)),
        tested,
        transition_found: true,
    })
}

// ---------------------------------------------------------------------------
// Rigidity diagnostic.

/// Partition of a candidate's sides by alignment with the Wulff normals,
/// with the potential's behavior on the unaligned part.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidityReport {
    /// Sides whose outer normal matches some Wulff normal within the
    /// angular tolerance.
    pub gamma_aligned_sides: Vec<usize>,
    /// The remaining sides, where a local minimizer must level the potential.
    pub free_sides: Vec<usize>,
    /// Max minus min of the potential over all samples on free sides
    /// (including polished per-side extrema); zero by convention when no
    /// side is free.
    pub potential_spread: f64,
    /// Length-weighted mean of the potential's side averages over free
    /// sides; absent when no side is free.
    pub v0_estimate: Option<f64>,
}

pub fn rigidity_diagnostic(
    e: &ConvexPolygon,
    tension: &CrystallineTension,
    params: &RieszParams,
    spec: &QuadratureSpec,
    angular_tol: f64,
) -> RigidityReport {
    rigidity_diagnostic_with_sampling(e, tension, params, spec, angular_tol, 24)
}

/// [`rigidity_diagnostic`] with an explicit per-side sample count, so the
/// reported spread can be shown stable under densified sampling.
pub fn rigidity_diagnostic_with_sampling(
    e: &ConvexPolygon,
    tension: &CrystallineTension,
    params: &RieszParams,
    spec: &QuadratureSpec,
    angular_tol: f64,
    samples_per_side: usize,
) -> RigidityReport {
    let wulff = tension.wulff_shape();
    let wulff_normals: Vec<_> = wulff.sides().iter().map(|s| s.normal).collect();
    let mut aligned = Vec::new();
    let mut free = Vec::new();
    for (i, s) in e.sides().iter().enumerate() {
        let gap = wulff_normals
            .iter()
            .map(|n| s.normal.dot(n).clamp(-1.0, 1.0).acos())
            .fold(f64::MAX, f64::min);
        if gap <= angular_tol {
            aligned.push(i);
        } else {
            free.push(i);
        }
    }
    if free.is_empty() {
        return RigidityReport {
            gamma_aligned_sides: aligned,
            free_sides: free,
            potential_spread: 0.0,
            v0_estimate: None,
        };
    }

    // Sample the potential along each free side at Gauss nodes, then polish
    // the per-side extrema by golden-section refinement so the spread is
    // stable under small perturbations of the polygon and of the sampling.
    let rule = gauss_rule(samples_per_side.clamp(4, 256));
    let golden = 0.5 * (3.0 - 5.0f64.sqrt());
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for &i in &free {
        let v_at = |t: f64| boundary_potential(e, i, t, params, spec).value;
        let ts: Vec<f64> = rule.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| v_at(t)).collect();
        for &(want_max, mut acc) in &[(true, f64::MIN), (false, f64::MAX)] {
            let mut best = 0usize;
            for (k, &v) in vals.iter().enumerate() {
                let better = if want_max { v > acc } else { v < acc };
                if better {
                    acc = v;
                    best = k;
                }
            }
            // Golden-section refinement of the bracketing interval around
            // the best node; endpoints of the side are legitimate extrema.
            let mut a = if best == 0 { 0.0 } else { ts[best - 1] };
            let mut b = if best + 1 == ts.len() { 1.0 } else { ts[best + 1] };
            let mut fc = {
                let c = a + golden * (b - a);
                (c, v_at(c))
            };
            let mut fd = {
                let d = b - golden * (b - a);
                (d, v_at(d))
            };
            for _ in 0..40 {
                let keep_left = if want_max { fc.1 > fd.1 } else { fc.1 < fd.1 };
                if keep_left {
                    b = fd.0;
                    fd = fc;
                    let c = a + golden * (b - a);
                    fc = (c, v_at(c));
                } else {
                    a = fc.0;
                    fc = fd;
                    let d = b - golden * (b - a);
                    fd = (d, v_at(d));
                }
            }
            let polished = if want_max {
                acc.max(fc.1).max(fd.1)
            } else {
                acc.min(fc.1).min(fd.1)
            };
            if want_max {
                hi = hi.max(polished);
            } else {
                lo = lo.min(polished);
            }
        }
    }
    let sides = e.sides();
    let weights: Vec<f64> = free.iter().map(|&i| sides[i].length).collect();
    let averages: Vec<f64> = free
        .iter()
        .map(|&i| side_average_potential(e, i, params, spec).value)
        .collect();
    let weighted: Vec<f64> = weights.iter().zip(&averages).map(|(w, a)| w * a).collect();
    let v0 = pairwise_sum(&weighted) / pairwise_sum(&weights);
    RigidityReport {
        gamma_aligned_sides: aligned,
        free_sides: free,
        potential_spread: hi - lo,
        v0_estimate: Some(v0),
    }
}

// ---------------------------------------------------------------------------
// Generalized-minimizer splitting comparison.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    Single,
    Split,
    Tie,
}

/// Energy of one unit-mass piece against the same mass split into pieces at
/// infinite separation (no cross interaction), both through the scaling
/// identity on the unit-area Wulff shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitReport {
    pub gamma: f64,
    pub fractions: Vec<f64>,
    pub single_energy: f64,
    pub split_energy: f64,
    pub winner: Winner,
}

pub fn split_comparison(
    tension: &CrystallineTension,
    gamma: f64,
    fractions: &[f64],
    params: &RieszParams,
    spec: &QuadratureSpec,
) -> Result<SplitReport, MinimizeError> {
    if fractions.is_empty() || fractions.iter().any(|&m| !(m > 0.0)) {
        return Err(MinimizeError::InvalidInput(
            "mass fractions must be positive".into(),
        ));
    }
    let sum = pairwise_sum(fractions);
    if (sum - 1.0).abs() > 1e-9 {
        return Err(MinimizeError::InvalidInput(format!(
            "mass fractions must sum to 1, got {sum}"
        )));
    }
    if !(gamma >= 0.0) {
        return Err(MinimizeError::InvalidInput(format!(
            "gamma must be a nonnegative number, got {gamma}"
        )));
    }
    let wulff = tension.wulff_shape();
    let unit = wulff.scaled(1.0 / wulff.area().sqrt());
    let perim = tension.perimeter(&unit);
    let nonlocal = self_energy(&unit, params, spec)?.value;
    let piece = |m: f64| m.sqrt() * perim + gamma * m.powf(2.0 - 0.5 * params.alpha()) * nonlocal;
    let single_energy = piece(1.0);
    let parts: Vec<f64> = fractions.iter().map(|&m| piece(m)).collect();
    let split_energy = pairwise_sum(&parts);
    let scale = single_energy.abs().max(split_energy.abs()).max(1.0);
    let winner = if (single_energy - split_energy).abs() <= 1e-12 * scale {
        Winner::Tie
    } else if single_energy < split_energy {
        Winner::Single
    } else {
        Winner::Split
    };
    Ok(SplitReport {
        gamma,
        fractions: fractions.to_vec(),
        single_energy,
        split_energy,
        winner,
    })
}

// ---------------------------------------------------------------------------
// Search for critical polygons outside the symmetric family.

#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Number of random starting polygons (explicit seeds come first and do
    /// not count against this).
    pub num_starts: usize,
    pub max_iters: usize,
    /// Candidates are reported when their criticality residual falls below
    /// this bound.
    pub report_tol: f64,
    pub seed: u64,
    /// Optional explicit starting polygons (e.g. known family members as a
    /// sanity check); each must have n sides.
    pub seeds: Vec<ConvexPolygon>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            num_starts: 6,
            max_iters: 40,
            report_tol: 1e-3,
            seed: 42,
            seeds: Vec::new(),
        }
    }
}

/// One reported near-critical polygon. A candidate with a small residual
/// and `membership.is_member == false` is an exhibit for further study,
/// never a claim that it is a genuine critical point.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateReport {
    pub polygon: ConvexPolygon,
    /// Normalized spread of the potential's side averages.
    pub residual: f64,
    /// Final value of the smooth descent surrogate.
    pub surrogate: f64,
    pub membership: MembershipReport,
    /// True when every accepted descent step decreased the surrogate.
    pub descent_monotone: bool,
}

/// Smooth criticality surrogate: sum over sides of the squared deviation of
/// the side average from their mean, normalized by the squared mean.
fn criticality_surrogate(
    q: &ConvexPolygon,
    params: &RieszParams,
    spec: &QuadratureSpec,
) -> f64 {
    let avgs: Vec<f64> = (0..q.num_sides())
        .map(|i| side_average_potential(q, i, params, spec).value)
        .collect();
    let mean = pairwise_sum(&avgs) / avgs.len() as f64;
    let devs: Vec<f64> = avgs.iter().map(|a| (a - mean) * (a - mean)).collect();
    pairwise_sum(&devs) / (mean * mean)
}

/// Multi-start descent of the criticality surrogate over unit-area n-gons
/// with each start's normal fan held fixed; returns the candidates whose
/// final residual falls below the reporting tolerance, in start order.
pub fn search_noncritical(
    n: usize,
    params: &RieszParams,
    spec: &QuadratureSpec,
    opts: &SearchOptions,
) -> Result<Vec<CandidateReport>, MinimizeError> {
    if n < 3 {
        return Err(MinimizeError::InvalidInput(format!(
            "a polygon needs at least 3 sides, got {n}"
        )));
    }
    for s in &opts.seeds {
        if s.num_sides() != n {
            return Err(MinimizeError::InvalidInput(format!(
                "seed polygon has {} sides, expected {n}",
                s.num_sides()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<ConvexPolygon> = opts.seeds.clone();
    for _ in 0..opts.num_starts {
        starts.push(random_convex_polygon(&mut rng, n));
    }

    let run = |p0: &ConvexPolygon| -> Option<CandidateReport> {
        let frame = VariationFrame::new(p0);
        let eps = 0.5 * frame.max_feasible_epsilon();
        let bound = eps * (1.0 - 1e-9);
        let value = |d: &[f64]| -> f64 {
            match frame.restored_polygon(d) {
                Ok((q, dn)) if dn.abs() < bound => criticality_surrogate(&q, params, spec),
                _ => f64::INFINITY,
            }
        };
        let grad = |d: &[f64]| -> Option<Vec<f64>> {
            let h = 1e-5 * eps.max(1e-3);
            let mut g = vec![0.0; d.len()];
            for i in 0..d.len() {
                let mut dp = d.to_vec();
                dp[i] += h;
                let mut dm = d.to_vec();
                dm[i] -= h;
                let (fp, fm) = (value(&dp), value(&dm));
                g[i] = match (fp.is_finite(), fm.is_finite()) {
                    (true, true) => (fp - fm) / (2.0 * h),
                    (true, false) => (fp - value(d)) / h,
                    (false, true) => (value(d) - fm) / h,
                    (false, false) => return None,
                };
            }
            Some(g)
        };
        let out = projected_bfgs(
            &vec![0.0; frame.num_sides() - 1],
            bound,
            1e-10,
            opts.max_iters,
            value,
            grad,
        );
        let (q, _) = frame.restored_polygon(&out.x).ok()?;
        let residual = criticality_residual(&q, params, spec).residual;
        if residual >= opts.report_tol {
            return None;
        }
        Some(CandidateReport {
            membership: verify_class_membership(&q),
            polygon: q,
            residual,
            surrogate: out.f,
            descent_monotone: out.monotone,
        })
    };

    #[cfg(feature = "parallel")]
    let reports: Vec<Option<CandidateReport>> = {
        use rayon::prelude::*;
        starts.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let reports: Vec<Option<CandidateReport>> = starts.iter().map(run).collect();

    Ok(reports.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::{build_symmetric_polygon, SymmetricPolygonSpec};
    use crate::geometry::Vec2;

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

    fn square_tension() -> CrystallineTension {
        CrystallineTension::from_polygon(&unit_square().centered()).unwrap()
    }

    #[test]
    fn total_energy_is_affine_in_gamma_and_matches_components() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::default();
        let sq = unit_square().centered();
        let t = square_tension();
        let zero = total_energy(&sq, &t, 0.0, &params, &spec).unwrap();
        assert_eq!(zero.total, zero.perimeter_term);
        let one = total_energy(&sq, &t, 1.0, &params, &spec).unwrap();
        let three = total_energy(&sq, &t, 3.0, &params, &spec).unwrap();
        // Affine in gamma with slope = the nonlocal value.
        let slope = (three.total - one.total) / 2.0;
        assert!((slope - one.nonlocal_term.value).abs() < 1e-12 * slope.abs());
        // The square against its own tension: perimeter term is 2|W| of the
        // unit square, and the nonlocal part matches the pinned value.
        assert!((zero.perimeter_term - 2.0).abs() < 1e-12);
        assert!((one.nonlocal_term.value - 2.9732095982473787).abs() < 1e-8);
        assert!(total_energy(&sq, &t, -0.5, &params, &spec).is_err());
    }

    #[test]
    fn mass_scaling_identity_holds_for_scaled_square() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::default();
        let t = square_tension();
        let m1 = mass_scaling_check(&unit_square().centered(), &t, 0.7, &params, &spec).unwrap();
        assert!(m1.rel_err < 1e-12, "unit mass rel err {}", m1.rel_err);
        let big = unit_square().centered().scaled(2.0); // mass 4
        let m4 = mass_scaling_check(&big, &t, 0.7, &params, &spec).unwrap();
        assert!((m4.mass - 4.0).abs() < 1e-12);
        assert!(m4.rel_err < 1e-3, "mass 4 rel err {}", m4.rel_err);
    }

    #[test]
    fn equivalent_gamma_statement_matches_unit_mass_problem() {
        // Minimizing at mass m is the unit-mass problem at
        // gamma~ = gamma * m^(3/2 - alpha/2), up to the overall m^(1/2):
        // E_gamma(E) = m^(1/2) * E~_gamma~(E~) for E of mass m.
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::default();
        let t = square_tension();
        let gamma = 0.3;
        let m = 2.25f64;
        let e = unit_square().centered().scaled(m.sqrt());
        let lhs = total_energy(&e, &t, gamma, &params, &spec).unwrap().total;
        let gamma_eq = gamma * m.powf(1.5 - 0.5 * params.alpha());
        let unit = unit_square().centered();
        let rhs = m.sqrt() * total_energy(&unit, &t, gamma_eq, &params, &spec).unwrap().total;
        assert!(
            (lhs - rhs).abs() < 1e-3 * lhs.abs(),
            "lhs {lhs} rhs {rhs}"
        );
    }

    #[test]
    fn minimizer_stays_at_symmetric_shape_for_small_gamma() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        let sq = regular(4);
        let t = CrystallineTension::from_polygon(&sq).unwrap();
        let opts = SolverOptions { num_starts: 4, ..SolverOptions::default() };
        for gamma in [0.0, 1e-3] {
            let res = minimize_over_class(&sq, &t, gamma, 0.05, &params, &spec, &opts).unwrap();
            assert!(
                res.sup_norm() < 1e-3,
                "gamma {gamma}: |d*| = {}",
                res.sup_norm()
            );
            assert!(res.energy_at_dstar.total <= res.energy_at_zero.total + 1e-9);
        }
    }

    #[test]
    fn minimizer_moves_off_noncritical_start_and_decreases_energy() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        // A 2 x 1/2 rectangle under the square tension: the reduced energy
        // strictly decreases toward the square, so the minimizer must move.
        let rect = ConvexPolygon::new(vec![
            Vec2::new(-1.0, -0.25),
            Vec2::new(1.0, -0.25),
            Vec2::new(1.0, 0.25),
            Vec2::new(-1.0, 0.25),
        ])
        .unwrap();
        let t = square_tension();
        let opts = SolverOptions { num_starts: 2, ..SolverOptions::default() };
        let res = minimize_over_class(&rect, &t, 0.05, 0.1, &params, &spec, &opts).unwrap();
        assert!(res.sup_norm() > 1e-3, "stayed at start: {}", res.sup_norm());
        assert!(res.energy_at_dstar.total < res.energy_at_zero.total - 1e-6);
    }

    #[test]
    fn threshold_estimate_brackets_a_transition_for_the_square() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        let sq = regular(4);
        let t = CrystallineTension::from_polygon(&sq).unwrap();
        let opts = ThresholdOptions {
            bisections: 4,
            solver: SolverOptions { num_starts: 2, max_iters: 40, ..SolverOptions::default() },
            ..ThresholdOptions::default()
        };
        let rep = gamma_threshold_estimate(&sq, &t, 0.05, &params, &spec, &opts).unwrap();
        for s in &rep.tested {
            assert!(s.d_star_sup.is_finite());
        }
        if rep.transition_found {
            let (lo, hi) = rep.bracket.unwrap();
            assert!(lo < hi);
            let g = rep.gamma_hat.unwrap();
            assert!(lo <= g && g <= hi);
        } else {
            assert!(rep.gamma_hat.is_none());
        }
    }

    #[test]
    fn rigidity_wulff_shape_has_no_free_sides() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        let t = square_tension();
        let w = t.wulff_shape();
        let rep = rigidity_diagnostic(&w, &t, &params, &spec, 1e-6);
        assert!(rep.free_sides.is_empty());
        assert_eq!(rep.gamma_aligned_sides.len(), 4);
        assert_eq!(rep.potential_spread, 0.0);
        assert!(rep.v0_estimate.is_none());
    }

    #[test]
    fn rigidity_flags_chamfer_and_rotation() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        let t = square_tension();
        // Chamfer one corner of the square with a 45-degree edge.
        let chamfered = ConvexPolygon::new(vec![
            Vec2::new(-0.5, -0.5),
            Vec2::new(0.5, -0.5),
            Vec2::new(0.5, 0.3),
            Vec2::new(0.3, 0.5),
            Vec2::new(-0.5, 0.5),
        ])
        .unwrap();
        let rep = rigidity_diagnostic(&chamfered, &t, &params, &spec, 1e-6);
        assert_eq!(rep.free_sides.len(), 1);
        assert_eq!(rep.gamma_aligned_sides.len(), 4);
        assert!(rep.potential_spread > 0.0);
        assert!(rep.v0_estimate.is_some());
        // A rotation outside the tension's symmetry group frees every side.
        let rotated = t
            .wulff_shape()
            .apply_isometry(&crate::geometry::Isometry::rotation(Vec2::new(0.0, 0.0), 0.3));
        let rep = rigidity_diagnostic(&rotated, &t, &params, &spec, 1e-6);
        assert_eq!(rep.free_sides.len(), 4);
        assert!(rep.gamma_aligned_sides.is_empty());
    }

    #[test]
    fn split_comparison_crosses_winner_once_in_gamma() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        let t = square_tension();
        let fractions = [0.5, 0.5];
        let small = split_comparison(&t, 1e-4, &fractions, &params, &spec).unwrap();
        assert_eq!(small.winner, Winner::Single);
        let large = split_comparison(&t, 1e4, &fractions, &params, &spec).unwrap();
        assert_eq!(large.winner, Winner::Split);
        // Single winner flip along the sweep.
        let mut flips = 0;
        let mut prev = small.winner;
        for k in 0..40 {
            let gamma = 1e-4 * 10f64.powf(8.0 * k as f64 / 39.0);
            let w = split_comparison(&t, gamma, &fractions, &params, &spec).unwrap().winner;
            if w != prev {
                flips += 1;
                prev = w;
            }
        }
        assert_eq!(flips, 1, "winner flipped {flips} times");
        // Trivial fraction list: exact tie.
        let tie = split_comparison(&t, 0.7, &[1.0], &params, &spec).unwrap();
        assert_eq!(tie.winner, Winner::Tie);
        assert!(split_comparison(&t, 0.7, &[0.6, 0.6], &params, &spec).is_err());
        assert!(split_comparison(&t, 0.7, &[], &params, &spec).is_err());
    }

    #[test]
    fn search_reports_class_member_seed_as_critical() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        let opts = SearchOptions {
            num_starts: 0,
            seeds: vec![regular(5)],
            report_tol: 1e-3,
            max_iters: 5,
            ..SearchOptions::default()
        };
        let found = search_noncritical(5, &params, &spec, &opts).unwrap();
        assert_eq!(found.len(), 1);
        assert!(found[0].residual < 1e-3);
        assert!(found[0].membership.is_member);
        assert!(found[0].descent_monotone);
    }

    #[test]
    fn search_descends_toward_smaller_residual_from_random_starts() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        let opts = SearchOptions {
            num_starts: 2,
            max_iters: 25,
            report_tol: f64::INFINITY,
            seed: 7,
            seeds: Vec::new(),
        };
        let found = search_noncritical(4, &params, &spec, &opts).unwrap();
        assert_eq!(found.len(), 2);
        for c in &found {
            assert!(c.descent_monotone);
            // The descent from a random quadrilateral should land well
            // below a generic residual of order one.
            assert!(c.residual < 0.5, "residual {}", c.residual);
        }
    }

    #[test]
    fn search_rejects_bad_inputs() {
        let params = RieszParams::new(1.0).unwrap();
        let spec = QuadratureSpec::coarse();
        assert!(search_noncritical(2, &params, &spec, &SearchOptions::default()).is_err());
        let opts = SearchOptions { seeds: vec![regular(5)], ..SearchOptions::default() };
        assert!(search_noncritical(4, &params, &spec, &opts).is_err());
    }
}
