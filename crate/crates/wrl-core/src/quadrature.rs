//! Shared quadrature primitives: Gauss-Legendre rules, deterministic
//! pairwise summation, and graded 1D integration of the segment kernel
//! `(h^2 + t^2)^(-alpha/2)` that the potential evaluator is built on.

use std::collections::HashMap;
use std::sync::{LazyLock, Mutex};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

static RULE_CACHE: LazyLock<Mutex<HashMap<usize, &'static GaussRule>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Gauss-Legendre rule of order `n`, computed once by Newton iteration on
/// the Legendre recurrence and cached for the process lifetime.
pub fn gauss_rule(n: usize) -> &'static GaussRule {
    assert!(n >= 1 && n <= 256);
    let mut cache = RULE_CACHE.lock().unwrap();
    if let Some(r) = cache.get(&n) {
        return r;
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess; converges in a handful of steps.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let leaked: &'static GaussRule = Box::leak(Box::new(GaussRule { nodes, weights }));
    cache.insert(n, leaked);
    leaked
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f` over [a, b] with an n-point Gauss-Legendre rule.
pub fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    let rule = gauss_rule(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut terms = Vec::with_capacity(n);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        terms.push(w * f(mid + half * x));
    }
    half * pairwise_sum(&terms)
}

/// Summation by recursive halving. The result depends only on the slice
/// order, never on chunking or thread count, which the byte-identical
/// output guarantee relies on.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut s = 0.0;
        for x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `int_{t0}^{t1} (h^2 + t^2)^(-alpha/2) dt` for alpha in (0, 2).
///
/// The integrand peaks at t = 0 with width |h|; panels are split there and
/// graded geometrically until panel size is comparable to |h|, so plain
/// Gauss-Legendre is spectrally accurate on every panel. Valid for any h,
/// including h = 0 as long as 0 is outside (t0, t1) or alpha < 1.
pub fn segment_kernel_integral(t0: f64, t1: f64, h: f64, alpha: f64, order: usize) -> f64 {
    debug_assert!(t1 >= t0);
    let kernel = |t: f64| (h * h + t * t).powf(-0.5 * alpha);
    if t0 >= 0.0 || t1 <= 0.0 {
        return one_sided(t0.abs().min(t1.abs()), t0.abs().max(t1.abs()), h, alpha, order, kernel);
    }
    one_sided(0.0, -t0, h, alpha, order, kernel) + one_sided(0.0, t1, h, alpha, order, kernel)
}

/// Graded integration of an even-in-t kernel over [lo, hi] with 0 <= lo.
/// Panels halve toward the peak at 0; a panel entirely inside the |h| core
/// or with endpoint ratio at most 2 is smooth enough for one rule.
fn one_sided<F: Fn(f64) -> f64>(
    lo: f64,
    hi: f64,
    h: f64,
    alpha: f64,
    order: usize,
    kernel: F,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let habs = h.abs();
    let mut parts: Vec<f64> = Vec::new();
    let mut upper = hi;
    for _ in 0..120 {
        let cut = 0.5 * upper;
        if upper <= 2.0 * habs || cut <= lo {
            break;
        }
        parts.push(integrate(cut, upper, order, |t| kernel(t)));
        upper = cut;
    }
    if h == 0.0 && lo == 0.0 {
        // Exact tail of |t|^(-alpha); callers only reach this for alpha < 1.
        debug_assert!(alpha < 1.0);
        parts.push(upper.powf(1.0 - alpha) / (1.0 - alpha));
    } else {
        parts.push(integrate(lo, upper, order, |t| kernel(t)));
    }
    pairwise_sum(&parts)
}
