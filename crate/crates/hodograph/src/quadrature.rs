//! 1-D quadrature helpers: adaptive Simpson for smooth integrands and a
//! square-root-graded estimator for integrands with integrable endpoint
//! singularities.

/// Default absolute tolerance for adaptive quadrature.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// Signed interval: `a > b` yields the negated integral. Recursion depth is
/// capped; the cap is generous enough that smooth integrands at `tol = 1e-10`
/// never hit it.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -adaptive_simpson(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Composite trapezoid over the nodes `xs` with values `ys`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let mut acc = 0.0;
    for k in 1..xs.len() {
        acc += 0.5 * (xs[k] - xs[k - 1]) * (ys[k] + ys[k - 1]);
    }
    acc
}

/// Result of the graded L1 estimator.
#[derive(Debug, Clone, Copy)]
pub struct GradedL1 {
    /// Last mesh estimate of the integral.
    pub value: f64,
    /// Whether successive refinements were Cauchy.
    pub converged: bool,
    /// Last refinement increment `|I_m - I_{m/2}|`.
    pub last_increment: f64,
}

/// Estimate `int_0^c |f(sigma)| d sigma` on a mesh graded like square roots
/// toward both endpoints (the substitution `sigma = c sin^2 theta` with theta
/// uniform), doubling the mesh until the estimate is Cauchy.
///
/// Integrands with inverse-square-root endpoint behavior become smooth under
/// the substitution; non-integrable ones (e.g. `1/sigma`) keep producing
/// non-shrinking increments and are reported as not converged. Midpoint
/// sampling keeps the evaluation away from the interval endpoints.
pub fn graded_l1<F: Fn(f64) -> f64>(f: &F, c: f64, rel_tol: f64, abs_tol: f64) -> GradedL1 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut prev = f64::NAN;
    let mut value = 0.0;
    let mut last_increment = f64::INFINITY;
    let mut converged = false;
    let mut m = 64usize;
    while m <= 65536 {
        let dtheta = half_pi / m as f64;
        let mut acc = 0.0;
        for k in 0..m {
            let theta = (k as f64 + 0.5) * dtheta;
            let sigma = c * theta.sin().powi(2);
            // d sigma / d theta = c * sin(2 theta)
            acc += f(sigma).abs() * c * (2.0 * theta).sin() * dtheta;
        }
        value = acc;
        if prev.is_finite() {
            last_increment = (value - prev).abs();
            if last_increment <= rel_tol * value.abs() + abs_tol {
                converged = true;
                break;
            }
        }
        prev = value;
        m *= 2;
    }
    GradedL1 {
        value,
        converged,
        last_increment,
    }
}

/// Integrate `n` over `[a, b] subset of [0, c]` on the square-root-graded
/// parametrization, by adaptive Simpson in the graded variable.
///
/// Used for the normal-derivative term of the boundary forcing when no
/// analytic antiderivative is available.
pub fn graded_integral<F: Fn(f64) -> f64>(n: &F, a: f64, b: f64, c: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let theta_of = |sigma: f64| ((sigma / c).clamp(0.0, 1.0)).sqrt().asin();
    let ta = theta_of(a);
    let tb = theta_of(b);
    let g = |theta: f64| {
        let sigma = c * theta.sin().powi(2);
        n(sigma) * c * (2.0 * theta).sin()
    };
    adaptive_simpson(&g, ta, tb, tol)
}
