//! Cauchy-Goursat boundary data `{g, h, f, n}` on the truncated cone, the weak
//! compatibility validator, the boundary forcing `G`, and the Volterra kernels
//! `K1`, `K2`.
//!
//! Data lives on three segments: `g` on `Gamma_1 = {(s, 0), s >= c}`, `h` on
//! `Gamma_2 = {(0, t), t >= c}`, Dirichlet `f` and normal derivative `n` on the
//! Cauchy segment `Gamma_C = {s + t = c}`. The normal derivative may blow up at
//! the segment endpoints; integrability is the membership criterion, not
//! boundedness.

use std::sync::Arc;

use crate::curvature::CurvatureProfile;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::quadrature::{adaptive_simpson, graded_integral, graded_l1, GradedL1, DEFAULT_TOL};

pub type Sampler = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The four boundary samplers with truncation parameter `c`, plus optional
/// analytic helpers (antiderivative of `n`, derivatives for validators and
/// contour checks) that remove quadrature error where closed forms exist.
#[derive(Clone)]
pub struct CauchyGoursatData {
    pub c: f64,
    g: Sampler,
    h: Sampler,
    f: Sampler,
    n: Sampler,
    n_antiderivative: Option<Sampler>,
    f_prime: Option<Sampler>,
}

impl std::fmt::Debug for CauchyGoursatData {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("CauchyGoursatData")
            .field("c", &self.c)
            .field("has_antiderivative", &self.n_antiderivative.is_some())
            .finish()
    }
}

impl CauchyGoursatData {
    pub fn new(c: f64, g: Sampler, h: Sampler, f: Sampler, n: Sampler) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidData(format!("c must be positive, got {c}")));
        }
        Ok(CauchyGoursatData {
            c,
            g,
            h,
            f,
            n,
            n_antiderivative: None,
            f_prime: None,
        })
    }

    /// Attach an exact antiderivative of `n`; the forcing then uses it instead
    /// of graded quadrature.
    pub fn with_antiderivative(mut self, big_n: Sampler) -> Self {
        self.n_antiderivative = Some(big_n);
        self
    }

    pub fn with_f_prime(mut self, fp: Sampler) -> Self {
        self.f_prime = Some(fp);
        self
    }

    /// All-zero data (used by the homogeneous/forced solves).
    pub fn zero(c: f64) -> Self {
        let z: Sampler = Arc::new(|_| 0.0);
        CauchyGoursatData {
            c,
            g: z.clone(),
            h: z.clone(),
            f: z.clone(),
            n: z.clone(),
            n_antiderivative: Some(z.clone()),
            f_prime: Some(z),
        }
    }

    /// `alpha * d1 + beta * d2`; requires matching `c`. The solve map is
    /// linear in the data, which this combinator makes testable.
    pub fn linear_combination(alpha: f64, d1: &Self, beta: f64, d2: &Self) -> Result<Self> {
        if (d1.c - d2.c).abs() > 1e-14 * d1.c.max(1.0) {
            return Err(Error::InvalidData(
                "linear combination needs matching truncation parameters".into(),
            ));
        }
        fn combine(alpha: f64, a: &Sampler, beta: f64, b: &Sampler) -> Sampler {
            let (a, b) = (a.clone(), b.clone());
            Arc::new(move |x| alpha * a(x) + beta * b(x))
        }
        fn combine_opt(
            alpha: f64,
            a: &Option<Sampler>,
            beta: f64,
            b: &Option<Sampler>,
        ) -> Option<Sampler> {
            match (a, b) {
                (Some(a), Some(b)) => Some(combine(alpha, a, beta, b)),
                _ => None,
            }
        }
        Ok(CauchyGoursatData {
            c: d1.c,
            g: combine(alpha, &d1.g, beta, &d2.g),
            h: combine(alpha, &d1.h, beta, &d2.h),
            f: combine(alpha, &d1.f, beta, &d2.f),
            n: combine(alpha, &d1.n, beta, &d2.n),
            n_antiderivative: combine_opt(alpha, &d1.n_antiderivative, beta, &d2.n_antiderivative),
            f_prime: combine_opt(alpha, &d1.f_prime, beta, &d2.f_prime),
        })
    }

    pub fn g(&self, s: f64) -> f64 {
        (self.g)(s)
    }
    pub fn h(&self, t: f64) -> f64 {
        (self.h)(t)
    }
    pub fn f(&self, s: f64) -> f64 {
        (self.f)(s)
    }
    pub fn n(&self, s: f64) -> f64 {
        (self.n)(s)
    }

    /// Tangential derivative of `f`; centered difference fallback away from
    /// the endpoints when no closed form was attached.
    pub fn f_prime(&self, s: f64) -> f64 {
        if let Some(fp) = &self.f_prime {
            return fp(s);
        }
        let delta = (1e-6 * self.c).min(0.5 * s).min(0.5 * (self.c - s)).max(1e-300);
        ((self.f)(s + delta) - (self.f)(s - delta)) / (2.0 * delta)
    }

    /// `int_a^b n(sigma) d sigma` over `[a, b] subset of [0, c]`: exact via the
    /// antiderivative when attached, square-root-graded quadrature otherwise.
    pub fn n_integral(&self, a: f64, b: f64, tol: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        if let Some(big_n) = &self.n_antiderivative {
            return big_n(b) - big_n(a);
        }
        graded_integral(&|x| (self.n)(x), a, b, self.c, tol)
    }

    /// The boundary value of the solution on the full Dirichlet part of the
    /// boundary: `g` on `Gamma_1`, `h` on `Gamma_2`, `f` on `Gamma_C`.
    pub fn dirichlet_trace(&self, s: f64, t: f64) -> f64 {
        let c = self.c;
        if t == 0.0 && s >= c {
            self.g(s)
        } else if s == 0.0 && t >= c {
            self.h(t)
        } else {
            self.f(s)
        }
    }
}

/// Per-check outcome of the weak compatibility validator.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// |g(c) - f(c)|
    pub corner_gap_g: f64,
    /// |h(c) - f(0)|
    pub corner_gap_h: f64,
    pub l1_n: GradedL1,
    pub l1_f_prime: GradedL1,
    pub corner_tol: f64,
    pub corners_ok: bool,
    pub n_integrable: bool,
    pub f_absolutely_continuous: bool,
    pub pass: bool,
}

/// Default absolute tolerance on the corner gaps; corner values enter the
/// forcing directly, so mismatches propagate linearly.
pub const DEFAULT_CORNER_TOL: f64 = 1e-8;

/// Check weak compatibility: corner continuity of the Dirichlet data plus
/// finite graded-quadrature L1 estimates of `n` and `f'`.
///
/// Endpoint blow-up of `n` is not an error; a sampler returning a non-finite
/// value at an interior point is.
pub fn validate_weak_compatibility(
    data: &CauchyGoursatData,
    corner_tol: f64,
) -> Result<ValidationReport> {
    let c = data.c;
    for (name, v) in [
        ("g(c)", data.g(c)),
        ("h(c)", data.h(c)),
        ("f(0)", data.f(0.0)),
        ("f(c)", data.f(c)),
        ("f(c/2)", data.f(0.5 * c)),
        ("n(c/2)", data.n(0.5 * c)),
    ] {
        if !v.is_finite() {
            return Err(Error::ValidationFailed(format!(
                "sampler evaluation {name} returned a non-finite value"
            )));
        }
    }
    let corner_gap_g = (data.g(c) - data.f(c)).abs();
    let corner_gap_h = (data.h(c) - data.f(0.0)).abs();

    let n_probe = |s: f64| {
        let v = data.n(s);
        if !v.is_finite() {
            // interior sampler failures surface as infinite estimates
            f64::INFINITY
        } else {
            v
        }
    };
    let l1_n = graded_l1(&n_probe, c, 1e-6, 1e-9);
    let fp_probe = |s: f64| data.f_prime(s);
    let l1_f_prime = graded_l1(&fp_probe, c, 1e-6, 1e-9);

    let corners_ok = corner_gap_g <= corner_tol && corner_gap_h <= corner_tol;
    let n_integrable = l1_n.converged && l1_n.value.is_finite();
    let f_absolutely_continuous = l1_f_prime.converged && l1_f_prime.value.is_finite();
    Ok(ValidationReport {
        corner_gap_g,
        corner_gap_h,
        l1_n,
        l1_f_prime,
        corner_tol,
        corners_ok,
        n_integrable,
        f_absolutely_continuous,
        pass: corners_ok && n_integrable && f_absolutely_continuous,
    })
}

/// The boundary forcing `G(s, t)`: the collected known-boundary contributions
/// of the unified contour relation. Continuous on the closed cone, generally
/// not differentiable across `s = c` and `t = c`.
pub fn assemble_g(
    data: &CauchyGoursatData,
    profile: &CurvatureProfile,
    s: f64,
    t: f64,
) -> Result<f64> {
    assemble_g_tol(data, profile, s, t, DEFAULT_TOL)
}

pub fn assemble_g_tol(
    data: &CauchyGoursatData,
    profile: &CurvatureProfile,
    s: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    let c = data.c;
    let eps = 1e-12 * (1.0 + s.abs() + t.abs() + c);
    if s < -eps || t < -eps || s + t < c - eps {
        return Err(Error::OutsideDomain(s, t));
    }
    let lam_c = profile.lambda(c);
    let branch_s = if s <= c {
        lam_c * data.f(s)
    } else {
        let integrand = |sigma: f64| data.g(sigma) * profile.lambda_prime(sigma);
        2.0 * profile.lambda(s) * data.g(s) - lam_c * data.g(c)
            - adaptive_simpson(&integrand, c, s, tol)
    };
    let branch_t = if t <= c {
        lam_c * data.f(c - t)
    } else {
        let integrand = |tau: f64| data.h(tau) * profile.lambda_prime(tau);
        2.0 * profile.lambda(t) * data.h(t) - lam_c * data.h(c)
            - adaptive_simpson(&integrand, c, t, tol)
    };
    let a = (c - t).max(0.0);
    let b = c.min(s);
    let n_term = lam_c * data.n_integral(a, b, tol);
    Ok(branch_s + branch_t + n_term)
}

/// Forcing and kernel evaluators of the unified Volterra equation,
/// `F = G / (2 lambda(s+t))`, `K1 = lambda'(sigma+t) / (2 lambda(s+t))`,
/// `K2 = lambda'(s+tau) / (2 lambda(s+t))`.
pub struct Kernels<'a> {
    profile: &'a CurvatureProfile,
}

impl<'a> Kernels<'a> {
    pub fn new(profile: &'a CurvatureProfile) -> Kernels<'a> {
        Kernels { profile }
    }

    pub fn k1(&self, s: f64, t: f64, sigma: f64) -> Result<f64> {
        self.denominator(s, t)
            .map(|d| self.profile.lambda_prime(sigma + t) / d)
    }

    pub fn k2(&self, s: f64, t: f64, tau: f64) -> Result<f64> {
        self.denominator(s, t)
            .map(|d| self.profile.lambda_prime(s + tau) / d)
    }

    pub fn forcing_f(&self, data: &CauchyGoursatData, s: f64, t: f64) -> Result<f64> {
        let d = self.denominator(s, t)?;
        Ok(assemble_g(data, self.profile, s, t)? / d)
    }

    fn denominator(&self, s: f64, t: f64) -> Result<f64> {
        if s + t <= 0.0 {
            return Err(Error::OutsideDomain(s, t));
        }
        Ok(2.0 * self.profile.lambda(s + t))
    }
}

/// Assemble `G` at every node of a truncated-cone grid.
///
/// The axis-branch integrals use composite trapezoid on the grid nodes, the
/// same rule the Picard operator applies to its line integrals. With matching
/// quadratures the Goursat traces are preserved exactly through iteration
/// (up to the corner gaps of the data); mixing rules would leave an O(h^2)
/// drift on `Gamma_1`, `Gamma_2`.
pub fn assemble_g_on_grid(
    data: &CauchyGoursatData,
    profile: &CurvatureProfile,
    grid: Grid,
) -> Result<Field> {
    if !grid.is_cone() {
        return Err(Error::Grid("boundary forcing needs a truncated-cone grid".into()));
    }
    let c = grid.c();
    if (c - data.c).abs() > 1e-12 * c.max(1.0) {
        return Err(Error::Grid(format!(
            "grid truncation c = {c} does not match data c = {}",
            data.c
        )));
    }
    let m = grid.cone_steps();
    let h = grid.h();
    let lam_c = profile.lambda(c);

    // s-branch per column
    let mut branch_s = vec![0.0; grid.nx()];
    let mut cum = 0.0;
    let mut prev = data.g(c) * profile.lambda_prime(c);
    for (i, bs) in branch_s.iter_mut().enumerate() {
        let s = grid.s(i);
        if i <= m {
            *bs = lam_c * data.f(s);
        } else {
            let cur = data.g(s) * profile.lambda_prime(s);
            cum += 0.5 * h * (prev + cur);
            prev = cur;
            *bs = 2.0 * profile.lambda(s) * data.g(s) - lam_c * data.g(c) - cum;
        }
    }

    // t-branch per row
    let mut branch_t = vec![0.0; grid.ny()];
    let mut cum = 0.0;
    let mut prev = data.h(c) * profile.lambda_prime(c);
    for (j, bt) in branch_t.iter_mut().enumerate() {
        let t = grid.t(j);
        if j <= m {
            *bt = lam_c * data.f(c - t);
        } else {
            let cur = data.h(t) * profile.lambda_prime(t);
            cum += 0.5 * h * (prev + cur);
            prev = cur;
            *bt = 2.0 * profile.lambda(t) * data.h(t) - lam_c * data.h(c) - cum;
        }
    }

    // cumulative n-integral at the Cauchy-segment nodes sigma_k = k h, k <= m
    let mut q = vec![0.0; m + 1];
    for k in 1..=m {
        q[k] = q[k - 1] + data.n_integral(grid.s(k - 1), grid.s(k), DEFAULT_TOL);
    }

    let mut out = Field::zeros(grid, "G");
    for j in 0..grid.ny() {
        let a_idx = m.saturating_sub(j);
        for i in grid.row_start(j)..grid.nx() {
            let b_idx = m.min(i);
            let n_term = lam_c * (q[b_idx] - q[a_idx]);
            out.set(i, j, branch_s[i] + branch_t[j] + n_term);
        }
    }
    Ok(out)
}
