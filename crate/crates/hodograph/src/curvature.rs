//! The curvature coefficient `lambda` as a function of the hodograph time
//! `u(y) = int_y^inf lambda(eta) d eta`, together with the hypotheses the
//! solvers rely on: positivity, monotonicity, and the bounds of
//! `g(u) = lambda(u)/u` that certify the corrector contraction.

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, DEFAULT_TOL};

/// Number of sample points used by the positivity and inf/sup scans.
const SCAN_SAMPLES: usize = 4096;

/// Declared profile kind, mirroring the CLI config vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Constant,
    Linear,
    Polynomial,
    Tabulated,
}

#[derive(Debug, Clone)]
enum Repr {
    /// lambda(u) = a
    Constant(f64),
    /// lambda(u) = sum_k coeffs[k] * u^(k+1); no constant term, so lambda(0) = 0
    Poly(Vec<f64>),
    /// Monotone piecewise-cubic interpolant of (u, lambda) samples
    Tabulated(Pchip),
}

/// Evaluators for `lambda(u)`, `lambda'(u)`, `lambda''(u)` on `[0, u_max]`.
#[derive(Debug, Clone)]
pub struct CurvatureProfile {
    kind: ProfileKind,
    repr: Repr,
    u_max: f64,
}

impl CurvatureProfile {
    /// Build a profile from a kind and its parameter list; rejects profiles
    /// that fail `lambda > 0` on a dense sample of `(0, u_max]`.
    ///
    /// Parameter conventions: `constant` takes `[a]`; `linear` takes `[a]`
    /// for `lambda(u) = a u`; `polynomial` takes ascending coefficients of
    /// `u, u^2, ...` (the constant term is zero by construction).
    pub fn new(kind: ProfileKind, params: &[f64], u_max: f64) -> Result<Self> {
        if !(u_max > 0.0) {
            return Err(Error::InvalidProfile(format!("u_max must be positive, got {u_max}")));
        }
        let repr = match kind {
            ProfileKind::Constant => {
                if params.len() != 1 {
                    return Err(Error::InvalidProfile(
                        "constant profile takes exactly one parameter".into(),
                    ));
                }
                Repr::Constant(params[0])
            }
            ProfileKind::Linear => {
                if params.len() != 1 {
                    return Err(Error::InvalidProfile(
                        "linear profile takes exactly one parameter".into(),
                    ));
                }
                Repr::Poly(vec![params[0]])
            }
            ProfileKind::Polynomial => {
                if params.is_empty() {
                    return Err(Error::InvalidProfile(
                        "polynomial profile needs at least one coefficient".into(),
                    ));
                }
                Repr::Poly(params.to_vec())
            }
            ProfileKind::Tabulated => {
                return Err(Error::InvalidProfile(
                    "tabulated profiles are built with CurvatureProfile::tabulated".into(),
                ))
            }
        };
        let profile = CurvatureProfile { kind, repr, u_max };
        profile.check_positive()?;
        Ok(profile)
    }

    /// Build a tabulated profile from `(u, lambda)` samples with strictly
    /// increasing `u`. Interpolation is monotone piecewise cubic, so
    /// positivity and monotonicity of the samples carry over between knots.
    pub fn tabulated(us: &[f64], lambdas: &[f64]) -> Result<Self> {
        let pchip = Pchip::new(us, lambdas)?;
        let u_max = *us.last().unwrap();
        let profile = CurvatureProfile {
            kind: ProfileKind::Tabulated,
            repr: Repr::Tabulated(pchip),
            u_max,
        };
        profile.check_positive()?;
        Ok(profile)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// lambda(u)
    pub fn lambda(&self, u: f64) -> f64 {
        match &self.repr {
            Repr::Constant(a) => *a,
            Repr::Poly(coeffs) => {
                // Horner in u, with the extra factor u for the missing constant term.
                let mut acc = 0.0;
                for &ck in coeffs.iter().rev() {
                    acc = acc * u + ck;
                }
                acc * u
            }
            Repr::Tabulated(p) => p.value(u),
        }
    }

    /// lambda'(u) = d lambda / du
    pub fn lambda_prime(&self, u: f64) -> f64 {
        match &self.repr {
            Repr::Constant(_) => 0.0,
            Repr::Poly(coeffs) => {
                let mut acc = 0.0;
                for (k, &ck) in coeffs.iter().enumerate().rev() {
                    acc = acc * u + (k as f64 + 1.0) * ck;
                }
                acc
            }
            Repr::Tabulated(p) => p.derivative(u),
        }
    }

    /// lambda''(u)
    pub fn lambda_second(&self, u: f64) -> f64 {
        match &self.repr {
            Repr::Constant(_) => 0.0,
            Repr::Poly(coeffs) => {
                let mut acc = 0.0;
                for (k, &ck) in coeffs.iter().enumerate().rev() {
                    if k >= 1 {
                        acc = acc * u + (k as f64 + 1.0) * (k as f64) * ck;
                    }
                }
                acc
            }
            Repr::Tabulated(p) => p.second_derivative(u),
        }
    }

    fn check_positive(&self) -> Result<()> {
        for k in 1..=SCAN_SAMPLES {
            let u = self.u_max * k as f64 / SCAN_SAMPLES as f64;
            if !(self.lambda(u) > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "lambda({u}) = {} is not positive",
                    self.lambda(u)
                )));
            }
        }
        Ok(())
    }

    /// Check the hypotheses of the semi-infinite (parametrix) path:
    /// `lambda(0) = 0` and `lambda' > 0` on `[0, u_max]`.
    pub fn validate_semi_infinite(&self) -> Result<()> {
        if self.lambda(0.0) != 0.0 {
            return Err(Error::InvalidProfile(format!(
                "semi-infinite path requires lambda(0) = 0, got {}",
                self.lambda(0.0)
            )));
        }
        for k in 0..=SCAN_SAMPLES {
            let u = self.u_max * k as f64 / SCAN_SAMPLES as f64;
            if !(self.lambda_prime(u) > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "semi-infinite path requires lambda'({u}) > 0, got {}",
                    self.lambda_prime(u)
                )));
            }
        }
        Ok(())
    }

    /// `y(u) = y_ref + int_u^{u_ref} d eta / lambda(eta)` by adaptive quadrature.
    ///
    /// `u <= 0` is rejected: the integral diverges logarithmically when
    /// `lambda(u) ~ u` near zero.
    pub fn y_of_u(&self, u: f64, u_ref: f64, y_ref: f64) -> Result<f64> {
        if !(u > 0.0) || !(u_ref > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "y_of_u requires u, u_ref > 0, got u = {u}, u_ref = {u_ref}"
            )));
        }
        let integrand = |eta: f64| 1.0 / self.lambda(eta);
        Ok(y_ref + adaptive_simpson(&integrand, u, u_ref, DEFAULT_TOL))
    }

    /// Invert `y_of_u` by monotone bisection on `(0, u_max]`.
    pub fn u_of_y(&self, y: f64, u_ref: f64, y_ref: f64) -> Result<f64> {
        // y(u) is strictly decreasing in u (dy/du = -1/lambda < 0).
        let mut hi = self.u_max;
        let mut lo = self.u_max;
        let mut y_lo = self.y_of_u(lo, u_ref, y_ref)?;
        if self.y_of_u(hi, u_ref, y_ref)? > y {
            return Err(Error::InvalidProfile(format!(
                "y = {y} lies below y(u_max); target u exceeds u_max = {}",
                self.u_max
            )));
        }
        let mut guard = 0;
        while y_lo < y {
            lo *= 0.5;
            y_lo = self.y_of_u(lo, u_ref, y_ref)?;
            guard += 1;
            if guard > 2000 {
                return Err(Error::InvalidProfile(format!(
                    "u_of_y failed to bracket y = {y}"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.y_of_u(mid, u_ref, y_ref)? >= y {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Inf/sup of `g(u) = lambda(u)/u` on `[0, U]` with `g(0) = lambda'(0)`, and the
/// contraction certificate `1 - m0/(2M)` of the corrector operator.
#[derive(Debug, Clone, Copy)]
pub struct ContractionBounds {
    pub m0: f64,
    pub big_m: f64,
    pub certificate: f64,
}

/// Sample `g(u) = lambda(u)/u` at `SCAN_SAMPLES` points of `(0, U]` plus the
/// analytic endpoint `g(0) = lambda'(0)` and form the certificate.
///
/// Requires `lambda(0) = 0` and positive sampled `g`.
pub fn contraction_bounds(profile: &CurvatureProfile, u_upper: f64) -> Result<ContractionBounds> {
    if profile.lambda(0.0) != 0.0 {
        return Err(Error::InvalidProfile(format!(
            "contraction bounds require lambda(0) = 0, got {}",
            profile.lambda(0.0)
        )));
    }
    let g0 = profile.lambda_prime(0.0);
    if !(g0 > 0.0) {
        return Err(Error::InvalidProfile(format!(
            "contraction bounds require lambda'(0) > 0, got {g0}"
        )));
    }
    let mut m0 = g0;
    let mut big_m = g0;
    for k in 1..=SCAN_SAMPLES {
        let u = u_upper * k as f64 / SCAN_SAMPLES as f64;
        let g = profile.lambda(u) / u;
        if !(g > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "g({u}) = {g} is not positive on [0, {u_upper}]"
            )));
        }
        m0 = m0.min(g);
        big_m = big_m.max(g);
    }
    let certificate = 1.0 - m0 / (2.0 * big_m);
    debug_assert!(certificate > 0.0 && certificate < 1.0);
    Ok(ContractionBounds {
        m0,
        big_m,
        certificate,
    })
}

/// Fritsch-Carlson monotone piecewise-cubic interpolant.
#[derive(Debug, Clone)]
struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidProfile(
                "tabulated profile needs at least two (u, lambda) samples".into(),
            ));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidProfile(
                    "tabulated u samples must be strictly increasing".into(),
                ));
            }
        }
        let n = xs.len();
        let mut deltas = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            deltas.push((ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]));
        }
        let mut slopes = vec![0.0; n];
        for k in 1..n - 1 {
            let d0 = deltas[k - 1];
            let d1 = deltas[k];
            if d0 * d1 > 0.0 {
                let h0 = xs[k] - xs[k - 1];
                let h1 = xs[k + 1] - xs[k];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        if n >= 3 {
            slopes[0] = edge_slope(xs[1] - xs[0], xs[2] - xs[1], deltas[0], deltas[1]);
            slopes[n - 1] = edge_slope(
                xs[n - 1] - xs[n - 2],
                xs[n - 2] - xs[n - 3],
                deltas[n - 2],
                deltas[n - 3],
            );
        } else {
            slopes[0] = deltas[0];
            slopes[n - 1] = deltas[0];
        }
        Ok(Pchip {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            slopes,
        })
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(k) => k.min(self.xs.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    fn value(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }

    fn derivative(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        (y0 * (6.0 * t2 - 6.0 * t)
            + m0 * (3.0 * t2 - 4.0 * t + 1.0)
            + y1 * (-6.0 * t2 + 6.0 * t)
            + m1 * (3.0 * t2 - 2.0 * t))
            / h
    }

    fn second_derivative(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        (y0 * (12.0 * t - 6.0)
            + m0 * (6.0 * t - 4.0)
            + y1 * (-12.0 * t + 6.0)
            + m1 * (6.0 * t - 2.0))
            / (h * h)
    }
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    // Three-point one-sided estimate with the usual monotonicity clamps.
    let mut d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        d = 0.0;
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        d = 3.0 * d0;
    }
    d
}
