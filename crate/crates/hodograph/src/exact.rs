//! Closed-form solutions used as oracles by the test suites: the arcsine
//! solution of the linear hodograph equation for `lambda(u) = u`, the product
//! surface `w = A e^{-y} cos x` it corresponds to, and the quintic polynomial
//! solution of the Euler-Poisson-Darboux equation whose evolution gives birth
//! to a fold.
//!
//! All derivatives are hand-differentiated; the oracles must be strictly more
//! accurate than anything they test.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use crate::boundary::{CauchyGoursatData, Sampler};
use crate::grid::FieldEval;

/// Closed-form second derivatives in the `(u, p)` chart, as needed by the
/// Euler-Poisson-Darboux residual `u (x_uu - x_pp) + x_u`.
pub trait UpOracle {
    fn x_up(&self, u: f64, p: f64) -> f64;
    fn xu_up(&self, u: f64, p: f64) -> f64;
    fn xp_up(&self, u: f64, p: f64) -> f64;
    fn xuu_up(&self, u: f64, p: f64) -> f64;
    fn xpp_up(&self, u: f64, p: f64) -> f64;
}

/// Max of `|u (x_uu - x_pp) + x_u|` over the probe points.
pub fn epd_residual<O: UpOracle>(oracle: &O, probes: &[(f64, f64)]) -> f64 {
    probes
        .iter()
        .map(|&(u, p)| (u * (oracle.xuu_up(u, p) - oracle.xpp_up(u, p)) + oracle.xu_up(u, p)).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// arcsine solution
// ---------------------------------------------------------------------------

/// `x_a(s, t) = arcsin((t - s)/(t + s))`, the solution of
/// `2(s+t) x_st + x_s + x_t = 0` induced by the product surface.
#[derive(Debug, Clone, Copy)]
pub struct ArcsineSolution;

impl ArcsineSolution {
    pub fn x(&self, s: f64, t: f64) -> f64 {
        if s == 0.0 && t == 0.0 {
            return 0.0;
        }
        (((t - s) / (t + s)).clamp(-1.0, 1.0)).asin()
    }

    pub fn x_s(&self, s: f64, t: f64) -> f64 {
        -(t / s).sqrt() / (s + t)
    }

    pub fn x_t(&self, s: f64, t: f64) -> f64 {
        (s / t).sqrt() / (s + t)
    }

    pub fn x_st(&self, s: f64, t: f64) -> f64 {
        -(s - t) / (2.0 * (s * t).sqrt() * (s + t).powi(2))
    }

    pub fn x_ss(&self, s: f64, t: f64) -> f64 {
        t.sqrt() * (3.0 * s + t) / (2.0 * s.powf(1.5) * (s + t).powi(2))
    }

    pub fn x_tt(&self, s: f64, t: f64) -> f64 {
        -s.sqrt() * (3.0 * t + s) / (2.0 * t.powf(1.5) * (s + t).powi(2))
    }

    /// Boundary data induced on the truncated cone `{s + t >= c}`, with the
    /// exact antiderivative of `n` attached.
    pub fn induced_data(&self, c: f64) -> CauchyGoursatData {
        let g: Sampler = Arc::new(|_| -FRAC_PI_2);
        let h: Sampler = Arc::new(|_| FRAC_PI_2);
        let f: Sampler = Arc::new(move |s| (((c - 2.0 * s) / c).clamp(-1.0, 1.0)).asin());
        let n: Sampler = Arc::new(move |s| (2.0 * s - c) / (c * (s * (c - s)).sqrt()));
        let big_n: Sampler = Arc::new(move |s| -2.0 * (s * (c - s)).max(0.0).sqrt() / c);
        let f_prime: Sampler = Arc::new(move |s| -1.0 / (s * (c - s)).sqrt());
        CauchyGoursatData::new(c, g, h, f, n)
            .expect("c > 0")
            .with_antiderivative(big_n)
            .with_f_prime(f_prime)
    }
}

impl UpOracle for ArcsineSolution {
    fn x_up(&self, u: f64, p: f64) -> f64 {
        ((-p / u).clamp(-1.0, 1.0)).asin()
    }
    fn xu_up(&self, u: f64, p: f64) -> f64 {
        p / (u * (u * u - p * p).sqrt())
    }
    fn xp_up(&self, u: f64, p: f64) -> f64 {
        -1.0 / (u * u - p * p).sqrt()
    }
    fn xuu_up(&self, u: f64, p: f64) -> f64 {
        let r = u * u - p * p;
        -p / r.sqrt() * (1.0 / (u * u) + 1.0 / r)
    }
    fn xpp_up(&self, u: f64, p: f64) -> f64 {
        -p / (u * u - p * p).powf(1.5)
    }
}

impl FieldEval for ArcsineSolution {
    fn value(&self, s: f64, t: f64) -> f64 {
        self.x(s, t)
    }
    fn d_s(&self, s: f64, t: f64) -> f64 {
        self.x_s(s, t)
    }
    fn d_t(&self, s: f64, t: f64) -> f64 {
        self.x_t(s, t)
    }
}

/// The arcsine solution together with the Cauchy-Goursat data it induces at
/// truncation `c`.
pub fn arcsine(c: f64) -> (ArcsineSolution, CauchyGoursatData) {
    let sol = ArcsineSolution;
    let data = sol.induced_data(c);
    (sol, data)
}

// ---------------------------------------------------------------------------
// product solution (physical surface)
// ---------------------------------------------------------------------------

/// `w(x, y) = A e^{-y} cos x`, the explicit negatively curved graph that
/// flattens at infinity; corresponds to `lambda(u) = u` with `u = A e^{-y}`.
#[derive(Debug, Clone, Copy)]
pub struct ProductSolution {
    pub amplitude: f64,
}

impl ProductSolution {
    pub fn new(amplitude: f64) -> ProductSolution {
        assert!(amplitude > 0.0);
        ProductSolution { amplitude }
    }

    pub fn w(&self, x: f64, y: f64) -> f64 {
        self.amplitude * (-y).exp() * x.cos()
    }
    pub fn w_x(&self, x: f64, y: f64) -> f64 {
        -self.amplitude * (-y).exp() * x.sin()
    }
    pub fn w_y(&self, x: f64, y: f64) -> f64 {
        -self.amplitude * (-y).exp() * x.cos()
    }
    pub fn w_xx(&self, x: f64, y: f64) -> f64 {
        -self.amplitude * (-y).exp() * x.cos()
    }
    pub fn w_xy(&self, x: f64, y: f64) -> f64 {
        self.amplitude * (-y).exp() * x.sin()
    }
    pub fn w_yy(&self, x: f64, y: f64) -> f64 {
        self.amplitude * (-y).exp() * x.cos()
    }

    /// Curvature function of the prescribed-curvature equation, as a function
    /// of `y`: `lambda(y) = A e^{-y}`, so `lambda(u) = u`.
    pub fn lambda_of_y(&self, y: f64) -> f64 {
        self.amplitude * (-y).exp()
    }

    /// Full Gaussian curvature of the graph, `det Hess / (1 + |grad w|^2)^2`.
    pub fn gauss_curvature(&self, y: f64) -> f64 {
        let e = self.amplitude * self.amplitude * (-2.0 * y).exp();
        -e / (1.0 + e).powi(2)
    }

    pub fn u_of_y(&self, y: f64) -> f64 {
        self.amplitude * (-y).exp()
    }
    pub fn y_of_u(&self, u: f64) -> f64 {
        (self.amplitude / u).ln()
    }

    /// Residual of `w_xx w_yy - w_xy^2 = -lambda(y)^2` at a point.
    pub fn ma_residual(&self, x: f64, y: f64) -> f64 {
        let lam2 = self.lambda_of_y(y).powi(2);
        self.w_xx(x, y) * self.w_yy(x, y) - self.w_xy(x, y).powi(2) + lam2
    }

    /// Slope `q = w_y` expressed on the hodograph grid (`u = s + t`,
    /// `x = x_a(s, t)`); equals `-2 sqrt(st)` independent of the amplitude.
    pub fn q_hodograph(&self, s: f64, t: f64) -> f64 {
        -2.0 * (s * t).sqrt()
    }

    /// Height `w = u cos(x_a) = 2 sqrt(st)` on the hodograph grid.
    pub fn w_hodograph(&self, s: f64, t: f64) -> f64 {
        2.0 * (s * t).sqrt()
    }
}

// ---------------------------------------------------------------------------
// polynomial solution of the Euler-Poisson-Darboux equation
// ---------------------------------------------------------------------------

/// Quintic-in-`p` polynomial solution of `u (x_uu - x_pp) + x_u = 0` whose
/// slope derivative `x_p` starts negative on the Cauchy line `u = 1` and
/// crosses zero inside the domain of dependence.
#[derive(Debug, Clone, Copy)]
pub struct PolynomialSolution;

const POLY_SCALE: f64 = -5.0 * PI / 26.0;

impl PolynomialSolution {
    pub fn x_st(&self, s: f64, t: f64) -> f64 {
        self.x_up(s + t, s - t)
    }
    pub fn xs_st(&self, s: f64, t: f64) -> f64 {
        let (u, p) = (s + t, s - t);
        self.xu_up(u, p) + self.xp_up(u, p)
    }
    pub fn xt_st(&self, s: f64, t: f64) -> f64 {
        let (u, p) = (s + t, s - t);
        self.xu_up(u, p) - self.xp_up(u, p)
    }

    fn xup_up(&self, u: f64, p: f64) -> f64 {
        POLY_SCALE * ((12.0 * u.powi(3) - 24.0 * u) + 48.0 * u * p * p)
    }

    /// `x_ss = x_uu + 2 x_up + x_pp` under `u = s + t`, `p = s - t`.
    pub fn xss_st(&self, s: f64, t: f64) -> f64 {
        let (u, p) = (s + t, s - t);
        self.xuu_up(u, p) + 2.0 * self.xup_up(u, p) + self.xpp_up(u, p)
    }

    pub fn xtt_st(&self, s: f64, t: f64) -> f64 {
        let (u, p) = (s + t, s - t);
        self.xuu_up(u, p) - 2.0 * self.xup_up(u, p) + self.xpp_up(u, p)
    }

    pub fn xst_st(&self, s: f64, t: f64) -> f64 {
        let (u, p) = (s + t, s - t);
        self.xuu_up(u, p) - self.xpp_up(u, p)
    }

    /// Weakly compatible Cauchy-Goursat data for the central diamond:
    /// polynomial Cauchy data on `u = 1`, constant Goursat data `-pi/2`,
    /// `+pi/2` on the characteristics `p = +-u`, truncation `c = 1`.
    pub fn induced_data(&self) -> CauchyGoursatData {
        let sol = *self;
        let g: Sampler = Arc::new(|_| -FRAC_PI_2);
        let h: Sampler = Arc::new(|_| FRAC_PI_2);
        let f: Sampler = Arc::new(move |s| sol.x_up(1.0, 2.0 * s - 1.0));
        // n = (d_s + d_t) x = 2 x_u on the Cauchy segment
        let n: Sampler = Arc::new(move |s| 2.0 * sol.xu_up(1.0, 2.0 * s - 1.0));
        let big_n: Sampler = Arc::new(move |s| {
            let rho = 2.0 * s - 1.0;
            -10.0 * PI / 13.0 * (rho.powi(4) - 1.5 * rho * rho + 0.5)
        });
        let f_prime: Sampler = Arc::new(move |s| 2.0 * sol.xp_up(1.0, 2.0 * s - 1.0));
        CauchyGoursatData::new(1.0, g, h, f, n)
            .expect("c > 0")
            .with_antiderivative(big_n)
            .with_f_prime(f_prime)
    }
}

impl UpOracle for PolynomialSolution {
    fn x_up(&self, u: f64, p: f64) -> f64 {
        let u2 = u * u;
        POLY_SCALE
            * ((3.0 * u2 * u2 - 12.0 * u2 + 10.0) * p
                + 8.0 * (u2 - 1.0) * p.powi(3)
                + 1.6 * p.powi(5))
    }
    fn xu_up(&self, u: f64, p: f64) -> f64 {
        POLY_SCALE * ((12.0 * u.powi(3) - 24.0 * u) * p + 16.0 * u * p.powi(3))
    }
    fn xp_up(&self, u: f64, p: f64) -> f64 {
        let u2 = u * u;
        POLY_SCALE * ((3.0 * u2 * u2 - 12.0 * u2 + 10.0) + 24.0 * (u2 - 1.0) * p * p + 8.0 * p.powi(4))
    }
    fn xuu_up(&self, u: f64, p: f64) -> f64 {
        POLY_SCALE * ((36.0 * u * u - 24.0) * p + 16.0 * p.powi(3))
    }
    fn xpp_up(&self, u: f64, p: f64) -> f64 {
        POLY_SCALE * (48.0 * (u * u - 1.0) * p + 32.0 * p.powi(3))
    }
}

impl FieldEval for PolynomialSolution {
    fn value(&self, s: f64, t: f64) -> f64 {
        self.x_st(s, t)
    }
    fn d_s(&self, s: f64, t: f64) -> f64 {
        self.xs_st(s, t)
    }
    fn d_t(&self, s: f64, t: f64) -> f64 {
        self.xt_st(s, t)
    }
}

/// The polynomial oracle plus its diamond Cauchy-Goursat data.
pub fn polynomial() -> (PolynomialSolution, CauchyGoursatData) {
    let sol = PolynomialSolution;
    let data = sol.induced_data();
    (sol, data)
}
