//! Line energies along the diagonals `s + t = u`, the energy identity and its
//! Gronwall consequence, and the linearized stability experiment under
//! perturbations of the curvature function.
//!
//! The energy of a field along `Gamma_u` is
//! `E(u) = int lambda(u) (x_s^2 + x_t^2) ds` with the integral running over
//! the part of the diagonal inside the grid; for solutions with homogeneous
//! Goursat traces it obeys
//! `E(u) = E(c) + int_c^u int ( g (x_s + x_t) - 2 lambda'(v) x_s x_t ) ds dv`.

use std::sync::Arc;

use crate::boundary::CauchyGoursatData;
use crate::curvature::CurvatureProfile;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::quadrature::adaptive_simpson;
use crate::volterra::{solve_forced, solve_picard, PicardOptions, SolveReport};

/// Energies per grid diagonal.
#[derive(Debug, Clone)]
pub struct EnergyTrace {
    pub us: Vec<f64>,
    pub energies: Vec<f64>,
}

impl EnergyTrace {
    pub fn sup(&self) -> f64 {
        self.energies.iter().copied().fold(0.0, f64::max)
    }
}

/// Cached stencil gradients of a field, shared by the energy quadratures.
pub struct EnergyContext<'a> {
    x: &'a Field,
    gs: Field,
    gt: Field,
    profile: &'a CurvatureProfile,
}

impl<'a> EnergyContext<'a> {
    pub fn new(x: &'a Field, profile: &'a CurvatureProfile) -> EnergyContext<'a> {
        let (gs, gt) = x.gradients();
        EnergyContext { x, gs, gt, profile }
    }

    fn grid(&self) -> Grid {
        self.x.grid()
    }

    fn diagonal_index(&self, u: f64) -> Result<usize> {
        let g = self.grid();
        let k = (u / g.h()).round();
        if (k * g.h() - u).abs() > 1e-10 * u.max(1.0) {
            return Err(Error::Grid(format!("u = {u} is not a grid diagonal")));
        }
        let k = k as usize;
        if k < g.cone_steps() || k > g.nx() + g.ny() - 2 {
            return Err(Error::Grid(format!("diagonal u = {u} outside the domain")));
        }
        Ok(k)
    }

    /// Trapezoid of `f(i, j)` over the diagonal `i + j = k`, in the `ds`
    /// measure.
    fn diagonal_integral<F: Fn(usize, usize) -> f64>(&self, k: usize, f: F) -> f64 {
        let g = self.grid();
        let i_lo = k.saturating_sub(g.ny() - 1);
        let i_hi = k.min(g.nx() - 1);
        if i_hi <= i_lo {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in i_lo..=i_hi {
            let w = if i == i_lo || i == i_hi { 0.5 } else { 1.0 };
            acc += w * f(i, k - i);
        }
        acc * g.h()
    }

    /// `E(u)` at a grid diagonal.
    pub fn line_energy(&self, u: f64) -> Result<f64> {
        let k = self.diagonal_index(u)?;
        let lam = self.profile.lambda(u);
        Ok(lam
            * self.diagonal_integral(k, |i, j| {
                self.gs.get(i, j).powi(2) + self.gt.get(i, j).powi(2)
            }))
    }

    /// Energies over every grid diagonal in `[u_lo, u_hi]`.
    pub fn trace(&self, u_lo: f64, u_hi: f64) -> Result<EnergyTrace> {
        let g = self.grid();
        let k_lo = self.diagonal_index(u_lo)?;
        let k_hi = self.diagonal_index(u_hi)?;
        let mut us = Vec::new();
        let mut energies = Vec::new();
        for k in k_lo..=k_hi {
            let u = k as f64 * g.h();
            us.push(u);
            energies.push(self.line_energy(u)?);
        }
        Ok(EnergyTrace { us, energies })
    }

    /// Check the identity hypotheses: homogeneous Goursat traces on both
    /// characteristic axes.
    fn check_homogeneous_traces(&self) -> Result<()> {
        let g = self.grid();
        let m = g.cone_steps();
        let scale = self.x.sup_abs().max(1.0);
        for i in m..g.nx() {
            if self.x.get(i, 0).abs() > 1e-12 * scale {
                return Err(Error::ValidationFailed(
                    "energy identity needs x(s, 0) = 0 on the Goursat axis".into(),
                ));
            }
        }
        for j in m..g.ny() {
            if self.x.get(0, j).abs() > 1e-12 * scale {
                return Err(Error::ValidationFailed(
                    "energy identity needs x(0, t) = 0 on the Goursat axis".into(),
                ));
            }
        }
        Ok(())
    }

    /// Residual of the energy identity between the diagonals `c` (the grid
    /// truncation) and `u`, with forcing `g` (`L[x] = g`).
    ///
    /// Diagonals beyond `min(S, T)` exit the grid; the outer edges would then
    /// carry unaccounted flux, so such `u` are rejected.
    pub fn identity_residual(&self, forcing: &Field, u: f64) -> Result<f64> {
        self.check_homogeneous_traces()?;
        let g = self.grid();
        if u > g.s_max().min(g.t_max()) + 1e-12 {
            return Err(Error::Grid(format!(
                "identity needs the full diagonal inside the grid; u = {u} exceeds min(S, T)"
            )));
        }
        let m = g.cone_steps();
        let c = g.c();
        let k_hi = self.diagonal_index(u)?;
        let e_u = self.line_energy(u)?;
        let e_c = self.line_energy(c)?;
        let mut bulk = 0.0;
        for k in m..=k_hi {
            let v = k as f64 * g.h();
            let lam_prime = self.profile.lambda_prime(v);
            let inner = self.diagonal_integral(k, |i, j| {
                let xs = self.gs.get(i, j);
                let xt = self.gt.get(i, j);
                forcing.get(i, j) * (xs + xt) - 2.0 * lam_prime * xs * xt
            });
            let w = if k == m || k == k_hi { 0.5 } else { 1.0 };
            bulk += w * inner * g.h();
        }
        Ok((e_u - e_c - bulk).abs())
    }

    /// `L^2` norm squared of a forcing over the slab `c <= s + t <= u`.
    pub fn forcing_norm_sq(&self, forcing: &Field, u: f64) -> Result<f64> {
        let g = self.grid();
        let m = g.cone_steps();
        let k_hi = self.diagonal_index(u)?;
        let mut acc = 0.0;
        for k in m..=k_hi {
            let inner = self.diagonal_integral(k, |i, j| forcing.get(i, j).powi(2));
            let w = if k == m || k == k_hi { 0.5 } else { 1.0 };
            acc += w * inner * g.h();
        }
        Ok(acc)
    }

    /// The Gronwall bound
    /// `E(u) <= lambda(u) e^{u-c} / lambda(c) (E(c) + ||g||^2 / 2)`.
    pub fn gronwall_bound(&self, e_c: f64, forcing: &Field, u: f64) -> Result<f64> {
        gronwall_from_norm(
            self.profile,
            self.grid().c(),
            u,
            e_c,
            self.forcing_norm_sq(forcing, u)?,
        )
    }
}

/// Evaluate the Gronwall right side from an already computed forcing norm.
pub fn gronwall_from_norm(
    profile: &CurvatureProfile,
    c: f64,
    u: f64,
    e_c: f64,
    forcing_norm_sq: f64,
) -> Result<f64> {
    for k in 0..=256 {
        let v = c + (u - c) * k as f64 / 256.0;
        if !(profile.lambda_prime(v) > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "Gronwall bound requires lambda' > 0 on [c, u]; fails near {v}"
            )));
        }
    }
    Ok(profile.lambda(u) * (u - c).exp() / profile.lambda(c) * (e_c + 0.5 * forcing_norm_sq))
}

/// Flag non-convergence of an energy across one grid refinement: set when the
/// refined value grows by 2x, or keeps climbing by more than 5% of its size
/// (the log-divergent cusp energies grow a constant amount per refinement, so
/// a pure growth-factor test would miss them).
pub fn energy_divergence_flag(coarse: f64, fine: f64) -> bool {
    fine > 2.0 * coarse.abs() || (fine - coarse) > 0.05 * fine.abs()
}

// ---------------------------------------------------------------------------
// perturbations of the curvature function
// ---------------------------------------------------------------------------

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A curvature perturbation, carried as the relative form
/// `delta_log = delta lambda / lambda_0` together with its `u`-derivative.
/// Only the derivative enters the linearized forcing; the mean of
/// `delta_log` is the gauge freedom of uniform rescaling.
#[derive(Clone)]
pub struct Perturbation {
    delta_log: Evaluator,
    ddu_delta_log: Evaluator,
}

impl Perturbation {
    pub fn from_delta_log(delta_log: Evaluator, ddu_delta_log: Evaluator) -> Perturbation {
        Perturbation {
            delta_log,
            ddu_delta_log,
        }
    }

    /// Build from `delta lambda` and its derivative against a base profile.
    pub fn from_delta_lambda(
        profile0: &CurvatureProfile,
        delta_lambda: Evaluator,
        ddu_delta_lambda: Evaluator,
    ) -> Perturbation {
        let delta_log: Evaluator = {
            let p = profile0.clone();
            let dl = delta_lambda.clone();
            Arc::new(move |u| dl(u) / p.lambda(u))
        };
        let ddu: Evaluator = {
            let p = profile0.clone();
            Arc::new(move |u| {
                let lam = p.lambda(u);
                (ddu_delta_lambda(u) * lam - delta_lambda(u) * p.lambda_prime(u)) / (lam * lam)
            })
        };
        Perturbation {
            delta_log,
            ddu_delta_log: ddu,
        }
    }

    /// Uniform rescaling `lambda -> (1 + eps) lambda`: constant `delta_log`,
    /// identically zero derivative.
    pub fn uniform_scaling(eps: f64) -> Perturbation {
        Perturbation {
            delta_log: Arc::new(move |_| eps),
            ddu_delta_log: Arc::new(|_| 0.0),
        }
    }

    pub fn delta_log(&self, u: f64) -> f64 {
        (self.delta_log)(u)
    }

    pub fn ddu_delta_log(&self, u: f64) -> f64 {
        (self.ddu_delta_log)(u)
    }

    /// Mean of `delta_log` over `[c, cap]`.
    pub fn mean(&self, c: f64, cap: f64) -> f64 {
        let f = self.delta_log.clone();
        adaptive_simpson(&|u| f(u), c, cap, 1e-12) / (cap - c)
    }

    /// The mean-free part over `[c, cap]`. Sums back to the original
    /// pointwise with the mean; shares the derivative evaluator.
    pub fn mean_free(&self, c: f64, cap: f64) -> Perturbation {
        let m = self.mean(c, cap);
        let f = self.delta_log.clone();
        Perturbation {
            delta_log: Arc::new(move |u| f(u) - m),
            ddu_delta_log: self.ddu_delta_log.clone(),
        }
    }

    /// `|| d/du delta_log ||^2` in `L^2(lambda_0(u) du)` over `[c, cap]`.
    pub fn weighted_norm_sq(&self, profile0: &CurvatureProfile, c: f64, cap: f64) -> f64 {
        let d = self.ddu_delta_log.clone();
        let p = profile0.clone();
        adaptive_simpson(&|u| p.lambda(u) * d(u).powi(2), c, cap, 1e-13)
    }
}

/// First-variation forcing `g = -2 lambda_0(u) d/du(delta_log) (x_0)_u`, with
/// `(x_0)_u = (x_s + x_t)/2` from the cached stencils.
pub fn linearized_forcing(x0: &Field, profile0: &CurvatureProfile, pert: &Perturbation) -> Field {
    let (gs, gt) = x0.gradients();
    let h = x0.grid().h();
    Field::from_fn(x0.grid(), "linearized_forcing", |s, t| {
        let u = s + t;
        let i = (s / h).round() as usize;
        let j = (t / h).round() as usize;
        -profile0.lambda(u) * pert.ddu_delta_log(u) * (gs.get(i, j) + gt.get(i, j))
    })
}

/// Outcome of the linear stability experiment.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub sup_e0: f64,
    pub sup_e1: f64,
    pub weighted_norm_sq: f64,
    /// `sup E1 / (sup E0 * ||d/du delta_log||^2)`; zero when the norm and
    /// `E1` both vanish (uniform scaling).
    pub ratio: f64,
    pub base: SolveReport,
    pub linearized: SolveReport,
}

/// Solve the base problem, build the first-variation forcing, solve the
/// linearized problem with homogeneous data, and compare energies over the
/// diagonals `[c, u_hi]`.
pub fn stability_experiment(
    data: &CauchyGoursatData,
    profile0: &CurvatureProfile,
    pert: &Perturbation,
    grid: Grid,
    u_hi: f64,
    opts: PicardOptions,
) -> Result<(StabilityReport, Field)> {
    let (x0, base_report) = solve_picard(data, profile0, grid, opts)?;
    let forcing = linearized_forcing(&x0, profile0, pert);
    let zero = CauchyGoursatData::zero(grid.c());
    let (x1, lin_report) = solve_forced(&zero, profile0, grid, &forcing, opts)?;

    let ctx0 = EnergyContext::new(&x0, profile0);
    let ctx1 = EnergyContext::new(&x1, profile0);
    let sup_e0 = ctx0.trace(grid.c(), u_hi)?.sup();
    let sup_e1 = ctx1.trace(grid.c(), u_hi)?.sup();
    let norm_sq = pert.weighted_norm_sq(profile0, grid.c(), u_hi);
    let denom = sup_e0 * norm_sq;
    let ratio = if denom > 0.0 {
        sup_e1 / denom
    } else if sup_e1 == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok((
        StabilityReport {
            sup_e0,
            sup_e1,
            weighted_norm_sq: norm_sq,
            ratio,
            base: base_report,
            linearized: lin_report,
        },
        x1,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::ProfileKind;
    use crate::exact;
    use crate::parametrix;
    use approx::assert_abs_diff_eq;

    fn linear() -> CurvatureProfile {
        CurvatureProfile::new(ProfileKind::Linear, &[1.0], 8.0).unwrap()
    }

    fn quadratic() -> CurvatureProfile {
        CurvatureProfile::new(ProfileKind::Polynomial, &[1.0, 0.5], 8.0).unwrap()
    }

    /// `L[x]` of a sampled field by stencils, the manufactured-solution route.
    fn stencil_forcing(x: &Field, p: &CurvatureProfile) -> Field {
        let (gs, gt) = x.gradients();
        let h = x.grid().h();
        Field::from_fn(x.grid(), "g", |s, t| {
            let i = (s / h).round() as usize;
            let j = (t / h).round() as usize;
            let x_st = 0.5 * (gs.dt(i, j) + gt.ds(i, j));
            2.0 * p.lambda(s + t) * x_st + p.lambda_prime(s + t) * (gs.get(i, j) + gt.get(i, j))
        })
    }

    #[test]
    fn constant_field_has_zero_energy() {
        let p = linear();
        let grid = Grid::truncated_cone(1.0, 2.0, 2.0, 1.0 / 16.0).unwrap();
        let x = Field::from_fn(grid, "const", |_, _| 0.7);
        let ctx = EnergyContext::new(&x, &p);
        for &u in &[1.0, 1.5, 2.0, 3.0] {
            // one-sided stencils on constants leave only round-off
            assert!(ctx.line_energy(u).unwrap() < 1e-25);
        }
        assert!(ctx.line_energy(0.5).is_err());
        assert!(ctx.line_energy(1.01).is_err());
    }

    #[test]
    fn manufactured_energy_matches_quadrature_oracle() {
        // x = s t (s + t - c) on the cone, lambda(u) = u
        let p = linear();
        let c = 1.0;
        let mut errs = Vec::new();
        for &n in &[32usize, 64] {
            let grid = Grid::truncated_cone(c, 2.0, 2.0, 1.0 / n as f64).unwrap();
            let x = Field::from_fn(grid, "m", |s, t| s * t * (s + t - c));
            let ctx = EnergyContext::new(&x, &p);
            let u = 1.5;
            let oracle = u * adaptive_simpson(
                &|s: f64| {
                    let t = u - s;
                    let xs = t * (2.0 * s + t - c);
                    let xt = s * (s + 2.0 * t - c);
                    xs * xs + xt * xt
                },
                0.0,
                u.min(grid.s_max()),
                1e-12,
            );
            errs.push((ctx.line_energy(u).unwrap() - oracle).abs());
        }
        // stencil + trapezoid error is O(h^2)
        assert!(errs[1] < 0.3 * errs[0], "errors {errs:?}");
        assert!(errs[1] < 1e-3);
    }

    #[test]
    fn cusped_energy_flags_non_convergence() {
        // the arcsine gradient integrand behaves like 1/s near the axes: the
        // grid energy keeps growing under refinement and must be flagged
        let p = linear();
        let a = exact::ArcsineSolution;
        let mut values = Vec::new();
        for &n in &[64usize, 128] {
            let grid = Grid::truncated_cone(1.0, 3.0, 3.0, 1.0 / n as f64).unwrap();
            let x = Field::from_fn(grid, "xa", |s, t| a.x(s, t));
            let ctx = EnergyContext::new(&x, &p);
            values.push(ctx.line_energy(2.0).unwrap());
        }
        assert!(values.iter().all(|v| v.is_finite()));
        assert!(
            energy_divergence_flag(values[0], values[1]),
            "values {values:?}"
        );
        // a converging energy is not flagged
        assert!(!energy_divergence_flag(1.0, 1.0005));
    }

    #[test]
    fn identity_requires_homogeneous_traces() {
        let p = linear();
        let grid = Grid::truncated_cone(1.0, 2.0, 2.0, 1.0 / 16.0).unwrap();
        let x = Field::from_fn(grid, "bad", |_, _| 1.0);
        let g = Field::zeros(grid, "g");
        let ctx = EnergyContext::new(&x, &p);
        assert!(ctx.identity_residual(&g, 2.0).is_err());
    }

    #[test]
    fn identity_zero_for_zero_field() {
        let p = linear();
        let grid = Grid::truncated_cone(1.0, 2.0, 2.0, 1.0 / 16.0).unwrap();
        let x = Field::zeros(grid, "z");
        let g = Field::zeros(grid, "g");
        let ctx = EnergyContext::new(&x, &p);
        assert_eq!(ctx.identity_residual(&g, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn identity_residual_shrinks_for_manufactured_solution() {
        // x_m = s t sin(s + t) vanishes on the axes; g := L[x_m] by stencils
        let p = quadratic();
        let mut residuals = Vec::new();
        for &n in &[16usize, 32, 64] {
            let grid = Grid::truncated_cone(1.0, 2.0, 2.0, 1.0 / n as f64).unwrap();
            let x = Field::from_fn(grid, "mms", |s, t| s * t * (s + t).sin());
            let g = stencil_forcing(&x, &p);
            let ctx = EnergyContext::new(&x, &p);
            residuals.push(ctx.identity_residual(&g, 2.0).unwrap());
        }
        let r1 = (residuals[0] / residuals[1]).log2();
        let r2 = (residuals[1] / residuals[2]).log2();
        assert!(
            r1 >= 1.5 && r2 >= 1.5,
            "residuals {residuals:?} rates {r1} {r2}"
        );
    }

    #[test]
    fn corrector_field_satisfies_identity_to_first_order() {
        // the corrector solves L[x] = -H with homogeneous Goursat data
        let p = quadratic();
        let mut residuals = Vec::new();
        for &n in &[32usize, 64] {
            let grid = Grid::rectangle(1.0, 1.0, 1.0 / n as f64).unwrap();
            let sol = parametrix::solve_goursat(&p, grid, 1e-11, 300, 1).unwrap();
            let g = Field::from_fn(grid, "g", |s, t| {
                -parametrix::eval_residual(&p, s, t, 2.0 * grid.h())
            });
            let ctx = EnergyContext::new(&sol.corrector, &p);
            assert!(ctx.identity_residual(&g, 1.5).is_err());
            residuals.push(ctx.identity_residual(&g, 1.0).unwrap());
        }
        assert!(residuals[1] < 0.7 * residuals[0], "residuals {residuals:?}");
    }

    #[test]
    fn gronwall_closed_form_value() {
        // lambda(u) = u, c = 1, u = 2, g = 0, E(c) = 1 gives 2e
        let p = linear();
        let bound = gronwall_from_norm(&p, 1.0, 2.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(bound, 2.0 * std::f64::consts::E, epsilon = 1e-10);
        // zero data, zero initial energy
        assert_eq!(gronwall_from_norm(&p, 1.0, 2.0, 0.0, 0.0).unwrap(), 0.0);
        // lambda' <= 0 rejected
        let flat = CurvatureProfile::new(ProfileKind::Constant, &[1.0], 4.0).unwrap();
        assert!(gronwall_from_norm(&flat, 1.0, 2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn gronwall_dominates_manufactured_energies() {
        let p = quadratic();
        let grid = Grid::truncated_cone(1.0, 2.0, 2.0, 1.0 / 32.0).unwrap();
        let x = Field::from_fn(grid, "mms", |s, t| s * t * (s + t).sin());
        let g = stencil_forcing(&x, &p);
        let ctx = EnergyContext::new(&x, &p);
        let e_c = ctx.line_energy(1.0).unwrap();
        let trace = ctx.trace(1.0, 2.0).unwrap();
        for (&u, &e) in trace.us.iter().zip(&trace.energies) {
            let bound = ctx.gronwall_bound(e_c, &g, u).unwrap();
            assert!(e <= bound * (1.0 + 1e-9), "E({u}) = {e} exceeds bound {bound}");
        }
    }

    #[test]
    fn linearized_forcing_hand_check() {
        // delta lambda = eps u^2 over lambda_0 = u: delta_log = eps u,
        // g = -2 u eps (x_0)_u
        let p = linear();
        let eps = 0.01;
        let pert = Perturbation::from_delta_lambda(
            &p,
            Arc::new(move |u| eps * u * u),
            Arc::new(move |u| 2.0 * eps * u),
        );
        let grid = Grid::truncated_cone(1.0, 2.0, 2.0, 1.0 / 16.0).unwrap();
        let x0 = Field::from_fn(grid, "x0", |s, t| s + 2.0 * t);
        let g = linearized_forcing(&x0, &p, &pert);
        for (_, _, s, t, v) in g.iter_nodes() {
            let u = s + t;
            // (x_0)_u = (1 + 2)/2; the stencils are exact on linears
            let expected = -2.0 * u * eps * 1.5;
            assert_abs_diff_eq!(v, expected, epsilon = 1e-10);
        }
        // constant delta_log gives the zero field node-by-node
        let g0 = linearized_forcing(&x0, &p, &Perturbation::uniform_scaling(0.3));
        for (_, _, _, _, v) in g0.iter_nodes() {
            assert_eq!(v, 0.0);
        }
        // constant base field gives zero forcing
        let xc = Field::from_fn(grid, "xc", |_, _| 2.0);
        let gc = linearized_forcing(&xc, &p, &pert);
        assert_eq!(gc.sup_abs(), 0.0);
    }

    #[test]
    fn perturbation_mean_decomposition() {
        let pert =
            Perturbation::from_delta_log(Arc::new(|u: f64| u * u), Arc::new(|u: f64| 2.0 * u));
        let m = pert.mean(1.0, 2.0);
        assert_abs_diff_eq!(m, 7.0 / 3.0, epsilon = 1e-10);
        let ortho = pert.mean_free(1.0, 2.0);
        for &u in &[1.1, 1.5, 1.9] {
            assert_abs_diff_eq!(ortho.delta_log(u) + m, pert.delta_log(u), epsilon = 1e-12);
            assert_eq!(ortho.ddu_delta_log(u), pert.ddu_delta_log(u));
        }
        assert_abs_diff_eq!(ortho.mean(1.0, 2.0), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn uniform_scaling_produces_no_variation() {
        let p = linear();
        let (_, data) = exact::arcsine(1.0);
        let grid = Grid::truncated_cone(1.0, 2.0, 2.0, 1.0 / 32.0).unwrap();
        let pert = Perturbation::uniform_scaling(0.1);
        let (report, _) =
            stability_experiment(&data, &p, &pert, grid, 2.0, PicardOptions::default()).unwrap();
        assert!(report.sup_e0 > 0.0);
        assert!(report.sup_e1 <= 1e-10 * report.sup_e0);
        assert_eq!(report.weighted_norm_sq, 0.0);
        assert_eq!(report.ratio, 0.0);
    }

    #[test]
    fn linearized_solution_scales_linearly_in_amplitude() {
        let p = linear();
        let (_, data) = exact::arcsine(1.0);
        let grid = Grid::truncated_cone(1.0, 2.0, 2.0, 1.0 / 32.0).unwrap();
        let make = |eps: f64| {
            Perturbation::from_delta_log(
                Arc::new(move |u: f64| eps * (u - 1.5)),
                Arc::new(move |_| eps),
            )
        };
        let opts = PicardOptions::default();
        let (_, x1) = stability_experiment(&data, &p, &make(0.2), grid, 2.0, opts).unwrap();
        let (_, x1_half) = stability_experiment(&data, &p, &make(0.1), grid, 2.0, opts).unwrap();
        let mut sup = 0.0f64;
        for (i, j, _, _, v) in x1.iter_nodes() {
            sup = sup.max((v - 2.0 * x1_half.get(i, j)).abs());
        }
        assert!(sup < 1e-8, "amplitude linearity defect {sup}");
    }

    #[test]
    fn mean_free_part_gives_identical_variation() {
        let p = linear();
        let (_, data) = exact::arcsine(1.0);
        let grid = Grid::truncated_cone(1.0, 2.0, 2.0, 1.0 / 32.0).unwrap();
        let pert = Perturbation::from_delta_log(
            Arc::new(|u: f64| 0.05 * (std::f64::consts::PI * u).sin()),
            Arc::new(|u: f64| 0.05 * std::f64::consts::PI * (std::f64::consts::PI * u).cos()),
        );
        let ortho = pert.mean_free(1.0, 2.0);
        let opts = PicardOptions::default();
        let (r1, x1) = stability_experiment(&data, &p, &pert, grid, 2.0, opts).unwrap();
        let (r2, x2) = stability_experiment(&data, &p, &ortho, grid, 2.0, opts).unwrap();
        assert!(x1.sup_diff(&x2) <= opts.tol);
        assert!(r1.ratio.is_finite() && r1.ratio > 0.0);
        assert_abs_diff_eq!(r1.ratio, r2.ratio, epsilon = 1e-9 * r1.ratio.max(1.0));
    }
}
