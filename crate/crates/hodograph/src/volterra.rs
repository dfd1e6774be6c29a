//! Fixed-point solution of the unified Volterra integral equation on the
//! truncated cone,
//!
//! ```text
//! x(s,t) = [ G(s,t) + int_{(c-t)+}^s lambda'(sigma+t) x(sigma,t) d sigma
//!                   + int_{(c-s)+}^t lambda'(s+tau) x(s,tau) d tau ] / (2 lambda(s+t)),
//! ```
//!
//! by successive approximation, plus attainment checks for the boundary data
//! and the contour-identity cross checks. An optional volume forcing adds the
//! causal-past area integral of `g` to `G`, which is how the linearized
//! (inhomogeneous) problems are solved.

use rayon::prelude::*;

use crate::boundary::{assemble_g, assemble_g_on_grid, CauchyGoursatData};
use crate::curvature::CurvatureProfile;
use crate::error::{Error, Result};
use crate::grid::{Field, FieldEval, Grid};
use crate::quadrature::{adaptive_simpson, DEFAULT_TOL};

/// Iteration record of a successive-approximation solve.
///
/// Increments are not asserted monotone (the factorial convergence bound
/// permits a non-monotone transient); the final increment is below the
/// requested tolerance iff `converged`.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub increments: Vec<f64>,
    pub final_increment: f64,
    pub converged: bool,
    /// Contraction certificate, when the run carries one (corrector solves).
    pub certificate: Option<f64>,
}

impl SolveReport {
    /// Max ratio of consecutive sup increments, skipping pairs at the
    /// round-off floor.
    pub fn max_increment_ratio(&self, floor: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for w in self.increments.windows(2) {
            if w[0] > floor && w[1] > floor {
                let r = w[1] / w[0];
                best = Some(best.map_or(r, |b: f64| b.max(r)));
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Minimum iterations before the tolerance check applies; an exactly zero
    /// increment stops immediately regardless.
    pub min_iter: usize,
    /// Data-parallel workers for node updates; 0 or 1 runs sequentially.
    pub workers: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-10,
            max_iter: 400,
            min_iter: 3,
            workers: 1,
        }
    }
}

/// The discrete Picard operator: precomputed forcing plus the two cumulative
/// line integrals with composite trapezoid along grid rows and columns.
pub struct ConeOperator {
    grid: Grid,
    /// Forcing at the nodes. In boundary mode this is `G` (including any
    /// volume-forcing area term) and the whole sum is scaled by
    /// `1/(2 lambda)`; in prescaled mode it is `F` itself and only the line
    /// integrals are scaled.
    forcing_field: Field,
    prescaled: bool,
    /// lambda'(k h) indexed by the diagonal k = i + j.
    lam_prime: Vec<f64>,
    /// 1 / (2 lambda(k h)); unused entry at k = 0 on cone grids.
    inv_two_lam: Vec<f64>,
    /// Right-node weight of the cell `[k h, (k+1) h]` in the line quadrature.
    /// Solutions of this class carry square-root cusps along the
    /// characteristic axes; cells within `c/2` of an axis use the product rule
    /// exact on `{1, sqrt(sigma)}` (weight `2/3` in the first cell, decaying
    /// to the trapezoid `1/2`), which keeps the solve second order. Pure
    /// trapezoid is capped at order 3/2 by the cusp.
    cell_weight: Vec<f64>,
    pool: Option<rayon::ThreadPool>,
}

/// Right-node weight of the `{1, sqrt}`-exact two-point rule on `[k, k+1]`
/// (unit spacing): `[(2/3)((k+1)^{3/2} - k^{3/2}) - sqrt(k)] / (sqrt(k+1) - sqrt(k))`.
fn sqrt_cell_weight(k: usize) -> f64 {
    let k = k as f64;
    let sk = k.sqrt();
    let sk1 = (k + 1.0).sqrt();
    ((2.0 / 3.0) * ((k + 1.0) * sk1 - k * sk) - sk) / (sk1 - sk)
}

impl ConeOperator {
    pub fn new(
        data: &CauchyGoursatData,
        profile: &CurvatureProfile,
        grid: Grid,
        workers: usize,
    ) -> Result<ConeOperator> {
        let g_total = assemble_g_on_grid(data, profile, grid)?;
        Ok(Self::from_forcing(g_total, false, profile, grid, workers))
    }

    /// Operator with a directly prescribed forcing `F` (the corrector path):
    /// `(A x) = F + [line integrals] / (2 lambda)`, with `(A x)(0) = F(0)`.
    pub fn from_prescaled_forcing(
        forcing: Field,
        profile: &CurvatureProfile,
        workers: usize,
    ) -> ConeOperator {
        let grid = forcing.grid();
        Self::from_forcing(forcing, true, profile, grid, workers)
    }

    /// Inhomogeneous variant: `L[x] = g` adds the causal-past area integral
    /// of `g` to the boundary forcing (the same accounting that produces the
    /// corrector forcing from the parametrix residual).
    pub fn with_volume_forcing(
        data: &CauchyGoursatData,
        profile: &CurvatureProfile,
        grid: Grid,
        volume_g: &Field,
        workers: usize,
    ) -> Result<ConeOperator> {
        let mut g_total = assemble_g_on_grid(data, profile, grid)?;
        let area = cumulative_cone_integral(volume_g)?;
        for j in 0..grid.ny() {
            for i in grid.row_start(j)..grid.nx() {
                let v = g_total.get(i, j) + area.get(i, j);
                g_total.set(i, j, v);
            }
        }
        Ok(Self::from_forcing(g_total, false, profile, grid, workers))
    }

    fn from_forcing(
        forcing_field: Field,
        prescaled: bool,
        profile: &CurvatureProfile,
        grid: Grid,
        workers: usize,
    ) -> ConeOperator {
        let diag_count = grid.nx() + grid.ny() - 1;
        let mut lam_prime = vec![0.0; diag_count];
        let mut inv_two_lam = vec![0.0; diag_count];
        for (k, (lp, il)) in lam_prime.iter_mut().zip(inv_two_lam.iter_mut()).enumerate() {
            let u = k as f64 * grid.h();
            *lp = profile.lambda_prime(u);
            *il = if u > 0.0 {
                1.0 / (2.0 * profile.lambda(u))
            } else {
                0.0
            };
        }
        let strip_cells = grid.cone_steps() / 2;
        let cell_count = grid.nx().max(grid.ny());
        let mut cell_weight = vec![0.5; cell_count];
        for (k, w) in cell_weight.iter_mut().enumerate().take(strip_cells) {
            *w = sqrt_cell_weight(k);
        }
        let pool = (workers > 1).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("thread pool")
        });
        ConeOperator {
            grid,
            forcing_field,
            prescaled,
            lam_prime,
            inv_two_lam,
            cell_weight,
            pool,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn forcing(&self) -> &Field {
        &self.forcing_field
    }

    pub fn apply(&self, x: &Field) -> Field {
        let mut out = Field::zeros(self.grid, &x.label);
        self.apply_into(x, &mut out);
        out
    }

    /// One application of the operator. Row sums are data-parallel when the
    /// worker count allows; the column recurrence is a streaming sweep.
    /// Either path computes identical floating-point results.
    pub fn apply_into(&self, x: &Field, out: &mut Field) {
        let g = self.grid;
        let (nx, ny, h) = (g.nx(), g.ny(), g.h());
        let m = g.cone_steps();

        // weighted field w = lambda'(s + t) x, plus the row cumulative pass;
        // the row integral is stashed in `out` and combined below
        let mut w = vec![0.0; nx * ny];
        {
            let lam_prime = &self.lam_prime;
            let cell_weight = &self.cell_weight;
            let xv = x.values();
            let row_pass = |j: usize, wrow: &mut [f64], orow: &mut [f64]| {
                let i0 = m.saturating_sub(j);
                for i in i0..nx {
                    wrow[i] = lam_prime[i + j] * xv[j * nx + i];
                }
                let mut cum = 0.0;
                orow[i0] = 0.0;
                for i in i0 + 1..nx {
                    let omega = cell_weight[i - 1];
                    cum += h * ((1.0 - omega) * wrow[i - 1] + omega * wrow[i]);
                    orow[i] = cum;
                }
            };
            if let Some(pool) = &self.pool {
                pool.install(|| {
                    w.par_chunks_mut(nx)
                        .zip(out.values_mut().par_chunks_mut(nx))
                        .enumerate()
                        .for_each(|(j, (wrow, orow))| row_pass(j, wrow, orow));
                });
            } else {
                for (j, (wrow, orow)) in w
                    .chunks_mut(nx)
                    .zip(out.values_mut().chunks_mut(nx))
                    .enumerate()
                {
                    row_pass(j, wrow, orow);
                }
            }
        }

        // column cumulative sweep and final scaling
        let forcing = self.forcing_field.values();
        let mut col = vec![0.0; nx];
        for j in 0..ny {
            let i0 = g.row_start(j);
            let row = &w[j * nx..(j + 1) * nx];
            let prev = if j > 0 {
                Some(&w[(j - 1) * nx..j * nx])
            } else {
                None
            };
            for i in i0..nx {
                let cc = match prev {
                    Some(prow) if g.contains(i, j - 1) => {
                        let omega = self.cell_weight[j - 1];
                        col[i] + h * ((1.0 - omega) * prow[i] + omega * row[i])
                    }
                    _ => 0.0,
                };
                col[i] = cc;
                let k = i + j;
                let idx = j * nx + i;
                let o = &mut out.values_mut()[idx];
                if k == 0 {
                    *o = forcing[idx];
                } else if self.prescaled {
                    *o = forcing[idx] + (*o + cc) * self.inv_two_lam[k];
                } else {
                    *o = (forcing[idx] + *o + cc) * self.inv_two_lam[k];
                }
            }
        }
    }
}

/// Cumulative 2-D trapezoid of a grid function over the causal-past regions
/// `D(s,t) = {0 <= sigma <= s, 0 <= tau <= t, sigma + tau >= c}`. Cells cut by
/// the truncation diagonal contribute their triangular half by the vertex rule.
pub fn cumulative_cone_integral(g_field: &Field) -> Result<Field> {
    let g = g_field.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let m = g.cone_steps();
    let mut acc = vec![0.0; nx * ny];
    let quarter = 0.25 * h * h;
    let sixth = h * h / 6.0;
    for j in 0..ny {
        for i in 0..nx {
            if i == 0 || j == 0 {
                continue;
            }
            let cell = if i + j >= m + 2 {
                quarter
                    * (g_field.get(i - 1, j - 1)
                        + g_field.get(i, j - 1)
                        + g_field.get(i - 1, j)
                        + g_field.get(i, j))
            } else if i + j == m + 1 {
                // triangle above the diagonal with vertices (i, j-1), (i-1, j), (i, j)
                sixth * (g_field.get(i, j - 1) + g_field.get(i - 1, j) + g_field.get(i, j))
            } else {
                0.0
            };
            acc[j * nx + i] =
                acc[j * nx + i - 1] + acc[(j - 1) * nx + i] - acc[(j - 1) * nx + i - 1] + cell;
        }
    }
    let mut out = Field::zeros(g, "area");
    for j in 0..ny {
        for i in g.row_start(j)..nx {
            out.set(i, j, acc[j * nx + i]);
        }
    }
    Ok(out)
}

/// One application of the Picard operator to an arbitrary field.
pub fn apply_a(
    x: &Field,
    data: &CauchyGoursatData,
    profile: &CurvatureProfile,
    workers: usize,
) -> Result<Field> {
    let op = ConeOperator::new(data, profile, x.grid(), workers)?;
    Ok(op.apply(x))
}

/// Transfinite blend of the three Dirichlet traces: matches `f` on the Cauchy
/// segment exactly and `g`, `h` on the characteristic axes up to the corner
/// gaps of the data. Serves as the initial iterate.
pub fn transfinite_guess(data: &CauchyGoursatData, grid: Grid) -> Result<Field> {
    if !grid.is_cone() {
        return Err(Error::Grid("transfinite guess needs a truncated-cone grid".into()));
    }
    let c = data.c;
    let (s_cap, t_cap) = (grid.s_max(), grid.t_max());
    Ok(Field::from_fn(grid, "x0", |s, t| {
        let u = s + t;
        let theta = if u > 0.0 { s / u } else { 0.5 };
        let edge = (1.0 - theta) * data.h(u.min(t_cap).max(c)) + theta * data.g(u.min(s_cap).max(c));
        let corner = (1.0 - theta) * data.h(c) + theta * data.g(c);
        edge + (data.f(theta * c) - corner) * (c / u)
    }))
}

fn solve_iterate(
    op: &ConeOperator,
    mut x: Field,
    opts: PicardOptions,
) -> Result<(Field, SolveReport)> {
    let mut next = Field::zeros(op.grid(), &x.label);
    let mut increments = Vec::new();
    for k in 1..=opts.max_iter {
        op.apply_into(&x, &mut next);
        let inc = next.sup_diff(&x);
        increments.push(inc);
        std::mem::swap(&mut x, &mut next);
        x.generation = k;
        if inc == 0.0 || (k >= opts.min_iter && inc < opts.tol) {
            let report = SolveReport {
                iterations: k,
                final_increment: inc,
                increments,
                converged: true,
                certificate: None,
            };
            return Ok((x, report));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        last_increment: *increments.last().unwrap_or(&f64::NAN),
        increments,
    })
}

/// Solve the Cauchy-Goursat problem by successive approximation from the
/// transfinite initial guess.
pub fn solve_picard(
    data: &CauchyGoursatData,
    profile: &CurvatureProfile,
    grid: Grid,
    opts: PicardOptions,
) -> Result<(Field, SolveReport)> {
    let op = ConeOperator::new(data, profile, grid, opts.workers)?;
    let x0 = transfinite_guess(data, grid)?;
    solve_iterate(&op, x0, opts)
}

/// Solve the inhomogeneous problem `L[x] = g` with the given boundary data.
pub fn solve_forced(
    data: &CauchyGoursatData,
    profile: &CurvatureProfile,
    grid: Grid,
    volume_g: &Field,
    opts: PicardOptions,
) -> Result<(Field, SolveReport)> {
    let op = ConeOperator::with_volume_forcing(data, profile, grid, volume_g, opts.workers)?;
    let x0 = transfinite_guess(data, grid)?;
    solve_iterate(&op, x0, opts)
}

// ---------------------------------------------------------------------------
// attainment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct AttainmentParams {
    /// Step of the one-sided normal difference; defaults to `2h`.
    pub z: Option<f64>,
    /// Endpoint exclusion for the normal-derivative probes, as a fraction of
    /// `c`. Probes run over `[delta c, (1 - delta) c]`.
    pub endpoint_exclusion: f64,
}

impl Default for AttainmentParams {
    fn default() -> Self {
        AttainmentParams {
            z: None,
            endpoint_exclusion: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttainmentReport {
    /// Max Dirichlet trace errors on the three boundary segments.
    pub trace_g: f64,
    pub trace_h: f64,
    pub trace_f: f64,
    /// `(xi, measured D_n, n(xi))` per probe.
    pub dn_probes: Vec<(f64, f64, f64)>,
    pub dn_sup_error: f64,
}

/// Compare the field's boundary traces against the data and the one-sided
/// normal difference `[x(xi+z, c-xi+z) - x(xi, c-xi)]/z` against `n` at
/// grid-aligned probes away from the segment endpoints.
pub fn check_attainment(
    x: &Field,
    data: &CauchyGoursatData,
    params: AttainmentParams,
) -> Result<AttainmentReport> {
    let g = x.grid();
    if !g.is_cone() {
        return Err(Error::Grid("attainment check needs a truncated-cone grid".into()));
    }
    let m = g.cone_steps();
    let c = g.c();
    let mut trace_g = 0.0f64;
    let mut trace_h = 0.0f64;
    let mut trace_f = 0.0f64;
    for i in m..g.nx() {
        trace_g = trace_g.max((x.get(i, 0) - data.g(g.s(i))).abs());
    }
    for j in m..g.ny() {
        trace_h = trace_h.max((x.get(0, j) - data.h(g.t(j))).abs());
    }
    for i in 0..=m {
        trace_f = trace_f.max((x.get(i, m - i) - data.f(g.s(i))).abs());
    }

    let z = params.z.unwrap_or(2.0 * g.h());
    let delta = params.endpoint_exclusion * c;
    let mut dn_probes = Vec::new();
    let mut dn_sup = 0.0f64;
    for i in 0..=m {
        let xi = g.s(i);
        if xi < delta - 1e-12 || xi > c - delta + 1e-12 {
            continue;
        }
        let base = x.get(i, m - i);
        let ahead = x.interp(xi + z, c - xi + z)?;
        let measured = (ahead - base) / z;
        let target = data.n(xi);
        dn_sup = dn_sup.max((measured - target).abs());
        dn_probes.push((xi, measured, target));
    }
    Ok(AttainmentReport {
        trace_g,
        trace_h,
        trace_f,
        dn_probes,
        dn_sup_error: dn_sup,
    })
}

// ---------------------------------------------------------------------------
// contour identities
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourCase {
    I,
    II,
    III,
    IV,
    Unified,
}

/// Evaluate the residual of the case's contour relation at a point: the
/// characteristic-side integrals of `lambda x_sigma`, `lambda x_tau` against
/// the known-boundary contributions. Independent of the Picard machinery, so
/// it cross-checks converged fields (and oracles) against the data.
pub fn verify_contour_identity<E: FieldEval>(
    field: &E,
    data: &CauchyGoursatData,
    profile: &CurvatureProfile,
    point: (f64, f64),
    case: ContourCase,
) -> Result<f64> {
    let (s, t) = point;
    let c = data.c;
    let eps = 1e-12 * (1.0 + c + s + t);
    let in_region = match case {
        ContourCase::I => s >= c - eps && t >= c - eps,
        ContourCase::II => s <= c + eps && t >= c - eps,
        ContourCase::III => s >= c - eps && t <= c + eps,
        ContourCase::IV => s <= c + eps && t <= c + eps && s + t >= c - eps,
        ContourCase::Unified => s >= -eps && t >= -eps && s + t >= c - eps,
    };
    if !in_region {
        return Err(Error::OutsideDomain(s, t));
    }
    let tol = DEFAULT_TOL;

    // int over [a, b] of lambda(sigma + t) x_sigma(sigma, t); a lower limit on
    // the characteristic axis meets the square-root cusp of the derivative, so
    // integrate in the graded variable sigma = rho^2 there
    // (the substitution leaves a sqrt(b)*1e-11 sliver at the axis, below the
    // quadrature tolerance, and keeps the integrand bounded)
    let row_int = |a: f64, b: f64| {
        let f = |sigma: f64| profile.lambda(sigma + t) * field.d_s(sigma, t);
        if a == 0.0 && field.grid_h().is_none() {
            adaptive_simpson(&|rho: f64| 2.0 * rho * f(rho * rho), 1e-11, b.sqrt(), tol)
        } else {
            panelled_integral(&f, a, b, field.grid_h(), tol)
        }
    };
    let col_int = |a: f64, b: f64| {
        let f = |tau: f64| profile.lambda(s + tau) * field.d_t(s, tau);
        if a == 0.0 && field.grid_h().is_none() {
            adaptive_simpson(&|rho: f64| 2.0 * rho * f(rho * rho), 1e-11, b.sqrt(), tol)
        } else {
            panelled_integral(&f, a, b, field.grid_h(), tol)
        }
    };
    // int_c^b lambda(sigma) g'(sigma) d sigma, integrated by parts onto the data
    let goursat_int = |b: f64, trace: &dyn Fn(f64) -> f64| {
        profile.lambda(b) * trace(b)
            - profile.lambda(c) * trace(c)
            - adaptive_simpson(&|v: f64| profile.lambda_prime(v) * trace(v), c, b, tol)
    };
    let lam_c = profile.lambda(c);

    let residual = match case {
        ContourCase::I => {
            let lhs = row_int(0.0, s) + col_int(0.0, t);
            let j1 = -goursat_int(s, &|v| data.g(v)) - lam_c * data.n_integral(0.0, c, tol)
                - goursat_int(t, &|v| data.h(v));
            (lhs + j1).abs()
        }
        ContourCase::II => {
            let lhs = row_int(0.0, s) + col_int(c - s, t);
            let j2 = -lam_c * data.n_integral(0.0, s, tol) - goursat_int(t, &|v| data.h(v));
            (lhs + j2).abs()
        }
        ContourCase::III => {
            let lhs = row_int(c - t, s) + col_int(0.0, t);
            let j3 = -lam_c * data.n_integral(c - t, c, tol) + goursat_int(s, &|v| data.g(v));
            (lhs + j3).abs()
        }
        ContourCase::IV => {
            let lhs = row_int(c - t, s) + col_int(c - s, t);
            let j4 = -lam_c * data.n_integral(c - t, s, tol);
            (lhs + j4).abs()
        }
        ContourCase::Unified => {
            let a_t = (c - t).max(0.0);
            let b_s = (c - s).max(0.0);
            let k_row = panelled_integral(
                &|sigma: f64| profile.lambda_prime(sigma + t) * field.value(sigma, t),
                a_t,
                s,
                field.grid_h(),
                tol,
            );
            let k_col = panelled_integral(
                &|tau: f64| profile.lambda_prime(s + tau) * field.value(s, tau),
                b_s,
                t,
                field.grid_h(),
                tol,
            );
            let forcing = assemble_g(data, profile, s, t)?;
            let rhs = (forcing + k_row + k_col) / (2.0 * profile.lambda(s + t));
            (field.value(s, t) - rhs).abs()
        }
    };
    Ok(residual)
}

/// Integral of a field-backed integrand: panels aligned with grid cells when
/// the evaluator is grid-sampled (the interpolant is smooth inside cells),
/// adaptive Simpson otherwise.
fn panelled_integral<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    grid_h: Option<f64>,
    tol: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    match grid_h {
        None => adaptive_simpson(f, a, b, tol),
        Some(h) => {
            let lo = a.min(b);
            let hi = a.max(b);
            let mut acc = 0.0;
            let mut left = lo;
            let mut k = (lo / h).floor() as i64 + 1;
            while left < hi {
                let right = (k as f64 * h).min(hi);
                if right > left {
                    let mid = 0.5 * (left + right);
                    acc += (right - left) / 6.0 * (f(left) + 4.0 * f(mid) + f(right));
                }
                left = right;
                k += 1;
            }
            if a < b {
                acc
            } else {
                -acc
            }
        }
    }
}
