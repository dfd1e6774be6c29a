//! Uniform grids on the truncated cone `{s, t >= 0, s + t >= c}` and on
//! rectangles `[0, S] x [0, T]`, plus grid functions with derivative stencils
//! and bilinear interpolation.

use crate::error::{Error, Result};

/// Uniform grid with spacing `h`. `cone_steps = 0` is the full rectangle;
/// `cone_steps = c/h > 0` removes the corner `s + t < c`. The truncation
/// diagonal `c` must be an integer multiple of `h` so that the Cauchy segment
/// passes through grid nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    h: f64,
    nx: usize,
    ny: usize,
    cone_steps: usize,
}

impl Grid {
    pub fn truncated_cone(c: f64, s_max: f64, t_max: f64, h: f64) -> Result<Grid> {
        if !(h > 0.0) || !(c > 0.0) {
            return Err(Error::Grid(format!("need h > 0 and c > 0, got h = {h}, c = {c}")));
        }
        let steps = (c / h).round();
        if (steps * h - c).abs() > 1e-12 * c.max(1.0) {
            return Err(Error::Grid(format!(
                "c = {c} is not an integer multiple of h = {h}"
            )));
        }
        if s_max < c - 1e-12 || t_max < c - 1e-12 {
            return Err(Error::Grid(format!(
                "need c <= S and c <= T, got c = {c}, S = {s_max}, T = {t_max}"
            )));
        }
        let grid = Grid {
            h,
            nx: Self::count(s_max, h)?,
            ny: Self::count(t_max, h)?,
            cone_steps: steps as usize,
        };
        Ok(grid)
    }

    pub fn rectangle(s_max: f64, t_max: f64, h: f64) -> Result<Grid> {
        if !(h > 0.0) {
            return Err(Error::Grid(format!("need h > 0, got {h}")));
        }
        Ok(Grid {
            h,
            nx: Self::count(s_max, h)?,
            ny: Self::count(t_max, h)?,
            cone_steps: 0,
        })
    }

    fn count(extent: f64, h: f64) -> Result<usize> {
        let n = (extent / h).round();
        if (n * h - extent).abs() > 1e-10 * extent.max(1.0) {
            return Err(Error::Grid(format!(
                "extent {extent} is not an integer multiple of h = {h}"
            )));
        }
        Ok(n as usize + 1)
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn cone_steps(&self) -> usize {
        self.cone_steps
    }
    pub fn is_cone(&self) -> bool {
        self.cone_steps > 0
    }
    pub fn c(&self) -> f64 {
        self.cone_steps as f64 * self.h
    }
    pub fn s_max(&self) -> f64 {
        (self.nx - 1) as f64 * self.h
    }
    pub fn t_max(&self) -> f64 {
        (self.ny - 1) as f64 * self.h
    }
    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.h
    }
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    /// First valid column index of row `j`.
    pub fn row_start(&self, j: usize) -> usize {
        self.cone_steps.saturating_sub(j)
    }

    /// First valid row index of column `i`.
    pub fn col_start(&self, i: usize) -> usize {
        self.cone_steps.saturating_sub(i)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.nx && j < self.ny && i + j >= self.cone_steps
    }

    /// Whether a real-coordinate point lies in the closed domain.
    pub fn contains_point(&self, s: f64, t: f64) -> bool {
        let eps = 1e-12 * (1.0 + self.s_max().max(self.t_max()));
        s >= -eps
            && t >= -eps
            && s <= self.s_max() + eps
            && t <= self.t_max() + eps
            && s + t >= self.c() - eps
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_count(&self) -> usize {
        (0..self.ny).map(|j| self.nx - self.row_start(j).min(self.nx)).sum()
    }
}

/// Scalar grid function. Off-cone entries hold NaN so accidental reads of the
/// cut corner surface immediately.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    pub label: String,
    /// Iteration index that produced this field (0 for data/initial fields).
    pub generation: usize,
}

impl Field {
    pub fn zeros(grid: Grid, label: &str) -> Field {
        Field::from_fn(grid, label, |_, _| 0.0)
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid, label: &str, f: F) -> Field {
        let mut values = vec![f64::NAN; grid.nx * grid.ny];
        for j in 0..grid.ny {
            for i in grid.row_start(j)..grid.nx {
                values[grid.idx(i, j)] = f(grid.s(i), grid.t(j));
            }
        }
        Field {
            grid,
            values,
            label: label.to_string(),
            generation: 0,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    /// Iterate over valid nodes as `(i, j, s, t, value)`.
    pub fn iter_nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64, f64)> + '_ {
        let g = self.grid;
        (0..g.ny).flat_map(move |j| {
            (g.row_start(j)..g.nx).map(move |i| (i, j, g.s(i), g.t(j), self.get(i, j)))
        })
    }

    /// Supremum of |self - other| over valid nodes.
    pub fn sup_diff(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let mut sup = 0.0f64;
        for j in 0..self.grid.ny {
            for i in self.grid.row_start(j)..self.grid.nx {
                sup = sup.max((self.get(i, j) - other.get(i, j)).abs());
            }
        }
        sup
    }

    pub fn sup_abs(&self) -> f64 {
        let mut sup = 0.0f64;
        for j in 0..self.grid.ny {
            for i in self.grid.row_start(j)..self.grid.nx {
                sup = sup.max(self.get(i, j).abs());
            }
        }
        sup
    }

    /// All values finite at valid nodes.
    pub fn all_finite(&self) -> bool {
        for j in 0..self.grid.ny {
            for i in self.grid.row_start(j)..self.grid.nx {
                if !self.get(i, j).is_finite() {
                    return false;
                }
            }
        }
        true
    }

    /// d/ds at a node: centered in the interior, one-sided second order where
    /// the centered stencil would leave the domain (outer edges and the
    /// truncation diagonal).
    pub fn ds(&self, i: usize, j: usize) -> f64 {
        let g = self.grid;
        let h = g.h;
        let ok = |ii: i64| ii >= 0 && g.contains(ii as usize, j);
        let i = i as i64;
        let v = |ii: i64| self.get(ii as usize, j);
        if ok(i - 1) && ok(i + 1) {
            (v(i + 1) - v(i - 1)) / (2.0 * h)
        } else if ok(i + 1) && ok(i + 2) {
            (-3.0 * v(i) + 4.0 * v(i + 1) - v(i + 2)) / (2.0 * h)
        } else if ok(i - 1) && ok(i - 2) {
            (3.0 * v(i) - 4.0 * v(i - 1) + v(i - 2)) / (2.0 * h)
        } else if ok(i + 1) {
            (v(i + 1) - v(i)) / h
        } else if ok(i - 1) {
            (v(i) - v(i - 1)) / h
        } else {
            0.0
        }
    }

    /// d/dt at a node; same stencil policy as [`Field::ds`].
    pub fn dt(&self, i: usize, j: usize) -> f64 {
        let g = self.grid;
        let h = g.h;
        let ok = |jj: i64| jj >= 0 && g.contains(i, jj as usize);
        let j = j as i64;
        let v = |jj: i64| self.get(i, jj as usize);
        if ok(j - 1) && ok(j + 1) {
            (v(j + 1) - v(j - 1)) / (2.0 * h)
        } else if ok(j + 1) && ok(j + 2) {
            (-3.0 * v(j) + 4.0 * v(j + 1) - v(j + 2)) / (2.0 * h)
        } else if ok(j - 1) && ok(j - 2) {
            (3.0 * v(j) - 4.0 * v(j - 1) + v(j - 2)) / (2.0 * h)
        } else if ok(j + 1) {
            (v(j + 1) - v(j)) / h
        } else if ok(j - 1) {
            (v(j) - v(j - 1)) / h
        } else {
            0.0
        }
    }

    /// Stencil-derivative fields (x_s, x_t) over all nodes.
    pub fn gradients(&self) -> (Field, Field) {
        let g = self.grid;
        let mut gs = Field::zeros(g, &format!("{}_s", self.label));
        let mut gt = Field::zeros(g, &format!("{}_t", self.label));
        for j in 0..g.ny {
            for i in g.row_start(j)..g.nx {
                gs.set(i, j, self.ds(i, j));
                gt.set(i, j, self.dt(i, j));
            }
        }
        (gs, gt)
    }

    /// Bilinear interpolation at a real-coordinate point of the closed domain.
    /// In cells cut by the truncation diagonal the missing corner is linearly
    /// extended from the three valid ones.
    pub fn interp(&self, s: f64, t: f64) -> Result<f64> {
        let g = self.grid;
        if !g.contains_point(s, t) {
            return Err(Error::OutsideDomain(s, t));
        }
        let h = g.h;
        if g.nx < 2 || g.ny < 2 {
            return Err(Error::Grid("interpolation needs at least a 2x2 grid".into()));
        }
        let fi = (s / h).clamp(0.0, (g.nx - 1) as f64);
        let fj = (t / h).clamp(0.0, (g.ny - 1) as f64);
        let i = (fi.floor() as usize).min(g.nx - 2);
        let j = (fj.floor() as usize).min(g.ny - 2);
        let a = fi - i as f64;
        let b = fj - j as f64;
        let v11 = self.get(i + 1, j + 1);
        let v10 = if g.contains(i + 1, j) { self.get(i + 1, j) } else { f64::NAN };
        let v01 = if g.contains(i, j + 1) { self.get(i, j + 1) } else { f64::NAN };
        let v00 = if g.contains(i, j) {
            self.get(i, j)
        } else if v10.is_finite() && v01.is_finite() {
            v10 + v01 - v11
        } else {
            f64::NAN
        };
        // Zero weights must not pull in NaN corners (0 * NaN = NaN).
        let mut acc = 0.0;
        for (v, w) in [
            (v00, (1.0 - a) * (1.0 - b)),
            (v10, a * (1.0 - b)),
            (v01, (1.0 - a) * b),
            (v11, a * b),
        ] {
            if w != 0.0 {
                acc += v * w;
            }
        }
        Ok(acc)
    }
}

/// Evaluation interface shared by grid fields and closed-form oracles; used by
/// the contour-identity cross checks.
pub trait FieldEval {
    fn value(&self, s: f64, t: f64) -> f64;
    fn d_s(&self, s: f64, t: f64) -> f64;
    fn d_t(&self, s: f64, t: f64) -> f64;
    /// Spacing hint: grid-sampled evaluators return their `h` so quadratures
    /// can align panels with cells.
    fn grid_h(&self) -> Option<f64> {
        None
    }
}

/// A field bundled with precomputed stencil gradients, interpolated off-node.
pub struct SampledField<'a> {
    pub field: &'a Field,
    gs: Field,
    gt: Field,
}

impl<'a> SampledField<'a> {
    pub fn new(field: &'a Field) -> SampledField<'a> {
        let (gs, gt) = field.gradients();
        SampledField { field, gs, gt }
    }
}

impl FieldEval for SampledField<'_> {
    fn value(&self, s: f64, t: f64) -> f64 {
        self.field.interp(s, t).unwrap_or(f64::NAN)
    }
    fn d_s(&self, s: f64, t: f64) -> f64 {
        self.gs.interp(s, t).unwrap_or(f64::NAN)
    }
    fn d_t(&self, s: f64, t: f64) -> f64 {
        self.gt.interp(s, t).unwrap_or(f64::NAN)
    }
    fn grid_h(&self) -> Option<f64> {
        Some(self.field.grid().h())
    }
}
