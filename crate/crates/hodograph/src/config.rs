//! Flat key-value run configuration: `key = value` per line, `#` comments,
//! sections spelled with dotted keys. No structured-format dependency, and
//! bit-exact to specify.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::boundary::{CauchyGoursatData, Sampler};
use crate::curvature::{CurvatureProfile, ProfileKind};
use crate::error::{Error, Result};
use crate::exact;
use crate::grid::Grid;
use crate::report::KvReport;

/// Parsed configuration with typed accessors over the raw key-value map.
#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(RunConfig {
            values,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key} = {v} is not a number"))),
        }
    }

    pub fn f64_required(&self, key: &str) -> Result<f64> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key {key}")))?
            .parse()
            .map_err(|_| Error::Config(format!("{key} is not a number")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key} = {v} is not an integer"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(v) => Err(Error::Config(format!("{key} = {v} is not a boolean"))),
        }
    }

    /// Echo for the manifest.
    pub fn echo(&self) -> KvReport {
        let mut kv = KvReport::new();
        for (k, v) in &self.values {
            kv.push(k, v.clone());
        }
        kv
    }

    // -- typed sections ----------------------------------------------------

    pub fn tolerance(&self) -> Result<f64> {
        let tol = self.f64_or("solver.tol", 1e-10)?;
        if !(tol > 0.0) {
            return Err(Error::Config("solver.tol must be positive".into()));
        }
        Ok(tol)
    }

    pub fn max_iter(&self) -> Result<usize> {
        self.usize_or("solver.max_iter", 400)
    }

    pub fn corner_tol(&self) -> Result<f64> {
        let tol = self.f64_or("validate.corner_tol", 1e-8)?;
        if !(tol > 0.0) {
            return Err(Error::Config("validate.corner_tol must be positive".into()));
        }
        Ok(tol)
    }

    pub fn fold_tol_rel(&self) -> Result<f64> {
        let tol = self.f64_or("fold.tol_rel", 1e-6)?;
        if !(tol > 0.0) {
            return Err(Error::Config("fold.tol_rel must be positive".into()));
        }
        Ok(tol)
    }

    /// Worker count for data-parallel node updates; the deterministic flag
    /// forces single-threaded execution.
    pub fn workers(&self) -> Result<usize> {
        if self.deterministic()? {
            return Ok(1);
        }
        Ok(self.usize_or("workers", 1)?.max(1))
    }

    pub fn deterministic(&self) -> Result<bool> {
        self.bool_or("deterministic", false)
    }

    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        if let Some(d) = override_dir {
            return d.to_path_buf();
        }
        match self.get("output.dir") {
            Some(d) => self.base_dir.join(d),
            None => self.base_dir.join("out"),
        }
    }

    pub fn profile(&self) -> Result<CurvatureProfile> {
        let u_max_default = self.f64_or("grid.s_max", 1.0)? + self.f64_or("grid.t_max", 1.0)?;
        let u_max = self.f64_or("profile.u_max", u_max_default)?;
        match self.get("profile.kind") {
            Some("tabulated") => {
                let path = self
                    .get("profile.table")
                    .ok_or_else(|| Error::Config("tabulated profile needs profile.table".into()))?;
                let (us, ls) = read_two_columns(&self.base_dir.join(path))?;
                CurvatureProfile::tabulated(&us, &ls)
            }
            Some(kind) => {
                let kind = match kind {
                    "constant" => ProfileKind::Constant,
                    "linear" => ProfileKind::Linear,
                    "polynomial" => ProfileKind::Polynomial,
                    other => {
                        return Err(Error::Config(format!("unknown profile.kind {other}")))
                    }
                };
                let params: Vec<f64> = self
                    .get("profile.params")
                    .ok_or_else(|| Error::Config("missing profile.params".into()))?
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| Error::Config(format!("bad profile parameter `{s}`")))
                    })
                    .collect::<Result<_>>()?;
                CurvatureProfile::new(kind, &params, u_max)
            }
            None => Err(Error::Config("missing profile.kind".into())),
        }
    }

    /// Truncated-cone grid from `grid.c`, `grid.s_max`, `grid.t_max`, `grid.h`.
    pub fn cone_grid(&self) -> Result<Grid> {
        let c = self.f64_required("grid.c")?;
        let s_max = self.f64_required("grid.s_max")?;
        let t_max = self.f64_required("grid.t_max")?;
        let h = self.f64_required("grid.h")?;
        Grid::truncated_cone(c, s_max, t_max, h)
    }

    pub fn rectangle_grid(&self) -> Result<Grid> {
        let s_max = self.f64_required("grid.s_max")?;
        let t_max = self.f64_required("grid.t_max")?;
        let h = self.f64_required("grid.h")?;
        Grid::rectangle(s_max, t_max, h)
    }

    /// Boundary data: a named built-in or per-segment two-column tables.
    pub fn boundary_data(&self) -> Result<CauchyGoursatData> {
        let c = self.f64_required("grid.c")?;
        match self.get("boundary.builtin") {
            Some("arcsine") => Ok(exact::arcsine(c).1),
            Some("polynomial-diamond") => {
                if (c - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(
                        "polynomial-diamond data lives at grid.c = 1".into(),
                    ));
                }
                Ok(exact::polynomial().1)
            }
            Some(other) => Err(Error::Config(format!("unknown boundary.builtin {other}"))),
            None => {
                let g = self.table_sampler("boundary.g_table")?;
                let h = self.table_sampler("boundary.h_table")?;
                let f = self.table_sampler("boundary.f_table")?;
                let n = self.table_sampler("boundary.n_table")?;
                CauchyGoursatData::new(c, g, h, f, n)
            }
        }
    }

    fn table_sampler(&self, key: &str) -> Result<Sampler> {
        let path = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing {key} (no builtin selected)")))?;
        let (xs, ys) = read_two_columns(&self.base_dir.join(path))?;
        Ok(linear_sampler(xs, ys))
    }
}

/// Two whitespace-separated columns, `#` comments allowed.
pub fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(Error::Config(format!(
                "{}: line {} needs two columns",
                path.display(),
                lineno + 1
            )));
        };
        let parse = |tok: &str| -> Result<f64> {
            tok.parse().map_err(|_| {
                Error::Config(format!(
                    "{}: line {}: `{tok}` is not a number",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        xs.push(parse(a)?);
        ys.push(parse(b)?);
    }
    if xs.len() < 2 {
        return Err(Error::Config(format!(
            "{}: needs at least two rows",
            path.display()
        )));
    }
    Ok((xs, ys))
}

/// Piecewise-linear sampler clamped to the table range.
fn linear_sampler(xs: Vec<f64>, ys: Vec<f64>) -> Sampler {
    Arc::new(move |x: f64| {
        if x <= xs[0] {
            return ys[0];
        }
        if x >= xs[xs.len() - 1] {
            return ys[ys.len() - 1];
        }
        let k = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(k) => return ys[k],
            Err(k) => k - 1,
        };
        let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
        ys[k] * (1.0 - w) + ys[k + 1] * w
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_typed_access() {
        let text = "\n# comment\nprofile.kind = linear\nprofile.params = 1\ngrid.c = 1\ngrid.s_max = 3\ngrid.t_max = 3\ngrid.h = 0.25\nsolver.tol = 1e-9\ndeterministic = true\nworkers = 8\n";
        let cfg = RunConfig::parse(text, Path::new(".")).unwrap();
        assert_eq!(cfg.tolerance().unwrap(), 1e-9);
        assert_eq!(cfg.max_iter().unwrap(), 400);
        // deterministic forces a single worker
        assert_eq!(cfg.workers().unwrap(), 1);
        let grid = cfg.cone_grid().unwrap();
        assert_eq!(grid.cone_steps(), 4);
        let p = cfg.profile().unwrap();
        assert_eq!(p.lambda(2.0), 2.0);
        assert!(RunConfig::parse("key_without_value\n", Path::new(".")).is_err());
    }

    #[test]
    fn builtin_boundary_data() {
        let text = "boundary.builtin = arcsine\ngrid.c = 1\ngrid.s_max = 2\ngrid.t_max = 2\ngrid.h = 0.5\n";
        let cfg = RunConfig::parse(text, Path::new(".")).unwrap();
        let data = cfg.boundary_data().unwrap();
        assert_eq!(data.g(1.5), -std::f64::consts::FRAC_PI_2);
        let bad = "boundary.builtin = polynomial-diamond\ngrid.c = 2\ngrid.s_max = 2\ngrid.t_max = 2\ngrid.h = 0.5\n";
        let cfg = RunConfig::parse(bad, Path::new(".")).unwrap();
        assert!(cfg.boundary_data().is_err());
    }

    #[test]
    fn table_boundary_data() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, body: &str| {
            std::fs::write(dir.path().join(name), body).unwrap();
        };
        write("g.tsv", "1.0 -1.0\n3.0 -1.0\n");
        write("h.tsv", "1.0 1.0\n3.0 1.0\n");
        write("f.tsv", "0.0 1.0\n0.5 0.0\n1.0 -1.0\n");
        write("n.tsv", "0.1 0.0\n0.9 0.0\n");
        let text = "grid.c = 1\ngrid.s_max = 2\ngrid.t_max = 2\ngrid.h = 0.5\nboundary.g_table = g.tsv\nboundary.h_table = h.tsv\nboundary.f_table = f.tsv\nboundary.n_table = n.tsv\n";
        let cfg = RunConfig::parse(text, dir.path()).unwrap();
        let data = cfg.boundary_data().unwrap();
        assert_eq!(data.f(0.5), 0.0);
        assert_eq!(data.f(0.25), 0.5);
        assert_eq!(data.g(2.0), -1.0);
    }
}
