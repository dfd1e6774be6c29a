//! Command implementations behind the CLI binary: reproducible runs tying the
//! solver modules together, with TSV grid outputs, key-value reports, and a
//! manifest per run.
//!
//! Exit codes: 0 success, 2 validation failure (incl. configuration), 3
//! convergence failure, 4 I/O failure, 5 contraction certificate >= 1.

use std::path::Path;

use crate::boundary::{validate_weak_compatibility, ValidationReport};
use crate::config::RunConfig;
use crate::curvature::{contraction_bounds, CurvatureProfile};
use crate::energy::{energy_divergence_flag, stability_experiment, EnergyContext, Perturbation};
use crate::error::{Error, Result};
use crate::exact;
use crate::exact::UpOracle;
use crate::grid::{Field, Grid};
use crate::parametrix;
use crate::reconstruct::{self, Anchor, SurfaceOptions};
use crate::report::{columns_tsv, field_tsv, fmt_f64, KvReport, Manifest};
use crate::volterra::{check_attainment, solve_picard, AttainmentParams, PicardOptions, SolveReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_CERTIFICATE: i32 = 5;

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NoConvergence { .. } => EXIT_CONVERGENCE,
        Error::CertificateFailed(_) => EXIT_CERTIFICATE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

/// Run a named command; returns the process exit code. The manifest is
/// written even when the run fails, carrying the failure record.
pub fn run(command: &str, config_path: &Path, out_override: Option<&Path>) -> i32 {
    let cfg = match RunConfig::load(config_path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let out_dir = cfg.output_dir(out_override);
    let mut manifest = Manifest::new(&out_dir, command, &cfg.echo());
    let result = match command {
        "solve-cg" => solve_cg(&cfg, &mut manifest),
        "solve-goursat" => solve_goursat(&cfg, &mut manifest),
        "energy" => energy(&cfg, &mut manifest),
        "stability" => stability(&cfg, &mut manifest),
        "reconstruct" => reconstruct_cmd(&cfg, &mut manifest),
        "validate" => validate(&cfg, &mut manifest),
        "oracle-check" => oracle_check(&cfg, &mut manifest),
        other => Err(Error::Config(format!("unknown command {other}"))),
    };
    match result {
        Ok(()) => {
            if let Err(e) = manifest.finish(None) {
                eprintln!("error: {e}");
                return EXIT_IO;
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code_for(&e);
            let _ = manifest.finish(Some(&e.to_string()));
            code
        }
    }
}

fn picard_options(cfg: &RunConfig) -> Result<PicardOptions> {
    Ok(PicardOptions {
        tol: cfg.tolerance()?,
        max_iter: cfg.max_iter()?,
        min_iter: 3,
        workers: cfg.workers()?,
    })
}

fn validation_kv(report: &ValidationReport) -> KvReport {
    let mut kv = KvReport::new();
    kv.push_f64("corner_gap_g", report.corner_gap_g);
    kv.push_f64("corner_gap_h", report.corner_gap_h);
    kv.push_f64("l1_n", report.l1_n.value);
    kv.push_bool("l1_n_converged", report.l1_n.converged);
    kv.push_f64("l1_f_prime", report.l1_f_prime.value);
    kv.push_bool("l1_f_prime_converged", report.l1_f_prime.converged);
    kv.push_bool("pass", report.pass);
    kv
}

fn solve_kv(report: &SolveReport) -> KvReport {
    let mut kv = KvReport::new();
    kv.push_usize("iterations", report.iterations);
    kv.push_f64("final_increment", report.final_increment);
    kv.push_bool("converged", report.converged);
    if let Some(c) = report.certificate {
        kv.push_f64("certificate", c);
    }
    let history: Vec<String> = report.increments.iter().map(|v| fmt_f64(*v)).collect();
    kv.push("increments", history.join(","));
    if let Some(r) = report.max_increment_ratio(1e-14) {
        kv.push_f64("max_increment_ratio", r);
    }
    kv
}

/// The oracle matching a built-in data set, for the error column of the
/// solved field.
fn builtin_oracle(cfg: &RunConfig) -> Option<Box<dyn Fn(f64, f64) -> f64>> {
    match cfg.get("boundary.builtin") {
        Some("arcsine") => {
            let a = exact::ArcsineSolution;
            Some(Box::new(move |s, t| a.x(s, t)))
        }
        Some("polynomial-diamond") => {
            let p = exact::PolynomialSolution;
            Some(Box::new(move |s, t| p.x_st(s, t)))
        }
        _ => None,
    }
}

fn interior_margin(c: f64, s: f64, t: f64) -> bool {
    let d1 = ((s - c).powi(2) + t * t).sqrt();
    let d2 = (s * s + (t - c).powi(2)).sqrt();
    d1 >= 0.25 && d2 >= 0.25
}

fn validated_solve(
    cfg: &RunConfig,
    manifest: &mut Manifest,
) -> Result<(CurvatureProfile, Grid, Field, SolveReport)> {
    let profile = cfg.profile()?;
    let grid = cfg.cone_grid()?;
    let data = cfg.boundary_data()?;
    let validation = validate_weak_compatibility(&data, cfg.corner_tol()?)?;
    manifest.extend("validation", &validation_kv(&validation));
    if !validation.pass {
        return Err(Error::ValidationFailed(format!(
            "weak compatibility: corner gaps ({:e}, {:e}), n integrable: {}, f' integrable: {}",
            validation.corner_gap_g,
            validation.corner_gap_h,
            validation.n_integrable,
            validation.f_absolutely_continuous
        )));
    }
    let (x, report) = solve_picard(&data, &profile, grid, picard_options(cfg)?)?;
    Ok((profile, grid, x, report))
}

fn solve_cg(cfg: &RunConfig, manifest: &mut Manifest) -> Result<()> {
    let (_profile, grid, x, report) = validated_solve(cfg, manifest)?;
    let data = cfg.boundary_data()?;
    let attainment = check_attainment(&x, &data, AttainmentParams::default())?;

    let mut kv = solve_kv(&report);
    kv.push_f64("trace_error_g", attainment.trace_g);
    kv.push_f64("trace_error_h", attainment.trace_h);
    kv.push_f64("trace_error_f", attainment.trace_f);
    kv.push_f64("dn_sup_error", attainment.dn_sup_error);

    let field_text = match builtin_oracle(cfg) {
        Some(oracle) => {
            let mut max_interior = 0.0f64;
            for (_, _, s, t, v) in x.iter_nodes() {
                if interior_margin(grid.c(), s, t) {
                    max_interior = max_interior.max((v - oracle(s, t)).abs());
                }
            }
            kv.push_f64("error.max_interior", max_interior);
            let exact_col = |_: usize, _: usize, s: f64, t: f64| oracle(s, t);
            let err_col = |i: usize, j: usize, s: f64, t: f64| x.get(i, j) - oracle(s, t);
            field_tsv(&x, &[("x_exact", &exact_col), ("error", &err_col)])
        }
        None => field_tsv(&x, &[]),
    };
    manifest.write_file("field.tsv", &field_text)?;
    manifest.write_file("report.kv", &kv.render())?;
    manifest.extend("solve", &kv);
    Ok(())
}

fn solve_goursat(cfg: &RunConfig, manifest: &mut Manifest) -> Result<()> {
    let profile = cfg.profile()?;
    profile.validate_semi_infinite()?;
    let grid = cfg.rectangle_grid()?;
    let bounds = contraction_bounds(&profile, grid.s_max() + grid.t_max())?;
    if !(bounds.certificate < 1.0) {
        return Err(Error::CertificateFailed(bounds.certificate));
    }
    let sol = parametrix::solve_goursat(
        &profile,
        grid,
        cfg.tolerance()?,
        cfg.max_iter()?,
        cfg.workers()?,
    )?;
    let mut kv = solve_kv(&sol.report);
    kv.push_f64("m0", sol.bounds.m0);
    kv.push_f64("M", sol.bounds.big_m);
    kv.push_f64("certificate", sol.bounds.certificate);
    kv.push_f64("sup_residual", sol.residual.sup_abs());
    kv.push_f64("sup_corrector", sol.corrector.sup_abs());
    manifest.write_file("x_p.tsv", &field_tsv(&sol.parametrix, &[]))?;
    manifest.write_file("residual.tsv", &field_tsv(&sol.residual, &[]))?;
    manifest.write_file("forcing.tsv", &field_tsv(&sol.forcing, &[]))?;
    manifest.write_file("corrector.tsv", &field_tsv(&sol.corrector, &[]))?;
    manifest.write_file("base.tsv", &field_tsv(&sol.base, &[]))?;
    manifest.write_file("report.kv", &kv.render())?;
    manifest.extend("solve", &kv);
    Ok(())
}

fn energy(cfg: &RunConfig, manifest: &mut Manifest) -> Result<()> {
    let (profile, grid, x, _) = validated_solve(cfg, manifest)?;
    let u_hi = grid.s_max().min(grid.t_max());
    let ctx = EnergyContext::new(&x, &profile);
    let trace = ctx.trace(grid.c(), u_hi)?;
    manifest.write_file(
        "energy.tsv",
        &columns_tsv(
            &format!("E(u) with h={}", fmt_f64(grid.h())),
            &[("u", &trace.us), ("E", &trace.energies)],
        ),
    )?;

    let mut kv = KvReport::new();
    kv.push_f64("sup_energy", trace.sup());

    if cfg.bool_or("energy.refine", true)? {
        // refine once and flag diagonals whose energy keeps growing
        let data = cfg.boundary_data()?;
        let fine_grid =
            Grid::truncated_cone(grid.c(), grid.s_max(), grid.t_max(), grid.h() / 2.0)?;
        let (x_fine, _) = solve_picard(&data, &profile, fine_grid, picard_options(cfg)?)?;
        let ctx_fine = EnergyContext::new(&x_fine, &profile);
        let fine = ctx_fine.trace(grid.c(), u_hi)?;
        let flags: Vec<f64> = trace
            .us
            .iter()
            .zip(&trace.energies)
            .map(|(&u, &e)| {
                let k = fine.us.iter().position(|&uf| (uf - u).abs() < 1e-12);
                match k {
                    Some(k) => {
                        if energy_divergence_flag(e, fine.energies[k]) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    None => f64::NAN,
                }
            })
            .collect();
        let flagged = flags.iter().filter(|&&f| f == 1.0).count();
        kv.push_usize("diverging_diagonals", flagged);
        manifest.write_file(
            "energy_fine.tsv",
            &columns_tsv(
                &format!("E(u) with h={}", fmt_f64(fine_grid.h())),
                &[("u", &fine.us), ("E", &fine.energies)],
            ),
        )?;
        manifest.write_file(
            "energy_flags.tsv",
            &columns_tsv(
                "1 = non-convergent under refinement",
                &[("u", &trace.us), ("flag", &flags)],
            ),
        )?;
    }
    manifest.write_file("report.kv", &kv.render())?;
    manifest.extend("energy", &kv);
    Ok(())
}

fn perturbation_from_config(cfg: &RunConfig, c: f64, u_hi: f64) -> Result<Perturbation> {
    let eps = cfg.f64_or("stability.eps", 0.01)?;
    match cfg.get("stability.pert").unwrap_or("uniform") {
        "uniform" => Ok(Perturbation::uniform_scaling(eps)),
        "ramp" => {
            let mid = 0.5 * (c + u_hi);
            Ok(Perturbation::from_delta_log(
                std::sync::Arc::new(move |u| eps * (u - mid)),
                std::sync::Arc::new(move |_| eps),
            ))
        }
        "sine" => Ok(Perturbation::from_delta_log(
            std::sync::Arc::new(move |u| eps * (std::f64::consts::PI * u).sin()),
            std::sync::Arc::new(move |u| {
                eps * std::f64::consts::PI * (std::f64::consts::PI * u).cos()
            }),
        )),
        other => Err(Error::Config(format!("unknown stability.pert {other}"))),
    }
}

fn stability(cfg: &RunConfig, manifest: &mut Manifest) -> Result<()> {
    let profile = cfg.profile()?;
    let grid = cfg.cone_grid()?;
    let data = cfg.boundary_data()?;
    let validation = validate_weak_compatibility(&data, cfg.corner_tol()?)?;
    manifest.extend("validation", &validation_kv(&validation));
    if !validation.pass {
        return Err(Error::ValidationFailed("weak compatibility failed".into()));
    }
    let u_hi = cfg.f64_or("stability.u_max", grid.s_max().min(grid.t_max()))?;
    let pert = perturbation_from_config(cfg, grid.c(), u_hi)?;
    let (report, _) =
        stability_experiment(&data, &profile, &pert, grid, u_hi, picard_options(cfg)?)?;
    let mut kv = KvReport::new();
    kv.push_f64("sup_e0", report.sup_e0);
    kv.push_f64("sup_e1", report.sup_e1);
    kv.push_f64("weighted_norm_sq", report.weighted_norm_sq);
    kv.push_f64("measured_ratio", report.ratio);
    kv.push_usize("base_iterations", report.base.iterations);
    kv.push_usize("linearized_iterations", report.linearized.iterations);
    manifest.write_file("report.kv", &kv.render())?;
    manifest.extend("stability", &kv);
    Ok(())
}

fn reconstruct_cmd(cfg: &RunConfig, manifest: &mut Manifest) -> Result<()> {
    let (profile, grid, x, _) = validated_solve(cfg, manifest)?;
    let c = grid.c();
    let anchor_s = cfg.f64_or("reconstruct.anchor_s", c)?;
    let anchor_t = cfg.f64_or("reconstruct.anchor_t", c)?;
    // product-solution anchors when lambda(u) = u, zero references otherwise
    let is_identity_lambda = (profile.lambda(0.5) - 0.5).abs() < 1e-14
        && (profile.lambda(1.5) - 1.5).abs() < 1e-14;
    let anchor = if is_identity_lambda {
        Anchor::product(anchor_s, anchor_t)
    } else {
        Anchor {
            s: anchor_s,
            t: anchor_t,
            q_ref: cfg.f64_or("reconstruct.q_ref", 0.0)?,
            w_ref: cfg.f64_or("reconstruct.w_ref", 0.0)?,
            y_ref: cfg.f64_or("reconstruct.y_ref", 0.0)?,
        }
    };
    let opts = SurfaceOptions {
        fold_tol_rel: cfg.fold_tol_rel()?,
    };
    let surf = reconstruct::compute_surface(&x, &profile, &anchor, opts)?;
    let ma = reconstruct::ma_residual(&surf, &profile, cfg.fold_tol_rel()?);

    let mut kv = KvReport::new();
    kv.push_f64("loop_residual_q", surf.loop_residual_q);
    kv.push_f64("loop_residual_w", surf.loop_residual_w);
    kv.push_usize("folded_edges", surf.fold_mask.edge_count());
    kv.push_usize("ma_excluded_nodes", ma.excluded.len());
    kv.push_f64("ma_residual_sup", ma.sup);
    let mut ma_interior = 0.0f64;
    for (i, j, s, t, _) in surf.x.iter_nodes() {
        if interior_margin(c, s, t) && s >= 0.25 && t >= 0.25 {
            let r = ma.residual.get(i, j);
            if r.is_finite() {
                ma_interior = ma_interior.max(r.abs());
            }
        }
    }
    kv.push_f64("ma_residual_sup_interior", ma_interior);
    match reconstruct::check_partial_convexity(&surf) {
        reconstruct::ConvexityVerdict::ConstantSign(s) => {
            kv.push("partial_convexity", format!("constant_sign {s}"))
        }
        reconstruct::ConvexityVerdict::Violated { first_node } => kv.push(
            "partial_convexity",
            format!("violated at node ({}, {})", first_node.0, first_node.1),
        ),
        reconstruct::ConvexityVerdict::NotApplicable { folded_edges } => kv.push(
            "partial_convexity",
            format!("not applicable: {folded_edges} folded edges"),
        ),
    }

    // surface table: s, t, u, p, x, y, q, w, fold
    let g = surf.x.grid();
    let mut out = String::new();
    out.push_str(&format!(
        "# s\tt\tu\tp\tx\ty\tq\tw\tfold\tgrid: c={} S={} T={} h={}\n",
        fmt_f64(g.c()),
        fmt_f64(g.s_max()),
        fmt_f64(g.t_max()),
        fmt_f64(g.h())
    ));
    for (i, j, s, t, xv) in surf.x.iter_nodes() {
        let fold = surf.fold_mask.node_flagged(i, j)
            || (i > 0 && g.contains(i - 1, j) && surf.fold_mask.h_edge(i - 1, j))
            || (i + 1 < g.nx() && surf.fold_mask.h_edge(i, j))
            || (j + 1 < g.ny() && surf.fold_mask.v_edge(i, j))
            || (j > 0 && g.contains(i, j - 1) && surf.fold_mask.v_edge(i, j - 1));
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            fmt_f64(s),
            fmt_f64(t),
            fmt_f64(s + t),
            fmt_f64(s - t),
            fmt_f64(xv),
            fmt_f64(surf.y.get(i, j)),
            fmt_f64(surf.q.get(i, j)),
            fmt_f64(surf.w.get(i, j)),
            if fold { 1 } else { 0 }
        ));
    }
    manifest.write_file("surface.tsv", &out)?;
    manifest.write_file("report.kv", &kv.render())?;
    manifest.extend("reconstruct", &kv);
    Ok(())
}

fn validate(cfg: &RunConfig, manifest: &mut Manifest) -> Result<()> {
    let data = cfg.boundary_data()?;
    let report = validate_weak_compatibility(&data, cfg.corner_tol()?)?;
    let kv = validation_kv(&report);
    manifest.write_file("report.kv", &kv.render())?;
    manifest.extend("validation", &kv);
    if !report.pass {
        return Err(Error::ValidationFailed(format!(
            "corner gaps ({:e}, {:e}), n integrable: {}, f' integrable: {}",
            report.corner_gap_g, report.corner_gap_h, report.n_integrable,
            report.f_absolutely_continuous
        )));
    }
    Ok(())
}

/// Deterministic pseudo-random stream for probe points (xorshift64*).
struct Probes(u64);

impl Probes {
    fn new(seed: u64) -> Probes {
        Probes(seed.max(1))
    }
    fn next_unit(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        (x.wrapping_mul(0x2545F4914F6CDD1D) >> 11) as f64 / (1u64 << 53) as f64
    }
    fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }
}

fn oracle_check(_cfg: &RunConfig, manifest: &mut Manifest) -> Result<()> {
    let mut kv = KvReport::new();
    let mut failures: Vec<String> = Vec::new();
    fn check(kv: &mut KvReport, failures: &mut Vec<String>, name: &str, value: f64, tol: f64) {
        kv.push_f64(name, value);
        if !(value.abs() <= tol) {
            failures.push(format!("{name} = {value:e} exceeds {tol:e}"));
        }
    }

    // arcsine: hodograph PDE residual at random probes
    let a = exact::ArcsineSolution;
    let mut probes = Probes::new(0x9E3779B97F4A7C15);
    let mut sup = 0.0f64;
    for _ in 0..100 {
        let s = probes.in_range(0.05, 3.0);
        let t = probes.in_range(0.05, 3.0);
        let r = 2.0 * (s + t) * a.x_st(s, t) + a.x_s(s, t) + a.x_t(s, t);
        sup = sup.max(r.abs());
    }
    check(&mut kv, &mut failures, "arcsine.pde_residual", sup, 1e-12);
    // printed boundary values
    check(
        &mut kv,
        &mut failures,
        "arcsine.g_value_gap",
        a.x(1.7, 0.0) + std::f64::consts::FRAC_PI_2,
        0.0,
    );
    let (_, data) = exact::arcsine(1.0);
    let val = validate_weak_compatibility(&data, 1e-8)?;
    kv.push_bool("arcsine.n_integrable", val.n_integrable);
    kv.push_f64("arcsine.l1_n", val.l1_n.value);
    if !val.pass {
        failures.push("arcsine induced data failed weak compatibility".into());
    }
    // arcsine solves the Euler-Poisson-Darboux equation in (u, p)
    let mut up_probes = Vec::new();
    for _ in 0..100 {
        let u = probes.in_range(0.3, 2.0);
        let p = probes.in_range(-0.9, 0.9) * u;
        up_probes.push((u, p));
    }
    check(
        &mut kv,
        &mut failures,
        "arcsine.epd_residual",
        exact::epd_residual(&a, &up_probes),
        1e-12,
    );

    // product surface: Monge-Ampere residual and curvature value
    let prod = exact::ProductSolution::new(1.0);
    let mut sup = 0.0f64;
    for _ in 0..100 {
        let x = probes.in_range(-1.5, 1.5);
        let y = probes.in_range(-0.5, 2.0);
        sup = sup.max(prod.ma_residual(x, y).abs());
    }
    check(&mut kv, &mut failures, "product.ma_residual", sup, 1e-12);
    check(&mut kv, &mut failures, "product.k0_gap", prod.gauss_curvature(0.0) + 0.25, 1e-15);

    // polynomial: EPD residual and the printed values
    let poly = exact::PolynomialSolution;
    let mut up_probes = Vec::new();
    for _ in 0..100 {
        let u = probes.in_range(1.0, 2.0);
        let p = probes.in_range(-1.0, 1.0) * (2.0 - u);
        up_probes.push((u, p));
    }
    check(
        &mut kv,
        &mut failures,
        "polynomial.epd_residual",
        exact::epd_residual(&poly, &up_probes),
        1e-12,
    );
    // one ulp of slack: the coefficient sum rounds once against pi/2
    check(
        &mut kv,
        &mut failures,
        "polynomial.corner_value_gap",
        poly.x_up(1.0, 1.0) + std::f64::consts::FRAC_PI_2,
        5e-16,
    );
    check(
        &mut kv,
        &mut failures,
        "polynomial.fold_slope_gap",
        poly.xp_up(1.5, 0.0) - 145.0 * std::f64::consts::PI / 416.0,
        1e-15,
    );

    kv.push_bool("pass", failures.is_empty());
    manifest.write_file("report.kv", &kv.render())?;
    manifest.extend("oracle", &kv);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::ValidationFailed(failures.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("run.kv");
        fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn solve_cg_arcsine_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            "profile.kind = linear\nprofile.params = 1\nboundary.builtin = arcsine\ngrid.c = 1\ngrid.s_max = 2\ngrid.t_max = 2\ngrid.h = 0.03125\ndeterministic = true\n",
        );
        let out = dir.path().join("out");
        assert_eq!(run("solve-cg", &cfg, Some(&out)), EXIT_OK);
        let field = fs::read_to_string(out.join("field.tsv")).unwrap();
        assert!(field.starts_with("# s\tt\tx"));
        let report = fs::read_to_string(out.join("report.kv")).unwrap();
        assert!(report.contains("converged = true"));
        let manifest = fs::read_to_string(out.join("manifest.kv")).unwrap();
        assert!(manifest.contains("status = ok"));
        assert!(manifest.contains("file.field.tsv.sha256"));
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        // corner-gap corrupted table data: exit 2
        fs::write(dir.path().join("g.tsv"), "1.0 9.0\n3.0 9.0\n").unwrap();
        fs::write(dir.path().join("h.tsv"), "1.0 1.0\n3.0 1.0\n").unwrap();
        fs::write(dir.path().join("f.tsv"), "0.0 1.0\n1.0 -1.0\n").unwrap();
        fs::write(dir.path().join("n.tsv"), "0.1 0.0\n0.9 0.0\n").unwrap();
        let cfg = write_config(
            dir.path(),
            "profile.kind = linear\nprofile.params = 1\ngrid.c = 1\ngrid.s_max = 2\ngrid.t_max = 2\ngrid.h = 0.25\nboundary.g_table = g.tsv\nboundary.h_table = h.tsv\nboundary.f_table = f.tsv\nboundary.n_table = n.tsv\n",
        );
        let out = dir.path().join("o1");
        assert_eq!(run("solve-cg", &cfg, Some(&out)), EXIT_VALIDATION);
        let manifest = fs::read_to_string(out.join("manifest.kv")).unwrap();
        assert!(manifest.contains("status = failed"));

        // max_iter exhausted on nontrivial data: exit 3, history retained
        let cfg = write_config(
            dir.path(),
            "profile.kind = linear\nprofile.params = 1\nboundary.builtin = arcsine\ngrid.c = 1\ngrid.s_max = 2\ngrid.t_max = 2\ngrid.h = 0.25\nsolver.max_iter = 1\n",
        );
        let out = dir.path().join("o2");
        assert_eq!(run("solve-cg", &cfg, Some(&out)), EXIT_CONVERGENCE);

        // missing config file: exit 4 without a manifest
        assert_eq!(
            run("solve-cg", &dir.path().join("missing.kv"), None),
            EXIT_IO
        );

        // unknown command: validation
        let cfg = write_config(dir.path(), "grid.c = 1\n");
        assert_eq!(run("frobnicate", &cfg, None), EXIT_VALIDATION);
    }

    #[test]
    fn solve_goursat_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            "profile.kind = polynomial\nprofile.params = 1, 0.5\ngrid.s_max = 1\ngrid.t_max = 1\ngrid.h = 0.03125\ndeterministic = true\n",
        );
        let out = dir.path().join("out");
        assert_eq!(run("solve-goursat", &cfg, Some(&out)), EXIT_OK);
        for f in ["x_p.tsv", "residual.tsv", "forcing.tsv", "corrector.tsv", "base.tsv"] {
            assert!(out.join(f).exists(), "missing {f}");
        }
        let report = fs::read_to_string(out.join("report.kv")).unwrap();
        assert!(report.contains("certificate = "));
        // constant profile cannot run the semi-infinite path
        let cfg = write_config(
            dir.path(),
            "profile.kind = constant\nprofile.params = 2\ngrid.s_max = 1\ngrid.t_max = 1\ngrid.h = 0.25\n",
        );
        assert_eq!(
            run("solve-goursat", &cfg, Some(&dir.path().join("o3"))),
            EXIT_VALIDATION
        );
    }

    #[test]
    fn oracle_check_passes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "\n");
        let out = dir.path().join("out");
        assert_eq!(run("oracle-check", &cfg, Some(&out)), EXIT_OK);
        let report = fs::read_to_string(out.join("report.kv")).unwrap();
        assert!(report.contains("pass = true"));
    }

    #[test]
    fn validate_and_energy_and_reconstruct_and_stability() {
        let dir = tempfile::tempdir().unwrap();
        let base = "profile.kind = linear\nprofile.params = 1\nboundary.builtin = arcsine\ngrid.c = 1\ngrid.s_max = 2\ngrid.t_max = 2\ngrid.h = 0.0625\ndeterministic = true\n";
        let cfg = write_config(dir.path(), base);
        assert_eq!(run("validate", &cfg, Some(&dir.path().join("v"))), EXIT_OK);
        assert_eq!(run("energy", &cfg, Some(&dir.path().join("e"))), EXIT_OK);
        assert!(dir.path().join("e/energy.tsv").exists());
        assert!(dir.path().join("e/energy_fine.tsv").exists());
        assert_eq!(
            run("reconstruct", &cfg, Some(&dir.path().join("r"))),
            EXIT_OK
        );
        let surface = fs::read_to_string(dir.path().join("r/surface.tsv")).unwrap();
        assert!(surface.starts_with("# s\tt\tu\tp\tx\ty\tq\tw\tfold"));
        let cfg2 = write_config(
            dir.path(),
            &format!("{base}stability.pert = sine\nstability.eps = 0.05\n"),
        );
        assert_eq!(run("stability", &cfg2, Some(&dir.path().join("s"))), EXIT_OK);
        let rep = fs::read_to_string(dir.path().join("s/report.kv")).unwrap();
        assert!(rep.contains("measured_ratio = "));
    }

    #[test]
    fn deterministic_runs_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            "profile.kind = linear\nprofile.params = 1\nboundary.builtin = arcsine\ngrid.c = 1\ngrid.s_max = 2\ngrid.t_max = 2\ngrid.h = 0.0625\ndeterministic = true\n",
        );
        let out1 = dir.path().join("d1");
        let out2 = dir.path().join("d2");
        assert_eq!(run("solve-cg", &cfg, Some(&out1)), EXIT_OK);
        assert_eq!(run("solve-cg", &cfg, Some(&out2)), EXIT_OK);
        let a = fs::read(out1.join("field.tsv")).unwrap();
        let b = fs::read(out2.join("field.tsv")).unwrap();
        assert_eq!(a, b);
        let a = fs::read(out1.join("report.kv")).unwrap();
        let b = fs::read(out2.join("report.kv")).unwrap();
        assert_eq!(a, b);
    }
}
