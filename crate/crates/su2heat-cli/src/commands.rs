use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde_json::{json, Value};

use su2heat::functional_inequalities::{
    a_const, c_const, default_const_spec, first_gradient_bound_check, interior_grid, li_yau_check,
    li_yau_exponential_check, lp_bound_probe, reverse_poincare_check, TestFunction, VerifyReport,
};
use su2heat::heisenberg::dilation_limit_error;
use su2heat::sde_sampler::{
    chi_square, eigenfunction_mean, empirical_density, model_cell_probabilities, simulate_paths, uniform_edges,
    MCConfig,
};
use su2heat::sr_distance::cc_distance;
use su2heat::su2_kernel::{
    green_function, laplace_check, laplace_lhs, phi_ratio, pt_cutlocus, pt_integral, pt_spectral, pt_with,
    SU2_VOLUME,
};
use su2heat::{Error, Result};

use crate::config::RunConfig;
use crate::output::{fmt_f64, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Rep {
    Auto,
    Spectral,
    Integral,
    Cutlocus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Liyau,
    ReversePoincare,
    Gradient,
    Laplace,
    Heisenberg,
    All,
}

pub fn kernel(cfg: &RunConfig, t: f64, r: f64, z: f64, rep: Rep) -> Result<Report> {
    let k = &cfg.kernel;
    let e = match rep {
        Rep::Auto => pt_with(t, r, z, k)?,
        Rep::Spectral => pt_spectral(t, r, z, k.eps)?,
        Rep::Integral => pt_integral(t, r, z, &k.quad)?,
        Rep::Cutlocus if r == 0.0 => pt_cutlocus(t, z)?,
        Rep::Cutlocus => return Err(Error::Domain(format!("the cut-locus form needs r = 0, got {r}"))),
    };
    let mut rep = Report::new("kernel", cfg.to_json());
    rep.push(json!({
        "t": t, "r": r, "z": z,
        "value": e.value, "abs_err": e.abs_err, "representation": e.representation.name(),
    }));
    Ok(rep)
}

pub fn distance(cfg: &RunConfig, r: f64, z: f64) -> Result<Report> {
    let d = cc_distance(r, z)?;
    let mut rep = Report::new("distance", cfg.to_json());
    rep.push(json!({
        "r": r, "z": z, "d": d.d_squared.sqrt(), "d_squared": d.d_squared,
        "theta_star": d.theta_star, "residual": d.residual, "on_cut_locus": d.on_cut_locus,
    }));
    Ok(rep)
}

pub fn constants(cfg: &RunConfig, ts: &[f64]) -> Result<Report> {
    let spec = default_const_spec();
    let mut rep = Report::new("constants", cfg.to_json());
    for &t in ts {
        let a = a_const(t)?;
        let c = c_const(t, &spec)?;
        let phi = phi_ratio(t, cfg.phi_grid, cfg.phi_grid, &cfg.kernel)?.value;
        let asym = 4.0 * (-4.0 * t).exp();
        rep.push(json!({
            "t": t, "A": a, "C": c, "Phi": phi,
            "A_over_4exp": a / asym, "C_over_4exp": c / asym,
        }));
    }
    Ok(rep)
}

fn report_row(suite: &str, name: &str, param: f64, r: &VerifyReport) -> Value {
    json!({
        "suite": suite, "name": name, "param": param,
        "min_margin": r.min_margin,
        "argmin": format!("{} {} {}", fmt_f64(r.argmin.0), fmt_f64(r.argmin.1), fmt_f64(r.argmin.2)),
        "n_points": r.n_points, "n_violations": r.n_violations,
    })
}

fn test_functions() -> Vec<TestFunction> {
    vec![
        TestFunction::Constant(1.5),
        TestFunction::f1(),
        TestFunction::f2(),
        TestFunction::f1_shifted(0.8),
        TestFunction::EigenSpan { a: 1.0, w: Complex64::new(0.3, -0.7) },
        TestFunction::Kernel { s: 0.2, shift: 0.5 },
    ]
}

/// Verification suites. Each row carries `min_margin` (nonnegative when the
/// inequality holds, up to `VerifyReport::TOL`) and `n_violations`.
pub fn verify(cfg: &RunConfig, suite: Suite, alpha: Option<f64>, t: Option<f64>) -> Result<Report> {
    let mut rep = Report::new("verify", cfg.to_json());
    let suites: &[Suite] = match suite {
        Suite::All => &[Suite::Liyau, Suite::ReversePoincare, Suite::Gradient, Suite::Laplace, Suite::Heisenberg],
        _ => std::slice::from_ref(&suite),
    };
    for s in suites {
        match s {
            Suite::Liyau => {
                let pts = interior_grid(cfg.grid);
                let alphas = alpha.map_or(vec![2.5, 3.0, 4.0], |a| vec![a]);
                for &t in &t.map_or(vec![0.1, 1.0], |t| vec![t]) {
                    for &a in &alphas {
                        rep.push(report_row("liyau", "li_yau", a, &li_yau_check(t, a, &pts)?));
                        rep.push(report_row("liyau", "li_yau_exponential", a, &li_yau_exponential_check(t, a, &pts)?));
                    }
                }
            }
            Suite::ReversePoincare => {
                let pts = interior_grid(cfg.rp_grid);
                for &t in &t.map_or(vec![0.5, 1.0], |t| vec![t]) {
                    let ct = c_const(t, &default_const_spec())?;
                    for f in test_functions() {
                        rep.push(report_row("reverse-poincare", &f.name(), t, &reverse_poincare_check(&f, t, ct, &pts)?));
                    }
                }
            }
            Suite::Gradient => {
                let pts = interior_grid(cfg.grid);
                for &t in &t.map_or(vec![0.5, 1.0], |t| vec![t]) {
                    for f in test_functions() {
                        rep.push(report_row("gradient", &f.name(), t, &first_gradient_bound_check(&f, t, &pts)?));
                    }
                }
                for p in [2.0, 4.0] {
                    let cp = lp_bound_probe(p, f64::INFINITY)?.cp_lower_bound();
                    let expect = (1.0 + 0.5 * p).powf(1.0 / p);
                    let margin = 1e-12 - (cp - expect).abs();
                    rep.push(report_row("gradient", "cp_lower_bound", p, &VerifyReport::single(margin, (f64::INFINITY, 0.0, 0.0))));
                }
            }
            Suite::Laplace => {
                let spec = cfg.quad().with_abs_tol(1e-13).with_rel_tol(1e-10);
                for (l, r, z) in [(0.5, 1.0, 0.0), (1.0, 0.7, 1.1), (20.0, 0.7, 1.1)] {
                    let c = laplace_check(l, r, z, &spec)?;
                    rep.push(report_row("laplace", "laplace_identity", l, &VerifyReport::single(1e-5 - c.rel_diff(), (l, r, z))));
                }
                for (r, z) in [(0.3, 0.0), (0.9, 1.0), (FRAC_PI_2 - 0.1, 0.7), (0.0, PI), (1.2, -2.5)] {
                    let (lhs, _) = laplace_lhs(0.0, r, z, &cfg.kernel, &spec)?;
                    let g = SU2_VOLUME * green_function(r, z)?;
                    let m = 1e-4 - (lhs - g).abs() / g;
                    rep.push(report_row("laplace", "green_function", 0.0, &VerifyReport::single(m, (0.0, r, z))));
                }
            }
            Suite::Heisenberg => {
                let ts = [0.1, 0.05, 0.02];
                for (r, z) in [(1.0, 0.5), (0.5, 1.0), (0.0, 1.0)] {
                    let errs: Vec<f64> =
                        ts.iter().map(|&t| Ok(dilation_limit_error(t, r, z, &cfg.kernel)?.rel_error())).collect::<Result<_>>()?;
                    // margin: smallest decrease between consecutive times
                    let m = errs.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
                    let mut row = report_row("heisenberg", "dilation_limit", r, &VerifyReport::single(m, (ts[2], r, z)));
                    row["errors"] = json!(errs);
                    rep.push(row);
                }
            }
            Suite::All => unreachable!(),
        }
    }
    Ok(rep)
}

pub fn sample(cfg: &RunConfig, n: usize, step: f64, t: f64) -> Result<(Report, String)> {
    let mc = MCConfig::new(n, step, t, cfg.seed)?;
    let sim = simulate_paths(&mc)?;
    let pts = sim.radial();
    let (mean, se) = eigenfunction_mean(&sim);
    let (re, ze) = uniform_edges(cfg.hist_bins, cfg.hist_bins);
    let hist = empirical_density(&pts, &re, &ze)?;
    let probs = model_cell_probabilities(t, &re, &ze)?;
    let chi = chi_square(&hist, &probs)?;

    let mut csv = String::from("r,z\n");
    for (r, z) in &pts {
        csv.push_str(&format!("{},{}\n", fmt_f64(*r), fmt_f64(*z)));
    }
    let mut rep = Report::new("sample", cfg.to_json());
    rep.push(json!({
        "n_paths": n, "step": step, "t": t, "seed": cfg.seed,
        "mean_cos_r_cos_z": mean, "stderr": se, "exact": (-2.0 * t).exp(),
        "chi2": chi.statistic, "dof": chi.dof, "p_value": chi.p_value, "n_cells": chi.n_cells,
        "max_defect": sim.max_defect,
    }));
    rep.extra.insert(
        "histogram".into(),
        json!({ "r_edges": hist.r_edges, "z_edges": hist.z_edges, "counts": hist.counts, "model": probs }),
    );
    Ok((rep, csv))
}
