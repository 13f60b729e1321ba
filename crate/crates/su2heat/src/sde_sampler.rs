//! Monte Carlo simulation of the diffusion generated by `L = X^2 + Y^2`.
//!
//! Paths follow the group Euler scheme
//! `X_{k+1} = X_k exp(sqrt(2h) (xi_1 X + xi_2 Y))` with independent
//! standard normals. Each path draws from its own ChaCha stream, so results
//! do not depend on thread scheduling.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{check_positive, Error, Result};
use crate::geometry::{exp_horizontal, radial_coords, GroupElement};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::su2_kernel::SpectralProfile;

/// Steps between re-projections onto SU(2).
pub const REPROJECT_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCConfig {
    pub n_paths: usize,
    pub step: f64,
    pub t_final: f64,
    pub seed: u64,
}

impl MCConfig {
    pub fn new(n_paths: usize, step: f64, t_final: f64, seed: u64) -> Result<Self> {
        let c = MCConfig { n_paths, step, t_final, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("step", self.step)?;
        check_positive("t_final", self.t_final)?;
        if self.n_paths < 100 {
            return Err(Error::Domain(format!("n_paths must be at least 100, got {}", self.n_paths)));
        }
        let n = self.t_final / self.step;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
            return Err(Error::Domain(format!(
                "t_final / step must be a positive integer, got {} / {}",
                self.t_final, self.step
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.step).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub samples: Vec<GroupElement>,
    /// Largest unitarity defect seen just before a re-projection.
    pub max_defect: f64,
}

impl Simulation {
    /// `(r, z)` of each sample.
    pub fn radial(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(radial_coords).collect()
    }
}

fn simulate_one(cfg: &MCConfig, path: u64) -> (GroupElement, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(path);
    let s = (2.0 * cfg.step).sqrt();
    let mut x = GroupElement::identity();
    let mut defect: f64 = 0.0;
    let n = cfg.n_steps();
    for k in 1..=n {
        let u: f64 = StandardNormal.sample(&mut rng);
        let v: f64 = StandardNormal.sample(&mut rng);
        x = x.mul(&exp_horizontal(s * u, s * v));
        if k % REPROJECT_EVERY == 0 || k == n {
            defect = defect.max(x.unitarity_defect());
            x = x.reproject();
        }
    }
    (x, defect)
}

/// Endpoints of `n_paths` independent paths at `t_final`.
pub fn simulate_paths(cfg: &MCConfig) -> Result<Simulation> {
    cfg.validate()?;
    let out: Vec<(GroupElement, f64)> = (0..cfg.n_paths as u64).into_par_iter().map(|p| simulate_one(cfg, p)).collect();
    let max_defect = out.iter().map(|o| o.1).fold(0.0, f64::max);
    Ok(Simulation { samples: out.into_iter().map(|o| o.0).collect(), max_defect })
}

/// Sample mean and standard error.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Mean and standard error of `cos r cos z = Re a11`.
pub fn eigenfunction_mean(sim: &Simulation) -> (f64, f64) {
    let v: Vec<f64> = sim.samples.iter().map(|g| g.a[0][0].re).collect();
    mean_stderr(&v)
}

/// Exact mean of `Re a11` under the Euler scheme: `E[cos rho]^N` with
/// `rho = sqrt(2h) R`, `R` Rayleigh, and
/// `E cos rho = sum_k (-4h)^k k! / (2k)!`.
pub fn scheme_eigen_mean(step: f64, n_steps: usize) -> f64 {
    let a = 4.0 * step;
    let mut term = 1.0;
    let mut s = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -a * kf / ((2.0 * kf - 1.0) * (2.0 * kf));
        s += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    s.powi(n_steps as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    pub r_edges: Vec<f64>,
    pub z_edges: Vec<f64>,
    /// Row-major, `counts[i * nz + j]` for r-cell `i` and z-cell `j`.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram2D {
    pub fn nr(&self) -> usize {
        self.r_edges.len() - 1
    }

    pub fn nz(&self) -> usize {
        self.z_edges.len() - 1
    }
}

/// Uniform edges over the chart.
pub fn uniform_edges(nr: usize, nz: usize) -> (Vec<f64>, Vec<f64>) {
    (
        (0..=nr).map(|i| FRAC_PI_2 * i as f64 / nr as f64).collect(),
        (0..=nz).map(|j| -PI + TAU * j as f64 / nz as f64).collect(),
    )
}

fn locate(edges: &[f64], x: f64) -> usize {
    let i = edges.partition_point(|e| *e <= x);
    i.clamp(1, edges.len() - 1) - 1
}

pub fn empirical_density(points: &[(f64, f64)], r_edges: &[f64], z_edges: &[f64]) -> Result<Histogram2D> {
    for e in [r_edges, z_edges] {
        if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("histogram edges must be strictly increasing".into()));
        }
    }
    let nz = z_edges.len() - 1;
    let mut counts = vec![0u64; (r_edges.len() - 1) * nz];
    for &(r, z) in points {
        counts[locate(r_edges, r) * nz + locate(z_edges, z)] += 1;
    }
    Ok(Histogram2D { r_edges: r_edges.to_vec(), z_edges: z_edges.to_vec(), counts, total: points.len() as u64 })
}

/// Cell probabilities of the law of `(r, z)` at time `t`, with density
/// `p_t(r, z) sin(2r) / (2 pi)`.
pub fn model_cell_probabilities(t: f64, r_edges: &[f64], z_edges: &[f64]) -> Result<Vec<f64>> {
    let spec = QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-10, max_refinements: 4000 };
    let nz = z_edges.len() - 1;
    let mut out = vec![0.0; (r_edges.len() - 1) * nz];
    for (i, w) in r_edges.windows(2).enumerate() {
        for j in 0..nz {
            let (z0, z1) = (z_edges[j], z_edges[j + 1]);
            let failure = std::cell::RefCell::new(None);
            let v = integrate(
                |r: f64| match SpectralProfile::new(t, r, 1e-13, false) {
                    Ok(p) => match integrate(|z| p.value(z), z0, z1, &spec) {
                        Ok(q) => q.value * (2.0 * r).sin() / TAU,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    },
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                },
                w[0],
                w[1],
                &spec,
            )?;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            out[i * nz + j] = v.value;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells after merging those with expected count below 5.
    pub n_cells: usize,
}

/// Pearson test of the histogram against cell probabilities. Cells are
/// taken in row-major order and pooled until the expected count reaches 5.
pub fn chi_square(hist: &Histogram2D, probs: &[f64]) -> Result<ChiSquareResult> {
    if probs.len() != hist.counts.len() {
        return Err(Error::Domain("probability and count grids differ in size".into()));
    }
    let n = hist.total as f64;
    let psum: f64 = probs.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    for (p, c) in probs.iter().zip(&hist.counts) {
        e += n * p / psum;
        o += *c as f64;
        if e >= 5.0 {
            cells.push((o, e));
            e = 0.0;
            o = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::Domain("fewer than two cells after merging".into()));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ChiSquareResult { statistic, dof, p_value: dist.sf(statistic), n_cells: cells.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::from_matrix_lossy;

    #[test]
    fn config_validation() {
        assert!(MCConfig::new(1000, 1e-3, 0.5, 1).is_ok());
        assert!(MCConfig::new(10, 1e-3, 0.5, 1).is_err());
        assert!(MCConfig::new(1000, 0.3, 0.5, 1).is_err());
        assert_eq!(MCConfig::new(1000, 1e-3, 0.5, 1).unwrap().n_steps(), 500);
    }

    #[test]
    fn short_time_concentration() {
        let sim = simulate_paths(&MCConfig::new(200, 1e-8, 1e-8, 3).unwrap()).unwrap();
        for g in &sim.samples {
            let c = from_matrix_lossy(g);
            assert!(c.r < 1e-3 && c.z.abs() < 1e-3);
        }
    }

    #[test]
    fn reproducible() {
        let cfg = MCConfig::new(300, 0.01, 0.2, 42).unwrap();
        let a = simulate_paths(&cfg).unwrap();
        let b = simulate_paths(&cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(a.max_defect < 1e-8);
        for g in &a.samples {
            assert!(g.unitarity_defect() < 1e-12);
            assert!((g.det().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scheme_mean_is_first_order() {
        let t = 0.5;
        let exact = (-2.0 * t as f64).exp();
        let e1 = scheme_eigen_mean(0.05, 10) - exact;
        let e2 = scheme_eigen_mean(0.025, 20) - exact;
        let ratio = e1 / e2;
        assert!((1.9..=2.1).contains(&ratio), "{ratio}");
        assert!((scheme_eigen_mean(1e-3, 500) - exact).abs() < 1e-3);
    }

    #[test]
    fn eigen_mean_matches_scheme() {
        let cfg = MCConfig::new(20_000, 0.01, 0.5, 7).unwrap();
        let sim = simulate_paths(&cfg).unwrap();
        let (m, se) = eigenfunction_mean(&sim);
        assert!((m - scheme_eigen_mean(0.01, 50)).abs() <= 4.0 * se, "{m} {se}");
    }

    #[test]
    fn histogram_counts() {
        let (re, ze) = uniform_edges(4, 6);
        let pts = [(0.1, 0.0), (1.5, 3.1), (FRAC_PI_2, PI), (0.0, -PI)];
        let h = empirical_density(&pts, &re, &ze).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 4);
        assert_eq!(h.counts[3 * 6 + 5], 2);
        assert!(empirical_density(&pts, &[0.0, 0.0, 1.0], &ze).is_err());
    }

    #[test]
    fn model_probabilities_sum_to_one() {
        let (re, ze) = uniform_edges(6, 6);
        let p = model_cell_probabilities(0.5, &re, &ze).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn chi_square_merges_small_cells() {
        let (re, ze) = uniform_edges(2, 2);
        let h = Histogram2D { r_edges: re, z_edges: ze, counts: vec![50, 50, 1, 49], total: 150 };
        let c = chi_square(&h, &[1.0 / 3.0, 1.0 / 3.0, 0.01, 1.0 / 3.0 - 0.01]).unwrap();
        assert_eq!(c.n_cells, 3);
        assert!(c.p_value > 0.5);
    }
}
