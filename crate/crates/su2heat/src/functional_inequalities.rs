//! Constants `A(t)`, `C(t)` and numerical verifiers for the gradient
//! bounds, the reverse Poincare inequality and the Li-Yau estimates.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_positive, Error, Result};
use crate::geometry::{gamma, gamma2, radial_coords, sublaplacian, CylCoord, Jet2};
use crate::quadrature::{gauss_legendre, integrate, QuadratureSpec};
use crate::sr_distance::cc_distance;
use crate::su2_kernel::{
    eigenvalue, haar_integrate_spectral, k_limit_pub, ln_pt, pt_diagonal, pt_spectral, pt_spectral_jet, truncation_plan,
    weight, SpectralProfile,
};

/// Kernel values below this are rounding-dominated in the spectral series;
/// integrands of the form `Gamma(p)/p` are dropped there.
pub const P_FLOOR: f64 = 1e-9;
/// Truncation target for kernel jets used by the verifiers.
const JET_EPS: f64 = 1e-15;

/// Smallest margin over a grid and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyReport {
    pub min_margin: f64,
    pub argmin: (f64, f64, f64),
    pub n_points: usize,
    pub n_violations: usize,
}

impl VerifyReport {
    pub const TOL: f64 = 1e-9;

    pub fn empty() -> Self {
        VerifyReport { min_margin: f64::INFINITY, argmin: (f64::NAN, f64::NAN, f64::NAN), n_points: 0, n_violations: 0 }
    }

    pub fn single(margin: f64, at: (f64, f64, f64)) -> Self {
        VerifyReport { min_margin: margin, argmin: at, n_points: 1, n_violations: usize::from(margin < -Self::TOL) }
    }

    pub fn merge(self, o: VerifyReport) -> VerifyReport {
        let (min_margin, argmin) =
            if o.min_margin < self.min_margin { (o.min_margin, o.argmin) } else { (self.min_margin, self.argmin) };
        VerifyReport {
            min_margin,
            argmin,
            n_points: self.n_points + o.n_points,
            n_violations: self.n_violations + o.n_violations,
        }
    }

    pub fn passed(&self) -> bool {
        self.n_violations == 0 && self.n_points > 0
    }
}

fn reduce(t: f64, pts: &[(f64, f64)], margin: impl Fn(f64, f64) -> Result<f64> + Sync) -> Result<VerifyReport> {
    let reps: Result<Vec<VerifyReport>> =
        pts.par_iter().map(|&(r, z)| Ok(VerifyReport::single(margin(r, z)?, (t, r, z)))).collect();
    Ok(reps?.into_iter().fold(VerifyReport::empty(), VerifyReport::merge))
}

/// Cell-centred `n x n` grid in `(0, pi/2) x (-pi, pi)`.
pub fn interior_grid(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .flat_map(|i| {
            (0..n).map(move |j| {
                (FRAC_PI_2 * (i as f64 + 0.5) / n as f64, -PI + TAU * (j as f64 + 0.5) / n as f64)
            })
        })
        .collect()
}

/// `A(t) = (1/2) sum lambda (2k+|n|+1) e^{-2 lambda t}`.
pub fn a_const(t: f64) -> Result<f64> {
    check_positive("t", t)?;
    if t < 0.01 {
        return Err(Error::TruncationCap(format!("A(t) needs t >= 0.01, got {t}")));
    }
    // The jet plan at 2t covers the extra factor lambda.
    let plan = truncation_plan(2.0 * t, 1e-18, true)?;
    let mut s = 0.0;
    for n in 0..=plan.n_max {
        let Some(kmax) = k_limit_pub(n, plan.lambda_max) else { break };
        let mult = if n == 0 { 1.0 } else { 2.0 };
        for k in 0..=kmax {
            let lam = eigenvalue(n, k);
            s += mult * lam * weight(n, k) * (-2.0 * lam * t).exp();
        }
    }
    Ok(0.5 * s)
}

/// Haar integral of `g(r, z, jet)` over the kernel jets at time `t`.
pub fn haar_integrate_jets<G>(t: f64, spec: &QuadratureSpec, g: G) -> Result<f64>
where
    G: Fn(f64, f64, &Jet2) -> f64,
{
    haar_integrate_spectral(t, 1e-13, true, spec, |r, z, p: &SpectralProfile| g(r, z, &p.jet(z)))
}

/// `Gamma(p)/p`, dropped where `p` is below [`P_FLOOR`].
fn fisher_density(j: &Jet2, r: f64) -> f64 {
    if j.f < P_FLOOR {
        return 0.0;
    }
    let tr = r.tan();
    (j.fr * j.fr + tr * tr * j.fz * j.fz) / j.f
}

/// `C(t) = (1/2) int Gamma(p_t)/p_t d mu`.
pub fn c_const(t: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_positive("t", t)?;
    if t < 0.05 {
        return Err(Error::Domain(format!("C(t) is evaluated for t >= 0.05, got {t}")));
    }
    Ok(0.5 * haar_integrate_jets(t, spec, |r, _, j| if r >= FRAC_PI_2 { 0.0 } else { fisher_density(j, r) })?)
}

pub fn default_const_spec() -> QuadratureSpec {
    QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-9, max_refinements: 4000 }
}

/// Test functions with a closed form for `P_t f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `a + Re(w cos r e^{iz})`, in the eigenspace of eigenvalue `-2` plus constants.
    EigenSpan { a: f64, w: Complex64 },
    /// `p_s(r, z - shift)`.
    Kernel { s: f64, shift: f64 },
}

impl TestFunction {
    /// `cos r cos z`
    pub fn f1() -> Self {
        TestFunction::EigenSpan { a: 0.0, w: Complex64::new(1.0, 0.0) }
    }

    /// `2 + cos r cos z`
    pub fn f2() -> Self {
        TestFunction::EigenSpan { a: 2.0, w: Complex64::new(1.0, 0.0) }
    }

    /// `cos r cos(z - shift)`
    pub fn f1_shifted(shift: f64) -> Self {
        TestFunction::EigenSpan { a: 0.0, w: Complex64::from_polar(1.0, -shift) }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant(c) => format!("constant({c})"),
            TestFunction::EigenSpan { a, w } => format!("eigen_span(a={a}, w={}{:+}i)", w.re, w.im),
            TestFunction::Kernel { s, shift } => format!("kernel(s={s}, shift={shift})"),
        }
    }

    pub fn value(&self, r: f64, z: f64) -> Result<f64> {
        Ok(match *self {
            TestFunction::Constant(c) => c,
            TestFunction::EigenSpan { a, w } => a + (w * Complex64::from_polar(r.cos(), z)).re,
            TestFunction::Kernel { s, shift } => pt_spectral(s, r, z - shift, JET_EPS)?.value,
        })
    }

    pub fn jet(&self, r: f64, z: f64) -> Result<Jet2> {
        self.heat_jet(0.0, r, z)
    }

    /// Jet of `P_t f` at `(r, z)`.
    pub fn heat_jet(&self, t: f64, r: f64, z: f64) -> Result<Jet2> {
        Ok(match *self {
            TestFunction::Constant(c) => Jet2::constant(c),
            TestFunction::EigenSpan { a, w } => {
                let e = (-2.0 * t).exp();
                let (sr, cr) = r.sin_cos();
                let ez = w * Complex64::from_polar(1.0, z);
                let iez = Complex64::new(0.0, 1.0) * ez;
                Jet2 {
                    f: a + e * cr * ez.re,
                    fr: -e * sr * ez.re,
                    fz: e * cr * iez.re,
                    frr: -e * cr * ez.re,
                    frz: -e * sr * iez.re,
                    fzz: -e * cr * ez.re,
                }
            }
            TestFunction::Kernel { s, shift } => pt_spectral_jet(t + s, r, z - shift, JET_EPS)?,
        })
    }

    /// `int f^2 d mu - (int f d mu)^2`.
    pub fn variance(&self) -> Result<f64> {
        Ok(match *self {
            TestFunction::Constant(_) => 0.0,
            TestFunction::EigenSpan { w, .. } => 0.25 * w.norm_sqr(),
            TestFunction::Kernel { s, .. } => pt_diagonal(2.0 * s)? - 1.0,
        })
    }

    /// `P_t(f^2) - (P_t f)^2` at `(r, z)`.
    pub fn local_variance(&self, t: f64, r: f64, z: f64) -> Result<f64> {
        match *self {
            TestFunction::Constant(_) => Ok(0.0),
            TestFunction::EigenSpan { w, .. } => {
                let n2 = w.norm_sqr();
                Ok(0.25 * n2 * (1.0 + (-8.0 * t).exp() * (2.0 * r).cos())
                    - 0.5 * (-4.0 * t).exp() * n2 * r.cos().powi(2))
            }
            TestFunction::Kernel { .. } => {
                let pf2 = heat_action(t, r, z, &HeatRule::default(), |rr, zz| Ok(self.value(rr, zz)?.powi(2)))?;
                Ok(pf2 - self.heat_jet(t, r, z)?.f.powi(2))
            }
        }
    }
}

/// Product rule for `int p_t(g^{-1} h) F(h) d mu(h)`: Gauss-Legendre in `r`,
/// trapezoid in the periodic angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatRule {
    pub n_r: usize,
    pub n_angle: usize,
}

impl Default for HeatRule {
    fn default() -> Self {
        HeatRule { n_r: 48, n_angle: 64 }
    }
}

/// `(P_t F)(g)` for `g = (r, 0, z)` and `F` independent of `theta`; the
/// kernel is the spectral series, so `t >= 0.01`.
pub fn heat_action<F>(t: f64, r: f64, z: f64, rule: &HeatRule, f: F) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    check_positive("t", t)?;
    let g_inv = CylCoord::new(r, 0.0, z)?.to_matrix().adjoint();
    let plan = truncation_plan(t, 1e-14, false)?;
    let (x, w) = gauss_legendre(rule.n_r);
    let na = rule.n_angle;
    let ang = |i: usize| -PI + TAU * i as f64 / na as f64;
    let rows: Result<Vec<f64>> = (0..rule.n_r)
        .into_par_iter()
        .map(|i| {
            let rho = FRAC_PI_2 * 0.5 * (x[i] + 1.0);
            let wr = FRAC_PI_2 * 0.5 * w[i] * (2.0 * rho).sin();
            let mut row = 0.0;
            for kz in 0..na {
                let zeta = ang(kz);
                let fv = f(rho, zeta)?;
                if fv == 0.0 {
                    continue;
                }
                let mut acc = 0.0;
                for kt in 0..na {
                    let h = CylCoord { r: rho, theta: ang(kt), z: zeta }.to_matrix();
                    let (rr, zz) = radial_coords(&g_inv.mul(&h));
                    acc += SpectralProfile::from_plan(t, rr.clamp(0.0, FRAC_PI_2), plan, false).value(zz);
                }
                row += fv * acc;
            }
            Ok(wr * row)
        })
        .collect();
    // d mu = sin 2r dr dtheta dz / 4 pi^2 and each angle step is 2 pi / na
    Ok(rows?.iter().sum::<f64>() / (na * na) as f64)
}

/// `Gamma(P_t f)(g) <= A(t) (int f^2 - (int f)^2)` over the points `g`.
pub fn first_gradient_bound_check(f: &TestFunction, t: f64, pts: &[(f64, f64)]) -> Result<VerifyReport> {
    let a = a_const(t)?;
    let var = f.variance()?;
    reduce(t, pts, |r, z| Ok(a * var - gamma(&f.heat_jet(t, r, z)?, r)?))
}

/// `Gamma(P_t f)(g) <= C(t) (P_t f^2 - (P_t f)^2)(g)` over the points `g`.
pub fn reverse_poincare_check(f: &TestFunction, t: f64, c_t: f64, pts: &[(f64, f64)]) -> Result<VerifyReport> {
    let mut rep = VerifyReport::empty();
    // heat_action is parallel inside; iterate points serially here
    for &(r, z) in pts {
        let lhs = gamma(&f.heat_jet(t, r, z)?, r)?;
        let rhs = c_t * f.local_variance(t, r, z)?;
        rep = rep.merge(VerifyReport::single(rhs - lhs, (t, r, z)));
    }
    Ok(rep)
}

/// Largest `Gamma(P_t f) / (C(t) (P_t f^2 - (P_t f)^2))` over the span of
/// `1, cos r cos z, cos r sin z` and the given points.
pub fn reverse_poincare_sharpness(t: f64, c_t: f64, pts: &[(f64, f64)]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for &a in &[0.0, 1.0, 3.0] {
        for k in 0..8 {
            let w = Complex64::from_polar(1.0, TAU * k as f64 / 8.0);
            let f = TestFunction::EigenSpan { a, w };
            for &(r, z) in pts {
                let den = c_t * f.local_variance(t, r, z)?;
                if den > 0.0 {
                    best = best.max(gamma(&f.heat_jet(t, r, z)?, r)? / den);
                }
            }
        }
    }
    Ok(best)
}

/// Quantities of the Li-Yau inequality for `u = P_t f` at one point.
fn log_terms(j: &Jet2, r: f64) -> Result<(f64, f64, f64)> {
    let l = j.ln();
    Ok((gamma(&l, r)?, l.fz, sublaplacian(j, r)? / j.f))
}

/// Smoothing time of the kernel test function in the Li-Yau checks.
pub const LI_YAU_S: f64 = 1e-3;

/// `Gamma(ln u) + (t/alpha)(Z ln u)^2 <= ((3a-1)/(a-1) - 2t/a) Lu/u + t/a - (3a-1)/(a-1) + ((3a-1)^2/(a-2))/t`
/// for `u = p_{t+s}`.
pub fn li_yau_check(t: f64, alpha: f64, pts: &[(f64, f64)]) -> Result<VerifyReport> {
    check_positive("t", t)?;
    if !(alpha > 2.0) {
        return Err(Error::Domain(format!("alpha must exceed 2, got {alpha}")));
    }
    let b = (3.0 * alpha - 1.0) / (alpha - 1.0);
    let c = (3.0 * alpha - 1.0).powi(2) / (alpha - 2.0);
    reduce(t, pts, |r, z| {
        let j = pt_spectral_jet(t + LI_YAU_S, r, z, JET_EPS)?;
        let (g, zl, lu) = log_terms(&j, r)?;
        let lhs = g + t / alpha * zl * zl;
        let rhs = (b - 2.0 * t / alpha) * lu + t / alpha - b + c / t;
        Ok(rhs - lhs)
    })
}

/// Exponential-decay form of the Li-Yau inequality.
pub fn li_yau_exponential_check(t: f64, alpha: f64, pts: &[(f64, f64)]) -> Result<VerifyReport> {
    check_positive("t", t)?;
    if !(alpha > 2.0) {
        return Err(Error::Domain(format!("alpha must exceed 2, got {alpha}")));
    }
    let e = (-8.0 * t / (3.0 * alpha)).exp();
    let m = -1.0 + 1.0 / (3.0 * alpha);
    let k0 = 6.0 * m * m * (alpha / (alpha - 2.0)) * e * e / (1.0 - e);
    let k1 = -3.0 * m * (alpha / (alpha - 1.0)) * e;
    reduce(t, pts, |r, z| {
        let j = pt_spectral_jet(t + LI_YAU_S, r, z, JET_EPS)?;
        let (g, zl, lu) = log_terms(&j, r)?;
        let lhs = g + 1.5 * (1.0 - e) * zl * zl;
        Ok(k0 + k1 * lu - lhs)
    })
}

/// `Gamma_2(ln p_t)` over the points; reports the minimum as margin.
pub fn gamma2_log_kernel_check(t: f64, pts: &[(f64, f64)]) -> Result<VerifyReport> {
    reduce(t, pts, |r, z| gamma2(&pt_spectral_jet(t, r, z, JET_EPS)?.ln(), r))
}

/// Ratio `p_{t1}(g1) / p_{t2}(g2)` and the coordinates of the Harnack bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackProbe {
    pub ratio: f64,
    pub ln_ratio: f64,
    pub ln_time_ratio: f64,
    /// `delta^2 / (t2 - t1)` with `delta = |d(g1) - d(g2)|`, a lower bound
    /// for the distance between the points.
    pub dist_term: f64,
}

pub fn harnack_ratio(t1: f64, t2: f64, p1: (f64, f64), p2: (f64, f64)) -> Result<HarnackProbe> {
    check_positive("t1", t1)?;
    if !(t1 < t2 && t2 < 1.0) {
        return Err(Error::Domain(format!("need 0 < t1 < t2 < 1, got {t1}, {t2}")));
    }
    let l1 = ln_pt(t1, p1.0, p1.1)?;
    let l2 = ln_pt(t2, p2.0, p2.1)?;
    let d1 = cc_distance(p1.0, p1.1)?.d_squared.sqrt();
    let d2 = cc_distance(p2.0, p2.1)?.d_squared.sqrt();
    let delta = (d1 - d2).abs();
    Ok(HarnackProbe {
        ratio: (l1 - l2).exp(),
        ln_ratio: l1 - l2,
        ln_time_ratio: (t2 / t1).ln(),
        dist_term: delta * delta / (t2 - t1),
    })
}

/// Smallest `(A1, A2)` on the ray through the least-squares direction that
/// dominates every probe: `ln ratio <= A1 ln(t2/t1) + A2 dist_term`.
pub fn fit_harnack(samples: &[HarnackProbe]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Domain("no Harnack samples".into()));
    }
    let (mut sxx, mut sxy, mut syy, mut sxb, mut syb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let (x, y, b) = (s.ln_time_ratio, s.dist_term, s.ln_ratio);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxb += x * b;
        syb += y * b;
    }
    let det = sxx * syy - sxy * sxy;
    let (mut a1, mut a2) = if det.abs() > 1e-12 * sxx * syy {
        ((sxb * syy - syb * sxy) / det, (syb * sxx - sxb * sxy) / det)
    } else {
        (sxb / sxx, 0.0)
    };
    a1 = a1.max(1e-3);
    a2 = a2.max(1e-3);
    let scale = samples
        .iter()
        .map(|s| s.ln_ratio / (a1 * s.ln_time_ratio + a2 * s.dist_term))
        .fold(0.0f64, f64::max);
    Ok((a1 * scale.max(1.0), a2 * scale.max(1.0)))
}

/// `sqrt(Gamma(ln p_t)) / (d/t + 1/sqrt(t))`.
///
/// For `t < 0.35` the log-derivatives come from finite differences of
/// `ln p_t`, which stays accurate where `p_t` underflows the spectral
/// rounding level.
pub fn grad_log_kernel_ratio(t: f64, r: f64, z: f64) -> Result<f64> {
    check_positive("t", t)?;
    if !(r > 0.0 && r < FRAC_PI_2) {
        return Err(Error::Domain(format!("interior point needed, got r = {r}")));
    }
    let g = if t >= crate::sphere_kernel::T_CROSS {
        gamma(&pt_spectral_jet(t, r, z, JET_EPS)?.ln(), r)?
    } else {
        let h = 1e-4 * r.min(FRAC_PI_2 - r).min(1.0);
        let l = |rr: f64, zz: f64| ln_pt(t, rr, zz);
        let lr = (l(r - 2.0 * h, z)? - 8.0 * l(r - h, z)? + 8.0 * l(r + h, z)? - l(r + 2.0 * h, z)?) / (12.0 * h);
        let lz = (l(r, z - 2.0 * h)? - 8.0 * l(r, z - h)? + 8.0 * l(r, z + h)? - l(r, z + 2.0 * h)?) / (12.0 * h);
        let tr = r.tan();
        lr * lr + tr * tr * lz * lz
    };
    let d = cc_distance(r, z)?.d_squared.sqrt();
    Ok(g.sqrt() / (d / t + 1.0 / t.sqrt()))
}

/// `int sin^p r d mu = 2/(p+2)`, by quadrature.
pub fn sin_moment(p: f64) -> Result<f64> {
    let spec = QuadratureSpec { abs_tol: 1e-15, rel_tol: 1e-13, max_refinements: 4000 };
    Ok(integrate(|r: f64| r.sin().powf(p) * (2.0 * r).sin(), 0.0, FRAC_PI_2, &spec)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpProbe {
    /// `sqrt(Gamma(P_t f_1))` at `r = pi/2`: `e^{-2t}`.
    pub lhs: f64,
    /// `e^{-2t} (P_t sin^p r)(0)^{1/p}`
    pub rhs_over_cp: f64,
}

impl LpProbe {
    /// Lower bound for `C_p` implied by the probe.
    pub fn cp_lower_bound(&self) -> f64 {
        self.lhs / self.rhs_over_cp
    }
}

/// Probe of the `L^p` gradient bound on `f_1 = cos r cos z`. As `t` grows
/// `P_t sin^p r` flattens to `int sin^p r d mu = 2/(p+2)`, which gives
/// `C_p >= (1 + p/2)^{1/p}`.
pub fn lp_bound_probe(p: f64, t: f64) -> Result<LpProbe> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    // the common factor e^{-2t} is dropped in the limit t = inf
    let e = if t == f64::INFINITY { 1.0 } else { (-2.0 * t).exp() };
    let m = if t == f64::INFINITY {
        sin_moment(p)?
    } else {
        check_positive("t", t)?;
        let spec = QuadratureSpec { abs_tol: 1e-13, rel_tol: 1e-11, max_refinements: 4000 };
        haar_integrate_spectral(t, 1e-14, false, &spec, |r, z, prof| prof.value(z) * r.sin().powf(p))?
    };
    Ok(LpProbe { lhs: e, rhs_over_cp: e * m.powf(1.0 / p) })
}

/// `int (sin 2r)^q Gamma(ln p_t)^{q/2} p_t d mu`.
pub fn lemma_limit_moment(q: f64, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::Domain(format!("q must exceed 1, got {q}")));
    }
    if !(0.02..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t must lie in [0.02, 1], got {t}")));
    }
    haar_integrate_jets(t, spec, |r, _, j| {
        if j.f < P_FLOOR || r >= FRAC_PI_2 {
            return 0.0;
        }
        let g = fisher_density(j, r) / j.f;
        (2.0 * r).sin().powf(q) * g.powf(0.5 * q) * j.f
    })
}
