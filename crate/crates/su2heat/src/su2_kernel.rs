//! The subelliptic heat kernel `p_t(r, z)` on SU(2).
//!
//! Three evaluation paths are provided: the spectral double series (with
//! derivatives), a contour integral against the sphere kernel `q_t`, and the
//! closed form on the cut locus `r = 0`. The dispatcher [`pt`] selects
//! between them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_finite, check_positive, Error, Result};
use crate::geometry::{reduce_angle, Jet2};
use crate::quadrature::{integrate, integrate_partitioned, integrate_to_infinity, QuadratureSpec};
use crate::special_functions::{JacobiTable, MAX_DEGREE, MAX_ORDER};
use crate::sphere_kernel::theta_parts;
use crate::sr_distance::{cc_distance_with, R_MIN};

/// Default absolute truncation target for the spectral series.
pub const DEFAULT_EPS: f64 = 1e-13;
/// Smallest time accepted by the spectral series.
pub const T_MIN_SPECTRAL: f64 = 0.01;
/// Above this time the cut-locus sum loses digits to cancellation and the
/// spectral series is used on the axis instead.
pub const T_MAX_CUTLOCUS: f64 = 10.0;
const DELTA: f64 = 0.1;
/// Riemannian volume of SU(2) = S^3. The closed forms for the Green
/// function and the Laplace transform are densities for this volume, while
/// `p_t` is a density for the normalized Haar measure.
pub const SU2_VOLUME: f64 = 2.0 * PI * PI;

/// Regime thresholds and tolerances for kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub eps: f64,
    pub t_cross: f64,
    pub r_min: f64,
    pub t_min_spectral: f64,
    pub quad: QuadratureSpec,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            eps: DEFAULT_EPS,
            t_cross: crate::sphere_kernel::T_CROSS,
            r_min: R_MIN,
            t_min_spectral: T_MIN_SPECTRAL,
            quad: QuadratureSpec { abs_tol: 1e-15, rel_tol: 1e-13, max_refinements: 4000 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Spectral,
    Integral,
    CutlocusClosed,
}

impl Representation {
    pub fn name(&self) -> &'static str {
        match self {
            Representation::Spectral => "spectral",
            Representation::Integral => "integral",
            Representation::CutlocusClosed => "cutlocus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub value: f64,
    pub abs_err: f64,
    pub representation: Representation,
}

/// Eigenvalue `4k(k+|n|+1) + 2|n|` of `-L`.
#[inline]
pub fn eigenvalue(n: usize, k: usize) -> f64 {
    (4 * k * (k + n + 1) + 2 * n) as f64
}

/// Multiplicity weight `2k + |n| + 1`.
#[inline]
pub fn weight(n: usize, k: usize) -> f64 {
    (2 * k + n + 1) as f64
}

/// Largest `k` with `eigenvalue(n, k) <= lambda_max`, if any.
fn k_limit(n: usize, lambda_max: f64) -> Option<usize> {
    let rest = lambda_max - 2.0 * n as f64;
    if rest < 0.0 {
        return None;
    }
    let b = (n + 1) as f64;
    let mut k = ((-b + (b * b + rest).sqrt()) / 2.0).floor().max(0.0) as usize;
    while eigenvalue(n, k + 1) <= lambda_max {
        k += 1;
    }
    while k > 0 && eigenvalue(n, k) > lambda_max {
        k -= 1;
    }
    Some(k)
}

/// Public form of the per-order degree cutoff.
pub fn k_limit_pub(n: usize, lambda_max: f64) -> Option<usize> {
    k_limit(n, lambda_max)
}

/// Index set `{(n, k) : lambda_{n,k} <= lambda_max}` and its certified tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPlan {
    pub n_max: usize,
    pub k_max: usize,
    pub lambda_max: f64,
    pub eps: f64,
    pub achieved_bound: f64,
}

/// Upper bound for `ln p_s(0)`; `p_s(0)` decreases in `s`, and the closed
/// form is only used where it is free of cancellation.
fn ln_diag_bound(s: f64) -> Result<f64> {
    ln_pt_cutlocus(s.min(2.0), 0.0)
}

/// Choose the cutoff so the dropped terms are below `eps`.
///
/// Every `e^{inz} cos^{|n|} r P_k^{0,|n|}(cos 2r)` is a matrix coefficient of
/// a unitary representation, hence bounded by 1, and its first and second
/// derivatives are bounded by `(1 + lambda)^2`. With `D(s) = p_s(0)` this
/// gives `tail <= e^{-(1-delta) Lambda t} D(delta t)` for values and
/// `(2/(delta t))^2 e^{-(1-2 delta) Lambda t} D(delta t)` for jets.
pub fn truncation_plan(t: f64, eps: f64, jets: bool) -> Result<TruncationPlan> {
    check_positive("t", t)?;
    check_positive("eps", eps)?;
    let d = ln_diag_bound(DELTA * t)?;
    let (ln_j, rate) = if jets {
        ((2.0 / (DELTA * t)).max(1.0).ln() * 2.0, 1.0 - 2.0 * DELTA)
    } else {
        (0.0, 1.0 - DELTA)
    };
    let lambda_max = ((d + ln_j - eps.ln()) / (rate * t)).max(0.0);
    let n_max = (lambda_max / 2.0).floor() as usize;
    let k_max = k_limit(0, lambda_max).unwrap_or(0);
    if n_max > MAX_ORDER || k_max > MAX_DEGREE {
        return Err(Error::TruncationCap(format!(
            "spectral series at t={t} needs n up to {n_max} and k up to {k_max}"
        )));
    }
    let achieved_bound = (ln_j - rate * lambda_max * t + d).exp();
    Ok(TruncationPlan { n_max, k_max, lambda_max, eps, achieved_bound })
}

/// Radial Fourier coefficients of the spectral series at fixed `(t, r)`:
/// `p_t(r, z) = c_0(r) + 2 sum_{n>=1} c_n(r) cos(n z)`.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    pub t: f64,
    pub r: f64,
    pub plan: TruncationPlan,
    c: Vec<f64>,
    cr: Vec<f64>,
    crr: Vec<f64>,
    abs_sum: f64,
}

impl SpectralProfile {
    pub fn new(t: f64, r: f64, eps: f64, jets: bool) -> Result<Self> {
        Self::with_t_min(t, r, eps, jets, T_MIN_SPECTRAL)
    }

    pub fn with_t_min(t: f64, r: f64, eps: f64, jets: bool, t_min: f64) -> Result<Self> {
        check_positive("t", t)?;
        check_finite("r", r)?;
        if !(0.0..=FRAC_PI_2).contains(&r) {
            return Err(Error::Domain(format!("r must lie in [0, pi/2], got {r}")));
        }
        if t < t_min {
            return Err(Error::TruncationCap(format!("t = {t} is below the spectral range (t >= {t_min})")));
        }
        let plan = truncation_plan(t, eps, jets)?;
        Ok(Self::from_plan(t, r, plan, jets))
    }

    /// Profile for a precomputed plan; `r` must lie in `[0, pi/2]`.
    pub fn from_plan(t: f64, r: f64, plan: TruncationPlan, jets: bool) -> Self {
        let (sr, cr_) = r.sin_cos();
        let x = (2.0 * r).cos();
        let s2 = (2.0 * r).sin();
        let mut c = Vec::with_capacity(plan.n_max + 1);
        let mut cr = Vec::new();
        let mut crr = Vec::new();
        let mut table = JacobiTable::default();
        let mut abs_sum = 0.0;
        // cos^n r, cos^{n-1} r, cos^{n-2} r
        let (mut pw, mut pw1, mut pw2) = (1.0, 0.0, 0.0);
        for n in 0..=plan.n_max {
            if n > 0 {
                pw2 = pw1;
                pw1 = pw;
                pw *= cr_;
            }
            let Some(kmax) = k_limit(n, plan.lambda_max) else { break };
            table.fill(kmax, n, x);
            let (mut s0, mut s1, mut s2_) = (0.0, 0.0, 0.0);
            for k in 0..=kmax {
                let we = weight(n, k) * (-eigenvalue(n, k) * t).exp();
                abs_sum += if n == 0 { we } else { 2.0 * we };
                s0 += we * table.p[k];
                if jets {
                    let dp = table.dp[k];
                    s1 += we * (-2.0 * s2 * dp);
                    s2_ += we * (4.0 * s2 * s2 * table.d2p[k] - 4.0 * x * dp);
                }
            }
            c.push(pw * s0);
            if jets {
                let nf = n as f64;
                let u1 = if n >= 1 { -nf * sr * pw1 } else { 0.0 };
                let u2 = if n >= 2 { nf * (nf - 1.0) * sr * sr * pw2 } else { 0.0 } - nf * pw;
                cr.push(u1 * s0 + pw * s1);
                crr.push(u2 * s0 + 2.0 * u1 * s1 + pw * s2_);
            }
        }
        SpectralProfile { t, r, plan, c, cr, crr, abs_sum }
    }

    /// Absolute error bound: certified tail plus a rounding allowance.
    pub fn abs_err(&self) -> f64 {
        self.plan.achieved_bound + 4.0 * f64::EPSILON * self.abs_sum
    }

    pub fn value(&self, z: f64) -> f64 {
        let rot = Complex64::from_polar(1.0, z);
        let mut e = rot;
        let mut s = self.c[0];
        for (n, cn) in self.c.iter().enumerate().skip(1) {
            s += 2.0 * cn * e.re;
            e *= rot;
            if n % 64 == 0 {
                e = Complex64::from_polar(1.0, (n + 1) as f64 * z);
            }
        }
        s
    }

    /// Full jet; the profile must have been built with `jets = true`.
    pub fn jet(&self, z: f64) -> Jet2 {
        assert!(!self.cr.is_empty(), "profile built without derivatives");
        let rot = Complex64::from_polar(1.0, z);
        let mut e = rot;
        let mut j = Jet2 { f: self.c[0], fr: self.cr[0], frr: self.crr[0], ..Default::default() };
        for n in 1..self.c.len() {
            let nf = n as f64;
            let (cs, sn) = (e.re, e.im);
            j.f += 2.0 * self.c[n] * cs;
            j.fr += 2.0 * self.cr[n] * cs;
            j.frr += 2.0 * self.crr[n] * cs;
            j.fz -= 2.0 * nf * self.c[n] * sn;
            j.frz -= 2.0 * nf * self.cr[n] * sn;
            j.fzz -= 2.0 * nf * nf * self.c[n] * cs;
            e *= rot;
            if n % 64 == 0 {
                e = Complex64::from_polar(1.0, (n + 1) as f64 * z);
            }
        }
        j
    }
}

/// Spectral series `sum_{n,k} (2k+|n|+1) e^{-lambda t} e^{inz} cos^{|n|} r P_k^{0,|n|}(cos 2r)`.
pub fn pt_spectral(t: f64, r: f64, z: f64, eps: f64) -> Result<KernelEval> {
    check_finite("z", z)?;
    let prof = SpectralProfile::new(t, r, eps, false)?;
    Ok(KernelEval { value: prof.value(reduce_angle(z)), abs_err: prof.abs_err(), representation: Representation::Spectral })
}

/// Value and `(r, z)` derivatives from the term-wise differentiated series.
pub fn pt_spectral_jet(t: f64, r: f64, z: f64, eps: f64) -> Result<Jet2> {
    check_finite("z", z)?;
    let prof = SpectralProfile::new(t, r, eps, true)?;
    Ok(prof.jet(reduce_angle(z)))
}

/// Logarithm of the closed form on the cut locus,
/// `p_t(0, z) = (pi^2 e^t / 4t^2) e^{-(2 pi |z| - z^2)/4t} sum_k e^{-k(k+1) pi^2/t} R_k`.
pub fn ln_pt_cutlocus(t: f64, z: f64) -> Result<f64> {
    check_positive("t", t)?;
    check_finite("z", z)?;
    let z = reduce_angle(z).abs();
    let ratio = |k: i64| -> f64 {
        let kf = k as f64;
        let a = PI * (z + 2.0 * kf * PI) / (2.0 * t);
        if a >= 0.0 {
            let e = (-a).exp();
            ((2.0 * kf + 1.0) + 2.0 * kf * e) / ((1.0 + e) * (1.0 + e))
        } else {
            let f = a.exp();
            ((2.0 * kf + 1.0) * f * f + 2.0 * kf * f) / ((f + 1.0) * (f + 1.0))
        }
    };
    // k and -1-k share the weight e^{-k(k+1) pi^2/t}.
    let mut sum = 0.0;
    for j in 0..10_000i64 {
        let w = (-(j * (j + 1)) as f64 * PI * PI / t).exp();
        let term = w * (ratio(j) + ratio(-1 - j));
        sum += term;
        if j >= 1 && w * (2 * j + 2) as f64 <= 1e-18 * sum.abs() {
            break;
        }
    }
    if !(sum > 0.0) {
        return Err(Error::Domain(format!("cut-locus sum is not positive at t={t}")));
    }
    let pre = (PI * PI).ln() + t - 4f64.ln() - 2.0 * t.ln() - (2.0 * PI * z - z * z) / (4.0 * t);
    Ok(pre + sum.ln())
}

/// Closed form on the cut locus `r = 0`.
pub fn pt_cutlocus(t: f64, z: f64) -> Result<KernelEval> {
    let ln = ln_pt_cutlocus(t, z)?;
    let value = ln.exp();
    // The prefactor grows like e^t/t^2 while the sum tends to 4t^2 e^{-t}.
    let cancel = (PI * PI * t.exp() / (4.0 * t * t)).max(1.0);
    Ok(KernelEval {
        value,
        abs_err: value * 16.0 * f64::EPSILON * cancel,
        representation: Representation::CutlocusClosed,
    })
}

/// Diagonal value from the double series `sum (2k+|n|+1) e^{-lambda t}`.
pub fn pt_diagonal_series(t: f64, eps: f64) -> Result<f64> {
    let plan = truncation_plan(t, eps, false)?;
    let mut s = 0.0;
    for n in 0..=plan.n_max {
        let Some(kmax) = k_limit(n, plan.lambda_max) else { break };
        let mult = if n == 0 { 1.0 } else { 2.0 };
        for k in 0..=kmax {
            s += mult * weight(n, k) * (-eigenvalue(n, k) * t).exp();
        }
    }
    Ok(s)
}

/// `p_t(0)`: the series for `t >= 0.5`, the theta form below.
pub fn pt_diagonal(t: f64) -> Result<f64> {
    check_positive("t", t)?;
    if t >= 0.5 {
        pt_diagonal_series(t, 1e-16)
    } else {
        Ok(ln_pt_cutlocus(t, 0.0)?.exp())
    }
}

/// Result of the contour integral in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogKernel {
    pub ln_value: f64,
    pub rel_err: f64,
}

/// Logarithm of
/// `p_t(r, z) = (4 pi t)^{-1/2} int e^{-(y + iz)^2/4t} q_t(cos r cosh y) dy`.
///
/// The line of integration is moved to `Im y = -theta*` where `theta*`
/// solves the distance equation; there the phase is stationary, the
/// integrand is of size `e^{-d^2/4t}` at `Re y = 0`, and no cancellation
/// occurs. `q_t` is taken at complex arguments through its Poisson-summed
/// continuation.
pub fn ln_pt_integral(t: f64, r: f64, z: f64, spec: &QuadratureSpec) -> Result<LogKernel> {
    check_positive("t", t)?;
    check_finite("r", r)?;
    check_finite("z", z)?;
    if !(r > 0.0 && r <= FRAC_PI_2) {
        return Err(Error::Domain(format!("integral representation needs r in (0, pi/2], got {r}")));
    }
    let a = reduce_angle(z).abs();
    let dist = cc_distance_with(r, a, 0.0)?;
    let (th, d2) = (dist.theta_star, dist.d_squared);
    let cr = r.cos();
    let f = |w: f64| -> Complex64 {
        let y = Complex64::new(w, -th);
        let x = cr * y.cosh();
        let (phi, h) = theta_parts(t, x);
        let s = y + Complex64::new(0.0, a);
        let l = (-(s * s) - phi * phi + d2) / (4.0 * t);
        l.exp() * h
    };
    let pair = |w: f64| f(w) + f(-w);
    let f0 = pair(0.0).norm();
    if !(f0.is_finite() && f0 > 0.0) {
        return Err(Error::QuadratureNotConverged { value: f0, abs_err: f64::INFINITY });
    }
    // Decay is at least e^{-w}; extend until the integrand is negligible.
    let mut w_max: f64 = 4.0;
    while pair(w_max).norm() > 1e-18 * f0 {
        w_max *= 1.5;
        if w_max > 400.0 {
            return Err(Error::SlowDecay { t, r });
        }
    }
    let tail = 4.0 * pair(w_max).norm();
    let freq = (a + 1.0) / (2.0 * t);
    let panels = ((w_max * freq / PI).ceil() as usize).clamp(1, 20_000);
    let points: Vec<f64> = (0..=panels).map(|i| w_max * i as f64 / panels as f64).collect();
    let spec = QuadratureSpec { abs_tol: spec.abs_tol.max(1e-300) * f0, ..*spec };
    let res = integrate_partitioned(pair, &points, &spec)?;
    let val = res.value.re;
    if !(val > 0.0) {
        return Err(Error::QuadratureNotConverged { value: val, abs_err: res.abs_err });
    }
    let rel_err = (res.abs_err + tail) / val;
    if res.value.im.abs() > 1e-8 * val {
        return Err(Error::QuadratureNotConverged { value: val, abs_err: res.value.im.abs() });
    }
    // (4 pi t)^{-1/2} sqrt(pi) e^t / (4 t^{3/2}) = e^t / (8 t^2)
    let ln_value = t - 8f64.ln() - 2.0 * t.ln() - d2 / (4.0 * t) + val.ln();
    Ok(LogKernel { ln_value, rel_err: rel_err + 1e-15 })
}

/// Integral representation, see [`ln_pt_integral`].
pub fn pt_integral(t: f64, r: f64, z: f64, spec: &QuadratureSpec) -> Result<KernelEval> {
    let l = ln_pt_integral(t, r, z, spec)?;
    let value = l.ln_value.exp();
    Ok(KernelEval { value, abs_err: value * l.rel_err, representation: Representation::Integral })
}

fn check_point(t: f64, r: f64, z: f64) -> Result<()> {
    check_positive("t", t)?;
    check_finite("z", z)?;
    check_finite("r", r)?;
    if !(0.0..=FRAC_PI_2).contains(&r) {
        return Err(Error::Domain(format!("r must lie in [0, pi/2], got {r}")));
    }
    Ok(())
}

fn choose(t: f64, r: f64, cfg: &KernelConfig) -> Representation {
    if r < cfg.r_min && t <= T_MAX_CUTLOCUS {
        Representation::CutlocusClosed
    } else if t >= cfg.t_cross {
        Representation::Spectral
    } else {
        Representation::Integral
    }
}

/// Heuristic error of using the axis value for `0 < r < r_min`; the
/// relative change is of order `r^2 (1 + |z|/t) / t`.
fn axis_offset_err(t: f64, r: f64, z: f64, value: f64) -> f64 {
    value * r * r * (1.0 + z.abs() / t) / t
}

/// Kernel with explicit configuration.
pub fn pt_with(t: f64, r: f64, z: f64, cfg: &KernelConfig) -> Result<KernelEval> {
    check_point(t, r, z)?;
    let z = reduce_angle(z);
    match choose(t, r, cfg) {
        Representation::CutlocusClosed => {
            let mut e = pt_cutlocus(t, z)?;
            e.abs_err += axis_offset_err(t, r, z, e.value);
            Ok(e)
        }
        Representation::Spectral => {
            let prof = SpectralProfile::with_t_min(t, r, cfg.eps, false, cfg.t_min_spectral)?;
            Ok(KernelEval { value: prof.value(z), abs_err: prof.abs_err(), representation: Representation::Spectral })
        }
        Representation::Integral => pt_integral(t, r, z, &cfg.quad),
    }
}

/// Kernel with default thresholds: cut-locus form for `r < 1e-3`, spectral
/// series for `t >= 0.35`, integral representation otherwise.
pub fn pt(t: f64, r: f64, z: f64, eps: f64) -> Result<KernelEval> {
    pt_with(t, r, z, &KernelConfig { eps, ..KernelConfig::default() })
}

/// `ln p_t`, avoiding underflow for small `t`.
pub fn ln_pt_with(t: f64, r: f64, z: f64, cfg: &KernelConfig) -> Result<f64> {
    check_point(t, r, z)?;
    let z = reduce_angle(z);
    match choose(t, r, cfg) {
        Representation::CutlocusClosed => ln_pt_cutlocus(t, z),
        Representation::Spectral => Ok(pt_with(t, r, z, cfg)?.value.ln()),
        Representation::Integral => Ok(ln_pt_integral(t, r, z, &cfg.quad)?.ln_value),
    }
}

pub fn ln_pt(t: f64, r: f64, z: f64) -> Result<f64> {
    ln_pt_with(t, r, z, &KernelConfig::default())
}

/// Green function of `-L + 1`:
/// `G = (1/8 pi) (1 - 2 cos r cos z + cos^2 r)^{-1/2}`.
pub fn green_function(r: f64, z: f64) -> Result<f64> {
    check_finite("r", r)?;
    check_finite("z", z)?;
    let z = reduce_angle(z);
    // 1 - 2 cos r cos z + cos^2 r = 4 sin^4(r/2) + 4 cos r sin^2(z/2)
    let q = 4.0 * (0.5 * r).sin().powi(4) + 4.0 * r.cos() * (0.5 * z).sin().powi(2);
    if q <= 0.0 {
        return Err(Error::PoleAtOrigin);
    }
    Ok(1.0 / (8.0 * PI * q.sqrt()))
}

/// Both sides of the Laplace transform identity
/// `int_0^inf p_t e^{-t - lambda/t} dt = int_R dy / (8 pi^2 (cosh sqrt(y^2+4 lambda) - cos r cos(z+iy)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_err: f64,
    pub rhs_err: f64,
    pub rhs_imag: f64,
}

impl LaplaceCheck {
    /// Relative difference after expressing both sides for the normalized
    /// Haar measure.
    pub fn rel_diff(&self) -> f64 {
        (self.lhs - SU2_VOLUME * self.rhs).abs() / (SU2_VOLUME * self.rhs).abs()
    }

    /// `lhs / rhs` as printed, which is the volume `2 pi^2`.
    pub fn literal_ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// Time integral `int_0^inf p_t(r, z) e^{-t - lambda/t} dt`; `lambda = 0`
/// gives the Green function.
pub fn laplace_lhs(lambda: f64, r: f64, z: f64, cfg: &KernelConfig, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    check_finite("lambda", lambda)?;
    if lambda < 0.0 {
        return Err(Error::Domain(format!("lambda must be nonnegative, got {lambda}")));
    }
    check_point(1.0, r, z)?;
    let d2 = cc_distance_with(r, z, cfg.r_min)?.d_squared;
    if lambda == 0.0 && d2 == 0.0 {
        return Err(Error::PoleAtOrigin);
    }
    // Below t_lo the integrand is below e^{-50} of its scale.
    let t_lo = ((lambda + d2 / 4.0) / 50.0).max(1e-4);
    let failure = std::cell::RefCell::new(None);
    let g = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match ln_pt_with(t, r, z, cfg) {
            Ok(l) => (l - t - lambda / t).exp(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let split = cfg.t_cross.max(t_lo);
    let a = integrate(g, t_lo, split, spec)?;
    let b = integrate_to_infinity(g, split, spec)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((a.value + b.value, a.abs_err + b.abs_err))
}

/// Right-hand side of the Laplace identity; the integrand is complex and
/// its imaginary part must integrate to zero.
pub fn laplace_rhs(lambda: f64, r: f64, z: f64, spec: &QuadratureSpec) -> Result<(f64, f64, f64)> {
    check_positive("lambda", lambda)?;
    check_point(1.0, r, z)?;
    let cr = r.cos();
    let f = |y: f64| -> Complex64 {
        let c = (y * y + 4.0 * lambda).sqrt().cosh();
        if !c.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        let den = c - cr * Complex64::new(z, y).cos();
        1.0 / (8.0 * PI * PI * den)
    };
    let res = integrate_to_infinity(|y| f(y) + f(-y), 0.0, spec)?;
    Ok((res.value.re, res.abs_err, res.value.im))
}

pub fn laplace_check(lambda: f64, r: f64, z: f64, spec: &QuadratureSpec) -> Result<LaplaceCheck> {
    let cfg = KernelConfig::default();
    let (lhs, lhs_err) = laplace_lhs(lambda, r, z, &cfg, spec)?;
    let (rhs, rhs_err, rhs_imag) = laplace_rhs(lambda, r, z, spec)?;
    if rhs_imag.abs() > 1e-8 * rhs.abs().max(1e-300) {
        return Err(Error::QuadratureNotConverged { value: rhs, abs_err: rhs_imag.abs() });
    }
    Ok(LaplaceCheck { lhs, rhs, lhs_err, rhs_err, rhs_imag })
}

/// Shifted series `p*_t(r, z + 4it)`: the terms with `k >= 1`, plus those
/// with `k = 0, n >= 1`, each multiplied by `e^{-4nt}`.
pub fn pt_star_shifted(t: f64, r: f64, z: f64, eps: f64) -> Result<Complex64> {
    check_point(t, r, z)?;
    check_positive("eps", eps)?;
    if t < T_MIN_SPECTRAL {
        return Err(Error::TruncationCap(format!("t = {t} is below the spectral range")));
    }
    // Shifted eigenvalues satisfy lambda' >= lambda/3 on the index set.
    let d = ln_diag_bound(DELTA * t / 3.0)?;
    let lambda_max = ((d - eps.ln()) / ((1.0 - DELTA) * t)).max(0.0);
    let n_max = (lambda_max / 2.0).floor() as usize;
    if n_max > MAX_ORDER {
        return Err(Error::TruncationCap(format!("shifted series at t={t} needs n up to {n_max}")));
    }
    let x = (2.0 * r).cos();
    let cr = r.cos();
    let mut table = JacobiTable::default();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut pw = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            pw *= cr;
        }
        let nf = n as f64;
        // Largest k with lambda - 4n <= lambda_max (the n < 0 side dominates).
        let Some(kmax) = k_limit(n, lambda_max + 4.0 * nf) else { break };
        let kmax = kmax.min(MAX_DEGREE);
        table.fill(kmax, n, x);
        let e_pos = Complex64::from_polar(1.0, nf * z);
        for k in 0..=kmax {
            let lam = eigenvalue(n, k);
            let base = weight(n, k) * pw * table.p[k];
            // +n: lambda + 4n, allowed for k >= 1 or n >= 1
            if (k >= 1 || n >= 1) && lam + 4.0 * nf <= lambda_max {
                sum += base * (-(lam + 4.0 * nf) * t).exp() * e_pos;
            }
            // -n (n >= 1): lambda - 4n, only k >= 1
            if n >= 1 && k >= 1 && lam - 4.0 * nf <= lambda_max {
                sum += base * (-(lam - 4.0 * nf) * t).exp() * e_pos.conj();
            }
        }
    }
    Ok(sum)
}

/// Supremum of `|p*_t(r, z + 4it)| / p_t(r, z)` over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiRatio {
    pub value: f64,
    pub r: f64,
    pub z: f64,
}

/// Grid of `nr x nz` points covering `[0, pi/2] x [-pi, pi]`, endpoints included.
pub fn phi_ratio(t: f64, nr: usize, nz: usize, cfg: &KernelConfig) -> Result<PhiRatio> {
    if nr < 2 || nz < 2 {
        return Err(Error::Domain("phi_ratio grid needs at least 2 points per axis".into()));
    }
    let pts: Vec<(f64, f64)> = (0..nr)
        .flat_map(|i| {
            (0..nz).map(move |j| (FRAC_PI_2 * i as f64 / (nr - 1) as f64, -PI + TAU * j as f64 / (nz - 1) as f64))
        })
        .collect();
    let vals: Result<Vec<(f64, f64, f64)>> = pts
        .par_iter()
        .map(|&(r, z)| {
            let num = pt_star_shifted(t, r, z, cfg.eps * 1e-3)?.norm();
            let den = pt_with(t, r, z, cfg)?.value;
            Ok((num / den, r, z))
        })
        .collect();
    let best = vals?.into_iter().fold((f64::NEG_INFINITY, 0.0, 0.0), |m, v| if v.0 > m.0 { v } else { m });
    Ok(PhiRatio { value: best.0, r: best.1, z: best.2 })
}

/// Haar integral of `g(r, z, profile)` where `profile` is the spectral
/// kernel at radius `r`; the outer rule runs over `r`, the inner over `z`.
pub fn haar_integrate_spectral<G>(t: f64, eps: f64, jets: bool, spec: &QuadratureSpec, g: G) -> Result<f64>
where
    G: Fn(f64, f64, &SpectralProfile) -> f64,
{
    let failure = std::cell::RefCell::new(None);
    let inner = QuadratureSpec { abs_tol: spec.abs_tol * 0.1, rel_tol: spec.rel_tol * 0.1, ..*spec };
    let outer = integrate(
        |r: f64| {
            let prof = match SpectralProfile::new(t, r, eps, jets) {
                Ok(p) => p,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    return 0.0;
                }
            };
            match integrate(|z| g(r, z, &prof), -PI, PI, &inner) {
                Ok(v) => v.value * (2.0 * r).sin() / TAU,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        FRAC_PI_2,
        spec,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(outer.value)
}

/// `int p_t d mu`.
pub fn kernel_mass(t: f64, spec: &QuadratureSpec) -> Result<f64> {
    haar_integrate_spectral(t, 1e-14, false, spec, |_, z, p| p.value(z))
}

/// `int p_t^2 d mu`, which equals `p_{2t}(0)`.
pub fn kernel_l2(t: f64, spec: &QuadratureSpec) -> Result<f64> {
    haar_integrate_spectral(t, 1e-14, false, spec, |_, z, p| p.value(z).powi(2))
}
