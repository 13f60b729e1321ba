//! Heat kernel of the Heisenberg group in cylindric coordinates and the
//! dilation limit of the SU(2) kernel.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_finite, check_positive, Error, Result};
use crate::geometry::Jet2;
use crate::quadrature::{integrate_2d, integrate_partitioned, QuadratureSpec};
use crate::su2_kernel::{pt_with, KernelConfig};

/// Point `(r, z)` of the Heisenberg group, `theta` suppressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisPoint {
    pub r: f64,
    pub z: f64,
}

impl HeisPoint {
    pub fn new(r: f64, z: f64) -> Result<Self> {
        check_finite("r", r)?;
        check_finite("z", z)?;
        if r < 0.0 {
            return Err(Error::Domain(format!("r must be nonnegative, got {r}")));
        }
        Ok(HeisPoint { r, z })
    }
}

fn default_spec() -> QuadratureSpec {
    QuadratureSpec { abs_tol: 1e-14, rel_tol: 1e-12, max_refinements: 4000 }
}

/// `(lambda / sinh(lambda t), lambda coth(lambda t))`, regular at 0.
fn kernels(lambda: f64, t: f64) -> (f64, f64) {
    let x = lambda * t;
    if x < 1e-4 {
        let x2 = x * x;
        ((1.0 - x2 / 6.0) / t, (1.0 + x2 / 3.0) / t)
    } else {
        (lambda / x.sinh(), lambda / x.tanh())
    }
}

/// Integrate `F(lambda)` over `[0, inf)` where `F` is dominated by
/// `lambda e^{-lambda (t + r^2/4)}` up to polynomial factors.
fn lambda_integral<F>(t: f64, p: HeisPoint, spec: &QuadratureSpec, f: F) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let a = t.min(1.0) + p.r * p.r / 4.0;
    // lambda^3 e^{-a lambda} falls below 1e-20 of its peak scale.
    let l_max = (60.0 + 3.0 * (1.0 + 1.0 / a).ln()) / a;
    let period = if p.z == 0.0 { l_max } else { 4.0 * PI / p.z.abs() };
    let panels = ((l_max / period).ceil() as usize).clamp(4, 20_000);
    let points: Vec<f64> = (0..=panels).map(|i| l_max * i as f64 / panels as f64).collect();
    // Rounding in each panel is of order eps times the integrand amplitude.
    let amp = (0..=256).map(|i| f(l_max * i as f64 / 256.0).norm()).fold(1.0 / t, f64::max);
    let floor = 64.0 * f64::EPSILON * panels as f64 * amp;
    let spec = QuadratureSpec { abs_tol: spec.abs_tol.max(floor), ..*spec };
    Ok(integrate_partitioned(f, &points, &spec)?.value)
}

/// `h_t(r, z) = (1/8 pi^2) int_0^inf cos(lambda z/2) (lambda / sinh lambda t) e^{-(r^2/4) lambda coth lambda t} dlambda`.
pub fn gaveau_kernel(t: f64, p: HeisPoint) -> Result<f64> {
    gaveau_kernel_with(t, p, &QuadratureSpec { abs_tol: 1e-14 / t, ..default_spec() })
}

pub fn gaveau_kernel_with(t: f64, p: HeisPoint, spec: &QuadratureSpec) -> Result<f64> {
    check_positive("t", t)?;
    let r2 = p.r * p.r / 4.0;
    let v = lambda_integral(t, p, spec, |l| {
        let (g, c) = kernels(l, t);
        Complex64::new((0.5 * l * p.z).cos() * g * (-r2 * c).exp(), 0.0)
    })?;
    Ok(v.re / (8.0 * PI * PI))
}

/// Value and derivatives of `h_t` by differentiating under the integral.
pub fn gaveau_jet(t: f64, p: HeisPoint) -> Result<Jet2> {
    check_positive("t", t)?;
    let spec = QuadratureSpec { abs_tol: 1e-14 / t, ..default_spec() };
    let (r, z) = (p.r, p.z);
    let base = |l: f64| -> (f64, f64, f64, f64) {
        let (g, c) = kernels(l, t);
        let w = g * (-r * r * c / 4.0).exp();
        let (s, co) = (0.5 * l * z).sin_cos();
        (w, c, s, co)
    };
    let a = lambda_integral(t, p, &spec, |l| {
        let (w, _, s, co) = base(l);
        Complex64::new(co * w, -0.5 * l * s * w)
    })?;
    let b = lambda_integral(t, p, &spec, |l| {
        let (w, c, s, co) = base(l);
        let dr = -0.5 * r * c;
        Complex64::new(co * w * dr, -0.5 * l * s * w * dr)
    })?;
    let d = lambda_integral(t, p, &spec, |l| {
        let (w, c, _, co) = base(l);
        let drr = 0.25 * r * r * c * c - 0.5 * c;
        Complex64::new(co * w * drr, -0.25 * l * l * co * w)
    })?;
    let k = 1.0 / (8.0 * PI * PI);
    Ok(Jet2 { f: k * a.re, fz: k * a.im, fr: k * b.re, frz: k * b.im, frr: k * d.re, fzz: k * d.im })
}

/// `Gamma(f) = f_r^2 + r^2 f_z^2` for functions independent of `theta`.
pub fn heis_gamma(j: &Jet2, r: f64) -> Result<f64> {
    check_finite("r", r)?;
    if r < 0.0 {
        return Err(Error::Domain(format!("r must be nonnegative, got {r}")));
    }
    Ok(j.fr * j.fr + r * r * j.fz * j.fz)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationProbe {
    /// `t^2 p_t(sqrt(t) r, t z)`
    pub scaled: f64,
    /// `2 pi^2 h_1(r, z)`
    pub limit: f64,
    pub error: f64,
}

impl DilationProbe {
    pub fn rel_error(&self) -> f64 {
        self.error / self.limit
    }
}

/// Compare the dilated SU(2) kernel with its Heisenberg limit.
pub fn dilation_limit_error(t: f64, r: f64, z: f64, cfg: &KernelConfig) -> Result<DilationProbe> {
    check_positive("t", t)?;
    let p = HeisPoint::new(r, z)?;
    let (rs, zs) = (t.sqrt() * r, t * z);
    if rs > 0.5 * PI || zs.abs() > PI {
        return Err(Error::Domain(format!("dilated point ({rs}, {zs}) leaves the chart")));
    }
    let scaled = t * t * pt_with(t, rs, zs, cfg)?.value;
    let limit = 2.0 * PI * PI * gaveau_kernel(1.0, p)?;
    Ok(DilationProbe { scaled, limit, error: (scaled - limit).abs() })
}

/// `int h_t r dr dtheta dz` over `r <= r_max`, `|z| <= z_max`.
pub fn gaveau_mass(t: f64, r_max: f64, z_max: f64, spec: &QuadratureSpec) -> Result<f64> {
    let inner = QuadratureSpec { rel_tol: 1e-10, ..default_spec() };
    let failure = std::cell::RefCell::new(None);
    let v = integrate_2d(
        |r, z| match gaveau_kernel_with(t, HeisPoint { r, z }, &inner) {
            Ok(h) => 2.0 * 2.0 * PI * h * r,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        (0.0, r_max),
        (0.0, z_max),
        spec,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(v.value)
}

/// `(1/2) int h_1 Gamma(ln h_1) r dr dtheta dz` over `r <= r_max`, `|z| <= z_max`.
pub fn heis_fisher_information(r_max: f64, z_max: f64, spec: &QuadratureSpec) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let v = integrate_2d(
        |r, z| match gaveau_jet(1.0, HeisPoint { r, z }) {
            // Below 1e-12 the value is dominated by rounding; the dropped
            // tail is smaller than the quadrature tolerance.
            Ok(j) if j.f > 1e-12 => {
                let g = (j.fr * j.fr + r * r * j.fz * j.fz) / j.f;
                // even in z: twice the half line; (1/2) * 2 pi * 2
                2.0 * PI * g * r
            }
            Ok(_) => 0.0,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        (0.0, r_max),
        (0.0, z_max),
        spec,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(v.value)
}

/// `2^q int r^q h_1 Gamma(ln h_1)^{q/2} r dr dtheta dz`, the small-time
/// limit of `int (sin 2r)^q Gamma(ln p_t)^{q/2} p_t d mu`.
pub fn heis_moment_limit(q: f64, r_max: f64, z_max: f64, spec: &QuadratureSpec) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let v = integrate_2d(
        |r, z| match gaveau_jet(1.0, HeisPoint { r, z }) {
            Ok(j) if j.f > 1e-12 => {
                let g = (j.fr * j.fr + r * r * j.fz * j.fz) / (j.f * j.f);
                // even in z and theta-free: 2 * 2 pi
                4.0 * PI * 2f64.powf(q) * r.powf(q) * j.f * g.powf(0.5 * q) * r
            }
            Ok(_) => 0.0,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        (0.0, r_max),
        (0.0, z_max),
        spec,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(v.value)
}
