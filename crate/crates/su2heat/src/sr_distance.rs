//! Carnot-Carathéodory distance from the identity, the small-time
//! Laplace-method asymptotics and the logarithmic distance limit.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{check_finite, check_positive, Error, Result};
use crate::geometry::reduce_angle;

/// Radius below which a point is treated as lying on the cut locus.
pub const R_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceResult {
    pub theta_star: f64,
    pub d_squared: f64,
    pub residual: f64,
    pub on_cut_locus: bool,
}

/// `u = cos r cos(theta)` together with `sqrt(1 - u^2)` computed as
/// `sqrt(sin^2 r + cos^2 r sin^2 theta)` (no cancellation) and
/// `arccos u = atan2(sqrt(1-u^2), u)`.
fn u_parts(r: f64, theta: f64) -> (f64, f64, f64) {
    let (sr, cr) = r.sin_cos();
    let (st, ct) = theta.sin_cos();
    let u = cr * ct;
    let s = (sr * sr + cr * cr * st * st).sqrt();
    (u, s, s.atan2(u))
}

/// `F(theta) = theta - z - cos r sin(theta) arccos(u) / sqrt(1-u^2)`.
pub fn theta_equation(r: f64, z: f64, theta: f64) -> f64 {
    let (_, s, a) = u_parts(r, theta);
    theta - z - r.cos() * theta.sin() * a / s
}

fn check_interior(r: f64) -> Result<()> {
    check_finite("r", r)?;
    if !(r > 0.0 && r < FRAC_PI_2) {
        return Err(Error::Domain(format!("r must lie strictly inside (0, pi/2), got {r}")));
    }
    Ok(())
}

/// Root of the distance equation in `[-pi, pi]` by bisection;
/// `F` is strictly increasing there.
pub fn theta_star(r: f64, z: f64) -> Result<f64> {
    check_interior(r)?;
    check_finite("z", z)?;
    let z = reduce_angle(z);
    if z == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-PI, PI);
    let (flo, fhi) = (theta_equation(r, z, lo), theta_equation(r, z, hi));
    // At |z| = pi the root sits on the bracket end, where F is zero up to rounding of sin(pi).
    if fhi.abs() <= 1e-14 {
        return Ok(hi);
    }
    if flo.abs() <= 1e-14 {
        return Ok(lo);
    }
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::NoBracket);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if theta_equation(r, z, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (theta_equation(r, z, lo).abs(), theta_equation(r, z, hi).abs());
    Ok(if flo <= fhi { lo } else { hi })
}

/// Squared distance from the root, `d^2 = arccos(u)^2 sin^2 r / (1 - u^2)`.
/// Equivalent to `(theta - z)^2 tan^2 r / sin^2 theta` but regular at
/// `theta = 0`.
pub fn d_squared_from_root(r: f64, theta: f64) -> f64 {
    let (_, s, a) = u_parts(r, theta);
    let q = a * r.sin() / s;
    q * q
}

/// Squared distance on the cut locus `r = 0`.
pub fn d_squared_cut_locus(z: f64) -> f64 {
    let z = reduce_angle(z).abs();
    2.0 * PI * z - z * z
}

/// Distance from the identity to `(r, z)` with a configurable cut-locus
/// radius.
pub fn cc_distance_with(r: f64, z: f64, r_min: f64) -> Result<DistanceResult> {
    check_finite("r", r)?;
    check_finite("z", z)?;
    if !(0.0..=FRAC_PI_2).contains(&r) {
        return Err(Error::Domain(format!("r must lie in [0, pi/2], got {r}")));
    }
    let z = reduce_angle(z);
    if z == 0.0 {
        return Ok(DistanceResult { theta_star: 0.0, d_squared: r * r, residual: 0.0, on_cut_locus: false });
    }
    if r < r_min {
        return Ok(DistanceResult { theta_star: z, d_squared: d_squared_cut_locus(z), residual: 0.0, on_cut_locus: true });
    }
    if r == FRAC_PI_2 {
        // cos r = 0: the equation reduces to theta = z and every point is at distance pi/2.
        return Ok(DistanceResult { theta_star: z, d_squared: r * r, residual: 0.0, on_cut_locus: false });
    }
    let th = theta_star(r, z)?;
    Ok(DistanceResult {
        theta_star: th,
        d_squared: d_squared_from_root(r, th),
        residual: theta_equation(r, z, th).abs(),
        on_cut_locus: false,
    })
}

pub fn cc_distance(r: f64, z: f64) -> Result<DistanceResult> {
    cc_distance_with(r, z, R_MIN)
}

/// Leading small-time behaviour of `p_t(r, z)` off the cut locus.
pub fn small_time_asymptotic(t: f64, r: f64, z: f64) -> Result<f64> {
    check_positive("t", t)?;
    check_interior(r)?;
    let th = theta_star(r, z)?;
    let (u, s, a) = u_parts(r, th);
    let curvature = 1.0 - u * a / s;
    if !(curvature > 0.0) {
        return Err(Error::NegativeCurvatureTerm(curvature));
    }
    let d2 = d_squared_from_root(r, th);
    Ok(a / (r.sin() * curvature.sqrt()) * PI.sqrt() * (-d2 / (4.0 * t)).exp() / (4.0 * t.powf(1.5)))
}
