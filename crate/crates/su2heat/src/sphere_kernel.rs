//! Heat kernel factor `q_t` of the three-sphere as a function of
//! `x = cos(phi)`: spectral Chebyshev series, Poisson-summed theta forms,
//! and the analytic continuation used by the integral representation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_positive, Error, Result};

/// Default time above which the spectral series is preferred.
pub const T_CROSS: f64 = 0.35;
/// Hard cap on the number of spectral terms.
pub const MAX_SPECTRAL_TERMS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QtRepresentation {
    Spectral,
    ThetaTrig,
    ThetaHyp,
}

impl QtRepresentation {
    pub fn name(&self) -> &'static str {
        match self {
            QtRepresentation::Spectral => "spectral",
            QtRepresentation::ThetaTrig => "theta_trig",
            QtRepresentation::ThetaHyp => "theta_hyp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QtEval {
    pub value: f64,
    pub abs_err: f64,
    pub representation: QtRepresentation,
}

/// `q_t(x) = sum_m (m+1) e^{-m(m+2)t} U_m(x)` with the tail bounded through
/// `|U_m| <= m + 1`.
pub fn qt_spectral(t: f64, x: f64, eps: f64) -> Result<QtEval> {
    check_positive("t", t)?;
    check_positive("eps", eps)?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("spectral q_t needs x in [-1, 1], got {x}")));
    }
    let mut sum = 0.0;
    let (mut u0, mut u1) = (0.0, 1.0);
    let mut m = 0usize;
    loop {
        let mf = m as f64;
        sum += (mf + 1.0) * (-mf * (mf + 2.0) * t).exp() * u1;
        let u2 = 2.0 * x * u1 - u0;
        u0 = u1;
        u1 = u2;
        m += 1;
        // Tail from m on: geometric majorant of (j+1)^2 e^{-j(j+2)t}.
        let mf = m as f64;
        let first = (mf + 1.0).powi(2) * (-mf * (mf + 2.0) * t).exp();
        let rho = ((mf + 2.0) / (mf + 1.0)).powi(2) * (-(2.0 * mf + 3.0) * t).exp();
        if rho < 1.0 {
            let tail = first / (1.0 - rho);
            if tail <= eps {
                return Ok(QtEval { value: sum, abs_err: tail, representation: QtRepresentation::Spectral });
            }
        }
        if m > MAX_SPECTRAL_TERMS {
            return Err(Error::TruncationCap(format!("spectral q_t needs more than {MAX_SPECTRAL_TERMS} terms at t={t}")));
        }
    }
}

/// `sqrt(pi) e^t / (4 t^{3/2})`, in log form.
fn ln_prefactor(t: f64) -> f64 {
    0.5 * PI.ln() + t - 4f64.ln() - 1.5 * t.ln()
}

/// `e^c sinh(a w) / sin(w)`, regular at `w = 0`.
fn sinh_over_sin(a: f64, w: Complex64, c: Complex64) -> Complex64 {
    let aw = w * a;
    if aw.norm() < 0.02 && w.norm() < 0.02 {
        let aw2 = aw * aw;
        let w2 = w * w;
        let num = 1.0 + aw2 / 6.0 + aw2 * aw2 / 120.0;
        let den = 1.0 - w2 / 6.0 + w2 * w2 / 120.0;
        return c.exp() * a * num / den;
    }
    ((c + aw).exp() - (c - aw).exp()) / (2.0 * w.sin())
}

/// `w / sin w`, regular at 0.
fn w_over_sin(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        let w2 = w * w;
        1.0 + w2 / 6.0 + w2 * w2 * (7.0 / 360.0)
    } else {
        w / w.sin()
    }
}

/// `H(phi) = e^{phi^2/4t} sin(phi)^{-1} sum_k (phi + 2k pi) e^{-(phi+2k pi)^2/4t}`.
/// Images are paired `k <-> -k` when `Re phi <= pi/2` and `k <-> -(k+1)`
/// otherwise, which keeps every term bounded and cancels the removable
/// singularities at `phi = 0` and `phi = pi`.
fn theta_factor(t: f64, phi: Complex64) -> (Complex64, f64) {
    let mut terms_dropped = 0.0;
    if phi.re <= 0.5 * PI {
        let ratio = w_over_sin(phi);
        let mut s1 = Complex64::new(1.0, 0.0);
        let mut s2 = Complex64::new(0.0, 0.0);
        for k in 1..200 {
            let kf = k as f64;
            let c = Complex64::new(-kf * kf * PI * PI / t, 0.0);
            let a = kf * PI / t;
            let cosh_term = ((c + phi * a).exp() + (c - phi * a).exp()) * 2.0 * 0.5;
            let sinh_term = sinh_over_sin(a, phi, c) * (4.0 * kf * PI);
            s1 += cosh_term;
            s2 += sinh_term;
            let size = (ratio * cosh_term).norm() + sinh_term.norm();
            if size <= 1e-18 * (ratio * s1 - s2).norm() {
                terms_dropped = size;
                break;
            }
        }
        (ratio * s1 - s2, terms_dropped)
    } else {
        let s = Complex64::new(PI, 0.0) - phi;
        let s_ratio = w_over_sin(s);
        let mut h = Complex64::new(0.0, 0.0);
        for k in 0..200 {
            let m = (2 * k + 1) as f64 * PI;
            let c = -(s * (2.0 * PI) + (m * m - PI * PI)) / (4.0 * t);
            let a = m / (2.0 * t);
            let sinh_part = sinh_over_sin(a, s, c) * (2.0 * m);
            let cosh_part = ((c + s * a).exp() + (c - s * a).exp()) * s_ratio;
            let term = sinh_part - cosh_part;
            h += term;
            if term.norm() <= 1e-18 * h.norm() {
                terms_dropped = term.norm();
                break;
            }
        }
        (h, terms_dropped)
    }
}

/// Principal `arccos`, accurate for large `|x|` (Kahan's form).
pub(crate) fn acos_c(x: Complex64) -> Complex64 {
    let m = x.norm();
    let scale = if m > 1e100 { m } else { 1.0 };
    let u1 = (Complex64::new(1.0, 0.0) - x).sqrt();
    let u2 = (Complex64::new(1.0, 0.0) + x).sqrt();
    let re = 2.0 * u1.re.atan2(u2.re);
    let v = (u2.conj() / scale.sqrt() * (u1 / scale.sqrt())).im;
    let im = if scale > 1.0 { v.signum() * ((2.0 * v.abs()).ln() + scale.ln()) } else { v.asinh() };
    Complex64::new(re, im)
}

/// `phi = arccos x` (principal branch) and `H(phi)`, so that
/// `q_t(x) = sqrt(pi) e^t / (4 t^{3/2}) e^{-phi^2/4t} H(phi)`.
pub(crate) fn theta_parts(t: f64, x: Complex64) -> (Complex64, Complex64) {
    let phi = acos_c(x);
    (phi, theta_factor(t, phi).0)
}

/// `ln q_t(x)` for complex `x`, through the principal `phi = arccos x`.
/// This is the analytic continuation of the Poisson-summed form; the
/// imaginary part is defined modulo `2 pi`.
pub fn ln_qt_complex(t: f64, x: Complex64) -> Complex64 {
    let phi = acos_c(x);
    let (h, _) = theta_factor(t, phi);
    ln_prefactor(t) - phi * phi / (4.0 * t) + h.ln()
}

/// Poisson-summed form at `x = cos(theta)`, `theta in [0, pi]`.
pub fn qt_theta_trig(t: f64, theta: f64) -> Result<QtEval> {
    check_positive("t", t)?;
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("theta must lie in [0, pi], got {theta}")));
    }
    let phi = Complex64::new(theta, 0.0);
    let (h, dropped) = theta_factor(t, phi);
    let scale = (ln_prefactor(t) - theta * theta / (4.0 * t)).exp();
    let value = scale * h.re;
    Ok(QtEval {
        value,
        abs_err: scale * dropped + 4.0 * f64::EPSILON * value.abs(),
        representation: QtRepresentation::ThetaTrig,
    })
}

/// Logarithm of the hyperbolic continuation `q_t(cosh s)`, safe where the
/// value itself overflows.
pub fn ln_qt_theta_hyp(t: f64, s: f64) -> Result<f64> {
    check_positive("t", t)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("s must be nonnegative, got {s}")));
    }
    let (h, _) = theta_factor(t, Complex64::new(0.0, s));
    Ok(ln_prefactor(t) + s * s / (4.0 * t) + h.re.ln())
}

/// Hyperbolic continuation `q_t(cosh s)`, i.e. `theta = i s`.
pub fn qt_theta_hyp(t: f64, s: f64) -> Result<QtEval> {
    let ln = ln_qt_theta_hyp(t, s)?;
    if ln > 700.0 {
        return Err(Error::OverflowGuard { exponent: ln });
    }
    let (_, dropped) = theta_factor(t, Complex64::new(0.0, s));
    let value = ln.exp();
    Ok(QtEval {
        value,
        abs_err: value * (dropped + 8.0 * f64::EPSILON),
        representation: QtRepresentation::ThetaHyp,
    })
}

/// Dispatcher: hyperbolic form for `x > 1`, spectral series for
/// `t >= t_cross`, trigonometric theta form otherwise.
pub fn qt_with_cross(t: f64, x: f64, eps: f64, t_cross: f64) -> Result<QtEval> {
    check_positive("t", t)?;
    if !(x >= -1.0) || !x.is_finite() {
        return Err(Error::Domain(format!("q_t needs x >= -1, got {x}")));
    }
    if x > 1.0 {
        qt_theta_hyp(t, x.acosh())
    } else if t >= t_cross {
        qt_spectral(t, x, eps)
    } else {
        qt_theta_trig(t, x.acos())
    }
}

pub fn qt(t: f64, x: f64, eps: f64) -> Result<QtEval> {
    qt_with_cross(t, x, eps, T_CROSS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acos_large_arguments() {
        for &(a, b) in &[(0.3, 0.0), (-0.5, 0.2), (2.0, -1.0), (-3.0, 4.0), (1e3, 1e3)] {
            let x = Complex64::new(a, b);
            assert!((acos_c(x) - x.acos()).norm() < 1e-13, "{x}");
            assert!((acos_c(x).cos() - x).norm() < 1e-12 * x.norm().max(1.0));
        }
        let x = Complex64::new(-1.4e21, 1.7e21);
        let phi = acos_c(x);
        assert!((phi.re - (PI - (1.7f64 / 1.4).atan())).abs() < 1e-12, "{phi}");
        let big = Complex64::new(-2e170, -2.4e170);
        assert!(acos_c(big).is_finite());
    }
    use crate::quadrature::{integrate, QuadratureSpec};
    use crate::special_functions::chebyshev_u;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Raw image sum without pairing, for arguments away from 0 and pi.
    fn raw_poisson(t: f64, phi: f64) -> f64 {
        let mut s = 0.0;
        for k in -6i32..=6 {
            let a = phi + 2.0 * k as f64 * PI;
            s += a * (-a * a / (4.0 * t)).exp();
        }
        PI.sqrt() * t.exp() / (4.0 * t.powf(1.5)) * s / phi.sin()
    }

    #[test]
    fn spectral_examples() {
        let v = qt_spectral(10.0, 0.2, 1e-15).unwrap();
        assert_relative_eq!(v.value, 1.0, epsilon = 1e-12);
        let direct: f64 = (0..20).map(|m| ((m + 1) as f64).powi(2) * (-((m * (m + 2)) as f64)).exp()).sum();
        assert_relative_eq!(qt_spectral(1.0, 1.0, 1e-15).unwrap().value, direct, epsilon = 1e-14);
        let leading = 1.0 + 4.0 * (-3f64).exp() + 9.0 * (-8f64).exp() + 16.0 * (-15f64).exp();
        assert_relative_eq!(direct, leading, epsilon = 1e-9);
        assert!(matches!(qt_spectral(1e-8, 0.5, 1e-12), Err(Error::TruncationCap(_))));
    }

    #[test]
    fn trig_examples() {
        let t: f64 = 0.05;
        let lead = PI.sqrt() * t.exp() / (4.0 * t.powf(1.5)) / 1f64.sin() * (-1.0 / (4.0 * t)).exp();
        assert_relative_eq!(qt_theta_trig(t, 1.0).unwrap().value, lead, max_relative = 1e-14);
        let a = qt_theta_trig(1.0, PI / 2.0).unwrap();
        let b = qt_spectral(1.0, 0.0, 1e-15).unwrap();
        assert!((a.value - b.value).abs() <= a.abs_err + b.abs_err + 1e-14);
        let a = qt_theta_trig(0.8, 0.0).unwrap();
        let b = qt_spectral(0.8, 1.0, 1e-15).unwrap();
        assert!((a.value - b.value).abs() <= 1e-10);
    }

    #[test]
    fn pairing_matches_raw_sum() {
        for &t in &[0.05, 0.3, 1.0, 3.0] {
            for &phi in &[0.3, 1.0, 1.5, 1.7, 2.5, 3.0] {
                let a = qt_theta_trig(t, phi).unwrap().value;
                let b = raw_poisson(t, phi);
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "t={t} phi={phi}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn antipode_is_finite() {
        for &t in &[0.1, 0.5, 2.0] {
            let a = qt_theta_trig(t, PI).unwrap().value;
            let b = qt_spectral(t, -1.0, 1e-15).unwrap().value;
            // The spectral sum alternates at x = -1 and carries ~1e-15 absolute error.
            assert!((a - b).abs() <= 1e-13, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn hyperbolic_examples() {
        let t = 0.2;
        let seam = qt_theta_hyp(t, 0.0).unwrap().value;
        assert_relative_eq!(seam, qt_theta_trig(t, 0.0).unwrap().value, max_relative = 1e-12);
        let t: f64 = 0.1;
        let s: f64 = 0.5;
        let closed = PI.sqrt() * t.exp() / (4.0 * t.powf(1.5)) * (s / s.sinh()) * (s * s / (4.0 * t)).exp();
        let mut poisson = 0.0;
        for k in -3i32..=3 {
            let a = Complex64::new(0.0, s) + 2.0 * k as f64 * PI;
            poisson += (a * (-a * a / (4.0 * t)).exp() / Complex64::new(0.0, s).sin()).re;
        }
        poisson *= PI.sqrt() * t.exp() / (4.0 * t.powf(1.5));
        let v = qt_theta_hyp(t, s).unwrap().value;
        assert_relative_eq!(v, closed, max_relative = 1e-12);
        assert_relative_eq!(v, poisson, max_relative = 1e-13);
        assert!(qt_theta_hyp(t, 1.0).unwrap().value > qt_theta_hyp(t, 0.5).unwrap().value);
        assert!(matches!(qt_theta_hyp(0.01, 60.0), Err(Error::OverflowGuard { .. })));
        assert!(ln_qt_theta_hyp(0.01, 60.0).unwrap().is_finite());
    }

    #[test]
    fn hyperbolic_matches_polynomial_continuation() {
        // The spectral series extends to x > 1 through U_m(cosh s) = sinh((m+1)s)/sinh s.
        let (t, s) = (0.7, 0.8f64);
        let mut sum = 0.0;
        for m in 0..80 {
            let mf = m as f64;
            sum += (mf + 1.0) * (-mf * (mf + 2.0) * t).exp() * chebyshev_u(m, s.cosh());
        }
        assert_relative_eq!(qt_theta_hyp(t, s).unwrap().value, sum, max_relative = 1e-12);
    }

    #[test]
    fn dispatcher_regimes() {
        assert_eq!(qt(2.0, 0.9, 1e-14).unwrap().representation, QtRepresentation::Spectral);
        assert_eq!(qt(0.05, 1.5, 1e-14).unwrap().representation, QtRepresentation::ThetaHyp);
        assert_eq!(qt(0.05, 0.5, 1e-14).unwrap().representation, QtRepresentation::ThetaTrig);
        let a = qt_spectral(0.5, 0.7, 1e-15).unwrap().value;
        let b = qt_theta_trig(0.5, 0.7f64.acos()).unwrap().value;
        assert!((a - b).abs() < 1e-9);
        assert!(qt(0.5, -1.5, 1e-12).is_err());
        assert!(qt(-1.0, 0.5, 1e-12).is_err());
    }

    #[test]
    fn overlap_agreement() {
        for i in 0..=13 {
            let t = 0.2 + 0.1 * i as f64;
            for j in 0..=19 {
                let x = -0.9 + 0.1 * j as f64;
                let a = qt_spectral(t, x, 1e-15).unwrap();
                let b = qt_theta_trig(t, x.acos()).unwrap();
                assert!((a.value - b.value).abs() <= a.abs_err + b.abs_err + 1e-13 * a.value.abs(), "t={t} x={x}");
            }
        }
    }

    #[test]
    fn normalization() {
        let spec = QuadratureSpec::default();
        for &t in &[0.1, 0.5, 1.0] {
            // Substitute x = cos(phi) so the weight sqrt(1-x^2) dx becomes sin^2(phi) dphi.
            let v = integrate(|phi: f64| qt(t, phi.cos(), 1e-15).unwrap().value * phi.sin().powi(2), 0.0, PI, &spec)
                .unwrap()
                .value;
            assert_relative_eq!(2.0 / PI * v, 1.0, epsilon = 1e-8);
        }
    }

    /// F(t, r, z) = q_t(cos r cos z) solves the heat equation for
    /// d^2/dz^2 + L on the sphere chart.
    #[test]
    fn heat_equation_residual() {
        let t = 0.5;
        let h = 1e-3;
        let f = |t: f64, r: f64, z: f64| qt(t, r.cos() * z.cos(), 1e-16).unwrap().value;
        for &(r, z) in &[(0.4, 0.3), (0.8, 1.0), (1.2, -0.7), (0.6, 2.0)] {
            let ft = (f(t + h, r, z) - f(t - h, r, z)) / (2.0 * h);
            let d2 = |g: &dyn Fn(f64) -> f64| (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
            let d1 = |g: &dyn Fn(f64) -> f64| (g(h) - g(-h)) / (2.0 * h);
            let frr = d2(&|e| f(t, r + e, z));
            let fr = d1(&|e| f(t, r + e, z));
            let fzz = d2(&|e| f(t, r, z + e));
            let lap = fzz + frr + 2.0 / (2.0 * r).tan() * fr + r.tan().powi(2) * fzz;
            assert!((ft - lap).abs() < 1e-4, "r={r} z={z}: {ft} vs {lap}");
        }
    }

    #[test]
    fn complex_continuation_on_real_axis() {
        for &(t, x) in &[(0.1, 0.3), (0.05, -0.8), (0.2, 1.7), (0.5, 0.999)] {
            let ln = ln_qt_complex(t, Complex64::new(x, 0.0));
            let v = qt(t, x, 1e-16).unwrap().value;
            assert!((ln.re - v.ln()).abs() < 1e-12, "t={t} x={x}");
            assert!(ln.im.sin().abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn trig_form_positive(t in 0.01f64..3.0, theta in 0.0f64..PI) {
            let v = qt_theta_trig(t, theta).unwrap();
            prop_assert!(v.value > 0.0 && v.value.is_finite());
        }

        #[test]
        fn branches_agree(t in 0.35f64..2.0, theta in 0.05f64..3.1) {
            let a = qt_spectral(t, theta.cos(), 1e-15).unwrap().value;
            let b = qt_theta_trig(t, theta).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
        }
    }
}
