//! Cylindric coordinates on SU(2), the matrix chart, Haar integration and
//! the carré du champ operators for functions of (r, z).

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{check_finite, Error, Result};
use crate::quadrature::{integrate, integrate_2d, QuadResult, QuadratureSpec};

/// Reduce an angle to `[-pi, pi]` by the nearest multiple of `2 pi`.
pub fn reduce_angle(z: f64) -> f64 {
    if (-PI..=PI).contains(&z) {
        return z;
    }
    let w = z - TAU * (z / TAU).round();
    w.clamp(-PI, PI)
}

/// Point of SU(2) in cylindric coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylCoord {
    pub r: f64,
    pub theta: f64,
    pub z: f64,
}

impl CylCoord {
    /// Validates `r` and reduces `theta` to `[0, 2 pi)` and `z` to `[-pi, pi]`.
    pub fn new(r: f64, theta: f64, z: f64) -> Result<Self> {
        check_finite("r", r)?;
        check_finite("theta", theta)?;
        check_finite("z", z)?;
        if !(0.0..=FRAC_PI_2).contains(&r) {
            return Err(Error::Domain(format!("r must lie in [0, pi/2], got {r}")));
        }
        Ok(CylCoord { r, theta: theta.rem_euclid(TAU), z: reduce_angle(z) })
    }

    pub fn to_matrix(&self) -> GroupElement {
        to_matrix(self)
    }
}

/// 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub a: [[Complex64; 2]; 2],
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Generator X = [[0, 1], [-1, 0]].
pub const PAULI_X: GroupElement = GroupElement { a: [[ZERO, ONE], [Complex64::new(-1.0, 0.0), ZERO]] };
/// Generator Y = [[0, i], [i, 0]].
pub const PAULI_Y: GroupElement = GroupElement { a: [[ZERO, I], [I, ZERO]] };
/// Generator Z = diag(i, -i).
pub const PAULI_Z: GroupElement = GroupElement { a: [[I, ZERO], [ZERO, Complex64::new(0.0, -1.0)]] };

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement { a: [[ONE, ZERO], [ZERO, ONE]] }
    }

    pub fn mul(&self, o: &GroupElement) -> GroupElement {
        let a = &self.a;
        let b = &o.a;
        let mut c = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        GroupElement { a: c }
    }

    pub fn adjoint(&self) -> GroupElement {
        let a = &self.a;
        GroupElement { a: [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]] }
    }

    pub fn scale(&self, s: f64) -> GroupElement {
        let mut c = self.a;
        for row in c.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        GroupElement { a: c }
    }

    pub fn add(&self, o: &GroupElement) -> GroupElement {
        let mut c = self.a;
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] += o.a[i][j];
            }
        }
        GroupElement { a: c }
    }

    pub fn det(&self) -> Complex64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    /// Max-entry deviation of `g^* g` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let id = GroupElement::identity();
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((p.a[i][j] - id.a[i][j]).norm());
            }
        }
        m
    }

    /// Nearest element of SU(2): keep the (a11, a12) row direction and
    /// rebuild the second row as (-conj a12, conj a11).
    pub fn reproject(&self) -> GroupElement {
        // Average the two row estimates of (alpha, beta) first.
        let alpha = 0.5 * (self.a[0][0] + self.a[1][1].conj());
        let beta = 0.5 * (self.a[0][1] - self.a[1][0].conj());
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        let (alpha, beta) = (alpha / n, beta / n);
        GroupElement { a: [[alpha, beta], [-beta.conj(), alpha.conj()]] }
    }

    pub fn max_abs_diff(&self, o: &GroupElement) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.a[i][j] - o.a[i][j]).norm());
            }
        }
        m
    }
}

/// Exponential of `u X + v Y`, closed form for a traceless
/// skew-Hermitian matrix: `cos|m| I + sin|m|/|m| M` with `|m| = sqrt(u^2+v^2)`.
pub fn exp_horizontal(u: f64, v: f64) -> GroupElement {
    let m = u.hypot(v);
    let (c, s) = if m < 1e-8 { (1.0 - 0.5 * m * m, 1.0 - m * m / 6.0) } else { (m.cos(), m.sin() / m) };
    let (u, v) = (s * u, s * v);
    GroupElement {
        a: [
            [Complex64::new(c, 0.0), Complex64::new(u, v)],
            [Complex64::new(-u, v), Complex64::new(c, 0.0)],
        ],
    }
}

/// Matrix of the point `(r, theta, z)`.
pub fn to_matrix(c: &CylCoord) -> GroupElement {
    let (sr, cr) = c.r.sin_cos();
    let e_z = Complex64::from_polar(1.0, c.z);
    let e_tz = Complex64::from_polar(1.0, c.theta - c.z);
    GroupElement { a: [[cr * e_z, sr * e_tz], [-sr * e_tz.conj(), cr * e_z.conj()]] }
}

/// Chart inverse. At `|a11| = 1` (theta undefined) or `|a11| = 0`
/// (z undefined) the canonical value 0 is used and the coordinates are
/// returned inside `Error::DegenerateChart`.
pub fn from_matrix(g: &GroupElement) -> Result<CylCoord> {
    let c = from_matrix_lossy(g);
    let m = g.a[0][0].norm();
    if m >= 1.0 - 1e-15 || m <= 1e-15 {
        return Err(Error::DegenerateChart { canonical: c });
    }
    Ok(c)
}

/// Chart inverse that always returns coordinates, applying the canonical
/// choices at degenerate points.
pub fn from_matrix_lossy(g: &GroupElement) -> CylCoord {
    let a11 = g.a[0][0];
    let a12 = g.a[0][1];
    // atan2 keeps full accuracy near both ends of [0, pi/2].
    let r = a12.norm().atan2(a11.norm());
    let z = if a11.norm() <= 1e-15 { 0.0 } else { a11.arg() };
    let theta = if a12.norm() <= 1e-15 { 0.0 } else { (a12.arg() + z).rem_euclid(TAU) };
    CylCoord { r, theta, z: reduce_angle(z) }
}

/// Only `(r, z)` of a group element; these are all a theta-independent
/// function needs.
pub fn radial_coords(g: &GroupElement) -> (f64, f64) {
    let a11 = g.a[0][0];
    let r = g.a[0][1].norm().atan2(a11.norm());
    let z = if a11.norm() <= 1e-300 { 0.0 } else { a11.arg() };
    (r, z)
}

/// Value with first and second partial derivatives in `(r, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub f: f64,
    pub fr: f64,
    pub fz: f64,
    pub frr: f64,
    pub frz: f64,
    pub fzz: f64,
}

impl Jet2 {
    pub fn constant(c: f64) -> Self {
        Jet2 { f: c, ..Default::default() }
    }

    pub fn is_finite(&self) -> bool {
        [self.f, self.fr, self.fz, self.frr, self.frz, self.fzz].iter().all(|v| v.is_finite())
    }

    /// Jet of `ln f` (requires `f > 0`).
    pub fn ln(&self) -> Jet2 {
        let f = self.f;
        let (lr, lz) = (self.fr / f, self.fz / f);
        Jet2 {
            f: f.ln(),
            fr: lr,
            fz: lz,
            frr: self.frr / f - lr * lr,
            frz: self.frz / f - lr * lz,
            fzz: self.fzz / f - lz * lz,
        }
    }

    pub fn scale(&self, s: f64) -> Jet2 {
        Jet2 {
            f: self.f * s,
            fr: self.fr * s,
            fz: self.fz * s,
            frr: self.frr * s,
            frz: self.frz * s,
            fzz: self.fzz * s,
        }
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            f: self.f + o.f,
            fr: self.fr + o.fr,
            fz: self.fz + o.fz,
            frr: self.frr + o.frr,
            frz: self.frz + o.frz,
            fzz: self.fzz + o.fzz,
        }
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&r) {
        return Err(Error::Domain(format!("r must lie in [0, pi/2], got {r}")));
    }
    Ok(())
}

/// Carré du champ `f_r^2 + tan^2 r f_z^2` at radius `r`.
pub fn gamma(j: &Jet2, r: f64) -> Result<f64> {
    check_r(r)?;
    if r == FRAC_PI_2 || r.cos() < 1e-300 {
        if j.fz != 0.0 {
            return Err(Error::SingularAtBoundary { r });
        }
        return Ok(j.fr * j.fr);
    }
    let tr = r.tan();
    Ok(j.fr * j.fr + tr * tr * j.fz * j.fz)
}

/// Iterated carré du champ as the sum of three squares.
pub fn gamma2(j: &Jet2, r: f64) -> Result<f64> {
    check_r(r)?;
    if r <= 0.0 || r >= FRAC_PI_2 {
        return Err(Error::SingularAtBoundary { r });
    }
    let (sr, cr) = r.sin_cos();
    let tr = sr / cr;
    let s2 = (2.0 * r).sin();
    let a = j.frr;
    let b = tr * tr * j.fzz - 2.0 / s2 * j.fr;
    let c = j.fz / (cr * cr) + tr * j.frz;
    Ok(a * a + b * b + 2.0 * c * c)
}

/// Sub-Laplacian of a theta-independent function:
/// `f_rr + 2 cot(2r) f_r + tan^2 r f_zz`.
pub fn sublaplacian(j: &Jet2, r: f64) -> Result<f64> {
    check_r(r)?;
    if r <= 0.0 || r >= FRAC_PI_2 {
        return Err(Error::SingularAtBoundary { r });
    }
    let tr = r.tan();
    Ok(j.frr + 2.0 / (2.0 * r).tan() * j.fr + tr * tr * j.fzz)
}

/// Haar integral of a general function of `(r, theta, z)` over the chart,
/// `d mu = sin(2r) dr dtheta dz / (4 pi^2)`.
pub fn haar_integrate<F>(f: F, spec: &QuadratureSpec) -> Result<QuadResult<f64>>
where
    F: Fn(CylCoord) -> f64,
{
    let inner = QuadratureSpec { abs_tol: spec.abs_tol * 0.1, rel_tol: spec.rel_tol * 0.1, ..*spec };
    let failure = RefCell::new(None);
    let outer = integrate_2d(
        |r, z| match integrate(|th| f(CylCoord { r, theta: th, z }), 0.0, TAU, &inner) {
            Ok(v) => v.value * (2.0 * r).sin() / (4.0 * PI * PI),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        (0.0, FRAC_PI_2),
        (-PI, PI),
        spec,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}

/// Haar integral of a theta-independent function with the reduced weight
/// `sin(2r) / (2 pi)` over `(r, z)`.
pub fn haar_integrate_rz<F>(f: F, spec: &QuadratureSpec) -> Result<QuadResult<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    integrate_2d(|r, z| f(r, z) * (2.0 * r).sin() / TAU, (0.0, FRAC_PI_2), (-PI, PI), spec)
}
