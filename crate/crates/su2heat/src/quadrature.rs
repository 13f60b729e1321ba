//! Adaptive Gauss-Kronrod (7/15) quadrature, nested 2D rules and
//! semi-infinite transforms.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of interval bisections.
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-12, max_refinements: 4000 }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_refinements: usize) -> Result<Self> {
        if !(abs_tol > 0.0 && rel_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        Ok(QuadratureSpec { abs_tol, rel_tol, max_refinements })
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_err: f64,
    pub n_eval: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = fc.norm() * WGK[7];
    let mut fv = [(T::zero(), T::zero()); 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = (f1, f2);
        resk = resk + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            resg = resg + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j].0 - mean).norm() + (fv[j].1 - mean).norm());
    }
    let result = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((resk - resg) * h).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Adaptive integration over `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate_partitioned(f, &[a, b], spec)
}

/// Adaptive integration over consecutive intervals given by `points`.
/// Useful for oscillatory integrands where a uniform initial split helps.
pub fn integrate_partitioned<T, F>(mut f: F, points: &[f64], spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if points.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    let mut n_eval = 0;
    for w in points.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        n_eval += 15;
        total = total + v;
        total_err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, err: e });
    }
    let mut refinements = 0;
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.norm());
        if total_err <= tol {
            break;
        }
        if !total_err.is_finite() {
            return Err(Error::QuadratureNotConverged { value: total.norm(), abs_err: total_err });
        }
        if refinements >= spec.max_refinements {
            return Err(Error::QuadratureNotConverged { value: total.norm(), abs_err: total_err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(Error::QuadratureNotConverged { value: total.norm(), abs_err: total_err });
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        n_eval += 30;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, err: e2 });
        refinements += 1;
    }
    // Re-sum to shed drift from incremental updates.
    let mut value = T::zero();
    let mut err = 0.0;
    for p in heap.iter() {
        value = value + p.value;
        err += p.err;
    }
    Ok(QuadResult { value, abs_err: err, n_eval })
}

/// Integral over `[a, inf)` through the map `x = a + s/(1-s)`.
pub fn integrate_to_infinity<T, F>(mut f: F, a: f64, spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate(
        |s: f64| {
            if s >= 1.0 {
                return T::zero();
            }
            let u = 1.0 - s;
            let x = a + s / u;
            let v = f(x);
            if v.norm() == 0.0 {
                T::zero()
            } else {
                v * (1.0 / (u * u))
            }
        },
        0.0,
        1.0,
        spec,
    )
}

/// Nested 2D integral of `f(x, y)` over a rectangle, outer in `x`.
pub fn integrate_2d<F>(f: F, x: (f64, f64), y: (f64, f64), spec: &QuadratureSpec) -> Result<QuadResult<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    let inner_spec = QuadratureSpec {
        abs_tol: spec.abs_tol / (x.1 - x.0).abs().max(1.0) * 0.1,
        rel_tol: spec.rel_tol * 0.1,
        max_refinements: spec.max_refinements,
    };
    let mut inner_err = 0.0f64;
    let mut failure = None;
    let mut n_inner = 0;
    let outer = integrate(
        |xv| match integrate(|yv| f(xv, yv), y.0, y.1, &inner_spec) {
            Ok(r) => {
                inner_err = inner_err.max(r.abs_err);
                n_inner += r.n_eval;
                r.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        x.0,
        x.1,
        spec,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(QuadResult {
        value: outer.value,
        abs_err: outer.abs_err + inner_err * (x.1 - x.0).abs(),
        n_eval: n_inner,
    })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on the
/// three-term recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
