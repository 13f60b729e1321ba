//! Jacobi polynomials `P_k^{(0,n)}` and Chebyshev polynomials of the second
//! kind, evaluated by three-term recurrences.

use crate::error::{Error, Result};

/// Largest degree accepted by the checked entry points.
pub const MAX_DEGREE: usize = 200;
/// Largest second parameter accepted by the checked entry points.
pub const MAX_ORDER: usize = 4096;

/// Degree `k` and second Jacobi parameter `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyIndex {
    pub k: usize,
    pub n: usize,
}

impl PolyIndex {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k > MAX_DEGREE || n > MAX_ORDER {
            return Err(Error::TruncationCap(format!(
                "Jacobi index (k={k}, n={n}) exceeds caps (k <= {MAX_DEGREE}, n <= {MAX_ORDER})"
            )));
        }
        Ok(PolyIndex { k, n })
    }
}

/// Recurrence coefficients for `P_k = (a x + b) P_{k-1} - c P_{k-2}`, `k >= 2`.
#[inline]
fn coeffs(k: usize, n: usize) -> (f64, f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let s = 2.0 * k + n;
    let den = 2.0 * k * (k + n) * (s - 2.0);
    let a = (s - 1.0) * s * (s - 2.0) / den;
    let b = -(s - 1.0) * n * n / den;
    let c = 2.0 * (k - 1.0) * (k + n - 1.0) * s / den;
    (a, b, c)
}

/// Values and first two derivatives of `P_j^{(0,n)}(x)` for `j = 0..=kmax`.
/// Derivatives come from differentiating the recurrence.
#[derive(Debug, Clone, Default)]
pub struct JacobiTable {
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Vec<f64>,
}

impl JacobiTable {
    pub fn new(kmax: usize, n: usize, x: f64) -> Self {
        let mut t = JacobiTable::default();
        t.fill(kmax, n, x);
        t
    }

    /// Recompute in place, reusing the allocations.
    pub fn fill(&mut self, kmax: usize, n: usize, x: f64) {
        self.p.clear();
        self.dp.clear();
        self.d2p.clear();
        self.p.push(1.0);
        self.dp.push(0.0);
        self.d2p.push(0.0);
        if kmax == 0 {
            return;
        }
        let nf = n as f64;
        self.p.push(0.5 * ((nf + 2.0) * x - nf));
        self.dp.push(0.5 * (nf + 2.0));
        self.d2p.push(0.0);
        for k in 2..=kmax {
            let (a, b, c) = coeffs(k, n);
            let l = a * x + b;
            let p = l * self.p[k - 1] - c * self.p[k - 2];
            let dp = a * self.p[k - 1] + l * self.dp[k - 1] - c * self.dp[k - 2];
            let d2p = 2.0 * a * self.dp[k - 1] + l * self.d2p[k - 1] - c * self.d2p[k - 2];
            self.p.push(p);
            self.dp.push(dp);
            self.d2p.push(d2p);
        }
    }
}

fn jacobi_triple(idx: PolyIndex, x: f64) -> (f64, f64, f64) {
    let t = JacobiTable::new(idx.k, idx.n, x);
    (t.p[idx.k], t.dp[idx.k], t.d2p[idx.k])
}

/// `P_k^{(0,n)}(x)`, normalized so that `P_k^{(0,n)}(1) = 1`.
pub fn jacobi_p(idx: PolyIndex, x: f64) -> f64 {
    jacobi_triple(idx, x).0
}

/// Derivative of `P_k^{(0,n)}` in `x`.
pub fn jacobi_p_dx(idx: PolyIndex, x: f64) -> f64 {
    jacobi_triple(idx, x).1
}

/// Second derivative of `P_k^{(0,n)}` in `x`.
pub fn jacobi_p_dx2(idx: PolyIndex, x: f64) -> f64 {
    jacobi_triple(idx, x).2
}

/// Chebyshev polynomial of the second kind, `U_m(cos a) = sin((m+1)a)/sin a`.
/// The recurrence also serves `|x| > 1`.
pub fn chebyshev_u(m: usize, x: f64) -> f64 {
    let (mut u0, mut u1) = (1.0, 2.0 * x);
    if m == 0 {
        return u0;
    }
    for _ in 1..m {
        let u2 = 2.0 * x * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    u1
}
