//! Symmetric tridiagonal matrices: Sturm counts, bisection, linear solves
//! and inverse iteration.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// A symmetric tridiagonal matrix stored as its diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length must be n-1");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `lambda`.
    ///
    /// Counts negative pivots of the LDLᵀ factorisation of `A − λI`; a zero
    /// pivot is nudged off zero by a relative amount so the recurrence stays
    /// finite.
    pub fn count_below(&self, lambda: f64) -> usize {
        let n = self.diag.len();
        if n == 0 {
            return 0;
        }
        let mut count = 0;
        let mut q = self.diag[0] - lambda;
        for i in 0..n {
            if i > 0 {
                let e = self.off[i - 1];
                q = (self.diag[i] - lambda) - e * e / q;
            }
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + lambda.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `index`-th smallest eigenvalue (zero based), bracketed by
    /// bisection until the bracket is narrower than
    /// `rel_tol·max(1, |λ|)`.
    pub fn eigenvalue(&self, index: usize, rel_tol: f64) -> f64 {
        assert!(index < self.len(), "eigenvalue index out of range");
        let (mut lo, mut hi) = self.gershgorin();
        lo -= 1.0;
        hi += 1.0;
        self.bisect(index, lo, hi, rel_tol)
    }

    /// The `k` smallest eigenvalues in ascending order.
    pub fn lowest(&self, k: usize, rel_tol: f64) -> Vec<f64> {
        assert!(k <= self.len(), "asked for more eigenvalues than the matrix has");
        let (glo, ghi) = self.gershgorin();
        let mut out = Vec::with_capacity(k);
        let mut lo = glo - 1.0;
        for index in 0..k {
            let lam = self.bisect(index, lo, ghi + 1.0, rel_tol);
            out.push(lam);
            // every later eigenvalue lies above the bracket's lower end
            lo = lo.max(lam - rel_tol * lam.abs().max(1.0) * 4.0);
        }
        out
    }

    fn bisect(&self, index: usize, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= rel_tol * mid.abs().max(1.0) {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Solves `(A + shift·I) x = rhs` with the Thomas algorithm. Returns `None`
    /// on a zero pivot.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        let lower = self.off.clone();
        let diag: Vec<f64> = self.diag.iter().map(|d| d + shift).collect();
        solve_tridiagonal(&lower, &diag, &self.off, rhs).filter(|_| n > 0)
    }

    /// Unit-norm eigenvector for an eigenvalue `lambda` already known to high
    /// accuracy, by inverse iteration. The sign is fixed so that the first
    /// entry of largest magnitude in the leading tenth of the vector is
    /// positive, which for radial problems means "positive near the origin".
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let scale = self.diag.iter().fold(1.0f64, |a, d| a.max(d.abs()));
        // shift slightly off the eigenvalue so the solve is not singular
        let mut shift = -lambda + 1e-13 * scale;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        normalize(&mut x);
        for _ in 0..6 {
            let y = loop {
                match self.solve_shifted(shift, &x) {
                    Some(y) if y.iter().all(|v| v.is_finite()) => break y,
                    _ => shift *= 1.0 + 1e-6,
                }
            };
            x = y;
            normalize(&mut x);
        }
        let head = (n / 10).max(1);
        let pivot = x[..head]
            .iter()
            .copied()
            .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if pivot < 0.0 {
            for v in &mut x {
                *v = -*v;
            }
        }
        x
    }
}

/// LU factors of `A + shift·I` for repeated solves.
#[derive(Debug, Clone)]
pub struct ShiftedFactor {
    off: Vec<f64>,
    // c'_i of the Thomas sweep and reciprocal pivots
    c: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl ShiftedFactor {
    /// Returns `None` on a zero pivot.
    pub fn new(a: &SymTridiag, shift: f64) -> Option<Self> {
        let n = a.len();
        let mut c = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let mut denom = a.diag[i] + shift;
            if i > 0 {
                denom -= a.off[i - 1] * c[i - 1];
            }
            if denom == 0.0 || !denom.is_finite() {
                return None;
            }
            inv_pivot[i] = 1.0 / denom;
            if i + 1 < n {
                c[i] = a.off[i] * inv_pivot[i];
            }
        }
        Some(Self { off: a.off.clone(), c, inv_pivot })
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        assert_eq!(n, self.inv_pivot.len());
        if n == 0 {
            return;
        }
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.off[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c[i] * rhs[i + 1];
        }
    }
}

fn normalize(x: &mut [f64]) {
    let norm = sqrt(x.iter().map(|v| v * v).sum::<f64>());
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
}

/// Thomas algorithm for a general tridiagonal system with sub-diagonal
/// `lower` (`lower[i]` couples rows `i+1` and `i`), diagonal `diag` and
/// super-diagonal `upper`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return None;
    }
    if n > 1 {
        c[0] = upper[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if denom == 0.0 {
            return None;
        }
        if i + 1 < n {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn three_by_three_laplacian() {
        let m = laplacian(3);
        let ev = m.lowest(3, 1e-14);
        let s2 = 2f64.sqrt();
        assert_relative_eq!(ev[0], 2.0 - s2, epsilon = 1e-13);
        assert_relative_eq!(ev[1], 2.0, epsilon = 1e-13);
        assert_relative_eq!(ev[2], 2.0 + s2, epsilon = 1e-13);
    }

    #[test]
    fn toeplitz_closed_form() {
        let n = 60;
        let m = laplacian(n);
        let ev = m.lowest(n, 1e-14);
        for (j, lam) in ev.iter().enumerate() {
            let k = (j + 1) as f64;
            let exact = 2.0 - 2.0 * (k * core::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert_relative_eq!(*lam, exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn inverse_iteration_gives_eigenvector() {
        let n = 200;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.001 * (i as f64).powi(2) / 100.0).collect();
        let m = SymTridiag::new(diag, vec![-1.0; n - 1]);
        for index in 0..3 {
            let lam = m.eigenvalue(index, 1e-15);
            let v = m.eigenvector(lam);
            let av = m.apply(&v);
            let res: f64 = av.iter().zip(&v).map(|(a, x)| (a - lam * x).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-10, "index {index}: residual {res}");
        }
    }

    #[test]
    fn thomas_solves() {
        let n = 50;
        let m = laplacian(n);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = m.apply(&x);
        let y = m.solve_shifted(0.0, &b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn factor_matches_thomas() {
        let n = 40;
        let m = laplacian(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let f = ShiftedFactor::new(&m, 0.3).unwrap();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let y = m.solve_shifted(0.3, &b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn diagonal_shift_moves_every_eigenvalue(shift in -5.0f64..5.0, seed in 0u64..1000) {
            let n = 40;
            let diag: Vec<f64> = (0..n).map(|i| ((i as u64 * 31 + seed) % 17) as f64 * 0.1).collect();
            let off: Vec<f64> = (0..n - 1).map(|i| -1.0 - ((i as u64 + seed) % 5) as f64 * 0.05).collect();
            let a = SymTridiag::new(diag.clone(), off.clone());
            let b = SymTridiag::new(diag.iter().map(|d| d + shift).collect(), off);
            let ea = a.lowest(5, 1e-14);
            let eb = b.lowest(5, 1e-14);
            for (x, y) in ea.iter().zip(&eb) {
                prop_assert!((y - x - shift).abs() < 1e-11);
            }
        }

        #[test]
        fn count_is_monotone(l1 in -3.0f64..7.0, dl in 0.0f64..3.0) {
            let m = laplacian(30);
            prop_assert!(m.count_below(l1) <= m.count_below(l1 + dl));
        }
    }
}
