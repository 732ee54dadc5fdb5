//! Small dense and banded kernels: tridiagonal elimination, banded LU with
//! partial pivoting, dense LU, cyclic Jacobi and Lanczos.

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Solves the tridiagonal system `sub[i]·x[i-1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`
/// in place (`sub[0]` and `sup[n-1]` are ignored). No pivoting: intended for
/// diagonally dominant matrices.
pub fn thomas_solve<T: Real>(sub: &[T], diag: &[T], sup: &[T], rhs: &mut [T]) {
    let n = rhs.len();
    assert!(n > 0 && diag.len() == n && sub.len() == n && sup.len() == n);
    let mut c = vec![T::zero(); n];
    let mut beta = diag[0];
    c[0] = sup[0] / beta;
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / beta;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - c[i] * rhs[i + 1];
    }
}

/// Solves `tridiag(-1, 2, -1)·x = rhs` in place, in O(n).
///
/// The elimination pivots of this matrix are `(i+2)/(i+1)`, so they are
/// written down directly instead of being accumulated.
pub fn solve_second_difference<T: Real>(rhs: &mut [T]) {
    let n = rhs.len();
    // forward: pivot_i = (i+2)/(i+1), multiplier -1/pivot_{i-1}
    for i in 1..n {
        let ratio = T::from_usize_lossy(i) / T::from_usize_lossy(i + 1);
        rhs[i] = rhs[i] + ratio * rhs[i - 1];
    }
    let last = n - 1;
    rhs[last] = rhs[last] * T::from_usize_lossy(n) / T::from_usize_lossy(n + 1);
    for i in (0..last).rev() {
        let ratio = T::from_usize_lossy(i + 1) / T::from_usize_lossy(i + 2);
        rhs[i] = (rhs[i] + rhs[i + 1]) * ratio;
    }
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, stored so
/// that LU with partial pivoting fits in place (fill up to `kl + ku`).
#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku, "({i},{j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if j + self.kl < i || j > i + self.ku {
            T::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j);
        self.data[k] = self.data[k] + v;
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// LU factorization with row partial pivoting. Fails only on an exactly
    /// zero pivot; near-singularity is reported through
    /// [`BandedLu::min_pivot_ratio`].
    pub fn factor(mut self) -> Result<BandedLu<T>> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.max_abs();
        let mut piv = vec![0usize; n];
        let mut min_pivot = T::infinity();
        let mut negatives = 0usize;
        let mut swaps = 0usize;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            piv[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                swaps += 1;
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            if pivot == T::zero() {
                return Err(Error::SingularJacobian { pivot: 0.0 });
            }
            if pivot < T::zero() {
                negatives += 1;
            }
            min_pivot = min_pivot.min(pivot.abs());
            for r in k + 1..=last_row {
                let ir = self.idx(r, k);
                let l = self.data[ir] / pivot;
                self.data[ir] = l;
                if l != T::zero() {
                    for j in k + 1..=last_col {
                        let kj = self.data[self.idx(k, j)];
                        let rj = self.idx(r, j);
                        self.data[rj] = self.data[rj] - l * kj;
                    }
                }
            }
        }
        let scale = if scale > T::zero() { scale } else { T::one() };
        Ok(BandedLu {
            lu: self,
            piv,
            min_pivot_ratio: min_pivot / scale,
            det_negative: (negatives + swaps) % 2 == 1,
        })
    }
}

/// Result of [`BandMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    lu: BandMatrix<T>,
    piv: Vec<usize>,
    min_pivot_ratio: T,
    det_negative: bool,
}

impl<T: Real> BandedLu<T> {
    /// `min |u_kk| / max |a_ij|`.
    pub fn min_pivot_ratio(&self) -> T {
        self.min_pivot_ratio
    }

    /// Sign of the determinant, `+1` or `-1`.
    pub fn det_sign(&self) -> i8 {
        if self.det_negative {
            -1
        } else {
            1
        }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let m = &self.lu;
        let n = m.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != T::zero() {
                for r in k + 1..=(k + m.kl).min(n - 1) {
                    b[r] = b[r] - m.data[m.idx(r, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + m.kl + m.ku).min(n - 1) {
                s = s - m.data[m.idx(k, j)] * b[j];
            }
            b[k] = s / m.data[m.idx(k, k)];
        }
    }
}

/// Dense row-major LU with partial pivoting (reference paths, small n).
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    n: usize,
    a: Vec<T>,
    piv: Vec<usize>,
    det_negative: bool,
    min_pivot_ratio: T,
}

impl<T: Real> DenseLu<T> {
    pub fn factor(n: usize, mut a: Vec<T>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let scale = if scale > T::zero() { scale } else { T::one() };
        let mut piv = vec![0; n];
        let mut negative = false;
        let mut min_pivot = T::infinity();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].abs().partial_cmp(&a[y * n + k].abs()).unwrap())
                .unwrap();
            piv[k] = p;
            if p != k {
                negative = !negative;
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[k * n + k];
            if pivot == T::zero() {
                return Err(Error::SingularJacobian { pivot: 0.0 });
            }
            if pivot < T::zero() {
                negative = !negative;
            }
            min_pivot = min_pivot.min(pivot.abs());
            for r in k + 1..n {
                let l = a[r * n + k] / pivot;
                a[r * n + k] = l;
                if l != T::zero() {
                    for j in k + 1..n {
                        a[r * n + j] = a[r * n + j] - l * a[k * n + j];
                    }
                }
            }
        }
        Ok(Self {
            n,
            a,
            piv,
            det_negative: negative,
            min_pivot_ratio: min_pivot / scale,
        })
    }

    pub fn det_sign(&self) -> i8 {
        if self.det_negative {
            -1
        } else {
            1
        }
    }

    pub fn min_pivot_ratio(&self) -> T {
        self.min_pivot_ratio
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for k in 0..n {
            for r in k + 1..n {
                b[r] = b[r] - self.a[r * n + k] * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..n {
                s = s - self.a[k * n + j] * b[j];
            }
            b[k] = s / self.a[k * n + k];
        }
    }
}

/// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations. `a` is row-major `n×n`; sweeps stop once the off-diagonal
/// Frobenius norm falls below `tol·‖A‖_F`.
///
/// Returns eigenvalues (unsorted, in diagonal order) and the eigenvectors as
/// the columns of a row-major `n×n` matrix.
pub fn jacobi_eigen<T: Real>(n: usize, mut a: Vec<T>, tol: T) -> (Vec<T>, Vec<T>) {
    assert_eq!(a.len(), n * n);
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let frob = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let target = tol * frob;
    for _sweep in 0..100 {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<T>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let tau = s / (T::one() + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r * n + p];
                        let arq = a[r * n + q];
                        let np = arp - s * (arq + tau * arp);
                        let nq = arq + s * (arp - tau * arq);
                        a[r * n + p] = np;
                        a[p * n + r] = np;
                        a[r * n + q] = nq;
                        a[q * n + r] = nq;
                    }
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - s * (vrq + tau * vrp);
                    v[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    let evals = (0..n).map(|i| a[i * n + i]).collect();
    (evals, v)
}

/// Ritz pair produced by [`symmetric_extremes`].
#[derive(Debug, Clone)]
pub struct RitzPair<T> {
    pub value: T,
    pub vector: Vec<T>,
    /// Residual estimate `|β_m · y_m|`.
    pub residual: T,
}

/// Largest-positive and most-negative eigenpairs of a symmetric linear
/// operator of dimension `n`, by Lanczos with full reorthogonalisation and
/// cyclic Jacobi on the projected tridiagonal matrix.
///
/// Returns `(positive, negative)`, each sorted by decreasing magnitude and
/// holding at most `want_pos` / `want_neg` pairs whose magnitude exceeds
/// `null_tol · max|θ|`. The Krylov dimension grows until every returned pair
/// has residual estimate `≤ tol · max|θ|` or the space is exhausted.
pub fn symmetric_extremes<T: Real>(
    n: usize,
    apply: impl Fn(&[T], &mut [T]),
    start: &[T],
    want_pos: usize,
    want_neg: usize,
    tol: T,
    null_tol: T,
) -> (Vec<RitzPair<T>>, Vec<RitzPair<T>>) {
    let want = want_pos + want_neg;
    let mut m = (4 * want + 40).max(60).min(n);
    loop {
        let (pos, neg, converged, exhausted) =
            lanczos_pass(n, &apply, start, m, want_pos, want_neg, tol, null_tol);
        if converged || exhausted || m == n {
            return (pos, neg);
        }
        m = (2 * m).min(n);
    }
}

#[allow(clippy::too_many_arguments)]
fn lanczos_pass<T: Real>(
    n: usize,
    apply: &impl Fn(&[T], &mut [T]),
    start: &[T],
    m: usize,
    want_pos: usize,
    want_neg: usize,
    tol: T,
    null_tol: T,
) -> (Vec<RitzPair<T>>, Vec<RitzPair<T>>, bool, bool) {
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<T> = Vec::with_capacity(m);
    let norm0 = dot(start, start).sqrt();
    basis.push(start.iter().map(|&x| x / norm0).collect());
    let mut w = vec![T::zero(); n];
    let mut exhausted = false;
    let mut last_beta = T::zero();
    for j in 0..m {
        apply(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        // full reorthogonalisation, applied twice
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                for (wi, &qi) in w.iter_mut().zip(q) {
                    *wi = *wi - c * qi;
                }
            }
        }
        let b = dot(&w, &w).sqrt();
        last_beta = b;
        let scale = alpha.iter().fold(T::zero(), |s, x| s.max(x.abs()));
        if b <= T::lit(1e3) * T::epsilon() * scale {
            exhausted = true;
            break;
        }
        if j + 1 < m {
            beta.push(b);
            basis.push(w.iter().map(|&x| x / b).collect());
        }
    }
    let k = alpha.len();
    let mut tri = vec![T::zero(); k * k];
    for i in 0..k {
        tri[i * k + i] = alpha[i];
        if i + 1 < k {
            tri[i * k + i + 1] = beta[i];
            tri[(i + 1) * k + i] = beta[i];
        }
    }
    let (theta, y) = jacobi_eigen(k, tri, T::lit(1e-14));
    let scale = theta.iter().fold(T::zero(), |s, x| s.max(x.abs()));
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| theta[b].partial_cmp(&theta[a]).unwrap());
    let make = |idx: usize| {
        let mut vec = vec![T::zero(); n];
        for (j, q) in basis.iter().enumerate().take(k) {
            let c = y[j * k + idx];
            for (vi, &qi) in vec.iter_mut().zip(q) {
                *vi = *vi + c * qi;
            }
        }
        let nv = dot(&vec, &vec).sqrt();
        vec.iter_mut().for_each(|x| *x = *x / nv);
        RitzPair {
            value: theta[idx],
            vector: vec,
            residual: (last_beta * y[(k - 1) * k + idx]).abs(),
        }
    };
    let floor = null_tol * scale;
    let pos: Vec<RitzPair<T>> = order
        .iter()
        .copied()
        .filter(|&i| theta[i] > floor)
        .take(want_pos)
        .map(make)
        .collect();
    let neg: Vec<RitzPair<T>> = order
        .iter()
        .rev()
        .copied()
        .filter(|&i| theta[i] < -floor)
        .take(want_neg)
        .map(make)
        .collect();
    let converged = pos.iter().chain(&neg).all(|p| p.residual <= tol * scale);
    (pos, neg, converged, exhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_from_band(b: &BandMatrix<f64>) -> Vec<f64> {
        let n = b.n();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = b.get(i, j);
            }
        }
        a
    }

    /// Naive Gaussian elimination with partial pivoting, returns det.
    fn naive_det(n: usize, mut a: Vec<f64>) -> f64 {
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs())).unwrap();
            if p != k {
                det = -det;
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            det *= a[k * n + k];
            for r in k + 1..n {
                let l = a[r * n + k] / a[k * n + k];
                for j in k..n {
                    a[r * n + j] -= l * a[k * n + j];
                }
            }
        }
        det
    }

    #[test]
    fn second_difference_solver_matches_thomas() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 37;
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = rhs.clone();
        solve_second_difference(&mut a);
        let mut b = rhs.clone();
        thomas_solve(&vec![-1.0; n], &vec![2.0; n], &vec![-1.0; n], &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_lu_solves_and_signs_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let n = 25 + trial;
            let (kl, ku) = (1 + trial % 3, 2 + trial % 2);
            let mut b = BandMatrix::zeros(n, kl, ku);
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    b.set(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            let dense = dense_from_band(&b);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut rhs = b.matvec(&x);
            let det = naive_det(n, dense);
            let lu = b.factor().unwrap();
            lu.solve_in_place(&mut rhs);
            for (u, v) in rhs.iter().zip(&x) {
                assert!((u - v).abs() < 1e-8, "trial {trial}");
            }
            assert_eq!(lu.det_sign() as f64, det.signum());
        }
    }

    #[test]
    fn dense_lu_agrees_with_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lu = DenseLu::factor(n, a.clone()).unwrap();
        assert_eq!(lu.det_sign() as f64, naive_det(n, a.clone()).signum());
        let mut b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let rhs = b.clone();
        lu.solve_in_place(&mut b);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| a[i * n + j] * b[j]).sum();
            assert!((r - rhs[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobi_diagonalises_symmetric_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let (vals, vecs) = jacobi_eigen(n, a.clone(), 1e-14);
        for k in 0..n {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i * n + j] * vecs[j * n + k]).sum();
                assert!((av - vals[k] * vecs[i * n + k]).abs() < 1e-10);
            }
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        assert!((vals.iter().sum::<f64>() - trace).abs() < 1e-12);
    }

    #[test]
    fn lanczos_finds_extremes_of_diagonal_operator() {
        let n = 300;
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let k = (i / 2 + 1) as f64;
                if i % 2 == 0 {
                    1.0 / k.powi(4)
                } else {
                    -0.5 / k.powi(4)
                }
            })
            .collect();
        let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        let (pos, neg) = symmetric_extremes(
            n,
            |x: &[f64], y: &mut [f64]| {
                for i in 0..n {
                    y[i] = d[i] * x[i];
                }
            },
            &start,
            5,
            4,
            1e-12,
            1e-10,
        );
        for (k, p) in pos.iter().enumerate() {
            let want = 1.0 / ((k + 1) as f64).powi(4);
            assert!((p.value - want).abs() < 1e-12 * want.max(1e-3), "{k}: {}", p.value);
        }
        for (k, p) in neg.iter().enumerate() {
            let want = -0.5 / ((k + 1) as f64).powi(4);
            assert!((p.value - want).abs() < 1e-12, "{k}: {}", p.value);
        }
    }
}
