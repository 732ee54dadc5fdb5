//! The solution operator Λ of `-u'' = e, u(0) = u(1) = 0`, its square, the
//! discrete beam operator `K = A²` (`A` the Dirichlet second difference),
//! the weighted mass operator, and the determinant sign of `I - μK⁻¹M`.
//!
//! Every fourth-order solve goes through the factored form
//! `[[T, -I], [-h⁴D, T]]` with `T = tridiag(-1, 2, -1)`: its entries are
//! O(1), whereas `K` itself has entries of size `h⁻⁴`.

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFn};
use crate::linalg::{solve_second_difference, BandMatrix, BandedLu, DenseLu};
use crate::scalar::Real;

/// Pivot ratio below which a factorization is declared singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

/// Singularity threshold for the block systems on a grid with `n` interior
/// nodes. Their smallest pivot at an exact eigenvalue settles at a rounding
/// floor that grows like `n²ε`, so the fixed ratio is raised accordingly.
pub fn singular_threshold<T: Real>(n: usize) -> T {
    let n = T::from_usize_lossy(n);
    T::lit(SINGULAR_PIVOT_RATIO).max(T::lit(64.0) * T::epsilon() * n * n)
}

/// Relative offset used to probe for a nearby eigenvalue in
/// [`det_sign_psi`].
pub const EIGEN_PROBE: f64 = 1e-8;

/// `A = (1/h²)·tridiag(-1, 2, -1)` on interior values, i.e. `-u''` with
/// `u(0) = u(1) = 0`. Symmetric positive definite.
#[derive(Debug, Clone, Copy)]
pub struct SecondDiffOperator<T> {
    grid: Grid<T>,
}

impl<T: Real> SecondDiffOperator<T> {
    pub fn new(grid: Grid<T>) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let inv_h2 = T::one() / (self.grid.h() * self.grid.h());
        let mut y = tri_apply(x);
        y.iter_mut().for_each(|v| *v = *v * inv_h2);
        y
    }

    /// `A⁻¹ b` by tridiagonal elimination.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let h2 = self.grid.h() * self.grid.h();
        let mut x: Vec<T> = b.iter().map(|&v| v * h2).collect();
        solve_second_difference(&mut x);
        x
    }

    /// Eigenvalue `(2/h²)(1 - cos(jπh))` of the mode `sin(jπt)`.
    pub fn eigenvalue(&self, j: usize) -> T {
        let h = self.grid.h();
        T::lit(2.0) / (h * h) * (T::one() - (T::from_usize_lossy(j) * T::PI() * h).cos())
    }
}

/// `K = A∘A`: the discrete `u''''` with `u = u'' = 0` at both ends.
#[derive(Debug, Clone, Copy)]
pub struct StiffnessOperator<T> {
    a: SecondDiffOperator<T>,
}

impl<T: Real> StiffnessOperator<T> {
    pub fn new(grid: Grid<T>) -> Self {
        Self {
            a: SecondDiffOperator::new(grid),
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.a.apply(&self.a.apply(x))
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.a.solve(&self.a.solve(b))
    }

    pub fn eigenvalue(&self, j: usize) -> T {
        let l = self.a.eigenvalue(j);
        l * l
    }
}

/// Pointwise multiplication by `m(t_i)` at interior nodes.
#[derive(Debug, Clone)]
pub struct MassOperator<T> {
    weight: SampledFn<T>,
}

impl<T: Real> MassOperator<T> {
    pub fn new(weight: SampledFn<T>) -> Self {
        Self { weight }
    }

    pub fn diag(&self) -> &[T] {
        self.weight.interior()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(self.diag()).map(|(&a, &m)| a * m).collect()
    }
}

/// `tridiag(-1, 2, -1)·x` with zero Dirichlet extension.
pub(crate) fn tri_apply<T: Real>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let two = T::lit(2.0);
    (0..n)
        .map(|i| {
            let l = if i > 0 { x[i - 1] } else { T::zero() };
            let r = if i + 1 < n { x[i + 1] } else { T::zero() };
            two * x[i] - l - r
        })
        .collect()
}

/// Λ(e): the solution of `-u'' = e`, `u(0) = u(1) = 0`, in O(n).
pub fn lambda_solve<T: Real>(e: &SampledFn<T>) -> SampledFn<T> {
    let grid = *e.grid();
    let x = SecondDiffOperator::new(grid).solve(e.interior());
    SampledFn::from_interior(grid, &x)
}

/// Λ²(e). The intermediate `Λ(e) = -u''` vanishes at both ends, so the
/// result satisfies all four boundary conditions.
pub fn lambda2<T: Real>(e: &SampledFn<T>) -> SampledFn<T> {
    lambda_solve(&lambda_solve(e))
}

/// `T_μ(u) = μ Λ²(m u)`.
pub fn t_mu<T: Real>(u: &SampledFn<T>, mu: T, m: &SampledFn<T>) -> Result<SampledFn<T>> {
    Ok(lambda2(&u.mul(m)?).scale(mu))
}

/// Factorization of `K - D` (`D` diagonal) in the block form
/// `[[T, -I], [-h⁴D, T]]`, unknowns interleaved node by node.
#[derive(Debug, Clone)]
pub struct ShiftedBeam<T> {
    grid: Grid<T>,
    lu: BandedLu<T>,
}

impl<T: Real> ShiftedBeam<T> {
    /// `d` holds the interior diagonal of `D`.
    pub fn factor(grid: Grid<T>, d: &[T]) -> Result<Self> {
        let n = grid.n_interior();
        assert_eq!(d.len(), n);
        let h4 = grid.h().powi(4);
        let mut b = BandMatrix::zeros(2 * n, 2, 2);
        let two = T::lit(2.0);
        for i in 0..n {
            let (rx, ry) = (2 * i, 2 * i + 1);
            b.set(rx, 2 * i, two);
            b.set(rx, 2 * i + 1, -T::one());
            b.set(ry, 2 * i, -h4 * d[i]);
            b.set(ry, 2 * i + 1, two);
            if i > 0 {
                b.set(rx, 2 * (i - 1), -T::one());
                b.set(ry, 2 * (i - 1) + 1, -T::one());
            }
            if i + 1 < n {
                b.set(rx, 2 * (i + 1), -T::one());
                b.set(ry, 2 * (i + 1) + 1, -T::one());
            }
        }
        Ok(Self {
            grid,
            lu: b.factor()?,
        })
    }

    /// Sign of `det(K - D)`.
    pub fn det_sign(&self) -> i8 {
        self.lu.det_sign()
    }

    pub fn min_pivot_ratio(&self) -> T {
        self.lu.min_pivot_ratio()
    }

    pub fn is_near_singular(&self) -> bool {
        self.min_pivot_ratio() < singular_threshold(self.grid.n_interior())
    }

    /// Solves `(I - Λ²D) x = r`.
    pub fn solve_fixed_point(&self, r: &[T]) -> Vec<T> {
        let n = self.grid.n_interior();
        let tr = tri_apply(r);
        let mut rhs = vec![T::zero(); 2 * n];
        for i in 0..n {
            rhs[2 * i] = tr[i];
        }
        self.lu.solve_in_place(&mut rhs);
        (0..n).map(|i| rhs[2 * i]).collect()
    }

    /// Solves `(K - D) x = b`.
    pub fn solve_strong(&self, b: &[T]) -> Vec<T> {
        let n = self.grid.n_interior();
        let h4 = self.grid.h().powi(4);
        let mut rhs = vec![T::zero(); 2 * n];
        for i in 0..n {
            rhs[2 * i + 1] = h4 * b[i];
        }
        self.lu.solve_in_place(&mut rhs);
        (0..n).map(|i| rhs[2 * i]).collect()
    }
}

/// Bordered system for Newton steps with a free parameter:
///
/// ```text
/// (I - Λ²D) δu - Λ²(col) δμ = r
///       row · δu + corner δμ = r_c
/// ```
///
/// The dense border is made banded by carrying a running sum of
/// `row · δu` and a copy of `δμ` at every node, so the whole system is
/// factored by banded LU with partial pivoting and stays well posed when
/// `I - Λ²D` itself is singular (vertical branches, bifurcation points).
#[derive(Debug, Clone)]
pub struct BorderedBeam<T> {
    grid: Grid<T>,
    lu: BandedLu<T>,
    row_scale: T,
}

impl<T: Real> BorderedBeam<T> {
    pub fn factor(grid: Grid<T>, d: &[T], col: &[T], row: &[T], corner: T) -> Result<Self> {
        let n = grid.n_interior();
        assert!(d.len() == n && col.len() == n && row.len() == n);
        let h4 = grid.h().powi(4);
        let row_max = row.iter().fold(corner.abs(), |m, v| m.max(v.abs()));
        let row_scale = if row_max > T::zero() { T::one() / row_max } else { T::one() };
        let two = T::lit(2.0);
        let mut b = BandMatrix::zeros(4 * n, 4, 4);
        for i in 0..n {
            let (u, y, s, p) = (4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3);
            // T δu - ŷ
            b.set(u, u, two);
            b.set(u, y, -T::one());
            // T ŷ - h⁴ D δu - h⁴ col δμ
            b.set(y, y, two);
            b.set(y, u, -h4 * d[i]);
            b.set(y, p, -h4 * col[i]);
            if i > 0 {
                b.set(u, u - 4, -T::one());
                b.set(y, y - 4, -T::one());
                b.set(s, s - 4, -T::one());
            }
            if i + 1 < n {
                b.set(u, u + 4, -T::one());
                b.set(y, y + 4, -T::one());
            }
            // running sum s_i = s_{i-1} + row_i δu_i
            b.set(s, s, T::one());
            b.set(s, u, -row[i] * row_scale);
            if i + 1 < n {
                b.set(p, p, T::one());
                b.set(p, p + 4, -T::one());
            } else {
                b.set(p, s, T::one());
                b.set(p, p, corner * row_scale);
            }
        }
        Ok(Self {
            grid,
            lu: b.factor()?,
            row_scale,
        })
    }

    pub fn min_pivot_ratio(&self) -> T {
        self.lu.min_pivot_ratio()
    }

    pub fn is_near_singular(&self) -> bool {
        self.min_pivot_ratio() < singular_threshold(self.grid.n_interior())
    }

    /// Returns `(δu, δμ)`.
    pub fn solve(&self, r: &[T], r_c: T) -> (Vec<T>, T) {
        let n = self.grid.n_interior();
        let tr = tri_apply(r);
        let mut rhs = vec![T::zero(); 4 * n];
        for i in 0..n {
            rhs[4 * i] = tr[i];
        }
        rhs[4 * n - 1] = r_c * self.row_scale;
        self.lu.solve_in_place(&mut rhs);
        let du = (0..n).map(|i| rhs[4 * i]).collect();
        (du, rhs[4 * n - 1])
    }
}

fn mass_shift<T: Real>(mu: T, m: &SampledFn<T>) -> Vec<T> {
    m.interior().iter().map(|&w| mu * w).collect()
}

/// Sign of `det(I - μK⁻¹M)`: the degree of `I - T_μ` on the discretised
/// space.
///
/// Since `det K > 0`, this equals the sign of `det(K - μM)`, which is read
/// off the banded LU of the block form. Fails with `OnEigenvalue` when a
/// pivot collapses or when the sign differs between `μ(1 ± 1e-8)`.
pub fn det_sign_psi<T: Real>(mu: T, m: &SampledFn<T>) -> Result<i8> {
    if mu == T::zero() {
        return Ok(1);
    }
    let grid = *m.grid();
    let at = |x: T| -> Result<ShiftedBeam<T>> {
        ShiftedBeam::factor(grid, &mass_shift(x, m)).map_err(|_| Error::OnEigenvalue {
            mu: mu.to_f64_lossy(),
        })
    };
    let centre = at(mu)?;
    if centre.is_near_singular() {
        return Err(Error::OnEigenvalue {
            mu: mu.to_f64_lossy(),
        });
    }
    let probe = T::lit(EIGEN_PROBE);
    let lo = at(mu * (T::one() - probe))?.det_sign();
    let hi = at(mu * (T::one() + probe))?.det_sign();
    if lo != hi {
        return Err(Error::OnEigenvalue {
            mu: mu.to_f64_lossy(),
        });
    }
    Ok(centre.det_sign())
}

/// Dense reference route for [`det_sign_psi`]: forms `I - μK⁻¹M`
/// explicitly and factors it by dense LU with partial pivoting. O(n³);
/// meant for small grids.
pub fn det_sign_psi_dense<T: Real>(mu: T, m: &SampledFn<T>) -> Result<i8> {
    let grid = *m.grid();
    let n = grid.n_interior();
    let k = StiffnessOperator::new(grid);
    let mut a = vec![T::zero(); n * n];
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = m.interior()[j];
        let col = k.solve(&e);
        for i in 0..n {
            a[i * n + j] = -mu * col[i];
        }
        a[j * n + j] = a[j * n + j] + T::one();
    }
    let lu = DenseLu::factor(n, a).map_err(|_| Error::OnEigenvalue {
        mu: mu.to_f64_lossy(),
    })?;
    if lu.min_pivot_ratio() < T::lit(SINGULAR_PIVOT_RATIO) {
        return Err(Error::OnEigenvalue {
            mu: mu.to_f64_lossy(),
        });
    }
    Ok(lu.det_sign())
}
