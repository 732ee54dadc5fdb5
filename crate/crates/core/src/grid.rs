//! Uniform grids on [0, 1], sampled functions, finite-difference
//! derivatives and the C³-type norm `max|u| + max|u'| + max|u''| + max|u'''|`.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{max_abs, Real};

/// Smallest admissible number of interior nodes.
pub const MIN_INTERIOR: usize = 8;

/// Uniform grid `t_i = i·h`, `i = 0..=n_interior+1`, `h = 1/(n_interior+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    n_interior: usize,
    h: T,
}

/// Builds a grid with `n_interior` interior nodes.
pub fn make_grid<T: Real>(n_interior: usize) -> Result<Grid<T>> {
    Grid::new(n_interior)
}

impl<T: Real> Grid<T> {
    pub fn new(n_interior: usize) -> Result<Self> {
        if n_interior < MIN_INTERIOR {
            return Err(Error::TooCoarse {
                n: n_interior,
                min: MIN_INTERIOR,
            });
        }
        Ok(Self {
            n_interior,
            h: T::one() / T::from_usize_lossy(n_interior + 1),
        })
    }

    #[inline]
    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// Total number of nodes, endpoints included.
    #[inline]
    pub fn len(&self) -> usize {
        self.n_interior + 2
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    /// Index of the right endpoint.
    #[inline]
    pub fn last(&self) -> usize {
        self.n_interior + 1
    }

    /// Node `t_i`; computed as `i / (n+1)` so both endpoints are exact.
    #[inline]
    pub fn node(&self, i: usize) -> T {
        T::from_usize_lossy(i) / T::from_usize_lossy(self.n_interior + 1)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Same node count (the spacing is then identical).
    pub fn same_as(&self, other: &Self) -> bool {
        self.n_interior == other.n_interior
    }

    /// The grid with half the spacing: `2(n+1) - 1` interior nodes.
    pub fn refined(&self) -> Self {
        Self {
            n_interior: 2 * (self.n_interior + 1) - 1,
            h: self.h / T::lit(2.0),
        }
    }
}

/// A function on [0, 1] held as values at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFn<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> SampledFn<T> {
    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.len()],
        }
    }

    /// Wraps interior values, padding both endpoints with zero.
    pub fn from_interior(grid: Grid<T>, interior: &[T]) -> Self {
        assert_eq!(interior.len(), grid.n_interior(), "interior length");
        let mut values = Vec::with_capacity(grid.len());
        values.push(T::zero());
        values.extend_from_slice(interior);
        values.push(T::zero());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Values at interior nodes `1..=n`.
    #[inline]
    pub fn interior(&self) -> &[T] {
        &self.values[1..=self.grid.n_interior()]
    }

    #[inline]
    pub fn interior_mut(&mut self) -> &mut [T] {
        let n = self.grid.n_interior();
        &mut self.values[1..=n]
    }

    pub fn max_abs(&self) -> T {
        max_abs(&self.values)
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(T::one(), other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(T::one(), other, -T::one())
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| x * y)
                .collect(),
        })
    }

    /// Piecewise-linear interpolation at `t ∈ [0, 1]`.
    pub fn interpolate(&self, t: T) -> T {
        interpolate_linear(&self.values, self.grid.h(), t)
    }

    /// Cubic (four-point Lagrange) interpolation at `t ∈ [0, 1]`.
    pub fn interpolate_cubic(&self, t: T) -> T {
        interpolate_cubic(&self.values, self.grid.h(), t)
    }

    /// Resamples onto [`Grid::refined`] by cubic interpolation at the new
    /// midpoints; existing samples are kept exactly.
    pub fn refined(&self) -> Self {
        let fine = self.grid.refined();
        let values = (0..fine.len())
            .map(|j| {
                if j % 2 == 0 {
                    self.values[j / 2]
                } else {
                    self.interpolate_cubic(fine.node(j))
                }
            })
            .collect();
        Self { grid: fine, values }
    }

    /// Discrete L² inner product `h Σ u_i v_i` over interior nodes.
    pub fn inner(&self, other: &Self) -> T {
        self.grid.h()
            * self
                .interior()
                .iter()
                .zip(other.interior())
                .map(|(&x, &y)| x * y)
                .sum::<T>()
    }

    /// Two-column CSV `t,value`, 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(48 * self.values.len());
        out.push_str("t,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e}",
                self.grid.node(i).to_f64_lossy(),
                v.to_f64_lossy()
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// Parses the CSV written by [`to_csv_string`](Self::to_csv_string).
    /// The node column must describe a uniform grid on [0, 1].
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::InvalidInput("expected two columns t,value".into()));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
            };
            ts.push(parse(&rec[0])?);
            vs.push(parse(&rec[1])?);
        }
        if ts.len() < MIN_INTERIOR + 2 {
            return Err(Error::TooCoarse {
                n: ts.len().saturating_sub(2),
                min: MIN_INTERIOR,
            });
        }
        let grid = Grid::<T>::new(ts.len() - 2)?;
        for (i, &t) in ts.iter().enumerate() {
            if (t - grid.node(i).to_f64_lossy()).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "row {i}: t = {t} does not lie on a uniform grid over [0, 1]"
                )));
            }
        }
        Self::from_values(grid, vs.into_iter().map(T::lit).collect())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

/// Four-point Lagrange interpolation on uniform samples, with the stencil
/// shifted inward next to the ends.
pub(crate) fn interpolate_cubic<T: Real>(values: &[T], h: T, t: T) -> T {
    let last = values.len() - 1;
    let x = (t / h).max(T::zero());
    let i = x.floor().to_usize().unwrap_or(0).min(last - 1);
    let start = i.saturating_sub(1).min(last - 3);
    let s = x - T::from_usize_lossy(start);
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let six = T::lit(6.0);
    let l0 = -(s - one) * (s - two) * (s - three) / six;
    let l1 = s * (s - two) * (s - three) / two;
    let l2 = -s * (s - one) * (s - three) / two;
    let l3 = s * (s - one) * (s - two) / six;
    l0 * values[start] + l1 * values[start + 1] + l2 * values[start + 2] + l3 * values[start + 3]
}

pub(crate) fn interpolate_linear<T: Real>(values: &[T], h: T, t: T) -> T {
    let last = values.len() - 1;
    let x = (t / h).max(T::zero());
    let i = x.floor().to_usize().unwrap_or(0).min(last - 1);
    let w = x - T::from_usize_lossy(i);
    values[i] * (T::one() - w) + values[i + 1] * w
}

/// Derivative order handled by [`derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DerivOrder {
    First = 1,
    Second = 2,
    Third = 3,
}

impl DerivOrder {
    pub fn from_u8(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            3 => Ok(Self::Third),
            _ => Err(Error::InvalidInput(format!("derivative order {k} not in {{1,2,3}}"))),
        }
    }
}

/// Finite-difference weights for the `order`-th derivative at 0 using the
/// integer node offsets `offsets` (unit spacing); Fornberg's recursion.
pub fn fd_weights(offsets: &[i32], order: usize) -> Vec<f64> {
    let npts = offsets.len();
    assert!(npts > order, "need more nodes than the derivative order");
    let x: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let mut c = vec![vec![0.0; order + 1]; npts];
    let mut c1 = 1.0;
    let mut c4 = x[0];
    c[0][0] = 1.0;
    for i in 1..npts {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i];
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Stencil offsets for node `i` of `0..=last`: centred in the bulk,
/// shifted near and one-sided at the endpoints, all second-order.
fn stencil_offsets(order: DerivOrder, i: usize, last: usize) -> Vec<i32> {
    match order {
        DerivOrder::First => {
            if i == 0 {
                vec![0, 1, 2]
            } else if i == last {
                vec![-2, -1, 0]
            } else {
                vec![-1, 0, 1]
            }
        }
        DerivOrder::Second => {
            if i == 0 {
                vec![0, 1, 2, 3]
            } else if i == last {
                vec![-3, -2, -1, 0]
            } else {
                vec![-1, 0, 1]
            }
        }
        DerivOrder::Third => {
            if i == 0 {
                vec![0, 1, 2, 3, 4]
            } else if i == 1 {
                vec![-1, 0, 1, 2, 3]
            } else if i + 1 == last {
                vec![-3, -2, -1, 0, 1]
            } else if i == last {
                vec![-4, -3, -2, -1, 0]
            } else {
                vec![-2, -1, 0, 1, 2]
            }
        }
    }
}

/// Second-order finite-difference derivative on the same grid.
pub fn derivative<T: Real>(u: &SampledFn<T>, order: DerivOrder) -> SampledFn<T> {
    let grid = *u.grid();
    let last = grid.last();
    let k = order as usize;
    let scale = T::one() / grid.h().powi(k as i32);
    let bulk_offsets = stencil_offsets(order, last / 2, last);
    let bulk: Vec<T> = fd_weights(&bulk_offsets, k).into_iter().map(T::lit).collect();
    let v = u.values();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..=last {
        let offs = stencil_offsets(order, i, last);
        let acc = if offs == bulk_offsets {
            apply(v, i, &offs, &bulk)
        } else {
            let w: Vec<T> = fd_weights(&offs, k).into_iter().map(T::lit).collect();
            apply(v, i, &offs, &w)
        };
        out.push(acc * scale);
    }
    SampledFn { grid, values: out }
}

#[inline]
fn apply<T: Real>(v: &[T], i: usize, offs: &[i32], w: &[T]) -> T {
    offs.iter()
        .zip(w)
        .map(|(&o, &c)| c * v[(i as i64 + o as i64) as usize])
        .sum()
}

/// The C³-type norm of a sampled function and its four sup-norm parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ENorm<T> {
    pub value: T,
    /// `(sup|u|, sup|u'|, sup|u''|, sup|u'''|)`.
    pub parts: [T; 4],
}

pub fn e_norm<T: Real>(u: &SampledFn<T>) -> ENorm<T> {
    let parts = [
        u.max_abs(),
        derivative(u, DerivOrder::First).max_abs(),
        derivative(u, DerivOrder::Second).max_abs(),
        derivative(u, DerivOrder::Third).max_abs(),
    ];
    ENorm {
        value: parts.iter().copied().sum(),
        parts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g(n: usize) -> Grid<f64> {
        Grid::new(n).unwrap()
    }

    #[test]
    fn grid_spacing() {
        let g9 = g(9);
        assert!((g9.h() - 0.1).abs() < 1e-15);
        assert_eq!(g9.len(), 11);
        assert_eq!(g9.node(0), 0.0);
        assert_eq!(g9.node(10), 1.0);
        assert!((g(1999).h() - 5e-4).abs() < 1e-18);
        assert_eq!(
            make_grid::<f64>(3),
            Err(Error::TooCoarse { n: 3, min: 8 })
        );
        let nodes = g(50).nodes();
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        let g32 = Grid::<f32>::new(15).unwrap();
        assert_eq!(g32.node(16), 1.0f32);
    }

    #[test]
    fn fornberg_reproduces_textbook_stencils() {
        assert_eq!(fd_weights(&[-1, 0, 1], 1), vec![-0.5, 0.0, 0.5]);
        assert_eq!(fd_weights(&[-1, 0, 1], 2), vec![1.0, -2.0, 1.0]);
        assert_eq!(fd_weights(&[0, 1, 2, 3], 2), vec![2.0, -5.0, 4.0, -1.0]);
        assert_eq!(fd_weights(&[-2, -1, 0, 1, 2], 3), vec![-0.5, 1.0, 0.0, -1.0, 0.5]);
        assert_eq!(fd_weights(&[0, 1, 2, 3, 4], 3), vec![-2.5, 9.0, -12.0, 7.0, -1.5]);
    }

    #[test]
    fn derivative_of_linear_is_exact() {
        let u = SampledFn::from_fn(g(100), |t| t);
        let d = derivative(&u, DerivOrder::First);
        assert!(d.values().iter().all(|&v| (v - 1.0).abs() <= 1e-10));
    }

    #[test]
    fn second_derivative_of_sine() {
        for n in [200, 400] {
            let u = SampledFn::from_fn(g(n), |t| (PI * t).sin());
            let d = derivative(&u, DerivOrder::Second);
            let h = 1.0 / (n as f64 + 1.0);
            let err = d
                .values()
                .iter()
                .enumerate()
                .map(|(i, &v)| (v + PI * PI * (PI * i as f64 * h).sin()).abs())
                .fold(0.0, f64::max);
            assert!(err < 20.0 * h * h, "n={n} err={err}");
        }
    }

    #[test]
    fn e_norm_zero_and_analytic_cases() {
        assert_eq!(e_norm(&SampledFn::zeros(g(20))).value, 0.0);

        let s = e_norm(&SampledFn::from_fn(g(2000), |t| (PI * t).sin()));
        let expect = 1.0 + PI + PI * PI + PI.powi(3);
        assert!((s.value - expect).abs() < 1e-3, "{} vs {}", s.value, expect);

        let q = e_norm(&SampledFn::from_fn(g(99), |t| t * (1.0 - t)));
        let want = [0.25, 1.0, 2.0, 0.0];
        for (p, w) in q.parts.iter().zip(want) {
            assert!((p - w).abs() < 1e-8, "{:?}", q.parts);
        }
        assert!((q.value - 3.25).abs() < 1e-8);
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let g: Grid<f64> = Grid::new(12).unwrap();
        let p = |t: f64| 1.0 - 3.0 * t + 2.0 * t * t * t;
        let u = SampledFn::from_fn(g, p);
        for t in [0.0, 0.01, 0.37, 0.5, 0.93, 1.0] {
            assert!((u.interpolate_cubic(t) - p(t)).abs() < 1e-13, "{t}");
        }
        let r = u.refined();
        assert_eq!(r.grid().n_interior(), 25);
        for (i, v) in r.values().iter().enumerate() {
            assert!((v - p(r.grid().node(i))).abs() < 1e-13);
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let u = SampledFn::from_fn(g(12), |t| (3.0 * t).exp() - 1.0 / 3.0);
        let s = u.to_csv_string();
        assert!(s.starts_with("t,value\n"));
        let back = SampledFn::<f64>::from_csv_reader(s.as_bytes()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn csv_rejects_nonuniform_nodes() {
        let mut s = SampledFn::from_fn(g(10), |t| t).to_csv_string();
        s = s.replacen("9.0909090909090912e-2", "9.5e-2", 1);
        assert!(SampledFn::<f64>::from_csv_reader(s.as_bytes()).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = SampledFn::from_fn(g(10), |t| t);
        let b = SampledFn::from_fn(g(11), |t| t);
        assert_eq!(a.add(&b), Err(Error::GridMismatch));
    }

    #[test]
    fn single_precision_derivatives() {
        let u = SampledFn::from_fn(Grid::<f32>::new(64).unwrap(), |t| t * t);
        let d = derivative(&u, DerivOrder::Second);
        assert!(d.values().iter().all(|&v| (v - 2.0).abs() < 1e-2));
    }
}
