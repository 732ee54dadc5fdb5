//! Positive and negative eigenvalue sequences of `u'''' = μ m(t) u` with
//! `u = u'' = 0` at both ends.
//!
//! The discrete pencil `K u = μ M u` is reduced through the symmetric
//! factor `A` of `K = A²` to the symmetric operator `S = A⁻¹ M A⁻¹`; each
//! eigenvalue `ν` of `S` gives `μ = 1/ν` and `φ = A⁻¹ x`. The extreme
//! eigenvalues of `S` are found by Lanczos, each application costing two
//! tridiagonal solves. A dense Cholesky/Jacobi route is kept for small
//! grids, and a shooting method provides an independent check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::{e_norm, Grid, SampledFn};
use crate::linalg::{jacobi_eigen, symmetric_extremes};
use crate::linops::SecondDiffOperator;
use crate::nodal::{nodal_profile, Sign, ZeroKind};
use crate::scalar::Real;

/// Largest index accepted by [`eigen_pencil`].
pub const MAX_COUNT: usize = 12;
/// Relative size of `ν` below which it is a null direction of `S`.
pub const NULL_TOL: f64 = 1e-10;
/// Relative separation under which neighbouring eigenvalues are flagged.
pub const SEPARATION_TOL: f64 = 1e-6;

const LANCZOS_TOL: f64 = 1e-12;
const LANCZOS_SEED: u64 = 0x6265_616d;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub k: usize,
    pub nu: Sign,
    /// Reported eigenvalue (extrapolated when requested).
    pub mu: T,
    /// Eigenvalue of the discrete pencil on this grid.
    pub mu_discrete: T,
    /// Normalised to `e_norm = 1`, positive right of `t = 0`.
    pub phi: SampledFn<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectrumNote {
    /// Negative eigenvalues were requested for a weight without negative part.
    NoNegativeSpectrum,
    /// Two neighbouring eigenvalues closer than the separation tolerance.
    NearDegenerate { nu: Sign, k: usize },
    /// Eigenfunction `k` has `count` interior zeros instead of `k - 1`.
    NodalMismatch { nu: Sign, k: usize, count: usize },
}

#[derive(Debug, Clone)]
pub struct SpectrumResult<T> {
    pub positive: Vec<EigenPair<T>>,
    pub negative: Vec<EigenPair<T>>,
    pub weight: SampledFn<T>,
    pub grid: Grid<T>,
    pub weight_id: String,
    pub notes: Vec<SpectrumNote>,
}

impl<T: Real> SpectrumResult<T> {
    pub fn side(&self, nu: Sign) -> &[EigenPair<T>] {
        match nu {
            Sign::Plus => &self.positive,
            Sign::Minus => &self.negative,
        }
    }

    pub fn get(&self, k: usize, nu: Sign) -> Option<&EigenPair<T>> {
        self.side(nu).get(k.checked_sub(1)?)
    }

    pub fn pairs(&self) -> impl Iterator<Item = &EigenPair<T>> {
        self.positive.iter().chain(&self.negative)
    }

    pub fn with_weight_id(mut self, id: impl Into<String>) -> Self {
        self.weight_id = id.into();
        self
    }

    /// `{weight_id, n, positive: [{k, mu, phi_csv_ref}], negative: [...]}`.
    pub fn to_json(&self, phi_ref: impl Fn(&EigenPair<T>) -> String) -> serde_json::Value {
        let rows = |pairs: &[EigenPair<T>]| {
            pairs
                .iter()
                .map(|p| {
                    json!({
                        "k": p.k,
                        "mu": p.mu.to_f64_lossy(),
                        "mu_discrete": p.mu_discrete.to_f64_lossy(),
                        "phi_csv_ref": phi_ref(p),
                    })
                })
                .collect::<Vec<_>>()
        };
        json!({
            "weight_id": self.weight_id,
            "n": self.grid.n_interior(),
            "positive": rows(&self.positive),
            "negative": rows(&self.negative),
            "notes": self.notes,
        })
    }
}

fn check_request<T: Real>(m: &SampledFn<T>, count_pos: usize, count_neg: usize) -> Result<(usize, usize, Vec<SpectrumNote>)> {
    if count_pos > MAX_COUNT || count_neg > MAX_COUNT {
        return Err(Error::InvalidInput(format!("at most {MAX_COUNT} eigenpairs per sign")));
    }
    let interior = m.interior();
    let has_pos = interior.iter().any(|&v| v > T::zero());
    let has_neg = interior.iter().any(|&v| v < T::zero());
    if count_pos > 0 && !has_pos {
        return Err(Error::NotInWeightClass("weight has no positive part".into()));
    }
    let mut notes = Vec::new();
    let mut neg = count_neg;
    if count_neg > 0 && !has_neg {
        notes.push(SpectrumNote::NoNegativeSpectrum);
        neg = 0;
    }
    Ok((count_pos, neg, notes))
}

/// Normalises a raw eigenvector; also returns its zero count.
fn finish_pair<T: Real>(grid: Grid<T>, k: usize, nu: Sign, mu: T, phi_interior: &[T]) -> Result<(EigenPair<T>, usize)> {
    let mut phi = SampledFn::from_interior(grid, phi_interior);
    let scale = T::lit(1e-3) * phi.max_abs();
    let lead = phi.interior().iter().find(|v| v.abs() > scale).copied().unwrap_or(T::one());
    let norm = e_norm(&phi).value;
    phi = phi.scale(lead.signum() / norm);
    let count = nodal_profile(&phi)?.count;
    Ok((
        EigenPair {
            k,
            nu,
            mu,
            mu_discrete: mu,
            phi,
        },
        count,
    ))
}

fn assemble<T: Real>(
    m: &SampledFn<T>,
    pos: Vec<(T, Vec<T>)>,
    neg: Vec<(T, Vec<T>)>,
    mut notes: Vec<SpectrumNote>,
    policy: NodalPolicy,
) -> Result<SpectrumResult<T>> {
    let grid = *m.grid();
    let mut build = |side: Vec<(T, Vec<T>)>, nu: Sign| -> Result<Vec<EigenPair<T>>> {
        let mut out = Vec::with_capacity(side.len());
        for (i, (mu, phi)) in side.into_iter().enumerate() {
            let (pair, count) = finish_pair(grid, i + 1, nu, mu, &phi)?;
            if count + 1 != pair.k {
                match policy {
                    NodalPolicy::Enforce => {
                        return Err(Error::NodalMismatch {
                            k: pair.k,
                            nu: nu.as_char(),
                            count,
                            expected: pair.k - 1,
                        })
                    }
                    NodalPolicy::Report => notes.push(SpectrumNote::NodalMismatch { nu, k: pair.k, count }),
                }
            }
            out.push(pair);
        }
        Ok(out)
    };
    let positive = build(pos, Sign::Plus)?;
    let negative = build(neg, Sign::Minus)?;
    for (side, nu) in [(&positive, Sign::Plus), (&negative, Sign::Minus)] {
        for w in side.windows(2) {
            if (w[1].mu - w[0].mu).abs() <= T::lit(SEPARATION_TOL) * w[0].mu.abs() {
                notes.push(SpectrumNote::NearDegenerate { nu, k: w[0].k });
            }
        }
    }
    Ok(SpectrumResult {
        positive,
        negative,
        weight: m.clone(),
        grid,
        weight_id: String::new(),
        notes,
    })
}

/// How a computed eigenfunction whose zero count disagrees with its index
/// is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodalPolicy {
    /// Fail with `NodalMismatch`.
    #[default]
    Enforce,
    /// Keep the pair and record a [`SpectrumNote::NodalMismatch`].
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PencilOptions {
    pub nodal: NodalPolicy,
    /// Replace each eigenvalue by the Richardson extrapolation
    /// `(4μ(h/2) - μ(h)) / 3` against the refined grid. The weight is
    /// carried to the refined grid by cubic interpolation; eigenfunctions
    /// and `mu_discrete` stay those of the original grid.
    pub extrapolate: bool,
}

/// Lowest `count_pos` positive and `count_neg` negative eigenpairs of the
/// discrete pencil.
pub fn eigen_pencil<T: Real>(m: &SampledFn<T>, count_pos: usize, count_neg: usize) -> Result<SpectrumResult<T>> {
    eigen_pencil_with(m, count_pos, count_neg, PencilOptions::default())
}

pub fn eigen_pencil_with<T: Real>(
    m: &SampledFn<T>,
    count_pos: usize,
    count_neg: usize,
    opts: PencilOptions,
) -> Result<SpectrumResult<T>> {
    let mut coarse = lanczos_pencil(m, count_pos, count_neg, opts.nodal)?;
    if opts.extrapolate {
        let fine = lanczos_pencil(&m.refined(), count_pos, count_neg, NodalPolicy::Report)?;
        let three = T::lit(3.0);
        for (c, f) in coarse
            .positive
            .iter_mut()
            .zip(&fine.positive)
            .chain(coarse.negative.iter_mut().zip(&fine.negative))
        {
            c.mu = (T::lit(4.0) * f.mu_discrete - c.mu_discrete) / three;
        }
    }
    Ok(coarse)
}

fn lanczos_pencil<T: Real>(
    m: &SampledFn<T>,
    count_pos: usize,
    count_neg: usize,
    policy: NodalPolicy,
) -> Result<SpectrumResult<T>> {
    let (count_pos, count_neg, notes) = check_request(m, count_pos, count_neg)?;
    let grid = *m.grid();
    let n = grid.n_interior();
    let a = SecondDiffOperator::new(grid);
    let w = m.interior();
    let apply = |x: &[T], y: &mut [T]| {
        let mut z = a.solve(x);
        z.iter_mut().zip(w).for_each(|(zi, &wi)| *zi = *zi * wi);
        y.copy_from_slice(&a.solve(&z));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let start: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
    let (pos, neg) = symmetric_extremes(
        n,
        apply,
        &start,
        count_pos,
        count_neg,
        T::lit(LANCZOS_TOL),
        T::lit(NULL_TOL),
    );
    let convert = |pairs: Vec<crate::linalg::RitzPair<T>>| {
        pairs
            .into_iter()
            .map(|p| (T::one() / p.value, a.solve(&p.vector)))
            .collect::<Vec<_>>()
    };
    assemble(m, convert(pos), convert(neg), notes, policy)
}

/// Dense reference route: Cholesky `K = RᵀR`, explicit `S = R⁻ᵀ M R⁻¹`,
/// cyclic Jacobi. O(n³); intended for grids of a few hundred nodes.
pub fn eigen_pencil_dense<T: Real>(
    m: &SampledFn<T>,
    count_pos: usize,
    count_neg: usize,
    policy: NodalPolicy,
) -> Result<SpectrumResult<T>> {
    let (count_pos, count_neg, notes) = check_request(m, count_pos, count_neg)?;
    let grid = *m.grid();
    let n = grid.n_interior();
    let a = SecondDiffOperator::new(grid);
    // dense K
    let mut k = vec![T::zero(); n * n];
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let col = a.apply(&a.apply(&e));
        for i in 0..n {
            k[i * n + j] = col[i];
        }
    }
    let r = cholesky_upper(n, &k)?;
    // R⁻¹ by back substitution, column by column
    let mut rinv = vec![T::zero(); n * n];
    for j in 0..n {
        for i in (0..=j).rev() {
            let mut s = if i == j { T::one() } else { T::zero() };
            for l in i + 1..=j {
                s = s - r[i * n + l] * rinv[l * n + j];
            }
            rinv[i * n + j] = s / r[i * n + i];
        }
    }
    // S = R⁻ᵀ M R⁻¹
    let w = m.interior();
    let mut s = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = T::zero();
            for l in 0..=i.min(j) {
                acc = acc + rinv[l * n + i] * w[l] * rinv[l * n + j];
            }
            s[i * n + j] = acc;
            s[j * n + i] = acc;
        }
    }
    let (vals, vecs) = jacobi_eigen(n, s, T::lit(1e-13));
    let scale = vals.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let floor = T::lit(NULL_TOL) * scale;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].partial_cmp(&vals[x]).unwrap());
    let pair = |idx: usize| {
        let x: Vec<T> = (0..n).map(|i| vecs[i * n + idx]).collect();
        let phi: Vec<T> = (0..n)
            .map(|i| (i..n).map(|l| rinv[i * n + l] * x[l]).sum())
            .collect();
        (T::one() / vals[idx], phi)
    };
    let pos = order.iter().copied().filter(|&i| vals[i] > floor).take(count_pos).map(pair).collect();
    let neg = order.iter().rev().copied().filter(|&i| vals[i] < -floor).take(count_neg).map(pair).collect();
    assemble(m, pos, neg, notes, policy)
}

fn cholesky_upper<T: Real>(n: usize, a: &[T]) -> Result<Vec<T>> {
    let mut r = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for l in 0..j {
            d = d - r[l * n + j] * r[l * n + j];
        }
        if d <= T::zero() {
            return Err(Error::InvalidInput("stiffness matrix not positive definite".into()));
        }
        let d = d.sqrt();
        r[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[j * n + i];
            for l in 0..j {
                s = s - r[l * n + j] * r[l * n + i];
            }
            r[j * n + i] = s / d;
        }
    }
    Ok(r)
}

/// Largest RK4 step used by [`eigen_shoot`] and [`boundary_determinant`].
pub const SHOOT_STEP: f64 = 1e-4;

/// Sign-carrying boundary determinant `d(μ)`.
///
/// With `u(0) = u''(0) = 0` and the two basis solutions started from
/// `(u', u''') = (1, 0)` and `(0, 1)`, `d(μ)` is the 2×2 determinant of their
/// `(u(1), u''(1))` values. It is integrated in compound form: the six 2×2
/// minors of the pair of solutions obey a linear system of their own, which
/// avoids the loss of independence between the two basis solutions.
/// The minors are rescaled by positive factors along the way, so only the
/// sign and zeros of the returned value are meaningful.
pub fn boundary_determinant<T: Real>(m: &SampledFn<T>, mu: T) -> T {
    let steps = (T::one() / T::lit(SHOOT_STEP)).ceil().to_usize().unwrap_or(10_000);
    let dt = T::one() / T::from_usize_lossy(steps);
    let coef = |t: T| mu * m.interpolate_cubic(t);
    // p = [p01, p02, p03, p12, p13, p23]
    let rhs = |c: T, p: &[T; 6]| -> [T; 6] {
        [p[1], p[3] + p[2], p[4], p[4], p[5] - c * p[0], -c * p[1]]
    };
    let mut p = [T::zero(); 6];
    p[4] = T::one();
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    for s in 0..steps {
        let t = T::from_usize_lossy(s) * dt;
        let (c0, c1, c2) = (coef(t), coef(t + half * dt), coef(t + dt));
        let k1 = rhs(c0, &p);
        let y2: [T; 6] = std::array::from_fn(|i| p[i] + half * dt * k1[i]);
        let k2 = rhs(c1, &y2);
        let y3: [T; 6] = std::array::from_fn(|i| p[i] + half * dt * k2[i]);
        let k3 = rhs(c1, &y3);
        let y4: [T; 6] = std::array::from_fn(|i| p[i] + dt * k3[i]);
        let k4 = rhs(c2, &y4);
        for i in 0..6 {
            p[i] = p[i] + dt * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        let size = p.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if size > T::lit(1e50) {
            p.iter_mut().for_each(|v| *v = *v / size);
        }
    }
    p[1]
}

/// Eigenvalue in `bracket` by bisection on the sign of the boundary
/// determinant, to a bracket width of `1e-10·(1 + |μ|)`.
pub fn eigen_shoot<T: Real>(m: &SampledFn<T>, bracket: (T, T)) -> Result<T> {
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    let mut dlo = boundary_determinant(m, lo);
    let dhi = boundary_determinant(m, hi);
    if dlo == T::zero() {
        return Ok(lo);
    }
    if dhi == T::zero() {
        return Ok(hi);
    }
    if (dlo > T::zero()) == (dhi > T::zero()) {
        return Err(Error::NoSignChange {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let tol = T::lit(1e-10);
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if hi - lo < tol * (T::one() + mid.abs()) {
            break;
        }
        let dmid = boundary_determinant(m, mid);
        if dmid == T::zero() {
            return Ok(mid);
        }
        if (dmid > T::zero()) == (dlo > T::zero()) {
            lo = mid;
            dlo = dmid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

/// Bracket of half-width `min(5%, half the gap to either neighbour)` around
/// `side[i].mu`, relative to `|μ|`. Neighbours are taken from the same side,
/// so the side should hold one pair beyond the last one to be bracketed.
pub fn shooting_bracket<T: Real>(side: &[EigenPair<T>], i: usize) -> (T, T) {
    let mu = side[i].mu;
    let mut delta = T::lit(0.05);
    let half = T::lit(0.5);
    for j in [i.checked_sub(1), Some(i + 1)].into_iter().flatten() {
        if let Some(nb) = side.get(j) {
            delta = delta.min(half * ((nb.mu - mu) / mu).abs());
        }
    }
    let (a, b) = (mu * (T::one() - delta), mu * (T::one() + delta));
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingRow<T> {
    pub k: usize,
    pub nu: Sign,
    pub pencil: T,
    pub shooting: T,
    pub rel_diff: T,
}

/// Shooting eigenvalue for the first `upto` pairs of each side.
pub fn shooting_cross_check<T: Real>(result: &SpectrumResult<T>, upto: usize) -> Result<Vec<ShootingRow<T>>> {
    let mut rows = Vec::new();
    for side in [&result.positive, &result.negative] {
        for i in 0..side.len().min(upto) {
            let shot = eigen_shoot(&result.weight, shooting_bracket(side, i))?;
            let p = &side[i];
            rows.push(ShootingRow {
                k: p.k,
                nu: p.nu,
                pencil: p.mu,
                shooting: shot,
                rel_diff: ((p.mu - shot) / shot).abs(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalOrderRow {
    pub k: usize,
    pub nu: Sign,
    pub count: usize,
    pub expected: usize,
    pub all_simple: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalOrderReport {
    pub rows: Vec<NodalOrderRow>,
    pub violations: Vec<String>,
}

impl NodalOrderReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Recomputes every eigenfunction's nodal profile against its label.
pub fn order_by_nodal<T: Real>(result: &SpectrumResult<T>) -> NodalOrderReport {
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for p in result.pairs() {
        let expected = p.k - 1;
        match nodal_profile(&p.phi) {
            Ok(prof) => {
                let all_simple = prof.zeros.iter().all(|z| z.kind == ZeroKind::GeneralizedSimple);
                let ok = prof.count == expected && all_simple && prof.anomalies.is_empty();
                if !ok {
                    violations.push(format!(
                        "k={} nu={}: {} zeros (expected {}), all simple: {}",
                        p.k, p.nu, prof.count, expected, all_simple
                    ));
                }
                rows.push(NodalOrderRow {
                    k: p.k,
                    nu: p.nu,
                    count: prof.count,
                    expected,
                    all_simple,
                    ok,
                });
            }
            Err(e) => violations.push(format!("k={} nu={}: {e}", p.k, p.nu)),
        }
    }
    NodalOrderReport { rows, violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::StiffnessOperator;
    use crate::weights::Weight;
    use std::f64::consts::PI;

    fn weight(w: Weight, n: usize) -> SampledFn<f64> {
        w.sample(Grid::new(n).unwrap())
    }

    #[test]
    fn constant_weight_matches_discrete_and_continuum() {
        let m = weight(Weight::One, 400);
        let s = eigen_pencil(&m, 3, 1).unwrap();
        assert!(s.negative.is_empty());
        assert_eq!(s.notes, vec![SpectrumNote::NoNegativeSpectrum]);
        let k = StiffnessOperator::new(*m.grid());
        for p in &s.positive {
            let exact = k.eigenvalue(p.k);
            assert!(((p.mu - exact) / exact).abs() < 1e-11, "k={}", p.k);
            let cont = (p.k as f64 * PI).powi(4);
            assert!(((p.mu - cont) / cont).abs() < 1e-3);
            assert!((e_norm(&p.phi).value - 1.0).abs() < 1e-9);
            assert!(p.phi.values()[1] > 0.0);
        }
    }

    #[test]
    fn dense_and_lanczos_routes_agree() {
        for w in [Weight::Sin3Pi, Weight::LinearRamp] {
            let m = weight(w, 80);
            let a = eigen_pencil_with(&m, 3, 3, report()).unwrap();
            let b = eigen_pencil_dense(&m, 3, 3, NodalPolicy::Report).unwrap();
            for (p, q) in a.pairs().zip(b.pairs()) {
                assert!(((p.mu - q.mu) / q.mu).abs() < 1e-10, "{} {}", p.mu, q.mu);
                assert!(p.phi.sub(&q.phi).unwrap().max_abs() < 1e-7);
            }
        }
    }

    #[test]
    fn weight_without_positive_part_is_rejected() {
        let m = weight(Weight::One, 40).scale(-1.0);
        assert!(matches!(eigen_pencil(&m, 1, 0), Err(Error::NotInWeightClass(_))));
        assert!(eigen_pencil(&m, 0, 2).is_ok());
        assert!(matches!(eigen_pencil(&m, 13, 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn signs_and_ordering() {
        let s = eigen_pencil_with(&weight(Weight::Sin3Pi, 300), 3, 3, report()).unwrap();
        assert!(s.positive.windows(2).all(|w| w[0].mu < w[1].mu));
        assert!(s.negative.windows(2).all(|w| w[0].mu > w[1].mu));
        assert!(s.positive.iter().all(|p| p.mu > 0.0 && p.nu == Sign::Plus));
        assert!(s.negative.iter().all(|p| p.mu < 0.0 && p.nu == Sign::Minus));
        let s = eigen_pencil(&weight(Weight::One, 300), 4, 0).unwrap();
        assert!(order_by_nodal(&s).passed());
    }

    #[test]
    fn sign_changing_weight_breaks_zero_count_order() {
        // The two positive humps of sin(3πt) carry an odd and an even
        // mode; the odd one (one zero at t = 1/2) has the smaller eigenvalue.
        let m = weight(Weight::Sin3Pi, 300);
        assert_eq!(
            eigen_pencil(&m, 2, 0).unwrap_err(),
            Error::NodalMismatch {
                k: 1,
                nu: '+',
                count: 1,
                expected: 0
            }
        );
        let s = eigen_pencil_with(&m, 2, 0, report()).unwrap();
        assert!(s.notes.contains(&SpectrumNote::NodalMismatch {
            nu: Sign::Plus,
            k: 1,
            count: 1
        }));
        assert!((s.positive[0].mu - 3043.79).abs() < 0.05);
        assert!((s.positive[1].mu - 3241.03).abs() < 0.05);
        assert!(!order_by_nodal(&s).passed());
    }

    fn report() -> PencilOptions {
        PencilOptions {
            nodal: NodalPolicy::Report,
            ..Default::default()
        }
    }

    #[test]
    fn shooting_recovers_first_eigenvalues() {
        let m = weight(Weight::One, 100);
        let mu1 = eigen_shoot(&m, (90.0, 110.0)).unwrap();
        assert!((mu1 / PI.powi(4) - 1.0).abs() < 1e-6);
        let mu2 = eigen_shoot(&m, (1500.0, 1600.0)).unwrap();
        assert!((mu2 / (16.0 * PI.powi(4)) - 1.0).abs() < 1e-6);
        assert!(matches!(eigen_shoot(&m, (100.0, 200.0)), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn extrapolation_improves_accuracy() {
        let m = weight(Weight::One, 200);
        let opts = PencilOptions {
            extrapolate: true,
            ..Default::default()
        };
        let s = eigen_pencil_with(&m, 3, 0, opts).unwrap();
        for p in &s.positive {
            let cont = (p.k as f64 * PI).powi(4);
            let raw = ((p.mu_discrete - cont) / cont).abs();
            let ext = ((p.mu - cont) / cont).abs();
            assert!(ext < raw / 100.0, "k={} raw={raw} ext={ext}", p.k);
        }
    }

    #[test]
    fn swapped_labels_are_reported() {
        let mut s = eigen_pencil(&weight(Weight::One, 100), 2, 0).unwrap();
        s.positive.swap(0, 1);
        s.positive[0].k = 1;
        s.positive[1].k = 2;
        let r = order_by_nodal(&s);
        assert!(!r.passed());
        assert_eq!(r.violations.len(), 2);
    }

    #[test]
    fn json_shape() {
        let s = eigen_pencil(&weight(Weight::One, 50), 1, 0).unwrap().with_weight_id("one");
        let v = s.to_json(|p| format!("phi_{}{}.csv", p.nu, p.k));
        assert_eq!(v["weight_id"], "one");
        assert_eq!(v["n"], 50);
        assert_eq!(v["positive"][0]["k"], 1);
        assert_eq!(v["positive"][0]["phi_csv_ref"], "phi_+1.csv");
    }
}
