//! Nonlinear problems `u'''' = μ m u + g(t, u, μ)` and `u'''' = μ γ m f(u)`,
//! their hypothesis checks, residuals and a damped Newton corrector.
//!
//! Both problems are written as `u'''' = N(u, μ)`. The corrector works on
//! the fixed-point residual `G(u, μ) = u - Λ²N(u, μ)`, which has the same
//! zeros on the grid as the strong form `K u - N(u, μ)` but stays O(1)
//! where `K` has entries of size `h⁻⁴`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{e_norm, SampledFn};
use crate::linops::{lambda2, ShiftedBeam, StiffnessOperator};
use crate::scalar::{max_abs, Real};
use crate::weights::Weight;

type Fn3<T> = Arc<dyn Fn(T, T, T) -> T + Send + Sync>;
type Fn1<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Relative tolerance for the boundary values `u(0)`, `u(1)`.
pub const BC_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;
/// Smallest Armijo damping factor, 2⁻¹⁶.
pub const ARMIJO_FLOOR: f64 = 1.0 / 65536.0;

fn fd_step<T: Real>(s: T) -> T {
    T::lit(1e-6) * (T::one() + s.abs())
}

/// Perturbation `g(t, s, μ)` with `g(t, 0, μ) = 0`.
#[derive(Clone)]
pub struct PerturbationG<T> {
    pub name: String,
    eval: Fn3<T>,
    ds: Option<Fn3<T>>,
    dmu: Option<Fn3<T>>,
}

impl<T> fmt::Debug for PerturbationG<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbationG").field("name", &self.name).finish()
    }
}

impl<T: Real> PerturbationG<T> {
    pub fn custom(name: impl Into<String>, g: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(g),
            ds: None,
            dmu: None,
        }
    }

    pub fn with_ds(mut self, ds: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        self.ds = Some(Arc::new(ds));
        self
    }

    pub fn with_dmu(mut self, dmu: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        self.dmu = Some(Arc::new(dmu));
        self
    }

    pub fn zero() -> Self {
        Self::custom("zero", |_, _, _| T::zero())
            .with_ds(|_, _, _| T::zero())
            .with_dmu(|_, _, _| T::zero())
    }

    /// `c·s³`.
    pub fn cubic(c: T) -> Self {
        Self::custom("cubic", move |_, s, _| c * s * s * s)
            .with_ds(move |_, s, _| T::lit(3.0) * c * s * s)
            .with_dmu(|_, _, _| T::zero())
    }

    /// `c·s`; not `o(|s|)`, used as a negative control.
    pub fn linear(c: T) -> Self {
        Self::custom("linear", move |_, s, _| c * s)
            .with_ds(move |_, _, _| c)
            .with_dmu(|_, _, _| T::zero())
    }

    /// `π⁴ sin(πt) - μ m(t) s`, for which `sin(πt)` solves the problem for
    /// every `μ`.
    pub fn manufactured(weight: Weight) -> Self {
        let w1 = weight.clone();
        let w2 = weight;
        let pi4 = T::PI().powi(4);
        Self::custom("manufactured", move |t, s, mu| {
            pi4 * (T::PI() * t).sin() - mu * T::lit(w1.eval(t.to_f64_lossy())) * s
        })
        .with_ds(move |t, _, mu| -mu * T::lit(w2.eval(t.to_f64_lossy())))
    }

    /// `μ (f(s) - f₀ s)`: the remainder left after splitting off the
    /// linear part of an asymptotically linear `f`.
    pub fn from_asymptotic(f: &AsymptoticF<T>) -> Self {
        let (f1, f2, f3) = (f.clone(), f.clone(), f.clone());
        let f0 = f.f0;
        Self::custom(format!("remainder({})", f.name), move |_, s, mu| mu * (f1.eval(s) - f0 * s))
            .with_ds(move |_, s, mu| mu * (f2.derivative(s) - f0))
            .with_dmu(move |_, s, _| f3.eval(s) - f0 * s)
    }

    pub fn eval(&self, t: T, s: T, mu: T) -> T {
        (self.eval)(t, s, mu)
    }

    pub fn ds(&self, t: T, s: T, mu: T) -> T {
        match &self.ds {
            Some(d) => d(t, s, mu),
            None => {
                let e = fd_step(s);
                (self.eval(t, s + e, mu) - self.eval(t, s - e, mu)) / (e + e)
            }
        }
    }

    pub fn dmu(&self, t: T, s: T, mu: T) -> T {
        match &self.dmu {
            Some(d) => d(t, s, mu),
            None => {
                let e = fd_step(mu);
                (self.eval(t, s, mu + e) - self.eval(t, s, mu - e)) / (e + e)
            }
        }
    }
}

/// Asymptotically linear `f` with declared limits `f(s)/s → f₀` at 0 and
/// `f(s)/s → f∞` at infinity.
#[derive(Clone)]
pub struct AsymptoticF<T> {
    pub name: String,
    f: Fn1<T>,
    df: Option<Fn1<T>>,
    pub f0: T,
    pub finf: T,
}

impl<T> fmt::Debug for AsymptoticF<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AsymptoticF")
            .field("name", &self.name)
            .field("f0", &self.f0)
            .field("finf", &self.finf)
            .finish()
    }
}

impl<T: Real> AsymptoticF<T> {
    pub fn custom(name: impl Into<String>, f: impl Fn(T) -> T + Send + Sync + 'static, f0: T, finf: T) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            df: None,
            f0,
            finf,
        }
    }

    pub fn with_derivative(mut self, df: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn linear() -> Self {
        Self::custom("linear", |s| s, T::one(), T::one()).with_derivative(|_| T::one())
    }

    /// `s (f∞ - (f∞ - f₀)/(1 + s²))`.
    pub fn saturating(f0: T, finf: T) -> Self {
        let d = finf - f0;
        Self::custom("saturating", move |s| s * (finf - d / (T::one() + s * s)), f0, finf).with_derivative(
            move |s| {
                let q = T::one() + s * s;
                finf - d * (T::one() - s * s) / (q * q)
            },
        )
    }

    /// `s + atan(s)`: `f₀ = 2`, `f∞ = 1`.
    pub fn atan() -> Self {
        Self::custom("atan", |s| s + s.atan(), T::lit(2.0), T::one())
            .with_derivative(|s| T::one() + T::one() / (T::one() + s * s))
    }

    /// Piecewise-linear interpolation of `(s, f)` knots (strictly
    /// increasing `s`), extended linearly beyond the first and last knot.
    /// Declared `f₀` is the slope just right of `s = 0`, `f∞` the slope of
    /// the last segment.
    pub fn table(name: impl Into<String>, knots: Vec<(T, T)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidInput("table needs at least two knots".into()));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidInput("table abscissae must be strictly increasing".into()));
        }
        if knots.iter().any(|(s, f)| !s.is_finite() || !f.is_finite()) {
            return Err(Error::InvalidInput("table values must be finite".into()));
        }
        let knots = Arc::new(knots);
        let segment = {
            let knots = Arc::clone(&knots);
            move |s: T| -> usize {
                let last = knots.len() - 2;
                knots.windows(2).position(|w| s < w[1].0).unwrap_or(last).min(last)
            }
        };
        let slope = {
            let knots = Arc::clone(&knots);
            move |i: usize| (knots[i + 1].1 - knots[i].1) / (knots[i + 1].0 - knots[i].0)
        };
        let f0 = slope(segment(T::zero()));
        let finf = slope(knots.len() - 2);
        let (seg1, slope1, k1) = (segment.clone(), slope.clone(), Arc::clone(&knots));
        let eval = move |s: T| {
            let i = seg1(s);
            k1[i].1 + slope1(i) * (s - k1[i].0)
        };
        Ok(Self::custom(name, eval, f0, finf).with_derivative(move |s| slope(segment(s))))
    }

    /// Reads a two-column `s,f` CSV (header row required).
    pub fn read_table(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path)?;
        let mut knots = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<T> {
                rec.get(i)
                    .and_then(|x| x.trim().parse::<f64>().ok())
                    .map(T::lit)
                    .ok_or_else(|| Error::InvalidInput(format!("bad row in {}", path.display())))
            };
            knots.push((parse(0)?, parse(1)?));
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "table".into());
        Self::table(name, knots)
    }

    pub fn eval(&self, s: T) -> T {
        (self.f)(s)
    }

    pub fn derivative(&self, s: T) -> T {
        match &self.df {
            Some(d) => d(s),
            None => {
                let e = fd_step(s);
                (self.eval(s + e) - self.eval(s - e)) / (e + e)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ProblemKind<T> {
    /// `u'''' = μ m u + g(t, u, μ)`.
    Perturbed { g: PerturbationG<T> },
    /// `u'''' = μ γ m f(u)`; at `μ = 1` this is the autonomous problem.
    Autonomous { gamma: T, f: AsymptoticF<T> },
}

#[derive(Debug, Clone)]
pub struct ProblemSpec<T> {
    pub m: SampledFn<T>,
    pub kind: ProblemKind<T>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn perturbed(m: SampledFn<T>, g: PerturbationG<T>) -> Self {
        Self {
            m,
            kind: ProblemKind::Perturbed { g },
        }
    }

    pub fn autonomous(m: SampledFn<T>, gamma: T, f: AsymptoticF<T>) -> Self {
        Self {
            m,
            kind: ProblemKind::Autonomous { gamma, f },
        }
    }

    /// Factor multiplying `μ m` in the linearisation at `u = 0`: 1 for the
    /// perturbed problem, `γ f₀` for the autonomous one.
    pub fn linear_scale(&self) -> T {
        match &self.kind {
            ProblemKind::Perturbed { .. } => T::one(),
            ProblemKind::Autonomous { gamma, f } => *gamma * f.f0,
        }
    }

    fn node(&self, i: usize) -> T {
        self.m.grid().node(i + 1)
    }

    /// `N(u, μ)` at interior nodes.
    pub fn n_values(&self, u: &[T], mu: T) -> Vec<T> {
        let m = self.m.interior();
        match &self.kind {
            ProblemKind::Perturbed { g } => (0..u.len())
                .map(|i| mu * m[i] * u[i] + g.eval(self.node(i), u[i], mu))
                .collect(),
            ProblemKind::Autonomous { gamma, f } => {
                (0..u.len()).map(|i| mu * *gamma * m[i] * f.eval(u[i])).collect()
            }
        }
    }

    /// `∂N/∂u` (diagonal) at interior nodes.
    pub fn n_du(&self, u: &[T], mu: T) -> Vec<T> {
        let m = self.m.interior();
        match &self.kind {
            ProblemKind::Perturbed { g } => (0..u.len())
                .map(|i| mu * m[i] + g.ds(self.node(i), u[i], mu))
                .collect(),
            ProblemKind::Autonomous { gamma, f } => {
                (0..u.len()).map(|i| mu * *gamma * m[i] * f.derivative(u[i])).collect()
            }
        }
    }

    /// `∂N/∂μ` at interior nodes.
    pub fn n_dmu(&self, u: &[T], mu: T) -> Vec<T> {
        let m = self.m.interior();
        match &self.kind {
            ProblemKind::Perturbed { g } => (0..u.len())
                .map(|i| m[i] * u[i] + g.dmu(self.node(i), u[i], mu))
                .collect(),
            ProblemKind::Autonomous { gamma, f } => (0..u.len()).map(|i| *gamma * m[i] * f.eval(u[i])).collect(),
        }
    }

    /// Fixed-point residual `G(u, μ) = u - Λ²N(u, μ)`.
    pub fn fixed_point_residual(&self, u: &SampledFn<T>, mu: T) -> Result<SampledFn<T>> {
        u.ensure_same_grid(&self.m)?;
        let grid = *u.grid();
        let nv = SampledFn::from_interior(grid, &self.n_values(u.interior(), mu));
        u.sub(&lambda2(&nv))
    }
}

pub fn check_boundary<T: Real>(u: &SampledFn<T>) -> Result<()> {
    let tol = T::lit(BC_TOL) * e_norm(u).value;
    let v = u.values();
    let (a, b) = (v[0], v[v.len() - 1]);
    if a.abs() > tol || b.abs() > tol {
        return Err(Error::BoundaryViolation(format!(
            "u(0) = {:e}, u(1) = {:e}, tolerance {:e}",
            a.to_f64_lossy(),
            b.to_f64_lossy(),
            tol.to_f64_lossy()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual<T> {
    pub max_norm: T,
    pub vector: SampledFn<T>,
}

/// Strong-form residual `(K u)_i - N(u, μ)_i` at interior nodes.
pub fn residual<T: Real>(u: &SampledFn<T>, mu: T, spec: &ProblemSpec<T>) -> Result<Residual<T>> {
    u.ensure_same_grid(&spec.m)?;
    check_boundary(u)?;
    let grid = *u.grid();
    let ku = StiffnessOperator::new(grid).apply(u.interior());
    let nv = spec.n_values(u.interior(), mu);
    let r: Vec<T> = ku.iter().zip(&nv).map(|(&a, &b)| a - b).collect();
    Ok(Residual {
        max_norm: max_abs(&r),
        vector: SampledFn::from_interior(grid, &r),
    })
}

/// Fixed-point residual `u - Λ²N(u, μ)` with its max norm.
pub fn fixed_point_residual<T: Real>(u: &SampledFn<T>, mu: T, spec: &ProblemSpec<T>) -> Result<Residual<T>> {
    let vector = spec.fixed_point_residual(u, mu)?;
    Ok(Residual {
        max_norm: vector.max_abs(),
        vector,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallOReport {
    /// `(|s|, r(s))` with `r(s) = max |g(t, ±s, μ)| / |s|`.
    pub table: Vec<(f64, f64)>,
    pub monotone: bool,
    pub passed: bool,
}

/// Samples `max |g(t, s, μ)| / |s|` over a t-grid and a μ-grid of the box
/// at `|s| = 10⁻¹ … 10⁻⁶`.
pub fn check_small_o<T: Real>(g: &PerturbationG<T>, mu_box: (T, T)) -> SmallOReport {
    let ts: Vec<T> = (0..=100).map(|i| T::lit(i as f64 / 100.0)).collect();
    let mus: Vec<T> = (0..=10)
        .map(|j| mu_box.0 + (mu_box.1 - mu_box.0) * T::lit(j as f64 / 10.0))
        .collect();
    let mut table = Vec::new();
    for e in 1..=6 {
        let s = T::lit(10f64.powi(-e));
        let mut r = T::zero();
        for &t in &ts {
            for &mu in &mus {
                for sv in [s, -s] {
                    r = r.max(g.eval(t, sv, mu).abs() / s);
                }
            }
        }
        table.push((s.to_f64_lossy(), r.to_f64_lossy()));
    }
    let monotone = table.windows(2).all(|w| w[1].1 <= w[0].1);
    let first = table[0].1;
    let last = table[table.len() - 1].1;
    let passed = monotone && last < 1e-3 * first + 1e-12;
    SmallOReport {
        table,
        monotone,
        passed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub f0_hat: f64,
    pub finf_hat: f64,
    pub h1_ok: bool,
}

impl AsymptoticsReport {
    pub fn passed(&self) -> bool {
        self.h1_ok
    }
}

/// Estimates `f₀`, `f∞` at `|s| = 10⁻⁷` and `10⁶` (both signs averaged),
/// checks `f(s)s > 0` on log-spaced `s`, and compares the estimates with
/// the declared limits to `10⁻³` relative.
pub fn check_asymptotics<T: Real>(f: &AsymptoticF<T>) -> Result<AsymptoticsReport> {
    let hat = |s: T| T::lit(0.5) * (f.eval(s) / s + f.eval(-s) / (-s));
    let f0_hat = hat(T::lit(1e-7)).to_f64_lossy();
    let finf_hat = hat(T::lit(1e6)).to_f64_lossy();
    let h1_ok = (0..=160).all(|i| {
        let s = T::lit(10f64.powf(-8.0 + 0.1 * i as f64));
        f.eval(s) * s > T::zero() && f.eval(-s) * (-s) > T::zero()
    });
    let declared = (f.f0.to_f64_lossy(), f.finf.to_f64_lossy());
    let close = |hat: f64, want: f64| (hat - want).abs() <= 1e-3 * want.abs();
    if !(declared.0 > 0.0 && declared.1 > 0.0 && declared.0.is_finite() && declared.1.is_finite()) {
        return Err(Error::AsymptoticMismatch(format!(
            "declared f0 = {}, finf = {} must lie in (0, inf)",
            declared.0, declared.1
        )));
    }
    if !close(f0_hat, declared.0) {
        return Err(Error::AsymptoticMismatch(format!(
            "f0 estimate {f0_hat} differs from declared {}",
            declared.0
        )));
    }
    if !close(finf_hat, declared.1) {
        return Err(Error::AsymptoticMismatch(format!(
            "finf estimate {finf_hat} differs from declared {}",
            declared.1
        )));
    }
    Ok(AsymptoticsReport {
        f0_hat,
        finf_hat,
        h1_ok,
    })
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome<T> {
    pub u: SampledFn<T>,
    pub iterations: usize,
    /// Max norm of the fixed-point residual before each iteration and at exit.
    pub history: Vec<T>,
}

/// Default corrector tolerance `10⁻¹⁰ (1 + e_norm(u₀))`.
pub fn default_tolerance<T: Real>(u0: &SampledFn<T>) -> T {
    T::lit(1e-10) * (T::one() + e_norm(u0).value)
}

/// Damped Newton for `G(u, μ) = 0` at fixed `μ`.
///
/// The Jacobian `I - Λ² diag(∂N/∂u)` is factored at every iterate,
/// including the first, so a singular linearisation is reported even when
/// `u₀` already solves the problem.
pub fn newton<T: Real>(u0: &SampledFn<T>, mu: T, spec: &ProblemSpec<T>, tol: Option<T>) -> Result<NewtonOutcome<T>> {
    u0.ensure_same_grid(&spec.m)?;
    check_boundary(u0)?;
    let tol = tol.unwrap_or_else(|| default_tolerance(u0));
    let grid = *u0.grid();
    let mut u = u0.clone();
    let mut g = spec.fixed_point_residual(&u, mu)?;
    let mut r = g.max_abs();
    let mut history = vec![r];
    for it in 0..=NEWTON_MAX_ITER {
        let jac = ShiftedBeam::factor(grid, &spec.n_du(u.interior(), mu))
            .map_err(|_| Error::SingularJacobian { pivot: 0.0 })?;
        if jac.is_near_singular() {
            return Err(Error::SingularJacobian {
                pivot: jac.min_pivot_ratio().to_f64_lossy(),
            });
        }
        if r <= tol {
            return Ok(NewtonOutcome {
                u,
                iterations: it,
                history,
            });
        }
        if it == NEWTON_MAX_ITER {
            break;
        }
        let rhs: Vec<T> = g.interior().iter().map(|&x| -x).collect();
        let step = jac.solve_fixed_point(&rhs);
        let mut lambda = T::one();
        loop {
            let trial_i: Vec<T> = u
                .interior()
                .iter()
                .zip(&step)
                .map(|(&a, &d)| a + lambda * d)
                .collect();
            let trial = SampledFn::from_interior(grid, &trial_i);
            let tg = spec.fixed_point_residual(&trial, mu)?;
            let tr = tg.max_abs();
            let floor = lambda <= T::lit(ARMIJO_FLOOR);
            if (tr.is_finite() && tr <= (T::one() - T::lit(1e-4) * lambda) * r) || floor {
                u = trial;
                g = tg;
                r = tr;
                break;
            }
            lambda = lambda * T::lit(0.5);
        }
        if !r.is_finite() {
            break;
        }
        history.push(r);
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual: r.to_f64_lossy(),
    })
}

/// Nonlinearity as named in configuration files:
/// `{"type": "cubic", "params": {"c": 1.0}}` and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum NonlinearityConfig {
    Zero,
    Cubic {
        #[serde(default = "one")]
        c: f64,
    },
    Linear,
    Saturating {
        #[serde(default = "one")]
        f0: f64,
        #[serde(default = "two")]
        finf: f64,
    },
    Atan,
    Table {
        path: String,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl NonlinearityConfig {
    /// Parses a CLI name: `zero`, `cubic`, `linear`, `saturating`, `atan`,
    /// or a path to an `s,f` CSV table.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "zero" => Self::Zero,
            "cubic" => Self::Cubic { c: 1.0 },
            "linear" => Self::Linear,
            "saturating" => Self::Saturating { f0: 1.0, finf: 2.0 },
            "atan" => Self::Atan,
            p if Path::new(p).is_file() => Self::Table { path: p.into() },
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown nonlinearity '{other}' (zero, cubic, linear, saturating, atan or a CSV path)"
                )))
            }
        })
    }

    pub fn is_perturbation(&self) -> bool {
        matches!(self, Self::Zero | Self::Cubic { .. })
    }

    pub fn perturbation<T: Real>(&self) -> Result<PerturbationG<T>> {
        match self {
            Self::Zero => Ok(PerturbationG::zero()),
            Self::Cubic { c } => Ok(PerturbationG::cubic(T::lit(*c))),
            other => Err(Error::InvalidInput(format!("{other:?} is not a perturbation g"))),
        }
    }

    pub fn asymptotic<T: Real>(&self) -> Result<AsymptoticF<T>> {
        match self {
            Self::Linear => Ok(AsymptoticF::linear()),
            Self::Saturating { f0, finf } => Ok(AsymptoticF::saturating(T::lit(*f0), T::lit(*finf))),
            Self::Atan => Ok(AsymptoticF::atan()),
            Self::Table { path } => AsymptoticF::read_table(path),
            other => Err(Error::InvalidInput(format!("{other:?} is not an asymptotically linear f"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::spectrum::eigen_pencil;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid<f64> {
        Grid::new(n).unwrap()
    }

    fn one(n: usize) -> SampledFn<f64> {
        Weight::One.sample(grid(n))
    }

    #[test]
    fn residual_cases() {
        let spec = ProblemSpec::perturbed(one(200), PerturbationG::cubic(1.0));
        let z = SampledFn::zeros(grid(200));
        assert_eq!(residual(&z, 3.0, &spec).unwrap().max_norm, 0.0);

        let spec = ProblemSpec::perturbed(one(200), PerturbationG::zero());
        let u = SampledFn::from_fn(grid(200), |t| (PI * t).sin());
        let h = grid(200).h();
        let r = residual(&u, PI.powi(4), &spec).unwrap();
        assert!(r.max_norm < 20.0 * PI.powi(6) * h * h, "{}", r.max_norm);

        let m = Weight::Cos2Pi.sample(grid(200));
        let spec = ProblemSpec::perturbed(m, PerturbationG::manufactured(Weight::Cos2Pi));
        let r = residual(&u, 7.0, &spec).unwrap();
        assert!(r.max_norm < 20.0 * PI.powi(6) * h * h);
    }

    #[test]
    fn residual_rejects_boundary_violation() {
        let spec = ProblemSpec::perturbed(one(50), PerturbationG::zero());
        let u = SampledFn::from_fn(grid(50), |t| (PI * t).sin() + 1e-3);
        assert!(matches!(residual(&u, 1.0, &spec), Err(Error::BoundaryViolation(_))));
        assert!(matches!(newton(&u, 1.0, &spec, None), Err(Error::BoundaryViolation(_))));
    }

    #[test]
    fn residual_is_affine_in_mu() {
        let spec = ProblemSpec::perturbed(Weight::Sin3Pi.sample(grid(60)), PerturbationG::cubic(2.0));
        let u = SampledFn::from_fn(grid(60), |t| (2.0 * PI * t).sin() * 0.3);
        let (a, b) = (5.0, 900.0);
        let ra = residual(&u, a, &spec).unwrap().vector;
        let rb = residual(&u, b, &spec).unwrap().vector;
        let rm = residual(&u, 0.5 * (a + b), &spec).unwrap().vector;
        for i in 0..u.values().len() {
            let mid = 0.5 * (ra.values()[i] + rb.values()[i]);
            assert!((rm.values()[i] - mid).abs() <= 1e-12 * (1.0 + mid.abs()) * 1e3);
        }
    }

    #[test]
    fn small_o_cases() {
        let r = check_small_o(&PerturbationG::cubic(1.0), (0.0, 100.0));
        assert!(r.passed);
        for (s, v) in &r.table {
            assert!((v - s * s).abs() <= 1e-12 * s * s);
        }
        assert!(!check_small_o(&PerturbationG::linear(1.0), (0.0, 100.0)).passed);
        let f = AsymptoticF::saturating(1.0, 2.0);
        assert!(check_small_o(&PerturbationG::from_asymptotic(&f), (0.0, 200.0)).passed);
        assert!(check_small_o(&PerturbationG::<f64>::zero(), (0.0, 1.0)).passed);
    }

    #[test]
    fn asymptotics_cases() {
        let r = check_asymptotics(&AsymptoticF::<f64>::linear()).unwrap();
        assert_eq!((r.f0_hat, r.finf_hat, r.h1_ok), (1.0, 1.0, true));
        let r = check_asymptotics(&AsymptoticF::saturating(1.0, 2.0)).unwrap();
        assert!((r.f0_hat - 1.0).abs() < 1e-9 && (r.finf_hat - 2.0).abs() < 1e-9 && r.h1_ok);
        let r = check_asymptotics(&AsymptoticF::<f64>::atan()).unwrap();
        assert!((r.f0_hat - 2.0).abs() < 1e-9 && (r.finf_hat - 1.0).abs() < 1e-5);
        let gauss = AsymptoticF::custom("gauss", |s: f64| s * (-s * s).exp(), 1.0, 1.0);
        assert!(matches!(check_asymptotics(&gauss), Err(Error::AsymptoticMismatch(_))));
        let wrong = AsymptoticF::custom("wrong", |s: f64| 3.0 * s, 1.0, 3.0);
        assert!(matches!(check_asymptotics(&wrong), Err(Error::AsymptoticMismatch(_))));
    }

    #[test]
    fn h1_violation_is_flagged() {
        let f = AsymptoticF::custom("bump", |s: f64| s * (1.0 - 2.0 * (-(s - 3.0).powi(2)).exp()), 1.0, 1.0);
        let r = check_asymptotics(&f).unwrap();
        assert!(!r.h1_ok);
    }

    #[test]
    fn table_nonlinearity() {
        let f = AsymptoticF::table("t", vec![(-2.0, -3.0), (-1.0, -1.0), (0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_eq!((f.f0, f.finf), (1.0, 2.0));
        assert_eq!(f.eval(0.5), 0.5);
        assert_eq!(f.eval(1.5), 2.0);
        assert_eq!(f.eval(10.0), 19.0);
        assert_eq!(f.eval(-10.0), -19.0);
        assert_eq!(f.derivative(3.0), 2.0);
        let r = check_asymptotics(&f).unwrap();
        assert!(r.h1_ok && (r.finf_hat - 2.0).abs() < 1e-5);
        assert!(AsymptoticF::<f64>::table("bad", vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn config_round_trip() {
        let c: NonlinearityConfig = serde_json::from_str(r#"{"type":"saturating","params":{"f0":1,"finf":3}}"#).unwrap();
        assert_eq!(c, NonlinearityConfig::Saturating { f0: 1.0, finf: 3.0 });
        let c: NonlinearityConfig = serde_json::from_str(r#"{"type":"atan"}"#).unwrap();
        assert_eq!(c, NonlinearityConfig::Atan);
        assert_eq!(NonlinearityConfig::from_name("cubic").unwrap(), NonlinearityConfig::Cubic { c: 1.0 });
        assert!(NonlinearityConfig::from_name("cubic").unwrap().perturbation::<f64>().is_ok());
        assert!(NonlinearityConfig::from_name("atan").unwrap().perturbation::<f64>().is_err());
    }

    #[test]
    fn newton_fixed_point_and_manufactured() {
        let n = 400;
        let g = grid(n);
        let m = Weight::Sin3Pi.sample(g);
        let spec = ProblemSpec::perturbed(m, PerturbationG::manufactured(Weight::Sin3Pi));
        let u0 = SampledFn::from_fn(g, |t| (PI * t).sin() + 0.1 * (2.0 * PI * t).sin());
        let out = newton(&u0, 7.0, &spec, None).unwrap();
        assert!(out.iterations <= 8);
        let exact = SampledFn::from_fn(g, |t| (PI * t).sin());
        assert!(out.u.sub(&exact).unwrap().max_abs() < 5.0 * g.h() * g.h());
        // already a solution
        let again = newton(&out.u, 7.0, &spec, None).unwrap();
        assert!(again.iterations <= 1);
        assert!(again.u.sub(&out.u).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn newton_quadratic_tail() {
        let g = grid(300);
        let spec = ProblemSpec::perturbed(one(300), PerturbationG::manufactured(Weight::One));
        let u0 = SampledFn::from_fn(g, |t| (PI * t).sin() + 0.3 * (3.0 * PI * t).sin());
        let out = newton(&u0, 50.0, &spec, Some(1e-14)).unwrap();
        let h = &out.history;
        assert!(h.len() >= 3);
        // manufactured problem is linear in u, so Newton lands in one step
        assert!(h[1] <= 1e4 * h[0] * h[0] || h[1] < 1e-13);
    }

    #[test]
    fn newton_on_cubic_branch_point() {
        // nontrivial solution of u'''' = μu + u³ beyond the first eigenvalue
        let n = 300;
        let g = grid(n);
        let spec = ProblemSpec::perturbed(one(n), PerturbationG::cubic(-1.0));
        let u0 = SampledFn::from_fn(g, |t| 3.0 * (PI * t).sin());
        let out = newton(&u0, PI.powi(4) + 30.0, &spec, None).unwrap();
        let h = &out.history;
        let k = h.len();
        assert!(k >= 3);
        for j in k - 3..k - 1 {
            if h[j + 1] > 1e-15 {
                assert!(h[j + 1] <= 1e4 * h[j] * h[j], "{h:?}");
            }
        }
        assert!(fixed_point_residual(&out.u, PI.powi(4) + 30.0, &spec).unwrap().max_norm < 1e-9);
    }

    #[test]
    fn newton_singular_at_discrete_eigenvalue() {
        let n = 200;
        let m = one(n);
        let s = eigen_pencil(&m, 1, 0).unwrap();
        let spec = ProblemSpec::perturbed(m, PerturbationG::zero());
        let u0 = s.positive[0].phi.scale(1e-3);
        assert!(matches!(
            newton(&u0, s.positive[0].mu, &spec, None),
            Err(Error::SingularJacobian { .. })
        ));
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let n = 40;
        let g = grid(n);
        let m = Weight::LinearRamp.sample(g);
        let f = AsymptoticF::saturating(1.0, 3.0);
        for spec in [
            ProblemSpec::perturbed(m.clone(), PerturbationG::cubic(1.5)),
            ProblemSpec::autonomous(m.clone(), 40.0, f),
        ] {
            let u = SampledFn::from_fn(g, |t| (PI * t).sin() * (1.0 + t));
            let mu = 2.5;
            let d = spec.n_du(u.interior(), mu);
            let base = u.interior().to_vec();
            for j in [0usize, 7, 20, 39] {
                let e = 1e-6 * (1.0 + base[j].abs());
                let mut p = base.clone();
                p[j] += e;
                let mut q = base.clone();
                q[j] -= e;
                let gp = spec.fixed_point_residual(&SampledFn::from_interior(g, &p), mu).unwrap();
                let gq = spec.fixed_point_residual(&SampledFn::from_interior(g, &q), mu).unwrap();
                let mut ej = vec![0.0; n];
                ej[j] = d[j];
                let analytic_col = lambda2(&SampledFn::from_interior(g, &ej));
                for i in 0..n {
                    let fd = (gp.interior()[i] - gq.interior()[i]) / (2.0 * e);
                    let an = if i == j { 1.0 } else { 0.0 } - analytic_col.interior()[i];
                    assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "col {j} row {i}: {fd} vs {an}");
                }
            }
        }
    }
}
