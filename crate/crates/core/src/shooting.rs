//! Shooting solver for the nonlinear boundary value problem
//! `u'''' = N(t, u, μ)`, `u = u'' = 0` at both ends, used as an oracle that
//! shares no discretisation with the finite-difference solvers.
//!
//! The free initial data `(u'(0), u'''(0))` are found by Newton on the
//! terminal values `(u(1), u''(1))`, with the 4×2 variational system
//! integrated alongside the solution by RK4.

use crate::error::{Error, Result};
use crate::grid::{derivative, DerivOrder, Grid, SampledFn};
use crate::nonlinear::{ProblemKind, ProblemSpec};
use crate::scalar::Real;

/// Largest RK4 step.
pub const MAX_STEP: f64 = 1e-4;
const MAX_ITER: usize = 50;

#[derive(Debug, Clone)]
pub struct ShootingSolution<T> {
    pub u: SampledFn<T>,
    /// `(u'(0), u'''(0))`.
    pub initial: (T, T),
    /// `max(|u(1)|, |u''(1)|)` at the final shot.
    pub defect: T,
    pub iterations: usize,
}

struct Rhs<'a, T> {
    spec: &'a ProblemSpec<T>,
    mu: T,
}

impl<T: Real> Rhs<'_, T> {
    /// `(N, ∂N/∂u)` at `(t, s)` with the weight interpolated off-grid.
    fn eval(&self, t: T, s: T) -> (T, T) {
        let m = self.spec.m.interpolate_cubic(t);
        match &self.spec.kind {
            ProblemKind::Perturbed { g } => (
                self.mu * m * s + g.eval(t, s, self.mu),
                self.mu * m + g.ds(t, s, self.mu),
            ),
            ProblemKind::Autonomous { gamma, f } => {
                let c = self.mu * *gamma * m;
                (c * f.eval(s), c * f.derivative(s))
            }
        }
    }
}

type State<T> = [T; 12];

/// `y = (u, u', u'', u''')` followed by the two variational columns.
fn deriv<T: Real>(rhs: &Rhs<'_, T>, t: T, y: &State<T>) -> State<T> {
    let (n, dn) = rhs.eval(t, y[0]);
    let mut out = [T::zero(); 12];
    out[0] = y[1];
    out[1] = y[2];
    out[2] = y[3];
    out[3] = n;
    for c in 0..2 {
        let o = 4 + 4 * c;
        out[o] = y[o + 1];
        out[o + 1] = y[o + 2];
        out[o + 2] = y[o + 3];
        out[o + 3] = dn * y[o];
    }
    out
}

/// Integrates from `t = 0` and samples `u` at the nodes of `grid`.
fn integrate<T: Real>(rhs: &Rhs<'_, T>, grid: Grid<T>, a: T, b: T) -> (State<T>, Vec<T>) {
    let h = grid.h();
    let sub = (h / T::lit(MAX_STEP)).ceil().to_usize().unwrap_or(1).max(1);
    let dt = h / T::from_usize_lossy(sub);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let sixth = T::one() / T::lit(6.0);
    let mut y = [T::zero(); 12];
    y[1] = a;
    y[3] = b;
    y[5] = T::one();
    y[11] = T::one();
    let mut samples = Vec::with_capacity(grid.len());
    samples.push(T::zero());
    for node in 0..grid.last() {
        let t0 = grid.node(node);
        for s in 0..sub {
            let t = t0 + T::from_usize_lossy(s) * dt;
            let k1 = deriv(rhs, t, &y);
            let y2: State<T> = std::array::from_fn(|i| y[i] + half * dt * k1[i]);
            let k2 = deriv(rhs, t + half * dt, &y2);
            let y3: State<T> = std::array::from_fn(|i| y[i] + half * dt * k2[i]);
            let k3 = deriv(rhs, t + half * dt, &y3);
            let y4: State<T> = std::array::from_fn(|i| y[i] + dt * k3[i]);
            let k4 = deriv(rhs, t + dt, &y4);
            for i in 0..12 {
                y[i] = y[i] + dt * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
            }
        }
        samples.push(y[0]);
    }
    (y, samples)
}

/// Solves the boundary value problem by shooting from initial slopes
/// `(u'(0), u'''(0)) = initial`.
pub fn shoot<T: Real>(spec: &ProblemSpec<T>, mu: T, initial: (T, T)) -> Result<ShootingSolution<T>> {
    let grid = *spec.m.grid();
    let rhs = Rhs { spec, mu };
    let (mut a, mut b) = initial;
    let mut defect = T::infinity();
    for it in 0..MAX_ITER {
        let (y, samples) = integrate(&rhs, grid, a, b);
        let (r0, r2) = (y[0], y[2]);
        defect = r0.abs().max(r2.abs());
        let scale = T::one() + a.abs() + b.abs();
        if !defect.is_finite() {
            break;
        }
        if defect <= T::lit(1e-13) * scale {
            let mut u = samples;
            let last = u.len() - 1;
            u[last] = T::zero();
            return Ok(ShootingSolution {
                u: SampledFn::from_values(grid, u)?,
                initial: (a, b),
                defect,
                iterations: it,
            });
        }
        // J = ∂(u(1), u''(1)) / ∂(a, b)
        let (j00, j01, j10, j11) = (y[4], y[8], y[6], y[10]);
        let det = j00 * j11 - j01 * j10;
        if det == T::zero() || !det.is_finite() {
            return Err(Error::SingularJacobian { pivot: 0.0 });
        }
        let da = -(j11 * r0 - j01 * r2) / det;
        let db = -(-j10 * r0 + j00 * r2) / det;
        a = a + da;
        b = b + db;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual: defect.to_f64_lossy(),
    })
}

/// [`shoot`] with initial slopes read off a finite-difference guess.
pub fn shoot_from_guess<T: Real>(spec: &ProblemSpec<T>, mu: T, guess: &SampledFn<T>) -> Result<ShootingSolution<T>> {
    let a = derivative(guess, DerivOrder::First).values()[0];
    let b = derivative(guess, DerivOrder::Third).values()[0];
    shoot(spec, mu, (a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::{AsymptoticF, PerturbationG};
    use crate::weights::Weight;
    use std::f64::consts::PI;

    #[test]
    fn manufactured_solution_is_recovered() {
        let g: Grid<f64> = Grid::new(199).unwrap();
        let spec = ProblemSpec::perturbed(Weight::One.sample(g), PerturbationG::manufactured(Weight::One));
        let sol = shoot(&spec, 3.0, (2.0, -20.0)).unwrap();
        let exact = SampledFn::from_fn(g, |t| (PI * t).sin());
        assert!(sol.u.sub(&exact).unwrap().max_abs() < 1e-9);
        assert!((sol.initial.0 - PI).abs() < 1e-8);
        assert!((sol.initial.1 + PI.powi(3)).abs() < 1e-6);
    }

    #[test]
    fn linear_problem_away_from_eigenvalue_gives_zero() {
        let g: Grid<f64> = Grid::new(99).unwrap();
        let spec = ProblemSpec::autonomous(Weight::One.sample(g), 50.0, AsymptoticF::linear());
        let sol = shoot(&spec, 1.0, (1.0, 1.0)).unwrap();
        assert!(sol.u.max_abs() < 1e-12);
    }
}
