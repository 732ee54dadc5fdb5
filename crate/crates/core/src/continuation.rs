//! Pseudo-arclength continuation of the unilateral branches that bifurcate
//! from `(μ_k^ν, 0)`, crossing of the hyperplane `μ = 1`, and the drivers
//! producing nodal solutions of `u'''' = γ m(t) f(u)`.
//!
//! All systems are posed in fixed-point form `G(u, μ) = u - Λ²N(u, μ)`.
//! The extended Newton systems carry one linear side condition and are
//! solved by [`BorderedBeam`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{e_norm, ENorm, Grid, SampledFn};
use crate::linops::{BorderedBeam, SecondDiffOperator};
use crate::nodal::{nodal_profile, NodalProfile, Sign};
use crate::nonlinear::{check_asymptotics, newton, AsymptoticF, ProblemSpec};
use crate::scalar::{dot, Real};
use crate::spectrum::{eigen_pencil_with, EigenPair, NodalPolicy, PencilOptions, SpectrumResult};

/// Halvings of the start amplitude tried before giving up.
pub const START_HALVINGS: usize = 8;
const CORRECTOR_MAX_ITER: usize = 12;
const START_EXTRA_ITER: usize = 4;
const GROW_BELOW_ITER: usize = 4;
const GROWTH: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub eps_start: f64,
    pub corrector_tol: f64,
    pub max_steps: usize,
    pub norm_budget: f64,
    /// Stop as soon as the branch brackets `μ = goal_mu`.
    pub goal_mu: Option<f64>,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            ds: 0.05,
            ds_min: 1e-5,
            ds_max: 0.5,
            eps_start: 1e-3,
            corrector_tol: 1e-10,
            max_steps: 2000,
            norm_budget: 1e3,
            goal_mu: None,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ds_min > 0.0
            && self.ds_min <= self.ds
            && self.ds <= self.ds_max
            && self.eps_start > 0.0
            && self.corrector_tol > 0.0
            && self.norm_budget > self.eps_start
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid continuation config {self:?}")))
        }
    }

    pub fn with_goal(mut self, mu: f64) -> Self {
        self.goal_mu = Some(mu);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint<T> {
    pub mu: T,
    #[serde(skip)]
    pub u: SampledFn<T>,
    pub norm: ENorm<T>,
    pub profile: NodalProfile<T>,
    pub arclength: T,
}

impl<T: Real> BranchPoint<T> {
    fn new(mu: T, u: SampledFn<T>, arclength: T) -> Result<Self> {
        let profile = nodal_profile(&u)?;
        Ok(Self {
            mu,
            norm: e_norm(&u),
            u,
            profile,
            arclength,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Termination {
    NormBudget,
    MaxSteps,
    HyperplaneGoal,
    StepFailure { diagnostic: String },
    /// The branch came back to the trivial solution near `μ`; this contradicts
    /// the containment of the branch in its nodal class and is reported as a
    /// failure.
    ReturnedToTrivial { mu: f64 },
}

#[derive(Debug, Clone)]
pub struct Branch<T> {
    pub k: usize,
    pub nu: Sign,
    pub sigma: Sign,
    pub points: Vec<BranchPoint<T>>,
    /// `μ` of the bifurcation point `(μ_k^ν / linear_scale, 0)`.
    pub origin: T,
    pub termination: Termination,
}

impl<T: Real> Branch<T> {
    /// Indices of points whose profile leaves the class `(k - 1, σ)` or
    /// carries a double zero.
    pub fn containment_violations(&self) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.profile.in_class(self.k, self.sigma) || p.profile.has_double_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn double_zero_count(&self) -> usize {
        self.points.iter().filter(|p| p.profile.has_double_zero()).count()
    }

    pub fn max_enorm(&self) -> T {
        self.points.iter().fold(T::zero(), |m, p| m.max(p.norm.value))
    }

    pub fn label(&self) -> String {
        format!("k{}_{}{}", self.k, nu_word(self.nu), sigma_word(self.sigma))
    }

    /// Errors with `StepFailure` unless the branch ended normally.
    pub fn ensure_complete(&self) -> Result<()> {
        let last = self.points.last();
        let diag = match &self.termination {
            Termination::StepFailure { diagnostic } => diagnostic.clone(),
            Termination::ReturnedToTrivial { mu } => format!("branch returned to the trivial solution near mu = {mu}"),
            _ => return Ok(()),
        };
        Err(Error::StepFailure {
            points: self.points.len(),
            mu: last.map_or(f64::NAN, |p| p.mu.to_f64_lossy()),
            enorm: last.map_or(f64::NAN, |p| p.norm.value.to_f64_lossy()),
            diagnostic: diag,
        })
    }

    /// Summary table `step,arclength,mu,enorm,count,sigma`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("step,arclength,mu,enorm,count,sigma\n");
        for (i, p) in self.points.iter().enumerate() {
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{},{}\n",
                i,
                p.arclength.to_f64_lossy(),
                p.mu.to_f64_lossy(),
                p.norm.value.to_f64_lossy(),
                p.profile.count,
                p.profile.sigma
            ));
        }
        s
    }
}

fn nu_word(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "pos",
        Sign::Minus => "neg",
    }
}

fn sigma_word(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "p",
        Sign::Minus => "m",
    }
}

/// Inner product `h Σ (A v)(A w) + μ_v μ_w` used to measure arclength.
struct Metric<T> {
    a: SecondDiffOperator<T>,
    h: T,
}

impl<T: Real> Metric<T> {
    fn new(grid: Grid<T>) -> Self {
        Self {
            a: SecondDiffOperator::new(grid),
            h: grid.h(),
        }
    }

    fn norm(&self, du: &[T], dmu: T) -> T {
        let av = self.a.apply(du);
        (self.h * dot(&av, &av) + dmu * dmu).sqrt()
    }

    /// Row `r` with `r · v = h Σ (A τ)(A v)`.
    fn row(&self, tau: &[T]) -> Vec<T> {
        let aat = self.a.apply(&self.a.apply(tau));
        aat.into_iter().map(|x| x * self.h).collect()
    }
}

struct Corrected<T> {
    u: Vec<T>,
    mu: T,
    iterations: usize,
}

/// Newton on `G(u, μ) = 0`, `row · u + corner μ = target`.
#[allow(clippy::too_many_arguments)]
fn bordered_newton<T: Real>(
    spec: &ProblemSpec<T>,
    u0: &[T],
    mu0: T,
    row: &[T],
    corner: T,
    target: T,
    tol: T,
    extra: usize,
) -> Result<Corrected<T>> {
    let grid = *spec.m.grid();
    let mut u = u0.to_vec();
    let mut mu = mu0;
    let c_scale = T::one().max(target.abs());
    let mut converged_at = None;
    for it in 0..CORRECTOR_MAX_ITER + extra {
        let uf = SampledFn::from_interior(grid, &u);
        let g = spec.fixed_point_residual(&uf, mu)?;
        let c = dot(row, &u) + corner * mu - target;
        let gmax = g.max_abs();
        if !gmax.is_finite() {
            break;
        }
        let ok = gmax <= tol * (T::one() + e_norm(&uf).value) && c.abs() <= tol * c_scale;
        if ok && converged_at.is_none() {
            converged_at = Some(it);
        }
        if let Some(at) = converged_at {
            if it >= at + extra {
                return Ok(Corrected { u, mu, iterations: it });
            }
        }
        let sys = BorderedBeam::factor(grid, &spec.n_du(&u, mu), &spec.n_dmu(&u, mu), row, corner)?;
        let r: Vec<T> = g.interior().iter().map(|&x| -x).collect();
        let (du, dmu) = sys.solve(&r, -c);
        let tiny = dmu.abs() <= T::lit(1e-13) * (T::one() + mu.abs())
            && du.iter().fold(T::zero(), |m, d| m.max(d.abs()))
                <= T::lit(1e-13) * u.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        u.iter_mut().zip(&du).for_each(|(a, d)| *a = *a + *d);
        mu = mu + dmu;
        if converged_at.is_some() && tiny {
            return Ok(Corrected { u, mu, iterations: it + 1 });
        }
    }
    if converged_at.is_some() {
        return Ok(Corrected {
            u,
            mu,
            iterations: CORRECTOR_MAX_ITER + extra,
        });
    }
    Err(Error::NoConvergence {
        iterations: CORRECTOR_MAX_ITER + extra,
        residual: f64::NAN,
    })
}

fn spectrum_pair<T: Real>(spectrum: &SpectrumResult<T>, k: usize, nu: Sign) -> Result<&EigenPair<T>> {
    spectrum
        .get(k, nu)
        .ok_or_else(|| Error::InvalidInput(format!("eigenpair k = {k} ({nu}) was not computed")))
}

/// First point of the branch `(C_k^ν)^σ`: the predictor `(μ_k^ν, ε σ φ_k^ν)`
/// polished by Newton with `μ` free and the amplitude pinned by
/// `⟨u, φ⟩ = ε σ ⟨φ, φ⟩`. The amplitude is halved up to
/// [`START_HALVINGS`] times if the polish fails, and shrunk slightly when
/// needed so that the returned point has `e_norm ≤ ε`.
pub fn bifurcation_start<T: Real>(
    spectrum: &SpectrumResult<T>,
    k: usize,
    nu: Sign,
    sigma: Sign,
    spec: &ProblemSpec<T>,
    config: &ContinuationConfig,
) -> Result<BranchPoint<T>> {
    config.validate()?;
    spec.m.ensure_same_grid(&spectrum.weight)?;
    let pair = spectrum_pair(spectrum, k, nu)?;
    let scale = spec.linear_scale();
    if scale == T::zero() {
        return Err(Error::StartFailure("linearisation at u = 0 vanishes".into()));
    }
    let mu0 = pair.mu_discrete / scale;
    let phi = pair.phi.interior();
    let h = spectrum.grid.h();
    let row: Vec<T> = phi.iter().map(|&p| p * h).collect();
    let pp = dot(&row, phi);
    let tol = T::lit(config.corrector_tol);
    let eps = T::lit(config.eps_start);
    let s = sigma.as_real::<T>();

    let mut amp = eps;
    let mut last_err = String::new();
    for _ in 0..=START_HALVINGS {
        let mut target_amp = amp;
        let mut attempt = None;
        for _ in 0..4 {
            let u0: Vec<T> = phi.iter().map(|&p| s * target_amp * p).collect();
            match bordered_newton(spec, &u0, mu0, &row, T::zero(), s * target_amp * pp, tol, START_EXTRA_ITER) {
                Ok(c) => {
                    let u = SampledFn::from_interior(spectrum.grid, &c.u);
                    let en = e_norm(&u).value;
                    if en <= amp {
                        attempt = Some((c.mu, u));
                        break;
                    }
                    target_amp = target_amp * (amp / en) * (T::one() - T::lit(1e-12));
                }
                Err(e) => {
                    last_err = e.to_string();
                    break;
                }
            }
        }
        if let Some((mu, u)) = attempt {
            let point = BranchPoint::new(mu, u, T::zero())?;
            if point.profile.in_class(k, sigma) && !point.profile.has_double_zero() {
                return Ok(point);
            }
            return Err(Error::StartFailure(format!(
                "start point for k = {k} ({nu}), sigma = {sigma} has {} interior zeros and sign {} \
                 (expected {} and {sigma})",
                point.profile.count,
                point.profile.sigma,
                k - 1
            )));
        }
        amp = amp * T::lit(0.5);
    }
    Err(Error::StartFailure(format!(
        "polish did not converge down to amplitude {}: {last_err}",
        amp.to_f64_lossy()
    )))
}

enum StepOutcome<T> {
    Accepted(BranchPoint<T>, usize),
    Rejected(String),
}

/// Pseudo-arclength tracing from a start point produced by
/// [`bifurcation_start`]. Never returns a branch containing a profile
/// change; fails with `StepFailure` if the tracer cannot proceed.
pub fn trace_branch<T: Real>(
    start: BranchPoint<T>,
    k: usize,
    nu: Sign,
    sigma: Sign,
    origin: T,
    spec: &ProblemSpec<T>,
    config: &ContinuationConfig,
) -> Result<Branch<T>> {
    let branch = trace_branch_report(start, k, nu, sigma, origin, spec, config)?;
    branch.ensure_complete()?;
    Ok(branch)
}

/// As [`trace_branch`], but a failed step ends the branch with
/// [`Termination::StepFailure`] instead of an error, keeping the points
/// accepted so far.
pub fn trace_branch_report<T: Real>(
    start: BranchPoint<T>,
    k: usize,
    nu: Sign,
    sigma: Sign,
    origin: T,
    spec: &ProblemSpec<T>,
    config: &ContinuationConfig,
) -> Result<Branch<T>> {
    config.validate()?;
    start.u.ensure_same_grid(&spec.m)?;
    let grid = *spec.m.grid();
    let metric = Metric::new(grid);
    let tol = T::lit(config.corrector_tol);
    let eps = T::lit(config.eps_start);
    let budget = T::lit(config.norm_budget);
    let ds_min = T::lit(config.ds_min);
    let ds_max = T::lit(config.ds_max);
    let goal = config.goal_mu.map(T::lit);

    let mut ds = T::lit(config.ds);
    let mut points = vec![start];
    let termination = loop {
        let n_pts = points.len();
        let last = &points[n_pts - 1];
        if let Some(g) = goal {
            if n_pts >= 2 && (points[n_pts - 2].mu - g) * (last.mu - g) <= T::zero() {
                break Termination::HyperplaneGoal;
            }
            if last.mu == g {
                break Termination::HyperplaneGoal;
            }
        }
        if last.norm.value >= budget {
            break Termination::NormBudget;
        }
        if n_pts > 1 && last.norm.value < eps / T::lit(10.0) {
            break Termination::ReturnedToTrivial {
                mu: last.mu.to_f64_lossy(),
            };
        }
        if n_pts > config.max_steps {
            break Termination::MaxSteps;
        }

        // unit tangent: eigenfunction direction first, then the secant
        let (tau_u, tau_mu) = if n_pts == 1 {
            let d: Vec<T> = last.u.interior().to_vec();
            let nrm = metric.norm(&d, T::zero());
            (d.into_iter().map(|x| x / nrm).collect::<Vec<_>>(), T::zero())
        } else {
            let prev = &points[n_pts - 2];
            let du: Vec<T> = last
                .u
                .interior()
                .iter()
                .zip(prev.u.interior())
                .map(|(&a, &b)| a - b)
                .collect();
            let dmu = last.mu - prev.mu;
            let nrm = metric.norm(&du, dmu);
            (du.into_iter().map(|x| x / nrm).collect(), dmu / nrm)
        };
        let row = metric.row(&tau_u);

        let outcome = loop {
            let step = try_step(spec, &metric, last, &tau_u, tau_mu, &row, ds, tol, k, sigma);
            match step {
                StepOutcome::Accepted(p, it) => break Ok((p, it)),
                StepOutcome::Rejected(why) => {
                    let half = ds * T::lit(0.5);
                    if half < ds_min {
                        break Err(why);
                    }
                    ds = half;
                }
            }
        };
        match outcome {
            Ok((p, it)) => {
                points.push(p);
                if it < GROW_BELOW_ITER {
                    ds = (ds * T::lit(GROWTH)).min(ds_max);
                }
            }
            Err(why) => break Termination::StepFailure { diagnostic: why },
        }
    };
    Ok(Branch {
        k,
        nu,
        sigma,
        points,
        origin,
        termination,
    })
}

#[allow(clippy::too_many_arguments)]
fn try_step<T: Real>(
    spec: &ProblemSpec<T>,
    metric: &Metric<T>,
    last: &BranchPoint<T>,
    tau_u: &[T],
    tau_mu: T,
    row: &[T],
    ds: T,
    tol: T,
    k: usize,
    sigma: Sign,
) -> StepOutcome<T> {
    let grid = *spec.m.grid();
    let u_last = last.u.interior();
    let pred: Vec<T> = u_last.iter().zip(tau_u).map(|(&u, &t)| u + ds * t).collect();
    let mu_pred = last.mu + ds * tau_mu;
    let target = dot(row, u_last) + tau_mu * last.mu + ds;
    let c = match bordered_newton(spec, &pred, mu_pred, row, tau_mu, target, tol, 0) {
        Ok(c) => c,
        Err(e) => return StepOutcome::Rejected(format!("corrector failed at ds = {}: {e}", ds.to_f64_lossy())),
    };
    let du: Vec<T> = c.u.iter().zip(u_last).map(|(&a, &b)| a - b).collect();
    let chord = metric.norm(&du, c.mu - last.mu);
    if chord > T::lit(2.0) * ds {
        return StepOutcome::Rejected(format!(
            "corrector jumped {} for ds = {}",
            chord.to_f64_lossy(),
            ds.to_f64_lossy()
        ));
    }
    let u = SampledFn::from_interior(grid, &c.u);
    let point = match BranchPoint::new(c.mu, u, last.arclength + chord) {
        Ok(p) => p,
        Err(e) => return StepOutcome::Rejected(format!("profile failed: {e}")),
    };
    if !point.profile.in_class(k, sigma) || point.profile.has_double_zero() {
        return StepOutcome::Rejected(format!(
            "nodal profile changed to {} zeros, sign {}, nodal = {} at mu = {} (ds = {})",
            point.profile.count,
            point.profile.sigma,
            point.profile.is_nodal,
            c.mu.to_f64_lossy(),
            ds.to_f64_lossy()
        ));
    }
    StepOutcome::Accepted(point, c.iterations)
}

/// Start and trace `(C_k^ν)^σ` in one call.
pub fn branch<T: Real>(
    spectrum: &SpectrumResult<T>,
    k: usize,
    nu: Sign,
    sigma: Sign,
    spec: &ProblemSpec<T>,
    config: &ContinuationConfig,
) -> Result<Branch<T>> {
    let start = bifurcation_start(spectrum, k, nu, sigma, spec, config)?;
    let origin = spectrum_pair(spectrum, k, nu)?.mu_discrete / spec.linear_scale();
    trace_branch_report(start, k, nu, sigma, origin, spec, config)
}

/// Solution of the problem at `μ = 1` on `branch`: an existing point with
/// `μ = 1` is returned as is; otherwise `u` is interpolated linearly
/// between the first pair of points bracketing `μ = 1` and corrected by
/// Newton at `μ = 1`.
pub fn cross_hyperplane<T: Real>(branch: &Branch<T>, spec: &ProblemSpec<T>, config: &ContinuationConfig) -> Result<SampledFn<T>> {
    let one = T::one();
    let tol = T::lit(config.corrector_tol);
    for p in &branch.points {
        if (p.mu - one).abs() <= T::lit(1e-12) {
            let r = spec.fixed_point_residual(&p.u, one)?.max_abs();
            if r <= tol * (one + p.norm.value) {
                return Ok(p.u.clone());
            }
        }
    }
    let bracket = branch
        .points
        .windows(2)
        .find(|w| (w[0].mu - one) * (w[1].mu - one) <= T::zero());
    let Some(w) = bracket else {
        let last = branch.points.last();
        return Err(Error::NoCrossing {
            mu: last.map_or(f64::NAN, |p| p.mu.to_f64_lossy()),
            enorm: last.map_or(f64::NAN, |p| p.norm.value.to_f64_lossy()),
        });
    };
    let (a, b) = (&w[0], &w[1]);
    let theta = if b.mu == a.mu { T::lit(0.5) } else { (one - a.mu) / (b.mu - a.mu) };
    let guess = a.u.combine(one - theta, &b.u, theta)?;
    let out = newton(&guess, one, spec, Some(tol * (one + e_norm(&guess).value)))?;
    let prof = nodal_profile(&out.u)?;
    if !prof.in_class(branch.k, branch.sigma) {
        return Err(Error::StepFailure {
            points: branch.points.len(),
            mu: 1.0,
            enorm: e_norm(&out.u).value.to_f64_lossy(),
            diagnostic: format!(
                "corrected crossing has {} zeros and sign {} (branch class {}, {})",
                prof.count,
                prof.sigma,
                branch.k - 1,
                branch.sigma
            ),
        });
    }
    Ok(out.u)
}

/// Open interval of admissible `γ` for index `k` on side `ν`: strictly
/// between `μ_k^ν / f₀` and `μ_k^ν / f∞`. Empty when `f₀ = f∞`.
pub fn admissible_interval<T: Real>(mu_k: T, f0: T, finf: T) -> Option<(T, T)> {
    range_between(mu_k / f0, mu_k / finf)
}

/// `γ` interval of the multiplicity result for indices `k ≤ j ≤ n`: strictly
/// between `μ_n^ν / f∞` and `μ_k^ν / f₀`, or between `μ_n^ν / f₀` and
/// `μ_k^ν / f∞`, in whichever orientation is nonempty and lies inside every
/// single-index interval.
pub fn multiplicity_intervals<T: Real>(mu_k: T, mu_n: T, f0: T, finf: T) -> Vec<(T, T)> {
    let mut out = Vec::new();
    let lo_hi = |a: T, b: T| if a < b { Some((a, b)) } else { None };
    if mu_k > T::zero() {
        out.extend(lo_hi(mu_n / finf, mu_k / f0));
        out.extend(lo_hi(mu_n / f0, mu_k / finf));
    } else {
        out.extend(lo_hi(mu_k / f0, mu_n / finf));
        out.extend(lo_hi(mu_k / finf, mu_n / f0));
    }
    out
}

fn range_between<T: Real>(a: T, b: T) -> Option<(T, T)> {
    if a < b {
        Some((a, b))
    } else if b < a {
        Some((b, a))
    } else {
        None
    }
}

fn inside(x: f64, (lo, hi): (f64, f64)) -> bool {
    x > lo && x < hi
}

/// A nodal solution of `u'''' = γ m(t) f(u)` together with the branch of
/// the auxiliary problem `u'''' = μ γ m(t) f(u)` that produced it.
#[derive(Debug, Clone)]
pub struct NodalSolution<T> {
    pub k: usize,
    pub nu: Sign,
    pub sigma: Sign,
    pub u: SampledFn<T>,
    pub branch: Branch<T>,
}

fn nodal_spectrum<T: Real>(m: &SampledFn<T>, k: usize, nu: Sign) -> Result<SpectrumResult<T>> {
    let (p, q) = match nu {
        Sign::Plus => (k, 0),
        Sign::Minus => (0, k),
    };
    eigen_pencil_with(
        m,
        p,
        q,
        PencilOptions {
            nodal: NodalPolicy::Report,
            extrapolate: false,
        },
    )
}

/// Nodal solution with `k - 1` simple zeros and sign `σ` near `t = 0`.
pub fn solve_nodal<T: Real>(
    gamma: T,
    f: &AsymptoticF<T>,
    m: &SampledFn<T>,
    k: usize,
    nu: Sign,
    sigma: Sign,
    config: &ContinuationConfig,
) -> Result<SampledFn<T>> {
    let spectrum = nodal_spectrum(m, k, nu)?;
    Ok(solve_nodal_with(&spectrum, gamma, f, k, nu, sigma, config)?.u)
}

/// [`solve_nodal`] reusing a computed spectrum of `m`.
pub fn solve_nodal_with<T: Real>(
    spectrum: &SpectrumResult<T>,
    gamma: T,
    f: &AsymptoticF<T>,
    k: usize,
    nu: Sign,
    sigma: Sign,
    config: &ContinuationConfig,
) -> Result<NodalSolution<T>> {
    let report = check_asymptotics(f)?;
    if !report.passed() {
        return Err(Error::AsymptoticMismatch(format!("{}: f(s) s > 0 fails", f.name)));
    }
    let pair = spectrum_pair(spectrum, k, nu)?;
    let g = gamma.to_f64_lossy();
    let interval = admissible_interval(pair.mu_discrete, f.f0, f.finf)
        .map(|(a, b)| (a.to_f64_lossy(), b.to_f64_lossy()));
    match interval {
        Some(iv) if inside(g, iv) => {}
        _ => {
            return Err(Error::GammaNotAdmissible {
                gamma: g,
                detail: match interval {
                    Some((a, b)) => format!("outside ({a}, {b}) for k = {k} ({nu})"),
                    None => format!("f0 = finf leaves no interval for k = {k} ({nu})"),
                },
            })
        }
    }
    let spec = ProblemSpec::autonomous(spectrum.weight.clone(), gamma, f.clone());
    let cfg = config.with_goal(1.0);
    let branch = branch(spectrum, k, nu, sigma, &spec, &cfg)?;
    let u = match cross_hyperplane(&branch, &spec, &cfg) {
        Ok(u) => u,
        Err(Error::NoCrossing { mu, enorm }) => {
            return Err(match &branch.termination {
                Termination::StepFailure { diagnostic } => Error::StepFailure {
                    points: branch.points.len(),
                    mu,
                    enorm,
                    diagnostic: diagnostic.clone(),
                },
                _ => Error::NoCrossing { mu, enorm },
            })
        }
        Err(e) => return Err(e),
    };
    Ok(NodalSolution {
        k,
        nu,
        sigma,
        u,
        branch,
    })
}

/// The `n - k + 1` pairs of nodal solutions, one pair for each
/// `j = k, …, n`, when `γ` lies in a multiplicity interval.
#[allow(clippy::too_many_arguments)]
pub fn solve_nodal_range<T: Real>(
    spectrum: &SpectrumResult<T>,
    gamma: T,
    f: &AsymptoticF<T>,
    k: usize,
    n: usize,
    nu: Sign,
    config: &ContinuationConfig,
) -> Result<Vec<(NodalSolution<T>, NodalSolution<T>)>> {
    if k == 0 || n < k {
        return Err(Error::InvalidInput(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let mu_k = spectrum_pair(spectrum, k, nu)?.mu_discrete;
    let mu_n = spectrum_pair(spectrum, n, nu)?.mu_discrete;
    let g = gamma.to_f64_lossy();
    let intervals: Vec<(f64, f64)> = multiplicity_intervals(mu_k, mu_n, f.f0, f.finf)
        .into_iter()
        .map(|(a, b)| (a.to_f64_lossy(), b.to_f64_lossy()))
        .collect();
    if !intervals.iter().any(|&iv| inside(g, iv)) {
        return Err(Error::GammaNotAdmissible {
            gamma: g,
            detail: format!("outside the multiplicity intervals {intervals:?} for k = {k}, n = {n} ({nu})"),
        });
    }
    (k..=n)
        .map(|j| {
            let plus = solve_nodal_with(spectrum, gamma, f, j, nu, Sign::Plus, config)?;
            let minus = solve_nodal_with(spectrum, gamma, f, j, nu, Sign::Minus, config)?;
            Ok((plus, minus))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::{fixed_point_residual, PerturbationG};
    use crate::spectrum::eigen_pencil;
    use crate::weights::Weight;

    fn setup(n: usize, g: PerturbationG<f64>) -> (SpectrumResult<f64>, ProblemSpec<f64>) {
        let grid = Grid::new(n).unwrap();
        let m = Weight::One.sample(grid);
        (eigen_pencil(&m, 3, 0).unwrap(), ProblemSpec::perturbed(m, g))
    }

    #[test]
    fn linear_start_keeps_eigenvalue() {
        let (sp, spec) = setup(199, PerturbationG::zero());
        let cfg = ContinuationConfig::default();
        let p = bifurcation_start(&sp, 1, Sign::Plus, Sign::Plus, &spec, &cfg).unwrap();
        let mu1 = sp.positive[0].mu_discrete;
        assert!((p.mu - mu1).abs() <= 1e-8 * mu1);
        assert!(p.norm.value <= cfg.eps_start);
        assert!(p.norm.value > 0.9 * cfg.eps_start);
        assert_eq!(p.profile.count, 0);
    }

    #[test]
    fn second_mode_minus_starts_negative_with_one_zero() {
        let (sp, spec) = setup(199, PerturbationG::cubic(1.0));
        let p = bifurcation_start(&sp, 2, Sign::Plus, Sign::Minus, &spec, &ContinuationConfig::default()).unwrap();
        assert_eq!(p.profile.count, 1);
        assert_eq!(p.profile.sigma, Sign::Minus);
        assert!(p.u.values()[5] < 0.0);
    }

    #[test]
    fn cubic_start_tilts_left_quadratically() {
        let (sp, spec) = setup(199, PerturbationG::cubic(1.0));
        let mu1 = sp.positive[0].mu_discrete;
        let ratio = |eps: f64| {
            let cfg = ContinuationConfig {
                eps_start: eps,
                ..Default::default()
            };
            let p = bifurcation_start(&sp, 1, Sign::Plus, Sign::Plus, &spec, &cfg).unwrap();
            let delta = mu1 - p.mu;
            assert!(delta > 0.0);
            let phi = &sp.positive[0].phi;
            let cube = p.u.map(|x| x * x * x);
            let rayleigh = cube.inner(phi) / p.u.inner(phi);
            assert!((delta - rayleigh).abs() <= 1e-2 * rayleigh, "{delta:e} {rayleigh:e}");
            delta / (eps * eps)
        };
        let (a, b) = (ratio(1e-3), ratio(5e-4));
        assert!((a / b - 1.0).abs() < 0.1, "{a} {b}");
    }

    #[test]
    fn linear_branch_is_vertical() {
        let (sp, spec) = setup(199, PerturbationG::zero());
        let cfg = ContinuationConfig {
            max_steps: 100,
            ..Default::default()
        };
        let b = branch(&sp, 1, Sign::Plus, Sign::Plus, &spec, &cfg).unwrap();
        assert_eq!(b.termination, Termination::MaxSteps);
        assert_eq!(b.points.len(), 101);
        let mu1 = sp.positive[0].mu_discrete;
        for p in &b.points {
            assert!((p.mu - mu1).abs() <= 1e-6 * mu1);
        }
        assert!(b.containment_violations().is_empty());
        // e_norm grows in proportion to arclength
        let q: Vec<f64> = b.points[1..].iter().map(|p| p.norm.value / p.arclength).collect();
        let (lo, hi) = q.iter().fold((f64::MAX, 0.0f64), |(a, c), &x| (a.min(x), c.max(x)));
        assert!(hi / lo - 1.0 < 0.02, "{lo} {hi}");
    }

    #[test]
    fn cubic_branches_are_mirror_images() {
        let (sp, spec) = setup(149, PerturbationG::cubic(1.0));
        let cfg = ContinuationConfig {
            max_steps: 40,
            ..Default::default()
        };
        let p = branch(&sp, 1, Sign::Plus, Sign::Plus, &spec, &cfg).unwrap();
        let m = branch(&sp, 1, Sign::Plus, Sign::Minus, &spec, &cfg).unwrap();
        assert_eq!(p.points.len(), m.points.len());
        for (a, b) in p.points.iter().zip(&m.points) {
            assert!((a.arclength - b.arclength).abs() < 1e-8);
            assert!(a.u.add(&b.u).unwrap().max_abs() < 1e-8);
        }
        assert!(p.points.last().unwrap().mu < p.origin);
    }

    #[test]
    fn cross_hyperplane_returns_exact_point() {
        let grid = Grid::<f64>::new(99).unwrap();
        let m = Weight::One.sample(grid);
        let sp = eigen_pencil(&m, 1, 0).unwrap();
        let gamma = sp.positive[0].mu_discrete;
        let spec = ProblemSpec::autonomous(m, gamma, AsymptoticF::linear());
        let cfg = ContinuationConfig {
            max_steps: 5,
            ..Default::default()
        };
        let b = branch(&sp, 1, Sign::Plus, Sign::Plus, &spec, &cfg).unwrap();
        for p in &b.points {
            assert!((p.mu - 1.0).abs() < 1e-10);
        }
        let u = cross_hyperplane(&b, &spec, &cfg).unwrap();
        assert!(b.points.iter().any(|p| p.u == u));
    }

    #[test]
    fn desk_case_solves_and_rejects() {
        let grid = Grid::<f64>::new(199).unwrap();
        let m = Weight::One.sample(grid);
        let sp = eigen_pencil(&m, 1, 0).unwrap();
        let f = AsymptoticF::saturating(1.0, 2.0);
        let mu1 = sp.positive[0].mu_discrete;
        let cfg = ContinuationConfig::default();
        let sol = solve_nodal_with(&sp, 0.75 * mu1, &f, 1, Sign::Plus, Sign::Plus, &cfg).unwrap();
        let spec = ProblemSpec::autonomous(m.clone(), 0.75 * mu1, f.clone());
        assert!(fixed_point_residual(&sol.u, 1.0, &spec).unwrap().max_norm < 1e-8);
        assert!(sol.u.interior().iter().all(|&x| x > 0.0));
        let err = solve_nodal_with(&sp, 0.25 * mu1, &f, 1, Sign::Plus, Sign::Plus, &cfg).unwrap_err();
        assert!(matches!(err, Error::GammaNotAdmissible { .. }));
    }

    #[test]
    fn multiplicity_interval_orientation() {
        let iv = multiplicity_intervals(1.0, 16.0, 1.0, 2.0);
        assert!(iv.is_empty() || iv.iter().all(|(a, b)| a < b));
        let iv = multiplicity_intervals(1.0, 16.0, 1.0, 40.0);
        assert_eq!(iv, vec![(0.4, 1.0)]);
        let iv = multiplicity_intervals(-1.0, -16.0, 1.0, 40.0);
        assert_eq!(iv, vec![(-1.0, -0.4)]);
    }
}
