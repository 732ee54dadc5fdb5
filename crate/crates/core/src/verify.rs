//! The full verification run: every check of the suite computed at one
//! grid size, with raw metrics kept alongside the pass/fail verdicts.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    convergence_order, degree_parity_sweep, parity_samples, spacing_check, sturm_suite, ConvergenceRow, ParityReport,
    SpacingReport, SturmSuiteReport,
};
use crate::continuation::{branch, multiplicity_intervals, solve_nodal_range, solve_nodal_with, Branch, ContinuationConfig, Termination};
use crate::error::{Error, Result};
use crate::grid::{e_norm, Grid, SampledFn};
use crate::nodal::{nodal_profile, Sign};
use crate::nonlinear::{fixed_point_residual, AsymptoticF, PerturbationG, ProblemSpec};
use crate::shooting::shoot_from_guess;
use crate::spectrum::{
    eigen_pencil_with, order_by_nodal, shooting_cross_check, NodalOrderReport, NodalPolicy, PencilOptions, ShootingRow,
    SpectrumResult,
};
use crate::weights::Weight;

pub const ANALYTIC_TOL: f64 = 1e-3;
pub const ORACLE_TOL: f64 = 1e-6;
pub const NODAL_K_MAX: usize = 6;
pub const MIN_BRANCHES: usize = 8;
pub const MIN_POINTS: usize = 100;
pub const DESK_RESIDUAL: f64 = 1e-8;
pub const DESK_SHOOTING: f64 = 1e-4;
pub const SPACING_J_MAX: usize = 8;
pub const ORDER_RANGE: (f64, f64) = (3.8, 4.2);
pub const ORDER_GRIDS: [usize; 3] = [500, 1000, 2000];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Interior nodes of the main grid.
    pub n_interior: usize,
    pub seed: u64,
    pub sturm_pairs: usize,
    pub parity_per_side: usize,
    pub continuation: ContinuationConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n_interior: 1999,
            seed: 20_240_601,
            sturm_pairs: 200,
            parity_per_side: 25,
            continuation: ContinuationConfig::default(),
        }
    }
}

impl VerifyConfig {
    pub fn grid(&self) -> Result<Grid<f64>> {
        Grid::new(self.n_interior)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub summary: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

impl Check {
    fn new(id: u8, title: &str, passed: bool, summary: String) -> Self {
        Self {
            id,
            title: title.to_string(),
            passed,
            summary,
            notices: Vec::new(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary
        )
    }
}

pub const SHIPPED: [Weight; 4] = [Weight::One, Weight::Sin3Pi, Weight::Cos2Pi, Weight::LinearRamp];

fn report_opts(extrapolate: bool) -> PencilOptions {
    PencilOptions {
        nodal: NodalPolicy::Report,
        extrapolate,
    }
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticSpectrum {
    /// `|μ_k / (kπ)⁴ - 1|` for `k = 1..=6`.
    pub rel_errors: Vec<f64>,
    pub negative_count: usize,
}

pub fn analytic_spectrum(grid: Grid<f64>) -> Result<AnalyticSpectrum> {
    let sp = eigen_pencil_with(&Weight::One.sample(grid), NODAL_K_MAX, NODAL_K_MAX, report_opts(false))?;
    let rel_errors = sp
        .positive
        .iter()
        .map(|p| (p.mu / (p.k as f64 * std::f64::consts::PI).powi(4) - 1.0).abs())
        .collect();
    Ok(AnalyticSpectrum {
        rel_errors,
        negative_count: sp.negative.len(),
    })
}

pub fn check_analytic(a: &AnalyticSpectrum) -> Check {
    let worst = a.rel_errors.iter().fold(0.0f64, |m, &x| m.max(x));
    Check::new(
        1,
        "analytic spectrum",
        a.rel_errors.len() == NODAL_K_MAX && worst <= ANALYTIC_TOL && a.negative_count == 0,
        format!(
            "max |mu_k/(k pi)^4 - 1| = {worst:.3e} over k = 1..{}, {} negative eigenvalues",
            a.rel_errors.len(),
            a.negative_count
        ),
    )
}

/// Spectra of the four shipped weights with `k ≤ 6` on both sides, using
/// the extrapolated eigenvalue for `mu`.
pub fn shipped_spectra(grid: Grid<f64>) -> Result<Vec<SpectrumResult<f64>>> {
    SHIPPED
        .par_iter()
        .map(|w| {
            Ok(eigen_pencil_with(&w.sample(grid), NODAL_K_MAX, NODAL_K_MAX, report_opts(true))?.with_weight_id(w.name()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalLaw {
    pub weights: Vec<(String, NodalOrderReport)>,
}

pub fn nodal_law(spectra: &[SpectrumResult<f64>]) -> NodalLaw {
    NodalLaw {
        weights: spectra
            .iter()
            .map(|s| (s.weight_id.clone(), order_by_nodal(s)))
            .collect(),
    }
}

pub fn check_nodal_law(n: &NodalLaw) -> Check {
    let bad: Vec<String> = n
        .weights
        .iter()
        .filter(|(_, r)| !r.passed())
        .map(|(w, r)| format!("{w}: {}", r.violations.join("; ")))
        .collect();
    let total: usize = n.weights.iter().map(|(_, r)| r.rows.len()).sum();
    let mut c = Check::new(
        2,
        "nodal count law",
        bad.is_empty(),
        format!(
            "{} of {total} eigenfunctions with k - 1 simple zeros; weights failing: {}",
            total - n.weights.iter().map(|(_, r)| r.violations.len()).sum::<usize>(),
            if bad.is_empty() {
                "none".to_string()
            } else {
                n.weights
                    .iter()
                    .filter(|(_, r)| !r.passed())
                    .map(|(w, _)| w.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            }
        ),
    );
    c.notices = bad;
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleAgreement {
    pub rows: Vec<(String, ShootingRow<f64>)>,
}

impl OracleAgreement {
    pub fn max_rel_diff(&self) -> f64 {
        self.rows.iter().fold(0.0f64, |m, (_, r)| m.max(r.rel_diff))
    }
}

pub fn oracle_agreement(spectra: &[SpectrumResult<f64>]) -> Result<OracleAgreement> {
    let rows: Vec<Vec<(String, ShootingRow<f64>)>> = spectra
        .par_iter()
        .map(|s| {
            Ok(shooting_cross_check(s, NODAL_K_MAX)?
                .into_iter()
                .map(|r| (s.weight_id.clone(), r))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(OracleAgreement {
        rows: rows.into_iter().flatten().collect(),
    })
}

pub fn check_oracle(o: &OracleAgreement) -> Check {
    let worst = o.max_rel_diff();
    Check::new(
        3,
        "pencil vs shooting",
        !o.rows.is_empty() && worst <= ORACLE_TOL,
        format!("{} eigenvalues, max relative difference {worst:.3e}", o.rows.len()),
    )
}

// ------------------------------------------------------------------ parity

pub fn parity(grid: Grid<f64>, per_side: usize) -> Result<Vec<ParityReport>> {
    SHIPPED
        .par_iter()
        .map(|w| {
            let m = w.sample(grid);
            let samples = parity_samples(&m, per_side, 10)?;
            degree_parity_sweep(&m, w.name(), &samples)
        })
        .collect()
}

pub fn check_parity(reports: &[ParityReport], per_side: usize) -> Check {
    let mismatches: usize = reports.iter().map(|r| r.mismatches()).sum();
    let short: Vec<String> = reports
        .iter()
        .filter(|r| r.rows.len() < 2 * per_side)
        .map(|r| format!("{}: {} usable samples", r.weight_id, r.rows.len()))
        .collect();
    let rows: usize = reports.iter().map(|r| r.rows.len()).sum();
    let mut c = Check::new(
        4,
        "degree parity",
        mismatches == 0 && short.is_empty(),
        format!("{rows} samples over {} weights, {mismatches} mismatches", reports.len()),
    );
    c.notices = short;
    c
}

pub fn check_sturm(r: &SturmSuiteReport, wanted: usize) -> Check {
    let passed = r.pairs.iter().filter(|p| p.verdict.pass).count();
    Check::new(
        5,
        "Sturm comparison",
        r.pairs.len() == wanted && r.all_pass() && r.controls_fail(),
        format!(
            "{passed}/{} pairs pass ({} draws rejected), controls passed: {}/{}",
            r.pairs.len(),
            r.rejected,
            r.control_same_solution_passed,
            r.control_reversed_passed
        ),
    )
}

// ---------------------------------------------------------------- branches

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProblemChoice {
    /// `u'''' = μ m u + u³`.
    Cubic,
    /// `u'''' = μ m f(u)` with `f(s) = s (2 - 1/(1 + s²))`.
    Saturating,
}

impl ProblemChoice {
    pub fn name(self) -> &'static str {
        match self {
            ProblemChoice::Cubic => "cubic",
            ProblemChoice::Saturating => "saturating",
        }
    }

    pub fn spec(self, m: SampledFn<f64>) -> ProblemSpec<f64> {
        match self {
            ProblemChoice::Cubic => ProblemSpec::perturbed(m, PerturbationG::cubic(1.0)),
            ProblemChoice::Saturating => ProblemSpec::autonomous(m, 1.0, AsymptoticF::saturating(1.0, 2.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BranchCase {
    pub problem: ProblemChoice,
    pub weight: &'static str,
    pub k: usize,
    pub nu: Sign,
    pub sigma: Sign,
}

impl BranchCase {
    pub fn label(&self) -> String {
        format!(
            "{}_{}_k{}_{}_{}",
            self.problem.name(),
            self.weight,
            self.k,
            if self.nu == Sign::Plus { "pos" } else { "neg" },
            if self.sigma == Sign::Plus { "p" } else { "m" }
        )
    }
}

/// Branches traced by the full run: the cubic and saturating problems with
/// `m ≡ 1` for `k = 1, 2`, and the cubic problem with `m = sin 3πt` for
/// `k = 1` on both sides; both `σ` each time.
pub fn branch_cases() -> Vec<BranchCase> {
    let mut out = Vec::new();
    for problem in [ProblemChoice::Cubic, ProblemChoice::Saturating] {
        for k in 1..=2 {
            for sigma in [Sign::Plus, Sign::Minus] {
                out.push(BranchCase {
                    problem,
                    weight: "one",
                    k,
                    nu: Sign::Plus,
                    sigma,
                });
            }
        }
    }
    for nu in [Sign::Plus, Sign::Minus] {
        for sigma in [Sign::Plus, Sign::Minus] {
            out.push(BranchCase {
                problem: ProblemChoice::Cubic,
                weight: "sin3pi",
                k: 1,
                nu,
                sigma,
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BranchRun {
    pub case: BranchCase,
    pub outcome: std::result::Result<Branch<f64>, Error>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distinctness {
    pub plus: String,
    pub minus: String,
    /// Smallest `e_norm(u⁺ - u⁻)` over points of equal `μ`; `None` if the
    /// two branches never share a value of `μ`.
    pub min_distance: Option<f64>,
    pub threshold: f64,
}

impl Distinctness {
    pub fn holds(&self) -> bool {
        self.min_distance.map_or(true, |d| d > self.threshold)
    }
}

#[derive(Debug, Clone)]
pub struct BranchSuite {
    pub runs: Vec<BranchRun>,
    pub distinctness: Vec<Distinctness>,
}

pub fn trace_branches(grid: Grid<f64>, config: &ContinuationConfig) -> Result<BranchSuite> {
    let cases = branch_cases();
    let mut weights: Vec<&'static str> = cases.iter().map(|c| c.weight).collect();
    weights.dedup();
    let spectra: Vec<(&str, SpectrumResult<f64>)> = weights
        .iter()
        .map(|&w| {
            let weight: Weight = w.parse()?;
            let m = weight.sample(grid);
            let neg = if weight.has_negative_part() { 2 } else { 0 };
            Ok((w, eigen_pencil_with(&m, 2, neg, report_opts(false))?))
        })
        .collect::<Result<_>>()?;
    let runs: Vec<BranchRun> = cases
        .par_iter()
        .map(|case| {
            let sp = &spectra.iter().find(|(w, _)| *w == case.weight).expect("spectrum").1;
            let spec = case.problem.spec(sp.weight.clone());
            let outcome = branch(sp, case.k, case.nu, case.sigma, &spec, config);
            BranchRun { case: *case, outcome }
        })
        .collect();
    let mut distinctness = Vec::new();
    for p in runs.iter().filter(|r| r.case.sigma == Sign::Plus) {
        let partner = runs.iter().find(|r| {
            r.case.sigma == Sign::Minus
                && r.case.problem == p.case.problem
                && r.case.weight == p.case.weight
                && r.case.k == p.case.k
                && r.case.nu == p.case.nu
        });
        if let (Ok(a), Some(BranchRun { outcome: Ok(b), case })) = (&p.outcome, partner) {
            distinctness.push(Distinctness {
                plus: p.case.label(),
                minus: case.label(),
                min_distance: min_distance_at_equal_mu(a, b),
                threshold: config.eps_start / 2.0,
            });
        }
    }
    Ok(BranchSuite { runs, distinctness })
}

/// For every point of `a`, `u` of `b` is interpolated linearly in `μ` on
/// each segment of `b` that brackets the point's `μ`.
pub fn min_distance_at_equal_mu(a: &Branch<f64>, b: &Branch<f64>) -> Option<f64> {
    let mut best: Option<f64> = None;
    for p in &a.points {
        for w in b.points.windows(2) {
            let (q0, q1) = (&w[0], &w[1]);
            if (q0.mu - p.mu) * (q1.mu - p.mu) > 0.0 {
                continue;
            }
            let theta = if q1.mu == q0.mu { 0.0 } else { (p.mu - q0.mu) / (q1.mu - q0.mu) };
            let Ok(uq) = q0.u.combine(1.0 - theta, &q1.u, theta) else { continue };
            let Ok(diff) = p.u.sub(&uq) else { continue };
            let d = e_norm(&diff).value;
            best = Some(best.map_or(d, |x: f64| x.min(d)));
        }
    }
    best
}

pub fn check_double_zeros(suite: &BranchSuite) -> Check {
    let traced: Vec<&Branch<f64>> = suite.runs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let long = traced.iter().filter(|b| b.points.len() >= MIN_POINTS).count();
    let doubles: usize = traced.iter().map(|b| b.double_zero_count()).sum();
    let points: usize = traced.iter().map(|b| b.points.len()).sum();
    Check::new(
        6,
        "no double zeros on branches",
        long >= MIN_BRANCHES && doubles == 0,
        format!(
            "{} branches traced ({long} with >= {MIN_POINTS} points), {points} points, {doubles} with a double zero",
            traced.len()
        ),
    )
}

pub fn check_containment(suite: &BranchSuite) -> Check {
    let mut problems = Vec::new();
    for r in &suite.runs {
        match &r.outcome {
            Err(e) => problems.push(format!("{}: {e}", r.case.label())),
            Ok(b) => {
                let v = b.containment_violations();
                if !v.is_empty() {
                    problems.push(format!("{}: {} points leave the class", r.case.label(), v.len()));
                }
                if b.termination != Termination::NormBudget {
                    problems.push(format!("{}: ended with {:?}", r.case.label(), b.termination));
                }
            }
        }
    }
    for d in &suite.distinctness {
        if !d.holds() {
            problems.push(format!(
                "{} and {} meet: distance {:?} <= {}",
                d.plus, d.minus, d.min_distance, d.threshold
            ));
        }
    }
    let ok_runs = suite.runs.iter().filter(|r| matches!(&r.outcome, Ok(b) if b.containment_violations().is_empty() && b.termination == Termination::NormBudget)).count();
    let mut c = Check::new(
        7,
        "branch containment",
        problems.is_empty(),
        format!(
            "{ok_runs}/{} branches keep (k - 1, sigma) up to the norm budget; {} sigma pairs checked for distinctness",
            suite.runs.len(),
            suite.distinctness.len()
        ),
    );
    c.notices = problems;
    c
}

// -------------------------------------------------------------------- desk

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeskSolution {
    pub k: usize,
    pub sigma: Sign,
    pub gamma: f64,
    pub residual: f64,
    pub count: usize,
    pub sign: Sign,
    pub shooting_diff: f64,
    pub max_abs: f64,
}

impl DeskSolution {
    pub fn ok(&self) -> bool {
        self.count + 1 == self.k && self.sign == self.sigma && self.residual <= DESK_RESIDUAL && self.shooting_diff <= DESK_SHOOTING
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum MultiplicityOutcome {
    Skipped { notice: String },
    Solved { pairs: usize, all_ok: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeskReport {
    pub solutions: Vec<DeskSolution>,
    pub errors: Vec<String>,
    pub low_gamma_rejected: bool,
    pub multiplicity: MultiplicityOutcome,
}

pub fn desk_solution(
    sp: &SpectrumResult<f64>,
    f: &AsymptoticF<f64>,
    gamma: f64,
    k: usize,
    sigma: Sign,
    config: &ContinuationConfig,
) -> Result<(DeskSolution, SampledFn<f64>)> {
    let sol = solve_nodal_with(sp, gamma, f, k, Sign::Plus, sigma, config)?;
    let spec = ProblemSpec::autonomous(sp.weight.clone(), gamma, f.clone());
    let residual = fixed_point_residual(&sol.u, 1.0, &spec)?.max_norm;
    let prof = nodal_profile(&sol.u)?;
    let shot = shoot_from_guess(&spec, 1.0, &sol.u)?;
    let shooting_diff = sol.u.sub(&shot.u)?.max_abs();
    Ok((
        DeskSolution {
            k,
            sigma,
            gamma,
            residual,
            count: prof.count,
            sign: prof.sigma,
            shooting_diff,
            max_abs: sol.u.max_abs(),
        },
        sol.u,
    ))
}

fn desk_f() -> AsymptoticF<f64> {
    AsymptoticF::saturating(1.0, 2.0)
}

pub fn desk(grid: Grid<f64>, config: &ContinuationConfig) -> Result<DeskReport> {
    let sp = eigen_pencil_with(&Weight::One.sample(grid), 2, 0, report_opts(false))?;
    let f = desk_f();
    let cases: Vec<(usize, Sign)> = (1..=2).flat_map(|k| [(k, Sign::Plus), (k, Sign::Minus)]).collect();
    let results: Vec<Result<DeskSolution>> = cases
        .par_iter()
        .map(|&(k, sigma)| {
            let gamma = 0.75 * sp.positive[k - 1].mu_discrete;
            desk_solution(&sp, &f, gamma, k, sigma, config).map(|(d, _)| d)
        })
        .collect();
    let mut solutions = Vec::new();
    let mut errors = Vec::new();
    for (r, (k, sigma)) in results.into_iter().zip(&cases) {
        match r {
            Ok(d) => solutions.push(d),
            Err(e) => errors.push(format!("k = {k}, sigma = {sigma}: {e}")),
        }
    }
    let mu1 = sp.positive[0].mu_discrete;
    let low_gamma_rejected = matches!(
        solve_nodal_with(&sp, 0.25 * mu1, &f, 1, Sign::Plus, Sign::Plus, config),
        Err(Error::GammaNotAdmissible { .. })
    );
    let gamma = 0.75 * mu1;
    let intervals = multiplicity_intervals(mu1, sp.positive[1].mu_discrete, f.f0, f.finf);
    let multiplicity = if intervals.iter().any(|&(a, b)| gamma > a && gamma < b) {
        match solve_nodal_range(&sp, gamma, &f, 1, 2, Sign::Plus, config) {
            Ok(pairs) => MultiplicityOutcome::Solved {
                pairs: pairs.len(),
                all_ok: pairs.iter().all(|(p, m)| {
                    nodal_profile(&p.u).is_ok_and(|q| q.in_class(p.k, Sign::Plus))
                        && nodal_profile(&m.u).is_ok_and(|q| q.in_class(m.k, Sign::Minus))
                }),
            },
            Err(e) => {
                errors.push(format!("multiplicity driver: {e}"));
                MultiplicityOutcome::Solved { pairs: 0, all_ok: false }
            }
        }
    } else {
        MultiplicityOutcome::Skipped {
            notice: format!(
                "(k, n) = (1, 2): gamma = {gamma:.6} is not inside any multiplicity interval for f0 = {}, finf = {} \
                 (mu_2/finf = {:.6} exceeds mu_1/f0 = {:.6}); skipped",
                f.f0,
                f.finf,
                sp.positive[1].mu_discrete / f.finf,
                mu1 / f.f0
            ),
        }
    };
    Ok(DeskReport {
        solutions,
        errors,
        low_gamma_rejected,
        multiplicity,
    })
}

pub fn check_desk(d: &DeskReport) -> Check {
    let multiplicity_ok = match &d.multiplicity {
        MultiplicityOutcome::Skipped { .. } => true,
        MultiplicityOutcome::Solved { pairs, all_ok } => *pairs == 2 && *all_ok,
    };
    let worst_res = d.solutions.iter().fold(0.0f64, |m, s| m.max(s.residual));
    let worst_shot = d.solutions.iter().fold(0.0f64, |m, s| m.max(s.shooting_diff));
    let mut c = Check::new(
        8,
        "nodal solutions of the autonomous problem",
        d.errors.is_empty() && d.solutions.len() == 4 && d.solutions.iter().all(DeskSolution::ok) && d.low_gamma_rejected && multiplicity_ok,
        format!(
            "{}/4 solutions, max residual {worst_res:.2e}, max shooting difference {worst_shot:.2e}, low gamma rejected: {}",
            d.solutions.iter().filter(|s| s.ok()).count(),
            d.low_gamma_rejected
        ),
    );
    c.notices = d.errors.clone();
    if let MultiplicityOutcome::Skipped { notice } = &d.multiplicity {
        c.notices.push(notice.clone());
    }
    c
}

pub fn check_spacing(r: &SpacingReport) -> Check {
    let worst = r.rows.iter().fold(0.0f64, |m, x| m.max(x.max_error));
    Check::new(
        9,
        "zero spacing",
        r.rows.len() == SPACING_J_MAX && r.pass(),
        format!("j = 1..{}, max |gap - 1/j| = {worst:.3e}", r.rows.len()),
    )
}

pub fn check_order(rows: &[ConvergenceRow]) -> Check {
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    Check::new(
        10,
        "second-order convergence",
        ratios.len() == rows.len().saturating_sub(1)
            && !ratios.is_empty()
            && ratios.iter().all(|&q| q >= ORDER_RANGE.0 && q <= ORDER_RANGE.1),
        format!(
            "error ratios {}",
            ratios.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// --------------------------------------------------------------------- all

pub struct VerifyReport {
    pub config: VerifyConfig,
    pub checks: Vec<Check>,
    pub analytic: AnalyticSpectrum,
    pub spectra: Vec<SpectrumResult<f64>>,
    pub nodal: NodalLaw,
    pub oracle: OracleAgreement,
    pub parity: Vec<ParityReport>,
    pub sturm: SturmSuiteReport,
    pub branches: BranchSuite,
    pub desk: DeskReport,
    pub spacing: SpacingReport,
    pub order: Vec<ConvergenceRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn verify_all(config: &VerifyConfig) -> Result<VerifyReport> {
    config.continuation.validate()?;
    let grid = config.grid()?;
    let analytic = analytic_spectrum(grid)?;
    let spectra = shipped_spectra(grid)?;
    let nodal = nodal_law(&spectra);
    let oracle = oracle_agreement(&spectra)?;
    let parity = parity(grid, config.parity_per_side)?;
    let sturm = sturm_suite(grid, config.sturm_pairs, config.seed)?;
    let branches = trace_branches(grid, &config.continuation)?;
    let desk = desk(grid, &config.continuation)?;
    let spacing = spacing_check(grid, SPACING_J_MAX)?;
    let order = convergence_order(&ORDER_GRIDS)?;
    let checks = vec![
        check_analytic(&analytic),
        check_nodal_law(&nodal),
        check_oracle(&oracle),
        check_parity(&parity, config.parity_per_side),
        check_sturm(&sturm, config.sturm_pairs),
        check_double_zeros(&branches),
        check_containment(&branches),
        check_desk(&desk),
        check_spacing(&spacing),
        check_order(&order),
    ];
    Ok(VerifyReport {
        config: *config,
        checks,
        analytic,
        spectra,
        nodal,
        oracle,
        parity,
        sturm,
        branches,
        desk,
        spacing,
        order,
    })
}
