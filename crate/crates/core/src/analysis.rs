//! Verification harnesses: degree parity of `I - T_μ`, the Sturm-type
//! comparison of zero counts, divergence of zero counts along the
//! eigenfunction sequences, and zero spacing for the constant weight.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{e_norm, Grid, SampledFn};
use crate::linops::det_sign_psi;
use crate::nodal::{find_zeros, nodal_profile, Sign};
use crate::nonlinear::{fixed_point_residual, PerturbationG, ProblemSpec};
use crate::scalar::Real;
use crate::spectrum::{eigen_pencil_with, NodalPolicy, PencilOptions, SpectrumResult, MAX_COUNT};
use crate::weights::Weight;

/// Samples closer than this (relative) to an eigenvalue are dropped.
pub const PARITY_GAP: f64 = 1e-6;
/// Residual bound, relative to `e_norm`, for the solutions fed to
/// [`sturm_check`].
pub const STURM_RESIDUAL: f64 = 1e-6;
pub const SPACING_TOL: f64 = 1e-3;

fn report_opts() -> PencilOptions {
    PencilOptions {
        nodal: NodalPolicy::Report,
        extrapolate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityRow {
    pub mu: f64,
    pub det_sign: i8,
    pub eigen_count_below: usize,
    pub expected_sign: i8,
    #[serde(rename = "match")]
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityReport {
    pub weight_id: String,
    pub rows: Vec<ParityRow>,
    /// Samples dropped for lying too close to an eigenvalue or beyond the
    /// computed part of the spectrum.
    pub skipped: Vec<f64>,
}

impl ParityReport {
    pub fn all_match(&self) -> bool {
        self.rows.iter().all(|r| r.matches)
    }

    pub fn mismatches(&self) -> usize {
        self.rows.iter().filter(|r| !r.matches).count()
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("parity {}\n{:>16} {:>5} {:>6} {:>5} match\n", self.weight_id, "mu", "sign", "count", "exp");
        for r in &self.rows {
            s.push_str(&format!(
                "{:>16.6e} {:>5} {:>6} {:>5} {}\n",
                r.mu, r.det_sign, r.eigen_count_below, r.expected_sign, r.matches
            ));
        }
        s
    }
}

/// Spectrum of `m` with enough eigenvalues to count those below every
/// sample in `|μ| ≤ reach` (capped at [`MAX_COUNT`] per side).
fn spectrum_reaching<T: Real>(m: &SampledFn<T>, reach_pos: f64, reach_neg: f64) -> Result<SpectrumResult<T>> {
    let interior = m.interior();
    let has_pos = interior.iter().any(|&v| v > T::zero());
    let has_neg = interior.iter().any(|&v| v < T::zero());
    let mut count = 6;
    loop {
        let sp = eigen_pencil_with(
            m,
            if has_pos { count } else { 0 },
            if has_neg { count } else { 0 },
            report_opts(),
        )?;
        let top = |pairs: &[crate::spectrum::EigenPair<T>]| pairs.last().map_or(0.0, |p| p.mu_discrete.to_f64_lossy().abs());
        let enough_pos = !has_pos || top(&sp.positive) > reach_pos;
        let enough_neg = !has_neg || top(&sp.negative) > reach_neg;
        if (enough_pos && enough_neg) || count == MAX_COUNT {
            return Ok(sp);
        }
        count = (count * 2).min(MAX_COUNT);
    }
}

/// Compares `det_sign_psi(μ)` with `(-1)^count`, where `count` is the
/// number of positive eigenvalues in `(0, μ)` for `μ > 0` and of negative
/// eigenvalues in `(μ, 0)` for `μ < 0`.
pub fn degree_parity_sweep<T: Real>(m: &SampledFn<T>, weight_id: &str, mu_samples: &[f64]) -> Result<ParityReport> {
    let reach_pos = mu_samples.iter().fold(0.0f64, |a, &x| a.max(x));
    let reach_neg = mu_samples.iter().fold(0.0f64, |a, &x| a.max(-x));
    let sp = spectrum_reaching(m, reach_pos, reach_neg)?;
    let eig: Vec<f64> = sp.pairs().map(|p| p.mu_discrete.to_f64_lossy()).collect();
    let pos_full = sp.positive.len() < MAX_COUNT;
    let neg_full = sp.negative.len() < MAX_COUNT;
    let top_pos = sp.positive.last().map_or(f64::INFINITY, |p| p.mu_discrete.to_f64_lossy());
    let top_neg = sp.negative.last().map_or(f64::NEG_INFINITY, |p| p.mu_discrete.to_f64_lossy());

    let mut skipped = Vec::new();
    let mut keep = Vec::new();
    for &mu in mu_samples {
        let near = eig.iter().any(|&e| (mu - e).abs() <= PARITY_GAP * e.abs());
        let beyond = (mu > top_pos && !pos_full) || (mu < top_neg && !neg_full);
        if near || beyond {
            skipped.push(mu);
        } else {
            keep.push(mu);
        }
    }
    let results: Vec<(f64, Result<i8>)> = keep
        .par_iter()
        .map(|&mu| (mu, det_sign_psi(T::lit(mu), m)))
        .collect();
    let mut rows = Vec::new();
    for (mu, sign) in results {
        let sign = match sign {
            Ok(s) => s,
            Err(Error::OnEigenvalue { .. }) => {
                skipped.push(mu);
                continue;
            }
            Err(e) => return Err(e),
        };
        let count = if mu > 0.0 {
            eig.iter().filter(|&&e| e > 0.0 && e < mu).count()
        } else {
            eig.iter().filter(|&&e| e < 0.0 && e > mu).count()
        };
        let expected = if count % 2 == 0 { 1 } else { -1 };
        rows.push(ParityRow {
            mu,
            det_sign: sign,
            eigen_count_below: count,
            expected_sign: expected,
            matches: sign == expected,
        });
    }
    rows.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    Ok(ParityReport {
        weight_id: weight_id.to_string(),
        rows,
        skipped,
    })
}

/// `per_side` log-spaced samples on each side of zero, from a quarter of the
/// first eigenvalue to 90% of the `top`-th eigenvalue (or its mirror image
/// when the weight has no negative part).
pub fn parity_samples<T: Real>(m: &SampledFn<T>, per_side: usize, top: usize) -> Result<Vec<f64>> {
    let sp = eigen_pencil_with(m, top, top, report_opts())?;
    let range = |pairs: &[crate::spectrum::EigenPair<T>]| {
        let a = pairs.first()?.mu_discrete.to_f64_lossy().abs() / 4.0;
        let b = pairs.last()?.mu_discrete.to_f64_lossy().abs() * 0.9;
        Some((a, b))
    };
    let pos = range(&sp.positive);
    let neg = range(&sp.negative).or(pos);
    let logspace = |(a, b): (f64, f64), sign: f64| -> Vec<f64> {
        (0..per_side)
            .map(|i| {
                let s = if per_side == 1 { 0.0 } else { i as f64 / (per_side - 1) as f64 };
                sign * (a.ln() + s * (b.ln() - a.ln())).exp()
            })
            .collect()
    };
    let mut out = Vec::new();
    if let Some(n) = neg {
        out.extend(logspace(n, -1.0));
    }
    if let Some(p) = pos {
        out.extend(logspace(p, 1.0));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SturmVerdict {
    pub pass: bool,
    pub count1: usize,
    pub count2: usize,
}

/// Checks that `u2` has at least one more zero than `u1` when
/// `b2 > b1 > 0` and `u_i'''' = b_i u_i` with the hinged boundary
/// conditions.
pub fn sturm_check<T: Real>(b1: &SampledFn<T>, b2: &SampledFn<T>, u1: &SampledFn<T>, u2: &SampledFn<T>) -> Result<SturmVerdict> {
    b1.ensure_same_grid(b2)?;
    b1.ensure_same_grid(u1)?;
    b1.ensure_same_grid(u2)?;
    for (i, (&x, &y)) in b1.interior().iter().zip(b2.interior()).enumerate() {
        if !(x > T::zero()) {
            return Err(Error::HypothesisViolated(format!("b1 is not positive at interior node {}", i + 1)));
        }
        if !(y > x) {
            return Err(Error::HypothesisViolated(format!("b2 > b1 fails at interior node {}", i + 1)));
        }
    }
    for (name, b, u) in [("u1", b1, u1), ("u2", b2, u2)] {
        let spec = ProblemSpec::perturbed(b.clone(), PerturbationG::zero());
        let r = fixed_point_residual(u, T::one(), &spec)?;
        let bound = T::lit(STURM_RESIDUAL) * e_norm(u).value;
        if !(r.max_norm <= bound) {
            return Err(Error::HypothesisViolated(format!(
                "{name} residual {:e} exceeds {:e}",
                r.max_norm.to_f64_lossy(),
                bound.to_f64_lossy()
            )));
        }
    }
    let count1 = find_zeros(u1)?.len();
    let count2 = find_zeros(u2)?.len();
    Ok(SturmVerdict {
        pass: count2 > count1,
        count1,
        count2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SturmPair {
    pub weight1: usize,
    pub k1: usize,
    pub weight2: usize,
    pub k2: usize,
    pub verdict: SturmVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SturmSuiteReport {
    pub seed: u64,
    pub n: usize,
    /// Cosine coefficients of the random weights `1 + Σ a_j cos(jπt)`.
    pub weights: Vec<Vec<f64>>,
    pub pairs: Vec<SturmPair>,
    /// Draws rejected because `b2 > b1` failed somewhere.
    pub rejected: usize,
    /// `u2` replaced by `u1`.
    pub control_same_solution_passed: bool,
    /// Roles of the two coefficients exchanged.
    pub control_reversed_passed: bool,
}

impl SturmSuiteReport {
    pub fn all_pass(&self) -> bool {
        self.pairs.iter().all(|p| p.verdict.pass)
    }

    pub fn controls_fail(&self) -> bool {
        !self.control_same_solution_passed && !self.control_reversed_passed
    }
}

const POOL: usize = 40;
const MODES: usize = 3;
const MAX_K: usize = 4;

fn random_weight(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let a: Vec<f64> = (0..MODES).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let min = (0..=200)
            .map(|i| cosine_weight(&a, i as f64 / 200.0))
            .fold(f64::INFINITY, f64::min);
        if min > 0.1 {
            return a;
        }
    }
}

fn cosine_weight(a: &[f64], t: f64) -> f64 {
    1.0 + a
        .iter()
        .enumerate()
        .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * t).cos())
        .sum::<f64>()
}

/// Randomised comparison suite: `pairs` ordered pairs `b_i = μ_{k_i}^+ m_i`
/// built from a pool of random positive weights and their eigenpairs,
/// rejection-sampled until `b2 > b1` at every interior node, followed by
/// two negative controls.
pub fn sturm_suite<T: Real>(grid: Grid<T>, pairs: usize, seed: u64) -> Result<SturmSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<Vec<f64>> = (0..POOL).map(|_| random_weight(&mut rng)).collect();
    let spectra: Vec<(SampledFn<T>, SpectrumResult<T>)> = coeffs
        .par_iter()
        .map(|a| {
            let m = SampledFn::from_fn(grid, |t| T::lit(cosine_weight(a, t.to_f64_lossy())));
            let sp = eigen_pencil_with(&m, MAX_K, 0, PencilOptions::default())?;
            Ok((m, sp))
        })
        .collect::<Result<_>>()?;
    let b = |w: usize, k: usize| spectra[w].0.scale(spectra[w].1.positive[k - 1].mu_discrete);
    let phi = |w: usize, k: usize| &spectra[w].1.positive[k - 1].phi;

    let mut out = Vec::with_capacity(pairs);
    let mut rejected = 0;
    while out.len() < pairs {
        let (w1, k1) = (rng.gen_range(0..POOL), rng.gen_range(1..=MAX_K));
        let (w2, k2) = (rng.gen_range(0..POOL), rng.gen_range(1..=MAX_K));
        let (b1, b2) = (b(w1, k1), b(w2, k2));
        if !b1.interior().iter().zip(b2.interior()).all(|(&x, &y)| y > x) {
            rejected += 1;
            continue;
        }
        let verdict = sturm_check(&b1, &b2, phi(w1, k1), phi(w2, k2))?;
        out.push(SturmPair {
            weight1: w1,
            k1,
            weight2: w2,
            k2,
            verdict,
        });
    }
    let first = &out[0];
    let (b1, b2) = (b(first.weight1, first.k1), b(first.weight2, first.k2));
    let (u1, u2) = (phi(first.weight1, first.k1), phi(first.weight2, first.k2));
    let passes = |r: Result<SturmVerdict>| matches!(r, Ok(v) if v.pass);
    let control_same_solution_passed = passes(sturm_check(&b1, &b2, u1, u1));
    let control_reversed_passed = passes(sturm_check(&b2, &b1, u2, u1));
    Ok(SturmSuiteReport {
        seed,
        n: grid.n_interior(),
        weights: coeffs,
        pairs: out,
        rejected,
        control_same_solution_passed,
        control_reversed_passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub side: Sign,
    pub counts: Vec<usize>,
    pub pass: bool,
}

/// Zero counts of `φ_j^ν`, `j = 1..=j_max`; passes iff `count_j = j - 1`.
pub fn divergence_check<T: Real>(m: &SampledFn<T>, side: Sign, j_max: usize) -> Result<DivergenceReport> {
    let interior = m.interior();
    let present = match side {
        Sign::Plus => interior.iter().any(|&v| v > T::zero()),
        Sign::Minus => interior.iter().any(|&v| v < T::zero()),
    };
    if !present {
        return Err(Error::NotInWeightClass(format!("weight has no {} part", match side {
            Sign::Plus => "positive",
            Sign::Minus => "negative",
        })));
    }
    let (p, q) = match side {
        Sign::Plus => (j_max, 0),
        Sign::Minus => (0, j_max),
    };
    let sp = eigen_pencil_with(m, p, q, report_opts())?;
    let counts = sp
        .side(side)
        .iter()
        .map(|e| nodal_profile(&e.phi).map(|pr| pr.count))
        .collect::<Result<Vec<_>>>()?;
    let pass = counts.iter().enumerate().all(|(j, &c)| c == j);
    Ok(DivergenceReport { side, counts, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingRow {
    pub j: usize,
    pub gaps: Vec<f64>,
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingReport {
    pub rows: Vec<SpacingRow>,
}

impl SpacingReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Gaps between consecutive zeros (endpoints included) of the eigenfunctions
/// of `u'''' = λu`, which should all equal `1/j`.
pub fn spacing_check<T: Real>(grid: Grid<T>, j_max: usize) -> Result<SpacingReport> {
    if j_max == 0 || j_max > 8 {
        return Err(Error::InvalidInput(format!("j_max = {j_max} must lie in 1..=8")));
    }
    let sp = eigen_pencil_with(&Weight::One.sample(grid), j_max, 0, PencilOptions::default())?;
    let rows = sp
        .positive
        .iter()
        .map(|e| {
            let mut pts = vec![0.0];
            pts.extend(find_zeros(&e.phi)?.iter().map(|z| z.t.to_f64_lossy()));
            pts.push(1.0);
            let gaps: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
            let target = 1.0 / e.k as f64;
            let max_error = gaps.iter().fold(0.0f64, |a, g| a.max((g - target).abs()));
            Ok(SpacingRow {
                j: e.k,
                pass: gaps.len() == e.k && max_error <= SPACING_TOL,
                gaps,
                max_error,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpacingReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mu1: f64,
    pub error: f64,
    /// Error on the previous (coarser) grid over the error on this one.
    pub ratio: Option<f64>,
}

/// Error of the first discrete eigenvalue against `π⁴` for `m ≡ 1` on a
/// sequence of grids (`n` counts intervals).
pub fn convergence_order(intervals: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let exact = std::f64::consts::PI.powi(4);
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in intervals {
        let grid = Grid::<f64>::new(n.saturating_sub(1))?;
        let sp = eigen_pencil_with(&Weight::One.sample(grid), 1, 0, PencilOptions::default())?;
        let mu1 = sp.positive[0].mu_discrete;
        let error = (mu1 - exact).abs();
        let ratio = rows.last().map(|r| r.error / error);
        rows.push(ConvergenceRow { n, mu1, error, ratio });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parity_for_constant_weight() {
        let m = Weight::One.sample(Grid::<f64>::new(299).unwrap());
        let r = degree_parity_sweep(&m, "one", &[0.0, 50.0, 500.0, 3000.0, -40.0]).unwrap();
        let signs: Vec<(f64, i8)> = r.rows.iter().map(|r| (r.mu, r.det_sign)).collect();
        assert_eq!(signs, vec![(-40.0, 1), (0.0, 1), (50.0, 1), (500.0, -1), (3000.0, 1)]);
        assert!(r.all_match());
    }

    #[test]
    fn parity_skips_eigenvalues() {
        let m = Weight::One.sample(Grid::<f64>::new(99).unwrap());
        let sp = eigen_pencil_with(&m, 1, 0, report_opts()).unwrap();
        let r = degree_parity_sweep(&m, "one", &[sp.positive[0].mu_discrete]).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.skipped.len(), 1);
    }

    #[test]
    fn sturm_analytic_pairs() {
        let g = Grid::<f64>::new(399).unwrap();
        let c = |v: f64| SampledFn::from_fn(g, move |_| v);
        let s = |j: f64| SampledFn::from_fn(g, move |t| (j * PI * t).sin());
        // the discrete modes solve the discrete problem with b = discrete eigenvalue
        let sp = eigen_pencil_with(&Weight::One.sample(g), 3, 0, PencilOptions::default()).unwrap();
        let mu = |k: usize| sp.positive[k - 1].mu_discrete;
        let v = sturm_check(&c(mu(1)), &c(mu(2)), &s(1.0), &s(2.0)).unwrap();
        assert_eq!((v.pass, v.count1, v.count2), (true, 0, 1));
        let v = sturm_check(&c(mu(2)), &c(mu(3)), &s(2.0), &s(3.0)).unwrap();
        assert_eq!((v.pass, v.count1, v.count2), (true, 1, 2));
        assert!(matches!(
            sturm_check(&c(mu(2)), &c(mu(1)), &s(2.0), &s(1.0)),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn small_sturm_suite() {
        let r = sturm_suite(Grid::<f64>::new(149).unwrap(), 20, 7).unwrap();
        assert_eq!(r.pairs.len(), 20);
        assert!(r.all_pass());
        assert!(r.controls_fail());
    }

    #[test]
    fn divergence_for_constant_weight() {
        let m = Weight::One.sample(Grid::<f64>::new(299).unwrap());
        let r = divergence_check(&m, Sign::Plus, 6).unwrap();
        assert_eq!(r.counts, vec![0, 1, 2, 3, 4, 5]);
        assert!(r.pass);
        assert!(matches!(divergence_check(&m, Sign::Minus, 3), Err(Error::NotInWeightClass(_))));
    }

    #[test]
    fn spacing_small() {
        let r = spacing_check(Grid::<f64>::new(999).unwrap(), 5).unwrap();
        assert!(r.pass());
        assert_eq!(r.rows[1].gaps.len(), 2);
    }

    #[test]
    fn second_order_convergence() {
        let rows = convergence_order(&[100, 200]).unwrap();
        let ratio = rows[1].ratio.unwrap();
        assert!((3.9..4.1).contains(&ratio), "{ratio}");
    }
}
