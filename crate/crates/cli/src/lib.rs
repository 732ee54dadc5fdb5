//! Command-line front end: argument parsing, dispatch to the library,
//! and the output artifacts (JSON and CSV tables, SVG diagrams, manifest).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use beamspec::analysis::{degree_parity_sweep, parity_samples, sturm_suite};
use beamspec::continuation::{branch, solve_nodal_with, ContinuationConfig};
use beamspec::grid::{Grid, SampledFn};
use beamspec::nodal::nodal_profile;
use beamspec::nonlinear::{fixed_point_residual, NonlinearityConfig, ProblemSpec};
use beamspec::spectrum::{eigen_pencil_with, NodalPolicy, PencilOptions, MAX_COUNT};
use beamspec::verify::{verify_all, VerifyConfig, VerifyReport};
use beamspec::{Branch64, ErrorClass, Sign, Weight};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "beamspec", version, about = "Indefinite-weight beam eigenproblems and nodal solution branches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Positive and negative eigenvalues and eigenfunctions of the pencil.
    Spectrum(SpectrumArgs),
    /// Sign of the Leray-Schauder degree surrogate against eigenvalue parity.
    Degree(DegreeArgs),
    /// Randomised zero-count comparison suite.
    Sturm(SturmArgs),
    /// Trace one bifurcation branch.
    Branch(BranchArgs),
    /// Nodal solution of u'''' = gamma m(t) f(u).
    Solve(SolveArgs),
    /// Run the full verification suite.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Number of grid intervals (h = 1/n).
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Weight: one, sin3pi, cos2pi, linear_ramp, or a CSV path (t,value).
    #[arg(long, default_value = "one")]
    pub weight: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 6)]
    pub kmax: usize,
    /// Negative eigenpairs to compute (defaults to kmax).
    #[arg(long)]
    pub kneg: Option<usize>,
    /// Report Richardson-extrapolated eigenvalues.
    #[arg(long)]
    pub extrapolate: bool,
    /// Fail when an eigenfunction's zero count differs from k - 1.
    #[arg(long)]
    pub strict_nodal: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DegreeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Log-spaced samples per side of zero.
    #[arg(long, default_value_t = 25)]
    pub samples: usize,
    /// Explicit comma-separated mu values instead of generated samples.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SturmArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct Labels {
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Side of the spectrum: + or -.
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    pub nu: Sign,
    /// Sign near t = 0: + or -.
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    pub sigma: Sign,
}

#[derive(Debug, Clone, Args)]
pub struct Stepping {
    #[arg(long, default_value_t = 0.05)]
    pub ds: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 1e3)]
    pub norm_budget: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BranchArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub labels: Labels,
    #[command(flatten)]
    pub stepping: Stepping,
    /// Nonlinearity: zero, cubic, linear, saturating, atan, a CSV table,
    /// or a JSON object {"type": ..., "params": {...}}.
    #[arg(long, default_value = "cubic")]
    pub f: String,
    /// Coefficient gamma for asymptotically linear f.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub gamma: f64,
    /// Keep the solution CSV of every this many points (first and last always).
    #[arg(long, default_value_t = 10)]
    pub save_every: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub labels: Labels,
    #[command(flatten)]
    pub stepping: Stepping,
    #[arg(long, default_value = "saturating")]
    pub f: String,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    #[arg(long, default_value_t = 25)]
    pub samples: usize,
}

/// Everything that determines a run's outputs, recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub weight: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearityConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<Sign>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Sign>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub params: Value,
}

impl RunConfig {
    fn base(command: &str, c: &Common) -> Self {
        Self {
            command: command.into(),
            n: c.n,
            weight: c.weight.clone(),
            nonlinearity: None,
            k: None,
            nu: None,
            sigma: None,
            gamma: None,
            out: c.out.clone(),
            seed: None,
            params: Value::Null,
        }
    }

    fn with_labels(mut self, l: &Labels) -> Self {
        self.k = Some(l.k);
        self.nu = Some(l.nu);
        self.sigma = Some(l.sigma);
        self
    }

    /// Range checks on the numeric parameters.
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 || self.n > 200_000 {
            bail!(usage(format!("--n must lie in 10..=200000, got {}", self.n)));
        }
        if let Some(k) = self.k {
            if k == 0 || k > MAX_COUNT {
                bail!(usage(format!("--k must lie in 1..={MAX_COUNT}, got {k}")));
            }
        }
        if let Some(g) = self.gamma {
            if !g.is_finite() || g == 0.0 {
                bail!(usage(format!("--gamma must be finite and nonzero, got {g}")));
            }
        }
        Ok(())
    }
}

fn usage(msg: String) -> beamspec::Error {
    beamspec::Error::InvalidInput(msg)
}

/// A file produced by a command, relative to the output directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<Artifact>,
    pub inputs: Vec<PathBuf>,
}

impl Outputs {
    fn add(&mut self, path: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push(Artifact {
            path: path.into(),
            bytes: bytes.into(),
        });
    }

    fn add_json(&mut self, path: &str, v: &impl Serialize) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.add(path, s);
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes every artifact and then `manifest.json`, one file at a time.
pub fn write_outputs(config: &RunConfig, outputs: &Outputs) -> Result<()> {
    let dir = &config.out;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut listed = Vec::new();
    for a in &outputs.files {
        let p = dir.join(&a.path);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, &a.bytes).with_context(|| format!("writing {}", p.display()))?;
        listed.push(json!({"path": a.path, "bytes": a.bytes.len(), "sha256": sha256_hex(&a.bytes)}));
    }
    let inputs: Vec<Value> = outputs
        .inputs
        .iter()
        .map(|p| {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(json!({"path": p.display().to_string(), "sha256": sha256_hex(&bytes)}))
        })
        .collect::<Result<_>>()?;
    let manifest = json!({
        "tool": "beamspec",
        "version": env!("CARGO_PKG_VERSION"),
        "command": config.command,
        "config": config,
        "inputs": inputs,
        "outputs": listed,
    });
    let mut s = serde_json::to_string_pretty(&manifest)?;
    s.push('\n');
    fs::write(dir.join("manifest.json"), s)?;
    Ok(())
}

fn grid_for(n: usize) -> Result<Grid<f64>> {
    Ok(Grid::new(n - 1)?)
}

fn weight_input(spec: &str, outputs: &mut Outputs) -> Result<Weight> {
    let w: Weight = spec.parse()?;
    if matches!(w, Weight::Table { .. }) {
        outputs.inputs.push(PathBuf::from(spec));
    }
    Ok(w)
}

/// Parses `--f`: builtin name, CSV table path, JSON object, or JSON file.
pub fn parse_nonlinearity(s: &str) -> Result<NonlinearityConfig> {
    let t = s.trim();
    if t.starts_with('{') {
        return serde_json::from_str(t).map_err(|e| anyhow!(usage(format!("nonlinearity JSON: {e}"))));
    }
    if t.ends_with(".json") && Path::new(t).is_file() {
        let text = fs::read_to_string(t)?;
        return serde_json::from_str(&text).map_err(|e| anyhow!(usage(format!("{t}: {e}"))));
    }
    Ok(NonlinearityConfig::from_name(t)?)
}

fn problem_spec(nl: &NonlinearityConfig, m: SampledFn<f64>, gamma: f64) -> Result<ProblemSpec<f64>> {
    Ok(if nl.is_perturbation() {
        ProblemSpec::perturbed(m, nl.perturbation()?)
    } else {
        ProblemSpec::autonomous(m, gamma, nl.asymptotic()?)
    })
}

fn stepping_config(s: &Stepping) -> ContinuationConfig {
    let base = ContinuationConfig::default();
    ContinuationConfig {
        ds: s.ds,
        ds_max: base.ds_max.max(s.ds),
        max_steps: s.max_steps,
        norm_budget: s.norm_budget,
        ..base
    }
}

fn report_opts(extrapolate: bool) -> PencilOptions {
    PencilOptions {
        nodal: NodalPolicy::Report,
        extrapolate,
    }
}

fn nu_word(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "pos",
        Sign::Minus => "neg",
    }
}

/// Result of a command: artifacts plus whether its checks passed.
pub struct Completed {
    pub config: RunConfig,
    pub outputs: Outputs,
    pub passed: bool,
    pub stdout: String,
}

pub fn cmd_spectrum(a: &SpectrumArgs) -> Result<Completed> {
    let mut config = RunConfig::base("spectrum", &a.common);
    config.params = json!({"kmax": a.kmax, "kneg": a.kneg.unwrap_or(a.kmax), "extrapolate": a.extrapolate, "strict_nodal": a.strict_nodal});
    config.validate()?;
    let mut outputs = Outputs::default();
    let w = weight_input(&a.common.weight, &mut outputs)?;
    let m = w.sample(grid_for(a.common.n)?);
    let opts = PencilOptions {
        nodal: if a.strict_nodal { NodalPolicy::Enforce } else { NodalPolicy::Report },
        extrapolate: a.extrapolate,
    };
    let sp = eigen_pencil_with(&m, a.kmax, a.kneg.unwrap_or(a.kmax), opts)?.with_weight_id(w.name());
    let phi_path = |nu: Sign, k: usize| format!("phi/{}_{k}.csv", nu_word(nu));
    let mut doc = sp.to_json(|p| phi_path(p.nu, p.k));
    doc["notes"] = serde_json::to_value(&sp.notes)?;
    for p in sp.pairs() {
        outputs.add(phi_path(p.nu, p.k), p.phi.to_csv_string());
    }
    outputs.add_json("spectrum.json", &doc)?;
    Ok(Completed {
        config,
        outputs,
        passed: true,
        stdout: serde_json::to_string_pretty(&doc)? + "\n",
    })
}

pub fn cmd_degree(a: &DegreeArgs) -> Result<Completed> {
    let mut config = RunConfig::base("degree", &a.common);
    config.params = json!({"samples": a.samples, "mu": a.mu});
    config.validate()?;
    let mut outputs = Outputs::default();
    let w = weight_input(&a.common.weight, &mut outputs)?;
    let m = w.sample(grid_for(a.common.n)?);
    let samples = if a.mu.is_empty() { parity_samples(&m, a.samples, 10)? } else { a.mu.clone() };
    let report = degree_parity_sweep(&m, w.name(), &samples)?;
    outputs.add_json("parity.json", &report)?;
    Ok(Completed {
        config,
        passed: report.all_match(),
        stdout: report.to_table(),
        outputs,
    })
}

pub fn cmd_sturm(a: &SturmArgs) -> Result<Completed> {
    let mut config = RunConfig::base("sturm", &a.common);
    config.seed = Some(a.seed);
    config.params = json!({"pairs": a.pairs});
    config.validate()?;
    if a.pairs == 0 {
        bail!(usage("--pairs must be positive".into()));
    }
    let report = sturm_suite(grid_for(a.common.n)?, a.pairs, a.seed)?;
    let mut outputs = Outputs::default();
    outputs.add_json("sturm.json", &report)?;
    let passed = report.all_pass() && report.controls_fail();
    let stdout = format!(
        "{}/{} pairs pass, {} draws rejected, negative controls fail: {}\n",
        report.pairs.iter().filter(|p| p.verdict.pass).count(),
        report.pairs.len(),
        report.rejected,
        report.controls_fail()
    );
    Ok(Completed {
        config,
        outputs,
        passed,
        stdout,
    })
}

fn branch_json(b: &Branch64) -> Value {
    json!({
        "label": b.label(),
        "k": b.k,
        "nu": b.nu,
        "sigma": b.sigma,
        "origin_mu": b.origin,
        "points": b.points.len(),
        "termination": b.termination,
        "max_enorm": b.max_enorm(),
        "containment_violations": b.containment_violations(),
        "double_zeros": b.double_zero_count(),
    })
}

pub fn cmd_branch(a: &BranchArgs) -> Result<Completed> {
    let mut config = RunConfig::base("branch", &a.common).with_labels(&a.labels);
    let nl = parse_nonlinearity(&a.f)?;
    config.nonlinearity = Some(nl.clone());
    if !nl.is_perturbation() {
        config.gamma = Some(a.gamma);
    }
    config.params = json!({"ds": a.stepping.ds, "max_steps": a.stepping.max_steps, "norm_budget": a.stepping.norm_budget, "save_every": a.save_every});
    config.validate()?;
    let mut outputs = Outputs::default();
    let w = weight_input(&a.common.weight, &mut outputs)?;
    if let NonlinearityConfig::Table { path } = &nl {
        outputs.inputs.push(PathBuf::from(path));
    }
    let m = w.sample(grid_for(a.common.n)?);
    let (p, q) = match a.labels.nu {
        Sign::Plus => (a.labels.k, 0),
        Sign::Minus => (0, a.labels.k),
    };
    let sp = eigen_pencil_with(&m, p, q, report_opts(false))?;
    if sp.get(a.labels.k, a.labels.nu).is_none() {
        bail!(beamspec::Error::NotInWeightClass(format!("weight has no {} part", nu_word(a.labels.nu))));
    }
    let spec = problem_spec(&nl, m, a.gamma)?;
    let cfg = stepping_config(&a.stepping);
    let b = branch(&sp, a.labels.k, a.labels.nu, a.labels.sigma, &spec, &cfg)?;
    outputs.add("branch.csv", b.to_csv_string());
    let every = a.save_every.max(1);
    let last = b.points.len() - 1;
    for (i, pt) in b.points.iter().enumerate() {
        if i % every == 0 || i == last {
            outputs.add(format!("solutions/point_{i:05}.csv"), pt.u.to_csv_string());
        }
    }
    outputs.add_json("branch.json", &branch_json(&b))?;
    outputs.add("diagram.svg", render_diagram(&[&b]));
    let stdout = format!(
        "{}: {} points, termination {:?}, last mu = {:.10}, e-norm = {:.6}\n",
        b.label(),
        b.points.len(),
        b.termination,
        b.points[last].mu,
        b.points[last].norm.value
    );
    b.ensure_complete()?;
    Ok(Completed {
        config,
        outputs,
        passed: b.containment_violations().is_empty(),
        stdout,
    })
}

pub fn cmd_solve(a: &SolveArgs) -> Result<Completed> {
    let mut config = RunConfig::base("solve", &a.common).with_labels(&a.labels);
    let nl = parse_nonlinearity(&a.f)?;
    config.nonlinearity = Some(nl.clone());
    config.gamma = Some(a.gamma);
    config.params = json!({"ds": a.stepping.ds, "max_steps": a.stepping.max_steps, "norm_budget": a.stepping.norm_budget});
    config.validate()?;
    let mut outputs = Outputs::default();
    let w = weight_input(&a.common.weight, &mut outputs)?;
    if let NonlinearityConfig::Table { path } = &nl {
        outputs.inputs.push(PathBuf::from(path));
    }
    let f = nl.asymptotic()?;
    let m = w.sample(grid_for(a.common.n)?);
    let (p, q) = match a.labels.nu {
        Sign::Plus => (a.labels.k, 0),
        Sign::Minus => (0, a.labels.k),
    };
    let sp = eigen_pencil_with(&m, p, q, report_opts(false))?;
    if sp.get(a.labels.k, a.labels.nu).is_none() {
        bail!(beamspec::Error::NotInWeightClass(format!("weight has no {} part", nu_word(a.labels.nu))));
    }
    let cfg = stepping_config(&a.stepping);
    let sol = solve_nodal_with(&sp, a.gamma, &f, a.labels.k, a.labels.nu, a.labels.sigma, &cfg)?;
    let spec = ProblemSpec::autonomous(m, a.gamma, f);
    let residual = fixed_point_residual(&sol.u, 1.0, &spec)?;
    let profile = nodal_profile(&sol.u)?;
    outputs.add("solution.csv", sol.u.to_csv_string());
    outputs.add("branch.csv", sol.branch.to_csv_string());
    outputs.add_json(
        "solution.json",
        &json!({
            "gamma": a.gamma,
            "k": a.labels.k,
            "nu": a.labels.nu,
            "sigma": a.labels.sigma,
            "residual": residual.max_norm,
            "profile": profile,
            "branch": branch_json(&sol.branch),
        }),
    )?;
    let stdout = format!(
        "solution k = {}, sigma = {}: {} interior zeros, residual {:.3e}, max |u| = {:.6}\n",
        a.labels.k,
        a.labels.sigma,
        profile.count,
        residual.max_norm,
        sol.u.max_abs()
    );
    Ok(Completed {
        config,
        outputs,
        passed: profile.in_class(a.labels.k, a.labels.sigma),
        stdout,
    })
}

fn verify_json(r: &VerifyReport) -> Result<Value> {
    let branches: Vec<Value> = r
        .branches
        .runs
        .iter()
        .map(|run| match &run.outcome {
            Ok(b) => {
                let mut v = branch_json(b);
                v["case"] = serde_json::to_value(run.case).unwrap_or(Value::Null);
                v["file"] = json!(format!("branches/{}.csv", run.case.label()));
                v
            }
            Err(e) => json!({"case": run.case, "error": e.to_string()}),
        })
        .collect();
    Ok(json!({
        "config": r.config,
        "passed": r.passed(),
        "checks": r.checks,
        "analytic_spectrum": r.analytic,
        "spectra": r.spectra.iter().map(|s| s.to_json(|_| String::new())).collect::<Vec<_>>(),
        "nodal_law": r.nodal,
        "oracle": r.oracle,
        "parity": r.parity,
        "sturm": r.sturm,
        "branches": branches,
        "distinctness": r.branches.distinctness,
        "desk": r.desk,
        "spacing": r.spacing,
        "convergence": r.order,
    }))
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<Completed> {
    let mut config = RunConfig::base("verify-all", &a.common);
    config.seed = Some(a.seed);
    config.params = json!({"pairs": a.pairs, "samples": a.samples});
    config.validate()?;
    let vc = VerifyConfig {
        n_interior: a.common.n - 1,
        seed: a.seed,
        sturm_pairs: a.pairs,
        parity_per_side: a.samples,
        ..VerifyConfig::default()
    };
    let report = verify_all(&vc)?;
    let mut outputs = Outputs::default();
    let mut lines = String::new();
    for c in &report.checks {
        lines.push_str(&c.line());
        lines.push('\n');
        for n in &c.notices {
            lines.push_str("       ");
            lines.push_str(n);
            lines.push('\n');
        }
    }
    let traced: Vec<&Branch64> = report.branches.runs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    for run in &report.branches.runs {
        if let Ok(b) = &run.outcome {
            outputs.add(format!("branches/{}.csv", run.case.label()), b.to_csv_string());
        }
    }
    if !traced.is_empty() {
        outputs.add("diagram.svg", render_diagram(&traced));
    }
    outputs.add_json("report.json", &verify_json(&report)?)?;
    outputs.add("checks.txt", lines.clone());
    Ok(Completed {
        config,
        outputs,
        passed: report.passed(),
        stdout: lines,
    })
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// `(μ, e_norm)` polylines, one colour per branch, with the bifurcation
/// points marked on the `μ` axis. Output depends only on the input data.
pub fn render_diagram(branches: &[&Branch64]) -> String {
    let (w, h, left, right, top, bottom) = (800.0, 500.0, 80.0, 220.0, 30.0, 50.0);
    let mut mu_lo = f64::INFINITY;
    let mut mu_hi = f64::NEG_INFINITY;
    let mut e_hi: f64 = 0.0;
    for b in branches {
        mu_lo = mu_lo.min(b.origin);
        mu_hi = mu_hi.max(b.origin);
        for p in &b.points {
            mu_lo = mu_lo.min(p.mu);
            mu_hi = mu_hi.max(p.mu);
            e_hi = e_hi.max(p.norm.value);
        }
    }
    if !mu_lo.is_finite() {
        (mu_lo, mu_hi) = (0.0, 1.0);
    }
    let pad = if mu_hi > mu_lo { 0.05 * (mu_hi - mu_lo) } else { 0.01 * mu_lo.abs().max(1.0) };
    mu_lo -= pad;
    mu_hi += pad;
    if e_hi <= 0.0 {
        e_hi = 1.0;
    }
    e_hi *= 1.05;
    let pw = w - left - right;
    let ph = h - top - bottom;
    let x = |mu: f64| left + (mu - mu_lo) / (mu_hi - mu_lo) * pw;
    let y = |e: f64| top + ph - e / e_hi * ph;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    s.push_str(&format!("<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"));
    s.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        top + ph,
        left + pw,
        top + ph
    ));
    s.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        top + ph
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let mu = mu_lo + f * (mu_hi - mu_lo);
        let e = f * e_hi;
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            x(mu),
            top + ph + 16.0,
            tick(mu)
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            left - 6.0,
            y(e) + 4.0,
            tick(e)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">mu</text>\n",
        left + pw / 2.0,
        h - 10.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">e-norm</text>\n",
        top + ph / 2.0,
        top + ph / 2.0
    ));
    for (i, b) in branches.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut pts = format!("{:.2},{:.2}", x(b.origin), y(0.0));
        for p in &b.points {
            pts.push_str(&format!(" {:.2},{:.2}", x(p.mu), y(p.norm.value)));
        }
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{pts}\"/>\n"
        ));
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"black\"/>\n",
            x(b.origin),
            y(0.0)
        ));
        let ly = top + 14.0 * (i as f64 + 1.0);
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{colour}\" stroke-width=\"2\"/>\n",
            left + pw + 12.0,
            ly - 4.0,
            left + pw + 30.0,
            ly - 4.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\">k={} nu={} sigma={}</text>\n",
            left + pw + 36.0,
            b.k,
            b.nu,
            b.sigma
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

/// Exit code for an error raised anywhere in a command.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<beamspec::Error>().map(|e| e.class()) {
        Some(ErrorClass::Validation) => EXIT_VALIDATION,
        Some(ErrorClass::Numerical) => EXIT_NUMERICAL,
        Some(ErrorClass::Usage) | None => EXIT_USAGE,
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var("BEAMSPEC_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub fn dispatch(cli: &Cli) -> Result<Completed> {
    match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Degree(a) => cmd_degree(a),
        Command::Sturm(a) => cmd_sturm(a),
        Command::Branch(a) => cmd_branch(a),
        Command::Solve(a) => cmd_solve(a),
        Command::VerifyAll(a) => cmd_verify(a),
    }
}

/// Parses `argv`, runs the command, writes its outputs and returns the
/// process exit code: 0 on success, 1 on usage errors, 2 when a hypothesis
/// or validation check rejects the input, 3 on numerical failure or when a
/// verification command reports failing checks.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let work = || -> Result<bool> {
        let done = dispatch(&cli)?;
        write_outputs(&done.config, &done.outputs)?;
        print!("{}", done.stdout);
        Ok(done.passed)
    };
    let result = match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(anyhow!(e)),
        },
        None => work(),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("beamspec: checks failed");
            EXIT_NUMERICAL
        }
        Err(e) => {
            eprintln!("beamspec: {e:#}");
            exit_code(&e)
        }
    }
}
