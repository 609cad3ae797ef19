//! The five subcommands. Each returns the text it printed plus any failed checks.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ptqm::dynamics::{evolve, verify_equivalence, geometric_times, EquivalenceReport, EvolutionState, VerificationGrid};
use ptqm::equivalence::{BundleConfig, BundleReport, EquivalenceBundle};
use ptqm::hilbert::{MetricConfig, MetricSpace, SpaceRole};
use ptqm::io::{self, fmt_sig, Header};
use ptqm::linalg;
use ptqm::ode::StepControl;
use ptqm::oscillator::{diagonalize_oscillator_basis, eigenbasis_matrix, OscillatorConfig};
use ptqm::potential::{stokes_wedges, Contour, PotentialSpec, DEFAULT_DECAY_FACTOR};
use ptqm::shooting::{energy_scale, find_eigenvalues, ShootingConfig};
use ptqm::spectrum::{Backend, Spectrum};
use ptqm::Error;

use crate::config::{BackendChoice, RunConfig, SweepParameter};

/// Levels located by shooting when none are requested.
pub const DEFAULT_SHOOTING_LEVELS: usize = 4;
/// Span over which verification checks norm conservation.
pub const NORM_CHECK_SPAN: f64 = 1e3;
pub const NORM_CHECK_TOL: f64 = 1e-12;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver(String),
    Invariant(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Invariant(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
            Failure::Invariant(m) => write!(f, "invariant failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NegativeEpsilon(_) | Error::InvalidContour(_) | Error::UnsupportedBasis(_) => {
                Failure::Config(e.to_string())
            }
            other => Failure::Solver(other.to_string()),
        }
    }
}

/// What a command produced. A nonempty `failed` list means exit code 4.
#[derive(Debug, Default)]
pub struct Outcome {
    pub text: String,
    pub failed: Vec<String>,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failed.is_empty() {
            0
        } else {
            4
        }
    }

    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Solver(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| Failure::Solver(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn check(&mut self, passed: bool, line: String) {
        let _ = writeln!(self.text, "[{}] {line}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failed.push(line);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Metric,
    Bundle,
    Verify,
    Converge,
}

pub fn run(command: Command, config: &RunConfig, strict: bool) -> Result<Outcome, Failure> {
    match command {
        Command::Spectrum => cmd_spectrum(config, strict),
        Command::Metric => cmd_metric(config, strict),
        Command::Bundle => cmd_bundle(config, strict),
        Command::Verify => cmd_verify(config, strict),
        Command::Converge => cmd_converge(config, strict),
    }
}

fn potential(config: &RunConfig) -> Result<PotentialSpec, Failure> {
    let p = &config.potential;
    Ok(PotentialSpec::new(p.epsilon, p.mu, p.lambda)?)
}

fn oscillator_applies(p: &PotentialSpec) -> bool {
    matches!(p.integer_epsilon(), Some(e) if e < 2)
}

fn backends(config: &RunConfig, p: &PotentialSpec) -> Vec<Backend> {
    match config.solver.backend {
        BackendChoice::Auto if oscillator_applies(p) => vec![Backend::OscillatorBasis],
        BackendChoice::Auto | BackendChoice::Shooting => vec![Backend::Shooting],
        BackendChoice::Oscillator => vec![Backend::OscillatorBasis],
        BackendChoice::Both => vec![Backend::Shooting, Backend::OscillatorBasis],
    }
}

fn shooting_config(config: &RunConfig) -> ShootingConfig {
    let s = &config.solver;
    ShootingConfig {
        control: match s.steps {
            Some(steps) => StepControl::Fixed { steps },
            None => StepControl::Adaptive {
                rtol: s.rtol,
                atol: s.rtol * 1e-2,
            },
        },
        tail_rtol: s.tail_rtol,
        residual_tol: s.residual_tol,
        ..ShootingConfig::default()
    }
}

/// The configured contour; with no angles given, wedge centers, or the real
/// axis when `real_axis` is set and the wedges contain it.
fn contour(config: &RunConfig, p: &PotentialSpec, n_levels: usize, real_axis: bool) -> Result<Contour, Failure> {
    let w = stokes_wedges(p.epsilon)?;
    let c = &config.contour;
    let use_axis = real_axis && p.epsilon < 2.0 && c.theta_left.is_none() && c.theta_right.is_none();
    let (left, right) = if use_axis {
        (-PI, 0.0)
    } else {
        (c.theta_left.unwrap_or(w.center_left), c.theta_right.unwrap_or(w.center_right))
    };
    let junction = c.junction.map(|[re, im]| linalg::c(re, im)).unwrap_or_default();
    let scale = energy_scale(p, n_levels)?;
    let mut contour = Contour::with_angles(p, left, right, junction, scale, DEFAULT_DECAY_FACTOR)?;
    if let Some(r) = c.ray_length {
        contour.ray_length = r;
    }
    Ok(contour)
}

fn compute(config: &RunConfig, backend: Backend, real_axis: bool) -> Result<Spectrum, Failure> {
    let p = potential(config)?;
    match backend {
        Backend::Shooting => {
            let n = config.solver.n_levels.unwrap_or(DEFAULT_SHOOTING_LEVELS);
            let ct = contour(config, &p, n, real_axis)?;
            let mut sc = shooting_config(config);
            sc.eigenfunctions = true;
            Ok(find_eigenvalues(&p, &ct, n, &sc)?)
        }
        Backend::OscillatorBasis => Ok(diagonalize_oscillator_basis(
            &p,
            config.solver.n_trunc,
            &OscillatorConfig {
                n_levels: config.solver.n_levels,
                reality_tol: config.solver.reality_tol,
                ..OscillatorConfig::default()
            },
        )?),
    }
}

fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::Shooting => "shooting",
        Backend::OscillatorBasis => "oscillator",
    }
}

fn spectrum_checks(out: &mut Outcome, s: &Spectrum, config: &RunConfig, strict: bool) {
    let name = backend_name(s.backend);
    let violations = s.invariant_violations(config.solver.reality_tol, config.solver.residual_tol);
    out.check(
        violations.is_empty(),
        format!(
            "{name}: reality, residual, ordering and positivity invariants{}",
            if violations.is_empty() {
                String::new()
            } else {
                format!(" ({})", violations.join("; "))
            }
        ),
    );
    if strict {
        out.check(s.converged, format!("{name}: convergence estimate below tolerance"));
    }
}

fn level_table(s: &Spectrum) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "{:>4}  {:>20}  {:>20}  {:>20}  {:>20}", "n", "E_n", "residual", "|Im E_n|", "error_estimate");
    for (n, l) in s.levels.iter().enumerate() {
        let _ = writeln!(
            t,
            "{n:>4}  {:>20}  {:>20}  {:>20}  {:>20}",
            fmt_sig(l.energy.re),
            fmt_sig(l.residual),
            fmt_sig(l.energy.im.abs()),
            fmt_sig(l.error_estimate)
        );
    }
    t
}

pub fn cmd_spectrum(config: &RunConfig, strict: bool) -> Result<Outcome, Failure> {
    let p = potential(config)?;
    let dir = config.output_dir();
    let mut out = Outcome::default();
    let mut spectra = Vec::new();
    for backend in backends(config, &p) {
        let s = compute(config, backend, false)?;
        let name = backend_name(backend);
        out.write(&dir, &format!("spectrum_{name}.json"), &s.to_json()?)?;
        for (n, f) in s.eigenfunctions.iter().enumerate() {
            out.write(&dir, &format!("eigenfunction_{name}_{n}.csv"), &f.to_csv())?;
        }
        let _ = writeln!(out.text, "backend: {name}");
        out.text.push_str(&level_table(&s));
        spectra.push(s);
    }
    for s in &spectra {
        spectrum_checks(&mut out, s, config, strict);
    }
    if let [a, b] = spectra.as_slice() {
        let _ = writeln!(out.text, "{:>4}  {:>20}  {:>20}  {:>20}", "n", "E_shooting", "E_oscillator", "agreement");
        let n = a.len().min(b.len());
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let (ea, eb) = (a.levels[k].energy, b.levels[k].energy);
            let d = (ea - eb).norm();
            worst = worst.max(d);
            let _ = writeln!(out.text, "{k:>4}  {:>20}  {:>20}  {:>20}", fmt_sig(ea.re), fmt_sig(eb.re), fmt_sig(d));
        }
        out.check(
            n > 0 && worst < config.solver.agreement_tol,
            format!(
                "backend agreement over {n} levels: {} < {}",
                fmt_sig(worst),
                fmt_sig(config.solver.agreement_tol)
            ),
        );
    }
    let text = out.text.clone();
    out.write(&dir, "spectrum.txt", &text)?;
    Ok(out)
}

fn metric_space(config: &RunConfig, s: &Spectrum) -> Result<(MetricSpace, f64), Failure> {
    let basis = eigenbasis_matrix(s, config.solver.n_trunc)?;
    let space = MetricSpace::from_basis(
        &basis.s,
        SpaceRole::Physical,
        &MetricConfig {
            max_condition: config.verify.max_condition,
            ..MetricConfig::default()
        },
    )
    .map_err(construction_failure)?;
    let coeffs = basis.coefficients();
    let l2_gram = coeffs.adjoint() * &coeffs;
    Ok((space, linalg::identity_deviation(&l2_gram)))
}

fn primary_backend(config: &RunConfig, p: &PotentialSpec) -> Backend {
    match config.solver.backend {
        BackendChoice::Shooting => Backend::Shooting,
        BackendChoice::Oscillator | BackendChoice::Both => Backend::OscillatorBasis,
        BackendChoice::Auto if oscillator_applies(p) => Backend::OscillatorBasis,
        BackendChoice::Auto => Backend::Shooting,
    }
}

pub fn cmd_metric(config: &RunConfig, strict: bool) -> Result<Outcome, Failure> {
    let p = potential(config)?;
    let dir = config.output_dir();
    let mut out = Outcome::default();
    let s = compute(config, primary_backend(config, &p), true)?;
    spectrum_checks(&mut out, &s, config, strict);
    let (space, l2_dev) = metric_space(config, &s)?;
    let inv = space.invariants();
    let tol = config.verify.tolerance * inv.condition.max(1.0);
    let _ = writeln!(out.text, "dimension: {}", space.dim());
    let _ = writeln!(out.text, "cond(S): {}", fmt_sig(inv.condition));
    let _ = writeln!(out.text, "max |S^dag S - I| (ambient L2 gram): {}", fmt_sig(l2_dev));
    out.check(inv.hermitian_violation <= tol, format!("eta hermitian: {}", fmt_sig(inv.hermitian_violation)));
    out.check(inv.min_eigenvalue > 0.0, format!("eta positive definite: min eigenvalue {}", fmt_sig(inv.min_eigenvalue)));
    out.check(
        inv.gram_deviation <= tol,
        format!("eigenbasis gram under <.,.>+ = I: {} <= {}", fmt_sig(inv.gram_deviation), fmt_sig(tol)),
    );
    out.write(&dir, "metric.json", &space.to_json()?)?;
    let text = out.text.clone();
    out.write(&dir, "metric.txt", &text)?;
    Ok(out)
}

fn bundle(config: &RunConfig, s: Spectrum) -> Result<EquivalenceBundle, Failure> {
    EquivalenceBundle::build(
        s,
        &BundleConfig {
            max_condition: config.verify.max_condition,
            tolerance: config.verify.tolerance,
            reality_tol: config.solver.reality_tol,
            n_trunc: Some(config.solver.n_trunc),
            pathway: None,
        },
    )
    .map_err(construction_failure)
}

/// Construction refusals that amount to a failed check rather than a solver fault.
fn construction_failure(e: Error) -> Failure {
    match e {
        Error::InvalidInput(_) | Error::NonHermitian(_) | Error::IllConditioned { .. } | Error::NotPositiveDefinite { .. } => {
            Failure::Invariant(e.to_string())
        }
        other => other.into(),
    }
}

fn report_checks(out: &mut Outcome, r: &BundleReport) {
    for c in &r.checks {
        out.check(
            c.passed,
            format!("{}: {} <= {}", c.name, fmt_sig(c.violation), fmt_sig(c.tolerance)),
        );
    }
}

pub fn cmd_bundle(config: &RunConfig, strict: bool) -> Result<Outcome, Failure> {
    let p = potential(config)?;
    let dir = config.output_dir();
    let mut out = Outcome::default();
    let s = compute(config, primary_backend(config, &p), true)?;
    spectrum_checks(&mut out, &s, config, strict);
    let b = bundle(config, s)?;
    let report = b.verify(config.seed)?;
    let _ = writeln!(out.text, "pathway: {:?}", b.pathway());
    let _ = writeln!(out.text, "cond(S): {}", fmt_sig(b.condition_number()));
    report_checks(&mut out, &report);
    out.write(&dir, "bundle.json", &b.to_json()?)?;
    out.write(&dir, "bundle_report.txt", &report.to_text())?;
    let text = out.text.clone();
    out.write(&dir, "bundle.txt", &text)?;
    Ok(out)
}

#[derive(Serialize)]
struct VerificationDoc<'a> {
    #[serde(flatten)]
    header: Header,
    seed: u64,
    passed: bool,
    failed: &'a [String],
    bundle: &'a BundleReport,
    equivalence: Option<&'a EquivalenceReport>,
    max_norm_drift_coefficients: f64,
}

pub fn cmd_verify(config: &RunConfig, strict: bool) -> Result<Outcome, Failure> {
    let p = potential(config)?;
    let dir = config.output_dir();
    let mut out = Outcome::default();
    let s = compute(config, primary_backend(config, &p), true)?;
    spectrum_checks(&mut out, &s, config, strict);
    let b = bundle(config, s)?;
    let _ = writeln!(out.text, "pathway: {:?}", b.pathway());
    let _ = writeln!(out.text, "cond(S): {}", fmt_sig(b.condition_number()));
    let report = b.verify(config.seed)?;
    report_checks(&mut out, &report);

    let v = &config.verify;
    let grid = VerificationGrid::random(
        b.dim(),
        v.observables,
        v.states,
        geometric_times(v.time_span, v.times),
        ptqm::sampling::substream_seed(config.seed, 3),
    )?;
    let eq = match verify_equivalence(&b, &grid, b.tolerance()).map_err(construction_failure) {
        Ok(eq) => Some(eq),
        Err(Failure::Invariant(m)) => {
            out.check(false, format!("equivalence grid: {m}"));
            None
        }
        Err(other) => return Err(other),
    };
    if let Some(eq) = &eq {
        out.check(
            eq.max_deviation < eq.tolerance,
            format!(
                "PT vs conventional expectation values over {} triples: {} < {}",
                eq.triples.len(),
                fmt_sig(eq.max_deviation),
                fmt_sig(eq.tolerance)
            ),
        );
        out.check(
            eq.max_imag < eq.tolerance,
            format!("imaginary parts of expectation values: {} < {}", fmt_sig(eq.max_imag), fmt_sig(eq.tolerance)),
        );
    }

    let mut drift: f64 = 0.0;
    for c0 in &grid.states {
        let state = EvolutionState::new(c0.clone(), grid.t0)?;
        let later = evolve(&state, b.spectrum(), grid.t0 + NORM_CHECK_SPAN)?;
        drift = drift.max((later.norm_sqr() / state.norm_sqr() - 1.0).abs());
    }
    out.check(
        drift <= NORM_CHECK_TOL,
        format!("<psi(t),psi(t)>+ conserved up to t = {NORM_CHECK_SPAN}: {} <= {NORM_CHECK_TOL:e}", fmt_sig(drift)),
    );

    let doc = VerificationDoc {
        header: Header::new("verification"),
        seed: config.seed,
        passed: out.failed.is_empty(),
        failed: &out.failed,
        bundle: &report,
        equivalence: eq.as_ref(),
        max_norm_drift_coefficients: drift,
    };
    let json = io::to_json(&doc)?;
    out.write(&dir, "verification.json", &json)?;
    if let Some(eq) = &eq {
        out.write(&dir, "verification.csv", &eq.to_csv())?;
    }
    let _ = writeln!(out.text, "overall: {}", if out.failed.is_empty() { "PASS" } else { "FAIL" });
    let text = out.text.clone();
    out.write(&dir, "verification.txt", &text)?;
    Ok(out)
}

/// Successive differences of a sequence.
pub fn differences(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

/// True when every difference above `floor` is strictly smaller than its predecessor.
pub fn decreasing_beyond(diffs: &[f64], floor: f64) -> bool {
    diffs.windows(2).all(|w| w[1] <= floor || w[1] < w[0])
}

/// `log₂(dₖ / dₖ₊₁)` for consecutive differences both above `floor`.
pub fn observed_orders(diffs: &[f64], floor: f64) -> Vec<f64> {
    diffs
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > floor)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

pub fn cmd_converge(config: &RunConfig, strict: bool) -> Result<Outcome, Failure> {
    let p = potential(config)?;
    let dir = config.output_dir();
    let mut out = Outcome::default();
    let sweep = &config.converge;
    let levels = config.solver.n_levels.unwrap_or(DEFAULT_SHOOTING_LEVELS);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut e0 = Vec::new();
    for &value in &sweep.values {
        let mut c = config.clone();
        let (spectrum, deviation) = match sweep.parameter {
            SweepParameter::NTrunc => {
                c.solver.n_trunc = value;
                c.solver.n_levels = Some(levels.min(value / 2).max(1));
                let s = compute(&c, Backend::OscillatorBasis, false)?;
                let dev = match bundle(&c, s.clone()) {
                    Ok(b) => {
                        let grid = VerificationGrid::standard(b.dim(), config.seed)?;
                        verify_equivalence(&b, &grid, b.tolerance())?.max_deviation
                    }
                    Err(_) => f64::NAN,
                };
                (s, dev)
            }
            SweepParameter::Steps => {
                c.solver.steps = Some(value);
                c.solver.n_levels = Some(levels);
                let ct = contour(&c, &p, levels, false)?;
                let mut sc = shooting_config(&c);
                sc.eigenfunctions = false;
                (find_eigenvalues(&p, &ct, levels, &sc)?, f64::NAN)
            }
        };
        let mut row = vec![value as f64];
        for k in 0..levels {
            row.push(spectrum.levels.get(k).map_or(f64::NAN, |l| l.energy.re));
        }
        row.push(spectrum.levels.iter().map(|l| l.energy.im.abs()).fold(0.0, f64::max));
        row.push(deviation);
        e0.push(spectrum.levels[0].energy.re);
        rows.push(row);
    }

    let diffs = differences(&e0);
    let floor = sweep.floor * (1.0 + e0.last().copied().unwrap_or(0.0).abs());
    let mut header: Vec<String> = vec![match sweep.parameter {
        SweepParameter::NTrunc => "n_trunc".into(),
        SweepParameter::Steps => "steps".into(),
    }];
    header.extend((0..levels).map(|k| format!("E{k}")));
    header.push("max_abs_im".into());
    header.push("equivalence_deviation".into());
    header.push("abs_diff_E0".into());
    for (i, row) in rows.iter_mut().enumerate() {
        row.push(if i == 0 { f64::NAN } else { diffs[i - 1] });
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv = io::csv_table(&header_refs, rows.clone());
    out.write(&dir, "converge.csv", &csv)?;
    out.text.push_str(&csv);

    let _ = writeln!(out.text, "difference threshold: {}", fmt_sig(floor));
    let monotone = decreasing_beyond(&diffs, floor);
    let line = format!(
        "successive |E0| differences decrease beyond {}: {}",
        fmt_sig(floor),
        diffs.iter().map(|d| fmt_sig(*d)).collect::<Vec<_>>().join(", ")
    );
    if strict {
        out.check(monotone, line);
    } else {
        let _ = writeln!(out.text, "[{}] {line}", if monotone { "PASS" } else { "FLAG" });
    }
    if sweep.parameter == SweepParameter::Steps {
        let orders = observed_orders(&diffs, floor);
        let best = orders.iter().copied().fold(f64::NAN, f64::max);
        let line = format!(
            "observed order {} (minimum {})",
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", "),
            sweep.min_order
        );
        let ok = best >= sweep.min_order;
        if strict {
            out.check(ok, line);
        } else {
            let _ = writeln!(out.text, "[{}] {line}", if ok { "PASS" } else { "FLAG" });
        }
    }
    let text = out.text.clone();
    out.write(&dir, "converge.txt", &text)?;
    Ok(out)
}
