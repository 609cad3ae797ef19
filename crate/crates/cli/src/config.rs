//! Run configuration: built-in defaults, an optional TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ptqm::sampling::DEFAULT_SEED;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PTQM_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "ptqm-out";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub potential: PotentialConfig,
    pub contour: ContourConfig,
    pub solver: SolverConfig,
    pub verify: VerifyConfig,
    pub converge: ConvergeConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub epsilon: f64,
    pub mu: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourConfig {
    pub theta_left: Option<f64>,
    pub theta_right: Option<f64>,
    /// `[re, im]`
    pub junction: Option<[f64; 2]>,
    pub ray_length: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    /// Oscillator basis where it applies (integer ε < 2), shooting otherwise.
    #[default]
    Auto,
    Shooting,
    Oscillator,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub backend: BackendChoice,
    /// Levels to locate; the oscillator backend keeps every real level when unset.
    pub n_levels: Option<usize>,
    pub n_trunc: usize,
    /// Local tolerance of the shooting integrator near the junction.
    pub rtol: f64,
    pub tail_rtol: f64,
    /// Fixed step count for the matching region instead of adaptive steps.
    pub steps: Option<usize>,
    pub reality_tol: f64,
    pub residual_tol: f64,
    pub agreement_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub observables: usize,
    pub states: usize,
    pub times: usize,
    pub time_span: f64,
    /// Verification tolerance before scaling by `cond(S)`.
    pub tolerance: f64,
    pub max_condition: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    #[default]
    NTrunc,
    Steps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    pub parameter: SweepParameter,
    pub values: Vec<usize>,
    /// Differences below `floor·(1 + |E₀|)` count as converged.
    pub floor: f64,
    /// Smallest acceptable observed order for step sweeps.
    pub min_order: f64,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            potential: PotentialConfig::default(),
            contour: ContourConfig::default(),
            solver: SolverConfig::default(),
            verify: VerifyConfig::default(),
            converge: ConvergeConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            mu: 0.0,
            lambda: 1.0,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: BackendChoice::Auto,
            n_levels: None,
            n_trunc: 60,
            rtol: 1e-10,
            tail_rtol: 1e-11,
            steps: None,
            reality_tol: 1e-8,
            residual_tol: 1e-8,
            agreement_tol: 1e-6,
        }
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            observables: 5,
            states: 5,
            times: 7,
            time_span: 10.0,
            tolerance: 1e-8,
            max_condition: 1e8,
        }
    }
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::NTrunc,
            values: vec![10, 20, 40, 80, 160],
            floor: 1e-12,
            min_order: 4.0,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Values given on the command line; `None` leaves the file or default value in place.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub levels: Option<usize>,
    pub n_trunc: Option<usize>,
    pub backend: Option<BackendChoice>,
    pub tol: Option<f64>,
    pub steps: Option<usize>,
    pub sweep: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("invalid configuration: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Defaults, then `file`, then `overrides`; the result is validated.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut config = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        config.apply(overrides)?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.epsilon {
            self.potential.epsilon = v;
        }
        if let Some(v) = o.mu {
            self.potential.mu = v;
        }
        if let Some(v) = o.lambda {
            self.potential.lambda = v;
        }
        if let Some(v) = o.levels {
            self.solver.n_levels = Some(v);
        }
        if let Some(v) = o.n_trunc {
            self.solver.n_trunc = v;
        }
        if let Some(v) = o.backend {
            self.solver.backend = v;
        }
        if let Some(v) = o.tol {
            self.verify.tolerance = v;
        }
        if let Some(v) = o.steps {
            self.solver.steps = Some(v);
        }
        if let Some(s) = &o.sweep {
            let (parameter, values) = parse_sweep(s)?;
            self.converge.parameter = parameter;
            self.converge.values = values;
        }
        if let Some(v) = &o.out {
            self.output.dir = Some(v.clone());
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.potential;
        for (name, v) in [("epsilon", p.epsilon), ("mu", p.mu), ("lambda", p.lambda)] {
            if !v.is_finite() {
                return Err(ConfigError(format!("potential.{name} must be finite")));
            }
        }
        if p.epsilon < 0.0 {
            return Err(ConfigError(format!(
                "epsilon = {} is negative: the spectrum is only guaranteed real in the regime ε ≥ 0",
                p.epsilon
            )));
        }
        let s = &self.solver;
        let v = &self.verify;
        for (name, x) in [
            ("solver.rtol", s.rtol),
            ("solver.tail_rtol", s.tail_rtol),
            ("solver.reality_tol", s.reality_tol),
            ("solver.residual_tol", s.residual_tol),
            ("solver.agreement_tol", s.agreement_tol),
            ("verify.tolerance", v.tolerance),
            ("verify.max_condition", v.max_condition),
            ("verify.time_span", v.time_span),
            ("converge.floor", self.converge.floor),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(ConfigError(format!("{name} must be positive and finite, got {x}")));
            }
        }
        if !self.converge.min_order.is_finite() {
            return Err(ConfigError("converge.min_order must be finite".into()));
        }
        if s.n_trunc < 2 {
            return Err(ConfigError("solver.n_trunc must be at least 2".into()));
        }
        if let Some(n) = s.n_levels {
            if n == 0 {
                return Err(ConfigError("solver.n_levels must be at least 1".into()));
            }
            if s.n_trunc < n {
                return Err(ConfigError(format!("solver.n_trunc = {} is below n_levels = {n}", s.n_trunc)));
            }
        }
        if s.steps == Some(0) {
            return Err(ConfigError("solver.steps must be positive".into()));
        }
        if v.observables == 0 || v.states == 0 || v.times == 0 {
            return Err(ConfigError("verification grid counts must be positive".into()));
        }
        if self.converge.values.is_empty() || self.converge.values.contains(&0) {
            return Err(ConfigError("converge.values must be a nonempty list of positive integers".into()));
        }
        let c = &self.contour;
        for x in [c.theta_left, c.theta_right, c.ray_length].into_iter().flatten() {
            if !x.is_finite() {
                return Err(ConfigError("contour parameters must be finite".into()));
            }
        }
        if let Some([re, im]) = c.junction {
            if !(re.is_finite() && im.is_finite()) {
                return Err(ConfigError("contour.junction must be finite".into()));
            }
        }
        if matches!(c.ray_length, Some(r) if r <= 0.0) {
            return Err(ConfigError("contour.ray_length must be positive".into()));
        }
        Ok(())
    }

    /// `--out` or `output.dir`, else the environment default, else `ptqm-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

/// Parses `n_trunc=10,20,40` or `steps=20,40,80`.
pub fn parse_sweep(text: &str) -> Result<(SweepParameter, Vec<usize>), ConfigError> {
    let (name, list) = text
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("sweep `{text}` must look like n_trunc=10,20,40")))?;
    let parameter = match name.trim() {
        "n_trunc" => SweepParameter::NTrunc,
        "steps" => SweepParameter::Steps,
        other => return Err(ConfigError(format!("unknown sweep parameter `{other}` (n_trunc or steps)"))),
    };
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ConfigError(format!("sweep values: {e}")))?;
    Ok((parameter, values))
}
