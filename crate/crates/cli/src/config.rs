//! Scenario files: one JSON object per run.

use jostlab::bifurcation::{build_bifurcation_potential, KAPPA0};
use jostlab::potential::PotentialJson;
use jostlab::spectral::bisector;
use jostlab::threshold::DEFAULT_EPS_RAY;
use jostlab::{Potential, WeightSpec};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Jost,
    Resolvent,
    Threshold,
    Lapnorm,
    Bifurcate,
    Audit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Jost => "jost",
            Command::Resolvent => "resolvent",
            Command::Threshold => "threshold",
            Command::Lapnorm => "lapnorm",
            Command::Bifurcate => "bifurcate",
            Command::Audit => "audit",
        }
    }
}

/// `"free"`, `"bifurcation(κ)"` or an explicit piecewise-polynomial object.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Named(String),
    Explicit(PotentialJson),
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential, String> {
        match self {
            PotentialSpec::Explicit(j) => Potential::from_json(j).map_err(|e| e.to_string()),
            PotentialSpec::Named(s) => {
                let s = s.trim();
                if s == "free" {
                    return Ok(Potential::zero(1.0));
                }
                let kappa = parse_bifurcation(s)?;
                build_bifurcation_potential(kappa).map(|b| b.v).map_err(|e| e.to_string())
            }
        }
    }
}

/// κ from `bifurcation(κ)`.
pub fn parse_bifurcation(s: &str) -> Result<f64, String> {
    let inner = s
        .strip_prefix("bifurcation(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| format!("unknown potential {s:?}; expected \"free\", \"bifurcation(kappa)\" or an object"))?;
    inner.trim().parse::<f64>().map_err(|_| format!("bad kappa {inner:?} in {s:?}"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "X")]
    pub x: f64,
    pub h: f64,
    pub order: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaPlan {
    /// arg ζ; the bisector π/(2N) when absent
    pub angle: Option<f64>,
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Weights {
    pub s: f64,
    pub s_prime: f64,
    /// exponential weight e^{−ν|x|} on both sides
    pub nu: f64,
    /// exponent of the moments M±(μ) in the Jost estimates
    pub mu: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { s: 2.0, s_prime: 2.0, nu: 0.0, mu: 0.0 }
    }
}

impl Weights {
    pub fn spec(&self) -> WeightSpec {
        WeightSpec::new(self.s, self.s_prime)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub residual: f64,
    pub jump: f64,
    pub continuity: f64,
    pub liouville: f64,
    pub eigen_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { residual: 1e-6, jump: 1e-6, continuity: 1e-8, liouville: 1e-8, eigen_residual: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: PathBuf,
    /// node stride of kernel heatmap dumps
    pub kernel_stride: usize,
    /// write per-ζ CSV dumps
    pub dumps: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), kernel_stride: 4, dumps: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Corpus {
    /// directory of potential JSON files, relative to the config file
    pub dir: Option<PathBuf>,
    pub free: bool,
    /// number of random potentials drawn from the scenario seed
    pub random: usize,
    pub pieces: usize,
    pub degree: usize,
    pub amplitude: f64,
    pub bifurcation: Vec<f64>,
}

impl Default for Corpus {
    fn default() -> Self {
        Self { dir: None, free: false, random: 0, pieces: 2, degree: 1, amplitude: 1.0, bifurcation: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: Option<Command>,
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
    pub potential: Option<PotentialSpec>,
    pub grid: GridSpec,
    #[serde(default)]
    pub zeta_plan: ZetaPlan,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub seed: u64,
    pub kappa: Option<f64>,
    pub corpus: Option<Corpus>,
}

fn default_n() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    pub field: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        Self { field: Some(field.to_string()), line: None, column: None, message: message.into() }
    }

    pub fn plain(message: impl Into<String>) -> Self {
        Self { field: None, line: None, column: None, message: message.into() }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": "config", "field": self.field, "line": self.line, "column": self.column, "message": self.message })
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " at line {l} column {c}")?;
        }
        if let Some(field) = &self.field {
            write!(f, " in field `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Pulls the field name out of serde messages such as "missing field `grid`".
fn field_from_message(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    let name = &msg[start..start + len];
    (msg.starts_with("missing field") || msg.starts_with("unknown field") || msg.starts_with("duplicate field"))
        .then(|| name.to_string())
}

/// Parses and validates; errors carry line/column from the parser or the offending field.
pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
    let sc: Scenario = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        ConfigError { field: field_from_message(&msg), line: Some(e.line()), column: Some(e.column()), message: msg }
    })?;
    Ok(sc)
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::field(field, format!("must be positive and finite, got {x}")))
    }
}

impl Scenario {
    /// Checks everything `command` needs before any numerics run.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(ConfigError::field(
                    "command",
                    format!("config is for {:?} but {:?} was requested", c.name(), command.name()),
                ));
            }
        }
        if !(2..=8).contains(&self.n) {
            return Err(ConfigError::field("N", format!("must be in 2..=8, got {}", self.n)));
        }
        match command {
            Command::Threshold if !(self.n == 2 || self.n == 3) => {
                return Err(ConfigError::field("N", "threshold classification supports N = 2 and N = 3"))
            }
            Command::Bifurcate if self.n != 3 => return Err(ConfigError::field("N", "bifurcate requires N = 3")),
            _ => {}
        }
        positive("grid.X", self.grid.x)?;
        positive("grid.h", self.grid.h)?;
        if !(2..=40).contains(&self.grid.order) {
            return Err(ConfigError::field("grid.order", format!("must be in 2..=40, got {}", self.grid.order)));
        }
        if let Some(a) = self.zeta_plan.angle {
            if !(a.is_finite() && (0.0..=std::f64::consts::PI / self.n as f64).contains(&a)) {
                return Err(ConfigError::field("zeta_plan.angle", format!("must lie in [0, pi/N], got {a}")));
            }
        }
        if let Some(r) = &self.zeta_plan.radii {
            if r.is_empty() {
                return Err(ConfigError::field("zeta_plan.radii", "must not be empty"));
            }
            for x in r {
                positive("zeta_plan.radii", *x)?;
            }
        }
        for (name, x) in [("weights.s", self.weights.s), ("weights.s_prime", self.weights.s_prime)] {
            if !x.is_finite() {
                return Err(ConfigError::field(name, "must be finite"));
            }
        }
        for (name, x) in [("weights.nu", self.weights.nu), ("weights.mu", self.weights.mu)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(ConfigError::field(name, "must be non-negative"));
            }
        }
        let t = &self.tolerances;
        for (name, x) in [
            ("tolerances.residual", t.residual),
            ("tolerances.jump", t.jump),
            ("tolerances.continuity", t.continuity),
            ("tolerances.liouville", t.liouville),
            ("tolerances.eigen_residual", t.eigen_residual),
        ] {
            positive(name, x)?;
        }
        if self.output.kernel_stride == 0 {
            return Err(ConfigError::field("output.kernel_stride", "must be at least 1"));
        }
        match command {
            Command::Audit => {
                let c = self.corpus.as_ref().ok_or_else(|| ConfigError::field("corpus", "audit needs a corpus"))?;
                if c.dir.is_none() && !c.free && c.random == 0 && c.bifurcation.is_empty() {
                    return Err(ConfigError::field("corpus", "corpus is empty"));
                }
                if c.random > 0 {
                    positive("corpus.amplitude", c.amplitude)?;
                    if c.pieces == 0 {
                        return Err(ConfigError::field("corpus.pieces", "must be at least 1"));
                    }
                }
                for &k in &c.bifurcation {
                    check_kappa("corpus.bifurcation", k)?;
                }
            }
            Command::Bifurcate => {
                let k = self.kappa.ok_or_else(|| ConfigError::field("kappa", "bifurcate needs kappa (config or --kappa)"))?;
                check_kappa("kappa", k)?;
            }
            _ => {
                let p = self.potential.as_ref().ok_or_else(|| ConfigError::field("potential", "missing potential"))?;
                p.build().map_err(|m| ConfigError::field("potential", m))?;
            }
        }
        Ok(())
    }

    pub fn angle(&self) -> f64 {
        self.zeta_plan.angle.unwrap_or_else(|| bisector(self.n))
    }

    /// Radii of the ζ plan, with a per-command default.
    pub fn radii(&self, command: Command) -> Vec<f64> {
        self.zeta_plan.radii.clone().unwrap_or_else(|| match command {
            Command::Threshold => DEFAULT_EPS_RAY.to_vec(),
            Command::Lapnorm => vec![1e-1, 1e-2, 1e-3, 1e-4],
            _ => vec![0.5],
        })
    }

    pub fn potential(&self) -> Potential {
        self.potential.as_ref().expect("validated").build().expect("validated")
    }
}

fn check_kappa(field: &str, k: f64) -> Result<(), ConfigError> {
    if k.is_finite() && (0.0..KAPPA0).contains(&k) {
        Ok(())
    } else {
        Err(ConfigError::field(field, format!("kappa = {k} outside [0, {KAPPA0})")))
    }
}
