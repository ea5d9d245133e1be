//! Run configuration: JSON file, per-figure defaults and flag overrides.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::geophase::{Dephasing, DephasingTable, Evaluator, WeakCouplingBath};
use crate::quadrature::QuadratureControls;
use crate::spectra::{gamma_high_t, BathParams, SpectralModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathMode {
    ZeroT,
    FiniteT,
    HighT,
}

impl BathMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero-t" => Some(Self::ZeroT),
            "finite-t" => Some(Self::FiniteT),
            "high-t" => Some(Self::HighT),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluatorChoice {
    All,
    One(Evaluator),
}

impl EvaluatorChoice {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "all" {
            Some(Self::All)
        } else {
            Evaluator::parse(s).map(Self::One)
        }
    }

    pub fn includes(&self, e: Evaluator) -> bool {
        match self {
            Self::All => true,
            Self::One(x) => *x == e,
        }
    }
}

impl fmt::Display for EvaluatorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::All => f.write_str("all"),
            Self::One(e) => f.write_str(e.name()),
        }
    }
}

impl Serialize for EvaluatorChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EvaluatorChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse(&s).ok_or_else(|| {
            serde::de::Error::custom(format!(
                "unknown evaluator `{s}`; expected \"all\" or one of {}",
                Evaluator::ALL.map(|e| e.name()).join(", ")
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Every field optional; one layer of the configuration stack.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(rename = "kT_over_Omega", skip_serializing_if = "Option::is_none")]
    pub kt_over_omega: Option<f64>,
    #[serde(rename = "cutoff_over_Omega", skip_serializing_if = "Option::is_none")]
    pub cutoff_over_omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bath_mode: Option<BathMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cycles: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_cycle: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluator: Option<EvaluatorChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_format: Option<OutputFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PartialConfig {
    /// Fields set in `top` win. Setting either angle field replaces both.
    pub fn overlay(mut self, top: &PartialConfig) -> Self {
        if top.theta.is_some() || top.theta_deg.is_some() {
            self.theta = top.theta;
            self.theta_deg = top.theta_deg;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if top.$f.is_some() { self.$f = top.$f.clone(); } )* };
        }
        take!(
            gamma0,
            kt_over_omega,
            cutoff_over_omega,
            bath_mode,
            n_cycles,
            steps_per_cycle,
            evaluator,
            output_format,
            output_path,
            seed
        );
        self
    }

    pub fn sets_theta(&self) -> bool {
        self.theta.is_some() || self.theta_deg.is_some()
    }
}

/// Fully resolved, validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub theta: f64,
    pub gamma0: f64,
    #[serde(rename = "kT_over_Omega")]
    pub kt_over_omega: f64,
    #[serde(rename = "cutoff_over_Omega")]
    pub cutoff_over_omega: f64,
    pub bath_mode: BathMode,
    pub n_cycles: u32,
    pub steps_per_cycle: usize,
    pub evaluator: EvaluatorChoice,
    pub output_format: OutputFormat,
    /// Not echoed, so the same data written to two places is byte-identical.
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            theta: PI / 3.0,
            gamma0: 0.05,
            // γ = π γ₀ k_BT/ħΩ equals γ₀ at this temperature
            kt_over_omega: 1.0 / PI,
            cutoff_over_omega: 100.0,
            bath_mode: BathMode::HighT,
            n_cycles: 1,
            steps_per_cycle: 1024,
            evaluator: EvaluatorChoice::All,
            output_format: OutputFormat::Csv,
            output_path: None,
            seed: 0,
        }
    }
}

fn violation(field: &str, constraint: &str, value: impl fmt::Display) -> CliError {
    CliError::Config(format!("{field} must satisfy {constraint} (got {value})"))
}

impl RunConfig {
    /// Applies `layer` on top of the built-in defaults and validates.
    pub fn resolve(layer: &PartialConfig) -> Result<Self, CliError> {
        let d = Self::default();
        let theta = match (layer.theta, layer.theta_deg) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "theta and theta_deg are mutually exclusive".into(),
                ))
            }
            (Some(t), None) => t,
            (None, Some(deg)) => deg.to_radians(),
            (None, None) => d.theta,
        };
        let n_cycles = layer.n_cycles.unwrap_or(d.n_cycles as i64);
        let steps = layer.steps_per_cycle.unwrap_or(d.steps_per_cycle as i64);
        let cfg = Self {
            theta,
            gamma0: layer.gamma0.unwrap_or(d.gamma0),
            kt_over_omega: layer.kt_over_omega.unwrap_or(d.kt_over_omega),
            cutoff_over_omega: layer.cutoff_over_omega.unwrap_or(d.cutoff_over_omega),
            bath_mode: layer.bath_mode.unwrap_or(d.bath_mode),
            n_cycles: u32::try_from(n_cycles)
                .map_err(|_| violation("n_cycles", ">= 1", n_cycles))?,
            steps_per_cycle: usize::try_from(steps)
                .map_err(|_| violation("steps_per_cycle", ">= 4 and even", steps))?,
            evaluator: layer.evaluator.unwrap_or(d.evaluator),
            output_format: layer.output_format.unwrap_or(d.output_format),
            output_path: layer.output_path.clone(),
            seed: layer.seed.unwrap_or(d.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(violation("theta", "0 <= theta <= π", self.theta));
        }
        if !(self.gamma0 >= 0.0 && self.gamma0.is_finite()) {
            return Err(violation("gamma0", ">= 0", self.gamma0));
        }
        if !(self.kt_over_omega > 0.0 && self.kt_over_omega.is_finite()) {
            return Err(violation("kT_over_Omega", "> 0", self.kt_over_omega));
        }
        if !(self.cutoff_over_omega > 0.0 && self.cutoff_over_omega.is_finite()) {
            return Err(violation("cutoff_over_Omega", "> 0", self.cutoff_over_omega));
        }
        if self.n_cycles < 1 {
            return Err(violation("n_cycles", ">= 1", self.n_cycles));
        }
        if self.steps_per_cycle < 4 || self.steps_per_cycle % 2 != 0 {
            return Err(violation("steps_per_cycle", ">= 4 and even", self.steps_per_cycle));
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        2.0 * PI
    }

    /// Dephasing rate γ/Ω of the high-temperature bath.
    pub fn gamma_high_t(&self) -> f64 {
        gamma_high_t(self.gamma0, self.kt_over_omega)
    }

    pub fn weak_coupling_bath(&self) -> Option<WeakCouplingBath> {
        match self.bath_mode {
            BathMode::HighT => Some(WeakCouplingBath::HighT {
                kt_over_omega: self.kt_over_omega,
            }),
            BathMode::ZeroT => Some(WeakCouplingBath::ZeroT {
                cutoff_over_omega: self.cutoff_over_omega,
            }),
            BathMode::FiniteT => None,
        }
    }

    pub fn bath_params(&self) -> BathParams {
        match self.bath_mode {
            BathMode::ZeroT => BathParams::ZeroT,
            BathMode::FiniteT => BathParams::FiniteT {
                beta: 1.0 / self.kt_over_omega,
            },
            BathMode::HighT => BathParams::HighTClosedForm {
                kt_over_omega: self.kt_over_omega,
            },
        }
    }

    /// Γ per unit γ₀ up to `t_max`, tabulated for the quadrature modes.
    pub fn bath_source(&self, t_max: f64) -> Result<BathSource, CliError> {
        let table = match self.bath_mode {
            BathMode::HighT => None,
            _ => {
                let model = SpectralModel::ohmic(1.0, self.cutoff_over_omega)?;
                Some(DephasingTable::from_bath(
                    &model,
                    &self.bath_params(),
                    t_max,
                    &QuadratureControls::default(),
                )?)
            }
        };
        Ok(BathSource {
            kt_over_omega: self.kt_over_omega,
            unit_table: table,
        })
    }
}

/// Produces the dephasing source for any γ₀; Γ is linear in γ₀.
#[derive(Debug, Clone)]
pub struct BathSource {
    kt_over_omega: f64,
    unit_table: Option<DephasingTable>,
}

impl BathSource {
    pub fn dephasing(&self, gamma0: f64) -> Dephasing {
        match &self.unit_table {
            None => Dephasing::high_t(gamma0, self.kt_over_omega),
            Some(t) => Dephasing::Tabulated(t.scaled(gamma0)),
        }
    }
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

/// Parses a JSON document into a configuration layer.
pub fn parse_config(text: &str) -> Result<PartialConfig, CliError> {
    let layer: PartialConfig = serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    // Constraint check on the file alone, reported against the offending line.
    if let Err(CliError::Config(msg)) = RunConfig::resolve(&layer) {
        let field = msg.split_whitespace().next().unwrap_or_default();
        let key = match field {
            "theta" if layer.theta_deg.is_some() => "theta_deg",
            f => f,
        };
        return Err(CliError::Config(match line_of_key(text, key) {
            Some(line) => format!("line {line}: {msg}"),
            None => msg,
        }));
    }
    Ok(layer)
}

pub fn load_config(path: &Path) -> Result<PartialConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
