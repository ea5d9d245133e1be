//! Environment spectral densities and the dephasing they produce.
//!
//! Units: ħ = k_B = 1 and every frequency is measured in units of the qubit
//! splitting Ω, every time in units of 1/Ω.
//!
//! The diffusion coefficient carries the factor 4 that a σ_z coupling puts in
//! front of the double commutator, so that for the high-temperature ohmic
//! bath D(t → ∞) = γ = π γ₀ k_BT and Γ(t) ≈ γ t.
//!
//! The two time integrals in Γ(t) = ∫₀ᵗ dt′ ∫₀^{t′} ds ν(s) are done
//! analytically, leaving one frequency integral per quantity:
//!
//! * D(t) = ∫ dω w(ω) sin(ωt)
//! * Γ(t) = ∫ dω w(ω) 2 sin²(ωt/2) / ω
//!
//! with the spectral weight w(ω) = 4 J(ω) coth(ω/2T) / ω.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{integrate_with, QuadratureControls, QuadratureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("{what} must satisfy {constraint} (got {value})")]
    Domain {
        what: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("invalid tabulated spectrum: {0}")]
    InvalidTable(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("at grid point t = {t}: {source}")]
    AtGridPoint {
        t: f64,
        #[source]
        source: Box<SpectraError>,
    },
}

fn domain(what: &'static str, constraint: &'static str, value: f64) -> SpectraError {
    SpectraError::Domain {
        what,
        constraint,
        value,
    }
}

/// Spectral density J(ω) of the bosonic environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralModel {
    /// J(ω) = (γ₀/4) ω e^{−ω/Λ}
    OhmicExpCutoff { gamma0: f64, cutoff: f64 },
    /// Linear interpolation through `(ω, J)` samples, zero outside them.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl SpectralModel {
    pub fn ohmic(gamma0: f64, cutoff: f64) -> Result<Self, SpectraError> {
        if !(gamma0 >= 0.0) || !gamma0.is_finite() {
            return Err(domain("gamma0", ">= 0", gamma0));
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(domain("cutoff", "> 0", cutoff));
        }
        Ok(Self::OhmicExpCutoff { gamma0, cutoff })
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self, SpectraError> {
        if samples.is_empty() {
            return Err(SpectraError::InvalidTable("no samples".into()));
        }
        for (i, &(w, j)) in samples.iter().enumerate() {
            if !w.is_finite() || !j.is_finite() || w < 0.0 {
                return Err(SpectraError::InvalidTable(format!(
                    "row {}: frequency must be finite and >= 0",
                    i + 1
                )));
            }
            if j < 0.0 {
                return Err(SpectraError::InvalidTable(format!(
                    "row {}: J must be >= 0 (got {j})",
                    i + 1
                )));
            }
            if i > 0 && w <= samples[i - 1].0 {
                return Err(SpectraError::InvalidTable(format!(
                    "row {}: frequencies must be strictly ascending",
                    i + 1
                )));
            }
        }
        Ok(Self::Tabulated { samples })
    }

    /// Reads a two-column `omega,J` CSV.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, SpectraError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| SpectraError::InvalidTable(e.to_string()))?
            .clone();
        if headers.len() != 2 || &headers[0] != "omega" || &headers[1] != "J" {
            return Err(SpectraError::InvalidTable(
                "expected header `omega,J`".into(),
            ));
        }
        let mut samples = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| SpectraError::InvalidTable(e.to_string()))?;
            let parse = |k: usize| -> Result<f64, SpectraError> {
                record[k].parse::<f64>().map_err(|e| {
                    SpectraError::InvalidTable(format!("row {}: {e}", i + 1))
                })
            };
            samples.push((parse(0)?, parse(1)?));
        }
        Self::tabulated(samples)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, SpectraError> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| SpectraError::InvalidTable(e.to_string()))?;
        Self::from_csv_reader(file)
    }

    /// J(ω).
    pub fn spectral_density(&self, omega: f64) -> Result<f64, SpectraError> {
        if !(omega >= 0.0) {
            return Err(domain("frequency", ">= 0", omega));
        }
        Ok(self.density_unchecked(omega))
    }

    fn density_unchecked(&self, omega: f64) -> f64 {
        match self {
            Self::OhmicExpCutoff { gamma0, cutoff } => {
                0.25 * gamma0 * omega * (-omega / cutoff).exp()
            }
            Self::Tabulated { samples } => interpolate(samples, omega),
        }
    }

    /// J(ω)/ω, finite as ω → 0 for the ohmic form.
    fn density_over_omega(&self, omega: f64) -> f64 {
        match self {
            Self::OhmicExpCutoff { gamma0, cutoff } => 0.25 * gamma0 * (-omega / cutoff).exp(),
            Self::Tabulated { .. } => self.density_unchecked(omega) / omega,
        }
    }

    /// Characteristic bath frequency: Λ, or the largest tabulated ω.
    pub fn frequency_scale(&self) -> f64 {
        match self {
            Self::OhmicExpCutoff { cutoff, .. } => *cutoff,
            Self::Tabulated { samples } => samples.last().map_or(1.0, |s| s.0),
        }
    }

    fn frequency_bound(&self, q: &QuadratureControls) -> f64 {
        match self {
            Self::OhmicExpCutoff { cutoff, .. } => q.frequency_upper_bound_multiplier * cutoff,
            Self::Tabulated { samples } => samples.last().map_or(0.0, |s| s.0),
        }
    }

    fn frequency_start(&self) -> f64 {
        match self {
            Self::OhmicExpCutoff { .. } => 0.0,
            Self::Tabulated { samples } => samples[0].0,
        }
    }

    fn is_ohmic(&self) -> Option<(f64, f64)> {
        match *self {
            Self::OhmicExpCutoff { gamma0, cutoff } => Some((gamma0, cutoff)),
            Self::Tabulated { .. } => None,
        }
    }
}

fn interpolate(samples: &[(f64, f64)], omega: f64) -> f64 {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if omega < first.0 || omega > last.0 {
        return 0.0;
    }
    if samples.len() == 1 {
        return first.1;
    }
    let k = samples.partition_point(|s| s.0 <= omega);
    if k == samples.len() {
        return last.1;
    }
    let (w0, j0) = samples[k - 1];
    let (w1, j1) = samples[k];
    j0 + (j1 - j0) * (omega - w0) / (w1 - w0)
}

/// Temperature treatment of the bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BathParams {
    /// coth(βω/2) → 1.
    ZeroT,
    /// Full coth(βω/2) with inverse temperature β (units 1/Ω).
    FiniteT { beta: f64 },
    /// coth(βω/2) → 2k_BT/ω with the closed-form results for the ohmic bath.
    HighTClosedForm { kt_over_omega: f64 },
}

impl BathParams {
    pub fn validate(&self) -> Result<(), SpectraError> {
        match *self {
            Self::ZeroT => Ok(()),
            Self::FiniteT { beta } if beta > 0.0 && beta.is_finite() => Ok(()),
            Self::FiniteT { beta } => Err(domain("beta", "> 0", beta)),
            Self::HighTClosedForm { kt_over_omega } if kt_over_omega > 0.0 => Ok(()),
            Self::HighTClosedForm { kt_over_omega } => {
                Err(domain("kT_over_Omega", "> 0", kt_over_omega))
            }
        }
    }

    /// coth(βω/2), or its replacement in the limiting modes.
    fn thermal_factor(&self, omega: f64) -> f64 {
        match *self {
            Self::ZeroT => 1.0,
            Self::FiniteT { beta } => coth(0.5 * beta * omega),
            Self::HighTClosedForm { kt_over_omega } => 2.0 * kt_over_omega / omega,
        }
    }
}

pub(crate) fn coth(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

/// γ = π γ₀ k_BT/(ħΩ), the high-temperature dephasing rate in units of Ω.
pub fn gamma_high_t(gamma0: f64, kt_over_omega: f64) -> f64 {
    PI * gamma0 * kt_over_omega
}

fn check_time(t: f64) -> Result<(), SpectraError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain("time", ">= 0", t))
    }
}

/// w(ω) = 4 J(ω) coth(βω/2) / ω
fn spectral_weight(model: &SpectralModel, bath: &BathParams, omega: f64) -> f64 {
    4.0 * model.density_over_omega(omega) * bath.thermal_factor(omega)
}

fn panels_for(omega_max: f64, frequency: f64) -> usize {
    // one panel per half oscillation, plus a floor for the envelope
    let n = (omega_max * frequency / PI).ceil();
    (n as usize).clamp(16, 200_000)
}

fn frequency_integral<F>(
    model: &SpectralModel,
    q: &QuadratureControls,
    oscillation: f64,
    integrand: F,
) -> Result<f64, SpectraError>
where
    F: FnMut(f64) -> f64,
{
    let lo = model.frequency_start();
    let hi = model.frequency_bound(q);
    if hi <= lo {
        return Ok(0.0);
    }
    let mut integrand = integrand;
    let r = integrate_with(
        |w| Ok::<f64, SpectraError>(integrand(w)),
        lo,
        hi,
        panels_for(hi, oscillation),
        q,
    )?;
    Ok(r.value)
}

/// D(t), the diffusion coefficient of the dephasing master equation.
pub fn diffusion(
    model: &SpectralModel,
    bath: &BathParams,
    t: f64,
    q: &QuadratureControls,
) -> Result<f64, SpectraError> {
    check_time(t)?;
    bath.validate()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if let (BathParams::HighTClosedForm { kt_over_omega }, Some((gamma0, cutoff))) =
        (bath, model.is_ohmic())
    {
        // 4 (γ₀/4)(2kT) ∫₀^∞ e^{−ω/Λ} sin(ωt)/ω dω
        return Ok(2.0 * gamma0 * kt_over_omega * (cutoff * t).atan());
    }
    frequency_integral(model, q, t, |w| spectral_weight(model, bath, w) * (w * t).sin())
}

/// Γ(t) = ∫₀ᵗ D(t′) dt′.
///
/// In [`BathParams::HighTClosedForm`] the ohmic bath returns the long-time
/// form γ t exactly.
pub fn decoherence_exponent(
    model: &SpectralModel,
    bath: &BathParams,
    t: f64,
    q: &QuadratureControls,
) -> Result<f64, SpectraError> {
    check_time(t)?;
    bath.validate()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if let (BathParams::HighTClosedForm { kt_over_omega }, Some((gamma0, _))) =
        (bath, model.is_ohmic())
    {
        return Ok(gamma_high_t(gamma0, *kt_over_omega) * t);
    }
    frequency_integral(model, q, t, |w| {
        let s = (0.5 * w * t).sin();
        spectral_weight(model, bath, w) * 2.0 * s * s / w
    })
}

/// Γ(b) − Γ(a) = ∫_a^b D(t) dt for 0 ≤ a ≤ b.
pub fn decoherence_increment(
    model: &SpectralModel,
    bath: &BathParams,
    a: f64,
    b: f64,
    q: &QuadratureControls,
) -> Result<f64, SpectraError> {
    check_time(a)?;
    check_time(b)?;
    if b < a {
        return Err(domain("interval end", ">= interval start", b));
    }
    bath.validate()?;
    if a == b {
        return Ok(0.0);
    }
    if let (BathParams::HighTClosedForm { kt_over_omega }, Some((gamma0, _))) =
        (bath, model.is_ohmic())
    {
        return Ok(gamma_high_t(gamma0, *kt_over_omega) * (b - a));
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    // cos(ωa) − cos(ωb) = 2 sin(ω(a+b)/2) sin(ω(b−a)/2)
    frequency_integral(model, q, b, |w| {
        spectral_weight(model, bath, w) * 2.0 * (w * mid).sin() * (w * half).sin() / w
    })
}

/// F(t) = e^{−Γ(t)}.
pub fn dephasing_factor(
    model: &SpectralModel,
    bath: &BathParams,
    t: f64,
    q: &QuadratureControls,
) -> Result<f64, SpectraError> {
    Ok((-decoherence_exponent(model, bath, t, q)?).exp())
}

/// Tabulates F over an ascending time grid with one cumulative pass over Γ.
pub fn dephasing_profile(
    model: &SpectralModel,
    bath: &BathParams,
    times: &[f64],
    q: &QuadratureControls,
) -> Result<Vec<(f64, f64)>, SpectraError> {
    Ok(exponent_profile(model, bath, times, q)?
        .into_iter()
        .map(|(t, g)| (t, (-g).exp()))
        .collect())
}

/// Same as [`dephasing_profile`] but returns Γ instead of F.
pub fn exponent_profile(
    model: &SpectralModel,
    bath: &BathParams,
    times: &[f64],
    q: &QuadratureControls,
) -> Result<Vec<(f64, f64)>, SpectraError> {
    bath.validate()?;
    let mut out = Vec::with_capacity(times.len());
    let mut previous = 0.0;
    let mut gamma = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let annotate = |e: SpectraError| SpectraError::AtGridPoint {
            t,
            source: Box::new(e),
        };
        check_time(t).map_err(annotate)?;
        if i > 0 && t < previous {
            return Err(annotate(domain("time grid", "ascending", t)));
        }
        gamma += decoherence_increment(model, bath, previous, t, q).map_err(annotate)?;
        out.push((t, gamma));
        previous = t;
    }
    Ok(out)
}
