//! Geometric and dynamic phases of the dephasing qubit.
//!
//! Every evaluator reports the geometric phase with one sign convention: the
//! signed value of −∫ Ω 𝓔_c/(2𝓔_c + 𝓔_i) dt, which is negative for
//! θ ∈ (0, π). [`PhaseResult::magnitude`] gives the plotted |Φ_g|.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::ergotropy::{ergotropy_split_theta, ErgotropyError};
use crate::quadrature::{integrate_with, QuadratureControls, QuadratureError};
use crate::qubit::{eigensystem, inner, DensityMatrix2, Ket, StateError};
use crate::spectra::{self, gamma_high_t, BathParams, SpectraError, SpectralModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("{what} must satisfy {constraint} (got {value})")]
    Domain {
        what: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error(
        "path too coarse: overlap phase {arg:.3} rad between samples {step} and {} exceeds π/4",
        step + 1
    )]
    Resolution { step: usize, arg: f64 },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("closed form needs a positive dephasing rate; for γ = 0 use the unitary phase nπ(1 − cos θ)")]
    ZeroRate,
    #[error("phase-rate ratio undefined for vanishing incoherent ergotropy (θ = π/2)")]
    RatioDomain,
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Ergotropy(#[from] ErgotropyError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

fn domain(what: &'static str, constraint: &'static str, value: f64) -> PhaseError {
    PhaseError::Domain {
        what,
        constraint,
        value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluator {
    Kinematic,
    ExactGp3,
    CompactErgotropy,
    ClosedOhmicHighT,
    WeakCouplingHighT,
    WeakCouplingZeroT,
}

impl Evaluator {
    pub const ALL: [Evaluator; 6] = [
        Self::Kinematic,
        Self::ExactGp3,
        Self::CompactErgotropy,
        Self::ClosedOhmicHighT,
        Self::WeakCouplingHighT,
        Self::WeakCouplingZeroT,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Kinematic => "kinematic",
            Self::ExactGp3 => "exact-gp3",
            Self::CompactErgotropy => "compact-ergotropy",
            Self::ClosedOhmicHighT => "closed-ohmic-high-t",
            Self::WeakCouplingHighT => "weak-coupling-high-t",
            Self::WeakCouplingZeroT => "weak-coupling-zero-t",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseResult {
    pub geometric: f64,
    pub dynamic: f64,
    pub evaluator: Evaluator,
    pub error_estimate: f64,
}

impl PhaseResult {
    pub fn magnitude(&self) -> f64 {
        self.geometric.abs()
    }

    pub fn total(&self) -> f64 {
        self.geometric + self.dynamic
    }
}

impl Serialize for PhaseResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            geometric: f64,
            dynamic: f64,
            magnitude: f64,
            evaluator: Evaluator,
            error_estimate: f64,
        }
        Repr {
            geometric: self.geometric,
            dynamic: self.dynamic,
            magnitude: self.magnitude(),
            evaluator: self.evaluator,
            error_estimate: self.error_estimate,
        }
        .serialize(serializer)
    }
}

/// Γ(t) sampled on an ascending grid and interpolated with a monotone
/// piecewise-cubic Hermite curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingTable {
    times: Vec<f64>,
    exponents: Vec<f64>,
    slopes: Vec<f64>,
}

impl DephasingTable {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self, PhaseError> {
        if samples.len() < 2 {
            return Err(PhaseError::InvalidPath(
                "a dephasing table needs at least two samples".into(),
            ));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(PhaseError::InvalidPath(
                "dephasing table times must be strictly ascending".into(),
            ));
        }
        let times: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let exponents: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let slopes = pchip_slopes(&times, &exponents);
        Ok(Self {
            times,
            exponents,
            slopes,
        })
    }

    /// Cubic Hermite table through `(t, Γ, dΓ/dt)` samples.
    pub fn with_slopes(samples: &[(f64, f64, f64)]) -> Result<Self, PhaseError> {
        let pairs: Vec<(f64, f64)> = samples.iter().map(|s| (s.0, s.1)).collect();
        let mut table = Self::new(&pairs)?;
        table.slopes = samples.iter().map(|s| s.2).collect();
        Ok(table)
    }

    /// Tabulates Γ and D on a graded grid over [0, t_max].
    ///
    /// Spacing is min(0.15 t, τ/16) after a first point at 10⁻²/ω_c, where ω_c
    /// is the bath frequency scale; with exact slopes the Hermite error is
    /// O(h⁴ Γ⁗), about 10⁻⁵ γ₀ for the ohmic bath.
    pub fn from_bath(
        model: &SpectralModel,
        bath: &BathParams,
        t_max: f64,
        q: &QuadratureControls,
    ) -> Result<Self, PhaseError> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(domain("table horizon", "> 0", t_max));
        }
        let max_step = PI / 8.0;
        let mut times = vec![0.0];
        let mut t = (1e-2 / model.frequency_scale()).min(0.5 * t_max);
        while t < t_max {
            times.push(t);
            t += (0.15 * t).min(max_step);
        }
        times.push(t_max);
        let samples = times
            .iter()
            .map(|&t| {
                Ok((
                    t,
                    spectra::decoherence_exponent(model, bath, t, q)?,
                    spectra::diffusion(model, bath, t, q)?,
                ))
            })
            .collect::<Result<Vec<_>, SpectraError>>()?;
        Self::with_slopes(&samples)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            times: self.times.clone(),
            exponents: self.exponents.iter().map(|g| g * factor).collect(),
            slopes: self.slopes.iter().map(|d| d * factor).collect(),
        }
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    pub fn exponent(&self, t: f64) -> Result<f64, PhaseError> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(domain("time", "inside the tabulated range", t));
        }
        let k = self.times.partition_point(|&x| x <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (self.exponents[k - 1], self.exponents[k]);
        let (d0, d1) = (self.slopes[k - 1], self.slopes[k]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Ok(h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1)
    }
}

// Fritsch–Carlson slopes.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let v = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if v * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && v.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            v
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Source of the dephasing factor F(t) along a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Dephasing {
    /// F ≡ 1.
    Unitary,
    /// F = e^{−rate·t}; the high-temperature ohmic bath.
    Exponential { rate: f64 },
    /// Γ(t) evaluated by frequency quadrature at every requested time.
    Quadrature {
        model: SpectralModel,
        bath: BathParams,
        controls: QuadratureControls,
    },
    Tabulated(DephasingTable),
}

impl Dephasing {
    /// F = e^{−γt} with γ = π γ₀ k_BT/(ħΩ), times in units of 1/Ω.
    pub fn high_t(gamma0: f64, kt_over_omega: f64) -> Self {
        Self::Exponential {
            rate: gamma_high_t(gamma0, kt_over_omega),
        }
    }

    pub fn exponent(&self, t: f64) -> Result<f64, PhaseError> {
        match self {
            Self::Unitary => Ok(0.0),
            Self::Exponential { rate } => Ok(rate * t),
            Self::Quadrature {
                model,
                bath,
                controls,
            } => Ok(spectra::decoherence_exponent(model, bath, t, controls)?),
            Self::Tabulated(table) => table.exponent(t),
        }
    }

    /// F(t), kept strictly positive so the evolved state stays well defined.
    pub fn factor(&self, t: f64) -> Result<f64, PhaseError> {
        Ok((-self.exponent(t)?).exp().max(f64::MIN_POSITIVE))
    }

    /// `(t, F)` over an ascending grid; quadrature sources use one cumulative pass.
    pub fn profile(&self, times: &[f64]) -> Result<Vec<(f64, f64)>, PhaseError> {
        match self {
            Self::Quadrature {
                model,
                bath,
                controls,
            } => Ok(spectra::dephasing_profile(model, bath, times, controls)?
                .into_iter()
                .map(|(t, f)| (t, f.max(f64::MIN_POSITIVE)))
                .collect()),
            _ => times.iter().map(|&t| Ok((t, self.factor(t)?))).collect(),
        }
    }
}

/// One quasi-cyclic run of n periods τ = 2π/Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRun {
    pub theta: f64,
    pub omega: f64,
    pub n_cycles: u32,
    pub dephasing: Dephasing,
    pub time_steps_per_cycle: usize,
    /// Controls for the time integrals of the phase.
    pub controls: QuadratureControls,
}

impl PhaseRun {
    pub fn new(theta: f64, n_cycles: u32, dephasing: Dephasing) -> Self {
        Self {
            theta,
            omega: 1.0,
            n_cycles,
            dephasing,
            time_steps_per_cycle: 1024,
            controls: QuadratureControls::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PhaseError> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(domain("theta", "in [0, π]", self.theta));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(domain("omega", "> 0", self.omega));
        }
        if self.n_cycles < 1 {
            return Err(domain("n_cycles", ">= 1", self.n_cycles as f64));
        }
        if self.time_steps_per_cycle < 64 {
            return Err(domain(
                "time_steps_per_cycle",
                ">= 64",
                self.time_steps_per_cycle as f64,
            ));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn end_time(&self) -> f64 {
        self.n_cycles as f64 * self.period()
    }

    /// Uniform grid of `n_cycles * time_steps_per_cycle + 1` times.
    pub fn time_grid(&self) -> Vec<f64> {
        let steps = self.n_cycles as usize * self.time_steps_per_cycle;
        let dt = self.end_time() / steps as f64;
        (0..=steps).map(|k| k as f64 * dt).collect()
    }
}

/// Φ_dyn = −∫₀ᵀ Tr(ρH) dt = −(Ω/2) cos θ · T; populations never change.
pub fn dynamic_phase(theta: f64, omega: f64, t_end: f64) -> f64 {
    -0.5 * omega * theta.cos() * t_end
}

fn gp3_rate(theta: f64, factor: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let fs2 = factor * factor * s * s;
    let r = (c * c + fs2).sqrt();
    let den = (c + r).powi(2) + fs2;
    if den > 0.0 {
        fs2 / den
    } else if c < 0.0 {
        1.0
    } else {
        // θ = π/2 with F underflowed: the F → 0 limit
        0.5
    }
}

fn compact_rate(theta: f64, factor: f64) -> Result<f64, PhaseError> {
    let e = ergotropy_split_theta(theta, factor)?;
    let den = 2.0 * e.coherent + e.incoherent;
    Ok(if den > 0.0 { e.coherent / den } else { 0.5 })
}

fn time_integral<F>(run: &PhaseRun, t_end: f64, rate: F) -> Result<(f64, f64), PhaseError>
where
    F: Fn(f64) -> Result<f64, PhaseError>,
{
    run.validate()?;
    if !(t_end >= 0.0) {
        return Err(domain("end time", ">= 0", t_end));
    }
    let panels = (t_end / run.period()).ceil().max(1.0) as usize;
    let r = integrate_with(
        |t| Ok::<f64, PhaseError>(rate(run.dephasing.factor(t)?)?),
        0.0,
        t_end,
        panels,
        &run.controls,
    )?;
    Ok((-run.omega * r.value, run.omega * r.error_estimate))
}

/// Quadrature of −Ω F² sin²θ / ([cos θ + R]² + F² sin²θ) up to `t_end`.
pub fn gp_exact_dephasing_until(run: &PhaseRun, t_end: f64) -> Result<PhaseResult, PhaseError> {
    let theta = run.theta;
    let (geometric, error_estimate) = time_integral(run, t_end, |f| Ok(gp3_rate(theta, f)))?;
    Ok(PhaseResult {
        geometric,
        dynamic: dynamic_phase(theta, run.omega, t_end),
        evaluator: Evaluator::ExactGp3,
        error_estimate,
    })
}

pub fn gp_exact_dephasing(run: &PhaseRun) -> Result<PhaseResult, PhaseError> {
    gp_exact_dephasing_until(run, run.end_time())
}

/// Quadrature of −Ω 𝓔_c / (2𝓔_c + 𝓔_i) up to `t_end`; θ ≤ π/2.
pub fn gp_compact_ergotropy_until(run: &PhaseRun, t_end: f64) -> Result<PhaseResult, PhaseError> {
    let theta = run.theta;
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(ErgotropyError::ThetaOutOfRange { theta }.into());
    }
    let (geometric, error_estimate) = time_integral(run, t_end, |f| compact_rate(theta, f))?;
    Ok(PhaseResult {
        geometric,
        dynamic: dynamic_phase(theta, run.omega, t_end),
        evaluator: Evaluator::CompactErgotropy,
        error_estimate,
    })
}

pub fn gp_compact_ergotropy(run: &PhaseRun) -> Result<PhaseResult, PhaseError> {
    gp_compact_ergotropy_until(run, run.end_time())
}

fn check_closed_inputs(theta: f64, gamma: f64, omega: f64) -> Result<(), PhaseError> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(ErgotropyError::ThetaOutOfRange { theta }.into());
    }
    if !(omega > 0.0) {
        return Err(domain("omega", "> 0", omega));
    }
    if gamma == 0.0 {
        return Err(PhaseError::ZeroRate);
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(domain("gamma", "> 0", gamma));
    }
    Ok(())
}

/// (Ω/2γ)(ln[2cos²(θ/2)] − ln[cos θ + √(cos²θ + sin²θ e^{−2γT})]), positive.
///
/// `gamma` is the dephasing rate in the same frequency units as `omega`.
pub fn closed_ohmic_high_t_value(
    theta: f64,
    gamma: f64,
    omega: f64,
    t_end: f64,
) -> Result<f64, PhaseError> {
    check_closed_inputs(theta, gamma, omega)?;
    let (s, c) = theta.sin_cos();
    let x = 2.0 * gamma * t_end;
    let prefactor = omega / (2.0 * gamma);
    if c == 0.0 {
        // ln 1 − ln e^{−x/2}
        return Ok(prefactor * 0.5 * x);
    }
    let decay = (-x).exp();
    let r = (c * c + s * s * decay).sqrt();
    // (1 + c)/(c + R) = 1 + (1 − R)/(c + R), 1 − R = sin²θ (1 − e^{−x})/(1 + R)
    let ratio_minus_one = s * s * (-(-x).exp_m1()) / ((1.0 + r) * (c + r));
    Ok(prefactor * ratio_minus_one.ln_1p())
}

/// The same closed form written with ergotropies: (Ω/2γ) ln[(1 + 𝓔_i)/(2𝓔)].
pub fn closed_ohmic_high_t_ergotropy_form(
    theta: f64,
    gamma: f64,
    omega: f64,
    t_end: f64,
) -> Result<f64, PhaseError> {
    check_closed_inputs(theta, gamma, omega)?;
    let f = (-gamma * t_end).exp();
    let e = ergotropy_split_theta(theta, f)?;
    Ok(omega / (2.0 * gamma) * ((1.0 + e.incoherent) / (2.0 * e.total)).ln())
}

/// Closed-form geometric phase for the high-temperature ohmic bath after
/// `n_cycles` periods, stored with the shared negative sign.
pub fn gp_closed_ohmic_high_t(
    theta: f64,
    gamma: f64,
    omega: f64,
    n_cycles: u32,
) -> Result<PhaseResult, PhaseError> {
    let t_end = n_cycles as f64 * 2.0 * PI / omega;
    let value = closed_ohmic_high_t_value(theta, gamma, omega, t_end)?;
    Ok(PhaseResult {
        geometric: -value,
        dynamic: dynamic_phase(theta, omega, t_end),
        evaluator: Evaluator::ClosedOhmicHighT,
        error_estimate: 4.0 * f64::EPSILON * value.abs().max(1.0),
    })
}

/// Berry phase nπ(1 − cos θ) of `n_cycles` unitary periods.
pub fn unitary_phase(theta: f64, n_cycles: f64) -> f64 {
    n_cycles * PI * (1.0 - theta.cos())
}

/// Per-cycle weak-coupling expansion at high temperature,
/// π(1 − cos θ) − π² γ₀ (k_BT/ħΩ) sin²θ cos θ.
pub fn gp_weak_coupling_high_t(theta: f64, gamma0: f64, kt_over_omega: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    unitary_phase(theta, 1.0) - PI * PI * gamma0 * kt_over_omega * s * s * c
}

/// The high-temperature expansion written with 𝓔_i = cos θ:
/// π(1 − 𝓔_i) − π² γ₀ (k_BT/ħΩ) 𝓔_i (1 − 𝓔_i²).
pub fn gp_weak_coupling_high_t_ergotropy_form(theta: f64, gamma0: f64, kt_over_omega: f64) -> f64 {
    let ei = theta.cos();
    PI * (1.0 - ei) - PI * PI * gamma0 * kt_over_omega * ei * (1.0 - ei * ei)
}

/// First-order Taylor expansion of the closed form in the dephasing rate
/// itself: π(1 − cos θ) − π² (γ/Ω) sin²θ cos θ.
pub fn gp_first_order_in_rate(theta: f64, gamma_over_omega: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    unitary_phase(theta, 1.0) - PI * PI * gamma_over_omega * s * s * c
}

/// Per-cycle zero-temperature expansion,
/// π(1 − 𝓔_i) − π² γ₀ ln(Λ/Ω) 𝓔_i (1 − 𝓔_i²).
pub fn gp_weak_coupling_zero_t(theta: f64, gamma0: f64, cutoff_over_omega: f64) -> f64 {
    if cutoff_over_omega < 10.0 {
        log::warn!(
            "zero-temperature expansion assumes Λ ≫ Ω; got Λ/Ω = {cutoff_over_omega}"
        );
    }
    let ei = theta.cos();
    PI * (1.0 - ei) - PI * PI * gamma0 * cutoff_over_omega.ln() * ei * (1.0 - ei * ei)
}

/// dΦ_g/dΦ_dyn written out term by term.
pub fn phase_rate_ratio(coherent: f64, incoherent: f64) -> Result<f64, PhaseError> {
    if !(coherent >= 0.0) {
        return Err(domain("coherent ergotropy", ">= 0", coherent));
    }
    if incoherent == 0.0 {
        return Err(PhaseError::RatioDomain);
    }
    if !(incoherent > 0.0) {
        return Err(domain("incoherent ergotropy", "> 0", incoherent));
    }
    let (ec, ei) = (coherent, incoherent);
    let a = (2.0 * ec + ei).powi(2) - ei * ei;
    let value = 2.0 / ei * a / (4.0 * (ec + ei).powi(2) + a);
    let simplified = phase_rate_ratio_simplified(ec, ei);
    debug_assert!(
        (value - simplified).abs() <= 1e-12 * simplified.abs().max(1.0),
        "ratio forms disagree: {value} vs {simplified}"
    );
    Ok(value)
}

/// 2𝓔_c / (𝓔_i (2𝓔_c + 𝓔_i)).
pub fn phase_rate_ratio_simplified(coherent: f64, incoherent: f64) -> f64 {
    2.0 * coherent / (incoherent * (2.0 * coherent + incoherent))
}

/// Small-angle slope F²θ²/2 of Φ_g against Φ_dyn.
pub fn small_angle_relation(theta: f64, factor: f64) -> f64 {
    0.5 * factor * factor * theta * theta
}

/// Which weak-coupling expansion a comparison uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum WeakCouplingBath {
    HighT { kt_over_omega: f64 },
    ZeroT { cutoff_over_omega: f64 },
}

/// Weak-coupling magnitude after `cycles` periods (not necessarily whole).
///
/// At high temperature Γ is linear in t, so the first-order correction grows
/// as n²; the zero-temperature expansion is only defined for one cycle.
pub fn weak_coupling_approximation(
    theta: f64,
    gamma0: f64,
    bath: WeakCouplingBath,
    cycles: f64,
) -> Result<f64, PhaseError> {
    let n = cycles;
    match bath {
        WeakCouplingBath::HighT { kt_over_omega } => {
            let per_cycle = gp_weak_coupling_high_t(theta, gamma0, kt_over_omega);
            let correction = per_cycle - unitary_phase(theta, 1.0);
            Ok(unitary_phase(theta, n) + n * n * correction)
        }
        WeakCouplingBath::ZeroT { cutoff_over_omega } => {
            if n != 1.0 {
                return Err(PhaseError::Unsupported(format!(
                    "gp_weak_coupling_zero_t: the zero-temperature expansion is per cycle \
                     (got {n} cycles)"
                )));
            }
            Ok(gp_weak_coupling_zero_t(theta, gamma0, cutoff_over_omega))
        }
    }
}

/// |Φ_exact| − Φ_approx for a caller-supplied exact dephasing source.
pub fn delta_phi_with(
    theta: f64,
    gamma0: f64,
    bath: WeakCouplingBath,
    dephasing: Dephasing,
    n_cycles: u32,
    controls: &QuadratureControls,
) -> Result<f64, PhaseError> {
    let approx = weak_coupling_approximation(theta, gamma0, bath, n_cycles as f64)?;
    let mut run = PhaseRun::new(theta, n_cycles, dephasing);
    run.controls = *controls;
    let exact = gp_exact_dephasing(&run)?;
    Ok(exact.magnitude() - approx)
}

/// |Φ_exact| − Φ_approx with the exact phase from the full bath pipeline.
pub fn delta_phi_exact_vs_approx(
    theta: f64,
    gamma0: f64,
    bath: WeakCouplingBath,
    n_cycles: u32,
    controls: &QuadratureControls,
) -> Result<f64, PhaseError> {
    let dephasing = match bath {
        WeakCouplingBath::HighT { kt_over_omega } => Dephasing::high_t(gamma0, kt_over_omega),
        WeakCouplingBath::ZeroT { cutoff_over_omega } => Dephasing::Quadrature {
            model: SpectralModel::ohmic(gamma0, cutoff_over_omega)?,
            bath: BathParams::ZeroT,
            controls: *controls,
        },
    };
    delta_phi_with(theta, gamma0, bath, dephasing, n_cycles, controls)
}

/// Σ arg⟨ψᵢ|ψᵢ₊₁⟩ − arg⟨ψ₀|ψ_N⟩ negated, i.e. the Pancharatnam phase
/// arg(⟨ψ₀|ψ_N⟩ Πᵢ⟨ψᵢ₊₁|ψᵢ⟩) without wrapping the accumulated part.
pub fn pancharatnam_phase(kets: &[Ket]) -> Result<f64, PhaseError> {
    if kets.len() < 2 {
        return Err(PhaseError::InvalidPath("need at least two states".into()));
    }
    let mut connection = 0.0;
    for (step, w) in kets.windows(2).enumerate() {
        let overlap = inner(&w[0], &w[1]);
        if overlap.norm() < 1e-8 {
            return Err(PhaseError::Resolution {
                step,
                arg: f64::NAN,
            });
        }
        let arg = overlap.arg();
        if arg.abs() > FRAC_PI_4 {
            return Err(PhaseError::Resolution { step, arg });
        }
        connection += arg;
    }
    let closure = inner(&kets[0], &kets[kets.len() - 1]);
    let closure_arg = if closure.norm() > 0.0 { closure.arg() } else { 0.0 };
    Ok(closure_arg - connection)
}

/// Pancharatnam phase with one Richardson step against the stride-2
/// subsequence. Returns `(phase, error_estimate)`.
pub fn kinematic_phase_from_kets(kets: &[Ket]) -> Result<(f64, f64), PhaseError> {
    let steps = kets.len().saturating_sub(1);
    if steps < 2 || steps % 2 != 0 {
        return Err(PhaseError::InvalidPath(format!(
            "kinematic evaluator needs an even number (>= 2) of steps, got {steps}"
        )));
    }
    let fine = pancharatnam_phase(kets)?;
    let coarse: Vec<Ket> = kets.iter().step_by(2).copied().collect();
    let coarse = pancharatnam_phase(&coarse)?;
    let correction = (fine - coarse) / 3.0;
    Ok((fine + correction, correction.abs()))
}

/// Kinematic geometric phase of a sampled path of density matrices.
///
/// For a pure initial state only the λ₊ branch carries weight; otherwise the
/// two branches are summed with weights √(λₖ(0) λₖ(T)).
pub fn gp_kinematic(
    path: &[(f64, DensityMatrix2)],
    omega: f64,
) -> Result<PhaseResult, PhaseError> {
    if path.len() < 3 {
        return Err(PhaseError::InvalidPath("need at least three samples".into()));
    }
    if path.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(PhaseError::InvalidPath("times must be strictly ascending".into()));
    }
    let systems: Vec<_> = path.iter().map(|(_, rho)| eigensystem(rho)).collect();
    let plus: Vec<Ket> = systems.iter().map(|e| e.psi_plus).collect();
    let (phase_plus, err_plus) = kinematic_phase_from_kets(&plus)?;

    let first = systems[0];
    let last = systems[systems.len() - 1];
    let (geometric, error_estimate) = if first.lambda_minus <= 1e-12 {
        (phase_plus, err_plus)
    } else {
        let minus: Vec<Ket> = systems.iter().map(|e| e.psi_minus).collect();
        let (phase_minus, err_minus) = kinematic_phase_from_kets(&minus)?;
        let wp = (first.lambda_plus * last.lambda_plus).sqrt()
            * inner(&plus[0], &plus[plus.len() - 1]).norm();
        let wm = (first.lambda_minus * last.lambda_minus).sqrt()
            * inner(&minus[0], &minus[minus.len() - 1]).norm();
        let sum = num_complex::Complex64::from_polar(wp, phase_plus)
            + num_complex::Complex64::from_polar(wm, phase_minus);
        (sum.arg(), err_plus.max(err_minus))
    };

    // −∫ Tr(ρH) dt by the trapezoid rule; exact for constant populations.
    let dynamic = -path
        .windows(2)
        .map(|w| {
            let e0 = 0.5 * omega * (w[0].1.p_e - w[0].1.p_g);
            let e1 = 0.5 * omega * (w[1].1.p_e - w[1].1.p_g);
            0.5 * (e0 + e1) * (w[1].0 - w[0].0)
        })
        .sum::<f64>();

    Ok(PhaseResult {
        geometric,
        dynamic,
        evaluator: Evaluator::Kinematic,
        error_estimate,
    })
}

/// Builds the state path of a run and evaluates [`gp_kinematic`] on it.
pub fn gp_kinematic_run(run: &PhaseRun) -> Result<PhaseResult, PhaseError> {
    run.validate()?;
    kinematic_on_grid(run.theta, run.omega, &run.dephasing, &run.time_grid())
}

/// [`gp_kinematic`] on an arbitrary grid, bypassing the run's resolution floor.
pub fn kinematic_on_grid(
    theta: f64,
    omega: f64,
    dephasing: &Dephasing,
    times: &[f64],
) -> Result<PhaseResult, PhaseError> {
    let s = crate::qubit::InitialState::new(theta)?;
    let profile = dephasing.profile(times)?;
    let path = crate::qubit::state_path(&s, omega, &profile)?;
    gp_kinematic(&path, omega)
}

/// Dispatches a run to one evaluator.
///
/// The closed-form and weak-coupling evaluators need an exponential
/// (high-temperature) dephasing source; the zero-temperature expansion takes
/// the bath parameters from a [`Dephasing::Quadrature`] ohmic model.
pub fn evaluate(run: &PhaseRun, evaluator: Evaluator) -> Result<PhaseResult, PhaseError> {
    let t_end = run.end_time();
    let dynamic = dynamic_phase(run.theta, run.omega, t_end);
    match evaluator {
        Evaluator::Kinematic => gp_kinematic_run(run),
        Evaluator::ExactGp3 => gp_exact_dephasing(run),
        Evaluator::CompactErgotropy => gp_compact_ergotropy(run),
        Evaluator::ClosedOhmicHighT => match run.dephasing {
            Dephasing::Exponential { rate } => {
                gp_closed_ohmic_high_t(run.theta, rate, run.omega, run.n_cycles)
            }
            Dephasing::Unitary => Ok(PhaseResult {
                geometric: -unitary_phase(run.theta, run.n_cycles as f64),
                dynamic,
                evaluator,
                error_estimate: 0.0,
            }),
            _ => Err(PhaseError::Unsupported(
                "gp_closed_ohmic_high_t needs the high-temperature exponential dephasing".into(),
            )),
        },
        Evaluator::WeakCouplingHighT | Evaluator::WeakCouplingZeroT => Err(
            PhaseError::Unsupported(format!(
                "{} takes bath parameters directly; call weak_coupling_approximation",
                evaluator.name()
            )),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn high_t_run(theta: f64, rate: f64, n: u32) -> PhaseRun {
        PhaseRun::new(theta, n, Dephasing::Exponential { rate })
    }

    #[test]
    fn unitary_limit_every_evaluator() {
        for theta in [PI / 8.0, PI / 4.0, PI / 3.0, PI / 2.0] {
            for n in [1u32, 5] {
                let berry = unitary_phase(theta, n as f64);
                let run = PhaseRun::new(theta, n, Dephasing::Unitary);
                assert!((gp_exact_dephasing(&run).unwrap().geometric + berry).abs() < 1e-9);
                assert!((gp_compact_ergotropy(&run).unwrap().geometric + berry).abs() < 1e-9);
                let mut fine = run.clone();
                fine.time_steps_per_cycle = 4096;
                let k = gp_kinematic_run(&fine).unwrap();
                assert!((k.magnitude() - berry).abs() < 1e-9, "θ={theta} n={n}: {}", k.geometric);
                let c = gp_closed_ohmic_high_t(theta, 1e-9, 1.0, n).unwrap();
                assert!((c.magnitude() - berry).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn kinematic_sign_and_half_turn() {
        let run = PhaseRun::new(PI / 2.0, 1, Dephasing::Unitary);
        let k = gp_kinematic_run(&run).unwrap();
        assert_relative_eq!(k.geometric, -PI, epsilon = 1e-12);
    }

    #[test]
    fn exact_examples() {
        let run = high_t_run(0.0, 0.05, 1);
        assert_eq!(gp_exact_dephasing(&run).unwrap().geometric, 0.0);
        let run = high_t_run(PI / 3.0, 0.05, 1);
        let exact = gp_exact_dephasing(&run).unwrap();
        let closed = gp_closed_ohmic_high_t(PI / 3.0, 0.05, 1.0, 1).unwrap();
        assert!((exact.geometric - closed.geometric).abs() < 1e-9);
        assert!(exact.geometric < 0.0);
        assert!(exact.magnitude() < PI / 2.0);
    }

    #[test]
    fn compact_examples() {
        let r = gp_compact_ergotropy(&high_t_run(PI / 2.0, 0.05, 1)).unwrap();
        assert_relative_eq!(r.geometric, -PI, epsilon = 1e-12);
        let r = gp_compact_ergotropy(&PhaseRun::new(PI / 3.0, 1, Dephasing::Unitary)).unwrap();
        assert_relative_eq!(r.geometric, -PI / 2.0, epsilon = 1e-12);
        assert!(gp_compact_ergotropy(&high_t_run(2.0, 0.05, 1)).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let small = gp_closed_ohmic_high_t(PI / 3.0, 1e-8, 1.0, 1).unwrap();
        assert!((small.magnitude() - PI / 2.0).abs() < 1e-6);
        for g in [0.01, 0.3, 0.5] {
            assert_eq!(gp_closed_ohmic_high_t(0.0, g, 1.0, 3).unwrap().geometric, 0.0);
            // θ = π/2 accumulates exactly π per cycle for any rate
            assert_relative_eq!(
                gp_closed_ohmic_high_t(PI / 2.0, g, 1.0, 2).unwrap().magnitude(),
                2.0 * PI,
                epsilon = 1e-12
            );
        }
        assert_eq!(gp_closed_ohmic_high_t(1.0, 0.0, 1.0, 1), Err(PhaseError::ZeroRate));
        assert!(gp_closed_ohmic_high_t(1.0, -0.1, 1.0, 1).is_err());
        assert!(gp_closed_ohmic_high_t(2.0, 0.1, 1.0, 1).is_err());
    }

    #[test]
    fn closed_form_two_expressions_agree() {
        for theta in [0.05, 0.4, 1.0, 1.5] {
            for g in [1e-3, 0.05, 0.4] {
                for t in [1.0, 2.0 * PI, 40.0] {
                    let a = closed_ohmic_high_t_value(theta, g, 1.0, t).unwrap();
                    let b = closed_ohmic_high_t_ergotropy_form(theta, g, 1.0, t).unwrap();
                    assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{theta} {g} {t}: {a} {b}");
                }
            }
        }
    }

    #[test]
    fn weak_coupling_examples() {
        assert_relative_eq!(gp_weak_coupling_high_t(PI / 2.0, 0.3, 2.0), PI, epsilon = 1e-12);
        assert_eq!(gp_weak_coupling_high_t(0.0, 0.3, 2.0), 0.0);
        assert_relative_eq!(gp_weak_coupling_zero_t(PI / 2.0, 0.3, 100.0), PI, epsilon = 1e-12);
        for th in [0.2, 0.9, 1.3] {
            assert_relative_eq!(
                gp_weak_coupling_zero_t(th, 0.0, 100.0),
                PI * (1.0 - th.cos()),
                epsilon = 1e-14
            );
            assert_relative_eq!(
                gp_weak_coupling_high_t(th, 0.02, 1.5),
                gp_weak_coupling_high_t_ergotropy_form(th, 0.02, 1.5),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn closed_form_first_order_coefficient() {
        // The closed form's residual against its own first-order expansion
        // is quadratic in the rate.
        let theta = PI / 3.0;
        let res = |g: f64| {
            (closed_ohmic_high_t_value(theta, g, 1.0, 2.0 * PI).unwrap()
                - gp_first_order_in_rate(theta, g))
            .abs()
        };
        let ratio = res(2e-3) / res(1e-3);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn high_t_expansion_coefficient_differs_by_pi() {
        // With γ = π γ₀ kT the printed expansion carries π² γ₀ kT where the
        // closed form's slope is π² γ; the first-order residual is linear.
        let (theta, kt) = (PI / 3.0, 1.0);
        let residual = |g0: f64| {
            let closed = closed_ohmic_high_t_value(theta, gamma_high_t(g0, kt), 1.0, 2.0 * PI).unwrap();
            closed - gp_weak_coupling_high_t(theta, g0, kt)
        };
        let g0 = 1e-5;
        let (s, c) = theta.sin_cos();
        let expected = -(PI - 1.0) * PI * PI * g0 * kt * s * s * c;
        assert_relative_eq!(residual(g0), expected, max_relative = 1e-3);
    }

    #[test]
    fn dynamic_phase_examples() {
        assert!(dynamic_phase(PI / 2.0, 1.0, 10.0).abs() < 1e-15);
        assert_relative_eq!(dynamic_phase(0.0, 1.0, 2.0 * PI), -PI, epsilon = 1e-15);
        assert_relative_eq!(
            dynamic_phase(0.7, 1.0, 6.0),
            2.0 * dynamic_phase(0.7, 1.0, 3.0),
            epsilon = 1e-15
        );
        assert_relative_eq!(dynamic_phase(0.7, 1.0, 3.0), -dynamic_phase(PI - 0.7, 1.0, 3.0), epsilon = 1e-15);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(phase_rate_ratio(0.0, 0.5).unwrap(), 0.0);
        assert_relative_eq!(phase_rate_ratio(0.25, 0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(phase_rate_ratio(0.25, 0.0), Err(PhaseError::RatioDomain));
        assert!(phase_rate_ratio(-0.1, 0.5).is_err());
    }

    #[test]
    fn small_angle_examples() {
        assert_eq!(small_angle_relation(0.0, 1.0), 0.0);
        assert_eq!(small_angle_relation(0.3, 0.0), 0.0);
        // Exact unitary ratio (1 − cos θ)/cos θ versus θ²/2: the relative
        // deviation shrinks as θ², about 6.9 % at π/8 and 1.6 % at π/16.
        let dev = |theta: f64| {
            let e = ergotropy_split_theta(theta, 1.0).unwrap();
            phase_rate_ratio(e.coherent, e.incoherent).unwrap() / small_angle_relation(theta, 1.0) - 1.0
        };
        assert!((dev(PI / 8.0) - 0.0686).abs() < 1e-3, "{}", dev(PI / 8.0));
        assert!((dev(PI / 16.0) - 0.0163).abs() < 1e-3, "{}", dev(PI / 16.0));
        assert!((dev(PI / 8.0) / dev(PI / 16.0) - 4.0).abs() < 0.3);
    }

    #[test]
    fn delta_phi_examples() {
        let q = QuadratureControls::default();
        let hi = WeakCouplingBath::HighT { kt_over_omega: 1.0 };
        for th in [0.3, PI / 3.0] {
            assert!(delta_phi_exact_vs_approx(th, 0.0, hi, 1, &q).unwrap().abs() < 1e-12);
        }
        let d1 = delta_phi_exact_vs_approx(PI / 2.0, 0.02, hi, 1, &q).unwrap();
        assert!(d1.abs() < 1e-9);
        let a = delta_phi_exact_vs_approx(PI / 3.0, 0.02, hi, 1, &q).unwrap().abs();
        let b = delta_phi_exact_vs_approx(PI / 3.0, 0.01, hi, 1, &q).unwrap().abs();
        assert!(b < a);
        assert!(delta_phi_exact_vs_approx(
            0.5,
            0.01,
            WeakCouplingBath::ZeroT { cutoff_over_omega: 100.0 },
            2,
            &q
        )
        .is_err());
    }

    #[test]
    fn monotone_suppression_in_rate() {
        let theta = 0.8;
        let mut last = f64::INFINITY;
        for g in [0.0, 0.01, 0.05, 0.2, 1.0] {
            let run = if g == 0.0 {
                PhaseRun::new(theta, 1, Dephasing::Unitary)
            } else {
                high_t_run(theta, g, 1)
            };
            let m = gp_exact_dephasing(&run).unwrap().magnitude();
            assert!(m <= last);
            last = m;
        }
    }

    #[test]
    fn complement_angle_in_unitary_limit() {
        for theta in [0.3, 1.0, 1.4] {
            for n in [1u32, 3] {
                let a = gp_exact_dephasing(&PhaseRun::new(theta, n, Dephasing::Unitary)).unwrap();
                let b = gp_exact_dephasing(&PhaseRun::new(PI - theta, n, Dephasing::Unitary)).unwrap();
                assert_relative_eq!(b.magnitude(), 2.0 * PI * n as f64 - a.magnitude(), epsilon = 1e-9);
                assert_relative_eq!(b.dynamic, -a.dynamic, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn kinematic_resolution_errors() {
        let n = 4;
        let kets: Vec<Ket> = (0..=n)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n as f64;
                [
                    num_complex::Complex64::new((0.5f64).cos(), 0.0),
                    num_complex::Complex64::from_polar((0.5f64).sin() * 1.0, phi),
                ]
            })
            .collect();
        let _ = pancharatnam_phase(&kets).unwrap();
        let wide: Vec<Ket> = kets.iter().map(|k| [k[0] * 0.0 + num_complex::Complex64::new(0.1, 0.0), k[1] / k[1].norm()]).collect();
        assert!(matches!(pancharatnam_phase(&wide), Err(PhaseError::Resolution { .. })));
        assert!(matches!(
            kinematic_phase_from_kets(&kets[..4]),
            Err(PhaseError::InvalidPath(_))
        ));
    }

    #[test]
    fn mixed_initial_state_uses_both_branches() {
        let n = 256;
        let path: Vec<(f64, DensityMatrix2)> = (0..=n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                let coh = num_complex::Complex64::from_polar(0.3, -t);
                (t, DensityMatrix2::new(0.6, coh).unwrap())
            })
            .collect();
        let r = gp_kinematic(&path, 1.0).unwrap();
        assert!(r.geometric.is_finite());
        assert!(r.geometric.abs() <= PI);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn compact_equals_exact(theta in 0.0..=FRAC_PI_2, rate in 0.0f64..0.5, n in 1u32..4) {
            let run = if rate == 0.0 {
                PhaseRun::new(theta, n, Dephasing::Unitary)
            } else {
                high_t_run(theta, rate, n)
            };
            let a = gp_exact_dephasing(&run).unwrap().geometric;
            let b = gp_compact_ergotropy(&run).unwrap().geometric;
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn pancharatnam_is_gauge_invariant(theta in 0.2f64..1.5, rate in 0.0f64..0.2, seed in 0u64..1000) {
            let run = high_t_run(theta, rate.max(1e-6), 1);
            let grid: Vec<f64> = (0..=256).map(|k| 2.0 * PI * k as f64 / 256.0).collect();
            let s = crate::qubit::InitialState::new(theta).unwrap();
            let path = crate::qubit::state_path(&s, 1.0, &run.dephasing.profile(&grid).unwrap()).unwrap();
            let kets: Vec<Ket> = path.iter().map(|(_, r)| eigensystem(r).psi_plus).collect();
            let base = kinematic_phase_from_kets(&kets).unwrap().0;
            let twisted: Vec<Ket> = kets
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let chi = (seed as f64 * 0.37 + k as f64 * 0.011).sin() * 0.6;
                    let ph = num_complex::Complex64::from_polar(1.0, chi);
                    [v[0] * ph, v[1] * ph]
                })
                .collect();
            let other = kinematic_phase_from_kets(&twisted).unwrap().0;
            prop_assert!((base - other).abs() < 1e-10);
        }
    }
}
