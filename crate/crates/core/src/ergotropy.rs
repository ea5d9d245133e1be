//! Ergotropy of a qubit and its split into coherent and incoherent parts.
//!
//! All ergotropies are reported in units of ħΩ.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qubit::{bloch_radius, eigensystem, inner, DensityMatrix2, Ket};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ErgotropyError {
    #[error(
        "closed-form ergotropy needs theta in [0, π/2] (got {theta}); \
         use the passive-state operations for other angles"
    )]
    ThetaOutOfRange { theta: f64 },
    #[error("dephasing factor must lie in [0, 1] (got {0})")]
    FactorOutOfRange(f64),
    #[error("level splitting must be positive (got {0})")]
    InvalidSplitting(f64),
}

/// H = (Ω/2) σ_z with the first basis state as the excited level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian2 {
    pub omega: f64,
}

impl Default for Hamiltonian2 {
    fn default() -> Self {
        Self { omega: 1.0 }
    }
}

impl Hamiltonian2 {
    pub fn new(omega: f64) -> Result<Self, ErgotropyError> {
        if omega > 0.0 && omega.is_finite() {
            Ok(Self { omega })
        } else {
            Err(ErgotropyError::InvalidSplitting(omega))
        }
    }

    /// Energies in ascending order with their eigenkets.
    pub fn spectrum(&self) -> [(f64, Ket); 2] {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        [
            (-0.5 * self.omega, [zero, one]),
            (0.5 * self.omega, [one, zero]),
        ]
    }

    /// Tr(ρH)
    pub fn energy(&self, rho: &DensityMatrix2) -> f64 {
        0.5 * self.omega * (rho.p_e - rho.p_g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgotropySplit {
    pub total: f64,
    pub coherent: f64,
    pub incoherent: f64,
}

/// Eigenvalues sorted decreasingly, placed on energies sorted increasingly.
pub fn passive_state(rho: &DensityMatrix2, _h: &Hamiltonian2) -> DensityMatrix2 {
    let e = eigensystem(rho);
    DensityMatrix2 {
        p_e: e.lambda_minus,
        p_g: e.lambda_plus,
        coh: Complex64::new(0.0, 0.0),
    }
}

pub fn total_ergotropy(rho: &DensityMatrix2, h: &Hamiltonian2) -> f64 {
    let passive = passive_state(rho, h);
    ((h.energy(rho) - h.energy(&passive)) / h.omega).max(0.0)
}

/// Σₙₘ rₙ εₘ (|⟨rₙ|εₘ⟩|² − δₙₘ), in units of ħΩ.
pub fn spectral_sum_ergotropy(rho: &DensityMatrix2, h: &Hamiltonian2) -> f64 {
    let e = eigensystem(rho);
    let states = [(e.lambda_plus, e.psi_plus), (e.lambda_minus, e.psi_minus)];
    let levels = h.spectrum();
    let mut sum = 0.0;
    for (n, (r, ket)) in states.iter().enumerate() {
        for (m, (eps, level)) in levels.iter().enumerate() {
            let overlap = inner(ket, level).norm_sqr();
            let delta = if n == m { 1.0 } else { 0.0 };
            sum += r * eps * (overlap - delta);
        }
    }
    sum / h.omega
}

/// Ergotropy of the energy-dephased state: max(p_e − p_g, 0).
pub fn incoherent_ergotropy(rho: &DensityMatrix2, h: &Hamiltonian2) -> f64 {
    total_ergotropy(&rho.dephased(), h)
}

pub fn coherent_ergotropy(rho: &DensityMatrix2, h: &Hamiltonian2) -> f64 {
    (total_ergotropy(rho, h) - incoherent_ergotropy(rho, h)).max(0.0)
}

pub fn ergotropy_split(rho: &DensityMatrix2, h: &Hamiltonian2) -> ErgotropySplit {
    let total = total_ergotropy(rho, h);
    let incoherent = incoherent_ergotropy(rho, h);
    ErgotropySplit {
        total,
        coherent: (total - incoherent).max(0.0),
        incoherent,
    }
}

fn check_theta_factor(theta: f64, factor: f64) -> Result<(), ErgotropyError> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(ErgotropyError::ThetaOutOfRange { theta });
    }
    if !(0.0..=1.0).contains(&factor) {
        return Err(ErgotropyError::FactorOutOfRange(factor));
    }
    Ok(())
}

/// Closed forms for the dephased pure state with polar angle θ ≤ π/2.
pub fn ergotropy_split_theta(theta: f64, factor: f64) -> Result<ErgotropySplit, ErgotropyError> {
    check_theta_factor(theta, factor)?;
    let c = theta.cos();
    let r = bloch_radius(theta, factor);
    Ok(ErgotropySplit {
        total: 0.5 * (c + r),
        coherent: 0.5 * (r - c),
        incoherent: c,
    })
}

/// Both sides of the three qubit identities linking R, 𝓔 and 𝓔_c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgotropyIdentities {
    pub radius: f64,
    pub total_plus_coherent: f64,
    pub lhs_fsin: f64,
    pub rhs_fsin: f64,
    pub lhs_denominator: f64,
    pub rhs_denominator: f64,
}

impl ErgotropyIdentities {
    pub fn max_residual(&self) -> f64 {
        (self.radius - self.total_plus_coherent)
            .abs()
            .max((self.lhs_fsin - self.rhs_fsin).abs())
            .max((self.lhs_denominator - self.rhs_denominator).abs())
    }
}

pub fn ergotropy_identities(theta: f64, factor: f64) -> Result<ErgotropyIdentities, ErgotropyError> {
    let split = ergotropy_split_theta(theta, factor)?;
    let (s, c) = theta.sin_cos();
    let r = bloch_radius(theta, factor);
    let fs2 = factor * factor * s * s;
    let (e, ec) = (split.total, split.coherent);
    Ok(ErgotropyIdentities {
        radius: r,
        total_plus_coherent: e + ec,
        lhs_fsin: fs2,
        rhs_fsin: 4.0 * e * ec,
        lhs_denominator: (c + r).powi(2) + fs2,
        rhs_denominator: 4.0 * e * (e + ec),
    })
}
