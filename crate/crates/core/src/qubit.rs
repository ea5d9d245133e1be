//! Qubit states under pure dephasing.
//!
//! Basis order is `[excited, ground]`: index 0 is the higher-energy level,
//! so that the state cos(θ/2)|e⟩ + sin(θ/2)|g⟩ has energy (Ω/2) cos θ.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Ket = [Complex64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("{what} must satisfy {constraint} (got {value})")]
    Domain {
        what: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("not a density matrix: {0}")]
    NotPhysical(String),
}

const POSITIVITY_SLACK: f64 = 1e-12;

/// 2×2 Hermitian, unit-trace state. Only ρ_eg is stored; ρ_ge is its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix2 {
    pub p_e: f64,
    pub p_g: f64,
    pub coh: Complex64,
}

impl DensityMatrix2 {
    pub fn new(p_e: f64, coh: Complex64) -> Result<Self, StateError> {
        if !(0.0..=1.0).contains(&p_e) {
            return Err(StateError::NotPhysical(format!(
                "population {p_e} outside [0, 1]"
            )));
        }
        let p_g = 1.0 - p_e;
        if coh.norm_sqr() > p_e * p_g + POSITIVITY_SLACK {
            return Err(StateError::NotPhysical(format!(
                "|coherence|² = {} exceeds p_e p_g = {}",
                coh.norm_sqr(),
                p_e * p_g
            )));
        }
        Ok(Self { p_e, p_g, coh })
    }

    pub fn diagonal(p_e: f64) -> Result<Self, StateError> {
        Self::new(p_e, Complex64::new(0.0, 0.0))
    }

    /// |ψ⟩⟨ψ| for a normalised ket.
    pub fn from_pure(psi: &Ket) -> Self {
        let norm = psi[0].norm_sqr() + psi[1].norm_sqr();
        let p_e = psi[0].norm_sqr() / norm;
        Self {
            p_e,
            p_g: 1.0 - p_e,
            coh: psi[0] * psi[1].conj() / norm,
        }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.p_e, 0.0), self.coh],
            [self.coh.conj(), Complex64::new(self.p_g, 0.0)],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.p_e + self.p_g
    }

    pub fn purity(&self) -> f64 {
        self.p_e * self.p_e + self.p_g * self.p_g + 2.0 * self.coh.norm_sqr()
    }

    /// (x, y, z) with z = p_e − p_g.
    pub fn bloch_vector(&self) -> [f64; 3] {
        [2.0 * self.coh.re, -2.0 * self.coh.im, self.p_e - self.p_g]
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol
            && self.p_e >= -tol
            && self.p_g >= -tol
            && self.coh.norm_sqr() <= self.p_e * self.p_g + tol
    }

    /// Removes all coherence in the energy basis.
    pub fn dephased(&self) -> Self {
        Self {
            coh: Complex64::new(0.0, 0.0),
            ..*self
        }
    }
}

/// Pure initial state cos(θ/2)|e⟩ + e^{iφ} sin(θ/2)|g⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

impl InitialState {
    pub fn new(theta: f64) -> Result<Self, StateError> {
        Self::with_phase(theta, 0.0)
    }

    pub fn with_phase(theta: f64, phi: f64) -> Result<Self, StateError> {
        let s = Self { theta, phi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), StateError> {
        if (0.0..=PI).contains(&self.theta) {
            Ok(())
        } else {
            Err(StateError::Domain {
                what: "theta",
                constraint: "in [0, π]",
                value: self.theta,
            })
        }
    }
}

pub fn initial_state(s: &InitialState) -> Result<DensityMatrix2, StateError> {
    s.validate()?;
    let (sh, ch) = (0.5 * s.theta).sin_cos();
    Ok(DensityMatrix2 {
        p_e: ch * ch,
        p_g: sh * sh,
        coh: Complex64::from_polar(ch * sh, -s.phi),
    })
}

/// ρ(t): populations fixed, ρ_eg(t) = ρ_eg(0) e^{−iΩt} F.
pub fn evolve_dephasing(
    rho0: &DensityMatrix2,
    omega: f64,
    factor: f64,
    t: f64,
) -> Result<DensityMatrix2, StateError> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(StateError::Domain {
            what: "dephasing factor",
            constraint: "in (0, 1]",
            value: factor,
        });
    }
    if !(t >= 0.0) {
        return Err(StateError::Domain {
            what: "time",
            constraint: ">= 0",
            value: t,
        });
    }
    Ok(DensityMatrix2 {
        coh: rho0.coh * Complex64::from_polar(factor, -omega * t),
        ..*rho0
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem2 {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub psi_plus: Ket,
    pub psi_minus: Ket,
}

/// Rotates a ket so its first non-negligible component is real and positive.
pub fn fix_gauge(mut v: Ket) -> Ket {
    let pivot = if v[0].norm() > 1e-300 { v[0] } else { v[1] };
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v[0] *= phase;
        v[1] *= phase;
    }
    v
}

fn normalize(v: Ket) -> Ket {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

/// Closed-form eigendecomposition, λ± = ½(1 ± √((p_e − p_g)² + 4|ρ_eg|²)).
pub fn eigensystem(rho: &DensityMatrix2) -> EigenSystem2 {
    let dz = rho.p_e - rho.p_g;
    let gap = (dz * dz + 4.0 * rho.coh.norm_sqr()).sqrt();
    let trace = rho.trace();
    let lambda_plus = 0.5 * (trace + gap);
    let lambda_minus = 0.5 * (trace - gap);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);

    let psi_plus = if rho.coh.norm() == 0.0 {
        // Diagonal (or degenerate): pick the basis vector of the larger population.
        if rho.p_g > rho.p_e {
            [zero, one]
        } else {
            [one, zero]
        }
    } else {
        // Two equivalent null vectors of (ρ − λ₊); use the better conditioned one.
        let a: Ket = [rho.coh, Complex64::new(lambda_plus - rho.p_e, 0.0)];
        let b: Ket = [Complex64::new(lambda_plus - rho.p_g, 0.0), rho.coh.conj()];
        let na = a[0].norm_sqr() + a[1].norm_sqr();
        let nb = b[0].norm_sqr() + b[1].norm_sqr();
        normalize(if na >= nb { a } else { b })
    };
    let psi_plus = fix_gauge(psi_plus);
    let psi_minus = fix_gauge([-psi_plus[1].conj(), psi_plus[0].conj()]);
    EigenSystem2 {
        lambda_plus,
        lambda_minus,
        psi_plus,
        psi_minus,
    }
}

/// Norm of the Bloch vector, R = √(cos²θ + F² sin²θ).
pub fn bloch_radius(theta: f64, factor: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    (c * c + factor * factor * s * s).sqrt()
}

/// Applies [`evolve_dephasing`] to each `(t, F)` sample of a profile.
pub fn state_path(
    s: &InitialState,
    omega: f64,
    profile: &[(f64, f64)],
) -> Result<Vec<(f64, DensityMatrix2)>, StateError> {
    let rho0 = initial_state(s)?;
    profile
        .iter()
        .map(|&(t, f)| Ok((t, evolve_dephasing(&rho0, omega, f, t)?)))
        .collect()
}

pub fn inner(a: &Ket, b: &Ket) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn initial_state_examples() {
        let r = initial_state(&InitialState::new(0.0).unwrap()).unwrap();
        assert_eq!((r.p_e, r.p_g, r.coh), (1.0, 0.0, c(0.0, 0.0)));

        let r = initial_state(&InitialState::new(PI / 2.0).unwrap()).unwrap();
        assert_relative_eq!(r.p_e, 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.p_g, 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.coh.re, 0.5, epsilon = 1e-15);

        let r = initial_state(&InitialState::new(PI / 3.0).unwrap()).unwrap();
        assert_relative_eq!(r.p_e, 0.75, epsilon = 1e-15);
        assert_relative_eq!(r.p_g, 0.25, epsilon = 1e-15);
        assert_relative_eq!(r.coh.re, 3f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_eq!(r.coh.im, 0.0);

        assert!(InitialState::new(-0.1).is_err());
        assert!(InitialState::new(PI + 1e-9).is_err());
    }

    #[test]
    fn evolution_examples() {
        let rho0 = initial_state(&InitialState::new(PI / 3.0).unwrap()).unwrap();
        assert_eq!(evolve_dephasing(&rho0, 1.0, 1.0, 0.0).unwrap(), rho0);

        let rho0 = initial_state(&InitialState::new(PI / 2.0).unwrap()).unwrap();
        let r = evolve_dephasing(&rho0, 1.0, 0.5, PI).unwrap();
        assert_relative_eq!(r.coh.re, -0.25, epsilon = 1e-15);
        assert!(r.coh.im.abs() < 1e-15);
        assert_eq!((r.p_e, r.p_g), (rho0.p_e, rho0.p_g));

        let r = evolve_dephasing(&rho0, 1.0, 1e-300, 3.0).unwrap();
        assert!(r.coh.norm() < 1e-299);

        assert!(evolve_dephasing(&rho0, 1.0, 0.0, 1.0).is_err());
        assert!(evolve_dephasing(&rho0, 1.0, 1.5, 1.0).is_err());
        assert!(evolve_dephasing(&rho0, 1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn eigensystem_degenerate_and_pure() {
        let mixed = DensityMatrix2::diagonal(0.5).unwrap();
        let e = eigensystem(&mixed);
        assert_eq!(e.lambda_plus, 0.5);
        assert_eq!(e.lambda_minus, 0.5);
        assert_eq!(e.psi_plus, [c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(e.psi_minus, [c(0.0, 0.0), c(1.0, 0.0)]);

        let pure = initial_state(&InitialState::new(PI / 3.0).unwrap()).unwrap();
        let e = eigensystem(&pure);
        assert_relative_eq!(e.lambda_plus, 1.0, epsilon = 1e-15);
        assert!(e.lambda_minus.abs() < 1e-15);
        assert_relative_eq!(e.psi_plus[0].re, (PI / 6.0).cos(), epsilon = 1e-15);
        assert_relative_eq!(e.psi_plus[1].re, (PI / 6.0).sin(), epsilon = 1e-15);
        assert_eq!(e.psi_plus[0].im, 0.0);
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial() {
        let theta = PI / 3.0;
        let f = (-0.1 * PI).exp();
        let rho0 = initial_state(&InitialState::new(theta).unwrap()).unwrap();
        let rho = evolve_dephasing(&rho0, 1.0, f, 0.7).unwrap();
        // λ² − tr λ + det = 0 solved with the stable quadratic formula
        let tr = rho.p_e + rho.p_g;
        let det = rho.p_e * rho.p_g - rho.coh.norm_sqr();
        let disc = (tr * tr - 4.0 * det).sqrt();
        let big = 0.5 * (tr + disc);
        let small = det / big;
        let e = eigensystem(&rho);
        assert!((e.lambda_plus - big).abs() < 1e-12);
        assert!((e.lambda_minus - small).abs() < 1e-12);
        let expected = 0.5 * (1.0 + (theta.cos().powi(2) + f * f * theta.sin().powi(2)).sqrt());
        assert!((e.lambda_plus - expected).abs() < 1e-12);
    }

    #[test]
    fn psi_plus_matches_textbook_form() {
        // ((ρ_gg − λ₊)|e⟩ − ρ_ge|g⟩) up to normalisation and a global phase
        let rho0 = initial_state(&InitialState::new(1.1).unwrap()).unwrap();
        let rho = evolve_dephasing(&rho0, 1.0, 0.6, 2.4).unwrap();
        let e = eigensystem(&rho);
        let v = normalize([
            c(rho.p_g - e.lambda_plus, 0.0),
            -rho.coh.conj(),
        ]);
        assert_relative_eq!(inner(&v, &e.psi_plus).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bloch_radius_examples() {
        for th in [0.0, 0.4, PI / 2.0, 2.5] {
            assert_relative_eq!(bloch_radius(th, 1.0), 1.0, epsilon = 1e-15);
        }
        assert!(bloch_radius(PI / 2.0, 0.0) < 1e-16);
        assert!((bloch_radius(PI / 3.0, 0.7304) - 0.80629).abs() < 1e-5);
        assert_relative_eq!(bloch_radius(0.0, 0.3), 1.0);
        assert_relative_eq!(bloch_radius(PI, 0.3), 1.0);
    }

    #[test]
    fn path_examples() {
        let s = InitialState::new(PI / 3.0).unwrap();
        let p = state_path(&s, 1.0, &[(0.0, 1.0)]).unwrap();
        assert_eq!(p, vec![(0.0, initial_state(&s).unwrap())]);

        let n = 64;
        let profile: Vec<(f64, f64)> =
            (0..=n).map(|k| (2.0 * PI * k as f64 / n as f64, 1.0)).collect();
        let p = state_path(&s, 1.0, &profile).unwrap();
        // phase winds once, unwrapped over the cycle
        let mut total = 0.0;
        for w in p.windows(2) {
            total += (w[1].1.coh / w[0].1.coh).arg();
        }
        assert_relative_eq!(total, -2.0 * PI, epsilon = 1e-12);
        assert!(p.iter().all(|(_, r)| r.p_e == p[0].1.p_e && r.p_g == p[0].1.p_g));
    }

    proptest! {
        #[test]
        fn dephasing_preserves_physicality(
            theta in 0.0..PI, phi in -PI..PI, f in 1e-6f64..=1.0, t in 0.0f64..50.0
        ) {
            let rho0 = initial_state(&InitialState::with_phase(theta, phi).unwrap()).unwrap();
            let r = evolve_dephasing(&rho0, 1.0, f, t).unwrap();
            prop_assert!(r.is_physical(1e-14));
            prop_assert!((r.coh.norm() - rho0.coh.norm() * f).abs() < 1e-15);
            prop_assert!(r.purity() <= 1.0 + 1e-14);
            let e = eigensystem(&r);
            prop_assert!((e.lambda_plus - e.lambda_minus - bloch_radius(theta, f)).abs() < 1e-12);
            if (f - 1.0).abs() < f64::EPSILON {
                prop_assert!((r.purity() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn eigensystem_reconstructs(
            p_e in 0.0f64..=1.0, frac in 0.0f64..=1.0, arg in -PI..PI
        ) {
            let amp = (p_e * (1.0 - p_e)).sqrt() * frac;
            let rho = DensityMatrix2::new(p_e, Complex64::from_polar(amp, arg)).unwrap();
            let e = eigensystem(&rho);
            prop_assert!(e.lambda_plus >= e.lambda_minus);
            prop_assert!((e.lambda_plus + e.lambda_minus - 1.0).abs() < 1e-12);
            prop_assert!((inner(&e.psi_plus, &e.psi_plus).re - 1.0).abs() < 1e-12);
            prop_assert!((inner(&e.psi_minus, &e.psi_minus).re - 1.0).abs() < 1e-12);
            prop_assert!(inner(&e.psi_plus, &e.psi_minus).norm() < 1e-12);
            let m = rho.matrix();
            for i in 0..2 {
                for j in 0..2 {
                    let r = e.lambda_plus * e.psi_plus[i] * e.psi_plus[j].conj()
                        + e.lambda_minus * e.psi_minus[i] * e.psi_minus[j].conj();
                    prop_assert!((r - m[i][j]).norm() < 1e-12);
                }
            }
            // gauge: first nonzero component real and positive
            let pivot = if e.psi_plus[0].norm() > 1e-300 { e.psi_plus[0] } else { e.psi_plus[1] };
            prop_assert!(pivot.im.abs() < 1e-15 && pivot.re > 0.0);
        }
    }
}
