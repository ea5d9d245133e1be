//! One-dimensional parameter sweeps and the shared per-point evaluation.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BathMode, BathSource, EvaluatorChoice, RunConfig};
use super::{CliError, Dataset};
use crate::ergotropy::{ergotropy_split, Hamiltonian2};
use crate::geophase::{
    closed_ohmic_high_t_value, dynamic_phase, gp_compact_ergotropy_until,
    gp_exact_dephasing_until, kinematic_on_grid, unitary_phase, weak_coupling_approximation,
    Dephasing, Evaluator, PhaseRun, WeakCouplingBath,
};
use crate::qubit::{evolve_dephasing, initial_state, InitialState};

/// Library operation behind each evaluator, used in error messages.
pub fn operation_name(e: Evaluator) -> &'static str {
    match e {
        Evaluator::Kinematic => "gp_kinematic",
        Evaluator::ExactGp3 => "gp_exact_dephasing",
        Evaluator::CompactErgotropy => "gp_compact_ergotropy",
        Evaluator::ClosedOhmicHighT => "gp_closed_ohmic_high_t",
        Evaluator::WeakCouplingHighT => "gp_weak_coupling_high_t",
        Evaluator::WeakCouplingZeroT => "gp_weak_coupling_zero_t",
    }
}

pub fn column_name(e: Evaluator) -> &'static str {
    match e {
        Evaluator::Kinematic => "gp_kinematic",
        Evaluator::ExactGp3 => "gp_exact",
        Evaluator::CompactErgotropy => "gp_compact",
        Evaluator::ClosedOhmicHighT => "gp_closed",
        Evaluator::WeakCouplingHighT | Evaluator::WeakCouplingZeroT => "gp_weak",
    }
}

/// Evaluators meant by a choice under the configured bath.
pub fn selected_evaluators(cfg: &RunConfig) -> Vec<Evaluator> {
    match cfg.evaluator {
        EvaluatorChoice::One(e) => vec![e],
        EvaluatorChoice::All => {
            let mut v = vec![
                Evaluator::Kinematic,
                Evaluator::ExactGp3,
                Evaluator::CompactErgotropy,
            ];
            match cfg.bath_mode {
                BathMode::HighT => {
                    v.push(Evaluator::ClosedOhmicHighT);
                    v.push(Evaluator::WeakCouplingHighT);
                }
                BathMode::ZeroT if cfg.n_cycles == 1 => v.push(Evaluator::WeakCouplingZeroT),
                _ => {}
            }
            v
        }
    }
}

/// The evaluator used for single-valued figure columns.
pub fn primary_evaluator(cfg: &RunConfig) -> Evaluator {
    match cfg.evaluator {
        EvaluatorChoice::All => Evaluator::ExactGp3,
        EvaluatorChoice::One(e) => e,
    }
}

/// Uniform grid on [0, t_end] with an even step count at the configured density.
pub fn kinematic_grid(t_end: f64, steps_per_cycle: usize) -> Vec<f64> {
    let cycles = t_end / (2.0 * PI);
    let mut steps = (cycles * steps_per_cycle as f64).round().max(2.0) as usize;
    steps += steps % 2;
    (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect()
}

/// Signed geometric phase at `t_end` from one evaluator.
pub fn geometric_at(
    cfg: &RunConfig,
    evaluator: Evaluator,
    theta: f64,
    gamma0: f64,
    dephasing: &Dephasing,
    t_end: f64,
) -> Result<f64, CliError> {
    let op = operation_name(evaluator);
    let wrap = |e| CliError::numerical(op, e);
    let cycles = t_end / (2.0 * PI);
    let run = || PhaseRun {
        time_steps_per_cycle: cfg.steps_per_cycle.max(64),
        ..PhaseRun::new(theta, (cycles.ceil() as u32).max(1), dephasing.clone())
    };
    match evaluator {
        Evaluator::Kinematic => {
            if t_end == 0.0 {
                return Ok(0.0);
            }
            Ok(kinematic_on_grid(theta, 1.0, dephasing, &kinematic_grid(t_end, cfg.steps_per_cycle))
                .map_err(wrap)?
                .geometric)
        }
        Evaluator::ExactGp3 => Ok(gp_exact_dephasing_until(&run(), t_end).map_err(wrap)?.geometric),
        Evaluator::CompactErgotropy => {
            Ok(gp_compact_ergotropy_until(&run(), t_end).map_err(wrap)?.geometric)
        }
        Evaluator::ClosedOhmicHighT => {
            let Dephasing::Exponential { rate } = *dephasing else {
                return Err(CliError::Config(format!(
                    "{op} requires bath_mode high-t"
                )));
            };
            if theta > FRAC_PI_2 {
                return Err(wrap(crate::ergotropy::ErgotropyError::ThetaOutOfRange { theta }.into()));
            }
            if rate == 0.0 {
                return Ok(-unitary_phase(theta, cycles));
            }
            Ok(-closed_ohmic_high_t_value(theta, rate, 1.0, t_end).map_err(wrap)?)
        }
        Evaluator::WeakCouplingHighT => {
            let bath = WeakCouplingBath::HighT {
                kt_over_omega: cfg.kt_over_omega,
            };
            Ok(-weak_coupling_approximation(theta, gamma0, bath, cycles).map_err(wrap)?)
        }
        Evaluator::WeakCouplingZeroT => {
            let bath = WeakCouplingBath::ZeroT {
                cutoff_over_omega: cfg.cutoff_over_omega,
            };
            Ok(-weak_coupling_approximation(theta, gamma0, bath, cycles).map_err(wrap)?)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Theta,
    Gamma0,
    /// End time in units of τ.
    Time,
    NCycles,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "theta" => Some(Self::Theta),
            "gamma0" => Some(Self::Gamma0),
            "time" => Some(Self::Time),
            "n_cycles" => Some(Self::NCycles),
            _ => None,
        }
    }

    fn column(&self) -> &'static str {
        match self {
            Self::Theta => "theta",
            Self::Gamma0 => "gamma0",
            Self::Time => "t_over_tau",
            Self::NCycles => "n_cycles",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.count < 2 {
            return Err(CliError::Config(format!("sweep count must be >= 2 (got {})", self.count)));
        }
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Config(format!(
                "sweep needs start < stop (got {} and {})",
                self.start, self.stop
            )));
        }
        let bad = |what: &str| {
            Err(CliError::Config(format!(
                "{what} sweep range [{}, {}] is outside its domain",
                self.start, self.stop
            )))
        };
        match self.axis {
            SweepAxis::Theta if self.start < 0.0 || self.stop > PI => bad("theta"),
            SweepAxis::Gamma0 if self.start < 0.0 => bad("gamma0"),
            SweepAxis::Time if self.start < 0.0 => bad("time"),
            SweepAxis::NCycles if self.start < 1.0 => bad("n_cycles"),
            _ => Ok(()),
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..=n)
            .map(|k| match k {
                0 => self.start,
                k if k == n => self.stop,
                k => self.start + (self.stop - self.start) * k as f64 / n as f64,
            })
            .map(|v| if self.axis == SweepAxis::NCycles { v.round() } else { v })
            .collect()
    }
}

struct Point {
    theta: f64,
    gamma0: f64,
    t_end: f64,
}

/// Runs the sweep; rows are computed in parallel and emitted in sweep order.
pub fn run_sweep(cfg: &RunConfig, spec: &SweepSpec) -> Result<Dataset, CliError> {
    spec.validate()?;
    let tau = cfg.tau();
    let values = spec.points();
    let points: Vec<Point> = values
        .iter()
        .map(|&v| {
            let mut p = Point {
                theta: cfg.theta,
                gamma0: cfg.gamma0,
                t_end: cfg.n_cycles as f64 * tau,
            };
            match spec.axis {
                SweepAxis::Theta => p.theta = v,
                SweepAxis::Gamma0 => p.gamma0 = v,
                SweepAxis::Time | SweepAxis::NCycles => p.t_end = v * tau,
            }
            p
        })
        .collect();
    let t_max = points.iter().map(|p| p.t_end).fold(tau, f64::max);
    let source: BathSource = cfg.bath_source(t_max)?;
    let evaluators = selected_evaluators(cfg);

    let mut columns = vec![spec.axis.column()];
    if spec.axis != SweepAxis::Time {
        columns.push("t_over_tau");
    }
    columns.extend(["F", "E_total", "E_coh", "E_inc"]);
    columns.extend(evaluators.iter().map(|&e| column_name(e)));
    columns.push("phi_dyn");
    let mut data = Dataset::new(format!("sweep {}", spec.axis.column()), &columns);
    data.note(format!(
        "sweep: axis={} start={} stop={} count={}",
        spec.axis.column(),
        spec.start,
        spec.stop,
        spec.count
    ));
    data.note("gp_* columns hold |Φ_g|; phi_dyn is signed; ergotropies in units of ħΩ");

    let h = Hamiltonian2::default();
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .zip(values.par_iter())
        .map(|(p, &v)| -> Result<Vec<f64>, CliError> {
            let deph = source.dephasing(p.gamma0);
            let f = deph.factor(p.t_end)?;
            let rho0 = initial_state(&InitialState::new(p.theta).map_err(|e| CliError::numerical("initial_state", e))?)
                .map_err(|e| CliError::numerical("initial_state", e))?;
            let rho = evolve_dephasing(&rho0, 1.0, f, p.t_end)
                .map_err(|e| CliError::numerical("evolve_dephasing", e))?;
            let e = ergotropy_split(&rho, &h);
            let mut row = vec![v];
            if spec.axis != SweepAxis::Time {
                row.push(p.t_end / tau);
            }
            row.extend([f, e.total, e.coherent, e.incoherent]);
            for &ev in &evaluators {
                row.push(geometric_at(cfg, ev, p.theta, p.gamma0, &deph, p.t_end)?.abs());
            }
            row.push(dynamic_phase(p.theta, 1.0, p.t_end));
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    data.rows = rows;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        RunConfig::default()
    }

    #[test]
    fn theta_sweep_unitary_endpoints() {
        let c = RunConfig {
            gamma0: 0.0,
            ..cfg()
        };
        let spec = SweepSpec {
            axis: SweepAxis::Theta,
            start: 0.0,
            stop: FRAC_PI_2,
            count: 5,
        };
        let d = run_sweep(&c, &spec).unwrap();
        let gp = d.column("gp_exact").unwrap();
        assert_eq!(gp.len(), 5);
        assert_eq!(gp[0], 0.0);
        assert!((gp[4] - PI).abs() < 1e-14);
        for col in ["gp_kinematic", "gp_compact", "gp_closed", "gp_weak"] {
            let v = d.column(col).unwrap();
            assert!((v[4] - PI).abs() < 1e-9, "{col}");
        }
    }

    #[test]
    fn gamma_sweep_is_monotone() {
        let spec = SweepSpec {
            axis: SweepAxis::Gamma0,
            start: 0.0,
            stop: 0.3,
            count: 6,
        };
        let d = run_sweep(&cfg(), &spec).unwrap();
        let gp = d.column("gp_exact").unwrap();
        assert!(gp.windows(2).all(|w| w[1] < w[0]), "{gp:?}");
    }

    #[test]
    fn theta_past_half_pi_names_operation() {
        let c = RunConfig {
            evaluator: EvaluatorChoice::One(Evaluator::ClosedOhmicHighT),
            ..cfg()
        };
        let spec = SweepSpec {
            axis: SweepAxis::Theta,
            start: 0.0,
            stop: 2.0,
            count: 3,
        };
        let msg = run_sweep(&c, &spec).unwrap_err().to_string();
        assert!(msg.contains("gp_closed_ohmic_high_t"), "{msg}");
        let c = RunConfig {
            evaluator: EvaluatorChoice::One(Evaluator::CompactErgotropy),
            ..cfg()
        };
        let msg = run_sweep(&c, &spec).unwrap_err().to_string();
        assert!(msg.contains("gp_compact_ergotropy"), "{msg}");
    }

    #[test]
    fn rejects_bad_specs() {
        for (start, stop, count) in [(0.0, 1.0, 1), (1.0, 1.0, 3), (1.0, 0.0, 3)] {
            let s = SweepSpec {
                axis: SweepAxis::Gamma0,
                start,
                stop,
                count,
            };
            assert!(s.validate().is_err());
        }
    }

    #[test]
    fn time_and_cycle_axes() {
        let spec = SweepSpec {
            axis: SweepAxis::NCycles,
            start: 1.0,
            stop: 3.0,
            count: 3,
        };
        let d = run_sweep(&cfg(), &spec).unwrap();
        assert_eq!(d.column("n_cycles").unwrap(), vec![1.0, 2.0, 3.0]);
        let spec = SweepSpec {
            axis: SweepAxis::Time,
            start: 0.0,
            stop: 1.0,
            count: 5,
        };
        let d = run_sweep(&cfg(), &spec).unwrap();
        assert_eq!(d.column("F").unwrap()[0], 1.0);
        assert_eq!(d.column("gp_kinematic").unwrap()[0], 0.0);
    }

    #[test]
    fn zero_t_sweep_uses_tabulated_bath() {
        let c = RunConfig {
            bath_mode: BathMode::ZeroT,
            ..cfg()
        };
        let spec = SweepSpec {
            axis: SweepAxis::Gamma0,
            start: 0.0,
            stop: 0.05,
            count: 3,
        };
        let d = run_sweep(&c, &spec).unwrap();
        let exact = d.column("gp_exact").unwrap();
        let kin = d.column("gp_kinematic").unwrap();
        // the first step straddles the 1/Λ decay, so the path converges slower
        for (a, b) in exact.iter().zip(&kin) {
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
        assert!(d.column("gp_weak").is_some());
    }
}
