//! Plot-ready datasets for each figure.
//!
//! Series values (γ₀ sets, θ sets) are fixed per figure; setting `gamma0` or
//! `theta` in the config file or on the command line pins that series to the
//! single given value.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use super::config::{BathMode, PartialConfig, RunConfig};
use super::sweep::{geometric_at, primary_evaluator};
use super::{CliError, Dataset};
use crate::ergotropy::{ergotropy_split, ErgotropySplit, Hamiltonian2};
use crate::qubit::{evolve_dephasing, initial_state, InitialState};
use crate::geophase::{dynamic_phase, unitary_phase, weak_coupling_approximation};

pub const FIGURES: [&str; 6] = [
    "dephasing-factor",
    "gp-cycles",
    "gp-vs-ergotropy",
    "ergotropy-bars",
    "delta-approx",
    "gp-vs-dyn",
];

/// Built-in defaults layered between the global defaults and the user's file.
pub fn figure_defaults(name: &str) -> Result<PartialConfig, CliError> {
    let base = PartialConfig::default();
    Ok(match name {
        "dephasing-factor" => PartialConfig {
            theta: Some(PI / 3.0),
            n_cycles: Some(20),
            steps_per_cycle: Some(64),
            ..base
        },
        "gp-cycles" => PartialConfig {
            theta: Some(PI / 3.0),
            gamma0: Some(0.05),
            n_cycles: Some(10),
            ..base
        },
        "gp-vs-ergotropy" => PartialConfig {
            theta: Some(PI / 3.0),
            gamma0: Some(0.05),
            n_cycles: Some(1),
            ..base
        },
        "ergotropy-bars" => PartialConfig {
            gamma0: Some(0.01),
            n_cycles: Some(20),
            ..base
        },
        "delta-approx" => PartialConfig {
            bath_mode: Some(BathMode::ZeroT),
            n_cycles: Some(1),
            steps_per_cycle: Some(2048),
            ..base
        },
        "gp-vs-dyn" => PartialConfig {
            theta: Some(FRAC_PI_8),
            n_cycles: Some(5),
            ..base
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown figure `{other}`; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    })
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k + 1 == n {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn series(pinned: bool, value: f64, defaults: &[f64]) -> Vec<f64> {
    if pinned {
        vec![value]
    } else {
        defaults.to_vec()
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

/// Ergotropies at Bloch angle θ and dephasing factor F, any θ ∈ [0, π].
fn split(theta: f64, f: f64) -> Result<ErgotropySplit, CliError> {
    let wrap = |e| CliError::numerical("ergotropy_split", e);
    let rho = initial_state(&InitialState::new(theta).map_err(wrap)?).map_err(wrap)?;
    let rho = evolve_dephasing(&rho, 1.0, f, 0.0).map_err(wrap)?;
    Ok(ergotropy_split(&rho, &Hamiltonian2::default()))
}

/// Builds the named dataset. `user` is the file-plus-flags layer.
pub fn run_figure(name: &str, cfg: &RunConfig, user: &PartialConfig) -> Result<Dataset, CliError> {
    let pin_gamma = user.gamma0.is_some();
    let pin_theta = user.sets_theta();
    let tau = cfg.tau();
    let t_max = cfg.n_cycles as f64 * tau;
    let evaluator = primary_evaluator(cfg);
    let mut data = match name {
        "dephasing-factor" => {
            let gammas = series(pin_gamma, cfg.gamma0, &[0.01, 0.05]);
            let thetas = series(pin_theta, cfg.theta, &[cfg.theta]);
            let source = cfg.bath_source(t_max)?;
            let mut d = Dataset::new(name, &["theta", "gamma0", "t_over_tau", "F", "E_coh"]);
            d.note(format!("series gamma0: {}", fmt_list(&gammas)));
            let steps = cfg.n_cycles as usize * cfg.steps_per_cycle;
            let times: Vec<f64> = (0..=steps).map(|k| t_max * k as f64 / steps as f64).collect();
            for &g in &gammas {
                let profile = source.dephasing(g).profile(&times)?;
                for &theta in &thetas {
                    for &(t, f) in &profile {
                        let e = split(theta, f)?;
                        d.push(vec![theta, g, t / tau, f, e.coherent]);
                    }
                }
            }
            d
        }
        "gp-cycles" => {
            let gammas = series(pin_gamma, cfg.gamma0, &[0.0, 0.01, 0.05]);
            let thetas = series(pin_theta, cfg.theta, &[FRAC_PI_8, FRAC_PI_4, PI / 3.0, FRAC_PI_2]);
            let source = cfg.bath_source(t_max)?;
            let mut d = Dataset::new(name, &["theta", "gamma0", "n", "gp", "gp_unitary", "phi_dyn"]);
            d.note(format!("series gamma0: {}", fmt_list(&gammas)));
            d.note(format!("series theta: {}", fmt_list(&thetas)));
            d.note(format!("evaluator: {}", evaluator.name()));
            for &g in &gammas {
                let deph = source.dephasing(g);
                for &theta in &thetas {
                    for n in 1..=cfg.n_cycles {
                        let t = n as f64 * tau;
                        let gp = geometric_at(cfg, evaluator, theta, g, &deph, t)?.abs();
                        d.push(vec![
                            theta,
                            g,
                            n as f64,
                            gp,
                            unitary_phase(theta, n as f64),
                            dynamic_phase(theta, 1.0, t),
                        ]);
                    }
                }
            }
            d
        }
        "gp-vs-ergotropy" => {
            let gammas = series(pin_gamma, cfg.gamma0, &[0.05]);
            let thetas = linspace(0.0, FRAC_PI_2, 91);
            let source = cfg.bath_source(t_max)?;
            let mut d = Dataset::new(
                name,
                &["theta", "gamma0", "E_coh", "E_inc", "E_total", "gp", "gp_unitary"],
            );
            d.note(format!("theta grid: 0 to pi/2 in 1 degree steps; T = {} tau", cfg.n_cycles));
            for &g in &gammas {
                let deph = source.dephasing(g);
                let f = deph.factor(t_max)?;
                for &theta in &thetas {
                    let e = split(theta, f)?;
                    let gp = geometric_at(cfg, evaluator, theta, g, &deph, t_max)?.abs();
                    d.push(vec![
                        theta,
                        g,
                        e.coherent,
                        e.incoherent,
                        e.total,
                        gp,
                        unitary_phase(theta, cfg.n_cycles as f64),
                    ]);
                }
            }
            d
        }
        "ergotropy-bars" => {
            let gammas = series(pin_gamma, cfg.gamma0, &[0.01]);
            let thetas = linspace(0.0, FRAC_PI_2, 11);
            let source = cfg.bath_source(t_max)?;
            let mut d = Dataset::new(
                name,
                &[
                    "theta",
                    "gamma0",
                    "E_total_T",
                    "E_inc",
                    "E_coh_T",
                    "E_coh_unitary",
                    "gp",
                    "gp_unitary",
                ],
            );
            d.note(format!("T = {} tau", cfg.n_cycles));
            for &g in &gammas {
                let deph = source.dephasing(g);
                let f = deph.factor(t_max)?;
                for &theta in &thetas {
                    let e = split(theta, f)?;
                    let e0 = split(theta, 1.0)?;
                    let gp = geometric_at(cfg, evaluator, theta, g, &deph, t_max)?.abs();
                    d.push(vec![
                        theta,
                        g,
                        e.total,
                        e.incoherent,
                        e.coherent,
                        e0.coherent,
                        gp,
                        unitary_phase(theta, cfg.n_cycles as f64),
                    ]);
                }
            }
            d
        }
        "delta-approx" => {
            let bath = cfg.weak_coupling_bath().ok_or_else(|| {
                CliError::Config("delta-approx needs bath_mode zero-t or high-t".into())
            })?;
            let gamma_grid = linspace(0.0, 0.1, 21);
            let theta_series = series(pin_theta, cfg.theta, &[FRAC_PI_8, FRAC_PI_4, PI / 3.0, 3.0 * FRAC_PI_8]);
            let theta_grid = linspace(0.0, FRAC_PI_2, 19);
            let gamma_series = series(pin_gamma, cfg.gamma0, &[0.01, 0.05]);
            let source = cfg.bath_source(t_max)?;
            let mut d = Dataset::new(
                name,
                &["panel", "theta", "gamma0", "gp_exact", "gp_approx", "delta_phi"],
            );
            d.note("panel 1: delta_phi against gamma0; panel 2: against theta");
            d.note("delta_phi = |phi_exact| - phi_approx");
            let mut point = |panel: f64, theta: f64, g: f64| -> Result<(), CliError> {
                let deph = source.dephasing(g);
                let exact = geometric_at(cfg, evaluator, theta, g, &deph, t_max)?.abs();
                let approx = weak_coupling_approximation(theta, g, bath, cfg.n_cycles as f64)
                    .map_err(|e| CliError::numerical("delta_phi_exact_vs_approx", e))?;
                d.push(vec![panel, theta, g, exact, approx, exact - approx]);
                Ok(())
            };
            for &theta in &theta_series {
                for &g in &gamma_grid {
                    point(1.0, theta, g)?;
                }
            }
            for &g in &gamma_series {
                for &theta in &theta_grid {
                    point(2.0, theta, g)?;
                }
            }
            d
        }
        "gp-vs-dyn" => {
            let gammas = series(pin_gamma, cfg.gamma0, &[0.0, 0.01, 0.05]);
            let thetas = series(pin_theta, cfg.theta, &[PI / 16.0, FRAC_PI_8, FRAC_PI_4]);
            let source = cfg.bath_source(t_max)?;
            let samples = cfg.n_cycles as usize * 16;
            let mut d = Dataset::new(
                name,
                &["theta", "gamma0", "t_over_tau", "phi_dyn_abs", "gp", "gp_unitary", "small_angle"],
            );
            d.note("small_angle = theta^2/2 * |phi_dyn|");
            for &g in &gammas {
                let deph = source.dephasing(g);
                for &theta in &thetas {
                    for k in 1..=samples {
                        let t = t_max * k as f64 / samples as f64;
                        let dyn_abs = dynamic_phase(theta, 1.0, t).abs();
                        let gp = geometric_at(cfg, evaluator, theta, g, &deph, t)?.abs();
                        d.push(vec![
                            theta,
                            g,
                            t / tau,
                            dyn_abs,
                            gp,
                            unitary_phase(theta, t / tau),
                            0.5 * theta * theta * dyn_abs,
                        ]);
                    }
                }
            }
            d
        }
        other => return Err(figure_defaults(other).unwrap_err()),
    };
    data.name = format!("figure {name}");
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(name: &str, user: PartialConfig) -> Dataset {
        let layer = figure_defaults(name).unwrap().overlay(&user);
        let cfg = RunConfig::resolve(&layer).unwrap();
        run_figure(name, &cfg, &user).unwrap()
    }

    #[test]
    fn unknown_figure() {
        assert!(figure_defaults("fig7").is_err());
    }

    #[test]
    fn dephasing_factor_starts_at_one() {
        let d = build("dephasing-factor", PartialConfig::default());
        let t = d.column("t_over_tau").unwrap();
        let f = d.column("F").unwrap();
        let starts: Vec<f64> = t.iter().zip(&f).filter(|(t, _)| **t == 0.0).map(|(_, f)| *f).collect();
        assert_eq!(starts, vec![1.0, 1.0]);
    }

    #[test]
    fn gp_cycles_unitary_rows() {
        let d = build(
            "gp-cycles",
            PartialConfig {
                gamma0: Some(0.0),
                n_cycles: Some(4),
                ..Default::default()
            },
        );
        for row in &d.rows {
            assert!((row[3] - row[4]).abs() < 1e-12 * row[4].max(1.0), "{row:?}");
        }
    }

    #[test]
    fn delta_approx_vanishes_at_zero_coupling() {
        let d = build(
            "delta-approx",
            PartialConfig {
                steps_per_cycle: Some(256),
                ..Default::default()
            },
        );
        for row in d.rows.iter().filter(|r| r[2] == 0.0) {
            assert!(row[5].abs() < 1e-12, "{row:?}");
        }
    }
}
