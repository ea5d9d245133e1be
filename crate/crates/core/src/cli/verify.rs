//! Cross-evaluator and identity checks at the configured parameters.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{BathMode, RunConfig};
use super::sweep::geometric_at;
use super::CliError;
use crate::ergotropy::{ergotropy_identities, ergotropy_split_theta};
use crate::geophase::{
    closed_ohmic_high_t_value, dynamic_phase, gp_first_order_in_rate, gp_weak_coupling_high_t,
    phase_rate_ratio, phase_rate_ratio_simplified, Evaluator,
};

pub const TOL_COMPACT: f64 = 1e-10;
pub const TOL_CLOSED: f64 = 1e-9;
pub const TOL_KINEMATIC: f64 = 1e-6;
pub const TOL_IDENTITIES: f64 = 1e-12;
pub const TOL_RATIO_FORMS: f64 = 1e-12;
pub const TOL_RATIO_FD: f64 = 1e-4;
/// Allowed distance of the halving ratio from 4.
pub const TOL_SCALING: f64 = 0.5;

const RANDOM_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
    pub info: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    fn check(&mut self, name: &'static str, residual: f64, tolerance: f64) {
        self.checks.push(Check {
            name,
            // NaN residuals fail
            residual: if residual.is_nan() { f64::INFINITY } else { residual },
            tolerance,
        });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<40} residual {:.3e}  tolerance {:.1e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            )?;
        }
        for i in &self.info {
            writeln!(f, "info {i}")?;
        }
        Ok(())
    }
}

fn halving_ratios(residual: impl Fn(f64) -> f64, gamma: f64) -> [f64; 2] {
    let r: Vec<f64> = [gamma, gamma / 2.0, gamma / 4.0].into_iter().map(residual).collect();
    [r[0] / r[1], r[1] / r[2]]
}

pub fn run_verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut report = Report::default();
    let theta = cfg.theta;
    let tau = cfg.tau();
    let t_end = cfg.n_cycles as f64 * tau;
    let source = cfg.bath_source(t_end)?;
    let deph = source.dephasing(cfg.gamma0);
    let half_sphere = theta <= FRAC_PI_2;

    let exact = geometric_at(cfg, Evaluator::ExactGp3, theta, cfg.gamma0, &deph, t_end)?;
    if half_sphere {
        let compact = geometric_at(cfg, Evaluator::CompactErgotropy, theta, cfg.gamma0, &deph, t_end)?;
        report.check("exact-gp3 vs compact-ergotropy", (exact - compact).abs(), TOL_COMPACT);
        if cfg.bath_mode == BathMode::HighT {
            let closed =
                geometric_at(cfg, Evaluator::ClosedOhmicHighT, theta, cfg.gamma0, &deph, t_end)?;
            report.check("exact-gp3 vs closed-ohmic-high-t", (exact - closed).abs(), TOL_CLOSED);
        }
    } else {
        report.info.push("theta > pi/2: compact and closed-form evaluators skipped".into());
    }
    let kinematic = geometric_at(cfg, Evaluator::Kinematic, theta, cfg.gamma0, &deph, t_end)?;
    report.check(
        "kinematic vs exact-gp3",
        (kinematic - exact).abs(),
        TOL_KINEMATIC,
    );

    // Identity and ratio suites: the configured point plus seeded random draws.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f_end = deph.factor(t_end)?;
    let mut points = vec![(theta.min(PI - theta), f_end)];
    points.extend((0..RANDOM_SAMPLES).map(|_| {
        (rng.random_range(0.0..=FRAC_PI_2), rng.random_range(0.0..=1.0))
    }));
    let mut identity_residual: f64 = 0.0;
    let mut ratio_residual: f64 = 0.0;
    for &(th, f) in &points {
        let id = ergotropy_identities(th, f).map_err(|e| CliError::numerical("ergotropy_identities", e))?;
        identity_residual = identity_residual.max(id.max_residual());
        let e = ergotropy_split_theta(th, f).map_err(|e| CliError::numerical("ergotropy_split", e))?;
        if e.incoherent > 1e-3 {
            let verbatim = phase_rate_ratio(e.coherent, e.incoherent)
                .map_err(|err| CliError::numerical("phase_rate_ratio", err))?;
            let simple = phase_rate_ratio_simplified(e.coherent, e.incoherent);
            ratio_residual = ratio_residual.max((verbatim - simple).abs() / simple.abs().max(1.0));
        }
    }
    report.check("ergotropy identities", identity_residual, TOL_IDENTITIES);
    report.check("ratio formula equivalence", ratio_residual, TOL_RATIO_FORMS);

    // Finite-difference dΦ_g/dΦ_dyn at mid-run against the ratio formula.
    if theta > 0.0 && theta < FRAC_PI_2 {
        let t_mid = 0.5 * t_end;
        let h = 1e-3;
        let gp = |t| geometric_at(cfg, Evaluator::ExactGp3, theta, cfg.gamma0, &deph, t);
        let numerator = gp(t_mid + h)? - gp(t_mid - h)?;
        let denominator = dynamic_phase(theta, 1.0, t_mid + h) - dynamic_phase(theta, 1.0, t_mid - h);
        let e = ergotropy_split_theta(theta, deph.factor(t_mid)?)
            .map_err(|e| CliError::numerical("ergotropy_split", e))?;
        let formula = phase_rate_ratio(e.coherent, e.incoherent)
            .map_err(|err| CliError::numerical("phase_rate_ratio", err))?;
        report.check(
            "ratio formula vs finite difference",
            (numerator / denominator - formula).abs(),
            TOL_RATIO_FD,
        );
    }

    // Weak-coupling scaling of the closed form against its first-order
    // expansion in the dephasing rate. The third-order term shifts the
    // halving ratio by about 10γ at θ = π/3, so the probe starts at γ ≤ 0.01.
    let gamma = cfg.gamma_high_t().min(0.01);
    let (s, c) = theta.sin_cos();
    if gamma > 0.0 && half_sphere && (s * s * c).abs() > 1e-6 {
        let closed = |g: f64| closed_ohmic_high_t_value(theta, g, 1.0, tau).unwrap_or(f64::NAN);
        let ratios = halving_ratios(|g| (closed(g) - gp_first_order_in_rate(theta, g)).abs(), gamma);
        let worst = ratios.iter().map(|r| (r - 4.0).abs()).fold(0.0, f64::max);
        report.check("weak-coupling scaling (first order in rate)", worst, TOL_SCALING);
        let g0 = cfg.gamma0.min(0.01);
        let kt = cfg.kt_over_omega;
        let printed = halving_ratios(
            |g| {
                let rate = crate::spectra::gamma_high_t(g, kt);
                (closed(rate) - gp_weak_coupling_high_t(theta, g, kt)).abs()
            },
            g0,
        );
        report.info.push(format!(
            "high-T expansion with coefficient pi^2 gamma0 kT: residual halving ratios {:.3}, {:.3}",
            printed[0], printed[1]
        ));
    } else {
        report.info.push("weak-coupling scaling skipped (zero rate or sin^2 cos = 0)".into());
    }
    Ok(report)
}
