#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use ergophase::qubit::DensityMatrix2;

pub type Mat2 = [[Complex64; 2]; 2];

fn gaussian_c(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed U(2): Gram–Schmidt on a complex Ginibre matrix.
pub fn haar_unitary(rng: &mut impl Rng) -> Mat2 {
    let a = [gaussian_c(rng), gaussian_c(rng)];
    let b = [gaussian_c(rng), gaussian_c(rng)];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let u0 = [a[0] / na, a[1] / na];
    let proj = u0[0].conj() * b[0] + u0[1].conj() * b[1];
    let c = [b[0] - proj * u0[0], b[1] - proj * u0[1]];
    let nc = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
    let u1 = [c[0] / nc, c[1] / nc];
    // columns u0, u1
    [[u0[0], u1[0]], [u0[1], u1[1]]]
}

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

pub fn dagger(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Tr(Hρ) with H = (Ω/2)σ_z in the (excited, ground) basis.
pub fn energy(rho: &Mat2, omega: f64) -> f64 {
    0.5 * omega * (rho[0][0].re - rho[1][1].re)
}

/// Uniformly random mixed state: Bloch vector uniform in the unit ball.
pub fn random_state(rng: &mut impl Rng) -> DensityMatrix2 {
    loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if r2 <= 1.0 {
            let p_e = 0.5 * (1.0 + v[2]);
            let coh = Complex64::new(0.5 * v[0], -0.5 * v[1]);
            return DensityMatrix2::new(p_e, coh).unwrap();
        }
    }
}

/// Γ(t) = ∫₀ᵗ D(s) ds with D(s) = ∫ 4J(ω) coth(βω/2) sin(ωs)/ω dω for
/// J = (γ₀/4) ω e^{−ω/Λ}: midpoint rule in ω, composite Simpson in s.
/// `beta = None` is the zero-temperature limit.
pub fn riemann_gamma(
    gamma0: f64,
    cutoff: f64,
    beta: Option<f64>,
    t: f64,
    d_omega: f64,
    s_intervals: usize,
) -> f64 {
    assert!(s_intervals % 2 == 0);
    let omega_max = 60.0 * cutoff;
    let n_omega = (omega_max / d_omega).ceil() as usize;
    let ds = t / s_intervals as f64;
    let simpson: Vec<f64> = (0..=s_intervals)
        .map(|k| match k {
            0 => 1.0,
            k if k == s_intervals => 1.0,
            k if k % 2 == 1 => 4.0,
            _ => 2.0,
        } * ds
            / 3.0)
        .collect();
    let mut total = 0.0;
    for j in 0..n_omega {
        let w = (j as f64 + 0.5) * d_omega;
        let thermal = match beta {
            None => 1.0,
            Some(b) => 1.0 / (0.5 * b * w).tanh(),
        };
        let weight = gamma0 * (-w / cutoff).exp() * thermal;
        // Σ_k c_k sin(ω s_k) via a rotating phasor
        let step = Complex64::from_polar(1.0, w * ds);
        let mut z = Complex64::new(1.0, 0.0);
        let mut inner = 0.0;
        for c in &simpson {
            inner += c * z.im;
            z *= step;
        }
        total += weight * inner * d_omega;
    }
    total
}

/// Zero-temperature closed form (γ₀/2) ln(1 + Λ²t²).
pub fn zero_t_gamma(gamma0: f64, cutoff: f64, t: f64) -> f64 {
    0.5 * gamma0 * (cutoff * cutoff * t * t).ln_1p()
}

pub fn tau() -> f64 {
    2.0 * PI
}
