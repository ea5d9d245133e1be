//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.
//!
//! The interval is first cut into a caller-chosen number of equal panels,
//! which is how oscillatory Fourier-type integrands are handled: the caller
//! asks for roughly one panel per oscillation and the adaptive loop refines
//! wherever the local error estimate is still large.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimated error {achieved_error:e}, requested {requested:e})"
    )]
    NotConverged {
        achieved_error: f64,
        requested: f64,
        subdivisions: usize,
    },
    #[error("integrand returned a non-finite value at x = {at}")]
    NonFinite { at: f64 },
    #[error("invalid quadrature controls: {0}")]
    InvalidControls(String),
}

/// Tolerances and limits shared by every quadrature in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureControls {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Number of bisections allowed on top of the initial panels.
    pub max_subdivisions: usize,
    /// Frequency integrals are truncated at this multiple of the cutoff.
    pub frequency_upper_bound_multiplier: f64,
}

impl Default for QuadratureControls {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 20_000,
            frequency_upper_bound_multiplier: 50.0,
        }
    }
}

impl QuadratureControls {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(QuadratureError::InvalidControls(
                "tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions < 1 {
            return Err(QuadratureError::InvalidControls(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        if !(self.frequency_upper_bound_multiplier > 0.0) {
            return Err(QuadratureError::InvalidControls(
                "frequency_upper_bound_multiplier must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

// Kronrod abscissae; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_011_850,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gauss_kronrod_21<F, E>(f: &mut F, a: f64, b: f64) -> Result<Panel, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadratureError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64, E> {
        let y = f(x)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NonFinite { at: x }.into())
        }
    };

    let fc = eval(center)?;
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let habs = half.abs();
    let error = rescale_error((res_k - res_g) * half, res_abs * habs, res_asc * habs);
    Ok(Panel {
        a,
        b,
        value: res_k * half,
        error,
    })
}

/// Adaptive integration of a fallible integrand over `[a, b]`.
///
/// Stops once the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_with<F, E>(
    mut f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    controls: &QuadratureControls,
) -> Result<Integral, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadratureError>,
{
    controls.validate()?;
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(panels + 64);
    let mut evaluations = 0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == panels { b } else { lo + width };
        heap.push(gauss_kronrod_21(&mut f, lo, hi)?);
        evaluations += 21;
    }

    let totals = |heap: &BinaryHeap<Panel>| {
        heap.iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };

    let (mut value, mut error) = totals(&heap);
    let mut bisections = 0;
    loop {
        let requested = controls.abs_tol.max(controls.rel_tol * value.abs());
        if error <= requested {
            break;
        }
        if bisections >= controls.max_subdivisions {
            let (v, e) = totals(&heap);
            if e <= controls.abs_tol.max(controls.rel_tol * v.abs()) {
                break;
            }
            return Err(QuadratureError::NotConverged {
                achieved_error: e,
                requested,
                subdivisions: bisections,
            }
            .into());
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine resolution.
            let (_, e) = totals(&heap);
            return Err(QuadratureError::NotConverged {
                achieved_error: e + worst.error,
                requested,
                subdivisions: bisections,
            }
            .into());
        }
        let left = gauss_kronrod_21(&mut f, worst.a, mid)?;
        let right = gauss_kronrod_21(&mut f, mid, worst.b)?;
        evaluations += 42;
        bisections += 1;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Refresh the running sums now and then to stop drift.
        if bisections % 256 == 0 {
            (value, error) = totals(&heap);
        }
    }
    let (value, error_estimate) = totals(&heap);
    Ok(Integral {
        value,
        error_estimate,
        evaluations,
    })
}

/// Infallible-integrand convenience wrapper around [`integrate_with`].
pub fn integrate<F>(
    mut f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    controls: &QuadratureControls,
) -> Result<Integral, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    integrate_with(|x| Ok::<f64, QuadratureError>(f(x)), a, b, initial_panels, controls)
}
