//! Classical random-walk references: the binomial walk, its Gaussian limit
//! and the 2D Gaussian limit.
//!
//! Binomial probabilities use Loader's saddle-point form
//! `p(k; n) = exp(stirlerr(n) - stirlerr(k) - stirlerr(n-k) - bd0(k, n/2) - bd0(n-k, n/2)) * sqrt(n / (2 pi k (n-k)))`,
//! which keeps full relative precision far beyond the range of exact
//! integers.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, Protocol};
use crate::error::{Result, WalkError};
use crate::fit::{gaussian_fit, FitResult};

/// Largest `n` for which [`binomial_coefficient_row`] returns exact integers.
pub const EXACT_ROW_MAX: usize = 64;

/// Gaussian fit model `P0 + A exp(-(x - b)^2 / (2 sigma^2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub p0: f64,
    pub amplitude: f64,
    pub centre: f64,
    pub sigma: f64,
}

impl GaussianModel {
    pub fn new(p0: f64, amplitude: f64, centre: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(WalkError::InsufficientData(format!("sigma must be positive, got {sigma}")));
        }
        Ok(GaussianModel { p0, amplitude, centre, sigma })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.p0 + self.amplitude * (-(x - self.centre).powi(2) / (2.0 * self.sigma * self.sigma)).exp()
    }

    pub fn from_fit(fit: &FitResult) -> Result<Self> {
        Self::new(fit.param("P0"), fit.param("A"), fit.param("b"), fit.param("sigma"))
    }
}

// ln(n!) - ln(sqrt(2 pi n) (n/e)^n) for n = 0, 0.5, ..., 15.
const SFERR_HALVES: [f64; 31] = [
    0.0,
    0.1534264097200273452913848,
    0.0810614667953272582196702,
    0.0548141210519176538961390,
    0.0413406959554092940938221,
    0.03316287351993628748511048,
    0.02767792568499833914878929,
    0.02374616365629749597132920,
    0.02079067210376509311152277,
    0.01848845053267318523077934,
    0.01664469118982119216319487,
    0.01513497322191737887351255,
    0.01387612882307074799874573,
    0.01281046524292022692424986,
    0.01189670994589177009505572,
    0.01110455975820691732662991,
    0.010411265261972096497478567,
    0.009799416126158803298389475,
    0.009255462182712732917728637,
    0.008768700134139385462952823,
    0.008330563433362871256469318,
    0.007934114564314020547248100,
    0.007573675487951840794972024,
    0.007244554301320383179543912,
    0.006942840107209529865664152,
    0.006665247032707682442354394,
    0.006408994188004207068439631,
    0.006171712263039457647532867,
    0.005951370112758847735624416,
    0.005746216513010115682023589,
    0.005554733551962801371038690,
];

/// Stirling-series error term `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let nn = n + n;
        if nn == nn.floor() {
            return SFERR_HALVES[nn as usize];
        }
        return ln_gamma_small(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// `ln Gamma(x)` for moderate positive `x` via the Lanczos approximation.
/// Only reached for non-half-integer arguments below 16.
fn ln_gamma_small(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Deviance term `x ln(x / np) + np - x`, computed without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let s0 = (x - np) * v;
        let mut s = s0;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// `C(n, k) / 2^n` to full relative precision.
pub fn binomial_pmf_half(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if k == 0 || k == n {
        return (-(n as f64) * LN_2).exp();
    }
    let (nf, kf) = (n as f64, k as f64);
    let half = 0.5 * nf;
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(nf - kf) - bd0(kf, half) - bd0(nf - kf, half);
    lc.exp() * (nf / (2.0 * PI * kf * (nf - kf))).sqrt()
}

/// Classical walk after `n` unit steps: `P(x) = C(n, (n - x)/2) / 2^n` on the
/// live lattice.
pub fn binomial_distribution(n: usize) -> Distribution {
    let nn = n as i64;
    Distribution::from_fn(n, Protocol::Classical1d, |x| binomial_pmf_half(n as u64, ((nn - x) / 2) as u64))
}

/// Row `n` of Pascal's triangle in exact integers.
pub fn binomial_coefficient_row(n: usize) -> Result<Vec<u128>> {
    if n > EXACT_ROW_MAX {
        return Err(WalkError::ExactBoundExceeded { n, max: EXACT_ROW_MAX });
    }
    Ok(pascal_row(n))
}

/// Pascal row without the public bound; exact while `C(n, n/2) * n` fits in `u128`.
pub(crate) fn pascal_row(n: usize) -> Vec<u128> {
    let mut row = vec![1u128; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as u128 / k as u128;
    }
    row
}

/// 2D Gaussian limit `exp(-(x^2 + y^2) / (2n)) / (2 pi n)`.
pub fn gaussian_2d(n: usize, x: i64, y: i64) -> f64 {
    let nf = n as f64;
    (-((x * x + y * y) as f64) / (2.0 * nf)).exp() / (2.0 * PI * nf)
}

/// Gaussian fit to a 1D distribution, optionally with the centre pinned.
pub fn fit_gaussian(d: &Distribution, centre: Option<f64>) -> Result<FitResult> {
    let x: Vec<f64> = d.positions().iter().map(|&v| v as f64).collect();
    gaussian_fit(&x, d.probs(), centre)
}
