//! Closed-form Fourier-integral solution of the symmetric Hadamard walk,
//! evaluated by composite Gauss-Legendre quadrature.
//!
//! With `s = sqrt(1 + cos^2 k)`, `w = asin(sin k / sqrt 2)`,
//! `e1 = exp(-i w t)` and `e2 = exp(i (w - pi) t)`:
//!
//! ```text
//! psi_up(x, t)   = 1/2pi int dk e^{ikx} [e1 (s + cos k + i e^{-ik}) + e2 (s - cos k - i e^{-ik})] / (2 sqrt2 s)
//! psi_down(x, t) = 1/2pi int dk e^{ikx} i [e1 (s - cos k - i e^{ik}) + e2 (s + cos k + i e^{ik})] / (2 sqrt2 s)
//! ```
//!
//! The `e^{ikx}` sign makes the up component travel to the right, matching
//! the shift operator used by [`crate::walk1d`].

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, Protocol};
use crate::error::{Result, WalkError};

/// Absolute tolerance targeted for each amplitude.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-8;

const GL_ORDER: usize = 16;
const MAX_REFINEMENTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Up,
    Down,
}

/// Dispersion `w_k = asin(sin k / sqrt 2)`; real for every real `k`.
pub fn omega(k: f64) -> f64 {
    (k.sin() / SQRT_2).asin()
}

/// The two `k`-space kernels (without the `e^{ikx}` factor) at `k`.
fn kernel(k: f64, t: usize) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let c = k.cos();
    let s = (1.0 + c * c).sqrt();
    let w = omega(k);
    let tf = t as f64;
    let e1 = Complex64::from_polar(1.0, -w * tf);
    let e2 = Complex64::from_polar(1.0, (w - PI) * tf);
    let em = Complex64::from_polar(1.0, -k);
    let ep = Complex64::from_polar(1.0, k);
    let norm = 2.0 * SQRT_2 * s;
    let up = (e1 * (s + c + i * em) + e2 * (s - c - i * em)) / norm;
    let down = i * (e1 * (s - c - i * ep) + e2 * (s + c + i * ep)) / norm;
    (up, down)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "rule order must be at least 2");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature rule on `[-pi, pi]`: `panels` Gauss-Legendre panels in each of
/// the three segments split at `+-pi/2`.
struct Rule {
    k: Vec<f64>,
    w: Vec<f64>,
}

impl Rule {
    fn new(panels: usize) -> Self {
        let (gx, gw) = gauss_legendre(GL_ORDER);
        let mut k = Vec::new();
        let mut w = Vec::new();
        for (lo, hi) in [(-PI, -FRAC_PI_2), (-FRAC_PI_2, FRAC_PI_2), (FRAC_PI_2, PI)] {
            let h = (hi - lo) / panels as f64;
            for p in 0..panels {
                let a = lo + p as f64 * h;
                for (x, wt) in gx.iter().zip(&gw) {
                    k.push(a + 0.5 * h * (x + 1.0));
                    w.push(0.5 * h * wt / (2.0 * PI));
                }
            }
        }
        Rule { k, w }
    }

    /// Panel count that resolves the phase oscillations of a `t`-step kernel.
    fn initial_panels(t: usize) -> usize {
        4 + t / 2
    }
}

/// Kernel values at every node, shared by all positions.
struct Tabulated {
    rule: Rule,
    up: Vec<Complex64>,
    down: Vec<Complex64>,
}

impl Tabulated {
    fn new(t: usize, panels: usize) -> Self {
        let rule = Rule::new(panels);
        let (up, down) = rule.k.par_iter().map(|&k| kernel(k, t)).unzip();
        Tabulated { rule, up, down }
    }

    fn amplitudes(&self, x: i64) -> (Complex64, Complex64) {
        let xf = x as f64;
        let mut up = Complex64::new(0.0, 0.0);
        let mut down = Complex64::new(0.0, 0.0);
        for (j, (&k, &w)) in self.rule.k.iter().zip(&self.rule.w).enumerate() {
            let phase = Complex64::from_polar(w, k * xf);
            up += phase * self.up[j];
            down += phase * self.down[j];
        }
        (up, down)
    }

    fn all_amplitudes(&self, t: usize) -> Vec<(Complex64, Complex64)> {
        let t = t as i64;
        (0..=t).into_par_iter().map(|j| self.amplitudes(-t + 2 * j)).collect()
    }
}

fn max_change(a: &[(Complex64, Complex64)], b: &[(Complex64, Complex64)]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p.0 - q.0).norm().max((p.1 - q.1).norm())).fold(0.0, f64::max)
}

/// `psi_up(x, t)` or `psi_down(x, t)`, refined until successive panel
/// doublings agree to [`AMPLITUDE_TOLERANCE`].
pub fn analytic_amplitude(x: i64, t: usize, branch: Branch) -> Result<Complex64> {
    if x.unsigned_abs() > t as u64 {
        return Err(WalkError::OutOfDomain { x, t });
    }
    let mut panels = Rule::initial_panels(t);
    let mut prev = Tabulated::new(t, panels).amplitudes(x);
    for _ in 0..MAX_REFINEMENTS {
        panels *= 2;
        let next = Tabulated::new(t, panels).amplitudes(x);
        let change = max_change(&[prev], &[next]);
        prev = next;
        if change < AMPLITUDE_TOLERANCE * 1e-2 {
            break;
        }
    }
    Ok(match branch {
        Branch::Up => prev.0,
        Branch::Down => prev.1,
    })
}

/// Distribution on the live sites of a `t`-step walk, with an explicit
/// panel count per segment.
pub fn analytic_distribution_with_panels(t: usize, panels: usize) -> Distribution {
    let amps = Tabulated::new(t, panels).all_amplitudes(t);
    Distribution::from_fn(t, Protocol::Quantum1d, |x| {
        let (u, d) = amps[((x + t as i64) / 2) as usize];
        u.norm_sqr() + d.norm_sqr()
    })
}

/// `P(x, t) = |psi_up|^2 + |psi_down|^2` on the live sites, refined until a
/// panel doubling moves no amplitude by more than [`AMPLITUDE_TOLERANCE`].
pub fn analytic_distribution(t: usize) -> Distribution {
    let mut panels = Rule::initial_panels(t);
    let mut prev = Tabulated::new(t, panels).all_amplitudes(t);
    for _ in 0..MAX_REFINEMENTS {
        panels *= 2;
        let next = Tabulated::new(t, panels).all_amplitudes(t);
        let change = max_change(&prev, &next);
        prev = next;
        if change < AMPLITUDE_TOLERANCE * 1e-2 {
            break;
        }
    }
    Distribution::from_fn(t, Protocol::Quantum1d, |x| {
        let (u, d) = prev[((x + t as i64) / 2) as usize];
        u.norm_sqr() + d.norm_sqr()
    })
}

/// Largest relative difference `|Pa - Pb| / max(Pa, Pb)` over positions
/// where both values exceed `floor`.
pub fn compare(a: &Distribution, b: &Distribution, floor: f64) -> Result<f64> {
    if a.n_steps() != b.n_steps() {
        return Err(WalkError::GridMismatch(format!("n_steps {} vs {}", a.n_steps(), b.n_steps())));
    }
    if a.protocol().is_2d() != b.protocol().is_2d() {
        return Err(WalkError::GridMismatch(format!(
            "protocols {} and {} are not comparable",
            a.protocol(),
            b.protocol()
        )));
    }
    let (a, b) = (a.live_only(), b.live_only());
    if a.positions() != b.positions() {
        return Err(WalkError::GridMismatch("position sets differ".into()));
    }
    Ok(a.probs()
        .iter()
        .zip(b.probs())
        .filter(|(p, q)| p.min(**q) > floor)
        .map(|(p, q)| (p - q).abs() / p.max(*q))
        .fold(0.0, f64::max))
}
