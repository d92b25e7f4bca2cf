//! Linearised least-squares fits shared by the real-space, spectral and 2D
//! analyses. Every model is reduced to a straight line in transformed
//! coordinates, so fits are closed-form and deterministic.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WalkError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// `P0 + a (b - x)^(-c)`
    OuterAlgebraic,
    /// `P0 + a x^c`
    CentralQuadratic,
    /// `P0 + a exp(-d (x - b)^1.5 / sqrt N)`
    Tail,
    /// `P0 + A exp(-(x - b)^2 / (2 sigma^2))`
    Gaussian,
    /// `(A / sqrt N) (k / pi)^(-c)`
    FourierSmallK,
    /// `(A / sqrt N) (1 - k / pi)^c`
    FourierLargeK,
    /// `a1 / N^2 + (a2 / N^d) (b - x)^(-c)`
    Slice2d,
    /// `prefactor * x^exponent`
    PowerLaw,
}

impl Model {
    pub fn tag(self) -> &'static str {
        match self {
            Model::OuterAlgebraic => "outer-algebraic",
            Model::CentralQuadratic => "central-quadratic",
            Model::Tail => "tail",
            Model::Gaussian => "gaussian",
            Model::FourierSmallK => "fourier-small-k",
            Model::FourierLargeK => "fourier-large-k",
            Model::Slice2d => "slice-2d",
            Model::PowerLaw => "power-law",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Outcome of one fit. `residual` is the root-mean-square relative deviation
/// of the model from the data over the points used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub params: BTreeMap<String, f64>,
    pub window: (f64, f64),
    pub residual: f64,
    pub points: usize,
}

impl FitResult {
    pub fn new(model: Model, window: (f64, f64)) -> Self {
        FitResult { model, params: BTreeMap::new(), window, residual: 0.0, points: 0 }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Parameter by name; panics if the model never sets it.
    pub fn param(&self, name: &str) -> f64 {
        match self.params.get(name) {
            Some(v) => *v,
            None => panic!("fit {} has no parameter `{name}`", self.model),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Weighted least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Least-squares line through `(x, y)`; `w` are optional non-negative weights.
pub fn line_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Result<Line> {
    if x.len() != y.len() || w.is_some_and(|w| w.len() != x.len()) {
        return Err(WalkError::InsufficientData("mismatched fit arrays".into()));
    }
    if x.len() < 2 {
        return Err(WalkError::InsufficientData(format!("{} points, need at least 2", x.len())));
    }
    let weight = |i: usize| w.map_or(1.0, |w| w[i]);
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sw += weight(i);
        sx += weight(i) * x[i];
        sy += weight(i) * y[i];
    }
    let (mx, my) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..x.len() {
        let dx = x[i] - mx;
        sxx += weight(i) * dx * dx;
        sxy += weight(i) * dx * (y[i] - my);
    }
    if !(sxx > 0.0) {
        return Err(WalkError::InsufficientData("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok(Line { slope, intercept: my - slope * mx })
}

/// Least-squares quadratic `y = c0 + c1 x + c2 x^2` with optional weights.
pub fn quadratic_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Result<[f64; 3]> {
    if x.len() < 3 {
        return Err(WalkError::InsufficientData(format!("{} points, need at least 3", x.len())));
    }
    // Centre and scale the abscissa for conditioning.
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let sx = x.iter().map(|v| (v - mx).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for i in 0..x.len() {
        let wi = w.map_or(1.0, |w| w[i]);
        let u = (x[i] - mx) / sx;
        let basis = [1.0, u, u * u];
        for r in 0..3 {
            b[r] += wi * basis[r] * y[i];
            for c in 0..3 {
                a[r][c] += wi * basis[r] * basis[c];
            }
        }
    }
    let [d0, d1, d2] = solve3(a, b)?;
    // Undo the change of variable u = (x - mx) / sx.
    let c2 = d2 / (sx * sx);
    let c1 = d1 / sx - 2.0 * c2 * mx;
    let c0 = d0 - d1 * mx / sx + c2 * mx * mx;
    Ok([c0, c1, c2])
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return Err(WalkError::InsufficientData("singular normal equations".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut out = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * out[c]).sum();
        out[r] = (b[r] - s) / a[r][r];
    }
    Ok(out)
}

/// Root-mean-square of `(model - data) / data`.
pub fn rms_relative(data: &[f64], model: impl Fn(usize) -> f64) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let ss: f64 = data.iter().enumerate().map(|(i, d)| ((model(i) - d) / d).powi(2)).sum();
    (ss / data.len() as f64).sqrt()
}

fn require_positive(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(*v > 0.0)) {
        Some(i) => Err(WalkError::NonPositive { index: i, value: values[i] }),
        None => Ok(()),
    }
}

fn window_of(x: &[f64]) -> (f64, f64) {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Fit `y = prefactor * x^exponent` by regression of `ln y` on `ln x`.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(WalkError::InsufficientData(format!("power law needs at least 3 points, got {}", points.len())));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    require_positive(&x)?;
    require_positive(&y)?;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let line = line_fit(&lx, &ly, None)?;
    let prefactor = line.intercept.exp();
    let mut fit =
        FitResult::new(Model::PowerLaw, window_of(&x)).with("exponent", line.slope).with("prefactor", prefactor);
    fit.residual = rms_relative(&y, |i| prefactor * x[i].powf(line.slope));
    fit.points = points.len();
    Ok(fit)
}

/// Fit `a (b - x)^(-c)` to `y - p0` with `b` and `p0` fixed.
pub fn inverse_power_fit(x: &[f64], y: &[f64], b: f64, p0: f64, model: Model) -> Result<FitResult> {
    let dist: Vec<f64> = x.iter().map(|v| b - v).collect();
    let shifted: Vec<f64> = y.iter().map(|v| v - p0).collect();
    require_positive(&dist)?;
    require_positive(&shifted)?;
    let lx: Vec<f64> = dist.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = shifted.iter().map(|v| v.ln()).collect();
    let line = line_fit(&lx, &ly, None)?;
    let (a, c) = (line.intercept.exp(), -line.slope);
    let mut fit = FitResult::new(model, window_of(x)).with("a", a).with("c", c).with("b", b).with("P0", p0);
    fit.residual = rms_relative(y, |i| p0 + a * dist[i].powf(-c));
    fit.points = x.len();
    Ok(fit)
}

/// Profile the offset of `y = P0 + a u^s` over `P0 in [lo, hi)`: for each
/// trial `P0` the exponent and amplitude follow from a log-log line, and the
/// `P0` minimising the relative residual is kept. Returns `(P0, a, s, residual)`.
fn profile_offset(u: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<(f64, f64, f64, f64)> {
    let lu: Vec<f64> = u.iter().map(|v| v.ln()).collect();
    let eval = |p0: f64| -> Result<(f64, f64, f64)> {
        let ly: Vec<f64> = y.iter().map(|v| (v - p0).ln()).collect();
        let line = line_fit(&lu, &ly, None)?;
        let a = line.intercept.exp();
        let r = rms_relative(y, |i| p0 + a * u[i].powf(line.slope));
        Ok((r, a, line.slope))
    };
    // Coarse scan, then golden-section refinement around the best cell.
    const SCAN: usize = 256;
    let step = (hi - lo) / SCAN as f64;
    let mut best = (f64::INFINITY, 0usize);
    for s in 0..SCAN {
        let r = eval(lo + step * s as f64)?.0;
        if r < best.0 {
            best = (r, s);
        }
    }
    let (mut a, mut b) = (lo + step * (best.1 as f64 - 1.0).max(0.0), (lo + step * (best.1 + 1) as f64).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut m1, mut m2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (eval(m1)?.0, eval(m2)?.0);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if b - a <= 1e-15 * scale {
            break;
        }
        if f1 <= f2 {
            b = m2;
            m2 = m1;
            f2 = f1;
            m1 = b - g * (b - a);
            f1 = eval(m1)?.0;
        } else {
            a = m1;
            m1 = m2;
            f1 = f2;
            m2 = a + g * (b - a);
            f2 = eval(m2)?.0;
        }
    }
    let p0 = 0.5 * (a + b);
    let (r, amp, slope) = eval(p0)?;
    Ok((p0, amp, slope, r))
}

/// Fit `P0 + a x^c` with all three parameters free; `P0` is profiled over
/// `[0, min y)`.
pub fn offset_power_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    require_positive(x)?;
    require_positive(y)?;
    if x.len() < 3 {
        return Err(WalkError::InsufficientData(format!("{} points, need at least 3", x.len())));
    }
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let (p0, a, c, r) = profile_offset(x, y, 0.0, ymin * (1.0 - 1e-9))?;
    let mut fit = FitResult::new(Model::CentralQuadratic, window_of(x)).with("P0", p0).with("a", a).with("c", c);
    fit.residual = r;
    fit.points = x.len();
    Ok(fit)
}

/// Fit `P0 + a (b - x)^(-c)` with `b` fixed and `P0` profiled over
/// `[-max y, min y)`.
pub fn offset_inverse_power_fit(x: &[f64], y: &[f64], b: f64, model: Model) -> Result<FitResult> {
    let dist: Vec<f64> = x.iter().map(|v| b - v).collect();
    require_positive(&dist)?;
    require_positive(y)?;
    if x.len() < 3 {
        return Err(WalkError::InsufficientData(format!("{} points, need at least 3", x.len())));
    }
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = y.iter().copied().fold(0.0, f64::max);
    let (p0, a, slope, r) = profile_offset(&dist, y, -ymax, ymin * (1.0 - 1e-9))?;
    let mut fit = FitResult::new(model, window_of(x)).with("P0", p0).with("a", a).with("c", -slope).with("b", b);
    fit.residual = r;
    fit.points = x.len();
    Ok(fit)
}

/// Fit `a exp(-d (x - b)^1.5 / sqrt n)` with `b` fixed by regressing `ln y`
/// on `(x - b)^1.5 / sqrt n`.
pub fn tail_fit(x: &[f64], y: &[f64], b: f64, n: f64) -> Result<FitResult> {
    require_positive(y)?;
    let u: Vec<f64> = x.iter().map(|v| (v - b).max(0.0).powf(1.5) / n.sqrt()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let line = line_fit(&u, &ly, None)?;
    let (a, d) = (line.intercept.exp(), -line.slope);
    let mut fit = FitResult::new(Model::Tail, window_of(x)).with("a", a).with("d", d).with("b", b).with("P0", 0.0);
    // Relative residual in log space: the data span hundreds of decades.
    let ss: f64 = ly.iter().zip(&u).map(|(l, u)| (line.at(*u) - l).powi(2)).sum();
    fit.residual = (ss / ly.len() as f64).sqrt();
    fit.points = x.len();
    Ok(fit)
}

/// Fit `A exp(-(x - b)^2 / (2 sigma^2))` by weighted quadratic regression of
/// `ln y`. Weights `y^2` make the log-space problem approximate the
/// linear-space least squares, so sparse tails do not dominate. With
/// `centre = Some(b)` the centre is pinned and only `A`, `sigma` are fitted.
pub fn gaussian_fit(x: &[f64], y: &[f64], centre: Option<f64>) -> Result<FitResult> {
    let pairs: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, v)| **v > 0.0).map(|(a, b)| (*a, *b)).collect();
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let w: Vec<f64> = ys.iter().map(|v| v * v).collect();
    let (amp, b, sigma) = match centre {
        Some(b) => {
            let u: Vec<f64> = xs.iter().map(|v| (v - b).powi(2)).collect();
            let line = line_fit(&u, &ly, Some(&w))?;
            if !(line.slope < 0.0) {
                return Err(WalkError::InsufficientData("data are not peaked".into()));
            }
            (line.intercept.exp(), b, (-0.5 / line.slope).sqrt())
        }
        None => {
            let [c0, c1, c2] = quadratic_fit(&xs, &ly, Some(&w))?;
            if !(c2 < 0.0) {
                return Err(WalkError::InsufficientData("data are not peaked".into()));
            }
            let b = -c1 / (2.0 * c2);
            ((c0 - c1 * c1 / (4.0 * c2)).exp(), b, (-0.5 / c2).sqrt())
        }
    };
    let mut fit = FitResult::new(Model::Gaussian, window_of(&xs))
        .with("A", amp)
        .with("b", b)
        .with("sigma", sigma)
        .with("P0", 0.0);
    fit.residual = rms_relative(&ys, |i| amp * (-(xs[i] - b).powi(2) / (2.0 * sigma * sigma)).exp());
    fit.points = xs.len();
    Ok(fit)
}
