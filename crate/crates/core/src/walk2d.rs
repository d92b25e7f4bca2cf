//! Two-dimensional walks: the tensor-product Hadamard walk, the alternate
//! walk (AQW) and the Grover walk, plus slices, edge path calculus and the
//! Grover dispersion relation.
//!
//! All three engines store only live sites. After `s` moves along an axis
//! the live coordinates are `2 i - s`, `i = 0..=s`, so an `n`-step grid holds
//! `(n + 1)^2` sites and every live site satisfies `x = y = n (mod 2)`.
//! Tensor and Grover components move diagonally to `(x +- 1, y +- 1)`; the
//! AQW cycle is coin, x-shift, coin, y-shift.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::Matrix4;
use num_complex::{Complex, Complex64};
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{extract_envelope, total_peaks, Side};
use crate::classical::{binomial_pmf_half, pascal_row};
use crate::distribution::{Distribution, Distribution2D, Parity, Protocol, SliceKind};
use crate::error::{Result, WalkError};
use crate::fit::{gaussian_fit, line_fit, offset_inverse_power_fit, power_law_fit, FitResult, Model};
use crate::walk1d::drift_tolerance;

/// Largest cycle count for [`exact_walk`].
pub const EXACT_2D_MAX: usize = 12;

/// Largest `n` for which edge numerators are returned as integers.
pub const EDGE_EXACT_MAX: usize = 32;

/// Tolerance for `|lambda| = 1` and for matching closed-form eigenvalues.
pub const EIGEN_TOLERANCE: f64 = 1e-12;

/// Ring operations needed by the step kernel; implemented by `Complex64`
/// for simulation and `Complex<i64>` for exact runs.
pub trait Amplitude:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
}

impl<T> Amplitude for T where T: Copy + Default + Send + Sync + Add<Output = T> + Sub<Output = T> + Mul<Output = T> {}

/// Displacement of one coin component during a shift; `0` on an axis the
/// shift leaves alone. Within one shift every component moves along the
/// same axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Move {
    dx: i8,
    dy: i8,
}

const DIAGONAL: [Move; 4] =
    [Move { dx: 1, dy: 1 }, Move { dx: 1, dy: -1 }, Move { dx: -1, dy: 1 }, Move { dx: -1, dy: -1 }];

// The lower coin component moves toward +x (+y), so the edge x = n is
// reached by the lower-row projector of the coin.
const AQW_X: [Move; 2] = [Move { dx: -1, dy: 0 }, Move { dx: 1, dy: 0 }];
const AQW_Y: [Move; 2] = [Move { dx: 0, dy: -1 }, Move { dx: 0, dy: 1 }];

/// Initial Grover coin, indexed like [`DIAGONAL`]: `+1/2` on the pair
/// moving along `y = x`, `-1/2` on the pair moving along `y = -x`.
const GROVER_SIGNS: [i64; 4] = [1, -1, -1, 1];

#[derive(Clone, Debug)]
struct Lattice<T> {
    sx: usize,
    sy: usize,
    comps: usize,
    data: Vec<T>,
}

impl<T: Amplitude> Lattice<T> {
    fn origin(initial: Vec<T>) -> Self {
        Lattice { sx: 0, sy: 0, comps: initial.len(), data: initial }
    }

    fn wx(&self) -> usize {
        self.sx + 1
    }

    fn wy(&self) -> usize {
        self.sy + 1
    }

    /// Coin every site with `coin` (row-major), then move component `k` by
    /// `moves[k]`. Gathers per destination row, so rows are independent.
    fn coin_shift(&self, coin: &[T], moves: &[Move]) -> Self {
        let c = self.comps;
        let sx = self.sx + usize::from(moves[0].dx != 0);
        let sy = self.sy + usize::from(moves[0].dy != 0);
        let (wx, wy) = (sx + 1, sy + 1);
        let (owx, owy) = (self.wx(), self.wy());
        let mut data = vec![T::default(); wx * wy * c];
        data.par_chunks_mut(wx * c).enumerate().for_each(|(j, row)| {
            for (k, m) in moves.iter().enumerate() {
                let Some(sj) = j.checked_sub(usize::from(m.dy > 0)).filter(|&sj| sj < owy) else {
                    continue;
                };
                let di = usize::from(m.dx > 0);
                let coin_row = &coin[k * c..(k + 1) * c];
                for i in di..(owx + di).min(wx) {
                    let src = &self.data[(sj * owx + i - di) * c..][..c];
                    let mut acc = T::default();
                    for (a, b) in coin_row.iter().zip(src) {
                        acc = acc + *a * *b;
                    }
                    row[i * c + k] = acc;
                }
            }
        });
        Lattice { sx, sy, comps: c, data }
    }
}

struct Scheme<T> {
    initial: Vec<T>,
    stages: Vec<(Vec<T>, &'static [Move])>,
}

/// Integer coins and initial states; the real walk divides each coin by
/// `coin_scale` and the initial state by `initial_scale`.
struct IntegerScheme {
    initial: Vec<Complex<i64>>,
    stages: Vec<(Vec<i64>, &'static [Move])>,
    coin_scale: f64,
    initial_scale: f64,
}

fn integer_scheme(protocol: Protocol) -> Result<IntegerScheme> {
    let h = [1i64, 1, 1, -1];
    let c = |re: i64, im: i64| Complex::new(re, im);
    Ok(match protocol {
        Protocol::Tensor2d => {
            let mut hh = vec![0i64; 16];
            for (r, v) in hh.iter_mut().enumerate() {
                let (a, b, a2, b2) = (r / 8, (r / 4) % 2, (r % 4) / 2, r % 2);
                *v = h[a * 2 + a2] * h[b * 2 + b2];
            }
            IntegerScheme {
                initial: vec![c(1, 0), c(0, 1), c(0, 1), c(-1, 0)],
                stages: vec![(hh, &DIAGONAL)],
                coin_scale: 2.0,
                initial_scale: 2.0,
            }
        }
        Protocol::Aqw2d => IntegerScheme {
            initial: vec![c(1, 0), c(0, 1)],
            stages: vec![(h.to_vec(), &AQW_X), (h.to_vec(), &AQW_Y)],
            coin_scale: std::f64::consts::SQRT_2,
            initial_scale: std::f64::consts::SQRT_2,
        },
        Protocol::Grover2d => {
            // G = J / 2 - I, scaled by 2.
            let g = (0..16).map(|r| if r / 4 == r % 4 { -1 } else { 1 }).collect();
            IntegerScheme {
                initial: GROVER_SIGNS.iter().map(|&s| c(s, 0)).collect(),
                stages: vec![(g, &DIAGONAL)],
                coin_scale: 2.0,
                initial_scale: 2.0,
            }
        }
        other => return Err(WalkError::UnsupportedProtocol(other.tag().to_string())),
    })
}

fn float_scheme(protocol: Protocol) -> Result<Scheme<Complex64>> {
    let s = integer_scheme(protocol)?;
    let f = |z: Complex<i64>, scale: f64| Complex64::new(z.re as f64 / scale, z.im as f64 / scale);
    Ok(Scheme {
        initial: s.initial.iter().map(|&z| f(z, s.initial_scale)).collect(),
        stages: s
            .stages
            .into_iter()
            .map(|(coin, mv)| (coin.iter().map(|&v| Complex64::new(v as f64 / s.coin_scale, 0.0)).collect(), mv))
            .collect(),
    })
}

/// Live-site amplitudes of a 2D walk.
#[derive(Clone, Debug)]
pub struct WalkState2D {
    protocol: Protocol,
    t: usize,
    lattice: Lattice<Complex64>,
    stages: Vec<(Vec<Complex64>, &'static [Move])>,
}

impl WalkState2D {
    /// Walker at the origin in the protocol's initial coin state.
    pub fn new(protocol: Protocol) -> Result<Self> {
        let s = float_scheme(protocol)?;
        Ok(WalkState2D { protocol, t: 0, lattice: Lattice::origin(s.initial), stages: s.stages })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn coin_dim(&self) -> usize {
        self.lattice.comps
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    /// One full step (tensor, Grover) or cycle (AQW).
    pub fn step(&mut self) {
        for (coin, moves) in &self.stages {
            self.lattice = self.lattice.coin_shift(coin, moves);
        }
        self.t += 1;
    }

    pub fn advance_to(&mut self, t: usize) {
        while self.t < t {
            self.step();
        }
    }

    pub fn total_probability(&self) -> f64 {
        crate::sum::pairwise_sum_by(self.lattice.data.len(), &|i| self.lattice.data[i].norm_sqr())
    }

    pub fn probability(&self) -> Distribution2D {
        let n = self.t;
        let w = 2 * n + 1;
        let l = &self.lattice;
        let mut probs = vec![0.0; w * w];
        for j in 0..l.wy() {
            for i in 0..l.wx() {
                let p = l.data[(j * l.wx() + i) * l.comps..][..l.comps].iter().map(|a| a.norm_sqr()).sum();
                probs[2 * j * w + 2 * i] = p;
            }
        }
        Distribution2D::new(n, self.protocol, n as i64, probs).expect("grid sized from radius")
    }
}

/// Run to `n`, returning the distribution at every checkpoint.
pub fn evolve2d(
    protocol: Protocol,
    n: usize,
    checkpoints: &BTreeSet<usize>,
) -> Result<BTreeMap<usize, Distribution2D>> {
    if let Some(&c) = checkpoints.iter().find(|&&c| c > n) {
        return Err(WalkError::CheckpointOutOfRange { checkpoint: c, n });
    }
    let mut w = WalkState2D::new(protocol)?;
    let mut out = BTreeMap::new();
    for &c in checkpoints.iter().chain(std::iter::once(&n)) {
        w.advance_to(c);
        let total = w.total_probability();
        if (total - 1.0).abs() > drift_tolerance(c) {
            return Err(WalkError::NotNormalized { total });
        }
        out.entry(c).or_insert_with(|| w.probability());
    }
    Ok(out)
}

fn run(protocol: Protocol, n: usize) -> Distribution2D {
    let mut w = WalkState2D::new(protocol).expect("2D protocol");
    w.advance_to(n);
    w.probability()
}

/// Hadamard coin on each axis, diagonal shifts, initial coin
/// `(|up> + i|down>) (x) (|up> + i|down>) / 2`.
pub fn tensor_walk(n: usize) -> Distribution2D {
    run(Protocol::Tensor2d, n)
}

/// `n` cycles of coin, x-shift, coin, y-shift from `(|up> + i|down>) / sqrt 2`.
pub fn aqw_walk(n: usize) -> Distribution2D {
    run(Protocol::Aqw2d, n)
}

/// Grover coin `J/2 - I` with diagonal shifts from `(1, -1, -1, 1) / 2`.
pub fn grover_walk(n: usize) -> Distribution2D {
    run(Protocol::Grover2d, n)
}

/// Exact probabilities `numerators / denominator` on the full grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactGrid {
    pub n: usize,
    pub denominator: u128,
    numerators: Vec<u128>,
}

impl ExactGrid {
    pub fn get(&self, x: i64, y: i64) -> u128 {
        let n = self.n as i64;
        if x.abs() > n || y.abs() > n {
            return 0;
        }
        let w = 2 * n + 1;
        self.numerators[((y + n) * w + x + n) as usize]
    }

    /// Rows `y = n, n - 2, ..., -n` over live `x`, rescaled to `denominator`
    /// when the division is exact.
    pub fn live_rows(&self, denominator: u128) -> Option<Vec<Vec<u128>>> {
        let n = self.n as i64;
        let mut rows = Vec::new();
        for y in (-n..=n).rev().step_by(2) {
            let mut row = Vec::new();
            for x in (-n..=n).step_by(2) {
                let v = self.get(x, y) * denominator;
                if v % self.denominator != 0 {
                    return None;
                }
                row.push(v / self.denominator);
            }
            rows.push(row);
        }
        Some(rows)
    }
}

/// Integer-arithmetic run for `n <= EXACT_2D_MAX`.
pub fn exact_walk(protocol: Protocol, n: usize) -> Result<ExactGrid> {
    if n > EXACT_2D_MAX {
        return Err(WalkError::ExactBoundExceeded { n, max: EXACT_2D_MAX });
    }
    let s = integer_scheme(protocol)?;
    let stages: Vec<(Vec<Complex<i64>>, &[Move])> =
        s.stages.iter().map(|(c, m)| (c.iter().map(|&v| Complex::new(v, 0)).collect(), *m)).collect();
    let mut l = Lattice::origin(s.initial.clone());
    for _ in 0..n {
        for (coin, moves) in &stages {
            l = l.coin_shift(coin, moves);
        }
    }
    // P = |z|^2 / (initial_scale^2 coin_scale^(2 n stages)).
    let denom = (s.initial_scale * s.initial_scale).round() as u128
        * ((s.coin_scale * s.coin_scale).round() as u128).pow((n * stages.len()) as u32);
    let w = 2 * n + 1;
    let mut numerators = vec![0u128; w * w];
    for j in 0..l.wy() {
        for i in 0..l.wx() {
            let z = &l.data[(j * l.wx() + i) * l.comps..][..l.comps];
            numerators[2 * j * w + 2 * i] = z.iter().map(|a| (a.re * a.re + a.im * a.im) as u128).sum();
        }
    }
    Ok(ExactGrid { n, denominator: denom, numerators })
}

/// Nearest live coordinate to `target` in an `n`-step grid; ties go up.
fn nearest_live(target: f64, n: usize) -> i64 {
    let r = target.round() as i64;
    if (r - n as i64).rem_euclid(2) == 0 {
        return r;
    }
    if target > r as f64 {
        r + 1
    } else if target < r as f64 {
        r - 1
    } else {
        r + 1
    }
}

/// Row index of slice C: `0.7 n` for the tensor walk, the edge `n` otherwise.
pub fn slice_c_row(protocol: Protocol, n: usize) -> Result<i64> {
    match protocol {
        Protocol::Tensor2d => Ok(nearest_live(0.7 * n as f64, n).min(n as i64)),
        Protocol::Aqw2d | Protocol::Grover2d => Ok(n as i64),
        other => Err(WalkError::UnsupportedProtocol(other.tag().to_string())),
    }
}

/// One-dimensional cut through a 2D distribution.
///
/// A is `P(x, y0)` with `y0` the live row nearest 0 (`y0 = n mod 2`), B is
/// `P(x, x)`, C is `P(x_c, y)` as a function of `y` at the row from
/// [`slice_c_row`].
pub fn slice(d: &Distribution2D, which: SliceKind) -> Result<Distribution> {
    let n = d.n_steps();
    let xc = slice_c_row(d.protocol(), n)?;
    let y0 = (n % 2) as i64;
    let positions: Vec<i64> = (0..=n as i64).map(|i| 2 * i - n as i64).collect();
    let probs = positions
        .iter()
        .map(|&u| match which {
            SliceKind::A => d.get(u, y0),
            SliceKind::B => d.get(u, u),
            SliceKind::C => d.get(xc, u),
        })
        .collect();
    Ok(Distribution::new(n, d.protocol(), Parity::of(n), positions, probs)?.with_slice(which))
}

/// Slice envelope families with their fixed pole `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceFit {
    /// Tensor walk, axis.
    A1,
    /// Tensor walk, diagonal.
    B1,
    /// AQW, axis.
    A2,
    /// AQW, diagonal.
    B2,
}

impl SliceFit {
    pub fn pole(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            SliceFit::A1 | SliceFit::B1 => 0.707 * nf,
            SliceFit::A2 => nf,
            SliceFit::B2 => 0.8 * nf,
        }
    }

    pub fn slice(self) -> SliceKind {
        match self {
            SliceFit::A1 | SliceFit::A2 => SliceKind::A,
            SliceFit::B1 | SliceFit::B2 => SliceKind::B,
        }
    }
}

/// Lower edge of the slice fit window as a fraction of `b`.
pub const SLICE_FIT_START: f64 = 0.5;

/// `P_e = P0 + a (b - x)^(-c)` over upper-envelope maxima in the outer half
/// `b / 2 <= x < b`, with the offset `P0 = a1 / N^2` fitted.
pub fn fit_slice_envelope(s: &Distribution, which: SliceFit) -> Result<FitResult> {
    let n = s.n_steps();
    let b = which.pole(n);
    let lo = (SLICE_FIT_START * b).ceil() as i64;
    let hi = b.ceil() as i64 - 1;
    let e = extract_envelope(s, Side::Upper, lo, hi)?;
    let (x, y): (Vec<f64>, Vec<f64>) = e.points.iter().filter(|p| (p.0 as f64) < b).map(|p| (p.0 as f64, p.1)).unzip();
    offset_inverse_power_fit(&x, &y, b, Model::Slice2d)
}

/// `d` in `a(N) ~ N^(-d)` from slice fits at several `N`.
pub fn slice_amplitude_exponent(fits: &[(usize, FitResult)]) -> Result<f64> {
    let ln: Vec<f64> = fits.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let la: Vec<f64> = fits.iter().map(|(_, f)| f.param("a").ln()).collect();
    Ok(-line_fit(&ln, &la, None)?.slope)
}

/// Peaks along the diagonal slice, one wing.
pub fn diagonal_peak_count(d: &Distribution2D) -> Result<usize> {
    Ok(total_peaks(&slice(d, SliceKind::B)?))
}

/// `2x2` matrix of exact rationals.
pub type RationalMatrix = [[Ratio<i64>; 2]; 2];

fn mat_mul(a: &RationalMatrix, b: &RationalMatrix) -> RationalMatrix {
    let mut out = [[Ratio::from_integer(0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_scale(a: &RationalMatrix, s: Ratio<i64>) -> RationalMatrix {
    a.map(|row| row.map(|v| v * s))
}

/// Edge matrices `R = P_y Q_x` and `S = Q_y Q_x`, where the Hadamard coin
/// splits as `P + Q` into its upper and lower rows.
///
/// `P` and `Q` carry a factor `1/sqrt 2`; each product carries `1/2`.
pub fn edge_step_matrices() -> (RationalMatrix, RationalMatrix) {
    let int = |m: [[i64; 2]; 2]| m.map(|row| row.map(Ratio::from_integer));
    let p = int([[1, 1], [0, 0]]);
    let q = int([[0, 0], [1, -1]]);
    let half = Ratio::new(1, 2);
    (mat_scale(&mat_mul(&p, &q), half), mat_scale(&mat_mul(&q, &q), half))
}

/// Reduce a product of `R`/`S` letters (leftmost applied last); returns the
/// exact matrix.
pub fn edge_path_product(word: &[bool]) -> RationalMatrix {
    let (r, s) = edge_step_matrices();
    let one = Ratio::from_integer(1);
    let zero = Ratio::from_integer(0);
    word.iter().fold([[one, zero], [zero, one]], |acc, &is_r| mat_mul(&acc, if is_r { &r } else { &s }))
}

/// Edge row `x = n` of the AQW distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDistribution {
    pub n: usize,
    pub positions: Vec<i64>,
    pub probs: Vec<f64>,
    /// `4^n P` as integers, for `n <= EDGE_EXACT_MAX`.
    pub numerators: Option<Vec<u128>>,
}

impl EdgeDistribution {
    pub fn to_distribution(&self) -> Result<Distribution> {
        Distribution::new(self.n, Protocol::Aqw2d, Parity::of(self.n), self.positions.clone(), self.probs.clone())
            .map(|d| d.with_slice(SliceKind::C))
    }
}

/// `P(n, y) = (C(n-1, j-1)^2 + C(n-1, j)^2) / 4^n` with `j = (n - y) / 2`.
pub fn edge_distribution_analytic(n: usize) -> Result<EdgeDistribution> {
    if n == 0 {
        return Err(WalkError::InsufficientData("edge distribution needs n >= 1".into()));
    }
    let positions: Vec<i64> = (0..=n as i64).map(|i| 2 * i - n as i64).collect();
    let js = positions.iter().map(|&y| ((n as i64 - y) / 2) as usize);
    if n <= EDGE_EXACT_MAX {
        let row = pascal_row(n - 1);
        let c = |j: Option<usize>| j.and_then(|j| row.get(j)).map_or(0, |v| v * v);
        let numerators: Vec<u128> = js.map(|j| c(j.checked_sub(1)) + c(Some(j))).collect();
        let scale = 4f64.powi(n as i32);
        let probs = numerators.iter().map(|&v| v as f64 / scale).collect();
        return Ok(EdgeDistribution { n, positions, probs, numerators: Some(numerators) });
    }
    // C(m, j)^2 / 4^(m+1) = pmf(m, j)^2 / 4.
    let m = (n - 1) as u64;
    let sq = |j: Option<usize>| j.filter(|&j| j as u64 <= m).map_or(0.0, |j| binomial_pmf_half(m, j as u64).powi(2));
    let probs = js.map(|j| 0.25 * (sq(j.checked_sub(1)) + sq(Some(j)))).collect();
    Ok(EdgeDistribution { n, positions, probs, numerators: None })
}

/// Max `|P_sim(n, y) - P_exact(n, y)|` over the edge row.
pub fn edge_matches_simulation(n: usize) -> Result<f64> {
    let e = edge_distribution_analytic(n)?;
    let d = aqw_walk(n);
    Ok(e.positions.iter().zip(&e.probs).map(|(&y, p)| (d.get(n as i64, y) - p).abs()).fold(0.0, f64::max))
}

/// Gaussian fits (`P0 = b = 0`) of the edge row for each `n`, and power laws
/// `sigma ~ n^sigma_exponent`, `A ~ n^amplitude_exponent`.
pub fn fit_edge_gaussian(ns: &[usize]) -> Result<FitResult> {
    let lo = ns.iter().copied().min().unwrap_or(0);
    let hi = ns.iter().copied().max().unwrap_or(0);
    if ns.len() < 3 || lo == 0 || hi < 10 * lo {
        return Err(WalkError::InsufficientData(format!("edge fits need 3 or more N over a decade, got {ns:?}")));
    }
    let mut out = FitResult::new(Model::Gaussian, (lo as f64, hi as f64));
    let (mut sig, mut amp) = (Vec::new(), Vec::new());
    for &n in ns {
        let e = edge_distribution_analytic(n)?;
        let x: Vec<f64> = e.positions.iter().map(|&v| v as f64).collect();
        let f = gaussian_fit(&x, &e.probs, Some(0.0))?;
        out.params.insert(format!("sigma@{n}"), f.param("sigma"));
        out.params.insert(format!("A@{n}"), f.param("A"));
        out.residual = out.residual.max(f.residual);
        out.points += f.points;
        sig.push((n as f64, f.param("sigma")));
        amp.push((n as f64, f.param("A")));
    }
    let s = power_law_fit(&sig)?;
    let a = power_law_fit(&amp)?;
    out.params.insert("sigma_exponent".into(), s.param("exponent"));
    out.params.insert("sigma_prefactor".into(), s.param("prefactor"));
    out.params.insert("amplitude_exponent".into(), a.param("exponent"));
    out.params.insert("amplitude_prefactor".into(), a.param("prefactor"));
    Ok(out)
}

/// Eigen-decomposition of the momentum-space Grover operator at `(k1, k2)`.
///
/// Eigenvalues are ordered `lambda^{1+}, lambda^{1-}, lambda^{2+},
/// lambda^{2-}` by matching against the closed forms `+-1` and
/// `-c +- i sqrt(1 - c^2)`, `c = cos k1 cos k2`; `omegas` are their
/// arguments in `(-pi, pi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub k1: f64,
    pub k2: f64,
    pub eigenvalues: [Complex64; 4],
    pub omegas: [f64; 4],
    /// Max distance between numeric and closed-form eigenvalues.
    pub closed_form_deviation: f64,
}

/// Closed-form eigenvalues in the [`DispersionPoint`] order.
pub fn grover_closed_form(k1: f64, k2: f64) -> [Complex64; 4] {
    let c = k1.cos() * k2.cos();
    let s = (1.0 - c * c).max(0.0).sqrt();
    [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(-c, s), Complex64::new(-c, -s)]
}

/// `U(k) = D(k) G` with `D` the diagonal of shift phases `e^{-i (dx k1 + dy k2)}`.
pub fn grover_momentum_operator(k1: f64, k2: f64) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| {
        let m = DIAGONAL[r];
        let phase = Complex64::from_polar(1.0, -(m.dx as f64 * k1 + m.dy as f64 * k2));
        let g = if r == c { -0.5 } else { 0.5 };
        phase * g
    })
}

pub fn grover_dispersion(k1: f64, k2: f64) -> Result<DispersionPoint> {
    let u = grover_momentum_operator(k1, k2);
    let numeric: Vec<Complex64> = nalgebra::Schur::try_new(u, 1e-15, 10_000)
        .ok_or_else(|| WalkError::Eigen(format!("Schur iteration did not converge at ({k1}, {k2})")))?
        .eigenvalues()
        .ok_or_else(|| WalkError::Eigen(format!("no eigenvalues at ({k1}, {k2})")))?
        .iter()
        .copied()
        .collect();
    let closed = grover_closed_form(k1, k2);
    // Greedy nearest match; closed forms may coincide, so used values are removed.
    let mut pool = numeric;
    let mut eigenvalues = [Complex64::default(); 4];
    let mut deviation = 0.0f64;
    for (slot, target) in eigenvalues.iter_mut().zip(&closed) {
        let (i, d) = pool
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("four eigenvalues");
        *slot = pool.swap_remove(i);
        deviation = deviation.max(d);
    }
    Ok(DispersionPoint { k1, k2, omegas: eigenvalues.map(|z| z.arg()), eigenvalues, closed_form_deviation: deviation })
}

/// `omega^{2+-} = pi -+ (cos k1 + cos k2) / 2`, wrapped to `(-pi, pi]`.
pub fn quoted_omega2(k1: f64, k2: f64) -> [f64; 2] {
    let h = 0.5 * (k1.cos() + k2.cos());
    [wrap(PI - h), wrap(PI + h)]
}

fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Max angular distance between `arg lambda^{2+-}` and [`quoted_omega2`] on
/// a `g x g` grid over `(-pi, pi]^2`.
pub fn omega2_identity_deviation(g: usize) -> Result<f64> {
    let k = |i: usize| -PI + 2.0 * PI * (i + 1) as f64 / g as f64;
    let mut worst = 0.0f64;
    for i in 0..g {
        for j in 0..g {
            let p = grover_dispersion(k(i), k(j))?;
            let q = quoted_omega2(k(i), k(j));
            for (w, qw) in p.omegas[2..].iter().zip(q) {
                worst = worst.max(wrap(w - qw).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk1d;
    use proptest::prelude::*;

    const TABLE_IV_TENSOR_1D: [u128; 7] = [1, 18, 9, 8, 9, 18, 1];
    const TABLE_IV_AQW: [[u128; 7]; 7] = [
        [1, 26, 125, 200, 125, 26, 1],
        [26, 68, 50, 208, 50, 68, 26],
        [125, 50, 89, 40, 89, 50, 125],
        [200, 208, 40, 64, 40, 208, 200],
        [125, 50, 89, 40, 89, 50, 125],
        [26, 68, 50, 208, 50, 68, 26],
        [1, 26, 125, 200, 125, 26, 1],
    ];

    #[test]
    fn origin_is_a_delta() {
        for p in [Protocol::Tensor2d, Protocol::Aqw2d, Protocol::Grover2d] {
            let d = run(p, 0);
            assert_eq!(d.probs().len(), 1);
            assert!((d.get(0, 0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tensor_table_six() {
        let g = exact_walk(Protocol::Tensor2d, 6).unwrap();
        let rows = g.live_rows(4096).unwrap();
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert_eq!(*v, TABLE_IV_TENSOR_1D[r] * TABLE_IV_TENSOR_1D[c]);
            }
        }
        assert_eq!(g.get(-4, -4) * 4096 / g.denominator, 324);
    }

    #[test]
    fn aqw_table_six() {
        let rows = exact_walk(Protocol::Aqw2d, 6).unwrap().live_rows(4096).unwrap();
        for (row, want) in rows.iter().zip(TABLE_IV_AQW) {
            assert_eq!(row.as_slice(), want.as_slice());
        }
        let d = aqw_walk(6);
        assert!((d.get(0, 0) * 4096.0 - 64.0).abs() < 1e-12);
        assert!((d.get(6, 0) * 4096.0 - 200.0).abs() < 1e-12);
    }

    #[test]
    fn grover_table_six() {
        let rows = exact_walk(Protocol::Grover2d, 6).unwrap().live_rows(4096).unwrap();
        for (row, want) in rows.iter().zip(TABLE_IV_AQW) {
            assert_eq!(row.as_slice(), want.as_slice());
        }
    }

    #[test]
    fn exact_bound() {
        assert!(matches!(exact_walk(Protocol::Aqw2d, 13), Err(WalkError::ExactBoundExceeded { .. })));
        assert!(exact_walk(Protocol::Quantum1d, 2).is_err());
    }

    #[test]
    fn tensor_factorizes() {
        let n = 60;
        let d = tensor_walk(n);
        let p1 = walk1d::distribution(n);
        let nn = n as i64;
        for y in -nn..=nn {
            for x in -nn..=nn {
                assert!((d.get(x, y) - p1.prob_at(x) * p1.prob_at(y)).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn aqw_equals_grover() {
        for n in [1usize, 7, 20] {
            let (a, g) = (aqw_walk(n), grover_walk(n));
            let dev = a.probs().iter().zip(g.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(dev <= 1e-12, "n={n}: {dev}");
        }
    }

    #[test]
    fn four_fold_symmetry() {
        let n = 25i64;
        for d in [aqw_walk(n as usize), tensor_walk(n as usize)] {
            for y in -n..=n {
                for x in -n..=n {
                    let p = d.get(x, y);
                    for q in [d.get(-x, y), d.get(x, -y), d.get(y, x)] {
                        assert!((p - q).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn aqw_maxima_on_axes_at_edge() {
        let n = 100;
        let d = aqw_walk(n);
        let nn = n as i64;
        let (mut best, mut at) = (0.0, (0, 0));
        for y in -nn..=nn {
            for x in -nn..=nn {
                if d.get(x, y) > best {
                    best = d.get(x, y);
                    at = (x, y);
                }
            }
        }
        // On an axis, within one live site of the edge.
        let (u, v) = if at.1 == 0 { at } else { (at.1, at.0) };
        assert!(v == 0 && u.abs() >= nn - 2, "{at:?}");
    }

    #[test]
    fn slices() {
        let n = 100;
        let d = tensor_walk(n);
        let p1 = walk1d::distribution(n);
        let a = slice(&d, SliceKind::A).unwrap();
        assert_eq!(a.slice(), Some(SliceKind::A));
        for (x, p) in a.iter() {
            assert!((p - p1.prob_at(x) * p1.prob_at(0)).abs() <= 1e-14);
        }
        assert_eq!(slice_c_row(Protocol::Tensor2d, 100).unwrap(), 70);
        assert_eq!(slice_c_row(Protocol::Tensor2d, 5).unwrap(), 3);
        let c = slice(&aqw_walk(n), SliceKind::C).unwrap();
        let (ymax, _) = c.iter().fold((0, 0.0), |b, (y, p)| if p > b.1 { (y, p) } else { b });
        assert_eq!(ymax, 0);
        // Bell-shaped: monotone away from the centre.
        for w in c.probs()[..=n / 2].windows(2) {
            assert!(w[0] <= w[1]);
        }
        let bad = Distribution2D::new(0, Protocol::Quantum1d, 0, vec![1.0]).unwrap();
        assert!(slice(&bad, SliceKind::A).is_err());
    }

    #[test]
    fn absorption_identities() {
        let (r, s) = edge_step_matrices();
        let half = Ratio::new(1, 2);
        assert_eq!(mat_mul(&r, &r), mat_scale(&r, half));
        assert_eq!(mat_mul(&r, &s), mat_scale(&r, half));
        assert_eq!(mat_mul(&s, &r), mat_scale(&s, half));
        assert_eq!(mat_mul(&s, &s), mat_scale(&s, half));
        let h = Ratio::new(1, 2);
        assert_eq!(r, [[h, -h], [Ratio::from_integer(0), Ratio::from_integer(0)]]);
        // Both rows of R + S are proportional to the lower row of Q_x.
        let sum = [[r[0][0] + s[0][0], r[0][1] + s[0][1]], [r[1][0] + s[1][0], r[1][1] + s[1][1]]];
        for row in sum {
            assert_eq!(row[0], -row[1]);
        }
    }

    #[test]
    fn paths_reduce_to_leftmost_letter() {
        let (r, s) = edge_step_matrices();
        for len in 1..=12usize {
            let scale = Ratio::new(1, 1i64 << (len - 1));
            for bits in 0u32..(1 << len) {
                let word: Vec<bool> = (0..len).map(|i| bits >> i & 1 == 1).collect();
                let want = mat_scale(if word[0] { &r } else { &s }, scale);
                assert_eq!(edge_path_product(&word), want, "{word:?}");
            }
        }
    }

    #[test]
    fn edge_worked_values() {
        let e = edge_distribution_analytic(4).unwrap();
        let num = e.numerators.unwrap();
        assert_eq!(num, vec![1, 10, 18, 10, 1]);
        assert_eq!(edge_distribution_analytic(6).unwrap().numerators.unwrap(), vec![1, 26, 125, 200, 125, 26, 1]);
        assert_eq!(edge_distribution_analytic(7).unwrap().numerators.unwrap(), vec![1, 37, 261, 625, 625, 261, 37, 1]);
        assert!(edge_distribution_analytic(0).is_err());
    }

    #[test]
    fn edge_float_branch_matches_exact() {
        let e = edge_distribution_analytic(EDGE_EXACT_MAX).unwrap();
        let m = (EDGE_EXACT_MAX - 1) as u64;
        for (y, p) in e.positions.iter().zip(&e.probs) {
            let j = ((EDGE_EXACT_MAX as i64 - y) / 2) as u64;
            let sq = |j: Option<u64>| j.filter(|&j| j <= m).map_or(0.0, |j| binomial_pmf_half(m, j).powi(2));
            let f = 0.25 * (sq(j.checked_sub(1)) + sq(Some(j)));
            assert!((f - p).abs() <= 1e-14 * p, "y={y}");
        }
    }

    #[test]
    fn edge_equals_simulation() {
        assert!(edge_matches_simulation(1).unwrap() < 1e-15);
        assert!(edge_matches_simulation(6).unwrap() < 1e-15);
        assert!(edge_matches_simulation(100).unwrap() < 1e-12);
    }

    #[test]
    fn dispersion_at_origin() {
        let p = grover_dispersion(0.0, 0.0).unwrap();
        let want = [1.0, -1.0, -1.0, -1.0];
        for (z, w) in p.eigenvalues.iter().zip(want) {
            assert!((z - Complex64::new(w, 0.0)).norm() < 1e-12, "{:?}", p.eigenvalues);
        }
    }

    #[test]
    fn checkpoints() {
        let runs = evolve2d(Protocol::Aqw2d, 8, &[2, 5].into_iter().collect()).unwrap();
        assert_eq!(runs.keys().copied().collect::<Vec<_>>(), vec![2, 5, 8]);
        assert_eq!(runs[&5], aqw_walk(5));
        assert!(evolve2d(Protocol::Aqw2d, 3, &[4].into_iter().collect()).is_err());
    }

    proptest! {
        #[test]
        fn dispersion_matches_closed_form(k1 in -PI..PI, k2 in -PI..PI) {
            let p = grover_dispersion(k1, k2).unwrap();
            for z in p.eigenvalues {
                prop_assert!((z.norm() - 1.0).abs() < EIGEN_TOLERANCE);
            }
            prop_assert!(p.closed_form_deviation < EIGEN_TOLERANCE, "{}", p.closed_form_deviation);
        }

        #[test]
        fn walks_conserve_probability(n in 0usize..40) {
            for p in [Protocol::Tensor2d, Protocol::Aqw2d, Protocol::Grover2d] {
                prop_assert!((run(p, n).total() - 1.0).abs() < 1e-12);
            }
        }
    }
}
