//! Discrete Fourier transforms of probability distributions and the
//! statistics built on them.
//!
//! A spectrum of an `N`-step walk lives on `M = N + 1` points
//! `k_m = 2 pi m / M`, `m in (-M/2, M/2]`, and stores `F(k) = sum_x P(x) cos(kx)`.
//! Phases come from a table indexed by `m x mod M`, so every evaluation of
//! `cos(k_m x)` is exact to table precision regardless of `|m x|`.
//!
//! Walks with a single live parity satisfy `F(k + pi) = +-F(k)`, so all the
//! information sits in `0 <= k <= pi/2`. Statistics run over that band on
//! the axis `q = 2k in [0, pi]`, whose rescaled form `N q / 2 pi = N k / pi`
//! counts Fourier components.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{envelope_gap_nodes, local_extrema, BeatReport, Side, GAP_NODE_THRESHOLD};
use crate::distribution::{format_f64, Distribution, Distribution2D, SliceKind};
use crate::error::{Result, WalkError};
use crate::fit::{line_fit, FitResult, Model};
use crate::sum::{pairwise_sum, pairwise_sum_by};

/// Largest tolerated `|sum_x P(x) sin(kx)|`.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Largest tolerated `|sum_x P(x) - 1|` on input.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Upper edge of the small-`q` fit window, in units of `pi`.
pub const SMALL_K_MAX: f64 = 0.2;

/// Lower edge of the large-`q` fit window, in units of `pi`.
pub const LARGE_K_MIN: f64 = 0.4;

struct Phases {
    modulus: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Phases {
    fn new(modulus: usize) -> Self {
        let angle = |r: usize| TAU * r as f64 / modulus as f64;
        Phases {
            modulus,
            cos: (0..modulus).map(|r| angle(r).cos()).collect(),
            sin: (0..modulus).map(|r| angle(r).sin()).collect(),
        }
    }

    fn index(&self, m: i64, x: i64) -> usize {
        (m * x).rem_euclid(self.modulus as i64) as usize
    }
}

/// First grid index: `m_min = floor(M/2) + 1 - M`.
fn m_min(modulus: usize) -> i64 {
    (modulus / 2) as i64 + 1 - modulus as i64
}

fn grid(modulus: usize) -> Vec<f64> {
    let lo = m_min(modulus);
    (0..modulus).map(|i| TAU * (lo + i as i64) as f64 / modulus as f64).collect()
}

fn check_normalized(total: f64) -> Result<()> {
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(WalkError::NotNormalized { total });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    n_steps: usize,
    k_grid: Vec<f64>,
    components: Vec<f64>,
}

/// The band `0 <= k <= pi/2` on the axes used for statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    /// `q = 2k`, covering `[0, pi]`.
    pub q: Vec<f64>,
    /// `N k / pi`, covering `[0, N/2]`.
    pub rescaled: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    /// Wrap precomputed components; `components.len()` fixes `M`.
    pub fn new(n_steps: usize, components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(WalkError::InsufficientData("empty spectrum".into()));
        }
        Ok(Spectrum { n_steps, k_grid: grid(components.len()), components })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn k_grid(&self) -> &[f64] {
        &self.k_grid
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `F(k_m)` for `m in (-M/2, M/2]`.
    pub fn at(&self, m: i64) -> f64 {
        self.components[(m - m_min(self.len())) as usize]
    }

    pub fn band(&self) -> Band {
        let top = self.len() / 4;
        let nf = self.n_steps as f64;
        let k: Vec<f64> = (0..=top as i64).map(|m| TAU * m as f64 / self.len() as f64).collect();
        Band {
            q: k.iter().map(|k| 2.0 * k).collect(),
            rescaled: k.iter().map(|k| nf * k / PI).collect(),
            values: (0..=top as i64).map(|m| self.at(m)).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,F\n");
        for (k, f) in self.k_grid.iter().zip(&self.components) {
            out.push_str(&format!("{},{}\n", format_f64(*k), format_f64(*f)));
        }
        out
    }

    pub fn from_csv(text: &str, n_steps: usize) -> Result<Self> {
        let mut components = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).skip(1) {
            let (_, f) = line.split_once(',').ok_or_else(|| WalkError::Parse(format!("bad row `{line}`")))?;
            components.push(f.trim().parse::<f64>().map_err(|_| WalkError::Parse(format!("bad value `{f}`")))?);
        }
        Spectrum::new(n_steps, components)
    }
}

/// `F(k) = sum_x P(x) cos(kx)` on the `M = N + 1` grid.
///
/// Components with `m < 0` are copied from `-m`: the cosine sum is even in
/// `k` and the sine sum odd, whatever the input.
pub fn dft(d: &Distribution) -> Result<Spectrum> {
    let d = d.live_only();
    check_normalized(d.total())?;
    let modulus = d.n_steps() + 1;
    let phases = Phases::new(modulus);
    let (x0, step) = (d.positions().first().copied().unwrap_or(0), d.live_step());
    let probs = d.probs();
    let half: Vec<(f64, f64)> = (0..=(modulus / 2) as i64)
        .into_par_iter()
        .map_init(
            || (vec![0.0; probs.len()], vec![0.0; probs.len()]),
            |(re, im), m| {
                let mut r = phases.index(m, x0);
                let dr = phases.index(m, step);
                for (i, p) in probs.iter().enumerate() {
                    re[i] = p * phases.cos[r];
                    im[i] = p * phases.sin[r];
                    r += dr;
                    if r >= modulus {
                        r -= modulus;
                    }
                }
                (pairwise_sum(re), pairwise_sum(im))
            },
        )
        .collect();
    for (m, (_, im)) in half.iter().enumerate() {
        if im.abs() >= IMAGINARY_TOLERANCE {
            return Err(WalkError::ImaginaryResidual { k: TAU * m as f64 / modulus as f64, value: *im });
        }
    }
    let lo = m_min(modulus);
    let components = (lo..=(modulus / 2) as i64).map(|m| half[m.unsigned_abs() as usize].0).collect();
    Spectrum::new(d.n_steps(), components)
}

/// Strict local maxima of `F` inside the band `0 < q < pi`; one half of the
/// symmetric spectrum, excluding the primary peak at `k = 0`.
pub fn fourier_peak_count(s: &Spectrum) -> usize {
    local_extrema(&s.band().values, Side::Upper, None).len()
}

/// Both halves plus the primary peak at `k = 0`.
pub fn total_fourier_peaks(s: &Spectrum) -> usize {
    2 * fourier_peak_count(s) + 1
}

/// Beats of the band near `q = pi`, on the rescaled axis `N k / pi`.
///
/// Nodes come from the envelope-gap rule over the last 40% of the band;
/// the band edge `N / 2` closes the final segment, so `last()` is the last
/// beat.
pub fn fourier_beats(s: &Spectrum) -> BeatReport {
    let band = s.band();
    let start = band.values.len() * 3 / 5;
    let v = &band.values[start..];
    let r = &band.rescaled[start..];
    let mut nodes: Vec<f64> = envelope_gap_nodes(v, GAP_NODE_THRESHOLD).into_iter().map(|i| r[i]).collect();
    let peaks: Vec<f64> = local_extrema(v, Side::Upper, None).into_iter().map(|i| r[i]).collect();
    if nodes.is_empty() {
        return BeatReport::from_nodes(nodes, &peaks);
    }
    nodes.push(s.n_steps() as f64 / 2.0);
    BeatReport::from_nodes(nodes, &peaks)
}

/// Positive band maxima as `(q, F)`.
pub fn fourier_envelope(s: &Spectrum) -> Vec<(f64, f64)> {
    let band = s.band();
    local_extrema(&band.values, Side::Upper, None)
        .into_iter()
        .map(|i| (band.q[i], band.values[i]))
        .filter(|p| p.1 > 0.0)
        .collect()
}

fn log_fit(
    points: &[(f64, f64)],
    n: usize,
    model: Model,
    keep: impl Fn(f64) -> bool,
    abscissa: impl Fn(f64) -> f64,
) -> Result<FitResult> {
    let sel: Vec<(f64, f64)> = points.iter().copied().filter(|p| keep(p.0) && p.1 > 0.0).collect();
    if sel.len() < 3 {
        return Err(WalkError::InsufficientData(format!("{} envelope points in the {model} window", sel.len())));
    }
    let lx: Vec<f64> = sel.iter().map(|p| abscissa(p.0).ln()).collect();
    let ly: Vec<f64> = sel.iter().map(|p| p.1.ln()).collect();
    let line = line_fit(&lx, &ly, None)?;
    let lo = sel.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = sel.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let raw = line.intercept.exp();
    let mut fit = FitResult::new(model, (lo, hi)).with("slope", line.slope).with("amplitude", raw);
    fit.params.insert("A".into(), raw * (n as f64).sqrt());
    fit.residual =
        crate::fit::rms_relative(&sel.iter().map(|p| p.1).collect::<Vec<_>>(), |i| raw * lx[i].exp().powf(line.slope));
    fit.points = sel.len();
    Ok(fit)
}

/// `F = (A / sqrt N) (q / pi)^(-c)` over `0 < q <= 0.2 pi`.
pub fn fit_small_k_points(points: &[(f64, f64)], n: usize) -> Result<FitResult> {
    let mut f = log_fit(points, n, Model::FourierSmallK, |q| q > 0.0 && q <= SMALL_K_MAX * PI, |q| q / PI)?;
    let c = -f.param("slope");
    f.params.insert("c".into(), c);
    Ok(f)
}

/// `F = (A' / sqrt N) (1 - q / pi)^(c')` over `0.4 pi <= q < pi`.
pub fn fit_large_k_points(points: &[(f64, f64)], n: usize) -> Result<FitResult> {
    let mut f = log_fit(points, n, Model::FourierLargeK, |q| q >= LARGE_K_MIN * PI && q < PI, |q| 1.0 - q / PI)?;
    let c = f.param("slope");
    f.params.insert("c_prime".into(), c);
    Ok(f)
}

fn fit_over_set(
    spectra: &[Spectrum],
    exponent: &str,
    fit: fn(&[(f64, f64)], usize) -> Result<FitResult>,
) -> Result<FitResult> {
    if spectra.is_empty() {
        return Err(WalkError::InsufficientData("no spectra".into()));
    }
    let fits: Vec<FitResult> = spectra.iter().map(|s| fit(&fourier_envelope(s), s.n_steps())).collect::<Result<_>>()?;
    let mean = |name: &str| fits.iter().map(|f| f.param(name)).sum::<f64>() / fits.len() as f64;
    let mut out = FitResult::new(fits[0].model, fits[0].window).with(exponent, mean(exponent)).with("A", mean("A"));
    out.points = fits.iter().map(|f| f.points).sum();
    out.residual = fits.iter().map(|f| f.residual).fold(0.0, f64::max);
    for (s, f) in spectra.iter().zip(&fits) {
        out.params.insert(format!("{exponent}@{}", s.n_steps()), f.param(exponent));
        out.params.insert(format!("A@{}", s.n_steps()), f.param("A"));
    }
    if fits.len() >= 2 {
        let ln: Vec<f64> = spectra.iter().map(|s| (s.n_steps() as f64).ln()).collect();
        let la: Vec<f64> = fits.iter().map(|f| f.param("amplitude").ln()).collect();
        out.params.insert("amplitude_slope".into(), line_fit(&ln, &la, None)?.slope);
    }
    Ok(out)
}

/// Small-`q` fit for each spectrum. `c` and `A` are means over the set;
/// per-spectrum values are keyed `c@N`, `A@N`, and `amplitude_slope` is the
/// log-log slope of the raw amplitude `A / sqrt N` against `N`.
pub fn fit_fourier_small_k(spectra: &[Spectrum]) -> Result<FitResult> {
    fit_over_set(spectra, "c", fit_small_k_points)
}

/// Large-`q` counterpart of [`fit_fourier_small_k`], reporting `c_prime`.
pub fn fit_fourier_large_k(spectra: &[Spectrum]) -> Result<FitResult> {
    fit_over_set(spectra, "c_prime", fit_large_k_points)
}

/// `F(kx, ky)` on the product of two `M = N + 1` grids, row-major with rows
/// indexed by `ky`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum2D {
    n_steps: usize,
    k_grid: Vec<f64>,
    components: Vec<f64>,
}

/// JSON sidecar accompanying a 2D spectrum CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSidecar {
    pub n: usize,
    pub size: usize,
    pub k_min: f64,
    pub k_max: f64,
}

impl Spectrum2D {
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn k_grid(&self) -> &[f64] {
        &self.k_grid
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn size(&self) -> usize {
        self.k_grid.len()
    }

    /// `F(k_mx, k_my)`.
    pub fn at(&self, mx: i64, my: i64) -> f64 {
        let lo = m_min(self.size());
        self.components[(my - lo) as usize * self.size() + (mx - lo) as usize]
    }

    pub fn sidecar(&self) -> SpectrumSidecar {
        SpectrumSidecar {
            n: self.n_steps,
            size: self.size(),
            k_min: self.k_grid[0],
            k_max: self.k_grid[self.size() - 1],
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.components.chunks(self.size()) {
            let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// `F(kx, ky) = sum P(x, y) cos(kx x + ky y)`, evaluated separably as
/// `Re sum_y e^{i ky y} sum_x P(x, y) e^{i kx x}`.
pub fn dft2d(d: &Distribution2D) -> Result<Spectrum2D> {
    check_normalized(d.total())?;
    let modulus = d.n_steps() + 1;
    let phases = Phases::new(modulus);
    let r = d.radius();
    let w = d.width();
    let p = d.probs();
    // Rows and columns that carry probability at all.
    let live = |f: &dyn Fn(usize) -> f64| -> Vec<usize> { (0..w).filter(|&i| f(i) > 0.0).collect() };
    let cols = live(&|ix| pairwise_sum_by(w, &|iy| p[iy * w + ix]));
    let rows = live(&|iy| pairwise_sum(&p[iy * w..(iy + 1) * w]));
    let ms: Vec<i64> = (m_min(modulus)..=(modulus / 2) as i64).collect();
    // g[mx][row] = sum_x P(x, y) e^{i kx x}
    let g: Vec<Vec<(f64, f64)>> = ms
        .par_iter()
        .map(|&mx| {
            rows.iter()
                .map(|&iy| {
                    let term = |j: usize, t: &[f64]| {
                        let ix = cols[j];
                        p[iy * w + ix] * t[phases.index(mx, ix as i64 - r)]
                    };
                    (
                        pairwise_sum_by(cols.len(), &|j| term(j, &phases.cos)),
                        pairwise_sum_by(cols.len(), &|j| term(j, &phases.sin)),
                    )
                })
                .collect()
        })
        .collect();
    let cells: Vec<(f64, f64)> = ms
        .par_iter()
        .flat_map_iter(|&my| {
            let g = &g;
            let rows = &rows;
            let phases = &phases;
            (0..ms.len()).map(move |a| {
                let ph = |j: usize| phases.index(my, rows[j] as i64 - r);
                let (c, s) = (&phases.cos, &phases.sin);
                let re = pairwise_sum_by(rows.len(), &|j| g[a][j].0 * c[ph(j)] - g[a][j].1 * s[ph(j)]);
                let im = pairwise_sum_by(rows.len(), &|j| g[a][j].0 * s[ph(j)] + g[a][j].1 * c[ph(j)]);
                (re, im)
            })
        })
        .collect();
    if let Some((i, (_, im))) = cells.iter().enumerate().find(|(_, c)| c.1.abs() >= IMAGINARY_TOLERANCE) {
        let k = TAU * ms[i % ms.len()] as f64 / modulus as f64;
        return Err(WalkError::ImaginaryResidual { k, value: *im });
    }
    Ok(Spectrum2D { n_steps: d.n_steps(), k_grid: grid(modulus), components: cells.into_iter().map(|c| c.0).collect() })
}

/// One-dimensional cut: A is `F(k, 0)`, B is `F(k, k)`, C is `F(k_top, k)`
/// with `k_top` the largest grid point (`pi` when `M` is even).
pub fn spectrum_slice(s: &Spectrum2D, which: SliceKind) -> Spectrum {
    let lo = m_min(s.size());
    let top = (s.size() / 2) as i64;
    let components = (lo..=top)
        .map(|m| match which {
            SliceKind::A => s.at(m, 0),
            SliceKind::B => s.at(m, m),
            SliceKind::C => s.at(top, m),
        })
        .collect();
    Spectrum { n_steps: s.n_steps, k_grid: s.k_grid.clone(), components }
}
