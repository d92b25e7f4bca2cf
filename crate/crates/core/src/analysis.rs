//! Structural analysis of 1D distributions: peaks, envelopes, beats, fits
//! and width scalings.
//!
//! Extrema are always classified on the full live-parity sequence, with the
//! region outside the support treated as probability zero. Windows only
//! select which of those extrema are reported, and are closed at both ends.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{Result, WalkError};
use crate::fit::{inverse_power_fit, offset_power_fit, power_law_fit, tail_fit, FitResult, Model};

/// Offset of the outer envelope, `P0 = -OUTER_OFFSET / N`.
pub const OUTER_OFFSET: f64 = 1.884;

/// Relative envelope gap below which a gap minimum counts as a beat node.
pub const GAP_NODE_THRESHOLD: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// Indices of strict local extrema of `values`.
///
/// A run of equal values is one candidate located at its leftmost index; it
/// is an extremum when both flanking values lie strictly on the other side.
/// `pad` is the value assumed beyond either end; with `None` the end runs
/// are never extrema.
pub fn local_extrema(values: &[f64], side: Side, pad: Option<f64>) -> Vec<usize> {
    let beats = |a: f64, b: f64| match side {
        Side::Upper => a > b,
        Side::Lower => a < b,
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i;
        while j + 1 < values.len() && values[j + 1] == values[i] {
            j += 1;
        }
        let left = if i == 0 { pad } else { Some(values[i - 1]) };
        let right = if j + 1 == values.len() { pad } else { Some(values[j + 1]) };
        if let (Some(l), Some(r)) = (left, right) {
            if beats(values[i], l) && beats(values[i], r) {
                out.push(i);
            }
        }
        i = j + 1;
    }
    out
}

/// Peaks reported inside a closed window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakReport {
    pub window: (i64, i64),
    pub peak_positions: Vec<i64>,
    pub count: usize,
}

fn check_window(d: &Distribution, lo: i64, hi: i64) -> Result<std::ops::Range<usize>> {
    let range = d.index_range(lo, hi);
    if lo > hi || range.is_empty() {
        return Err(WalkError::EmptyWindow { lo, hi });
    }
    Ok(range)
}

fn peak_positions(d: &Distribution) -> Vec<i64> {
    local_extrema(d.probs(), Side::Upper, Some(0.0)).into_iter().map(|i| d.positions()[i]).collect()
}

/// Peaks of the live-parity sequence that lie in `[lo, hi]`.
pub fn find_peaks(d: &Distribution, lo: i64, hi: i64) -> Result<PeakReport> {
    let d = d.live_only();
    check_window(&d, lo, hi)?;
    let peak_positions: Vec<i64> = peak_positions(&d).into_iter().filter(|x| (lo..=hi).contains(x)).collect();
    Ok(PeakReport { window: (lo, hi), count: peak_positions.len(), peak_positions })
}

/// Number of peaks on one wing (`x >= 0`) of the distribution.
pub fn total_peaks(d: &Distribution) -> usize {
    peak_positions(&d.live_only()).into_iter().filter(|&x| x >= 0).count()
}

/// Position and value of the largest probability at `x >= 0`; ties resolve
/// toward larger `x`.
pub fn locate_xmax(d: &Distribution) -> Result<(i64, f64)> {
    d.iter()
        .filter(|(x, _)| *x >= 0)
        .fold(None, |best: Option<(i64, f64)>, (x, p)| match best {
            Some((_, bp)) if bp > p => best,
            _ => Some((x, p)),
        })
        .ok_or_else(|| WalkError::InsufficientData("no sites at x >= 0".into()))
}

/// Upper-envelope probability sampled at a named abscissa.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub name: String,
    pub target: f64,
    pub position: i64,
    pub value: f64,
}

/// Round toward zero onto the live lattice of an `n`-step walk.
pub fn live_site_toward_zero(target: f64, n: usize) -> i64 {
    let mut x = target.trunc() as i64;
    if (x - n as i64).rem_euclid(2) != 0 {
        x -= if x > 0 {
            1
        } else if x < 0 {
            -1
        } else {
            -1
        };
    }
    x
}

/// Upper envelope at `x`: the largest of `P(x)` and its live neighbours.
pub fn envelope_at(d: &Distribution, x: i64) -> f64 {
    let s = d.live_step();
    d.prob_at(x - s).max(d.prob_at(x)).max(d.prob_at(x + s))
}

/// Upper-envelope values at `0, N/(2 sqrt 2), N/2, x_max, N/sqrt 2, 0.7072 N`.
pub fn reference_points(d: &Distribution) -> Result<Vec<ReferencePoint>> {
    let n = d.n_steps();
    let nf = n as f64;
    let (xmax, _) = locate_xmax(d)?;
    let targets = [
        ("0", 0.0),
        ("N/(2sqrt2)", nf / (2.0 * SQRT_2)),
        ("N/2", nf / 2.0),
        ("x_max", xmax as f64),
        ("N/sqrt2", nf / SQRT_2),
        ("0.7072N", 0.7072 * nf),
    ];
    Ok(targets
        .iter()
        .map(|&(name, target)| {
            let position = if name == "x_max" { xmax } else { live_site_toward_zero(target, n) };
            ReferencePoint { name: name.to_string(), target, position, value: envelope_at(d, position) }
        })
        .collect())
}

/// Local maxima (upper) or minima (lower) within a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSeries {
    pub side: Side,
    pub points: Vec<(i64, f64)>,
}

impl EnvelopeSeries {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0 as f64).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

pub fn extract_envelope(d: &Distribution, side: Side, lo: i64, hi: i64) -> Result<EnvelopeSeries> {
    let d = d.live_only();
    let range = d.index_range(lo, hi);
    if range.len() < 3 {
        return Err(WalkError::WindowTooSmall { lo, hi, needed: 3 });
    }
    let points = local_extrema(d.probs(), side, Some(0.0))
        .into_iter()
        .filter(|i| range.contains(i))
        .map(|i| (d.positions()[i], d.probs()[i]))
        .collect();
    Ok(EnvelopeSeries { side, points })
}

/// Window `[0.4 N, x_max]` where the outer algebraic form applies.
pub fn outer_window(d: &Distribution) -> Result<(i64, i64)> {
    Ok(((0.4 * d.n_steps() as f64).ceil() as i64, locate_xmax(d)?.0))
}

/// Window `[0, 0.2 N]` where the central power form applies.
pub fn centre_window(d: &Distribution) -> (i64, i64) {
    (0, (0.2 * d.n_steps() as f64).floor() as i64)
}

/// `P_e = P0 + a (b - x)^(-c)` with `b = N/sqrt 2` and `P0 = -1.884/N` fixed.
pub fn fit_envelope_outer(e: &EnvelopeSeries, n: usize) -> Result<FitResult> {
    let nf = n as f64;
    inverse_power_fit(&e.xs(), &e.ys(), nf / SQRT_2, -OUTER_OFFSET / nf, Model::OuterAlgebraic)
}

/// `P_e = P0 + a x^c` with all three parameters free; `x = 0` is excluded.
pub fn fit_envelope_center(e: &EnvelopeSeries, _n: usize) -> Result<FitResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = e.points.iter().filter(|p| p.0 > 0).map(|p| (p.0 as f64, p.1)).unzip();
    offset_power_fit(&x, &y)
}

/// `P = a exp(-d (x - b)^1.5 / sqrt N)` over every live site beyond
/// `b = N/sqrt 2` with non-zero probability.
pub fn fit_tail(d: &Distribution, n: usize) -> Result<FitResult> {
    let nf = n as f64;
    let b = nf / SQRT_2;
    let (x, y): (Vec<f64>, Vec<f64>) =
        d.iter().filter(|&(x, p)| x as f64 > b && p > 0.0).map(|(x, p)| (x as f64, p)).unzip();
    if x.len() < 2 {
        return Err(WalkError::EmptyWindow { lo: b.ceil() as i64, hi: n as i64 });
    }
    tail_fit(&x, &y, b, nf)
}

/// One beat: the stretch between two consecutive nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeatSegment {
    pub lo: f64,
    pub hi: f64,
    pub peak_count: usize,
}

impl BeatSegment {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeatReport {
    pub nodes: Vec<f64>,
    pub segments: Vec<BeatSegment>,
    pub widths: Vec<f64>,
}

impl BeatReport {
    /// Build segments between consecutive nodes, counting `peaks` strictly
    /// inside each.
    pub fn from_nodes(nodes: Vec<f64>, peaks: &[f64]) -> Self {
        let segments: Vec<BeatSegment> = nodes
            .windows(2)
            .map(|w| BeatSegment {
                lo: w[0],
                hi: w[1],
                peak_count: peaks.iter().filter(|&&p| p > w[0] && p < w[1]).count(),
            })
            .collect();
        let widths = segments.iter().map(BeatSegment::width).collect();
        BeatReport { nodes, segments, widths }
    }

    /// Segment with `lo <= x < hi`.
    pub fn segment_containing(&self, x: f64) -> Option<&BeatSegment> {
        self.segments.iter().find(|s| s.lo <= x && x < s.hi)
    }

    pub fn last(&self) -> Option<&BeatSegment> {
        self.segments.last()
    }
}

/// Sites where a high-frequency oscillation stops alternating: the value is
/// neither a strict maximum nor a strict minimum of its two neighbours.
/// Runs of such sites collapse to their first index.
pub fn alternation_nodes(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut run = false;
    for i in 1..values.len().saturating_sub(1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        let extremal = (b > a && b > c) || (b < a && b < c);
        if !extremal && !run {
            out.push(i);
        }
        run = !extremal;
    }
    out
}

/// Interpolate the polyline through `(xs[idx[k]], values[idx[k]])` at `x`,
/// clamping beyond the ends.
fn interp(idx: &[usize], values: &[f64], at: usize) -> f64 {
    let p = idx.partition_point(|&i| i < at);
    if p == 0 {
        return values[idx[0]];
    }
    if p == idx.len() {
        return values[idx[idx.len() - 1]];
    }
    let (i0, i1) = (idx[p - 1], idx[p]);
    if i1 == i0 {
        return values[i0];
    }
    let t = (at - i0) as f64 / (i1 - i0) as f64;
    values[i0] + t * (values[i1] - values[i0])
}

/// Beat nodes from the gap between interpolated upper and lower envelopes.
///
/// At every extremum the gap `U - L` is evaluated; a node is an extremum
/// where the gap is a local minimum and below `theta` times the median gap.
pub fn envelope_gap_nodes(values: &[f64], theta: f64) -> Vec<usize> {
    let peaks = local_extrema(values, Side::Upper, None);
    let troughs = local_extrema(values, Side::Lower, None);
    if peaks.len() < 2 || troughs.len() < 2 {
        return Vec::new();
    }
    let mut ext: Vec<usize> = peaks.iter().chain(&troughs).copied().collect();
    ext.sort_unstable();
    let gaps: Vec<f64> = ext.iter().map(|&i| interp(&peaks, values, i) - interp(&troughs, values, i)).collect();
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 { 0.5 * (sorted[mid - 1] + sorted[mid]) } else { sorted[mid] };
    (1..gaps.len().saturating_sub(1))
        .filter(|&i| gaps[i] <= gaps[i - 1] && gaps[i] <= gaps[i + 1] && gaps[i] < theta * median)
        .map(|i| ext[i])
        .collect()
}

/// Beat segments of a distribution in `[lo, hi]`, delimited by the sites
/// where the site-to-site alternation breaks.
pub fn detect_beats(d: &Distribution, lo: i64, hi: i64) -> Result<BeatReport> {
    let d = d.live_only();
    let range = d.index_range(lo, hi);
    if range.len() < 3 {
        return Err(WalkError::WindowTooSmall { lo, hi, needed: 3 });
    }
    let pos = &d.positions()[range.clone()];
    let nodes: Vec<f64> = alternation_nodes(&d.probs()[range.clone()]).into_iter().map(|i| pos[i] as f64).collect();
    let peaks: Vec<f64> = peak_positions(&d).into_iter().filter(|x| (lo..=hi).contains(x)).map(|x| x as f64).collect();
    Ok(BeatReport::from_nodes(nodes, &peaks))
}

/// Span from the first to the tenth peak at `x >= 0`.
pub fn first_ten_width(d: &Distribution) -> Result<f64> {
    let pk: Vec<i64> = peak_positions(&d.live_only()).into_iter().filter(|&x| x >= 0).collect();
    if pk.len() < 10 {
        return Err(WalkError::InsufficientData(format!("{} peaks at x >= 0", pk.len())));
    }
    Ok((pk[9] - pk[0]) as f64)
}

/// Span of the last ten peaks up to and including `x_max`.
pub fn last_ten_width(d: &Distribution) -> Result<f64> {
    let (xmax, _) = locate_xmax(d)?;
    let pk: Vec<i64> = peak_positions(&d.live_only()).into_iter().filter(|&x| x >= 0 && x <= xmax).collect();
    if pk.len() < 10 {
        return Err(WalkError::InsufficientData(format!("{} peaks up to x_max", pk.len())));
    }
    Ok((xmax - pk[pk.len() - 10]) as f64)
}

/// Full width at half maximum of the peak at `x_max`, with linear
/// interpolation between live sites.
pub fn fwhm(d: &Distribution) -> Result<f64> {
    let d = d.live_only();
    let (xmax, pmax) = locate_xmax(&d)?;
    let p = d.probs();
    let x = d.positions();
    let k = d.index_range(xmax, xmax).start;
    let half = 0.5 * pmax;
    let mut a = k;
    while a > 0 && p[a] >= half {
        a -= 1;
    }
    let mut c = k;
    while c + 1 < p.len() && p[c] >= half {
        c += 1;
    }
    if p[a] >= half || p[c] >= half {
        return Err(WalkError::InsufficientData("peak does not fall to half maximum".into()));
    }
    let cross = |i: usize, j: usize| x[i] as f64 + (x[j] - x[i]) as f64 * (half - p[i]) / (p[j] - p[i]);
    Ok(cross(c, c - 1) - cross(a, a + 1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthScalings {
    pub first_ten: FitResult,
    pub last_ten: FitResult,
    pub fwhm: FitResult,
}

/// Power-law exponents of the three width measures against `N`.
pub fn width_scalings(runs: &BTreeMap<usize, Distribution>) -> Result<WidthScalings> {
    let ns: Vec<usize> = runs.keys().copied().collect();
    if ns.len() < 4 || (ns[ns.len() - 1] as f64) < 100.0 * ns[0] as f64 {
        return Err(WalkError::InsufficientData(format!(
            "width scalings need at least 4 values of N spanning two decades, got {ns:?}"
        )));
    }
    let series = |f: fn(&Distribution) -> Result<f64>| -> Result<FitResult> {
        let pts = runs.iter().map(|(n, d)| Ok((*n as f64, f(d)?))).collect::<Result<Vec<_>>>()?;
        power_law_fit(&pts)
    };
    Ok(WidthScalings { first_ten: series(first_ten_width)?, last_ten: series(last_ten_width)?, fwhm: series(fwhm)? })
}

pub use crate::fit::power_law_fit as fit_power_law;

/// Every real-space measurement for one distribution, bundled for output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n_steps: usize,
    pub total_peaks: usize,
    pub x_max: i64,
    pub p_max: f64,
    pub reference_points: Vec<ReferencePoint>,
    pub fits: Vec<FitResult>,
    pub beats: BeatReport,
    pub windows: Vec<PeakReport>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Run the standard measurements on a quantum-walk distribution. Fits that
/// lack data at small `N` are omitted rather than failing the report.
pub fn analyze(d: &Distribution, windows: &[(i64, i64)]) -> Result<AnalysisReport> {
    let n = d.n_steps();
    let (x_max, p_max) = locate_xmax(d)?;
    let mut fits = Vec::new();
    if let Ok((lo, hi)) = outer_window(d) {
        if let Ok(f) = extract_envelope(d, Side::Upper, lo, hi).and_then(|e| fit_envelope_outer(&e, n)) {
            fits.push(f);
        }
    }
    let (lo, hi) = centre_window(d);
    if let Ok(f) = extract_envelope(d, Side::Upper, lo, hi).and_then(|e| fit_envelope_center(&e, n)) {
        fits.push(f);
    }
    if let Ok(f) = fit_tail(d, n) {
        fits.push(f);
    }
    let nf = n as f64;
    let beats = detect_beats(d, (0.5 * nf) as i64, (0.65 * nf) as i64)
        .unwrap_or_else(|_| BeatReport::from_nodes(Vec::new(), &[]));
    Ok(AnalysisReport {
        n_steps: n,
        total_peaks: total_peaks(d),
        x_max,
        p_max,
        reference_points: reference_points(d)?,
        fits,
        beats,
        windows: windows.iter().map(|&(lo, hi)| find_peaks(d, lo, hi)).collect::<Result<_>>()?,
    })
}
