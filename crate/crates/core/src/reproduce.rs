//! Regeneration of the published tables and figure data, with a pass/fail
//! comparison against the published values.
//!
//! Each [`Target`] runs at a list of step counts; [`Session`] caches walks so
//! several targets can share one sweep. Tolerances are pinned per check and
//! reported alongside the observed value.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    centre_window, detect_beats, extract_envelope, find_peaks, fit_envelope_center, fit_envelope_outer, fit_power_law,
    fit_tail, locate_xmax, outer_window, reference_points, width_scalings, Side,
};
use crate::artifact::{cell, Artifact, ArtifactData};
use crate::classical::{binomial_coefficient_row, binomial_distribution};
use crate::distribution::{Distribution, Distribution2D, Protocol};
use crate::error::{Result, WalkError};
use crate::spectral::{dft, fit_fourier_large_k, fit_fourier_small_k, fourier_beats, fourier_peak_count, Spectrum};
use crate::walk1d::{self, drift_tolerance};
use crate::walk2d::{
    diagonal_peak_count, edge_distribution_analytic, edge_matches_simulation, evolve2d, exact_walk, fit_edge_gaussian,
};

/// Peak windows of 100 sites and their published counts, by `N`.
pub const TABLE_I: &[(usize, [(i64, i64, usize); 7])] = &[
    (1000, [(0, 100, 2), (100, 200, 5), (200, 300, 8), (300, 400, 12), (400, 500, 17), (500, 600, 23), (600, 700, 17)]),
    (
        10000,
        [
            (500, 600, 2),
            (1500, 1600, 5),
            (2500, 2600, 8),
            (3500, 3600, 12),
            (4500, 4600, 17),
            (5500, 5600, 23),
            (6500, 6600, 17),
        ],
    ),
    // Printed as [500, 600]; the first column follows lo -> 10 lo + 500.
    (
        100000,
        [
            (5500, 5600, 2),
            (15500, 15600, 5),
            (25500, 25600, 8),
            (35500, 35600, 12),
            (45500, 45600, 17),
            (55500, 55600, 23),
            (65500, 65600, 16),
        ],
    ),
    (
        10000,
        [
            (5000, 5100, 20),
            (5500, 5600, 23),
            (5600, 5700, 24),
            (5700, 5800, 25),
            (5800, 5900, 25),
            (5900, 6000, 24),
            (6000, 6100, 23),
        ],
    ),
    (
        100000,
        [
            (50000, 50100, 20),
            // Printed as [50000, 50200]; windows are 100 sites wide.
            (50000, 50100, 20),
            (52000, 52100, 21),
            (54000, 54100, 22),
            (56000, 56100, 24),
            (58000, 58100, 25),
            (60000, 60100, 23),
        ],
    ),
];

/// Beating structure near `0.58 N`: `(N, lo, hi, width, peaks)`.
pub const TABLE_II: &[(usize, i64, i64, f64, usize)] =
    &[(1000, 546, 604, 58.0, 14), (10000, 5682, 5860, 176.0, 44), (100000, 57452, 58016, 566.0, 141)];

/// Fourier peaks: `(N, total, peaks in last beat, length of last beat)`.
pub const TABLE_III: &[(usize, usize, usize, f64)] =
    &[(1000, 167, 9, 45.0), (4000, 667, 18, 87.0), (10000, 1667, 29, 140.0), (40000, 6667, 58, 276.0)];

/// `64 P(x)` of the 1D walk at `N = 6`; the tensor block is its outer product.
pub const TABLE_IV_TENSOR: [u128; 7] = [1, 18, 9, 8, 9, 18, 1];

/// `4096 P(x, y)` of the AQW at `N = 6`, rows from `y = 6` down.
pub const TABLE_IV_AQW: [[u128; 7]; 7] = [
    [1, 26, 125, 200, 125, 26, 1],
    [26, 68, 50, 208, 50, 68, 26],
    [125, 50, 89, 40, 89, 50, 125],
    [200, 208, 40, 64, 40, 208, 200],
    [125, 50, 89, 40, 89, 50, 125],
    [26, 68, 50, 208, 50, 68, 26],
    [1, 26, 125, 200, 125, 26, 1],
];

/// `4^N P` on the AQW edge for `N = 0..=7`.
pub const TABLE_V_EDGE: [&[u128]; 8] = [
    &[1],
    &[1, 1],
    &[1, 2, 1],
    &[1, 5, 5, 1],
    &[1, 10, 18, 10, 1],
    &[1, 17, 52, 52, 17, 1],
    &[1, 26, 125, 200, 125, 26, 1],
    &[1, 37, 261, 625, 625, 261, 37, 1],
];

/// Published maxima positions.
pub const X_MAX: &[(usize, i64)] = &[(100000, 70684), (1000000, 707050)];

/// Step counts at which the `--full` sweep adds the large runs.
pub const FULL_1D: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Table1,
    Table2,
    Table3,
    Table4,
    Table5,
    Fig4,
    Fig5,
    Fig6,
    Fig9,
    Fig10,
    Fig11,
    Fig12,
    Fig13,
    Fig14,
    Fig19,
    Fig20,
}

impl Target {
    pub const ALL: [Target; 16] = [
        Target::Table1,
        Target::Table2,
        Target::Table3,
        Target::Table4,
        Target::Table5,
        Target::Fig4,
        Target::Fig5,
        Target::Fig6,
        Target::Fig9,
        Target::Fig10,
        Target::Fig11,
        Target::Fig12,
        Target::Fig13,
        Target::Fig14,
        Target::Fig19,
        Target::Fig20,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Target::Table1 => "table1",
            Target::Table2 => "table2",
            Target::Table3 => "table3",
            Target::Table4 => "table4",
            Target::Table5 => "table5",
            Target::Fig4 => "fig4",
            Target::Fig5 => "fig5",
            Target::Fig6 => "fig6",
            Target::Fig9 => "fig9",
            Target::Fig10 => "fig10",
            Target::Fig11 => "fig11",
            Target::Fig12 => "fig12",
            Target::Fig13 => "fig13",
            Target::Fig14 => "fig14",
            Target::Fig19 => "fig19",
            Target::Fig20 => "fig20",
        }
    }

    pub fn protocol(self) -> Protocol {
        match self {
            Target::Table4 | Target::Fig14 => Protocol::Tensor2d,
            Target::Table5 | Target::Fig19 | Target::Fig20 => Protocol::Aqw2d,
            _ => Protocol::Quantum1d,
        }
    }

    /// Desk-scale step counts; `full` adds the hours-scale runs.
    pub fn default_ns(self, full: bool) -> Vec<usize> {
        let mut ns: Vec<usize> = match self {
            Target::Table1 | Target::Table2 | Target::Fig4 | Target::Fig5 | Target::Fig6 => vec![1000, 10000, 100000],
            Target::Table3 => vec![1000, 4000, 10000],
            Target::Table4 => vec![6],
            Target::Table5 => vec![7],
            Target::Fig9 => vec![1000, 3000, 10000, 30000, 100000],
            Target::Fig10 => vec![100000],
            Target::Fig11 => vec![1000, 4000, 10000, 40000],
            Target::Fig12 => vec![1000],
            Target::Fig13 => vec![1000, 10000, 100000],
            Target::Fig14 => vec![100],
            Target::Fig19 => vec![250, 500, 1000],
            Target::Fig20 => vec![100, 250, 500, 1000],
        };
        if full {
            match self {
                Target::Fig4 | Target::Fig5 | Target::Fig6 | Target::Fig9 | Target::Fig13 => ns.push(FULL_1D),
                Target::Fig10 => ns = vec![FULL_1D],
                Target::Table3 => ns.push(40000),
                _ => {}
            }
        }
        ns
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Target {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_', '.'], "");
        let key = key.replace("figure", "fig");
        Target::ALL
            .into_iter()
            .find(|t| t.id() == key)
            .ok_or_else(|| WalkError::Parse(format!("unknown reproduction target `{s}`")))
    }
}

/// One comparison against a published value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub tolerance: String,
    pub pass: bool,
}

impl Check {
    pub fn exact<T: PartialEq + fmt::Debug>(name: impl Into<String>, expected: T, observed: T) -> Self {
        Check {
            name: name.into(),
            pass: expected == observed,
            expected: format!("{expected:?}"),
            observed: format!("{observed:?}"),
            tolerance: "exact".into(),
        }
    }

    pub fn abs(name: impl Into<String>, expected: f64, observed: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            pass: (observed - expected).abs() <= tol,
            expected: fmt_num(expected),
            observed: fmt_num(observed),
            tolerance: format!("±{}", fmt_num(tol)),
        }
    }

    pub fn rel(name: impl Into<String>, expected: f64, observed: f64, frac: f64) -> Self {
        Check {
            name: name.into(),
            pass: (observed - expected).abs() <= frac * expected.abs(),
            expected: fmt_num(expected),
            observed: fmt_num(observed),
            tolerance: format!("±{}%", fmt_num(100.0 * frac)),
        }
    }

    pub fn at_most(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        Check {
            name: name.into(),
            pass: observed <= bound,
            expected: format!("<= {bound:e}"),
            observed: format!("{observed:e}"),
            tolerance: "bound".into(),
        }
    }

    /// A check whose inputs could not be computed.
    pub fn failed(name: impl Into<String>, expected: impl Into<String>, err: &WalkError) -> Self {
        Check {
            name: name.into(),
            expected: expected.into(),
            observed: format!("error: {err}"),
            tolerance: "-".into(),
            pass: false,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: observed {} expected {} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.expected,
            self.tolerance
        )
    }
}

fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e6) {
        format!("{v:.4e}")
    } else {
        format!("{}", (v * 1e4).round() / 1e4)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub target: Target,
    pub ns: Vec<usize>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

impl Report {
    fn new(target: Target, ns: &[usize]) -> Self {
        Report { target, ns: ns.to_vec(), checks: Vec::new(), artifacts: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn push_result(&mut self, name: &str, expected: &str, r: Result<Check>) {
        self.checks.push(r.unwrap_or_else(|e| Check::failed(name, expected, &e)));
    }
}

/// Walks and spectra shared between targets.
#[derive(Default)]
pub struct Session {
    walks: BTreeMap<usize, Distribution>,
    spectra: BTreeMap<usize, Spectrum>,
}

impl Session {
    pub fn new() -> Self {
        Session::default()
    }

    /// Run every missing 1D walk in a single sweep to the largest `n`.
    pub fn prepare(&mut self, ns: &[usize]) -> Result<()> {
        let missing: BTreeSet<usize> = ns.iter().copied().filter(|n| !self.walks.contains_key(n)).collect();
        let Some(&top) = missing.iter().next_back() else { return Ok(()) };
        for (n, d) in walk1d::evolve(top, &missing)? {
            let total = d.total();
            if (total - 1.0).abs() > drift_tolerance(n) {
                return Err(WalkError::NotNormalized { total });
            }
            self.walks.insert(n, d);
        }
        Ok(())
    }

    pub fn walk(&mut self, n: usize) -> Result<&Distribution> {
        self.prepare(&[n])?;
        Ok(&self.walks[&n])
    }

    pub fn spectrum(&mut self, n: usize) -> Result<&Spectrum> {
        if !self.spectra.contains_key(&n) {
            let s = dft(self.walk(n)?)?;
            self.spectra.insert(n, s);
        }
        Ok(&self.spectra[&n])
    }
}

/// Regenerate `target` at the step counts `ns`.
pub fn reproduce(session: &mut Session, target: Target, ns: &[usize]) -> Result<Report> {
    if ns.is_empty() {
        return Err(WalkError::InsufficientData("no step counts given".into()));
    }
    if target.protocol() == Protocol::Quantum1d && target != Target::Table4 {
        session.prepare(ns)?;
    }
    let mut r = Report::new(target, ns);
    match target {
        Target::Table1 => table1(session, ns, &mut r)?,
        Target::Table2 => table2(session, ns, &mut r)?,
        Target::Table3 | Target::Fig11 | Target::Fig12 => fourier_counts(session, target, ns, &mut r)?,
        Target::Table4 => table4(ns, &mut r)?,
        Target::Table5 => table5(ns, &mut r)?,
        Target::Fig4 => fig4(session, ns, &mut r)?,
        Target::Fig5 => fig5(session, ns, &mut r)?,
        Target::Fig6 => fig6(session, ns, &mut r)?,
        Target::Fig9 => fig9(session, ns, &mut r)?,
        Target::Fig10 => fig10(session, ns, &mut r)?,
        Target::Fig13 => fig13(session, ns, &mut r)?,
        Target::Fig14 => fig14(ns, &mut r)?,
        Target::Fig19 => fig19(ns, &mut r)?,
        Target::Fig20 => fig20(ns, &mut r)?,
    }
    Ok(r)
}

fn no_reference(target: Target, n: usize) -> WalkError {
    WalkError::InsufficientData(format!("no published {target} values at N = {n}"))
}

fn dist_artifact(d: &Distribution) -> Artifact {
    Artifact::new(format!("distribution_n{}", d.n_steps()), ArtifactData::Distribution(d.clone()))
}

fn table1(s: &mut Session, ns: &[usize], r: &mut Report) -> Result<()> {
    for &n in ns {
        let rows: Vec<_> = TABLE_I.iter().filter(|(m, _)| *m == n).collect();
        if rows.is_empty() {
            return Err(no_reference(r.target, n));
        }
        // Counts are exact up to 10^4; the 10^5 rows allow one peak.
        let tol = if n >= 100000 { 1 } else { 0 };
        let d = s.walk(n)?;
        let mut out = Vec::new();
        for (_, row) in rows {
            let mut observed = Vec::new();
            for &(lo, hi, want) in row {
                let got = find_peaks(d, lo, hi)?.count;
                observed.push(got);
                out.push(vec![n.to_string(), lo.to_string(), hi.to_string(), got.to_string(), want.to_string()]);
            }
            let expected: Vec<usize> = row.iter().map(|w| w.2).collect();
            let name = format!("N={n} windows [{}..{}]", row[0].0, row[6].1);
            if tol == 0 {
                r.push(Check::exact(name, expected, observed));
            } else {
                let pass = expected.iter().zip(&observed).all(|(a, b)| a.abs_diff(*b) <= tol);
                r.push(Check {
                    name,
                    expected: format!("{expected:?}"),
                    observed: format!("{observed:?}"),
                    tolerance: format!("±{tol} per window"),
                    pass,
                });
            }
        }
        r.artifacts.push(Artifact::table(
            format!("table1_n{n}"),
            Protocol::Quantum1d,
            &["n", "lo", "hi", "peaks", "published"],
            out,
        ));
        r.artifacts.push(dist_artifact(d));
    }
    Ok(())
}

/// Width and peak tolerances for the beat near `0.58 N`, growing as `sqrt N`.
pub fn table2_tolerance(n: usize) -> (f64, usize) {
    match n {
        0..=1000 => (4.0, 1),
        1001..=10000 => (10.0, 2),
        _ => (32.0, 6),
    }
}

fn table2(s: &mut Session, ns: &[usize], r: &mut Report) -> Result<()> {
    let mut rows = Vec::new();
    for &n in ns {
        let &(_, lo, hi, width, peaks) = TABLE_II.iter().find(|t| t.0 == n).ok_or_else(|| no_reference(r.target, n))?;
        let nf = n as f64;
        let d = s.walk(n)?;
        let beats = detect_beats(d, (0.5 * nf) as i64, (0.65 * nf) as i64)?;
        let centre = 0.5 * (lo + hi) as f64;
        let (wt, pt) = table2_tolerance(n);
        match beats.segment_containing(centre) {
            Some(seg) => {
                r.push(Check::abs(format!("N={n} beat width"), width, seg.width(), wt));
                r.push(Check::abs(format!("N={n} beat peaks"), peaks as f64, seg.peak_count as f64, pt as f64));
                rows.push(vec![
                    n.to_string(),
                    cell(seg.lo),
                    cell(seg.hi),
                    cell(seg.width()),
                    seg.peak_count.to_string(),
                ]);
            }
            None => r.push(Check::failed(
                format!("N={n} beat"),
                format!("segment covering {centre}"),
                &WalkError::InsufficientData("no beat nodes around the published region".into()),
            )),
        }
    }
    r.artifacts.push(Artifact::table("table2", Protocol::Quantum1d, &["n", "lo", "hi", "width", "peaks"], rows));
    Ok(())
}

/// Last-beat tolerances `(length, peaks)` in rescaled units.
pub fn table3_tolerance(n: usize) -> (f64, usize) {
    if n <= 10000 {
        (3.0, 1)
    } else {
        (6.0, 2)
    }
}

fn fourier_counts(s: &mut Session, target: Target, ns: &[usize], r: &mut Report) -> Result<()> {
    let mut rows = Vec::new();
    let mut lengths = Vec::new();
    for &n in ns {
        let spec = s.spectrum(n)?.clone();
        let half = fourier_peak_count(&spec);
        let total = 2 * half + 1;
        let last = fourier_beats(&spec).last().copied();
        let published = TABLE_III.iter().find(|t| t.0 == n);
        if target == Target::Table3 && published.is_none() {
            return Err(no_reference(target, n));
        }
        if target != Target::Fig12 {
            r.push(Check::rel(format!("N={n} Fourier peaks per half vs N/12"), n as f64 / 12.0, half as f64, 0.01));
        }
        if let Some(&(_, t, peaks, length)) = published {
            if target == Target::Table3 {
                r.push(Check::rel(format!("N={n} Fourier total peaks"), t as f64, total as f64, 0.01));
            }
            let (lt, pt) = table3_tolerance(n);
            match last {
                Some(seg) => {
                    r.push(Check::abs(format!("N={n} last beat length"), length, seg.width(), lt));
                    r.push(Check::abs(
                        format!("N={n} last beat peaks"),
                        peaks as f64,
                        seg.peak_count as f64,
                        pt as f64,
                    ));
                }
                None => r.push(Check::failed(
                    format!("N={n} last beat"),
                    format!("{length}"),
                    &WalkError::InsufficientData("no beat nodes".into()),
                )),
            }
        }
        if let Some(seg) = last {
            lengths.push((n as f64, seg.width()));
        }
        let (lw, lp) = last.map_or((f64::NAN, 0), |b| (b.width(), b.peak_count));
        rows.push(vec![n.to_string(), half.to_string(), total.to_string(), cell(lw), lp.to_string()]);
        if target == Target::Fig12 {
            let band = spec.band();
            let start = band.values.len() * 3 / 5;
            let pts = (start..band.values.len()).map(|i| vec![cell(band.rescaled[i]), cell(band.values[i])]).collect();
            r.artifacts.push(Artifact::table(format!("fourier_band_n{n}"), Protocol::Quantum1d, &["Nk/pi", "F"], pts));
        }
        r.artifacts.push(Artifact::new(format!("spectrum_n{n}"), ArtifactData::Spectrum(spec)));
    }
    if target == Target::Fig11 && lengths.len() >= 3 {
        let f = fit_power_law(&lengths)?;
        r.push(Check::abs("last beat length exponent", 0.5, f.param("exponent"), 0.05));
    }
    r.artifacts.push(Artifact::table(
        format!("{target}_counts"),
        Protocol::Quantum1d,
        &["n", "peaks_per_half", "total_peaks", "last_beat_length", "last_beat_peaks"],
        rows,
    ));
    Ok(())
}

fn table4(ns: &[usize], r: &mut Report) -> Result<()> {
    if ns != [6] {
        return Err(no_reference(r.target, ns[0]));
    }
    let tensor = exact_walk(Protocol::Tensor2d, 6)?.live_rows(4096);
    let want: Vec<Vec<u128>> =
        TABLE_IV_TENSOR.iter().map(|a| TABLE_IV_TENSOR.iter().map(|b| a * b).collect()).collect();
    r.push(Check::exact("tensor 4096 P(x, y)", Some(want), tensor.clone()));
    let aqw = exact_walk(Protocol::Aqw2d, 6)?.live_rows(4096);
    let want: Vec<Vec<u128>> = TABLE_IV_AQW.iter().map(|row| row.to_vec()).collect();
    r.push(Check::exact("AQW 4096 P(x, y)", Some(want), aqw.clone()));
    let grover = exact_walk(Protocol::Grover2d, 6)?.live_rows(4096);
    r.push(Check::exact("Grover equals AQW", aqw.clone(), grover));
    for (name, rows) in [("table4_tensor", tensor), ("table4_aqw", aqw)] {
        let rows = rows.unwrap_or_default().into_iter().map(|row| row.iter().map(u128::to_string).collect()).collect();
        let cols = ["x=-6", "x=-4", "x=-2", "x=0", "x=2", "x=4", "x=6"];
        r.artifacts.push(Artifact::table(name, Protocol::Tensor2d, &cols, rows));
    }
    Ok(())
}

fn table5(ns: &[usize], r: &mut Report) -> Result<()> {
    let mut rows = Vec::new();
    for &n in ns {
        if n >= TABLE_V_EDGE.len() {
            return Err(no_reference(r.target, n));
        }
        for m in 0..=n {
            let binom = binomial_coefficient_row(m)?;
            let edge = if m == 0 { vec![1] } else { edge_distribution_analytic(m)?.numerators.unwrap_or_default() };
            r.push(Check::exact(
                format!("N={m} binomial row"),
                (0..=m as u128).map(|k| binom_ref(m as u128, k)).collect::<Vec<_>>(),
                binom.clone(),
            ));
            r.push(Check::exact(format!("N={m} pseudobinomial row"), TABLE_V_EDGE[m].to_vec(), edge.clone()));
            let join = |v: &[u128]| v.iter().map(u128::to_string).collect::<Vec<_>>().join(" ");
            rows.push(vec![m.to_string(), join(&binom), join(&edge)]);
        }
    }
    r.artifacts.push(Artifact::table("table5", Protocol::Aqw2d, &["n", "binomial", "pseudobinomial"], rows));
    Ok(())
}

/// `C(n, k)` by the multiplicative formula.
fn binom_ref(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn fig4(s: &mut Session, ns: &[usize], r: &mut Report) -> Result<()> {
    for &n in ns {
        let d = s.walk(n)?.clone();
        r.push(Check::at_most(format!("N={n} |sum P - 1|"), drift_tolerance(n), (d.total() - 1.0).abs()));
        let asym = d.iter().map(|(x, p)| (p - d.prob_at(-x)).abs()).fold(0.0, f64::max);
        r.push(Check::at_most(format!("N={n} max |P(x) - P(-x)|"), 1e-12, asym));
        let scaled = d
            .iter()
            .filter(|&(x, _)| (x - n as i64).rem_euclid(2) == 0)
            .map(|(x, p)| vec![cell(x as f64 / n as f64), cell(n as f64 * p)])
            .collect();
        r.artifacts.push(Artifact::table(format!("scaled_n{n}"), Protocol::Quantum1d, &["x/N", "N*P"], scaled));
    }
    Ok(())
}

fn fig5(s: &mut Session, ns: &[usize], r: &mut Report) -> Result<()> {
    let mut rows = Vec::new();
    for &n in ns {
        let (x, p) = locate_xmax(s.walk(n)?)?;
        if let Some(&(_, want)) = X_MAX.iter().find(|t| t.0 == n) {
            r.push(Check::exact(format!("N={n} x_max"), want, x));
        }
        r.push(Check::at_most(format!("N={n} x_max - N/sqrt2"), 0.0, x as f64 - n as f64 * FRAC_1_SQRT_2));
        rows.push(vec![n.to_string(), x.to_string(), cell(x as f64 / n as f64), cell(p)]);
    }
    r.artifacts.push(Artifact::table("x_max", Protocol::Quantum1d, &["n", "x_max", "x_max/N", "P"], rows));
    Ok(())
}

fn fig6(s: &mut Session, ns: &[usize], r: &mut Report) -> Result<()> {
    let mut rows = Vec::new();
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for &n in ns {
        let pts = reference_points(s.walk(n)?)?;
        let value = |name: &str| pts.iter().find(|p| p.name == name).map_or(f64::NAN, |p| p.value);
        r.push(Check::rel(format!("N={n} P(N/sqrt2)/P(x_max)"), 0.44, value("N/sqrt2") / value("x_max"), 0.10));
        for p in pts {
            rows.push(vec![n.to_string(), p.name.clone(), p.position.to_string(), cell(p.value)]);
            series.entry(p.name).or_default().push((n as f64, p.value));
        }
    }
    if ns.len() >= 2 {
        for name in ["0", "N/(2sqrt2)", "N/2"] {
            let f = fit_power_law(&series[name]);
            r.push_result(
                &format!("P({name}) exponent"),
                "-1",
                f.map(|f| Check::abs(format!("P({name}) exponent"), -1.0, f.param("exponent"), 0.05)),
            );
        }
        let f = fit_power_law(&series["x_max"])?;
        r.push(Check::abs("P(x_max) exponent", -2.0 / 3.0, f.param("exponent"), 0.05));
        r.push(Check::rel("P(x_max) prefactor", 1.8, f.param("prefactor"), 0.10));
    }
    r.artifacts.push(Artifact::table(
        "reference_points",
        Protocol::Quantum1d,
        &["n", "point", "x", "P_envelope"],
        rows,
    ));
    Ok(())
}

fn fig9(s: &mut Session, ns: &[usize], r: &mut Report) -> Result<()> {
    let runs: BTreeMap<usize, Distribution> = ns.iter().map(|&n| Ok((n, s.walk(n)?.clone()))).collect::<Result<_>>()?;
    let w = width_scalings(&runs)?;
    r.push(Check::abs("first 10 peaks width exponent", 0.5, w.first_ten.param("exponent"), 0.05));
    r.push(Check::abs("last 10 peaks width exponent", 1.0 / 3.0, w.last_ten.param("exponent"), 0.05));
    r.push(Check::abs("FWHM exponent", 1.0 / 3.0, w.fwhm.param("exponent"), 0.05));
    let mut rows = Vec::new();
    for (n, d) in &runs {
        let a = crate::analysis::first_ten_width(d)?;
        let b = crate::analysis::last_ten_width(d)?;
        let c = crate::analysis::fwhm(d)?;
        rows.push(vec![n.to_string(), cell(a), cell(b), cell(c)]);
    }
    r.artifacts.push(Artifact::table("widths", Protocol::Quantum1d, &["n", "first_ten", "last_ten", "fwhm"], rows));
    r.artifacts.push(json_artifact("width_fits", &w)?);
    Ok(())
}

fn json_artifact<T: Serialize>(name: &str, v: &T) -> Result<Artifact> {
    Ok(Artifact::new(name, ArtifactData::Json { protocol: Protocol::Quantum1d, value: serde_json::to_value(v)? }))
}

fn fig10(s: &mut Session, ns: &[usize], r: &mut Report) -> Result<()> {
    for &n in ns {
        let d = s.walk(n)?.clone();
        let (lo, hi) = outer_window(&d)?;
        let outer = fit_envelope_outer(&extract_envelope(&d, Side::Upper, lo, hi)?, n)?;
        r.push(Check::abs(format!("N={n} outer envelope c"), 0.5, outer.param("c"), 0.05));
        let (lo, hi) = centre_window(&d);
        let centre = fit_envelope_center(&extract_envelope(&d, Side::Upper, lo, hi)?, n)?;
        r.push(Check::abs(format!("N={n} central envelope c'"), 2.0, centre.param("c"), 0.1));
        let tail = fit_tail(&d, n)?;
        r.push(Check::rel(format!("N={n} tail d"), 3.2, tail.param("d"), 0.10));
        r.artifacts.push(json_artifact(&format!("envelope_fits_n{n}"), &[outer, centre, tail])?);
        let env = extract_envelope(&d, Side::Upper, 0, n as i64)?;
        let rows = env.points.iter().map(|(x, p)| vec![x.to_string(), cell(*p)]).collect();
        r.artifacts.push(Artifact::table(format!("envelope_n{n}"), Protocol::Quantum1d, &["x", "P_envelope"], rows));
    }
    Ok(())
}

fn fig13(s: &mut Session, ns: &[usize], r: &mut Report) -> Result<()> {
    let spectra: Vec<Spectrum> = ns.iter().map(|&n| s.spectrum(n).cloned()).collect::<Result<_>>()?;
    let small = fit_fourier_small_k(&spectra)?;
    let large = fit_fourier_large_k(&spectra)?;
    r.push(Check::abs("Fourier small-k c", 0.5, small.param("c"), 0.05));
    r.push(Check::abs("Fourier large-k c'", 1.0, large.param("c_prime"), 0.1));
    if spectra.len() >= 2 {
        r.push(Check::abs("Fourier amplitude slope vs N", -0.5, small.param("amplitude_slope"), 0.05));
    }
    r.artifacts.push(json_artifact("fourier_fits", &[small, large])?);
    for spec in spectra {
        let n = spec.n_steps();
        r.artifacts.push(Artifact::new(format!("spectrum_n{n}"), ArtifactData::Spectrum(spec)));
    }
    Ok(())
}

fn fig14(ns: &[usize], r: &mut Report) -> Result<()> {
    for &n in ns {
        check_2d_size(n)?;
        let g = crate::walk2d::tensor_walk(n);
        let one = walk1d::distribution(n);
        let dev = factorization_error(&g, &one);
        r.push(Check::at_most(format!("N={n} |P(x,y) - P(x)P(y)|"), 1e-12, dev));
        r.push(Check::at_most(format!("N={n} |sum P - 1|"), drift_tolerance(n), (g.total() - 1.0).abs()));
        r.artifacts.push(Artifact::new(format!("tensor_n{n}"), ArtifactData::Grid(g)));
    }
    Ok(())
}

/// Largest 2D run the reproduction targets will start.
pub const MAX_2D: usize = 1000;

fn check_2d_size(n: usize) -> Result<()> {
    if n > MAX_2D {
        return Err(WalkError::InsufficientData(format!("2D runs are limited to N <= {MAX_2D}, got {n}")));
    }
    Ok(())
}

/// Max `|P(x, y) - P1(x) P1(y)|` over the grid.
pub fn factorization_error(g: &Distribution2D, one: &Distribution) -> f64 {
    let r = g.radius();
    let mut worst: f64 = 0.0;
    for y in -r..=r {
        for x in -r..=r {
            worst = worst.max((g.get(x, y) - one.prob_at(x) * one.prob_at(y)).abs());
        }
    }
    worst
}

fn fig19(ns: &[usize], r: &mut Report) -> Result<()> {
    let top = *ns.iter().max().unwrap_or(&0);
    check_2d_size(top)?;
    let runs = evolve2d(Protocol::Aqw2d, top, &ns.iter().copied().collect())?;
    let mut rows = Vec::new();
    for &n in ns {
        let count = diagonal_peak_count(&runs[&n])?;
        let density = count as f64 / n as f64;
        r.push(Check::abs(format!("N={n} diagonal peak density"), 0.085, density, 0.01));
        rows.push(vec![n.to_string(), count.to_string(), cell(density)]);
    }
    r.artifacts.push(Artifact::table("diagonal_peaks", Protocol::Aqw2d, &["n", "peaks", "peaks/N"], rows));
    Ok(())
}

/// Edge rows up to this `N` are also compared against the simulation.
pub const EDGE_SIMULATION_MAX: usize = 200;

fn fig20(ns: &[usize], r: &mut Report) -> Result<()> {
    let fit = fit_edge_gaussian(ns)?;
    for &n in ns {
        let want = (n as f64 / 2.0).sqrt();
        r.push(Check::rel(format!("N={n} edge sigma vs sqrt(N/2)"), want, fit.param(&format!("sigma@{n}")), 0.03));
        if n <= EDGE_SIMULATION_MAX {
            r.push(Check::at_most(format!("N={n} edge formula vs simulation"), 1e-12, edge_matches_simulation(n)?));
        }
        let e = edge_distribution_analytic(n)?;
        let b = binomial_distribution(n);
        let rows =
            e.positions.iter().zip(&e.probs).map(|(y, p)| vec![y.to_string(), cell(*p), cell(b.prob_at(*y))]).collect();
        r.artifacts.push(Artifact::table(format!("edge_n{n}"), Protocol::Aqw2d, &["y", "P_edge", "P_binomial"], rows));
    }
    r.push(Check::abs("edge amplitude exponent", -1.0, fit.param("amplitude_exponent"), 0.05));
    r.artifacts.push(Artifact::new(
        "edge_fit",
        ArtifactData::Json { protocol: Protocol::Aqw2d, value: json!({ "fit": fit, "pi": PI }) },
    ));
    Ok(())
}
