//! Acceptance suite: one PASS/FAIL line per criterion, followed by the
//! individual measurements. Published values and tolerances are pinned
//! below. Exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;

use qwalk::analysis::{
    centre_window, detect_beats, extract_envelope, find_peaks, fit_envelope_center, fit_envelope_outer, fit_power_law,
    fit_tail, locate_xmax, outer_window, reference_points, total_peaks, width_scalings, Side,
};
use qwalk::distribution::{Distribution, Protocol};
use qwalk::oracle::{analytic_distribution, compare};
use qwalk::reproduce::factorization_error;
use qwalk::spectral::{dft, fit_fourier_large_k, fit_fourier_small_k, fourier_beats, fourier_peak_count, Spectrum};
use qwalk::walk1d;
use qwalk::walk2d::{
    diagonal_peak_count, edge_distribution_analytic, evolve2d, exact_walk, fit_edge_gaussian, fit_slice_envelope,
    omega2_identity_deviation, slice, slice_amplitude_exponent, SliceFit, WalkState2D,
};

const ORACLE_NS: [usize; 2] = [100, 1000];
const ORACLE_FLOOR: f64 = 1e-12;
const ORACLE_REL_TOL: f64 = 1e-5;

const X_MAX_N: usize = 100_000;
const X_MAX_PUBLISHED: i64 = 70684;

const SCALING_NS: [usize; 3] = [1000, 10_000, 100_000];
const EXPONENT_TOL: f64 = 0.05;
const P_MAX_PREFACTOR: f64 = 1.8;
const P_MAX_PREFACTOR_REL: f64 = 0.10;
const HALF_RATIO: f64 = 0.44;
const HALF_RATIO_REL: f64 = 0.10;

const TABLE_I: [(usize, i64, [(i64, usize); 7]); 5] = [
    (1000, 100, [(0, 2), (100, 5), (200, 8), (300, 12), (400, 17), (500, 23), (600, 17)]),
    (10_000, 100, [(500, 2), (1500, 5), (2500, 8), (3500, 12), (4500, 17), (5500, 23), (6500, 17)]),
    (10_000, 100, [(5000, 20), (5500, 23), (5600, 24), (5700, 25), (5800, 25), (5900, 24), (6000, 23)]),
    (100_000, 100, [(5500, 2), (15500, 5), (25500, 8), (35500, 12), (45500, 17), (55500, 23), (65500, 16)]),
    (100_000, 100, [(50000, 20), (50000, 20), (52000, 21), (54000, 22), (56000, 24), (58000, 25), (60000, 23)]),
];
/// Windows printed as `[500, 600]` and `[50000, 50200]` at `N = 10^5`
/// break the column scaling and the 100-site width; the rows above use
/// `[5500, 5600]` and `[50000, 50100]`.
const PEAK_DENSITY: f64 = 0.085;
const PEAK_DENSITY_TOL: f64 = 0.005;
const FOURIER_PER_HALF_REL: f64 = 0.01;

const TABLE_II: [(usize, i64, i64, f64, usize, f64, usize); 2] =
    [(1000, 546, 604, 58.0, 14, 4.0, 1), (10_000, 5682, 5860, 176.0, 44, 10.0, 2)];
const TABLE_III: [(usize, usize, f64); 3] = [(1000, 9, 45.0), (4000, 18, 87.0), (10_000, 29, 140.0)];
const TABLE_III_TOL: (f64, usize) = (3.0, 1);

const ENVELOPE_N: usize = 100_000;
const OUTER_C: (f64, f64) = (0.5, 0.05);
const CENTRE_C: (f64, f64) = (2.0, 0.1);
const TAIL_D: (f64, f64) = (3.2, 0.10);
const FOURIER_C: (f64, f64) = (0.5, 0.05);
const FOURIER_C_PRIME: (f64, f64) = (1.0, 0.1);
const FOURIER_SLOPE: (f64, f64) = (-0.5, 0.05);

const WIDTH_NS: [usize; 5] = [1000, 3000, 10_000, 30_000, 100_000];

const TWO_D_N: usize = 1000;
const TWO_D_MID: usize = 500;
const FACTORIZATION_TOL: f64 = 1e-12;
const GROVER_MAX: usize = 50;
const GROVER_TOL: f64 = 1e-12;
const EDGE_SIM_MAX: usize = 200;
const EDGE_SIM_TOL: f64 = 1e-12;
const EDGE_NS: [usize; 4] = [100, 250, 500, 1000];
const EDGE_SIGMA_REL: f64 = 0.03;
const EDGE_AMPLITUDE: (f64, f64) = (-1.0, 0.05);
const SLICE_TARGETS: [(SliceFit, f64, f64); 4] =
    [(SliceFit::A1, 0.5, 0.1), (SliceFit::B1, 1.0, 0.1), (SliceFit::A2, 1.0, 0.1), (SliceFit::B2, 0.5, 0.2)];
const DIAGONAL_NS: [usize; 3] = [250, 500, 1000];
const DIAGONAL_DENSITY: (f64, f64) = (0.085, 0.01);
const DISPERSION_GRID: usize = 32;
const DISPERSION_TOL: f64 = 1e-10;

struct Criterion {
    id: usize,
    title: &'static str,
    lines: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Criterion { id, title, lines: Vec::new() }
    }

    fn check(&mut self, pass: bool, detail: String) {
        self.lines.push((pass, detail));
    }

    fn near(&mut self, label: &str, observed: f64, want: f64, tol: f64) {
        let pass = (observed - want).abs() <= tol;
        self.check(pass, format!("{label}: {observed:.6} vs {want} ± {tol}"));
    }

    fn rel(&mut self, label: &str, observed: f64, want: f64, frac: f64) {
        let pass = (observed - want).abs() <= frac * want.abs();
        self.check(pass, format!("{label}: {observed:.6} vs {want} ± {}%", 100.0 * frac));
    }

    fn bound(&mut self, label: &str, observed: f64, max: f64) {
        self.check(observed <= max, format!("{label}: {observed:.3e} <= {max:e}"));
    }

    fn note(&mut self, detail: String) {
        self.lines.push((true, format!("(info) {detail}")));
    }

    fn error(&mut self, label: &str, e: impl std::fmt::Display) {
        self.check(false, format!("{label}: error {e}"));
    }

    fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.0)
    }

    fn print(&self) {
        println!("{} criterion {:>2}: {}", if self.passed() { "PASS" } else { "FAIL" }, self.id, self.title);
        for (ok, l) in &self.lines {
            println!("        {} {l}", if *ok { "ok " } else { "OUT" });
        }
    }
}

struct Data {
    walks: BTreeMap<usize, Distribution>,
    spectra: BTreeMap<usize, Spectrum>,
}

impl Data {
    fn walk(&self, n: usize) -> &Distribution {
        &self.walks[&n]
    }
}

fn one_d() -> Data {
    let ns: BTreeSet<usize> = ORACLE_NS
        .into_iter()
        .chain(SCALING_NS)
        .chain(WIDTH_NS)
        .chain(TABLE_III.map(|t| t.0))
        .chain([TWO_D_MID, TWO_D_N])
        .collect();
    let top = *ns.last().unwrap();
    let walks = walk1d::evolve(top, &ns).expect("1D sweep");
    let spectral: BTreeSet<usize> = SCALING_NS.into_iter().chain(TABLE_III.map(|t| t.0)).collect();
    let spectra = spectral.into_iter().map(|n| (n, dft(&walks[&n]).expect("spectrum"))).collect();
    Data { walks, spectra }
}

fn c1(d: &Data) -> Criterion {
    let mut c = Criterion::new(1, "oracle equivalence");
    for n in ORACLE_NS {
        match compare(&analytic_distribution(n), d.walk(n), ORACLE_FLOOR) {
            Ok(e) => c.bound(&format!("N={n} max relative error"), e, ORACLE_REL_TOL),
            Err(e) => c.error(&format!("N={n}"), e),
        }
    }
    c
}

fn c2() -> Criterion {
    let mut c = Criterion::new(2, "golden integers");
    let six = walk1d::distribution(6).live_only();
    let scaled: Vec<f64> = six.probs().iter().map(|p| 64.0 * p).collect();
    let want = [1.0, 18.0, 9.0, 8.0, 9.0, 18.0, 1.0];
    let ok = scaled.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12);
    c.check(ok, format!("N=6 64 P = {:?}", scaled.iter().map(|v| v.round() as i64).collect::<Vec<_>>()));
    let row = [1u128, 18, 9, 8, 9, 18, 1];
    let tensor: Vec<Vec<u128>> = row.iter().map(|a| row.iter().map(|b| a * b).collect()).collect();
    let got = exact_walk(Protocol::Tensor2d, 6).ok().and_then(|g| g.live_rows(4096));
    c.check(got.as_ref() == Some(&tensor), "N=6 tensor block, 4096 P exact".into());
    let aqw: Vec<Vec<u128>> = [
        [1, 26, 125, 200, 125, 26, 1],
        [26, 68, 50, 208, 50, 68, 26],
        [125, 50, 89, 40, 89, 50, 125],
        [200, 208, 40, 64, 40, 208, 200],
        [125, 50, 89, 40, 89, 50, 125],
        [26, 68, 50, 208, 50, 68, 26],
        [1, 26, 125, 200, 125, 26, 1],
    ]
    .iter()
    .map(|r| r.to_vec())
    .collect();
    let got = exact_walk(Protocol::Aqw2d, 6).ok().and_then(|g| g.live_rows(4096));
    c.check(got.as_ref() == Some(&aqw), "N=6 AQW block, 4096 P exact".into());
    let table_v: [&[u128]; 7] = [
        &[1, 1],
        &[1, 2, 1],
        &[1, 5, 5, 1],
        &[1, 10, 18, 10, 1],
        &[1, 17, 52, 52, 17, 1],
        &[1, 26, 125, 200, 125, 26, 1],
        &[1, 37, 261, 625, 625, 261, 37, 1],
    ];
    for (i, want) in table_v.iter().enumerate() {
        let n = i + 1;
        let got = edge_distribution_analytic(n).ok().and_then(|e| e.numerators);
        c.check(got.as_deref() == Some(*want), format!("pseudobinomial row N={n}: {got:?}"));
    }
    let g = exact_walk(Protocol::Aqw2d, 4).expect("exact N=4");
    let edge: Vec<u128> = [0, 2, 4].iter().map(|&y| g.get(4, y) * 256 / g.denominator).collect();
    c.check(edge == [18, 10, 1], format!("N=4 edge 256 P at y = 0, 2, 4: {edge:?}"));
    c
}

fn c3(d: &Data) -> Criterion {
    let mut c = Criterion::new(3, "x_max at N = 10^5");
    match locate_xmax(d.walk(X_MAX_N)) {
        Ok((x, _)) => c.check(x == X_MAX_PUBLISHED, format!("x_max = {x} vs {X_MAX_PUBLISHED}")),
        Err(e) => c.error("x_max", e),
    }
    c
}

fn c4(d: &Data) -> Criterion {
    let mut c = Criterion::new(4, "reference-point scaling");
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for n in SCALING_NS {
        let pts = match reference_points(d.walk(n)) {
            Ok(p) => p,
            Err(e) => {
                c.error(&format!("N={n}"), e);
                continue;
            }
        };
        let v = |name: &str| pts.iter().find(|p| p.name == name).map_or(f64::NAN, |p| p.value);
        c.rel(&format!("N={n} P(N/sqrt2)/P(x_max)"), v("N/sqrt2") / v("x_max"), HALF_RATIO, HALF_RATIO_REL);
        for p in pts {
            series.entry(p.name).or_default().push((n as f64, p.value));
        }
    }
    for name in ["0", "N/(2sqrt2)", "N/2"] {
        match fit_power_law(&series[name]) {
            Ok(f) => c.near(&format!("P({name}) exponent"), f.param("exponent"), -1.0, EXPONENT_TOL),
            Err(e) => c.error(name, e),
        }
    }
    match fit_power_law(&series["x_max"]) {
        Ok(f) => {
            c.near("P(x_max) exponent", f.param("exponent"), -2.0 / 3.0, EXPONENT_TOL);
            c.rel("P(x_max) prefactor", f.param("prefactor"), P_MAX_PREFACTOR, P_MAX_PREFACTOR_REL);
        }
        Err(e) => c.error("x_max", e),
    }
    c
}

fn c5(d: &Data) -> Criterion {
    let mut c = Criterion::new(5, "peak statistics");
    for (row, &(n, width, cells)) in TABLE_I.iter().enumerate() {
        let tol = if n >= 100_000 { 1 } else { 0 };
        let mut got = Vec::new();
        for &(lo, _) in &cells {
            got.push(find_peaks(d.walk(n), lo, lo + width).map_or(usize::MAX, |p| p.count));
        }
        let want: Vec<usize> = cells.iter().map(|c| c.1).collect();
        let ok = got.iter().zip(&want).all(|(a, b)| a.abs_diff(*b) <= tol);
        c.check(ok, format!("Table I row {} (N={n}): {got:?} vs {want:?} ± {tol}", row + 1));
    }
    for n in SCALING_NS {
        let density = total_peaks(d.walk(n)) as f64 / n as f64;
        c.near(&format!("N={n} peaks/N"), density, PEAK_DENSITY, PEAK_DENSITY_TOL);
    }
    for (&n, s) in &d.spectra {
        c.rel(
            &format!("N={n} Fourier peaks per half"),
            fourier_peak_count(s) as f64,
            n as f64 / 12.0,
            FOURIER_PER_HALF_REL,
        );
    }
    c
}

fn c6(d: &Data) -> Criterion {
    let mut c = Criterion::new(6, "beat structures");
    for (n, lo, hi, width, peaks, wt, pt) in TABLE_II {
        let nf = n as f64;
        match detect_beats(d.walk(n), (0.5 * nf) as i64, (0.65 * nf) as i64) {
            Ok(b) => match b.segment_containing(0.5 * (lo + hi) as f64) {
                Some(s) => {
                    c.near(&format!("N={n} beat width [{:.0}, {:.0}]", s.lo, s.hi), s.width(), width, wt);
                    c.near(&format!("N={n} beat peaks"), s.peak_count as f64, peaks as f64, pt as f64);
                }
                None => c.check(false, format!("N={n}: no beat segment around the published region")),
            },
            Err(e) => c.error(&format!("N={n}"), e),
        }
    }
    for (n, peaks, length) in TABLE_III {
        match fourier_beats(&d.spectra[&n]).last() {
            Some(s) => {
                c.near(&format!("N={n} last Fourier beat length"), s.width(), length, TABLE_III_TOL.0);
                c.near(
                    &format!("N={n} last Fourier beat peaks"),
                    s.peak_count as f64,
                    peaks as f64,
                    TABLE_III_TOL.1 as f64,
                );
            }
            None => c.check(false, format!("N={n}: no Fourier beat found")),
        }
    }
    c
}

fn c7(d: &Data) -> Criterion {
    let mut c = Criterion::new(7, "envelope fits");
    let n = ENVELOPE_N;
    let w = d.walk(n);
    let outer = outer_window(w)
        .and_then(|(lo, hi)| extract_envelope(w, Side::Upper, lo, hi))
        .and_then(|e| fit_envelope_outer(&e, n));
    match outer {
        Ok(f) => c.near("outer c", f.param("c"), OUTER_C.0, OUTER_C.1),
        Err(e) => c.error("outer", e),
    }
    let (lo, hi) = centre_window(w);
    match extract_envelope(w, Side::Upper, lo, hi).and_then(|e| fit_envelope_center(&e, n)) {
        Ok(f) => c.near("central c'", f.param("c"), CENTRE_C.0, CENTRE_C.1),
        Err(e) => c.error("centre", e),
    }
    match fit_tail(w, n) {
        Ok(f) => c.rel("tail d", f.param("d"), TAIL_D.0, TAIL_D.1),
        Err(e) => c.error("tail", e),
    }
    let spectra: Vec<Spectrum> = SCALING_NS.iter().map(|n| d.spectra[n].clone()).collect();
    let key = |name: &str| format!("{name}@{n}");
    match fit_fourier_small_k(&spectra) {
        Ok(f) => {
            c.near("Fourier small-k c", f.param(&key("c")), FOURIER_C.0, FOURIER_C.1);
            c.near("Fourier amplitude slope", f.param("amplitude_slope"), FOURIER_SLOPE.0, FOURIER_SLOPE.1);
            c.note(format!("small-k c by N: {:?}", SCALING_NS.map(|m| round4(f.param(&format!("c@{m}"))))));
        }
        Err(e) => c.error("Fourier small k", e),
    }
    match fit_fourier_large_k(&spectra) {
        Ok(f) => {
            c.near("Fourier large-k c'", f.param(&key("c_prime")), FOURIER_C_PRIME.0, FOURIER_C_PRIME.1);
            c.note(format!("large-k c' by N: {:?}", SCALING_NS.map(|m| round4(f.param(&format!("c_prime@{m}"))))));
        }
        Err(e) => c.error("Fourier large k", e),
    }
    c
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn c8(d: &Data) -> Criterion {
    let mut c = Criterion::new(8, "width scalings");
    let runs: BTreeMap<usize, Distribution> = WIDTH_NS.iter().map(|&n| (n, d.walk(n).clone())).collect();
    match width_scalings(&runs) {
        Ok(w) => {
            c.near("first ten peaks exponent", w.first_ten.param("exponent"), 0.5, EXPONENT_TOL);
            c.near("last ten peaks exponent", w.last_ten.param("exponent"), 1.0 / 3.0, EXPONENT_TOL);
            c.near("FWHM exponent", w.fwhm.param("exponent"), 1.0 / 3.0, EXPONENT_TOL);
        }
        Err(e) => c.error("widths", e),
    }
    c
}

fn c9(d: &Data) -> Criterion {
    let mut c = Criterion::new(9, "2D properties");
    let mid: BTreeSet<usize> = [TWO_D_MID].into();
    let tensor = evolve2d(Protocol::Tensor2d, TWO_D_N, &mid).expect("tensor run");
    for (&n, g) in &tensor {
        c.bound(&format!("N={n} tensor factorization"), factorization_error(g, d.walk(n)), FACTORIZATION_TOL);
    }

    let mut a = WalkState2D::new(Protocol::Aqw2d).unwrap();
    let mut g = WalkState2D::new(Protocol::Grover2d).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..GROVER_MAX {
        a.step();
        g.step();
        let (pa, pg) = (a.probability(), g.probability());
        worst = pa.probs().iter().zip(pg.probs()).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
    }
    c.bound(&format!("AQW vs Grover, every N <= {GROVER_MAX}"), worst, GROVER_TOL);

    let mut a = WalkState2D::new(Protocol::Aqw2d).unwrap();
    let mut worst: f64 = 0.0;
    for n in 1..=EDGE_SIM_MAX {
        a.step();
        let p = a.probability();
        let e = edge_distribution_analytic(n).unwrap();
        worst = e.positions.iter().zip(&e.probs).map(|(&y, q)| (p.get(n as i64, y) - q).abs()).fold(worst, f64::max);
    }
    c.bound(&format!("edge formula vs simulation, every N <= {EDGE_SIM_MAX}"), worst, EDGE_SIM_TOL);

    match fit_edge_gaussian(&EDGE_NS) {
        Ok(f) => {
            for n in EDGE_NS {
                c.rel(
                    &format!("N={n} edge sigma"),
                    f.param(&format!("sigma@{n}")),
                    (n as f64 / 2.0).sqrt(),
                    EDGE_SIGMA_REL,
                );
            }
            c.near("edge amplitude exponent", f.param("amplitude_exponent"), EDGE_AMPLITUDE.0, EDGE_AMPLITUDE.1);
        }
        Err(e) => c.error("edge fit", e),
    }

    let checkpoints: BTreeSet<usize> = DIAGONAL_NS.into_iter().chain([TWO_D_MID]).collect();
    let aqw = evolve2d(Protocol::Aqw2d, TWO_D_N, &checkpoints).expect("AQW run");
    for (which, want, tol) in SLICE_TARGETS {
        let runs = if matches!(which, SliceFit::A1 | SliceFit::B1) { &tensor } else { &aqw };
        let mut fits = Vec::new();
        for n in [TWO_D_MID, TWO_D_N] {
            match slice(&runs[&n], which.slice()).and_then(|s| fit_slice_envelope(&s, which)) {
                Ok(f) => fits.push((n, f)),
                Err(e) => c.error(&format!("{which:?} N={n}"), e),
            }
        }
        if let Some((_, f)) = fits.iter().find(|(n, _)| *n == TWO_D_N) {
            c.near(&format!("slice {which:?} exponent c at N={TWO_D_N}"), f.param("c"), want, tol);
        }
        if fits.len() == 2 {
            let cs: Vec<f64> = fits.iter().map(|(_, f)| round4(f.param("c"))).collect();
            match slice_amplitude_exponent(&fits) {
                Ok(dd) => c.note(format!(
                    "slice {which:?}: c at N=500, 1000 = {cs:?}; d = {dd:.4}; c + d = {:.4}",
                    fits[1].1.param("c") + dd
                )),
                Err(e) => c.error(&format!("{which:?} d"), e),
            }
        }
    }

    for n in DIAGONAL_NS {
        match diagonal_peak_count(&aqw[&n]) {
            Ok(k) => c.near(
                &format!("N={n} diagonal peak density"),
                k as f64 / n as f64,
                DIAGONAL_DENSITY.0,
                DIAGONAL_DENSITY.1,
            ),
            Err(e) => c.error(&format!("N={n} diagonal"), e),
        }
    }

    match omega2_identity_deviation(DISPERSION_GRID) {
        Ok(dev) => {
            c.bound(&format!("omega^(2+-) identity on {DISPERSION_GRID}x{DISPERSION_GRID} grid"), dev, DISPERSION_TOL)
        }
        Err(e) => c.error("dispersion", e),
    }
    c
}

fn cli_files(dir: &Path, threads: &str) -> Vec<(String, Vec<u8>)> {
    let runs: [&[&str]; 4] = [
        &["walk1d", "--n", "3000", "--checkpoints", "1000"],
        &["walk2d", "--n", "120", "--protocol", "aqw", "--slices"],
        &["spectrum", "--n", "2000"],
        &["reproduce", "table4"],
    ];
    for args in runs {
        let status = Command::new(env!("CARGO_BIN_EXE_qwalk"))
            .args(args)
            .args(["--threads", threads, "--out", dir.to_str().unwrap()])
            .output()
            .expect("qwalk runs")
            .status;
        assert!(status.success(), "{args:?}");
    }
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(p) = stack.pop() {
        for e in fs::read_dir(&p).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().display().to_string(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c10() -> Criterion {
    let mut c = Criterion::new(10, "determinism");
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let runs: Vec<_> = dirs.iter().zip(["1", "1", "4"]).map(|(d, t)| cli_files(d.path(), t)).collect();
    c.check(runs[0] == runs[1], format!("repeated run: {} files byte-identical", runs[0].len()));
    c.check(runs[0] == runs[2], "1 vs 4 threads: byte-identical".into());
    c
}

fn main() {
    let data = one_d();
    let criteria =
        [c1(&data), c2(), c3(&data), c4(&data), c5(&data), c6(&data), c7(&data), c8(&data), c9(&data), c10()];
    for c in &criteria {
        c.print();
    }
    let failed: Vec<usize> = criteria.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
