//! Probability distributions over the 1D line and the 2D grid, plus their
//! on-disk formats.
//!
//! 1D CSV layout:
//!
//! ```text
//! # protocol,n_steps,parity
//! # quantum-1d,6,even
//! # slice=A            (optional, slices only)
//! position,probability
//! -6,1.5625000000000000e-2
//! ...
//! ```
//!
//! Probabilities are written with 17 significant digits so that a parsed
//! file reproduces the in-memory values bit for bit.

use std::fmt::{self, Write as _};
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WalkError};
use crate::sum::pairwise_sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "quantum-1d")]
    Quantum1d,
    #[serde(rename = "classical-1d")]
    Classical1d,
    #[serde(rename = "tensor-2d")]
    Tensor2d,
    #[serde(rename = "aqw-2d")]
    Aqw2d,
    #[serde(rename = "grover-2d")]
    Grover2d,
}

impl Protocol {
    pub fn tag(self) -> &'static str {
        match self {
            Protocol::Quantum1d => "quantum-1d",
            Protocol::Classical1d => "classical-1d",
            Protocol::Tensor2d => "tensor-2d",
            Protocol::Aqw2d => "aqw-2d",
            Protocol::Grover2d => "grover-2d",
        }
    }

    pub fn is_2d(self) -> bool {
        matches!(self, Protocol::Tensor2d | Protocol::Aqw2d | Protocol::Grover2d)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Protocol {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "quantum-1d" => Protocol::Quantum1d,
            "classical-1d" => Protocol::Classical1d,
            "tensor-2d" => Protocol::Tensor2d,
            "aqw-2d" => Protocol::Aqw2d,
            "grover-2d" => Protocol::Grover2d,
            other => return Err(WalkError::Parse(format!("unknown protocol `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    All,
}

impl Parity {
    /// Parity of the live sites after `n` steps of a nearest-neighbour walk.
    pub fn of(n: usize) -> Self {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn admits(self, x: i64) -> bool {
        match self {
            Parity::Even => x.rem_euclid(2) == 0,
            Parity::Odd => x.rem_euclid(2) == 1,
            Parity::All => true,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::All => "all",
        }
    }
}

impl FromStr for Parity {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "even" => Parity::Even,
            "odd" => Parity::Odd,
            "all" => Parity::All,
            other => return Err(WalkError::Parse(format!("unknown parity `{other}`"))),
        })
    }
}

/// Named 1D cuts through a 2D distribution or spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SliceKind {
    /// Along the x axis, y = 0.
    A,
    /// Along the diagonal y = x.
    B,
    /// The edge row (or, in k-space, k_x = π).
    C,
}

impl FromStr for SliceKind {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(SliceKind::A),
            "B" | "b" => Ok(SliceKind::B),
            "C" | "c" => Ok(SliceKind::C),
            other => Err(WalkError::Parse(format!("unknown slice `{other}`"))),
        }
    }
}

/// A probability sequence over ascending integer positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    n_steps: usize,
    protocol: Protocol,
    parity: Parity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slice: Option<SliceKind>,
    positions: Vec<i64>,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(
        n_steps: usize,
        protocol: Protocol,
        parity: Parity,
        positions: Vec<i64>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        if positions.len() != probs.len() {
            return Err(WalkError::GridMismatch(format!(
                "{} positions but {} probabilities",
                positions.len(),
                probs.len()
            )));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(WalkError::GridMismatch("positions must be strictly increasing".into()));
        }
        if let Some(i) = probs.iter().position(|p| !(*p >= 0.0)) {
            return Err(WalkError::NonPositive { index: i, value: probs[i] });
        }
        Ok(Distribution { n_steps, protocol, parity, slice: None, positions, probs })
    }

    /// Live-parity lattice `-n, -n+2, ..., n` filled from `f`.
    pub fn from_fn(n_steps: usize, protocol: Protocol, f: impl Fn(i64) -> f64) -> Self {
        let n = n_steps as i64;
        let positions: Vec<i64> = (0..=n).map(|j| -n + 2 * j).collect();
        let probs = positions.iter().map(|&x| f(x)).collect();
        Distribution { n_steps, protocol, parity: Parity::of(n_steps), slice: None, positions, probs }
    }

    pub fn with_slice(mut self, slice: SliceKind) -> Self {
        self.slice = Some(slice);
        self
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn slice(&self) -> Option<SliceKind> {
        self.slice
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.positions.iter().copied().zip(self.probs.iter().copied())
    }

    /// Spacing between consecutive live sites.
    pub fn live_step(&self) -> i64 {
        match self.parity {
            Parity::All => 1,
            _ => 2,
        }
    }

    /// Probability at `x`; zero for sites that are not stored.
    pub fn prob_at(&self, x: i64) -> f64 {
        match self.positions.binary_search(&x) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    /// Index range of stored sites with `lo <= x <= hi`.
    pub fn index_range(&self, lo: i64, hi: i64) -> Range<usize> {
        let start = self.positions.partition_point(|&x| x < lo);
        let end = self.positions.partition_point(|&x| x <= hi);
        start..end.max(start)
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.probs)
    }

    /// Same data restricted to live-parity sites.
    pub fn live_only(&self) -> Distribution {
        let parity = Parity::of(self.n_steps);
        let (positions, probs) = self.iter().filter(|(x, _)| parity.admits(*x)).unzip();
        Distribution { parity, positions, probs, ..self.clone() }
    }

    pub fn to_csv(&self) -> String {
        self.to_csv_with_meta(&[])
    }

    /// CSV with extra `# key=value` header lines.
    pub fn to_csv_with_meta(&self, meta: &[(&str, String)]) -> String {
        let mut out = String::with_capacity(32 * self.len() + 128);
        out.push_str("# protocol,n_steps,parity\n");
        let _ = writeln!(out, "# {},{},{}", self.protocol, self.n_steps, self.parity.tag());
        if let Some(s) = self.slice {
            let _ = writeln!(out, "# slice={s:?}");
        }
        for (k, v) in meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("position,probability\n");
        for (x, p) in self.iter() {
            let _ = writeln!(out, "{x},{}", format_f64(p));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("# protocol,n_steps,parity") {
            return Err(WalkError::Parse("missing distribution header".into()));
        }
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| WalkError::Parse("missing metadata line".into()))?;
        let fields: Vec<&str> = meta.trim().split(',').collect();
        let [protocol, n_steps, parity] = fields.as_slice() else {
            return Err(WalkError::Parse(format!("bad metadata line `{meta}`")));
        };
        let protocol: Protocol = protocol.parse()?;
        let n_steps: usize = n_steps.parse().map_err(|_| WalkError::Parse(format!("bad n_steps `{n_steps}`")))?;
        let parity: Parity = parity.parse()?;
        let mut slice = None;
        let mut positions = Vec::new();
        let mut probs = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line == "position,probability" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(s) = rest.trim().strip_prefix("slice=") {
                    slice = Some(s.parse()?);
                }
                continue;
            }
            let (x, p) = line.split_once(',').ok_or_else(|| WalkError::Parse(format!("bad row `{line}`")))?;
            positions.push(x.parse().map_err(|_| WalkError::Parse(format!("bad position `{x}`")))?);
            probs.push(p.parse().map_err(|_| WalkError::Parse(format!("bad probability `{p}`")))?);
        }
        let mut d = Distribution::new(n_steps, protocol, parity, positions, probs)?;
        d.slice = slice;
        Ok(d)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Distribution = serde_json::from_str(text)?;
        // re-run the constructor checks
        let slice = d.slice;
        let mut checked = Distribution::new(d.n_steps, d.protocol, d.parity, d.positions, d.probs)?;
        checked.slice = slice;
        Ok(checked)
    }
}

/// Dense distribution over the square grid `[-radius, radius]^2`, stored
/// row-major with rows indexed by `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution2D {
    n_steps: usize,
    protocol: Protocol,
    radius: i64,
    probs: Vec<f64>,
}

/// JSON sidecar accompanying a 2D CSV file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub protocol: Protocol,
    pub n: usize,
    pub grid_min: i64,
    pub grid_max: i64,
}

impl Distribution2D {
    pub fn new(n_steps: usize, protocol: Protocol, radius: i64, probs: Vec<f64>) -> Result<Self> {
        let width = (2 * radius + 1) as usize;
        if probs.len() != width * width {
            return Err(WalkError::GridMismatch(format!(
                "expected {} cells for radius {radius}, got {}",
                width * width,
                probs.len()
            )));
        }
        Ok(Distribution2D { n_steps, protocol, radius, probs })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn width(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x: i64, y: i64) -> f64 {
        if x.abs() > self.radius || y.abs() > self.radius {
            return 0.0;
        }
        let w = self.width();
        self.probs[(y + self.radius) as usize * w + (x + self.radius) as usize]
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.probs)
    }

    /// Sum over `y` of `P(x, y)`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let w = self.width();
        (0..w).map(|ix| crate::sum::pairwise_sum_by(w, &|iy| self.probs[iy * w + ix])).collect()
    }

    pub fn sidecar(&self) -> GridSidecar {
        GridSidecar { protocol: self.protocol, n: self.n_steps, grid_min: -self.radius, grid_max: self.radius }
    }

    pub fn to_csv(&self) -> String {
        let w = self.width();
        let mut out = String::with_capacity(self.probs.len() * 24);
        for row in self.probs.chunks(w) {
            for (i, p) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format_f64(*p));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, sidecar: &GridSidecar) -> Result<Self> {
        let mut probs = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            for cell in line.split(',') {
                probs.push(cell.trim().parse::<f64>().map_err(|_| WalkError::Parse(format!("bad cell `{cell}`")))?);
            }
        }
        if sidecar.grid_min != -sidecar.grid_max {
            return Err(WalkError::GridMismatch("grid must be symmetric about the origin".into()));
        }
        Distribution2D::new(sidecar.n, sidecar.protocol, sidecar.grid_max, probs)
    }
}

/// 17 significant digits, the shortest width that always round-trips an f64.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_unsorted_positions() {
        let r = Distribution::new(1, Protocol::Quantum1d, Parity::Odd, vec![1, -1], vec![0.5, 0.5]);
        assert!(matches!(r, Err(WalkError::GridMismatch(_))));
    }

    #[test]
    fn rejects_negative_probability() {
        let r = Distribution::new(1, Protocol::Quantum1d, Parity::Odd, vec![-1, 1], vec![-0.5, 0.5]);
        assert!(r.is_err());
    }

    #[test]
    fn prob_at_missing_site_is_zero() {
        let d = Distribution::from_fn(2, Protocol::Classical1d, |x| if x == 0 { 0.5 } else { 0.25 });
        assert_eq!(d.prob_at(0), 0.5);
        assert_eq!(d.prob_at(1), 0.0);
        assert_eq!(d.prob_at(7), 0.0);
        assert_eq!(d.index_range(-1, 2), 1..3);
    }

    #[test]
    fn csv_header_layout() {
        let d = Distribution::from_fn(1, Protocol::Quantum1d, |_| 0.5);
        let csv = d.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# protocol,n_steps,parity");
        assert_eq!(lines[1], "# quantum-1d,1,odd");
        assert_eq!(lines[2], "position,probability");
        assert_eq!(lines[3], "-1,5.0000000000000000e-1");
    }

    #[test]
    fn grid_roundtrip() {
        let g = Distribution2D::new(1, Protocol::Aqw2d, 1, (0..9).map(|i| i as f64 / 36.0).collect()).unwrap();
        let back = Distribution2D::from_csv(&g.to_csv(), &g.sidecar()).unwrap();
        assert_eq!(g, back);
        assert_eq!(g.get(1, -1), 2.0 / 36.0);
    }

    proptest! {
        #[test]
        fn csv_and_json_roundtrip_bit_exact(probs in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let n = probs.len() - 1;
            let d = Distribution::from_fn(n, Protocol::Quantum1d, |x| probs[((x + n as i64) / 2) as usize])
                .with_slice(SliceKind::B);
            let from_csv = Distribution::from_csv(&d.to_csv()).unwrap();
            let from_json = Distribution::from_json(&d.to_json().unwrap()).unwrap();
            for (a, b) in d.probs().iter().zip(from_csv.probs()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(&d, &from_csv);
            prop_assert_eq!(&d, &from_json);
        }
    }
}
