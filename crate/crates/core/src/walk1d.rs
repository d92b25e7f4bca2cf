//! One-dimensional Hadamard walk.
//!
//! After `t` steps only sites with the parity of `t` carry amplitude, so
//! states store the `t + 1` live sites `-t, -t+2, ..., t` densely. Live
//! index `j` maps to position `2j - t`.
//!
//! One step applies the Hadamard coin and then moves the up component one
//! site right and the down component one site left. On the live lattice this
//! becomes
//!
//! ```text
//! up'[j]   = (up[j-1] + down[j-1]) / sqrt(2)
//! down'[j] = (up[j]   - down[j])   / sqrt(2)
//! ```
//!
//! so every output site depends on at most two input sites and the sweep has
//! no reductions.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::distribution::{Distribution, Protocol};
use crate::error::{Result, WalkError};
use crate::sum::pairwise_sum_by;

// Below this many sites a step runs on the calling thread.
const PAR_THRESHOLD: usize = 1 << 15;
const PAR_CHUNK: usize = 1 << 13;

/// Amplitudes of the 1D walker after `t` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState1D {
    t: usize,
    up: Vec<Complex64>,
    down: Vec<Complex64>,
}

impl WalkState1D {
    /// Walker at the origin with the given coin amplitudes.
    pub fn localized(up: Complex64, down: Complex64) -> Self {
        WalkState1D { t: 0, up: vec![up], down: vec![down] }
    }

    /// `(|up> + i|down>)/sqrt(2)` at the origin; gives a left-right symmetric walk.
    pub fn symmetric_initial() -> Self {
        Self::localized(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, FRAC_1_SQRT_2))
    }

    pub fn t(&self) -> usize {
        self.t
    }

    fn live_index(&self, x: i64) -> Option<usize> {
        let t = self.t as i64;
        if x.abs() > t || (x + t) % 2 != 0 {
            None
        } else {
            Some(((x + t) / 2) as usize)
        }
    }

    /// Up-component amplitude at position `x` (zero off the live lattice).
    pub fn amp_up(&self, x: i64) -> Complex64 {
        self.live_index(x).map_or(Complex64::new(0.0, 0.0), |j| self.up[j])
    }

    pub fn amp_down(&self, x: i64) -> Complex64 {
        self.live_index(x).map_or(Complex64::new(0.0, 0.0), |j| self.down[j])
    }

    /// Live-site amplitudes, ascending in position.
    pub fn live_amplitudes(&self) -> (&[Complex64], &[Complex64]) {
        (&self.up, &self.down)
    }

    pub fn total_probability(&self) -> f64 {
        pairwise_sum_by(self.up.len(), &|j| self.up[j].norm_sqr() + self.down[j].norm_sqr())
    }

    /// One shift-coin step into a fresh state.
    pub fn step(&self) -> WalkState1D {
        let mut up = Vec::with_capacity(self.t + 2);
        let mut down = Vec::with_capacity(self.t + 2);
        step_into(&self.up, &self.down, &mut up, &mut down);
        WalkState1D { t: self.t + 1, up, down }
    }

    /// `P(x) = |up(x)|^2 + |down(x)|^2` on the live sites.
    pub fn probability(&self) -> Distribution {
        Distribution::from_fn(self.t, Protocol::Quantum1d, |x| {
            let j = ((x + self.t as i64) / 2) as usize;
            self.up[j].norm_sqr() + self.down[j].norm_sqr()
        })
    }
}

/// Write the successor of `(up, down)` into the output buffers, resizing them
/// to `up.len() + 1`.
fn step_into(up: &[Complex64], down: &[Complex64], out_up: &mut Vec<Complex64>, out_down: &mut Vec<Complex64>) {
    let live = up.len();
    let next = live + 1;
    out_up.resize(next, Complex64::new(0.0, 0.0));
    out_down.resize(next, Complex64::new(0.0, 0.0));

    if next < PAR_THRESHOLD {
        out_up[0] = Complex64::new(0.0, 0.0);
        out_down[live] = Complex64::new(0.0, 0.0);
        coin_shift(up, down, &mut out_up[1..], &mut out_down[..live]);
    } else {
        out_up[0] = Complex64::new(0.0, 0.0);
        out_down[live] = Complex64::new(0.0, 0.0);
        out_up[1..]
            .par_chunks_mut(PAR_CHUNK)
            .zip(out_down[..live].par_chunks_mut(PAR_CHUNK))
            .zip(up.par_chunks(PAR_CHUNK).zip(down.par_chunks(PAR_CHUNK)))
            .for_each(|((ou, od), (u, d))| coin_shift(u, d, ou, od));
    }
}

// out_up[k] = (up[k] + down[k]) / sqrt(2), out_down[k] = (up[k] - down[k]) / sqrt(2);
// the caller offsets out_up by one site.
#[inline]
fn coin_shift(up: &[Complex64], down: &[Complex64], out_up: &mut [Complex64], out_down: &mut [Complex64]) {
    for (((ou, od), u), d) in out_up.iter_mut().zip(out_down.iter_mut()).zip(up).zip(down) {
        *ou = flush((u + d) * FRAC_1_SQRT_2);
        *od = flush((u - d) * FRAC_1_SQRT_2);
    }
}

/// Amplitude components below this magnitude are set to exactly zero.
///
/// Far beyond `N / sqrt(2)` the amplitudes decay super-exponentially and
/// would otherwise drift into the subnormal range, where arithmetic is
/// roughly two orders of magnitude slower. The cut only touches sites with
/// `P < 1e-300`.
pub const AMPLITUDE_FLOOR: f64 = 1e-150;

#[inline(always)]
fn flush(z: Complex64) -> Complex64 {
    Complex64::new(
        if z.re.abs() < AMPLITUDE_FLOOR { 0.0 } else { z.re },
        if z.im.abs() < AMPLITUDE_FLOOR { 0.0 } else { z.im },
    )
}

// Temporal tiling: each tile loads TILE_WIDTH + TILE_DEPTH sites into a
// scratch block, advances up to TILE_DEPTH steps locally and writes back
// TILE_WIDTH sites. The scratch block (two levels, SoA) fits in L1.
const TILE_WIDTH: usize = 512;
const TILE_DEPTH: usize = 64;
const TILE_SPAN: usize = TILE_WIDTH + TILE_DEPTH;

/// Reusable propagator for the symmetric (or any localized) initial state.
///
/// Amplitudes live in zero-padded ping-pong buffers with `TILE_DEPTH` slots
/// of left padding, so that site `j` sits at slot `j + TILE_DEPTH`. Sites
/// beyond the live range stay exactly zero, which lets every tile run the
/// same branch-free kernel.
#[derive(Debug)]
pub struct Walker1D {
    t: usize,
    cur_up: Vec<Complex64>,
    cur_down: Vec<Complex64>,
    next_up: Vec<Complex64>,
    next_down: Vec<Complex64>,
}

impl Walker1D {
    pub fn new(initial: WalkState1D, capacity: usize) -> Self {
        let slots = TILE_DEPTH + initial.up.len() + capacity + TILE_SPAN;
        let zero = Complex64::new(0.0, 0.0);
        let mut cur_up = vec![zero; slots];
        let mut cur_down = vec![zero; slots];
        cur_up[TILE_DEPTH..TILE_DEPTH + initial.up.len()].copy_from_slice(&initial.up);
        cur_down[TILE_DEPTH..TILE_DEPTH + initial.down.len()].copy_from_slice(&initial.down);
        Walker1D { t: initial.t, cur_up, cur_down, next_up: vec![zero; slots], next_down: vec![zero; slots] }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Snapshot of the current state.
    pub fn state(&self) -> WalkState1D {
        let live = TILE_DEPTH..TILE_DEPTH + self.t + 1;
        WalkState1D { t: self.t, up: self.cur_up[live.clone()].to_vec(), down: self.cur_down[live].to_vec() }
    }

    pub fn probability(&self) -> Distribution {
        Distribution::from_fn(self.t, Protocol::Quantum1d, |x| {
            let slot = ((x + self.t as i64) / 2) as usize + TILE_DEPTH;
            self.cur_up[slot].norm_sqr() + self.cur_down[slot].norm_sqr()
        })
    }

    pub fn advance(&mut self) {
        self.advance_by(1);
    }

    pub fn advance_to(&mut self, t: usize) {
        assert!(t >= self.t, "cannot run the walk backwards");
        while self.t < t {
            let depth = (t - self.t).min(TILE_DEPTH);
            self.advance_by(depth);
        }
    }

    // Advance `depth <= TILE_DEPTH` steps in one tiled sweep.
    fn advance_by(&mut self, depth: usize) {
        debug_assert!((1..=TILE_DEPTH).contains(&depth));
        let new_live = self.t + depth + 1;
        let needed = TILE_DEPTH + new_live.div_ceil(TILE_WIDTH) * TILE_WIDTH + TILE_SPAN;
        if needed > self.cur_up.len() {
            let zero = Complex64::new(0.0, 0.0);
            for buf in [&mut self.cur_up, &mut self.cur_down, &mut self.next_up, &mut self.next_down] {
                buf.resize(needed, zero);
            }
        }
        let tiles = new_live.div_ceil(TILE_WIDTH);
        let (cu, cd) = (&self.cur_up, &self.cur_down);
        let out_up = &mut self.next_up[TILE_DEPTH..TILE_DEPTH + tiles * TILE_WIDTH];
        let out_down = &mut self.next_down[TILE_DEPTH..TILE_DEPTH + tiles * TILE_WIDTH];
        let run = |tile: usize, ou: &mut [Complex64], od: &mut [Complex64]| {
            // global site j of this tile starts at tile * TILE_WIDTH; load sites
            // [start - TILE_DEPTH, start + TILE_WIDTH), i.e. slots [start, start + TILE_SPAN)
            let start = tile * TILE_WIDTH;
            advance_tile(&cu[start..start + TILE_SPAN], &cd[start..start + TILE_SPAN], depth, ou, od);
        };
        if tiles * TILE_WIDTH < PAR_THRESHOLD {
            for (tile, (ou, od)) in out_up.chunks_mut(TILE_WIDTH).zip(out_down.chunks_mut(TILE_WIDTH)).enumerate() {
                run(tile, ou, od);
            }
        } else {
            out_up
                .par_chunks_mut(TILE_WIDTH)
                .zip(out_down.par_chunks_mut(TILE_WIDTH))
                .enumerate()
                .for_each(|(tile, (ou, od))| run(tile, ou, od));
        }
        std::mem::swap(&mut self.cur_up, &mut self.next_up);
        std::mem::swap(&mut self.cur_down, &mut self.next_down);
        self.t += depth;
    }
}

// Advance one tile `depth` levels. `up`/`down` hold TILE_SPAN sites, the last
// TILE_WIDTH of which are the tile's own sites; after `depth` levels the
// leftmost `depth` sites are no longer valid, which is fine as long as
// `depth <= TILE_DEPTH`.
fn advance_tile(
    up: &[Complex64],
    down: &[Complex64],
    depth: usize,
    out_up: &mut [Complex64],
    out_down: &mut [Complex64],
) {
    let zero = Complex64::new(0.0, 0.0);
    let mut a_up = [zero; TILE_SPAN];
    let mut a_down = [zero; TILE_SPAN];
    let mut b_up = [zero; TILE_SPAN];
    let mut b_down = [zero; TILE_SPAN];
    a_up.copy_from_slice(up);
    a_down.copy_from_slice(down);
    for level in 0..depth {
        let (src_up, src_down, dst_up, dst_down) = if level % 2 == 0 {
            (&a_up, &a_down, &mut b_up, &mut b_down)
        } else {
            (&b_up, &b_down, &mut a_up, &mut a_down)
        };
        // valid inputs start at slot `level`; outputs from `level + 1`
        let lo = level;
        coin_shift(
            &src_up[lo..TILE_SPAN - 1],
            &src_down[lo..TILE_SPAN - 1],
            &mut dst_up[lo + 1..TILE_SPAN],
            &mut dst_down[lo..TILE_SPAN - 1],
        );
        dst_down[TILE_SPAN - 1] = flush((src_up[TILE_SPAN - 1] - src_down[TILE_SPAN - 1]) * FRAC_1_SQRT_2);
    }
    let (res_up, res_down) = if depth % 2 == 0 { (&a_up, &a_down) } else { (&b_up, &b_down) };
    out_up.copy_from_slice(&res_up[TILE_DEPTH..]);
    out_down.copy_from_slice(&res_down[TILE_DEPTH..]);
}

/// Normalization drift allowed after `n` steps.
pub fn drift_tolerance(n: usize) -> f64 {
    (n as f64 * 1e-12).max(1e-9)
}

/// Run the symmetric walk for `n` steps and collect the distribution at each
/// checkpoint.
pub fn evolve(n: usize, checkpoints: &BTreeSet<usize>) -> Result<BTreeMap<usize, Distribution>> {
    evolve_from(WalkState1D::symmetric_initial(), n, checkpoints)
}

pub fn evolve_from(
    initial: WalkState1D,
    n: usize,
    checkpoints: &BTreeSet<usize>,
) -> Result<BTreeMap<usize, Distribution>> {
    if let Some(&bad) = checkpoints.iter().find(|&&c| c > n || c < initial.t) {
        return Err(WalkError::CheckpointOutOfRange { checkpoint: bad, n });
    }
    let mut walker = Walker1D::new(initial, n);
    let mut out = BTreeMap::new();
    for &c in checkpoints {
        walker.advance_to(c);
        out.insert(c, walker.probability());
    }
    walker.advance_to(n);
    Ok(out)
}

/// Distribution after exactly `n` steps of the symmetric walk.
pub fn distribution(n: usize) -> Distribution {
    let mut walker = Walker1D::new(WalkState1D::symmetric_initial(), n);
    walker.advance_to(n);
    walker.probability()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-15
    }

    #[test]
    fn initial_state() {
        let s = WalkState1D::symmetric_initial();
        assert_eq!(s.t(), 0);
        assert!(close(s.amp_up(0), Complex64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.amp_down(0), Complex64::new(0.0, FRAC_1_SQRT_2)));
        assert!((s.total_probability() - 1.0).abs() < 1e-15);
        let p = s.probability();
        assert_eq!(p.positions(), &[0]);
        assert!((p.probs()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn first_step_amplitudes() {
        let s = WalkState1D::symmetric_initial().step();
        assert_eq!(s.t(), 1);
        assert!(close(s.amp_up(1), Complex64::new(0.5, 0.5)));
        assert!(close(s.amp_down(-1), Complex64::new(0.5, -0.5)));
        assert!(close(s.amp_up(-1), Complex64::new(0.0, 0.0)));
        assert!(close(s.amp_down(1), Complex64::new(0.0, 0.0)));
        let p = s.probability();
        assert_eq!(p.positions(), &[-1, 1]);
        assert!((p.probs()[0] - 0.5).abs() < 1e-15 && (p.probs()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn second_step_by_hand() {
        let p = WalkState1D::symmetric_initial().step().step().probability();
        assert_eq!(p.positions(), &[-2, 0, 2]);
        for (got, want) in p.probs().iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn six_steps_golden_integers() {
        let d = distribution(6);
        let scaled: Vec<f64> = d.probs().iter().map(|p| 64.0 * p).collect();
        for (got, want) in scaled.iter().zip([1.0, 18.0, 9.0, 8.0, 9.0, 18.0, 1.0]) {
            assert!((got - want).abs() < 1e-13, "{scaled:?}");
        }
    }

    #[test]
    fn evolve_zero_and_bad_checkpoint() {
        let out = evolve(0, &BTreeSet::from([0])).unwrap();
        assert!((out[&0].probs()[0] - 1.0).abs() < 1e-15);
        let err = evolve(5, &BTreeSet::from([6])).unwrap_err();
        assert!(matches!(err, WalkError::CheckpointOutOfRange { checkpoint: 6, n: 5 }));
    }

    #[test]
    fn off_lattice_amplitude_is_zero() {
        let s = WalkState1D::symmetric_initial().step().step();
        assert_eq!(s.amp_up(1), Complex64::new(0.0, 0.0));
        assert_eq!(s.amp_down(9), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn tiled_walker_is_bit_identical_to_plain_steps() {
        let mut s = WalkState1D::symmetric_initial();
        let mut w = Walker1D::new(WalkState1D::symmetric_initial(), 1500);
        for t in [1, 63, 64, 65, 130, 700, 1500] {
            while s.t() < t {
                s = s.step();
            }
            w.advance_to(t);
            assert_eq!(s, w.state(), "t = {t}");
        }
    }

    #[test]
    fn twin_peaks_at_one_hundred() {
        let d = distribution(100);
        let (x, _) =
            d.iter().filter(|(x, _)| *x >= 0).fold((0, 0.0), |best, (x, p)| if p >= best.1 { (x, p) } else { best });
        assert!((65..=75).contains(&x), "max at {x}");
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let n = PAR_THRESHOLD + 1000;
        let run =
            |threads| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| distribution(n));
        let a = run(1);
        let b = run(3);
        assert!(a.probs().iter().zip(b.probs()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
