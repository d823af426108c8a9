//! Lacunary wavelet series on a fractal support: coefficients `2^{-alpha j}`
//! at Bernoulli-selected covered positions, fully determined by a seed.

use alloc::vec::Vec;

use crate::bits::BitSet;
use crate::cover::{build_cover_with, CoverConfig, CoverError};
use crate::math::exp2;
use crate::regress::{least_squares, longest_true_run};
use crate::rng::cell_bernoulli;
use crate::spec::FractalSpec;

#[derive(Clone, Copy, Debug)]
pub struct LwsParams {
    /// Coefficient decay exponent, > 0.
    pub alpha: f64,
    /// Lacunarity, in (0, h).
    pub eta: f64,
    /// Dimension of the support.
    pub h: f64,
    pub j_max: u32,
    pub seed: u64,
}

impl LwsParams {
    /// Selection probability at scale `j`: `2^{(eta - h) j}`.
    pub fn selection_probability(&self, j: u32) -> f64 {
        exp2((self.eta - self.h) * j as f64)
    }

    /// Coefficient magnitude at scale `j` (non-L2 normalization).
    pub fn magnitude(&self, j: u32) -> f64 {
        exp2(-self.alpha * j as f64)
    }

    fn validate(&self) -> Result<(), LwsError> {
        if !(self.alpha > 0.0) {
            return Err(LwsError::InvalidParams("alpha must be positive"));
        }
        if !(self.eta > 0.0 && self.eta < self.h) {
            return Err(LwsError::InvalidParams("need 0 < eta < h"));
        }
        if self.h > 1.0 {
            return Err(LwsError::InvalidParams("h cannot exceed 1"));
        }
        Ok(())
    }
}

/// Sparse coefficient field: per scale, the active positions. Magnitudes
/// are implied by the scale, `2^{-alpha j}` at active cells and 0 elsewhere.
#[derive(Clone, Debug)]
pub struct LwsCoefficients {
    pub params: LwsParams,
    /// `active[j]` is a subset of the cover at scale `j`.
    pub active: Vec<BitSet>,
}

impl LwsCoefficients {
    pub fn is_active(&self, j: u32, k: u64) -> bool {
        self.active.get(j as usize).is_some_and(|s| s.contains(k))
    }

    /// |c_{j,k}|.
    pub fn magnitude_at(&self, j: u32, k: u64) -> f64 {
        if self.is_active(j, k) {
            self.params.magnitude(j)
        } else {
            0.0
        }
    }

    pub fn active_count(&self, j: u32) -> u64 {
        self.active.get(j as usize).map_or(0, BitSet::count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LwsError {
    InvalidParams(&'static str),
    Cover(CoverError),
    /// The occupancy regression needs at least 4 scales with active cells.
    TooFewScales { have: usize },
    AllEmpty,
    GridOverflow { depth: u32, max: u32 },
}

impl core::fmt::Display for LwsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LwsError::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            LwsError::Cover(e) => write!(f, "{e}"),
            LwsError::TooFewScales { have } => {
                write!(f, "need at least 4 scales with active coefficients, have {have}")
            }
            LwsError::AllEmpty => write!(f, "no active coefficients at any scale"),
            LwsError::GridOverflow { depth, max } => {
                write!(f, "render depth {depth} exceeds maximum {max}")
            }
        }
    }
}

impl core::error::Error for LwsError {}

impl From<CoverError> for LwsError {
    fn from(e: CoverError) -> Self {
        LwsError::Cover(e)
    }
}

/// Draws the active set per scale. Each covered cell is kept independently
/// with probability `2^{(eta-h) j}`, decided by a counter-based function of
/// (seed, j, k): no stream state, so the result is identical under any
/// parallel split.
pub fn synthesize(
    spec: &FractalSpec,
    params: &LwsParams,
    config: &CoverConfig,
) -> Result<LwsCoefficients, LwsError> {
    params.validate()?;
    let mut active = Vec::with_capacity(params.j_max as usize + 1);
    for j in 0..=params.j_max {
        let cover = build_cover_with(spec, j, config)?;
        let p = params.selection_probability(j);
        active.push(select_active(&cover.members, params.seed, j, p));
    }
    Ok(LwsCoefficients { params: *params, active })
}

fn select_active(cover: &BitSet, seed: u64, j: u32, p: f64) -> BitSet {
    let len = cover.len();
    let words_in = cover.words();
    let select_word = |(w, &word): (usize, &u64)| -> u64 {
        let mut out = 0u64;
        let mut bits = word;
        while bits != 0 {
            let b = bits.trailing_zeros() as u64;
            bits &= bits - 1;
            let k = w as u64 * 64 + b;
            if cell_bernoulli(seed, j, k, p) {
                out |= 1u64 << b;
            }
        }
        out
    };
    #[cfg(feature = "parallel")]
    let words: Vec<u64> = {
        use rayon::prelude::*;
        words_in.par_iter().enumerate().map(select_word).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let words: Vec<u64> = words_in.iter().enumerate().map(select_word).collect();
    BitSet::from_words(len, words)
}

/// Regression estimate of the growth exponent of `#active(j)` in scale,
/// over the longest contiguous stretch of scales with active cells.
#[derive(Clone, Debug)]
pub struct OccupancyEstimate {
    pub slope: f64,
    pub window: (u32, u32),
    pub per_scale_counts: Vec<(u32, u64)>,
}

pub fn occupancy_exponent(coeffs: &LwsCoefficients) -> Result<OccupancyEstimate, LwsError> {
    let counts: Vec<(u32, u64)> =
        (0..=coeffs.params.j_max).map(|j| (j, coeffs.active_count(j))).collect();
    let usable: Vec<bool> = counts.iter().map(|&(_, n)| n > 0).collect();
    let (lo, hi) = longest_true_run(&usable).ok_or(LwsError::AllEmpty)?;
    let have = hi - lo + 1;
    if have < 4 {
        return Err(LwsError::TooFewScales { have });
    }
    let xs: Vec<f64> = counts[lo..=hi].iter().map(|&(j, _)| j as f64).collect();
    let ys: Vec<f64> =
        counts[lo..=hi].iter().map(|&(_, n)| crate::math::log2_count(n)).collect();
    let fit = least_squares(&xs, &ys).ok_or(LwsError::TooFewScales { have })?;
    Ok(OccupancyEstimate {
        slope: fit.slope,
        window: (counts[lo].0, counts[hi].0),
        per_scale_counts: counts,
    })
}

/// Pointwise partial sums of the Haar expansion on the dyadic grid of
/// depth `grid_depth` (cosmetic rendering; analysis stays on coefficients).
pub fn render_haar(coeffs: &LwsCoefficients, grid_depth: u32) -> Result<Vec<f64>, LwsError> {
    if grid_depth < coeffs.params.j_max || grid_depth > crate::DEFAULT_MAX_SCALE {
        return Err(LwsError::GridOverflow { depth: grid_depth, max: crate::DEFAULT_MAX_SCALE });
    }
    let n = 1usize << grid_depth;
    let mut samples = alloc::vec![0.0f64; n];
    for (j, set) in coeffs.active.iter().enumerate() {
        let j = j as u32;
        let mag = coeffs.params.magnitude(j);
        let span = 1u64 << (grid_depth - j);
        let half = span / 2;
        for k in set.iter() {
            let lo = (k << (grid_depth - j)) as usize;
            if half == 0 {
                samples[lo] += mag;
                continue;
            }
            for s in samples.iter_mut().skip(lo).take(half as usize) {
                *s += mag;
            }
            for s in samples.iter_mut().skip(lo + half as usize).take(half as usize) {
                *s -= mag;
            }
        }
    }
    Ok(samples)
}
