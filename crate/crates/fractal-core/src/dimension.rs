//! Upper-box dimension estimation from cover counts, plus the two-sided
//! cardinality audit `2^{j(H-eps)} <= #I_j <= 2^{j(H+eps)}`.

use alloc::vec::Vec;

use crate::cover::{build_cover_with, CoverConfig, CoverError};
use crate::math::log2_count;
use crate::regress::least_squares;
use crate::spec::FractalSpec;

#[derive(Clone, Debug)]
pub struct DimensionEstimate {
    /// Least-squares slope of log2 #I_j against j, clamped to [0,1].
    pub h_hat: f64,
    /// max_j log2(#I_j)/j over the window; the limsup-style estimator,
    /// biased upward at pre-asymptotic scales.
    pub h_max_ratio: f64,
    pub j_range: (u32, u32),
    pub residual: f64,
    pub per_level_counts: Vec<(u32, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DimensionError {
    EmptyCover(u32),
    BadScaleRange,
    Cover(CoverError),
}

impl core::fmt::Display for DimensionError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DimensionError::EmptyCover(j) => {
                write!(f, "cover at scale {j} is empty; dimension undefined")
            }
            DimensionError::BadScaleRange => write!(f, "need at least two scales with j_min < j_max"),
            DimensionError::Cover(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DimensionError {}

impl From<CoverError> for DimensionError {
    fn from(e: CoverError) -> Self {
        DimensionError::Cover(e)
    }
}

/// Regression estimate over every scale in `[j_min, j_max]`.
pub fn estimate_box_dim(
    spec: &FractalSpec,
    j_min: u32,
    j_max: u32,
) -> Result<DimensionEstimate, DimensionError> {
    estimate_box_dim_strided(spec, j_min, j_max, 1, &CoverConfig::default())
}

/// Regression restricted to scales `j_min, j_min+stride, ...` up to `j_max`.
/// Self-similar digit sets regress exactly when the stride is a multiple of
/// the digit block size.
pub fn estimate_box_dim_strided(
    spec: &FractalSpec,
    j_min: u32,
    j_max: u32,
    stride: u32,
    config: &CoverConfig,
) -> Result<DimensionEstimate, DimensionError> {
    if j_min >= j_max || stride == 0 {
        return Err(DimensionError::BadScaleRange);
    }
    let scales: Vec<u32> = (j_min..=j_max).step_by(stride as usize).collect();
    if scales.len() < 2 {
        return Err(DimensionError::BadScaleRange);
    }
    let mut counts = Vec::with_capacity(scales.len());
    for &j in &scales {
        let c = build_cover_with(spec, j, config)?;
        let n = c.count();
        if n == 0 {
            return Err(DimensionError::EmptyCover(j));
        }
        counts.push((j, n));
    }
    let xs: Vec<f64> = counts.iter().map(|&(j, _)| j as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, n)| log2_count(n)).collect();
    let fit = least_squares(&xs, &ys).ok_or(DimensionError::BadScaleRange)?;
    let h_max_ratio = counts
        .iter()
        .filter(|&&(j, _)| j > 0)
        .map(|&(j, n)| log2_count(n) / j as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DimensionEstimate {
        h_hat: fit.slope.clamp(0.0, 1.0),
        h_max_ratio,
        j_range: (j_min, j_max),
        residual: fit.max_abs_residual,
        per_level_counts: counts,
    })
}

/// One scale's verdict in the count-bound audit.
#[derive(Clone, Copy, Debug)]
pub struct CountBoundRow {
    pub j: u32,
    pub count: u64,
    /// Exponent bounds in log2 units: j(H-eps) and j(H+eps).
    pub bound_low: f64,
    pub bound_high: f64,
    pub pass_low: bool,
    pub pass_high: bool,
}

impl CountBoundRow {
    pub fn pass(&self) -> bool {
        self.pass_low && self.pass_high
    }
}

#[derive(Clone, Debug)]
pub struct CountBoundsReport {
    pub h: f64,
    pub eps: f64,
    pub rows: Vec<CountBoundRow>,
    /// Smallest scale in range from which every later scale passes.
    pub first_all_pass: Option<u32>,
}

impl CountBoundsReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(CountBoundRow::pass)
    }
}

/// Checks `2^{j(H-eps)} <= #I_j <= 2^{j(H+eps)}` per scale, comparing in
/// log2: equalities pass.
pub fn audit_count_bounds(
    spec: &FractalSpec,
    h: f64,
    eps: f64,
    j_min: u32,
    j_max: u32,
    config: &CoverConfig,
) -> Result<CountBoundsReport, DimensionError> {
    if j_min > j_max {
        return Err(DimensionError::BadScaleRange);
    }
    debug_assert!(eps > 0.0);
    let mut rows = Vec::new();
    for j in j_min..=j_max {
        let n = build_cover_with(spec, j, config)?.count();
        let logn = log2_count(n);
        let bound_low = j as f64 * (h - eps);
        let bound_high = j as f64 * (h + eps);
        rows.push(CountBoundRow {
            j,
            count: n,
            bound_low,
            bound_high,
            pass_low: logn >= bound_low,
            pass_high: logn <= bound_high,
        });
    }
    let mut first_all_pass = None;
    for row in rows.iter().rev() {
        if row.pass() {
            first_all_pass = Some(row.j);
        } else {
            break;
        }
    }
    Ok(CountBoundsReport { h, eps, rows, first_all_pass })
}
