//! Wavelet leaders and the estimators built on them: pointwise regularity,
//! the increasing multifractal spectrum, limsup covers of contracted balls,
//! and the coefficient-sup audit over quasi-Cantor cells.

use alloc::vec::Vec;

use crate::bits::BitSet;
use crate::lws::LwsCoefficients;
use crate::math::{exp2, floor, log2_count};
use crate::quasicantor::{default_base_rung, extract_quasi_cantor, QuasiCantorLadder};
use crate::regress::{deepest_stable_window, widest_stable_window, WindowFit};

/// Leader values `d_{j,k}` for every cell with `j <= j_max`: the max
/// coefficient magnitude over cells contained in the tripled window `3
/// lambda_{j,k}` at scales `j..=j_max`. Windows clip at the domain
/// boundary; no periodization.
#[derive(Clone, Debug)]
pub struct LeaderField {
    pub j_max: u32,
    rows: Vec<Vec<f64>>,
}

impl LeaderField {
    pub fn value(&self, j: u32, k: u64) -> f64 {
        self.rows[j as usize][k as usize]
    }

    pub fn row(&self, j: u32) -> &[f64] {
        &self.rows[j as usize]
    }

    /// Builds a field from raw rows; row `j` must have `2^j` entries.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        assert!(!rows.is_empty());
        for (j, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), 1usize << j, "row {j} must have 2^{j} entries");
        }
        LeaderField { j_max: rows.len() as u32 - 1, rows }
    }

    /// Multiplies every leader by `c` (for scale-covariance checks).
    pub fn scale_values(&mut self, c: f64) {
        for row in &mut self.rows {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
    }
}

/// Per-scale sizes of the window-dilated support: the cells whose leader
/// window meets the support, i.e. the cells that can carry signal.
#[derive(Clone, Debug)]
pub struct SupportProfile {
    counts: Vec<(u32, u64)>,
}

impl SupportProfile {
    /// Dilates each cover by one cell on each side and records the sizes.
    pub fn from_spec(
        spec: &crate::spec::FractalSpec,
        j_max: u32,
        config: &crate::cover::CoverConfig,
    ) -> Result<Self, crate::cover::CoverError> {
        let mut counts = Vec::with_capacity(j_max as usize + 1);
        for j in 0..=j_max {
            let cover = crate::cover::build_cover_with(spec, j, config)?;
            let n = 1u64 << j;
            let mut dilated = cover.members.clone();
            for k in cover.members.iter() {
                if k > 0 {
                    dilated.insert(k - 1);
                }
                if k + 1 < n {
                    dilated.insert(k + 1);
                }
            }
            counts.push((j, dilated.count()));
        }
        Ok(SupportProfile { counts })
    }

    pub fn dilated_count(&self, j: u32) -> Option<u64> {
        self.counts.iter().find(|&&(jj, _)| jj == j).map(|&(_, n)| n)
    }
}

/// Bottom-up leader computation: one subtree-max sweep from the deepest
/// scale, then a 3-cell window max per scale.
pub fn compute_leaders(coeffs: &LwsCoefficients, j_max: u32) -> LeaderField {
    let j_max = j_max.min(coeffs.params.j_max);
    // Subtree maxima including the cell's own coefficient.
    let mut subtree: Vec<Vec<f64>> = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        subtree.push(alloc::vec![0.0; 1usize << j]);
    }
    for j in (0..=j_max).rev() {
        let mag = coeffs.params.magnitude(j);
        let (head, tail) = subtree.split_at_mut(j as usize + 1);
        let row = &mut head[j as usize];
        let deeper: Option<&Vec<f64>> = tail.first();
        let active = &coeffs.active[j as usize];
        let fill = |(k, out): (usize, &mut f64)| {
            let own = if active.contains(k as u64) { mag } else { 0.0 };
            let below = match deeper {
                Some(next) => next[2 * k].max(next[2 * k + 1]),
                None => 0.0,
            };
            *out = own.max(below);
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            row.par_iter_mut().enumerate().map(|(k, v)| (k, v)).for_each(fill);
        }
        #[cfg(not(feature = "parallel"))]
        row.iter_mut().enumerate().for_each(fill);
    }
    // Window max over the cell and its two same-scale neighbors.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        let m = &subtree[j as usize];
        let n = m.len();
        let mut row = alloc::vec![0.0; n];
        for (k, out) in row.iter_mut().enumerate() {
            let mut d = m[k];
            if k > 0 {
                d = d.max(m[k - 1]);
            }
            if k + 1 < n {
                d = d.max(m[k + 1]);
            }
            *out = d;
        }
        rows.push(row);
    }
    LeaderField { j_max, rows }
}

/// Estimated pointwise regularity per finest cell.
#[derive(Clone, Debug)]
pub struct HolderField {
    pub j_min: u32,
    pub j_max: u32,
    pub h_cap: f64,
    pub values: Vec<f64>,
    /// Cells where every leader in the window vanished (estimate pinned at
    /// `h_cap`; distinguishes "no signal" from genuinely high regularity).
    pub all_zero: BitSet,
}

/// Window-minimum approximation of the liminf: for each finest cell,
/// `min_j (-log2 d_j(x)) / j` over `j_min..=j_max`, vanishing leaders
/// contributing `h_cap`.
pub fn estimate_holder(leaders: &LeaderField, j_min: u32, h_cap: f64) -> HolderField {
    let j_min = j_min.max(1);
    let j_max = leaders.j_max;
    let n = 1usize << j_max;
    let mut values = alloc::vec![0.0f64; n];
    let mut all_zero = BitSet::new(n as u64);
    for k in 0..n {
        let mut h = f64::INFINITY;
        let mut saw_signal = false;
        for j in j_min..=j_max {
            let d = leaders.value(j, (k >> (j_max - j)) as u64);
            let contribution = if d > 0.0 {
                saw_signal = true;
                -crate::math::log2(d) / j as f64
            } else {
                h_cap
            };
            h = h.min(contribution);
        }
        if !saw_signal {
            all_zero.insert(k as u64);
            values[k] = h_cap;
        } else {
            values[k] = h.clamp(0.0, h_cap);
        }
    }
    HolderField { j_min, j_max, h_cap, values, all_zero }
}

/// Tuning of the coarse-grained spectrum estimator.
#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    /// Coarse-graining slack added to h in the reported level counts.
    pub gamma: f64,
    /// Half-width (log2 units) of the leader shell the level regressions
    /// use around 2^{-h j}.
    pub band: f64,
    /// Shallowest scale entering the regressions.
    pub j_min: u32,
    /// Preferred regression window width (in scales).
    pub window: usize,
    /// Minimum window length for a valid regression.
    pub min_window: usize,
    /// Residual tolerance (log2 units) for the stable-window search.
    pub res_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { gamma: 0.05, band: 3.0, j_min: 2, window: 8, min_window: 3, res_tol: 0.4 }
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumLevel {
    pub h: f64,
    /// Monotone estimate (running max across the grid), clamped to [0,1];
    /// -inf marks degenerate levels with no usable counts.
    pub d_leq: f64,
    pub raw_slope: f64,
    pub window: Option<(u32, u32)>,
    pub residual: f64,
    /// Whether the level was measured on fully saturated counts
    /// (every signal cell above threshold at every window scale).
    pub saturated: bool,
    pub counts: Vec<(u32, u64)>,
}

/// Coarse-grained increasing-spectrum estimate over a grid of regularity
/// levels.
#[derive(Clone, Debug)]
pub struct SpectrumEstimate {
    pub options: SpectrumOptions,
    /// Per scale, the number of cells carrying any signal at all; the
    /// saturation reference for the level counts.
    pub signal_counts: Vec<(u32, u64)>,
    pub levels: Vec<SpectrumLevel>,
}

impl SpectrumEstimate {
    pub fn level(&self, h: f64) -> Option<&SpectrumLevel> {
        self.levels.iter().find(|l| (l.h - h).abs() < 1e-12)
    }
}

/// For each level h: count the cells whose leader exceeds `2^{-(h+gamma) j}`
/// per scale (the reported level counts) and regress the shell intensity
/// across scales over the deepest stable window.
///
/// Two finite-size effects make raw one-sided counts unusable for the
/// slope: a cell counts once no matter how many actives land in its window
/// (saturation toward the signal support), and the one-sided scale sum
/// keeps widening with j (a growing geometric prefactor). The regression
/// therefore uses the shell of leaders between `2^{-(h+gamma) j}` and
/// `2^{-h j + band}`, whose scale window has near-constant width, and
/// inverts the cell-coverage dedup:
/// `y_j = log2(cand_j * ln((cand_j - N_lo)/(cand_j - N_hi)))` where
/// `N_hi/N_lo` count leaders above the lower/upper shell edge and `cand_j`
/// counts cells with any signal. Levels whose shell saturates the signal
/// support entirely regress the raw one-sided counts instead (the level
/// set is the whole support there). Monotonicity in h is enforced by a
/// running max, matching sublevel sets as unions of shells.
pub fn increasing_spectrum(
    leaders: &LeaderField,
    h_grid: &[f64],
    options: &SpectrumOptions,
    support: Option<&SupportProfile>,
) -> SpectrumEstimate {
    let j_max = leaders.j_max;
    let scales: Vec<u32> = (options.j_min..=j_max).collect();
    let xs: Vec<f64> = scales.iter().map(|&j| j as f64).collect();
    let signal_counts: Vec<(u32, u64)> = scales
        .iter()
        .map(|&j| (j, leaders.row(j).iter().filter(|&&d| d > 0.0).count() as u64))
        .collect();
    // Denominator of the coverage inversion: the number of cells that can
    // carry signal at all. Exact when the caller supplies the dilated
    // support; the full grid otherwise.
    let denominators: Vec<u64> = scales
        .iter()
        .map(|&j| match support {
            Some(p) => p.dilated_count(j).unwrap_or(1u64 << j),
            None => 1u64 << j,
        })
        .collect();
    let mut levels: Vec<SpectrumLevel> = Vec::with_capacity(h_grid.len());
    let mut running = f64::NEG_INFINITY;
    for &h in h_grid {
        let counts: Vec<(u32, u64)> = scales
            .iter()
            .map(|&j| {
                let threshold = exp2(-(h + options.gamma) * j as f64);
                let n = leaders.row(j).iter().filter(|&&d| d >= threshold).count() as u64;
                (j, n)
            })
            .collect();
        let inverted: Vec<f64> = scales
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                let cand = signal_counts[i].1;
                // Shell edges: the top follows the spec's coarse-graining
                // slack (h+gamma)j, the bottom sits a fixed band below hj,
                // so the covered scale window has near-constant width.
                let lo_threshold = exp2(-(h + options.gamma) * j as f64);
                let hi_threshold = exp2(-(h * j as f64 - options.band));
                let row = leaders.row(j);
                let n_hi = row.iter().filter(|&&d| d >= lo_threshold).count() as u64;
                let n_lo = row.iter().filter(|&&d| d >= hi_threshold).count() as u64;
                if n_hi >= cand && cand < denominators[i] {
                    // The shell swallowed every signal cell without filling
                    // the support: the truncation depth, not the level,
                    // limits the count here.
                    f64::INFINITY
                } else {
                    shell_intensity(n_lo, n_hi, denominators[i])
                }
            })
            .collect();
        let usable: Vec<bool> = inverted.iter().map(|v| v.is_finite()).collect();
        let fit = deepest_stable_window(
            &xs,
            &inverted,
            &usable,
            options.window,
            options.min_window,
            options.res_tol,
        );
        let (raw_slope, window, residual, saturated) = match fit {
            Some(WindowFit { lo_idx, hi_idx, fit }) => {
                (fit.slope, Some((scales[lo_idx], scales[hi_idx])), fit.max_abs_residual, false)
            }
            None => {
                // No partially-filled window: regress raw counts over the
                // deepest saturated (or simply nonzero) stretch.
                let nonzero: Vec<bool> = counts.iter().map(|&(_, n)| n > 0).collect();
                let ys: Vec<f64> = counts.iter().map(|&(_, n)| log2_count(n)).collect();
                match deepest_stable_window(
                    &xs,
                    &ys,
                    &nonzero,
                    options.window,
                    options.min_window,
                    options.res_tol,
                ) {
                    Some(WindowFit { lo_idx, hi_idx, fit }) => (
                        fit.slope,
                        Some((scales[lo_idx], scales[hi_idx])),
                        fit.max_abs_residual,
                        true,
                    ),
                    None => (f64::NEG_INFINITY, None, f64::NAN, false),
                }
            }
        };
        let clamped = if raw_slope.is_finite() {
            raw_slope.clamp(0.0, 1.0)
        } else {
            f64::NEG_INFINITY
        };
        running = running.max(clamped);
        levels.push(SpectrumLevel {
            h,
            d_leq: running,
            raw_slope,
            window,
            residual,
            saturated,
            counts,
        });
    }
    SpectrumEstimate { options: *options, signal_counts, levels }
}

/// log2 of the dedup-inverted count: with q = n/cand the fraction of
/// signal cells above threshold, the underlying hit intensity per cell is
/// -ln(1-q), so the unbent count is cand * (-ln(1-q)). Returns -inf for
/// n = 0 and +inf for fully saturated rows (both unusable for regression).
fn inverted_intensity(n: u64, cand: u64) -> f64 {
    if n == 0 || cand == 0 {
        return f64::NEG_INFINITY;
    }
    if n >= cand {
        return f64::INFINITY;
    }
    let q = n as f64 / cand as f64;
    log2_count(cand) + crate::math::log2(-libm::log(1.0 - q))
}

/// log2 of the inverted shell count: the difference of the hit intensities
/// at the two shell edges, `cand * ln((cand - n_lo)/(cand - n_hi))` with
/// `n_lo <= n_hi` the counts above the upper/lower leader edge. +inf when
/// the upper edge saturates (shell indistinguishable from the support),
/// -inf when the shell is empty.
fn shell_intensity(n_lo: u64, n_hi: u64, cand: u64) -> f64 {
    if cand == 0 || n_hi == 0 || n_hi <= n_lo {
        return f64::NEG_INFINITY;
    }
    if n_hi >= cand {
        return f64::INFINITY;
    }
    let ratio = (cand - n_lo) as f64 / (cand - n_hi) as f64;
    log2_count(cand) + crate::math::log2(libm::log(ratio))
}

/// Box-count profiles of the tail unions of contracted balls centered at
/// active coefficient positions.
#[derive(Clone, Debug)]
pub struct LimsupCoverEstimate {
    pub delta: f64,
    pub tail_start: u32,
    pub resolution: u32,
    /// Cells of the finest resolution hit by some ball of the base tail.
    pub marked: BitSet,
    /// Box counts of the base tail per resolution, coarse to fine.
    pub counts: Vec<(u32, u64)>,
    /// Box count at the full resolution per tail start (tails shrink as
    /// the start grows).
    pub tail_counts: Vec<(u32, u64)>,
    /// Dimension estimate; -inf when every tail is empty.
    pub dim_hat: f64,
    /// Tail-start window of the regression, when one was used.
    pub window: Option<(u32, u32)>,
}

/// Tuning of the limsup dimension regression.
#[derive(Clone, Copy, Debug)]
pub struct LimsupOptions {
    pub min_window: usize,
    pub res_tol: f64,
}

impl Default for LimsupOptions {
    fn default() -> Self {
        LimsupOptions { min_window: 4, res_tol: 0.4 }
    }
}

/// Marks every resolution cell hit by a ball `B(k 2^-j, 2^{-delta j})` with
/// `j` in `[tail_start, j_max]` and `k` active, and estimates the dimension
/// from how the per-generation cover masses scale with the ball size.
///
/// Generation `j` covers its part of the limsup set with `#A_j` balls of
/// radius `2^{-delta j}`; its cell mass at the marking resolution scales
/// like `2^{(eta - delta) j}`, so its box count at its own ball resolution
/// scales like `2^{delta j * dim}`. The regression of the
/// occupancy-inverted generation masses (normalized to the ball scale)
/// against `delta j` reads off the dimension without the truncation bias a
/// tail sum would carry. Fully saturated generations carry no information
/// and are skipped; when every generation is saturated the union fills the
/// line at this resolution and the estimate is 1.
pub fn limsup_cover(
    coeffs: &LwsCoefficients,
    delta: f64,
    tail_start: u32,
    resolution: u32,
    options: &LimsupOptions,
) -> LimsupCoverEstimate {
    debug_assert!(delta > 0.0 && delta <= 1.0);
    let j_max = coeffs.params.j_max;
    let ncells = 1u64 << resolution;
    let scale = exp2(resolution as f64);
    // Mark each generation in a scratch set (deep to shallow), recording
    // its own count, and fold it into the running union whose suffix
    // counts give every tail's size.
    let mut generation_counts: Vec<(u32, u64)> = Vec::new();
    let mut tail_counts: Vec<(u32, u64)> = Vec::new();
    let mut union = BitSet::new(ncells);
    let mut scratch = BitSet::new(ncells);
    for j in (tail_start..=j_max).rev() {
        let radius = exp2(-delta * j as f64);
        let cell = exp2(-(j as f64));
        for w in scratch.words_mut() {
            *w = 0;
        }
        for k in coeffs.active[j as usize].iter() {
            let center = k as f64 * cell;
            let lo = floor((center - radius) * scale) as i64;
            let hi = floor((center + radius) * scale) as i64;
            let lo = lo.max(0) as u64;
            let hi = (hi.min(ncells as i64 - 1)) as u64;
            if lo <= hi {
                scratch.insert_range(lo, hi + 1);
            }
        }
        generation_counts.push((j, scratch.count()));
        union.union_with(&scratch);
        tail_counts.push((j, union.count()));
    }
    generation_counts.reverse();
    tail_counts.reverse();
    let marked = union;

    // Resolution profile of the base tail, coarse to fine.
    let mut counts: Vec<(u32, u64)> = Vec::with_capacity(resolution as usize);
    {
        let mut current = marked.clone();
        let mut stack: Vec<(u32, u64)> = Vec::new();
        for rho in (1..=resolution).rev() {
            stack.push((rho, current.count()));
            if rho > 1 {
                current = current.project_down(1);
            }
        }
        while let Some(entry) = stack.pop() {
            counts.push(entry);
        }
    }

    // Generation-mass regression: x = delta * j (the generation's ball
    // resolution), y = log2 of its inverted mass normalized to that
    // resolution: y = log2(L_j) + delta j, so the slope is the dimension.
    let xs: Vec<f64> = generation_counts.iter().map(|&(j, _)| delta * j as f64).collect();
    let ys: Vec<f64> = generation_counts
        .iter()
        .map(|&(j, n)| {
            let inv = inverted_intensity(n, ncells);
            // inverted_intensity = resolution + log2 L; renormalize to the
            // generation's own ball scale.
            inv - resolution as f64 + delta * j as f64
        })
        .collect();
    let usable: Vec<bool> = ys.iter().map(|v| v.is_finite()).collect();
    let fit = widest_stable_window(&xs, &ys, &usable, options.min_window, options.res_tol);
    let (dim_hat, window) = match fit {
        Some(WindowFit { lo_idx, hi_idx, fit }) => (
            fit.slope.clamp(0.0, 1.0),
            Some((generation_counts[lo_idx].0, generation_counts[hi_idx].0)),
        ),
        None => {
            if generation_counts.iter().all(|&(_, n)| n == ncells) {
                (1.0, None)
            } else if generation_counts.iter().all(|&(_, n)| n == 0) {
                (f64::NEG_INFINITY, None)
            } else {
                // Too few partially-filled generations: fall back to the
                // box profile slope of the base tail.
                let rx: Vec<f64> = counts.iter().map(|&(r, _)| r as f64).collect();
                let ry: Vec<f64> = counts.iter().map(|&(_, n)| log2_count(n)).collect();
                let ru: Vec<bool> = counts.iter().map(|&(_, n)| n > 0).collect();
                match widest_stable_window(&rx, &ry, &ru, options.min_window, options.res_tol) {
                    Some(WindowFit { fit, .. }) => (fit.slope.clamp(0.0, 1.0), None),
                    None => (f64::NEG_INFINITY, None),
                }
            }
        }
    };
    LimsupCoverEstimate {
        delta,
        tail_start,
        resolution,
        marked,
        counts,
        tail_counts,
        dim_hat,
        window,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SupAuditError {
    /// `(1 + beta_n)` must be an integer power of the ladder ratio.
    IncompatibleLadder { beta: f64, ratio: f64 },
    /// eta and h must satisfy 0 < eta < h.
    BadParameters,
}

impl core::fmt::Display for SupAuditError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SupAuditError::IncompatibleLadder { beta, ratio } => write!(
                f,
                "1+beta = {} is not an integer power of 1+b = {}",
                1.0 + beta,
                1.0 + ratio
            ),
            SupAuditError::BadParameters => write!(f, "audit needs 0 < eta < h"),
        }
    }
}

impl core::error::Error for SupAuditError {}

#[derive(Clone, Debug)]
pub struct SupRungReport {
    pub rung: usize,
    pub scale: u32,
    /// Whether the full look-ahead window `(1+beta) j` fits below the
    /// synthesized depth; beyond it missing coefficients are truncation
    /// noise, not genuine violations.
    pub evaluable: bool,
    pub checked: u64,
    pub violations: u64,
    pub violating_cells: Vec<u64>,
}

impl SupRungReport {
    pub fn violating_fraction(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.violations as f64 / self.checked as f64
        }
    }
}

/// Per-rung audit of the coefficient sup inside surviving cells: a cell of
/// scale `j` meeting the quasi-Cantor set passes when some coefficient under
/// it reaches `2^{-(alpha/eta)(h + 1/n) j}`, i.e. an active cell exists at
/// scale at most `(1+beta_n) j` with `beta_n = (h + 1/n)/eta - 1`.
#[derive(Clone, Debug)]
pub struct SupBoundAudit {
    pub n: u32,
    pub beta: f64,
    /// The integer `l` with `(1+beta) = (1+b)^l`.
    pub ladder_power: u32,
    pub rungs: Vec<SupRungReport>,
}

impl SupBoundAudit {
    /// Worst violating fraction among rungs with a fully observable window.
    pub fn worst_evaluable_fraction(&self) -> f64 {
        self.rungs
            .iter()
            .filter(|r| r.evaluable && r.checked > 0)
            .map(SupRungReport::violating_fraction)
            .fold(0.0, f64::max)
    }
}

pub fn audit_sup_bounds(
    coeffs: &LwsCoefficients,
    qc: &QuasiCantorLadder,
    n: u32,
) -> Result<SupBoundAudit, SupAuditError> {
    let eta = coeffs.params.eta;
    let h = qc.h;
    if !(eta > 0.0 && eta < h) {
        return Err(SupAuditError::BadParameters);
    }
    let beta = (h + 1.0 / n as f64) / eta - 1.0;
    let ratio = qc.ladder.ratio;
    let power = libm::log(1.0 + beta) / libm::log(1.0 + ratio);
    let ladder_power = crate::math::round(power) as u32;
    if ladder_power == 0
        || (crate::math::pow(1.0 + ratio, ladder_power as f64) - (1.0 + beta)).abs()
            > 1e-9 * (1.0 + beta)
    {
        return Err(SupAuditError::IncompatibleLadder { beta, ratio });
    }
    let threshold_ratio = coeffs.params.alpha / eta * (h + 1.0 / n as f64);
    let base = default_base_rung(qc).unwrap_or(0);
    let set = extract_quasi_cantor(qc, base);
    let j_max = coeffs.params.j_max;
    let mut rungs = Vec::new();
    for (offset, cells) in set.rung_sets.iter().enumerate() {
        let rung = base + offset;
        let scale = qc.ladder.rungs[rung];
        if scale > j_max {
            break;
        }
        let threshold = exp2(-threshold_ratio * scale as f64);
        let evaluable = (1.0 + beta) * scale as f64 <= j_max as f64;
        let mut checked = 0u64;
        let mut violating_cells = Vec::new();
        for k in cells.iter() {
            checked += 1;
            let mut sup = 0.0f64;
            for j in scale..=j_max {
                let gap = j - scale;
                if coeffs.active[j as usize].count_range(k << gap, (k + 1) << gap) > 0 {
                    sup = coeffs.params.magnitude(j);
                    break; // deeper actives only have smaller magnitudes
                }
            }
            if sup < threshold {
                violating_cells.push(k);
            }
        }
        rungs.push(SupRungReport {
            rung,
            scale,
            evaluable,
            checked,
            violations: violating_cells.len() as u64,
            violating_cells,
        });
    }
    Ok(SupBoundAudit { n, beta, ladder_power, rungs })
}
