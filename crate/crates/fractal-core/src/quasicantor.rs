//! Quasi-Cantor subsets: along a geometric ladder of scales, iteratively
//! prune covered cells whose surviving-descendant counts fall below the
//! reproduction threshold, keep the stabilized survivors per rung, and
//! extract the nested family whose ancestor chains survive everywhere.

use alloc::vec::Vec;

use crate::bits::BitSet;
use crate::cover::{build_cover_with, CoverConfig, CoverError, LevelCover};
use crate::math::{exp2, floor, log2_count};
use crate::spec::FractalSpec;

/// Geometric scale ladder `j_i = floor((1+b)^i J)`, deduplicated.
#[derive(Clone, Debug)]
pub struct ScaleLadder {
    pub base_scale: u32,
    pub ratio: f64,
    pub rungs: Vec<u32>,
    /// Whether flooring collapsed consecutive rungs (they are dropped).
    pub had_collisions: bool,
}

impl ScaleLadder {
    /// Index of the deepest rung.
    pub fn last(&self) -> usize {
        self.rungs.len() - 1
    }

    /// Scale gap `j_{i+1} - j_i`.
    pub fn gap(&self, i: usize) -> u32 {
        self.rungs[i + 1] - self.rungs[i]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LadderError {
    BadParams,
    TooShort { rungs: usize },
}

impl core::fmt::Display for LadderError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LadderError::BadParams => write!(f, "need base scale >= 1 and ratio in (0,1)"),
            LadderError::TooShort { rungs } => {
                write!(f, "only {rungs} rungs fit below the maximum scale; need at least 3")
            }
        }
    }
}

impl core::error::Error for LadderError {}

/// Builds the ladder `floor((1+b)^i J)` truncated at `max_scale`. A tiny
/// nudge keeps floors of exactly-representable products (e.g. 1.5^2 * 8)
/// from landing one below the true integer.
pub fn build_ladder(base_scale: u32, ratio: f64, max_scale: u32) -> Result<ScaleLadder, LadderError> {
    if base_scale == 0 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(LadderError::BadParams);
    }
    let mut rungs: Vec<u32> = Vec::new();
    let mut had_collisions = false;
    let mut factor = 1.0f64;
    loop {
        let value = floor(base_scale as f64 * factor + 1e-9) as u64;
        if value > max_scale as u64 {
            break;
        }
        let scale = value as u32;
        match rungs.last() {
            Some(&prev) if prev == scale => had_collisions = true,
            Some(&prev) => debug_assert!(scale > prev),
            None => {}
        }
        if rungs.last() != Some(&scale) {
            rungs.push(scale);
        }
        factor *= 1.0 + ratio;
        if factor > 1e12 {
            break;
        }
    }
    if rungs.len() < 3 {
        return Err(LadderError::TooShort { rungs: rungs.len() });
    }
    Ok(ScaleLadder { base_scale, ratio, rungs, had_collisions })
}

/// Which reading of the pruning recursion to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PruneMode {
    /// Well-founded recursion: depth-l survivors at one rung are filtered
    /// by depth-(l-1) survivors at the next rung.
    #[default]
    Recursive,
    /// Iterate the one-step filter across all rungs until self-consistent.
    FixedPoint,
}

#[derive(Clone, Debug)]
pub enum PruneError {
    /// Requires `b*H - 5*eps > 0`.
    Precondition { ratio: f64, h: f64, eps: f64 },
    Cover(CoverError),
}

impl core::fmt::Display for PruneError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PruneError::Precondition { ratio, h, eps } => write!(
                f,
                "pruning requires b*H - 5*eps > 0, got b={ratio} H={h} eps={eps}"
            ),
            PruneError::Cover(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PruneError {}

impl From<CoverError> for PruneError {
    fn from(e: CoverError) -> Self {
        PruneError::Cover(e)
    }
}

/// Survivor sets of the pruning recursion on one ladder.
#[derive(Clone, Debug)]
pub struct QuasiCantorLadder {
    pub ladder: ScaleLadder,
    pub h: f64,
    pub eps: f64,
    pub mode: PruneMode,
    /// Cover at each rung.
    pub covers: Vec<LevelCover>,
    /// `depths[i][l-1]` is the depth-`l` survivor set at rung `i`
    /// (depth 1 = the normal-duplication cells). Empty at the last rung.
    pub depths: Vec<Vec<BitSet>>,
    /// Deepest computable survivor set per rung (the cover itself at the
    /// last rung, where no pruning information exists).
    pub t_inf: Vec<BitSet>,
    /// True where the survivor sets stopped shrinking before the depth ran
    /// out; false marks depth-truncated rungs.
    pub stabilized: Vec<bool>,
}

impl QuasiCantorLadder {
    /// Reproduction threshold from rung `i` to rung `i'`:
    /// exponent `(j_{i'} - j_i)(H - 5 eps / b)`.
    pub fn threshold_exponent(&self, i: usize, i_to: usize) -> f64 {
        let gap = (self.ladder.rungs[i_to] - self.ladder.rungs[i]) as f64;
        gap * (self.h - 5.0 * self.eps / self.ladder.ratio)
    }

    /// Complement sets `U_l = T_{l-1} \ T_l` at rung `i` (depth l >= 2).
    pub fn pruned_at_depth(&self, i: usize, l: usize) -> Option<BitSet> {
        debug_assert!(l >= 2);
        let depths = &self.depths[i];
        if l - 1 >= depths.len() {
            return None;
        }
        let mut out = depths[l - 2].clone();
        for k in depths[l - 1].iter() {
            out.remove(k);
        }
        Some(out)
    }
}

/// Runs the pruning recursion for the ladder on `spec`. `h` is supplied by
/// the caller (estimated or analytic), never re-estimated here.
pub fn prune(
    spec: &FractalSpec,
    ladder: &ScaleLadder,
    h: f64,
    eps: f64,
    mode: PruneMode,
    config: &CoverConfig,
) -> Result<QuasiCantorLadder, PruneError> {
    let b = ladder.ratio;
    if !(b * h - 5.0 * eps > 0.0) {
        return Err(PruneError::Precondition { ratio: b, h, eps });
    }
    let mut covers = Vec::with_capacity(ladder.rungs.len());
    for &j in &ladder.rungs {
        covers.push(build_cover_with(spec, j, config)?);
    }
    let last = ladder.last();

    // Depth 1: cells in the normal-duplication band toward the next rung,
    // exponents (j_{i+1} - j_i)(H -+ 4 eps / b).
    let mut depth1: Vec<BitSet> = Vec::with_capacity(last);
    for i in 0..last {
        let gap = ladder.gap(i) as f64;
        let lo = exp2(gap * (h - 4.0 * eps / b));
        let hi = exp2(gap * (h + 4.0 * eps / b));
        depth1.push(filter_by_children(
            &covers[i].members,
            &covers[i + 1].members,
            ladder.gap(i),
            |c| {
                let cf = c as f64;
                cf >= lo && cf <= hi
            },
        ));
    }

    let mut depths: Vec<Vec<BitSet>> = depth1.into_iter().map(|d| alloc::vec![d]).collect();
    depths.push(Vec::new()); // last rung holds no pruning depths

    match mode {
        PruneMode::Recursive => {
            // depths[i][l-1] from depths[i][l-2] and depths[i+1][l-2].
            for l in 2..=last {
                for i in 0..=last.saturating_sub(l) {
                    let threshold = exp2(
                        ladder.gap(i) as f64 * (h - 5.0 * eps / b),
                    );
                    let next_level: &BitSet = if i + 1 == last {
                        &covers[last].members
                    } else {
                        &depths[i + 1][l - 2]
                    };
                    let filtered = filter_by_children(
                        &depths[i][l - 2],
                        next_level,
                        ladder.gap(i),
                        |c| c as f64 >= threshold,
                    );
                    depths[i].push(filtered);
                }
            }
        }
        PruneMode::FixedPoint => {
            // Iterate the one-step filter over all rungs until stable.
            loop {
                let mut changed = false;
                for i in 0..last {
                    let threshold = exp2(ladder.gap(i) as f64 * (h - 5.0 * eps / b));
                    let next: BitSet = if i + 1 == last {
                        covers[last].members.clone()
                    } else {
                        depths[i + 1].last().unwrap().clone()
                    };
                    let current = depths[i].last().unwrap();
                    let filtered = filter_by_children(current, &next, ladder.gap(i), |c| {
                        c as f64 >= threshold
                    });
                    if &filtered != current {
                        changed = true;
                    }
                    depths[i].push(filtered);
                }
                if !changed {
                    break;
                }
            }
        }
    }

    let mut t_inf = Vec::with_capacity(last + 1);
    let mut stabilized = Vec::with_capacity(last + 1);
    for (i, rung_depths) in depths.iter().enumerate() {
        if i == last {
            t_inf.push(covers[last].members.clone());
            stabilized.push(false);
        } else {
            let deepest = rung_depths.last().expect("rung below last has depth 1");
            t_inf.push(deepest.clone());
            let n = rung_depths.len();
            stabilized.push(n >= 2 && rung_depths[n - 1] == rung_depths[n - 2]);
        }
    }

    Ok(QuasiCantorLadder {
        ladder: ladder.clone(),
        h,
        eps,
        mode,
        covers,
        depths,
        t_inf,
        stabilized,
    })
}

/// Members of `parents` whose covered-children count under `children`
/// (scale gap `gap`) satisfies `keep`.
fn filter_by_children(
    parents: &BitSet,
    children: &BitSet,
    gap: u32,
    keep: impl Fn(u64) -> bool + Sync,
) -> BitSet {
    let mut out = BitSet::new(parents.len());
    for k in parents.iter() {
        let count = children.count_range(k << gap, (k + 1) << gap);
        if keep(count) {
            out.insert(k);
        }
    }
    out
}

/// The nested family representing the quasi-Cantor set: per rung from
/// `base_rung` on, the survivors whose whole ancestor chain survives.
#[derive(Clone, Debug)]
pub struct QuasiCantorSet {
    pub base_rung: usize,
    /// `rung_sets[r]` lives at ladder rung `base_rung + r`.
    pub rung_sets: Vec<BitSet>,
}

impl QuasiCantorSet {
    pub fn is_empty(&self) -> bool {
        self.rung_sets.iter().any(|s| s.is_empty())
    }
}

/// Chains the survivor sets from `base_rung` downward.
pub fn extract_quasi_cantor(qc: &QuasiCantorLadder, base_rung: usize) -> QuasiCantorSet {
    let last = qc.ladder.last();
    debug_assert!(base_rung <= last);
    let mut rung_sets: Vec<BitSet> = Vec::with_capacity(last - base_rung + 1);
    rung_sets.push(qc.t_inf[base_rung].clone());
    for i in base_rung + 1..=last {
        let prev = rung_sets.last().unwrap();
        let gap = qc.ladder.rungs[i] - qc.ladder.rungs[i - 1];
        let mut chained = prev.expand_up(gap);
        chained.intersect_with(&qc.t_inf[i]);
        rung_sets.push(chained);
    }
    QuasiCantorSet { base_rung, rung_sets }
}

/// Two-sided survivor-count check at one rung, margins in log2 units.
#[derive(Clone, Copy, Debug)]
pub struct RungCountCheck {
    pub rung: usize,
    pub scale: u32,
    pub count: u64,
    pub low_margin: f64,
    pub high_margin: f64,
}

impl RungCountCheck {
    pub fn pass(&self) -> bool {
        self.low_margin >= 0.0 && self.high_margin >= 0.0
    }
}

/// Reproduction check from one rung to a deeper one.
#[derive(Clone, Debug)]
pub struct ReproductionCheck {
    pub from_rung: usize,
    pub to_rung: usize,
    pub threshold_exponent: f64,
    pub checked: u64,
    pub worst_margin: f64,
    /// Cells whose descendant count fell below the threshold.
    pub violations: Vec<u64>,
}

impl ReproductionCheck {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audit of the survivor counts (two-sided, exponents `j(H -+ eps)`) and of
/// per-cell descendant reproduction (exponent `(j' - j)(H - 5 eps / b)`).
#[derive(Clone, Debug)]
pub struct QuasiCantorAudit {
    pub base_rung: usize,
    pub rung_counts: Vec<RungCountCheck>,
    pub reproduction: Vec<ReproductionCheck>,
}

impl QuasiCantorAudit {
    pub fn pass(&self) -> bool {
        self.rung_counts.iter().all(RungCountCheck::pass)
            && self.reproduction.iter().all(ReproductionCheck::pass)
    }

    pub fn worst_count_margin(&self) -> f64 {
        self.rung_counts
            .iter()
            .map(|c| c.low_margin.min(c.high_margin))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn worst_reproduction_margin(&self) -> f64 {
        self.reproduction.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min)
    }
}

/// Builds the rung-count check for one rung.
fn rung_count_check(qc: &QuasiCantorLadder, i: usize) -> RungCountCheck {
    let scale = qc.ladder.rungs[i];
    let count = qc.t_inf[i].count();
    let logn = log2_count(count);
    RungCountCheck {
        rung: i,
        scale,
        count,
        low_margin: logn - scale as f64 * (qc.h - qc.eps),
        high_margin: scale as f64 * (qc.h + qc.eps) - logn,
    }
}

/// Smallest rung whose two-sided survivor count check passes; the default
/// base rung for extraction.
pub fn default_base_rung(qc: &QuasiCantorLadder) -> Option<usize> {
    (0..qc.ladder.rungs.len()).find(|&i| rung_count_check(qc, i).pass())
}

/// Runs both audit families from `base_rung` on. Reproduction is checked
/// for every surviving cell of the chained family against the survivor
/// sets at every deeper rung.
pub fn audit(qc: &QuasiCantorLadder, base_rung: usize) -> QuasiCantorAudit {
    let last = qc.ladder.last();
    let set = extract_quasi_cantor(qc, base_rung);
    let mut rung_counts = Vec::new();
    for i in base_rung..=last {
        rung_counts.push(rung_count_check(qc, i));
    }
    let mut reproduction = Vec::new();
    for i in base_rung..last {
        let from_set = &set.rung_sets[i - base_rung];
        for i_to in i + 1..=last {
            let exponent = qc.threshold_exponent(i, i_to);
            let threshold = exp2(exponent);
            let gap = qc.ladder.rungs[i_to] - qc.ladder.rungs[i];
            let mut worst = f64::INFINITY;
            let mut violations = Vec::new();
            let mut checked = 0u64;
            for k in from_set.iter() {
                let count = qc.t_inf[i_to].count_range(k << gap, (k + 1) << gap);
                let margin = log2_count(count) - exponent;
                worst = worst.min(margin);
                checked += 1;
                if (count as f64) < threshold {
                    violations.push(k);
                }
            }
            reproduction.push(ReproductionCheck {
                from_rung: i,
                to_rung: i_to,
                threshold_exponent: exponent,
                checked,
                worst_margin: worst,
                violations,
            });
        }
    }
    QuasiCantorAudit { base_rung, rung_counts, reproduction }
}
