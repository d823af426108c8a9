//! Dyadic level covers: for a compact set `I` and scale `j`, the index set
//! `{ k : [k 2^-j, (k+1) 2^-j) meets I }`.

use alloc::vec::Vec;

use crate::bits::BitSet;
use crate::spec::{AffineMap, ExplicitLevels, FractalSpec};

/// Whether a cover is the exact intersection set or a certified superset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    /// Outer approximation; `stabilized` records whether the IFS iteration
    /// reached a fixed point within its budget.
    Outer { stabilized: bool },
}

impl Exactness {
    pub fn is_exact(&self) -> bool {
        matches!(self, Exactness::Exact)
    }
}

/// The cover of one scale, immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelCover {
    pub j: u32,
    pub members: BitSet,
    pub exactness: Exactness,
}

impl LevelCover {
    pub fn count(&self) -> u64 {
        self.members.count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoverError {
    ScaleOverflow { j: u32, max: u32 },
    ParentNotInCover { j: u32, k: u64 },
    ScalesNotNested { parent_j: u32, child_j: u32 },
}

impl core::fmt::Display for CoverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CoverError::ScaleOverflow { j, max } => {
                write!(f, "scale {j} exceeds configured maximum {max}")
            }
            CoverError::ParentNotInCover { j, k } => {
                write!(f, "index {k} is not in the cover at scale {j}")
            }
            CoverError::ScalesNotNested { parent_j, child_j } => {
                write!(f, "child scale {child_j} must be finer than parent scale {parent_j}")
            }
        }
    }
}

impl core::error::Error for CoverError {}

/// Limits for cover construction.
#[derive(Clone, Copy, Debug)]
pub struct CoverConfig {
    pub max_scale: u32,
    /// Iteration cap for the outer IFS approximation.
    pub ifs_budget: u32,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig { max_scale: crate::DEFAULT_MAX_SCALE, ifs_budget: 256 }
    }
}

/// Builds the cover of `spec` at scale `j` with default limits.
pub fn build_cover(spec: &FractalSpec, j: u32) -> Result<LevelCover, CoverError> {
    build_cover_with(spec, j, &CoverConfig::default())
}

pub fn build_cover_with(
    spec: &FractalSpec,
    j: u32,
    config: &CoverConfig,
) -> Result<LevelCover, CoverError> {
    if j > config.max_scale {
        return Err(CoverError::ScaleOverflow { j, max: config.max_scale });
    }
    let ncells = 1u64 << j;
    let cover = match spec {
        FractalSpec::FullInterval => {
            LevelCover { j, members: BitSet::full(ncells), exactness: Exactness::Exact }
        }
        FractalSpec::DigitRestricted { block_bits, digits } => {
            let mut members = BitSet::new(ncells);
            fill_digit_cover(&mut members, *block_bits, digits, j);
            LevelCover { j, members, exactness: Exactness::Exact }
        }
        FractalSpec::FiniteUnion(components) => {
            let mut members = BitSet::new(ncells);
            let mut exact = true;
            for c in components {
                if j >= c.carrier.j {
                    let inner = build_cover_with(&c.spec, j - c.carrier.j, config)?;
                    exact &= inner.exactness.is_exact();
                    let base = c.carrier.k << (j - c.carrier.j);
                    for k in inner.members.iter() {
                        members.insert(base + k);
                    }
                } else {
                    members.insert(c.carrier.k >> (c.carrier.j - j));
                }
            }
            let exactness =
                if exact { Exactness::Exact } else { Exactness::Outer { stabilized: true } };
            LevelCover { j, members, exactness }
        }
        FractalSpec::AffineIfs(maps) => {
            let (members, stabilized) = outer_ifs_cover(maps, j, config.ifs_budget);
            LevelCover { j, members, exactness: Exactness::Outer { stabilized } }
        }
        FractalSpec::ExplicitCover(levels) => {
            LevelCover { j, members: explicit_level(levels, j), exactness: Exactness::Exact }
        }
    };
    Ok(cover)
}

/// Number of cover members at scale `child.j` lying under the parent cell
/// `k` at scale `parent.j`. The parent cell must itself be covered.
pub fn children_count(
    parent: &LevelCover,
    child: &LevelCover,
    k: u64,
) -> Result<u64, CoverError> {
    if child.j <= parent.j {
        return Err(CoverError::ScalesNotNested { parent_j: parent.j, child_j: child.j });
    }
    if !parent.members.contains(k) {
        return Err(CoverError::ParentNotInCover { j: parent.j, k });
    }
    let shift = child.j - parent.j;
    Ok(child.members.count_range(k << shift, (k + 1) << shift))
}

/// Digit-cylinder cover: a cell at scale `j` is covered when its full
/// `m`-bit blocks are allowed digits and its trailing partial block is a
/// prefix of some allowed digit.
fn fill_digit_cover(members: &mut BitSet, m: u32, digits: &[u16], j: u32) {
    let n_full = j / m;
    let rem = j % m;
    let mut tails: Vec<u64> = if rem == 0 {
        Vec::new()
    } else {
        let mut t: Vec<u64> = digits.iter().map(|&d| (d >> (m - rem)) as u64).collect();
        t.sort_unstable();
        t.dedup();
        t
    };
    if rem == 0 {
        tails.push(0);
    }
    fill_digit_rec(members, m, digits, &tails, rem, n_full, 0);
}

fn fill_digit_rec(
    members: &mut BitSet,
    m: u32,
    digits: &[u16],
    tails: &[u64],
    rem: u32,
    depth_left: u32,
    acc: u64,
) {
    if depth_left == 0 {
        for &t in tails {
            members.insert((acc << rem) | t);
        }
        return;
    }
    for &d in digits {
        fill_digit_rec(members, m, digits, tails, rem, depth_left - 1, (acc << m) | d as u64);
    }
}

/// Outer cover of an IFS attractor: start from the full grid and iterate
/// the maps on runs of covered cells, rounding image endpoints outward,
/// until the member set stops changing or the budget runs out.
fn outer_ifs_cover(maps: &[AffineMap], j: u32, budget: u32) -> (BitSet, bool) {
    let ncells = 1u64 << j;
    let mut current = BitSet::full(ncells);
    for _ in 0..budget {
        let mut next = BitSet::new(ncells);
        for (lo, hi) in runs(&current) {
            for map in maps {
                apply_map_to_run(map, j, lo, hi, &mut next);
            }
        }
        if next == current {
            return (current, true);
        }
        current = next;
    }
    (current, false)
}

/// Maximal runs `[lo, hi)` of consecutive members.
fn runs(set: &BitSet) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut start: Option<u64> = None;
    let mut prev = 0u64;
    for k in set.iter() {
        match start {
            None => start = Some(k),
            Some(_) if k == prev + 1 => {}
            Some(s) => {
                out.push((s, prev + 1));
                start = Some(k);
            }
        }
        prev = k;
    }
    if let Some(s) = start {
        out.push((s, prev + 1));
    }
    out
}

/// Marks the cells meeting the image of `[lo 2^-j, hi 2^-j)` under the map,
/// rounded outward, clamped to [0,1). Exact i128 rational arithmetic: with
/// x = a/2^j, the scaled image f(x)*2^j = (rn*a*td + tn*rd*2^j) / (rd*td).
fn apply_map_to_run(map: &AffineMap, j: u32, lo: u64, hi: u64, out: &mut BitSet) {
    let den = map.r_den as i128 * map.t_den as i128;
    let scaled = |a: u64| -> i128 {
        map.r_num as i128 * a as i128 * map.t_den as i128
            + map.t_num as i128 * map.r_den as i128 * (1i128 << j)
    };
    let (mut a, mut b) = (scaled(lo), scaled(hi));
    if a > b {
        core::mem::swap(&mut a, &mut b);
    }
    let start = a.div_euclid(den);
    let end = b.div_euclid(den) + 1;
    let ncells = 1i128 << j;
    let start = start.clamp(0, ncells) as u64;
    let end = end.clamp(0, ncells) as u64;
    out.insert_range(start, end);
}

fn explicit_level(levels: &ExplicitLevels, j: u32) -> BitSet {
    if let Some((_, set)) = levels.levels.iter().find(|(lj, _)| *lj == j) {
        return set.clone();
    }
    // Nearest finer level projects down; otherwise the finest available
    // level expands up (the set is read as the union of its finest cells).
    if let Some((lj, set)) = levels.levels.iter().find(|(lj, _)| *lj > j) {
        return set.project_down(lj - j);
    }
    let (lj, set) = levels.levels.last().expect("validated nonempty");
    set.expand_up(j - lj)
}
