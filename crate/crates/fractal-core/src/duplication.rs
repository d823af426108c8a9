//! Classification of covered cells by how fast they duplicate toward a
//! finer scale, and the cardinality audit for the three classes.

use alloc::vec::Vec;

use crate::cover::{build_cover_with, CoverConfig, CoverError, LevelCover};
use crate::math::{exp2, floor, log2_count};
use crate::spec::FractalSpec;

/// Parameters of a duplication classification. `m = max(1, beta)` is
/// always recomputed from `beta`, never stored.
#[derive(Clone, Copy, Debug)]
pub struct DuplicationParams {
    pub beta: f64,
    pub eps: f64,
    /// Reference dimension of the support.
    pub h: f64,
}

impl DuplicationParams {
    pub fn new(beta: f64, eps: f64, h: f64) -> Self {
        debug_assert!(beta > 0.0 && eps > 0.0);
        DuplicationParams { beta, eps, h }
    }

    pub fn m(&self) -> f64 {
        self.beta.max(1.0)
    }

    /// Child scale `floor((1+beta) j)`.
    pub fn child_scale(&self, j: u32) -> u32 {
        floor((1.0 + self.beta) * j as f64) as u32
    }

    /// Class-band exponents at parent scale `j`: `j (beta H -+ 4 m eps)`.
    pub fn band_exponents(&self, j: u32) -> (f64, f64) {
        let jf = j as f64;
        let m = self.m();
        (
            jf * (self.beta * self.h - 4.0 * m * self.eps),
            jf * (self.beta * self.h + 4.0 * m * self.eps),
        )
    }
}

/// Duplication class of one covered cell. Boundary equalities resolve to
/// `Normal`; only strict violations are slow or fast.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    Slow,
    Normal,
    Fast,
}

impl Class {
    pub fn label(&self) -> &'static str {
        match self {
            Class::Slow => "SD",
            Class::Normal => "ND",
            Class::Fast => "FD",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ParentClass {
    pub k: u64,
    pub child_count: u64,
    pub class: Class,
}

#[derive(Clone, Debug)]
pub struct DuplicationReport {
    pub j: u32,
    pub j_child: u32,
    pub params: DuplicationParams,
    /// One row per covered parent cell, ascending in `k`.
    pub parents: Vec<ParentClass>,
    pub slow: u64,
    pub normal: u64,
    pub fast: u64,
    /// Total number of covered children under slow parents.
    pub slow_children: u64,
}

impl DuplicationReport {
    pub fn parent_total(&self) -> u64 {
        self.slow + self.normal + self.fast
    }
}

/// Classifies every covered cell at scale `j` by its child count at scale
/// `floor((1+beta) j)` against the band `2^{j(beta H -+ 4 m eps)}`.
pub fn classify(
    spec: &FractalSpec,
    j: u32,
    params: &DuplicationParams,
    config: &CoverConfig,
) -> Result<DuplicationReport, CoverError> {
    let j_child = params.child_scale(j);
    if j_child <= j {
        return Err(CoverError::ScalesNotNested { parent_j: j, child_j: j_child });
    }
    let parent = build_cover_with(spec, j, config)?;
    let child = build_cover_with(spec, j_child, config)?;
    Ok(classify_covers(&parent, &child, params))
}

/// Classification over already built covers (the quasi-Cantor ladder uses
/// this with its own rung pair and band).
pub fn classify_covers(
    parent: &LevelCover,
    child: &LevelCover,
    params: &DuplicationParams,
) -> DuplicationReport {
    let (lo_exp, hi_exp) = params.band_exponents(parent.j);
    let lo = exp2(lo_exp);
    let hi = exp2(hi_exp);
    let shift = child.j - parent.j;
    let keys: Vec<u64> = parent.members.iter().collect();
    let classify_one = |&k: &u64| -> ParentClass {
        let count = child.members.count_range(k << shift, (k + 1) << shift);
        let c = count as f64;
        let class = if c < lo {
            Class::Slow
        } else if c > hi {
            Class::Fast
        } else {
            Class::Normal
        };
        ParentClass { k, child_count: count, class }
    };
    #[cfg(feature = "parallel")]
    let parents: Vec<ParentClass> = {
        use rayon::prelude::*;
        keys.par_iter().map(classify_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parents: Vec<ParentClass> = keys.iter().map(classify_one).collect();

    let mut slow = 0;
    let mut normal = 0;
    let mut fast = 0;
    let mut slow_children = 0;
    for p in &parents {
        match p.class {
            Class::Slow => {
                slow += 1;
                slow_children += p.child_count;
            }
            Class::Normal => normal += 1,
            Class::Fast => fast += 1,
        }
    }
    DuplicationReport {
        j: parent.j,
        j_child: child.j,
        params: *params,
        parents,
        slow,
        normal,
        fast,
        slow_children,
    }
}

/// One bound of the cardinality audit, with its margin in log2 units
/// (nonnegative margin = pass; equality passes).
#[derive(Clone, Copy, Debug)]
pub struct BoundCheck {
    pub pass: bool,
    pub margin_log2: f64,
}

fn check_upper(log_count: f64, bound_exp: f64) -> BoundCheck {
    let margin = bound_exp - log_count;
    BoundCheck { pass: margin >= 0.0, margin_log2: margin }
}

fn check_lower(log_count: f64, bound_exp: f64) -> BoundCheck {
    let margin = log_count - bound_exp;
    BoundCheck { pass: margin >= 0.0, margin_log2: margin }
}

/// Audit of the class cardinalities:
/// `2^{j(H-2e)} <= #ND <= 2^{j(H+e)}`, `#FD <= 2^{j(H-2e)}` and
/// `#(children of SD) <= 2^{j(1+beta)(H-3me)}`.
#[derive(Clone, Copy, Debug)]
pub struct CardBoundsAudit {
    pub normal_lower: BoundCheck,
    pub normal_upper: BoundCheck,
    pub fast_upper: BoundCheck,
    pub slow_children_upper: BoundCheck,
}

impl CardBoundsAudit {
    pub fn all_pass(&self) -> bool {
        self.normal_lower.pass
            && self.normal_upper.pass
            && self.fast_upper.pass
            && self.slow_children_upper.pass
    }
}

pub fn audit_card_bounds(report: &DuplicationReport) -> CardBoundsAudit {
    let p = &report.params;
    let jf = report.j as f64;
    let m = p.m();
    let log_nd = log2_count(report.normal);
    let log_fd = log2_count(report.fast);
    let log_csd = log2_count(report.slow_children);
    CardBoundsAudit {
        normal_lower: check_lower(log_nd, jf * (p.h - 2.0 * p.eps)),
        normal_upper: check_upper(log_nd, jf * (p.h + p.eps)),
        fast_upper: check_upper(log_fd, jf * (p.h - 2.0 * p.eps)),
        slow_children_upper: check_upper(log_csd, jf * (1.0 + p.beta) * (p.h - 3.0 * m * p.eps)),
    }
}
