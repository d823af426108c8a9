//! Symbolic descriptions of compact subsets of [0,1] with exact (or
//! certified-outer) dyadic intersection oracles.

use alloc::vec::Vec;

use crate::bits::BitSet;
use crate::dyadic::DyadicInterval;

/// A map `x -> r*x + t` with rational coefficients, `|r| < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub r_num: i64,
    pub r_den: i64,
    pub t_num: i64,
    pub t_den: i64,
}

impl AffineMap {
    pub fn new(r_num: i64, r_den: i64, t_num: i64, t_den: i64) -> Result<Self, SpecError> {
        if r_den <= 0 || t_den <= 0 {
            return Err(SpecError::InvalidIfsMap);
        }
        if r_num.unsigned_abs() >= r_den.unsigned_abs() {
            return Err(SpecError::IfsNotContracting);
        }
        Ok(AffineMap { r_num, r_den, t_num, t_den })
    }
}

/// One component of a finite union: `spec` rescaled onto the carrier cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnionComponent {
    pub carrier: DyadicInterval,
    pub spec: FractalSpec,
}

/// Externally supplied level covers; scales not present are derived by
/// projection from the nearest finer level or expansion from the nearest
/// coarser one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitLevels {
    /// (scale, members), strictly increasing in scale.
    pub levels: Vec<(u32, BitSet)>,
}

/// Symbolic description of a compact subset of [0,1].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FractalSpec {
    /// The whole interval [0,1].
    FullInterval,
    /// Reals whose base-2^m expansion only uses digits from `digits`.
    /// Covers are the digit-cylinder cells; the theoretical dimension is
    /// log2(#digits)/m.
    DigitRestricted { block_bits: u32, digits: Vec<u16> },
    /// Disjointly carried rescaled copies.
    FiniteUnion(Vec<UnionComponent>),
    /// Attractor of an iterated function system of contracting affine maps;
    /// covers are certified outer approximations.
    AffineIfs(Vec<AffineMap>),
    /// Covers supplied externally (not required to be consistent; audits
    /// use this to exercise failure paths).
    ExplicitCover(ExplicitLevels),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecError {
    EmptyDigitSet,
    DigitOutOfRange { digit: u16, block_bits: u32 },
    BlockBitsOutOfRange(u32),
    OverlappingCarriers,
    EmptyUnion,
    EmptyIfs,
    InvalidIfsMap,
    IfsNotContracting,
    EmptyExplicitCover,
    ExplicitScalesNotIncreasing,
}

impl core::fmt::Display for SpecError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SpecError::EmptyDigitSet => write!(f, "digit set must be nonempty"),
            SpecError::DigitOutOfRange { digit, block_bits } => {
                write!(f, "digit {digit} out of range for block of {block_bits} bits")
            }
            SpecError::BlockBitsOutOfRange(m) => {
                write!(f, "block size {m} bits outside supported range 1..=16")
            }
            SpecError::OverlappingCarriers => write!(f, "union carriers must be pairwise disjoint"),
            SpecError::EmptyUnion => write!(f, "union must have at least one component"),
            SpecError::EmptyIfs => write!(f, "ifs must have at least one map"),
            SpecError::InvalidIfsMap => write!(f, "ifs map denominators must be positive"),
            SpecError::IfsNotContracting => write!(f, "ifs maps must satisfy |r| < 1"),
            SpecError::EmptyExplicitCover => write!(f, "explicit cover needs at least one level"),
            SpecError::ExplicitScalesNotIncreasing => {
                write!(f, "explicit cover scales must be strictly increasing")
            }
        }
    }
}

impl core::error::Error for SpecError {}

impl FractalSpec {
    /// Digit-restricted set in base 2^`block_bits` with allowed `digits`
    /// (deduplicated and sorted). `digits = {0, 2^m - 1}` realizes the
    /// symmetric Cantor set of dissection ratio 2^-m.
    pub fn digit_restricted(block_bits: u32, digits: &[u16]) -> Result<Self, SpecError> {
        if !(1..=16).contains(&block_bits) {
            return Err(SpecError::BlockBitsOutOfRange(block_bits));
        }
        if digits.is_empty() {
            return Err(SpecError::EmptyDigitSet);
        }
        let mut ds: Vec<u16> = digits.to_vec();
        ds.sort_unstable();
        ds.dedup();
        let limit = 1u32 << block_bits;
        for &d in &ds {
            if (d as u32) >= limit {
                return Err(SpecError::DigitOutOfRange { digit: d, block_bits });
            }
        }
        Ok(FractalSpec::DigitRestricted { block_bits, digits: ds })
    }

    pub fn finite_union(components: Vec<UnionComponent>) -> Result<Self, SpecError> {
        if components.is_empty() {
            return Err(SpecError::EmptyUnion);
        }
        for (i, a) in components.iter().enumerate() {
            for b in &components[i + 1..] {
                if !a.carrier.disjoint_from(&b.carrier) {
                    return Err(SpecError::OverlappingCarriers);
                }
            }
        }
        Ok(FractalSpec::FiniteUnion(components))
    }

    pub fn affine_ifs(maps: Vec<AffineMap>) -> Result<Self, SpecError> {
        if maps.is_empty() {
            return Err(SpecError::EmptyIfs);
        }
        Ok(FractalSpec::AffineIfs(maps))
    }

    pub fn explicit(levels: Vec<(u32, BitSet)>) -> Result<Self, SpecError> {
        if levels.is_empty() {
            return Err(SpecError::EmptyExplicitCover);
        }
        if levels.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(SpecError::ExplicitScalesNotIncreasing);
        }
        Ok(FractalSpec::ExplicitCover(ExplicitLevels { levels }))
    }

    /// Closed-form dimension where one exists: 1 for the full interval,
    /// log2(#digits)/m for digit restrictions, the max over union
    /// components. IFS attractors and explicit covers return `None`.
    pub fn theoretical_dimension(&self) -> Option<f64> {
        match self {
            FractalSpec::FullInterval => Some(1.0),
            FractalSpec::DigitRestricted { block_bits, digits } => {
                Some(crate::math::log2(digits.len() as f64) / *block_bits as f64)
            }
            FractalSpec::FiniteUnion(components) => {
                let mut best = f64::NEG_INFINITY;
                for c in components {
                    best = best.max(c.spec.theoretical_dimension()?);
                }
                Some(best)
            }
            _ => None,
        }
    }
}
