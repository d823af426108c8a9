//! Analysis of fractal subsets of `[0,1]` through their dyadic covers.
//!
//! The crate works on compact sets described symbolically ([`FractalSpec`])
//! and materializes, at every dyadic scale `j`, the index set of cells
//! `[k 2^-j, (k+1) 2^-j)` meeting the set ([`LevelCover`]). On top of the
//! covers it provides:
//!
//! * upper-box dimension estimation and cover-count audits ([`dimension`]),
//! * classification of cells by duplication rate between scales
//!   ([`duplication`]),
//! * the iterative pruning that extracts quasi-Cantor subsets with
//!   controlled reproduction along a geometric scale ladder ([`quasicantor`]),
//! * seeded synthesis of lacunary wavelet series supported on the set
//!   ([`lws`]),
//! * wavelet leaders, pointwise regularity and increasing-spectrum
//!   estimation ([`leaders`]),
//! * Cantor-type generation trees with uniformly split mass and
//!   mass-distribution-principle dimension certificates ([`mdp`]).
//!
//! The crate is `no_std` compatible (with `alloc`); all floating-point
//! transcendentals go through `libm` so results do not depend on the
//! platform math library. With the `parallel` feature the heavy loops
//! run on rayon; outputs are bit-identical regardless of thread count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bits;
pub mod cover;
pub mod dimension;
pub mod duplication;
pub mod dyadic;
pub mod leaders;
pub mod lws;
pub(crate) mod math;
pub mod mdp;
pub mod quasicantor;
pub mod regress;
pub mod rng;
pub mod spec;

pub use bits::BitSet;
pub use cover::{build_cover, children_count, CoverConfig, CoverError, Exactness, LevelCover};
pub use dyadic::DyadicInterval;
pub use spec::{FractalSpec, SpecError};

/// Default deepest scale; one bit per position per retained level keeps
/// memory bounded (2^26 bits = 8 MiB per cover).
pub const DEFAULT_MAX_SCALE: u32 = 26;
