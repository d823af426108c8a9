//! Thin wrappers over `libm` so the crate uses one deterministic math
//! implementation in both std and no_std builds.

pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

pub fn exp2(x: f64) -> f64 {
    libm::exp2(x)
}

pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub fn round(x: f64) -> f64 {
    libm::round(x)
}

pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// log2 of a set cardinality; empty sets map to -inf.
pub fn log2_count(n: u64) -> f64 {
    if n == 0 {
        f64::NEG_INFINITY
    } else {
        libm::log2(n as f64)
    }
}
