//! Dyadic intervals `[k 2^-j, (k+1) 2^-j)`.

/// The `k`-th half-open dyadic cell at scale `j`. The right endpoint 1 is
/// assigned to the last cell by convention.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct DyadicInterval {
    pub j: u32,
    pub k: u64,
}

impl DyadicInterval {
    /// Fails when `k >= 2^j`.
    pub fn new(j: u32, k: u64) -> Option<Self> {
        if j < 64 && k < (1u64 << j) {
            Some(DyadicInterval { j, k })
        } else {
            None
        }
    }

    pub fn lo(&self) -> f64 {
        self.k as f64 * crate::math::exp2(-(self.j as f64))
    }

    pub fn hi(&self) -> f64 {
        (self.k + 1) as f64 * crate::math::exp2(-(self.j as f64))
    }

    pub fn width(&self) -> f64 {
        crate::math::exp2(-(self.j as f64))
    }

    /// Ancestor at coarser scale `j_up <= j`.
    pub fn ancestor(&self, j_up: u32) -> DyadicInterval {
        debug_assert!(j_up <= self.j);
        DyadicInterval { j: j_up, k: self.k >> (self.j - j_up) }
    }

    /// Index range `[lo, hi)` of the descendant cells at scale `j_down >= j`.
    pub fn descendant_range(&self, j_down: u32) -> (u64, u64) {
        debug_assert!(j_down >= self.j);
        let shift = j_down - self.j;
        (self.k << shift, (self.k + 1) << shift)
    }

    /// True when `self` is contained in `other` (as real intervals).
    pub fn contained_in(&self, other: &DyadicInterval) -> bool {
        self.j >= other.j && (self.k >> (self.j - other.j)) == other.k
    }

    /// True when the two cells are disjoint as real intervals.
    pub fn disjoint_from(&self, other: &DyadicInterval) -> bool {
        !self.contained_in(other) && !other.contained_in(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_and_width() {
        let d = DyadicInterval::new(3, 5).unwrap();
        assert_eq!(d.lo(), 0.625);
        assert_eq!(d.hi(), 0.75);
        assert_eq!(d.width(), 0.125);
        assert!(DyadicInterval::new(3, 8).is_none());
    }

    #[test]
    fn containment() {
        let parent = DyadicInterval::new(2, 1).unwrap();
        let child = DyadicInterval::new(4, 5).unwrap(); // [5/16, 6/16) in [1/4, 1/2)
        assert!(child.contained_in(&parent));
        assert!(!parent.contained_in(&child));
        assert_eq!(child.ancestor(2), parent);
        assert_eq!(parent.descendant_range(4), (4, 8));
        let other = DyadicInterval::new(2, 2).unwrap();
        assert!(parent.disjoint_from(&other));
        assert!(!parent.disjoint_from(&child));
    }
}
