//! Least-squares line fits and stable-window selection shared by the
//! dimension, spectrum and limsup estimators.

/// Result of a one-dimensional least-squares fit `y ~ slope*x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// max_i |y_i - (slope*x_i + intercept)|
    pub max_abs_residual: f64,
}

/// Ordinary least squares over paired samples. Returns `None` for fewer
/// than two points or a degenerate abscissa.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let max_abs_residual = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - (slope * x + intercept)).abs())
        .fold(0.0, f64::max);
    Some(LineFit { slope, intercept, max_abs_residual })
}

/// A window `[lo_idx, hi_idx]` (inclusive, into the sample arrays) and its fit.
#[derive(Clone, Copy, Debug)]
pub struct WindowFit {
    pub lo_idx: usize,
    pub hi_idx: usize,
    pub fit: LineFit,
}

/// Selects the widest contiguous window whose least-squares fit keeps every
/// residual below `res_tol`, among samples where `usable[i]` holds.
///
/// Ties on width are broken by the smaller max residual. Falls back to the
/// best-fitting window of `min_len` when no window meets the tolerance, and
/// returns `None` when no `min_len` usable stretch exists at all.
pub fn widest_stable_window(
    xs: &[f64],
    ys: &[f64],
    usable: &[bool],
    min_len: usize,
    res_tol: f64,
) -> Option<WindowFit> {
    debug_assert!(min_len >= 2);
    let n = xs.len();
    let mut best: Option<WindowFit> = None;
    let mut fallback: Option<WindowFit> = None;
    let mut lo = 0;
    while lo < n {
        if !usable[lo] {
            lo += 1;
            continue;
        }
        let mut hi = lo;
        while hi + 1 < n && usable[hi + 1] {
            hi += 1;
        }
        // usable stretch [lo, hi]
        let mut a = lo;
        while a + min_len - 1 <= hi {
            let mut b = a + min_len - 1;
            while b <= hi {
                if let Some(fit) = least_squares(&xs[a..=b], &ys[a..=b]) {
                    let cand = WindowFit { lo_idx: a, hi_idx: b, fit };
                    if fit.max_abs_residual <= res_tol {
                        let better = match &best {
                            None => true,
                            Some(w) => {
                                let (wl, cl) = (w.hi_idx - w.lo_idx, b - a);
                                cl > wl
                                    || (cl == wl
                                        && fit.max_abs_residual < w.fit.max_abs_residual)
                            }
                        };
                        if better {
                            best = Some(cand);
                        }
                    } else if b - a + 1 == min_len {
                        let better = match &fallback {
                            None => true,
                            Some(w) => fit.max_abs_residual < w.fit.max_abs_residual,
                        };
                        if better {
                            fallback = Some(cand);
                        }
                    }
                }
                b += 1;
            }
            a += 1;
        }
        lo = hi + 1;
    }
    best.or(fallback)
}

/// Deepest (rightmost) window of width `width` whose fit keeps every
/// residual below `res_tol`, shrinking the width down to `min_width` when
/// no window of the full width qualifies. Favoring the right end keeps
/// scaling-law fits away from shallow-scale contamination.
pub fn deepest_stable_window(
    xs: &[f64],
    ys: &[f64],
    usable: &[bool],
    width: usize,
    min_width: usize,
    res_tol: f64,
) -> Option<WindowFit> {
    debug_assert!(min_width >= 2 && width >= min_width);
    let n = xs.len();
    for w in (min_width..=width.min(n)).rev() {
        let mut hi = n;
        while hi >= w {
            let b = hi - 1;
            let a = hi - w;
            hi -= 1;
            if !usable[a..=b].iter().all(|&u| u) {
                continue;
            }
            if let Some(fit) = least_squares(&xs[a..=b], &ys[a..=b]) {
                if fit.max_abs_residual <= res_tol {
                    return Some(WindowFit { lo_idx: a, hi_idx: b, fit });
                }
            }
        }
    }
    None
}

/// Longest contiguous run of `true` entries, returned as an inclusive index
/// range; ties go to the later run.
pub fn longest_true_run(usable: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < usable.len() {
        if usable[i] {
            let start = i;
            while i + 1 < usable.len() && usable[i + 1] {
                i += 1;
            }
            let better = match best {
                None => true,
                Some((lo, hi)) => i - start >= hi - lo,
            };
            if better {
                best = Some((start, i));
            }
        }
        i += 1;
    }
    best
}

/// Convenience: fit over an inclusive index window.
pub fn fit_window(xs: &[f64], ys: &[f64], lo: usize, hi: usize) -> Option<LineFit> {
    least_squares(&xs[lo..=hi], &ys[lo..=hi])
}


#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn exact_line_recovered() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let fit = least_squares(&xs, &ys).unwrap();
        assert_eq!(fit.slope, 2.5);
        assert!(fit.max_abs_residual < 1e-12);
    }

    #[test]
    fn self_fit_is_exactly_one() {
        // y == x: numerator and denominator are the same float sums.
        let xs: Vec<f64> = (4..=16).map(|i| i as f64).collect();
        let fit = least_squares(&xs, &xs).unwrap();
        assert_eq!(fit.slope, 1.0);
    }

    #[test]
    fn window_avoids_kink() {
        // Rise with slope 1 up to x=10, then flat: the stable window must
        // stay inside one regime (the longer one).
        let xs: Vec<f64> = (0..=20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| if x <= 10.0 { x } else { 10.0 }).collect();
        let usable = [true; 21];
        let w = widest_stable_window(&xs, &ys, &usable, 4, 0.2).unwrap();
        let len = w.hi_idx - w.lo_idx + 1;
        assert!(len >= 10, "window too short: {len}");
        assert!(
            (w.fit.slope - 1.0).abs() < 0.05 || w.fit.slope.abs() < 0.05,
            "slope {} mixes regimes",
            w.fit.slope
        );
    }

    #[test]
    fn unusable_entries_split_runs() {
        let usable = [true, true, false, true, true, true];
        assert_eq!(longest_true_run(&usable), Some((3, 5)));
    }
}
