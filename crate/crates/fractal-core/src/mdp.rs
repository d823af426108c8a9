//! Nested Cantor-type generations with uniformly split mass, and
//! mass-distribution-principle certificates: the largest exponent `t` such
//! that every dyadic interval `D` down to a depth satisfies
//! `mu(D) <= c |D|^t`, verified by exhaustive scan.

use alloc::vec::Vec;

use crate::bits::BitSet;
use crate::dyadic::DyadicInterval;
use crate::lws::LwsCoefficients;
use crate::math::{ceil, exp2, floor, log2_count, pow, round};
use crate::quasicantor::{default_base_rung, extract_quasi_cantor, QuasiCantorLadder};

/// One selected ball: a half-open interval `[center - radius, center + radius)`.
#[derive(Clone, Copy, Debug)]
pub struct Ball {
    pub center: f64,
    pub radius: f64,
    /// Source position of the center on the dyadic grid.
    pub scale: u32,
    pub k: u64,
}

impl Ball {
    pub fn lo(&self) -> f64 {
        self.center - self.radius
    }

    pub fn hi(&self) -> f64 {
        self.center + self.radius
    }
}

#[derive(Clone, Debug)]
pub struct Generation {
    /// Ladder rung index the generation anchors at.
    pub rung: usize,
    /// Anchor scale `j_{p_N}`.
    pub scale: u32,
    /// Balls selected per parent (the whole candidate target, met exactly).
    pub per_parent: u64,
    /// All balls, ascending by center; parent `i` owns the slice
    /// `[i * per_parent, (i+1) * per_parent)`.
    pub balls: Vec<Ball>,
}

/// The construction output: generations plus the uniform mass split. Every
/// ball of the deepest generation carries mass `1 / mass_denominator`.
#[derive(Clone, Debug)]
pub struct GenerationTree {
    /// Contraction exponent `s = (1+b)^{q0}`.
    pub s: f64,
    pub b: f64,
    pub h: f64,
    pub shallow: bool,
    pub generations: Vec<Generation>,
}

impl GenerationTree {
    /// Product of the per-parent counts; exact in u128 at desk scales.
    pub fn mass_denominator(&self) -> u128 {
        self.generations.iter().map(|g| g.per_parent as u128).product()
    }

    pub fn log2_mass_denominator(&self) -> f64 {
        self.generations.iter().map(|g| log2_count(g.per_parent)).sum()
    }

    pub fn deepest(&self) -> &Generation {
        self.generations.last().expect("tree has at least one generation")
    }

    /// Single uniform generation over dyadic cells (each cell becomes a
    /// half-open ball); the reference trees of the certificate tests.
    pub fn from_uniform_cells(scale: u32, members: &BitSet) -> Self {
        let width = exp2(-(scale as f64));
        let balls: Vec<Ball> = members
            .iter()
            .map(|k| Ball {
                center: (k as f64 + 0.5) * width,
                radius: 0.5 * width,
                scale,
                k,
            })
            .collect();
        let per_parent = balls.len() as u64;
        GenerationTree {
            s: 1.0,
            b: 0.0,
            h: 1.0,
            shallow: false,
            generations: alloc::vec![Generation { rung: 0, scale, per_parent, balls }],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MdpError {
    BadParams(&'static str),
    /// `s` must be an integer power of the ladder ratio.
    IncompatibleContraction { s: f64, ratio: f64 },
    /// Not even a degenerate two-generation schedule fits the ladder.
    ScheduleInfeasible,
    /// A node could not supply its disjoint-ball quota.
    Shortfall { generation: usize, parent: Option<u64>, needed: u64, found: u64 },
    ZeroMass,
    /// The mandatory re-scan found a violation of the certified bound.
    SelfCheckFailed,
}

impl core::fmt::Display for MdpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MdpError::BadParams(m) => write!(f, "invalid parameters: {m}"),
            MdpError::IncompatibleContraction { s, ratio } => {
                write!(f, "s = {s} is not an integer power of 1+b = {}", 1.0 + ratio)
            }
            MdpError::ScheduleInfeasible => {
                write!(f, "no two generation anchors fit the ladder")
            }
            MdpError::Shortfall { generation, parent, needed, found } => match parent {
                Some(p) => write!(
                    f,
                    "generation {generation}: parent ball at center index {p} needed {needed} disjoint balls, found {found}"
                ),
                None => write!(
                    f,
                    "generation {generation}: needed {needed} disjoint balls, found {found}"
                ),
            },
            MdpError::ZeroMass => write!(f, "generation tree carries no mass"),
            MdpError::SelfCheckFailed => write!(f, "certificate self-check failed"),
        }
    }
}

impl core::error::Error for MdpError {}

/// Builds the nested generations inside the quasi-Cantor set, selecting
/// active coefficient positions whose contracted balls are pairwise
/// disjoint, leftmost first, exactly `ceil(2^{(j_{p_N} - s j_{p_{N-1}})(H - 6 b)})`
/// per parent (`ceil(2^{j_{p_1}(H - 6 b)})` at the first generation).
pub fn build_generations(
    qc: &QuasiCantorLadder,
    coeffs: &LwsCoefficients,
    s: f64,
    b: f64,
) -> Result<GenerationTree, MdpError> {
    if !(b > 0.0 && b < 1.0) {
        return Err(MdpError::BadParams("b must lie in (0,1)"));
    }
    let h = qc.h;
    if !(h - 6.0 * b > 0.0) {
        return Err(MdpError::BadParams("need H - 6b > 0 for positive selection targets"));
    }
    let ratio = qc.ladder.ratio;
    let q0 = round(libm::log(s) / libm::log(1.0 + ratio));
    if !(q0 >= 0.0) || (pow(1.0 + ratio, q0) - s).abs() > 1e-9 * s {
        return Err(MdpError::IncompatibleContraction { s, ratio });
    }
    let base = default_base_rung(qc).unwrap_or(0);
    let set = extract_quasi_cantor(qc, base);
    let last = qc.ladder.last();
    let j_max = coeffs.params.j_max;

    // Anchor rungs: the child rung must exist and stay synthesized.
    let eligible: Vec<usize> = (base..last)
        .filter(|&p| qc.ladder.rungs[p + 1] <= j_max)
        .collect();
    if eligible.len() < 2 {
        return Err(MdpError::ScheduleInfeasible);
    }
    let mut schedule: Vec<usize> = alloc::vec![eligible[0]];
    // Scale gaps per the schedule inequality
    // j_{p_{N-1}} (s-1)(H-6b) < j_{p_N} b 2^{-N}.
    loop {
        let n = schedule.len() + 1;
        let prev = *schedule.last().unwrap();
        let lhs = qc.ladder.rungs[prev] as f64 * (s - 1.0) * (h - 6.0 * b);
        let needed = lhs * exp2(n as f64) / b;
        let next = eligible.iter().copied().find(|&p| {
            p > prev && (qc.ladder.rungs[p] as f64) > needed
        });
        match next {
            Some(p) => schedule.push(p),
            None => break,
        }
        if schedule.len() > 16 {
            break;
        }
    }
    let mut shallow = false;
    if schedule.len() < 2 {
        // Degenerate two-generation schedule ending at the deepest
        // eligible rung, labeled shallow.
        let deepest = *eligible.last().unwrap();
        if deepest == schedule[0] {
            return Err(MdpError::ScheduleInfeasible);
        }
        schedule.push(deepest);
        shallow = true;
    }

    let mut generations: Vec<Generation> = Vec::with_capacity(schedule.len());
    for (idx, &p) in schedule.iter().enumerate() {
        let gen_no = idx + 1;
        let anchor_scale = qc.ladder.rungs[p];
        let child_rung = p + 1;
        let child_scale = qc.ladder.rungs[child_rung];
        let radius = exp2(-s * anchor_scale as f64);
        let cell = exp2(-(child_scale as f64));
        // Candidates: active at the child rung, cell meeting the set.
        let active = &coeffs.active[child_scale as usize];
        let survivors = &set.rung_sets[child_rung - base];
        let target = if idx == 0 {
            ceil(exp2(anchor_scale as f64 * (h - 6.0 * b))) as u64
        } else {
            let prev_scale = qc.ladder.rungs[schedule[idx - 1]] as f64;
            ceil(exp2((anchor_scale as f64 - s * prev_scale) * (h - 6.0 * b))) as u64
        };
        let candidates: Vec<u64> =
            active.iter().filter(|&k| survivors.contains(k)).collect();
        let mut balls: Vec<Ball> = Vec::new();
        if idx == 0 {
            let selected =
                select_disjoint(&candidates, cell, radius, 0.0, 1.0, target, child_scale);
            if (selected.len() as u64) < target {
                return Err(MdpError::Shortfall {
                    generation: gen_no,
                    parent: None,
                    needed: target,
                    found: selected.len() as u64,
                });
            }
            balls = selected;
        } else {
            let parents = &generations[idx - 1].balls;
            for parent in parents {
                let selected = select_disjoint(
                    &candidates,
                    cell,
                    radius,
                    parent.lo(),
                    parent.hi(),
                    target,
                    child_scale,
                );
                if (selected.len() as u64) < target {
                    return Err(MdpError::Shortfall {
                        generation: gen_no,
                        parent: Some(parent.k),
                        needed: target,
                        found: selected.len() as u64,
                    });
                }
                balls.extend(selected);
            }
        }
        generations.push(Generation { rung: p, scale: anchor_scale, per_parent: target, balls });
    }
    Ok(GenerationTree { s, b, h, shallow, generations })
}

/// Deterministic selection of up to `target` pairwise-disjoint balls with
/// centers `k * cell` contained in `[lo, hi)`: first the maximal
/// left-to-right disjoint sequence, then an evenly strided subset of it.
/// Taking the leftmost `target` instead would pile the whole mass into the
/// left end of the parent and collapse the certified exponent at coarse
/// scales; the strided subset keeps the selection spread while staying
/// reproducible.
fn select_disjoint(
    candidates: &[u64],
    cell: f64,
    radius: f64,
    lo: f64,
    hi: f64,
    target: u64,
    scale: u32,
) -> Vec<Ball> {
    let mut maximal: Vec<Ball> = Vec::new();
    let mut frontier = f64::NEG_INFINITY;
    for &k in candidates {
        let center = k as f64 * cell;
        if center - radius < lo || center + radius > hi {
            continue;
        }
        if center - radius >= frontier {
            maximal.push(Ball { center, radius, scale, k });
            frontier = center + radius;
        }
    }
    let found = maximal.len() as u64;
    if found <= target {
        return maximal;
    }
    (0..target).map(|i| maximal[(i * found / target) as usize]).collect()
}

/// Mass-distribution-principle certificate.
#[derive(Clone, Debug)]
pub struct MdpCertificate {
    /// Largest exponent such that `mu(D) <= c |D|^t` for every dyadic `D`
    /// down to `depth` (mu computed as the full mass of every
    /// deepest-generation ball meeting `D`, an upper bound).
    pub t_certified: f64,
    /// Constant of the certified bound; 2 bits of headroom over the
    /// exponent-tight scan absorb the straddling-ball factor.
    pub c: f64,
    pub depth: u32,
    pub worst_interval: DyadicInterval,
    pub log2_mass_denominator: f64,
    pub shallow: bool,
}

/// Scans every dyadic scale down to `depth`, taking per scale the maximal
/// number of deepest-generation balls meeting one cell. The certificate
/// exponent is the worst `(log2 den - log2 count)/tau`; the mandatory
/// re-scan then verifies `mu(D) <= 4 |D|^t` cell by cell.
pub fn certify(tree: &GenerationTree, depth: u32) -> Result<MdpCertificate, MdpError> {
    let balls = &tree.deepest().balls;
    if balls.is_empty() {
        return Err(MdpError::ZeroMass);
    }
    let log2_den = tree.log2_mass_denominator();
    let mut t = f64::INFINITY;
    let mut worst = DyadicInterval { j: 0, k: 0 };
    for tau in 1..=depth {
        let (max_count, argmax) = max_balls_in_cell(balls, tau);
        if max_count == 0 {
            continue;
        }
        let t_tau = (log2_den - log2_count(max_count)) / tau as f64;
        if t_tau < t {
            t = t_tau;
            worst = DyadicInterval { j: tau, k: argmax };
        }
    }
    if !t.is_finite() {
        return Err(MdpError::ZeroMass);
    }
    let cert = MdpCertificate {
        t_certified: t,
        c: 4.0,
        depth,
        worst_interval: worst,
        log2_mass_denominator: log2_den,
        shallow: tree.shallow,
    };
    if !verify_certificate(tree, &cert) {
        return Err(MdpError::SelfCheckFailed);
    }
    Ok(cert)
}

/// Independent re-scan of the certified inequality over every touched cell
/// at every scale down to the certificate depth.
pub fn verify_certificate(tree: &GenerationTree, cert: &MdpCertificate) -> bool {
    let balls = &tree.deepest().balls;
    let mass = exp2(-cert.log2_mass_denominator);
    for tau in 1..=cert.depth {
        let mut counts: alloc::collections::BTreeMap<u64, u64> = alloc::collections::BTreeMap::new();
        for ball in balls {
            let Some((first, last)) = cell_span(ball, tau) else { continue };
            for cell in first..=last {
                *counts.entry(cell).or_insert(0) += 1;
            }
        }
        let bound = cert.c * exp2(-(tau as f64) * cert.t_certified);
        for (_, n) in counts {
            if n as f64 * mass > bound * (1.0 + 1e-12) {
                return false;
            }
        }
    }
    true
}

/// Cells `[first, last]` at scale `tau` meeting the half-open ball.
fn cell_span(ball: &Ball, tau: u32) -> Option<(u64, u64)> {
    let scale = exp2(tau as f64);
    let lo = ball.lo();
    let hi = ball.hi();
    if hi <= 0.0 || lo >= 1.0 {
        return None;
    }
    let first = floor(lo * scale).max(0.0) as u64;
    let t = hi * scale;
    let last_f = if t == floor(t) { t - 1.0 } else { floor(t) };
    let max_cell = (1u64 << tau) - 1;
    let last = (last_f.max(0.0) as u64).min(max_cell);
    if first > last {
        return None;
    }
    Some((first, last))
}

/// Max number of balls meeting one cell at scale `tau`, plus an argmax
/// cell. Balls are disjoint and sorted, so only a ball's first and last
/// cells can be shared with neighbors; interior cells hold exactly one.
fn max_balls_in_cell(balls: &[Ball], tau: u32) -> (u64, u64) {
    let mut best = 0u64;
    let mut best_cell = 0u64;
    let mut cur_cell = u64::MAX;
    let mut acc = 0u64;
    let flush = |cell: u64, n: u64, best: &mut u64, best_cell: &mut u64| {
        if n > *best {
            *best = n;
            *best_cell = cell;
        }
    };
    for ball in balls {
        let Some((first, last)) = cell_span(ball, tau) else { continue };
        if first == cur_cell {
            acc += 1;
        } else {
            if cur_cell != u64::MAX {
                flush(cur_cell, acc, &mut best, &mut best_cell);
            }
            cur_cell = first;
            acc = 1;
        }
        if last > first {
            flush(cur_cell, acc, &mut best, &mut best_cell);
            // interior cells hold exactly this ball
            flush(first + 1, 1, &mut best, &mut best_cell);
            cur_cell = last;
            acc = 1;
        }
    }
    if cur_cell != u64::MAX {
        flush(cur_cell, acc, &mut best, &mut best_cell);
    }
    (best, best_cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitSet;
    use crate::cover::{build_cover_with, CoverConfig};
    use crate::lws::{synthesize, LwsParams};
    use crate::quasicantor::{build_ladder, prune, PruneMode};
    use crate::spec::FractalSpec;

    fn cfg() -> CoverConfig {
        CoverConfig::default()
    }

    #[test]
    fn uniform_full_tree_certifies_one() {
        let cover = build_cover_with(&FractalSpec::FullInterval, 12, &cfg()).unwrap();
        let tree = GenerationTree::from_uniform_cells(12, &cover.members);
        let cert = certify(&tree, 12).unwrap();
        assert!((cert.t_certified - 1.0).abs() <= 1e-9, "t = {}", cert.t_certified);
    }

    #[test]
    fn uniform_cantor_tree_certifies_half() {
        let spec = FractalSpec::digit_restricted(2, &[0, 3]).unwrap();
        let cover = build_cover_with(&spec, 16, &cfg()).unwrap();
        let tree = GenerationTree::from_uniform_cells(16, &cover.members);
        let cert = certify(&tree, 16).unwrap();
        assert!((cert.t_certified - 0.5).abs() <= 1e-6, "t = {}", cert.t_certified);
        // The binding cell is an even scale where mu(D) = |D|^(1/2) exactly.
        assert_eq!(cert.worst_interval.j % 2, 0);
    }

    #[test]
    fn zero_mass_rejected() {
        let empty = BitSet::new(16);
        let tree = GenerationTree::from_uniform_cells(4, &empty);
        assert!(matches!(certify(&tree, 6), Err(MdpError::ZeroMass)));
    }

    fn dense_coeffs(spec: &FractalSpec, h: f64, j_max: u32) -> LwsCoefficients {
        let mut c = synthesize(
            spec,
            &LwsParams { alpha: 1.0, eta: h * 0.9, h, j_max, seed: 5 },
            &cfg(),
        )
        .unwrap();
        for j in 0..=j_max {
            c.active[j as usize] =
                build_cover_with(spec, j, &cfg()).unwrap().members;
        }
        c
    }

    #[test]
    fn full_interval_construction_succeeds() {
        // s = 1 (q0 = 0): no contraction; with all coefficients active the
        // generations fill a dyadic subtree and masses split uniformly.
        let spec = FractalSpec::FullInterval;
        let ladder = build_ladder(6, 0.25, 18).unwrap();
        let qc = prune(&spec, &ladder, 1.0, 0.04, PruneMode::Recursive, &cfg()).unwrap();
        let coeffs = dense_coeffs(&spec, 1.0, 18);
        let tree = build_generations(&qc, &coeffs, 1.0, 0.04).unwrap();
        assert!(tree.generations.len() >= 2);
        // Deepest balls nest inside generation-1 balls.
        let gen1 = &tree.generations[0].balls;
        for ball in &tree.deepest().balls {
            assert!(
                gen1.iter().any(|p| ball.lo() >= p.lo() && ball.hi() <= p.hi()),
                "ball at {} not nested",
                ball.center
            );
        }
        // Disjointness within each generation.
        for g in &tree.generations {
            for w in g.balls.windows(2) {
                assert!(w[0].hi() <= w[1].lo() + 1e-15);
            }
        }
        // Mass conservation: count of deepest balls equals the denominator.
        assert_eq!(tree.deepest().balls.len() as u128, tree.mass_denominator());
        let cert = certify(&tree, 18).unwrap();
        assert!(cert.t_certified > 0.0);
    }

    #[test]
    fn cantor_construction_matches_targets() {
        let spec = FractalSpec::digit_restricted(2, &[0, 3]).unwrap();
        let ladder = build_ladder(8, 0.5, 24).unwrap();
        let qc = prune(&spec, &ladder, 0.5, 0.04, PruneMode::Recursive, &cfg()).unwrap();
        let coeffs = dense_coeffs(&spec, 0.5, 24);
        let tree = build_generations(&qc, &coeffs, 1.0, 0.05).unwrap();
        for (idx, g) in tree.generations.iter().enumerate() {
            let expected = if idx == 0 {
                ceil(exp2(g.scale as f64 * (0.5 - 0.3))) as u64
            } else {
                let prev = tree.generations[idx - 1].scale as f64;
                ceil(exp2((g.scale as f64 - prev) * (0.5 - 0.3))) as u64
            };
            assert_eq!(g.per_parent, expected, "generation {}", idx + 1);
        }
    }

    #[test]
    fn shortfall_names_the_node() {
        // Nearly empty coefficients: selection cannot meet its quota.
        let spec = FractalSpec::FullInterval;
        let ladder = build_ladder(6, 0.25, 18).unwrap();
        let qc = prune(&spec, &ladder, 1.0, 0.04, PruneMode::Recursive, &cfg()).unwrap();
        let mut coeffs = dense_coeffs(&spec, 1.0, 18);
        for j in 0..=18usize {
            coeffs.active[j] = BitSet::new(1u64 << j);
        }
        coeffs.active[18].insert(0); // a single active cell
        let err = build_generations(&qc, &coeffs, 1.0, 0.04).unwrap_err();
        assert!(matches!(err, MdpError::Shortfall { generation: 1, .. }), "{err:?}");
    }

    #[test]
    fn overlap_bound_holds_structurally() {
        let spec = FractalSpec::FullInterval;
        let ladder = build_ladder(6, 0.25, 18).unwrap();
        let qc = prune(&spec, &ladder, 1.0, 0.04, PruneMode::Recursive, &cfg()).unwrap();
        let coeffs = dense_coeffs(&spec, 1.0, 18);
        let tree = build_generations(&qc, &coeffs, 1.0, 0.04).unwrap();
        for g in &tree.generations {
            let radius = g.balls[0].radius;
            for tau in 1..=20u32 {
                if exp2(-(tau as f64)) >= radius {
                    continue; // bound applies to cells smaller than the radius
                }
                let (max_count, _) = max_balls_in_cell(&g.balls, tau);
                assert!(max_count <= 2, "tau {tau}: {max_count} balls in one cell");
            }
        }
    }

    #[test]
    fn incompatible_contraction_rejected() {
        let spec = FractalSpec::FullInterval;
        let ladder = build_ladder(6, 0.25, 18).unwrap();
        let qc = prune(&spec, &ladder, 1.0, 0.04, PruneMode::Recursive, &cfg()).unwrap();
        let coeffs = dense_coeffs(&spec, 1.0, 18);
        assert!(matches!(
            build_generations(&qc, &coeffs, 1.1, 0.04),
            Err(MdpError::IncompatibleContraction { .. })
        ));
    }
}
