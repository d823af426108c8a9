//! End-to-end acceptance suite. Each test prints one pass/fail line; the
//! statistical checks run over fixed seeds so every run is reproducible.
//!
//! Expected values marked by brute force below are computed by independent
//! oracles in this file (digit-string enumeration, exhaustive leader
//! search), never by the code paths under test.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use fractal_core::cover::{build_cover_with, CoverConfig};
use fractal_core::dimension::{audit_count_bounds, estimate_box_dim_strided};
use fractal_core::duplication::{audit_card_bounds, classify, DuplicationParams};
use fractal_core::dyadic::DyadicInterval;
use fractal_core::leaders::{
    audit_sup_bounds, compute_leaders, increasing_spectrum, limsup_cover, LeaderField,
    LimsupOptions, SpectrumOptions, SupportProfile,
};
use fractal_core::lws::{occupancy_exponent, synthesize, LwsCoefficients, LwsParams};
use fractal_core::mdp::{build_generations, certify, verify_certificate, GenerationTree};
use fractal_core::quasicantor::{
    audit as qc_audit, build_ladder, default_base_rung, extract_quasi_cantor, prune, PruneMode,
};
use fractal_core::spec::{FractalSpec, UnionComponent};

fn cfg() -> CoverConfig {
    CoverConfig::default()
}

fn cantor_half() -> FractalSpec {
    FractalSpec::digit_restricted(2, &[0, 3]).unwrap()
}

/// Oracle: enumerate every digit string of length ceil(j/m) over the
/// allowed set and collect the induced cell indices at scale j.
fn oracle_cover(m: u32, digits: &[u16], j: u32) -> BTreeSet<u64> {
    let n = j.div_ceil(m);
    let mut cells = BTreeSet::new();
    let mut stack: Vec<(u32, u64)> = vec![(0, 0)];
    while let Some((depth, value)) = stack.pop() {
        if depth == n {
            cells.insert(value >> (n * m - j));
            continue;
        }
        for &d in digits {
            stack.push((depth + 1, (value << m) | d as u64));
        }
    }
    cells
}

#[test]
fn criterion_01_cover_oracles() {
    let specs: [(u32, Vec<u16>); 3] = [(2, vec![0, 3]), (3, vec![0, 7]), (2, vec![0, 1, 3])];
    let started = std::time::Instant::now();
    for (m, digits) in &specs {
        let spec = FractalSpec::digit_restricted(*m, digits).unwrap();
        for j in 0..=24u32 {
            let cover = build_cover_with(&spec, j, &cfg()).unwrap();
            let oracle = oracle_cover(*m, digits, j);
            assert_eq!(
                cover.count(),
                oracle.len() as u64,
                "count mismatch at m={m} digits={digits:?} j={j}"
            );
            if j <= 16 {
                let got: BTreeSet<u64> = cover.members.iter().collect();
                assert_eq!(got, oracle, "member mismatch at m={m} j={j}");
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}, budget 10s");
    println!("PASS criterion 01: cover counts equal digit enumeration for all j <= 24 ({elapsed:?})");
}

#[test]
fn criterion_02_dimension_regression() {
    let specs: [(u32, Vec<u16>); 3] = [(2, vec![0, 3]), (3, vec![0, 7]), (2, vec![0, 1, 3])];
    for (m, digits) in &specs {
        let spec = FractalSpec::digit_restricted(*m, digits).unwrap();
        let expected = (digits.len() as f64).log2() / *m as f64;
        let est = estimate_box_dim_strided(&spec, 2 * m, 24, *m, &cfg()).unwrap();
        assert!(
            (est.h_hat - expected).abs() < 1e-12,
            "m={m}: h_hat {} vs {expected}",
            est.h_hat
        );
        let audit = audit_count_bounds(&spec, expected, 0.3, 2 * m, 24, &cfg()).unwrap();
        assert!(audit.all_pass(), "count-bound audit failed for m={m}");
    }
    println!("PASS criterion 02: block-scale regressions hit log2(#digits)/m within 1e-12; eps=0.3 bounds hold from j=2m");
}

#[test]
fn criterion_03_duplication_audit() {
    let specs: [(u32, Vec<u16>); 3] = [(2, vec![0, 3]), (3, vec![0, 7]), (2, vec![0, 1, 3])];
    for (m, digits) in &specs {
        let spec = FractalSpec::digit_restricted(*m, digits).unwrap();
        let h = (digits.len() as f64).log2() / *m as f64;
        let params = DuplicationParams::new(1.0, 0.1, h);
        for j in 8..=12u32 {
            let report = classify(&spec, j, &params, &cfg()).unwrap();
            let cover = build_cover_with(&spec, j, &cfg()).unwrap();
            assert_eq!(report.parent_total(), cover.count(), "partition broken at m={m} j={j}");
            let audit = audit_card_bounds(&report);
            assert!(audit.all_pass(), "cardinality audit failed at m={m} j={j}: {audit:?}");
        }
    }
    println!("PASS criterion 03: classes partition the covers and all cardinality bounds hold for j in [8,12]");
}

#[test]
fn criterion_04_quasicantor_exactness() {
    let started = std::time::Instant::now();
    let spec = cantor_half();
    let ladder = build_ladder(8, 0.5, 24).unwrap();
    let qc = prune(&spec, &ladder, 0.5, 0.04, PruneMode::Recursive, &cfg()).unwrap();
    for (i, survivors) in qc.t_inf.iter().enumerate() {
        assert_eq!(survivors, &qc.covers[i].members, "rung {i} lost cells");
    }
    assert!(qc.stabilized[0], "base rung did not stabilize");
    let base = default_base_rung(&qc).expect("no rung passes the count check");
    let audit = qc_audit(&qc, base);
    assert!(
        audit.worst_count_margin() >= 0.0,
        "count margin {}",
        audit.worst_count_margin()
    );
    assert!(
        audit.worst_reproduction_margin() >= 0.0,
        "reproduction margin {}",
        audit.worst_reproduction_margin()
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}, budget 30s");
    println!(
        "PASS criterion 04: survivors equal the covers; count margin {:.3}, reproduction margin {:.3} ({elapsed:?})",
        audit.worst_count_margin(),
        audit.worst_reproduction_margin()
    );
}

#[test]
fn criterion_05_quasicantor_selection() {
    // Union of a dim-1/4 and a dim-1/2 component on disjoint halves.
    let sparse = FractalSpec::digit_restricted(4, &[0, 15]).unwrap();
    let dense = cantor_half();
    let spec = FractalSpec::finite_union(vec![
        UnionComponent { carrier: DyadicInterval::new(1, 0).unwrap(), spec: sparse },
        UnionComponent { carrier: DyadicInterval::new(1, 1).unwrap(), spec: dense.clone() },
    ])
    .unwrap();
    let ladder = build_ladder(8, 0.5, 24).unwrap();
    let qc = prune(&spec, &ladder, 0.5, 0.02, PruneMode::Recursive, &cfg()).unwrap();
    let base = default_base_rung(&qc).unwrap_or(0);
    let set = extract_quasi_cantor(&qc, base);
    assert!(!set.is_empty(), "selection emptied the set");
    for (offset, cells) in set.rung_sets.iter().enumerate().skip(1) {
        let rung = base + offset;
        let scale = qc.ladder.rungs[rung];
        // Exact containment in the dense component's embedded cover.
        let inner = build_cover_with(&dense, scale - 1, &cfg()).unwrap();
        let half = 1u64 << (scale - 1);
        for k in cells.iter() {
            assert!(k >= half, "rung {rung}: cell {k} under the sparse half");
            assert!(
                inner.members.contains(k - half),
                "rung {rung}: cell {k} outside the dense component cover"
            );
        }
    }
    println!("PASS criterion 05: beyond the first rung every selected cell lies in the dim-1/2 component cover");
}

#[test]
fn criterion_06_occupancy_slopes() {
    let started = std::time::Instant::now();
    let seeds: Vec<u64> = (0..8).map(|i| 1000 + i).collect();
    let mut all_pass = true;
    let mut detail = String::new();
    for (spec, eta, h, j_max, tol) in [
        (FractalSpec::FullInterval, 0.5, 1.0, 20u32, 0.07),
        (cantor_half(), 0.25, 0.5, 22, 0.08),
    ] {
        let mut passed = 0;
        for &seed in &seeds {
            let run_start = std::time::Instant::now();
            let p = LwsParams { alpha: 1.0, eta, h, j_max, seed };
            let c = synthesize(&spec, &p, &cfg()).unwrap();
            let est = occupancy_exponent(&c).unwrap();
            if (est.slope - eta).abs() <= tol {
                passed += 1;
            }
            assert!(run_start.elapsed().as_secs() < 20, "single run over 20s");
        }
        detail.push_str(&format!(" eta={eta}: {passed}/8 in band;"));
        if passed < 7 {
            all_pass = false;
        }
    }
    assert!(all_pass, "occupancy slopes out of band:{detail}");
    println!("PASS criterion 06: occupancy slopes in band:{detail} ({:?})", started.elapsed());
}

/// Oracle: exhaustive leader search over every window cell at every scale.
fn oracle_leaders(coeffs: &LwsCoefficients, j_max: u32) -> LeaderField {
    let mut rows = Vec::new();
    for j in 0..=j_max {
        let n = 1u64 << j;
        let mut row = vec![0.0f64; n as usize];
        for k in 0..n {
            let mut best = 0.0f64;
            for jp in j..=j_max {
                let shift = jp - j;
                let lo = k.saturating_sub(1) << shift;
                let hi = ((k + 2) << shift).min(1u64 << jp);
                for kp in lo..hi {
                    best = best.max(coeffs.magnitude_at(jp, kp));
                }
            }
            row[k as usize] = best;
        }
        rows.push(row);
    }
    LeaderField::from_rows(rows)
}

#[test]
fn criterion_07_leader_oracle() {
    for seed in [11u64, 57, 123, 999] {
        let p = LwsParams { alpha: 1.0, eta: 0.5, h: 1.0, j_max: 12, seed };
        let c = synthesize(&FractalSpec::FullInterval, &p, &cfg()).unwrap();
        let fast = compute_leaders(&c, 12);
        let slow = oracle_leaders(&c, 12);
        for j in 0..=12u32 {
            assert_eq!(fast.row(j), slow.row(j), "seed {seed} scale {j}");
        }
    }
    println!("PASS criterion 07: leaders equal the exhaustive sup for every cell at j_max=12 on 4 seeds");
}

#[test]
fn criterion_08_spectrum_reproduction() {
    let seeds: Vec<u64> = (0..8).map(|i| 1000 + i).collect();
    let opts = SpectrumOptions::default();

    // (a) full interval, target slope eta/alpha = 0.5, tolerance 0.10.
    let grid_a = [1.0, 1.2, 1.4, 1.6, 1.8];
    let support_a = SupportProfile::from_spec(&FractalSpec::FullInterval, 18, &cfg()).unwrap();
    let mut sums_a = vec![0.0; grid_a.len()];
    for &seed in &seeds {
        let p = LwsParams { alpha: 1.0, eta: 0.5, h: 1.0, j_max: 18, seed };
        let c = synthesize(&FractalSpec::FullInterval, &p, &cfg()).unwrap();
        let field = compute_leaders(&c, 18);
        let est = increasing_spectrum(&field, &grid_a, &opts, Some(&support_a));
        for (i, level) in est.levels.iter().enumerate() {
            sums_a[i] += level.d_leq;
        }
    }
    let mut worst_a = 0.0f64;
    for (i, &h) in grid_a.iter().enumerate() {
        let mean = sums_a[i] / seeds.len() as f64;
        worst_a = worst_a.max((mean - 0.5 * h).abs());
    }
    assert!(worst_a <= 0.10, "full-interval spectrum off by {worst_a:.4}");

    // (b) dimension-1/2 support, target slope 0.25, tolerance 0.12.
    let spec_b = cantor_half();
    let grid_b = [1.0, 1.4, 1.8];
    let support_b = SupportProfile::from_spec(&spec_b, 20, &cfg()).unwrap();
    let mut sums_b = vec![0.0; grid_b.len()];
    for &seed in &seeds {
        let p = LwsParams { alpha: 1.0, eta: 0.25, h: 0.5, j_max: 20, seed };
        let c = synthesize(&spec_b, &p, &cfg()).unwrap();
        let field = compute_leaders(&c, 20);
        let est = increasing_spectrum(&field, &grid_b, &opts, Some(&support_b));
        for (i, level) in est.levels.iter().enumerate() {
            sums_b[i] += level.d_leq;
        }
    }
    let mut worst_b = 0.0f64;
    for (i, &h) in grid_b.iter().enumerate() {
        let mean = sums_b[i] / seeds.len() as f64;
        worst_b = worst_b.max((mean - 0.25 * h).abs());
    }
    assert!(worst_b <= 0.12, "restricted-support spectrum off by {worst_b:.4}");
    println!(
        "PASS criterion 08: seed-averaged spectrum errors {worst_a:.3} (<=0.10) and {worst_b:.3} (<=0.12)"
    );
}

#[test]
fn criterion_09_limsup_dimension() {
    let seeds: Vec<u64> = (0..8).map(|i| 1000 + i).collect();
    let deltas = [0.6, 0.75, 0.9];
    let mut means = Vec::new();
    for &delta in &deltas {
        let mut total = 0.0;
        for &seed in &seeds {
            let p = LwsParams { alpha: 1.0, eta: 0.5, h: 1.0, j_max: 20, seed };
            let c = synthesize(&FractalSpec::FullInterval, &p, &cfg()).unwrap();
            let est = limsup_cover(&c, delta, 8, 20, &LimsupOptions::default());
            total += est.dim_hat;
        }
        means.push(total / seeds.len() as f64);
    }
    let mut detail = String::new();
    for (i, &delta) in deltas.iter().enumerate() {
        let target = 0.5 / delta;
        let err = (means[i] - target).abs();
        detail.push_str(&format!(" delta={delta}: {:.3} vs {:.3};", means[i], target));
        assert!(err <= 0.10, "delta={delta}: mean {} vs target {target}", means[i]);
    }
    for w in means.windows(2) {
        assert!(w[1] <= w[0] + 0.02, "estimates not monotone in delta: {means:?}");
    }
    println!("PASS criterion 09: limsup dimensions{detail} monotone in delta");
}

#[test]
fn criterion_10_sup_bound_audit() {
    // Configuration of 08(b) with slack n = 4: 1 + beta = 3 = (1+b)^2.
    let spec = cantor_half();
    let b = 3.0f64.sqrt() - 1.0;
    let ladder = build_ladder(4, b, 20).unwrap();
    let qc = prune(&spec, &ladder, 0.5, 0.05, PruneMode::Recursive, &cfg()).unwrap();
    let mut total_fraction = 0.0;
    let mut evaluable_rungs = 0;
    for seed in 0..16u64 {
        let p = LwsParams { alpha: 1.0, eta: 0.25, h: 0.5, j_max: 20, seed: 2000 + seed };
        let c = synthesize(&spec, &p, &cfg()).unwrap();
        let audit = audit_sup_bounds(&c, &qc, 4).unwrap();
        evaluable_rungs = audit.rungs.iter().filter(|r| r.evaluable).count();
        assert!(evaluable_rungs >= 2, "need at least two fully observable rungs");
        total_fraction += audit.worst_evaluable_fraction();
    }
    let mean_fraction = total_fraction / 16.0;
    assert!(mean_fraction <= 0.05, "violating fraction {mean_fraction}");
    println!(
        "PASS criterion 10: mean violating fraction {mean_fraction:.4} over 16 seeds on {evaluable_rungs} observable rungs"
    );
}

#[test]
fn criterion_11_mdp_certificates() {
    // Uniform full tree certifies exponent 1.
    let full = build_cover_with(&FractalSpec::FullInterval, 12, &cfg()).unwrap();
    let tree = GenerationTree::from_uniform_cells(12, &full.members);
    let cert = certify(&tree, 12).unwrap();
    assert!((cert.t_certified - 1.0).abs() <= 1e-9, "full tree t = {}", cert.t_certified);

    // Uniform tree on the dim-1/2 cover certifies exponent 1/2.
    let spec = cantor_half();
    let cover = build_cover_with(&spec, 16, &cfg()).unwrap();
    let tree = GenerationTree::from_uniform_cells(16, &cover.members);
    let cert = certify(&tree, 16).unwrap();
    assert!((cert.t_certified - 0.5).abs() <= 1e-6, "cover tree t = {}", cert.t_certified);

    // Generation construction inside a pruned dense series.
    // Contraction s = (1+b)^1 on a ladder of ratio b.
    let b = 0.04;
    let s = 1.0 + b;
    let h = 1.0;
    let target = (h - 7.0 * b) / (s * (1.0 + b)) - 0.05;
    let ladder = build_ladder(8, b, 20).unwrap();
    let qc = prune(&FractalSpec::FullInterval, &ladder, h, 0.0072, PruneMode::Recursive, &cfg())
        .unwrap();
    let mut successes = 0;
    let mut worst_t = f64::INFINITY;
    for seed in 0..16u64 {
        let p = LwsParams { alpha: 1.0, eta: 0.9, h, j_max: 20, seed: 3000 + seed };
        let coeffs = synthesize(&FractalSpec::FullInterval, &p, &cfg()).unwrap();
        match build_generations(&qc, &coeffs, s, b) {
            Ok(tree) => {
                let depth = (s * tree.deepest().scale as f64).ceil() as u32;
                let cert = certify(&tree, depth).unwrap();
                assert!(verify_certificate(&tree, &cert), "self-check failed at seed {seed}");
                assert!(
                    cert.t_certified >= target,
                    "seed {seed}: t {} below target {target}",
                    cert.t_certified
                );
                successes += 1;
                worst_t = worst_t.min(cert.t_certified);
            }
            Err(e) => println!("  note: construction shortfall at seed {seed}: {e}"),
        }
    }
    assert!(successes > 0, "construction never succeeded");
    println!(
        "PASS criterion 11: exact trees at 1.0 and 0.5; constructed {successes}/16 trees, worst t {worst_t:.4} >= {target:.4}"
    );
}

fn run_binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fractal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn artifact_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| {
            (e.file_name().to_string_lossy().to_string(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_12_determinism_across_threads() {
    let tmp = tempfile::tempdir().unwrap();
    for preset in ["cantor-half", "jaffard-unit", "mdp-certify"] {
        let dir1 = tmp.path().join(format!("{preset}-t1"));
        let dir4 = tmp.path().join(format!("{preset}-t4"));
        for (threads, dir) in [("1", &dir1), ("4", &dir4)] {
            let out = run_binary(&[
                "run",
                preset,
                "--seed",
                "7",
                "--threads",
                threads,
                "--out-dir",
                dir.to_str().unwrap(),
            ]);
            assert!(out.status.success(), "{preset} with {threads} threads: {out:?}");
        }
        let a = artifact_bytes(&dir1);
        let b = artifact_bytes(&dir4);
        assert_eq!(a.len(), b.len(), "{preset}: artifact sets differ");
        for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
            assert_eq!(name_a, name_b, "{preset}: artifact names differ");
            assert_eq!(bytes_a, bytes_b, "{preset}: {name_a} differs between thread counts");
        }
    }
    println!("PASS criterion 12: artifacts byte-identical for threads 1 and 4 on three presets");
}
