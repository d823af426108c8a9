//! Executes scenario steps against the core library and renders their
//! artifacts.

use anyhow::{anyhow, bail, Result};
use fractal_core::cover::{build_cover_with, CoverConfig};
use fractal_core::dimension::{audit_count_bounds, estimate_box_dim_strided};
use fractal_core::duplication::{audit_card_bounds, classify, DuplicationParams};
use fractal_core::leaders::{
    compute_leaders, estimate_holder, increasing_spectrum, limsup_cover, LimsupOptions,
    SpectrumOptions, SupportProfile,
};
use fractal_core::lws::{occupancy_exponent, render_haar, synthesize, LwsCoefficients, LwsParams};
use fractal_core::mdp::{build_generations, certify, verify_certificate};
use fractal_core::quasicantor::{
    audit as qc_audit, build_ladder, default_base_rung, extract_quasi_cantor, prune, PruneMode,
};
use fractal_core::rng::derive_seed;
use fractal_core::spec::FractalSpec;
use serde_json::json;
use std::fmt::Write as _;

use crate::artifacts::{
    coefficients_from_csv, coefficients_to_csv, cover_to_bits, cover_to_csv, cover_to_rle,
    plot_data, Artifact,
};
use crate::steps::*;

/// Outcome of one executed step.
pub struct StepOutcome {
    pub artifacts: Vec<Artifact>,
    /// None when the step carries no audit; Some(pass) otherwise.
    pub audit: Option<bool>,
    pub summary: String,
}

pub struct StepContext<'a> {
    pub spec: &'a FractalSpec,
    pub config: CoverConfig,
    pub seed: u64,
    pub index: usize,
    /// Output format for tabular artifacts: "csv" or "json".
    pub format: &'a str,
}

impl StepContext<'_> {
    fn name(&self, suffix: &str) -> String {
        format!("{:02}-{suffix}", self.index)
    }

    fn step_seed(&self, explicit: Option<u64>, op: &str) -> u64 {
        explicit.unwrap_or_else(|| derive_seed(self.seed, &format!("step-{}-{op}", self.index)))
    }

    /// Renders rows either as CSV or as a JSON array of objects.
    fn table(
        &self,
        stem: &str,
        columns: &[&str],
        rows: &[Vec<String>],
    ) -> Result<Artifact> {
        if self.format == "json" {
            let objects: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    let mut map = serde_json::Map::new();
                    for (c, v) in columns.iter().zip(row) {
                        map.insert(c.to_string(), json!(v));
                    }
                    serde_json::Value::Object(map)
                })
                .collect();
            Artifact::json(self.name(&format!("{stem}.json")), &objects)
        } else {
            let mut out = String::new();
            let _ = writeln!(out, "{}", columns.join(","));
            for row in rows {
                let _ = writeln!(out, "{}", row.join(","));
            }
            Ok(Artifact::text(self.name(&format!("{stem}.csv")), out))
        }
    }
}

pub fn run_step(step: &StepConfig, ctx: &StepContext) -> Result<StepOutcome> {
    match step {
        StepConfig::Cover(s) => run_cover(s, ctx),
        StepConfig::Dims(s) => run_dims(s, ctx),
        StepConfig::Classify(s) => run_classify(s, ctx),
        StepConfig::Quasicantor(s) => run_quasicantor(s, ctx),
        StepConfig::Lws(s) => run_lws(s, ctx),
        StepConfig::Leaders(s) => run_leaders(s, ctx),
        StepConfig::Spectrum(s) => run_spectrum(s, ctx),
        StepConfig::Limsup(s) => run_limsup(s, ctx),
        StepConfig::Mdp(s) => run_mdp(s, ctx),
    }
}

fn run_cover(s: &CoverStep, ctx: &StepContext) -> Result<StepOutcome> {
    let cover = build_cover_with(ctx.spec, s.j, &ctx.config)?;
    let artifact = match s.emit.as_str() {
        "rle" => Artifact::text(ctx.name("cover.rle"), cover_to_rle(&cover)),
        "bits" => Artifact { name: ctx.name("cover.bits"), bytes: cover_to_bits(&cover) },
        "csv" => Artifact::text(ctx.name("cover.csv"), cover_to_csv(&cover)),
        other => bail!("unknown cover format {other:?} (expected rle, bits or csv)"),
    };
    let summary = format!("cover j={} count={} ({:?})", s.j, cover.count(), cover.exactness);
    Ok(StepOutcome { artifacts: vec![artifact], audit: None, summary })
}

fn run_dims(s: &DimsStep, ctx: &StepContext) -> Result<StepOutcome> {
    let est = estimate_box_dim_strided(ctx.spec, s.j_min, s.j_max, s.stride, &ctx.config)?;
    let audit = match (s.audit_h, s.audit_eps) {
        (Some(h), Some(eps)) => {
            Some(audit_count_bounds(ctx.spec, h, eps, s.j_min, s.j_max, &ctx.config)?)
        }
        (None, None) => None,
        _ => bail!("audit-h and audit-eps must be given together"),
    };
    let mut rows = Vec::new();
    for &(j, count) in &est.per_level_counts {
        let log2count = (count as f64).log2();
        let (lo, hi, pass) = match &audit {
            Some(report) => match report.rows.iter().find(|r| r.j == j) {
                Some(r) => (
                    format!("{}", r.bound_low),
                    format!("{}", r.bound_high),
                    format!("{}", r.pass()),
                ),
                None => (String::new(), String::new(), String::new()),
            },
            None => (String::new(), String::new(), String::new()),
        };
        rows.push(vec![
            j.to_string(),
            count.to_string(),
            log2count.to_string(),
            lo,
            hi,
            pass,
        ]);
    }
    let table = ctx.table(
        "dims",
        &["j", "count", "log2count", "bound_low", "bound_high", "pass"],
        &rows,
    )?;
    let mut artifacts = vec![table];
    let mut audit_pass = None;
    let mut summary = format!(
        "dims j=[{},{}] stride={} h_hat={:.6} max_ratio={:.6}",
        s.j_min, s.j_max, s.stride, est.h_hat, est.h_max_ratio
    );
    if let Some(report) = &audit {
        let pass = report.all_pass();
        audit_pass = Some(pass);
        artifacts.push(Artifact::json(
            ctx.name("dims-audit.json"),
            &json!({
                "h": report.h,
                "eps": report.eps,
                "all_pass": pass,
                "first_all_pass": report.first_all_pass,
            }),
        )?);
        let _ = write!(summary, " audit={}", if pass { "pass" } else { "fail" });
    }
    artifacts.push(Artifact::json(
        ctx.name("dims-estimate.json"),
        &json!({
            "h_hat": est.h_hat,
            "h_max_ratio": est.h_max_ratio,
            "j_min": est.j_range.0,
            "j_max": est.j_range.1,
            "residual": est.residual,
        }),
    )?);
    Ok(StepOutcome { artifacts, audit: audit_pass, summary })
}

fn run_classify(s: &ClassifyStep, ctx: &StepContext) -> Result<StepOutcome> {
    let params = DuplicationParams::new(s.beta, s.eps, s.dim);
    let report = classify(ctx.spec, s.j, &params, &ctx.config)?;
    let audit = audit_card_bounds(&report);
    let rows: Vec<Vec<String>> = report
        .parents
        .iter()
        .map(|p| {
            vec![
                report.j.to_string(),
                p.k.to_string(),
                p.child_count.to_string(),
                p.class.label().to_string(),
            ]
        })
        .collect();
    let table = ctx.table("classify", &["j", "k", "child_count", "class"], &rows)?;
    let summary_json = json!({
        "j": report.j,
        "j_child": report.j_child,
        "slow": report.slow,
        "normal": report.normal,
        "fast": report.fast,
        "slow_children": report.slow_children,
        "audit": {
            "normal_lower": { "pass": audit.normal_lower.pass, "margin_log2": audit.normal_lower.margin_log2 },
            "normal_upper": { "pass": audit.normal_upper.pass, "margin_log2": audit.normal_upper.margin_log2 },
            "fast_upper": { "pass": audit.fast_upper.pass, "margin_log2": audit.fast_upper.margin_log2 },
            "slow_children_upper": { "pass": audit.slow_children_upper.pass, "margin_log2": audit.slow_children_upper.margin_log2 },
        },
    });
    let artifacts = vec![table, Artifact::json(ctx.name("classify-summary.json"), &summary_json)?];
    let pass = audit.all_pass();
    let summary = format!(
        "classify j={} -> {}: SD={} ND={} FD={} audit={}",
        report.j,
        report.j_child,
        report.slow,
        report.normal,
        report.fast,
        if pass { "pass" } else { "fail" }
    );
    Ok(StepOutcome { artifacts, audit: Some(pass), summary })
}

fn prune_mode(mode: &Option<String>) -> Result<PruneMode> {
    match mode.as_deref() {
        None | Some("recursive") => Ok(PruneMode::Recursive),
        Some("fixed-point") => Ok(PruneMode::FixedPoint),
        Some(other) => bail!("unknown prune mode {other:?}"),
    }
}

fn run_quasicantor(s: &QuasicantorStep, ctx: &StepContext) -> Result<StepOutcome> {
    let ladder = build_ladder(s.base_scale, s.ratio, s.max_scale.min(ctx.config.max_scale))?;
    let qc = prune(ctx.spec, &ladder, s.dim, s.eps, prune_mode(&s.mode)?, &ctx.config)?;
    let base = match s.base_rung {
        Some(r) => {
            if r > qc.ladder.last() {
                bail!("base rung {r} outside the ladder");
            }
            r
        }
        None => default_base_rung(&qc).unwrap_or(0),
    };
    let set = extract_quasi_cantor(&qc, base);
    let audit = qc_audit(&qc, base);

    let mut artifacts = Vec::new();
    for (i, survivors) in qc.t_inf.iter().enumerate() {
        let cover = fractal_core::cover::LevelCover {
            j: qc.ladder.rungs[i],
            members: survivors.clone(),
            exactness: qc.covers[i].exactness,
        };
        artifacts.push(Artifact::text(
            ctx.name(&format!("survivors-rung{i}.rle")),
            cover_to_rle(&cover),
        ));
    }
    let audit_json = json!({
        "rungs": qc.ladder.rungs,
        "had_collisions": qc.ladder.had_collisions,
        "stabilized": qc.stabilized,
        "base_rung": base,
        "kernel_empty": set.is_empty(),
        "kernel_counts": set.rung_sets.iter().map(|s| s.count()).collect::<Vec<_>>(),
        "rung_counts": audit.rung_counts.iter().map(|c| json!({
            "rung": c.rung,
            "scale": c.scale,
            "count": c.count,
            "low_margin": c.low_margin,
            "high_margin": c.high_margin,
        })).collect::<Vec<_>>(),
        "reproduction": audit.reproduction.iter().map(|r| json!({
            "from_rung": r.from_rung,
            "to_rung": r.to_rung,
            "threshold_exponent": r.threshold_exponent,
            "checked": r.checked,
            "worst_margin": r.worst_margin,
            "violations": r.violations.len(),
        })).collect::<Vec<_>>(),
        "pass": audit.pass(),
    });
    artifacts.push(Artifact::json(ctx.name("quasicantor-audit.json"), &audit_json)?);
    let pass = audit.pass() && !set.is_empty();
    let summary = format!(
        "quasicantor rungs={:?} base={} worst_count_margin={:.4} worst_repro_margin={:.4} audit={}",
        qc.ladder.rungs,
        base,
        audit.worst_count_margin(),
        audit.worst_reproduction_margin(),
        if pass { "pass" } else { "fail" }
    );
    Ok(StepOutcome { artifacts, audit: Some(pass), summary })
}

fn synthesize_for(
    ctx: &StepContext,
    alpha: f64,
    eta: f64,
    dim: f64,
    j_max: u32,
    seed: Option<u64>,
    op: &str,
) -> Result<(LwsParams, LwsCoefficients)> {
    let params = LwsParams { alpha, eta, h: dim, j_max, seed: ctx.step_seed(seed, op) };
    let coeffs = synthesize(ctx.spec, &params, &ctx.config).map_err(|e| anyhow!("{e}"))?;
    Ok((params, coeffs))
}

/// Coefficients either re-imported from an exported file (whose header
/// must agree with the declared parameters) or synthesized fresh.
#[allow(clippy::too_many_arguments)]
fn coefficients_for(
    ctx: &StepContext,
    file: &Option<String>,
    alpha: f64,
    eta: f64,
    dim: f64,
    j_max: u32,
    seed: Option<u64>,
    op: &str,
) -> Result<(LwsParams, LwsCoefficients)> {
    match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow!("cannot read coefficients {path}: {e}"))?;
            let coeffs = coefficients_from_csv(&text)?;
            let p = coeffs.params;
            if p.alpha != alpha || p.eta != eta || p.h != dim || p.j_max != j_max {
                bail!(
                    "coefficient file parameters (alpha={} eta={} dim={} j-max={}) do not match the step",
                    p.alpha, p.eta, p.h, p.j_max
                );
            }
            Ok((p, coeffs))
        }
        None => synthesize_for(ctx, alpha, eta, dim, j_max, seed, op),
    }
}

fn run_lws(s: &LwsStep, ctx: &StepContext) -> Result<StepOutcome> {
    let (params, coeffs) = synthesize_for(ctx, s.alpha, s.eta, s.dim, s.j_max, s.seed, "lws")?;
    let mut artifacts =
        vec![Artifact::text(ctx.name("coefficients.csv"), coefficients_to_csv(&coeffs))];
    let mut summary = format!(
        "lws alpha={} eta={} j_max={} seed={} actives={}",
        params.alpha,
        params.eta,
        params.j_max,
        params.seed,
        (0..=params.j_max).map(|j| coeffs.active_count(j)).sum::<u64>()
    );
    if s.occupancy {
        let est = occupancy_exponent(&coeffs).map_err(|e| anyhow!("{e}"))?;
        artifacts.push(Artifact::json(
            ctx.name("occupancy.json"),
            &json!({
                "slope": est.slope,
                "window": est.window,
                "per_scale_counts": est.per_scale_counts,
            }),
        )?);
        let _ = write!(summary, " occupancy={:.4}", est.slope);
    }
    if let Some(depth) = s.render_depth {
        let samples = render_haar(&coeffs, depth).map_err(|e| anyhow!("{e}"))?;
        let step = (depth as f64).exp2().recip();
        let points = samples.iter().enumerate().map(|(i, &v)| (i as f64 * step, v));
        artifacts.push(Artifact::text(ctx.name("render.dat"), plot_data(points)));
    }
    Ok(StepOutcome { artifacts, audit: None, summary })
}

fn run_leaders(s: &LeadersStep, ctx: &StepContext) -> Result<StepOutcome> {
    let (params, coeffs) = coefficients_for(
        ctx,
        &s.coefficients,
        s.alpha,
        s.eta,
        s.dim,
        s.j_max,
        s.seed,
        "leaders",
    )?;
    let field = compute_leaders(&coeffs, params.j_max);
    let mut artifacts = Vec::new();
    for &j in &s.emit_scales {
        if j > field.j_max {
            bail!("emit scale {j} beyond field depth {}", field.j_max);
        }
        let rows: Vec<Vec<String>> = field
            .row(j)
            .iter()
            .enumerate()
            .map(|(k, &d)| vec![j.to_string(), k.to_string(), d.to_string()])
            .collect();
        artifacts.push(ctx.table(&format!("leaders-j{j}"), &["j", "k", "leader"], &rows)?);
    }
    let mut summary = format!("leaders j_max={} seed={}", field.j_max, params.seed);
    if s.holder {
        let holder = estimate_holder(&field, s.holder_j_min, s.h_cap);
        let step = (field.j_max as f64).exp2().recip();
        let points =
            holder.values.iter().enumerate().map(|(k, &h)| (k as f64 * step, h));
        artifacts.push(Artifact::text(ctx.name("holder.dat"), plot_data(points)));
        let capped = holder.all_zero.count();
        let _ = write!(summary, " holder_cells={} capped={}", holder.values.len(), capped);
    }
    Ok(StepOutcome { artifacts, audit: None, summary })
}

fn run_spectrum(s: &SpectrumStep, ctx: &StepContext) -> Result<StepOutcome> {
    let (params, coeffs) = coefficients_for(
        ctx,
        &s.coefficients,
        s.alpha,
        s.eta,
        s.dim,
        s.j_max,
        s.seed,
        "spectrum",
    )?;
    let field = compute_leaders(&coeffs, params.j_max);
    let mut options = SpectrumOptions::default();
    if let Some(g) = s.gamma {
        options.gamma = g;
    }
    let support = SupportProfile::from_spec(ctx.spec, params.j_max, &ctx.config)?;
    let est = increasing_spectrum(&field, &s.h_grid, &options, Some(&support));
    let rows: Vec<Vec<String>> = est
        .levels
        .iter()
        .map(|l| {
            vec![
                l.h.to_string(),
                if l.d_leq.is_finite() { l.d_leq.to_string() } else { "-inf".to_string() },
                l.window.map_or(String::new(), |w| w.0.to_string()),
                l.window.map_or(String::new(), |w| w.1.to_string()),
                if l.residual.is_nan() { String::new() } else { l.residual.to_string() },
            ]
        })
        .collect();
    let table =
        ctx.table("spectrum", &["h", "d_leq", "window_lo", "window_hi", "residual"], &rows)?;
    let points = est
        .levels
        .iter()
        .filter(|l| l.d_leq.is_finite())
        .map(|l| (l.h, l.d_leq));
    let plot = Artifact::text(ctx.name("spectrum.dat"), plot_data(points));
    let summary = format!(
        "spectrum seed={} levels={}",
        params.seed,
        est.levels
            .iter()
            .map(|l| format!("{}:{:.3}", l.h, l.d_leq))
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(StepOutcome { artifacts: vec![table, plot], audit: None, summary })
}

fn run_limsup(s: &LimsupStep, ctx: &StepContext) -> Result<StepOutcome> {
    if !(s.delta > 0.0 && s.delta <= 1.0) {
        bail!("delta must lie in (0, 1]");
    }
    if s.tail_start >= s.j_max {
        bail!("tail start must be below j-max");
    }
    if s.resolution > ctx.config.max_scale {
        bail!("resolution {} beyond maximum scale {}", s.resolution, ctx.config.max_scale);
    }
    let (params, coeffs) = coefficients_for(
        ctx,
        &s.coefficients,
        s.alpha,
        s.eta,
        s.dim,
        s.j_max,
        s.seed,
        "limsup",
    )?;
    let est = limsup_cover(&coeffs, s.delta, s.tail_start, s.resolution, &LimsupOptions::default());
    let rows: Vec<Vec<String>> = est
        .counts
        .iter()
        .map(|&(rho, n)| vec![rho.to_string(), n.to_string()])
        .collect();
    let profile = ctx.table("limsup-profile", &["resolution", "boxes"], &rows)?;
    let tails: Vec<Vec<String>> = est
        .tail_counts
        .iter()
        .map(|&(j1, n)| vec![j1.to_string(), n.to_string()])
        .collect();
    let tails_table = ctx.table("limsup-tails", &["tail_start", "boxes"], &tails)?;
    let estimate = Artifact::json(
        ctx.name("limsup-estimate.json"),
        &json!({
            "delta": est.delta,
            "tail_start": est.tail_start,
            "resolution": est.resolution,
            "dim_hat": if est.dim_hat.is_finite() { json!(est.dim_hat) } else { json!("-inf") },
            "window": est.window,
            "seed": params.seed,
        }),
    )?;
    let summary = format!(
        "limsup delta={} tail_start={} dim_hat={:.4}",
        s.delta, s.tail_start, est.dim_hat
    );
    Ok(StepOutcome { artifacts: vec![profile, tails_table, estimate], audit: None, summary })
}

fn run_mdp(s: &MdpStep, ctx: &StepContext) -> Result<StepOutcome> {
    let ladder = build_ladder(s.base_scale, s.ratio, s.j_max.min(ctx.config.max_scale))?;
    let qc = prune(ctx.spec, &ladder, s.dim, s.eps, PruneMode::Recursive, &ctx.config)?;
    let (params, coeffs) = synthesize_for(ctx, s.alpha, s.eta, s.dim, s.j_max, s.seed, "mdp")?;
    let contraction = (1.0 + s.ratio).powi(s.q0 as i32);
    let tree = match build_generations(&qc, &coeffs, contraction, s.b) {
        Ok(tree) => tree,
        Err(e) => {
            // Shortfalls are reported outcomes, not run errors.
            let report = Artifact::json(
                ctx.name("mdp-certificate.json"),
                &json!({ "constructed": false, "reason": format!("{e}"), "seed": params.seed }),
            )?;
            let summary = format!("mdp construction failed: {e}");
            return Ok(StepOutcome { artifacts: vec![report], audit: Some(false), summary });
        }
    };
    let denominator = tree.mass_denominator();
    let mut running_denominator: u128 = 1;
    let mut generation_entries = Vec::new();
    for g in &tree.generations {
        running_denominator *= g.per_parent as u128;
        generation_entries.push(json!({
            "rung": g.rung,
            "scale": g.scale,
            "per_parent": g.per_parent,
            "mass": format!("1/{running_denominator}"),
            "balls": g.balls.iter().map(|b| json!({
                "k": b.k,
                "grid_scale": b.scale,
                "center": b.center,
                "radius": b.radius,
            })).collect::<Vec<_>>(),
        }));
    }
    let generations_json = json!({
        "contraction": tree.s,
        "b": tree.b,
        "shallow": tree.shallow,
        "mass_denominator": denominator.to_string(),
        "generations": generation_entries,
    });
    let depth = s.depth.unwrap_or_else(|| {
        ((contraction * tree.deepest().scale as f64).ceil() as u32).min(ctx.config.max_scale)
    });
    let cert = certify(&tree, depth).map_err(|e| anyhow!("{e}"))?;
    let self_check = verify_certificate(&tree, &cert);
    let cert_json = json!({
        "constructed": true,
        "t_certified": cert.t_certified,
        "c": cert.c,
        "depth": cert.depth,
        "worst_interval": { "scale": cert.worst_interval.j, "index": cert.worst_interval.k },
        "log2_mass_denominator": cert.log2_mass_denominator,
        "shallow": cert.shallow,
        "self_check": self_check,
        "seed": params.seed,
    });
    let artifacts = vec![
        Artifact::json(ctx.name("mdp-generations.json"), &generations_json)?,
        Artifact::json(ctx.name("mdp-certificate.json"), &cert_json)?,
    ];
    let summary = format!(
        "mdp generations={} t_certified={:.4}{} self_check={}",
        tree.generations.len(),
        cert.t_certified,
        if cert.shallow { " (shallow)" } else { "" },
        self_check
    );
    Ok(StepOutcome { artifacts, audit: Some(self_check), summary })
}
