//! Scenario loading, preset registry, overrides and the run loop.

use anyhow::{anyhow, bail, Context, Result};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::artifacts::{write_artifacts, Artifact, Manifest, ManifestArtifact, ManifestStep};
use crate::runner::{run_step, StepContext};
use crate::steps::ScenarioConfig;
use fractal_core::cover::CoverConfig;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub content: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "jaffard-unit",
        description: "lacunary series on [0,1]: occupancy and spectrum on the linear segment",
        content: include_str!("../presets/jaffard-unit.toml"),
    },
    Preset {
        name: "cantor-half",
        description: "dimension-1/2 digit set: covers, regression, count-bound audit",
        content: include_str!("../presets/cantor-half.toml"),
    },
    Preset {
        name: "union-kn",
        description: "disjoint union of rising dimensions: pruning keeps the densest part",
        content: include_str!("../presets/union-kn.toml"),
    },
    Preset {
        name: "ifs-overlap-outer",
        description: "overlapping IFS attractor: certified outer covers and box dimension",
        content: include_str!("../presets/ifs-overlap-outer.toml"),
    },
    Preset {
        name: "quasicantor-audit",
        description: "pruning on the dimension-1/2 set with count and reproduction audits",
        content: include_str!("../presets/quasicantor-audit.toml"),
    },
    Preset {
        name: "mdp-certify",
        description: "generation tree inside a pruned dense series plus its mass certificate",
        content: include_str!("../presets/mdp-certify.toml"),
    },
];

pub fn find_preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn format_preset_list(presets: &[Preset]) -> String {
    let mut out = String::new();
    for p in presets {
        out.push_str(&format!("{:<20} {}\n", p.name, p.description));
    }
    out
}

/// Resolves a `run` target: a preset name or a scenario file path.
pub fn load_scenario_text(target: &str) -> Result<String> {
    if let Some(preset) = find_preset(target) {
        return Ok(preset.content.to_string());
    }
    if Path::new(target).exists() {
        return std::fs::read_to_string(target)
            .with_context(|| format!("cannot read scenario {target}"));
    }
    let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
    bail!("no such scenario file or preset {target:?}; available presets: {}", names.join(", "))
}

/// Applies `--set path=value` overrides onto the raw TOML document before
/// schema validation (so unknown paths still fail the strict parse).
pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<toml::Value> {
    let mut doc: toml::Value =
        toml::from_str(text).map_err(|e| anyhow!("scenario parse error: {e}"))?;
    for entry in overrides {
        let (path, raw_value) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("override {entry:?} must have the form path=value"))?;
        let value: toml::Value = toml::from_str(&format!("v = {raw_value}"))
            .map(|mut t: toml::Value| t.as_table_mut().unwrap().remove("v").unwrap())
            .or_else(|_| Ok::<_, anyhow::Error>(toml::Value::String(raw_value.to_string())))?;
        set_path(&mut doc, path, value)?;
    }
    Ok(doc)
}

fn set_path(doc: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let mut current = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if let Ok(index) = part.parse::<usize>() {
            let arr = current
                .as_array_mut()
                .ok_or_else(|| anyhow!("{} is not an array", parts[..i].join(".")))?;
            let slot = arr
                .get_mut(index)
                .ok_or_else(|| anyhow!("index {index} out of bounds in {path}"))?;
            if last {
                *slot = value;
                return Ok(());
            }
            current = slot;
        } else {
            let table = current
                .as_table_mut()
                .ok_or_else(|| anyhow!("{} is not a table", parts[..i].join(".")))?;
            if last {
                table.insert(part.to_string(), value);
                return Ok(());
            }
            current = table
                .get_mut(*part)
                .ok_or_else(|| anyhow!("unknown path element {part:?} in {path}"))?;
        }
    }
    Ok(())
}

pub fn parse_scenario(doc: toml::Value) -> Result<ScenarioConfig> {
    let config: ScenarioConfig =
        doc.try_into().map_err(|e| anyhow!("scenario schema error: {e}"))?;
    if config.version != 1 {
        bail!("unsupported scenario version {}", config.version);
    }
    if config.steps.is_empty() {
        bail!("scenario has no steps");
    }
    Ok(config)
}

pub struct RunReport {
    pub audit_failures: Vec<String>,
    pub manifest_path: PathBuf,
}

/// Executes the scenario and writes artifacts plus the hashed manifest.
pub fn execute(
    scenario: &ScenarioConfig,
    seed: u64,
    out_dir: &Path,
    threads: usize,
    format: &str,
    max_scale: Option<u32>,
) -> Result<RunReport> {
    let spec = scenario.spec.build()?;
    let mut config = CoverConfig::default();
    if let Some(m) = max_scale {
        config.max_scale = m;
    }
    let mut manifest_steps = Vec::new();
    let mut manifest_artifacts: Vec<ManifestArtifact> = Vec::new();
    let mut audit_failures = Vec::new();
    for (index, step) in scenario.steps.iter().enumerate() {
        let started = Instant::now();
        let ctx = StepContext { spec: &spec, config, seed, index, format };
        let outcome = run_step(step, &ctx)
            .with_context(|| format!("step {index} ({})", step.op_name()))?;
        println!("[{index}] {}", outcome.summary);
        let audit_label = match outcome.audit {
            None => "none",
            Some(true) => "pass",
            Some(false) => {
                audit_failures.push(format!("step {index} ({})", step.op_name()));
                "fail"
            }
        };
        manifest_artifacts.extend(write_artifacts(out_dir, &outcome.artifacts)?);
        manifest_steps.push(ManifestStep {
            index,
            op: step.op_name().to_string(),
            wall_ms: started.elapsed().as_millis(),
            audit: audit_label.to_string(),
        });
    }
    let manifest = Manifest {
        schema: 1,
        scenario: scenario.name.clone(),
        seed,
        threads,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        steps: manifest_steps,
        artifacts: manifest_artifacts,
    };
    let manifest_artifact = Artifact::json("manifest.json", &manifest)?;
    let manifest_path = out_dir.join(&manifest_artifact.name);
    write_artifacts(out_dir, std::slice::from_ref(&manifest_artifact))?;
    Ok(RunReport { audit_failures, manifest_path })
}
