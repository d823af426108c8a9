//! Scenario schema: a spec plus an ordered list of analysis steps.

use serde::{Deserialize, Serialize};

use crate::config::SpecConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Schema version; only 1 is understood.
    pub version: u32,
    pub name: String,
    pub spec: SpecConfig,
    /// Default seed; the command line overrides it.
    #[serde(default)]
    pub seed: Option<u64>,
    pub steps: Vec<StepConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepConfig {
    Cover(CoverStep),
    Dims(DimsStep),
    Classify(ClassifyStep),
    Quasicantor(QuasicantorStep),
    Lws(LwsStep),
    Leaders(LeadersStep),
    Spectrum(SpectrumStep),
    Limsup(LimsupStep),
    Mdp(MdpStep),
}

impl StepConfig {
    pub fn op_name(&self) -> &'static str {
        match self {
            StepConfig::Cover(_) => "cover",
            StepConfig::Dims(_) => "dims",
            StepConfig::Classify(_) => "classify",
            StepConfig::Quasicantor(_) => "quasicantor",
            StepConfig::Lws(_) => "lws",
            StepConfig::Leaders(_) => "leaders",
            StepConfig::Spectrum(_) => "spectrum",
            StepConfig::Limsup(_) => "limsup",
            StepConfig::Mdp(_) => "mdp",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CoverStep {
    pub j: u32,
    /// Export format: "rle", "bits" or "csv".
    #[serde(default = "default_emit")]
    pub emit: String,
}

fn default_emit() -> String {
    "rle".to_string()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DimsStep {
    pub j_min: u32,
    pub j_max: u32,
    #[serde(default = "one")]
    pub stride: u32,
    /// When both are present, the count-bound audit runs and its failure
    /// is a reportable audit failure.
    #[serde(default)]
    pub audit_h: Option<f64>,
    #[serde(default)]
    pub audit_eps: Option<f64>,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ClassifyStep {
    pub j: u32,
    pub beta: f64,
    pub eps: f64,
    pub dim: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct QuasicantorStep {
    pub base_scale: u32,
    pub ratio: f64,
    pub eps: f64,
    pub dim: f64,
    #[serde(default = "default_max_scale")]
    pub max_scale: u32,
    /// "recursive" (default) or "fixed-point".
    #[serde(default)]
    pub mode: Option<String>,
    /// Extraction base rung; defaults to the first rung passing the
    /// two-sided count check.
    #[serde(default)]
    pub base_rung: Option<usize>,
}

pub fn default_max_scale() -> u32 {
    fractal_core::DEFAULT_MAX_SCALE
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LwsStep {
    pub alpha: f64,
    pub eta: f64,
    pub dim: f64,
    pub j_max: u32,
    /// Overrides the derived per-step seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Also estimate the active-count growth exponent.
    #[serde(default)]
    pub occupancy: bool,
    /// Render the Haar partial sums on the dyadic grid of this depth.
    #[serde(default)]
    pub render_depth: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LeadersStep {
    /// Optional exported-coefficients file; its header must match the
    /// declared parameters.
    #[serde(default)]
    pub coefficients: Option<String>,
    pub alpha: f64,
    pub eta: f64,
    pub dim: f64,
    pub j_max: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Scales whose leader rows are exported.
    #[serde(default)]
    pub emit_scales: Vec<u32>,
    /// Also estimate pointwise exponents per finest cell.
    #[serde(default)]
    pub holder: bool,
    #[serde(default = "default_holder_j_min")]
    pub holder_j_min: u32,
    #[serde(default = "default_h_cap")]
    pub h_cap: f64,
}

fn default_holder_j_min() -> u32 {
    3
}

fn default_h_cap() -> f64 {
    10.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SpectrumStep {
    /// Optional exported-coefficients file; its header must match the
    /// declared parameters.
    #[serde(default)]
    pub coefficients: Option<String>,
    pub alpha: f64,
    pub eta: f64,
    pub dim: f64,
    pub j_max: u32,
    pub h_grid: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LimsupStep {
    /// Optional exported-coefficients file; its header must match the
    /// declared parameters.
    #[serde(default)]
    pub coefficients: Option<String>,
    pub alpha: f64,
    pub eta: f64,
    pub dim: f64,
    pub j_max: u32,
    pub delta: f64,
    pub tail_start: u32,
    pub resolution: u32,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct MdpStep {
    pub alpha: f64,
    pub eta: f64,
    pub dim: f64,
    pub j_max: u32,
    pub base_scale: u32,
    pub ratio: f64,
    pub eps: f64,
    /// Contraction exponent as the ladder-ratio power q0: s = (1+ratio)^q0.
    pub q0: u32,
    /// Selection-slack parameter of the generation counts.
    pub b: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Certificate scan depth; defaults to the deepest ball scale.
    #[serde(default)]
    pub depth: Option<u32>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_roundtrip_and_unknown_keys() {
        let text = r#"
version = 1
name = "demo"

[spec]
kind = "full-interval"

[[steps]]
op = "cover"
j = 8

[[steps]]
op = "dims"
j-min = 2
j-max = 12
"#;
        let sc: ScenarioConfig = toml::from_str(text).unwrap();
        assert_eq!(sc.steps.len(), 2);
        assert_eq!(sc.steps[0].op_name(), "cover");

        let bad = text.replace("j = 8", "j = 8\nbogus = true");
        assert!(toml::from_str::<ScenarioConfig>(&bad).is_err());
    }
}
