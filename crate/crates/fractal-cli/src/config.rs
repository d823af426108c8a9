//! Serde schemas for spec and scenario files. Unknown keys are rejected
//! everywhere so typos fail loudly instead of being ignored.

use anyhow::{anyhow, bail, Context, Result};
use fractal_core::dyadic::DyadicInterval;
use fractal_core::spec::{AffineMap, FractalSpec, UnionComponent};
use fractal_core::BitSet;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpecConfig {
    FullInterval,
    DigitRestricted {
        #[serde(rename = "block-bits")]
        block_bits: u32,
        digits: Vec<u16>,
    },
    FiniteUnion {
        components: Vec<ComponentConfig>,
    },
    AffineIfs {
        maps: Vec<MapConfig>,
    },
    ExplicitCover {
        levels: Vec<LevelConfig>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub carrier: CarrierConfig,
    pub spec: Box<SpecConfig>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierConfig {
    pub scale: u32,
    pub index: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    /// Contraction ratio as a rational string, e.g. "1/3" or "-1/4".
    pub r: String,
    /// Translation as a rational string, e.g. "2/3" or "0".
    pub t: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub scale: u32,
    pub members: Vec<u64>,
}

fn parse_rational(s: &str) -> Result<(i64, i64)> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (
            n.trim().parse::<i64>().with_context(|| format!("bad numerator in {s:?}"))?,
            d.trim().parse::<i64>().with_context(|| format!("bad denominator in {s:?}"))?,
        ),
        None => (s.parse::<i64>().with_context(|| format!("bad rational {s:?}"))?, 1),
    };
    if den == 0 {
        bail!("zero denominator in {s:?}");
    }
    // Normalize the sign into the numerator.
    if den < 0 {
        Ok((-num, -den))
    } else {
        Ok((num, den))
    }
}

impl SpecConfig {
    pub fn build(&self) -> Result<FractalSpec> {
        match self {
            SpecConfig::FullInterval => Ok(FractalSpec::FullInterval),
            SpecConfig::DigitRestricted { block_bits, digits } => {
                FractalSpec::digit_restricted(*block_bits, digits).map_err(|e| anyhow!("{e}"))
            }
            SpecConfig::FiniteUnion { components } => {
                let mut parts = Vec::with_capacity(components.len());
                for c in components {
                    let carrier = DyadicInterval::new(c.carrier.scale, c.carrier.index)
                        .ok_or_else(|| {
                            anyhow!(
                                "carrier index {} out of range at scale {}",
                                c.carrier.index,
                                c.carrier.scale
                            )
                        })?;
                    parts.push(UnionComponent { carrier, spec: c.spec.build()? });
                }
                FractalSpec::finite_union(parts).map_err(|e| anyhow!("{e}"))
            }
            SpecConfig::AffineIfs { maps } => {
                let mut built = Vec::with_capacity(maps.len());
                for m in maps {
                    let (rn, rd) = parse_rational(&m.r)?;
                    let (tn, td) = parse_rational(&m.t)?;
                    built.push(AffineMap::new(rn, rd, tn, td).map_err(|e| anyhow!("{e}"))?);
                }
                FractalSpec::affine_ifs(built).map_err(|e| anyhow!("{e}"))
            }
            SpecConfig::ExplicitCover { levels } => {
                let mut built = Vec::with_capacity(levels.len());
                for level in levels {
                    if level.scale > 32 {
                        bail!("explicit cover scale {} too deep", level.scale);
                    }
                    let mut set = BitSet::new(1u64 << level.scale);
                    for &k in &level.members {
                        if k >= (1u64 << level.scale) {
                            bail!("member {k} out of range at scale {}", level.scale);
                        }
                        set.insert(k);
                    }
                    built.push((level.scale, set));
                }
                FractalSpec::explicit(built).map_err(|e| anyhow!("{e}"))
            }
        }
    }
}

/// Builtin spec shorthands accepted wherever a spec file path is expected.
pub fn builtin_spec(name: &str) -> Option<SpecConfig> {
    match name {
        "full" => Some(SpecConfig::FullInterval),
        "cantor-half" => {
            Some(SpecConfig::DigitRestricted { block_bits: 2, digits: vec![0, 3] })
        }
        "cantor-third" => {
            Some(SpecConfig::DigitRestricted { block_bits: 3, digits: vec![0, 7] })
        }
        "cantor-rich" => {
            Some(SpecConfig::DigitRestricted { block_bits: 2, digits: vec![0, 1, 3] })
        }
        "union-kn" => Some(union_kn_spec()),
        "ifs-overlap" => Some(SpecConfig::AffineIfs {
            maps: vec![
                MapConfig { r: "1/3".into(), t: "0".into() },
                MapConfig { r: "1/3".into(), t: "1/3".into() },
                MapConfig { r: "1/3".into(), t: "2/21".into() },
            ],
        }),
        _ => None,
    }
}

/// Disjoint union of digit-restricted components of dimensions 1/2, 2/3
/// and 3/4 (a truncated version of a family with dimensions approaching 1).
pub fn union_kn_spec() -> SpecConfig {
    SpecConfig::FiniteUnion {
        components: vec![
            ComponentConfig {
                carrier: CarrierConfig { scale: 2, index: 0 },
                spec: Box::new(SpecConfig::DigitRestricted { block_bits: 2, digits: vec![0, 3] }),
            },
            ComponentConfig {
                carrier: CarrierConfig { scale: 2, index: 1 },
                spec: Box::new(SpecConfig::DigitRestricted {
                    block_bits: 3,
                    digits: vec![0, 2, 5, 7],
                }),
            },
            ComponentConfig {
                carrier: CarrierConfig { scale: 1, index: 1 },
                spec: Box::new(SpecConfig::DigitRestricted {
                    block_bits: 4,
                    digits: vec![0, 2, 5, 7, 8, 10, 13, 15],
                }),
            },
        ],
    }
}

/// Loads a spec from a builtin name, a TOML file containing either a bare
/// spec document or a `[spec]` table, or an exported cover (`.rle` or
/// `.bits`) which becomes a single-level explicit-cover spec.
pub fn load_spec(arg: &str) -> Result<(SpecConfig, FractalSpec)> {
    let config = if let Some(builtin) = builtin_spec(arg) {
        builtin
    } else if arg.ends_with(".rle") || arg.ends_with(".bits") {
        let cover = if arg.ends_with(".rle") {
            let text = std::fs::read_to_string(arg)
                .with_context(|| format!("cannot read cover file {arg}"))?;
            crate::artifacts::cover_from_rle(&text)?
        } else {
            let bytes = std::fs::read(arg)
                .with_context(|| format!("cannot read cover file {arg}"))?;
            crate::artifacts::cover_from_bits(&bytes)?
        };
        SpecConfig::ExplicitCover {
            levels: vec![LevelConfig {
                scale: cover.j,
                members: cover.members.iter().collect(),
            }],
        }
    } else {
        let text = std::fs::read_to_string(arg)
            .with_context(|| format!("cannot read spec file {arg}"))?;
        parse_spec_document(&text)?
    };
    let spec = config.build()?;
    Ok((config, spec))
}

fn parse_spec_document(text: &str) -> Result<SpecConfig> {
    #[derive(Deserialize)]
    struct Wrapper {
        spec: SpecConfig,
    }
    if let Ok(w) = toml::from_str::<Wrapper>(text) {
        return Ok(w.spec);
    }
    toml::from_str::<SpecConfig>(text).map_err(|e| anyhow!("spec parse error: {e}"))
}
