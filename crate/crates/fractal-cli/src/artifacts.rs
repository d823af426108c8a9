//! Artifact encoding: cover export formats, coefficient CSV round-trip,
//! and the hashed run manifest.

use anyhow::{anyhow, bail, Context, Result};
use fractal_core::cover::{Exactness, LevelCover};
use fractal_core::lws::{LwsCoefficients, LwsParams};
use fractal_core::BitSet;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One output file, still in memory.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(name: impl Into<String>, text: String) -> Self {
        Artifact { name: name.into(), bytes: text.into_bytes() }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Artifact { name: name.into(), bytes })
    }
}

fn exactness_label(e: Exactness) -> &'static str {
    match e {
        Exactness::Exact => "exact",
        Exactness::Outer { stabilized: true } => "outer",
        Exactness::Outer { stabilized: false } => "outer-unstabilized",
    }
}

/// Run-length encoded cover: a small text header, then one `start:len` run
/// of consecutive covered cells per comma-separated entry.
pub fn cover_to_rle(cover: &LevelCover) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "levelcover v1");
    let _ = writeln!(out, "scale {}", cover.j);
    let _ = writeln!(out, "count {}", cover.count());
    let _ = writeln!(out, "exactness {}", exactness_label(cover.exactness));
    let mut runs: Vec<(u64, u64)> = Vec::new();
    let mut start = None;
    let mut prev = 0u64;
    for k in cover.members.iter() {
        match start {
            None => start = Some(k),
            Some(_) if k == prev + 1 => {}
            Some(s) => {
                runs.push((s, prev + 1 - s));
                start = Some(k);
            }
        }
        prev = k;
    }
    if let Some(s) = start {
        runs.push((s, prev + 1 - s));
    }
    let encoded: Vec<String> = runs.iter().map(|(s, l)| format!("{s}:{l}")).collect();
    let _ = writeln!(out, "runs {}", encoded.join(","));
    out
}

pub fn cover_from_rle(text: &str) -> Result<LevelCover> {
    let mut scale = None;
    let mut exactness = Exactness::Exact;
    let mut runs: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if idx == 0 {
            if line != "levelcover v1" {
                bail!("not a levelcover v1 file");
            }
            continue;
        }
        let Some((key, value)) = line.split_once(' ') else { continue };
        match key {
            "scale" => scale = Some(value.parse::<u32>()?),
            "count" => {}
            "exactness" => {
                exactness = match value {
                    "exact" => Exactness::Exact,
                    "outer" => Exactness::Outer { stabilized: true },
                    "outer-unstabilized" => Exactness::Outer { stabilized: false },
                    other => bail!("unknown exactness {other:?}"),
                }
            }
            "runs" => {
                if value.is_empty() {
                    continue;
                }
                for entry in value.split(',') {
                    let (s, l) = entry
                        .split_once(':')
                        .ok_or_else(|| anyhow!("bad run entry {entry:?}"))?;
                    runs.push((s.parse()?, l.parse()?));
                }
            }
            _ => bail!("unknown levelcover key {key:?}"),
        }
    }
    let j = scale.ok_or_else(|| anyhow!("missing scale"))?;
    let mut members = BitSet::new(1u64 << j);
    for (s, l) in runs {
        members.insert_range(s, s + l);
    }
    Ok(LevelCover { j, members, exactness })
}

/// Raw bit dump: an 8-byte header (scale and member count as u32 little
/// endian) followed by the member bits packed LSB-first.
pub fn cover_to_bits(cover: &LevelCover) -> Vec<u8> {
    let ncells = 1u64 << cover.j;
    let mut out = Vec::with_capacity(8 + ncells.div_ceil(8) as usize);
    out.extend_from_slice(&cover.j.to_le_bytes());
    out.extend_from_slice(&(cover.count() as u32).to_le_bytes());
    let mut byte = 0u8;
    for k in 0..ncells {
        if cover.members.contains(k) {
            byte |= 1 << (k % 8);
        }
        if k % 8 == 7 {
            out.push(byte);
            byte = 0;
        }
    }
    if ncells % 8 != 0 {
        out.push(byte);
    }
    out
}

pub fn cover_from_bits(bytes: &[u8]) -> Result<LevelCover> {
    if bytes.len() < 8 {
        bail!("bit dump too short");
    }
    let j = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if j > 32 {
        bail!("scale {j} too deep");
    }
    let ncells = 1u64 << j;
    if (bytes.len() as u64 - 8) < ncells.div_ceil(8) {
        bail!("bit dump truncated");
    }
    let mut members = BitSet::new(ncells);
    for k in 0..ncells {
        if bytes[8 + (k / 8) as usize] >> (k % 8) & 1 == 1 {
            members.insert(k);
        }
    }
    let cover = LevelCover { j, members, exactness: Exactness::Exact };
    if cover.count() != count as u64 {
        bail!("bit dump count mismatch");
    }
    Ok(cover)
}

pub fn cover_to_csv(cover: &LevelCover) -> String {
    let mut out = String::from("j,k\n");
    for k in cover.members.iter() {
        let _ = writeln!(out, "{},{}", cover.j, k);
    }
    out
}

/// Sparse coefficient export: parameter header comments, then one active
/// (j, k) per row. Exact re-import rebuilds the same coefficients.
pub fn coefficients_to_csv(coeffs: &LwsCoefficients) -> String {
    let p = &coeffs.params;
    let mut out = String::new();
    let _ = writeln!(out, "# lws v1");
    let _ = writeln!(out, "# alpha={} eta={} dim={} j-max={} seed={}", p.alpha, p.eta, p.h, p.j_max, p.seed);
    out.push_str("j,k\n");
    for (j, set) in coeffs.active.iter().enumerate() {
        for k in set.iter() {
            let _ = writeln!(out, "{j},{k}");
        }
    }
    out
}

pub fn coefficients_from_csv(text: &str) -> Result<LwsCoefficients> {
    let mut params: Option<LwsParams> = None;
    let mut rows: Vec<(u32, u64)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line == "j,k" {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if rest == "lws v1" {
                continue;
            }
            let mut alpha = None;
            let mut eta = None;
            let mut dim = None;
            let mut j_max = None;
            let mut seed = None;
            for field in rest.split_whitespace() {
                let (key, value) =
                    field.split_once('=').ok_or_else(|| anyhow!("bad header field {field:?}"))?;
                match key {
                    "alpha" => alpha = Some(value.parse()?),
                    "eta" => eta = Some(value.parse()?),
                    "dim" => dim = Some(value.parse()?),
                    "j-max" => j_max = Some(value.parse()?),
                    "seed" => seed = Some(value.parse()?),
                    _ => bail!("unknown header field {key:?}"),
                }
            }
            params = Some(LwsParams {
                alpha: alpha.ok_or_else(|| anyhow!("missing alpha"))?,
                eta: eta.ok_or_else(|| anyhow!("missing eta"))?,
                h: dim.ok_or_else(|| anyhow!("missing dim"))?,
                j_max: j_max.ok_or_else(|| anyhow!("missing j-max"))?,
                seed: seed.ok_or_else(|| anyhow!("missing seed"))?,
            });
            continue;
        }
        let (j, k) = line.split_once(',').ok_or_else(|| anyhow!("bad row {line:?}"))?;
        rows.push((j.trim().parse()?, k.trim().parse()?));
    }
    let params = params.ok_or_else(|| anyhow!("missing parameter header"))?;
    let mut active: Vec<BitSet> =
        (0..=params.j_max).map(|j| BitSet::new(1u64 << j)).collect();
    for (j, k) in rows {
        if j > params.j_max || k >= (1u64 << j) {
            bail!("active position ({j},{k}) out of range");
        }
        active[j as usize].insert(k);
    }
    Ok(LwsCoefficients { params, active })
}

/// Two-column gnuplot-style plot data.
pub fn plot_data<I: IntoIterator<Item = (f64, f64)>>(points: I) -> String {
    let mut out = String::new();
    for (x, y) in points {
        let _ = writeln!(out, "{x} {y}");
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Serialize)]
pub struct ManifestStep {
    pub index: usize,
    pub op: String,
    pub wall_ms: u128,
    pub audit: String,
}

#[derive(Serialize)]
pub struct ManifestArtifact {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub scenario: String,
    pub seed: u64,
    pub threads: usize,
    pub toolkit_version: String,
    pub steps: Vec<ManifestStep>,
    pub artifacts: Vec<ManifestArtifact>,
}

/// Writes artifacts under `out_dir` and returns their manifest entries.
pub fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> Result<Vec<ManifestArtifact>> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut entries = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let path: PathBuf = out_dir.join(&artifact.name);
        std::fs::write(&path, &artifact.bytes)
            .with_context(|| format!("cannot write {}", path.display()))?;
        entries.push(ManifestArtifact {
            file: artifact.name.clone(),
            bytes: artifact.bytes.len(),
            sha256: sha256_hex(&artifact.bytes),
        });
    }
    Ok(entries)
}
