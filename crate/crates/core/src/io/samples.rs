use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::{csv_error, csv_reader, headers, parse_field};
use super::{digest_bytes, read_bytes, read_text, write_atomic, Provenance, TOOL_NAME, TOOL_VERSION};
use crate::error::{Error, Result};
use crate::model::ModelVariant;
use crate::sampler::{AcceptanceCount, Family, McmcSamples};

pub const SAMPLE_FORMAT_VERSION: u32 = 1;
/// Leading bytes of the packed sample format.
pub const BIN_MAGIC: &[u8; 16] = b"STCAR-SAMPLES-01";

/// Everything about a sample set except the draws themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub tool: String,
    pub tool_version: String,
    pub format_version: u32,
    pub provenance: Provenance,
    pub variant: ModelVariant,
    pub n_areas: usize,
    pub n_times: usize,
    pub n_covariates: usize,
    pub n_draws: usize,
    pub seed: u64,
    pub edges: Vec<(usize, usize)>,
    pub acceptance: Vec<(Family, AcceptanceCount)>,
    /// sha256 of each companion file, by file name.
    pub files: Vec<(String, String)>,
}

impl SampleMeta {
    fn of(s: &McmcSamples, prov: &Provenance) -> Self {
        SampleMeta {
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            format_version: SAMPLE_FORMAT_VERSION,
            provenance: prov.clone(),
            variant: s.variant,
            n_areas: s.n_areas,
            n_times: s.n_times,
            n_covariates: s.n_covariates,
            n_draws: s.n_draws(),
            seed: s.seed,
            edges: s.edges.clone(),
            acceptance: s.acceptance.clone(),
            files: Vec::new(),
        }
    }

    fn check_version(&self, source: &str) -> Result<()> {
        if self.tool != TOOL_NAME || self.format_version != SAMPLE_FORMAT_VERSION {
            return Err(Error::schema(
                source,
                format!("sample format {} v{} is not supported (expected {TOOL_NAME} v{SAMPLE_FORMAT_VERSION})", self.tool, self.format_version),
            ));
        }
        Ok(())
    }

    fn empty_samples(&self) -> McmcSamples {
        McmcSamples::empty(self.variant, self.n_areas, self.n_times, self.edges.clone(), self.n_covariates, self.seed)
    }
}

fn table(prov: &Provenance, header: &[String], n_rows: usize, row: impl Fn(usize, &mut String)) -> String {
    let mut out = prov.comment_line();
    out.push_str("draw");
    for h in header {
        write!(out, ",{h}").unwrap();
    }
    out.push('\n');
    for d in 0..n_rows {
        write!(out, "{d}").unwrap();
        row(d, &mut out);
        out.push('\n');
    }
    out
}

fn push_values(out: &mut String, values: &[f64]) {
    for v in values {
        write!(out, ",{v}").unwrap();
    }
}

const SCALARS: [&str; 5] = ["tau2", "alpha", "zeta2", "rho", "deviance"];

/// Writes `meta.json`, `scalars.csv`, `beta.csv`, `phi.csv` and, for
/// adaptive models, `w.csv` into `dir`. Values use shortest round-trip
/// formatting, so reading them back reproduces every bit.
pub fn write_samples_csv(dir: &Path, s: &McmcSamples, prov: &Provenance) -> Result<()> {
    s.check_shape()?;
    let n = s.n_draws();
    let mut files: Vec<(String, String)> = Vec::new();
    let scalars = table(prov, &SCALARS.map(String::from), n, |d, out| {
        push_values(out, &[s.tau2[d], s.alpha[d], s.zeta2[d], s.rho[d], s.deviance[d]]);
    });
    files.push(("scalars.csv".into(), scalars));
    let beta_h: Vec<String> = (1..=s.n_covariates).map(|r| format!("beta_{r}")).collect();
    files.push(("beta.csv".into(), table(prov, &beta_h, n, |d, out| push_values(out, s.beta_draw(d)))));
    if s.variant.is_adaptive() {
        let w_h: Vec<String> = s.edges.iter().map(|(i, k)| format!("w_{i}_{k}")).collect();
        files.push(("w.csv".into(), table(prov, &w_h, n, |d, out| push_values(out, s.w_draw(d)))));
    }
    let phi_h: Vec<String> =
        (0..s.n_cells()).map(|c| format!("phi_{}_{}", c % s.n_areas, c / s.n_areas)).collect();
    files.push(("phi.csv".into(), table(prov, &phi_h, n, |d, out| push_values(out, s.phi_draw(d)))));

    let mut meta = SampleMeta::of(s, prov);
    for (name, body) in &files {
        write_atomic(&dir.join(name), body.as_bytes())?;
        meta.files.push((name.clone(), digest_bytes(body.as_bytes())));
    }
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Numerical(e.to_string()))?;
    write_atomic(&dir.join("meta.json"), json.as_bytes())
}

fn read_meta(dir: &Path) -> Result<SampleMeta> {
    let path = dir.join("meta.json");
    let text = read_text(&path)?;
    let meta: SampleMeta =
        serde_json::from_str(&text).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
    meta.check_version(&path.display().to_string())?;
    Ok(meta)
}

fn read_table(dir: &Path, name: &str, meta: &SampleMeta, width: usize, sink: &mut Vec<f64>) -> Result<()> {
    let path = dir.join(name);
    let src = path.display().to_string();
    let bytes = read_bytes(&path)?;
    let expected = meta.files.iter().find(|(n, _)| n == name).map(|(_, d)| d.as_str());
    if expected != Some(digest_bytes(&bytes).as_str()) {
        return Err(Error::schema(src, "content does not match the digest recorded in meta.json (truncated or modified)"));
    }
    let text = String::from_utf8(bytes).map_err(|e| Error::schema(src.clone(), e.to_string()))?;
    let mut r = csv_reader(&text);
    let h = headers(&path, &mut r)?;
    if h.len() != width + 1 {
        return Err(Error::schema(src, format!("{} columns, expected {}", h.len(), width + 1)));
    }
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(&path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (c, v) in rec.iter().enumerate().skip(1) {
            sink.push(parse_field(&path, line, &h[c], v)?);
        }
        rows += 1;
    }
    if rows != meta.n_draws {
        return Err(Error::schema(src, format!("{rows} draws, meta.json records {}", meta.n_draws)));
    }
    Ok(())
}

pub fn read_samples_csv(dir: &Path) -> Result<McmcSamples> {
    read_samples_csv_with_meta(dir).map(|(s, _)| s)
}

fn read_samples_csv_with_meta(dir: &Path) -> Result<(McmcSamples, SampleMeta)> {
    let meta = read_meta(dir)?;
    let mut s = meta.empty_samples();
    let mut scalars = Vec::new();
    read_table(dir, "scalars.csv", &meta, SCALARS.len(), &mut scalars)?;
    for row in scalars.chunks(SCALARS.len()) {
        s.tau2.push(row[0]);
        s.alpha.push(row[1]);
        s.zeta2.push(row[2]);
        s.rho.push(row[3]);
        s.deviance.push(row[4]);
    }
    read_table(dir, "beta.csv", &meta, meta.n_covariates, &mut s.beta)?;
    if meta.variant.is_adaptive() {
        read_table(dir, "w.csv", &meta, meta.edges.len(), &mut s.w)?;
    } else {
        s.w = vec![1.0; meta.n_draws * meta.edges.len()];
    }
    read_table(dir, "phi.csv", &meta, meta.n_areas * meta.n_times, &mut s.phi)?;
    s.acceptance = meta.acceptance.clone();
    s.check_shape()?;
    Ok((s, meta))
}

/// Packed little-endian format: magic, JSON metadata length and body, the
/// draw arrays, and a trailing sha256 of everything before it.
pub fn write_samples_bin(path: &Path, s: &McmcSamples, prov: &Provenance) -> Result<()> {
    s.check_shape()?;
    let meta = SampleMeta::of(s, prov);
    let json = serde_json::to_vec(&meta).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut out = Vec::with_capacity(64 + json.len() + 8 * (s.beta.len() + s.w.len() + s.phi.len() + 5 * s.n_draws()));
    out.extend_from_slice(BIN_MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for block in [&s.beta, &s.tau2, &s.alpha, &s.zeta2, &s.rho, &s.w, &s.phi, &s.deviance] {
        for v in block.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = sha256(&out);
    out.extend_from_slice(&digest);
    write_atomic(path, &out)
}

fn sha256(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

pub fn read_samples_bin(path: &Path) -> Result<McmcSamples> {
    read_samples_bin_with_meta(path).map(|(s, _)| s)
}

fn read_samples_bin_with_meta(path: &Path) -> Result<(McmcSamples, SampleMeta)> {
    let src = path.display().to_string();
    let bytes = read_bytes(path)?;
    let corrupt = |detail: &str| Error::schema(src.clone(), detail.to_string());
    if bytes.len() < 16 + 8 + 32 {
        return Err(corrupt("file too short"));
    }
    if &bytes[..13] != b"STCAR-SAMPLES" {
        return Err(corrupt("not a sample file"));
    }
    if &bytes[..16] != BIN_MAGIC {
        return Err(corrupt("unsupported sample format version"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 32);
    if sha256(body) != tail {
        return Err(corrupt("checksum mismatch (truncated or modified)"));
    }
    let json_len = u64::from_le_bytes(body[16..24].try_into().unwrap()) as usize;
    let json = body.get(24..24 + json_len).ok_or_else(|| corrupt("metadata truncated"))?;
    let meta: SampleMeta = serde_json::from_slice(json).map_err(|e| corrupt(&e.to_string()))?;
    meta.check_version(&src)?;
    let mut s = meta.empty_samples();
    let n = meta.n_draws;
    let lens = [n * meta.n_covariates, n, n, n, n, n * meta.edges.len(), n * meta.n_areas * meta.n_times, n];
    let data = &body[24 + json_len..];
    if data.len() != 8 * lens.iter().sum::<usize>() {
        return Err(corrupt("draw arrays do not match the metadata"));
    }
    let mut values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = |k: usize| -> Vec<f64> { values.by_ref().take(k).collect() };
    s.beta = take(lens[0]);
    s.tau2 = take(lens[1]);
    s.alpha = take(lens[2]);
    s.zeta2 = take(lens[3]);
    s.rho = take(lens[4]);
    s.w = take(lens[5]);
    s.phi = take(lens[6]);
    s.deviance = take(lens[7]);
    s.acceptance = meta.acceptance.clone();
    s.check_shape()?;
    Ok((s, meta))
}

/// Reads `samples.bin` when present, otherwise the CSV set.
pub fn read_samples(dir: &Path) -> Result<McmcSamples> {
    read_samples_with_meta(dir).map(|(s, _)| s)
}

/// As [`read_samples`], also returning the stored metadata (provenance,
/// file digests).
pub fn read_samples_with_meta(dir: &Path) -> Result<(McmcSamples, SampleMeta)> {
    let bin = dir.join("samples.bin");
    if bin.exists() {
        read_samples_bin_with_meta(&bin)
    } else {
        read_samples_csv_with_meta(dir)
    }
}
