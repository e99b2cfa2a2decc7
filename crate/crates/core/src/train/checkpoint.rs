//! Checkpoint = `manifest.txt` (text index) + `params.bin` (raw
//! little-endian scalars).
//!
//! Manifest lines after the `anysize-checkpoint <version>` header:
//!
//! ```text
//! scalar f32 4
//! blob params.bin <bytes>
//! epoch <completed epochs>
//! step <completed steps>
//! rng <seed hex> <stream> <word pos>
//! adam <generator|discriminator> <t>
//! config <key> <value>
//! tensor <key> <HxWx..> <byte offset> <elements>
//! ```
//!
//! Tensor keys are `param/<name>`, `adam.m/<name>` and `adam.v/<name>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::config::TrainConfig;
use super::trainer::Trainer;
use crate::error::{CheckpointError, Error, Result};
use crate::models::Generator;
use crate::nn::{AdamState, Module};
use crate::tensor::{Scalar, Tensor};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const BLOB_FILE: &str = "params.bin";
const MAGIC: &str = "anysize-checkpoint";

/// One blob slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub key: String,
    pub shape: Vec<usize>,
    pub offset: u64,
    pub elements: usize,
}

impl ManifestEntry {
    fn end(&self) -> u64 {
        self.offset + (self.elements * f32::BYTES) as u64
    }
}

/// Parsed `manifest.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointManifest {
    pub version: u32,
    pub scalar_bytes: usize,
    pub blob_bytes: u64,
    pub epoch: usize,
    pub step: u64,
    pub rng_seed: [u8; 32],
    pub rng_stream: u64,
    pub rng_word_pos: u128,
    pub adam_steps: BTreeMap<String, u64>,
    pub config: TrainConfig,
    pub entries: Vec<ManifestEntry>,
}

fn shape_text(shape: &[usize]) -> String {
    shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

fn push_tensor(entries: &mut Vec<ManifestEntry>, blob: &mut Vec<u8>, key: String, t: &Tensor<f32>) {
    entries.push(ManifestEntry {
        key,
        shape: t.shape().to_vec(),
        offset: blob.len() as u64,
        elements: t.len(),
    });
    for &v in t.data() {
        v.write_le(blob);
    }
}

fn push_model<M: Module<f32>>(entries: &mut Vec<ManifestEntry>, blob: &mut Vec<u8>, model: &M, adam: &AdamState<f32>) {
    model.visit(&mut |p| push_tensor(entries, blob, format!("param/{}", p.name), &p.value));
    for m in &adam.moments {
        push_tensor(entries, blob, format!("adam.m/{}", m.name), &m.m);
        push_tensor(entries, blob, format!("adam.v/{}", m.name), &m.v);
    }
}

/// Writes the full trainer state into `dir`.
pub fn save_checkpoint(trainer: &Trainer, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    let mut blob = Vec::new();
    push_model(&mut entries, &mut blob, &trainer.generator, &trainer.g_adam);
    push_model(&mut entries, &mut blob, &trainer.discriminator, &trainer.d_adam);

    let mut m = String::new();
    let rng = &trainer.rng;
    let seed: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
    let _ = writeln!(m, "{MAGIC} {CHECKPOINT_VERSION}");
    let _ = writeln!(m, "scalar {} {}", f32::NAME, f32::BYTES);
    let _ = writeln!(m, "blob {BLOB_FILE} {}", blob.len());
    let _ = writeln!(m, "epoch {}", trainer.epoch);
    let _ = writeln!(m, "step {}", trainer.step);
    let _ = writeln!(m, "rng {seed} {} {}", rng.get_stream(), rng.get_word_pos());
    let _ = writeln!(m, "adam generator {}", trainer.g_adam.t);
    let _ = writeln!(m, "adam discriminator {}", trainer.d_adam.t);
    for (k, v) in trainer.config.to_pairs() {
        let _ = writeln!(m, "config {k} {v}");
    }
    for e in &entries {
        let _ = writeln!(m, "tensor {} {} {} {}", e.key, shape_text(&e.shape), e.offset, e.elements);
    }
    let blob_path = dir.join(BLOB_FILE);
    std::fs::write(&blob_path, &blob).map_err(|e| Error::io(&blob_path, e))?;
    // Manifest last, so a directory with a manifest always has its blob.
    let manifest_path = dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, m).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(())
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    CheckpointError::Malformed {
        line,
        message: message.into(),
    }
    .into()
}

fn parse_field<T: std::str::FromStr>(line: usize, s: Option<&str>, what: &str) -> Result<T> {
    s.and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed(line, format!("bad {what}")))
}

pub fn parse_manifest(text: &str) -> Result<CheckpointManifest> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| malformed(1, "empty manifest"))?;
    let mut head = header.split_whitespace();
    if head.next() != Some(MAGIC) {
        return Err(malformed(1, "not a checkpoint manifest"));
    }
    let version: u32 = parse_field(1, head.next(), "version")?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        }
        .into());
    }
    let mut out = CheckpointManifest {
        version,
        scalar_bytes: 0,
        blob_bytes: 0,
        epoch: 0,
        step: 0,
        rng_seed: [0; 32],
        rng_stream: 0,
        rng_word_pos: 0,
        adam_steps: BTreeMap::new(),
        config: TrainConfig::default(),
        entries: Vec::new(),
    };
    let mut seen_rng = false;
    for (n, line) in lines {
        let mut f = line.split_whitespace();
        match f.next() {
            None => continue,
            Some("scalar") => {
                f.next();
                out.scalar_bytes = parse_field(n, f.next(), "scalar width")?;
            }
            Some("blob") => {
                if f.next() != Some(BLOB_FILE) {
                    return Err(malformed(n, "unexpected blob file name"));
                }
                out.blob_bytes = parse_field(n, f.next(), "blob size")?;
            }
            Some("epoch") => out.epoch = parse_field(n, f.next(), "epoch")?,
            Some("step") => out.step = parse_field(n, f.next(), "step")?,
            Some("rng") => {
                let hex = f.next().unwrap_or("");
                if hex.len() != 64 {
                    return Err(malformed(n, "rng seed must be 64 hex digits"));
                }
                for (i, b) in out.rng_seed.iter_mut().enumerate() {
                    *b = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).map_err(|_| malformed(n, "bad rng seed"))?;
                }
                out.rng_stream = parse_field(n, f.next(), "rng stream")?;
                out.rng_word_pos = parse_field(n, f.next(), "rng position")?;
                seen_rng = true;
            }
            Some("adam") => {
                let model = f.next().ok_or_else(|| malformed(n, "missing model name"))?;
                let t = parse_field(n, f.next(), "adam step")?;
                out.adam_steps.insert(model.to_string(), t);
            }
            Some("config") => {
                let key = f.next().ok_or_else(|| malformed(n, "missing config key"))?;
                let value = f.next().unwrap_or("");
                out.config.set(key, value).map_err(|e| malformed(n, e.to_string()))?;
            }
            Some("tensor") => {
                let key = f.next().ok_or_else(|| malformed(n, "missing tensor key"))?.to_string();
                let shape = f
                    .next()
                    .ok_or_else(|| malformed(n, "missing shape"))?
                    .split('x')
                    .map(|d| d.parse::<usize>().ok().filter(|&d| d > 0))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| malformed(n, "bad shape"))?;
                let offset = parse_field(n, f.next(), "offset")?;
                let elements: usize = parse_field(n, f.next(), "element count")?;
                if shape.iter().product::<usize>() != elements {
                    return Err(malformed(n, format!("shape of `{key}` does not match its element count")));
                }
                out.entries.push(ManifestEntry {
                    key,
                    shape,
                    offset,
                    elements,
                });
            }
            Some(other) => return Err(malformed(n, format!("unknown record `{other}`"))),
        }
    }
    if out.scalar_bytes != f32::BYTES {
        return Err(CheckpointError::ScalarWidth {
            found: out.scalar_bytes,
            expected: f32::BYTES,
        }
        .into());
    }
    if !seen_rng {
        return Err(malformed(0, "missing rng state"));
    }
    let mut spans: Vec<&ManifestEntry> = out.entries.iter().collect();
    spans.sort_by_key(|e| e.offset);
    for pair in spans.windows(2) {
        if pair[0].end() > pair[1].offset {
            return Err(CheckpointError::Overlap(pair[1].key.clone()).into());
        }
    }
    if let Some(last) = spans.last() {
        if last.end() > out.blob_bytes {
            return Err(malformed(0, format!("`{}` runs past the declared blob size", last.key)));
        }
    }
    Ok(out)
}

/// Loads the tensors named by `entries` into a model and its Adam moments.
fn restore_model<M: Module<f32>>(
    model: &mut M,
    adam: &mut AdamState<f32>,
    entries: &mut BTreeMap<String, (Vec<usize>, Vec<f32>)>,
) -> Result<()> {
    let mut take = |key: String, expected: &[usize]| -> Result<Tensor<f32>> {
        let (shape, data) = entries
            .remove(&key)
            .ok_or_else(|| CheckpointError::MissingParameter(key.clone()))?;
        if shape != expected {
            return Err(CheckpointError::ShapeMismatch {
                name: key,
                expected: expected.to_vec(),
                found: shape,
            }
            .into());
        }
        Tensor::new(shape, data)
    };
    let mut failure = None;
    model.visit_mut(&mut |p| {
        if failure.is_some() {
            return;
        }
        match take(format!("param/{}", p.name), p.value.shape()) {
            Ok(t) => {
                p.value = t;
                p.zero_grad();
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    for m in &mut adam.moments {
        let shape = m.m.shape().to_vec();
        m.m = take(format!("adam.m/{}", m.name), &shape)?;
        m.v = take(format!("adam.v/{}", m.name), &shape)?;
    }
    Ok(())
}

/// Rebuilds a trainer from `dir`, bit for bit as it was saved. The output
/// directory is not stored and comes back as `None`.
pub fn load_checkpoint(dir: &Path) -> Result<Trainer> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest = parse_manifest(&text)?;
    let blob_path = dir.join(BLOB_FILE);
    let blob = std::fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    if (blob.len() as u64) != manifest.blob_bytes {
        if (blob.len() as u64) < manifest.blob_bytes {
            return Err(CheckpointError::Truncated {
                expected: manifest.blob_bytes,
                actual: blob.len() as u64,
            }
            .into());
        }
        return Err(malformed(0, format!(
            "blob has {} bytes, manifest declares {}",
            blob.len(),
            manifest.blob_bytes
        )));
    }
    let mut entries = BTreeMap::new();
    for e in &manifest.entries {
        let bytes = &blob[e.offset as usize..e.end() as usize];
        let data = bytes.chunks_exact(f32::BYTES).map(f32::read_le).collect();
        if entries.insert(e.key.clone(), (e.shape.clone(), data)).is_some() {
            return Err(malformed(0, format!("`{}` listed twice", e.key)));
        }
    }

    let mut trainer = Trainer::new(manifest.config.clone())?;
    restore_model(&mut trainer.generator, &mut trainer.g_adam, &mut entries)?;
    restore_model(&mut trainer.discriminator, &mut trainer.d_adam, &mut entries)?;
    if let Some(key) = entries.keys().next() {
        let name = key.split_once('/').map_or(key.as_str(), |(_, n)| n);
        return Err(CheckpointError::UnknownParameter(name.to_string()).into());
    }
    trainer.g_adam.t = manifest.adam_steps.get("generator").copied().unwrap_or(0);
    trainer.d_adam.t = manifest.adam_steps.get("discriminator").copied().unwrap_or(0);
    let mut rng = ChaCha8Rng::from_seed(manifest.rng_seed);
    rng.set_stream(manifest.rng_stream);
    rng.set_word_pos(manifest.rng_word_pos);
    trainer.rng = rng;
    trainer.step = manifest.step;
    trainer.epoch = manifest.epoch;
    Ok(trainer)
}

/// Just the generator of a checkpoint.
pub fn load_generator(dir: &Path) -> Result<Generator<f32>> {
    Ok(load_checkpoint(dir)?.generator)
}
