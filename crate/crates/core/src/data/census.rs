use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::error::{Error, Result};

/// One image file and its native dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRecord {
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
}

/// Per-resolution statistics of a corpus: how many images, how many
/// distinct resolutions, the mean and population SD of images per
/// resolution, and how many resolutions are landscape, portrait or square.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionCensus {
    pub total_images: usize,
    pub distinct_resolutions: usize,
    pub mean_per_resolution: f64,
    pub sd_per_resolution: f64,
    pub landscape_count: usize,
    pub portrait_count: usize,
    pub square_count: usize,
    /// `(width, height) -> image count`, empty for summary-only rows.
    pub per_resolution: BTreeMap<(u32, u32), usize>,
}

impl ResolutionCensus {
    pub fn from_dims(dims: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut per_resolution = BTreeMap::new();
        for d in dims {
            *per_resolution.entry(d).or_insert(0usize) += 1;
        }
        Self::from_counts(per_resolution)
    }

    pub fn from_counts(per_resolution: BTreeMap<(u32, u32), usize>) -> Result<Self> {
        if per_resolution.is_empty() {
            return Err(Error::InvalidArgument("census needs at least one image".into()));
        }
        let total_images: usize = per_resolution.values().sum();
        let distinct = per_resolution.len();
        let mean = total_images as f64 / distinct as f64;
        let var = per_resolution
            .values()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / distinct as f64;
        let mut census = ResolutionCensus {
            total_images,
            distinct_resolutions: distinct,
            mean_per_resolution: mean,
            sd_per_resolution: var.sqrt(),
            landscape_count: 0,
            portrait_count: 0,
            square_count: 0,
            per_resolution,
        };
        for &(w, h) in census.per_resolution.keys() {
            match w.cmp(&h) {
                std::cmp::Ordering::Greater => census.landscape_count += 1,
                std::cmp::Ordering::Less => census.portrait_count += 1,
                std::cmp::Ordering::Equal => census.square_count += 1,
            }
        }
        Ok(census)
    }

    /// A summary row without per-resolution detail, e.g. a published table row.
    pub fn summary(
        total_images: usize,
        distinct_resolutions: usize,
        mean_per_resolution: f64,
        sd_per_resolution: f64,
        orientation: (usize, usize, usize),
    ) -> Self {
        ResolutionCensus {
            total_images,
            distinct_resolutions,
            mean_per_resolution,
            sd_per_resolution,
            landscape_count: orientation.0,
            portrait_count: orientation.1,
            square_count: orientation.2,
            per_resolution: BTreeMap::new(),
        }
    }

    /// Violated identities: orientation counts must sum to the resolution
    /// count and `total / resolutions` must match the mean within `mean_tolerance`.
    pub fn identity_errors(&self, mean_tolerance: f64) -> Vec<String> {
        let mut errors = Vec::new();
        let oriented = self.landscape_count + self.portrait_count + self.square_count;
        if oriented != self.distinct_resolutions {
            errors.push(format!(
                "landscape + portrait + square = {oriented}, resolutions = {}",
                self.distinct_resolutions
            ));
        }
        if self.distinct_resolutions == 0 {
            errors.push("zero resolutions".into());
        } else {
            let mean = self.total_images as f64 / self.distinct_resolutions as f64;
            if (mean - self.mean_per_resolution).abs() > mean_tolerance {
                errors.push(format!(
                    "total / resolutions = {mean:.4}, reported mean {}",
                    self.mean_per_resolution
                ));
            }
        }
        if !self.per_resolution.is_empty() {
            let counted: usize = self.per_resolution.values().sum();
            if counted != self.total_images || self.per_resolution.len() != self.distinct_resolutions {
                errors.push("per-resolution table disagrees with totals".into());
            }
        }
        errors
    }

    /// `width,height,count` rows, a blank line, then the summary header and row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("width,height,count\n");
        for (&(w, h), &c) in &self.per_resolution {
            let _ = writeln!(out, "{w},{h},{c}");
        }
        out.push('\n');
        out.push_str(
            "total_images,distinct_resolutions,mean_per_resolution,sd_per_resolution,landscape,portrait,square\n",
        );
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{},{},{}",
            self.total_images,
            self.distinct_resolutions,
            self.mean_per_resolution,
            self.sd_per_resolution,
            self.landscape_count,
            self.portrait_count,
            self.square_count
        );
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub records: Vec<ImageRecord>,
    pub census: ResolutionCensus,
    /// Image-named files whose headers could not be decoded.
    pub skipped: usize,
}

pub(crate) fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}

/// Recursively finds PNG and JPEG files under `dir` (in path order) and
/// builds the census over their native dimensions.
pub fn scan_dataset(dir: &Path) -> Result<ScanResult> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a readable directory"),
        ));
    }
    let mut records = Vec::new();
    let mut skipped = 0;
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                log::warn!("skipping unreadable entry: {e}");
                skipped += 1;
                continue;
            }
        };
        if !entry.file_type().is_file() || !is_image_path(entry.path()) {
            continue;
        }
        match image::image_dimensions(entry.path()) {
            Ok((width, height)) if width > 0 && height > 0 => records.push(ImageRecord {
                path: entry.path().to_path_buf(),
                width,
                height,
            }),
            Ok(_) => skipped += 1,
            Err(e) => {
                log::warn!("skipping {}: {e}", entry.path().display());
                skipped += 1;
            }
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset(dir.to_path_buf()));
    }
    if skipped > 0 {
        log::warn!("{skipped} files could not be read");
    }
    let census = ResolutionCensus::from_dims(records.iter().map(|r| (r.width, r.height)))?;
    Ok(ScanResult {
        records,
        census,
        skipped,
    })
}
