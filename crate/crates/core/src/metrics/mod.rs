//! Resize-distortion measures (MSE, PSNR, SSIM, diff maps) and the
//! inception score.

mod audit;
mod downsample;
mod inception;
mod probability;
mod quality;
mod ssim;

pub use audit::{audit_csv, audit_images, run_audit, AuditReport, AUDIT_CSV};
pub use downsample::{cubic_kernel, downsample, downsample_values, DownsampleMethod, CUBIC_A};
pub use inception::{inception_score, validate_distributions, ScoreResult, DEFAULT_SPLITS, ROW_SUM_TOLERANCE};
pub use probability::{
    probability_source, ProbabilitySource, ToyClassifier, ToyClassifierConfig, ToyClassifierReport,
    UniformClassifier,
};
pub use quality::{format_psnr, mse, psnr, psnr_from_mse, PEAK};
pub use ssim::{diff_map, gaussian_window, luma, render_diff, ssim, Ssim, SsimMap, K1, K2, SIGMA, WINDOW};
