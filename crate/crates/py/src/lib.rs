//! Python bindings. Tensors cross the boundary as a flat `list[float]`
//! plus a shape tuple, images as file paths.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use anysize::data::io::{load_rgb, save_png, tensor_to_rgb};
use anysize::data::{group_by_resolution, make_toy_dataset, scan_dataset, ToyConfig};
use anysize::metrics::{self, DownsampleMethod};
use anysize::models::{DiscriminatorConfig, GeneratorConfig};
use anysize::train::{load_generator, parse_resize_mode, TrainConfig, Trainer};
use anysize::{resize as rs, Error, ResizeSpec, Tensor};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(m) => PyValueError::new_err(m),
        e @ (Error::Shape(_) | Error::InputTooSmall { .. } | Error::InvalidDistribution(_)) => {
            PyValueError::new_err(e.to_string())
        }
        e @ (Error::Io { .. } | Error::EmptyDataset(_) | Error::Image { .. }) => PyIOError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

type Flat = (Vec<f32>, Vec<usize>);

fn tensor(data: Vec<f32>, shape: Vec<usize>) -> PyResult<Tensor<f32>> {
    Tensor::new(shape, data).map_err(to_py)
}

fn flat(t: Tensor<f32>) -> Flat {
    let shape = t.shape().to_vec();
    (t.into_data(), shape)
}

fn mode(name: &str) -> PyResult<anysize::ResizeMode> {
    parse_resize_mode(name).map_err(to_py)
}

/// Aspect-preserving cap of the longer side; returns `(width, height)`.
#[pyfunction]
#[pyo3(signature = (width, height, max_size = 128))]
fn cap_resize(width: u32, height: u32, max_size: u32) -> PyResult<(u32, u32)> {
    if width == 0 || height == 0 || max_size == 0 {
        return Err(PyValueError::new_err("width, height and max_size must be at least 1"));
    }
    Ok(anysize::data::cap_resize(width, height, max_size))
}

/// The five `(height, width)` stage sizes from `base` to `target`.
#[pyfunction]
fn compute_schedule(base: (usize, usize), target: (usize, usize)) -> PyResult<Vec<(usize, usize)>> {
    let s = anysize::schedule::compute_schedule(base, target).map_err(to_py)?;
    Ok(s.stages.to_vec())
}

/// Resizes an NCHW tensor to `(out_h, out_w)`.
#[pyfunction]
#[pyo3(signature = (data, shape, out_h, out_w, mode_name = "bilinear"))]
fn resize(data: Vec<f32>, shape: Vec<usize>, out_h: usize, out_w: usize, mode_name: &str) -> PyResult<Flat> {
    let x = tensor(data, shape)?;
    Ok(flat(rs::resize(&x, out_h, out_w, mode(mode_name)?).map_err(to_py)?))
}

/// Gradient of `resize` with respect to its input of spatial size `(src_h, src_w)`.
#[pyfunction]
#[pyo3(signature = (grad, shape, src_h, src_w, mode_name = "bilinear"))]
fn resize_backward(grad: Vec<f32>, shape: Vec<usize>, src_h: usize, src_w: usize, mode_name: &str) -> PyResult<Flat> {
    let g = tensor(grad, shape)?;
    let (_, _, oh, ow) = g.dims4().map_err(to_py)?;
    let spec = ResizeSpec::new((src_h, src_w), (oh, ow), mode(mode_name)?).map_err(to_py)?;
    Ok(flat(rs::resize_backward(&g, &spec).map_err(to_py)?))
}

#[pyclass(module = "anysize_py")]
struct Generator {
    inner: anysize::models::Generator<f32>,
}

#[pymethods]
impl Generator {
    #[new]
    #[pyo3(signature = (seed = 0, z_dim = 100, stage_channels = None, base = (4, 4), resize_mode = "bilinear"))]
    fn new(
        seed: u64,
        z_dim: usize,
        stage_channels: Option<Vec<usize>>,
        base: (usize, usize),
        resize_mode: &str,
    ) -> PyResult<Self> {
        let defaults = GeneratorConfig::default();
        let config = GeneratorConfig {
            z_dim,
            base,
            stage_channels: stage_channels.unwrap_or(defaults.stage_channels),
            resize_mode: mode(resize_mode)?,
            ..defaults
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inner = anysize::models::Generator::new(config, &mut rng).map_err(to_py)?;
        Ok(Generator { inner })
    }

    /// Generator weights from a checkpoint directory.
    #[staticmethod]
    fn from_checkpoint(path: PathBuf) -> PyResult<Self> {
        Ok(Generator { inner: load_generator(&path).map_err(to_py)? })
    }

    #[getter]
    fn z_dim(&self) -> usize {
        self.inner.config().z_dim
    }

    /// Standard normal latents, `batch x z_dim`, flattened.
    #[pyo3(signature = (batch = 1, seed = 0))]
    fn sample_latent(&self, batch: usize, seed: u64) -> PyResult<Vec<f32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.inner.sample_latent(batch, &mut rng).map_err(to_py)?.into_data())
    }

    /// Images in [-1, 1] at `(height, width)` for the flattened latents `z`.
    fn generate(&self, z: Vec<f32>, height: usize, width: usize) -> PyResult<Flat> {
        let zd = self.inner.config().z_dim;
        if z.is_empty() || z.len() % zd != 0 {
            return Err(PyValueError::new_err(format!("latent length {} is not a multiple of z_dim {zd}", z.len())));
        }
        let z = tensor(z.clone(), vec![z.len() / zd, zd])?;
        Ok(flat(self.inner.generate(&z, (height, width)).map_err(to_py)?))
    }

    /// Stage sizes used to reach `(height, width)`.
    fn schedule(&self, height: usize, width: usize) -> PyResult<Vec<(usize, usize)>> {
        Ok(self.inner.schedule((height, width)).map_err(to_py)?.stages.to_vec())
    }

    /// Writes the first image for latent `z` as a PNG.
    fn save_png(&self, z: Vec<f32>, height: usize, width: usize, path: PathBuf) -> PyResult<()> {
        let zd = self.inner.config().z_dim;
        if z.len() != zd {
            return Err(PyValueError::new_err(format!("expected {zd} latent values, got {}", z.len())));
        }
        let z = tensor(z, vec![1, zd])?;
        let img = self.inner.generate(&z, (height, width)).map_err(to_py)?;
        save_png(&tensor_to_rgb(&img, 0).map_err(to_py)?, &path).map_err(to_py)
    }
}

#[pyclass(module = "anysize_py")]
struct Discriminator {
    inner: anysize::models::Discriminator<f32>,
}

#[pymethods]
impl Discriminator {
    #[new]
    #[pyo3(signature = (seed = 0, conv_channels = None))]
    fn new(seed: u64, conv_channels: Option<Vec<usize>>) -> PyResult<Self> {
        let defaults = DiscriminatorConfig::default();
        let config = DiscriminatorConfig {
            conv_channels: conv_channels.unwrap_or(defaults.conv_channels),
            ..defaults
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inner = anysize::models::Discriminator::new(config, &mut rng).map_err(to_py)?;
        Ok(Discriminator { inner })
    }

    /// Probability of "real" for each image of an NCHW batch.
    fn classify(&self, data: Vec<f32>, shape: Vec<usize>) -> PyResult<Vec<f32>> {
        let x = tensor(data, shape)?;
        Ok(self.inner.classify(&x).map_err(to_py)?.into_data())
    }
}

#[pyfunction]
fn psnr_from_mse(mse: f64) -> f64 {
    metrics::psnr_from_mse(mse)
}

/// `(mse, psnr_db, ssim)` between two same-sized image files.
#[pyfunction]
fn compare(a: PathBuf, b: PathBuf) -> PyResult<(f64, f64, f64)> {
    let (a, b) = (load_rgb(&a).map_err(to_py)?, load_rgb(&b).map_err(to_py)?);
    let mse = metrics::mse(&a, &b).map_err(to_py)?;
    let ssim = metrics::ssim(&a, &b).map_err(to_py)?.score;
    Ok((mse, metrics::psnr_from_mse(mse), ssim))
}

/// Resamples an image file to `(width, height)` and writes a PNG.
#[pyfunction]
#[pyo3(signature = (source, width, height, out, method = "area"))]
fn downsample(source: PathBuf, width: u32, height: u32, out: PathBuf, method: &str) -> PyResult<()> {
    let m: DownsampleMethod = method.parse().map_err(to_py)?;
    let img = load_rgb(&source).map_err(to_py)?;
    let small = metrics::downsample(&img, width, height, m).map_err(to_py)?;
    save_png(&small, &out).map_err(to_py)
}

/// Downsamples `source` to `reference`'s size with every method and scores
/// each; writes audit.csv and diff maps to `out_dir`.
#[pyfunction]
fn audit<'py>(py: Python<'py>, reference: PathBuf, source: PathBuf, out_dir: PathBuf) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let reports = metrics::run_audit(&reference, &source, &out_dir).map_err(to_py)?;
    reports
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("method", r.method.name())?;
            d.set_item("mse", r.mse)?;
            d.set_item("psnr", r.psnr_db)?;
            d.set_item("ssim", r.ssim)?;
            d.set_item("diff_map", r.diff_map.as_ref().map(|p| p.display().to_string()))?;
            Ok(d)
        })
        .collect()
}

/// `(mean, sd)` of the inception score over row-stochastic `probs`.
#[pyfunction]
#[pyo3(signature = (probs, splits = 10))]
fn inception_score(probs: Vec<Vec<f64>>, splits: usize) -> PyResult<(f64, f64)> {
    let rows = probs.len();
    let cols = probs.first().map_or(0, Vec::len);
    if probs.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("rows differ in length"));
    }
    let t = Tensor::new(vec![rows, cols], probs.concat()).map_err(to_py)?;
    let s = metrics::inception_score(&t, splits).map_err(to_py)?;
    Ok((s.mean, s.sd))
}

/// Resolution census of an image directory.
#[pyfunction]
fn census<'py>(py: Python<'py>, data: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let scan = scan_dataset(&data).map_err(to_py)?;
    let c = &scan.census;
    let d = PyDict::new(py);
    d.set_item("total_images", c.total_images)?;
    d.set_item("distinct_resolutions", c.distinct_resolutions)?;
    d.set_item("mean_per_resolution", c.mean_per_resolution)?;
    d.set_item("sd_per_resolution", c.sd_per_resolution)?;
    d.set_item("landscape", c.landscape_count)?;
    d.set_item("portrait", c.portrait_count)?;
    d.set_item("square", c.square_count)?;
    d.set_item("skipped", scan.skipped)?;
    let per: Vec<((u32, u32), usize)> = c.per_resolution.iter().map(|(&k, &v)| (k, v)).collect();
    d.set_item("per_resolution", per)?;
    Ok(d)
}

/// Writes the synthetic ellipse corpus; returns the number of images.
#[pyfunction]
#[pyo3(signature = (out, count = 100, min_size = 32, max_size = 64, size_step = 8, seed = 7))]
fn make_toy(out: PathBuf, count: usize, min_size: u32, max_size: u32, size_step: u32, seed: u64) -> PyResult<usize> {
    let cfg = ToyConfig { count, min_size, max_size, size_step, seed };
    Ok(make_toy_dataset(&out, &cfg).map_err(to_py)?.entries.len())
}

/// Trains on `data`, writing logs and checkpoints under `out`. `config`
/// holds the same keys as the command line (e.g. `{"epochs": "2"}`).
/// Returns `(step, epoch, height, width, d_loss, g_loss)` rows.
#[pyfunction]
#[pyo3(signature = (data, out, config = None))]
fn train(
    data: PathBuf,
    out: PathBuf,
    config: Option<Vec<(String, String)>>,
) -> PyResult<Vec<(u64, usize, usize, usize, f32, f32)>> {
    let mut cfg = TrainConfig::default();
    for (k, v) in config.unwrap_or_default() {
        cfg.set(&k, &v).map_err(to_py)?;
    }
    cfg.out_dir = Some(out);
    let scan = scan_dataset(&data).map_err(to_py)?;
    let groups = group_by_resolution(&scan.records, cfg.max_size).map_err(to_py)?;
    let mut t = Trainer::new(cfg).map_err(to_py)?;
    let records = t.train(&groups, None).map_err(to_py)?;
    Ok(records.iter().map(|r| (r.step, r.epoch, r.height, r.width, r.d_loss, r.g_loss)).collect())
}

#[pymodule]
fn anysize_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(cap_resize, m)?)?;
    m.add_function(wrap_pyfunction!(compute_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(resize, m)?)?;
    m.add_function(wrap_pyfunction!(resize_backward, m)?)?;
    m.add_function(wrap_pyfunction!(psnr_from_mse, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(downsample, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(inception_score, m)?)?;
    m.add_function(wrap_pyfunction!(census, m)?)?;
    m.add_function(wrap_pyfunction!(make_toy, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_class::<Generator>()?;
    m.add_class::<Discriminator>()?;
    Ok(())
}
