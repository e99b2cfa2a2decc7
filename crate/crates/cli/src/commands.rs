use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use anysize::data::io::{save_png, tensor_to_rgb};
use anysize::data::{group_by_resolution, make_toy_dataset, scan_dataset, ToyConfig, TOY_CLASSES};
use anysize::metrics::{
    format_psnr, inception_score, probability_source, run_audit, ProbabilitySource, ToyClassifier,
    ToyClassifierConfig, UniformClassifier,
};
use anysize::models::{Generator, GeneratorConfig};
use anysize::train::{format_size, load_checkpoint, load_generator, resize_mode_name, TrainConfig, Trainer, MANIFEST_FILE};
use anysize::verify::{adjoint_suite, gradient_suite};
use anysize::Tensor;

use crate::args::*;
use crate::CliError;

pub const RUN_CONFIG: &str = "run-config.txt";
const AUDIT_IDENTITY_DB: f64 = 0.01;

/// Records the resolved settings of a run next to its outputs.
pub fn write_run_config(dir: &Path, command: &str, threads: usize, pairs: &[(&str, String)]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut text = format!("command={command}\nthreads={threads}\nversion={}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in pairs {
        let _ = writeln!(text, "{k}={v}");
    }
    let path = dir.join(RUN_CONFIG);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn census(a: &CensusArgs, threads: usize) -> Result<(), CliError> {
    let scan = scan_dataset(&a.data)?;
    if scan.skipped > 0 {
        log::warn!("skipped {} unreadable files", scan.skipped);
    }
    let c = &scan.census;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    c.write_csv(&a.out)?;
    let dir = a.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    write_run_config(dir, "census", threads, &[("data", path_str(&a.data)), ("out", path_str(&a.out))])?;
    println!(
        "images {}  resolutions {}  mean {:.2}  sd {:.2}  landscape {}  portrait {}  square {}  skipped {}",
        c.total_images,
        c.distinct_resolutions,
        c.mean_per_resolution,
        c.sd_per_resolution,
        c.landscape_count,
        c.portrait_count,
        c.square_count,
        scan.skipped
    );
    Ok(())
}

pub fn audit(a: &AuditArgs, threads: usize) -> Result<(), CliError> {
    let reports = run_audit(&a.reference, &a.source, &a.out)?;
    write_run_config(
        &a.out,
        "audit",
        threads,
        &[("reference", path_str(&a.reference)), ("source", path_str(&a.source)), ("out", path_str(&a.out))],
    )?;
    println!("{:<8} {:>12} {:>10} {:>9}", "method", "mse", "psnr_db", "ssim");
    let mut broken = Vec::new();
    for r in &reports {
        println!("{:<8} {:>12.4} {:>10} {:>9.6}", r.method.name(), r.mse, format_psnr(r.psnr_db), r.ssim);
        if r.identity_gap() > AUDIT_IDENTITY_DB {
            broken.push(r.method.name());
        }
    }
    if !broken.is_empty() {
        return Err(CliError::Verification(format!("PSNR/MSE identity broken for {broken:?}")));
    }
    Ok(())
}

pub fn make_toy(a: &MakeToyArgs, threads: usize) -> Result<(), CliError> {
    let cfg = ToyConfig {
        count: a.count,
        min_size: a.min_size,
        max_size: a.max_size,
        size_step: a.size_step,
        seed: a.seed,
    };
    let manifest = make_toy_dataset(&a.out, &cfg)?;
    write_run_config(
        &a.out,
        "make-toy",
        threads,
        &[
            ("out", path_str(&a.out)),
            ("count", a.count.to_string()),
            ("min_size", a.min_size.to_string()),
            ("max_size", a.max_size.to_string()),
            ("size_step", a.size_step.to_string()),
            ("seed", a.seed.to_string()),
        ],
    )?;
    println!("wrote {} images to {}", manifest.entries.len(), a.out.display());
    Ok(())
}

fn train_overrides(a: &TrainArgs) -> Vec<(&'static str, String)> {
    let mut v = Vec::new();
    let mut put = |k: &'static str, val: Option<String>| {
        if let Some(val) = val {
            v.push((k, val));
        }
    };
    put("epochs", a.epochs.map(|x| x.to_string()));
    put("batch_size", a.batch_size.map(|x| x.to_string()));
    put("max_size", a.max_size.map(|x| x.to_string()));
    put("seed", a.seed.map(|x| x.to_string()));
    put("checkpoint_every", a.checkpoint_every.map(|x| x.to_string()));
    put("z_dim", a.z_dim.map(|x| x.to_string()));
    put("base", a.base.clone());
    put("gen_channels", a.gen_channels.clone());
    put("resize_mode", a.resize_mode.clone());
    put("disc_channels", a.disc_channels.clone());
    put("disc_min_input", a.disc_min_input.clone());
    put("lr", a.lr.map(|x| x.to_string()));
    put("beta1", a.beta1.map(|x| x.to_string()));
    put("beta2", a.beta2.map(|x| x.to_string()));
    put("eps", a.eps.map(|x| x.to_string()));
    v
}

pub fn train(a: &TrainArgs, threads: usize) -> Result<(), CliError> {
    let overrides = train_overrides(a);
    let mut trainer = match &a.resume {
        Some(dir) => {
            let mut t = load_checkpoint(dir)?;
            for (k, v) in &overrides {
                match *k {
                    "epochs" => t.set_epochs(v.parse().expect("validated by clap"))?,
                    "checkpoint_every" => t.set_checkpoint_every(v.parse().expect("validated by clap"))?,
                    _ => {
                        let mut probe = t.config().clone();
                        probe.set(k, v).map_err(|e| CliError::Usage(e.to_string()))?;
                        if probe.to_pairs() != t.config().to_pairs() {
                            log::warn!("--{} ignored when resuming; the checkpoint's value is kept", k.replace('_', "-"));
                        }
                    }
                }
            }
            log::info!("resuming from {} at epoch {}, step {}", dir.display(), t.epoch(), t.step());
            t
        }
        None => {
            let mut cfg = TrainConfig::default();
            for (k, v) in &overrides {
                cfg.set(k, v).map_err(|e| CliError::Usage(e.to_string()))?;
            }
            cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            Trainer::new(cfg)?
        }
    };
    trainer.set_out_dir(Some(a.out.clone()));
    let mut pairs: Vec<(&str, String)> = vec![("data", path_str(&a.data)), ("out", path_str(&a.out))];
    if let Some(r) = &a.resume {
        pairs.push(("resume", path_str(r)));
    }
    pairs.extend(trainer.config().to_pairs());
    write_run_config(&a.out, "train", threads, &pairs)?;

    let scan = scan_dataset(&a.data)?;
    let groups = group_by_resolution(&scan.records, trainer.config().max_size)?;
    log::info!(
        "{} images in {} resolution groups; training epochs {}..{}",
        scan.records.len(),
        groups.len(),
        trainer.epoch() + 1,
        trainer.config().epochs
    );
    let records = trainer.train(&groups, None)?;
    if let Some(last) = records.last() {
        println!(
            "trained to epoch {} (step {}): last d_loss {} g_loss {}",
            trainer.epoch(),
            trainer.step(),
            last.d_loss,
            last.g_loss
        );
    } else {
        println!("nothing to do: checkpoint already at epoch {}", trainer.epoch());
    }
    Ok(())
}

fn load_source(src: &GeneratorSource) -> Result<Generator<f32>, CliError> {
    if src.min_size == 0 || src.min_size > src.max_size {
        return Err(CliError::Usage(format!(
            "--min-size {} must be at least 1 and at most --max-size {}",
            src.min_size, src.max_size
        )));
    }
    match &src.checkpoint {
        Some(dir) => {
            if !dir.join(MANIFEST_FILE).is_file() {
                return Err(CliError::Data(anyhow::anyhow!("no checkpoint found at {}", dir.display())));
            }
            Ok(load_generator(dir)?)
        }
        None => {
            log::warn!("no --checkpoint given; using an untrained generator (seed {})", src.seed);
            let mut rng = ChaCha8Rng::seed_from_u64(src.seed);
            Ok(Generator::new(GeneratorConfig::default(), &mut rng)?)
        }
    }
}

fn source_pairs(src: &GeneratorSource) -> Vec<(&'static str, String)> {
    vec![
        ("checkpoint", src.checkpoint.as_deref().map(path_str).unwrap_or_else(|| "none".into())),
        ("seed", src.seed.to_string()),
        ("min_size", src.min_size.to_string()),
        ("max_size", src.max_size.to_string()),
    ]
}

/// Places images left to right on a white canvas, top-aligned.
pub fn contact_sheet(images: &[RgbImage], gap: u32) -> RgbImage {
    let width = images.iter().map(|i| i.width()).sum::<u32>() + gap * (images.len() as u32 + 1);
    let height = images.iter().map(|i| i.height()).max().unwrap_or(0) + 2 * gap;
    let mut sheet = RgbImage::from_pixel(width.max(1), height.max(1), Rgb([255, 255, 255]));
    let mut x = gap;
    for img in images {
        image::imageops::replace(&mut sheet, img, x as i64, gap as i64);
        x += img.width() + gap;
    }
    sheet
}

fn random_size(rng: &mut ChaCha8Rng, src: &GeneratorSource) -> (usize, usize) {
    (
        rng.random_range(src.min_size..=src.max_size),
        rng.random_range(src.min_size..=src.max_size),
    )
}

pub fn generate(a: &GenerateArgs, threads: usize) -> Result<(), CliError> {
    let g = load_source(&a.source)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.source.seed);
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut pairs = vec![("out", path_str(&a.out))];
    let mut written = Vec::new();
    match a.mode {
        GenerateMode::Random => {
            if a.sizes.is_some() {
                log::warn!("--sizes is ignored in random mode");
            }
            pairs.push(("mode", "random".into()));
            pairs.push(("count", a.count.to_string()));
            for i in 0..a.count {
                let size = random_size(&mut rng, &a.source);
                let z = g.sample_latent(1, &mut rng)?;
                let img = tensor_to_rgb(&g.generate(&z, size)?, 0)?;
                let path = a.out.join(format!("sample_{i:03}_{}.png", format_size(size)));
                save_png(&img, &path)?;
                written.push(path);
            }
        }
        GenerateMode::FixedZ => {
            let sizes = a
                .sizes
                .as_ref()
                .ok_or_else(|| CliError::Usage("--mode fixed-z needs --sizes HxW,HxW,..".into()))?;
            pairs.push(("mode", "fixed-z".into()));
            pairs.push(("sizes", sizes.0.iter().map(|&s| format_size(s)).collect::<Vec<_>>().join(",")));
            let z = g.sample_latent(1, &mut rng)?;
            let z_text: Vec<String> = z.data().iter().map(|v| v.to_string()).collect();
            let z_path = a.out.join("z.txt");
            std::fs::write(&z_path, z_text.join(",") + "\n").with_context(|| format!("writing {}", z_path.display()))?;
            let mut images = Vec::new();
            for &size in &sizes.0 {
                let img = tensor_to_rgb(&g.generate(&z, size)?, 0)?;
                let path = a.out.join(format!("fixed_{}.png", format_size(size)));
                save_png(&img, &path)?;
                written.push(path);
                images.push(img);
            }
            let sheet = a.out.join("contact_sheet.png");
            save_png(&contact_sheet(&images, 4), &sheet)?;
            written.push(sheet);
        }
    }
    pairs.extend(source_pairs(&a.source));
    write_run_config(&a.out, "generate", threads, &pairs)?;
    for p in &written {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs, threads: usize) -> Result<(), CliError> {
    if a.splits == 0 || a.samples < a.splits {
        return Err(CliError::Usage(format!(
            "--samples ({}) must be at least --splits ({}), which must be positive",
            a.samples, a.splits
        )));
    }
    let classifier: Box<dyn ProbabilitySource> = match a.classifier {
        ClassifierKind::Uniform => Box::new(UniformClassifier { classes: TOY_CLASSES }),
        ClassifierKind::Toy => {
            let dir = a
                .toy_data
                .as_ref()
                .ok_or_else(|| CliError::Usage("--classifier toy needs --toy-data DIR".into()))?;
            let (c, report) = ToyClassifier::train(dir, &ToyClassifierConfig::default())?;
            println!(
                "toy classifier: train accuracy {:.3} ({} images), held-out accuracy {:.3} ({} images)",
                report.train_accuracy, report.train_count, report.heldout_accuracy, report.heldout_count
            );
            Box::new(c)
        }
    };
    let g = load_source(&a.source)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.source.seed);
    let mut images: Vec<Tensor<f32>> = Vec::with_capacity(a.samples);
    for _ in 0..a.samples {
        let size = random_size(&mut rng, &a.source);
        let z = g.sample_latent(1, &mut rng)?;
        images.push(g.generate(&z, size)?);
    }
    let probs = probability_source(&images, classifier.as_ref())?;
    let score = inception_score(&probs, a.splits)?;
    let kind = match a.classifier {
        ClassifierKind::Uniform => "uniform",
        ClassifierKind::Toy => "toy",
    };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let csv = a.out.join("inception.csv");
    std::fs::write(
        &csv,
        format!(
            "classifier,mean,sd,splits,samples\n{kind},{:.9},{:.9},{},{}\n",
            score.mean, score.sd, score.splits, score.samples
        ),
    )
    .with_context(|| format!("writing {}", csv.display()))?;
    let mut pairs = vec![
        ("out", path_str(&a.out)),
        ("classifier", kind.to_string()),
        ("toy_data", a.toy_data.as_deref().map(path_str).unwrap_or_else(|| "none".into())),
        ("samples", a.samples.to_string()),
        ("splits", a.splits.to_string()),
    ];
    pairs.extend(source_pairs(&a.source));
    write_run_config(&a.out, "evaluate", threads, &pairs)?;
    println!("inception score {:.4} ± {:.4} ({} samples, {} splits)", score.mean, score.sd, score.samples, score.splits);
    Ok(())
}

pub fn gradcheck(a: &GradcheckArgs, threads: usize) -> Result<(), CliError> {
    if a.cases == 0 {
        return Err(CliError::Usage("--cases must be at least 1".into()));
    }
    let layers = gradient_suite(a.cases, a.seed)?;
    let adjoints = adjoint_suite(a.cases.max(50), a.seed)?;
    let mut csv = String::from("check,cases,max_rel_error,status\n");
    let mut failed = Vec::new();
    println!("{:<28} {:>6} {:>14}  status", "check", "cases", "max_rel_error");
    let mut row = |name: String, cases: usize, err: f64| {
        let ok = err.is_finite() && err < a.threshold;
        let status = if ok { "pass" } else { "FAIL" };
        println!("{name:<28} {cases:>6} {err:>14.3e}  {status}");
        let _ = writeln!(csv, "{name},{cases},{err:e},{status}");
        if !ok {
            failed.push(name);
        }
    };
    for r in &layers {
        row(r.layer.to_string(), r.cases, r.max_rel_error);
    }
    for r in &adjoints {
        let mode = resize_mode_name(r.mode);
        row(format!("adjoint_{mode}"), r.cases, r.max_rel_error);
    }
    if let Some(out) = &a.out {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let path = out.join("gradcheck.csv");
        std::fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
        write_run_config(
            out,
            "gradcheck",
            threads,
            &[("cases", a.cases.to_string()), ("threshold", a.threshold.to_string()), ("seed", a.seed.to_string())],
        )?;
    }
    if !failed.is_empty() {
        bail_verification(&failed, a.threshold)?;
    }
    Ok(())
}

fn bail_verification(failed: &[String], threshold: f64) -> Result<(), CliError> {
    Err(CliError::Verification(format!(
        "{} check(s) at or above {threshold:e}: {}",
        failed.len(),
        failed.join(", ")
    )))
}
