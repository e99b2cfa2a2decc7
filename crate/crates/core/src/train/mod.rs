//! Adversarial training over variable-size batches, with checkpoints.

mod checkpoint;
mod config;
mod trainer;

pub use checkpoint::{
    load_checkpoint, load_generator, parse_manifest, save_checkpoint, CheckpointManifest, ManifestEntry,
    BLOB_FILE, CHECKPOINT_VERSION, MANIFEST_FILE,
};
pub use config::{format_size, parse_resize_mode, parse_size, resize_mode_name, TrainConfig};
pub use trainer::{
    checkpoint_name, read_loss_log, LossRecord, Trainer, CHECKPOINT_DIR, LOSS_LOG, LOSS_LOG_HEADER,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::{CheckpointError, Error};
    use crate::models::{DiscriminatorConfig, GeneratorConfig};
    use crate::nn::Module;
    use crate::tensor::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 4,
            generator: GeneratorConfig {
                z_dim: 8,
                stage_channels: vec![8, 8, 4, 4, 4],
                ..GeneratorConfig::default()
            },
            discriminator: DiscriminatorConfig {
                conv_channels: vec![4, 4, 8, 8],
                ..DiscriminatorConfig::default()
            },
            seed: 3,
            ..TrainConfig::default()
        }
    }

    fn real(seed: u64, h: usize, w: usize) -> Tensor<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::<f32>::randn(&[3, 3, h, w], 0.0, 0.5, &mut rng).unwrap().map(|v| v.clamp(-1.0, 1.0))
    }

    fn flat<M: Module<f32>>(m: &M) -> Vec<f32> {
        let mut out = Vec::new();
        m.visit(&mut |p| out.extend_from_slice(p.value.data()));
        out
    }

    #[test]
    fn step_is_finite_and_moves_parameters() {
        let mut t = Trainer::new(tiny()).unwrap();
        let (g0, d0) = (flat(t.generator()), flat(t.discriminator()));
        let (d, g) = t.train_step(&real(1, 20, 28)).unwrap();
        assert!(d.is_finite() && g.is_finite());
        assert_ne!(flat(t.generator()), g0);
        assert_ne!(flat(t.discriminator()), d0);
        assert_eq!(t.step(), 1);
    }

    #[test]
    fn seeded_steps_repeat() {
        let run = || {
            let mut t = Trainer::new(tiny()).unwrap();
            (0..3).map(|i| t.train_step(&real(i, 16 + i as usize, 24)).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn checkpoint_roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Trainer::new(tiny()).unwrap();
        t.train_step(&real(5, 16, 16)).unwrap();
        save_checkpoint(&t, dir.path()).unwrap();
        let back = load_checkpoint(dir.path()).unwrap();
        assert_eq!(flat(back.generator()), flat(t.generator()));
        assert_eq!(flat(back.discriminator()), flat(t.discriminator()));
        assert_eq!(back.g_adam, t.g_adam);
        assert_eq!(back.d_adam, t.d_adam);
        assert_eq!(back.rng(), t.rng());
        assert_eq!((back.step(), back.epoch()), (t.step(), t.epoch()));
        let z = Tensor::full(&[1, 8], 0.3f32).unwrap();
        assert_eq!(
            back.generator().generate(&z, (19, 23)).unwrap(),
            t.generator().generate(&z, (19, 23)).unwrap()
        );
        let (mut a, mut b) = (t, back);
        assert_eq!(a.train_step(&real(6, 16, 20)).unwrap(), b.train_step(&real(6, 16, 20)).unwrap());
    }

    #[test]
    fn corrupt_checkpoints_fail_distinctly() {
        let dir = tempfile::tempdir().unwrap();
        let t = Trainer::new(tiny()).unwrap();
        save_checkpoint(&t, dir.path()).unwrap();
        let manifest = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let blob = std::fs::read(dir.path().join(BLOB_FILE)).unwrap();

        std::fs::write(dir.path().join(BLOB_FILE), &blob[..blob.len() - 10]).unwrap();
        let e = load_checkpoint(dir.path()).unwrap_err();
        assert!(matches!(e, Error::Checkpoint(CheckpointError::Truncated { .. })), "{e}");
        std::fs::write(dir.path().join(BLOB_FILE), &blob).unwrap();

        let v2 = manifest.replacen("anysize-checkpoint 1", "anysize-checkpoint 2", 1);
        std::fs::write(dir.path().join(MANIFEST_FILE), v2).unwrap();
        let e = load_checkpoint(dir.path()).unwrap_err();
        assert!(matches!(e, Error::Checkpoint(CheckpointError::VersionMismatch { found: 2, .. })), "{e}");

        let renamed = manifest.replace("param/generator.to_image.bias", "param/generator.extra.bias");
        std::fs::write(dir.path().join(MANIFEST_FILE), renamed).unwrap();
        let e = load_checkpoint(dir.path()).unwrap_err();
        assert!(matches!(e, Error::Checkpoint(CheckpointError::MissingParameter(_))), "{e}");

        let extra = format!("{manifest}tensor param/mystery 1 0 1\n");
        std::fs::write(dir.path().join(MANIFEST_FILE), extra).unwrap();
        let e = load_checkpoint(dir.path()).unwrap_err();
        assert!(matches!(e, Error::Checkpoint(CheckpointError::Overlap(_))), "{e}");
    }

    #[test]
    fn unknown_parameter_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let t = Trainer::new(tiny()).unwrap();
        save_checkpoint(&t, dir.path()).unwrap();
        let mut manifest = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let mut blob = std::fs::read(dir.path().join(BLOB_FILE)).unwrap();
        let offset = blob.len();
        blob.extend_from_slice(&1.0f32.to_le_bytes());
        manifest = manifest.replace(&format!("blob params.bin {offset}"), &format!("blob params.bin {}", offset + 4));
        manifest.push_str(&format!("tensor param/mystery 1 {offset} 1\n"));
        std::fs::write(dir.path().join(BLOB_FILE), blob).unwrap();
        std::fs::write(dir.path().join(MANIFEST_FILE), manifest).unwrap();
        let e = load_checkpoint(dir.path()).unwrap_err();
        assert!(matches!(e, Error::Checkpoint(CheckpointError::UnknownParameter(ref n)) if n == "mystery"), "{e}");
    }
}
