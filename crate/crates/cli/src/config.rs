//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use qgan_core::embedding::EmbeddingKind;
use qgan_core::models::{SwapTestKind, Topology};
use qgan_core::training::{DiscOutput, GeneratorLoss, NoiseKind, OptimizerKind, TrainConfig};

/// Every recognised key with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("arch", "iqgan"),
    ("dataset", "digits"),
    ("classes", "3"),
    ("pca", "auto"),
    ("downsample", "false"),
    ("max_samples", "0"),
    ("qubits", "0"),
    ("depth", "2"),
    ("topology", "chain"),
    ("embedding", "auto"),
    ("swap_test", "ancilla"),
    ("trainable_encoder", "false"),
    ("epochs", "10"),
    ("batch_size", "8"),
    ("learning_rate", "0.01"),
    ("optimizer", "adam"),
    ("beta1", "0.9"),
    ("beta2", "0.999"),
    ("eps", "1e-8"),
    ("seed", "0"),
    ("log_every", "40"),
    ("noise", "none"),
    ("init_scale", "0.1"),
    ("generator_loss", "non-saturating"),
    ("disc_output", "rescaled"),
    ("disc_steps", "1"),
    ("gen_steps", "1"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            bail!("unknown config key `{key}`");
        }
        self.values
            .insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got `{pair}`"))?;
        self.set(k, v)
    }

    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line)
                .with_context(|| format!("{origin}:{}", i + 1))?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        self.merge_text(&text, &path.display().to_string())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .expect("every key has a default")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse::<T>()
            .map_err(|e| anyhow!("config key `{key}` = `{raw}`: {e}"))
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn classes(&self) -> Result<Vec<u8>> {
        let raw = self.raw("classes");
        if raw == "all" {
            return Ok((0..=255).collect());
        }
        raw.split(',')
            .map(|c| {
                c.trim()
                    .parse::<u8>()
                    .map_err(|e| anyhow!("config key `classes` = `{raw}`: {e}"))
            })
            .collect()
    }

    pub fn topology(&self) -> Result<Topology> {
        match self.raw("topology") {
            "chain" => Ok(Topology::Chain),
            "ring" => Ok(Topology::Ring),
            other => bail!("config key `topology` = `{other}`: expected chain or ring"),
        }
    }

    pub fn swap_test(&self) -> Result<SwapTestKind> {
        match self.raw("swap_test") {
            "ancilla" => Ok(SwapTestKind::Ancilla),
            "destructive" => Ok(SwapTestKind::Destructive),
            other => bail!("config key `swap_test` = `{other}`: expected ancilla or destructive"),
        }
    }

    /// `None` means choose from the preprocessing (angle after PCA, amplitude on raw pixels).
    pub fn embedding(&self) -> Result<Option<EmbeddingKind>> {
        match self.raw("embedding") {
            "auto" => Ok(None),
            "angle" => Ok(Some(EmbeddingKind::Angle)),
            "amplitude" => Ok(Some(EmbeddingKind::Amplitude)),
            other => bail!("config key `embedding` = `{other}`: expected auto, angle or amplitude"),
        }
    }

    pub fn noise(&self) -> Result<NoiseKind> {
        parse_noise(self.raw("noise")).map_err(|e| anyhow!("config key `noise`: {e}"))
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let optimizer = match self.raw("optimizer") {
            "sgd" => OptimizerKind::Sgd,
            "adam" => OptimizerKind::Adam {
                beta1: self.get("beta1")?,
                beta2: self.get("beta2")?,
                eps: self.get("eps")?,
            },
            other => bail!("config key `optimizer` = `{other}`: expected sgd or adam"),
        };
        let generator_loss = match self.raw("generator_loss") {
            "non-saturating" => GeneratorLoss::NonSaturating,
            "saturating" => GeneratorLoss::Saturating,
            other => bail!(
                "config key `generator_loss` = `{other}`: expected non-saturating or saturating"
            ),
        };
        let disc_output = match self.raw("disc_output") {
            "rescaled" => DiscOutput::Rescaled,
            "raw" => DiscOutput::Raw,
            other => bail!("config key `disc_output` = `{other}`: expected rescaled or raw"),
        };
        let cfg = TrainConfig {
            epochs: self.get("epochs")?,
            batch_size: self.get("batch_size")?,
            learning_rate: self.get("learning_rate")?,
            optimizer,
            seed: self.get("seed")?,
            log_every_batches: self.get("log_every")?,
            noise: self.noise()?,
            init_scale: self.get("init_scale")?,
            generator_loss,
            disc_output,
            disc_steps: self.get("disc_steps")?,
            gen_steps: self.get("gen_steps")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `none`, `uniform01` or `gaussian:<sigma>`.
pub fn parse_noise(s: &str) -> Result<NoiseKind> {
    match s {
        "none" => Ok(NoiseKind::None),
        "uniform01" => Ok(NoiseKind::Uniform01),
        _ => match s.strip_prefix("gaussian:") {
            Some(sigma) => {
                let sigma: f64 = sigma
                    .parse()
                    .map_err(|e| anyhow!("bad sigma `{sigma}`: {e}"))?;
                Ok(NoiseKind::Gaussian { sigma })
            }
            None => bail!("`{s}`: expected none, uniform01 or gaussian:<sigma>"),
        },
    }
}
