//! Pipeline configuration: a flat TOML file of `key = value` lines. Every key
//! has a matching `--key-name` flag, and `GROUND_BRIDGE_SEED` overrides the
//! file's `seed` (a `--seed` flag still wins over the variable).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bridge::{Curriculum, GroundConfig, Preset, RidgeConfig, RidgeObjective};
use crate::datasim::{GeneratorConfig, SplitConfig};
use crate::error::{Error, Result};
use crate::lexicon::{Corpus, SynthSpec};
use crate::seed::derive_seed;
use crate::trainer::{MsLossConfig, TrainConfig};

pub const SEED_ENV: &str = "GROUND_BRIDGE_SEED";

macro_rules! config_keys {
    ($( $(#[doc = $doc:literal])* $([$($arg:tt)*])? $name:ident : $ty:ty = $default:expr ),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct PipelineConfig {
            $( $(#[doc = $doc])* pub $name: $ty, )*
        }

        impl Default for PipelineConfig {
            fn default() -> Self {
                PipelineConfig { $( $name: $default, )* }
            }
        }

        /// Flag overrides, one per configuration key.
        #[cfg(feature = "cli")]
        #[derive(Debug, Clone, Default, clap::Args)]
        pub struct ConfigOverrides {
            $( $(#[doc = $doc])* #[arg(long, global = true $(, $($arg)*)?)] pub $name: Option<$ty>, )*
        }

        #[cfg(feature = "cli")]
        impl ConfigOverrides {
            pub fn apply(&self, config: &mut PipelineConfig) {
                $( if let Some(v) = &self.$name { config.$name = v.clone(); } )*
            }
        }

        /// Every configuration key, in documentation order.
        pub const CONFIG_KEYS: &[&str] = &[$(stringify!($name)),*];
    };
}

config_keys! {
    /// Global seed; every stage derives its own seed from it by name.
    seed: u64 = 7,
    /// Episodes generated per evaluation class.
    samples_per_class: usize = 700,
    noise_scale: f64 = 0.05,
    placement_tolerance: f64 = 0.25,
    train_per_class: usize = 500,
    test_per_class: usize = 100,
    /// Held-out samples per class that populate the object index.
    index_per_class: usize = 50,
    epochs: usize = 20,
    /// Samples per class in each training batch.
    batch_per_class: usize = 10,
    lr: f64 = 1e-4,
    [num_args = 0..=1, default_missing_value = "true"]
    include_type_id: bool = false,
    alpha: f64 = 2.0,
    beta: f64 = 40.0,
    lambda_thr: f64 = 0.5,
    epsilon_margin: f64 = 0.1,
    /// Neighbours for the object confusion matrix.
    knn_k: usize = 10,
    synth_dim: usize = 768,
    eta: f64 = 0.5,
    sigma: f64 = 1.25,
    concept_noise: f64 = 1.5,
    context_weight: f64 = 0.1,
    synonym_weight: f64 = 0.5,
    /// Model tag written into embeddings and reports.
    model_tag: String = "synthetic".to_string(),
    ridge_lambda: f64 = 1.0,
    ridge_objective: RidgeObjective = RidgeObjective::Sum,
    pairs_per_word: usize = 5,
    /// Neighbours for the grounding F1.
    ground_k: usize = 5,
    preset: Preset = Preset::ObjectsFirst,
    /// Append the hint stages to the preset.
    [num_args = 0..=1, default_missing_value = "true"]
    hint_all: bool = false,
    dataset: PathBuf = PathBuf::from("out/dataset.csv"),
    params: PathBuf = PathBuf::from("out/params.json"),
    history: PathBuf = PathBuf::from("out/history.csv"),
    index: PathBuf = PathBuf::from("out/index.json"),
    embeddings: PathBuf = PathBuf::from("out/embeddings.jsonl"),
    /// Sentence corpus; `builtin` selects the bundled one.
    corpus: String = "builtin".to_string(),
    run: PathBuf = PathBuf::from("out/run.json"),
    report_dir: PathBuf = PathBuf::from("out/report"),
}

impl PipelineConfig {
    /// Reads a config file, or the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::parse(&text)
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies a seed given as the text of the environment variable.
    pub fn apply_seed_env(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn sub_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            samples_per_class: self.samples_per_class,
            noise_scale: self.noise_scale,
            placement_tolerance: self.placement_tolerance,
            ..GeneratorConfig::default()
        }
    }

    pub fn split(&self) -> SplitConfig {
        SplitConfig {
            train_per_class: self.train_per_class,
            test_per_class: self.test_per_class,
            index_per_class: self.index_per_class,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            per_class: self.batch_per_class,
            lr: self.lr,
            include_type_id: self.include_type_id,
        }
    }

    pub fn loss(&self) -> MsLossConfig {
        MsLossConfig {
            alpha: self.alpha,
            beta: self.beta,
            lambda_thr: self.lambda_thr,
            epsilon_margin: self.epsilon_margin,
        }
    }

    pub fn synth(&self) -> SynthSpec {
        SynthSpec {
            dim: self.synth_dim,
            eta: self.eta,
            sigma: self.sigma,
            concept_noise: self.concept_noise,
            context_weight: self.context_weight,
            synonym_weight: self.synonym_weight,
            model: self.model_tag.clone(),
        }
    }

    pub fn ground(&self) -> GroundConfig {
        GroundConfig {
            ridge: RidgeConfig {
                lambda: self.ridge_lambda,
                objective: self.ridge_objective,
            },
            pairs_per_word: self.pairs_per_word,
            k: self.ground_k,
        }
    }

    pub fn curriculum(&self) -> Curriculum {
        Curriculum::preset(self.preset, self.hint_all)
    }

    pub fn load_corpus(&self) -> Result<Corpus> {
        if self.corpus == "builtin" {
            return Ok(Corpus::builtin());
        }
        let path = Path::new(&self.corpus);
        require_input(path)?;
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Corpus::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.generator().validate()?;
        self.loss().validate()?;
        self.synth().validate()?;
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(Error::Config("lr must be positive".into()));
        }
        if self.batch_per_class == 0 || self.knn_k == 0 || self.ground_k == 0 || self.pairs_per_word == 0 {
            return Err(Error::Config(
                "batch_per_class, knn_k, ground_k and pairs_per_word must be at least 1".into(),
            ));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::Config("ridge_lambda must be non-negative".into()));
        }
        Ok(())
    }
}

/// Inputs must exist before a command starts; a missing one is a
/// configuration error rather than an I/O failure.
pub fn require_input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("input file {} does not exist", path.display())))
    }
}
