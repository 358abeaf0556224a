//! Browser bindings. Every operation takes a JSON request and returns a JSON
//! response; the `*_json` functions are the plain-Rust versions that the
//! wasm exports wrap.

use std::cell::RefCell;

use groundbridge::bridge::{run_curriculum, Curriculum, GroundConfig, Preset, RidgeConfig};
use groundbridge::datasim::{build_split, generate_dataset, GeneratorConfig, SplitConfig};
use groundbridge::eval::pca_2d;
use groundbridge::lexicon::{synth_embeddings, ConceptVocabulary, Corpus, CorpusMap, SynthSpec};
use groundbridge::objindex::{build_index, evaluate_confusion, ObjectIndex};
use groundbridge::seed::derive_seed;
use groundbridge::trainer::{mine_pairs, ms_loss, similarity_matrix, train, MsLossConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

thread_local! {
    static INDEX: RefCell<Option<ObjectIndex>> = const { RefCell::new(None) };
}

type DemoResult<T> = std::result::Result<T, String>;

fn parse<'a, T: Deserialize<'a>>(request: &'a str) -> DemoResult<T> {
    serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))
}

fn render<T: Serialize>(value: &T) -> DemoResult<String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexRequest {
    pub seed: u64,
    pub samples_per_class: usize,
    pub epochs: usize,
}

impl Default for IndexRequest {
    fn default() -> Self {
        IndexRequest {
            seed: 7,
            samples_per_class: 150,
            epochs: 10,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct IndexPoint {
    pub x: f64,
    pub y: f64,
    pub class: String,
    pub supercategory: String,
}

#[derive(Debug, Serialize)]
pub struct IndexResponse {
    pub accuracy: f64,
    pub cross_supercategory: f64,
    pub explained_ratio: [f64; 2],
    pub points: Vec<IndexPoint>,
}

/// Simulates a small dataset, trains the encoder, keeps the resulting index
/// for later grounding requests, and returns its principal plane.
pub fn train_index_json(request: &str) -> DemoResult<String> {
    let req: IndexRequest = parse(request)?;
    let per = req.samples_per_class;
    if per < 10 {
        return Err("samples_per_class must be at least 10".into());
    }
    let generator = GeneratorConfig {
        samples_per_class: per,
        ..GeneratorConfig::default()
    };
    // Leave some slack: a few simulated episodes per class can be unusable.
    let split_cfg = SplitConfig {
        train_per_class: per / 2,
        test_per_class: per / 5,
        index_per_class: per / 5,
    };
    let train_cfg = TrainConfig {
        epochs: req.epochs,
        ..TrainConfig::default()
    };
    let run = || -> groundbridge::Result<IndexResponse> {
        let data = generate_dataset(&generator, derive_seed(req.seed, "simulate"))?;
        let split = build_split(&data, &split_cfg, derive_seed(req.seed, "split"))?;
        let (params, _) = train(&split, &MsLossConfig::default(), &train_cfg, derive_seed(req.seed, "train"))?;
        let index = build_index(&params, &split.index)?;
        let confusion = evaluate_confusion(&index, &split.test, &params, 10, split_cfg.test_per_class)?;
        let pca = pca_2d(&index.embeddings)?;
        let points = pca
            .coordinates
            .iter()
            .zip(&index.labels)
            .map(|(c, l)| IndexPoint {
                x: c[0],
                y: c[1],
                class: l.to_string(),
                supercategory: l.supercategory().name().to_string(),
            })
            .collect();
        INDEX.with(|slot| *slot.borrow_mut() = Some(index));
        Ok(IndexResponse {
            accuracy: confusion.accuracy,
            cross_supercategory: confusion.cross_supercategory_rate(),
            explained_ratio: pca.explained_ratio,
            points,
        })
    };
    render(&run().map_err(|e| e.to_string())?)
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundRequest {
    pub eta: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub preset: Preset,
    pub hints: bool,
    pub seed: u64,
    pub dim: usize,
}

impl Default for GroundRequest {
    fn default() -> Self {
        GroundRequest {
            eta: 0.2,
            sigma: 1.25,
            lambda: 1.0,
            preset: Preset::ObjectsFirst,
            hints: true,
            seed: 0,
            dim: 256,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PairPoint {
    pub pair: String,
    pub cosine: f64,
    pub f1: f64,
    pub hinted: bool,
}

#[derive(Debug, Serialize)]
pub struct StagePoint {
    pub label: String,
    pub n_pairs: usize,
    pub pairs: Vec<PairPoint>,
}

/// Grounds synthetic word vectors into the stored index stage by stage.
pub fn ground_curve_json(request: &str) -> DemoResult<String> {
    let req: GroundRequest = parse(request)?;
    let stages = INDEX.with(|slot| {
        let slot = slot.borrow();
        let index = slot.as_ref().ok_or("train an object index first")?;
        let corpus = Corpus::builtin();
        let map = CorpusMap::build(&corpus, &ConceptVocabulary::default());
        let spec = SynthSpec {
            dim: req.dim,
            eta: req.eta,
            sigma: req.sigma,
            ..SynthSpec::default()
        };
        let config = GroundConfig {
            ridge: RidgeConfig {
                lambda: req.lambda,
                ..RidgeConfig::default()
            },
            ..GroundConfig::default()
        };
        let curriculum = Curriculum::preset(req.preset, req.hints);
        let run = || -> groundbridge::Result<_> {
            let tokens = synth_embeddings(&spec, &corpus, derive_seed(req.seed, "synth"))?;
            run_curriculum(&tokens, index, &map, &curriculum, &config, derive_seed(req.seed, "ground"))
        };
        run().map_err(|e| e.to_string())
    })?;
    let points: Vec<StagePoint> = stages
        .into_iter()
        .map(|s| StagePoint {
            label: s.snapshot.label,
            n_pairs: s.snapshot.n_pairs,
            pairs: s
                .snapshot
                .pairs
                .into_iter()
                .map(|p| PairPoint {
                    pair: p.pair,
                    cosine: p.center_cosine,
                    f1: p.macro_f1,
                    hinted: p.hinted,
                })
                .collect(),
        })
        .collect();
    render(&points)
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossRequest {
    /// Points on the unit circle, by angle in radians.
    pub angles: Vec<f64>,
    pub labels: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub lambda_thr: f64,
    pub epsilon: f64,
}

impl Default for LossRequest {
    fn default() -> Self {
        let d = MsLossConfig::default();
        LossRequest {
            angles: Vec::new(),
            labels: Vec::new(),
            alpha: d.alpha,
            beta: d.beta,
            lambda_thr: d.lambda_thr,
            epsilon: d.epsilon_margin,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LossResponse {
    pub loss: f64,
    pub positives: Vec<Vec<usize>>,
    pub negatives: Vec<Vec<usize>>,
    /// dL/dθ for each point.
    pub angle_gradient: Vec<f64>,
}

/// Multi-similarity loss of a batch of 2-D unit vectors, with the mined pairs
/// and the gradient with respect to each angle.
pub fn ms_loss_json(request: &str) -> DemoResult<String> {
    let req: LossRequest = parse(request)?;
    if req.angles.len() != req.labels.len() {
        return Err("angles and labels differ in length".into());
    }
    let config = MsLossConfig {
        alpha: req.alpha,
        beta: req.beta,
        lambda_thr: req.lambda_thr,
        epsilon_margin: req.epsilon,
    };
    config.validate().map_err(|e| e.to_string())?;
    let points: Vec<Vec<f64>> = req.angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
    let sim = similarity_matrix(&points, &req.labels).map_err(|e| e.to_string())?;
    let pairs = mine_pairs(&sim, &config);
    let (loss, grad) = ms_loss(&sim, &pairs, &config);
    // S_ik = cos(θ_i − θ_k), so dS_ik/dθ_i = −sin(θ_i − θ_k) = −dS_ik/dθ_k.
    let n = req.angles.len();
    let mut angle_gradient = vec![0.0; n];
    for i in 0..n {
        for k in 0..n {
            let d = -(req.angles[i] - req.angles[k]).sin() * grad[i][k];
            angle_gradient[i] += d;
            angle_gradient[k] -= d;
        }
    }
    render(&LossResponse {
        loss,
        positives: pairs.positives,
        negatives: pairs.negatives,
        angle_gradient,
    })
}

fn to_js(r: DemoResult<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trainIndex)]
pub fn train_index(request: &str) -> Result<String, JsError> {
    to_js(train_index_json(request))
}

#[wasm_bindgen(js_name = groundCurve)]
pub fn ground_curve(request: &str) -> Result<String, JsError> {
    to_js(ground_curve_json(request))
}

#[wasm_bindgen(js_name = msLoss)]
pub fn ms_loss_explorer(request: &str) -> Result<String, JsError> {
    to_js(ms_loss_json(request))
}
