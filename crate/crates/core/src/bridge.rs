//! Affine maps from word-vector space into the object space, fit by ridge
//! regression, and the staged curriculum that grows the fit.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datasim::{ObjectClass, Orientation, Supercategory};
use crate::encoder::check_version;
use crate::error::{Error, Result};
use crate::eval::{center_similarity, knn_f1, Label};
use crate::lexicon::{make_word_pairs, pairing_occurrences, CorpusMap, GroundingPair, TokenEmbedding};
use crate::objindex::ObjectIndex;

const FORMAT_VERSION: &str = "1.0";

/// How the squared error is weighted against the penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RidgeObjective {
    /// `sum_i |W'x_i + b - y_i|^2 + lambda |W|^2`
    #[default]
    Sum,
    /// `(1/n) sum_i |W'x_i + b - y_i|^2 + lambda |W|^2`
    Mean,
}

impl FromStr for RidgeObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(RidgeObjective::Sum),
            "mean" => Ok(RidgeObjective::Mean),
            other => Err(Error::Config(format!("unknown ridge objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeConfig {
    pub lambda: f64,
    pub objective: RidgeObjective,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig {
            lambda: 1.0,
            objective: RidgeObjective::Sum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Source dimension.
    pub dim: usize,
    pub out_dim: usize,
    /// `dim x out_dim`, row-major.
    pub weights: Vec<f64>,
    pub offset: Vec<f64>,
    pub ridge_lambda: f64,
    pub objective: RidgeObjective,
    pub fitted_on: Vec<String>,
    /// Mean squared residual over all pairs and output coordinates.
    pub train_mse: f64,
}

/// Closed-form ridge fit of `y ~ W'x + b` with `b` unpenalized.
///
/// Centring removes the offset; `W` then comes from a Cholesky solve of the
/// `d x d` system when there are more rows than features, and from the
/// equivalent `n x n` kernel system otherwise.
pub fn fit_ridge_arrays<X: AsRef<[f64]>, Y: AsRef<[f64]>>(xs: &[X], ys: &[Y], config: &RidgeConfig) -> Result<AffineMap> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::InsufficientData("ridge fit needs at least one pair".into()));
    }
    if ys.len() != n {
        return Err(Error::Shape(format!("{n} inputs but {} targets", ys.len())));
    }
    if !(config.lambda >= 0.0 && config.lambda.is_finite()) {
        return Err(Error::Config(format!("ridge lambda must be non-negative, got {}", config.lambda)));
    }
    let d = xs[0].as_ref().len();
    let o = ys[0].as_ref().len();
    if d == 0 || o == 0 || xs.iter().any(|x| x.as_ref().len() != d) || ys.iter().any(|y| y.as_ref().len() != o) {
        return Err(Error::Shape("ridge inputs or targets have inconsistent dimension".into()));
    }
    let x = DMatrix::from_fn(n, d, |r, c| xs[r].as_ref()[c]);
    let y = DMatrix::from_fn(n, o, |r, c| ys[r].as_ref()[c]);
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite ridge data".into()));
    }
    let x_mean = x.row_mean();
    let y_mean = y.row_mean();
    let mut xc = x.clone();
    let mut yc = y.clone();
    for mut row in xc.row_iter_mut() {
        row -= &x_mean;
    }
    for mut row in yc.row_iter_mut() {
        row -= &y_mean;
    }
    let lambda = match config.objective {
        RidgeObjective::Sum => config.lambda,
        RidgeObjective::Mean => config.lambda * n as f64,
    };
    let singular = || {
        Error::Solver(format!(
            "normal equations are singular at lambda = {}; use lambda > 0",
            config.lambda
        ))
    };
    let w = if n > d {
        let mut a = xc.transpose() * &xc;
        for i in 0..d {
            a[(i, i)] += lambda;
        }
        let chol = cholesky_checked(a).ok_or_else(singular)?;
        chol.solve(&(xc.transpose() * &yc))
    } else {
        let mut k = &xc * xc.transpose();
        for i in 0..n {
            k[(i, i)] += lambda;
        }
        let chol = cholesky_checked(k).ok_or_else(singular)?;
        xc.transpose() * chol.solve(&yc)
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    let b = &y_mean - &x_mean * &w;
    let resid = &x * &w - &y;
    let mut resid = resid;
    for mut row in resid.row_iter_mut() {
        row += &b;
    }
    let train_mse = resid.iter().map(|r| r * r).sum::<f64>() / (n * o) as f64;
    let mut weights = Vec::with_capacity(d * o);
    for r in 0..d {
        for c in 0..o {
            weights.push(w[(r, c)]);
        }
    }
    Ok(AffineMap {
        dim: d,
        out_dim: o,
        weights,
        offset: b.iter().copied().collect(),
        ridge_lambda: config.lambda,
        objective: config.objective,
        fitted_on: Vec::new(),
        train_mse,
    })
}

/// Cholesky factor, refused when a pivot is negligible next to the
/// matrix scale (the system is numerically singular).
fn cholesky_checked(a: DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let scale = a.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let chol = a.cholesky()?;
    let l = chol.l_dirty();
    let min_pivot = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    (min_pivot > 1e-13 * scale).then_some(chol)
}

/// Ridge fit over grounding pairs; `fitted_on` lists their concepts in
/// first-seen order.
pub fn fit_ridge(pairs: &[GroundingPair], config: &RidgeConfig) -> Result<AffineMap> {
    let xs: Vec<&[f64]> = pairs.iter().map(|p| p.source.as_slice()).collect();
    let ys: Vec<&[f64]> = pairs.iter().map(|p| p.target.as_slice()).collect();
    let mut map = fit_ridge_arrays(&xs, &ys, config)?;
    let mut seen = BTreeSet::new();
    for p in pairs {
        if seen.insert(p.concept.as_str()) {
            map.fitted_on.push(p.concept.clone());
        }
    }
    Ok(map)
}

impl AffineMap {
    /// `W'x + b`, not renormalized.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "map expects dimension {}, got {}",
                self.dim,
                x.len()
            )));
        }
        let mut out = self.offset.clone();
        for (i, xi) in x.iter().enumerate() {
            let row = &self.weights[i * self.out_dim..(i + 1) * self.out_dim];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
        Ok(out)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let doc = MapDocument {
            version: FORMAT_VERSION.to_string(),
            d: self.dim,
            out_dim: self.out_dim,
            lambda: self.ridge_lambda,
            objective: self.objective,
            fitted_on: self.fitted_on.clone(),
            weights: self.weights.clone(),
            offset: self.offset.clone(),
            train_mse: self.train_mse,
        };
        serde_json::to_writer(writer, &doc)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let doc: MapDocument = serde_json::from_reader(reader)?;
        check_version(&doc.version, 1)?;
        if doc.weights.len() != doc.d * doc.out_dim || doc.offset.len() != doc.out_dim {
            return Err(Error::Format("map arrays do not match the declared shape".into()));
        }
        Ok(AffineMap {
            dim: doc.d,
            out_dim: doc.out_dim,
            weights: doc.weights,
            offset: doc.offset,
            ridge_lambda: doc.lambda,
            objective: doc.objective,
            fitted_on: doc.fitted_on,
            train_mse: doc.train_mse,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct MapDocument {
    version: String,
    d: usize,
    out_dim: usize,
    lambda: f64,
    objective: RidgeObjective,
    fitted_on: Vec<String>,
    weights: Vec<f64>,
    offset: Vec<f64>,
    train_mse: f64,
}

/// Pairs accumulated so far and the words that contributed them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairSet {
    pub pairs: Vec<GroundingPair>,
    pub introduced: BTreeSet<String>,
}

/// Adds `n` pairs for `concept`. A concept can join only once; `n = 0`
/// leaves the set untouched.
pub fn add_hint(
    accumulated: &PairSet,
    concept: &str,
    tokens: &[TokenEmbedding],
    index: &ObjectIndex,
    corpus_map: &CorpusMap,
    n: usize,
    seed: u64,
) -> Result<PairSet> {
    if n == 0 {
        return Ok(accumulated.clone());
    }
    if accumulated.introduced.contains(concept) {
        return Err(Error::Contract(format!("concept {concept:?} was already introduced")));
    }
    let mut next = accumulated.clone();
    next.pairs.extend(make_word_pairs(tokens, concept, index, corpus_map, n, seed)?);
    next.introduced.insert(concept.to_string());
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    ObjectsFirst,
    ConceptsFirst,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::ObjectsFirst => "objects-first",
            Preset::ConceptsFirst => "concepts-first",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "objects-first" => Ok(Preset::ObjectsFirst),
            "concepts-first" => Ok(Preset::ConceptsFirst),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected objects-first or concepts-first)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub label: String,
    pub words: Vec<String>,
    pub hint: bool,
}

/// One side of an evaluated pair: occurrences of `word` (optionally only
/// those whose sentence puts the object in `orientation`) with gold `gold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSide {
    pub tag: String,
    pub word: String,
    pub orientation: Option<Orientation>,
    pub gold: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub name: String,
    pub sides: [EvalSide; 2],
}

impl EvalPair {
    pub fn labels(&self) -> [Label; 2] {
        [self.sides[0].gold, self.sides[1].gold]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curriculum {
    pub name: String,
    pub stages: Vec<Stage>,
    pub eval_pairs: Vec<EvalPair>,
}

fn stage(label: &str, words: &[&str], hint: bool) -> Stage {
    Stage {
        label: label.to_string(),
        words: words.iter().map(|w| w.to_string()).collect(),
        hint,
    }
}

fn side(tag: &str, word: &str, orientation: Option<Orientation>, gold: Label) -> EvalSide {
    EvalSide {
        tag: tag.to_string(),
        word: word.to_string(),
        orientation,
        gold,
    }
}

fn class_pair(name: &str, a: (&str, &str, ObjectClass), b: (&str, &str, ObjectClass)) -> EvalPair {
    let orient = |c: ObjectClass| match c.orientation() {
        Orientation::NotApplicable => None,
        o => Some(o),
    };
    EvalPair {
        name: name.to_string(),
        sides: [
            side(a.0, a.1, orient(a.2), Label::Class(a.2)),
            side(b.0, b.1, orient(b.2), Label::Class(b.2)),
        ],
    }
}

fn concept_pair(a: &str, b: &str) -> EvalPair {
    EvalPair {
        name: format!("{a}/{b}"),
        sides: [
            side(a, a, None, Label::Super(Supercategory::FlatSided)),
            side(b, b, None, Label::Super(Supercategory::Round)),
        ],
    }
}

fn block_ball() -> EvalPair {
    class_pair(
        "block/ball",
        ("block", "block", ObjectClass::CUBE),
        ("ball", "ball", ObjectClass::SPHERE),
    )
}

impl Curriculum {
    /// Named stage orders. Hint stages are appended only with `hint_all`.
    pub fn preset(preset: Preset, hint_all: bool) -> Self {
        let (base, hints, eval_pairs) = match preset {
            Preset::ObjectsFirst => (
                vec![
                    stage("cube+sphere", &["cube", "sphere"], false),
                    stage("pyramid+capsule", &["pyramid", "capsule"], false),
                    stage("rect_prism+egg", &["rectangular prism", "egg"], false),
                    stage("small_cube", &["small cube"], false),
                    stage("cylinder", &["cylinder"], false),
                    stage("cone", &["cone"], false),
                ],
                vec![
                    stage("hint:flat/round", &["flat", "round"], true),
                    stage("hint:stack/roll", &["stack", "roll"], true),
                    stage("hint:stable/unstable", &["stable", "unstable"], true),
                    stage("hint:stand/fall", &["stand", "fall"], true),
                ],
                vec![
                    concept_pair("flat", "round"),
                    concept_pair("stack", "roll"),
                    concept_pair("stable", "unstable"),
                    concept_pair("stand", "fall"),
                    block_ball(),
                ],
            ),
            Preset::ConceptsFirst => (
                vec![
                    stage("flat+round", &["flat", "round"], false),
                    stage("stack+roll", &["stack", "roll"], false),
                    stage("stable+unstable", &["stable", "unstable"], false),
                    stage("stand+fall", &["stand", "fall"], false),
                ],
                vec![
                    stage("hint:cube/sphere", &["cube", "sphere"], true),
                    stage("hint:pyr/cpsl", &["pyramid", "capsule"], true),
                    stage("hint:cyl-f/r", &["cylinder"], true),
                    stage("hint:cone-f/r", &["cone"], true),
                ],
                vec![
                    class_pair(
                        "cube/sphere",
                        ("cube", "cube", ObjectClass::CUBE),
                        ("sphere", "sphere", ObjectClass::SPHERE),
                    ),
                    class_pair(
                        "pyr/cpsl",
                        ("pyr", "pyramid", ObjectClass::PYRAMID),
                        ("cpsl", "capsule", ObjectClass::CAPSULE),
                    ),
                    class_pair(
                        "cyl-f/r",
                        ("cyl-f", "cylinder", ObjectClass::CYLINDER_FLAT),
                        ("cyl-r", "cylinder", ObjectClass::CYLINDER_ROUND),
                    ),
                    class_pair(
                        "cone-f/r",
                        ("cone-f", "cone", ObjectClass::CONE_FLAT),
                        ("cone-r", "cone", ObjectClass::CONE_ROUND),
                    ),
                    block_ball(),
                ],
            ),
        };
        let mut stages = base;
        if hint_all {
            stages.extend(hints);
        }
        Curriculum {
            name: preset.name().to_string(),
            stages,
            eval_pairs,
        }
    }

    /// No word may join twice, and hint stages must follow every base stage.
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("curriculum has no stages".into()));
        }
        let mut seen = BTreeSet::new();
        let mut hinting = false;
        for s in &self.stages {
            if hinting && !s.hint {
                return Err(Error::Config(format!("base stage {:?} follows a hint stage", s.label)));
            }
            hinting |= s.hint;
            for w in &s.words {
                if !seen.insert(w.as_str()) {
                    return Err(Error::Config(format!("word {w:?} is introduced twice")));
                }
            }
        }
        Ok(())
    }

    /// Stage at which a word of `pair` joins the fit through a hint.
    pub fn hint_stage(&self, pair: &EvalPair) -> Option<usize> {
        self.stages
            .iter()
            .position(|s| s.hint && pair.sides.iter().any(|side| s.words.contains(&side.word)))
    }

    /// Index of the last non-hint stage.
    pub fn last_base_stage(&self) -> Option<usize> {
        self.stages.iter().rposition(|s| !s.hint)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvaluation {
    pub pair: String,
    pub center_cosine: f64,
    pub macro_f1: f64,
    pub support: [usize; 2],
    pub hinted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSnapshot {
    pub stage: usize,
    pub label: String,
    pub n_pairs: usize,
    pub train_mse: f64,
    pub pairs: Vec<PairEvaluation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub map: AffineMap,
    pub snapshot: EvalSnapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundConfig {
    pub ridge: RidgeConfig,
    pub pairs_per_word: usize,
    /// Neighbours consulted by the K-NN evaluation.
    pub k: usize,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig {
            ridge: RidgeConfig::default(),
            pairs_per_word: 5,
            k: 5,
        }
    }
}

/// Held-out vectors of one evaluation side: every occurrence of the word
/// (matching the orientation, if any) except its pairing occurrences.
pub fn evaluation_tokens(
    tokens: &[TokenEmbedding],
    side: &EvalSide,
    corpus_map: &CorpusMap,
    n_per_word: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let reserved: BTreeSet<usize> = match pairing_occurrences(tokens, &side.word, n_per_word, seed) {
        Ok(p) => p.into_iter().collect(),
        Err(Error::Shortage { .. }) => BTreeSet::new(),
        Err(e) => return Err(e),
    };
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.word != side.word || reserved.contains(&i) {
            continue;
        }
        if let Some(o) = side.orientation {
            if corpus_map.resolve(&t.sentence_id)?.orientation() != o {
                continue;
            }
        }
        out.push(i);
    }
    Ok(out)
}

/// Refits the map after each stage on every pair introduced so far and
/// scores each evaluation pair's held-out occurrences.
pub fn run_curriculum(
    tokens: &[TokenEmbedding],
    index: &ObjectIndex,
    corpus_map: &CorpusMap,
    curriculum: &Curriculum,
    config: &GroundConfig,
    seed: u64,
) -> Result<Vec<StageResult>> {
    curriculum.validate()?;
    let mut held_out = Vec::with_capacity(curriculum.eval_pairs.len());
    for pair in &curriculum.eval_pairs {
        let mut sides = Vec::with_capacity(2);
        for side in &pair.sides {
            let idx = evaluation_tokens(tokens, side, corpus_map, config.pairs_per_word, seed)?;
            if idx.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "no held-out occurrences for {} in pair {}",
                    side.tag, pair.name
                )));
            }
            sides.push(idx);
        }
        held_out.push(sides);
    }
    let hint_stages: Vec<Option<usize>> = curriculum.eval_pairs.iter().map(|p| curriculum.hint_stage(p)).collect();

    let mut acc = PairSet::default();
    let mut results = Vec::with_capacity(curriculum.stages.len());
    for (s, st) in curriculum.stages.iter().enumerate() {
        for w in &st.words {
            acc = add_hint(&acc, w, tokens, index, corpus_map, config.pairs_per_word, seed)?;
        }
        let map = fit_ridge(&acc.pairs, &config.ridge)?;
        let mut pairs = Vec::with_capacity(curriculum.eval_pairs.len());
        for ((pair, sides), hs) in curriculum.eval_pairs.iter().zip(&held_out).zip(&hint_stages) {
            let project = |ids: &Vec<usize>| -> Result<Vec<Vec<f64>>> {
                ids.iter().map(|&i| map.apply(&tokens[i].vector)).collect()
            };
            let a = project(&sides[0])?;
            let b = project(&sides[1])?;
            let center_cosine = center_similarity(&a, &b)?;
            let labelled: Vec<(Vec<f64>, Label)> = a
                .into_iter()
                .map(|v| (v, pair.sides[0].gold))
                .chain(b.into_iter().map(|v| (v, pair.sides[1].gold)))
                .collect();
            let report = knn_f1(index, &labelled, pair.labels(), config.k)?;
            pairs.push(PairEvaluation {
                pair: pair.name.clone(),
                center_cosine,
                macro_f1: report.macro_f1,
                support: [sides[0].len(), sides[1].len()],
                hinted: hs.is_some_and(|h| s >= h),
            });
        }
        results.push(StageResult {
            snapshot: EvalSnapshot {
                stage: s,
                label: st.label.clone(),
                n_pairs: acc.pairs.len(),
                train_mse: map.train_mse,
                pairs,
            },
            map,
        });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_return_offset() {
        let map = AffineMap {
            dim: 3,
            out_dim: 2,
            weights: vec![0.0; 6],
            offset: vec![0.5, -1.0],
            ridge_lambda: 1.0,
            objective: RidgeObjective::Sum,
            fitted_on: vec![],
            train_mse: 0.0,
        };
        assert_eq!(map.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![0.5, -1.0]);
        assert!(matches!(map.apply(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn rank_deficient_without_penalty_fails() {
        let xs = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let ys = vec![vec![1.0], vec![2.0], vec![3.5]];
        let cfg = RidgeConfig {
            lambda: 0.0,
            objective: RidgeObjective::Sum,
        };
        assert!(matches!(fit_ridge_arrays(&xs, &ys, &cfg), Err(Error::Solver(_))));
    }

    #[test]
    fn primal_and_dual_agree() {
        // 3 rows in 3-D take the kernel path. A 4th row lying exactly on the
        // fitted map does not move the solution and switches to the primal path.
        let xs = vec![vec![0.3, -1.0, 2.0], vec![1.5, 0.2, -0.7], vec![-0.4, 0.9, 0.1]];
        let ys = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]];
        let cfg = RidgeConfig::default();
        let dual = fit_ridge_arrays(&xs, &ys, &cfg).unwrap();
        let extra = vec![0.7, 0.1, -0.2];
        let mut rows = xs.clone();
        rows.push(extra.clone());
        let mut targets = ys.clone();
        targets.push(dual.apply(&extra).unwrap());
        let primal = fit_ridge_arrays(&rows, &targets, &cfg).unwrap();
        for (a, b) in dual.weights.iter().zip(&primal.weights) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn presets_validate() {
        for p in [Preset::ObjectsFirst, Preset::ConceptsFirst] {
            for h in [false, true] {
                Curriculum::preset(p, h).validate().unwrap();
            }
        }
        assert_eq!(Curriculum::preset(Preset::ObjectsFirst, true).stages.len(), 10);
        assert_eq!(Curriculum::preset(Preset::ConceptsFirst, false).stages.len(), 4);
    }

    #[test]
    fn repeated_word_is_invalid() {
        let mut c = Curriculum::preset(Preset::ObjectsFirst, false);
        c.stages.push(stage("again", &["cube"], true));
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
