//! Contextual word vectors: ingestion, composition from hidden states, a
//! synthetic generator, the sentence corpus, and occurrence/object pairing.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datasim::{ObjectClass, Orientation, Shape, Supercategory};
use crate::error::{Error, Result};
use crate::objindex::ObjectIndex;
use crate::seed;

/// Number of encoder layers summed per token.
pub const LAYER_COUNT: usize = 4;

/// The checked-in stacking corpus, `sentence_id<TAB>text` per line.
pub const BUILTIN_CORPUS: &str = include_str!("../fixtures/corpus.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbedding {
    pub word: String,
    pub sentence_id: String,
    #[serde(rename = "model")]
    pub source_model: String,
    pub vector: Vec<f64>,
}

/// Hidden states for one word occurrence. `layers[l][t]` is layer `l`
/// (0 = last layer) at subword piece `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawHiddenStates {
    pub word: String,
    pub sentence_id: String,
    #[serde(rename = "model")]
    pub source_model: String,
    pub layers: Vec<Vec<Vec<f64>>>,
}

/// Sum over the four layers at each piece, then mean over pieces.
pub fn compose_token_vector(raw: &RawHiddenStates) -> Result<TokenEmbedding> {
    let ctx = || format!("{} in {}", raw.word, raw.sentence_id);
    if raw.layers.len() != LAYER_COUNT {
        return Err(Error::Format(format!(
            "{}: expected {LAYER_COUNT} layers, found {}",
            ctx(),
            raw.layers.len()
        )));
    }
    let pieces = raw.layers[0].len();
    if pieces == 0 {
        return Err(Error::Format(format!("{}: no subword pieces", ctx())));
    }
    let dim = raw.layers[0][0].len();
    if dim == 0 {
        return Err(Error::Format(format!("{}: empty hidden state", ctx())));
    }
    let mut vector = vec![0.0; dim];
    for layer in &raw.layers {
        if layer.len() != pieces {
            return Err(Error::Format(format!("{}: layers disagree on piece count", ctx())));
        }
        for piece in layer {
            if piece.len() != dim {
                return Err(Error::Format(format!("{}: inconsistent hidden size", ctx())));
            }
            for (acc, v) in vector.iter_mut().zip(piece) {
                *acc += v;
            }
        }
    }
    let scale = 1.0 / pieces as f64;
    vector.iter_mut().for_each(|v| *v *= scale);
    if vector.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format(format!("{}: non-finite hidden state", ctx())));
    }
    Ok(TokenEmbedding {
        word: raw.word.clone(),
        sentence_id: raw.sentence_id.clone(),
        source_model: raw.source_model.clone(),
        vector,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermRole {
    /// Names an object shape (block and ball are synonyms for cube and sphere).
    Object(Shape),
    /// Attribute or behavior word tied to one supercategory.
    Concept(Supercategory),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub name: &'static str,
    pub role: TermRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptVocabulary {
    pub terms: Vec<Term>,
    pub concept_pairs: Vec<(&'static str, &'static str)>,
}

impl Default for ConceptVocabulary {
    fn default() -> Self {
        use Supercategory::{FlatSided, Round};
        let mut terms: Vec<Term> = Shape::ALL
            .iter()
            .map(|&s| Term {
                name: shape_term(s),
                role: TermRole::Object(s),
            })
            .collect();
        terms.push(Term {
            name: "block",
            role: TermRole::Object(Shape::Cube),
        });
        terms.push(Term {
            name: "ball",
            role: TermRole::Object(Shape::Sphere),
        });
        let concept_pairs = vec![
            ("flat", "round"),
            ("stack", "roll"),
            ("stable", "unstable"),
            ("stand", "fall"),
        ];
        for &(f, r) in &concept_pairs {
            terms.push(Term {
                name: f,
                role: TermRole::Concept(FlatSided),
            });
            terms.push(Term {
                name: r,
                role: TermRole::Concept(Round),
            });
        }
        ConceptVocabulary {
            terms,
            concept_pairs,
        }
    }
}

/// Surface form of a shape in running text.
pub fn shape_term(shape: Shape) -> &'static str {
    match shape {
        Shape::SmallCube => "small cube",
        Shape::RectangularPrism => "rectangular prism",
        other => other.name(),
    }
}

/// Words a shape's concept terms are associated with in the synthetic generator.
fn associated_shapes(sc: Supercategory) -> &'static [Shape] {
    match sc {
        Supercategory::FlatSided => &[
            Shape::Cube,
            Shape::SmallCube,
            Shape::RectangularPrism,
            Shape::Pyramid,
        ],
        Supercategory::Round => &[Shape::Sphere, Shape::Capsule, Shape::Egg],
    }
}

impl ConceptVocabulary {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == name)
    }

    /// Vocabulary terms in `text`, in order. Matching is case-insensitive,
    /// whole-word, strips a plural `s`/`es`, and prefers longer terms.
    pub fn find_terms(&self, text: &str) -> Vec<usize> {
        let tokens: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect();
        let mut by_len: Vec<(usize, Vec<&str>)> = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (i, t.name.split(' ').collect()))
            .collect();
        by_len.sort_by_key(|(i, parts)| (std::cmp::Reverse(parts.len()), *i));

        let mut found = Vec::new();
        let mut pos = 0;
        while pos < tokens.len() {
            let hit = by_len.iter().find(|(_, parts)| {
                pos + parts.len() <= tokens.len()
                    && parts.iter().enumerate().all(|(j, p)| {
                        let tok = &tokens[pos + j];
                        if j + 1 == parts.len() {
                            singular_matches(tok, p)
                        } else {
                            tok == p
                        }
                    })
            });
            match hit {
                Some((i, parts)) => {
                    found.push(*i);
                    pos += parts.len();
                }
                None => pos += 1,
            }
        }
        found
    }
}

fn singular_matches(token: &str, term: &str) -> bool {
    token == term
        || token.strip_suffix('s') == Some(term)
        || token.strip_suffix("es") == Some(term)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
}

/// One vocabulary term found in one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub word: String,
    pub sentence: usize,
}

impl Corpus {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut seen = BTreeSet::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (id, body) = line
                .split_once('\t')
                .ok_or_else(|| Error::Format(format!("corpus line {}: missing tab", n + 1)))?;
            if id.is_empty() || !seen.insert(id.to_string()) {
                return Err(Error::Format(format!(
                    "corpus line {}: empty or repeated sentence id {id:?}",
                    n + 1
                )));
            }
            sentences.push(Sentence {
                id: id.to_string(),
                text: body.trim().to_string(),
            });
        }
        Ok(Corpus { sentences })
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_CORPUS).expect("bundled corpus parses")
    }

    pub fn occurrences(&self, vocab: &ConceptVocabulary) -> Vec<Occurrence> {
        self.sentences
            .iter()
            .enumerate()
            .flat_map(|(s, sent)| {
                vocab.find_terms(&sent.text).into_iter().map(move |t| Occurrence {
                    word: vocab.terms[t].name.to_string(),
                    sentence: s,
                })
            })
            .collect()
    }
}

/// Sentence id to the object class collocated in that sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusMap {
    pub classes: BTreeMap<String, ObjectClass>,
}

impl CorpusMap {
    /// The first object term of each sentence names its object. Cylinder and
    /// cone take their orientation from the first concept word present:
    /// a flat-sided word means flat side down, a round word round edge down.
    /// Sentences with no object, or an orientable object and no cue, are left out.
    pub fn build(corpus: &Corpus, vocab: &ConceptVocabulary) -> Self {
        let mut classes = BTreeMap::new();
        for s in &corpus.sentences {
            let terms: Vec<TermRole> = vocab
                .find_terms(&s.text)
                .into_iter()
                .map(|t| vocab.terms[t].role)
                .collect();
            let Some(shape) = terms.iter().find_map(|r| match r {
                TermRole::Object(shape) => Some(*shape),
                _ => None,
            }) else {
                continue;
            };
            let orientation = if shape.has_orientation() {
                match terms.iter().find_map(|r| match r {
                    TermRole::Concept(sc) => Some(*sc),
                    _ => None,
                }) {
                    Some(Supercategory::FlatSided) => Orientation::FlatDown,
                    Some(Supercategory::Round) => Orientation::RoundDown,
                    None => continue,
                }
            } else {
                Orientation::NotApplicable
            };
            let class = ObjectClass::new(shape, orientation).expect("orientation matches shape");
            classes.insert(s.id.clone(), class);
        }
        CorpusMap { classes }
    }

    pub fn resolve(&self, sentence_id: &str) -> Result<ObjectClass> {
        self.classes.get(sentence_id).copied().ok_or_else(|| Error::Mapping {
            sentence_id: sentence_id.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub dim: usize,
    /// Entanglement of concept words with their associated objects, in [0, 1].
    pub eta: f64,
    /// Per-coordinate noise scale for object terms.
    pub sigma: f64,
    /// Noise multiplier for concept terms, whose usage varies more with context.
    pub concept_noise: f64,
    /// Pull of each occurrence toward the other terms in its sentence.
    pub context_weight: f64,
    /// Share of the cube/sphere anchor in block/ball.
    pub synonym_weight: f64,
    pub model: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            dim: 768,
            eta: 0.5,
            sigma: 1.25,
            concept_noise: 1.5,
            context_weight: 0.1,
            synonym_weight: 0.5,
            model: "synthetic".to_string(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("synthetic dimension must be positive".into()));
        }
        for (name, v) in [
            ("eta", self.eta),
            ("context_weight", self.context_weight),
            ("synonym_weight", self.synonym_weight),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [("sigma", self.sigma), ("concept_noise", self.concept_noise)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-term anchors and mixture means of the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthMeans {
    pub anchors: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
}

pub fn synth_means(spec: &SynthSpec, vocab: &ConceptVocabulary, seed: u64) -> Result<SynthMeans> {
    spec.validate()?;
    let mut rng = seed::named_rng(seed, "synth/anchors");
    let anchors: Vec<Vec<f64>> = vocab
        .terms
        .iter()
        .map(|_| (0..spec.dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let anchor_of = |shape: Shape| -> &Vec<f64> {
        let i = vocab.position(shape_term(shape)).expect("shape terms are in the vocabulary");
        &anchors[i]
    };
    let mix = |a: &[f64], b: &[f64], w: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
    };
    let means = vocab
        .terms
        .iter()
        .zip(&anchors)
        .map(|(term, own)| match term.role {
            TermRole::Object(shape) if term.name != shape_term(shape) => {
                mix(own, anchor_of(shape), spec.synonym_weight)
            }
            TermRole::Object(_) => own.clone(),
            TermRole::Concept(sc) => {
                let shapes = associated_shapes(sc);
                let mut centre = vec![0.0; spec.dim];
                for &s in shapes {
                    for (c, v) in centre.iter_mut().zip(anchor_of(s)) {
                        *c += v / shapes.len() as f64;
                    }
                }
                mix(own, &centre, spec.eta)
            }
        })
        .collect();
    Ok(SynthMeans { anchors, means })
}

/// One vector per vocabulary occurrence in `corpus`:
/// `(1 - c) * mean_w + c * context + s_w * noise`, where `context` is the
/// average mean of the other terms in the sentence and `s_w` is `sigma`,
/// times `concept_noise` for concept terms.
pub fn synth_embeddings(spec: &SynthSpec, corpus: &Corpus, seed: u64) -> Result<Vec<TokenEmbedding>> {
    let vocab = ConceptVocabulary::default();
    let SynthMeans { means, .. } = synth_means(spec, &vocab, seed)?;
    let mut noise = seed::named_rng(seed, "synth/noise");
    let mut out = Vec::new();
    for sent in &corpus.sentences {
        let terms = vocab.find_terms(&sent.text);
        for (j, &t) in terms.iter().enumerate() {
            let others: Vec<usize> = terms
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, &o)| o)
                .collect();
            let context: Vec<f64> = if others.is_empty() {
                means[t].clone()
            } else {
                (0..spec.dim)
                    .map(|d| others.iter().map(|&o| means[o][d]).sum::<f64>() / others.len() as f64)
                    .collect()
            };
            let scale = match vocab.terms[t].role {
                TermRole::Concept(_) => spec.sigma * spec.concept_noise,
                TermRole::Object(_) => spec.sigma,
            };
            let vector = (0..spec.dim)
                .map(|d| {
                    let eps: f64 = noise.sample(StandardNormal);
                    (1.0 - spec.context_weight) * means[t][d] + spec.context_weight * context[d] + scale * eps
                })
                .collect();
            out.push(TokenEmbedding {
                word: vocab.terms[t].name.to_string(),
                sentence_id: sent.id.clone(),
                source_model: spec.model.clone(),
                vector,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundingPair {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub concept: String,
    /// Position of the source occurrence in the token list.
    pub token: usize,
    pub target_class: ObjectClass,
}

/// Token positions of every occurrence of `word`, in list order.
pub fn occurrences_of(tokens: &[TokenEmbedding], word: &str) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.word == word)
        .map(|(i, _)| i)
        .collect()
}

/// The occurrences of `word` set aside for pairing. Depends only on the
/// word's own occurrence list and `seed`.
pub fn pairing_occurrences(tokens: &[TokenEmbedding], word: &str, n: usize, seed: u64) -> Result<Vec<usize>> {
    let all = occurrences_of(tokens, word);
    if all.len() < n {
        return Err(Error::Shortage {
            class: word.to_string(),
            needed: n,
            available: all.len(),
        });
    }
    let mut rng = seed::named_rng(seed, &format!("pairing/{word}"));
    let mut picked: Vec<usize> = sample(&mut rng, all.len(), n).into_iter().map(|i| all[i]).collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Pairs `n_per_word` occurrences of `word` with index embeddings of the
/// object class collocated in each occurrence's sentence.
pub fn make_word_pairs(
    tokens: &[TokenEmbedding],
    word: &str,
    index: &ObjectIndex,
    corpus_map: &CorpusMap,
    n_per_word: usize,
    seed: u64,
) -> Result<Vec<GroundingPair>> {
    let chosen = pairing_occurrences(tokens, word, n_per_word, seed)?;
    let mut rng = seed::named_rng(seed, &format!("targets/{word}"));
    let mut out = Vec::with_capacity(chosen.len());
    for t in chosen {
        let class = corpus_map.resolve(&tokens[t].sentence_id)?;
        let members: Vec<usize> = (0..index.len()).filter(|&i| index.labels[i] == class).collect();
        if members.is_empty() {
            return Err(Error::Shortage {
                class: class.short_name().to_string(),
                needed: 1,
                available: 0,
            });
        }
        let pick = members[rng.random_range(0..members.len())];
        out.push(GroundingPair {
            source: tokens[t].vector.clone(),
            target: index.embeddings[pick].clone(),
            concept: word.to_string(),
            token: t,
            target_class: class,
        });
    }
    Ok(out)
}

/// Pairs for every distinct word in `tokens`, words in sorted order.
pub fn make_pairs(
    tokens: &[TokenEmbedding],
    index: &ObjectIndex,
    corpus_map: &CorpusMap,
    n_per_word: usize,
    seed: u64,
) -> Result<Vec<GroundingPair>> {
    let words: BTreeSet<&str> = tokens.iter().map(|t| t.word.as_str()).collect();
    let mut out = Vec::new();
    for w in words {
        out.extend(make_word_pairs(tokens, w, index, corpus_map, n_per_word, seed)?);
    }
    Ok(out)
}

/// A JSON Lines record in either ingestion mode.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum IngestRecord {
    Composed(TokenEmbedding),
    Raw(RawHiddenStates),
}

/// Reads composed or raw records (mixed freely); raw records are composed.
/// Words are lowercased, and each model must keep one dimension.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<TokenEmbedding>> {
    let mut out = Vec::new();
    let mut dims: BTreeMap<String, usize> = BTreeMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: IngestRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("line {}: not a composed or raw record: {e}", n + 1)))?;
        let mut token = match record {
            IngestRecord::Composed(t) => t,
            IngestRecord::Raw(r) => compose_token_vector(&r)?,
        };
        if token.vector.is_empty() || token.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("line {}: empty or non-finite vector", n + 1)));
        }
        token.word = token.word.trim().to_lowercase();
        let d = *dims.entry(token.source_model.clone()).or_insert(token.vector.len());
        if d != token.vector.len() {
            return Err(Error::Format(format!(
                "line {}: model {} switches dimension from {d} to {}",
                n + 1,
                token.source_model,
                token.vector.len()
            )));
        }
        out.push(token);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut writer: W, tokens: &[TokenEmbedding]) -> Result<()> {
    for t in tokens {
        serde_json::to_writer(&mut writer, t)?;
        writeln!(writer).map_err(serde_json::Error::io)?;
    }
    Ok(())
}

pub fn write_raw_jsonl<W: Write>(mut writer: W, records: &[RawHiddenStates]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writeln!(writer).map_err(serde_json::Error::io)?;
    }
    Ok(())
}
