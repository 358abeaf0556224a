//! Exact cosine nearest-neighbour index over object embeddings.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::datasim::{ObjectClass, StackSample, Supercategory};
use crate::encoder::{self, EncoderParams};
use crate::error::{Error, Result};

const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectIndex {
    pub embeddings: Vec<Vec<f64>>,
    pub labels: Vec<ObjectClass>,
    pub supercategories: Vec<Supercategory>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub position: usize,
    pub label: ObjectClass,
    pub similarity: f64,
}

fn normalized(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Degenerate("cannot normalize a zero or non-finite vector".into()));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ranks `candidates` by cosine similarity to `query`, descending, ties by position.
pub fn rank_by_cosine<'a>(
    query: &[f64],
    candidates: impl Iterator<Item = (usize, &'a [f64])>,
) -> Result<Vec<(usize, f64)>> {
    let q = normalized(query)?;
    let mut scored: Vec<(usize, f64)> = candidates.map(|(i, v)| (i, dot(&q, v))).collect();
    // Stable sort keeps insertion order among equal similarities.
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scored)
}

impl ObjectIndex {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Adds one entry; the vector must already be unit norm.
    pub fn push(&mut self, embedding: Vec<f64>, label: ObjectClass) -> Result<()> {
        let n = dot(&embedding, &embedding).sqrt();
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::Contract(format!("index vector has norm {n}")));
        }
        if let Some(first) = self.embeddings.first() {
            if first.len() != embedding.len() {
                return Err(Error::Shape("index vectors differ in dimension".into()));
            }
        }
        self.supercategories.push(label.supercategory());
        self.labels.push(label);
        self.embeddings.push(embedding);
        Ok(())
    }

    /// Top-`k` entries by cosine similarity to `query` (normalized here).
    pub fn knn_query(&self, query: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 || k > self.len() {
            return Err(Error::Argument(format!(
                "k = {k} outside 1..={} for this index",
                self.len()
            )));
        }
        if let Some(first) = self.embeddings.first() {
            if first.len() != query.len() {
                return Err(Error::Shape(format!(
                    "query has dimension {}, index has {}",
                    query.len(),
                    first.len()
                )));
            }
        }
        let ranked = rank_by_cosine(
            query,
            self.embeddings.iter().map(Vec::as_slice).enumerate(),
        )?;
        Ok(ranked
            .into_iter()
            .take(k)
            .map(|(position, similarity)| Neighbor {
                position,
                label: self.labels[position],
                similarity,
            })
            .collect())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let doc = IndexDocument {
            version: FORMAT_VERSION.to_string(),
            index: self.clone(),
        };
        serde_json::to_writer(writer, &doc)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let doc: IndexDocument = serde_json::from_reader(reader)?;
        encoder::check_version(&doc.version, 1)?;
        let mut index = ObjectIndex::default();
        for (e, l) in doc.index.embeddings.into_iter().zip(doc.index.labels) {
            index.push(e, l)?;
        }
        Ok(index)
    }
}

#[derive(Serialize, Deserialize)]
struct IndexDocument {
    version: String,
    index: ObjectIndex,
}

/// Embeds each standardized sample and stores it under its class label.
pub fn build_index(params: &EncoderParams, samples: &[StackSample]) -> Result<ObjectIndex> {
    let include_type_id = params.input_len == crate::datasim::FEATURE_DIM;
    let mut index = ObjectIndex::default();
    for s in samples {
        let e = encoder::forward(params, s.encoder_input(include_type_id))?;
        index.push(e.values, s.class)?;
    }
    Ok(index)
}

/// Majority label among neighbours, ties broken by the higher mean
/// similarity, then by lower label order.
pub fn majority_vote<L: Copy + Ord>(neighbors: &[(L, f64)]) -> Option<L> {
    let mut tally: Vec<(L, usize, f64)> = Vec::new();
    for &(label, sim) in neighbors {
        match tally.iter_mut().find(|(l, _, _)| *l == label) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 += sim;
            }
            None => tally.push((label, 1, sim)),
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| {
            a.1.cmp(&b.1)
                .then_with(|| (a.2 / a.1 as f64).total_cmp(&(b.2 / b.1 as f64)))
                .then_with(|| b.0.cmp(&a.0))
        })
        .map(|(l, _, _)| l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    /// Rows are true classes, columns predictions, in [`ObjectClass::ALL`] order.
    pub counts: Vec<Vec<usize>>,
    pub normalized: Vec<Vec<f64>>,
    pub accuracy: f64,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<usize>>) -> Self {
        let total: usize = counts.iter().flatten().sum();
        let correct: usize = (0..counts.len()).map(|i| counts[i][i]).sum();
        let normalized = counts
            .iter()
            .map(|row| {
                let n: usize = row.iter().sum();
                row.iter()
                    .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                    .collect()
            })
            .collect();
        ConfusionMatrix {
            counts,
            normalized,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Fraction of predictions whose supercategory differs from the truth.
    pub fn cross_supercategory_rate(&self) -> f64 {
        let mut cross = 0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if ObjectClass::ALL[i].supercategory() != ObjectClass::ALL[j].supercategory() {
                    cross += c;
                }
            }
        }
        cross as f64 / self.total().max(1) as f64
    }

    /// Normalized rows; `decimals` rounds for display, `None` keeps full precision.
    pub fn write_csv<W: Write>(&self, writer: W, decimals: Option<usize>) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = vec!["true\\pred".to_string()];
        header.extend(ObjectClass::ALL.iter().map(|c| c.short_name().to_string()));
        w.write_record(&header)?;
        for (class, row) in ObjectClass::ALL.iter().zip(&self.normalized) {
            let mut rec = vec![class.short_name().to_string()];
            rec.extend(row.iter().map(|v| match decimals {
                Some(d) => format!("{v:.d$}"),
                None => v.to_string(),
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Classifies the first `per_class` test samples of every class by k-NN
/// majority vote against `index`.
pub fn evaluate_confusion(
    index: &ObjectIndex,
    test: &[StackSample],
    params: &EncoderParams,
    k: usize,
    per_class: usize,
) -> Result<ConfusionMatrix> {
    let include_type_id = params.input_len == crate::datasim::FEATURE_DIM;
    let mut counts = vec![vec![0; ObjectClass::ALL.len()]; ObjectClass::ALL.len()];
    for class in ObjectClass::ALL {
        let samples: Vec<&StackSample> = test.iter().filter(|s| s.class == class).take(per_class).collect();
        if samples.len() < per_class {
            return Err(Error::Shortage {
                class: class.short_name().to_string(),
                needed: per_class,
                available: samples.len(),
            });
        }
        for s in samples {
            let e = encoder::forward(params, s.encoder_input(include_type_id))?;
            let neighbors: Vec<(ObjectClass, f64)> = index
                .knn_query(&e.values, k)?
                .into_iter()
                .map(|n| (n.label, n.similarity))
                .collect();
            let predicted = majority_vote(&neighbors).expect("k >= 1");
            counts[class.index()][predicted.index()] += 1;
        }
    }
    Ok(ConfusionMatrix::from_counts(counts))
}
