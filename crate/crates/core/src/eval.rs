//! Grounding quality measures: cluster-centre cosine, K-NN macro F1 against
//! the object index, and 2-D PCA projections.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::datasim::{ObjectClass, Supercategory};
use crate::error::{Error, Result};
use crate::objindex::{majority_vote, rank_by_cosine, ObjectIndex};

/// A gold or predicted label for grounded word vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Super(Supercategory),
    Class(ObjectClass),
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Super(s) => s.name(),
            Label::Class(c) => c.short_name(),
        }
    }

    /// This label's reading of an index entry, or `None` if the entry is
    /// outside a class-restricted index.
    fn of_entry(self, pair: [Label; 2], class: ObjectClass) -> Option<Label> {
        match self {
            Label::Super(_) => Some(Label::Super(class.supercategory())),
            Label::Class(_) => pair.into_iter().find(|l| *l == Label::Class(class)),
        }
    }
}

fn mean(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let mut m = vec![0.0; dim];
    for p in points {
        for (a, v) in m.iter_mut().zip(p) {
            *a += v;
        }
    }
    let inv = 1.0 / points.len() as f64;
    m.iter_mut().for_each(|v| *v *= inv);
    m
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity between the two cluster means.
pub fn center_similarity(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("center similarity of an empty cluster".into()));
    }
    let dim = a[0].len();
    if a.iter().chain(b).any(|p| p.len() != dim) {
        return Err(Error::Shape("cluster points differ in dimension".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (na, nb) = (norm(&ma), norm(&mb));
    if na < 1e-12 || nb < 1e-12 {
        return Err(Error::Degenerate("cluster mean has zero norm".into()));
    }
    let c = ma.iter().zip(&mb).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    Ok(c.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnReport {
    pub pair: [Label; 2],
    pub macro_f1: f64,
    pub per_label: Vec<LabelScore>,
    pub predictions: Vec<Label>,
    pub hinted: bool,
}

/// Classifies each transformed vector by majority vote of its `k` nearest
/// index entries and scores the two labels of `pair`.
///
/// Supercategory pairs read every index entry as flat-sided or round.
/// Class pairs keep only the index entries of those two classes.
pub fn knn_f1(
    index: &ObjectIndex,
    transformed: &[(Vec<f64>, Label)],
    pair: [Label; 2],
    k: usize,
) -> Result<KnnReport> {
    if transformed.is_empty() {
        return Err(Error::Argument("no transformed vectors to classify".into()));
    }
    if std::mem::discriminant(&pair[0]) != std::mem::discriminant(&pair[1]) || pair[0] == pair[1] {
        return Err(Error::Argument("a pair needs two distinct labels of one kind".into()));
    }
    if let Some((_, bad)) = transformed.iter().find(|(_, l)| !pair.contains(l)) {
        return Err(Error::Argument(format!("gold label {} is not in the pair", bad.name())));
    }
    let entries: Vec<(usize, Label)> = (0..index.len())
        .filter_map(|i| pair[0].of_entry(pair, index.labels[i]).map(|l| (i, l)))
        .collect();
    if k == 0 || k > entries.len() {
        return Err(Error::Argument(format!(
            "k = {k} outside 1..={} for the usable index",
            entries.len()
        )));
    }
    let mut predictions = Vec::with_capacity(transformed.len());
    for (v, _) in transformed {
        if v.len() != index.embeddings[0].len() {
            return Err(Error::Shape("transformed vector dimension differs from the index".into()));
        }
        let ranked = rank_by_cosine(
            v,
            entries.iter().map(|&(i, _)| (i, index.embeddings[i].as_slice())),
        )?;
        let votes: Vec<(Label, f64)> = ranked
            .iter()
            .take(k)
            .map(|&(i, s)| (pair[0].of_entry(pair, index.labels[i]).expect("filtered"), s))
            .collect();
        predictions.push(majority_vote(&votes).expect("k >= 1"));
    }
    let per_label: Vec<LabelScore> = pair
        .iter()
        .map(|&label| {
            let mut tp = 0usize;
            let mut fp = 0usize;
            let mut fne = 0usize;
            for ((_, gold), pred) in transformed.iter().zip(&predictions) {
                match (*gold == label, *pred == label) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fne += 1,
                    (false, false) => {}
                }
            }
            let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            LabelScore {
                label,
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fne),
                f1: ratio(2 * tp, 2 * tp + fp + fne),
                support: tp + fne,
            }
        })
        .collect();
    let macro_f1 = per_label.iter().map(|s| s.f1).sum::<f64>() / per_label.len() as f64;
    Ok(KnnReport {
        pair,
        macro_f1,
        per_label,
        predictions,
        hinted: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// Two orthonormal directions, largest variance first.
    pub components: [Vec<f64>; 2],
    pub explained_variance: [f64; 2],
    /// Share of the total variance carried by each component.
    pub explained_ratio: [f64; 2],
    pub coordinates: Vec<[f64; 2]>,
}

impl PcaProjection {
    pub fn project(&self, point: &[f64]) -> [f64; 2] {
        let c = |comp: &[f64]| -> f64 {
            comp.iter()
                .zip(point.iter().zip(&self.mean))
                .map(|(w, (x, m))| w * (x - m))
                .sum()
        };
        [c(&self.components[0]), c(&self.components[1])]
    }
}

/// Top two principal directions of the sample covariance. Each direction
/// is signed so that its largest-magnitude entry is positive.
pub fn pca_2d(points: &[Vec<f64>]) -> Result<PcaProjection> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 3 points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if dim < 2 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape("PCA points must share a dimension of at least 2".into()));
    }
    let mu = mean(points);
    let n = points.len();
    let centred = DMatrix::from_fn(n, dim, |r, c| points[r][c] - mu[c]);
    let cov = (centred.transpose() * &centred) / (n as f64 - 1.0);
    let total: f64 = cov.diagonal().iter().sum();
    if !(total > 1e-300) {
        return Err(Error::Degenerate("all PCA points coincide".into()));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let component = |j: usize| -> Vec<f64> {
        let mut v: Vec<f64> = eig.eigenvectors.column(order[j]).iter().copied().collect();
        let peak = v
            .iter()
            .copied()
            .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if peak < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let variance = |j: usize| eig.eigenvalues[order[j]].max(0.0);
    let mut proj = PcaProjection {
        mean: mu,
        components: [component(0), component(1)],
        explained_variance: [variance(0), variance(1)],
        explained_ratio: [variance(0) / total, variance(1) / total],
        coordinates: Vec::new(),
    };
    proj.coordinates = points.iter().map(|p| proj.project(p)).collect();
    Ok(proj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_clusters() {
        let a = vec![vec![1.0, 2.0, 3.0], vec![0.5, 0.0, 1.0]];
        assert!((center_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn antipodal_centres() {
        let a = vec![vec![1.0, 0.0]];
        let b = vec![vec![-3.0, 0.0]];
        assert!((center_similarity(&a, &b).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_is_degenerate() {
        let a = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        assert!(matches!(center_similarity(&a, &a), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rank_one_points() {
        let dir: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let pts: Vec<Vec<f64>> = (0..10).map(|t| dir.iter().map(|d| d * t as f64).collect()).collect();
        let p = pca_2d(&pts).unwrap();
        assert!(p.explained_ratio[0] >= 1.0 - 1e-9);
        let dot: f64 = p.components[0].iter().zip(&p.components[1]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-8);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let pts = vec![vec![1.0, 1.0]; 4];
        assert!(matches!(pca_2d(&pts), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mixed_label_kinds_rejected() {
        let mut idx = ObjectIndex::default();
        idx.push(vec![1.0, 0.0], ObjectClass::CUBE).unwrap();
        let r = knn_f1(
            &idx,
            &[(vec![1.0, 0.0], Label::Class(ObjectClass::CUBE))],
            [Label::Class(ObjectClass::CUBE), Label::Super(Supercategory::Round)],
            1,
        );
        assert!(matches!(r, Err(Error::Argument(_))));
    }
}
