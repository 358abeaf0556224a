//! A complete grounding run as one versioned document, and its rendering
//! into separation curves, F1 tables and PCA coordinate files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bridge::{run_curriculum, Curriculum, EvalSnapshot, GroundConfig};
use crate::encoder::check_version;
use crate::error::{Error, Result};
use crate::eval::{pca_2d, PcaProjection};
use crate::lexicon::{CorpusMap, TokenEmbedding};
use crate::objindex::ObjectIndex;

const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPoint {
    pub point_id: String,
    pub word_or_class: String,
    pub pc1: f64,
    pub pc2: f64,
    pub nearest_supercategory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProjection {
    pub pair: String,
    pub points: Vec<PcaPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundRun {
    pub version: String,
    pub model_tag: String,
    pub curriculum: Curriculum,
    pub config: GroundConfig,
    pub seed: u64,
    pub snapshots: Vec<EvalSnapshot>,
    /// Object index in its own principal plane.
    pub pca_objects: Vec<PcaPoint>,
    /// Held-out occurrences of each evaluated pair after the final stage,
    /// projected onto the object plane.
    pub pca_pairs: Vec<PairProjection>,
}

fn nearest_supercategory(index: &ObjectIndex, v: &[f64]) -> Result<String> {
    Ok(index.knn_query(v, 1)?[0].label.supercategory().name().to_string())
}

/// Runs the curriculum and gathers everything the reports need.
pub fn ground_run(
    tokens: &[TokenEmbedding],
    index: &ObjectIndex,
    corpus_map: &CorpusMap,
    curriculum: &Curriculum,
    config: &GroundConfig,
    seed: u64,
    model_tag: &str,
) -> Result<GroundRun> {
    let results = run_curriculum(tokens, index, corpus_map, curriculum, config, seed)?;
    let pca: PcaProjection = pca_2d(&index.embeddings)?;
    let mut pca_objects = Vec::with_capacity(index.len());
    for (i, (c, v)) in pca.coordinates.iter().zip(&index.embeddings).enumerate() {
        pca_objects.push(PcaPoint {
            point_id: format!("obj{i}"),
            word_or_class: index.labels[i].short_name().to_string(),
            pc1: c[0],
            pc2: c[1],
            nearest_supercategory: nearest_supercategory(index, v)?,
        });
    }
    let mut pca_pairs = Vec::new();
    if let Some(last) = results.last() {
        for pair in &curriculum.eval_pairs {
            let mut points = Vec::new();
            for side in &pair.sides {
                let ids = crate::bridge::evaluation_tokens(tokens, side, corpus_map, config.pairs_per_word, seed)?;
                for i in ids {
                    let v = last.map.apply(&tokens[i].vector)?;
                    let p = pca.project(&v);
                    points.push(PcaPoint {
                        point_id: format!("{}#{}", tokens[i].sentence_id, side.word),
                        word_or_class: side.tag.clone(),
                        pc1: p[0],
                        pc2: p[1],
                        nearest_supercategory: nearest_supercategory(index, &v)?,
                    });
                }
            }
            pca_pairs.push(PairProjection {
                pair: pair.name.clone(),
                points,
            });
        }
    }
    Ok(GroundRun {
        version: FORMAT_VERSION.to_string(),
        model_tag: model_tag.to_string(),
        curriculum: curriculum.clone(),
        config: *config,
        seed,
        snapshots: results.into_iter().map(|r| r.snapshot).collect(),
        pca_objects,
        pca_pairs,
    })
}

impl GroundRun {
    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_reader(reader)?;
        let version = value
            .get("version")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Format("run document has no version".into()))?;
        check_version(version, 1)?;
        Ok(serde_json::from_value(value)?)
    }
}

/// One row of the F1 file.
#[derive(Debug, Clone, PartialEq)]
pub struct F1Row {
    pub pair: String,
    pub f1: f64,
    pub hinted: bool,
    /// Hinted minus unhinted F1, on hinted rows.
    pub delta: Option<f64>,
}

/// Unhinted and (when the curriculum hints) hinted F1 per evaluated pair,
/// in the curriculum's pair order.
pub fn f1_rows(run: &GroundRun) -> Vec<F1Row> {
    let c = &run.curriculum;
    let (Some(base), Some(last)) = (c.last_base_stage(), run.snapshots.len().checked_sub(1)) else {
        return Vec::new();
    };
    if base > last {
        return Vec::new();
    }
    let any_hint = c.stages.iter().any(|s| s.hint);
    let mut rows = Vec::new();
    for (p, pair) in c.eval_pairs.iter().enumerate() {
        let unhinted = run.snapshots[base].pairs[p].macro_f1;
        rows.push(F1Row {
            pair: pair.name.clone(),
            f1: unhinted,
            hinted: false,
            delta: None,
        });
        if any_hint {
            let stage = c.hint_stage(pair).unwrap_or(c.stages.len() - 1).min(last);
            let hinted = run.snapshots[stage].pairs[p].macro_f1;
            rows.push(F1Row {
                pair: pair.name.clone(),
                f1: hinted,
                hinted: true,
                delta: Some(hinted - unhinted),
            });
        }
    }
    rows
}

fn slug(name: &str) -> String {
    name.replace('/', "_")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn finish<W: Write>(w: csv::Writer<W>, path: &Path) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

fn write_pca(path: &Path, points: &[PcaPoint]) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(["point_id", "word_or_class", "pc1", "pc2", "nearest_supercategory"])?;
    for p in points {
        w.write_record([
            p.point_id.clone(),
            p.word_or_class.clone(),
            p.pc1.to_string(),
            p.pc2.to_string(),
            p.nearest_supercategory.clone(),
        ])?;
    }
    finish(w, path)
}

fn signed(delta: f64) -> String {
    let r = (delta * 100.0).round() / 100.0;
    if r == 0.0 {
        "\u{b1}0.00".to_string()
    } else {
        format!("{r:+.2}")
    }
}

/// Markdown table: one column per pair, an unhinted row and a hinted row
/// with the gain in parentheses.
pub fn f1_table(run: &GroundRun) -> String {
    let rows = f1_rows(run);
    let pairs: Vec<&str> = run.curriculum.eval_pairs.iter().map(|p| p.name.as_str()).collect();
    let mut out = format!("| model | {} |\n|---|{}\n", pairs.join(" | "), "---|".repeat(pairs.len()));
    let cell = |hinted: bool, pair: &str| -> Option<String> {
        rows.iter().find(|r| r.hinted == hinted && r.pair == pair).map(|r| match r.delta {
            Some(d) => format!("{:.2} ({})", r.f1, signed(d)),
            None => format!("{:.2}", r.f1),
        })
    };
    for (hinted, tag) in [(false, run.model_tag.clone()), (true, format!("{}+hint", run.model_tag))] {
        let cells: Vec<Option<String>> = pairs.iter().map(|p| cell(hinted, p)).collect();
        if cells.iter().all(Option::is_none) {
            continue;
        }
        let cells: Vec<String> = cells.into_iter().map(|c| c.unwrap_or_default()).collect();
        out.push_str(&format!("| {tag} | {} |\n", cells.join(" | ")));
    }
    out
}

/// Writes every report file into `out_dir` and returns their paths.
pub fn emit_report(run: &GroundRun, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (p, pair) in run.curriculum.eval_pairs.iter().enumerate() {
        let path = out_dir.join(format!("separation_{}.csv", slug(&pair.name)));
        let mut w = csv_writer(create(&path)?);
        w.write_record([
            "stage".to_string(),
            format!("{}_vs_{}_cosine", pair.sides[0].tag, pair.sides[1].tag),
            "hinted".to_string(),
        ])?;
        for snap in &run.snapshots {
            let e = &snap.pairs[p];
            w.write_record([snap.label.clone(), e.center_cosine.to_string(), e.hinted.to_string()])?;
        }
        finish(w, &path)?;
        written.push(path);
    }

    let path = out_dir.join("f1.csv");
    let mut w = csv_writer(create(&path)?);
    w.write_record(["pair", "model_tag", "f1", "hinted", "delta"])?;
    for r in f1_rows(run) {
        w.write_record([
            r.pair,
            run.model_tag.clone(),
            r.f1.to_string(),
            r.hinted.to_string(),
            r.delta.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    finish(w, &path)?;
    written.push(path);

    let path = out_dir.join("f1_table.md");
    let mut f = create(&path)?;
    f.write_all(f1_table(run).as_bytes()).map_err(|e| Error::io(&path, e))?;
    f.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let path = out_dir.join("pca_objects.csv");
    write_pca(&path, &run.pca_objects)?;
    written.push(path);
    for proj in &run.pca_pairs {
        let path = out_dir.join(format!("pca_{}.csv", slug(&proj.pair)));
        write_pca(&path, &proj.points)?;
        written.push(path);
    }
    Ok(written)
}
