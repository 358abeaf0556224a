//! The command implementations behind the `groundbridge` binary. Each reads
//! its inputs from the paths in [`PipelineConfig`] and writes its outputs
//! there; nothing is kept between commands except files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{require_input, PipelineConfig};
use crate::datasim::{build_split, generate_dataset, read_csv, write_csv, DatasetSplit};
use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::lexicon::{read_jsonl, synth_embeddings, write_jsonl, ConceptVocabulary, CorpusMap, TokenEmbedding};
use crate::objindex::{build_index, evaluate_confusion, ConfusionMatrix, ObjectIndex};
use crate::report::{emit_report, ground_run, GroundRun};
use crate::trainer::{train, TrainHistory};

fn open(path: &Path) -> Result<BufReader<File>> {
    require_input(path)?;
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

/// Output files go into existing directories only; a missing parent is an
/// I/O error.
fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_with<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = create(path)?;
    body(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn load_split(config: &PipelineConfig) -> Result<DatasetSplit> {
    let samples = read_csv(open(&config.dataset)?)?;
    build_split(&samples, &config.split(), config.sub_seed("split"))
}

pub fn load_params(path: &Path) -> Result<EncoderParams> {
    EncoderParams::read_json(open(path)?)
}

pub fn load_index(path: &Path) -> Result<ObjectIndex> {
    ObjectIndex::read_json(open(path)?)
}

pub fn load_embeddings(path: &Path) -> Result<Vec<TokenEmbedding>> {
    read_jsonl(open(path)?)
}

/// Generates the episode dataset and returns the number of rows written.
pub fn simulate(config: &PipelineConfig) -> Result<usize> {
    config.validate()?;
    let samples = generate_dataset(&config.generator(), config.sub_seed("simulate"))?;
    write_with(&config.dataset, |w| write_csv(w, &samples))?;
    Ok(samples.len())
}

pub struct TrainSummary {
    pub history: TrainHistory,
    /// Mean loss over the last epoch, if any batch ran.
    pub final_mean_loss: Option<f64>,
}

pub fn train_encoder(config: &PipelineConfig) -> Result<TrainSummary> {
    config.validate()?;
    let split = load_split(config)?;
    let (params, history) = train(&split, &config.loss(), &config.train(), config.sub_seed("train"))?;
    write_with(&config.params, |w| params.write_json(w))?;
    write_with(&config.history, |w| history.write_csv(w))?;
    let final_mean_loss = history.records.last().map(|last| {
        let start = history.records.iter().position(|r| r.epoch == last.epoch).unwrap_or(0);
        history.mean_loss(start..history.records.len())
    });
    Ok(TrainSummary {
        history,
        final_mean_loss,
    })
}

/// Embeds the held-out index split, saves the index, and writes the test
/// confusion matrix into the report directory (rounded and full precision).
pub fn index(config: &PipelineConfig) -> Result<(ObjectIndex, ConfusionMatrix)> {
    config.validate()?;
    let params = load_params(&config.params)?;
    let split = load_split(config)?;
    let index = build_index(&params, &split.index)?;
    let confusion = evaluate_confusion(&index, &split.test, &params, config.knn_k, config.test_per_class)?;
    write_with(&config.index, |w| index.write_json(w))?;
    ensure_dir(&config.report_dir)?;
    write_with(&config.report_dir.join("confusion.csv"), |w| confusion.write_csv(w, Some(2)))?;
    write_with(&config.report_dir.join("confusion_full.csv"), |w| confusion.write_csv(w, None))?;
    Ok((index, confusion))
}

pub fn synth(config: &PipelineConfig) -> Result<usize> {
    config.validate()?;
    let corpus = config.load_corpus()?;
    let tokens = synth_embeddings(&config.synth(), &corpus, config.sub_seed("synth"))?;
    write_with(&config.embeddings, |w| write_jsonl(w, &tokens))?;
    Ok(tokens.len())
}

/// Reads composed or raw records, composes the raw ones, checks that every
/// sentence resolves to an object in the corpus, and writes composed records.
pub fn ingest(config: &PipelineConfig, input: &Path) -> Result<usize> {
    let tokens = load_embeddings(input)?;
    let corpus = config.load_corpus()?;
    let map = CorpusMap::build(&corpus, &ConceptVocabulary::default());
    for t in &tokens {
        map.resolve(&t.sentence_id)?;
    }
    write_with(&config.embeddings, |w| write_jsonl(w, &tokens))?;
    Ok(tokens.len())
}

/// Runs the configured curriculum, saves the run document and emits every
/// report file.
pub fn ground(config: &PipelineConfig) -> Result<(GroundRun, Vec<PathBuf>)> {
    config.validate()?;
    let index = load_index(&config.index)?;
    let tokens = load_embeddings(&config.embeddings)?;
    let corpus = config.load_corpus()?;
    let map = CorpusMap::build(&corpus, &ConceptVocabulary::default());
    let curriculum = config.curriculum();
    curriculum.validate()?;
    let model_tag = tokens.first().map(|t| t.source_model.clone()).unwrap_or_else(|| config.model_tag.clone());
    let run = ground_run(
        &tokens,
        &index,
        &map,
        &curriculum,
        &config.ground(),
        config.sub_seed("ground"),
        &model_tag,
    )?;
    write_with(&config.run, |w| run.write_json(w))?;
    let files = report_from(&run, &config.report_dir)?;
    Ok((run, files))
}

/// Re-renders the report files from a saved run.
pub fn report(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let run = GroundRun::read_json(open(&config.run)?)?;
    report_from(&run, &config.report_dir)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn report_from(run: &GroundRun, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    emit_report(run, dir)
}
