//! Compression ratio, exact match and edit similarity over JSONL datasets.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{compress, string_or_number, CompressionConfig};
use crate::pool::ordered_map;
use crate::scorer::ScorerBackend;
use crate::text::TokenCount;

pub fn ratio(original: TokenCount, compressed: TokenCount) -> Result<f64> {
    if compressed == TokenCount::ZERO {
        return Err(Error::DivisionByZero("compressed token count is zero"));
    }
    Ok(original.get() as f64 / compressed.get() as f64)
}

/// `100 * (1 - lev(h, r) / max(|h|, |r|))` over characters; 100 for two empty strings.
pub fn edit_similarity(hypothesis: &str, reference: &str) -> f64 {
    let longest = hypothesis.chars().count().max(reference.chars().count());
    if longest == 0 {
        return 100.0;
    }
    let d = strsim::levenshtein(hypothesis, reference);
    100.0 * (1.0 - d as f64 / longest as f64)
}

fn normalize_for_match(s: &str) -> String {
    let s = s.strip_suffix('\n').unwrap_or(s);
    let s = s.strip_suffix('\r').unwrap_or(s);
    s.split('\n').map(|l| l.trim_end()).collect::<Vec<_>>().join("\n")
}

/// 1 when the strings agree after trimming trailing whitespace on each line
/// and dropping one trailing newline.
pub fn exact_match(hypothesis: &str, reference: &str) -> u8 {
    u8::from(normalize_for_match(hypothesis) == normalize_for_match(reference))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    pub context: String,
    pub instruction: String,
    #[serde(default)]
    pub ground_truth: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<EvalRecord>,
    /// Lines that were not valid records.
    pub skipped: usize,
}

pub fn parse_dataset(text: &str) -> Dataset {
    let mut records = Vec::new();
    let mut skipped = 0;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EvalRecord>(line) {
            Ok(r) => records.push(r),
            Err(_) => skipped += 1,
        }
    }
    Dataset { records, skipped }
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    Ok(parse_dataset(&std::fs::read_to_string(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub id: String,
    pub ratio: Option<f64>,
    pub em: Option<u8>,
    pub es: Option<f64>,
    pub original_tokens: Option<TokenCount>,
    pub retained_tokens: Option<TokenCount>,
    pub wall_time_ms: f64,
    pub error: Option<String>,
    #[serde(skip)]
    pub backend_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub records: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Mean of per-record ratios.
    pub mean_ratio: Option<f64>,
    /// Percentage of exact matches.
    pub em: Option<f64>,
    pub es: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<MetricsRow>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub generate: bool,
    pub max_new_tokens: usize,
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            generate: false,
            max_new_tokens: 64,
            jobs: 1,
        }
    }
}

/// Keeps as many leading lines of the generation as the reference has.
pub fn truncate_to_reference(generated: &str, reference: &str) -> String {
    let n = reference.trim_end_matches('\n').split('\n').count().max(1);
    generated.split('\n').take(n).collect::<Vec<_>>().join("\n")
}

/// The prompt sent for generation: the compressed context followed by the instruction.
pub fn generation_prompt(context: &str, instruction: &str) -> String {
    if context.is_empty() || context.ends_with('\n') {
        format!("{context}{instruction}")
    } else {
        format!("{context}\n{instruction}")
    }
}

fn evaluate_record(
    record: &EvalRecord,
    config: &CompressionConfig,
    backend: &dyn ScorerBackend,
    options: EvalOptions,
) -> MetricsRow {
    let started = Instant::now();
    let mut row = MetricsRow {
        id: record.id.clone(),
        ratio: None,
        em: None,
        es: None,
        original_tokens: None,
        retained_tokens: None,
        wall_time_ms: 0.0,
        error: None,
        backend_error: false,
    };
    let outcome = compress(&record.context, &record.instruction, config, backend).and_then(|r| {
        row.ratio = r.ratio;
        row.original_tokens = Some(r.original_tokens);
        row.retained_tokens = Some(r.retained_tokens);
        if options.generate {
            let prompt = generation_prompt(&r.compressed_text, &record.instruction);
            let generated = backend.complete(&prompt, options.max_new_tokens)?;
            let hypothesis = truncate_to_reference(&generated, &record.ground_truth);
            row.em = Some(exact_match(&hypothesis, &record.ground_truth));
            row.es = Some(edit_similarity(&hypothesis, &record.ground_truth));
        }
        Ok(())
    });
    if let Err(e) = outcome {
        row.backend_error = e.is_backend();
        row.error = Some(e.to_string());
    }
    row.wall_time_ms = started.elapsed().as_secs_f64() * 1000.0;
    row
}

pub fn run_eval_records(
    dataset: Dataset,
    config: &CompressionConfig,
    backend: &dyn ScorerBackend,
    options: EvalOptions,
) -> EvalReport {
    let rows = ordered_map(dataset.records, options.jobs, |r| {
        evaluate_record(&r, config, backend, options)
    });
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let aggregate = Aggregate {
        records: rows.len(),
        failed: rows.iter().filter(|r| r.error.is_some()).count(),
        skipped: dataset.skipped,
        mean_ratio: mean(rows.iter().filter_map(|r| r.ratio).collect()),
        em: mean(rows.iter().filter_map(|r| r.em.map(|e| 100.0 * e as f64)).collect()),
        es: mean(rows.iter().filter_map(|r| r.es).collect()),
    };
    EvalReport { rows, aggregate }
}

pub fn run_eval(
    dataset: &Path,
    config: &CompressionConfig,
    backend: &dyn ScorerBackend,
    options: EvalOptions,
) -> Result<EvalReport> {
    Ok(run_eval_records(load_dataset(dataset)?, config, backend, options))
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl EvalReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tratio\tem\tes\toriginal_tokens\tretained_tokens\twall_time_ms\terror\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{}\n",
                r.id,
                cell(r.ratio.map(|v| format!("{v:.4}"))),
                cell(r.em),
                cell(r.es.map(|v| format!("{v:.3}"))),
                cell(r.original_tokens),
                cell(r.retained_tokens),
                r.wall_time_ms,
                r.error.as_deref().unwrap_or("-").replace(['\t', '\n'], " "),
            ));
        }
        let a = &self.aggregate;
        out.push_str(&format!(
            "mean\t{}\t{}\t{}\t-\t-\t-\tskipped={} failed={}\n",
            cell(a.mean_ratio.map(|v| format!("{v:.4}"))),
            cell(a.em.map(|v| format!("{v:.2}"))),
            cell(a.es.map(|v| format!("{v:.3}"))),
            a.skipped,
            a.failed,
        ));
        out
    }

    /// Every attempted record failed in the backend.
    pub fn all_backend_failures(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.backend_error)
    }
}
