//! The `ctxprune` command line: `compress`, `eval` and `inspect`.
//!
//! Exit codes: 0 success, 1 bad input or configuration, 2 scorer backend failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::chunker::LanguageSpec;
use crate::config::{BackendKind, Overrides, Preset, Settings};
use crate::error::{Error, Result};
use crate::eval::{load_dataset, run_eval_records, EvalOptions};
use crate::pipeline::{compress, compress_batch, inspect, CompressionRecord, InspectChunk};
use crate::select::PreserveMode;

#[derive(Debug, Parser)]
#[command(
    name = "ctxprune",
    version,
    about = "Instruction-aware compression of long code contexts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress a source file (or a JSONL batch with --batch).
    Compress(CompressArgs),
    /// Compress every record of a JSONL dataset and report Ratio, EM and ES.
    Eval(EvalArgs),
    /// Show chunks, AMI and per-line perplexity with block boundaries.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct Knobs {
    /// TOML settings file with [compression] and [backend] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// completion, summarization or repoqa.
    #[arg(long, value_parser = clap::value_parser!(Preset))]
    preset: Option<Preset>,
    /// Token budget B for the compressed context.
    #[arg(long)]
    budget: Option<usize>,
    /// Fraction of the coarse selection kept by the fine stage.
    #[arg(long)]
    fine_ratio: Option<f64>,
    /// Weight of instruction relevance when sharing budget between functions.
    #[arg(long)]
    beta: Option<f64>,
    /// Boundary sensitivity in standard deviations of line perplexity.
    #[arg(long)]
    alpha: Option<f64>,
    /// Functions with fewer non-blank lines are kept whole.
    #[arg(long)]
    small_lines: Option<usize>,
    /// python, cpp, java, javascript, typescript, rust, go, or auto.
    #[arg(long)]
    language: Option<LanguageSpec>,
    /// mock or http.
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Completions URL for the http backend.
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent to the http backend.
    #[arg(long)]
    model: Option<String>,
    /// Environment variable that holds the API key.
    #[arg(long)]
    auth_env: Option<String>,
    /// Drop omitted code silently instead of leaving comment markers.
    #[arg(long)]
    no_placeholders: bool,
    /// none, first-block or signature-line.
    #[arg(long)]
    preserve: Option<PreserveMode>,
    /// Worker threads for batch work.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Knobs {
    fn settings(&self) -> Result<Settings> {
        let o = Overrides {
            budget: self.budget,
            fine_ratio: self.fine_ratio,
            beta: self.beta,
            alpha: self.alpha,
            small_lines: self.small_lines,
            language: self.language,
            no_placeholders: self.no_placeholders,
            preserve: self.preserve,
            backend: self.backend,
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            auth_env: self.auth_env.clone(),
        };
        Settings::layered(self.config.as_deref(), self.preset, &o)
    }
}

#[derive(Debug, Args)]
struct CompressArgs {
    input: PathBuf,
    /// Instruction text, e.g. the code to be completed.
    #[arg(short = 'q', long, conflicts_with = "instruction_file")]
    instruction: Option<String>,
    /// Read the instruction from a file.
    #[arg(long)]
    instruction_file: Option<PathBuf>,
    /// Output path; metadata goes to `<output>.meta.json`. Stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Treat the input as JSONL records with `id`, `context` and `instruction`.
    #[arg(long)]
    batch: bool,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// JSONL records with `id`, `context`, `instruction` and optional `ground_truth`.
    #[arg(long)]
    dataset: PathBuf,
    /// Ask the backend for completions and score them against `ground_truth`.
    #[arg(long)]
    generate: bool,
    /// Generation length limit for --generate.
    #[arg(long, default_value_t = 64)]
    max_new_tokens: usize,
    /// TSV destination; the JSON aggregate goes to `<output>.aggregate.json`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Debug, Args)]
struct InspectArgs {
    input: PathBuf,
    /// Instruction text, e.g. the code to be completed.
    #[arg(short = 'q', long, conflicts_with = "instruction_file")]
    instruction: Option<String>,
    /// Read the instruction from a file.
    #[arg(long)]
    instruction_file: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_backend() {
        2
    } else {
        1
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn instruction(inline: &Option<String>, file: &Option<PathBuf>) -> Result<Option<String>> {
    match (inline, file) {
        (Some(q), _) => Ok(Some(q.clone())),
        (None, Some(p)) => Ok(Some(read(p)?)),
        (None, None) => Ok(None),
    }
}

fn sidecar(output: &Path, suffix: &str) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// Runs the CLI with `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Compress(a) => run_compress(a, stdout),
        Command::Eval(a) => run_eval_cmd(a, stdout, stderr),
        Command::Inspect(a) => run_inspect(a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn run_compress(a: CompressArgs, stdout: &mut dyn Write) -> Result<i32> {
    let settings = a.knobs.settings()?;
    let input = read(&a.input)?;
    if a.batch {
        return run_compress_batch(&a, &settings, &input, stdout);
    }
    let q = instruction(&a.instruction, &a.instruction_file)?
        .ok_or_else(|| Error::InvalidInput("an instruction is required (-q or --instruction-file)".into()))?;
    let backend = settings.backend.build()?;
    let result = compress(&input, &q, &settings.compression, &*backend)?;
    let meta = serde_json::to_string_pretty(&result.metadata())?;
    match &a.output {
        Some(out) => {
            write_file(out, &result.compressed_text)?;
            write_file(&sidecar(out, ".meta.json"), &(meta + "\n"))?;
        }
        None => stdout.write_all(result.compressed_text.as_bytes())?,
    }
    Ok(0)
}

fn run_compress_batch(a: &CompressArgs, settings: &Settings, input: &str, stdout: &mut dyn Write) -> Result<i32> {
    let mut records = Vec::new();
    for (n, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: CompressionRecord =
            serde_json::from_str(line).map_err(|e| Error::InvalidInput(format!("line {}: {e}", n + 1)))?;
        records.push(rec);
    }
    let backend = settings.backend.build()?;
    let outcomes = compress_batch(records, &settings.compression, &*backend, a.knobs.jobs);
    let all_backend = !outcomes.is_empty()
        && outcomes
            .iter()
            .all(|o| o.result.as_ref().is_err_and(|e| e.is_backend()));
    let mut text = String::new();
    let mut metas = Vec::new();
    for o in &outcomes {
        let line = match &o.result {
            Ok(r) => {
                metas.push(serde_json::json!({ "id": o.id, "metadata": r.metadata() }));
                serde_json::json!({ "id": o.id, "compressed_text": r.compressed_text })
            }
            Err(e) => {
                metas.push(serde_json::json!({ "id": o.id, "error": e.to_string() }));
                serde_json::json!({ "id": o.id, "error": e.to_string() })
            }
        };
        text.push_str(&line.to_string());
        text.push('\n');
    }
    match &a.output {
        Some(out) => {
            write_file(out, &text)?;
            write_file(
                &sidecar(out, ".meta.json"),
                &(serde_json::to_string_pretty(&metas)? + "\n"),
            )?;
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(if all_backend { 2 } else { 0 })
}

fn run_eval_cmd(a: EvalArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let settings = a.knobs.settings()?;
    let dataset = load_dataset(&a.dataset)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", a.dataset.display())))?;
    let backend = settings.backend.build()?;
    let options = EvalOptions {
        generate: a.generate,
        max_new_tokens: a.max_new_tokens,
        jobs: a.knobs.jobs,
    };
    let report = run_eval_records(dataset, &settings.compression, &*backend, options);
    let tsv = report.to_tsv();
    let aggregate = serde_json::to_string_pretty(&report.aggregate)? + "\n";
    match &a.output {
        Some(out) => {
            write_file(out, &tsv)?;
            write_file(&sidecar(out, ".aggregate.json"), &aggregate)?;
        }
        None => {
            stdout.write_all(tsv.as_bytes())?;
            stderr.write_all(aggregate.as_bytes())?;
        }
    }
    Ok(if report.all_backend_failures() { 2 } else { 0 })
}

fn run_inspect(a: InspectArgs, stdout: &mut dyn Write) -> Result<i32> {
    let settings = a.knobs.settings()?;
    let input = read(&a.input)?;
    let q = instruction(&a.instruction, &a.instruction_file)?;
    let backend = settings.backend.build()?;
    let table = inspect(&input, q.as_deref(), &settings.compression, &*backend)?;
    stdout.write_all(format_inspect(&table).as_bytes())?;
    Ok(0)
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

/// Chunk table, then one section per chunk with per-line perplexity.
pub fn format_inspect(table: &[InspectChunk]) -> String {
    let mut out = format!(
        "{:<6}{:<13}{:<24}{:<12}{:<8}{:<12}{:<6}{}\n",
        "chunk", "kind", "name", "lines", "tokens", "ami", "rank", "boundaries"
    );
    for c in table {
        out.push_str(&format!(
            "{:<6}{:<13}{:<24}{:<12}{:<8}{:<12}{:<6}{}\n",
            c.id,
            format!("{:?}", c.kind).to_lowercase(),
            c.name.as_deref().unwrap_or("-"),
            format!("{}-{}", c.lines.start + 1, c.lines.end + 1),
            c.tokens,
            fmt_opt(c.ami.map(|a| format!("{a:.4}"))),
            fmt_opt(c.rank),
            c.boundaries.len(),
        ));
    }
    for c in table {
        out.push_str(&format!("\n== chunk {} {}\n", c.id, c.name.as_deref().unwrap_or("")));
        for l in &c.line_ppl {
            let mark = if l.boundary { '>' } else { ' ' };
            let ppl = if l.scored {
                format!("{:>10.4}", l.ppl)
            } else {
                format!("{:>10}", "-")
            };
            out.push_str(&format!("{mark}{:>5} {ppl}  {}\n", l.line + 1, l.text));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("ctxprune").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_are_input_errors() {
        assert_eq!(run_args(&["compress"]).0, 1);
        assert_eq!(run_args(&["frobnicate"]).0, 1);
        assert_eq!(run_args(&["compress", "x.py", "--preserve", "all", "-q", "a"]).0, 1);
        assert_eq!(run_args(&["--help"]).0, 0);
    }

    #[test]
    fn missing_input_is_exit_1() {
        let (code, out, err) = run_args(&["compress", "/nonexistent/file.py", "-q", "x"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(err.contains("cannot read"));
    }

    #[test]
    fn inspect_table_header_only_for_empty() {
        let s = format_inspect(&[]);
        assert_eq!(s.lines().count(), 1);
        assert!(s.starts_with("chunk"));
    }
}
