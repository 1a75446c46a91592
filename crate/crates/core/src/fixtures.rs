//! Seed-deterministic synthetic corpora for tests and demos.
//!
//! Identifiers in generated code never collide with the instruction's filler
//! words, so under the mock scorer only the functions named in `overlap` can
//! lower the instruction's perplexity.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const WORDS: &[&str] = &[
    "amber", "basalt", "cedar", "dune", "ember", "fjord", "garnet", "harbor", "iris", "jasper", "kelp", "lumen",
    "marble", "nectar", "onyx", "pebble", "quartz", "raven", "sable", "tundra", "umber", "velvet", "willow", "xenon",
    "yarrow", "zephyr",
];

/// Words used only in instructions; none of them appear in generated code.
const FILLER: &[&str] = &["implement", "the", "helper", "that", "combines", "with"];

const OPS: &[&str] = &["+", "-", "*"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpus {
    pub files: Vec<FixtureFile>,
    pub instructions: Vec<String>,
    /// Generated function names, in document order.
    pub functions: Vec<String>,
    /// Indices of functions whose identifiers the instruction mentions.
    pub overlapping: Vec<usize>,
    /// Golden digests, when known.
    pub expected: Vec<GoldenDigest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenDigest {
    pub case: String,
    pub text_sha256: String,
    pub metadata_sha256: String,
}

fn ident(rng: &mut ChaCha8Rng, tag: usize) -> String {
    let a = WORDS.choose(rng).expect("non-empty");
    let b = WORDS.choose(rng).expect("non-empty");
    format!("{a}_{b}_{tag}")
}

/// One generated Python function and the two identifiers an instruction can use.
fn function(rng: &mut ChaCha8Rng, index: usize) -> (String, String, String) {
    let name = ident(rng, index);
    let args = [format!("{}_{index}", WORDS.choose(rng).unwrap()), format!("arg{index}")];
    let mut vars: Vec<String> = args.to_vec();
    let mut lines = vec![format!("def {name}({}, {}):", args[0], args[1])];
    let statements = rng.random_range(4..=10);
    for s in 0..statements {
        if s > 0 && rng.random_bool(0.3) {
            let words: Vec<&str> = WORDS.choose_multiple(rng, 3).copied().collect();
            lines.push(format!("    # {}", words.join(" ")));
        }
        let target = format!("{}_{index}_{s}", WORDS.choose(rng).unwrap());
        let lhs = vars.choose(rng).unwrap().clone();
        let op = OPS.choose(rng).unwrap();
        let rhs = if rng.random_bool(0.5) {
            vars.choose(rng).unwrap().clone()
        } else {
            rng.random_range(2..100).to_string()
        };
        if rng.random_bool(0.2) {
            lines.push(format!("    if {lhs} > {rhs}:"));
            lines.push(format!("        {target} = {lhs} {op} {rhs}"));
            lines.push("    else:".to_string());
            lines.push(format!("        {target} = {rhs}"));
        } else {
            lines.push(format!("    {target} = {lhs} {op} {rhs}"));
        }
        vars.push(target);
    }
    lines.push(format!("    return {}", vars.last().unwrap()));
    let witness = vars[2].clone();
    (lines.join("\n") + "\n", name, witness)
}

/// A single Python file of `n_functions` functions and one instruction that
/// names every function listed in `overlap`.
pub fn generate_corpus(seed: u64, n_functions: usize, overlap: &[usize]) -> SyntheticCorpus {
    assert!(n_functions >= 1, "at least one function");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    let mut functions = Vec::new();
    let mut mentions = Vec::new();
    for i in 0..n_functions {
        let (body, name, witness) = function(&mut rng, i);
        if i > 0 {
            text.push('\n');
        }
        text.push_str(&body);
        if overlap.contains(&i) {
            mentions.push(format!("{name} {witness}"));
        }
        functions.push(name);
    }
    let instruction = if mentions.is_empty() {
        FILLER.join(" ")
    } else {
        format!(
            "{} {} {} {} {}",
            FILLER[0],
            FILLER[1],
            FILLER[2],
            FILLER[3],
            mentions.join(&format!(" {} ", FILLER[5]))
        )
    };
    let mut overlapping: Vec<usize> = overlap.iter().copied().filter(|&i| i < n_functions).collect();
    overlapping.sort_unstable();
    overlapping.dedup();
    SyntheticCorpus {
        files: vec![FixtureFile {
            name: format!("corpus_seed{seed}.py"),
            text,
        }],
        instructions: vec![instruction],
        functions,
        overlapping,
        expected: Vec::new(),
    }
}

pub const CONFIG_SCENARIO: &str = "\
import math


class Config:
    learning_rate = 0.001
    batch_size = 32
    epochs = 10
    seed = 7


def load_rows(path):
    handle = open(path)
    rows = handle.readlines()
    handle.close()
    return rows


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return dot / (na * nb)


def shuffle_rows(rows, rng):
    order = list(range(len(rows)))
    rng.shuffle(order)
    picked = [rows[i] for i in order]
    return picked
";

/// Instruction that needs configuration values but shares no words with the
/// code except the two field names planted in `Config`.
pub const CONFIG_INSTRUCTION: &str = "write train_model so it reads learning_rate and batch_size before training";
