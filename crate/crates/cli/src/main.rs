//! `esa`: build sparse concept-space embeddings from an article dump,
//! refine them against an article relatedness graph, and evaluate them on
//! similarity, synonym, and analogy benchmarks.
//!
//! Every artifact the commands produce (matrices, graphs, dumps, dense
//! vector sets, reports) is plain text written deterministically, so the
//! same inputs and flags always yield byte-identical files. Artifacts are
//! written to a temporary sibling and renamed into place, so a command
//! exits 0 only when its output file is complete.

use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use esa_core::{
    build_graph, build_tfidf, cosine, eval_synrel, eval_toefl, eval_wordsim, load_analogy_quads,
    load_dense_vectors, load_synonym_questions, load_word_pairs, matrix_word_vectors, retrofit,
    retrofit_concepts, save_dense_vectors, BetaRule, ConceptGraph, ConvergenceInfo, Corpus,
    DenseVector, Embedder, EvalReport, FileProvider, RetrofitConfig, TfIdfOptions, Tokenizer,
    VectorSet, WordConceptMatrix, MATRIX_MAGIC,
};

#[derive(Parser)]
#[command(
    name = "esa",
    version,
    about = "Concept-space text embeddings: build, refine, and evaluate"
)]
struct Cli {
    /// Settings file with one key=value per line (keys: iterations,
    /// tolerance, alpha, beta, stopwords, top_n, report). Explicit flags
    /// take precedence over the file; the file takes precedence over
    /// built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a word/concept tf-idf matrix from a JSON-lines article dump.
    BuildIndex {
        /// Article dump: one JSON object per line with fields
        /// title, text, links_out.
        #[arg(long, value_name = "FILE")]
        corpus: PathBuf,
        /// Where to write the matrix artifact.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Stopword list, one word per line (replaces the built-in list).
        #[arg(long, value_name = "FILE")]
        stopwords: Option<PathBuf>,
        /// Weight terms by 1 + ln(tf) instead of raw counts.
        #[arg(long)]
        log_tf: bool,
        /// Drop matrix entries below this weight.
        #[arg(long, value_name = "W")]
        min_weight: Option<f64>,
    },
    /// Build the undirected article relatedness graph from a dump's links.
    BuildGraph {
        #[arg(long, value_name = "FILE")]
        corpus: PathBuf,
        /// Where to write the graph artifact.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Pull vectors toward their graph neighbors, printing per-sweep energy.
    Retrofit {
        /// Vector artifact: a matrix (its concept vectors are refined) or
        /// a dense vector file (one `name v1 v2 ...` per line).
        #[arg(long, value_name = "FILE")]
        vectors: PathBuf,
        /// Relatedness graph artifact.
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
        /// Where to write the refined vectors (same format as the input).
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Maximum number of update sweeps.
        #[arg(long, value_name = "N")]
        iterations: Option<usize>,
        /// Stop once the average per-vector movement of a sweep falls
        /// below this value.
        #[arg(long, value_name = "T")]
        tolerance: Option<f64>,
        /// Anchor strength toward each vector's original value.
        #[arg(long, value_name = "A")]
        alpha: Option<f64>,
        /// Neighbor coupling rule: "invdeg" or "const:<c>".
        #[arg(long, value_name = "RULE")]
        beta: Option<String>,
        /// Drop refined sparse entries below this magnitude.
        #[arg(long, value_name = "P")]
        prune_threshold: Option<f64>,
    },
    /// Score a vector artifact against a benchmark dataset.
    Eval {
        #[arg(long, value_enum, value_name = "TASK")]
        task: Task,
        /// Vector artifact: matrix or dense vector file.
        #[arg(long, value_name = "FILE")]
        vectors: PathBuf,
        /// Benchmark dataset file (format depends on the task).
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Where to write the JSON report (default: report.json).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Embed free text from stdin and print its top concepts.
    Embed {
        /// Word/concept matrix artifact.
        #[arg(long, value_name = "FILE")]
        index: PathBuf,
        /// How many concepts to print.
        #[arg(long, value_name = "K")]
        top_n: Option<usize>,
        /// Stopword list, one word per line (replaces the built-in list).
        #[arg(long, value_name = "FILE")]
        stopwords: Option<PathBuf>,
    },
    /// Print the cosine similarity of two words under a vector artifact.
    Similarity {
        /// Vector artifact: matrix or dense vector file.
        #[arg(long, value_name = "FILE")]
        vectors: PathBuf,
        word1: String,
        word2: String,
    },
    /// Assemble a corpus from ranked articles for a list of query words.
    TaskCorpus {
        /// JSON file mapping each query word to its ranked article list.
        #[arg(long, value_name = "FILE")]
        provider: PathBuf,
        /// Query words, one per line.
        #[arg(long, value_name = "FILE")]
        words: PathBuf,
        /// How many top articles to take per word.
        #[arg(long, value_name = "K")]
        top_n: Option<usize>,
        /// Where to write the assembled dump.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Stopword list, one word per line (replaces the built-in list).
        #[arg(long, value_name = "FILE")]
        stopwords: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Task {
    /// Spearman correlation against human word-pair scores.
    Wordsim,
    /// Multiple-choice synonym accuracy.
    Toefl,
    /// Vector-offset analogy accuracy.
    Synrel,
}

/// Optional values read from a `--config` file. Every field mirrors a
/// flag; resolution is flag, then file, then default.
#[derive(Debug, Default, Clone)]
struct FileSettings {
    iterations: Option<usize>,
    tolerance: Option<f64>,
    alpha: Option<f64>,
    beta: Option<String>,
    stopwords: Option<PathBuf>,
    top_n: Option<usize>,
    report: Option<PathBuf>,
}

fn load_settings(path: Option<&Path>) -> Result<FileSettings> {
    let Some(path) = path else {
        return Ok(FileSettings::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut settings = FileSettings::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), idx + 1);
        };
        let (key, value) = (key.trim(), value.trim());
        let parse_err = || format!("{}:{}: invalid value for {key}", path.display(), idx + 1);
        match key {
            "iterations" => settings.iterations = Some(value.parse().with_context(parse_err)?),
            "tolerance" => settings.tolerance = Some(value.parse().with_context(parse_err)?),
            "alpha" => settings.alpha = Some(value.parse().with_context(parse_err)?),
            "beta" => settings.beta = Some(value.to_string()),
            "stopwords" => settings.stopwords = Some(PathBuf::from(value)),
            "top_n" => settings.top_n = Some(value.parse().with_context(parse_err)?),
            "report" => settings.report = Some(PathBuf::from(value)),
            other => bail!("{}:{}: unknown setting {other:?}", path.display(), idx + 1),
        }
    }
    Ok(settings)
}

fn parse_beta(rule: &str) -> Result<BetaRule> {
    if rule == "invdeg" {
        return Ok(BetaRule::InverseDegree);
    }
    if let Some(c) = rule.strip_prefix("const:") {
        let c: f64 = c
            .parse()
            .with_context(|| format!("invalid coupling constant in {rule:?}"))?;
        return Ok(BetaRule::Constant(c));
    }
    bail!("invalid coupling rule {rule:?}: expected \"invdeg\" or \"const:<c>\"")
}

fn make_tokenizer(stopwords: Option<&Path>) -> Result<Tokenizer> {
    match stopwords {
        Some(path) => Tokenizer::from_stopword_file(path)
            .with_context(|| format!("cannot load stopword file {}", path.display())),
        None => Ok(Tokenizer::default()),
    }
}

/// A vector artifact on disk: a word/concept matrix (recognized by its
/// header line) or a plain dense vector file.
enum Artifact {
    Matrix(WordConceptMatrix),
    Dense(VectorSet<DenseVector>),
}

fn load_artifact(path: &Path) -> Result<Artifact> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read vector artifact {}", path.display()))?;
    if text.starts_with(MATRIX_MAGIC) {
        Ok(Artifact::Matrix(
            WordConceptMatrix::load(text.as_bytes())
                .with_context(|| format!("invalid matrix artifact {}", path.display()))?,
        ))
    } else {
        Ok(Artifact::Dense(
            load_dense_vectors(text.as_bytes())
                .with_context(|| format!("invalid dense vector file {}", path.display()))?,
        ))
    }
}

fn load_graph(path: &Path) -> Result<ConceptGraph> {
    let file =
        File::open(path).with_context(|| format!("cannot open graph file {}", path.display()))?;
    ConceptGraph::load(BufReader::new(file))
        .with_context(|| format!("invalid graph file {}", path.display()))
}

/// Writes the finished bytes to a temporary sibling and renames it into
/// place, so `path` either holds the complete artifact or is untouched.
fn write_artifact(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    let write_then_rename = (|| {
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)
    })();
    if write_then_rename.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    write_then_rename.with_context(|| format!("cannot write {}", path.display()))
}

fn print_convergence(info: &ConvergenceInfo) {
    for (i, energy) in info.energies.iter().enumerate() {
        if i == 0 {
            println!("start energy: {energy}");
        } else {
            println!("sweep {i} energy: {energy}");
        }
    }
    println!(
        "finished after {} sweep(s), final average movement {}",
        info.sweeps_run, info.final_avg_change
    );
}

fn pair_similarity<E: Embedder>(embedder: &E, word1: &str, word2: &str) -> Result<f64> {
    let u = embedder
        .embed(word1)
        .with_context(|| format!("word {word1:?} has no vector in this artifact"))?;
    let v = embedder
        .embed(word2)
        .with_context(|| format!("word {word2:?} has no vector in this artifact"))?;
    Ok(cosine(&u, &v))
}

fn print_report(report: &EvalReport) {
    println!("{}: {:.2}", report.metric, report.value_pct);
    println!(
        "items: {} total, {} scored, {} skipped (out of vocabulary)",
        report.items_total, report.items_scored, report.oov_skipped
    );
}

fn run(cli: Cli) -> Result<()> {
    let settings = load_settings(cli.config.as_deref())?;
    match cli.command {
        Command::BuildIndex {
            corpus,
            output,
            stopwords,
            log_tf,
            min_weight,
        } => {
            let stopwords = stopwords.or(settings.stopwords);
            let tokenizer = make_tokenizer(stopwords.as_deref())?;
            let corpus = Corpus::parse_dump_file(&corpus, &tokenizer)
                .with_context(|| format!("cannot parse corpus {}", corpus.display()))?;
            let matrix = build_tfidf(&corpus, &TfIdfOptions { log_tf, min_weight })?;
            let mut buf = Vec::new();
            matrix.save(&mut buf)?;
            write_artifact(&output, &buf)?;
            println!(
                "indexed {} words across {} concepts ({} nonzero entries)",
                matrix.word_count(),
                matrix.concept_count(),
                matrix.entry_count()
            );
            println!("wrote {}", output.display());
        }
        Command::BuildGraph { corpus, output } => {
            let tokenizer = Tokenizer::default();
            let corpus = Corpus::parse_dump_file(&corpus, &tokenizer)
                .with_context(|| format!("cannot parse corpus {}", corpus.display()))?;
            let graph = build_graph(&corpus);
            if graph.is_empty() {
                eprintln!("warning: no mutual links between corpus articles; graph is empty");
            }
            let mut buf = Vec::new();
            graph.save(&mut buf)?;
            write_artifact(&output, &buf)?;
            println!(
                "graph has {} nodes and {} edges",
                graph.node_count(),
                graph.edge_count()
            );
            println!("wrote {}", output.display());
        }
        Command::Retrofit {
            vectors,
            graph,
            output,
            iterations,
            tolerance,
            alpha,
            beta,
            prune_threshold,
        } => {
            let beta_rule = beta.or(settings.beta).unwrap_or_else(|| "invdeg".into());
            let cfg = RetrofitConfig {
                alpha: alpha.or(settings.alpha).unwrap_or(1.0),
                beta: parse_beta(&beta_rule)?,
                iterations: iterations.or(settings.iterations).unwrap_or(10),
                tolerance: tolerance.or(settings.tolerance).unwrap_or(1e-2),
                prune_threshold,
                ..RetrofitConfig::default()
            };
            let graph = load_graph(&graph)?;
            let mut buf = Vec::new();
            match load_artifact(&vectors)? {
                Artifact::Matrix(matrix) => {
                    let (refined, info) = retrofit_concepts(&matrix, &graph, &cfg)?;
                    print_convergence(&info);
                    refined.save(&mut buf)?;
                }
                Artifact::Dense(set) => {
                    let (refined, info) = retrofit(&set, &graph, &cfg)?;
                    print_convergence(&info);
                    save_dense_vectors(&refined, &mut buf)?;
                }
            }
            write_artifact(&output, &buf)?;
            println!("wrote {}", output.display());
        }
        Command::Eval {
            task,
            vectors,
            dataset,
            report,
        } => {
            let open_dataset = || -> Result<BufReader<File>> {
                Ok(BufReader::new(File::open(&dataset).with_context(|| {
                    format!("cannot open dataset {}", dataset.display())
                })?))
            };
            let artifact = load_artifact(&vectors)?;
            let report_data = match task {
                Task::Wordsim => {
                    let pairs = load_word_pairs(open_dataset()?)?;
                    match &artifact {
                        Artifact::Matrix(m) => eval_wordsim(m, &pairs)?,
                        Artifact::Dense(v) => eval_wordsim(v, &pairs)?,
                    }
                }
                Task::Toefl => {
                    let questions = load_synonym_questions(open_dataset()?)?;
                    match &artifact {
                        Artifact::Matrix(m) => eval_toefl(m, &questions)?,
                        Artifact::Dense(v) => eval_toefl(v, &questions)?,
                    }
                }
                Task::Synrel => {
                    let quads = load_analogy_quads(open_dataset()?)?;
                    match &artifact {
                        Artifact::Matrix(m) => eval_synrel(&matrix_word_vectors(m), &quads)?,
                        Artifact::Dense(v) => eval_synrel(v, &quads)?,
                    }
                }
            };
            print_report(&report_data);
            let report_path = report
                .or(settings.report)
                .unwrap_or_else(|| PathBuf::from("report.json"));
            let mut json = report_data.to_json();
            json.push('\n');
            write_artifact(&report_path, json.as_bytes())?;
            println!("report written to {}", report_path.display());
        }
        Command::Embed {
            index,
            top_n,
            stopwords,
        } => {
            let Artifact::Matrix(matrix) = load_artifact(&index)? else {
                bail!("embed requires a word/concept matrix artifact");
            };
            let stopwords = stopwords.or(settings.stopwords);
            let tokenizer = make_tokenizer(stopwords.as_deref())?;
            let top_n = top_n.or(settings.top_n).unwrap_or(10);
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .context("cannot read stdin")?;
            let tokens = tokenizer.tokenize(&text);
            let embedded = matrix.embed_text(&tokens);
            eprintln!(
                "{} token(s) embedded, {} out of vocabulary",
                embedded.tokens_used, embedded.tokens_oov
            );
            for (title, weight) in matrix.top_concepts(&embedded.vector, top_n) {
                println!("{title}\t{weight:.6}");
            }
        }
        Command::Similarity {
            vectors,
            word1,
            word2,
        } => {
            let value = match load_artifact(&vectors)? {
                Artifact::Matrix(m) => pair_similarity(&m, &word1, &word2)?,
                Artifact::Dense(v) => pair_similarity(&v, &word1, &word2)?,
            };
            println!("{value:.6}");
        }
        Command::TaskCorpus {
            provider,
            words,
            top_n,
            output,
            stopwords,
        } => {
            let provider = FileProvider::from_path(&provider)
                .with_context(|| format!("cannot load provider file {}", provider.display()))?;
            let word_list: Vec<String> = fs::read_to_string(&words)
                .with_context(|| format!("cannot read word list {}", words.display()))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect();
            if word_list.is_empty() {
                bail!("word list {} is empty", words.display());
            }
            let stopwords = stopwords.or(settings.stopwords);
            let tokenizer = make_tokenizer(stopwords.as_deref())?;
            let top_n = top_n.or(settings.top_n).unwrap_or(10);
            let corpus = esa_core::build_task_corpus(&word_list, top_n, &provider, &tokenizer)?;
            let mut buf = Vec::new();
            corpus.write_dump(&mut buf)?;
            write_artifact(&output, &buf)?;
            println!(
                "assembled {} document(s) from {} query word(s)",
                corpus.len(),
                word_list.len()
            );
            println!("wrote {}", output.display());
        }
    }
    Ok(())
}

fn main() {
    // Rust ignores SIGPIPE, which turns a downstream reader closing the
    // pipe (e.g. `esa eval ... | head -1`) into a printing panic; restore
    // the default so the process exits quietly like other pipeline tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
