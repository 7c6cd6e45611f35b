//! `kbqa`: command-line front end for parsing, executing and scoring
//! queries, corpus tooling, and training the neural parser.

mod error;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kbqa_core::dataset::{classify_question_type, corpus_stats, parse_corpus, split_corpus, LoadedCorpus};
use kbqa_core::kg::{execute, load_graph, KnowledgeGraph};
use kbqa_core::metrics::{corpus_scores, EvalRecord};
use kbqa_core::sparql::{parse_query, validate};
use kbqa_neural::gradcheck::{gradcheck, tiny_problem};
use kbqa_neural::predict::predict_records;
use kbqa_neural::{checkpoint, train, Model, RunConfig};
use serde::Deserialize;

use error::CliError;

const GRADCHECK_TOL: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(name = "kbqa", version, about = "Text-to-SPARQL toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a query; print its canonical form and syntax tree.
    Parse {
        #[arg(long)]
        query: PathBuf,
    },
    /// Run a query against a graph and print the answers.
    Exec {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
    /// Score predicted queries against gold queries by execution.
    Eval {
        /// JSON array of `{"id": ..., "sparql": ...}` objects.
        #[arg(long)]
        pred: PathBuf,
        /// Corpus file holding the gold queries.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Write the per-record JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Corpus statistics.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Seeded train/dev/test split of a corpus file.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated train,dev,test fractions.
        #[arg(long, default_value = "0.8,0.1,0.1")]
        ratios: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving train.json, dev.json and test.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the neural parser and save a checkpoint.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Held-out corpus for the per-epoch dev loss; defaults to the training corpus.
        #[arg(long)]
        dev: Option<PathBuf>,
        /// JSON run configuration (`{"model": {...}, "train": {...}}`).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output checkpoint path.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-epoch log here as well.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Decode every record of a corpus with a trained checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Write predictions as JSON (the format `eval --pred` reads).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare analytic gradients with finite differences on a small model.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn graph(path: &Path) -> Result<KnowledgeGraph, CliError> {
    Ok(load_graph(&read(path)?)?)
}

fn corpus(path: &Path) -> Result<LoadedCorpus, CliError> {
    Ok(parse_corpus(&read(path)?)?)
}

fn skipped_lines(c: &LoadedCorpus) -> String {
    c.skipped
        .iter()
        .map(|s| format!("skipped: {} ({})\n", s.id, s.reason))
        .collect()
}

fn parse_checked(src: &str) -> Result<kbqa_core::sparql::Query, CliError> {
    let q = parse_query(src).map_err(|e| CliError::Parse {
        code: e.code(),
        rendered: e.render(src).replacen(&format!("{}: ", e.code()), "", 1),
    })?;
    let diags = validate(&q);
    if !diags.is_empty() {
        let all: Vec<String> = diags.iter().map(ToString::to_string).collect();
        return Err(CliError::Validation(all.join("; ")));
    }
    Ok(q)
}

#[derive(Deserialize)]
struct PredRecord {
    id: String,
    sparql: Option<String>,
}

fn run(cmd: Command) -> Result<String, CliError> {
    match cmd {
        Command::Parse { query } => {
            let q = parse_checked(&read(&query)?)?;
            Ok(format!("{q}\ntype: {}\n{q:#?}\n", classify_question_type(&q)))
        }
        Command::Exec { graph: g, query } => {
            let kg = graph(&g)?;
            let q = parse_checked(&read(&query)?)?;
            let answers = execute(&kg, &q)?;
            let text = answers.to_string();
            Ok(if text.is_empty() { text } else { text + "\n" })
        }
        Command::Eval {
            pred,
            gold,
            graph: g,
            report,
        } => {
            let kg = graph(&g)?;
            let gold = corpus(&gold)?;
            let preds: Vec<PredRecord> =
                serde_json::from_str(&read(&pred)?).map_err(|e| CliError::Predictions(format!("{}: {e}", pred.display())))?;
            let mut by_id = std::collections::BTreeMap::new();
            for p in preds {
                if by_id.insert(p.id.clone(), p.sparql).is_some() {
                    return Err(CliError::Predictions(format!("duplicate prediction id `{}`", p.id)));
                }
            }
            let records: Vec<EvalRecord> = gold
                .records
                .iter()
                .map(|r| EvalRecord {
                    id: r.id.clone(),
                    pred: by_id.get(&r.id).cloned().flatten(),
                    gold: r.gold.clone(),
                })
                .collect();
            let scores = corpus_scores(&records, &kg)?;
            if let Some(path) = report {
                write(&path, &serde_json::to_string_pretty(&scores.to_json()).expect("serialisable"))?;
            }
            Ok(skipped_lines(&gold) + &scores.to_kv())
        }
        Command::Stats { corpus: c, report } => {
            let loaded = corpus(&c)?;
            let text = corpus_stats(&loaded.records)?.to_string();
            if let Some(path) = report {
                write(&path, &text)?;
            }
            Ok(format!("{text}skipped: {}\n", loaded.skipped.len()))
        }
        Command::Split {
            corpus: c,
            ratios,
            seed,
            out,
        } => {
            let parsed: Vec<f64> = ratios
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("--ratios `{ratios}`: {e}")))?;
            let ratios: [f64; 3] = parsed
                .try_into()
                .map_err(|_| CliError::Usage(format!("--ratios `{ratios}` needs three values")))?;
            let text = read(&c)?;
            let loaded = parse_corpus(&text)?;
            let raw: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap_or_default();
            let keep: Vec<serde_json::Value> = raw
                .into_iter()
                .enumerate()
                .filter(|(i, _)| !loaded.skipped.iter().any(|s| s.index == *i))
                .map(|(_, v)| v)
                .collect();
            let (tr, dv, te) = split_corpus(&keep, ratios, seed)?;
            fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            let mut summary = skipped_lines(&loaded);
            for (name, part) in [("train", &tr), ("dev", &dv), ("test", &te)] {
                let path = out.join(format!("{name}.json"));
                write(&path, &serde_json::to_string_pretty(part).expect("serialisable"))?;
                summary += &format!("{name}: {}\n", part.len());
            }
            Ok(summary)
        }
        Command::Train {
            corpus: c,
            dev,
            config,
            checkpoint: ckpt,
            seed,
            report,
        } => {
            let mut cfg = match config {
                Some(p) => RunConfig::from_json(&read(&p)?)?,
                None => RunConfig::default(),
            };
            cfg.train.seed = seed;
            let loaded = corpus(&c)?;
            let mut out = skipped_lines(&loaded);
            let mut model = Model::for_records(cfg.model.clone(), &loaded.records, seed)?;
            let (train_set, unusable) = train::prepare(&model, &loaded.records);
            for u in &unusable {
                out += &format!("skipped: {} ({})\n", u.id, u.reason);
            }
            let dev_set = match dev {
                Some(p) => {
                    let d = corpus(&p)?;
                    let (ex, bad) = train::prepare(&model, &d.records);
                    for u in &bad {
                        out += &format!("dev skipped: {} ({})\n", u.id, u.reason);
                    }
                    ex
                }
                None => Vec::new(),
            };
            print!("{out}");
            out.clear();
            let logs = train::train(&mut model, &train_set, &dev_set, &cfg.train, |l| println!("{l}"))?;
            if let Some(path) = report {
                let text: String = logs.iter().map(|l| format!("{l}\n")).collect();
                write(&path, &text)?;
            }
            checkpoint::save(&model, &ckpt)?;
            Ok(format!("checkpoint: {}\n", ckpt.display()))
        }
        Command::Predict {
            checkpoint: ckpt,
            corpus: c,
            report,
        } => {
            let model = checkpoint::load(&ckpt)?;
            let loaded = corpus(&c)?;
            let preds = predict_records(&model, &loaded.records);
            if let Some(path) = report {
                write(&path, &serde_json::to_string_pretty(&preds).expect("serialisable"))?;
            }
            let mut out = skipped_lines(&loaded);
            for p in &preds {
                match (&p.sparql, &p.error) {
                    (Some(s), _) => out += &format!("{}\t{s}\n", p.id),
                    (None, Some(e)) => out += &format!("{}\t# {e}\n", p.id),
                    (None, None) => out += &format!("{}\t\n", p.id),
                }
            }
            Ok(out)
        }
        Command::Gradcheck { seed, report } => {
            let (model, ex) = tiny_problem(seed)?;
            let r = gradcheck(&model, &ex, 1e-5, None)?;
            let text = format!("{r}\n");
            if let Some(path) = report {
                write(&path, &text)?;
            }
            if !r.passes(GRADCHECK_TOL) {
                print!("{text}");
                let w = r.worst().expect("at least one tensor");
                return Err(CliError::GradcheckFailed {
                    name: w.name.clone(),
                    error: w.rel_error,
                    tol: GRADCHECK_TOL,
                });
            }
            Ok(text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("UsageError: {first}");
            eprint!("{msg}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
