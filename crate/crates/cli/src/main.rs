//! `morphtag`: train a tagger, tag texts, count word categories and run the
//! χ² deviation test.
//!
//! Exit codes: 0 success, 1 invalid data (parse errors, too few texts, ...),
//! 2 usage or I/O errors.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use morphtag::decoder::{tag_text_with, DecodeOptions};
use morphtag::eval::{cross_validate, DEFAULT_FOLDS, DEFAULT_SEED};
use morphtag::morphology::RuleSet;
use morphtag::stylometry::{
    self, count_categories, read_counts_csv, render_csv, render_table, run_test,
    write_counts_csv, TestConfig, DEFAULT_THRESHOLD,
};
use morphtag::text::{parse_annotated_corpus, write_tagged_pairs};
use morphtag::{Model, TagSchema, TrainOptions};

#[derive(Parser, Debug)]
#[command(name = "morphtag", version, about = "Morphology-aware trigram tagger and word-category stylometry")]
struct Cli {
    /// Tagset schema file (default: built-in Ancient Greek schema).
    #[arg(long, global = true)]
    schema: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model from an annotated corpus.
    Train(TrainArgs),
    /// Tag plain-text files with a trained model.
    Tag(TagArgs),
    /// Count word categories in tagged files.
    Count(CountArgs),
    /// Run the χ² deviation test over a counts table.
    Chisq(ChisqArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Annotated corpus: `surface<TAB>tag` lines, blank line between sequences.
    corpus: PathBuf,
    /// Prefix/suffix rule file.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
    /// Seed for cross-validation fold assignment.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Cross-validation folds; 0 skips cross-validation.
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Use unsmoothed feature chains.
    #[arg(long)]
    raw_chain: bool,
}

#[derive(Args, Debug)]
struct TagArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Keep only this many states per position (approximate).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    beam: Option<u64>,
    /// Output file for one input, directory for several; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plain-text inputs; `-` reads stdin.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct CountArgs {
    /// Category to leave out of the counts (repeatable).
    #[arg(long = "exclude-category", default_values_t = [String::from("punct")])]
    exclude_category: Vec<String>,
    /// Counts CSV output; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tagged files; each file's stem is its text id.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

#[derive(Args, Debug)]
struct ChisqArgs {
    /// Counts CSV as written by `count`.
    counts: PathBuf,
    /// χ² cutoff for a significant deviation in one category.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = positive)]
    threshold: f64,
    /// Compare each text with the pooled distribution of the others.
    #[arg(long)]
    exclude_self: bool,
    /// Report CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    /// Bad input data.
    Data(String),
    /// Unreadable or unwritable paths.
    Io(String),
}

type CliResult<T> = Result<T, Failure>;

fn data(context: &Path, e: morphtag::Error) -> Failure {
    Failure::Data(format!("{}: {e}", context.display()))
}

fn read_input(path: &Path) -> CliResult<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Io(format!("stdin: {e}")))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn load_schema(path: Option<&Path>) -> CliResult<TagSchema> {
    match path {
        None => Ok(TagSchema::default_greek()),
        Some(p) => TagSchema::parse(&read_input(p)?).map_err(|e| data(p, e)),
    }
}

fn text_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "stdin".to_string())
}

fn train(schema: TagSchema, args: &TrainArgs) -> CliResult<()> {
    let corpus_text = read_input(&args.corpus)?;
    let rules = match &args.rules {
        Some(p) => RuleSet::parse(&read_input(p)?, &schema).map_err(|e| data(p, e))?,
        None => RuleSet::empty(),
    };
    let corpus = parse_annotated_corpus(&corpus_text, &schema).map_err(|e| data(&args.corpus, e))?;
    let options = TrainOptions {
        raw_chain: args.raw_chain,
        lambda: None,
    };
    let (model, report) = Model::train_with_report(&corpus, rules.clone(), schema.clone(), &options)
        .map_err(|e| data(&args.corpus, e))?;
    model
        .save(&args.out)
        .map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;

    let [l1, l2, l3] = model.lambda();
    eprintln!("sequences: {}", report.sequences);
    eprintln!("tokens: {}", report.tokens);
    eprintln!("lexicon entries: {}", model.lexicon().entry_count());
    eprintln!("unexplained tokens: {}", report.lexicon.unexplained.len());
    eprintln!("lambda: {l1} {l2} {l3}");
    let cv = cross_validate(&corpus, &rules, &schema, &options, args.folds, args.seed)
        .map_err(|e| data(&args.corpus, e))?;
    match cv.accuracy.ratio() {
        Some(r) => eprintln!(
            "cross-validation accuracy ({} folds, seed {}): {:.4} ({}/{})",
            cv.folds, args.seed, r, cv.accuracy.correct, cv.accuracy.total
        ),
        None => eprintln!("cross-validation accuracy: n/a (fewer than two sequences)"),
    }
    Ok(())
}

fn tag(args: &TagArgs) -> CliResult<()> {
    let model = Model::load(&args.model).map_err(|e| match e {
        morphtag::Error::Format(m) => Failure::Io(m),
        other => data(&args.model, other),
    })?;
    let options = DecodeOptions {
        beam: args.beam.map(|b| b as usize),
    };
    let many = args.inputs.len() > 1;
    if many {
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    let mut stdout_buf = String::new();
    for input in &args.inputs {
        let text = read_input(input)?;
        let tagged = tag_text_with(&model, &text, &options).map_err(|e| data(input, e))?;
        let rendered = write_tagged_pairs(&tagged);
        match (&args.out, many) {
            (Some(out), false) => write_output(Some(out), &rendered)?,
            (Some(dir), true) => {
                let target = dir.join(format!("{}.tsv", text_id(input)));
                write_output(Some(&target), &rendered)?;
            }
            (None, _) => stdout_buf.push_str(&rendered),
        }
    }
    if args.out.is_none() {
        write_output(None, &stdout_buf)?;
    }
    Ok(())
}

fn count(schema: TagSchema, args: &CountArgs) -> CliResult<()> {
    let excluded: BTreeSet<String> = args
        .exclude_category
        .iter()
        .filter(|c| !c.is_empty())
        .cloned()
        .collect();
    let mut group = Vec::with_capacity(args.inputs.len());
    let mut ids = BTreeSet::new();
    for input in &args.inputs {
        let id = text_id(input);
        if !ids.insert(id.clone()) {
            return Err(data(input, morphtag::Error::DuplicateTextId(id)));
        }
        let corpus = parse_annotated_corpus(&read_input(input)?, &schema).map_err(|e| data(input, e))?;
        let pairs: Vec<_> = corpus
            .iter()
            .flat_map(|s| {
                s.pairs()
                    .into_iter()
                    .flatten()
                    .map(|(tok, t)| (tok.clone(), t.clone()))
            })
            .collect();
        group.push(count_categories(&pairs, &id, &excluded));
    }
    write_output(args.out.as_deref(), &write_counts_csv(&group))
}

fn chisq(args: &ChisqArgs) -> CliResult<()> {
    let group = read_counts_csv(&read_input(&args.counts)?).map_err(|e| data(&args.counts, e))?;
    let config = TestConfig {
        threshold: args.threshold,
        exclude_self: args.exclude_self,
    };
    let report = run_test(&group, &config).map_err(|e| data(&args.counts, e))?;
    let mut out = render_table(&report);
    for cat in &report.dropped {
        eprintln!("warning: category `{cat}` has pooled probability 0 or 1; not tested");
    }
    if report.is_degenerate() {
        out.push_str("degenerate: all texts have the same deviation count; rho undefined\n");
    } else if report.flagged.is_empty() {
        out.push_str("flagged: none\n");
    } else {
        out.push_str(&format!(
            "flagged (rho >= {}): {}\n",
            stylometry::FLAG_RHO,
            report.flagged.join(" ")
        ));
    }
    write_output(None, &out)?;
    if let Some(p) = &args.out {
        write_output(Some(p), &render_csv(&report))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train(a) => train(load_schema(cli.schema.as_deref())?, a),
        Command::Tag(a) => tag(a),
        Command::Count(a) => count(load_schema(cli.schema.as_deref())?, a),
        Command::Chisq(a) => chisq(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
