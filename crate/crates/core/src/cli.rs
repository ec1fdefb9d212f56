//! Command-line front end. `run_command` is the whole program; the binary
//! only forwards argv and the standard streams.

use std::fmt::Display;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ColorChoice, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::derivation::{derive, parse_corpus, parse_tree_corpus, render_corpus, validate_derivation, DerivationTree, DerivedTree};
use crate::estimation::{estimate, estimate_dop, estimate_dop_exact, extract_fragments, sample_corpus, FragmentOptions};
use crate::events::{Site, SiteContext};
use crate::grammar::{parse_grammar, validate_grammar, Grammar, Severity, Violation};
use crate::models::{
    format_prob, lift_slg1, lift_slg2, parse_params, render_params, score_derivation, score_derived_tree_dop,
    DerivationScorer, Lifted, Params, Slg2Params,
};
use crate::search::{enumerate_derivations, nbest, sentence_probability, total_mass, SearchBounds};
use crate::smoothing::{build_smoothed, site_contexts, BackoffConfig, Technique};
use crate::stats::{chi_square_exact, chi_square_with, dependency_table, ChiSquareResult, Classifier, ContingencyTable, Selector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    #[value(alias = "json-lines")]
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "slg", version, about = "Stochastic lexicalized grammars: estimation, scoring and search")]
struct Cli {
    /// Output format. `json` writes one JSON object per line.
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    /// Print natural-log probabilities instead of probabilities.
    #[arg(long, global = true)]
    log: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Maximum number of elementary-tree uses per derivation.
    #[arg(long = "max-uses")]
    max_uses: usize,
    /// Maximum adjunctions at one node.
    #[arg(long = "max-adj")]
    max_adj: Option<usize>,
    /// Maximum number of words in the yield.
    #[arg(long = "max-yield")]
    max_yield: Option<usize>,
}

impl BoundArgs {
    fn bounds(&self) -> SearchBounds {
        SearchBounds { max_tree_uses: self.max_uses, max_adj_per_node: self.max_adj, max_yield: self.max_yield }
    }
}

#[derive(Args, Debug)]
struct DepthArgs {
    /// Deepest fragment kept.
    #[arg(long = "max-depth", conflicts_with = "unbounded")]
    max_depth: Option<usize>,
    /// Keep fragments of every depth.
    #[arg(long)]
    unbounded: bool,
    /// Per-tree fragment guard.
    #[arg(long = "max-fragments")]
    max_fragments: Option<u64>,
}

impl DepthArgs {
    fn options(&self) -> FragmentOptions {
        let mut o = if self.unbounded { FragmentOptions::unbounded() } else { FragmentOptions::default() };
        if let Some(d) = self.max_depth {
            o.max_depth = Some(d);
        }
        if let Some(n) = self.max_fragments {
            o.max_fragments = n;
        }
        o
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a grammar and optionally a corpus and parameter file against it.
    Validate {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        corpus: Option<PathBuf>,
        #[arg(short, long)]
        params: Option<PathBuf>,
    },
    /// Relative-frequency estimate from a derivation corpus (levels 1-3) or a
    /// derived-tree corpus (level 4).
    Estimate {
        #[arg(short, long)]
        grammar: Option<PathBuf>,
        #[arg(short, long)]
        corpus: Option<PathBuf>,
        /// Derived-tree corpus for level 4.
        #[arg(short, long)]
        trees: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        level: u8,
        #[command(flatten)]
        depth: DepthArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Probability of derivations under a parameter file.
    Score {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        params: PathBuf,
        /// Inline derivation, or a path to a file holding one.
        #[arg(short, long, required_unless_present = "corpus")]
        derivation: Option<String>,
        #[arg(short, long, conflicts_with = "derivation")]
        corpus: Option<PathBuf>,
        /// Score under the lift of the parameters to the next level.
        #[arg(long)]
        lift: bool,
    },
    /// Draw derivations from a model.
    Sample {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        params: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(short = 'n', long, default_value_t = 1)]
        count: usize,
        /// Abort a draw after this many derivation nodes.
        #[arg(long = "max-nodes", default_value_t = 10_000)]
        max_nodes: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List every derivation within the bounds, with probabilities if a model is given.
    Enumerate {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Print only the total probability mass.
        #[arg(long, requires = "params")]
        total: bool,
    },
    /// Most probable derivations of a sentence.
    Nbest {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        params: PathBuf,
        #[arg(short, long)]
        sentence: String,
        #[arg(short, default_value_t = 1)]
        k: usize,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Sum over all derivations of a sentence within the bounds.
    Sentprob {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        params: PathBuf,
        #[arg(short, long)]
        sentence: String,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Rewrite level-1 parameters as the equivalent level-2 parameters.
    Lift {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        params: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build a backed-off model from a corpus and score with it, or print its
    /// site distributions.
    Smooth {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        corpus: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        level: u8,
        /// `key = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "lambda-anchor")]
        lambda_anchor: Option<f64>,
        #[arg(long = "lambda-family")]
        lambda_family: Option<f64>,
        #[arg(long = "lambda-level")]
        lambda_level: Option<f64>,
        /// Comma-separated chain, e.g. `family,anchor,level`.
        #[arg(long)]
        order: Option<String>,
        #[arg(short, long)]
        derivation: Option<String>,
        /// Corpus of derivations to score.
        #[arg(long, conflicts_with = "derivation")]
        eval: Option<PathBuf>,
    },
    /// Count the fragments of a derived-tree corpus.
    Fragments {
        #[arg(short, long)]
        trees: PathBuf,
        #[command(flatten)]
        depth: DepthArgs,
    },
    /// Probability of derived trees under a fragment model.
    Dopscore {
        /// Level-4 parameter file.
        #[arg(short, long, required_unless_present = "train")]
        params: Option<PathBuf>,
        /// Estimate the model from this derived-tree corpus instead.
        #[arg(long, conflicts_with = "params")]
        train: Option<PathBuf>,
        #[command(flatten)]
        depth: DepthArgs,
        /// Inline derived tree.
        #[arg(long, required_unless_present = "eval")]
        tree: Option<String>,
        #[arg(long, conflicts_with = "tree")]
        eval: Option<PathBuf>,
        /// Exact rational arithmetic (needs --train).
        #[arg(long, requires = "train")]
        exact: bool,
    },
    /// Pearson chi-square test of a contingency table.
    Chisq {
        /// Rows separated by `;`, cells by `,`.
        #[arg(long, required_unless_present = "csv")]
        table: Option<String>,
        /// Table in the CSV layout written by `deptable --format csv`.
        #[arg(long, conflicts_with = "table")]
        csv: Option<PathBuf>,
        #[arg(long)]
        yates: bool,
        /// Also print the statistic as an exact fraction.
        #[arg(long)]
        exact: bool,
    },
    /// Cross-tabulate the fillers of two sites over a corpus.
    Deptable {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        corpus: PathBuf,
        #[arg(long)]
        row: String,
        #[arg(long)]
        col: String,
        #[arg(long, default_value = "tree")]
        classify: String,
        /// Append the chi-square test of the table.
        #[arg(long)]
        chisq: bool,
        #[arg(long, requires = "chisq")]
        yates: bool,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

fn domain(e: impl Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Domain(format!("write failed: {e}"))
}

type CliResult = Result<(), CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_grammar(path: &Path) -> Result<Grammar, CliError> {
    parse_grammar(&read(path)?).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn load_params(path: &Path) -> Result<Params, CliError> {
    parse_params(&read(path)?).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn load_corpus(path: &Path) -> Result<Vec<DerivationTree>, CliError> {
    parse_corpus(&read(path)?).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn load_trees(path: &Path) -> Result<Vec<DerivedTree>, CliError> {
    parse_tree_corpus(&read(path)?).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

/// `-d` takes an inline derivation when the argument starts with `(`,
/// otherwise a path to a file holding exactly one.
fn load_derivation(arg: &str) -> Result<DerivationTree, CliError> {
    if arg.trim_start().starts_with('(') {
        return DerivationTree::parse(arg).map_err(domain);
    }
    let mut all = load_corpus(Path::new(arg))?;
    match all.len() {
        1 => Ok(all.remove(0)),
        n => Err(CliError::Domain(format!("{arg}: expected one derivation, found {n}"))),
    }
}

fn words(sentence: &str) -> Vec<&str> {
    sentence.split_whitespace().collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn site_label(c: &SiteContext) -> String {
    match &c.site {
        Site::Root => format!("root {}", c.label),
        Site::Node { host, addr } => format!("{host}@{addr} {} {}", c.label, c.op),
    }
}

/// Writes records in the selected format. Text rows are tab separated.
struct Emitter<'a> {
    out: &'a mut dyn Write,
    format: Format,
    log: bool,
    header_done: bool,
}

impl Emitter<'_> {
    /// Renders a probability, or its log under `--log`.
    fn prob(&self, p: f64) -> String {
        if self.log {
            format_prob(p.ln())
        } else {
            format_prob(p)
        }
    }

    fn prob_key(&self) -> &'static str {
        if self.log {
            "log_prob"
        } else {
            "prob"
        }
    }

    fn prob_json(&self, p: f64) -> Value {
        let v = if self.log { p.ln() } else { p };
        let rounded: f64 = format_prob(v).parse().unwrap_or(v);
        // JSON has no infinity
        if rounded.is_finite() {
            json!(rounded)
        } else {
            Value::Null
        }
    }

    fn line(&mut self, s: impl Display) -> CliResult {
        writeln!(self.out, "{s}").map_err(io_err)
    }

    /// One record: `fields` as (key, text, json) triples.
    fn record(&mut self, fields: &[(&str, String, Value)]) -> CliResult {
        match self.format {
            Format::Text => {
                let row: Vec<&str> = fields.iter().map(|(_, t, _)| t.as_str()).collect();
                self.line(row.join("\t"))
            }
            Format::Csv => {
                if !self.header_done {
                    let head: Vec<&str> = fields.iter().map(|(k, _, _)| *k).collect();
                    self.line(head.join(","))?;
                    self.header_done = true;
                }
                let row: Vec<String> = fields.iter().map(|(_, t, _)| csv_field(t)).collect();
                self.line(row.join(","))
            }
            Format::Json => {
                let obj: serde_json::Map<String, Value> =
                    fields.iter().map(|(k, _, v)| (k.to_string(), v.clone())).collect();
                self.line(Value::Object(obj))
            }
        }
    }
}

fn str_field(key: &'static str, s: impl Display) -> (&'static str, String, Value) {
    let s = s.to_string();
    (key, s.clone(), json!(s))
}

fn num_field(key: &'static str, n: usize) -> (&'static str, String, Value) {
    (key, n.to_string(), json!(n))
}

fn prob_field(em: &Emitter<'_>, p: f64) -> (&'static str, String, Value) {
    (em.prob_key(), em.prob(p), em.prob_json(p))
}

fn write_output(em: &mut Emitter<'_>, output: &Option<PathBuf>, text: &str) -> CliResult {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display()))),
        None => em.out.write_all(text.as_bytes()).map_err(io_err),
    }
}

enum Scorer<'p> {
    Plain(&'p dyn DerivationScorer),
    Owned(Params),
    Intensional(Lifted<&'p Slg2Params>),
}

impl Scorer<'_> {
    fn get(&self) -> &dyn DerivationScorer {
        match self {
            Scorer::Plain(m) => *m,
            Scorer::Owned(p) => p.as_scorer().expect("only derivation levels are stored"),
            Scorer::Intensional(l) => l,
        }
    }
}

fn scorer<'p>(params: &'p Params, lift: bool, g: &Grammar) -> Result<Scorer<'p>, CliError> {
    if !lift {
        return params
            .as_scorer()
            .map(Scorer::Plain)
            .ok_or_else(|| CliError::Domain("level-4 parameters score derived trees; use `dopscore`".into()));
    }
    match params {
        Params::Slg1(p) => Ok(Scorer::Owned(Params::Slg2(lift_slg1(p, g).map_err(domain)?))),
        Params::Slg2(p) => Ok(Scorer::Intensional(lift_slg2(p).map_err(domain)?)),
        other => Err(CliError::Domain(format!("level-{} parameters have no lift", other.level()))),
    }
}

fn cmd_validate(em: &mut Emitter<'_>, grammar: &Path, corpus: Option<&Path>, params: Option<&Path>) -> Result<bool, CliError> {
    let g = load_grammar(grammar)?;
    let mut all: Vec<Violation> = validate_grammar(&g);
    if let Some(c) = corpus {
        for (i, d) in load_corpus(c)?.iter().enumerate() {
            match validate_derivation(&g, d) {
                Ok(vs) => all.extend(vs.into_iter().map(|v| Violation { message: format!("derivation {i}: {}", v.message), ..v })),
                Err(e) => all.push(Violation::error(format!("derivation {i}: {e}"))),
            }
        }
    }
    if let Some(p) = params {
        all.extend(load_params(p)?.check_well_formed(Some(&g)));
    }
    for v in &all {
        let sev = match v.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        em.record(&[str_field("severity", sev), str_field("message", &v.message)])?;
    }
    if em.format == Format::Text {
        let n = all.len();
        em.line(format!("{n} violation{}", if n == 1 { "" } else { "s" }))?;
    }
    Ok(all.iter().all(|v| v.severity != Severity::Error))
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(
    em: &mut Emitter<'_>,
    grammar: Option<&Path>,
    corpus: Option<&Path>,
    trees: Option<&Path>,
    level: u8,
    depth: &DepthArgs,
    output: &Option<PathBuf>,
) -> CliResult {
    let params = if level == 4 {
        let path = trees.ok_or_else(|| CliError::Usage("--level 4 needs --trees".into()))?;
        Params::Slg4(estimate_dop(&load_trees(path)?, depth.options()).map_err(domain)?)
    } else {
        let g = load_grammar(grammar.ok_or_else(|| CliError::Usage(format!("--level {level} needs --grammar")))?)?;
        let c = load_corpus(corpus.ok_or_else(|| CliError::Usage(format!("--level {level} needs --corpus")))?)?;
        estimate(&g, &c, level).map_err(domain)?
    };
    write_output(em, output, &render_params(&params))
}

fn score_rows(em: &mut Emitter<'_>, g: &Grammar, corpus: &[DerivationTree], m: &dyn DerivationScorer) -> CliResult {
    for (i, d) in corpus.iter().enumerate() {
        let lp = score_derivation(m, g, d).map_err(|e| CliError::Domain(format!("derivation {i}: {e}")))?;
        let p = lp.exp();
        em.record(&[num_field("index", i), prob_field(em, p), str_field("derivation", d)])?;
    }
    Ok(())
}

fn cmd_enumerate(em: &mut Emitter<'_>, g: &Grammar, params: Option<&Params>, b: SearchBounds, total: bool) -> CliResult {
    let m = match params {
        Some(p) => Some(p.as_scorer().ok_or_else(|| CliError::Domain("level-4 parameters cannot score derivations".into()))?),
        None => None,
    };
    if total {
        let mass = total_mass(m.expect("clap requires params"), g, b).map_err(domain)?;
        return em.record(&[prob_field(em, mass)]);
    }
    for (i, d) in enumerate_derivations(g, b).iter().enumerate() {
        let sentence = derive(g, d).map_err(domain)?.sentence();
        let mut fields = vec![num_field("index", i)];
        if let Some(m) = m {
            let p = match m.log_prob(g, d) {
                Ok(lp) => lp.exp(),
                Err(crate::models::ModelError::MissingContext(_)) => 0.0,
                Err(e) => return Err(domain(e)),
            };
            fields.push(prob_field(em, p));
        }
        fields.push(str_field("derivation", d));
        fields.push(str_field("sentence", sentence));
        em.record(&fields)?;
    }
    Ok(())
}

fn backoff_config(
    config: Option<&Path>,
    lambdas: [(Technique, Option<f64>); 3],
    order: Option<&str>,
) -> Result<BackoffConfig, CliError> {
    let mut c = match config {
        Some(p) => BackoffConfig::parse(&read(p)?).map_err(domain)?,
        None => BackoffConfig::default(),
    };
    for (t, v) in lambdas {
        if let Some(v) = v {
            c.set_lambda(t, v);
        }
    }
    if let Some(o) = order {
        c.order = o.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>().map_err(domain)?;
    }
    c.validate().map_err(domain)?;
    Ok(c)
}

/// Parses `10,20;30,40`.
fn parse_inline_table(s: &str) -> Result<ContingencyTable, CliError> {
    let rows = s
        .split(';')
        .map(|r| r.split(',').map(|c| c.trim().parse::<u64>()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("bad --table `{s}`: {e}")))?;
    Ok(ContingencyTable::from_counts(rows))
}

/// Header row of column names, then one row per line led by its name.
fn parse_csv_table(text: &str) -> Result<ContingencyTable, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| CliError::Domain("empty table".into()))?;
    let cols: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
    let (mut rows, mut counts) = (Vec::new(), Vec::new());
    for (i, l) in lines.enumerate() {
        let mut cells = l.split(',');
        rows.push(cells.next().unwrap_or("").trim().to_string());
        let row = cells
            .map(|c| c.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Domain(format!("table row {}: {e}", i + 1)))?;
        counts.push(row);
    }
    Ok(ContingencyTable { rows, cols, counts })
}

fn emit_chisq(em: &mut Emitter<'_>, r: &ChiSquareResult, exact: Option<String>) -> CliResult {
    let mut fields = vec![
        ("statistic", format_prob(r.statistic), json!(r.statistic)),
        ("df", r.df.to_string(), json!(r.df)),
        ("p_value", format_prob(r.p_value), json!(r.p_value)),
    ];
    if let Some(x) = exact {
        fields.push(str_field("exact", x));
    }
    if em.format == Format::Text {
        for (k, t, _) in &fields {
            em.line(format!("{k}\t{t}"))?;
        }
        return Ok(());
    }
    em.record(&fields)
}

fn emit_table(em: &mut Emitter<'_>, t: &ContingencyTable) -> CliResult {
    match em.format {
        Format::Text => em.out.write_all(t.to_text().as_bytes()).map_err(io_err),
        Format::Csv => em.out.write_all(t.to_csv().as_bytes()).map_err(io_err),
        Format::Json => {
            for (r, row) in t.rows.iter().zip(&t.counts) {
                for (c, n) in t.cols.iter().zip(row) {
                    em.line(json!({"row": r, "col": c, "count": n}))?;
                }
            }
            Ok(())
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    let mut em = Emitter { out, format: cli.format, log: cli.log, header_done: false };
    let em = &mut em;
    match cli.command {
        Command::Validate { grammar, corpus, params } => return cmd_validate(em, &grammar, corpus.as_deref(), params.as_deref()),
        Command::Estimate { grammar, corpus, trees, level, depth, output } => {
            cmd_estimate(em, grammar.as_deref(), corpus.as_deref(), trees.as_deref(), level, &depth, &output)?
        }
        Command::Score { grammar, params, derivation, corpus, lift } => {
            let g = load_grammar(&grammar)?;
            let p = load_params(&params)?;
            let ds = match (derivation, corpus) {
                (Some(d), _) => vec![load_derivation(&d)?],
                (None, Some(c)) => load_corpus(&c)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let m = scorer(&p, lift, &g)?;
            score_rows(em, &g, &ds, m.get())?;
        }
        Command::Sample { grammar, params, seed, count, max_nodes, output } => {
            let g = load_grammar(&grammar)?;
            let p = load_params(&params)?;
            let ds = sample_corpus(&p, &g, seed, count, max_nodes).map_err(domain)?;
            if em.format == Format::Text || output.is_some() {
                write_output(em, &output, &render_corpus(&ds))?;
            } else {
                for (i, d) in ds.iter().enumerate() {
                    let s = derive(&g, d).map_err(domain)?.sentence();
                    em.record(&[num_field("index", i), str_field("derivation", d), str_field("sentence", s)])?;
                }
            }
        }
        Command::Enumerate { grammar, params, bounds, total } => {
            let g = load_grammar(&grammar)?;
            let p = params.as_deref().map(load_params).transpose()?;
            cmd_enumerate(em, &g, p.as_ref(), bounds.bounds(), total)?;
        }
        Command::Nbest { grammar, params, sentence, k, bounds } => {
            let g = load_grammar(&grammar)?;
            let p = load_params(&params)?;
            let m = p.as_scorer().ok_or_else(|| CliError::Domain("level-4 parameters cannot score derivations".into()))?;
            let ranked = nbest(m, &g, &words(&sentence), k, bounds.bounds()).map_err(domain)?;
            if ranked.is_empty() {
                return Err(CliError::Domain(format!("no derivation of `{sentence}` within the bounds")));
            }
            for (i, (d, lp)) in ranked.iter().enumerate() {
                em.record(&[num_field("rank", i + 1), prob_field(em, lp.exp()), str_field("derivation", d)])?;
            }
        }
        Command::Sentprob { grammar, params, sentence, bounds } => {
            let g = load_grammar(&grammar)?;
            let p = load_params(&params)?;
            let m = p.as_scorer().ok_or_else(|| CliError::Domain("level-4 parameters cannot score derivations".into()))?;
            let prob = sentence_probability(m, &g, &words(&sentence), bounds.bounds()).map_err(domain)?;
            em.record(&[prob_field(em, prob), str_field("sentence", &sentence)])?;
        }
        Command::Lift { grammar, params, output } => {
            let g = load_grammar(&grammar)?;
            match load_params(&params)? {
                Params::Slg1(p) => {
                    let lifted = Params::Slg2(lift_slg1(&p, &g).map_err(domain)?);
                    write_output(em, &output, &render_params(&lifted))?;
                }
                Params::Slg2(_) => {
                    return Err(CliError::Domain(
                        "the level-3 lift has infinitely many expansions and cannot be written out; use `score --lift`".into(),
                    ))
                }
                other => return Err(CliError::Domain(format!("level-{} parameters have no lift", other.level()))),
            }
        }
        Command::Smooth { grammar, corpus, level, config, lambda_anchor, lambda_family, lambda_level, order, derivation, eval } => {
            let g = load_grammar(&grammar)?;
            let c = load_corpus(&corpus)?;
            let cfg = backoff_config(
                config.as_deref(),
                [(Technique::Anchor, lambda_anchor), (Technique::Family, lambda_family), (Technique::Level, lambda_level)],
                order.as_deref(),
            )?;
            let m = build_smoothed(&g, &c, level, &cfg).map_err(domain)?;
            let targets = match (derivation, eval) {
                (Some(d), _) => Some(vec![load_derivation(&d)?]),
                (None, Some(e)) => Some(load_corpus(&e)?),
                (None, None) => None,
            };
            match targets {
                Some(ds) => score_rows(em, &g, &ds, &m)?,
                None => {
                    for ctx in site_contexts(&g) {
                        for (o, p) in m.distribution(&ctx) {
                            em.record(&[str_field("context", site_label(&ctx)), str_field("outcome", o), prob_field(em, p)])?;
                        }
                    }
                }
            }
        }
        Command::Fragments { trees, depth } => {
            let counts = extract_fragments(&load_trees(&trees)?, depth.options()).map_err(domain)?;
            for (f, n) in counts {
                em.record(&[("count", n.to_string(), json!(n)), str_field("fragment", f)])?;
            }
        }
        Command::Dopscore { params, train, depth, tree, eval, exact } => {
            let targets = match (tree, eval) {
                (Some(t), _) => vec![DerivedTree::parse(&t).map_err(domain)?],
                (None, Some(e)) => load_trees(&e)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            if exact {
                let path = train.expect("clap requires --train");
                let m = estimate_dop_exact(&load_trees(&path)?, depth.options()).map_err(domain)?;
                for (i, t) in targets.iter().enumerate() {
                    let p = score_derived_tree_dop(&m, t);
                    let f = num_traits::ToPrimitive::to_f64(&p).unwrap_or(f64::NAN);
                    em.record(&[num_field("index", i), prob_field(em, f), str_field("exact", &p), str_field("tree", t)])?;
                }
                return Ok(true);
            }
            let m = match (params, train) {
                (Some(p), _) => match load_params(&p)? {
                    Params::Slg4(m) => m,
                    other => return Err(CliError::Domain(format!("expected level-4 parameters, got level {}", other.level()))),
                },
                (None, Some(t)) => estimate_dop(&load_trees(&t)?, depth.options()).map_err(domain)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            for (i, t) in targets.iter().enumerate() {
                let p = score_derived_tree_dop(&m, t);
                em.record(&[num_field("index", i), prob_field(em, p), str_field("tree", t)])?;
            }
        }
        Command::Chisq { table, csv, yates, exact } => {
            let t = match (table, csv) {
                (Some(s), _) => parse_inline_table(&s)?,
                (None, Some(p)) => parse_csv_table(&read(&p)?)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let r = chi_square_with(&t, yates).map_err(domain)?;
            let x = if exact { Some(chi_square_exact(&t).map_err(domain)?.to_string()) } else { None };
            emit_chisq(em, &r, x)?;
        }
        Command::Deptable { grammar, corpus, row, col, classify, chisq, yates } => {
            let g = load_grammar(&grammar)?;
            let c = load_corpus(&corpus)?;
            let usage = |e: crate::stats::StatsError| CliError::Usage(e.to_string());
            let row: Selector = row.parse().map_err(usage)?;
            let col: Selector = col.parse().map_err(usage)?;
            let classify: Classifier = classify.parse().map_err(usage)?;
            let t = dependency_table(&g, &c, &row, &col, classify).map_err(domain)?;
            emit_table(em, &t)?;
            if chisq {
                let r = chi_square_with(&t, yates).map_err(domain)?;
                em.header_done = false;
                if em.format == Format::Csv {
                    em.line("")?;
                }
                emit_chisq(em, &r, None)?;
            }
        }
    }
    Ok(true)
}

fn color_enabled() -> bool {
    std::env::var_os("SLG_NO_COLOR").is_none() && std::io::stderr().is_terminal()
}

/// Runs one command line (argv[0] included) and returns the exit status:
/// 0 on success, 1 on domain errors, 2 on usage errors.
pub fn run_command<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let color = color_enabled();
    let cmd = <Cli as clap::CommandFactory>::command().color(if color { ColorChoice::Auto } else { ColorChoice::Never });
    let cli = match cmd.try_get_matches_from(args).and_then(|m| <Cli as clap::FromArgMatches>::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let rendered = if color { e.render().ansi().to_string() } else { e.render().to_string() };
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                2
            } else {
                let _ = write!(out, "{rendered}");
                0
            };
        }
    };
    let prefix = if color { "\x1b[1;31merror:\x1b[0m" } else { "error:" };
    match dispatch(cli, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError::Domain(m)) => {
            let _ = writeln!(err, "{prefix} {m}");
            1
        }
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "{prefix} {m}");
            2
        }
    }
}
