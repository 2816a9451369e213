//! Command-line front end.
//!
//! Each subcommand returns an [`Outcome`] (captured stdout, stderr and exit
//! code) so the binary stays a thin wrapper and tests can drive commands
//! in-process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::compositions;
use crate::conjugate::{dirichlet_posterior, dirichlet_predictive};
use crate::conjugate::{posterior_mean, BetaParams, CountVector, DirichletParams};
use crate::density::BuiltinDensity;
use crate::entropy::{confidence_report, DEFAULT_ENTROPY_THRESHOLD};
use crate::error::Error;
use crate::icl::{
    self, IclOptions, IclReport, NormalizeOptions, Origin, Scorer, TokenCorpus, TokenPrior,
};
use crate::mixture::{approximate_prior, estimate_l1, estimate_mass, monte_carlo_approximate};
use crate::trace::{parse_trace, render_ansi, render_html, Palette, Section};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_PARSE: i32 = 4;

/// Largest allowed gap between a reproduced table cell and the printed value.
pub const TABLE_TOLERANCE: f64 = 5e-4;

const SMALL_FIXTURE: &str = include_str!("../fixtures/cricket-dsl-small.json");
const LARGE_FIXTURE: &str = include_str!("../fixtures/cricket-dsl-large.json");

#[derive(Debug, Parser)]
#[command(
    name = "matrix-bayes",
    version,
    about = "Bayesian next-token model toolkit"
)]
pub struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduce the label-flip tables and the extra-context token table.
    Tables,
    /// Approximate a test density by a finite Dirichlet mixture.
    Approximate(ApproximateArgs),
    /// Decompose a query against few-shot examples and assemble an answer.
    Icl(IclArgs),
    /// Render or analyse a next-token probability trace.
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
pub struct ApproximateArgs {
    /// uniform | beta-product(a,b) | peaked-mixture(c)
    #[arg(long, default_value = "beta-product(2,1)")]
    pub density: String,
    /// Grid resolution.
    #[arg(long)]
    pub n: u32,
    /// Simplex dimension (vocabulary size).
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Sample this many compositions instead of enumerating the grid.
    #[arg(long)]
    pub mc: Option<usize>,
    /// Seed for sampling and the L1/mass estimates.
    #[arg(long)]
    pub seed: u64,
    /// Samples for the L1 and mass estimates.
    #[arg(long, default_value_t = 100_000)]
    pub l1_samples: usize,
    /// Write the mixture as JSON to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    CricketDslSmall,
    CricketDslLarge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    Generative,
    Embedding,
}

#[derive(Debug, Args)]
pub struct IclArgs {
    /// Corpus JSON file.
    #[arg(long, conflicts_with = "fixture")]
    pub corpus: Option<PathBuf>,
    /// Bundled corpus.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    /// Query text; defaults to the corpus' own query.
    #[arg(long)]
    pub query: Option<String>,
    /// Symmetric prior concentration for every token.
    #[arg(long, default_value_t = icl::DEFAULT_ALPHA)]
    pub prior: f64,
    /// Per-token concentration, TOKEN=ALPHA; repeatable.
    #[arg(long = "alpha", value_name = "TOKEN=ALPHA")]
    pub alpha_overrides: Vec<String>,
    /// Pair scoring: sequence probability or embedding distance.
    #[arg(long, value_enum, default_value = "generative")]
    pub scorer: ScorerArg,
    /// Drop example pair N (1-based) before running.
    #[arg(long)]
    pub exclude_pair: Option<usize>,
    /// Explain which answer tokens come from substituted query tokens and
    /// compare against a run without lexical fallback.
    #[arg(long)]
    pub fail_analysis: bool,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// JSON-lines trace file.
    pub path: PathBuf,
    /// Write a self-contained HTML page here.
    #[arg(long)]
    pub html: Option<PathBuf>,
    /// Print the trace with terminal colours.
    #[arg(long)]
    pub ansi: bool,
    /// Plain text instead of colour escapes (with --ansi).
    #[arg(long)]
    pub no_color: bool,
    /// Print the per-position entropy report.
    #[arg(long)]
    pub entropy: bool,
    /// Entropy (nats) above which a position is flagged.
    #[arg(long, default_value_t = DEFAULT_ENTROPY_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        }
    }

    fn fail(code: i32, stderr: String) -> Self {
        Self {
            stdout: String::new(),
            stderr,
            code,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::Parse { .. } | Error::Document(_) | Error::InvalidCorpus(_) => EXIT_PARSE,
        _ => EXIT_VALIDATION,
    }
}

fn error_outcome(e: Error, json_mode: bool) -> Outcome {
    let code = exit_code(&e);
    let mut out = Outcome::fail(code, format!("error: {e}\n"));
    if json_mode {
        out.stdout = format!("{}\n", json!({"error": e.to_string(), "exit_code": code}));
    }
    out
}

fn read_input(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Document(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents)
        .map_err(|e| Error::param(format!("cannot write {}: {e}", path.display())))
}

fn to_json_line(v: &Value) -> String {
    format!(
        "{}\n",
        serde_json::to_string_pretty(v).expect("value serializes")
    )
}

pub fn run(cli: Cli) -> Outcome {
    let json_mode = cli.json;
    let result = match cli.command {
        Command::Tables => return cmd_tables(json_mode),
        Command::Approximate(a) => cmd_approximate(&a, json_mode),
        Command::Icl(a) => cmd_icl(&a, json_mode),
        Command::Trace(a) => cmd_trace(&a, json_mode),
    };
    result.unwrap_or_else(|e| error_outcome(e, json_mode))
}

/// Parses `args` (including the program name) and runs the command.
/// Usage errors yield the validation exit code.
pub fn run_from<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                Outcome::fail(EXIT_VALIDATION, rendered)
            } else {
                Outcome::ok(rendered)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub computed: Vec<f64>,
    pub published: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn max_deviation(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| {
                r.computed
                    .iter()
                    .zip(&r.published)
                    .map(|(c, p)| (c - p).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn label_flip_table(alpha: f64, beta: f64, published_a: [f64; 4]) -> Table {
    let prior = BetaParams::new(alpha, beta).expect("positive parameters");
    let rows = (0..4u64)
        .map(|n| {
            let pa = posterior_mean(prior, 0, n).expect("x <= n");
            TableRow {
                label: n.to_string(),
                computed: vec![pa, 1.0 - pa],
                published: vec![published_a[n as usize], 1.0 - published_a[n as usize]],
            }
        })
        .collect();
    Table {
        title: format!(
            "E(p_A | n), E(p_B | n) after n flipped labels, alpha = {alpha}, beta = {beta}"
        ),
        columns: vec!["n".into(), "E(p_A|n)".into(), "E(p_B|n)".into()],
        rows,
    }
}

fn extra_context_table() -> Table {
    let m = 10;
    let prior = DirichletParams::symmetric(m, 0.3).expect("positive parameters");
    let obs = CountVector::from_observations(m, &[0, 2, 2, 2]).expect("in range");
    let post = dirichlet_predictive(&dirichlet_posterior(&prior, &obs).expect("same length"));
    let pre = dirichlet_predictive(&prior);
    let row = |label: &str, i: usize, published: f64| TableRow {
        label: label.into(),
        computed: vec![pre[i], post[i]],
        published: vec![0.1, published],
    };
    Table {
        title: "next token after t_k with counts t_1: 1, t_3: 3, alpha_i = 0.3, m = 10".into(),
        columns: vec!["token".into(), "pre-prompt".into(), "post-prompt".into()],
        rows: vec![
            row("t_i, i != 1, 3", 1, 0.043),
            row("t_1", 0, 0.186),
            row("t_3", 2, 0.471),
        ],
    }
}

/// The three reproduced tables, paired with the values printed in the
/// original tables.
pub fn published_tables() -> Vec<Table> {
    vec![
        label_flip_table(0.3, 0.01, [0.968, 0.229, 0.130, 0.091]),
        label_flip_table(3.0, 0.1, [0.968, 0.732, 0.588, 0.492]),
        extra_context_table(),
    ]
}

pub fn cmd_tables(json_mode: bool) -> Outcome {
    let tables = published_tables();
    let worst = tables.iter().map(Table::max_deviation).fold(0.0, f64::max);
    let ok = worst <= TABLE_TOLERANCE;
    let stdout = if json_mode {
        let ts: Vec<Value> = tables
            .iter()
            .map(|t| {
                json!({
                    "title": t.title,
                    "columns": t.columns,
                    "rows": t.rows.iter().map(|r| json!({
                        "label": r.label,
                        "computed": r.computed,
                        "published": r.published,
                    })).collect::<Vec<_>>(),
                    "max_deviation": t.max_deviation(),
                })
            })
            .collect();
        to_json_line(&json!({"tables": ts, "max_deviation": worst, "ok": ok}))
    } else {
        let mut s = String::new();
        for t in &tables {
            let _ = writeln!(s, "{}", t.title);
            let _ = writeln!(s, "{}", t.columns.join("\t"));
            for r in &t.rows {
                let cells: Vec<String> = r.computed.iter().map(|v| format!("{v:.3}")).collect();
                let _ = writeln!(s, "{}\t{}", r.label, cells.join("\t"));
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "max deviation from published values: {worst:.2e} ({})",
            if ok { "ok" } else { "FAILED" }
        );
        s
    };
    Outcome {
        stdout,
        stderr: if ok {
            String::new()
        } else {
            format!("error: reproduced tables deviate by {worst:.2e} > {TABLE_TOLERANCE:e}\n")
        },
        code: if ok { EXIT_OK } else { EXIT_VALIDATION },
    }
}

pub fn cmd_approximate(a: &ApproximateArgs, json_mode: bool) -> Result<Outcome, Error> {
    let density = BuiltinDensity::parse(&a.density, &[])?;
    let u = density.on_simplex(a.m)?;
    let cap = compositions::cap_from_env()?;
    let (mix, method) = match a.mc {
        Some(samples) => (
            monte_carlo_approximate(&u, a.n, a.m, samples, a.seed)?,
            "monte-carlo",
        ),
        None => match approximate_prior(&u, a.n, a.m, cap) {
            Ok(mix) => (mix, "grid"),
            Err(e @ Error::Capacity { .. }) => {
                let mut out = error_outcome(e, json_mode);
                out.stderr.push_str(
                    "notice: rerun with --mc <samples> to use the Monte Carlo approximation\n",
                );
                return Ok(out);
            }
            Err(e) => return Err(e),
        },
    };
    let l1 = estimate_l1(&mix, &u, a.l1_samples, a.seed)?;
    let mass = estimate_mass(&mix, a.l1_samples, a.seed)?;
    if let Some(path) = &a.out {
        write_output(path, &mix.to_json())?;
    }
    let stdout = if json_mode {
        to_json_line(&json!({
            "density": density,
            "n": a.n,
            "m": a.m,
            "method": method,
            "components": mix.len(),
            "l1_estimate": l1,
            "mass_estimate": mass,
            "seed": a.seed,
            "out": a.out.as_ref().map(|p| p.display().to_string()),
        }))
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "density: {}", a.density);
        let _ = writeln!(s, "grid: n = {}, m = {} ({method})", a.n, a.m);
        let _ = writeln!(s, "components: {}", mix.len());
        let _ = writeln!(s, "estimated L1 error: {l1:.6}");
        let _ = writeln!(s, "estimated total mass: {mass:.6}");
        if let Some(path) = &a.out {
            let _ = writeln!(s, "mixture written to {}", path.display());
        }
        s
    };
    Ok(Outcome::ok(stdout))
}

fn parse_override(s: &str) -> Result<(String, f64), Error> {
    let (tok, val) = s
        .rsplit_once('=')
        .ok_or_else(|| Error::param(format!("expected TOKEN=ALPHA, got {s:?}")))?;
    let v: f64 = val
        .trim()
        .parse()
        .map_err(|e| Error::param(format!("alpha in {s:?}: {e}")))?;
    Ok((tok.to_string(), v))
}

fn load_corpus(a: &IclArgs) -> Result<TokenCorpus, Error> {
    let text = match (&a.corpus, a.fixture) {
        (Some(path), _) => read_input(path)?,
        (None, Some(Fixture::CricketDslLarge)) => LARGE_FIXTURE.to_string(),
        (None, _) => SMALL_FIXTURE.to_string(),
    };
    let corpus = TokenCorpus::from_json(&text)?;
    match a.exclude_pair {
        Some(0) => Err(Error::param("--exclude-pair is 1-based")),
        Some(k) => corpus.without_pair(k - 1),
        None => Ok(corpus),
    }
}

pub fn cmd_icl(a: &IclArgs, json_mode: bool) -> Result<Outcome, Error> {
    let corpus = load_corpus(a)?;
    let query = match &a.query {
        Some(q) => q.clone(),
        None => corpus
            .default_query()
            .ok_or_else(|| Error::param("no --query given and the corpus has no default query"))?
            .to_string(),
    };
    let mut prior = TokenPrior::symmetric(a.prior);
    for o in &a.alpha_overrides {
        let (t, v) = parse_override(o)?;
        prior.overrides.insert(t, v);
    }
    let scorer = match a.scorer {
        ScorerArg::Generative => Scorer::Generative,
        ScorerArg::Embedding => Scorer::Embedding,
    };
    let opts = IclOptions {
        prior,
        scorer,
        normalize: NormalizeOptions::default(),
    };
    let report = icl::run_icl(&query, &corpus, &opts)?;
    let strict = if a.fail_analysis {
        let strict_opts = IclOptions {
            normalize: NormalizeOptions {
                lexical_fallback: false,
            },
            ..opts.clone()
        };
        Some(icl::run_icl(&query, &corpus, &strict_opts)?)
    } else {
        None
    };

    let mut stderr = String::new();
    for e in report.normalized.unresolved() {
        let _ = writeln!(stderr, "warning: unresolved query token {:?}", e.original);
    }
    let stdout = if json_mode {
        let mut v = json!({"report": report});
        if let Some(s) = &strict {
            v["without_fallback"] = json!(s);
            v["fallback_answer_tokens"] = json!(fallback_items(&report));
        }
        to_json_line(&v)
    } else {
        render_icl_text(&report, &corpus, strict.as_ref())
    };
    Ok(Outcome {
        stdout,
        stderr,
        code: EXIT_OK,
    })
}

/// Answer tokens whose link starts at a lexically substituted query token.
fn fallback_items(r: &IclReport) -> Vec<&icl::AnswerItem> {
    let subs: Vec<&str> = r
        .normalized
        .entries
        .iter()
        .filter(|e| e.origin == Origin::Fallback)
        .map(|e| e.token.as_str())
        .collect();
    r.answer
        .items
        .iter()
        .filter(|i| subs.contains(&i.t.as_str()))
        .collect()
}

fn render_icl_text(r: &IclReport, corpus: &TokenCorpus, strict: Option<&IclReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "query: {}", r.query);
    let _ = writeln!(s, "normalized: {{{}}}", r.normalized.tokens().join(", "));
    for e in &r.normalized.entries {
        match e.origin {
            Origin::Exact => {}
            Origin::Synonym => {
                let _ = writeln!(s, "  synonym: {} -> {}", e.original, e.token);
            }
            Origin::Fallback => {
                let _ = writeln!(s, "  nearest lexical match: {} -> {}", e.original, e.token);
            }
            Origin::Unresolved => {
                let _ = writeln!(s, "  unresolved: {}", e.original);
            }
        }
    }
    let _ = writeln!(s, "vocabulary size: {}", r.vocabulary_size);
    let score_name = match r.decomposition.scorer {
        Scorer::Generative => "ln P(q_i | residual)",
        Scorer::Embedding => "embedding weight",
    };
    for (step, b) in r.decomposition.blocks.iter().enumerate() {
        let _ = writeln!(
            s,
            "step {}: q{} \"{}\" covers {{{}}}",
            step + 1,
            b.pair + 1,
            corpus.pairs()[b.pair].query,
            b.tokens.join(", ")
        );
        for c in &b.candidates {
            let _ = writeln!(s, "    q{}: {score_name} = {:.6}", c.pair + 1, c.score);
        }
    }
    if !r.decomposition.residual.is_empty() {
        let _ = writeln!(s, "residual: {{{}}}", r.decomposition.residual.join(", "));
    }
    let _ = writeln!(s, "answer: {}", r.dsl);
    for i in &r.answer.items {
        let _ = writeln!(s, "  {} <- q{} via {:?}", i.s, i.pair + 1, i.t);
    }
    if r.assumption1.satisfied {
        let _ = writeln!(s, "assumption 1: satisfied");
    } else {
        let _ = writeln!(s, "assumption 1: VIOLATED (answer degraded)");
        for v in &r.assumption1.violations {
            match v {
                icl::Violation::OutsideQuerySet { token, resolved_as } => {
                    let _ = match resolved_as {
                        Some(t) => writeln!(
                            s,
                            "  {token:?} is not in any example query; stood in by {t:?}"
                        ),
                        None => writeln!(s, "  {token:?} is not in any example query"),
                    };
                }
                icl::Violation::NoCorrespondence { token } => {
                    let _ = writeln!(s, "  {token:?} has no answer correspondence in any example");
                }
            }
        }
    }
    if let Some(strict) = strict {
        let _ = writeln!(s, "failure analysis:");
        let fb = fallback_items(r);
        if fb.is_empty() {
            let _ = writeln!(s, "  no answer token comes from a substituted query token");
        }
        for i in fb {
            let _ = writeln!(
                s,
                "  {} is produced by the stand-in {:?} from q{}",
                i.s,
                i.t,
                i.pair + 1
            );
        }
        let _ = writeln!(s, "  without lexical fallback: {}", strict.dsl);
        if !strict.decomposition.residual.is_empty() {
            let _ = writeln!(
                s,
                "  uncovered without fallback: {{{}}}",
                strict.decomposition.residual.join(", ")
            );
        }
    }
    s
}

pub fn cmd_trace(a: &TraceArgs, json_mode: bool) -> Result<Outcome, Error> {
    let trace = parse_trace(&read_input(&a.path)?)?;
    let palette = Palette::default();
    if !(a.threshold.is_finite() && a.threshold >= 0.0) {
        return Err(Error::param(format!(
            "threshold {} must be >= 0",
            a.threshold
        )));
    }
    if let Some(path) = &a.html {
        write_output(path, &render_html(&trace, &palette))?;
    }
    let report = a.entropy.then(|| confidence_report(&trace, a.threshold));
    let prompt = trace
        .steps()
        .iter()
        .filter(|s| s.section == Section::Prompt)
        .count();
    let completion = trace.len() - prompt;

    let stdout = if json_mode {
        let mut v = json!({
            "steps": trace.len(),
            "prompt_steps": prompt,
            "completion_steps": completion,
            "html": a.html.as_ref().map(|p| p.display().to_string()),
        });
        if let Some(r) = &report {
            v["entropy"] = json!(r);
        }
        if a.ansi {
            v["ansi"] = json!(render_ansi(&trace, &palette, !a.no_color));
        }
        to_json_line(&v)
    } else {
        let mut s = String::new();
        if a.ansi {
            s.push_str(&render_ansi(&trace, &palette, !a.no_color));
        }
        let _ = writeln!(
            s,
            "steps: {} ({prompt} prompt, {completion} completion)",
            trace.len()
        );
        if let Some(path) = &a.html {
            let _ = writeln!(s, "html written to {}", path.display());
        }
        if let Some(r) = &report {
            let _ = writeln!(s, "entropy threshold: {} nats", r.threshold);
            let _ = writeln!(s, "mean entropy: {:.6}", r.mean_entropy);
            let _ = writeln!(s, "max entropy: {:.6}", r.max_entropy);
            let _ = writeln!(s, "flagged positions: {}", r.flagged.len());
            for &i in &r.flagged {
                let p = &r.positions[i];
                let _ = writeln!(s, "  {i}: {:?} H >= {:.4}", p.token, p.entropy_lower_bound);
            }
        }
        s
    };
    Ok(Outcome::ok(stdout))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_pass_and_round() {
        let out = run_from(["matrix-bayes", "tables"]);
        assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
        assert!(out.stdout.contains("3\t0.091\t0.909"));
        assert!(out.stdout.contains("1\t0.732\t0.268"));
        assert!(out.stdout.contains("t_3\t0.100\t0.471"));
    }

    #[test]
    fn published_cells_within_tolerance() {
        for t in published_tables() {
            assert!(t.max_deviation() <= TABLE_TOLERANCE, "{}", t.title);
        }
    }

    #[test]
    fn usage_error_is_validation() {
        assert_eq!(
            run_from(["matrix-bayes", "approximate"]).code,
            EXIT_VALIDATION
        );
        assert_eq!(run_from(["matrix-bayes", "--help"]).code, EXIT_OK);
    }

    #[test]
    fn error_codes() {
        assert_eq!(
            exit_code(&Error::Capacity { count: 1, cap: 0 }),
            EXIT_CAPACITY
        );
        assert_eq!(
            exit_code(&Error::Parse {
                line: 1,
                message: String::new()
            }),
            EXIT_PARSE
        );
        assert_eq!(exit_code(&Error::param("x")), EXIT_VALIDATION);
    }

    #[test]
    fn overrides_parse() {
        assert_eq!(parse_override("team=2.5").unwrap(), ("team".into(), 2.5));
        assert_eq!(parse_override("a=b=1").unwrap(), ("a=b".into(), 1.0));
        assert!(parse_override("team").is_err());
        assert!(parse_override("team=x").is_err());
    }
}
