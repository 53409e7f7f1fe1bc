use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use construe::grammar::validate_grammar;
use construe::lexicon::tokenize;
use construe::parser::parse;
use construe::semantics::{interpret, DomainMapping};
use construe::{Category, ContextState};
use construe_cli::{repl, server, Config};

#[derive(Parser)]
#[command(name = "construe", version, about = "Construction grammar dialog engine for calendar scheduling")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Grammar file (JSONL). Defaults to the built-in calendar grammar.
    #[arg(long, global = true, env = "CONSTRUE_GRAMMAR")]
    grammar: Option<PathBuf>,
    /// Event store (JSONL), created on first write.
    #[arg(long, global = true, env = "CONSTRUE_STORE")]
    store: Option<PathBuf>,
    /// Anchor date for relative expressions, YYYY-MM-DD.
    #[arg(long, global = true, env = "CONSTRUE_TODAY")]
    today: Option<NaiveDate>,
    /// Print the chart after each parse.
    #[arg(long, global = true, env = "CONSTRUE_TRACE")]
    trace: bool,
    /// Allow events that start at the same time.
    #[arg(long, global = true)]
    allow_conflicts: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive session on stdin/stdout.
    Repl,
    /// HTTP session service.
    Serve {
        #[arg(long, env = "CONSTRUE_ADDR", default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Parse one utterance and print its slot sets.
    Parse {
        utterance: String,
        /// Pending question, e.g. `time(_)`.
        #[arg(long)]
        question: Option<String>,
        /// Entities already under discussion.
        #[arg(long = "mention")]
        mentions: Vec<String>,
    },
    /// Check the grammar and list diagnostics.
    Lint,
}

fn config(c: &Common) -> Config {
    Config {
        grammar: c.grammar.clone(),
        store: c.store.clone(),
        today: c.today,
        trace: c.trace,
        check_conflicts: !c.allow_conflicts,
    }
}

fn one_shot(cfg: &Config, utterance: &str, question: Option<&str>, mentions: &[String]) -> anyhow::Result<()> {
    let g = cfg.load_grammar()?;
    let mut ctx = ContextState::calendar();
    ctx.today = Some(cfg.today.unwrap_or_else(|| chrono::Local::now().date_naive()));
    if let Some(q) = question {
        let q = Category::parse(q).map_err(anyhow::Error::msg).context("--question")?;
        ctx = ctx.with_question(q);
    }
    for m in mentions {
        ctx.mention(m.clone());
    }
    let r = parse(&tokenize(utterance), &ctx, &g);
    let mut out = io::stdout().lock();
    if cfg.trace {
        write!(out, "{}", r.trace())?;
    }
    if !r.diagnostics.unknown_tokens.is_empty() {
        eprintln!("unknown tokens: {}", r.diagnostics.unknown_tokens.join(" "));
    }
    if r.readings.is_empty() {
        anyhow::bail!("no reading");
    }
    let dm = DomainMapping::calendar();
    for reading in &r.readings {
        writeln!(out, "{}: {}", reading.category, reading.messages)?;
        match interpret(&reading.messages.0, &ctx, &dm) {
            Ok(s) => write!(out, "{}", s.block())?,
            Err(e) => writeln!(out, "  not interpretable: {e}")?,
        }
    }
    Ok(())
}

fn lint(cfg: &Config) -> anyhow::Result<bool> {
    let g = match &cfg.grammar {
        Some(p) => {
            let src = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            construe::grammar::load_grammar(&src)?
        }
        None => construe::Grammar::calendar(),
    };
    let diags = validate_grammar(&g);
    for d in &diags {
        println!("{d}");
    }
    println!(
        "{} constructions ({} phrasal, {} lexical), {} diagnostic(s)",
        g.len(),
        g.phrasal_count(),
        g.lexical_count(),
        diags.len()
    );
    Ok(diags.iter().all(|d| d.severity != construe::grammar::Severity::Error))
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = config(&cli.common);
    match cli.command {
        Command::Repl => {
            let g = cfg.load_grammar()?;
            let mut session = cfg.session(g)?;
            repl::run(&mut session, io::stdin().lock(), io::stdout().lock(), cfg.trace)?;
        }
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::serve(cfg, &addr))?;
        }
        Command::Parse {
            utterance,
            question,
            mentions,
        } => one_shot(&cfg, &utterance, question.as_deref(), &mentions)?,
        Command::Lint => return lint(&cfg),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
