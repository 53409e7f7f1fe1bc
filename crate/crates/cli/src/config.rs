use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context as _};
use chrono::NaiveDate;
use construe::dialogue::{Session, SessionConfig};
use construe::grammar::{load_grammar, validate_grammar, Severity};
use construe::Grammar;

/// Settings shared by every front end.
#[derive(Debug, Clone, Default)]
pub struct Config {
    /// Grammar file; the shipped calendar grammar when absent.
    pub grammar: Option<PathBuf>,
    /// JSONL event store.
    pub store: Option<PathBuf>,
    /// Anchor date for relative expressions. Defaults to the local date.
    pub today: Option<NaiveDate>,
    pub trace: bool,
    pub check_conflicts: bool,
}

impl Config {
    /// Load and lint the grammar. Lint errors are fatal and listed in full.
    pub fn load_grammar(&self) -> anyhow::Result<Arc<Grammar>> {
        let g = match &self.grammar {
            Some(p) => {
                let src = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                load_grammar(&src).with_context(|| format!("loading {}", p.display()))?
            }
            None => Grammar::calendar(),
        };
        let errors: Vec<String> = validate_grammar(&g)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.to_string())
            .collect();
        if !errors.is_empty() {
            bail!("grammar has {} lint error(s):\n{}", errors.len(), errors.join("\n"));
        }
        Ok(Arc::new(g))
    }

    pub fn session(&self, grammar: Arc<Grammar>) -> anyhow::Result<Session> {
        let config = SessionConfig {
            today: self.today,
            store_path: self.store.clone(),
            check_conflicts: self.check_conflicts,
        };
        Ok(Session::open(grammar, config)?)
    }
}
