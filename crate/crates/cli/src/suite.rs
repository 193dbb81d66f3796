//! `verify-all`: runs every config of a suite and reports per criterion.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, EXIT_ACCEPTANCE, EXIT_INTERNAL, EXIT_OK, EXIT_VALIDATION};
use crate::run::{par_map, run_path, Check, RunOptions};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub schema_version: u32,
    #[serde(default)]
    pub entries: Vec<SuiteEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub criterion: String,
    /// Relative paths resolve against the suite file's directory.
    pub config: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryResult {
    pub criterion: String,
    pub config: PathBuf,
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<CliError>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub criterion: String,
    pub entries: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub pass: bool,
    pub criteria: Vec<CriterionResult>,
    pub entries: Vec<EntryResult>,
}

impl Summary {
    /// Internal errors dominate, then invalid configs, then failed checks.
    pub fn exit_code(&self) -> i32 {
        let codes: Vec<i32> = self.entries.iter().map(|e| e.exit_code).collect();
        if codes.contains(&EXIT_INTERNAL) {
            EXIT_INTERNAL
        } else if codes.contains(&EXIT_VALIDATION) {
            EXIT_VALIDATION
        } else if codes.contains(&EXIT_ACCEPTANCE) {
            EXIT_ACCEPTANCE
        } else {
            EXIT_OK
        }
    }

    pub fn table(&self) -> String {
        let width = self.criteria.iter().map(|c| c.criterion.len()).max().unwrap_or(9).max(9);
        let mut s = format!("{:<width$}  entries  status\n", "criterion");
        for c in &self.criteria {
            s.push_str(&format!("{:<width$}  {:>7}  {}\n", c.criterion, c.entries, if c.pass { "PASS" } else { "FAIL" }));
        }
        s
    }
}

pub fn load_suite(path: &Path) -> Result<Suite, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::validation("config_not_found", format!("{} does not exist", path.display()))
        } else {
            CliError::validation("config_unreadable", format!("{}: {e}", path.display()))
        }
    })?;
    let suite: Suite = serde_json::from_str(&text).map_err(|e| CliError::validation("schema", format!("{}: {e}", path.display())))?;
    if suite.schema_version != degenlab::io::SCHEMA_VERSION {
        return Err(CliError::validation("schema", format!("suite schema_version {} is not supported", suite.schema_version)));
    }
    Ok(suite)
}

/// Each entry writes to `<out>/<index>_<criterion>`; entries run on `jobs` threads.
pub fn verify_all(path: &Path, opts: &RunOptions) -> Result<Summary, CliError> {
    let suite = load_suite(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("out").join("verify-all"));
    let indexed: Vec<(usize, SuiteEntry)> = suite.entries.into_iter().enumerate().collect();
    let entries = par_map(&indexed, opts.jobs, |(i, entry)| {
        let config = if entry.config.is_absolute() { entry.config.clone() } else { base.join(&entry.config) };
        let entry_opts = RunOptions { out: Some(out.join(format!("{i:02}_{}", entry.criterion))), jobs: 1, seed: opts.seed };
        match run_path(&config, None, &entry_opts) {
            Ok(o) => EntryResult {
                criterion: entry.criterion.clone(),
                config: entry.config.clone(),
                status: if o.passed() { "pass" } else { "fail" }.into(),
                exit_code: o.exit_code(),
                error: None,
                checks: o.checks,
            },
            Err(e) => EntryResult {
                criterion: entry.criterion.clone(),
                config: entry.config.clone(),
                status: "error".into(),
                exit_code: e.code,
                error: Some(e),
                checks: Vec::new(),
            },
        }
    });
    let mut criteria: Vec<CriterionResult> = Vec::new();
    for e in &entries {
        match criteria.iter_mut().find(|c| c.criterion == e.criterion) {
            Some(c) => {
                c.entries += 1;
                c.pass &= e.exit_code == EXIT_OK;
            }
            None => criteria.push(CriterionResult { criterion: e.criterion.clone(), entries: 1, pass: e.exit_code == EXIT_OK }),
        }
    }
    let summary = Summary { schema_version: degenlab::io::SCHEMA_VERSION, pass: criteria.iter().all(|c| c.pass), criteria, entries };
    degenlab::io::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(code: i32) -> EntryResult {
        EntryResult { criterion: "c".into(), config: "x.json".into(), status: String::new(), exit_code: code, error: None, checks: Vec::new() }
    }

    #[test]
    fn most_severe_code_wins() {
        let summary = |codes: &[i32]| Summary {
            schema_version: 1,
            pass: false,
            criteria: Vec::new(),
            entries: codes.iter().map(|&c| entry(c)).collect(),
        };
        assert_eq!(summary(&[]).exit_code(), EXIT_OK);
        assert_eq!(summary(&[0, 2, 0]).exit_code(), EXIT_ACCEPTANCE);
        assert_eq!(summary(&[2, 1]).exit_code(), EXIT_VALIDATION);
        assert_eq!(summary(&[1, 3, 2]).exit_code(), EXIT_INTERNAL);
    }
}
