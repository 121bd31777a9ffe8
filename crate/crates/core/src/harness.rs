//! Config-driven experiment runner.
//!
//! An [`ExperimentConfig`] names a grid, a space, a corpus, a set of operators
//! and a list of checks from [`crate::properties::CHECKS`]. [`run`] expands the
//! checks into jobs, evaluates them in parallel and assembles the records in
//! job order, so the report depends only on the config.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::grid::{FunctionExpr, GridSpec};
use crate::norms::{MorreyParams, PredualParams};
use crate::operators::OperatorSpec;
use crate::properties::{evaluate, lookup, CheckContext, CheckInfo, Scope, Subject};

pub use crate::properties::{bound_ratio, BoundRatioRow, BoundRatioTable, NormSpace};

/// Default cap on the nodes of the refined (`2N`) grid.
pub const DEFAULT_MAX_GRID_POINTS: usize = 1 << 24;

/// The space a run measures in. Either side determines the other through
/// the pairing `(p, r) ↔ (p', -n - r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpaceConfig {
    Morrey(MorreyParams),
    Predual(PredualParams),
}

impl SpaceConfig {
    /// Morrey parameters and, when they exist, the predual parameters.
    pub fn resolve(&self, dim: usize) -> Result<(MorreyParams, Option<PredualParams>)> {
        match self {
            SpaceConfig::Morrey(m) => {
                m.check_dim(dim)?;
                let partner = PredualParams::new(m.conjugate_exponent(), -(dim as f64) - m.r())
                    .and_then(|d| d.check_dim(dim).map(|_| d))
                    .ok();
                Ok((*m, partner))
            }
            SpaceConfig::Predual(d) => Ok((d.paired_morrey(dim)?, Some(*d))),
        }
    }
}

fn default_q() -> f64 {
    2.0
}

fn default_cap() -> usize {
    DEFAULT_MAX_GRID_POINTS
}

/// One experiment as a JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub space: SpaceConfig,
    /// Sequence exponent for vector-valued checks.
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub corpus: Vec<FunctionExpr>,
    #[serde(default)]
    pub operators: Vec<OperatorSpec>,
    pub checks: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// Reports go to this path with `.json` and `.csv` extensions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Per-check tolerance overrides.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_cap")]
    pub max_grid_points: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks every parameter; nothing is computed.
    pub fn validate(&self) -> Result<()> {
        let dim = self.grid.dim();
        let refined = self.grid.len().saturating_mul(1 << dim);
        if refined > self.max_grid_points {
            return Err(LabError::ResourceCap(format!(
                "refined grid has {refined} nodes, cap is {}",
                self.max_grid_points
            )));
        }
        self.space.resolve(dim)?;
        if !(self.q.is_finite() && self.q > 1.0) {
            return Err(LabError::InvalidParams(format!("q = {} must lie in (1, ∞)", self.q)));
        }
        for name in &self.checks {
            lookup(name)?;
        }
        for (name, tol) in &self.tolerances {
            lookup(name)?;
            if tol.is_nan() {
                return Err(LabError::InvalidParams(format!("tolerance for `{name}` is NaN")));
            }
        }
        for op in &self.operators {
            op.validate(&self.grid)?;
        }
        Ok(())
    }

    fn tolerance(&self, info: &CheckInfo) -> f64 {
        self.tolerances.get(info.name).copied().unwrap_or(info.tolerance)
    }
}

/// Outcome of one job.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub function: Option<String>,
    pub operator: Option<String>,
    pub inputs: Value,
    /// Absent when the check errored or produced a non-finite value.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub resolution: Vec<usize>,
    pub measured: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub grid: GridSpec,
    pub space: SpaceConfig,
    pub q: f64,
    pub records: Vec<CheckRecord>,
    pub passed: usize,
    pub failed: usize,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Columns: check, function, operator, value, resolution, pass.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| LabError::Io(e.to_string());
        w.write_record(["check", "function", "operator", "value", "resolution", "pass"])
            .map_err(csv_err)?;
        for r in &self.records {
            let resolution = r.resolution.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
            w.write_record([
                r.check.as_str(),
                r.function.as_deref().unwrap_or(""),
                r.operator.as_deref().unwrap_or(""),
                &r.value.map(|v| format!("{v:e}")).unwrap_or_default(),
                &resolution,
                if r.pass { "true" } else { "false" },
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `base.json` and `base.csv`, creating the parent directory.
    pub fn write(&self, base: &Path) -> Result<()> {
        if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(base.with_extension("json"), self.to_json()? + "\n")?;
        self.write_csv(std::fs::File::create(base.with_extension("csv"))?)
    }
}

struct Job<'a> {
    info: &'static CheckInfo,
    function: Option<&'a FunctionExpr>,
    operator: Option<&'a OperatorSpec>,
}

fn expand(config: &ExperimentConfig) -> Result<Vec<Job<'_>>> {
    let mut jobs = Vec::new();
    let has_corpus = !config.corpus.is_empty();
    for name in &config.checks {
        let info = lookup(name)?;
        let ops = || config.operators.iter().filter(|op| info.applies_to(op));
        match info.scope {
            Scope::Standalone => jobs.push(Job { info, function: None, operator: None }),
            Scope::Function => jobs.extend(config.corpus.iter().map(|f| Job {
                info,
                function: Some(f),
                operator: None,
            })),
            Scope::Corpus if has_corpus => jobs.push(Job { info, function: None, operator: None }),
            Scope::OperatorFunction => {
                for op in ops() {
                    jobs.extend(config.corpus.iter().map(|f| Job {
                        info,
                        function: Some(f),
                        operator: Some(op),
                    }));
                }
            }
            Scope::OperatorCorpus if has_corpus => jobs.extend(ops().map(|op| Job {
                info,
                function: None,
                operator: Some(op),
            })),
            Scope::Corpus | Scope::OperatorCorpus => {}
        }
    }
    Ok(jobs)
}

/// Validates `config`, runs every job and writes the reports when an
/// output path is set. Failing checks become records; only invalid configs
/// and I/O errors are returned as errors.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let (morrey, predual) = config.space.resolve(config.grid.dim())?;
    let ctx = CheckContext {
        grid: config.grid,
        morrey,
        predual,
        q: config.q,
        seed: config.seed,
    };
    let jobs = expand(config)?;
    let records: Vec<CheckRecord> = jobs
        .par_iter()
        .enumerate()
        .map(|(index, job)| {
            let tolerance = config.tolerance(job.info);
            let subject = Subject {
                function: job.function,
                operator: job.operator,
                corpus: &config.corpus,
                index: index as u64,
            };
            let inputs = json!({
                "function": job.function,
                "operator": job.operator,
                "rng_index": index,
            });
            let mut record = CheckRecord {
                check: job.info.name.to_string(),
                function: job.function.map(|f| f.to_string()),
                operator: job.operator.map(OperatorSpec::label),
                inputs,
                value: None,
                tolerance,
                pass: false,
                resolution: vec![config.grid.points_per_axis()],
                measured: Value::Null,
                error: None,
            };
            match evaluate(job.info, &ctx, subject, tolerance) {
                Ok(m) => {
                    record.value = m.value.is_finite().then_some(m.value);
                    record.tolerance = m.tolerance;
                    record.pass = m.pass;
                    record.resolution = m.resolution;
                    record.measured = m.details;
                }
                Err(e) => record.error = Some(e.to_string()),
            }
            record
        })
        .collect();
    let passed = records.iter().filter(|r| r.pass).count();
    let report = ExperimentReport {
        seed: config.seed,
        grid: config.grid,
        space: config.space,
        q: config.q,
        failed: records.len() - passed,
        passed,
        records,
    };
    if let Some(path) = &config.output_path {
        report.write(path)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predual::DUALITY_SLACK;

    fn config(checks: &[&str], corpus: &[&str]) -> ExperimentConfig {
        ExperimentConfig {
            grid: GridSpec::new(1, 8.0, 256).unwrap(),
            space: SpaceConfig::Morrey(MorreyParams::new(2.0, -0.25).unwrap()),
            q: 2.0,
            corpus: corpus.iter().map(|s| s.parse().unwrap()).collect(),
            operators: vec![],
            checks: checks.iter().map(|s| s.to_string()).collect(),
            seed: 7,
            output_path: None,
            tolerances: BTreeMap::new(),
            max_grid_points: DEFAULT_MAX_GRID_POINTS,
        }
    }

    #[test]
    fn empty_corpus_gives_empty_report() {
        let report = run(&config(&["dilation_covariance", "weak_duality"], &[])).unwrap();
        assert!(report.records.is_empty());
        assert!(report.all_passed());
    }

    #[test]
    fn dilation_covariance_on_a_bump() {
        let report = run(&config(&["dilation_covariance"], &["bump 0 1"])).unwrap();
        assert_eq!(report.records.len(), 1);
        assert!(report.records[0].pass, "{:?}", report.records[0]);
    }

    #[test]
    fn weak_duality_on_ten_functions() {
        let corpus = [
            "chi -1 1",
            "chi 0 1",
            "bump 0 1",
            "bump 0.5 0.5",
            "gauss 0.5",
            "gauss 1",
            "dilate 2 (chi -1 1)",
            "translate -1.5 (gauss 0.3)",
            "sum (chi -2 -1) (bump 1 1)",
            "dilate 0.5 (bump 0 1)",
        ];
        let report = run(&config(&["weak_duality"], &corpus)).unwrap();
        assert_eq!(report.records.len(), 10);
        for r in &report.records {
            assert!(r.pass && r.value.unwrap() <= 1.0 + DUALITY_SLACK, "{r:?}");
        }
    }

    #[test]
    fn unknown_check_is_rejected() {
        assert!(matches!(run(&config(&["no_such_check"], &[])), Err(LabError::UnknownCheck(_))));
        let mut c = config(&[], &[]);
        c.tolerances.insert("bogus".into(), 1.0);
        assert!(matches!(c.validate(), Err(LabError::UnknownCheck(_))));
    }

    #[test]
    fn grid_cap_is_enforced() {
        let mut c = config(&["norm_collapse"], &["bump 0 1"]);
        c.max_grid_points = 256;
        assert!(matches!(run(&c), Err(LabError::ResourceCap(_))));
    }

    #[test]
    fn runs_are_byte_identical() {
        let c = config(&["translation_invariance", "triangle_inequality"], &["bump 0 1", "gauss 1"]);
        assert_eq!(run(&c).unwrap().to_json().unwrap(), run(&c).unwrap().to_json().unwrap());
    }

    #[test]
    fn collapse_has_no_predual_partner() {
        let space = SpaceConfig::Morrey(MorreyParams::new(2.0, -0.5).unwrap());
        assert!(space.resolve(1).unwrap().1.is_none());
        let space = SpaceConfig::Morrey(MorreyParams::new(2.0, -0.25).unwrap());
        let partner = space.resolve(1).unwrap().1.unwrap();
        assert_eq!((partner.p(), partner.rho()), (2.0, -0.75));
    }

    #[test]
    fn csv_has_expected_columns() {
        let report = run(&config(&["dilation_covariance"], &["bump 0 1"])).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("check,function,operator,value,resolution,pass"));
        assert!(lines.next().unwrap().starts_with("dilation_covariance,(bump 0 1),,"));
    }
}
