//! Scenario definitions and result tables for the bound-comparison grid,
//! the ISSf comparison, the HLIP obstacle case and the property suite.
//!
//! Tables are written as CSV and as JSON arrays of records, one pair of
//! files per table, plus a `manifest.json` listing files and seeds.

mod bound_grid;
mod hlip;
mod issf;
pub mod properties;
mod table;

pub use bound_grid::{bound_grid, BoundGridParams, BOUND_GRID_COLUMNS};
pub use hlip::{
    hlip_case, worst_case_first_violation, HlipCaseParams, HLIP_COLUMNS, HLIP_DEFAULT_TRIALS,
    TRAJECTORY_COLUMNS,
};
pub use issf::{issf_compare, IssfCompareParams, ISSF_COLUMNS, ISSF_DEFAULT_TRIALS};
pub use properties::{property_suite, property_table, PropertyOutcome, PropertySuiteParams, PROPERTY_COLUMNS};
pub use table::{Cell, Column, ColumnType, ResultTable};

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{Engine, TrialOutcome};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `count` evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Linspace {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Linspace {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => {
                let step = (self.stop - self.start) / (n - 1) as f64;
                (0..n)
                    .map(|i| if i + 1 == n { self.stop } else { self.start + step * i as f64 })
                    .collect()
            }
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config(format!("{what} grid needs count >= 1 and finite ends")));
        }
        Ok(())
    }
}

/// Martingale audit totals over a set of trials.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditSummary {
    pub trials: u64,
    pub exits: u64,
    pub audited: u64,
    pub containment_failures: u64,
    pub max_predictable_increment: Option<f64>,
    pub max_martingale_difference: Option<f64>,
    pub max_reconstruction_error: Option<f64>,
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    }
}

impl AuditSummary {
    pub fn absorb<S>(&mut self, outcomes: &[TrialOutcome<S>]) {
        for o in outcomes {
            self.trials += 1;
            self.exits += u64::from(o.exited());
            if let Some(a) = &o.audit {
                self.audited += 1;
                self.containment_failures += u64::from(!a.containment.holds());
                self.max_predictable_increment =
                    max_opt(self.max_predictable_increment, Some(a.max_predictable_increment));
                self.max_martingale_difference =
                    max_opt(self.max_martingale_difference, Some(a.max_martingale_difference));
                self.max_reconstruction_error =
                    max_opt(self.max_reconstruction_error, Some(a.reconstruction_error));
            }
        }
    }

    pub fn merge(&mut self, other: &AuditSummary) {
        self.trials += other.trials;
        self.exits += other.exits;
        self.audited += other.audited;
        self.containment_failures += other.containment_failures;
        self.max_predictable_increment =
            max_opt(self.max_predictable_increment, other.max_predictable_increment);
        self.max_martingale_difference =
            max_opt(self.max_martingale_difference, other.max_martingale_difference);
        self.max_reconstruction_error =
            max_opt(self.max_reconstruction_error, other.max_reconstruction_error);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    BoundGrid,
    IssfCompare,
    HlipCase,
    PropertySuite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub kind: ScenarioKind,
    /// Kind-specific parameters; omitted fields take their defaults.
    #[serde(default)]
    pub params: serde_json::Value,
    /// Defaults to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioParams {
    BoundGrid(BoundGridParams),
    IssfCompare(IssfCompareParams),
    HlipCase(HlipCaseParams),
    PropertySuite(PropertySuiteParams),
}

fn parse<T: serde::de::DeserializeOwned>(id: &str, v: &serde_json::Value) -> Result<T> {
    let v = if v.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        v.clone()
    };
    serde_json::from_value(v).map_err(|e| Error::Config(format!("scenario {id}: params: {e}")))
}

impl Scenario {
    pub fn new(id: impl Into<String>, kind: ScenarioKind) -> Self {
        Self {
            id: id.into(),
            kind,
            params: serde_json::Value::Null,
            seed: None,
            trials: None,
        }
    }

    pub fn with_params<T: Serialize>(mut self, params: &T) -> Result<Self> {
        self.params = serde_json::to_value(params)?;
        Ok(self)
    }

    /// Parse and validate the kind-specific parameters.
    pub fn parsed_params(&self) -> Result<ScenarioParams> {
        let id = &self.id;
        Ok(match self.kind {
            ScenarioKind::BoundGrid => {
                let p: BoundGridParams = parse(id, &self.params)?;
                p.validate()?;
                ScenarioParams::BoundGrid(p)
            }
            ScenarioKind::IssfCompare => {
                let p: IssfCompareParams = parse(id, &self.params)?;
                p.validate()?;
                ScenarioParams::IssfCompare(p)
            }
            ScenarioKind::HlipCase => {
                let p: HlipCaseParams = parse(id, &self.params)?;
                p.validate()?;
                ScenarioParams::HlipCase(p)
            }
            ScenarioKind::PropertySuite => {
                ScenarioParams::PropertySuite(parse(id, &self.params)?)
            }
        })
    }
}

/// A complete run: scenarios plus run-wide settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Overrides every scenario's trial count.
    #[serde(default)]
    pub trials: Option<u64>,
    /// Worker cap; results do not depend on it.
    #[serde(default)]
    pub workers: Option<usize>,
    pub scenarios: Vec<Scenario>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Unique nonempty ids, file-safe names, and parameters that parse.
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::Config("run config lists no scenarios".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.scenarios {
            let safe = !s.id.is_empty()
                && s.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !safe {
                return Err(Error::Config(format!(
                    "scenario id {:?} must be nonempty [A-Za-z0-9_-]",
                    s.id
                )));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Config(format!("duplicate scenario id {}", s.id)));
            }
            if s.trials == Some(0) {
                return Err(Error::Config(format!("scenario {}: trials must be >= 1", s.id)));
            }
            s.parsed_params()?;
        }
        if self.trials == Some(0) {
            return Err(Error::Config("trials override must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything one scenario produced.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub id: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub trials: Option<u64>,
    pub tables: Vec<ResultTable>,
    pub audit: Option<AuditSummary>,
    pub properties: Vec<PropertyOutcome>,
    /// Parameters actually used, defaults filled in.
    pub params: serde_json::Value,
}

impl ScenarioOutput {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyOutcome::passed)
            && self.audit.as_ref().is_none_or(|a| a.containment_failures == 0)
    }

    pub fn table(&self, id: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.id() == id)
    }
}

/// Run one scenario. `trials_override` beats the scenario's own count.
pub fn run_scenario(
    scenario: &Scenario,
    run_seed: u64,
    trials_override: Option<u64>,
    engine: &Engine,
) -> Result<ScenarioOutput> {
    let id = scenario.id.as_str();
    let seed = scenario.seed.unwrap_or(run_seed);
    let requested = trials_override.or(scenario.trials);
    let mut out = ScenarioOutput {
        id: id.to_owned(),
        kind: scenario.kind,
        seed,
        trials: None,
        tables: Vec::new(),
        audit: None,
        properties: Vec::new(),
        params: serde_json::Value::Null,
    };
    match scenario.parsed_params()? {
        ScenarioParams::BoundGrid(p) => {
            out.tables.push(bound_grid(id, &p)?);
            out.params = serde_json::to_value(&p)?;
        }
        ScenarioParams::IssfCompare(p) => {
            let trials = requested.unwrap_or(ISSF_DEFAULT_TRIALS);
            let (table, audit) = issf_compare(id, &p, trials, seed, engine)?;
            out.tables.push(table);
            out.audit = Some(audit);
            out.trials = Some(trials);
            out.params = serde_json::to_value(&p)?;
        }
        ScenarioParams::HlipCase(p) => {
            let trials = requested.unwrap_or(HLIP_DEFAULT_TRIALS);
            let (table, paths, audit) = hlip_case(id, &p, trials, seed, engine)?;
            out.tables.push(table);
            out.tables.push(paths);
            out.audit = Some(audit);
            out.trials = Some(trials);
            out.params = serde_json::to_value(&p)?;
        }
        ScenarioParams::PropertySuite(mut p) => {
            if let Some(n) = requested {
                p.martingale_trials = n;
                p.ville_trials = n;
            }
            out.trials = Some(p.martingale_trials);
            out.properties = property_suite(&p, seed, engine)?;
            out.tables.push(property_table(id, &out.properties)?);
            out.params = serde_json::to_value(&p)?;
        }
    }
    Ok(out)
}

/// Manifest timestamp: `SOURCE_DATE_EPOCH` when set, else 0, so reruns
/// stay byte-identical.
pub fn manifest_timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub id: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub trials: Option<u64>,
    pub passed: bool,
    pub files: Vec<String>,
    pub params: serde_json::Value,
    pub audit: Option<AuditSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub timestamp: u64,
    pub seed: u64,
    pub trials_override: Option<u64>,
    pub files: Vec<String>,
    pub scenarios: Vec<ManifestEntry>,
}

/// Write every table as `<id>.csv` and `<id>.json`, then `manifest.json`.
pub fn write_outputs(
    dir: &Path,
    outputs: &[ScenarioOutput],
    run_seed: u64,
    trials_override: Option<u64>,
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut manifest = Manifest {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        timestamp: manifest_timestamp(),
        seed: run_seed,
        trials_override,
        files: Vec::new(),
        scenarios: Vec::new(),
    };
    for out in outputs {
        let mut files = Vec::new();
        for table in &out.tables {
            let csv_name = format!("{}.csv", table.id());
            let json_name = format!("{}.json", table.id());
            table.write_csv(fs::File::create(dir.join(&csv_name))?)?;
            table.write_json(std::io::BufWriter::new(fs::File::create(dir.join(&json_name))?))?;
            files.push(csv_name);
            files.push(json_name);
        }
        manifest.files.extend(files.iter().cloned());
        manifest.scenarios.push(ManifestEntry {
            id: out.id.clone(),
            kind: out.kind,
            seed: out.seed,
            trials: out.trials,
            passed: out.passed(),
            files,
            params: out.params.clone(),
            audit: out.audit.clone(),
        });
    }
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(manifest)
}

/// The bundled scenario set at full scale.
pub fn default_scenarios() -> Vec<Scenario> {
    vec![
        Scenario::new("bound_grid", ScenarioKind::BoundGrid),
        Scenario::new("issf_compare", ScenarioKind::IssfCompare),
        Scenario::new("hlip_case", ScenarioKind::HlipCase),
        Scenario::new("property_suite", ScenarioKind::PropertySuite),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let v = Linspace::new(0.0, 95.0, 20).values();
        assert_eq!(v.len(), 20);
        assert_eq!((v[0], v[1], v[19]), (0.0, 5.0, 95.0));
        assert_eq!(Linspace::new(3.0, 9.0, 1).values(), vec![3.0]);
        let s = Linspace::new(0.01, 1.0, 100).values();
        assert_eq!(s[99], 1.0);
        assert!((s[49] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn config_rejects_unknown_fields_by_name() {
        let err = RunConfig::from_json(r#"{"scenarios": [], "sede": 3}"#).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
        let err = RunConfig::from_json(
            r#"{"scenarios": [{"id": "g", "kind": "bound_grid", "params": {"horizn": 3}}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("horizn"), "{err}");
        let err = RunConfig::from_json(
            r#"{"scenarios": [{"id": "a", "kind": "bound_grid"}, {"id": "a", "kind": "bound_grid"}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        assert!(RunConfig::from_json(r#"{"scenarios": [{"id": "a/b", "kind": "bound_grid"}]}"#).is_err());
    }

    #[test]
    fn bound_grid_zero_lambda_row() {
        let t = bound_grid("g", &BoundGridParams::default()).unwrap();
        assert_eq!(t.len(), 101 * 100);
        for row in 0..100 {
            assert_eq!(t.get(row, "lambda").unwrap().as_f64(), Some(0.0));
            assert_eq!(t.get(row, "ville").unwrap().as_f64(), Some(1.0));
            assert_eq!(t.get(row, "freedman").unwrap().as_f64(), Some(1.0));
            assert_eq!(t.get(row, "gap").unwrap().as_f64(), Some(0.0));
        }
    }

    #[test]
    fn worst_case_scan() {
        assert_eq!(worst_case_first_violation(0.9, 1.0, 0.5, 30), Some(1));
        assert_eq!(worst_case_first_violation(1.0, 0.1, 1.0, 30), Some(11));
        assert_eq!(worst_case_first_violation(0.9, 0.01, 1.0, 22), None);
        assert_eq!(worst_case_first_violation(0.9, 0.01, 1.0, 30), Some(23));
    }
}
