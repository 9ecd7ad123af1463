//! Experiment runner: inequality verification on a body catalog with
//! machine-readable reports.
//!
//! Each experiment produces an [`ExperimentReport`] holding one
//! [`CaseRecord`] per checked instance. Verdicts are three-valued: a case
//! that could not be decided (solver did not converge, Monte Carlo variance
//! stayed too high) is `Inconclusive`, never `Pass`. Slack for every
//! inequality is assembled from the tolerances the participating estimators
//! report, scaled by a fixed factor of three; no hidden absolute constants.
//!
//! Reports are deterministic for a fixed config and seed: the only
//! run-dependent data (wall-clock timings) lives in the `timing` field,
//! which is zeroed before hashing or comparing runs.

pub mod catalog;
pub mod experiments;

pub use catalog::{built_in_catalog, load_catalog, CatalogEntry};
pub use experiments::{
    monotonicity_pair_sweep, run_standard_suite, superadditivity_pair_sweep, verify_bm_billiards,
    verify_inradius_bounds, verify_monotonicity, verify_volume_bound, HarnessConfig, MonotonePair,
};

use std::collections::BTreeMap;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Multiplier applied to the sum of reported estimator tolerances when
/// forming the acceptance slack of an inequality.
pub const SLACK_FACTOR: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The check could not be decided at the configured budget; distinct
    /// from `Fail` and never counted as a pass.
    Inconclusive,
}

/// One checked instance: the bodies involved, the measured quantities, the
/// slack in force, and the verdict. Carries its seed and the config hash so
/// the case can be reproduced in isolation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub bodies: Vec<String>,
    pub quantities: BTreeMap<String, f64>,
    pub slack: f64,
    pub verdict: Verdict,
    pub note: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    /// Smallest inequality margin seen across records that report one;
    /// negative values within slack still pass.
    pub min_margin: Option<f64>,
    /// Largest `ratio` quantity across records, when present.
    pub max_ratio: Option<f64>,
}

/// Wall-clock data, kept apart from the verified content so that two runs
/// with the same config and seed agree byte for byte everywhere else.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timing {
    pub generated_at_epoch_s: u64,
    pub total_ms: f64,
    pub case_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub cases: Vec<CaseRecord>,
    pub aggregate: Aggregate,
    pub timing: Timing,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config_hash: &str, seed: u64, mut cases: Vec<CaseRecord>) -> Self {
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let aggregate = aggregate(&cases);
        ExperimentReport {
            schema: 1,
            experiment: experiment.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            cases,
            aggregate,
            timing: Timing {
                generated_at_epoch_s: SystemTime::now()
                    .duration_since(SystemTime::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                ..Timing::default()
            },
        }
    }

    pub fn all_pass(&self) -> bool {
        self.aggregate.failed == 0 && self.aggregate.inconclusive == 0
    }

    /// JSON of the report with the timing field zeroed; this is the
    /// portion two identically configured runs reproduce byte for byte.
    pub fn hashable_json(&self) -> String {
        let mut clone = self.clone();
        clone.timing = Timing::default();
        serde_json::to_string_pretty(&clone).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Long-format CSV, one row per quantity, plot-ready (filter by the
    /// quantity column for ratio-vs-n curves or slack histograms).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,verdict,slack,seed,quantity,value\n");
        for case in &self.cases {
            let verdict = match case.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
                Verdict::Inconclusive => "inconclusive",
            };
            for (key, value) in &case.quantities {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    csv_field(&case.id),
                    verdict,
                    case.slack,
                    case.seed,
                    csv_field(key),
                    value
                ));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn aggregate(cases: &[CaseRecord]) -> Aggregate {
    let mut agg = Aggregate {
        cases: cases.len(),
        ..Aggregate::default()
    };
    for case in cases {
        match case.verdict {
            Verdict::Pass => agg.passed += 1,
            Verdict::Fail => agg.failed += 1,
            Verdict::Inconclusive => agg.inconclusive += 1,
        }
        if let Some(m) = case.quantities.get("margin") {
            agg.min_margin = Some(agg.min_margin.map_or(*m, |cur: f64| cur.min(*m)));
        }
        if let Some(r) = case.quantities.get("ratio") {
            agg.max_ratio = Some(agg.max_ratio.map_or(*r, |cur: f64| cur.max(*r)));
        }
    }
    agg
}

/// Hex SHA-256 of a serializable config; stamped on reports and records.
pub fn config_hash<C: Serialize>(config: &C) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, verdict: Verdict, margin: f64) -> CaseRecord {
        let mut quantities = BTreeMap::new();
        quantities.insert("margin".to_string(), margin);
        CaseRecord {
            id: id.to_string(),
            bodies: vec!["ball".into()],
            quantities,
            slack: 0.1,
            verdict,
            note: String::new(),
            seed: 7,
            config_hash: "abc".into(),
        }
    }

    #[test]
    fn records_are_sorted_and_aggregated() {
        let report = ExperimentReport::new(
            "demo",
            "abc",
            7,
            vec![
                record("b-case", Verdict::Fail, -0.5),
                record("a-case", Verdict::Pass, 0.2),
                record("c-case", Verdict::Inconclusive, 0.0),
            ],
        );
        assert_eq!(report.cases[0].id, "a-case");
        assert_eq!(report.aggregate.cases, 3);
        assert_eq!(report.aggregate.passed, 1);
        assert_eq!(report.aggregate.failed, 1);
        assert_eq!(report.aggregate.inconclusive, 1);
        assert_eq!(report.aggregate.min_margin, Some(-0.5));
        assert!(!report.all_pass());
    }

    #[test]
    fn hashable_json_ignores_timing() {
        let mut a = ExperimentReport::new("demo", "abc", 7, vec![record("x", Verdict::Pass, 1.0)]);
        let mut b = a.clone();
        a.timing.total_ms = 120.0;
        b.timing.total_ms = 450.0;
        b.timing.generated_at_epoch_s += 3600;
        assert_eq!(a.hashable_json(), b.hashable_json());
    }

    #[test]
    fn csv_quotes_awkward_fields() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn config_hash_is_stable_hex() {
        let h1 = config_hash(&42u32);
        let h2 = config_hash(&42u32);
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 64);
        assert!(h1.chars().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(h1, config_hash(&43u32));
    }
}
