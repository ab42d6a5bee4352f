//! On-disk formats: scenario and mechanism JSON documents, the trade-off
//! and figure CSV tables, and the metadata sidecar for reproduction runs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{RunRecord, SweepRecord, BASELINE_CLAMP_MARGIN};
use crate::feasibility::{SNAP_THRESHOLD, WITNESS_TOLERANCE};
use crate::model::{Labels, Mechanism, Prior, Scenario, UtilityOrder, UtilityValues};
use crate::optimizer::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub prior: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility_values: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility_order: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioFile {
            prior: s.prior().probs().to_vec(),
            utility_values: s.values().map(|v| v.as_rows().to_vec()),
            utility_order: Some(s.order().as_rows().to_vec()),
            labels: s.labels().cloned(),
        }
    }

    pub fn into_scenario(self) -> Result<Scenario> {
        let prior = Prior::new(self.prior).map_err(|e| Error::InvalidScenario(format!("field `prior`: {e}")))?;
        let values = self
            .utility_values
            .map(UtilityValues::new)
            .transpose()
            .map_err(|e| Error::InvalidScenario(format!("field `utility_values`: {e}")))?;
        let order = self
            .utility_order
            .map(UtilityOrder::new)
            .transpose()
            .map_err(|e| Error::InvalidScenario(format!("field `utility_order`: {e}")))?;
        let order = match (order, &values) {
            (Some(order), _) => order,
            (None, Some(values)) => crate::model::order_from_values(values),
            (None, None) => {
                return Err(Error::InvalidScenario(
                    "one of `utility_values` or `utility_order` is required".into(),
                ))
            }
        };
        Scenario::new(prior, order, values, self.labels)
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)?;
    file.into_scenario()
}

pub fn save_scenario(path: &Path, s: &Scenario) -> Result<()> {
    write_json(path, &ScenarioFile::from_scenario(s))
}

/// Mechanism table plus the name and parameters of whatever built it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismFile {
    pub builder: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub probs: Vec<Vec<f64>>,
}

impl MechanismFile {
    pub fn new(builder: &str, mech: &Mechanism) -> Self {
        MechanismFile {
            builder: builder.to_string(),
            parameters: BTreeMap::new(),
            probs: mech.as_rows().to_vec(),
        }
    }

    pub fn with_parameter<V: Into<serde_json::Value>>(mut self, key: &str, value: V) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn mechanism(&self) -> Result<Mechanism> {
        Mechanism::new(self.probs.clone()).map_err(|e| Error::InvalidMechanism(format!("field `probs`: {e}")))
    }
}

pub fn load_mechanism(path: &Path) -> Result<MechanismFile> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub h: usize,
    pub min_eps_nats: Option<f64>,
    pub mode: Mode,
    pub witness_file: String,
    pub status: String,
}

pub fn write_curve_csv<W: Write>(out: W, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Fig1Row<'a> {
    eps: f64,
    mechanism: &'a str,
    sample_min: f64,
    det_min: f64,
    clamped: bool,
}

pub fn write_fig1_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(Fig1Row {
            eps: r.eps,
            mechanism: r.mechanism.name(),
            sample_min: r.sample_min,
            det_min: r.det_min,
            clamped: r.clamped,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub artifact: &'static str,
    pub version: &'static str,
    pub figure: String,
    pub seed: u64,
    pub trials: usize,
    pub tolerances: BTreeMap<&'static str, f64>,
}

impl RunMetadata {
    pub fn new(figure: &str, seed: u64, trials: usize, bisection_tol: f64) -> Self {
        let tolerances = BTreeMap::from([
            ("bisection", bisection_tol),
            ("phase_one", 1e-8),
            ("witness_snap", SNAP_THRESHOLD),
            ("witness_check", WITNESS_TOLERANCE),
            ("baseline_clamp_margin", BASELINE_CLAMP_MARGIN),
        ]);
        RunMetadata {
            artifact: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            figure: figure.to_string(),
            seed,
            trials,
            tolerances,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::counting_query_scenario;

    #[test]
    fn scenario_needs_order_or_values() {
        let file: ScenarioFile = serde_json::from_str(r#"{"prior": [0.5, 0.5]}"#).unwrap();
        let err = file.into_scenario().unwrap_err();
        assert!(err.to_string().contains("utility_order"));
    }

    #[test]
    fn order_is_derived_from_values() {
        let file: ScenarioFile =
            serde_json::from_str(r#"{"prior": [0.5, 0.5], "utility_values": [[0, -1], [-3, 2]]}"#).unwrap();
        let s = file.into_scenario().unwrap();
        assert_eq!(s.order().as_rows(), &[vec![2, 1], vec![1, 2]]);
    }

    #[test]
    fn inconsistent_order_is_rejected() {
        let file: ScenarioFile = serde_json::from_str(
            r#"{"prior": [0.5, 0.5], "utility_values": [[0, -1], [-3, 2]],
                "utility_order": [[1, 2], [1, 2]]}"#,
        )
        .unwrap();
        assert!(matches!(file.into_scenario(), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn bad_prior_names_the_field() {
        let file: ScenarioFile =
            serde_json::from_str(r#"{"prior": [0.7, 0.7], "utility_order": [[1, 2], [2, 1]]}"#).unwrap();
        assert!(file.into_scenario().unwrap_err().to_string().contains("`prior`"));
        assert!(serde_json::from_str::<ScenarioFile>(r#"{"prior": [1.0], "extra": 1}"#).is_err());
    }

    #[test]
    fn scenario_file_round_trip() {
        let s = counting_query_scenario();
        let text = serde_json::to_string(&ScenarioFile::from_scenario(&s)).unwrap();
        let back: ScenarioFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_scenario().unwrap(), s);
    }

    #[test]
    fn mechanism_file_keeps_metadata() {
        let mech = Mechanism::new(vec![vec![0.25, 0.75], vec![1.0, 0.0]]).unwrap();
        let file = MechanismFile::new("utility_safe", &mech).with_parameter("h", 2);
        let text = serde_json::to_string(&file).unwrap();
        let back: MechanismFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.parameters["h"], 2);
        assert_eq!(back.mechanism().unwrap(), mech);
    }

    #[test]
    fn curve_csv_header() {
        let mut buf = Vec::new();
        write_curve_csv(
            &mut buf,
            &[CurveRow {
                h: 1,
                min_eps_nats: Some(0.0),
                mode: Mode::Safe,
                witness_file: "witness_h1.json".into(),
                status: "ok".into(),
            }],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "h,min_eps_nats,mode,witness_file,status");
        assert_eq!(text.lines().nth(1).unwrap(), "1,0.0,safe,witness_h1.json,ok");
    }
}
