//! JSON and CSV file formats.

use std::fs;
use std::io::Read;
use std::path::Path;

use polybell_core::analysis::CountData;
use polybell_core::bell::Scenario;
use polybell_core::sdp::{SolveResult, SolveStatus};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline. Floats use the shortest text that
/// parses back to the same value.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Header of the counts CSV format.
pub const COUNTS_HEADER: [&str; 5] = ["a_setting", "b_setting", "a_outcome", "b_outcome", "count"];

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    a_setting: usize,
    b_setting: usize,
    a_outcome: usize,
    b_outcome: usize,
    count: u64,
}

/// Parses counts CSV; missing rows are zero and repeated rows add up.
pub fn read_counts<R: Read>(reader: R, scenario: &Scenario) -> Result<CountData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != COUNTS_HEADER {
        return Err(Error::Usage(format!("counts header must be `{}`, found `{}`", COUNTS_HEADER.join(","), header.join(","))));
    }
    let mut data = CountData::zeros(scenario.clone());
    for (line, row) in rdr.deserialize::<CountRow>().enumerate() {
        let row = row?;
        data.add(row.a_setting, row.b_setting, row.a_outcome, row.b_outcome, row.count)
            .map_err(|e| Error::Usage(format!("counts row {}: {e}", line + 2)))?;
    }
    Ok(data)
}

pub fn read_counts_file(path: &Path, scenario: &Scenario) -> Result<CountData> {
    read_counts(fs::File::open(path)?, scenario)
}

/// Writes every cell, zeros included.
pub fn write_counts<W: std::io::Write>(writer: W, data: &CountData) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (mu, nu, ra, rb) in data.scenario().blocks() {
        for k in 1..=ra {
            for l in 1..=rb {
                w.serialize(CountRow { a_setting: mu, b_setting: nu, a_outcome: k, b_outcome: l, count: data.count(mu, nu, k, l) })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Result half of the file-based solver handoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub value: f64,
    /// Non-negative; `value + gap` bounds the maximum from above.
    pub gap: f64,
    #[serde(default)]
    pub dual_value: Option<f64>,
    #[serde(default)]
    pub upper_bound: Option<f64>,
    #[serde(default)]
    pub primal_residual: Option<f64>,
    #[serde(default)]
    pub dual_residual: Option<f64>,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub y: Vec<f64>,
    #[serde(default)]
    pub message: String,
}

impl From<&SolveResult> for SolveReport {
    fn from(r: &SolveResult) -> Self {
        SolveReport {
            status: r.status,
            value: r.value,
            gap: (r.upper_bound - r.value).max(0.0),
            dual_value: Some(r.dual_value),
            upper_bound: Some(r.upper_bound),
            primal_residual: Some(r.primal_residual),
            dual_residual: Some(r.dual_residual),
            iterations: Some(r.iterations),
            y: r.y.clone(),
            message: r.message.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> Scenario {
        Scenario::new(vec![2, 3], vec![2]).unwrap()
    }

    #[test]
    fn counts_round_trip() {
        let s = scenario();
        let mut data = CountData::zeros(s.clone());
        data.add(1, 1, 2, 1, 7).unwrap();
        data.add(2, 1, 3, 2, 11).unwrap();
        let mut buf = Vec::new();
        write_counts(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("a_setting,b_setting,a_outcome,b_outcome,count\n"));
        assert_eq!(text.lines().count(), 1 + 4 + 6);
        let back = read_counts(buf.as_slice(), &s).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn missing_rows_are_zero_and_repeats_add() {
        let csv = "a_setting, b_setting, a_outcome, b_outcome, count\n1,1,1,1,3\n1,1,1,1,4\n";
        let data = read_counts(csv.as_bytes(), &scenario()).unwrap();
        assert_eq!(data.count(1, 1, 1, 1), 7);
        assert_eq!(data.count(2, 1, 3, 2), 0);
    }

    #[test]
    fn bad_counts_rejected() {
        let s = scenario();
        assert!(matches!(read_counts("a,b,c,d,e\n".as_bytes(), &s), Err(Error::Usage(_))));
        let out_of_range = "a_setting,b_setting,a_outcome,b_outcome,count\n1,1,3,1,1\n";
        assert!(matches!(read_counts(out_of_range.as_bytes(), &s), Err(Error::Usage(_))));
        let negative = "a_setting,b_setting,a_outcome,b_outcome,count\n1,1,1,1,-1\n";
        assert!(matches!(read_counts(negative.as_bytes(), &s), Err(Error::Csv(_))));
    }

    #[test]
    fn json_floats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        let values = vec![0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, -7.25e17];
        write_json(&path, &values).unwrap();
        let back: Vec<f64> = read_json(&path).unwrap();
        assert_eq!(back, values);
        assert!(std::fs::read_to_string(&path).unwrap().ends_with("]\n"));
    }
}
