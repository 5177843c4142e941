//! Run reports and human-readable number formatting.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// Resolved configuration; re-running with it reproduces the results.
    pub config: Value,
    pub results: Value,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub timing_seconds: f64,
}

/// `x` rounded to six significant digits, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=9).contains(&exp) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn six_digits() {
        assert_eq!(sig6(0.207106781), "0.207107");
        assert_eq!(sig6(21.0916), "21.0916");
        assert_eq!(sig6(8.196152422), "8.19615");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(-0.6666666), "-0.666667");
        assert_eq!(sig6(123456789.0), "123456789");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }
}
