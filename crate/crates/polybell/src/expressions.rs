//! Expression lookup by name or file.

use std::path::Path;

use polybell_core::bell::{named, BellExpression, NamedExpr};
use polybell_core::nc::Level;

use crate::io::read_json;
use crate::{Error, Result};

/// Magic-square all-versus-nothing expression: three 4-outcome settings per
/// party, local bound 7, quantum value 9.
pub const AN_JSON: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/an.json"));

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 6] = ["I3", "I4", "CH", "VB", "VBprime", "AN"];

pub fn by_name(name: &str) -> Result<BellExpression> {
    if name.eq_ignore_ascii_case("AN") {
        return Ok(serde_json::from_str(AN_JSON)?);
    }
    named(name).map_err(|_| Error::Usage(format!("unknown expression `{name}`; expected one of {}", NAMES.join(", "))))
}

/// Canonical spelling of a known name.
pub fn canonical_name(name: &str) -> Option<&'static str> {
    if name.eq_ignore_ascii_case("AN") {
        return Some("AN");
    }
    name.parse::<NamedExpr>().ok().map(NamedExpr::as_str)
}

pub fn from_file(path: &Path) -> Result<BellExpression> {
    read_json(path)
}

/// Hierarchy level used when none is given; files default to level 3.
pub fn default_level(id: &str) -> Level {
    Level::default_for(id)
}
