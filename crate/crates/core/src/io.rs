//! Fixed-precision JSON/CSV encoding shared by all reports.
//!
//! Every float is written with 17 significant digits in scientific notation
//! so that identical computations produce byte-identical files.

use serde::ser::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats a float with 17 significant digits; non-finite values become
/// `NaN`, `inf` or `-inf`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_owned()
    } else if x > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

/// Serializes as a JSON number with 17 significant digits (`null` when
/// non-finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let text = if self.0.is_finite() {
            fmt17(self.0)
        } else {
            "null".to_owned()
        };
        let raw = RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

pub(crate) fn sig17_vec(values: &[f64]) -> Vec<Sig17> {
    values.iter().copied().map(Sig17).collect()
}

/// Optional float: empty CSV cell / JSON `null` when absent.
pub(crate) fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes a header and string rows as CSV.
pub(crate) fn write_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory csv write");
    for row in rows {
        writer.write_record(&row).expect("in-memory csv write");
    }
    let bytes = writer.into_inner().expect("in-memory csv flush");
    String::from_utf8(bytes).expect("csv output is utf-8")
}
