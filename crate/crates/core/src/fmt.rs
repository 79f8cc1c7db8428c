//! Output formatting shared by the CLI and the sweep writer.

use serde::Serialize;

use crate::error::Result;

/// 17 significant digits in scientific notation; parses back to the same bits.
pub(crate) fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with object keys sorted. Floats use the shortest decimal that
/// round-trips bit-exactly.
pub(crate) fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json::Map is a BTreeMap without the preserve_order feature
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
