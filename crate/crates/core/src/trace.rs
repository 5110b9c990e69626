//! Deterministic text encodings shared by the run traces.
//!
//! Floats are written in shortest round-trip scientific notation, so equal
//! runs give byte-identical files. Non-finite values are written as `inf`,
//! `-inf` and `nan` in both CSV and JSON (JSON has no literal for them).

use serde::Serializer;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:e}")
    }
}

pub fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn ser_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&fmt_f64(*v))
    }
}

pub fn ser_opt_f64<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

/// Writes a header and rows of preformatted cells as CSV.
pub fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV write");
    for row in rows {
        w.write_record(&row).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formats() {
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(1e-35), "1e-35");
        assert_eq!(fmt_f64(0.1), "1e-1");
        assert_eq!(fmt_f64(1.5), "1.5e0");
        assert_eq!(fmt_opt_f64(None), "");
    }

    #[test]
    fn json_non_finite() {
        #[derive(serde::Serialize)]
        struct T {
            #[serde(serialize_with = "ser_f64")]
            v: f64,
        }
        assert_eq!(serde_json::to_string(&T { v: f64::INFINITY }).unwrap(), r#"{"v":"inf"}"#);
        assert_eq!(serde_json::to_string(&T { v: 2.0 }).unwrap(), r#"{"v":2.0}"#);
    }
}
