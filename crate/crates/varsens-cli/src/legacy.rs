//! Parser for the legacy parameter syntax: JSON objects with string-valued
//! fields, joined by `&`.
//!
//! ```text
//! {"param":"x","min":"1","max":"10","fixed":"5"}&{"param":"y","min":"2","max":"5","fixed":"3"}
//! ```
//!
//! Each entry carries `param`, `min`, `max`, and optionally `fixed`; every
//! value is a JSON *string*, and the numeric fields are parsed out of their
//! strings. A missing `fixed` defaults to the midpoint of the range, which
//! is what conditional-mean analyses expect. Entry order is preserved.

use serde::Deserialize;
use thiserror::Error;
use varsens::ParameterSpec;

#[derive(Debug, Error)]
pub enum LegacyError {
    /// `index` is the zero-based position of the entry in the `&`-joined list.
    #[error("legacy parameter entry {index} is malformed: {message}")]
    MalformedEntry { index: usize, message: String },
    #[error("duplicate parameter name '{name}' in legacy parameter text")]
    DuplicateParam { name: String },
}

// The on-the-wire shape: all fields are strings, unknown keys are rejected.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LegacyEntry {
    param: String,
    min: String,
    max: String,
    #[serde(default)]
    fixed: Option<String>,
}

fn number(index: usize, field: &str, text: &str) -> Result<f64, LegacyError> {
    let malformed = |message| LegacyError::MalformedEntry { index, message };
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| malformed(format!("field \"{field}\" is not a number: {text:?}")))?;
    if !value.is_finite() {
        return Err(malformed(format!("field \"{field}\" must be finite, got {text:?}")));
    }
    Ok(value)
}

/// Parses legacy parameter text into parameter specs.
pub fn parse_legacy_params(text: &str) -> Result<Vec<ParameterSpec>, LegacyError> {
    let mut specs: Vec<ParameterSpec> = Vec::new();
    for (index, segment) in text.split('&').enumerate() {
        let malformed = |message: String| LegacyError::MalformedEntry { index, message };
        let segment = segment.trim();
        if segment.is_empty() {
            return Err(malformed("empty entry".into()));
        }
        let entry: LegacyEntry =
            serde_json::from_str(segment).map_err(|e| malformed(e.to_string()))?;

        let min = number(index, "min", &entry.min)?;
        let max = number(index, "max", &entry.max)?;
        if max <= min {
            return Err(malformed(format!(
                "max ({}) must exceed min ({})",
                entry.max, entry.min
            )));
        }
        let fixed = match &entry.fixed {
            Some(text) => {
                let value = number(index, "fixed", text)?;
                if value < min || value > max {
                    return Err(malformed(format!(
                        "fixed value {} lies outside [{}, {}]",
                        text, entry.min, entry.max
                    )));
                }
                value
            }
            None => 0.5 * (min + max),
        };

        if specs.iter().any(|s| s.name == entry.param) {
            return Err(LegacyError::DuplicateParam { name: entry.param });
        }
        specs.push(ParameterSpec::with_fixed(entry.param, min, max, fixed));
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_entry_text_parses_in_order() {
        let specs = parse_legacy_params(
            r#"{"param":"x","min":"1","max":"10","fixed":"5"}&{"param":"y","min":"2","max":"5","fixed":"3"}"#,
        )
        .unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0], ParameterSpec::with_fixed("x", 1.0, 10.0, 5.0));
        assert_eq!(specs[1], ParameterSpec::with_fixed("y", 2.0, 5.0, 3.0));
    }

    #[test]
    fn missing_fixed_defaults_to_the_midpoint() {
        let specs = parse_legacy_params(
            r#"{"param":"x","min":"-0.31415926535897932384626433","max":"0.31415926535897932384626433"}"#,
        )
        .unwrap();
        assert_eq!(specs[0].fixed, Some(0.0));
        assert_eq!(specs[0].min, -specs[0].max);
        assert_eq!(specs[0].max, "0.31415926535897932384626433".parse::<f64>().unwrap());
    }

    #[test]
    fn whitespace_around_entries_and_inside_numbers_is_tolerated() {
        let specs = parse_legacy_params(
            "{\"param\": \"x\", \"min\": \" 1 \", \"max\": \"10\", \"fixed\": \"5\"} &\n {\"param\":\"y\",\"min\":\"2\",\"max\":\"5\"}",
        )
        .unwrap();
        assert_eq!(specs[0].min, 1.0);
        assert_eq!(specs[1].fixed, Some(3.5));
    }

    #[test]
    fn inverted_range_is_rejected_with_the_entry_index() {
        let err = parse_legacy_params(
            r#"{"param":"x","min":"0","max":"1"}&{"param":"y","min":"5","max":"1"}"#,
        )
        .unwrap_err();
        match err {
            LegacyError::MalformedEntry { index, message } => {
                assert_eq!(index, 1);
                assert!(message.contains("must exceed"), "unexpected message: {message}");
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn numeric_json_values_are_rejected() {
        // The legacy format is strictly string-typed.
        let err =
            parse_legacy_params(r#"{"param":"x","min":1,"max":"10","fixed":"5"}"#).unwrap_err();
        assert!(matches!(err, LegacyError::MalformedEntry { index: 0, .. }));
    }

    #[test]
    fn unknown_keys_and_bad_numbers_are_rejected() {
        assert!(matches!(
            parse_legacy_params(r#"{"param":"x","min":"0","max":"1","nope":"3"}"#),
            Err(LegacyError::MalformedEntry { index: 0, .. })
        ));
        assert!(matches!(
            parse_legacy_params(r#"{"param":"x","min":"zero","max":"1"}"#),
            Err(LegacyError::MalformedEntry { index: 0, .. })
        ));
        assert!(matches!(
            parse_legacy_params(r#"{"param":"x","min":"0","max":"inf"}"#),
            Err(LegacyError::MalformedEntry { index: 0, .. })
        ));
    }

    #[test]
    fn out_of_range_fixed_is_rejected() {
        let err = parse_legacy_params(r#"{"param":"x","min":"0","max":"1","fixed":"2"}"#)
            .unwrap_err();
        assert!(matches!(err, LegacyError::MalformedEntry { index: 0, .. }));
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let err = parse_legacy_params(
            r#"{"param":"x","min":"0","max":"1"}&{"param":"x","min":"2","max":"3"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, LegacyError::DuplicateParam { name } if name == "x"));
    }

    #[test]
    fn empty_segments_are_rejected() {
        assert!(matches!(
            parse_legacy_params(""),
            Err(LegacyError::MalformedEntry { index: 0, .. })
        ));
        assert!(matches!(
            parse_legacy_params(r#"{"param":"x","min":"0","max":"1"}&"#),
            Err(LegacyError::MalformedEntry { index: 1, .. })
        ));
    }
}
