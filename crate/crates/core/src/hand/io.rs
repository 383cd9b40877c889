use std::collections::HashSet;
use std::fmt;

use serde_json::Value;

use super::HandDescription;
use crate::scalar::Real;

/// Keys every hand document must carry, in canonical order.
pub const TOP_LEVEL_KEYS: [&str; 9] =
    ["joints", "muscles", "routes", "sensors", "fingers", "thumb", "frames", "palm", "experiment"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorCode {
    SyntaxError,
    UnknownField,
    MissingRequiredField,
    InvalidValue,
    ReferenceToUndefinedJoint,
    ReferenceToUndefinedMuscle,
    ReferenceToUndefinedChain,
}

impl ParseErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorCode::SyntaxError => "syntax-error",
            ParseErrorCode::UnknownField => "unknown-field",
            ParseErrorCode::MissingRequiredField => "missing-required-field",
            ParseErrorCode::InvalidValue => "invalid-value",
            ParseErrorCode::ReferenceToUndefinedJoint => "reference-to-undefined-joint",
            ParseErrorCode::ReferenceToUndefinedMuscle => "reference-to-undefined-muscle",
            ParseErrorCode::ReferenceToUndefinedChain => "reference-to-undefined-chain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub code: ParseErrorCode,
    /// Dotted field path, e.g. `routes[3].waypoints[0].joint_id`.
    pub path: String,
    /// 1-based line and column when the error has a source position.
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ParseError {
    fn at(code: ParseErrorCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code, path: path.into(), line: None, column: None, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code.as_str())?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " at {l}:{c}")?;
        }
        if !self.path.is_empty() {
            write!(f, " ({})", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parses a hand document. Checks run in stages (top-level keys, field
/// types, cross references); every error of the first failing stage is
/// returned.
pub fn parse_hand_description<T: Real>(text: &str) -> Result<HandDescription<T>, Vec<ParseError>> {
    if text.trim().is_empty() {
        return Err(TOP_LEVEL_KEYS
            .iter()
            .map(|k| ParseError::at(ParseErrorCode::MissingRequiredField, *k, "empty document"))
            .collect());
    }
    let value: Value = serde_json::from_str(text).map_err(|e| vec![from_serde(&e, "")])?;
    let Some(obj) = value.as_object() else {
        return Err(vec![ParseError::at(ParseErrorCode::SyntaxError, "", "top level must be an object")]);
    };
    let mut errors: Vec<ParseError> = TOP_LEVEL_KEYS
        .iter()
        .filter(|k| !obj.contains_key(**k))
        .map(|k| ParseError::at(ParseErrorCode::MissingRequiredField, *k, "missing key"))
        .collect();
    errors.extend(
        obj.keys()
            .filter(|k| !TOP_LEVEL_KEYS.contains(&k.as_str()))
            .map(|k| ParseError::at(ParseErrorCode::UnknownField, k.clone(), "unknown key")),
    );
    if !errors.is_empty() {
        return Err(errors);
    }
    let desc: HandDescription<T> = serde_json::from_str(text).map_err(|e| vec![from_serde(&e, "")])?;
    let refs = check_references(&desc);
    if refs.is_empty() {
        Ok(desc)
    } else {
        Err(refs)
    }
}

fn from_serde(e: &serde_json::Error, path: &str) -> ParseError {
    use serde_json::error::Category;
    let msg = e.to_string();
    let code = match e.classify() {
        Category::Syntax | Category::Eof | Category::Io => ParseErrorCode::SyntaxError,
        Category::Data if msg.starts_with("unknown field") => ParseErrorCode::UnknownField,
        Category::Data if msg.starts_with("missing field") => ParseErrorCode::MissingRequiredField,
        Category::Data => ParseErrorCode::InvalidValue,
    };
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| matches!(code, ParseErrorCode::UnknownField | ParseErrorCode::MissingRequiredField))
        .unwrap_or(path);
    ParseError { code, path: field.to_string(), line: Some(e.line()), column: Some(e.column()), message: msg }
}

fn check_references<T: Real>(d: &HandDescription<T>) -> Vec<ParseError> {
    let joints: HashSet<&str> = d.joints.iter().map(|j| j.id.as_str()).collect();
    let muscles: HashSet<&str> = d.muscles.iter().map(|m| m.id.as_str()).collect();
    let chains: HashSet<&str> = d.chains().map(|c| c.name.as_str()).collect();
    let mut errs = Vec::new();
    let undefined_joint = |path: String, id: &str| {
        ParseError::at(ParseErrorCode::ReferenceToUndefinedJoint, path, format!("joint `{id}` is not defined"))
    };
    for (i, r) in d.routes.iter().enumerate() {
        if !muscles.contains(r.muscle_id.as_str()) {
            errs.push(ParseError::at(
                ParseErrorCode::ReferenceToUndefinedMuscle,
                format!("routes[{i}].muscle_id"),
                format!("muscle `{}` is not defined", r.muscle_id),
            ));
        }
        for (k, w) in r.waypoints.iter().enumerate() {
            if !joints.contains(w.joint_id.as_str()) {
                errs.push(undefined_joint(format!("routes[{i}].waypoints[{k}].joint_id"), &w.joint_id));
            }
        }
    }
    for (ci, c) in d.fingers.iter().enumerate() {
        for (k, j) in c.joints.iter().enumerate() {
            if !joints.contains(j.as_str()) {
                errs.push(undefined_joint(format!("fingers[{ci}].joints[{k}]"), j));
            }
        }
    }
    for (k, j) in d.thumb.joints.iter().enumerate() {
        if !joints.contains(j.as_str()) {
            errs.push(undefined_joint(format!("thumb.joints[{k}]"), j));
        }
    }
    let undefined_chain = |path: String, name: &str| {
        ParseError::at(ParseErrorCode::ReferenceToUndefinedChain, path, format!("chain `{name}` is not defined"))
    };
    for (i, m) in d.muscles.iter().enumerate() {
        if !chains.contains(m.target_finger.as_str()) {
            errs.push(undefined_chain(format!("muscles[{i}].target_finger"), &m.target_finger));
        }
    }
    for (i, s) in d.sensors.iter().enumerate() {
        if let Some(f) = &s.finger {
            if !chains.contains(f.as_str()) {
                errs.push(undefined_chain(format!("sensors[{i}].finger"), f));
            }
        }
    }
    for (i, f) in d.frames.iter().enumerate() {
        if !chains.contains(f.chain.as_str()) {
            errs.push(undefined_chain(format!("frames[{i}].chain"), &f.chain));
        }
    }
    for (name, path) in [
        (&d.experiment.rom_finger, "experiment.rom_finger"),
        (&d.experiment.fingertip_finger, "experiment.fingertip_finger"),
    ] {
        if !chains.contains(name.as_str()) {
            errs.push(undefined_chain(path.to_string(), name));
        }
    }
    errs
}

/// Canonical document: fixed key order, shortest round-trip number format,
/// two-space indentation and a trailing newline.
pub fn serialize<T: Real>(desc: &HandDescription<T>) -> String {
    let mut s = serde_json::to_string_pretty(desc).expect("hand description serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::default_hand;

    #[test]
    fn empty_document_reports_missing_fields() {
        let errs = parse_hand_description::<f64>("").unwrap_err();
        assert_eq!(errs.len(), TOP_LEVEL_KEYS.len());
        assert!(errs.iter().all(|e| e.code == ParseErrorCode::MissingRequiredField));
        let errs = parse_hand_description::<f64>("{}").unwrap_err();
        assert!(errs.iter().all(|e| e.code == ParseErrorCode::MissingRequiredField));
    }

    #[test]
    fn syntax_error_carries_position() {
        let errs = parse_hand_description::<f64>("{\n  \"joints\": [,\n}").unwrap_err();
        assert_eq!(errs[0].code, ParseErrorCode::SyntaxError);
        assert_eq!(errs[0].line, Some(2));
    }

    #[test]
    fn undefined_joint_in_route() {
        let mut d = default_hand::<f64>();
        d.routes[0].waypoints[0].joint_id = "XYZ".into();
        let errs = parse_hand_description::<f64>(&serialize(&d)).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, ParseErrorCode::ReferenceToUndefinedJoint);
        assert_eq!(errs[0].path, "routes[0].waypoints[0].joint_id");
    }

    #[test]
    fn unknown_field_rejected() {
        let text = serialize(&default_hand::<f64>());
        let bad = text.replacen("\"rest_angle_deg\"", "\"rest_angel_deg\"", 1);
        let errs = parse_hand_description::<f64>(&bad).unwrap_err();
        assert_eq!(errs[0].code, ParseErrorCode::UnknownField);
        assert!(errs[0].line.is_some());
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().insert("wrist".into(), Value::Null);
        let errs = parse_hand_description::<f64>(&v.to_string()).unwrap_err();
        assert_eq!(errs[0].code, ParseErrorCode::UnknownField);
        assert_eq!(errs[0].path, "wrist");
    }

    #[test]
    fn missing_nested_field() {
        let text = serialize(&default_hand::<f64>());
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["joints"][0].as_object_mut().unwrap().remove("stiffness_nmm_per_deg");
        let errs = parse_hand_description::<f64>(&v.to_string()).unwrap_err();
        assert_eq!(errs[0].code, ParseErrorCode::MissingRequiredField);
        assert_eq!(errs[0].path, "stiffness_nmm_per_deg");
    }

    #[test]
    fn serialize_is_canonical() {
        let d = default_hand::<f64>();
        let a = serialize(&d);
        assert_eq!(a, serialize(&d));
        let back: HandDescription<f64> = parse_hand_description(&a).unwrap();
        assert_eq!(back, d);
        assert_eq!(serialize(&back), a);
    }
}
