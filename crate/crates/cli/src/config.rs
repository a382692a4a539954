//! Strict, schema-driven configuration.
//!
//! A config is a JSON object (nested objects allowed) flattened to dotted
//! keys. Every key must appear in the subcommand's schema, every given key
//! must be consumed, and all violations are collected before reporting.

use num_complex::Complex64;
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy)]
pub enum Def {
    Required,
    Optional,
    /// JSON literal.
    Value(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub unit: &'static str,
    pub default: Def,
    pub doc: &'static str,
}

pub const fn key(
    key: &'static str,
    unit: &'static str,
    default: Def,
    doc: &'static str,
) -> KeySpec {
    KeySpec {
        key,
        unit,
        default,
        doc,
    }
}

pub const GLOBAL: &[KeySpec] = &[
    key(
        "outdir",
        "path",
        Def::Value("\"out\""),
        "output directory (created if missing)",
    ),
    key(
        "seed",
        "-",
        Def::Value("0"),
        "seed for randomized probe points",
    ),
];

/// Every violation found in one configuration.
#[derive(Debug, thiserror::Error)]
#[error("invalid configuration ({} problem{}):\n  - {}", .0.len(), if .0.len() == 1 { "" } else { "s" }, .0.join("\n  - "))]
pub struct ConfigError(pub Vec<String>);

#[derive(Debug, Clone, Copy)]
pub enum Bound {
    Any,
    Positive,
    NonNegative,
}

impl Bound {
    fn check(self, v: f64) -> Option<&'static str> {
        match self {
            _ if !v.is_finite() => Some("must be finite"),
            Bound::Positive if v <= 0.0 => Some("must be > 0"),
            Bound::NonNegative if v < 0.0 => Some("must be ≥ 0"),
            _ => None,
        }
    }
}

/// Render the key table shown by `--help`.
pub fn help(schema: &[KeySpec]) -> String {
    let mut s = String::from(
        "CONFIG KEYS (JSON object; nested keys written with dots; natural units ħ = c = 1):\n",
    );
    for k in schema.iter().chain(GLOBAL) {
        let d = match k.default {
            Def::Required => "required".to_string(),
            Def::Optional => "optional".to_string(),
            Def::Value(v) => format!("default {v}"),
        };
        let _ = writeln!(s, "  {:<24} [{}] ({d})\n      {}", k.key, k.unit, k.doc);
    }
    s
}

pub struct Reader {
    schema: Vec<KeySpec>,
    given: BTreeMap<String, Value>,
    resolved: BTreeMap<String, Value>,
    errors: Vec<String>,
}

impl Reader {
    /// `overrides` are applied in order on top of `raw` (`None` = empty object).
    pub fn new(schema: &[KeySpec], raw: Option<Value>, overrides: &[(String, Value)]) -> Self {
        let mut r = Reader {
            schema: schema.iter().chain(GLOBAL).copied().collect(),
            given: BTreeMap::new(),
            resolved: BTreeMap::new(),
            errors: Vec::new(),
        };
        match raw {
            None => {}
            Some(Value::Object(map)) => r.flatten("", map),
            Some(other) => r
                .errors
                .push(format!("config must be a JSON object, got {other}")),
        }
        for (k, v) in overrides {
            if r.spec(k).is_some() {
                r.given.insert(k.clone(), v.clone());
            } else {
                r.errors.push(format!("unknown key '{k}'"));
            }
        }
        r
    }

    fn spec(&self, key: &str) -> Option<&KeySpec> {
        self.schema.iter().find(|s| s.key == key)
    }

    fn flatten(&mut self, prefix: &str, map: Map<String, Value>) {
        for (k, v) in map {
            let full = if prefix.is_empty() {
                k
            } else {
                format!("{prefix}.{k}")
            };
            if self.spec(&full).is_some() {
                self.given.insert(full, v);
            } else if let Value::Object(inner) = v {
                let p = format!("{full}.");
                if self.schema.iter().any(|s| s.key.starts_with(&p)) {
                    self.flatten(&full, inner);
                } else {
                    self.errors.push(format!("unknown key '{full}'"));
                }
            } else {
                self.errors.push(format!("unknown key '{full}'"));
            }
        }
    }

    pub fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    /// Whether `key` was given explicitly.
    pub fn present(&self, key: &str) -> bool {
        self.given.contains_key(key)
    }

    fn raw(&mut self, key: &str, optional: bool) -> Option<Value> {
        let spec = *self
            .spec(key)
            .unwrap_or_else(|| panic!("key '{key}' missing from schema"));
        let v = match (self.given.get(key), spec.default) {
            (Some(v), _) => Some(v.clone()),
            (None, Def::Value(lit)) => {
                Some(serde_json::from_str(lit).expect("schema default is JSON"))
            }
            (None, Def::Required) if !optional => {
                self.errors
                    .push(format!("missing required key '{key}' ({})", spec.doc));
                None
            }
            (None, _) => None,
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.clone());
        }
        v
    }

    fn number(&mut self, key: &str, v: &Value, bound: Bound) -> Option<f64> {
        let Some(x) = v.as_f64() else {
            self.errors
                .push(format!("'{key}' must be a number, got {v}"));
            return None;
        };
        if let Some(why) = bound.check(x) {
            self.errors.push(format!("'{key}' = {x} {why}"));
            return None;
        }
        Some(x)
    }

    pub fn opt_f64(&mut self, key: &str, bound: Bound) -> Option<f64> {
        let v = self.raw(key, true)?;
        self.number(key, &v, bound)
    }

    pub fn f64(&mut self, key: &str, bound: Bound) -> f64 {
        match self.raw(key, false) {
            Some(v) => self.number(key, &v, bound).unwrap_or(f64::NAN),
            None => f64::NAN,
        }
    }

    /// A number or a non-empty array of numbers.
    pub fn f64_list(&mut self, key: &str, bound: Bound) -> Vec<f64> {
        let Some(v) = self.raw(key, false) else {
            return Vec::new();
        };
        match &v {
            Value::Array(items) if !items.is_empty() => items
                .iter()
                .filter_map(|x| self.number(key, x, bound))
                .collect(),
            Value::Array(_) => {
                self.errors.push(format!("'{key}' must not be empty"));
                Vec::new()
            }
            other => self.number(key, other, bound).into_iter().collect(),
        }
    }

    fn integer(&mut self, key: &str, v: &Value, min: u64) -> Option<usize> {
        match v.as_u64() {
            Some(n) if n >= min => Some(n as usize),
            _ => {
                self.errors
                    .push(format!("'{key}' must be an integer ≥ {min}, got {v}"));
                None
            }
        }
    }

    pub fn usize(&mut self, key: &str, min: u64) -> usize {
        match self.raw(key, false) {
            Some(v) => self.integer(key, &v, min).unwrap_or(0),
            None => 0,
        }
    }

    pub fn opt_usize(&mut self, key: &str, min: u64) -> Option<usize> {
        let v = self.raw(key, true)?;
        self.integer(key, &v, min)
    }

    pub fn usize_list(&mut self, key: &str, min: u64) -> Vec<usize> {
        let Some(v) = self.raw(key, false) else {
            return Vec::new();
        };
        match &v {
            Value::Array(items) if !items.is_empty() => items
                .iter()
                .filter_map(|x| self.integer(key, x, min))
                .collect(),
            other => self.integer(key, other, min).into_iter().collect(),
        }
    }

    pub fn u64(&mut self, key: &str) -> u64 {
        match self.raw(key, false) {
            Some(v) => v.as_u64().unwrap_or_else(|| {
                self.errors
                    .push(format!("'{key}' must be a non-negative integer, got {v}"));
                0
            }),
            None => 0,
        }
    }

    pub fn bool(&mut self, key: &str) -> bool {
        match self.raw(key, false) {
            Some(Value::Bool(b)) => b,
            Some(v) => {
                self.errors
                    .push(format!("'{key}' must be true or false, got {v}"));
                false
            }
            None => false,
        }
    }

    pub fn string(&mut self, key: &str) -> String {
        match self.raw(key, false) {
            Some(Value::String(s)) => s,
            Some(v) => {
                self.errors
                    .push(format!("'{key}' must be a string, got {v}"));
                String::new()
            }
            None => String::new(),
        }
    }

    /// One of `choices`; returns the empty string on error.
    pub fn choice(&mut self, key: &str, choices: &[&str]) -> String {
        let s = self.string(key);
        if !s.is_empty() && !choices.contains(&s.as_str()) {
            self.errors.push(format!(
                "'{key}' = \"{s}\" is not one of {}",
                choices.join(", ")
            ));
            return String::new();
        }
        s
    }

    pub fn object(&mut self, key: &str) -> Value {
        match self.raw(key, false) {
            Some(v @ Value::Object(_)) => v,
            Some(v) => {
                self.errors
                    .push(format!("'{key}' must be a JSON object, got {v}"));
                Value::Null
            }
            None => Value::Null,
        }
    }

    /// An object, or `null` when absent.
    pub fn object_or_null(&mut self, key: &str) -> Value {
        match self.raw(key, true) {
            Some(Value::Null) | None => Value::Null,
            Some(_) => self.object(key),
        }
    }

    fn complex(&mut self, key: &str, v: &Value) -> Option<Complex64> {
        if let Some(x) = v.as_f64() {
            return Some(Complex64::new(x, 0.0));
        }
        if let Some([re, im]) = v.as_array().map(Vec::as_slice) {
            if let (Some(re), Some(im)) = (re.as_f64(), im.as_f64()) {
                return Some(Complex64::new(re, im));
            }
        }
        self.errors.push(format!(
            "'{key}' entries must be numbers or [re, im] pairs, got {v}"
        ));
        None
    }

    /// Two-component spinor, each entry a number or `[re, im]`.
    pub fn spinor(&mut self, key: &str) -> [Complex64; 2] {
        let fallback = [Complex64::new(f64::NAN, 0.0); 2];
        let Some(v) = self.raw(key, false) else {
            return fallback;
        };
        match v.as_array().map(Vec::as_slice) {
            Some([a, b]) => match (self.complex(key, a), self.complex(key, b)) {
                (Some(a), Some(b)) if a.norm() + b.norm() > 0.0 => [a, b],
                (Some(_), Some(_)) => {
                    self.errors
                        .push(format!("'{key}' must not be the zero spinor"));
                    fallback
                }
                _ => fallback,
            },
            _ => {
                self.errors
                    .push(format!("'{key}' must have exactly two entries, got {v}"));
                fallback
            }
        }
    }

    /// List of `[lo, hi]` windows with `lo < hi`.
    pub fn windows(&mut self, key: &str) -> Vec<(f64, f64)> {
        let Some(v) = self.raw(key, false) else {
            return Vec::new();
        };
        let Some(items) = v.as_array() else {
            self.errors
                .push(format!("'{key}' must be a list of [lo, hi] pairs, got {v}"));
            return Vec::new();
        };
        let mut out = Vec::new();
        for item in items {
            match item.as_array().map(Vec::as_slice) {
                Some([lo, hi]) => match (lo.as_f64(), hi.as_f64()) {
                    (Some(lo), Some(hi)) if lo < hi => out.push((lo, hi)),
                    _ => self
                        .errors
                        .push(format!("'{key}': window {item} needs numbers lo < hi")),
                },
                _ => self
                    .errors
                    .push(format!("'{key}': window {item} must be [lo, hi]")),
            }
        }
        out
    }

    /// Validate everything and return the effective configuration as nested JSON.
    pub fn finish(mut self) -> Result<Value, ConfigError> {
        for k in self.given.keys() {
            if !self.resolved.contains_key(k) {
                self.errors
                    .push(format!("key '{k}' does not apply to this configuration"));
            }
        }
        if !self.errors.is_empty() {
            self.errors.dedup();
            return Err(ConfigError(self.errors));
        }
        let mut root = Map::new();
        for (k, v) in self.resolved {
            let mut node = &mut root;
            let mut parts: Vec<&str> = k.split('.').collect();
            let last = parts.pop().expect("non-empty key");
            for p in parts {
                node = node
                    .entry(p)
                    .or_insert_with(|| Value::Object(Map::new()))
                    .as_object_mut()
                    .expect("dotted keys never collide with leaves");
            }
            node.insert(last.to_string(), v);
        }
        Ok(Value::Object(root))
    }
}

/// `key=value` with the value parsed as JSON when possible, else a string.
pub fn parse_set(s: &str) -> Result<(String, Value), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("--set '{s}' is not KEY=VALUE"))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}
