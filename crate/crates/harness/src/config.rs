//! Flat, typed `key = value` configuration.
//!
//! A config file holds one assignment per line; `#` starts a comment. Every
//! key must belong to the schema of the selected preset.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::presets::Preset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Text,
    /// Comma-separated floats.
    Floats,
    /// Comma-separated non-negative integers.
    Ints,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Int => "int",
            Kind::Float => "float",
            Kind::Text => "text",
            Kind::Floats => "float list",
            Kind::Ints => "int list",
        })
    }
}

/// One schema entry.
#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub doc: &'static str,
}

pub const fn param(key: &'static str, kind: Kind, default: &'static str, doc: &'static str) -> Param {
    Param { key, kind, default, doc }
}

fn check_value(p: &Param, raw: &str) -> Result<()> {
    let bad = |why: String| Error::Config(format!("{} = {raw:?}: expected {}, {why}", p.key, p.kind));
    let float = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|e| bad(format!("{e}")))?;
        if !v.is_finite() {
            return Err(bad("got a non-finite number".into()));
        }
        Ok(v)
    };
    match p.kind {
        Kind::Int => {
            raw.trim().parse::<u64>().map_err(|e| bad(format!("{e}")))?;
        }
        Kind::Float => {
            float(raw)?;
        }
        Kind::Text => {
            if raw.trim().is_empty() {
                return Err(bad("got an empty string".into()));
            }
        }
        Kind::Floats => {
            for s in raw.split(',') {
                float(s)?;
            }
        }
        Kind::Ints => {
            for s in raw.split(',') {
                s.trim().parse::<u64>().map_err(|e| bad(format!("{e}")))?;
            }
        }
    }
    Ok(())
}

/// Validated parameter set for one preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    /// Schema defaults overridden by `overrides`, in order.
    pub fn resolve(schema: &[Param], overrides: &[(String, String)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> = schema.iter().map(|p| (p.key.to_string(), p.default.to_string())).collect();
        for (k, v) in overrides {
            let p = schema.iter().find(|p| p.key == k.as_str()).ok_or_else(|| {
                let known: Vec<&str> = schema.iter().map(|p| p.key).collect();
                Error::Config(format!("unknown key {k:?}; valid keys: {}", known.join(", ")))
            })?;
            let v = v.trim();
            check_value(p, v)?;
            values.insert(k.clone(), v.to_string());
        }
        for p in schema {
            check_value(p, &values[p.key])?;
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("parameter {key:?} is not in the schema"))
    }

    pub fn text(&self, key: &str) -> &str {
        self.raw(key)
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.raw(key).parse().expect("validated float")
    }

    pub fn usize(&self, key: &str) -> usize {
        self.raw(key).parse().expect("validated int")
    }

    pub fn u64(&self, key: &str) -> u64 {
        self.raw(key).parse().expect("validated int")
    }

    pub fn floats(&self, key: &str) -> Vec<f64> {
        self.raw(key)
            .split(',')
            .map(|s| s.trim().parse().expect("validated float"))
            .collect()
    }

    pub fn usizes(&self, key: &str) -> Vec<usize> {
        self.raw(key)
            .split(',')
            .map(|s| s.trim().parse().expect("validated int"))
            .collect()
    }

    pub fn point(&self, key: &str) -> Result<[f64; 2]> {
        match self.floats(key)[..] {
            [a, b] => Ok([a, b]),
            _ => Err(Error::Config(format!("{key} needs exactly two coordinates"))),
        }
    }

    pub fn echo(&self) -> BTreeMap<String, String> {
        self.values.clone()
    }
}

/// `key=value` from the command line.
pub fn parse_assignment(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got {s:?}")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Config(format!("empty key in {s:?}")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// Assignments from a config file, in file order.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let kv = parse_assignment(line).map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        out.push(kv);
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub params: Params,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(preset: &str, overrides: &[(String, String)], out: Option<PathBuf>) -> Result<Self> {
        let preset = Preset::from_name(preset)?;
        let params = Params::resolve(preset.schema(), overrides)?;
        Ok(Self { preset, params, out })
    }

    pub fn defaults(preset: Preset) -> Self {
        Self {
            preset,
            params: Params::resolve(preset.schema(), &[]).expect("schema defaults validate"),
            out: None,
        }
    }

    /// Copy with extra overrides applied on top of the current values.
    pub fn with(&self, overrides: &[(&str, &str)]) -> Result<Self> {
        let mut all: Vec<(String, String)> = self.params.echo().into_iter().collect();
        all.extend(overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())));
        Ok(Self {
            preset: self.preset,
            params: Params::resolve(self.preset.schema(), &all)?,
            out: self.out.clone(),
        })
    }

    pub fn with_out(mut self, out: impl Into<PathBuf>) -> Self {
        self.out = Some(out.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[Param] = &[
        param("n", Kind::Int, "64", "grid"),
        param("tol", Kind::Float, "1e-6", "tolerance"),
        param("radii", Kind::Floats, "0.1,0.05", "radii"),
    ];

    #[test]
    fn defaults_and_overrides() {
        let p = Params::resolve(SCHEMA, &[("n".into(), " 128 ".into())]).unwrap();
        assert_eq!(p.usize("n"), 128);
        assert_eq!(p.f64("tol"), 1e-6);
        assert_eq!(p.floats("radii"), vec![0.1, 0.05]);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_errors() {
        assert!(matches!(
            Params::resolve(SCHEMA, &[("tl".into(), "1".into())]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Params::resolve(SCHEMA, &[("n".into(), "1.5".into())]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Params::resolve(SCHEMA, &[("tol".into(), "nan".into())]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Params::resolve(SCHEMA, &[("radii".into(), "0.1,,0.2".into())]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn config_text() {
        let kv = parse_config_text("# comment\n n = 32 \n\ntol=1e-3 # trailing\n").unwrap();
        assert_eq!(kv, vec![("n".into(), "32".into()), ("tol".into(), "1e-3".into())]);
        assert!(parse_config_text("n 32").is_err());
    }
}
