//! `key = value` settings files. `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;

use sthoi_core::{Error, Result};

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, (usize, String)>,
}

pub const KEYS: [&str; 10] = [
    "alpha",
    "preset",
    "tp_miou",
    "tracking_iou",
    "criterion",
    "mode",
    "jobs",
    "multi_gt",
    "interacting_only",
    "extraction",
];

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(err(format!("unknown key {k:?}")));
            }
            if values.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
                return Err(err(format!("duplicate key {k:?}")));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::parse(&std::fs::read_to_string(p)?),
            None => Ok(Self::default()),
        }
    }

    /// Parses a value with `parse`, reporting failures at the key's line.
    pub fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => parse(v)
                .map(Some)
                .ok_or_else(|| Error::Parse { line: *line, message: format!("bad value {v:?} for {key}") }),
        }
    }
}
