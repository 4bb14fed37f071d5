//! Flat `key = value` files with dotted keys, `#` comments and blank lines.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub value: String,
}

/// Parsed entries, consumed key by key so that leftovers can be reported
/// as unknown.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: BTreeMap<String, Entry>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                CliError::config(line, None, format!("expected `key = value`, found {content:?}"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-') {
                return Err(CliError::config(line, None, format!("invalid key {key:?}")));
            }
            if value.is_empty() {
                return Err(CliError::config(line, Some(key), "missing value".into()));
            }
            let entry = Entry {
                line,
                value: value.to_string(),
            };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(CliError::config(
                    line,
                    Some(key),
                    format!("duplicate key, first set on line {}", prev.line),
                ));
            }
        }
        Ok(Self { entries })
    }

    /// Line of every key, for diagnostics raised after the keys are consumed.
    pub fn lines(&self) -> BTreeMap<String, usize> {
        self.entries.iter().map(|(k, e)| (k.clone(), e.line)).collect()
    }

    pub fn take_str(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                CliError::config(e.line, Some(key), format!("cannot parse {:?}", e.value))
            }),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse::<T>().map_err(|_| {
                        CliError::config(e.line, Some(key), format!("cannot parse list item {item:?}"))
                    })
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    /// Removes and returns all numeric entries `prefix.<name>` as a map.
    pub fn take_params(&mut self, prefix: &str) -> Result<BTreeMap<String, f64>, CliError> {
        let dotted = format!("{prefix}.");
        let keys: Vec<String> = self
            .entries
            .keys()
            .filter(|k| k.starts_with(&dotted) && !k[dotted.len()..].contains('.'))
            .cloned()
            .collect();
        let mut out = BTreeMap::new();
        for key in keys {
            let name = key[dotted.len()..].to_string();
            if name == "file" {
                continue;
            }
            let v: f64 = self.take(&key)?.expect("key listed above");
            out.insert(name, v);
        }
        Ok(out)
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<(), CliError> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, e)) => Err(CliError::config(e.line, Some(&key), "unknown key".into())),
        }
    }
}
