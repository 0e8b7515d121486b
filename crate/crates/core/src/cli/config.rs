//! Flat `key = value` experiment configuration. Values resolve as
//! flag > file > default; keys outside a command's table are rejected.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The full key set of one command, in output order, with every value
/// resolved to its textual form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolved {
    command: &'static str,
    entries: Vec<(&'static str, String)>,
}

impl Resolved {
    pub fn command(&self) -> &'static str {
        self.command
    }

    pub fn entries(&self) -> &[(&'static str, String)] {
        &self.entries
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|(k, _)| *k == key)
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse(format!("`{key}` is not a {} setting", self.command)))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("invalid value for `{key}`: {raw:?}")))
    }

    /// `None` for the given sentinel word (`auto`, `none`), else the parsed value.
    pub fn parse_or<T: FromStr>(&self, key: &str, sentinel: &str) -> Result<Option<T>> {
        if self.get(key)? == sentinel {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }

    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.get(key)?;
        let items = raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid entry in `{key}`: {raw:?}")))
            })
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(Error::Parse(format!("`{key}` is empty")));
        }
        Ok(items)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# qmine {}\n", self.command);
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(Error::Parse(format!("config line {}: empty key or value", i + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::Parse(format!("config line {}: duplicate key `{k}`", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Overlays the config file (if any) and then the explicitly given flags on
/// the command's defaults.
pub fn resolve(
    command: &'static str,
    defaults: Vec<(&'static str, String)>,
    file: Option<&Path>,
    flags: &[(&'static str, Option<String>)],
) -> Result<Resolved> {
    let mut resolved = Resolved {
        command,
        entries: defaults,
    };
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)?;
        for (k, v) in parse_config(&text)? {
            resolved.set(&k, v)?;
        }
    }
    for (k, v) in flags {
        if let Some(v) = v {
            resolved.set(k, v.clone())?;
        }
    }
    Ok(resolved)
}

impl Resolved {
    fn set(&mut self, key: &str, value: String) -> Result<()> {
        let command = self.command;
        let slot = self
            .entries
            .iter_mut()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| Error::Parse(format!("unknown key `{key}` for {command}")))?;
        slot.1 = value;
        Ok(())
    }
}
