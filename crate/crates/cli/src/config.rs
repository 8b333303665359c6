//! JSON config files merged with command-line flags; the command line wins.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::UsageError;

/// Keys that apply to every command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Globals {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

pub struct ConfigFile {
    path: PathBuf,
    text: String,
    entries: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| {
            UsageError(format!("{}:{}: {e}", path.display(), e.line()))
        })?;
        let Value::Object(entries) = value else {
            return Err(UsageError(format!("{}:1: config must be a JSON object", path.display())));
        };
        Ok(ConfigFile {
            path: path.to_path_buf(),
            text,
            entries,
        })
    }

    /// Line of the first occurrence of `"key":`, for messages.
    fn line_of(&self, key: &str) -> usize {
        let quoted = format!("\"{key}\"");
        let mut from = 0;
        while let Some(pos) = self.text[from..].find(&quoted) {
            let at = from + pos;
            let rest = self.text[at + quoted.len()..].trim_start();
            if rest.starts_with(':') {
                return self.text[..at].matches('\n').count() + 1;
            }
            from = at + quoted.len();
        }
        1
    }

    fn error(&self, key: &str, msg: impl std::fmt::Display) -> UsageError {
        UsageError(format!("{}:{}: `{key}`: {msg}", self.path.display(), self.line_of(key)))
    }

    /// Checks an optional `command` key against the command being run.
    pub fn check_command(&self, command: &str) -> Result<(), UsageError> {
        match self.entries.get("command") {
            None => Ok(()),
            Some(Value::String(c)) if c == command => Ok(()),
            Some(other) => Err(self.error("command", format!("config is for {other}, not `{command}`"))),
        }
    }

    pub fn globals(&self) -> Result<Globals, UsageError> {
        let mut g = Map::new();
        for key in ["threads", "out", "csv"] {
            if let Some(v) = self.entries.get(key) {
                g.insert(key.into(), v.clone());
                serde_json::from_value::<Globals>(Value::Object(g.clone()))
                    .map_err(|e| self.error(key, e))?;
            }
        }
        Ok(serde_json::from_value(Value::Object(g)).expect("checked per key"))
    }

    /// Command-specific entries, checked key by key against `A`.
    fn command_entries<A: Serialize + DeserializeOwned + Default>(&self) -> Result<Map<String, Value>, UsageError> {
        let known = object(&A::default());
        let mut out = Map::new();
        for (key, value) in &self.entries {
            if matches!(key.as_str(), "command" | "threads" | "out" | "csv") {
                continue;
            }
            if !known.contains_key(key) {
                return Err(self.error(key, "unknown key for this command"));
            }
            let mut single = Map::new();
            single.insert(key.clone(), value.clone());
            serde_json::from_value::<A>(Value::Object(single)).map_err(|e| self.error(key, e))?;
            out.insert(key.clone(), value.clone());
        }
        Ok(out)
    }
}

fn object<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value).expect("arguments serialize") {
        Value::Object(m) => m,
        _ => unreachable!("argument structs serialize to objects"),
    }
}

/// Overlays the flags given on the command line onto the config file.
/// Unset flags (`None`, or `false` for switches) leave file values alone.
pub fn merge<A: Serialize + DeserializeOwned + Default>(cli: &A, file: Option<&ConfigFile>) -> Result<A, UsageError> {
    let mut merged = match file {
        Some(f) => f.command_entries::<A>()?,
        None => Map::new(),
    };
    for (key, value) in object(cli) {
        if !matches!(value, Value::Null | Value::Bool(false)) {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| UsageError(e.to_string()))
}

pub fn merge_globals(cli: &Globals, file: Option<&ConfigFile>) -> Result<Globals, UsageError> {
    let from_file = match file {
        Some(f) => f.globals()?,
        None => Globals::default(),
    };
    Ok(Globals {
        threads: cli.threads.or(from_file.threads),
        out: cli.out.clone().or(from_file.out),
        csv: cli.csv.clone().or(from_file.csv),
    })
}
