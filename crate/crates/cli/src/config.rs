//! Config files, flag merging, and the exit-code mapping.

use std::fmt;
use std::fs;
use std::path::Path;

use anderson_saw::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config, or parameters outside an operation's domain.
    Usage(String),
    /// A solve, probe, or root bracket failed numerically.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::Degenerate(_) | Error::Bracket(_) | Error::EnumerationLimit { .. } => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// Parameters read from a `--config` file. Accepts either a flat object or
/// a previous report, whose `config` member is used.
#[derive(Debug, Default)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub params: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Outcome<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
        let mut object = match value {
            Value::Object(mut o) => match o.remove("config") {
                Some(Value::Object(inner)) => inner,
                Some(_) => return Err(Failure::Usage("`config` member must be an object".into())),
                None => o,
            },
            _ => return Err(Failure::Usage("config must be a JSON object".into())),
        };
        let command = match object.remove("command") {
            None | Some(Value::Null) => None,
            Some(Value::String(c)) => Some(c),
            Some(_) => return Err(Failure::Usage("`command` must be a string".into())),
        };
        let seed = match object.remove("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| Failure::Usage("`seed` must be a non-negative integer".into()))?,
            ),
        };
        object.retain(|_, v| !v.is_null());
        Ok(ConfigFile { command, seed, params: object })
    }
}

/// Overlays the flags given on the command line onto the config file
/// parameters; flags win. Keys the command does not know are rejected.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: &Map<String, Value>) -> Outcome<T> {
    let mut merged = config.clone();
    match serde_json::to_value(flags).expect("flag structs serialize") {
        Value::Object(given) => merged.extend(given.into_iter().filter(|(_, v)| !v.is_null())),
        _ => unreachable!("flag structs serialize to objects"),
    }
    let keys: Vec<String> = merged.keys().cloned().collect();
    let parsed: T = serde_json::from_value(Value::Object(merged))
        .map_err(|e| Failure::Usage(format!("invalid config value: {e}")))?;
    let known = serde_json::to_value(&parsed).expect("flag structs serialize");
    if let Some(unknown) = keys.iter().find(|k| known.get(k.as_str()).is_none_or(Value::is_null)) {
        return Err(Failure::Usage(format!("unknown config key `{unknown}`")));
    }
    Ok(parsed)
}

/// Seed precedence: flag, config file, `ANDERSON_SAW_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Outcome<u64> {
    if let Some(seed) = flag.or(config) {
        return Ok(seed);
    }
    match std::env::var("ANDERSON_SAW_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("ANDERSON_SAW_SEED={text:?} is not a non-negative integer"))),
        Err(_) => Ok(0),
    }
}

pub fn required<T: Clone>(value: &Option<T>, flag: &str) -> Outcome<T> {
    value.clone().ok_or_else(|| Failure::Usage(format!("missing required parameter --{flag}")))
}

pub fn existing_file(path: &Path) -> Outcome<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("file {} does not exist", path.display())))
    }
}
