//! Flag set shared by every command, config-file loading and resolution of
//! the values a command actually uses.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Environment variable supplying the default worker count.
pub const WORKERS_ENV: &str = "BBM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every field is optional so that a config file can fill the gaps left by
/// the command line. Lists are comma separated.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    /// Spatial dimension.
    #[arg(long, global = true)]
    pub d: Option<u32>,
    /// Final time.
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Window time L.
    #[arg(long = "L", global = true)]
    #[serde(rename = "L")]
    pub l: Option<f64>,
    /// Time shift ℓ (list for `bramson`).
    #[arg(long, global = true, value_delimiter = ',')]
    pub ell: Option<Vec<f64>>,
    /// Depth below √2L (list for `right-tail`).
    #[arg(long, global = true, value_delimiter = ',')]
    pub z: Option<Vec<f64>>,
    /// Offset above the centering (list for `tail` and `mallein`).
    #[arg(long, global = true, value_delimiter = ',')]
    pub y: Option<Vec<f64>>,
    /// Replicates.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core. Defaults to $BBM_WORKERS.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Time grid spacing; `inf` disables the grid.
    #[arg(long = "grid-step", global = true)]
    #[serde(alias = "grid-step", default, deserialize_with = "step_or_inf")]
    pub grid_step: Option<f64>,
    /// Pruning: `off`, `auto` or a kill depth.
    #[arg(long, global = true)]
    pub prune: Option<String>,
    /// Stop when this many particles are alive.
    #[arg(long, global = true)]
    pub population: Option<usize>,
    /// Starting modulus for `couple`.
    #[arg(long, global = true)]
    pub x0: Option<f64>,
    /// Offsets above √2ℓ for `bramson`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub w: Option<Vec<f64>>,
    /// Admissibility constant for `bramson`.
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Tree JSON to read (`render`) or write (`simulate`).
    #[arg(long, global = true)]
    pub tree: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Config file: flat `key=value` lines or a JSON object.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn step_or_inf<'de, D: serde::Deserializer<'de>>(de: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Step {
        Num(f64),
        Text(String),
    }
    match Step::deserialize(de)? {
        Step::Num(x) => Ok(Some(x)),
        Step::Text(s) => s.parse().map(Some).map_err(serde::de::Error::custom),
    }
}

const LIST_KEYS: [&str; 4] = ["ell", "z", "y", "w"];

/// Parses a config file. JSON is recognised by a leading `{`.
pub fn parse_config(text: &str) -> Result<Common, CliError> {
    let trimmed = text.trim_start();
    let value = if trimmed.starts_with('{') {
        let mut v: Value =
            serde_json::from_str(trimmed).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        if let Some(obj) = v.as_object_mut() {
            for key in LIST_KEYS {
                if let Some(x) = obj.get(key).filter(|x| x.is_number()).cloned() {
                    obj.insert(key.into(), Value::Array(vec![x]));
                }
            }
        }
        v
    } else {
        Value::Object(parse_key_values(text)?)
    };
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("config: {e}")))
}

fn parse_key_values(text: &str) -> Result<Map<String, Value>, CliError> {
    let mut map = Map::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().replace('-', "_");
        let val = val.trim();
        let parsed = if LIST_KEYS.contains(&key.as_str()) {
            Value::Array(val.split(',').map(|s| scalar(s.trim())).collect())
        } else if key == "format" || key == "prune" || key == "out" || key == "tree" {
            Value::String(val.to_string())
        } else {
            scalar(val)
        };
        map.insert(key, parsed);
    }
    Ok(map)
}

fn scalar(s: &str) -> Value {
    if let Ok(i) = s.parse::<u64>() {
        return Value::from(i);
    }
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Value::from(x),
        // serde_json has no infinity; keep the text and let the field reject it
        _ => Value::String(s.to_string()),
    }
}

macro_rules! merge_fields {
    ($flags:expr, $file:expr; $($f:ident),*) => {
        Common { $($f: $flags.$f.or($file.$f),)* config: $flags.config }
    };
}

impl Common {
    /// Command-line values win over file values.
    pub fn merged_with(self, file: Common) -> Common {
        merge_fields!(self, file; d, t, l, ell, z, y, n, seed, workers, grid_step, prune,
            population, x0, w, kappa, tree, out, format)
    }

    pub fn load(self) -> Result<Common, CliError> {
        match &self.config {
            Some(path) => {
                let text = read(path)?;
                let file = parse_config(&text)?;
                Ok(self.merged_with(file))
            }
            None => Ok(self),
        }
    }

    pub fn workers(&self) -> Result<usize, CliError> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{WORKERS_ENV}={v} is not a worker count"))),
            Err(_) => Ok(0),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Records every value a command resolves, in the order of the keys, so the
/// digest covers exactly the inputs that shape the numbers.
#[derive(Debug, Clone, Default)]
pub struct Resolved {
    values: BTreeMap<String, Value>,
}

impl Resolved {
    pub fn new(command: &str) -> Self {
        let mut r = Self::default();
        r.values.insert("command".into(), Value::from(command));
        r
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.values.insert(key.into(), v);
    }

    pub fn scalar<T: Serialize + Copy>(&mut self, key: &str, given: Option<T>, default: T) -> T {
        let v = given.unwrap_or(default);
        self.record(key, v);
        v
    }

    /// Grid steps are recorded as text so `inf` survives.
    pub fn grid_step(&mut self, given: Option<f64>, default: f64) -> Result<f64, CliError> {
        let h = given.unwrap_or(default);
        if !(h > 0.0) {
            return Err(CliError::Usage(format!("grid step {h} must be positive")));
        }
        self.record("grid_step", h.to_string());
        Ok(h)
    }

    pub fn list(
        &mut self,
        key: &str,
        given: Option<&Vec<f64>>,
        default: &[f64],
    ) -> Result<Vec<f64>, CliError> {
        let v = given.cloned().unwrap_or_else(|| default.to_vec());
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Usage(format!("--{key} needs finite values")));
        }
        self.record(key, &v);
        Ok(v)
    }

    pub fn single(
        &mut self,
        key: &str,
        given: Option<&Vec<f64>>,
        default: f64,
    ) -> Result<f64, CliError> {
        match given.map(Vec::as_slice) {
            None => Ok(self.scalar(key, None, default)),
            Some([x]) => Ok(self.scalar(key, Some(*x), default)),
            Some(_) => Err(CliError::Usage(format!(
                "--{key} takes a single value here"
            ))),
        }
    }

    pub fn values(&self) -> &BTreeMap<String, Value> {
        &self.values
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON of the
    /// resolved values.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(&self.values).expect("map of JSON values");
        let hash = Sha256::digest(text.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_agree() {
        let kv =
            parse_config("# comment\nd = 3\nt=12.5\nL=9\ny=1,2.5\ngrid-step=0.01\nprune=off\n")
                .unwrap();
        let js = parse_config(
            r#"{"d": 3, "t": 12.5, "L": 9, "y": [1, 2.5], "grid_step": 0.01, "prune": "off"}"#,
        )
        .unwrap();
        for c in [&kv, &js] {
            assert_eq!(c.d, Some(3));
            assert_eq!(c.t, Some(12.5));
            assert_eq!(c.l, Some(9.0));
            assert_eq!(c.y.as_deref(), Some(&[1.0, 2.5][..]));
            assert_eq!(c.grid_step, Some(0.01));
            assert_eq!(c.prune.as_deref(), Some("off"));
        }
        assert_eq!(
            parse_config("grid_step=inf").unwrap().grid_step,
            Some(f64::INFINITY)
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("dee=3").is_err());
        assert!(parse_config("d").is_err());
        assert!(parse_config(r#"{"d": -1}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let flags = Common {
            d: Some(5),
            ..Default::default()
        };
        let file = parse_config("d=3\nt=7").unwrap();
        let m = flags.merged_with(file);
        assert_eq!((m.d, m.t), (Some(5), Some(7.0)));
    }

    #[test]
    fn digest_tracks_values() {
        let mut a = Resolved::new("tail");
        a.scalar("d", None, 2u32);
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.scalar("d", Some(3u32), 2);
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
    }
}
