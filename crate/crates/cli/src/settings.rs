//! Config-file loading, flag overlay and artifact output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const SEED_ENV: &str = "SPARSEBENCH_SEED";
pub const RESOLVED_CONFIG: &str = "resolved_config.json";

/// Reads the settings object from a config file. Accepts either a bare object
/// or the `{"command": .., "settings": ..}` form written as resolved_config.json.
fn read_config(path: &Path, command: &str) -> Result<Map<String, Value>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: invalid JSON: {e}", path.display())))?;
    let Value::Object(mut obj) = value else {
        return Err(CliError::Input(format!("{}: expected a JSON object", path.display())));
    };
    if let Some(cmd) = obj.get("command") {
        if cmd.as_str() != Some(command) {
            return Err(CliError::Input(format!("{}: field `command` is {cmd}, expected \"{command}\"", path.display())));
        }
        return match obj.remove("settings") {
            Some(Value::Object(s)) => Ok(s),
            Some(_) => Err(CliError::Input(format!("{}: field `settings` must be an object", path.display()))),
            None => Ok(Map::new()),
        };
    }
    Ok(obj)
}

/// Overlays every flag that was given onto the config file's values.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>, command: &str) -> Result<T, CliError> {
    let mut base = match config {
        Some(p) => read_config(p, command)?,
        None => Map::new(),
    };
    if let Value::Object(given) = serde_json::to_value(flags).expect("settings serialize") {
        for (k, v) in given {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    let origin = config.map_or_else(|| "command line".to_string(), |p| p.display().to_string());
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Input(format!("{origin}: {e}")))
}

/// Master seed from the environment, or 0.
pub fn env_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Input(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

pub fn seed_or_env(seed: Option<u64>) -> Result<u64, CliError> {
    seed.map_or_else(env_seed, Ok)
}

/// The output directory; every artifact goes through here.
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn dir(&self) -> &Path {
        &self.0
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display())))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(name, text)
    }

    pub fn write_resolved<T: Serialize>(&self, command: &str, settings: &T) -> Result<PathBuf, CliError> {
        self.write_json(RESOLVED_CONFIG, &json!({ "command": command, "settings": settings }))
    }
}
