//! Pipeline configuration.
//!
//! The configuration file is flat `key = value` text with `#` comments and
//! an explicit schema version. Relative paths resolve against the
//! directory containing the configuration file. Unknown keys are errors:
//! a misspelled key must not silently fall back to a default.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::constraints::RoleConfig;
use crate::model::IdentityMode;
use crate::updates::Thresholds;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `key = value`")]
    BadLine { path: PathBuf, line: usize },
    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey {
        path: PathBuf,
        line: usize,
        key: String,
    },
    #[error("{path}:{line}: bad value for `{key}`: {detail}")]
    BadValue {
        path: PathBuf,
        line: usize,
        key: String,
        detail: String,
    },
    #[error("{path}: missing kgq_config_version")]
    MissingVersion { path: PathBuf },
    #[error("{path}: unsupported kgq_config_version `{found}` (supported: {CONFIG_VERSION})")]
    BadVersion { path: PathBuf, found: String },
    #[error("configuration lists dumps through both `manifest` and `dump` keys; use one")]
    AmbiguousDumps,
    #[error("input path does not exist: {path}")]
    MissingPath { path: PathBuf },
}

pub const CONFIG_VERSION: &str = "1";

/// Everything a pipeline run needs beyond its output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub identity_mode: IdentityMode,
    pub workers: usize,
    /// Spill directory for external sorting; a temporary directory when
    /// unset.
    pub scratch: Option<PathBuf>,
    /// Dump edge files in chronological order.
    pub dumps: Vec<PathBuf>,
    pub thresholds: Thresholds,
    pub roles: RoleConfig,
    /// Unit-width edit-distance buckets below the cap, one overflow above.
    pub histogram_cap: usize,
    /// Rows kept in top-violated listings.
    pub top_k: usize,
    /// Example statements kept per taxonomy-switch category.
    pub example_cap: usize,
    /// Statements buffered in memory before spilling during file diffs.
    pub max_in_memory: usize,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            identity_mode: IdentityMode::Content,
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(4),
            scratch: None,
            dumps: Vec::new(),
            thresholds: Thresholds::default(),
            roles: RoleConfig::default(),
            histogram_cap: 50,
            top_k: 10,
            example_cap: 5,
            max_in_memory: 500_000,
        }
    }
}

impl PipelineConfig {
    /// Fail if any referenced input path is missing. Run this at command
    /// start, before any stage writes output.
    pub fn check_inputs(&self) -> Result<(), ConfigError> {
        for dump in &self.dumps {
            if !dump.exists() {
                return Err(ConfigError::MissingPath { path: dump.clone() });
            }
        }
        Ok(())
    }
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let path = Path::new(value);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Read a configuration file. The `kgq_config_version` key is mandatory;
/// every other key is optional and falls back to the default.
pub fn read_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let mut config = PipelineConfig::default();
    let mut version: Option<String> = None;
    let mut manifest: Option<PathBuf> = None;
    let mut explicit_dumps: Vec<PathBuf> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::BadLine {
                path: path.to_path_buf(),
                line: line_no,
            });
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |detail: String| ConfigError::BadValue {
            path: path.to_path_buf(),
            line: line_no,
            key: key.to_string(),
            detail,
        };
        // Only the dump key may repeat; a duplicated scalar key is a
        // likely editing mistake.
        if key != "dump" && !seen.insert(key.to_string()) {
            return Err(bad("key given more than once".to_string()));
        }

        match key {
            "kgq_config_version" => version = Some(value.to_string()),
            "identity_mode" => {
                config.identity_mode = value.parse().map_err(bad)?;
            }
            "workers" => {
                let n: usize = value.parse().map_err(|e| bad(format!("{e}")))?;
                if n == 0 {
                    return Err(bad("worker count must be at least 1".to_string()));
                }
                config.workers = n;
            }
            "scratch" => config.scratch = Some(resolve(&base, value)),
            "manifest" => manifest = Some(resolve(&base, value)),
            "dump" => explicit_dumps.push(resolve(&base, value)),
            "string_absolute" => {
                config.thresholds.string_absolute =
                    value.parse().map_err(|e| bad(format!("{e}")))?;
            }
            "string_relative" => {
                let v: f64 = value.parse().map_err(|e| bad(format!("{e}")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(bad("must lie in [0, 1]".to_string()));
                }
                config.thresholds.string_relative = v;
            }
            "quantity_relative" => {
                let v: f64 = value.parse().map_err(|e| bad(format!("{e}")))?;
                if !(v > 0.0) {
                    return Err(bad("must be positive".to_string()));
                }
                config.thresholds.quantity_relative = v;
            }
            "histogram_cap" => {
                config.histogram_cap = value.parse().map_err(|e| bad(format!("{e}")))?;
            }
            "top_k" => {
                config.top_k = value.parse().map_err(|e| bad(format!("{e}")))?;
            }
            "example_cap" => {
                config.example_cap = value.parse().map_err(|e| bad(format!("{e}")))?;
            }
            "max_in_memory" => {
                let n: usize = value.parse().map_err(|e| bad(format!("{e}")))?;
                if n == 0 {
                    return Err(bad("buffer size must be at least 1".to_string()));
                }
                config.max_in_memory = n;
            }
            _ => match key.strip_prefix("role.") {
                Some(field) => set_role(&mut config.roles, field, value).map_err(bad)?,
                None => {
                    return Err(ConfigError::UnknownKey {
                        path: path.to_path_buf(),
                        line: line_no,
                        key: key.to_string(),
                    })
                }
            },
        }
    }

    match version {
        None => {
            return Err(ConfigError::MissingVersion {
                path: path.to_path_buf(),
            })
        }
        Some(v) if v != CONFIG_VERSION => {
            return Err(ConfigError::BadVersion {
                path: path.to_path_buf(),
                found: v,
            })
        }
        Some(_) => {}
    }

    if manifest.is_some() && !explicit_dumps.is_empty() {
        return Err(ConfigError::AmbiguousDumps);
    }
    config.dumps = match manifest {
        Some(manifest_path) => read_manifest(&manifest_path)?,
        None => explicit_dumps,
    };
    Ok(config)
}

/// Read a dump manifest: one path per line, chronological, `#` comments
/// allowed. Relative paths resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| resolve(&base, l))
        .collect())
}

fn set_role(roles: &mut RoleConfig, field: &str, value: &str) -> Result<(), String> {
    if value.is_empty() {
        return Err("role value must not be empty".to_string());
    }
    let slot = match field {
        "declaration_property" => &mut roles.declaration_property,
        "allowed_class" => &mut roles.allowed_class,
        "relation" => &mut roles.relation,
        "required_property" => &mut roles.required_property,
        "required_value" => &mut roles.required_value,
        "exception" => &mut roles.exception,
        "status" => &mut roles.status,
        "type_constraint" => &mut roles.type_constraint,
        "value_type_constraint" => &mut roles.value_type_constraint,
        "irs_constraint" => &mut roles.irs_constraint,
        "inverse_constraint" => &mut roles.inverse_constraint,
        "symmetric_constraint" => &mut roles.symmetric_constraint,
        "relation_instance_of" => &mut roles.relation_instance_of,
        "relation_subclass_of" => &mut roles.relation_subclass_of,
        "relation_instance_or_subclass" => &mut roles.relation_instance_or_subclass,
        "status_mandatory" => &mut roles.status_mandatory,
        "status_suggested" => &mut roles.status_suggested,
        "datatype_property" => &mut roles.datatype_property,
        "external_id_datatype" => &mut roles.external_id_datatype,
        "instance_property" => &mut roles.instance_property,
        "subclass_property" => &mut roles.subclass_property,
        other => return Err(format!("unknown role field `{other}`")),
    };
    *slot = value.to_string();
    Ok(())
}
