//! JSON definitions of systems and storage candidates.
//!
//! System: `{"name", "kind": "affine"|"power_affine"|"general", "n", "m",
//! "g0": [expr..], "g": [[expr..]..], "p", "phi": "abs_pow"|"signed_pow", "F": [expr..]}`.
//! Storage: `{"kind": "builtin", "name"}` or `{"kind": "expr", "expr",
//! "regularity", "gradient"?: [expr..]}`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, Expr, ParseError};
use crate::storage::{Builtin, ExprStorage, Regularity, StorageCandidate};
use crate::systems::{AffineSystem, GeneralSystem, Phi, PowerAffineSystem, System, SystemError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {msg}")]
    Json { path: String, line: usize, column: usize, msg: String },
    #[error("{path}: {field}: expression `{src}`: {err}")]
    Expr { path: String, field: String, src: String, err: ParseError },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Affine {
        name: String,
        n: usize,
        m: usize,
        g0: Vec<String>,
        g: Vec<Vec<String>>,
    },
    PowerAffine {
        name: String,
        n: usize,
        m: usize,
        g0: Vec<String>,
        g: Vec<Vec<String>>,
        p: f64,
        phi: Phi,
    },
    General {
        name: String,
        n: usize,
        m: usize,
        #[serde(rename = "F")]
        f: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StorageSpec {
    Builtin {
        name: String,
    },
    Expr {
        expr: String,
        regularity: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gradient: Option<Vec<String>>,
    },
}

fn json_error(path: &str, e: serde_json::Error) -> ConfigError {
    ConfigError::Json {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    }
}

fn parse_field(path: &str, field: String, src: &str, n: usize, m: usize) -> Result<Expr, ConfigError> {
    expr::parse(src, n, m).map_err(|err| ConfigError::Expr {
        path: path.to_string(),
        field,
        src: src.to_string(),
        err,
    })
}

fn parse_vec(path: &str, field: &str, srcs: &[String], n: usize, m: usize) -> Result<Vec<Expr>, ConfigError> {
    srcs.iter()
        .enumerate()
        .map(|(k, s)| parse_field(path, format!("{field}[{k}]"), s, n, m))
        .collect()
}

fn invalid(path: &str, e: SystemError) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        msg: e.to_string(),
    }
}

fn affine_from(path: &str, name: &str, n: usize, m: usize, g0: &[String], g: &[Vec<String>]) -> Result<AffineSystem, ConfigError> {
    let g0 = parse_vec(path, "g0", g0, n, 0)?;
    let g = g
        .iter()
        .enumerate()
        .map(|(i, gi)| parse_vec(path, &format!("g[{i}]"), gi, n, 0))
        .collect::<Result<Vec<_>, _>>()?;
    AffineSystem::new(name, n, m, g0, g).map_err(|e| invalid(path, e))
}

impl SystemSpec {
    pub fn build(&self, path: &str) -> Result<System, ConfigError> {
        match self {
            SystemSpec::Affine { name, n, m, g0, g } => Ok(System::Affine(affine_from(path, name, *n, *m, g0, g)?)),
            SystemSpec::PowerAffine { name, n, m, g0, g, p, phi } => {
                let base = affine_from(path, name, *n, *m, g0, g)?;
                Ok(System::PowerAffine(PowerAffineSystem::new(base, *p, *phi).map_err(|e| invalid(path, e))?))
            }
            SystemSpec::General { name, n, m, f } => {
                let f = parse_vec(path, "F", f, *n, *m)?;
                Ok(System::General(GeneralSystem::new(name.clone(), *n, *m, f).map_err(|e| invalid(path, e))?))
            }
        }
    }

    /// The definition of an existing system, with expressions printed back to source.
    pub fn from_system(sys: &System) -> SystemSpec {
        let strs = |v: &[Expr]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>();
        match sys {
            System::Affine(a) => SystemSpec::Affine {
                name: a.name.clone(),
                n: a.n,
                m: a.m,
                g0: strs(&a.g0),
                g: a.g.iter().map(|gi| strs(gi)).collect(),
            },
            System::PowerAffine(pa) => SystemSpec::PowerAffine {
                name: pa.base.name.clone(),
                n: pa.base.n,
                m: pa.base.m,
                g0: strs(&pa.base.g0),
                g: pa.base.g.iter().map(|gi| strs(gi)).collect(),
                p: pa.p,
                phi: pa.phi,
            },
            System::General(gs) => SystemSpec::General {
                name: gs.name.clone(),
                n: gs.n,
                m: gs.m,
                f: strs(&gs.f),
            },
        }
    }
}

impl StorageSpec {
    /// Builds the candidate; expression candidates take their dimension from `n`.
    pub fn build(&self, path: &str, n: usize) -> Result<StorageCandidate, ConfigError> {
        match self {
            StorageSpec::Builtin { name } => Builtin::from_name(name)
                .map(Builtin::candidate)
                .ok_or_else(|| ConfigError::Invalid {
                    path: path.to_string(),
                    msg: format!("unknown builtin storage `{name}`"),
                }),
            StorageSpec::Expr { expr: src, regularity, gradient } => {
                let reg = Regularity::parse(regularity).ok_or_else(|| ConfigError::Invalid {
                    path: path.to_string(),
                    msg: format!("unknown regularity `{regularity}`"),
                })?;
                let e = parse_field(path, "expr".into(), src, n, 0)?;
                let mut s = ExprStorage::new(src.clone(), n, e, reg);
                if let Some(g) = gradient {
                    if g.len() != n {
                        return Err(ConfigError::Invalid {
                            path: path.to_string(),
                            msg: format!("gradient has {} components, state dimension is {n}", g.len()),
                        });
                    }
                    s = s.with_gradient(parse_vec(path, "gradient", g, n, 0)?);
                }
                Ok(Arc::new(s))
            }
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_system(text: &str, path: &str) -> Result<System, ConfigError> {
    let spec: SystemSpec = serde_json::from_str(text).map_err(|e| json_error(path, e))?;
    spec.build(path)
}

pub fn parse_storage(text: &str, path: &str, n: usize) -> Result<StorageCandidate, ConfigError> {
    let spec: StorageSpec = serde_json::from_str(text).map_err(|e| json_error(path, e))?;
    spec.build(path, n)
}

pub fn load_system(path: &Path) -> Result<System, ConfigError> {
    parse_system(&read(path)?, &path.display().to_string())
}

pub fn load_storage(path: &Path, n: usize) -> Result<StorageCandidate, ConfigError> {
    parse_storage(&read(path)?, &path.display().to_string(), n)
}

/// `builtin:<name>`, `expr:<source>` or a JSON file path.
///
/// `expr:<V>;<dV/dx1>;...;<dV/dxn>` attaches a gradient and marks the candidate
/// C¹ away from the origin; without one it is only continuous.
pub fn storage_from_arg(arg: &str, n: usize) -> Result<StorageCandidate, ConfigError> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return StorageSpec::Builtin { name: name.to_string() }.build(arg, n);
    }
    if let Some(src) = arg.strip_prefix("expr:") {
        let mut parts = src.split(';').map(str::trim);
        let expr = parts.next().unwrap_or_default().to_string();
        let gradient: Vec<String> = parts.map(str::to_string).collect();
        let regularity = if gradient.is_empty() { "continuous" } else { "c1_away_from_origin" };
        return StorageSpec::Expr {
            expr,
            regularity: regularity.into(),
            gradient: (!gradient.is_empty()).then_some(gradient),
        }
        .build(arg, n);
    }
    load_storage(Path::new(arg), n)
}
