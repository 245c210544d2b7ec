//! Layered key/value settings: figure preset, then config file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Every recognized `section.key`.
pub const KEYS: &[&str] = &[
    "mdp.preset",
    "mdp.target_solid",
    "mdp.behavior_solid",
    "mdp.mdp_file",
    "mdp.target_file",
    "mdp.behavior_file",
    "mdp.start",
    "features.preset",
    "features.file",
    "algo.algo",
    "algo.b",
    "algo.lambda",
    "algo.schedule",
    "algo.eta",
    "algo.mu",
    "algo.t0",
    "algo.radius",
    "experiment.iterations",
    "experiment.budget",
    "experiment.stride",
    "experiment.stride_transitions",
    "experiment.seeds",
    "experiment.base_seed",
    "experiment.metric",
    "experiment.reference",
    "experiment.jobs",
    "experiment.lambda_values",
    "experiment.rho_values",
    "experiment.vary",
    "experiment.samples",
    "experiment.theta",
];

/// Keys that exclude each other; setting one clears the other.
const EXCLUSIVE: &[(&str, &str)] = &[
    ("experiment.iterations", "experiment.budget"),
    ("experiment.stride", "experiment.stride_transitions"),
    ("features.preset", "features.file"),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

fn canonical(key: &str) -> Option<&'static str> {
    KEYS.iter().copied().find(|k| *k == key)
}

impl Settings {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let key = canonical(key).ok_or_else(|| CliError::Invalid(format!("unknown config key `{key}`")))?;
        for &(a, b) in EXCLUSIVE {
            if key == a {
                self.values.remove(b);
            } else if key == b {
                self.values.remove(a);
            }
        }
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(canonical(key).is_some(), "unregistered key {key}");
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value(key, s))
                    .collect()
            })
            .transpose()
    }

    /// Applies `other` on top of `self`.
    /// Like [`Settings::set`], but a key whose exclusive partner is already
    /// present in this layer is an error instead of a replacement.
    pub fn insert_checked(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        for &(a, b) in EXCLUSIVE {
            let other = if key == a {
                b
            } else if key == b {
                a
            } else {
                continue;
            };
            if self.values.contains_key(other) {
                return Err(CliError::Invalid(format!("`{key}` conflicts with `{other}`")));
            }
        }
        self.set(key, value)
    }

    pub fn overlay(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.set(k, v.clone()).expect("keys of a Settings are canonical");
        }
    }

    /// Parses an INI-style file with `[mdp]`, `[features]`, `[algo]` and
    /// `[experiment]` sections. `#` and `;` start comments.
    pub fn parse_ini(text: &str) -> Result<Self, CliError> {
        let mut out = Settings::default();
        let mut section: Option<String> = None;
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !["mdp", "features", "algo", "experiment"].contains(&name) {
                    return Err(CliError::Invalid(format!("line {line_no}: unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("line {line_no}: expected `key = value`, got `{line}`")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| CliError::Invalid(format!("line {line_no}: key `{}` outside any section", k.trim())))?;
            let key = format!("{sec}.{}", k.trim());
            if canonical(&key).is_none() {
                return Err(CliError::Invalid(format!("line {line_no}: unknown config key `{key}`")));
            }
            if let Some(prev) = seen.insert(key.clone(), line_no) {
                return Err(CliError::Invalid(format!(
                    "line {line_no}: `{key}` already set on line {prev}"
                )));
            }
            for &(a, b) in EXCLUSIVE {
                let other = if key == a {
                    b
                } else if key == b {
                    a
                } else {
                    continue;
                };
                if seen.contains_key(other) {
                    return Err(CliError::Invalid(format!(
                        "line {line_no}: `{key}` conflicts with `{other}`"
                    )));
                }
            }
            out.set(&key, v.trim())?;
        }
        Ok(out)
    }

    pub fn load_ini(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_ini(&text).map_err(|e| match e {
            CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    v.parse()
        .map_err(|e| CliError::Invalid(format!("`{key}`: cannot parse `{v}`: {e}")))
}

/// Published figure whose settings a preset reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    F1a,
    F1b,
    F2,
    F3,
    F5,
    F6,
    F7,
    F8,
    F9,
}

impl FromStr for Figure {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "1a" => Self::F1a,
            "1b" => Self::F1b,
            "2" => Self::F2,
            "3" => Self::F3,
            "5" => Self::F5,
            "6" => Self::F6,
            "7" => Self::F7,
            "8" => Self::F8,
            "9" => Self::F9,
            _ => {
                return Err(CliError::Invalid(format!(
                    "unknown figure `{s}` (expected 1a, 1b, 2, 3, 5, 6, 7, 8 or 9)"
                )))
            }
        })
    }
}

/// Shared Baird settings: target solid 0.9, behavior solid 1/7, η = 2⁻⁹, 20 seeds.
fn baird_base() -> Settings {
    let mut s = Settings::default();
    for (k, v) in [
        ("mdp.preset", "baird"),
        ("mdp.target_solid", "0.9"),
        ("mdp.behavior_solid", "0.14285714285714285"),
        ("features.preset", "phi1"),
        ("algo.schedule", "constant"),
        ("algo.eta", "0.001953125"),
        ("experiment.seeds", "20"),
    ] {
        s.set(k, v).expect("preset keys are registered");
    }
    s
}

impl Figure {
    /// Subcommands the preset applies to.
    pub fn subcommands(self) -> &'static [&'static str] {
        match self {
            Self::F1a | Self::F7 => &["run"],
            Self::F1b => &["sweep-b"],
            Self::F2 | Self::F6 => &["sweep-lambda"],
            Self::F3 => &["fixed-point"],
            // Error-bar replot of both panels of figure 1.
            Self::F5 => &["run", "sweep-b"],
            Self::F8 | Self::F9 => &["sweep-rho"],
        }
    }

    pub fn settings(self, subcommand: &str) -> Result<Settings, CliError> {
        if !self.subcommands().contains(&subcommand) {
            return Err(CliError::Invalid(format!(
                "figure preset does not apply to `{subcommand}` (use {})",
                self.subcommands().join(" or ")
            )));
        }
        let mut s = baird_base();
        let pairs: &[(&str, &str)] = match (self, subcommand) {
            (Self::F1a | Self::F5, "run") => &[
                ("algo.algo", "td0,etd0,per-etd0"),
                ("algo.b", "2,4,8"),
                ("experiment.budget", "200000"),
                ("experiment.stride_transitions", "2000"),
            ],
            (Self::F1b | Self::F5, _) => &[
                ("algo.algo", "per-etd0"),
                ("algo.b", "4,6,8,12,16,20"),
                ("experiment.iterations", "1000000"),
            ],
            (Self::F2 | Self::F6, _) => &[
                ("features.preset", "phi3"),
                ("algo.algo", "per-etd-lambda"),
                ("algo.b", "4"),
                ("experiment.iterations", "40000"),
                ("experiment.lambda_values", "0,0.2,0.4,0.6,0.8,1"),
            ],
            (Self::F3, _) => &[
                ("features.preset", "phi3"),
                ("algo.b", "4"),
                ("experiment.lambda_values", "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"),
            ],
            (Self::F7, _) => &[
                ("mdp.target_solid", "0.8"),
                ("algo.algo", "td0,etd0,per-etd0"),
                ("algo.b", "4,6,8"),
                ("experiment.budget", "200000"),
                ("experiment.stride_transitions", "2000"),
            ],
            (Self::F8, _) => &[
                ("algo.algo", "per-etd0"),
                ("algo.b", "4"),
                ("experiment.iterations", "50000"),
                ("experiment.stride", "500"),
                ("experiment.vary", "target"),
                ("experiment.rho_values", "0.167,0.2,0.4,0.6,0.8"),
            ],
            (Self::F9, _) => &[
                ("algo.algo", "per-etd0"),
                ("algo.b", "4"),
                ("experiment.iterations", "50000"),
                ("experiment.stride", "500"),
                ("experiment.vary", "behavior"),
                ("experiment.rho_values", "0.2,0.4,0.6,0.7,0.8"),
            ],
            _ => unreachable!("checked by subcommands()"),
        };
        for (k, v) in pairs {
            s.set(k, *v)?;
        }
        Ok(s)
    }
}
