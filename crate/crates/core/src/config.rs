//! Plain-text configuration documents with unit-annotated values.
//!
//! ```text
//! # device
//! m_eff = 2.0 pg
//! omega_m = 1.4 GHz            # angular, used as printed
//! kappa_over_2pi = 50 MHz      # ordinary frequency, multiplied by 2π
//! g_coupling = -485 GHz/nm
//!
//! [sense]
//! masses = 0, 1.428, 2.857 fg
//! ```
//!
//! Values are converted to internal units on access. A key ending in
//! `_over_2pi` holds an ordinary frequency; the suffix is stripped and the
//! value multiplied by 2π.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use thiserror::Error;

/// Suffix marking an ordinary (cycles) frequency.
pub const OVER_2PI: &str = "_over_2pi";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{key}` in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("key `{0}` given more than once")]
    DuplicateKey(String),
    #[error("key `{key}`: unknown unit `{unit}`")]
    UnknownUnit { key: String, unit: String },
    #[error("key `{key}`: expected a {expected} value, found {found}")]
    WrongDimension {
        key: String,
        expected: Dimension,
        found: String,
    },
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("{message}")]
    Invariant { key: String, message: String },
}

impl ConfigError {
    pub fn invariant(key: &str, message: impl Into<String>) -> Self {
        Self::Invariant {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Key the error refers to, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::Syntax { .. } => None,
            Self::MissingKey(k) | Self::DuplicateKey(k) => Some(k),
            Self::UnknownKey { key, .. }
            | Self::UnknownUnit { key, .. }
            | Self::WrongDimension { key, .. }
            | Self::Invalid { key, .. }
            | Self::Invariant { key, .. } => Some(key),
        }
    }
}

/// Physical dimension a key is expected to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Length,
    Mass,
    Power,
    Time,
    /// Angular frequency per length (optomechanical coupling).
    Coupling,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Frequency => "frequency",
            Dimension::Length => "length",
            Dimension::Mass => "mass",
            Dimension::Power => "power",
            Dimension::Time => "time",
            Dimension::Coupling => "coupling (frequency/length)",
            Dimension::Dimensionless => "dimensionless",
        };
        f.write_str(s)
    }
}

/// A recognised unit together with its factor into internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    pub dimension: Dimension,
    /// Multiply a value in this unit by `factor` to obtain internal units.
    pub factor: f64,
    /// `rad/ns` style units are already angular and may not carry `_over_2pi`.
    pub angular_only: bool,
}

fn frequency_unit(s: &str) -> Option<(f64, bool)> {
    // "X Hz" read as X rad/s when angular
    Some(match s {
        "Hz" => (1e-9, false),
        "kHz" => (1e-6, false),
        "MHz" => (1e-3, false),
        "GHz" => (1.0, false),
        "rad/ns" => (1.0, true),
        _ => return None,
    })
}

fn length_unit(s: &str) -> Option<f64> {
    match s {
        "nm" => Some(1e3),
        "pm" => Some(1.0),
        _ => None,
    }
}

impl Unit {
    pub fn parse(s: &str) -> Option<Unit> {
        let simple = |dimension, factor| Unit {
            dimension,
            factor,
            angular_only: false,
        };
        if let Some((factor, angular_only)) = frequency_unit(s) {
            return Some(Unit {
                dimension: Dimension::Frequency,
                factor,
                angular_only,
            });
        }
        if let Some(f) = length_unit(s) {
            return Some(simple(Dimension::Length, f));
        }
        let u = match s {
            "pg" => simple(Dimension::Mass, 1.0),
            "fg" => simple(Dimension::Mass, 1e-3),
            "W" => simple(Dimension::Power, 1e12),
            "uW" => simple(Dimension::Power, 1e6),
            "nW" => simple(Dimension::Power, 1e3),
            "ns" => simple(Dimension::Time, 1.0),
            "us" => simple(Dimension::Time, 1e3),
            "ps" => simple(Dimension::Time, 1e-3),
            _ => {
                // compound coupling unit: <frequency>/<length>
                let (num, den) = s.rsplit_once('/')?;
                let (f, _) = frequency_unit(num)?;
                let l = length_unit(den)?;
                simple(Dimension::Coupling, f / l)
            }
        };
        Some(u)
    }
}

/// One `key = values [unit]` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub values: Vec<f64>,
    pub unit: Option<String>,
    pub line: usize,
}

/// A `[name]` block (the unnamed block holds device parameters).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: BTreeMap<String, Entry>,
}

impl Section {
    fn base_name(key: &str) -> &str {
        key.strip_suffix(OVER_2PI).unwrap_or(key)
    }

    /// Rejects keys whose base name is not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for key in self.entries.keys() {
            if !allowed.contains(&Self::base_name(key)) {
                return Err(ConfigError::UnknownKey {
                    section: self.name.clone(),
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }

    fn lookup(&self, key: &str) -> Result<Option<(&str, &Entry, bool)>, ConfigError> {
        let ordinary = format!("{key}{OVER_2PI}");
        match (self.entries.get_key_value(key), self.entries.get_key_value(&ordinary)) {
            (Some(_), Some(_)) => Err(ConfigError::DuplicateKey(key.to_string())),
            (Some((k, e)), None) => Ok(Some((k.as_str(), e, false))),
            (None, Some((k, e))) => Ok(Some((k.as_str(), e, true))),
            (None, None) => Ok(None),
        }
    }

    /// All values of `key` converted to internal units; `None` when absent.
    pub fn list(&self, key: &str, dim: Dimension) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some((full_key, entry, ordinary)) = self.lookup(key)? else {
            return Ok(None);
        };
        let factor = match (&entry.unit, dim) {
            (None, Dimension::Dimensionless) => 1.0,
            (None, _) => {
                return Err(ConfigError::WrongDimension {
                    key: full_key.to_string(),
                    expected: dim,
                    found: "a bare number".into(),
                })
            }
            (Some(u), _) => {
                let unit = Unit::parse(u).ok_or_else(|| ConfigError::UnknownUnit {
                    key: full_key.to_string(),
                    unit: u.clone(),
                })?;
                if unit.dimension != dim {
                    return Err(ConfigError::WrongDimension {
                        key: full_key.to_string(),
                        expected: dim,
                        found: format!("`{u}` ({})", unit.dimension),
                    });
                }
                if ordinary && unit.angular_only {
                    return Err(ConfigError::invalid(
                        full_key,
                        "an `_over_2pi` key needs a Hz-family unit, not rad/ns",
                    ));
                }
                unit.factor
            }
        };
        if ordinary && dim != Dimension::Frequency {
            return Err(ConfigError::invalid(
                full_key,
                "`_over_2pi` only applies to frequencies",
            ));
        }
        let scale = if ordinary { factor * TAU } else { factor };
        Ok(Some(entry.values.iter().map(|v| v * scale).collect()))
    }

    /// Single value of `key` in internal units; `None` when absent.
    pub fn scalar(&self, key: &str, dim: Dimension) -> Result<Option<f64>, ConfigError> {
        match self.list(key, dim)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(ConfigError::invalid(key, "expected a single value")),
        }
    }

    pub fn require(&self, key: &str, dim: Dimension) -> Result<f64, ConfigError> {
        self.scalar(key, dim)?
            .ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    /// Non-negative integer setting.
    pub fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.scalar(key, Dimension::Dimensionless)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e9 => Ok(Some(v as usize)),
            Some(v) => Err(ConfigError::invalid(
                key,
                format!("expected a non-negative integer, got {v}"),
            )),
        }
    }
}

/// Parsed configuration: the unnamed device block plus command sections.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDocument {
    pub device: Section,
    pub sections: BTreeMap<String, Section>,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = ConfigDocument::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?;
                let name = name.trim().to_string();
                if name.is_empty() || doc.sections.contains_key(&name) {
                    return Err(ConfigError::Syntax {
                        line: line_no,
                        message: format!("empty or repeated section `{name}`"),
                    });
                }
                doc.sections.insert(
                    name.clone(),
                    Section {
                        name: name.clone(),
                        ..Section::default()
                    },
                );
                current = Some(name);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("invalid key `{key}`"),
                });
            }
            let entry = parse_value(key, value.trim(), line_no)?;
            let section = match &current {
                None => &mut doc.device,
                Some(name) => doc.sections.get_mut(name).expect("section inserted"),
            };
            if section.entries.insert(key.to_string(), entry).is_some() {
                return Err(ConfigError::DuplicateKey(key.to_string()));
            }
        }
        Ok(doc)
    }

    /// Command section by name; an absent section reads as empty.
    pub fn section(&self, name: &str) -> Section {
        self.sections.get(name).cloned().unwrap_or_else(|| Section {
            name: name.to_string(),
            ..Section::default()
        })
    }
}

/// `1, 2.5, 3 MHz` → values [1, 2.5, 3] with unit "MHz". A lone unit (`uW`)
/// is an empty list.
fn parse_value(key: &str, value: &str, line: usize) -> Result<Entry, ConfigError> {
    let mut tokens: Vec<&str> = value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    let unit = match tokens.last() {
        Some(t) if t.parse::<f64>().is_err() => {
            let u = t.to_string();
            tokens.pop();
            Some(u)
        }
        _ => None,
    };
    let values = tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ConfigError::Syntax {
                    line,
                    message: format!("key `{key}`: `{t}` is not a finite number"),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() && unit.is_none() {
        return Err(ConfigError::Syntax {
            line,
            message: format!("key `{key}` has no value"),
        });
    }
    Ok(Entry { values, unit, line })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinary_frequency_is_multiplied_by_two_pi() {
        let doc = ConfigDocument::parse("kappa_over_2pi = 50 MHz\n").unwrap();
        let k = doc.device.require("kappa", Dimension::Frequency).unwrap();
        assert!((k - TAU * 0.05).abs() < 1e-15);
        assert!((k - 0.3142).abs() < 1e-4);
    }

    #[test]
    fn angular_frequency_is_taken_as_printed() {
        let doc = ConfigDocument::parse("omega_m = 1.4 GHz\nm_eff = 2.0 pg").unwrap();
        assert_eq!(doc.device.require("omega_m", Dimension::Frequency).unwrap(), 1.4);
        assert_eq!(doc.device.require("m_eff", Dimension::Mass).unwrap(), 2.0);
    }

    #[test]
    fn coupling_unit() {
        let doc = ConfigDocument::parse("g_coupling = -485 GHz/nm").unwrap();
        let g = doc.device.require("g_coupling", Dimension::Coupling).unwrap();
        assert!((g + 0.485).abs() < 1e-15);
    }

    #[test]
    fn lists_sections_and_comments() {
        let text = "# header\nm_eff = 2 pg # trailing\n[sense]\nmasses = 0, 1.428, 2.857 fg\n";
        let doc = ConfigDocument::parse(text).unwrap();
        let m = doc.section("sense").list("masses", Dimension::Mass).unwrap().unwrap();
        assert_eq!(m.len(), 3);
        assert!((m[1] - 1.428e-3).abs() < 1e-18);
    }

    #[test]
    fn lone_unit_is_empty_list() {
        let doc = ConfigDocument::parse("[steady]\npowers = uW\n").unwrap();
        let p = doc.section("steady").list("powers", Dimension::Power).unwrap().unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn errors_name_the_key() {
        let doc = ConfigDocument::parse("kappa = 50 furlongs").unwrap();
        let err = doc.device.require("kappa", Dimension::Frequency).unwrap_err();
        assert_eq!(err.key(), Some("kappa"));
        assert!(matches!(err, ConfigError::UnknownUnit { .. }));

        let doc = ConfigDocument::parse("kappa = 2 pg").unwrap();
        let err = doc.device.require("kappa", Dimension::Frequency).unwrap_err();
        assert!(matches!(err, ConfigError::WrongDimension { .. }));

        let doc = ConfigDocument::parse("kappa_over_2pi = 2 rad/ns").unwrap();
        assert!(doc.device.require("kappa", Dimension::Frequency).is_err());

        let doc = ConfigDocument::parse("kappa = 1 GHz\nkappa_over_2pi = 1 GHz").unwrap();
        assert!(matches!(
            doc.device.require("kappa", Dimension::Frequency),
            Err(ConfigError::DuplicateKey(_))
        ));

        let doc = ConfigDocument::parse("bogus = 1 GHz").unwrap();
        let err = doc.device.reject_unknown(&["kappa"]).unwrap_err();
        assert_eq!(err.key(), Some("bogus"));
    }

    #[test]
    fn syntax_errors() {
        assert!(ConfigDocument::parse("kappa 50 MHz").is_err());
        assert!(ConfigDocument::parse("[open\n").is_err());
        assert!(ConfigDocument::parse("kappa = \n").is_err());
        assert!(ConfigDocument::parse("a = 1\na = 2").is_err());
        assert!(ConfigDocument::parse("a = nan GHz").is_err());
    }
}
