//! Run configuration: `key = value` files with `[section]` headers, overridden by flags.

use std::fmt::Write as _;
use std::path::PathBuf;

use modenergy::fourier::BUILTIN_FIELDS;
use modenergy::{builtin_scheme, Complex64, InitialData, PotentialSpec, Scheme, SpikeCriteria};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Potential in the config: a built-in name or `n:re:im` pairs for `n >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialChoice {
    Named(String),
    HalfSpectrum(Vec<(i64, Complex64)>),
}

impl PotentialChoice {
    pub fn resolve(&self) -> modenergy::Result<PotentialSpec> {
        match self {
            PotentialChoice::Named(name) => PotentialSpec::builtin(name),
            PotentialChoice::HalfSpectrum(pairs) => PotentialSpec::from_half_spectrum(pairs.iter().copied()),
        }
    }

    fn render(&self) -> String {
        match self {
            PotentialChoice::Named(name) => name.clone(),
            PotentialChoice::HalfSpectrum(pairs) => render_pairs(pairs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: String,
    pub stages: Option<String>,
    pub order: u32,
    pub cutoff: usize,
    pub h: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub h_count: usize,
    pub final_time: f64,
    pub band: usize,
    pub truncation: usize,
    pub potential: PotentialChoice,
    pub initial: InitialData,
    pub spike_factor: f64,
    pub flat_factor: f64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: "lie-midpoint".into(),
            stages: None,
            order: 1,
            cutoff: 64,
            h: 0.01,
            h_min: 0.01,
            h_max: 0.1,
            h_count: 200,
            final_time: 50.0,
            band: 20,
            truncation: 4,
            potential: PotentialChoice::Named("paper-V".into()),
            initial: InitialData::Named("paper-u0".into()),
            spike_factor: 10.0,
            flat_factor: 5.0,
            out: None,
            threads: None,
        }
    }
}

const KEYS: &[(&str, &str)] = &[
    ("run", "scheme"),
    ("run", "K"),
    ("run", "h"),
    ("run", "T"),
    ("run", "band"),
    ("run", "L"),
    ("scheme", "stages"),
    ("scheme", "order"),
    ("sweep", "h_min"),
    ("sweep", "h_max"),
    ("sweep", "h_count"),
    ("sweep", "spike_factor"),
    ("sweep", "flat_factor"),
    ("data", "potential"),
    ("data", "initial"),
    ("output", "out"),
    ("output", "threads"),
];

fn unquote(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

fn value_error(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn parse_number<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| value_error(key, e))
}

fn parse_pairs(key: &str, raw: &str) -> Result<Vec<(i64, Complex64)>, ConfigError> {
    raw.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(value_error(key, format!("expected n:re:im, got `{}`", item.trim())));
            }
            Ok((
                parse_number(key, parts[0])?,
                Complex64::new(parse_number(key, parts[1])?, parse_number(key, parts[2])?),
            ))
        })
        .collect()
}

fn render_pairs(pairs: &[(i64, Complex64)]) -> String {
    pairs
        .iter()
        .map(|(n, c)| format!("{n}:{:?}:{:?}", c.re, c.im))
        .collect::<Vec<_>>()
        .join(", ")
}

fn looks_like_pairs(raw: &str) -> bool {
    raw.contains(':')
}

impl RunConfig {
    /// Sets one `section.key`; keys outside any section belong to `run`.
    pub fn set(&mut self, section: &str, key: &str, raw: &str) -> Result<(), ConfigError> {
        let section = if section.is_empty() {
            KEYS.iter().find(|(_, k)| *k == key).map(|(s, _)| *s).unwrap_or("run")
        } else {
            section
        };
        if !KEYS.contains(&(section, key)) {
            return Err(ConfigError::UnknownKey(format!("{section}.{key}")));
        }
        let raw = unquote(raw);
        match key {
            "scheme" => self.scheme = raw.to_string(),
            "K" => self.cutoff = parse_number(key, raw)?,
            "h" => self.h = parse_number(key, raw)?,
            "T" => self.final_time = parse_number(key, raw)?,
            "band" => self.band = parse_number(key, raw)?,
            "L" => self.truncation = parse_number(key, raw)?,
            "stages" => self.stages = if raw.is_empty() { None } else { Some(raw.to_string()) },
            "order" => self.order = parse_number(key, raw)?,
            "h_min" => self.h_min = parse_number(key, raw)?,
            "h_max" => self.h_max = parse_number(key, raw)?,
            "h_count" => self.h_count = parse_number(key, raw)?,
            "spike_factor" => self.spike_factor = parse_number(key, raw)?,
            "flat_factor" => self.flat_factor = parse_number(key, raw)?,
            "potential" => {
                self.potential = if looks_like_pairs(raw) {
                    PotentialChoice::HalfSpectrum(parse_pairs(key, raw)?)
                } else {
                    PotentialChoice::Named(raw.to_string())
                }
            }
            "initial" => {
                self.initial = if looks_like_pairs(raw) {
                    InitialData::Coefficients(parse_pairs(key, raw)?)
                } else {
                    InitialData::Named(raw.to_string())
                }
            }
            "out" => self.out = if raw.is_empty() { None } else { Some(PathBuf::from(raw)) },
            "threads" => {
                self.threads = if raw.is_empty() {
                    None
                } else {
                    Some(parse_number(key, raw)?)
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section = String::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or(ConfigError::Syntax {
                    line: idx + 1,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                if !KEYS.iter().any(|(s, _)| *s == section) {
                    return Err(ConfigError::Syntax {
                        line: idx + 1,
                        message: format!("unknown section `{section}`"),
                    });
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: idx + 1,
                message: "expected key = value".into(),
            })?;
            self.set(&section, key.trim(), value)?;
        }
        Ok(())
    }

    #[cfg(test)]
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        config.apply_text(text)?;
        Ok(config)
    }

    /// The config in file syntax; parsing the result gives back `self`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[run]");
        let _ = writeln!(out, "scheme = {}", self.scheme);
        let _ = writeln!(out, "K = {}", self.cutoff);
        let _ = writeln!(out, "h = {:?}", self.h);
        let _ = writeln!(out, "T = {:?}", self.final_time);
        let _ = writeln!(out, "band = {}", self.band);
        let _ = writeln!(out, "L = {}", self.truncation);
        let _ = writeln!(out, "\n[scheme]");
        let _ = writeln!(out, "stages = \"{}\"", self.stages.as_deref().unwrap_or(""));
        let _ = writeln!(out, "order = {}", self.order);
        let _ = writeln!(out, "\n[sweep]");
        let _ = writeln!(out, "h_min = {:?}", self.h_min);
        let _ = writeln!(out, "h_max = {:?}", self.h_max);
        let _ = writeln!(out, "h_count = {}", self.h_count);
        let _ = writeln!(out, "spike_factor = {:?}", self.spike_factor);
        let _ = writeln!(out, "flat_factor = {:?}", self.flat_factor);
        let _ = writeln!(out, "\n[data]");
        let _ = writeln!(out, "potential = \"{}\"", self.potential.render());
        let initial = match &self.initial {
            InitialData::Named(name) => name.clone(),
            InitialData::Coefficients(pairs) => render_pairs(pairs),
        };
        let _ = writeln!(out, "initial = \"{initial}\"");
        let _ = writeln!(out, "\n[output]");
        let out_path = self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let _ = writeln!(out, "out = \"{out_path}\"");
        let threads = self.threads.map(|t| t.to_string()).unwrap_or_default();
        let _ = writeln!(out, "threads = {threads}");
        out
    }

    /// The custom stage list if given, else the named built-in.
    pub fn resolve_scheme(&self) -> Result<Scheme, ConfigError> {
        match &self.stages {
            Some(stages) => Scheme::parse(self.scheme.clone(), stages, self.order),
            None => builtin_scheme(&self.scheme),
        }
        .map_err(|e| value_error(if self.stages.is_some() { "stages" } else { "scheme" }, e))
    }

    pub fn criteria(&self) -> SpikeCriteria {
        SpikeCriteria {
            spike_factor: self.spike_factor,
            flat_factor: self.flat_factor,
        }
    }

    /// Checks everything that does not depend on the command.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(value_error(key, format!("must be positive, got {x:?}")))
            }
        };
        positive("h", self.h)?;
        positive("h_min", self.h_min)?;
        positive("h_max", self.h_max)?;
        positive("spike_factor", self.spike_factor)?;
        positive("flat_factor", self.flat_factor)?;
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(value_error("T", "must be non-negative"));
        }
        if self.h_max < self.h_min {
            return Err(ConfigError::Invalid(format!(
                "h_max {:?} is below h_min {:?}",
                self.h_max, self.h_min
            )));
        }
        if self.cutoff == 0 {
            return Err(value_error("K", "must be at least 1"));
        }
        if self.band > self.cutoff {
            return Err(ConfigError::Invalid(format!(
                "band {} exceeds K {}",
                self.band, self.cutoff
            )));
        }
        if self.threads == Some(0) {
            return Err(value_error("threads", "must be at least 1"));
        }
        if let InitialData::Named(name) = &self.initial {
            if !BUILTIN_FIELDS.contains(&name.as_str()) {
                return Err(value_error("initial", format!("unknown field `{name}`")));
            }
        }
        self.potential.resolve().map_err(|e| value_error("potential", e))?;
        self.resolve_scheme()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_bare_keys() {
        let c = RunConfig::from_text(
            "# comment\nK = 16\n[run]\nh = 0.05\n[sweep]\nh_count = 7\n[scheme]\nstages = \"P:0.5, R:1.0, P:0.5\"\norder = 2\n",
        )
        .unwrap();
        assert_eq!(c.cutoff, 16);
        assert_eq!(c.h, 0.05);
        assert_eq!(c.h_count, 7);
        assert_eq!(c.resolve_scheme().unwrap().declared_order(), 2);
    }

    #[test]
    fn rejects_misplaced_and_unknown_keys() {
        assert!(matches!(
            RunConfig::from_text("[sweep]\nK = 3"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            RunConfig::from_text("nope = 3"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            RunConfig::from_text("[bogus]"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(RunConfig::from_text("K 3"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(RunConfig::from_text("K = x"), Err(ConfigError::Value { .. })));
    }

    #[test]
    fn dump_round_trips() {
        let c = RunConfig {
            h: 0.1 + 0.2,
            stages: Some("R:0.5, P:1.0, R:0.5".into()),
            potential: PotentialChoice::HalfSpectrum(vec![
                (0, Complex64::new(1.5, 0.0)),
                (3, Complex64::new(0.25, -0.1)),
            ]),
            initial: InitialData::Coefficients(vec![(-2, Complex64::new(1.0, 1.0))]),
            out: Some("out dir/run.csv".into()),
            threads: Some(3),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_text(&c.dump()).unwrap(), c);
        assert_eq!(
            RunConfig::from_text(&RunConfig::default().dump()).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn validation_catches_bad_values() {
        let check = |text: &str| RunConfig::from_text(text).unwrap().validate();
        assert!(check("").is_ok());
        assert!(check("h = 0").is_err());
        assert!(check("band = 65").is_err());
        assert!(check("scheme = nope").is_err());
        assert!(check("[scheme]\nstages = \"P:0.5, R:0.9, P:0.5\"").is_err());
        assert!(check("[data]\npotential = \"0:1:1\"").is_err());
        assert!(check("[data]\ninitial = nope").is_err());
        assert!(check("[output]\nthreads = 0").is_err());
        assert!(check("[sweep]\nh_min = 0.2").is_err());
    }
}
