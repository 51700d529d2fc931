//! Flat `key = value` configuration with `[section]` headers.
//!
//! Every key must be known to the scenario; unknown sections and keys are
//! rejected so a typo cannot silently fall back to a default.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::CliError;

/// Keys accepted in each section.
const SCHEMA: &[(&str, &[&str])] = &[
    ("model", &["a", "b", "b0", "d", "v_r", "v_f"]),
    ("grid", &["n_cells", "v_min", "n_guess"]),
    (
        "time",
        &[
            "dt",
            "t_end",
            "snapshot_every",
            "series_every",
            "blow_up_threshold",
            "max_steps",
        ],
    ),
    ("initial", &["family", "mean", "sd", "file"]),
    ("history", &["kind", "value", "file"]),
    ("output", &["dir", "seed"]),
    (
        "tolerances",
        &["slope", "supersolution", "periodicity_factor"],
    ),
    (
        "steady",
        &["n_min", "n_max", "n_scan", "hold_time", "hold_every"],
    ),
    (
        "stefan",
        &["step", "window", "profile_points", "tol", "max_iter"],
    ),
    ("entropy", &["warmup", "reference", "refine", "relax_tol"]),
    ("periodicity", &["periods"]),
    (
        "particle",
        &[
            "n_neurons",
            "dt",
            "bandwidth",
            "bins",
            "burn_in",
            "batches",
            "log_spikes",
        ],
    ),
    (
        "supersolution",
        &["b_values", "n0_max_values", "envelope_check"],
    ),
];

/// Parsed configuration with typed lookups.
#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<(String, String), String>,
    /// Directory of the config file, for relative table paths.
    base: PathBuf,
    /// The file as read, copied next to the outputs.
    pub text: String,
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text)
            .map_err(|e| CliError::Validation(format!("config does not parse: {e}")))?;
        let mut values = BTreeMap::new();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(CliError::Validation(format!("key {k:?} outside a section")));
                }
                continue;
            };
            let keys = SCHEMA
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, k)| *k)
                .ok_or_else(|| CliError::Validation(format!("unknown section [{section}]")))?;
            for (k, v) in props.iter() {
                if !keys.contains(&k) {
                    return Err(CliError::Validation(format!(
                        "unknown key {k:?} in [{section}]"
                    )));
                }
                let slot = (section.to_string(), k.to_string());
                if values.insert(slot, v.trim().to_string()).is_some() {
                    return Err(CliError::Validation(format!(
                        "key {k:?} repeated in [{section}]"
                    )));
                }
            }
        }
        Ok(Self {
            values,
            base,
            text: text.to_string(),
        })
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
    }

    pub fn has(&self, section: &str, key: &str) -> bool {
        self.raw(section, key).is_some()
    }

    /// Sections present in the file.
    pub fn sections(&self) -> BTreeSet<&str> {
        self.values.keys().map(|(s, _)| s.as_str()).collect()
    }

    pub fn f64_opt(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(section, key)
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        CliError::Validation(format!(
                            "[{section}] {key} = {s:?} is not a finite number"
                        ))
                    })
            })
            .transpose()
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64_opt(section, key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(s) => parse_count(s).ok_or_else(|| {
                CliError::Validation(format!("[{section}] {key} = {s:?} is not a count"))
            }),
        }
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64, CliError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(s) => s.parse::<u64>().map_err(|_| {
                CliError::Validation(format!(
                    "[{section}] {key} = {s:?} is not an unsigned integer"
                ))
            }),
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool, CliError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(s) => Err(CliError::Validation(format!(
                "[{section}] {key} = {s:?} is not true or false"
            ))),
        }
    }

    pub fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.raw(section, key).unwrap_or(default)
    }

    /// A list `x1, x2, ...` or a range `start:stop:step` (inclusive of `stop`).
    pub fn list_or(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(section, key) {
            None => Ok(default.to_vec()),
            Some(s) => parse_list(s).ok_or_else(|| {
                CliError::Validation(format!("[{section}] {key} = {s:?} is not a list or range"))
            }),
        }
    }

    /// A path relative to the config file; it must exist.
    pub fn file(&self, section: &str, key: &str) -> Result<PathBuf, CliError> {
        let name = self
            .raw(section, key)
            .ok_or_else(|| CliError::Validation(format!("[{section}] {key} is required")))?;
        let path = self.base.join(name);
        if !path.is_file() {
            return Err(CliError::Validation(format!(
                "file {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }
}

/// Accepts `1000` and `1e5`-style integers.
fn parse_count(s: &str) -> Option<usize> {
    if let Ok(k) = s.parse::<usize>() {
        return Some(k);
    }
    let x = s.parse::<f64>().ok()?;
    (x >= 0.0 && x.fract() == 0.0 && x <= 1e15).then_some(x as usize)
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    let num = |t: &str| t.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0 && stop >= start) {
            return None;
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Some((0..=count).map(|k| start + k as f64 * step).collect());
    }
    if parts.len() != 1 {
        return None;
    }
    let items: Option<Vec<f64>> = s.split(',').map(num).collect();
    items.filter(|v| !v.is_empty())
}

/// Reads a two-column CSV table with a header row.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || CliError::Validation(format!("{}: bad row {}", path.display(), i + 1));
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        xs.push(a.trim().parse::<f64>().map_err(|_| bad())?);
        ys.push(b.trim().parse::<f64>().map_err(|_| bad())?);
    }
    if xs.len() < 2 {
        return Err(CliError::Validation(format!(
            "{} has fewer than two rows",
            path.display()
        )));
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config, CliError> {
        Config::parse(text, PathBuf::new())
    }

    #[test]
    fn typed_lookups_with_defaults() {
        let c = parse("[model]\nb = -0.5\nd=0.2\n[grid]\nn_cells = 1e3\n").unwrap();
        assert_eq!(c.f64_or("model", "b", 0.0).unwrap(), -0.5);
        assert_eq!(c.f64_or("model", "a", 1.0).unwrap(), 1.0);
        assert_eq!(c.usize_or("grid", "n_cells", 10).unwrap(), 1000);
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        assert!(parse("[model]\nbb = 1\n").is_err());
        assert!(parse("[modle]\nb = 1\n").is_err());
        assert!(parse("b = 1\n").is_err());
        assert!(parse("[model]\nb = one\n")
            .unwrap()
            .f64_or("model", "b", 0.0)
            .is_err());
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("0.5:2:0.5").unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_list("1, 2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert!(parse_list("1:0:1").is_none());
        assert!(parse_list("1,,2").is_none());
    }

    #[test]
    fn missing_table_file_is_a_validation_error() {
        let c = parse("[initial]\nfamily = table\nfile = nope.csv\n").unwrap();
        assert!(matches!(
            c.file("initial", "file"),
            Err(CliError::Validation(_))
        ));
    }
}
