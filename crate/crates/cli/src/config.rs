//! `key = value` configuration files and the flag > file > default merge.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every key a configuration file may set.
pub const KEYS: &[&str] = &[
    "label",
    "seed",
    "jobs",
    "clv",
    "offer_cost",
    "contact_cost",
    "alpha",
    "beta",
    "gamma",
    "population",
    "lambda",
    "operator_probs",
    "min_iterations",
    "max_iterations",
    "convergence_window",
    "elite_fraction",
    "min_internal",
    "min_leaf",
    "max_depth",
    "max_leaves",
    "grid",
    "grid_min",
    "grid_max",
    "grid_count",
];

/// Parsed configuration file. Keys may use `-` or `_`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!(
                    "config line {}: expected `key = value`",
                    i + 1
                )));
            };
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!("config line {}: unknown key `{key}`", i + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::usage(format!("config line {}: `{key}` set twice", i + 1)));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `flag` if given, else the file's value for `key`, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        debug_assert!(KEYS.contains(&key), "{key}");
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::usage(format!("config key `{key}`: cannot parse `{v}`"))),
        }
    }
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("not a number: `{}`", v.trim())))
        })
        .collect()
}

/// A `f64` list flag, usable with clap's `value_parser`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberList(pub Vec<f64>);

impl FromStr for NumberList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_list(s).map(NumberList).map_err(|e| e.message)
    }
}

impl std::fmt::Display for NumberList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_keys_comments_and_dashes() {
        let c = ConfigFile::parse("# run\nclv = 300\nmin-leaf=10  # case study\n\nlabel = churn\n").unwrap();
        assert_eq!(c.get("clv"), Some("300"));
        assert_eq!(c.get("min_leaf"), Some("10"));
        assert_eq!(c.get("label"), Some("churn"));
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!(ConfigFile::parse("colour = blue\n")
            .unwrap_err()
            .message
            .contains("unknown key"));
        assert!(ConfigFile::parse("clv = 1\nclv = 2\n").is_err());
        assert!(ConfigFile::parse("clv 200\n").is_err());
    }

    #[test]
    fn flag_beats_file() {
        let c = ConfigFile::parse("lambda = 0.5\n").unwrap();
        assert_eq!(c.pick(Some(0.1), "lambda").unwrap(), Some(0.1));
        assert_eq!(c.pick::<f64>(None, "lambda").unwrap(), Some(0.5));
        assert_eq!(c.pick::<f64>(None, "clv").unwrap(), None);
        let bad = ConfigFile::parse("lambda = lots\n").unwrap();
        assert!(bad.pick::<f64>(None, "lambda").is_err());
    }

    #[test]
    fn number_lists() {
        assert_eq!("0.2, 0.2,0.6".parse::<NumberList>().unwrap().0, vec![0.2, 0.2, 0.6]);
        assert!("0.2,x".parse::<NumberList>().is_err());
        assert_eq!(NumberList(vec![0.01, 1000.0]).to_string(), "0.01,1000");
    }

    proptest! {
        #[test]
        fn number_list_round_trips(v in prop::collection::vec(-1e6f64..1e6, 1..12)) {
            let back: NumberList = NumberList(v.clone()).to_string().parse().unwrap();
            prop_assert_eq!(back.0, v);
        }
    }
}
