//! `key = value` configuration files.
//!
//! Keys are the long flag names without the leading dashes; `_` and `-` are
//! interchangeable. Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (usize, String)>,
    name: String,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-").to_ascii_lowercase()
}

impl ConfigFile {
    pub fn parse(text: &str, name: &str, allowed: &[&str]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("{name}:{line_no}: expected `key = value`");
            };
            let key = normalize(k);
            if !allowed.contains(&key.as_str()) {
                bail!("{name}:{line_no}: unknown key `{key}`");
            }
            let value = v.trim().trim_matches('"').to_string();
            if entries.insert(key.clone(), (line_no, value)).is_some() {
                bail!("{name}:{line_no}: `{key}` set twice");
            }
        }
        Ok(ConfigFile {
            entries,
            name: name.to_string(),
        })
    }

    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text, &path.display().to_string(), allowed)
    }

    /// The typed value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("{}:{line}: bad value for `{key}`: {e}", self.name)),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }
}

/// Flag (or environment) value, then config file, then default.
pub fn pick<T: FromStr>(flag: Option<T>, file: Option<&ConfigFile>, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(f) = file {
        if let Some(v) = f.get(key)? {
            return Ok(v);
        }
    }
    Ok(default)
}

/// Comma-separated list; empty text is an empty list.
pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_types_values() {
        let f = ConfigFile::parse("# c\nseed = 7\n\nmin_sector = 12\nmethod=\"both\"\n", "x", &["seed", "min-sector", "method"])
            .unwrap();
        assert_eq!(f.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(f.get::<usize>("min-sector").unwrap(), Some(12));
        assert_eq!(f.raw("method"), Some("both"));
        assert_eq!(f.get::<u64>("replicates").unwrap(), None);
    }

    #[test]
    fn errors_name_the_line() {
        let err = ConfigFile::parse("seed = 1\nbogus = 2\n", "run.conf", &["seed"]).unwrap_err();
        assert!(err.to_string().starts_with("run.conf:2:"), "{err}");
        let f = ConfigFile::parse("seed = x\n", "run.conf", &["seed"]).unwrap();
        assert!(f.get::<u64>("seed").unwrap_err().to_string().contains("run.conf:1"));
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let f = ConfigFile::parse("seed = 7\n", "x", &["seed"]).unwrap();
        assert_eq!(pick(Some(3u64), Some(&f), "seed", 1).unwrap(), 3);
        assert_eq!(pick(None, Some(&f), "seed", 1u64).unwrap(), 7);
        assert_eq!(pick(None, None, "seed", 1u64).unwrap(), 1);
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<u32>("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_list::<u32>("").unwrap().is_empty());
        assert!(parse_list::<u32>("1,x").is_err());
    }
}
