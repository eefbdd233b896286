//! `key = value` run configuration.
//!
//! Every lookup marks its key as consumed; [`RunConfig::finish`] then rejects
//! whatever was never asked for, so a typo fails before any work starts.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug)]
pub struct RunConfig {
    entries: BTreeMap<String, (usize, String)>,
    used: RefCell<BTreeSet<String>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", i + 1))?;
            let k = k.trim();
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                bail!("line {}: bad key `{k}`", i + 1);
            }
            if entries.insert(k.to_string(), (i + 1, v.trim().to_string())).is_some() {
                bail!("line {}: duplicate key `{k}`", i + 1);
            }
        }
        Ok(Self { entries, used: RefCell::new(BTreeSet::new()) })
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key)
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.raw(key).map(|(_, v)| v.clone())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("line {line}: key `{key}`: cannot parse `{v}`: {e}")),
        }
    }

    pub fn f64(&self, key: &str, default: f64, range: RangeInclusive<f64>) -> Result<f64> {
        let v = self.parsed::<f64>(key)?.unwrap_or(default);
        check_f64(key, v, &range)?;
        Ok(v)
    }

    pub fn opt_f64(&self, key: &str, range: RangeInclusive<f64>) -> Result<Option<f64>> {
        let v = self.parsed::<f64>(key)?;
        if let Some(x) = v {
            check_f64(key, x, &range)?;
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str, default: usize, range: RangeInclusive<usize>) -> Result<usize> {
        let v = self.parsed::<usize>(key)?.unwrap_or(default);
        if !range.contains(&v) {
            bail!("key `{key}`: {v} outside [{}, {}]", range.start(), range.end());
        }
        Ok(v)
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.parsed::<u64>(key)?.unwrap_or(default))
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        Ok(self.parsed::<bool>(key)?.unwrap_or(default))
    }

    pub fn choice<'a>(&self, key: &str, default: &'a str, allowed: &[&'a str]) -> Result<&'a str> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => allowed
                .iter()
                .find(|a| **a == v.as_str())
                .copied()
                .ok_or_else(|| anyhow!("line {line}: key `{key}`: `{v}` is not one of {allowed:?}")),
        }
    }

    /// Comma-separated floats, each range-checked.
    pub fn f64_list(&self, key: &str, default: &[f64], range: RangeInclusive<f64>) -> Result<Vec<f64>> {
        let vals = match self.raw(key) {
            None => default.to_vec(),
            Some((line, v)) => split_floats(v).with_context(|| format!("line {line}: key `{key}`"))?,
        };
        for x in &vals {
            check_f64(key, *x, &range)?;
        }
        Ok(vals)
    }

    pub fn usize_list(&self, key: &str, default: &[usize], range: RangeInclusive<usize>) -> Result<Vec<usize>> {
        let vals = match self.raw(key) {
            None => default.to_vec(),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| anyhow!("line {line}: key `{key}`: {e}"))?,
        };
        if let Some(x) = vals.iter().find(|x| !range.contains(x)) {
            bail!("key `{key}`: {x} outside [{}, {}]", range.start(), range.end());
        }
        Ok(vals)
    }

    /// Points written as `x,y,z; x,y,z; ...`.
    pub fn points(&self, key: &str, range: RangeInclusive<f64>) -> Result<Vec<[f64; 3]>> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(Vec::new());
        };
        v.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                let xs = split_floats(s).with_context(|| format!("line {line}: key `{key}`"))?;
                if xs.len() != 3 {
                    bail!("line {line}: key `{key}`: point `{s}` needs 3 coordinates");
                }
                for x in &xs {
                    check_f64(key, *x, &range)?;
                }
                Ok([xs[0], xs[1], xs[2]])
            })
            .collect()
    }

    /// Errors on the first key nobody asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        if let Some((k, (line, _))) = self.entries.iter().find(|(k, _)| !used.contains(*k)) {
            bail!("line {line}: unknown key `{k}`");
        }
        Ok(())
    }
}

fn split_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("cannot parse `{}`: {e}", t.trim())))
        .collect()
}

fn check_f64(key: &str, v: f64, range: &RangeInclusive<f64>) -> Result<()> {
    if !v.is_finite() || !range.contains(&v) {
        bail!("key `{key}`: {v} outside [{}, {}]", range.start(), range.end());
    }
    Ok(())
}
