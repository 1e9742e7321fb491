//! Norm tables on disk.
//!
//! One CSV per route and degree. Header lines start with `#` and carry
//! `key: value` pairs; a file is reused only when its tool version, config
//! hash, route and degree match and it is marked complete.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use szego_core::measure::BoundaryIntegrator;
use szego_core::szego::NormEntry;
use szego_core::{MultiIndex, NormTable, Route};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn table_path(dir: &Path, route: Route, k: usize) -> PathBuf {
    dir.join(format!("norms_{}_k{k}.csv", route.name()))
}

pub fn render(table: &NormTable, config_hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tool_version: {TOOL_VERSION}");
    let _ = writeln!(out, "# config_hash: {config_hash}");
    let _ = writeln!(out, "# route: {}", table.route().name());
    let _ = writeln!(out, "# k: {}", table.k());
    let _ = writeln!(out, "# complete: {}", table.is_complete());
    for (index, error) in table.failures() {
        let _ = writeln!(out, "# failed {index}: {error}");
    }
    let header: Vec<String> = (0..=table.n()).map(|i| format!("j{i}")).collect();
    let _ = writeln!(out, "{},log_norm,rel_err", header.join(","));
    for (index, entry) in table.entries() {
        let js: Vec<String> = index.as_slice().iter().map(u32::to_string).collect();
        let _ = writeln!(
            out,
            "{},{:e},{:e}",
            js.join(","),
            entry.log_norm,
            entry.rel_err
        );
    }
    out
}

/// Parses a cached table, returning `None` if it is stale, incomplete or
/// malformed.
pub fn parse(text: &str, n: usize, k: usize, route: Route, config_hash: &str) -> Option<NormTable> {
    let mut lines = text.lines();
    let mut header = std::collections::BTreeMap::new();
    let columns = loop {
        let line = lines.next()?;
        match line.strip_prefix('#') {
            Some(meta) => {
                if let Some((key, value)) = meta.trim().split_once(": ") {
                    header.insert(key.to_string(), value.to_string());
                }
            }
            None => break line,
        }
    };
    let expect = |key: &str, value: &str| header.get(key).map(String::as_str) == Some(value);
    if !(expect("tool_version", TOOL_VERSION)
        && expect("config_hash", config_hash)
        && expect("route", route.name())
        && expect("k", &k.to_string())
        && expect("complete", "true"))
    {
        return None;
    }
    if columns.split(',').count() != n + 3 {
        return None;
    }
    let mut table = NormTable::empty(n, k, route);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 3 {
            return None;
        }
        let index = fields[..=n]
            .iter()
            .map(|f| f.parse::<u32>().ok())
            .collect::<Option<Vec<_>>>()?;
        let entry = NormEntry {
            log_norm: fields[n + 1].parse().ok()?,
            rel_err: fields[n + 2].parse().ok()?,
        };
        table.insert(MultiIndex::new(index), entry).ok()?;
    }
    table.is_complete().then_some(table)
}

/// Where a table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Cache,
    Computed,
}

/// Loads the table for `(route, k)` from `dir` or computes and stores it.
pub fn load_or_compute(
    dir: &Path,
    integrator: &BoundaryIntegrator<'_>,
    k: usize,
    config_hash: &str,
) -> Result<(NormTable, Source), szego_core::Error> {
    let route = integrator.route();
    let n = integrator.domain().n();
    let path = table_path(dir, route, k);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Some(table) = parse(&text, n, k, route, config_hash) {
            return Ok((table, Source::Cache));
        }
    }
    let table = NormTable::compute(integrator, k)?;
    fs::write(&path, render(&table, config_hash)).map_err(|e| {
        szego_core::Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))
    })?;
    Ok((table, Source::Computed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> NormTable {
        let mut t = NormTable::empty(1, 2, Route::Boundary);
        for (j, v) in [([2, 0], -1.25), ([1, 1], 0.1 + 0.2), ([0, 2], 1e-300)] {
            t.insert(
                MultiIndex::new(j.to_vec()),
                NormEntry {
                    log_norm: v,
                    rel_err: 3.5e-14,
                },
            )
            .unwrap();
        }
        t
    }

    #[test]
    fn round_trip_is_exact() {
        let t = sample();
        let text = render(&t, "abc");
        assert!(text.starts_with("# tool_version"));
        assert_eq!(parse(&text, 1, 2, Route::Boundary, "abc"), Some(t));
    }

    #[test]
    fn stale_files_are_ignored() {
        let text = render(&sample(), "abc");
        assert!(parse(&text, 1, 2, Route::Boundary, "abd").is_none());
        assert!(parse(&text, 1, 2, Route::Projective, "abc").is_none());
        assert!(parse(&text, 1, 3, Route::Boundary, "abc").is_none());
        let partial: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
        assert!(parse(&partial, 1, 2, Route::Boundary, "abc").is_none());
        let marked = text.replace("complete: true", "complete: false");
        assert!(parse(&marked, 1, 2, Route::Boundary, "abc").is_none());
    }
}
