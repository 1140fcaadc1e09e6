//! Run-directory bookkeeping: resolved configuration and input hashes.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use crate::seeding::fnv1a64;
use crate::{Error, Result};

/// Flat `key=value` configuration echoed into every run directory.
#[derive(Debug, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        let mut config = RunConfig::default();
        config.set("command", command);
        config
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_owned(), value.to_string());
    }

    /// Records the FNV-1a hash of an input file.
    pub fn hash_input(&mut self, key: &str, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(Error::io(path))?;
        self.set(
            &format!("input.{key}"),
            format!("{:#018x}", fnv1a64(&bytes)),
        );
        Ok(())
    }

    /// Writes `config.txt` (sorted keys) into the run directory.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = String::new();
        for (k, v) in &self.entries {
            text.push_str(k);
            text.push('=');
            text.push_str(v);
            text.push('\n');
        }
        write_text(&dir.join("config.txt"), &text)
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(Error::io(path))
}

/// Order-preserving map over `items` on up to `threads` OS threads. Results
/// come back in input order, so threading never changes output bytes.
pub fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let f = &f;
    let mut collected: Vec<Vec<R>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(f).collect::<Vec<R>>()))
            .collect();
        collected = handles.into_iter().map(|h| h.join().unwrap()).collect();
    });
    collected.into_iter().flatten().collect()
}
