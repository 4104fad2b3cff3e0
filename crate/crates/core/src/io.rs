//! Output staging. Artifacts are collected in memory, written to temporary
//! files next to their destination, and renamed into place only once every
//! file has been written. A failure before the final renames leaves the
//! output directory untouched.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a file. `name` must be a bare file name; a second file with the
    /// same name replaces the first.
    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) -> Result<()> {
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(Error::InvalidArgument(format!("artifact name {name:?} is not a plain file name")));
        }
        let bytes = bytes.into();
        match self.files.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = bytes,
            None => self.files.push((name.to_string(), bytes)),
        }
        Ok(())
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        bytes.push(b'\n');
        self.add(name, bytes)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes every artifact into `dir`, creating it if needed, and returns
    /// the final paths in insertion order.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        if self.files.is_empty() {
            return Ok(Vec::new());
        }
        std::fs::create_dir_all(dir)?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let mut tmp = NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            staged.push((tmp, dir.join(name)));
        }
        let mut done: Vec<PathBuf> = Vec::with_capacity(staged.len());
        for (tmp, target) in staged {
            if let Err(e) = tmp.persist(&target) {
                // Best effort: do not leave a partial set of outputs behind.
                for p in &done {
                    let _ = std::fs::remove_file(p);
                }
                return Err(Error::Io(e.error));
            }
            done.push(target);
        }
        Ok(done)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested");
        let mut a = Artifacts::new();
        a.add("a.txt", "alpha").unwrap();
        a.add_json("b.json", &serde_json::json!({"x": 1})).unwrap();
        let paths = a.commit(&out).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(std::fs::read_to_string(out.join("a.txt")).unwrap(), "alpha");
        assert_eq!(std::fs::read_to_string(out.join("b.json")).unwrap(), "{\n  \"x\": 1\n}\n");
        let leftovers = std::fs::read_dir(&out).unwrap().count();
        assert_eq!(leftovers, 2);
    }

    #[test]
    fn rejects_path_like_names() {
        let mut a = Artifacts::new();
        assert!(a.add("../x", "").is_err());
        assert!(a.add("d/x", "").is_err());
        assert!(a.add("", "").is_err());
    }

    #[test]
    fn same_name_replaces() {
        let mut a = Artifacts::new();
        a.add("x", "1").unwrap();
        a.add("x", "2").unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.get("x"), Some(&b"2"[..]));
    }

    #[test]
    fn empty_commit_creates_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("never");
        Artifacts::new().commit(&out).unwrap();
        assert!(!out.exists());
    }
}
