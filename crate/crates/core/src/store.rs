//! Local attribute store and automatic decryption.
//!
//! The store is a single plaintext JSON file on the local machine. Values
//! are NOT encrypted at rest. A sidecar `<file>.lock` is held with an
//! exclusive advisory lock for as long as an [`AttributeStore`] is open, so
//! two processes cannot write the same store.

use std::fs::{self, File, OpenOptions, TryLockError};
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::normalize;
use crate::scheme::{access, looks_like_text, Guess, ProtectedPost, SchemeError};

pub const STORE_VERSION: u32 = 1;
pub const DEFAULT_AUTO_CAP: usize = 1000;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("store {0} is locked by another process")]
    Locked(PathBuf),
    #[error("store file {path} is corrupt: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("value is empty after normalization")]
    EmptyValue,
    #[error("description must not be empty")]
    EmptyDescription,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredAttribute {
    pub description: String,
    pub value: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
struct StoreFile {
    version: u32,
    entries: Vec<StoredAttribute>,
}

#[derive(Debug)]
pub struct AttributeStore {
    path: PathBuf,
    entries: Vec<StoredAttribute>,
    _lock: File,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

fn lock_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".lock");
    path.with_file_name(name)
}

impl AttributeStore {
    /// Opens (or starts) the store at `path`. A missing file is an empty
    /// store; it is created on the first [`save`](Self::save).
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let lock_file = lock_path(&path);
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_file)
            .map_err(io_err(&lock_file))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => return Err(StoreError::Locked(path)),
            Err(TryLockError::Error(e)) => return Err(io_err(&lock_file)(e)),
        }

        let entries = match fs::read_to_string(&path) {
            Ok(text) => {
                let file: StoreFile =
                    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                        path: path.clone(),
                        reason: e.to_string(),
                    })?;
                if file.version != STORE_VERSION {
                    return Err(StoreError::Corrupt {
                        path,
                        reason: format!("unsupported store version {}", file.version),
                    });
                }
                if file.entries.iter().any(|e| e.value.is_empty()) {
                    return Err(StoreError::Corrupt {
                        path,
                        reason: "entry with empty value".into(),
                    });
                }
                file.entries
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(&path)(e)),
        };
        Ok(AttributeStore {
            path,
            entries,
            _lock: lock,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &[StoredAttribute] {
        &self.entries
    }

    /// Writes the store via a temporary file and rename.
    pub fn save(&self) -> Result<(), StoreError> {
        let file = StoreFile {
            version: STORE_VERSION,
            entries: self.entries.clone(),
        };
        let text = serde_json::to_string_pretty(&file).expect("store serialization is infallible");
        let mut tmp_name = self.path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(".tmp");
        let tmp = self.path.with_file_name(tmp_name);
        fs::write(&tmp, text).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &self.path).map_err(io_err(&self.path))
    }

    /// Adds a pair. Returns `false` when the same pair is already stored.
    pub fn put(&mut self, description: &str, value: &str) -> Result<bool, StoreError> {
        let description = description.trim();
        if description.is_empty() {
            return Err(StoreError::EmptyDescription);
        }
        let value = normalize(value).map_err(|_| StoreError::EmptyValue)?;
        let key = normalize(description).map_err(|_| StoreError::EmptyDescription)?;
        if self
            .entries
            .iter()
            .any(|e| e.value == value && normalize(&e.description).ok().as_deref() == Some(&key))
        {
            return Ok(false);
        }
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.entries.push(StoredAttribute {
            description: description.to_owned(),
            value,
            created_at,
        });
        Ok(true)
    }

    /// Removes entries with a matching description, and matching value
    /// when one is given. Returns how many were removed.
    pub fn delete(&mut self, description: &str, value: Option<&str>) -> usize {
        let Ok(key) = normalize(description) else {
            return 0;
        };
        let value = value.and_then(|v| normalize(v).ok());
        let before = self.entries.len();
        self.entries.retain(|e| {
            let same_desc = normalize(&e.description).ok().as_deref() == Some(&key);
            let same_value = value.as_deref().is_none_or(|v| v == e.value);
            !(same_desc && same_value)
        });
        before - self.entries.len()
    }

    /// Candidate values for each position of `pp`, matched on normalized
    /// description, in store order without duplicates.
    fn candidates(&self, pp: &ProtectedPost) -> Vec<Vec<&str>> {
        pp.descriptions
            .iter()
            .map(|d| {
                let key = normalize(d).ok();
                let mut out: Vec<&str> = Vec::new();
                for e in &self.entries {
                    if normalize(&e.description).ok() == key && !out.contains(&e.value.as_str()) {
                        out.push(&e.value);
                    }
                }
                out
            })
            .collect()
    }
}

/// How an automatic match was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    /// The output passed [`looks_like_text`]. This is a heuristic, not a
    /// proof that the values were right.
    TextHeuristic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AutoOutcome {
    Opened {
        plaintext: Vec<u8>,
        guesses: Vec<Guess>,
        tried: usize,
        confidence: Confidence,
    },
    NoMatch {
        tried: usize,
        /// The cap stopped the search before every combination was tried.
        cap_exceeded: bool,
    },
}

/// Tries stored values against `pp`, subset by subset, until one decrypts
/// to something that looks like text or `cap` combinations were tried.
///
/// Position subsets are visited in lexicographic order; within a subset
/// the candidates vary fastest at the last position.
pub fn auto_access(
    pp: &ProtectedPost,
    store: &AttributeStore,
    cap: usize,
) -> Result<AutoOutcome, SchemeError> {
    pp.validate()?;
    let candidates = store.candidates(pp);
    let (n, t) = (pp.params.n(), pp.params.t());
    let mut tried = 0usize;

    let mut subset: Vec<usize> = (0..t).collect();
    loop {
        if subset.iter().all(|&i| !candidates[i].is_empty()) {
            let mut choice = vec![0usize; t];
            loop {
                if tried == cap {
                    return Ok(AutoOutcome::NoMatch {
                        tried,
                        cap_exceeded: true,
                    });
                }
                tried += 1;
                let guesses: Vec<Guess> = subset
                    .iter()
                    .zip(&choice)
                    .map(|(&pos, &c)| Guess::new(pos + 1, candidates[pos][c]))
                    .collect();
                let plaintext = access(&guesses, pp)?;
                if looks_like_text(&plaintext) {
                    return Ok(AutoOutcome::Opened {
                        plaintext,
                        guesses,
                        tried,
                        confidence: Confidence::TextHeuristic,
                    });
                }
                let limits: Vec<usize> = subset.iter().map(|&i| candidates[i].len()).collect();
                if !next_choice(&mut choice, &limits) {
                    break;
                }
            }
        }
        if !next_subset(&mut subset, n) {
            break;
        }
    }
    Ok(AutoOutcome::NoMatch {
        tried,
        cap_exceeded: false,
    })
}

/// Odometer step over `choice[k] in 0..limits[k]`, last digit fastest.
fn next_choice(choice: &mut [usize], limits: &[usize]) -> bool {
    for k in (0..choice.len()).rev() {
        choice[k] += 1;
        if choice[k] < limits[k] {
            return true;
        }
        choice[k] = 0;
    }
    false
}

/// Advances a sorted index vector to the next k-subset of `0..n` in
/// lexicographic order.
pub(crate) fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
