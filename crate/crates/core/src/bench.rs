//! Timing harness.
//!
//! Every configuration is run once to warm up and then `runs` times; the
//! report gives mean and sample standard deviation in milliseconds.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use thiserror::Error;

use crate::num::mean_sample_std;
use crate::primitives::{self, sample_master_key, RandomSource};
use crate::scheme::{self, Attribute, Guess, SchemeError};
use crate::shamir::SharingParams;

pub const MIN_RUNS: usize = 30;
pub const DEFAULT_RUNS: usize = 100;
pub const CSV_HEADER: &str = "suite,n,t,size_bytes,mean_ms,stddev_ms,runs";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown suite `{0}` (expected keygen, encdec, access or trial)")]
    UnknownSuite(String),
    #[error("at least {MIN_RUNS} runs are required, got {0}")]
    TooFewRuns(usize),
    #[error("bad scheme `{0}` (expected t-of-n)")]
    BadScheme(String),
    #[error("bad size `{0}`")]
    BadSize(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Master key, sharing and share encryption.
    Keygen,
    /// Post encryption and decryption by size.
    EncDec,
    /// A full legitimate access.
    Access,
    /// One attacker trial: share decryption plus interpolation.
    Trial,
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "keygen" => Ok(Suite::Keygen),
            "encdec" => Ok(Suite::EncDec),
            "access" => Ok(Suite::Access),
            "trial" => Ok(Suite::Trial),
            other => Err(BenchError::UnknownSuite(other.to_owned())),
        }
    }
}

/// One CSV row. `suite` holds the measured operation.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub suite: &'static str,
    pub n: usize,
    pub t: usize,
    pub size_bytes: usize,
    pub mean_ms: f64,
    pub stddev_ms: f64,
    pub runs: usize,
}

impl fmt::Display for BenchRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{:.6},{:.6},{}",
            self.suite, self.n, self.t, self.size_bytes, self.mean_ms, self.stddev_ms, self.runs
        )
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in records {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

/// Parses a comma-separated list like `3-of-4,5-of-20`.
pub fn parse_schemes(list: &str) -> Result<Vec<SharingParams>, BenchError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let bad = || BenchError::BadScheme(item.to_owned());
            let (t, n) = item.split_once("-of-").ok_or_else(bad)?;
            let t: usize = t.parse().map_err(|_| bad())?;
            let n: usize = n.parse().map_err(|_| bad())?;
            SharingParams::new(n, t).map_err(|_| bad())
        })
        .collect()
}

/// Parses sizes such as `1KB,100KB,10MB` (binary multiples) or raw bytes.
pub fn parse_sizes(list: &str) -> Result<Vec<usize>, BenchError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let upper = item.to_ascii_uppercase();
            let (digits, unit) = match upper.find(|c: char| !c.is_ascii_digit()) {
                Some(i) => upper.split_at(i),
                None => (upper.as_str(), ""),
            };
            let scale = match unit {
                "" | "B" => 1,
                "KB" | "K" => 1 << 10,
                "MB" | "M" => 1 << 20,
                _ => return Err(BenchError::BadSize(item.to_owned())),
            };
            match digits.parse::<usize>() {
                Ok(v) if v > 0 => Ok(v * scale),
                _ => Err(BenchError::BadSize(item.to_owned())),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub suite: Suite,
    pub runs: usize,
    pub sizes: Vec<usize>,
    pub schemes: Vec<SharingParams>,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(suite: Suite) -> Self {
        let sizes = match suite {
            Suite::EncDec => vec![1 << 10, 10 << 10, 100 << 10, 1 << 20, 10 << 20],
            Suite::Access => vec![100 << 10],
            Suite::Keygen | Suite::Trial => vec![0],
        };
        let schemes = ["1-of-2", "2-of-4", "3-of-4", "5-of-20"]
            .iter()
            .map(|s| parse_schemes(s).expect("built-in scheme")[0])
            .collect();
        BenchConfig {
            suite,
            runs: DEFAULT_RUNS,
            sizes,
            schemes,
            seed: 0,
        }
    }
}

/// Times `op` once for warm-up and then `runs` times.
pub fn measure<F: FnMut()>(runs: usize, mut op: F) -> (f64, f64) {
    op();
    let samples: Vec<f64> = (0..runs)
        .map(|_| {
            let start = Instant::now();
            op();
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    mean_sample_std(&samples)
}

/// Placeholder attributes for timing; their values never leave this module.
fn attributes(n: usize) -> Vec<Attribute> {
    (0..n)
        .map(|i| Attribute::new(&format!("attribute {}", i + 1), &format!("value {i}")).expect("non-empty"))
        .collect()
}

fn random_bytes(len: usize, rng: &mut RandomSource) -> Vec<u8> {
    let mut buf = vec![0u8; len];
    rng.fill_bytes(&mut buf);
    buf
}

pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    if config.runs < MIN_RUNS {
        return Err(BenchError::TooFewRuns(config.runs));
    }
    let runs = config.runs;
    let mut rng = RandomSource::seeded(config.seed);
    let mut out = Vec::new();
    let record = |suite, n, t, size_bytes, (mean_ms, stddev_ms): (f64, f64)| BenchRecord {
        suite,
        n,
        t,
        size_bytes,
        mean_ms,
        stddev_ms,
        runs,
    };
    match config.suite {
        Suite::Keygen => {
            for p in &config.schemes {
                let attrs = attributes(p.n());
                let stats = measure(runs, || {
                    scheme::protect_key(&attrs, *p, &mut rng).expect("valid parameters");
                });
                out.push(record("keygen", p.n(), p.t(), 0, stats));
            }
        }
        Suite::EncDec => {
            let key = sample_master_key(&mut rng).expect("seeded source");
            for &size in &config.sizes {
                let plain = random_bytes(size, &mut rng);
                let enc = measure(runs, || {
                    primitives::encrypt(&key, &plain, &mut rng);
                });
                out.push(record("encrypt", 0, 0, size, enc));
                let ct = primitives::encrypt(&key, &plain, &mut rng);
                let dec = measure(runs, || {
                    primitives::decrypt(&key, &ct).expect("own ciphertext");
                });
                out.push(record("decrypt", 0, 0, size, dec));
            }
        }
        Suite::Access => {
            for p in &config.schemes {
                let attrs = attributes(p.n());
                let guesses: Vec<Guess> = attrs
                    .iter()
                    .take(p.t())
                    .enumerate()
                    .map(|(i, a)| Guess::new(i + 1, a.value()))
                    .collect();
                for &size in &config.sizes {
                    let post = random_bytes(size.max(1), &mut rng);
                    let pp = scheme::protect(&attrs, &post, *p, &mut rng)?;
                    let stats = measure(runs, || {
                        scheme::access(&guesses, &pp).expect("well-formed post");
                    });
                    out.push(record("access", p.n(), p.t(), size, stats));
                }
            }
        }
        Suite::Trial => {
            for p in &config.schemes {
                let attrs = attributes(p.n());
                let pp = scheme::protect(&attrs, b"x", *p, &mut rng)?;
                let wrong: Vec<Guess> = (1..=p.t()).map(|i| Guess::new(i, "wrong guess")).collect();
                let stats = measure(runs, || {
                    scheme::recover_key(&wrong, &pp).expect("well-formed post");
                });
                out.push(record("trial", p.n(), p.t(), 0, stats));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists() {
        let s = parse_schemes("3-of-4, 5-of-20").unwrap();
        assert_eq!((s[0].t(), s[0].n(), s[1].t(), s[1].n()), (3, 4, 5, 20));
        assert!(parse_schemes("4-of-3").is_err());
        assert!(parse_schemes("three").is_err());
        assert_eq!(parse_sizes("1KB,2mb,17").unwrap(), vec![1024, 2 << 20, 17]);
        assert!(parse_sizes("1GB").is_err());
        assert!(parse_sizes("0").is_err());
        assert!("fast".parse::<Suite>().is_err());
    }

    #[test]
    fn enforces_minimum_runs() {
        let cfg = BenchConfig { runs: 29, ..BenchConfig::new(Suite::Trial) };
        assert!(matches!(run_bench(&cfg), Err(BenchError::TooFewRuns(29))));
    }

    #[test]
    fn records_have_stable_schema() {
        let cfg = BenchConfig {
            runs: 30,
            schemes: parse_schemes("2-of-3").unwrap(),
            sizes: vec![256],
            ..BenchConfig::new(Suite::Access)
        };
        let records = run_bench(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].mean_ms > 0.0);
        let csv = to_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&row[..4], &["access", "3", "2", "256"]);
        assert_eq!(row[6], "30");
    }

    #[test]
    fn encdec_rows_per_size() {
        let cfg = BenchConfig { runs: 30, sizes: vec![16, 4096], ..BenchConfig::new(Suite::EncDec) };
        let labels: Vec<(&str, usize)> = run_bench(&cfg).unwrap().iter().map(|r| (r.suite, r.size_bytes)).collect();
        assert_eq!(labels, vec![("encrypt", 16), ("decrypt", 16), ("encrypt", 4096), ("decrypt", 4096)]);
    }
}
