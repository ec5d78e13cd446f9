//! `pka`: protect posts with attribute values, open them, manage the local
//! attribute store, and run attack evaluations and benchmarks.

mod tty;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pka::attack::{
    self, read_targets_csv, run_attack, AttackConfig, AttackError, CheckMode, FrequencyTable,
};
use pka::bench::{self, BenchConfig, BenchError, Suite};
use pka::envelope::{self, EnvelopeError};
use pka::scheme::SchemeError;
use pka::store::{auto_access, AttributeStore, AutoOutcome, StoreError, DEFAULT_AUTO_CAP};
use pka::{access, looks_like_text, protect, Attribute, Guess, RandomSource, SharingParams};

const EXIT_USAGE: u8 = 2;
const EXIT_PARAMS: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_MALFORMED: u8 = 5;
const EXIT_CORPUS: u8 = 6;
const EXIT_NO_MATCH: u8 = 7;

#[derive(Parser)]
#[command(name = "pka", version, about = "Partial knowledge-based access control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encrypt a post so that any `t` of the given attribute values open it.
    Protect(ProtectArgs),
    /// Decrypt a protected post.
    Access(AccessArgs),
    /// Manage the local attribute store.
    #[command(subcommand)]
    Attrs(AttrsCommand),
    /// Run a dictionary attack against a corpus of target profiles.
    Attack(AttackArgs),
    /// Time the scheme's operations.
    Bench(BenchArgs),
    /// Generate a synthetic Zipf corpus for `attack`.
    Synth(SynthArgs),
}

#[derive(Args)]
struct StoreArg {
    /// Attribute store file.
    #[arg(long, env = "PKA_STORE")]
    store: Option<PathBuf>,
}

impl StoreArg {
    fn path(&self) -> Result<PathBuf, Failure> {
        if let Some(p) = &self.store {
            return Ok(p.clone());
        }
        std::env::var_os("HOME")
            .map(|home| Path::new(&home).join(".pka").join("attributes.json"))
            .ok_or_else(|| Failure::new(EXIT_USAGE, "no --store given, PKA_STORE unset and HOME unknown"))
    }

    fn open(&self) -> Result<AttributeStore, Failure> {
        AttributeStore::open(self.path()?).map_err(Failure::from)
    }
}

#[derive(Args)]
struct ProtectArgs {
    /// `Description=Value`, repeatable; order is significant. A bare
    /// `Description` takes its value from the attribute store.
    #[arg(long = "attr", required = true)]
    attrs: Vec<String>,
    /// Number of correct values needed to open the post.
    #[arg(long, short = 't')]
    threshold: usize,
    /// Post to protect (`-` for stdin).
    #[arg(long = "in", default_value = "-")]
    input: String,
    /// Envelope output (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: String,
    #[command(flatten)]
    store: StoreArg,
    /// Deterministic randomness, for testing only.
    #[arg(long, hide = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AccessArgs {
    /// Envelope to open (`-` for stdin).
    #[arg(long = "in", default_value = "-")]
    input: String,
    /// Decrypted output (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: String,
    /// `Index=Value` with a 1-based attribute index, repeatable.
    #[arg(long = "value", conflicts_with_all = ["interactive", "auto"])]
    values: Vec<String>,
    /// Prompt for values without echo.
    #[arg(long, conflicts_with = "auto")]
    interactive: bool,
    /// Try combinations of stored values.
    #[arg(long)]
    auto: bool,
    /// Maximum combinations tried by --auto.
    #[arg(long, default_value_t = DEFAULT_AUTO_CAP)]
    cap: usize,
    #[command(flatten)]
    store: StoreArg,
}

#[derive(Subcommand)]
enum AttrsCommand {
    /// Store a value; it is read from stdin when omitted.
    Add {
        description: String,
        value: Option<String>,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Show stored attributes with masked values.
    List {
        #[arg(long)]
        reveal: bool,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Remove values of a description (all of them when no value is given).
    Rm {
        description: String,
        value: Option<String>,
        #[command(flatten)]
        store: StoreArg,
    },
}

#[derive(Args)]
struct AttackArgs {
    /// Basis distribution: CSV `description,value,count` or JSON.
    #[arg(long)]
    basis: PathBuf,
    /// Target profiles: CSV `profile_id,description,value`.
    #[arg(long)]
    targets: PathBuf,
    #[arg(long, short = 't')]
    threshold: usize,
    /// Maximum number of guesses per target.
    #[arg(long)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Receives `report.json` and `payoff.csv`.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Check guesses by actually decrypting instead of comparing values.
    #[arg(long)]
    real_crypto: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// keygen, encdec, access or trial.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = bench::DEFAULT_RUNS)]
    runs: usize,
    /// Comma-separated sizes such as `1KB,1MB,10MB`.
    #[arg(long)]
    sizes: Option<String>,
    /// Comma-separated `t-of-n` schemes.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    /// Attributes as `name:values`, comma-separated.
    #[arg(long, default_value = "first name:40,last name:60,town:25,school:30")]
    attrs: String,
    #[arg(long, default_value_t = 10_000)]
    profiles: usize,
    #[arg(long, default_value_t = 1.0)]
    exponent: f64,
    /// Fraction of each attribute's occurrences the basis knows.
    #[arg(long, default_value_t = 1.0)]
    coverage: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    targets_out: PathBuf,
    #[arg(long)]
    basis_out: PathBuf,
}

/// An error with its exit code. Messages never contain attribute values.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn io(what: &str, err: io::Error) -> Self {
        Failure::new(EXIT_IO, format!("{what}: {err}"))
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        let code = match e {
            StoreError::EmptyValue | StoreError::EmptyDescription => EXIT_USAGE,
            _ => EXIT_IO,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<EnvelopeError> for Failure {
    fn from(e: EnvelopeError) -> Self {
        Failure::new(EXIT_MALFORMED, e.to_string())
    }
}

impl From<SchemeError> for Failure {
    fn from(e: SchemeError) -> Self {
        let code = match e {
            SchemeError::MalformedEnvelope(_) => EXIT_MALFORMED,
            SchemeError::Entropy(_) => EXIT_IO,
            SchemeError::EmptyValue | SchemeError::EmptyDescription | SchemeError::EmptyPost => {
                EXIT_USAGE
            }
            _ => EXIT_PARAMS,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<AttackError> for Failure {
    fn from(e: AttackError) -> Self {
        let code = match e {
            AttackError::InvalidThreshold { .. } | AttackError::InvalidBudget => EXIT_USAGE,
            _ => EXIT_CORPUS,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        let code = match e {
            BenchError::Scheme(_) => EXIT_PARAMS,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

fn read_input(path: &str) -> Result<Vec<u8>, Failure> {
    if path == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::io("stdin", e))?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| Failure::io(path, e))
    }
}

fn write_output(path: &str, bytes: &[u8]) -> Result<(), Failure> {
    if path == "-" {
        let mut out = io::stdout().lock();
        out.write_all(bytes)
            .and_then(|_| out.flush())
            .map_err(|e| Failure::io("stdout", e))
    } else {
        fs::write(path, bytes).map_err(|e| Failure::io(path, e))
    }
}

fn rng(seed: Option<u64>) -> Result<RandomSource, Failure> {
    match seed {
        Some(s) => Ok(RandomSource::seeded(s)),
        None => RandomSource::from_os().map_err(|e| Failure::new(EXIT_IO, e.to_string())),
    }
}

fn cmd_protect(args: ProtectArgs) -> Result<(), Failure> {
    let mut store: Option<AttributeStore> = None;
    let mut attrs = Vec::with_capacity(args.attrs.len());
    for spec in &args.attrs {
        let attr = match spec.split_once('=') {
            Some((d, v)) => Attribute::new(d, v)?,
            None => {
                if store.is_none() {
                    store = Some(args.store.open()?);
                }
                let st = store.as_ref().expect("opened above");
                let key = pka::normalize(spec).map_err(|_| SchemeError::EmptyDescription)?;
                let matches: Vec<&str> = st
                    .entries()
                    .iter()
                    .filter(|e| pka::normalize(&e.description).ok().as_deref() == Some(&key))
                    .map(|e| e.value.as_str())
                    .collect();
                match matches.as_slice() {
                    [v] => Attribute::new(spec, v)?,
                    [] => return Err(Failure::new(EXIT_USAGE, format!("no stored value for `{}`", spec.trim()))),
                    _ => {
                        return Err(Failure::new(
                            EXIT_USAGE,
                            format!("several stored values for `{}`; give one with `=`", spec.trim()),
                        ))
                    }
                }
            }
        };
        attrs.push(attr);
    }
    let n = attrs.len();
    let params = SharingParams::new(n, args.threshold).map_err(SchemeError::from)?;
    let post = read_input(&args.input)?;
    let pp = protect(&attrs, &post, params, &mut rng(args.seed)?)?;
    let mut doc = envelope::encode(&pp);
    doc.push('\n');
    write_output(&args.out, doc.as_bytes())?;
    eprintln!("protected with n = {n}, t = {}", args.threshold);
    for (i, d) in pp.descriptions.iter().enumerate() {
        eprintln!("  [{}] {d}", i + 1);
    }
    Ok(())
}

fn parse_value(spec: &str) -> Result<Guess, Failure> {
    let (i, v) = spec
        .split_once('=')
        .ok_or_else(|| Failure::new(EXIT_USAGE, "--value expects `Index=Value`"))?;
    let index: usize = i
        .trim()
        .parse()
        .map_err(|_| Failure::new(EXIT_USAGE, format!("bad index `{}` in --value", i.trim())))?;
    Ok(Guess::new(index, v))
}

fn prompt_values(descriptions: &[String], t: usize) -> Result<Vec<Guess>, Failure> {
    eprintln!("enter values for any {t} of these attributes; leave a line empty to skip");
    let stdin = io::stdin();
    let mut lines = stdin.lock();
    let mut guesses = Vec::with_capacity(t);
    for (i, d) in descriptions.iter().enumerate() {
        if guesses.len() == t {
            break;
        }
        eprint!("[{}] {d}: ", i + 1);
        let _ = io::stderr().flush();
        let line = tty::read_secret_line(&mut lines).map_err(|e| Failure::io("stdin", e))?;
        let Some(line) = line else { break };
        if !line.trim().is_empty() {
            guesses.push(Guess::new(i + 1, line));
        }
    }
    Ok(guesses)
}

fn warn_if_not_text(bytes: &[u8]) {
    if !looks_like_text(bytes) {
        eprintln!("warning: output does not look like text; output may indicate wrong values");
    }
}

fn cmd_access(args: AccessArgs) -> Result<(), Failure> {
    if args.interactive && args.input == "-" {
        return Err(Failure::new(EXIT_USAGE, "--interactive needs --in FILE"));
    }
    let bytes = read_input(&args.input)?;
    let doc = std::str::from_utf8(&bytes)
        .map_err(|_| Failure::new(EXIT_MALFORMED, "envelope is not UTF-8"))?;
    let pp = envelope::decode(doc)?;

    if args.auto {
        let store = args.store.open()?;
        return match auto_access(&pp, &store, args.cap)? {
            AutoOutcome::Opened {
                plaintext, tried, ..
            } => {
                eprintln!("opened after {tried} combination(s); judged by a text heuristic");
                write_output(&args.out, &plaintext)
            }
            AutoOutcome::NoMatch {
                tried,
                cap_exceeded,
            } => {
                let why = if cap_exceeded { " (cap reached)" } else { "" };
                Err(Failure::new(
                    EXIT_NO_MATCH,
                    format!("no stored combination opened the post after {tried} tries{why}"),
                ))
            }
        };
    }

    let guesses = if args.interactive {
        prompt_values(&pp.descriptions, pp.params.t())?
    } else {
        args.values.iter().map(|s| parse_value(s)).collect::<Result<Vec<_>, _>>()?
    };
    let plaintext = access(&guesses, &pp)?;
    warn_if_not_text(&plaintext);
    write_output(&args.out, &plaintext)
}

fn mask(_value: &str) -> &'static str {
    "********"
}

fn cmd_attrs(cmd: AttrsCommand) -> Result<(), Failure> {
    match cmd {
        AttrsCommand::Add {
            description,
            value,
            store,
        } => {
            let value = match value {
                Some(v) => v,
                None => {
                    if tty::stdin_is_tty() {
                        eprint!("value for {}: ", description.trim());
                        let _ = io::stderr().flush();
                    }
                    tty::read_secret_line(&mut io::stdin().lock())
                        .map_err(|e| Failure::io("stdin", e))?
                        .unwrap_or_default()
                }
            };
            let mut st = store.open()?;
            if st.put(&description, &value)? {
                st.save()?;
                eprintln!("stored a value for `{}`", description.trim());
            } else {
                eprintln!("`{}` already has that value", description.trim());
            }
            Ok(())
        }
        AttrsCommand::List { reveal, store } => {
            let st = store.open()?;
            let mut out = io::stdout().lock();
            for e in st.entries() {
                let shown = if reveal { e.value.as_str() } else { mask(&e.value) };
                writeln!(out, "{}\t{shown}", e.description).map_err(|e| Failure::io("stdout", e))?;
            }
            Ok(())
        }
        AttrsCommand::Rm {
            description,
            value,
            store,
        } => {
            let mut st = store.open()?;
            let removed = st.delete(&description, value.as_deref());
            if removed == 0 {
                eprintln!("warning: nothing stored for `{}`", description.trim());
            } else {
                st.save()?;
                eprintln!("removed {removed} entr{}", if removed == 1 { "y" } else { "ies" });
            }
            Ok(())
        }
    }
}

fn read_basis(path: &Path) -> Result<FrequencyTable<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(&path.display().to_string(), e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "basis".into());
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let table = if is_json {
        FrequencyTable::from_json(&text)
    } else {
        FrequencyTable::from_csv(label, text.as_bytes())
    };
    table.map_err(Failure::from)
}

fn cmd_attack(args: AttackArgs) -> Result<(), Failure> {
    let basis = read_basis(&args.basis)?;
    let file = fs::File::open(&args.targets)
        .map_err(|e| Failure::io(&args.targets.display().to_string(), e))?;
    let targets = read_targets_csv(io::BufReader::new(file))?;
    let config = AttackConfig {
        threshold: args.threshold,
        budget: args.budget,
        mode: if args.real_crypto {
            CheckMode::RealCrypto
        } else {
            CheckMode::Simulated
        },
        seed: args.seed,
    };
    let report = run_attack(&targets, &basis, &config)?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::io(&args.out_dir.display().to_string(), e))?;
    let json_path = args.out_dir.join("report.json");
    let csv_path = args.out_dir.join("payoff.csv");
    fs::write(&json_path, report.to_json() + "\n")
        .map_err(|e| Failure::io(&json_path.display().to_string(), e))?;
    fs::write(&csv_path, report.payoff_csv())
        .map_err(|e| Failure::io(&csv_path.display().to_string(), e))?;
    eprintln!(
        "{} targets, t = {}: success rate {:.4}, mean trials {:.1}",
        report.targets, report.threshold, report.success_rate, report.mean_trials
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let suite: Suite = args.suite.parse()?;
    let mut config = BenchConfig::new(suite);
    config.runs = args.runs;
    config.seed = args.seed;
    if let Some(s) = &args.sizes {
        config.sizes = bench::parse_sizes(s)?;
    }
    if let Some(s) = &args.schemes {
        config.schemes = bench::parse_schemes(s)?;
    }
    let records = bench::run_bench(&config)?;
    write_output("-", bench::to_csv(&records).as_bytes())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let spec: Vec<(String, usize)> = args
        .attrs
        .split(',')
        .map(|item| {
            let (name, k) = item
                .rsplit_once(':')
                .ok_or_else(|| Failure::new(EXIT_USAGE, format!("bad attribute `{item}`")))?;
            let k: usize = k
                .trim()
                .parse()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| Failure::new(EXIT_USAGE, format!("bad value count in `{item}`")))?;
            Ok((name.trim().to_owned(), k))
        })
        .collect::<Result<_, Failure>>()?;
    let spec_ref: Vec<(&str, usize)> = spec.iter().map(|(n, k)| (n.as_str(), *k)).collect();
    let mut rng = RandomSource::seeded(args.seed);
    let usage = |e: AttackError| Failure::new(EXIT_USAGE, e.to_string());
    let targets = attack::synth::zipf_profiles(&spec_ref, args.profiles, args.exponent, &mut rng)
        .map_err(usage)?;
    let basis: FrequencyTable<f64> = if args.coverage >= 1.0 {
        attack::synth::empirical_table("basis", &targets)
    } else {
        attack::synth::partial_basis("basis", &targets, args.coverage, &mut rng)
    }
    .map_err(usage)?;

    let io_err = |p: &Path| {
        let name = p.display().to_string();
        move |e: csv::Error| Failure::new(EXIT_IO, format!("{name}: {e}"))
    };
    let mut w = csv::Writer::from_path(&args.targets_out).map_err(io_err(&args.targets_out))?;
    w.write_record(["profile_id", "description", "value"])
        .map_err(io_err(&args.targets_out))?;
    for p in &targets {
        for (d, v) in &p.attributes {
            w.write_record([p.id.as_str(), d, v]).map_err(io_err(&args.targets_out))?;
        }
    }
    w.flush().map_err(|e| Failure::io("targets", e))?;

    let mut w = csv::Writer::from_path(&args.basis_out).map_err(io_err(&args.basis_out))?;
    w.write_record(["description", "value", "count"])
        .map_err(io_err(&args.basis_out))?;
    for d in basis.descriptions() {
        for (v, p) in basis.values(d).into_iter().flatten() {
            w.write_record([d, v, &p.to_string()]).map_err(io_err(&args.basis_out))?;
        }
    }
    w.flush().map_err(|e| Failure::io("basis", e))?;
    eprintln!("wrote {} profiles", targets.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Protect(a) => cmd_protect(a),
        Command::Access(a) => cmd_access(a),
        Command::Attrs(c) => cmd_attrs(c),
        Command::Attack(a) => cmd_attack(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pka: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
