//! Command-line front end: scenario listing, tube volume tables and
//! verification suites.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use tubecomp::verification::{run_suite, volume_table, Context, Registry, Scenario, VolumeRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "tubecomp", version, about = "Tube volumes and k-Ricci comparison checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Built-in scenario registry
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
    /// Tube volume over a grid of radii with the applicable bounds
    TubeVolume(RunArgs),
    /// Run every enabled check and write a report
    Verify(RunArgs),
}

#[derive(Subcommand, Debug)]
enum ScenarioAction {
    /// List built-in scenarios with their enabled checks
    List {
        /// List an empty registry
        #[arg(long)]
        empty_registry: bool,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario config: one JSON object or an array of them
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario or suite name
    #[arg(long)]
    scenario: Option<String>,
    /// Radius grid a:b:n (n evenly spaced values from a to b)
    #[arg(long, value_parser = parse_radii)]
    radii: Option<Radii>,
    /// Existing directory for report files
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random draw (Monte Carlo fibers, sampled directions)
    #[arg(long)]
    seed: Option<u64>,
    /// Absolute slack tolerance
    #[arg(long)]
    tolerance: Option<f64>,
    /// Output format; tube-volume defaults to csv, verify to json
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
struct Radii(Vec<f64>);

fn parse_radii(s: &str) -> Result<Radii, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("expected a:b:n, got {s:?}"));
    };
    let a: f64 = a.trim().parse().map_err(|e| format!("start {a:?}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("end {b:?}: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("count {n:?}: {e}"))?;
    if n == 0 {
        return Err("count must be positive".into());
    }
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= a) {
        return Err(format!("need 0 ≤ a ≤ b, got {a}:{b}"));
    }
    if n == 1 {
        return Ok(Radii(vec![a]));
    }
    let step = (b - a) / (n - 1) as f64;
    Ok(Radii((0..n).map(|i| if i + 1 == n { b } else { a + step * i as f64 }).collect()))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(String),
    Io(String),
    Compute(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => EXIT_FAILURE,
            _ => EXIT_USAGE,
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let out = match cli.command {
        Command::Scenario { action: ScenarioAction::List { empty_registry } } => {
            let registry = if empty_registry { Registry::empty() } else { Registry::builtin() };
            print!("{}", scenario_listing(&registry));
            Ok(EXIT_OK)
        }
        Command::TubeVolume(a) => cmd_tube_volume(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    out.unwrap_or_else(|e| {
        eprintln!("tubecomp: {e}");
        e.exit_code()
    })
}

fn scenario_listing(registry: &Registry) -> String {
    let mut s = String::new();
    for sc in registry.scenarios() {
        let checks: Vec<&str> = sc.checks.iter().map(|c| c.name()).collect();
        s.push_str(&format!("{:<24} {}\n", sc.name, checks.join(",")));
    }
    s
}

fn parse_config(text: &str) -> Result<Vec<Scenario>, serde_json::Error> {
    if text.trim_start().starts_with('[') {
        serde_json::from_str(text)
    } else {
        serde_json::from_str(text).map(|s| vec![s])
    }
}

/// Scenarios named by the arguments and the suite label for the report.
fn load(args: &RunArgs) -> Result<(String, Vec<Scenario>), CliError> {
    let (label, mut scenarios) = match (&args.config, &args.scenario) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let scenarios = parse_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into());
            (label, scenarios)
        }
        (None, Some(name)) => {
            let registry = Registry::builtin();
            let scenarios = registry.suite(name).ok_or_else(|| {
                let known: Vec<&str> = Registry::suite_names()
                    .iter()
                    .copied()
                    .chain(registry.scenarios().iter().map(|s| s.name.as_str()))
                    .collect();
                CliError::Usage(format!("unknown scenario or suite {name:?}; known: {}", known.join(", ")))
            })?;
            (name.clone(), scenarios)
        }
        _ => return Err(CliError::Usage("exactly one of --config or --scenario is required".into())),
    };
    for s in &mut scenarios {
        if let Some(seed) = args.seed {
            *s = s.clone().with_seed(seed);
        }
        if let Some(tol) = args.tolerance {
            s.tolerance = tol;
        }
        if let Some(Radii(r)) = &args.radii {
            s.radii = r.clone();
        }
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok((label, scenarios))
}

/// Output directory from the flag or the first scenario; it must exist.
fn out_dir(args: &RunArgs, scenarios: &[Scenario]) -> Result<Option<PathBuf>, CliError> {
    let dir = args.out.clone().or_else(|| scenarios.iter().find_map(|s| s.out.as_ref().map(PathBuf::from)));
    if let Some(d) = &dir {
        if !d.is_dir() {
            return Err(CliError::Io(format!("output directory {} does not exist", d.display())));
        }
    }
    Ok(dir)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn volume_csv(rows: &[VolumeRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf8 csv"))
}

fn cmd_tube_volume(args: &RunArgs) -> Result<i32, CliError> {
    let (_, scenarios) = load(args)?;
    let dir = out_dir(args, &scenarios)?;
    let mut rows = Vec::new();
    for s in &scenarios {
        let ctx = Context::new(s).map_err(|e| CliError::Compute(format!("{}: {e}", s.name)))?;
        rows.extend(volume_table(&ctx, &s.radii).map_err(|e| CliError::Compute(format!("{}: {e}", s.name)))?);
    }
    let (text, file) = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => (volume_csv(&rows)?, "tube_volume.csv"),
        Format::Json => {
            let mut t = serde_json::to_string_pretty(&rows).expect("rows serialize");
            t.push('\n');
            (t, "tube_volume.json")
        }
    };
    match dir {
        Some(d) => write_file(&d, file, &text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn cmd_verify(args: &RunArgs) -> Result<i32, CliError> {
    let (label, scenarios) = load(args)?;
    let dir = out_dir(args, &scenarios)?;
    let report = run_suite(&label, &scenarios);
    let (text, file) = match args.format.unwrap_or(Format::Json) {
        Format::Json => (report.to_json(), "report.json"),
        Format::Csv => (report.to_csv(), "report.csv"),
    };
    match dir {
        Some(d) => write_file(&d, file, &text)?,
        None => print!("{text}"),
    }
    eprint!("{}", report.human_summary());
    Ok(if report.success() { EXIT_OK } else { EXIT_FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_grid_hits_both_ends() {
        let Radii(r) = parse_radii("0:1:5").unwrap();
        assert_eq!(r, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_radii("0.5:0.5:1").unwrap().0, vec![0.5]);
    }

    #[test]
    fn radii_grid_rejects_malformed() {
        for bad in ["1:2", "1:0:3", "-1:1:2", "0:1:0", "a:1:2"] {
            assert!(parse_radii(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_accepts_object_or_array() {
        let one = r#"{"name":"x","manifold":{"kind":"sphere","dim":3},"submanifold":{"kind":"great_circle"}}"#;
        let arr = format!("[{one},{one}]");
        assert_eq!(parse_config(one).map(|v| v.len()).ok(), Some(1));
        assert_eq!(parse_config(&arr).map(|v| v.len()).ok(), Some(2));
    }

    #[test]
    fn config_error_names_unknown_field() {
        let text =
            r#"{"name":"x","manifold":{"kind":"sphere","dim":3},"submanifold":{"kind":"great_circle"},"raduis":[0.5]}"#;
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("raduis"), "{err}");
    }

    #[test]
    fn listing_is_sorted_and_empty_when_asked() {
        let listing = scenario_listing(&Registry::builtin());
        let names: Vec<&str> = listing.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert!(scenario_listing(&Registry::empty()).is_empty());
    }
}
