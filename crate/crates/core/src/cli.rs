//! Command-line front end. Summaries go to stdout as JSON, diagnostics to
//! stderr. Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::protocols::{demo_spec, run_scenario, Scenario, ScenarioError, ScenarioSpec};
use crate::qmaps::QMap;
use crate::qstate::BackendKind;
use crate::sim::SimTime;
use crate::trace::{validate, TraceDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    #[value(name = "bell_all_to_all")]
    BellAllToAll,
    #[value(name = "teleportation")]
    Teleportation,
    #[value(name = "ghz4")]
    Ghz4,
    #[value(name = "cluster5")]
    Cluster5,
    #[value(name = "cluster_chain")]
    ClusterChain,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Scenario {
        match s {
            ScenarioArg::BellAllToAll => Scenario::BellAllToAll,
            ScenarioArg::Teleportation => Scenario::Teleportation,
            ScenarioArg::Ghz4 => Scenario::Ghz4,
            ScenarioArg::Cluster5 => Scenario::Cluster5,
            ScenarioArg::ClusterChain => Scenario::ClusterChain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Ket,
    Dm,
    Stab,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> BackendKind {
        match b {
            BackendArg::Ket => BackendKind::Ket,
            BackendArg::Dm => BackendKind::Dm,
            BackendArg::Stab => BackendKind::Stab,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qnetsim", version, about = "Discrete-event hybrid quantum-classical network simulator")]
#[command(subcommand_negates_reqs = true, args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    #[arg(long, value_enum, required = true)]
    pub scenario: Option<ScenarioArg>,

    #[arg(long, value_enum, default_value = "ket")]
    pub backend: BackendArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,

    /// Write the JSON trace here.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,

    /// Noise map for every quantum link, as kind:p (loss, depolarizing, dephasing). Repeatable.
    #[arg(long, value_name = "KIND:P")]
    pub noise: Vec<QMap>,

    #[arg(long)]
    pub qdelay_ns: Option<u64>,

    #[arg(long)]
    pub cdelay_ns: Option<u64>,

    /// Chain length (cluster_chain only).
    #[arg(long)]
    pub nodes: Option<usize>,

    /// Ack timeout in spoke round trips.
    #[arg(long, default_value_t = crate::protocols::DEFAULT_TIMEOUT_MULT, value_parser = clap::value_parser!(u64).range(1..))]
    pub timeout_mult: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the four canonical demo traces into DIR.
    DemoTraces { dir: PathBuf },
}

impl Cli {
    pub fn spec(&self) -> ScenarioSpec {
        let mut spec = ScenarioSpec::new(
            self.scenario.expect("required unless a subcommand is given").into(),
            self.backend.into(),
        )
        .seed(self.seed)
        .trials(self.trials);
        for &m in &self.noise {
            spec = spec.noise_all(m);
        }
        spec.qdelay = self.qdelay_ns.map(SimTime::from_ns);
        spec.cdelay = self.cdelay_ns.map(SimTime::from_ns);
        spec.nodes = self.nodes;
        spec.timeout_mult = self.timeout_mult;
        spec.record_trace = self.trace_out.is_some();
        spec
    }
}

fn write_trace(doc: &TraceDoc, path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    doc.write_json(&mut w)
}

/// Writes `<dir>/<scenario>.json` for each demo scenario; returns the paths.
pub fn generate_demo_traces(dir: &Path) -> Result<Vec<PathBuf>, String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut out = Vec::new();
    for s in Scenario::DEMOS {
        let run = run_scenario(&demo_spec(s)).map_err(|e| format!("{s}: {e}"))?;
        let doc = run.trace.expect("demo specs record traces");
        let bytes = doc.to_json_bytes();
        let problems = validate(&bytes);
        if !problems.is_empty() {
            return Err(format!("{s}: generated trace is invalid: {problems:?}"));
        }
        let path = dir.join(format!("{s}.json"));
        fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        out.push(path);
    }
    Ok(out)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = if e.use_stderr() { e.render().to_string() } else { e.to_string() };
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };

    if let Some(Command::DemoTraces { dir }) = &cli.command {
        return match generate_demo_traces(dir) {
            Ok(paths) => {
                let list: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
                let _ = writeln!(stdout, "{}", json!({ "traces": list }));
                0
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                1
            }
        };
    }

    let spec = cli.spec();
    if let Err(e) = spec.validate() {
        let code = if matches!(e, ScenarioError::Config(_)) { 2 } else { 1 };
        let _ = writeln!(stderr, "error: {e}");
        return code;
    }
    // Probe the trace path before simulating so a bad path fails fast.
    if let Some(path) = &cli.trace_out {
        if let Err(e) = File::create(path) {
            let _ = writeln!(stderr, "error: cannot write trace to {}: {e}", path.display());
            return 1;
        }
    }
    let run = match run_scenario(&spec) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let mut summary = run.summary;
    if let (Some(path), Some(doc)) = (&cli.trace_out, &run.trace) {
        if let Err(e) = write_trace(doc, path) {
            let _ = writeln!(stderr, "error: cannot write trace to {}: {e}", path.display());
            return 1;
        }
        summary.trace_path = Some(path.display().to_string());
    }
    match serde_json::to_writer(&mut *stdout, &summary) {
        Ok(()) => {
            let _ = writeln!(stdout);
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}
