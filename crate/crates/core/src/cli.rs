//! Command-line front end. Exit codes: 0 all pass, 2 any fail, 3 only
//! inconclusive besides passes, 64 usage, 70 internal error.

use crate::error::{Error, Result};
use crate::experiments::{to_json, write_csv, ExperimentReport, Params, Status, Suite};
use crate::glued::GluedLayout;
use crate::haar_oracle::{run_purified, AdversaryCircuit, PurifiedOracle};
use crate::structure::DatabaseGraph;
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Path recording: t = 1 exactness, isometry spectra, W vs V.
    PrCheck,
    /// Glued path recording: monogamy, closeness, worked examples, isometries.
    GlueCheck,
    /// Good states, projector commutation, χ identities.
    StructureCheck,
    /// O_comp commutation pieces and the induction contract.
    OcompCheck,
    /// Hybrid distances H1..H7.
    Hybrids,
    /// Key stretching placement and trend, moment oracle.
    StretchDemo,
    /// Every suite.
    All,
}

impl Command {
    pub fn suites(self) -> Vec<Suite> {
        match self {
            Command::PrCheck => vec![Suite::PathRecording],
            Command::GlueCheck => vec![Suite::Glued],
            Command::StructureCheck => vec![Suite::Structure],
            Command::OcompCheck => vec![Suite::Simulator],
            Command::Hybrids => vec![Suite::Hybrids],
            Command::StretchDemo => vec![Suite::Stretch],
            Command::All => Suite::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "haarglue", version, about = "Glued path recording checks at desk scale")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub n: Option<u32>,
    #[arg(long, global = true)]
    pub lambda: Option<u32>,
    #[arg(long, global = true)]
    pub t: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// JSON file with any of the fields of `RunConfig`; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the purified state of one W^glued run to `state.json`.
    #[arg(long, global = true)]
    pub dump_state: bool,
    /// Write the database graph of that state's heaviest database to `graph.txt`.
    #[arg(long, global = true)]
    pub dump_graph: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<u32>,
    pub lambda: Option<u32>,
    pub t: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub dump_state: Option<bool>,
    pub dump_graph: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub suites: Vec<Suite>,
    pub params: Params,
    pub out: PathBuf,
    pub format: Format,
    pub dump_state: bool,
    pub dump_graph: bool,
}

impl RunConfig {
    /// Defaults, then the config file, then flags.
    pub fn resolve(args: &Args) -> Result<RunConfig> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
                serde_json::from_str::<ConfigFile>(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let d = Params::default();
        let params = Params {
            n: args.n.or(file.n).unwrap_or(d.n),
            lambda: args.lambda.or(file.lambda).unwrap_or(d.lambda),
            t: args.t.or(file.t).unwrap_or(d.t),
            samples: args.samples.or(file.samples).unwrap_or(d.samples),
            seed: args.seed.or(file.seed).unwrap_or(d.seed),
        };
        if params.n < 1 || params.lambda < 1 {
            return Err(Error::Invalid(format!("need n ≥ 1 and λ ≥ 1, got n={} λ={}", params.n, params.lambda)));
        }
        if 2 * params.n + params.lambda > 24 {
            return Err(Error::Invalid(format!("register of {} qubits is out of desk scale", 2 * params.n + params.lambda)));
        }
        Ok(RunConfig {
            suites: args.command.suites(),
            params,
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            dump_state: args.dump_state || file.dump_state.unwrap_or(false),
            dump_graph: args.dump_graph || file.dump_graph.unwrap_or(false),
        })
    }
}

pub fn exit_code(reports: &[ExperimentReport]) -> i32 {
    if reports.iter().any(|r| r.status == Status::Fail) {
        EXIT_FAIL
    } else if reports.iter().any(|r| r.status == Status::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_PASS
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Invalid(format!("{}: {e}", path.display()))
}

/// Writes `reports.{csv,json}` (reproducible) and `metadata.json` (timings
/// and wall-clock time).
pub fn write_outputs(cfg: &RunConfig, reports: &[ExperimentReport]) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    match cfg.format {
        Format::Csv => {
            let path = cfg.out.join("reports.csv");
            let f = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            write_csv(f, reports, false)?;
        }
        Format::Json => {
            let path = cfg.out.join("reports.json");
            std::fs::write(&path, to_json(reports, false)).map_err(|e| io_err(&path, e))?;
        }
    }
    let started = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = serde_json::json!({
        "unix_time": started,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "ms": reports.iter().map(|r| serde_json::json!({ "lemma_id": r.lemma_id, "ms": r.ms as u64 })).collect::<Vec<_>>(),
    });
    let path = cfg.out.join("metadata.json");
    std::fs::write(&path, serde_json::to_string_pretty(&meta).expect("metadata serializes")).map_err(|e| io_err(&path, e))
}

/// One W^glued run of a random adversary at the configured size, for the
/// dump flags.
pub fn dump(cfg: &RunConfig) -> Result<()> {
    let p = cfg.params;
    let g = GluedLayout::new(p.n, p.lambda, 0)?;
    let c = AdversaryCircuit::random(g.query(), 0, 2 * p.t, p.seed)?;
    let psi = run_purified(&c, PurifiedOracle::GluedW, p.n, p.lambda)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    if cfg.dump_state {
        let path = cfg.out.join("state.json");
        std::fs::write(&path, psi.to_json()).map_err(|e| io_err(&path, e))?;
    }
    if cfg.dump_graph {
        let mut weights: Vec<_> = psi.iter().map(|((_, db), a)| (db.clone(), a.norm_sqr())).collect();
        weights.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let text = weights.first().map(|(db, _)| DatabaseGraph::build(db, &g).dump()).unwrap_or_default();
        let path = cfg.out.join("graph.txt");
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<Vec<ExperimentReport>> {
    let mut reports = Vec::new();
    for s in &cfg.suites {
        reports.extend(s.run(cfg.params)?);
    }
    Ok(reports)
}

/// Parses `argv`, runs, writes outputs and returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match RunConfig::resolve(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let reports = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INTERNAL;
        }
    };
    for r in &reports {
        let extra = if r.note.is_empty() { String::new() } else { format!("  ({})", r.note) };
        println!("{:<6} {:<32} value={:.4e} bound={:.4e}{extra}", r.status.as_str(), r.lemma_id, r.value, r.bound);
    }
    if let Err(e) = write_outputs(&cfg, &reports) {
        eprintln!("error: {e}");
        return EXIT_INTERNAL;
    }
    if cfg.dump_state || cfg.dump_graph {
        if let Err(e) = dump(&cfg) {
            eprintln!("dump skipped: {e}");
        }
    }
    exit_code(&reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors() {
        assert_eq!(main_with(["haarglue"]), EXIT_USAGE);
        assert_eq!(main_with(["haarglue", "bogus"]), EXIT_USAGE);
        assert_eq!(main_with(["haarglue", "pr-check", "--n", "0"]), EXIT_USAGE);
        assert_eq!(main_with(["haarglue", "pr-check", "--format", "xml"]), EXIT_USAGE);
    }

    #[test]
    fn flags_override_config() {
        let dir = std::env::temp_dir().join(format!("haarglue-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{"n": 2, "seed": 9, "format": "json"}"#).unwrap();
        let args = Args::try_parse_from(["haarglue", "hybrids", "--config", path.to_str().unwrap(), "--seed", "4"]).unwrap();
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!((cfg.params.n, cfg.params.seed, cfg.format), (2, 4, Format::Json));
        assert_eq!(cfg.suites, vec![Suite::Hybrids]);
        std::fs::write(&path, r#"{"m": 2}"#).unwrap();
        let args = Args::try_parse_from(["haarglue", "all", "--config", path.to_str().unwrap()]).unwrap();
        assert!(RunConfig::resolve(&args).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn exit_codes_from_statuses() {
        let base = crate::experiments::t1_exactness(1, 1).unwrap();
        let with = |s| ExperimentReport { status: s, ..base.clone() };
        assert_eq!(exit_code(&[with(Status::Pass)]), EXIT_PASS);
        assert_eq!(exit_code(&[with(Status::Pass), with(Status::Inconclusive)]), EXIT_INCONCLUSIVE);
        assert_eq!(exit_code(&[with(Status::Inconclusive), with(Status::Fail)]), EXIT_FAIL);
    }
}
