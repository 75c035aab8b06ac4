//! The `nearherm` command line.

use crate::config::{figure_config, parse_config, EmitFormat, RunConfig};
use crate::emit::{csv_string, json_string, write_file};
use crate::report::{self, RunReport};
use crate::{CliError, Result};
use clap::{Parser, Subcommand};
use nearherm::experiments::{run, verify::run_criterion, verify::VerifyReport, verify::CRITERIA};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "nearherm", version, about = "Seeded experiments on nearly Hermitian random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `trials` for every experiment.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Emit the data behind one of the figures.
    Figure {
        #[arg(value_parser = ["fig1", "fig2", "fig3", "fig4", "fig5"])]
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        timing: bool,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated criterion ids; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        #[arg(long)]
        timing: bool,
    },
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn millis(start: Instant) -> u128 {
    start.elapsed().as_millis()
}

fn execute(cfg: &RunConfig, timing: bool) -> Result<bool> {
    create_dir(&cfg.output_dir)?;
    let start = Instant::now();
    let mut summaries = Vec::new();
    println!("{}", report::table_header());
    for (i, spec) in cfg.experiments.iter().enumerate() {
        let name = format!("{:02}_{}", i, spec.experiment.name());
        let t = Instant::now();
        let r = run(spec, nearherm::rng::mix_seed(cfg.master_seed, i as u64))?;
        println!("{}", report::table_row(&name, &r, millis(t)));
        if !r.eigenvalue_dump.is_empty() {
            if cfg.emit.contains(&EmitFormat::Csv) {
                write_file(&cfg.output_dir.join(format!("{name}.csv")), &csv_string(&r.eigenvalue_dump)?)?;
            }
            if cfg.emit.contains(&EmitFormat::Json) {
                write_file(&cfg.output_dir.join(format!("{name}.json")), &json_string(&r.eigenvalue_dump))?;
            }
        }
        if cfg.emit.contains(&EmitFormat::Json) {
            let mut full = serde_json::to_string_pretty(&ExperimentTrials::from(&r)).expect("report serializes");
            full.push('\n');
            write_file(&cfg.output_dir.join(format!("{name}.trials.json")), &full)?;
        }
        summaries.push(report::summarize(name, &r));
    }
    let rep = RunReport {
        config_echo: cfg,
        per_experiment: summaries,
        wall_time_ms: timing.then(|| millis(start) as u64),
        seed: cfg.master_seed,
    };
    write_file(&cfg.output_dir.join("report.json"), &rep.to_json())?;
    Ok(rep.passed())
}

/// Per-trial records without the point dump, which has its own files.
#[derive(serde::Serialize)]
struct ExperimentTrials<'a> {
    experiment: &'static str,
    master_seed: u64,
    per_trial: &'a [nearherm::experiments::TrialRecord],
    checks: &'a [nearherm::experiments::Check],
    classifications: &'a [nearherm::experiments::OutlierClassification],
}

impl<'a> From<&'a nearherm::experiments::ExperimentReport> for ExperimentTrials<'a> {
    fn from(r: &'a nearherm::experiments::ExperimentReport) -> Self {
        Self {
            experiment: r.experiment.name(),
            master_seed: r.master_seed,
            per_trial: &r.per_trial,
            checks: &r.checks,
            classifications: &r.classifications,
        }
    }
}

fn verify(seed: u64, out: &Path, only: &[u32], timing: bool) -> Result<bool> {
    create_dir(out)?;
    let start = Instant::now();
    let ids: Vec<u32> = CRITERIA.iter().map(|(id, _)| *id).filter(|id| only.is_empty() || only.contains(id)).collect();
    if ids.is_empty() {
        return Err(CliError::Config(format!("--only {only:?} selects no criterion")));
    }
    let mut criteria = Vec::new();
    for id in ids {
        let t = Instant::now();
        let c = run_criterion(id, seed)?;
        println!("{}", report::criterion_line(&c, millis(t)));
        criteria.push(c);
    }
    let v = VerifyReport { seed, passed: criteria.iter().all(|c| c.passed), criteria };
    let rep = report::verify_report(&v, timing.then(|| millis(start) as u64));
    write_file(&out.join("verify_report.json"), &rep.to_json())?;
    let passes = v.criteria.iter().filter(|c| c.passed).count();
    println!("{passes}/{} criteria passed", v.criteria.len());
    Ok(v.passed)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seed, trials, out, timing } => {
            let text = std::fs::read(&config).map_err(|e| CliError::io(&config, e))?;
            let mut cfg = parse_config(&text)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(t) = trials {
                if t == 0 {
                    return Err(CliError::Config("--trials must be positive".into()));
                }
                cfg.experiments.iter_mut().for_each(|e| e.trials = t);
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            execute(&cfg, timing)
        }
        Command::Figure { name, seed, out, timing } => execute(&figure_config(&name, seed, out)?, timing),
        Command::Verify { seed, out, only, timing } => verify(seed, &out, &only, timing),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as u8
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> u8 {
        run_cli(std::iter::once("nearherm").chain(args.iter().copied()))
    }

    fn path(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    fn run_config(dir: &Path, body: &str, extra: &[&str]) -> u8 {
        let cfg = dir.join("config.json");
        std::fs::write(&cfg, body).unwrap();
        let out = dir.join("out");
        let mut args = vec!["run", "--config", path(&cfg), "--out", path(&out)];
        args.extend_from_slice(extra);
        cli(&args)
    }

    fn read(p: impl AsRef<Path>) -> String {
        std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
    }

    fn json(p: impl AsRef<Path>) -> serde_json::Value {
        serde_json::from_str(&read(p)).unwrap()
    }

    #[test]
    fn passing_run_exits_zero() {
        let dir = tempfile::tempdir().unwrap();
        let code = run_config(dir.path(), r#"{"experiments": [{"experiment": "interlacing", "n": 20, "trials": 3}]}"#, &[]);
        assert_eq!(code, 0);
        let report = json(dir.path().join("out/report.json"));
        assert_eq!(report["per_experiment"][0]["name"], "00_interlacing");
        assert_eq!(report["per_experiment"][0]["passed"], true);
        assert!(report["wall_time_ms"].is_null());
    }

    #[test]
    fn timing_flag_records_wall_time() {
        let dir = tempfile::tempdir().unwrap();
        run_config(dir.path(), r#"{"experiments": [{"experiment": "interlacing", "n": 5, "trials": 1}]}"#, &["--timing"]);
        assert!(json(dir.path().join("out/report.json"))["wall_time_ms"].is_u64());
    }

    #[test]
    fn failing_threshold_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{"experiments": [{"experiment": "outliers_wigner", "n": 60, "trials": 2,
            "perturbation": {"kind": "diagonal", "values": [[3.0, 0.0]]},
            "params": {"match_tol": 1e-12, "threshold": 1.0}}]}"#;
        assert_eq!(run_config(dir.path(), body, &[]), 1);
        assert_eq!(json(dir.path().join("out/report.json"))["per_experiment"][0]["passed"], false);
    }

    #[test]
    fn config_errors_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{"experiments": [{"experiment": "interlacing", "n": 20, "trials": -4}]}"#;
        assert_eq!(run_config(dir.path(), body, &[]), 2);
        assert_eq!(run_config(dir.path(), body, &["--trials", "0"]), 2);
        assert_eq!(cli(&["run", "--config", path(&dir.path().join("missing.json"))]), 2);
        assert_eq!(cli(&["figure", "fig9"]), 2);
        assert_eq!(cli(&["verify", "--only", "12", "--out", path(dir.path())]), 2);
        assert_eq!(cli(&["bogus"]), 2);
    }

    #[test]
    fn same_seed_same_bytes() {
        let body = r#"{"experiments": ["fig1", {"experiment": "bounds_suite", "n": 2, "trials": 5}], "master_seed": 9}"#;
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let snapshot = || {
            let mut files: Vec<(String, String)> = std::fs::read_dir(&out)
                .unwrap()
                .map(|e| e.unwrap().path())
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), read(&p)))
                .collect();
            files.sort();
            files
        };
        assert_eq!(run_config(dir.path(), body, &[]), 0);
        let first = snapshot();
        assert!(first.len() >= 4, "{:?}", first.iter().map(|f| &f.0).collect::<Vec<_>>());
        assert_eq!(run_config(dir.path(), body, &[]), 0);
        assert_eq!(first, snapshot());
        run_config(dir.path(), body, &["--seed", "10"]);
        let third = snapshot();
        let csv = |s: &[(String, String)]| s.iter().find(|f| f.0 == "00_nonreal_wigner.csv").unwrap().1.clone();
        assert_ne!(csv(&first), csv(&third));
    }

    #[test]
    fn trials_flag_overrides_config() {
        let dir = tempfile::tempdir().unwrap();
        let code = run_config(dir.path(), r#"{"experiments": [{"experiment": "interlacing", "n": 10}]}"#, &["--trials", "3"]);
        assert_eq!(code, 0);
        let t = json(dir.path().join("out/00_interlacing.trials.json"));
        assert_eq!(t["per_trial"].as_array().unwrap().len(), 3);
    }

    fn csv_kinds(p: &Path) -> Vec<String> {
        let text = read(p);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("trial,index,re,im,kind"));
        lines.map(|l| l.rsplit(',').next().unwrap().to_string()).collect()
    }

    fn count(kinds: &[String], kind: &str) -> usize {
        kinds.iter().filter(|k| *k == kind).count()
    }

    #[test]
    fn figure_one_data() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(cli(&["figure", "fig1", "--out", path(dir.path())]), 0);
        let kinds = csv_kinds(&dir.path().join("00_nonreal_wigner.csv"));
        assert_eq!(count(&kinds, "eigenvalue"), 100);
        let rows = json(dir.path().join("00_nonreal_wigner.json"));
        assert_eq!(rows.as_array().unwrap().len(), kinds.len());
    }

    #[test]
    fn figure_three_data() {
        let dir = tempfile::tempdir().unwrap();
        cli(&["figure", "fig3", "--out", path(dir.path())]);
        let kinds = csv_kinds(&dir.path().join("00_outliers_wigner.csv"));
        assert_eq!(count(&kinds, "eigenvalue"), 2000);
        assert_eq!(count(&kinds, "prediction"), 3);
    }

    #[test]
    fn figure_four_interleaves_kinds() {
        let dir = tempfile::tempdir().unwrap();
        cli(&["figure", "fig4", "--out", path(dir.path())]);
        let kinds = csv_kinds(&dir.path().join("00_critical_points.csv"));
        assert_eq!(count(&kinds, "eigenvalue"), 50);
        assert_eq!(count(&kinds, "critical_point"), 49);
        assert_eq!(&kinds[..2], ["eigenvalue", "critical_point"]);
    }

    #[test]
    fn verify_subset_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(cli(&["verify", "--only", "9,10", "--out", path(dir.path())]), 0);
        let r = json(dir.path().join("verify_report.json"));
        let names: Vec<_> = r["per_experiment"].as_array().unwrap().iter().map(|e| e["name"].clone()).collect();
        assert_eq!(names, ["criterion_09", "criterion_10"]);
        assert_eq!(r["seed"], 42);
    }
}
