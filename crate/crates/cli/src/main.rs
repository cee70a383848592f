use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdrelay::bench::{
    hard_failure_rates, run_convergence_trace, run_sweep, summarize, write_audit_csv, write_summary_csv,
    write_sweep_csv, write_trace_csv, ExperimentSpec, SummaryRow,
};
use fdrelay::baselines::SchemeKind;
use fdrelay::Error;

/// Fraction of hard-failed draws above which a sweep exits with status 3.
const HARD_FAIL_LIMIT: f64 = 0.2;

#[derive(Parser)]
#[command(name = "fdrelay", version, about = "Monte-Carlo sweeps for full-duplex two-way relay beamforming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Total power versus SINR target for every scheme.
    Sweep(Common),
    /// Mean power per outer iteration at a single SINR target.
    Trace(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment spec; missing keys take the reference values.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Comma-separated scheme names, e.g. ProposedFD,ZfFD.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Compare closed-form power and SINR with simulation at every final point.
    #[arg(long)]
    audit: bool,
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Config(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn io_fail(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Other(format!("{}: {e}", path.display()))
}

fn load_spec(c: &Common) -> Result<ExperimentSpec, Failure> {
    let mut spec = match &c.spec {
        Some(p) => ExperimentSpec::from_path(p)?,
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = c.seed {
        spec.seed = seed;
    }
    if let Some(runs) = c.runs {
        spec.n_runs = runs;
    }
    if let Some(s) = &c.schemes {
        spec.schemes = s.iter().map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
    }
    spec.oracle_audit |= c.audit;
    spec.validate()?;
    Ok(spec)
}

/// `out.csv` -> `out.<tag>.csv` next to it.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(io_fail(path))
}

fn print_summary(rows: &[SummaryRow]) {
    eprintln!("{:>8}  {:<20} {:>12} {:>8} {:>8}", "theta_dB", "scheme", "power_dBm", "drop", "iters");
    for r in rows {
        let p = r.mean_power_dbm.map_or("-".to_string(), |p| format!("{p:.2}"));
        let it = r.mean_iters.map_or("-".to_string(), |i| format!("{i:.1}"));
        eprintln!("{:>8.1}  {:<20} {:>12} {:>8.2} {:>8}", r.theta_db, r.scheme.name(), p, r.drop_rate, it);
    }
}

fn sweep(c: &Common) -> Result<ExitCode, Failure> {
    let spec = load_spec(c)?;
    let table = run_sweep(&spec)?;
    let summary = summarize(&table.rows)?;
    match &c.out {
        Some(path) => {
            write_sweep_csv(&table.rows, create(path)?)?;
            write_summary_csv(&summary, create(&sibling(path, "summary"))?)?;
            if spec.oracle_audit {
                write_audit_csv(&table.audit, create(&sibling(path, "audit"))?)?;
            }
        }
        None => write_sweep_csv(&table.rows, io::stdout().lock())?,
    }
    if !c.quiet {
        print_summary(&summary);
        if spec.oracle_audit {
            let failed = table.audit.iter().filter(|a| !a.passed).count();
            eprintln!("audit: {failed} of {} final points outside tolerance", table.audit.len());
        }
    }
    let over = over_limit(&hard_failure_rates(&table.rows));
    for (kind, rate) in &over {
        eprintln!("{kind}: hard failures on {:.0}% of draws", rate * 100.0);
    }
    Ok(if over.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn over_limit(rates: &[(SchemeKind, f64)]) -> Vec<(SchemeKind, f64)> {
    rates.iter().copied().filter(|&(_, r)| r > HARD_FAIL_LIMIT).collect()
}

fn trace(c: &Common) -> Result<ExitCode, Failure> {
    let spec = load_spec(c)?;
    let rows = run_convergence_trace(&spec)?;
    match &c.out {
        Some(path) => write_trace_csv(&rows, create(path)?)?,
        None => write_trace_csv(&rows, io::stdout().lock())?,
    }
    if !c.quiet {
        for r in rows.iter().filter(|r| r.outer_iter <= 10) {
            eprintln!("{:<20} {:>3} {:>10.3}", r.scheme.name(), r.outer_iter, r.mean_power_dbm);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(c) => sweep(c),
        Command::Trace(c) => trace(c),
    };
    let _ = io::stdout().flush();
    match result {
        Ok(code) => code,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hard_failure_limit_is_strict() {
        let rates = [(SchemeKind::ProposedFd, 0.2), (SchemeKind::ZfFd, 0.25), (SchemeKind::IdealFd, 0.0)];
        assert_eq!(over_limit(&rates), vec![(SchemeKind::ZfFd, 0.25)]);
    }

    #[test]
    fn side_files_sit_next_to_output() {
        assert_eq!(sibling(Path::new("/tmp/x/run.csv"), "summary"), PathBuf::from("/tmp/x/run.summary.csv"));
    }
}
