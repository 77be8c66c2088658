use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use topk_core::harness::{self, parse_config, ExperimentConfig, Report};
use topk_core::{Error, Result};

/// Distributed top-k algorithms on a simulated message-passing machine.
#[derive(Parser)]
#[command(name = "topk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated keys, one line per PE.
    Gen(Params),
    /// Run trials of one algorithm and write one CSV row per trial.
    Run(Params),
    /// Run trials for every PE count in `--pes` (comma-separated).
    Sweep(Params),
}

#[derive(Args)]
struct Params {
    /// Line-based key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// select, msselect, amsselect, bpq, dta, rdta, pac, ec, pec, naive,
    /// naivetree, sumpac, sumec or balance.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    pes: Option<String>,
    #[arg(long = "n-per-pe")]
    n_per_pe: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// zipf:s=1.0,u=1048576, negbin:r=1000,q=0.05, uniform:u=N or file:PATH.
    #[arg(long)]
    dist: Option<String>,
    /// uniform, skewed, onepe or perpe.
    #[arg(long)]
    placement: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Criteria per object for dta and rdta.
    #[arg(long)]
    criteria: Option<String>,
    /// Probes per selection round for amsselect.
    #[arg(long)]
    batch: Option<String>,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Params {
    fn flags(&self) -> Vec<(&'static str, &String)> {
        let all = [
            ("algo", &self.algo),
            ("pes", &self.pes),
            ("n-per-pe", &self.n_per_pe),
            ("k", &self.k),
            ("eps", &self.eps),
            ("delta", &self.delta),
            ("dist", &self.dist),
            ("placement", &self.placement),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("criteria", &self.criteria),
            ("batch", &self.batch),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }

    /// The configuration and the list of PE counts.
    fn resolve(&self) -> Result<(ExperimentConfig, Vec<usize>)> {
        let mut map = match &self.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        for (k, v) in self.flags() {
            map.insert(k.to_string(), v.clone());
        }
        let mut cfg = ExperimentConfig::default();
        let mut pes = vec![cfg.p];
        for (k, v) in &map {
            if k == "pes" {
                pes = v
                    .split(',')
                    .map(|x| x.trim().parse().map_err(|_| Error::Param(format!("bad PE count {x:?}"))))
                    .collect::<Result<_>>()?;
                cfg.p = pes[0];
            } else {
                cfg.set(k, v)?;
            }
        }
        for &p in &pes {
            ExperimentConfig { p, ..cfg.clone() }.validate()?;
        }
        Ok((cfg, pes))
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn single_pe_count(pes: &[usize]) -> Result<()> {
    if pes.len() != 1 {
        return Err(Error::Param("use `sweep` for more than one PE count".into()));
    }
    Ok(())
}

fn gen(params: &Params) -> Result<ExitCode> {
    let (cfg, pes) = params.resolve()?;
    single_pe_count(&pes)?;
    let streams = harness::generate(&cfg.dist, cfg.p, cfg.n_per_pe, cfg.placement, cfg.seed)?;
    let mut out = params.output()?;
    for keys in streams {
        let line: Vec<String> = keys.iter().map(u64::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn report(params: &Params, report: &Report) -> Result<ExitCode> {
    let mut out = params.output()?;
    harness::write_csv(&mut out, &report.rows)?;
    out.flush()?;
    for (row, what) in &report.violations {
        eprintln!("violation in row {row}: {what}");
    }
    Ok(if report.violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gen(p) => gen(p),
        Command::Run(p) => p.resolve().and_then(|(cfg, pes)| {
            single_pe_count(&pes)?;
            report(p, &harness::run_experiment(&cfg)?)
        }),
        Command::Sweep(p) => p.resolve().and_then(|(cfg, pes)| report(p, &harness::run_sweep(&cfg, &pes)?)),
    };
    result.unwrap_or_else(|e| {
        eprintln!("topk: {e}");
        ExitCode::from(1)
    })
}
