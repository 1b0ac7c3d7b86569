use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridrel::config::{CampaignConfig, CaseSpec};
use gridrel::experiments::{self, CaseResult, RunError};
use gridrel::format::{self, EMBEDDED_IEEE33};
use gridrel::output::{self, Format, ResultWriter, RunMeta, TABLE_INDICES};
use gridrel_core::PowerNetwork;

/// Iterations traced per case with --trace.
const TRACE_ITERATIONS: u64 = 10;

#[derive(Parser)]
#[command(name = "gridrel", version, about = "Monte Carlo reliability of distribution feeders with batteries and V2G")]
struct Cli {
    /// Campaign file; the shipped Cases 1-4 campaign when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Network dataset; overrides the campaign's, defaults to the embedded 33-bus feeder.
    #[arg(long, global = true)]
    network: Option<PathBuf>,
    #[arg(long, global = true)]
    iterations: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulation increment in minutes.
    #[arg(long, global = true)]
    increment: Option<f64>,
    /// Worker threads; 0 uses one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, env = "GRIDREL_OUT_DIR", default_value = "results")]
    out: PathBuf,
    /// Also write per-increment traces of the first iterations of each case.
    #[arg(long, global = true)]
    trace: bool,
    /// Overwrite existing result files.
    #[arg(long, global = true)]
    force: bool,
    /// Files to write.
    #[arg(long, global = true, value_delimiter = ',', value_enum)]
    formats: Option<Vec<Format>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and check the network and every case of the campaign.
    Validate,
    /// Run a single case.
    Run {
        /// Case name, or 1-4 for the presets.
        #[arg(long)]
        case: String,
    },
    /// Run every case of the campaign with the shared seed.
    Cases,
    /// Run the factorial sensitivity design.
    Factorial,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<output::OutputError> for Failure {
    fn from(e: output::OutputError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

struct Setup {
    config: CampaignConfig,
    network: PowerNetwork,
    dataset_text: String,
}

fn setup(cli: &Cli) -> Result<Setup, Failure> {
    let cfg_err = |e: &dyn std::fmt::Display| Failure::Config(e.to_string());
    let mut config = CampaignConfig::load(cli.config.as_deref()).map_err(|e| cfg_err(&e))?;
    if let Some(p) = &cli.network {
        config.network = Some(p.clone());
    }
    if let Some(n) = cli.iterations {
        config.simulation.iterations = n;
    }
    if let Some(s) = cli.seed {
        config.simulation.seed = s;
    }
    if let Some(m) = cli.increment {
        config.simulation.increment_minutes = m;
    }
    let dataset_text = match &config.network {
        None => EMBEDDED_IEEE33.to_string(),
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?,
    };
    let network = format::parse_network(&dataset_text).map_err(|e| {
        let at = config
            .network
            .as_ref()
            .map_or("embedded dataset".to_string(), |p| p.display().to_string());
        Failure::Config(format!("{at}: {e}"))
    })?;
    Ok(Setup {
        config,
        network,
        dataset_text,
    })
}

fn formats(cli: &Cli) -> Vec<Format> {
    cli.formats.clone().unwrap_or_else(|| Format::DEFAULT.to_vec())
}

fn print_table(results: &[CaseResult]) {
    print!("{:<10}", "index");
    for r in results {
        print!("{:>14}", r.spec.name);
    }
    println!();
    for i in TABLE_INDICES {
        print!("{:<10}", i.key());
        for r in results {
            print!("{:>14.4}", r.summary.mean(i));
        }
        println!();
    }
}

fn resolve_case<'a>(config: &'a CampaignConfig, name: &str) -> Result<&'a CaseSpec, Failure> {
    config
        .case(name)
        .or_else(|| config.case(&format!("case{name}")))
        .ok_or_else(|| Failure::Config(format!("no case named {name:?} in the campaign")))
}

fn write_cases(cli: &Cli, s: &Setup, command: &str, results: &[CaseResult]) -> Result<(), Failure> {
    let fmts = formats(cli);
    let mut w = ResultWriter::new(&cli.out, cli.force);
    w.add_cases(results, &fmts);
    if cli.trace {
        for r in results {
            let sim = experiments::prepare(&s.network, &s.config, &r.spec, None)?;
            let records = output::trace_records(&sim, TRACE_ITERATIONS)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            w.add(
                format!("trace_{}.csv", r.spec.name),
                output::trace_csv(sim.network(), &records),
            );
        }
    }
    let meta = RunMeta::new(command, &s.config, &s.dataset_text);
    let written = w.finish(fmts.contains(&Format::Manifest).then_some(&meta))?;
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

/// Refuses early, before any simulation, when results would be overwritten.
fn check_out(cli: &Cli, names: Vec<String>) -> Result<(), Failure> {
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    output::check_targets(&cli.out, &names, cli.force).map_err(|e| Failure::Config(e.to_string()))
}

fn run_cases(cli: &Cli, s: &Setup, command: &str, cases: &[CaseSpec]) -> Result<(), Failure> {
    let mut names: Vec<String> = formats(cli).iter().map(|f| f.file_name().to_string()).collect();
    if cli.trace {
        names.extend(cases.iter().map(|c| format!("trace_{}.csv", c.name)));
    }
    check_out(cli, names)?;
    match experiments::run_cases(&s.network, &s.config, cases, cli.threads) {
        Ok(results) => {
            print_table(&results);
            write_cases(cli, s, command, &results)
        }
        Err(failure) => {
            if !failure.completed.is_empty() {
                eprintln!("keeping results of the {} completed case(s)", failure.completed.len());
                write_cases(cli, s, command, &failure.completed)?;
            }
            let msg = failure.to_string();
            Err(if failure.error.is_config() {
                Failure::Config(msg)
            } else {
                Failure::Runtime(msg)
            })
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let s = setup(cli)?;
    match &cli.command {
        Command::Validate => {
            let net = &s.network;
            println!("network {}", net.name);
            println!(
                "  {} buses, {} lines, {} switchgear, {} generators",
                net.buses.len(),
                net.lines.len(),
                net.switchgear.len(),
                net.generators.len()
            );
            println!(
                "  {} customers, {} households, {} batteries, {} EV parks",
                net.total_customers(),
                net.total_households(),
                net.batteries.len(),
                net.ev_parks.len()
            );
            println!(
                "  {:.3} failures/yr expected, radial: {}",
                net.lines.iter().map(|l| l.annual_failures()).sum::<f64>(),
                net.validate_radial()
            );
            for case in &s.config.cases {
                let sim = experiments::prepare(net, &s.config, case, None)?;
                let fleet: u32 = sim.network().ev_parks.iter().map(|p| p.max_fleet).sum();
                println!("  {}: ok, {fleet} EVs", case.name);
            }
            Ok(())
        }
        Command::Run { case } => {
            let spec = resolve_case(&s.config, case)?.clone();
            run_cases(cli, &s, "run", &[spec])
        }
        Command::Cases => run_cases(cli, &s, "cases", &s.config.cases.clone()),
        Command::Factorial => {
            let design = s
                .config
                .factorial
                .clone()
                .ok_or_else(|| Failure::Config("the campaign defines no factorial design".into()))?;
            check_out(
                cli,
                vec!["factorial.csv".into(), Format::Manifest.file_name().into()],
            )?;
            let cells = experiments::run_factorial(&s.network, &s.config, &design, cli.threads)?;
            let table = output::factorial_csv(&cells);
            print!("{table}");
            let mut w = ResultWriter::new(&cli.out, cli.force);
            w.add("factorial.csv", table);
            let meta = RunMeta::new("factorial", &s.config, &s.dataset_text);
            let written = w.finish(formats(cli).contains(&Format::Manifest).then_some(&meta))?;
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} factorial cell(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
