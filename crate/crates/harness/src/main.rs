use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use osgood_lab::config::{parse_assignment, read_config_file, Param, Params};
use osgood_lab::manifest::{compare_dirs, default_out, execute, RunManifest};
use osgood_lab::modules::Module;
use osgood_lab::{run_preset, Error, ExperimentConfig, Preset, Result};

#[derive(Parser)]
#[command(
    name = "osgood-lab",
    version,
    about = "Numerical experiments on Osgood flows, transported singular structures and singular vortices",
    after_help = "Run a named experiment with `osgood-lab <preset> [--set key=value ...] [--config FILE] [--out DIR]`.\nSee `osgood-lab list` for the presets and `osgood-lab keys <name>` for their parameters."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = assignment)]
    set: Vec<(String, String)>,
    /// File of `key = value` lines, applied before --set.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// List presets with the statement each one checks.
    List,
    /// Show the parameters of a preset or module command.
    Keys { name: String },
    /// Compare two run directories metric by metric.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Largest relative metric difference that still counts as a match.
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
    /// Modulus tables.
    Modulus {
        #[command(subcommand)]
        cmd: ModulusCmd,
    },
    /// Local seminorm table of a singular profile.
    Seminorm(RunArgs),
    /// Flow trajectories and separation certificates.
    Flow {
        #[command(subcommand)]
        cmd: FlowCmd,
    },
    /// Semi-Lagrangian transport of singular data.
    Transport {
        #[command(subcommand)]
        cmd: RunCmd,
    },
    /// Pseudo-spectral Euler with singular vortices.
    Euler {
        #[command(subcommand)]
        cmd: RunCmd,
    },
    /// Stability experiments.
    Stability {
        #[command(subcommand)]
        cmd: StabilityCmd,
    },
    #[command(external_subcommand)]
    Preset(Vec<String>),
}

#[derive(Subcommand)]
enum ModulusCmd {
    /// CSV of z, L, M, R.
    Eval(RunArgs),
}

#[derive(Subcommand)]
enum FlowCmd {
    /// CSV of t, x1, x2.
    Trace(RunArgs),
    /// Certificate records as JSON lines.
    Certify(RunArgs),
}

#[derive(Subcommand)]
enum RunCmd {
    Run(RunArgs),
}

#[derive(Subcommand)]
enum StabilityCmd {
    /// Exterior and interior differences of two regularized runs.
    Lightcone(RunArgs),
    /// Interpolation inequality rows.
    Interp(RunArgs),
}

/// Arguments after a preset name.
#[derive(Parser)]
#[command(no_binary_name = true)]
struct PresetCli {
    #[command(flatten)]
    run: RunArgs,
    /// Iterated-log order; with --pmax, prints the lemma-lp table instead of running the preset.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    pmax: Option<f64>,
}

fn assignment(s: &str) -> std::result::Result<(String, String), String> {
    parse_assignment(s).map_err(|e| e.to_string())
}

fn overrides(a: &RunArgs) -> Result<Vec<(String, String)>> {
    let mut kv = match &a.config {
        Some(p) => read_config_file(p)?,
        None => Vec::new(),
    };
    kv.extend(a.set.iter().cloned());
    Ok(kv)
}

fn verdict(m: &RunManifest) -> ExitCode {
    if m.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_module(m: Module, a: &RunArgs) -> Result<ExitCode> {
    let params = Params::resolve(m.schema(), &overrides(a)?)?;
    let out = a.out.as_deref();
    let mut primary = None;
    let man = execute(m.label(), m.describe(), params.echo(), out, || {
        let o = m.run(&params)?;
        primary = o.artifacts.iter().find(|(n, _)| n == m.primary()).map(|(_, b)| b.clone());
        Ok(o)
    })?;
    match (out, primary) {
        (None, Some(bytes)) => print!("{}", String::from_utf8_lossy(&bytes)),
        _ => print!("{}", man.summary()),
    }
    for c in man.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {}: {}", c.name, c.detail);
    }
    Ok(verdict(&man))
}

fn run_named(args: &[String]) -> Result<ExitCode> {
    let (name, rest) = args.split_first().ok_or_else(|| Error::Usage("missing preset name".into()))?;
    let preset = Preset::from_name(name)?;
    let cli = PresetCli::try_parse_from(rest).map_err(|e| Error::Usage(e.to_string()))?;
    if cli.n.is_some() || cli.pmax.is_some() {
        if preset != Preset::LemmaLp {
            return Err(Error::Usage("--n and --pmax belong to lemma-lp".into()));
        }
        let mut run = cli.run.clone();
        if let Some(n) = cli.n {
            run.set.push(("n".into(), n.to_string()));
        }
        if let Some(p) = cli.pmax {
            run.set.push(("p_max".into(), p.to_string()));
        }
        return run_module(Module::LemmaLp, &run);
    }
    let out = cli.run.out.clone().unwrap_or_else(|| default_out(preset.name()));
    let cfg = ExperimentConfig::new(name, &overrides(&cli.run)?, Some(out.clone()))?;
    let man = run_preset(&cfg)?;
    print!("{}", man.summary());
    println!("  outputs in {}", out.display());
    Ok(verdict(&man))
}

fn print_keys(schema: &[Param]) {
    for p in schema {
        println!(
            "  {:<16} {:<11} default {:<24} {}",
            p.key,
            p.kind.to_string(),
            p.default,
            p.doc
        );
    }
}

fn keys(name: &str) -> Result<()> {
    if let Ok(p) = Preset::from_name(name) {
        println!("{}: {}", p.name(), p.statement());
        print_keys(p.schema());
        if p != Preset::LemmaLp {
            return Ok(());
        }
        println!();
    }
    let m = Module::ALL
        .into_iter()
        .find(|m| m.label() == name || m.label().replace('-', " ") == name)
        .ok_or_else(|| Error::Usage(format!("no preset or module command named {name:?}")))?;
    println!("{} (module command): {}", m.label(), m.describe());
    print_keys(m.schema());
    Ok(())
}

fn compare(a: &Path, b: &Path, tol: f64) -> Result<ExitCode> {
    let d = compare_dirs(a, b)?;
    print!("{}", d.to_csv());
    for n in &d.changed_outputs {
        println!("# output differs: {n}");
    }
    for n in &d.verdict_changes {
        println!("# verdict differs: {n}");
    }
    for n in d.only_in_a.iter().chain(&d.only_in_b) {
        println!("# metric in one run only: {n}");
    }
    println!(
        "# max relative difference {:.3e}{}",
        d.max_rel,
        if d.same_inputs { "" } else { " (inputs differ)" }
    );
    let ok = d.max_rel <= tol && d.only_in_a.is_empty() && d.only_in_b.is_empty() && d.verdict_changes.is_empty();
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::List => {
            for p in Preset::ALL {
                println!("{:<24} {}", p.name(), p.statement());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Keys { name } => keys(&name).map(|_| ExitCode::SUCCESS),
        Cmd::Compare { a, b, tol } => compare(&a, &b, tol),
        Cmd::Modulus {
            cmd: ModulusCmd::Eval(a),
        } => run_module(Module::ModulusEval, &a),
        Cmd::Seminorm(a) => run_module(Module::Seminorm, &a),
        Cmd::Flow { cmd: FlowCmd::Trace(a) } => run_module(Module::FlowTrace, &a),
        Cmd::Flow {
            cmd: FlowCmd::Certify(a),
        } => run_module(Module::FlowCertify, &a),
        Cmd::Transport { cmd: RunCmd::Run(a) } => run_module(Module::TransportRun, &a),
        Cmd::Euler { cmd: RunCmd::Run(a) } => run_module(Module::EulerRun, &a),
        Cmd::Stability {
            cmd: StabilityCmd::Lightcone(a),
        } => run_module(Module::StabilityLightcone, &a),
        Cmd::Stability {
            cmd: StabilityCmd::Interp(a),
        } => run_module(Module::StabilityInterp, &a),
        Cmd::Preset(args) => run_named(&args),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
