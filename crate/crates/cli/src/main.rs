use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use logconn_cli::document::{retruncate, Arg, ArgKind, Command};
use logconn_cli::{parse_document, run_jobs, Job, Report, Verdict};
use serde_json::json;

#[derive(Parser)]
#[command(name = "logconn", version, about = "Run analyses of logarithmic connections described in a JSON document")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Document to read; standard input when omitted.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Report destination; standard output when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Re-truncate every object to this x-degree on load.
    #[arg(long, global = true)]
    trunc: Option<u32>,
    /// Re-truncate u-extended objects to this u-degree on load.
    #[arg(long = "u-trunc", global = true)]
    u_trunc: Option<u32>,
    /// Run one job with these arguments instead of the document's jobs.
    /// Integers bind numeric arguments, anything else names an object.
    #[arg(long = "arg", global = true, value_name = "KEY=VALUE")]
    args: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Integrability and nilpotence of residues.
    #[command(name = "check")]
    Check,
    #[command(name = "normal-form")]
    NormalForm,
    #[command(name = "reduce")]
    Reduce,
    #[command(name = "expand")]
    Expand,
    #[command(name = "kernel-cokernel")]
    KernelCokernel,
    #[command(name = "sections")]
    Sections,
    #[command(name = "cohomology")]
    Cohomology,
    #[command(name = "ext1")]
    Ext1,
    #[command(name = "bicomplex-verify")]
    BicomplexVerify,
    #[command(name = "lift-rank1")]
    LiftRank1,
    #[command(name = "push-forward")]
    PushForward,
    #[command(name = "ga-rep")]
    GaRep,
    /// Every job in the document.
    #[command(name = "run")]
    Run,
}

impl Sub {
    fn command(self) -> Option<Command> {
        Some(match self {
            Sub::Check => Command::Check,
            Sub::NormalForm => Command::NormalForm,
            Sub::Reduce => Command::Reduce,
            Sub::Expand => Command::Expand,
            Sub::KernelCokernel => Command::KernelCokernel,
            Sub::Sections => Command::Sections,
            Sub::Cohomology => Command::Cohomology,
            Sub::Ext1 => Command::Ext1,
            Sub::BicomplexVerify => Command::BicomplexVerify,
            Sub::LiftRank1 => Command::LiftRank1,
            Sub::PushForward => Command::PushForward,
            Sub::GaRep => Command::GaRep,
            Sub::Run => return None,
        })
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("logconn: {msg}");
    ExitCode::from(2)
}

fn adhoc_job(command: Command, raw: &[String], doc: &logconn_cli::Document) -> Result<Job, String> {
    let mut args = std::collections::BTreeMap::new();
    for a in raw {
        let (k, v) = a.split_once('=').ok_or_else(|| format!("--arg {a}: expected KEY=VALUE"))?;
        let spec = command
            .args()
            .iter()
            .find(|s| s.name == k)
            .ok_or_else(|| format!("{command} takes no argument \"{k}\""))?;
        let arg = match spec.kind {
            ArgKind::Int => Arg::Int(v.parse().map_err(|_| format!("--arg {k}: expected an integer"))?),
            ArgKind::Ref if doc.objects.contains_key(v) => Arg::Ref(v.to_string()),
            ArgKind::Ref => return Err(format!("dangling reference: no object named \"{v}\"")),
        };
        args.insert(k.to_string(), arg);
    }
    if let Some(s) = command.args().iter().find(|s| s.required && !args.contains_key(s.name)) {
        return Err(format!("{command} needs --arg {}=...", s.name));
    }
    Ok(Job { command, args })
}

fn render(reports: &[Report], format: Format) -> String {
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    match format {
        Format::Json => {
            let body = json!({
                "reports": reports.iter().map(Report::to_json).collect::<Vec<_>>(),
                "summary": {
                    "jobs": reports.len(),
                    "pass": count(Verdict::Pass),
                    "fail": count(Verdict::Fail),
                    "info": count(Verdict::Info),
                    "error": count(Verdict::Error),
                },
            });
            let mut s = serde_json::to_string_pretty(&body).expect("JSON values serialize");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s: String = reports.iter().map(|r| r.to_text() + "\n").collect();
            s.push_str(&format!(
                "{} jobs: {} pass, {} fail, {} info, {} error\n",
                reports.len(),
                count(Verdict::Pass),
                count(Verdict::Fail),
                count(Verdict::Info),
                count(Verdict::Error)
            ));
            s
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("LOGCONN_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => return usage(format!("LOGCONN_THREADS={n} is not a positive integer")),
        }
    }
    let mut text = String::new();
    let read = match &cli.input {
        Some(p) => std::fs::read_to_string(p).map(|t| text = t),
        None => std::io::stdin().read_to_string(&mut text).map(|_| ()),
    };
    if let Err(e) = read {
        return usage(format!("cannot read input: {e}"));
    }
    let doc = match parse_document(&text) {
        Ok(d) => d,
        Err(d) => {
            let name = cli.input.as_ref().map_or("<stdin>".into(), |p| p.display().to_string());
            return usage(format!("{name}:{d}"));
        }
    };
    let doc = if cli.trunc.is_some() || cli.u_trunc.is_some() {
        match retruncate(&doc, cli.trunc, cli.u_trunc) {
            Ok(d) => d,
            Err(e) => return usage(e),
        }
    } else {
        doc
    };
    let jobs: Vec<(usize, Job)> = match (cli.command.command(), cli.args.is_empty()) {
        (None, true) => doc.jobs.iter().cloned().enumerate().collect(),
        (None, false) => return usage("--arg needs a specific command"),
        (Some(c), false) => match adhoc_job(c, &cli.args, &doc) {
            Ok(j) => vec![(0, j)],
            Err(e) => return usage(e),
        },
        (Some(c), true) => doc.jobs.iter().cloned().enumerate().filter(|(_, j)| j.command == c).collect(),
    };
    if jobs.is_empty() {
        return usage("no jobs to run; add jobs to the document or pass --arg");
    }
    let reports = run_jobs(&doc, &jobs);
    let out = render(&reports, cli.format);
    let written = match &cli.output {
        Some(p) => std::fs::write(p, out),
        None => std::io::stdout().write_all(out.as_bytes()),
    };
    if let Err(e) = written {
        return usage(format!("cannot write report: {e}"));
    }
    if reports.iter().all(|r| r.verdict.ok()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
