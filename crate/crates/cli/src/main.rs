use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use pir::gen::{generate, GenConfig};
use pir::interp::ErrorKind;
use pir::ir::print_ir;
use pir::passes::{Pass, PipelineConfig};
use pir_cli::driver::{self, Config, DriverError};

#[derive(Parser)]
#[command(name = "pirc", about = "Compile and run mini-R programs through the PIR optimizer")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Clone)]
struct Opts {
    /// Comma-separated passes making up one pipeline round.
    #[arg(long, global = true)]
    passes: Option<String>,
    #[arg(long, global = true)]
    no_scope: bool,
    #[arg(long, global = true)]
    no_promise_inline: bool,
    /// Print observable events before the result.
    #[arg(long, global = true)]
    trace: bool,
    /// Print the IR after this stage: baseline, optimized, or a pass name.
    #[arg(long, global = true)]
    dump_ir: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimize and execute a program, printing its result.
    Run { file: PathBuf },
    /// Print the IR of every function at each stage.
    Dump { file: PathBuf },
    /// Compare baseline and optimized runs.
    Diff { file: PathBuf },
    /// Environment statistics for every program in a directory.
    Stats { dir: PathBuf },
    /// Generate random programs and diff each.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 0.0)]
        reflective_rate: f64,
    },
}

impl Opts {
    fn explicit(&self) -> bool {
        self.passes.is_some() || self.no_scope || self.no_promise_inline
    }

    fn config(&self) -> Result<Config, DriverError> {
        let mut c = match &self.passes {
            Some(list) => Config { name: list.clone(), pipeline: PipelineConfig::only(driver::parse_passes(list)?) },
            None => Config::full(),
        };
        if self.no_scope {
            c.pipeline = c.pipeline.without(Pass::Scope);
            c.name.push_str(" no-scope");
        }
        if self.no_promise_inline {
            c.pipeline = c.pipeline.without(Pass::PromiseInline);
            c.name.push_str(" no-promise-inline");
        }
        Ok(c)
    }

    /// Configurations to compare: the chosen one, or all of them.
    fn configs(&self) -> Result<Vec<Config>, DriverError> {
        if self.explicit() {
            Ok(vec![self.config()?])
        } else {
            Ok(Config::all())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(cli: &Cli) -> Result<i32, DriverError> {
    match &cli.cmd {
        Cmd::Run { file } => cmd_run(file, &cli.opts),
        Cmd::Dump { file } => cmd_dump(file, &cli.opts),
        Cmd::Diff { file } => cmd_diff(file, &cli.opts),
        Cmd::Stats { dir } => cmd_stats(dir),
        Cmd::Fuzz { n, reflective_rate } => cmd_fuzz(cli.opts.seed, *n, *reflective_rate, &cli.opts),
    }
}

fn print_program(title: &str, p: &pir::ir::Program, version: Option<usize>) {
    for f in &p.functions {
        for (k, v) in f.versions.iter().enumerate() {
            if version.is_none_or(|x| x == k) || (version == Some(1) && k > 0) {
                println!("## {} fun{} {} version {}", title, f.id, f.name, k);
                print!("{}", print_ir(v));
            }
        }
    }
}

fn cmd_run(file: &Path, opts: &Opts) -> Result<i32, DriverError> {
    let p = driver::load_file(file)?;
    let cfg = opts.config()?;
    let o = dump_stages(&p, &cfg, opts.dump_ir.as_deref())?;
    let r = driver::run_optimized(&o);
    if opts.trace {
        for e in &r.trace {
            println!("{}", e);
        }
        let c = r.counters;
        println!(
            "COUNTERS envs_created={} stub_envs_created={} stubs_materialized={} deopts_taken={} calls={}",
            c.envs_created, c.stub_envs_created, c.stubs_materialized, c.deopts_taken, c.calls
        );
    }
    println!("{}", r.outcome());
    Ok(match r.error_kind() {
        None => 0,
        Some(ErrorKind::Internal) => 3,
        Some(_) => 1,
    })
}

/// Optimize, printing the IR after the requested stage (all stages if `stage` is "all").
fn dump_stages(p: &pir::ir::Program, cfg: &Config, stage: Option<&str>) -> Result<pir::ir::Program, DriverError> {
    let all = stage == Some("all");
    if all || stage == Some("baseline") {
        print_program("baseline", p, Some(0));
    }
    let mut observer = |e: pir::passes::PassEvent| {
        if all || stage == Some(e.pass.name()) {
            let note = if e.rejected.is_some() { " (rejected)" } else { "" };
            println!("## after {}{} fun{}", e.pass, note, e.fun);
            print!("{}", print_ir(e.version));
        }
    };
    let o = driver::optimize_observed(p, &cfg.pipeline, &mut observer)?;
    if all || stage == Some("optimized") {
        print_program("optimized", &o, Some(1));
    }
    Ok(o)
}

fn cmd_dump(file: &Path, opts: &Opts) -> Result<i32, DriverError> {
    let p = driver::load_file(file)?;
    let cfg = opts.config()?;
    dump_stages(&p, &cfg, Some(opts.dump_ir.as_deref().unwrap_or("all")))?;
    Ok(0)
}

fn cmd_diff(file: &Path, opts: &Opts) -> Result<i32, DriverError> {
    let p = driver::load_file(file)?;
    let results = driver::compare(&p, &opts.configs()?)?;
    println!("baseline: {} envs_created={}", results[0].baseline.outcome(), results[0].baseline.counters.envs_created);
    let mut ok = true;
    for c in &results {
        println!("{}", c);
        ok &= c.matches();
    }
    Ok(if ok { 0 } else { 2 })
}

fn cmd_stats(dir: &Path) -> Result<i32, DriverError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mr"))
        .collect();
    files.sort();
    let records: Vec<Result<String, DriverError>> = files
        .par_iter()
        .map(|f| {
            let name = f.file_stem().unwrap().to_string_lossy().into_owned();
            Ok(driver::stats_record(&name, &driver::load_file(f)?)?.to_string())
        })
        .collect();
    for r in records {
        println!("{}", r?);
    }
    Ok(0)
}

fn cmd_fuzz(seed: u64, n: u64, reflective_rate: f64, opts: &Opts) -> Result<i32, DriverError> {
    let gen = GenConfig { reflective_rate, ..Default::default() };
    let configs = if opts.explicit() { vec![opts.config()?] } else { vec![Config::full()] };
    let results: Vec<(u64, Result<Vec<String>, DriverError>)> = (seed..seed + n)
        .into_par_iter()
        .map(|s| {
            let out = driver::load(&generate(s, &gen)).and_then(|p| driver::compare(&p, &configs)).map(|cs| {
                cs.iter().filter(|c| !c.matches()).map(|c| c.to_string()).collect()
            });
            (s, out)
        })
        .collect();
    let mut bad = 0;
    for (s, r) in results {
        match r {
            Ok(m) if m.is_empty() => {}
            Ok(m) => {
                bad += 1;
                println!("seed {}: {}", s, m.join("; "));
            }
            Err(e) => return Err(e),
        }
    }
    println!("fuzz: {} programs, {} mismatches", n, bad);
    Ok(if bad == 0 { 0 } else { 2 })
}
