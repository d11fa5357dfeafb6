//! Loading, optimizing and comparing programs for the command line.

use std::fmt;
use std::path::Path;

use pir::frontend::parse;
use pir::interp::{run, ErrorKind, RunOptions, RunResult};
use pir::ir::{verify_program, Program};
use pir::lower::lower_program;
use pir::passes::{optimize_program, Pass, PassEvent, PipelineConfig};
use pir::stats::{static_stats, DynamicStats, StatsRecord};

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("syntax error: {0}")]
    Syntax(#[from] pir::frontend::SyntaxError),
    #[error("verifier: {0}")]
    Verify(String),
    #[error("unknown pass '{0}'")]
    UnknownPass(String),
}

impl DriverError {
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Verify(_) => 3,
            _ => 1,
        }
    }
}

pub fn load(src: &str) -> Result<Program, DriverError> {
    let p = lower_program(&parse(src)?);
    check(&p)?;
    Ok(p)
}

pub fn load_file(path: &Path) -> Result<Program, DriverError> {
    load(&std::fs::read_to_string(path)?)
}

fn check(p: &Program) -> Result<(), DriverError> {
    verify_program(p).map_err(|vs| DriverError::Verify(vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")))
}

/// Parse a comma-separated pass list.
pub fn parse_passes(list: &str) -> Result<Vec<Pass>, DriverError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Pass::from_name(s).ok_or_else(|| DriverError::UnknownPass(s.to_string())))
        .collect()
}

/// A named pipeline configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub name: String,
    pub pipeline: PipelineConfig,
}

impl Config {
    pub fn full() -> Config {
        Config { name: "full".into(), pipeline: PipelineConfig::default() }
    }

    pub fn without(p: Pass) -> Config {
        Config { name: format!("no-{}", p), pipeline: PipelineConfig::default().without(p) }
    }

    pub fn only(p: Pass) -> Config {
        Config { name: format!("only-{}", p), pipeline: PipelineConfig::only(vec![p]) }
    }

    /// The full pipeline, both ablations, and every pass on its own.
    pub fn all() -> Vec<Config> {
        let mut out = vec![Config::full(), Config::without(Pass::Scope), Config::without(Pass::PromiseInline)];
        out.extend(Pass::ALL.into_iter().map(Config::only));
        out
    }
}

pub fn optimize(p: &Program, cfg: &PipelineConfig) -> Result<Program, DriverError> {
    optimize_observed(p, cfg, &mut |_| {})
}

pub fn optimize_observed(
    p: &Program,
    cfg: &PipelineConfig,
    observer: &mut dyn FnMut(PassEvent),
) -> Result<Program, DriverError> {
    let o = optimize_program(p, cfg, observer);
    check(&o)?;
    Ok(o)
}

pub fn run_baseline(p: &Program) -> RunResult {
    run(p, &RunOptions::baseline())
}

pub fn run_optimized(p: &Program) -> RunResult {
    run(p, &RunOptions::default())
}

/// Resource limits make runs incomparable: inlining changes call depth.
pub fn hit_limit(r: &RunResult) -> bool {
    matches!(r.error_kind(), Some(ErrorKind::StepLimit | ErrorKind::RecursionLimit))
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub config: String,
    pub baseline: RunResult,
    pub optimized: RunResult,
}

impl Comparison {
    pub fn matches(&self) -> bool {
        hit_limit(&self.baseline)
            || (self.baseline.outcome() == self.optimized.outcome() && self.baseline.trace == self.optimized.trace)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} {} envs_created={} baseline_envs_created={} deopts_taken={}",
            self.config,
            if self.matches() { "ok" } else { "MISMATCH" },
            self.optimized.outcome(),
            self.optimized.counters.envs_created,
            self.baseline.counters.envs_created,
            self.optimized.counters.deopts_taken,
        )
    }
}

pub fn compare(p: &Program, configs: &[Config]) -> Result<Vec<Comparison>, DriverError> {
    let baseline = run_baseline(p);
    configs
        .iter()
        .map(|c| {
            let o = optimize(p, &c.pipeline)?;
            Ok(Comparison { config: c.name.clone(), baseline: baseline.clone(), optimized: run_optimized(&o) })
        })
        .collect()
}

pub fn stats_record(name: &str, p: &Program) -> Result<StatsRecord, DriverError> {
    let o = optimize(p, &PipelineConfig::default())?;
    let base = run_baseline(p);
    let opt = run_optimized(&o);
    Ok(StatsRecord { program: name.to_string(), stat: static_stats(&o), dynamic: DynamicStats::new(&base.counters, &opt.counters) })
}
