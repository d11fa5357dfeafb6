//! Environment counts for optimized programs: what is left in the code,
//! and what a run allocates.

use std::fmt;

use crate::interp::Counters;
use crate::ir::{Code, InstrKind, Program, Version};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvUse {
    NoEnv,
    /// Every environment created is a stub.
    StubEnv,
    FullEnv,
}

/// Environments created in `code` outside of blocks that deoptimize.
fn mkenvs(code: &Code) -> Vec<bool> {
    code.blocks
        .iter()
        .filter(|b| !matches!(b.terminator().map(|t| &t.kind), Some(InstrKind::Deopt { .. })))
        .flat_map(|b| b.instrs.iter())
        .filter_map(|i| match i.kind {
            InstrKind::MkEnv { stub, .. } => Some(stub),
            _ => None,
        })
        .collect()
}

pub fn classify(v: &Version) -> EnvUse {
    let stubs: Vec<bool> = v.codes().flat_map(mkenvs).collect();
    if stubs.is_empty() {
        EnvUse::NoEnv
    } else if stubs.iter().all(|s| *s) {
        EnvUse::StubEnv
    } else {
        EnvUse::FullEnv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StaticStats {
    /// Optimized versions of closures; top-level code is left out.
    pub closures_compiled: usize,
    pub no_env: usize,
    pub stub_env: usize,
    pub full_env: usize,
}

fn pct(n: u64, of: u64) -> f64 {
    if of == 0 {
        0.0
    } else {
        100.0 * n as f64 / of as f64
    }
}

impl StaticStats {
    pub fn pct_no_env(&self) -> f64 {
        pct(self.no_env as u64, self.closures_compiled as u64)
    }

    pub fn pct_stub_env(&self) -> f64 {
        pct(self.stub_env as u64, self.closures_compiled as u64)
    }

    pub fn pct_full_env(&self) -> f64 {
        pct(self.full_env as u64, self.closures_compiled as u64)
    }
}

/// Classify every optimized version of every closure.
pub fn static_stats(p: &Program) -> StaticStats {
    let mut s = StaticStats::default();
    for f in p.functions.iter().filter(|f| f.id != p.entry) {
        for v in &f.versions[1..] {
            s.closures_compiled += 1;
            match classify(v) {
                EnvUse::NoEnv => s.no_env += 1,
                EnvUse::StubEnv => s.stub_env += 1,
                EnvUse::FullEnv => s.full_env += 1,
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DynamicStats {
    pub baseline_envs_created: u64,
    pub optimized_envs_created: u64,
    pub optimized_stub_envs: u64,
}

impl DynamicStats {
    pub fn new(baseline: &Counters, optimized: &Counters) -> Self {
        DynamicStats {
            baseline_envs_created: baseline.envs_created,
            optimized_envs_created: optimized.envs_created,
            optimized_stub_envs: optimized.stub_envs_created,
        }
    }

    pub fn reduction_pct(&self) -> f64 {
        let saved = self.baseline_envs_created as i64 - self.optimized_envs_created as i64;
        if self.baseline_envs_created == 0 {
            0.0
        } else {
            100.0 * saved as f64 / self.baseline_envs_created as f64
        }
    }

    /// Share of the environments the optimized run created that were stubs.
    pub fn stubbed_share_pct(&self) -> f64 {
        pct(self.optimized_stub_envs, self.optimized_envs_created + self.optimized_stub_envs)
    }
}

/// One line of the stats report.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRecord {
    pub program: String,
    pub stat: StaticStats,
    pub dynamic: DynamicStats,
}

impl fmt::Display for StatsRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "program={} closures_compiled={} pct_full_env={:.1} pct_stub_env={:.1} pct_no_env={:.1} \
             baseline_envs_created={} optimized_envs_created={} reduction_pct={:.1} stubbed_share_pct={:.1}",
            self.program,
            self.stat.closures_compiled,
            self.stat.pct_full_env(),
            self.stat.pct_stub_env(),
            self.stat.pct_no_env(),
            self.dynamic.baseline_envs_created,
            self.dynamic.optimized_envs_created,
            self.dynamic.reduction_pct(),
            self.dynamic.stubbed_share_pct(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;
    use crate::ir::{parse_ir, print_ir};
    use crate::lower::lower_program;
    use crate::passes::{optimize_program, PipelineConfig};

    /// Count from printed IR text, independently of the instruction types.
    fn recount(text: &str) -> EnvUse {
        let mut full = 0;
        let mut stub = 0;
        for block in text.split("\nBB").skip(1) {
            if block.lines().any(|l| l.trim_start().starts_with("Deopt(")) {
                continue;
            }
            for l in block.lines().filter(|l| l.contains("= MkEnv(")) {
                if l.trim_end().ends_with(" stub") {
                    stub += 1;
                } else {
                    full += 1;
                }
            }
        }
        match (full, stub) {
            (0, 0) => EnvUse::NoEnv,
            (0, _) => EnvUse::StubEnv,
            _ => EnvUse::FullEnv,
        }
    }

    #[test]
    fn counts_agree_with_printed_ir() {
        let srcs = [
            "function(){answer<-42; answer}",
            "h <- function() assign(\"x\", 2, parent.frame())\nf <- function() { x <- 1; h(); x }\nf()",
            "mk <- function(n) function(x) x + n\nadd2 <- mk(2)\nadd2(5)",
        ];
        for src in srcs {
            let p = lower_program(&parse(src).unwrap());
            let o = optimize_program(&p, &PipelineConfig::default(), &mut |_| {});
            for f in &o.functions {
                for v in &f.versions {
                    let text = print_ir(v);
                    assert_eq!(classify(v), recount(&text), "{text}");
                    assert_eq!(classify(&parse_ir(&text).unwrap()), classify(v));
                }
            }
        }
    }

    #[test]
    fn percentages_add_up() {
        let s = StaticStats { closures_compiled: 3, no_env: 1, stub_env: 1, full_env: 1 };
        let total = s.pct_no_env() + s.pct_stub_env() + s.pct_full_env();
        assert!((total - 100.0).abs() < 1e-9);
        let d = DynamicStats { baseline_envs_created: 10, optimized_envs_created: 4, optimized_stub_envs: 4 };
        assert_eq!(d.reduction_pct(), 60.0);
        assert_eq!(d.stubbed_share_pct(), 50.0);
    }
}
