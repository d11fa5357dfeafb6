//! Property checks shared by the property tests and the acceptance suite.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::TestRunner;

use pir::analysis::{AbsLoc, Cell, Forward, PromAbs, PromState, PromiseAnalysis, ScopeAnalysis, ScopeState};
use pir::cfg::dominators_from_edges;
use pir::frontend::parse;
use pir::gen::{generate, GenConfig};
use pir::interp::{run, ErrorKind, Origin, RunOptions};
use pir::ir::{verify, InstrKind, Location, Operand, Program, ProgramFacts, Version};
use pir::lower::lower_program;
use pir::passes::{optimize_program, PipelineConfig};

fn graph() -> impl Strategy<Value = Vec<Vec<usize>>> {
    (1usize..=12).prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(0..n, 0..=2), n))
}

fn reachable(succs: &[Vec<usize>], removed: Option<usize>) -> Vec<bool> {
    let mut seen = vec![false; succs.len()];
    if removed == Some(0) {
        return seen;
    }
    let mut work = vec![0];
    seen[0] = true;
    while let Some(b) = work.pop() {
        for &s in &succs[b] {
            if !seen[s] && Some(s) != removed {
                seen[s] = true;
                work.push(s);
            }
        }
    }
    seen
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() })
}

pub fn dominators_match_path_definition() {
    runner(1000).run(&graph(), |succs| {
        let n = succs.len();
        let dom = dominators_from_edges(&succs);
        let live = reachable(&succs, None);
        // a dominates b iff b is unreachable once a is removed.
        let doms: Vec<Vec<bool>> = (0..n)
            .map(|a| {
                let without = reachable(&succs, Some(a));
                (0..n).map(|b| live[a] && live[b] && (a == b || !without[b])).collect()
            })
            .collect();
        for a in 0..n {
            prop_assert_eq!(dom.is_reachable(a), live[a]);
            for b in 0..n {
                prop_assert_eq!(dom.block_dominates(a, b), doms[a][b], "{} dom {}", a, b);
            }
        }
        for b in 0..n {
            // The immediate dominator is the strict dominator every other one dominates.
            let strict: Vec<usize> = (0..n).filter(|&a| a != b && doms[a][b]).collect();
            let idom = strict.iter().copied().find(|&c| strict.iter().all(|&a| doms[a][c]));
            prop_assert_eq!(dom.idom[b], idom, "idom of {}", b);
        }
        for a in (0..n).filter(|&a| live[a]) {
            let frontier: BTreeSet<usize> = (0..n)
                .filter(|&b| live[b] && (0..n).any(|p| live[p] && succs[p].contains(&b) && doms[a][p]))
                .filter(|&b| a == b || !doms[a][b])
                .collect();
            prop_assert_eq!(&dom.frontier[a], &frontier, "frontier of {}", a);
        }
        Ok(())
    })
    .unwrap();
}

fn lowered(src: &str) -> Program {
    lower_program(&parse(src).unwrap())
}

/// Baseline and optimized versions of generated programs, with their facts.
fn version_pool() -> Vec<(Version, ProgramFacts)> {
    let cfg = GenConfig { reflective_rate: 0.2, ..Default::default() };
    let mut out = Vec::new();
    for seed in 0..30 {
        let p = lowered(&generate(seed, &cfg));
        let o = optimize_program(&p, &PipelineConfig::default(), &mut |_| {});
        for f in &o.functions {
            out.extend(f.versions.iter().map(|v| (v.clone(), o.facts.clone())));
        }
    }
    out.retain(|(v, _)| v.body.instrs().count() > 1);
    out
}

thread_local! {
    static POOL: Vec<(Version, ProgramFacts)> = version_pool();
}

fn pick<T: Copy>(rng: &mut impl rand::Rng, xs: &[T]) -> T {
    xs[rng.gen_range(0..xs.len())]
}

fn random_cell(rng: &mut impl rand::Rng, locs: &[AbsLoc]) -> Cell {
    match rng.gen_range(0..6) {
        0 => Cell::Top,
        1 => Cell::empty(),
        _ => Cell::Set((0..rng.gen_range(1..=3)).map(|_| pick(rng, locs)).collect()),
    }
}

fn random_scope(rng: &mut impl rand::Rng, a: &ScopeAnalysis, locs: &[AbsLoc]) -> ScopeState {
    let mut s = ScopeState::default();
    for (e, names) in &a.names {
        for n in names {
            if rng.gen_bool(0.7) {
                s.set(*e, n, random_cell(rng, locs));
            }
        }
    }
    s
}

fn random_prom(rng: &mut impl rand::Rng, a: &PromiseAnalysis, locs: &[Location]) -> PromState {
    let mut s = PromState::default();
    for &r in &a.mkargs {
        let p = match rng.gen_range(0..4) {
            0 => PromAbs::Bot,
            1 => PromAbs::Forced(pick(rng, locs)),
            2 => PromAbs::Leaked,
            _ => PromAbs::Top,
        };
        s.set(r, p);
    }
    s
}

pub fn transfer_functions_are_monotone() {
    runner(10_000).run(&(any::<usize>(), any::<usize>(), any::<u64>()), |(which, at, seed)| {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        POOL.with(|pool| {
            let (v, facts) = &pool[which % pool.len()];
            let instrs: Vec<_> = v.body.iter().collect();
            let (loc, instr) = instrs[at % instrs.len()];
            let locs: Vec<Location> = instrs.iter().map(|(l, _)| *l).collect();
            let abs: Vec<AbsLoc> =
                std::iter::once(AbsLoc::Undefined).chain(locs.iter().map(|l| AbsLoc::At(*l))).collect();

            let scope = ScopeAnalysis::new(v, facts);
            let lo = random_scope(&mut rng, &scope, &abs);
            let mut hi = lo.clone();
            hi.join_with(&random_scope(&mut rng, &scope, &abs));
            prop_assert!(lo.leq(&hi));
            let (mut lo2, mut hi2) = (lo.clone(), hi.clone());
            scope.transfer(loc, instr, &mut lo2);
            scope.transfer(loc, instr, &mut hi2);
            prop_assert!(lo2.leq(&hi2), "scope transfer at {}: {:?} vs {:?}", loc, lo2, hi2);

            let prom = PromiseAnalysis::new(v, scope);
            let lo = random_prom(&mut rng, &prom, &locs);
            let mut hi = lo.clone();
            prom.join(&mut hi, &random_prom(&mut rng, &prom, &locs));
            prop_assert!(lo.leq(&hi));
            let (mut lo2, mut hi2) = (lo.clone(), hi.clone());
            prom.transfer(loc, instr, &mut lo2);
            prom.transfer(loc, instr, &mut hi2);
            prop_assert!(lo2.leq(&hi2), "promise transfer at {}: {:?} vs {:?}", loc, lo2, hi2);
            Ok(())
        })
    })
    .unwrap();
}

fn hit_limit(k: Option<ErrorKind>) -> bool {
    matches!(k, Some(ErrorKind::StepLimit | ErrorKind::RecursionLimit))
}

/// Every load the interpreter performs on a local environment must see a
/// store the scope analysis predicted.
fn check_loads(p: &Program, opts: &RunOptions) -> Result<usize, String> {
    let r = run(p, &RunOptions { record_loads: true, ..opts.clone() });
    let mut checked = 0;
    let mut solved = std::collections::HashMap::new();
    for obs in &r.loads {
        let v = &p.function(obs.fun).versions[obs.version];
        let (scope, sol) = solved.entry((obs.fun, obs.version)).or_insert_with(|| {
            let a = ScopeAnalysis::new(v, &p.facts);
            let s = a.solve(v, &pir::cfg::compute_dominators(&v.body));
            (a, s)
        });
        let InstrKind::LdVar { env: Operand::Reg(e), .. } = &v.body.instr(obs.loc).kind else { continue };
        if !scope.names.contains_key(e) {
            continue;
        }
        let cell = sol.at(obs.loc).get(*e, &obs.name);
        let expected = match obs.origin {
            None => Some(AbsLoc::Undefined),
            Some(Origin::Code { fun, version, promise: None, loc }) if fun == obs.fun && version == obs.version => {
                Some(AbsLoc::At(loc))
            }
            // Stores from elsewhere are only sound if the cell gave up.
            Some(_) => None,
        };
        let ok = match expected {
            Some(l) => cell.contains(&l),
            None => cell == Cell::Top,
        };
        if !ok {
            return Err(format!("fun{} v{} {} load of {}: observed {:?}, analysis {}", obs.fun, obs.version, obs.loc, obs.name, obs.origin, cell));
        }
        checked += 1;
    }
    Ok(checked)
}

pub fn scope_analysis_predicts_observed_stores() {
    let mut checked = 0;
    for (rate, seeds) in [(0.0, 0..300u64), (0.2, 0..300u64)] {
        let cfg = GenConfig { reflective_rate: rate, ..Default::default() };
        for seed in seeds {
            let src = generate(seed, &cfg);
            let p = lowered(&src);
            let o = optimize_program(&p, &PipelineConfig::default(), &mut |_| {});
            for (prog, opts) in [(&p, RunOptions::baseline()), (&o, RunOptions::default())] {
                match check_loads(prog, &opts) {
                    Ok(n) => checked += n,
                    Err(e) => panic!("seed {seed} rate {rate}: {e}\n{src}"),
                }
            }
        }
    }
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
    for f in std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()) {
        if f.extension().is_some_and(|x| x == "mr") {
            let p = lowered(&std::fs::read_to_string(&f).unwrap());
            let o = optimize_program(&p, &PipelineConfig::default(), &mut |_| {});
            checked += check_loads(&p, &RunOptions::baseline()).unwrap();
            checked += check_loads(&o, &RunOptions::default()).unwrap();
        }
    }
    assert!(checked > 1000, "only {checked} loads observed");
}

/// After every single pass, the intermediate version verifies and, installed
/// as the only optimized version, behaves like the baseline.
pub fn every_pass_preserves_behaviour() {
    let cfgs = [GenConfig::default(), GenConfig { reflective_rate: 0.2, ..Default::default() }];
    let mut events = 0;
    for seed in 0..1000u64 {
        let src = generate(seed, &cfgs[(seed % 2) as usize]);
        let p = lowered(&src);
        let base = run(&p, &RunOptions::baseline());
        if hit_limit(base.error_kind()) {
            continue;
        }
        let mut fails = Vec::new();
        optimize_program(&p, &PipelineConfig::default(), &mut |e| {
            if e.rejected.is_some() {
                fails.push(format!("{} rejected: {:?}", e.pass, e.rejected));
                return;
            }
            events += 1;
            if let Err(vs) = verify(e.version) {
                fails.push(format!("{} fails verification: {:?}", e.pass, vs));
                return;
            }
            let mut q = p.clone();
            q.function_mut(e.fun).versions.push(e.version.clone());
            let r = run(&q, &RunOptions::default());
            if r.outcome() != base.outcome() || r.trace != base.trace {
                fails.push(format!("after {} on fun{}: {} vs {}", e.pass, e.fun, r.outcome(), base.outcome()));
            }
        });
        assert!(fails.is_empty(), "seed {seed}: {:?}\n{src}", fails);
    }
    assert!(events > 1000);
}
