//! Random program generator for differential testing.
//!
//! Programs are deterministic in the seed, never recurse, and only loop a
//! bounded number of times.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    /// Number of top-level functions.
    pub max_functions: usize,
    pub max_stmts: usize,
    pub max_depth: usize,
    /// Chance that a statement uses a reflective builtin.
    pub reflective_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_functions: 4, max_stmts: 5, max_depth: 3, reflective_rate: 0.0 }
    }
}

struct Fun {
    name: String,
    arity: usize,
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    funs: Vec<Fun>,
    fresh: usize,
}

/// A generated program's source text.
pub fn generate(seed: u64, cfg: &GenConfig) -> String {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), cfg: *cfg, funs: Vec::new(), fresh: 0 };
    g.program()
}

/// A reflection-free program with at most `size` statements per block.
pub fn generate_program(seed: u64, size: usize) -> String {
    generate(seed, &GenConfig { max_stmts: size, ..Default::default() })
}

impl Gen {
    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{}{}", prefix, self.fresh)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p.clamp(0.0, 1.0))
    }

    fn program(&mut self) -> String {
        let mut out = Vec::new();
        let mut globals = vec!["g0".to_string()];
        out.push(format!("g0 <- {}", self.rng.gen_range(0..5)));
        let n = self.rng.gen_range(1..=self.cfg.max_functions.max(1));
        for _ in 0..n {
            let name = self.name("f");
            let arity = self.rng.gen_range(0..=2);
            let params: Vec<String> = (0..arity).map(|k| format!("p{}", k)).collect();
            let mut scope = globals.clone();
            scope.extend(params.iter().cloned());
            let body = self.block(&mut scope, 0);
            out.push(format!("{} <- function({}) {}", name, params.join(", "), body));
            self.funs.push(Fun { name, arity });
            if self.chance(0.3) {
                let g = self.name("g");
                let e = self.expr(&globals, 1);
                out.push(format!("{} <- {}", g, e));
                globals.push(g);
            }
        }
        let mut scope = globals;
        for _ in 0..self.rng.gen_range(1..=3) {
            let s = self.stmt(&mut scope, 1);
            out.push(s);
        }
        let last = self.call(&scope, 1);
        out.push(last);
        out.join("\n")
    }

    fn block(&mut self, scope: &mut Vec<String>, depth: usize) -> String {
        let n = self.rng.gen_range(1..=self.cfg.max_stmts.max(1));
        let mut stmts = Vec::new();
        for _ in 0..n {
            stmts.push(self.stmt(scope, depth + 1));
        }
        stmts.push(self.expr(scope, depth + 1));
        format!("{{ {} }}", stmts.join("; "))
    }

    fn stmt(&mut self, scope: &mut Vec<String>, depth: usize) -> String {
        let reflective = self.cfg.reflective_rate;
        if reflective > 0.0 && self.chance(reflective) {
            return self.reflective(scope);
        }
        let deep = depth >= self.cfg.max_depth;
        let mut k = self.rng.gen_range(0..10);
        if deep && (5..=8).contains(&k) {
            k = 0;
        }
        match k {
            0..=4 => {
                let locals: Vec<&String> = scope.iter().filter(|v| v.starts_with('v')).collect();
                let v = if !locals.is_empty() && self.chance(0.3) {
                    locals.choose(&mut self.rng).unwrap().to_string()
                } else {
                    self.name("v")
                };
                let e = self.expr(scope, depth);
                if !scope.contains(&v) {
                    scope.push(v.clone());
                }
                format!("{} <- {}", v, e)
            }
            5 => {
                let c = self.expr(scope, depth);
                let mut inner = scope.clone();
                let a = self.block(&mut inner, depth);
                let mut inner = scope.clone();
                let b = self.block(&mut inner, depth);
                format!("if ({}) {} else {}", c, a, b)
            }
            6 | 7 => {
                let i = self.name("i");
                let n = self.rng.gen_range(1..=3);
                let mut inner = scope.clone();
                inner.push(i.clone());
                let body = self.block(&mut inner, depth);
                scope.push(i.clone());
                format!("{i} <- 0; while ({i} < {n}) {{ {i} <- {i} + 1; {body} }}")
            }
            8 => {
                let h = self.name("h");
                let mut inner = scope.clone();
                inner.push("q".into());
                let body = self.block(&mut inner, depth + 1);
                let arg = self.arg(scope, depth);
                let r = self.name("v");
                scope.push(r.clone());
                format!("{h} <- function(q) {body}; {r} <- {h}({arg})")
            }
            _ => self.call(scope, depth),
        }
    }

    fn reflective(&mut self, scope: &mut Vec<String>) -> String {
        let v = self.name("v");
        match self.rng.gen_range(0..4) {
            0 => {
                scope.push(v.clone());
                format!("assign(\"{}\", {}, environment())", v, self.rng.gen_range(0..9))
            }
            1 if !scope.is_empty() => {
                let x = scope.choose(&mut self.rng).unwrap().clone();
                format!("{} <- get(\"{}\", environment())", v, x)
            }
            2 if !scope.is_empty() => {
                let x = scope.choose(&mut self.rng).unwrap().clone();
                format!("assign(\"{}\", {}, parent.frame())", x, self.rng.gen_range(0..9))
            }
            _ => format!("{} <- environment()", v),
        }
    }

    fn call(&mut self, scope: &[String], depth: usize) -> String {
        if self.funs.is_empty() {
            return self.expr(scope, depth);
        }
        let k = self.rng.gen_range(0..self.funs.len());
        let (name, arity) = (self.funs[k].name.clone(), self.funs[k].arity);
        let args: Vec<String> = (0..arity).map(|_| self.arg(scope, depth)).collect();
        format!("{}({})", name, args.join(", "))
    }

    /// A call argument, sometimes with a side effect inside the promise.
    fn arg(&mut self, scope: &[String], depth: usize) -> String {
        if self.chance(0.2) {
            let v = self.name("w");
            let e = self.expr(scope, depth + 1);
            format!("{{ {v} <- {e}; {v} }}")
        } else {
            self.expr(scope, depth + 1)
        }
    }

    fn expr(&mut self, scope: &[String], depth: usize) -> String {
        let leaf = depth >= self.cfg.max_depth + 1;
        match self.rng.gen_range(0..8) {
            0..=2 if !scope.is_empty() => scope.choose(&mut self.rng).unwrap().clone(),
            3 | 4 if !leaf => {
                let op = *["+", "-", "*", "<", "=="].choose(&mut self.rng).unwrap();
                let a = self.expr(scope, depth + 1);
                let b = self.expr(scope, depth + 1);
                format!("({} {} {})", a, op, b)
            }
            5 if !leaf && !self.funs.is_empty() => self.call(scope, depth + 1),
            6 if !leaf => {
                let c = self.expr(scope, depth + 1);
                let a = self.expr(scope, depth + 1);
                let b = self.expr(scope, depth + 1);
                format!("if ({}) {} else {}", c, a, b)
            }
            _ => self.rng.gen_range(0..10).to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    const SNAPSHOT: &str = r#"g0 <- 3
f1 <- function(p0) { h2 <- function(q) { p0; if (6) q else 0; v3 <- 6; v4 <- (5 + 6); v5 <- (9 + g0); (v5 * 9) }; v6 <- h2((p0 + 8)); p0; i7 <- 0; while (i7 < 1) { i7 <- i7 + 1; { v8 <- 6; i9 <- 0; while (i9 < 2) { i9 <- i9 + 1; { v10 <- i7; v11 <- 1; (5 + 9) } }; v8 <- i7; v8 } }; if (((4 + 3) * (v6 == i7))) (i7 + (2 < 5)) else v6 }
f12 <- function(p0, p1) { v13 <- f1(4); p0 }
f14 <- function() { v15 <- g0; v16 <- v15; h17 <- function(q) { v16 <- (2 * v16); v16 <- f12(4, v15); 3 }; v18 <- h17(0); g0 }
g19 <- g0
h20 <- function(q) { v21 <- if (7) 2 else 5; f12({ w22 <- 0; w22 }, { w23 <- 6; w23 }); v24 <- (v21 * 8); f12(q, 5); g0 }; v25 <- h20(g19)
v26 <- g0
v27 <- v26
f14()"#;

    #[test]
    fn deterministic_in_seed() {
        let c = GenConfig::default();
        assert_eq!(generate(7, &c), generate(7, &c));
        assert_ne!(generate(7, &c), generate(8, &c));
    }

    #[test]
    fn seed_zero_snapshot() {
        assert_eq!(generate_program(0, 5), SNAPSHOT);
    }

    #[test]
    fn output_parses() {
        let c = GenConfig { reflective_rate: 0.2, ..Default::default() };
        for seed in 0..200 {
            let src = generate(seed, &c);
            parse(&src).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
        }
    }
}
