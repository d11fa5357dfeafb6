use std::rc::Rc;

use super::{lookup_var, Binding, EnvRef, ErrorKind, Event, Interp, Origin, RtError, RtValue};
use crate::frontend::BuiltinKind;

fn type_error(msg: impl Into<String>) -> RtError {
    RtError::new(ErrorKind::TypeError, msg)
}

fn name_arg(b: BuiltinKind, v: &RtValue) -> Result<String, RtError> {
    match v {
        RtValue::Str(s) if s.len() == 1 => Ok(s[0].clone()),
        other => Err(type_error(format!("{}: invalid name argument {}", b.name(), other.type_name()))),
    }
}

fn env_arg(b: BuiltinKind, v: &RtValue) -> Result<EnvRef, RtError> {
    match v {
        RtValue::Env(e) => Ok(e.clone()),
        other => Err(type_error(format!("{}: expected an environment, found {}", b.name(), other.type_name()))),
    }
}

fn concat(args: &[RtValue]) -> Result<RtValue, RtError> {
    let mut nums = Vec::new();
    let mut strs = Vec::new();
    let (mut any_num, mut any_lgl, mut any_str) = (false, false, false);
    for a in args {
        match a {
            RtValue::Null => {}
            RtValue::Num(v) => {
                any_num = true;
                nums.extend(v.iter().copied());
            }
            RtValue::Lgl(v) => {
                any_lgl = true;
                nums.extend(v.iter().map(|b| if *b { 1.0 } else { 0.0 }));
            }
            RtValue::Str(v) => {
                any_str = true;
                strs.extend(v.iter().cloned());
            }
            other => return Err(type_error(format!("c: cannot combine {}", other.type_name()))),
        }
    }
    if any_str {
        if any_num || any_lgl {
            return Err(type_error("c: cannot mix character and numeric values"));
        }
        return Ok(RtValue::Str(Rc::new(strs)));
    }
    if any_num {
        return Ok(RtValue::Num(Rc::new(nums)));
    }
    if any_lgl {
        return Ok(RtValue::Lgl(Rc::new(nums.into_iter().map(|x| x != 0.0).collect())));
    }
    Ok(RtValue::Null)
}

fn frame_index(v: &RtValue) -> Result<i64, RtError> {
    match v {
        RtValue::Num(x) if x.len() == 1 && x[0].fract() == 0.0 && x[0].is_finite() => Ok(x[0] as i64),
        other => Err(type_error(format!("sys.frame: invalid frame number {}", other))),
    }
}

impl Interp<'_> {
    /// Frame whose exposed environment is `env`, or the innermost frame.
    fn frame_of(&self, env: &EnvRef) -> usize {
        self.frames
            .iter()
            .rposition(|f| f.env.as_ref().is_some_and(|e| Rc::ptr_eq(e, env)))
            .unwrap_or(self.frames.len() - 1)
    }

    fn reflect(&mut self, b: BuiltinKind, detail: String) {
        self.trace.push(Event::Reflect { builtin: b.name(), detail });
    }

    pub(super) fn apply_builtin(
        &mut self,
        b: BuiltinKind,
        args: Vec<RtValue>,
        call_env: EnvRef,
        frame: usize,
    ) -> Result<RtValue, RtError> {
        let desc = b.desc();
        if !desc.arity.accepts(args.len()) {
            return Err(RtError::new(ErrorKind::ArityMismatch, format!("{}: wrong number of arguments", b.name())));
        }
        if args.iter().any(|a| matches!(a, RtValue::Missing)) {
            return Err(RtError::new(ErrorKind::MissingArgumentUsed, format!("{}: argument is missing", b.name())));
        }
        match b {
            BuiltinKind::C => concat(&args),
            BuiltinKind::Get => {
                let name = name_arg(b, &args[0])?;
                let env = env_arg(b, &args[1])?;
                self.reflect(b, name.clone());
                let v = lookup_var(&env, &name)?;
                self.force(v, frame)
            }
            BuiltinKind::Assign => {
                let name = name_arg(b, &args[0])?;
                let env = env_arg(b, &args[2])?;
                self.reflect(b, format!("{} {}", name, args[1]));
                self.materialize(&env);
                env.borrow_mut()
                    .bindings
                    .insert(name, Binding { value: args[1].clone(), origin: Origin::Reflective });
                Ok(args[1].clone())
            }
            BuiltinKind::Rm => {
                let name = name_arg(b, &args[0])?;
                let env = env_arg(b, &args[1])?;
                self.reflect(b, name.clone());
                let removed = env.borrow_mut().bindings.shift_remove(&name).is_some();
                if removed {
                    self.materialize(&env);
                }
                Ok(RtValue::Null)
            }
            BuiltinKind::Environment => {
                self.reflect(b, String::new());
                Ok(RtValue::Env(call_env))
            }
            BuiltinKind::ParentFrame => {
                self.reflect(b, String::new());
                let f = self.frame_of(&call_env);
                Ok(RtValue::Env(self.frames[f].caller_env.clone()))
            }
            BuiltinKind::SysFrame => {
                let k = frame_index(&args[0])?;
                self.reflect(b, k.to_string());
                let base = self.frame_of(&call_env) as i64;
                let target = if k >= 0 { k } else { base + k };
                if target < 0 || target >= self.frames.len() as i64 {
                    return Err(RtError::new(ErrorKind::FrameOutOfRange, format!("sys.frame({}): not that many frames", k)));
                }
                Ok(RtValue::Env(self.frames[target as usize].env.clone().unwrap_or_else(|| self.global.clone())))
            }
        }
    }
}
