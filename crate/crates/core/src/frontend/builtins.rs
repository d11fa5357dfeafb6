/// Builtins live as ordinary bindings in the global environment, so user
/// code may shadow them. All of them evaluate their arguments strictly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinKind {
    C,
    Get,
    Assign,
    Rm,
    Environment,
    ParentFrame,
    SysFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Exact(usize),
    Variadic,
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exact(k) => k == n,
            Arity::Variadic => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuiltinDesc {
    pub name: &'static str,
    pub kind: BuiltinKind,
    pub arity: Arity,
    pub strict: bool,
    /// Reads or writes environments other than through its arguments' values.
    pub reflective: bool,
}

const TABLE: &[BuiltinDesc] = &[
    BuiltinDesc { name: "c", kind: BuiltinKind::C, arity: Arity::Variadic, strict: true, reflective: false },
    BuiltinDesc { name: "get", kind: BuiltinKind::Get, arity: Arity::Exact(2), strict: true, reflective: true },
    BuiltinDesc { name: "assign", kind: BuiltinKind::Assign, arity: Arity::Exact(3), strict: true, reflective: true },
    BuiltinDesc { name: "rm", kind: BuiltinKind::Rm, arity: Arity::Exact(2), strict: true, reflective: true },
    BuiltinDesc {
        name: "environment",
        kind: BuiltinKind::Environment,
        arity: Arity::Exact(0),
        strict: true,
        reflective: true,
    },
    BuiltinDesc {
        name: "parent.frame",
        kind: BuiltinKind::ParentFrame,
        arity: Arity::Exact(0),
        strict: true,
        reflective: true,
    },
    BuiltinDesc { name: "sys.frame", kind: BuiltinKind::SysFrame, arity: Arity::Exact(1), strict: true, reflective: true },
];

pub fn builtin_table() -> &'static [BuiltinDesc] {
    TABLE
}

pub fn lookup_builtin(name: &str) -> Option<&'static BuiltinDesc> {
    TABLE.iter().find(|b| b.name == name)
}

impl BuiltinKind {
    pub fn desc(self) -> &'static BuiltinDesc {
        TABLE.iter().find(|b| b.kind == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        self.desc().name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_is_variadic_and_strict() {
        let c = lookup_builtin("c").unwrap();
        assert_eq!(c.arity, Arity::Variadic);
        assert!(c.strict);
    }

    #[test]
    fn environment_takes_nothing() {
        let e = lookup_builtin("environment").unwrap();
        assert_eq!(e.kind, BuiltinKind::Environment);
        assert_eq!(e.arity, Arity::Exact(0));
    }

    #[test]
    fn unknown_is_absent() {
        assert!(lookup_builtin("nosuch").is_none());
    }

    #[test]
    fn every_builtin_is_strict() {
        assert_eq!(builtin_table().len(), 7);
        assert!(builtin_table().iter().all(|b| b.strict));
    }
}
