//! Stable program locations: (function, preorder index of the statement).

use crate::lang::{Program, Stmt};
use std::collections::HashMap;
use std::fmt;

/// Function 0 is `main`; function `i + 1` is the `i`-th declaration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc {
    pub func: usize,
    pub idx: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}s{}", self.func, self.idx)
    }
}

pub struct Locations {
    by_addr: HashMap<usize, Loc>,
    pub names: Vec<String>,
}

impl Locations {
    pub fn new(p: &Program) -> Locations {
        let mut by_addr = HashMap::new();
        let mut names = vec!["main".to_string()];
        let mut bodies: Vec<&Stmt> = vec![&p.main];
        for (f, b) in &p.decls {
            names.push(f.clone());
            bodies.push(b);
        }
        for (func, b) in bodies.into_iter().enumerate() {
            let mut idx = 0;
            b.visit(&mut |s| {
                by_addr.insert(s as *const Stmt as usize, Loc { func, idx });
                idx += 1;
            });
        }
        Locations { by_addr, names }
    }

    /// Location of a statement node belonging to the indexed program.
    pub fn of(&self, s: &Stmt) -> Loc {
        self.by_addr[&(s as *const Stmt as usize)]
    }

    pub fn func_id(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).expect("known function")
    }
}
