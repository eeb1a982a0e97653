//! A small imperative language whose interpreter records a trace sample at
//! every function entry and exit.
//!
//! ```text
//! program := fn+
//! fn      := "fn" name "(" params? ")" block
//! stmt    := "let" name "=" expr ";" | name "=" expr ";"
//!          | "if" "(" expr ")" block ("else" block)?
//!          | "return" expr ";" | "halt" ";"
//! expr    := int | name | name "(" args? ")" | expr op expr | "-" expr | "(" expr ")"
//! op      := + - * == != < <= > >=
//! ```
//!
//! Values are 64-bit integers with wrapping arithmetic; comparisons yield
//! 0 or 1 and conditions test for nonzero. `//` and `#` start comments.

mod cases;
mod interp;
mod lexer;
mod parser;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use cases::{
    parse_cases, run_corpus, CaseError, Corpus, CorpusError, InputCase, LabelRule, LabeledRun,
};
pub use interp::{
    run, run_traced, RunOptions, RuntimeError, TracedRun, DEFAULT_MAX_DEPTH, DEFAULT_STEP_BUDGET,
};
pub use parser::parse_program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Var {
        name: String,
        pos: Pos,
    },
    Call {
        name: String,
        args: Vec<Expr>,
        pos: Pos,
    },
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Let {
        name: String,
        value: Expr,
        pos: Pos,
    },
    Assign {
        name: String,
        value: Expr,
        pos: Pos,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
    Return(Expr),
    Halt {
        pos: Pos,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    functions: Vec<Function>,
    index: HashMap<String, usize>,
}

impl Program {
    pub(crate) fn new(functions: Vec<Function>) -> Self {
        let index = functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.clone(), i))
            .collect();
        Program { functions, index }
    }

    pub fn functions(&self) -> &[Function] {
        &self.functions
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.index.get(name).map(|&i| &self.functions[i])
    }

    /// `main` when defined, otherwise the first function in the source.
    pub fn default_entry(&self) -> &Function {
        self.function("main").unwrap_or(&self.functions[0])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("no functions defined")]
    NoFunctions,
    #[error("{pos}: function `{name}` defined twice")]
    DuplicateFunction { name: String, pos: Pos },
    #[error("{pos}: parameter `{name}` repeated")]
    DuplicateParam { name: String, pos: Pos },
    #[error("{pos}: call to undefined function `{name}`")]
    UndefinedFunction { name: String, pos: Pos },
    #[error("{pos}: `{name}` takes {expected} argument(s), called with {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        pos: Pos,
    },
    #[error("{pos}: use of unassigned variable `{name}`")]
    Unassigned { name: String, pos: Pos },
    #[error("{pos}: assignment to undeclared variable `{name}` (declare it with `let`)")]
    Undeclared { name: String, pos: Pos },
    #[error("{pos}: function `{name}` can reach the end of its body without returning")]
    MissingReturn { name: String, pos: Pos },
}
