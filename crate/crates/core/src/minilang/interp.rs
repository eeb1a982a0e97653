use std::collections::HashMap;

use thiserror::Error;

use super::{BinOp, Expr, Function, InputCase, Program, Stmt};
use crate::trace::{PptId, ProgramPoint, Trace, RETURN_VAR};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 1_000;

/// Evaluation stack for one run; sized so `max_depth` nested calls fit in
/// unoptimized builds.
const STACK_BYTES_PER_FRAME: usize = 16 * 1024;
const MIN_STACK_BYTES: usize = 4 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Statements plus calls executed before the run is abandoned.
    pub step_budget: u64,
    pub max_depth: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            step_budget: DEFAULT_STEP_BUDGET,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("`halt` reached in `{function}`")]
    Halt { function: String },
    #[error("step budget of {0} exceeded")]
    StepBudget(u64),
    #[error("call depth limit of {0} exceeded")]
    CallDepth(usize),
    #[error("no function named `{0}`")]
    UnknownEntry(String),
    #[error("`{name}` takes {expected} argument(s), got {found}")]
    ArgCount {
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracedRun {
    pub result: Result<i64, RuntimeError>,
    /// Samples recorded up to the end of the run (or the point of failure).
    pub trace: Trace,
}

enum Flow {
    Next,
    Return(i64),
}

struct Interp<'p> {
    program: &'p Program,
    options: RunOptions,
    steps: u64,
    depth: usize,
    samples: Option<Vec<(PptId, Vec<i64>)>>,
}

impl Interp<'_> {
    fn tick(&mut self) -> Result<(), RuntimeError> {
        self.steps += 1;
        if self.steps > self.options.step_budget {
            return Err(RuntimeError::StepBudget(self.options.step_budget));
        }
        Ok(())
    }

    fn call(&mut self, f: &Function, args: Vec<i64>) -> Result<i64, RuntimeError> {
        self.tick()?;
        if self.depth >= self.options.max_depth {
            return Err(RuntimeError::CallDepth(self.options.max_depth));
        }
        if let Some(samples) = &mut self.samples {
            samples.push((PptId::entry(&f.name), args.clone()));
        }
        let mut env: HashMap<&str, i64> = f.params.iter().map(String::as_str).zip(args).collect();
        self.depth += 1;
        let flow = self.block(f, &f.body, &mut env);
        self.depth -= 1;
        let value = match flow? {
            Flow::Return(v) => v,
            Flow::Next => unreachable!("static check guarantees every path returns"),
        };
        if let Some(samples) = &mut self.samples {
            let mut values: Vec<i64> = f.params.iter().map(|p| env[p.as_str()]).collect();
            values.push(value);
            samples.push((PptId::exit(&f.name), values));
        }
        Ok(value)
    }

    fn block<'a>(
        &mut self,
        f: &Function,
        stmts: &'a [Stmt],
        env: &mut HashMap<&'a str, i64>,
    ) -> Result<Flow, RuntimeError> {
        for s in stmts {
            self.tick()?;
            match s {
                Stmt::Let { name, value, .. } | Stmt::Assign { name, value, .. } => {
                    let v = self.eval(value, env)?;
                    env.insert(name, v);
                }
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    let flow = if self.eval(cond, env)? != 0 {
                        self.block(f, then_branch, env)?
                    } else if let Some(else_branch) = else_branch {
                        self.block(f, else_branch, env)?
                    } else {
                        Flow::Next
                    };
                    if let Flow::Return(v) = flow {
                        return Ok(Flow::Return(v));
                    }
                }
                Stmt::Return(e) => return Ok(Flow::Return(self.eval(e, env)?)),
                Stmt::Halt { .. } => {
                    return Err(RuntimeError::Halt {
                        function: f.name.clone(),
                    })
                }
            }
        }
        Ok(Flow::Next)
    }

    fn eval(&mut self, e: &Expr, env: &HashMap<&str, i64>) -> Result<i64, RuntimeError> {
        Ok(match e {
            Expr::Int(n) => *n,
            Expr::Var { name, .. } => env[name.as_str()],
            Expr::Neg(inner) => self.eval(inner, env)?.wrapping_neg(),
            Expr::Call { name, args, .. } => {
                let f = self
                    .program
                    .function(name)
                    .expect("static check resolved every call");
                let values = args
                    .iter()
                    .map(|a| self.eval(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                self.call(f, values)?
            }
            Expr::Binary { op, lhs, rhs } => {
                let (a, b) = (self.eval(lhs, env)?, self.eval(rhs, env)?);
                match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                    BinOp::Eq => i64::from(a == b),
                    BinOp::Ne => i64::from(a != b),
                    BinOp::Lt => i64::from(a < b),
                    BinOp::Le => i64::from(a <= b),
                    BinOp::Gt => i64::from(a > b),
                    BinOp::Ge => i64::from(a >= b),
                }
            }
        })
    }
}

fn entry<'p>(program: &'p Program, case: &InputCase) -> Result<&'p Function, RuntimeError> {
    let f = program
        .function(&case.entry)
        .ok_or_else(|| RuntimeError::UnknownEntry(case.entry.clone()))?;
    if f.params.len() != case.args.len() {
        return Err(RuntimeError::ArgCount {
            name: f.name.clone(),
            expected: f.params.len(),
            found: case.args.len(),
        });
    }
    Ok(f)
}

/// Entry and exit points for every function in the program.
pub(crate) fn program_points(program: &Program) -> Vec<ProgramPoint> {
    let mut out = Vec::with_capacity(program.functions().len() * 2);
    for f in program.functions() {
        out.push(
            ProgramPoint::with_vars(PptId::entry(&f.name), &f.params)
                .expect("identifiers are valid names"),
        );
        let mut exit_vars: Vec<&str> = f.params.iter().map(String::as_str).collect();
        exit_vars.push(RETURN_VAR);
        out.push(
            ProgramPoint::with_vars(PptId::exit(&f.name), &exit_vars)
                .expect("identifiers are valid names"),
        );
    }
    out
}

type RawSamples = Vec<(PptId, Vec<i64>)>;

/// Evaluates on a scoped thread whose stack fits `max_depth` frames.
fn evaluate(
    program: &Program,
    case: &InputCase,
    options: RunOptions,
    tracing: bool,
) -> (Result<i64, RuntimeError>, RawSamples) {
    let stack = options
        .max_depth
        .saturating_mul(STACK_BYTES_PER_FRAME)
        .max(MIN_STACK_BYTES);
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .name("minilang".into())
            .stack_size(stack)
            .spawn_scoped(scope, || {
                let mut it = Interp {
                    program,
                    options,
                    steps: 0,
                    depth: 0,
                    samples: tracing.then(Vec::new),
                };
                let result = entry(program, case).and_then(|f| it.call(f, case.args.clone()));
                (result, it.samples.unwrap_or_default())
            })
            .expect("spawn interpreter thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

/// Runs without recording a trace.
pub fn run(program: &Program, case: &InputCase, options: RunOptions) -> Result<i64, RuntimeError> {
    evaluate(program, case, options, false).0
}

pub fn run_traced(
    program: &Program,
    case: &InputCase,
    run_id: &str,
    options: RunOptions,
) -> TracedRun {
    let (result, samples) = evaluate(program, case, options, true);
    let trace = Trace::new(run_id, program_points(program), samples)
        .expect("interpreter emits well-formed traces");
    TracedRun { result, trace }
}
