use std::collections::HashSet;

use super::lexer::{lex, Tok, Token};
use super::{BinOp, Expr, Function, Pos, Program, ProgramError, Stmt};

/// Parses and statically checks a program.
pub fn parse_program(src: &str) -> Result<Program, ProgramError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, at: 0 };
    let mut functions = Vec::new();
    while p.peek() != &Tok::Eof {
        functions.push(p.function()?);
    }
    if functions.is_empty() {
        return Err(ProgramError::NoFunctions);
    }
    let mut names = HashSet::new();
    for f in &functions {
        if !names.insert(f.name.as_str()) {
            return Err(ProgramError::DuplicateFunction {
                name: f.name.clone(),
                pos: f.pos,
            });
        }
    }
    let program = Program::new(functions);
    for f in program.functions() {
        check_function(&program, f)?;
    }
    Ok(program)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ProgramError> {
        Err(ProgramError::Syntax {
            pos: self.pos(),
            msg: format!("expected {wanted}, found {}", self.peek().describe()),
        })
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<Pos, ProgramError> {
        if *self.peek() == tok {
            Ok(self.bump().pos)
        } else {
            self.unexpected(wanted)
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ProgramError> {
        match self.peek().clone() {
            Tok::Ident(name) => Ok((name, self.bump().pos)),
            _ => self.unexpected("identifier"),
        }
    }

    fn function(&mut self) -> Result<Function, ProgramError> {
        let pos = self.expect(Tok::Fn, "`fn`")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params: Vec<String> = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let (p, ppos) = self.ident()?;
                if params.contains(&p) {
                    return Err(ProgramError::DuplicateParam { name: p, pos: ppos });
                }
                params.push(p);
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.bump();
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        let body = self.block()?;
        Ok(Function {
            name,
            params,
            body,
            pos,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ProgramError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.unexpected("`}`");
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, ProgramError> {
        match self.peek().clone() {
            Tok::Let => {
                self.bump();
                let (name, pos) = self.ident()?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Let { name, value, pos })
            }
            Tok::Ident(_) => {
                let (name, pos) = self.ident()?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Assign { name, value, pos })
            }
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then_branch = self.block()?;
                let else_branch = if *self.peek() == Tok::Else {
                    self.bump();
                    Some(self.block()?)
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                })
            }
            Tok::Return => {
                self.bump();
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Return(value))
            }
            Tok::Halt => {
                let pos = self.bump().pos;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Halt { pos })
            }
            _ => self.unexpected("statement"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ProgramError> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::Ne => BinOp::Ne,
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.additive()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn additive(&mut self) -> Result<Expr, ProgramError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn term(&mut self) -> Result<Expr, ProgramError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary {
                op: BinOp::Mul,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ProgramError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ProgramError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Ident(_) => {
                let (name, pos) = self.ident()?;
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::Var { name, pos });
                }
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if *self.peek() != Tok::Comma {
                            break;
                        }
                        self.bump();
                    }
                }
                self.expect(Tok::RParen, "`,` or `)`")?;
                Ok(Expr::Call { name, args, pos })
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.unexpected("expression"),
        }
    }
}

// ---- static checks ----

fn check_function(program: &Program, f: &Function) -> Result<(), ProgramError> {
    let mut defined: HashSet<String> = f.params.iter().cloned().collect();
    if check_block(program, &f.body, &mut defined)? {
        Ok(())
    } else {
        Err(ProgramError::MissingReturn {
            name: f.name.clone(),
            pos: f.pos,
        })
    }
}

/// Returns whether the block always diverges (returns or halts). `defined`
/// is left holding the variables definitely assigned on fall-through.
fn check_block(
    program: &Program,
    stmts: &[Stmt],
    defined: &mut HashSet<String>,
) -> Result<bool, ProgramError> {
    for s in stmts {
        match s {
            Stmt::Let { name, value, .. } => {
                check_expr(program, value, defined)?;
                defined.insert(name.clone());
            }
            Stmt::Assign { name, value, pos } => {
                check_expr(program, value, defined)?;
                if !defined.contains(name) {
                    return Err(ProgramError::Undeclared {
                        name: name.clone(),
                        pos: *pos,
                    });
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                check_expr(program, cond, defined)?;
                let mut then_defs = defined.clone();
                let then_div = check_block(program, then_branch, &mut then_defs)?;
                let Some(else_branch) = else_branch else {
                    continue;
                };
                let mut else_defs = defined.clone();
                let else_div = check_block(program, else_branch, &mut else_defs)?;
                match (then_div, else_div) {
                    (true, true) => return Ok(true),
                    (true, false) => *defined = else_defs,
                    (false, true) => *defined = then_defs,
                    (false, false) => {
                        *defined = then_defs.intersection(&else_defs).cloned().collect()
                    }
                }
            }
            Stmt::Return(e) => {
                check_expr(program, e, defined)?;
                return Ok(true);
            }
            Stmt::Halt { .. } => return Ok(true),
        }
    }
    Ok(false)
}

fn check_expr(program: &Program, e: &Expr, defined: &HashSet<String>) -> Result<(), ProgramError> {
    match e {
        Expr::Int(_) => Ok(()),
        Expr::Var { name, pos } => {
            if defined.contains(name) {
                Ok(())
            } else {
                Err(ProgramError::Unassigned {
                    name: name.clone(),
                    pos: *pos,
                })
            }
        }
        Expr::Call { name, args, pos } => {
            let f = program
                .function(name)
                .ok_or_else(|| ProgramError::UndefinedFunction {
                    name: name.clone(),
                    pos: *pos,
                })?;
            if f.params.len() != args.len() {
                return Err(ProgramError::Arity {
                    name: name.clone(),
                    expected: f.params.len(),
                    found: args.len(),
                    pos: *pos,
                });
            }
            args.iter()
                .try_for_each(|a| check_expr(program, a, defined))
        }
        Expr::Neg(inner) => check_expr(program, inner, defined),
        Expr::Binary { lhs, rhs, .. } => {
            check_expr(program, lhs, defined)?;
            check_expr(program, rhs, defined)
        }
    }
}
