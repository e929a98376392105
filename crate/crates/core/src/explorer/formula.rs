//! State formulas: conjunctions of location, clock and discrete atoms.
//!
//! Textual syntax, atoms joined by `and` or `&&`:
//!
//! ```text
//! A.l                    automaton A is in location l
//! A.x <= 5               clock bound (any of < <= == >= >)
//! 2 <= A.x < 7           chained clock bound
//! A.x - B.y >= 1         difference constraint
//! busy == 1, len(Q) > 0  discrete comparison
//! true, false
//! ```

use std::fmt;

use thiserror::Error;

use crate::automata::{all_hold, atom_constraints, CAtom, CExpr, CmpOp, EvalError, Model};
use crate::dbm::{Constraint, Dbm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown name {0}")]
    UnknownName(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateFormula {
    text: String,
    /// Contains a `false` atom or a constant comparison that fails.
    pub unsat: bool,
    /// `(automaton, location)` pairs.
    pub locations: Vec<(usize, usize)>,
    pub clock: Vec<Constraint>,
    pub discrete: Vec<CAtom>,
}

impl StateFormula {
    pub fn always() -> StateFormula {
        StateFormula {
            text: "true".into(),
            unsat: false,
            locations: Vec::new(),
            clock: Vec::new(),
            discrete: Vec::new(),
        }
    }

    pub fn parse(model: &Model, text: &str) -> Result<StateFormula, FormulaError> {
        let tokens = lex(text)?;
        let mut p = Parser {
            model,
            tokens,
            pos: 0,
            out: StateFormula::always(),
        };
        p.out.text = text.trim().to_string();
        p.formula()?;
        Ok(p.out)
    }

    /// Conjunction.
    pub fn and(mut self, other: StateFormula) -> StateFormula {
        self.text = format!("{} and {}", self.text, other.text);
        self.unsat |= other.unsat;
        self.locations.extend(other.locations);
        self.clock.extend(other.clock);
        self.discrete.extend(other.discrete);
        self
    }

    pub fn has_diagonal(&self) -> bool {
        self.clock.iter().any(|c| c.i != 0 && c.j != 0)
    }

    /// `(clock, |constant|)` pairs mentioned by clock atoms.
    pub fn clock_constants(&self) -> Vec<(usize, i64)> {
        let mut out = Vec::new();
        for c in &self.clock {
            if let Some(v) = c.bound.value() {
                for k in [c.i, c.j] {
                    if k != 0 {
                        out.push((k, v.abs()));
                    }
                }
            }
        }
        out
    }

    /// Location and discrete part.
    pub fn holds_discrete(&self, model: &Model, locs: &[u32], disc: &[i64]) -> Result<bool, EvalError> {
        if self.unsat || self.locations.iter().any(|&(a, l)| locs[a] as usize != l) {
            return Ok(false);
        }
        all_hold(&self.discrete, &model.layout, disc)
    }

    /// `zone ∧ clock part`, `None` if empty.
    pub fn restrict(&self, zone: &Dbm) -> Option<Dbm> {
        let mut z = zone.clone();
        z.constrain_all(&self.clock).then_some(z)
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Op(CmpOp),
    Minus,
    And,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: &str| FormulaError::Syntax { pos, msg: msg.into() };
    while i < b.len() {
        let c = b[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => {
                out.push((start, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((start, Tok::RParen));
                i += 1;
            }
            b'-' => {
                out.push((start, Tok::Minus));
                i += 1;
            }
            b'&' => {
                if b.get(i + 1) != Some(&b'&') {
                    return Err(err(i, "expected &&"));
                }
                out.push((start, Tok::And));
                i += 2;
            }
            b'<' | b'>' | b'=' | b'!' => {
                let two = b.get(i + 1) == Some(&b'=');
                let op = match (c, two) {
                    (b'<', true) => CmpOp::Le,
                    (b'<', false) => CmpOp::Lt,
                    (b'>', true) => CmpOp::Ge,
                    (b'>', false) => CmpOp::Gt,
                    (b'=', true) => CmpOp::Eq,
                    (b'!', true) => CmpOp::Ne,
                    _ => return Err(err(i, "unknown operator")),
                };
                out.push((start, Tok::Op(op)));
                i += if two { 2 } else { 1 };
            }
            b'0'..=b'9' => {
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let v = text[start..i].parse().map_err(|_| err(start, "integer out of range"))?;
                out.push((start, Tok::Int(v)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'.') {
                    i += 1;
                }
                let word = &text[start..i];
                out.push((
                    start,
                    if word == "and" {
                        Tok::And
                    } else {
                        Tok::Ident(word.into())
                    },
                ));
            }
            _ => return Err(err(i, "unexpected character")),
        }
    }
    Ok(out)
}

#[derive(Debug)]
enum Term {
    Int(i64),
    /// `x_i - x_j`, `j = 0` for a plain clock.
    Clock(usize, usize),
    Disc(CExpr),
    Name(String),
}

struct Parser<'a> {
    model: &'a Model,
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    out: StateFormula,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map(|t| t.0).unwrap_or(usize::MAX)
    }

    fn fail<T>(&self, msg: &str) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn formula(&mut self) -> Result<(), FormulaError> {
        loop {
            self.atom()?;
            match self.peek() {
                None => return Ok(()),
                Some(Tok::And) => self.pos += 1,
                Some(_) => return self.fail("expected 'and'"),
            }
        }
    }

    fn atom(&mut self) -> Result<(), FormulaError> {
        let mut terms = vec![self.term()?];
        let mut ops = Vec::new();
        while let Some(Tok::Op(op)) = self.peek() {
            ops.push(*op);
            self.pos += 1;
            terms.push(self.term()?);
        }
        match ops.len() {
            0 => match terms.pop().unwrap() {
                Term::Name(n) if n == "true" => Ok(()),
                Term::Name(n) if n == "false" => {
                    self.out.unsat = true;
                    Ok(())
                }
                Term::Name(n) => self.location(&n),
                Term::Clock(..) | Term::Disc(_) | Term::Int(_) => self.fail("expected a comparison"),
            },
            1 | 2 => {
                let mut it = terms.into_iter();
                let mut lhs = it.next().unwrap();
                for op in ops {
                    let rhs = it.next().unwrap();
                    let keep = match &rhs {
                        Term::Int(v) => Term::Int(*v),
                        Term::Clock(i, j) => Term::Clock(*i, *j),
                        Term::Disc(e) => Term::Disc(e.clone()),
                        Term::Name(n) => Term::Name(n.clone()),
                    };
                    self.compare(lhs, op, rhs)?;
                    lhs = keep;
                }
                Ok(())
            }
            _ => self.fail("at most two comparisons may be chained"),
        }
    }

    fn location(&mut self, name: &str) -> Result<(), FormulaError> {
        let unknown = || FormulaError::UnknownName(name.into());
        let (aut, loc) = name.split_once('.').ok_or_else(unknown)?;
        let a = self.model.automaton_index(aut).ok_or_else(unknown)?;
        let l = self.model.location_index(a, loc).ok_or_else(unknown)?;
        self.out.locations.push((a, l));
        Ok(())
    }

    fn compare(&mut self, lhs: Term, op: CmpOp, rhs: Term) -> Result<(), FormulaError> {
        match (lhs, rhs) {
            (Term::Clock(i, j), Term::Int(v)) => self.clock_atom(i, j, op, v),
            (Term::Int(v), Term::Clock(i, j)) => self.clock_atom(i, j, op.flip(), v),
            (Term::Int(a), Term::Int(b)) => {
                self.out.unsat |= !op.holds(a, b);
                Ok(())
            }
            (Term::Name(n), _) | (_, Term::Name(n)) => Err(FormulaError::UnknownName(n)),
            (Term::Clock(..), _) | (_, Term::Clock(..)) => Err(FormulaError::Invalid(
                "clocks can only be compared with integer constants".into(),
            )),
            (l, r) => {
                let as_expr = |t: Term| match t {
                    Term::Int(v) => CExpr::Const(v),
                    Term::Disc(e) => e,
                    _ => unreachable!(),
                };
                self.out.discrete.push(CAtom {
                    lhs: as_expr(l),
                    op,
                    rhs: as_expr(r),
                });
                Ok(())
            }
        }
    }

    fn clock_atom(&mut self, i: usize, j: usize, op: CmpOp, v: i64) -> Result<(), FormulaError> {
        if op == CmpOp::Ne {
            return Err(FormulaError::Invalid("clock atoms cannot use !=".into()));
        }
        self.out.clock.extend(atom_constraints(i, j, op, v));
        Ok(())
    }

    fn term(&mut self) -> Result<Term, FormulaError> {
        let tok = self.tokens.get(self.pos).map(|t| t.1.clone());
        match tok {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(Term::Int(v))
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                match self.peek() {
                    Some(Tok::Int(v)) => {
                        let v = -*v;
                        self.pos += 1;
                        Ok(Term::Int(v))
                    }
                    _ => self.fail("expected an integer after '-'"),
                }
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "len" && self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let q = match self.peek() {
                        Some(Tok::Ident(q)) => q.clone(),
                        _ => return self.fail("expected a queue name"),
                    };
                    self.pos += 1;
                    if self.peek() != Some(&Tok::RParen) {
                        return self.fail("expected ')'");
                    }
                    self.pos += 1;
                    let slot = self.model.layout.queue(&q).ok_or(FormulaError::UnknownName(q))?;
                    return Ok(Term::Disc(CExpr::Len(slot)));
                }
                if let Some(i) = self.model.clock_index(&name) {
                    if self.peek() == Some(&Tok::Minus) {
                        if let Some((_, Tok::Ident(other))) = self.tokens.get(self.pos + 1) {
                            let j = self
                                .model
                                .clock_index(other)
                                .ok_or_else(|| FormulaError::UnknownName(other.clone()))?;
                            self.pos += 2;
                            return Ok(Term::Clock(i, j));
                        }
                    }
                    return Ok(Term::Clock(i, 0));
                }
                if let Some(s) = self.model.layout.scalar(&name) {
                    return Ok(Term::Disc(CExpr::Scalar(s)));
                }
                Ok(Term::Name(name))
            }
            _ => self.fail("expected an atom"),
        }
    }
}
