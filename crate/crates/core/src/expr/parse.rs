//! Expression grammar.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := primary ("^" unary)?            exponent must be an integer
//! primary := integer | "(" expr ")" | deriv | call | ident
//! deriv   := "D[" name ("," var "," integer)+ "]"
//! call    := ("exp" | "sin" | "cos" | "sinh" | "cosh") "(" expr ")"
//!          | ("wp" | "wpd") "(" var ["-" const] [";" const "," const] ")"
//!          | name "(" var ("," var)* ")"      unknown with explicit arguments
//! ident   := "u1" | "u2" | "I" | constant | unknown
//! ```
//!
//! Constants are `hbar`, `H`, `L`, `g2`, `g3`, `u20`, `w0` and names made of
//! one of the prefixes `a b c d k beta` followed by digits. Unknown functions
//! come from the [`ParseContext`]; the default context knows `v1, f1` (of u1),
//! `v2, f2, U1, U2, W` (of u2) and `F0, G0, GH, GL` (of both).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{Atom, Coeff, Deps, Expr, ExprError, FnAtom, Result, Var, WpAtom};

#[derive(Clone, Debug)]
pub struct ParseContext {
    pub fns: BTreeMap<String, Deps>,
    pub consts: BTreeSet<String>,
}

impl Default for ParseContext {
    fn default() -> Self {
        let mut fns = BTreeMap::new();
        for n in ["v1", "f1"] {
            fns.insert(n.to_string(), Deps::U1);
        }
        for n in ["v2", "f2", "U1", "U2", "W"] {
            fns.insert(n.to_string(), Deps::U2);
        }
        for n in ["F0", "G0", "GH", "GL"] {
            fns.insert(n.to_string(), Deps::Both);
        }
        ParseContext { fns, consts: BTreeSet::new() }
    }
}

impl ParseContext {
    pub fn with_fn(mut self, name: &str, deps: Deps) -> Self {
        self.fns.insert(name.to_string(), deps);
        self
    }

    pub fn with_const(mut self, name: &str) -> Self {
        self.consts.insert(name.to_string());
        self
    }

    fn is_const(&self, name: &str) -> bool {
        if self.consts.contains(name) {
            return true;
        }
        if matches!(name, "hbar" | "H" | "L" | "g2" | "g3" | "u20" | "w0") {
            return true;
        }
        for prefix in ["beta", "a", "b", "c", "d", "k"] {
            if let Some(rest) = name.strip_prefix(prefix) {
                if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                    return true;
                }
            }
        }
        false
    }
}

pub fn parse(text: &str) -> Result<Expr> {
    parse_with(text, &ParseContext::default())
}

pub fn parse_with(text: &str, ctx: &ParseContext) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, ctx, len: text.len() };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e.normalize())
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
}

fn lex(s: &str) -> Result<Vec<(Tok, usize)>> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' {
                return Err(ExprError::Syntax { pos: i, msg: "floating-point literals are not supported; use rationals".into() });
            }
            out.push((Tok::Int(s[st..i].parse().unwrap()), st));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(s[st..i].to_string()), st));
        } else if "+-*/^()[],;".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(ExprError::Syntax { pos: i, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: &'a ParseContext,
    len: usize,
}

impl Parser<'_> {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.len)
    }

    fn err(&self, msg: &str) -> ExprError {
        ExprError::Syntax { pos: self.offset(), msg: msg.to_string() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<(String, usize)> {
        match self.toks.get(self.pos) {
            Some((Tok::Ident(s), at)) => {
                let r = (s.clone(), *at);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        let neg = self.eat('-');
        match self.toks.get(self.pos) {
            Some((Tok::Int(n), _)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.err("expected integer")),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let at = self.offset();
                let d = self.unary()?;
                acc = acc.div(&d).map_err(|e| match e {
                    ExprError::DivisionByZero => ExprError::Syntax { pos: at, msg: "division by zero".into() },
                    other => other,
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            let at = self.offset();
            let ex = self.unary()?;
            let n = ex
                .as_coeff()
                .and_then(|c| c.as_integer())
                .and_then(|n| i32::try_from(n).ok())
                .ok_or(ExprError::Syntax { pos: at, msg: "exponent must be an integer".into() })?;
            return base.powi(n).map_err(|_| ExprError::Syntax { pos: at, msg: "zero raised to a negative power".into() });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::from_coeff(Coeff::real(BigRational::from_integer(n))))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "D" && self.peek() == Some(&Tok::Sym('[')) {
                    return self.derivative();
                }
                if self.peek() == Some(&Tok::Sym('(')) {
                    return self.call(&name, at);
                }
                self.identifier(&name, at)
            }
            _ => Err(self.err("expected expression")),
        }
    }

    fn identifier(&self, name: &str, at: usize) -> Result<Expr> {
        if let Some(v) = Var::from_name(name) {
            return Ok(Expr::var(v));
        }
        if name == "I" {
            return Ok(Expr::i());
        }
        if let Some(d) = self.ctx.fns.get(name) {
            return Ok(Expr::func(name, *d));
        }
        if self.ctx.is_const(name) {
            return Ok(Expr::constant(name));
        }
        Err(ExprError::UnknownIdentifier { pos: at, name: name.to_string() })
    }

    fn derivative(&mut self) -> Result<Expr> {
        self.expect('[')?;
        let (name, at) = self.ident()?;
        let deps = *self.ctx.fns.get(&name).ok_or(ExprError::UnknownIdentifier { pos: at, name: name.clone() })?;
        let mut d = [0u32; 2];
        while self.eat(',') {
            let (vn, vat) = self.ident()?;
            let v = Var::from_name(&vn).ok_or(ExprError::Syntax { pos: vat, msg: format!("expected u1 or u2, found `{vn}`") })?;
            if !deps.contains(v) {
                return Err(ExprError::Syntax { pos: vat, msg: format!("{name} does not depend on {vn}") });
            }
            self.expect(',')?;
            let n = self.integer()?;
            let n = u32::try_from(n).map_err(|_| self.err("derivative order must be a nonnegative integer"))?;
            d[v.index()] += n;
        }
        self.expect(']')?;
        Ok(Expr::atom(Atom::Fn(FnAtom { name: Arc::from(name.as_str()), deps, d })))
    }

    fn call(&mut self, name: &str, at: usize) -> Result<Expr> {
        self.expect('(')?;
        match name {
            "exp" | "sin" | "cos" | "sinh" | "cosh" => {
                let arg = self.expr()?;
                self.expect(')')?;
                let r = match name {
                    "exp" => Expr::exp(&arg),
                    "sin" => Expr::sin(&arg),
                    "cos" => Expr::cos(&arg),
                    "sinh" => Expr::sinh(&arg),
                    _ => Expr::cosh(&arg),
                };
                r.map_err(|e| match e {
                    ExprError::Unsupported(m) => ExprError::Syntax { pos: at, msg: m },
                    other => other,
                })
            }
            "wp" | "wpd" => self.weierstrass(name == "wpd", at),
            _ => {
                let deps = *self.ctx.fns.get(name).ok_or(ExprError::UnknownIdentifier { pos: at, name: name.to_string() })?;
                let mut seen = Vec::new();
                loop {
                    let (vn, vat) = self.ident()?;
                    let v = Var::from_name(&vn)
                        .ok_or(ExprError::Syntax { pos: vat, msg: "unknown-function arguments must be u1 or u2".into() })?;
                    seen.push(v);
                    if !self.eat(',') {
                        break;
                    }
                }
                self.expect(')')?;
                let ok = match deps {
                    Deps::U1 => seen == [Var::U1],
                    Deps::U2 => seen == [Var::U2],
                    Deps::Both => seen == [Var::U1, Var::U2],
                };
                if !ok {
                    return Err(ExprError::Syntax { pos: at, msg: format!("argument list does not match the signature of {name}") });
                }
                Ok(Expr::func(name, deps))
            }
        }
    }

    fn weierstrass(&mut self, deriv: bool, at: usize) -> Result<Expr> {
        let (vn, vat) = self.ident()?;
        let var = Var::from_name(&vn).ok_or(ExprError::Syntax { pos: vat, msg: "wp argument must start with u1 or u2".into() })?;
        let mut shift = None;
        if self.eat('-') {
            let (c, cat) = self.ident()?;
            if !self.ctx.is_const(&c) {
                return Err(ExprError::UnknownIdentifier { pos: cat, name: c });
            }
            shift = Some(Arc::from(c.as_str()));
        }
        let (mut g2, mut g3): (Arc<str>, Arc<str>) = (Arc::from("g2"), Arc::from("g3"));
        if self.eat(';') {
            let (a, _) = self.ident()?;
            self.expect(',')?;
            let (b, _) = self.ident()?;
            if !self.ctx.is_const(&a) || !self.ctx.is_const(&b) {
                return Err(ExprError::Syntax { pos: at, msg: "wp invariants must be named constants".into() });
            }
            g2 = Arc::from(a.as_str());
            g3 = Arc::from(b.as_str());
        }
        self.expect(')')?;
        Ok(Expr::atom(Atom::Wp(WpAtom { var, shift, g2, g3, deriv: deriv as u8 })))
    }
}
