//! Arithmetic expressions over the phase-space variables `x`, `y` and time `t`.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := primary ("^" unary)?
//! primary := number | "x" | "y" | "t" | func "(" expr ")" | "(" expr ")"
//! func    := "sin" | "cos" | "tan" | "tanh" | "exp" | "log" | "sqrt" | "abs" | "sign"
//! number  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//!          | "." digits [exponent]
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `x^2^3` is `x^(2^3)`. A minus sign applied directly to a
//! numeric literal is folded into a negative constant at parse time.
//!
//! `sign` is the derivative companion of `abs`; `sign(0) = 0`.

use std::fmt;

use thiserror::Error;

/// Phase-space coordinate or time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    T,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
}

impl UnaryOp {
    pub const FUNCTIONS: [UnaryOp; 9] = [
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Tanh,
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sqrt,
        UnaryOp::Abs,
        UnaryOp::Sign,
    ];

    /// Function name as written in source; `None` for negation.
    pub fn function_name(self) -> Option<&'static str> {
        Some(match self {
            UnaryOp::Neg => return None,
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
            UnaryOp::Sign => "sign",
        })
    }

    fn from_name(name: &str) -> Option<UnaryOp> {
        UnaryOp::FUNCTIONS
            .into_iter()
            .find(|f| f.function_name() == Some(name))
    }

    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            UnaryOp::Neg => -v,
            UnaryOp::Sin => v.sin(),
            UnaryOp::Cos => v.cos(),
            UnaryOp::Tan => v.tan(),
            UnaryOp::Tanh => v.tanh(),
            UnaryOp::Exp => v.exp(),
            UnaryOp::Log => v.ln(),
            UnaryOp::Sqrt => v.sqrt(),
            UnaryOp::Abs => v.abs(),
            UnaryOp::Sign => sign(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
            BinaryOp::Pow => pow(a, b),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

/// Signum with `sign(0) = 0`; NaN propagates.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        v * 0.0
    }
}

#[inline]
fn pow(a: f64, b: f64) -> f64 {
    if b == 2.0 {
        a * a
    } else if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Expression tree. Arity is carried by the variant, so a tree can never
/// hold the wrong number of children.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at offset {offset} (near `{token}`)")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
    pub token: String,
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        Parser::new(source).parse()
    }

    /// Evaluates the tree. Domain violations surface as non-finite values.
    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Var(Var::T) => t,
            Expr::Unary(op, a) => op.apply(a.eval(x, y, t)),
            Expr::Binary(op, a, b) => op.apply(a.eval(x, y, t), b.eval(x, y, t)),
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Unary(_, a) => a.depends_on(v),
            Expr::Binary(_, a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Folds every subtree made only of literals into a single constant,
    /// provided the folded value is finite. Non-finite results (`1/0`,
    /// `log(-1)`) are left as written.
    pub fn fold_constants(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => fold_unary(*op, a.fold_constants()),
            Expr::Binary(op, a, b) => fold_binary(*op, a.fold_constants(), b.fold_constants()),
        }
    }

    /// Symbolic partial derivative with respect to `v`.
    ///
    /// Literal subexpressions are folded and trivial identities (`0 + e`,
    /// `1 * e`, `0 * e`) are dropped; nothing further is simplified.
    /// `abs` differentiates to `sign`, which makes `abs'(0) = 0`.
    pub fn differentiate(&self, v: Var) -> Expr {
        self.fold_constants().derive(v)
    }

    fn derive(&self, v: Var) -> Expr {
        use BinaryOp::*;
        use UnaryOp::*;
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(w) => Expr::Const(if *w == v { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.derive(v);
                if is_zero(&da) {
                    return Expr::Const(0.0);
                }
                let u = (**a).clone();
                let outer = match op {
                    Neg => return fold_unary(Neg, da),
                    Sin => fold_unary(Cos, u),
                    Cos => fold_unary(Neg, fold_unary(Sin, u)),
                    Tan => {
                        let tan = fold_unary(Tan, u);
                        fold_binary(
                            Add,
                            Expr::Const(1.0),
                            fold_binary(Pow, tan, Expr::Const(2.0)),
                        )
                    }
                    Tanh => {
                        let th = fold_unary(Tanh, u);
                        fold_binary(
                            Sub,
                            Expr::Const(1.0),
                            fold_binary(Pow, th, Expr::Const(2.0)),
                        )
                    }
                    Exp => fold_unary(Exp, u),
                    Log => return fold_binary(Div, da, u),
                    Sqrt => {
                        return fold_binary(
                            Div,
                            da,
                            fold_binary(Mul, Expr::Const(2.0), fold_unary(Sqrt, u)),
                        )
                    }
                    Abs => fold_unary(Sign, u),
                    // piecewise constant; the jump at zero is not represented
                    Sign => return Expr::Const(0.0),
                };
                fold_binary(Mul, outer, da)
            }
            Expr::Binary(op, a, b) => {
                let da = a.derive(v);
                let db = b.derive(v);
                let (u, w) = ((**a).clone(), (**b).clone());
                match op {
                    Add => fold_binary(Add, da, db),
                    Sub => fold_binary(Sub, da, db),
                    Mul => fold_binary(
                        Add,
                        fold_binary(Mul, da, w),
                        fold_binary(Mul, u, db),
                    ),
                    Div => {
                        if is_zero(&db) {
                            return fold_binary(Div, da, w);
                        }
                        let num = fold_binary(
                            Sub,
                            fold_binary(Mul, da, w.clone()),
                            fold_binary(Mul, u, db),
                        );
                        fold_binary(Div, num, fold_binary(Pow, w, Expr::Const(2.0)))
                    }
                    Pow => {
                        if is_zero(&db) {
                            // u^c -> c * u^(c-1) * u'
                            let lowered = fold_binary(Sub, w.clone(), Expr::Const(1.0));
                            let power = fold_binary(Pow, u, lowered);
                            fold_binary(Mul, fold_binary(Mul, w, power), da)
                        } else if is_zero(&da) {
                            // c^w -> c^w * log(c) * w'
                            let ln = fold_unary(Log, u.clone());
                            let whole = fold_binary(Pow, u, w);
                            fold_binary(Mul, fold_binary(Mul, whole, ln), db)
                        } else {
                            // u^w * (w' log u + w u'/u)
                            let whole = fold_binary(Pow, u.clone(), w.clone());
                            let t1 = fold_binary(Mul, db, fold_unary(Log, u.clone()));
                            let t2 = fold_binary(Div, fold_binary(Mul, w, da), u);
                            fold_binary(Mul, whole, fold_binary(Add, t1, t2))
                        }
                    }
                }
            }
        }
    }

    /// Precedence class used by the printer; higher binds tighter.
    fn level(&self) -> u8 {
        match self {
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Const(_) | Expr::Var(_) => 5,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Unary(_, _) => 5,
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => 2,
            Expr::Binary(BinaryOp::Pow, _, _) => 4,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        let paren = self.level() < min_level;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Const(c) => write!(f, "{c}")?,
            Expr::Var(v) => f.write_str(v.name())?,
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                a.write_at(f, 3)?;
            }
            Expr::Unary(op, a) => {
                f.write_str(op.function_name().unwrap_or_default())?;
                f.write_str("(")?;
                a.write_at(f, 0)?;
                f.write_str(")")?;
            }
            Expr::Binary(op, a, b) => {
                let (left, right) = match op {
                    BinaryOp::Add | BinaryOp::Sub => (1, 2),
                    BinaryOp::Mul | BinaryOp::Div => (2, 3),
                    BinaryOp::Pow => (5, 3),
                };
                a.write_at(f, left)?;
                if *op == BinaryOp::Pow {
                    f.write_str("^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                b.write_at(f, right)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Prints with the minimum parentheses needed for [`Expr::parse`] to
/// rebuild the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

/// Flattened form of one or more expressions for repeated evaluation.
///
/// Instructions are in dependency order and identical subtrees are shared,
/// so `tanh(x)` appearing in both components of a field is computed once
/// per call.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    instrs: Vec<Instr>,
    outputs: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Const(f64),
    X,
    Y,
    T,
    Neg(u32),
    Sin(u32),
    Cos(u32),
    Tan(u32),
    Tanh(u32),
    Exp(u32),
    Log(u32),
    Sqrt(u32),
    Abs(u32),
    Sign(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Square(u32),
    Powi(u32, i32),
    Pow(u32, u32),
}

#[derive(PartialEq, Eq, Hash)]
enum InstrKey {
    Const(u64),
    Var(Var),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
}

impl Program {
    pub fn compile(exprs: &[&Expr]) -> Program {
        let mut p = Program {
            instrs: Vec::new(),
            outputs: Vec::with_capacity(exprs.len()),
        };
        let mut seen = std::collections::HashMap::new();
        for e in exprs {
            let slot = p.emit(e, &mut seen);
            p.outputs.push(slot);
        }
        p
    }

    fn emit(&mut self, e: &Expr, seen: &mut std::collections::HashMap<InstrKey, usize>) -> usize {
        let (key, instr) = match e {
            Expr::Const(c) => (InstrKey::Const(c.to_bits()), Instr::Const(*c)),
            Expr::Var(v) => (
                InstrKey::Var(*v),
                match v {
                    Var::X => Instr::X,
                    Var::Y => Instr::Y,
                    Var::T => Instr::T,
                },
            ),
            Expr::Unary(op, a) => {
                let a = self.emit(a, seen);
                let r = a as u32;
                let instr = match op {
                    UnaryOp::Neg => Instr::Neg(r),
                    UnaryOp::Sin => Instr::Sin(r),
                    UnaryOp::Cos => Instr::Cos(r),
                    UnaryOp::Tan => Instr::Tan(r),
                    UnaryOp::Tanh => Instr::Tanh(r),
                    UnaryOp::Exp => Instr::Exp(r),
                    UnaryOp::Log => Instr::Log(r),
                    UnaryOp::Sqrt => Instr::Sqrt(r),
                    UnaryOp::Abs => Instr::Abs(r),
                    UnaryOp::Sign => Instr::Sign(r),
                };
                (InstrKey::Unary(*op, a), instr)
            }
            Expr::Binary(op, a, b) => {
                let a = self.emit(a, seen);
                let b = self.emit(b, seen);
                let (ra, rb) = (a as u32, b as u32);
                let instr = match op {
                    BinaryOp::Add => Instr::Add(ra, rb),
                    BinaryOp::Sub => Instr::Sub(ra, rb),
                    BinaryOp::Mul => Instr::Mul(ra, rb),
                    BinaryOp::Div => Instr::Div(ra, rb),
                    BinaryOp::Pow => match self.instrs[b] {
                        Instr::Const(2.0) => Instr::Square(ra),
                        Instr::Const(c) if c.fract() == 0.0 && c.abs() <= 64.0 => {
                            Instr::Powi(ra, c as i32)
                        }
                        _ => Instr::Pow(ra, rb),
                    },
                };
                (InstrKey::Binary(*op, a, b), instr)
            }
        };
        *seen.entry(key).or_insert_with(|| {
            self.instrs.push(instr);
            self.instrs.len() - 1
        })
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// Evaluates every compiled expression into `out`, which must hold one
    /// slot per expression.
    #[inline]
    pub fn eval_into(&self, x: f64, y: f64, t: f64, out: &mut [f64]) {
        match self.instrs.len() {
            0..=16 => self.run::<16>(x, y, t, out),
            17..=64 => self.run::<64>(x, y, t, out),
            n => self.run_heap(n, x, y, t, out),
        }
    }

    // `N` is a power of two; masking register indices with `N - 1` lets the
    // compiler drop bounds checks. Indices are always below `len() <= N`.
    #[inline]
    fn run<const N: usize>(&self, x: f64, y: f64, t: f64, out: &mut [f64]) {
        let mut regs = [0.0f64; N];
        let m = N - 1;
        for (k, instr) in self.instrs.iter().enumerate() {
            let r = |i: u32| regs[i as usize & m];
            regs[k & m] = step(*instr, x, y, t, r);
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            *o = regs[slot & m];
        }
    }

    fn run_heap(&self, n: usize, x: f64, y: f64, t: f64, out: &mut [f64]) {
        let mut regs = vec![0.0f64; n];
        for (k, instr) in self.instrs.iter().enumerate() {
            regs[k] = step(*instr, x, y, t, |i| regs[i as usize]);
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            *o = regs[slot];
        }
    }
}

#[inline(always)]
fn step(instr: Instr, x: f64, y: f64, t: f64, r: impl Fn(u32) -> f64) -> f64 {
    match instr {
        Instr::Const(c) => c,
        Instr::X => x,
        Instr::Y => y,
        Instr::T => t,
        Instr::Neg(a) => -r(a),
        Instr::Sin(a) => r(a).sin(),
        Instr::Cos(a) => r(a).cos(),
        Instr::Tan(a) => r(a).tan(),
        Instr::Tanh(a) => r(a).tanh(),
        Instr::Exp(a) => r(a).exp(),
        Instr::Log(a) => r(a).ln(),
        Instr::Sqrt(a) => r(a).sqrt(),
        Instr::Abs(a) => r(a).abs(),
        Instr::Sign(a) => sign(r(a)),
        Instr::Add(a, b) => r(a) + r(b),
        Instr::Sub(a, b) => r(a) - r(b),
        Instr::Mul(a, b) => r(a) * r(b),
        Instr::Div(a, b) => r(a) / r(b),
        Instr::Square(a) => {
            let v = r(a);
            v * v
        }
        Instr::Powi(a, n) => r(a).powi(n),
        Instr::Pow(a, b) => r(a).powf(r(b)),
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

fn fold_unary(op: UnaryOp, a: Expr) -> Expr {
    if let Expr::Const(c) = a {
        let v = op.apply(c);
        if v.is_finite() {
            return Expr::Const(v);
        }
    }
    Expr::unary(op, a)
}

fn fold_binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    if let (Expr::Const(p), Expr::Const(q)) = (&a, &b) {
        let v = op.apply(*p, *q);
        if v.is_finite() {
            return Expr::Const(v);
        }
    }
    match op {
        BinaryOp::Add if is_zero(&a) => b,
        BinaryOp::Add | BinaryOp::Sub if is_zero(&b) => a,
        BinaryOp::Sub if is_zero(&a) => fold_unary(UnaryOp::Neg, b),
        BinaryOp::Mul if is_zero(&a) || is_zero(&b) => Expr::Const(0.0),
        BinaryOp::Mul if is_one(&a) => b,
        BinaryOp::Mul | BinaryOp::Div | BinaryOp::Pow if is_one(&b) => a,
        _ => Expr::binary(op, a, b),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Token,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            tok: Token::End,
            tok_start: 0,
        }
    }

    fn parse(mut self) -> Result<Expr, ParseError> {
        self.advance()?;
        if self.tok == Token::End {
            return Err(self.error("empty expression"));
        }
        let e = self.expr()?;
        match self.tok {
            Token::End => Ok(e),
            Token::RParen => Err(self.error("unbalanced `)`")),
            _ => Err(self.error("unexpected token")),
        }
    }

    fn token_text(&self) -> String {
        let end = self.pos.max(self.tok_start);
        self.src[self.tok_start..end].to_string()
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError {
            offset: self.tok_start.min(self.src.len()),
            message: message.to_string(),
            token: self.token_text(),
        }
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            self.tok = Token::End;
            return Ok(());
        };
        self.tok = match c {
            b'0'..=b'9' | b'.' => self.number()?,
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Token::Ident(self.src[self.tok_start..self.pos].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Token::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            _ => {
                let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                self.pos += ch.len_utf8();
                return Err(self.error("unexpected character"));
            }
        };
        Ok(())
    }

    fn number(&mut self) -> Result<Token, ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let start = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - start
        };
        let mut n = digits(&mut self.pos);
        if bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(&mut self.pos);
        }
        if n == 0 {
            return Err(self.error("malformed number"));
        }
        if matches!(bytes.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(&mut self.pos) == 0 {
                return Err(self.error("malformed number"));
            }
        }
        // trailing `.` or letters glued to a literal, e.g. `1.2.3` or `2x`
        if matches!(bytes.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == b'.' || *c == b'_')
        {
            while matches!(bytes.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == b'.' || *c == b'_')
            {
                self.pos += 1;
            }
            return Err(self.error("malformed number"));
        }
        let text = &self.src[self.tok_start..self.pos];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Token::Num(v)),
            _ => Err(self.error("malformed number")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Token::Op('+') => BinaryOp::Add,
                Token::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Token::Op('*') => BinaryOp::Mul,
                Token::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.tok {
            Token::Op('-') => {
                self.advance()?;
                Ok(match self.unary()? {
                    Expr::Const(c) => Expr::Const(-c),
                    e => Expr::unary(UnaryOp::Neg, e),
                })
            }
            Token::Op('+') => {
                self.advance()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok == Token::Op('^') {
            self.advance()?;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match std::mem::replace(&mut self.tok, Token::End) {
            Token::Num(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Token::Ident(name) => {
                let var = match name.as_str() {
                    "x" => Some(Var::X),
                    "y" => Some(Var::Y),
                    "t" => Some(Var::T),
                    _ => None,
                };
                if let Some(v) = var {
                    self.advance()?;
                    return Ok(Expr::Var(v));
                }
                let Some(func) = UnaryOp::from_name(&name) else {
                    self.tok = Token::Ident(name);
                    return Err(self.error("unknown identifier"));
                };
                self.advance()?;
                if self.tok != Token::LParen {
                    return Err(self.error("expected `(` after function name"));
                }
                self.advance()?;
                let arg = self.expr()?;
                self.expect_rparen()?;
                Ok(Expr::unary(func, arg))
            }
            Token::LParen => {
                let open = self.tok_start;
                self.advance()?;
                if self.tok == Token::RParen {
                    return Err(self.error("empty parentheses"));
                }
                let e = self.expr()?;
                if self.tok == Token::End {
                    return Err(ParseError {
                        offset: open,
                        message: "unbalanced `(`".to_string(),
                        token: "(".to_string(),
                    });
                }
                self.expect_rparen()?;
                Ok(e)
            }
            Token::End => Err(self.error("unexpected end of input")),
            other => {
                self.tok = other;
                Err(self.error("expected a number, variable, function or `(`"))
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.tok {
            Token::RParen => self.advance(),
            Token::End => Err(self.error("unbalanced `(`: missing `)`")),
            _ => Err(self.error("expected `)`")),
        }
    }
}
