//! Scenario files: a line-oriented, sectioned `key = value` format that
//! declares a Hopf backend, a module algebra, deformation data, modules,
//! operators, connections, and the list of checks to run against them.
//!
//! Comments start with `#`.  Sections open with `[name]`.  Element literals
//! use `+`, `-`, `*`, `/` (by a rational constant), `^` (powers, and the
//! wedge of differential forms), `(x)` (tensor factors), `exp(...)`,
//! `h` (the deformation parameter), `@p` (point masses of a function
//! algebra), and the names declared by the scenario itself.  The names
//! `h`, `exp`, `x` (inside `(x)`), `d`, `A`, `trivial`, and `from_twist`
//! are reserved.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use hopfstar::calculus::Calculus;
use hopfstar::connection::{CalculusRef, Connection};
use hopfstar::homdef::Hom;
use hopfstar::hopf::{
    Backend, FiniteDimTables, HopfAlgebra, HopfElement, HopfRef, HopfTensor,
};
use hopfstar::modalg::{
    Algebra, AlgebraElement, AlgebraKind, AlgebraRef, ModuleElement, Space, SpaceAction,
    SpaceRef,
};
use hopfstar::probe::matrix_hom;
use hopfstar::scalar::Scalar;
use hopfstar::twist::Twist;

// ---------------------------------------------------------------------------
// Errors with locations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed text: lexing, grammar, table shapes.
    Syntax,
    /// A name that no declaration in scope provides.
    Unresolved,
    /// An `h` power (or `h` itself) beyond the declared truncation order.
    OrderMismatch,
    /// A structurally valid file describing an inconsistent scenario.
    Scenario,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ErrorKind::Syntax => "syntax",
            ErrorKind::Unresolved => "unresolved reference",
            ErrorKind::OrderMismatch => "order mismatch",
            ErrorKind::Scenario => "scenario",
        };
        write!(out, "{name}")
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioError {
    pub loc: Loc,
    pub kind: ErrorKind,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "{}: {} error: {}", self.loc, self.kind, self.message)
    }
}

impl std::error::Error for ScenarioError {}

fn err<T>(loc: Loc, kind: ErrorKind, message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError {
        loc,
        kind,
        message: message.into(),
    })
}

// ---------------------------------------------------------------------------
// Raw line scanning
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct RawKv {
    key: String,
    value: String,
    /// Location of the first character of the value.
    value_loc: Loc,
    /// Location of the first character of the key.
    key_loc: Loc,
}

#[derive(Debug)]
struct RawSection {
    name: String,
    loc: Loc,
    kvs: Vec<RawKv>,
}

fn scan_sections(text: &str) -> Result<Vec<RawSection>, ScenarioError> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let loc = Loc {
            line: line_no,
            col: indent + 1,
        };
        if let Some(inner) = trimmed.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                return err(loc, ErrorKind::Syntax, "unterminated section header");
            };
            let name = name.trim();
            if name.is_empty() {
                return err(loc, ErrorKind::Syntax, "empty section name");
            }
            sections.push(RawSection {
                name: name.to_string(),
                loc,
                kvs: Vec::new(),
            });
            continue;
        }
        let Some(eq) = line.find('=') else {
            return err(loc, ErrorKind::Syntax, "expected `key = value` or `[section]`");
        };
        let key = line[..eq].trim().to_string();
        if key.is_empty() {
            return err(loc, ErrorKind::Syntax, "missing key before `=`");
        }
        let value_raw = &line[eq + 1..];
        let value = value_raw.trim().to_string();
        let value_offset = eq + 1 + (value_raw.len() - value_raw.trim_start().len());
        let Some(section) = sections.last_mut() else {
            return err(loc, ErrorKind::Syntax, "key outside of any section");
        };
        section.kvs.push(RawKv {
            key,
            value,
            value_loc: Loc {
                line: line_no,
                col: value_offset + 1,
            },
            key_loc: loc,
        });
    }
    Ok(sections)
}

// ---------------------------------------------------------------------------
// Lexer for element literals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(i64),
    Ident(String),
    At(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Tensor,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    loc: Loc,
}

fn lex(value: &str, start: Loc) -> Result<Vec<Token>, ScenarioError> {
    let chars: Vec<char> = value.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let loc_at = |i: usize| Loc {
        line: start.line,
        col: start.col + i,
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let loc = loc_at(i);
        match c {
            '0'..='9' => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let Ok(n) = text.parse::<i64>() else {
                    return err(loc, ErrorKind::Syntax, format!("integer too large: {text}"));
                };
                out.push(Token {
                    tok: Tok::Num(n),
                    loc,
                });
                i = j;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[i..j].iter().collect()),
                    loc,
                });
                i = j;
            }
            '@' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if j == i + 1 {
                    return err(loc, ErrorKind::Syntax, "`@` must be followed by a point name");
                }
                out.push(Token {
                    tok: Tok::At(chars[i + 1..j].iter().collect()),
                    loc,
                });
                i = j;
            }
            '(' => {
                // `(x)` is the tensor-product operator, not a parenthesis.
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_whitespace() {
                    j += 1;
                }
                let mut tensor = false;
                if j < chars.len() && chars[j] == 'x' {
                    let after = j + 1;
                    let ident_continues = after < chars.len()
                        && (chars[after].is_ascii_alphanumeric() || chars[after] == '_');
                    if !ident_continues {
                        let mut k = after;
                        while k < chars.len() && chars[k].is_whitespace() {
                            k += 1;
                        }
                        if k < chars.len() && chars[k] == ')' {
                            out.push(Token {
                                tok: Tok::Tensor,
                                loc,
                            });
                            i = k + 1;
                            tensor = true;
                        }
                    }
                }
                if !tensor {
                    out.push(Token {
                        tok: Tok::LParen,
                        loc,
                    });
                    i += 1;
                }
            }
            ')' => {
                out.push(Token {
                    tok: Tok::RParen,
                    loc,
                });
                i += 1;
            }
            '[' => {
                out.push(Token {
                    tok: Tok::LBracket,
                    loc,
                });
                i += 1;
            }
            ']' => {
                out.push(Token {
                    tok: Tok::RBracket,
                    loc,
                });
                i += 1;
            }
            ',' => {
                out.push(Token {
                    tok: Tok::Comma,
                    loc,
                });
                i += 1;
            }
            '+' => {
                out.push(Token {
                    tok: Tok::Plus,
                    loc,
                });
                i += 1;
            }
            '-' => {
                out.push(Token {
                    tok: Tok::Minus,
                    loc,
                });
                i += 1;
            }
            '*' => {
                out.push(Token {
                    tok: Tok::Star,
                    loc,
                });
                i += 1;
            }
            '/' => {
                out.push(Token {
                    tok: Tok::Slash,
                    loc,
                });
                i += 1;
            }
            '^' => {
                out.push(Token {
                    tok: Tok::Caret,
                    loc,
                });
                i += 1;
            }
            other => {
                return err(loc, ErrorKind::Syntax, format!("unexpected character `{other}`"));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Values and evaluation contexts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Value {
    Scalar(Scalar),
    Hopf(HopfElement),
    Tensor(HopfTensor),
    Alg(AlgebraElement),
    Form(ModuleElement),
    /// A linear combination over a finite Hopf basis that exists only as a
    /// list of names so far (used while building structure tables).
    ProtoHopf(Vec<Scalar>),
    /// A combination of `b_i (x) b_j` over such a basis.
    ProtoTensor(Vec<Vec<Scalar>>),
    /// A module element over a basis that exists only as names so far
    /// (used while building action tables).
    ProtoModule(Vec<AlgebraElement>),
}

impl Value {
    fn kind_name(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Hopf(_) => "symmetry element",
            Value::Tensor(_) => "tensor",
            Value::Alg(_) => "algebra element",
            Value::Form(_) => "form",
            Value::ProtoHopf(_) => "basis combination",
            Value::ProtoTensor(_) => "basis tensor",
            Value::ProtoModule(_) => "module element",
        }
    }
}

#[derive(Clone, Copy)]
struct Ctx<'a> {
    order: usize,
    hopf: Option<&'a HopfRef>,
    alg: Option<&'a AlgebraRef>,
    calc: Option<&'a Calculus>,
    finite_basis: Option<&'a [String]>,
    module_basis: Option<&'a [String]>,
}

impl<'a> Ctx<'a> {
    fn resolve_ident(&self, name: &str, loc: Loc) -> Result<Value, ScenarioError> {
        if name == "h" {
            if self.order < 1 {
                return err(
                    loc,
                    ErrorKind::OrderMismatch,
                    format!("`h` exceeds the truncation order {}", self.order),
                );
            }
            return Ok(Value::Scalar(Scalar::h_power(1, self.order)));
        }
        if let Some(basis) = self.module_basis {
            if let Some(j) = basis.iter().position(|b| b == name) {
                let alg = self.alg.expect("module literals need an algebra");
                let mut coeffs = vec![AlgebraElement::zero(alg); basis.len()];
                coeffs[j] = AlgebraElement::one(alg);
                return Ok(Value::ProtoModule(coeffs));
            }
        }
        if let Some(basis) = self.finite_basis {
            if let Some(j) = basis.iter().position(|b| b == name) {
                let mut coeffs = vec![Scalar::zero(self.order); basis.len()];
                coeffs[j] = Scalar::one(self.order);
                return Ok(Value::ProtoHopf(coeffs));
            }
        }
        if let (Some(calc), Some(alg)) = (self.calc, self.alg) {
            if let (Some(rest), AlgebraKind::Poly { vars }) = (name.strip_prefix('d'), alg.kind())
            {
                if let Some(i) = vars.iter().position(|v| v == rest) {
                    let one = AlgebraElement::one(alg);
                    return Ok(Value::Form(calc.form(1, &[i], &one)));
                }
            }
        }
        if let Some(alg) = self.alg {
            if let AlgebraKind::Poly { vars } = alg.kind() {
                if let Some(i) = vars.iter().position(|v| v == name) {
                    return Ok(Value::Alg(AlgebraElement::var(alg, i)));
                }
            }
        }
        if let Some(hopf) = self.hopf {
            match &hopf.backend {
                Backend::AbelianPbw { generators } => {
                    if let Some(i) = generators.iter().position(|g| g == name) {
                        return Ok(Value::Hopf(HopfElement::generator(hopf, i)));
                    }
                }
                Backend::FiniteDim(tables) => {
                    if let Some(i) = tables.names.iter().position(|b| b == name) {
                        return Ok(Value::Hopf(HopfElement::basis(hopf, i)));
                    }
                }
            }
        }
        err(loc, ErrorKind::Unresolved, format!("unknown name `{name}`"))
    }

    fn resolve_point(&self, name: &str, loc: Loc) -> Result<Value, ScenarioError> {
        if let Some(alg) = self.alg {
            if let AlgebraKind::FinFun { points } = alg.kind() {
                if let Some(p) = points.iter().position(|q| q == name) {
                    return Ok(Value::Alg(AlgebraElement::point(alg, p)));
                }
            }
        }
        err(
            loc,
            ErrorKind::Unresolved,
            format!("unknown point `@{name}`"),
        )
    }
}

// ---------------------------------------------------------------------------
// Arithmetic on values
// ---------------------------------------------------------------------------

fn type_error<T>(loc: Loc, op: &str, a: &Value, b: &Value) -> Result<T, ScenarioError> {
    err(
        loc,
        ErrorKind::Syntax,
        format!("cannot {op} a {} and a {}", a.kind_name(), b.kind_name()),
    )
}

fn scale_value(v: Value, s: &Scalar) -> Value {
    match v {
        Value::Scalar(a) => Value::Scalar(&a * s),
        Value::Hopf(a) => Value::Hopf(a.scale(s)),
        Value::Tensor(a) => Value::Tensor(a.scale(s)),
        Value::Alg(a) => Value::Alg(a.scale(s)),
        Value::Form(a) => Value::Form(a.scale(s)),
        Value::ProtoHopf(c) => Value::ProtoHopf(c.into_iter().map(|x| &x * s).collect()),
        Value::ProtoTensor(m) => Value::ProtoTensor(
            m.into_iter()
                .map(|row| row.into_iter().map(|x| &x * s).collect())
                .collect(),
        ),
        Value::ProtoModule(c) => {
            Value::ProtoModule(c.into_iter().map(|x| x.scale(s)).collect())
        }
    }
}

fn promote_for_add(ctx: &Ctx, s: &Scalar, like: &Value, loc: Loc) -> Result<Value, ScenarioError> {
    match like {
        Value::Scalar(_) => Ok(Value::Scalar(s.clone())),
        Value::Hopf(_) => {
            let hopf = ctx
                .hopf
                .ok_or(())
                .or_else(|()| err(loc, ErrorKind::Syntax, "no symmetry algebra in scope"))?;
            Ok(Value::Hopf(HopfElement::one(hopf).scale(s)))
        }
        Value::Tensor(t) => Ok(Value::Tensor(
            HopfTensor::identity(t.hopf(), t.rank()).scale(s),
        )),
        Value::Alg(a) => Ok(Value::Alg(AlgebraElement::one(a.algebra()).scale(s))),
        Value::ProtoHopf(c) => {
            let basis = ctx.finite_basis.expect("proto value implies a basis");
            let Some(j) = basis.iter().position(|b| b == "1") else {
                return err(
                    loc,
                    ErrorKind::Syntax,
                    "a bare scalar needs a basis element named `1`",
                );
            };
            let mut out = vec![Scalar::zero(ctx.order); c.len()];
            out[j] = s.clone();
            Ok(Value::ProtoHopf(out))
        }
        Value::ProtoTensor(m) => {
            let basis = ctx.finite_basis.expect("proto value implies a basis");
            let Some(j) = basis.iter().position(|b| b == "1") else {
                return err(
                    loc,
                    ErrorKind::Syntax,
                    "a bare scalar needs a basis element named `1`",
                );
            };
            let mut out = vec![vec![Scalar::zero(ctx.order); m.len()]; m.len()];
            out[j][j] = s.clone();
            Ok(Value::ProtoTensor(out))
        }
        Value::Form(f) => {
            if s.is_zero() {
                Ok(Value::Form(ModuleElement::zero(f.space())))
            } else {
                err(
                    loc,
                    ErrorKind::Syntax,
                    "cannot add a nonzero scalar to a form",
                )
            }
        }
        Value::ProtoModule(c) => {
            if s.is_zero() {
                let alg = ctx.alg.expect("module literals need an algebra");
                Ok(Value::ProtoModule(vec![
                    AlgebraElement::zero(alg);
                    c.len()
                ]))
            } else {
                err(
                    loc,
                    ErrorKind::Syntax,
                    "cannot add a bare scalar to a module element",
                )
            }
        }
    }
}

fn add_values(ctx: &Ctx, a: Value, b: Value, loc: Loc) -> Result<Value, ScenarioError> {
    let (a, b) = match (a, b) {
        (Value::Scalar(s), other) if !matches!(other, Value::Scalar(_)) => {
            (promote_for_add(ctx, &s, &other, loc)?, other)
        }
        (other, Value::Scalar(s)) if !matches!(other, Value::Scalar(_)) => {
            let p = promote_for_add(ctx, &s, &other, loc)?;
            (other, p)
        }
        pair => pair,
    };
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Ok(Value::Scalar(&x + &y)),
        (Value::Hopf(x), Value::Hopf(y)) => Ok(Value::Hopf(x.add(&y))),
        (Value::Tensor(x), Value::Tensor(y)) => {
            if x.rank() != y.rank() {
                return err(
                    loc,
                    ErrorKind::Syntax,
                    format!("cannot add tensors of rank {} and {}", x.rank(), y.rank()),
                );
            }
            Ok(Value::Tensor(x.add(&y)))
        }
        (Value::Alg(x), Value::Alg(y)) => Ok(Value::Alg(x.add(&y))),
        (Value::Form(x), Value::Form(y)) => {
            if !Space::same(x.space(), y.space()) {
                return err(
                    loc,
                    ErrorKind::Syntax,
                    "cannot add forms of different degree",
                );
            }
            Ok(Value::Form(x.add(&y)))
        }
        (Value::ProtoHopf(x), Value::ProtoHopf(y)) => Ok(Value::ProtoHopf(
            x.iter().zip(&y).map(|(p, q)| p + q).collect(),
        )),
        (Value::ProtoTensor(x), Value::ProtoTensor(y)) => Ok(Value::ProtoTensor(
            x.iter()
                .zip(&y)
                .map(|(r, s)| r.iter().zip(s).map(|(p, q)| p + q).collect())
                .collect(),
        )),
        (Value::ProtoModule(x), Value::ProtoModule(y)) => Ok(Value::ProtoModule(
            x.iter().zip(&y).map(|(p, q)| p.add(q)).collect(),
        )),
        (a, b) => type_error(loc, "add", &a, &b),
    }
}

fn mul_values(ctx: &Ctx, a: Value, b: Value, loc: Loc) -> Result<Value, ScenarioError> {
    match (a, b) {
        (Value::Scalar(s), other) => Ok(scale_value(other, &s)),
        (other, Value::Scalar(s)) => Ok(scale_value(other, &s)),
        (Value::Hopf(x), Value::Hopf(y)) => Ok(Value::Hopf(x.mul(&y))),
        (Value::Tensor(x), Value::Tensor(y)) => {
            if x.rank() != y.rank() {
                return err(
                    loc,
                    ErrorKind::Syntax,
                    "cannot multiply tensors of different rank",
                );
            }
            Ok(Value::Tensor(x.mul(&y)))
        }
        (Value::Alg(x), Value::Alg(y)) => Ok(Value::Alg(x.mul(&y))),
        (Value::Alg(a), Value::Form(f)) | (Value::Form(f), Value::Alg(a)) => {
            Ok(Value::Form(f.mul_alg(&a)))
        }
        (Value::Alg(a), Value::ProtoModule(c)) | (Value::ProtoModule(c), Value::Alg(a)) => Ok(
            Value::ProtoModule(c.into_iter().map(|x| x.mul(&a)).collect()),
        ),
        (a @ Value::ProtoHopf(_), b) | (a, b @ Value::ProtoHopf(_)) => {
            let _ = ctx;
            type_error(loc, "multiply", &a, &b)
        }
        (a, b) => type_error(loc, "multiply", &a, &b),
    }
}

fn tensor_append(t: &HopfTensor, e: &HopfElement, prepend: bool) -> HopfTensor {
    let hopf = t.hopf().clone();
    let rank = t.rank() + 1;
    let mut terms = Vec::new();
    for (words, c) in t.terms() {
        for (w, c2) in e.terms() {
            let mut legs = words.clone();
            if prepend {
                legs.insert(0, w.clone());
            } else {
                legs.push(w.clone());
            }
            terms.push((legs, c * c2));
        }
    }
    HopfTensor::from_terms(&hopf, rank, terms)
}

fn tensor_values(ctx: &Ctx, a: Value, b: Value, loc: Loc) -> Result<Value, ScenarioError> {
    // Scalars entering a tensor factor stand for multiples of the unit.
    let lift = |v: Value| -> Result<Value, ScenarioError> {
        match v {
            Value::Scalar(s) => {
                if let Some(basis) = ctx.finite_basis {
                    let like = Value::ProtoHopf(vec![Scalar::zero(ctx.order); basis.len()]);
                    promote_for_add(ctx, &s, &like, loc)
                } else {
                    let hopf = ctx
                        .hopf
                        .ok_or(())
                        .or_else(|()| err(loc, ErrorKind::Syntax, "no symmetry algebra in scope"))?;
                    Ok(Value::Hopf(HopfElement::one(hopf).scale(&s)))
                }
            }
            other => Ok(other),
        }
    };
    match (lift(a)?, lift(b)?) {
        (Value::Hopf(x), Value::Hopf(y)) => Ok(Value::Tensor(HopfTensor::from_legs(&[x, y]))),
        (Value::Tensor(t), Value::Hopf(y)) => Ok(Value::Tensor(tensor_append(&t, &y, false))),
        (Value::Hopf(x), Value::Tensor(t)) => Ok(Value::Tensor(tensor_append(&t, &x, true))),
        (Value::ProtoHopf(x), Value::ProtoHopf(y)) => Ok(Value::ProtoTensor(
            x.iter()
                .map(|p| y.iter().map(|q| p * q).collect())
                .collect(),
        )),
        (a, b) => type_error(loc, "tensor", &a, &b),
    }
}

fn caret_values(ctx: &Ctx, a: Value, b: Value, loc: Loc) -> Result<Value, ScenarioError> {
    if let (Value::Form(x), Value::Form(y)) = (&a, &b) {
        let calc = ctx
            .calc
            .ok_or(())
            .or_else(|()| err(loc, ErrorKind::Syntax, "no differential calculus in scope"))?;
        return match calc.wedge_classical(x, y) {
            Some(w) => Ok(Value::Form(w)),
            None => err(loc, ErrorKind::Syntax, "wedge product exceeds the top degree"),
        };
    }
    let Value::Scalar(s) = &b else {
        return type_error(loc, "exponentiate", &a, &b);
    };
    let Some(k) = scalar_as_nat(s) else {
        return err(
            loc,
            ErrorKind::Syntax,
            "exponents must be non-negative integers",
        );
    };
    match a {
        Value::Scalar(s0) => {
            if let Some(v) = s0.h_valuation() {
                if v >= 1 && v.saturating_mul(k) > ctx.order {
                    return err(
                        loc,
                        ErrorKind::OrderMismatch,
                        format!(
                            "h power {} exceeds the truncation order {}",
                            v * k,
                            ctx.order
                        ),
                    );
                }
            }
            let mut out = Scalar::one(ctx.order);
            for _ in 0..k {
                out = &out * &s0;
            }
            Ok(Value::Scalar(out))
        }
        Value::Hopf(x) => {
            let mut out = HopfElement::one(x.hopf());
            for _ in 0..k {
                out = out.mul(&x);
            }
            Ok(Value::Hopf(out))
        }
        Value::Alg(x) => {
            let mut out = AlgebraElement::one(x.algebra());
            for _ in 0..k {
                out = out.mul(&x);
            }
            Ok(Value::Alg(out))
        }
        other => err(
            loc,
            ErrorKind::Syntax,
            format!("cannot exponentiate a {}", other.kind_name()),
        ),
    }
}

fn scalar_as_nat(s: &Scalar) -> Option<usize> {
    match s.h_valuation() {
        None => Some(0),
        Some(0) => {
            for k in 1..=s.order() {
                if !num::Zero::is_zero(s.coeff(k)) {
                    return None;
                }
            }
            let c = s.coeff(0);
            if !c.is_integer() {
                return None;
            }
            let n = c.to_integer();
            if n < num::BigInt::from(0) {
                return None;
            }
            use num::ToPrimitive;
            n.to_usize()
        }
        Some(_) => None,
    }
}

fn div_values(a: Value, b: Value, loc: Loc) -> Result<Value, ScenarioError> {
    let Value::Scalar(s) = &b else {
        return type_error(loc, "divide", &a, &b);
    };
    let constant = match s.h_valuation() {
        Some(0) => (1..=s.order()).all(|k| num::Zero::is_zero(s.coeff(k))),
        _ => false,
    };
    if !constant {
        return err(
            loc,
            ErrorKind::Syntax,
            "division is only defined by a nonzero rational constant",
        );
    }
    let recip = num::BigRational::from_integer(1.into()) / s.coeff(0).clone();
    Ok(scale_value(a, &Scalar::from_rational(recip, s.order())))
}

// ---------------------------------------------------------------------------
// Pratt parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    ctx: Ctx<'a>,
    end: Loc,
}

impl<'a> Parser<'a> {
    fn new(value: &str, start: Loc, ctx: Ctx<'a>) -> Result<Self, ScenarioError> {
        let tokens = lex(value, start)?;
        let end = Loc {
            line: start.line,
            col: start.col + value.chars().count(),
        };
        Ok(Parser {
            tokens,
            pos: 0,
            ctx,
            end,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn loc(&self) -> Loc {
        self.tokens
            .get(self.pos)
            .map(|t| t.loc)
            .unwrap_or(self.end)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ScenarioError> {
        let loc = self.loc();
        match self.advance() {
            Some(t) if t.tok == tok => Ok(()),
            _ => err(loc, ErrorKind::Syntax, format!("expected {what}")),
        }
    }

    fn atom(&mut self) -> Result<Value, ScenarioError> {
        let loc = self.loc();
        let Some(token) = self.advance() else {
            return err(loc, ErrorKind::Syntax, "expected an expression");
        };
        match token.tok {
            Tok::Num(n) => Ok(Value::Scalar(Scalar::from_int(n, self.ctx.order))),
            Tok::Ident(name) if name == "exp" && self.peek() == Some(&Tok::LParen) => {
                self.advance();
                let arg = self.expr(0)?;
                self.expect(Tok::RParen, "`)` after the argument of exp")?;
                match arg {
                    Value::Tensor(t) => match HopfTensor::exp(&t) {
                        Ok(e) => Ok(Value::Tensor(e)),
                        Err(e) => err(loc, ErrorKind::Scenario, format!("exp failed: {e}")),
                    },
                    other => err(
                        loc,
                        ErrorKind::Syntax,
                        format!("exp takes a tensor, not a {}", other.kind_name()),
                    ),
                }
            }
            Tok::Ident(name) => self.ctx.resolve_ident(&name, token.loc),
            Tok::At(name) => self.ctx.resolve_point(&name, token.loc),
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Minus => {
                let rhs = self.expr(35)?;
                Ok(scale_value(
                    rhs,
                    &Scalar::from_int(-1, self.ctx.order),
                ))
            }
            Tok::Plus => self.expr(35),
            other => err(
                token.loc,
                ErrorKind::Syntax,
                format!("unexpected token `{other:?}`"),
            ),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Value, ScenarioError> {
        let mut lhs = self.atom()?;
        loop {
            let (op, bp) = match self.peek() {
                Some(Tok::Plus) => (Tok::Plus, 10),
                Some(Tok::Minus) => (Tok::Minus, 10),
                Some(Tok::Tensor) => (Tok::Tensor, 20),
                Some(Tok::Star) => (Tok::Star, 30),
                Some(Tok::Slash) => (Tok::Slash, 30),
                Some(Tok::Caret) => (Tok::Caret, 40),
                _ => break,
            };
            if bp < min_bp {
                break;
            }
            let op_loc = self.loc();
            self.advance();
            let rhs = self.expr(bp + 1)?;
            lhs = match op {
                Tok::Plus => add_values(&self.ctx, lhs, rhs, op_loc)?,
                Tok::Minus => {
                    let neg = scale_value(rhs, &Scalar::from_int(-1, self.ctx.order));
                    add_values(&self.ctx, lhs, neg, op_loc)?
                }
                Tok::Tensor => tensor_values(&self.ctx, lhs, rhs, op_loc)?,
                Tok::Star => mul_values(&self.ctx, lhs, rhs, op_loc)?,
                Tok::Slash => div_values(lhs, rhs, op_loc)?,
                Tok::Caret => caret_values(&self.ctx, lhs, rhs, op_loc)?,
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn finish(mut self) -> Result<Value, ScenarioError> {
        let v = self.expr(0)?;
        if self.pos != self.tokens.len() {
            return err(self.loc(), ErrorKind::Syntax, "trailing input after expression");
        }
        Ok(v)
    }

    /// `[[cell, cell], [cell, cell]]` — a rectangular matrix of expressions.
    fn matrix(mut self) -> Result<Vec<Vec<Value>>, ScenarioError> {
        self.expect(Tok::LBracket, "`[` opening a matrix")?;
        let mut rows = Vec::new();
        loop {
            self.expect(Tok::LBracket, "`[` opening a matrix row")?;
            let mut row = Vec::new();
            if self.peek() == Some(&Tok::RBracket) {
                self.advance();
            } else {
                loop {
                    row.push(self.expr(0)?);
                    match self.advance() {
                        Some(Token {
                            tok: Tok::Comma, ..
                        }) => continue,
                        Some(Token {
                            tok: Tok::RBracket, ..
                        }) => break,
                        other => {
                            let loc = other.map(|t| t.loc).unwrap_or(self.end);
                            return err(loc, ErrorKind::Syntax, "expected `,` or `]` in a row");
                        }
                    }
                }
            }
            rows.push(row);
            match self.advance() {
                Some(Token {
                    tok: Tok::Comma, ..
                }) => continue,
                Some(Token {
                    tok: Tok::RBracket, ..
                }) => break,
                other => {
                    let loc = other.map(|t| t.loc).unwrap_or(self.end);
                    return err(loc, ErrorKind::Syntax, "expected `,` or `]` after a row");
                }
            }
        }
        if self.pos != self.tokens.len() {
            return err(self.loc(), ErrorKind::Syntax, "trailing input after matrix");
        }
        let width = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != width) {
            return err(self.end, ErrorKind::Syntax, "matrix rows have unequal lengths");
        }
        Ok(rows)
    }
}

fn eval(value: &str, loc: Loc, ctx: Ctx) -> Result<Value, ScenarioError> {
    Parser::new(value, loc, ctx)?.finish()
}

fn eval_matrix(value: &str, loc: Loc, ctx: Ctx) -> Result<Vec<Vec<Value>>, ScenarioError> {
    Parser::new(value, loc, ctx)?.matrix()
}

// ---------------------------------------------------------------------------
// Coercions from values to the shapes sections need
// ---------------------------------------------------------------------------

fn expect_scalar(v: Value, loc: Loc) -> Result<Scalar, ScenarioError> {
    match v {
        Value::Scalar(s) => Ok(s),
        other => err(
            loc,
            ErrorKind::Syntax,
            format!("expected a scalar, found a {}", other.kind_name()),
        ),
    }
}

fn expect_hopf(v: Value, hopf: &HopfRef, loc: Loc) -> Result<HopfElement, ScenarioError> {
    match v {
        Value::Hopf(x) => Ok(x),
        Value::Scalar(s) => Ok(HopfElement::one(hopf).scale(&s)),
        other => err(
            loc,
            ErrorKind::Syntax,
            format!("expected a symmetry element, found a {}", other.kind_name()),
        ),
    }
}

fn expect_tensor2(v: Value, hopf: &HopfRef, loc: Loc) -> Result<HopfTensor, ScenarioError> {
    match v {
        Value::Tensor(t) if t.rank() == 2 => Ok(t),
        Value::Tensor(t) => err(
            loc,
            ErrorKind::Syntax,
            format!("expected a rank-2 tensor, found rank {}", t.rank()),
        ),
        Value::Scalar(s) => Ok(HopfTensor::identity(hopf, 2).scale(&s)),
        other => err(
            loc,
            ErrorKind::Syntax,
            format!("expected a rank-2 tensor, found a {}", other.kind_name()),
        ),
    }
}

fn expect_alg(v: Value, alg: &AlgebraRef, loc: Loc) -> Result<AlgebraElement, ScenarioError> {
    match v {
        Value::Alg(a) => Ok(a),
        Value::Scalar(s) => Ok(AlgebraElement::one(alg).scale(&s)),
        other => err(
            loc,
            ErrorKind::Syntax,
            format!("expected an algebra element, found a {}", other.kind_name()),
        ),
    }
}

fn expect_form1(v: Value, calc: &Calculus, loc: Loc) -> Result<ModuleElement, ScenarioError> {
    match v {
        Value::Form(f) => {
            if calc.degree_of(f.space()) == Some(1) {
                Ok(f)
            } else {
                err(loc, ErrorKind::Syntax, "expected a one-form")
            }
        }
        Value::Scalar(s) if s.is_zero() => Ok(ModuleElement::zero(calc.omega(1))),
        other => err(
            loc,
            ErrorKind::Syntax,
            format!("expected a one-form, found a {}", other.kind_name()),
        ),
    }
}

fn expect_proto_hopf(
    v: Value,
    basis: &[String],
    order: usize,
    loc: Loc,
) -> Result<Vec<Scalar>, ScenarioError> {
    match v {
        Value::ProtoHopf(c) => Ok(c),
        Value::Scalar(s) => {
            let Some(j) = basis.iter().position(|b| b == "1") else {
                return err(
                    loc,
                    ErrorKind::Syntax,
                    "a bare scalar needs a basis element named `1`",
                );
            };
            let mut out = vec![Scalar::zero(order); basis.len()];
            out[j] = s;
            Ok(out)
        }
        other => err(
            loc,
            ErrorKind::Syntax,
            format!("expected a basis combination, found a {}", other.kind_name()),
        ),
    }
}

fn expect_proto_tensor(
    v: Value,
    basis: &[String],
    order: usize,
    loc: Loc,
) -> Result<Vec<Vec<Scalar>>, ScenarioError> {
    match v {
        Value::ProtoTensor(m) => Ok(m),
        Value::Scalar(s) => {
            let Some(j) = basis.iter().position(|b| b == "1") else {
                return err(
                    loc,
                    ErrorKind::Syntax,
                    "a bare scalar needs a basis element named `1`",
                );
            };
            let mut out = vec![vec![Scalar::zero(order); basis.len()]; basis.len()];
            out[j][j] = s;
            Ok(out)
        }
        other => err(
            loc,
            ErrorKind::Syntax,
            format!("expected a basis tensor, found a {}", other.kind_name()),
        ),
    }
}

fn expect_proto_module(
    v: Value,
    alg: &AlgebraRef,
    rank: usize,
    loc: Loc,
) -> Result<Vec<AlgebraElement>, ScenarioError> {
    match v {
        Value::ProtoModule(c) => Ok(c),
        Value::Scalar(s) if s.is_zero() => Ok(vec![AlgebraElement::zero(alg); rank]),
        other => err(
            loc,
            ErrorKind::Syntax,
            format!("expected a module element, found a {}", other.kind_name()),
        ),
    }
}

// ---------------------------------------------------------------------------
// The assembled scenario
// ---------------------------------------------------------------------------

/// How the scenario wants its R-matrix built.
#[derive(Debug, Clone)]
pub enum RSpec {
    Trivial,
    FromTwist,
    Explicit(HopfTensor, HopfTensor),
}

/// One requested check with its parameters.
#[derive(Debug, Clone)]
pub struct CheckRequest {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub loc: Loc,
}

impl CheckRequest {
    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(|s| s.as_str())
    }
}

pub struct Scenario {
    pub name: String,
    pub order: usize,
    pub probe_degree: u32,
    pub seed: u64,
    pub hopf: HopfRef,
    pub algebra: Option<AlgebraRef>,
    pub twist: Option<Twist>,
    pub rmatrix: RSpec,
    pub calculus: Option<CalculusRef>,
    pub modules: Vec<(String, SpaceRef)>,
    pub line_module: Option<SpaceRef>,
    pub homs: Vec<(String, Hom)>,
    pub connections: Vec<(String, Connection)>,
    pub checks: Vec<CheckRequest>,
}

impl Scenario {
    pub fn module(&self, name: &str) -> Option<&SpaceRef> {
        if name == "A" {
            return self.line_module.as_ref();
        }
        self.modules.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn hom(&self, name: &str) -> Option<&Hom> {
        self.homs.iter().find(|(n, _)| n == name).map(|(_, h)| h)
    }

    pub fn connection(&self, name: &str) -> Option<&Connection> {
        self.connections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
    }
}

// ---------------------------------------------------------------------------
// Section builders
// ---------------------------------------------------------------------------

struct Builder {
    name: String,
    order: usize,
    probe_degree: u32,
    seed: u64,
    hopf: Option<HopfRef>,
    algebra: Option<AlgebraRef>,
    twist: Option<Twist>,
    rmatrix: RSpec,
    calculus: Option<CalculusRef>,
    modules: Vec<(String, SpaceRef)>,
    line_module: Option<SpaceRef>,
    homs: Vec<(String, Hom)>,
    connections: Vec<(String, Connection)>,
    checks: Vec<CheckRequest>,
}

impl Builder {
    fn hopf(&self, loc: Loc) -> Result<&HopfRef, ScenarioError> {
        match &self.hopf {
            Some(h) => Ok(h),
            None => err(loc, ErrorKind::Scenario, "this section needs a [hopf.*] section first"),
        }
    }

    fn algebra(&self, loc: Loc) -> Result<&AlgebraRef, ScenarioError> {
        match &self.algebra {
            Some(a) => Ok(a),
            None => err(loc, ErrorKind::Scenario, "this section needs an [algebra] section first"),
        }
    }

    fn ctx(&self) -> Ctx<'_> {
        Ctx {
            order: self.order,
            hopf: self.hopf.as_ref(),
            alg: self.algebra.as_ref(),
            calc: self.calculus.as_deref(),
            finite_basis: None,
            module_basis: None,
        }
    }

    fn module(&self, name: &str, loc: Loc) -> Result<SpaceRef, ScenarioError> {
        if name == "A" {
            return match &self.line_module {
                Some(s) => Ok(s.clone()),
                None => err(loc, ErrorKind::Scenario, "the module `A` needs an [algebra] section"),
            };
        }
        match self.modules.iter().find(|(n, _)| n == name) {
            Some((_, s)) => Ok(s.clone()),
            None => err(
                loc,
                ErrorKind::Unresolved,
                format!("unknown module `{name}`"),
            ),
        }
    }
}

fn single_value<'a>(
    section: &'a RawSection,
    key: &str,
) -> Result<Option<&'a RawKv>, ScenarioError> {
    let mut found = None;
    for kv in &section.kvs {
        if kv.key == key {
            if found.is_some() {
                return err(
                    kv.key_loc,
                    ErrorKind::Syntax,
                    format!("duplicate key `{key}`"),
                );
            }
            found = Some(kv);
        }
    }
    Ok(found)
}

fn required_value<'a>(section: &'a RawSection, key: &str) -> Result<&'a RawKv, ScenarioError> {
    match single_value(section, key)? {
        Some(kv) => Ok(kv),
        None => err(
            section.loc,
            ErrorKind::Syntax,
            format!("section [{}] needs `{key} = ...`", section.name),
        ),
    }
}

fn parse_names(kv: &RawKv) -> Result<Vec<String>, ScenarioError> {
    let names: Vec<String> = kv.value.split_whitespace().map(|s| s.to_string()).collect();
    if names.is_empty() {
        return err(kv.value_loc, ErrorKind::Syntax, "expected at least one name");
    }
    let mut seen = BTreeSet::new();
    for n in &names {
        if !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return err(
                kv.value_loc,
                ErrorKind::Syntax,
                format!("invalid name `{n}`"),
            );
        }
        if !seen.insert(n.clone()) {
            return err(
                kv.value_loc,
                ErrorKind::Syntax,
                format!("duplicate name `{n}`"),
            );
        }
    }
    Ok(names)
}

fn parse_uint(kv: &RawKv) -> Result<u64, ScenarioError> {
    kv.value.trim().parse::<u64>().map_err(|_| ScenarioError {
        loc: kv.value_loc,
        kind: ErrorKind::Syntax,
        message: format!("expected a non-negative integer, found `{}`", kv.value),
    })
}

fn build_scenario_section(b: &mut Builder, section: &RawSection) -> Result<(), ScenarioError> {
    for kv in &section.kvs {
        match kv.key.as_str() {
            "name" => b.name = kv.value.clone(),
            "order" => b.order = parse_uint(kv)? as usize,
            "probe-degree" => b.probe_degree = parse_uint(kv)? as u32,
            "seed" => b.seed = parse_uint(kv)?,
            other => {
                return err(
                    kv.key_loc,
                    ErrorKind::Syntax,
                    format!("unknown key `{other}` in [scenario]"),
                )
            }
        }
    }
    if required_value(section, "order").is_err() {
        return err(section.loc, ErrorKind::Syntax, "section [scenario] needs `order = ...`");
    }
    if b.probe_degree < 1 {
        return err(section.loc, ErrorKind::Scenario, "probe-degree must be at least 1");
    }
    Ok(())
}

fn build_hopf_abelian(b: &mut Builder, section: &RawSection) -> Result<(), ScenarioError> {
    let gens = parse_names(required_value(section, "generators")?)?;
    for kv in &section.kvs {
        if kv.key != "generators" {
            return err(
                kv.key_loc,
                ErrorKind::Syntax,
                format!("unknown key `{}` in [hopf.abelian]", kv.key),
            );
        }
    }
    b.hopf = Some(HopfAlgebra::abelian_pbw(gens, b.order));
    Ok(())
}

fn build_hopf_finite(b: &mut Builder, section: &RawSection) -> Result<(), ScenarioError> {
    let basis = parse_names(required_value(section, "basis")?)?;
    let n = basis.len();
    let order = b.order;
    let index_of = |name: &str, loc: Loc| -> Result<usize, ScenarioError> {
        basis.iter().position(|b| b == name).ok_or(ScenarioError {
            loc,
            kind: ErrorKind::Unresolved,
            message: format!("unknown basis element `{name}`"),
        })
    };
    let ctx = Ctx {
        order,
        hopf: None,
        alg: None,
        calc: None,
        finite_basis: Some(&basis),
        module_basis: None,
    };

    let mut product: Vec<Vec<Option<Vec<(usize, Scalar)>>>> = vec![vec![None; n]; n];
    let mut coproduct: Vec<Option<Vec<(usize, usize, Scalar)>>> = vec![None; n];
    let mut counit: Vec<Option<Scalar>> = vec![None; n];
    let mut antipode: Vec<Option<Vec<(usize, Scalar)>>> = vec![None; n];
    let mut unit: Option<Vec<(usize, Scalar)>> = None;

    let sparse = |dense: Vec<Scalar>| -> Vec<(usize, Scalar)> {
        dense
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .collect()
    };

    for kv in &section.kvs {
        let parts: Vec<&str> = kv.key.split('.').collect();
        match parts.as_slice() {
            ["basis"] => {}
            ["unit"] => {
                let v = eval(&kv.value, kv.value_loc, ctx)?;
                unit = Some(sparse(expect_proto_hopf(v, &basis, order, kv.value_loc)?));
            }
            ["mul", a, c] => {
                let i = index_of(a, kv.key_loc)?;
                let j = index_of(c, kv.key_loc)?;
                let v = eval(&kv.value, kv.value_loc, ctx)?;
                product[i][j] = Some(sparse(expect_proto_hopf(v, &basis, order, kv.value_loc)?));
            }
            ["coproduct", a] => {
                let i = index_of(a, kv.key_loc)?;
                let v = eval(&kv.value, kv.value_loc, ctx)?;
                let m = expect_proto_tensor(v, &basis, order, kv.value_loc)?;
                let mut cell = Vec::new();
                for (j, row) in m.iter().enumerate() {
                    for (k, c) in row.iter().enumerate() {
                        if !c.is_zero() {
                            cell.push((j, k, c.clone()));
                        }
                    }
                }
                coproduct[i] = Some(cell);
            }
            ["counit", a] => {
                let i = index_of(a, kv.key_loc)?;
                let v = eval(&kv.value, kv.value_loc, ctx)?;
                counit[i] = Some(expect_scalar(v, kv.value_loc)?);
            }
            ["antipode", a] => {
                let i = index_of(a, kv.key_loc)?;
                let v = eval(&kv.value, kv.value_loc, ctx)?;
                antipode[i] = Some(sparse(expect_proto_hopf(v, &basis, order, kv.value_loc)?));
            }
            _ => {
                return err(
                    kv.key_loc,
                    ErrorKind::Syntax,
                    format!("unknown key `{}` in [hopf.finite]", kv.key),
                )
            }
        }
    }

    for i in 0..n {
        for j in 0..n {
            if product[i][j].is_none() {
                return err(
                    section.loc,
                    ErrorKind::Syntax,
                    format!("missing `mul.{}.{}` entry", basis[i], basis[j]),
                );
            }
        }
    }
    let product: Vec<Vec<Vec<(usize, Scalar)>>> = product
        .into_iter()
        .map(|row| row.into_iter().map(|c| c.unwrap()).collect())
        .collect();

    let unit = match unit {
        Some(u) => u,
        None => match basis.iter().position(|b| b == "1") {
            Some(j) => vec![(j, Scalar::one(order))],
            None => {
                return err(
                    section.loc,
                    ErrorKind::Syntax,
                    "no basis element `1` and no `unit = ...` line",
                )
            }
        },
    };

    // Defaults complete the tables group-like: diagonal coproduct, counit 1,
    // antipode the product-table inverse.
    let unit_single: Option<usize> = match unit.as_slice() {
        [(j, c)] if c.is_one() => Some(*j),
        _ => None,
    };
    let mut final_coproduct = Vec::with_capacity(n);
    let mut final_counit = Vec::with_capacity(n);
    let mut final_antipode = Vec::with_capacity(n);
    for i in 0..n {
        final_coproduct.push(match &coproduct[i] {
            Some(c) => c.clone(),
            None => vec![(i, i, Scalar::one(order))],
        });
        final_counit.push(match &counit[i] {
            Some(c) => c.clone(),
            None => Scalar::one(order),
        });
        final_antipode.push(match &antipode[i] {
            Some(c) => c.clone(),
            None => {
                let inv = unit_single.and_then(|u| {
                    (0..n).find(|&j| {
                        matches!(product[i][j].as_slice(), [(k, c)] if *k == u && c.is_one())
                    })
                });
                match inv {
                    Some(j) => vec![(j, Scalar::one(order))],
                    None => {
                        return err(
                            section.loc,
                            ErrorKind::Syntax,
                            format!(
                                "no `antipode.{}` line and no product-table inverse",
                                basis[i]
                            ),
                        )
                    }
                }
            }
        });
    }

    let tables = FiniteDimTables {
        names: basis,
        product,
        unit,
        coproduct: final_coproduct,
        counit: final_counit,
        antipode: final_antipode,
    };
    match HopfAlgebra::finite_dim(tables, order) {
        Ok(h) => {
            b.hopf = Some(h);
            Ok(())
        }
        Err(e) => err(section.loc, ErrorKind::Scenario, e.to_string()),
    }
}

fn build_algebra(b: &mut Builder, section: &RawSection) -> Result<(), ScenarioError> {
    let hopf = b.hopf(section.loc)?.clone();
    let kind = required_value(section, "kind")?;
    let alg = match kind.value.trim() {
        "poly" => {
            let vars = parse_names(required_value(section, "vars")?)?;
            Algebra::poly(&hopf, vars)
        }
        "points" => Algebra::fin_fun(&hopf),
        other => {
            return err(
                kind.value_loc,
                ErrorKind::Syntax,
                format!("unknown algebra kind `{other}` (expected poly or points)"),
            )
        }
    };
    match alg {
        Ok(a) => {
            b.line_module = Some(Space::line(&a));
            b.algebra = Some(a);
            Ok(())
        }
        Err(e) => err(section.loc, ErrorKind::Scenario, e.to_string()),
    }
}

fn build_twist(b: &mut Builder, section: &RawSection) -> Result<(), ScenarioError> {
    let hopf = b.hopf(section.loc)?.clone();
    let f_kv = required_value(section, "f")?;
    let finv_kv = required_value(section, "finv")?;
    let ctx = b.ctx();
    let f = expect_tensor2(eval(&f_kv.value, f_kv.value_loc, ctx)?, &hopf, f_kv.value_loc)?;
    let f_inv = expect_tensor2(
        eval(&finv_kv.value, finv_kv.value_loc, ctx)?,
        &hopf,
        finv_kv.value_loc,
    )?;
    b.twist = Some(Twist::new(f, f_inv));
    Ok(())
}

fn build_rmatrix(b: &mut Builder, section: &RawSection) -> Result<(), ScenarioError> {
    let hopf = b.hopf(section.loc)?.clone();
    let r_kv = required_value(section, "r")?;
    match r_kv.value.trim() {
        "trivial" => {
            b.rmatrix = RSpec::Trivial;
            Ok(())
        }
        "from_twist" => {
            if b.twist.is_none() {
                return err(
                    r_kv.value_loc,
                    ErrorKind::Scenario,
                    "`r = from_twist` needs a [twist] section first",
                );
            }
            b.rmatrix = RSpec::FromTwist;
            Ok(())
        }
        _ => {
            let ctx = b.ctx();
            let r = expect_tensor2(eval(&r_kv.value, r_kv.value_loc, ctx)?, &hopf, r_kv.value_loc)?;
            let rinv_kv = required_value(section, "rinv")?;
            let rinv = expect_tensor2(
                eval(&rinv_kv.value, rinv_kv.value_loc, ctx)?,
                &hopf,
                rinv_kv.value_loc,
            )?;
            b.rmatrix = RSpec::Explicit(r, rinv);
            Ok(())
        }
    }
}

fn build_calculus(b: &mut Builder, section: &RawSection) -> Result<(), ScenarioError> {
    let alg = b.algebra(section.loc)?.clone();
    let vars_kv = required_value(section, "variables")?;
    let declared = parse_uint(vars_kv)? as usize;
    let actual = match alg.kind() {
        AlgebraKind::Poly { vars } => vars.len(),
        AlgebraKind::FinFun { .. } => {
            return err(
                section.loc,
                ErrorKind::Scenario,
                "a differential calculus needs a polynomial algebra",
            )
        }
    };
    if declared != actual {
        return err(
            vars_kv.value_loc,
            ErrorKind::Scenario,
            format!("calculus declares {declared} variables but the algebra has {actual}"),
        );
    }
    match Calculus::new(&alg) {
        Ok(c) => {
            b.calculus = Some(Arc::new(c));
            Ok(())
        }
        Err(e) => err(section.loc, ErrorKind::Scenario, e.to_string()),
    }
}

fn build_bimodule(
    b: &mut Builder,
    section: &RawSection,
    name: &str,
) -> Result<(), ScenarioError> {
    let hopf = b.hopf(section.loc)?.clone();
    let alg = b.algebra(section.loc)?.clone();
    if name == "A" || b.modules.iter().any(|(n, _)| n == name) {
        return err(
            section.loc,
            ErrorKind::Syntax,
            format!("module name `{name}` is already taken"),
        );
    }
    let basis = parse_names(required_value(section, "basis")?)?;
    let rank = basis.len();
    let word_names: Vec<String> = match &hopf.backend {
        Backend::AbelianPbw { generators } => generators.clone(),
        Backend::FiniteDim(t) => t.names.clone(),
    };
    // matrices[w][src][dst]: coefficient of e_dst in (word w) |> e_src.
    let zero = AlgebraElement::zero(&alg);
    let mut matrices: Vec<Vec<Vec<AlgebraElement>>> =
        vec![vec![vec![zero.clone(); rank]; rank]; word_names.len()];
    if let Backend::FiniteDim(t) = &hopf.backend {
        // Unspecified table rows default to: unit acts as the identity,
        // every other basis word acts as zero.
        for (k, c) in &t.unit {
            if c.is_one() {
                for j in 0..rank {
                    matrices[*k][j][j] = AlgebraElement::one(&alg);
                }
            }
        }
    }
    let ctx = Ctx {
        order: b.order,
        hopf: Some(&hopf),
        alg: Some(&alg),
        calc: None,
        finite_basis: None,
        module_basis: Some(&basis),
    };
    for kv in &section.kvs {
        if kv.key == "basis" {
            continue;
        }
        let parts: Vec<&str> = kv.key.split('.').collect();
        let ["action", word, vec_name] = parts.as_slice() else {
            return err(
                kv.key_loc,
                ErrorKind::Syntax,
                format!("unknown key `{}` in [bimodule.{name}]", kv.key),
            );
        };
        let Some(w) = word_names.iter().position(|g| g == word) else {
            return err(
                kv.key_loc,
                ErrorKind::Unresolved,
                format!("unknown symmetry generator `{word}`"),
            );
        };
        let Some(j) = basis.iter().position(|e| e == vec_name) else {
            return err(
                kv.key_loc,
                ErrorKind::Unresolved,
                format!("unknown basis vector `{vec_name}`"),
            );
        };
        let v = eval(&kv.value, kv.value_loc, ctx)?;
        let coeffs = expect_proto_module(v, &alg, rank, kv.value_loc)?;
        for (dst, c) in coeffs.into_iter().enumerate() {
            matrices[w][j][dst] = c;
        }
    }
    let action = match &hopf.backend {
        Backend::AbelianPbw { .. } => SpaceAction::Derivation(matrices),
        Backend::FiniteDim(_) => SpaceAction::Table(matrices),
    };
    match Space::free(&alg, basis, action) {
        Ok(space) => {
            b.modules.push((name.to_string(), space));
            Ok(())
        }
        Err(e) => err(section.loc, ErrorKind::Scenario, e.to_string()),
    }
}

fn split_args(text: &str, loc: Loc) -> Result<Vec<(String, Loc)>, ScenarioError> {
    let mut args = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let chars: Vec<char> = text.chars().collect();
    for (i, c) in chars.iter().enumerate() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => {
                if depth == 0 {
                    return err(loc, ErrorKind::Syntax, "unbalanced parentheses");
                }
                depth -= 1;
            }
            ',' if depth == 0 => {
                let piece: String = chars[start..i].iter().collect();
                args.push((
                    piece,
                    Loc {
                        line: loc.line,
                        col: loc.col + start,
                    },
                ));
                start = i + 1;
            }
            _ => {}
        }
    }
    let piece: String = chars[start..].iter().collect();
    args.push((
        piece,
        Loc {
            line: loc.line,
            col: loc.col + start,
        },
    ));
    Ok(args)
}

fn build_hom(b: &mut Builder, section: &RawSection, name: &str) -> Result<(), ScenarioError> {
    if b.homs.iter().any(|(n, _)| n == name) {
        return err(
            section.loc,
            ErrorKind::Syntax,
            format!("operator name `{name}` is already taken"),
        );
    }
    let matrix_kv = single_value(section, "matrix")?;
    let op_kv = single_value(section, "op")?;
    let hom = match (matrix_kv, op_kv) {
        (Some(kv), None) => {
            let module_kv = required_value(section, "module")?;
            let space = b.module(module_kv.value.trim(), module_kv.value_loc)?;
            let alg = b.algebra(section.loc)?.clone();
            let rows = eval_matrix(&kv.value, kv.value_loc, b.ctx())?;
            if rows.len() != space.rank() || rows.iter().any(|r| r.len() != space.rank()) {
                return err(
                    kv.value_loc,
                    ErrorKind::Scenario,
                    format!(
                        "matrix must be {r} x {r} for module of rank {r}",
                        r = space.rank()
                    ),
                );
            }
            let mut images = Vec::with_capacity(space.rank());
            for row in rows {
                let mut coeffs = Vec::with_capacity(row.len());
                for cell in row {
                    coeffs.push(expect_alg(cell, &alg, kv.value_loc)?);
                }
                images.push(ModuleElement::from_coeffs(&space, coeffs));
            }
            match matrix_hom(&space, &space, images, name) {
                Ok(h) => h,
                Err(e) => return err(kv.value_loc, ErrorKind::Scenario, e.to_string()),
            }
        }
        (None, Some(kv)) => build_named_op(b, section, name, kv)?,
        _ => {
            return err(
                section.loc,
                ErrorKind::Syntax,
                format!("[hom.{name}] needs exactly one of `matrix = ...` or `op = ...`"),
            )
        }
    };
    b.homs.push((name.to_string(), hom));
    Ok(())
}

fn build_named_op(
    b: &Builder,
    section: &RawSection,
    name: &str,
    kv: &RawKv,
) -> Result<Hom, ScenarioError> {
    let text = kv.value.trim();
    let arg_of = |prefix: &str| -> Option<(String, Loc)> {
        let rest = text.strip_prefix(prefix)?;
        let inner = rest.strip_suffix(')')?;
        let offset = kv.value.find(prefix).unwrap_or(0) + prefix.len();
        Some((
            inner.to_string(),
            Loc {
                line: kv.value_loc.line,
                col: kv.value_loc.col + offset,
            },
        ))
    };
    if text == "d" {
        let calc = match &b.calculus {
            Some(c) => c.clone(),
            None => {
                return err(
                    kv.value_loc,
                    ErrorKind::Scenario,
                    "`op = d` needs a [calculus] section first",
                )
            }
        };
        let line = b.module("A", kv.value_loc)?;
        let omega1 = calc.omega(1).clone();
        let inner = calc.clone();
        return Ok(Hom::from_fn(&line, &omega1, name, move |v| {
            let zero_form = inner.form(0, &[], &v.coeffs()[0]);
            inner.d(&zero_form).expect("zero-forms always differentiate")
        }));
    }
    if let Some((arg, arg_loc)) = arg_of("lmul(") {
        let alg = b.algebra(section.loc)?.clone();
        let a = expect_alg(eval(&arg, arg_loc, b.ctx())?, &alg, arg_loc)?;
        let line = b.module("A", kv.value_loc)?;
        let label = name.to_string();
        return Ok(Hom::from_fn(&line, &line, label, move |v| {
            let out = a.mul(&v.coeffs()[0]);
            ModuleElement::from_coeffs(v.space(), vec![out])
        }));
    }
    if let Some((arg, arg_loc)) = arg_of("act(") {
        let hopf = b.hopf(section.loc)?.clone();
        let xi = expect_hopf(eval(&arg, arg_loc, b.ctx())?, &hopf, arg_loc)?;
        let module_kv = required_value(section, "module")?;
        let space = b.module(module_kv.value.trim(), module_kv.value_loc)?;
        return Ok(Hom::act_op(&space, &xi).relabel(name));
    }
    for (prefix, is_compose) in [("compose(", true), ("sum(", false)] {
        if let Some((args, args_loc)) = arg_of(prefix) {
            let parts = split_args(&args, args_loc)?;
            if parts.len() != 2 {
                return err(
                    args_loc,
                    ErrorKind::Syntax,
                    format!("{} takes exactly two operator names", prefix.trim_end_matches('(')),
                );
            }
            let mut resolved = Vec::new();
            for (part, part_loc) in &parts {
                let pname = part.trim();
                match b.homs.iter().find(|(n, _)| n == pname) {
                    Some((_, h)) => resolved.push(h.clone()),
                    None => {
                        return err(
                            *part_loc,
                            ErrorKind::Unresolved,
                            format!("unknown operator `{pname}`"),
                        )
                    }
                }
            }
            let combined = if is_compose {
                if !Space::same(resolved[1].cod(), resolved[0].dom()) {
                    return err(
                        args_loc,
                        ErrorKind::Scenario,
                        "composition domain mismatch",
                    );
                }
                resolved[0].compose(&resolved[1])
            } else {
                if !Space::same(resolved[0].dom(), resolved[1].dom())
                    || !Space::same(resolved[0].cod(), resolved[1].cod())
                {
                    return err(args_loc, ErrorKind::Scenario, "sum shape mismatch");
                }
                resolved[0].add(&resolved[1])
            };
            return Ok(combined.relabel(name));
        }
    }
    err(
        kv.value_loc,
        ErrorKind::Syntax,
        "expected one of: lmul(...), act(...), d, compose(P, Q), sum(P, Q)",
    )
}

fn build_connection(
    b: &mut Builder,
    section: &RawSection,
    name: &str,
) -> Result<(), ScenarioError> {
    if b.connections.iter().any(|(n, _)| n == name) {
        return err(
            section.loc,
            ErrorKind::Syntax,
            format!("connection name `{name}` is already taken"),
        );
    }
    let calc = match &b.calculus {
        Some(c) => c.clone(),
        None => {
            return err(
                section.loc,
                ErrorKind::Scenario,
                "connections need a [calculus] section first",
            )
        }
    };
    let module_kv = required_value(section, "module")?;
    let space = b.module(module_kv.value.trim(), module_kv.value_loc)?;
    let omega_kv = required_value(section, "omega")?;
    let rows = eval_matrix(&omega_kv.value, omega_kv.value_loc, b.ctx())?;
    let rank = space.rank();
    if rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
        return err(
            omega_kv.value_loc,
            ErrorKind::Scenario,
            format!("omega must be {rank} x {rank} one-form entries"),
        );
    }
    let omega_rank = calc.omega(1).rank();
    let target = Space::tensor(&[space.clone(), calc.omega(1).clone()]);
    let alg = b.algebra(section.loc)?.clone();
    let mut images = Vec::with_capacity(rank);
    for row in rows {
        let mut flat = vec![AlgebraElement::zero(&alg); rank * omega_rank];
        for (j, cell) in row.into_iter().enumerate() {
            let form = expect_form1(cell, &calc, omega_kv.value_loc)?;
            for (t, c) in form.coeffs().iter().enumerate() {
                flat[j * omega_rank + t] = c.clone();
            }
        }
        images.push(ModuleElement::from_coeffs(&target, flat));
    }
    match Connection::new(&calc, &space, images) {
        Ok(c) => {
            b.connections.push((name.to_string(), c));
            Ok(())
        }
        Err(e) => err(section.loc, ErrorKind::Scenario, e.to_string()),
    }
}

fn build_checks(b: &mut Builder, section: &RawSection) -> Result<(), ScenarioError> {
    for kv in &section.kvs {
        if kv.key != "run" {
            return err(
                kv.key_loc,
                ErrorKind::Syntax,
                format!("unknown key `{}` in [checks] (expected `run = ...`)", kv.key),
            );
        }
        let mut words = kv.value.split_whitespace();
        let Some(name) = words.next() else {
            return err(kv.value_loc, ErrorKind::Syntax, "`run =` needs a check name");
        };
        let mut params = BTreeMap::new();
        for w in words {
            let Some((k, v)) = w.split_once('=') else {
                return err(
                    kv.value_loc,
                    ErrorKind::Syntax,
                    format!("check parameter `{w}` is not of the form key=value"),
                );
            };
            if params.insert(k.to_string(), v.to_string()).is_some() {
                return err(
                    kv.value_loc,
                    ErrorKind::Syntax,
                    format!("duplicate check parameter `{k}`"),
                );
            }
        }
        b.checks.push(CheckRequest {
            name: name.to_string(),
            params,
            loc: kv.value_loc,
        });
    }
    Ok(())
}

/// Parse and assemble a scenario from its textual form.
pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
    let sections = scan_sections(text)?;
    let Some(first) = sections.first() else {
        return err(
            Loc { line: 1, col: 1 },
            ErrorKind::Syntax,
            "empty scenario: expected a [scenario] section",
        );
    };
    if first.name != "scenario" {
        return err(
            first.loc,
            ErrorKind::Syntax,
            "the first section must be [scenario]",
        );
    }

    let mut b = Builder {
        name: "scenario".to_string(),
        order: 0,
        probe_degree: 2,
        seed: 0,
        hopf: None,
        algebra: None,
        twist: None,
        rmatrix: RSpec::Trivial,
        calculus: None,
        modules: Vec::new(),
        line_module: None,
        homs: Vec::new(),
        connections: Vec::new(),
        checks: Vec::new(),
    };

    let mut seen = BTreeSet::new();
    for section in &sections {
        if !seen.insert(section.name.clone()) {
            return err(
                section.loc,
                ErrorKind::Syntax,
                format!("duplicate section [{}]", section.name),
            );
        }
        match section.name.as_str() {
            "scenario" => build_scenario_section(&mut b, section)?,
            "hopf.abelian" | "hopf.finite" => {
                if b.hopf.is_some() {
                    return err(
                        section.loc,
                        ErrorKind::Syntax,
                        "only one [hopf.*] section is allowed",
                    );
                }
                if section.name == "hopf.abelian" {
                    build_hopf_abelian(&mut b, section)?;
                } else {
                    build_hopf_finite(&mut b, section)?;
                }
            }
            "algebra" => build_algebra(&mut b, section)?,
            "twist" => build_twist(&mut b, section)?,
            "rmatrix" => build_rmatrix(&mut b, section)?,
            "calculus" => build_calculus(&mut b, section)?,
            "checks" => build_checks(&mut b, section)?,
            other => {
                if let Some(name) = other.strip_prefix("bimodule.") {
                    build_bimodule(&mut b, section, name)?;
                } else if let Some(name) = other.strip_prefix("hom.") {
                    build_hom(&mut b, section, name)?;
                } else if let Some(name) = other.strip_prefix("connection.") {
                    build_connection(&mut b, section, name)?;
                } else {
                    return err(
                        section.loc,
                        ErrorKind::Syntax,
                        format!("unknown section [{other}]"),
                    );
                }
            }
        }
    }

    let Some(hopf) = b.hopf else {
        return err(
            Loc { line: 1, col: 1 },
            ErrorKind::Syntax,
            "a scenario needs a [hopf.abelian] or [hopf.finite] section",
        );
    };

    Ok(Scenario {
        name: b.name,
        order: b.order,
        probe_degree: b.probe_degree,
        seed: b.seed,
        hopf,
        algebra: b.algebra,
        twist: b.twist,
        rmatrix: b.rmatrix,
        calculus: b.calculus,
        modules: b.modules,
        line_module: b.line_module,
        homs: b.homs,
        connections: b.connections,
        checks: b.checks,
    })
}
