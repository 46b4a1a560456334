//! Closed-form scalar expressions over named real variables.
//!
//! This is the carrier for conformal potentials, chart components, warping
//! functions, and domain guards. The grammar is deliberately small:
//!
//! * binary `+ - * / ^` with `^` right-associative and binding tightest,
//!   then unary minus, then `* /`, then `+ -`;
//! * functions `sin cos tan exp log sqrt abs` (single argument);
//! * decimal literals with optional exponent, and the reserved constant `pi`.
//!
//! Expressions are immutable after parsing and evaluation is pure, so they
//! can be shared freely across worker threads. First derivatives are exact
//! (forward-mode dual numbers), never finite differences.

use crate::dual::Dual;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{func}` takes 1 argument, got {got} (at byte {offset})")]
    ArityMismatch {
        func: String,
        got: usize,
        offset: usize,
    },

    #[error("reserved identifier `{name}` cannot be declared as a variable")]
    ReservedVariable { name: String },

    #[error("duplicate variable `{name}` in the declaration list")]
    DuplicateVariable { name: String },

    #[error("domain error in `{snippet}`: {kind}")]
    Domain { snippet: String, kind: DomainKind },

    #[error("variable `{name}` is not bound")]
    UnboundVariable { name: String },

    #[error("`{name}` is not a variable of this expression")]
    NotAVariable { name: String },
}

impl ExprError {
    pub fn is_domain(&self) -> bool {
        matches!(self, ExprError::Domain { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    SqrtNegative,
    DivisionByZero,
    PowNegativeBase,
    PowZeroBase,
    AbsNotDifferentiable,
    SqrtNotDifferentiable,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            DomainKind::LogNonPositive => "log of a non-positive value",
            DomainKind::SqrtNegative => "sqrt of a negative value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::PowNegativeBase => "negative base with non-integer exponent",
            DomainKind::PowZeroBase => "zero base with non-positive exponent",
            DomainKind::AbsNotDifferentiable => "abs is not differentiable at 0",
            DomainKind::SqrtNotDifferentiable => "sqrt is not differentiable at 0",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 3,
            BinOp::Pow => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

const UNARY_PREC: u8 = 5;

/// AST node. Spans are byte offsets into the source the node was parsed
/// from; they are carried for error reporting only and ignored by equality.
#[derive(Debug, Clone)]
pub enum Node {
    Num(f64),
    Pi,
    Var(usize),
    Neg(Box<Node>, usize),
    Binary(BinOp, Box<Node>, Box<Node>, usize),
    Call(Func, Box<Node>, usize),
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Node::Num(a), Node::Num(b)) => a == b,
            (Node::Pi, Node::Pi) => true,
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Neg(a, _), Node::Neg(b, _)) => a == b,
            (Node::Binary(o1, l1, r1, _), Node::Binary(o2, l2, r2, _)) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (Node::Call(f1, a1, _), Node::Call(f2, a2, _)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

/// Total map from variable names to values.
pub type Bindings = BTreeMap<String, f64>;

/// A parsed expression together with its declared variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    vars: Vec<String>,
    root: Node,
}

impl Expression {
    /// Parse `source` against the declared variable list. Every identifier in
    /// the source must be a declared variable, a function name, or `pi`.
    pub fn parse(source: &str, variables: &[&str]) -> Result<Expression, ExprError> {
        let mut seen = Vec::new();
        for v in variables {
            if Func::from_name(v).is_some() || *v == "pi" {
                return Err(ExprError::ReservedVariable {
                    name: v.to_string(),
                });
            }
            if seen.contains(v) {
                return Err(ExprError::DuplicateVariable {
                    name: v.to_string(),
                });
            }
            seen.push(v);
        }
        let tokens = lex(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            vars: variables,
        };
        let root = parser.parse_expr(0)?;
        match parser.peek() {
            Token::End => {}
            tok => {
                return Err(ExprError::Syntax {
                    offset: tok.offset(),
                    message: format!("unexpected `{}`", tok.describe()),
                })
            }
        }
        Ok(Expression {
            vars: variables.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    /// Variable indices actually referenced by the expression.
    pub fn referenced(&self) -> Vec<usize> {
        let mut used = vec![false; self.vars.len()];
        fn walk(node: &Node, used: &mut [bool]) {
            match node {
                Node::Var(i) => used[*i] = true,
                Node::Neg(a, _) | Node::Call(_, a, _) => walk(a, used),
                Node::Binary(_, l, r, _) => {
                    walk(l, used);
                    walk(r, used);
                }
                Node::Num(_) | Node::Pi => {}
            }
        }
        walk(&self.root, &mut used);
        (0..self.vars.len()).filter(|&i| used[i]).collect()
    }

    /// Evaluate with a named binding map; the map must be total over the
    /// declared variable list.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, ExprError> {
        let mut vals = Vec::with_capacity(self.vars.len());
        for name in &self.vars {
            match bindings.get(name) {
                Some(v) => vals.push(*v),
                None => {
                    return Err(ExprError::UnboundVariable { name: name.clone() });
                }
            }
        }
        self.eval_slice(&vals)
    }

    /// Evaluate with values aligned to the declared variable order.
    pub fn eval_slice(&self, values: &[f64]) -> Result<f64, ExprError> {
        debug_assert_eq!(values.len(), self.vars.len());
        eval_node(&self.root, &|i| values[i], &self.vars)
    }

    /// Exact partial derivative with respect to the named variable.
    pub fn eval_derivative(&self, bindings: &Bindings, var: &str) -> Result<f64, ExprError> {
        let idx =
            self.vars
                .iter()
                .position(|v| v == var)
                .ok_or_else(|| ExprError::NotAVariable {
                    name: var.to_string(),
                })?;
        let mut vals = Vec::with_capacity(self.vars.len());
        for name in &self.vars {
            match bindings.get(name) {
                Some(v) => vals.push(*v),
                None => {
                    return Err(ExprError::UnboundVariable { name: name.clone() });
                }
            }
        }
        self.partial_slice(&vals, idx)
    }

    /// Exact partial derivative with respect to variable index `var`.
    pub fn partial_slice(&self, values: &[f64], var: usize) -> Result<f64, ExprError> {
        debug_assert_eq!(values.len(), self.vars.len());
        let d = eval_node_dual(
            &self.root,
            &|i| {
                if i == var {
                    Dual::variable(values[i])
                } else {
                    Dual::constant(values[i])
                }
            },
            &self.vars,
        )?;
        Ok(d.du)
    }

    /// All partial derivatives at `values`, one forward pass per variable.
    pub fn gradient_slice(&self, values: &[f64]) -> Result<Vec<f64>, ExprError> {
        (0..self.vars.len())
            .map(|i| self.partial_slice(values, i))
            .collect()
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.vars)
    }
}

fn node_prec(node: &Node) -> u8 {
    match node {
        Node::Binary(op, ..) => op.precedence(),
        Node::Neg(..) => UNARY_PREC,
        _ => 9,
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, vars: &[String]) -> fmt::Result {
    match node {
        Node::Num(x) => write!(f, "{x}"),
        Node::Pi => write!(f, "pi"),
        Node::Var(i) => write!(f, "{}", vars[*i]),
        Node::Neg(a, _) => {
            write!(f, "-")?;
            // Operands binding looser than unary minus need parentheses so
            // the printed form reparses to the same tree.
            paren_if(f, a, vars, node_prec(a) < UNARY_PREC)
        }
        Node::Call(func, a, _) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, vars)?;
            write!(f, ")")
        }
        Node::Binary(op, l, r, _) => {
            let p = op.precedence();
            let lhs_needs = if *op == BinOp::Pow {
                node_prec(l) <= p
            } else {
                node_prec(l) < p
            };
            let rhs_needs = if *op == BinOp::Pow {
                node_prec(r) < p
            } else {
                node_prec(r) <= p
            };
            paren_if(f, l, vars, lhs_needs)?;
            write!(f, " {} ", op.symbol())?;
            paren_if(f, r, vars, rhs_needs)
        }
    }
}

fn paren_if(f: &mut fmt::Formatter<'_>, node: &Node, vars: &[String], need: bool) -> fmt::Result {
    if need {
        write!(f, "(")?;
        write_node(f, node, vars)?;
        write!(f, ")")
    } else {
        write_node(f, node, vars)
    }
}

// ---------------------------------------------------------------------------
// Evaluation

fn domain_err(node: &Node, vars: &[String], kind: DomainKind) -> ExprError {
    struct Snip<'a>(&'a Node, &'a [String]);
    impl fmt::Display for Snip<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_node(f, self.0, self.1)
        }
    }
    ExprError::Domain {
        snippet: Snip(node, vars).to_string(),
        kind,
    }
}

fn eval_node(node: &Node, env: &dyn Fn(usize) -> f64, vars: &[String]) -> Result<f64, ExprError> {
    Ok(match node {
        Node::Num(x) => *x,
        Node::Pi => std::f64::consts::PI,
        Node::Var(i) => env(*i),
        Node::Neg(a, _) => -eval_node(a, env, vars)?,
        Node::Binary(op, l, r, _) => {
            let a = eval_node(l, env, vars)?;
            let b = eval_node(r, env, vars)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(domain_err(node, vars, DomainKind::DivisionByZero));
                    }
                    a / b
                }
                BinOp::Pow => pow_value(a, b).map_err(|k| domain_err(node, vars, k))?,
            }
        }
        Node::Call(func, arg, _) => {
            let a = eval_node(arg, env, vars)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Exp => a.exp(),
                Func::Log => {
                    if a <= 0.0 {
                        return Err(domain_err(node, vars, DomainKind::LogNonPositive));
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(domain_err(node, vars, DomainKind::SqrtNegative));
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
            }
        }
    })
}

fn pow_value(a: f64, b: f64) -> Result<f64, DomainKind> {
    if a > 0.0 {
        Ok(a.powf(b))
    } else if a == 0.0 {
        if b > 0.0 {
            Ok(0.0)
        } else {
            Err(DomainKind::PowZeroBase)
        }
    } else if b.fract() == 0.0 && b.abs() < 1e15 {
        Ok(a.powi(b as i32))
    } else {
        Err(DomainKind::PowNegativeBase)
    }
}

fn eval_node_dual(
    node: &Node,
    env: &dyn Fn(usize) -> Dual,
    vars: &[String],
) -> Result<Dual, ExprError> {
    Ok(match node {
        Node::Num(x) => Dual::constant(*x),
        Node::Pi => Dual::constant(std::f64::consts::PI),
        Node::Var(i) => env(*i),
        Node::Neg(a, _) => -eval_node_dual(a, env, vars)?,
        Node::Binary(op, l, r, _) => {
            let a = eval_node_dual(l, env, vars)?;
            let b = eval_node_dual(r, env, vars)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.re == 0.0 {
                        return Err(domain_err(node, vars, DomainKind::DivisionByZero));
                    }
                    a / b
                }
                BinOp::Pow => pow_dual(a, b).map_err(|k| domain_err(node, vars, k))?,
            }
        }
        Node::Call(func, arg, _) => {
            let a = eval_node_dual(arg, env, vars)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Exp => a.exp(),
                Func::Log => {
                    if a.re <= 0.0 {
                        return Err(domain_err(node, vars, DomainKind::LogNonPositive));
                    }
                    Dual {
                        re: a.re.ln(),
                        du: a.du / a.re,
                    }
                }
                Func::Sqrt => {
                    if a.re < 0.0 {
                        return Err(domain_err(node, vars, DomainKind::SqrtNegative));
                    }
                    if a.re == 0.0 {
                        if a.du == 0.0 {
                            Dual::constant(0.0)
                        } else {
                            return Err(domain_err(node, vars, DomainKind::SqrtNotDifferentiable));
                        }
                    } else {
                        let s = a.re.sqrt();
                        Dual {
                            re: s,
                            du: a.du / (2.0 * s),
                        }
                    }
                }
                Func::Abs => {
                    if a.re == 0.0 && a.du != 0.0 {
                        return Err(domain_err(node, vars, DomainKind::AbsNotDifferentiable));
                    }
                    Dual {
                        re: a.re.abs(),
                        du: if a.re >= 0.0 { a.du } else { -a.du },
                    }
                }
            }
        }
    })
}

fn pow_dual(a: Dual, b: Dual) -> Result<Dual, DomainKind> {
    if a.re > 0.0 {
        // a^b = exp(b ln a)
        let ln_a = a.re.ln();
        let v = a.re.powf(b.re);
        Ok(Dual {
            re: v,
            du: v * (b.du * ln_a + b.re * a.du / a.re),
        })
    } else if a.re == 0.0 {
        if b.du != 0.0 || b.re <= 0.0 {
            return Err(DomainKind::PowZeroBase);
        }
        let du = if b.re > 1.0 {
            0.0
        } else if b.re == 1.0 {
            a.du
        } else {
            return Err(DomainKind::PowZeroBase);
        };
        Ok(Dual { re: 0.0, du })
    } else if b.re.fract() == 0.0 && b.du == 0.0 && b.re.abs() < 1e15 {
        let k = b.re as i32;
        Ok(Dual {
            re: a.re.powi(k),
            du: f64::from(k) * a.re.powi(k - 1) * a.du,
        })
    } else {
        Err(DomainKind::PowNegativeBase)
    }
}

// ---------------------------------------------------------------------------
// Lexer and parser

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64, usize),
    Ident(String, usize),
    Plus(usize),
    Minus(usize),
    Star(usize),
    Slash(usize),
    Caret(usize),
    LParen(usize),
    RParen(usize),
    Comma(usize),
    End,
}

impl Token {
    fn offset(&self) -> usize {
        match self {
            Token::Num(_, o)
            | Token::Ident(_, o)
            | Token::Plus(o)
            | Token::Minus(o)
            | Token::Star(o)
            | Token::Slash(o)
            | Token::Caret(o)
            | Token::LParen(o)
            | Token::RParen(o)
            | Token::Comma(o) => *o,
            Token::End => usize::MAX,
        }
    }

    fn describe(&self) -> String {
        match self {
            Token::Num(x, _) => format!("{x}"),
            Token::Ident(s, _) => s.clone(),
            Token::Plus(_) => "+".into(),
            Token::Minus(_) => "-".into(),
            Token::Star(_) => "*".into(),
            Token::Slash(_) => "/".into(),
            Token::Caret(_) => "^".into(),
            Token::LParen(_) => "(".into(),
            Token::RParen(_) => ")".into(),
            Token::Comma(_) => ",".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn lex(source: &str) -> Result<Vec<Token>, ExprError> {
    if source.trim().is_empty() {
        return Err(ExprError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                tokens.push(Token::Plus(i));
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus(i));
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star(i));
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash(i));
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret(i));
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen(i));
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen(i));
                i += 1;
            }
            ',' => {
                tokens.push(Token::Comma(i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("invalid number literal `{text}`"),
                })?;
                tokens.push(Token::Num(value, start));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token::Ident(source[start..i].to_string(), start));
            }
            _ => {
                return Err(ExprError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    tokens.push(Token::End);
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Node, ExprError> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let (op, offset, lbp, rbp) = match self.peek() {
                Token::Plus(o) => (BinOp::Add, *o, 1, 2),
                Token::Minus(o) => (BinOp::Sub, *o, 1, 2),
                Token::Star(o) => (BinOp::Mul, *o, 3, 4),
                Token::Slash(o) => (BinOp::Div, *o, 3, 4),
                Token::Caret(o) => (BinOp::Pow, *o, 8, 7),
                _ => break,
            };
            if lbp <= min_bp {
                break;
            }
            self.advance();
            let rhs = self.parse_expr(rbp)?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs), offset);
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<Node, ExprError> {
        match self.advance() {
            Token::Num(x, _) => Ok(Node::Num(x)),
            Token::Minus(o) => {
                let operand = self.parse_expr(UNARY_PREC)?;
                Ok(Node::Neg(Box::new(operand), o))
            }
            Token::LParen(o) => {
                let inner = self.parse_expr(0)?;
                match self.advance() {
                    Token::RParen(_) => Ok(inner),
                    tok => Err(ExprError::Syntax {
                        offset: tok.offset().min(o + 1),
                        message: "expected `)`".into(),
                    }),
                }
            }
            Token::Ident(name, o) => {
                if let Some(func) = Func::from_name(&name) {
                    match self.advance() {
                        Token::LParen(_) => {}
                        tok => {
                            return Err(ExprError::Syntax {
                                offset: tok.offset().min(o + name.len()),
                                message: format!("expected `(` after function `{name}`"),
                            })
                        }
                    }
                    let arg = self.parse_expr(0)?;
                    let mut extra = 0usize;
                    loop {
                        match self.advance() {
                            Token::RParen(_) => break,
                            Token::Comma(_) => {
                                extra += 1;
                                self.parse_expr(0)?;
                            }
                            tok => {
                                return Err(ExprError::Syntax {
                                    offset: tok.offset(),
                                    message: "expected `)` in function call".into(),
                                })
                            }
                        }
                    }
                    if extra > 0 {
                        return Err(ExprError::ArityMismatch {
                            func: name,
                            got: 1 + extra,
                            offset: o,
                        });
                    }
                    Ok(Node::Call(func, Box::new(arg), o))
                } else if name == "pi" {
                    Ok(Node::Pi)
                } else if let Some(idx) = self.vars.iter().position(|v| *v == name) {
                    Ok(Node::Var(idx))
                } else {
                    Err(ExprError::UnknownIdentifier { name, offset: o })
                }
            }
            tok => Err(ExprError::Syntax {
                offset: tok.offset(),
                message: format!("unexpected `{}`", tok.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(pairs: &[(&str, f64)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn parse_shapes() {
        let e = Expression::parse("u1*cos(u2)", &["u1", "u2"]).unwrap();
        assert_eq!(
            e.root,
            Node::Binary(
                BinOp::Mul,
                Box::new(Node::Var(0)),
                Box::new(Node::Call(Func::Cos, Box::new(Node::Var(1)), 0)),
                0
            )
        );
    }

    #[test]
    fn pow_right_associative() {
        let e = Expression::parse("2^3^2", &[]).unwrap();
        assert_eq!(e.eval_slice(&[]).unwrap(), 512.0);
    }

    #[test]
    fn unknown_identifier_reported() {
        let err = Expression::parse("u1*cos(u3)", &["u1", "u2"]).unwrap_err();
        match err {
            ExprError::UnknownIdentifier { name, offset } => {
                assert_eq!(name, "u3");
                assert_eq!(offset, 7);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_reported() {
        let err = Expression::parse("sin(u1, u1)", &["u1"]).unwrap_err();
        assert!(matches!(err, ExprError::ArityMismatch { got: 2, .. }));
    }

    #[test]
    fn precedence_values() {
        assert_eq!(
            Expression::parse("1+2*3", &[])
                .unwrap()
                .eval_slice(&[])
                .unwrap(),
            7.0
        );
        // unary minus binds looser than ^
        assert_eq!(
            Expression::parse("-2^2", &[])
                .unwrap()
                .eval_slice(&[])
                .unwrap(),
            -4.0
        );
    }

    #[test]
    fn eval_examples() {
        let e = Expression::parse("u1*cos(u2)", &["u1", "u2"]).unwrap();
        assert_eq!(e.eval(&b(&[("u1", 2.0), ("u2", 0.0)])).unwrap(), 2.0);

        let e = Expression::parse("exp(0*u1)", &["u1"]).unwrap();
        assert_eq!(e.eval(&b(&[("u1", 7.0)])).unwrap(), 1.0);

        // hand oracle: (0.6*0.1 - 1)^2 = (-0.94)^2 = 0.8836
        let e = Expression::parse("(u1*u2-1)^2", &["u1", "u2"]).unwrap();
        let v = e.eval(&b(&[("u1", 0.6), ("u2", 0.1)])).unwrap();
        assert!((v - 0.8836).abs() < 1e-12);
    }

    /// Independent oracle: central finite difference with one Richardson step.
    fn fd_oracle(e: &Expression, vals: &[f64], var: usize, h: f64) -> f64 {
        let sample = |t: f64| {
            let mut v = vals.to_vec();
            v[var] += t;
            e.eval_slice(&v).unwrap()
        };
        let d_full = (sample(h) - sample(-h)) / (2.0 * h);
        let d_half = (sample(h / 2.0) - sample(-h / 2.0)) / h;
        (4.0 * d_half - d_full) / 3.0
    }

    #[test]
    fn derivative_examples() {
        // d/du2 of u1*cos(u2) at (2, pi/2) is -2; oracle is the finite difference
        let e = Expression::parse("u1*cos(u2)", &["u1", "u2"]).unwrap();
        let vals = [2.0, std::f64::consts::FRAC_PI_2];
        let d = e.partial_slice(&vals, 1).unwrap();
        assert!((d + 2.0).abs() < 1e-14);
        assert!((d - fd_oracle(&e, &vals, 1, 1e-6)).abs() < 1e-9);

        // derivative of an unrelated variable is 0
        let e = Expression::parse("u2", &["u1", "u2"]).unwrap();
        assert_eq!(e.partial_slice(&[1.3, 4.0], 0).unwrap(), 0.0);

        // d/du1 of u1^2 at 3 is 6
        let e = Expression::parse("u1^2", &["u1"]).unwrap();
        let d = e.partial_slice(&[3.0], 0).unwrap();
        assert!((d - 6.0).abs() < 1e-14);
        assert!((d - fd_oracle(&e, &[3.0], 0, 1e-6)).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        let e = Expression::parse("log(u1)", &["u1"]).unwrap();
        assert!(matches!(
            e.eval_slice(&[-1.0]).unwrap_err(),
            ExprError::Domain {
                kind: DomainKind::LogNonPositive,
                ..
            }
        ));

        let e = Expression::parse("sqrt(u1)", &["u1"]).unwrap();
        assert!(e.eval_slice(&[-0.5]).is_err());

        let e = Expression::parse("1/u1", &["u1"]).unwrap();
        assert!(matches!(
            e.eval_slice(&[0.0]).unwrap_err(),
            ExprError::Domain {
                kind: DomainKind::DivisionByZero,
                ..
            }
        ));

        // negative base with non-integer exponent is rejected rather than NaN
        let e = Expression::parse("u1^0.5", &["u1"]).unwrap();
        assert!(matches!(
            e.eval_slice(&[-2.0]).unwrap_err(),
            ExprError::Domain {
                kind: DomainKind::PowNegativeBase,
                ..
            }
        ));

        // abs is not differentiable at 0
        let e = Expression::parse("abs(u1)", &["u1"]).unwrap();
        assert!(e.partial_slice(&[0.0], 0).is_err());
        assert_eq!(e.eval_slice(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn pi_is_reserved() {
        let e = Expression::parse("cos(pi)", &[]).unwrap();
        assert!((e.eval_slice(&[]).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(
            Expression::parse("pi", &["pi"]).unwrap_err(),
            ExprError::ReservedVariable { .. }
        ));
    }

    #[test]
    fn unbound_variable_detected() {
        let e = Expression::parse("u1+u2", &["u1", "u2"]).unwrap();
        assert!(matches!(
            e.eval(&b(&[("u1", 1.0)])).unwrap_err(),
            ExprError::UnboundVariable { .. }
        ));
    }

    #[test]
    fn serialize_reparse_identity() {
        for src in [
            "u1*cos(u2) + 3",
            "-2^2",
            "2^3^2",
            "-(u1+u2)*u1",
            "1 - u1 - u2",
            "u1/(u2+2)/3",
            "sqrt(abs(u1)+2)^3",
            "exp(-(u1^2 + u2^2 + 1)/2)",
        ] {
            let e = Expression::parse(src, &["u1", "u2"]).unwrap();
            let printed = e.to_string();
            let e2 = Expression::parse(&printed, &["u1", "u2"]).unwrap();
            assert_eq!(e, e2, "round trip changed AST for `{src}` -> `{printed}`");
        }
    }
}
