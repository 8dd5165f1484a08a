//! Textual math expressions: parsing, evaluation, and a compiled form for
//! tight numerical loops.
//!
//! # Grammar
//!
//! ```text
//! expression := term { ("+" | "-") term }
//! term       := factor { ("*" | "/") factor }
//! factor     := "-" factor | power
//! power      := primary [ "^" factor ]            (right-associative)
//! primary    := number | identifier | identifier "(" args ")" | "(" expression ")"
//! args       := expression { "," expression }
//! ```
//!
//! Precedence from loosest to tightest: `+` `-`, then `*` `/`, then unary
//! minus and `^` interleaved so that `-x^2` parses as `-(x^2)` while `x^-2`
//! and `2^3^2 == 2^(3^2)` also work. Implicit multiplication (`2x`) is a
//! syntax error; write the `*`.
//!
//! Identifiers are `[A-Za-z_][A-Za-z0-9_]*`. `pi` and `e` are reserved
//! constants, folded to numeric literals at parse time. `Math.sin(x)`,
//! `Math.pow(a,b)`, `Math.PI`, and `Math.E` are accepted as aliases for the
//! plain spellings and produce identical syntax trees.
//!
//! Functions: `sin cos tan asin acos atan sinh cosh tanh exp ln log log10
//! sqrt abs` (unary) and `pow min max` (binary). `log` is the natural
//! logarithm, an alias of `ln`; use `log10` for base 10.
//!
//! Evaluation follows IEEE double-precision semantics, except that any
//! non-finite intermediate (overflow, division by zero, domain error) aborts
//! with [`EvalError::NonFiniteResult`] instead of propagating.

mod lexer;
mod parser;
mod program;

pub use program::CompiledExpr;

use std::collections::HashMap;
use std::fmt;

/// Variable bindings for [`Expr::evaluate`]. Entries beyond the expression's
/// free variables are ignored.
pub type Binding = HashMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Log10,
    Sqrt,
    Abs,
    Pow,
    Min,
    Max,
}

impl Function {
    /// Canonical name as printed; aliases (`log`) resolve at parse time.
    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Tan => "tan",
            Function::Asin => "asin",
            Function::Acos => "acos",
            Function::Atan => "atan",
            Function::Sinh => "sinh",
            Function::Cosh => "cosh",
            Function::Tanh => "tanh",
            Function::Exp => "exp",
            Function::Ln => "ln",
            Function::Log10 => "log10",
            Function::Sqrt => "sqrt",
            Function::Abs => "abs",
            Function::Pow => "pow",
            Function::Min => "min",
            Function::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Function> {
        Some(match name {
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "tan" => Function::Tan,
            "asin" => Function::Asin,
            "acos" => Function::Acos,
            "atan" => Function::Atan,
            "sinh" => Function::Sinh,
            "cosh" => Function::Cosh,
            "tanh" => Function::Tanh,
            "exp" => Function::Exp,
            "ln" | "log" => Function::Ln,
            "log10" => Function::Log10,
            "sqrt" => Function::Sqrt,
            "abs" => Function::Abs,
            "pow" => Function::Pow,
            "min" => Function::Min,
            "max" => Function::Max,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Function::Pow | Function::Min | Function::Max => 2,
            _ => 1,
        }
    }

    pub(crate) fn apply1(self, x: f64) -> f64 {
        match self {
            Function::Sin => x.sin(),
            Function::Cos => x.cos(),
            Function::Tan => x.tan(),
            Function::Asin => x.asin(),
            Function::Acos => x.acos(),
            Function::Atan => x.atan(),
            Function::Sinh => x.sinh(),
            Function::Cosh => x.cosh(),
            Function::Tanh => x.tanh(),
            Function::Exp => x.exp(),
            Function::Ln => x.ln(),
            Function::Log10 => x.log10(),
            Function::Sqrt => x.sqrt(),
            Function::Abs => x.abs(),
            _ => unreachable!("binary function applied as unary"),
        }
    }

    pub(crate) fn apply2(self, a: f64, b: f64) -> f64 {
        match self {
            Function::Pow => a.powf(b),
            Function::Min => a.min(b),
            Function::Max => a.max(b),
            _ => unreachable!("unary function applied as binary"),
        }
    }
}

/// `true` for names usable as expression variables: identifier syntax and not
/// a reserved constant or function name.
pub fn is_valid_variable_name(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    head_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_reserved_name(name)
}

fn is_reserved_name(name: &str) -> bool {
    name == "pi" || name == "e" || Function::from_name(name).is_some()
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Variable(String),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Call {
        function: Function,
        args: Vec<Expr>,
    },
}

impl Expr {
    /// Parses `source`; see the module docs for the accepted grammar.
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        parser::parse(source)
    }

    /// Free variable names in first-occurrence order, deduplicated.
    pub fn free_variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut Vec<String>) {
        match self {
            Expr::Number(_) => {}
            Expr::Variable(name) => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            Expr::Unary { operand, .. } => operand.collect_variables(out),
            Expr::Binary { left, right, .. } => {
                left.collect_variables(out);
                right.collect_variables(out);
            }
            Expr::Call { args, .. } => {
                for a in args {
                    a.collect_variables(out);
                }
            }
        }
    }

    /// Evaluates at the given binding. Pure: equal inputs yield bit-identical
    /// results.
    pub fn evaluate(&self, at: &Binding) -> Result<f64, EvalError> {
        let order = self.free_variables();
        let mut values = Vec::with_capacity(order.len());
        for name in &order {
            match at.get(name) {
                Some(v) if v.is_finite() => values.push(*v),
                Some(_) => return Err(EvalError::NonFiniteResult),
                None => return Err(EvalError::UnboundVariable(name.clone())),
            }
        }
        let compiled = self.compile(&order)?;
        compiled.eval(&values)
    }

    /// Compiles against a positional variable order for repeated evaluation;
    /// every free variable must appear in `order`.
    pub fn compile<S: AsRef<str>>(&self, order: &[S]) -> Result<CompiledExpr, EvalError> {
        program::compile(self, order)
    }
}

/// Fully parenthesized canonical form; reparsing it reproduces the same value
/// at every binding.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Variable(name) => f.write_str(name),
            Expr::Unary { op: UnaryOp::Neg, operand } => write!(f, "(-{operand})"),
            Expr::Binary { op, left, right } => {
                write!(f, "({left} {} {right})", op.symbol())
            }
            Expr::Call { function, args } => {
                write!(f, "{}(", function.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown function '{name}' at byte {position}")]
    UnknownFunction { position: usize, name: String },
    #[error(
        "function '{name}' at byte {position} takes {expected} argument{}, found {found}",
        if *expected == 1 { "" } else { "s" }
    )]
    ArityMismatch {
        position: usize,
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("variable '{0}' is not bound to a value")]
    UnboundVariable(String),
    #[error("evaluation produced a non-finite value (NaN or infinity)")]
    NonFiniteResult,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, f64)]) -> Binding {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn parses_identity_and_evaluates() {
        let e = Expr::parse("x").unwrap();
        assert_eq!(e, Expr::Variable("x".into()));
        assert_eq!(e.evaluate(&bind(&[("x", 3.5)])).unwrap(), 3.5);
    }

    #[test]
    fn math_prefix_and_plain_styles_parse_identically() {
        let a = Expr::parse("Math.sin(x)+Math.exp(Math.cos(y+x))").unwrap();
        let b = Expr::parse("sin(x)+exp(cos(y+x))").unwrap();
        assert_eq!(a, b);

        let c = Expr::parse(
            "Math.sin(x) + 7*Math.pow(Math.sin(y),2) + 0.1*(Math.pow(z,4))*Math.sin(x)",
        )
        .unwrap();
        let d = Expr::parse("sin(x) + 7*pow(sin(y),2) + 0.1*(pow(z,4))*sin(x)").unwrap();
        assert_eq!(c, d);
        assert_eq!(c.free_variables(), vec!["x", "y", "z"]);
    }

    #[test]
    fn math_constants_fold_to_literals() {
        assert_eq!(Expr::parse("Math.PI").unwrap(), Expr::Number(std::f64::consts::PI));
        assert_eq!(Expr::parse("pi").unwrap(), Expr::Number(std::f64::consts::PI));
        assert_eq!(Expr::parse("Math.E").unwrap(), Expr::Number(std::f64::consts::E));
        assert_eq!(Expr::parse("e").unwrap(), Expr::Number(std::f64::consts::E));
    }

    #[test]
    fn precedence_matches_convention() {
        assert_eq!(Expr::parse("a+b*c").unwrap(), Expr::parse("a+(b*c)").unwrap());
        assert_eq!(Expr::parse("-x^2").unwrap(), Expr::parse("-(x^2)").unwrap());
        let v = Expr::parse("2^3^2").unwrap().evaluate(&Binding::new()).unwrap();
        assert_eq!(v, 512.0);
        let w = Expr::parse("2^-2").unwrap().evaluate(&Binding::new()).unwrap();
        assert_eq!(w, 0.25);
    }

    #[test]
    fn ishigami_point_values() {
        let e = Expr::parse("sin(x) + 7*pow(sin(y),2) + 0.1*(pow(z,4))*sin(x)").unwrap();
        assert_eq!(e.evaluate(&bind(&[("x", 0.0), ("y", 0.0), ("z", 0.0)])).unwrap(), 0.0);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let v = e
            .evaluate(&bind(&[("x", half_pi), ("y", half_pi), ("z", 0.0)]))
            .unwrap();
        assert!((v - 8.0).abs() < 1e-12, "f(pi/2, pi/2, 0) = {v}");
    }

    #[test]
    fn free_variables_first_occurrence_order() {
        assert_eq!(Expr::parse("y + x + y").unwrap().free_variables(), vec!["y", "x"]);
        assert!(Expr::parse("3.14").unwrap().free_variables().is_empty());
    }

    #[test]
    fn division_by_zero_is_non_finite() {
        let e = Expr::parse("x/y").unwrap();
        assert_eq!(
            e.evaluate(&bind(&[("x", 1.0), ("y", 0.0)])),
            Err(EvalError::NonFiniteResult)
        );
    }

    #[test]
    fn non_finite_intermediates_are_caught_even_if_masked_later() {
        // 1/(1/x) at x=0 would round-trip through infinity back to 0.
        let e = Expr::parse("1/(1/x)").unwrap();
        assert_eq!(e.evaluate(&bind(&[("x", 0.0)])), Err(EvalError::NonFiniteResult));
        let m = Expr::parse("min(x, 1)").unwrap();
        assert_eq!(m.evaluate(&bind(&[("x", f64::NAN)])), Err(EvalError::NonFiniteResult));
    }

    #[test]
    fn unbound_variable_is_reported_by_name() {
        let e = Expr::parse("x + w").unwrap();
        assert_eq!(
            e.evaluate(&bind(&[("x", 1.0)])),
            Err(EvalError::UnboundVariable("w".into()))
        );
    }

    #[test]
    fn log_is_natural_log() {
        let a = Expr::parse("log(x)").unwrap();
        assert_eq!(a, Expr::parse("ln(x)").unwrap());
        let v = a.evaluate(&bind(&[("x", std::f64::consts::E)])).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let t = Expr::parse("log10(100)").unwrap().evaluate(&Binding::new()).unwrap();
        assert!((t - 2.0).abs() < 1e-15);
    }

    #[test]
    fn reserved_names_rejected_as_variables() {
        assert!(is_valid_variable_name("x"));
        assert!(is_valid_variable_name("x_1"));
        assert!(!is_valid_variable_name("pi"));
        assert!(!is_valid_variable_name("sin"));
        assert!(!is_valid_variable_name("2x"));
        assert!(!is_valid_variable_name(""));
        assert!(Expr::parse("sin + 1").is_err());
    }

    #[test]
    fn display_round_trips_by_value() {
        let cases = [
            "sin(x) + 7*pow(sin(y),2) + 0.1*(pow(z,4))*sin(x)",
            "-x^2 + 3/(y - 2)*min(x, y)",
            "2^3^x - abs(-y)",
        ];
        let at = bind(&[("x", 0.37), ("y", 4.21), ("z", -1.13)]);
        for src in cases {
            let a = Expr::parse(src).unwrap();
            let b = Expr::parse(&a.to_string()).unwrap();
            assert_eq!(
                a.evaluate(&at).unwrap().to_bits(),
                b.evaluate(&at).unwrap().to_bits(),
                "round-trip mismatch for {src}"
            );
        }
    }
}
