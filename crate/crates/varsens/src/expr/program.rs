//! Compiled form of an expression: a flat postorder instruction list run on a
//! value stack. Parsing and name resolution happen once; the integrators then
//! evaluate the same expression millions of times with slice-indexed loads.

use super::{BinaryOp, EvalError, Expr, Function, UnaryOp};

/// Integral literal exponents up to this magnitude compile to repeated
/// multiplication (`powi`) instead of `powf`.
const POWI_LIMIT: f64 = 16.0;

/// Stack slots allocated inline per evaluation; deeper programs fall back to
/// a heap buffer.
const INLINE_STACK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Const(f64),
    /// Push the value of the input slot with this index.
    Load(u32),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowI(i32),
    Fun1(Function),
    Fun2(Function),
}

/// An expression compiled against a fixed variable order.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    code: Vec<Instr>,
    stack_need: usize,
    input_len: usize,
}

pub(super) fn compile<S: AsRef<str>>(expr: &Expr, order: &[S]) -> Result<CompiledExpr, EvalError> {
    let mut code = Vec::new();
    emit(expr, order, &mut code)?;
    let mut depth = 0usize;
    let mut max_depth = 0usize;
    for instr in &code {
        match instr {
            Instr::Const(_) | Instr::Load(_) => depth += 1,
            Instr::Neg | Instr::PowI(_) | Instr::Fun1(_) => {}
            Instr::Add
            | Instr::Sub
            | Instr::Mul
            | Instr::Div
            | Instr::Pow
            | Instr::Fun2(_) => depth -= 1,
        }
        max_depth = max_depth.max(depth);
    }
    Ok(CompiledExpr {
        code,
        stack_need: max_depth,
        input_len: order.len(),
    })
}

fn emit<S: AsRef<str>>(expr: &Expr, order: &[S], code: &mut Vec<Instr>) -> Result<(), EvalError> {
    match expr {
        Expr::Number(v) => code.push(Instr::Const(*v)),
        Expr::Variable(name) => {
            let idx = order
                .iter()
                .position(|n| n.as_ref() == name)
                .ok_or_else(|| EvalError::UnboundVariable(name.clone()))?;
            code.push(Instr::Load(idx as u32));
        }
        Expr::Unary { op: UnaryOp::Neg, operand } => {
            emit(operand, order, code)?;
            code.push(Instr::Neg);
        }
        Expr::Binary { op, left, right } => {
            emit(left, order, code)?;
            if *op == BinaryOp::Pow {
                if let Some(n) = integral_exponent(right) {
                    code.push(Instr::PowI(n));
                    return Ok(());
                }
            }
            emit(right, order, code)?;
            code.push(match op {
                BinaryOp::Add => Instr::Add,
                BinaryOp::Sub => Instr::Sub,
                BinaryOp::Mul => Instr::Mul,
                BinaryOp::Div => Instr::Div,
                BinaryOp::Pow => Instr::Pow,
            });
        }
        Expr::Call { function, args } => {
            emit(&args[0], order, code)?;
            if args.len() == 1 {
                code.push(Instr::Fun1(*function));
            } else {
                if *function == Function::Pow {
                    if let Some(n) = integral_exponent(&args[1]) {
                        code.push(Instr::PowI(n));
                        return Ok(());
                    }
                }
                emit(&args[1], order, code)?;
                code.push(Instr::Fun2(*function));
            }
        }
    }
    Ok(())
}

fn integral_exponent(expr: &Expr) -> Option<i32> {
    match expr {
        Expr::Number(v) if v.fract() == 0.0 && v.abs() <= POWI_LIMIT => Some(*v as i32),
        _ => None,
    }
}

impl CompiledExpr {
    /// Number of input slots expected by [`eval`](Self::eval); equals the
    /// length of the variable order the expression was compiled against.
    pub fn input_len(&self) -> usize {
        self.input_len
    }

    /// Evaluates and maps a non-finite outcome to an error.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_raw(values);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFiniteResult)
        }
    }

    /// Evaluates without the error wrapper, for hot loops that check
    /// finiteness themselves.
    ///
    /// Returns the first non-finite intermediate produced by an arithmetic
    /// operation or function call, so a later operation cannot mask an
    /// overflow or division by zero (`1/(1/0)` yields infinity, not `0`).
    /// `values` must hold one finite entry per input slot.
    pub fn eval_raw(&self, values: &[f64]) -> f64 {
        assert_eq!(
            values.len(),
            self.input_len,
            "expression compiled for {} inputs, called with {}",
            self.input_len,
            values.len()
        );
        if self.stack_need <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(values, &mut stack)
        } else {
            let mut stack = vec![0.0f64; self.stack_need];
            self.run(values, &mut stack)
        }
    }

    fn run(&self, values: &[f64], stack: &mut [f64]) -> f64 {
        let mut sp = 0usize;
        macro_rules! checked {
            ($v:expr) => {{
                let v = $v;
                if !v.is_finite() {
                    return v;
                }
                v
            }};
        }
        for instr in &self.code {
            match *instr {
                Instr::Const(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Instr::Load(idx) => {
                    stack[sp] = values[idx as usize];
                    sp += 1;
                }
                Instr::Neg => stack[sp - 1] = -stack[sp - 1],
                Instr::PowI(n) => stack[sp - 1] = checked!(stack[sp - 1].powi(n)),
                Instr::Fun1(f) => stack[sp - 1] = checked!(f.apply1(stack[sp - 1])),
                Instr::Add => {
                    sp -= 1;
                    stack[sp - 1] = checked!(stack[sp - 1] + stack[sp]);
                }
                Instr::Sub => {
                    sp -= 1;
                    stack[sp - 1] = checked!(stack[sp - 1] - stack[sp]);
                }
                Instr::Mul => {
                    sp -= 1;
                    stack[sp - 1] = checked!(stack[sp - 1] * stack[sp]);
                }
                Instr::Div => {
                    sp -= 1;
                    stack[sp - 1] = checked!(stack[sp - 1] / stack[sp]);
                }
                Instr::Pow => {
                    sp -= 1;
                    stack[sp - 1] = checked!(stack[sp - 1].powf(stack[sp]));
                }
                Instr::Fun2(f) => {
                    sp -= 1;
                    stack[sp - 1] = checked!(f.apply2(stack[sp - 1], stack[sp]));
                }
            }
        }
        stack[sp - 1]
    }
}
