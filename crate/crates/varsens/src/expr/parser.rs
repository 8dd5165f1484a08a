//! Recursive-descent parser over the token stream. One nonterminal per
//! function, mirroring the grammar in the module docs.

use super::lexer::{lex, Token, TokenKind};
use super::{BinaryOp, Expr, Function, ParseError, UnaryOp};

/// Hard cap on grammar recursion so hostile inputs like `((((...` fail with a
/// parse error instead of exhausting the thread stack.
const MAX_DEPTH: usize = 256;

pub(super) fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: source.len(),
        depth: 0,
    };
    let expr = p.expression()?;
    if let Some(tok) = p.peek() {
        let hint = match tok.kind {
            TokenKind::Number(_) | TokenKind::Ident(_) | TokenKind::LParen => {
                "; implicit multiplication is not supported, use '*'"
            }
            _ => "",
        };
        return Err(ParseError::Syntax {
            position: tok.pos,
            message: format!("unexpected {} after a complete expression{hint}", describe(&tok.kind)),
        });
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Byte length of the source, used as the position of end-of-input errors.
    end: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).cloned()
    }

    fn advance(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::Syntax {
                position: self.peek().map_or(self.end, |t| t.pos),
                message: format!("expression nests deeper than {MAX_DEPTH} levels"),
            });
        }
        Ok(())
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut left = self.term()?;
        loop {
            let op = if self.eat(&TokenKind::Plus) {
                BinaryOp::Add
            } else if self.eat(&TokenKind::Minus) {
                BinaryOp::Sub
            } else {
                break;
            };
            let right = self.term()?;
            left = binary(op, left, right);
        }
        self.depth -= 1;
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.factor()?;
        loop {
            let op = if self.eat(&TokenKind::Star) {
                BinaryOp::Mul
            } else if self.eat(&TokenKind::Slash) {
                BinaryOp::Div
            } else {
                break;
            };
            let right = self.factor()?;
            left = binary(op, left, right);
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let expr = if self.eat(&TokenKind::Minus) {
            let operand = self.factor()?;
            Expr::Unary {
                op: UnaryOp::Neg,
                operand: Box::new(operand),
            }
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(expr)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(&TokenKind::Caret) {
            // Right-associative, and the exponent re-enters `factor` so that
            // `x^-2` and `2^3^2 == 2^(3^2)` both parse.
            let exponent = self.factor()?;
            return Ok(binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.advance() else {
            return Err(ParseError::Syntax {
                position: self.end,
                message: "expected an expression, found end of input".into(),
            });
        };
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::Number(v)),
            TokenKind::Ident(name) => self.ident(name, tok.pos),
            TokenKind::LParen => {
                let inner = self.expression()?;
                if !self.eat(&TokenKind::RParen) {
                    return Err(self.expected("')'"));
                }
                Ok(inner)
            }
            other => Err(ParseError::Syntax {
                position: tok.pos,
                message: format!("expected an expression, found {}", describe(&other)),
            }),
        }
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Expr, ParseError> {
        if self.eat(&TokenKind::LParen) {
            let function = Function::from_name(&name).ok_or(ParseError::UnknownFunction {
                position: pos,
                name: name.clone(),
            })?;
            let mut args = vec![self.expression()?];
            while self.eat(&TokenKind::Comma) {
                args.push(self.expression()?);
            }
            if !self.eat(&TokenKind::RParen) {
                return Err(self.expected("')' or ','"));
            }
            if args.len() != function.arity() {
                return Err(ParseError::ArityMismatch {
                    position: pos,
                    name: function.name().to_string(),
                    expected: function.arity(),
                    found: args.len(),
                });
            }
            return Ok(Expr::Call { function, args });
        }
        // Constants fold to plain literals so downstream code never needs a
        // symbol table for them.
        match name.as_str() {
            "pi" => Ok(Expr::Number(std::f64::consts::PI)),
            "e" => Ok(Expr::Number(std::f64::consts::E)),
            _ if Function::from_name(&name).is_some() => Err(ParseError::Syntax {
                position: pos,
                message: format!("'{name}' is a function name and needs an argument list"),
            }),
            _ => Ok(Expr::Variable(name)),
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        let (position, found) = match self.peek() {
            Some(t) => (t.pos, describe(&t.kind)),
            None => (self.end, "end of input".to_string()),
        };
        ParseError::Syntax {
            position,
            message: format!("expected {what}, found {found}"),
        }
    }
}

fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
    Expr::Binary {
        op,
        left: Box::new(left),
        right: Box::new(right),
    }
}

fn describe(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Number(v) => format!("number '{v}'"),
        TokenKind::Ident(n) => format!("name '{n}'"),
        TokenKind::Plus => "'+'".into(),
        TokenKind::Minus => "'-'".into(),
        TokenKind::Star => "'*'".into(),
        TokenKind::Slash => "'/'".into(),
        TokenKind::Caret => "'^'".into(),
        TokenKind::LParen => "'('".into(),
        TokenKind::RParen => "')'".into(),
        TokenKind::Comma => "','".into(),
    }
}
