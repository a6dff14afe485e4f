use std::sync::Arc;

use super::ast::Expr;
use super::lexer::{Tok, Token};
use super::SpecError;
use crate::interval::Interval;
use crate::predicate::{Predicate, Range, Relation};

pub(crate) enum Item {
    Prop {
        name: String,
        predicate: Predicate,
        at: (usize, usize),
    },
    Req {
        name: String,
        expr: Expr,
        source: String,
        at: (usize, usize),
    },
}

pub(crate) struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    source: &'a [char],
}

type Parsed<T> = Result<T, SpecError>;

impl<'a> Parser<'a> {
    pub(crate) fn new(tokens: Vec<Token>, source: &'a [char]) -> Self {
        Parser {
            tokens,
            pos: 0,
            source,
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let k = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[k].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.column)
    }

    fn advance(&mut self) -> Tok {
        let tok = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error<T>(&self, message: impl Into<String>) -> Parsed<T> {
        let (line, column) = self.here();
        Err(SpecError::syntax(line, column, message))
    }

    fn unexpected<T>(&self, wanted: &str) -> Parsed<T> {
        self.error(format!(
            "expected {wanted}, found {}",
            self.peek().describe()
        ))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Parsed<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            self.unexpected(wanted)
        }
    }

    fn ident(&mut self, wanted: &str) -> Parsed<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(name)
            }
            _ => self.unexpected(wanted),
        }
    }

    pub(crate) fn items(&mut self) -> Parsed<Vec<Item>> {
        let mut items = Vec::new();
        loop {
            let at = self.here();
            match self.peek() {
                Tok::Eof => return Ok(items),
                Tok::Prop => {
                    self.advance();
                    let name = self.ident("a proposition name")?;
                    self.expect(Tok::Define, "`:=`")?;
                    let predicate = self.predicate()?;
                    self.expect(Tok::Semi, "`;`")?;
                    items.push(Item::Prop {
                        name,
                        predicate,
                        at,
                    });
                }
                Tok::Req => {
                    self.advance();
                    let name = self.ident("a requirement name")?;
                    self.expect(Tok::Define, "`:=`")?;
                    let start = self.tokens[self.pos].offset;
                    let expr = self.formula()?;
                    let end = self.tokens[self.pos].offset;
                    self.expect(Tok::Semi, "`;`")?;
                    let source: String = self.source[start..end].iter().collect();
                    items.push(Item::Req {
                        name,
                        expr,
                        source: source.trim().to_string(),
                        at,
                    });
                }
                _ => return self.unexpected("`prop` or `req`"),
            }
        }
    }

    fn signed_number(&mut self) -> Parsed<f64> {
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.advance();
        }
        let magnitude = match self.peek() {
            Tok::Number(x) => *x,
            Tok::Inf => f64::INFINITY,
            _ => return self.unexpected("a number"),
        };
        self.advance();
        Ok(if negative { -magnitude } else { magnitude })
    }

    fn predicate(&mut self) -> Parsed<Predicate> {
        let variable = self.ident("a variable name")?;
        let op = self.peek().clone();
        if !matches!(
            op,
            Tok::In | Tok::Eq | Tok::EqEq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge
        ) {
            return self.unexpected("a relation (`<`, `<=`, `>`, `>=`, `==`, `!=`, `=`, `in`)");
        }
        self.advance();
        let relation = match op {
            Tok::In => {
                let at = self.here();
                let lo_closed = self.open_bracket()?;
                let lo = self.signed_number()?;
                self.expect(Tok::Comma, "`,`")?;
                let hi = self.signed_number()?;
                let hi_closed = self.close_bracket()?;
                let range = Range::new(lo, lo_closed, hi, hi_closed)
                    .map_err(|e| SpecError::range(at.0, at.1, e))?;
                Relation::In(range)
            }
            Tok::Eq | Tok::EqEq | Tok::Ne if matches!(self.peek(), Tok::True | Tok::False) => {
                let value = self.advance() == Tok::True;
                if op == Tok::Ne {
                    Relation::IsNot(value)
                } else {
                    Relation::Is(value)
                }
            }
            Tok::Eq => return self.unexpected("`true` or `false` (use `==` to compare numbers)"),
            Tok::Lt => Relation::Lt(self.signed_number()?),
            Tok::Le => Relation::Le(self.signed_number()?),
            Tok::Gt => Relation::Gt(self.signed_number()?),
            Tok::Ge => Relation::Ge(self.signed_number()?),
            Tok::EqEq => Relation::Eq(self.signed_number()?),
            _ => Relation::Ne(self.signed_number()?),
        };
        Ok(Predicate::new(variable, relation))
    }

    fn open_bracket(&mut self) -> Parsed<bool> {
        match self.peek() {
            Tok::LBracket => {
                self.advance();
                Ok(true)
            }
            Tok::LParen => {
                self.advance();
                Ok(false)
            }
            _ => self.unexpected("`[` or `(`"),
        }
    }

    fn close_bracket(&mut self) -> Parsed<bool> {
        match self.peek() {
            Tok::RBracket => {
                self.advance();
                Ok(true)
            }
            Tok::RParen => {
                self.advance();
                Ok(false)
            }
            _ => self.unexpected("`]` or `)`"),
        }
    }

    /// An interval literal follows if the next tokens are `[` or `( NUMBER ,`.
    fn interval_follows(&self) -> bool {
        match self.peek() {
            Tok::LBracket => true,
            Tok::LParen => {
                matches!(self.peek_at(1), Tok::Number(_)) && *self.peek_at(2) == Tok::Comma
            }
            _ => false,
        }
    }

    fn optional_interval(&mut self) -> Parsed<Interval> {
        if !self.interval_follows() {
            return Ok(Interval::UNBOUNDED);
        }
        let (line, column) = self.here();
        let lower_closed = self.open_bracket()?;
        let lower = match self.peek() {
            Tok::Number(x) => *x,
            _ => return self.unexpected("a non-negative interval bound"),
        };
        self.advance();
        self.expect(Tok::Comma, "`,`")?;
        let upper = match self.peek() {
            Tok::Number(x) => *x,
            Tok::Inf => f64::INFINITY,
            _ => return self.unexpected("an interval bound or `inf`"),
        };
        self.advance();
        let upper_closed = self.close_bracket()?;
        if upper.is_infinite() && upper_closed {
            return Err(SpecError::syntax(
                line,
                column,
                "an infinite upper bound must be open: write `inf)`",
            ));
        }
        Interval::new(lower, lower_closed, upper, upper_closed)
            .map_err(|e| SpecError::interval(line, column, e))
    }

    /// Lowest precedence: right-associative implication.
    pub(crate) fn formula(&mut self) -> Parsed<Expr> {
        let left = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.advance();
            let right = self.formula()?;
            return Ok(Expr::Implies(Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> Parsed<Expr> {
        self.chain(Tok::Pipe, Self::exclusive, Expr::Or)
    }

    fn exclusive(&mut self) -> Parsed<Expr> {
        self.chain(Tok::Xor, Self::conjunction, Expr::Xor)
    }

    fn conjunction(&mut self) -> Parsed<Expr> {
        self.chain(Tok::Amp, Self::until, Expr::And)
    }

    /// `a op b op c` as one n-ary node.
    fn chain(
        &mut self,
        op: Tok,
        operand: fn(&mut Self) -> Parsed<Expr>,
        build: fn(Vec<Expr>) -> Expr,
    ) -> Parsed<Expr> {
        let first = operand(self)?;
        if *self.peek() != op {
            return Ok(first);
        }
        let mut operands = vec![first];
        while *self.peek() == op {
            self.advance();
            operands.push(operand(self)?);
        }
        Ok(build(operands))
    }

    fn until(&mut self) -> Parsed<Expr> {
        let left = self.unary()?;
        if *self.peek() == Tok::Until {
            self.advance();
            let interval = self.optional_interval()?;
            let right = self.until()?;
            return Ok(Expr::Until(interval, Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Parsed<Expr> {
        match self.peek() {
            Tok::Bang => {
                self.advance();
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Tok::Next | Tok::Finally | Tok::Globally => {
                let op = self.advance();
                let interval = self.optional_interval()?;
                let body = Box::new(self.unary()?);
                Ok(match op {
                    Tok::Next => Expr::Next(interval, body),
                    Tok::Finally => Expr::Finally(interval, body),
                    _ => Expr::Globally(interval, body),
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Parsed<Expr> {
        match self.peek().clone() {
            Tok::True => {
                self.advance();
                Ok(Expr::Const(true))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::Const(false))
            }
            Tok::Ident(name) => {
                self.advance();
                Ok(Expr::Atom(Arc::from(name)))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::TimedTrigger => {
                self.advance();
                let interval = self.optional_interval()?;
                self.expect(Tok::LParen, "`(`")?;
                let trigger = self.formula()?;
                self.expect(Tok::Comma, "`,`")?;
                let response = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::TimedTrigger(
                    interval,
                    Box::new(trigger),
                    Box::new(response),
                ))
            }
            _ => self.unexpected("a formula"),
        }
    }

    pub(crate) fn expect_end(&self) -> Parsed<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of formula")
        }
    }
}
