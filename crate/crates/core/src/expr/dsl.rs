//! S-expression syntax for [`Expr`].
//!
//! ```text
//! expr := NUMBER | xK
//!       | (+ e e ...) | (* e e ...) | (neg e) | (scale C e) | (abs e)
//!       | (max e e ...) | (min e e ...) | (sin e) | (cos e) | (exp e)
//!       | (pow e K) | (recip e) | (special NAME e)
//! ```
//!
//! Whitespace is insignificant and `;` starts a comment running to end of line.

use super::{BoxDomain, Expr, ExprBuilder, NodeId, Primitive, Special};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(src: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut chars = src.chars().peekable();
    let mut atom = String::new();
    let mut atom_pos = (0, 0);
    let flush = |atom: &mut String, pos: (usize, usize), out: &mut Vec<Token>| {
        if !atom.is_empty() {
            out.push(Token {
                tok: Tok::Atom(std::mem::take(atom)),
                line: pos.0,
                column: pos.1,
            });
        }
    };
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                flush(&mut atom, atom_pos, &mut out);
                let tok = if c == '(' { Tok::Open } else { Tok::Close };
                out.push(Token { tok, line, column });
            }
            ';' => {
                flush(&mut atom, atom_pos, &mut out);
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            c if c.is_whitespace() => flush(&mut atom, atom_pos, &mut out),
            c => {
                if atom.is_empty() {
                    atom_pos = (line, column);
                }
                atom.push(c);
            }
        }
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    flush(&mut atom, atom_pos, &mut out);
    out
}

#[derive(Debug)]
enum Sexp {
    Atom(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom(_, l, c) | Sexp::List(_, l, c) => (*l, *c),
        }
    }
}

fn err(pos: (usize, usize), message: impl Into<String>) -> Error {
    Error::Parse {
        line: pos.0,
        column: pos.1,
        message: message.into(),
    }
}

struct Reader {
    toks: Vec<Token>,
    at: usize,
}

impl Reader {
    fn read(&mut self) -> Result<Sexp> {
        let Some(t) = self.toks.get(self.at).cloned() else {
            let pos = self.toks.last().map_or((1, 1), |t| (t.line, t.column));
            return Err(err(pos, "unexpected end of input"));
        };
        self.at += 1;
        match t.tok {
            Tok::Atom(a) => Ok(Sexp::Atom(a, t.line, t.column)),
            Tok::Close => Err(err((t.line, t.column), "unexpected `)`")),
            Tok::Open => {
                let mut items = Vec::new();
                loop {
                    match self.toks.get(self.at) {
                        None => return Err(err((t.line, t.column), "unclosed `(`")),
                        Some(Token {
                            tok: Tok::Close, ..
                        }) => {
                            self.at += 1;
                            return Ok(Sexp::List(items, t.line, t.column));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
        }
    }
}

struct Builder {
    b: ExprBuilder,
    max_var: Option<usize>,
}

fn parse_number(s: &str, pos: (usize, usize)) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(pos, format!("expected a number, found `{s}`")))
}

fn parse_var(s: &str) -> Option<usize> {
    s.strip_prefix('x')
        .and_then(|d| if d.is_empty() { None } else { d.parse().ok() })
}

impl Builder {
    fn build(&mut self, e: &Sexp) -> Result<NodeId> {
        match e {
            Sexp::Atom(a, l, c) => {
                if let Some(k) = parse_var(a) {
                    self.max_var = Some(self.max_var.map_or(k, |m| m.max(k)));
                    return Ok(self.b.var(k));
                }
                let v = parse_number(a, (*l, *c))?;
                Ok(self.b.constant(v))
            }
            Sexp::List(items, l, c) => {
                let pos = (*l, *c);
                let Some(Sexp::Atom(head, ..)) = items.first() else {
                    return Err(err(pos, "expected an operator after `(`"));
                };
                let args = &items[1..];
                let arity = |n: usize| -> Result<()> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(err(
                            pos,
                            format!("`{head}` takes {n} argument(s), got {}", args.len()),
                        ))
                    }
                };
                let at_least = |n: usize| -> Result<()> {
                    if args.len() >= n {
                        Ok(())
                    } else {
                        Err(err(pos, format!("`{head}` needs at least {n} argument(s)")))
                    }
                };
                match head.as_str() {
                    "+" | "*" | "max" | "min" => {
                        at_least(1)?;
                        let ids = args
                            .iter()
                            .map(|a| self.build(a))
                            .collect::<Result<Vec<_>>>()?;
                        Ok(match head.as_str() {
                            "+" => self.b.sum(&ids),
                            "*" => self.b.product(&ids),
                            "max" => self.b.max(&ids),
                            _ => self.b.min(&ids),
                        })
                    }
                    "neg" | "abs" | "sin" | "cos" | "exp" | "recip" => {
                        arity(1)?;
                        let a = self.build(&args[0])?;
                        Ok(match head.as_str() {
                            "neg" => self.b.neg(a),
                            "abs" => self.b.abs(a),
                            "sin" => self.b.apply(Primitive::Sin, a),
                            "cos" => self.b.apply(Primitive::Cos, a),
                            "exp" => self.b.apply(Primitive::Exp, a),
                            _ => self.b.apply(Primitive::Recip, a),
                        })
                    }
                    "scale" => {
                        arity(2)?;
                        let Sexp::Atom(k, kl, kc) = &args[0] else {
                            return Err(err(
                                args[0].pos(),
                                "`scale` expects a numeric literal first",
                            ));
                        };
                        let k = parse_number(k, (*kl, *kc))?;
                        let a = self.build(&args[1])?;
                        Ok(self.b.scale(k, a))
                    }
                    "pow" => {
                        arity(2)?;
                        let Sexp::Atom(k, kl, kc) = &args[1] else {
                            return Err(err(args[1].pos(), "`pow` expects an integer exponent"));
                        };
                        let k: i32 = k.parse().map_err(|_| {
                            err(
                                (*kl, *kc),
                                format!("expected an integer exponent, found `{k}`"),
                            )
                        })?;
                        let a = self.build(&args[0])?;
                        Ok(self.b.pow(a, k))
                    }
                    "special" => {
                        arity(2)?;
                        let Sexp::Atom(name, nl, nc) = &args[0] else {
                            return Err(err(args[0].pos(), "`special` expects a name"));
                        };
                        let s = Special::from_name(name).ok_or_else(|| {
                            let known: Vec<&str> = Special::ALL.iter().map(|s| s.name()).collect();
                            err(
                                (*nl, *nc),
                                format!("unknown special `{name}` (known: {})", known.join(", ")),
                            )
                        })?;
                        let a = self.build(&args[1])?;
                        Ok(self.b.special(s, a))
                    }
                    other => Err(err(pos, format!("unknown operator `{other}`"))),
                }
            }
        }
    }
}

/// Parses `src`. The dimension is one more than the largest `xK` used (at least 1);
/// when `domain` is `None` the box defaults to `[-1, 1]^n`.
pub fn parse(src: &str, domain: Option<BoxDomain>) -> Result<Expr> {
    let toks = tokenize(src);
    if toks.is_empty() {
        return Err(err((1, 1), "empty expression"));
    }
    let mut reader = Reader { toks, at: 0 };
    let sexp = reader.read()?;
    if let Some(t) = reader.toks.get(reader.at) {
        return Err(err((t.line, t.column), "trailing input after expression"));
    }
    let mut builder = Builder {
        b: ExprBuilder::new(0),
        max_var: None,
    };
    let root = builder.build(&sexp)?;
    let n = builder.max_var.map_or(1, |m| m + 1);
    let domain = match domain {
        Some(d) => {
            if d.dim() < n {
                return Err(Error::Dimension {
                    expected: n,
                    got: d.dim(),
                });
            }
            d
        }
        None => BoxDomain::cube(n, -1.0, 1.0)?,
    };
    let mut b = builder.b;
    b = ExprBuilder {
        dim: domain.dim(),
        ..b
    };
    b.finish(root, domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_flat_minimum_example() {
        let e = parse(
            "(+ (abs (+ x0 1)) (abs (+ x0 -1)))",
            Some(BoxDomain::interval(-2.0, 2.0).unwrap()),
        )
        .unwrap();
        assert_eq!(e.evaluate(&[0.5]).unwrap(), 2.0);
        assert_eq!(e.evaluate(&[1.5]).unwrap(), 3.0);
    }

    #[test]
    fn infers_dimension_and_default_box() {
        let e = parse("; comment\n(max (pow x0 2)\n     (abs x1))", None).unwrap();
        assert_eq!(e.dim(), 2);
        assert_eq!(e.evaluate(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(e.evaluate(&[0.5, -0.1]).unwrap(), 0.25);
    }

    #[test]
    fn every_form_parses() {
        let src = "(+ (* 2 x0) (neg x0) (scale 0.5 x0) (min (sin x0) (cos x0) (exp x0)) (recip (+ x0 3)) (special integral_g1 x0))";
        let e = parse(src, None).unwrap();
        assert!(!e.is_analytic());
        assert!(e.evaluate(&[0.2]).unwrap().is_finite());
    }

    #[test]
    fn errors_carry_positions() {
        match parse("(+ x0\n   (foo x0))", None) {
            Err(Error::Parse {
                line,
                column,
                message,
            }) => {
                assert_eq!((line, column), (2, 4));
                assert!(message.contains("foo"));
            }
            other => panic!("{other:?}"),
        }
        match parse("(abs x0", None) {
            Err(Error::Parse {
                line: 1, column: 1, ..
            }) => {}
            other => panic!("{other:?}"),
        }
        match parse("(pow x0 1.5)", None) {
            Err(Error::Parse {
                line: 1, column: 9, ..
            }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("(special nope x0)", None),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse("x0 x1", None), Err(Error::Parse { .. })));
        assert!(matches!(parse("", None), Err(Error::Parse { .. })));
        assert!(matches!(parse(")", None), Err(Error::Parse { .. })));
    }
}
