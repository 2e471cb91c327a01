//! Text syntax for polynomials and vector fields.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom (('^' | '**') integer)?
//! atom   := number | identifier | '(' expr ')'
//! ```
//!
//! Division is only allowed by nonzero constants. Numbers may be integers,
//! decimals or carry an exponent; `p/q` is just division. The identifier `pi`
//! is accepted when the coefficient type can represent it.

use super::coeff::{Coeff, Rational};
use super::poly::Polynomial;
use crate::error::{Error, Result};

/// Names accepted for variable `i` in an `n`-dimensional chart.
pub fn variable_aliases(n: usize) -> Vec<Vec<String>> {
    (0..n)
        .map(|i| {
            let mut names = vec![format!("x{}", i + 1)];
            if n <= 3 {
                names.push(["x", "y", "z"][i].to_string());
            }
            names
        })
        .collect()
}

/// Parse a polynomial over the standard chart variables `x1..xn` (`x,y,z` when n ≤ 3).
pub fn parse_poly(src: &str, nvars: usize) -> Result<Polynomial<Rational>> {
    parse_poly_generic(src, &variable_aliases(nvars))
}

/// Parse a polynomial in a single named variable (e.g. `t` or `s`) with float coefficients.
pub fn parse_univariate_f64(src: &str, var: &str) -> Result<Polynomial<f64>> {
    parse_poly_generic(src, &[vec![var.to_string()]])
}

/// Parse with an explicit table of names: `names[i]` lists every spelling of variable `i`.
pub fn parse_poly_generic<C: Coeff>(src: &str, names: &[Vec<String>]) -> Result<Polynomial<C>> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, names };
    let out = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::Parse(format!("unexpected trailing input in `{src}`")));
    }
    Ok(out)
}

/// Split `[a, b, c]` or `(a, b, c)` into component strings at top-level commas.
pub fn split_components(src: &str) -> Result<Vec<String>> {
    let s = src.trim();
    let inner = match (s.chars().next(), s.chars().last()) {
        (Some('['), Some(']')) | (Some('('), Some(')')) if s.len() >= 2 => &s[1..s.len() - 1],
        _ => return Err(Error::Parse(format!("vector field must be bracketed: `{src}`"))),
    };
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in inner.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(inner[start..i].trim().to_string());
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::Parse(format!("unbalanced brackets in `{src}`")));
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced brackets in `{src}`")));
    }
    let last = inner[start..].trim();
    if !last.is_empty() || !parts.is_empty() {
        parts.push(last.to_string());
    }
    if parts.iter().any(String::is_empty) {
        return Err(Error::Parse(format!("empty component in `{src}`")));
    }
    Ok(parts)
}

/// Parse a comma separated point such as `1,0` or `[1/2, -3]` into exact rationals.
pub fn parse_point(src: &str) -> Result<Vec<Rational>> {
    let s = src.trim();
    let parts = if s.starts_with('[') || s.starts_with('(') {
        split_components(s)?
    } else {
        s.split(',').map(|p| p.trim().to_string()).collect()
    };
    parts
        .iter()
        .map(|p| {
            let poly = parse_poly_generic::<Rational>(p, &[])?;
            if !poly.is_constant() {
                return Err(Error::Parse(format!("point coordinate `{p}` is not a number")));
            }
            Ok(poly.constant_term())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' | '\u{2212}' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                if chars.get(i + 1) == Some(&'*') {
                    out.push(Tok::Caret);
                    i += 2;
                } else {
                    out.push(Tok::Star);
                    i += 1;
                }
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            d if d.is_ascii_digit() || d == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                out.push(Tok::Num(chars[start..i].iter().collect()));
            }
            a if a.is_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(Error::Parse(format!("unexpected character `{other}` in `{src}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    names: &'a [Vec<String>],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn nvars(&self) -> usize {
        self.names.len()
    }

    fn expr<C: Coeff>(&mut self) -> Result<Polynomial<C>> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term<C: Coeff>(&mut self) -> Result<Polynomial<C>> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let d = self.unary()?;
                    if !d.is_constant() || d.is_zero() {
                        return Err(Error::Parse("division only by nonzero constants".into()));
                    }
                    acc = acc.scale(&(C::one() / d.constant_term()));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary<C: Coeff>(&mut self) -> Result<Polynomial<C>> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power<C: Coeff>(&mut self) -> Result<Polynomial<C>> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.next() {
                Some(Tok::Num(n)) => {
                    let e: u32 = n
                        .parse()
                        .map_err(|_| Error::Parse(format!("exponent `{n}` must be a natural number")))?;
                    Ok(base.pow(e))
                }
                other => Err(Error::Parse(format!("expected exponent, found {other:?}"))),
            }
        } else {
            Ok(base)
        }
    }

    fn atom<C: Coeff>(&mut self) -> Result<Polynomial<C>> {
        let n = self.nvars();
        match self.next() {
            Some(Tok::Num(s)) => {
                let c = C::from_decimal(&s).ok_or_else(|| Error::Parse(format!("bad number `{s}`")))?;
                Ok(Polynomial::constant(n, c))
            }
            Some(Tok::Ident(id)) => {
                if let Some(i) = self.names.iter().position(|al| al.iter().any(|a| a == &id)) {
                    return Ok(Polynomial::var(n, i));
                }
                if id == "pi" {
                    return C::pi()
                        .map(|c| Polynomial::constant(n, c))
                        .ok_or_else(|| Error::Parse("`pi` is not allowed in exact coefficients".into()));
                }
                Err(Error::Parse(format!("unknown variable `{id}`")))
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(Error::Parse("missing `)`".into())),
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::coeff::{rat, ratio};

    #[test]
    fn aliases_and_indexed_names_agree() {
        assert_eq!(parse_poly("x*y^2", 2).unwrap(), parse_poly("x1*x2**2", 2).unwrap());
        assert!(parse_poly("w", 2).is_err());
        assert!(parse_poly("z", 2).is_err());
    }

    #[test]
    fn rationals_and_decimals() {
        let p = parse_poly("3/4 - 0.25", 1).unwrap();
        assert_eq!(p.constant_term(), ratio(1, 2));
        assert!(parse_poly("x/y", 2).is_err());
        assert!(parse_poly("pi*x", 1).is_err());
    }

    #[test]
    fn float_time_polynomials_accept_pi() {
        let p = parse_univariate_f64("2*pi*t^2", "t").unwrap();
        assert!((p.eval_f64(&[1.0]).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn components_and_points() {
        let parts = split_components("[y, -(x + 1)]").unwrap();
        assert_eq!(parts, vec!["y".to_string(), "-(x + 1)".to_string()]);
        assert_eq!(parse_point("1/2, -3").unwrap(), vec![ratio(1, 2), rat(-3)]);
        assert_eq!(parse_point("[0.5]").unwrap(), vec![ratio(1, 2)]);
        assert!(split_components("x, y").is_err());
    }
}
