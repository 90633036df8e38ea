//! Complex amplitudes and the expression syntax used in machine files.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//! ```text
//! expr     := term | term "+" term | term "-" term
//! term     := coeff | coeff "*" "i" | "i"
//! coeff    := rational | rational "/" "sqrt(" positive ")"
//!           | "exp(2*pi*i*" integer "/" positive ")"
//! rational := integer | integer "/" positive
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Amplitudes are double-precision complex numbers.
pub type ComplexAmplitude = Complex64;

/// Tolerance used wherever a caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmplitudeError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("division by zero at byte {pos}")]
    DivisionByZero { pos: usize },
}

/// Parses and evaluates one amplitude expression.
pub fn parse_amplitude(text: &str) -> Result<ComplexAmplitude, AmplitudeError> {
    let mut parser = Parser { src: text, pos: 0 };
    let first = parser.term()?;
    parser.skip_ws();
    let value = match parser.peek() {
        None => first,
        Some('+') => {
            parser.pos += 1;
            first + parser.term()?
        }
        Some('-') => {
            parser.pos += 1;
            first - parser.term()?
        }
        Some(c) => return Err(parser.syntax(format!("unexpected '{c}'"))),
    };
    parser.skip_ws();
    if let Some(c) = parser.peek() {
        return Err(parser.syntax(format!("trailing input starting at '{c}'")));
    }
    Ok(value)
}

/// `|a - b| <= tol`, measured by complex modulus.
pub fn approx_eq(a: ComplexAmplitude, b: ComplexAmplitude, tol: f64) -> bool {
    (a - b).norm() <= tol
}

/// `e^{2 pi i k / n}`, exact at multiples of a quarter turn.
pub fn root_of_unity(k: i64, n: i64) -> ComplexAmplitude {
    let r = k.rem_euclid(n);
    if (4 * r) % n == 0 {
        return match 4 * r / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let (sin, cos) = (2.0 * PI * r as f64 / n as f64).sin_cos();
    Complex64::new(cos, sin)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn syntax(&self, message: impl Into<String>) -> AmplitudeError {
        AmplitudeError::Syntax {
            pos: self.pos,
            message: message.into(),
        }
    }

    /// Consumes `token` after optional whitespace.
    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), AmplitudeError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{token}'")))
        }
    }

    /// Lookahead for `token` without consuming.
    fn at(&mut self, token: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(token)
    }

    fn integer(&mut self) -> Result<i64, AmplitudeError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        if end < bytes.len() && bytes[end] == b'-' {
            end += 1;
        }
        let digits_start = end;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        if end == digits_start {
            return Err(self.syntax("expected an integer"));
        }
        let value = self.src[start..end]
            .parse::<i64>()
            .map_err(|_| self.syntax("integer out of range"))?;
        self.pos = end;
        Ok(value)
    }

    /// A non-negative integer; zero is reported as division by zero since
    /// every positive operand in the grammar is a divisor.
    fn divisor(&mut self) -> Result<i64, AmplitudeError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some('-') {
            return Err(self.syntax("expected a positive integer"));
        }
        let value = self.integer()?;
        if value == 0 {
            return Err(AmplitudeError::DivisionByZero { pos: start });
        }
        Ok(value)
    }

    fn term(&mut self) -> Result<ComplexAmplitude, AmplitudeError> {
        self.skip_ws();
        if self.rest().starts_with('i') && !self.rest().starts_with("exp") {
            self.pos += 1;
            return Ok(Complex64::new(0.0, 1.0));
        }
        let coeff = self.coeff()?;
        if self.eat("*") {
            self.expect("i")?;
            Ok(coeff * Complex64::new(0.0, 1.0))
        } else {
            Ok(coeff)
        }
    }

    fn coeff(&mut self) -> Result<ComplexAmplitude, AmplitudeError> {
        if self.eat("exp") {
            for token in ["(", "2", "*", "pi", "*", "i", "*"] {
                self.expect(token)?;
            }
            let k = self.integer()?;
            self.expect("/")?;
            let n = self.divisor()?;
            self.expect(")")?;
            return Ok(root_of_unity(k, n));
        }
        let numerator = self.integer()?;
        let mut value = numerator as f64;
        if self.at("/") {
            self.pos += 1;
            if !self.at("sqrt") {
                value /= self.divisor()? as f64;
                if !self.eat("/") {
                    return Ok(Complex64::new(value, 0.0));
                }
            }
            self.expect("sqrt")?;
            self.expect("(")?;
            let radicand = self.divisor()?;
            self.expect(")")?;
            value /= (radicand as f64).sqrt();
        }
        Ok(Complex64::new(value, 0.0))
    }
}
