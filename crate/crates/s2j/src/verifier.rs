//! Rule-based equivalence check between a candidate answer and a ground truth.
//!
//! Answers are reduced to a canonical form first: LaTeX wrappers stripped,
//! whitespace collapsed, and numeric literals parsed into exact rationals.
//! Comparison is exact rational equality, with a 1e-6 absolute tolerance
//! admitted when either side came from a decimal literal (rounded decimals
//! in public corpora). Everything that fails numeric parsing compares as a
//! normalized string.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use regex::Regex;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerKind {
    Number,
    Text,
}

/// Canonical form of an answer string.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalAnswer {
    pub kind: AnswerKind,
    /// Exact value, present iff `kind == Number`.
    pub numeric_value: Option<BigRational>,
    /// True when the numeric value was parsed from a decimal literal,
    /// which widens comparison to the 1e-6 tolerance.
    pub from_decimal: bool,
    /// Lowercase, whitespace-collapsed text with wrappers removed.
    pub normalized_text: String,
}

fn thousands_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$").unwrap())
}

fn decimal_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[+-]?(\d+\.?\d*|\.\d+)$").unwrap())
}

/// Strips `\boxed{...}`, wrapping `$`, and trailing periods, then collapses
/// whitespace. Applied repeatedly until a fixed point so nested wrappers
/// (`$\boxed{x}$`) come off in any order.
fn strip_wrappers(text: &str) -> String {
    let mut cur = text.trim().to_string();
    loop {
        let mut next = cur.trim().to_string();
        if next.starts_with('$') && next.ends_with('$') && next.len() >= 2 {
            next = next[1..next.len() - 1].trim().to_string();
        }
        if let Some(rest) = next.strip_prefix("\\boxed{") {
            if let Some(inner) = balanced_prefix(rest) {
                // only strip when the box spans the whole string
                if inner.len() + 1 == rest.len() {
                    next = inner.to_string();
                }
            }
        }
        while next.ends_with('.') && !next.ends_with("..") {
            // "Paris." sheds its period; a bare decimal point like "3." is
            // handled by the numeric parser before this matters
            if decimal_re().is_match(&next) {
                break;
            }
            next.pop();
            next = next.trim_end().to_string();
        }
        if next == cur {
            break;
        }
        cur = next;
    }
    cur.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Returns the contents up to the brace that closes an already-opened group.
fn balanced_prefix(s: &str) -> Option<&str> {
    let mut depth = 1usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&s[..i]);
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    BigInt::from_str(s).ok()
}

/// `\frac{a}{b}` with integer a, b.
fn parse_frac(s: &str) -> Option<BigRational> {
    let rest = s.strip_prefix("\\frac{")?;
    let numer = balanced_prefix(rest)?;
    let after = &rest[numer.len() + 1..];
    let rest = after.strip_prefix('{')?;
    let denom = balanced_prefix(rest)?;
    if denom.len() + 1 != rest.len() {
        return None;
    }
    let n = parse_integer(numer)?;
    let d = parse_integer(denom)?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

/// `a/b` with integer a, b.
fn parse_slash(s: &str) -> Option<BigRational> {
    let (a, b) = s.split_once('/')?;
    let n = parse_integer(a)?;
    let d = parse_integer(b)?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

/// Decimal or integer literal to an exact rational. Returns the value and
/// whether a decimal point was present.
fn parse_decimal(s: &str) -> Option<(BigRational, bool)> {
    let mut t = s.trim().to_string();
    if thousands_re().is_match(&t) {
        t = t.replace(',', "");
    }
    if !decimal_re().is_match(&t) {
        return None;
    }
    let from_decimal = t.contains('.');
    let (sign, digits) = match t.strip_prefix('-') {
        Some(rest) => (-1, rest.to_string()),
        None => (1, t.trim_start_matches('+').to_string()),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i.to_string(), f.to_string()),
        None => (digits, String::new()),
    };
    let joined = format!(
        "{}{}",
        if int_part.is_empty() { "0" } else { &int_part },
        frac_part
    );
    let numer = BigInt::from_str(&joined).ok()? * BigInt::from(sign);
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some((BigRational::new(numer, denom), from_decimal))
}

/// Reduces an answer string to its canonical form.
pub fn normalize_answer(text: &str) -> CanonicalAnswer {
    let stripped = strip_wrappers(text);
    let numeric = parse_frac(&stripped)
        .or_else(|| parse_slash(&stripped))
        .map(|r| (r, false))
        .or_else(|| parse_decimal(&stripped));
    match numeric {
        Some((value, from_decimal)) => CanonicalAnswer {
            kind: AnswerKind::Number,
            numeric_value: Some(value),
            from_decimal,
            normalized_text: stripped.to_lowercase(),
        },
        None => CanonicalAnswer {
            kind: AnswerKind::Text,
            numeric_value: None,
            from_decimal: false,
            normalized_text: stripped.to_lowercase(),
        },
    }
}

/// Rule-based verifier: 1 iff the candidate is equivalent to the truth.
///
/// An empty truth marks a malformed instance and is a configuration error,
/// not a zero reward.
pub fn verify(candidate: &str, truth: &str) -> Result<bool> {
    if truth.trim().is_empty() {
        return Err(Error::Config("verify called with empty ground truth".into()));
    }
    let c = normalize_answer(candidate);
    let t = normalize_answer(truth);
    if c.kind != t.kind {
        return Ok(false);
    }
    match c.kind {
        AnswerKind::Number => {
            let a = c.numeric_value.as_ref().unwrap();
            let b = t.numeric_value.as_ref().unwrap();
            if a == b {
                return Ok(true);
            }
            if c.from_decimal || t.from_decimal {
                let tol = BigRational::new(BigInt::from(1), BigInt::from(1_000_000));
                Ok((a - b).abs() <= tol)
            } else {
                Ok(false)
            }
        }
        AnswerKind::Text => Ok(c.normalized_text == t.normalized_text),
    }
}

/// Convenience wrapper treating a missing candidate as not-equivalent.
pub fn verify_optional(candidate: Option<&str>, truth: &str) -> Result<bool> {
    match candidate {
        Some(c) => verify(c, truth),
        None => {
            if truth.trim().is_empty() {
                return Err(Error::Config("verify called with empty ground truth".into()));
            }
            Ok(false)
        }
    }
}
