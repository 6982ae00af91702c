//! Digit rendering that follows the style of an existing surface.

use rust_decimal::Decimal;

/// Grouping and decimal style of a digit surface such as "13,200" or "2.50".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DigitStyle {
    pub grouped: bool,
    /// Fraction digits of the template, used to keep cents ("3.50").
    pub fraction_digits: u32,
}

impl DigitStyle {
    pub fn of(template: &str) -> Self {
        let body: String = template
            .chars()
            .filter(|c| c.is_ascii_digit() || *c == ',' || *c == '.')
            .collect();
        let (int, frac) = match body.find('.') {
            Some(i) => (&body[..i], &body[i + 1..]),
            None => (body.as_str(), ""),
        };
        Self {
            grouped: int.contains(','),
            fraction_digits: frac.chars().filter(|c| c.is_ascii_digit()).count() as u32,
        }
    }
}

fn group_thousands(int: &str) -> String {
    let n = int.len();
    let mut out = String::with_capacity(n + n / 3);
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (n - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Render `value` with explicit grouping on or off.
pub fn render_digits(value: Decimal, grouped: bool, min_fraction_digits: u32) -> String {
    let mut v = value.normalize();
    if v.scale() < min_fraction_digits {
        v.rescale(min_fraction_digits);
    }
    let s = v.abs().to_string();
    let (int, frac) = match s.find('.') {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s.as_str(), None),
    };
    let mut out = String::new();
    if v.is_sign_negative() && !v.is_zero() {
        out.push('-');
    }
    if grouped {
        out.push_str(&group_thousands(int));
    } else {
        out.push_str(int);
    }
    if let Some(f) = frac {
        out.push('.');
        out.push_str(f);
    }
    out
}

/// Copy grouping and decimal-point style from `template`.
///
/// A template with two fraction digits keeps two in the output when the value
/// has no more than that (cents stay cents).
pub fn format_number(value: Decimal, template: &str) -> String {
    let style = DigitStyle::of(template);
    let min_frac = if style.fraction_digits == 2 && value.normalize().scale() <= 2 {
        2
    } else {
        0
    };
    render_digits(value, style.grouped, min_frac)
}

/// Standard grouping for a number that had no digit template (spelled-out
/// input): commas from four integer digits up.
pub fn default_digits(value: Decimal) -> String {
    render_digits(value, value.abs().trunc() >= Decimal::from(1000), 0)
}

/// Conversational rendering used for "about X" and "between X and Y":
/// grouping is copied from the template only for five or more integer
/// digits, so "1,025" approximates to "1000" and "36,000" to "36,000".
pub fn conversational_digits(value: Decimal, template: &str) -> String {
    let style = DigitStyle::of(template);
    let wide = value.abs().trunc() >= Decimal::from(10_000);
    render_digits(value, style.grouped && wide, 0)
}
