//! Numeric CSV output in C `%.12e` style (`-1.234567890123e-05`), LF line
//! endings, comma separated.

use std::io::{self, Write};

/// Format like C's `printf("%.12e", x)`.
pub fn fmt_e12(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn write_row<W: Write>(out: &mut W, cols: &[f64]) -> io::Result<()> {
    let mut line = String::with_capacity(cols.len() * 20);
    for (i, c) in cols.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&fmt_e12(*c));
    }
    line.push('\n');
    out.write_all(line.as_bytes())
}
