//! Minimal CSV output with fixed significant-digit formatting.

use std::io::{self, Write};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `v` with 12 significant digits, like C's `%.12g` but without
/// trimming trailing zeros, so column widths stay predictable.
pub fn format_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return format!("{:.*}", SIGNIFICANT_DIGITS - 1, 0.0);
    }
    // Round first so that e.g. 9.9999999999995 moves to the next decade.
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        format!("{v:.decimals$}")
    } else {
        sci
    }
}

pub struct CsvWriter<W: Write> {
    inner: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut inner: W, header: &[&str]) -> io::Result<Self> {
        writeln!(inner, "{}", header.join(","))?;
        Ok(Self {
            inner,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, values: &[f64]) -> io::Result<()> {
        debug_assert_eq!(values.len(), self.columns);
        let cells: Vec<String> = values.iter().map(|&v| format_sig(v)).collect();
        writeln!(self.inner, "{}", cells.join(","))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}
