//! Helpers shared by the flat-text model formats.

use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

/// 17 significant digits; parses back to the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64s(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::ModelFormat(format!("bad number `{t}`")))
        })
        .collect()
}

/// Line cursor that skips blank lines and `#` comments.
pub struct LineReader<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> LineReader<R> {
    pub fn new(r: R) -> Self {
        Self {
            inner: r.lines(),
            line_no: 0,
        }
    }

    /// Next content line, or `None` at end of input.
    pub fn try_next_line(&mut self) -> Result<Option<String>> {
        loop {
            self.line_no += 1;
            let Some(line) = self.inner.next() else {
                return Ok(None);
            };
            let line = line.map_err(|e| Error::ModelFormat(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok(Some(line.to_string()));
        }
    }

    pub fn next_line(&mut self) -> Result<String> {
        self.try_next_line()?
            .ok_or_else(|| Error::ModelFormat(format!("unexpected end of file at line {}", self.line_no)))
    }

    pub fn expect_magic(&mut self, magic: &str) -> Result<()> {
        let line = self.next_line()?;
        if line != magic {
            return Err(Error::ModelFormat(format!("expected `{magic}`, found `{line}`")));
        }
        Ok(())
    }

    /// Reads `key rest...` and returns `rest`.
    pub fn keyed(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim().to_string()),
            _ => Err(Error::ModelFormat(format!(
                "line {}: expected `{key} ...`, found `{line}`",
                self.line_no
            ))),
        }
    }

    pub fn keyed_parse<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let rest = self.keyed(key)?;
        rest.parse()
            .map_err(|_| Error::ModelFormat(format!("line {}: bad `{key}` value `{rest}`", self.line_no)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let back = parse_f64s(&fmt_f64(v)).unwrap()[0];
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn skips_comments() {
        let mut r = LineReader::new("# hi\n\nmagic\norder 4\n".as_bytes());
        r.expect_magic("magic").unwrap();
        assert_eq!(r.keyed_parse::<usize>("order").unwrap(), 4);
        assert!(r.next_line().is_err());
    }
}
