use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDateTime;

use crate::dataset::IrradianceSeries;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "timestamp,irradiance_wm2";
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn load_csv(path: impl AsRef<Path>) -> Result<IrradianceSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(BufReader::new(file))
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .ok()
}

/// Parses the canonical two-column layout. Lines starting with `#` are
/// treated as comments (the CLI writes its resolved configuration there).
/// The sampling step is taken from the first two rows and every later row
/// must follow it exactly.
pub fn read_csv(reader: impl BufRead) -> Result<IrradianceSeries> {
    let mut header_seen = false;
    let mut times: Vec<NaiveDateTime> = Vec::new();
    let mut values = Vec::new();
    let mut step: Option<chrono::Duration> = None;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line.trim() != CSV_HEADER {
                return Err(Error::Malformed {
                    line: lineno,
                    message: format!("expected header `{CSV_HEADER}`, found `{line}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let mut cols = line.split(',');
        let (Some(ts), Some(val), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::Malformed {
                line: lineno,
                message: format!("expected 2 columns in `{line}`"),
            });
        };
        let ts = parse_timestamp(ts.trim()).ok_or_else(|| Error::Malformed {
            line: lineno,
            message: format!("bad timestamp `{ts}`"),
        })?;
        let value: f64 = val.trim().parse().map_err(|_| Error::Malformed {
            line: lineno,
            message: format!("bad irradiance value `{val}`"),
        })?;
        if !value.is_finite() {
            return Err(Error::Malformed {
                line: lineno,
                message: format!("non-finite irradiance `{val}`"),
            });
        }
        if value < 0.0 {
            return Err(Error::NegativeIrradiance {
                line: lineno,
                value,
            });
        }

        if let Some(&prev) = times.last() {
            let expected = match step {
                Some(s) => prev + s,
                None => {
                    let s = ts - prev;
                    if s <= chrono::Duration::zero() {
                        return Err(Error::IrregularSpacing {
                            line: lineno,
                            expected: "a later timestamp".into(),
                            found: ts.to_string(),
                        });
                    }
                    step = Some(s);
                    ts
                }
            };
            if ts != expected {
                return Err(Error::IrregularSpacing {
                    line: lineno,
                    expected: expected.format(TIMESTAMP_FORMAT).to_string(),
                    found: ts.format(TIMESTAMP_FORMAT).to_string(),
                });
            }
        }
        times.push(ts);
        values.push(value);
    }

    if !header_seen {
        return Err(Error::Malformed {
            line: 1,
            message: format!("missing header `{CSV_HEADER}`"),
        });
    }
    let (Some(&start), Some(step)) = (times.first(), step) else {
        return Err(Error::InsufficientData("fewer than 2 data rows".into()));
    };
    let minutes = step.num_minutes();
    if minutes <= 0 || step != chrono::Duration::minutes(minutes) {
        return Err(Error::InvalidSeries(format!(
            "sampling step {step} is not a whole number of minutes"
        )));
    }
    IrradianceSeries::new_raw(start, minutes as u32, values)
}

/// Writes the canonical layout, preceded by `# ` comment lines.
pub fn write_csv(
    mut writer: impl Write,
    series: &IrradianceSeries,
    comments: &[String],
) -> std::io::Result<()> {
    for c in comments {
        writeln!(writer, "# {c}")?;
    }
    writeln!(writer, "{CSV_HEADER}")?;
    for (i, v) in series.values().iter().enumerate() {
        writeln!(writer, "{},{}", series.timestamp(i).format(TIMESTAMP_FORMAT), v)?;
    }
    writer.flush()
}
