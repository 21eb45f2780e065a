//! Irradiance series on a fixed sampling grid, plus the transforms applied
//! before any model sees the data: standardization, lag-1 differencing and
//! the chronological day-aligned train/test split.

mod csv;
mod diff;
mod scale;
mod synth;

use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDateTime, NaiveTime, Timelike};

use crate::error::{Error, Result};

pub use self::csv::{load_csv, read_csv, write_csv, CSV_HEADER};
pub use self::diff::{difference_transform, inverse_difference, DifferencedSeries};
pub use self::scale::Scaler;
pub use self::synth::{generate_synthetic, generate_synthetic_with, synthetic_epoch, Regime, SynthParams};

pub const MINUTES_PER_DAY: u32 = 24 * 60;
pub const DEFAULT_STEP_MINUTES: u32 = 10;

/// Samples on a regular grid that starts at midnight and covers whole days.
///
/// Timestamps are implied by `start + i * step`, so the constant-spacing
/// invariant cannot be broken after construction. The same type carries raw
/// (W/m²), standardized and ensemble-deducted values; only raw series are
/// required to be non-negative, which [`IrradianceSeries::new_raw`] checks.
#[derive(Debug, Clone, PartialEq)]
pub struct IrradianceSeries {
    start: NaiveDateTime,
    step_minutes: u32,
    values: Vec<f64>,
}

impl IrradianceSeries {
    pub fn new(start: NaiveDateTime, step_minutes: u32, values: Vec<f64>) -> Result<Self> {
        if step_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(step_minutes) {
            return Err(Error::InvalidSeries(format!(
                "step of {step_minutes} min does not divide a day"
            )));
        }
        if start.time() != NaiveTime::MIN {
            return Err(Error::InvalidSeries(format!(
                "series must start at midnight, starts at {start}"
            )));
        }
        let spd = (MINUTES_PER_DAY / step_minutes) as usize;
        if values.is_empty() || !values.len().is_multiple_of(spd) {
            return Err(Error::InvalidSeries(format!(
                "length {} is not a positive multiple of {spd} samples per day",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            start,
            step_minutes,
            values,
        })
    }

    /// Like [`new`](Self::new) but also rejects negative irradiance.
    pub fn new_raw(start: NaiveDateTime, step_minutes: u32, values: Vec<f64>) -> Result<Self> {
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeIrradiance { line: i, value: v });
        }
        Self::new(start, step_minutes, values)
    }

    /// Same grid, new values. Used by the element-wise transforms.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        Self::new(self.start, self.step_minutes, values)
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn step_minutes(&self) -> u32 {
        self.step_minutes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn samples_per_day(&self) -> usize {
        (MINUTES_PER_DAY / self.step_minutes) as usize
    }

    pub fn days(&self) -> usize {
        self.values.len() / self.samples_per_day()
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::minutes(index as i64 * self.step_minutes as i64)
    }

    /// Time-of-day slot of a sample index.
    pub fn slot(&self, index: usize) -> usize {
        index % self.samples_per_day()
    }

    pub fn day(&self, day: usize) -> &[f64] {
        let spd = self.samples_per_day();
        &self.values[day * spd..(day + 1) * spd]
    }

    /// Contiguous range of whole days.
    pub fn slice_days(&self, first_day: usize, count: usize) -> Result<Self> {
        if count == 0 || first_day + count > self.days() {
            return Err(Error::InvalidArgument(format!(
                "days {first_day}..{} out of range for a {}-day series",
                first_day + count,
                self.days()
            )));
        }
        let spd = self.samples_per_day();
        Self::new(
            self.timestamp(first_day * spd),
            self.step_minutes,
            self.values[first_day * spd..(first_day + count) * spd].to_vec(),
        )
    }

    pub fn same_grid_step(&self, other: &Self) -> bool {
        self.step_minutes == other.step_minutes
    }
}

/// Position of the train/test boundary, in whole days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitIndex {
    pub train_end: usize,
    pub fraction: f64,
}

impl SplitIndex {
    /// Floors `days * fraction` to a day boundary.
    pub fn for_days(days: usize, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split fraction {fraction} must lie in (0, 1)"
            )));
        }
        // Absorb representation error so that e.g. 10 * 0.7 floors to 7.
        let train_end = (days as f64 * fraction + 1e-9).floor() as usize;
        if train_end == 0 || train_end >= days {
            return Err(Error::InsufficientData(format!(
                "{days} days at fraction {fraction} leaves an empty train or test part"
            )));
        }
        Ok(Self {
            train_end,
            fraction,
        })
    }
}

/// Chronological split on a day boundary.
pub fn split(
    series: &IrradianceSeries,
    fraction: f64,
) -> Result<(IrradianceSeries, IrradianceSeries)> {
    let days = series.days();
    if days < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 whole days to split, got {days}"
        )));
    }
    let idx = SplitIndex::for_days(days, fraction)?;
    let train = series.slice_days(0, idx.train_end)?;
    let test = series.slice_days(idx.train_end, days - idx.train_end)?;
    Ok((train, test))
}

/// Inclusive time-of-day interval over which rows, forecasts and metrics are
/// defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DaylightWindow {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl Default for DaylightWindow {
    fn default() -> Self {
        Self {
            start: NaiveTime::from_hms_opt(6, 0, 0).unwrap(),
            end: NaiveTime::from_hms_opt(18, 30, 0).unwrap(),
        }
    }
}

impl DaylightWindow {
    pub fn new(start: NaiveTime, end: NaiveTime) -> Result<Self> {
        if end <= start {
            return Err(Error::InvalidArgument(format!(
                "daylight window end {end} is not after start {start}"
            )));
        }
        Ok(Self { start, end })
    }

    /// First and last grid slot inside the window (both inclusive).
    pub fn slot_range(&self, step_minutes: u32) -> (usize, usize) {
        let minutes = |t: NaiveTime| t.hour() * 60 + t.minute();
        let first = minutes(self.start).div_ceil(step_minutes) as usize;
        let last = (minutes(self.end) / step_minutes) as usize;
        (first, last)
    }

    pub fn contains_slot(&self, slot: usize, step_minutes: u32) -> bool {
        let (first, last) = self.slot_range(step_minutes);
        (first..=last).contains(&slot)
    }
}

impl fmt::Display for DaylightWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}",
            self.start.format("%H:%M"),
            self.end.format("%H:%M")
        )
    }
}

impl FromStr for DaylightWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidArgument(format!("daylight window `{s}` is not HH:MM-HH:MM")))?;
        let parse = |t: &str| {
            NaiveTime::parse_from_str(t.trim(), "%H:%M")
                .map_err(|e| Error::InvalidArgument(format!("bad time `{t}`: {e}")))
        };
        Self::new(parse(a)?, parse(b)?)
    }
}

/// Sample indices at which a lagged-window row can be formed.
///
/// For every day and every base index `n` with `n - support` at or after the
/// window start and `n + horizon - 1` at or before the window end, yields
/// `n`. The row's lags are `x[n-1] .. x[n-order]` (with `order <= support`)
/// and its target is `x[n + horizon - 1]`. Rows never straddle midnight.
pub fn row_bases(
    samples_per_day: usize,
    days: usize,
    step_minutes: u32,
    window: DaylightWindow,
    support: usize,
    horizon: usize,
) -> Vec<usize> {
    let (first, last) = window.slot_range(step_minutes);
    let last = last.min(samples_per_day - 1);
    let mut out = Vec::new();
    if horizon == 0 {
        return out;
    }
    let lo = first + support;
    if lo + horizon - 1 > last {
        return out;
    }
    let hi = last + 1 - horizon;
    for day in 0..days {
        let base = day * samples_per_day;
        out.extend((lo..=hi).map(|slot| base + slot));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t0() -> NaiveDateTime {
        "2025-01-01T00:00:00".parse().unwrap()
    }

    fn series(days: usize) -> IrradianceSeries {
        IrradianceSeries::new(t0(), 10, vec![1.0; days * 144]).unwrap()
    }

    #[test]
    fn split_counts() {
        for (days, train, test) in [(10, 7, 3), (365, 255, 110), (3, 2, 1)] {
            let (a, b) = split(&series(days), 0.70).unwrap();
            assert_eq!((a.days(), b.days()), (train, test), "{days} days");
            assert!(a.timestamp(a.len() - 1) < b.timestamp(0));
            assert_eq!(b.start(), a.timestamp(a.len()));
        }
    }

    #[test]
    fn split_rejects_short_or_bad_fraction() {
        assert!(split(&series(1), 0.7).is_err());
        assert!(split(&series(2), 0.3).is_err());
        assert!(split(&series(10), 1.0).is_err());
        assert!(split(&series(10), 0.0).is_err());
    }

    #[test]
    fn series_construction_checks() {
        assert!(IrradianceSeries::new(t0(), 10, vec![0.0; 100]).is_err());
        assert!(IrradianceSeries::new(t0(), 7, vec![0.0; 144]).is_err());
        let late: NaiveDateTime = "2025-01-01T00:10:00".parse().unwrap();
        assert!(IrradianceSeries::new(late, 10, vec![0.0; 144]).is_err());
        let mut v = vec![0.0; 144];
        v[5] = f64::NAN;
        assert!(IrradianceSeries::new(t0(), 10, v).is_err());
        let mut v = vec![0.0; 144];
        v[5] = -1.0;
        assert!(matches!(
            IrradianceSeries::new_raw(t0(), 10, v),
            Err(Error::NegativeIrradiance { .. })
        ));
    }

    #[test]
    fn daylight_window_slots() {
        let w = DaylightWindow::default();
        assert_eq!(w.slot_range(10), (36, 111));
        assert_eq!(w.to_string(), "06:00-18:30");
        assert_eq!("06:00-18:30".parse::<DaylightWindow>().unwrap(), w);
        assert!("18:00-06:00".parse::<DaylightWindow>().is_err());
    }

    #[test]
    fn row_base_counting() {
        // 75-slot window: 06:00 .. 18:20
        let w: DaylightWindow = "06:00-18:20".parse().unwrap();
        assert_eq!(row_bases(144, 1, 10, w, 4, 1).len(), 71);
        assert_eq!(row_bases(144, 1, 10, w, 4, 6).len(), 66);
        assert_eq!(row_bases(144, 3, 10, w, 4, 1).len(), 213);
        let rows = row_bases(144, 2, 10, w, 4, 1);
        assert_eq!(rows[0], 40);
        assert_eq!(*rows.last().unwrap(), 144 + 110);
    }
}
