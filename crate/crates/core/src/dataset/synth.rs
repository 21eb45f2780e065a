use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{IrradianceSeries, DEFAULT_STEP_MINUTES, MINUTES_PER_DAY};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Pure clear-sky bell, identical every day.
    Clear,
    /// Every day attenuated by the cloud process.
    Cloudy,
    /// Each day independently clear or cloudy with equal probability.
    Mixed,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Clear => "clear",
            Regime::Cloudy => "cloudy",
            Regime::Mixed => "mixed",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clear" => Ok(Regime::Clear),
            "cloudy" => Ok(Regime::Cloudy),
            "mixed" => Ok(Regime::Mixed),
            _ => Err(Error::InvalidArgument(format!(
                "unknown regime `{s}` (expected clear, cloudy or mixed)"
            ))),
        }
    }
}

/// Shape of the synthetic clear-sky day and of the cloud process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub peak_wm2: f64,
    pub exponent: f64,
    /// Sunrise and sunset, minutes after midnight.
    pub sunrise_min: f64,
    pub sunset_min: f64,
    /// Lag-1 coefficient of the latent cloud process.
    pub cloud_persistence: f64,
    /// Stationary standard deviation of the latent cloud process.
    pub cloud_spread: f64,
    pub min_transmittance: f64,
    pub max_transmittance: f64,
    pub step_minutes: u32,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            peak_wm2: 1000.0,
            exponent: 1.2,
            sunrise_min: 6.0 * 60.0,
            sunset_min: 18.5 * 60.0,
            cloud_persistence: 0.9,
            cloud_spread: 1.5,
            min_transmittance: 0.2,
            max_transmittance: 1.0,
            step_minutes: DEFAULT_STEP_MINUTES,
        }
    }
}

impl SynthParams {
    pub fn clear_sky(&self, minute_of_day: f64) -> f64 {
        if minute_of_day <= self.sunrise_min || minute_of_day >= self.sunset_min {
            return 0.0;
        }
        let phase = std::f64::consts::PI * (minute_of_day - self.sunrise_min)
            / (self.sunset_min - self.sunrise_min);
        (self.peak_wm2 * phase.sin().powf(self.exponent)).max(0.0)
    }

    fn transmittance(&self, latent: f64) -> f64 {
        let span = self.max_transmittance - self.min_transmittance;
        self.min_transmittance + span / (1.0 + (-latent).exp())
    }
}

pub fn synthetic_epoch() -> NaiveDateTime {
    "2025-01-01T00:00:00".parse().unwrap()
}

/// Seeded synthetic irradiance with the default parameters.
pub fn generate_synthetic(days: usize, regime: Regime, seed: u64) -> Result<IrradianceSeries> {
    generate_synthetic_with(days, regime, seed, &SynthParams::default())
}

/// Bell-shaped clear-sky days multiplied, when cloudy, by a logistic map of
/// a stationary order-1 autoregressive latent process. The process runs
/// through every slot (night included) so consecutive days are coupled.
pub fn generate_synthetic_with(
    days: usize,
    regime: Regime,
    seed: u64,
    params: &SynthParams,
) -> Result<IrradianceSeries> {
    if days == 0 {
        return Err(Error::InvalidArgument("days must be at least 1".into()));
    }
    let step = params.step_minutes;
    let spd = (MINUTES_PER_DAY / step) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = params.cloud_persistence;
    let innovation = Normal::new(0.0, params.cloud_spread * (1.0 - phi * phi).sqrt())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let stationary = Normal::new(0.0, params.cloud_spread)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut latent = stationary.sample(&mut rng);
    let mut values = Vec::with_capacity(days * spd);
    for _ in 0..days {
        let cloudy_day = match regime {
            Regime::Clear => false,
            Regime::Cloudy => true,
            Regime::Mixed => rng.random_bool(0.5),
        };
        for slot in 0..spd {
            if regime != Regime::Clear {
                latent = phi * latent + innovation.sample(&mut rng);
            }
            let bell = params.clear_sky((slot as u32 * step) as f64);
            let factor = if cloudy_day {
                params.transmittance(latent)
            } else {
                1.0
            };
            values.push(bell * factor);
        }
    }
    IrradianceSeries::new_raw(synthetic_epoch(), step, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clear_days_peak_at_solar_noon() {
        let s = generate_synthetic(3, Regime::Clear, 99).unwrap();
        for d in 0..3 {
            let day = s.day(d);
            let (argmax, max) = day
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            // solar noon is 12:15, halfway between the 12:10 and 12:20 slots
            assert!(argmax == 73 || argmax == 74, "argmax {argmax}");
            assert!((day[73] - day[74]).abs() < 1e-9);
            assert!(max > 990.0 && max <= 1000.0);
        }
        assert_eq!(s.day(0), s.day(2));
    }

    #[test]
    fn zero_outside_daylight() {
        let s = generate_synthetic(4, Regime::Cloudy, 5).unwrap();
        for (i, &v) in s.values().iter().enumerate() {
            let slot = s.slot(i);
            if slot <= 36 || slot >= 111 {
                assert_eq!(v, 0.0, "slot {slot}");
            }
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn attenuation_bounds() {
        let p = SynthParams::default();
        let clear = generate_synthetic(20, Regime::Clear, 1).unwrap();
        let cloudy = generate_synthetic(20, Regime::Cloudy, 1).unwrap();
        for (c, k) in clear.values().iter().zip(cloudy.values()) {
            if *c > 0.0 {
                let ratio = k / c;
                assert!(ratio >= p.min_transmittance - 1e-12 && ratio <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(10, Regime::Mixed, 42).unwrap();
        let b = generate_synthetic(10, Regime::Mixed, 42).unwrap();
        let c = generate_synthetic(10, Regime::Mixed, 43).unwrap();
        assert!(a
            .values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, c);
    }

    #[test]
    fn cloudy_midday_variance_exceeds_clear() {
        let var_at = |s: &IrradianceSeries, slot: usize| {
            let v: Vec<f64> = (0..s.days()).map(|d| s.day(d)[slot]).collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let clear = generate_synthetic(100, Regime::Clear, 7).unwrap();
        let cloudy = generate_synthetic(100, Regime::Cloudy, 7).unwrap();
        assert!(var_at(&cloudy, 73) > var_at(&clear, 73));
        assert!(var_at(&cloudy, 73) > 1000.0);
    }

    #[test]
    fn rejects_zero_days() {
        assert!(generate_synthetic(0, Regime::Clear, 1).is_err());
    }
}
