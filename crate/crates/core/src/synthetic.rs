//! Seeded synthetic data: candle series for demos and fixtures, and simple
//! labeled point clouds for model checks.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Candle;

/// Parameters of [`candles`].
#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub n_days: usize,
    pub start: NaiveDate,
    pub securities_code: u32,
    pub start_price: f64,
    /// Daily log-return volatility.
    pub volatility: f64,
    /// Expected next-day log return per unit of today's candle body
    /// `(close - open) / open`. Positive values make bodies persist.
    pub body_momentum: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            n_days: 500,
            start: NaiveDate::from_ymd_opt(2017, 1, 4).expect("valid date"),
            securities_code: 6758,
            start_price: 5000.0,
            volatility: 0.015,
            body_momentum: 0.0,
            seed: 0,
        }
    }
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    (-2.0 * (1.0 - u).ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

fn next_weekday(mut d: NaiveDate) -> NaiveDate {
    loop {
        d = d + Days::new(1);
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            return d;
        }
    }
}

/// Weekday-only geometric random walk of daily candles with integer yen
/// prices and volumes, in date order.
pub fn candles(config: &WalkConfig) -> Vec<Candle> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.n_days);
    let mut date = config.start;
    let mut prev_close = config.start_price;
    let mut body = 0.0;
    for _ in 0..config.n_days {
        let open = (prev_close * (0.004 * std_normal(&mut rng)).exp())
            .round()
            .max(1.0);
        let ret = config.body_momentum * body + config.volatility * std_normal(&mut rng);
        let close = (open * ret.exp()).round().max(1.0);
        let wick_hi = (0.006 * std_normal(&mut rng)).abs();
        let wick_lo = (0.006 * std_normal(&mut rng)).abs();
        let high = (open.max(close) * (1.0 + wick_hi)).ceil();
        let low = (open.min(close) * (1.0 - wick_lo)).floor().max(0.0);
        let volume = (2.0e6 * (0.35 * std_normal(&mut rng)).exp()).round();
        out.push(Candle {
            date,
            securities_code: config.securities_code,
            open,
            high,
            low,
            close,
            volume,
        });
        body = (close - open) / open;
        prev_close = close;
        date = next_weekday(date);
    }
    out
}

/// `n` points with five uniform features in `[-1, 1]`, labeled 1 when
/// `x0 + x1 > 0`. Points closer than `margin` to the boundary are resampled.
pub fn separable(n: usize, margin: f64, seed: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, 5));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        loop {
            let row: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let score = row[0] + row[1];
            if score.abs() >= margin {
                for (j, v) in row.into_iter().enumerate() {
                    x[[i, j]] = v;
                }
                y.push(u8::from(score > 0.0));
                break;
            }
        }
    }
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candles_are_well_formed_and_ordered() {
        let cs = candles(&WalkConfig {
            n_days: 300,
            seed: 3,
            ..WalkConfig::default()
        });
        assert_eq!(cs.len(), 300);
        assert!(cs.iter().all(Candle::is_well_formed));
        assert!(cs.windows(2).all(|w| w[0].date < w[1].date));
        assert!(cs
            .iter()
            .all(|c| !matches!(c.date.weekday(), Weekday::Sat | Weekday::Sun)));
    }

    #[test]
    fn seeded() {
        let c = WalkConfig::default();
        assert_eq!(candles(&c), candles(&c));
        assert_ne!(
            candles(&c),
            candles(&WalkConfig {
                seed: 1,
                ..c.clone()
            })
        );
        assert_eq!(separable(50, 0.1, 2), separable(50, 0.1, 2));
    }

    #[test]
    fn separable_respects_margin() {
        let (x, y) = separable(500, 0.2, 1);
        for (row, label) in x.rows().into_iter().zip(&y) {
            let s = row[0] + row[1];
            assert!(s.abs() >= 0.2);
            assert_eq!(*label, u8::from(s > 0.0));
        }
    }
}
