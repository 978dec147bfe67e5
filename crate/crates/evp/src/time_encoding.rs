//! Bochner-style functional time encoding: a scalar time delta maps to
//! interleaved cos/sin features at d/2 frequencies, scaled by 1/sqrt(d) so
//! the squared norm is exactly 1/2 for every input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::seeding::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyScheme {
    Geometric,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeEncoderParams {
    /// One frequency per cos/sin pair, strictly decreasing under the
    /// geometric scheme.
    pub omega: Vec<f64>,
    pub dim: usize,
    /// When set, pre-training includes the frequencies in the Adam step.
    pub learnable: bool,
}

impl TimeEncoderParams {
    pub fn from_frequencies(omega: Vec<f64>, learnable: bool) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::Config("time encoder needs at least one frequency".into()));
        }
        if omega.iter().any(|w| *w <= 0.0) {
            return Err(Error::Config("time encoder frequencies must be positive".into()));
        }
        Ok(Self {
            dim: omega.len() * 2,
            omega,
            learnable,
        })
    }

    pub fn encode(&self, t: f64) -> Vec<f64> {
        let norm = 1.0 / (self.dim as f64).sqrt();
        let mut out = Vec::with_capacity(self.dim);
        for w in &self.omega {
            let a = w * t;
            out.push(a.cos() * norm);
            out.push(a.sin() * norm);
        }
        out
    }

    /// Traced encoding; `omega_var` must hold the same frequencies so the
    /// gradient lands on the right leaf when the encoder is learnable.
    pub fn encode_traced(&self, tape: &mut Tape, omega_var: Var, t: f64) -> Var {
        tape.cos_sin_time(omega_var, t)
    }
}

/// Build frequencies for an even dimension `d`.
///
/// Geometric: `omega_i = 1 / base^(2(i-1)/d)`, base 10000, optionally
/// replaced by the dataset's normalized time span so the slowest period
/// roughly covers the data. Random: log-uniform draws from a seeded stream,
/// sorted descending.
pub fn init_frequencies(
    d: usize,
    scheme: FrequencyScheme,
    span_scale: Option<f64>,
    seed: u64,
    learnable: bool,
) -> Result<TimeEncoderParams> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::Config(format!("time encoding dim must be even and positive, got {d}")));
    }
    let m = d / 2;
    let omega = match scheme {
        FrequencyScheme::Geometric => {
            let base = span_scale.map_or(10_000.0, |s| s.max(2.0));
            (0..m)
                .map(|i| 1.0 / base.powf(2.0 * i as f64 / d as f64))
                .collect()
        }
        FrequencyScheme::Random => {
            let mut rng = stream_rng(seed, "time-encoder");
            let mut ws: Vec<f64> = (0..m)
                .map(|_| 10f64.powf(rng.gen_range(-4.0..0.0)))
                .collect();
            ws.sort_by(|a, b| b.partial_cmp(a).unwrap());
            ws
        }
    };
    TimeEncoderParams::from_frequencies(omega, learnable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_time_encodes_to_cos_one_sin_zero() {
        let p = TimeEncoderParams::from_frequencies(vec![1.0], false).unwrap();
        let v = p.encode(0.0);
        assert!((v[0] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(v[1].abs() < 1e-15);
    }

    #[test]
    fn d4_fixture_matches_direct_evaluation() {
        let p = TimeEncoderParams::from_frequencies(vec![2.0, 0.5], false).unwrap();
        let t = std::f64::consts::PI;
        let v = p.encode(t);
        // [cos 2pi, sin 2pi, cos pi/2, sin pi/2] / 2
        assert!((v[0] - 0.5).abs() < 1e-12);
        assert!(v[1].abs() < 1e-12);
        assert!(v[2].abs() < 1e-12);
        assert!((v[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn geometric_frequencies_match_the_formula() {
        let p = init_frequencies(2, FrequencyScheme::Geometric, None, 0, false).unwrap();
        assert_eq!(p.omega, vec![1.0]);

        let p = init_frequencies(4, FrequencyScheme::Geometric, None, 0, false).unwrap();
        assert!((p.omega[0] - 1.0).abs() < 1e-15);
        assert!((p.omega[1] - 0.01).abs() < 1e-15);

        // strictly decreasing
        for w in p.omega.windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn random_scheme_is_seed_deterministic() {
        let a = init_frequencies(8, FrequencyScheme::Random, None, 9, false).unwrap();
        let b = init_frequencies(8, FrequencyScheme::Random, None, 9, false).unwrap();
        assert_eq!(a.omega, b.omega);
        let c = init_frequencies(8, FrequencyScheme::Random, None, 10, false).unwrap();
        assert_ne!(a.omega, c.omega);
    }

    #[test]
    fn odd_dim_is_rejected() {
        assert!(init_frequencies(3, FrequencyScheme::Geometric, None, 0, false).is_err());
    }

    #[test]
    fn continuity_in_t() {
        let p = init_frequencies(16, FrequencyScheme::Geometric, None, 3, false).unwrap();
        let max_w = p.omega[0];
        let t = 12.345;
        for k in 1..6 {
            let eps = 10f64.powi(-k);
            let a = p.encode(t);
            let b = p.encode(t + eps);
            let dist: f64 = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            // Lipschitz bound: |d/dt encode| <= max omega (norm of derivative
            // vector is sqrt(sum w_i^2 / d) <= max_w), with slack.
            assert!(dist <= max_w * eps * 1.001 + 1e-12, "eps={eps} dist={dist}");
        }
    }

    proptest! {
        #[test]
        fn squared_norm_is_one_half(t in -1e6f64..1e6, seed in 0u64..1000) {
            let p = init_frequencies(12, FrequencyScheme::Random, None, seed, false).unwrap();
            let v = p.encode(t);
            let sq: f64 = v.iter().map(|x| x * x).sum();
            prop_assert!((sq - 0.5).abs() < 1e-12);
        }
    }
}
