use alloc::format;

use crate::{Error, Result};

/// Shape of the weight-versus-age law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayKind {
    /// `max(w_min, 1 - age/T)`; recent samples weigh more.
    Linear,
    /// `min(1, w_min + age/T)`; the reverse ablation, old samples weigh more.
    Swa,
    /// `max(w_min, exp(-(age/T)/tau))`.
    Exponential { tau: f64 },
    /// `max(w_min, max(0, 1 - age/T)^p)`.
    Polynomial { power: f64 },
}

/// Parametric weight law over transition age.
///
/// Weights always lie in `[min_weight, 1]`, so normalizing them never divides
/// by zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySchedule {
    kind: DecayKind,
    decay_steps: u64,
    min_weight: f64,
}

impl Default for DecaySchedule {
    /// Linear decay over 100k steps down to 0.1.
    fn default() -> Self {
        Self {
            kind: DecayKind::Linear,
            decay_steps: 100_000,
            min_weight: 0.1,
        }
    }
}

impl DecaySchedule {
    pub fn new(kind: DecayKind, decay_steps: u64, min_weight: f64) -> Result<Self> {
        if decay_steps == 0 {
            return Err(Error::Config("decay steps must be at least 1".into()));
        }
        if !(min_weight > 0.0 && min_weight <= 1.0) {
            return Err(Error::Config(format!(
                "minimum weight must lie in (0, 1], got {min_weight}"
            )));
        }
        match kind {
            DecayKind::Exponential { tau } if !(tau > 0.0 && tau.is_finite()) => {
                return Err(Error::Config(format!("tau must be positive, got {tau}")))
            }
            DecayKind::Polynomial { power } if !(power > 0.0 && power.is_finite()) => {
                return Err(Error::Config(format!(
                    "power must be positive, got {power}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            decay_steps,
            min_weight,
        })
    }

    pub fn linear(decay_steps: u64, min_weight: f64) -> Result<Self> {
        Self::new(DecayKind::Linear, decay_steps, min_weight)
    }

    pub fn swa(decay_steps: u64, min_weight: f64) -> Result<Self> {
        Self::new(DecayKind::Swa, decay_steps, min_weight)
    }

    pub fn exponential(decay_steps: u64, min_weight: f64, tau: f64) -> Result<Self> {
        Self::new(DecayKind::Exponential { tau }, decay_steps, min_weight)
    }

    pub fn polynomial(decay_steps: u64, min_weight: f64, power: f64) -> Result<Self> {
        Self::new(DecayKind::Polynomial { power }, decay_steps, min_weight)
    }

    pub fn kind(&self) -> DecayKind {
        self.kind
    }

    pub fn decay_steps(&self) -> u64 {
        self.decay_steps
    }

    pub fn min_weight(&self) -> f64 {
        self.min_weight
    }

    /// Sampling weight of a transition that is `age` steps old.
    #[inline]
    pub fn weight(&self, age: u64) -> f64 {
        let x = age as f64 / self.decay_steps as f64;
        let w_min = self.min_weight;
        match self.kind {
            DecayKind::Linear => f64::max(w_min, 1.0 - x),
            DecayKind::Swa => f64::min(1.0, w_min + x),
            DecayKind::Exponential { tau } => f64::max(w_min, libm::exp(-x / tau)),
            DecayKind::Polynomial { power } => {
                f64::max(w_min, libm::pow(f64::max(0.0, 1.0 - x), power))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_examples() {
        let s = DecaySchedule::linear(100_000, 0.1).unwrap();
        assert_eq!(s.weight(0), 1.0);
        assert_eq!(s.weight(50_000), 0.5);
        assert_eq!(s.weight(95_000), 0.1);
    }

    #[test]
    fn swa_endpoints() {
        let s = DecaySchedule::swa(100_000, 0.1).unwrap();
        assert_eq!(s.weight(0), 0.1);
        assert_eq!(s.weight(90_000), 1.0);
    }

    #[test]
    fn polynomial_half_life() {
        let s = DecaySchedule::polynomial(1000, 0.01, 2.0).unwrap();
        assert_eq!(s.weight(500), 0.25);
    }

    #[test]
    fn exponential_at_t() {
        let s = DecaySchedule::exponential(1000, 0.1, 1.0).unwrap();
        // exp(-1) to 17 significant digits
        assert!((s.weight(1000) - 0.367_879_441_171_442_32).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DecaySchedule::linear(0, 0.1).is_err());
        assert!(DecaySchedule::linear(10, 0.0).is_err());
        assert!(DecaySchedule::linear(10, 1.5).is_err());
        assert!(DecaySchedule::exponential(10, 0.1, 0.0).is_err());
        assert!(DecaySchedule::polynomial(10, 0.1, -2.0).is_err());
        assert!(DecaySchedule::linear(10, 1.0).is_ok());
    }

    fn any_schedule() -> impl Strategy<Value = DecaySchedule> {
        (0usize..4, 1u64..200_000, 0.001f64..=1.0, 0.05f64..5.0).prop_map(|(k, t, w, q)| {
            let kind = match k {
                0 => DecayKind::Linear,
                1 => DecayKind::Swa,
                2 => DecayKind::Exponential { tau: q },
                _ => DecayKind::Polynomial { power: q },
            };
            DecaySchedule::new(kind, t, w).unwrap()
        })
    }

    proptest! {
        #[test]
        fn weight_within_bounds(s in any_schedule(), age in 0u64..1_000_000) {
            let w = s.weight(age);
            prop_assert!(w >= s.min_weight() && w <= 1.0);
        }

        #[test]
        fn monotone_in_age(s in any_schedule(), a in 0u64..500_000, d in 0u64..500_000) {
            let (w0, w1) = (s.weight(a), s.weight(a + d));
            match s.kind() {
                DecayKind::Swa => prop_assert!(w1 >= w0),
                _ => prop_assert!(w1 <= w0),
            }
        }
    }
}
