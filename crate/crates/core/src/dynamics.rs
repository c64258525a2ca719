//! Queue dynamics, departures, per-slot cost and the Lyapunov function.
//!
//! The controller state is the pair `(Q, Z)`: `Q` counts packets waiting for
//! transmission and `Z` is a virtual queue that grows by `eps_d` in every slot
//! without a departure, so that deferral becomes progressively more expensive.
//!
//! ```text
//! Q(t+1) = max(Q(t) - R(t), 0) + A(t+1)
//! Z(t+1) = max(Z(t) - R(t) + eps_d * (1 - R(t)), 0)
//! R(t)   = x(t) * y(t)
//! C(t)   = x(t) * p(t) + y(t) * s(t)
//! L(Q,Z) = (Q^2 + Z^2) / 2
//! ```
//!
//! Everything here is pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Controller state: data backlog `q` and virtual delay queue `z`, both >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct QueueState<S: Scalar> {
    pub q: S,
    pub z: S,
}

impl<S: Scalar> QueueState<S> {
    pub fn new(q: S, z: S) -> Self {
        debug_assert!(q >= S::zero() && z >= S::zero());
        Self { q, z }
    }

    /// Empty system with `backlog` packets preloaded.
    pub fn with_backlog(backlog: u64) -> Self {
        Self {
            q: S::from_count(backlog),
            z: S::zero(),
        }
    }

    pub fn lyapunov(&self) -> S {
        lyapunov(self.q, self.z)
    }
}

/// Binary leasing decision: `ris` is x(t), `spectrum` is y(t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LeaseDecision {
    pub ris: bool,
    pub spectrum: bool,
}

impl LeaseDecision {
    pub const IDLE: Self = Self {
        ris: false,
        spectrum: false,
    };
    pub const JOINT: Self = Self {
        ris: true,
        spectrum: true,
    };

    pub const fn new(ris: bool, spectrum: bool) -> Self {
        Self { ris, spectrum }
    }

    /// `(0,0)` or `(1,1)` from a single lease flag.
    pub const fn joint(lease: bool) -> Self {
        Self {
            ris: lease,
            spectrum: lease,
        }
    }

    pub fn departure(&self) -> bool {
        departure(self.ris, self.spectrum)
    }

    pub fn is_mixed(&self) -> bool {
        self.ris != self.spectrum
    }

    pub fn cost<S: Scalar>(&self, price_ris: S, price_spectrum: S) -> SlotCost<S> {
        SlotCost(slot_cost(self.ris, self.spectrum, price_ris, price_spectrum))
    }
}

/// Realized leasing cost of one slot, in cents.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent, bound = "")]
pub struct SlotCost<S: Scalar>(pub S);

impl<S: Scalar> SlotCost<S> {
    pub fn value(self) -> S {
        self.0
    }
}

/// DSF knobs: Lyapunov weight `v`, delay penalty `eps_d` and the expected
/// prices entering the threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields)]
pub struct ControlParams<S: Scalar> {
    pub v: S,
    pub eps_d: S,
    pub expected_price_ris: S,
    pub expected_price_spectrum: S,
}

impl<S: Scalar> ControlParams<S> {
    pub fn new(v: S, eps_d: S, expected_price_ris: S, expected_price_spectrum: S) -> Result<Self> {
        let params = Self {
            v,
            eps_d,
            expected_price_ris,
            expected_price_spectrum,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("v", self.v),
            ("eps_d", self.eps_d),
            ("expected_price_ris", self.expected_price_ris),
            ("expected_price_spectrum", self.expected_price_spectrum),
        ];
        for (name, value) in checks {
            if !(value.is_finite() && value > S::zero()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// `V * (E[p] + E[s])`, the leasing threshold of the DSF rule.
    pub fn threshold(&self) -> S {
        self.v * (self.expected_price_ris + self.expected_price_spectrum)
    }
}

pub fn advance_data_queue<S: Scalar>(q: S, departed: bool, arrived: bool) -> S {
    (q - S::indicator(departed)).max(S::zero()) + S::indicator(arrived)
}

pub fn advance_virtual_queue<S: Scalar>(z: S, departed: bool, eps_d: S) -> S {
    let r = S::indicator(departed);
    (z - r + eps_d * (S::one() - r)).max(S::zero())
}

pub fn departure(ris: bool, spectrum: bool) -> bool {
    ris && spectrum
}

pub fn slot_cost<S: Scalar>(ris: bool, spectrum: bool, price_ris: S, price_spectrum: S) -> S {
    S::indicator(ris) * price_ris + S::indicator(spectrum) * price_spectrum
}

pub fn lyapunov<S: Scalar>(q: S, z: S) -> S {
    (q * q + z * z) / S::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn data_queue_examples() {
        assert_eq!(advance_data_queue(5.0, true, true), 5.0);
        assert_eq!(advance_data_queue(0.0, true, false), 0.0);
        assert_eq!(advance_data_queue(3.0, false, true), 4.0);
    }

    #[test]
    fn virtual_queue_examples() {
        assert_eq!(advance_virtual_queue(2.0, false, 0.5), 2.5);
        assert_eq!(advance_virtual_queue(2.0, true, 0.5), 1.0);
        assert_eq!(advance_virtual_queue(0.3, true, 0.5), 0.0);
    }

    #[test]
    fn departure_examples() {
        assert!(departure(true, true));
        assert!(!departure(true, false));
        assert!(!departure(false, false));
    }

    #[test]
    fn departure_is_min_of_flags() {
        for x in [false, true] {
            for y in [false, true] {
                let as_min = u8::from(x).min(u8::from(y)) == 1;
                assert_eq!(departure(x, y), as_min);
            }
        }
    }

    #[test]
    fn slot_cost_examples() {
        assert_eq!(slot_cost(true, true, 3.0, 4.0), 7.0);
        assert_eq!(slot_cost(false, false, 9.0, 9.0), 0.0);
        assert_eq!(slot_cost(true, false, 2.5, 9.0), 2.5);
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov(3.0, 4.0), 12.5);
        assert_eq!(lyapunov(0.0, 0.0), 0.0);
        assert_eq!(lyapunov(1.0, 1.0), 1.0);
        assert_eq!(lyapunov(3.0f32, 4.0f32), 12.5f32);
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(ControlParams::new(1.0, 1.0, 5.5, 5.5).is_ok());
        assert!(ControlParams::new(0.0, 1.0, 5.5, 5.5).is_err());
        assert!(ControlParams::new(1.0, -1.0, 5.5, 5.5).is_err());
        assert!(ControlParams::new(1.0, 1.0, 0.0, 5.5).is_err());
        assert!(ControlParams::new(1.0, 1.0, 5.5, f64::NAN).is_err());
    }

    #[test]
    fn decision_cost_is_partial_for_mixed_pairs() {
        let d = LeaseDecision::new(true, false);
        assert!(d.is_mixed());
        assert!(!d.departure());
        assert_eq!(d.cost(2.5, 9.0).value(), 2.5);
    }

    proptest! {
        #[test]
        fn queues_stay_nonnegative(q in 0.0..1e6f64, z in 0.0..1e6f64, r: bool, a: bool, eps in 1e-6..10.0f64) {
            prop_assert!(advance_data_queue(q, r, a) >= 0.0);
            prop_assert!(advance_virtual_queue(z, r, eps) >= 0.0);
        }

        #[test]
        fn idle_slot_is_identity(q in 0.0..1e6f64) {
            prop_assert_eq!(advance_data_queue(q, false, false), q);
        }

        #[test]
        fn data_queue_monotone(q in 0.0..1e3f64, dq in 0.0..1e3f64, r: bool, a: bool) {
            prop_assert!(advance_data_queue(q + dq, r, a) >= advance_data_queue(q, r, a));
            prop_assert!(advance_data_queue(q, r, true) >= advance_data_queue(q, r, a));
            prop_assert!(advance_data_queue(q, true, a) <= advance_data_queue(q, r, a));
        }

        #[test]
        fn virtual_queue_monotone(z in 0.0..1e3f64, dz in 0.0..1e3f64, r: bool,
                                  eps in 1e-3..10.0f64, deps in 0.0..10.0f64) {
            prop_assert!(advance_virtual_queue(z + dz, r, eps) >= advance_virtual_queue(z, r, eps));
            prop_assert!(advance_virtual_queue(z, r, eps + deps) >= advance_virtual_queue(z, r, eps));
        }

        #[test]
        fn data_queue_moves_at_most_one(q in (0u32..10_000).prop_map(f64::from), r: bool, a: bool) {
            prop_assert!((advance_data_queue(q, r, a) - q).abs() <= 1.0);
        }

        #[test]
        fn cost_bounded_by_both_prices(x: bool, y: bool, p in 0.0..100.0f64, s in 0.0..100.0f64) {
            let c = slot_cost(x, y, p, s);
            prop_assert!(c >= 0.0 && c <= p + s);
        }

        #[test]
        fn lyapunov_strictly_increasing(q in 1e-3..1e3f64, z in 1e-3..1e3f64, d in 1e-3..1e3f64) {
            prop_assert!(lyapunov(q + d, z) > lyapunov(q, z));
            prop_assert!(lyapunov(q, z + d) > lyapunov(q, z));
        }
    }
}
