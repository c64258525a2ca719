//! Offline minimum-cost schedule by exhaustive enumeration.
//!
//! Given a fully known realization, finds the cheapest sequence of joint
//! leases that empties the data queue by the deadline. Slots where either
//! resource is unavailable cannot lease. Enumeration covers all `2^deadline`
//! sequences, so the deadline is capped at [`MAX_DEADLINE`].

use serde::Serialize;

use crate::environment::MarketObservation;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_DEADLINE: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct OracleSolution<S: Scalar> {
    /// `None` when no sequence clears the backlog.
    pub min_total_cost: Option<S>,
    /// Joint lease per slot for the cheapest sequence; all false when infeasible.
    pub decisions: Vec<bool>,
    pub feasible: bool,
}

/// Cheapest joint-lease schedule over the first `deadline` slots of
/// `realization` that leaves no backlog. Sequences are enumerated as bitmasks
/// (bit `i` is slot `i + 1`) in ascending order; ties keep the first one.
pub fn offline_min_cost<S: Scalar>(
    realization: &[MarketObservation<S>],
    initial_backlog: u64,
    deadline: usize,
) -> Result<OracleSolution<S>> {
    if deadline == 0 || deadline > MAX_DEADLINE {
        return Err(Error::OracleDeadline {
            deadline,
            limit: MAX_DEADLINE,
        });
    }
    if realization.len() < deadline {
        return Err(Error::RealizationTooShort {
            available: realization.len(),
            required: deadline,
        });
    }
    let window = &realization[..deadline];
    let allowed: u32 = window
        .iter()
        .enumerate()
        .filter(|(_, o)| o.both_available())
        .fold(0, |mask, (i, _)| mask | (1 << i));

    let mut best: Option<(S, u32)> = None;
    for mask in 0u32..(1 << deadline) {
        if mask & !allowed != 0 {
            continue;
        }
        let mut q = initial_backlog;
        let mut cost = S::zero();
        for (i, obs) in window.iter().enumerate() {
            q += u64::from(obs.arrival);
            if mask & (1 << i) != 0 {
                q = q.saturating_sub(1);
                cost = cost + obs.joint_price();
            }
        }
        if q == 0 && best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, mask));
        }
    }

    Ok(match best {
        Some((cost, mask)) => OracleSolution {
            min_total_cost: Some(cost),
            decisions: (0..deadline).map(|i| mask & (1 << i) != 0).collect(),
            feasible: true,
        },
        None => OracleSolution {
            min_total_cost: None,
            decisions: vec![false; deadline],
            feasible: false,
        },
    })
}
