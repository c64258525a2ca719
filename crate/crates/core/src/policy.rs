//! Leasing policies: the drift-plus-penalty threshold rule, its exact per-slot
//! minimizer, and five baselines.
//!
//! Every policy returns the *desired* decision for a slot. Availability
//! masking is applied afterwards by the simulator. No policy emits a mixed
//! pair; each one either leases both resources or neither.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dynamics::{ControlParams, LeaseDecision, QueueState};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_PERIOD: u64 = 2;
pub const DEFAULT_PRICE_CUTOFF: f64 = 8.0;
pub const DEFAULT_QUEUE_CUTOFF: f64 = 10.0;

const VALID_KINDS: &str =
    "dsf, dsf_exact_argmin, periodic:<k>, greedy, price_only:<cents>, queue_threshold:<packets>, myopic";

/// Everything a policy may look at in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyInput<S: Scalar> {
    pub state: QueueState<S>,
    /// 1-based slot index.
    pub slot_index: u64,
    pub realized_price_ris: S,
    pub realized_price_spectrum: S,
    pub avail_ris: bool,
    pub avail_spectrum: bool,
    pub params: ControlParams<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Dsf,
    DsfExactArgmin,
    Periodic,
    Greedy,
    PriceOnly,
    QueueThreshold,
    Myopic,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Dsf,
        PolicyKind::DsfExactArgmin,
        PolicyKind::Periodic,
        PolicyKind::Greedy,
        PolicyKind::PriceOnly,
        PolicyKind::QueueThreshold,
        PolicyKind::Myopic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Dsf => "dsf",
            PolicyKind::DsfExactArgmin => "dsf_exact_argmin",
            PolicyKind::Periodic => "periodic",
            PolicyKind::Greedy => "greedy",
            PolicyKind::PriceOnly => "price_only",
            PolicyKind::QueueThreshold => "queue_threshold",
            PolicyKind::Myopic => "myopic",
        }
    }

    /// Name of the required parameter, if any.
    pub fn parameter(self) -> Option<&'static str> {
        match self {
            PolicyKind::Periodic => Some("k"),
            PolicyKind::PriceOnly => Some("price_cutoff"),
            PolicyKind::QueueThreshold => Some("queue_cutoff"),
            _ => None,
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// A fully parameterized policy.
///
/// The string form is `name` or `name:param`, e.g. `dsf`, `periodic:2`,
/// `price_only:8`, `queue_threshold:10`, `myopic`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec<S: Scalar> {
    Dsf,
    DsfExactArgmin,
    Periodic { period: u64 },
    Greedy,
    PriceOnly { cutoff: S },
    QueueThreshold { cutoff: S },
    Myopic,
}

impl<S: Scalar> PolicySpec<S> {
    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicySpec::Dsf => PolicyKind::Dsf,
            PolicySpec::DsfExactArgmin => PolicyKind::DsfExactArgmin,
            PolicySpec::Periodic { .. } => PolicyKind::Periodic,
            PolicySpec::Greedy => PolicyKind::Greedy,
            PolicySpec::PriceOnly { .. } => PolicyKind::PriceOnly,
            PolicySpec::QueueThreshold { .. } => PolicyKind::QueueThreshold,
            PolicySpec::Myopic => PolicyKind::Myopic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidPolicy {
                spec: self.to_string(),
                reason: reason.to_string(),
            })
        };
        match *self {
            PolicySpec::Periodic { period: 0 } => bad("period must be a positive integer"),
            PolicySpec::PriceOnly { cutoff } | PolicySpec::QueueThreshold { cutoff }
                if !(cutoff.is_finite() && cutoff > S::zero()) =>
            {
                bad("cutoff must be finite and > 0")
            }
            _ => Ok(()),
        }
    }

    /// dsf, greedy, periodic:2, price_only:8, queue_threshold:10, myopic.
    pub fn comparison_set() -> Vec<Self> {
        vec![
            PolicySpec::Dsf,
            PolicySpec::Greedy,
            PolicySpec::Periodic {
                period: DEFAULT_PERIOD,
            },
            PolicySpec::PriceOnly {
                cutoff: S::lit(DEFAULT_PRICE_CUTOFF),
            },
            PolicySpec::QueueThreshold {
                cutoff: S::lit(DEFAULT_QUEUE_CUTOFF),
            },
            PolicySpec::Myopic,
        ]
    }

    /// Desired decision for one slot, before availability masking.
    pub fn decide(&self, input: &PolicyInput<S>) -> Result<LeaseDecision> {
        self.validate()?;
        Ok(self.decide_validated(input))
    }

    pub(crate) fn decide_validated(&self, input: &PolicyInput<S>) -> LeaseDecision {
        let state = input.state;
        let backlog = state.q > S::zero();
        match *self {
            PolicySpec::Dsf => dsf_decide(state, &input.params),
            PolicySpec::DsfExactArgmin => dsf_decide_exact_argmin(
                state,
                &input.params,
                input.params.expected_price_ris,
                input.params.expected_price_spectrum,
            ),
            PolicySpec::Periodic { period } => {
                LeaseDecision::joint(input.slot_index.is_multiple_of(period) && backlog)
            }
            PolicySpec::Greedy => LeaseDecision::joint(backlog),
            PolicySpec::PriceOnly { cutoff } => LeaseDecision::joint(
                input.realized_price_ris + input.realized_price_spectrum <= cutoff && backlog,
            ),
            PolicySpec::QueueThreshold { cutoff } => LeaseDecision::joint(state.q >= cutoff),
            PolicySpec::Myopic => dsf_decide_exact_argmin(
                state,
                &input.params,
                input.realized_price_ris,
                input.realized_price_spectrum,
            ),
        }
    }
}

/// Desired decision for one slot under `spec`.
pub fn decide<S: Scalar>(spec: &PolicySpec<S>, input: &PolicyInput<S>) -> Result<LeaseDecision> {
    spec.decide(input)
}

/// Per-slot drift-plus-penalty objective
/// `V (x p + y s) - Q R - Z eps_d (1 - R)` with `R = x y`.
pub fn dsf_objective<S: Scalar>(
    state: QueueState<S>,
    decision: LeaseDecision,
    params: &ControlParams<S>,
    price_ris: S,
    price_spectrum: S,
) -> S {
    let r = S::indicator(decision.departure());
    let cost = decision.cost(price_ris, price_spectrum).value();
    params.v * cost - state.q * r - state.z * params.eps_d * (S::one() - r)
}

/// Threshold rule: lease both iff `Q + Z > V (E[p] + E[s])`.
pub fn dsf_decide<S: Scalar>(state: QueueState<S>, params: &ControlParams<S>) -> LeaseDecision {
    LeaseDecision::joint(state.q + state.z > params.threshold())
}

/// Per-slot objective with the virtual queue charged for deferral:
/// `V (x p + y s) - Q R + Z eps_d (1 - R)`.
///
/// Identical to [`dsf_objective`] except for the sign of the `Z` term. In the
/// literal form an idle slot *earns* `Z eps_d`, so urgency would discourage
/// leasing; here it costs `Z eps_d`, which is the reading under which the
/// threshold rule of [`dsf_decide`] is the minimizer at `eps_d = 1`.
pub fn dsf_deferral_objective<S: Scalar>(
    state: QueueState<S>,
    decision: LeaseDecision,
    params: &ControlParams<S>,
    price_ris: S,
    price_spectrum: S,
) -> S {
    let r = S::indicator(decision.departure());
    let cost = decision.cost(price_ris, price_spectrum).value();
    params.v * cost - state.q * r + state.z * params.eps_d * (S::one() - r)
}

/// Exact minimizer of [`dsf_deferral_objective`] over `{(0,0), (1,1)}`; ties
/// go to `(0,0)`.
///
/// Equivalent to leasing iff `Q + eps_d Z > V (p + s)`. Coincides with
/// [`dsf_decide`] at `eps_d = 1` and differs from it otherwise.
pub fn dsf_decide_exact_argmin<S: Scalar>(
    state: QueueState<S>,
    params: &ControlParams<S>,
    price_ris: S,
    price_spectrum: S,
) -> LeaseDecision {
    let lease = dsf_deferral_objective(state, LeaseDecision::JOINT, params, price_ris, price_spectrum);
    let idle = dsf_deferral_objective(state, LeaseDecision::IDLE, params, price_ris, price_spectrum);
    LeaseDecision::joint(lease < idle)
}

impl<S: Scalar> fmt::Display for PolicySpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.kind().name();
        match self {
            PolicySpec::Periodic { period } => write!(f, "{name}:{period}"),
            PolicySpec::PriceOnly { cutoff } | PolicySpec::QueueThreshold { cutoff } => {
                write!(f, "{name}:{cutoff}")
            }
            _ => f.write_str(name),
        }
    }
}

impl<S: Scalar> FromStr for PolicySpec<S> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s, None),
        };
        let kind = PolicyKind::from_name(name).ok_or_else(|| Error::UnknownPolicy {
            name: name.to_string(),
            valid: VALID_KINDS,
        })?;
        let invalid = |reason: String| Error::InvalidPolicy {
            spec: s.to_string(),
            reason,
        };

        let spec = match (kind.parameter(), param) {
            (None, Some(_)) => {
                return Err(invalid(format!("`{name}` takes no parameter")));
            }
            (Some(param), None) | (Some(param), Some("")) => {
                return Err(Error::MissingPolicyParameter {
                    kind: kind.name(),
                    param,
                });
            }
            (None, None) => match kind {
                PolicyKind::Dsf => PolicySpec::Dsf,
                PolicyKind::DsfExactArgmin => PolicySpec::DsfExactArgmin,
                PolicyKind::Greedy => PolicySpec::Greedy,
                PolicyKind::Myopic => PolicySpec::Myopic,
                _ => unreachable!("kinds with parameters handled above"),
            },
            (Some(_), Some(raw)) => match kind {
                PolicyKind::Periodic => PolicySpec::Periodic {
                    period: raw
                        .parse()
                        .map_err(|_| invalid(format!("`{raw}` is not a positive integer")))?,
                },
                PolicyKind::PriceOnly | PolicyKind::QueueThreshold => {
                    let cutoff: S = raw
                        .parse()
                        .map_err(|_| invalid(format!("`{raw}` is not a number")))?;
                    if kind == PolicyKind::PriceOnly {
                        PolicySpec::PriceOnly { cutoff }
                    } else {
                        PolicySpec::QueueThreshold { cutoff }
                    }
                }
                _ => unreachable!("kinds without parameters handled above"),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl<S: Scalar> Serialize for PolicySpec<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        serializer.collect_str(self)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for PolicySpec<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}
