//! The slot-by-slot control loop.
//!
//! Each slot: draw the market, let the arrival join `Q`, ask the policy for a
//! desired lease, mask it by availability, charge the cost, then advance `Q`
//! and `Z`.
//!
//! Timing: `q_before` is the backlog the policy observes, after this slot's
//! arrival, and `q_after = max(q_before - r, 0)`. The next record's `q_before`
//! is `q_after` plus that slot's arrival.
//!
//! Masking is atomic. A desired `(1,1)` becomes `(0,0)` unless both
//! resources are available, because a single leased resource yields no
//! departure.

use serde::{Deserialize, Serialize};

use crate::dynamics::{advance_virtual_queue, ControlParams, LeaseDecision, QueueState};
use crate::environment::{realization, MarketObservation, ScenarioConfig};
use crate::error::Result;
use crate::policy::{PolicyInput, PolicySpec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SlotRecord<S: Scalar> {
    /// 1-based slot index.
    pub t: u64,
    pub q_before: S,
    pub z_before: S,
    pub arrival: bool,
    pub avail_ris: bool,
    pub avail_spectrum: bool,
    pub price_ris: S,
    pub price_spectrum: S,
    pub x_desired: bool,
    pub y_desired: bool,
    pub x_effective: bool,
    pub y_effective: bool,
    pub r: bool,
    pub cost: S,
    pub q_after: S,
    pub z_after: S,
}

impl<S: Scalar> SlotRecord<S> {
    pub fn observation(&self) -> MarketObservation<S> {
        MarketObservation {
            price_ris: self.price_ris,
            price_spectrum: self.price_spectrum,
            avail_ris: self.avail_ris,
            avail_spectrum: self.avail_spectrum,
            arrival: self.arrival,
        }
    }

    pub fn effective(&self) -> LeaseDecision {
        LeaseDecision::new(self.x_effective, self.y_effective)
    }
}

/// Full record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Trace<S: Scalar> {
    pub scenario: ScenarioConfig<S>,
    pub policy: PolicySpec<S>,
    pub params: ControlParams<S>,
    pub records: Vec<SlotRecord<S>>,
}

impl<S: Scalar> Trace<S> {
    pub fn total_cost(&self) -> S {
        total_cost(&self.records)
    }

    pub fn final_backlog(&self) -> S {
        self.records.last().map_or(S::zero(), |r| r.q_after)
    }

    /// Checks conservation, cost accounting, masking soundness and slot
    /// contiguity. Returns a description of the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.records.len() as u64 != self.scenario.horizon_slots {
            return Err(format!(
                "{} records for a horizon of {}",
                self.records.len(),
                self.scenario.horizon_slots
            ));
        }
        check_records(&self.records, self.scenario.initial_backlog)
    }
}

/// Invariant checks on a bare record sequence that started from
/// `initial_backlog` packets.
pub fn check_records<S: Scalar>(records: &[SlotRecord<S>], initial_backlog: u64) -> std::result::Result<(), String> {
    let mut arrivals = 0u64;
    let mut departures = 0u64;
    let mut recomputed_cost = S::zero();
    for (i, rec) in records.iter().enumerate() {
        let t = i as u64 + 1;
        if rec.t != t {
            return Err(format!("slot index {} at position {t}", rec.t));
        }
        if (rec.x_effective && !rec.x_desired) || (rec.y_effective && !rec.y_desired) {
            return Err(format!("slot {t}: masking added a lease"));
        }
        if rec.r != (rec.x_effective && rec.y_effective) {
            return Err(format!("slot {t}: r is not x_effective * y_effective"));
        }
        if !(rec.avail_ris && rec.avail_spectrum) && (rec.r || rec.cost != S::zero()) {
            return Err(format!("slot {t}: unavailable slot was charged or served"));
        }
        let cost = rec.effective().cost(rec.price_ris, rec.price_spectrum).value();
        if rec.cost != cost {
            return Err(format!("slot {t}: cost {} != recomputed {cost}", rec.cost));
        }
        if rec.q_after != (rec.q_before - S::indicator(rec.r)).max(S::zero()) {
            return Err(format!("slot {t}: q_after inconsistent with q_before and r"));
        }
        if i > 0 && rec.q_before != records[i - 1].q_after + S::indicator(rec.arrival) {
            return Err(format!("slot {t}: q_before does not chain from slot {}", t - 1));
        }
        if i == 0 && rec.q_before != S::from_count(initial_backlog) + S::indicator(rec.arrival) {
            return Err("slot 1: q_before does not match the initial backlog".into());
        }
        arrivals += u64::from(rec.arrival);
        // A lease with an empty queue departs nothing.
        if rec.r && rec.q_before > S::zero() {
            departures += 1;
        }
        recomputed_cost = recomputed_cost + cost;
    }
    let final_q = records.last().map_or(S::zero(), |r| r.q_after);
    if S::from_count(initial_backlog + arrivals) != S::from_count(departures) + final_q {
        return Err(format!(
            "conservation: {initial_backlog} + {arrivals} arrivals != {departures} departures + {final_q} left"
        ));
    }
    if recomputed_cost != total_cost(records) {
        return Err("accumulated cost differs from recomputed cost".into());
    }
    Ok(())
}

fn total_cost<S: Scalar>(records: &[SlotRecord<S>]) -> S {
    records.iter().fold(S::zero(), |acc, r| acc + r.cost)
}

/// A validated policy and its parameters, ready to step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controller<S: Scalar> {
    policy: PolicySpec<S>,
    params: ControlParams<S>,
    freeze_z_when_empty: bool,
}

impl<S: Scalar> Controller<S> {
    pub fn new(policy: PolicySpec<S>, params: ControlParams<S>) -> Result<Self> {
        policy.validate()?;
        params.validate()?;
        Ok(Self {
            policy,
            params,
            freeze_z_when_empty: false,
        })
    }

    pub fn freeze_z_when_empty(mut self, freeze: bool) -> Self {
        self.freeze_z_when_empty = freeze;
        self
    }

    /// Stages 2 to 7 of the loop for slot `t`. `state` is the end-of-previous-slot state.
    pub fn step(&self, state: QueueState<S>, t: u64, obs: &MarketObservation<S>) -> (QueueState<S>, SlotRecord<S>) {
        let q_before = state.q + S::indicator(obs.arrival);
        let z_before = state.z;
        let observed = QueueState::new(q_before, z_before);

        let desired = self.policy.decide_validated(&PolicyInput {
            state: observed,
            slot_index: t,
            realized_price_ris: obs.price_ris,
            realized_price_spectrum: obs.price_spectrum,
            avail_ris: obs.avail_ris,
            avail_spectrum: obs.avail_spectrum,
            params: self.params,
        });
        let effective = if obs.both_available() {
            desired
        } else {
            LeaseDecision::IDLE
        };
        let r = effective.departure();
        let cost = effective.cost(obs.price_ris, obs.price_spectrum).value();

        let q_after = (q_before - S::indicator(r)).max(S::zero());
        let z_after = if self.freeze_z_when_empty && q_before == S::zero() {
            (z_before - S::indicator(r)).max(S::zero())
        } else {
            advance_virtual_queue(z_before, r, self.params.eps_d)
        };

        let record = SlotRecord {
            t,
            q_before,
            z_before,
            arrival: obs.arrival,
            avail_ris: obs.avail_ris,
            avail_spectrum: obs.avail_spectrum,
            price_ris: obs.price_ris,
            price_spectrum: obs.price_spectrum,
            x_desired: desired.ris,
            y_desired: desired.spectrum,
            x_effective: effective.ris,
            y_effective: effective.spectrum,
            r,
            cost,
            q_after,
            z_after,
        };
        (QueueState::new(q_after, z_after), record)
    }

    /// Runs the loop over a fixed realization.
    pub fn simulate(&self, observations: &[MarketObservation<S>], initial_backlog: u64) -> Vec<SlotRecord<S>> {
        let mut state = QueueState::with_backlog(initial_backlog);
        observations
            .iter()
            .zip(1u64..)
            .map(|(obs, t)| {
                let (next, record) = self.step(state, t, obs);
                state = next;
                record
            })
            .collect()
    }
}

/// One slot of the loop with the virtual-queue update applied verbatim.
pub fn step<S: Scalar>(
    state: QueueState<S>,
    obs: &MarketObservation<S>,
    t: u64,
    policy: &PolicySpec<S>,
    params: &ControlParams<S>,
) -> Result<(QueueState<S>, SlotRecord<S>)> {
    Ok(Controller::new(*policy, *params)?.step(state, t, obs))
}

/// Simulates `scenario.horizon_slots` slots of the scenario's own market.
pub fn run<S: Scalar>(
    scenario: &ScenarioConfig<S>,
    policy: &PolicySpec<S>,
    params: &ControlParams<S>,
) -> Result<Trace<S>> {
    let controller = Controller::new(*policy, *params)?;
    scenario.validate()?;
    for warning in scenario.warnings() {
        log::warn!("{warning}");
    }
    let observations = realization(scenario)?;
    Ok(run_on(scenario, &observations, controller))
}

/// Like [`run`], but on a realization shared with other runs. The
/// realization length must equal the horizon.
pub fn run_with_realization<S: Scalar>(
    scenario: &ScenarioConfig<S>,
    observations: &[MarketObservation<S>],
    policy: &PolicySpec<S>,
    params: &ControlParams<S>,
) -> Result<Trace<S>> {
    let controller = Controller::new(*policy, *params)?;
    scenario.validate()?;
    if observations.len() as u64 != scenario.horizon_slots {
        return Err(crate::error::Error::RealizationTooShort {
            available: observations.len(),
            required: scenario.horizon_slots as usize,
        });
    }
    Ok(run_on(scenario, observations, controller))
}

fn run_on<S: Scalar>(
    scenario: &ScenarioConfig<S>,
    observations: &[MarketObservation<S>],
    controller: Controller<S>,
) -> Trace<S> {
    let controller = controller.freeze_z_when_empty(scenario.freeze_z_when_empty);
    Trace {
        scenario: scenario.clone(),
        policy: controller.policy,
        params: controller.params,
        records: controller.simulate(observations, scenario.initial_backlog),
    }
}
