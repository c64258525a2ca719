//! Intent translation and closed-loop assurance.
//!
//! A structured intent (payload, deadline, reliability, priority) is mapped to
//! DSF parameters by a deterministic rule table. The table's input is the
//! *tightness* of the intent, the fraction of expected joint-availability
//! slots inside the deadline that the payload needs:
//!
//! ```text
//! n_packets      = ceil(payload_mb / packet_size_mb)
//! deadline_slots = floor(deadline_s / slot_duration_s)
//! tau            = n_packets / (avail_ris * avail_spectrum * deadline_slots)
//! eps_d          = 0.5 if tau < 0.5, 1.0 if tau < 0.8, else 2.0
//! V              = max(1, 20 * (1 - tau))
//! ```
//!
//! `cost_saver` doubles `V` and `delay_critical` doubles `eps_d`. The intent is
//! feasible iff `tau <= 1`.
//!
//! Assurance replays a trace against the intent: it counts packets served by
//! the deadline and extrapolates the service rate at ten checkpoints to flag
//! drift early.

use serde::{Deserialize, Serialize};

use crate::dynamics::ControlParams;
use crate::environment::ScenarioConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simulator::{SlotRecord, Trace};

pub const DEFAULT_SLOT_DURATION_S: f64 = 1.0;
pub const DEFAULT_PACKET_SIZE_MB: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    CostSaver,
    #[default]
    Balanced,
    DelayCritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields)]
pub struct IntentSpec<S: Scalar> {
    pub payload_mb: S,
    pub deadline_s: S,
    pub reliability_pct: S,
    #[serde(default)]
    pub priority: Priority,
}

impl<S: Scalar> IntentSpec<S> {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: S| {
            if x.is_finite() && x > S::zero() {
                Ok(())
            } else {
                Err(Error::InvalidIntent(format!("{name} must be > 0, got {x}")))
            }
        };
        positive("payload_mb", self.payload_mb)?;
        positive("deadline_s", self.deadline_s)?;
        positive("reliability_pct", self.reliability_pct)?;
        if self.reliability_pct > S::lit(100.0) {
            return Err(Error::InvalidIntent(format!(
                "reliability_pct must be <= 100, got {}",
                self.reliability_pct
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TranslationResult<S: Scalar> {
    pub params: ControlParams<S>,
    pub n_packets: u64,
    pub deadline_slots: u64,
    pub tightness: S,
    pub feasible: bool,
}

/// Constants of the intent-to-parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub low_band_edge: f64,
    pub high_band_edge: f64,
    pub eps_low: f64,
    pub eps_mid: f64,
    pub eps_high: f64,
    pub v_base: f64,
    pub v_floor: f64,
    pub cost_saver_v_multiplier: f64,
    pub delay_critical_eps_multiplier: f64,
}

impl Default for RuleTable {
    fn default() -> Self {
        Self {
            low_band_edge: 0.5,
            high_band_edge: 0.8,
            eps_low: 0.5,
            eps_mid: 1.0,
            eps_high: 2.0,
            v_base: 20.0,
            v_floor: 1.0,
            cost_saver_v_multiplier: 2.0,
            delay_critical_eps_multiplier: 2.0,
        }
    }
}

/// Anything that can turn an intent into DSF parameters. The rule table is
/// the only implementation here.
pub trait IntentTranslator<S: Scalar> {
    fn translate(
        &self,
        intent: &IntentSpec<S>,
        scenario: &ScenarioConfig<S>,
        slot_duration_s: S,
        packet_size_mb: S,
    ) -> Result<TranslationResult<S>>;
}

impl<S: Scalar> IntentTranslator<S> for RuleTable {
    fn translate(
        &self,
        intent: &IntentSpec<S>,
        scenario: &ScenarioConfig<S>,
        slot_duration_s: S,
        packet_size_mb: S,
    ) -> Result<TranslationResult<S>> {
        intent.validate()?;
        scenario.validate()?;
        if !(slot_duration_s.is_finite() && slot_duration_s > S::zero()) {
            return Err(Error::InvalidIntent("slot duration must be > 0".into()));
        }
        if !(packet_size_mb.is_finite() && packet_size_mb > S::zero()) {
            return Err(Error::InvalidIntent("packet size must be > 0".into()));
        }

        let n_packets = tolerant_ceil(intent.payload_mb / packet_size_mb);
        let deadline_slots = tolerant_floor(intent.deadline_s / slot_duration_s);
        if deadline_slots == 0 {
            return Err(Error::InvalidIntent(format!(
                "deadline {} s is shorter than one {} s slot",
                intent.deadline_s, slot_duration_s
            )));
        }

        let capacity = scenario.avail_prob_ris * scenario.avail_prob_spectrum;
        let tightness = S::from_count(n_packets) / (capacity * S::from_count(deadline_slots));

        let mut eps_d = if tightness < S::lit(self.low_band_edge) {
            S::lit(self.eps_low)
        } else if tightness < S::lit(self.high_band_edge) {
            S::lit(self.eps_mid)
        } else {
            S::lit(self.eps_high)
        };
        let mut v = S::lit(self.v_floor).max(S::lit(self.v_base) * (S::one() - tightness));
        match intent.priority {
            Priority::CostSaver => v = v * S::lit(self.cost_saver_v_multiplier),
            Priority::DelayCritical => eps_d = eps_d * S::lit(self.delay_critical_eps_multiplier),
            Priority::Balanced => {}
        }

        let expected = scenario.expected_price();
        let params = ControlParams::new(v, eps_d, expected, expected)?;
        Ok(TranslationResult {
            params,
            n_packets,
            deadline_slots,
            tightness,
            feasible: tightness <= S::one(),
        })
    }
}

/// Translates with the default [`RuleTable`].
pub fn translate_intent<S: Scalar>(
    intent: &IntentSpec<S>,
    scenario: &ScenarioConfig<S>,
    slot_duration_s: S,
    packet_size_mb: S,
) -> Result<TranslationResult<S>> {
    RuleTable::default().translate(intent, scenario, slot_duration_s, packet_size_mb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMode {
    /// The whole payload is queued before slot 1.
    Bulk,
    /// Bernoulli arrivals at rate `n_packets / deadline_slots`.
    Streaming,
}

/// Scenario realizing the intent on top of `base`. Prices, availability and
/// seed come from `base`; the horizon is the deadline.
pub fn derive_scenario<S: Scalar>(
    translation: &TranslationResult<S>,
    base: &ScenarioConfig<S>,
    mode: ArrivalMode,
) -> ScenarioConfig<S> {
    let (initial_backlog, arrival_prob) = match mode {
        ArrivalMode::Bulk => (translation.n_packets, S::zero()),
        ArrivalMode::Streaming => (
            0,
            (S::from_count(translation.n_packets) / S::from_count(translation.deadline_slots))
                .min(S::one()),
        ),
    };
    ScenarioConfig {
        horizon_slots: translation.deadline_slots,
        arrival_prob,
        initial_backlog,
        ..base.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftWarning {
    pub slot: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssuranceReport {
    pub delivered_packets: u64,
    pub required_packets: u64,
    pub deadline_met: bool,
    pub reliability_met: bool,
    pub verdict: Verdict,
    pub drift_warnings: Vec<DriftWarning>,
}

pub fn assure<S: Scalar>(
    trace: &Trace<S>,
    intent: &IntentSpec<S>,
    translation: &TranslationResult<S>,
) -> Result<AssuranceReport> {
    assure_records(&trace.records, intent, translation)
}

/// Assurance over a bare record sequence, e.g. one loaded from CSV.
///
/// A packet counts as delivered in a slot with `r = 1` and a non-empty queue.
/// When the records stop before the deadline, everything up to the last
/// record is counted and `deadline_met` is false.
pub fn assure_records<S: Scalar>(
    records: &[SlotRecord<S>],
    intent: &IntentSpec<S>,
    translation: &TranslationResult<S>,
) -> Result<AssuranceReport> {
    intent.validate()?;
    let first = records.first().ok_or(Error::EmptyTrace)?;
    let initial = first.q_before - S::indicator(first.arrival);
    if initial > S::zero() && initial != S::from_count(translation.n_packets) {
        return Err(Error::InconsistentTranslation(format!(
            "trace starts with {initial} queued packets but the translation expects {}",
            translation.n_packets
        )));
    }

    let deadline = translation.deadline_slots;
    let required =
        tolerant_ceil(intent.reliability_pct * S::from_count(translation.n_packets) / S::lit(100.0));
    let window = records.len().min(deadline as usize);
    let checkpoint_every = deadline.div_ceil(10).max(1);

    let mut delivered = 0u64;
    let mut drift_warnings = Vec::new();
    for rec in &records[..window] {
        if rec.r && rec.q_before > S::zero() {
            delivered += 1;
        }
        if rec.t % checkpoint_every == 0 && rec.t < deadline {
            let projected = delivered as f64 / rec.t as f64 * deadline as f64;
            if projected < required as f64 {
                drift_warnings.push(DriftWarning {
                    slot: rec.t,
                    message: format!(
                        "projected {projected:.1} of {required} required packets by slot {deadline} \
                         ({delivered} delivered so far)"
                    ),
                });
            }
        }
    }

    let reliability_met = delivered >= required;
    Ok(AssuranceReport {
        delivered_packets: delivered,
        required_packets: required,
        deadline_met: reliability_met && records.len() as u64 >= deadline,
        reliability_met,
        verdict: if reliability_met {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        drift_warnings,
    })
}

// Slack absorbs representation error such as 1.1 / 0.1 = 11.000000000000002.
fn tolerant_ceil<S: Scalar>(x: S) -> u64 {
    let x = x.as_f64();
    (x - 1e-9 * x.abs().max(1.0)).ceil().max(0.0) as u64
}

fn tolerant_floor<S: Scalar>(x: S) -> u64 {
    let x = x.as_f64();
    (x + 1e-9 * x.abs().max(1.0)).floor().max(0.0) as u64
}
