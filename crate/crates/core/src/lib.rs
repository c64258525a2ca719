//! Slotted simulator and policy library for leasing RIS and spectrum
//! resources under time-varying prices and availability.
//!
//! A data queue `Q` and a virtual delay queue `Z` drive a drift-plus-penalty
//! controller that leases both resources only when congestion exceeds a
//! cost-weighted threshold. Five baseline policies, an offline oracle, an
//! intent translator and an assurance monitor surround it.
//!
//! ```text
//! intent ──translate──▶ ControlParams ──┐
//!                                        ▼
//! ScenarioConfig ──▶ MarketGenerator ──▶ simulator::run ──▶ Trace ──▶ reporting / assure
//!                                        ▲
//!                           PolicySpec ──┘
//! ```
//!
//! All numeric types are generic over [`Scalar`] (`f32` or `f64`). The
//! aliases below fix the scalar for the common cases.

pub mod dynamics;
pub mod environment;
pub mod error;
pub mod intent;
pub mod oracle;
pub mod policy;
pub mod reporting;
pub mod scalar;
pub mod simulator;

pub use dynamics::{
    advance_data_queue, advance_virtual_queue, departure, lyapunov, slot_cost, ControlParams,
    LeaseDecision, QueueState, SlotCost,
};
pub use environment::{
    draw_slot, empirical_means, expected_price, realization, MarketGenerator, MarketObservation,
    ScenarioConfig,
};
pub use error::{Error, Result};
pub use intent::{
    assure, assure_records, derive_scenario, translate_intent, ArrivalMode, AssuranceReport,
    IntentSpec, Priority, RuleTable, TranslationResult, Verdict,
};
pub use oracle::{offline_min_cost, OracleSolution};
pub use policy::{
    decide, dsf_decide, dsf_decide_exact_argmin, dsf_deferral_objective, dsf_objective, PolicyInput, PolicyKind, PolicySpec,
};
pub use reporting::{
    compare, cumulative_average_cost_series, summarize, sweep, Comparison, ReportHeader,
    RunSummary, SweepOptions, SweepTable,
};
pub use scalar::Scalar;
pub use simulator::{run, step, Controller, SlotRecord, Trace};

pub type QueueState64 = QueueState<f64>;
pub type ControlParams64 = ControlParams<f64>;
pub type ScenarioConfig64 = ScenarioConfig<f64>;
pub type MarketObservation64 = MarketObservation<f64>;
pub type PolicySpec64 = PolicySpec<f64>;
pub type SlotRecord64 = SlotRecord<f64>;
pub type Trace64 = Trace<f64>;
pub type RunSummary64 = RunSummary<f64>;
pub type SweepTable64 = SweepTable<f64>;
pub type Comparison64 = Comparison<f64>;
pub type IntentSpec64 = IntentSpec<f64>;
pub type TranslationResult64 = TranslationResult<f64>;
pub type OracleSolution64 = OracleSolution<f64>;

pub type QueueState32 = QueueState<f32>;
pub type ControlParams32 = ControlParams<f32>;
pub type ScenarioConfig32 = ScenarioConfig<f32>;
pub type PolicySpec32 = PolicySpec<f32>;
pub type Trace32 = Trace<f32>;
