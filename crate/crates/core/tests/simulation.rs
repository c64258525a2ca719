use leasesim::environment::realization;
use leasesim::reporting::trace_csv_string;
use leasesim::simulator::{check_records, Controller};
use leasesim::{
    run, step, ControlParams, ControlParams32, MarketObservation, PolicySpec, QueueState,
    ScenarioConfig, ScenarioConfig32,
};
use proptest::prelude::*;

fn params(v: f64, eps: f64) -> ControlParams<f64> {
    ControlParams::new(v, eps, 5.5, 5.5).unwrap()
}

fn always_available(horizon: u64, arrival_prob: f64, backlog: u64) -> ScenarioConfig<f64> {
    ScenarioConfig {
        horizon_slots: horizon,
        arrival_prob,
        avail_prob_ris: 1.0,
        avail_prob_spectrum: 1.0,
        initial_backlog: backlog,
        ..Default::default()
    }
}

fn all_policies() -> Vec<PolicySpec<f64>> {
    let mut v = PolicySpec::comparison_set();
    v.push(PolicySpec::DsfExactArgmin);
    v
}

#[test]
fn nothing_to_send_costs_nothing() {
    let scenario = ScenarioConfig {
        horizon_slots: 3,
        arrival_prob: 0.0,
        ..Default::default()
    };
    // every policy with a backlog guard
    for policy in [
        PolicySpec::Greedy,
        PolicySpec::Periodic { period: 1 },
        PolicySpec::PriceOnly { cutoff: 20.0 },
        PolicySpec::QueueThreshold { cutoff: 1.0 },
    ] {
        let trace = run(&scenario, &policy, &params(1.0, 1.0)).unwrap();
        assert_eq!(trace.total_cost(), 0.0, "{policy}");
        assert!(trace.records.iter().all(|r| !r.x_desired && !r.y_desired));
    }
}

#[test]
fn greedy_clears_single_packet_in_first_slot() {
    let scenario = always_available(10, 0.0, 1);
    let trace = run(&scenario, &PolicySpec::Greedy, &params(1.0, 1.0)).unwrap();
    let first = trace.records[0];
    assert!(first.r);
    assert_eq!(first.q_after, 0.0);
    assert_eq!(trace.total_cost(), first.price_ris + first.price_spectrum);
}

/// Independent step-through of the queue recursions and the threshold rule
/// for a market with an arrival every slot and full availability.
fn first_lease_by_hand(v: f64, eps: f64, joint_expected: f64) -> u64 {
    let (mut q, mut z) = (0.0f64, 0.0f64);
    for t in 1..1000 {
        q += 1.0;
        if q + z > v * joint_expected {
            return t;
        }
        z += eps;
    }
    unreachable!()
}

#[test]
fn dsf_first_lease_slot() {
    let expected = first_lease_by_hand(1.0, 1.0, 11.0);
    assert_eq!(expected, 7);

    let scenario = always_available(20, 1.0, 0);
    let trace = run(&scenario, &PolicySpec::Dsf, &params(1.0, 1.0)).unwrap();
    let first = trace.records.iter().find(|r| r.r).unwrap();
    assert_eq!(first.t, expected);
    assert_eq!((first.q_before, first.z_before), (7.0, 6.0));
}

#[test]
fn run_is_chained_step() {
    let scenario = ScenarioConfig::<f64> {
        horizon_slots: 500,
        initial_backlog: 4,
        ..Default::default()
    };
    let market = realization(&scenario).unwrap();
    for policy in all_policies() {
        let pr = params(3.0, 0.7);
        let trace = run(&scenario, &policy, &pr).unwrap();
        let mut state = QueueState::with_backlog(4);
        for (obs, (t, rec)) in market.iter().zip((1u64..).zip(&trace.records)) {
            let (next, stepped) = step(state, obs, t, &policy, &pr).unwrap();
            assert_eq!(&stepped, rec);
            state = next;
        }
    }
}

#[test]
fn identical_inputs_give_identical_csv() {
    let scenario = ScenarioConfig::<f64>::default();
    let a = run(&scenario, &PolicySpec::Dsf, &params(10.0, 1.0)).unwrap();
    let b = run(&scenario, &PolicySpec::Dsf, &params(10.0, 1.0)).unwrap();
    assert_eq!(trace_csv_string(&a.records), trace_csv_string(&b.records));
}

#[test]
fn invariants_hold_for_every_policy() {
    let scenario = ScenarioConfig::<f64>::default();
    for policy in all_policies() {
        for (v, eps) in [(1.0, 0.5), (10.0, 1.0), (50.0, 2.0)] {
            let trace = run(&scenario, &policy, &params(v, eps)).unwrap();
            trace.check_invariants().unwrap_or_else(|e| panic!("{policy} V={v}: {e}"));
        }
    }
}

#[test]
fn masking_only_removes_joint_leases() {
    let scenario = ScenarioConfig::<f64> {
        avail_prob_ris: 0.5,
        avail_prob_spectrum: 0.5,
        ..Default::default()
    };
    let trace = run(&scenario, &PolicySpec::Greedy, &params(1.0, 1.0)).unwrap();
    let mut masked = 0;
    for r in &trace.records {
        assert_eq!(r.x_effective, r.y_effective);
        if !(r.avail_ris && r.avail_spectrum) {
            assert!(!r.r && r.cost == 0.0);
            masked += u32::from(r.x_desired);
        }
    }
    assert!(masked > 0);
}

#[test]
fn single_precision_runs() {
    let scenario = ScenarioConfig32 {
        horizon_slots: 2000,
        ..Default::default()
    };
    let pr = ControlParams32::new(10.0, 1.0, 5.5, 5.5).unwrap();
    let trace = run(&scenario, &PolicySpec::Dsf, &pr).unwrap();
    trace.check_invariants().unwrap();
    assert!(trace.records.iter().any(|r| r.r));
}

#[test]
fn stale_records_are_detected() {
    let scenario = ScenarioConfig::<f64> {
        horizon_slots: 50,
        ..Default::default()
    };
    let mut trace = run(&scenario, &PolicySpec::Greedy, &params(1.0, 1.0)).unwrap();
    let i = trace.records.iter().position(|r| r.r).unwrap();
    trace.records[i].cost += 1.0;
    assert!(trace.check_invariants().is_err());
}

fn arb_market() -> impl Strategy<Value = Vec<MarketObservation<f64>>> {
    prop::collection::vec(
        (1.0..10.0f64, 1.0..10.0f64, any::<bool>(), any::<bool>(), any::<bool>()).prop_map(
            |(p, s, ar, asp, a)| MarketObservation {
                price_ris: p,
                price_spectrum: s,
                avail_ris: ar,
                avail_spectrum: asp,
                arrival: a,
            },
        ),
        1..200,
    )
}

proptest! {
    #[test]
    fn conservation_on_arbitrary_markets(market in arb_market(), backlog in 0u64..20,
                                         v in 0.1..30.0f64, eps in 0.1..3.0f64, freeze: bool) {
        for policy in all_policies() {
            let c = Controller::new(policy, params(v, eps)).unwrap().freeze_z_when_empty(freeze);
            let records = c.simulate(&market, backlog);
            prop_assert!(check_records(&records, backlog).is_ok());
            prop_assert!(records.iter().all(|r| r.q_after >= 0.0 && r.z_after >= 0.0));
        }
    }
}
