use leasesim::environment::realization;
use leasesim::simulator::Controller;
use leasesim::{offline_min_cost, ControlParams, MarketObservation, PolicySpec, ScenarioConfig};
use proptest::prelude::*;

/// Dynamic program over (slot, backlog): cheapest cost to reach an empty
/// queue at the deadline. Independent of the enumeration in the library.
fn dp_min_cost(market: &[MarketObservation<f64>], backlog: u64, deadline: usize) -> Option<f64> {
    let cap = backlog as usize + deadline + 1;
    let mut best = vec![f64::INFINITY; cap];
    best[backlog as usize] = 0.0;
    for obs in &market[..deadline] {
        let mut next = vec![f64::INFINITY; cap];
        for (q, &c) in best.iter().enumerate() {
            if c.is_infinite() {
                continue;
            }
            let q = q + usize::from(obs.arrival);
            next[q] = next[q].min(c);
            if obs.avail_ris && obs.avail_spectrum {
                let served = q.saturating_sub(1);
                next[served] = next[served].min(c + obs.price_ris + obs.price_spectrum);
            }
        }
        best = next;
    }
    best[0].is_finite().then_some(best[0])
}

fn arb_market(len: usize) -> impl Strategy<Value = Vec<MarketObservation<f64>>> {
    prop::collection::vec(
        (1u8..=10, 1u8..=10, prop::bool::weighted(0.8), prop::bool::weighted(0.8), prop::bool::weighted(0.3))
            .prop_map(|(p, s, ar, asp, a)| MarketObservation {
                price_ris: f64::from(p),
                price_spectrum: f64::from(s),
                avail_ris: ar,
                avail_spectrum: asp,
                arrival: a,
            }),
        len,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_agrees_with_dynamic_program(market in arb_market(10), backlog in 0u64..5) {
        let sol = offline_min_cost(&market, backlog, 10).unwrap();
        let dp = dp_min_cost(&market, backlog, 10);
        prop_assert_eq!(sol.min_total_cost, dp);
        prop_assert_eq!(sol.feasible, dp.is_some());
        if let Some(cost) = sol.min_total_cost {
            let replayed: f64 = market.iter().zip(&sol.decisions)
                .filter(|(_, &d)| d)
                .map(|(o, _)| o.price_ris + o.price_spectrum)
                .sum();
            prop_assert_eq!(replayed, cost);
        }
    }
}

#[test]
fn online_policies_never_beat_the_oracle() {
    let mut checked = 0;
    for seed in 0..60u64 {
        let scenario = ScenarioConfig::<f64> {
            horizon_slots: 12,
            seed,
            ..Default::default()
        };
        let market = realization(&scenario).unwrap();
        let backlog = 1 + seed % 3;
        let oracle = offline_min_cost(&market, backlog, 12).unwrap();
        let mut policies = PolicySpec::comparison_set();
        policies.push(PolicySpec::DsfExactArgmin);
        for policy in policies {
            for v in [0.05, 0.2, 1.0] {
                let params = ControlParams::new(v, 1.0, 5.5, 5.5).unwrap();
                let records = Controller::new(policy, params).unwrap().simulate(&market, backlog);
                if records.last().unwrap().q_after == 0.0 {
                    let cost: f64 = records.iter().map(|r| r.cost).sum();
                    let bound = oracle.min_total_cost.expect("cleared online, so feasible offline");
                    assert!(cost >= bound, "{policy} seed {seed}: {cost} < {bound}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 50, "only {checked} clearing runs");
}
