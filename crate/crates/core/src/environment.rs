//! Seeded market: Bernoulli arrivals, uniform leasing prices and independent
//! availability of the RIS and spectrum resources.

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_HORIZON: u64 = 5000;
pub const DEFAULT_ARRIVAL_PROB: f64 = 0.3;
pub const DEFAULT_PRICE_LOW: f64 = 1.0;
pub const DEFAULT_PRICE_HIGH: f64 = 10.0;
pub const DEFAULT_AVAIL_PROB: f64 = 0.9;
pub const DEFAULT_SEED: u64 = 1;

/// Stochastic environment of one simulation run.
///
/// Every field has a default, so a scenario file only needs the fields it
/// changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct ScenarioConfig<S: Scalar> {
    pub horizon_slots: u64,
    /// Bernoulli arrival rate per slot.
    pub arrival_prob: S,
    pub price_low: S,
    pub price_high: S,
    pub avail_prob_ris: S,
    pub avail_prob_spectrum: S,
    /// Packets already queued before slot 1.
    pub initial_backlog: u64,
    pub seed: u64,
    /// Suppress virtual-queue accrual in slots that observe an empty data queue.
    /// Off by default, which applies the virtual-queue update verbatim.
    pub freeze_z_when_empty: bool,
}

impl<S: Scalar> Default for ScenarioConfig<S> {
    fn default() -> Self {
        Self {
            horizon_slots: DEFAULT_HORIZON,
            arrival_prob: S::lit(DEFAULT_ARRIVAL_PROB),
            price_low: S::lit(DEFAULT_PRICE_LOW),
            price_high: S::lit(DEFAULT_PRICE_HIGH),
            avail_prob_ris: S::lit(DEFAULT_AVAIL_PROB),
            avail_prob_spectrum: S::lit(DEFAULT_AVAIL_PROB),
            initial_backlog: 0,
            seed: DEFAULT_SEED,
            freeze_z_when_empty: false,
        }
    }
}

impl<S: Scalar> ScenarioConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_slots == 0 {
            return Err(Error::InvalidScenario("horizon_slots must be >= 1".into()));
        }
        let probs = [
            ("arrival_prob", self.arrival_prob),
            ("avail_prob_ris", self.avail_prob_ris),
            ("avail_prob_spectrum", self.avail_prob_spectrum),
        ];
        for (name, p) in probs {
            if !(p >= S::zero() && p <= S::one()) {
                return Err(Error::InvalidScenario(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if !(self.price_low.is_finite() && self.price_high.is_finite()) {
            return Err(Error::InvalidScenario("prices must be finite".into()));
        }
        if self.price_low < S::zero() {
            return Err(Error::InvalidScenario(format!(
                "price_low must be >= 0, got {}",
                self.price_low
            )));
        }
        if self.price_low > self.price_high {
            return Err(Error::InvalidScenario(format!(
                "price_low ({}) exceeds price_high ({})",
                self.price_low, self.price_high
            )));
        }
        Ok(())
    }

    /// Non-fatal feasibility findings.
    pub fn warnings(&self) -> Vec<String> {
        let capacity = self.avail_prob_ris * self.avail_prob_spectrum;
        let mut out = Vec::new();
        if self.arrival_prob >= capacity {
            out.push(format!(
                "arrival_prob {} is not below joint availability {}; queues may be unstable",
                self.arrival_prob, capacity
            ));
        }
        out
    }

    pub fn expected_price(&self) -> S {
        expected_price(self.price_low, self.price_high)
    }

    /// Same scenario with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// One slot of market realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MarketObservation<S: Scalar> {
    pub price_ris: S,
    pub price_spectrum: S,
    pub avail_ris: bool,
    pub avail_spectrum: bool,
    pub arrival: bool,
}

impl<S: Scalar> MarketObservation<S> {
    pub fn both_available(&self) -> bool {
        self.avail_ris && self.avail_spectrum
    }

    pub fn joint_price(&self) -> S {
        self.price_ris + self.price_spectrum
    }
}

/// Draws one slot. The draw order is fixed: arrival, RIS price, spectrum
/// price, RIS availability, spectrum availability.
pub fn draw_slot<S: Scalar, R: Rng + ?Sized>(
    config: &ScenarioConfig<S>,
    rng: &mut R,
) -> Result<MarketObservation<S>> {
    let price = Uniform::new_inclusive(config.price_low, config.price_high)
        .map_err(|e| Error::InvalidScenario(format!("price range: {e}")))?;
    Ok(draw_with(config, &price, rng))
}

fn draw_with<S: Scalar, R: Rng + ?Sized>(
    config: &ScenarioConfig<S>,
    price: &Uniform<S>,
    rng: &mut R,
) -> MarketObservation<S> {
    let arrival = rng.random_bool(config.arrival_prob.as_f64());
    let price_ris = price.sample(rng);
    let price_spectrum = price.sample(rng);
    let avail_ris = rng.random_bool(config.avail_prob_ris.as_f64());
    let avail_spectrum = rng.random_bool(config.avail_prob_spectrum.as_f64());
    MarketObservation {
        price_ris,
        price_spectrum,
        avail_ris,
        avail_spectrum,
        arrival,
    }
}

/// Deterministic market stream owned by a single run.
pub struct MarketGenerator<S: Scalar> {
    config: ScenarioConfig<S>,
    price: Uniform<S>,
    rng: ChaCha8Rng,
}

impl<S: Scalar> MarketGenerator<S> {
    pub fn new(config: &ScenarioConfig<S>) -> Result<Self> {
        config.validate()?;
        let price = Uniform::new_inclusive(config.price_low, config.price_high)
            .map_err(|e| Error::InvalidScenario(format!("price range: {e}")))?;
        Ok(Self {
            config: config.clone(),
            price,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    pub fn draw(&mut self) -> MarketObservation<S> {
        draw_with(&self.config, &self.price, &mut self.rng)
    }
}

impl<S: Scalar> Iterator for MarketGenerator<S> {
    type Item = MarketObservation<S>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.draw())
    }
}

/// The first `horizon_slots` observations of the scenario's market.
pub fn realization<S: Scalar>(config: &ScenarioConfig<S>) -> Result<Vec<MarketObservation<S>>> {
    let horizon = usize::try_from(config.horizon_slots)
        .map_err(|_| Error::InvalidScenario("horizon_slots too large".into()))?;
    Ok(MarketGenerator::new(config)?.take(horizon).collect())
}

/// Mean of `Uniform[low, high]`.
pub fn expected_price<S: Scalar>(price_low: S, price_high: S) -> S {
    (price_low + price_high) / S::lit(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct EmpiricalMeans<S: Scalar> {
    pub mean_price_ris: S,
    pub mean_price_spectrum: S,
    pub mean_avail_ris: S,
    pub mean_avail_spectrum: S,
    pub mean_arrival: S,
}

/// Sample means over `n_slots` draws from the scenario's generator.
pub fn empirical_means<S: Scalar>(config: &ScenarioConfig<S>, n_slots: u64) -> Result<EmpiricalMeans<S>> {
    if n_slots == 0 {
        return Err(Error::InvalidScenario("n_slots must be >= 1".into()));
    }
    let mut sums = [0.0f64; 5];
    for obs in MarketGenerator::new(config)?.take(n_slots as usize) {
        sums[0] += obs.price_ris.as_f64();
        sums[1] += obs.price_spectrum.as_f64();
        sums[2] += f64::from(u8::from(obs.avail_ris));
        sums[3] += f64::from(u8::from(obs.avail_spectrum));
        sums[4] += f64::from(u8::from(obs.arrival));
    }
    let n = n_slots as f64;
    let mean = |i: usize| S::lit(sums[i] / n);
    Ok(EmpiricalMeans {
        mean_price_ris: mean(0),
        mean_price_spectrum: mean(1),
        mean_avail_ris: mean(2),
        mean_avail_spectrum: mean(3),
        mean_arrival: mean(4),
    })
}

/// Seed for run `index` derived from `base`: the splitmix64 finalizer applied
/// to `base + index * 0x9E3779B97F4A7C15` (wrapping).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut x = base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
