//! Run metrics, parameter sweeps, policy comparisons and file formats.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::ControlParams;
use crate::environment::{derive_seed, realization, MarketObservation, ScenarioConfig};
use crate::error::{Error, Result};
use crate::policy::PolicySpec;
use crate::scalar::Scalar;
use crate::simulator::{run_with_realization, SlotRecord, Trace};

pub const TRACE_COLUMNS: [&str; 16] = [
    "t",
    "q_before",
    "z_before",
    "arrival",
    "avail_ris",
    "avail_spectrum",
    "price_ris",
    "price_spectrum",
    "x_desired",
    "y_desired",
    "x_effective",
    "y_effective",
    "r",
    "cost",
    "q_after",
    "z_after",
];

pub const DEFAULT_V_GRID: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
pub const DEFAULT_EPS_GRID: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunSummary<S: Scalar> {
    pub accumulated_cost: S,
    pub average_queue: S,
    pub average_virtual_queue: S,
    pub lease_count: u64,
    pub final_backlog: S,
    pub cumulative_average_cost_final: S,
}

pub fn summarize<S: Scalar>(trace: &Trace<S>) -> Result<RunSummary<S>> {
    summarize_records(&trace.records)
}

pub fn summarize_records<S: Scalar>(records: &[SlotRecord<S>]) -> Result<RunSummary<S>> {
    let last = records.last().ok_or(Error::EmptyTrace)?;
    let n = S::from_count(records.len() as u64);
    let (cost, q, z) = records.iter().fold(
        (S::zero(), S::zero(), S::zero()),
        |(c, q, z), r| (c + r.cost, q + r.q_after, z + r.z_after),
    );
    Ok(RunSummary {
        accumulated_cost: cost,
        average_queue: q / n,
        average_virtual_queue: z / n,
        lease_count: records.iter().filter(|r| r.r).count() as u64,
        final_backlog: last.q_after,
        cumulative_average_cost_final: cost / n,
    })
}

/// Running mean of realized cost: element `t-1` is `(1/t) * sum_{k<=t} cost(k)`.
pub fn cumulative_average_cost_series<S: Scalar>(trace: &Trace<S>) -> Vec<S> {
    let mut total = S::zero();
    trace
        .records
        .iter()
        .zip(1u64..)
        .map(|(r, t)| {
            total = total + r.cost;
            total / S::from_count(t)
        })
        .collect()
}

/// Provenance block embedded in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ReportHeader<S: Scalar> {
    pub tool: String,
    pub version: String,
    pub scenario: ScenarioConfig<S>,
    pub scenario_fingerprint: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub policy: Option<PolicySpec<S>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<ControlParams<S>>,
}

impl<S: Scalar> ReportHeader<S> {
    pub fn new(scenario: &ScenarioConfig<S>) -> Self {
        Self {
            tool: "leasesim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario: scenario.clone(),
            scenario_fingerprint: scenario_fingerprint(scenario),
            seed: scenario.seed,
            policy: None,
            params: None,
        }
    }

    pub fn with_run(mut self, policy: &PolicySpec<S>, params: &ControlParams<S>) -> Self {
        self.policy = Some(*policy);
        self.params = Some(*params);
        self
    }
}

/// First 16 hex digits of SHA-256 over the scenario's JSON form.
pub fn scenario_fingerprint<S: Scalar>(scenario: &ScenarioConfig<S>) -> String {
    let json = serde_json::to_vec(scenario).expect("scenario serializes");
    Sha256::digest(&json)[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepRow<S: Scalar> {
    pub v: S,
    pub eps_d: S,
    pub seed: u64,
    pub summary: RunSummary<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepTable<S: Scalar> {
    pub base_seed: u64,
    pub scenario_fingerprint: String,
    pub common_random_numbers: bool,
    pub policy: PolicySpec<S>,
    /// V-major: row `i * eps_grid.len() + j` holds `(v_grid[i], eps_grid[j])`.
    pub rows: Vec<SweepRow<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    /// Every cell sees the scenario's own realization. When off, cell `i` is
    /// seeded with `derive_seed(base_seed, i)`.
    pub common_random_numbers: bool,
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            common_random_numbers: true,
            parallel: true,
        }
    }
}

/// One run per `(v, eps_d)` cell; returns the table and the traces in row order.
pub fn sweep_with_traces<S: Scalar>(
    scenario: &ScenarioConfig<S>,
    policy: &PolicySpec<S>,
    v_grid: &[S],
    eps_grid: &[S],
    options: SweepOptions,
) -> Result<(SweepTable<S>, Vec<Trace<S>>)> {
    if v_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidParams("sweep grids must be non-empty".into()));
    }
    scenario.validate()?;
    policy.validate()?;
    let expected = scenario.expected_price();
    let cells: Vec<(u64, S, S)> = v_grid
        .iter()
        .flat_map(|&v| eps_grid.iter().map(move |&e| (v, e)))
        .zip(0u64..)
        .map(|((v, e), i)| (i, v, e))
        .collect();
    for &(_, v, e) in &cells {
        ControlParams::new(v, e, expected, expected)?;
    }

    let shared = if options.common_random_numbers {
        Some(realization(scenario)?)
    } else {
        None
    };
    let run_cell = |&(index, v, eps_d): &(u64, S, S)| -> Result<Trace<S>> {
        let params = ControlParams::new(v, eps_d, expected, expected)?;
        match &shared {
            Some(obs) => run_with_realization(scenario, obs, policy, &params),
            None => {
                let cell_scenario = scenario.with_seed(derive_seed(scenario.seed, index));
                let obs = realization(&cell_scenario)?;
                run_with_realization(&cell_scenario, &obs, policy, &params)
            }
        }
    };
    // Collection is positional in both branches, so row order never depends
    // on completion order.
    let traces: Vec<Trace<S>> = if options.parallel {
        cells.par_iter().map(run_cell).collect::<Result<_>>()?
    } else {
        cells.iter().map(run_cell).collect::<Result<_>>()?
    };

    let rows = traces
        .iter()
        .map(|trace| {
            Ok(SweepRow {
                v: trace.params.v,
                eps_d: trace.params.eps_d,
                seed: trace.scenario.seed,
                summary: summarize(trace)?,
            })
        })
        .collect::<Result<_>>()?;
    let table = SweepTable {
        base_seed: scenario.seed,
        scenario_fingerprint: scenario_fingerprint(scenario),
        common_random_numbers: options.common_random_numbers,
        policy: *policy,
        rows,
    };
    Ok((table, traces))
}

pub fn sweep<S: Scalar>(
    scenario: &ScenarioConfig<S>,
    policy: &PolicySpec<S>,
    v_grid: &[S],
    eps_grid: &[S],
    options: SweepOptions,
) -> Result<SweepTable<S>> {
    sweep_with_traces(scenario, policy, v_grid, eps_grid, options).map(|(table, _)| table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ComparisonEntry<S: Scalar> {
    pub policy: PolicySpec<S>,
    pub summary: RunSummary<S>,
    pub series: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct RankEntry<S: Scalar> {
    pub rank: usize,
    pub policy: PolicySpec<S>,
    pub cumulative_average_cost_final: S,
    pub accumulated_cost: S,
    pub average_queue: S,
    pub final_backlog: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<S: Scalar> {
    pub scenario_fingerprint: String,
    pub entries: Vec<ComparisonEntry<S>>,
    pub traces: Vec<Trace<S>>,
}

impl<S: Scalar> Comparison<S> {
    /// Policies ordered by final cumulative average cost, cheapest first.
    /// Equal costs keep input order.
    pub fn ranking(&self) -> Vec<RankEntry<S>> {
        let mut order: Vec<&ComparisonEntry<S>> = self.entries.iter().collect();
        order.sort_by(|a, b| {
            a.summary
                .cumulative_average_cost_final
                .partial_cmp(&b.summary.cumulative_average_cost_final)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        order
            .into_iter()
            .enumerate()
            .map(|(i, e)| RankEntry {
                rank: i + 1,
                policy: e.policy,
                cumulative_average_cost_final: e.summary.cumulative_average_cost_final,
                accumulated_cost: e.summary.accumulated_cost,
                average_queue: e.summary.average_queue,
                final_backlog: e.summary.final_backlog,
            })
            .collect()
    }

    pub fn entry(&self, policy: &PolicySpec<S>) -> Option<&ComparisonEntry<S>> {
        self.entries.iter().find(|e| &e.policy == policy)
    }
}

/// Runs every policy against the same realization of `scenario`.
pub fn compare<S: Scalar>(
    scenario: &ScenarioConfig<S>,
    policies: &[PolicySpec<S>],
    params: &ControlParams<S>,
) -> Result<Comparison<S>> {
    if policies.is_empty() {
        return Err(Error::InvalidParams("compare needs at least one policy".into()));
    }
    scenario.validate()?;
    let observations = realization(scenario)?;
    let traces: Vec<Trace<S>> = policies
        .par_iter()
        .map(|p| run_with_realization(scenario, &observations, p, params))
        .collect::<Result<_>>()?;
    let entries = traces
        .iter()
        .map(|t| {
            Ok(ComparisonEntry {
                policy: t.policy,
                summary: summarize(t)?,
                series: cumulative_average_cost_series(t),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Comparison {
        scenario_fingerprint: scenario_fingerprint(scenario),
        entries,
        traces,
    })
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes records in the trace CSV schema. Reals use the shortest
/// representation that parses back to the same value.
pub fn write_trace_csv<S: Scalar, W: Write>(records: &[SlotRecord<S>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.q_before.to_string(),
            r.z_before.to_string(),
            flag(r.arrival).into(),
            flag(r.avail_ris).into(),
            flag(r.avail_spectrum).into(),
            r.price_ris.to_string(),
            r.price_spectrum.to_string(),
            flag(r.x_desired).into(),
            flag(r.y_desired).into(),
            flag(r.x_effective).into(),
            flag(r.y_effective).into(),
            flag(r.r).into(),
            r.cost.to_string(),
            r.q_after.to_string(),
            r.z_after.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_csv_string<S: Scalar>(records: &[SlotRecord<S>]) -> String {
    let mut buf = Vec::new();
    write_trace_csv(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Column lookup by header name.
struct Columns {
    headers: csv::StringRecord,
}

impl Columns {
    fn index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MalformedTrace(format!("missing column `{name}`")))
    }
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<T> {
    let raw = row.get(idx).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| Error::MalformedTrace(format!("row {line}: bad `{name}` value `{raw}`")))
}

fn parse_flag(row: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<bool> {
    match row.get(idx).map(str::trim) {
        Some("0") => Ok(false),
        Some("1") => Ok(true),
        other => Err(Error::MalformedTrace(format!(
            "row {line}: `{name}` must be 0 or 1, got {other:?}"
        ))),
    }
}

/// Reads a full trace CSV back into records.
pub fn read_trace_csv<S: Scalar, R: Read>(input: R) -> Result<Vec<SlotRecord<S>>> {
    let mut rdr = csv::Reader::from_reader(input);
    let cols = Columns {
        headers: rdr.headers()?.clone(),
    };
    let idx: Vec<usize> = TRACE_COLUMNS
        .iter()
        .map(|c| cols.index(c))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let line = line + 2;
        let real = |i: usize| parse_field::<S>(&row, idx[i], TRACE_COLUMNS[i], line);
        let bit = |i: usize| parse_flag(&row, idx[i], TRACE_COLUMNS[i], line);
        out.push(SlotRecord {
            t: parse_field(&row, idx[0], "t", line)?,
            q_before: real(1)?,
            z_before: real(2)?,
            arrival: bit(3)?,
            avail_ris: bit(4)?,
            avail_spectrum: bit(5)?,
            price_ris: real(6)?,
            price_spectrum: real(7)?,
            x_desired: bit(8)?,
            y_desired: bit(9)?,
            x_effective: bit(10)?,
            y_effective: bit(11)?,
            r: bit(12)?,
            cost: real(13)?,
            q_after: real(14)?,
            z_after: real(15)?,
        });
    }
    Ok(out)
}

/// Reads a market realization from any CSV carrying the columns
/// `t, arrival, avail_ris, avail_spectrum, price_ris, price_spectrum`
/// (a full trace CSV qualifies). Rows must be ordered by `t` from 1.
pub fn read_realization_csv<S: Scalar, R: Read>(input: R) -> Result<Vec<MarketObservation<S>>> {
    let mut rdr = csv::Reader::from_reader(input);
    let cols = Columns {
        headers: rdr.headers()?.clone(),
    };
    let [t, arrival, avail_ris, avail_spectrum, price_ris, price_spectrum] = [
        "t",
        "arrival",
        "avail_ris",
        "avail_spectrum",
        "price_ris",
        "price_spectrum",
    ]
    .map(|c| cols.index(c));
    let (t, arrival, avail_ris, avail_spectrum, price_ris, price_spectrum) =
        (t?, arrival?, avail_ris?, avail_spectrum?, price_ris?, price_spectrum?);

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let slot: u64 = parse_field(&row, t, "t", line)?;
        if slot != i as u64 + 1 {
            return Err(Error::MalformedTrace(format!(
                "row {line}: expected t = {}, got {slot}",
                i + 1
            )));
        }
        out.push(MarketObservation {
            price_ris: parse_field(&row, price_ris, "price_ris", line)?,
            price_spectrum: parse_field(&row, price_spectrum, "price_spectrum", line)?,
            avail_ris: parse_flag(&row, avail_ris, "avail_ris", line)?,
            avail_spectrum: parse_flag(&row, avail_spectrum, "avail_spectrum", line)?,
            arrival: parse_flag(&row, arrival, "arrival", line)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: u64, cost: f64, q_after: f64) -> SlotRecord<f64> {
        SlotRecord {
            t,
            q_before: 0.0,
            z_before: 0.0,
            arrival: false,
            avail_ris: true,
            avail_spectrum: true,
            price_ris: cost / 2.0,
            price_spectrum: cost / 2.0,
            x_desired: cost > 0.0,
            y_desired: cost > 0.0,
            x_effective: cost > 0.0,
            y_effective: cost > 0.0,
            r: cost > 0.0,
            cost,
            q_after,
            z_after: 0.0,
        }
    }

    fn trace(records: Vec<SlotRecord<f64>>) -> Trace<f64> {
        Trace {
            scenario: ScenarioConfig {
                horizon_slots: records.len() as u64,
                ..Default::default()
            },
            policy: PolicySpec::Dsf,
            params: ControlParams::new(1.0, 1.0, 5.5, 5.5).unwrap(),
            records,
        }
    }

    #[test]
    fn summary_examples() {
        let t = trace(vec![record(1, 7.0, 1.0), record(2, 0.0, 2.0), record(3, 5.0, 0.0)]);
        let s = summarize(&t).unwrap();
        assert_eq!(s.accumulated_cost, 12.0);
        assert_eq!(s.average_queue, 1.0);
        assert_eq!(s.lease_count, 2);
        assert_eq!(s.final_backlog, 0.0);
        assert_eq!(s.cumulative_average_cost_final, 4.0);

        let zeros = summarize(&trace((1..=4).map(|t| record(t, 0.0, 0.0)).collect())).unwrap();
        assert_eq!(zeros.accumulated_cost, 0.0);
        assert_eq!(zeros.average_queue, 0.0);
        assert_eq!(zeros.average_virtual_queue, 0.0);
        assert_eq!(zeros.lease_count, 0);

        let one = summarize(&trace(vec![record(1, 3.0, 4.0)])).unwrap();
        assert_eq!(one.accumulated_cost, 3.0);
        assert_eq!(one.average_queue, 4.0);

        assert!(matches!(summarize(&trace(vec![])), Err(Error::EmptyTrace)));
    }

    #[test]
    fn series_examples() {
        let t = trace(vec![record(1, 7.0, 0.0), record(2, 0.0, 0.0), record(3, 5.0, 0.0)]);
        assert_eq!(cumulative_average_cost_series(&t), vec![7.0, 3.5, 4.0]);
        let z = trace(vec![record(1, 0.0, 0.0), record(2, 0.0, 0.0)]);
        assert_eq!(cumulative_average_cost_series(&z), vec![0.0, 0.0]);
        assert_eq!(cumulative_average_cost_series(&trace(vec![record(1, 2.0, 0.0)])), vec![2.0]);
    }

    #[test]
    fn csv_header_order() {
        let csv = trace_csv_string(&[record(1, 7.0, 1.0)]);
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "t,q_before,z_before,arrival,avail_ris,avail_spectrum,price_ris,price_spectrum,\
             x_desired,y_desired,x_effective,y_effective,r,cost,q_after,z_after"
        );
        assert_eq!(csv.lines().nth(1).unwrap(), "1,0,0,0,1,1,3.5,3.5,1,1,1,1,1,7,1,0");
    }

    #[test]
    fn csv_reals_round_trip_exactly() {
        let mut r = record(1, 0.0, 0.0);
        r.price_ris = 0.1 + 0.2;
        r.price_spectrum = std::f64::consts::PI;
        r.z_after = 1e-17;
        let back: Vec<SlotRecord<f64>> = read_trace_csv(trace_csv_string(&[r]).as_bytes()).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn realization_from_subset_columns() {
        let csv = "t,arrival,avail_ris,avail_spectrum,price_ris,price_spectrum\n1,0,1,1,2,3\n2,1,0,1,9,9\n";
        let real: Vec<MarketObservation<f64>> = read_realization_csv(csv.as_bytes()).unwrap();
        assert_eq!(real.len(), 2);
        assert!(real[1].arrival && !real[1].avail_ris);
        assert_eq!(real[0].joint_price(), 5.0);

        let missing = "t,arrival\n1,0\n";
        assert!(read_realization_csv::<f64, _>(missing.as_bytes()).is_err());
        let gap = "t,arrival,avail_ris,avail_spectrum,price_ris,price_spectrum\n2,0,1,1,2,3\n";
        assert!(read_realization_csv::<f64, _>(gap.as_bytes()).is_err());
        let bad_flag = "t,arrival,avail_ris,avail_spectrum,price_ris,price_spectrum\n1,2,1,1,2,3\n";
        assert!(read_realization_csv::<f64, _>(bad_flag.as_bytes()).is_err());
    }

    #[test]
    fn fingerprint_tracks_scenario() {
        let a = ScenarioConfig::<f64>::default();
        assert_eq!(scenario_fingerprint(&a), scenario_fingerprint(&a.clone()));
        assert_ne!(scenario_fingerprint(&a), scenario_fingerprint(&a.with_seed(2)));
        assert_eq!(scenario_fingerprint(&a).len(), 16);
    }
}
