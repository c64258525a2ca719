//! `leasesim` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 assurance failure.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use leasesim::intent::{DEFAULT_PACKET_SIZE_MB, DEFAULT_SLOT_DURATION_S};
use leasesim::oracle::MAX_DEADLINE;
use leasesim::reporting::{read_realization_csv, read_trace_csv, write_trace_csv};
use leasesim::{
    assure_records, compare, derive_scenario, offline_min_cost, summarize, sweep, translate_intent,
    ArrivalMode, ControlParams, IntentSpec, PolicySpec, ReportHeader, RuleTable, ScenarioConfig,
    SweepOptions, TranslationResult, Verdict,
};
use serde::Serialize;

type Real = f64;

const POLICY_HELP: &str = "Policy strings are `name` or `name:param`:\n  \
    dsf                      drift-plus-penalty threshold rule\n  \
    dsf_exact_argmin         per-slot argmin with expected prices\n  \
    greedy                   lease whenever Q > 0\n  \
    myopic                   per-slot argmin with realized prices\n  \
    periodic:<k>             lease every k-th slot when Q > 0\n  \
    price_only:<cutoff>      lease when p + s <= cutoff and Q > 0\n  \
    queue_threshold:<cutoff> lease when Q >= cutoff\n\n\
    Exit codes: 0 success, 1 usage or configuration error, 2 assurance failure.";

#[derive(Parser, Debug)]
#[command(name = "leasesim", version, about = "Cost-aware joint RIS and spectrum leasing simulator", after_help = POLICY_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one policy and write the trace CSV plus `<stem>.summary.json`.
    Run {
        /// Scenario JSON; built-in defaults when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "dsf")]
        policy: String,
        #[arg(long, default_value_t = 10.0)]
        v: Real,
        #[arg(long, default_value_t = 1.0)]
        eps: Real,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Grid of (V, eps) runs; writes a JSON table and `<stem>.csv` long form.
    Sweep {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "dsf")]
        policy: String,
        /// Comma-separated V grid.
        #[arg(long, default_value = "1,2,5,10,20,50")]
        v: String,
        /// Comma-separated eps grid.
        #[arg(long, default_value = "0.5,1,2")]
        eps: String,
        /// Give every cell its own derived seed instead of the shared realization.
        #[arg(long)]
        independent_seeds: bool,
        #[arg(long, default_value = "sweep.json")]
        out: PathBuf,
    },
    /// Run several policies on one realization; writes the series CSV and `<stem>.ranking.json`.
    Compare {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Comma-separated policy strings.
        #[arg(long, default_value = "dsf,greedy,periodic:2,price_only:8,queue_threshold:10,myopic")]
        policies: String,
        #[arg(long, default_value_t = 10.0)]
        v: Real,
        #[arg(long, default_value_t = 1.0)]
        eps: Real,
        #[arg(long, default_value = "compare.csv")]
        out: PathBuf,
    },
    /// Translate an intent JSON into control parameters.
    Intent {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Translation JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SLOT_DURATION_S)]
        slot_duration: Real,
        #[arg(long, default_value_t = DEFAULT_PACKET_SIZE_MB)]
        packet_size: Real,
        /// Also write the scenario that realizes the intent.
        #[arg(long)]
        scenario_out: Option<PathBuf>,
        /// Derived scenario streams packets instead of queueing them up front.
        #[arg(long)]
        streaming: bool,
    },
    /// Check a trace against an intent. Exit 2 when the intent is not met.
    Assure {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        intent: PathBuf,
        #[arg(long)]
        translation: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Offline minimum cost over a realization CSV (deadline <= 16).
    Oracle {
        #[arg(long)]
        realization: PathBuf,
        #[arg(long)]
        initial_backlog: u64,
        #[arg(long)]
        deadline: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { scenario, policy, v, eps, seed, out } => {
            cmd_run(scenario.as_deref(), &policy, v, eps, seed, &out)?
        }
        Command::Sweep { scenario, policy, v, eps, independent_seeds, out } => {
            cmd_sweep(scenario.as_deref(), &policy, &v, &eps, !independent_seeds, &out)?
        }
        Command::Compare { scenario, policies, v, eps, out } => {
            cmd_compare(scenario.as_deref(), &policies, v, eps, &out)?
        }
        Command::Intent { file, scenario, out, slot_duration, packet_size, scenario_out, streaming } => {
            let mode = if streaming { ArrivalMode::Streaming } else { ArrivalMode::Bulk };
            cmd_intent(&file, scenario.as_deref(), out.as_deref(), slot_duration, packet_size, scenario_out.as_deref(), mode)?
        }
        Command::Assure { trace, intent, translation, out } => {
            return cmd_assure(&trace, &intent, &translation, out.as_deref());
        }
        Command::Oracle { realization, initial_backlog, deadline, out } => {
            cmd_oracle(&realization, initial_backlog, deadline, out.as_deref())?
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_scenario(path: Option<&Path>) -> Result<ScenarioConfig<Real>> {
    let scenario: ScenarioConfig<Real> = match path {
        None => ScenarioConfig::default(),
        Some(p) => read_json(p).with_context(|| format!("scenario {}", p.display()))?,
    };
    scenario.validate()?;
    for w in scenario.warnings() {
        log::warn!("{w}");
    }
    Ok(scenario)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("cannot parse {}", path.display()))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot write {}", path.display()))?))
}

/// `dir/stem.ext` becomes `dir/stem.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn parse_policy(s: &str) -> Result<PolicySpec<Real>> {
    s.trim().parse().map_err(|e| anyhow!("{e}"))
}

fn parse_list(flag: &str, s: &str) -> Result<Vec<Real>> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            if item.is_empty() {
                bail!("--{flag}: empty entry in `{s}`");
            }
            item.parse::<Real>().with_context(|| format!("--{flag}: `{item}` is not a number"))
        })
        .collect()
}

#[derive(Serialize)]
struct RunReport<'a> {
    header: ReportHeader<Real>,
    summary: &'a leasesim::RunSummary<Real>,
}

fn cmd_run(scenario: Option<&Path>, policy: &str, v: Real, eps: Real, seed: Option<u64>, out: &Path) -> Result<()> {
    let policy = parse_policy(policy)?;
    let mut scenario = load_scenario(scenario)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let expected = scenario.expected_price();
    let params = ControlParams::new(v, eps, expected, expected)?;
    let trace = leasesim::run(&scenario, &policy, &params)?;
    let summary = summarize(&trace)?;

    let mut w = create(out)?;
    write_trace_csv(&trace.records, &mut w)?;
    w.flush()?;
    let header = ReportHeader::new(&scenario).with_run(&policy, &params);
    write_json(Some(&sibling(out, "summary.json")), &RunReport { header, summary: &summary })
}

#[derive(Serialize)]
struct SweepReport<'a> {
    header: ReportHeader<Real>,
    v_grid: &'a [Real],
    eps_grid: &'a [Real],
    table: &'a leasesim::SweepTable<Real>,
}

fn cmd_sweep(scenario: Option<&Path>, policy: &str, v: &str, eps: &str, crn: bool, out: &Path) -> Result<()> {
    let policy = parse_policy(policy)?;
    let v_grid = parse_list("v", v)?;
    let eps_grid = parse_list("eps", eps)?;
    let scenario = load_scenario(scenario)?;
    let options = SweepOptions { common_random_numbers: crn, parallel: true };
    let table = sweep(&scenario, &policy, &v_grid, &eps_grid, options)?;

    let mut w = create(&sibling(out, "csv"))?;
    writeln!(
        w,
        "policy,v,eps_d,seed,accumulated_cost,cumulative_average_cost_final,average_queue,average_virtual_queue,lease_count,final_backlog"
    )?;
    for row in &table.rows {
        let s = &row.summary;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            table.policy, row.v, row.eps_d, row.seed, s.accumulated_cost, s.cumulative_average_cost_final,
            s.average_queue, s.average_virtual_queue, s.lease_count, s.final_backlog
        )?;
    }
    w.flush()?;

    let header = ReportHeader::new(&scenario);
    write_json(Some(out), &SweepReport { header, v_grid: &v_grid, eps_grid: &eps_grid, table: &table })
}

#[derive(Serialize)]
struct RankingReport<'a> {
    header: ReportHeader<Real>,
    params: ControlParams<Real>,
    ranking: Vec<leasesim::reporting::RankEntry<Real>>,
    summaries: Vec<(&'a PolicySpec<Real>, &'a leasesim::RunSummary<Real>)>,
}

fn cmd_compare(scenario: Option<&Path>, policies: &str, v: Real, eps: Real, out: &Path) -> Result<()> {
    let policies: Vec<PolicySpec<Real>> = policies.split(',').map(parse_policy).collect::<Result<_>>()?;
    let scenario = load_scenario(scenario)?;
    let expected = scenario.expected_price();
    let params = ControlParams::new(v, eps, expected, expected)?;
    let cmp = compare(&scenario, &policies, &params)?;

    let mut w = create(out)?;
    write!(w, "t")?;
    for e in &cmp.entries {
        write!(w, ",{}", e.policy)?;
    }
    writeln!(w)?;
    for t in 0..scenario.horizon_slots as usize {
        write!(w, "{}", t + 1)?;
        for e in &cmp.entries {
            write!(w, ",{}", e.series[t])?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    let report = RankingReport {
        header: ReportHeader::new(&scenario),
        params,
        ranking: cmp.ranking(),
        summaries: cmp.entries.iter().map(|e| (&e.policy, &e.summary)).collect(),
    };
    for r in &report.ranking {
        println!("{:>2}  {:<20} {:.4}", r.rank, r.policy.to_string(), r.cumulative_average_cost_final);
    }
    write_json(Some(&sibling(out, "ranking.json")), &report)
}

#[derive(Serialize)]
struct TranslationHeader {
    tool: &'static str,
    version: &'static str,
    slot_duration_s: Real,
    packet_size_mb: Real,
    rule_table: RuleTable,
}

#[derive(Serialize)]
struct IntentReport {
    header: TranslationHeader,
    intent: IntentSpec<Real>,
    scenario: ScenarioConfig<Real>,
    translation: TranslationResult<Real>,
}

fn cmd_intent(
    file: &Path,
    scenario: Option<&Path>,
    out: Option<&Path>,
    slot_duration: Real,
    packet_size: Real,
    scenario_out: Option<&Path>,
    mode: ArrivalMode,
) -> Result<()> {
    let intent: IntentSpec<Real> = read_json(file).with_context(|| format!("intent {}", file.display()))?;
    let scenario = load_scenario(scenario)?;
    let translation = translate_intent(&intent, &scenario, slot_duration, packet_size)?;
    if !translation.feasible {
        log::warn!("intent is infeasible: tightness {:.3} > 1", translation.tightness);
    }
    if let Some(path) = scenario_out {
        write_json(Some(path), &derive_scenario(&translation, &scenario, mode))?;
    }
    let report = IntentReport {
        header: TranslationHeader {
            tool: "leasesim",
            version: env!("CARGO_PKG_VERSION"),
            slot_duration_s: slot_duration,
            packet_size_mb: packet_size,
            rule_table: RuleTable::default(),
        },
        intent,
        scenario,
        translation,
    };
    write_json(out, &report)
}

/// Accepts the output of `intent` or a bare translation object.
fn load_translation(path: &Path) -> Result<TranslationResult<Real>> {
    let mut value: serde_json::Value = read_json(path)?;
    if let Some(inner) = value.get_mut("translation") {
        value = inner.take();
    }
    serde_json::from_value(value).with_context(|| format!("translation {}", path.display()))
}

fn cmd_assure(trace: &Path, intent: &Path, translation: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let intent: IntentSpec<Real> = read_json(intent).with_context(|| format!("intent {}", intent.display()))?;
    let translation = load_translation(translation)?;
    let file = File::open(trace).with_context(|| format!("cannot open {}", trace.display()))?;
    let records = read_trace_csv::<Real, _>(BufReader::new(file)).with_context(|| format!("trace {}", trace.display()))?;
    let report = assure_records(&records, &intent, &translation)?;
    write_json(out, &report)?;
    if out.is_some() {
        println!("{:?}", report.verdict);
    }
    Ok(match report.verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(2),
    })
}

fn cmd_oracle(realization: &Path, initial_backlog: u64, deadline: usize, out: Option<&Path>) -> Result<()> {
    if deadline > MAX_DEADLINE {
        bail!("--deadline {deadline} refused: the oracle enumerates 2^deadline schedules and is limited to deadline <= {MAX_DEADLINE}");
    }
    let file = File::open(realization).with_context(|| format!("cannot open {}", realization.display()))?;
    let market = read_realization_csv::<Real, _>(BufReader::new(file))?;
    let solution = offline_min_cost(&market, initial_backlog, deadline)?;
    write_json(out, &solution)
}
