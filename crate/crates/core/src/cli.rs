//! Command-line surface.
//!
//! Exit codes: 0 on success, 1 when the inputs fail validation, 2 on a usage
//! error. Settings resolve as flag, then `ABSORBNET_SEED` (seed only), then
//! the `--config` file, then built-in defaults.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::absorb::{absorptivity_total, evaluate, profile_from_physicians};
use crate::builder::{aggregate_flows, average_flows, build_flow_series, build_visit_matrices, node_set, AggregationScheme};
use crate::config::RunConfig;
use crate::domain::{AgeGroup, CohortFilter, FlowNetwork, MonthIndex, Race, StressProfile};
use crate::error::{Error, Result};
use crate::io::{
    attach_physicians, format_float, format_optional, load_network, load_physicians, load_regions,
    load_stress, load_visits, read_table, write_network, write_physicians, write_regions, write_stress, write_table,
    write_visits,
};
use crate::metrics::{compute_metrics, DistanceWeighting};
use crate::scenario::{linear_grid, run_identical_stress, run_sweep, Characteristic, SweepSpec};
use crate::services::ServiceClass;
use crate::stats::{summarize_phases, PhaseMetrics, PhaseSummary, TestKind};
use crate::synth::{generate_corpus, SynthParams};

#[derive(Debug, Parser)]
#[command(name = "absorbnet", version, about = "Patient-flow networks and their absorptivity under stress")]
pub struct Cli {
    /// key = value configuration file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel stages
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus (visits, regions, physicians)
    Synth(SynthArgs),
    /// Build monthly flow networks, phase snapshots and a stress profile
    Build(BuildArgs),
    /// Structural metrics of one or more networks
    Metrics(MetricsArgs),
    /// Absorptivity of the pre and during networks under one stress profile
    Absorb(AbsorbArgs),
    /// Sweep one network characteristic under the identical-stress protocol
    Sweep(SweepArgs),
    /// Run the identical-stress protocol on one network
    Identical(IdenticalArgs),
    /// Compare pre and during phases with t-tests
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub patients: Option<usize>,
    #[arg(long)]
    pub regions: Option<usize>,
    #[arg(long)]
    pub months: Option<usize>,
    /// First month, YYYY-MM
    #[arg(long)]
    pub start: Option<MonthIndex>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Aggregate {
    Seasonal,
    Yearly,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Directory holding visits.csv (and optionally regions.csv, physicians.csv)
    #[arg(long = "in", value_name = "DIR")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub v_max: Option<u32>,
    /// Physician-to-patient ratio for capacities
    #[arg(long)]
    pub rho: Option<f64>,
    /// First month of the during phase
    #[arg(long, default_value = "2020-01")]
    pub split: MonthIndex,
    #[arg(long, value_delimiter = ',')]
    pub age: Vec<AgeGroup>,
    #[arg(long, value_delimiter = ',')]
    pub race: Vec<Race>,
    /// Required service classes (all must be present in a visit)
    #[arg(long, value_delimiter = ',')]
    pub service: Vec<ServiceClass>,
    /// Also write summed seasonal or yearly networks
    #[arg(long, value_enum)]
    pub aggregate: Option<Aggregate>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Network files or directories of network files
    #[arg(long = "in", value_name = "PATH", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// regions.csv, for average flow distance
    #[arg(long, value_name = "FILE")]
    pub regions: Option<PathBuf>,
    #[arg(long)]
    pub distance_weighting: Option<DistanceWeighting>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AbsorbArgs {
    #[arg(long, value_name = "FILE")]
    pub pre: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub during: PathBuf,
    /// stress.csv
    #[arg(long, value_name = "FILE")]
    pub profile: PathBuf,
    #[arg(long)]
    pub from: Option<MonthIndex>,
    #[arg(long)]
    pub to: Option<MonthIndex>,
    /// Report raw residuals instead of clamping at zero
    #[arg(long)]
    pub no_clamp: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    /// Network file
    #[arg(long, value_name = "FILE")]
    pub network: Option<PathBuf>,
    /// stress.csv to take capacities from; defaults to the network's incoming totals
    #[arg(long, value_name = "FILE", requires = "month")]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub month: Option<MonthIndex>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub headroom: Option<f64>,
    #[arg(long)]
    pub no_clamp: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub characteristic: Characteristic,
    /// start:end:count, or a comma-separated list
    #[arg(long)]
    pub grid: String,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
}

#[derive(Debug, Args)]
pub struct IdenticalArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metrics CSV of monthly networks
    #[arg(long, value_name = "FILE")]
    pub metrics: PathBuf,
    /// Absorptivity CSV from `absorb`
    #[arg(long, value_name = "FILE")]
    pub absorb: Option<PathBuf>,
    #[arg(long, default_value = "2020-01")]
    pub split: MonthIndex,
    /// Paired t-test instead of Welch
    #[arg(long)]
    pub paired: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env()?;
    Ok(cfg)
}

pub fn execute(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // A pool may already exist when running inside a test harness.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Synth(a) => synth(a, &cfg),
        Command::Build(a) => build(a, &cfg),
        Command::Metrics(a) => metrics(a, &cfg),
        Command::Absorb(a) => absorb(a, &cfg),
        Command::Sweep(a) => sweep(a, &cfg),
        Command::Identical(a) => identical(a, &cfg),
        Command::Report(a) => report(a),
    }
}

fn required_path(flag: Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| Error::Config(format!("{name} is required (flag or config)")))
}

fn synth(a: SynthArgs, cfg: &RunConfig) -> Result<()> {
    let out = required_path(a.out, &cfg.output, "--out")?;
    let defaults = SynthParams::default();
    let params = SynthParams {
        seed: a.seed.unwrap_or(cfg.seed),
        n_patients: a.patients.unwrap_or(defaults.n_patients),
        n_regions: a.regions.unwrap_or(defaults.n_regions),
        n_months: a.months.unwrap_or(defaults.n_months),
        start: a.start.unwrap_or(defaults.start),
        ..defaults
    };
    let corpus = generate_corpus(&params)?;
    write_visits(out.join("visits.csv"), &corpus.records)?;
    write_regions(out.join("regions.csv"), &corpus.regions)?;
    write_physicians(out.join("physicians.csv"), &corpus.regions)?;
    println!("wrote {} visits over {} regions to {}", corpus.records.len(), corpus.regions.len(), out.display());
    Ok(())
}

fn cohort(a: &BuildArgs) -> CohortFilter {
    let mut filter = CohortFilter::all();
    if !a.age.is_empty() {
        filter = filter.with_age_groups(a.age.iter().copied());
    }
    if !a.race.is_empty() {
        filter = filter.with_races(a.race.iter().copied());
    }
    for &s in &a.service {
        filter = filter.with_service(s);
    }
    filter
}

fn build(a: BuildArgs, cfg: &RunConfig) -> Result<()> {
    let input = required_path(a.input.clone(), &cfg.input, "--in")?;
    let out = required_path(a.out.clone(), &cfg.output, "--out")?;
    let v_max = a.v_max.unwrap_or(cfg.v_max);
    let rho = a.rho.unwrap_or(cfg.rho);
    let capacity_model = RunConfig { rho, ..cfg.clone() };
    capacity_model.validate()?;

    let loaded = load_visits(input.join("visits.csv"), &cfg.age_bands)?;
    if !loaded.rejected.is_empty() {
        eprintln!("skipped {} malformed visit rows", loaded.rejected.len());
    }
    write_table(
        out.join("rejected.csv"),
        &["line", "reason"],
        loaded.rejected.iter().map(|r| [r.line.to_string(), r.reason.clone()]),
    )?;

    let matrices = build_visit_matrices(&loaded.records, &cohort(&a));
    let nodes = node_set(&matrices);
    if nodes.is_empty() {
        return Err(Error::Validation("no visits match the cohort filter".into()));
    }
    let series = build_flow_series(&matrices, v_max, &nodes)?;
    for (month, net) in &series {
        write_network(out.join("monthly").join(format!("{month}.csv")), net)?;
    }
    if let Some(scheme) = a.aggregate {
        let (scheme, dir) = match scheme {
            Aggregate::Seasonal => (AggregationScheme::Seasonal, "seasonal"),
            Aggregate::Yearly => (AggregationScheme::Yearly, "yearly"),
        };
        for net in aggregate_flows(&series, scheme)? {
            write_network(out.join(dir).join(format!("{}.csv", net.period())), &net)?;
        }
    }
    for (label, nets) in [
        ("pre", series.range(..a.split).map(|(_, n)| n).collect::<Vec<_>>()),
        ("during", series.range(a.split..).map(|(_, n)| n).collect()),
    ] {
        if nets.is_empty() {
            eprintln!("no months in the {label} phase; {label}.csv not written");
            continue;
        }
        write_network(out.join(format!("{label}.csv")), &average_flows(nets, label)?)?;
    }

    let (regions_path, physicians_path) = (input.join("regions.csv"), input.join("physicians.csv"));
    if regions_path.exists() && physicians_path.exists() {
        let mut regions = load_regions(&regions_path)?;
        attach_physicians(&mut regions, load_physicians(&physicians_path)?)?;
        let loads: BTreeMap<MonthIndex, Vec<f64>> = series
            .iter()
            .map(|(m, net)| (*m, net.incoming_totals().to_vec()))
            .collect();
        let profile = profile_from_physicians(&nodes, &loads, &regions, &capacity_model.capacity_model())?;
        write_stress(out.join("stress.csv"), &profile)?;
    } else {
        eprintln!("regions.csv or physicians.csv missing; stress.csv not written");
    }
    println!(
        "built {} monthly networks over {} regions from {} visits",
        series.len(),
        nodes.len(),
        loaded.records.len()
    );
    Ok(())
}

fn network_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::Validation("no network files found".into()));
    }
    Ok(files)
}

const METRICS_HEADER: [&str; 8] = [
    "period",
    "node_count",
    "edge_count",
    "sigma",
    "cross_flow",
    "density",
    "heterogeneity",
    "avg_distance_km",
];

fn metrics(a: MetricsArgs, cfg: &RunConfig) -> Result<()> {
    let weighting = a.distance_weighting.unwrap_or(cfg.distance_weighting);
    let regions = a.regions.as_ref().map(load_regions).transpose()?;
    let mut rows = Vec::new();
    for file in network_files(&a.input)? {
        let net = load_network(&file)?;
        let m = compute_metrics(&net, regions.as_ref(), weighting)?;
        rows.push([
            net.period().to_string(),
            m.node_count.to_string(),
            m.edge_count.to_string(),
            format_float(m.sigma),
            format_float(m.cross_flow),
            format_float(m.density),
            format_float(m.heterogeneity),
            format_optional(m.avg_distance_km),
        ]);
    }
    emit(a.out.as_deref(), &METRICS_HEADER, rows)
}

/// Writes to `out` when given, otherwise to stdout.
fn emit<R: IntoIterator<Item = String>>(out: Option<&Path>, header: &[&str], rows: Vec<R>) -> Result<()> {
    match out {
        Some(path) => write_table(path, header, rows),
        None => {
            println!("{}", header.join(","));
            for row in rows {
                println!("{}", row.into_iter().collect::<Vec<_>>().join(","));
            }
            Ok(())
        }
    }
}

fn restrict_profile(profile: StressProfile, from: Option<MonthIndex>, to: Option<MonthIndex>) -> Result<StressProfile> {
    if from.is_none() && to.is_none() {
        return Ok(profile);
    }
    let keep: Vec<usize> = profile
        .months()
        .iter()
        .enumerate()
        .filter(|(_, m)| from.is_none_or(|f| **m >= f) && to.is_none_or(|t| **m <= t))
        .map(|(k, _)| k)
        .collect();
    if keep.is_empty() {
        return Err(Error::Validation("no profile months inside the requested window".into()));
    }
    let n = profile.regions().len();
    let (mut load, mut cap) = (Vec::new(), Vec::new());
    for &t in &keep {
        for i in 0..n {
            load.push(profile.load(t, i));
            cap.push(profile.capacity(t, i));
        }
    }
    let months = keep.iter().map(|&t| profile.months()[t]).collect();
    StressProfile::new(profile.regions().to_vec(), months, load, cap)
}

fn absorb(a: AbsorbArgs, cfg: &RunConfig) -> Result<()> {
    let clamp = cfg.clamp && !a.no_clamp;
    let pre = load_network(&a.pre)?;
    let during = load_network(&a.during)?;
    let profile = restrict_profile(load_stress(&a.profile)?, a.from, a.to)?;
    let rp = evaluate(&pre, &profile, clamp)?;
    let rd = evaluate(&during, &profile, clamp)?;
    let rows: Vec<[String; 6]> = profile
        .months()
        .iter()
        .enumerate()
        .map(|(t, m)| {
            [
                m.to_string(),
                format_float(rp.lambda_o[t]),
                format_float(rp.lambda_w[t]),
                format_float(rd.lambda_w[t]),
                format_optional(rp.r[t]),
                format_optional(rd.r[t]),
            ]
        })
        .collect();
    emit(
        a.out.as_deref(),
        &["t", "lambda_O", "lambda_W_pre", "lambda_W_during", "r_pre", "r_during"],
        rows,
    )?;
    if a.out.is_some() {
        for (label, res) in [("pre", &rp), ("during", &rd)] {
            match absorptivity_total(&res.r) {
                Ok(total) => println!(
                    "r_{label} = {} over {} months ({} skipped)",
                    format_float(total.r),
                    total.defined,
                    total.skipped
                ),
                Err(e) => println!("r_{label} undefined: {e}"),
            }
        }
    }
    Ok(())
}

/// `start:end:count` or `a,b,c`.
pub fn parse_grid(raw: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::parse("grid", msg);
    let parts: Vec<&str> = raw.split(':').collect();
    let grid = match parts.as_slice() {
        [start, end, count] => {
            let start: f64 = start.trim().parse().map_err(|_| bad(format!("bad start {start:?}")))?;
            let end: f64 = end.trim().parse().map_err(|_| bad(format!("bad end {end:?}")))?;
            let count: usize = count.trim().parse().map_err(|_| bad(format!("bad count {count:?}")))?;
            if count == 0 {
                return Err(bad("count must be at least 1".into()));
            }
            linear_grid(start, end, count)
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad(format!("bad value {v:?}"))))
            .collect::<Result<_>>()?,
        _ => return Err(bad(format!("expected start:end:count or a list, got {raw:?}"))),
    };
    Ok(grid)
}

struct Protocol {
    net: FlowNetwork,
    capacities: Vec<f64>,
    scenario: crate::scenario::ScenarioConfig,
}

fn protocol(p: &ProtocolArgs, cfg: &RunConfig) -> Result<Protocol> {
    let path = required_path(p.network.clone(), &cfg.input, "--network")?;
    let net = load_network(&path)?;
    let capacities = match (&p.profile, p.month) {
        (Some(profile_path), Some(month)) => {
            let profile = load_stress(profile_path)?;
            let t = profile
                .month_position(month)
                .ok_or_else(|| Error::Validation(format!("{month} is not in {}", profile_path.display())))?;
            net.nodes()
                .iter()
                .map(|zip| {
                    profile
                        .regions()
                        .iter()
                        .position(|r| r == zip)
                        .map(|i| profile.capacity(t, i))
                        .ok_or_else(|| Error::Structural(format!("region {zip} missing from the stress profile")))
                })
                .collect::<Result<_>>()?
        }
        _ => net.incoming_totals().to_vec(),
    };
    let mut scenario = cfg.scenario();
    if let Some(r) = p.repetitions {
        scenario.repetitions = r;
    }
    if let Some(s) = p.seed {
        scenario.seed = s;
    }
    if let Some(h) = p.headroom {
        scenario.unstressed_headroom = h;
    }
    scenario.clamp = scenario.clamp && !p.no_clamp;
    scenario.validate()?;
    Ok(Protocol {
        net,
        capacities,
        scenario,
    })
}

fn sweep(a: SweepArgs, cfg: &RunConfig) -> Result<()> {
    let Protocol {
        net,
        capacities,
        scenario,
    } = protocol(&a.protocol, cfg)?;
    let spec = SweepSpec {
        characteristic: a.characteristic,
        grid: parse_grid(&a.grid)?,
        repetitions: scenario.repetitions,
        seed: scenario.seed,
    };
    let curve = run_sweep(&net, &capacities, &spec, &scenario)?;
    let rows: Vec<[String; 7]> = curve
        .iter()
        .map(|p| {
            [
                format_float(p.target),
                format_float(p.sigma),
                format_float(p.density),
                format_float(p.heterogeneity),
                format_float(p.mean_r),
                format_float(p.std_r),
                p.saturated.to_string(),
            ]
        })
        .collect();
    emit(
        a.protocol.out.as_deref(),
        &["target", "sigma", "density", "heterogeneity", "mean_r", "std_r", "saturated"],
        rows,
    )
}

fn identical(a: IdenticalArgs, cfg: &RunConfig) -> Result<()> {
    let Protocol {
        net,
        capacities,
        scenario,
    } = protocol(&a.protocol, cfg)?;
    let res = run_identical_stress(&net, &capacities, &scenario)?;
    let rows: Vec<[String; 2]> = res
        .per_repetition
        .iter()
        .enumerate()
        .map(|(k, r)| [k.to_string(), format_optional(*r)])
        .collect();
    emit(a.protocol.out.as_deref(), &["repetition", "r"], rows)?;
    if a.protocol.out.is_some() {
        println!(
            "mean r = {} (sd {}, {} of {} repetitions defined)",
            format_float(res.mean),
            format_float(res.std_dev),
            res.defined(),
            res.per_repetition.len()
        );
    }
    Ok(())
}

fn parse_number(raw: &str) -> f64 {
    if raw == "NA" {
        f64::NAN
    } else {
        raw.parse().unwrap_or(f64::NAN)
    }
}

/// Splits monthly metric rows at `split` and keys each phase by calendar
/// month; months appearing in several years of one phase are averaged.
fn metrics_by_phase(path: &Path, split: MonthIndex) -> Result<(PhaseMetrics, PhaseMetrics)> {
    let table = read_table(path)?;
    let period = table
        .column("period")
        .ok_or_else(|| Error::Validation(format!("{}: missing column period", path.display())))?;
    let names = ["sigma", "density", "heterogeneity", "avg_distance_km"];
    let columns: Vec<(usize, &str)> = names
        .iter()
        .filter_map(|n| table.column(n).map(|c| (c, *n)))
        .collect();
    type Sums = BTreeMap<String, BTreeMap<String, (f64, f64)>>;
    let (mut pre, mut during): (Sums, Sums) = Default::default();
    for row in &table.rows {
        let Ok(month) = row[period].parse::<MonthIndex>() else {
            continue;
        };
        let phase = if month < split { &mut pre } else { &mut during };
        let unit = phase.entry(format!("{:02}", month.month())).or_default();
        for &(c, name) in &columns {
            let v = parse_number(&row[c]);
            let slot = unit.entry(name.to_string()).or_insert((0.0, 0.0));
            slot.0 += v;
            slot.1 += 1.0;
        }
    }
    let common: Vec<String> = pre.keys().filter(|k| during.contains_key(*k)).cloned().collect();
    let finish = |sums: Sums| -> PhaseMetrics {
        sums.into_iter()
            .filter(|(k, _)| common.contains(k))
            .map(|(k, m)| (k, m.into_iter().map(|(n, (s, c))| (n, s / c)).collect()))
            .collect()
    };
    Ok((finish(pre), finish(during)))
}

fn absorptivity_by_phase(path: &Path) -> Result<(PhaseMetrics, PhaseMetrics)> {
    let table = read_table(path)?;
    let col = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| Error::Validation(format!("{}: missing column {name}", path.display())))
    };
    let (t, rp, rd) = (col("t")?, col("r_pre")?, col("r_during")?);
    let mut pre = PhaseMetrics::new();
    let mut during = PhaseMetrics::new();
    for row in &table.rows {
        pre.entry(row[t].clone()).or_default().insert("r".into(), parse_number(&row[rp]));
        during.entry(row[t].clone()).or_default().insert("r".into(), parse_number(&row[rd]));
    }
    Ok((pre, during))
}

const REPORT_HEADER: [&str; 13] = [
    "characteristic",
    "units",
    "pre_mean",
    "pre_min",
    "pre_max",
    "during_mean",
    "during_min",
    "during_max",
    "difference",
    "t",
    "df",
    "p",
    "significant",
];

fn summary_rows(summary: &PhaseSummary, units: usize) -> Vec<Vec<String>> {
    summary
        .rows
        .iter()
        .map(|row| {
            let (t, df, p) = row.test.map_or((f64::NAN, f64::NAN, f64::NAN), |x| (x.t, x.df, x.p));
            vec![
                row.name.clone(),
                units.to_string(),
                format_float(row.pre.mean),
                format_float(row.pre.min),
                format_float(row.pre.max),
                format_float(row.during.mean),
                format_float(row.during.min),
                format_float(row.during.max),
                format_float(row.difference),
                format_float(t),
                format_float(df),
                format_float(p),
                row.significant().to_string(),
            ]
        })
        .collect()
}

fn report(a: ReportArgs) -> Result<()> {
    let kind = if a.paired { TestKind::Paired } else { TestKind::Welch };
    let (pre, during) = metrics_by_phase(&a.metrics, a.split)?;
    let summary = summarize_phases(&pre, &during, kind)?;
    let mut rows = summary_rows(&summary, pre.len());
    if let Some(path) = &a.absorb {
        let (pre, during) = absorptivity_by_phase(path)?;
        let summary = summarize_phases(&pre, &during, kind)?;
        rows.extend(summary_rows(&summary, pre.len()));
    }
    emit(a.out.as_deref(), &REPORT_HEADER, rows)
}
