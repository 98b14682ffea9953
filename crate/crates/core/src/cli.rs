//! Command-line front end: loads a scenario, runs one analysis and writes
//! its reports.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::arch::{
    build_multi_server_rbd_from, build_node_rbd, build_server_rbd, build_service_spn,
    evaluate_service, service_metric, FailRepair, ServiceSpnParams,
};
use crate::coa::{coa_capacity_sweep, CoaRates};
use crate::cost::{
    acquisition_total, crossover_year, energy_table, private_cost, tco_timeline,
};
use crate::error::{Error, Result};
use crate::rbd::{eval_availability, AvailabilityResult, ComponentSpec};
use crate::report::{Cell, Format, Provenance, Report};
use crate::scenario::{digest, Scenario};
use crate::sensitivity::stack_sensitivity;
use crate::sim::simulate;
use crate::spn::{
    eval_metric, reachability, steady_state, MetricExpr, SpnModel, DEFAULT_MAX_STATES,
};

/// Scenario used when `--scenario` is not given.
pub const BUNDLED_SCENARIO: &str = include_str!("../scenarios/baseline.scenario");

#[derive(Debug, Parser)]
#[command(name = "chainavail", version, about = "Availability, capacity and cost models for blockchain service deployments")]
pub struct Cli {
    /// Scenario file; the bundled baseline is used when omitted.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long, global = true, default_value = "reports")]
    pub out: PathBuf,
    /// Overwrite existing report files.
    #[arg(long, global = true)]
    pub force: bool,
    /// Simulation seed, overriding the scenario.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Relative tolerance for reference comparisons.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub tolerance: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Availability,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the scenario without evaluating anything.
    Validate,
    /// Server, node, service and multi-server availability.
    #[command(subcommand)]
    Stack(StackCmd),
    /// Block diagrams defined in the scenario.
    #[command(subcommand)]
    Rbd(RbdCmd),
    /// Percentage-difference sensitivity ranking.
    Sensitivity {
        #[arg(long, value_enum, default_value_t = Target::Availability)]
        target: Target,
        /// Relative sweep range around each nominal value.
        #[arg(long)]
        range: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Capacity-oriented availability.
    #[command(subcommand)]
    Coa(CoaCmd),
    /// Energy, acquisition and total cost of ownership.
    #[command(subcommand)]
    Cost(CostCmd),
    /// Monte Carlo estimate of a net metric.
    Simulate {
        /// Hours per replication.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        reps: Option<u32>,
        /// Hours discarded before averaging.
        #[arg(long)]
        warmup: Option<f64>,
        /// Net from the scenario's `[spn]` tables instead of the service net.
        #[arg(long)]
        net: Option<String>,
        /// Metric such as `P{#MN_ON >= 1}`.
        #[arg(long)]
        metric: Option<String>,
    },
    /// Internal model structures.
    #[command(subcommand)]
    Dump(DumpCmd),
    /// Every report listed in the scenario's `[outputs]`.
    All,
}

#[derive(Debug, Subcommand)]
pub enum StackCmd {
    /// Server, node, service and multi-server layers.
    Eval,
    /// Service availability over a range of miner counts.
    Sweep {
        #[arg(long, value_parser = parse_range)]
        miners: Option<(u32, u32)>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RbdCmd {
    /// Evaluates the scenario's block diagrams.
    Eval {
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CoaCmd {
    /// COA for a growing number of servers.
    Sweep {
        /// Server counts, e.g. `1..4`.
        #[arg(long, value_parser = parse_range)]
        servers: Option<(u32, u32)>,
        /// Containers per server.
        #[arg(long)]
        containers: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CostCmd {
    /// Yearly energy expense per component.
    Energy,
    /// Acquisition and maintenance per server count.
    Acquisition,
    /// Cumulative private vs public cost, one report per instance count.
    Tco {
        #[arg(long, value_delimiter = ',')]
        instances: Option<Vec<u32>>,
        #[arg(long)]
        years: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DumpCmd {
    /// Tangible states and generator entries.
    Statespace {
        #[arg(long)]
        net: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
    },
}

/// Parses `a..b` or `a..=b`, both inclusive.
pub fn parse_range(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected a range like 1..8, got {s}"))?;
    let lo: u32 = a.trim().parse().map_err(|e| format!("bad range start {a}: {e}"))?;
    let hi: u32 = b.trim().parse().map_err(|e| format!("bad range end {b}: {e}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("range {s} must satisfy 1 <= start <= end"));
    }
    Ok((lo, hi))
}

/// One line, `key=value` pairs, message quoted.
pub fn error_line(e: &Error) -> String {
    match e {
        Error::Parse {
            line,
            column,
            key,
            message,
        } => {
            let key = key.as_ref().map(|k| format!(" key={k}")).unwrap_or_default();
            format!("error: kind=parse line={line} column={column}{key} message={message:?}")
        }
        Error::Structural { node, reason } => {
            format!("error: kind=structural node={node:?} message={reason:?}")
        }
        other => format!("error: kind={} message={:?}", other.kind(), other.to_string()),
    }
}

/// Loaded scenario plus the output settings shared by every command.
pub struct Context {
    pub scenario: Scenario,
    pub digest: String,
    pub seed: u64,
    pub tolerance: f64,
}

impl Context {
    pub fn from_text(text: &str, seed: Option<u64>, tolerance: f64) -> Result<Context> {
        let scenario = Scenario::parse(text)?;
        let seed = seed.unwrap_or(scenario.simulation.seed);
        Ok(Context {
            scenario,
            digest: digest(text),
            seed,
            tolerance,
        })
    }

    fn report(&self, name: impl Into<String>, columns: &[&str]) -> Report {
        Report::new(name, columns, Provenance::new(&self.digest, Some(self.seed)))
    }

    fn layers(&self) -> Result<(AvailabilityResult, AvailabilityResult)> {
        let p = self.scenario.stack_params()?;
        Ok((
            eval_availability(&build_server_rbd(&p))?,
            eval_availability(&build_node_rbd(&p))?,
        ))
    }

    pub fn service_params(&self) -> Result<ServiceSpnParams> {
        let (server, node) = self.layers()?;
        let a = &self.scenario.architecture;
        Ok(ServiceSpnParams {
            boot_node_dependency: a.boot_node_dependency,
            ..ServiceSpnParams::new(FailRepair::from(&server), FailRepair::from(&node), a.n_miners)
        })
    }
}

const AVAILABILITY_COLUMNS: [&str; 7] = [
    "model",
    "availability",
    "unavailability",
    "downtime_h_per_year",
    "mttf_h",
    "mttr_h",
    "nines",
];

fn availability_row(model: String, r: &AvailabilityResult) -> Vec<Cell> {
    vec![
        model.into(),
        r.availability.into(),
        r.unavailability.into(),
        r.downtime.into(),
        r.mttf.into(),
        r.mttr.into(),
        r.nines.into(),
    ]
}

/// The layer table and, when the scenario has reference values, a
/// comparison against them.
pub fn stack_reports(ctx: &Context) -> Result<Vec<Report>> {
    let (server, node) = ctx.layers()?;
    let service = evaluate_service(&ctx.service_params()?)?;
    let n = ctx.scenario.architecture.n_servers;
    let per_server = ComponentSpec {
        name: "server".into(),
        mttf: service.mttf,
        mttr: service.mttr,
    };
    let multi = eval_availability(&build_multi_server_rbd_from(&per_server, n)?)?;

    let mut stack = ctx.report("stack", &AVAILABILITY_COLUMNS);
    stack.push(availability_row("Server".into(), &server));
    stack.push(availability_row("Containers".into(), &node));
    stack.push(availability_row("SPN".into(), &service));
    stack.push(availability_row(format!("{n} servers"), &multi));
    let mut out = vec![stack];

    let refs = ctx.scenario.reference.entries();
    if !refs.is_empty() {
        let mut cmp = ctx.report(
            "stack_reference",
            &["quantity", "reference", "computed", "abs_diff", "rel_diff", "within_tolerance"],
        );
        for (key, reference) in refs {
            let computed = match key {
                "server_availability" => server.availability,
                "server_downtime" => server.downtime,
                "server_mttf" => server.mttf,
                "server_mttr" => server.mttr,
                "node_availability" => node.availability,
                "node_mttf" => node.mttf,
                "node_mttr" => node.mttr,
                "service_availability" => service.availability,
                "service_downtime" => service.downtime,
                _ => unreachable!("reference keys are fixed"),
            };
            let abs = (computed - reference).abs();
            let rel = if reference == 0.0 { abs } else { abs / reference.abs() };
            cmp.push(vec![
                key.into(),
                reference.into(),
                computed.into(),
                abs.into(),
                rel.into(),
                (rel <= ctx.tolerance).into(),
            ]);
        }
        out.push(cmp);
    }
    Ok(out)
}

pub fn miners_report(ctx: &Context, range: Option<(u32, u32)>) -> Result<Report> {
    let (lo, hi) = range.unwrap_or((ctx.scenario.sensitivity.miners[0], ctx.scenario.sensitivity.miners[1]));
    let base = ctx.service_params()?;
    let mut r = ctx.report("miners", &["miners", "availability", "downtime_h_per_year", "gain"]);
    let mut prev: Option<f64> = None;
    for n in lo..=hi {
        let a = evaluate_service(&ServiceSpnParams { n_miners: n, ..base })?;
        let gain = prev.map_or(0.0, |p| a.availability - p);
        r.push(vec![n.into(), a.availability.into(), a.downtime.into(), gain.into()]);
        prev = Some(a.availability);
    }
    Ok(r)
}

pub fn rbd_report(ctx: &Context, name: Option<&str>) -> Result<Report> {
    let names: Vec<String> = match name {
        Some(n) => vec![n.to_string()],
        None => ctx.scenario.rbd.keys().cloned().collect(),
    };
    if names.is_empty() {
        return Err(Error::structural("rbd", "scenario defines no block diagrams"));
    }
    let mut r = ctx.report("rbd", &AVAILABILITY_COLUMNS);
    for n in names {
        let res = eval_availability(&ctx.scenario.rbd(&n)?)?;
        r.push(availability_row(n, &res));
    }
    Ok(r)
}

pub fn sensitivity_reports(ctx: &Context, range: Option<f64>, points: Option<usize>) -> Result<Vec<Report>> {
    let mut cfg = ctx.scenario.sweep_config()?;
    if let Some(r) = range {
        cfg.range = r;
    }
    if let Some(p) = points {
        cfg.points = p;
    }
    let s = stack_sensitivity(&ctx.service_params()?, &cfg)?;
    let mut ranking = ctx.report("sensitivity", &["parameter", "ranking", "sensitivity_index"]);
    for i in &s.ranking {
        ranking.push(vec![i.parameter.as_str().into(), i.rank.into(), i.index.into()]);
    }
    let mut curves = ctx.report("sensitivity_curves", &["parameter", "value", "availability"]);
    for (p, curve) in &s.curves {
        for &(v, a) in curve {
            curves.push(vec![p.name().into(), v.into(), a.into()]);
        }
    }
    Ok(vec![ranking, curves])
}

pub fn coa_report(ctx: &Context, servers: Option<(u32, u32)>, containers: Option<u32>) -> Result<Report> {
    let (lo, hi) = servers.unwrap_or((1, ctx.scenario.coa.max_servers));
    let p = containers.unwrap_or(ctx.scenario.architecture.containers_per_server);
    let (server, node) = ctx.layers()?;
    let rates = CoaRates {
        server: FailRepair::from(&server),
        container: FailRepair::from(&node),
    };
    let mut r = ctx.report(
        "coa",
        &["servers", "capacity", "coa_state_reward", "coa_closed_form", "abs_diff"],
    );
    for row in coa_capacity_sweep(hi, p, &rates)?.into_iter().filter(|r| r.servers >= lo) {
        r.push(vec![
            row.servers.into(),
            row.capacity.into(),
            row.state_reward.into(),
            row.closed_form.into(),
            (row.state_reward - row.closed_form).abs().into(),
        ]);
    }
    Ok(r)
}

pub fn energy_report(ctx: &Context) -> Result<Report> {
    let s = ctx.scenario.cost_scenario()?;
    let mut r = ctx.report("energy", &["component", "power_w", "quantity", "kwh_per_year", "usd_per_year"]);
    for (c, (_, usd)) in s.components.iter().zip(energy_table(&s)) {
        let kwh = c.power_w * s.hours_per_day * s.days_per_year / 1000.0 * f64::from(c.quantity);
        r.push(vec![
            c.name.as_str().into(),
            c.power_w.into(),
            c.quantity.into(),
            kwh.into(),
            Cell::Usd(usd),
        ]);
    }
    Ok(r)
}

pub fn acquisition_report(ctx: &Context) -> Result<Report> {
    let c = ctx.scenario.cost_section()?;
    let s = ctx.scenario.cost_scenario()?;
    let mut r = ctx.report("acquisition", &["servers", "acquisition_usd", "maintenance_usd_per_year"]);
    for (i, m) in c.maintenance.iter().enumerate() {
        let n = i as u32 + 1;
        let total = acquisition_total(&s.with_quantity(&c.server_component, n)?);
        r.push(vec![n.into(), Cell::Usd(total), Cell::Usd(*m)]);
    }
    Ok(r)
}

/// One cumulative-cost report per instance count, then the crossover table.
pub fn tco_reports(ctx: &Context, instances: Option<&[u32]>, years: Option<u32>) -> Result<Vec<Report>> {
    let c = ctx.scenario.cost_section()?;
    let s = ctx.scenario.cost_scenario()?;
    let instances = instances.unwrap_or(&c.instances);
    let horizon = years.unwrap_or(c.horizon);
    let per = ctx.scenario.architecture.containers_per_server;
    let mut out = Vec::new();
    let mut cross = ctx.report("tco_crossover", &["instances", "servers", "option", "crossover_year"]);
    for &n in instances {
        let private = private_cost(&s, &c.server_component, per, &c.maintenance, n)?;
        let mut r = ctx.report(format!("tco_{n}"), &["year", "option", "cumulative_usd"]);
        for row in tco_timeline(&private, &c.offers, n, horizon)? {
            r.push(vec![row.year.into(), row.option.into(), Cell::Usd(row.cumulative)]);
        }
        out.push(r);
        for o in &c.offers {
            let y = crossover_year(&private, o, n, horizon).map_or(Cell::Null, Cell::from);
            cross.push(vec![n.into(), private.servers.into(), o.provider.as_str().into(), y]);
        }
    }
    out.push(cross);
    Ok(out)
}

fn pick_net(ctx: &Context, net: Option<&str>, metric: Option<&str>) -> Result<(String, SpnModel, MetricExpr)> {
    let (name, model, default_metric) = match net {
        Some(n) => {
            let (m, metric) = ctx.scenario.net(n)?;
            (n.to_string(), m, metric)
        }
        None => (
            "service".to_string(),
            build_service_spn(&ctx.service_params()?)?,
            Some(service_metric()),
        ),
    };
    let metric = match metric {
        Some(text) => MetricExpr::parse(text)?,
        None => default_metric
            .ok_or_else(|| Error::structural(format!("spn.{name}"), "no metric given; pass --metric"))?,
    };
    metric.compile(&model)?;
    Ok((name, model, metric))
}

pub struct SimulateArgs<'a> {
    pub horizon: Option<f64>,
    pub reps: Option<u32>,
    pub warmup: Option<f64>,
    pub net: Option<&'a str>,
    pub metric: Option<&'a str>,
}

pub fn simulation_reports(ctx: &Context, args: &SimulateArgs) -> Result<Vec<Report>> {
    let (name, model, metric) = pick_net(ctx, args.net, args.metric)?;
    let mut sim = ctx.scenario.simulation;
    sim.seed = ctx.seed;
    if let Some(h) = args.horizon {
        sim.horizon = h;
        sim.warmup = None;
    }
    if let Some(r) = args.reps {
        sim.replications = r;
    }
    if let Some(w) = args.warmup {
        sim.warmup = Some(w);
    }
    let cfg = sim.config();
    let est = simulate(&model, &metric, &cfg)?;
    let analytical = reachability(&model, DEFAULT_MAX_STATES)
        .and_then(|ctmc| {
            let pi = steady_state(&ctmc)?;
            eval_metric(&model, &ctmc, &pi, &metric)
        })
        .ok();
    let mut r = ctx.report(
        "simulation",
        &[
            "net",
            "metric",
            "mean",
            "ci_halfwidth",
            "replications",
            "horizon_h",
            "warmup_h",
            "analytical",
            "ci_covers_analytical",
        ],
    );
    r.push(vec![
        name.into(),
        metric.to_string().into(),
        est.mean.into(),
        est.ci_halfwidth.into(),
        cfg.replications.into(),
        cfg.horizon.into(),
        cfg.warmup.into(),
        analytical.map_or(Cell::Null, Cell::from),
        analytical.map_or(Cell::Null, |a| Cell::from(est.covers(a))),
    ]);
    let mut reps = ctx.report("simulation_replications", &["replication", "seed", "value"]);
    for (i, v) in est.replications.iter().enumerate() {
        reps.push(vec![i.into(), Cell::Int(cfg.seed.wrapping_add(i as u64) as i64), (*v).into()]);
    }
    Ok(vec![r, reps])
}

pub fn statespace_reports(ctx: &Context, net: Option<&str>, max_states: usize) -> Result<Vec<Report>> {
    let model = match net {
        Some(n) => ctx.scenario.net(n)?.0,
        None => build_service_spn(&ctx.service_params()?)?,
    };
    let ctmc = reachability(&model, max_states)?;
    let mut cols: Vec<&str> = vec!["state"];
    cols.extend(model.places().iter().map(String::as_str));
    cols.push("initial_probability");
    let mut states = ctx.report("states", &cols);
    let init = ctmc.initial_distribution();
    for (i, m) in ctmc.states().iter().enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(m.0.iter().map(|&t| Cell::from(t)));
        let p = init.iter().find(|(j, _)| *j == i).map_or(0.0, |(_, p)| *p);
        row.push(p.into());
        states.push(row);
    }
    let mut gen = ctx.report("generator", &["from", "to", "rate"]);
    for i in 0..ctmc.len() {
        let mut entries: Vec<(usize, f64)> = ctmc.row(i).to_vec();
        entries.push((i, ctmc.diagonal(i)));
        entries.sort_by_key(|e| e.0);
        for (j, q) in entries {
            gen.push(vec![i.into(), j.into(), q.into()]);
        }
    }
    Ok(vec![states, gen])
}

pub fn validate_lines(ctx: &Context) -> Vec<String> {
    ctx.scenario.validate().iter().map(error_line).collect()
}

fn reports_for(ctx: &Context, command: &Command) -> Result<Vec<Report>> {
    Ok(match command {
        Command::Validate => unreachable!("handled by run"),
        Command::Stack(StackCmd::Eval) => stack_reports(ctx)?,
        Command::Stack(StackCmd::Sweep { miners }) => vec![miners_report(ctx, *miners)?],
        Command::Rbd(RbdCmd::Eval { name }) => vec![rbd_report(ctx, name.as_deref())?],
        Command::Sensitivity { target: Target::Availability, range, points } => {
            sensitivity_reports(ctx, *range, *points)?
        }
        Command::Coa(CoaCmd::Sweep { servers, containers }) => vec![coa_report(ctx, *servers, *containers)?],
        Command::Cost(CostCmd::Energy) => vec![energy_report(ctx)?],
        Command::Cost(CostCmd::Acquisition) => vec![acquisition_report(ctx)?],
        Command::Cost(CostCmd::Tco { instances, years }) => tco_reports(ctx, instances.as_deref(), *years)?,
        Command::Simulate { horizon, reps, warmup, net, metric } => simulation_reports(
            ctx,
            &SimulateArgs {
                horizon: *horizon,
                reps: *reps,
                warmup: *warmup,
                net: net.as_deref(),
                metric: metric.as_deref(),
            },
        )?,
        Command::Dump(DumpCmd::Statespace { net, max_states }) => {
            statespace_reports(ctx, net.as_deref(), *max_states)?
        }
        Command::All => {
            let mut out = Vec::new();
            for name in &ctx.scenario.outputs.reports {
                match name.as_str() {
                    "stack" => out.extend(stack_reports(ctx)?),
                    "miners" => out.push(miners_report(ctx, None)?),
                    "sensitivity" => out.extend(sensitivity_reports(ctx, None, None)?),
                    "coa" => out.push(coa_report(ctx, None, None)?),
                    "energy" => {
                        out.push(energy_report(ctx)?);
                        out.push(acquisition_report(ctx)?);
                    }
                    "tco" => out.extend(tco_reports(ctx, None, None)?),
                    "simulation" => out.extend(simulation_reports(
                        ctx,
                        &SimulateArgs { horizon: None, reps: None, warmup: None, net: None, metric: None },
                    )?),
                    other => return Err(Error::structural("outputs.reports", format!("unknown report {other}"))),
                }
            }
            out
        }
    })
}

/// Lines for stdout and the exit status.
pub struct Outcome {
    pub lines: Vec<String>,
    pub status: i32,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let text = match &cli.scenario {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        None => BUNDLED_SCENARIO.to_string(),
    };
    let ctx = Context::from_text(&text, cli.seed, cli.tolerance)?;
    if let Command::Validate = cli.command {
        let lines = validate_lines(&ctx);
        let status = i32::from(!lines.is_empty());
        return Ok(Outcome {
            lines: if lines.is_empty() { vec!["ok".into()] } else { lines },
            status,
        });
    }
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let reports = reports_for(&ctx, &cli.command)?;
    if !cli.force {
        for r in &reports {
            let path = cli.out.join(format!("{}.{}", r.name, format.extension()));
            if path.exists() {
                return Err(Error::Io(format!("{} exists; pass --force to overwrite", path.display())));
            }
        }
    }
    let lines = reports
        .iter()
        .map(|r| r.write(&cli.out, format, cli.force).map(|p| p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome { lines, status: 0 })
}

/// Entry point shared by the binary and the tests: parses `args`, prints
/// to stdout/stderr and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: kind=usage message={first:?}");
            return 2;
        }
    };
    match run(&cli) {
        Ok(out) => {
            for l in out.lines {
                println!("{l}");
            }
            out.status
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Context {
        Context::from_text(BUNDLED_SCENARIO, None, 0.01).unwrap()
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..8"), Ok((1, 8)));
        assert_eq!(parse_range("2..=4"), Ok((2, 4)));
        assert!(parse_range("0..3").is_err());
        assert!(parse_range("5..3").is_err());
        assert!(parse_range("seven").is_err());
    }

    #[test]
    fn bundled_scenario_validates() {
        assert!(validate_lines(&ctx()).is_empty());
    }

    #[test]
    fn error_lines_are_single_line() {
        let e = Error::Parse {
            line: 3,
            column: 5,
            key: Some("n_racks".into()),
            message: "unknown field `n_racks`\nexpected one of".into(),
        };
        let l = error_line(&e);
        assert!(!l.contains('\n'));
        assert!(l.starts_with("error: kind=parse line=3 column=5 key=n_racks message="));
    }

    #[test]
    fn stack_report_rows() {
        let r = stack_reports(&ctx()).unwrap();
        assert_eq!(r[0].rows.len(), 4);
        assert_eq!(r[1].name, "stack_reference");
        let within = r[1].column("within_tolerance").unwrap();
        let names = r[1].column("quantity").unwrap();
        let flagged: Vec<String> = names
            .iter()
            .zip(within)
            .filter(|(_, w)| **w == Cell::Bool(false))
            .map(|(n, _)| n.to_string())
            .collect();
        assert!(flagged.contains(&"node_mttf".to_string()), "{flagged:?}");
    }

    #[test]
    fn tco_reports_per_instance_count() {
        let r = tco_reports(&ctx(), None, None).unwrap();
        let names: Vec<&str> = r.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["tco_8", "tco_16", "tco_24", "tco_32", "tco_crossover"]);
    }
}
