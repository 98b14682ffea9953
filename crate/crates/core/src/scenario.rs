//! Scenario files: one TOML document describing the component data,
//! deployment sizes, sweep settings, cost inputs and reference values.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arch::StackParams;
use crate::cost::{CostScenario, PoweredComponent, PublicOffer};
use crate::error::{Error, Result};
use crate::rbd::{ComponentSpec, RbdNode};
use crate::sensitivity::{StackParameter, StackSweepConfig};
use crate::sim::SimConfig;
use crate::spn::{MetricExpr, ServerSemantics, SpnBuilder, SpnModel};

/// Components every stack evaluation needs.
pub const STACK_COMPONENTS: [&str; 7] = [
    "hw",
    "os",
    "docker_engine",
    "container",
    "evm",
    "eth_client",
    "dapp",
];

/// Report names accepted in `[outputs]`.
pub const REPORTS: [&str; 7] = [
    "stack",
    "miners",
    "sensitivity",
    "coa",
    "energy",
    "tco",
    "simulation",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub components: BTreeMap<String, ComponentTimes>,
    pub architecture: Architecture,
    #[serde(default)]
    pub sensitivity: SensitivitySection,
    #[serde(default)]
    pub coa: CoaSection,
    pub cost: Option<CostSection>,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub rbd: BTreeMap<String, RbdSpec>,
    #[serde(default)]
    pub spn: BTreeMap<String, NetSpec>,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Mean times in hours; `mttf = inf` marks a component that never fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentTimes {
    pub mttf: f64,
    pub mttr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub n_miners: u32,
    pub n_servers: u32,
    #[serde(default = "default_containers")]
    pub containers_per_server: u32,
    #[serde(default = "default_true")]
    pub boot_node_dependency: bool,
}

fn default_containers() -> u32 {
    8
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivitySection {
    pub parameters: Vec<String>,
    pub range: f64,
    pub points: usize,
    pub miners: [u32; 2],
}

impl Default for SensitivitySection {
    fn default() -> Self {
        let d = StackSweepConfig::default();
        SensitivitySection {
            parameters: d.parameters.iter().map(|p| p.name().to_string()).collect(),
            range: d.range,
            points: d.points,
            miners: [d.miners.0, d.miners.1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoaSection {
    pub max_servers: u32,
}

impl Default for CoaSection {
    fn default() -> Self {
        CoaSection { max_servers: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    /// USD per kWh.
    pub tariff: f64,
    #[serde(default = "default_hours")]
    pub hours_per_day: f64,
    #[serde(default = "default_days")]
    pub days_per_year: f64,
    pub horizon: u32,
    /// Name of the component whose quantity follows the server count.
    pub server_component: String,
    /// Yearly maintenance for 1, 2, ... servers.
    pub maintenance: Vec<f64>,
    pub instances: Vec<u32>,
    pub components: Vec<PoweredComponent>,
    pub offers: Vec<PublicOffer>,
}

fn default_hours() -> f64 {
    24.0
}

fn default_days() -> f64 {
    365.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub horizon: f64,
    pub replications: u32,
    pub warmup: Option<f64>,
    pub seed: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            horizon: 1e6,
            replications: 10,
            warmup: None,
            seed: 42,
        }
    }
}

impl SimulationSection {
    pub fn config(&self) -> SimConfig {
        let mut c = SimConfig::new(self.horizon, self.replications, self.seed);
        if let Some(w) = self.warmup {
            c.warmup = w;
        }
        c
    }
}

/// Reference values to compare the stack evaluation against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub server_availability: Option<f64>,
    pub server_downtime: Option<f64>,
    pub server_mttf: Option<f64>,
    pub server_mttr: Option<f64>,
    pub node_availability: Option<f64>,
    pub node_mttf: Option<f64>,
    pub node_mttr: Option<f64>,
    pub service_availability: Option<f64>,
    pub service_downtime: Option<f64>,
}

impl Reference {
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        [
            ("server_availability", self.server_availability),
            ("server_downtime", self.server_downtime),
            ("server_mttf", self.server_mttf),
            ("server_mttr", self.server_mttr),
            ("node_availability", self.node_availability),
            ("node_mttf", self.node_mttf),
            ("node_mttr", self.node_mttr),
            ("service_availability", self.service_availability),
            ("service_downtime", self.service_downtime),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

/// Block diagram over named components, e.g.
/// `series = [{ block = "hw" }, { koon = { k = 2, of = [...] } }]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum RbdSpec {
    Block(String),
    Series(Vec<RbdSpec>),
    Parallel(Vec<RbdSpec>),
    Koon { k: usize, of: Vec<RbdSpec> },
}

impl RbdSpec {
    fn blocks<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            RbdSpec::Block(b) => out.push(b),
            RbdSpec::Series(ch) | RbdSpec::Parallel(ch) | RbdSpec::Koon { of: ch, .. } => {
                ch.iter().for_each(|c| c.blocks(out))
            }
        }
    }

    fn resolve(&self, components: &BTreeMap<String, ComponentTimes>) -> Result<RbdNode> {
        let all = |ch: &[RbdSpec]| ch.iter().map(|c| c.resolve(components)).collect::<Result<Vec<_>>>();
        Ok(match self {
            RbdSpec::Block(name) => {
                let t = components
                    .get(name)
                    .ok_or_else(|| Error::structural(format!("block {name}"), "component is not defined"))?;
                RbdNode::Block(ComponentSpec {
                    name: name.clone(),
                    mttf: t.mttf,
                    mttr: t.mttr,
                })
            }
            RbdSpec::Series(ch) => RbdNode::Series(all(ch)?),
            RbdSpec::Parallel(ch) => RbdNode::Parallel(all(ch)?),
            RbdSpec::Koon { k, of } => RbdNode::KooN {
                k: *k,
                children: all(of)?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    pub places: Vec<PlaceSpec>,
    pub transitions: Vec<TransitionSpec>,
    pub arcs: Vec<ArcSpec>,
    /// Default metric, in `P{...}` / `E{...}` syntax.
    pub metric: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaceSpec {
    pub name: String,
    #[serde(default)]
    pub tokens: u32,
}

/// Timed when `rate` is given, immediate when `weight` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub name: String,
    pub rate: Option<f64>,
    pub semantics: Option<Semantics>,
    pub weight: Option<f64>,
    pub priority: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Single,
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpec {
    pub kind: ArcSpecKind,
    pub place: String,
    pub transition: String,
    #[serde(default = "one")]
    pub multiplicity: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcSpecKind {
    Input,
    Output,
    Inhibitor,
}

impl NetSpec {
    pub fn build(&self, name: &str) -> Result<SpnModel> {
        let mut b = SpnBuilder::new();
        for p in &self.places {
            b = b.place(&p.name, p.tokens);
        }
        for t in &self.transitions {
            b = match (t.rate, t.weight) {
                (Some(rate), None) => {
                    let sem = match t.semantics.unwrap_or(Semantics::Single) {
                        Semantics::Single => ServerSemantics::Single,
                        Semantics::Infinite => ServerSemantics::Infinite,
                    };
                    b.timed(&t.name, rate, sem)
                }
                (None, Some(weight)) => b.immediate(&t.name, weight, t.priority.unwrap_or(1)),
                _ => {
                    return Err(Error::structural(
                        format!("spn.{name}.{}", t.name),
                        "give exactly one of rate (timed) or weight (immediate)",
                    ))
                }
            };
        }
        for a in &self.arcs {
            b = match a.kind {
                ArcSpecKind::Input => b.input(&a.place, &a.transition, a.multiplicity),
                ArcSpecKind::Output => b.output(&a.transition, &a.place, a.multiplicity),
                ArcSpecKind::Inhibitor => b.inhibitor(&a.place, &a.transition, a.multiplicity),
            };
        }
        b.build().map_err(|e| match e {
            Error::Structural { node, reason } => Error::structural(format!("spn.{name}: {node}"), reason),
            other => other,
        })
    }

    pub fn metric(&self) -> Result<Option<MetricExpr>> {
        self.metric.as_deref().map(MetricExpr::parse).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub reports: Vec<String>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            reports: REPORTS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Hex SHA-256 of the scenario text, embedded in every report.
pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn offending_key(message: &str) -> Option<String> {
    let rest = message
        .split_once("unknown field `")
        .or_else(|| message.split_once("missing field `"))?
        .1;
    rest.split_once('`').map(|(k, _)| k.to_string())
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map_or((0, 0), |s| line_column(text, s.start));
            let message = e.message().trim().to_string();
            Error::Parse {
                line,
                column,
                key: offending_key(&message),
                message,
            }
        })
    }

    pub fn load(path: &Path) -> Result<(Scenario, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok((Scenario::parse(&text)?, digest(&text)))
    }

    fn component(&self, name: &str) -> Result<ComponentSpec> {
        let t = self
            .components
            .get(name)
            .ok_or_else(|| Error::structural(format!("components.{name}"), "component row is missing"))?;
        Ok(ComponentSpec {
            name: name.to_string(),
            mttf: t.mttf,
            mttr: t.mttr,
        })
    }

    pub fn stack_params(&self) -> Result<StackParams> {
        let p = StackParams {
            hw: self.component("hw")?,
            os: self.component("os")?,
            docker_engine: self.component("docker_engine")?,
            container: self.component("container")?,
            evm: self.component("evm")?,
            eth_client: self.component("eth_client")?,
            dapp: self.component("dapp")?,
            n_miners: self.architecture.n_miners,
            n_servers: self.architecture.n_servers,
            boot_node_dependency: self.architecture.boot_node_dependency,
        };
        p.check()?;
        Ok(p)
    }

    pub fn sweep_config(&self) -> Result<StackSweepConfig> {
        let s = &self.sensitivity;
        let parameters = s
            .parameters
            .iter()
            .map(|p| p.parse::<StackParameter>())
            .collect::<Result<Vec<_>>>()?;
        if parameters.is_empty() {
            return Err(Error::Domain("sensitivity needs at least one parameter".into()));
        }
        if !(s.range > 0.0 && s.range < 1.0) {
            return Err(Error::Domain(format!("sensitivity range {} outside (0, 1)", s.range)));
        }
        if s.points < 2 {
            return Err(Error::Domain("sensitivity needs at least 2 points".into()));
        }
        if s.miners[0] == 0 || s.miners[0] >= s.miners[1] {
            return Err(Error::Domain(format!(
                "miner sweep {}..{} must start at 1 or more and increase",
                s.miners[0], s.miners[1]
            )));
        }
        Ok(StackSweepConfig {
            parameters,
            range: s.range,
            points: s.points,
            miners: (s.miners[0], s.miners[1]),
        })
    }

    pub fn rbd(&self, name: &str) -> Result<RbdNode> {
        let spec = self
            .rbd
            .get(name)
            .ok_or_else(|| Error::structural(format!("rbd.{name}"), "no such diagram"))?;
        let node = spec
            .resolve(&self.components)
            .map_err(|e| prefix(&format!("rbd.{name}"), e))?;
        node.check().map_err(|e| prefix(&format!("rbd.{name}"), e))?;
        Ok(node)
    }

    pub fn net(&self, name: &str) -> Result<(SpnModel, Option<MetricExpr>)> {
        let spec = self
            .spn
            .get(name)
            .ok_or_else(|| Error::structural(format!("spn.{name}"), "no such net"))?;
        Ok((spec.build(name)?, spec.metric()?))
    }

    pub fn cost_section(&self) -> Result<&CostSection> {
        self.cost
            .as_ref()
            .ok_or_else(|| Error::structural("cost", "section is missing"))
    }

    pub fn cost_scenario(&self) -> Result<CostScenario> {
        let c = self.cost_section()?;
        let s = CostScenario {
            components: c.components.clone(),
            tariff: c.tariff,
            hours_per_day: c.hours_per_day,
            days_per_year: c.days_per_year,
            horizon: c.horizon,
        };
        s.check()?;
        Ok(s)
    }

    /// Every problem found without evaluating any model. Empty means runnable.
    pub fn validate(&self) -> Vec<Error> {
        let mut out = Vec::new();
        for (name, t) in &self.components {
            let spec = ComponentSpec {
                name: name.clone(),
                mttf: t.mttf,
                mttr: t.mttr,
            };
            if let Err(e) = spec.check() {
                out.push(prefix(&format!("components.{name}"), e));
            }
        }
        for name in STACK_COMPONENTS {
            if !self.components.contains_key(name) {
                out.push(Error::structural(format!("components.{name}"), "component row is missing"));
            }
        }
        let a = &self.architecture;
        if a.n_miners == 0 || a.n_servers == 0 || a.containers_per_server == 0 {
            out.push(Error::structural(
                "architecture",
                "n_miners, n_servers and containers_per_server must be positive",
            ));
        }
        if let Err(e) = self.sweep_config() {
            out.push(prefix("sensitivity", e));
        }
        if self.coa.max_servers == 0 {
            out.push(Error::structural("coa.max_servers", "must be positive"));
        }
        for (name, spec) in &self.rbd {
            out.extend(self.rbd_diagnostics(name, spec));
        }
        for (name, spec) in &self.spn {
            match spec.build(name) {
                Ok(model) => {
                    if let Err(e) = spec.metric().and_then(|m| m.map(|m| m.compile(&model)).transpose()) {
                        out.push(prefix(&format!("spn.{name}.metric"), e));
                    }
                }
                Err(e) => out.push(e),
            }
        }
        if let Some(c) = &self.cost {
            out.extend(self.cost_diagnostics(c));
        }
        if let Err(e) = self.simulation.config().check() {
            out.push(prefix("simulation", e));
        }
        for r in &self.outputs.reports {
            if !REPORTS.contains(&r.as_str()) {
                out.push(Error::structural("outputs.reports", format!("unknown report {r}")));
            }
        }
        out
    }

    fn rbd_diagnostics(&self, name: &str, spec: &RbdSpec) -> Vec<Error> {
        let mut blocks = Vec::new();
        spec.blocks(&mut blocks);
        let mut out = Vec::new();
        let mut usable = true;
        for b in blocks {
            match self.components.get(b) {
                None => {
                    usable = false;
                    out.push(Error::structural(format!("rbd.{name}: block {b}"), "component is not defined"));
                }
                // already reported under [components]
                Some(t) if ComponentSpec::new(b, t.mttf, t.mttr).is_err() => usable = false,
                Some(_) => {}
            }
        }
        if usable {
            if let Ok(node) = spec.resolve(&self.components) {
                out.extend(node.diagnostics().into_iter().map(|e| prefix(&format!("rbd.{name}"), e)));
            }
        }
        out
    }

    fn cost_diagnostics(&self, c: &CostSection) -> Vec<Error> {
        let mut out = Vec::new();
        if let Err(e) = self.cost_scenario() {
            out.push(prefix("cost", e));
        }
        if !c.components.iter().any(|p| p.name == c.server_component) {
            out.push(Error::structural(
                "cost.server_component",
                format!("no cost component named {}", c.server_component),
            ));
        }
        for o in &c.offers {
            if let Err(e) = o.check() {
                out.push(prefix("cost.offers", e));
            }
        }
        if c.horizon == 0 {
            out.push(Error::structural("cost.horizon", "must be at least one year"));
        }
        if c.maintenance.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            out.push(Error::structural("cost.maintenance", "values must be non-negative"));
        }
        let per = self.architecture.containers_per_server.max(1);
        for &n in &c.instances {
            let servers = n.div_ceil(per) as usize;
            if n == 0 || servers > c.maintenance.len() {
                out.push(Error::structural(
                    "cost.instances",
                    format!("{n} instances need {servers} servers but maintenance covers {}", c.maintenance.len()),
                ));
            }
        }
        out
    }
}

fn prefix(location: &str, e: Error) -> Error {
    match e {
        Error::Structural { node, reason } if node.starts_with(location) => Error::Structural { node, reason },
        Error::Structural { node, reason } => Error::structural(format!("{location}: {node}"), reason),
        Error::Domain(m) => Error::structural(location, m),
        other => Error::structural(location, other.to_string()),
    }
}
