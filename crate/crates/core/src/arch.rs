//! Concrete models of the blockchain service stack.
//!
//! Two block diagrams describe the parts without dependencies: the server
//! (hardware, operating system, container engine) and an Ethereum node
//! container (container, client, EVM, DApp). Their equivalent MTTF and MTTR
//! parameterize a Petri net for the service layer, where a server failure
//! takes every node down and miner repair waits for the boot node. The
//! service availability then feeds a parallel diagram of identical servers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rbd::{eval_availability, AvailabilityResult, ComponentSpec, RbdNode};
use crate::spn::{
    availability_result, reachability, steady_state, MetricExpr, ServerSemantics, SpnBuilder,
    SpnModel, DEFAULT_MAX_STATES,
};

pub const SERVER_ON: &str = "Server_ON";
pub const SERVER_OFF: &str = "Server_OFF";
pub const BN_ON: &str = "BN_ON";
pub const BN_OFF: &str = "BN_OFF";
pub const MN_ON: &str = "MN_ON";
pub const MN_OFF: &str = "MN_OFF";

/// Priority of the transitions that empty the node places after a server failure.
const FLUSH_PRIORITY: u32 = 2;
/// Priority of zero-time repairs (components with MTTR = 0).
const INSTANT_REPAIR_PRIORITY: u32 = 1;

/// Component parameters of the whole stack plus deployment sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackParams {
    pub hw: ComponentSpec,
    pub os: ComponentSpec,
    pub docker_engine: ComponentSpec,
    pub container: ComponentSpec,
    pub evm: ComponentSpec,
    pub eth_client: ComponentSpec,
    pub dapp: ComponentSpec,
    pub n_miners: u32,
    pub n_servers: u32,
    /// Miner repair waits for an operational boot node.
    pub boot_node_dependency: bool,
}

impl StackParams {
    /// Stack parameters with the baseline component values used throughout
    /// the case studies.
    pub fn baseline() -> Self {
        let c = |name: &str, mttf, mttr| ComponentSpec {
            name: name.to_string(),
            mttf,
            mttr,
        };
        StackParams {
            hw: c("HW", 8760.0, 1.66),
            os: c("OS", 2893.0, 0.25),
            docker_engine: c("DE", 2516.0, 0.25),
            container: c("Container", 1258.0, 0.25),
            evm: c("EVM", 788.4, 0.25),
            eth_client: c("EthClient", 788.4, 0.25),
            dapp: c("DApp", 788.4, 0.25),
            n_miners: 1,
            n_servers: 1,
            boot_node_dependency: true,
        }
    }

    pub fn check(&self) -> Result<()> {
        for c in [
            &self.hw,
            &self.os,
            &self.docker_engine,
            &self.container,
            &self.evm,
            &self.eth_client,
            &self.dapp,
        ] {
            c.check()?;
        }
        if self.n_miners == 0 {
            return Err(Error::structural("stack", "n_miners must be at least 1"));
        }
        if self.n_servers == 0 {
            return Err(Error::structural("stack", "n_servers must be at least 1"));
        }
        Ok(())
    }
}

/// Results of the four model layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackResult {
    pub server: AvailabilityResult,
    pub node: AvailabilityResult,
    pub service_spn: AvailabilityResult,
    pub multi_server: AvailabilityResult,
}

/// Mean failure and repair times of one component of the service net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailRepair {
    pub mttf: f64,
    pub mttr: f64,
}

impl FailRepair {
    pub fn new(mttf: f64, mttr: f64) -> Self {
        FailRepair { mttf, mttr }
    }

    fn check(&self, who: &str) -> Result<()> {
        if self.mttf.is_nan() || self.mttf <= 0.0 {
            return Err(Error::structural(
                who,
                format!("MTTF must be positive, got {}", self.mttf),
            ));
        }
        if !self.mttr.is_finite() || self.mttr < 0.0 {
            return Err(Error::structural(
                who,
                format!("MTTR must be finite and non-negative, got {}", self.mttr),
            ));
        }
        Ok(())
    }
}

impl From<&AvailabilityResult> for FailRepair {
    fn from(r: &AvailabilityResult) -> Self {
        FailRepair {
            mttf: r.mttf,
            mttr: r.mttr,
        }
    }
}

/// Inputs of the service net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceSpnParams {
    pub server: FailRepair,
    pub boot_node: FailRepair,
    pub miner: FailRepair,
    pub n_miners: u32,
    /// Miner repair waits for an operational boot node.
    pub boot_node_dependency: bool,
}

impl ServiceSpnParams {
    /// Boot node and miners share the node parameters.
    pub fn new(server: FailRepair, node: FailRepair, n_miners: u32) -> Self {
        ServiceSpnParams {
            server,
            boot_node: node,
            miner: node,
            n_miners,
            boot_node_dependency: true,
        }
    }
}

pub fn build_server_rbd(params: &StackParams) -> RbdNode {
    RbdNode::Series(vec![
        RbdNode::Block(params.hw.clone()),
        RbdNode::Block(params.os.clone()),
        RbdNode::Block(params.docker_engine.clone()),
    ])
}

pub fn build_node_rbd(params: &StackParams) -> RbdNode {
    RbdNode::Series(vec![
        RbdNode::Block(params.container.clone()),
        RbdNode::Block(params.eth_client.clone()),
        RbdNode::Block(params.evm.clone()),
        RbdNode::Block(params.dapp.clone()),
    ])
}

/// Availability metric of the service net: at least one operational miner.
pub fn service_metric() -> MetricExpr {
    MetricExpr::at_least(MN_ON, 1)
}

/// Adds a fail or repair transition. Infinite MTTF drops a failure
/// transition; zero MTTR turns a repair into an immediate transition.
fn add_timing(
    b: SpnBuilder,
    name: &str,
    mean: f64,
    semantics: ServerSemantics,
) -> (SpnBuilder, bool) {
    if mean.is_infinite() {
        (b, false)
    } else if mean == 0.0 {
        (b.immediate(name, 1.0, INSTANT_REPAIR_PRIORITY), true)
    } else {
        (b.timed(name, 1.0 / mean, semantics), true)
    }
}

/// Service-layer net: server, boot node and `n_miners` miner containers.
///
/// Four inhibitor arcs: a failed server blocks boot-node repair, miner
/// repair and miner failure; a failed boot node blocks miner repair. Two
/// immediate transitions move the ON tokens of the boot node and miners to
/// OFF while the server is down.
pub fn build_service_spn(params: &ServiceSpnParams) -> Result<SpnModel> {
    params.server.check("server")?;
    params.boot_node.check("boot node")?;
    params.miner.check("miner node")?;
    if params.n_miners == 0 {
        return Err(Error::structural("service net", "n_miners must be at least 1"));
    }

    let mut b = SpnBuilder::new()
        .place(SERVER_ON, 1)
        .place(SERVER_OFF, 0)
        .place(BN_ON, 1)
        .place(BN_OFF, 0)
        .place(MN_ON, params.n_miners)
        .place(MN_OFF, 0);

    let single = ServerSemantics::Single;
    let specs = [
        ("server_fail", params.server.mttf, single, SERVER_ON, SERVER_OFF),
        ("server_repair", params.server.mttr, single, SERVER_OFF, SERVER_ON),
        ("bn_fail", params.boot_node.mttf, single, BN_ON, BN_OFF),
        ("bn_repair", params.boot_node.mttr, single, BN_OFF, BN_ON),
        ("mn_fail", params.miner.mttf, ServerSemantics::Infinite, MN_ON, MN_OFF),
        ("mn_repair", params.miner.mttr, single, MN_OFF, MN_ON),
    ];
    let mut present = Vec::new();
    for (name, mean, semantics, from, to) in specs {
        let (next, added) = add_timing(b, name, mean, semantics);
        b = next;
        if added {
            b = b.input(from, name, 1).output(name, to, 1);
            present.push(name);
        }
    }
    let has = |t: &str| present.contains(&t);
    if has("bn_repair") {
        b = b.inhibitor(SERVER_OFF, "bn_repair", 1);
    }
    if has("mn_repair") {
        b = b.inhibitor(SERVER_OFF, "mn_repair", 1);
        if params.boot_node_dependency {
            b = b.inhibitor(BN_OFF, "mn_repair", 1);
        }
    }
    if has("mn_fail") {
        b = b.inhibitor(SERVER_OFF, "mn_fail", 1);
    }

    for (name, on, off) in [("bn_flush", BN_ON, BN_OFF), ("mn_flush", MN_ON, MN_OFF)] {
        b = b
            .immediate(name, 1.0, FLUSH_PRIORITY)
            .input(SERVER_OFF, name, 1)
            .output(name, SERVER_OFF, 1)
            .input(on, name, 1)
            .output(name, off, 1);
    }
    b.build()
}

/// Solves the service net and reports availability of the miner layer.
pub fn evaluate_service(params: &ServiceSpnParams) -> Result<AvailabilityResult> {
    let net = build_service_spn(params)?;
    let ctmc = reachability(&net, DEFAULT_MAX_STATES)?;
    let pi = steady_state(&ctmc)?;
    availability_result(&net, &ctmc, &pi, &service_metric())
}

/// `n_servers` identical blocks in parallel.
pub fn build_multi_server_rbd(per_server_availability: f64, n_servers: u32) -> Result<RbdNode> {
    let spec = ComponentSpec::from_availability("server", per_server_availability)?;
    build_multi_server_rbd_from(&spec, n_servers)
}

/// `n_servers` copies of `server` in parallel.
pub fn build_multi_server_rbd_from(server: &ComponentSpec, n_servers: u32) -> Result<RbdNode> {
    if n_servers == 0 {
        return Err(Error::structural("multi-server", "n_servers must be at least 1"));
    }
    Ok(RbdNode::Parallel(
        (0..n_servers)
            .map(|i| {
                let mut s = server.clone();
                s.name = format!("{}{}", server.name, i + 1);
                RbdNode::Block(s)
            })
            .collect(),
    ))
}

/// Runs the hierarchical pipeline: server and node diagrams, the service
/// net fed with their equivalent MTTF/MTTR, and the parallel servers fed
/// with the service result.
pub fn evaluate_stack(params: &StackParams) -> Result<StackResult> {
    params.check()?;
    let server = eval_availability(&build_server_rbd(params))?;
    let node = eval_availability(&build_node_rbd(params))?;
    let service_spn = evaluate_service(&ServiceSpnParams {
        boot_node_dependency: params.boot_node_dependency,
        ..ServiceSpnParams::new(FailRepair::from(&server), FailRepair::from(&node), params.n_miners)
    })?;
    let per_server = ComponentSpec {
        name: "server".into(),
        mttf: service_spn.mttf,
        mttr: service_spn.mttr,
    };
    let multi_server = eval_availability(&build_multi_server_rbd_from(
        &per_server,
        params.n_servers,
    )?)?;
    Ok(StackResult {
        server,
        node,
        service_spn,
        multi_server,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spn::{enabled, fire, Marking};

    fn table3() -> ServiceSpnParams {
        ServiceSpnParams::new(
            FailRepair::new(1166.48, 0.43),
            FailRepair::new(271.9, 0.25),
            1,
        )
    }

    #[test]
    fn server_and_node_diagrams() {
        let p = StackParams::baseline();
        let s = eval_availability(&build_server_rbd(&p)).unwrap();
        assert!((s.availability - 0.999625).abs() < 1e-6);
        let n = eval_availability(&build_node_rbd(&p)).unwrap();
        assert!((n.availability - 0.998851).abs() < 1e-6);
        assert!((n.mttr - 0.25).abs() < 1e-3);
    }

    #[test]
    fn node_power_law() {
        let mut p = StackParams::baseline();
        for c in [&mut p.container, &mut p.eth_client, &mut p.evm, &mut p.dapp] {
            *c = ComponentSpec::from_availability("x", 0.99).unwrap();
        }
        let n = eval_availability(&build_node_rbd(&p)).unwrap();
        assert!((n.availability - 0.960596).abs() < 1e-6);
    }

    #[test]
    fn perfect_server_components() {
        let mut p = StackParams::baseline();
        for c in [&mut p.hw, &mut p.os, &mut p.docker_engine] {
            c.mttr = 0.0;
        }
        let s = eval_availability(&build_server_rbd(&p)).unwrap();
        assert_eq!(s.availability, 1.0);
    }

    #[test]
    fn missing_component_is_structural() {
        let mut p = StackParams::baseline();
        p.os.mttf = 0.0;
        assert!(matches!(evaluate_stack(&p), Err(Error::Structural { .. })));
    }

    #[test]
    fn net_layout() {
        let net = build_service_spn(&table3()).unwrap();
        let inhibitors = net
            .arcs()
            .iter()
            .filter(|a| a.kind == crate::spn::ArcKind::Inhibitor)
            .count();
        assert_eq!(inhibitors, 4);
        assert_eq!(net.initial_marking(), &Marking(vec![1, 0, 1, 0, 1, 0]));
    }

    #[test]
    fn server_down_enables_only_flushes() {
        let net = build_service_spn(&table3()).unwrap();
        let m = Marking(vec![0, 1, 1, 0, 1, 0]);
        let mut e = enabled(&net, &m).unwrap();
        e.sort();
        assert_eq!(e, vec!["bn_flush", "mn_flush"]);
    }

    #[test]
    fn miner_failure_moves_one_token() {
        let mut params = table3();
        params.n_miners = 2;
        let net = build_service_spn(&params).unwrap();
        let next = fire(&net, net.initial_marking(), "mn_fail").unwrap();
        assert_eq!(next, Marking(vec![1, 0, 1, 0, 1, 1]));
    }

    #[test]
    fn one_miner_has_five_tangible_states() {
        let net = build_service_spn(&table3()).unwrap();
        let ctmc = reachability(&net, 100).unwrap();
        assert_eq!(ctmc.len(), 5);
        for m in ctmc.states() {
            if m.0[1] >= 1 {
                assert_eq!((m.0[2], m.0[4]), (0, 0));
            }
        }
    }

    #[test]
    fn service_availability_near_reported_value() {
        let r = evaluate_service(&table3()).unwrap();
        assert!((r.availability - 0.9982).abs() < 5e-4, "{}", r.availability);
    }

    #[test]
    fn never_failing_nodes_reduce_to_server() {
        let server = FailRepair::new(1166.48, 0.43);
        let params = ServiceSpnParams::new(server, FailRepair::new(f64::INFINITY, 0.25), 1);
        let r = evaluate_service(&params).unwrap();
        let a = 1166.48 / (1166.48 + 0.43);
        // after a server repair the boot node and then the miner are repaired
        assert!(r.availability < a);
        let instant = ServiceSpnParams::new(server, FailRepair::new(f64::INFINITY, 0.0), 1);
        let r = evaluate_service(&instant).unwrap();
        assert!((r.availability - a).abs() < 1e-12);
    }

    #[test]
    fn degenerate_perfect_stack() {
        let mut p = StackParams::baseline();
        for c in [
            &mut p.hw,
            &mut p.os,
            &mut p.docker_engine,
            &mut p.container,
            &mut p.evm,
            &mut p.eth_client,
            &mut p.dapp,
        ] {
            c.mttr = 0.0;
        }
        let r = evaluate_stack(&p).unwrap();
        assert_eq!(r.server.availability, 1.0);
        assert_eq!(r.node.availability, 1.0);
        assert_eq!(r.service_spn.availability, 1.0);
        assert_eq!(r.multi_server.availability, 1.0);
    }

    #[test]
    fn multi_server_closed_forms() {
        let one = eval_availability(&build_multi_server_rbd(0.9982, 1).unwrap()).unwrap();
        assert!((one.availability - 0.9982).abs() < 1e-12);
        let two = eval_availability(&build_multi_server_rbd(0.9982, 2).unwrap()).unwrap();
        assert!((two.availability - 0.99999676).abs() < 1e-12);
        let four = eval_availability(&build_multi_server_rbd(0.9982, 4).unwrap()).unwrap();
        assert!((four.unavailability - 0.0018f64.powi(4)).abs() < 1e-20);
    }

    #[test]
    fn dependency_only_hurts() {
        let mut free = table3();
        free.boot_node_dependency = false;
        let dep = evaluate_service(&table3()).unwrap();
        let free = evaluate_service(&free).unwrap();
        assert!(free.availability >= dep.availability);
    }
}
