//! Reliability block diagrams.
//!
//! A diagram is a tree of [`RbdNode`]s whose leaves are two-state
//! components with exponential failure and repair times. Evaluation walks
//! the tree once and carries three quantities per node: availability,
//! unavailability and the steady-state failure frequency (up-to-down
//! transitions per hour). The equivalent MTTF and MTTR of any subtree follow
//! from those as `A / f` and `U / f`, which for a series of blocks reduces
//! to the rate-sum rule `1 / sum(1 / mttf_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hours in the accounting year used for downtime.
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Heterogeneous K-out-of-N blocks are enumerated exhaustively up to this size.
pub const MAX_ENUMERATED_CHILDREN: usize = 24;

/// A named component with mean time to failure and mean time to repair, in hours.
///
/// `mttf` may be `f64::INFINITY` for a component that never fails and `mttr`
/// may be zero for one that is repaired instantly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    pub mttf: f64,
    pub mttr: f64,
}

impl ComponentSpec {
    pub fn new(name: impl Into<String>, mttf: f64, mttr: f64) -> Result<Self> {
        let spec = ComponentSpec {
            name: name.into(),
            mttf,
            mttr,
        };
        spec.check()?;
        Ok(spec)
    }

    /// A component carrying only an availability figure, normalised to a
    /// one-hour MTTR.
    pub fn from_availability(name: impl Into<String>, availability: f64) -> Result<Self> {
        let name = name.into();
        if !(availability > 0.0 && availability <= 1.0) {
            return Err(Error::Domain(format!(
                "availability of {name} must lie in (0, 1], got {availability}"
            )));
        }
        if availability == 1.0 {
            return ComponentSpec::new(name, f64::INFINITY, 1.0);
        }
        ComponentSpec::new(name, availability / (1.0 - availability), 1.0)
    }

    pub fn check(&self) -> Result<()> {
        if self.mttf.is_nan() || self.mttf <= 0.0 {
            return Err(Error::structural(
                &self.name,
                format!("MTTF must be positive, got {}", self.mttf),
            ));
        }
        if !self.mttr.is_finite() || self.mttr < 0.0 {
            return Err(Error::structural(
                &self.name,
                format!("MTTR must be finite and non-negative, got {}", self.mttr),
            ));
        }
        Ok(())
    }

    pub fn availability(&self) -> f64 {
        if self.mttf.is_infinite() {
            1.0
        } else {
            self.mttf / (self.mttf + self.mttr)
        }
    }

    /// Failure rate per hour, zero for a component that never fails.
    pub fn failure_rate(&self) -> f64 {
        1.0 / self.mttf
    }

    /// Repair rate per hour, infinite for instantaneous repair.
    pub fn repair_rate(&self) -> f64 {
        if self.mttr == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.mttr
        }
    }

    fn measures(&self) -> Measures {
        if self.mttf.is_infinite() {
            return Measures {
                up: 1.0,
                down: 0.0,
                frequency: 0.0,
            };
        }
        let cycle = self.mttf + self.mttr;
        Measures {
            up: self.mttf / cycle,
            down: self.mttr / cycle,
            frequency: 1.0 / cycle,
        }
    }
}

/// Block diagram tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RbdNode {
    Block(ComponentSpec),
    Series(Vec<RbdNode>),
    Parallel(Vec<RbdNode>),
    KooN { k: usize, children: Vec<RbdNode> },
}

/// Steady-state measures of a block diagram or of a state-space model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityResult {
    pub availability: f64,
    pub unavailability: f64,
    /// Expected unavailable hours per year.
    pub downtime: f64,
    pub mttf: f64,
    pub mttr: f64,
    pub nines: f64,
}

impl AvailabilityResult {
    /// Builds a result from availability, unavailability and the
    /// steady-state failure frequency (failures per hour).
    pub fn from_frequency(availability: f64, unavailability: f64, frequency: f64) -> Self {
        let (mttf, mttr) = if frequency > 0.0 {
            (availability / frequency, unavailability / frequency)
        } else {
            (f64::INFINITY, 0.0)
        };
        AvailabilityResult {
            availability,
            unavailability,
            downtime: unavailability * HOURS_PER_YEAR,
            mttf,
            mttr,
            nines: -unavailability.log10(),
        }
    }

    /// Annual downtime in minutes.
    pub fn downtime_minutes(&self) -> f64 {
        self.downtime * 60.0
    }

    /// The system class of the number-of-nines scale, if it reaches one nine.
    pub fn nines_class(&self) -> Option<&'static str> {
        nines_class(self.nines)
    }
}

/// Labels of the number-of-nines classification, starting at one nine.
const NINES_CLASSES: [&str; 7] = [
    "unmanaged",
    "managed",
    "well managed",
    "fault tolerant",
    "high availability",
    "very high availability",
    "ultra availability",
];

/// Maps a (possibly fractional) number of nines onto its system class.
/// Seven or more nines are all "ultra availability".
pub fn nines_class(nines: f64) -> Option<&'static str> {
    if nines.is_nan() {
        return None;
    }
    // 0.99999 gives 4.9999999999 in floating point
    let whole = (nines + 1e-9).floor();
    if whole < 1.0 {
        return None;
    }
    let idx = (whole as usize).min(NINES_CLASSES.len()) - 1;
    Some(NINES_CLASSES[idx])
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Measures {
    up: f64,
    down: f64,
    frequency: f64,
}

impl RbdNode {
    pub fn block(name: impl Into<String>, mttf: f64, mttr: f64) -> Result<Self> {
        Ok(RbdNode::Block(ComponentSpec::new(name, mttf, mttr)?))
    }

    fn label(&self) -> String {
        match self {
            RbdNode::Block(c) => format!("block {}", c.name),
            RbdNode::Series(_) => "series".to_string(),
            RbdNode::Parallel(_) => "parallel".to_string(),
            RbdNode::KooN { k, children } => format!("{k}-out-of-{}", children.len()),
        }
    }

    /// Returns every structural problem in the tree, each naming the path
    /// to the offending node.
    pub fn diagnostics(&self) -> Vec<Error> {
        let mut out = Vec::new();
        self.collect_issues("root", &mut out);
        out
    }

    /// Fails with the first structural problem found.
    pub fn check(&self) -> Result<()> {
        match self.diagnostics().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn collect_issues(&self, path: &str, out: &mut Vec<Error>) {
        let here = format!("{path}/{}", self.label());
        let children = match self {
            RbdNode::Block(c) => {
                if let Err(e) = c.check() {
                    let reason = match e {
                        Error::Structural { reason, .. } => reason,
                        other => other.to_string(),
                    };
                    out.push(Error::structural(here, reason));
                }
                return;
            }
            RbdNode::Series(ch) | RbdNode::Parallel(ch) => ch,
            RbdNode::KooN { k, children } => {
                if *k == 0 || *k > children.len() {
                    out.push(Error::structural(
                        &here,
                        format!("k = {k} must lie in 1..={}", children.len()),
                    ));
                }
                children
            }
        };
        if children.is_empty() {
            out.push(Error::structural(&here, "composite block has no children"));
        }
        for (i, child) in children.iter().enumerate() {
            child.collect_issues(&format!("{here}[{i}]"), out);
        }
    }

    fn measures(&self) -> Result<Measures> {
        match self {
            RbdNode::Block(c) => Ok(c.measures()),
            RbdNode::Series(children) => {
                let ms = children_measures(children)?;
                let up: f64 = ms.iter().map(|m| m.up).product();
                let frequency = ms
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m.frequency * product_except(&ms, i, |o| o.up))
                    .sum();
                Ok(Measures {
                    up,
                    down: 1.0 - up,
                    frequency,
                })
            }
            RbdNode::Parallel(children) => {
                let ms = children_measures(children)?;
                let down: f64 = ms.iter().map(|m| m.down).product();
                let frequency = ms
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m.frequency * product_except(&ms, i, |o| o.down))
                    .sum();
                Ok(Measures {
                    up: 1.0 - down,
                    down,
                    frequency,
                })
            }
            RbdNode::KooN { k, children } => {
                let ms = children_measures(children)?;
                let k = *k;
                let n = ms.len();
                if k == 0 || k > n {
                    return Err(Error::structural(
                        self.label(),
                        format!("k = {k} must lie in 1..={n}"),
                    ));
                }
                if ms.iter().all(|m| *m == ms[0]) {
                    Ok(koon_identical(k, n, ms[0]))
                } else {
                    koon_enumerated(k, &ms)
                }
            }
        }
    }
}

fn children_measures(children: &[RbdNode]) -> Result<Vec<Measures>> {
    if children.is_empty() {
        return Err(Error::structural(
            "composite block",
            "composite block has no children",
        ));
    }
    children.iter().map(RbdNode::measures).collect()
}

fn product_except(ms: &[Measures], skip: usize, f: impl Fn(&Measures) -> f64) -> f64 {
    ms.iter()
        .enumerate()
        .filter(|(j, _)| *j != skip)
        .map(|(_, m)| f(m))
        .product()
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn koon_identical(k: usize, n: usize, m: Measures) -> Measures {
    let term = |i: usize| binomial(n, i) * m.up.powi(i as i32) * m.down.powi((n - i) as i32);
    let up: f64 = (k..=n).map(term).sum();
    let down: f64 = (0..k).map(term).sum();
    // some child fails while exactly k - 1 of the other n - 1 are up
    let critical =
        binomial(n - 1, k - 1) * m.up.powi(k as i32 - 1) * m.down.powi((n - k) as i32);
    Measures {
        up,
        down,
        frequency: n as f64 * m.frequency * critical,
    }
}

fn koon_enumerated(k: usize, ms: &[Measures]) -> Result<Measures> {
    let n = ms.len();
    if n > MAX_ENUMERATED_CHILDREN {
        return Err(Error::Domain(format!(
            "heterogeneous {k}-out-of-{n} block exceeds the enumeration limit of {MAX_ENUMERATED_CHILDREN} children"
        )));
    }
    let mut up = 0.0;
    let mut down = 0.0;
    for mask in 0u32..(1u32 << n) {
        let p: f64 = ms
            .iter()
            .enumerate()
            .map(|(i, m)| if mask & (1 << i) != 0 { m.up } else { m.down })
            .product();
        if mask.count_ones() as usize >= k {
            up += p;
        } else {
            down += p;
        }
    }
    let frequency = (0..n)
        .map(|i| {
            let others: Vec<Measures> = ms
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, m)| *m)
                .collect();
            ms[i].frequency * exactly_up(&others, k - 1)
        })
        .sum();
    Ok(Measures {
        up,
        down,
        frequency,
    })
}

/// Probability that exactly `count` of the independent children are up.
fn exactly_up(ms: &[Measures], count: usize) -> f64 {
    let mut dist = vec![0.0; ms.len() + 1];
    dist[0] = 1.0;
    for (seen, m) in ms.iter().enumerate() {
        for j in (0..=seen + 1).rev() {
            let stay = dist[j] * m.down;
            let rise = if j > 0 { dist[j - 1] * m.up } else { 0.0 };
            dist[j] = stay + rise;
        }
    }
    dist.get(count).copied().unwrap_or(0.0)
}

/// Steady-state availability, downtime and equivalent MTTF/MTTR of a diagram.
pub fn eval_availability(node: &RbdNode) -> Result<AvailabilityResult> {
    node.check()?;
    let m = node.measures()?;
    Ok(AvailabilityResult::from_frequency(m.up, m.down, m.frequency))
}

/// Equivalent MTTF of exponential components in series: `1 / sum(1 / mttf_i)`.
pub fn series_mttf(components: &[ComponentSpec]) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::structural("series", "no components"));
    }
    for c in components {
        c.check()?;
    }
    let rate: f64 = components.iter().map(ComponentSpec::failure_rate).sum();
    Ok(1.0 / rate)
}

/// MTTR implied by an MTTF and an availability: `mttf * (1 - A) / A`.
pub fn derive_mttr(mttf: f64, availability: f64) -> Result<f64> {
    if !(mttf > 0.0) {
        return Err(Error::Domain(format!("MTTF must be positive, got {mttf}")));
    }
    if availability >= 1.0 {
        return Err(Error::Domain(
            "perfect availability has no finite repair characterization".into(),
        ));
    }
    if !(availability > 0.0) {
        return Err(Error::Domain(format!(
            "availability must lie in (0, 1), got {availability}"
        )));
    }
    Ok(mttf * (1.0 - availability) / availability)
}

/// Like [`derive_mttr`] but maps perfect availability with a finite MTTF to
/// a zero MTTR.
pub fn derive_mttr_or_zero(mttf: f64, availability: f64) -> Result<f64> {
    if availability == 1.0 && mttf.is_finite() && mttf > 0.0 {
        return Ok(0.0);
    }
    derive_mttr(mttf, availability)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(name: &str, mttf: f64, mttr: f64) -> RbdNode {
        RbdNode::block(name, mttf, mttr).unwrap()
    }

    fn server() -> RbdNode {
        RbdNode::Series(vec![
            c("HW", 8760.0, 1.66),
            c("OS", 2893.0, 0.25),
            c("DE", 2516.0, 0.25),
        ])
    }

    #[test]
    fn server_series_matches_hand_product() {
        let r = eval_availability(&server()).unwrap();
        let oracle = (8760.0 / 8761.66) * (2893.0 / 2893.25) * (2516.0 / 2516.25);
        assert!((r.availability - oracle).abs() < 1e-15);
        assert!((r.availability - 0.999625).abs() < 1e-6);
        assert!((r.downtime - 3.2866).abs() < 1e-4);
        assert!((r.mttf - 1166.489).abs() < 1e-3);
        assert!((r.mttr - 0.43781).abs() < 1e-5);
    }

    #[test]
    fn perfect_block() {
        let r = eval_availability(&c("X", 100.0, 0.0)).unwrap();
        assert_eq!(r.availability, 1.0);
        assert_eq!(r.downtime, 0.0);
        assert_eq!(r.mttr, 0.0);
        assert_eq!(r.mttf, 100.0);
    }

    #[test]
    fn two_parallel_servers() {
        let x = RbdNode::Block(ComponentSpec::from_availability("X", 0.9982).unwrap());
        let r = eval_availability(&RbdNode::Parallel(vec![x.clone(), x])).unwrap();
        assert!((r.availability - (1.0 - 0.0018f64 * 0.0018)).abs() < 1e-12);
        assert!((r.availability - 0.99999676).abs() < 1e-10);
        assert_eq!(r.nines_class(), Some("high availability"));
    }

    #[test]
    fn empty_children_are_rejected_with_path() {
        let bad = RbdNode::Series(vec![c("A", 1.0, 1.0), RbdNode::Parallel(vec![])]);
        match eval_availability(&bad) {
            Err(Error::Structural { node, .. }) => assert_eq!(node, "root/series[1]/parallel"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn k_out_of_range() {
        let bad = RbdNode::KooN {
            k: 3,
            children: vec![c("A", 1.0, 1.0), c("B", 1.0, 1.0)],
        };
        assert_eq!(bad.diagnostics().len(), 1);
        let zero = RbdNode::KooN {
            k: 0,
            children: vec![c("A", 1.0, 1.0)],
        };
        assert!(eval_availability(&zero).is_err());
    }

    #[test]
    fn heterogeneous_koon_limit() {
        let children: Vec<RbdNode> = (0..25)
            .map(|i| c(&format!("c{i}"), 100.0 + i as f64, 1.0))
            .collect();
        let node = RbdNode::KooN { k: 2, children };
        assert!(matches!(eval_availability(&node), Err(Error::Domain(_))));
    }

    #[test]
    fn series_mttf_cases() {
        let specs = |xs: &[f64]| -> Vec<ComponentSpec> {
            xs.iter()
                .map(|&m| ComponentSpec::new("c", m, 0.25).unwrap())
                .collect()
        };
        let oracle = 1.0 / (1.0 / 8760.0 + 1.0 / 2893.0 + 1.0 / 2516.0);
        let got = series_mttf(&specs(&[8760.0, 2893.0, 2516.0])).unwrap();
        assert!((got - oracle).abs() < 1e-9);
        assert!((got - 1166.489).abs() < 1e-3);
        let got = series_mttf(&specs(&[1258.0, 788.4, 788.4, 788.4])).unwrap();
        assert!((got - 217.387).abs() < 1e-3);
        assert_eq!(series_mttf(&specs(&[42.0])).unwrap(), 42.0);
        assert!(series_mttf(&[]).is_err());
    }

    #[test]
    fn derive_mttr_cases() {
        let a = (8760.0 / 8761.66) * (2893.0 / 2893.25) * (2516.0 / 2516.25);
        let mttf = 1.0 / (1.0 / 8760.0 + 1.0 / 2893.0 + 1.0 / 2516.0);
        assert!((derive_mttr(mttf, a).unwrap() - 0.43781).abs() < 1e-5);
        assert_eq!(derive_mttr(100.0, 0.5).unwrap(), 100.0);
        assert!(derive_mttr(100.0, 1.0).is_err());
        assert_eq!(derive_mttr_or_zero(100.0, 1.0).unwrap(), 0.0);
        assert!(derive_mttr_or_zero(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn containers_series_keeps_quarter_hour_mttr() {
        let node = RbdNode::Series(vec![
            c("Container", 1258.0, 0.25),
            c("EthClient", 788.4, 0.25),
            c("EVM", 788.4, 0.25),
            c("DApp", 788.4, 0.25),
        ]);
        let r = eval_availability(&node).unwrap();
        assert!((r.availability - 0.998851).abs() < 1e-6);
        assert!((r.mttr - 0.25).abs() < 1e-3);
        assert!((derive_mttr(r.mttf, r.availability).unwrap() - r.mttr).abs() < 1e-12);
    }

    #[test]
    fn nines_labels() {
        assert_eq!(nines_class(0.5), None);
        assert_eq!(nines_class(1.0), Some("unmanaged"));
        assert_eq!(nines_class(-(1e-5f64).log10()), Some("high availability"));
        assert_eq!(nines_class(12.0), Some("ultra availability"));
    }

    fn arb_block() -> impl Strategy<Value = ComponentSpec> {
        (1.0f64..1e4, 0.01f64..50.0).prop_map(|(f, r)| ComponentSpec::new("b", f, r).unwrap())
    }

    proptest! {
        #[test]
        fn series_below_min_parallel_above_max(specs in prop::collection::vec(arb_block(), 1..6)) {
            let blocks: Vec<RbdNode> = specs.iter().cloned().map(RbdNode::Block).collect();
            let avs: Vec<f64> = specs.iter().map(ComponentSpec::availability).collect();
            let lo = avs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = avs.iter().cloned().fold(0.0, f64::max);
            let s = eval_availability(&RbdNode::Series(blocks.clone())).unwrap();
            let p = eval_availability(&RbdNode::Parallel(blocks)).unwrap();
            prop_assert!(s.availability <= lo + 1e-15);
            prop_assert!(p.availability >= hi - 1e-15);
        }

        #[test]
        fn koon_extremes_match_series_and_parallel(spec in arb_block(), n in 1usize..8) {
            let blocks = vec![RbdNode::Block(spec); n];
            let series = eval_availability(&RbdNode::Series(blocks.clone())).unwrap();
            let parallel = eval_availability(&RbdNode::Parallel(blocks.clone())).unwrap();
            let all = eval_availability(&RbdNode::KooN { k: n, children: blocks.clone() }).unwrap();
            let any = eval_availability(&RbdNode::KooN { k: 1, children: blocks }).unwrap();
            prop_assert!((all.availability - series.availability).abs() < 1e-14);
            prop_assert!((any.availability - parallel.availability).abs() < 1e-14);
            prop_assert!((all.mttf - series.mttf).abs() <= 1e-9 * series.mttf);
            prop_assert!((any.mttr - parallel.mttr).abs() <= 1e-9 * parallel.mttr);
        }

        #[test]
        fn enumeration_matches_binomial(spec in arb_block(), n in 1usize..=10, kf in 0.0f64..1.0) {
            let k = 1 + ((n - 1) as f64 * kf) as usize;
            let m = spec.measures();
            let by_formula = koon_identical(k, n, m);
            let by_enum = koon_enumerated(k, &vec![m; n]).unwrap();
            prop_assert!((by_formula.up - by_enum.up).abs() < 1e-12);
            prop_assert!((by_formula.frequency - by_enum.frequency).abs() <= 1e-12 * by_formula.frequency.max(1e-300));
        }

        #[test]
        fn mttr_round_trip(spec in arb_block()) {
            let a = spec.availability();
            let mttr = derive_mttr(spec.mttf, a).unwrap();
            let back = spec.mttf / (spec.mttf + mttr);
            prop_assert!((back - a).abs() < 1e-12);
        }

        #[test]
        fn reordering_children_is_harmless(specs in prop::collection::vec(arb_block(), 2..6), rot in 0usize..6) {
            let blocks: Vec<RbdNode> = specs.into_iter().map(RbdNode::Block).collect();
            let mut rotated = blocks.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            for make in [RbdNode::Series as fn(Vec<RbdNode>) -> RbdNode, RbdNode::Parallel] {
                let a = eval_availability(&make(blocks.clone())).unwrap();
                let b = eval_availability(&make(rotated.clone())).unwrap();
                prop_assert!((a.availability - b.availability).abs() < 1e-14);
            }
        }

        #[test]
        fn result_is_self_consistent(specs in prop::collection::vec(arb_block(), 1..5)) {
            let node = RbdNode::Series(specs.into_iter().map(RbdNode::Block).collect());
            let r = eval_availability(&node).unwrap();
            prop_assert!((r.unavailability - (1.0 - r.availability)).abs() < 1e-14);
            prop_assert!((r.mttf / (r.mttf + r.mttr) - r.availability).abs() < 1e-12);
            prop_assert!((r.downtime - r.unavailability * HOURS_PER_YEAR).abs() < 1e-9);
        }
    }
}
