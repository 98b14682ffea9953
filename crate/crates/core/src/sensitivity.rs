//! Percentage-difference sensitivity analysis.
//!
//! For a scalar output `Y` and a parameter swept over a set of values with
//! every other parameter at its nominal value, the index is
//! `(max Y - min Y) / max Y`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::{evaluate_service, ServiceSpnParams};
use crate::error::{Error, Result};

/// Default relative half-width of a sweep.
pub const DEFAULT_RANGE: f64 = 0.5;
/// Default number of evenly spaced sweep points, endpoints included.
pub const DEFAULT_POINTS: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSweep {
    pub parameter: String,
    pub values: Vec<f64>,
}

impl ParamSweep {
    pub fn new(parameter: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let parameter = parameter.into();
        if values.len() < 2 {
            return Err(Error::Domain(format!(
                "sweep of {parameter} needs at least two values"
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "sweep of {parameter} contains non-finite value {v}"
            )));
        }
        Ok(ParamSweep { parameter, values })
    }

    /// `points` evenly spaced values over `nominal * (1 -+ range)`.
    pub fn around(
        parameter: impl Into<String>,
        nominal: f64,
        range: f64,
        points: usize,
    ) -> Result<Self> {
        if !(range > 0.0 && range < 1.0) {
            return Err(Error::Domain(format!("range must lie in (0, 1), got {range}")));
        }
        if points < 2 {
            return Err(Error::Domain("a sweep needs at least two points".into()));
        }
        let lo = nominal * (1.0 - range);
        let hi = nominal * (1.0 + range);
        let step = (hi - lo) / (points - 1) as f64;
        let values = (0..points)
            .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
            .collect();
        ParamSweep::new(parameter, values)
    }

    /// Every integer in `lo..=hi`.
    pub fn integers(parameter: impl Into<String>, lo: u32, hi: u32) -> Result<Self> {
        ParamSweep::new(parameter, (lo..=hi).map(f64::from).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityIndex {
    pub parameter: String,
    pub index: f64,
    pub rank: usize,
}

/// Index of one parameter plus the output observed at each sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub index: SensitivityIndex,
    pub curve: Vec<(f64, f64)>,
}

/// Evaluates the model over the sweep and returns `(max - min) / max`.
pub fn percentage_difference<F>(evaluate: F, sweep: &ParamSweep) -> Result<SweepOutcome>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let outputs: Vec<f64> = sweep
        .values
        .par_iter()
        .map(|&v| evaluate(v))
        .collect::<Result<_>>()?;
    let max = outputs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = outputs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        return Err(Error::UndefinedIndex(sweep.parameter.clone()));
    }
    Ok(SweepOutcome {
        index: SensitivityIndex {
            parameter: sweep.parameter.clone(),
            index: (max - min) / max,
            rank: 1,
        },
        curve: sweep.values.iter().cloned().zip(outputs).collect(),
    })
}

/// Sorts by descending index, ties by parameter name, and assigns ranks 1..K.
pub fn rank_parameters<I>(evaluations: I) -> Vec<SensitivityIndex>
where
    I: IntoIterator<Item = (String, f64)>,
{
    let mut all: Vec<(String, f64)> = evaluations.into_iter().collect();
    all.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    all.into_iter()
        .enumerate()
        .map(|(i, (parameter, index))| SensitivityIndex {
            parameter,
            index,
            rank: i + 1,
        })
        .collect()
}

/// Parameters of the service model exposed to sensitivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StackParameter {
    #[serde(rename = "MTTF_SE")]
    MttfServer,
    #[serde(rename = "MTTR_SE")]
    MttrServer,
    #[serde(rename = "MTTF_MN")]
    MttfMiner,
    #[serde(rename = "MTTR_MN")]
    MttrMiner,
    #[serde(rename = "MTTF_BN")]
    MttfBootNode,
    #[serde(rename = "MTTR_BN")]
    MttrBootNode,
    #[serde(rename = "#Miners", alias = "MINERS")]
    Miners,
}

impl StackParameter {
    pub const ALL: [StackParameter; 7] = [
        StackParameter::MttfServer,
        StackParameter::MttrServer,
        StackParameter::MttfMiner,
        StackParameter::MttrMiner,
        StackParameter::MttfBootNode,
        StackParameter::MttrBootNode,
        StackParameter::Miners,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StackParameter::MttfServer => "MTTF_SE",
            StackParameter::MttrServer => "MTTR_SE",
            StackParameter::MttfMiner => "MTTF_MN",
            StackParameter::MttrMiner => "MTTR_MN",
            StackParameter::MttfBootNode => "MTTF_BN",
            StackParameter::MttrBootNode => "MTTR_BN",
            StackParameter::Miners => "#Miners",
        }
    }

    pub fn nominal(self, p: &ServiceSpnParams) -> f64 {
        match self {
            StackParameter::MttfServer => p.server.mttf,
            StackParameter::MttrServer => p.server.mttr,
            StackParameter::MttfMiner => p.miner.mttf,
            StackParameter::MttrMiner => p.miner.mttr,
            StackParameter::MttfBootNode => p.boot_node.mttf,
            StackParameter::MttrBootNode => p.boot_node.mttr,
            StackParameter::Miners => f64::from(p.n_miners),
        }
    }

    /// Copy of `p` with this parameter set to `value`.
    pub fn apply(self, p: &ServiceSpnParams, value: f64) -> Result<ServiceSpnParams> {
        let mut q = *p;
        match self {
            StackParameter::MttfServer => q.server.mttf = value,
            StackParameter::MttrServer => q.server.mttr = value,
            StackParameter::MttfMiner => q.miner.mttf = value,
            StackParameter::MttrMiner => q.miner.mttr = value,
            StackParameter::MttfBootNode => q.boot_node.mttf = value,
            StackParameter::MttrBootNode => q.boot_node.mttr = value,
            StackParameter::Miners => {
                if value < 1.0 || value.fract() != 0.0 || value > f64::from(u32::MAX) {
                    return Err(Error::Domain(format!(
                        "miner count must be a positive integer, got {value}"
                    )));
                }
                q.n_miners = value as u32;
            }
        }
        Ok(q)
    }
}

impl fmt::Display for StackParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StackParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase();
        let up = up.strip_prefix('#').unwrap_or(&up);
        StackParameter::ALL
            .into_iter()
            .find(|p| p.name().trim_start_matches('#').eq_ignore_ascii_case(up))
            .ok_or_else(|| Error::Domain(format!("unknown sensitivity parameter {s}")))
    }
}

/// Sweep settings for [`stack_sensitivity`].
#[derive(Debug, Clone, PartialEq)]
pub struct StackSweepConfig {
    pub parameters: Vec<StackParameter>,
    pub range: f64,
    pub points: usize,
    /// Inclusive miner-count range used for [`StackParameter::Miners`].
    pub miners: (u32, u32),
}

impl Default for StackSweepConfig {
    fn default() -> Self {
        StackSweepConfig {
            parameters: StackParameter::ALL.to_vec(),
            range: DEFAULT_RANGE,
            points: DEFAULT_POINTS,
            miners: (1, 8),
        }
    }
}

/// Ranked indexes and the impact curve of every swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct StackSensitivity {
    pub ranking: Vec<SensitivityIndex>,
    pub curves: Vec<(StackParameter, Vec<(f64, f64)>)>,
}

impl StackSensitivity {
    pub fn index_of(&self, p: StackParameter) -> Option<&SensitivityIndex> {
        self.ranking.iter().find(|s| s.parameter == p.name())
    }
}

/// Percentage-difference analysis of service availability around `nominal`.
pub fn stack_sensitivity(
    nominal: &ServiceSpnParams,
    config: &StackSweepConfig,
) -> Result<StackSensitivity> {
    let outcomes: Vec<(StackParameter, SweepOutcome)> = config
        .parameters
        .par_iter()
        .map(|&param| {
            let sweep = match param {
                StackParameter::Miners => {
                    ParamSweep::integers(param.name(), config.miners.0, config.miners.1)?
                }
                _ => ParamSweep::around(
                    param.name(),
                    param.nominal(nominal),
                    config.range,
                    config.points,
                )?,
            };
            let eval = |v: f64| Ok(evaluate_service(&param.apply(nominal, v)?)?.availability);
            Ok((param, percentage_difference(eval, &sweep)?))
        })
        .collect::<Result<_>>()?;
    let ranking = rank_parameters(
        outcomes
            .iter()
            .map(|(_, o)| (o.index.parameter.clone(), o.index.index)),
    );
    let mut curves: Vec<(StackParameter, Vec<(f64, f64)>)> =
        outcomes.into_iter().map(|(p, o)| (p, o.curve)).collect();
    curves.sort_by_key(|(p, _)| *p);
    Ok(StackSensitivity { ranking, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_model_has_zero_index() {
        let sweep = ParamSweep::around("x", 10.0, 0.5, 11).unwrap();
        let out = percentage_difference(|_| Ok(0.7), &sweep).unwrap();
        assert_eq!(out.index.index, 0.0);
        assert_eq!(out.curve.len(), 11);
    }

    #[test]
    fn all_zero_outputs_are_undefined() {
        let sweep = ParamSweep::new("x", vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            percentage_difference(|_| Ok(0.0), &sweep),
            Err(Error::UndefinedIndex(_))
        ));
    }

    #[test]
    fn grid_spans_the_range() {
        let s = ParamSweep::around("x", 100.0, 0.5, 11).unwrap();
        assert_eq!(s.values.first(), Some(&50.0));
        assert_eq!(s.values.last(), Some(&150.0));
        assert!((s.values[5] - 100.0).abs() < 1e-12);
        assert!(ParamSweep::new("x", vec![1.0]).is_err());
        assert!(ParamSweep::around("x", 1.0, 1.5, 3).is_err());
    }

    #[test]
    fn ranking_and_ties() {
        let r = rank_parameters(vec![("b".to_string(), 0.1), ("a".to_string(), 0.1)]);
        assert_eq!(r[0].parameter, "a");
        assert_eq!((r[0].rank, r[1].rank), (1, 2));
        let single = rank_parameters(vec![("only".to_string(), 0.3)]);
        assert_eq!(single[0].rank, 1);
    }

    #[test]
    fn parameter_names_parse() {
        for p in StackParameter::ALL {
            assert_eq!(p.name().parse::<StackParameter>().unwrap(), p);
        }
        assert_eq!("#Miners".parse::<StackParameter>().unwrap(), StackParameter::Miners);
        assert!("MTTF_XX".parse::<StackParameter>().is_err());
    }

    proptest! {
        #[test]
        fn index_is_scale_and_order_invariant(
            ys in prop::collection::vec(0.01f64..1.0, 2..12),
            scale in 0.1f64..10.0,
        ) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
            let table = ys.clone();
            let f = |x: f64| Ok(table[x as usize]);
            let fs = |x: f64| Ok(table[x as usize] * scale);
            let fwd = ParamSweep::new("p", xs.clone()).unwrap();
            let mut rev = xs.clone();
            rev.reverse();
            let rev = ParamSweep::new("p", rev).unwrap();
            let a = percentage_difference(f, &fwd).unwrap().index.index;
            let b = percentage_difference(f, &rev).unwrap().index.index;
            let c = percentage_difference(fs, &fwd).unwrap().index.index;
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert_eq!(a, b);
            prop_assert!((a - c).abs() < 1e-12);
        }
    }
}
