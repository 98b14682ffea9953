//! Energy, acquisition and total cost of ownership.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoweredComponent {
    pub name: String,
    /// Power draw in watts.
    pub power_w: f64,
    /// Unit price in USD.
    pub acquisition: f64,
    #[serde(default = "one")]
    pub quantity: u32,
}

fn one() -> u32 {
    1
}

impl PoweredComponent {
    pub fn new(name: impl Into<String>, power_w: f64, acquisition: f64, quantity: u32) -> Self {
        PoweredComponent {
            name: name.into(),
            power_w,
            acquisition,
            quantity,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.power_w.is_finite() && self.power_w >= 0.0) {
            return Err(Error::Domain(format!(
                "component {}: power must be non-negative, got {}",
                self.name, self.power_w
            )));
        }
        if !(self.acquisition.is_finite() && self.acquisition >= 0.0) {
            return Err(Error::Domain(format!(
                "component {}: acquisition cost must be non-negative, got {}",
                self.name, self.acquisition
            )));
        }
        if self.quantity == 0 {
            return Err(Error::Domain(format!(
                "component {}: quantity must be positive",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostScenario {
    pub components: Vec<PoweredComponent>,
    /// USD per kWh.
    pub tariff: f64,
    pub hours_per_day: f64,
    pub days_per_year: f64,
    /// Planning horizon in years.
    pub horizon: u32,
}

impl CostScenario {
    pub fn check(&self) -> Result<()> {
        if !(self.tariff.is_finite() && self.tariff > 0.0) {
            return Err(Error::Domain(format!("tariff must be positive, got {}", self.tariff)));
        }
        if !(self.hours_per_day > 0.0 && self.hours_per_day <= 24.0) {
            return Err(Error::Domain(format!(
                "hours per day must lie in (0, 24], got {}",
                self.hours_per_day
            )));
        }
        if !(self.days_per_year > 0.0 && self.days_per_year <= 366.0) {
            return Err(Error::Domain(format!(
                "days per year must lie in (0, 366], got {}",
                self.days_per_year
            )));
        }
        self.components.iter().try_for_each(PoweredComponent::check)
    }

    /// Copy with the named component's quantity replaced.
    pub fn with_quantity(&self, name: &str, quantity: u32) -> Result<CostScenario> {
        let mut out = self.clone();
        let c = out
            .components
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Domain(format!("no component named {name}")))?;
        c.quantity = quantity;
        Ok(out)
    }
}

/// Yearly energy expense: `power * hours * days / 1000` kWh, times the
/// tariff and the quantity.
pub fn annual_energy_cost(c: &PoweredComponent, tariff: f64, hours_per_day: f64, days_per_year: f64) -> f64 {
    let kwh = c.power_w * hours_per_day * days_per_year / 1000.0;
    kwh * tariff * f64::from(c.quantity)
}

/// Energy expense per component, in scenario order.
pub fn energy_table(scenario: &CostScenario) -> Vec<(String, f64)> {
    scenario
        .components
        .iter()
        .map(|c| {
            let cost = annual_energy_cost(c, scenario.tariff, scenario.hours_per_day, scenario.days_per_year);
            (c.name.clone(), cost)
        })
        .collect()
}

pub fn acquisition_total(scenario: &CostScenario) -> f64 {
    scenario
        .components
        .iter()
        .map(|c| c.acquisition * f64::from(c.quantity))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublicOffer {
    pub provider: String,
    pub instance_type: String,
    /// On-demand price per instance per year, USD.
    pub annual_price: f64,
    pub sla_availability: f64,
}

impl PublicOffer {
    pub fn check(&self) -> Result<()> {
        if !(self.annual_price.is_finite() && self.annual_price > 0.0) {
            return Err(Error::Domain(format!(
                "offer {}: price must be positive, got {}",
                self.provider, self.annual_price
            )));
        }
        if !(self.sla_availability > 0.0 && self.sla_availability <= 1.0) {
            return Err(Error::Domain(format!(
                "offer {}: SLA availability {} outside (0, 1]",
                self.provider, self.sla_availability
            )));
        }
        Ok(())
    }
}

/// Up-front and recurring cost of the private deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivateCost {
    pub servers: u32,
    pub acquisition: f64,
    pub annual_maintenance: f64,
}

/// Private deployment sized for `instances` containers: enough servers at
/// `containers_per_server` each, with maintenance looked up by server count
/// (`maintenance[i]` is the yearly cost for `i + 1` servers).
pub fn private_cost(
    scenario: &CostScenario,
    server_component: &str,
    containers_per_server: u32,
    maintenance: &[f64],
    instances: u32,
) -> Result<PrivateCost> {
    if containers_per_server == 0 || instances == 0 {
        return Err(Error::Domain(
            "instances and containers per server must be positive".into(),
        ));
    }
    let servers = instances.div_ceil(containers_per_server);
    let annual_maintenance = *maintenance.get(servers as usize - 1).ok_or_else(|| {
        Error::Domain(format!(
            "no maintenance cost given for {servers} servers ({instances} instances)"
        ))
    })?;
    let sized = scenario.with_quantity(server_component, servers)?;
    sized.check()?;
    Ok(PrivateCost {
        servers,
        acquisition: acquisition_total(&sized),
        annual_maintenance,
    })
}

pub const PRIVATE: &str = "Private";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcoRow {
    pub year: u32,
    pub option: String,
    pub cumulative: f64,
}

/// Cumulative cost per year, 0..=horizon, private first then each offer.
pub fn tco_timeline(
    private: &PrivateCost,
    offers: &[PublicOffer],
    instances: u32,
    horizon: u32,
) -> Result<Vec<TcoRow>> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least one year".into()));
    }
    offers.iter().try_for_each(PublicOffer::check)?;
    let mut rows = Vec::with_capacity((horizon as usize + 1) * (offers.len() + 1));
    for year in 0..=horizon {
        let y = f64::from(year);
        rows.push(TcoRow {
            year,
            option: PRIVATE.to_string(),
            cumulative: private.acquisition + y * private.annual_maintenance,
        });
        for o in offers {
            rows.push(TcoRow {
                year,
                option: o.provider.clone(),
                cumulative: y * f64::from(instances) * o.annual_price,
            });
        }
    }
    Ok(rows)
}

/// First year in which the private deployment is no more expensive than
/// the offer, if it happens within `horizon`.
pub fn crossover_year(private: &PrivateCost, offer: &PublicOffer, instances: u32, horizon: u32) -> Option<u32> {
    let public_slope = f64::from(instances) * offer.annual_price;
    (0..=horizon).find(|&y| {
        let y = f64::from(y);
        private.acquisition + y * private.annual_maintenance <= y * public_slope
    })
}

/// Round to cents, ties to even.
pub fn round_cents(usd: f64) -> f64 {
    (usd * 100.0).round_ties_even() / 100.0
}

pub fn format_usd(usd: f64) -> String {
    format!("{:.2}", round_cents(usd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scenario() -> CostScenario {
        CostScenario {
            components: vec![
                PoweredComponent::new("server", 122.48, 1884.0, 1),
                PoweredComponent::new("switch", 65.0, 63.0, 1),
                PoweredComponent::new("cooling", 187.48, 310.0, 1),
                PoweredComponent::new("rack", 0.0, 320.0, 1),
            ],
            tariff: 0.16,
            hours_per_day: 24.0,
            days_per_year: 365.0,
            horizon: 5,
        }
    }

    fn offers() -> Vec<PublicOffer> {
        [("Google", 291.24), ("Amazon", 420.48), ("Microsoft", 403.56)]
            .into_iter()
            .map(|(p, price)| PublicOffer {
                provider: p.into(),
                instance_type: "vm".into(),
                annual_price: price,
                sla_availability: 0.999,
            })
            .collect()
    }

    const MAINTENANCE: [f64; 4] = [525.54, 777.78, 1636.13, 2837.82];

    #[test]
    fn energy_per_component() {
        let t = energy_table(&scenario());
        assert_eq!(format_usd(t[1].1), "91.10");
        assert!((t[0].1 - 171.67).abs() < 0.005);
        assert!((t[2].1 - 262.77).abs() < 0.005);
        assert_eq!(t[3].1, 0.0);
    }

    #[test]
    fn acquisition_by_server_count() {
        let s = scenario();
        let totals: Vec<f64> = (1..=4)
            .map(|n| acquisition_total(&s.with_quantity("server", n).unwrap()))
            .collect();
        assert_eq!(totals, [2577.0, 4461.0, 6345.0, 8229.0]);
        let empty = CostScenario { components: vec![], ..s };
        assert_eq!(acquisition_total(&empty), 0.0);
    }

    #[test]
    fn timeline_boundaries_and_first_year() {
        let private = private_cost(&scenario(), "server", 8, &MAINTENANCE, 8).unwrap();
        assert_eq!(private.servers, 1);
        let rows = tco_timeline(&private, &offers(), 8, 5).unwrap();
        assert_eq!(rows.len(), 6 * 4);
        let at = |y: u32, o: &str| {
            rows.iter()
                .find(|r| r.year == y && r.option == o)
                .unwrap()
                .cumulative
        };
        assert_eq!(at(0, PRIVATE), 2577.0);
        assert_eq!(at(0, "Google"), 0.0);
        assert!((at(1, "Google") - 2329.92).abs() < 1e-9);
        assert!(at(1, "Google") < at(1, PRIVATE));
        for y in 0..=5 {
            assert!(at(y, "Amazon") >= at(y, "Google"));
        }
        assert_eq!(crossover_year(&private, &offers()[0], 8, 5), Some(2));
    }

    #[test]
    fn servers_sized_by_instances() {
        for (inst, servers, acq) in [(8, 1, 2577.0), (16, 2, 4461.0), (24, 3, 6345.0), (32, 4, 8229.0)] {
            let p = private_cost(&scenario(), "server", 8, &MAINTENANCE, inst).unwrap();
            assert_eq!((p.servers, p.acquisition), (servers, acq));
        }
        assert!(private_cost(&scenario(), "server", 8, &MAINTENANCE, 40).is_err());
        assert!(private_cost(&scenario(), "gpu", 8, &MAINTENANCE, 8).is_err());
    }

    #[test]
    fn validation() {
        let mut s = scenario();
        assert!(s.check().is_ok());
        s.hours_per_day = 25.0;
        assert!(s.check().is_err());
        let mut s = scenario();
        s.components[0].power_w = -1.0;
        assert!(s.check().is_err());
        assert!(tco_timeline(
            &PrivateCost { servers: 1, acquisition: 1.0, annual_maintenance: 1.0 },
            &offers(),
            8,
            0
        )
        .is_err());
    }

    #[test]
    fn half_even_cents() {
        assert_eq!(format_usd(0.125), "0.12");
        assert_eq!(format_usd(0.375), "0.38");
        assert_eq!(format_usd(2329.92), "2329.92");
    }

    proptest! {
        #[test]
        fn acquisition_is_linear_and_order_free(
            parts in prop::collection::vec((0.0f64..5000.0, 1u32..10), 1..6),
            k in 1u32..5,
        ) {
            let comps: Vec<PoweredComponent> = parts
                .iter()
                .enumerate()
                .map(|(i, &(a, q))| PoweredComponent::new(format!("c{i}"), 1.0, a, q))
                .collect();
            let s = CostScenario { components: comps.clone(), ..scenario() };
            let mut rev = comps.clone();
            rev.reverse();
            let r = CostScenario { components: rev, ..scenario() };
            let total = acquisition_total(&s);
            prop_assert!((total - acquisition_total(&r)).abs() <= 1e-9 * total.max(1.0));
            let scaled: Vec<PoweredComponent> = comps
                .iter()
                .map(|c| PoweredComponent { quantity: c.quantity * k, ..c.clone() })
                .collect();
            let t = acquisition_total(&CostScenario { components: scaled, ..scenario() });
            prop_assert!((t - f64::from(k) * total).abs() <= 1e-9 * t.max(1.0));
        }

        #[test]
        fn timeline_is_monotone(acq in 0.0f64..1e4, maint in 0.0f64..1e4, inst in 1u32..64) {
            let p = PrivateCost { servers: 1, acquisition: acq, annual_maintenance: maint };
            let rows = tco_timeline(&p, &offers(), inst, 10).unwrap();
            for opt in [PRIVATE, "Google", "Amazon", "Microsoft"] {
                let series: Vec<f64> = rows.iter().filter(|r| r.option == opt).map(|r| r.cumulative).collect();
                prop_assert!(series.windows(2).all(|w| w[1] >= w[0]));
            }
        }
    }
}
