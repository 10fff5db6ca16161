//! Name-keyed registry of the interchangeable pieces of a strategy: momentum
//! measures, mass models and timescale horizons.
//!
//! A [`StrategyConfig`] names its pieces by enum; the registry maps each
//! enum's name to a trait object, so an alternative implementation can be
//! swapped in under the same name without touching the engine.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::portfolio::{Daily, Horizon, Monthly, StrategyConfig, Weekly, Yearly};
use crate::signals::{
    InverseTurnoverMass, InverseVolatilityMass, MassModel, MassWeightedAverage, MassWeightedSum,
    MomentumMeasure, SharpeLikeMomentum, TurnoverMass,
};

#[derive(Debug, Clone, Default)]
pub struct StrategyRegistry {
    momenta: BTreeMap<&'static str, Arc<dyn MomentumMeasure>>,
    masses: BTreeMap<&'static str, Arc<dyn MassModel>>,
    horizons: BTreeMap<&'static str, Arc<dyn Horizon>>,
}

/// The pieces a [`StrategyConfig`] resolves to.
#[derive(Debug, Clone)]
pub struct ResolvedStrategy {
    pub momentum: Arc<dyn MomentumMeasure>,
    pub mass: Arc<dyn MassModel>,
    pub horizon: Arc<dyn Horizon>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_momentum(Arc::new(MassWeightedSum));
        r.register_momentum(Arc::new(MassWeightedAverage));
        r.register_momentum(Arc::new(SharpeLikeMomentum));
        r.register_mass(Arc::new(TurnoverMass));
        r.register_mass(Arc::new(InverseTurnoverMass));
        r.register_mass(Arc::new(InverseVolatilityMass));
        r.register_horizon(Arc::new(Daily));
        r.register_horizon(Arc::new(Weekly));
        r.register_horizon(Arc::new(Monthly));
        r.register_horizon(Arc::new(Yearly));
        r
    }

    /// Shared instance of [`StrategyRegistry::builtin`].
    pub fn global() -> &'static StrategyRegistry {
        static GLOBAL: OnceLock<StrategyRegistry> = OnceLock::new();
        GLOBAL.get_or_init(StrategyRegistry::builtin)
    }

    /// Replaces any measure already registered under the same name.
    pub fn register_momentum(&mut self, measure: Arc<dyn MomentumMeasure>) {
        self.momenta.insert(measure.name(), measure);
    }

    pub fn register_mass(&mut self, mass: Arc<dyn MassModel>) {
        self.masses.insert(mass.name(), mass);
    }

    pub fn register_horizon(&mut self, horizon: Arc<dyn Horizon>) {
        self.horizons.insert(horizon.name(), horizon);
    }

    pub fn momentum(&self, name: &str) -> Option<Arc<dyn MomentumMeasure>> {
        self.momenta.get(name).cloned()
    }

    pub fn mass(&self, name: &str) -> Option<Arc<dyn MassModel>> {
        self.masses.get(name).cloned()
    }

    pub fn horizon(&self, name: &str) -> Option<Arc<dyn Horizon>> {
        self.horizons.get(name).cloned()
    }

    pub fn momentum_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.momenta.keys().copied()
    }

    pub fn mass_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.masses.keys().copied()
    }

    pub fn horizon_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.horizons.keys().copied()
    }

    pub fn resolve(&self, config: &StrategyConfig) -> Result<ResolvedStrategy> {
        let missing = |what: &str, name: &str| Error::Config(format!("no {what} registered as '{name}'"));
        let momentum = self
            .momentum(config.momentum.name())
            .ok_or_else(|| missing("momentum measure", config.momentum.name()))?;
        let mass = self
            .mass(config.mass.name())
            .ok_or_else(|| missing("mass model", config.mass.name()))?;
        let horizon = self
            .horizon(config.timescale.name())
            .ok_or_else(|| missing("horizon", config.timescale.name()))?;
        if !momentum.accepts(config.mass) {
            return Err(Error::Config(format!(
                "momentum {} does not accept mass {}",
                momentum.name(),
                mass.name()
            )));
        }
        if config.lookback < momentum.min_lookback() {
            return Err(Error::Config(format!(
                "momentum {} needs a lookback of at least {}",
                momentum.name(),
                momentum.min_lookback()
            )));
        }
        Ok(ResolvedStrategy {
            momentum,
            mass,
            horizon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::{Direction, Timescale};
    use crate::signals::{MassKind, MomentumKind};

    #[test]
    fn builtin_names() {
        let r = StrategyRegistry::builtin();
        assert_eq!(r.momentum_names().collect::<Vec<_>>(), vec!["p1", "p2", "p3"]);
        assert_eq!(
            r.mass_names().collect::<Vec<_>>(),
            vec!["inv_turnover", "inv_vol", "turnover"]
        );
        assert_eq!(r.horizon_names().count(), 4);
    }

    #[test]
    fn resolve_rejects_incompatible_mass() {
        let cfg = StrategyConfig {
            momentum: MomentumKind::P1,
            mass: MassKind::InverseVolatility,
            timescale: Timescale::Day,
            lookback: 2,
            holding: 1,
            direction: Direction::Traditional,
            groups: 5,
        };
        assert!(StrategyRegistry::builtin().resolve(&cfg).is_err());
    }

    #[test]
    fn empty_registry_reports_missing_piece() {
        let cfg = StrategyConfig {
            momentum: MomentumKind::P1,
            mass: MassKind::TurnoverRate,
            timescale: Timescale::Day,
            lookback: 2,
            holding: 1,
            direction: Direction::Traditional,
            groups: 5,
        };
        let err = StrategyRegistry::empty().resolve(&cfg).unwrap_err();
        assert!(err.to_string().contains("p1"));
    }
}
