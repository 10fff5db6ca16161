use std::fmt::Debug;

use super::{
    inverse_turnover, momentum_p1, momentum_p2, momentum_p3, rolling_volatility, Exclusion,
    LookbackSteps, MassKind, MomentumKind, SignalError, SignalWindow,
};

/// A ranking score computed from a symbol's lookback window.
pub trait MomentumMeasure: Send + Sync + Debug {
    fn kind(&self) -> MomentumKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Smallest lookback for which the score is defined.
    fn min_lookback(&self) -> usize {
        1
    }

    fn accepts(&self, mass: MassKind) -> bool {
        mass.compatible_with(self.kind())
    }

    fn score(&self, window: &SignalWindow<'_>) -> Result<f64, SignalError>;
}

/// Turns a symbol's per-step observations into per-step masses.
pub trait MassModel: Send + Sync + Debug {
    fn kind(&self) -> MassKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Writes one mass per lookback step into `out` (cleared first).
    fn fill(&self, steps: &LookbackSteps<'_>, out: &mut Vec<f64>) -> Result<(), SignalError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MassWeightedSum;

impl MomentumMeasure for MassWeightedSum {
    fn kind(&self) -> MomentumKind {
        MomentumKind::P1
    }

    fn score(&self, window: &SignalWindow<'_>) -> Result<f64, SignalError> {
        finite(momentum_p1(window.masses(), window.velocities())?)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MassWeightedAverage;

impl MomentumMeasure for MassWeightedAverage {
    fn kind(&self) -> MomentumKind {
        MomentumKind::P2
    }

    fn score(&self, window: &SignalWindow<'_>) -> Result<f64, SignalError> {
        finite(momentum_p2(window.masses(), window.velocities())?)
    }
}

/// Mean velocity over volatility. The window's masses are not read: the
/// inverse-volatility mass is implied by the denominator.
#[derive(Debug, Default, Clone, Copy)]
pub struct SharpeLikeMomentum;

impl MomentumMeasure for SharpeLikeMomentum {
    fn kind(&self) -> MomentumKind {
        MomentumKind::P3
    }

    fn min_lookback(&self) -> usize {
        2
    }

    fn score(&self, window: &SignalWindow<'_>) -> Result<f64, SignalError> {
        finite(momentum_p3(window.velocities(), window.lookback())?)
    }
}

fn finite(score: f64) -> Result<f64, SignalError> {
    if score.is_finite() {
        Ok(score)
    } else {
        Err(Exclusion::NonFinite.into())
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct TurnoverMass;

impl MassModel for TurnoverMass {
    fn kind(&self) -> MassKind {
        MassKind::TurnoverRate
    }

    fn fill(&self, steps: &LookbackSteps<'_>, out: &mut Vec<f64>) -> Result<(), SignalError> {
        out.clear();
        out.extend_from_slice(steps.turnover);
        Ok(())
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct InverseTurnoverMass;

impl MassModel for InverseTurnoverMass {
    fn kind(&self) -> MassKind {
        MassKind::InverseTurnover
    }

    fn fill(&self, steps: &LookbackSteps<'_>, out: &mut Vec<f64>) -> Result<(), SignalError> {
        out.clear();
        for &u in steps.turnover {
            out.push(inverse_turnover(u)?);
        }
        Ok(())
    }
}

/// Constant mass `1/σ` over the window.
#[derive(Debug, Default, Clone, Copy)]
pub struct InverseVolatilityMass;

impl MassModel for InverseVolatilityMass {
    fn kind(&self) -> MassKind {
        MassKind::InverseVolatility
    }

    fn fill(&self, steps: &LookbackSteps<'_>, out: &mut Vec<f64>) -> Result<(), SignalError> {
        out.clear();
        let sigma = rolling_volatility(steps.velocities, steps.velocities.len())?;
        if sigma == 0.0 {
            return Err(Exclusion::ZeroVolatility.into());
        }
        out.resize(steps.velocities.len(), 1.0 / sigma);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::SymbolId;

    fn steps<'a>(v: &'a [f64], u: &'a [f64]) -> LookbackSteps<'a> {
        LookbackSteps {
            velocities: v,
            turnover: u,
        }
    }

    #[test]
    fn inverse_turnover_mass_excludes_zero_turnover() {
        let mut out = Vec::new();
        let r = InverseTurnoverMass.fill(&steps(&[0.1, 0.2], &[0.5, 0.0]), &mut out);
        assert_eq!(r, Err(SignalError::Excluded(Exclusion::ZeroTurnover)));
        InverseTurnoverMass
            .fill(&steps(&[0.1, 0.2], &[0.5, 0.25]), &mut out)
            .unwrap();
        assert_eq!(out, vec![2.0, 4.0]);
    }

    #[test]
    fn inverse_vol_mass_is_constant() {
        let mut out = Vec::new();
        InverseVolatilityMass
            .fill(&steps(&[0.01, 0.03], &[0.0, 0.0]), &mut out)
            .unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], out[1]);
        assert!((out[0] - 1.0 / 0.014_142_135_623_730_95).abs() < 1e-9);
    }

    #[test]
    fn measures_dispatch_to_primitives() {
        let v = [0.01, 0.03];
        let m = [3.0, 1.0];
        let w = SignalWindow::new(SymbolId(0), 5, &v, &m).unwrap();
        assert_eq!(MassWeightedSum.score(&w).unwrap(), momentum_p1(&m, &v).unwrap());
        assert_eq!(MassWeightedAverage.score(&w).unwrap(), momentum_p2(&m, &v).unwrap());
        assert_eq!(SharpeLikeMomentum.score(&w).unwrap(), momentum_p3(&v, 2).unwrap());
        assert_eq!(SharpeLikeMomentum.min_lookback(), 2);
        assert!(SharpeLikeMomentum.accepts(MassKind::InverseVolatility));
        assert!(!MassWeightedSum.accepts(MassKind::InverseVolatility));
    }
}
