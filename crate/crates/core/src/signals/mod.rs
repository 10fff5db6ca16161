//! Velocity, mass candidates and the three physical-momentum measures.
//!
//! Everything here is a pure function of its inputs. Degenerate inputs that
//! make a score meaningless for one symbol (zero turnover under an inverse
//! mass, zero dispersion under inverse volatility, zero total mass) produce
//! an [`Exclusion`] rather than an error: the symbol sits out that formation
//! and the run continues.

mod measures;
mod view;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::market_data::{log_price, SymbolId};

pub use measures::{
    InverseTurnoverMass, InverseVolatilityMass, MassModel, MassWeightedAverage, MassWeightedSum,
    MomentumMeasure, SharpeLikeMomentum, TurnoverMass,
};
pub use view::{LookbackSteps, StepView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentumKind {
    P1,
    P2,
    P3,
}

impl MomentumKind {
    pub const ALL: [MomentumKind; 3] = [MomentumKind::P1, MomentumKind::P2, MomentumKind::P3];

    pub fn name(self) -> &'static str {
        match self {
            MomentumKind::P1 => "p1",
            MomentumKind::P2 => "p2",
            MomentumKind::P3 => "p3",
        }
    }
}

impl fmt::Display for MomentumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MomentumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MomentumKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown momentum '{s}' (p1|p2|p3)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MassKind {
    #[serde(rename = "turnover")]
    TurnoverRate,
    #[serde(rename = "inv_turnover")]
    InverseTurnover,
    #[serde(rename = "inv_vol")]
    InverseVolatility,
}

impl MassKind {
    pub const ALL: [MassKind; 3] = [
        MassKind::TurnoverRate,
        MassKind::InverseTurnover,
        MassKind::InverseVolatility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MassKind::TurnoverRate => "turnover",
            MassKind::InverseTurnover => "inv_turnover",
            MassKind::InverseVolatility => "inv_vol",
        }
    }

    /// Short label used in report tables: υ, 1/υ, 1/σ.
    pub fn symbol(self) -> &'static str {
        match self {
            MassKind::TurnoverRate => "υ",
            MassKind::InverseTurnover => "1/υ",
            MassKind::InverseVolatility => "1/σ",
        }
    }

    /// Inverse volatility pairs only with p3; turnover masses only with p1/p2.
    pub fn compatible_with(self, momentum: MomentumKind) -> bool {
        matches!(
            (momentum, self),
            (MomentumKind::P3, MassKind::InverseVolatility)
                | (MomentumKind::P1 | MomentumKind::P2, MassKind::TurnoverRate)
                | (MomentumKind::P1 | MomentumKind::P2, MassKind::InverseTurnover)
        )
    }
}

impl fmt::Display for MassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MassKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MassKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!("unknown mass '{s}' (turnover|inv_turnover|inv_vol)"))
            })
    }
}

/// Why a symbol sits out a formation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum Exclusion {
    #[error("zero turnover under an inverse-turnover mass")]
    ZeroTurnover,
    #[error("total mass over the window is zero")]
    ZeroMassSum,
    #[error("zero volatility over the window")]
    ZeroVolatility,
    #[error("score is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("excluded: {0}")]
    Excluded(#[from] Exclusion),
    #[error("{0}")]
    Config(String),
}

impl From<SignalError> for Error {
    fn from(e: SignalError) -> Self {
        match e {
            SignalError::Config(msg) => Error::Config(msg),
            SignalError::Excluded(x) => Error::Domain(x.to_string()),
        }
    }
}

/// Velocities and masses for one symbol over the lookback ending at a
/// formation. Oldest step first.
#[derive(Debug, Clone, Copy)]
pub struct SignalWindow<'a> {
    pub symbol: SymbolId,
    pub formation_index: usize,
    velocities: &'a [f64],
    masses: &'a [f64],
}

impl<'a> SignalWindow<'a> {
    pub fn new(
        symbol: SymbolId,
        formation_index: usize,
        velocities: &'a [f64],
        masses: &'a [f64],
    ) -> Result<Self, SignalError> {
        if velocities.len() != masses.len() {
            return Err(SignalError::Config(format!(
                "window length mismatch: {} velocities, {} masses",
                velocities.len(),
                masses.len()
            )));
        }
        if velocities.is_empty() {
            return Err(SignalError::Config("empty lookback window".into()));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(SignalError::Config("masses must be finite and non-negative".into()));
        }
        Ok(Self {
            symbol,
            formation_index,
            velocities,
            masses,
        })
    }

    pub fn lookback(&self) -> usize {
        self.velocities.len()
    }

    pub fn velocities(&self) -> &'a [f64] {
        self.velocities
    }

    pub fn masses(&self) -> &'a [f64] {
        self.masses
    }
}

/// Log return between two closes: `ln(end) - ln(start)`, i.e. `ln(1 + r)`.
pub fn velocity(close_start: f64, close_end: f64) -> Result<f64> {
    Ok(log_price(close_end)? - log_price(close_start)?)
}

/// Volume traded over shares outstanding.
pub fn turnover_rate(volume: f64, shares_outstanding: f64) -> Result<f64> {
    if !(shares_outstanding > 0.0 && shares_outstanding.is_finite()) {
        return Err(Error::Domain(format!(
            "shares outstanding must be positive, got {shares_outstanding}"
        )));
    }
    if !(volume >= 0.0 && volume.is_finite()) {
        return Err(Error::Domain(format!("volume must be non-negative, got {volume}")));
    }
    Ok(volume / shares_outstanding)
}

pub fn inverse_turnover(turnover: f64) -> Result<f64, SignalError> {
    if turnover == 0.0 {
        return Err(Exclusion::ZeroTurnover.into());
    }
    if !(turnover > 0.0 && turnover.is_finite()) {
        return Err(SignalError::Config(format!("turnover must be positive, got {turnover}")));
    }
    Ok(1.0 / turnover)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor k - 1) of exactly `k` velocities.
pub fn rolling_volatility(velocities: &[f64], k: usize) -> Result<f64, SignalError> {
    if k < 2 {
        return Err(SignalError::Config(format!("volatility needs k >= 2, got {k}")));
    }
    if velocities.len() != k {
        return Err(SignalError::Config(format!(
            "expected {k} velocities, got {}",
            velocities.len()
        )));
    }
    if velocities.iter().any(|v| !v.is_finite()) {
        return Err(SignalError::Config("velocities must be finite".into()));
    }
    let m = mean(velocities);
    let ss: f64 = velocities.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / (k - 1) as f64).sqrt())
}

fn check_pair(masses: &[f64], velocities: &[f64]) -> Result<(), SignalError> {
    if masses.len() != velocities.len() {
        return Err(SignalError::Config(format!(
            "length mismatch: {} masses, {} velocities",
            masses.len(),
            velocities.len()
        )));
    }
    if masses.is_empty() {
        return Err(SignalError::Config("empty window".into()));
    }
    Ok(())
}

/// Mass-weighted sum of velocities.
pub fn momentum_p1(masses: &[f64], velocities: &[f64]) -> Result<f64, SignalError> {
    check_pair(masses, velocities)?;
    Ok(masses.iter().zip(velocities).map(|(m, v)| m * v).sum())
}

/// Mass-weighted average velocity.
pub fn momentum_p2(masses: &[f64], velocities: &[f64]) -> Result<f64, SignalError> {
    check_pair(masses, velocities)?;
    let total: f64 = masses.iter().sum();
    if total == 0.0 {
        return Err(Exclusion::ZeroMassSum.into());
    }
    let weighted: f64 = masses.iter().zip(velocities).map(|(m, v)| m * v).sum();
    Ok(weighted / total)
}

/// Mean velocity over its sample standard deviation.
pub fn momentum_p3(velocities: &[f64], k: usize) -> Result<f64, SignalError> {
    let sigma = rolling_volatility(velocities, k)?;
    if sigma == 0.0 {
        return Err(Exclusion::ZeroVolatility.into());
    }
    Ok(mean(velocities) / sigma)
}
