use super::{Direction, StrategyConfig, Timescale, DEFAULT_GROUPS};
use crate::signals::{MassKind, MomentumKind};

/// Daily strategy count as usually quoted for this grid. The ranges below
/// enumerate one more (4 x 49 + 6 x 7 = 238); [`enumerate_grid`] follows the
/// ranges and callers can compare against this figure.
pub const DAILY_QUOTED_COUNT: usize = 237;

/// Every admissible strategy of `timescale` in both directions, ordered by
/// direction, momentum, mass, J, K. Group count is [`DEFAULT_GROUPS`].
pub fn enumerate_grid(timescale: Timescale) -> Vec<StrategyConfig> {
    let horizon = timescale.horizon();
    let mut out = Vec::new();
    for direction in Direction::ALL {
        for momentum in MomentumKind::ALL {
            for mass in MassKind::ALL.into_iter().filter(|m| m.compatible_with(momentum)) {
                for lookback in horizon.lookback_range(momentum) {
                    for holding in horizon.holding_range() {
                        if horizon.admits(lookback, holding, momentum) {
                            out.push(StrategyConfig {
                                momentum,
                                mass,
                                timescale,
                                lookback,
                                holding,
                                direction,
                                groups: DEFAULT_GROUPS,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Number of grid cells for one direction.
pub fn grid_count(timescale: Timescale) -> usize {
    enumerate_grid(timescale)
        .iter()
        .filter(|c| c.direction == Direction::Traditional)
        .count()
}
