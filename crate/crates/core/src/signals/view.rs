use rayon::prelude::*;

use crate::market_data::{AssetPanel, SymbolId};

/// Per-step observations for one symbol over a lookback, oldest first.
#[derive(Debug, Clone, Copy)]
pub struct LookbackSteps<'a> {
    pub velocities: &'a [f64],
    pub turnover: &'a [f64],
}

/// Close-to-close velocities and turnover aggregated between consecutive
/// formation-grid dates, precomputed for every symbol.
///
/// Step `i` (for `i >= 1`) spans calendar indices `grid[i-1]..=grid[i]`: its
/// velocity is `ln close[grid[i]] - ln close[grid[i-1]]` and its turnover is
/// the volume summed over `(grid[i-1], grid[i]]` divided by the shares
/// outstanding on `grid[i]`. A step with any missing bar in its span holds
/// `NaN`; callers check completeness on the panel before reading.
#[derive(Debug, Clone)]
pub struct StepView {
    grid: Vec<usize>,
    velocity: Vec<Vec<f64>>,
    turnover: Vec<Vec<f64>>,
}

impl StepView {
    pub fn build(panel: &AssetPanel, grid: Vec<usize>) -> Self {
        let per_symbol: Vec<(Vec<f64>, Vec<f64>)> = panel
            .symbol_ids()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&id| {
                let s = panel.series(id);
                let close = s.raw_close();
                let volume = s.raw_volume();
                let shares = s.raw_shares();
                let mut vel = vec![f64::NAN; grid.len()];
                let mut turn = vec![f64::NAN; grid.len()];
                for i in 1..grid.len() {
                    let (a, b) = (grid[i - 1], grid[i]);
                    if !s.complete(a, b) {
                        continue;
                    }
                    vel[i] = close[b].ln() - close[a].ln();
                    let traded: f64 = volume[a + 1..=b].iter().sum();
                    turn[i] = traded / shares[b];
                }
                (vel, turn)
            })
            .collect();
        let (velocity, turnover) = per_symbol.into_iter().unzip();
        Self {
            grid,
            velocity,
            turnover,
        }
    }

    /// Calendar indices of the formation grid.
    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    /// Steps `first..=last` for `symbol`. Requires `first >= 1`.
    pub fn steps(&self, symbol: SymbolId, first: usize, last: usize) -> LookbackSteps<'_> {
        debug_assert!(first >= 1 && first <= last);
        LookbackSteps {
            velocities: &self.velocity[symbol.index()][first..=last],
            turnover: &self.turnover[symbol.index()][first..=last],
        }
    }
}
