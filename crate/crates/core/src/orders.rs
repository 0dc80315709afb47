//! Per-station lag order selection via cross-correlation analysis.
//!
//! Stations that correlate with the target at deep lags earn long blocks,
//! weakly informative stations are floored at a single lag and left for the
//! sparse solver to zero out. A small grid search over the lag cap and the
//! correlation threshold can refine the choice against a held-out span.

use crate::dataset::Dataset;
use crate::design::BlockLayout;
use crate::forecast::{self, ForecastConfig, Method};
use crate::metrics;
use crate::solver::SolverConfig;
use crate::{Error, Result};

/// Pearson cross-correlations of every station against the target.
#[derive(Debug, Clone)]
pub struct CorrelationProfile {
    target: usize,
    /// `rho[p][l-1]` correlates the target at `t` with station `p` at `t-l`.
    rho: Vec<Vec<f64>>,
    max_lag: usize,
}

impl CorrelationProfile {
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    /// Correlation of station `p` at lag `l` (1-based lag).
    pub fn rho(&self, p: usize, lag: usize) -> f64 {
        self.rho[p][lag - 1]
    }

    pub fn station_count(&self) -> usize {
        self.rho.len()
    }
}

/// Pearson correlation with a zero-variance convention of 0.
fn pearson(x: &[f64], z: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), z.len());
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_z = z.iter().sum::<f64>() / n;
    let mut ss_x = 0.0;
    let mut ss_z = 0.0;
    let mut cov = 0.0;
    for (&a, &b) in x.iter().zip(z) {
        let dx = a - mean_x;
        let dz = b - mean_z;
        ss_x += dx * dx;
        ss_z += dz * dz;
        cov += dx * dz;
    }
    // constant series: sums of squared deviations at rounding level
    let scale_x = x.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
    let scale_z = z.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
    let tol_x = (16.0 * f64::EPSILON * scale_x).powi(2) * n;
    let tol_z = (16.0 * f64::EPSILON * scale_z).powi(2) * n;
    if ss_x <= tol_x || ss_z <= tol_z {
        return 0.0;
    }
    (cov / (ss_x.sqrt() * ss_z.sqrt())).clamp(-1.0, 1.0)
}

/// Cross-correlation of the target against every station at lags `1..=max_lag`.
pub fn correlate(ds: &Dataset, target: usize, max_lag: usize) -> Result<CorrelationProfile> {
    let t_len = ds.len();
    if target >= ds.station_count() {
        return Err(Error::TargetOutOfRange {
            target,
            stations: ds.station_count(),
        });
    }
    if max_lag == 0 {
        return Err(Error::InvalidLayout("max lag must be >= 1".into()));
    }
    if t_len < max_lag + 3 {
        return Err(Error::DegenerateWindow {
            have: t_len.saturating_sub(max_lag),
            max_lag,
            need: 3,
        });
    }
    let target_series = ds.series(target);
    let mut rho = Vec::with_capacity(ds.station_count());
    for p in 0..ds.station_count() {
        let other = ds.series(p);
        let mut row = Vec::with_capacity(max_lag);
        for lag in 1..=max_lag {
            let x = &target_series[lag..];
            let z = &other[..t_len - lag];
            row.push(pearson(x, z));
        }
        rho.push(row);
    }
    Ok(CorrelationProfile {
        target,
        rho,
        max_lag,
    })
}

/// Threshold rule: station `p` keeps every lag up to the deepest one whose
/// correlation magnitude reaches `tau`, floored at one lag.
pub fn select_orders(profile: &CorrelationProfile, n_max: usize, tau: f64) -> Result<BlockLayout> {
    if n_max == 0 {
        return Err(Error::InvalidLayout("n_max must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidConfig(format!("tau {tau} out of [0, 1)")));
    }
    if profile.max_lag < n_max {
        return Err(Error::InvalidLayout(format!(
            "profile scans {} lags, cannot select orders up to {n_max}",
            profile.max_lag
        )));
    }
    let orders = profile
        .rho
        .iter()
        .map(|row| {
            (1..=n_max)
                .rev()
                .find(|&lag| row[lag - 1].abs() >= tau)
                .unwrap_or(1)
        })
        .collect();
    BlockLayout::new(orders, n_max)
}

/// Backtest protocol used while tuning lag orders.
#[derive(Debug, Clone)]
pub struct TuneSettings {
    pub horizon: usize,
    pub window: usize,
    pub solver: SolverConfig,
    /// Grid candidates evaluated concurrently when > 1; the reduction is
    /// deterministic either way.
    pub jobs: usize,
}

impl Default for TuneSettings {
    fn default() -> Self {
        TuneSettings {
            horizon: 6,
            window: 720,
            solver: SolverConfig::default(),
            jobs: 1,
        }
    }
}

/// Default `(n_max, tau)` candidate grid. The tau = 0 column is the
/// no-shrinkage endpoint where the layout reduces to the uniform model.
pub fn default_grid() -> Vec<(usize, f64)> {
    let mut grid = Vec::new();
    for &n_max in &[3usize, 4, 6, 8] {
        for &tau in &[0.0, 0.2, 0.4, 0.6] {
            grid.push((n_max, tau));
        }
    }
    grid
}

/// Picks the grid candidate whose layout backtests best on the held-out span.
///
/// Correlations are computed on the training span only; each candidate runs
/// the full nonuniform backtest over `ds_val` (which must continue
/// `ds_train`). Ties prefer fewer columns, then earlier grid position.
pub fn tune_orders(
    ds_train: &Dataset,
    ds_val: &Dataset,
    target: usize,
    grid: &[(usize, f64)],
    settings: &TuneSettings,
) -> Result<BlockLayout> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let split = ds_train.len();
    let full = ds_train.concat(ds_val)?;
    let window = settings.window.min(split);

    let evaluate = |&(n_max, tau): &(usize, f64)| -> Result<(f64, BlockLayout)> {
        let profile = correlate(ds_train, target, n_max)?;
        let layout = select_orders(&profile, n_max, tau)?;
        let cfg = ForecastConfig {
            horizon: settings.horizon,
            window,
            method: Method::CstNonuniform {
                layout: layout.clone(),
            },
            solver: settings.solver.clone(),
        };
        let run = forecast::backtest(&full, target, split, &cfg)?;
        Ok((metrics::rmse(&run.actuals, &run.predicted_values())?, layout))
    };

    let workers = settings.jobs.max(1).min(grid.len());
    let scored: Vec<Result<(f64, BlockLayout)>> = if workers <= 1 {
        grid.iter().map(evaluate).collect()
    } else {
        let slots: std::sync::Mutex<Vec<Option<Result<(f64, BlockLayout)>>>> =
            std::sync::Mutex::new((0..grid.len()).map(|_| None).collect());
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= grid.len() {
                        break;
                    }
                    let out = evaluate(&grid[i]);
                    slots.lock().expect("tune worker panicked")[i] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .expect("tune worker panicked")
            .into_iter()
            .map(|s| s.expect("every candidate was evaluated"))
            .collect()
    };

    let mut best: Option<(f64, BlockLayout)> = None;
    for result in scored {
        let (score, layout) = result?;
        let replace = match &best {
            None => true,
            Some((best_score, best_layout)) => {
                score < *best_score
                    || (score == *best_score && layout.width() < best_layout.width())
            }
        };
        if replace {
            best = Some((score, layout));
        }
    }
    Ok(best.expect("grid is nonempty").1)
}
