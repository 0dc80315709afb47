//! Rolling recursive multi-step backtesting.
//!
//! The engine walks the validation span in refresh cycles. At each cycle
//! origin it refits the method on the most recent training window, then
//! predicts the next `horizon` hours recursively: every station gets a
//! prediction each hour, and those predictions feed the regressor rows for
//! the following hours of the same cycle. At the next origin the history is
//! fully replaced with real measurements and the process repeats.
//!
//! Persistence, per-station AR, dense least-squares and the block-sparse
//! pursuit all sit behind the same fitted-model interface, so every method
//! runs under the identical protocol.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::design::{self, BlockLayout};
use crate::solver::{self, CoefficientsWire, SolverConfig, SparseCoefficients};
use crate::{Error, Result};

/// Ridge applied automatically when a dense baseline system is too wide or
/// turns out rank-deficient.
const AUTO_RIDGE: f64 = 1e-8;

/// Forecasting strategy run by [`backtest`].
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Repeats the last measured value across the horizon.
    Persistence,
    /// Per-station autoregression on its own lags.
    Ar { order: usize },
    /// Dense least-squares multivariate autoregression.
    LsMar { order: usize },
    /// Block-sparse pursuit with equal lag orders.
    CstUniform { order: usize },
    /// Block-sparse pursuit with per-station lag orders.
    CstNonuniform { layout: BlockLayout },
}

impl Method {
    /// Stable identifier used in reports and file names.
    pub fn label(&self) -> String {
        match self {
            Method::Persistence => "persistence".into(),
            Method::Ar { order } => format!("ar({order})"),
            Method::LsMar { order } => format!("ls_mar({order})"),
            Method::CstUniform { order } => format!("cst_uniform({order})"),
            Method::CstNonuniform { .. } => "cst_nonuniform".into(),
        }
    }

    /// Whether the method fits coefficients each cycle.
    pub fn is_model_based(&self) -> bool {
        !matches!(self, Method::Persistence)
    }

    /// Whether the method produces block-sparse coefficients worth logging.
    pub fn is_sparse(&self) -> bool {
        matches!(self, Method::CstUniform { .. } | Method::CstNonuniform { .. })
    }

    fn layout_for(&self, stations: usize) -> Result<Option<BlockLayout>> {
        match self {
            Method::Persistence => Ok(None),
            Method::Ar { order } | Method::LsMar { order } | Method::CstUniform { order } => {
                Ok(Some(BlockLayout::uniform(stations, *order)?))
            }
            Method::CstNonuniform { layout } => {
                if layout.station_count() != stations {
                    return Err(Error::InvalidLayout(format!(
                        "layout spans {} stations, dataset has {stations}",
                        layout.station_count()
                    )));
                }
                Ok(Some(layout.clone()))
            }
        }
    }
}

/// Protocol parameters for one backtest.
#[derive(Debug, Clone)]
pub struct ForecastConfig {
    /// Steps predicted per refresh cycle.
    pub horizon: usize,
    /// Hours of raw training data per cycle (the window slides).
    pub window: usize,
    pub method: Method,
    pub solver: SolverConfig,
}

impl ForecastConfig {
    pub fn new(method: Method) -> Self {
        ForecastConfig {
            horizon: 6,
            window: 720,
            method,
            solver: SolverConfig::default(),
        }
    }
}

/// Everything one backtest produced for the target station.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun {
    pub target: usize,
    pub method: String,
    /// `(hour index, predicted m/s)` over the validation span.
    pub predictions: Vec<(usize, f64)>,
    /// Observed values aligned one-to-one with `predictions`.
    pub actuals: Vec<f64>,
    /// Cycle origins, spaced exactly one horizon apart.
    pub retrain_points: Vec<usize>,
    /// Target-station coefficients per refit (sparse methods only).
    pub coefficients_log: Vec<SparseCoefficients>,
}

impl ForecastRun {
    pub fn predicted_values(&self) -> Vec<f64> {
        self.predictions.iter().map(|&(_, v)| v).collect()
    }

    pub fn hours(&self) -> Vec<usize> {
        self.predictions.iter().map(|&(h, _)| h).collect()
    }

    /// CSV body with the fixed `hour,actual,predicted,method` columns.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("hour,actual,predicted,method\n");
        for (&(hour, predicted), &actual) in self.predictions.iter().zip(&self.actuals) {
            out.push_str(&format!("{hour},{actual},{predicted},{}\n", self.method));
        }
        out
    }

    pub fn to_wire(&self) -> RunWire {
        RunWire {
            method: self.method.clone(),
            target: self.target,
            retrain_points: self.retrain_points.clone(),
            rows: self
                .predictions
                .iter()
                .zip(&self.actuals)
                .map(|(&(hour, predicted), &actual)| RunRow {
                    hour,
                    actual,
                    predicted,
                })
                .collect(),
            coefficients: self.coefficients_log.iter().map(|c| c.to_wire()).collect(),
        }
    }
}

/// JSON shape of a persisted forecast run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunWire {
    pub method: String,
    pub target: usize,
    pub retrain_points: Vec<usize>,
    pub rows: Vec<RunRow>,
    pub coefficients: Vec<CoefficientsWire>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRow {
    pub hour: usize,
    pub actual: f64,
    pub predicted: f64,
}

/// A method fitted on one training window.
#[derive(Debug, Clone)]
pub enum FittedMethod {
    Persistence,
    Linear {
        layout: BlockLayout,
        /// One coefficient vector per station, indexed by station.
        per_station: Vec<SparseCoefficients>,
    },
}

impl FittedMethod {
    /// Predicts the next hour for every station from most-recent-first
    /// histories (actuals or earlier predictions, used verbatim).
    pub fn predict_all(&self, recent: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            FittedMethod::Persistence => recent
                .iter()
                .enumerate()
                .map(|(p, h)| {
                    h.first().copied().ok_or(Error::ShortHistory {
                        station: p,
                        have: 0,
                        needed: 1,
                    })
                })
                .collect(),
            FittedMethod::Linear {
                layout,
                per_station,
            } => {
                let refs: Vec<&[f64]> = recent.iter().map(Vec::as_slice).collect();
                let row = design::predict_row(&refs, layout)?;
                Ok(per_station.iter().map(|c| row.dot(c.values())).collect())
            }
        }
    }

    /// Fitted coefficients of one station, when the method has any.
    pub fn station_coefficients(&self, p: usize) -> Option<&SparseCoefficients> {
        match self {
            FittedMethod::Persistence => None,
            FittedMethod::Linear { per_station, .. } => per_station.get(p),
        }
    }

    fn history_depth(&self) -> usize {
        match self {
            FittedMethod::Persistence => 1,
            FittedMethod::Linear { layout, .. } => layout.n_max(),
        }
    }
}

/// The persistence "fit": nothing to learn.
pub fn fit_persistence() -> FittedMethod {
    FittedMethod::Persistence
}

/// Dense least squares with the automatic ridge policy: wide systems get
/// `AUTO_RIDGE` up front, rank-deficient ones get it as a logged fallback.
fn solve_dense(sys: &design::DesignSystem, label: &str) -> Result<nalgebra::DVector<f64>> {
    let ridge = if sys.layout().width() >= sys.rows() {
        log::info!(
            "{label}: {} columns >= {} rows, applying ridge {AUTO_RIDGE}",
            sys.layout().width(),
            sys.rows()
        );
        AUTO_RIDGE
    } else {
        0.0
    };
    match solver::least_squares(sys, ridge) {
        Err(Error::RankDeficient { .. }) if ridge == 0.0 => {
            log::info!("{label}: rank-deficient training window, applying ridge {AUTO_RIDGE}");
            solver::least_squares(sys, AUTO_RIDGE)
        }
        other => other,
    }
}

/// Per-station autoregression: each station is regressed on its own lags
/// only (a single-station design system), then embedded as a one-block
/// coefficient vector so prediction shares the common row layout.
pub fn fit_ar(train: &Dataset, order: usize) -> Result<FittedMethod> {
    let stations = train.station_count();
    let layout = BlockLayout::uniform(stations, order)?;
    let mut per_station = Vec::with_capacity(stations);
    for i in 0..stations {
        let own = train.single_station(i)?;
        let sys = design::build_uniform(&own, 0, order, None)?;
        let x = solve_dense(&sys, &format!("ar({order}) station {i}"))?;
        let mut values = nalgebra::DVector::<f64>::zeros(layout.width());
        for (j, col) in layout.block_range(i).enumerate() {
            values[col] = x[j];
        }
        let mut coeffs = SparseCoefficients::new(layout.clone(), vec![i], values, i, 0)?;
        coeffs.set_trained_at_hour(sys.origin_hour() + sys.rows());
        per_station.push(coeffs);
    }
    Ok(FittedMethod::Linear {
        layout,
        per_station,
    })
}

/// Dense multivariate autoregression: one full least-squares fit per station.
pub fn fit_ls_mar(train: &Dataset, order: usize) -> Result<FittedMethod> {
    let stations = train.station_count();
    let layout = BlockLayout::uniform(stations, order)?;
    let mut per_station = Vec::with_capacity(stations);
    for i in 0..stations {
        let sys = design::build_uniform(train, i, order, None)?;
        let x = solve_dense(&sys, &format!("ls_mar({order}) station {i}"))?;
        let support: Vec<usize> = (0..stations).collect();
        let mut coeffs = SparseCoefficients::new(layout.clone(), support, x, i, 0)?;
        coeffs.set_trained_at_hour(sys.origin_hour() + sys.rows());
        per_station.push(coeffs);
    }
    Ok(FittedMethod::Linear {
        layout,
        per_station,
    })
}

/// Block-sparse pursuit fit for every station over a shared layout.
pub fn fit_cst(
    train: &Dataset,
    layout: &BlockLayout,
    solver_cfg: &SolverConfig,
) -> Result<FittedMethod> {
    let stations = train.station_count();
    let mut per_station = Vec::with_capacity(stations);
    for i in 0..stations {
        let sys = design::build_nonuniform(train, i, layout, None)?;
        per_station.push(solver::bomp(&sys, solver_cfg)?);
    }
    Ok(FittedMethod::Linear {
        layout: layout.clone(),
        per_station,
    })
}

fn fit_for_cycle(train: &Dataset, cfg: &ForecastConfig) -> Result<FittedMethod> {
    match &cfg.method {
        Method::Persistence => Ok(fit_persistence()),
        Method::Ar { order } => fit_ar(train, *order),
        Method::LsMar { order } => fit_ls_mar(train, *order),
        Method::CstUniform { order } => {
            let layout = BlockLayout::uniform(train.station_count(), *order)?;
            fit_cst(train, &layout, &cfg.solver)
        }
        Method::CstNonuniform { layout } => fit_cst(train, layout, &cfg.solver),
    }
}

fn push_recent(recent: &mut [Vec<f64>], next: &[f64]) {
    for (hist, &v) in recent.iter_mut().zip(next) {
        hist.rotate_right(1);
        hist[0] = v;
    }
}

/// Rolling recursive backtest of one method over the validation span
/// `[split, T)`.
///
/// Cycle origins start at `split` and advance by the horizon; each cycle
/// refits on the `window` hours before its origin, predicts recursively for
/// up to `horizon` hours (a shorter final cycle covers the remainder), and
/// then the history snaps back to real measurements.
pub fn backtest(
    ds: &Dataset,
    target: usize,
    split: usize,
    cfg: &ForecastConfig,
) -> Result<ForecastRun> {
    let stations = ds.station_count();
    let t_len = ds.len();
    if target >= stations {
        return Err(Error::TargetOutOfRange {
            target,
            stations,
        });
    }
    if cfg.horizon == 0 {
        return Err(Error::Window("horizon must be >= 1".into()));
    }
    if split == 0 || split >= t_len {
        return Err(Error::Window(format!(
            "split {split} must leave both training and validation hours (T = {t_len})"
        )));
    }
    let layout = cfg.method.layout_for(stations)?;
    if let Some(layout) = &layout {
        if cfg.window < layout.n_max() + 1 {
            return Err(Error::Window(format!(
                "window {} cannot hold a single row at n_max {}",
                cfg.window,
                layout.n_max()
            )));
        }
        if split < cfg.window {
            return Err(Error::Window(format!(
                "split {split} leaves less than the {} hour training window",
                cfg.window
            )));
        }
    }

    let mut run = ForecastRun {
        target,
        method: cfg.method.label(),
        predictions: Vec::with_capacity(t_len - split),
        actuals: Vec::with_capacity(t_len - split),
        retrain_points: Vec::new(),
        coefficients_log: Vec::new(),
    };

    let mut cycle = 0usize;
    let mut origin = split;
    while origin < t_len {
        let steps = cfg.horizon.min(t_len - origin);
        let fitted = if cfg.method.is_model_based() {
            let train = ds.slice(origin - cfg.window, origin)?;
            fit_for_cycle(&train, cfg)
        } else {
            Ok(fit_persistence())
        }
        .map_err(|e| Error::Cycle {
            index: cycle,
            source: Box::new(e),
        })?;

        if cfg.method.is_sparse() {
            let mut coeffs = fitted
                .station_coefficients(target)
                .expect("sparse methods fit every station")
                .clone();
            coeffs.set_trained_at_hour(origin);
            run.coefficients_log.push(coeffs);
        }

        // Hours before the origin are actuals; later hours within the cycle
        // are this cycle's own predictions.
        let depth = fitted.history_depth();
        let mut recent: Vec<Vec<f64>> = (0..stations)
            .map(|p| (1..=depth).map(|k| ds.value(p, origin - k)).collect())
            .collect();
        for j in 0..steps {
            let next = fitted.predict_all(&recent).map_err(|e| Error::Cycle {
                index: cycle,
                source: Box::new(e),
            })?;
            run.predictions.push((origin + j, next[target]));
            push_recent(&mut recent, &next);
        }

        run.retrain_points.push(origin);
        origin += cfg.horizon;
        cycle += 1;
    }

    run.actuals = run
        .predictions
        .iter()
        .map(|&(hour, _)| ds.value(target, hour))
        .collect();
    Ok(run)
}
