/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // dataset
    #[error("csv: {msg} (line {line})")]
    Csv { line: usize, msg: String },
    #[error("timestamps: {0}")]
    Timestamps(String),
    #[error("station '{station}': gap of {run} h starting at hour {start} exceeds limit {limit} h")]
    GapExceedsLimit {
        station: String,
        start: usize,
        run: usize,
        limit: usize,
    },
    #[error("station '{station}': leading or trailing missing values cannot be interpolated")]
    EdgeGap { station: String },
    #[error("station '{station}': negative wind speed {value} m/s at hour {hour}")]
    NegativeSpeed {
        station: String,
        hour: usize,
        value: f64,
    },
    #[error("station '{station}': non-finite value at hour {hour}")]
    NonFinite { station: String, hour: usize },
    #[error("dataset is empty or has no stations")]
    EmptyDataset,
    #[error("duplicate station id '{0}'")]
    DuplicateStation(String),
    #[error("unknown station id '{0}'")]
    UnknownStation(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("slice [{from}, {to}) out of range for dataset of length {len}")]
    SliceRange { from: usize, to: usize, len: usize },

    // design
    #[error("invalid block layout: {0}")]
    InvalidLayout(String),
    #[error("station index {target} out of range ({stations} stations)")]
    TargetOutOfRange { target: usize, stations: usize },
    #[error("insufficient history: need {needed} hours, have {have}")]
    InsufficientHistory { needed: usize, have: usize },
    #[error("requested {requested} rows but only {available} are available")]
    TooManyRows { requested: usize, available: usize },
    #[error("station {station}: history supplies {have} values, block order is {needed}")]
    ShortHistory {
        station: usize,
        have: usize,
        needed: usize,
    },
    #[error("invalid design system: {0}")]
    InvalidSystem(String),

    // solver
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("rank-deficient system (rank {rank} of {cols} columns); set ridge > 0")]
    RankDeficient { rank: usize, cols: usize },
    #[error("exhaustive search over {combos} supports exceeds the {limit} guard")]
    CombinatorialGuard { combos: u128, limit: u128 },
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    // orders
    #[error("correlation window too short: {have} overlapping hours at max lag {max_lag}, need at least {need}")]
    DegenerateWindow {
        have: usize,
        max_lag: usize,
        need: usize,
    },
    #[error("empty tuning grid")]
    EmptyGrid,

    // metrics
    #[error("length mismatch: {left} actuals vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty series")]
    EmptySeries,
    #[error("observed range is zero; NRMSE undefined")]
    ZeroRange,
    #[error("reduction base must be positive, got {0}")]
    NonPositiveBase(f64),

    // forecast
    #[error("backtest window: {0}")]
    Window(String),
    #[error("cycle {index}: {source}")]
    Cycle {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    // synth
    #[error("invalid planted model: {0}")]
    InvalidModel(String),
    #[error("simulation unstable: |y| reached {0:.3e}")]
    Unstable(f64),
    #[error("clipping rate {rate:.4}% of simulated cells is at or above the 1% guard")]
    ExcessiveClipping { rate: f64 },

    // io / serialization
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
