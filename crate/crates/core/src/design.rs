//! Lagged design matrices for multivariate autoregression.
//!
//! For a target station the regression pair `(A, b)` stacks one row per
//! predicted hour: `b` holds the target's value at that hour and the row of
//! `A` holds, block by block, the lagged values of every station, lag 1
//! first. In the nonuniform form each station contributes its own lag count
//! `n_p` and all rows are aligned at the maximum admissible lag `n_max`, so
//! column `j` of block `p` at row `m` is always the value of station `p`
//! exactly `j+1` hours before the predicted hour.

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::{Error, Result};

/// Per-station lag orders of a (possibly nonuniform) block model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    orders: Vec<usize>,
    offsets: Vec<usize>,
    n_max: usize,
    width: usize,
}

impl BlockLayout {
    /// Layout from per-station lag counts and the row-alignment lag `n_max`.
    pub fn new(orders: Vec<usize>, n_max: usize) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidLayout("no stations".into()));
        }
        if orders.contains(&0) {
            return Err(Error::InvalidLayout("every block order must be >= 1".into()));
        }
        let max_order = *orders.iter().max().expect("nonempty");
        if n_max < max_order {
            return Err(Error::InvalidLayout(format!(
                "n_max {n_max} is smaller than the largest block order {max_order}"
            )));
        }
        let mut offsets = Vec::with_capacity(orders.len());
        let mut acc = 0;
        for &n in &orders {
            offsets.push(acc);
            acc += n;
        }
        Ok(BlockLayout {
            orders,
            offsets,
            n_max,
            width: acc,
        })
    }

    /// Uniform layout: every station contributes `n` lags, `n_max = n`.
    pub fn uniform(stations: usize, n: usize) -> Result<Self> {
        BlockLayout::new(vec![n; stations], n)
    }

    pub fn station_count(&self) -> usize {
        self.orders.len()
    }

    /// Lag count of station `p`.
    pub fn order(&self, p: usize) -> usize {
        self.orders[p]
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    /// Row-alignment lag; at least `max_i n_i`.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// First column of station `p`'s block.
    pub fn offset(&self, p: usize) -> usize {
        self.offsets[p]
    }

    /// Column range of station `p`'s block.
    pub fn block_range(&self, p: usize) -> std::ops::Range<usize> {
        self.offsets[p]..self.offsets[p] + self.orders[p]
    }

    /// Total column count N.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_uniform(&self) -> bool {
        self.orders.iter().all(|&n| n == self.orders[0]) && self.n_max == self.orders[0]
    }
}

/// Regression pair `(A, b)` for one target station.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    layout: BlockLayout,
    target: usize,
    origin_hour: usize,
}

impl DesignSystem {
    /// Assembles a system from raw parts, checking shape consistency.
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        layout: BlockLayout,
        target: usize,
        origin_hour: usize,
    ) -> Result<Self> {
        if a.nrows() == 0 {
            return Err(Error::InvalidSystem("no rows".into()));
        }
        if a.nrows() != b.len() {
            return Err(Error::InvalidSystem(format!(
                "A has {} rows but b has {}",
                a.nrows(),
                b.len()
            )));
        }
        if a.ncols() != layout.width() {
            return Err(Error::InvalidSystem(format!(
                "A has {} columns but the layout spans {}",
                a.ncols(),
                layout.width()
            )));
        }
        if target >= layout.station_count() {
            return Err(Error::TargetOutOfRange {
                target,
                stations: layout.station_count(),
            });
        }
        Ok(DesignSystem {
            a,
            b,
            layout,
            target,
            origin_hour,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Row count M.
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Hour index (within the source dataset) of the first predicted row.
    pub fn origin_hour(&self) -> usize {
        self.origin_hour
    }
}

/// Uniform design system: every station contributes `n` lags.
///
/// Row `m` predicts hour `n + m` (0-based) of the target; block `p` of that
/// row reads `[y^p at lag 1, ..., y^p at lag n]`. `rows = None` uses every
/// available row; a smaller count keeps the most recent rows.
pub fn build_uniform(
    ds: &Dataset,
    target: usize,
    n: usize,
    rows: Option<usize>,
) -> Result<DesignSystem> {
    let layout = BlockLayout::uniform(ds.station_count(), n)?;
    build_nonuniform(ds, target, &layout, rows)
}

/// Nonuniform design system over an explicit [`BlockLayout`].
pub fn build_nonuniform(
    ds: &Dataset,
    target: usize,
    layout: &BlockLayout,
    rows: Option<usize>,
) -> Result<DesignSystem> {
    let p_count = ds.station_count();
    if layout.station_count() != p_count {
        return Err(Error::InvalidLayout(format!(
            "layout spans {} stations, dataset has {p_count}",
            layout.station_count()
        )));
    }
    if target >= p_count {
        return Err(Error::TargetOutOfRange {
            target,
            stations: p_count,
        });
    }
    let t_len = ds.len();
    let n_max = layout.n_max();
    if t_len < n_max + 1 {
        return Err(Error::InsufficientHistory {
            needed: n_max + 1,
            have: t_len,
        });
    }
    let available = t_len - n_max;
    let m_count = rows.unwrap_or(available);
    if m_count == 0 {
        return Err(Error::InvalidSystem("zero rows requested".into()));
    }
    if m_count > available {
        return Err(Error::TooManyRows {
            requested: m_count,
            available,
        });
    }
    let shift = available - m_count;
    let origin_hour = n_max + shift;

    let mut a = DMatrix::<f64>::zeros(m_count, layout.width());
    let mut b = DVector::<f64>::zeros(m_count);
    for m in 0..m_count {
        let hour = origin_hour + m;
        b[m] = ds.value(target, hour);
        for p in 0..p_count {
            let offset = layout.offset(p);
            for j in 0..layout.order(p) {
                a[(m, offset + j)] = ds.value(p, hour - (j + 1));
            }
        }
    }
    DesignSystem::new(a, b, layout.clone(), target, origin_hour)
}

/// Regressor row for forecast time, ordered exactly like the builder columns.
///
/// `history[p]` lists station `p`'s latest values most-recent-first; entries
/// may be actuals or earlier predictions, the row carries plain numbers.
pub fn predict_row(history: &[&[f64]], layout: &BlockLayout) -> Result<DVector<f64>> {
    if history.len() != layout.station_count() {
        return Err(Error::InvalidLayout(format!(
            "history covers {} stations, layout has {}",
            history.len(),
            layout.station_count()
        )));
    }
    let mut row = DVector::<f64>::zeros(layout.width());
    for (p, recent) in history.iter().enumerate() {
        let n_p = layout.order(p);
        if recent.len() < n_p {
            return Err(Error::ShortHistory {
                station: p,
                have: recent.len(),
                needed: n_p,
            });
        }
        let offset = layout.offset(p);
        for j in 0..n_p {
            row[offset + j] = recent[j];
        }
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::StationMeta;
    use chrono::{TimeZone, Utc};

    pub(crate) fn dataset_from(series: Vec<Vec<f64>>) -> Dataset {
        let stations = (0..series.len())
            .map(|i| StationMeta::named(format!("s{i}")))
            .collect();
        let masks = series.iter().map(|s| vec![false; s.len()]).collect();
        Dataset::new(
            stations,
            Utc.with_ymd_and_hms(2014, 1, 6, 0, 0, 0).unwrap(),
            series,
            masks,
        )
        .unwrap()
    }

    #[test]
    fn uniform_matches_lag_one_first_convention() {
        let ds = dataset_from(vec![
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![10.0, 20.0, 30.0, 40.0, 50.0],
        ]);
        let sys = build_uniform(&ds, 0, 2, Some(3)).unwrap();
        assert_eq!(sys.b().as_slice(), &[3.0, 4.0, 5.0]);
        let expected = [
            [2.0, 1.0, 20.0, 10.0],
            [3.0, 2.0, 30.0, 20.0],
            [4.0, 3.0, 40.0, 30.0],
        ];
        for (m, row) in expected.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(sys.a()[(m, j)], *v);
            }
        }
        assert_eq!(sys.origin_hour(), 2);
    }

    #[test]
    fn smallest_uniform_case() {
        let ds = dataset_from(vec![vec![7.0, 8.0]]);
        let sys = build_uniform(&ds, 0, 1, Some(1)).unwrap();
        assert_eq!(sys.a()[(0, 0)], 7.0);
        assert_eq!(sys.b()[0], 8.0);
    }

    #[test]
    fn boundary_history_errors() {
        // T = n + M - 1 is one hour short of M rows.
        let ds = dataset_from(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        assert!(matches!(
            build_uniform(&ds, 0, 2, Some(3)).unwrap_err(),
            Error::TooManyRows { requested: 3, available: 2 }
        ));
        let tiny = dataset_from(vec![vec![1.0, 2.0]]);
        assert!(matches!(
            build_uniform(&tiny, 0, 2, None).unwrap_err(),
            Error::InsufficientHistory { .. }
        ));
    }

    #[test]
    fn nonuniform_matches_alignment_at_n_max() {
        let ds = dataset_from(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![10.0, 20.0, 30.0, 40.0],
        ]);
        let layout = BlockLayout::new(vec![1, 2], 2).unwrap();
        let sys = build_nonuniform(&ds, 0, &layout, Some(2)).unwrap();
        assert_eq!(sys.b().as_slice(), &[3.0, 4.0]);
        assert_eq!(sys.a().row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, 20.0, 10.0]);
        assert_eq!(sys.a().row(1).iter().copied().collect::<Vec<_>>(), vec![3.0, 30.0, 20.0]);
    }

    #[test]
    fn nonuniform_with_equal_orders_equals_uniform() {
        let ds = dataset_from(vec![
            vec![1.5, 2.5, 3.5, 4.5, 5.5, 6.5],
            vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
        ]);
        let layout = BlockLayout::new(vec![3, 3], 3).unwrap();
        let uni = build_uniform(&ds, 1, 3, None).unwrap();
        let non = build_nonuniform(&ds, 1, &layout, None).unwrap();
        assert_eq!(uni, non);
    }

    #[test]
    fn layout_invariants_are_enforced() {
        assert!(matches!(
            BlockLayout::new(vec![2, 3], 2).unwrap_err(),
            Error::InvalidLayout(_)
        ));
        assert!(matches!(
            BlockLayout::new(vec![0, 1], 1).unwrap_err(),
            Error::InvalidLayout(_)
        ));
        let layout = BlockLayout::new(vec![2, 3, 1], 4).unwrap();
        assert_eq!(layout.width(), 6);
        assert_eq!(layout.offset(0), 0);
        assert_eq!(layout.offset(1), 2);
        assert_eq!(layout.offset(2), 5);
        assert_eq!(layout.block_range(1), 2..5);
        assert!(!layout.is_uniform());
    }

    #[test]
    fn shift_structure_within_blocks() {
        let ds = dataset_from(vec![
            vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0],
            vec![2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0],
        ]);
        let layout = BlockLayout::new(vec![3, 2], 3).unwrap();
        let sys = build_nonuniform(&ds, 0, &layout, None).unwrap();
        let a = sys.a();
        for p in 0..2 {
            let range = sys.layout().block_range(p);
            for m in 0..sys.rows() - 1 {
                for j in range.start + 1..range.end {
                    assert_eq!(a[(m + 1, j)], a[(m, j - 1)]);
                }
            }
        }
        // first column of the target block continues b
        for m in 0..sys.rows() - 1 {
            assert_eq!(a[(m + 1, sys.layout().offset(0))], sys.b()[m]);
        }
    }

    #[test]
    fn predict_row_orders_most_recent_first() {
        let layout = BlockLayout::new(vec![2], 2).unwrap();
        let row = predict_row(&[&[9.0, 8.0]], &layout).unwrap();
        assert_eq!(row.as_slice(), &[9.0, 8.0]);

        let layout = BlockLayout::new(vec![1, 2], 2).unwrap();
        let row = predict_row(&[&[4.0, 3.0], &[40.0, 30.0]], &layout).unwrap();
        assert_eq!(row.as_slice(), &[4.0, 40.0, 30.0]);

        assert!(matches!(
            predict_row(&[&[1.0], &[5.0]], &layout).unwrap_err(),
            Error::ShortHistory { station: 1, have: 1, needed: 2 }
        ));
    }

    #[test]
    fn rows_default_to_all_available_and_trim_oldest() {
        let ds = dataset_from(vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]);
        let all = build_uniform(&ds, 0, 2, None).unwrap();
        assert_eq!(all.rows(), 4);
        assert_eq!(all.b().as_slice(), &[3.0, 4.0, 5.0, 6.0]);
        let recent = build_uniform(&ds, 0, 2, Some(2)).unwrap();
        assert_eq!(recent.b().as_slice(), &[5.0, 6.0]);
        assert_eq!(recent.origin_hour(), 4);
    }
}
