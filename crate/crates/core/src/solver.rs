//! Coefficient recovery: block orthogonal matching pursuit, dense least
//! squares, and an exhaustive-search oracle.
//!
//! The pursuit selects one station block per iteration, the one whose columns
//! correlate most with the current residual, then refits by least squares
//! over every selected block and repeats until the block budget, the residual
//! tolerance, or a stalled gain stops it. Columns are normalized to unit
//! length before selection by default so high-variance stations do not
//! dominate the correlation criterion; returned coefficients are always in
//! original column units.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{BlockLayout, DesignSystem};
use crate::{Error, Result};

/// Stopping and conditioning knobs for [`bomp`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Maximum number of blocks to select (clamped to the station count).
    pub k_max: usize,
    /// Stop when the residual norm falls below this fraction of the norm of b.
    pub residual_tol: f64,
    /// Rescale every column of A to unit Euclidean norm before selection.
    pub normalize_columns: bool,
    /// Ridge jitter applied to a selected-support subproblem that turns out
    /// rank-deficient (recursive predictions can produce collinear lags).
    pub ridge: f64,
    /// Stop when an iteration shrinks the residual by less than this
    /// relative amount.
    pub min_gain: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k_max: 10,
            residual_tol: 1e-6,
            normalize_columns: true,
            ridge: 1e-10,
            min_gain: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be >= 1".into()));
        }
        if self.residual_tol < 0.0 || !self.residual_tol.is_finite() {
            return Err(Error::InvalidConfig("residual_tol must be >= 0".into()));
        }
        if self.ridge < 0.0 || !self.ridge.is_finite() {
            return Err(Error::InvalidConfig("ridge must be >= 0".into()));
        }
        if self.min_gain < 0.0 || !self.min_gain.is_finite() {
            return Err(Error::InvalidConfig("min_gain must be >= 0".into()));
        }
        Ok(())
    }
}

/// Block-sparse coefficient vector with its explicit support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoefficients {
    layout: BlockLayout,
    /// Selected block indices in selection order.
    support: Vec<usize>,
    /// Full-width coefficient vector, zero outside the support blocks.
    values: DVector<f64>,
    target: usize,
    /// Per-column scale factors applied during the solve (1.0 if disabled).
    scaling: Vec<f64>,
    trained_at_hour: usize,
    /// Columns excluded from selection because they were identically zero.
    dead_columns: Vec<usize>,
    /// Residual norms: initial `||b||` followed by one entry per iteration.
    residuals: Vec<f64>,
}

impl SparseCoefficients {
    /// Builds coefficients from parts, checking the support invariants.
    pub fn new(
        layout: BlockLayout,
        support: Vec<usize>,
        values: DVector<f64>,
        target: usize,
        trained_at_hour: usize,
    ) -> Result<Self> {
        if values.len() != layout.width() {
            return Err(Error::InvalidCoefficients(format!(
                "values length {} does not match layout width {}",
                values.len(),
                layout.width()
            )));
        }
        if target >= layout.station_count() {
            return Err(Error::TargetOutOfRange {
                target,
                stations: layout.station_count(),
            });
        }
        let p_count = layout.station_count();
        let mut seen = vec![false; p_count];
        for &p in &support {
            if p >= p_count {
                return Err(Error::InvalidCoefficients(format!(
                    "support block {p} out of range"
                )));
            }
            if seen[p] {
                return Err(Error::InvalidCoefficients(format!(
                    "support block {p} repeated"
                )));
            }
            seen[p] = true;
        }
        for j in 0..values.len() {
            let block = (0..p_count)
                .find(|&p| layout.block_range(p).contains(&j))
                .expect("column belongs to a block");
            if !seen[block] && values[j] != 0.0 {
                return Err(Error::InvalidCoefficients(format!(
                    "nonzero value at column {j} outside the support"
                )));
            }
        }
        let width = layout.width();
        Ok(SparseCoefficients {
            layout,
            support,
            values,
            target,
            scaling: vec![1.0; width],
            trained_at_hour,
            dead_columns: Vec::new(),
            residuals: Vec::new(),
        })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    /// Selected blocks in selection order.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Full-width coefficient vector in original column units.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Station `p`'s coefficient slice, lag 1 first.
    pub fn block_values(&self, p: usize) -> &[f64] {
        &self.values.as_slice()[self.layout.block_range(p)]
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn trained_at_hour(&self) -> usize {
        self.trained_at_hour
    }

    pub fn set_trained_at_hour(&mut self, hour: usize) {
        self.trained_at_hour = hour;
    }

    /// Columns skipped by selection because they were identically zero.
    pub fn dead_columns(&self) -> &[usize] {
        &self.dead_columns
    }

    /// Residual norm trace: `||b||` followed by one value per iteration.
    /// Empty for hand-built coefficients.
    pub fn residual_trace(&self) -> &[f64] {
        &self.residuals
    }

    /// Final solve residual, when this came out of a solver.
    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }

    /// Recomputes `||b - A x||` for this coefficient vector on a system.
    pub fn residual_norm(&self, sys: &DesignSystem) -> f64 {
        (sys.b() - sys.a() * &self.values).norm()
    }

    pub fn to_wire(&self) -> CoefficientsWire {
        CoefficientsWire {
            target: self.target,
            orders: self.layout.orders().to_vec(),
            support: self.support.clone(),
            values: self.values.as_slice().to_vec(),
            trained_at_hour: self.trained_at_hour,
        }
    }

    pub fn from_wire(wire: CoefficientsWire) -> Result<Self> {
        let n_max = wire.orders.iter().copied().max().unwrap_or(0);
        let layout = BlockLayout::new(wire.orders, n_max)?;
        SparseCoefficients::new(
            layout,
            wire.support,
            DVector::from_vec(wire.values),
            wire.target,
            wire.trained_at_hour,
        )
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_wire())?;
        s.push('\n');
        Ok(s)
    }
}

/// Fixed JSON shape for persisted coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientsWire {
    pub target: usize,
    pub orders: Vec<usize>,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub trained_at_hour: usize,
}

/// Thin-QR least squares with rank detection from R's diagonal.
fn qr_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::RankDeficient { rank: m, cols: n });
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let max_diag = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let tol = f64::EPSILON * m.max(n) as f64 * max_diag;
    let rank = (0..n).filter(|&i| r[(i, i)].abs() > tol).count();
    if rank < n {
        return Err(Error::RankDeficient { rank, cols: n });
    }
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let rhs = qtb.rows(0, n).into_owned();
    r.solve_upper_triangular(&rhs)
        .ok_or(Error::RankDeficient { rank, cols: n })
}

/// Ridge solve via the augmented system `[A; sqrt(ridge) I] x = [b; 0]`,
/// which keeps the orthogonalization route instead of forming normal
/// equations.
fn ridge_solve(a: &DMatrix<f64>, b: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    let mut aug = DMatrix::<f64>::zeros(m + n, n);
    aug.rows_mut(0, m).copy_from(a);
    let sqrt_ridge = ridge.sqrt();
    for j in 0..n {
        aug[(m + j, j)] = sqrt_ridge;
    }
    let mut rhs = DVector::<f64>::zeros(m + n);
    rhs.rows_mut(0, m).copy_from(b);
    qr_solve(&aug, &rhs)
}

/// Least squares `argmin ||b - Ax||^2 + ridge ||x||^2` over the full system.
///
/// With `ridge = 0` a rank-deficient matrix is an error rather than a
/// silently pseudo-inverted one.
pub fn least_squares(sys: &DesignSystem, ridge: f64) -> Result<DVector<f64>> {
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::InvalidConfig("ridge must be >= 0".into()));
    }
    if ridge == 0.0 {
        qr_solve(sys.a(), sys.b())
    } else {
        ridge_solve(sys.a(), sys.b(), ridge)
    }
}

/// LS over an explicit column subset; falls back to ridge jitter when the
/// subset is rank-deficient and `jitter > 0`.
fn solve_columns(
    a: &DMatrix<f64>,
    cols: &[usize],
    b: &DVector<f64>,
    jitter: f64,
) -> Result<DVector<f64>> {
    let sub = a.select_columns(cols.iter());
    match qr_solve(&sub, b) {
        Ok(x) => Ok(x),
        Err(Error::RankDeficient { .. }) if jitter > 0.0 => ridge_solve(&sub, b, jitter),
        Err(e) => Err(e),
    }
}

/// Columns of every block in `blocks`, blocks in ascending index order.
///
/// Selection order never reaches the factorization, so refitting the same
/// support always performs the identical computation.
fn support_columns(layout: &BlockLayout, blocks: &[usize]) -> Vec<usize> {
    let mut sorted: Vec<usize> = blocks.to_vec();
    sorted.sort_unstable();
    sorted
        .into_iter()
        .flat_map(|p| layout.block_range(p))
        .collect()
}

/// Block orthogonal matching pursuit over a design system.
///
/// Greedy loop: pick the block maximizing `||A_p^T r||`, refit by least
/// squares over all selected blocks, update the residual, and stop at the
/// block budget, the residual tolerance, or a stalled gain, whichever comes
/// first. Ties go to the lowest block index so runs are deterministic.
pub fn bomp(sys: &DesignSystem, cfg: &SolverConfig) -> Result<SparseCoefficients> {
    cfg.validate()?;
    let layout = sys.layout().clone();
    let p_count = layout.station_count();
    let width = layout.width();
    let k_eff = cfg.k_max.min(p_count);
    let trained_at = sys.origin_hour() + sys.rows();

    // Column scaling pass.
    let mut a_work = sys.a().clone();
    let mut scaling = vec![1.0; width];
    let mut dead_columns = Vec::new();
    if cfg.normalize_columns {
        for (j, scale) in scaling.iter_mut().enumerate() {
            let norm = a_work.column(j).norm();
            if norm > 0.0 {
                *scale = norm;
                let mut col = a_work.column_mut(j);
                col /= norm;
            } else {
                dead_columns.push(j);
            }
        }
    }

    let b = sys.b();
    let b_norm = b.norm();
    let mut result = SparseCoefficients {
        layout: layout.clone(),
        support: Vec::new(),
        values: DVector::zeros(width),
        target: sys.target(),
        scaling,
        trained_at_hour: trained_at,
        dead_columns,
        residuals: vec![b_norm],
    };
    if b_norm == 0.0 {
        return Ok(result);
    }

    let stop_at = cfg.residual_tol * b_norm;
    let mut in_support = vec![false; p_count];
    let mut residual = b.clone();
    let mut prev_norm = b_norm;
    let mut solution: Option<(Vec<usize>, DVector<f64>)> = None;

    loop {
        // Selection: strict improvement keeps the lowest index on ties.
        let mut best: Option<(usize, f64)> = None;
        for (p, &taken) in in_support.iter().enumerate() {
            if taken {
                continue;
            }
            let score: f64 = layout
                .block_range(p)
                .map(|j| {
                    let d = a_work.column(j).dot(&residual);
                    d * d
                })
                .sum::<f64>()
                .sqrt();
            if score > best.map_or(0.0, |(_, s)| s) {
                best = Some((p, score));
            }
        }
        let Some((chosen, _)) = best else {
            break; // nothing correlates with the residual
        };

        result.support.push(chosen);
        in_support[chosen] = true;
        let cols = support_columns(&layout, &result.support);
        let x_sub = solve_columns(&a_work, &cols, b, cfg.ridge)?;
        let a_sub = a_work.select_columns(cols.iter());
        residual = b - &a_sub * &x_sub;
        let res_norm = residual.norm();
        result.residuals.push(res_norm);
        solution = Some((cols, x_sub));

        if res_norm <= stop_at {
            break;
        }
        if result.support.len() >= k_eff {
            break;
        }
        let gain = (prev_norm - res_norm) / prev_norm;
        if gain < cfg.min_gain {
            break;
        }
        prev_norm = res_norm;
    }

    if let Some((cols, x_sub)) = solution {
        for (i, &j) in cols.iter().enumerate() {
            result.values[j] = x_sub[i] / result.scaling[j];
        }
    }
    Ok(result)
}

const ORACLE_GUARD: u128 = 100_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if acc > ORACLE_GUARD * 1000 {
            return u128::MAX;
        }
    }
    acc
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Global minimizer of `||b - Ax||` over all supports of exactly `k` blocks.
///
/// Enumerates every support in lexicographic order, solving LS on each; ties
/// keep the first (lexicographically smallest) support. Intended as a test
/// oracle, hence the hard guard on the number of combinations.
pub fn exhaustive_oracle(sys: &DesignSystem, k: usize) -> Result<SparseCoefficients> {
    let layout = sys.layout().clone();
    let p_count = layout.station_count();
    if k == 0 || k > p_count {
        return Err(Error::InvalidConfig(format!(
            "oracle block count {k} out of [1, {p_count}]"
        )));
    }
    let combos = binomial(p_count, k);
    if combos > ORACLE_GUARD {
        return Err(Error::CombinatorialGuard {
            combos,
            limit: ORACLE_GUARD,
        });
    }

    let jitter = SolverConfig::default().ridge;
    let b = sys.b();
    let b_norm = b.norm();
    let mut best: Option<(Vec<usize>, DVector<f64>, f64)> = None;
    let mut support: Vec<usize> = (0..k).collect();
    loop {
        let cols = support_columns(&layout, &support);
        let x_sub = solve_columns(sys.a(), &cols, b, jitter)?;
        let a_sub = sys.a().select_columns(cols.iter());
        let res = (b - &a_sub * &x_sub).norm();
        if best.as_ref().is_none_or(|(_, _, r)| res < *r) {
            best = Some((support.clone(), x_sub, res));
        }
        if !next_combination(&mut support, p_count) {
            break;
        }
    }

    let (blocks, x_sub, res) = best.expect("at least one support");
    let mut values = DVector::<f64>::zeros(layout.width());
    let cols = support_columns(&layout, &blocks);
    for (i, &j) in cols.iter().enumerate() {
        values[j] = x_sub[i];
    }
    let trained_at = sys.origin_hour() + sys.rows();
    let mut out =
        SparseCoefficients::new(layout, blocks, values, sys.target(), trained_at)?;
    out.residuals = vec![b_norm, res];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn system(a: DMatrix<f64>, b: DVector<f64>, orders: Vec<usize>) -> DesignSystem {
        let n_max = *orders.iter().max().unwrap();
        let layout = BlockLayout::new(orders, n_max).unwrap();
        DesignSystem::new(a, b, layout, 0, 0).unwrap()
    }

    fn gaussian_system(
        rng: &mut ChaCha8Rng,
        m: usize,
        p: usize,
        n: usize,
    ) -> DesignSystem {
        let a = DMatrix::from_fn(m, p * n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        system(a, b, vec![n; p])
    }

    /// Planted noiseless instance: returns (system, support, x*).
    fn planted(
        rng: &mut ChaCha8Rng,
        m: usize,
        p: usize,
        n: usize,
        k: usize,
    ) -> (DesignSystem, Vec<usize>, DVector<f64>) {
        let a = DMatrix::from_fn(m, p * n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut blocks: Vec<usize> = (0..p).collect();
        for i in 0..k {
            let j = rng.random_range(i..p);
            blocks.swap(i, j);
        }
        let mut support: Vec<usize> = blocks[..k].to_vec();
        support.sort_unstable();
        let mut x = DVector::<f64>::zeros(p * n);
        for &blk in &support {
            for j in blk * n..(blk + 1) * n {
                x[j] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let b = &a * &x;
        (system(a, b, vec![n; p]), support, x)
    }

    fn sorted(v: &[usize]) -> Vec<usize> {
        let mut s = v.to_vec();
        s.sort_unstable();
        s
    }

    #[test]
    fn identity_matrix_selects_the_active_block() {
        let sys = system(
            DMatrix::identity(4, 4),
            DVector::from_vec(vec![0.0, 0.0, 3.0, 4.0]),
            vec![2, 2],
        );
        let cfg = SolverConfig {
            k_max: 1,
            ..SolverConfig::default()
        };
        let coeffs = bomp(&sys, &cfg).unwrap();
        assert_eq!(coeffs.support(), &[1]);
        let expected = [0.0, 0.0, 3.0, 4.0];
        for (got, want) in coeffs.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(coeffs.final_residual().unwrap() < 1e-12);
    }

    #[test]
    fn zero_rhs_returns_empty_support() {
        let sys = system(
            DMatrix::identity(4, 4),
            DVector::zeros(4),
            vec![2, 2],
        );
        let coeffs = bomp(&sys, &SolverConfig::default()).unwrap();
        assert!(coeffs.support().is_empty());
        assert_eq!(coeffs.values().iter().filter(|&&v| v != 0.0).count(), 0);
    }

    #[test]
    fn planted_noiseless_instance_is_recovered_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (sys, support, x_true) = planted(&mut rng, 60, 10, 3, 2);
        let coeffs = bomp(&sys, &SolverConfig::default()).unwrap();
        assert_eq!(sorted(coeffs.support()), support);
        let err = (coeffs.values() - &x_true).amax();
        assert!(err <= 1e-8, "coefficient error {err}");
        let oracle = exhaustive_oracle(&sys, 2).unwrap();
        assert_eq!(sorted(oracle.support()), support);
    }

    #[test]
    fn residuals_are_monotone_and_support_grows_one_per_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sys = gaussian_system(&mut rng, 40, 8, 2);
        let cfg = SolverConfig {
            k_max: 8,
            residual_tol: 0.0,
            min_gain: 0.0,
            ..SolverConfig::default()
        };
        let coeffs = bomp(&sys, &cfg).unwrap();
        let trace = coeffs.residual_trace();
        assert_eq!(trace.len(), coeffs.support().len() + 1);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let mut uniq = coeffs.support().to_vec();
        uniq.dedup();
        assert_eq!(uniq.len(), coeffs.support().len());
    }

    #[test]
    fn residual_is_orthogonal_to_selected_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sys = gaussian_system(&mut rng, 50, 6, 3);
        let cfg = SolverConfig {
            k_max: 3,
            residual_tol: 0.0,
            min_gain: 0.0,
            ..SolverConfig::default()
        };
        let coeffs = bomp(&sys, &cfg).unwrap();
        let r = sys.b() - sys.a() * coeffs.values();
        let bound = 1e-8 * sys.a().norm() * sys.b().norm();
        for &p in coeffs.support() {
            for j in sys.layout().block_range(p) {
                assert!(sys.a().column(j).dot(&r).abs() <= bound);
            }
        }
    }

    #[test]
    fn descaled_values_match_unnormalized_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (sys, _, _) = planted(&mut rng, 80, 6, 3, 2);
        let on = bomp(&sys, &SolverConfig::default()).unwrap();
        let off = bomp(
            &sys,
            &SolverConfig {
                normalize_columns: false,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(sorted(on.support()), sorted(off.support()));
        for j in 0..sys.layout().width() {
            let denom = off.values()[j].abs().max(1.0);
            assert!((on.values()[j] - off.values()[j]).abs() / denom < 1e-6);
        }
    }

    #[test]
    fn huge_min_gain_stops_after_first_block() {
        let sys = system(
            DMatrix::identity(4, 4),
            DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]),
            vec![2, 2],
        );
        let cfg = SolverConfig {
            k_max: 2,
            min_gain: 0.9,
            ..SolverConfig::default()
        };
        let coeffs = bomp(&sys, &cfg).unwrap();
        assert_eq!(coeffs.support(), &[0]);
    }

    #[test]
    fn dead_columns_are_recorded_and_never_selected() {
        let mut a = DMatrix::identity(4, 4);
        a.column_mut(0).fill(0.0);
        a.column_mut(1).fill(0.0);
        let sys = system(a, DVector::from_vec(vec![0.5, 0.5, 1.0, 2.0]), vec![2, 2]);
        let coeffs = bomp(&sys, &SolverConfig::default()).unwrap();
        assert_eq!(coeffs.dead_columns(), &[0, 1]);
        assert_eq!(coeffs.support(), &[1]);
        assert_eq!(coeffs.values()[0], 0.0);
        assert_eq!(coeffs.values()[1], 0.0);
    }

    #[test]
    fn least_squares_hand_cases() {
        let sys = system(
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DVector::from_vec(vec![1.0, 3.0]),
            vec![1],
        );
        let x = least_squares(&sys, 0.0).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);

        let b = DVector::from_vec(vec![0.3, -1.2, 4.5]);
        let sys = system(DMatrix::identity(3, 3), b.clone(), vec![1, 1, 1]);
        let x = least_squares(&sys, 0.0).unwrap();
        assert!((x - b).amax() < 1e-12);
    }

    #[test]
    fn least_squares_rank_deficiency_and_ridge() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, 2.0]);
        let sys = system(a, b, vec![1, 1]);
        assert!(matches!(
            least_squares(&sys, 0.0).unwrap_err(),
            Error::RankDeficient { .. }
        ));
        let ridge = 1e-6;
        let x = least_squares(&sys, ridge).unwrap();
        // closed form: x1 = x2 = 4 / (4 + ridge)
        let expected = 4.0 / (4.0 + ridge);
        assert!((x[0] - expected).abs() < 1e-10);
        assert!((x[1] - expected).abs() < 1e-10);
        assert!((x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn least_squares_satisfies_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sys = gaussian_system(&mut rng, 40, 4, 3);
        let x = least_squares(&sys, 0.0).unwrap();
        let grad = sys.a().transpose() * (sys.b() - sys.a() * &x);
        assert!(grad.amax() <= 1e-8 * sys.a().norm() * sys.b().norm());
    }

    #[test]
    fn oracle_with_full_budget_equals_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let sys = gaussian_system(&mut rng, 30, 4, 2);
        let dense = least_squares(&sys, 0.0).unwrap();
        let oracle = exhaustive_oracle(&sys, 4).unwrap();
        assert_eq!(oracle.support(), &[0, 1, 2, 3]);
        assert!((oracle.values() - dense).amax() < 1e-12);
    }

    #[test]
    fn oracle_dominates_bomp_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let sys = gaussian_system(&mut rng, 30, 6, 2);
            let cfg = SolverConfig {
                k_max: 2,
                residual_tol: 0.0,
                min_gain: 0.0,
                ..SolverConfig::default()
            };
            let greedy = bomp(&sys, &cfg).unwrap();
            let oracle = exhaustive_oracle(&sys, 2).unwrap();
            let greedy_res = greedy.residual_norm(&sys);
            let oracle_res = oracle.residual_norm(&sys);
            assert!(oracle_res <= greedy_res + 1e-10 * (1.0 + greedy_res));
        }
    }

    #[test]
    fn oracle_guard_rejects_blowups() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let sys = gaussian_system(&mut rng, 10, 50, 1);
        assert!(matches!(
            exhaustive_oracle(&sys, 25).unwrap_err(),
            Error::CombinatorialGuard { .. }
        ));
    }

    #[test]
    fn wire_round_trip_preserves_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (sys, _, _) = planted(&mut rng, 40, 5, 2, 2);
        let coeffs = bomp(&sys, &SolverConfig::default()).unwrap();
        let back = SparseCoefficients::from_wire(coeffs.to_wire()).unwrap();
        assert_eq!(back.support(), coeffs.support());
        assert_eq!(back.values(), coeffs.values());
        assert_eq!(back.target(), coeffs.target());
        assert_eq!(back.trained_at_hour(), coeffs.trained_at_hour());
    }

    #[test]
    fn new_rejects_values_outside_support() {
        let layout = BlockLayout::uniform(2, 2).unwrap();
        let values = DVector::from_vec(vec![1.0, 0.0, 0.5, 0.0]);
        assert!(matches!(
            SparseCoefficients::new(layout, vec![0], values, 0, 0).unwrap_err(),
            Error::InvalidCoefficients(_)
        ));
    }
}
