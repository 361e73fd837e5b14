//! Fixed impulse sequences and the combinatorial constants derived from them.
//!
//! A schedule stores `0 = tau_0 < tau_1 < ...` truncated at a working
//! horizon, one jump matrix `B_j` and one jump vector `alpha_j` per
//! impulse `j >= 1`. Two counting conventions coexist:
//!
//! * [`ImpulseSchedule::count_impulses`] counts the open interval `(s, t)`,
//!   which is the quantity entering the ratio constant `K`;
//! * [`ImpulseSchedule::impulses_in`] enumerates the half-open interval
//!   `(s, t]`, which is what fundamental-matrix products and the solver use
//!   so that values stay right-continuous.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::matrix_norm;

/// Tail behavior declared for the impulse sequence beyond the stored times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapMode {
    /// Equally spaced impulses with the given spacing, forever.
    Uniform(f64),
    /// Gaps known to lie in `[rho, sigma]`.
    Bounded { rho: f64, sigma: f64 },
    /// Only the stored impulses exist.
    FiniteOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSchedule {
    dim: usize,
    times: Vec<f64>,
    matrices: Vec<DMatrix<f64>>,
    jumps: Vec<DVector<f64>>,
    gap_mode: GapMode,
    horizon: f64,
}

/// Result of the grid sweep for the ratio constant `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioConstant {
    /// Supremum found on the finite grid.
    pub grid: f64,
    /// Exact value `2/d` when the schedule is declared uniform.
    pub analytic: Option<f64>,
    /// The larger of the two; the value fed into `I = max{K, 1}`.
    pub value: f64,
}

impl ImpulseSchedule {
    /// Builds a schedule from explicit times (`times[0]` must be `0`) and one
    /// matrix per impulse. Ordering is not enforced here so that a validation
    /// report can describe a bad sequence; see [`Self::ordering_violation`].
    pub fn new(dim: usize, times: Vec<f64>, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("dimension must be positive".into()));
        }
        match times.first() {
            Some(t0) if *t0 == 0.0 => {}
            _ => return Err(Error::InvalidArgument("schedule times must start at 0".into())),
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("schedule times must be finite".into()));
        }
        if matrices.len() != times.len() - 1 {
            return Err(Error::Dimension(format!(
                "{} jump matrices for {} impulse times",
                matrices.len(),
                times.len() - 1
            )));
        }
        for (j, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Dimension(format!(
                    "jump matrix {} is {}x{}, expected {dim}x{dim}",
                    j + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("jump matrix {} is not finite", j + 1)));
            }
        }
        let horizon = times.iter().cloned().fold(0.0, f64::max);
        let jumps = vec![DVector::zeros(dim); matrices.len()];
        Ok(Self {
            dim,
            times,
            matrices,
            jumps,
            gap_mode: GapMode::FiniteOnly,
            horizon,
        })
    }

    /// `count` impulses at `d, 2d, ..., count*d`, all sharing `matrix`.
    pub fn uniform(spacing: f64, count: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidArgument("uniform spacing must be positive".into()));
        }
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::Dimension("jump matrix must be square".into()));
        }
        let times = (0..=count).map(|j| j as f64 * spacing).collect();
        let mut sched = Self::new(dim, times, vec![matrix; count])?;
        sched.gap_mode = GapMode::Uniform(spacing);
        Ok(sched)
    }

    /// No impulses at all on `[0, horizon]`.
    pub fn empty(dim: usize, horizon: f64) -> Result<Self> {
        Self::new(dim, vec![0.0], Vec::new())?.with_horizon(horizon)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument("horizon must be finite and nonnegative".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_gap_mode(mut self, gap_mode: GapMode) -> Self {
        self.gap_mode = gap_mode;
        self
    }

    /// Attaches jump vectors `alpha_j`, one per impulse.
    pub fn with_jumps(mut self, jumps: Vec<DVector<f64>>) -> Result<Self> {
        if jumps.len() != self.matrices.len() {
            return Err(Error::Dimension(format!(
                "{} jump vectors for {} impulses",
                jumps.len(),
                self.matrices.len()
            )));
        }
        if jumps.iter().any(|a| a.len() != self.dim) {
            return Err(Error::Dimension(format!("jump vectors must have length {}", self.dim)));
        }
        self.jumps = jumps;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All times including `tau_0 = 0`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Impulse times `tau_1, tau_2, ...`.
    pub fn impulse_times(&self) -> &[f64] {
        &self.times[1..]
    }

    pub fn num_impulses(&self) -> usize {
        self.matrices.len()
    }

    /// `B_j` for `j >= 1`.
    pub fn matrix(&self, j: usize) -> &DMatrix<f64> {
        &self.matrices[j - 1]
    }

    /// `alpha_j` for `j >= 1`.
    pub fn jump(&self, j: usize) -> &DVector<f64> {
        &self.jumps[j - 1]
    }

    pub fn gap_mode(&self) -> GapMode {
        self.gap_mode
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// First index `j` with `tau_j <= tau_{j-1}`, if any.
    pub fn ordering_violation(&self) -> Option<usize> {
        self.times.windows(2).position(|w| !(w[1] > w[0])).map(|i| i + 1)
    }

    /// Indices `j >= 1` of impulses with `s < tau_j <= t`, in time order.
    pub fn impulses_in(&self, s: f64, t: f64) -> impl Iterator<Item = usize> + '_ {
        self.times
            .iter()
            .enumerate()
            .skip(1)
            .filter(move |(_, &tau)| s < tau && tau <= t)
            .map(|(j, _)| j)
    }

    /// `i(t, s)`: number of impulse times in the open interval `(s, t)`.
    pub fn count_impulses(&self, s: f64, t: f64) -> Result<usize> {
        for x in [s, t] {
            if !(0.0..=self.horizon).contains(&x) {
                return Err(Error::Horizon { t: x, horizon: self.horizon });
            }
        }
        if s > t {
            return Err(Error::InvalidArgument(format!("count_impulses needs s <= t, got s = {s}, t = {t}")));
        }
        Ok(self.impulse_times().iter().filter(|&&tau| s < tau && tau < t).count())
    }

    /// Supremum of `i(t,s)/(t-s)` over grid pairs with `i(t,s) != 1`.
    pub fn ratio_constant_k(&self, horizon: f64, grid_step: f64) -> Result<RatioConstant> {
        if !(horizon > 0.0) || !(grid_step > 0.0) {
            return Err(Error::InvalidArgument("horizon and grid step must be positive".into()));
        }
        if self.num_impulses() == 0 {
            return Ok(RatioConstant { grid: 0.0, analytic: None, value: 0.0 });
        }
        let n = (horizon / grid_step + 1e-9).floor() as usize;
        let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 * grid_step).collect();
        if horizon - grid[n] > 1e-12 * horizon {
            grid.push(horizon);
        }
        let mut taus: Vec<f64> = self.impulse_times().to_vec();
        taus.sort_by(f64::total_cmp);
        let below: Vec<usize> = grid.iter().map(|&g| taus.partition_point(|&x| x < g)).collect();
        let up_to: Vec<usize> = grid.iter().map(|&g| taus.partition_point(|&x| x <= g)).collect();
        let mut best = 0.0f64;
        for a in 0..grid.len() {
            for b in (a + 1)..grid.len() {
                let count = below[b].saturating_sub(up_to[a]);
                if count != 1 {
                    best = best.max(count as f64 / (grid[b] - grid[a]));
                }
            }
        }
        let analytic = match self.gap_mode {
            GapMode::Uniform(d) => Some(2.0 / d),
            _ => None,
        };
        Ok(RatioConstant {
            grid: best,
            analytic,
            value: analytic.map_or(best, |k| k.max(best)),
        })
    }

    /// `B = max_j ||B_j||` (zero for an impulse-free schedule).
    pub fn jump_norm_bound(&self) -> f64 {
        self.matrices.iter().map(matrix_norm).fold(0.0, f64::max)
    }

    /// Minimum and maximum gap `(rho, sigma)` between consecutive times.
    pub fn gap_stats(&self) -> Result<(f64, f64)> {
        match self.gap_mode {
            GapMode::Bounded { rho, sigma } => Ok((rho, sigma)),
            GapMode::Uniform(d) if self.times.len() < 2 => Ok((d, d)),
            _ if self.times.len() < 2 => Err(Error::UndefinedGaps(
                "a single time point has no gaps".into(),
            )),
            _ => {
                let (mut rho, mut sigma) = (f64::INFINITY, f64::NEG_INFINITY);
                for w in self.times.windows(2) {
                    let gap = w[1] - w[0];
                    rho = rho.min(gap);
                    sigma = sigma.max(gap);
                }
                Ok((rho, sigma))
            }
        }
    }
}

/// `(b, I) = (max{B, 1}, max{K, 1})`.
pub fn bound_constants(jump_bound: f64, k: f64) -> (f64, f64) {
    (jump_bound.max(1.0), k.max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(count: usize, b: f64) -> ImpulseSchedule {
        ImpulseSchedule::uniform(1.0, count, DMatrix::from_element(1, 1, b)).unwrap()
    }

    #[test]
    fn counts_open_interval() {
        let s = unit(10, 0.5);
        assert_eq!(s.count_impulses(0.5, 2.5).unwrap(), 2);
        assert_eq!(s.count_impulses(0.9, 2.1).unwrap(), 2);
        assert_eq!(s.count_impulses(1.0, 2.0).unwrap(), 0);
        assert_eq!(s.count_impulses(3.3, 3.3).unwrap(), 0);
        assert_eq!(s.count_impulses(2.0, 2.0).unwrap(), 0);
    }

    #[test]
    fn count_outside_horizon_errors() {
        let s = unit(3, 0.5);
        assert!(matches!(s.count_impulses(0.0, 3.5), Err(Error::Horizon { .. })));
        assert!(matches!(s.count_impulses(-0.1, 1.0), Err(Error::Horizon { .. })));
    }

    #[test]
    fn half_open_enumeration_includes_right_end() {
        let s = unit(5, 0.5);
        let idx: Vec<usize> = s.impulses_in(1.0, 3.0).collect();
        assert_eq!(idx, vec![2, 3]);
    }

    #[test]
    fn ratio_constant_uniform() {
        let k1 = unit(10, 0.5).ratio_constant_k(10.0, 0.01).unwrap();
        assert_eq!(k1.analytic, Some(2.0));
        assert_eq!(k1.value, 2.0);
        assert!(k1.grid <= 2.0 && k1.grid > 1.9);

        let half = ImpulseSchedule::uniform(0.5, 20, DMatrix::from_element(1, 1, 0.5)).unwrap();
        let k2 = half.ratio_constant_k(10.0, 0.01).unwrap();
        assert_eq!(k2.value, 4.0);
        assert!(k2.grid <= 4.0 && k2.grid > 3.6);
    }

    #[test]
    fn ratio_constant_without_impulses_is_zero() {
        let s = ImpulseSchedule::empty(1, 10.0).unwrap();
        assert_eq!(s.ratio_constant_k(10.0, 0.1).unwrap().value, 0.0);
    }

    #[test]
    fn bound_constants_table() {
        assert_eq!(bound_constants(0.5, 2.0), (1.0, 2.0));
        assert_eq!(bound_constants(1.2, 2.0), (1.2, 2.0));
        assert_eq!(bound_constants(2.0, 0.5), (2.0, 1.0));
    }

    #[test]
    fn gaps() {
        assert_eq!(unit(4, 0.5).gap_stats().unwrap(), (1.0, 1.0));
        let m = || DMatrix::from_element(1, 1, 0.5);
        let s = ImpulseSchedule::new(1, vec![0.0, 0.5, 2.0], vec![m(), m()]).unwrap();
        assert_eq!(s.gap_stats().unwrap(), (0.5, 1.5));
        let declared = s.with_gap_mode(GapMode::Bounded { rho: 0.3, sigma: 1.7 });
        assert_eq!(declared.gap_stats().unwrap(), (0.3, 1.7));
        let lone = ImpulseSchedule::empty(1, 5.0).unwrap();
        assert!(matches!(lone.gap_stats(), Err(Error::UndefinedGaps(_))));
    }

    #[test]
    fn ordering_and_shapes() {
        let m = || DMatrix::from_element(1, 1, 0.5);
        let bad = ImpulseSchedule::new(1, vec![0.0, 1.0, 0.5], vec![m(), m()]).unwrap();
        assert_eq!(bad.ordering_violation(), Some(2));
        assert!(ImpulseSchedule::new(1, vec![0.0, 1.0], vec![]).is_err());
        assert!(ImpulseSchedule::new(2, vec![0.0, 1.0], vec![m()]).is_err());
        assert!(ImpulseSchedule::new(1, vec![0.5, 1.0], vec![m()]).is_err());
    }

    #[test]
    fn jump_norm_bound_uses_row_sums() {
        let b = DMatrix::from_row_slice(2, 2, &[0.3, -0.4, 0.1, 0.1]);
        let s = ImpulseSchedule::uniform(1.0, 3, b).unwrap();
        assert!((s.jump_norm_bound() - 0.7).abs() < 1e-15);
    }
}
