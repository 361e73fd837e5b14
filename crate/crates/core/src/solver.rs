//! Fixed-step classical RK4 with exact jumps at the impulse times.
//!
//! The grid contains every impulse time in `(start, end]` and the first
//! derivative-discontinuity points of each delay law; segments between
//! breakpoints are split into equal substeps no longer than `step`. Delayed
//! states are read from the part of the trajectory already computed, by
//! linear interpolation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
pub use crate::norms::Side;
use crate::norms::SampledFunction;
use crate::system::DelaySystem;
use crate::timefn::DelayLaw;

/// What the delayed state reads for arguments before the start time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryMode {
    /// The system's initial function `phi`.
    Phi,
    /// Zero, as in the fundamental-matrix problem.
    Zero,
}

/// A computed solution: right-continuous values, left limits at jumps, and
/// the right-hand side sampled along the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: SampledFunction,
    derivs: Option<SampledFunction>,
}

impl Trajectory {
    pub fn new(values: SampledFunction, derivs: Option<SampledFunction>) -> Result<Self> {
        if let Some(d) = &derivs {
            if d.times() != values.times() {
                return Err(Error::InvalidArgument("derivative samples live on a different grid".into()));
            }
        }
        Ok(Self { values, derivs })
    }

    pub fn values(&self) -> &SampledFunction {
        &self.values
    }

    pub fn derivatives(&self) -> Option<&SampledFunction> {
        self.derivs.as_ref()
    }

    pub fn times(&self) -> &[f64] {
        self.values.times()
    }

    pub fn is_jump(&self, i: usize) -> bool {
        self.values.is_jump(i)
    }

    /// State at `t`; at a jump `side` picks the pre- or post-jump value.
    pub fn eval(&self, t: f64, side: Side) -> Result<DVector<f64>> {
        let m = self.values.eval(t, side)?;
        Ok(DVector::from_column_slice(m.as_slice()))
    }

    /// Maximum of `|x(t_i)|` over grid points `t_i >= from`.
    pub fn max_norm_after(&self, from: f64) -> f64 {
        self.times()
            .iter()
            .zip(self.values.right_values())
            .filter(|(t, _)| **t >= from)
            .map(|(_, v)| crate::linalg::matrix_norm(v))
            .fold(0.0, f64::max)
    }
}

/// Solves the equation on `[0, t_end]` from `x(0) = x0` with the system's
/// forcing and jump vectors.
pub fn integrate(sys: &DelaySystem, x0: &DVector<f64>, t_end: f64, step: f64, mode: HistoryMode) -> Result<Trajectory> {
    if x0.len() != sys.dim() {
        return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.len(), sys.dim())));
    }
    let init = DMatrix::from_column_slice(sys.dim(), 1, x0.as_slice());
    Run { sys, start: 0.0, end: t_end, step, history: mode, forced: true }.solve(init)
}

/// Matrix solution from `X(start) = E_n` with zero history, no forcing and
/// no jump vectors.
pub(crate) fn integrate_matrix(sys: &DelaySystem, start: f64, end: f64, step: f64) -> Result<Trajectory> {
    let init = DMatrix::identity(sys.dim(), sys.dim());
    Run { sys, start, end, step, history: HistoryMode::Zero, forced: false }.solve(init)
}

struct Run<'a> {
    sys: &'a DelaySystem,
    start: f64,
    end: f64,
    step: f64,
    history: HistoryMode,
    forced: bool,
}

/// Storage shared between the stepper and the delayed-state lookup.
struct Path {
    times: Vec<f64>,
    right: Vec<DMatrix<f64>>,
    left: Vec<DMatrix<f64>>,
    dright: Vec<DMatrix<f64>>,
    dleft: Vec<DMatrix<f64>>,
}

impl Run<'_> {
    fn solve(&self, init: DMatrix<f64>) -> Result<Trajectory> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidArgument(format!("step must be positive, got {}", self.step)));
        }
        if self.end > self.sys.horizon() {
            return Err(Error::Horizon { t: self.end, horizon: self.sys.horizon() });
        }
        if !(self.start >= 0.0) || self.end < self.start {
            return Err(Error::InvalidArgument(format!(
                "integration interval [{}, {}] is invalid",
                self.start, self.end
            )));
        }
        if self.history == HistoryMode::Phi && self.start != 0.0 {
            return Err(Error::InvalidArgument("phi history requires starting at 0".into()));
        }
        let (grid, impulse_at) = self.grid();
        let size = grid.len();
        let mut path = Path {
            times: Vec::with_capacity(size),
            right: Vec::with_capacity(size),
            left: Vec::with_capacity(size),
            dright: Vec::with_capacity(size),
            dleft: Vec::with_capacity(size),
        };
        path.times.push(grid[0]);
        path.right.push(init.clone());
        path.left.push(init);

        for i in 0..size - 1 {
            let (t0, t1) = (grid[i], grid[i + 1]);
            let h = t1 - t0;
            let x = path.right[i].clone();
            let zero = DMatrix::zeros(x.nrows(), x.ncols());
            let k1 = self.rhs(&path, i, &zero, t0, &x, Side::Right)?;
            let k2 = self.rhs(&path, i, &k1, t0 + 0.5 * h, &(&x + &k1 * (0.5 * h)), Side::Right)?;
            let k3 = self.rhs(&path, i, &k1, t0 + 0.5 * h, &(&x + &k2 * (0.5 * h)), Side::Right)?;
            let k4 = self.rhs(&path, i, &k1, t1, &(&x + &k3 * h), Side::Left)?;
            let next = &x + (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (h / 6.0);
            if path.dleft.len() == i {
                path.dleft.push(k1.clone());
            }
            path.dright.push(k1.clone());
            path.times.push(t1);
            match impulse_at[i + 1] {
                Some(j) => {
                    let dleft = self.rhs(&path, i, &k1, t1, &next, Side::Left)?;
                    let sched = self.sys.schedule();
                    let mut post = sched.matrix(j) * &next;
                    if self.forced {
                        let alpha = sched.jump(j);
                        for mut col in post.column_iter_mut() {
                            col += alpha;
                        }
                    }
                    path.left.push(next);
                    path.right.push(post);
                    path.dleft.push(dleft);
                }
                None => {
                    path.left.push(next.clone());
                    path.right.push(next);
                }
            }
        }
        let last = size - 1;
        let x = path.right[last].clone();
        let zero = DMatrix::zeros(x.nrows(), x.ncols());
        let d_end = self.rhs(&path, last, &zero, grid[last], &x, Side::Right)?;
        if path.dleft.len() == last {
            path.dleft.push(d_end.clone());
        }
        path.dright.push(d_end);

        let values = SampledFunction::from_parts_unchecked(path.times.clone(), path.right, path.left);
        let derivs = SampledFunction::from_parts_unchecked(path.times, path.dright, path.dleft);
        Trajectory::new(values, Some(derivs))
    }

    /// Integration grid and, per grid point, the impulse applied there.
    fn grid(&self) -> (Vec<f64>, Vec<Option<usize>>) {
        let (s, end) = (self.start, self.end);
        let sched = self.sys.schedule();
        let impulses: Vec<(usize, f64)> = sched.impulses_in(s, end).map(|j| (j, sched.times()[j])).collect();
        // (time, anchored impulse index); start and end use index 0
        let mut points: Vec<(f64, Option<usize>)> = vec![(s, Some(0)), (end, Some(0))];
        points.extend(impulses.iter().map(|&(j, t)| (t, Some(j))));
        for term in self.sys.terms() {
            match term.delay {
                DelayLaw::ConstantLag(lag) if lag > 0.0 => {
                    let mut k = 1.0;
                    while s + k * lag < end {
                        points.push((s + k * lag, None));
                        k += 1.0;
                    }
                    points.extend(impulses.iter().map(|&(_, t)| (t + lag, None)).filter(|p| p.0 < end));
                }
                DelayLaw::Pantograph(ratio) if ratio < 1.0 => {
                    let seeds = (s > 0.0).then_some(s).into_iter().chain(impulses.iter().map(|p| p.1));
                    for p in seeds {
                        for q in [p / ratio, p / (ratio * ratio)] {
                            if q < end {
                                points.push((q, None));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tol = self.step * 1e-6;
        let mut merged: Vec<(f64, Option<usize>)> = Vec::with_capacity(points.len());
        // Derived breakpoints yield to nearby anchored ones; anchored points
        // (start, end, impulses) only merge when equal.
        for p in points {
            match merged.last_mut() {
                Some(last) if p.1.is_none() && p.0 - last.0 <= tol => {}
                Some(last) if last.1.is_none() && p.0 - last.0 <= tol => *last = p,
                Some(last) if p.0 == last.0 => {
                    if p.1.is_some_and(|j| j > 0) {
                        *last = p;
                    }
                }
                _ => merged.push(p),
            }
        }
        if merged.len() == 1 {
            return (vec![s], vec![None]);
        }
        let mut grid = Vec::new();
        let mut impulse_at = Vec::new();
        grid.push(s);
        impulse_at.push(None);
        for w in merged.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            let n = ((b - a) / self.step - 1e-9).ceil().max(1.0) as usize;
            for k in 1..=n {
                grid.push(if k == n { b } else { a + (b - a) * k as f64 / n as f64 });
                impulse_at.push(None);
            }
            *impulse_at.last_mut().unwrap() = w[1].1.filter(|&j| j > 0);
        }
        (grid, impulse_at)
    }

    /// `f(t) - sum_k A_k(t) x(h_k(t))` at a stage of the step leaving `t_i`.
    /// `side` says which limit to take when a delayed argument lands exactly
    /// on a discontinuity of the stored path: the end-of-step stage sees the
    /// path from the left.
    fn rhs(&self, path: &Path, i: usize, k1: &DMatrix<f64>, t: f64, y: &DMatrix<f64>, side: Side) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(y.nrows(), y.ncols());
        if self.forced && !self.sys.forcing().is_zero() {
            let f = self.sys.forcing().eval(t)?;
            for mut col in out.column_iter_mut() {
                col += f.column(0);
            }
        }
        for term in self.sys.terms() {
            if term.coeff.is_zero() {
                continue;
            }
            let a = term.coeff.eval(t)?;
            let harg = term.delay.eval(t)?;
            if harg > t {
                return Err(Error::DelayViolation { t, value: harg });
            }
            if term.delay.is_instantaneous() || harg >= t {
                out -= a * y;
            } else {
                out -= a * self.delayed(path, i, k1, harg, side)?;
            }
        }
        Ok(out)
    }

    fn delayed(&self, path: &Path, i: usize, k1: &DMatrix<f64>, harg: f64, side: Side) -> Result<DMatrix<f64>> {
        let ti = path.times[i];
        if harg > ti {
            return Ok(&path.right[i] + k1 * (harg - ti));
        }
        if harg < self.start || (harg == self.start && side == Side::Left) {
            let (rows, cols) = path.right[0].shape();
            return Ok(match self.history {
                HistoryMode::Phi => {
                    let phi = self.sys.phi().eval(harg)?;
                    DMatrix::from_fn(rows, cols, |r, _| phi[(r, 0)])
                }
                HistoryMode::Zero => DMatrix::zeros(rows, cols),
            });
        }
        let k = path.times[..=i].partition_point(|&x| x <= harg) - 1;
        if path.times[k] == harg {
            return Ok(match side {
                Side::Left => path.left[k].clone(),
                Side::Right => path.right[k].clone(),
            });
        }
        let (a, b) = (path.times[k], path.times[k + 1]);
        let w = (harg - a) / (b - a);
        Ok(&path.right[k] * (1.0 - w) + &path.left[k + 1] * w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ImpulseSchedule;
    use crate::timefn::MatrixFunction;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn x0(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn cascade() -> DelaySystem {
        let sched = ImpulseSchedule::uniform(1.0, 5, scalar(0.5)).unwrap();
        DelaySystem::new(sched, 5.0).unwrap()
    }

    #[test]
    fn constant_solution_without_terms() {
        let sys = DelaySystem::new(ImpulseSchedule::empty(1, 3.0).unwrap(), 3.0).unwrap();
        let traj = integrate(&sys, &x0(2.5), 3.0, 0.1, HistoryMode::Phi).unwrap();
        assert!(traj.values().right_values().iter().all(|v| v[(0, 0)] == 2.5));
        assert_eq!(traj.eval(0.55, Side::Right).unwrap()[0], 2.5);
    }

    #[test]
    fn exponential_decay() {
        let sys = DelaySystem::new(ImpulseSchedule::empty(1, 5.0).unwrap(), 5.0)
            .unwrap()
            .with_term(MatrixFunction::constant(&scalar(1.0)), DelayLaw::parse("t").unwrap())
            .unwrap();
        let traj = integrate(&sys, &x0(1.0), 5.0, 1e-3, HistoryMode::Phi).unwrap();
        for (t, v) in traj.times().iter().zip(traj.values().right_values()) {
            assert!((v[(0, 0)] - (-t).exp()).abs() < 1e-6);
        }
        let d = traj.derivatives().unwrap();
        assert!((d.eval(1.0, Side::Right).unwrap()[(0, 0)] + (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn pure_impulse_cascade() {
        let traj = integrate(&cascade(), &x0(1.0), 5.0, 0.1, HistoryMode::Phi).unwrap();
        assert_eq!(traj.eval(2.5, Side::Right).unwrap()[0], 0.25);
        assert_eq!(traj.eval(1.0, Side::Left).unwrap()[0], 1.0);
        assert_eq!(traj.eval(1.0, Side::Right).unwrap()[0], 0.5);
        let i = traj.times().iter().position(|&t| t == 1.0).unwrap();
        assert!(traj.is_jump(i));
        assert!(traj.eval(5.5, Side::Right).is_err());
    }

    #[test]
    fn jump_vectors_are_added() {
        let sched = ImpulseSchedule::uniform(1.0, 2, scalar(0.5))
            .unwrap()
            .with_jumps(vec![x0(1.0), x0(-2.0)])
            .unwrap();
        let sys = DelaySystem::new(sched, 3.0).unwrap();
        let traj = integrate(&sys, &x0(1.0), 3.0, 0.25, HistoryMode::Phi).unwrap();
        assert_eq!(traj.eval(1.5, Side::Right).unwrap()[0], 1.5);
        assert_eq!(traj.eval(2.0, Side::Right).unwrap()[0], -1.25);
    }

    #[test]
    fn grid_contains_breakpoints() {
        let sys = cascade()
            .with_term(MatrixFunction::constant(&scalar(0.3)), DelayLaw::ConstantLag(0.7))
            .unwrap();
        let traj = integrate(&sys, &x0(1.0), 5.0, 0.05, HistoryMode::Phi).unwrap();
        for expected in [0.7, 1.0, 1.4, 1.7, 2.1, 2.7, 4.2] {
            assert!(traj.times().iter().any(|&t| (t - expected).abs() < 1e-12), "{expected}");
        }
        assert!(traj.times().windows(2).all(|w| w[1] - w[0] <= 0.05 + 1e-12));
    }

    #[test]
    fn constant_lag_first_interval_is_exact() {
        // x' = -x(t-1), phi = 1: x = 1 - t on [0, 1]
        let sys = DelaySystem::new(ImpulseSchedule::empty(1, 2.0).unwrap(), 2.0)
            .unwrap()
            .with_term(MatrixFunction::constant(&scalar(1.0)), DelayLaw::ConstantLag(1.0))
            .unwrap()
            .with_phi(MatrixFunction::parse_column(&["1"]).unwrap())
            .unwrap();
        let traj = integrate(&sys, &x0(1.0), 2.0, 0.01, HistoryMode::Phi).unwrap();
        assert!((traj.eval(0.5, Side::Right).unwrap()[0] - 0.5).abs() < 1e-12);
        let zero = integrate(&sys, &x0(1.0), 2.0, 0.01, HistoryMode::Zero).unwrap();
        assert!((zero.eval(0.5, Side::Right).unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn end_stage_sees_history_at_the_start() {
        // x' = -0.3 x(t - 0.5) with zero history: the right side switches on
        // exactly at t = 0.5, which a coarse step must still resolve.
        let sys = DelaySystem::new(ImpulseSchedule::empty(1, 1.0).unwrap(), 1.0)
            .unwrap()
            .with_term(MatrixFunction::constant(&scalar(0.3)), DelayLaw::ConstantLag(0.5))
            .unwrap();
        let traj = integrate(&sys, &x0(1.0), 0.7, 0.05, HistoryMode::Zero).unwrap();
        assert!((traj.eval(0.7, Side::Right).unwrap()[0] - 0.94).abs() < 1e-14);
    }

    #[test]
    fn argument_errors() {
        let sys = cascade();
        assert!(integrate(&sys, &x0(1.0), 5.0, 0.0, HistoryMode::Phi).is_err());
        assert!(integrate(&sys, &x0(1.0), 6.0, 0.1, HistoryMode::Phi).is_err());
        let bad = DelaySystem::new(ImpulseSchedule::empty(1, 2.0).unwrap(), 2.0)
            .unwrap()
            .with_term(MatrixFunction::constant(&scalar(1.0)), DelayLaw::parse("t + 0.5").unwrap())
            .unwrap();
        assert!(matches!(
            integrate(&bad, &x0(1.0), 2.0, 0.1, HistoryMode::Phi),
            Err(Error::DelayViolation { .. })
        ));
    }
}
