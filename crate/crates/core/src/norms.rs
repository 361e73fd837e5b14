//! Sampled functions and the truncated norms of `L_p`, `L_inf`, `M_p`,
//! `D_p` and the equivalent `D_p` tilde norm.
//!
//! All integrals use the composite trapezoid rule on the sample grid, with
//! `|x|^p` applied pointwise before summation. Every panel `[t_i, t_{i+1}]`
//! uses the right value at `t_i` and the left value at `t_{i+1}`, so jumps
//! are never smeared across a panel. Suprema are grid maxima.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::matrix_norm;
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Samples of a vector- or matrix-valued function, with separate left and
/// right values at every grid point (they differ only at jumps).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    times: Vec<f64>,
    right: Vec<DMatrix<f64>>,
    left: Vec<DMatrix<f64>>,
}

impl SampledFunction {
    pub fn new(times: Vec<f64>, right: Vec<DMatrix<f64>>, left: Vec<DMatrix<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != right.len() || times.len() != left.len() {
            return Err(Error::Dimension("sample times and values must have equal nonzero length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sample grid must be strictly increasing".into()));
        }
        let shape = right[0].shape();
        for m in right.iter().chain(&left) {
            if m.shape() != shape {
                return Err(Error::Dimension("all samples must share one shape".into()));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("samples must be finite".into()));
            }
        }
        Ok(Self { times, right, left })
    }

    /// Continuous samples (left and right values coincide).
    pub fn continuous(times: Vec<f64>, values: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::new(times, values.clone(), values)
    }

    /// Samples `f` on `grid`.
    pub fn from_fn<F>(grid: &[f64], mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<DMatrix<f64>>,
    {
        let values = grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::continuous(grid.to_vec(), values)
    }

    /// Scalar samples.
    pub fn from_scalars(grid: &[f64], mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |t| Ok(DMatrix::from_element(1, 1, f(t))))
    }

    pub(crate) fn from_parts_unchecked(times: Vec<f64>, right: Vec<DMatrix<f64>>, left: Vec<DMatrix<f64>>) -> Self {
        Self { times, right, left }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn right_values(&self) -> &[DMatrix<f64>] {
        &self.right
    }

    pub fn left_values(&self) -> &[DMatrix<f64>] {
        &self.left
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    pub fn is_jump(&self, i: usize) -> bool {
        self.left[i] != self.right[i]
    }

    /// Value at `t`: linear interpolation between samples; at a sample point
    /// the requested one-sided value.
    pub fn eval(&self, t: f64, side: Side) -> Result<DMatrix<f64>> {
        let (lo, hi) = self.span();
        if !(lo..=hi).contains(&t) {
            return Err(Error::Horizon { t, horizon: hi });
        }
        let i = self.times.partition_point(|&x| x < t);
        if self.times[i] == t {
            return Ok(match side {
                Side::Left => self.left[i].clone(),
                Side::Right => self.right[i].clone(),
            });
        }
        Ok(self.lerp(i - 1, t))
    }

    /// Interpolant on panel `[t_k, t_{k+1}]`.
    fn lerp(&self, k: usize, t: f64) -> DMatrix<f64> {
        let (a, b) = (self.times[k], self.times[k + 1]);
        let w = (t - a) / (b - a);
        &self.right[k] * (1.0 - w) + &self.left[k + 1] * w
    }

    /// Entrywise combination of two samplings on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::InvalidArgument("sampled functions live on different grids".into()));
        }
        let right = self.right.iter().zip(&other.right).map(|(a, b)| f(a, b)).collect();
        let left = self.left.iter().zip(&other.left).map(|(a, b)| f(a, b)).collect();
        Self::new(self.times.clone(), right, left)
    }

    /// `integral_{t0}^{t1} |x(t)|^p dt` by the trapezoid rule.
    pub fn power_integral(&self, p: f64, t0: f64, t1: f64) -> Result<f64> {
        self.check_interval(t0, t1)?;
        let mut total = 0.0;
        for k in self.panels_in(t0, t1) {
            let (a, b) = (self.times[k].max(t0), self.times[k + 1].min(t1));
            if b <= a {
                continue;
            }
            let ga = self.panel_norm(k, a).powf(p);
            let gb = self.panel_norm(k, b).powf(p);
            total += 0.5 * (b - a) * (ga + gb);
        }
        Ok(total)
    }

    /// Norm of the interpolant of panel `k` at `t`, honoring one-sided
    /// values at the panel ends.
    fn panel_norm(&self, k: usize, t: f64) -> f64 {
        if t == self.times[k] {
            matrix_norm(&self.right[k])
        } else if t == self.times[k + 1] {
            matrix_norm(&self.left[k + 1])
        } else {
            matrix_norm(&self.lerp(k, t))
        }
    }

    fn panels_in(&self, t0: f64, t1: f64) -> std::ops::Range<usize> {
        let first = self.times.partition_point(|&x| x <= t0).saturating_sub(1);
        let last = self.times.partition_point(|&x| x < t1).min(self.times.len() - 1);
        first..last
    }

    fn check_interval(&self, t0: f64, t1: f64) -> Result<()> {
        let (lo, hi) = self.span();
        if !(t1 > t0) {
            return Err(Error::InvalidArgument(format!("empty interval [{t0}, {t1}]")));
        }
        for t in [t0, t1] {
            if !(lo..=hi).contains(&t) {
                return Err(Error::Horizon { t, horizon: hi });
            }
        }
        Ok(())
    }

    /// Cumulative `integral_{t_0}^{t_i} |x|^p` at every sample point.
    fn cumulative(&self, p: f64) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.len());
        acc.push(0.0);
        for k in 0..self.len() - 1 {
            let ga = matrix_norm(&self.right[k]).powf(p);
            let gb = matrix_norm(&self.left[k + 1]).powf(p);
            let last = acc[k];
            acc.push(last + 0.5 * (self.times[k + 1] - self.times[k]) * (ga + gb));
        }
        acc
    }

    /// Cumulative integral at an arbitrary point inside the span.
    fn cumulative_at(&self, cum: &[f64], p: f64, t: f64) -> f64 {
        let i = self.times.partition_point(|&x| x < t);
        if i < self.len() && self.times[i] == t {
            return cum[i];
        }
        let k = i - 1;
        let a = self.times[k];
        let ga = matrix_norm(&self.right[k]).powf(p);
        let gt = matrix_norm(&self.lerp(k, t)).powf(p);
        cum[k] + 0.5 * (t - a) * (ga + gt)
    }
}

/// Truncated `L_p` norm over `[t0, t1]`; `p = f64::INFINITY` gives the
/// grid-maximum proxy for the essential supremum.
pub fn lp_norm(f: &SampledFunction, p: f64, t0: f64, t1: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        f.check_interval(t0, t1)?;
        let mut sup = 0.0f64;
        for k in f.panels_in(t0, t1) {
            let (a, b) = (f.times[k].max(t0), f.times[k + 1].min(t1));
            sup = sup.max(f.panel_norm(k, a)).max(f.panel_norm(k, b));
        }
        return Ok(sup);
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be at least 1, got {p}")));
    }
    Ok(f.power_integral(p, t0, t1)?.powf(1.0 / p))
}

/// Sliding-window `M_p` norm over windows `[t, t+1]` inside `[start, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpNorm {
    /// Maximum over window starts on the grid (a lower bound of the true sup).
    pub value: f64,
    /// Maximum over windows stretched by one grid step (an upper estimate).
    pub upper: f64,
    /// Start of the maximizing window.
    pub argmax: f64,
    /// Window values are still rising at the horizon, so the supremum over
    /// the half-line may be larger or infinite.
    pub increasing_at_horizon: bool,
}

pub fn mp_norm(f: &SampledFunction, p: f64, horizon: f64) -> Result<MpNorm> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::InvalidArgument(format!("M_p needs finite p >= 1, got {p}")));
    }
    let (lo, hi) = f.span();
    if horizon - lo < 1.0 {
        return Err(Error::InvalidArgument(format!("M_p horizon must cover a unit window, got {horizon}")));
    }
    if horizon > hi * (1.0 + 1e-12) {
        return Err(Error::Horizon { t: horizon, horizon: hi });
    }
    let horizon = horizon.min(hi);
    let cum = f.cumulative(p);
    let slack = 1e-9;
    let starts: Vec<usize> = (0..f.len()).take_while(|&k| f.times[k] + 1.0 <= horizon + slack).collect();
    let mut best = MpNorm { value: 0.0, upper: 0.0, argmax: lo, increasing_at_horizon: false };
    let mut window_values = Vec::with_capacity(starts.len());
    for &k in &starts {
        let a = f.times[k];
        let end = (a + 1.0).min(horizon);
        let w = f.cumulative_at(&cum, p, end) - cum[k];
        let stretched_end = (end + f.times.get(k + 1).map_or(0.0, |n| n - a)).min(horizon);
        let wu = f.cumulative_at(&cum, p, stretched_end) - cum[k];
        if w > best.value {
            best.value = w;
            best.argmax = a;
        }
        best.upper = best.upper.max(wu);
        window_values.push(w);
    }
    if let (Some(&last), Some(&mid)) = (window_values.last(), window_values.get(window_values.len() / 2)) {
        let tail_start = window_values.len() - window_values.len().div_ceil(20);
        let argmax_in_tail = window_values[tail_start..].iter().any(|&w| w >= best.value);
        best.increasing_at_horizon = argmax_in_tail && last > mid * (1.0 + 1e-9) + f64::MIN_POSITIVE;
    }
    best.value = best.value.powf(1.0 / p);
    best.upper = best.upper.powf(1.0 / p);
    Ok(best)
}

fn derivs(traj: &Trajectory) -> Result<&SampledFunction> {
    traj.derivatives()
        .ok_or_else(|| Error::InvalidArgument("trajectory carries no derivative samples".into()))
}

/// `|x|_{L_p} + |x'|_{L_p}` over `[t0, t1]`.
pub fn dp_norm(traj: &Trajectory, p: f64, t0: f64, t1: f64) -> Result<f64> {
    let d = derivs(traj)?;
    Ok(lp_norm(traj.values(), p, t0, t1)? + lp_norm(d, p, t0, t1)?)
}

/// `|x(t0)| + |x' + a x|_{L_p}` over `[t0, t1]`.
pub fn dp_tilde_norm(traj: &Trajectory, a: f64, p: f64, t0: f64, t1: f64) -> Result<f64> {
    let d = derivs(traj)?;
    let combined = d.zip_with(traj.values(), |dx, x| dx + x * a)?;
    let start = matrix_norm(&traj.values().eval(t0, Side::Right)?);
    Ok(start + lp_norm(&combined, p, t0, t1)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Member,
    NotMember,
    Inconclusive,
}

/// One row of a membership probe: `integral_0^H |x|^p` and its increase
/// over the previous horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub horizon: f64,
    pub norm: f64,
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub verdict: Membership,
    pub rows: Vec<ProbeRow>,
}

/// Heuristic `L_p` membership test from truncated integrals on growing
/// horizons: saturating integrals suggest membership, accelerating ones
/// suggest divergence.
pub fn membership_probe(f: &SampledFunction, p: f64, horizons: &[f64], tol: f64) -> Result<ProbeResult> {
    if horizons.len() < 3 {
        return Err(Error::InvalidArgument("membership probe needs at least 3 horizons".into()));
    }
    if horizons.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("probe horizons must increase".into()));
    }
    let start = f.span().0;
    let mut rows = Vec::with_capacity(horizons.len());
    let mut prev = 0.0;
    for &h in horizons {
        let norm = f.power_integral(p, start, h)?;
        rows.push(ProbeRow { horizon: h, norm, increment: norm - prev });
        prev = norm;
    }
    let incs: Vec<f64> = rows[1..].iter().map(|r| r.increment).collect();
    let last = incs[incs.len() - 1];
    let before = incs[incs.len() - 2];
    let verdict = if last > before * (1.0 + 1e-12) && last >= tol {
        Membership::NotMember
    } else if last < tol && incs.windows(2).all(|w| w[1] <= w[0]) {
        Membership::Member
    } else {
        Membership::Inconclusive
    };
    Ok(ProbeResult { verdict, rows })
}
