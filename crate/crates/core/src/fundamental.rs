//! Fundamental matrices, the Cauchy operator and the representation of
//! solutions through them.
//!
//! `X(t, s)` solves the homogeneous problem on `[s, inf)` with `X(s, s) = E_n`,
//! zero history before `s` and jumps `B_j` at every `tau_j > s`; it is zero
//! for `t < s`. Jump products run over the half-open interval `(s, t]`, later
//! impulses multiplying on the left.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::matrix_norm;
use crate::norms::Side;
use crate::schedule::{bound_constants, ImpulseSchedule};
use crate::solver::{integrate_matrix, Trajectory};
use crate::system::{uniform_grid, DelaySystem};
use crate::timefn::{DelayLaw, MatrixFunction};

/// `X_0(t, s)` for `x' + a x = 0` with the schedule's jumps.
pub fn x0_closed(t: f64, s: f64, a: f64, sched: &ImpulseSchedule) -> DMatrix<f64> {
    let n = sched.dim();
    if t < s {
        return DMatrix::zeros(n, n);
    }
    let mut m = DMatrix::identity(n, n);
    for j in sched.impulses_in(s, t) {
        m = sched.matrix(j) * m;
    }
    m * (-a * (t - s)).exp()
}

/// `X_1(t, s)`: the jump products alone.
pub fn x1_closed(t: f64, s: f64, sched: &ImpulseSchedule) -> DMatrix<f64> {
    x0_closed(t, s, 0.0, sched)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub s: f64,
    pub t: f64,
    pub norm: f64,
    pub bound: f64,
    /// `bound - norm`; negative values are violations.
    pub margin: f64,
}

/// Comparison of `||X(t,s)||` against an exponential bound on a set of pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Decay rate of the bound (`nu` or `eta`).
    pub rate: f64,
    pub rows: Vec<BoundRow>,
    /// `max (norm - bound)`; the bound holds when this is `<= 0`.
    pub max_violation: f64,
}

impl BoundReport {
    fn from_rows(rate: f64, rows: Vec<BoundRow>) -> Self {
        let max_violation = rows.iter().map(|r| -r.margin).fold(f64::NEG_INFINITY, f64::max);
        Self { rate, rows, max_violation }
    }

    pub fn holds(&self) -> bool {
        self.max_violation <= 0.0
    }
}

/// `nu = a - I ln b` with `K` swept on the schedule's horizon.
pub fn auxiliary_rate(a: f64, sched: &ImpulseSchedule) -> Result<f64> {
    let k = if sched.num_impulses() == 0 {
        0.0
    } else {
        sched.ratio_constant_k(sched.horizon(), sched.horizon() / 1000.0)?.value
    };
    let (b, i_const) = bound_constants(sched.jump_norm_bound(), k);
    Ok(a - i_const * b.ln())
}

/// Checks `||X_0(t,s)|| <= exp(-nu (t-s))` on every pair `(s, t)` with `t >= s`.
pub fn check_x0_bound(a: f64, sched: &ImpulseSchedule, pairs: &[(f64, f64)]) -> Result<BoundReport> {
    let nu = auxiliary_rate(a, sched)?;
    if !(nu > 0.0) {
        return Err(Error::HypothesisNotMet(format!("nu = a - I ln b = {nu} is not positive")));
    }
    let rows = pairs
        .iter()
        .filter(|(s, t)| t >= s)
        .map(|&(s, t)| {
            let norm = matrix_norm(&x0_closed(t, s, a, sched));
            let bound = (-nu * (t - s)).exp();
            BoundRow { s, t, norm, bound, margin: bound - norm }
        })
        .collect();
    Ok(BoundReport::from_rows(nu, rows))
}

/// Checks `||X_1(t,s)|| <= exp(-eta (t-s-sigma))`, `eta = -(1/sigma) ln B`.
pub fn check_x1_bound(sched: &ImpulseSchedule, pairs: &[(f64, f64)]) -> Result<BoundReport> {
    let big_b = sched.jump_norm_bound();
    if !(big_b < 1.0) {
        return Err(Error::HypothesisNotMet(format!("B = {big_b} is not below 1")));
    }
    let (rho, sigma) = sched.gap_stats()?;
    if !(rho > 0.0) || !sigma.is_finite() {
        return Err(Error::HypothesisNotMet(format!("gaps must lie in [rho, sigma] with rho > 0, got [{rho}, {sigma}]")));
    }
    let eta = -big_b.ln() / sigma;
    let rows = pairs
        .iter()
        .filter(|(s, t)| t >= s)
        .map(|&(s, t)| {
            let norm = matrix_norm(&x1_closed(t, s, sched));
            let excess = t - s - sigma;
            // eta may be infinite (B = 0); the bound at excess 0 is 1 either way
            let bound = if excess == 0.0 { 1.0 } else { (-eta * excess).exp() };
            BoundRow { s, t, norm, bound, margin: bound - norm }
        })
        .collect();
    Ok(BoundReport::from_rows(eta, rows))
}

/// Numerically computed `X(., s)` on a grid starting at `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSample {
    pub s: f64,
    traj: Trajectory,
}

impl FundamentalSample {
    pub fn times(&self) -> &[f64] {
        self.traj.times()
    }

    /// `X(t_i, s)` at every grid time (right values).
    pub fn matrices(&self) -> &[DMatrix<f64>] {
        self.traj.values().right_values()
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    /// `X(t, s)`, zero for `t < s`.
    pub fn at(&self, t: f64, side: Side) -> Result<DMatrix<f64>> {
        if t < self.s {
            let n = self.matrices()[0].nrows();
            return Ok(DMatrix::zeros(n, n));
        }
        self.traj.values().eval(t, side)
    }
}

pub fn fundamental_numeric(sys: &DelaySystem, s: f64, t_end: f64, step: f64) -> Result<FundamentalSample> {
    if !(0.0 <= s && s <= t_end) {
        return Err(Error::InvalidArgument(format!("need 0 <= s <= T, got s = {s}, T = {t_end}")));
    }
    Ok(FundamentalSample { s, traj: integrate_matrix(sys, s, t_end, step)? })
}

/// Quadrature nodes on `[0, t_max]`: panels split at every impulse time, at
/// every target and at `extra` points, then refined to width `<= qstep`.
fn quadrature_nodes(sched: &ImpulseSchedule, t_max: f64, targets: &[f64], extra: &[f64], qstep: f64) -> Vec<f64> {
    let mut splits: Vec<f64> = vec![0.0, t_max];
    splits.extend(sched.impulse_times().iter().copied().filter(|&x| x > 0.0 && x < t_max));
    splits.extend(targets.iter().copied().filter(|&x| x > 0.0));
    splits.extend(extra.iter().copied().filter(|&x| x > 0.0 && x < t_max));
    splits.sort_by(f64::total_cmp);
    splits.dedup();
    let mut nodes = vec![0.0];
    for w in splits.windows(2) {
        let seg = uniform_grid(w[0], w[1], qstep);
        nodes.extend_from_slice(&seg[1..]);
    }
    nodes
}

/// Index `j` of the impulse at time `s`, if any.
fn impulse_index(sched: &ImpulseSchedule, s: f64) -> Option<usize> {
    sched.times().iter().skip(1).position(|&x| x == s).map(|p| p + 1)
}

/// `int_0^t X(t, s) w(s) ds` for every target `t`, with `X(t, .)` supplied
/// by `kernel(s) -> [X(t_k, s)]_k` (zero matrices for `t_k < s`).
///
/// Both sides of `X` and of the integrand are honored at panel ends, so
/// jumps in `s` at impulse times and at the split points of `w` are exact.
fn cauchy_quadrature<K, W>(
    sched: &ImpulseSchedule,
    targets: &[f64],
    extra: &[f64],
    qstep: f64,
    kernel: K,
    integrand: W,
) -> Result<Vec<DVector<f64>>>
where
    K: Fn(f64) -> Result<Vec<DMatrix<f64>>> + Sync,
    W: Fn(f64, Side) -> Result<DVector<f64>> + Sync,
{
    if !(qstep > 0.0) {
        return Err(Error::InvalidArgument(format!("qstep must be positive, got {qstep}")));
    }
    if targets.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument("targets must be nonnegative".into()));
    }
    let n = sched.dim();
    let t_max = targets.iter().copied().fold(0.0, f64::max);
    if t_max == 0.0 {
        return Ok(vec![DVector::zeros(n); targets.len()]);
    }
    let nodes = quadrature_nodes(sched, t_max, targets, extra, qstep);
    // per node: (X(t_k, s+) w(s+), X(t_k, s-) w(s-)) for every target
    let per_node: Vec<Vec<(DVector<f64>, DVector<f64>)>> = nodes
        .par_iter()
        .map(|&s| {
            let xs = kernel(s)?;
            let w_right = integrand(s, Side::Right)?;
            let w_left = integrand(s, Side::Left)?;
            let jump = impulse_index(sched, s).map(|j| sched.matrix(j));
            Ok(xs
                .iter()
                .map(|x| {
                    let right = x * &w_right;
                    let left = match jump {
                        Some(b) => x * (b * &w_left),
                        None => x * &w_left,
                    };
                    (right, left)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut out = vec![DVector::zeros(n); targets.len()];
    for (k, &t) in targets.iter().enumerate() {
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            if b > t {
                break;
            }
            out[k] += (&per_node[i][k].0 + &per_node[i + 1][k].1) * (0.5 * (b - a));
        }
    }
    Ok(out)
}

fn numeric_kernel<'a>(
    sys: &'a DelaySystem,
    targets: &'a [f64],
    step: f64,
) -> impl Fn(f64) -> Result<Vec<DMatrix<f64>>> + Sync + 'a {
    let t_max = targets.iter().copied().fold(0.0, f64::max);
    move |s| {
        let sample = fundamental_numeric(sys, s, t_max, step)?;
        targets.iter().map(|&t| sample.at(t, Side::Right)).collect()
    }
}

/// Points in `(0, t_max)` where the history term switches off.
fn history_splits(sys: &DelaySystem) -> Vec<f64> {
    sys.terms()
        .iter()
        .filter_map(|term| match term.delay {
            DelayLaw::ConstantLag(lag) if lag > 0.0 => Some(lag),
            _ => None,
        })
        .collect()
}

fn column(m: DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// `(C w)(t) = int_0^t X(t, s) w(s) ds`; the solver runs at `qstep` too.
pub fn cauchy_apply(sys: &DelaySystem, w: &MatrixFunction, t: f64, qstep: f64) -> Result<DVector<f64>> {
    if w.shape() != (sys.dim(), 1) {
        return Err(Error::Dimension(format!("integrand is {:?}, expected {}x1", w.shape(), sys.dim())));
    }
    let targets = [t];
    let kernel = numeric_kernel(sys, &targets, qstep);
    let v = cauchy_quadrature(sys.schedule(), &targets, &[], qstep, kernel, |s, _| Ok(column(w.eval(s)?)))?;
    Ok(v.into_iter().next().unwrap())
}

/// `(C_0 w)(t)` for the auxiliary equation `x' + a x = z`, using the closed
/// form of `X_0`.
pub fn cauchy_apply_auxiliary(
    a: f64,
    sched: &ImpulseSchedule,
    w: &MatrixFunction,
    t: f64,
    qstep: f64,
) -> Result<DVector<f64>> {
    if w.shape() != (sched.dim(), 1) {
        return Err(Error::Dimension(format!("integrand is {:?}, expected {}x1", w.shape(), sched.dim())));
    }
    let targets = [t];
    let kernel = |s: f64| Ok(vec![x0_closed(t, s, a, sched)]);
    let v = cauchy_quadrature(sched, &targets, &[], qstep, kernel, |s, _| Ok(column(w.eval(s)?)))?;
    Ok(v.into_iter().next().unwrap())
}

/// `x(t) = (Cf)(t) - (Cg)(t) + X(t,0) x(0) + sum_{0 < tau_j <= t} X(t, tau_j) alpha_j`.
pub fn reconstruct(sys: &DelaySystem, t: f64, qstep: f64) -> Result<DVector<f64>> {
    Ok(reconstruct_batch(sys, &[t], qstep, qstep)?.into_iter().next().unwrap())
}

/// Reconstruction at several times, sharing one fundamental-matrix run per
/// quadrature node; `step` is the solver step.
pub fn reconstruct_batch(sys: &DelaySystem, targets: &[f64], step: f64, qstep: f64) -> Result<Vec<DVector<f64>>> {
    let sched = sys.schedule();
    let g_side = |s: f64, side: Side| -> Result<DVector<f64>> {
        let mut g = DVector::zeros(sys.dim());
        for term in sys.terms() {
            let h = term.delay.eval(s)?;
            let reads_phi = match side {
                Side::Right => h < 0.0,
                Side::Left => h <= 0.0 && s > 0.0,
            };
            if reads_phi {
                g += term.coeff.eval(s)? * sys.phi_at(h)?;
            }
        }
        Ok(g)
    };
    let integrand = |s: f64, side: Side| -> Result<DVector<f64>> {
        Ok(column(sys.forcing().eval(s)?) - g_side(s, side)?)
    };
    let kernel = numeric_kernel(sys, targets, step);
    let mut out = cauchy_quadrature(sched, targets, &history_splits(sys), qstep, &kernel, integrand)?;

    let mut anchors: Vec<(f64, DVector<f64>)> = vec![(0.0, sys.initial().clone())];
    anchors.extend(
        (1..=sched.num_impulses())
            .filter(|&j| sched.jump(j).iter().any(|&v| v != 0.0))
            .map(|j| (sched.times()[j], sched.jump(j).clone())),
    );
    let contributions: Vec<Vec<DVector<f64>>> = anchors
        .par_iter()
        .map(|(s, alpha)| {
            if targets.iter().all(|&t| t < *s) {
                return Ok(vec![DVector::zeros(sys.dim()); targets.len()]);
            }
            Ok(kernel(*s)?.into_iter().map(|x| x * alpha).collect())
        })
        .collect::<Result<_>>()?;
    for c in contributions {
        for (o, v) in out.iter_mut().zip(c) {
            *o += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn unit(b: f64, count: usize) -> ImpulseSchedule {
        ImpulseSchedule::uniform(1.0, count, scalar(b)).unwrap()
    }

    fn pairs_from_zero(end: f64, n: usize) -> Vec<(f64, f64)> {
        (0..=n).map(|i| (0.0, end * i as f64 / n as f64)).collect()
    }

    #[test]
    fn closed_forms() {
        let sched = unit(0.5, 10);
        assert!((x0_closed(2.5, 0.0, 1.0, &sched)[(0, 0)] - 0.25 * (-2.5f64).exp()).abs() < 1e-15);
        assert_eq!(x0_closed(1.0, 0.0, 1.0, &sched)[(0, 0)], 0.5 * (-1.0f64).exp());
        assert_eq!(x1_closed(3.2, 0.0, &sched)[(0, 0)], 0.125);
        assert_eq!(x1_closed(1.0, 2.0, &sched)[(0, 0)], 0.0);
        let none = ImpulseSchedule::empty(2, 5.0).unwrap();
        assert_eq!(x1_closed(4.0, 1.0, &none), DMatrix::identity(2, 2));
    }

    #[test]
    fn later_jumps_multiply_on_the_left() {
        let b1 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sched = ImpulseSchedule::new(2, vec![0.0, 1.0, 2.0], vec![b1.clone(), b2.clone()]).unwrap();
        assert_eq!(x1_closed(3.0, 0.0, &sched), &b2 * &b1);
    }

    #[test]
    fn x0_bound_holds_for_contracting_jumps() {
        let sched = unit(0.5, 10);
        let report = check_x0_bound(1.0, &sched, &pairs_from_zero(10.0, 500)).unwrap();
        assert_eq!(report.rate, 1.0);
        assert!(report.holds(), "{}", report.max_violation);
    }

    #[test]
    fn x0_bound_from_origin_with_expanding_jumps() {
        let sched = unit(1.2, 10);
        let report = check_x0_bound(1.0, &sched, &pairs_from_zero(10.0, 500)).unwrap();
        assert!((report.rate - (1.0 - 2.0 * 1.2f64.ln())).abs() < 1e-12);
        assert!(report.holds(), "{}", report.max_violation);
    }

    #[test]
    fn x0_bound_fails_for_short_windows_straddling_a_jump() {
        let sched = unit(1.2, 10);
        let report = check_x0_bound(1.0, &sched, &[(0.95, 1.05)]).unwrap();
        assert!(report.max_violation > 0.0);
    }

    #[test]
    fn x0_bound_requires_positive_rate() {
        assert!(matches!(check_x0_bound(0.1, &unit(1.2, 10), &[(0.0, 1.0)]), Err(Error::HypothesisNotMet(_))));
    }

    #[test]
    fn x1_bounds() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let pairs: Vec<(f64, f64)> = grid.iter().flat_map(|&s| grid.iter().map(move |&t| (s, t))).collect();
        let r = check_x1_bound(&unit(0.5, 10), &pairs).unwrap();
        assert!((r.rate - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(r.holds(), "{}", r.max_violation);
        let r = check_x1_bound(&unit(0.9, 10), &pairs).unwrap();
        assert!((r.rate - 0.10536).abs() < 1e-5);
        assert!(r.holds());
        assert!(check_x1_bound(&unit(1.0, 10), &pairs).is_err());
    }

    #[test]
    fn numeric_matches_closed_form_without_delay_terms() {
        let sys = DelaySystem::new(unit(0.5, 5), 5.0).unwrap();
        let sample = fundamental_numeric(&sys, 0.3, 5.0, 0.01).unwrap();
        assert_eq!(sample.matrices()[0], scalar(1.0));
        for (t, m) in sample.times().iter().zip(sample.matrices()) {
            assert!((m[(0, 0)] - x1_closed(*t, 0.3, sys.schedule())[(0, 0)]).abs() < 1e-10);
        }
        assert_eq!(sample.at(0.1, Side::Right).unwrap(), scalar(0.0));
    }

    #[test]
    fn cauchy_operator_values() {
        let sys = DelaySystem::new(unit(0.5, 3), 3.0).unwrap();
        let one = MatrixFunction::parse_column(&["1"]).unwrap();
        let v = cauchy_apply(&sys, &one, 1.5, 0.01).unwrap()[0];
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        let zero = MatrixFunction::zeros(1, 1);
        assert_eq!(cauchy_apply(&sys, &zero, 1.5, 0.01).unwrap()[0], 0.0);
        let free = DelaySystem::new(ImpulseSchedule::empty(1, 3.0).unwrap(), 3.0).unwrap();
        assert!((cauchy_apply(&free, &one, 2.0, 0.01).unwrap()[0] - 2.0).abs() < 1e-12);
        let aux = cauchy_apply_auxiliary(0.0, sys.schedule(), &one, 1.5, 0.01).unwrap()[0];
        assert!((aux - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruct_at_zero_is_initial_value() {
        let sys = DelaySystem::new(unit(0.5, 3), 3.0)
            .unwrap()
            .with_initial(DVector::from_element(1, 0.7))
            .unwrap();
        assert_eq!(reconstruct(&sys, 0.0, 0.01).unwrap()[0], 0.7);
    }
}
