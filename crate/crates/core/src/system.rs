//! Problem assembly and machine checks of the standing hypotheses.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{matrix_norm, vector_norm};
use crate::schedule::{bound_constants, ImpulseSchedule};
use crate::timefn::{validate_delay, DelayLaw, MatrixFunction};

/// One term `A_k(t) x(h_k(t))` of the equation.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTerm {
    pub coeff: MatrixFunction,
    pub delay: DelayLaw,
}

/// `x'(t) + sum_k A_k(t) x(h_k(t)) = f(t)` on `[0, horizon]`, with initial
/// function `phi` on the negative half-line, initial value `x0` and the
/// impulse schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySystem {
    n: usize,
    terms: Vec<DelayTerm>,
    forcing: MatrixFunction,
    phi: MatrixFunction,
    x0: DVector<f64>,
    schedule: ImpulseSchedule,
    horizon: f64,
}

impl DelaySystem {
    /// Homogeneous, delay-free system with zero initial data.
    pub fn new(schedule: ImpulseSchedule, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument("horizon must be positive and finite".into()));
        }
        let n = schedule.dim();
        Ok(Self {
            n,
            terms: Vec::new(),
            forcing: MatrixFunction::zeros(n, 1),
            phi: MatrixFunction::zeros(n, 1),
            x0: DVector::zeros(n),
            schedule: schedule.with_horizon(horizon)?,
            horizon,
        })
    }

    pub fn with_term(mut self, coeff: MatrixFunction, delay: DelayLaw) -> Result<Self> {
        if coeff.shape() != (self.n, self.n) {
            return Err(Error::Dimension(format!(
                "coefficient of term {} is {:?}, expected {n}x{n}",
                self.terms.len() + 1,
                coeff.shape(),
                n = self.n
            )));
        }
        self.terms.push(DelayTerm { coeff, delay });
        Ok(self)
    }

    pub fn with_forcing(mut self, forcing: MatrixFunction) -> Result<Self> {
        self.check_column("forcing", &forcing)?;
        self.forcing = forcing;
        Ok(self)
    }

    pub fn with_phi(mut self, phi: MatrixFunction) -> Result<Self> {
        self.check_column("initial function", &phi)?;
        self.phi = phi;
        Ok(self)
    }

    pub fn with_initial(mut self, x0: DVector<f64>) -> Result<Self> {
        if x0.len() != self.n {
            return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.len(), self.n)));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn with_schedule(mut self, schedule: ImpulseSchedule) -> Result<Self> {
        if schedule.dim() != self.n {
            return Err(Error::Dimension("schedule dimension differs from system".into()));
        }
        self.schedule = schedule.with_horizon(self.horizon)?;
        Ok(self)
    }

    fn check_column(&self, what: &str, m: &MatrixFunction) -> Result<()> {
        if m.shape() != (self.n, 1) {
            return Err(Error::Dimension(format!("{what} is {:?}, expected {}x1", m.shape(), self.n)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[DelayTerm] {
        &self.terms
    }

    pub fn forcing(&self) -> &MatrixFunction {
        &self.forcing
    }

    pub fn phi(&self) -> &MatrixFunction {
        &self.phi
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn schedule(&self) -> &ImpulseSchedule {
        &self.schedule
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Uniform grid on `[0, horizon]` with the last point at the horizon.
    pub fn working_grid(&self, step: f64) -> Vec<f64> {
        uniform_grid(0.0, self.horizon, step)
    }

    /// `phi(xi)` as a vector.
    pub fn phi_at(&self, xi: f64) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(self.phi.eval(xi)?.as_slice()))
    }

    /// `A_k^nu(t) = exp(nu (t - h_k(t))) A_k(t)`; `k` is zero-based.
    pub fn weighted_coefficient(&self, k: usize, nu: f64, t: f64) -> Result<DMatrix<f64>> {
        let term = self
            .terms
            .get(k)
            .ok_or_else(|| Error::InvalidArgument(format!("term index {k} out of range ({} terms)", self.terms.len())))?;
        let lag = t - term.delay.eval(t)?;
        Ok(term.coeff.eval(t)? * (nu * lag).exp())
    }

    /// `delta = max_k sup (t - h_k(t))` over the working grid.
    pub fn lag_bound(&self) -> Result<LagBound> {
        let step = self.horizon / 1000.0;
        let grid = self.working_grid(step);
        let mut bound = LagBound { delta: 0.0, uniform: true };
        let last = *grid.last().unwrap();
        for term in &self.terms {
            let check = validate_delay(&term.delay, &grid)?;
            bound.delta = bound.delta.max(check.sup_lag);
            if check.argmax == last {
                let before = last - step;
                let lag_end = last - term.delay.eval(last)?;
                let lag_before = before - term.delay.eval(before)?;
                if lag_end > lag_before + 1e-12 * lag_end.abs().max(1.0) {
                    bound.uniform = false;
                }
            }
        }
        Ok(bound)
    }

    /// `g(t) = sum_k A_k(t) phi(h_k(t))`, where terms with `h_k(t) >= 0`
    /// contribute nothing.
    pub fn history_term_g(&self, t: f64) -> Result<DVector<f64>> {
        let mut g = DVector::zeros(self.n);
        for term in &self.terms {
            let h = term.delay.eval(t)?;
            if h < 0.0 {
                g += term.coeff.eval(t)? * self.phi_at(h)?;
            }
        }
        Ok(g)
    }

    /// Finite-grid proxies for hypotheses (a1)-(a6).
    pub fn validate_hypotheses(&self, grid_step: f64) -> Result<HypothesisReport> {
        if !(grid_step > 0.0) {
            return Err(Error::InvalidArgument("grid step must be positive".into()));
        }
        let grid = self.working_grid(grid_step);
        let mut checks = Vec::new();

        // (a1)
        let sched = &self.schedule;
        checks.push(match sched.ordering_violation() {
            None => HypothesisCheck::pass("a1", format!("{} impulse times strictly increasing", sched.num_impulses())),
            Some(j) => HypothesisCheck::fail(
                "a1",
                format!("tau_{j} = {} does not exceed tau_{} = {}", sched.times()[j], j - 1, sched.times()[j - 1]),
            ),
        });

        // (a2)
        checks.push(self.check_local_integrability(grid_step));

        // (a3)
        let mut min_argument = 0.0f64;
        let mut a3 = HypothesisCheck::pass("a3", format!("{} delay laws satisfy h(t) <= t", self.terms.len()));
        for (k, term) in self.terms.iter().enumerate() {
            match validate_delay(&term.delay, &grid) {
                Ok(c) => min_argument = min_argument.min(c.min_argument),
                Err(e) => {
                    a3 = HypothesisCheck::fail("a3", format!("term {}: {e}", k + 1));
                    break;
                }
            }
        }
        checks.push(a3);

        // (a4) sampled where the dynamics actually read phi
        checks.push(if min_argument < 0.0 {
            let mut sup = 0.0f64;
            let mut failure = None;
            for xi in uniform_grid(min_argument, 0.0, grid_step).into_iter().filter(|&x| x < 0.0) {
                match self.phi_at(xi) {
                    Ok(v) => sup = sup.max(vector_norm(&v)),
                    Err(e) => {
                        failure = Some(e.to_string());
                        break;
                    }
                }
            }
            match failure {
                None => HypothesisCheck::pass("a4", format!("sup |phi| = {sup} on [{min_argument}, 0)")).with_value(sup),
                Some(e) => HypothesisCheck::fail("a4", e),
            }
        } else {
            HypothesisCheck::pass("a4", "phi is never evaluated (all h_k(t) >= 0)".to_string()).with_value(0.0)
        });

        // (a5)
        let jump_bound = sched.jump_norm_bound();
        checks.push(if jump_bound.is_finite() {
            HypothesisCheck::pass("a5", format!("B = {jump_bound}")).with_value(jump_bound)
        } else {
            HypothesisCheck::fail("a5", "B is not finite".to_string())
        });

        // (a6) the pair sweep is quadratic, so cap the grid at 2000 panels
        let k_step = grid_step.max(self.horizon / 2000.0);
        let k = match sched.ordering_violation() {
            None => sched.ratio_constant_k(self.horizon, k_step)?.value,
            Some(_) => f64::INFINITY,
        };
        checks.push(if k.is_finite() {
            HypothesisCheck::pass("a6", format!("K = {k}")).with_value(k)
        } else {
            HypothesisCheck::fail("a6", "K is not finite".to_string())
        });

        let (b, i_const) = bound_constants(jump_bound, k);
        Ok(HypothesisReport { checks, jump_bound, k, b, i_const })
    }

    fn check_local_integrability(&self, grid_step: f64) -> HypothesisCheck {
        let windows: Vec<(f64, f64)> = if self.horizon <= 1.0 {
            vec![(0.0, self.horizon)]
        } else {
            let count = (self.horizon - 1.0 + 1e-9).floor() as usize;
            (0..=count).map(|i| (i as f64, i as f64 + 1.0)).collect()
        };
        let mut worst = 0.0f64;
        for (lo, hi) in windows {
            let pts = uniform_grid(lo, hi, grid_step);
            let mut integrals = vec![0.0; self.terms.len() + 1];
            let mut prev: Option<(f64, Vec<f64>)> = None;
            for &t in &pts {
                let mut vals = Vec::with_capacity(self.terms.len() + 1);
                for term in &self.terms {
                    match term.coeff.eval(t) {
                        Ok(m) => vals.push(matrix_norm(&m)),
                        Err(e) => return HypothesisCheck::fail("a2", e.to_string()),
                    }
                }
                match self.forcing.eval(t) {
                    Ok(m) => vals.push(matrix_norm(&m)),
                    Err(e) => return HypothesisCheck::fail("a2", e.to_string()),
                }
                if let Some((tp, pv)) = &prev {
                    for (acc, (a, b)) in integrals.iter_mut().zip(pv.iter().zip(&vals)) {
                        *acc += 0.5 * (t - tp) * (a + b);
                    }
                }
                prev = Some((t, vals));
            }
            if integrals.iter().any(|v| !v.is_finite()) {
                return HypothesisCheck::fail("a2", format!("integral over [{lo}, {hi}] is not finite"));
            }
            worst = integrals.into_iter().fold(worst, f64::max);
        }
        HypothesisCheck::pass("a2", format!("max unit-window integral of |A_k|, |f| = {worst}")).with_value(worst)
    }
}

/// Grid `lo, lo + step, ...` closed at `hi`.
pub(crate) fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let span = hi - lo;
    if span <= 0.0 {
        return vec![lo];
    }
    let n = ((span / step) - 1e-9).ceil().max(1.0) as usize;
    (0..=n).map(|i| if i == n { hi } else { lo + span * i as f64 / n as f64 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagBound {
    pub delta: f64,
    /// False when the lag is still growing at the horizon, i.e. no
    /// horizon-independent bound was observed.
    pub uniform: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
    pub value: Option<f64>,
}

impl HypothesisCheck {
    fn pass(id: &'static str, detail: String) -> Self {
        Self { id, passed: true, detail, value: None }
    }

    fn fail(id: &'static str, detail: String) -> Self {
        Self { id, passed: false, detail, value: None }
    }

    fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
    /// `B = max_j ||B_j||`.
    pub jump_bound: f64,
    pub k: f64,
    /// `max{B, 1}`.
    pub b: f64,
    /// `max{K, 1}`.
    pub i_const: f64,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, id: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "({}) {}  {}", c.id, if c.passed { "pass" } else { "FAIL" }, c.detail)?;
        }
        write!(f, "B = {}, K = {}, b = {}, I = {}", self.jump_bound, self.k, self.b, self.i_const)
    }
}
