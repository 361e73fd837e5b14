//! Integrability and exponential-stability certificates, the empirical
//! decay-rate estimator, and the admissibility probe.
//!
//! Both certificates share `eta = -(1/sigma) ln B`. Their closing inequality
//!
//! ```text
//! e^{eta (sigma + 1)}         sum_k |A_k^eta|_{M_1} <= 1 - e^{-eta}    (integrability)
//! e^{eta (sigma + delta + 1)} sum_k |A_k|_{M_1}     <= 1 - e^{-eta}    (stability)
//! ```
//!
//! is reported per condition in reduced form, `sum_k |.|_{M_1}` against
//! `(1 - e^{-eta}) e^{-eta (sigma [+ delta] + 1)}`; the certificate also keeps
//! the two sides as written above.

use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fundamental::fundamental_numeric;
use crate::linalg::matrix_norm;
use crate::norms::{membership_probe, mp_norm, Membership, ProbeResult, SampledFunction, Side};
use crate::schedule::GapMode;
use crate::solver::{integrate, HistoryMode};
use crate::system::{uniform_grid, DelaySystem};
use crate::timefn::MatrixFunction;

/// Tolerance for the `L_1` membership probes inside certificates.
pub const PROBE_TOL: f64 = 1e-3;

/// Tolerance for the algebraic reduction of the single-equation example.
pub const REDUCTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// Solutions and derivatives in `L_1`.
    Integrability,
    /// Exponential stability under a uniformly bounded lag.
    Stability,
    /// The scalar pantograph equation with unit impulse spacing.
    Example,
}

impl CertificateKind {
    pub fn name(self) -> &'static str {
        match self {
            CertificateKind::Integrability => "t5",
            CertificateKind::Stability => "t6",
            CertificateKind::Example => "example",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }

    fn from_probe(m: Membership) -> Self {
        match m {
            Membership::Member => Status::Pass,
            Membership::NotMember => Status::Fail,
            Membership::Inconclusive => Status::Inconclusive,
        }
    }
}

/// One named condition; `margin = rhs - lhs` and passing means `lhs <= rhs`
/// unless `detail` says otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub status: Status,
    pub detail: String,
}

impl Condition {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64, status: Status, detail: String) -> Self {
        Self { name: name.into(), lhs, rhs, margin: rhs - lhs, status, detail }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub sigma: f64,
    pub rho: f64,
    pub jump_bound: f64,
    pub eta: f64,
    /// Lag bound; stability certificate only.
    pub delta: Option<f64>,
    /// `M_1` norm per term (weighted by `eta` for the integrability kinds).
    pub m1_norms: Vec<f64>,
    /// Per term: window integrals still rising at the horizon.
    pub m1_growing: Vec<bool>,
    /// Closing inequality as written, left side.
    pub lhs: f64,
    /// `1 - e^{-eta}`.
    pub rhs: f64,
    pub conditions: Vec<Condition>,
    pub verdict: Status,
}

impl Certificate {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    fn finish(mut self) -> Self {
        self.verdict = if self.conditions.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else if self.conditions.iter().any(|c| c.status == Status::Inconclusive) {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        self
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "certificate {}: {}", self.kind.name(), self.verdict.as_str())?;
        write!(f, "  sigma = {}, rho = {}, B = {}, eta = {}", self.sigma, self.rho, self.jump_bound, self.eta)?;
        if let Some(d) = self.delta {
            write!(f, ", delta = {d}")?;
        }
        writeln!(f)?;
        writeln!(f, "  closing inequality: {} <= {}", self.lhs, self.rhs)?;
        for c in &self.conditions {
            writeln!(
                f,
                "  {:<12} {:<12} lhs = {:<24} rhs = {:<24} margin = {}  {}",
                format!("({})", c.name),
                c.status.as_str(),
                c.lhs,
                c.rhs,
                c.margin,
                c.detail
            )?;
        }
        Ok(())
    }
}

fn probe_horizons(horizon: f64) -> [f64; 3] {
    [horizon / 4.0, horizon / 2.0, horizon]
}

fn certificate_grid(horizon: f64) -> Result<Vec<f64>> {
    if !(horizon >= 4.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("certificate horizon must be at least 4, got {horizon}")));
    }
    Ok(uniform_grid(0.0, horizon, (horizon / 4000.0).min(0.01)))
}

fn l1_condition(name: &str, what: &str, samples: &SampledFunction, horizon: f64) -> Result<Condition> {
    let probe = membership_probe(samples, 1.0, &probe_horizons(horizon), PROBE_TOL)?;
    let last = probe.rows.last().unwrap();
    Ok(Condition::new(
        name,
        last.increment,
        PROBE_TOL,
        Status::from_probe(probe.verdict),
        format!("{what} in L_1: truncated integral {} at horizon {}", last.norm, last.horizon),
    ))
}

fn m1_condition(name: &str, what: &str, samples: &SampledFunction, horizon: f64) -> Result<(Condition, f64, bool)> {
    let m = mp_norm(samples, 1.0, horizon)?;
    let (status, detail) = if !m.value.is_finite() {
        (Status::Fail, format!("{what} has no finite M_1 norm"))
    } else if m.increasing_at_horizon {
        (Status::Inconclusive, format!("M_1 norm of {what} still growing at horizon {horizon}"))
    } else {
        (Status::Pass, format!("M_1 norm of {what} attained at t = {}", m.argmax))
    };
    Ok((Condition::new(name, m.value, f64::INFINITY, status, detail), m.value, m.increasing_at_horizon))
}

/// `(rho, sigma)` for the gap condition, or the reason it fails.
fn gap_condition(sys: &DelaySystem, name: &str) -> (Condition, f64, f64) {
    let sched = sys.schedule();
    let stats = match sched.gap_mode() {
        GapMode::FiniteOnly => Err(format!(
            "impulse sequence ends at t = {}; gaps are unbounded on the half-line",
            sched.times().last().unwrap()
        )),
        _ => sched.gap_stats().map_err(|e| e.to_string()),
    };
    match stats {
        Ok((rho, sigma)) if rho > 0.0 && sigma.is_finite() => (
            Condition::new(name, 0.0, rho, Status::Pass, format!("gaps lie in [{rho}, {sigma}]")),
            rho,
            sigma,
        ),
        Ok((rho, sigma)) => (
            Condition::new(name, 0.0, rho, Status::Fail, format!("gaps [{rho}, {sigma}] are not bounded away from 0 and infinity")),
            rho,
            sigma,
        ),
        Err(reason) => (
            Condition::new(name, 0.0, 0.0, Status::Fail, reason),
            f64::NAN,
            f64::INFINITY,
        ),
    }
}

fn jump_condition(name: &str, big_b: f64) -> Condition {
    let status = if big_b < 1.0 { Status::Pass } else { Status::Fail };
    Condition::new(name, big_b, 1.0, status, format!("B = max |B_j| = {big_b}"))
}

fn closing_condition(name: &str, sum: f64, rhs: f64, growing: bool) -> Condition {
    let status = if !(sum <= rhs) {
        Status::Fail
    } else if growing {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    let detail = if growing {
        "sum of M_1 norms with at least one norm still growing".to_string()
    } else {
        "sum of M_1 norms".to_string()
    };
    Condition::new(name, sum, rhs, status, detail)
}

fn sampled_forcing(sys: &DelaySystem, grid: &[f64]) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid, |t| Ok(sys.forcing().eval(t)?))
}

fn sampled_history(sys: &DelaySystem, grid: &[f64]) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid, |t| {
        let g = sys.history_term_g(t)?;
        Ok(DMatrix::from_column_slice(g.len(), 1, g.as_slice()))
    })
}

/// Checks the integrability conditions (b1)-(b5) on `[0, horizon]`.
pub fn certify_theorem5(sys: &DelaySystem, horizon: f64) -> Result<Certificate> {
    let grid = certificate_grid(horizon)?;
    let mut conditions = Vec::new();
    conditions.push(l1_condition("b1_f", "f", &sampled_forcing(sys, &grid)?, horizon)?);

    let (gaps, rho, sigma) = gap_condition(sys, "b2");
    let big_b = sys.schedule().jump_norm_bound();
    let eta = -big_b.ln() / sigma;

    let mut m1_norms = Vec::new();
    let mut m1_growing = Vec::new();
    for k in 0..sys.terms().len() {
        let name = format!("b1_A{}", k + 1);
        if !eta.is_finite() {
            let detail = format!("eta = {eta} leaves the weighted coefficient undefined");
            conditions.push(Condition::new(name, f64::INFINITY, f64::INFINITY, Status::Fail, detail));
            m1_norms.push(f64::INFINITY);
            m1_growing.push(false);
            continue;
        }
        let samples = SampledFunction::from_fn(&grid, |t| sys.weighted_coefficient(k, eta, t))?;
        let (c, v, g) = m1_condition(&name, &format!("A_{}^eta", k + 1), &samples, horizon)?;
        conditions.push(c);
        m1_norms.push(v);
        m1_growing.push(g);
    }
    conditions.push(gaps);
    conditions.push(jump_condition("b3", big_b));
    conditions.push(l1_condition("b4", "g", &sampled_history(sys, &grid)?, horizon)?);

    let sum: f64 = m1_norms.iter().sum();
    let rhs = 1.0 - (-eta).exp();
    let reduced_rhs = rhs * (-eta * (sigma + 1.0)).exp();
    conditions.push(closing_condition("b5", sum, reduced_rhs, m1_growing.iter().any(|&g| g)));
    Ok(Certificate {
        kind: CertificateKind::Integrability,
        sigma,
        rho,
        jump_bound: big_b,
        eta,
        delta: None,
        m1_norms,
        m1_growing,
        lhs: (eta * (sigma + 1.0)).exp() * sum,
        rhs,
        conditions,
        verdict: Status::Pass,
    }
    .finish())
}

/// Checks the stability conditions (c1)-(c5) on `[0, horizon]`.
pub fn certify_theorem6(sys: &DelaySystem, horizon: f64) -> Result<Certificate> {
    let grid = certificate_grid(horizon)?;
    let mut conditions = Vec::new();
    conditions.push(l1_condition("c1_f", "f", &sampled_forcing(sys, &grid)?, horizon)?);

    let mut m1_norms = Vec::new();
    let mut m1_growing = Vec::new();
    for (k, term) in sys.terms().iter().enumerate() {
        let samples = SampledFunction::from_fn(&grid, |t| Ok(term.coeff.eval(t)?))?;
        let (c, v, g) = m1_condition(&format!("c1_A{}", k + 1), &format!("A_{}", k + 1), &samples, horizon)?;
        conditions.push(c);
        m1_norms.push(v);
        m1_growing.push(g);
    }
    let (gaps, rho, sigma) = gap_condition(sys, "c2");
    conditions.push(gaps);
    let big_b = sys.schedule().jump_norm_bound();
    conditions.push(jump_condition("c3", big_b));
    let eta = -big_b.ln() / sigma;

    let lag = sys.lag_bound()?;
    conditions.push(if lag.uniform && lag.delta.is_finite() {
        Condition::new("c4", lag.delta, f64::INFINITY, Status::Pass, format!("t - h_k(t) <= {}", lag.delta))
    } else {
        Condition::new(
            "c4",
            lag.delta,
            f64::INFINITY,
            Status::Fail,
            format!(
                "lag reaches {} at the horizon {} and is still growing; no uniform bound exists",
                lag.delta,
                sys.horizon()
            ),
        )
    });

    let sum: f64 = m1_norms.iter().sum();
    let rhs = 1.0 - (-eta).exp();
    let exponent = eta * (sigma + lag.delta + 1.0);
    conditions.push(closing_condition("c5", sum, rhs * (-exponent).exp(), m1_growing.iter().any(|&g| g)));
    Ok(Certificate {
        kind: CertificateKind::Stability,
        sigma,
        rho,
        jump_bound: big_b,
        eta,
        delta: Some(lag.delta),
        m1_norms,
        m1_growing,
        lhs: exponent.exp() * sum,
        rhs,
        conditions,
        verdict: Status::Pass,
    }
    .finish())
}

/// The integrability certificate specialized to a scalar equation with unit
/// impulse spacing, where the closing bound reduces to `(1 - b) b^2`.
pub fn certify_example(sys: &DelaySystem, horizon: f64) -> Result<Certificate> {
    if sys.dim() != 1 || sys.terms().len() != 1 {
        return Err(Error::InvalidArgument("the example certificate needs a scalar equation with one term".into()));
    }
    let mut cert = certify_theorem5(sys, horizon)?;
    cert.kind = CertificateKind::Example;
    if cert.sigma != 1.0 {
        return Err(Error::InvalidArgument(format!("the example certificate needs unit spacing, got sigma = {}", cert.sigma)));
    }
    let b = cert.jump_bound;
    let reduced = (1.0 - b) * b * b;
    let general = cert.condition("b5").map(|c| c.rhs).unwrap_or(f64::NAN);
    let gap = (reduced - general).abs();
    let status = if gap <= REDUCTION_TOL { Status::Pass } else { Status::Fail };
    cert.conditions.push(Condition {
        name: "reduction".into(),
        lhs: reduced,
        rhs: general,
        margin: REDUCTION_TOL - gap,
        status,
        detail: "(1 - b) b^2 equals the reduced closing bound".into(),
    });
    Ok(cert.finish())
}

/// Fitted envelope `N exp(-lambda (t - s))` of sampled norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub prefactor: f64,
    pub rate: f64,
    /// Largest excess of `ln |X|` over the regression line, before the
    /// prefactor is raised to cover every sample.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares fit of `ln |X(t,s)|` against `t - s`, then the prefactor is
/// raised until the envelope covers every sample.
pub fn decay_fit(samples: &[(f64, f64, f64)], min_gap: f64) -> Result<DecayFit> {
    let mut points = Vec::with_capacity(samples.len());
    let mut zeros = 0usize;
    for &(s, t, norm) in samples.iter().filter(|(s, t, _)| t - s >= min_gap) {
        if !(norm >= 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid norm sample {norm} at (s, t) = ({s}, {t})")));
        }
        if norm == 0.0 {
            zeros += 1;
            continue;
        }
        points.push((t - s, norm.ln()));
    }
    if zeros > 0 {
        if points.is_empty() {
            return Err(Error::DegenerateFit("every norm sample is zero".into()));
        }
        warn!("decay fit dropped {zeros} zero-norm samples");
    }
    if points.len() < 10 {
        return Err(Error::InvalidArgument(format!("decay fit needs at least 10 usable samples, got {}", points.len())));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all samples share one value of t - s".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = points
        .iter()
        .map(|&(x, y)| y - (intercept + slope * x))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        prefactor: (intercept + residual.max(0.0)).exp(),
        rate: -slope,
        residual: residual.max(0.0),
        samples: points.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayExperiment {
    pub fit: DecayFit,
    /// `(s, t, |X(t,s)|)` for every sample used.
    pub rows: Vec<(f64, f64, f64)>,
}

/// Spacing of the `t - s` samples taken from each fundamental-matrix run.
pub const EXPERIMENT_SAMPLE_STEP: f64 = 0.05;

/// Computes `X(., s)` on `[s, s + duration]` for every `s` and fits an
/// exponential envelope to the sampled norms.
pub fn stability_experiment(sys: &DelaySystem, s_list: &[f64], duration: f64, step: f64) -> Result<DecayExperiment> {
    if s_list.is_empty() {
        return Err(Error::InvalidArgument("no base times given".into()));
    }
    let per_s: Vec<Vec<(f64, f64, f64)>> = s_list
        .par_iter()
        .map(|&s| {
            let sample = fundamental_numeric(sys, s, s + duration, step)?;
            uniform_grid(s, s + duration, EXPERIMENT_SAMPLE_STEP)
                .into_iter()
                .map(|t| Ok((s, t, matrix_norm(&sample.at(t, Side::Right)?))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<_> = per_s.into_iter().flatten().collect();
    Ok(DecayExperiment { fit: decay_fit(&rows, 0.0)?, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityCase {
    pub forcing: ProbeResult,
    pub solution: ProbeResult,
    pub derivative: ProbeResult,
    pub verdict: Membership,
}

/// For each forcing, integrates with zero history and probes the `L_p`
/// membership of the solution and its derivative. Membership for every
/// case supports (but does not prove) admissibility of the pair.
pub fn admissibility_probe(
    sys: &DelaySystem,
    forcings: &[MatrixFunction],
    p: f64,
    horizons: &[f64],
    tol: f64,
    step: f64,
) -> Result<Vec<AdmissibilityCase>> {
    let t_end = horizons.iter().copied().fold(0.0, f64::max);
    forcings
        .par_iter()
        .map(|f| {
            let forced = sys.clone().with_forcing(f.clone())?;
            let grid = uniform_grid(0.0, t_end, step);
            let f_samples = SampledFunction::from_fn(&grid, |t| Ok(f.eval(t)?))?;
            let forcing = membership_probe(&f_samples, p, horizons, tol)?;
            let traj = integrate(&forced, &DVector::clone(sys.initial()), t_end, step, HistoryMode::Zero)?;
            let solution = membership_probe(traj.values(), p, horizons, tol)?;
            let derivative = membership_probe(traj.derivatives().unwrap(), p, horizons, tol)?;
            let verdict = if forcing.verdict != Membership::Member {
                Membership::Inconclusive
            } else if solution.verdict == Membership::NotMember || derivative.verdict == Membership::NotMember {
                Membership::NotMember
            } else if solution.verdict == Membership::Member && derivative.verdict == Membership::Member {
                Membership::Member
            } else {
                Membership::Inconclusive
            };
            Ok(AdmissibilityCase { forcing, solution, derivative, verdict })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ImpulseSchedule;
    use crate::timefn::DelayLaw;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn unit(b: f64, horizon: f64) -> ImpulseSchedule {
        ImpulseSchedule::uniform(1.0, horizon as usize, scalar(b)).unwrap()
    }

    fn pantograph(coeff: &str) -> DelaySystem {
        DelaySystem::new(unit(0.5, 40.0), 40.0)
            .unwrap()
            .with_term(MatrixFunction::parse(&[vec![coeff]]).unwrap(), DelayLaw::Pantograph(0.5))
            .unwrap()
            .with_forcing(MatrixFunction::parse_column(&["exp(-t)"]).unwrap())
            .unwrap()
    }

    fn lagged(a0: f64) -> DelaySystem {
        DelaySystem::new(unit(0.5, 40.0), 40.0)
            .unwrap()
            .with_term(MatrixFunction::constant(&scalar(a0)), DelayLaw::ConstantLag(0.1))
            .unwrap()
    }

    #[test]
    fn pantograph_example_passes() {
        let cert = certify_theorem5(&pantograph("0.1*exp(-0.5*ln(2)*t)"), 40.0).unwrap();
        assert_eq!(cert.verdict, Status::Pass, "{cert}");
        let b5 = cert.condition("b5").unwrap();
        assert!((b5.margin - 0.025).abs() < 1e-6);
        assert!((cert.eta - std::f64::consts::LN_2).abs() < 1e-15);
        let ex = certify_example(&pantograph("0.1*exp(-0.5*ln(2)*t)"), 40.0).unwrap();
        assert_eq!(ex.verdict, Status::Pass, "{ex}");
    }

    #[test]
    fn growing_weighted_coefficient_fails() {
        let cert = certify_theorem5(&pantograph("0.2"), 40.0).unwrap();
        assert_eq!(cert.verdict, Status::Fail);
        assert_eq!(cert.condition("b5").unwrap().status, Status::Fail);
        assert!(cert.m1_growing[0]);
    }

    #[test]
    fn non_contracting_jumps_fail() {
        let sys = DelaySystem::new(unit(1.0, 40.0), 40.0).unwrap();
        let cert = certify_theorem5(&sys, 40.0).unwrap();
        assert_eq!(cert.condition("b3").unwrap().status, Status::Fail);
        assert_eq!(cert.verdict, Status::Fail);
    }

    #[test]
    fn stability_certificates() {
        let pass = certify_theorem6(&lagged(0.1), 40.0).unwrap();
        assert_eq!(pass.verdict, Status::Pass, "{pass}");
        assert!((pass.lhs - 0.42871).abs() < 1e-5);
        assert!((pass.rhs - 0.5).abs() < 1e-15);
        let fail = certify_theorem6(&lagged(0.5), 40.0).unwrap();
        assert_eq!(fail.verdict, Status::Fail);
        assert!((fail.lhs - 2.1435).abs() < 1e-3);
        let empty = certify_theorem6(&DelaySystem::new(unit(0.5, 40.0), 40.0).unwrap(), 40.0).unwrap();
        assert_eq!(empty.verdict, Status::Pass);
        assert_eq!(empty.lhs, 0.0);
        let panto = certify_theorem6(&pantograph("0.1"), 40.0).unwrap();
        assert_eq!(panto.condition("c4").unwrap().status, Status::Fail);
    }

    #[test]
    fn fits() {
        let exact: Vec<_> = (0..50).map(|i| (0.0, i as f64 * 0.1, (-2.0 * i as f64 * 0.1).exp())).collect();
        let fit = decay_fit(&exact, 0.0).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-8 && (fit.prefactor - 1.0).abs() < 1e-8);
        let growing: Vec<_> = (0..50).map(|i| (1.0, 1.0 + i as f64 * 0.1, (i as f64 * 0.1).exp())).collect();
        assert!(decay_fit(&growing, 0.0).unwrap().rate < 0.0);
        let zeros: Vec<_> = (0..50).map(|i| (0.0, i as f64, 0.0)).collect();
        assert!(matches!(decay_fit(&zeros, 0.0), Err(Error::DegenerateFit(_))));
        assert!(decay_fit(&exact[..5], 0.0).is_err());
    }

    #[test]
    fn fit_envelope_covers_samples() {
        let sched = unit(0.5, 20.0);
        let rows: Vec<_> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.1;
                (0.0, t, crate::fundamental::x1_closed(t, 0.0, &sched)[(0, 0)])
            })
            .collect();
        let fit = decay_fit(&rows, 0.0).unwrap();
        assert!((fit.rate - std::f64::consts::LN_2).abs() < 0.05);
        for (s, t, v) in rows {
            assert!(fit.prefactor * (-fit.rate * (t - s)).exp() >= v * (1.0 - 1e-12));
        }
    }
}
