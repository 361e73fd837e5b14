use std::path::PathBuf;

use impdde::config::ProblemConfig;
use impdde::fundamental::{fundamental_numeric, reconstruct_batch};
use impdde::linalg::{matrix_norm, vector_norm};
use impdde::norms::{Membership, ProbeResult, Side};
use impdde::solver::{integrate, HistoryMode};
use impdde::stability::{self, admissibility_probe, stability_experiment, Status};
use impdde::{DelaySystem, Error, MatrixFunction};

use crate::output::{columns, num, plot_script, Table};
use crate::{Command, Common, History, Outcome, Which};

#[derive(Debug)]
pub struct Failure {
    pub outcome: Outcome,
    pub message: String,
}

impl Failure {
    fn new(outcome: Outcome, message: impl Into<String>) -> Self {
        Self { outcome, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let outcome = match e {
            Error::Config(_) | Error::Parse(_) => Outcome::InvalidConfig,
            Error::HypothesisNotMet(_) | Error::DelayViolation { .. } => Outcome::HypothesisViolation,
            _ => Outcome::Fail,
        };
        Self::new(outcome, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(Outcome::Fail, e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::new(Outcome::Fail, e.to_string())
    }
}

type CmdResult = Result<Outcome, Failure>;

pub fn run(command: Command) -> CmdResult {
    match command {
        Command::Validate { common } => validate(&common),
        Command::Simulate { common, horizon, history } => simulate(&common, horizon, history),
        Command::Fundamental { common, s, horizon } => fundamental(&common, &s, horizon),
        Command::Reconstruct { common, t, qstep } => reconstruct(&common, &t, qstep),
        Command::Certify { common, which, horizon } => certify(&common, which, horizon),
        Command::Probe { common, p, horizons, tol, forcing } => probe(&common, p, &horizons, tol, &forcing),
        Command::Decay { common, s, duration } => decay(&common, &s, duration),
    }
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::new(Outcome::InvalidConfig, format!("--{name} must be positive, got {v}")))
    }
}

fn load(common: &Common) -> Result<DelaySystem, Failure> {
    positive("step", common.step)?;
    let cfg = ProblemConfig::load(&common.config)?;
    Ok(cfg.build()?)
}

/// Validation grid: the integration step, but no finer than needed for a
/// long horizon.
fn validation_step(sys: &DelaySystem, step: f64) -> f64 {
    step.max(sys.horizon() / 1e5)
}

/// Loads the config and refuses to continue when a hypothesis fails.
fn load_checked(common: &Common) -> Result<DelaySystem, Failure> {
    let sys = load(common)?;
    let report = sys.validate_hypotheses(validation_step(&sys, common.step))?;
    if !report.all_passed() {
        return Err(Failure::new(Outcome::HypothesisViolation, format!("hypotheses violated:\n{report}")));
    }
    Ok(sys)
}

fn emit(common: &Common, table: &Table, name: &str) -> Result<PathBuf, Failure> {
    let path = table.write(&common.out, name)?;
    if common.plot_script {
        plot_script(&path)?;
    }
    println!("wrote {}", path.display());
    Ok(path)
}

fn validate(common: &Common) -> CmdResult {
    let sys = load(common)?;
    let report = sys.validate_hypotheses(validation_step(&sys, common.step))?;
    println!("{report}");
    let mut table = Table::new(["hypothesis", "passed", "value", "detail"]);
    for c in &report.checks {
        table.push(vec![c.id.to_string(), c.passed.to_string(), c.value.map(num).unwrap_or_default(), c.detail.clone()]);
    }
    emit(common, &table, "hypotheses.csv")?;
    Ok(if report.all_passed() { Outcome::Success } else { Outcome::HypothesisViolation })
}

fn simulate(common: &Common, horizon: Option<f64>, history: History) -> CmdResult {
    let sys = load_checked(common)?;
    let t_end = horizon.unwrap_or(sys.horizon());
    let mode = match history {
        History::Phi => HistoryMode::Phi,
        History::Zero => HistoryMode::Zero,
    };
    let traj = integrate(&sys, sys.initial(), t_end, common.step, mode)?;
    let n = sys.dim();
    let mut header = vec!["t".to_string()];
    header.extend(columns("x", n));
    header.extend(columns("dx", n));
    header.push("is_jump".into());
    header.extend(columns("x_left", n));
    let mut table = Table::new(header);
    let values = traj.values();
    let derivs = traj.derivatives().expect("solver stores derivatives");
    for (i, &t) in traj.times().iter().enumerate() {
        let jump = traj.is_jump(i);
        let mut row = vec![num(t)];
        row.extend(values.right_values()[i].iter().map(|&v| num(v)));
        row.extend(derivs.right_values()[i].iter().map(|&v| num(v)));
        row.push(u8::from(jump).to_string());
        if jump {
            row.extend(values.left_values()[i].iter().map(|&v| num(v)));
        } else {
            row.extend(std::iter::repeat_n(String::new(), n));
        }
        table.push(row);
    }
    emit(common, &table, "trajectory.csv")?;
    Ok(Outcome::Success)
}

fn fundamental(common: &Common, s_list: &[f64], horizon: Option<f64>) -> CmdResult {
    let sys = load_checked(common)?;
    let t_end = horizon.unwrap_or(sys.horizon());
    let n = sys.dim();
    let mut header = vec!["s".to_string(), "t".to_string()];
    header.extend((1..=n).flat_map(|i| (1..=n).map(move |j| format!("X_{i}_{j}"))));
    let mut matrices = Table::new(header);
    let envelope = impdde::fundamental::check_x1_bound(sys.schedule(), &[]).ok().map(|r| r.rate);
    let sigma = sys.schedule().gap_stats().map(|g| g.1).unwrap_or(f64::NAN);
    let mut bounds = Table::new(["s", "t", "norm_X", "bound", "margin"]);
    for &s in s_list {
        let sample = fundamental_numeric(&sys, s, t_end, common.step)?;
        for (&t, m) in sample.times().iter().zip(sample.matrices()) {
            let mut row = vec![num(s), num(t)];
            row.extend(m.row_iter().flat_map(|r| r.iter().map(|&v| num(v)).collect::<Vec<_>>()));
            matrices.push(row);
            if let Some(eta) = envelope {
                let norm = matrix_norm(m);
                let excess = t - s - sigma;
                let bound = if excess == 0.0 { 1.0 } else { (-eta * excess).exp() };
                bounds.push(vec![num(s), num(t), num(norm), num(bound), num(bound - norm)]);
            }
        }
    }
    emit(common, &matrices, "fundamental.csv")?;
    if envelope.is_some() {
        emit(common, &bounds, "bounds.csv")?;
    } else {
        log::warn!("no jump envelope applies (needs B < 1 and bounded gaps); bounds.csv not written");
    }
    Ok(Outcome::Success)
}

fn reconstruct(common: &Common, targets: &[f64], qstep: f64) -> CmdResult {
    positive("qstep", qstep)?;
    let sys = load_checked(common)?;
    let recon = reconstruct_batch(&sys, targets, common.step, qstep)?;
    let t_max = targets.iter().copied().fold(0.0, f64::max);
    let direct = integrate(&sys, sys.initial(), t_max, common.step, HistoryMode::Phi)?;
    let n = sys.dim();
    let mut header = vec!["t".to_string()];
    header.extend(columns("x_recon", n));
    header.extend(columns("x_direct", n));
    header.push("abs_err".into());
    let mut table = Table::new(header);
    for (&t, r) in targets.iter().zip(&recon) {
        let d = direct.eval(t, Side::Right)?;
        let mut row = vec![num(t)];
        row.extend(r.iter().map(|&v| num(v)));
        row.extend(d.iter().map(|&v| num(v)));
        row.push(num(vector_norm(&(r - &d))));
        table.push(row);
    }
    emit(common, &table, "reconstruct.csv")?;
    Ok(Outcome::Success)
}

fn certify(common: &Common, which: Which, horizon: f64) -> CmdResult {
    positive("horizon", horizon)?;
    let sys = load_checked(common)?;
    let cert = match which {
        Which::T5 => stability::certify_theorem5(&sys, horizon)?,
        Which::T6 => stability::certify_theorem6(&sys, horizon)?,
        Which::Example => stability::certify_example(&sys, horizon)?,
    };
    print!("{cert}");
    let mut table = Table::new(["condition", "lhs", "rhs", "margin", "pass"]);
    for c in &cert.conditions {
        table.push(vec![c.name.clone(), num(c.lhs), num(c.rhs), num(c.margin), c.status.as_str().to_string()]);
    }
    emit(common, &table, "certificate.csv")?;
    Ok(match cert.verdict {
        Status::Pass => Outcome::Success,
        Status::Fail => Outcome::Fail,
        Status::Inconclusive => Outcome::Inconclusive,
    })
}

fn probe(common: &Common, p: f64, horizons: &[f64], tol: f64, extra: &[String]) -> CmdResult {
    positive("p", p)?;
    positive("tol", tol)?;
    let sys = load_checked(common)?;
    let mut cases = vec![sys.forcing().clone()];
    for (i, text) in extra.iter().enumerate() {
        let items: Vec<&str> = text.split(';').map(str::trim).collect();
        let f = MatrixFunction::parse_column(&items)
            .map_err(|((row, _), e)| Failure::new(Outcome::InvalidConfig, format!("--forcing #{}[{row}]: {e}", i + 1)))?;
        if f.shape() != (sys.dim(), 1) {
            return Err(Failure::new(
                Outcome::InvalidConfig,
                format!("--forcing #{} has {} components, expected {}", i + 1, f.shape().0, sys.dim()),
            ));
        }
        cases.push(f);
    }
    let results = admissibility_probe(&sys, &cases, p, horizons, tol, common.step)?;
    let mut table = Table::new(["case", "quantity", "horizon", "norm", "increment"]);
    let add = |table: &mut Table, case: usize, what: &str, r: &ProbeResult| {
        for row in &r.rows {
            table.push(vec![case.to_string(), what.to_string(), num(row.horizon), num(row.norm), num(row.increment)]);
        }
    };
    for (i, (f, r)) in cases.iter().zip(&results).enumerate() {
        add(&mut table, i, "f", &r.forcing);
        add(&mut table, i, "x", &r.solution);
        add(&mut table, i, "dx", &r.derivative);
        println!(
            "case {i}: f = [{}]  f: {}  x: {}  dx: {}  => {}",
            (0..sys.dim()).map(|k| f.entry(k, 0).to_string()).collect::<Vec<_>>().join("; "),
            verdict(r.forcing.verdict),
            verdict(r.solution.verdict),
            verdict(r.derivative.verdict),
            verdict(r.verdict)
        );
    }
    emit(common, &table, "probe.csv")?;
    let outcome = if results.iter().all(|r| r.verdict == Membership::Member) {
        println!("admissibility supported (not proven) for every case");
        Outcome::Success
    } else if results.iter().any(|r| r.verdict == Membership::NotMember) {
        Outcome::Fail
    } else {
        Outcome::Inconclusive
    };
    Ok(outcome)
}

fn verdict(m: Membership) -> &'static str {
    match m {
        Membership::Member => "member",
        Membership::NotMember => "not-member",
        Membership::Inconclusive => "inconclusive",
    }
}

fn decay(common: &Common, s_list: &[f64], duration: f64) -> CmdResult {
    positive("duration", duration)?;
    let sys = load_checked(common)?;
    let exp = stability_experiment(&sys, s_list, duration, common.step)?;
    let mut table = Table::new(["s", "t", "norm_X"]);
    for &(s, t, v) in &exp.rows {
        table.push(vec![num(s), num(t), num(v)]);
    }
    emit(common, &table, "decay.csv")?;
    let fit = exp.fit;
    println!(
        "envelope |X(t,s)| <= N exp(-lambda (t - s)): N = {}, lambda = {}, pre-repair residual = {}, samples = {}",
        fit.prefactor, fit.rate, fit.residual, fit.samples
    );
    if fit.rate <= 0.0 {
        println!("no decay observed");
    }
    Ok(Outcome::Success)
}
