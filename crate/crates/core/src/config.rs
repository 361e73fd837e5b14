//! TOML problem description.
//!
//! ```toml
//! [system]
//! n = 1
//! horizon = 40.0
//! x0 = [1.0]                      # optional, defaults to zero
//!
//! [[terms]]                       # zero or more
//! A = [["0.1*exp(-0.5*ln(2)*t)"]] # n x n; a bare entry is accepted when n = 1
//! delay = "pantograph 0.5"        # or "lag 0.1", or any expression in t
//!
//! [forcing]
//! f = ["exp(-t)"]                 # n entries, defaults to zero
//!
//! [phi]
//! phi = ["1"]                     # initial function on t < 0, defaults to zero
//!
//! [schedule]
//! generator = "uniform(1, 40)"    # spacing and count; count defaults to the horizon
//! # times = [0, 1, 2.5]           # alternatively, explicit times (0 is implied)
//! B = 0.5                         # scalar, one n x n matrix, or one matrix per impulse
//! alpha = [0.0]                   # optional: one vector, or one vector per impulse
//! gap_mode = "uniform"            # "uniform", "bounded(rho, sigma)" or "finite-only"
//! ```
//!
//! Entries of `A`, `f` and `phi` are either numbers or expression strings.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::schedule::{GapMode, ImpulseSchedule};
use crate::system::DelaySystem;
use crate::timefn::{DelayLaw, MatrixFunction, ParseError};

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub terms: Vec<TermSection>,
    #[serde(default)]
    pub forcing: Option<ForcingSection>,
    #[serde(default)]
    pub phi: Option<PhiSection>,
    #[serde(default)]
    pub schedule: Option<ScheduleSection>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n: usize,
    pub horizon: f64,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    #[serde(rename = "A")]
    pub a: MatrixEntry,
    pub delay: String,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ForcingSection {
    pub f: VectorEntry,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhiSection {
    pub phi: VectorEntry,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default)]
    pub generator: Option<String>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(rename = "B", default)]
    pub b: Option<JumpMatrices>,
    #[serde(default)]
    pub alpha: Option<JumpVectors>,
    #[serde(default)]
    pub gap_mode: Option<String>,
}

/// A number or an expression string.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Text(String),
}

impl Entry {
    fn text(&self) -> String {
        match self {
            Entry::Number(v) => format!("{v:?}"),
            Entry::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MatrixEntry {
    Scalar(Entry),
    Rows(Vec<Vec<Entry>>),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum VectorEntry {
    Scalar(Entry),
    Items(Vec<Entry>),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum JumpMatrices {
    Scalar(f64),
    Shared(Vec<Vec<f64>>),
    PerImpulse(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum JumpVectors {
    Scalar(f64),
    Shared(Vec<f64>),
    PerImpulse(Vec<Vec<f64>>),
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Assembles the system; failures name the offending entry.
    pub fn build(&self) -> Result<DelaySystem> {
        let n = self.system.n;
        if n == 0 {
            return Err(Error::Config("system.n must be positive".into()));
        }
        let horizon = self.system.horizon;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Config(format!("system.horizon must be positive and finite, got {horizon}")));
        }
        let sched = match &self.schedule {
            Some(s) => s.build(n, horizon)?,
            None => ImpulseSchedule::empty(n, horizon)?,
        };
        let mut sys = DelaySystem::new(sched, horizon).map_err(config_error("system"))?;
        for (k, term) in self.terms.iter().enumerate() {
            let at = format!("terms[{k}]");
            let coeff = matrix_function(&term.a, n).map_err(|e| Error::Config(format!("{at}.A{e}")))?;
            let delay = DelayLaw::parse(&term.delay).map_err(|e| Error::Config(format!("{at}.delay: {e}")))?;
            sys = sys.with_term(coeff, delay).map_err(config_error(&at))?;
        }
        if let Some(f) = &self.forcing {
            let m = column_function(&f.f, n).map_err(|e| Error::Config(format!("forcing.f{e}")))?;
            sys = sys.with_forcing(m).map_err(config_error("forcing.f"))?;
        }
        if let Some(p) = &self.phi {
            let m = column_function(&p.phi, n).map_err(|e| Error::Config(format!("phi.phi{e}")))?;
            sys = sys.with_phi(m).map_err(config_error("phi.phi"))?;
        }
        if let Some(x0) = &self.system.x0 {
            sys = sys.with_initial(DVector::from_column_slice(x0)).map_err(config_error("system.x0"))?;
        }
        Ok(sys)
    }
}

impl DelaySystem {
    /// Parses and assembles a TOML problem description.
    pub fn from_config(text: &str) -> Result<Self> {
        ProblemConfig::from_toml(text)?.build()
    }
}

fn config_error(at: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config(msg) => Error::Config(msg),
        other => Error::Config(format!("{at}: {other}")),
    }
}

fn located(((i, j), e): ((usize, usize), ParseError)) -> String {
    format!("[{i}][{j}]: {e}")
}

fn matrix_function(entry: &MatrixEntry, n: usize) -> std::result::Result<MatrixFunction, String> {
    let rows: Vec<Vec<String>> = match entry {
        MatrixEntry::Scalar(e) if n == 1 => vec![vec![e.text()]],
        MatrixEntry::Scalar(_) => return Err(format!(": a bare entry needs n = 1, got n = {n}")),
        MatrixEntry::Rows(rows) => rows.iter().map(|r| r.iter().map(Entry::text).collect()).collect(),
    };
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!(": expected a {n}x{n} table"));
    }
    MatrixFunction::parse(&rows).map_err(located)
}

fn column_function(entry: &VectorEntry, n: usize) -> std::result::Result<MatrixFunction, String> {
    let items: Vec<String> = match entry {
        VectorEntry::Scalar(e) => vec![e.text(); n],
        VectorEntry::Items(items) => items.iter().map(Entry::text).collect(),
    };
    if items.len() != n {
        return Err(format!(": expected {n} entries, got {}", items.len()));
    }
    MatrixFunction::parse_column(&items).map_err(|((i, _), e)| format!("[{i}]: {e}"))
}

/// Arguments of `name(a, b, ...)`.
fn call_args<'a>(text: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let inner = text.trim().strip_prefix(name)?.trim_start().strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

fn number(text: &str, at: &str) -> Result<f64> {
    text.parse().map_err(|_| Error::Config(format!("{at}: `{text}` is not a number")))
}

impl ScheduleSection {
    fn build(&self, n: usize, horizon: f64) -> Result<ImpulseSchedule> {
        let (times, spacing) = match (&self.generator, &self.times) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("schedule: give either `generator` or `times`, not both".into()))
            }
            (Some(gen), None) => {
                let args = call_args(gen, "uniform")
                    .filter(|a| (1..=2).contains(&a.len()))
                    .ok_or_else(|| Error::Config(format!("schedule.generator: expected `uniform(d, count)`, got `{gen}`")))?;
                let d = number(args[0], "schedule.generator")?;
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::Config("schedule.generator: spacing must be positive".into()));
                }
                let count = match args.get(1) {
                    Some(c) => c
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("schedule.generator: `{c}` is not a count")))?,
                    None => (horizon / d + 1e-9).floor() as usize,
                };
                ((0..=count).map(|j| j as f64 * d).collect::<Vec<_>>(), Some(d))
            }
            (None, Some(t)) => {
                let mut times = t.clone();
                if times.first() != Some(&0.0) {
                    times.insert(0, 0.0);
                }
                (times, None)
            }
            (None, None) => (vec![0.0], None),
        };
        let count = times.len() - 1;
        let matrices = match &self.b {
            None => vec![DMatrix::identity(n, n); count],
            Some(JumpMatrices::Scalar(v)) => vec![DMatrix::identity(n, n) * *v; count],
            Some(JumpMatrices::Shared(rows)) => vec![square(rows, n, "schedule.B")?; count],
            Some(JumpMatrices::PerImpulse(list)) => {
                if list.len() != count {
                    return Err(Error::Config(format!("schedule.B: {} matrices for {count} impulses", list.len())));
                }
                list.iter()
                    .enumerate()
                    .map(|(j, rows)| square(rows, n, &format!("schedule.B[{j}]")))
                    .collect::<Result<_>>()?
            }
        };
        let mut sched = ImpulseSchedule::new(n, times, matrices).map_err(config_error("schedule"))?;
        let jumps = match &self.alpha {
            None => None,
            Some(JumpVectors::Scalar(v)) => Some(vec![DVector::from_element(n, *v); count]),
            Some(JumpVectors::Shared(v)) => {
                if v.len() != n {
                    return Err(Error::Config(format!("schedule.alpha: expected {n} entries, got {}", v.len())));
                }
                Some(vec![DVector::from_column_slice(v); count])
            }
            Some(JumpVectors::PerImpulse(list)) => {
                if list.len() != count {
                    return Err(Error::Config(format!("schedule.alpha: {} vectors for {count} impulses", list.len())));
                }
                Some(list.iter().map(|v| DVector::from_column_slice(v)).collect())
            }
        };
        if let Some(jumps) = jumps {
            sched = sched.with_jumps(jumps).map_err(config_error("schedule.alpha"))?;
        }
        let mode = match self.gap_mode.as_deref().map(str::trim) {
            None => spacing.map_or(GapMode::FiniteOnly, GapMode::Uniform),
            Some("uniform") => match spacing {
                Some(d) => GapMode::Uniform(d),
                None => {
                    return Err(Error::Config(
                        "schedule.gap_mode: `uniform` needs a uniform generator".into(),
                    ))
                }
            },
            Some("finite-only") => GapMode::FiniteOnly,
            Some(other) => {
                let args = call_args(other, "bounded").filter(|a| a.len() == 2).ok_or_else(|| {
                    Error::Config(format!("schedule.gap_mode: unknown mode `{other}`"))
                })?;
                let rho = number(args[0], "schedule.gap_mode")?;
                let sigma = number(args[1], "schedule.gap_mode")?;
                if !(0.0 < rho && rho <= sigma) {
                    return Err(Error::Config("schedule.gap_mode: need 0 < rho <= sigma".into()));
                }
                GapMode::Bounded { rho, sigma }
            }
        };
        Ok(sched.with_gap_mode(mode))
    }
}

fn square(rows: &[Vec<f64>], n: usize, at: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{at}: expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[system]
n = 1
horizon = 10.0
x0 = [1.0]

[[terms]]
A = [["0.1*exp(-0.5*ln(2)*t)"]]
delay = "pantograph 0.5"

[forcing]
f = ["exp(-t)"]

[schedule]
generator = "uniform(1, 10)"
B = 0.5
"#;

    #[test]
    fn example_builds() {
        let sys = DelaySystem::from_config(EXAMPLE).unwrap();
        assert_eq!(sys.dim(), 1);
        assert_eq!(sys.terms().len(), 1);
        assert_eq!(sys.schedule().num_impulses(), 10);
        assert_eq!(sys.schedule().gap_mode(), GapMode::Uniform(1.0));
        assert_eq!(sys.initial()[0], 1.0);
        assert!(sys.validate_hypotheses(0.01).unwrap().all_passed());
    }

    #[test]
    fn numbers_and_defaults() {
        let text = r#"
[system]
n = 2
horizon = 3.0

[[terms]]
A = [[1, 0], [0, "2*t"]]
delay = "lag 0.5"

[schedule]
times = [1.0, 2.0]
B = [[[0.5, 0], [0, 0.5]], [[1, 1], [0, 1]]]
alpha = [[1, 0], [0, 1]]
gap_mode = "bounded(0.5, 2)"
"#;
        let sys = DelaySystem::from_config(text).unwrap();
        assert_eq!(sys.schedule().times(), &[0.0, 1.0, 2.0]);
        assert_eq!(sys.schedule().matrix(2)[(0, 1)], 1.0);
        assert_eq!(sys.schedule().jump(2)[1], 1.0);
        assert_eq!(sys.schedule().gap_mode(), GapMode::Bounded { rho: 0.5, sigma: 2.0 });
        assert_eq!(sys.terms()[0].coeff.eval(2.0).unwrap()[(1, 1)], 4.0);
        assert!(sys.forcing().is_zero());
    }

    #[test]
    fn errors_name_the_entry() {
        let bad_expr = EXAMPLE.replace("exp(-t)", "exp(-x)");
        let err = DelaySystem::from_config(&bad_expr).unwrap_err().to_string();
        assert!(err.contains("forcing.f[0]") && err.contains("unknown identifier"), "{err}");
        let bad_delay = EXAMPLE.replace("pantograph 0.5", "pantograph 2");
        let err = DelaySystem::from_config(&bad_delay).unwrap_err().to_string();
        assert!(err.contains("terms[0].delay"), "{err}");
        let bad_shape = EXAMPLE.replace("n = 1", "n = 2");
        assert!(matches!(DelaySystem::from_config(&bad_shape), Err(Error::Config(_))));
        assert!(matches!(DelaySystem::from_config("[system]\nn = 1"), Err(Error::Config(_))));
        let unknown = EXAMPLE.replace("x0 = [1.0]", "x0 = [1.0]\nfoo = 3");
        assert!(matches!(DelaySystem::from_config(&unknown), Err(Error::Config(_))));
    }
}
