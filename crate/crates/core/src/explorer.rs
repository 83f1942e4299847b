//! Nelder–Mead search for states (and optionally operator pairs) minimizing a
//! statement's margin.
//!
//! A candidate is an unconstrained real vector: real/imaginary parts of the
//! module entries, followed in joint mode by the cells of `A` and `B`
//! (symmetrized on construction). The state is obtained with
//! [`normalize`], and candidates with a singular Gram matrix, a failed
//! evaluation, or a not-applicable row score `+∞`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraSignature;
use crate::error::{Error, Result};
use crate::hilbert_module::{normalize, ModuleElement, State};
use crate::instance::{InstanceFile, MorphismPayload, Provenance};
use crate::morphism::Morphism;
use crate::tolerance::Tolerances;
use crate::verifier::{verify_statement, StatementId, StatementRow};

pub const DEFAULT_INITIAL_STEP: f64 = 0.5;
pub const DEFAULT_SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum SearchMode {
    StateOnly { a: Morphism, b: Morphism },
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub statement: StatementId,
    pub signature: AlgebraSignature,
    pub rank: usize,
    pub mode: SearchMode,
    /// Nelder–Mead steps per restart, after the initial simplex.
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Simplex shrink coefficient, in `(0, 1)`.
    pub shrink: f64,
    pub tolerances: Tolerances,
}

impl SearchSpec {
    pub fn joint(statement: StatementId, signature: AlgebraSignature, rank: usize) -> Self {
        Self {
            statement,
            signature,
            rank,
            mode: SearchMode::Joint,
            iterations: 500,
            restarts: 20,
            seed: 0,
            initial_step: DEFAULT_INITIAL_STEP,
            shrink: DEFAULT_SHRINK,
            tolerances: Tolerances::default(),
        }
    }

    pub fn state_only(statement: StatementId, a: Morphism, b: Morphism) -> Self {
        let signature = a.signature().clone();
        let rank = a.rank();
        Self {
            mode: SearchMode::StateOnly { a, b },
            ..Self::joint(statement, signature, rank)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput("restarts must be at least 1".into()));
        }
        if self.rank == 0 {
            return Err(Error::InvalidInput("rank must be at least 1".into()));
        }
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(Error::InvalidInput(format!("initial step must be positive, got {}", self.initial_step)));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidInput(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        self.tolerances.validate().map_err(Error::InvalidInput)?;
        if let SearchMode::StateOnly { a, b } = &self.mode {
            for (name, m) in [("A", a), ("B", b)] {
                if m.signature() != &self.signature || m.rank() != self.rank {
                    return Err(Error::ShapeMismatch(format!(
                        "{name} has signature {} rank {}, search is over signature {} rank {}",
                        m.signature(),
                        m.rank(),
                        self.signature,
                        self.rank
                    )));
                }
                m.ensure_selfadjoint()
                    .map_err(|e| Error::InvalidInput(format!("{name} is not self-adjoint: {e}")))?;
            }
        }
        Ok(())
    }

    fn state_dim(&self) -> usize {
        self.signature.real_dimension() * self.rank
    }

    fn morphism_dim(&self) -> usize {
        self.signature.real_dimension() * self.rank * self.rank
    }

    pub fn dimension(&self) -> usize {
        match self.mode {
            SearchMode::StateOnly { .. } => self.state_dim(),
            SearchMode::Joint => self.state_dim() + 2 * self.morphism_dim(),
        }
    }

    fn decode(&self, params: &[f64]) -> Result<Candidate> {
        let (xs, rest) = params.split_at(self.state_dim());
        let raw = ModuleElement::from_real_parameters(&self.signature, self.rank, xs)?;
        let state = normalize(&raw)?;
        let (a, b) = match &self.mode {
            SearchMode::StateOnly { a, b } => (a.clone(), b.clone()),
            SearchMode::Joint => {
                let (ap, bp) = rest.split_at(self.morphism_dim());
                (
                    Morphism::selfadjoint_from_real_parameters(&self.signature, self.rank, ap)?,
                    Morphism::selfadjoint_from_real_parameters(&self.signature, self.rank, bp)?,
                )
            }
        };
        Ok(Candidate { a, b, state })
    }

    fn score(&self, params: &[f64]) -> (f64, Option<Candidate>) {
        let Ok(candidate) = self.decode(params) else {
            return (f64::INFINITY, None);
        };
        match verify_statement(self.statement, &candidate.a, &candidate.b, &candidate.state, &self.tolerances) {
            Ok(row) => match row.margin() {
                Some(m) if m.is_finite() => (m, Some(candidate)),
                _ => (f64::INFINITY, None),
            },
            Err(_) => (f64::INFINITY, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    a: Morphism,
    b: Morphism,
    state: State,
}

/// Serialized form of [`SearchSpec`]; fixed operators use the instance schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpecFile {
    pub statement: StatementId,
    pub signature: Vec<usize>,
    pub rank: usize,
    /// `"joint"` or `"state-only"`.
    pub mode: String,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<MorphismPayload>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MorphismPayload>,
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub shrink: f64,
    pub tolerances: Tolerances,
}

impl From<&SearchSpec> for SearchSpecFile {
    fn from(spec: &SearchSpec) -> Self {
        let (mode, a, b) = match &spec.mode {
            SearchMode::Joint => ("joint", None, None),
            SearchMode::StateOnly { a, b } => ("state-only", Some(a.into()), Some(b.into())),
        };
        Self {
            statement: spec.statement,
            signature: spec.signature.block_dims().to_vec(),
            rank: spec.rank,
            mode: mode.into(),
            a,
            b,
            iterations: spec.iterations,
            restarts: spec.restarts,
            seed: spec.seed,
            initial_step: spec.initial_step,
            shrink: spec.shrink,
            tolerances: spec.tolerances,
        }
    }
}

impl SearchSpecFile {
    pub fn to_spec(&self) -> Result<SearchSpec> {
        let signature = AlgebraSignature::new(self.signature.clone())?;
        let mode = match (self.mode.as_str(), &self.a, &self.b) {
            ("joint", None, None) => SearchMode::Joint,
            ("joint", _, _) => {
                return Err(Error::InvalidInput("joint mode takes no fixed operators".into()));
            }
            ("state-only", Some(a), Some(b)) => SearchMode::StateOnly {
                a: a.to_morphism(&signature, self.rank, "A")?,
                b: b.to_morphism(&signature, self.rank, "B")?,
            },
            ("state-only", _, _) => {
                return Err(Error::InvalidInput("state-only mode requires both A and B".into()));
            }
            (other, _, _) => {
                return Err(Error::InvalidInput(format!(
                    "unknown mode {other:?}; expected \"joint\" or \"state-only\""
                )));
            }
        };
        let spec = SearchSpec {
            statement: self.statement,
            signature,
            rank: self.rank,
            mode,
            iterations: self.iterations,
            restarts: self.restarts,
            seed: self.seed,
            initial_step: self.initial_step,
            shrink: self.shrink,
            tolerances: self.tolerances,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartTrace {
    pub restart: usize,
    /// Margin of the restart's starting point, `None` if it was infeasible.
    pub initial_margin: Option<f64>,
    pub best_margin: Option<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub spec: SearchSpecFile,
    pub best_margin: f64,
    pub best_restart: usize,
    pub best_instance: InstanceFile,
    pub best_row: StatementRow,
    pub restarts: Vec<RestartTrace>,
    pub evaluations: usize,
    /// Replay payload, present when the best margin is below `−tolerance`.
    pub counterexample: Option<InstanceFile>,
}

impl SearchResult {
    pub fn found_counterexample(&self) -> bool {
        self.counterexample.is_some()
    }
}

struct RestartOutcome {
    trace: RestartTrace,
    best: Option<(f64, Vec<f64>)>,
}

/// Keeps the best feasible point ever evaluated.
struct Objective<'a> {
    spec: &'a SearchSpec,
    evaluations: usize,
    best: Option<(f64, Vec<f64>)>,
}

impl Objective<'_> {
    fn eval(&mut self, p: &[f64]) -> f64 {
        self.evaluations += 1;
        let (v, _) = self.spec.score(p);
        if v.is_finite() && self.best.as_ref().is_none_or(|(b, _)| v < *b) {
            self.best = Some((v, p.to_vec()));
        }
        v
    }
}

fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    // a + t (a - b)
    a.iter().zip(b).map(|(x, y)| x + t * (x - y)).collect()
}

fn nelder_mead(obj: &mut Objective<'_>, start: Vec<f64>, step: f64, shrink: f64, iterations: usize) -> Option<f64> {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;

    let n = start.len();
    let f0 = obj.eval(&start);
    let initial = f0.is_finite().then_some(f0);
    let mut simplex: Vec<(f64, Vec<f64>)> = vec![(f0, start.clone())];
    for i in 0..n {
        let mut p = start.clone();
        p[i] += step;
        let f = obj.eval(&p);
        simplex.push((f, p));
    }

    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut centroid = vec![0.0; n];
        for (_, p) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = axpy(&centroid, ALPHA, &worst.1);
        let fr = obj.eval(&reflected);
        if fr < simplex[0].0 {
            let expanded = axpy(&centroid, GAMMA, &worst.1);
            let fe = obj.eval(&expanded);
            simplex[n] = if fe < fr { (fe, expanded) } else { (fr, reflected) };
            continue;
        }
        if fr < simplex[n - 1].0 {
            simplex[n] = (fr, reflected);
            continue;
        }
        let (fc, contracted) = if fr < worst.0 {
            let c = axpy(&centroid, RHO, &worst.1);
            (obj.eval(&c), c)
        } else {
            let c = axpy(&centroid, -RHO, &worst.1);
            (obj.eval(&c), c)
        };
        if fc < worst.0.min(fr) {
            simplex[n] = (fc, contracted);
            continue;
        }
        let best = simplex[0].1.clone();
        for (f, p) in simplex.iter_mut().skip(1) {
            for (x, b) in p.iter_mut().zip(&best) {
                *x = b + shrink * (*x - b);
            }
            *f = obj.eval(p);
        }
    }
    initial
}

fn run_restart(spec: &SearchSpec, restart: usize) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(restart as u64);
    let start: Vec<f64> = (0..spec.dimension()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut obj = Objective {
        spec,
        evaluations: 0,
        best: None,
    };
    let initial_margin = nelder_mead(&mut obj, start, spec.initial_step, spec.shrink, spec.iterations);
    RestartOutcome {
        trace: RestartTrace {
            restart,
            initial_margin,
            best_margin: obj.best.as_ref().map(|(v, _)| *v),
            evaluations: obj.evaluations,
        },
        best: obj.best,
    }
}

/// Runs the restarts and returns the lowest margin seen across all of them.
pub fn minimize_margin(spec: &SearchSpec) -> Result<SearchResult> {
    spec.validate()?;
    let restarts: Vec<usize> = (0..spec.restarts).collect();
    #[cfg(feature = "parallel")]
    let outcomes: Vec<RestartOutcome> = {
        use rayon::prelude::*;
        restarts.par_iter().map(|&r| run_restart(spec, r)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<RestartOutcome> = restarts.iter().map(|&r| run_restart(spec, r)).collect();

    let evaluations = outcomes.iter().map(|o| o.trace.evaluations).sum();
    let mut incumbent: Option<(f64, usize, &[f64])> = None;
    for o in &outcomes {
        if let Some((v, p)) = &o.best {
            if incumbent.is_none_or(|(b, _, _)| *v < b) {
                incumbent = Some((*v, o.trace.restart, p));
            }
        }
    }
    let Some((best_margin, best_restart, params)) = incumbent else {
        return Err(Error::Search(format!(
            "no feasible candidate in {evaluations} evaluations: every state had a singular Gram matrix or the statement could not be evaluated"
        )));
    };
    let candidate = spec.decode(params)?;
    let best_row = verify_statement(spec.statement, &candidate.a, &candidate.b, &candidate.state, &spec.tolerances)?;
    let provenance = Provenance {
        seed: Some(spec.seed),
        index: Some(best_restart as u64),
        source: Some(format!("explore {}", spec.statement)),
    };
    let mut best_instance =
        InstanceFile::from_parts(&candidate.a, &candidate.b, candidate.state.vector(), true, Some(provenance));
    best_instance.tolerances = Some(spec.tolerances);
    let counterexample = (best_margin < -spec.tolerances.verdict).then(|| best_instance.clone());
    Ok(SearchResult {
        spec: spec.into(),
        best_margin,
        best_restart,
        best_instance,
        best_row,
        restarts: outcomes.into_iter().map(|o| o.trace).collect(),
        evaluations,
        counterexample,
    })
}
