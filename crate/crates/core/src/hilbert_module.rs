//! The free left Hilbert module `E = A^n`.
//!
//! Convention: the inner product is A-linear in the **first** slot,
//! `⟨x, y⟩ = Σ_i x_i · y_i*`, so that `⟨a·x, y⟩ = a·⟨x, y⟩`. Physics texts
//! usually take the opposite slot; keep this in mind when porting formulas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, AlgebraSignature, LoewnerVerdict, C64};
use crate::error::{Error, Result};

const RANDOM_STATE_ATTEMPTS: usize = 5;

/// Element `x = (x_1, …, x_n)` of `A^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleElement {
    signature: AlgebraSignature,
    entries: Vec<AlgebraElement>,
}

impl ModuleElement {
    pub fn new(signature: AlgebraSignature, entries: Vec<AlgebraElement>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::ShapeMismatch("module rank must be at least 1".into()));
        }
        if let Some(bad) = entries.iter().find(|e| *e.signature() != signature) {
            return Err(Error::SignatureMismatch {
                left: signature,
                right: bad.signature().clone(),
            });
        }
        Ok(Self { signature, entries })
    }

    pub fn zero(signature: &AlgebraSignature, rank: usize) -> Self {
        Self {
            signature: signature.clone(),
            entries: vec![AlgebraElement::zero(signature); rank.max(1)],
        }
    }

    /// `e_i`: the unit in slot `i`, zero elsewhere.
    pub fn basis(signature: &AlgebraSignature, rank: usize, i: usize) -> Self {
        let mut x = Self::zero(signature, rank);
        x.entries[i] = AlgebraElement::unit(signature);
        x
    }

    pub fn random_gaussian<R: Rng + ?Sized>(
        signature: &AlgebraSignature,
        rank: usize,
        rng: &mut R,
    ) -> Self {
        let entries = (0..rank.max(1))
            .map(|_| AlgebraElement::random_gaussian(signature, rng, 1.0))
            .collect();
        Self {
            signature: signature.clone(),
            entries,
        }
    }

    pub fn from_real_parameters(
        signature: &AlgebraSignature,
        rank: usize,
        params: &[f64],
    ) -> Result<Self> {
        let per = signature.real_dimension();
        if params.len() != per * rank {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                per * rank,
                params.len()
            )));
        }
        let entries = params
            .chunks_exact(per)
            .map(|chunk| AlgebraElement::from_real_parameters(signature, chunk))
            .collect::<Result<Vec<_>>>()?;
        Self::new(signature.clone(), entries)
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[AlgebraElement] {
        &self.entries
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch {
                left: self.signature.clone(),
                right: other.signature.clone(),
            });
        }
        if self.rank() != other.rank() {
            return Err(Error::ShapeMismatch(format!(
                "module ranks differ: {} vs {}",
                self.rank(),
                other.rank()
            )));
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&AlgebraElement, &AlgebraElement) -> AlgebraElement,
    ) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self {
            signature: self.signature.clone(),
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Left module action `a·x = (a x_1, …, a x_n)`.
    pub fn left_mul(&self, a: &AlgebraElement) -> Result<Self> {
        if *a.signature() != self.signature {
            return Err(Error::SignatureMismatch {
                left: a.signature().clone(),
                right: self.signature.clone(),
            });
        }
        Ok(Self {
            signature: self.signature.clone(),
            entries: self.entries.iter().map(|e| a * e).collect(),
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            signature: self.signature.clone(),
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(AlgebraElement::max_abs_entry).fold(0.0, f64::max)
    }
}

/// `⟨x, y⟩ = Σ_i x_i · y_i*`.
pub fn inner_product(x: &ModuleElement, y: &ModuleElement) -> Result<AlgebraElement> {
    x.check_shape(y)?;
    let mut acc = AlgebraElement::zero(&x.signature);
    for (xi, yi) in x.entries.iter().zip(&y.entries) {
        acc = &acc + &(xi * &yi.adjoint());
    }
    Ok(acc)
}

/// `‖x‖ = √‖⟨x, x⟩‖`.
pub fn module_norm(x: &ModuleElement) -> f64 {
    inner_product(x, x)
        .map(|g| g.operator_norm().sqrt())
        .unwrap_or(0.0)
}

/// A module element with `⟨x, x⟩ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    vector: ModuleElement,
}

impl State {
    /// Accepts `vector` as-is when `‖⟨x,x⟩ − 1‖ ≤ tol`.
    pub fn from_normalized(vector: ModuleElement, tol: f64) -> Result<Self> {
        let gram = inner_product(&vector, &vector)?;
        let defect = gram.distance(&AlgebraElement::unit(vector.signature()))?;
        if !(defect <= tol) {
            return Err(Error::NotNormalized {
                defect,
                threshold: tol,
            });
        }
        Ok(Self { vector })
    }

    pub fn vector(&self) -> &ModuleElement {
        &self.vector
    }

    pub fn into_vector(self) -> ModuleElement {
        self.vector
    }

    pub fn signature(&self) -> &AlgebraSignature {
        self.vector.signature()
    }

    pub fn rank(&self) -> usize {
        self.vector.rank()
    }

    /// Deterministic random state: Gaussian entries, normalized, retried on singular Gram.
    pub fn random<R: Rng + ?Sized>(
        signature: &AlgebraSignature,
        rank: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut last = None;
        for _ in 0..RANDOM_STATE_ATTEMPTS {
            let x = ModuleElement::random_gaussian(signature, rank, rng);
            match normalize(&x) {
                Ok(state) => return Ok(state),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap())
    }

    pub fn random_seeded(signature: &AlgebraSignature, rank: usize, seed: u64) -> Result<Self> {
        Self::random(signature, rank, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// `x' = ⟨x,x⟩^{-1/2} · x`. Refuses singular Gram elements.
pub fn normalize(x: &ModuleElement) -> Result<State> {
    let gram = inner_product(x, x)?;
    if gram.operator_norm() == 0.0 {
        return Err(Error::NotNormalizable("⟨x,x⟩ = 0".into()));
    }
    if let Some((block, sigma_min, _)) = gram.singular_block() {
        return Err(Error::NotNormalizable(format!(
            "⟨x,x⟩ is singular in block {block} (smallest singular value {sigma_min:.3e})"
        )));
    }
    let root = gram
        .positive_sqrt(crate::tolerance::HERMITICITY_TOL)
        .map_err(|e| Error::NotNormalizable(e.to_string()))?;
    let inv_root = root.inverse().map_err(|e| Error::NotNormalizable(e.to_string()))?;
    Ok(State {
        vector: x.left_mul(&inv_root)?,
    })
}

/// `⟨x,y⟩⟨y,x⟩ ≤ ‖⟨y,y⟩‖ ⟨x,x⟩`.
pub fn check_cauchy_schwarz(x: &ModuleElement, y: &ModuleElement, tol: f64) -> Result<LoewnerVerdict> {
    let xy = inner_product(x, y)?;
    let yx = inner_product(y, x)?;
    let lhs = &xy * &yx;
    let rhs = inner_product(x, x)?.scale_real(inner_product(y, y)?.operator_norm());
    lhs.loewner_leq(&rhs, tol)
}

/// Worst relative violation of each inner-product axiom over a seeded sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub signature: AlgebraSignature,
    pub rank: usize,
    pub samples: usize,
    pub seed: u64,
    /// `max(0, −λ_min⟨x,x⟩) / scale`.
    pub positivity: f64,
    /// Zero is the only element with vanishing Gram; probed on shrinking states.
    pub definiteness: bool,
    /// `‖⟨x+y,z⟩ − ⟨x,z⟩ − ⟨y,z⟩‖ / scale`.
    pub additivity: f64,
    /// `‖⟨a·x,y⟩ − a⟨x,y⟩‖ / scale`.
    pub left_linearity: f64,
    /// `‖⟨x,y⟩ − ⟨y,x⟩*‖ / scale`.
    pub conjugate_symmetry: f64,
    /// Most negative relative Cauchy–Schwarz margin, `margin / scale`.
    pub cauchy_schwarz_min_margin: f64,
    /// Largest `‖[⟨x,y⟩, ⟨u,v⟩]‖` among sampled inner products; only on commutative signatures.
    pub commutativity_defect: Option<f64>,
}

impl AxiomReport {
    pub fn passes(&self, axiom_tol: f64, cs_tol: f64) -> bool {
        self.definiteness
            && self.positivity <= axiom_tol
            && self.additivity <= axiom_tol
            && self.left_linearity <= axiom_tol
            && self.conjugate_symmetry <= axiom_tol
            && self.cauchy_schwarz_min_margin >= -cs_tol
            && self.commutativity_defect.is_none_or(|d| d <= axiom_tol)
    }
}

fn relative(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1.0)
}

/// Evaluates axioms (i)–(iv) and Cauchy–Schwarz on `sample_count` seeded triples.
pub fn check_module_axioms(
    signature: &AlgebraSignature,
    rank: usize,
    sample_count: usize,
    seed: u64,
) -> AxiomReport {
    let mut report = AxiomReport {
        signature: signature.clone(),
        rank,
        samples: sample_count,
        seed,
        positivity: 0.0,
        definiteness: true,
        additivity: 0.0,
        left_linearity: 0.0,
        conjugate_symmetry: 0.0,
        cauchy_schwarz_min_margin: f64::INFINITY,
        commutativity_defect: signature.is_commutative().then_some(0.0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = ModuleElement::zero(signature, rank);
    if inner_product(&zero, &zero).unwrap().max_abs_entry() != 0.0 {
        report.definiteness = false;
    }

    for _ in 0..sample_count {
        let x = ModuleElement::random_gaussian(signature, rank, &mut rng);
        let y = ModuleElement::random_gaussian(signature, rank, &mut rng);
        let z = ModuleElement::random_gaussian(signature, rank, &mut rng);
        let a = AlgebraElement::random_gaussian(signature, &mut rng, 1.0);

        let xx = inner_product(&x, &x).unwrap();
        let xy = inner_product(&x, &y).unwrap();
        let yx = inner_product(&y, &x).unwrap();
        let xz = inner_product(&x, &z).unwrap();
        let yz = inner_product(&y, &z).unwrap();

        let xx_scale = xx.operator_norm();
        let lambda = xx.min_eigenvalue().unwrap_or(f64::NEG_INFINITY);
        report.positivity = report.positivity.max(relative((-lambda).max(0.0), xx_scale));

        let sum_z = inner_product(&x.try_add(&y).unwrap(), &z).unwrap();
        let split = &xz + &yz;
        let add_scale = xz.operator_norm() + yz.operator_norm();
        report.additivity = report
            .additivity
            .max(relative(sum_z.distance(&split).unwrap(), add_scale));

        let ax_y = inner_product(&x.left_mul(&a).unwrap(), &y).unwrap();
        let a_xy = &a * &xy;
        let lin_scale = a.operator_norm() * xy.operator_norm().max(module_norm(&x) * module_norm(&y));
        report.left_linearity = report
            .left_linearity
            .max(relative(ax_y.distance(&a_xy).unwrap(), lin_scale));

        report.conjugate_symmetry = report
            .conjugate_symmetry
            .max(relative(xy.distance(&yx.adjoint()).unwrap(), xy.operator_norm()));

        let cs = check_cauchy_schwarz(&x, &y, 0.0).unwrap();
        report.cauchy_schwarz_min_margin = report.cauchy_schwarz_min_margin.min(cs.margin / cs.scale);

        // Definiteness probe: a nonzero element, however small, has nonzero Gram.
        let tiny = x.scale(C64::new(1e-150, 0.0));
        if inner_product(&tiny, &tiny).unwrap().max_abs_entry() == 0.0 && tiny.max_abs_entry() != 0.0 {
            report.definiteness = false;
        }

        if let Some(defect) = report.commutativity_defect.as_mut() {
            let c = xy.commutator(&yz).unwrap().operator_norm();
            *defect = defect.max(relative(c, xy.operator_norm() * yz.operator_norm()));
        }
    }
    if sample_count == 0 {
        report.cauchy_schwarz_min_margin = 0.0;
    }
    report
}
