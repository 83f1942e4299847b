//! Adjointable A-linear maps on `A^n`, stored as dense `n×n` cell arrays.
//!
//! The action is `T(x)_i = Σ_j x_j · M_ij`: each coordinate is multiplied by
//! its cell on the right, which makes `T(a·x) = a·T(x)` hold by construction.
//! For the scalar algebra this is ordinary matrix-vector multiplication.
//!
//! Composition follows function order, `(S∘T)(x) = S(T(x))`, giving the cell
//! formula `(S∘T)_ij = Σ_k T_kj · S_ik`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraElement, AlgebraSignature, C64};
use crate::error::{Error, Result};
use crate::hilbert_module::ModuleElement;
use crate::tolerance::HERMITICITY_TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct Morphism {
    signature: AlgebraSignature,
    rank: usize,
    /// Row-major `n×n`.
    cells: Vec<AlgebraElement>,
}

impl Morphism {
    pub fn from_cells(signature: AlgebraSignature, cells: Vec<Vec<AlgebraElement>>) -> Result<Self> {
        let rank = cells.len();
        if rank == 0 {
            return Err(Error::ShapeMismatch("morphism rank must be at least 1".into()));
        }
        if let Some(i) = cells.iter().position(|row| row.len() != rank) {
            return Err(Error::ShapeMismatch(format!(
                "morphism row {i} has {} cells, expected {rank}",
                cells[i].len()
            )));
        }
        let cells: Vec<AlgebraElement> = cells.into_iter().flatten().collect();
        if let Some(bad) = cells.iter().find(|c| *c.signature() != signature) {
            return Err(Error::SignatureMismatch {
                left: signature,
                right: bad.signature().clone(),
            });
        }
        Ok(Self {
            signature,
            rank,
            cells,
        })
    }

    fn from_fn(
        signature: &AlgebraSignature,
        rank: usize,
        mut f: impl FnMut(usize, usize) -> AlgebraElement,
    ) -> Self {
        let cells = (0..rank * rank).map(|k| f(k / rank, k % rank)).collect();
        Self {
            signature: signature.clone(),
            rank,
            cells,
        }
    }

    /// `c · id` with a real scalar `c`.
    pub fn scalar_identity(signature: &AlgebraSignature, rank: usize, c: f64) -> Self {
        Self::from_fn(signature, rank, |i, j| {
            if i == j {
                AlgebraElement::scalar(signature, C64::new(c, 0.0))
            } else {
                AlgebraElement::zero(signature)
            }
        })
    }

    pub fn identity(signature: &AlgebraSignature, rank: usize) -> Self {
        Self::scalar_identity(signature, rank, 1.0)
    }

    pub fn zero(signature: &AlgebraSignature, rank: usize) -> Self {
        Self::scalar_identity(signature, rank, 0.0)
    }

    /// Diagonal morphism with the given cells on the diagonal.
    pub fn diagonal(diag: Vec<AlgebraElement>) -> Result<Self> {
        let signature = diag
            .first()
            .map(|d| d.signature().clone())
            .ok_or_else(|| Error::ShapeMismatch("empty diagonal".into()))?;
        let rank = diag.len();
        let cells = (0..rank)
            .map(|i| {
                (0..rank)
                    .map(|j| if i == j { diag[i].clone() } else { AlgebraElement::zero(&signature) })
                    .collect()
            })
            .collect();
        Self::from_cells(signature, cells)
    }

    /// A scalar `n×n` complex matrix acting on `C^n` (signature `[1]`).
    pub fn from_scalar_matrix(rows: &[&[C64]]) -> Result<Self> {
        let signature = AlgebraSignature::scalar();
        let cells = rows
            .iter()
            .map(|row| row.iter().map(|&z| AlgebraElement::scalar(&signature, z)).collect())
            .collect();
        Self::from_cells(signature, cells)
    }

    /// Gaussian cells symmetrized to `(M + M†)/2`, then multiplied by `scale`.
    pub fn random_selfadjoint_with<R: Rng + ?Sized>(
        signature: &AlgebraSignature,
        rank: usize,
        rng: &mut R,
        scale: f64,
    ) -> Self {
        let raw = Self::from_fn(signature, rank, |_, _| {
            AlgebraElement::random_gaussian(signature, rng, scale)
        });
        raw.symmetrized()
    }

    pub fn random_selfadjoint(signature: &AlgebraSignature, rank: usize, seed: u64, scale: f64) -> Self {
        Self::random_selfadjoint_with(signature, rank, &mut ChaCha8Rng::seed_from_u64(seed), scale)
    }

    /// Morphism built from `rank² · signature.real_dimension()` reals, then symmetrized.
    pub fn selfadjoint_from_real_parameters(
        signature: &AlgebraSignature,
        rank: usize,
        params: &[f64],
    ) -> Result<Self> {
        let per = signature.real_dimension();
        if params.len() != per * rank * rank {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                per * rank * rank,
                params.len()
            )));
        }
        let cells = params
            .chunks_exact(per)
            .map(|chunk| AlgebraElement::from_real_parameters(signature, chunk))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            signature: signature.clone(),
            rank,
            cells,
        }
        .symmetrized())
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cell(&self, i: usize, j: usize) -> &AlgebraElement {
        &self.cells[i * self.rank + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[AlgebraElement]> {
        self.cells.chunks(self.rank)
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch {
                left: self.signature.clone(),
                right: other.signature.clone(),
            });
        }
        if self.rank != other.rank {
            return Err(Error::ShapeMismatch(format!(
                "morphism ranks differ: {} vs {}",
                self.rank, other.rank
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &ModuleElement) -> Result<ModuleElement> {
        if *x.signature() != self.signature {
            return Err(Error::SignatureMismatch {
                left: self.signature.clone(),
                right: x.signature().clone(),
            });
        }
        if x.rank() != self.rank {
            return Err(Error::ShapeMismatch(format!(
                "morphism of rank {} applied to element of rank {}",
                self.rank,
                x.rank()
            )));
        }
        let entries = (0..self.rank)
            .map(|i| {
                x.entries()
                    .iter()
                    .enumerate()
                    .fold(AlgebraElement::zero(&self.signature), |acc, (j, xj)| {
                        &acc + &(xj * self.cell(i, j))
                    })
            })
            .collect();
        ModuleElement::new(self.signature.clone(), entries)
    }

    /// `(M†)_ij = (M_ji)*`.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(&self.signature, self.rank, |i, j| self.cell(j, i).adjoint())
    }

    fn symmetrized(&self) -> Self {
        let adj = self.adjoint();
        Self::from_fn(&self.signature, self.rank, |i, j| {
            (self.cell(i, j) + adj.cell(i, j)).scale_real(0.5)
        })
    }

    /// Largest cell norm, used as the reference scale for tolerance checks.
    pub fn max_cell_norm(&self) -> f64 {
        self.cells.iter().map(AlgebraElement::operator_norm).fold(0.0, f64::max)
    }

    /// `max_ij ‖M_ij − (M†)_ij‖`.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.adjoint();
        self.cells
            .iter()
            .zip(&adj.cells)
            .map(|(a, b)| (a - b).operator_norm())
            .fold(0.0, f64::max)
    }

    pub fn ensure_selfadjoint(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        let threshold = HERMITICITY_TOL * self.max_cell_norm().max(1.0);
        if defect > threshold {
            return Err(Error::NotSelfAdjoint { defect, threshold });
        }
        Ok(())
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.ensure_selfadjoint().is_ok()
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&AlgebraElement, &AlgebraElement) -> AlgebraElement,
    ) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self {
            signature: self.signature.clone(),
            rank: self.rank,
            cells: self.cells.iter().zip(&other.cells).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            signature: self.signature.clone(),
            rank: self.rank,
            cells: self.cells.iter().map(|m| m.scale_real(c)).collect(),
        }
    }

    /// `S∘T`, i.e. `x ↦ S(T(x))`.
    pub fn compose(s: &Self, t: &Self) -> Result<Self> {
        s.check_shape(t)?;
        let n = s.rank;
        Ok(Self::from_fn(&s.signature, n, |i, j| {
            (0..n).fold(AlgebraElement::zero(&s.signature), |acc, k| {
                &acc + &(t.cell(k, j) * s.cell(i, k))
            })
        }))
    }

    /// `[S, T] = S∘T − T∘S`.
    pub fn commutator(s: &Self, t: &Self) -> Result<Self> {
        Self::compose(s, t)?.try_sub(&Self::compose(t, s)?)
    }

    /// `{S, T} = S∘T + T∘S`.
    pub fn anticommutator(s: &Self, t: &Self) -> Result<Self> {
        Self::compose(s, t)?.try_add(&Self::compose(t, s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, I, ONE, ZERO};
    use crate::hilbert_module::inner_product;

    fn sig(d: &[usize]) -> AlgebraSignature {
        AlgebraSignature::new(d.to_vec()).unwrap()
    }

    fn close(a: &ModuleElement, b: &ModuleElement, tol: f64) -> bool {
        a.try_sub(b).unwrap().max_abs_entry() <= tol
    }

    #[test]
    fn apply_examples() {
        let s = sig(&[2, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = ModuleElement::random_gaussian(&s, 3, &mut rng);
        assert_eq!(Morphism::identity(&s, 3).apply(&x).unwrap(), x);

        let t = Morphism::diagonal(vec![pauli::x()]).unwrap();
        let one = ModuleElement::basis(pauli::x().signature(), 1, 0);
        assert_eq!(t.apply(&one).unwrap().entries()[0], pauli::x());

        let t = Morphism::random_selfadjoint_with(&s, 3, &mut rng, 1.0);
        let a = AlgebraElement::random_gaussian(&s, &mut rng, 1.0);
        let lhs = t.apply(&x.left_mul(&a).unwrap()).unwrap();
        let rhs = t.apply(&x).unwrap().left_mul(&a).unwrap();
        assert!(close(&lhs, &rhs, 1e-12 * lhs.max_abs_entry().max(1.0)));
    }

    #[test]
    fn scalar_action_is_matrix_vector() {
        // σ_y (1, 0)ᵀ = (0, i)ᵀ
        let y = Morphism::from_scalar_matrix(&[&[ZERO, -I], &[I, ZERO]]).unwrap();
        let e0 = ModuleElement::basis(&AlgebraSignature::scalar(), 2, 0);
        let out = y.apply(&e0).unwrap();
        assert_eq!(out.entries()[0].blocks()[0][(0, 0)], ZERO);
        assert_eq!(out.entries()[1].blocks()[0][(0, 0)], I);
    }

    #[test]
    fn apply_rejects_mismatch() {
        let t = Morphism::identity(&sig(&[2]), 2);
        assert!(t.apply(&ModuleElement::zero(&sig(&[2]), 3)).is_err());
        assert!(t.apply(&ModuleElement::zero(&sig(&[1]), 2)).is_err());
        assert!(Morphism::compose(&t, &Morphism::identity(&sig(&[2]), 3)).is_err());
    }

    #[test]
    fn adjoint_identity_holds() {
        let s = sig(&[2, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let raw_cells = (0..2)
                .map(|_| (0..2).map(|_| AlgebraElement::random_gaussian(&s, &mut rng, 1.0)).collect())
                .collect();
            let t = Morphism::from_cells(s.clone(), raw_cells).unwrap();
            let x = ModuleElement::random_gaussian(&s, 2, &mut rng);
            let y = ModuleElement::random_gaussian(&s, 2, &mut rng);
            let lhs = inner_product(&t.apply(&x).unwrap(), &y).unwrap();
            let rhs = inner_product(&x, &t.adjoint().apply(&y).unwrap()).unwrap();
            assert!(lhs.distance(&rhs).unwrap() <= 1e-12 * lhs.operator_norm().max(1.0));
            assert_eq!(t.adjoint().adjoint(), t);
        }
    }

    #[test]
    fn selfadjointness() {
        let t = Morphism::diagonal(vec![pauli::x(), pauli::z()]).unwrap();
        assert!(t.is_selfadjoint());
        let n = Morphism::from_scalar_matrix(&[&[ZERO, ONE], &[ZERO, ZERO]]).unwrap();
        assert!(!n.is_selfadjoint());
        assert!(matches!(n.ensure_selfadjoint(), Err(Error::NotSelfAdjoint { .. })));
    }

    #[test]
    fn composition_matches_nested_apply() {
        let s = sig(&[2, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let a = Morphism::random_selfadjoint_with(&s, 3, &mut rng, 1.0);
            let b = Morphism::random_selfadjoint_with(&s, 3, &mut rng, 1.0);
            let x = ModuleElement::random_gaussian(&s, 3, &mut rng);
            let ab_x = Morphism::compose(&a, &b).unwrap().apply(&x).unwrap();
            let nested = a.apply(&b.apply(&x).unwrap()).unwrap();
            assert!(close(&ab_x, &nested, 1e-12 * nested.max_abs_entry()));

            let comm = Morphism::commutator(&a, &b).unwrap().apply(&x).unwrap();
            let expected = nested.try_sub(&b.apply(&a.apply(&x).unwrap()).unwrap()).unwrap();
            assert!(close(&comm, &expected, 1e-12 * nested.max_abs_entry()));
        }
    }

    #[test]
    fn commutator_examples() {
        let s = sig(&[2]);
        let t = Morphism::random_selfadjoint(&s, 2, 3, 1.0);
        let c = Morphism::commutator(&t, &t).unwrap();
        assert!(c.max_cell_norm() == 0.0);

        let s1 = AlgebraSignature::scalar();
        let p = Morphism::from_scalar_matrix(&[&[C64::new(2.0, 1.0)]]).unwrap();
        let q = Morphism::from_scalar_matrix(&[&[C64::new(0.0, 3.0)]]).unwrap();
        let pq = Morphism::compose(&p, &q).unwrap();
        assert_eq!(pq.cell(0, 0), &AlgebraElement::scalar(&s1, C64::new(-3.0, 6.0)));
    }

    #[test]
    fn brackets_of_selfadjoint_pair() {
        let s = sig(&[2]);
        let a = Morphism::random_selfadjoint(&s, 2, 1, 1.0);
        let b = Morphism::random_selfadjoint(&s, 2, 2, 1.0);
        let comm = Morphism::commutator(&a, &b).unwrap();
        let anti = Morphism::anticommutator(&a, &b).unwrap();
        assert!(comm.adjoint().try_add(&comm).unwrap().max_cell_norm() <= 1e-12);
        assert!(anti.adjoint().try_sub(&anti).unwrap().max_cell_norm() <= 1e-12);
    }

    #[test]
    fn random_selfadjoint_contract() {
        let s = sig(&[2, 1]);
        for seed in 0..10 {
            assert!(Morphism::random_selfadjoint(&s, 3, seed, 1.0).is_selfadjoint());
        }
        assert_eq!(
            Morphism::random_selfadjoint(&s, 2, 7, 1.0),
            Morphism::random_selfadjoint(&s, 2, 7, 1.0)
        );
        assert_eq!(Morphism::random_selfadjoint(&s, 2, 7, 0.0).max_cell_norm(), 0.0);
    }
}
