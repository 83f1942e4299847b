//! Finite-dimensional C*-algebras `A = M_{d_1}(C) ⊕ … ⊕ M_{d_m}(C)`.
//!
//! Elements are stored as a list of dense complex square blocks. Every
//! spectral quantity (norms, minimum eigenvalues, square roots, singular
//! values) goes through one Hermitian eigendecomposition routine,
//! [`hermitian_eigen`], applied to the symmetrized block `(b + b*)/2`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::{HERMITICITY_TOL, SINGULARITY_TOL};

pub type C64 = Complex<f64>;
pub type Block = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Block dimensions `(d_1, …, d_m)` of the algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct AlgebraSignature(Vec<usize>);

impl AlgebraSignature {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidSignature("signature must have at least one block".into()));
        }
        if let Some(pos) = block_dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidSignature(format!("block {pos} has dimension 0")));
        }
        Ok(Self(block_dims))
    }

    /// The scalar algebra `C`.
    pub fn scalar() -> Self {
        Self(vec![1])
    }

    /// Parses a comma-separated list such as `2,1`.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let dims = text
            .split(',')
            .map(|part| {
                part.trim().parse::<usize>().map_err(|_| {
                    Error::InvalidSignature(format!("cannot parse block dimension {part:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.0
    }

    pub fn block_count(&self) -> usize {
        self.0.len()
    }

    /// All blocks are 1×1, i.e. the algebra is `C^m`.
    pub fn is_commutative(&self) -> bool {
        self.0.iter().all(|&d| d == 1)
    }

    pub fn is_scalar(&self) -> bool {
        self.0 == [1]
    }

    /// Number of real parameters of a general (not necessarily self-adjoint) element.
    pub fn real_dimension(&self) -> usize {
        2 * self.0.iter().map(|d| d * d).sum::<usize>()
    }
}

impl TryFrom<Vec<usize>> for AlgebraSignature {
    type Error = Error;

    fn try_from(value: Vec<usize>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<AlgebraSignature> for Vec<usize> {
    fn from(value: AlgebraSignature) -> Self {
        value.0
    }
}

impl fmt::Display for AlgebraSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// Eigenvalues (ascending) and unitary eigenvectors of the Hermitian part of `block`.
pub fn hermitian_eigen(block: &Block) -> (Vec<f64>, Block) {
    let sym = (block + block.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = block.nrows();
    let vectors = Block::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn block_norm(block: &Block) -> f64 {
    let gram = block.adjoint() * block;
    let (values, _) = hermitian_eigen(&gram);
    values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

fn block_is_hermitian(block: &Block) -> bool {
    let defect = block_norm(&(block - block.adjoint()));
    defect <= HERMITICITY_TOL * block_norm(block).max(1.0)
}

/// Singular values of one block, ascending.
fn block_singular_values(block: &Block) -> Vec<f64> {
    if block_is_hermitian(block) {
        let (values, _) = hermitian_eigen(block);
        let mut sv: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        sv.sort_by(f64::total_cmp);
        sv
    } else {
        let (values, _) = hermitian_eigen(&(block.adjoint() * block));
        values.iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

/// Outcome of a Löwner comparison `a ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoewnerVerdict {
    pub holds: bool,
    /// `min_eigenvalue(b − a)`.
    pub margin: f64,
    /// `max(1, ‖a‖, ‖b‖)`.
    pub scale: f64,
}

/// Element of `⊕_s M_{d_s}(C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    signature: AlgebraSignature,
    blocks: Vec<Block>,
}

impl AlgebraElement {
    pub fn from_blocks(signature: AlgebraSignature, blocks: Vec<Block>) -> Result<Self> {
        if blocks.len() != signature.block_count() {
            return Err(Error::ShapeMismatch(format!(
                "signature {signature} has {} blocks, got {}",
                signature.block_count(),
                blocks.len()
            )));
        }
        for (s, (block, &d)) in blocks.iter().zip(signature.block_dims()).enumerate() {
            if block.nrows() != d || block.ncols() != d {
                return Err(Error::ShapeMismatch(format!(
                    "block {s} should be {d}×{d}, got {}×{}",
                    block.nrows(),
                    block.ncols()
                )));
            }
        }
        Ok(Self { signature, blocks })
    }

    pub fn zero(signature: &AlgebraSignature) -> Self {
        Self::scalar(signature, ZERO)
    }

    pub fn unit(signature: &AlgebraSignature) -> Self {
        Self::scalar(signature, ONE)
    }

    /// `c · 1`.
    pub fn scalar(signature: &AlgebraSignature, c: C64) -> Self {
        let blocks = signature
            .block_dims()
            .iter()
            .map(|&d| Block::from_diagonal_element(d, d, c))
            .collect();
        Self {
            signature: signature.clone(),
            blocks,
        }
    }

    /// Single-block element from row-major entries.
    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let d = rows.len();
        let signature = AlgebraSignature::new(vec![d])?;
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch("rows must form a square matrix".into()));
        }
        let block = Block::from_fn(d, d, |r, c| rows[r][c]);
        Self::from_blocks(signature, vec![block])
    }

    /// Block-diagonal element whose blocks are all diagonal with the given real entries.
    pub fn diagonal(signature: &AlgebraSignature, diag: &[f64]) -> Result<Self> {
        let total: usize = signature.block_dims().iter().sum();
        if diag.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "signature {signature} needs {total} diagonal entries, got {}",
                diag.len()
            )));
        }
        let mut offset = 0;
        let blocks = signature
            .block_dims()
            .iter()
            .map(|&d| {
                let b = Block::from_fn(d, d, |r, c| {
                    if r == c {
                        C64::new(diag[offset + r], 0.0)
                    } else {
                        ZERO
                    }
                });
                offset += d;
                b
            })
            .collect();
        Ok(Self {
            signature: signature.clone(),
            blocks,
        })
    }

    /// Entries with independent standard normal real and imaginary parts, times `scale`.
    pub fn random_gaussian<R: Rng + ?Sized>(
        signature: &AlgebraSignature,
        rng: &mut R,
        scale: f64,
    ) -> Self {
        let blocks = signature
            .block_dims()
            .iter()
            .map(|&d| {
                Block::from_fn(d, d, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re * scale, im * scale)
                })
            })
            .collect();
        Self {
            signature: signature.clone(),
            blocks,
        }
    }

    /// Builds an element from `signature.real_dimension()` reals laid out
    /// block by block, row-major, as `(re, im)` pairs.
    pub fn from_real_parameters(signature: &AlgebraSignature, params: &[f64]) -> Result<Self> {
        if params.len() != signature.real_dimension() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                signature.real_dimension(),
                params.len()
            )));
        }
        let mut it = params.chunks_exact(2);
        let blocks = signature
            .block_dims()
            .iter()
            .map(|&d| {
                let entries: Vec<C64> =
                    (0..d * d).map(|_| it.next().map(|p| C64::new(p[0], p[1])).unwrap()).collect();
                Block::from_row_slice(d, d, &entries)
            })
            .collect();
        Ok(Self {
            signature: signature.clone(),
            blocks,
        })
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    fn check_signature(&self, other: &Self) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch {
                left: self.signature.clone(),
                right: other.signature.clone(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Block, &Block) -> Block) -> Result<Self> {
        self.check_signature(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        Ok(Self {
            signature: self.signature.clone(),
            blocks,
        })
    }

    fn map_blocks(&self, f: impl Fn(&Block) -> Block) -> Self {
        Self {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_blocks(|b| b.map(|z| z * c))
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.map_blocks(|b| b.map(|z| z * c))
    }

    /// Blockwise conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.map_blocks(|b| b.adjoint())
    }

    /// `ab − ba`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b - b * a)
    }

    /// `ab + ba`.
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b + b * a)
    }

    /// `(a + a*)/2`.
    pub fn real_part(&self) -> Self {
        self.map_blocks(|b| (b + b.adjoint()).map(|z| z * 0.5))
    }

    /// `(a − a*)/(2i)`.
    pub fn imaginary_part(&self) -> Self {
        self.map_blocks(|b| (b - b.adjoint()).map(|z| z / C64::new(0.0, 2.0)))
    }

    /// C*-norm: the largest singular value over all blocks.
    pub fn operator_norm(&self) -> f64 {
        self.blocks.iter().map(block_norm).fold(0.0, f64::max)
    }

    /// `‖a − b‖`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.try_sub(other)?.operator_norm())
    }

    /// `‖a − a*‖`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| block_norm(&(b - b.adjoint())))
            .fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.ensure_self_adjoint().is_ok()
    }

    pub fn ensure_self_adjoint(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        let threshold = HERMITICITY_TOL * self.operator_norm().max(1.0);
        if defect > threshold {
            return Err(Error::NotSelfAdjoint { defect, threshold });
        }
        Ok(())
    }

    /// Ascending spectrum of the symmetrized element, one list per block.
    pub fn spectrum(&self) -> Result<Vec<Vec<f64>>> {
        self.ensure_self_adjoint()?;
        Ok(self.blocks.iter().map(|b| hermitian_eigen(b).0).collect())
    }

    fn min_eigenvalue_unchecked(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| hermitian_eigen(b).0[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest eigenvalue over all blocks of `(a + a*)/2`.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.ensure_self_adjoint()?;
        Ok(self.min_eigenvalue_unchecked())
    }

    /// Tests `self ≤ other` in the Löwner order with relative slack `tol`.
    pub fn loewner_leq(&self, other: &Self, tol: f64) -> Result<LoewnerVerdict> {
        self.check_signature(other)?;
        self.ensure_self_adjoint()?;
        other.ensure_self_adjoint()?;
        // b − a inherits self-adjointness from the checked inputs; its own
        // relative defect may be large after cancellation, so skip the check.
        let margin = other.try_sub(self)?.min_eigenvalue_unchecked();
        let scale = 1.0_f64.max(self.operator_norm()).max(other.operator_norm());
        Ok(LoewnerVerdict {
            holds: margin >= -tol * scale,
            margin,
            scale,
        })
    }

    /// Positive square root, clipping eigenvalues in `[−tol·scale, 0)` to zero.
    pub fn positive_sqrt(&self, tol: f64) -> Result<Self> {
        self.ensure_self_adjoint()?;
        let threshold = tol * self.operator_norm().max(1.0);
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (s, b) in self.blocks.iter().enumerate() {
            let (values, vectors) = hermitian_eigen(b);
            if values[0] < -threshold {
                return Err(Error::NotPositive {
                    block: s,
                    eigenvalue: values[0],
                    threshold,
                });
            }
            let roots: Vec<C64> = values.iter().map(|&v| C64::new(v.max(0.0).sqrt(), 0.0)).collect();
            let d = Block::from_diagonal(&nalgebra::DVector::from_vec(roots));
            blocks.push(&vectors * d * vectors.adjoint());
        }
        Ok(Self {
            signature: self.signature.clone(),
            blocks,
        })
    }

    /// First block whose smallest singular value is at or below `1e-12·‖a‖`.
    pub fn singular_block(&self) -> Option<(usize, f64, f64)> {
        let threshold = SINGULARITY_TOL * self.operator_norm();
        self.blocks.iter().enumerate().find_map(|(s, b)| {
            let sigma_min = block_singular_values(b)[0];
            (sigma_min <= threshold).then_some((s, sigma_min, threshold))
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        if let Some((block, sigma_min, threshold)) = self.singular_block() {
            return Err(Error::Singular {
                block,
                sigma_min,
                threshold,
            });
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (s, b) in self.blocks.iter().enumerate() {
            let inv = b.clone().try_inverse().ok_or(Error::Singular {
                block: s,
                sigma_min: 0.0,
                threshold: 0.0,
            })?;
            blocks.push(inv);
        }
        Ok(Self {
            signature: self.signature.clone(),
            blocks,
        })
    }

    /// Largest absolute entry over all blocks; exact-zero tests use this.
    pub fn max_abs_entry(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;

    fn add(self, rhs: Self) -> AlgebraElement {
        self.try_add(rhs).expect("algebra signatures must match")
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;

    fn sub(self, rhs: Self) -> AlgebraElement {
        self.try_sub(rhs).expect("algebra signatures must match")
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;

    fn mul(self, rhs: Self) -> AlgebraElement {
        self.try_mul(rhs).expect("algebra signatures must match")
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;

    fn neg(self) -> AlgebraElement {
        self.scale_real(-1.0)
    }
}

/// Pauli matrices on signature `[2]`.
pub mod pauli {
    use super::*;

    pub fn x() -> AlgebraElement {
        AlgebraElement::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]).unwrap()
    }

    pub fn y() -> AlgebraElement {
        AlgebraElement::from_rows(&[&[ZERO, -I], &[I, ZERO]]).unwrap()
    }

    pub fn z() -> AlgebraElement {
        AlgebraElement::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]).unwrap()
    }
}
