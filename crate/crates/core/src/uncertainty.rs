//! Norm- and modular-uncertainty of self-adjoint morphisms at a state, and
//! the algebra-valued anticommutator/commutator terms built from them.
//!
//! Notation used below, for self-adjoint `A`, `B` and a state `x`:
//!
//! * `e = ⟨Ax,x⟩`, `f = ⟨Bx,x⟩` (self-adjoint expectations)
//! * `z = Ax − e·x`, `w = Bx − f·x` (centered vectors)
//! * `d_x(A) = √⟨z,z⟩ = √(⟨Ax,Ax⟩ − e²)`, `Δ_x(A) = ‖z‖ = ‖d_x(A)‖`
//! * `S = ⟨{A,B}x,x⟩ − {e,f}`, `C = ⟨[A,B]x,x⟩ + [e,f]`
//!
//! `e²` is the algebra square of `e`, not a complex square of a number.

use serde::Serialize;

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::hilbert_module::{inner_product, module_norm, ModuleElement, State};
use crate::morphism::Morphism;
use crate::tolerance::{Tolerances, HERMITICITY_TOL};

/// Radicands within this relative distance below zero are clipped before the square root.
const RADICAND_CLIP_TOL: f64 = 1e-10;

fn check_shape(a: &Morphism, x: &State) -> Result<()> {
    if a.signature() != x.signature() {
        return Err(Error::SignatureMismatch {
            left: a.signature().clone(),
            right: x.signature().clone(),
        });
    }
    if a.rank() != x.rank() {
        return Err(Error::ShapeMismatch(format!(
            "morphism of rank {} with state of rank {}",
            a.rank(),
            x.rank()
        )));
    }
    Ok(())
}

/// `⟨Ax, x⟩`.
pub fn expectation(a: &Morphism, x: &State) -> Result<AlgebraElement> {
    check_shape(a, x)?;
    inner_product(&a.apply(x.vector())?, x.vector())
}

/// `Ax − ⟨Ax,x⟩·x`.
pub fn centered_vector(a: &Morphism, x: &State) -> Result<ModuleElement> {
    check_shape(a, x)?;
    let ax = a.apply(x.vector())?;
    let e = inner_product(&ax, x.vector())?;
    ax.try_sub(&x.vector().left_mul(&e)?)
}

/// `⟨Ax,Ax⟩ − ⟨Ax,x⟩²`, the definitional radicand of `d_x(A)`.
pub fn modular_radicand_definitional(a: &Morphism, x: &State) -> Result<AlgebraElement> {
    let ax = a.apply(x.vector())?;
    let e = expectation(a, x)?;
    Ok(&inner_product(&ax, &ax)? - &(&e * &e))
}

/// `d_x(A)`, computed as `√⟨z,z⟩`.
pub fn modular_uncertainty(a: &Morphism, x: &State) -> Result<AlgebraElement> {
    a.ensure_selfadjoint()?;
    let z = centered_vector(a, x)?;
    inner_product(&z, &z)?.positive_sqrt(RADICAND_CLIP_TOL)
}

/// `Δ_x(A) = ‖Ax − ⟨Ax,x⟩x‖`.
pub fn norm_uncertainty(a: &Morphism, x: &State) -> Result<f64> {
    a.ensure_selfadjoint()?;
    Ok(module_norm(&centered_vector(a, x)?))
}

/// Every algebra-valued quantity the uncertainty statements are built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyTerms {
    pub expectation_a: AlgebraElement,
    pub expectation_b: AlgebraElement,
    pub delta_a: f64,
    pub delta_b: f64,
    pub d_a: AlgebraElement,
    pub d_b: AlgebraElement,
    /// `⟨Ax,Bx⟩ − ⟨Ax,x⟩⟨Bx,x⟩`.
    pub covariance: AlgebraElement,
    /// `⟨Bx,Ax⟩ − ⟨Bx,x⟩⟨Ax,x⟩`.
    pub covariance_reverse: AlgebraElement,
    /// `S = ⟨{A,B}x,x⟩ − {⟨Ax,x⟩,⟨Bx,x⟩}`.
    pub s_term: AlgebraElement,
    /// `C = ⟨[A,B]x,x⟩ + [⟨Ax,x⟩,⟨Bx,x⟩]`.
    pub c_term: AlgebraElement,
    /// `⟨{A,B}x,x⟩`.
    pub anticommutator_expectation: AlgebraElement,
    /// `⟨[A,B]x,x⟩`.
    pub commutator_expectation: AlgebraElement,
    /// `⟨x,[A,B]x⟩`, evaluated directly.
    pub commutator_expectation_flipped: AlgebraElement,
    pub z: ModuleElement,
    pub w: ModuleElement,
    /// Relative residuals of the internal identities, by label.
    pub identity_residuals: Vec<(String, f64)>,
}

struct IdentityCheck<'a> {
    tol: f64,
    residuals: &'a mut Vec<(String, f64)>,
}

impl IdentityCheck<'_> {
    fn check(&mut self, label: &str, lhs: &AlgebraElement, rhs: &AlgebraElement, scale: f64) -> Result<()> {
        let residual = lhs.distance(rhs)? / scale.max(1.0);
        self.residuals.push((label.to_string(), residual));
        if !(residual <= self.tol) {
            return Err(Error::IdentityViolation {
                label: label.to_string(),
                residual,
                threshold: self.tol,
            });
        }
        Ok(())
    }
}

/// Builds [`UncertaintyTerms`] from the centered vectors `z`, `w` and checks
/// the defining expressions against them to `tol.identity`:
/// `S = ⟨z,w⟩ + ⟨w,z⟩`, `C = −(⟨z,w⟩ − ⟨w,z⟩)`, `covariance = ⟨z,w⟩`,
/// `⟨z,z⟩ = ⟨Ax,Ax⟩ − e²`.
pub fn schrodinger_terms(a: &Morphism, b: &Morphism, x: &State, tol: &Tolerances) -> Result<UncertaintyTerms> {
    check_shape(a, x)?;
    check_shape(b, x)?;
    a.ensure_selfadjoint()?;
    b.ensure_selfadjoint()?;
    let v = x.vector();
    let ax = a.apply(v)?;
    let bx = b.apply(v)?;
    let e = inner_product(&ax, v)?;
    let f = inner_product(&bx, v)?;
    let z = ax.try_sub(&v.left_mul(&e)?)?;
    let w = bx.try_sub(&v.left_mul(&f)?)?;

    let comm = Morphism::commutator(a, b)?;
    let anti = Morphism::anticommutator(a, b)?;
    let comm_x = comm.apply(v)?;
    let commutator_expectation = inner_product(&comm_x, v)?;
    let commutator_expectation_flipped = inner_product(v, &comm_x)?;
    let anticommutator_expectation = inner_product(&anti.apply(v)?, v)?;

    let zz = inner_product(&z, &z)?;
    let ww = inner_product(&w, &w)?;
    let d_a = zz.positive_sqrt(RADICAND_CLIP_TOL)?;
    let d_b = ww.positive_sqrt(RADICAND_CLIP_TOL)?;
    let delta_a = module_norm(&z);
    let delta_b = module_norm(&w);

    // Centered forms: the defining expressions cancel O(1) terms, these do not.
    let covariance = inner_product(&z, &w)?;
    let covariance_reverse = inner_product(&w, &z)?;
    let s_term = &covariance + &covariance_reverse;
    let c_term = &covariance_reverse - &covariance;

    let ax_norm = module_norm(&ax);
    let bx_norm = module_norm(&bx);
    let cross_scale = ax_norm * bx_norm;

    let mut identity_residuals = Vec::new();
    let mut checker = IdentityCheck {
        tol: tol.identity,
        residuals: &mut identity_residuals,
    };
    checker.check(
        "⟨{A,B}x,x⟩ − {⟨Ax,x⟩,⟨Bx,x⟩} = ⟨z,w⟩ + ⟨w,z⟩",
        &(&anticommutator_expectation - &e.anticommutator(&f)?),
        &s_term,
        2.0 * cross_scale,
    )?;
    checker.check(
        "⟨[A,B]x,x⟩ + [⟨Ax,x⟩,⟨Bx,x⟩] = −(⟨z,w⟩ − ⟨w,z⟩)",
        &(&commutator_expectation + &e.commutator(&f)?),
        &c_term,
        2.0 * cross_scale,
    )?;
    checker.check(
        "⟨Ax,Bx⟩ − ⟨Ax,x⟩⟨Bx,x⟩ = ⟨z,w⟩",
        &(&inner_product(&ax, &bx)? - &(&e * &f)),
        &covariance,
        cross_scale,
    )?;
    checker.check(
        "⟨Bx,Ax⟩ − ⟨Bx,x⟩⟨Ax,x⟩ = ⟨w,z⟩",
        &(&inner_product(&bx, &ax)? - &(&f * &e)),
        &covariance_reverse,
        cross_scale,
    )?;
    checker.check(
        "⟨z,z⟩ = ⟨Ax,Ax⟩ − ⟨Ax,x⟩²",
        &zz,
        &(&inner_product(&ax, &ax)? - &(&e * &e)),
        ax_norm * ax_norm,
    )?;
    checker.check(
        "⟨w,w⟩ = ⟨Bx,Bx⟩ − ⟨Bx,x⟩²",
        &ww,
        &(&inner_product(&bx, &bx)? - &(&f * &f)),
        bx_norm * bx_norm,
    )?;

    Ok(UncertaintyTerms {
        expectation_a: e,
        expectation_b: f,
        delta_a,
        delta_b,
        d_a,
        d_b,
        covariance,
        covariance_reverse,
        s_term,
        c_term,
        anticommutator_expectation,
        commutator_expectation,
        commutator_expectation_flipped,
        z,
        w,
        identity_residuals,
    })
}

impl UncertaintyTerms {
    /// `C* = −C` and `S* = S`, relative to `max(1, ‖·‖)`.
    pub fn symmetry_defects(&self) -> (f64, f64) {
        let c = (&self.c_term + &self.c_term.adjoint()).operator_norm() / self.c_term.operator_norm().max(1.0);
        let s = (&self.s_term - &self.s_term.adjoint()).operator_norm() / self.s_term.operator_norm().max(1.0);
        (c, s)
    }

    /// `d_A`, `d_B` positive and `Δ = ‖d‖` for both.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let positive = |d: &AlgebraElement| {
            d.ensure_self_adjoint().is_ok()
                && d.min_eigenvalue().map(|m| m >= -HERMITICITY_TOL * d.operator_norm().max(1.0)).unwrap_or(false)
        };
        positive(&self.d_a)
            && positive(&self.d_b)
            && (self.delta_a - self.d_a.operator_norm()).abs() <= tol * self.delta_a.max(1.0)
            && (self.delta_b - self.d_b.operator_norm()).abs() <= tol * self.delta_b.max(1.0)
    }
}
