//! Statement-by-statement evaluation of the noncommutative uncertainty
//! inequalities, the scalar (`A = C`) differential oracle, and seeded fuzzing.
//!
//! Every statement is evaluated on its own, exactly as written: each `≥` in
//! a chain becomes a [`Link`] whose margin is `λ_min(lhs − rhs)` for algebra
//! elements or `lhs − rhs` for reals, and each written `=` becomes an
//! [`IdentityCheck`]. Nothing is inferred from another statement, so a bad
//! link points at one specific claim.
//!
//! Margins in rows are relative (`margin / scale`, `scale = max(1, ‖lhs‖, ‖rhs‖)`),
//! and a row's verdict is `min relative margin ≥ −tol`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{AlgebraElement, AlgebraSignature, C64};
use crate::error::{Error, Result};
use crate::hilbert_module::{inner_product, State};
use crate::instance::{to_canonical_json, sha256_hex, InstanceFile, Provenance};
use crate::morphism::Morphism;
use crate::tolerance::Tolerances;
use crate::uncertainty::{schrodinger_terms, UncertaintyTerms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatementId {
    NhI,
    NhIi,
    NhIii,
    NhIv,
    NhV,
    NhVi,
    NhVii,
    NhViii,
    NhIx,
    CorI,
    CorIi,
    CorIii,
    CorIv,
    CauchySchwarz,
    SeScalar,
    HrChain,
}

impl StatementId {
    /// The nine NH statements followed by the four COR statements.
    pub const THEOREM: [StatementId; 13] = [
        Self::NhI,
        Self::NhIi,
        Self::NhIii,
        Self::NhIv,
        Self::NhV,
        Self::NhVi,
        Self::NhVii,
        Self::NhViii,
        Self::NhIx,
        Self::CorI,
        Self::CorIi,
        Self::CorIii,
        Self::CorIv,
    ];

    pub const ALL: [StatementId; 16] = [
        Self::NhI,
        Self::NhIi,
        Self::NhIii,
        Self::NhIv,
        Self::NhV,
        Self::NhVi,
        Self::NhVii,
        Self::NhViii,
        Self::NhIx,
        Self::CorI,
        Self::CorIi,
        Self::CorIii,
        Self::CorIv,
        Self::CauchySchwarz,
        Self::SeScalar,
        Self::HrChain,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::NhI => "NH-i",
            Self::NhIi => "NH-ii",
            Self::NhIii => "NH-iii",
            Self::NhIv => "NH-iv",
            Self::NhV => "NH-v",
            Self::NhVi => "NH-vi",
            Self::NhVii => "NH-vii",
            Self::NhViii => "NH-viii",
            Self::NhIx => "NH-ix",
            Self::CorI => "COR-i",
            Self::CorIi => "COR-ii",
            Self::CorIii => "COR-iii",
            Self::CorIv => "COR-iv",
            Self::CauchySchwarz => "CS",
            Self::SeScalar => "SE-scalar",
            Self::HrChain => "HR-chain",
        }
    }

    pub fn requires_commutative(self) -> bool {
        matches!(self, Self::NhViii | Self::NhIx | Self::CorIii | Self::CorIv)
    }

    pub fn requires_scalar(self) -> bool {
        matches!(self, Self::SeScalar | Self::HrChain)
    }

    pub fn applies_to(self, signature: &AlgebraSignature) -> bool {
        (!self.requires_commutative() || signature.is_commutative())
            && (!self.requires_scalar() || signature.is_scalar())
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StatementId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|id| id.label().to_ascii_lowercase() == wanted)
            .ok_or_else(|| {
                let known: Vec<_> = Self::ALL.iter().map(|id| id.label()).collect();
                Error::InvalidInput(format!("unknown statement id {s:?}; expected one of {}", known.join(", ")))
            })
    }
}

impl Serialize for StatementId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for StatementId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One side of a link.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Scalar(f64),
    Element(AlgebraElement),
}

impl Quantity {
    fn norm(&self) -> f64 {
        match self {
            Self::Scalar(v) => v.abs(),
            Self::Element(a) => a.operator_norm(),
        }
    }

    /// Text rendering: the value for reals, norm and minimum eigenvalue otherwise.
    pub fn summary(&self) -> String {
        match self {
            Self::Scalar(v) => format!("{v:.6e}"),
            Self::Element(a) => match a.min_eigenvalue() {
                Ok(m) => format!("‖·‖={:.6e} λmin={m:.6e}", a.operator_norm()),
                Err(_) => format!("‖·‖={:.6e} (not self-adjoint)", a.operator_norm()),
            },
        }
    }
}

/// A single `lhs ≥ rhs` step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub relation: String,
    pub lhs: Quantity,
    pub rhs: Quantity,
    /// `λ_min(lhs − rhs)` or `lhs − rhs`.
    pub margin: f64,
    pub scale: f64,
    pub relative_margin: f64,
    pub holds: bool,
}

/// A written equality, checked numerically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub relation: String,
    /// `‖lhs − rhs‖ / max(1, ‖lhs‖, ‖rhs‖)`.
    pub residual: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Evaluation {
    Evaluated {
        /// Minimum relative margin over links.
        margin: f64,
        verdict: bool,
        links: Vec<Link>,
        identities: Vec<IdentityCheck>,
        identities_hold: bool,
    },
    NotApplicable {
        reason: String,
    },
    Failed {
        reason: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        eigenvalue: Option<f64>,
        /// Links evaluated before the failure.
        links: Vec<Link>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementRow {
    pub statement: StatementId,
    pub tolerance: f64,
    pub evaluation: Evaluation,
}

impl StatementRow {
    pub fn margin(&self) -> Option<f64> {
        match &self.evaluation {
            Evaluation::Evaluated { margin, .. } => Some(*margin),
            _ => None,
        }
    }

    pub fn is_applicable(&self) -> bool {
        !matches!(self.evaluation, Evaluation::NotApplicable { .. })
    }

    /// Inequalities hold and every written identity checks out.
    /// `None` for not-applicable rows.
    pub fn passed(&self) -> Option<bool> {
        match &self.evaluation {
            Evaluation::Evaluated {
                verdict,
                identities_hold,
                ..
            } => Some(*verdict && *identities_hold),
            Evaluation::NotApplicable { .. } => None,
            Evaluation::Failed { .. } => Some(false),
        }
    }

    pub fn link(&self, i: usize) -> Option<&Link> {
        match &self.evaluation {
            Evaluation::Evaluated { links, .. } | Evaluation::Failed { links, .. } => links.get(i),
            Evaluation::NotApplicable { .. } => None,
        }
    }

    pub fn identities(&self) -> &[IdentityCheck] {
        match &self.evaluation {
            Evaluation::Evaluated { identities, .. } => identities,
            _ => &[],
        }
    }
}

/// Failure while building a side of an inequality.
struct Failure {
    reason: String,
    eigenvalue: Option<f64>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotPositive { eigenvalue, .. } => Failure {
                reason: format!("radicand not positive: {e}"),
                eigenvalue: Some(eigenvalue),
            },
            Error::NotSelfAdjoint { .. } => Failure {
                reason: format!("operand not self-adjoint: {e}"),
                eigenvalue: None,
            },
            other => Failure {
                reason: other.to_string(),
                eigenvalue: None,
            },
        }
    }
}

struct RowBuilder {
    tol: f64,
    identity_tol: f64,
    links: Vec<Link>,
    identities: Vec<IdentityCheck>,
}

impl RowBuilder {
    fn new(tol: &Tolerances) -> Self {
        Self {
            tol: tol.verdict,
            identity_tol: tol.identity,
            links: Vec::new(),
            identities: Vec::new(),
        }
    }

    fn push_link(&mut self, relation: &str, lhs: Quantity, rhs: Quantity, margin: f64) {
        let scale = 1.0_f64.max(lhs.norm()).max(rhs.norm());
        let relative_margin = margin / scale;
        self.links.push(Link {
            relation: relation.to_string(),
            lhs,
            rhs,
            margin,
            scale,
            relative_margin,
            holds: relative_margin >= -self.tol,
        });
    }

    /// `lhs ≥ rhs` in the Löwner order.
    fn ge(&mut self, relation: &str, lhs: &AlgebraElement, rhs: &AlgebraElement) -> std::result::Result<(), Failure> {
        let verdict = rhs.loewner_leq(lhs, self.tol)?;
        self.push_link(
            relation,
            Quantity::Element(lhs.clone()),
            Quantity::Element(rhs.clone()),
            verdict.margin,
        );
        Ok(())
    }

    fn ge_scalar(&mut self, relation: &str, lhs: f64, rhs: f64) {
        self.push_link(relation, Quantity::Scalar(lhs), Quantity::Scalar(rhs), lhs - rhs);
    }

    fn eq(&mut self, relation: &str, lhs: &AlgebraElement, rhs: &AlgebraElement) {
        let scale = 1.0_f64.max(lhs.operator_norm()).max(rhs.operator_norm());
        let residual = lhs.distance(rhs).map(|d| d / scale).unwrap_or(f64::INFINITY);
        self.push_identity(relation, residual);
    }

    fn eq_scalar(&mut self, relation: &str, lhs: f64, rhs: f64) {
        let residual = (lhs - rhs).abs() / 1.0_f64.max(lhs.abs()).max(rhs.abs());
        self.push_identity(relation, residual);
    }

    fn push_identity(&mut self, relation: &str, residual: f64) {
        self.identities.push(IdentityCheck {
            relation: relation.to_string(),
            residual,
            holds: residual <= self.identity_tol,
        });
    }

    fn finish(self) -> Evaluation {
        let margin = self
            .links
            .iter()
            .map(|l| l.relative_margin)
            .fold(f64::INFINITY, f64::min);
        Evaluation::Evaluated {
            margin,
            verdict: margin >= -self.tol,
            identities_hold: self.identities.iter().all(|c| c.holds),
            links: self.links,
            identities: self.identities,
        }
    }

    fn fail(self, failure: Failure) -> Evaluation {
        Evaluation::Failed {
            reason: failure.reason,
            eigenvalue: failure.eigenvalue,
            links: self.links,
        }
    }
}

/// Radicand square root; errors become statement-level failures.
fn root(a: &AlgebraElement) -> std::result::Result<AlgebraElement, Failure> {
    Ok(a.positive_sqrt(crate::tolerance::DEFAULT_IDENTITY_TOL)?)
}

/// Intermediate quantities shared by the statements.
struct Context<'a> {
    t: &'a UncertaintyTerms,
    signature: &'a AlgebraSignature,
    /// `⟨x,[A,B]x⟩ + [⟨Ax,x⟩,⟨Bx,x⟩]`, as written.
    c_written: AlgebraElement,
    /// `⟨[B,A]x,x⟩ + [⟨Bx,x⟩,⟨Ax,x⟩]`, which is `−C`.
    c_swapped: AlgebraElement,
    /// `⟨x,[B,A]x⟩ + [⟨Bx,x⟩,⟨Ax,x⟩]`.
    c_swapped_written: AlgebraElement,
    /// `Δ_x(B)²d_x(A)² + Δ_x(A)²d_x(B)²`.
    sum_lhs: AlgebraElement,
    /// `Δ_x(B)²d_x(A)²`.
    lhs_i: AlgebraElement,
    /// `Δ_x(A)²d_x(B)²`.
    lhs_iii: AlgebraElement,
}

impl<'a> Context<'a> {
    fn new(t: &'a UncertaintyTerms, signature: &'a AlgebraSignature) -> Self {
        let ef_comm = t.expectation_a.commutator(&t.expectation_b).unwrap();
        let fe_comm = t.expectation_b.commutator(&t.expectation_a).unwrap();
        let c_written = &t.commutator_expectation_flipped + &ef_comm;
        let c_swapped = -&t.c_term;
        let c_swapped_written = &(-&t.commutator_expectation_flipped) + &fe_comm;
        let da2 = &t.d_a * &t.d_a;
        let db2 = &t.d_b * &t.d_b;
        let lhs_i = da2.scale_real(t.delta_b * t.delta_b);
        let lhs_iii = db2.scale_real(t.delta_a * t.delta_a);
        Self {
            t,
            signature,
            c_written,
            c_swapped,
            c_swapped_written,
            sum_lhs: &lhs_i + &lhs_iii,
            lhs_i,
            lhs_iii,
        }
    }

    fn evaluate(&self, id: StatementId, tol: &Tolerances) -> Evaluation {
        if !id.applies_to(self.signature) {
            let reason = if id.requires_scalar() {
                format!("requires the scalar signature [1], got {}", self.signature)
            } else {
                format!("requires a commutative signature, got {}", self.signature)
            };
            return Evaluation::NotApplicable { reason };
        }
        let mut row = RowBuilder::new(tol);
        match self.build(id, &mut row) {
            Ok(()) => row.finish(),
            Err(failure) => row.fail(failure),
        }
    }

    fn build(&self, id: StatementId, row: &mut RowBuilder) -> std::result::Result<(), Failure> {
        let t = self.t;
        let p = &t.covariance;
        let q = &t.covariance_reverse;
        let c = &t.c_term;
        let s = &t.s_term;
        let g = &t.commutator_expectation;
        let g_flip = &t.commutator_expectation_flipped;
        let delta_prod = t.delta_a * t.delta_b;
        match id {
            StatementId::NhI | StatementId::NhIii => {
                let (lhs, pq, cc, cw) = if id == StatementId::NhI {
                    (&self.lhs_i, p * q, c, &self.c_written)
                } else {
                    (&self.lhs_iii, q * p, &self.c_swapped, &self.c_swapped_written)
                };
                let neg_sq = (-&(cc * cc)).scale_real(0.25);
                row.ge("Δ²d² ≥ covariance product", lhs, &pq)?;
                row.ge("covariance product ≥ −C²/4", &pq, &neg_sq)?;
                row.eq("−C²/4 = C·(⟨x,[·,·]x⟩ + [·,·])/4", &neg_sq, &(cc * cw).scale_real(0.25));
            }
            StatementId::NhIi | StatementId::NhIv => {
                let (delta, d, pq, cc, cw) = if id == StatementId::NhIi {
                    (t.delta_b, &t.d_a, p * q, c, &self.c_written)
                } else {
                    (t.delta_a, &t.d_b, q * p, &self.c_swapped, &self.c_swapped_written)
                };
                let root_pq = root(&pq)?;
                row.ge("Δ·d ≥ √(covariance product)", &d.scale_real(delta), &root_pq)?;
                let rhs = root(&(cc * cw))?.scale_real(0.5);
                row.ge("√(covariance product) ≥ √(C·(⟨x,[·,·]x⟩ + [·,·]))/2", &root_pq, &rhs)?;
            }
            StatementId::NhV => {
                let p_norm = p.operator_norm();
                let mid = (c * &self.c_written).operator_norm().sqrt() / 2.0;
                row.ge_scalar("Δ_x(A)Δ_x(B) ≥ ‖covariance‖", delta_prod, p_norm);
                row.ge_scalar("‖covariance‖ ≥ √‖C·(⟨x,[A,B]x⟩ + [e,f])‖/2", p_norm, mid);
                row.eq_scalar("√‖C·(⟨x,[A,B]x⟩ + [e,f])‖/2 = ‖C‖/2", mid, c.operator_norm() / 2.0);
            }
            StatementId::NhVi => {
                let rhs = (&(s * s) - &(c * c)).scale_real(0.5);
                row.ge("Δ_B²d_A² + Δ_A²d_B² ≥ (S² − C²)/2", &self.sum_lhs, &rhs)?;
                row.eq(
                    "(S² − C²)/2 = (S² + C·(⟨x,[A,B]x⟩ + [e,f]))/2",
                    &rhs,
                    &(&(s * s) + &(c * &self.c_written)).scale_real(0.5),
                );
            }
            StatementId::NhVii => {
                let rhs = (&(s * s) - &(c * c)).operator_norm().sqrt() / 2.0;
                row.ge_scalar("Δ_x(A)Δ_x(B) ≥ √‖S² − C²‖/2", delta_prod, rhs);
                let alt = (&(s * s) + &(c * &self.c_written)).operator_norm().sqrt() / 2.0;
                row.eq_scalar("√‖S² − C²‖/2 = √‖S² + C·(⟨x,[A,B]x⟩ + [e,f])‖/2", rhs, alt);
            }
            StatementId::NhViii | StatementId::NhIx => {
                let two_ef = (&t.expectation_a * &t.expectation_b).scale_real(2.0);
                let sc = &t.anticommutator_expectation - &two_ef;
                let minus = &(&sc * &sc) - &(g * g);
                let plus = &(&sc * &sc) + &(g * g_flip);
                if id == StatementId::NhViii {
                    let rhs = minus.scale_real(0.5);
                    row.ge("Δ_B²d_A² + Δ_A²d_B² ≥ ((⟨{A,B}x,x⟩ − 2ef)² − g²)/2", &self.sum_lhs, &rhs)?;
                    row.eq("(… − g²)/2 = (… + g·⟨x,[A,B]x⟩)/2", &rhs, &plus.scale_real(0.5));
                } else {
                    let rhs = minus.operator_norm().sqrt() / 2.0;
                    row.ge_scalar("Δ_x(A)Δ_x(B) ≥ √‖(⟨{A,B}x,x⟩ − 2ef)² − g²‖/2", delta_prod, rhs);
                    row.eq_scalar("√‖… − g²‖/2 = √‖… + g·⟨x,[A,B]x⟩‖/2", rhs, plus.operator_norm().sqrt() / 2.0);
                }
            }
            StatementId::CorI => {
                let rhs = (c * &self.c_written).scale_real(0.5);
                row.ge("Δ_B²d_A² + Δ_A²d_B² ≥ C·(⟨x,[A,B]x⟩ + [e,f])/2", &self.sum_lhs, &rhs)?;
            }
            StatementId::CorIi => {
                row.ge_scalar("Δ_x(A)Δ_x(B) ≥ ‖C‖/2", delta_prod, c.operator_norm() / 2.0);
            }
            StatementId::CorIii => {
                let rhs = (g * g_flip).scale_real(0.5);
                row.ge("Δ_B²d_A² + Δ_A²d_B² ≥ ⟨[A,B]x,x⟩⟨x,[A,B]x⟩/2", &self.sum_lhs, &rhs)?;
            }
            StatementId::CorIv => {
                row.ge_scalar("Δ_x(A)Δ_x(B) ≥ ‖⟨[A,B]x,x⟩‖/2", delta_prod, g.operator_norm() / 2.0);
            }
            StatementId::CauchySchwarz => {
                let zw = inner_product(&t.z, &t.w)?;
                let wz = inner_product(&t.w, &t.z)?;
                let zz = inner_product(&t.z, &t.z)?;
                let ww = inner_product(&t.w, &t.w)?;
                row.ge("‖⟨w,w⟩‖⟨z,z⟩ ≥ ⟨z,w⟩⟨w,z⟩", &zz.scale_real(ww.operator_norm()), &(&zw * &wz))?;
            }
            StatementId::SeScalar | StatementId::HrChain => {
                unreachable!("scalar-reduction rows are produced by verify_scalar_reduction")
            }
        }
        Ok(())
    }
}

fn check_inputs(a: &Morphism, b: &Morphism, x: &State) -> Result<()> {
    for (name, m) in [("A", a), ("B", b)] {
        m.ensure_selfadjoint()
            .map_err(|e| Error::InvalidInput(format!("{name} is not self-adjoint: {e}")))?;
        if m.signature() != x.signature() || m.rank() != x.rank() {
            return Err(Error::ShapeMismatch(format!(
                "{name} has signature {} rank {}, state has signature {} rank {}",
                m.signature(),
                m.rank(),
                x.signature(),
                x.rank()
            )));
        }
    }
    Ok(())
}

/// Evaluates one statement. Errors only on precondition violations.
pub fn verify_statement(id: StatementId, a: &Morphism, b: &Morphism, x: &State, tol: &Tolerances) -> Result<StatementRow> {
    if id.requires_scalar() {
        let rows = verify_scalar_reduction(a, b, x, tol)?;
        return Ok(rows.into_iter().find(|r| r.statement == id).unwrap());
    }
    check_inputs(a, b, x)?;
    let terms = schrodinger_terms(a, b, x, tol)?;
    let ctx = Context::new(&terms, x.signature());
    Ok(StatementRow {
        statement: id,
        tolerance: tol.verdict,
        evaluation: ctx.evaluate(id, tol),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub signature: AlgebraSignature,
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub tolerances: Tolerances,
    pub delta_a: f64,
    pub delta_b: f64,
    pub rows: Vec<StatementRow>,
    pub terms: UncertaintyTerms,
}

impl InequalityReport {
    pub fn row(&self, id: StatementId) -> Option<&StatementRow> {
        self.rows.iter().find(|r| r.statement == id)
    }

    /// True when every applicable row passed.
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed().unwrap_or(true))
    }
}

/// Evaluates the thirteen NH and COR statements and Cauchy–Schwarz.
pub fn verify_all(a: &Morphism, b: &Morphism, x: &State, tol: &Tolerances) -> Result<InequalityReport> {
    check_inputs(a, b, x)?;
    let terms = schrodinger_terms(a, b, x, tol)?;
    let ctx = Context::new(&terms, x.signature());
    let rows = StatementId::THEOREM
        .into_iter()
        .chain([StatementId::CauchySchwarz])
        .map(|id| StatementRow {
            statement: id,
            tolerance: tol.verdict,
            evaluation: ctx.evaluate(id, tol),
        })
        .collect();
    Ok(InequalityReport {
        signature: x.signature().clone(),
        rank: x.rank(),
        provenance: None,
        tolerances: *tol,
        delta_a: terms.delta_a,
        delta_b: terms.delta_b,
        rows,
        terms,
    })
}

/// [`verify_all`] plus the scalar-reduction rows (not applicable off `[1]`).
pub fn verify_instance(a: &Morphism, b: &Morphism, x: &State, tol: &Tolerances) -> Result<InequalityReport> {
    let mut report = verify_all(a, b, x, tol)?;
    report.rows.extend(verify_scalar_reduction(a, b, x, tol)?);
    Ok(report)
}

fn scalar_matrix(m: &Morphism) -> DMatrix<C64> {
    let n = m.rank();
    DMatrix::from_fn(n, n, |i, j| m.cell(i, j).blocks()[0][(0, 0)])
}

fn dot(u: &DVector<C64>, v: &DVector<C64>) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Classical Robertson–Schrödinger quantities on `C^n`, computed with plain
/// matrix-vector arithmetic and no module machinery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalQuantities {
    pub delta_a: f64,
    pub delta_b: f64,
    /// `⟨Ah,Bh⟩ − ⟨Ah,h⟩⟨Bh,h⟩`.
    pub covariance: C64Pair,
    /// `⟨{A,B}h,h⟩ − 2⟨Ah,h⟩⟨Bh,h⟩`.
    pub anticommutator_term: C64Pair,
    /// `⟨[A,B]h,h⟩`.
    pub commutator_expectation: C64Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C64Pair(pub [f64; 2]);

impl From<C64> for C64Pair {
    fn from(z: C64) -> Self {
        Self([z.re, z.im])
    }
}

impl C64Pair {
    pub fn complex(self) -> C64 {
        C64::new(self.0[0], self.0[1])
    }
}

pub fn classical_quantities(a: &Morphism, b: &Morphism, x: &State) -> Result<ClassicalQuantities> {
    if !x.signature().is_scalar() {
        return Err(Error::InvalidInput(format!(
            "classical quantities need signature [1], got {}",
            x.signature()
        )));
    }
    let ma = scalar_matrix(a);
    let mb = scalar_matrix(b);
    let h = DVector::from_iterator(x.rank(), x.vector().entries().iter().map(|e| e.blocks()[0][(0, 0)]));
    let ah = &ma * &h;
    let bh = &mb * &h;
    let ea = dot(&ah, &h);
    let eb = dot(&bh, &h);
    let delta = |v: &DVector<C64>, e: C64| (v - h.map(|c| c * e)).norm();
    let comm = &ma * &mb - &mb * &ma;
    let anti = &ma * &mb + &mb * &ma;
    Ok(ClassicalQuantities {
        delta_a: delta(&ah, ea),
        delta_b: delta(&bh, eb),
        covariance: (dot(&ah, &bh) - ea * eb).into(),
        anticommutator_term: (dot(&(&anti * &h), &h) - ea * eb * 2.0).into(),
        commutator_expectation: dot(&(&comm * &h), &h).into(),
    })
}

/// Schrödinger's bound and the Heisenberg–Robertson chain on `C^n`, with a
/// cross-check against the module-based quantities.
pub fn verify_scalar_reduction(a: &Morphism, b: &Morphism, x: &State, tol: &Tolerances) -> Result<Vec<StatementRow>> {
    check_inputs(a, b, x)?;
    if !x.signature().is_scalar() {
        let reason = format!("requires the scalar signature [1], got {}", x.signature());
        return Ok([StatementId::SeScalar, StatementId::HrChain]
            .into_iter()
            .map(|id| StatementRow {
                statement: id,
                tolerance: tol.verdict,
                evaluation: Evaluation::NotApplicable { reason: reason.clone() },
            })
            .collect());
    }
    let cq = classical_quantities(a, b, x)?;
    let terms = schrodinger_terms(a, b, x, tol)?;
    let (da, db) = (cq.delta_a, cq.delta_b);
    let cov = cq.covariance.complex().norm();
    let s = cq.anticommutator_term.complex();
    let g = cq.commutator_expectation.complex();

    let mut se = RowBuilder::new(tol);
    se.ge_scalar("Δ_h(A)Δ_h(B) ≥ |⟨Ah,Bh⟩ − ⟨Ah,h⟩⟨Bh,h⟩|", da * db, cov);
    se.eq_scalar(
        "|cov| = √(|⟨{A,B}h,h⟩ − 2⟨Ah,h⟩⟨Bh,h⟩|² + |⟨[A,B]h,h⟩|²)/2",
        cov,
        (s.norm_sqr() + g.norm_sqr()).sqrt() / 2.0,
    );
    se.eq_scalar(
        "|cov| = √((⟨{A,B}h,h⟩ − 2⟨Ah,h⟩⟨Bh,h⟩)² − ⟨[A,B]h,h⟩²)/2",
        cov,
        (s * s - g * g).norm().sqrt() / 2.0,
    );
    se.eq_scalar("module Δ_x(A)Δ_x(B) = classical Δ_h(A)Δ_h(B)", terms.delta_a * terms.delta_b, da * db);
    se.eq_scalar("module ‖covariance‖ = classical |cov|", terms.covariance.operator_norm(), cov);
    let module_vii = {
        let (s, c) = (&terms.s_term, &terms.c_term);
        (&(s * s) - &(c * c)).operator_norm().sqrt() / 2.0
    };
    se.eq_scalar("module √‖S² − C²‖/2 = classical |cov|", module_vii, cov);

    let mut hr = RowBuilder::new(tol);
    let half_sq = 0.5 * (da * da + db * db);
    let quarter_sum = 0.25 * (da + db) * (da + db);
    hr.ge_scalar("½(Δ_h(A)² + Δ_h(B)²) ≥ ¼(Δ_h(A) + Δ_h(B))²", half_sq, quarter_sum);
    hr.ge_scalar("¼(Δ_h(A) + Δ_h(B))² ≥ Δ_h(A)Δ_h(B)", quarter_sum, da * db);
    hr.ge_scalar("Δ_h(A)Δ_h(B) ≥ ½|⟨[A,B]h,h⟩|", da * db, 0.5 * g.norm());

    Ok(vec![
        StatementRow {
            statement: StatementId::SeScalar,
            tolerance: tol.verdict,
            evaluation: se.finish(),
        },
        StatementRow {
            statement: StatementId::HrChain,
            tolerance: tol.verdict,
            evaluation: hr.finish(),
        },
    ])
}

/// Instance `index` of a fuzz sweep: own ChaCha stream, so generation is
/// independent of evaluation order.
pub fn fuzz_instance(signature: &AlgebraSignature, rank: usize, seed: u64, index: u64) -> Result<(Morphism, Morphism, State)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let a = Morphism::random_selfadjoint_with(signature, rank, &mut rng, 1.0);
    let b = Morphism::random_selfadjoint_with(signature, rank, &mut rng, 1.0);
    let x = State::random(signature, rank, &mut rng)?;
    Ok((a, b, x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub index: u64,
    pub reason: String,
    pub instance: InstanceFile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationRecord {
    pub index: u64,
    pub margin: f64,
    pub instance: InstanceFile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementAggregate {
    pub statement: StatementId,
    pub evaluated: usize,
    pub not_applicable: usize,
    pub failed_evaluations: usize,
    pub violations: usize,
    pub identity_failures: usize,
    pub min_margin: Option<f64>,
    pub min_margin_index: Option<u64>,
    /// Lowest-margin violating instance.
    pub worst_violation: Option<ViolationRecord>,
    pub first_failure: Option<FailureRecord>,
    /// First instance whose written identities did not hold.
    pub first_identity_failure: Option<FailureRecord>,
}

impl StatementAggregate {
    fn new(statement: StatementId) -> Self {
        Self {
            statement,
            evaluated: 0,
            not_applicable: 0,
            failed_evaluations: 0,
            violations: 0,
            identity_failures: 0,
            min_margin: None,
            min_margin_index: None,
            worst_violation: None,
            first_failure: None,
            first_identity_failure: None,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.violations == 0 && self.failed_evaluations == 0 && self.identity_failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzReport {
    pub signature: AlgebraSignature,
    pub rank: usize,
    pub count: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Instances whose generation or preconditions failed.
    pub precondition_errors: Vec<String>,
    pub statements: Vec<StatementAggregate>,
    /// SHA-256 of the canonical report with this field empty.
    pub digest: String,
}

impl FuzzReport {
    pub fn statement(&self, id: StatementId) -> Option<&StatementAggregate> {
        self.statements.iter().find(|s| s.statement == id)
    }

    pub fn is_clean(&self) -> bool {
        self.precondition_errors.is_empty() && self.statements.iter().all(StatementAggregate::is_clean)
    }

    fn seal(mut self) -> Self {
        self.digest.clear();
        self.digest = sha256_hex(&to_canonical_json(&self));
        self
    }
}

fn evaluate_fuzz_instance(
    signature: &AlgebraSignature,
    rank: usize,
    seed: u64,
    index: u64,
    tol: &Tolerances,
) -> std::result::Result<(InequalityReport, Morphism, Morphism, State), String> {
    let (a, b, x) = fuzz_instance(signature, rank, seed, index).map_err(|e| format!("instance {index}: {e}"))?;
    let report = verify_instance(&a, &b, &x, tol).map_err(|e| format!("instance {index}: {e}"))?;
    Ok((report, a, b, x))
}

/// Runs `count` seeded instances and aggregates per-statement results in index order.
pub fn fuzz(signature: &AlgebraSignature, rank: usize, count: usize, seed: u64, tol: &Tolerances) -> Result<FuzzReport> {
    if count == 0 {
        return Err(Error::InvalidInput("fuzz count must be at least 1".into()));
    }
    if rank == 0 {
        return Err(Error::InvalidInput("rank must be at least 1".into()));
    }
    let indices: Vec<u64> = (0..count as u64).collect();
    let eval = |&i: &u64| evaluate_fuzz_instance(signature, rank, seed, i, tol);
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        indices.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = indices.iter().map(eval).collect();

    let mut aggregates: Vec<StatementAggregate> =
        StatementId::ALL.into_iter().map(StatementAggregate::new).collect();
    let mut precondition_errors = Vec::new();
    for (index, result) in indices.into_iter().zip(results) {
        let (report, a, b, x) = match result {
            Ok(r) => r,
            Err(e) => {
                precondition_errors.push(e);
                continue;
            }
        };
        let payload = || {
            let provenance = Provenance {
                seed: Some(seed),
                index: Some(index),
                source: Some("fuzz".into()),
            };
            let mut file = InstanceFile::from_parts(&a, &b, x.vector(), true, Some(provenance));
            file.tolerances = Some(*tol);
            file
        };
        for (agg, row) in aggregates.iter_mut().zip(&report.rows) {
            debug_assert_eq!(agg.statement, row.statement);
            match &row.evaluation {
                Evaluation::NotApplicable { .. } => agg.not_applicable += 1,
                Evaluation::Failed { reason, .. } => {
                    agg.failed_evaluations += 1;
                    if agg.first_failure.is_none() {
                        agg.first_failure = Some(FailureRecord {
                            index,
                            reason: reason.clone(),
                            instance: payload(),
                        });
                    }
                }
                Evaluation::Evaluated {
                    margin,
                    verdict,
                    identities,
                    identities_hold,
                    ..
                } => {
                    agg.evaluated += 1;
                    if agg.min_margin.is_none_or(|m| *margin < m) {
                        agg.min_margin = Some(*margin);
                        agg.min_margin_index = Some(index);
                    }
                    if !verdict {
                        agg.violations += 1;
                        if agg.worst_violation.as_ref().is_none_or(|v| *margin < v.margin) {
                            agg.worst_violation = Some(ViolationRecord {
                                index,
                                margin: *margin,
                                instance: payload(),
                            });
                        }
                    }
                    if !identities_hold {
                        agg.identity_failures += 1;
                        if agg.first_identity_failure.is_none() {
                            let failing: Vec<_> = identities
                                .iter()
                                .filter(|c| !c.holds)
                                .map(|c| format!("{} (residual {:.3e})", c.relation, c.residual))
                                .collect();
                            agg.first_identity_failure = Some(FailureRecord {
                                index,
                                reason: failing.join("; "),
                                instance: payload(),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(FuzzReport {
        signature: signature.clone(),
        rank,
        count,
        seed,
        tolerances: *tol,
        precondition_errors,
        statements: aggregates,
        digest: String::new(),
    }
    .seal())
}
