//! Instance files and canonical JSON.
//!
//! One schema is shared by `verify` inputs, fuzz violation payloads and
//! explorer outputs, so any configuration the tools report can be replayed.
//!
//! ```json
//! {
//!   "A": {"cells": [[{"blocks": [[[re, im], ...], ...]}, ...], ...]},
//!   "B": {"cells": ...},
//!   "provenance": {"index": 3, "seed": 7, "source": "fuzz"},
//!   "rank": 2,
//!   "signature": [2, 1],
//!   "state": {"entries": [{"blocks": ...}, ...], "normalized": true},
//!   "tolerances": {"identity": 1e-10, "normalization": 1e-10, "verdict": 1e-8}
//! }
//! ```
//!
//! Canonical output sorts object keys and writes every float with 17
//! significant digits (`{:.16e}`), which round-trips `f64` exactly.

use std::io;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::algebra::{AlgebraElement, AlgebraSignature, Block, C64};
use crate::error::{Error, Result};
use crate::hilbert_module::{normalize, ModuleElement, State};
use crate::morphism::Morphism;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementPayload {
    /// One row-major matrix per block; entries are `[re, im]`.
    pub blocks: Vec<Vec<Vec<[f64; 2]>>>,
}

impl From<&AlgebraElement> for ElementPayload {
    fn from(a: &AlgebraElement) -> Self {
        let blocks = a
            .blocks()
            .iter()
            .map(|b| {
                (0..b.nrows())
                    .map(|r| (0..b.ncols()).map(|c| [b[(r, c)].re, b[(r, c)].im]).collect())
                    .collect()
            })
            .collect();
        Self { blocks }
    }
}

impl ElementPayload {
    pub fn to_element(&self, signature: &AlgebraSignature, path: &str) -> Result<AlgebraElement> {
        if self.blocks.len() != signature.block_count() {
            return Err(Error::InvalidInput(format!(
                "{path}: expected {} blocks for signature {signature}, got {}",
                signature.block_count(),
                self.blocks.len()
            )));
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (s, (rows, &d)) in self.blocks.iter().zip(signature.block_dims()).enumerate() {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidInput(format!("{path}.blocks[{s}]: expected a {d}×{d} matrix")));
            }
            if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("{path}.blocks[{s}]: non-finite entry")));
            }
            blocks.push(Block::from_fn(d, d, |r, c| C64::new(rows[r][c][0], rows[r][c][1])));
        }
        AlgebraElement::from_blocks(signature.clone(), blocks)
    }
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ElementPayload::from(self).serialize(serializer)
    }
}

impl Serialize for ModuleElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ModulePayload::from(self).serialize(serializer)
    }
}

impl Serialize for Morphism {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MorphismPayload::from(self).serialize(serializer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulePayload {
    pub entries: Vec<ElementPayload>,
}

impl From<&ModuleElement> for ModulePayload {
    fn from(x: &ModuleElement) -> Self {
        Self {
            entries: x.entries().iter().map(ElementPayload::from).collect(),
        }
    }
}

impl ModulePayload {
    pub fn to_module(&self, signature: &AlgebraSignature, path: &str) -> Result<ModuleElement> {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| e.to_element(signature, &format!("{path}.entries[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        ModuleElement::new(signature.clone(), entries)
            .map_err(|e| Error::InvalidInput(format!("{path}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatePayload {
    pub entries: Vec<ElementPayload>,
    /// Whether `entries` already satisfy `⟨x,x⟩ = 1`.
    pub normalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismPayload {
    pub cells: Vec<Vec<ElementPayload>>,
}

impl From<&Morphism> for MorphismPayload {
    fn from(m: &Morphism) -> Self {
        Self {
            cells: m.rows().map(|row| row.iter().map(ElementPayload::from).collect()).collect(),
        }
    }
}

impl MorphismPayload {
    pub fn to_morphism(&self, signature: &AlgebraSignature, rank: usize, path: &str) -> Result<Morphism> {
        if self.cells.len() != rank || self.cells.iter().any(|r| r.len() != rank) {
            return Err(Error::InvalidInput(format!("{path}.cells: expected a {rank}×{rank} array")));
        }
        let cells = self
            .cells
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, c)| c.to_element(signature, &format!("{path}.cells[{i}][{j}]")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Morphism::from_cells(signature.clone(), cells)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub signature: Vec<usize>,
    pub rank: usize,
    pub state: StatePayload,
    #[serde(rename = "A")]
    pub a: MorphismPayload,
    #[serde(rename = "B")]
    pub b: MorphismPayload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// A validated instance: self-adjoint `A`, `B` and a normalized state.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub a: Morphism,
    pub b: Morphism,
    pub state: State,
    pub tolerances: Tolerances,
    pub provenance: Option<Provenance>,
}

impl InstanceFile {
    pub fn from_parts(
        a: &Morphism,
        b: &Morphism,
        state: &ModuleElement,
        normalized: bool,
        provenance: Option<Provenance>,
    ) -> Self {
        Self {
            signature: state.signature().block_dims().to_vec(),
            rank: state.rank(),
            state: StatePayload {
                entries: ModulePayload::from(state).entries,
                normalized,
            },
            a: MorphismPayload::from(a),
            b: MorphismPayload::from(b),
            tolerances: None,
            provenance,
        }
    }

    pub fn from_instance(instance: &Instance) -> Self {
        let mut file = Self::from_parts(
            &instance.a,
            &instance.b,
            instance.state.vector(),
            true,
            instance.provenance.clone(),
        );
        file.tolerances = Some(instance.tolerances);
        file
    }

    pub fn parse(text: &str) -> Result<Self> {
        from_json_str(text)
    }

    pub fn signature(&self) -> Result<AlgebraSignature> {
        AlgebraSignature::new(self.signature.clone()).map_err(|e| Error::InvalidInput(format!("signature: {e}")))
    }

    /// Operators only, without touching the state.
    pub fn operators(&self) -> Result<(Morphism, Morphism)> {
        let signature = self.signature()?;
        if self.rank == 0 {
            return Err(Error::InvalidInput("rank must be at least 1".into()));
        }
        let a = self.a.to_morphism(&signature, self.rank, "A")?;
        let b = self.b.to_morphism(&signature, self.rank, "B")?;
        for (name, m) in [("A", &a), ("B", &b)] {
            m.ensure_selfadjoint()
                .map_err(|e| Error::InvalidInput(format!("{name} is not self-adjoint: {e}")))?;
        }
        Ok((a, b))
    }

    /// Validates shapes, self-adjointness and the state.
    ///
    /// `normalize_state` overrides the file's `normalized` flag: when the
    /// effective choice is not to normalize, the supplied state must already
    /// satisfy `⟨x,x⟩ = 1` within the normalization tolerance.
    pub fn resolve(&self, normalize_state: Option<bool>, base: Tolerances) -> Result<Instance> {
        let tolerances = self.tolerances.unwrap_or(base);
        tolerances.validate().map_err(Error::InvalidInput)?;
        let signature = self.signature()?;
        let (a, b) = self.operators()?;
        let vector = ModulePayload {
            entries: self.state.entries.clone(),
        }
        .to_module(&signature, "state")?;
        if vector.rank() != self.rank {
            return Err(Error::InvalidInput(format!(
                "state has {} entries but rank is {}",
                vector.rank(),
                self.rank
            )));
        }
        let state = if normalize_state.unwrap_or(!self.state.normalized) {
            normalize(&vector).map_err(|e| Error::InvalidInput(format!("state: {e}")))?
        } else {
            State::from_normalized(vector, tolerances.normalization)
                .map_err(|e| Error::InvalidInput(format!("state: {e}")))?
        };
        Ok(Instance {
            a,
            b,
            state,
            tolerances,
            provenance: self.provenance.clone(),
        })
    }
}

/// Writes floats as `{:.16e}`; everything else as compact JSON.
struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Canonical JSON: sorted keys, 17 significant digits, trailing newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    // Going through `Value` sorts object keys.
    let value = serde_json::to_value(value).expect("report types serialize infallibly");
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value.serialize(&mut ser).expect("writing to a Vec cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Hex SHA-256 of a string.
pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pauli;

    fn pauli_file() -> InstanceFile {
        let s = AlgebraSignature::scalar();
        let sx = Morphism::from_scalar_matrix(&[
            &[C64::new(0., 0.), C64::new(1., 0.)],
            &[C64::new(1., 0.), C64::new(0., 0.)],
        ])
        .unwrap();
        let sy = Morphism::from_scalar_matrix(&[
            &[C64::new(0., 0.), C64::new(0., -1.)],
            &[C64::new(0., 1.), C64::new(0., 0.)],
        ])
        .unwrap();
        InstanceFile::from_parts(&sx, &sy, &ModuleElement::basis(&s, 2, 0), true, None)
    }

    #[test]
    fn canonical_float_format() {
        let json = to_canonical_json(&serde_json::json!({"b": 0.1, "a": [1.0, -2.5e-300]}));
        assert_eq!(json, "{\"a\":[1.0000000000000000e0,-2.5000000000000000e-300],\"b\":1.0000000000000001e-1}\n");
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn instance_round_trip_is_byte_identical() {
        let text = to_canonical_json(&pauli_file());
        let parsed = InstanceFile::parse(&text).unwrap();
        assert_eq!(parsed, pauli_file());
        assert_eq!(to_canonical_json(&parsed), text);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut value = serde_json::to_value(pauli_file()).unwrap();
        value["extra"] = serde_json::json!(1);
        let err = InstanceFile::parse(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = InstanceFile::parse("{\n  \"signature\": [1],\n  \"rank\": }").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn resolve_checks_operators_and_state() {
        let inst = pauli_file().resolve(None, Tolerances::default()).unwrap();
        assert_eq!(inst.state.rank(), 2);

        let mut bad = pauli_file();
        bad.a.cells[0][1].blocks[0][0][0][0] = 2.0;
        let err = bad.resolve(None, Tolerances::default()).unwrap_err();
        assert!(err.to_string().contains("A is not self-adjoint"), "{err}");

        let mut unnormalized = pauli_file();
        unnormalized.state.entries[0].blocks[0][0][0][0] = 2.0;
        assert!(unnormalized.resolve(Some(false), Tolerances::default()).is_err());
        unnormalized.state.normalized = false;
        assert!(unnormalized.resolve(Some(false), Tolerances::default()).is_err());
        assert!(unnormalized.resolve(None, Tolerances::default()).is_ok());
        assert!(unnormalized.resolve(Some(true), Tolerances::default()).is_ok());

        let mut wrong_shape = pauli_file();
        wrong_shape.rank = 3;
        assert!(wrong_shape.resolve(None, Tolerances::default()).is_err());
    }

    #[test]
    fn element_payload_shape_errors_name_the_path() {
        let p = ElementPayload::from(&pauli::x());
        let err = p.to_element(&AlgebraSignature::new(vec![2, 1]).unwrap(), "A.cells[0][0]").unwrap_err();
        assert!(err.to_string().contains("A.cells[0][0]"));
    }
}
