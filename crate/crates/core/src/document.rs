//! JSON state documents.
//!
//! A document is an object with exactly one of the keys `matrix`, `fano` or
//! `named`:
//!
//! ```json
//! {"matrix": [[[0.25, 0.0], [0.0, 0.0], ...], ...]}
//! {"fano": {"a": [0, 0, 0], "b": [0, 0, 0], "T": [[-0.8, 0, 0], [0, -0.8, 0], [0, 0, -0.8]]}}
//! {"named": {"werner": 0.8}}
//! {"named": {"bell": "phi+"}}
//! {"named": {"canonical": {"a": [0, 0, 0], "b": [0, 0, 0], "c": [-0.5, -0.5, -0.5]}}}
//! ```
//!
//! Matrices are row-major with each entry a `[re, im]` pair.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{BellState, DensityMatrix, FanoForm, Mat4};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StateDocument {
    Matrix([[[f64; 2]; 4]; 4]),
    Fano(FanoForm),
    Named(NamedState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum NamedState {
    Werner(f64),
    Bell(BellState),
    Canonical(CanonicalParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalParams {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
}

impl StateDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidDocument(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state documents always serialize")
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        let mut entries = [[[0.0; 2]; 4]; 4];
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                let z = rho.entry(r, c);
                *e = [z.re, z.im];
            }
        }
        StateDocument::Matrix(entries)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        match self {
            StateDocument::Matrix(entries) => {
                DensityMatrix::new(Mat4::from_fn(|r, c| Complex64::new(entries[r][c][0], entries[r][c][1])))
            }
            StateDocument::Fano(f) => f.compose(),
            StateDocument::Named(NamedState::Werner(w)) => DensityMatrix::werner(*w),
            StateDocument::Named(NamedState::Bell(which)) => Ok(DensityMatrix::bell(*which)),
            StateDocument::Named(NamedState::Canonical(p)) => {
                FanoForm::canonical(Vector3::from(p.a), Vector3::from(p.b), Vector3::from(p.c))?.compose()
            }
        }
    }
}
