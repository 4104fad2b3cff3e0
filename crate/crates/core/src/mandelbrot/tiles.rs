use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::maps::{AffineMap, Body, ContractionMap, ContractionModulus};

/// Largest power tried when looking for a contracting power of `A⁻¹`.
pub const MAX_POWER: usize = 32;
const EIGEN_MARGIN: f64 = 1e-9;

/// Expanding integer matrix `A` and digits `d_1..d_k`; the tile `T` solves
/// `A(T) = ⋃ (T + d_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileSpec {
    pub matrix: Vec<Vec<f64>>,
    pub digits: Vec<Vec<f64>>,
}

impl TileSpec {
    pub fn new(matrix: Vec<Vec<f64>>, digits: Vec<Vec<f64>>) -> Self {
        TileSpec { matrix, digits }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn a(&self) -> Result<Matrix> {
        linalg::matrix_from_rows(&self.matrix)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.a()?;
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidArgument("tile matrix must be square".into()));
        }
        if a.iter().any(|v| (v - v.round()).abs() > 1e-9) {
            return Err(Error::InvalidArgument("tile matrix must have integer entries".into()));
        }
        if self.digits.len() < 2 {
            return Err(Error::InvalidArgument("a tile needs at least two digits".into()));
        }
        for dgt in &self.digits {
            if dgt.len() != a.nrows() {
                return Err(Error::DimensionMismatch { expected: a.nrows(), got: dgt.len() });
            }
            if !linalg::all_finite(dgt) {
                return Err(Error::NonFinite("tile digit".into()));
            }
        }
        let smallest = a
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min);
        if !(smallest > 1.0 + EIGEN_MARGIN) {
            return Err(Error::InvalidArgument(format!(
                "tile matrix is not expanding: smallest eigenvalue modulus {smallest}"
            )));
        }
        Ok(())
    }
}

/// Smallest `m ≤ 32` with `‖B^m‖ < 1`, and that norm.
pub fn contracting_power(b: &Matrix) -> Result<(usize, f64)> {
    let mut p = b.clone();
    for m in 1..=MAX_POWER {
        let n = linalg::spectral_norm_upper(&p);
        if n < 1.0 {
            return Ok((m, n));
        }
        p = &p * b;
    }
    Err(Error::NotContractive(MAX_POWER))
}

/// The maps `x ↦ A⁻¹x + A⁻¹d_i`. When `A⁻¹` itself is not a contraction the
/// maps carry an eventual modulus over `m` steps and attractor iteration
/// proceeds in blocks of `m`.
pub fn tile_ifs(spec: &TileSpec) -> Result<Vec<ContractionMap>> {
    spec.validate()?;
    let a = spec.a()?;
    let d = a.nrows();
    let b = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("tile matrix".into()))?;
    let (m, rate) = contracting_power(&b)?;
    let modulus = if m == 1 {
        ContractionModulus::linear(rate)?
    } else {
        ContractionModulus::Eventual { steps: m, rate, step_bound: linalg::spectral_norm_upper(&b) }
    };
    spec.digits
        .iter()
        .map(|dgt| {
            let offset = &b * Vector::from_column_slice(dgt);
            debug_assert_eq!(offset.len(), d);
            let map = AffineMap::new(b.clone(), offset)?;
            Ok(ContractionMap::from_parts(Body::Affine(map), modulus.clone()))
        })
        .collect()
}
