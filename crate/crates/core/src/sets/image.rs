//! Images of cell covers under maps, and the Hutchinson operator on covers.

use rayon::prelude::*;

use super::cellset::{cell_of, push_box, CellSet, Codec};
use crate::error::{check_dim, Result};
use crate::maps::{Kernel, SelfMap};

const PAR_CHUNK: usize = 4096;

/// How the image of one cell box is enclosed by cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollarRule {
    /// The cell of the mapped center plus every cell within Chebyshev index
    /// radius `⌈(φ(ε√d/2) + ε√d/2)/ε⌉`. Needs only the modulus.
    Isotropic,
    /// Every cell meeting the axis-aligned bounding box of `L·box + b`,
    /// whose half-extent on axis `k` is `(ε/2)·Σ_j |L_kj|`. Affine maps only.
    Enclosure,
}

impl CollarRule {
    pub fn for_map<M: SelfMap + ?Sized>(m: &M) -> Self {
        if m.affine_form().is_some() {
            CollarRule::Enclosure
        } else {
            CollarRule::Isotropic
        }
    }
}

/// Chebyshev radius of the isotropic collar at resolution `eps`.
pub fn isotropic_radius<M: SelfMap + ?Sized>(m: &M, eps: f64) -> i64 {
    let half_diag = eps * (m.dim() as f64).sqrt() / 2.0;
    ((m.modulus().phi(half_diag) + half_diag) / eps).ceil() as i64
}

/// A cell set at the same resolution whose boxes contain `m` applied to the
/// boxes of `s`.
pub fn image_cellset<M: SelfMap + ?Sized>(m: &M, s: &CellSet) -> Result<CellSet> {
    image_cellset_with(m, s, CollarRule::for_map(m))
}

pub fn image_cellset_with<M: SelfMap + ?Sized>(m: &M, s: &CellSet, rule: CollarRule) -> Result<CellSet> {
    let mut keys = Vec::new();
    image_keys(m, s, rule, &mut keys)?;
    CellSet::from_keys(s.dim(), s.eps(), keys)
}

/// `F(S) = f(S) ∪ g_w(S)` on covers.
pub fn hutchinson_step<F, G>(f: &F, gw: &G, s: &CellSet) -> Result<CellSet>
where
    F: SelfMap + ?Sized,
    G: SelfMap + ?Sized,
{
    let mut keys = Vec::new();
    image_keys(f, s, CollarRule::for_map(f), &mut keys)?;
    image_keys(gw, s, CollarRule::for_map(gw), &mut keys)?;
    CellSet::from_keys(s.dim(), s.eps(), keys)
}

pub(crate) fn image_keys<M: SelfMap + ?Sized>(
    m: &M,
    s: &CellSet,
    rule: CollarRule,
    out: &mut Vec<u128>,
) -> Result<()> {
    check_dim(m.dim(), s.dim())?;
    let kernel = m.kernel();
    let rule = match (&kernel, rule) {
        (Kernel::Opaque { .. }, _) => CollarRule::Isotropic,
        (_, r) => r,
    };
    let eps = s.eps();
    let dim = s.dim();
    let extents: Vec<f64> = match (&kernel, rule) {
        (Kernel::Affine { d, l, .. }, CollarRule::Enclosure) => (0..*d)
            .map(|k| 0.5 * eps * l[k * d..(k + 1) * d].iter().map(|v| v.abs()).sum::<f64>())
            .collect(),
        _ => Vec::new(),
    };
    let radius = isotropic_radius(m, eps);
    let codec = s.codec();
    let work = |chunk: &[u128]| -> Result<Vec<u128>> {
        let mut local = Vec::with_capacity(chunk.len() * 4);
        let mut idx = vec![0i64; dim];
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        let mut ranges = vec![(0i64, 0i64); dim];
        for &key in chunk {
            codec.decode(key, &mut idx);
            for (xi, &i) in x.iter_mut().zip(&idx) {
                *xi = (i as f64 + 0.5) * eps;
            }
            kernel.eval(&x, &mut y);
            enclose(&y, eps, rule, &extents, radius, &mut ranges)?;
            push_box(&codec, &ranges, &mut local)?;
        }
        Ok(local)
    };
    if s.len() <= PAR_CHUNK {
        out.extend(work(s.keys())?);
    } else {
        let parts: Vec<Vec<u128>> = s
            .keys()
            .par_chunks(PAR_CHUNK)
            .map(work)
            .collect::<Result<_>>()?;
        for p in parts {
            out.extend(p);
        }
    }
    Ok(())
}

#[inline]
fn enclose(
    y: &[f64],
    eps: f64,
    rule: CollarRule,
    extents: &[f64],
    radius: i64,
    ranges: &mut [(i64, i64)],
) -> Result<()> {
    match rule {
        CollarRule::Enclosure => {
            for ((r, &c), &e) in ranges.iter_mut().zip(y).zip(extents) {
                *r = (cell_of(c - e, eps)?, cell_of(c + e, eps)?);
            }
        }
        CollarRule::Isotropic => {
            for (r, &c) in ranges.iter_mut().zip(y) {
                let j = cell_of(c, eps)?;
                *r = (j - radius, j + radius);
            }
        }
    }
    Ok(())
}

/// Keys of all cells meeting the box `center ± half` (per-axis half-extents).
pub(crate) fn box_keys(codec: &Codec, center: &[f64], half: &[f64], eps: f64, out: &mut Vec<u128>) -> Result<()> {
    let ranges = center
        .iter()
        .zip(half)
        .map(|(&c, &h)| Ok((cell_of(c - h, eps)?, cell_of(c + h, eps)?)))
        .collect::<Result<Vec<_>>>()?;
    push_box(codec, &ranges, out)
}
