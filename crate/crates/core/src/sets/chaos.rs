//! Random-orbit approximation of an attractor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::maps::{fixed_point, ContractionMap, SelfMap, TranslatedMap};

pub const BURN_IN: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<f64>,
    seed: u64,
}

impl PointCloud {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Points stored flat, `len() × dim()`.
    pub fn flat(&self) -> &[f64] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.dim)
    }

    /// One point per line, coordinates `x0,x1,...` in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Orbit of a fair coin choice between `f` and `g_w`, started at the fixed
/// point of `f`, with the first [`BURN_IN`] points discarded.
pub fn chaos_game(f: &ContractionMap, gw: &TranslatedMap, n: usize, seed: u64) -> Result<PointCloud> {
    check_dim(f.dim(), gw.dim())?;
    if n == 0 {
        return Err(Error::InvalidArgument("chaos game needs at least one point".into()));
    }
    let d = f.dim();
    let start = fixed_point(f, 1e-12)?;
    let mut x = start.as_slice().to_vec();
    let mut y = vec![0.0; d];
    let (kf, kg) = (f.kernel(), gw.kernel());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n * d);
    for k in 0..n + BURN_IN {
        if rng.random::<bool>() {
            kf.eval(&x, &mut y);
        } else {
            kg.eval(&x, &mut y);
        }
        std::mem::swap(&mut x, &mut y);
        if !linalg::all_finite(&x) {
            return Err(Error::NonFinite("chaos game orbit".into()));
        }
        if k >= BURN_IN {
            points.extend_from_slice(&x);
        }
    }
    Ok(PointCloud { dim: d, points, seed })
}
