//! Attractor covers by iterating the Hutchinson operator from a bounded seed.

use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use rustc_hash::{FxHashMap, FxHasher};

use super::cellset::{CellSet, Codec};
use super::hausdorff::hausdorff_distance;
use super::image::{box_keys, hutchinson_step, image_keys, isotropic_radius, CollarRule};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::maps::{AffineMap, Body, ContractionMap, ContractionModulus, SelfMap, TranslatedMap};

/// Iterates kept for the block comparison.
const HISTORY: usize = 4;
/// Maximum word length when seeding from images of the bound ball.
const MAX_WORD_DEPTH: usize = 96;
/// Bound-ball covers with at most this many cells are rasterised directly.
const DIRECT_BALL_CELLS: f64 = 262_144.0;
/// Largest `cells × words` product spent on the tightening pass.
pub const TIGHTEN_BUDGET: usize = 1 << 23;
const MAX_TIGHTEN_LENGTH: u32 = 16;

#[derive(Clone, Debug)]
pub struct AttractorOptions {
    pub max_iterations: usize,
    pub max_cells: usize,
    /// Starting cover. When absent the bound ball (or a cover of its images
    /// under words of the system) is used.
    pub seed: Option<CellSet>,
    /// Re-cover the converged iterate by images of its cells under all words
    /// of a fixed length, which removes the outward drift that per-step
    /// rounding accumulates. Affine pairs with single-step rates only, and
    /// only when the work fits [`TIGHTEN_BUDGET`].
    pub tighten: bool,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        AttractorOptions {
            max_iterations: 4096,
            max_cells: 4_000_000,
            seed: None,
            tighten: true,
        }
    }
}

/// A cell cover of the attractor of `{f, g_w}` with its error bound.
#[derive(Clone, Debug)]
pub struct AttractorApprox {
    pub cover: CellSet,
    /// Hausdorff error bound between the cell centres and the attractor. It
    /// is never below `max(tol, α/(1−α)·last_step) + ε√d` and also accounts
    /// for the outward drift of the outer covers.
    pub err: f64,
    pub tol: f64,
    /// Contraction rate of one iteration block, `None` for tabulated moduli.
    pub rate: Option<f64>,
    pub iterations: usize,
    /// Set when the stopping rule could not be backed by a Banach estimate.
    pub heuristic: bool,
    /// Hausdorff distance between the last two compared iterates.
    pub last_step: f64,
    /// Word length of the tightening pass, 0 when it did not run.
    pub tightened: u32,
    pub f: ContractionMap,
    pub gw: TranslatedMap,
}

impl AttractorApprox {
    pub fn eps(&self) -> f64 {
        self.cover.eps()
    }

    pub fn dim(&self) -> usize {
        self.cover.dim()
    }
}

pub fn attractor_approx(f: &ContractionMap, gw: &TranslatedMap, eps: f64, tol: f64) -> Result<AttractorApprox> {
    attractor_approx_with(f, gw, eps, tol, &AttractorOptions::default())
}

pub fn attractor_approx_with(
    f: &ContractionMap,
    gw: &TranslatedMap,
    eps: f64,
    tol: f64,
    opts: &AttractorOptions,
) -> Result<AttractorApprox> {
    check_dim(f.dim(), gw.dim())?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let steps = f.modulus().block_steps();
    if gw.modulus().block_steps() != steps {
        return Err(Error::InvalidArgument(
            "both maps must contract over the same number of steps".into(),
        ));
    }
    let rate = match (f.modulus().banach_rate(), gw.modulus().banach_rate()) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    let threshold = match rate {
        Some(a) if a > 0.0 => tol * (1.0 - a) / a,
        Some(_) => f64::INFINITY,
        None => tol,
    };

    let mut current = match &opts.seed {
        Some(s) => {
            check_dim(f.dim(), s.dim())?;
            if s.eps() != eps {
                return Err(Error::InvalidArgument("seed cover resolution differs from eps".into()));
            }
            s.clone()
        }
        None => ball_seed(f, gw, eps, opts.max_cells)?,
    };

    // The discrete operator acts on a finite lattice, so its orbit is
    // eventually periodic; a repeated fingerprint marks the cycle.
    let mut seen: FxHashMap<u64, usize> = FxHashMap::default();
    seen.insert(fingerprint(&current), 0);
    // history[0] is the newest iterate.
    let mut history: VecDeque<CellSet> = VecDeque::new();
    let keep = steps.max(HISTORY);
    let mut last_step = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let next = hutchinson_step(f, gw, &current)?;
        if next.len() > opts.max_cells {
            return Err(Error::BudgetExhausted(format!(
                "attractor cover grew to {} cells (limit {})",
                next.len(),
                opts.max_cells
            )));
        }
        history.push_front(current);
        history.truncate(keep);
        current = next;
        let cycled = seen.insert(fingerprint(&current), it).is_some();
        if history.len() < steps {
            continue;
        }
        let before = &history[steps - 1];
        last_step = hausdorff_distance(before, &current)?;
        if last_step <= threshold || (cycled && rate.is_some()) {
            let floor = finish_err(rate, tol, last_step, eps, f.dim());
            let mut err = floor;
            let mut tightened = 0;
            if let Some(a) = rate {
                let honest = drift_err(f, gw, a, last_step, eps);
                err = err.max(honest);
                if opts.tighten && opts.seed.is_none() && steps == 1 {
                    if let Some((cover, m, bound)) = tighten(f, gw, &current, honest)? {
                        current = cover;
                        tightened = m;
                        err = floor.max(bound);
                    }
                }
            }
            return Ok(AttractorApprox {
                cover: current,
                err,
                tol,
                rate,
                iterations: it,
                heuristic: rate.is_none(),
                last_step,
                tightened,
                f: f.clone(),
                gw: gw.clone(),
            });
        }
        if cycled {
            break;
        }
    }
    Err(Error::BudgetExhausted(format!(
        "attractor iteration did not settle within {} steps (last step {last_step:.3e})",
        opts.max_iterations
    )))
}

fn fingerprint(s: &CellSet) -> u64 {
    let mut h = FxHasher::default();
    s.keys().hash(&mut h);
    h.finish()
}

fn finish_err(rate: Option<f64>, tol: f64, last_step: f64, eps: f64, dim: usize) -> f64 {
    let collar = eps * (dim as f64).sqrt();
    match rate {
        Some(a) if a > 0.0 => tol.max(a / (1.0 - a) * last_step) + collar,
        _ => tol + collar,
    }
}

/// Bound on the distance between the centres of one outer-cover step and
/// the exact images of the previous centres.
fn step_drift<M: SelfMap + ?Sized>(m: &M, eps: f64) -> f64 {
    let d = m.dim();
    let half_diag = eps * (d as f64).sqrt() / 2.0;
    match m.affine_form() {
        Some(a) => {
            let l = a.linear_part();
            let e: f64 = l
                .row_iter()
                .map(|row| {
                    let h = 0.5 * eps * row.iter().map(|v| v.abs()).sum::<f64>();
                    h * h
                })
                .sum::<f64>()
                .sqrt();
            e + half_diag
        }
        None => half_diag + isotropic_radius(m, eps) as f64 * 2.0 * half_diag,
    }
}

/// Error of the returned iterate from the a posteriori Banach estimate
/// applied to cell centres: with per-block drift `δ`, the previous iterate
/// is within `r = (last_step + δ)/(1 − α)` of the attractor and the
/// returned one within `α·r + δ`.
fn drift_err(f: &ContractionMap, gw: &TranslatedMap, rate: f64, last_step: f64, eps: f64) -> f64 {
    let steps = f.modulus().block_steps();
    let lip = f
        .modulus()
        .step_bound()
        .unwrap_or(rate)
        .max(gw.modulus().step_bound().unwrap_or(rate));
    let delta = step_drift(f, eps).max(step_drift(gw, eps));
    let block: f64 = (0..steps).map(|j| lip.powi(j as i32)).sum::<f64>() * delta;
    let r = (last_step + block) / (1.0 - rate);
    rate * r + block
}

/// Covers `⋃_{|u| = m} F_u(⋃ boxes of s)` with `m` the shortest word length
/// that brings the drift below a quarter cell diagonal. Returns the cover,
/// `m` and its error bound, or `None` when the pair is not affine or the
/// work would exceed the budget.
fn tighten(f: &ContractionMap, gw: &TranslatedMap, s: &CellSet, r: f64) -> Result<Option<(CellSet, u32, f64)>> {
    let (Some(af), Some(ag)) = (f.affine_form(), gw.affine_form()) else {
        return Ok(None);
    };
    let rate = linalg::spectral_norm_upper(af.linear_part()).max(linalg::spectral_norm_upper(ag.linear_part()));
    if !(rate > 0.0 && rate < 1.0) {
        return Ok(None);
    }
    let eps = s.eps();
    let half_diag = eps * (s.dim() as f64).sqrt() / 2.0;
    let target = half_diag / 2.0;
    let mut m = 1u32;
    while rate.powi(m as i32) * (r + half_diag) > target {
        m += 1;
        if m > MAX_TIGHTEN_LENGTH {
            return Ok(None);
        }
    }
    if s.len().saturating_mul(1usize << m) > TIGHTEN_BUDGET {
        return Ok(None);
    }
    let mut words = vec![AffineMap::new(linalg::identity(s.dim()), Vector::zeros(s.dim()))?];
    for _ in 0..m {
        words = words.iter().flat_map(|w| [af.compose(w), ag.compose(w)]).collect();
    }
    let mut keys = Vec::new();
    let mut bound: f64 = 0.0;
    for w in words {
        let a = linalg::spectral_norm_upper(w.linear_part());
        let map = ContractionMap::from_parts(Body::Affine(w), ContractionModulus::Linear { rate: a });
        bound = bound.max(a * r + step_drift(&map, eps) - half_diag);
        image_keys(&map, s, CollarRule::Enclosure, &mut keys)?;
    }
    Ok(Some((CellSet::from_keys(s.dim(), eps, keys)?, m, bound + half_diag)))
}

fn origin_norm<M: SelfMap + ?Sized>(m: &M) -> Result<f64> {
    let d = m.dim();
    let mut out = vec![0.0; d];
    m.eval_into(&vec![0.0; d], &mut out);
    if !linalg::all_finite(&out) {
        return Err(Error::NonFinite("map value at the origin".into()));
    }
    Ok(out.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Radius of a closed ball about the origin that contains the attractor of
/// `{f, g_w}`: `(‖f(0)‖ + ‖g(0)‖ + ‖w‖ + 1)·S/(1 − α)` where `S` sums the
/// single-step bounds over one block. For tabulated moduli the radius is
/// doubled until both maps send the ball into itself.
pub fn bound_radius(f: &ContractionMap, gw: &TranslatedMap) -> Result<f64> {
    let cf = origin_norm(f)?;
    let cg = origin_norm(gw.base())?;
    let cw = gw.shift().norm();
    let numer = cf + cg + cw + 1.0;
    let radius = match (f.modulus(), gw.modulus()) {
        (ContractionModulus::Tabulated(_), _) | (_, ContractionModulus::Tabulated(_)) => {
            let c_gw = origin_norm(gw)?;
            let mut r = numer;
            let mut found = None;
            for _ in 0..128 {
                if f.modulus().phi(r) + cf <= r && gw.modulus().phi(r) + c_gw <= r {
                    found = Some(r);
                    break;
                }
                r *= 2.0;
            }
            found.ok_or_else(|| {
                Error::InvalidArgument("no invariant ball found for the tabulated modulus".into())
            })?
        }
        (a, b) => {
            let rate = a.banach_rate().unwrap_or(0.0).max(b.banach_rate().unwrap_or(0.0));
            let lip = a.step_bound().unwrap_or(0.0).max(b.step_bound().unwrap_or(0.0));
            let steps = a.block_steps();
            let s: f64 = (0..steps).map(|j| lip.powi(j as i32)).sum();
            numer * s / (1.0 - rate)
        }
    };
    if !radius.is_finite() {
        return Err(Error::NonFinite("attractor bound radius".into()));
    }
    Ok(radius)
}

/// A cover of a set containing the attractor. In low dimension the bound
/// ball is rasterised; otherwise the images of the ball under words of the
/// system are enclosed in boxes, and words are extended until their boxes
/// span only a few cells.
pub(crate) fn ball_seed(f: &ContractionMap, gw: &TranslatedMap, eps: f64, max_cells: usize) -> Result<CellSet> {
    let d = f.dim();
    let radius = bound_radius(f, gw)?;
    let ball_cells = (2.0 * radius / eps + 2.0).powi(d as i32);
    if ball_cells <= DIRECT_BALL_CELLS.min(max_cells as f64) {
        return CellSet::cover_ball(&vec![0.0; d], radius, eps);
    }
    let codec = Codec::new(d)?;
    let h_stop = (eps / 4.0).max(eps * (64f64.powf(1.0 / d as f64) - 1.0) / 2.0);
    let mut keys = Vec::new();
    let maps: [&dyn SelfMap; 2] = [f, gw];
    match (f.affine_form(), gw.affine_form()) {
        (Some(af), Some(ag)) => {
            let lin = [af.linear_part().clone(), ag.linear_part().clone()];
            let mut stack = vec![(linalg::identity(d), vec![0.0; d], 0usize)];
            while let Some((a, c, depth)) = stack.pop() {
                let half = row_extents(&a, radius);
                let widest = half.iter().cloned().fold(0.0, f64::max);
                if widest <= h_stop || depth >= MAX_WORD_DEPTH {
                    box_keys(&codec, &c, &half, eps, &mut keys)?;
                    guard(&keys, max_cells)?;
                    continue;
                }
                for (m, l) in maps.iter().zip(&lin) {
                    let mut nc = vec![0.0; d];
                    m.eval_into(&c, &mut nc);
                    stack.push((l * &a, nc, depth + 1));
                }
            }
        }
        _ => {
            let mods = [f.modulus(), gw.modulus()];
            let mut stack = vec![(radius, vec![0.0; d], 0usize)];
            while let Some((r, c, depth)) = stack.pop() {
                if r <= h_stop || depth >= MAX_WORD_DEPTH {
                    box_keys(&codec, &c, &vec![r; d], eps, &mut keys)?;
                    guard(&keys, max_cells)?;
                    continue;
                }
                for (m, md) in maps.iter().zip(mods) {
                    let mut nc = vec![0.0; d];
                    m.eval_into(&c, &mut nc);
                    if !linalg::all_finite(&nc) {
                        return Err(Error::NonFinite("seed word centre".into()));
                    }
                    stack.push((md.phi(r), nc, depth + 1));
                }
            }
        }
    }
    CellSet::from_keys(d, eps, keys)
}

fn row_extents(a: &Matrix, radius: f64) -> Vec<f64> {
    a.row_iter().map(|row| radius * row.norm()).collect()
}

fn guard(keys: &[u128], max_cells: usize) -> Result<()> {
    if keys.len() > max_cells.saturating_mul(4) {
        return Err(Error::BudgetExhausted(format!(
            "seed cover exceeded {} cells",
            max_cells
        )));
    }
    Ok(())
}
