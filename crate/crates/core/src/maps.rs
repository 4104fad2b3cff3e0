//! Contraction self-maps of ℝ^d: affine and named nonlinear bodies, their
//! moduli, fixed points, Lipschitz estimates and the partial-sum map
//! `h(w) = w + Lw + … + L^{n-1}w`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Slack used when comparing a map's displacement against its modulus.
pub const MATKOWSKI_SLACK: f64 = 1e-12;
/// Depth of the iterate check `φ⁽ⁿ⁾(t) → 0`.
pub const MATKOWSKI_DEPTH: usize = 64;
/// Default half-width of the sampling box used for modulus verification
/// and Lipschitz estimation.
pub const DEFAULT_SAMPLE_HALF_WIDTH: f64 = 10.0;

const FIXED_POINT_MAX_ITER: usize = 1_000_000;

pub type MapFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A nonlinear map body given by a host function, registered under a name.
#[derive(Clone)]
pub struct NamedBody {
    name: String,
    dim: usize,
    func: Arc<MapFn>,
}

impl NamedBody {
    pub fn new<F>(name: impl Into<String>, dim: usize, func: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        NamedBody {
            name: name.into(),
            dim,
            func: Arc::new(func),
        }
    }

    /// Builtin bodies available from config files.
    ///
    /// * `sin_half`: `x_i ↦ sin(x_i)/2`
    /// * `tanh_half`: `x_i ↦ tanh(x_i)/2`
    /// * `soft_shrink`: `x ↦ x/(1+‖x‖)`
    pub fn builtin(name: &str, dim: usize) -> Option<Self> {
        if dim == 0 {
            return None;
        }
        match name {
            "sin_half" => Some(Self::new(name, dim, |x, out| {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v.sin() / 2.0;
                }
            })),
            "tanh_half" => Some(Self::new(name, dim, |x, out| {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v.tanh() / 2.0;
                }
            })),
            "soft_shrink" => Some(Self::new(name, dim, |x, out| {
                let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v / (1.0 + n);
                }
            })),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub const BUILTIN_NAMES: &[&str] = &["sin_half", "tanh_half", "soft_shrink"];

impl fmt::Debug for NamedBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NamedBody")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

/// `x ↦ Lx + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    linear: Matrix,
    offset: Vector,
}

impl AffineMap {
    pub fn new(linear: Matrix, offset: Vector) -> Result<Self> {
        let d = linear.nrows();
        if d == 0 || linear.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "linear part must be square and non-empty, got {}x{}",
                linear.nrows(),
                linear.ncols()
            )));
        }
        check_dim(d, offset.len())?;
        if !linalg::all_finite(linear.iter()) || !linalg::all_finite(offset.iter()) {
            return Err(Error::NonFinite("affine map entries".into()));
        }
        Ok(AffineMap { linear, offset })
    }

    pub fn linear(linear: Matrix) -> Result<Self> {
        let d = linear.nrows();
        Self::new(linear, Vector::zeros(d))
    }

    pub fn scalar(dim: usize, s: f64) -> Result<Self> {
        Self::linear(Matrix::identity(dim, dim) * s)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::linear(Matrix::from_diagonal(&Vector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn linear_part(&self) -> &Matrix {
        &self.linear
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn is_linear(&self) -> bool {
        self.offset.iter().all(|v| *v == 0.0)
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.offset
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            linear: &self.linear * &inner.linear,
            offset: &self.linear * &inner.offset + &self.offset,
        }
    }

    pub fn translated(&self, w: &Vector) -> AffineMap {
        AffineMap {
            linear: self.linear.clone(),
            offset: &self.offset + w,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.linear.determinant()
    }
}

/// A tabulated nondecreasing modulus φ, evaluated by linear interpolation
/// through `(0, 0)` and the table; beyond the last node φ keeps a constant
/// deficit `t - φ(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedModulus {
    t: Vec<f64>,
    phi: Vec<f64>,
}

impl TabulatedModulus {
    pub fn new(t: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if t.is_empty() || t.len() != phi.len() {
            return Err(Error::InvalidArgument(
                "modulus table needs matching non-empty t and phi".into(),
            ));
        }
        if !linalg::all_finite(&t) || !linalg::all_finite(&phi) {
            return Err(Error::NonFinite("modulus table".into()));
        }
        if t[0] < 0.0 || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "modulus grid must be nonnegative and strictly increasing".into(),
            ));
        }
        if phi[0] < 0.0 || phi.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("modulus must be nondecreasing".into()));
        }
        Ok(TabulatedModulus { t, phi })
    }

    /// Samples `phi` on `n` points evenly spaced in `(0, t_max]`.
    pub fn sample<F: Fn(f64) -> f64>(phi: F, t_max: f64, n: usize) -> Result<Self> {
        let n = n.max(2);
        let t: Vec<f64> = (1..=n).map(|i| t_max * i as f64 / n as f64).collect();
        let p = t.iter().map(|&s| phi(s)).collect();
        Self::new(t, p)
    }

    pub fn grid(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.t.len() - 1;
        if t >= self.t[last] {
            return self.phi[last] + (t - self.t[last]);
        }
        let i = self.t.partition_point(|&s| s <= t);
        let (t0, p0) = if i == 0 { (0.0, 0.0) } else { (self.t[i - 1], self.phi[i - 1]) };
        let (t1, p1) = (self.t[i], self.phi[i]);
        p0 + (p1 - p0) * (t - t0) / (t1 - t0)
    }
}

/// How a map contracts distances.
#[derive(Clone, Debug, PartialEq)]
pub enum ContractionModulus {
    /// `‖m(x) − m(y)‖ ≤ rate·‖x − y‖` with `rate < 1`.
    Linear { rate: f64 },
    /// Matkowski modulus `‖m(x) − m(y)‖ ≤ φ(‖x − y‖)`.
    Tabulated(TabulatedModulus),
    /// Single steps are Lipschitz with `step_bound` (possibly ≥ 1) and every
    /// composition of `steps` maps of the family contracts with `rate < 1`.
    Eventual { steps: usize, rate: f64, step_bound: f64 },
}

impl ContractionModulus {
    pub fn linear(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "linear rate must lie in [0, 1), got {rate}"
            )));
        }
        Ok(ContractionModulus::Linear { rate })
    }

    pub fn phi(&self, t: f64) -> f64 {
        match self {
            ContractionModulus::Linear { rate } => rate * t,
            ContractionModulus::Tabulated(tab) => tab.eval(t),
            ContractionModulus::Eventual { step_bound, .. } => step_bound * t,
        }
    }

    /// Contraction rate of one iteration block, when one is known.
    pub fn banach_rate(&self) -> Option<f64> {
        match self {
            ContractionModulus::Linear { rate } => Some(*rate),
            ContractionModulus::Tabulated(_) => None,
            ContractionModulus::Eventual { rate, .. } => Some(*rate),
        }
    }

    pub fn block_steps(&self) -> usize {
        match self {
            ContractionModulus::Eventual { steps, .. } => *steps,
            _ => 1,
        }
    }

    /// Lipschitz bound of a single step, when one is known.
    pub fn step_bound(&self) -> Option<f64> {
        match self {
            ContractionModulus::Linear { rate } => Some(*rate),
            ContractionModulus::Tabulated(_) => None,
            ContractionModulus::Eventual { step_bound, .. } => Some(*step_bound),
        }
    }

    /// The function whose iterates must vanish: φ itself, or the block rate.
    fn block_phi(&self, t: f64) -> f64 {
        match self {
            ContractionModulus::Eventual { rate, .. } => rate * t,
            other => other.phi(t),
        }
    }
}

/// Checks that `φ⁽ⁿ⁾(t)` strictly decreases for `MATKOWSKI_DEPTH` steps from
/// every `t` in `grid`.
fn iterates_vanish(m: &ContractionModulus, grid: &[f64]) -> bool {
    grid.iter().all(|&t0| {
        let mut s = t0;
        for _ in 0..MATKOWSKI_DEPTH {
            if s <= f64::MIN_POSITIVE {
                return true;
            }
            let next = m.block_phi(s);
            if !next.is_finite() || next >= s * (1.0 - MATKOWSKI_SLACK) {
                return false;
            }
            s = next;
        }
        true
    })
}

#[derive(Clone, Debug)]
pub enum Body {
    Affine(AffineMap),
    Named(NamedBody),
}

impl Body {
    pub fn dim(&self) -> usize {
        match self {
            Body::Affine(a) => a.dim(),
            Body::Named(n) => n.dim(),
        }
    }
}

/// A self-map of ℝ^d together with a contraction modulus.
#[derive(Clone, Debug)]
pub struct ContractionMap {
    body: Body,
    modulus: ContractionModulus,
}

impl ContractionMap {
    /// An affine contraction whose linear rate is the spectral norm of its
    /// linear part.
    pub fn affine(map: AffineMap) -> Result<Self> {
        let rate = linalg::spectral_norm_upper(map.linear_part());
        if rate >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "affine map is not a contraction: spectral norm {rate}"
            )));
        }
        Ok(ContractionMap {
            body: Body::Affine(map),
            modulus: ContractionModulus::Linear { rate },
        })
    }

    /// A map with a user-claimed modulus; the claim is checked by
    /// [`matkowski_verify`] and rejected on any violation.
    pub fn verified(body: Body, modulus: ContractionModulus, samples: usize, seed: u64) -> Result<Self> {
        let candidate = ContractionMap { body, modulus };
        let report = matkowski_verify(&candidate, samples, seed);
        if report.pass {
            Ok(candidate)
        } else {
            Err(Error::ModulusRejected {
                worst_violation: report.worst_violation,
            })
        }
    }

    /// Pairs a body with a modulus without sampling. Callers are responsible
    /// for the modulus being valid (e.g. derived from matrix norms).
    pub fn from_parts(body: Body, modulus: ContractionModulus) -> Self {
        ContractionMap { body, modulus }
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    pub fn modulus(&self) -> &ContractionModulus {
        &self.modulus
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn as_affine(&self) -> Option<&AffineMap> {
        match &self.body {
            Body::Affine(a) => Some(a),
            Body::Named(_) => None,
        }
    }

    pub fn translate(&self, w: Vector) -> Result<TranslatedMap> {
        TranslatedMap::new(self.clone(), w)
    }
}

/// `g_w(x) = g(x) + w`.
#[derive(Clone, Debug)]
pub struct TranslatedMap {
    base: ContractionMap,
    shift: Vector,
}

impl TranslatedMap {
    pub fn new(base: ContractionMap, shift: Vector) -> Result<Self> {
        check_dim(base.body.dim(), shift.len())?;
        if !linalg::all_finite(shift.iter()) {
            return Err(Error::NonFinite("translation vector".into()));
        }
        Ok(TranslatedMap { base, shift })
    }

    pub fn base(&self) -> &ContractionMap {
        &self.base
    }

    pub fn shift(&self) -> &Vector {
        &self.shift
    }
}

/// Fast evaluation handle extracted from a map before hot loops.
#[doc(hidden)]
pub enum Kernel<'a> {
    Affine { d: usize, l: Vec<f64>, b: Vec<f64> },
    Opaque { func: &'a MapFn, shift: Option<&'a [f64]> },
}

impl Kernel<'_> {
    #[inline]
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Kernel::Affine { d, l, b } => {
                for i in 0..*d {
                    let row = &l[i * d..(i + 1) * d];
                    out[i] = b[i] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
                }
            }
            Kernel::Opaque { func, shift } => {
                func(x, out);
                if let Some(s) = shift {
                    for (o, v) in out.iter_mut().zip(s.iter()) {
                        *o += v;
                    }
                }
            }
        }
    }
}

fn affine_kernel(a: &AffineMap) -> Kernel<'static> {
    let d = a.dim();
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            l[i * d + j] = a.linear[(i, j)];
        }
    }
    Kernel::Affine {
        d,
        l,
        b: a.offset.iter().copied().collect(),
    }
}

/// Common interface of [`ContractionMap`] and [`TranslatedMap`].
pub trait SelfMap: Send + Sync {
    fn dim(&self) -> usize;
    fn modulus(&self) -> &ContractionModulus;
    /// The map as `x ↦ Lx + b` when its body is affine.
    fn affine_form(&self) -> Option<AffineMap>;
    #[doc(hidden)]
    fn kernel(&self) -> Kernel<'_>;

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.kernel().eval(x, out)
    }
}

impl SelfMap for ContractionMap {
    fn dim(&self) -> usize {
        self.body.dim()
    }

    fn modulus(&self) -> &ContractionModulus {
        &self.modulus
    }

    fn affine_form(&self) -> Option<AffineMap> {
        self.as_affine().cloned()
    }

    fn kernel(&self) -> Kernel<'_> {
        match &self.body {
            Body::Affine(a) => affine_kernel(a),
            Body::Named(n) => Kernel::Opaque {
                func: n.func.as_ref(),
                shift: None,
            },
        }
    }
}

impl SelfMap for TranslatedMap {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn modulus(&self) -> &ContractionModulus {
        &self.base.modulus
    }

    fn affine_form(&self) -> Option<AffineMap> {
        self.base.as_affine().map(|a| a.translated(&self.shift))
    }

    fn kernel(&self) -> Kernel<'_> {
        match &self.base.body {
            Body::Affine(a) => affine_kernel(&a.translated(&self.shift)),
            Body::Named(n) => Kernel::Opaque {
                func: n.func.as_ref(),
                shift: Some(self.shift.as_slice()),
            },
        }
    }
}

pub fn apply_map<M: SelfMap + ?Sized>(m: &M, x: &Vector) -> Result<Vector> {
    check_dim(m.dim(), x.len())?;
    let mut out = Vector::zeros(x.len());
    m.eval_into(x.as_slice(), out.as_mut_slice());
    if !linalg::all_finite(out.iter()) {
        return Err(Error::NonFinite("map output".into()));
    }
    Ok(out)
}

/// Banach iteration from the origin until the residual `‖m(x) − x‖` is at
/// most `tol`.
pub fn fixed_point<M: SelfMap + ?Sized>(m: &M, tol: f64) -> Result<Vector> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let d = m.dim();
    let kernel = m.kernel();
    let mut x = vec![0.0; d];
    let mut next = vec![0.0; d];
    for _ in 0..FIXED_POINT_MAX_ITER {
        kernel.eval(&x, &mut next);
        if !linalg::all_finite(&next) {
            return Err(Error::NonFinite("fixed-point iterate".into()));
        }
        let residual = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            return Ok(Vector::from_vec(x));
        }
        std::mem::swap(&mut x, &mut next);
    }
    Err(Error::BudgetExhausted(format!(
        "fixed-point iteration did not reach tolerance {tol} in {FIXED_POINT_MAX_ITER} steps"
    )))
}

/// Fixed point of an affine contraction by solving `(I − L)x = b`.
pub fn affine_fixed_point(a: &AffineMap) -> Result<Vector> {
    let d = a.dim();
    linalg::solve(&(linalg::identity(d) - a.linear_part()), a.offset())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzEstimate {
    pub value: f64,
    /// `false` when `value` is a sampled lower estimate.
    pub certified: bool,
}

/// Spectral norm for affine bodies; a sampled lower estimate otherwise.
pub fn lipschitz_upper(m: &ContractionMap) -> LipschitzEstimate {
    lipschitz_upper_with(m, 20_000, 0x5eed)
}

pub fn lipschitz_upper_with(m: &ContractionMap, samples: usize, seed: u64) -> LipschitzEstimate {
    if let Some(a) = m.as_affine() {
        return LipschitzEstimate {
            value: linalg::spectral_norm(a.linear_part()),
            certified: true,
        };
    }
    let d = m.dim();
    let kernel = m.kernel();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fx, mut fy) = (vec![0.0; d], vec![0.0; d]);
    let mut best: f64 = 0.0;
    for i in 0..samples.max(1) {
        let (x, y) = sample_pair(&mut rng, d, DEFAULT_SAMPLE_HALF_WIDTH, i);
        let dist = euclid(&x, &y);
        if dist == 0.0 {
            continue;
        }
        kernel.eval(&x, &mut fx);
        kernel.eval(&y, &mut fy);
        best = best.max(euclid(&fx, &fy) / dist);
    }
    LipschitzEstimate {
        value: best,
        certified: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatkowskiReport {
    pub pass: bool,
    /// Largest observed `‖m(x) − m(y)‖ − φ(‖x − y‖)`, clamped at zero.
    pub worst_violation: f64,
    /// Whether `φ⁽ⁿ⁾(t)` strictly decreased along every sampled orbit.
    pub iterates_vanish: bool,
    pub pairs_checked: usize,
}

/// Samples pairs from the box `[-10, 10]^d` and checks the modulus
/// inequality, then checks that the modulus iterates vanish.
pub fn matkowski_verify(m: &ContractionMap, samples: usize, seed: u64) -> MatkowskiReport {
    matkowski_verify_in(m, samples, seed, DEFAULT_SAMPLE_HALF_WIDTH)
}

pub fn matkowski_verify_in(
    m: &ContractionMap,
    samples: usize,
    seed: u64,
    half_width: f64,
) -> MatkowskiReport {
    let d = m.dim();
    let kernel = m.kernel();
    let steps = m.modulus.block_steps();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fx, mut fy) = (vec![0.0; d], vec![0.0; d]);
    let (mut tx, mut ty) = (vec![0.0; d], vec![0.0; d]);
    let mut worst: f64 = 0.0;
    let samples = samples.max(1);
    for i in 0..samples {
        let (x, y) = sample_pair(&mut rng, d, half_width, i);
        fx.copy_from_slice(&x);
        fy.copy_from_slice(&y);
        for _ in 0..steps {
            kernel.eval(&fx, &mut tx);
            kernel.eval(&fy, &mut ty);
            std::mem::swap(&mut fx, &mut tx);
            std::mem::swap(&mut fy, &mut ty);
        }
        let lhs = euclid(&fx, &fy);
        let rhs = m.modulus.block_phi(euclid(&x, &y));
        let excess = lhs - rhs;
        if !excess.is_finite() {
            worst = f64::INFINITY;
        } else {
            worst = worst.max(excess);
        }
    }
    let diameter = 2.0 * half_width * (d as f64).sqrt();
    let mut grid: Vec<f64> = (0..48)
        .map(|j| 1e-6 * (diameter / 1e-6).powf(j as f64 / 47.0))
        .collect();
    if let ContractionModulus::Tabulated(tab) = &m.modulus {
        grid.extend(tab.grid().iter().copied().filter(|t| *t > 0.0));
    }
    let vanish = iterates_vanish(&m.modulus, &grid);
    MatkowskiReport {
        pass: worst <= MATKOWSKI_SLACK && vanish,
        worst_violation: worst,
        iterates_vanish: vanish,
        pairs_checked: samples,
    }
}

/// Even draws: two independent points of the box. Odd draws: a point and a
/// nearby point at a log-uniform distance in `[1e-6, 10]`, which probes the
/// modulus near zero.
fn sample_pair(rng: &mut ChaCha8Rng, d: usize, half_width: f64, i: usize) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-half_width..half_width)).collect();
    let y = if i % 2 == 0 {
        (0..d).map(|_| rng.random_range(-half_width..half_width)).collect()
    } else {
        let scale = 10f64.powf(rng.random_range(-6.0..1.0));
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        x.iter().zip(&dir).map(|(a, u)| a + scale * u / n).collect()
    };
    (x, y)
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The linear map `h = Σ_{i<n} Lⁱ` of a linear contraction `L`, which
/// satisfies `g_w⁽ⁿ⁾(x) = g⁽ⁿ⁾(x) + h(w)`.
#[derive(Clone, Debug)]
pub struct PartialSumMap {
    linear: Matrix,
    n: usize,
    sum: Matrix,
}

impl PartialSumMap {
    pub fn new(linear: &Matrix, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("partial sum needs n >= 1".into()));
        }
        if linear.nrows() != linear.ncols() {
            return Err(Error::InvalidArgument("linear part must be square".into()));
        }
        let norm = linalg::spectral_norm(linear);
        if norm >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "partial sum map needs ‖L‖ < 1, got {norm}"
            )));
        }
        let d = linear.nrows();
        let mut sum = Matrix::zeros(d, d);
        let mut power = linalg::identity(d);
        for _ in 0..n {
            sum += &power;
            power = &power * linear;
        }
        Ok(PartialSumMap {
            linear: linear.clone(),
            n,
            sum,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Matrix {
        &self.sum
    }

    /// `Σ_{i<n} Lⁱ w`, accumulated term by term.
    pub fn eval(&self, w: &Vector) -> Result<Vector> {
        check_dim(self.linear.nrows(), w.len())?;
        let mut acc = Vector::zeros(w.len());
        let mut term = w.clone();
        for _ in 0..self.n {
            acc += &term;
            term = &self.linear * term;
        }
        Ok(acc)
    }

    /// `(I − Lⁿ)(I − L)⁻¹ w`.
    pub fn eval_closed_form(&self, w: &Vector) -> Result<Vector> {
        check_dim(self.linear.nrows(), w.len())?;
        let d = w.len();
        let y = linalg::solve(&(linalg::identity(d) - &self.linear), w)?;
        let ln = linalg::matrix_power(&self.linear, self.n);
        Ok((linalg::identity(d) - ln) * y)
    }

    /// `h⁻¹(y)`.
    pub fn inverse(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.linear.nrows(), y.len())?;
        linalg::solve(&self.sum, y)
    }
}

/// `h(w) = Σ_{i=0}^{n-1} Lⁱ w`.
pub fn partial_sum_map(linear: &Matrix, n: usize, w: &Vector) -> Result<Vector> {
    PartialSumMap::new(linear, n)?.eval(w)
}

/// Closed-form evaluation `(I − Lⁿ)(I − L)⁻¹ w` of [`partial_sum_map`].
pub fn partial_sum_closed_form(linear: &Matrix, n: usize, w: &Vector) -> Result<Vector> {
    PartialSumMap::new(linear, n)?.eval_closed_form(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn scalar_map(s: f64, b: f64) -> ContractionMap {
        ContractionMap::affine(AffineMap::new(Matrix::from_element(1, 1, s), v(&[b])).unwrap()).unwrap()
    }

    #[test]
    fn apply_identity_and_translation() {
        let id = AffineMap::new(Matrix::identity(2, 2), v(&[0.0, 0.0])).unwrap();
        assert_eq!(id.apply(&v(&[3.0, 4.0])), v(&[3.0, 4.0]));
        let f = scalar_map(0.5, 0.5);
        assert_eq!(apply_map(&f, &v(&[1.0])).unwrap(), v(&[1.0]));
        let gw = scalar_map(1.0 / 3.0, 0.0).translate(v(&[1.0])).unwrap();
        assert_eq!(apply_map(&gw, &v(&[0.0])).unwrap(), v(&[1.0]));
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let f = scalar_map(0.5, 0.0);
        assert!(matches!(
            apply_map(&f, &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn apply_reports_non_finite_output() {
        let body = NamedBody::new("blowup", 1, |_x, out| out[0] = f64::NAN);
        let m = ContractionMap::from_parts(Body::Named(body), ContractionModulus::Linear { rate: 0.5 });
        assert!(matches!(apply_map(&m, &v(&[0.0])), Err(Error::NonFinite(_))));
    }

    #[test]
    fn fixed_points() {
        let gw = scalar_map(0.5, 0.0).translate(v(&[1.0])).unwrap();
        assert!((fixed_point(&gw, 1e-12).unwrap()[0] - 2.0).abs() < 1e-11);
        let g = ContractionMap::affine(AffineMap::scalar(2, 0.5).unwrap()).unwrap();
        assert_eq!(fixed_point(&g, 1e-12).unwrap(), v(&[0.0, 0.0]));
        let g3 = scalar_map(1.0 / 3.0, 0.0).translate(v(&[1.0])).unwrap();
        assert!((fixed_point(&g3, 1e-12).unwrap()[0] - 1.5).abs() < 1e-11);
    }

    #[test]
    fn fixed_point_budget_on_false_claim() {
        let body = NamedBody::new("shift", 1, |x, out| out[0] = x[0] + 1.0);
        let m = ContractionMap::from_parts(Body::Named(body), ContractionModulus::Linear { rate: 0.5 });
        assert!(matches!(fixed_point(&m, 1e-6), Err(Error::BudgetExhausted(_))));
        assert!(fixed_point(&m, 0.0).is_err());
    }

    #[test]
    fn lipschitz_estimates() {
        let l = ContractionMap::affine(AffineMap::diagonal(&[0.5, 0.3]).unwrap()).unwrap();
        let est = lipschitz_upper(&l);
        assert!(est.certified);
        assert!((est.value - 0.5).abs() < 1e-10);

        let sin = ContractionMap::from_parts(
            Body::Named(NamedBody::builtin("sin_half", 1).unwrap()),
            ContractionModulus::Linear { rate: 0.5 },
        );
        let est = lipschitz_upper(&sin);
        assert!(!est.certified);
        assert!(est.value <= 0.5 + 1e-9 && est.value > 0.49, "{}", est.value);
    }

    #[test]
    fn matkowski_accepts_exact_rate() {
        let g = scalar_map(0.5, 0.0);
        for seed in [0, 1, 99] {
            assert!(matkowski_verify(&g, 500, seed).pass);
        }
    }

    #[test]
    fn matkowski_rejects_identity() {
        let id = NamedBody::new("id", 1, |x, out| out[0] = x[0]);
        let m = ContractionMap::from_parts(
            Body::Named(id),
            ContractionModulus::Tabulated(TabulatedModulus::sample(|t| t, 100.0, 200).unwrap()),
        );
        let r = matkowski_verify(&m, 500, 3);
        assert!(!r.pass);
        assert!(!r.iterates_vanish);
        assert!(r.worst_violation <= MATKOWSKI_SLACK);
    }

    #[test]
    fn tabulated_interpolation() {
        let tab = TabulatedModulus::new(vec![1.0, 2.0], vec![0.5, 0.75]).unwrap();
        assert_eq!(tab.eval(0.0), 0.0);
        assert!((tab.eval(0.5) - 0.25).abs() < 1e-15);
        assert!((tab.eval(1.5) - 0.625).abs() < 1e-15);
        assert!((tab.eval(3.0) - 1.75).abs() < 1e-15);
        assert!(TabulatedModulus::new(vec![1.0, 0.5], vec![0.1, 0.2]).is_err());
        assert!(TabulatedModulus::new(vec![1.0, 2.0], vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn verified_constructor_rejects_violations() {
        let body = Body::Named(NamedBody::builtin("sin_half", 1).unwrap());
        assert!(ContractionMap::verified(body.clone(), ContractionModulus::Linear { rate: 0.5 }, 2000, 1).is_ok());
        assert!(matches!(
            ContractionMap::verified(body, ContractionModulus::Linear { rate: 0.4 }, 2000, 1),
            Err(Error::ModulusRejected { .. })
        ));
    }

    #[test]
    fn partial_sum_examples() {
        let l = Matrix::from_element(1, 1, 0.5);
        assert!((partial_sum_map(&l, 2, &v(&[1.0])).unwrap()[0] - 1.5).abs() < 1e-15);
        let l2 = Matrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]);
        let w = v(&[0.7, -1.1]);
        assert_eq!(partial_sum_map(&l2, 1, &w).unwrap(), w);
        let nil = Matrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, 0.0]);
        let h = partial_sum_map(&nil, 2, &v(&[1.0, 1.0])).unwrap();
        assert!((h - v(&[1.5, 1.0])).norm() < 1e-15);
        let closed = partial_sum_closed_form(&nil, 2, &v(&[1.0, 1.0])).unwrap();
        assert!((closed - v(&[1.5, 1.0])).norm() < 1e-12);
        assert!(PartialSumMap::new(&nil, 0).is_err());
        assert!(PartialSumMap::new(&Matrix::from_element(1, 1, 1.0), 2).is_err());
    }

    #[test]
    fn partial_sum_inverse() {
        let l = Matrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]);
        let h = PartialSumMap::new(&l, 5).unwrap();
        let w = v(&[0.25, -2.0]);
        let back = h.inverse(&h.eval(&w).unwrap()).unwrap();
        assert!((back - w).norm() < 1e-12);
    }
}
