use std::fmt::Write as _;

use crate::error::{check_dim, Error, Result};

/// Packs lattice indices into one `u128`, most significant coordinate first,
/// so that key order is lexicographic index order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Codec {
    dim: usize,
    bits: u32,
}

impl Codec {
    pub(crate) fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > 64 {
            return Err(Error::InvalidArgument(format!(
                "lattice dimension must be in 1..=64, got {dim}"
            )));
        }
        let bits = (128 / dim as u32).min(64);
        Ok(Codec { dim, bits })
    }

    #[inline]
    fn bias(&self) -> i128 {
        1i128 << (self.bits - 1)
    }

    #[inline]
    pub(crate) fn encode(&self, idx: &[i64]) -> Result<u128> {
        let mut key: u128 = 0;
        let bias = self.bias();
        for &i in idx {
            let b = i as i128 + bias;
            if b < 0 || b >= (bias << 1) {
                return Err(Error::LatticeOverflow { index: i, bits: self.bits });
            }
            key = (key << self.bits) | b as u128;
        }
        Ok(key)
    }

    #[inline]
    pub(crate) fn decode(&self, mut key: u128, out: &mut [i64]) {
        let mask: u128 = (1u128 << self.bits) - 1;
        let bias = self.bias();
        for k in (0..self.dim).rev() {
            out[k] = ((key & mask) as i128 - bias) as i64;
            key >>= self.bits;
        }
    }
}

/// A finite set of lattice cells at resolution `eps`; cell `c` stands for
/// the closed box `eps·c + [0, eps]^d` and is represented by its center.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSet {
    dim: usize,
    eps: f64,
    keys: Vec<u128>,
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("resolution must be positive and finite, got {eps}")))
    }
}

#[inline]
pub(crate) fn cell_of(x: f64, eps: f64) -> Result<i64> {
    let c = (x / eps).floor();
    if !c.is_finite() || c.abs() > 9.0e18 {
        return Err(Error::NonFinite(format!("coordinate {x} at resolution {eps}")));
    }
    Ok(c as i64)
}

impl CellSet {
    /// Builds a set from packed keys; sorts and removes duplicates.
    pub(crate) fn from_keys(dim: usize, eps: f64, mut keys: Vec<u128>) -> Result<Self> {
        check_eps(eps)?;
        Codec::new(dim)?;
        keys.sort_unstable();
        keys.dedup();
        if keys.is_empty() {
            return Err(Error::InvalidArgument("cell set must be nonempty".into()));
        }
        Ok(CellSet { dim, eps, keys })
    }

    pub(crate) fn codec(&self) -> Codec {
        Codec { dim: self.dim, bits: (128 / self.dim as u32).min(64) }
    }

    pub fn from_indices<I>(dim: usize, eps: f64, cells: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[i64]>,
    {
        let codec = Codec::new(dim)?;
        let keys = cells
            .into_iter()
            .map(|c| {
                check_dim(dim, c.as_ref().len())?;
                codec.encode(c.as_ref())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_keys(dim, eps, keys)
    }

    /// The smallest cell set whose boxes contain the box `[lo, hi]`.
    pub fn cover_box(lo: &[f64], hi: &[f64], eps: f64) -> Result<Self> {
        check_eps(eps)?;
        check_dim(lo.len(), hi.len())?;
        let dim = lo.len();
        let mut ranges = Vec::with_capacity(dim);
        for (&a, &b) in lo.iter().zip(hi) {
            if !(a <= b) {
                return Err(Error::InvalidArgument(format!("empty box [{a}, {b}]")));
            }
            let first = cell_of(a, eps)?;
            let last = ((b / eps).ceil() as i64 - 1).max(first);
            ranges.push((first, last));
        }
        let codec = Codec::new(dim)?;
        let mut keys = Vec::new();
        push_box(&codec, &ranges, &mut keys)?;
        Self::from_keys(dim, eps, keys)
    }

    /// Cells whose boxes meet the closed ball `B(center, radius)`.
    pub fn cover_ball(center: &[f64], radius: f64, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let dim = center.len();
        let codec = Codec::new(dim)?;
        let ranges = center
            .iter()
            .map(|&c| Ok((cell_of(c - radius, eps)?, cell_of(c + radius, eps)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut keys = Vec::new();
        let mut idx = vec![0i64; dim];
        let mut all = Vec::new();
        push_box(&codec, &ranges, &mut all)?;
        for key in all {
            codec.decode(key, &mut idx);
            let d2: f64 = idx
                .iter()
                .zip(center)
                .map(|(&i, &c)| {
                    let lo = i as f64 * eps;
                    let hi = lo + eps;
                    let gap = if c < lo { lo - c } else if c > hi { c - hi } else { 0.0 };
                    gap * gap
                })
                .sum();
            if d2 <= radius * radius {
                keys.push(key);
            }
        }
        Self::from_keys(dim, eps, keys)
    }

    /// Cells containing the given points (flat `n × dim` buffer).
    pub fn cover_points(dim: usize, eps: f64, points: &[f64]) -> Result<Self> {
        check_eps(eps)?;
        let codec = Codec::new(dim)?;
        let mut idx = vec![0i64; dim];
        let mut keys = Vec::with_capacity(points.len() / dim.max(1));
        for p in points.chunks(dim) {
            for (i, &x) in idx.iter_mut().zip(p) {
                *i = cell_of(x, eps)?;
            }
            keys.push(codec.encode(&idx)?);
        }
        Self::from_keys(dim, eps, keys)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub(crate) fn keys(&self) -> &[u128] {
        &self.keys
    }

    pub fn indices(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let codec = self.codec();
        self.keys.iter().map(move |&k| {
            let mut idx = vec![0; self.dim];
            codec.decode(k, &mut idx);
            idx
        })
    }

    /// Cell centers as a flat `len × dim` buffer, in key order.
    pub fn centers(&self) -> Vec<f64> {
        let codec = self.codec();
        let mut idx = vec![0i64; self.dim];
        let mut out = Vec::with_capacity(self.keys.len() * self.dim);
        for &k in &self.keys {
            codec.decode(k, &mut idx);
            out.extend(idx.iter().map(|&i| (i as f64 + 0.5) * self.eps));
        }
        out
    }

    pub fn contains_index(&self, idx: &[i64]) -> bool {
        if idx.len() != self.dim {
            return false;
        }
        match self.codec().encode(idx) {
            Ok(k) => self.keys.binary_search(&k).is_ok(),
            Err(_) => false,
        }
    }

    /// Index of the cell containing `p`.
    pub fn cell_index(&self, p: &[f64]) -> Result<Vec<i64>> {
        check_dim(self.dim, p.len())?;
        p.iter().map(|&x| cell_of(x, self.eps)).collect()
    }

    /// Whether some cell lies within Chebyshev index distance `radius` of `idx`.
    pub fn near_index(&self, idx: &[i64], radius: i64) -> bool {
        if idx.len() != self.dim {
            return false;
        }
        let stencil = (2 * radius + 1) as f64;
        if stencil.powi(self.dim as i32) <= 4.0 * self.len() as f64 + 64.0 {
            let mut probe = idx.to_vec();
            let mut found = false;
            for_each_offset(self.dim, radius, |off| {
                if found {
                    return;
                }
                for ((p, &i), &o) in probe.iter_mut().zip(idx).zip(off) {
                    *p = i + o;
                }
                found = self.contains_index(&probe);
            });
            found
        } else {
            self.indices()
                .any(|c| c.iter().zip(idx).all(|(a, b)| (a - b).abs() <= radius))
        }
    }

    pub fn contains_point_with_collar(&self, p: &[f64], collar_cells: i64) -> bool {
        match self.cell_index(p) {
            Ok(idx) => self.near_index(&idx, collar_cells),
            Err(_) => false,
        }
    }

    pub fn shares_cell_with(&self, other: &CellSet) -> bool {
        if self.dim != other.dim || self.eps != other.eps {
            return false;
        }
        let (mut i, mut j) = (0, 0);
        while i < self.keys.len() && j < other.keys.len() {
            match self.keys[i].cmp(&other.keys[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn union(&self, other: &CellSet) -> Result<CellSet> {
        check_dim(self.dim, other.dim)?;
        if self.eps != other.eps {
            return Err(Error::InvalidArgument("union of cell sets at different resolutions".into()));
        }
        let mut keys = Vec::with_capacity(self.len() + other.len());
        keys.extend_from_slice(&self.keys);
        keys.extend_from_slice(&other.keys);
        Self::from_keys(self.dim, self.eps, keys)
    }

    /// Splits every cell into `factor^d` children at resolution `eps/factor`.
    pub fn refine(&self, factor: i64) -> Result<CellSet> {
        if factor < 1 {
            return Err(Error::InvalidArgument("refinement factor must be >= 1".into()));
        }
        let codec = self.codec();
        let mut keys = Vec::with_capacity(self.len() * (factor as usize).pow(self.dim as u32));
        let mut idx = vec![0i64; self.dim];
        for &k in &self.keys {
            codec.decode(k, &mut idx);
            let ranges: Vec<(i64, i64)> = idx.iter().map(|&i| (i * factor, i * factor + factor - 1)).collect();
            push_box(&codec, &ranges, &mut keys)?;
        }
        Self::from_keys(self.dim, self.eps / factor as f64, keys)
    }

    /// Axis-aligned bounds of the covered boxes.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for idx in self.indices() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(idx[k] as f64 * self.eps);
                hi[k] = hi[k].max((idx[k] + 1) as f64 * self.eps);
            }
        }
        (lo, hi)
    }

    /// Text listing: a two-line header then one cell index tuple per line,
    /// in sorted order.
    ///
    /// ```text
    /// cellset 1 dim=<d> eps=<eps>
    /// count=<n>
    /// i_1 ... i_d
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cellset 1 dim={} eps={:e}", self.dim, self.eps);
        let _ = writeln!(s, "count={}", self.len());
        for idx in self.indices() {
            let parts: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{}", parts.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<CellSet> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "cellset" || fields[1] != "1" {
            return Err(Error::Parse(format!("bad header line: {header}")));
        }
        let dim: usize = parse_field(fields[2], "dim=")?;
        let eps: f64 = parse_field(fields[3], "eps=")?;
        let count_line = lines.next().ok_or_else(|| Error::Parse("missing count".into()))?;
        let count: usize = parse_field(count_line.trim(), "count=")?;
        let mut cells = Vec::with_capacity(count);
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let idx = line
                .split_whitespace()
                .map(|t| t.parse::<i64>().map_err(|e| Error::Parse(format!("line {}: {e}", n + 3))))
                .collect::<Result<Vec<_>>>()?;
            cells.push(idx);
        }
        if cells.len() != count {
            return Err(Error::Parse(format!("expected {count} cells, found {}", cells.len())));
        }
        Self::from_indices(dim, eps, cells)
    }

    /// Binary listing: magic `IFSC`, version byte 1, `dim` as u32 LE,
    /// `eps` as f64 LE, `count` as u64 LE, then `count × dim` i64 LE indices
    /// in sorted order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(25 + 8 * self.len() * self.dim);
        out.extend_from_slice(b"IFSC");
        out.push(1);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.eps.to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for idx in self.indices() {
            for i in idx {
                out.extend_from_slice(&i.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<CellSet> {
        if bytes.len() < 25 || &bytes[..4] != b"IFSC" || bytes[4] != 1 {
            return Err(Error::Parse("not a version-1 binary cell set".into()));
        }
        let dim = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let eps = f64::from_le_bytes(bytes[9..17].try_into().unwrap());
        let count = u64::from_le_bytes(bytes[17..25].try_into().unwrap()) as usize;
        let body = &bytes[25..];
        if dim == 0 || body.len() != count * dim * 8 {
            return Err(Error::Parse("binary cell set length mismatch".into()));
        }
        let cells = body.chunks(dim * 8).map(|c| {
            c.chunks(8)
                .map(|b| i64::from_le_bytes(b.try_into().unwrap()))
                .collect::<Vec<_>>()
        });
        Self::from_indices(dim, eps, cells)
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, prefix: &str) -> Result<T> {
    field
        .strip_prefix(prefix)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse(format!("expected {prefix}<value>, got {field}")))
}

/// Appends the keys of every index in the product of inclusive `ranges`.
pub(crate) fn push_box(codec: &Codec, ranges: &[(i64, i64)], out: &mut Vec<u128>) -> Result<()> {
    let dim = ranges.len();
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.1 < r.0) {
        return Ok(());
    }
    loop {
        out.push(codec.encode(&idx)?);
        let mut k = dim;
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            if idx[k] < ranges[k].1 {
                idx[k] += 1;
                break;
            }
            idx[k] = ranges[k].0;
        }
    }
}

/// Calls `f` with every offset vector in `{-radius..=radius}^dim`.
pub(crate) fn for_each_offset<F: FnMut(&[i64])>(dim: usize, radius: i64, mut f: F) {
    let mut off = vec![-radius; dim];
    loop {
        f(&off);
        let mut k = dim;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if off[k] < radius {
                off[k] += 1;
                break;
            }
            off[k] = -radius;
        }
    }
}
