//! A static k-d tree over a flat point buffer.

/// Balanced k-d tree built by median splits on the axis of widest spread.
/// Points are stored flat (`n × dim`) in tree order.
#[derive(Clone, Debug)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    axes: Vec<u8>,
}

const LEAF: usize = 8;

impl KdTree {
    pub fn new(dim: usize, points: &[f64]) -> Self {
        assert!(dim > 0 && points.len() % dim == 0);
        let n = points.len() / dim;
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut axes = vec![0u8; n];
        build(dim, points, &mut order, &mut axes, 0);
        let mut flat = Vec::with_capacity(points.len());
        for &i in &order {
            let i = i as usize;
            flat.extend_from_slice(&points[i * dim..(i + 1) * dim]);
        }
        KdTree { dim, points: flat, axes }
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Squared Euclidean distance to the nearest stored point.
    pub fn nearest_sq(&self, q: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        self.nearest_rec(q, 0, self.len(), &mut best);
        best
    }

    pub fn nearest(&self, q: &[f64]) -> f64 {
        self.nearest_sq(q).sqrt()
    }

    fn nearest_rec(&self, q: &[f64], lo: usize, hi: usize, best: &mut f64) {
        if hi - lo <= LEAF {
            for i in lo..hi {
                let d = sq_dist(q, self.point(i));
                if d < *best {
                    *best = d;
                }
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let axis = self.axes[mid] as usize;
        let p = self.point(mid);
        let d = sq_dist(q, p);
        if d < *best {
            *best = d;
        }
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_rec(q, near.0, near.1, best);
        if diff * diff < *best {
            self.nearest_rec(q, far.0, far.1, best);
        }
    }

    /// Calls `visit` with the tree-order index of every point within
    /// Chebyshev distance `radius` of `q`.
    pub fn within_chebyshev<F: FnMut(usize)>(&self, q: &[f64], radius: f64, mut visit: F) {
        self.cheb_rec(q, radius, 0, self.len(), &mut visit);
    }

    fn cheb_rec<F: FnMut(usize)>(&self, q: &[f64], r: f64, lo: usize, hi: usize, visit: &mut F) {
        if hi - lo <= LEAF {
            for i in lo..hi {
                if cheb(q, self.point(i)) <= r {
                    visit(i);
                }
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let axis = self.axes[mid] as usize;
        let p = self.point(mid);
        if cheb(q, p) <= r {
            visit(mid);
        }
        if q[axis] - r <= p[axis] {
            self.cheb_rec(q, r, lo, mid, visit);
        }
        if q[axis] + r >= p[axis] {
            self.cheb_rec(q, r, mid + 1, hi, visit);
        }
    }

    /// Stored point at tree-order index `i`.
    pub fn get(&self, i: usize) -> &[f64] {
        self.point(i)
    }
}

fn build(dim: usize, pts: &[f64], order: &mut [u32], axes: &mut [u8], offset: usize) {
    let n = order.len();
    if n <= LEAF {
        return;
    }
    let mut axis = 0;
    let mut spread = -1.0;
    for a in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in order.iter() {
            let v = pts[i as usize * dim + a];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > spread {
            spread = hi - lo;
            axis = a;
        }
    }
    let mid = n / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        pts[a as usize * dim + axis].total_cmp(&pts[b as usize * dim + axis])
    });
    axes[offset + mid] = axis as u8;
    let (left, rest) = order.split_at_mut(mid);
    build(dim, pts, left, axes, offset);
    build(dim, pts, &mut rest[1..], axes, offset + mid + 1);
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn cheb(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
