use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// A one- or two-dimensional affine slice of parameter space, sampled at
/// pixel centres.
///
/// Pixel `(i, j)` has centre `center + Σ_a (−h_a + (k_a + ½)·2h_a/res)·axis_a`
/// with `k_0 = i` and `k_1 = j`. A one-axis window is a single row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamWindow {
    center: Vec<f64>,
    axes: Vec<Vec<f64>>,
    half_widths: Vec<f64>,
    resolution: usize,
}

impl ParamWindow {
    pub fn new(center: Vector, axes: Vec<Vector>, half_widths: Vec<f64>, resolution: usize) -> Result<Self> {
        let w = ParamWindow {
            center: center.iter().copied().collect(),
            axes: axes.iter().map(|a| a.iter().copied().collect()).collect(),
            half_widths,
            resolution,
        };
        w.validate()?;
        Ok(w)
    }

    /// Window on the real line: `[lo, hi]` in `resolution` pixels.
    pub fn interval(lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
        }
        Self::new(
            Vector::from_element(1, 0.5 * (lo + hi)),
            vec![Vector::from_element(1, 1.0)],
            vec![0.5 * (hi - lo)],
            resolution,
        )
    }

    /// Axis-aligned square window in the plane spanned by the first two
    /// coordinates of `center`.
    pub fn square(center: Vector, half_width: f64, resolution: usize) -> Result<Self> {
        let d = center.len();
        if d < 2 {
            return Err(Error::InvalidArgument("square windows need dimension at least 2".into()));
        }
        let mut e0 = Vector::zeros(d);
        let mut e1 = Vector::zeros(d);
        e0[0] = 1.0;
        e1[1] = 1.0;
        Self::new(center, vec![e0, e1], vec![half_width, half_width], resolution)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.center.len();
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if d == 0 {
            return bad("window centre must have dimension at least 1".into());
        }
        if self.axes.is_empty() || self.axes.len() > 2 {
            return bad(format!("a window has one or two axes, got {}", self.axes.len()));
        }
        if self.half_widths.len() != self.axes.len() {
            return bad("one half-width per axis is required".into());
        }
        if self.resolution < 2 {
            return bad(format!("resolution must be at least 2, got {}", self.resolution));
        }
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("window centre".into()));
        }
        for (k, a) in self.axes.iter().enumerate() {
            if a.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: a.len() });
            }
            for (l, b) in self.axes.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if k == l { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-10 {
                    return bad("window axes must be orthonormal".into());
                }
            }
        }
        for &h in &self.half_widths {
            if !(h > 0.0) || !h.is_finite() {
                return bad(format!("half-widths must be positive, got {h}"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn axes_count(&self) -> usize {
        self.axes.len()
    }

    pub fn width(&self) -> usize {
        self.resolution
    }

    pub fn height(&self) -> usize {
        if self.axes.len() == 2 {
            self.resolution
        } else {
            1
        }
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn center(&self) -> Vector {
        Vector::from_column_slice(&self.center)
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn axis(&self, k: usize) -> Vector {
        Vector::from_column_slice(&self.axes[k])
    }

    /// Side length of a pixel along axis `k`.
    pub fn pixel_size(&self, k: usize) -> f64 {
        2.0 * self.half_widths[k] / self.resolution as f64
    }

    /// Offset of pixel `k` from the centre along one axis.
    fn offset(&self, axis: usize, k: usize) -> f64 {
        let h = self.half_widths[axis];
        -h + (k as f64 + 0.5) * 2.0 * h / self.resolution as f64
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> Vector {
        let mut w = self.center();
        let coords = [(0usize, i), (1, j)];
        for &(a, k) in coords.iter().take(self.axes.len()) {
            let t = self.offset(a, k);
            for (wi, ai) in w.iter_mut().zip(&self.axes[a]) {
                *wi += t * ai;
            }
        }
        w
    }

    /// Centre of the pixel with row-major index `p = j·width + i`.
    pub fn pixel_center_flat(&self, p: usize) -> Vector {
        self.pixel_center(p % self.width(), p / self.width())
    }

    /// Coordinates of `w` in the window frame (one per axis).
    pub fn project(&self, w: &Vector) -> Vec<f64> {
        self.axes
            .iter()
            .map(|a| a.iter().zip(w.iter().zip(&self.center)).map(|(ai, (wi, ci))| ai * (wi - ci)).sum())
            .collect()
    }

    /// Pixel containing the projection of `w`, if inside the window.
    pub fn pixel_of(&self, w: &Vector) -> Option<(usize, usize)> {
        let t = self.project(w);
        let mut idx = [0usize; 2];
        for (a, &ta) in t.iter().enumerate() {
            let h = self.half_widths[a];
            let k = ((ta + h) / (2.0 * h) * self.resolution as f64).floor();
            if k < 0.0 || k >= self.resolution as f64 {
                return None;
            }
            idx[a] = k as usize;
        }
        Some((idx[0], idx[1]))
    }

    /// The same slice with `factor` times as many pixels per axis.
    pub fn subdivided(&self, factor: usize) -> Result<Self> {
        let mut w = self.clone();
        w.resolution = self
            .resolution
            .checked_mul(factor)
            .ok_or_else(|| Error::InvalidArgument("resolution overflow".into()))?;
        w.validate()?;
        Ok(w)
    }

    /// Largest norm of a window corner.
    pub fn max_corner_norm(&self) -> f64 {
        let c = self.center();
        let signs: &[[f64; 2]] = &[[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        signs
            .iter()
            .map(|s| {
                let mut p = c.clone();
                for a in 0..self.axes.len() {
                    p += self.axis(a) * (s[a] * self.half_widths[a]);
                }
                p.norm()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_interval_has_a_pixel_centred_at_zero() {
        let w = ParamWindow::interval(-4.0, 4.0, 257).unwrap();
        assert_eq!(w.pixel_center(128, 0)[0], 0.0);
        assert_eq!(w.pixel_of(&Vector::from_element(1, 0.0)), Some((128, 0)));
        assert!((w.pixel_center(0, 0)[0] + 4.0 - 4.0 / 257.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(ParamWindow::interval(-1.0, 1.0, 1).is_err());
        let c = Vector::zeros(2);
        let skew = vec![Vector::from_vec(vec![1.0, 0.0]), Vector::from_vec(vec![1.0, 1.0])];
        assert!(ParamWindow::new(c, skew, vec![1.0, 1.0], 8).is_err());
    }

    #[test]
    fn square_window_geometry() {
        let w = ParamWindow::square(Vector::zeros(3), 1.0, 4).unwrap();
        assert_eq!(w.len(), 16);
        let p = w.pixel_center(3, 0);
        assert!((p[0] - 0.75).abs() < 1e-12 && (p[1] + 0.75).abs() < 1e-12 && p[2] == 0.0);
        assert_eq!(w.pixel_of(&p), Some((3, 0)));
        assert!((w.max_corner_norm() - 2f64.sqrt()).abs() < 1e-12);
    }
}
