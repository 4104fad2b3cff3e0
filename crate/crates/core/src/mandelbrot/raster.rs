use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::window::ParamWindow;
use crate::connectivity::{Class, ClassifyPolicy, Verdict};
use crate::maps::{Body, ContractionMap, ContractionModulus};

/// Row-major grid over a window; row `j` holds second-axis index `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(width * height, data.len(), "raster size mismatch");
        Raster { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[j * self.width + i]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Binary portable graymap, top row first. The top row is the largest
    /// second-axis index.
    pub fn to_pgm<F: Fn(&T) -> u8>(&self, gray: F) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for j in (0..self.height).rev() {
            out.extend(self.data[j * self.width..(j + 1) * self.width].iter().map(&gray));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub connected: usize,
    pub disconnected: usize,
    pub unknown: usize,
}

impl ClassCounts {
    pub fn tally<'a, I: IntoIterator<Item = &'a Class>>(classes: I) -> Self {
        let mut c = ClassCounts::default();
        for class in classes {
            match class {
                Class::Connected => c.connected += 1,
                Class::Disconnected => c.disconnected += 1,
                Class::Unknown => c.unknown += 1,
            }
        }
        c
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

/// Provenance of an emitted raster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: String,
    pub maps: Value,
    pub window: ParamWindow,
    pub eps_schedule: Vec<f64>,
    pub policy: ClassifyPolicy,
    pub fastpath_enabled: bool,
    pub fastpath_used: bool,
    pub workers: usize,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    pub counts: ClassCounts,
    pub timings: Timings,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationRaster {
    pub window: ParamWindow,
    pub verdicts: Raster<Verdict>,
    pub report: SweepReport,
}

impl ClassificationRaster {
    pub fn class_at(&self, i: usize, j: usize) -> Class {
        self.verdicts.get(i, j).class
    }

    pub fn classes(&self) -> Raster<Class> {
        Raster::from_vec(
            self.verdicts.width(),
            self.verdicts.height(),
            self.verdicts.iter().map(|v| v.class).collect(),
        )
    }

    pub fn counts(&self) -> ClassCounts {
        ClassCounts::tally(self.verdicts.iter().map(|v| &v.class))
    }

    /// CONNECTED=255, UNKNOWN=128, DISCONNECTED=0.
    pub fn to_pgm(&self) -> Vec<u8> {
        self.verdicts.to_pgm(|v| v.class.gray())
    }

    /// Per-pixel certificates: `i,j,w0,...,class,gap,components,resolutions,margin`.
    pub fn to_csv(&self) -> String {
        let d = self.window.dim();
        let mut out = String::from("i,j,");
        for k in 0..d {
            out.push_str(&format!("w{k},"));
        }
        out.push_str(Verdict::CSV_TAIL);
        out.push('\n');
        for j in 0..self.verdicts.height() {
            for i in 0..self.verdicts.width() {
                let w = self.window.pixel_center(i, j);
                out.push_str(&format!("{i},{j},"));
                out.push_str(&self.verdicts.get(i, j).csv_row(w.as_slice()));
                out.push('\n');
            }
        }
        out
    }
}

/// Membership image of a set of parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipRaster {
    pub window: ParamWindow,
    pub members: Raster<bool>,
}

impl MembershipRaster {
    pub fn is_member(&self, i: usize, j: usize) -> bool {
        *self.members.get(i, j)
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    /// Members 255, others 0.
    pub fn to_pgm(&self) -> Vec<u8> {
        self.members.to_pgm(|&m| if m { 255 } else { 0 })
    }

    /// `i,j,w0,...,member` with `member` 0 or 1.
    pub fn to_csv(&self) -> String {
        let d = self.window.dim();
        let mut out = String::from("i,j,");
        for k in 0..d {
            out.push_str(&format!("w{k},"));
        }
        out.push_str("member\n");
        for j in 0..self.members.height() {
            for i in 0..self.members.width() {
                let w = self.window.pixel_center(i, j);
                let coords: Vec<String> = w.iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&format!("{i},{j},{},{}\n", coords.join(","), *self.members.get(i, j) as u8));
            }
        }
        out
    }
}

/// JSON description of a map for provenance records.
pub fn describe_map(m: &ContractionMap) -> Value {
    let modulus = match m.modulus() {
        ContractionModulus::Linear { rate } => json!({"linear": rate}),
        ContractionModulus::Tabulated(t) => json!({"tabulated": {"t": t.grid(), "phi": t.values()}}),
        ContractionModulus::Eventual { steps, rate, step_bound } => {
            json!({"eventual": {"steps": steps, "rate": rate, "step_bound": step_bound}})
        }
    };
    match m.body() {
        Body::Affine(a) => json!({
            "affine": {
                "matrix": crate::linalg::matrix_to_rows(a.linear_part()),
                "offset": a.offset().iter().collect::<Vec<_>>(),
            },
            "modulus": modulus,
        }),
        Body::Named(n) => json!({"named": n.name(), "dim": n.dim(), "modulus": modulus}),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_puts_high_rows_first() {
        let r = Raster::from_vec(2, 2, vec![1u8, 2, 3, 4]);
        let pgm = r.to_pgm(|&v| v);
        assert_eq!(&pgm[..11], b"P5\n2 2\n255\n");
        assert_eq!(&pgm[11..], &[3, 4, 1, 2]);
    }

    #[test]
    fn tally_counts_each_class() {
        let c = ClassCounts::tally(&[Class::Connected, Class::Unknown, Class::Connected]);
        assert_eq!(c, ClassCounts { connected: 2, disconnected: 0, unknown: 1 });
    }
}
