//! Hausdorff distance and minimum distance between finite point sets.

use rayon::prelude::*;

use super::cellset::CellSet;
use crate::error::{check_dim, Result};
use crate::spatial::KdTree;

const PAR_MIN: usize = 2048;

/// Hausdorff distance between the cell-centre sets of `a` and `b`.
///
/// Relative to the covered compact sets the value is accurate to within
/// `(ε_a + ε_b)·√d/2`.
pub fn hausdorff_distance(a: &CellSet, b: &CellSet) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    if a.eps() == b.eps() {
        if a == b {
            return Ok(0.0);
        }
        // Centres shared by both sets contribute nothing to either excess.
        let only_a = difference(a.keys(), b.keys());
        let only_b = difference(b.keys(), a.keys());
        let ea = excess_keys(a, &only_a, b);
        let eb = excess_keys(b, &only_b, a);
        return Ok(ea.max(eb));
    }
    let pa = a.centers();
    let pb = b.centers();
    Ok(hausdorff_points(a.dim(), &pa, &pb))
}

/// Hausdorff distance between two nonempty flat point buffers.
pub fn hausdorff_points(dim: usize, a: &[f64], b: &[f64]) -> f64 {
    let ta = KdTree::new(dim, a);
    let tb = KdTree::new(dim, b);
    excess(dim, a, &tb).max(excess(dim, b, &ta))
}

/// `max_{p∈a} min_{q∈b} ‖p − q‖`.
pub fn excess(dim: usize, a: &[f64], tree_b: &KdTree) -> f64 {
    let worst = if a.len() / dim >= PAR_MIN {
        a.par_chunks(dim).map(|p| tree_b.nearest_sq(p)).reduce(|| 0.0, f64::max)
    } else {
        a.chunks(dim).map(|p| tree_b.nearest_sq(p)).fold(0.0, f64::max)
    };
    worst.sqrt()
}

/// Smallest Euclidean distance between the cell centres of `a` and `b`.
pub fn min_center_distance(a: &CellSet, b: &CellSet) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    if a.eps() == b.eps() && a.shares_cell_with(b) {
        return Ok(0.0);
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    Ok(min_distance_points(a.dim(), &small.centers(), &large.centers()))
}

pub fn min_distance_points(dim: usize, a: &[f64], b: &[f64]) -> f64 {
    let tree = KdTree::new(dim, b);
    let best = if a.len() / dim >= PAR_MIN {
        a.par_chunks(dim).map(|p| tree.nearest_sq(p)).reduce(|| f64::INFINITY, f64::min)
    } else {
        a.chunks(dim).map(|p| tree.nearest_sq(p)).fold(f64::INFINITY, f64::min)
    };
    best.sqrt()
}

fn difference(a: &[u128], b: &[u128]) -> Vec<u128> {
    let mut out = Vec::new();
    let mut j = 0;
    for &k in a {
        while j < b.len() && b[j] < k {
            j += 1;
        }
        if j >= b.len() || b[j] != k {
            out.push(k);
        }
    }
    out
}

fn excess_keys(owner: &CellSet, keys: &[u128], other: &CellSet) -> f64 {
    if keys.is_empty() {
        return 0.0;
    }
    let codec = owner.codec();
    let dim = owner.dim();
    let eps = owner.eps();
    let mut pts = Vec::with_capacity(keys.len() * dim);
    let mut idx = vec![0i64; dim];
    for &k in keys {
        codec.decode(k, &mut idx);
        pts.extend(idx.iter().map(|&i| (i as f64 + 0.5) * eps));
    }
    let tree = KdTree::new(dim, &other.centers());
    excess(dim, &pts, &tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_sets_are_at_distance_zero() {
        let s = CellSet::cover_box(&[0.0, 0.0], &[1.0, 0.5], 0.125).unwrap();
        assert_eq!(hausdorff_distance(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn three_four_five() {
        assert!((hausdorff_points(2, &[0.0, 0.0], &[3.0, 4.0]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn unit_versus_double_interval() {
        let eps = 1.0 / 64.0;
        let a = CellSet::cover_box(&[0.0], &[1.0], eps).unwrap();
        let b = CellSet::cover_box(&[0.0], &[2.0], eps).unwrap();
        let h = hausdorff_distance(&a, &b).unwrap();
        assert!((h - 1.0).abs() <= eps, "{h}");
    }

    #[test]
    fn mixed_resolutions_fall_back_to_points() {
        let a = CellSet::cover_box(&[0.0], &[1.0], 0.25).unwrap();
        let b = CellSet::cover_box(&[0.0], &[1.0], 0.125).unwrap();
        let h = hausdorff_distance(&a, &b).unwrap();
        assert!(h <= (0.25 + 0.125) / 2.0 + 1e-12);
    }

    #[test]
    fn min_distance_of_separated_intervals() {
        let eps = 1.0 / 32.0;
        let a = CellSet::cover_box(&[0.0], &[1.0 / 3.0], eps).unwrap();
        let b = CellSet::cover_box(&[2.0 / 3.0], &[1.0], eps).unwrap();
        let g = min_center_distance(&a, &b).unwrap();
        assert!((g - 1.0 / 3.0).abs() <= 2.0 * eps, "{g}");
    }

    fn arb_set() -> impl Strategy<Value = CellSet> {
        proptest::collection::vec((-20i64..20, -20i64..20), 1..40).prop_map(|cells| {
            CellSet::from_indices(2, 0.25, cells.into_iter().map(|(a, b)| vec![a, b])).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metric_axioms(a in arb_set(), b in arb_set(), c in arb_set()) {
            let ab = hausdorff_distance(&a, &b).unwrap();
            let ba = hausdorff_distance(&b, &a).unwrap();
            let bc = hausdorff_distance(&b, &c).unwrap();
            let ac = hausdorff_distance(&a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(ab == 0.0, a == b);
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn fast_path_matches_points(a in arb_set(), b in arb_set()) {
            let fast = hausdorff_distance(&a, &b).unwrap();
            let slow = hausdorff_points(2, &a.centers(), &b.centers());
            prop_assert!((fast - slow).abs() <= 1e-12);
        }
    }
}
