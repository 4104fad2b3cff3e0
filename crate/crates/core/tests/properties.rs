//! Property tests for the invariants of the library.

use proptest::prelude::*;

use ifsconn::config::LoadedConfig;
use ifsconn::connectivity::{classify, epsilon_components, Class, ClassifyPolicy};
use ifsconn::linalg::{self, Matrix, Vector};
use ifsconn::mandelbrot::{sweep, ParamWindow, SweepPolicy};
use ifsconn::maps::{
    apply_map, fixed_point, matkowski_verify, partial_sum_closed_form, partial_sum_map, AffineMap, ContractionMap,
    PartialSumMap, SelfMap,
};
use ifsconn::sets::{
    attractor_approx, bound_radius, chaos_game, hausdorff_distance, hutchinson_step, image_cellset, CellSet,
};
use ifsconn::spatial::KdTree;
use ifsconn::union_find::UnionFind;

fn matrix(d: usize, entries: &[f64], rate: f64) -> Matrix {
    let m = Matrix::from_iterator(d, d, entries.iter().copied().take(d * d));
    let n = linalg::spectral_norm(&m);
    if n < 1e-9 {
        linalg::identity(d) * rate
    } else {
        m * (rate / n)
    }
}

fn affine(d: usize, entries: &[f64], offset: &[f64], rate: f64) -> ContractionMap {
    let b = Vector::from_iterator(d, offset.iter().copied().take(d));
    ContractionMap::affine(AffineMap::new(matrix(d, entries, rate), b).unwrap()).unwrap()
}

fn scalar(r: f64) -> ContractionMap {
    ContractionMap::affine(AffineMap::scalar(1, r).unwrap()).unwrap()
}

fn cellset(d: usize, eps: f64, cells: &[(i64, i64, i64)]) -> CellSet {
    let idx = cells.iter().map(|&(a, b, c)| [a, b, c][..d].to_vec());
    CellSet::from_indices(d, eps, idx).unwrap()
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 16)
}

fn cells() -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
    prop::collection::vec((-30i64..30, -30i64..30, -30i64..30), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_preserves_modulus(
        d in 1usize..=3, m in coords(), b in coords(), w in coords(), x in coords(), y in coords(),
        rate in 0.05..0.95f64,
    ) {
        let g = affine(d, &m, &b, rate);
        let gw = g.translate(Vector::from_iterator(d, w.iter().map(|v| v * 4.0).take(d))).unwrap();
        let x = Vector::from_iterator(d, x.iter().copied().take(d));
        let y = Vector::from_iterator(d, y.iter().copied().take(d));
        let moved = (apply_map(&gw, &x).unwrap() - apply_map(&gw, &y).unwrap()).norm();
        let base = (apply_map(&g, &x).unwrap() - apply_map(&g, &y).unwrap()).norm();
        prop_assert!((moved - base).abs() <= 1e-12 * (1.0 + base));
        prop_assert!(moved <= SelfMap::modulus(&gw).phi((&x - &y).norm()) + 1e-12);
    }

    #[test]
    fn fixed_point_residual_within_tolerance(d in 1usize..=4, m in coords(), b in coords(), rate in 0.0..0.95f64) {
        let g = affine(d, &m, &b, rate);
        let tol = 1e-10;
        let x = fixed_point(&g, tol).unwrap();
        prop_assert!((apply_map(&g, &x).unwrap() - &x).norm() <= tol);
    }

    #[test]
    fn partial_sum_forms_agree_and_invert(d in 1usize..=4, m in coords(), w in coords(), rate in 0.0..=0.9f64, n in 1usize..=20) {
        let l = matrix(d, &m, rate);
        let w = Vector::from_iterator(d, w.iter().copied().take(d));
        let a = partial_sum_map(&l, n, &w).unwrap();
        let b = partial_sum_closed_form(&l, n, &w).unwrap();
        prop_assert!((&a - &b).norm() <= 1e-10 * a.norm().max(b.norm()).max(1e-300));
        let h = PartialSumMap::new(&l, n).unwrap();
        let back = h.inverse(&a).unwrap();
        prop_assert!((back - &w).norm() <= 1e-9 * (1.0 + w.norm()));
    }

    #[test]
    fn hausdorff_is_a_metric(d in 1usize..=3, a in cells(), b in cells(), c in cells()) {
        let eps = 0.125;
        let (a, b, c) = (cellset(d, eps, &a), cellset(d, eps, &b), cellset(d, eps, &c));
        let ab = hausdorff_distance(&a, &b).unwrap();
        prop_assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        prop_assert!((ab - hausdorff_distance(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert!(hausdorff_distance(&a, &c).unwrap() <= ab + hausdorff_distance(&b, &c).unwrap() + 1e-12);
        prop_assert_eq!(ab == 0.0, a == b);
    }

    #[test]
    fn hutchinson_step_contracts(
        d in 1usize..=3, a in cells(), b in cells(), mf in coords(), mg in coords(), off in coords(), w in coords(),
        rf in 0.05..0.9f64, rg in 0.05..0.9f64,
    ) {
        let eps = 1.0 / 32.0;
        let f = affine(d, &mf, &off, rf);
        let g = affine(d, &mg, &[0.0; 3], rg);
        let gw = g.translate(Vector::from_iterator(d, w.iter().copied().take(d))).unwrap();
        let (a, b) = (cellset(d, eps, &a), cellset(d, eps, &b));
        let before = hausdorff_distance(&a, &b).unwrap();
        let after = hausdorff_distance(&hutchinson_step(&f, &gw, &a).unwrap(), &hutchinson_step(&f, &gw, &b).unwrap()).unwrap();
        prop_assert!(after <= rf.max(rg) * before + 2.0 * eps * (d as f64).sqrt());
    }

    #[test]
    fn image_covers_exact_image_of_an_interval(lo in -3.0..3.0f64, len in 0.0..2.0f64, r in -0.95..0.95f64, c in -2.0..2.0f64) {
        let eps = 1.0 / 64.0;
        let s = CellSet::cover_box(&[lo], &[lo + len], eps).unwrap();
        let m = ContractionMap::affine(AffineMap::new(Matrix::from_element(1, 1, r), Vector::from_element(1, c)).unwrap()).unwrap();
        let img = image_cellset(&m, &s).unwrap();
        for k in 0..=64 {
            let x = lo + len * k as f64 / 64.0;
            let y = r * x + c;
            let idx = img.cell_index(&[y]).unwrap();
            prop_assert!(img.contains_index(&idx), "image point {} of {} not covered", y, x);
        }
    }

    #[test]
    fn cellset_codecs_round_trip(d in 1usize..=3, c in cells(), k in 0i32..8) {
        let s = cellset(d, 1.0 / f64::from(1 << k), &c);
        prop_assert_eq!(CellSet::from_text(&s.to_text()).unwrap(), s.clone());
        prop_assert_eq!(CellSet::from_bytes(&s.to_bytes()).unwrap(), s);
    }

    #[test]
    fn kd_tree_nearest_matches_brute_force(d in 1usize..=3, pts in prop::collection::vec(-5.0..5.0f64, 3..90), q in coords()) {
        let n = pts.len() / d;
        let pts = &pts[..n * d];
        let tree = KdTree::new(d, pts);
        let q = &q[..d];
        let brute = pts
            .chunks(d)
            .map(|p| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((tree.nearest_sq(q) - brute).abs() <= 1e-12);
    }

    #[test]
    fn union_find_matches_label_propagation(n in 1usize..40, edges in prop::collection::vec((0usize..40, 0usize..40), 0..60)) {
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|&(a, b)| a < n && b < n).collect();
        let mut uf = UnionFind::new(n);
        for &(a, b) in &edges {
            uf.union(a, b);
        }
        let mut label: Vec<usize> = (0..n).collect();
        loop {
            let mut changed = false;
            for &(a, b) in &edges {
                let m = label[a].min(label[b]);
                if label[a] != m || label[b] != m {
                    label[a] = m;
                    label[b] = m;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        label.sort_unstable();
        label.dedup();
        prop_assert_eq!(uf.count(), label.len());
    }

    #[test]
    fn window_pixels_round_trip(lo in -5.0..5.0f64, len in 0.1..10.0f64, res in 1usize..300, pick in 0.0..1.0f64) {
        let w = ParamWindow::interval(lo, lo + len, res).unwrap();
        let i = ((pick * res as f64) as usize).min(res - 1);
        prop_assert_eq!(w.pixel_of(&w.pixel_center(i, 0)), Some((i, 0)));
    }

    #[test]
    fn config_hash_ignores_layout(seed in 0u64..1000, eps in 0.001..1.0f64) {
        let a = format!(r#"{{"version":1,"seed":{seed},"attractor":{{"w":[0.5],"eps":{eps}}}}}"#);
        let b = format!("{{\n  \"attractor\": {{ \"eps\": {eps},\n \"w\": [ 0.5 ] }},\n  \"seed\": {seed}, \"version\": 1\n}}\n");
        prop_assert_eq!(LoadedConfig::parse(&a, "a").unwrap().hash, LoadedConfig::parse(&b, "b").unwrap().hash);
    }

    #[test]
    fn affine_maps_pass_their_own_modulus_check(d in 1usize..=3, m in coords(), b in coords(), rate in 0.01..0.99f64, seed in 0u64..1000) {
        let g = affine(d, &m, &b, rate);
        let rep = matkowski_verify(&g, 200, seed);
        prop_assert!(rep.pass, "{:?}", rep);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// On `{r·x, r·x + w}` the images of the attractor intersect exactly
    /// when `r ≥ 1/2` or `w = 0`.
    #[test]
    fn one_dimensional_verdicts_match_exact_criterion(r in 0.05..0.95f64, w in -3.0..3.0f64) {
        prop_assume!(w.abs() > 1e-3);
        let m = scalar(r);
        let policy = ClassifyPolicy { eps0: 1.0 / 32.0, levels: 4, ..Default::default() };
        let v = classify(&m, &m, &Vector::from_element(1, w), &policy).unwrap();
        let truth = if r >= 0.5 { Class::Connected } else { Class::Disconnected };
        prop_assert!(v.class == truth || v.class == Class::Unknown, "r={} w={} got {:?}", r, w, v);
        let c = &v.certificate;
        match v.class {
            Class::Disconnected => prop_assert!(c.gap > c.threshold),
            Class::Connected => prop_assert!(c.gap <= c.threshold),
            Class::Unknown => {}
        }
    }

    #[test]
    fn attractor_cover_stays_in_bound_ball(d in 1usize..=2, mf in coords(), mg in coords(), off in coords(), w in coords(), rf in 0.1..0.7f64, rg in 0.1..0.7f64) {
        let f = affine(d, &mf, &off, rf);
        let g = affine(d, &mg, &off[3..], rg);
        let gw = g.translate(Vector::from_iterator(d, w.iter().copied().take(d))).unwrap();
        let eps = 1.0 / 32.0;
        let a = attractor_approx(&f, &gw, eps, eps / 4.0).unwrap();
        let radius = bound_radius(&f, &gw).unwrap() + eps * (d as f64).sqrt();
        let far = a.cover.centers().chunks(d).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        prop_assert!(far <= radius);
    }

    #[test]
    fn chaos_orbit_lies_near_the_cover(w in 0.1..2.0f64, seed in 0u64..1000) {
        let f = scalar(0.5);
        let gw = f.translate(Vector::from_element(1, w)).unwrap();
        let cloud = chaos_game(&f, &gw, 2000, seed).unwrap();
        prop_assert_eq!(&cloud, &chaos_game(&f, &gw, 2000, seed).unwrap());
        for p in cloud.iter() {
            prop_assert!(p[0] >= -1e-9 && p[0] <= 2.0 * w + 1e-9);
        }
    }

    #[test]
    fn sweep_equals_pixelwise_classification(lo in -2.0..0.0f64, len in 0.5..3.0f64, res in 2usize..9, r in 0.2..0.6f64) {
        let m = scalar(r);
        let window = ParamWindow::interval(lo, lo + len, res).unwrap();
        let policy = SweepPolicy {
            classify: ClassifyPolicy { eps0: 1.0 / 16.0, levels: 3, ..Default::default() },
            fastpath: false,
            workers: 2,
        };
        let raster = sweep(&m, &m, &window, &policy).unwrap();
        for i in 0..res {
            let v = classify(&m, &m, &window.pixel_center(i, 0), &policy.classify).unwrap();
            prop_assert_eq!(raster.verdicts.get(i, 0), &v);
        }
    }

    #[test]
    fn intervals_form_one_component(lo in -4.0..4.0f64, len in 0.0..3.0f64, k in 2i32..8) {
        let eps = 1.0 / f64::from(1 << k);
        let s = CellSet::cover_box(&[lo, -lo], &[lo + len, -lo + len / 2.0], eps).unwrap();
        prop_assert_eq!(epsilon_components(&s, 1).unwrap(), 1);
    }
}
