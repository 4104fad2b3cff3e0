//! Computes `M_{g,n,D}` for `g = x/2` and `D` a cover of `[0, 1]` two ways
//! and prints the member interval of each.

use ifsconn::linalg::Matrix;
use ifsconn::mandelbrot::{mset_compute, mset_direct_raster, MembershipRaster, ParamWindow};
use ifsconn::sets::CellSet;

fn span(r: &MembershipRaster) -> Option<(f64, f64)> {
    let xs: Vec<f64> = (0..r.window.width())
        .filter(|&i| r.is_member(i, 0))
        .map(|i| r.window.pixel_center(i, 0)[0])
        .collect();
    Some((*xs.first()?, *xs.last()?))
}

fn main() -> ifsconn::Result<()> {
    let l = Matrix::from_element(1, 1, 0.5);
    let eps = 1.0 / 512.0;
    let d = CellSet::cover_box(&[0.0], &[1.0], eps)?;
    let window = ParamWindow::interval(-2.0, 2.0, 401)?;
    for n in 1..=3 {
        let fast = mset_compute(&l, n, &d, &window)?;
        let direct = mset_direct_raster(&l, n, &d, &window)?;
        let agree = fast.members.iter().zip(direct.members.iter()).filter(|(a, b)| a == b).count();
        let (lo, hi) = span(&fast).unwrap_or((f64::NAN, f64::NAN));
        println!(
            "n = {n}: members in [{lo:+.4}, {hi:+.4}], {} pixels, agreement {agree}/{}",
            fast.count(),
            window.len()
        );
    }
    Ok(())
}
