//! Checks `t·A_w = A_{tw}` for the linear halves pair at a few scales.

use ifsconn::linalg::Vector;
use ifsconn::mandelbrot::scaling_reduce;
use ifsconn::maps::{AffineMap, ContractionMap};

fn main() -> ifsconn::Result<()> {
    let half = ContractionMap::affine(AffineMap::scalar(1, 0.5)?)?;
    let w = Vector::from_element(1, 1.0);
    let eps = 1.0 / 256.0;
    for t in [1.0, 2.0, -0.5, 3.5, -4.0] {
        let r = scaling_reduce(&half, &half, &w, t, eps, eps / 4.0)?;
        let status = if r.holds() { "ok" } else { "VIOLATED" };
        println!("t = {t:+.2}: residual {:.5} bound {:.5} {status}", r.residual, r.bound);
    }
    Ok(())
}
