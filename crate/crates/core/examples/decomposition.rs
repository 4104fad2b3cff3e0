//! Shows the residual of `g(A) = ⋃ g^n(f(A)) ∪ {e}` shrinking with the
//! number of terms for the halves and thirds pairs.

use ifsconn::connectivity::decomposition_check;
use ifsconn::linalg::Vector;
use ifsconn::maps::{AffineMap, ContractionMap};
use ifsconn::sets::attractor_approx;

fn main() -> ifsconn::Result<()> {
    let eps = 1.0 / 1024.0;
    for (r, w) in [(0.5, 0.5), (1.0 / 3.0, 2.0 / 3.0)] {
        let f = ContractionMap::affine(AffineMap::scalar(1, r)?)?;
        let gw = f.translate(Vector::from_element(1, w))?;
        let a = attractor_approx(&f, &gw, eps, eps / 4.0)?;
        println!("ratio {r:.4}, w = {w:.4}");
        for n in 1..=10 {
            let res = decomposition_check(&f, &gw, &a, n)?;
            println!("  N = {n:>2}: residual {res:.6}  (r^N + 3eps = {:.6})", r.powi(n as i32) + 3.0 * eps);
        }
    }
    Ok(())
}
