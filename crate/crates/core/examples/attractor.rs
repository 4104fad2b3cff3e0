//! Approximates the attractor of `{x/2, x/2 + w}` and prints its cover.
//!
//! `cargo run --example attractor -- 0.5 0.0078125`

use ifsconn::maps::{AffineMap, ContractionMap};
use ifsconn::linalg::Vector;
use ifsconn::sets::attractor_approx;

fn main() -> ifsconn::Result<()> {
    let mut args = std::env::args().skip(1);
    let w: f64 = args.next().map_or(Ok(0.5), |s| s.parse()).expect("w must be a number");
    let eps: f64 = args.next().map_or(Ok(1.0 / 128.0), |s| s.parse()).expect("eps must be a number");

    let half = ContractionMap::affine(AffineMap::scalar(1, 0.5)?)?;
    let gw = half.translate(Vector::from_element(1, w))?;
    let a = attractor_approx(&half, &gw, eps, eps / 4.0)?;

    let (lo, hi) = a.cover.bounds();
    println!("w = {w}, eps = {eps}");
    println!("cells       {}", a.cover.len());
    println!("iterations  {}", a.iterations);
    println!("err         {:.6}", a.err);
    println!("extent      [{:.6}, {:.6}]", lo[0], hi[0]);
    println!("exact       [{:.6}, {:.6}]", w.min(0.0), 2.0 * w.max(0.0));
    Ok(())
}
