//! Builds the two-map systems of a few self-affine tiles and checks that
//! each tile is connected.

use ifsconn::connectivity::{classify, ClassifyPolicy};
use ifsconn::linalg::Vector;
use ifsconn::mandelbrot::tiles::contracting_power;
use ifsconn::mandelbrot::{tile_ifs, TileSpec};

fn main() -> ifsconn::Result<()> {
    let tiles = [
        ("unit interval", TileSpec::new(vec![vec![2.0]], vec![vec![0.0], vec![1.0]])),
        ("cantor set", TileSpec::new(vec![vec![3.0]], vec![vec![0.0], vec![2.0]])),
        (
            "twindragon",
            TileSpec::new(vec![vec![1.0, -1.0], vec![1.0, 1.0]], vec![vec![0.0, 0.0], vec![1.0, 0.0]]),
        ),
    ];
    let policy = ClassifyPolicy { eps0: 1.0 / 16.0, levels: 5, ..Default::default() };
    for (name, spec) in tiles {
        let inverse = spec.a()?.try_inverse().expect("expanding matrices are invertible");
        let (m, rate) = contracting_power(&inverse)?;
        let maps = tile_ifs(&spec)?;
        let v = classify(&maps[0], &maps[1], &Vector::zeros(spec.dim()), &policy)?;
        println!(
            "{name:<14} m = {m}, rate {rate:.4}: {} (components {:?})",
            v.class, v.certificate.components
        );
    }
    Ok(())
}
