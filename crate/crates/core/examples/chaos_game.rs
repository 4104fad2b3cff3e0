//! Runs the chaos game on the twindragon pair and compares the orbit with
//! the cell cover.
//!
//! `cargo run --release --example chaos_game -- /tmp/orbit.csv`

use ifsconn::linalg::Vector;
use ifsconn::mandelbrot::{tile_ifs, TileSpec};
use ifsconn::sets::{attractor_approx, chaos_game, hausdorff_points};

fn main() -> ifsconn::Result<()> {
    let spec = TileSpec::new(vec![vec![1.0, -1.0], vec![1.0, 1.0]], vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
    let maps = tile_ifs(&spec)?;
    let f = &maps[0];
    let gw = maps[1].translate(Vector::zeros(2))?;

    let cloud = chaos_game(f, &gw, 100_000, 42)?;
    let eps = 1.0 / 64.0;
    let cover = attractor_approx(f, &gw, eps, eps / 4.0)?;
    let h = hausdorff_points(2, cloud.flat(), &cover.cover.centers());
    println!("{} orbit points, {} cells, err {:.4}", cloud.len(), cover.cover.len(), cover.err);
    println!("Hausdorff distance orbit to cover: {h:.4}");

    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, cloud.to_csv())?;
        println!("wrote {path}");
    }
    Ok(())
}
