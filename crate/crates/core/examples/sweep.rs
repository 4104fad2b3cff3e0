//! Sweeps the translation parameter of the thirds pair over `[-4, 4]`,
//! prints the class counts and optionally writes the raster as a PGM.
//!
//! `cargo run --release --example sweep -- /tmp/thirds.pgm`

use ifsconn::connectivity::Class;
use ifsconn::mandelbrot::{sweep, ParamWindow, SweepPolicy};
use ifsconn::maps::{AffineMap, ContractionMap};

fn main() -> ifsconn::Result<()> {
    let thirds = ContractionMap::affine(AffineMap::scalar(1, 1.0 / 3.0)?)?;
    let window = ParamWindow::interval(-4.0, 4.0, 257)?;
    let policy = SweepPolicy { fastpath: false, ..Default::default() };
    let raster = sweep(&thirds, &thirds, &window, &policy)?;

    let counts = raster.counts();
    println!("connected {} disconnected {} unknown {}", counts.connected, counts.disconnected, counts.unknown);
    for i in 0..window.width() {
        if raster.class_at(i, 0) != Class::Disconnected {
            println!("pixel {i} at w = {:+.5}: {}", window.pixel_center(i, 0)[0], raster.class_at(i, 0));
        }
    }
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, raster.to_pgm())?;
        println!("wrote {path}");
    }
    Ok(())
}
