//! Compares a sweep of the halves and thirds pairs with the covering upper
//! bound and reports how many CONNECTED pixels the bound misses.

use ifsconn::connectivity::Class;
use ifsconn::mandelbrot::{covering_upper_bound, sweep, ParamWindow, SweepPolicy};
use ifsconn::maps::{AffineMap, ContractionMap};

fn main() -> ifsconn::Result<()> {
    let window = ParamWindow::interval(-2.0, 2.0, 65)?;
    let policy = SweepPolicy { fastpath: false, ..Default::default() };
    for (name, r) in [("halves", 0.5), ("thirds", 1.0 / 3.0)] {
        let m = ContractionMap::affine(AffineMap::scalar(1, r)?)?;
        let raster = sweep(&m, &m, &window, &policy)?;
        let bound = covering_upper_bound(&m, &m, 2.0, 12, &window, 1.0 / 256.0)?;
        let connected = (0..window.width()).filter(|&i| raster.class_at(i, 0) == Class::Connected).count();
        let missed = (0..window.width())
            .filter(|&i| raster.class_at(i, 0) == Class::Connected && !bound.is_member(i, 0))
            .count();
        println!("{name}: {connected} connected, {} marked by the bound, {missed} missed", bound.count());
    }
    Ok(())
}
