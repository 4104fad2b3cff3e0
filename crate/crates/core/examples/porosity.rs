//! A small dimension scan of the default truncation family followed by a
//! strong-porosity witness search among the connected samples.
//!
//! The acceptance-size scan (400 samples per dimension) takes minutes; this
//! example uses 100.

use ifsconn::connectivity::Class;
use ifsconn::linalg::Vector;
use ifsconn::porosity::{dimension_scan_detailed, scan_policy, strong_porosity_probe, ScanRow, TruncationFamily};

fn main() -> ifsconn::Result<()> {
    let family = TruncationFamily::default_decaying(vec![2, 4]);
    let details = dimension_scan_detailed(&family, 2.0, 100, 7, &scan_policy())?;
    println!("{}", ScanRow::CSV_HEADER);
    for d in &details {
        println!("{}", d.row.csv());
    }
    for d in &details {
        let hits: Vec<Vector> =
            d.samples.iter().filter(|s| s.verdict.class == Class::Connected).map(|s| s.w.clone()).collect();
        let origin = Vector::zeros(d.row.d);
        match strong_porosity_probe(&hits, &origin, 1.0, 0.25, 200, 7)? {
            Some(y) => println!("d = {}: witness at distance 1, first coordinates {:.3?}", d.row.d, &y.as_slice()[..2]),
            None => println!("d = {}: no witness in 200 trials", d.row.d),
        }
    }
    Ok(())
}
