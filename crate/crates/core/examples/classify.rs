//! Classifies a few one-dimensional two-map systems `{r·x, r·x + w}` and
//! prints the verdict with its certificate.

use ifsconn::connectivity::{classify, ClassifyPolicy};
use ifsconn::linalg::Vector;
use ifsconn::maps::{AffineMap, ContractionMap};

fn main() -> ifsconn::Result<()> {
    let policy = ClassifyPolicy::default();
    let cases = [(0.5, 1.0), (1.0 / 3.0, 1.0), (1.0 / 3.0, 0.0), (0.45, 0.3)];
    println!("{:>6} {:>6}  {:<12} {:>9} {:>9} {:>10}", "ratio", "w", "class", "gap", "threshold", "components");
    for (r, w) in cases {
        let m = ContractionMap::affine(AffineMap::scalar(1, r)?)?;
        let v = classify(&m, &m, &Vector::from_element(1, w), &policy)?;
        let c = &v.certificate;
        let comps = c.components.map_or_else(|| "-".to_string(), |n| n.to_string());
        println!("{r:>6.3} {w:>6.2}  {:<12} {:>9.5} {:>9.5} {:>10}", v.class.as_str(), c.gap, c.threshold, comps);
    }
    Ok(())
}
