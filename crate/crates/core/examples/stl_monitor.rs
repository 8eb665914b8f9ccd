//! Robustness of temporal-logic rules over a recorded separation trace.

use ctaf_sim::stl::{parse_formula, robustness, Trace};

fn main() {
    let sep: Vec<f64> = (0..61).map(|t| 1500.0 - 40.0 * t as f64 + 0.6 * (t * t) as f64).collect();
    let alt: Vec<f64> = (0..61).map(|t| 300.0 + 2.0 * t as f64).collect();
    let trace = Trace::new(1.0).with("sep", sep).with("alt", alt);
    for text in [
        "(G 0 60 (>= sep 300))",
        "(G 0 60 (>= sep 900))",
        "(and (G 0 60 (>= sep 300)) (G 0 60 (<= alt 360)))",
        "(F 0 30 (<= sep 900))",
    ] {
        let f = parse_formula(text).unwrap();
        println!("{f}  rho = {:.1}", robustness(&f, &trace, 0).unwrap());
    }
}
