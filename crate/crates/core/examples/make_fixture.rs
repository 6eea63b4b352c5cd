//! Writes a synthetic data set shaped like a longitudinal gene-expression
//! study: 28 subjects observed two to six times, 400 covariates, one of which
//! carries a strong effect.
//!
//! Usage: `cargo run --example make_fixture -- <output.csv>`

use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use ridge_lmm::rng;
use ridge_lmm::simulate::{draw_raw_design, DesignModel};

const P: usize = 400;
const SIGNAL: usize = 123;

fn main() {
    let path = std::env::args().nth(1).expect("output path");
    let mut sizes: Vec<usize> = (0..28).map(|m| 2 + m % 5).collect();
    sizes[26] += 1;
    sizes[27] += 1;
    let n: usize = sizes.iter().sum();

    let mut rng = rng::stream(2024, &[]);
    let x = draw_raw_design(DesignModel::M1, n, P, &mut rng);
    let mut csv = String::from("subject,response");
    for j in 0..P {
        if j == SIGNAL {
            csv.push_str(",YXLD_at");
        } else {
            write!(csv, ",gene_{j:04}").unwrap();
        }
    }
    csv.push('\n');
    let mut row = 0;
    for (m, &size) in sizes.iter().enumerate() {
        let intercept: f64 = 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng);
        for _ in 0..size {
            let noise: f64 = 0.3 * Distribution::<f64>::sample(&StandardNormal, &mut rng);
            let y = -7.0 + 1.5 * x[(row, SIGNAL)] + intercept + noise;
            write!(csv, "S{:02},{y:.5}", m + 1).unwrap();
            for j in 0..P {
                write!(csv, ",{:.4}", 8.0 + x[(row, j)]).unwrap();
            }
            csv.push('\n');
            row += 1;
        }
    }
    std::fs::write(&path, csv).expect("write fixture");
    eprintln!("wrote {n} rows, {P} covariates to {path}");
}
