//! Shared inputs for the benchmarks.

use gsbv_core::fixtures::{random_pieces, runaway, staircase};
use gsbv_core::partition::cell_values;
use gsbv_core::{
    build_partition, concentration_profile, extract_bubbles, renormalize, select_radii,
    ExtractionParams, GridFunction, GridGeometry, RadiusParams, Renormalized, Result,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Staircases for each `n` on the common grid with `fine` cells per unit.
pub fn staircase_sequence(ns: &[usize], fine: usize) -> Vec<GridFunction> {
    ns.iter()
        .map(|&n| staircase(n, fine / n).expect("fine is a multiple of every n"))
        .collect()
}

pub fn runaway_sequence(ns: &[f64], resolution: usize) -> Vec<GridFunction> {
    ns.iter()
        .map(|&n| runaway(n, resolution).expect("even resolution"))
        .collect()
}

/// Seeded piecewise function on a `side x side` grid.
pub fn pieces(side: usize, count: usize, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = GridGeometry::new(vec![0.0, 0.0], 1.0 / side as f64, vec![side, side])
        .expect("positive side");
    random_pieces(&mut rng, geom, count).0
}

/// Profile, bubbles, radii, partition and renormalization of one function.
pub fn pipeline(u: &GridFunction, eps: f64) -> Result<Renormalized> {
    let f = concentration_profile(u, None, 1.0)?;
    let d = extract_bubbles(&f, &ExtractionParams::new(eps, 2.0, 1.0))?;
    let radii = select_radii(&f, &d, &RadiusParams::new(1.0), &cell_values(u))?;
    let part = build_partition(u, &radii, 1.0, None)?;
    renormalize(u, &part, None)
}
