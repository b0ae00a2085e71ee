//! Deterministic test fixtures: the staircase and runaway sequences, and
//! seeded random grids, functions and profiles.

use rand::Rng;

use crate::concentration::ConcentrationProfile;
use crate::error::{invalid, Error, Result};
use crate::grid::{FaceId, GridFunction, GridGeometry};

/// `u_n` on `(-1,1) x (0,1)`: 0 on the left half, `i` on the `i`-th stair
/// `(0, 1/n) x ((i-1)/n, i/n)`, `n + 1` on `(1/n, 1) x (0,1)`. Cracks on all
/// faces between regions, so the jump measure is `3 - 1/n`.
pub fn staircase(n: usize, cells_per_step: usize) -> Result<GridFunction> {
    if n < 2 {
        return Err(invalid("n", format!("must be at least 2, got {n}")));
    }
    if cells_per_step == 0 {
        return Err(invalid("cells_per_step", "must be positive"));
    }
    let ny = n
        .checked_mul(cells_per_step)
        .ok_or_else(|| Error::InvalidGeometry("staircase shape overflows".into()))?;
    let nx = ny
        .checked_mul(2)
        .ok_or_else(|| Error::InvalidGeometry("staircase shape overflows".into()))?;
    let geom = GridGeometry::new(vec![-1.0, 0.0], 1.0 / ny as f64, vec![nx, ny])?;
    // region of a cell: 0 = left, i = stair, n + 1 = right
    let region = |i: usize, j: usize| -> usize {
        if i < ny {
            0
        } else if i < ny + cells_per_step {
            j / cells_per_step + 1
        } else {
            n + 1
        }
    };
    let mut values = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            values.push(region(i, j) as f64);
        }
    }
    let mut cracks = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            if i + 1 < nx && region(i, j) != region(i + 1, j) {
                cracks.push(FaceId::new(0, [i, j]));
            }
            if j + 1 < ny && region(i, j) != region(i, j + 1) {
                cracks.push(FaceId::new(1, [i, j]));
            }
        }
    }
    GridFunction::new(geom, values, cracks)
}

/// `n * χ_{(0,1) x (0,1)}` on `(-1,1) x (0,1)` with a crack along `x = 0`.
pub fn runaway(n: f64, resolution: usize) -> Result<GridFunction> {
    if resolution < 2 || !resolution.is_multiple_of(2) {
        return Err(invalid(
            "resolution",
            format!("must be even and positive, got {resolution}"),
        ));
    }
    let half = resolution / 2;
    let geom = GridGeometry::new(
        vec![-1.0, 0.0],
        2.0 / resolution as f64,
        vec![resolution, half],
    )?;
    let values = (0..resolution * half)
        .map(|c| if c / half >= half { n } else { 0.0 })
        .collect();
    let cracks = (0..half).map(|j| FaceId::new(0, [half - 1, j]));
    GridFunction::new(geom, values, cracks)
}

/// Random 1D or 2D geometry with at most `max_side` cells per axis.
pub fn random_geometry(rng: &mut impl Rng, dim: usize, max_side: usize) -> GridGeometry {
    let shape: Vec<usize> = (0..dim).map(|_| rng.gen_range(1..=max_side)).collect();
    let origin = (0..dim)
        .map(|_| f64::from(rng.gen_range(-4i32..=4)) / 4.0)
        .collect();
    let spacing = 1.0 / f64::from(rng.gen_range(1u32..=64));
    GridGeometry::new(origin, spacing, shape).expect("valid random geometry")
}

/// Dyadic values in `[-4, 4]`, each interior face cracked with probability
/// `crack_prob`.
pub fn random_function(rng: &mut impl Rng, geom: GridGeometry, crack_prob: f64) -> GridFunction {
    let values = (0..geom.num_cells())
        .map(|_| f64::from(rng.gen_range(-32i32..=32)) / 8.0)
        .collect();
    let cracks: Vec<FaceId> = geom
        .interior_faces()
        .filter(|_| rng.gen_bool(crack_prob))
        .map(|f| geom.face_id(f))
        .collect();
    GridFunction::new(geom, values, cracks).expect("valid random function")
}

/// Piecewise function on `pieces` ℓ¹-Voronoi cells: an integer offset per
/// piece plus small dyadic noise, with cracks on every face between pieces.
/// Returns the function and the per-cell piece labels.
pub fn random_pieces(
    rng: &mut impl Rng,
    geom: GridGeometry,
    pieces: usize,
) -> (GridFunction, Vec<usize>) {
    let pieces = pieces.max(1);
    let dim = geom.dim();
    let seeds: Vec<[usize; 2]> = (0..pieces)
        .map(|_| {
            let mut c = [0usize; 2];
            for (k, slot) in c.iter_mut().enumerate().take(dim) {
                *slot = rng.gen_range(0..geom.shape()[k]);
            }
            c
        })
        .collect();
    let labels: Vec<usize> = (0..geom.num_cells())
        .map(|cell| {
            let c = geom.coords(cell);
            (0..pieces)
                .min_by_key(|&p| (0..dim).map(|k| c[k].abs_diff(seeds[p][k])).sum::<usize>())
                .unwrap()
        })
        .collect();
    let offsets: Vec<f64> = (0..pieces)
        .map(|_| f64::from(rng.gen_range(-20i32..=20)))
        .collect();
    let values = labels
        .iter()
        .map(|&p| offsets[p] + f64::from(rng.gen_range(-4i32..=4)) / 16.0)
        .collect();
    let cracks: Vec<FaceId> = geom
        .interior_faces()
        .filter(|f| labels[f.lo] != labels[f.hi] || rng.gen_bool(0.05))
        .map(|f| geom.face_id(f))
        .collect();
    let u = GridFunction::new(geom, values, cracks).expect("valid piecewise function");
    (u, labels)
}

/// One cluster of a synthetic profile: support `[lo, hi)` and its mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Profile made of `clusters` groups of plateaus. Each group spans at most
/// `max_width`, plateau heights lie in `[0.5, 1]`, and consecutive groups
/// are separated by zero gaps of length at least `min_gap`.
pub fn cluster_profile(
    rng: &mut impl Rng,
    clusters: usize,
    max_width: f64,
    min_gap: f64,
    window: f64,
) -> (ConcentrationProfile, Vec<Cluster>) {
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut out = Vec::new();
    let mut t = f64::from(rng.gen_range(-64i32..=64)) / 4.0;
    for k in 0..clusters {
        if k > 0 {
            points.push(t);
            values.push(0.0);
            t += min_gap + f64::from(rng.gen_range(0u32..=32)) / 4.0;
        }
        let lo = t;
        let pieces = rng.gen_range(1..=4);
        let piece_width = max_width / pieces as f64;
        let mut mass = 0.0;
        for _ in 0..pieces {
            let width = piece_width * f64::from(rng.gen_range(1u32..=4)) / 4.0;
            let height = 0.5 + f64::from(rng.gen_range(0u32..=8)) / 16.0;
            points.push(t);
            values.push(height);
            mass += height * width;
            t += width;
        }
        out.push(Cluster { lo, hi: t, mass });
    }
    points.push(t);
    let f = ConcentrationProfile::from_plateaus(points, values, window)
        .expect("valid synthetic profile");
    (f, out)
}
