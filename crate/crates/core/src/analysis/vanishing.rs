//! Volume bound for regions on which the restricted concentration function
//! is weakly vanishing.
//!
//! The values of `u` on the region are cut at `α - 1` volume quantiles
//! `t_i`. Around each cut sits a gap set `{t_i - R <= u < t_i + R}`, and the
//! inbetween sets `B_i = {t_i + R <= u < t_{i+1} - R}` each keep about
//! `m / α` of the volume. Every face of `∂B_i` is a jump, a face of the
//! region boundary, a steep face, or a face next to a gap cell, so
//! `Σ_i P(B_i) <= K := 2 H(J ∪ ∂*region) + 2 steep + gap_interface`, and the
//! grid isoperimetric inequality `|B| <= P(B)^2 / 16` gives
//! `m <= K^2 / (16 α) + α δ` with `δ` the largest slab deficit below `m / α`.

use serde::Serialize;

use crate::concentration::{concentration_profile, LevyMax};
use crate::error::{invalid, Error, Result};
use crate::grid::{CellSet, GridFunction};
use crate::report::Inequality;

/// Grid isoperimetric constant for the face-count perimeter in the plane.
pub const ISOPERIMETRIC_2D: f64 = 1.0 / 16.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanishingCertificate {
    pub eps: f64,
    pub radius: f64,
    pub window: f64,
    pub alpha: usize,
    pub levy: LevyMax,
    pub cut_points: Vec<f64>,
    pub slab_volumes: Vec<f64>,
    pub gap_volumes: Vec<f64>,
    pub measured_volume: f64,
    /// `H(J_u ∪ ∂*region)` counting jump faces with both sides in the region.
    pub jump_boundary: f64,
    pub steep: f64,
    pub gap_interface: f64,
    /// `Σ_i P(B_i)` measured directly.
    pub slab_perimeter: f64,
    pub k: f64,
    /// `max_i (m / α - |B_i|)_+`.
    pub deficit: f64,
    pub bound: f64,
    /// `δ / eps^2`, the measured constant of the slab-volume estimate.
    pub deficit_constant: f64,
    pub checks: Vec<Inequality>,
    pub certified: bool,
}

/// Certificate for `region` at tolerance `eps`, checking first that
/// `f(·, region)` has Lévy concentration at most `eps` at `radius`.
pub fn vanishing_certificate(
    u: &GridFunction,
    region: &CellSet,
    eps: f64,
    radius: f64,
    window: f64,
) -> Result<VanishingCertificate> {
    let geom = u.geom();
    if geom.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: geom.dim(),
        });
    }
    geom.check_same(region.geom(), "function and region")?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid("radius", format!("must be positive, got {radius}")));
    }
    let f = concentration_profile(u, Some(region), window)?;
    let levy = f.levy_concentration(radius);
    if levy.mass > eps {
        return Err(Error::NotWeaklyVanishing {
            center: levy.center,
            mass: levy.mass,
            eps,
        });
    }

    let area = geom.face_area();
    let cell_volume = geom.cell_volume();
    let alpha = (1.0 / eps).ceil().max(1.0) as usize;
    let mut sorted: Vec<f64> = region.cells().map(|c| u.value(c)).collect();
    sorted.sort_by(f64::total_cmp);
    let count = sorted.len();
    let m = count as f64 * cell_volume;

    // t_i: the (k+1)-th smallest value with k = ceil(i K / α)
    let cut_points: Vec<f64> = if count == 0 {
        Vec::new()
    } else {
        (1..alpha)
            .map(|i| {
                let k = (i * count).div_ceil(alpha);
                sorted[k.min(count - 1)]
            })
            .collect()
    };
    // slab index per region cell, None for gap cells
    let slab_of = |v: f64| -> Option<usize> {
        if cut_points
            .iter()
            .any(|&t| t - radius <= v && v < t + radius)
        {
            return None;
        }
        Some(cut_points.partition_point(|&t| t + radius <= v))
    };
    let class: Vec<Option<Option<usize>>> = (0..geom.num_cells())
        .map(|c| region.contains(c).then(|| slab_of(u.value(c))))
        .collect();

    let mut slab_cells = vec![0usize; alpha];
    for s in class.iter().flatten().flatten() {
        slab_cells[*s] += 1;
    }
    let gap_volumes: Vec<f64> = cut_points
        .iter()
        .map(|&t| {
            region
                .cells()
                .filter(|&c| {
                    let v = u.value(c);
                    t - radius <= v && v < t + radius
                })
                .count() as f64
                * cell_volume
        })
        .collect();

    let mut jump_inside = 0usize;
    let mut region_boundary = 0usize;
    let mut steep = 0usize;
    let mut gap_interface = 0usize;
    let mut slab_faces = 0usize;
    let mut half_chain_faces = 0usize;
    for f in geom.interior_faces() {
        let (a, b) = (class[f.lo], class[f.hi]);
        let jump = u.is_jump(f);
        match (a, b) {
            (Some(x), Some(y)) => {
                if jump {
                    jump_inside += 1;
                }
                match (x, y) {
                    (Some(i), Some(j)) if i != j => {
                        slab_faces += 2;
                        half_chain_faces += 2;
                        if !jump {
                            steep += 1;
                        }
                    }
                    (Some(_), None) | (None, Some(_)) => {
                        slab_faces += 1;
                        gap_interface += 1;
                    }
                    _ => {}
                }
            }
            (Some(x), None) | (None, Some(x)) => {
                region_boundary += 1;
                if x.is_some() {
                    slab_faces += 1;
                    half_chain_faces += 1;
                }
            }
            (None, None) => {}
        }
    }
    for w in geom.wall_faces() {
        if let Some(x) = class[w.cell] {
            region_boundary += 1;
            if x.is_some() {
                slab_faces += 1;
                half_chain_faces += 1;
            }
        }
    }

    let jump_boundary = (jump_inside + region_boundary) as f64 * area;
    let steep_measure = steep as f64 * area;
    let gap_interface_measure = gap_interface as f64 * area;
    let slab_perimeter = slab_faces as f64 * area;
    let k = 2.0 * jump_boundary + 2.0 * steep_measure + gap_interface_measure;
    let slab_volumes: Vec<f64> = slab_cells.iter().map(|&c| c as f64 * cell_volume).collect();
    let share = m / alpha as f64;
    let deficit = slab_volumes
        .iter()
        .map(|&v| (share - v).max(0.0))
        .fold(0.0, f64::max);
    let bound = ISOPERIMETRIC_2D * k * k / alpha as f64 + alpha as f64 * deficit;

    let checks = vec![
        Inequality::exact("sum of slab perimeters <= K", slab_perimeter, k),
        Inequality::exact(
            "half slab boundary away from gaps <= H(J u boundary) + steep",
            0.5 * half_chain_faces as f64 * area,
            jump_boundary + steep_measure,
        ),
        Inequality::with_slack("measured volume <= bound", m, bound, 1e-12),
    ];
    let certified = checks.iter().all(|c| c.holds);
    Ok(VanishingCertificate {
        eps,
        radius,
        window,
        alpha,
        levy,
        cut_points,
        slab_volumes,
        gap_volumes,
        measured_volume: m,
        jump_boundary,
        steep: steep_measure,
        gap_interface: gap_interface_measure,
        slab_perimeter,
        k,
        deficit,
        bound,
        deficit_constant: deficit / (eps * eps),
        checks,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::staircase;
    use crate::grid::GridGeometry;

    #[test]
    fn empty_region_is_trivially_certified() {
        let g = GridGeometry::new(vec![0.0, 0.0], 0.25, vec![4, 4]).unwrap();
        let u = GridFunction::constant(g.clone(), 0.0).unwrap();
        let c = vanishing_certificate(&u, &CellSet::empty(g), 0.5, 1.0, 1.0).unwrap();
        assert_eq!(c.measured_volume, 0.0);
        assert!(c.certified);
    }

    #[test]
    fn one_dimensional_input_is_rejected() {
        let g = GridGeometry::new(vec![0.0], 0.25, vec![4]).unwrap();
        let u = GridFunction::constant(g.clone(), 0.0).unwrap();
        assert!(matches!(
            vanishing_certificate(&u, &CellSet::full(g), 0.5, 1.0, 1.0),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn hypothesis_violation_names_the_window() {
        let g = GridGeometry::new(vec![0.0, 0.0], 0.25, vec![4, 4]).unwrap();
        let u = GridFunction::constant(g.clone(), 0.0).unwrap();
        let err = vanishing_certificate(&u, &CellSet::full(g), 0.5, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::NotWeaklyVanishing { center, .. } if center.is_finite()));
    }

    #[test]
    fn staircase_strip() {
        let n = 64;
        let u = staircase(n, 1).unwrap();
        let strip = CellSet::from_fn(u.geom().clone(), |c| {
            let v = u.value(c);
            v >= 1.0 && v <= n as f64
        });
        let c = vanishing_certificate(&u, &strip, 0.25, 1.0, 1.0).unwrap();
        assert_eq!(c.alpha, 4);
        assert!((c.measured_volume - 1.0 / n as f64).abs() < 1e-15);
        assert!(c.certified, "{:?}", c.checks);
    }
}
