//! One-dimensional sections and jump-set lower semicontinuity.
//!
//! On the grid every face normal is a coordinate axis, so the directional
//! jump measure `∫_{J_u} |⟨ν, e_k⟩| dH^(N-1)` is a count of jump faces along
//! axis `k`, and slicing along `e_k` recovers it line by line.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{FaceId, GridFunction, GridGeometry};

/// Section of a 2D function along `axis` at transverse row `index`. The
/// cracks of the section are the cracks of `u` with normal `e_axis` met by
/// the line.
pub fn slice(u: &GridFunction, axis: usize, index: usize) -> Result<GridFunction> {
    let geom = u.geom();
    if geom.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: geom.dim(),
        });
    }
    if axis > 1 {
        return Err(Error::IndexOutOfRange {
            axis,
            index: axis,
            extent: 2,
        });
    }
    let other = 1 - axis;
    let extent = geom.shape()[other];
    if index >= extent {
        return Err(Error::IndexOutOfRange {
            axis: other,
            index,
            extent,
        });
    }
    let len = geom.shape()[axis];
    let cell = |t: usize| {
        let mut c = [0usize; 2];
        c[axis] = t;
        c[other] = index;
        geom.flat(c)
    };
    let line = GridGeometry::new(vec![geom.origin()[axis]], geom.spacing(), vec![len])?;
    let values = (0..len).map(|t| u.value(cell(t))).collect();
    let cracks: Vec<FaceId> = (0..len.saturating_sub(1))
        .filter(|&t| {
            let lo = cell(t);
            u.is_crack(crate::grid::Face {
                axis,
                lo,
                hi: lo + geom.stride(axis),
            })
        })
        .map(|t| FaceId::new(0, [t, 0]))
        .collect();
    GridFunction::new(line, values, cracks)
}

/// Number of jump faces of a function; on a 1D function, `H^0(J_u)`.
pub fn jump_count_1d(u: &GridFunction) -> usize {
    u.jump_faces().count()
}

/// Cells `lo[k] <= c[k] < hi[k]` on each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CellBox {
    pub lo: [usize; 2],
    pub hi: [usize; 2],
}

impl CellBox {
    pub fn contains(&self, geom: &GridGeometry, cell: usize) -> bool {
        let c = geom.coords(cell);
        (0..geom.dim()).all(|k| self.lo[k] <= c[k] && c[k] < self.hi[k])
    }
}

/// `h^(N-1)` times the number of jump faces with normal `e_axis`, restricted
/// to faces with both cells in `bbox` when given.
pub fn directional_jump_measure(u: &GridFunction, axis: usize, bbox: Option<&CellBox>) -> f64 {
    let geom = u.geom();
    let n = geom
        .interior_faces_along(axis)
        .filter(|&f| u.is_jump(f))
        .filter(|f| bbox.is_none_or(|b| b.contains(geom, f.lo) && b.contains(geom, f.hi)))
        .count();
    n as f64 * geom.face_area()
}

/// Jump locations (face coordinates along the line) of every section along
/// `axis`; a 1D function is its own single section.
fn slice_jumps(u: &GridFunction, axis: usize) -> Result<Vec<Vec<f64>>> {
    let geom = u.geom();
    let sections: Vec<GridFunction> = if geom.dim() == 1 {
        vec![u.clone()]
    } else {
        (0..geom.shape()[1 - axis])
            .map(|y| slice(u, axis, y))
            .collect::<Result<_>>()?
    };
    Ok(sections
        .iter()
        .map(|s| {
            let g = s.geom();
            s.jump_faces()
                .map(|f| g.origin()[0] + (f.lo as f64 + 1.0) * g.spacing())
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisLsc {
    pub axis: usize,
    pub limit_measure: f64,
    pub sequence_measures: Vec<f64>,
    /// `min_n measure(u_n) - measure(u)`.
    pub margin: f64,
    pub limit_box_measure: Option<f64>,
    pub sequence_box_measures: Option<Vec<f64>>,
    pub box_margin: Option<f64>,
    /// `Σ_slices H^0(J) h^(N-1)` equals the directional measure, for the
    /// limit and every member.
    pub fubini_consistent: bool,
    /// Per member, the largest distance from a limit-slice jump to the
    /// nearest jump of the same member slice (`None` if some slice has
    /// none).
    pub jump_distances: Vec<Option<f64>>,
    /// Smallest dyadic `η = 2h 2^k` that works for all members from
    /// `eta_from` on; `None` if the last member misses a limit jump.
    pub eta: Option<f64>,
    pub eta_from: Option<usize>,
    /// The limit has no jumps along this axis, so any `η` works.
    pub vacuous: bool,
    /// The working `η` is the grid floor `2h`.
    pub resolution_limited: bool,
    pub missing_jumps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceLscReport {
    pub axes: Vec<AxisLsc>,
    pub limit_measure: f64,
    pub sequence_measures: Vec<f64>,
    pub margin: f64,
    pub holds: bool,
}

/// Directional lower-semicontinuity margins of the jump measure and the
/// slice-wise jump locality check.
pub fn lsc_report(
    seq: &[GridFunction],
    limit: &GridFunction,
    bbox: Option<&CellBox>,
) -> Result<SliceLscReport> {
    if seq.is_empty() {
        return Err(Error::Empty("sequence"));
    }
    let geom = limit.geom();
    for u in seq {
        geom.check_same(u.geom(), "sequence member and limit")?;
    }
    let h = geom.spacing();
    let area = geom.face_area();
    let mut axes = Vec::new();
    for axis in 0..geom.dim() {
        let limit_measure = directional_jump_measure(limit, axis, None);
        let sequence_measures: Vec<f64> = seq
            .iter()
            .map(|u| directional_jump_measure(u, axis, None))
            .collect();
        let margin = min(&sequence_measures) - limit_measure;
        let (limit_box_measure, sequence_box_measures, box_margin) = match bbox {
            Some(b) => {
                let lm = directional_jump_measure(limit, axis, Some(b));
                let sm: Vec<f64> = seq
                    .iter()
                    .map(|u| directional_jump_measure(u, axis, Some(b)))
                    .collect();
                let m = min(&sm) - lm;
                (Some(lm), Some(sm), Some(m))
            }
            None => (None, None, None),
        };

        let limit_jumps = slice_jumps(limit, axis)?;
        let mut fubini = resum(&limit_jumps, area) == limit_measure;
        let mut jump_distances = Vec::with_capacity(seq.len());
        let mut missing_jumps = 0;
        for (idx, u) in seq.iter().enumerate() {
            let jumps = slice_jumps(u, axis)?;
            fubini &= resum(&jumps, area) == sequence_measures[idx];
            let mut worst = Some(0.0f64);
            for (lj, sj) in limit_jumps.iter().zip(&jumps) {
                for &x in lj {
                    match sj.iter().map(|&y| (x - y).abs()).min_by(f64::total_cmp) {
                        Some(d) => worst = worst.map(|w| w.max(d)),
                        None => {
                            worst = None;
                            if idx + 1 == seq.len() {
                                missing_jumps += 1;
                            }
                        }
                    }
                }
            }
            jump_distances.push(worst);
        }
        let vacuous = limit_jumps.iter().all(|l| l.is_empty());
        let floor = 2.0 * h;
        let (eta, eta_from) = if vacuous {
            (Some(floor), Some(0))
        } else {
            match jump_distances.last().copied().flatten() {
                Some(d) => {
                    let mut eta = floor;
                    while eta <= d {
                        eta *= 2.0;
                    }
                    let from = jump_distances
                        .iter()
                        .rposition(|x| x.is_none_or(|x| x >= eta))
                        .map_or(0, |i| i + 1);
                    (Some(eta), Some(from))
                }
                None => (None, None),
            }
        };
        axes.push(AxisLsc {
            axis,
            limit_measure,
            sequence_measures,
            margin,
            limit_box_measure,
            sequence_box_measures,
            box_margin,
            fubini_consistent: fubini,
            jump_distances,
            eta,
            eta_from,
            vacuous,
            resolution_limited: !vacuous && eta == Some(floor),
            missing_jumps,
        });
    }
    let limit_measure = limit.jump_measure();
    let sequence_measures: Vec<f64> = seq.iter().map(|u| u.jump_measure()).collect();
    let margin = min(&sequence_measures) - limit_measure;
    let holds = margin >= 0.0
        && axes
            .iter()
            .all(|a| a.margin >= 0.0 && a.box_margin.is_none_or(|m| m >= 0.0));
    Ok(SliceLscReport {
        axes,
        limit_measure,
        sequence_measures,
        margin,
        holds,
    })
}

fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

fn resum(jumps: &[Vec<f64>], area: f64) -> f64 {
    jumps.iter().map(|j| j.len()).sum::<usize>() as f64 * area
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{runaway, staircase};
    use crate::grid::energy;

    #[test]
    fn staircase_rows_have_two_jumps() {
        let n = 8;
        let u = staircase(n, 1).unwrap();
        for row in 0..n {
            let s = slice(&u, 0, row).unwrap();
            assert_eq!(jump_count_1d(&s), 2);
        }
        assert!(slice(&u, 0, n).is_err());
        assert!(slice(&u, 2, 0).is_err());
    }

    #[test]
    fn directional_measures_add_up() {
        let u = staircase(4, 2).unwrap();
        let total: f64 = (0..2).map(|k| directional_jump_measure(&u, k, None)).sum();
        assert!((total - u.jump_measure()).abs() < 1e-15);
    }

    #[test]
    fn fubini_bulk_along_an_axis() {
        let g = GridGeometry::new(vec![0.0, 0.0], 0.5, vec![3, 2]).unwrap();
        let u = GridFunction::from_values(g, vec![0.0, 1.0, 2.0, 4.0, 1.0, 1.0]).unwrap();
        // 2D bulk with only axis-0 faces equals the sum of slice bulks times h
        let along0: f64 = (0..2)
            .map(|y| energy(&slice(&u, 0, y).unwrap(), 2.0).unwrap().bulk * 0.5)
            .sum();
        let along1: f64 = (0..3)
            .map(|x| energy(&slice(&u, 1, x).unwrap(), 2.0).unwrap().bulk * 0.5)
            .sum();
        let total = energy(&u, 2.0).unwrap().bulk;
        assert!((along0 + along1 - total).abs() < 1e-12);
    }

    #[test]
    fn runaway_lsc_margin() {
        let seq: Vec<_> = [10.0, 100.0]
            .iter()
            .map(|&n| runaway(n, 4).unwrap())
            .collect();
        let limit = GridFunction::constant(seq[0].geom().clone(), 0.0).unwrap();
        let r = lsc_report(&seq, &limit, None).unwrap();
        assert_eq!(r.margin, 1.0);
        assert!(r.holds);
        assert!(r.axes.iter().all(|a| a.vacuous && a.fubini_consistent));
    }

    #[test]
    fn constant_sequence_has_zero_margin() {
        let u = staircase(4, 1).unwrap();
        let r = lsc_report(&[u.clone(), u.clone()], &u, None).unwrap();
        assert_eq!(r.margin, 0.0);
        for a in &r.axes {
            assert_eq!(a.margin, 0.0);
            assert_eq!(a.jump_distances, vec![Some(0.0), Some(0.0)]);
            assert!(a.resolution_limited);
        }
    }
}
