//! Grid carriers for GSBV-type functions: uniform axis-aligned cells, explicit
//! crack faces, cell sets, and the energy and measure evaluations on them.
//!
//! Cells are addressed by a row-major flat index (last axis fastest). A face
//! is identified by its axis and the cell on its lower side; the face between
//! `c` and `c + e_axis` is interior when both cells lie in the grid. All
//! perimeters are face counts times `h^(dim-1)` (the axis-aligned, anisotropic
//! grid perimeter).

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Uniform axis-aligned grid on the box `origin + [0, shape * h]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridGeometry {
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    strides: Vec<usize>,
}

impl GridGeometry {
    pub fn new(origin: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Result<Self> {
        let dim = shape.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGeometry(format!(
                "dim must be 1 or 2, got {dim}"
            )));
        }
        if origin.len() != dim {
            return Err(Error::InvalidGeometry(format!(
                "origin has {} components for a {dim}-dimensional grid",
                origin.len()
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGeometry("origin must be finite".into()));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidGeometry(format!("empty shape {shape:?}")));
        }
        shape
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidGeometry(format!("shape {shape:?} overflows")))?;
        let mut strides = vec![1usize; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * shape[k + 1];
        }
        Ok(Self {
            origin,
            spacing,
            shape,
            strides,
        })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn num_cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    /// `H^(dim-1)` of one face; 1 in one dimension, where faces are points.
    pub fn face_area(&self) -> f64 {
        self.spacing.powi(self.dim() as i32 - 1)
    }

    pub fn domain_volume(&self) -> f64 {
        self.num_cells() as f64 * self.cell_volume()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Multi-index of a flat cell index; unused axes are 0.
    pub fn coords(&self, flat: usize) -> [usize; 2] {
        match self.dim() {
            1 => [flat, 0],
            _ => [flat / self.shape[1], flat % self.shape[1]],
        }
    }

    pub fn flat(&self, coords: [usize; 2]) -> usize {
        match self.dim() {
            1 => coords[0],
            _ => coords[0] * self.shape[1] + coords[1],
        }
    }

    pub fn contains(&self, coords: [usize; 2]) -> bool {
        (0..self.dim()).all(|k| coords[k] < self.shape[k]) && (self.dim() == 2 || coords[1] == 0)
    }

    /// Physical coordinate of the centre of a cell along `axis`.
    pub fn cell_center(&self, flat: usize, axis: usize) -> f64 {
        let c = self.coords(flat)[axis];
        self.origin[axis] + (c as f64 + 0.5) * self.spacing
    }

    pub fn is_interior(&self, face: FaceId) -> bool {
        face.axis < self.dim()
            && self.contains(face.cell)
            && face.cell[face.axis] + 1 < self.shape[face.axis]
    }

    pub fn face(&self, id: FaceId) -> Option<Face> {
        if !self.is_interior(id) {
            return None;
        }
        let lo = self.flat(id.cell);
        Some(Face {
            axis: id.axis,
            lo,
            hi: lo + self.strides[id.axis],
        })
    }

    pub fn face_id(&self, face: Face) -> FaceId {
        FaceId {
            axis: face.axis,
            cell: self.coords(face.lo),
        }
    }

    /// Interior faces along one axis, in increasing order of the lower cell.
    pub fn interior_faces_along(&self, axis: usize) -> impl Iterator<Item = Face> + '_ {
        let stride = self.strides[axis];
        let extent = self.shape[axis];
        (0..self.num_cells()).filter_map(move |lo| {
            let c = (lo / stride) % extent;
            (c + 1 < extent).then_some(Face {
                axis,
                lo,
                hi: lo + stride,
            })
        })
    }

    /// All interior faces, axis-major.
    pub fn interior_faces(&self) -> impl Iterator<Item = Face> + '_ {
        (0..self.dim()).flat_map(move |axis| self.interior_faces_along(axis))
    }

    pub fn num_interior_faces(&self) -> usize {
        (0..self.dim())
            .map(|k| self.num_cells() / self.shape[k] * (self.shape[k] - 1))
            .sum()
    }

    /// Faces on the boundary of the box, each reported with its single
    /// adjacent cell.
    pub fn wall_faces(&self) -> impl Iterator<Item = WallFace> + '_ {
        (0..self.dim()).flat_map(move |axis| {
            let stride = self.strides[axis];
            let extent = self.shape[axis];
            (0..self.num_cells()).flat_map(move |cell| {
                let c = (cell / stride) % extent;
                let low = (c == 0).then_some(WallFace {
                    axis,
                    cell,
                    high: false,
                });
                let high = (c + 1 == extent).then_some(WallFace {
                    axis,
                    cell,
                    high: true,
                });
                low.into_iter().chain(high)
            })
        })
    }

    pub fn num_wall_faces(&self) -> usize {
        (0..self.dim())
            .map(|k| 2 * self.num_cells() / self.shape[k])
            .sum()
    }

    pub(crate) fn check_same(&self, other: &GridGeometry, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(what.to_string()))
        }
    }
}

/// Face between `cell` and `cell + e_axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FaceId {
    pub axis: usize,
    pub cell: [usize; 2],
}

impl FaceId {
    pub fn new(axis: usize, cell: [usize; 2]) -> Self {
        Self { axis, cell }
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.axis, self.cell[0], self.cell[1])
    }
}

/// Interior face in flat-index form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    pub lo: usize,
    pub hi: usize,
}

/// Face on the boundary of the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WallFace {
    pub axis: usize,
    pub cell: usize,
    pub high: bool,
}

/// Cell-valued function with an explicit crack set.
///
/// The discrete jump set `J_u` is the set of crack faces whose two traces
/// differ; a crack face with equal traces is healed and carries nothing.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    geom: GridGeometry,
    values: Vec<f64>,
    // per axis, indexed by the flat index of the lower cell
    cracks: Vec<Vec<bool>>,
}

impl GridFunction {
    pub fn new(
        geom: GridGeometry,
        values: Vec<f64>,
        cracks: impl IntoIterator<Item = FaceId>,
    ) -> Result<Self> {
        let mut u = Self::from_values(geom, values)?;
        for id in cracks {
            let face = u
                .geom
                .face(id)
                .ok_or_else(|| Error::CrackNotInterior(id.to_string()))?;
            let slot = &mut u.cracks[face.axis][face.lo];
            if *slot {
                return Err(Error::DuplicateCrack(id.to_string()));
            }
            *slot = true;
        }
        Ok(u)
    }

    /// Crack-free function.
    pub fn from_values(geom: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geom.num_cells() {
            return Err(Error::ValueCount {
                expected: geom.num_cells(),
                found: values.len(),
            });
        }
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { cell, value });
        }
        let cracks = vec![vec![false; geom.num_cells()]; geom.dim()];
        Ok(Self {
            geom,
            values,
            cracks,
        })
    }

    pub fn constant(geom: GridGeometry, c: f64) -> Result<Self> {
        let n = geom.num_cells();
        Self::from_values(geom, vec![c; n])
    }

    pub fn geom(&self) -> &GridGeometry {
        &self.geom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn is_crack(&self, face: Face) -> bool {
        self.cracks[face.axis][face.lo]
    }

    pub fn is_jump(&self, face: Face) -> bool {
        self.is_crack(face) && self.values[face.lo] != self.values[face.hi]
    }

    /// Crack faces in canonical (axis, cell) order.
    pub fn cracks(&self) -> Vec<FaceId> {
        self.geom
            .interior_faces()
            .filter(|&f| self.is_crack(f))
            .map(|f| self.geom.face_id(f))
            .collect()
    }

    pub fn num_cracks(&self) -> usize {
        self.cracks.iter().flatten().filter(|&&c| c).count()
    }

    pub fn jump_faces(&self) -> impl Iterator<Item = Face> + '_ {
        self.geom.interior_faces().filter(|&f| self.is_jump(f))
    }

    /// `H^(N-1)(J_u)`.
    pub fn jump_measure(&self) -> f64 {
        self.jump_faces().count() as f64 * self.geom.face_area()
    }

    /// Same cracks, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut u = Self::from_values(self.geom.clone(), values)?;
        u.cracks = self.cracks.clone();
        Ok(u)
    }

    /// Same values, cracks extended by `extra` (already-present faces are kept once).
    pub fn with_added_cracks(&self, extra: impl IntoIterator<Item = Face>) -> Self {
        let mut u = self.clone();
        for f in extra {
            u.cracks[f.axis][f.lo] = true;
        }
        u
    }

    pub fn shifted(&self, c: f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|v| v + c).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Bulk and jump parts of `int |grad u|^p + H^(N-1)(J_u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub bulk: f64,
    pub jump: f64,
    pub p: f64,
    pub total: f64,
}

/// Each non-crack interior face contributes `|dv/h|^p h^dim`; each jump face
/// contributes `h^(dim-1)`.
pub fn energy(u: &GridFunction, p: f64) -> Result<EnergyReport> {
    if !(p.is_finite() && p > 1.0) {
        return Err(invalid("p", format!("must be > 1, got {p}")));
    }
    let geom = u.geom();
    let h = geom.spacing();
    let cell_volume = geom.cell_volume();
    let mut bulk = 0.0;
    let mut jumps = 0usize;
    for face in geom.interior_faces() {
        let dv = u.value(face.hi) - u.value(face.lo);
        if u.is_crack(face) {
            if dv != 0.0 {
                jumps += 1;
            }
        } else if dv != 0.0 {
            bulk += (dv / h).abs().powf(p) * cell_volume;
        }
    }
    let jump = jumps as f64 * geom.face_area();
    Ok(EnergyReport {
        bulk,
        jump,
        p,
        total: bulk + jump,
    })
}

/// `sum over non-crack faces of |dv| h^(dim-1)`, the bulk side of the coarea identity.
pub fn coarea_bulk(u: &GridFunction) -> f64 {
    let area = u.geom().face_area();
    u.geom()
        .interior_faces()
        .filter(|&f| !u.is_crack(f))
        .map(|f| (u.value(f.hi) - u.value(f.lo)).abs() * area)
        .sum()
}

/// Set of cells; the discrete stand-in for a set of finite perimeter.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSet {
    geom: GridGeometry,
    mask: Vec<bool>,
}

impl CellSet {
    pub fn new(geom: GridGeometry, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != geom.num_cells() {
            return Err(Error::ValueCount {
                expected: geom.num_cells(),
                found: mask.len(),
            });
        }
        Ok(Self { geom, mask })
    }

    pub fn from_fn(geom: GridGeometry, f: impl Fn(usize) -> bool) -> Self {
        let mask = (0..geom.num_cells()).map(f).collect();
        Self { geom, mask }
    }

    pub fn full(geom: GridGeometry) -> Self {
        Self::from_fn(geom, |_| true)
    }

    pub fn empty(geom: GridGeometry) -> Self {
        Self::from_fn(geom, |_| false)
    }

    pub fn geom(&self) -> &GridGeometry {
        &self.geom
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.mask[cell]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.geom.cell_volume()
    }

    pub fn complement(&self) -> Self {
        Self {
            geom: self.geom.clone(),
            mask: self.mask.iter().map(|m| !m).collect(),
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    /// Interior faces separating a member from a non-member.
    pub fn relative_boundary(&self) -> impl Iterator<Item = Face> + '_ {
        self.geom
            .interior_faces()
            .filter(|f| self.mask[f.lo] != self.mask[f.hi])
    }

    /// Box walls adjacent to a member cell.
    pub fn wall_boundary(&self) -> impl Iterator<Item = WallFace> + '_ {
        self.geom.wall_faces().filter(|w| self.mask[w.cell])
    }

    /// `H^(N-1)` of the reduced boundary in `R^N`, box walls included.
    pub fn perimeter(&self) -> f64 {
        (self.relative_boundary().count() + self.wall_boundary().count()) as f64
            * self.geom.face_area()
    }

    /// `H^(N-1)` of the reduced boundary relative to the box.
    pub fn relative_perimeter(&self) -> f64 {
        self.relative_boundary().count() as f64 * self.geom.face_area()
    }
}

/// `{u > t}` with strict inequality.
pub fn level_set(u: &GridFunction, t: f64) -> CellSet {
    CellSet {
        geom: u.geom().clone(),
        mask: u.values().iter().map(|&v| v > t).collect(),
    }
}

/// `H^(N-1)(∂*S \ J_u)` with `∂*S` taken relative to the box.
pub fn boundary_outside_jump(set: &CellSet, u: &GridFunction) -> Result<f64> {
    set.geom().check_same(u.geom(), "cell set and function")?;
    let n = set.relative_boundary().filter(|&f| !u.is_jump(f)).count();
    Ok(n as f64 * set.geom().face_area())
}

/// Ky Fan metric `inf{d > 0 : L^N(|u - v| > d) <= d}` for convergence in measure.
pub fn kyfan_distance(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    u.geom().check_same(v.geom(), "Ky Fan operands")?;
    let mut diffs: Vec<f64> = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| (a - b).abs())
        .collect();
    diffs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let cell = u.geom().cell_volume();
    // With d_1 >= d_2 >= ..., at most k cells exceed d once d >= d_{k+1}.
    let best = (0..=diffs.len())
        .map(|k| {
            let next = diffs.get(k).copied().unwrap_or(0.0);
            next.max(k as f64 * cell)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(m: usize) -> GridGeometry {
        GridGeometry::new(vec![0.0, 0.0], 1.0 / m as f64, vec![m, m]).unwrap()
    }

    #[test]
    fn geometry_rejects_bad_input() {
        assert!(GridGeometry::new(vec![0.0], 0.0, vec![3]).is_err());
        assert!(GridGeometry::new(vec![0.0], 1.0, vec![0]).is_err());
        assert!(GridGeometry::new(vec![0.0, 0.0], 1.0, vec![3]).is_err());
        assert!(GridGeometry::new(vec![0.0; 3], 1.0, vec![2; 3]).is_err());
    }

    #[test]
    fn face_counts_match_enumeration() {
        let g = GridGeometry::new(vec![0.0, 0.0], 1.0, vec![3, 5]).unwrap();
        assert_eq!(g.interior_faces().count(), g.num_interior_faces());
        assert_eq!(g.num_interior_faces(), 2 * 5 + 3 * 4);
        assert_eq!(g.wall_faces().count(), g.num_wall_faces());
        assert_eq!(g.num_wall_faces(), 2 * 5 + 2 * 3);
    }

    #[test]
    fn cracks_must_be_interior_and_unique() {
        let g = GridGeometry::new(vec![0.0], 1.0, vec![4]).unwrap();
        let bad = GridFunction::new(g.clone(), vec![0.0; 4], [FaceId::new(0, [3, 0])]);
        assert!(matches!(bad, Err(Error::CrackNotInterior(_))));
        let dup = GridFunction::new(
            g.clone(),
            vec![0.0; 4],
            [FaceId::new(0, [1, 0]), FaceId::new(0, [1, 0])],
        );
        assert!(matches!(dup, Err(Error::DuplicateCrack(_))));
        let nan = GridFunction::from_values(g, vec![0.0, f64::NAN, 0.0, 0.0]);
        assert!(matches!(nan, Err(Error::NonFiniteValue { cell: 1, .. })));
    }

    #[test]
    fn constant_function_has_zero_energy() {
        let u = GridFunction::constant(unit_square(4), 3.5).unwrap();
        let e = energy(&u, 2.0).unwrap();
        assert_eq!((e.bulk, e.jump, e.total), (0.0, 0.0, 0.0));
    }

    #[test]
    fn healed_crack_carries_no_jump() {
        let g = GridGeometry::new(vec![0.0], 0.5, vec![2]).unwrap();
        let u = GridFunction::new(g, vec![1.0, 1.0], [FaceId::new(0, [0, 0])]).unwrap();
        assert_eq!(energy(&u, 2.0).unwrap().jump, 0.0);
        assert_eq!(u.jump_faces().count(), 0);
    }

    #[test]
    fn energy_of_linear_ramp() {
        // u = x on [0,1] with h = 1/4: four faces with slope 1, each weight h
        let g = GridGeometry::new(vec![0.0], 0.25, vec![4]).unwrap();
        let u = GridFunction::from_values(g, vec![0.0, 0.25, 0.5, 0.75]).unwrap();
        let e = energy(&u, 2.0).unwrap();
        assert!((e.bulk - 0.75).abs() < 1e-15);
        assert!(energy(&u, 1.0).is_err());
    }

    #[test]
    fn level_set_is_strict() {
        let u = GridFunction::constant(unit_square(3), 0.0).unwrap();
        assert_eq!(level_set(&u, -1.0).count(), 9);
        assert!(level_set(&u, 0.0).is_empty());
    }

    #[test]
    fn perimeter_of_full_square_is_four() {
        let s = CellSet::full(unit_square(8));
        assert!((s.perimeter() - 4.0).abs() < 1e-15);
        assert_eq!(s.relative_perimeter(), 0.0);
        assert!((s.volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_outside_jump_excludes_jump_faces() {
        let g = GridGeometry::new(vec![0.0], 1.0, vec![4]).unwrap();
        let u = GridFunction::new(
            g.clone(),
            vec![0.0, 0.0, 5.0, 5.0],
            [FaceId::new(0, [1, 0])],
        )
        .unwrap();
        let right = level_set(&u, 1.0);
        assert_eq!(boundary_outside_jump(&right, &u).unwrap(), 0.0);
        let ramp = GridFunction::from_values(g, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            boundary_outside_jump(&level_set(&ramp, 1.5), &ramp).unwrap(),
            1.0
        );
    }

    #[test]
    fn kyfan_constant_difference() {
        // domain volume 2, |u - v| = 0.5 everywhere
        let g = GridGeometry::new(vec![0.0], 0.5, vec![4]).unwrap();
        let u = GridFunction::constant(g.clone(), 0.5).unwrap();
        let v = GridFunction::constant(g, 0.0).unwrap();
        assert_eq!(kyfan_distance(&u, &v).unwrap(), 0.5);
        assert_eq!(kyfan_distance(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn kyfan_small_support_difference() {
        // one cell of volume 0.01 differs by 100: distance is the volume
        let g = GridGeometry::new(vec![0.0], 0.01, vec![100]).unwrap();
        let v = GridFunction::constant(g.clone(), 0.0).unwrap();
        let mut vals = vec![0.0; 100];
        vals[7] = 100.0;
        let u = GridFunction::from_values(g, vals).unwrap();
        assert!((kyfan_distance(&u, &v).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn geometry_mismatch_is_reported() {
        let a = GridFunction::constant(unit_square(2), 0.0).unwrap();
        let b = GridFunction::constant(unit_square(3), 0.0).unwrap();
        assert!(matches!(
            kyfan_distance(&a, &b),
            Err(Error::GeometryMismatch(_))
        ));
    }
}
