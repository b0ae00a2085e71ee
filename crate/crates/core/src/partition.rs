//! Domain partition into main pieces, gap sets and vanishing sets, radius
//! selection by averaging, renormalization by piecewise-constant
//! translations, and the perturbed translation that makes every partition
//! boundary a jump.
//!
//! With bubbles sorted by center and one-sided radii `R⁻_j`, `R⁺_j`:
//! `Main(j) = {a_j - R⁻_j <= u < a_j + R⁺_j}`,
//! `GapPlus(j) = {a_j + R⁺_j <= u < a_j + R⁺_j + w}`,
//! `GapMinus(j) = {a_j - R⁻_j - w <= u < a_j - R⁻_j}`, and `Vanishing(k)`
//! collects the values between the widened bands `k - 1` and `k`.

use std::fmt;

use serde::Serialize;

use crate::bubbles::BubbleDecomposition;
use crate::concentration::ConcentrationProfile;
use crate::error::{invalid, Error, Result};
use crate::grid::{CellSet, Face, GridFunction};
use crate::report::Inequality;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusParams {
    /// Lower end of the search interval.
    pub base_radius: f64,
    /// Length of the search interval.
    pub width: f64,
    /// Gap-set width `w`.
    pub window: f64,
    /// One radius per bubble for both sides instead of one per side.
    pub symmetric: bool,
}

impl RadiusParams {
    pub fn new(window: f64) -> Self {
        Self {
            base_radius: 0.0,
            width: 1.0,
            window,
            symmetric: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.base_radius.is_finite() && self.base_radius >= 0.0) {
            return Err(invalid("base_radius", "must be finite and nonnegative"));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(invalid("width", "must be positive"));
        }
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(invalid("window", "must be positive"));
        }
        Ok(())
    }
}

/// Radii chosen for one bubble, with the objective `f(a ± r) + f(a ± (r + w))`
/// at the choice and averaged over the search interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusChoice {
    pub center: f64,
    pub minus: f64,
    pub plus: f64,
    pub achieved_minus: f64,
    pub achieved_plus: f64,
    pub average_minus: f64,
    pub average_plus: f64,
    /// Achieved value does not exceed the interval average.
    pub below_average: bool,
}

impl RadiusChoice {
    pub fn achieved(&self) -> f64 {
        self.achieved_minus + self.achieved_plus
    }

    pub fn max_radius(&self) -> f64 {
        self.minus.max(self.plus)
    }
}

/// Objective along one side: `r -> f(a + s r) + f(a + s (r + w))`.
struct Side<'a> {
    f: &'a ConcentrationProfile,
    center: f64,
    sign: f64,
    window: f64,
}

impl Side<'_> {
    fn value(&self, r: f64) -> f64 {
        let (a, s, w) = (self.center, self.sign, self.window);
        // the minus side uses the value just below the level
        if s > 0.0 {
            self.f.value_at(a + r) + self.f.value_at(a + r + w)
        } else {
            left_value(self.f, a - r) + left_value(self.f, a - r - w)
        }
    }

    fn average(&self, lo: f64, hi: f64) -> f64 {
        let (a, w) = (self.center, self.window);
        let mass = if self.sign > 0.0 {
            self.f.integral(a + lo, a + hi) + self.f.integral(a + lo + w, a + hi + w)
        } else {
            self.f.integral(a - hi, a - lo) + self.f.integral(a - hi - w, a - lo - w)
        };
        mass / (hi - lo)
    }

    /// Radii where the objective may change or a level hits a stored value.
    fn cuts(&self, avoid: &[f64], out: &mut Vec<f64>) {
        let (a, s, w) = (self.center, self.sign, self.window);
        for &t in self.f.breakpoints().iter().chain(avoid) {
            out.push(s * (t - a));
            out.push(s * (t - a) - w);
        }
    }
}

fn left_value(f: &ConcentrationProfile, t: f64) -> f64 {
    // value on the piece ending at t
    let bp = f.breakpoints();
    let k = bp.partition_point(|&b| b < t);
    if k == 0 || k > f.values().len() {
        0.0
    } else {
        f.values()[k - 1]
    }
}

/// Minimize the side objectives over `[base, base + width)` at plateau
/// midpoints, so that the chosen levels avoid breakpoints of `f` and every
/// value in `avoid`.
pub fn select_radii(
    f: &ConcentrationProfile,
    decomp: &BubbleDecomposition,
    params: &RadiusParams,
    avoid: &[f64],
) -> Result<Vec<RadiusChoice>> {
    params.validate()?;
    let lo = params.base_radius;
    let hi = lo + params.width;
    let mut out = Vec::with_capacity(decomp.bubbles.len());
    for b in decomp.by_center() {
        let side = |sign| Side {
            f,
            center: b.center,
            sign,
            window: params.window,
        };
        let (minus, plus) = (side(-1.0), side(1.0));
        let pieces = |sides: &[&Side]| -> Vec<(f64, f64)> {
            let mut cuts = vec![lo, hi];
            for s in sides {
                s.cuts(avoid, &mut cuts);
            }
            cuts.retain(|&c| c >= lo && c <= hi);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            cuts.windows(2).map(|w| (w[0], w[1])).collect()
        };
        let best = |sides: &[&Side]| -> f64 {
            let mut best: Option<(f64, f64)> = None;
            for (a, c) in pieces(sides) {
                let mid = 0.5 * (a + c);
                let v: f64 = sides.iter().map(|s| s.value(mid)).sum();
                if best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, mid));
                }
            }
            best.map_or(0.5 * (lo + hi), |(_, mid)| mid)
        };
        let (r_minus, r_plus) = if params.symmetric {
            let r = best(&[&minus, &plus]);
            (r, r)
        } else {
            (best(&[&minus]), best(&[&plus]))
        };
        let achieved_minus = minus.value(r_minus);
        let achieved_plus = plus.value(r_plus);
        let average_minus = minus.average(lo, hi);
        let average_plus = plus.average(lo, hi);
        let achieved = achieved_minus + achieved_plus;
        let average = average_minus + average_plus;
        out.push(RadiusChoice {
            center: b.center,
            minus: r_minus,
            plus: r_plus,
            achieved_minus,
            achieved_plus,
            average_minus,
            average_plus,
            below_average: achieved <= average * (1.0 + 1e-12),
        });
    }
    Ok(out)
}

/// Label of a cell; indices of main and gap sets refer to bubbles sorted by
/// center, vanishing index `k` sits between bands `k - 1` and `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CellLabel {
    Main(usize),
    GapMinus(usize),
    GapPlus(usize),
    Vanishing(usize),
}

impl CellLabel {
    pub fn is_gap(self) -> bool {
        matches!(self, CellLabel::GapMinus(_) | CellLabel::GapPlus(_))
    }

    pub fn main_index(self) -> Option<usize> {
        match self {
            CellLabel::Main(j) => Some(j),
            _ => None,
        }
    }
}

impl fmt::Display for CellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellLabel::Main(j) => write!(f, "P{j}"),
            CellLabel::GapMinus(j) => write!(f, "G{j}-"),
            CellLabel::GapPlus(j) => write!(f, "G{j}+"),
            CellLabel::Vanishing(k) => write!(f, "V{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetStats {
    pub label: CellLabel,
    pub cells: usize,
    pub volume: f64,
    pub perimeter: f64,
    pub relative_perimeter: f64,
    pub boundary_outside_jump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionStats {
    pub sets: Vec<SetStats>,
    pub total_volume: f64,
    pub main_volume: f64,
    pub gap_volume: f64,
    pub vanishing_volume: f64,
    /// Gap and vanishing cells together.
    pub v_eps_volume: f64,
    /// `H(∪∂*P_j ∪ ∪∂*V_k \ J_u)`, interior faces.
    pub partition_outside_jump: f64,
    /// `H(∪∂*G)` with box walls.
    pub gap_boundary: f64,
    /// Non-jump faces between two different non-gap labels.
    pub steep: f64,
    /// `H(∂*𝒫)` for the pieces `P_j` and `Ω' \ ∪P_j`, interior faces.
    pub piece_boundary: f64,
    pub piece_boundary_outside_jump: f64,
    /// Selected objective values plus the traces inside the gap bands.
    pub gap_chain_bound: f64,
    pub checks: Vec<Inequality>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Band {
    pub center: f64,
    pub minus: f64,
    pub plus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainPartition {
    pub labels: Vec<CellLabel>,
    /// Bands sorted by center.
    pub bands: Vec<Band>,
    pub window: f64,
    pub datum_piece: Option<usize>,
    pub stats: PartitionStats,
}

impl DomainPartition {
    pub fn label(&self, cell: usize) -> CellLabel {
        self.labels[cell]
    }

    pub fn cells_where(&self, u: &GridFunction, pred: impl Fn(CellLabel) -> bool) -> CellSet {
        CellSet::from_fn(u.geom().clone(), |c| pred(self.labels[c]))
    }

    /// Gap and vanishing cells.
    pub fn v_eps(&self, u: &GridFunction) -> CellSet {
        self.cells_where(u, |l| l.main_index().is_none())
    }

    /// Interior faces separating two pieces of `𝒫` (main pieces and the
    /// remainder taken as one piece).
    pub fn piece_boundary_faces<'a>(
        &'a self,
        u: &'a GridFunction,
    ) -> impl Iterator<Item = Face> + 'a {
        u.geom()
            .interior_faces()
            .filter(move |f| self.labels[f.lo].main_index() != self.labels[f.hi].main_index())
    }
}

fn label_value(v: f64, bands: &[Band], w: f64) -> CellLabel {
    let below = bands.partition_point(|b| b.center - b.minus - w <= v);
    if below > 0 {
        let j = below - 1;
        let b = bands[j];
        if v < b.center + b.plus + w {
            return if v < b.center - b.minus {
                CellLabel::GapMinus(j)
            } else if v < b.center + b.plus {
                CellLabel::Main(j)
            } else {
                CellLabel::GapPlus(j)
            };
        }
    }
    CellLabel::Vanishing(below)
}

/// Label every cell by its value band and compute the partition statistics.
/// `domain` is the reference domain `Ω`; the main piece containing all of
/// `Ω' \ Ω` becomes the datum piece.
pub fn build_partition(
    u: &GridFunction,
    radii: &[RadiusChoice],
    window: f64,
    domain: Option<&CellSet>,
) -> Result<DomainPartition> {
    if !(window.is_finite() && window > 0.0) {
        return Err(invalid("window", "must be positive"));
    }
    let geom = u.geom();
    if let Some(d) = domain {
        geom.check_same(d.geom(), "function and domain")?;
    }
    let mut bands: Vec<Band> = radii
        .iter()
        .map(|r| Band {
            center: r.center,
            minus: r.minus,
            plus: r.plus,
        })
        .collect();
    bands.sort_by(|a, b| a.center.total_cmp(&b.center));
    for (j, pair) in bands.windows(2).enumerate() {
        let top = pair[0].center + pair[0].plus + window;
        let bottom = pair[1].center - pair[1].minus - window;
        if top > bottom {
            return Err(Error::OverlappingBands {
                lower: j,
                upper: j + 1,
                lower_top: top,
                upper_bottom: bottom,
            });
        }
    }
    let labels: Vec<CellLabel> = u
        .values()
        .iter()
        .map(|&v| label_value(v, &bands, window))
        .collect();
    let datum_piece = domain.and_then(|d| {
        let rest = d.complement();
        let mut outside = rest.cells().map(|c| labels[c].main_index());
        let first = outside.next()??;
        outside.all(|j| j == Some(first)).then_some(first)
    });
    let mut part = DomainPartition {
        labels,
        bands,
        window,
        datum_piece,
        stats: PartitionStats {
            sets: Vec::new(),
            total_volume: 0.0,
            main_volume: 0.0,
            gap_volume: 0.0,
            vanishing_volume: 0.0,
            v_eps_volume: 0.0,
            partition_outside_jump: 0.0,
            gap_boundary: 0.0,
            steep: 0.0,
            piece_boundary: 0.0,
            piece_boundary_outside_jump: 0.0,
            gap_chain_bound: 0.0,
            checks: Vec::new(),
        },
    };
    part.stats = partition_stats(u, &part, radii);
    Ok(part)
}

fn partition_stats(
    u: &GridFunction,
    part: &DomainPartition,
    radii: &[RadiusChoice],
) -> PartitionStats {
    let geom = u.geom();
    let area = geom.face_area();
    let cell_volume = geom.cell_volume();
    let labels = &part.labels;

    let mut distinct: Vec<CellLabel> = labels.clone();
    distinct.sort();
    distinct.dedup();
    let sets: Vec<SetStats> = distinct
        .iter()
        .map(|&label| {
            let set = CellSet::from_fn(geom.clone(), |c| labels[c] == label);
            let outside_jump = set.relative_boundary().filter(|&f| !u.is_jump(f)).count();
            SetStats {
                label,
                cells: set.count(),
                volume: set.volume(),
                perimeter: set.perimeter(),
                relative_perimeter: set.relative_perimeter(),
                boundary_outside_jump: outside_jump as f64 * area,
            }
        })
        .collect();

    let count = |pred: &dyn Fn(CellLabel) -> bool| labels.iter().filter(|&&l| pred(l)).count();
    let main_cells = count(&|l| l.main_index().is_some());
    let gap_cells = count(&|l| l.is_gap());
    let vanishing_cells = count(&|l| matches!(l, CellLabel::Vanishing(_)));

    let mut outside_jump = 0usize;
    let mut gap_faces = 0usize;
    let mut steep = 0usize;
    let mut piece_faces = 0usize;
    let mut piece_outside_jump = 0usize;
    for f in geom.interior_faces() {
        let (a, b) = (labels[f.lo], labels[f.hi]);
        if a == b {
            continue;
        }
        let jump = u.is_jump(f);
        let in_pv = !a.is_gap() || !b.is_gap();
        if in_pv && !jump {
            outside_jump += 1;
        }
        if a.is_gap() || b.is_gap() {
            gap_faces += 1;
        } else if !jump {
            steep += 1;
        }
        if a.main_index() != b.main_index() {
            piece_faces += 1;
            if !jump {
                piece_outside_jump += 1;
            }
        }
    }
    gap_faces += geom
        .wall_faces()
        .filter(|w| labels[w.cell].is_gap())
        .count();

    // traces of J_u and the walls inside each gap band
    let w = part.window;
    let mut traces = Vec::new();
    for f in u.jump_faces() {
        traces.push(u.value(f.lo));
        traces.push(u.value(f.hi));
    }
    traces.extend(geom.wall_faces().map(|wf| u.value(wf.cell)));
    let mut chain = 0.0;
    for r in radii {
        let bands = [
            (r.center + r.plus, r.center + r.plus + w),
            (r.center - r.minus - w, r.center - r.minus),
        ];
        let inside = traces
            .iter()
            .filter(|&&s| bands.iter().any(|&(lo, hi)| lo <= s && s < hi))
            .count();
        chain += r.achieved() + inside as f64 * area;
    }

    let gap_boundary = gap_faces as f64 * area;
    let partition_outside_jump = outside_jump as f64 * area;
    let steep_measure = steep as f64 * area;
    let gap_volume = gap_cells as f64 * cell_volume;
    let mut checks = vec![
        Inequality::exact(
            "partition_outside_jump <= gap_boundary + steep",
            partition_outside_jump,
            gap_boundary + steep_measure,
        ),
        Inequality::with_slack("gap_boundary <= gap_chain_bound", gap_boundary, chain, 1e-9),
    ];
    if geom.dim() == 2 {
        checks.push(Inequality::with_slack(
            "gap_volume <= gap_boundary^2 / 16",
            gap_volume,
            gap_boundary * gap_boundary / 16.0,
            1e-12,
        ));
    }
    checks.push(Inequality::with_slack(
        "sum of set volumes <= domain volume",
        sets.iter().map(|s| s.volume).sum(),
        geom.domain_volume(),
        1e-12,
    ));
    for r in radii {
        checks.push(Inequality::with_slack(
            format!("radius objective at {} <= average", r.center),
            r.achieved(),
            r.average_minus + r.average_plus,
            1e-12,
        ));
    }

    PartitionStats {
        sets,
        total_volume: geom.domain_volume(),
        main_volume: main_cells as f64 * cell_volume,
        gap_volume,
        vanishing_volume: vanishing_cells as f64 * cell_volume,
        v_eps_volume: (gap_cells + vanishing_cells) as f64 * cell_volume,
        partition_outside_jump,
        gap_boundary,
        steep: steep_measure,
        piece_boundary: piece_faces as f64 * area,
        piece_boundary_outside_jump: piece_outside_jump as f64 * area,
        gap_chain_bound: chain,
        checks,
    }
}

/// `u - h` with the cracks of both; errors unless `u = h` outside `domain`.
pub fn reduce_by_datum(
    u: &GridFunction,
    datum: &GridFunction,
    domain: Option<&CellSet>,
) -> Result<GridFunction> {
    u.geom().check_same(datum.geom(), "function and datum")?;
    if let Some(d) = domain {
        u.geom().check_same(d.geom(), "function and domain")?;
        if let Some(cell) = d
            .complement()
            .cells()
            .find(|&c| u.value(c) != datum.value(c))
        {
            return Err(Error::DatumMismatch { cell });
        }
    }
    let values = u
        .values()
        .iter()
        .zip(datum.values())
        .map(|(a, b)| a - b)
        .collect();
    let cracks: Vec<Face> = datum
        .geom()
        .interior_faces()
        .filter(|&f| datum.is_crack(f))
        .collect();
    Ok(u.with_values(values)?.with_added_cracks(cracks))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Renormalized {
    #[serde(skip)]
    pub function: GridFunction,
    /// Constant subtracted on each main piece.
    pub shifts: Vec<f64>,
    pub jump_before: f64,
    pub jump_after: f64,
    pub sup_norm: f64,
    pub sup_bound: f64,
    pub checks: Vec<Inequality>,
}

/// Shifts `a_j` per main piece, with the datum piece pinned to 0.
fn piece_shifts(part: &DomainPartition) -> Vec<f64> {
    part.bands
        .iter()
        .enumerate()
        .map(|(j, b)| {
            if part.datum_piece == Some(j) {
                0.0
            } else {
                b.center
            }
        })
        .collect()
}

fn translated(
    v: &GridFunction,
    part: &DomainPartition,
    shift: impl Fn(usize) -> f64,
) -> Result<GridFunction> {
    let values = v
        .values()
        .iter()
        .zip(&part.labels)
        .map(|(&x, l)| match l.main_index() {
            Some(j) => x - shift(j),
            None => 0.0,
        })
        .collect();
    let boundary: Vec<Face> = v
        .geom()
        .interior_faces()
        .filter(|f| part.labels[f.lo] != part.labels[f.hi])
        .collect();
    Ok(v.with_values(values)?.with_added_cracks(boundary))
}

/// `u_ε = v - Σ a_j χ_{P_j}` on the main pieces and 0 on gap and vanishing
/// cells, where `v = u - h`. Faces between differently labelled cells join
/// the crack set.
pub fn renormalize(
    u: &GridFunction,
    part: &DomainPartition,
    datum: Option<&GridFunction>,
) -> Result<Renormalized> {
    let v = match datum {
        Some(h) => reduce_by_datum(u, h, None)?,
        None => u.clone(),
    };
    if part.labels.len() != v.geom().num_cells() {
        return Err(Error::GeometryMismatch("partition and function".into()));
    }
    let shifts = piece_shifts(part);
    let w = translated(&v, part, |j| shifts[j])?;
    let jump_before = u.jump_measure();
    let jump_after = w.jump_measure();
    let sup_norm = w.sup_norm();
    let max_radius = part
        .bands
        .iter()
        .map(|b| b.minus.max(b.plus))
        .fold(0.0, f64::max);
    // a pinned datum piece keeps its offset from the bubble center
    let pinned = part.datum_piece.map_or(0.0, |j| {
        part.bands[j].center.abs() + part.bands[j].minus.max(part.bands[j].plus)
    });
    let sup_bound = max_radius.max(pinned) + part.window;
    let mut checks = vec![
        Inequality::exact("sup |u_eps| <= max radius + w", sup_norm, sup_bound),
        Inequality::exact(
            "jump(u_eps) <= jump(u) + partition_outside_jump",
            jump_after,
            jump_before + part.stats.partition_outside_jump,
        ),
    ];
    if datum.is_some() {
        checks[1] = Inequality::exact(
            "jump(u_eps) <= jump(u - h) + partition_outside_jump",
            jump_after,
            v.jump_measure() + part.stats.partition_outside_jump,
        );
    }
    Ok(Renormalized {
        function: w,
        shifts,
        jump_before,
        jump_after,
        sup_norm,
        sup_bound,
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Perturbed {
    #[serde(skip)]
    pub function: GridFunction,
    /// `α_j` per main piece.
    pub alphas: Vec<f64>,
    pub jump_measure: f64,
    /// `H(J_u ∪ ∂*𝒫)`.
    pub union_measure: f64,
    /// Every face of `∂*𝒫` is a jump of the perturbed function.
    pub covers_partition: bool,
}

/// Dyadic candidates in `[0, 1]`: 0, 1, 1/2, 1/4, 3/4, 1/8, ...
fn dyadic_candidates() -> impl Iterator<Item = f64> {
    [0.0, 1.0].into_iter().chain((1..53).flat_map(|m| {
        let denom = (1u64 << m) as f64;
        (0..1u64 << (m - 1)).map(move |k| (2 * k + 1) as f64 / denom)
    }))
}

/// Like [`renormalize`], but each main piece is shifted by `a_j - α_j` with
/// distinct dyadic `α_j ∈ [0, 1]` chosen so the two sides of every face of
/// `∂*𝒫` differ.
pub fn perturbed_translation(
    u: &GridFunction,
    part: &DomainPartition,
    datum: Option<&GridFunction>,
) -> Result<Perturbed> {
    let v = match datum {
        Some(h) => reduce_by_datum(u, h, None)?,
        None => u.clone(),
    };
    if part.labels.len() != v.geom().num_cells() {
        return Err(Error::GeometryMismatch("partition and function".into()));
    }
    let shifts = piece_shifts(part);
    let faces: Vec<Face> = part.piece_boundary_faces(&v).collect();
    let base = |cell: usize| match part.labels[cell].main_index() {
        Some(j) => v.value(cell) - shifts[j],
        None => 0.0,
    };
    let mut alphas: Vec<Option<f64>> = vec![None; part.bands.len()];
    for j in 0..part.bands.len() {
        let value_with = |cell: usize, alphas: &[Option<f64>], trial: f64| -> Option<f64> {
            match part.labels[cell].main_index() {
                Some(k) if k == j => Some(base(cell) + trial),
                Some(k) => alphas[k].map(|a| base(cell) + a),
                None => Some(0.0),
            }
        };
        let touching: Vec<Face> = faces
            .iter()
            .copied()
            .filter(|f| {
                part.labels[f.lo].main_index() == Some(j)
                    || part.labels[f.hi].main_index() == Some(j)
            })
            .collect();
        let pick = dyadic_candidates()
            .filter(|a| !alphas.contains(&Some(*a)))
            .find(|&a| {
                touching.iter().all(|f| {
                    match (value_with(f.lo, &alphas, a), value_with(f.hi, &alphas, a)) {
                        (Some(x), Some(y)) => x != y,
                        _ => true,
                    }
                })
            })
            .ok_or_else(|| invalid("alpha", "no dyadic perturbation separates the pieces"))?;
        alphas[j] = Some(pick);
    }
    let alphas: Vec<f64> = alphas.into_iter().map(|a| a.unwrap_or(0.0)).collect();
    let function = translated(&v, part, |j| shifts[j] - alphas[j])?;
    let covers_partition = faces.iter().all(|&f| function.is_jump(f));
    let area = v.geom().face_area();
    let union = v
        .geom()
        .interior_faces()
        .filter(|&f| {
            u.is_jump(f) || part.labels[f.lo].main_index() != part.labels[f.hi].main_index()
        })
        .count();
    Ok(Perturbed {
        jump_measure: function.jump_measure(),
        function,
        alphas,
        union_measure: union as f64 * area,
        covers_partition,
    })
}

/// Distinct cell values, for `select_radii`'s `avoid` list.
pub fn cell_values(u: &GridFunction) -> Vec<f64> {
    let mut vals = u.values().to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::{extract_bubbles, ExtractionParams};
    use crate::concentration::concentration_profile;
    use crate::fixtures::{runaway, staircase};
    use crate::grid::{energy, GridGeometry};

    fn pipeline(u: &GridFunction, eps: f64) -> (Vec<RadiusChoice>, DomainPartition) {
        let f = concentration_profile(u, None, 1.0).unwrap();
        let d = extract_bubbles(&f, &ExtractionParams::new(eps, 2.0, 1.0)).unwrap();
        let radii = select_radii(&f, &d, &RadiusParams::new(1.0), &cell_values(u)).unwrap();
        let part = build_partition(u, &radii, 1.0, None).unwrap();
        (radii, part)
    }

    #[test]
    fn runaway_splits_into_two_pieces() {
        let u = runaway(10.0, 8).unwrap();
        let (_, part) = pipeline(&u, 0.1);
        assert_eq!(part.bands.len(), 2);
        assert_eq!(part.stats.gap_volume, 0.0);
        assert_eq!(part.stats.vanishing_volume, 0.0);
        assert_eq!(part.stats.partition_outside_jump, 0.0);
        assert_eq!(part.label(0), CellLabel::Main(0));
        assert_eq!(part.label(u.geom().num_cells() - 1), CellLabel::Main(1));
        let r = renormalize(&u, &part, None).unwrap();
        assert!(r.function.values().iter().all(|&v| v == 0.0));
        assert!(r.checks.iter().all(|c| c.holds));
    }

    #[test]
    fn staircase_strip_is_the_remainder() {
        let n = 16;
        let u = staircase(n, 1).unwrap();
        let (radii, part) = pipeline(&u, 0.1);
        assert_eq!(radii.len(), 2);
        assert!(radii.iter().all(|r| r.below_average));
        assert!((part.stats.v_eps_volume - 1.0 / n as f64).abs() < 1e-15);
        assert!(
            part.stats.checks.iter().all(|c| c.holds),
            "{:?}",
            part.stats.checks
        );
        let r = renormalize(&u, &part, None).unwrap();
        assert!(r.checks.iter().all(|c| c.holds));
    }

    #[test]
    fn constant_function_is_one_piece() {
        let g = GridGeometry::new(vec![0.0, 0.0], 0.25, vec![4, 4]).unwrap();
        let u = GridFunction::constant(g, 0.0).unwrap();
        let (_, part) = pipeline(&u, 0.1);
        assert!(part.labels.iter().all(|&l| l == CellLabel::Main(0)));
        let r = renormalize(&u, &part, None).unwrap();
        assert_eq!(r.function, u);
    }

    #[test]
    fn overlapping_bands_are_rejected() {
        let g = GridGeometry::new(vec![0.0], 1.0, vec![2]).unwrap();
        let u = GridFunction::constant(g, 0.0).unwrap();
        let choice = |center| RadiusChoice {
            center,
            minus: 1.0,
            plus: 1.0,
            achieved_minus: 0.0,
            achieved_plus: 0.0,
            average_minus: 0.0,
            average_plus: 0.0,
            below_average: true,
        };
        let err = build_partition(&u, &[choice(0.0), choice(3.0)], 1.0, None);
        assert!(matches!(err, Err(Error::OverlappingBands { .. })));
        assert!(build_partition(&u, &[choice(0.0), choice(4.0)], 1.0, None).is_ok());
    }

    #[test]
    fn radius_avoids_a_spike() {
        // spike on [0.25, 0.5) right of the center, base 0, width 1
        let f = ConcentrationProfile::from_plateaus(
            vec![-0.5, 0.25, 0.5, 3.0],
            vec![0.1, 5.0, 0.1],
            1.0,
        )
        .unwrap();
        let d = extract_bubbles(&f, &ExtractionParams::new(0.01, 2.0, 1.0)).unwrap();
        let params = RadiusParams {
            symmetric: false,
            ..RadiusParams::new(1.0)
        };
        let r = select_radii(&f, &d, &params, &[]).unwrap();
        let a = r[0].center;
        assert!(!(0.25..0.5).contains(&(a + r[0].plus)));
        assert!(r[0].below_average);
    }

    #[test]
    fn perturbation_separates_equal_traces() {
        // two pieces with the same renormalized value across a crack
        let g = GridGeometry::new(vec![0.0], 1.0, vec![4]).unwrap();
        let u = GridFunction::new(
            g,
            vec![0.0, 0.0, 100.0, 100.0],
            [crate::grid::FaceId::new(0, [1, 0])],
        )
        .unwrap();
        let (_, part) = pipeline(&u, 0.1);
        let r = renormalize(&u, &part, None).unwrap();
        assert_eq!(r.function.jump_measure(), 0.0);
        let p = perturbed_translation(&u, &part, None).unwrap();
        assert!(p.covers_partition);
        assert_eq!(p.jump_measure, 1.0);
        assert_eq!(p.union_measure, 1.0);
        let mut sorted = p.alphas.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), p.alphas.len());
    }

    #[test]
    fn translation_with_zero_shifts_is_identity_energy() {
        let u = runaway(1.0, 4).unwrap();
        let e = energy(&u, 2.0).unwrap();
        let (_, part) = pipeline(&u, 0.1);
        let r = renormalize(&u, &part, None).unwrap();
        assert!(energy(&r.function, 2.0).unwrap().jump <= e.jump);
    }

    #[test]
    fn datum_mismatch_is_detected() {
        let g = GridGeometry::new(vec![0.0], 1.0, vec![3]).unwrap();
        let u = GridFunction::from_values(g.clone(), vec![1.0, 2.0, 3.0]).unwrap();
        let h = GridFunction::constant(g.clone(), 1.0).unwrap();
        let omega = CellSet::new(g, vec![false, true, true]).unwrap();
        assert!(reduce_by_datum(&u, &h, Some(&omega)).is_ok());
        let omega_small = CellSet::new(u.geom().clone(), vec![false, true, false]).unwrap();
        assert!(matches!(
            reduce_by_datum(&u, &h, Some(&omega_small)),
            Err(Error::DatumMismatch { cell: 2 })
        ));
    }
}
