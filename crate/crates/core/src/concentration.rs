//! The concentration function on the range of `u`.
//!
//! `f(t; u)` adds two contributions: the measure of the non-jump part of the
//! level boundary `∂*{u > t}`, and for every trace on `J_u ∪ ∂Ω'` (two per
//! jump face, one per boundary face) the face measure on the trace window
//! `[trace - w, trace + w)`. On the grid both terms are sums of indicator
//! functions of intervals, so the profile is an exact piecewise-constant
//! function with finitely many breakpoints.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::{CellSet, GridFunction};

/// Piecewise-constant, compactly supported, nonnegative function on `R`.
///
/// `values[k]` is the value on `[breakpoints[k], breakpoints[k + 1])`; the
/// function is zero outside `[breakpoints[0], breakpoints[m])`. The
/// representation is canonical: no empty pieces, no equal neighbours, no
/// leading or trailing zero pieces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    window: f64,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

/// Result of maximizing the window mass over all centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevyMax {
    pub mass: f64,
    pub center: f64,
}

impl ConcentrationProfile {
    pub fn zero(window: f64) -> Self {
        Self::canonical(Vec::new(), Vec::new(), window)
    }

    /// Build from explicit plateaus: `values[k]` on `[breakpoints[k], breakpoints[k+1])`.
    pub fn from_plateaus(breakpoints: Vec<f64>, values: Vec<f64>, window: f64) -> Result<Self> {
        check_window(window)?;
        if breakpoints.is_empty() {
            if values.is_empty() {
                return Ok(Self::zero(window));
            }
            return Err(invalid("breakpoints", "values given without breakpoints"));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(invalid(
                "values",
                format!(
                    "{} values for {} breakpoints",
                    values.len(),
                    breakpoints.len()
                ),
            ));
        }
        if breakpoints.iter().any(|t| !t.is_finite())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid(
                "breakpoints",
                "must be finite and strictly increasing",
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("values", "must be finite and nonnegative"));
        }
        Ok(Self::canonical(breakpoints, values, window))
    }

    fn canonical(points: Vec<f64>, values: Vec<f64>, window: f64) -> Self {
        let mut bp: Vec<f64> = Vec::with_capacity(points.len());
        let mut vals: Vec<f64> = Vec::with_capacity(values.len());
        for (k, &v) in values.iter().enumerate() {
            let (start, end) = (points[k], points[k + 1]);
            if start >= end {
                continue;
            }
            match vals.last() {
                Some(&last) if last == v => *bp.last_mut().unwrap() = end,
                _ => {
                    if bp.is_empty() {
                        bp.push(start);
                    }
                    vals.push(v);
                    bp.push(end);
                }
            }
        }
        // trim zero pieces at both ends
        while vals.first() == Some(&0.0) {
            vals.remove(0);
            bp.remove(0);
        }
        while vals.last() == Some(&0.0) {
            vals.pop();
            bp.pop();
        }
        if vals.is_empty() {
            bp.clear();
        }
        let mut cumulative = Vec::with_capacity(bp.len());
        if !bp.is_empty() {
            cumulative.push(0.0);
            let mut acc = 0.0;
            for (k, v) in vals.iter().enumerate() {
                acc += v * (bp[k + 1] - bp[k]);
                cumulative.push(acc);
            }
        }
        Self {
            breakpoints: bp,
            values: vals,
            window,
            cumulative,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// `(lo, hi, value)` for every plateau.
    pub fn plateaus(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| (self.breakpoints[k], self.breakpoints[k + 1], v))
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        Some((*self.breakpoints.first()?, *self.breakpoints.last()?))
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Right-continuous point evaluation.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.piece_index(t) {
            Some(k) => self.values[k],
            None => 0.0,
        }
    }

    fn piece_index(&self, t: f64) -> Option<usize> {
        let (lo, hi) = self.support()?;
        if t < lo || t >= hi {
            return None;
        }
        Some(self.breakpoints.partition_point(|&b| b <= t) - 1)
    }

    /// `∫_lo^hi f`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let Some((s_lo, s_hi)) = self.support() else {
            return 0.0;
        };
        let (lo, hi) = (lo.max(s_lo), hi.min(s_hi));
        if hi <= lo {
            return 0.0;
        }
        let k_lo = self.breakpoints.partition_point(|&b| b <= lo) - 1;
        let k_hi = self.breakpoints.partition_point(|&b| b < hi) - 1;
        if k_lo == k_hi {
            return self.values[k_lo] * (hi - lo);
        }
        // partial end pieces plus whole pieces in between
        let head = self.values[k_lo] * (self.breakpoints[k_lo + 1] - lo);
        let tail = self.values[k_hi] * (hi - self.breakpoints[k_hi]);
        let middle = self.cumulative[k_hi] - self.cumulative[k_lo + 1];
        (head + middle + tail).max(0.0)
    }

    /// `∫_{a-R}^{a+R} f`.
    pub fn window_mass(&self, center: f64, radius: f64) -> f64 {
        self.integral(center - radius, center + radius)
    }

    /// Lévy concentration `sup_a ∫_{B(a,R)} f` with the smallest maximizing
    /// center. Masses within `1e-12` of the maximum (relative to the total)
    /// count as ties.
    pub fn levy_concentration(&self, radius: f64) -> LevyMax {
        if self.is_zero() {
            return LevyMax {
                mass: 0.0,
                center: 0.0,
            };
        }
        let span = 2.0 * radius;
        // the window mass is piecewise linear in the center with kinks where
        // an endpoint crosses a breakpoint
        let candidates: Vec<LevyMax> = self
            .breakpoints
            .iter()
            .flat_map(|&t| {
                [
                    LevyMax {
                        mass: self.integral(t - span, t),
                        center: t - radius,
                    },
                    LevyMax {
                        mass: self.integral(t, t + span),
                        center: t + radius,
                    },
                ]
            })
            .collect();
        let best = candidates.iter().map(|c| c.mass).fold(0.0, f64::max);
        let tol = 1e-12 * self.total_mass();
        candidates
            .into_iter()
            .filter(|c| c.mass >= best - tol)
            .min_by(|a, b| a.center.total_cmp(&b.center))
            .map(|c| LevyMax {
                mass: c.mass,
                center: c.center,
            })
            .unwrap()
    }

    /// Copy with `f = 0` on `[lo, hi)`.
    pub fn zeroed(&self, lo: f64, hi: f64) -> Self {
        let Some((s_lo, s_hi)) = self.support() else {
            return self.clone();
        };
        if hi <= lo || hi <= s_lo || lo >= s_hi {
            return self.clone();
        }
        let mut points = self.breakpoints.clone();
        for cut in [lo, hi] {
            if cut > s_lo && cut < s_hi {
                points.push(cut);
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        let values = points
            .windows(2)
            .map(|w| {
                if w[0] >= lo && w[0] < hi {
                    0.0
                } else {
                    self.value_at(w[0])
                }
            })
            .collect();
        Self::canonical(points, values, self.window)
    }

    /// Profile of `t -> f(t - c)`.
    pub fn shifted(&self, c: f64) -> Self {
        let points = self.breakpoints.iter().map(|t| t + c).collect();
        Self::canonical(points, self.values.clone(), self.window)
    }

    /// Pointwise `self <= other` everywhere.
    pub fn dominated_by(&self, other: &ConcentrationProfile) -> bool {
        self.breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .all(|&t| self.value_at(t) <= other.value_at(t))
    }

    /// Plateau rows `t_k,v_k`; the last row carries the zero tail.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (k, t) in self.breakpoints.iter().enumerate() {
            let v = self.values.get(k).copied().unwrap_or(0.0);
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }
}

fn check_window(window: f64) -> Result<()> {
    if window.is_finite() && window > 0.0 {
        Ok(())
    } else {
        Err(invalid("window", format!("must be positive, got {window}")))
    }
}

/// Accumulates unit-weight intervals and sweeps them into a profile.
#[derive(Default)]
struct IntervalSweep {
    events: Vec<(f64, i64)>,
}

impl IntervalSweep {
    fn add(&mut self, lo: f64, hi: f64) {
        if lo < hi {
            self.events.push((lo, 1));
            self.events.push((hi, -1));
        }
    }

    fn finish(mut self, unit: f64, window: f64) -> ConcentrationProfile {
        self.events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut count = 0i64;
        let mut i = 0;
        while i < self.events.len() {
            let t = self.events[i].0;
            while i < self.events.len() && self.events[i].0 == t {
                count += self.events[i].1;
                i += 1;
            }
            points.push(t);
            values.push(count as f64 * unit);
        }
        // the value after the last event is zero and is not a piece
        values.pop();
        if points.len() < 2 {
            return ConcentrationProfile::zero(window);
        }
        ConcentrationProfile::canonical(points, values, window)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Terms {
    All,
    Level,
    Trace,
}

fn build(
    u: &GridFunction,
    domain: Option<&CellSet>,
    window: f64,
    terms: Terms,
) -> Result<ConcentrationProfile> {
    check_window(window)?;
    let geom = u.geom();
    if let Some(d) = domain {
        geom.check_same(d.geom(), "function and domain")?;
    }
    let inside = |cell: usize| domain.is_none_or(|d| d.contains(cell));
    let level = terms != Terms::Trace;
    let trace = terms != Terms::Level;
    let mut sweep = IntervalSweep::default();
    let add_trace = |s: f64, sweep: &mut IntervalSweep| {
        if trace {
            sweep.add(s - window, s + window);
        }
    };
    for face in geom.interior_faces() {
        let (a, b) = (u.value(face.lo), u.value(face.hi));
        match (inside(face.lo), inside(face.hi)) {
            (true, true) => {
                if u.is_jump(face) {
                    add_trace(a, &mut sweep);
                    add_trace(b, &mut sweep);
                } else if level {
                    sweep.add(a.min(b), a.max(b));
                }
            }
            // reduced boundary of the domain: trace from inside only
            (true, false) => add_trace(a, &mut sweep),
            (false, true) => add_trace(b, &mut sweep),
            (false, false) => {}
        }
    }
    for wall in geom.wall_faces() {
        if inside(wall.cell) {
            add_trace(u.value(wall.cell), &mut sweep);
        }
    }
    Ok(sweep.finish(geom.face_area(), window))
}

/// `f(t; u)`, or `f(t; u, Ω)` when a domain is given (traces counted from
/// inside the domain, its reduced boundary in `R^N` included).
pub fn concentration_profile(
    u: &GridFunction,
    domain: Option<&CellSet>,
    window: f64,
) -> Result<ConcentrationProfile> {
    build(u, domain, window, Terms::All)
}

/// First term only: `t -> H^(N-1)(∂*{u > t} \ J_u)`.
pub fn level_profile(u: &GridFunction, domain: Option<&CellSet>) -> Result<ConcentrationProfile> {
    build(u, domain, 1.0, Terms::Level)
}

/// Second term only: trace windows on `J_u ∪ ∂Ω'`.
pub fn trace_profile(
    u: &GridFunction,
    domain: Option<&CellSet>,
    window: f64,
) -> Result<ConcentrationProfile> {
    build(u, domain, window, Terms::Trace)
}

/// All traces on `J_u ∪ ∂Ω'`: both sides of every jump face, the interior
/// side of every wall face.
pub fn traces(u: &GridFunction) -> Vec<f64> {
    let geom = u.geom();
    let mut out = Vec::new();
    for face in u.jump_faces() {
        out.push(u.value(face.lo));
        out.push(u.value(face.hi));
    }
    out.extend(geom.wall_faces().map(|w| u.value(w.cell)));
    out
}

/// `H^(N-1)(J_u ∪ ∂Ω')`.
pub fn jump_and_wall_measure(u: &GridFunction) -> f64 {
    let geom = u.geom();
    (u.jump_faces().count() + geom.num_wall_faces()) as f64 * geom.face_area()
}

/// Tiling minorant of the trace term: for tiles `[z, z + w)` with
/// `z ∈ offset + wZ`, the face measure of traces falling in the tile, spread
/// over the tile. Pointwise below the trace term of `f`, with integral
/// `w` times the total trace measure.
pub fn tiling_minorant(u: &GridFunction, offset: f64, window: f64) -> Result<ConcentrationProfile> {
    check_window(window)?;
    let mut sweep = IntervalSweep::default();
    for s in traces(u) {
        let mut k = ((s - offset) / window).floor();
        let mut z = offset + k * window;
        // guard the floor against rounding at tile edges
        while z > s {
            k -= 1.0;
            z = offset + k * window;
        }
        while z + window <= s {
            k += 1.0;
            z = offset + k * window;
        }
        sweep.add(z, z + window);
    }
    Ok(sweep.finish(u.geom().face_area(), window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FaceId, GridGeometry};

    fn plateau(lo: f64, hi: f64, v: f64) -> ConcentrationProfile {
        ConcentrationProfile::from_plateaus(vec![lo, hi], vec![v], 1.0).unwrap()
    }

    #[test]
    fn zero_on_unit_square() {
        let g = GridGeometry::new(vec![0.0, 0.0], 0.25, vec![4, 4]).unwrap();
        let u = GridFunction::constant(g, 0.0).unwrap();
        let f = concentration_profile(&u, None, 1.0).unwrap();
        assert_eq!(f.breakpoints(), &[-1.0, 1.0]);
        assert_eq!(f.values(), &[4.0]);
        assert_eq!(f.total_mass(), 8.0);
    }

    #[test]
    fn one_dimensional_crack() {
        // jump 0 -> 5 at the midpoint of (0,1); H^0 counts points
        let g = GridGeometry::new(vec![0.0], 0.5, vec![2]).unwrap();
        let u = GridFunction::new(g, vec![0.0, 5.0], [FaceId::new(0, [0, 0])]).unwrap();
        let f = concentration_profile(&u, None, 1.0).unwrap();
        assert_eq!(f.value_at(0.0), 2.0);
        assert_eq!(f.value_at(5.5), 2.0);
        assert_eq!(f.value_at(2.0), 0.0);
        assert_eq!(f.total_mass(), 8.0);
    }

    #[test]
    fn rejects_bad_window() {
        let g = GridGeometry::new(vec![0.0], 1.0, vec![2]).unwrap();
        let u = GridFunction::constant(g, 0.0).unwrap();
        assert!(concentration_profile(&u, None, 0.0).is_err());
        assert!(concentration_profile(&u, None, f64::NAN).is_err());
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let g = GridGeometry::new(vec![0.0], 1.0, vec![2]).unwrap();
        let h = GridGeometry::new(vec![0.0], 1.0, vec![3]).unwrap();
        let u = GridFunction::constant(g, 0.0).unwrap();
        assert!(concentration_profile(&u, Some(&CellSet::full(h)), 1.0).is_err());
    }

    #[test]
    fn canonical_form_merges_and_trims() {
        let f = ConcentrationProfile::from_plateaus(
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![0.0, 2.0, 2.0, 0.0],
            1.0,
        )
        .unwrap();
        assert_eq!(f.breakpoints(), &[1.0, 3.0]);
        assert_eq!(f.values(), &[2.0]);
        assert!(ConcentrationProfile::from_plateaus(vec![1.0, 1.0], vec![1.0], 1.0).is_err());
        assert!(ConcentrationProfile::from_plateaus(vec![0.0, 1.0], vec![-1.0], 1.0).is_err());
    }

    #[test]
    fn window_mass_limits() {
        let f = plateau(0.0, 3.0, 2.0);
        assert_eq!(f.window_mass(1.5, 100.0), f.total_mass());
        for r in [1e-3, 1e-6, 1e-9] {
            let m = f.window_mass(1.2, r);
            // the window endpoints themselves round at the scale of ulp(1.2)
            assert!(m <= (2.0 * r + 1e-15) * f.max_value());
        }
        assert_eq!(f.window_mass(10.0, 1.0), 0.0);
    }

    #[test]
    fn levy_single_plateau() {
        let f = plateau(0.0, 4.0, 1.5);
        let m = f.levy_concentration(2.0);
        assert_eq!(m.mass, 6.0);
        assert_eq!(m.center, 2.0);
        // larger radius: every covering window ties, smallest center wins
        let m = f.levy_concentration(3.0);
        assert_eq!(m.mass, 6.0);
        assert_eq!(m.center, 1.0);
    }

    #[test]
    fn levy_two_separated_plateaus() {
        let f = ConcentrationProfile::from_plateaus(
            vec![0.0, 1.0, 10.0, 11.0],
            vec![1.0, 0.0, 1.0],
            1.0,
        )
        .unwrap();
        let m = f.levy_concentration(2.0);
        assert!((m.mass - 1.0).abs() < 1e-15);
        // brute-force scan over a fine center grid never exceeds it
        let scan = (0..=2400)
            .map(|i| f.window_mass(-6.0 + i as f64 * 0.01, 2.0))
            .fold(0.0, f64::max);
        assert!(scan <= m.mass + 1e-12);
    }

    #[test]
    fn zeroing_splits_plateaus() {
        let f = plateau(0.0, 4.0, 1.0);
        let g = f.zeroed(1.0, 2.0);
        assert_eq!(g.breakpoints(), &[0.0, 1.0, 2.0, 4.0]);
        assert_eq!(g.values(), &[1.0, 0.0, 1.0]);
        assert_eq!(g.total_mass(), 3.0);
        assert!(f.zeroed(-1.0, 10.0).is_zero());
        assert_eq!(f.zeroed(5.0, 6.0), f);
    }

    #[test]
    fn translation_shifts_breakpoints() {
        let g = GridGeometry::new(vec![0.0], 1.0, vec![4]).unwrap();
        let u = GridFunction::new(g, vec![0.0, 1.0, 3.0, 7.0], [FaceId::new(0, [1, 0])]).unwrap();
        let f = concentration_profile(&u, None, 1.0).unwrap();
        let fs = concentration_profile(&u.shifted(5.0).unwrap(), None, 1.0).unwrap();
        assert_eq!(fs, f.shifted(5.0));
    }

    #[test]
    fn csv_has_one_row_per_breakpoint() {
        let csv = plateau(0.0, 1.0, 2.0).to_csv();
        assert_eq!(csv, "t,value\n0,2\n1,0\n");
    }
}
