//! Concentration-compactness in the range: trichotomy classification of a
//! single profile, greedy multi-bubble extraction, and bubble tracking along
//! a sequence.
//!
//! Mass thresholds are `eps * scale`, where the scale defaults to the total
//! mass of the profile being decomposed.

use serde::Serialize;

use crate::concentration::{ConcentrationProfile, LevyMax};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtractionParams {
    pub eps: f64,
    pub gap_delta: f64,
    pub ref_radius: f64,
    pub max_bubbles: usize,
    /// Mass that `eps` is relative to; `None` means the total mass of `f`.
    pub mass_scale: Option<f64>,
}

impl ExtractionParams {
    pub fn new(eps: f64, gap_delta: f64, ref_radius: f64) -> Self {
        Self {
            eps,
            gap_delta,
            ref_radius,
            max_bubbles: 64,
            mass_scale: None,
        }
    }

    pub fn with_max_bubbles(mut self, max_bubbles: usize) -> Self {
        self.max_bubbles = max_bubbles;
        self
    }

    pub fn with_mass_scale(mut self, scale: f64) -> Self {
        self.mass_scale = Some(scale);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid(
                "eps",
                format!("must lie in (0, 1), got {}", self.eps),
            ));
        }
        positive("gap_delta", self.gap_delta)?;
        positive("ref_radius", self.ref_radius)?;
        if let Some(s) = self.mass_scale {
            positive("mass_scale", s)?;
        }
        Ok(())
    }

    fn same_as(&self, other: &Self) -> bool {
        self.eps == other.eps
            && self.gap_delta == other.gap_delta
            && self.ref_radius == other.ref_radius
            && self.max_bubbles == other.max_bubbles
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive, got {x}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bubble {
    pub center: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub mass: f64,
    /// Mass on the two annuli between the inner and outer radius.
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleDecomposition {
    /// Descending mass order.
    pub bubbles: Vec<Bubble>,
    #[serde(skip)]
    pub remainder: ConcentrationProfile,
    pub remainder_mass: f64,
    pub total_mass: f64,
    pub vanishing_score: f64,
    pub vanishing_center: f64,
    pub mass_scale: f64,
    /// False when `max_bubbles` stopped the loop before weak vanishing.
    pub complete: bool,
    /// Whether `|a_i - a_j| >= R_i + R_j + gap_delta` holds for all pairs.
    pub separated: bool,
    pub params: ExtractionParams,
}

impl BubbleDecomposition {
    pub fn total_leakage(&self) -> f64 {
        self.bubbles.iter().map(|b| b.leakage).sum()
    }

    pub fn bubble_mass(&self) -> f64 {
        self.bubbles.iter().map(|b| b.mass).sum()
    }

    pub fn threshold(&self) -> f64 {
        self.params.eps * self.mass_scale
    }

    /// Bubbles sorted by increasing center.
    pub fn by_center(&self) -> Vec<Bubble> {
        let mut out = self.bubbles.clone();
        out.sort_by(|a, b| a.center.total_cmp(&b.center));
        out
    }
}

fn annulus(f: &ConcentrationProfile, center: f64, r: f64, delta: f64) -> f64 {
    f.integral(center - r - delta, center - r) + f.integral(center + r, center + r + delta)
}

/// Grow the radius from `ref_radius` in steps of `gap_delta` until the
/// annulus `(R, R + gap_delta)` on both sides carries at most `threshold`.
fn grow(
    f: &ConcentrationProfile,
    at: LevyMax,
    params: &ExtractionParams,
    threshold: f64,
) -> Bubble {
    let mut k = 0u32;
    loop {
        let r = params.ref_radius + f64::from(k) * params.gap_delta;
        let leak = annulus(f, at.center, r, params.gap_delta);
        if leak <= threshold {
            return Bubble {
                center: at.center,
                inner_radius: r,
                outer_radius: r + params.gap_delta,
                mass: f.window_mass(at.center, r),
                leakage: leak,
            };
        }
        k += 1;
    }
}

/// Iterated dichotomy: take the heaviest window at `ref_radius`, widen it
/// until its annulus is light, record it, zero it out, and repeat until the
/// remainder is weakly vanishing.
pub fn extract_bubbles(
    f: &ConcentrationProfile,
    params: &ExtractionParams,
) -> Result<BubbleDecomposition> {
    params.validate()?;
    let total = f.total_mass();
    let scale = params.mass_scale.unwrap_or(total);
    let threshold = params.eps * scale;
    let mut current = f.clone();
    let mut bubbles = Vec::new();
    let mut complete = true;
    loop {
        let at = current.levy_concentration(params.ref_radius);
        if at.mass <= threshold {
            break;
        }
        if bubbles.len() >= params.max_bubbles {
            complete = false;
            break;
        }
        let b = grow(&current, at, params, threshold);
        current = current.zeroed(b.center - b.outer_radius, b.center + b.outer_radius);
        bubbles.push(b);
    }
    let nonincreasing = bubbles
        .windows(2)
        .all(|w| w[1].mass <= w[0].mass * (1.0 + 1e-12));
    if !nonincreasing {
        bubbles.sort_by(|a, b| b.mass.total_cmp(&a.mass));
    }
    let separated = bubbles.iter().enumerate().all(|(i, a)| {
        bubbles[i + 1..].iter().all(|b| {
            (a.center - b.center).abs() >= a.inner_radius + b.inner_radius + params.gap_delta
        })
    });
    let score = current.levy_concentration(params.ref_radius);
    Ok(BubbleDecomposition {
        remainder_mass: current.total_mass(),
        remainder: current,
        bubbles,
        total_mass: total,
        vanishing_score: score.mass,
        vanishing_center: score.center,
        mass_scale: scale,
        complete,
        separated,
        params: *params,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TrichotomyKind {
    Compactness,
    Vanishing,
    Dichotomy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrichotomyVerdict {
    pub kind: TrichotomyKind,
    pub witness: Option<Bubble>,
    /// `(λ_1, λ - λ_1)` for a dichotomy.
    pub split_masses: Option<(f64, f64)>,
    pub levy: LevyMax,
    pub total_mass: f64,
}

/// Which of compactness, vanishing or dichotomy the profile exhibits at
/// tolerance `eps` (relative to the total mass).
pub fn classify(
    f: &ConcentrationProfile,
    eps: f64,
    ref_radius: f64,
    gap_delta: f64,
) -> Result<TrichotomyVerdict> {
    let params = ExtractionParams::new(eps, gap_delta, ref_radius);
    params.validate()?;
    let total = f.total_mass();
    let levy = f.levy_concentration(ref_radius);
    let verdict = |kind, witness, split_masses| TrichotomyVerdict {
        kind,
        witness,
        split_masses,
        levy,
        total_mass: total,
    };
    if total == 0.0 || levy.mass <= eps * total {
        return Ok(verdict(TrichotomyKind::Vanishing, None, None));
    }
    let grown = grow(f, levy, &params, eps * total);
    if levy.mass >= (1.0 - eps) * total || grown.mass >= (1.0 - eps) * total {
        return Ok(verdict(TrichotomyKind::Compactness, Some(grown), None));
    }
    Ok(verdict(
        TrichotomyKind::Dichotomy,
        Some(grown),
        Some((grown.mass, total - grown.mass)),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    Increasing,
    Bounded,
    Decreasing,
    Mixed,
}

/// Trend of a series: strictly monotone, constant, or neither.
pub fn trend(series: &[f64]) -> Trend {
    let scale = series.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-12 * scale;
    let steps: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    if steps.iter().all(|d| d.abs() <= tol) {
        Trend::Bounded
    } else if steps.iter().all(|&d| d > tol) {
        Trend::Increasing
    } else if steps.iter().all(|&d| d < -tol) {
        Trend::Decreasing
    } else {
        Trend::Mixed
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Track {
    pub rank: usize,
    pub centers: Vec<Option<f64>>,
    pub masses: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairSeparation {
    pub i: usize,
    pub j: usize,
    pub series: Vec<Option<f64>>,
    pub trend: Trend,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleTracks {
    pub tracks: Vec<Track>,
    pub separations: Vec<PairSeparation>,
}

/// Match bubbles across the sequence by mass rank; bubbles of equal mass are
/// assigned to the previous member's tracks by nearest center.
pub fn track_sequence(decomps: &[BubbleDecomposition]) -> Result<BubbleTracks> {
    let first = decomps
        .first()
        .ok_or(Error::Empty("decomposition sequence"))?;
    if let Some(d) = decomps.iter().find(|d| !d.params.same_as(&first.params)) {
        return Err(Error::InconsistentParams(format!(
            "{:?} vs {:?}",
            first.params, d.params
        )));
    }
    let count = decomps.iter().map(|d| d.bubbles.len()).max().unwrap_or(0);
    let mut tracks: Vec<Track> = (0..count)
        .map(|rank| Track {
            rank,
            centers: Vec::with_capacity(decomps.len()),
            masses: Vec::with_capacity(decomps.len()),
        })
        .collect();
    let mut previous: Vec<Option<f64>> = vec![None; count];
    for d in decomps {
        let assigned = assign(&d.bubbles, &previous);
        for (k, track) in tracks.iter_mut().enumerate() {
            let b = assigned.get(k).copied().flatten();
            track.centers.push(b.map(|b| b.center));
            track.masses.push(b.map(|b| b.mass));
            if let Some(b) = b {
                previous[k] = Some(b.center);
            }
        }
    }
    let mut separations = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            let series: Vec<Option<f64>> = tracks[i]
                .centers
                .iter()
                .zip(&tracks[j].centers)
                .map(|(a, b)| Some((a.as_ref()? - b.as_ref()?).abs()))
                .collect();
            let defined: Vec<f64> = series.iter().flatten().copied().collect();
            separations.push(PairSeparation {
                i,
                j,
                trend: trend(&defined),
                series,
            });
        }
    }
    Ok(BubbleTracks {
        tracks,
        separations,
    })
}

fn assign(bubbles: &[Bubble], previous: &[Option<f64>]) -> Vec<Option<Bubble>> {
    let mut out: Vec<Option<Bubble>> = bubbles.iter().copied().map(Some).collect();
    let mut start = 0;
    while start < bubbles.len() {
        let mass = bubbles[start].mass;
        let mut end = start + 1;
        while end < bubbles.len() && (bubbles[end].mass - mass).abs() <= 1e-9 * mass {
            end += 1;
        }
        // within a group of tied masses, slots with a known previous center
        // pick their nearest bubble first
        let mut pool: Vec<Bubble> = bubbles[start..end].to_vec();
        let mut slots: Vec<usize> = (start..end).collect();
        slots.sort_by_key(|&k| previous.get(k).copied().flatten().is_none());
        for k in slots {
            let pick = match previous.get(k).copied().flatten() {
                Some(c) => pool
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        (a.1.center - c)
                            .abs()
                            .total_cmp(&(b.1.center - c).abs())
                            .then(a.1.center.total_cmp(&b.1.center))
                    })
                    .map(|(i, _)| i)
                    .unwrap(),
                None => 0,
            };
            out[k] = Some(pool.remove(pick));
        }
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plateaus(parts: &[(f64, f64, f64)]) -> ConcentrationProfile {
        // zero gaps sit on [hi_k, lo_{k+1})
        let mut points = vec![parts[0].0];
        let mut values = Vec::new();
        for (k, &(lo, hi, v)) in parts.iter().enumerate() {
            if k > 0 {
                values.push(0.0);
                points.push(lo);
            }
            values.push(v);
            points.push(hi);
        }
        ConcentrationProfile::from_plateaus(points, values, 1.0).unwrap()
    }

    #[test]
    fn two_distant_plateaus_give_two_bubbles() {
        let f = plateaus(&[(0.0, 1.0, 1.0), (100.0, 101.0, 1.0)]);
        let d = extract_bubbles(&f, &ExtractionParams::new(0.1, 2.0, 1.0)).unwrap();
        assert_eq!(d.bubbles.len(), 2);
        assert_eq!(d.bubbles[0].mass, 1.0);
        assert_eq!(d.bubbles[1].mass, 1.0);
        assert_eq!(d.remainder_mass, 0.0);
        assert!(d.complete && d.separated);
        // equal masses: the smaller center is taken first
        assert_eq!(d.bubbles[0].center, 0.0);
    }

    #[test]
    fn max_bubbles_truncates() {
        let f = plateaus(&[(0.0, 1.0, 1.0), (100.0, 101.0, 1.0)]);
        let params = ExtractionParams::new(0.1, 2.0, 1.0).with_max_bubbles(1);
        let d = extract_bubbles(&f, &params).unwrap();
        assert_eq!(d.bubbles.len(), 1);
        assert!(!d.complete);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let f = plateaus(&[(0.0, 1.0, 1.0)]);
        assert!(extract_bubbles(&f, &ExtractionParams::new(1.0, 2.0, 1.0)).is_err());
        assert!(extract_bubbles(&f, &ExtractionParams::new(0.1, 0.0, 1.0)).is_err());
        assert!(classify(&f, 0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn classify_three_cases() {
        let single = plateaus(&[(0.0, 1.0, 1.0)]);
        assert_eq!(
            classify(&single, 0.1, 1.0, 2.0).unwrap().kind,
            TrichotomyKind::Compactness
        );
        let two = plateaus(&[(0.0, 1.0, 1.0), (100.0, 101.0, 1.0)]);
        let v = classify(&two, 0.1, 1.0, 2.0).unwrap();
        assert_eq!(v.kind, TrichotomyKind::Dichotomy);
        assert_eq!(v.split_masses, Some((1.0, 1.0)));
        // spread thin: every unit window holds 1/20 of the mass
        let flat = plateaus(&[(0.0, 40.0, 1.0)]);
        assert_eq!(
            classify(&flat, 0.1, 1.0, 2.0).unwrap().kind,
            TrichotomyKind::Vanishing
        );
        let zero = ConcentrationProfile::zero(1.0);
        assert_eq!(
            classify(&zero, 0.1, 1.0, 2.0).unwrap().kind,
            TrichotomyKind::Vanishing
        );
    }

    #[test]
    fn bookkeeping_and_idempotence() {
        let f = plateaus(&[(0.0, 1.0, 3.0), (1.5, 9.0, 0.1), (20.0, 22.0, 1.0)]);
        let params = ExtractionParams::new(0.05, 2.0, 1.0);
        let d = extract_bubbles(&f, &params).unwrap();
        let sum = d.bubble_mass() + d.remainder_mass + d.total_leakage();
        assert!((sum - f.total_mass()).abs() <= 1e-12 * f.total_mass());
        assert!(d.vanishing_score <= d.threshold());
        let again = extract_bubbles(&d.remainder, &params.with_mass_scale(d.mass_scale)).unwrap();
        assert!(again.bubbles.is_empty());
    }

    #[test]
    fn trend_verdicts() {
        assert_eq!(trend(&[5.0, 9.0, 17.0]), Trend::Increasing);
        assert_eq!(trend(&[3.0, 3.0]), Trend::Bounded);
        assert_eq!(trend(&[3.0, 2.0]), Trend::Decreasing);
        assert_eq!(trend(&[1.0, 3.0, 2.0]), Trend::Mixed);
    }

    #[test]
    fn tracks_follow_separating_bubbles() {
        let params = ExtractionParams::new(0.1, 2.0, 1.0);
        let decomps: Vec<_> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&n| {
                let f = plateaus(&[(-1.0, 1.0, 4.0), (n - 1.0, n + 1.0, 4.0)]);
                extract_bubbles(&f, &params).unwrap()
            })
            .collect();
        let t = track_sequence(&decomps).unwrap();
        assert_eq!(t.tracks.len(), 2);
        assert_eq!(
            t.separations[0].series,
            vec![Some(10.0), Some(100.0), Some(1000.0)]
        );
        assert_eq!(t.separations[0].trend, Trend::Increasing);
    }

    #[test]
    fn tracks_reject_mixed_params() {
        let f = plateaus(&[(0.0, 1.0, 1.0)]);
        let a = extract_bubbles(&f, &ExtractionParams::new(0.1, 2.0, 1.0)).unwrap();
        let b = extract_bubbles(&f, &ExtractionParams::new(0.2, 2.0, 1.0)).unwrap();
        assert!(matches!(
            track_sequence(&[a, b]),
            Err(Error::InconsistentParams(_))
        ));
        assert!(track_sequence(&[]).is_err());
    }
}
