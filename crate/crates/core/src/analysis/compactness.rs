//! Whole-sequence report: the per-member pipeline (datum reduction,
//! profile, bubbles, radii, partition, renormalization) on every `eps` of a
//! ladder, followed by the cross-member checks of the five compactness
//! conclusions.

use serde::Serialize;

use crate::analysis::slicing::{lsc_report, SliceLscReport};
use crate::analysis::vanishing::{vanishing_certificate, VanishingCertificate};
use crate::bubbles::{
    extract_bubbles, track_sequence, trend, BubbleDecomposition, BubbleTracks, ExtractionParams,
    Trend,
};
use crate::concentration::concentration_profile;
use crate::error::{invalid, Error, Result};
use crate::grid::{energy, kyfan_distance, CellSet, EnergyReport, GridFunction};
use crate::partition::{
    build_partition, cell_values, reduce_by_datum, renormalize, select_radii, PartitionStats,
    RadiusChoice, RadiusParams, Renormalized,
};
use crate::report::{failures, Inequality};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceParams {
    pub p: f64,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    pub window: f64,
    pub ref_radius: f64,
    pub gap_delta: f64,
    pub base_radius: f64,
    pub radius_width: f64,
    pub symmetric: bool,
    pub max_bubbles: usize,
}

impl Default for SequenceParams {
    fn default() -> Self {
        Self {
            p: 2.0,
            eps: vec![0.1],
            window: 1.0,
            ref_radius: 1.0,
            gap_delta: 2.0,
            base_radius: 0.0,
            radius_width: 1.0,
            symmetric: true,
            max_bubbles: 64,
        }
    }
}

impl SequenceParams {
    fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::Empty("eps ladder"));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("eps", "ladder must be strictly decreasing"));
        }
        Ok(())
    }

    fn extraction(&self, eps: f64) -> ExtractionParams {
        ExtractionParams::new(eps, self.gap_delta, self.ref_radius)
            .with_max_bubbles(self.max_bubbles)
    }

    fn radius(&self) -> RadiusParams {
        RadiusParams {
            base_radius: self.base_radius,
            width: self.radius_width,
            window: self.window,
            symmetric: self.symmetric,
        }
    }
}

/// Pipeline output for one member at one `eps`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberReport {
    pub index: usize,
    pub decomposition: BubbleDecomposition,
    pub radii: Vec<RadiusChoice>,
    pub datum_piece: Option<usize>,
    pub partition: PartitionStats,
    pub renormalized: Renormalized,
    pub v_eps_cells: usize,
    /// Certificate for `V_eps` at its own measured weak-vanishing score.
    pub certificate: Option<VanishingCertificate>,
    #[serde(skip)]
    v_eps: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conclusion {
    pub pass: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceBlock {
    /// Ky Fan distances between consecutive renormalized members.
    pub consecutive: Vec<f64>,
    /// Ky Fan distances to the candidate limit, when one is given.
    pub to_limit: Option<Vec<f64>>,
    pub conclusion: Conclusion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientBlock {
    /// `‖∇u_n‖_p` of the members.
    pub norms: Vec<f64>,
    /// `‖∇u_{ε,n}‖_p` of the renormalized members.
    pub renormalized_norms: Vec<f64>,
    /// Pairings of the renormalized gradients with block indicator fields,
    /// one series per field.
    pub pairings: Vec<Vec<f64>>,
    pub max_consecutive_pairing_change: Vec<f64>,
    pub conclusion: Conclusion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmallSetsBlock {
    pub partition_outside_jump: Vec<f64>,
    pub outside_jump_trend: Trend,
    pub v_eps_volume: Vec<f64>,
    pub v_eps_trend: Trend,
    pub conclusion: Conclusion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationBlock {
    pub tracks: BubbleTracks,
    pub conclusion: Conclusion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsReport {
    pub eps: f64,
    pub members: Vec<MemberReport>,
    pub conclusion_1: ConvergenceBlock,
    pub conclusion_2: GradientBlock,
    pub conclusion_3: SliceLscReport,
    pub conclusion_4: SmallSetsBlock,
    pub conclusion_5: SeparationBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NestedCheck {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    pub index: usize,
    /// `V_{eps_fine} ⊆ V_{eps_coarse}` cell-wise.
    pub nested: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceReport {
    pub params: SequenceParams,
    pub energies: Vec<EnergyReport>,
    pub ladder: Vec<EpsReport>,
    pub nested: Vec<NestedCheck>,
    pub violations: Vec<String>,
    pub pass: bool,
}

fn member(
    index: usize,
    v: &GridFunction,
    domain: Option<&CellSet>,
    eps: f64,
    params: &SequenceParams,
) -> Result<MemberReport> {
    let f = concentration_profile(v, None, params.window)?;
    let decomposition = extract_bubbles(&f, &params.extraction(eps))?;
    let radii = select_radii(&f, &decomposition, &params.radius(), &cell_values(v))?;
    let part = build_partition(v, &radii, params.window, domain)?;
    let renormalized = renormalize(v, &part, None)?;
    let region = part.v_eps(v);
    let certificate = if v.geom().dim() == 2 {
        let restricted = concentration_profile(v, Some(&region), params.window)?;
        let score = restricted.levy_concentration(params.ref_radius).mass;
        // an empty region has a zero profile; any tolerance certifies it
        let eps_cert = if score > 0.0 { score } else { 1.0 };
        Some(vanishing_certificate(
            v,
            &region,
            eps_cert,
            params.ref_radius,
            params.window,
        )?)
    } else {
        None
    };
    Ok(MemberReport {
        index,
        decomposition,
        radii,
        datum_piece: part.datum_piece,
        v_eps_cells: region.count(),
        v_eps: region.mask().to_vec(),
        partition: part.stats,
        renormalized,
        certificate,
    })
}

/// Gradient of `u` paired with the indicator of each half-box block, one
/// field per (axis, block).
fn block_pairings(u: &GridFunction) -> Vec<f64> {
    let geom = u.geom();
    let dim = geom.dim();
    let blocks = 1usize << dim;
    let block_of = |cell: usize| {
        let c = geom.coords(cell);
        (0..dim).fold(0, |acc, k| {
            acc * 2 + usize::from(2 * c[k] >= geom.shape()[k])
        })
    };
    let h = geom.spacing();
    let mut out = vec![0.0; dim * blocks];
    for f in geom.interior_faces() {
        if u.is_crack(f) {
            continue;
        }
        let b = block_of(f.lo);
        if b == block_of(f.hi) {
            out[f.axis * blocks + b] += (u.value(f.hi) - u.value(f.lo)) / h * geom.cell_volume();
        }
    }
    out
}

fn nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15)
}

/// Run the pipeline on every member and every `eps`, then check the
/// compactness conclusions across the sequence.
pub fn compactness_report(
    seq: &[GridFunction],
    datum: Option<&GridFunction>,
    domain: Option<&CellSet>,
    limit: Option<&GridFunction>,
    params: &SequenceParams,
) -> Result<SequenceReport> {
    params.validate()?;
    let first = seq.first().ok_or(Error::Empty("sequence"))?;
    for u in seq {
        first.geom().check_same(u.geom(), "sequence members")?;
    }
    if let Some(l) = limit {
        first.geom().check_same(l.geom(), "sequence and limit")?;
    }
    let energies = seq
        .iter()
        .map(|u| energy(u, params.p))
        .collect::<Result<Vec<_>>>()?;
    let reduced: Vec<GridFunction> = match datum {
        Some(h) => seq
            .iter()
            .map(|u| reduce_by_datum(u, h, domain))
            .collect::<Result<_>>()?,
        None => seq.to_vec(),
    };

    let mut violations = Vec::new();
    let mut ladder = Vec::new();
    for &eps in &params.eps {
        let members = reduced
            .iter()
            .enumerate()
            .map(|(i, v)| member(i, v, domain, eps, params))
            .collect::<Result<Vec<_>>>()?;
        for m in &members {
            let tag = |s: String| format!("eps={eps} member {}: {s}", m.index);
            violations.extend(failures(&m.partition.checks).into_iter().map(tag));
            violations.extend(failures(&m.renormalized.checks).into_iter().map(tag));
            if let Some(c) = &m.certificate {
                violations.extend(failures(&c.checks).into_iter().map(tag));
            }
        }
        let renorm: Vec<&GridFunction> = members.iter().map(|m| &m.renormalized.function).collect();

        let consecutive = renorm
            .windows(2)
            .map(|w| kyfan_distance(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        let to_limit = limit
            .map(|l| {
                renorm
                    .iter()
                    .map(|w| kyfan_distance(w, l))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let c1_series = to_limit.as_ref().unwrap_or(&consecutive);
        let conclusion_1 = ConvergenceBlock {
            conclusion: Conclusion {
                pass: nonincreasing(c1_series),
                note: "Ky Fan distances nonincreasing along the sequence".into(),
            },
            consecutive,
            to_limit,
        };

        let norms: Vec<f64> = energies
            .iter()
            .map(|e| e.bulk.powf(1.0 / params.p))
            .collect();
        let renormalized_norms = renorm
            .iter()
            .map(|w| energy(w, params.p).map(|e| e.bulk.powf(1.0 / params.p)))
            .collect::<Result<Vec<_>>>()?;
        let per_member: Vec<Vec<f64>> = renorm.iter().map(|w| block_pairings(w)).collect();
        let fields = per_member.first().map_or(0, Vec::len);
        let pairings: Vec<Vec<f64>> = (0..fields)
            .map(|k| per_member.iter().map(|p| p[k]).collect())
            .collect();
        let max_consecutive_pairing_change = pairings
            .iter()
            .map(|s| {
                s.windows(2)
                    .map(|w| (w[1] - w[0]).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let conclusion_2 = GradientBlock {
            conclusion: Conclusion {
                pass: norms
                    .iter()
                    .chain(&renormalized_norms)
                    .all(|x| x.is_finite()),
                note:
                    "uniform L^p gradient bound; pairings are a finite proxy for weak convergence"
                        .into(),
            },
            norms,
            renormalized_norms,
            pairings,
            max_consecutive_pairing_change,
        };

        let lsc_limit = match limit {
            Some(l) => l.clone(),
            None => renorm.last().copied().cloned().expect("nonempty sequence"),
        };
        let conclusion_3 = lsc_report(&reduced, &lsc_limit, None)?;

        let outside: Vec<f64> = members
            .iter()
            .map(|m| m.partition.partition_outside_jump)
            .collect();
        let volumes: Vec<f64> = members.iter().map(|m| m.partition.v_eps_volume).collect();
        let small_ok = |xs: &[f64]| xs.last() <= xs.first();
        let conclusion_4 = SmallSetsBlock {
            outside_jump_trend: trend(&outside),
            v_eps_trend: trend(&volumes),
            conclusion: Conclusion {
                pass: small_ok(&outside) && small_ok(&volumes),
                note: "outside-jump boundary and V_eps volume do not grow along the sequence"
                    .into(),
            },
            partition_outside_jump: outside,
            v_eps_volume: volumes,
        };

        let decomps: Vec<BubbleDecomposition> =
            members.iter().map(|m| m.decomposition.clone()).collect();
        let tracks = track_sequence(&decomps)?;
        let conclusion_5 = SeparationBlock {
            conclusion: Conclusion {
                pass: tracks
                    .separations
                    .iter()
                    .all(|s| s.trend != Trend::Decreasing),
                note: "no pair of bubble tracks approaches".into(),
            },
            tracks,
        };

        for (name, c) in [
            ("conclusion 1", &conclusion_1.conclusion),
            ("conclusion 2", &conclusion_2.conclusion),
            ("conclusion 4", &conclusion_4.conclusion),
            ("conclusion 5", &conclusion_5.conclusion),
        ] {
            if !c.pass {
                violations.push(format!("eps={eps}: {name} failed: {}", c.note));
            }
        }
        if !conclusion_3.holds {
            violations.push(format!(
                "eps={eps}: conclusion 3 failed: negative jump LSC margin"
            ));
        }
        ladder.push(EpsReport {
            eps,
            members,
            conclusion_1,
            conclusion_2,
            conclusion_3,
            conclusion_4,
            conclusion_5,
        });
    }

    let mut nested = Vec::new();
    for pair in ladder.windows(2) {
        for (coarse, fine) in pair[0].members.iter().zip(&pair[1].members) {
            nested.push(NestedCheck {
                eps_coarse: pair[0].eps,
                eps_fine: pair[1].eps,
                index: coarse.index,
                nested: fine.v_eps.iter().zip(&coarse.v_eps).all(|(&f, &c)| !f || c),
            });
        }
    }
    let pass = violations.is_empty();
    Ok(SequenceReport {
        params: params.clone(),
        energies,
        ladder,
        nested,
        violations,
        pass,
    })
}

/// Inequalities of a report that failed, flattened.
pub fn report_checks(report: &SequenceReport) -> Vec<&Inequality> {
    report
        .ladder
        .iter()
        .flat_map(|l| l.members.iter())
        .flat_map(|m| {
            m.partition
                .checks
                .iter()
                .chain(&m.renormalized.checks)
                .chain(m.certificate.iter().flat_map(|c| c.checks.iter()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{runaway, staircase};

    #[test]
    fn runaway_sequence() {
        let seq: Vec<_> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&n| runaway(n, 8).unwrap())
            .collect();
        let limit = GridFunction::constant(seq[0].geom().clone(), 0.0).unwrap();
        let r =
            compactness_report(&seq, None, None, Some(&limit), &SequenceParams::default()).unwrap();
        assert!(r.pass, "{:?}", r.violations);
        let l = &r.ladder[0];
        assert_eq!(l.conclusion_1.to_limit, Some(vec![0.0, 0.0, 0.0]));
        assert_eq!(l.conclusion_3.margin, 1.0);
        assert_eq!(l.conclusion_4.v_eps_volume, vec![0.0; 3]);
        assert_eq!(
            l.conclusion_5.tracks.separations[0].series,
            vec![Some(10.0), Some(100.0), Some(1000.0)]
        );
    }

    #[test]
    fn staircase_sequence_on_common_grid() {
        let seq: Vec<_> = [4, 16, 64]
            .iter()
            .map(|&n| staircase(n, 64 / n).unwrap())
            .collect();
        let params = SequenceParams {
            eps: vec![0.2],
            ..SequenceParams::default()
        };
        let r = compactness_report(&seq, None, None, None, &params).unwrap();
        assert!(r.pass, "{:?}", r.violations);
        let v = &r.ladder[0].conclusion_4.v_eps_volume;
        for (vol, n) in v.iter().zip([4.0, 16.0, 64.0]) {
            assert!((vol - 1.0 / n).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_sequence() {
        let u = staircase(4, 1).unwrap();
        let seq = vec![u.clone(), u.clone()];
        let r = compactness_report(&seq, None, None, Some(&u), &SequenceParams::default()).unwrap();
        assert_eq!(r.ladder[0].conclusion_3.margin, 0.0);
        assert!(r.ladder[0]
            .conclusion_3
            .axes
            .iter()
            .all(|a| a.margin == 0.0));
        assert_eq!(r.ladder[0].conclusion_1.consecutive, vec![0.0]);
    }

    #[test]
    fn ladder_must_decrease() {
        let u = runaway(1.0, 4).unwrap();
        let params = SequenceParams {
            eps: vec![0.1, 0.2],
            ..SequenceParams::default()
        };
        assert!(compactness_report(&[u], None, None, None, &params).is_err());
    }
}
