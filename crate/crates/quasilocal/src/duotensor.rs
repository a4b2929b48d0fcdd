//! Fiducial frames and the change of coordinates between GPT maps and
//! (quasi)stochastic matrices.
//!
//! A fiducial frame for a system pairs a finite set of normalized states
//! (prep, stored as columns) with a measurement (meas, stored as rows, the
//! effects summing to discard). Sending every fiducial state through a
//! channel and measuring with the fiducial measurement yields a conditional
//! probability table; the hopping metric `h = meas · prep` and its inverse
//! undo the double counting so the passage is exactly invertible.

use crate::error::{Error, Result};
use crate::model::{GptSystem, PartitionedMap, Party};
use crate::numerics::matrix::{dot, RealMatrix};

/// A fiducial frame: `prep` is `dim × n` with normalized-state columns,
/// `meas` is `n × dim` with effect rows summing to the discard.
#[derive(Debug, Clone)]
pub struct FiducialFrame {
    system: GptSystem,
    prep: RealMatrix,
    meas: RealMatrix,
}

/// One validated frame invariant.
#[derive(Debug, Clone)]
pub struct FrameCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Worst-case slack for the invariant (deviation for equalities,
    /// violation for memberships, reciprocal condition number for
    /// invertibility).
    pub value: f64,
}

/// Outcome of validating a frame invariant by invariant.
#[derive(Debug, Clone)]
pub struct FrameReport {
    pub checks: Vec<FrameCheck>,
    pub pass: bool,
}

impl FrameReport {
    fn failing(&self) -> Option<&FrameCheck> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// Checks every frame invariant and reports each one separately: columns of
/// `prep` are normalized states, rows of `meas` are effects summing to the
/// discard, and the hopping metric is invertible.
pub fn validate_frame(
    system: &GptSystem,
    prep: &RealMatrix,
    meas: &RealMatrix,
) -> Result<FrameReport> {
    let dim = system.dim();
    if prep.rows() != dim || meas.cols() != dim || prep.cols() != meas.rows() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "frame for {}: prep {}x{}, meas {}x{}",
                system.name(),
                prep.rows(),
                prep.cols(),
                meas.rows(),
                meas.cols()
            ),
        });
    }
    let n = prep.cols();
    let mut checks = Vec::new();

    let mut norm_dev = 0.0f64;
    let mut state_violation = 0.0f64;
    for j in 0..n {
        let col = prep.col(j);
        norm_dev = norm_dev.max((dot(system.discard(), &col) - 1.0).abs());
        state_violation =
            state_violation.max(system.state_cone().membership_violation(&col, 0.0)?);
    }
    checks.push(FrameCheck {
        name: "states normalized",
        pass: norm_dev <= crate::TOL_ALGEBRAIC,
        value: norm_dev,
    });
    checks.push(FrameCheck {
        name: "states in cone",
        pass: state_violation <= crate::TOL_LP,
        value: state_violation,
    });

    let mut effect_violation = 0.0f64;
    let mut sum = vec![0.0; dim];
    for i in 0..n {
        let row = meas.row(i).to_vec();
        effect_violation =
            effect_violation.max(system.effect_cone().membership_violation(&row, 0.0)?);
        for (s, &x) in sum.iter_mut().zip(&row) {
            *s += x;
        }
    }
    checks.push(FrameCheck {
        name: "effects in cone",
        pass: effect_violation <= crate::TOL_LP,
        value: effect_violation,
    });
    let sum_dev = sum
        .iter()
        .zip(system.discard())
        .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
    checks.push(FrameCheck {
        name: "effects sum to discard",
        pass: sum_dev <= crate::TOL_ALGEBRAIC,
        value: sum_dev,
    });

    let h = meas.matmul(prep)?;
    let rcond = match h.lu_inverse() {
        Ok((_, rcond)) => rcond,
        Err(Error::SingularMatrix { rcond }) => rcond,
        Err(e) => return Err(e),
    };
    checks.push(FrameCheck {
        name: "metric invertible",
        pass: rcond >= crate::RCOND_MIN,
        value: rcond,
    });

    let pass = checks.iter().all(|c| c.pass);
    Ok(FrameReport { checks, pass })
}

impl FiducialFrame {
    /// Validates all frame invariants; the first failing one is reported in
    /// the error.
    pub fn new(system: GptSystem, prep: RealMatrix, meas: RealMatrix) -> Result<Self> {
        let report = validate_frame(&system, &prep, &meas)?;
        if let Some(check) = report.failing() {
            return Err(Error::InvalidFrame {
                context: format!(
                    "frame for {}: {} (value {:.3e})",
                    system.name(),
                    check.name,
                    check.value
                ),
            });
        }
        Ok(Self { system, prep, meas })
    }

    pub fn system(&self) -> &GptSystem {
        &self.system
    }

    pub fn prep(&self) -> &RealMatrix {
        &self.prep
    }

    pub fn meas(&self) -> &RealMatrix {
        &self.meas
    }

    /// Number of fiducial states (= number of fiducial effects).
    pub fn size(&self) -> usize {
        self.prep.cols()
    }

    /// Tensor frame for the composite system: Kronecker products of
    /// preparations and measurements, first factor most significant.
    pub fn composite(frames: &[&FiducialFrame]) -> Result<FiducialFrame> {
        if frames.is_empty() {
            return Err(Error::ShapeMismatch {
                context: "composite of zero frames".into(),
            });
        }
        if frames.len() == 1 {
            return Ok(frames[0].clone());
        }
        let system =
            GptSystem::composite(&frames.iter().map(|f| f.system()).collect::<Vec<_>>())?;
        let mut prep = frames[0].prep.clone();
        let mut meas = frames[0].meas.clone();
        for f in &frames[1..] {
            prep = prep.kron(&f.prep);
            meas = meas.kron(&f.meas);
        }
        FiducialFrame::new(system, prep, meas)
    }
}

/// The frame's Gram-like matrix `h = meas · prep` together with its inverse.
/// `h` is column-stochastic; the columns of `h⁻¹` sum to 1.
#[derive(Debug, Clone)]
pub struct HoppingMetric {
    pub h: RealMatrix,
    pub h_inv: RealMatrix,
    pub rcond: f64,
}

/// Computes the hopping metric, failing with `SingularFrame` when it is not
/// invertible to working precision.
pub fn hopping_metric(frame: &FiducialFrame) -> Result<HoppingMetric> {
    let h = frame.meas().matmul(frame.prep())?;
    let (h_inv, rcond) = match h.lu_inverse() {
        Ok(pair) => pair,
        Err(Error::SingularMatrix { rcond }) => return Err(Error::SingularFrame { rcond }),
        Err(e) => return Err(e),
    };
    if rcond < crate::RCOND_MIN {
        return Err(Error::SingularFrame { rcond });
    }
    Ok(HoppingMetric { h, h_inv, rcond })
}

/// A real matrix with unit column sums. `stochastic` records whether all
/// entries are nonnegative (up to a −1e-12 floor); quasi-stochastic matrices
/// may carry genuinely negative entries.
#[derive(Debug, Clone)]
pub struct QuasiStochasticMatrix {
    matrix: RealMatrix,
    stochastic: bool,
}

impl QuasiStochasticMatrix {
    /// Requires every column to sum to 1 within the algebraic tolerance.
    pub fn new(matrix: RealMatrix) -> Result<Self> {
        let deviation = matrix
            .column_sums()
            .iter()
            .fold(0.0f64, |m, &s| m.max((s - 1.0).abs()));
        if deviation > crate::TOL_ALGEBRAIC {
            return Err(Error::NotDiscardPreserving { deviation });
        }
        let stochastic = matrix.entries().iter().all(|&x| x >= -1e-12);
        Ok(Self { matrix, stochastic })
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }
}

fn check_frames_match(
    frames: &[&FiducialFrame],
    systems: &[GptSystem],
    side: &str,
) -> Result<()> {
    if frames.len() != systems.len() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "{side}: {} frames for {} wires",
                frames.len(),
                systems.len()
            ),
        });
    }
    for (f, s) in frames.iter().zip(systems) {
        if f.system().dim() != s.dim() || f.system().name() != s.name() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "{side}: frame for system {} used on wire of system {}",
                    f.system().name(),
                    s.name()
                ),
            });
        }
    }
    Ok(())
}

fn kron_preps(frames: &[&FiducialFrame]) -> RealMatrix {
    let mut out = RealMatrix::identity(1);
    for f in frames {
        out = out.kron(f.prep());
    }
    out
}

fn kron_meas(frames: &[&FiducialFrame]) -> RealMatrix {
    let mut out = RealMatrix::identity(1);
    for f in frames {
        out = out.kron(f.meas());
    }
    out
}

/// Conditional probability table of a channel with respect to fiducial
/// frames on every wire: measure each output wire with its fiducial
/// measurement after feeding each joint fiducial input state.
///
/// Joint row index runs over output fiducial labels and joint column index
/// over input labels, wire 0 most significant. Fails with
/// `NotDiscardPreserving` when the map is not a channel, since exactly then
/// the table's columns stop summing to 1.
pub fn to_stochastic(
    map: &PartitionedMap,
    in_frames: &[&FiducialFrame],
    out_frames: &[&FiducialFrame],
) -> Result<QuasiStochasticMatrix> {
    check_frames_match(in_frames, map.in_systems(), "input")?;
    check_frames_match(out_frames, map.out_systems(), "output")?;
    let table = kron_meas(out_frames)
        .matmul(map.matrix())?
        .matmul(&kron_preps(in_frames))?;
    QuasiStochasticMatrix::new(table)
}

/// Inverse of [`to_stochastic`]: rebuilds the GPT map whose probability table
/// is `q`, by hopping through the metric inverses on both sides. Party `i`
/// of the returned map owns input wire `i` and output wire `i`.
pub fn to_gpt(
    q: &QuasiStochasticMatrix,
    in_frames: &[&FiducialFrame],
    out_frames: &[&FiducialFrame],
) -> Result<PartitionedMap> {
    if in_frames.len() != out_frames.len() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "{} input frames, {} output frames: one party owns one wire on each side",
                in_frames.len(),
                out_frames.len()
            ),
        });
    }
    let n_in: usize = in_frames.iter().map(|f| f.size()).product();
    let n_out: usize = out_frames.iter().map(|f| f.size()).product();
    if q.matrix().rows() != n_out || q.matrix().cols() != n_in {
        return Err(Error::ShapeMismatch {
            context: format!(
                "table is {}x{}, frames require {}x{}",
                q.matrix().rows(),
                q.matrix().cols(),
                n_out,
                n_in
            ),
        });
    }
    let mut h_inv_out = RealMatrix::identity(1);
    for f in out_frames {
        h_inv_out = h_inv_out.kron(&hopping_metric(f)?.h_inv);
    }
    let mut h_inv_in = RealMatrix::identity(1);
    for f in in_frames {
        h_inv_in = h_inv_in.kron(&hopping_metric(f)?.h_inv);
    }
    let matrix = kron_preps(out_frames)
        .matmul(&h_inv_out)?
        .matmul(q.matrix())?
        .matmul(&h_inv_in)?
        .matmul(&kron_meas(in_frames))?;
    let parties = (0..in_frames.len())
        .map(|i| Party {
            in_wires: vec![i],
            out_wires: vec![i],
        })
        .collect();
    PartitionedMap::new(
        in_frames.iter().map(|f| f.system().clone()).collect(),
        out_frames.iter().map(|f| f.system().clone()).collect(),
        parties,
        matrix,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::cone::ConeDescription;

    fn classical(d: usize) -> GptSystem {
        let gens: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        GptSystem::new(
            format!("test-classical:{d}"),
            d,
            ConeDescription::polyhedral(d, gens.clone()).unwrap(),
            ConeDescription::polyhedral(d, gens).unwrap(),
            vec![1.0; d],
        )
        .unwrap()
    }

    fn classical_frame(d: usize) -> FiducialFrame {
        FiducialFrame::new(classical(d), RealMatrix::identity(d), RealMatrix::identity(d))
            .unwrap()
    }

    fn square_system() -> GptSystem {
        let state_gens = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, 1.0, -1.0],
            vec![1.0, -1.0, 1.0],
            vec![1.0, -1.0, -1.0],
        ];
        let effect_gens = vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, -0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.5, 0.0, -0.5],
        ];
        GptSystem::new(
            "test-square",
            3,
            ConeDescription::polyhedral(3, state_gens).unwrap(),
            ConeDescription::polyhedral(3, effect_gens).unwrap(),
            vec![1.0, 0.0, 0.0],
        )
        .unwrap()
    }

    fn square_frame() -> FiducialFrame {
        let prep = RealMatrix::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, 0.0],
            vec![1.0, 1.0, -1.0],
        ])
        .unwrap();
        let meas = RealMatrix::from_rows(&[
            vec![0.25, 0.25, 0.0],
            vec![0.5, -0.25, 0.25],
            vec![0.25, 0.0, -0.25],
        ])
        .unwrap();
        FiducialFrame::new(square_system(), prep, meas).unwrap()
    }

    #[test]
    fn classical_metric_is_identity_and_round_trip_is_exact() {
        let frame = classical_frame(3);
        let metric = hopping_metric(&frame).unwrap();
        assert!(metric.h.max_abs_diff(&RealMatrix::identity(3)).unwrap() < 1e-15);
        let s = RealMatrix::from_rows(&[
            vec![0.2, 0.5, 0.1],
            vec![0.3, 0.25, 0.4],
            vec![0.5, 0.25, 0.5],
        ])
        .unwrap();
        let map =
            PartitionedMap::single_party(classical(3), classical(3), s.clone()).unwrap();
        let table = to_stochastic(&map, &[&frame], &[&frame]).unwrap();
        assert!(table.is_stochastic());
        assert!(table.matrix().max_abs_diff(&s).unwrap() < 1e-14);
        let back = to_gpt(&table, &[&frame], &[&frame]).unwrap();
        assert!(back.matrix().max_abs_diff(&s).unwrap() < 1e-12);
    }

    #[test]
    fn square_metric_matches_hand_computation() {
        // meas · prep with the fixture frame, computed by hand.
        let frame = square_frame();
        let metric = hopping_metric(&frame).unwrap();
        let expected_h = RealMatrix::from_rows(&[
            vec![0.5, 0.0, 0.25],
            vec![0.5, 1.0, 0.25],
            vec![0.0, 0.0, 0.5],
        ])
        .unwrap();
        assert!(metric.h.max_abs_diff(&expected_h).unwrap() < 1e-12);
        let expected_inv = RealMatrix::from_rows(&[
            vec![2.0, 0.0, -1.0],
            vec![-1.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        assert!(metric.h_inv.max_abs_diff(&expected_inv).unwrap() < 1e-12);
        // Column sums: h stochastic, h⁻¹ columns sum to 1.
        for s in metric.h.column_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        for s in metric.h_inv.column_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_round_trip_recovers_channel() {
        let frame = square_frame();
        // prep · S · meas is a channel for any stochastic S.
        let s = RealMatrix::from_rows(&[
            vec![0.6, 0.1, 0.3],
            vec![0.3, 0.7, 0.3],
            vec![0.1, 0.2, 0.4],
        ])
        .unwrap();
        let c = frame.prep().matmul(&s).unwrap().matmul(frame.meas()).unwrap();
        let map = PartitionedMap::single_party(square_system(), square_system(), c.clone())
            .unwrap();
        let table = to_stochastic(&map, &[&frame], &[&frame]).unwrap();
        let back = to_gpt(&table, &[&frame], &[&frame]).unwrap();
        assert!(back.matrix().max_abs_diff(&c).unwrap() < 1e-12);
    }

    #[test]
    fn composite_round_trip() {
        let f = square_frame();
        let g = classical_frame(2);
        let s1 = RealMatrix::from_rows(&[
            vec![0.6, 0.1, 0.3],
            vec![0.3, 0.7, 0.3],
            vec![0.1, 0.2, 0.4],
        ])
        .unwrap();
        let c1 = f.prep().matmul(&s1).unwrap().matmul(f.meas()).unwrap();
        let c2 = RealMatrix::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap();
        let joint = c1.kron(&c2);
        let map = PartitionedMap::new(
            vec![square_system(), classical(2)],
            vec![square_system(), classical(2)],
            vec![
                Party {
                    in_wires: vec![0],
                    out_wires: vec![0],
                },
                Party {
                    in_wires: vec![1],
                    out_wires: vec![1],
                },
            ],
            joint.clone(),
        )
        .unwrap();
        let table = to_stochastic(&map, &[&f, &g], &[&f, &g]).unwrap();
        assert_eq!(table.matrix().rows(), 6);
        let back = to_gpt(&table, &[&f, &g], &[&f, &g]).unwrap();
        assert!(back.matrix().max_abs_diff(&joint).unwrap() < 1e-12);
        assert_eq!(back.party_count(), 2);
    }

    #[test]
    fn non_channel_input_is_rejected() {
        let frame = classical_frame(2);
        let leaky = PartitionedMap::single_party(
            classical(2),
            classical(2),
            RealMatrix::from_rows(&[vec![0.3, 0.5], vec![0.2, 0.1]]).unwrap(),
        )
        .unwrap();
        let err = to_stochastic(&leaky, &[&frame], &[&frame]).unwrap_err();
        assert!(matches!(err, Error::NotDiscardPreserving { .. }));
    }

    #[test]
    fn invalid_frames_are_rejected_with_the_failing_invariant() {
        // Effects scaled away from discard.
        let prep = RealMatrix::identity(2);
        let meas = RealMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let err = FiducialFrame::new(classical(2), prep, meas).unwrap_err();
        match err {
            Error::InvalidFrame { context } => {
                assert!(context.contains("effects sum to discard"), "{context}")
            }
            other => panic!("unexpected error {other:?}"),
        }
        // Repeated state makes the metric singular.
        let prep = RealMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let meas = RealMatrix::identity(2);
        let err = FiducialFrame::new(classical(2), prep, meas).unwrap_err();
        match err {
            Error::InvalidFrame { context } => {
                assert!(context.contains("metric invertible"), "{context}")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn report_lists_every_invariant() {
        let frame = classical_frame(2);
        let report =
            validate_frame(frame.system(), frame.prep(), frame.meas()).unwrap();
        assert!(report.pass);
        let names: Vec<_> = report.checks.iter().map(|c| c.name).collect();
        assert_eq!(
            names,
            vec![
                "states normalized",
                "states in cone",
                "effects in cone",
                "effects sum to discard",
                "metric invertible"
            ]
        );
    }

    #[test]
    fn quasi_stochastic_flags_negative_entries() {
        let q = QuasiStochasticMatrix::new(
            RealMatrix::from_rows(&[vec![1.5, 0.5], vec![-0.5, 0.5]]).unwrap(),
        )
        .unwrap();
        assert!(!q.is_stochastic());
        let bad = QuasiStochasticMatrix::new(
            RealMatrix::from_rows(&[vec![0.5, 0.5], vec![0.4, 0.5]]).unwrap(),
        );
        assert!(matches!(bad, Err(Error::NotDiscardPreserving { .. })));
    }
}
