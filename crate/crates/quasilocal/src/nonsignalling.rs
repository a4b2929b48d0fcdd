//! Non-signalling structure of multipartite channels.
//!
//! A channel is non-signalling when no party can learn another party's input
//! choice from its own share of the output. Operationally: discard party
//! `i`'s outputs, and the rest must not depend on party `i`'s input. The
//! check runs either on probability tables (label marginals) or directly on
//! GPT channels (discard composition plus fiducial input sweeps); both see
//! the same marginal object, so their verdicts agree.

use crate::duotensor::FiducialFrame;
use crate::error::{Error, Result};
use crate::model::{is_discard_preserving, PartitionedMap};
use crate::numerics::matrix::RealMatrix;
use crate::numerics::tensor::{joint_index, split_index};

/// Per-party signalling violations at a given tolerance.
#[derive(Debug, Clone)]
pub struct NsReport {
    /// `violation[i]` bounds how much the other parties' outputs move when
    /// only party `i`'s input changes (∞-norm over output coordinates,
    /// maximum over input pairs).
    pub per_party_violation: Vec<f64>,
    pub is_ns: bool,
    pub tolerance: f64,
}

impl NsReport {
    fn from_violations(per_party_violation: Vec<f64>, tolerance: f64) -> Self {
        let is_ns = per_party_violation.iter().all(|&v| v <= tolerance);
        NsReport {
            per_party_violation,
            is_ns,
            tolerance,
        }
    }
}

/// Sums a probability table over party `drop_party`'s output labels.
/// Rows of the result run over the remaining parties' joint output labels
/// (original order).
pub fn output_marginal(
    table: &RealMatrix,
    out_sizes: &[usize],
    drop_party: usize,
) -> Result<RealMatrix> {
    if drop_party >= out_sizes.len() {
        return Err(Error::IndexOutOfRange {
            context: format!(
                "marginal over party {drop_party} of {} parties",
                out_sizes.len()
            ),
        });
    }
    let total: usize = out_sizes.iter().product();
    if table.rows() != total {
        return Err(Error::ShapeMismatch {
            context: format!(
                "table has {} rows, label sizes require {total}",
                table.rows()
            ),
        });
    }
    let kept_sizes: Vec<usize> = out_sizes
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != drop_party)
        .map(|(_, &s)| s)
        .collect();
    let kept_total: usize = kept_sizes.iter().product();
    let mut out = RealMatrix::zeros(kept_total, table.cols());
    for a in 0..total {
        let digits = split_index(a, out_sizes);
        let kept: Vec<usize> = digits
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != drop_party)
            .map(|(_, &d)| d)
            .collect();
        let row = joint_index(&kept, &kept_sizes);
        for x in 0..table.cols() {
            out.set(row, x, out.at(row, x) + table.at(a, x));
        }
    }
    Ok(out)
}

/// Largest ∞-norm difference between columns of `table` whose input digits
/// agree everywhere except inside `wires` (and differ somewhere inside).
fn input_sweep_violation(table: &RealMatrix, in_sizes: &[usize], wires: &[bool]) -> f64 {
    let cols = table.cols();
    let mut worst = 0.0f64;
    for x in 0..cols {
        let xd = split_index(x, in_sizes);
        for y in (x + 1)..cols {
            let yd = split_index(y, in_sizes);
            let outside_equal = xd
                .iter()
                .zip(&yd)
                .zip(wires)
                .all(|((a, b), &inside)| inside || a == b);
            if !outside_equal || xd == yd {
                continue;
            }
            let mut diff = 0.0f64;
            for r in 0..table.rows() {
                diff = diff.max((table.at(r, x) - table.at(r, y)).abs());
            }
            worst = worst.max(diff);
        }
    }
    worst
}

/// Non-signalling check on a (quasi)probability table with one label per
/// party on each side.
pub fn ns_report_stochastic(
    table: &RealMatrix,
    out_sizes: &[usize],
    in_sizes: &[usize],
    tol: f64,
) -> Result<NsReport> {
    let parties = out_sizes.len();
    if in_sizes.len() != parties || parties == 0 {
        return Err(Error::ShapeMismatch {
            context: format!(
                "{} output and {} input label lists",
                out_sizes.len(),
                in_sizes.len()
            ),
        });
    }
    let in_total: usize = in_sizes.iter().product();
    if table.cols() != in_total {
        return Err(Error::ShapeMismatch {
            context: format!(
                "table has {} columns, label sizes require {in_total}",
                table.cols()
            ),
        });
    }
    let mut violations = Vec::with_capacity(parties);
    for i in 0..parties {
        let marg = output_marginal(table, out_sizes, i)?;
        let mut wires = vec![false; parties];
        wires[i] = true;
        violations.push(input_sweep_violation(&marg, in_sizes, &wires));
    }
    Ok(NsReport::from_violations(violations, tol))
}

/// Non-signalling check on a GPT channel. For each party the channel is
/// composed with the discard on that party's output wires, then swept over
/// joint fiducial input states; columns that differ only in that party's
/// fiducial choices must coincide. Fails with `NotDiscardPreserving` when
/// the map is not a channel.
pub fn ns_report_channel(
    map: &PartitionedMap,
    in_frames: &[&FiducialFrame],
    tol: f64,
) -> Result<NsReport> {
    if !is_discard_preserving(map, crate::TOL_ALGEBRAIC) {
        return Err(Error::NotDiscardPreserving {
            deviation: map.discard_deviation(),
        });
    }
    if in_frames.len() != map.in_systems().len() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "{} input frames for {} input wires",
                in_frames.len(),
                map.in_systems().len()
            ),
        });
    }
    for (f, s) in in_frames.iter().zip(map.in_systems()) {
        if f.system().dim() != s.dim() || f.system().name() != s.name() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "frame for {} used on input wire of {}",
                    f.system().name(),
                    s.name()
                ),
            });
        }
    }
    let mut preps = RealMatrix::identity(1);
    for f in in_frames {
        preps = preps.kron(f.prep());
    }
    let in_sizes: Vec<usize> = in_frames.iter().map(|f| f.size()).collect();
    let parties = map.party_count();
    let mut violations = Vec::with_capacity(parties);
    for p in 0..parties {
        // Discard this party's output wires, keep the rest intact.
        let mine = &map.parties()[p].out_wires;
        let mut contraction = RealMatrix::identity(1);
        for (w, system) in map.out_systems().iter().enumerate() {
            let factor = if mine.contains(&w) {
                RealMatrix::from_rows(&[system.discard().to_vec()]).expect("discard row")
            } else {
                RealMatrix::identity(system.dim())
            };
            contraction = contraction.kron(&factor);
        }
        let swept = contraction.matmul(map.matrix())?.matmul(&preps)?;
        let mut wires = vec![false; map.in_systems().len()];
        for &w in &map.parties()[p].in_wires {
            wires[w] = true;
        }
        violations.push(input_sweep_violation(&swept, &in_sizes, &wires));
    }
    Ok(NsReport::from_violations(violations, tol))
}
