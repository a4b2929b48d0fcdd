//! Decomposition of non-signalling channels into affine combinations of
//! product local channels.
//!
//! Every non-signalling channel equals an affine combination of products of
//! local channels, generally with some negative weights. The decomposition
//! runs at two levels:
//!
//! - On probability tables: the channel's table is written over products of
//!   local deterministic strategies ([`decompose_ns_stochastic`]).
//! - On GPT maps: each deterministic strategy lifts through the frames to a
//!   local discard-preserving map, and each of those splits further into
//!   measure-and-prepare channels ([`decompose_ns_channel`]).
//!
//! The reported negativity `Σ max(−w, 0)` is zero exactly when the channel
//! is a convex mixture of local channels.

use crate::duotensor::{
    hopping_metric, to_stochastic, FiducialFrame, QuasiStochasticMatrix,
};
use crate::error::{Error, Result};
use crate::model::PartitionedMap;
use crate::nonsignalling::ns_report_stochastic;
use crate::numerics::eig::pseudo_inverse;
use crate::numerics::matrix::RealMatrix;
use crate::numerics::qr::{min_l1_affine, solve_affine};
use crate::numerics::tensor::{joint_index, kron_apply, split_index};

/// What to optimize when picking among the valid weight vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Any exact affine solution (least-squares, minimum-norm or basic).
    Feasible,
    /// Minimize `Σ|w|`, i.e. the negativity of the decomposition.
    MinNegativity,
}

/// Which factors the mixture terms should carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorMode {
    /// Lifted deterministic strategies: local discard-preserving maps.
    DpFactors,
    /// Local measure-and-prepare channels.
    ChannelFactors,
}

/// How to compute the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Table decomposition first, then per-party lifting and splitting.
    Pipeline,
    /// One affine solve over the product basis of the requested mode.
    Direct,
}

#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    pub mode: FactorMode,
    pub algorithm: Algorithm,
    pub objective: Objective,
    pub tol: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            mode: FactorMode::ChannelFactors,
            algorithm: Algorithm::Pipeline,
            objective: Objective::Feasible,
            tol: crate::TOL_LP,
        }
    }
}

/// Number of functions from `in_size` labels to `out_size` labels.
pub fn local_strategy_count(in_size: usize, out_size: usize) -> u128 {
    (out_size as u128).pow(in_size as u32)
}

/// Checks the joint strategy count against the enumeration cap and returns
/// the per-party counts.
pub fn strategy_counts(in_sizes: &[usize], out_sizes: &[usize]) -> Result<Vec<usize>> {
    let mut total: u128 = 1;
    let mut counts = Vec::with_capacity(in_sizes.len());
    for (&i, &o) in in_sizes.iter().zip(out_sizes) {
        if i == 0 || o == 0 {
            return Err(Error::ShapeMismatch {
                context: "strategy enumeration needs nonzero label counts".into(),
            });
        }
        let c = local_strategy_count(i, o);
        total = total.saturating_mul(c);
        if total > crate::STRATEGY_CAP as u128 {
            return Err(Error::CapExceeded {
                requested: total,
                cap: crate::STRATEGY_CAP,
            });
        }
        counts.push(c as usize);
    }
    Ok(counts)
}

/// Output label assigned to input `x` by strategy `f_index`. Strategies are
/// numbered lexicographically with the first input most significant.
pub fn strategy_output(f_index: usize, x: usize, in_size: usize, out_size: usize) -> usize {
    let place = in_size - 1 - x;
    (f_index / out_size.pow(place as u32)) % out_size
}

/// 0/1 table of the deterministic strategy: column `x` has a single 1 in row
/// `f(x)`.
pub fn deterministic_matrix(in_size: usize, out_size: usize, f_index: usize) -> RealMatrix {
    let mut m = RealMatrix::zeros(out_size, in_size);
    for x in 0..in_size {
        m.set(strategy_output(f_index, x, in_size, out_size), x, 1.0);
    }
    m
}

/// Columns are the row-major vectorizations of the deterministic strategy
/// tables.
fn strategy_vec_matrix(in_size: usize, out_size: usize) -> RealMatrix {
    let count = local_strategy_count(in_size, out_size) as usize;
    let mut m = RealMatrix::zeros(out_size * in_size, count);
    for f in 0..count {
        for x in 0..in_size {
            m.set(strategy_output(f, x, in_size, out_size) * in_size + x, f, 1.0);
        }
    }
    m
}

/// Product-measure weights decomposing a unit-column-sum table `y` over all
/// deterministic strategies: `r_f = Πₓ y[f(x), x]`. The identity
/// `Σ_f r_f D_f = y` holds exactly because every column of `y` sums to 1,
/// and `Σ_f r_f = 1` for the same reason. Works for signed `y` as well.
fn product_measure_weights(y: &RealMatrix) -> Vec<f64> {
    let (out_size, in_size) = (y.rows(), y.cols());
    let count = local_strategy_count(in_size, out_size) as usize;
    let mut weights = Vec::with_capacity(count);
    for f in 0..count {
        let mut r = 1.0;
        for x in 0..in_size {
            r *= y.at(strategy_output(f, x, in_size, out_size), x);
        }
        weights.push(r);
    }
    weights
}

/// Sum of the negative weight mass: zero exactly for convex combinations.
/// The weights must be affine (sum 1).
pub fn negativity(weights: &[f64]) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > crate::TOL_ALGEBRAIC {
        return Err(Error::WeightsNotAffine { total });
    }
    Ok(weights.iter().map(|&w| (-w).max(0.0)).sum())
}

/// Affine weights over joint deterministic strategies reproducing a
/// non-signalling table.
#[derive(Debug, Clone)]
pub struct StochasticDecomposition {
    /// Weight per joint strategy, party 0's strategy index most significant.
    pub weights: Vec<f64>,
    /// Strategies per party.
    pub party_strategy_counts: Vec<usize>,
    /// ∞-norm reconstruction error.
    pub residual: f64,
    /// `Σ|w|`.
    pub l1: f64,
}

/// Interleaved reindexing of a table: entry `(joint row, joint col)` moves to
/// the joint index over per-party `(row digit, col digit)` pairs. This is the
/// target vector of the product-strategy system `(⊗ᵢ Vᵢ) q = t̃`.
fn interleave_table(table: &RealMatrix, out_sizes: &[usize], in_sizes: &[usize]) -> Vec<f64> {
    let mut paired_sizes = Vec::with_capacity(2 * out_sizes.len());
    for (&o, &i) in out_sizes.iter().zip(in_sizes) {
        paired_sizes.push(o);
        paired_sizes.push(i);
    }
    let mut out = vec![0.0; table.rows() * table.cols()];
    for r in 0..table.rows() {
        let rd = split_index(r, out_sizes);
        for c in 0..table.cols() {
            let cd = split_index(c, in_sizes);
            let mut digits = Vec::with_capacity(paired_sizes.len());
            for (ri, ci) in rd.iter().zip(&cd) {
                digits.push(*ri);
                digits.push(*ci);
            }
            out[joint_index(&digits, &paired_sizes)] = table.at(r, c);
        }
    }
    out
}

/// Decomposes a non-signalling (quasi)stochastic table over products of
/// local deterministic strategies.
///
/// With [`Objective::Feasible`] the minimum-norm least-squares solution is
/// computed factor by factor through pseudo-inverses, which is exact for
/// non-signalling tables. With [`Objective::MinNegativity`] a linear program
/// minimizes `Σ|w|` over the full product basis. Signalling tables are
/// rejected with `NotNonSignalling`.
pub fn decompose_ns_stochastic(
    table: &QuasiStochasticMatrix,
    out_sizes: &[usize],
    in_sizes: &[usize],
    objective: Objective,
    tol: f64,
) -> Result<StochasticDecomposition> {
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
    let report = ns_report_stochastic(table.matrix(), out_sizes, in_sizes, tol)?;
    if !report.is_ns {
        let violation = report
            .per_party_violation
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        return Err(Error::NotNonSignalling { violation });
    }
    let counts = strategy_counts(in_sizes, out_sizes)?;
    let weights = match objective {
        Objective::Feasible => {
            let target = interleave_table(table.matrix(), out_sizes, in_sizes);
            let pinvs: Vec<RealMatrix> = in_sizes
                .iter()
                .zip(out_sizes)
                .map(|(&i, &o)| pseudo_inverse(&strategy_vec_matrix(i, o)))
                .collect::<Result<_>>()?;
            kron_apply(&pinvs.iter().collect::<Vec<_>>(), &target)?
        }
        Objective::MinNegativity => {
            let total: usize = counts.iter().product();
            let dim = table.rows_times_cols();
            let columns = crate::par::map_indexed(total, |g| {
                let digits = split_index(g, &counts);
                let mats: Vec<RealMatrix> = digits
                    .iter()
                    .enumerate()
                    .map(|(p, &f)| deterministic_matrix(in_sizes[p], out_sizes[p], f))
                    .collect();
                RealMatrix::kron_all(&mats.iter().collect::<Vec<_>>())
            });
            let mut basis = RealMatrix::zeros(dim, total);
            for (g, column) in columns.iter().enumerate() {
                for (r, &v) in column.entries().iter().enumerate() {
                    basis.set(r, g, v);
                }
            }
            min_l1_affine(&basis, table.matrix().entries(), tol)?.weights
        }
    };
    // Verify the reconstruction; non-signalling guarantees solvability, so a
    // bad residual here is a numerical failure, not a property of the input.
    let vecs: Vec<RealMatrix> = in_sizes
        .iter()
        .zip(out_sizes)
        .map(|(&i, &o)| strategy_vec_matrix(i, o))
        .collect();
    let rebuilt = kron_apply(&vecs.iter().collect::<Vec<_>>(), &weights)?;
    let target = interleave_table(table.matrix(), out_sizes, in_sizes);
    let residual = rebuilt
        .iter()
        .zip(&target)
        .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
    let total_weight: f64 = weights.iter().sum();
    if residual > tol || (total_weight - 1.0).abs() > tol.max(crate::TOL_ALGEBRAIC) {
        return Err(Error::Internal {
            context: format!(
                "product-strategy system unsolved on a non-signalling table \
                 (residual {residual:.3e}, weight sum {total_weight:.12})"
            ),
        });
    }
    let l1 = weights.iter().map(|w| w.abs()).sum();
    Ok(StochasticDecomposition {
        weights,
        party_strategy_counts: counts,
        residual,
        l1,
    })
}

impl QuasiStochasticMatrix {
    fn rows_times_cols(&self) -> usize {
        self.matrix().rows() * self.matrix().cols()
    }
}

/// Lifts a unit-column-sum table through a frame pair to the GPT map
/// `prep_out · h_out⁻¹ · s · h_in⁻¹ · meas_in`. The lift of any such table
/// is discard-preserving; lifts of stochastic tables need not be physical.
pub fn lift_local_dp(
    in_frame: &FiducialFrame,
    out_frame: &FiducialFrame,
    s: &RealMatrix,
) -> Result<RealMatrix> {
    if s.rows() != out_frame.size() || s.cols() != in_frame.size() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "table is {}x{}, frames require {}x{}",
                s.rows(),
                s.cols(),
                out_frame.size(),
                in_frame.size()
            ),
        });
    }
    let deviation = s
        .column_sums()
        .iter()
        .fold(0.0f64, |m, &c| m.max((c - 1.0).abs()));
    if deviation > crate::TOL_ALGEBRAIC {
        return Err(Error::NotDiscardPreserving { deviation });
    }
    let h_out = hopping_metric(out_frame)?;
    let h_in = hopping_metric(in_frame)?;
    out_frame
        .prep()
        .matmul(&h_out.h_inv)?
        .matmul(s)?
        .matmul(&h_in.h_inv)?
        .matmul(in_frame.meas())
}

/// Measure-and-prepare channel of a deterministic strategy: measure the
/// fiducial measurement, reprepare the fiducial state the strategy picks.
/// Equals `prep_out · D_f · meas_in`.
pub fn deterministic_measure_prepare(
    in_frame: &FiducialFrame,
    out_frame: &FiducialFrame,
    f_index: usize,
) -> Result<RealMatrix> {
    let d = deterministic_matrix(in_frame.size(), out_frame.size(), f_index);
    out_frame.prep().matmul(&d)?.matmul(in_frame.meas())
}

/// Affine weights over deterministic measure-and-prepare channels
/// reproducing a discard-preserving map.
#[derive(Debug, Clone)]
pub struct DpDecomposition {
    pub weights: Vec<f64>,
    pub residual: f64,
}

/// Per-party solver reused across many targets: the affine system over
/// `vec(M_f)` is factored once.
struct DpSolver {
    qr_basis: RealMatrix,
    tol: f64,
}

impl DpSolver {
    fn new(in_frame: &FiducialFrame, out_frame: &FiducialFrame, tol: f64) -> Result<Self> {
        let count = local_strategy_count(in_frame.size(), out_frame.size());
        if count > crate::STRATEGY_CAP as u128 {
            return Err(Error::CapExceeded {
                requested: count,
                cap: crate::STRATEGY_CAP,
            });
        }
        let count = count as usize;
        let dim = out_frame.system().dim() * in_frame.system().dim();
        let mut basis = RealMatrix::zeros(dim, count);
        for f in 0..count {
            let m = deterministic_measure_prepare(in_frame, out_frame, f)?;
            for (r, &v) in m.entries().iter().enumerate() {
                basis.set(r, f, v);
            }
        }
        Ok(DpSolver { qr_basis: basis, tol })
    }

    fn solve(&self, target: &[f64]) -> Result<DpDecomposition> {
        match solve_affine(&self.qr_basis, target, self.tol) {
            Ok(sol) => Ok(DpDecomposition {
                weights: sol.weights,
                residual: sol.residual_norm,
            }),
            // The affine hull of deterministic measure-and-prepare channels
            // is the whole discard-preserving space, so infeasibility on a
            // discard-preserving target is a numerical failure.
            Err(Error::Infeasible { residual }) => Err(Error::Internal {
                context: format!(
                    "measure-and-prepare span missed a discard-preserving map \
                     (residual {residual:.3e})"
                ),
            }),
            Err(e) => Err(e),
        }
    }
}

/// Writes a single-party discard-preserving map as an affine combination of
/// deterministic measure-and-prepare channels.
pub fn decompose_dp_map(
    map: &PartitionedMap,
    in_frame: &FiducialFrame,
    out_frame: &FiducialFrame,
    tol: f64,
) -> Result<DpDecomposition> {
    if map.in_systems().len() != 1 || map.out_systems().len() != 1 {
        return Err(Error::ShapeMismatch {
            context: "decompose_dp_map expects a single-party map".into(),
        });
    }
    let deviation = map.discard_deviation();
    if deviation > crate::TOL_ALGEBRAIC {
        return Err(Error::NotDiscardPreserving { deviation });
    }
    if map.in_systems()[0].dim() != in_frame.system().dim()
        || map.out_systems()[0].dim() != out_frame.system().dim()
    {
        return Err(Error::ShapeMismatch {
            context: "frames do not match the map's systems".into(),
        });
    }
    DpSolver::new(in_frame, out_frame, tol)?.solve(map.matrix().entries())
}

/// One term of a quasi-mixture: a weight and one local factor per party.
#[derive(Debug, Clone)]
pub struct MixtureTerm {
    pub weight: f64,
    /// Party `i`'s local map matrix (`dim_out × dim_in` of that party).
    pub factors: Vec<RealMatrix>,
}

/// Affine mixture of product local maps approximating a channel.
#[derive(Debug, Clone)]
pub struct QuasiMixture {
    pub terms: Vec<MixtureTerm>,
    /// `Σ max(−w, 0)` over the kept terms.
    pub negativity: f64,
    /// ∞-norm between the original channel matrix and the reconstruction.
    pub residual: f64,
    /// Total `|w|` removed by the drop rule (0 when nothing was dropped).
    pub dropped_mass: f64,
}

/// `Σ w_k ⊗ᵢ factor_{k,i}`: the channel matrix the mixture represents.
pub fn reconstruct(mixture: &QuasiMixture) -> Result<RealMatrix> {
    let Some(first) = mixture.terms.first() else {
        return Err(Error::EmptyMixture);
    };
    let shapes: Vec<(usize, usize)> = first
        .factors
        .iter()
        .map(|f| (f.rows(), f.cols()))
        .collect();
    let rows: usize = shapes.iter().map(|&(r, _)| r).product();
    let cols: usize = shapes.iter().map(|&(_, c)| c).product();
    let mut out = RealMatrix::zeros(rows, cols);
    for (k, term) in mixture.terms.iter().enumerate() {
        if term.factors.len() != shapes.len()
            || term
                .factors
                .iter()
                .zip(&shapes)
                .any(|(f, &(r, c))| f.rows() != r || f.cols() != c)
        {
            return Err(Error::ShapeMismatch {
                context: format!("term {k} has inconsistent factor shapes"),
            });
        }
        let product = RealMatrix::kron_all(&term.factors.iter().collect::<Vec<_>>());
        out = out.add(&product.scale(term.weight))?;
    }
    Ok(out)
}

/// Keeps indices with `|w| ≥ DROP_TOL` provided the kept weights still sum
/// to 1 within the algebraic tolerance; otherwise keeps everything.
fn drop_rule(weights: &[f64]) -> (Vec<usize>, f64) {
    let kept: Vec<usize> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w.abs() >= crate::DROP_TOL)
        .map(|(i, _)| i)
        .collect();
    let kept_sum: f64 = kept.iter().map(|&i| weights[i]).sum();
    if (kept_sum - 1.0).abs() <= crate::TOL_ALGEBRAIC {
        let dropped: f64 = weights
            .iter()
            .filter(|w| w.abs() < crate::DROP_TOL)
            .map(|w| w.abs())
            .sum();
        (kept, dropped)
    } else {
        ((0..weights.len()).collect(), 0.0)
    }
}

/// Decomposes a non-signalling channel into an affine mixture of product
/// local maps.
///
/// The pipeline algorithm converts to a probability table, decomposes over
/// product deterministic strategies, and lifts each strategy back through
/// the frames: either as local discard-preserving maps
/// ([`FactorMode::DpFactors`]) or, after splitting each lift over
/// measure-and-prepare channels with exact product-measure weights, as local
/// channels ([`FactorMode::ChannelFactors`]). The direct algorithm solves
/// one affine system over the product basis of the requested mode; in
/// `DpFactors` mode its minimum-`Σ|w|` value coincides with the pipeline's
/// because the lifted basis is an invertible image of the strategy basis.
pub fn decompose_ns_channel(
    map: &PartitionedMap,
    in_frames: &[&FiducialFrame],
    out_frames: &[&FiducialFrame],
    options: &DecomposeOptions,
) -> Result<QuasiMixture> {
    let parties = map.party_count();
    if map.in_systems().len() != parties
        || map.out_systems().len() != parties
        || map
            .parties()
            .iter()
            .enumerate()
            .any(|(i, p)| p.in_wires != [i] || p.out_wires != [i])
    {
        return Err(Error::ShapeMismatch {
            context: "decomposition expects one input and one output wire per party, in order"
                .into(),
        });
    }
    let tol = options.tol;
    let table = to_stochastic(map, in_frames, out_frames)?;
    let in_sizes: Vec<usize> = in_frames.iter().map(|f| f.size()).collect();
    let out_sizes: Vec<usize> = out_frames.iter().map(|f| f.size()).collect();
    let counts = strategy_counts(&in_sizes, &out_sizes)?;

    // Local factor tables, one set per party per mode. `lifted[p][f]` is the
    // lift of strategy f; `prepared[p][g]` is the measure-and-prepare
    // channel of strategy g.
    let lifted: Vec<Vec<RealMatrix>> = (0..parties)
        .map(|p| {
            crate::par::map_indexed(counts[p], |f| {
                lift_local_dp(
                    in_frames[p],
                    out_frames[p],
                    &deterministic_matrix(in_sizes[p], out_sizes[p], f),
                )
            })
            .into_iter()
            .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let prepared: Vec<Vec<RealMatrix>> = (0..parties)
        .map(|p| {
            crate::par::map_indexed(counts[p], |g| {
                deterministic_measure_prepare(in_frames[p], out_frames[p], g)
            })
            .into_iter()
            .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;

    let (weights, factor_sets): (Vec<f64>, &Vec<Vec<RealMatrix>>) = match options.algorithm {
        Algorithm::Pipeline => {
            let strat = decompose_ns_stochastic(
                &table,
                &out_sizes,
                &in_sizes,
                options.objective,
                tol,
            )?;
            match options.mode {
                FactorMode::DpFactors => (strat.weights, &lifted),
                FactorMode::ChannelFactors => {
                    // Split every lift over measure-and-prepare channels with
                    // the exact product-measure weights of
                    // h_out⁻¹ · D_f · h_in⁻¹, then merge party by party:
                    // q' = (⊗ᵢ Rᵢ) q.
                    let mut r_mats = Vec::with_capacity(parties);
                    for p in 0..parties {
                        let h_in = hopping_metric(in_frames[p])?;
                        let h_out = hopping_metric(out_frames[p])?;
                        let mut r = RealMatrix::zeros(counts[p], counts[p]);
                        for f in 0..counts[p] {
                            let y = h_out
                                .h_inv
                                .matmul(&deterministic_matrix(
                                    in_sizes[p],
                                    out_sizes[p],
                                    f,
                                ))?
                                .matmul(&h_in.h_inv)?;
                            for (g, &w) in product_measure_weights(&y).iter().enumerate() {
                                r.set(g, f, w);
                            }
                        }
                        r_mats.push(r);
                    }
                    let merged =
                        kron_apply(&r_mats.iter().collect::<Vec<_>>(), &strat.weights)?;
                    (merged, &prepared)
                }
            }
        }
        Algorithm::Direct => {
            // Solvability of the direct system is equivalent to
            // non-signalling; check it first so signalling inputs fail with
            // the right error.
            let report = ns_report_stochastic(table.matrix(), &out_sizes, &in_sizes, tol)?;
            if !report.is_ns {
                let violation = report
                    .per_party_violation
                    .iter()
                    .cloned()
                    .fold(0.0f64, f64::max);
                return Err(Error::NotNonSignalling { violation });
            }
            let factors = match options.mode {
                FactorMode::DpFactors => &lifted,
                FactorMode::ChannelFactors => &prepared,
            };
            let total: usize = counts.iter().product();
            let dim = map.out_dim() * map.in_dim();
            let columns = crate::par::map_indexed(total, |g| {
                let digits = split_index(g, &counts);
                let mats: Vec<&RealMatrix> = digits
                    .iter()
                    .enumerate()
                    .map(|(p, &f)| &factors[p][f])
                    .collect();
                RealMatrix::kron_all(&mats)
            });
            let mut basis = RealMatrix::zeros(dim, total);
            for (g, column) in columns.iter().enumerate() {
                for (r, &v) in column.entries().iter().enumerate() {
                    basis.set(r, g, v);
                }
            }
            let target = map.matrix().entries();
            let weights = match options.objective {
                Objective::Feasible => match solve_affine(&basis, target, tol) {
                    Ok(sol) => sol.weights,
                    Err(Error::Infeasible { residual }) => {
                        return Err(Error::Internal {
                            context: format!(
                                "product basis missed a non-signalling channel \
                                 (residual {residual:.3e})"
                            ),
                        })
                    }
                    Err(e) => return Err(e),
                },
                Objective::MinNegativity => min_l1_affine(&basis, target, tol)?.weights,
            };
            (weights, factors)
        }
    };

    let (kept, dropped_mass) = drop_rule(&weights);
    let terms: Vec<MixtureTerm> = kept
        .iter()
        .map(|&g| {
            let digits = split_index(g, &counts);
            MixtureTerm {
                weight: weights[g],
                factors: digits
                    .iter()
                    .enumerate()
                    .map(|(p, &f)| factor_sets[p][f].clone())
                    .collect(),
            }
        })
        .collect();
    let kept_weights: Vec<f64> = terms.iter().map(|t| t.weight).collect();
    let negativity = negativity(&kept_weights)?;
    let mixture = QuasiMixture {
        terms,
        negativity,
        residual: 0.0,
        dropped_mass,
    };
    let rebuilt = reconstruct(&mixture)?;
    let residual = rebuilt.max_abs_diff(map.matrix())?;
    if residual > tol {
        return Err(Error::Internal {
            context: format!("mixture reconstruction off by {residual:.3e} at tol {tol:.1e}"),
        });
    }
    Ok(QuasiMixture { residual, ..mixture })
}
