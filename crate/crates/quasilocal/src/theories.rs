//! Built-in theories with canonical fiducial frames, classical-box
//! embeddings, and seeded random channel generation.
//!
//! Three families ship with the crate:
//! - `classical:<d>`: probability vectors over `d` labels; frame = point
//!   masses and indicator effects, hopping metric the identity.
//! - `gbit`: the square-state-space system in dimension 3 (states over the
//!   unit square, discard `(1,0,0)`).
//! - `qubit`: dimension 4 in Pauli coordinates `(Tr ρ, Tr Xρ, Tr Yρ, Tr Zρ)`
//!   with both cones the positive-semidefinite cone; frame = tetrahedral
//!   states and the matching four-outcome measurement.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::duotensor::{to_stochastic, FiducialFrame, QuasiStochasticMatrix};
use crate::error::{Error, Result};
use crate::model::{compose_parallel, GptSystem, PartitionedMap, Party};
use crate::numerics::cone::ConeDescription;
use crate::numerics::matrix::RealMatrix;
use crate::numerics::tensor::{joint_index, split_index};

/// Identifier of a built-in theory.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TheoryId {
    Classical(usize),
    Gbit,
    Qubit,
}

impl TheoryId {
    /// Parses `classical:<d>`, `gbit` or `qubit`; `None` for anything else.
    pub fn parse(s: &str) -> Option<TheoryId> {
        match s {
            "gbit" => Some(TheoryId::Gbit),
            "qubit" => Some(TheoryId::Qubit),
            _ => {
                let d = s.strip_prefix("classical:")?.parse::<usize>().ok()?;
                (d >= 1).then_some(TheoryId::Classical(d))
            }
        }
    }
}

impl std::fmt::Display for TheoryId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TheoryId::Classical(d) => write!(f, "classical:{d}"),
            TheoryId::Gbit => write!(f, "gbit"),
            TheoryId::Qubit => write!(f, "qubit"),
        }
    }
}

/// Classical theory on `d` labels: simplex states, nonnegative effects,
/// all-ones discard, identity frame.
pub fn build_classical(d: usize) -> Result<FiducialFrame> {
    if d == 0 {
        return Err(Error::ShapeMismatch {
            context: "classical theory needs at least one label".into(),
        });
    }
    let gens: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let system = GptSystem::new(
        format!("classical:{d}"),
        d,
        ConeDescription::polyhedral(d, gens.clone())?,
        ConeDescription::polyhedral(d, gens)?,
        vec![1.0; d],
    )?;
    FiducialFrame::new(system, RealMatrix::identity(d), RealMatrix::identity(d))
}

/// Square-state-space theory in dimension 3. States live over the square
/// with vertices `(1, ±1, ±1)`; the effect cone is generated by
/// `(1, ±1, 0)/2` and `(1, 0, ±1)/2`; discard is `(1, 0, 0)`.
pub fn build_gbit() -> Result<FiducialFrame> {
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
    let system = GptSystem::new(
        "gbit",
        3,
        ConeDescription::polyhedral(3, state_gens)?,
        ConeDescription::polyhedral(3, effect_gens)?,
        vec![1.0, 0.0, 0.0],
    )?;
    // Three frame states spanning the square, and a three-outcome fiducial
    // measurement: rows sum to the discard and the hopping metric is
    // invertible.
    let prep = RealMatrix::from_rows(&[
        vec![1.0, 1.0, 1.0],
        vec![1.0, -1.0, 0.0],
        vec![1.0, 1.0, -1.0],
    ])?;
    let meas = RealMatrix::from_rows(&[
        vec![0.25, 0.25, 0.0],
        vec![0.5, -0.25, 0.25],
        vec![0.25, 0.0, -0.25],
    ])?;
    FiducialFrame::new(system, prep, meas)
}

/// Tetrahedral Bloch directions used by the qubit frame.
fn tetrahedron() -> [[f64; 3]; 4] {
    let s2 = 2.0f64.sqrt();
    let s23 = (2.0f64 / 3.0).sqrt();
    [
        [0.0, 0.0, 1.0],
        [2.0 * s2 / 3.0, 0.0, -1.0 / 3.0],
        [-s2 / 3.0, s23, -1.0 / 3.0],
        [-s2 / 3.0, -s23, -1.0 / 3.0],
    ]
}

/// Qubit theory in Pauli coordinates. States are `(Tr ρ, Tr Xρ, Tr Yρ,
/// Tr Zρ)`; effects pair with states by the dot product; both cones are the
/// PSD cone and the discard is the identity effect `(1, 0, 0, 0)`. The frame
/// uses the four tetrahedral pure states and the four-outcome measurement
/// with effects `(I + r·σ)/4`.
pub fn build_qubit() -> Result<FiducialFrame> {
    let system = GptSystem::new(
        "qubit",
        4,
        ConeDescription::PauliPsd { qubits: 1 },
        ConeDescription::PauliPsd { qubits: 1 },
        vec![1.0, 0.0, 0.0, 0.0],
    )?;
    let dirs = tetrahedron();
    let prep = RealMatrix::from_fn(4, 4, |i, k| if i == 0 { 1.0 } else { dirs[k][i - 1] });
    let meas = RealMatrix::from_fn(4, 4, |k, j| {
        if j == 0 {
            0.25
        } else {
            0.25 * dirs[k][j - 1]
        }
    });
    FiducialFrame::new(system, prep, meas)
}

/// System plus canonical frame for a theory id.
pub fn build_theory(id: &TheoryId) -> Result<FiducialFrame> {
    match id {
        TheoryId::Classical(d) => build_classical(*d),
        TheoryId::Gbit => build_gbit(),
        TheoryId::Qubit => build_qubit(),
    }
}

/// Encoding states and decoding effects for `labels` classical labels inside
/// a theory: the states are perfectly distinguished by the effects, and the
/// effects sum to the discard.
fn classical_interface(id: &TheoryId, labels: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    match id {
        TheoryId::Classical(d) => {
            if labels > *d {
                return Err(Error::LabelOverflow {
                    context: format!("{labels} labels into classical:{d}"),
                });
            }
            let mut states = Vec::new();
            let mut effects = Vec::new();
            for k in 0..labels {
                let mut s = vec![0.0; *d];
                s[k] = 1.0;
                states.push(s.clone());
                // Last effect absorbs the unused labels so the set sums to
                // discard.
                let mut e = s;
                if k == labels - 1 {
                    for item in e.iter_mut().take(*d).skip(labels) {
                        *item = 1.0;
                    }
                }
                effects.push(e);
            }
            Ok((states, effects))
        }
        TheoryId::Gbit => {
            if labels > 2 {
                return Err(Error::LabelOverflow {
                    context: format!("{labels} labels into gbit"),
                });
            }
            let states = vec![vec![1.0, 1.0, 1.0], vec![1.0, -1.0, -1.0]];
            let effects = vec![vec![0.5, 0.25, 0.25], vec![0.5, -0.25, -0.25]];
            Ok((
                states.into_iter().take(labels).collect(),
                pad_last_effect(effects, labels, &[1.0, 0.0, 0.0]),
            ))
        }
        TheoryId::Qubit => {
            if labels > 2 {
                return Err(Error::LabelOverflow {
                    context: format!("{labels} labels into qubit"),
                });
            }
            let states = vec![vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, -1.0]];
            let effects = vec![vec![0.5, 0.0, 0.0, 0.5], vec![0.5, 0.0, 0.0, -0.5]];
            Ok((
                states.into_iter().take(labels).collect(),
                pad_last_effect(effects, labels, &[1.0, 0.0, 0.0, 0.0]),
            ))
        }
    }
}

/// Keeps the first `labels` effects, replacing the last kept one so the kept
/// set still sums to `discard`.
fn pad_last_effect(effects: Vec<Vec<f64>>, labels: usize, discard: &[f64]) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = effects.into_iter().take(labels).collect();
    let partial: Vec<f64> = (0..discard.len())
        .map(|j| kept[..labels - 1].iter().map(|e| e[j]).sum::<f64>())
        .collect();
    let last = kept.last_mut().expect("labels >= 1");
    for (j, v) in last.iter_mut().enumerate() {
        *v = discard[j] - partial[j];
    }
    kept
}

/// Embeds a classical conditional probability table as a multipartite
/// measure-and-prepare channel: each party decodes its input wire with a
/// perfectly distinguishing measurement, the table acts on the labels, and
/// each party encodes its output label as a state.
///
/// `box_table` has one column per joint input label and one row per joint
/// output label (party 0 most significant). The embedded channel is
/// non-signalling exactly when the table is.
pub fn embed_classical_box(
    box_table: &QuasiStochasticMatrix,
    parties: &[(TheoryId, TheoryId)],
    in_sizes: &[usize],
    out_sizes: &[usize],
) -> Result<PartitionedMap> {
    let n = parties.len();
    if in_sizes.len() != n || out_sizes.len() != n || n == 0 {
        return Err(Error::ShapeMismatch {
            context: format!(
                "{n} parties with {} input and {} output label sizes",
                in_sizes.len(),
                out_sizes.len()
            ),
        });
    }
    let total_in: usize = in_sizes.iter().product();
    let total_out: usize = out_sizes.iter().product();
    if box_table.matrix().rows() != total_out || box_table.matrix().cols() != total_in {
        return Err(Error::ShapeMismatch {
            context: format!(
                "box table is {}x{}, label sizes require {total_out}x{total_in}",
                box_table.matrix().rows(),
                box_table.matrix().cols()
            ),
        });
    }
    let mut in_frames = Vec::with_capacity(n);
    let mut out_frames = Vec::with_capacity(n);
    let mut decoders = Vec::with_capacity(n);
    let mut encoders = Vec::with_capacity(n);
    for (i, (in_id, out_id)) in parties.iter().enumerate() {
        in_frames.push(build_theory(in_id)?);
        out_frames.push(build_theory(out_id)?);
        let (_, effects) = classical_interface(in_id, in_sizes[i])?;
        let (states, _) = classical_interface(out_id, out_sizes[i])?;
        decoders.push(effects);
        encoders.push(states);
    }
    let in_dim: usize = in_frames.iter().map(|f| f.system().dim()).product();
    let out_dim: usize = out_frames.iter().map(|f| f.system().dim()).product();
    let mut matrix = RealMatrix::zeros(out_dim, in_dim);
    for a in 0..total_out {
        let a_digits = split_index(a, out_sizes);
        let mut state = vec![1.0];
        for (i, &ai) in a_digits.iter().enumerate() {
            state = kron_vec(&state, &encoders[i][ai]);
        }
        for x in 0..total_in {
            let w = box_table.matrix().at(a, x);
            if w == 0.0 {
                continue;
            }
            let x_digits = split_index(x, in_sizes);
            let mut effect = vec![1.0];
            for (i, &xi) in x_digits.iter().enumerate() {
                effect = kron_vec(&effect, &decoders[i][xi]);
            }
            for (r, &sv) in state.iter().enumerate() {
                for (c, &ev) in effect.iter().enumerate() {
                    matrix.set(r, c, matrix.at(r, c) + w * sv * ev);
                }
            }
        }
    }
    let party_list = (0..n)
        .map(|i| Party {
            in_wires: vec![i],
            out_wires: vec![i],
        })
        .collect();
    PartitionedMap::new(
        in_frames.into_iter().map(|f| f.system().clone()).collect(),
        out_frames.into_iter().map(|f| f.system().clone()).collect(),
        party_list,
        matrix,
    )
}

fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Column-stochastic matrix with columns drawn from the flat Dirichlet
/// distribution.
pub fn random_stochastic_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> RealMatrix {
    let mut m = RealMatrix::zeros(rows, cols);
    for j in 0..cols {
        let mut col: Vec<f64> = (0..rows)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = col.iter().sum();
        for v in &mut col {
            *v /= total;
        }
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

/// Matrix with unit column sums and signed entries: uniform entries shifted
/// column by column. These are tables of discard-preserving maps that are
/// usually neither positive nor stochastic.
pub fn random_affine_columns(rows: usize, cols: usize, rng: &mut impl Rng) -> RealMatrix {
    let mut m = RealMatrix::zeros(rows, cols);
    for j in 0..cols {
        let col: Vec<f64> = (0..rows).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let shift = (1.0 - col.iter().sum::<f64>()) / rows as f64;
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v + shift);
        }
    }
    m
}

/// Random reversible channel of a theory: classical permutations, square
/// symmetries for the gbit, Bloch rotations for the qubit.
fn random_reversible(id: &TheoryId, rng: &mut impl Rng) -> RealMatrix {
    match id {
        TheoryId::Classical(d) => {
            let mut perm: Vec<usize> = (0..*d).collect();
            for i in (1..*d).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            RealMatrix::from_fn(*d, *d, |i, j| if perm[j] == i { 1.0 } else { 0.0 })
        }
        TheoryId::Gbit => {
            // The eight symmetries of the square: signed coordinate
            // permutations of (x, y).
            let swap = rng.random::<bool>();
            let sx = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let sy = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let (r0, r1) = if swap {
                (vec![0.0, sx], vec![sy, 0.0])
            } else {
                (vec![sx, 0.0], vec![0.0, sy])
            };
            RealMatrix::from_rows(&[
                vec![1.0, 0.0, 0.0],
                vec![0.0, r0[0], r0[1]],
                vec![0.0, r1[0], r1[1]],
            ])
            .expect("rotation block")
        }
        TheoryId::Qubit => {
            // Uniform rotation from a random unit quaternion.
            let q: Vec<f64> = (0..4).map(|_| normal_sample(rng)).collect();
            let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            let (w, x, y, z) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
            let r = [
                [
                    1.0 - 2.0 * (y * y + z * z),
                    2.0 * (x * y - w * z),
                    2.0 * (x * z + w * y),
                ],
                [
                    2.0 * (x * y + w * z),
                    1.0 - 2.0 * (x * x + z * z),
                    2.0 * (y * z - w * x),
                ],
                [
                    2.0 * (x * z - w * y),
                    2.0 * (y * z + w * x),
                    1.0 - 2.0 * (x * x + y * y),
                ],
            ];
            RealMatrix::from_fn(4, 4, |i, j| match (i, j) {
                (0, 0) => 1.0,
                (0, _) | (_, 0) => 0.0,
                _ => r[i - 1][j - 1],
            })
        }
    }
}

fn normal_sample(rng: &mut impl Rng) -> f64 {
    // Box-Muller from two uniforms.
    let u1: f64 = (1.0 - rng.random::<f64>()).max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random single-party channel: a measure-and-prepare core from a random
/// stochastic table, sandwiched between random reversibles.
pub fn random_local_channel(
    in_id: &TheoryId,
    out_id: &TheoryId,
    rng: &mut impl Rng,
) -> Result<PartitionedMap> {
    let in_frame = build_theory(in_id)?;
    let out_frame = build_theory(out_id)?;
    let core = random_stochastic_matrix(out_frame.size(), in_frame.size(), rng);
    let m = out_frame.prep().matmul(&core)?.matmul(in_frame.meas())?;
    let m = random_reversible(out_id, rng)
        .matmul(&m)?
        .matmul(&random_reversible(in_id, rng))?;
    PartitionedMap::single_party(in_frame.system().clone(), out_frame.system().clone(), m)
}

/// One vertex-type term of a random non-signalling box on binary labels.
fn random_binary_ns_term(n: usize, rng: &mut impl Rng) -> RealMatrix {
    let rows = 1usize << n;
    let cols = 1usize << n;
    let mut m = RealMatrix::zeros(rows, cols);
    let use_pr = n >= 2 && rng.random::<bool>();
    if use_pr {
        // PR-type vertex on parties 0 and 1: a ⊕ b = xy ⊕ αx ⊕ βy ⊕ γ,
        // deterministic responses for the remaining parties.
        let alpha = rng.random::<bool>() as usize;
        let beta = rng.random::<bool>() as usize;
        let gamma = rng.random::<bool>() as usize;
        let fns: Vec<[usize; 2]> = (0..n.saturating_sub(2))
            .map(|_| [rng.random::<bool>() as usize, rng.random::<bool>() as usize])
            .collect();
        let sizes = vec![2usize; n];
        for x in 0..cols {
            let xd = split_index(x, &sizes);
            for a in 0..rows {
                let ad = split_index(a, &sizes);
                let tail_ok = (2..n).all(|i| ad[i] == fns[i - 2][xd[i]]);
                let parity = (xd[0] * xd[1]) ^ (alpha * xd[0]) ^ (beta * xd[1]) ^ gamma;
                if tail_ok && (ad[0] ^ ad[1]) == parity {
                    m.set(a, x, 0.5);
                }
            }
        }
    } else {
        // Product deterministic box.
        let fns: Vec<[usize; 2]> = (0..n)
            .map(|_| [rng.random::<bool>() as usize, rng.random::<bool>() as usize])
            .collect();
        let sizes = vec![2usize; n];
        for x in 0..cols {
            let xd = split_index(x, &sizes);
            let ad: Vec<usize> = (0..n).map(|i| fns[i][xd[i]]).collect();
            let a = joint_index(&ad, &sizes);
            m.set(a, x, 1.0);
        }
    }
    m
}

/// Seeded random non-signalling channel over the given per-party theory
/// pairs.
///
/// The channel mixes a product of independent random local channels with an
/// embedded random non-signalling classical box on binary labels:
/// `C = (1 − mix) · ⊗ᵢ Cᵢ + mix · embed(box)`. Both parts are
/// non-signalling, hence so is the mixture. The same seed always produces
/// the same channel. Parties whose theories cannot carry two distinguishable
/// labels fall back to the product part alone.
pub fn random_ns_channel(
    parties: &[(TheoryId, TheoryId)],
    seed: u64,
    mix: f64,
) -> Result<PartitionedMap> {
    if parties.is_empty() {
        return Err(Error::ShapeMismatch {
            context: "random channel needs at least one party".into(),
        });
    }
    if !(0.0..=1.0).contains(&mix) || !mix.is_finite() {
        return Err(Error::ShapeMismatch {
            context: format!("mix weight {mix} outside [0, 1]"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locals: Vec<PartitionedMap> = parties
        .iter()
        .map(|(i, o)| random_local_channel(i, o, &mut rng))
        .collect::<Result<_>>()?;
    let product = compose_parallel(&locals)?;
    if mix == 0.0 {
        return Ok(product);
    }
    let n = parties.len();
    let terms = 8usize;
    let weights = {
        let mut w: Vec<f64> = (0..terms)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        w
    };
    let mut table = RealMatrix::zeros(1 << n, 1 << n);
    for &w in &weights {
        table = table.add(&random_binary_ns_term(n, &mut rng).scale(w))?;
    }
    let sizes = vec![2usize; n];
    let boxed = match embed_classical_box(
        &QuasiStochasticMatrix::new(table)?,
        parties,
        &sizes,
        &sizes,
    ) {
        Ok(map) => map,
        // A party that cannot hold two labels: product part only.
        Err(Error::LabelOverflow { .. }) => return Ok(product),
        Err(e) => return Err(e),
    };
    let matrix = product
        .matrix()
        .scale(1.0 - mix)
        .add(&boxed.matrix().scale(mix))?;
    PartitionedMap::new(
        product.in_systems().to_vec(),
        product.out_systems().to_vec(),
        product.parties().to_vec(),
        matrix,
    )
}

/// Probability table of a channel in the canonical frames of the given
/// theories. Convenience wrapper used by the CLI and tests.
pub fn canonical_table(
    map: &PartitionedMap,
    parties: &[(TheoryId, TheoryId)],
) -> Result<QuasiStochasticMatrix> {
    let in_frames: Vec<FiducialFrame> = parties
        .iter()
        .map(|(i, _)| build_theory(i))
        .collect::<Result<_>>()?;
    let out_frames: Vec<FiducialFrame> = parties
        .iter()
        .map(|(_, o)| build_theory(o))
        .collect::<Result<_>>()?;
    to_stochastic(
        map,
        &in_frames.iter().collect::<Vec<_>>(),
        &out_frames.iter().collect::<Vec<_>>(),
    )
}
