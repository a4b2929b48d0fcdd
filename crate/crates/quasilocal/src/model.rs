//! GPT systems and the maps between them.
//!
//! A system is a finite-dimensional ordered vector space: a state cone, an
//! effect cone in the dual, and a distinguished discard effect that evaluates
//! to 1 on normalized states and lies strictly inside the effect cone. Maps
//! carry their input and output systems wire by wire, plus a partition of the
//! wires into parties for the multipartite notions (non-signalling,
//! decomposition into local channels).

use crate::error::{Error, Result};
use crate::numerics::cone::{cone_member, strict_interior, ConeDescription};
use crate::numerics::matrix::{dot, RealMatrix};

/// A finite-dimensional GPT system.
#[derive(Debug, Clone, PartialEq)]
pub struct GptSystem {
    name: String,
    dim: usize,
    state_cone: ConeDescription,
    effect_cone: ConeDescription,
    discard: Vec<f64>,
}

impl GptSystem {
    /// Builds a system after checking the structural invariants: cone
    /// dimensions match, the discard effect is finite, and the discard lies
    /// strictly inside the effect cone (interior = positive definite for
    /// PSD-described cones).
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        state_cone: ConeDescription,
        effect_cone: ConeDescription,
        discard: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if state_cone.ambient_dim() != dim || effect_cone.ambient_dim() != dim {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "system {name}: cones of dimension {} and {} for dim {dim}",
                    state_cone.ambient_dim(),
                    effect_cone.ambient_dim()
                ),
            });
        }
        if discard.len() != dim || !discard.iter().all(|x| x.is_finite()) {
            return Err(Error::ShapeMismatch {
                context: format!("system {name}: discard of length {}", discard.len()),
            });
        }
        let interior = match &effect_cone {
            ConeDescription::Polyhedral { .. } => {
                strict_interior(&effect_cone, &discard, crate::TOL_ALGEBRAIC)?
            }
            ConeDescription::PauliPsd { .. } => {
                effect_cone.membership_violation(&discard, 0.0)? == 0.0
                    && !discard.iter().all(|&x| x == 0.0)
                    && psd_strictly_positive(&effect_cone, &discard)?
            }
        };
        if !interior {
            return Err(Error::NotAnEffect {
                context: format!("system {name}: discard is not interior to the effect cone"),
            });
        }
        Ok(Self {
            name,
            dim,
            state_cone,
            effect_cone,
            discard,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state_cone(&self) -> &ConeDescription {
        &self.state_cone
    }

    pub fn effect_cone(&self) -> &ConeDescription {
        &self.effect_cone
    }

    pub fn discard(&self) -> &[f64] {
        &self.discard
    }

    /// True when `v` is in the state cone and the discard evaluates to 1.
    pub fn is_normalized_state(&self, v: &[f64], tol: f64) -> Result<bool> {
        if v.len() != self.dim {
            return Err(Error::ShapeMismatch {
                context: format!("state of length {} on system {}", v.len(), self.name),
            });
        }
        if (dot(&self.discard, v) - 1.0).abs() > tol {
            return Ok(false);
        }
        self.state_cone.contains(v, tol)
    }

    /// Parallel composite of systems. Polyhedral factors compose with the
    /// product-generator (min-tensor) cones; PSD factors compose into the
    /// larger PSD cone. Mixing the two kinds is not supported.
    pub fn composite(systems: &[&GptSystem]) -> Result<GptSystem> {
        if systems.is_empty() {
            return Err(Error::ShapeMismatch {
                context: "composite of zero systems".into(),
            });
        }
        if systems.len() == 1 {
            return Ok(systems[0].clone());
        }
        let name = systems
            .iter()
            .map(|s| s.name.as_str())
            .collect::<Vec<_>>()
            .join("⊗");
        let dim = systems.iter().map(|s| s.dim).product();
        let state_cone =
            composite_cone(&systems.iter().map(|s| &s.state_cone).collect::<Vec<_>>())?;
        let effect_cone =
            composite_cone(&systems.iter().map(|s| &s.effect_cone).collect::<Vec<_>>())?;
        let discard = discard_of_systems(systems);
        GptSystem::new(name, dim, state_cone, effect_cone, discard)
    }
}

fn psd_strictly_positive(cone: &ConeDescription, v: &[f64]) -> Result<bool> {
    use crate::numerics::cone::pauli_reconstruction;
    use crate::numerics::eig::min_eigenvalue;
    let ConeDescription::PauliPsd { qubits } = cone else {
        return Err(Error::Internal {
            context: "psd_strictly_positive on non-PSD cone".into(),
        });
    };
    let h = pauli_reconstruction(*qubits, v);
    Ok(min_eigenvalue(&h)? > crate::TOL_ALGEBRAIC)
}

/// Product of cones, factor by factor, matching the Kronecker index order.
pub fn composite_cone(cones: &[&ConeDescription]) -> Result<ConeDescription> {
    if cones.iter().all(|c| c.is_polyhedral()) {
        let mut gens: Vec<Vec<f64>> = vec![vec![]];
        let mut dim = 1usize;
        for cone in cones {
            let ConeDescription::Polyhedral {
                ambient_dim,
                generators,
            } = cone
            else {
                unreachable!()
            };
            let mut next = Vec::with_capacity(gens.len() * generators.len());
            for left in &gens {
                for right in generators {
                    next.push(kron_vec(left, right));
                }
            }
            gens = next;
            dim *= ambient_dim;
        }
        return ConeDescription::polyhedral(dim, gens);
    }
    if cones
        .iter()
        .all(|c| matches!(c, ConeDescription::PauliPsd { .. }))
    {
        let qubits = cones
            .iter()
            .map(|c| match c {
                ConeDescription::PauliPsd { qubits } => *qubits,
                _ => unreachable!(),
            })
            .sum();
        return Ok(ConeDescription::PauliPsd { qubits });
    }
    Err(Error::UnsupportedCone {
        context: "composites mixing polyhedral and PSD cones are not supported".into(),
    })
}

fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() {
        return b.to_vec();
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

fn discard_of_systems(systems: &[&GptSystem]) -> Vec<f64> {
    let mut out = vec![1.0];
    for s in systems {
        out = kron_vec(&out, &s.discard);
    }
    out
}

/// Discard effect of a list of systems (Kronecker product of the per-system
/// discards, first system most significant).
pub fn discard_of(systems: &[GptSystem]) -> Vec<f64> {
    discard_of_systems(&systems.iter().collect::<Vec<_>>())
}

/// One party's share of the wires of a multipartite map.
#[derive(Debug, Clone, PartialEq)]
pub struct Party {
    pub in_wires: Vec<usize>,
    pub out_wires: Vec<usize>,
}

/// Coarse classification of a map by how it treats the discard effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapClass {
    /// `discard_out ∘ M = discard_in`: the class of channels.
    DiscardPreserving,
    /// `discard_in − Mᵀ discard_out` is an effect: subnormalized operations.
    DiscardNonIncreasing,
    General,
}

/// A linear map between lists of GPT systems with a party partition of its
/// wires.
///
/// The matrix acts on coordinates with the Kronecker index convention: wire 0
/// is the most significant digit of the joint index on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedMap {
    in_systems: Vec<GptSystem>,
    out_systems: Vec<GptSystem>,
    parties: Vec<Party>,
    matrix: RealMatrix,
}

impl PartitionedMap {
    /// Validates wire bookkeeping: the matrix shape must match the system
    /// dimensions and every wire must belong to exactly one party.
    pub fn new(
        in_systems: Vec<GptSystem>,
        out_systems: Vec<GptSystem>,
        parties: Vec<Party>,
        matrix: RealMatrix,
    ) -> Result<Self> {
        let in_dim: usize = in_systems.iter().map(|s| s.dim()).product();
        let out_dim: usize = out_systems.iter().map(|s| s.dim()).product();
        if matrix.rows() != out_dim || matrix.cols() != in_dim {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "map matrix is {}x{}, systems require {out_dim}x{in_dim}",
                    matrix.rows(),
                    matrix.cols()
                ),
            });
        }
        let mut in_seen = vec![false; in_systems.len()];
        let mut out_seen = vec![false; out_systems.len()];
        for (p, party) in parties.iter().enumerate() {
            for &w in &party.in_wires {
                if w >= in_systems.len() {
                    return Err(Error::IndexOutOfRange {
                        context: format!("party {p} references input wire {w}"),
                    });
                }
                if std::mem::replace(&mut in_seen[w], true) {
                    return Err(Error::IndexOutOfRange {
                        context: format!("input wire {w} assigned to two parties"),
                    });
                }
            }
            for &w in &party.out_wires {
                if w >= out_systems.len() {
                    return Err(Error::IndexOutOfRange {
                        context: format!("party {p} references output wire {w}"),
                    });
                }
                if std::mem::replace(&mut out_seen[w], true) {
                    return Err(Error::IndexOutOfRange {
                        context: format!("output wire {w} assigned to two parties"),
                    });
                }
            }
        }
        if in_seen.iter().any(|&s| !s) || out_seen.iter().any(|&s| !s) {
            return Err(Error::IndexOutOfRange {
                context: "every wire must belong to exactly one party".into(),
            });
        }
        Ok(Self {
            in_systems,
            out_systems,
            parties,
            matrix,
        })
    }

    /// Single-party map with one input and one output wire.
    pub fn single_party(
        in_system: GptSystem,
        out_system: GptSystem,
        matrix: RealMatrix,
    ) -> Result<Self> {
        Self::new(
            vec![in_system],
            vec![out_system],
            vec![Party {
                in_wires: vec![0],
                out_wires: vec![0],
            }],
            matrix,
        )
    }

    /// Identity channel on a system.
    pub fn identity(system: GptSystem) -> Self {
        let matrix = RealMatrix::identity(system.dim());
        Self::single_party(system.clone(), system, matrix).expect("identity shapes always match")
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn in_systems(&self) -> &[GptSystem] {
        &self.in_systems
    }

    pub fn out_systems(&self) -> &[GptSystem] {
        &self.out_systems
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn party_count(&self) -> usize {
        self.parties.len()
    }

    pub fn in_dim(&self) -> usize {
        self.in_systems.iter().map(|s| s.dim()).product()
    }

    pub fn out_dim(&self) -> usize {
        self.out_systems.iter().map(|s| s.dim()).product()
    }

    pub fn in_wire_dims(&self) -> Vec<usize> {
        self.in_systems.iter().map(|s| s.dim()).collect()
    }

    pub fn out_wire_dims(&self) -> Vec<usize> {
        self.out_systems.iter().map(|s| s.dim()).collect()
    }

    /// `‖discard_out ∘ M − discard_in‖∞`.
    pub fn discard_deviation(&self) -> f64 {
        let pushed = self
            .matrix
            .vec_mul(&discard_of(&self.out_systems))
            .expect("matrix rows match output dimension");
        let discard_in = discard_of(&self.in_systems);
        pushed
            .iter()
            .zip(&discard_in)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// Parallel composition: Kronecker product of the matrices, concatenated
/// wire lists, parties kept separate with re-indexed wires.
pub fn compose_parallel(maps: &[PartitionedMap]) -> Result<PartitionedMap> {
    if maps.is_empty() {
        return Err(Error::ShapeMismatch {
            context: "parallel composition of zero maps".into(),
        });
    }
    let mut in_systems = Vec::new();
    let mut out_systems = Vec::new();
    let mut parties = Vec::new();
    let mut matrix = RealMatrix::identity(1);
    for map in maps {
        let in_offset = in_systems.len();
        let out_offset = out_systems.len();
        in_systems.extend(map.in_systems.iter().cloned());
        out_systems.extend(map.out_systems.iter().cloned());
        for party in &map.parties {
            parties.push(Party {
                in_wires: party.in_wires.iter().map(|&w| w + in_offset).collect(),
                out_wires: party.out_wires.iter().map(|&w| w + out_offset).collect(),
            });
        }
        matrix = matrix.kron(&map.matrix);
    }
    PartitionedMap::new(in_systems, out_systems, parties, matrix)
}

/// `discard_out ∘ M = discard_in` within `tol`.
pub fn is_discard_preserving(map: &PartitionedMap, tol: f64) -> bool {
    map.discard_deviation() <= tol
}

/// `discard_in − Mᵀ discard_out` must be an effect of the composite input
/// system. Discard-preserving maps pass with the zero effect.
pub fn is_discard_nonincreasing(map: &PartitionedMap, tol: f64) -> Result<bool> {
    let pushed = map
        .matrix
        .vec_mul(&discard_of(&map.out_systems))
        .expect("matrix rows match output dimension");
    let discard_in = discard_of(&map.in_systems);
    let remainder: Vec<f64> = discard_in
        .iter()
        .zip(&pushed)
        .map(|(&d, &p)| d - p)
        .collect();
    let cone = composite_cone(
        &map.in_systems
            .iter()
            .map(|s| s.effect_cone())
            .collect::<Vec<_>>(),
    )?;
    cone.contains(&remainder, tol)
}

impl MapClass {
    /// Strongest class the map satisfies at tolerance `tol`.
    pub fn of(map: &PartitionedMap, tol: f64) -> Result<MapClass> {
        if is_discard_preserving(map, tol) {
            return Ok(MapClass::DiscardPreserving);
        }
        if is_discard_nonincreasing(map, tol)? {
            return Ok(MapClass::DiscardNonIncreasing);
        }
        Ok(MapClass::General)
    }
}

/// Effects and states certifying the measure-and-prepare form
/// `M = Σᵢ sᵢ eᵢᵀ` with `Σᵢ eᵢ = discard`.
#[derive(Debug, Clone)]
pub struct MeasureAndPrepare {
    pub effects: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
}

/// Builds the measure-and-prepare channel `Σᵢ sᵢ eᵢᵀ` after validating that
/// the effects are in the effect cone and sum to discard, and the states are
/// normalized states.
pub fn make_measure_and_prepare(
    system_in: &GptSystem,
    system_out: &GptSystem,
    effects: &[Vec<f64>],
    states: &[Vec<f64>],
    tol: f64,
) -> Result<PartitionedMap> {
    if effects.len() != states.len() || effects.is_empty() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "{} effects paired with {} states",
                effects.len(),
                states.len()
            ),
        });
    }
    let mut effect_sum = vec![0.0; system_in.dim()];
    for (k, e) in effects.iter().enumerate() {
        if e.len() != system_in.dim() {
            return Err(Error::ShapeMismatch {
                context: format!("effect {k} has length {}", e.len()),
            });
        }
        if !system_in.effect_cone().contains(e, tol)? {
            return Err(Error::NotAnEffect {
                context: format!("effect {k} is outside the effect cone"),
            });
        }
        for (s, &x) in effect_sum.iter_mut().zip(e) {
            *s += x;
        }
    }
    let deviation = effect_sum
        .iter()
        .zip(system_in.discard())
        .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
    if deviation > crate::TOL_ALGEBRAIC {
        return Err(Error::EffectsDontSumToDiscard { deviation });
    }
    for (k, s) in states.iter().enumerate() {
        if s.len() != system_out.dim() {
            return Err(Error::ShapeMismatch {
                context: format!("state {k} has length {}", s.len()),
            });
        }
        if !system_out.is_normalized_state(s, tol)? {
            return Err(Error::NotAState {
                context: format!("state {k} is not a normalized state"),
            });
        }
    }
    let mut matrix = RealMatrix::zeros(system_out.dim(), system_in.dim());
    for (e, s) in effects.iter().zip(states) {
        for (i, &si) in s.iter().enumerate() {
            for (j, &ej) in e.iter().enumerate() {
                matrix.set(i, j, matrix.at(i, j) + si * ej);
            }
        }
    }
    PartitionedMap::single_party(system_in.clone(), system_out.clone(), matrix)
}

/// The cone of vectorized rank-one maps `s eᵀ` with `e` an effect-cone ray
/// and `s` a normalized state-cone ray. Vectorization is row-major, matching
/// [`RealMatrix::entries`]. Only defined for polyhedral theories.
pub fn rank_one_cone(system_in: &GptSystem, system_out: &GptSystem) -> Result<ConeDescription> {
    let effect_gens = match system_in.effect_cone() {
        ConeDescription::Polyhedral { generators, .. } => generators,
        _ => {
            return Err(Error::UnsupportedCone {
                context: "rank-one cone requires a polyhedral effect cone".into(),
            })
        }
    };
    let state_gens = match system_out.state_cone() {
        ConeDescription::Polyhedral { generators, .. } => generators,
        _ => {
            return Err(Error::UnsupportedCone {
                context: "rank-one cone requires a polyhedral state cone".into(),
            })
        }
    };
    let discard = system_out.discard();
    let mut gens = Vec::with_capacity(effect_gens.len() * state_gens.len());
    for s in state_gens {
        let c = dot(discard, s);
        if c <= crate::TOL_ALGEBRAIC {
            return Err(Error::NotAState {
                context: "state cone ray annihilated by discard cannot be normalized".into(),
            });
        }
        let normalized: Vec<f64> = s.iter().map(|&x| x / c).collect();
        for e in effect_gens {
            // vec(s eᵀ) in row-major order.
            let mut v = Vec::with_capacity(normalized.len() * e.len());
            for &si in &normalized {
                for &ej in e {
                    v.push(si * ej);
                }
            }
            gens.push(v);
        }
    }
    ConeDescription::polyhedral(system_out.dim() * system_in.dim(), gens)
}

/// Certifies the measure-and-prepare form of a single-party map: the map must
/// be discard-preserving and its vectorization must lie in the rank-one cone.
/// Returns the effects and states extracted from the LP certificate, or
/// `None` when the map is not measure-and-prepare.
pub fn measure_and_prepare_certificate(
    map: &PartitionedMap,
    tol: f64,
) -> Result<Option<MeasureAndPrepare>> {
    if map.in_systems.len() != 1 || map.out_systems.len() != 1 {
        return Err(Error::ShapeMismatch {
            context: "measure-and-prepare certification expects a single-party map".into(),
        });
    }
    if !is_discard_preserving(map, tol) {
        return Ok(None);
    }
    let system_in = &map.in_systems[0];
    let system_out = &map.out_systems[0];
    let cone = rank_one_cone(system_in, system_out)?;
    let membership = cone_member(&cone, map.matrix.entries(), tol)?;
    let Some(lambda) = membership.certificate else {
        return Ok(None);
    };
    // Unpack the certificate: generator (s, e) index pairs follow the
    // construction order of `rank_one_cone`.
    let effect_gens = match system_in.effect_cone() {
        ConeDescription::Polyhedral { generators, .. } => generators.clone(),
        _ => unreachable!(),
    };
    let state_gens = match system_out.state_cone() {
        ConeDescription::Polyhedral { generators, .. } => generators.clone(),
        _ => unreachable!(),
    };
    let discard = system_out.discard();
    let mut effects = Vec::new();
    let mut states = Vec::new();
    for (k, &l) in lambda.iter().enumerate() {
        if l <= crate::DROP_TOL {
            continue;
        }
        let s_idx = k / effect_gens.len();
        let e_idx = k % effect_gens.len();
        let c = dot(discard, &state_gens[s_idx]);
        states.push(state_gens[s_idx].iter().map(|&x| x / c).collect());
        effects.push(effect_gens[e_idx].iter().map(|&x| l * x).collect());
    }
    Ok(Some(MeasureAndPrepare { effects, states }))
}

/// True when the single-party map is measure-and-prepare (discard-preserving
/// and inside the rank-one cone). Polyhedral theories only.
pub fn is_measure_and_prepare(map: &PartitionedMap, tol: f64) -> Result<bool> {
    Ok(measure_and_prepare_certificate(map, tol)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal classical system: point masses on `d` labels, nonnegative
    /// functions as effects, all-ones discard.
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

    /// Square-state-space system used across the tests: states over the unit
    /// square, effects in its dual cone, discard (1, 0, 0).
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

    #[test]
    fn discard_must_be_interior() {
        let gens = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        // (1, 0) lies on the boundary of the positive quadrant.
        let err = GptSystem::new(
            "bad",
            2,
            ConeDescription::polyhedral(2, gens.clone()).unwrap(),
            ConeDescription::polyhedral(2, gens).unwrap(),
            vec![1.0, 0.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotAnEffect { .. }));
    }

    #[test]
    fn composite_discard_is_interior() {
        let sq = square_system();
        let composite = GptSystem::composite(&[&sq, &sq]).unwrap();
        assert_eq!(composite.dim(), 9);
        let interior =
            strict_interior(composite.effect_cone(), composite.discard(), 1e-9).unwrap();
        assert!(interior);
    }

    #[test]
    fn compose_parallel_kronecks_matrices_and_offsets_wires() {
        let c2 = classical(2);
        let m1 = PartitionedMap::identity(c2.clone());
        let flip = PartitionedMap::single_party(
            c2.clone(),
            c2.clone(),
            RealMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let joint = compose_parallel(&[m1, flip]).unwrap();
        assert_eq!(joint.party_count(), 2);
        assert_eq!(joint.parties()[1].in_wires, vec![1]);
        assert_eq!(joint.in_dim(), 4);
        // Identity ⊗ flip swaps the low-order bit.
        assert_eq!(joint.matrix().at(0, 1), 1.0);
        assert_eq!(joint.matrix().at(1, 0), 1.0);
        assert_eq!(joint.matrix().at(2, 3), 1.0);
    }

    #[test]
    fn discard_preservation_of_stochastic_matrix() {
        let c2 = classical(2);
        let stochastic = PartitionedMap::single_party(
            c2.clone(),
            c2.clone(),
            RealMatrix::from_rows(&[vec![0.3, 0.9], vec![0.7, 0.1]]).unwrap(),
        )
        .unwrap();
        assert!(is_discard_preserving(&stochastic, 1e-9));
        let leaky = PartitionedMap::single_party(
            c2.clone(),
            c2,
            RealMatrix::from_rows(&[vec![0.3, 0.5], vec![0.2, 0.1]]).unwrap(),
        )
        .unwrap();
        assert!(!is_discard_preserving(&leaky, 1e-9));
        // Substochastic: discard-nonincreasing but not preserving.
        assert!(is_discard_nonincreasing(&leaky, 1e-9).unwrap());
        assert_eq!(MapClass::of(&leaky, 1e-9).unwrap(), MapClass::DiscardNonIncreasing);
        let gainy = PartitionedMap::single_party(
            classical(2),
            classical(2),
            RealMatrix::from_rows(&[vec![0.8, 0.5], vec![0.7, 0.6]]).unwrap(),
        )
        .unwrap();
        assert_eq!(MapClass::of(&gainy, 1e-9).unwrap(), MapClass::General);
    }

    #[test]
    fn make_measure_and_prepare_validates_inputs() {
        let sq = square_system();
        // Fine: two-outcome measurement along the first axis, re-prepare corners.
        let ok = make_measure_and_prepare(
            &sq,
            &sq,
            &[vec![0.5, 0.5, 0.0], vec![0.5, -0.5, 0.0]],
            &[vec![1.0, 1.0, 1.0], vec![1.0, -1.0, -1.0]],
            1e-9,
        )
        .unwrap();
        assert!(is_discard_preserving(&ok, 1e-9));

        let bad_sum = make_measure_and_prepare(
            &sq,
            &sq,
            &[vec![0.5, 0.5, 0.0], vec![0.25, -0.25, 0.0]],
            &[vec![1.0, 1.0, 1.0], vec![1.0, -1.0, -1.0]],
            1e-9,
        )
        .unwrap_err();
        assert!(matches!(bad_sum, Error::EffectsDontSumToDiscard { .. }));

        let bad_state = make_measure_and_prepare(
            &sq,
            &sq,
            &[vec![0.5, 0.5, 0.0], vec![0.5, -0.5, 0.0]],
            &[vec![1.0, 2.0, 0.0], vec![1.0, -1.0, -1.0]],
            1e-9,
        )
        .unwrap_err();
        assert!(matches!(bad_state, Error::NotAState { .. }));

        let bad_effect = make_measure_and_prepare(
            &sq,
            &sq,
            &[vec![1.5, 1.5, 0.0], vec![-0.5, -1.5, 0.0]],
            &[vec![1.0, 1.0, 1.0], vec![1.0, -1.0, -1.0]],
            1e-9,
        )
        .unwrap_err();
        assert!(matches!(bad_effect, Error::NotAnEffect { .. }));
    }

    #[test]
    fn classical_stochastic_maps_are_measure_and_prepare() {
        let c2 = classical(2);
        let stochastic = PartitionedMap::single_party(
            c2.clone(),
            c2.clone(),
            RealMatrix::from_rows(&[vec![0.3, 0.9], vec![0.7, 0.1]]).unwrap(),
        )
        .unwrap();
        let cert = measure_and_prepare_certificate(&stochastic, 1e-9)
            .unwrap()
            .expect("stochastic maps are measure-and-prepare");
        // Rebuilding from the certificate reproduces the map.
        let rebuilt =
            make_measure_and_prepare(&c2, &c2, &cert.effects, &cert.states, 1e-9).unwrap();
        assert!(
            rebuilt
                .matrix()
                .max_abs_diff(stochastic.matrix())
                .unwrap()
                < 1e-9
        );
    }

    #[test]
    fn square_identity_is_not_measure_and_prepare() {
        let sq = square_system();
        let id = PartitionedMap::identity(sq);
        assert!(!is_measure_and_prepare(&id, 1e-9).unwrap());
    }

    #[test]
    fn signed_dp_map_is_not_measure_and_prepare() {
        let c2 = classical(2);
        // Column sums are 1 but an entry is negative: DP yet outside the
        // rank-one cone (classical rank-one cone = nonnegative matrices).
        let signed = PartitionedMap::single_party(
            c2.clone(),
            c2,
            RealMatrix::from_rows(&[vec![1.2, 0.4], vec![-0.2, 0.6]]).unwrap(),
        )
        .unwrap();
        assert!(is_discard_preserving(&signed, 1e-9));
        assert!(!is_measure_and_prepare(&signed, 1e-9).unwrap());
    }
}
