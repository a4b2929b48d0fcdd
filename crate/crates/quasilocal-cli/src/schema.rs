//! On-disk JSON formats and their conversion to library objects.
//!
//! Both formats carry an explicit `format_version` (currently 1). Numbers
//! are serialized as shortest-round-trip decimals, so writing and re-reading
//! a file reproduces every entry exactly and identical inputs produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use quasilocal::duotensor::FiducialFrame;
use quasilocal::model::{Party, PartitionedMap};
use quasilocal::numerics::RealMatrix;
use quasilocal::theories::{build_theory, TheoryId};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// A multipartite GPT channel: per-party theories plus the map matrix in
/// GPT coordinates (row-major, party 0 most significant on both sides).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub format_version: u32,
    pub parties: Vec<PartyEntry>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartyEntry {
    pub in_theory: String,
    pub out_theory: String,
}

/// An affine mixture of product local maps, as produced by `decompose`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureFile {
    pub format_version: u32,
    /// Comma-separated per-party `in>out` theory ids.
    pub frame_id: String,
    pub terms: Vec<TermEntry>,
    pub negativity: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermEntry {
    pub weight: f64,
    /// One `dim_out × dim_in` matrix per party, row-major.
    pub factors: Vec<Vec<Vec<f64>>>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Malformed(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Malformed(format!("cannot parse {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Malformed(format!("cannot serialize: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Malformed(format!("cannot write {}: {e}", path.display())))
}

pub fn parse_theory(id: &str) -> Result<TheoryId, CliError> {
    TheoryId::parse(id)
        .ok_or_else(|| CliError::Malformed(format!("unknown theory id {id:?}")))
}

/// Per-party `(in, out)` theory pairs of a channel file.
pub fn channel_parties(file: &ChannelFile) -> Result<Vec<(TheoryId, TheoryId)>, CliError> {
    if file.format_version != FORMAT_VERSION {
        return Err(CliError::Malformed(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    if file.parties.is_empty() {
        return Err(CliError::Malformed("channel has no parties".into()));
    }
    file.parties
        .iter()
        .map(|p| Ok((parse_theory(&p.in_theory)?, parse_theory(&p.out_theory)?)))
        .collect()
}

pub struct LoadedChannel {
    pub map: PartitionedMap,
    pub parties: Vec<(TheoryId, TheoryId)>,
    pub in_frames: Vec<FiducialFrame>,
    pub out_frames: Vec<FiducialFrame>,
}

/// Builds the library objects for a channel file, verifying the matrix shape
/// against the declared theories.
pub fn load_channel(file: &ChannelFile) -> Result<LoadedChannel, CliError> {
    let parties = channel_parties(file)?;
    let mut in_frames = Vec::with_capacity(parties.len());
    let mut out_frames = Vec::with_capacity(parties.len());
    for (in_id, out_id) in &parties {
        in_frames.push(build_theory(in_id)?);
        out_frames.push(build_theory(out_id)?);
    }
    let matrix = RealMatrix::from_rows(&file.matrix)
        .map_err(|e| CliError::Malformed(format!("bad channel matrix: {e}")))?;
    let party_list = (0..parties.len())
        .map(|i| Party {
            in_wires: vec![i],
            out_wires: vec![i],
        })
        .collect();
    let map = PartitionedMap::new(
        in_frames.iter().map(|f| f.system().clone()).collect(),
        out_frames.iter().map(|f| f.system().clone()).collect(),
        party_list,
        matrix,
    )
    .map_err(|e| CliError::Malformed(format!("channel matrix does not fit the theories: {e}")))?;
    Ok(LoadedChannel {
        map,
        parties,
        in_frames,
        out_frames,
    })
}

pub fn matrix_to_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

pub fn channel_file(
    parties: &[(TheoryId, TheoryId)],
    matrix: &RealMatrix,
    metadata: BTreeMap<String, String>,
) -> ChannelFile {
    ChannelFile {
        format_version: FORMAT_VERSION,
        parties: parties
            .iter()
            .map(|(i, o)| PartyEntry {
                in_theory: i.to_string(),
                out_theory: o.to_string(),
            })
            .collect(),
        matrix: matrix_to_rows(matrix),
        metadata,
    }
}

/// `in>out` per party, joined with commas.
pub fn frame_id(parties: &[(TheoryId, TheoryId)]) -> String {
    parties
        .iter()
        .map(|(i, o)| format!("{i}>{o}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_frame_id(id: &str) -> Result<Vec<(TheoryId, TheoryId)>, CliError> {
    id.split(',')
        .map(|pair| {
            let (i, o) = pair
                .split_once('>')
                .ok_or_else(|| CliError::Malformed(format!("bad frame_id segment {pair:?}")))?;
            Ok((parse_theory(i)?, parse_theory(o)?))
        })
        .collect()
}

/// Validates a mixture file: version, shape consistency, and agreement of
/// the stored negativity with the weights.
pub fn validate_mixture(file: &MixtureFile) -> Result<(), CliError> {
    if file.format_version != FORMAT_VERSION {
        return Err(CliError::Malformed(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    parse_frame_id(&file.frame_id)?;
    if file.terms.is_empty() {
        return Err(CliError::Domain(quasilocal::Error::EmptyMixture));
    }
    let parties = file.terms[0].factors.len();
    if parties == 0 || file.terms.iter().any(|t| t.factors.len() != parties) {
        return Err(CliError::Malformed(
            "terms disagree on the number of parties".into(),
        ));
    }
    let weights: Vec<f64> = file.terms.iter().map(|t| t.weight).collect();
    let recomputed = quasilocal::decompose::negativity(&weights)?;
    if (recomputed - file.negativity).abs() > 1e-9 {
        return Err(CliError::Malformed(format!(
            "negativity field {} disagrees with the weights ({recomputed})",
            file.negativity
        )));
    }
    Ok(())
}

pub fn mixture_terms(
    file: &MixtureFile,
) -> Result<Vec<quasilocal::decompose::MixtureTerm>, CliError> {
    file.terms
        .iter()
        .map(|t| {
            let factors = t
                .factors
                .iter()
                .map(|rows| RealMatrix::from_rows(rows))
                .collect::<quasilocal::Result<Vec<_>>>()
                .map_err(|e| CliError::Malformed(format!("bad factor matrix: {e}")))?;
            Ok(quasilocal::decompose::MixtureTerm {
                weight: t.weight,
                factors,
            })
        })
        .collect()
}
