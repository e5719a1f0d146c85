//! JSON file formats and CSV number formatting.
//!
//! Complex numbers are `[re, im]` pairs. Configurations are occupation
//! arrays in register order, or in target order for operator matrices.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use ssrlab_core::commitment::CommitmentInstance;
use ssrlab_core::protocol::ProtocolStep;
use ssrlab_core::superselection::sector_conditioned;
use ssrlab_core::{CMatrix, Charge, LocalOperator, ModeId, ModeSpec, Party, Register, SparseState, Statistics, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartyDto {
    Alice,
    Bob,
}

impl From<PartyDto> for Party {
    fn from(p: PartyDto) -> Self {
        match p {
            PartyDto::Alice => Party::Alice,
            PartyDto::Bob => Party::Bob,
        }
    }
}

impl From<Party> for PartyDto {
    fn from(p: Party) -> Self {
        match p {
            Party::Alice => PartyDto::Alice,
            Party::Bob => PartyDto::Bob,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindDto {
    Fermion,
    Boson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeDto {
    pub id: String,
    pub kind: KindDto,
    /// Required for bosons; fermions are always 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<u8>,
    pub owner: PartyDto,
    #[serde(default)]
    pub restricted: bool,
    #[serde(default)]
    pub free: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterDto {
    pub modes: Vec<ModeDto>,
}

impl RegisterDto {
    pub fn build(&self) -> anyhow::Result<Register> {
        let specs = self
            .modes
            .iter()
            .map(|m| {
                let base = match (m.kind, m.q_max) {
                    (KindDto::Fermion, None | Some(1)) => ModeSpec::fermion(m.id.as_str(), m.owner.into()),
                    (KindDto::Fermion, Some(q)) => bail!("fermion mode `{}` has q_max {q}", m.id),
                    (KindDto::Boson, Some(q)) => ModeSpec::boson(m.id.as_str(), q, m.owner.into()),
                    (KindDto::Boson, None) => bail!("boson mode `{}` needs q_max", m.id),
                };
                Ok(ModeSpec {
                    restricted: m.restricted,
                    free: m.free,
                    ..base
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(Register::new(specs)?)
    }

    pub fn from_register(register: &Register) -> Self {
        Self {
            modes: register
                .modes()
                .iter()
                .map(|m| ModeDto {
                    id: m.id.to_string(),
                    kind: match m.statistics {
                        Statistics::Fermion => KindDto::Fermion,
                        Statistics::Boson => KindDto::Boson,
                    },
                    q_max: (m.statistics == Statistics::Boson).then_some(m.q_max),
                    owner: m.owner.into(),
                    restricted: m.restricted,
                    free: m.free,
                })
                .collect(),
        }
    }
}

pub type ComplexDto = [f64; 2];

fn c64(z: ComplexDto) -> C64 {
    C64::new(z[0], z[1])
}

fn dto(z: C64) -> ComplexDto {
    [z.re, z.im]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDto {
    pub config: Vec<u8>,
    pub amp: ComplexDto,
}

pub fn terms_of(state: &SparseState) -> Vec<TermDto> {
    state
        .amplitudes()
        .iter()
        .map(|(cfg, a)| TermDto {
            config: cfg.occupations().to_vec(),
            amp: dto(*a),
        })
        .collect()
}

fn state_from_terms(register: Arc<Register>, terms: &[TermDto]) -> anyhow::Result<SparseState> {
    Ok(SparseState::from_amplitudes(
        register,
        terms.iter().map(|t| (t.config.clone(), c64(t.amp))),
    )?)
}

/// A state together with its register. Amplitudes are normalized on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDto {
    pub register: RegisterDto,
    pub amplitudes: Vec<TermDto>,
}

impl StateDto {
    pub fn build(&self) -> anyhow::Result<SparseState> {
        state_from_terms(Arc::new(self.register.build()?), &self.amplitudes)
    }

    pub fn from_state(state: &SparseState) -> Self {
        Self {
            register: RegisterDto::from_register(state.register()),
            amplitudes: terms_of(state),
        }
    }
}

pub type MatrixDto = Vec<Vec<ComplexDto>>;

fn matrix(m: &MatrixDto) -> anyhow::Result<CMatrix> {
    let rows: Vec<Vec<C64>> = m.iter().map(|r| r.iter().map(|&z| c64(z)).collect()).collect();
    CMatrix::from_rows(&rows).ok_or_else(|| anyhow!("matrix rows have different lengths"))
}

fn matrix_dto(m: &CMatrix) -> MatrixDto {
    m.to_rows().into_iter().map(|r| r.into_iter().map(dto).collect()).collect()
}

/// An operator on named modes: either a full matrix over the targets'
/// subset basis, or unitary blocks keyed by the targets' restricted charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDto {
    pub targets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector_blocks: Option<BTreeMap<Charge, MatrixDto>>,
}

impl OperatorDto {
    pub fn target_ids(&self) -> Vec<ModeId> {
        self.targets.iter().map(|s| ModeId::from(s.as_str())).collect()
    }

    pub fn build(&self, register: &Register) -> anyhow::Result<LocalOperator> {
        let targets = self.target_ids();
        let positions = register.positions(&targets)?;
        let dims: Vec<usize> = positions.iter().map(|&p| register.mode(p).dim()).collect();
        match (&self.matrix, &self.sector_blocks) {
            (Some(m), None) => Ok(LocalOperator::dense(dims, matrix(m)?)?),
            (None, Some(blocks)) => {
                let blocks = blocks
                    .iter()
                    .map(|(k, m)| Ok((*k, matrix(m)?)))
                    .collect::<anyhow::Result<BTreeMap<_, _>>>()?;
                Ok(sector_conditioned(&blocks, &targets, register)?)
            }
            _ => bail!("operator needs exactly one of `matrix` and `sector_blocks`"),
        }
    }

    pub fn from_operator(op: &LocalOperator, targets: &[ModeId]) -> anyhow::Result<Self> {
        Ok(Self {
            targets: targets.iter().map(|t| t.to_string()).collect(),
            matrix: Some(matrix_dto(&op.to_dense()?)),
            sector_blocks: None,
        })
    }
}

/// Commitment instance: both branches on one register, fixed total charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDto {
    pub register: RegisterDto,
    #[serde(rename = "Q_R")]
    pub total_charge: Charge,
    pub psi0: Vec<TermDto>,
    pub psi1: Vec<TermDto>,
}

impl InstanceDto {
    pub fn build(&self) -> anyhow::Result<CommitmentInstance> {
        let register = Arc::new(self.register.build()?);
        let psi0 = state_from_terms(register.clone(), &self.psi0).context("psi0")?;
        let psi1 = state_from_terms(register, &self.psi1).context("psi1")?;
        Ok(CommitmentInstance::new(self.total_charge, psi0, psi1)?)
    }
}

/// Where an apply step finds its operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorRef {
    /// Path to an operator file, relative to the script.
    File(String),
    Inline(OperatorDto),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum StepDto {
    Apply {
        party: PartyDto,
        operator: OperatorRef,
    },
    Transfer {
        mode: String,
        from: PartyDto,
        to: PartyDto,
    },
    Measure {
        party: PartyDto,
        targets: Vec<String>,
        seed: u64,
    },
}

impl StepDto {
    /// Resolves operator references against `register`; `base` is the
    /// directory of the script file.
    pub fn build(&self, register: &Register, base: &Path) -> anyhow::Result<ProtocolStep> {
        Ok(match self {
            StepDto::Apply { party, operator } => {
                let dto = match operator {
                    OperatorRef::Inline(dto) => dto.clone(),
                    OperatorRef::File(path) => read_json(&base.join(path))?,
                };
                ProtocolStep::Apply {
                    party: (*party).into(),
                    operator: dto.build(register)?,
                    targets: dto.target_ids(),
                }
            }
            StepDto::Transfer { mode, from, to } => ProtocolStep::Transfer {
                mode: mode.as_str().into(),
                from: (*from).into(),
                to: (*to).into(),
            },
            StepDto::Measure { party, targets, seed } => ProtocolStep::Measure {
                party: (*party).into(),
                targets: targets.iter().map(|s| ModeId::from(s.as_str())).collect(),
                seed: *seed,
            },
        })
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// C's `%.17g`: 17 significant digits, trailing zeros trimmed.
pub fn g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
