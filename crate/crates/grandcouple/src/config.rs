//! JSON experiment configuration. The schema is documented in
//! `docs/config.md`; unknown fields are rejected.

use std::path::{Path, PathBuf};

use grandcouple_core::grand::{Method, MixtureVariant};
use grandcouple_core::measures::TForm;
use grandcouple_core::Measure;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_err, HarnessError, Result};

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multimarginal: Option<MultimarginalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meet: Option<MeetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime: Option<RuntimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnose: Option<DiagnoseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonize: Option<HarmonizeConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form (after command-line overrides).
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1).max(1)
    }
}

/// JSON description of a measure, tagged by `kind`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    Finite {
        probs: Vec<f64>,
    },
    GaussianDiag {
        mean: Vec<f64>,
        var: Vec<f64>,
    },
    ShiftedExponential {
        shift: f64,
    },
    StudentTWalk {
        center: Vec<f64>,
        scale: f64,
        df: f64,
        #[serde(default)]
        form: FormSpec,
    },
    Banana {
        sigma1: f64,
        sigma2: f64,
        b: f64,
    },
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Mixture {
        components: Vec<MeasureSpec>,
        weights: Vec<f64>,
    },
}

impl MeasureSpec {
    pub fn build(&self) -> Result<Measure> {
        Ok(match self {
            Self::Finite { probs } => Measure::finite(probs.clone())?,
            Self::GaussianDiag { mean, var } => Measure::gaussian(mean.clone(), var.clone())?,
            Self::ShiftedExponential { shift } => Measure::shifted_exponential(*shift)?,
            Self::StudentTWalk {
                center,
                scale,
                df,
                form,
            } => Measure::student_t_form(center.clone(), *scale, *df, (*form).into())?,
            Self::Banana { sigma1, sigma2, b } => Measure::banana(*sigma1, *sigma2, *b)?,
            Self::UniformBox { lo, hi } => Measure::uniform_box(lo.clone(), hi.clone())?,
            Self::Mixture {
                components,
                weights,
            } => {
                let cs = components
                    .iter()
                    .map(Self::build)
                    .collect::<Result<Vec<_>>>()?;
                Measure::mixture(cs, weights.clone())?
            }
        })
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FormSpec {
    #[default]
    Product,
    Joint,
}

impl From<FormSpec> for TForm {
    fn from(f: FormSpec) -> Self {
        match f {
            FormSpec::Product => TForm::Product,
            FormSpec::Joint => TForm::Joint,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
pub enum MethodName {
    #[serde(rename = "pmc-1step")]
    Pmc1step,
    #[serde(rename = "pmc-2step")]
    Pmc2step,
    #[serde(rename = "star-1step")]
    Star1step,
    #[serde(rename = "star-2step")]
    Star2step,
}

impl MethodName {
    pub const ALL: [MethodName; 4] = [
        Self::Star2step,
        Self::Star1step,
        Self::Pmc2step,
        Self::Pmc1step,
    ];
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Pmc1step => Method::Pmc1Step,
            MethodName::Pmc2step => Method::Pmc2Step,
            MethodName::Star1step => Method::Star1Step,
            MethodName::Star2step => Method::Star2Step,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    #[default]
    ExactAlpha,
    BerHalf,
}

impl From<VariantName> for MixtureVariant {
    fn from(v: VariantName) -> Self {
        match v {
            VariantName::ExactAlpha => MixtureVariant::ExactAlpha,
            VariantName::BerHalf => MixtureVariant::BerHalf,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalFamily {
    /// `P^i = i + Exp(1)`, `i = 1..C`.
    ShiftedExponential,
    /// Dirichlet weights on a few random states of a common finite space.
    RandomSparseDiscrete,
    /// `C` copies of `base`. Every coupler except the greedy list gives
    /// `G = 1`; the list recursion matches one partner per round.
    Identical,
    /// Exactly the measures listed in `marginals`.
    Custom,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CouplerName {
    /// Greedy recursive list coupler, left-to-right ordering.
    List,
    /// Greedy recursive list coupler, uniformly random ordering.
    ListRandom,
    Poisson,
    RandomAnchor,
    FixedAnchor,
    RandomSequence,
}

fn default_c_grid() -> Vec<usize> {
    vec![2, 4, 8, 16, 32]
}

fn default_couplers() -> Vec<CouplerName> {
    vec![
        CouplerName::List,
        CouplerName::Poisson,
        CouplerName::RandomAnchor,
        CouplerName::RandomSequence,
    ]
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MultimarginalConfig {
    pub family: MarginalFamily,
    #[serde(default = "default_c_grid")]
    pub c: Vec<usize>,
    #[serde(default = "default_couplers")]
    pub couplers: Vec<CouplerName>,
    /// State-space size for `random-sparse-discrete`.
    #[serde(default = "default_states")]
    pub states: usize,
    /// Support size of each random marginal.
    #[serde(default = "default_support")]
    pub support: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<MeasureSpec>>,
}

fn default_states() -> usize {
    60
}

fn default_support() -> usize {
    5
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TargetFamily {
    /// `π = N(0, I_d)`, `π₀ = N(1_d, 16 I_d)`, Gaussian random walk.
    Gaussian,
    /// Product Cauchy target, `π₀ = N(0, I_d)`, Student-t(2) random walk.
    StudentT,
    /// 2-D banana target, `π₀ = Unif([-2, 2]²)`, RMALA.
    BananaRmala,
}

impl TargetFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::StudentT => "student-t",
            Self::BananaRmala => "banana-rmala",
        }
    }
}

/// Knobs shared by every command that simulates coupled MH chains.
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChainOverrides {
    /// Proposal scale; defaults to `2.4/√d` (random walks) or `0.4` (RMALA).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Degrees of freedom of the Student-t increment (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    /// Form of the Student-t increment (default joint).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal_form: Option<FormSpec>,
    /// Form of the Cauchy target (default product).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_form: Option<FormSpec>,
    /// Banana parameters `[σ₁, σ₂, b]` (default `[2, 1, 0.05]`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub banana: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<MeasureSpec>,
    #[serde(default)]
    pub variant: VariantName,
}

fn default_methods() -> Vec<MethodName> {
    MethodName::ALL.to_vec()
}

fn default_max_iter() -> u64 {
    100_000
}

fn default_censor_rate() -> f64 {
    0.01
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeetConfig {
    pub family: TargetFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<usize>>,
    #[serde(default = "default_c_grid")]
    pub c: Vec<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    #[serde(default = "default_max_iter")]
    pub max_iter: u64,
    /// Exit with code 3 when any cell censors more than this fraction.
    #[serde(default = "default_censor_rate")]
    pub max_censor_rate: f64,
    /// Also write one row per replicate to `<out>_replicates.csv`.
    #[serde(default = "yes")]
    pub per_replicate: bool,
    /// Target, start and proposal overrides.
    #[serde(default)]
    pub chain: ChainOverrides,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalName {
    Barycenter,
    SingleGaussian,
}

fn default_runtime_d() -> Vec<usize> {
    (0..10).map(|k| 1 << k).collect()
}

fn default_runtime_proposals() -> Vec<ProposalName> {
    vec![ProposalName::Barycenter, ProposalName::SingleGaussian]
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RuntimeConfig {
    #[serde(default = "default_runtime_c")]
    pub c: usize,
    #[serde(default = "default_runtime_d")]
    pub d: Vec<usize>,
    #[serde(default = "default_runtime_proposals")]
    pub proposals: Vec<ProposalName>,
    /// The single-Gaussian baseline is skipped above this dimension.
    #[serde(default = "default_max_d_single")]
    pub max_d_single: usize,
    /// Replicates slower than this are recorded as censored.
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: f64,
    /// Per-scan atom budget; exceeding it censors the replicate.
    #[serde(default = "default_atom_cap")]
    pub atom_cap: u64,
    #[serde(default)]
    pub max_censor_rate: f64,
}

fn default_runtime_c() -> usize {
    32
}

fn default_max_d_single() -> usize {
    8
}

fn default_timeout_ms() -> f64 {
    60_000.0
}

fn default_atom_cap() -> u64 {
    grandcouple_core::poisson::DEFAULT_ATOM_CAP
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub family: TargetFamily,
    /// Dimensions and chain counts of the meeting-tail bound curves.
    #[serde(default = "default_diag_d")]
    pub d: Vec<usize>,
    #[serde(default = "default_diag_c")]
    pub c: Vec<usize>,
    /// Dimensions and chain counts of the `1 − α_C` / Johnson table.
    #[serde(default = "default_table_d")]
    pub table_d: Vec<usize>,
    #[serde(default = "default_table_c")]
    pub table_c: Vec<usize>,
    #[serde(default = "default_diag_method")]
    pub method: MethodName,
    /// Last `t` of the bound curves.
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    /// Monte Carlo draws for each `α_C` estimate.
    #[serde(default = "default_alpha_samples")]
    pub alpha_samples: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: u64,
    #[serde(default = "default_censor_rate")]
    pub max_censor_rate: f64,
    /// Target, start and proposal overrides.
    #[serde(default)]
    pub chain: ChainOverrides,
}

fn default_diag_d() -> Vec<usize> {
    vec![3]
}

fn default_diag_c() -> Vec<usize> {
    vec![32, 64]
}

fn default_table_d() -> Vec<usize> {
    vec![1, 2, 3]
}

fn default_table_c() -> Vec<usize> {
    vec![2, 8, 16, 32, 64, 128]
}

fn default_diag_method() -> MethodName {
    MethodName::Pmc1step
}

fn default_horizon() -> u64 {
    200
}

fn default_alpha_samples() -> usize {
    1_000_000
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GroupCouplerName {
    /// Shared Poisson process with the barycenter proposal.
    #[default]
    Poisson,
    /// Every chain maximally coupled to the group's first chain.
    FixedAnchor,
    /// Greedy recursive list coupler.
    List,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HarmonizeConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_harmonize_d")]
    pub d: usize,
    #[serde(default = "default_harmonize_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub coupler: GroupCouplerName,
    #[serde(default = "default_init_mean")]
    pub init_mean: f64,
    #[serde(default = "default_init_var")]
    pub init_var: f64,
}

fn default_n() -> usize {
    10_000
}

fn default_m() -> usize {
    4
}

fn default_rho() -> f64 {
    0.9
}

fn default_harmonize_d() -> usize {
    20
}

fn default_harmonize_horizon() -> u64 {
    100
}

fn default_init_mean() -> f64 {
    grandcouple_core::diagnostics::AR_INIT_MEAN
}

fn default_init_var() -> f64 {
    grandcouple_core::diagnostics::AR_INIT_VAR
}

pub(crate) fn require<T: Clone>(section: &Option<T>, name: &str) -> Result<T> {
    section
        .clone()
        .ok_or_else(|| config_err(format!("config has no \"{name}\" section")))
}
