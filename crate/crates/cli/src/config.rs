//! Experiment file format. Every struct rejects unknown keys.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use vblast_core::analytic::{BranchCount, Ensemble, VblastFactor};
use vblast_core::convcode::GeneratorSpec;
use vblast_core::mimo::{Criterion, DetectionConfig, EtaMode, Ordering};
use vblast_core::modem::QamParams;
use vblast_core::rcpc::{PuncturingMatrix, RcpcFamily};
use vblast_core::simkit::{Coding, FadingMode, LinkConfig, StopRule};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Experiment {
    Spectrum(SpectrumRun),
    Analytic(AnalyticRun),
    Simulate(SimulateRun),
}

impl Experiment {
    pub fn mode(&self) -> &'static str {
        match self {
            Experiment::Spectrum(_) => "spectrum",
            Experiment::Analytic(_) => "analytic",
            Experiment::Simulate(_) => "simulate",
        }
    }
}

/// Mother code, blocking factor and puncturing matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    /// Octal generators, first digit holding the current-input tap.
    pub mother: Vec<String>,
    pub blocking: usize,
    /// One matrix per member: rows are mother outputs, columns time in the period.
    pub matrices: Vec<Vec<Vec<u8>>>,
}

impl FamilySpec {
    pub fn build(&self) -> Result<RcpcFamily, CliError> {
        let mother = GeneratorSpec::from_octal(&self.mother).map_err(schema)?;
        let matrices = self
            .matrices
            .iter()
            .map(|m| PuncturingMatrix::new(m.clone()))
            .collect::<vblast_core::Result<Vec<_>>>()
            .map_err(schema)?;
        RcpcFamily::new(mother, self.blocking, matrices).map_err(schema)
    }
}

/// Either explicit values or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range(GridRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Grid::Values(v) => v.clone(),
            Grid::Range(r) => {
                if !(r.step > 0.0 && r.step.is_finite() && r.start.is_finite() && r.stop.is_finite()) {
                    return Err(CliError::Schema("grid range needs a positive finite step".into()));
                }
                let n = ((r.stop - r.start) / r.step + 1e-9).floor();
                if n < 0.0 {
                    return Err(CliError::Schema("grid range stop lies below start".into()));
                }
                (0..=n as usize).map(|i| r.start + i as f64 * r.step).collect()
            }
        };
        if v.is_empty() {
            return Err(CliError::Schema("E_b/N_0 grid is empty".into()));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Schema("E_b/N_0 grid must be finite and strictly increasing".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRun {
    pub family: FamilySpec,
    #[serde(default = "default_dmax")]
    pub dmax: u32,
    /// Compare the rows with the built-in reference table and write a
    /// discrepancy report.
    #[serde(default)]
    pub compare_reference: bool,
}

fn default_dmax() -> u32 {
    15
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum CriterionSpec {
    Zf,
    Mmse,
}

impl From<CriterionSpec> for Criterion {
    fn from(c: CriterionSpec) -> Self {
        match c {
            CriterionSpec::Zf => Criterion::Zf,
            CriterionSpec::Mmse => Criterion::Mmse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum FactorSpec {
    #[default]
    Literal,
    Derived,
    Omitted,
}

impl From<FactorSpec> for VblastFactor {
    fn from(f: FactorSpec) -> Self {
        match f {
            FactorSpec::Literal => VblastFactor::Literal,
            FactorSpec::Derived => VblastFactor::Derived,
            FactorSpec::Omitted => VblastFactor::Omitted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum BranchSpec {
    #[default]
    Product,
    Subchannels,
}

impl From<BranchSpec> for BranchCount {
    fn from(b: BranchSpec) -> Self {
        match b {
            BranchSpec::Product => BranchCount::Product,
            BranchSpec::Subchannels => BranchCount::Subchannels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub realizations: usize,
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        let e = Ensemble::default();
        Self { realizations: e.realizations, seed: e.seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaSpec {
    #[default]
    Expected,
    Sampled {
        draws: usize,
        seed: u64,
    },
}

impl From<EtaSpec> for EtaMode {
    fn from(e: EtaSpec) -> Self {
        match e {
            EtaSpec::Expected => EtaMode::Expected,
            EtaSpec::Sampled { draws, seed } => EtaMode::Sampled { draws, seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AnalyticRun {
    pub family: FamilySpec,
    /// Member indices; defaults to every non-catastrophic member.
    #[serde(default)]
    pub members: Option<Vec<usize>>,
    #[serde(default = "default_qam")]
    pub qam: u32,
    pub rx: usize,
    pub tx: usize,
    pub m: f64,
    /// Branch correlation values; 0 runs the independent form.
    #[serde(default = "default_rho")]
    pub rho: Vec<f64>,
    pub criteria: Vec<CriterionSpec>,
    pub grid_db: Grid,
    #[serde(default)]
    pub factor: FactorSpec,
    #[serde(default)]
    pub branches: BranchSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub eta: EtaSpec,
    /// Spectrum truncation; defaults to `d_free + 10` per member.
    #[serde(default)]
    pub dmax: Option<u32>,
}

fn default_qam() -> u32 {
    4
}

fn default_rho() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum FadingSpec {
    #[default]
    Block,
    Fast,
    None,
}

impl From<FadingSpec> for FadingMode {
    fn from(f: FadingSpec) -> Self {
        match f {
            FadingSpec::Block => FadingMode::Block,
            FadingSpec::Fast => FadingMode::Fast,
            FadingSpec::None => FadingMode::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum OrderingSpec {
    #[default]
    Natural,
    BestFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CodingSpec {
    Uncoded,
    Rcpc {
        family: FamilySpec,
        #[serde(default)]
        interleave: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub min_errors: u64,
    pub max_trials: u64,
    #[serde(default = "default_batch")]
    pub batch: u64,
}

fn default_batch() -> u64 {
    StopRule::default().batch
}

impl Default for StopSpec {
    fn default() -> Self {
        let s = StopRule::default();
        Self { min_errors: s.min_errors, max_trials: s.max_trials, batch: s.batch }
    }
}

/// Internal consistency checks evaluated after a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GateSpec {
    /// Uncoded QPSK over the identity channel against `Q(sqrt(2 Eb/N0))`.
    AwgnClosedForm { sigmas: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SimulateRun {
    pub rx: usize,
    pub tx: usize,
    #[serde(default = "default_m")]
    pub m: f64,
    /// Branch correlation; only 0 is simulated.
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub fading: FadingSpec,
    pub criterion: CriterionSpec,
    #[serde(default)]
    pub ordering: OrderingSpec,
    #[serde(default = "default_qam")]
    pub qam: u32,
    pub coding: CodingSpec,
    pub grid_db: Grid,
    pub symbols_per_trial: usize,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub gates: Vec<GateSpec>,
}

fn default_m() -> f64 {
    1.0
}

impl SimulateRun {
    pub fn link(&self) -> Result<LinkConfig, CliError> {
        if self.rho != 0.0 {
            return Err(CliError::Schema(
                "correlated fading is only available in analytic mode; simulate needs rho = 0".into(),
            ));
        }
        let coding = match &self.coding {
            CodingSpec::Uncoded => Coding::Uncoded,
            CodingSpec::Rcpc { family, interleave } => Coding::Rcpc { family: family.build()?, interleave: *interleave },
        };
        let mut detection = DetectionConfig::new(self.criterion.into());
        detection.ordering = match self.ordering {
            OrderingSpec::Natural => Ordering::Natural,
            OrderingSpec::BestFirst => Ordering::BestFirst,
        };
        let config = LinkConfig {
            rx: self.rx,
            tx: self.tx,
            m: self.m,
            fading: self.fading.into(),
            detection,
            qam: QamParams::new(self.qam).map_err(schema)?,
            coding,
            grid_db: self.grid_db.values()?,
            symbols_per_trial: self.symbols_per_trial,
            stop: StopRule { min_errors: self.stop.min_errors, max_trials: self.stop.max_trials, batch: self.stop.batch },
            seed: self.seed,
            noiseless: self.noiseless,
        };
        config.validate().map_err(schema)?;
        for gate in &self.gates {
            match gate {
                GateSpec::AwgnClosedForm { sigmas } => {
                    let applicable = matches!(self.coding, CodingSpec::Uncoded)
                        && self.fading == FadingSpec::None
                        && self.qam == 4
                        && !self.noiseless;
                    if !applicable || !(*sigmas > 0.0) {
                        return Err(CliError::Schema(
                            "awgn_closed_form gate needs uncoded QPSK over the identity channel with noise and sigmas > 0".into(),
                        ));
                    }
                }
            }
        }
        Ok(config)
    }
}

pub fn schema<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Schema(e.to_string())
}

/// JSON schema of the experiment file.
pub fn json_schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(Experiment)).expect("schema serializes")
}
