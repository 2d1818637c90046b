//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spinbell::bell::{BoundFormula, SeesawOptions};
use spinbell::clustering::{OperatorBasis, PropagationFitOptions, NUMERIC_FLOOR};
use spinbell::linalg::{CMatrix, CVector, C64};
use spinbell::quantum::{HamiltonianSpec, Method, Model, SolverOptions, Term};
use spinbell::{Lattice, LatticeSpec, Region};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub lattice: LatticeSpec,
    /// A named model; mutually exclusive with `hamiltonian`.
    pub model: Option<Model>,
    pub hamiltonian: Option<CustomHamiltonian>,
    pub state: StateRecipe,
    /// Single-site operators for correlation scans; Pauli X, Y, Z when empty.
    #[serde(default)]
    pub basis: Vec<BasisOperator>,
    #[serde(default)]
    pub regions: RegionConfig,
    /// Bell inequality file, relative to the config file.
    pub inequality: Option<PathBuf>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub seesaw: SeesawConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Explicit Hamiltonian terms; matrices are row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomHamiltonian {
    pub max_range: Option<f64>,
    pub terms: Vec<CustomTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTerm {
    pub sites: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisOperator {
    pub label: String,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

fn complex_matrix(rows: &[Vec<[f64; 2]>], path: &str) -> CliResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|row| row.len() != n) {
        return Err(CliError::Config(format!("{path}: matrix is not square")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateRecipe {
    Ground {},
    Thermal {
        beta: f64,
        /// Critical inverse temperature below which clustering is expected.
        /// There is no closed form for it, so it is only recorded and compared.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_star: Option<f64>,
    },
    Product { initial: SiteStates },
    Quench { initial: SiteStates, times: Vec<f64> },
}

impl StateRecipe {
    pub fn is_quench(&self) -> bool {
        matches!(self, Self::Quench { .. })
    }

    /// `Some(beta < beta_star)` for thermal recipes that declare `beta_star`.
    pub fn below_beta_star(&self) -> Option<bool> {
        match self {
            Self::Thermal { beta, beta_star: Some(b) } => Some(beta < b),
            _ => None,
        }
    }
}

/// One label for every site, or one label per site.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteStates {
    Uniform(LocalState),
    PerSite(Vec<LocalState>),
}

/// Single-qubit eigenstates of the Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalState {
    /// `|0>`, the +1 eigenstate of Z.
    Up,
    Down,
    /// +1 eigenstate of X.
    Plus,
    Minus,
    PlusY,
    MinusY,
}

impl LocalState {
    pub fn vector(self) -> CVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match self {
            Self::Up => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            Self::Down => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
            Self::Plus => (C64::new(h, 0.0), C64::new(h, 0.0)),
            Self::Minus => (C64::new(h, 0.0), C64::new(-h, 0.0)),
            Self::PlusY => (C64::new(h, 0.0), C64::new(0.0, h)),
            Self::MinusY => (C64::new(h, 0.0), C64::new(0.0, -h)),
        };
        CVector::from_vec(vec![a, b])
    }
}

impl SiteStates {
    pub fn vectors(&self, n: usize) -> CliResult<Vec<CVector>> {
        match self {
            Self::Uniform(s) => Ok(vec![s.vector(); n]),
            Self::PerSite(list) if list.len() == n => Ok(list.iter().map(|s| s.vector()).collect()),
            Self::PerSite(list) => Err(CliError::Config(format!(
                "state.initial lists {} sites, lattice has {n}",
                list.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairPreset {
    /// Every unordered pair of distinct sites.
    AllSingletons,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairSelection {
    Preset(PairPreset),
    Explicit(Vec<[Vec<usize>; 2]>),
}

impl Default for PairSelection {
    fn default() -> Self {
        Self::Preset(PairPreset::AllSingletons)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    /// Region pairs for correlation scans and CHSH.
    #[serde(default)]
    pub pairs: PairSelection,
    /// Keep only pairs at distance `>= min_distance`.
    pub min_distance: Option<f64>,
    /// Keep only pairs at distance `<= max_distance`.
    pub max_distance: Option<f64>,
    /// Region sets for `bell-certify`, one region per party.
    #[serde(default)]
    pub sets: Vec<Vec<Vec<usize>>>,
}

/// Fixed constants that replace fitting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedFit {
    pub c: f64,
    pub lambda: f64,
    pub v: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub floor: f64,
    pub propagation: PropagationFitOptions,
    pub fixed: Option<FixedFit>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            floor: NUMERIC_FLOOR,
            propagation: PropagationFitOptions::default(),
            fixed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        let d = SeesawOptions::default();
        Self {
            restarts: d.restarts,
            tol: d.tol,
            max_sweeps: d.max_sweeps,
        }
    }
}

impl SeesawConfig {
    /// Options for task `index`; random starts of different tasks use
    /// disjoint seed ranges.
    pub fn options(&self, base_seed: u64, index: usize) -> SeesawOptions {
        SeesawOptions {
            restarts: self.restarts,
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            seed: base_seed.wrapping_add((index as u64) << 20),
            deterministic_start: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub dense_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            method: d.method,
            dense_threshold: d.dense_threshold,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            method: self.method,
            dense_threshold: self.dense_threshold,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    /// Overrides the formula chosen from the inequality and state.
    pub formula: Option<BoundFormula>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory, relative to the working directory.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// A parsed config plus where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Directory that relative input paths resolve against.
    pub base_dir: PathBuf,
    pub path: PathBuf,
    /// The file as read, for the input digest.
    pub text: String,
}

fn finite(value: f64, path: &str) -> CliResult<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{path}: {value} is not finite")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> CliResult<()> {
        match (&self.model, &self.hamiltonian) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("model and hamiltonian are mutually exclusive".into()))
            }
            (None, None) if !matches!(self.state, StateRecipe::Product { .. }) => {
                return Err(CliError::Config("state needs a model or hamiltonian".into()))
            }
            _ => {}
        }
        if let Some(model) = &self.model {
            let params: Vec<f64> = match *model {
                Model::Tfim { j, g } => vec![j, g],
                Model::Xxz { j, delta, h } => vec![j, delta, h],
                Model::Heisenberg { j, h } => vec![j, h],
            };
            for p in params {
                finite(p, "model")?;
            }
        }
        match &self.state {
            StateRecipe::Thermal { beta, beta_star } => {
                finite(*beta, "state.beta")?;
                if *beta < 0.0 {
                    return Err(CliError::Config(format!("state.beta: {beta} is negative")));
                }
                if let Some(b) = beta_star {
                    finite(*b, "state.beta_star")?;
                    if *b <= 0.0 {
                        return Err(CliError::Config(format!("state.beta_star: {b} is not positive")));
                    }
                }
            }
            StateRecipe::Quench { times, .. } => {
                if times.is_empty() {
                    return Err(CliError::Config("state.times: empty".into()));
                }
                for (i, &t) in times.iter().enumerate() {
                    finite(t, &format!("state.times[{i}]"))?;
                    if t < 0.0 {
                        return Err(CliError::Config(format!("state.times[{i}]: {t} is negative")));
                    }
                }
            }
            _ => {}
        }
        finite(self.fit.floor, "fit.floor")?;
        finite(self.seesaw.tol, "seesaw.tol")?;
        if let Some(f) = self.fit.fixed {
            finite(f.c, "fit.fixed.c")?;
            finite(f.lambda, "fit.fixed.lambda")?;
            if f.c.is_nan() || f.c <= 0.0 || f.lambda < 0.0 {
                return Err(CliError::Config("fit.fixed needs c > 0 and lambda >= 0".into()));
            }
            if let Some(v) = f.v {
                finite(v, "fit.fixed.v")?;
            }
        }
        for d in [self.regions.min_distance, self.regions.max_distance].into_iter().flatten() {
            finite(d, "regions distance filter")?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<LoadedConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        let config = Self::parse(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(ineq) = &config.inequality {
            let resolved = base_dir.join(ineq);
            if !resolved.is_file() {
                return Err(CliError::Config(format!("inequality: {} does not exist", resolved.display())));
            }
        }
        Ok(LoadedConfig { config, base_dir, path: path.to_path_buf(), text })
    }

    pub fn hamiltonian_spec(&self, lattice: &Lattice) -> CliResult<HamiltonianSpec> {
        if let Some(model) = &self.model {
            return Ok(model.spec(lattice)?);
        }
        let custom = self
            .hamiltonian
            .as_ref()
            .ok_or_else(|| CliError::Config("state needs a model or hamiltonian".into()))?;
        let mut terms = Vec::with_capacity(custom.terms.len());
        for (n, term) in custom.terms.iter().enumerate() {
            let matrix = complex_matrix(&term.matrix, &format!("hamiltonian.terms[{n}].matrix"))?;
            let support = Region::new(term.sites.clone())
                .map_err(|e| CliError::Config(format!("hamiltonian.terms[{n}].sites: {e}")))?;
            terms.push(Term { support, matrix });
        }
        let mut spec = HamiltonianSpec::new(terms);
        if let Some(r) = custom.max_range {
            spec.max_range = r;
        }
        Ok(spec)
    }

    pub fn operator_basis(&self, lattice: &Lattice) -> CliResult<OperatorBasis> {
        if self.basis.is_empty() {
            if lattice.local_dim() != 2 {
                return Err(CliError::Config("basis: required when local_dim is not 2".into()));
            }
            return Ok(OperatorBasis::pauli());
        }
        let ops = self
            .basis
            .iter()
            .enumerate()
            .map(|(n, b)| Ok((b.label.clone(), complex_matrix(&b.matrix, &format!("basis[{n}].matrix"))?)))
            .collect::<CliResult<Vec<_>>>()?;
        OperatorBasis::custom(lattice.local_dim(), ops).map_err(|e| CliError::Config(format!("basis: {e}")))
    }

    pub fn pairs(&self, lattice: &Lattice) -> CliResult<Vec<(Region, Region)>> {
        let raw = match &self.regions.pairs {
            PairSelection::Preset(PairPreset::AllSingletons) => spinbell::clustering::singleton_pairs(lattice),
            PairSelection::Explicit(list) => list
                .iter()
                .enumerate()
                .map(|(n, [x, y])| {
                    let bad = |e: spinbell::Error| CliError::Config(format!("regions.pairs[{n}]: {e}"));
                    Ok((Region::new(x.clone()).map_err(bad)?, Region::new(y.clone()).map_err(bad)?))
                })
                .collect::<CliResult<Vec<_>>>()?,
        };
        let mut out = Vec::with_capacity(raw.len());
        for (x, y) in raw {
            let r = spinbell::region_distance(lattice, &x, &y)?;
            if self.regions.min_distance.is_some_and(|m| r < m) || self.regions.max_distance.is_some_and(|m| r > m) {
                continue;
            }
            if x.intersects(&y) {
                return Err(CliError::Config(format!("regions.pairs: {x:?} and {y:?} overlap")));
            }
            out.push((x, y));
        }
        if out.is_empty() {
            return Err(CliError::Config("regions.pairs: no pairs left after filtering".into()));
        }
        Ok(out)
    }

    pub fn region_sets(&self) -> CliResult<Vec<Vec<Region>>> {
        self.regions
            .sets
            .iter()
            .enumerate()
            .map(|(n, set)| {
                set.iter()
                    .map(|sites| {
                        Region::new(sites.clone()).map_err(|e| CliError::Config(format!("regions.sets[{n}]: {e}")))
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Content digest in git's object layout (`blob <len>\0<bytes>`), SHA-256 flavor.
pub fn blob_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", text.len()).as_bytes());
    hasher.update(text.as_bytes());
    hex(&hasher.finalize())
}

/// SHA-256 over the effective config (as canonical JSON) and every input file.
pub fn config_hash(config: &ExperimentConfig, inputs: &[&str]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(config).expect("config serializes"));
    for input in inputs {
        hasher.update([0u8]);
        hasher.update(input.as_bytes());
    }
    hex(&hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
seed = 3
[lattice]
geometry = { chain = { length = 6 } }
[model]
name = "tfim"
j = 1.0
g = 2.0
[state]
kind = "ground"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::parse(BASIC).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.seesaw.restarts, 20);
        assert_eq!(cfg.fit.floor, NUMERIC_FLOOR);
        assert!(matches!(cfg.regions.pairs, PairSelection::Preset(PairPreset::AllSingletons)));
    }

    #[test]
    fn quench_and_explicit_pairs() {
        let text = r#"
[lattice]
geometry = { chain = { length = 4 } }
[model]
name = "tfim"
j = 1.0
g = 1.0
[state]
kind = "quench"
initial = ["up", "down", "plus", "up"]
times = [0.0, 0.5]
[regions]
pairs = [[[0], [2]], [[0, 1], [3]]]
"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let lattice = spinbell::build_lattice(cfg.lattice.clone()).unwrap();
        assert_eq!(cfg.pairs(&lattice).unwrap().len(), 2);
        let StateRecipe::Quench { initial, .. } = &cfg.state else { panic!() };
        assert_eq!(initial.vectors(4).unwrap().len(), 4);
        assert!(initial.vectors(5).is_err());
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let bad_beta = BASIC.replace("kind = \"ground\"", "kind = \"thermal\"\nbeta = -1.0");
        let err = ExperimentConfig::parse(&bad_beta).unwrap_err().to_string();
        assert!(err.contains("state.beta"), "{err}");
        let unknown = format!("{BASIC}\n[fit]\nflor = 1.0\n");
        assert!(ExperimentConfig::parse(&unknown).is_err());
        assert!(ExperimentConfig::parse(&format!("{BASIC}temperature = 1.0\n")).is_err());
        let thermal = BASIC.replace("kind = \"ground\"", "kind = \"thermal\"\nbeta = 0.5\nbeta_star = 0.2");
        assert_eq!(ExperimentConfig::parse(&thermal).unwrap().state.below_beta_star(), Some(false));
        let bad_star = thermal.replace("0.2", "-0.2");
        assert!(ExperimentConfig::parse(&bad_star).unwrap_err().to_string().contains("state.beta_star"));
        let no_model = BASIC.replace("name = \"tfim\"\nj = 1.0\ng = 2.0\n", "").replace("[model]\n", "");
        assert!(ExperimentConfig::parse(&no_model).unwrap_err().to_string().contains("model"));
    }

    #[test]
    fn hash_tracks_config_and_inputs() {
        let cfg = ExperimentConfig::parse(BASIC).unwrap();
        let mut other = cfg.clone();
        other.seed = 4;
        assert_eq!(config_hash(&cfg, &[]), config_hash(&cfg, &[]));
        assert_ne!(config_hash(&cfg, &[]), config_hash(&other, &[]));
        assert_ne!(config_hash(&cfg, &[]), config_hash(&cfg, &["x"]));
        assert_eq!(config_hash(&cfg, &[]).len(), 64);
        // `git hash-object --object-format=sha256` on an empty file
        assert_eq!(blob_digest(""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }
}
