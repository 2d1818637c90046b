//! The canonical experiments behind each subcommand.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use spinbell::bell::{
    certify, local_bound_bruteforce, BellInequality, BoundFormula, FitConstants, LocalBound, LocalityCertificate,
};
use spinbell::clustering::{
    fit_clustering, fit_propagation, scan_correlations, ClusteringFit, CorrelationSample, PropagationFit,
};
use spinbell::quantum::{
    build_hamiltonian, evolve_state, ground_state, product_state_pure, thermal_state, Hamiltonian, ManyBodyState,
};
use spinbell::{build_lattice, Error, Lattice, Region};

use crate::config::{blob_digest, config_hash, ExperimentConfig, LoadedConfig, StateRecipe};
use crate::error::{CliError, CliResult};
use crate::inequality_file::load_inequality;

/// A loaded config with command-line overrides applied.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Raw text of every input file besides the config.
    pub inputs: Vec<String>,
    /// `(path, blob digest)` of the config and every input file.
    pub digests: Vec<(PathBuf, String)>,
    pub inequality: Option<BellInequality>,
}

impl Run {
    pub fn new(loaded: LoadedConfig, seed: Option<u64>, out: Option<PathBuf>) -> CliResult<Self> {
        let LoadedConfig { mut config, base_dir, path, text } = loaded;
        let mut digests = vec![(path, blob_digest(&text))];
        if let Some(seed) = seed {
            config.seed = seed;
        }
        let out_dir = out.unwrap_or_else(|| config.output.dir.clone());
        let (inequality, inputs) = match &config.inequality {
            Some(path) => {
                let path = base_dir.join(path);
                let (ineq, text) = load_inequality(&path)?;
                digests.push((path, blob_digest(&text)));
                (Some(ineq), vec![text])
            }
            None => (None, Vec::new()),
        };
        Ok(Self { config, base_dir, out_dir, inputs, digests, inequality })
    }

    pub fn from_path(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> CliResult<Self> {
        Self::new(ExperimentConfig::load(path)?, seed, out)
    }

    pub fn config_hash(&self) -> String {
        let inputs: Vec<&str> = self.inputs.iter().map(String::as_str).collect();
        config_hash(&self.config, &inputs)
    }

    pub fn lattice(&self) -> CliResult<Lattice> {
        build_lattice(self.config.lattice.clone()).map_err(|e| CliError::Config(format!("lattice: {e}")))
    }

    fn hamiltonian(&self, lattice: &Lattice) -> CliResult<Hamiltonian> {
        let spec = self.config.hamiltonian_spec(lattice)?;
        Ok(build_hamiltonian(lattice, &spec)?)
    }

    fn initial_state(&self, lattice: &Lattice, initial: &crate::config::SiteStates) -> CliResult<ManyBodyState> {
        if lattice.local_dim() != 2 {
            return Err(CliError::Config("state.initial: product labels need local_dim 2".into()));
        }
        Ok(product_state_pure(lattice, &initial.vectors(lattice.num_sites())?)?)
    }

    /// The single state of a static recipe.
    pub fn static_state(&self, lattice: &Lattice) -> CliResult<ManyBodyState> {
        match &self.config.state {
            StateRecipe::Ground {} => {
                let h = self.hamiltonian(lattice)?;
                Ok(ground_state(&h, &self.config.solver.options())?.state)
            }
            StateRecipe::Thermal { beta, .. } => Ok(thermal_state(&self.hamiltonian(lattice)?, *beta)?),
            StateRecipe::Product { initial } => self.initial_state(lattice, initial),
            StateRecipe::Quench { .. } => Err(CliError::Config("state: this command needs a static state".into())),
        }
    }

    /// `(t, state)` for every configured time of a quench recipe.
    pub fn quench_states(&self, lattice: &Lattice) -> CliResult<TimedStates> {
        let StateRecipe::Quench { initial, times } = &self.config.state else {
            return Err(CliError::Config("state: this command needs kind = \"quench\"".into()));
        };
        let h = self.hamiltonian(lattice)?;
        let psi0 = self.initial_state(lattice, initial)?;
        let opts = self.config.solver.options();
        times
            .par_iter()
            .map(|&t| Ok((t, evolve_state(&h, &psi0, t, &opts)?)))
            .collect()
    }

    pub fn pairs(&self, lattice: &Lattice) -> CliResult<Vec<(Region, Region)>> {
        self.config.pairs(lattice)
    }

    pub fn scan(&self, lattice: &Lattice, state: &ManyBodyState, t: f64) -> CliResult<Vec<CorrelationSample>> {
        let basis = self.config.operator_basis(lattice)?;
        Ok(scan_correlations(state, lattice, &self.pairs(lattice)?, &basis, t)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSource {
    Fitted,
    /// Taken from `fit.fixed`.
    Fixed,
    /// Every sample was below the floor; the envelope is the floor itself.
    Floor,
}

/// Static envelope from config or samples. When every sample is floored the
/// constant envelope `C = floor, lambda = 0` dominates them all.
pub fn resolve_clustering(run: &Run, samples: &[CorrelationSample]) -> CliResult<(ClusteringFit, FitSource)> {
    let floor = run.config.fit.floor;
    if let Some(f) = run.config.fit.fixed {
        let fit = ClusteringFit { c: f.c, lambda: f.lambda, residual: 0.0, n_samples: 0, n_floored: 0, floor };
        return Ok((fit, FitSource::Fixed));
    }
    match fit_clustering(samples, floor) {
        Ok(fit) => Ok((fit, FitSource::Fitted)),
        Err(Error::AllSamplesFloored) => Ok((
            ClusteringFit { c: floor, lambda: 0.0, residual: 0.0, n_samples: 0, n_floored: samples.len(), floor },
            FitSource::Floor,
        )),
        Err(e) => Err(e.into()),
    }
}

pub fn resolve_propagation(run: &Run, samples: &[CorrelationSample]) -> CliResult<(PropagationFit, FitSource)> {
    let mut options = run.config.fit.propagation;
    options.floor = run.config.fit.floor;
    if let Some(f) = run.config.fit.fixed {
        let v = f.v.ok_or_else(|| CliError::Config("fit.fixed.v: required for quench experiments".into()))?;
        let fit = PropagationFit { c: f.c, lambda: f.lambda, v, residual: 0.0, n_samples: 0, n_floored: 0, options };
        return Ok((fit, FitSource::Fixed));
    }
    Ok((fit_propagation(samples, &options)?, FitSource::Fitted))
}

#[derive(Debug, Clone, Serialize)]
pub struct ChshRow {
    pub x: Region,
    pub y: Region,
    pub r: f64,
    pub chsh_sup: f64,
    pub epsilon: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ChshScanReport {
    pub fit: ClusteringFit,
    pub fit_source: FitSource,
    pub samples: Vec<CorrelationSample>,
    pub rows: Vec<ChshRow>,
}

fn certify_sets(
    run: &Run,
    lattice: &Lattice,
    state: &ManyBodyState,
    ineq: &BellInequality,
    sets: &[Vec<Region>],
    fit: &FitConstants,
    formula: Option<BoundFormula>,
) -> CliResult<Vec<LocalityCertificate>> {
    sets.par_iter()
        .enumerate()
        .map(|(i, regions)| {
            let opts = run.config.seesaw.options(run.config.seed, i);
            Ok(certify(state, ineq, lattice, regions, fit, formula, &opts)?)
        })
        .collect()
}

/// CHSH supremum and static certificate for every configured region pair.
pub fn chsh_scan(run: &Run) -> CliResult<ChshScanReport> {
    let lattice = run.lattice()?;
    let state = run.static_state(&lattice)?;
    let samples = run.scan(&lattice, &state, 0.0)?;
    let (fit, fit_source) = resolve_clustering(run, &samples)?;
    let pairs = run.pairs(&lattice)?;
    let sets: Vec<Vec<Region>> = pairs.iter().map(|(x, y)| vec![x.clone(), y.clone()]).collect();
    let certs = certify_sets(
        run,
        &lattice,
        &state,
        &BellInequality::chsh(),
        &sets,
        &FitConstants::Clustering(fit),
        Some(BoundFormula::ChshStatic),
    )?;
    let rows = pairs
        .into_iter()
        .zip(certs)
        .map(|((x, y), cert)| ChshRow {
            r: cert.inputs.distances[0],
            x,
            y,
            chsh_sup: cert.value,
            epsilon: cert.bound - cert.inputs.delta_c,
            bound: cert.bound,
            satisfied: cert.satisfied,
            converged: cert.converged,
        })
        .collect();
    Ok(ChshScanReport { fit, fit_source, samples, rows })
}

#[derive(Debug, Clone)]
pub struct ClusteringReport {
    pub fit: ClusteringFit,
    pub fit_source: FitSource,
    pub samples: Vec<CorrelationSample>,
    /// Samples violating the envelope (always zero for a constructed fit).
    pub violations: usize,
}

pub fn clustering_fit(run: &Run) -> CliResult<ClusteringReport> {
    let lattice = run.lattice()?;
    let state = run.static_state(&lattice)?;
    let samples = run.scan(&lattice, &state, 0.0)?;
    let (fit, fit_source) = resolve_clustering(run, &samples)?;
    let violations = samples.iter().filter(|s| !fit.dominates(s)).count();
    Ok(ClusteringReport { fit, fit_source, samples, violations })
}

/// Largest sample in one `(t, r)` cell of the light-cone grid.
#[derive(Debug, Clone, Serialize)]
pub struct LightConeCell {
    pub t: f64,
    pub r: f64,
    pub value: f64,
    /// Envelope at the region sizes of the largest sample.
    pub bound: f64,
    /// Every sample in the cell lies under its envelope.
    pub dominated: bool,
}

#[derive(Debug, Clone)]
pub struct QuenchReport {
    pub fit: PropagationFit,
    pub fit_source: FitSource,
    pub samples: Vec<CorrelationSample>,
    pub cells: Vec<LightConeCell>,
}

type TimedStates = Vec<(f64, ManyBodyState)>;

fn quench_samples(run: &Run, lattice: &Lattice) -> CliResult<(TimedStates, Vec<CorrelationSample>)> {
    let states = run.quench_states(lattice)?;
    let per_time = states
        .iter()
        .map(|(t, s)| run.scan(lattice, s, *t))
        .collect::<CliResult<Vec<_>>>()?;
    Ok((states, per_time.into_iter().flatten().collect()))
}

pub fn light_cone(fit: &PropagationFit, samples: &[CorrelationSample], floor: f64) -> Vec<LightConeCell> {
    let mut keys: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.r)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(t, r)| {
            let cell: Vec<&CorrelationSample> = samples.iter().filter(|s| s.t == t && s.r == r).collect();
            let top = cell
                .iter()
                .copied()
                .max_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
                .expect("non-empty cell");
            let dominated = cell
                .iter()
                .all(|s| if s.t == 0.0 { s.value.abs() <= floor } else { fit.dominates(s) });
            LightConeCell {
                t,
                r,
                value: top.value.abs(),
                bound: fit.envelope(top.size_x(), top.size_y(), t, r),
                dominated,
            }
        })
        .collect()
}

pub fn quench(run: &Run) -> CliResult<QuenchReport> {
    let lattice = run.lattice()?;
    let (_, samples) = quench_samples(run, &lattice)?;
    let (fit, fit_source) = resolve_propagation(run, &samples)?;
    let cells = light_cone(&fit, &samples, run.config.fit.floor);
    Ok(QuenchReport { fit, fit_source, samples, cells })
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateRow {
    /// Index into the region sets.
    pub set: usize,
    pub t: f64,
    pub regions: Vec<Region>,
    pub certificate: LocalityCertificate,
}

#[derive(Debug, Clone)]
pub struct BellCertifyReport {
    pub fit: FitConstants,
    pub fit_source: FitSource,
    pub samples: Vec<CorrelationSample>,
    pub rows: Vec<CertificateRow>,
}

/// Certificates for every region set; two-party inequalities fall back to the
/// scan pairs when no sets are configured.
pub fn bell_certify(run: &Run) -> CliResult<BellCertifyReport> {
    let ineq = run
        .inequality
        .as_ref()
        .ok_or_else(|| CliError::Config("inequality: required for bell-certify".into()))?;
    let lattice = run.lattice()?;
    let mut sets = run.config.region_sets()?;
    if sets.is_empty() {
        if ineq.parties() != 2 {
            return Err(CliError::Config("regions.sets: required for inequalities with more than two parties".into()));
        }
        sets = run.pairs(&lattice)?.into_iter().map(|(x, y)| vec![x, y]).collect();
    }
    let formula = run.config.certify.formula;
    let mut rows = Vec::new();
    if run.config.state.is_quench() {
        let (states, samples) = quench_samples(run, &lattice)?;
        let (fit, fit_source) = resolve_propagation(run, &samples)?;
        let fit = FitConstants::Propagation(fit);
        for (t, state) in &states {
            let certs = certify_sets(run, &lattice, state, ineq, &sets, &fit, formula)?;
            rows.extend(certs.into_iter().enumerate().map(|(set, certificate)| CertificateRow {
                set,
                t: *t,
                regions: sets[set].clone(),
                certificate,
            }));
        }
        return Ok(BellCertifyReport { fit, fit_source, samples, rows });
    }
    let state = run.static_state(&lattice)?;
    let samples = run.scan(&lattice, &state, 0.0)?;
    let (fit, fit_source) = resolve_clustering(run, &samples)?;
    let fit = FitConstants::Clustering(fit);
    let certs = certify_sets(run, &lattice, &state, ineq, &sets, &fit, formula)?;
    rows.extend(certs.into_iter().enumerate().map(|(set, certificate)| CertificateRow {
        set,
        t: 0.0,
        regions: sets[set].clone(),
        certificate,
    }));
    Ok(BellCertifyReport { fit, fit_source, samples, rows })
}

pub fn local_bound(path: &Path) -> CliResult<(BellInequality, LocalBound)> {
    let (ineq, _) = load_inequality(path)?;
    let bound = local_bound_bruteforce(&ineq)?;
    Ok((ineq, bound))
}
