//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! species = ["A", "B"]          # optional, defaults to s1, s2, ...
//! dt = 1.0                      # optional metadata
//! initial = [0.9, 0.1]          # raw abundances, normalized on load
//! seed = 42                     # optional, used by [random]
//!
//! # exactly one matrix source
//! matrix = [[0.9, 0.2], [0.1, 0.8]]      # row-major M
//! # generator = [[-0.1, 0.2], [0.1, -0.2]]
//! # [two_species]
//! # alpha = 0.1
//! # beta = 0.2
//! # [random]
//! # kind = "competitive"        # or "stochastic"
//! # coupling_scale = 0.1
//! # neg_fraction = 0.5
//!
//! [config]                      # optional
//! max_steps = 10000
//! convergence_tol = 1e-12
//! record_every = 1
//!
//! [[mutation]]                  # optional, repeatable
//! at_step = 100
//! name = "C"
//! couplings_in = [0.01, 0.0]
//! couplings_out = [0.0, 0.0]
//! self_rate = 1.0
//! seed_fraction = 0.01
//! ```
//!
//! Mutations are listed in step order. Their coupling vectors have one entry
//! per species declared before them, mutants included, extinct or not.

use std::path::Path;

use serde::{Deserialize, Serialize};
use zerosum_core::nalgebra::DMatrix;
use zerosum_core::{
    make_population, matrix_from_generator, random_competitive, random_stochastic,
    two_species_matrix, ActiveSystem, EvolutionMatrix, GeneratorMatrix, MatrixError,
    PopulationVector, ScheduledInsertion, SimulationConfig, CONSERVATION_TOL,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSpeciesSource {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomKind {
    Stochastic,
    Competitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSource {
    pub kind: RandomKind,
    pub coupling_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_fraction: Option<f64>,
}

/// A species introduced part-way through a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mutation {
    pub at_step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub couplings_in: Vec<f64>,
    pub couplings_out: Vec<f64>,
    pub self_rate: f64,
    pub seed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    species: Option<Vec<String>>,
    #[serde(default = "unit_dt")]
    dt: f64,
    initial: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    two_species: Option<TwoSpeciesSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    random: Option<RandomSource>,
    #[serde(default)]
    config: SimulationConfig,
    #[serde(default, rename = "mutation", skip_serializing_if = "Vec::is_empty")]
    mutations: Vec<Mutation>,
}

fn unit_dt() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Explicit(Vec<Vec<f64>>),
    Generator(Vec<Vec<f64>>),
    TwoSpecies(TwoSpeciesSource),
    Random(RandomSource),
}

/// A validated scenario. Species names cover the initial species followed by
/// any mutants, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub species_names: Vec<String>,
    pub source: MatrixSource,
    pub dt: f64,
    pub initial: Vec<f64>,
    pub config: SimulationConfig,
    pub seed: Option<u64>,
    pub mutations: Vec<Mutation>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Scenario::from_toml_str(&text, path)
}

impl Scenario {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, CliError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let scenario = Self::from_file(file)?;
        scenario.matrix()?;
        scenario.population()?;
        Ok(scenario)
    }

    fn from_file(file: ScenarioFile) -> Result<Self, CliError> {
        let mut sources = Vec::new();
        if let Some(m) = file.matrix {
            sources.push(MatrixSource::Explicit(m));
        }
        if let Some(g) = file.generator {
            sources.push(MatrixSource::Generator(g));
        }
        if let Some(t) = file.two_species {
            sources.push(MatrixSource::TwoSpecies(t));
        }
        if let Some(r) = file.random {
            sources.push(MatrixSource::Random(r));
        }
        if sources.len() != 1 {
            return Err(CliError::Validation(format!(
                "expected exactly one of matrix, generator, [two_species], [random]; found {}",
                sources.len()
            )));
        }
        let source = sources.pop().expect("one source");

        let n = file.initial.len();
        let n_total = n + file.mutations.len();
        let mut species_names = match file.species {
            Some(names) => names,
            None => (1..=n).map(|i| format!("s{i}")).collect(),
        };
        if species_names.len() != n {
            return Err(CliError::Validation(format!(
                "{} species names for {} initial populations",
                species_names.len(),
                n
            )));
        }
        let mut mutations = file.mutations;
        if mutations.windows(2).any(|w| w[1].at_step < w[0].at_step) {
            return Err(CliError::Validation(
                "mutations must be listed in step order".into(),
            ));
        }
        for (k, m) in mutations.iter().enumerate() {
            let width = n + k;
            if m.couplings_in.len() != width || m.couplings_out.len() != width {
                return Err(CliError::Validation(format!(
                    "mutation {} needs {width} couplings each way, one per earlier species",
                    k + 1
                )));
            }
            let column: f64 = m.couplings_out.iter().sum::<f64>() + m.self_rate;
            if !column.is_finite() || (column - 1.0).abs() > CONSERVATION_TOL {
                return Err(CliError::Validation(format!(
                    "mutation {}: couplings_out plus self_rate sum to {column}",
                    k + 1
                )));
            }
            if !(m.seed_fraction > 0.0 && m.seed_fraction < 1.0) {
                return Err(CliError::Validation(format!(
                    "mutation {}: seed_fraction must lie in (0, 1)",
                    k + 1
                )));
            }
        }
        for (k, m) in mutations.iter_mut().enumerate() {
            let name = m.name.get_or_insert_with(|| format!("s{}", n + k + 1));
            species_names.push(name.clone());
        }
        debug_assert_eq!(species_names.len(), n_total);
        let mut sorted = species_names.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Validation("species names must be unique".into()));
        }
        if file.config.validate().is_err() || file.config.max_steps == 0 {
            return Err(CliError::Validation("invalid [config] section".into()));
        }
        Ok(Self {
            species_names,
            source,
            dt: file.dt,
            initial: file.initial,
            config: file.config,
            seed: file.seed,
            mutations,
        })
    }

    fn to_file(&self) -> ScenarioFile {
        let n = self.initial.len();
        let mut file = ScenarioFile {
            species: Some(self.species_names[..n].to_vec()),
            dt: self.dt,
            initial: self.initial.clone(),
            seed: self.seed,
            matrix: None,
            generator: None,
            two_species: None,
            random: None,
            config: self.config,
            mutations: self.mutations.clone(),
        };
        for (m, name) in file.mutations.iter_mut().zip(&self.species_names[n..]) {
            m.name = Some(name.clone());
        }
        match &self.source {
            MatrixSource::Explicit(m) => file.matrix = Some(m.clone()),
            MatrixSource::Generator(g) => file.generator = Some(g.clone()),
            MatrixSource::TwoSpecies(t) => file.two_species = Some(*t),
            MatrixSource::Random(r) => file.random = Some(*r),
        }
        file
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("scenario serializes")
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    /// Builds and validates the evolution matrix. Random sources use the
    /// scenario seed, or 0 when none is given.
    pub fn matrix(&self) -> Result<EvolutionMatrix, CliError> {
        let n = self.dim();
        let m = match &self.source {
            MatrixSource::Explicit(rows) => EvolutionMatrix::from_rows(rows, self.dt)?,
            MatrixSource::Generator(rows) => {
                matrix_from_generator(&GeneratorMatrix::from_rows(rows, self.dt)?)?
            }
            MatrixSource::TwoSpecies(t) => two_species_matrix(t.alpha, t.beta).with_dt(self.dt)?,
            MatrixSource::Random(r) => {
                let seed = self.seed.unwrap_or(0);
                match r.kind {
                    RandomKind::Stochastic => random_stochastic(n, r.coupling_scale, seed)?,
                    RandomKind::Competitive => random_competitive(
                        n,
                        r.coupling_scale,
                        r.neg_fraction.unwrap_or(0.5),
                        seed,
                    )?,
                }
                .with_dt(self.dt)?
            }
        };
        if m.dim() != n {
            return Err(CliError::Validation(format!(
                "matrix is {0}x{0} but there are {1} initial populations",
                m.dim(),
                n
            )));
        }
        Ok(m)
    }

    pub fn population(&self) -> Result<PopulationVector, CliError> {
        Ok(make_population(&self.initial)?)
    }

    pub fn system(&self) -> Result<ActiveSystem, CliError> {
        Ok(ActiveSystem::new(self.matrix()?, self.population()?)?)
    }

    pub fn insertions(&self) -> Vec<ScheduledInsertion> {
        self.mutations
            .iter()
            .map(|m| ScheduledInsertion {
                at_step: m.at_step,
                couplings_in: m.couplings_in.clone(),
                couplings_out: m.couplings_out.clone(),
                self_rate: m.self_rate,
                seed_fraction: m.seed_fraction,
            })
            .collect()
    }

    /// `(alpha, beta)` when the scenario has exactly two species.
    pub fn two_species_params(&self) -> Option<(f64, f64)> {
        match &self.source {
            MatrixSource::TwoSpecies(t) => Some((t.alpha, t.beta)),
            _ if self.dim() == 2 => {
                let m = self.matrix().ok()?;
                Some((m.get(1, 0), m.get(0, 1)))
            }
            _ => None,
        }
    }
}

/// A one-parameter family of matrices for elimination-time sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilySpec {
    /// `two_species_matrix(alpha_coef * c, beta_coef * c)`.
    TwoSpecies { alpha_coef: f64, beta_coef: f64 },
    /// `I + c * (M - I)` for the scenario matrix `M`.
    ScaledGenerator,
}

impl std::str::FromStr for FamilySpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let usage = || {
            CliError::Usage(format!(
                "family `{s}` is not `two-species:<alpha_coef>:<beta_coef>` or `scaled-generator`"
            ))
        };
        if s == "scaled-generator" {
            return Ok(FamilySpec::ScaledGenerator);
        }
        let rest = s.strip_prefix("two-species:").ok_or_else(usage)?;
        let (a, b) = rest.split_once(':').ok_or_else(usage)?;
        Ok(FamilySpec::TwoSpecies {
            alpha_coef: a.trim().parse().map_err(|_| usage())?,
            beta_coef: b.trim().parse().map_err(|_| usage())?,
        })
    }
}

impl FamilySpec {
    pub fn build(&self, c: f64, base: &EvolutionMatrix) -> Result<EvolutionMatrix, MatrixError> {
        match *self {
            FamilySpec::TwoSpecies {
                alpha_coef,
                beta_coef,
            } => Ok(two_species_matrix(alpha_coef * c, beta_coef * c)),
            FamilySpec::ScaledGenerator => {
                let n = base.dim();
                let scaled = DMatrix::identity(n, n) + base.generator() * c;
                EvolutionMatrix::new(scaled, base.dt())
            }
        }
    }
}
