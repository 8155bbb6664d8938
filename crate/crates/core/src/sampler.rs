//! Samplers that turn a [`BoltzmannMachine`] into a batch of states.
//!
//! Three back ends share one contract, [`SamplerKind`]: exact enumeration,
//! single-site Gibbs MCMC, and an emulated annealer that embeds the model on
//! a Chimera graph, runs Metropolis annealing over the physical spins and
//! decodes chains by majority vote.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chimera::{
    chain_break_fraction, chimera_graph, embed_ising, majority_vote_decode, minimal_square_graph,
    relative_chain_strength, stretch_embedding,
};
use crate::error::{Error, Result};
use crate::model::{
    empirical_moments, exact_moments, state_probabilities, to_ising, BoltzmannMachine, IsingProblem, MomentStatistics,
    SampleBatch, SpinVector, StateVector,
};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub burn_in_sweeps: usize,
    pub sweeps_between_samples: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            burn_in_sweeps: 100,
            sweeps_between_samples: 2,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    fn validate(&self) -> Result<()> {
        if self.sweeps_between_samples == 0 {
            return Err(Error::InvalidParameter(
                "sweeps_between_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Metropolis annealing schedule. Inverse temperature rises geometrically
/// from `beta_start` to `beta_final` over `sweeps` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub beta_start: f64,
    pub beta_final: f64,
    pub sweeps: usize,
    pub reads: usize,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            beta_start: 0.1,
            beta_final: 1.0,
            sweeps: 100,
            reads: 1000,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.beta_start > 0.0
            && self.beta_final.is_finite()
            && self.beta_start <= self.beta_final
            && self.sweeps >= 1
            && self.reads >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid anneal schedule {self:?}")))
        }
    }

    /// Inverse temperature used in each sweep.
    pub fn schedule(&self) -> Vec<f64> {
        if self.sweeps == 1 {
            return vec![self.beta_final];
        }
        let ratio = (self.beta_final / self.beta_start).ln() / (self.sweeps - 1) as f64;
        (0..self.sweeps)
            .map(|t| self.beta_start * (ratio * t as f64).exp())
            .collect()
    }
}

/// Intra-chain coupling used when embedding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainStrength {
    /// A fixed physical coupling.
    Fixed(f64),
    /// A multiple of the largest physical coupling after splitting.
    Relative(f64),
}

impl Default for ChainStrength {
    fn default() -> Self {
        ChainStrength::Relative(2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealerSettings {
    pub anneal: AnnealConfig,
    pub chain_multiplier: usize,
    #[serde(default)]
    pub chain_strength: ChainStrength,
    /// Chimera grid `(rows, cols)`; the smallest square grid that fits the
    /// stretched clique when absent.
    #[serde(default)]
    pub chimera: Option<(usize, usize)>,
}

impl AnnealerSettings {
    pub fn new(anneal: AnnealConfig, chain_multiplier: usize) -> Self {
        AnnealerSettings {
            anneal,
            chain_multiplier,
            chain_strength: ChainStrength::default(),
            chimera: None,
        }
    }

    fn validate(&self) -> Result<()> {
        self.anneal.validate()?;
        if !(1..=3).contains(&self.chain_multiplier) {
            return Err(Error::InvalidParameter(format!(
                "chain multiplier must be 1, 2 or 3, got {}",
                self.chain_multiplier
            )));
        }
        let strength = match self.chain_strength {
            ChainStrength::Fixed(v) | ChainStrength::Relative(v) => v,
        };
        if !(strength > 0.0 && strength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "chain strength must be positive, got {strength}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    Exact,
    Gibbs(GibbsConfig),
    Annealer(AnnealerSettings),
}

impl SamplerKind {
    /// Draws `count` states. `seed` replaces the seed stored in the
    /// configuration so callers can derive one stream per call.
    pub fn sample(&self, bm: &BoltzmannMachine, count: usize, seed: u64) -> Result<SampleBatch<StateVector>> {
        match *self {
            SamplerKind::Exact => exact_sample(bm, count, seed),
            SamplerKind::Gibbs(cfg) => gibbs_sample(bm, &GibbsConfig { seed, ..cfg }, count),
            SamplerKind::Annealer(settings) => {
                let anneal = AnnealConfig {
                    reads: count,
                    seed,
                    ..settings.anneal
                };
                annealer_boltzmann_sample(bm, &AnnealerSettings { anneal, ..settings })
            }
        }
    }

    /// Model moments for training. The exact sampler returns the enumerated
    /// moments; the others return the moments of a fresh batch.
    pub fn model_moments(
        &self,
        bm: &BoltzmannMachine,
        count: usize,
        seed: u64,
    ) -> Result<(MomentStatistics, Option<SampleBatch<StateVector>>)> {
        match self {
            SamplerKind::Exact => Ok((exact_moments(bm)?, None)),
            _ => {
                let batch = self.sample(bm, count, seed)?;
                Ok((empirical_moments(&batch)?, Some(batch)))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerKind::Exact => Ok(()),
            SamplerKind::Gibbs(cfg) => cfg.validate(),
            SamplerKind::Annealer(settings) => settings.validate(),
        }
    }
}

/// Inverse-CDF draws from the enumerated distribution.
pub fn exact_sample(bm: &BoltzmannMachine, count: usize, seed: u64) -> Result<SampleBatch<StateVector>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let probs = state_probabilities(bm)?;
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let n = bm.n_units();
    let last = cdf.len() - 1;
    let mut rng = seed::rng(seed);
    let samples = (0..count)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * acc;
            let mask = cdf.partition_point(|&c| c <= u).min(last);
            StateVector::from_mask(mask as u64, n)
        })
        .collect();
    SampleBatch::<StateVector>::new(samples)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Single-chain heat-bath sampler with a fixed site order.
pub fn gibbs_sample(bm: &BoltzmannMachine, cfg: &GibbsConfig, count: usize) -> Result<SampleBatch<StateVector>> {
    cfg.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let n = bm.n_units();
    let mut rng = seed::rng(cfg.seed);
    let mut state: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
    // field[i] = b_i + sum_j W_ij s_j, kept current across flips.
    let mut field: Vec<f64> = (0..n)
        .map(|i| {
            bm.bias(i)
                + bm.weight_row(i)
                    .iter()
                    .zip(&state)
                    .map(|(w, &s)| w * f64::from(s))
                    .sum::<f64>()
        })
        .collect();

    let sweep = |state: &mut Vec<u8>, field: &mut Vec<f64>, rng: &mut rand_chacha::ChaCha8Rng| {
        for i in 0..n {
            let new = u8::from(rng.gen::<f64>() < logistic(field[i]));
            if new != state[i] {
                let delta = if new == 1 { 1.0 } else { -1.0 };
                for (f, w) in field.iter_mut().zip(bm.weight_row(i)) {
                    *f += delta * w;
                }
                state[i] = new;
            }
        }
    };

    for _ in 0..cfg.burn_in_sweeps {
        sweep(&mut state, &mut field, &mut rng);
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..cfg.sweeps_between_samples {
            sweep(&mut state, &mut field, &mut rng);
        }
        samples.push(StateVector::new(state.clone())?);
    }
    SampleBatch::<StateVector>::new(samples)
}

/// Compressed adjacency of an Ising problem.
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    strengths: Vec<f64>,
}

impl Adjacency {
    fn new(problem: &IsingProblem) -> Self {
        let n = problem.n_spins();
        let mut degree = vec![0usize; n];
        for c in problem.couplers() {
            degree[c.a] += 1;
            degree[c.b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut cursor = offsets.clone();
        let total = offsets[n];
        let mut targets = vec![0usize; total];
        let mut strengths = vec![0.0; total];
        for c in problem.couplers() {
            for (from, to) in [(c.a, c.b), (c.b, c.a)] {
                targets[cursor[from]] = to;
                strengths[cursor[from]] = c.strength;
                cursor[from] += 1;
            }
        }
        Adjacency {
            offsets,
            targets,
            strengths,
        }
    }

    fn local_field(&self, i: usize, fields: &[f64], spins: &[i8]) -> f64 {
        let range = self.offsets[i]..self.offsets[i + 1];
        fields[i]
            + self.targets[range.clone()]
                .iter()
                .zip(&self.strengths[range])
                .map(|(&j, &coupling)| coupling * f64::from(spins[j]))
                .sum::<f64>()
    }
}

/// Metropolis annealing, one independent restart per read.
///
/// Read `r` uses RNG stream `r` of `cfg.seed`, so the batch does not depend
/// on how reads are scheduled across threads.
pub fn anneal_sample(problem: &IsingProblem, cfg: &AnnealConfig) -> Result<SampleBatch<SpinVector>> {
    cfg.validate()?;
    let n = problem.n_spins();
    let adjacency = Adjacency::new(problem);
    let schedule = cfg.schedule();
    let fields = problem.fields();
    let reads: Vec<SpinVector> = (0..cfg.reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = seed::stream_rng(cfg.seed, read as u64);
            let mut spins: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            for &beta in &schedule {
                for i in 0..n {
                    let delta = 2.0 * f64::from(spins[i]) * adjacency.local_field(i, fields, &spins);
                    if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                        spins[i] = -spins[i];
                    }
                }
            }
            SpinVector::from_raw(spins)
        })
        .collect();
    SampleBatch::<SpinVector>::new(reads)
}

/// Decoded annealer output plus the chain-break diagnostic.
#[derive(Debug, Clone)]
pub struct AnnealerRun {
    pub states: SampleBatch<StateVector>,
    pub chain_break_fraction: f64,
    pub chain_strength: f64,
    pub qubits_used: usize,
}

/// Full emulated-device pipeline: Ising transform, stretched clique
/// embedding, Metropolis annealing over the embedded spins, majority-vote
/// decoding, and conversion back to bits.
pub fn annealer_boltzmann_run(bm: &BoltzmannMachine, settings: &AnnealerSettings) -> Result<AnnealerRun> {
    settings.validate()?;
    let k = bm.n_units();
    let graph = match settings.chimera {
        Some((rows, cols)) => chimera_graph(rows, cols)?,
        None => minimal_square_graph(k * settings.chain_multiplier)?,
    };
    let embedding = stretch_embedding(k, settings.chain_multiplier, &graph)?;
    let logical = to_ising(bm);
    let strength = match settings.chain_strength {
        ChainStrength::Fixed(v) => v,
        ChainStrength::Relative(f) => relative_chain_strength(f, &logical, &embedding, &graph),
    };
    let physical = embed_ising(&logical, &embedding, &graph, strength)?;

    // Only chain qubits carry fields or couplers; anneal those alone and
    // renumber the embedding to match.
    let used = embedding.physical_qubits();
    let compact = physical.restrict(&used);
    let mut position = vec![usize::MAX; graph.num_qubits()];
    for (new, &old) in used.iter().enumerate() {
        position[old] = new;
    }
    let local_embedding = embedding.relabel(|q| position[q]);

    let reads = anneal_sample(&compact, &settings.anneal)?;
    let breaks = chain_break_fraction(&reads, &local_embedding);
    let decode_seed = seed::derive(settings.anneal.seed, &[0xDEC0DE]);
    let decoded = majority_vote_decode(&reads, &local_embedding, decode_seed)?;
    Ok(AnnealerRun {
        states: decoded.to_bits(),
        chain_break_fraction: breaks,
        chain_strength: strength,
        qubits_used: used.len(),
    })
}

pub fn annealer_boltzmann_sample(
    bm: &BoltzmannMachine,
    settings: &AnnealerSettings,
) -> Result<SampleBatch<StateVector>> {
    annealer_boltzmann_run(bm, settings).map(|run| run.states)
}
