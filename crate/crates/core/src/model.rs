//! Fully-visible Boltzmann machines, their Ising form, and exact enumeration.
//!
//! Energies use the convention
//!
//! ```text
//! E(s) = -sum_i b_i s_i - sum_{i<j} W_ij s_i s_j
//! ```
//!
//! with every unordered pair counted once, and `p(s) = exp(-E(s)) / Z`.
//! The Ising form uses the same shape over spins `S = 2s - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};

/// Largest model the exact oracle will enumerate.
pub const ENUMERATION_LIMIT: usize = 24;

/// Row-major symmetric matrix with a zero diagonal.
fn check_symmetric(n: usize, m: &[f64], what: &str) -> Result<()> {
    ensure_len(n * n, m.len())?;
    for i in 0..n {
        if m[i * n + i] != 0.0 {
            return Err(Error::InvalidParameter(format!("{what}[{i}][{i}] must be zero")));
        }
        for j in (i + 1)..n {
            let (a, b) = (m[i * n + j], m[j * n + i]);
            if a != b {
                return Err(Error::InvalidParameter(format!(
                    "{what} is not symmetric at ({i}, {j})"
                )));
            }
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("{what}[{i}][{j}] is not finite")));
            }
        }
    }
    Ok(())
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidParameter(format!("{what}[{i}] is not finite"))),
        None => Ok(()),
    }
}

fn flatten(rows: Vec<Vec<f64>>, n: usize) -> Result<Vec<f64>> {
    ensure_len(n, rows.len())?;
    let mut flat = Vec::with_capacity(n * n);
    for row in rows {
        ensure_len(n, row.len())?;
        flat.extend(row);
    }
    Ok(flat)
}

fn unflatten(flat: &[f64], n: usize) -> Vec<Vec<f64>> {
    flat.chunks(n.max(1)).take(n).map(<[f64]>::to_vec).collect()
}

#[derive(Serialize, Deserialize)]
struct MatrixForm {
    biases: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

/// Logical model parameters: one bias per unit and a symmetric,
/// zero-diagonal weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixForm", into = "MatrixForm")]
pub struct BoltzmannMachine {
    biases: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<MatrixForm> for BoltzmannMachine {
    type Error = Error;
    fn try_from(m: MatrixForm) -> Result<Self> {
        BoltzmannMachine::new(m.biases, m.weights)
    }
}

impl From<BoltzmannMachine> for MatrixForm {
    fn from(bm: BoltzmannMachine) -> Self {
        let n = bm.n_units();
        MatrixForm {
            weights: unflatten(&bm.weights, n),
            biases: bm.biases,
        }
    }
}

impl BoltzmannMachine {
    pub fn zeros(n: usize) -> Self {
        BoltzmannMachine {
            biases: vec![0.0; n],
            weights: vec![0.0; n * n],
        }
    }

    pub fn new(biases: Vec<f64>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let n = biases.len();
        let weights = flatten(weights, n)?;
        Self::from_flat(biases, weights)
    }

    /// Builds a model from a row-major `n * n` weight buffer.
    pub fn from_flat(biases: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_finite(&biases, "bias")?;
        check_symmetric(biases.len(), &weights, "weights")?;
        Ok(BoltzmannMachine { biases, weights })
    }

    /// Builds a model from biases and a list of `(i, j, w)` pair weights.
    pub fn from_pairs(biases: Vec<f64>, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut bm = Self::zeros(biases.len());
        check_finite(&biases, "bias")?;
        bm.biases = biases;
        for &(i, j, w) in pairs {
            if i == j || i >= bm.n_units() || j >= bm.n_units() || !w.is_finite() {
                return Err(Error::InvalidParameter(format!("bad pair weight ({i}, {j}, {w})")));
            }
            bm.set_weight(i, j, w);
        }
        Ok(bm)
    }

    pub fn n_units(&self) -> usize {
        self.biases.len()
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.biases[i]
    }

    pub fn set_bias(&mut self, i: usize, value: f64) {
        self.biases[i] = value;
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n_units() + j]
    }

    /// Sets `W_ij` and `W_ji` together. Panics on `i == j`.
    pub fn set_weight(&mut self, i: usize, j: usize, value: f64) {
        assert_ne!(i, j, "diagonal weights are fixed at zero");
        let n = self.n_units();
        self.weights[i * n + j] = value;
        self.weights[j * n + i] = value;
    }

    /// Row `i` of the weight matrix.
    pub fn weight_row(&self, i: usize) -> &[f64] {
        let n = self.n_units();
        &self.weights[i * n..(i + 1) * n]
    }

    pub fn max_abs_parameter(&self) -> f64 {
        self.biases
            .iter()
            .chain(self.weights.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Binary unit activations, entries in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateVector(Vec<u8>);

impl StateVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidParameter(format!("state entry {i} is not 0 or 1")));
        }
        Ok(StateVector(bits))
    }

    /// Unpacks the low `n` bits of `mask`; bit `i` is unit `i`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        StateVector((0..n).map(|i| ((mask >> i) & 1) as u8).collect())
    }

    pub fn to_mask(&self) -> u64 {
        self.0.iter().enumerate().fold(0, |m, (i, &b)| m | (u64::from(b) << i))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Spin image `2x - 1`.
    pub fn to_spins(&self) -> SpinVector {
        SpinVector(self.0.iter().map(|&b| 2 * b as i8 - 1).collect())
    }
}

/// Ising spins, entries in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinVector(Vec<i8>);

impl SpinVector {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(i) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!("spin entry {i} is not +1 or -1")));
        }
        Ok(SpinVector(spins))
    }

    pub(crate) fn from_raw(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        SpinVector(spins)
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Maps +1 to 1 and -1 to 0.
pub fn spins_to_bits(spins: &SpinVector) -> StateVector {
    StateVector(spins.0.iter().map(|&s| u8::from(s > 0)).collect())
}

/// One coupler of an [`IsingProblem`], stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupler {
    pub a: usize,
    pub b: usize,
    pub strength: f64,
}

/// `H(S) = -sum_i h_i S_i - sum_{i<j} J_ij S_i S_j`, plus a constant offset.
///
/// Couplings are kept as a sorted sparse list since embedded problems only
/// touch a small fraction of the hardware graph. Positive `J` favors
/// alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingProblem {
    fields: Vec<f64>,
    couplers: Vec<Coupler>,
    offset: f64,
}

impl IsingProblem {
    pub fn new(fields: Vec<f64>, couplings: &[(usize, usize, f64)], offset: f64) -> Result<Self> {
        check_finite(&fields, "field")?;
        if !offset.is_finite() {
            return Err(Error::InvalidParameter("offset is not finite".into()));
        }
        let n = fields.len();
        let mut couplers: Vec<Coupler> = Vec::with_capacity(couplings.len());
        for &(i, j, v) in couplings {
            if i == j || i >= n || j >= n || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("bad coupling ({i}, {j}, {v})")));
            }
            couplers.push(Coupler {
                a: i.min(j),
                b: i.max(j),
                strength: v,
            });
        }
        couplers.sort_by_key(|c| (c.a, c.b));
        // Repeated pairs would make the stored matrix ambiguous.
        if let Some(w) = couplers.windows(2).find(|w| (w[0].a, w[0].b) == (w[1].a, w[1].b)) {
            return Err(Error::InvalidParameter(format!(
                "coupling ({}, {}) given twice",
                w[0].a, w[0].b
            )));
        }
        couplers.retain(|c| c.strength != 0.0);
        Ok(IsingProblem {
            fields,
            couplers,
            offset,
        })
    }

    pub fn zeros(n: usize) -> Self {
        IsingProblem {
            fields: vec![0.0; n],
            couplers: Vec::new(),
            offset: 0.0,
        }
    }

    pub fn n_spins(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn couplers(&self) -> &[Coupler] {
        &self.couplers
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.couplers
            .binary_search_by_key(&key, |c| (c.a, c.b))
            .map(|k| self.couplers[k].strength)
            .unwrap_or(0.0)
    }

    pub fn max_abs_coupling(&self) -> f64 {
        self.couplers.iter().fold(0.0_f64, |m, c| m.max(c.strength.abs()))
    }

    /// `H(S)` without the offset.
    pub fn energy(&self, spins: &SpinVector) -> Result<f64> {
        ensure_len(self.n_spins(), spins.len())?;
        let s = spins.spins();
        let linear: f64 = self.fields.iter().zip(s).map(|(h, &x)| h * f64::from(x)).sum();
        let quadratic: f64 = self
            .couplers
            .iter()
            .map(|c| c.strength * f64::from(s[c.a]) * f64::from(s[c.b]))
            .sum();
        Ok(-linear - quadratic)
    }

    /// Sub-problem over `keep` (in that order); couplings to dropped spins
    /// are discarded.
    pub fn restrict(&self, keep: &[usize]) -> IsingProblem {
        let mut position = vec![usize::MAX; self.n_spins()];
        for (new, &old) in keep.iter().enumerate() {
            position[old] = new;
        }
        let mut couplers: Vec<Coupler> = self
            .couplers
            .iter()
            .filter(|c| position[c.a] != usize::MAX && position[c.b] != usize::MAX)
            .map(|c| {
                let (a, b) = (position[c.a], position[c.b]);
                Coupler {
                    a: a.min(b),
                    b: a.max(b),
                    strength: c.strength,
                }
            })
            .collect();
        couplers.sort_by_key(|c| (c.a, c.b));
        IsingProblem {
            fields: keep.iter().map(|&i| self.fields[i]).collect(),
            couplers,
            offset: self.offset,
        }
    }
}

/// `E(s)` for a binary state.
pub fn energy(bm: &BoltzmannMachine, state: &StateVector) -> Result<f64> {
    ensure_len(bm.n_units(), state.len())?;
    let s = state.bits();
    let n = bm.n_units();
    let mut e = 0.0;
    for i in 0..n {
        if s[i] == 0 {
            continue;
        }
        e -= bm.bias(i);
        let row = bm.weight_row(i);
        for j in (i + 1)..n {
            if s[j] == 1 {
                e -= row[j];
            }
        }
    }
    Ok(e)
}

/// `-E` of the state encoded by `mask`.
fn neg_energy_mask(bm: &BoltzmannMachine, mask: u64) -> f64 {
    let mut acc = 0.0;
    let mut rest = mask;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        acc += bm.bias(i);
        let row = bm.weight_row(i);
        let mut higher = rest;
        while higher != 0 {
            let j = higher.trailing_zeros() as usize;
            higher &= higher - 1;
            acc += row[j];
        }
    }
    acc
}

fn check_enumerable(n: usize) -> Result<()> {
    if n > ENUMERATION_LIMIT {
        Err(Error::TooLarge {
            units: n,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Normalized probabilities of all `2^n` states, indexed by bitmask.
pub fn state_probabilities(bm: &BoltzmannMachine) -> Result<Vec<f64>> {
    check_enumerable(bm.n_units())?;
    let mut weights: Vec<f64> = (0..1u64 << bm.n_units())
        .map(|mask| neg_energy_mask(bm, mask))
        .collect();
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - max).exp();
        z += *w;
    }
    for w in weights.iter_mut() {
        *w /= z;
    }
    Ok(weights)
}

/// `ln Z`, accumulated in the log domain.
pub fn log_partition(bm: &BoltzmannMachine) -> Result<f64> {
    check_enumerable(bm.n_units())?;
    let neg: Vec<f64> = (0..1u64 << bm.n_units())
        .map(|mask| neg_energy_mask(bm, mask))
        .collect();
    let max = neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(max + neg.iter().map(|x| (x - max).exp()).sum::<f64>().ln())
}

pub fn state_probability(bm: &BoltzmannMachine, state: &StateVector) -> Result<f64> {
    ensure_len(bm.n_units(), state.len())?;
    let log_z = log_partition(bm)?;
    Ok((-energy(bm, state)? - log_z).exp())
}

/// First and second moments of unit activations.
///
/// The second-moment diagonal always equals the first moments since
/// `s_i^2 = s_i` for binary units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MomentForm", into = "MomentForm")]
pub struct MomentStatistics {
    first: Vec<f64>,
    second: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MomentForm {
    first: Vec<f64>,
    second: Vec<Vec<f64>>,
}

impl TryFrom<MomentForm> for MomentStatistics {
    type Error = Error;
    fn try_from(m: MomentForm) -> Result<Self> {
        let n = m.first.len();
        let second = flatten(m.second, n)?;
        MomentStatistics::from_flat(m.first, second)
    }
}

impl From<MomentStatistics> for MomentForm {
    fn from(m: MomentStatistics) -> Self {
        let n = m.n_units();
        MomentForm {
            second: unflatten(&m.second, n),
            first: m.first,
        }
    }
}

impl MomentStatistics {
    /// Builds moments from a row-major second-moment buffer. The diagonal is
    /// overwritten with `first`; off-diagonal entries must be symmetric.
    pub fn from_flat(first: Vec<f64>, mut second: Vec<f64>) -> Result<Self> {
        let n = first.len();
        ensure_len(n * n, second.len())?;
        check_finite(&first, "first moment")?;
        check_finite(&second, "second moment")?;
        for i in 0..n {
            second[i * n + i] = 0.0;
        }
        check_symmetric(n, &second, "second moments")?;
        for i in 0..n {
            second[i * n + i] = first[i];
        }
        Ok(MomentStatistics { first, second })
    }

    /// Builds moments from first moments and a function over pairs `i < j`.
    pub fn from_pair_fn(first: Vec<f64>, mut pair: impl FnMut(usize, usize) -> f64) -> Self {
        let n = first.len();
        let mut second = vec![0.0; n * n];
        for i in 0..n {
            second[i * n + i] = first[i];
            for j in (i + 1)..n {
                let v = pair(i, j);
                second[i * n + j] = v;
                second[j * n + i] = v;
            }
        }
        MomentStatistics { first, second }
    }

    pub fn n_units(&self) -> usize {
        self.first.len()
    }

    pub fn first(&self) -> &[f64] {
        &self.first
    }

    pub fn second(&self, i: usize, j: usize) -> f64 {
        self.second[i * self.n_units() + j]
    }

    pub fn second_flat(&self) -> &[f64] {
        &self.second
    }

    /// Replaces the first moments, keeping off-diagonal second moments.
    pub fn with_first(&self, first: Vec<f64>) -> Result<Self> {
        let n = self.n_units();
        ensure_len(n, first.len())?;
        check_finite(&first, "first moment")?;
        let mut second = self.second.clone();
        for i in 0..n {
            second[i * n + i] = first[i];
        }
        Ok(MomentStatistics { first, second })
    }

    /// Unordered pairs `(i, j, second_ij)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_units();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, self.second(i, j))))
    }

    /// First moments followed by the unordered second moments, in `pairs`
    /// order.
    pub fn flattened(&self) -> Vec<f64> {
        self.first
            .iter()
            .copied()
            .chain(self.pairs().map(|(_, _, v)| v))
            .collect()
    }

    /// Largest absolute difference over first and unordered second moments.
    pub fn max_abs_diff(&self, other: &MomentStatistics) -> Result<f64> {
        ensure_len(self.n_units(), other.n_units())?;
        Ok(self
            .flattened()
            .iter()
            .zip(other.flattened())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Exact moments by enumerating every state.
pub fn exact_moments(bm: &BoltzmannMachine) -> Result<MomentStatistics> {
    let n = bm.n_units();
    let probs = state_probabilities(bm)?;
    let mut first = vec![0.0; n];
    let mut second = vec![0.0; n * n];
    for (mask, &p) in probs.iter().enumerate() {
        let mut rest = mask as u64;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            first[i] += p;
            let mut higher = rest;
            while higher != 0 {
                let j = higher.trailing_zeros() as usize;
                higher &= higher - 1;
                second[i * n + j] += p;
            }
        }
    }
    Ok(MomentStatistics::from_pair_fn(first, |i, j| second[i * n + j]))
}

/// An ordered collection of equally-sized samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch<T> {
    samples: Vec<T>,
}

impl<T> SampleBatch<T> {
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.samples.iter()
    }
}

macro_rules! batch_ctor {
    ($t:ty) => {
        impl SampleBatch<$t> {
            pub fn new(samples: Vec<$t>) -> Result<Self> {
                if let Some(first) = samples.first() {
                    let n = first.len();
                    if let Some(bad) = samples.iter().find(|s| s.len() != n) {
                        return Err(Error::Dimension {
                            expected: n,
                            actual: bad.len(),
                        });
                    }
                }
                Ok(SampleBatch { samples })
            }

            pub fn width(&self) -> Option<usize> {
                self.samples.first().map(|s| s.len())
            }
        }
    };
}

batch_ctor!(StateVector);
batch_ctor!(SpinVector);

impl SampleBatch<SpinVector> {
    pub fn to_bits(&self) -> SampleBatch<StateVector> {
        SampleBatch {
            samples: self.samples.iter().map(spins_to_bits).collect(),
        }
    }
}

impl<T> IntoIterator for SampleBatch<T> {
    type Item = T;
    type IntoIter = std::vec::IntoIter<T>;
    fn into_iter(self) -> Self::IntoIter {
        self.samples.into_iter()
    }
}

/// Sample means of `s_i` and `s_i s_j`.
pub fn empirical_moments(batch: &SampleBatch<StateVector>) -> Result<MomentStatistics> {
    let n = batch.width().ok_or(Error::Empty("sample batch"))?;
    let mut first = vec![0u64; n];
    let mut second = vec![0u64; n * n];
    let mut on = Vec::with_capacity(n);
    for s in batch.iter() {
        on.clear();
        on.extend(s.bits().iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i));
        for (k, &i) in on.iter().enumerate() {
            first[i] += 1;
            for &j in &on[k + 1..] {
                second[i * n + j] += 1;
            }
        }
    }
    let count = batch.count() as f64;
    Ok(MomentStatistics::from_pair_fn(
        first.iter().map(|&c| c as f64 / count).collect(),
        |i, j| second[i * n + j] as f64 / count,
    ))
}

/// Basis change `s = 2x - 1`. The returned offset makes
/// `energy(bm, x) == H(2x - 1) + offset` for every state.
pub fn to_ising(bm: &BoltzmannMachine) -> IsingProblem {
    let n = bm.n_units();
    let mut fields: Vec<f64> = bm.biases().iter().map(|b| b / 2.0).collect();
    let mut couplings = Vec::new();
    let mut offset = -bm.biases().iter().sum::<f64>() / 2.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = bm.weight(i, j);
            if w == 0.0 {
                continue;
            }
            fields[i] += w / 4.0;
            fields[j] += w / 4.0;
            offset -= w / 4.0;
            couplings.push((i, j, w / 4.0));
        }
    }
    IsingProblem::new(fields, &couplings, offset).expect("finite model gives a finite Ising problem")
}
