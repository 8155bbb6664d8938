//! Chimera hardware graphs, complete-graph minor embeddings, and the mapping
//! of logical Ising problems onto physical qubits and back.
//!
//! Qubits are indexed `((row * cols + col) * 2 + orientation) * 4 + k` where
//! orientation 0 is the vertical shore and 1 the horizontal shore of a cell.
//! Each cell is a complete bipartite `K_{4,4}`; vertical qubits couple to the
//! same `k` in the cell below, horizontal qubits to the same `k` in the cell
//! to the right.

use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{ensure_len, Error, Result};
use crate::model::{IsingProblem, SampleBatch, SpinVector};
use crate::seed;

pub const SHORE: usize = 4;

const VERTICAL: usize = 0;
const HORIZONTAL: usize = 1;

#[derive(Debug, Clone)]
pub struct ChimeraGraph {
    rows: usize,
    cols: usize,
    edges: Vec<(usize, usize)>,
    edge_set: HashSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl ChimeraGraph {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shore(&self) -> usize {
        SHORE
    }

    pub fn num_qubits(&self) -> usize {
        self.rows * self.cols * 2 * SHORE
    }

    /// Undirected edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_set.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.neighbors[q]
    }

    pub fn qubit(&self, row: usize, col: usize, orientation: usize, k: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols && orientation < 2 && k < SHORE);
        ((row * self.cols + col) * 2 + orientation) * SHORE + k
    }

    /// Largest complete graph the triangular clique construction can embed.
    pub fn clique_capacity(&self) -> usize {
        SHORE * self.rows.min(self.cols)
    }
}

pub fn chimera_graph(rows: usize, cols: usize) -> Result<ChimeraGraph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(
            "Chimera dimensions must be at least 1x1".into(),
        ));
    }
    let mut g = ChimeraGraph {
        rows,
        cols,
        edges: Vec::new(),
        edge_set: HashSet::new(),
        neighbors: Vec::new(),
    };
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            for a in 0..SHORE {
                for b in 0..SHORE {
                    edges.push((g.qubit(r, c, VERTICAL, a), g.qubit(r, c, HORIZONTAL, b)));
                }
                if r + 1 < rows {
                    edges.push((g.qubit(r, c, VERTICAL, a), g.qubit(r + 1, c, VERTICAL, a)));
                }
                if c + 1 < cols {
                    edges.push((g.qubit(r, c, HORIZONTAL, a), g.qubit(r, c + 1, HORIZONTAL, a)));
                }
            }
        }
    }
    let mut edges: Vec<(usize, usize)> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    edges.sort_unstable();
    let mut neighbors = vec![Vec::new(); g.num_qubits()];
    for &(a, b) in &edges {
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    g.edge_set = edges.iter().copied().collect();
    g.edges = edges;
    g.neighbors = neighbors;
    Ok(g)
}

/// Logical unit `i` is represented by the physical qubits in `chains[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    chains: Vec<Vec<usize>>,
}

impl Embedding {
    pub fn new(chains: Vec<Vec<usize>>) -> Self {
        Embedding { chains }
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn chain(&self, logical: usize) -> &[usize] {
        &self.chains[logical]
    }

    pub fn n_logical(&self) -> usize {
        self.chains.len()
    }

    pub fn qubits_used(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn max_chain_length(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Physical qubits in chain order, logical 0 first.
    pub fn physical_qubits(&self) -> Vec<usize> {
        self.chains.iter().flatten().copied().collect()
    }

    /// Renames physical qubits through `map`.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Embedding {
        Embedding {
            chains: self
                .chains
                .iter()
                .map(|c| c.iter().map(|&q| map(q)).collect())
                .collect(),
        }
    }

    /// Checks chain disjointness, chain connectivity, and that every pair of
    /// chains shares at least one coupler.
    pub fn validate(&self, graph: &ChimeraGraph) -> Result<()> {
        let mut owner = vec![usize::MAX; graph.num_qubits()];
        for (i, chain) in self.chains.iter().enumerate() {
            if chain.is_empty() {
                return Err(Error::Embedding(format!("chain {i} is empty")));
            }
            for &q in chain {
                if q >= graph.num_qubits() {
                    return Err(Error::Embedding(format!("chain {i} uses qubit {q} outside the graph")));
                }
                if owner[q] != usize::MAX {
                    return Err(Error::Embedding(format!(
                        "qubit {q} is shared by chains {} and {i}",
                        owner[q]
                    )));
                }
                owner[q] = i;
            }
        }
        for (i, chain) in self.chains.iter().enumerate() {
            let mut seen = HashSet::from([chain[0]]);
            let mut queue = VecDeque::from([chain[0]]);
            while let Some(q) = queue.pop_front() {
                for &nb in graph.neighbors(q) {
                    if owner[nb] == i && seen.insert(nb) {
                        queue.push_back(nb);
                    }
                }
            }
            if seen.len() != chain.len() {
                return Err(Error::Embedding(format!("chain {i} is not connected")));
            }
        }
        let n = self.chains.len();
        let mut coupled = vec![false; n * n];
        for &(a, b) in graph.edges() {
            let (i, j) = (owner[a], owner[b]);
            if i != usize::MAX && j != usize::MAX && i != j {
                coupled[i * n + j] = true;
                coupled[j * n + i] = true;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if !coupled[i * n + j] {
                    return Err(Error::Embedding(format!("no coupler joins chains {i} and {j}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let map: BTreeMap<usize, &Vec<usize>> = self.chains.iter().enumerate().collect();
        Ok(serde_json::to_string_pretty(&map)?)
    }

    /// Parses `{"0": [q, ...], "1": [...], ...}`; logical indices must be
    /// exactly `0..n`.
    pub fn from_json(text: &str) -> Result<Self> {
        let map: BTreeMap<usize, Vec<usize>> = serde_json::from_str(text)?;
        if let Some((pos, (&key, _))) = map.iter().enumerate().find(|(pos, (k, _))| *pos != **k) {
            return Err(Error::Embedding(format!(
                "logical index {pos} missing (found {key} instead)"
            )));
        }
        Ok(Embedding {
            chains: map.into_values().collect(),
        })
    }
}

impl Serialize for Embedding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<usize, &Vec<usize>> = self.chains.iter().enumerate().collect();
        map.serialize(s)
    }
}

/// Deterministic triangular embedding of `K_k`.
///
/// With `m = min(rows, cols)`, logical unit `i` belongs to block
/// `b = i / 4` with shore index `k = i % 4`. Its chain is the horizontal
/// qubits of row `b` in columns `0..=b` followed by the vertical qubits of
/// column `b` in rows `b..m`, so every chain has `m + 1` qubits. Chains in
/// blocks `b < b'` meet in cell `(b', b)`; chains in the same block meet in
/// the diagonal cell `(b, b)`. A lone unit needs no coupling and gets a
/// single qubit.
pub fn clique_embedding(k: usize, graph: &ChimeraGraph) -> Result<Embedding> {
    let capacity = graph.clique_capacity();
    if k > capacity {
        return Err(Error::Capacity { requested: k, capacity });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("cannot embed an empty clique".into()));
    }
    if k == 1 {
        return Ok(Embedding::new(vec![vec![graph.qubit(0, 0, HORIZONTAL, 0)]]));
    }
    let m = graph.rows().min(graph.cols());
    let chains = (0..k)
        .map(|i| {
            let (b, s) = (i / SHORE, i % SHORE);
            let horizontal = (0..=b).map(|c| graph.qubit(b, c, HORIZONTAL, s));
            let vertical = (b..m).map(|r| graph.qubit(r, b, VERTICAL, s));
            horizontal.chain(vertical).collect()
        })
        .collect();
    Ok(Embedding::new(chains))
}

/// Embeds `K_{k * multiplier}` and merges each run of `multiplier`
/// consecutive chains into one logical chain.
pub fn stretch_embedding(k: usize, multiplier: usize, graph: &ChimeraGraph) -> Result<Embedding> {
    if !(1..=3).contains(&multiplier) {
        return Err(Error::InvalidParameter(format!(
            "chain multiplier must be 1, 2 or 3, got {multiplier}"
        )));
    }
    let base = clique_embedding(k * multiplier, graph)?;
    if multiplier == 1 {
        return Ok(base);
    }
    let merged = Embedding::new(base.chains.chunks(multiplier).map(|group| group.concat()).collect());
    merged.validate(graph)?;
    Ok(merged)
}

/// Smallest square Chimera graph whose clique capacity holds `k` units.
pub fn minimal_square_graph(k: usize) -> Result<ChimeraGraph> {
    let m = k.div_ceil(SHORE).max(1);
    chimera_graph(m, m)
}

/// Largest `|J|` among the physical couplers produced by splitting the
/// logical couplings.
pub fn max_split_coupling(logical: &IsingProblem, emb: &Embedding, graph: &ChimeraGraph) -> f64 {
    split_couplings(logical, emb, graph)
        .iter()
        .fold(0.0_f64, |m, &(_, _, v)| m.max(v.abs()))
}

/// `factor * max_split_coupling`, or `factor` alone for a problem with no
/// couplings.
pub fn relative_chain_strength(factor: f64, logical: &IsingProblem, emb: &Embedding, graph: &ChimeraGraph) -> f64 {
    let max = max_split_coupling(logical, emb, graph);
    if max > 0.0 {
        factor * max
    } else {
        factor
    }
}

/// Owner table: `owner[q]` is the logical chain holding physical qubit `q`.
fn owners(emb: &Embedding, n_qubits: usize) -> Vec<usize> {
    let mut owner = vec![usize::MAX; n_qubits];
    for (i, chain) in emb.chains().iter().enumerate() {
        for &q in chain {
            owner[q] = i;
        }
    }
    owner
}

/// Physical couplers carrying each logical coupling, with the logical value
/// divided equally among them.
fn split_couplings(logical: &IsingProblem, emb: &Embedding, graph: &ChimeraGraph) -> Vec<(usize, usize, f64)> {
    let n = emb.n_logical();
    let owner = owners(emb, graph.num_qubits());
    let mut between: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n * n];
    for &(a, b) in graph.edges() {
        let (i, j) = (owner[a], owner[b]);
        if i != usize::MAX && j != usize::MAX && i != j {
            between[i.min(j) * n + i.max(j)].push((a, b));
        }
    }
    let mut out = Vec::new();
    for c in logical.couplers() {
        let links = &between[c.a * n + c.b];
        let share = c.strength / links.len() as f64;
        out.extend(links.iter().map(|&(a, b)| (a, b, share)));
    }
    out
}

/// Maps a logical problem onto the physical graph.
///
/// Each field `h_i` is split equally over chain `i`; each coupling `J_ij`
/// equally over the couplers between chains `i` and `j`. Couplers inside a
/// chain get `+chain_strength`. The logical offset is carried unchanged.
pub fn embed_ising(
    logical: &IsingProblem,
    emb: &Embedding,
    graph: &ChimeraGraph,
    chain_strength: f64,
) -> Result<IsingProblem> {
    if !(chain_strength > 0.0 && chain_strength.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "chain strength must be positive, got {chain_strength}"
        )));
    }
    ensure_len(logical.n_spins(), emb.n_logical())?;
    emb.validate(graph)?;
    let owner = owners(emb, graph.num_qubits());
    let mut fields = vec![0.0; graph.num_qubits()];
    for (i, chain) in emb.chains().iter().enumerate() {
        let share = logical.fields()[i] / chain.len() as f64;
        for &q in chain {
            fields[q] = share;
        }
    }
    let mut couplings = split_couplings(logical, emb, graph);
    for &(a, b) in graph.edges() {
        if owner[a] != usize::MAX && owner[a] == owner[b] {
            couplings.push((a, b, chain_strength));
        }
    }
    IsingProblem::new(fields, &couplings, logical.offset())
}

/// Resolves each chain to the sign of its spin sum. Exact ties are broken by
/// a fair coin keyed on `(seed, read, logical index)`.
pub fn majority_vote_decode(
    batch: &SampleBatch<SpinVector>,
    emb: &Embedding,
    seed: u64,
) -> Result<SampleBatch<SpinVector>> {
    let width = emb.chains().iter().flatten().max().map_or(0, |&q| q + 1);
    let decoded = batch
        .iter()
        .enumerate()
        .map(|(read, sample)| {
            if sample.len() < width {
                return Err(Error::Dimension {
                    expected: width,
                    actual: sample.len(),
                });
            }
            let s = sample.spins();
            let logical = emb
                .chains()
                .iter()
                .enumerate()
                .map(|(i, chain)| {
                    let sum: i64 = chain.iter().map(|&q| i64::from(s[q])).sum();
                    match sum.signum() {
                        1 => 1,
                        -1 => -1,
                        _ => {
                            if seed::derive(seed, &[read as u64, i as u64]) & 1 == 1 {
                                1
                            } else {
                                -1
                            }
                        }
                    }
                })
                .collect();
            Ok(SpinVector::from_raw(logical))
        })
        .collect::<Result<Vec<_>>>()?;
    SampleBatch::<SpinVector>::new(decoded)
}

/// Fraction of (read, chain) pairs whose spins are not unanimous.
pub fn chain_break_fraction(batch: &SampleBatch<SpinVector>, emb: &Embedding) -> f64 {
    let total = batch.count() * emb.n_logical();
    if total == 0 {
        return 0.0;
    }
    let broken = batch
        .iter()
        .map(|sample| {
            let s = sample.spins();
            emb.chains()
                .iter()
                .filter(|chain| chain.iter().any(|&q| s[q] != s[chain[0]]))
                .count()
        })
        .sum::<usize>();
    broken as f64 / total as f64
}
