//! Valid-action algebra for resources moving on a directed graph.
//!
//! A move of one resource is a *displacement* `k`: the resource on node `i`
//! goes to node `(i + k) mod N`, and `k = 0` means staying (which needs a
//! self-loop). The action-displacement matrix `J` has one row per resource and
//! `J[j][k] = H[n_j][(n_j + k) mod N]`, where `n_j` is the node of resource
//! `j`. It is built here as the product of the lifted distribution and the
//! displacement-augmented adjacency `H'`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GragError, Result};

/// Default bound on the size of an explicitly enumerated action set.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Directed graph given by a square 0/1 adjacency matrix (row = source).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct Graph {
    n: usize,
    adjacency: Vec<bool>,
}

impl Graph {
    /// Builds a graph from adjacency rows. Rejects non-square input, entries
    /// other than 0/1, fewer than two nodes, and nodes without outgoing moves.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(GragError::InvalidGraph(format!("need at least 2 nodes, got {n}")));
        }
        let mut adjacency = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GragError::InvalidGraph(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (k, &v) in row.iter().enumerate() {
                match v {
                    0 => adjacency.push(false),
                    1 => adjacency.push(true),
                    _ => {
                        return Err(GragError::InvalidGraph(format!(
                            "entry ({i},{k}) is {v}, expected 0 or 1"
                        )))
                    }
                }
            }
            if !adjacency[i * n..].iter().any(|&b| b) {
                return Err(GragError::InvalidGraph(format!("node {i} has no outgoing move")));
            }
        }
        Ok(Self { n, adjacency })
    }

    /// `i -> i` and `i -> i+1 (mod n)`.
    pub fn directed_ring(n: usize) -> Result<Self> {
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|i| (0..n).map(|k| u8::from(k == i || k == (i + 1) % n)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_rows(&vec![vec![1; n]; n])
    }

    /// Self-loops only.
    pub fn identity(n: usize) -> Result<Self> {
        let rows: Vec<Vec<u8>> = (0..n).map(|i| (0..n).map(|k| u8::from(i == k)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adjacency[from * self.n + to]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.adjacency[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|i| self.row(i).iter().map(|&b| u8::from(b)).collect()).collect()
    }

    /// Text form: the node count on the first line, then one line per row of
    /// space-separated 0/1 entries.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let line: Vec<&str> = self.row(i).iter().map(|&b| if b { "1" } else { "0" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| GragError::Parse("empty graph file".into()))?;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| GragError::Parse(format!("bad node count `{}`", header.trim())))?;
        let mut rows = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let row = line
                .split_whitespace()
                .map(|tok| tok.parse::<u8>())
                .collect::<std::result::Result<Vec<u8>, _>>()
                .map_err(|_| GragError::Parse(format!("bad entry on row {i}")))?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(GragError::Parse(format!("expected {n} rows, found {}", rows.len())));
        }
        Self::from_rows(&rows)
    }
}

impl TryFrom<Vec<Vec<u8>>> for Graph {
    type Error = GragError;
    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<Graph> for Vec<Vec<u8>> {
    fn from(g: Graph) -> Self {
        g.rows()
    }
}

impl FromStr for Graph {
    type Err = GragError;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Per-node resource counts of one player.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceDistribution {
    counts: Vec<u32>,
}

impl ResourceDistribution {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn zeros(n: usize) -> Self {
        Self { counts: vec![0; n] }
    }

    /// Checks the node count against a graph.
    pub fn for_graph(counts: Vec<u32>, g: &Graph) -> Result<Self> {
        if counts.len() != g.n() {
            return Err(GragError::InvalidDistribution(format!(
                "{} entries for a {}-node graph",
                counts.len(),
                g.n()
            )));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }
}

/// Origin node of every resource. Resources are numbered node by node, so a
/// lower node id always gets lower resource ids.
pub fn assign_resource_ids(d: &ResourceDistribution) -> Vec<usize> {
    d.counts
        .iter()
        .enumerate()
        .flat_map(|(node, &c)| std::iter::repeat_n(node, c as usize))
        .collect()
}

/// Stack of one-hot rows, one per resource (the lifted distribution).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedDistribution {
    n: usize,
    nodes: Vec<usize>,
}

impl LiftedDistribution {
    pub fn rows(&self) -> usize {
        self.nodes.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, j: usize, k: usize) -> u8 {
        u8::from(self.nodes[j] == k)
    }

    pub fn row(&self, j: usize) -> Vec<u8> {
        (0..self.n).map(|k| self.entry(j, k)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.rows()).map(|j| self.row(j)).collect()
    }

    pub fn column_sums(&self) -> Vec<u32> {
        let mut sums = vec![0u32; self.n];
        for &node in &self.nodes {
            sums[node] += 1;
        }
        sums
    }
}

pub fn lift(d: &ResourceDistribution) -> LiftedDistribution {
    LiftedDistribution { n: d.n(), nodes: assign_resource_ids(d) }
}

/// `H'` with `H'[i][k] = H[i][(i + k) mod N]`: row `i` of `H` cyclically
/// shifted left by `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisplacementAugmentedAdjacency {
    n: usize,
    entries: Vec<bool>,
}

impl DisplacementAugmentedAdjacency {
    pub fn entry(&self, i: usize, k: usize) -> bool {
        self.entries[i * self.n + k]
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|i| (0..self.n).map(|k| u8::from(self.entry(i, k))).collect()).collect()
    }
}

pub fn build_displacement_augmented(g: &Graph) -> DisplacementAugmentedAdjacency {
    let n = g.n();
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        entries.extend(rotate_left(g.row(i), i));
    }
    DisplacementAugmentedAdjacency { n, entries }
}

/// Row vector times `P^shift`, `P` the left cyclic permutation.
fn rotate_left<T: Copy>(row: &[T], shift: usize) -> Vec<T> {
    let n = row.len();
    (0..n).map(|k| row[(k + shift) % n]).collect()
}

/// One-hot row pushed `shift` places to the right (`e_k P^s = e_{k+s}`).
fn shift_one_hot(row: &[u8], shift: usize) -> Vec<u8> {
    let n = row.len();
    let mut out = vec![0; n];
    for (k, &v) in row.iter().enumerate() {
        out[(k + shift) % n] = v;
    }
    out
}

/// `J`: row `j` lists the displacements available to resource `j`.
///
/// After [`pad_virtual`] the first `virtual_rows` rows belong to virtual
/// resources that may only take displacement 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionDisplacementMatrix {
    n: usize,
    entries: Vec<bool>,
    origins: Vec<usize>,
    virtual_rows: usize,
}

impl ActionDisplacementMatrix {
    pub fn rows(&self) -> usize {
        self.entries.len() / self.n
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nodes of the real resources, in resource-id order.
    pub fn origin_nodes(&self) -> &[usize] {
        &self.origins
    }

    pub fn virtual_rows(&self) -> usize {
        self.virtual_rows
    }

    #[inline]
    pub fn entry(&self, j: usize, k: usize) -> bool {
        self.entries[j * self.n + k]
    }

    pub fn row(&self, j: usize) -> &[bool] {
        &self.entries[j * self.n..(j + 1) * self.n]
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.rows()).map(|j| self.row(j).iter().map(|&b| u8::from(b)).collect()).collect()
    }

    /// Builds a matrix straight from rows; used for hand-made examples.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(GragError::InvalidConfig("ragged or empty action matrix".into()));
        }
        Ok(Self {
            n,
            entries: rows.iter().flatten().map(|&v| v != 0).collect(),
            origins: Vec::new(),
            virtual_rows: 0,
        })
    }

    /// Number of valid joint actions (product of row popcounts).
    pub fn action_count(&self) -> u128 {
        (0..self.rows())
            .map(|j| self.row(j).iter().filter(|&&b| b).count() as u128)
            .product()
    }

    /// Per-row bit masks, compact enough to store in a replay buffer.
    pub fn mask(&self) -> ActionMask {
        assert!(self.n <= 64, "masks support at most 64 nodes");
        ActionMask {
            n: self.n,
            rows: (0..self.rows())
                .map(|j| {
                    self.row(j)
                        .iter()
                        .enumerate()
                        .fold(0u64, |m, (k, &b)| if b { m | (1 << k) } else { m })
                })
                .collect(),
        }
    }
}

pub fn build_action_displacement(g: &Graph, d: &ResourceDistribution) -> Result<ActionDisplacementMatrix> {
    if d.n() != g.n() {
        return Err(GragError::DimensionMismatch { expected: g.n(), got: d.n() });
    }
    let lifted = lift(d);
    let hp = build_displacement_augmented(g);
    let n = g.n();
    let mut entries = Vec::with_capacity(lifted.rows() * n);
    // Dense 0/1 product lifted · H'.
    for j in 0..lifted.rows() {
        for k in 0..n {
            let v: u32 = (0..n).map(|i| u32::from(lifted.entry(j, i)) * u32::from(hp.entry(i, k))).sum();
            entries.push(v > 0);
        }
    }
    Ok(ActionDisplacementMatrix { n, entries, origins: lifted.nodes, virtual_rows: 0 })
}

/// Joint action: one displacement per resource.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionVector(pub Vec<usize>);

impl ActionVector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn moves(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for ActionVector {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// Displacements available to resource `j`.
pub fn valid_resource_actions(j_mat: &ActionDisplacementMatrix, j: usize) -> Result<Vec<usize>> {
    if j >= j_mat.rows() {
        return Err(GragError::IndexOutOfRange { index: j, len: j_mat.rows() });
    }
    Ok(j_mat.row(j).iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k).collect())
}

pub fn is_valid_action(j_mat: &ActionDisplacementMatrix, a: &ActionVector) -> Result<bool> {
    if a.len() != j_mat.rows() {
        return Err(GragError::DimensionMismatch { expected: j_mat.rows(), got: a.len() });
    }
    Ok(a.0.iter().enumerate().all(|(j, &k)| k < j_mat.n && j_mat.entry(j, k)))
}

/// Cartesian product of the per-resource sets, lexicographic with resource 0
/// most significant. This is also ascending flat-index order.
pub fn enumerate_valid_actions(j_mat: &ActionDisplacementMatrix, cap: u128) -> Result<Vec<ActionVector>> {
    let count = j_mat.action_count();
    if count > cap {
        return Err(GragError::CapExceeded { count, cap });
    }
    let choices: Vec<Vec<usize>> =
        (0..j_mat.rows()).map(|j| valid_resource_actions(j_mat, j)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(count as usize);
    if count == 0 {
        return Ok(out);
    }
    let mut cursor = vec![0usize; choices.len()];
    loop {
        out.push(ActionVector(cursor.iter().zip(&choices).map(|(&c, ch)| ch[c]).collect()));
        // odometer increment from the least significant resource
        let mut pos = choices.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            cursor[pos] += 1;
            if cursor[pos] < choices[pos].len() {
                break;
            }
            cursor[pos] = 0;
        }
    }
}

/// Moves every resource `j` from `n_j` to `(n_j + a_j) mod N`, summing the
/// shifted lifted rows.
pub fn apply_action(d: &ResourceDistribution, a: &ActionVector, g: &Graph) -> Result<ResourceDistribution> {
    let j_mat = build_action_displacement(g, d)?;
    if !is_valid_action(&j_mat, a)? {
        return Err(GragError::InvalidAction(format!("{:?} violates the action matrix", a.0)));
    }
    Ok(shift_and_sum(&lift(d), a.moves()))
}

fn shift_and_sum(lifted: &LiftedDistribution, moves: &[usize]) -> ResourceDistribution {
    let mut counts = vec![0u32; lifted.n()];
    for (j, &k) in moves.iter().enumerate() {
        for (acc, v) in counts.iter_mut().zip(shift_one_hot(&lifted.row(j), k)) {
            *acc += u32::from(v);
        }
    }
    ResourceDistribution::new(counts)
}

/// Real and padded resource counts for a player with fewer resources.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaddedActionContext {
    pub m_real: usize,
    pub m_total: usize,
}

impl PaddedActionContext {
    pub fn new(m_real: usize, m_total: usize) -> Result<Self> {
        if m_real > m_total {
            return Err(GragError::InvalidPadding { real: m_real, total: m_total });
        }
        Ok(Self { m_real, m_total })
    }

    pub fn virtual_count(&self) -> usize {
        self.m_total - self.m_real
    }
}

/// Prepends `M - M1` rows `(1, 0, .., 0)` for virtual resources.
pub fn pad_virtual(j_mat: &ActionDisplacementMatrix, ctx: PaddedActionContext) -> Result<ActionDisplacementMatrix> {
    if ctx.m_real > ctx.m_total {
        return Err(GragError::InvalidPadding { real: ctx.m_real, total: ctx.m_total });
    }
    if j_mat.rows() != ctx.m_real {
        return Err(GragError::DimensionMismatch { expected: ctx.m_real, got: j_mat.rows() });
    }
    let n = j_mat.n;
    let pad = ctx.virtual_count();
    let mut entries = Vec::with_capacity(ctx.m_total * n);
    for _ in 0..pad {
        entries.push(true);
        entries.extend(std::iter::repeat_n(false, n - 1));
    }
    entries.extend_from_slice(&j_mat.entries);
    Ok(ActionDisplacementMatrix {
        n,
        entries,
        origins: j_mat.origins.clone(),
        virtual_rows: j_mat.virtual_rows + pad,
    })
}

/// Applies a padded action: the leading virtual entries must be zero and only
/// the trailing `M1` entries move real resources.
pub fn apply_padded_action(
    d: &ResourceDistribution,
    a: &ActionVector,
    ctx: PaddedActionContext,
    g: &Graph,
) -> Result<ResourceDistribution> {
    if a.len() != ctx.m_total {
        return Err(GragError::DimensionMismatch { expected: ctx.m_total, got: a.len() });
    }
    if d.total() != ctx.m_real {
        return Err(GragError::InvalidDistribution(format!(
            "distribution holds {} resources, context expects {}",
            d.total(),
            ctx.m_real
        )));
    }
    let pad = ctx.virtual_count();
    if let Some(pos) = a.0[..pad].iter().position(|&k| k != 0) {
        return Err(GragError::InvalidAction(format!("virtual resource {pos} must stay (got {})", a.0[pos])));
    }
    let j_mat = pad_virtual(&build_action_displacement(g, d)?, ctx)?;
    if !is_valid_action(&j_mat, a)? {
        return Err(GragError::InvalidAction(format!("{:?} violates the padded action matrix", a.0)));
    }
    Ok(shift_and_sum(&lift(d), &a.0[pad..]))
}

/// `N^M`, or `IndexOverflow` when it does not fit.
pub fn action_space_size(n: usize, m: usize) -> Result<usize> {
    let exp = u32::try_from(m).map_err(|_| GragError::IndexOverflow { n, m })?;
    n.checked_pow(exp).ok_or(GragError::IndexOverflow { n, m })
}

/// Base-`N` positional index, resource 0 most significant.
pub fn action_index(a: &ActionVector, n: usize) -> Result<usize> {
    action_space_size(n, a.len())?;
    let mut idx = 0usize;
    for &k in a.moves() {
        if k >= n {
            return Err(GragError::InvalidAction(format!("displacement {k} out of range for {n} nodes")));
        }
        idx = idx * n + k;
    }
    Ok(idx)
}

pub fn decode_action(index: usize, n: usize, m: usize) -> Result<ActionVector> {
    let size = action_space_size(n, m)?;
    if index >= size {
        return Err(GragError::IndexOutOfRange { index, len: size });
    }
    let mut moves = vec![0usize; m];
    let mut rest = index;
    for slot in moves.iter_mut().rev() {
        *slot = rest % n;
        rest /= n;
    }
    Ok(ActionVector(moves))
}

/// Compact valid-action descriptor: bit `k` of `rows[j]` is `J[j][k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMask {
    n: usize,
    rows: Vec<u64>,
}

impl ActionMask {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self) -> u128 {
        self.rows.iter().map(|r| u128::from(r.count_ones())).product()
    }

    /// Flat indices of all valid actions, ascending.
    pub fn indices(&self) -> Vec<usize> {
        let mut out = vec![0usize];
        for &row in &self.rows {
            let mut next = Vec::with_capacity(out.len() * row.count_ones() as usize);
            for &prefix in &out {
                for k in (0..self.n).filter(|&k| row >> k & 1 == 1) {
                    next.push(prefix * self.n + k);
                }
            }
            out = next;
        }
        out
    }

    pub fn contains(&self, index: usize) -> bool {
        let mut rest = index;
        for &row in self.rows.iter().rev() {
            if row >> (rest % self.n) & 1 == 0 {
                return false;
            }
            rest /= self.n;
        }
        rest == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper4() -> Graph {
        Graph::from_rows(&[vec![1, 0, 1, 1], vec![1, 1, 1, 1], vec![1, 1, 0, 1], vec![0, 0, 1, 1]]).unwrap()
    }

    fn dist(c: &[u32]) -> ResourceDistribution {
        ResourceDistribution::new(c.to_vec())
    }

    #[test]
    fn displacement_augmented_examples() {
        let hp = build_displacement_augmented(&paper4());
        assert_eq!(hp.to_dense(), vec![vec![1, 0, 1, 1], vec![1, 1, 1, 1], vec![0, 1, 1, 1], vec![1, 0, 0, 1]]);
        let id = build_displacement_augmented(&Graph::identity(3).unwrap());
        assert!(id.to_dense().iter().all(|r| r == &vec![1, 0, 0]));
        let full = build_displacement_augmented(&Graph::complete(3).unwrap());
        assert_eq!(full.to_dense(), vec![vec![1; 3]; 3]);
    }

    #[test]
    fn resource_ids_follow_node_order() {
        assert_eq!(assign_resource_ids(&dist(&[3, 0, 1, 2])), vec![0, 0, 0, 2, 3, 3]);
        assert_eq!(assign_resource_ids(&dist(&[0, 0, 0, 4])), vec![3, 3, 3, 3]);
        assert_eq!(assign_resource_ids(&dist(&[1, 1, 1])), vec![0, 1, 2]);
    }

    #[test]
    fn lift_examples() {
        assert_eq!(lift(&dist(&[1, 0, 2])).to_dense(), vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 0, 1]]);
        assert_eq!(lift(&dist(&[0, 2])).to_dense(), vec![vec![0, 1], vec![0, 1]]);
        let l = lift(&dist(&[3, 0, 1, 2]));
        assert_eq!(l.rows(), 6);
        assert_eq!(l.column_sums(), vec![3, 0, 1, 2]);
        for (j, node) in [0, 0, 0, 2, 3, 3].into_iter().enumerate() {
            assert_eq!(l.row(j).iter().position(|&v| v == 1), Some(node));
        }
    }

    #[test]
    fn action_matrix_on_example_graph() {
        let j = build_action_displacement(&paper4(), &dist(&[3, 0, 1, 2])).unwrap();
        assert_eq!(
            j.to_dense(),
            vec![
                vec![1, 0, 1, 1],
                vec![1, 0, 1, 1],
                vec![1, 0, 1, 1],
                vec![0, 1, 1, 1],
                vec![1, 0, 0, 1],
                vec![1, 0, 0, 1],
            ]
        );
        assert_eq!(j.origin_nodes(), &[0, 0, 0, 2, 3, 3]);
        let full = build_action_displacement(&Graph::complete(3).unwrap(), &dist(&[2, 0, 1])).unwrap();
        assert!(full.to_dense().iter().all(|r| r == &vec![1, 1, 1]));
        let id = build_action_displacement(&Graph::identity(3).unwrap(), &dist(&[1, 1, 1])).unwrap();
        assert!(id.to_dense().iter().all(|r| r == &vec![1, 0, 0]));
    }

    #[test]
    fn resource_action_sets() {
        let j = build_action_displacement(&paper4(), &dist(&[3, 0, 1, 2])).unwrap();
        assert_eq!(valid_resource_actions(&j, 0).unwrap(), vec![0, 2, 3]);
        assert_eq!(valid_resource_actions(&j, 4).unwrap(), vec![0, 3]);
        let full = ActionDisplacementMatrix::from_rows(&[vec![1, 1, 1, 1]]).unwrap();
        assert_eq!(valid_resource_actions(&full, 0).unwrap(), vec![0, 1, 2, 3]);
        assert!(matches!(valid_resource_actions(&j, 6), Err(GragError::IndexOutOfRange { index: 6, len: 6 })));
    }

    #[test]
    fn validity_examples() {
        let j = build_action_displacement(&paper4(), &dist(&[3, 0, 1, 2])).unwrap();
        assert!(is_valid_action(&j, &vec![0, 2, 2, 3, 0, 3].into()).unwrap());
        assert!(!is_valid_action(&j, &vec![0, 1, 2, 3, 0, 3].into()).unwrap());
        // the printed "valid" example fails at the node-3 resources
        assert!(!is_valid_action(&j, &vec![0, 2, 2, 3, 1, 2].into()).unwrap());
        assert!(is_valid_action(&j, &vec![0, 0, 0, 1, 0, 0].into()).unwrap());
        assert!(is_valid_action(&j, &ActionVector::zeros(5)).is_err());
        let ring = Graph::directed_ring(4).unwrap();
        let jr = build_action_displacement(&ring, &dist(&[1, 2, 0, 1])).unwrap();
        assert!(is_valid_action(&jr, &ActionVector::zeros(4)).unwrap());
    }

    #[test]
    fn enumeration_examples() {
        let j = ActionDisplacementMatrix::from_rows(&[vec![1, 1, 0], vec![1, 0, 1]]).unwrap();
        let all = enumerate_valid_actions(&j, DEFAULT_ENUMERATION_CAP).unwrap();
        let expect: Vec<ActionVector> =
            vec![vec![0, 0].into(), vec![0, 2].into(), vec![1, 0].into(), vec![1, 2].into()];
        assert_eq!(all, expect);
        let one = ActionDisplacementMatrix::from_rows(&[vec![1, 0, 0], vec![1, 0, 0], vec![1, 0, 0]]).unwrap();
        assert_eq!(enumerate_valid_actions(&one, 10).unwrap(), vec![ActionVector::zeros(3)]);
        let jp = build_action_displacement(&paper4(), &dist(&[3, 0, 1, 2])).unwrap();
        assert_eq!(enumerate_valid_actions(&jp, DEFAULT_ENUMERATION_CAP).unwrap().len(), 324);
        assert!(matches!(
            enumerate_valid_actions(&jp, 100),
            Err(GragError::CapExceeded { count: 324, cap: 100 })
        ));
    }

    #[test]
    fn transition_examples() {
        let g = paper4();
        let d = dist(&[3, 0, 1, 2]);
        assert_eq!(apply_action(&d, &vec![0, 2, 2, 3, 0, 3].into(), &g).unwrap(), dist(&[1, 1, 3, 1]));
        let ring = Graph::directed_ring(5).unwrap();
        let d5 = dist(&[2, 0, 1, 0, 3]);
        assert_eq!(apply_action(&d5, &ActionVector::zeros(6), &ring).unwrap(), d5);
        let k2 = Graph::complete(2).unwrap();
        assert_eq!(apply_action(&dist(&[2, 0]), &vec![1, 1].into(), &k2).unwrap(), dist(&[0, 2]));
        assert!(matches!(
            apply_action(&d, &vec![0, 1, 2, 3, 0, 3].into(), &g),
            Err(GragError::InvalidAction(_))
        ));
    }

    #[test]
    fn padding_examples() {
        let j1 = ActionDisplacementMatrix::from_rows(&[vec![1, 0, 1, 1], vec![0, 1, 1, 0]]).unwrap();
        let padded = pad_virtual(&j1, PaddedActionContext::new(2, 3).unwrap()).unwrap();
        assert_eq!(padded.to_dense(), vec![vec![1, 0, 0, 0], vec![1, 0, 1, 1], vec![0, 1, 1, 0]]);
        assert_eq!(padded.virtual_rows(), 1);
        assert_eq!(pad_virtual(&j1, PaddedActionContext { m_real: 2, m_total: 2 }).unwrap(), j1);
        let empty = ActionDisplacementMatrix { n: 4, entries: vec![], origins: vec![], virtual_rows: 0 };
        let all_virtual = pad_virtual(&empty, PaddedActionContext::new(0, 3).unwrap()).unwrap();
        assert!(all_virtual.to_dense().iter().all(|r| r == &vec![1, 0, 0, 0]));
        assert!(PaddedActionContext::new(3, 2).is_err());
        assert!(pad_virtual(&j1, PaddedActionContext { m_real: 3, m_total: 2 }).is_err());
    }

    #[test]
    fn padded_transition_examples() {
        let k4 = Graph::complete(4).unwrap();
        let ctx = PaddedActionContext::new(2, 3).unwrap();
        let d = dist(&[1, 1, 0, 0]);
        assert_eq!(apply_padded_action(&d, &vec![0, 2, 1].into(), ctx, &k4).unwrap(), dist(&[0, 0, 2, 0]));
        assert_eq!(apply_padded_action(&d, &ActionVector::zeros(3), ctx, &k4).unwrap(), d);
        assert!(matches!(
            apply_padded_action(&d, &vec![1, 0, 0].into(), ctx, &k4),
            Err(GragError::InvalidAction(_))
        ));
    }

    #[test]
    fn index_examples() {
        assert_eq!(action_index(&vec![0, 2, 2, 3, 0, 3].into(), 4).unwrap(), 691);
        assert_eq!(action_index(&ActionVector::zeros(5), 4).unwrap(), 0);
        assert_eq!(action_index(&vec![2, 2].into(), 3).unwrap(), 8);
        assert_eq!(decode_action(691, 4, 6).unwrap(), vec![0, 2, 2, 3, 0, 3].into());
        assert!(decode_action(9, 3, 2).is_err());
        assert!(matches!(action_index(&ActionVector::zeros(80), 4), Err(GragError::IndexOverflow { .. })));
    }

    #[test]
    fn mask_indices_match_enumeration() {
        let j = build_action_displacement(&paper4(), &dist(&[3, 0, 1, 2])).unwrap();
        let mask = j.mask();
        let from_enum: Vec<usize> = enumerate_valid_actions(&j, DEFAULT_ENUMERATION_CAP)
            .unwrap()
            .iter()
            .map(|a| action_index(a, 4).unwrap())
            .collect();
        assert_eq!(mask.indices(), from_enum);
        assert_eq!(mask.count(), 324);
        assert!(mask.contains(691));
        assert!(!mask.contains(action_index(&vec![0, 1, 2, 3, 0, 3].into(), 4).unwrap()));
    }

    #[test]
    fn graph_validation_and_text() {
        assert!(Graph::from_rows(&[vec![1, 0], vec![0, 0]]).is_err());
        assert!(Graph::from_rows(&[vec![1, 2], vec![0, 1]]).is_err());
        assert!(Graph::from_rows(&[vec![1, 0, 1], vec![0, 1]]).is_err());
        assert!(Graph::from_rows(&[vec![1]]).is_err());
        let text = "4\n1 0 1 1\n1 1 1 1\n1 1 0 1\n0 0 1 1\n";
        let g: Graph = text.parse().unwrap();
        assert_eq!(g, paper4());
        assert_eq!(g.to_text(), text);
        assert!("3\n1 0 0\n0 1 0\n".parse::<Graph>().is_err());
    }
}
