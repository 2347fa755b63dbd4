//! Boundary strata combinatorics for M̄₀,ₙ.
//!
//! A boundary stratum is indexed by a stable tree: a tree whose vertices carry
//! the markings 1..n as legs, with every vertex of valence at least 3
//! (valence = incident edges + legs). The codimension of the stratum is the
//! number of edges. Trees are kept in a canonical form, so strata can be used
//! directly as map keys and linear combinations collapse by key.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub type Marking = u8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrataError {
    #[error("marking count n={0} out of range (need 3 <= n <= 16)")]
    BadMarkingCount(u8),
    #[error("codimension {codim} out of range for n={n}")]
    CodimOutOfRange { n: u8, codim: u8 },
    #[error("vertex {vertex} has valence {valence} < 3")]
    UnstableVertex { vertex: usize, valence: usize },
    #[error("edge set is not a tree (must be connected and acyclic)")]
    NotATree,
    #[error("invalid edge ({0}, {1})")]
    BadEdge(usize, usize),
    #[error("legs must be exactly the markings 1..=n, each on one vertex")]
    BadLegs,
    #[error("invalid partition side for n={n}: need 2 <= |A| <= n-2 with distinct markings in 1..=n")]
    BadPartition { n: u8 },
    #[error("marking {0} out of range 1..={1}")]
    MarkingOutOfRange(u8, u8),
    #[error("marking count mismatch: {0} vs {1}")]
    MarkingMismatch(u8, u8),
    #[error("fixed-point-free involutions require even n, got {0}")]
    OddMarkingCount(u8),
    #[error("permutation is not a fixed-point-free involution")]
    NotFixedPointFree,
    #[error("invalid permutation: {0}")]
    BadPermutation(String),
    #[error("invalid chain shape {0:?} for n={1}")]
    BadShape(Vec<u8>, u8),
    #[error("cannot parse stratum {0:?}")]
    BadStratumLiteral(String),
}

// ---------------------------------------------------------------------------
// Permutations of the markings
// ---------------------------------------------------------------------------

/// A permutation of the markings `1..=n`, stored as the image list.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<u8>,
}

impl Permutation {
    pub fn identity(n: u8) -> Self {
        Permutation {
            images: (1..=n).collect(),
        }
    }

    pub fn from_images(images: Vec<u8>) -> Result<Self, StrataError> {
        let n = images.len() as u8;
        let mut seen = vec![false; n as usize];
        for &v in &images {
            if v < 1 || v > n || seen[(v - 1) as usize] {
                return Err(StrataError::BadPermutation(format!("images {images:?}")));
            }
            seen[(v - 1) as usize] = true;
        }
        Ok(Permutation { images })
    }

    pub fn transposition(n: u8, a: u8, b: u8) -> Result<Self, StrataError> {
        let mut p = Permutation::identity(n);
        if a < 1 || a > n {
            return Err(StrataError::MarkingOutOfRange(a, n));
        }
        if b < 1 || b > n {
            return Err(StrataError::MarkingOutOfRange(b, n));
        }
        p.images.swap((a - 1) as usize, (b - 1) as usize);
        Ok(p)
    }

    /// Parses cycle notation such as `"(12)(34)(56)(78)"`. For n >= 10 the
    /// markings inside a cycle must be separated by commas or spaces.
    pub fn from_cycles(n: u8, s: &str) -> Result<Self, StrataError> {
        let bad = |m: &str| StrataError::BadPermutation(format!("{s:?}: {m}"));
        let t = s.trim();
        if t == "()" || t.is_empty() {
            return Ok(Permutation::identity(n));
        }
        let mut perm = Permutation::identity(n);
        let mut rest = t;
        while !rest.is_empty() {
            let Some(inner_start) = rest.strip_prefix('(') else {
                return Err(bad("expected '('"));
            };
            let Some(end) = inner_start.find(')') else {
                return Err(bad("missing ')'"));
            };
            let body = &inner_start[..end];
            rest = inner_start[end + 1..].trim_start();
            let cycle = parse_marking_list(body)
                .ok_or_else(|| bad("bad cycle body"))?;
            if cycle.is_empty() {
                continue;
            }
            for &m in &cycle {
                if m < 1 || m > n {
                    return Err(StrataError::MarkingOutOfRange(m, n));
                }
            }
            let mut cyc = Permutation::identity(n);
            for w in cycle.windows(2) {
                cyc.images[(w[0] - 1) as usize] = w[1];
            }
            cyc.images[(cycle[cycle.len() - 1] - 1) as usize] = cycle[0];
            Permutation::from_images(cyc.images.clone())
                .map_err(|_| bad("repeated marking in cycle"))?;
            perm = cyc.compose(&perm);
        }
        Ok(perm)
    }

    pub fn n(&self) -> u8 {
        self.images.len() as u8
    }

    pub fn apply(&self, m: u8) -> u8 {
        self.images[(m - 1) as usize]
    }

    /// `(self ∘ rhs)(x) = self(rhs(x))`.
    pub fn compose(&self, rhs: &Permutation) -> Permutation {
        assert_eq!(self.n(), rhs.n());
        Permutation {
            images: rhs.images.iter().map(|&m| self.apply(m)).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0u8; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            images[(v - 1) as usize] = (i + 1) as u8;
        }
        Permutation { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| v == (i + 1) as u8)
    }

    pub fn is_involution(&self) -> bool {
        self.compose(self).is_identity()
    }

    pub fn is_fixed_point_free_involution(&self) -> bool {
        self.is_involution()
            && self
                .images
                .iter()
                .enumerate()
                .all(|(i, &v)| v != (i + 1) as u8)
    }

    fn cycles(&self) -> Vec<Vec<u8>> {
        let n = self.n();
        let mut seen = vec![false; n as usize];
        let mut cycles = Vec::new();
        for start in 1..=n {
            if seen[(start - 1) as usize] {
                continue;
            }
            let mut cyc = vec![start];
            seen[(start - 1) as usize] = true;
            let mut cur = self.apply(start);
            while cur != start {
                seen[(cur - 1) as usize] = true;
                cyc.push(cur);
                cur = self.apply(cur);
            }
            if cyc.len() > 1 {
                cycles.push(cyc);
            }
        }
        cycles
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for cyc in cycles {
            write!(f, "(")?;
            for (i, m) in cyc.iter().enumerate() {
                if i > 0 && self.n() >= 10 {
                    write!(f, ",")?;
                }
                write!(f, "{m}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses `"1278"` (one digit per marking) or `"12,7,8"` / `"12 7 8"`.
pub(crate) fn parse_marking_list(s: &str) -> Option<Vec<u8>> {
    let t = s.trim();
    if t.is_empty() {
        return Some(Vec::new());
    }
    if t.contains(',') || t.contains(char::is_whitespace) {
        t.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<u8>().ok().filter(|&m| m >= 1))
            .collect()
    } else {
        t.chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).filter(|&m| m >= 1))
            .collect()
    }
}

fn format_marking_list(markings: &[u8], n: u8) -> String {
    let mut out = String::new();
    for (i, m) in markings.iter().enumerate() {
        if i > 0 && n >= 10 {
            out.push(',');
        }
        out.push_str(&m.to_string());
    }
    out
}

// ---------------------------------------------------------------------------
// Two-part partitions (boundary divisors)
// ---------------------------------------------------------------------------

/// A partition of the markings `{1..n}` into two parts, each of size >= 2.
/// The canonical representative is the side not containing marking 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition2 {
    n: u8,
    side: Vec<u8>,
}

impl Partition2 {
    pub fn new(n: u8, side: impl IntoIterator<Item = u8>) -> Result<Self, StrataError> {
        if !(3..=16).contains(&n) {
            return Err(StrataError::BadMarkingCount(n));
        }
        let set: BTreeSet<u8> = side.into_iter().collect();
        if set.iter().any(|&m| m < 1 || m > n) {
            return Err(StrataError::BadPartition { n });
        }
        let side: Vec<u8> = if set.contains(&1) {
            (1..=n).filter(|m| !set.contains(m)).collect()
        } else {
            set.into_iter().collect()
        };
        if side.len() < 2 || side.len() > (n as usize) - 2 {
            return Err(StrataError::BadPartition { n });
        }
        Ok(Partition2 { n, side })
    }

    pub(crate) fn from_mask(n: u8, mask: u16) -> Self {
        let side: Vec<u8> = (1..=n).filter(|&m| mask & (1 << (m - 1)) != 0).collect();
        Partition2::new(n, side).expect("mask yields a valid partition")
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    /// The canonical side (the one not containing marking 1), sorted.
    pub fn side(&self) -> &[u8] {
        &self.side
    }

    pub fn complement(&self) -> Vec<u8> {
        (1..=self.n).filter(|m| !self.side.contains(m)).collect()
    }

    pub(crate) fn side_mask(&self) -> u16 {
        self.side.iter().fold(0u16, |acc, &m| acc | 1 << (m - 1))
    }

    /// The two-vertex stable tree whose unique edge cuts out this partition.
    pub fn two_vertex_tree(&self) -> StableTree {
        StableTree::new(self.n, vec![self.complement(), self.side.clone()], vec![(0, 1)])
            .expect("partition sides form a stable two-vertex tree")
    }
}

impl fmt::Display for Partition2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}|{})",
            format_marking_list(&self.complement(), self.n),
            format_marking_list(&self.side, self.n)
        )
    }
}

impl fmt::Debug for Partition2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Partition2 {
    type Err = StrataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StrataError::BadStratumLiteral(s.to_owned());
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .ok_or_else(bad)?;
        let parts: Vec<Vec<u8>> = inner
            .split('|')
            .map(parse_marking_list)
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        if parts.len() != 2 {
            return Err(bad());
        }
        let n = (parts[0].len() + parts[1].len()) as u8;
        let all: BTreeSet<u8> = parts.iter().flatten().copied().collect();
        if all.len() != n as usize || all.iter().any(|&m| m < 1 || m > n) {
            return Err(bad());
        }
        Partition2::new(n, parts[1].iter().copied())
    }
}

// ---------------------------------------------------------------------------
// Stable trees
// ---------------------------------------------------------------------------

/// The dual tree of a stable n-pointed genus-0 curve, in canonical form.
///
/// Canonical form keys each vertex by the sorted multiset of markings
/// reachable through its branches and sorts vertices and edges by these keys,
/// so two trees are isomorphic over the fixed markings exactly when their
/// representations are equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StableTree {
    n: u8,
    verts: Vec<Vec<u8>>,
    edges: Vec<(u8, u8)>,
}

/// One branch at a vertex: either a leg (marking) or an incident edge.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Branch {
    Leg(u8),
    Edge(u8),
}

/// How a boundary divisor meets a boundary stratum.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Compatibility {
    /// The partition crosses the tree: the product is zero.
    Incompatible,
    /// Cutting this edge induces exactly the partition (the stratum lies
    /// inside the divisor; multiplying picks up excess terms).
    ExistingEdge(usize),
    /// The branches at this vertex split into the two sides of the partition;
    /// the listed branches are those on the canonical side.
    NewEdge { vertex: usize, side: Vec<Branch> },
}

impl StableTree {
    /// The unique codimension-0 stratum: one vertex carrying all markings.
    pub fn one_vertex(n: u8) -> Result<Self, StrataError> {
        StableTree::new(n, vec![(1..=n).collect()], vec![])
    }

    pub fn new(
        n: u8,
        verts: Vec<Vec<u8>>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, StrataError> {
        if !(3..=16).contains(&n) {
            return Err(StrataError::BadMarkingCount(n));
        }
        let nv = verts.len();
        // Legs partition {1..n}.
        let mut seen = vec![false; n as usize];
        let mut count = 0usize;
        for legs in &verts {
            for &l in legs {
                if l < 1 || l > n || seen[(l - 1) as usize] {
                    return Err(StrataError::BadLegs);
                }
                seen[(l - 1) as usize] = true;
                count += 1;
            }
        }
        if count != n as usize {
            return Err(StrataError::BadLegs);
        }
        // Edges form a tree.
        if edges.len() + 1 != nv {
            return Err(StrataError::NotATree);
        }
        let mut edge_set = BTreeSet::new();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &edges {
            if a >= nv || b >= nv || a == b {
                return Err(StrataError::BadEdge(a, b));
            }
            if !edge_set.insert((a.min(b), a.max(b))) {
                return Err(StrataError::BadEdge(a, b));
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(StrataError::NotATree);
            }
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        if (0..nv).any(|v| find(&mut parent, v) != root) {
            return Err(StrataError::NotATree);
        }
        // Stability.
        let mut valence: Vec<usize> = verts.iter().map(Vec::len).collect();
        for &(a, b) in &edges {
            valence[a] += 1;
            valence[b] += 1;
        }
        if let Some(v) = (0..nv).find(|&v| valence[v] < 3) {
            return Err(StrataError::UnstableVertex {
                vertex: v,
                valence: valence[v],
            });
        }
        let edges_u8: Vec<(u8, u8)> = edges.iter().map(|&(a, b)| (a as u8, b as u8)).collect();
        Ok(Self::canonical_from_parts(n, verts, edges_u8))
    }

    /// A chain stratum `(parts[0] | parts[1] | ... )`.
    pub fn chain(parts: &[Vec<u8>]) -> Result<Self, StrataError> {
        let n: usize = parts.iter().map(Vec::len).sum();
        let edges: Vec<(usize, usize)> = (1..parts.len()).map(|i| (i - 1, i)).collect();
        StableTree::new(n as u8, parts.to_vec(), edges)
    }

    /// Builds the canonical representation. Callers must pass structurally
    /// valid data; `new` is the validating entry point.
    pub(crate) fn canonical_from_parts(
        n: u8,
        mut verts: Vec<Vec<u8>>,
        mut edges: Vec<(u8, u8)>,
    ) -> StableTree {
        for legs in verts.iter_mut() {
            legs.sort_unstable();
        }
        let nv = verts.len();
        if nv > 1 {
            let keys = vertex_keys(n, &verts, &edges);
            let mut order: Vec<usize> = (0..nv).collect();
            order.sort_by(|&a, &b| cmp_keys(&keys[a], &keys[b]));
            debug_assert!(
                order.windows(2).all(|w| cmp_keys(&keys[w[0]], &keys[w[1]]) == Ordering::Less),
                "vertex keys in a stable tree are pairwise distinct"
            );
            let mut position = vec![0u8; nv];
            for (new_idx, &old_idx) in order.iter().enumerate() {
                position[old_idx] = new_idx as u8;
            }
            verts = order.iter().map(|&i| std::mem::take(&mut verts[i])).collect();
            for e in edges.iter_mut() {
                let a = position[e.0 as usize];
                let b = position[e.1 as usize];
                *e = (a.min(b), a.max(b));
            }
            edges.sort_unstable();
        }
        StableTree { n, verts, edges }
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    /// Codimension of the stratum = number of edges (nodes of the curve).
    pub fn codim(&self) -> u8 {
        self.edges.len() as u8
    }

    pub fn num_vertices(&self) -> usize {
        self.verts.len()
    }

    pub fn vertex_legs(&self, v: usize) -> &[u8] {
        &self.verts[v]
    }

    pub fn edges(&self) -> &[(u8, u8)] {
        &self.edges
    }

    pub fn valence(&self, v: usize) -> usize {
        self.verts[v].len()
            + self
                .edges
                .iter()
                .filter(|&&(a, b)| a as usize == v || b as usize == v)
                .count()
    }

    /// The partition of the markings induced by cutting an edge.
    pub fn edge_partition(&self, edge: usize) -> Partition2 {
        let view = self.view();
        Partition2::from_mask(self.n, view.side_toward_second[edge])
    }

    /// All edge partitions, in edge order.
    pub fn edge_partitions(&self) -> Vec<Partition2> {
        (0..self.edges.len()).map(|e| self.edge_partition(e)).collect()
    }

    /// Relabels the legs through `sigma` and re-canonicalizes.
    pub fn apply_permutation(&self, sigma: &Permutation) -> StableTree {
        assert_eq!(sigma.n(), self.n, "permutation degree must match n");
        let verts = self
            .verts
            .iter()
            .map(|legs| legs.iter().map(|&l| sigma.apply(l)).collect())
            .collect();
        StableTree::canonical_from_parts(self.n, verts, self.edges.clone())
    }

    /// Splits `vertex` into two vertices joined by a new edge, moving the
    /// listed branches to the new vertex. Both sides must keep >= 2 branches.
    pub(crate) fn split_vertex(&self, vertex: usize, side: &[Branch]) -> StableTree {
        let mut verts = self.verts.clone();
        let mut edges = self.edges.clone();
        let new_idx = verts.len() as u8;
        let mut new_legs = Vec::new();
        for b in side {
            match *b {
                Branch::Leg(l) => {
                    let pos = verts[vertex]
                        .iter()
                        .position(|&x| x == l)
                        .expect("split leg belongs to the vertex");
                    verts[vertex].swap_remove(pos);
                    new_legs.push(l);
                }
                Branch::Edge(e) => {
                    let e = e as usize;
                    if edges[e].0 as usize == vertex {
                        edges[e].0 = new_idx;
                    } else {
                        debug_assert_eq!(edges[e].1 as usize, vertex);
                        edges[e].1 = new_idx;
                    }
                }
            }
        }
        verts.push(new_legs);
        edges.push((vertex as u8, new_idx));
        debug_assert!(side.len() >= 2);
        StableTree::canonical_from_parts(self.n, verts, edges)
    }

    /// The parts of a chain (path) stratum in canonical orientation, or
    /// `None` if some vertex has more than two incident edges.
    pub fn chain_parts(&self) -> Option<Vec<Vec<u8>>> {
        let nv = self.verts.len();
        if nv == 1 {
            return Some(vec![self.verts[0].clone()]);
        }
        let mut degree = vec![0usize; nv];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for &(a, b) in &self.edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }
        if degree.iter().any(|&d| d > 2) {
            return None;
        }
        let ends: Vec<usize> = (0..nv).filter(|&v| degree[v] == 1).collect();
        debug_assert_eq!(ends.len(), 2);
        let walk = |start: usize| -> Vec<Vec<u8>> {
            let mut parts = Vec::with_capacity(nv);
            let mut prev = usize::MAX;
            let mut cur = start;
            loop {
                parts.push(self.verts[cur].clone());
                let Some(&next) = adj[cur].iter().find(|&&w| w != prev) else {
                    break;
                };
                prev = cur;
                cur = next;
                if parts.len() == nv {
                    break;
                }
            }
            parts
        };
        let fwd = walk(ends[0]);
        let bwd = walk(ends[1]);
        Some(if fwd <= bwd { fwd } else { bwd })
    }

    pub(crate) fn full_mask(&self) -> u16 {
        ((1u32 << self.n) - 1) as u16
    }

    pub(crate) fn view(&self) -> TreeView {
        let nv = self.verts.len();
        let mut adj: Vec<Vec<u8>> = vec![Vec::new(); nv];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            adj[a as usize].push(e as u8);
            adj[b as usize].push(e as u8);
        }
        let leg_mask: Vec<u16> = self
            .verts
            .iter()
            .map(|legs| legs.iter().fold(0u16, |m, &l| m | 1 << (l - 1)))
            .collect();
        let side_toward_second = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, &(_, b))| subtree_mask(self, &adj, &leg_mask, b as usize, e))
            .collect();
        TreeView {
            adj,
            side_toward_second,
        }
    }
}

fn subtree_mask(
    tree: &StableTree,
    adj: &[Vec<u8>],
    leg_mask: &[u16],
    v: usize,
    banned_edge: usize,
) -> u16 {
    let mut mask = leg_mask[v];
    for &e in &adj[v] {
        if e as usize == banned_edge {
            continue;
        }
        let (a, b) = tree.edges[e as usize];
        let w = if a as usize == v { b } else { a } as usize;
        mask |= subtree_mask(tree, adj, leg_mask, w, e as usize);
    }
    mask
}

/// Per-tree derived data used by compatibility tests and excess expansion.
pub(crate) struct TreeView {
    pub adj: Vec<Vec<u8>>,
    /// For edge e = (a, b): the markings on the b side of the cut.
    pub side_toward_second: Vec<u16>,
}

impl TreeView {
    /// The markings reachable from `vertex` through edge `e`, i.e. on the far
    /// side of `e` as seen from `vertex`.
    pub fn far_mask(&self, tree: &StableTree, e: usize, vertex: usize) -> u16 {
        let (a, _b) = tree.edges[e];
        if a as usize == vertex {
            self.side_toward_second[e]
        } else {
            tree.full_mask() ^ self.side_toward_second[e]
        }
    }

    /// All branches at `vertex` with the set of markings behind each branch.
    pub fn branches(&self, tree: &StableTree, vertex: usize) -> Vec<(Branch, u16)> {
        let mut out = Vec::with_capacity(tree.valence(vertex));
        for &l in &tree.verts[vertex] {
            out.push((Branch::Leg(l), 1u16 << (l - 1)));
        }
        for &e in &self.adj[vertex] {
            out.push((Branch::Edge(e), self.far_mask(tree, e as usize, vertex)));
        }
        out
    }
}

/// Compares two marking sets (as bitmasks) by the lexicographic order of
/// their sorted element lists.
fn lex_set_cmp(a: u16, b: u16) -> Ordering {
    let (mut x, mut y) = (a, b);
    loop {
        match (x == 0, y == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let bx = x.trailing_zeros();
        let by = y.trailing_zeros();
        if bx != by {
            return bx.cmp(&by);
        }
        x &= x - 1;
        y &= y - 1;
    }
}

fn cmp_keys(a: &[u16], b: &[u16]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match lex_set_cmp(*x, *y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Vertex keys: the sorted list of branch marking-sets at each vertex.
fn vertex_keys(n: u8, verts: &[Vec<u8>], edges: &[(u8, u8)]) -> Vec<Vec<u16>> {
    let tmp = StableTree {
        n,
        verts: verts.to_vec(),
        edges: edges.to_vec(),
    };
    let view = tmp.view();
    (0..verts.len())
        .map(|v| {
            let mut key: Vec<u16> = view.branches(&tmp, v).into_iter().map(|(_, m)| m).collect();
            key.sort_by(|&a, &b| lex_set_cmp(a, b));
            key
        })
        .collect()
}

impl fmt::Display for StableTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.chain_parts() {
            Some(parts) => {
                write!(f, "(")?;
                for (i, part) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{}", format_marking_list(part, self.n))?;
                }
                write!(f, ")")
            }
            None => {
                let repr = TreeRepr::from(self);
                let json = serde_json::to_string(&repr).map_err(|_| fmt::Error)?;
                write!(f, "{json}")
            }
        }
    }
}

impl fmt::Debug for StableTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for StableTree {
    type Err = StrataError;

    /// Parses chain notation `"(1278|56|34)"`. General trees use the JSON
    /// form via serde.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StrataError::BadStratumLiteral(s.to_owned());
        let t = s.trim();
        if t.starts_with('{') {
            return serde_json::from_str(t).map_err(|_| bad());
        }
        let inner = t
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .ok_or_else(bad)?;
        let parts: Vec<Vec<u8>> = inner
            .split('|')
            .map(parse_marking_list)
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        if parts.iter().any(Vec::is_empty) {
            return Err(bad());
        }
        StableTree::chain(&parts)
    }
}

#[derive(Serialize, Deserialize)]
struct VertexRepr {
    legs: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    vertices: Vec<VertexRepr>,
    edges: Vec<(u8, u8)>,
}

impl From<&StableTree> for TreeRepr {
    fn from(t: &StableTree) -> Self {
        TreeRepr {
            vertices: t
                .verts
                .iter()
                .map(|legs| VertexRepr { legs: legs.clone() })
                .collect(),
            edges: t.edges.clone(),
        }
    }
}

impl Serialize for StableTree {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TreeRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StableTree {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = TreeRepr::deserialize(deserializer)?;
        let n: usize = repr.vertices.iter().map(|v| v.legs.len()).sum();
        let verts = repr.vertices.into_iter().map(|v| v.legs).collect();
        let edges = repr
            .edges
            .into_iter()
            .map(|(a, b)| (a as usize, b as usize))
            .collect();
        StableTree::new(n as u8, verts, edges).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Divisor / stratum compatibility
// ---------------------------------------------------------------------------

/// Decides how the boundary divisor of `p` meets the stratum of `t`.
///
/// Exactly one of the three outcomes applies; the uniqueness of the matching
/// edge or vertex is a structural fact about stable trees and is asserted.
pub fn compatibility(p: &Partition2, t: &StableTree) -> Result<Compatibility, StrataError> {
    if p.n() != t.n() {
        return Err(StrataError::MarkingMismatch(p.n(), t.n()));
    }
    let view = t.view();
    Ok(compatibility_with_view(p.side_mask(), t, &view))
}

pub(crate) fn compatibility_with_view(
    side_mask: u16,
    t: &StableTree,
    view: &TreeView,
) -> Compatibility {
    let full = t.full_mask();
    let other_mask = full ^ side_mask;
    let mut found: Option<Compatibility> = None;
    for e in 0..t.edges().len() {
        let m = view.side_toward_second[e];
        if m == side_mask || m == other_mask {
            debug_assert!(found.is_none(), "at most one edge can induce a partition");
            found = Some(Compatibility::ExistingEdge(e));
        }
    }
    if let Some(c) = found {
        return c;
    }
    for v in 0..t.num_vertices() {
        let branches = view.branches(t, v);
        let mut side = Vec::new();
        let mut other = 0usize;
        let mut pure = true;
        for &(b, m) in &branches {
            if m & side_mask == m {
                side.push(b);
            } else if m & other_mask == m {
                other += 1;
            } else {
                pure = false;
                break;
            }
        }
        if pure {
            // With no edge inducing the partition, purity forces >= 2
            // branches on each side (a 1-branch side would be that edge).
            assert!(side.len() >= 2 && other >= 2, "degenerate split at vertex {v}");
            debug_assert!(found.is_none(), "at most one vertex can realize a partition");
            found = Some(Compatibility::NewEdge { vertex: v, side });
            if cfg!(not(debug_assertions)) {
                break;
            }
        }
    }
    found.unwrap_or(Compatibility::Incompatible)
}

// ---------------------------------------------------------------------------
// Fixed-point-free involutions
// ---------------------------------------------------------------------------

/// `(12)(34)...(n-1,n)`.
pub fn standard_involution(n: u8) -> Result<Permutation, StrataError> {
    if !n.is_multiple_of(2) || n == 0 {
        return Err(StrataError::OddMarkingCount(n));
    }
    let mut images: Vec<u8> = Vec::with_capacity(n as usize);
    for i in (1..=n).step_by(2) {
        images.push(i + 1);
        images.push(i);
    }
    Permutation::from_images(images)
}

/// A fixed-point-free involution given by its pairs, plus a representative
/// permutation conjugating the standard involution `(12)(34)...` to it.
#[derive(Clone, Debug)]
pub struct FixedPointFreeInvolution {
    pub pairs: Vec<(u8, u8)>,
    pub perm: Permutation,
    pub representative: Permutation,
}

/// All fixed-point-free involutions of `{1..n}`, in a deterministic order:
/// the smallest unpaired marking is paired with each larger one in turn.
pub fn fixed_point_free_involutions(
    n: u8,
) -> Result<Vec<FixedPointFreeInvolution>, StrataError> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(StrataError::OddMarkingCount(n));
    }
    let mut out = Vec::new();
    let mut pairs = Vec::with_capacity(n as usize / 2);
    let remaining: Vec<u8> = (1..=n).collect();
    pair_up(&remaining, &mut pairs, &mut out);

    Ok(out
        .into_iter()
        .map(|pairs: Vec<(u8, u8)>| {
            let mut images = vec![0u8; n as usize];
            let mut rep_images = vec![0u8; n as usize];
            for (i, &(a, b)) in pairs.iter().enumerate() {
                images[(a - 1) as usize] = b;
                images[(b - 1) as usize] = a;
                rep_images[2 * i] = a;
                rep_images[2 * i + 1] = b;
            }
            FixedPointFreeInvolution {
                pairs,
                perm: Permutation::from_images(images).expect("pairing is a permutation"),
                representative: Permutation::from_images(rep_images)
                    .expect("pairing covers all markings"),
            }
        })
        .collect())
}

fn pair_up(remaining: &[u8], pairs: &mut Vec<(u8, u8)>, out: &mut Vec<Vec<(u8, u8)>>) {
    if remaining.is_empty() {
        out.push(pairs.clone());
        return;
    }
    let first = remaining[0];
    for i in 1..remaining.len() {
        let partner = remaining[i];
        pairs.push((first, partner));
        let rest: Vec<u8> = remaining[1..]
            .iter()
            .copied()
            .filter(|&m| m != partner)
            .collect();
        pair_up(&rest, pairs, out);
        pairs.pop();
    }
}

/// The pairs `(a, b)` with `a < b`, sorted by `a`, of a fixed-point-free
/// involution, plus the representative conjugating the standard involution.
pub fn involution_representative(perm: &Permutation) -> Result<Permutation, StrataError> {
    if !perm.is_fixed_point_free_involution() {
        return Err(StrataError::NotFixedPointFree);
    }
    let n = perm.n();
    let mut rep_images = Vec::with_capacity(n as usize);
    for a in 1..=n {
        let b = perm.apply(a);
        if a < b {
            rep_images.push(a);
            rep_images.push(b);
        }
    }
    Permutation::from_images(rep_images)
}

// ---------------------------------------------------------------------------
// Enumeration and orbits
// ---------------------------------------------------------------------------

/// All canonical stable trees with `n` markings and `codim` edges, in the
/// canonical deterministic order.
pub fn enumerate_strata(n: u8, codim: u8) -> Result<Vec<StableTree>, StrataError> {
    Ok(crate::cache::strata_level(n, codim)?.list.to_vec())
}

/// The orbit label of a stratum under the symmetric group action.
///
/// Chains are labeled by the leg counts along the path: two-part labels are
/// sorted ascending (`d_{2,6}`), longer ones are oriented with the larger end
/// first (`d_{5,1,2}`). Non-path trees get a canonical rooted encoding.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrbitShape {
    Chain(Vec<u8>),
    General(String),
}

impl OrbitShape {
    pub fn of(tree: &StableTree) -> OrbitShape {
        match tree.chain_parts() {
            Some(parts) => {
                let sizes: Vec<u8> = parts.iter().map(|p| p.len() as u8).collect();
                OrbitShape::chain_label(sizes)
            }
            None => OrbitShape::General(general_label(tree)),
        }
    }

    pub fn chain_label(mut sizes: Vec<u8>) -> OrbitShape {
        if sizes.len() == 2 {
            sizes.sort_unstable();
        } else if sizes.len() > 2 {
            let rev: Vec<u8> = sizes.iter().rev().copied().collect();
            if rev > sizes {
                sizes = rev;
            }
        }
        OrbitShape::Chain(sizes)
    }
}

impl fmt::Display for OrbitShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitShape::Chain(sizes) => {
                write!(f, "d_{{")?;
                for (i, s) in sizes.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, "}}")
            }
            OrbitShape::General(s) => write!(f, "t_{{{s}}}"),
        }
    }
}

impl fmt::Debug for OrbitShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Canonical rooted encoding of a non-path tree: root at the tree center and
/// write each vertex as `legcount(sorted children)`.
fn general_label(tree: &StableTree) -> String {
    let nv = tree.num_vertices();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(a, b) in tree.edges() {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    // Find the center(s) by repeatedly stripping leaves.
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut alive: Vec<bool> = vec![true; nv];
    let mut alive_count = nv;
    let mut frontier: Vec<usize> = (0..nv).filter(|&v| degree[v] <= 1).collect();
    while alive_count > 2 {
        let mut next = Vec::new();
        for &v in &frontier {
            alive[v] = false;
            alive_count -= 1;
            for &w in &adj[v] {
                if alive[w] {
                    degree[w] -= 1;
                    if degree[w] == 1 {
                        next.push(w);
                    }
                }
            }
        }
        frontier = next;
    }
    let centers: Vec<usize> = (0..nv).filter(|&v| alive[v]).collect();

    fn encode(tree: &StableTree, adj: &[Vec<usize>], v: usize, parent: usize) -> String {
        let mut children: Vec<String> = adj[v]
            .iter()
            .filter(|&&w| w != parent)
            .map(|&w| encode(tree, adj, w, v))
            .collect();
        children.sort();
        format!("{}({})", tree.vertex_legs(v).len(), children.join(""))
    }

    centers
        .iter()
        .map(|&c| encode(tree, &adj, c, usize::MAX))
        .min()
        .expect("a tree has at least one center")
}

/// Groups all strata of the given grade into symmetric-group orbits.
///
/// Output order follows the fixed basis conventions: two-part chain labels
/// ascending, longer chain labels descending, then general shapes.
pub fn orbit_decompose(n: u8, codim: u8) -> Result<Vec<(OrbitShape, usize)>, StrataError> {
    let level = crate::cache::strata_level(n, codim)?;
    let mut counts: Vec<(OrbitShape, usize)> = Vec::new();
    for tree in level.list.iter() {
        let shape = OrbitShape::of(tree);
        match counts.iter_mut().find(|(s, _)| *s == shape) {
            Some((_, c)) => *c += 1,
            None => counts.push((shape, 1)),
        }
    }
    counts.sort_by(|(a, _), (b, _)| shape_basis_order(a, b));
    Ok(counts)
}

/// The fixed ordering of orbit shapes used for bases and reports.
pub fn shape_basis_order(a: &OrbitShape, b: &OrbitShape) -> Ordering {
    use OrbitShape::*;
    match (a, b) {
        (Chain(x), Chain(y)) => {
            if x.len() == 2 && y.len() == 2 {
                x.cmp(y)
            } else {
                y.cmp(x)
            }
        }
        (Chain(_), General(_)) => Ordering::Less,
        (General(_), Chain(_)) => Ordering::Greater,
        (General(x), General(y)) => x.cmp(y),
    }
}

/// A permutation carrying one chain stratum onto another of the same shape,
/// matching the parts positionally in canonical orientation.
pub(crate) fn chain_transport(from: &StableTree, to: &StableTree) -> Option<Permutation> {
    let fp = from.chain_parts()?;
    let mut tp = to.chain_parts()?;
    let fs: Vec<usize> = fp.iter().map(Vec::len).collect();
    let ts: Vec<usize> = tp.iter().map(Vec::len).collect();
    if fs != ts {
        let rev: Vec<usize> = ts.iter().rev().copied().collect();
        if rev != fs {
            return None;
        }
        tp.reverse();
    }
    let mut images = vec![0u8; from.n() as usize];
    for (fpart, tpart) in fp.iter().zip(tp.iter()) {
        for (&a, &b) in fpart.iter().zip(tpart.iter()) {
            images[(a - 1) as usize] = b;
        }
    }
    Permutation::from_images(images).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree(s: &str) -> StableTree {
        s.parse().unwrap()
    }

    #[test]
    fn one_vertex_tree_is_its_own_canonical_form() {
        let t = StableTree::one_vertex(8).unwrap();
        assert_eq!(t.codim(), 0);
        assert_eq!(t.to_string(), "(12345678)");
        assert_eq!(t, tree("(12345678)"));
    }

    #[test]
    fn chain_and_its_reversal_are_equal() {
        let a = StableTree::chain(&[vec![1, 2], vec![3, 4], vec![5, 6]]).unwrap();
        let b = StableTree::chain(&[vec![5, 6], vec![3, 4], vec![1, 2]]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vertex_numbering_does_not_matter() {
        // (1278|56|34) with two different vertex orders and edge orders.
        let a = StableTree::new(
            8,
            vec![vec![1, 2, 7, 8], vec![5, 6], vec![3, 4]],
            vec![(0, 1), (1, 2)],
        )
        .unwrap();
        let b = StableTree::new(
            8,
            vec![vec![5, 6], vec![3, 4], vec![2, 1, 8, 7]],
            vec![(1, 0), (0, 2)],
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "(1278|56|34)");
    }

    #[test]
    fn rejects_unstable_and_cyclic_inputs() {
        // Valence-2 vertex.
        assert!(matches!(
            StableTree::new(4, vec![vec![1], vec![2, 3, 4]], vec![(0, 1)]),
            Err(StrataError::UnstableVertex { .. })
        ));
        // Cycle.
        assert!(matches!(
            StableTree::new(
                6,
                vec![vec![1, 2], vec![3, 4], vec![5, 6]],
                vec![(0, 1), (1, 2), (2, 0)]
            ),
            Err(StrataError::NotATree)
        ));
        // Missing marking.
        assert!(StableTree::new(5, vec![vec![1, 2, 3, 3, 5]], vec![]).is_err());
    }

    #[test]
    fn canonicalization_is_constant_on_relabeled_vertex_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let base = StableTree::new(
            8,
            vec![vec![1, 8], vec![2, 7], vec![3, 4], vec![5, 6]],
            vec![(0, 1), (1, 2), (1, 3)],
        )
        .unwrap();
        for _ in 0..20 {
            let mut order: Vec<usize> = (0..4).collect();
            order.shuffle(&mut rng);
            let mut pos = [0usize; 4];
            for (new, &old) in order.iter().enumerate() {
                pos[old] = new;
            }
            let verts: Vec<Vec<u8>> = order
                .iter()
                .map(|&i| base.vertex_legs(i).to_vec())
                .collect();
            let edges: Vec<(usize, usize)> = base
                .edges()
                .iter()
                .map(|&(a, b)| (pos[a as usize], pos[b as usize]))
                .collect();
            let t = StableTree::new(8, verts, edges).unwrap();
            assert_eq!(t, base);
        }
    }

    #[test]
    fn apply_permutation_is_a_group_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = tree("(1278|56|34)");
        for _ in 0..25 {
            let mut imgs: Vec<u8> = (1..=8).collect();
            imgs.shuffle(&mut rng);
            let sigma = Permutation::from_images(imgs).unwrap();
            let mut imgs2: Vec<u8> = (1..=8).collect();
            imgs2.shuffle(&mut rng);
            let tau = Permutation::from_images(imgs2).unwrap();
            let lhs = t.apply_permutation(&tau).apply_permutation(&sigma);
            let rhs = t.apply_permutation(&sigma.compose(&tau));
            assert_eq!(lhs, rhs);
            let back = t.apply_permutation(&sigma).apply_permutation(&sigma.inverse());
            assert_eq!(back, t);
        }
    }

    #[test]
    fn permutation_moves_divisor_strata_as_expected() {
        // (15|2346) under (12) becomes (25|1346).
        let t = tree("(15|2346)");
        let sigma = Permutation::from_cycles(6, "(12)").unwrap();
        assert_eq!(t.apply_permutation(&sigma), tree("(25|1346)"));
        let id = Permutation::identity(6);
        assert_eq!(t.apply_permutation(&id), t);
    }

    #[test]
    fn enumerate_counts_small_cases() {
        assert_eq!(enumerate_strata(4, 1).unwrap().len(), 3);
        assert_eq!(enumerate_strata(6, 1).unwrap().len(), 25);
        assert_eq!(enumerate_strata(3, 0).unwrap().len(), 1);
        assert!(matches!(
            enumerate_strata(6, 4),
            Err(StrataError::CodimOutOfRange { .. })
        ));
    }

    #[test]
    fn enumerate_counts_match_the_eight_marking_table() {
        assert_eq!(enumerate_strata(8, 1).unwrap().len(), 119);
        assert_eq!(enumerate_strata(8, 2).unwrap().len(), 1918);
    }

    #[test]
    fn orbits_codim_one() {
        let orbits = orbit_decompose(6, 1).unwrap();
        let rendered: Vec<(String, usize)> =
            orbits.iter().map(|(s, c)| (s.to_string(), *c)).collect();
        assert_eq!(
            rendered,
            vec![("d_{2,4}".into(), 15), ("d_{3,3}".into(), 10)]
        );
        let orbits8 = orbit_decompose(8, 1).unwrap();
        let rendered8: Vec<(String, usize)> =
            orbits8.iter().map(|(s, c)| (s.to_string(), *c)).collect();
        assert_eq!(
            rendered8,
            vec![
                ("d_{2,6}".into(), 28),
                ("d_{3,5}".into(), 56),
                ("d_{4,4}".into(), 35)
            ]
        );
    }

    #[test]
    fn orbits_codim_two_match_the_fixed_basis_order() {
        let orbits = orbit_decompose(8, 2).unwrap();
        let rendered: Vec<(String, usize)> =
            orbits.iter().map(|(s, c)| (s.to_string(), *c)).collect();
        assert_eq!(
            rendered,
            vec![
                ("d_{5,1,2}".into(), 168),
                ("d_{4,2,2}".into(), 420),
                ("d_{4,1,3}".into(), 280),
                ("d_{3,3,2}".into(), 560),
                ("d_{3,2,3}".into(), 280),
                ("d_{2,4,2}".into(), 210),
            ]
        );
        let total: usize = orbits.iter().map(|(_, c)| c).sum();
        assert_eq!(total, 1918);
    }

    #[test]
    fn chain_orbit_sizes_satisfy_the_multinomial_closed_form() {
        // multinomial(n; a,b,c), halved when the two end sizes agree.
        fn multinomial(n: u64, parts: &[u64]) -> u64 {
            let fact = |k: u64| (1..=k).product::<u64>();
            parts.iter().fold(fact(n), |acc, &p| acc / fact(p))
        }
        for (n, codim) in [(6u8, 2u8), (7, 2), (8, 2)] {
            for (shape, count) in orbit_decompose(n, codim).unwrap() {
                let OrbitShape::Chain(sizes) = shape else {
                    panic!("codim-2 strata are chains");
                };
                let parts: Vec<u64> = sizes.iter().map(|&s| s as u64).collect();
                let mut expect = multinomial(n as u64, &parts);
                if parts[0] == parts[2] {
                    expect /= 2;
                }
                assert_eq!(count as u64, expect, "shape {sizes:?}");
            }
        }
    }

    #[test]
    fn involution_counts() {
        assert_eq!(fixed_point_free_involutions(2).unwrap().len(), 1);
        assert_eq!(fixed_point_free_involutions(6).unwrap().len(), 15);
        assert_eq!(fixed_point_free_involutions(8).unwrap().len(), 105);
        assert!(fixed_point_free_involutions(5).is_err());
    }

    #[test]
    fn involution_representatives_conjugate_the_standard_involution() {
        let base = standard_involution(8).unwrap();
        for inv in fixed_point_free_involutions(8).unwrap() {
            assert!(inv.perm.is_fixed_point_free_involution());
            let conj = inv
                .representative
                .compose(&base)
                .compose(&inv.representative.inverse());
            assert_eq!(conj, inv.perm);
        }
    }

    #[test]
    fn compatibility_new_edge_on_the_open_stratum() {
        let t = StableTree::one_vertex(8).unwrap();
        let p = Partition2::new(8, [1, 2]).unwrap();
        match compatibility(&p, &t).unwrap() {
            Compatibility::NewEdge { vertex, side } => {
                assert_eq!(vertex, 0);
                let refined = t.split_vertex(vertex, &side);
                assert_eq!(refined, tree("(12|345678)"));
            }
            other => panic!("expected NewEdge, got {other:?}"),
        }
    }

    #[test]
    fn compatibility_splits_a_middle_vertex() {
        // (1234|5678) against the chain (12|3456|78): legs {3,4} group with
        // the branch toward {1,2}.
        let t = tree("(12|3456|78)");
        let p = Partition2::new(8, [1, 2, 3, 4]).unwrap();
        match compatibility(&p, &t).unwrap() {
            Compatibility::NewEdge { vertex, side } => {
                let refined = t.split_vertex(vertex, &side);
                assert_eq!(refined, tree("(12|34|56|78)"));
            }
            other => panic!("expected NewEdge, got {other:?}"),
        }
    }

    #[test]
    fn compatibility_detects_crossing_and_existing() {
        let t = tree("(12|345678)");
        let crossing = Partition2::new(8, [1, 3]).unwrap();
        assert_eq!(
            compatibility(&crossing, &t).unwrap(),
            Compatibility::Incompatible
        );
        let existing = Partition2::new(8, [1, 2]).unwrap();
        assert!(matches!(
            compatibility(&existing, &t).unwrap(),
            Compatibility::ExistingEdge(_)
        ));
    }

    #[test]
    fn edge_partitions_read_back() {
        let t = tree("(1278|56|34)");
        let parts: Vec<String> = t.edge_partitions().iter().map(|p| p.to_string()).collect();
        let mut sorted = parts.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["(125678|34)", "(1278|3456)"]);
    }

    #[test]
    fn general_trees_get_stable_labels() {
        // A 4-vertex star on n=8 is not a chain.
        let star = StableTree::new(
            8,
            vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8]],
            vec![(0, 3), (1, 3), (2, 3)],
        )
        .unwrap();
        assert!(star.chain_parts().is_none());
        let shape = OrbitShape::of(&star);
        assert!(matches!(shape, OrbitShape::General(_)));
        // Display falls back to the JSON form.
        let text = star.to_string();
        assert!(text.starts_with('{'));
        let back: StableTree = serde_json::from_str(&text).unwrap();
        assert_eq!(back, star);
    }

    #[test]
    fn chain_transport_carries_strata_onto_each_other() {
        let a = tree("(1278|56|34)");
        let b = tree("(34|12|5678)");
        let sigma = chain_transport(&a, &b).unwrap();
        assert_eq!(a.apply_permutation(&sigma), b);
    }

    #[test]
    fn partition_canonical_side_avoids_marking_one() {
        let p = Partition2::new(6, [1, 5]).unwrap();
        assert_eq!(p.side(), &[2, 3, 4, 6]);
        assert_eq!(p.to_string(), "(15|2346)");
        let q: Partition2 = "(15|2346)".parse().unwrap();
        assert_eq!(p, q);
        assert!(Partition2::new(6, [1]).is_err());
        assert!(Partition2::new(6, [2, 3, 4, 5, 6]).is_err());
    }

    #[test]
    fn permutation_cycle_parsing_and_display() {
        let p = Permutation::from_cycles(8, "(12)(34)(56)(78)").unwrap();
        assert!(p.is_fixed_point_free_involution());
        assert_eq!(p.to_string(), "(12)(34)(56)(78)");
        assert_eq!(standard_involution(8).unwrap(), p);
        let q = Permutation::from_cycles(6, "(123)").unwrap();
        assert_eq!(q.apply(1), 2);
        assert_eq!(q.apply(2), 3);
        assert_eq!(q.apply(3), 1);
        assert!(Permutation::from_cycles(6, "(17)").is_err());
    }

    #[test]
    fn random_relabelings_preserve_canonical_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let strata = enumerate_strata(7, 2).unwrap();
        for _ in 0..30 {
            let t = &strata[rng.gen_range(0..strata.len())];
            let mut imgs: Vec<u8> = (1..=7).collect();
            imgs.shuffle(&mut rng);
            let sigma = Permutation::from_images(imgs).unwrap();
            let moved = t.apply_permutation(&sigma);
            let back = moved.apply_permutation(&sigma.inverse());
            assert_eq!(&back, t);
        }
    }
}
