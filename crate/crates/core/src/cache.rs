//! Process-wide memoization: strata enumerations per (n, codim) and duality
//! pairing tables per (n, codim).
//!
//! Both caches are write-once per key behind a mutex; computed results are
//! shared through `Arc`. All results are deterministic, so cached and
//! uncached runs agree.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rayon::prelude::*;

use crate::chow::divisor_times_stratum;
use crate::strata::{chain_transport, OrbitShape, StableTree, StrataError};

pub(crate) struct StrataLevel {
    pub list: Vec<StableTree>,
    pub index: HashMap<StableTree, u32>,
}

/// Keyed by (marking count, codimension).
type Memo<V> = Mutex<HashMap<(u8, u8), Arc<V>>>;

static STRATA: Lazy<Memo<StrataLevel>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// All canonical stable trees with the given marking count and edge count,
/// sorted, plus the index map.
pub(crate) fn strata_level(n: u8, codim: u8) -> Result<Arc<StrataLevel>, StrataError> {
    if !(3..=16).contains(&n) {
        return Err(StrataError::BadMarkingCount(n));
    }
    if codim > n - 3 {
        return Err(StrataError::CodimOutOfRange { n, codim });
    }
    let mut map = STRATA.lock().expect("strata cache poisoned");
    if let Some(level) = map.get(&(n, codim)) {
        return Ok(Arc::clone(level));
    }
    for k in 0..=codim {
        if map.contains_key(&(n, k)) {
            continue;
        }
        let level = if k == 0 {
            let tree = StableTree::one_vertex(n)?;
            make_level(vec![tree])
        } else {
            let below = Arc::clone(map.get(&(n, k - 1)).expect("built in order"));
            make_level(refine_all(&below.list))
        };
        map.insert((n, k), Arc::new(level));
    }
    Ok(Arc::clone(map.get(&(n, codim)).expect("just built")))
}

fn make_level(mut list: Vec<StableTree>) -> StrataLevel {
    list.sort_unstable();
    let index = list
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    StrataLevel { list, index }
}

/// Every one-edge refinement of every tree in `below`, deduplicated.
fn refine_all(below: &[StableTree]) -> Vec<StableTree> {
    let mut seen: HashSet<StableTree> = HashSet::new();
    for tree in below {
        let view = tree.view();
        for v in 0..tree.num_vertices() {
            let branches = view.branches(tree, v);
            let m = branches.len();
            if m < 4 {
                continue;
            }
            // Subsets not containing branch 0: a split and its complement
            // give the same refinement.
            for bits in 0u32..(1 << (m - 1)) {
                let size = bits.count_ones() as usize;
                if size < 2 || size > m - 2 {
                    continue;
                }
                let side: Vec<_> = (0..m - 1)
                    .filter(|k| bits & (1 << k) != 0)
                    .map(|k| branches[k + 1].0)
                    .collect();
                seen.insert(tree.split_vertex(v, &side));
            }
        }
    }
    seen.into_iter().collect()
}

/// Sparse table of intersection numbers of strata of codimension `k` against
/// all strata of the complementary codimension.
pub(crate) struct PairingTable {
    /// Indexed like `strata_level(n, k)`; entries are (column, value) with
    /// columns indexed like the complementary level. Strata intersection
    /// numbers are integers.
    pub rows: Vec<Vec<(u32, i64)>>,
    pub ncols: usize,
}

static PAIRING: Lazy<Memo<PairingTable>> = Lazy::new(|| Mutex::new(HashMap::new()));

pub(crate) fn pairing_table(n: u8, codim: u8) -> Result<Arc<PairingTable>, StrataError> {
    if !(3..=16).contains(&n) {
        return Err(StrataError::BadMarkingCount(n));
    }
    if codim > n - 3 {
        return Err(StrataError::CodimOutOfRange { n, codim });
    }
    {
        let map = PAIRING.lock().expect("pairing cache poisoned");
        if let Some(table) = map.get(&(n, codim)) {
            return Ok(Arc::clone(table));
        }
    }
    let rows_level = strata_level(n, codim)?;
    let cols_level = strata_level(n, n - 3 - codim)?;
    let table = Arc::new(build_table(&rows_level, &cols_level));
    let mut map = PAIRING.lock().expect("pairing cache poisoned");
    Ok(Arc::clone(
        map.entry((n, codim)).or_insert(table),
    ))
}

fn build_table(rows_level: &StrataLevel, cols_level: &StrataLevel) -> PairingTable {
    let ncols = cols_level.list.len();
    let all_chains = rows_level
        .list
        .iter()
        .all(|t| t.chain_parts().is_some());
    let rows = if all_chains {
        equivariant_rows(rows_level, cols_level)
    } else {
        rows_level
            .list
            .par_iter()
            .map(|theta| direct_row(theta, &cols_level.list))
            .collect()
    };
    PairingTable { rows, ncols }
}

/// Pairing is equivariant under relabeling, so for chain strata one row per
/// orbit is computed directly and the rest are transported.
fn equivariant_rows(rows_level: &StrataLevel, cols_level: &StrataLevel) -> Vec<Vec<(u32, i64)>> {
    let mut orbit_members: Vec<(OrbitShape, Vec<u32>)> = Vec::new();
    for (i, tree) in rows_level.list.iter().enumerate() {
        let shape = OrbitShape::of(tree);
        match orbit_members.iter_mut().find(|(s, _)| *s == shape) {
            Some((_, members)) => members.push(i as u32),
            None => orbit_members.push((shape, vec![i as u32])),
        }
    }
    let mut rows: Vec<Vec<(u32, i64)>> = vec![Vec::new(); rows_level.list.len()];
    for (_, members) in &orbit_members {
        let rep = &rows_level.list[members[0] as usize];
        let rep_row = direct_row(rep, &cols_level.list);
        let transported: Vec<(u32, Vec<(u32, i64)>)> = members
            .par_iter()
            .map(|&i| {
                let target = &rows_level.list[i as usize];
                if target == rep {
                    return (i, rep_row.clone());
                }
                let sigma = chain_transport(rep, target)
                    .expect("orbit members share the chain shape");
                let mut row: Vec<(u32, i64)> = rep_row
                    .iter()
                    .map(|&(j, v)| {
                        let moved = cols_level.list[j as usize].apply_permutation(&sigma);
                        let idx = *cols_level
                            .index
                            .get(&moved)
                            .expect("relabeled stratum stays in the level");
                        (idx, v)
                    })
                    .collect();
                row.sort_unstable_by_key(|&(j, _)| j);
                (i, row)
            })
            .collect();
        for (i, row) in transported {
            rows[i as usize] = row;
        }
    }
    rows
}

fn direct_row(theta: &StableTree, cols: &[StableTree]) -> Vec<(u32, i64)> {
    cols.iter()
        .enumerate()
        .filter_map(|(j, xi)| {
            let v = pair_strata(theta, xi);
            (v != 0).then_some((j as u32, v))
        })
        .collect()
}

/// The intersection number of two strata of complementary codimension,
/// computed by folding the edge divisors of `theta` into `xi`.
pub(crate) fn pair_strata(theta: &StableTree, xi: &StableTree) -> i64 {
    debug_assert_eq!(theta.n(), xi.n());
    debug_assert_eq!(theta.codim() + xi.codim(), theta.n() - 3);
    let view = theta.view();
    let mut cur: Vec<(StableTree, i64)> = vec![(xi.clone(), 1)];
    for e in 0..theta.edges().len() {
        let mask = view.side_toward_second[e];
        let mut next = Vec::new();
        for (t, c) in cur {
            for (t2, s) in divisor_times_stratum(mask, &t) {
                next.push((t2, c * s));
            }
        }
        if next.is_empty() {
            return 0;
        }
        cur = next;
    }
    cur.into_iter().map(|(_, c)| c).sum()
}
