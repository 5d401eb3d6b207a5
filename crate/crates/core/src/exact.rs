//! Exact butterfly counting on a snapshot.
//!
//! The counter anchors on the side with the lower average degree. For every
//! anchor vertex `a` and every unordered pair of its neighbours `(x, y)`, the
//! co-anchors closing a butterfly are `N(x) ∩ N(y)` minus `a` itself. Only
//! co-anchors with a larger id than `a` are counted, so each butterfly is seen
//! exactly once.

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::stream::{BipartiteSnapshot, Side, VertexId};

/// Edge cap for the quadratic brute-force counter.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 5_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("brute-force counting refused: {edges} edges exceeds the cap of {cap}")]
    CapExceeded { edges: usize, cap: usize },
    #[error("edge ({i}, {j}) is not in the snapshot")]
    AbsentEdge { i: VertexId, j: VertexId },
}

/// A butterfly in canonical form: `i1 < i2` and `j1 < j2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Butterfly {
    pub i1: VertexId,
    pub i2: VertexId,
    pub j1: VertexId,
    pub j2: VertexId,
}

impl Butterfly {
    pub fn new(ia: VertexId, ib: VertexId, ja: VertexId, jb: VertexId) -> Self {
        Butterfly {
            i1: ia.min(ib),
            i2: ia.max(ib),
            j1: ja.min(jb),
            j2: ja.max(jb),
        }
    }

    pub fn edges(&self) -> [(VertexId, VertexId); 4] {
        [
            (self.i1, self.j1),
            (self.i1, self.j2),
            (self.i2, self.j1),
            (self.i2, self.j2),
        ]
    }

    pub fn contains_edge(&self, i: VertexId, j: VertexId) -> bool {
        (i == self.i1 || i == self.i2) && (j == self.j1 || j == self.j2)
    }
}

/// Side the exact counter iterates over: the one with the lower average
/// degree, i-side on a tie.
pub fn anchor_side(g: &BipartiteSnapshot) -> Side {
    if g.average_degree(Side::I) <= g.average_degree(Side::J) {
        Side::I
    } else {
        Side::J
    }
}

/// Exact number of butterflies in `g`.
pub fn count_butterflies(g: &BipartiteSnapshot) -> u64 {
    count_butterflies_anchored(g, anchor_side(g))
}

/// Exact count with an explicit anchor side. The result does not depend on
/// the side; only the running time does.
pub fn count_butterflies_anchored(g: &BipartiteSnapshot, anchor: Side) -> u64 {
    let c = Compact::build(g, anchor);
    (0..c.anchor_len())
        .into_par_iter()
        .map(|a| Some(c.anchor_count(a as u32)))
        .try_reduce(|| 0u64, |x, y| x.checked_add(y))
        .expect("butterfly count overflowed u64")
}

/// Counts butterflies by testing every unordered pair of vertex-disjoint edges.
/// Each butterfly owns two such pairs, so the tally is halved.
pub fn brute_force_count(g: &BipartiteSnapshot) -> Result<u64, ExactError> {
    brute_force_count_capped(g, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn brute_force_count_capped(g: &BipartiteSnapshot, cap: usize) -> Result<u64, ExactError> {
    if g.edge_count() > cap {
        return Err(ExactError::CapExceeded {
            edges: g.edge_count(),
            cap,
        });
    }
    let edges = g.sorted_edges();
    let mut tally = 0u64;
    for (p, &(i1, j1)) in edges.iter().enumerate() {
        for &(i2, j2) in &edges[p + 1..] {
            if i1 != i2 && j1 != j2 && g.contains_edge(i1, j2) && g.contains_edge(i2, j1) {
                tally += 1;
            }
        }
    }
    Ok(tally / 2)
}

/// Per-vertex butterfly support, split by side. Every vertex of the snapshot
/// has an entry, zero if it lies in no butterfly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SupportMap {
    pub i: FxHashMap<VertexId, u64>,
    pub j: FxHashMap<VertexId, u64>,
}

impl SupportMap {
    pub fn get(&self, v: VertexId, side: Side) -> Option<u64> {
        self.side(side).get(&v).copied()
    }

    pub fn side(&self, side: Side) -> &FxHashMap<VertexId, u64> {
        match side {
            Side::I => &self.i,
            Side::J => &self.j,
        }
    }

    /// Sum over both sides; equals four times the butterfly count.
    pub fn total(&self) -> u64 {
        self.i.values().chain(self.j.values()).sum()
    }
}

pub fn butterfly_support(g: &BipartiteSnapshot) -> SupportMap {
    let anchor = anchor_side(g);
    let c = Compact::build(g, anchor);
    let mut anchor_support = vec![0u64; c.anchor_len()];
    let mut other_support = vec![0u64; c.other_len()];
    let mut common = Vec::new();
    for a in 0..c.anchor_len() as u32 {
        let nbrs = c.anchor_nbrs(a);
        for (x_idx, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[x_idx + 1..] {
                common.clear();
                intersect_above(c.other_nbrs(x), c.other_nbrs(y), a, &mut common);
                let n = common.len() as u64;
                if n == 0 {
                    continue;
                }
                anchor_support[a as usize] += n;
                other_support[x as usize] += n;
                other_support[y as usize] += n;
                for &b in &common {
                    anchor_support[b as usize] += 1;
                }
            }
        }
    }
    let anchor_map = c
        .anchor_ids
        .iter()
        .zip(anchor_support)
        .map(|(&v, s)| (v, s))
        .collect();
    let other_map = c
        .other_ids
        .iter()
        .zip(other_support)
        .map(|(&v, s)| (v, s))
        .collect();
    match anchor {
        Side::I => SupportMap {
            i: anchor_map,
            j: other_map,
        },
        Side::J => SupportMap {
            i: other_map,
            j: anchor_map,
        },
    }
}

/// Number of butterflies containing the edge `(i, j)`.
pub fn count_incident_butterflies(g: &BipartiteSnapshot, i: VertexId, j: VertexId) -> Result<u64, ExactError> {
    if !g.contains_edge(i, j) {
        return Err(ExactError::AbsentEdge { i, j });
    }
    Ok(incident_unchecked(g, i, j))
}

/// Incident count for an edge that may or may not be present: the number of
/// butterflies `(i, j)` would close together with edges already in `g`.
pub(crate) fn incident_unchecked(g: &BipartiteSnapshot, i: VertexId, j: VertexId) -> u64 {
    let co_items = g.neighbors(j, Side::J);
    let mut total = 0u64;
    for &j2 in g.neighbors(i, Side::I) {
        if j2 == j {
            continue;
        }
        let co_j2 = g.neighbors(j2, Side::J);
        // probe the shorter list against the edge set
        total += if co_items.len() <= co_j2.len() {
            co_items
                .iter()
                .filter(|&&i2| i2 != i && g.contains_edge(i2, j2))
                .count()
        } else {
            co_j2
                .iter()
                .filter(|&&i2| i2 != i && g.contains_edge(i2, j))
                .count()
        } as u64;
    }
    total
}

/// Calls `f` once per butterfly in `g`.
pub fn for_each_butterfly<F: FnMut(Butterfly)>(g: &BipartiteSnapshot, mut f: F) {
    let c = Compact::build(g, Side::I);
    let mut common = Vec::new();
    for a in 0..c.anchor_len() as u32 {
        let nbrs = c.anchor_nbrs(a);
        for (x_idx, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[x_idx + 1..] {
                common.clear();
                intersect_above(c.other_nbrs(x), c.other_nbrs(y), a, &mut common);
                for &b in &common {
                    f(Butterfly {
                        i1: c.anchor_ids[a as usize],
                        i2: c.anchor_ids[b as usize],
                        j1: c.other_ids[x as usize],
                        j2: c.other_ids[y as usize],
                    });
                }
            }
        }
    }
}

/// Materialises every butterfly. Memory is proportional to the count, so this
/// is meant for small snapshots and oracle checks.
pub fn enumerate_butterflies(g: &BipartiteSnapshot) -> Vec<Butterfly> {
    let mut out = Vec::new();
    for_each_butterfly(g, |b| out.push(b));
    out
}

/// CSR view with dense local ids assigned in ascending global-id order, so
/// local order equals global order and neighbour lists are sorted.
struct Compact {
    anchor_ids: Vec<VertexId>,
    other_ids: Vec<VertexId>,
    anchor_off: Vec<usize>,
    anchor_adj: Vec<u32>,
    other_off: Vec<usize>,
    other_adj: Vec<u32>,
}

impl Compact {
    fn build(g: &BipartiteSnapshot, anchor: Side) -> Self {
        let other = anchor.other();
        let mut anchor_ids: Vec<VertexId> = g.vertices(anchor).collect();
        let mut other_ids: Vec<VertexId> = g.vertices(other).collect();
        anchor_ids.sort_unstable();
        other_ids.sort_unstable();
        let other_local: FxHashMap<VertexId, u32> = other_ids
            .iter()
            .enumerate()
            .map(|(k, &v)| (v, k as u32))
            .collect();
        let anchor_local: FxHashMap<VertexId, u32> = anchor_ids
            .iter()
            .enumerate()
            .map(|(k, &v)| (v, k as u32))
            .collect();
        let (anchor_off, anchor_adj) = csr(&anchor_ids, |v| g.neighbors(v, anchor), &other_local);
        let (other_off, other_adj) = csr(&other_ids, |v| g.neighbors(v, other), &anchor_local);
        Compact {
            anchor_ids,
            other_ids,
            anchor_off,
            anchor_adj,
            other_off,
            other_adj,
        }
    }

    fn anchor_len(&self) -> usize {
        self.anchor_ids.len()
    }

    fn other_len(&self) -> usize {
        self.other_ids.len()
    }

    fn anchor_nbrs(&self, a: u32) -> &[u32] {
        &self.anchor_adj[self.anchor_off[a as usize]..self.anchor_off[a as usize + 1]]
    }

    fn other_nbrs(&self, x: u32) -> &[u32] {
        &self.other_adj[self.other_off[x as usize]..self.other_off[x as usize + 1]]
    }

    fn anchor_count(&self, a: u32) -> u64 {
        let nbrs = self.anchor_nbrs(a);
        let mut total = 0u64;
        for (x_idx, &x) in nbrs.iter().enumerate() {
            let nx = above(self.other_nbrs(x), a);
            if nx.is_empty() {
                continue;
            }
            for &y in &nbrs[x_idx + 1..] {
                total += intersect_count(nx, above(self.other_nbrs(y), a));
            }
        }
        total
    }
}

fn csr<'g, F>(ids: &[VertexId], nbrs: F, remap: &FxHashMap<VertexId, u32>) -> (Vec<usize>, Vec<u32>)
where
    F: Fn(VertexId) -> &'g [VertexId],
{
    let mut off = Vec::with_capacity(ids.len() + 1);
    let mut adj = Vec::new();
    off.push(0);
    for &v in ids {
        let start = adj.len();
        adj.extend(nbrs(v).iter().map(|n| remap[n]));
        adj[start..].sort_unstable();
        off.push(adj.len());
    }
    (off, adj)
}

/// Suffix of a sorted list holding the entries strictly greater than `a`.
#[inline]
fn above(list: &[u32], a: u32) -> &[u32] {
    &list[list.partition_point(|&v| v <= a)..]
}

/// Size of the intersection of two sorted lists. Iterates the shorter list;
/// switches from a merge to binary probes when the lengths are lopsided.
#[inline]
fn intersect_count(a: &[u32], b: &[u32]) -> u64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.is_empty() {
        return 0;
    }
    if large.len() > 16 * small.len() {
        let mut rest = large;
        let mut n = 0u64;
        for &v in small {
            let pos = rest.partition_point(|&w| w < v);
            if pos < rest.len() && rest[pos] == v {
                n += 1;
                rest = &rest[pos + 1..];
            } else {
                rest = &rest[pos..];
            }
            if rest.is_empty() {
                break;
            }
        }
        return n;
    }
    let (mut p, mut q, mut n) = (0, 0, 0u64);
    while p < small.len() && q < large.len() {
        match small[p].cmp(&large[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                p += 1;
                q += 1;
            }
        }
    }
    n
}

fn intersect_above(a: &[u32], b: &[u32], anchor: u32, out: &mut Vec<u32>) {
    let (a, b) = (above(a, anchor), above(b, anchor));
    let (mut p, mut q) = (0, 0);
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[p]);
                p += 1;
                q += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn complete(m: u32, n: u32) -> BipartiteSnapshot {
        BipartiteSnapshot::from_edges((0..m).flat_map(|i| (0..n).map(move |j| (i, j))))
    }

    fn caterpillar() -> BipartiteSnapshot {
        BipartiteSnapshot::from_edges([(1, 1), (2, 1), (2, 2)])
    }

    fn random_graph(seed: u64, edges: usize) -> BipartiteSnapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = BipartiteSnapshot::new();
        while g.edge_count() < edges {
            g.insert_edge(rng.gen_range(0..20), rng.gen_range(0..15), 0);
        }
        g
    }

    /// Quadruple oracle: every (i-pair, j-pair) combination with all four edges.
    fn quadruples(g: &BipartiteSnapshot) -> Vec<Butterfly> {
        let is: BTreeSet<_> = g.vertices(Side::I).collect();
        let js: BTreeSet<_> = g.vertices(Side::J).collect();
        let is: Vec<_> = is.into_iter().collect();
        let js: Vec<_> = js.into_iter().collect();
        let mut out = Vec::new();
        for (a, &i1) in is.iter().enumerate() {
            for &i2 in &is[a + 1..] {
                for (b, &j1) in js.iter().enumerate() {
                    for &j2 in &js[b + 1..] {
                        let b = Butterfly { i1, i2, j1, j2 };
                        if b.edges().iter().all(|&(i, j)| g.contains_edge(i, j)) {
                            out.push(b);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn small_fixtures() {
        assert_eq!(count_butterflies(&complete(2, 2)), 1);
        assert_eq!(count_butterflies(&complete(3, 3)), 9);
        assert_eq!(count_butterflies(&caterpillar()), 0);
        assert_eq!(count_butterflies(&BipartiteSnapshot::new()), 0);
        assert_eq!(brute_force_count(&complete(2, 2)), Ok(1));
        assert_eq!(brute_force_count(&BipartiteSnapshot::new()), Ok(0));
    }

    #[test]
    fn complete_bipartite_closed_form() {
        for m in 1..=8u32 {
            for n in 1..=8u32 {
                let expect = (m * (m - 1) / 2) as u64 * (n * (n - 1) / 2) as u64;
                let g = complete(m, n);
                assert_eq!(count_butterflies(&g), expect, "K_{{{m},{n}}}");
                assert_eq!(count_butterflies_anchored(&g, Side::J), expect);
            }
        }
    }

    #[test]
    fn brute_force_cap() {
        let g = random_graph(1, 40);
        assert_eq!(
            brute_force_count_capped(&g, 10),
            Err(ExactError::CapExceeded { edges: 40, cap: 10 })
        );
    }

    #[test]
    fn random_graphs_match_oracles() {
        for seed in 0..30 {
            let g = random_graph(seed, 50 + (seed as usize * 5));
            let quads = quadruples(&g);
            let exact = count_butterflies(&g);
            assert_eq!(exact, quads.len() as u64);
            assert_eq!(brute_force_count(&g).unwrap(), exact);
            assert_eq!(count_butterflies_anchored(&g, Side::I), exact);
            assert_eq!(count_butterflies_anchored(&g, Side::J), exact);

            let mut listed = enumerate_butterflies(&g);
            listed.sort();
            assert_eq!(listed, quads);

            let support = butterfly_support(&g);
            assert_eq!(support.total(), 4 * exact);
            for (v, _) in g.degrees(Side::I) {
                let want = quads.iter().filter(|b| b.i1 == v || b.i2 == v).count() as u64;
                assert_eq!(support.get(v, Side::I), Some(want));
            }
            for (v, _) in g.degrees(Side::J) {
                let want = quads.iter().filter(|b| b.j1 == v || b.j2 == v).count() as u64;
                assert_eq!(support.get(v, Side::J), Some(want));
            }

            let mut incident_sum = 0;
            for (i, j) in g.edges() {
                let c = count_incident_butterflies(&g, i, j).unwrap();
                let want = quads.iter().filter(|b| b.contains_edge(i, j)).count() as u64;
                assert_eq!(c, want);
                incident_sum += c;
            }
            assert_eq!(incident_sum, 4 * exact);
        }
    }

    #[test]
    fn support_fixtures() {
        let s = butterfly_support(&complete(2, 2));
        assert!(s.i.values().chain(s.j.values()).all(|&v| v == 1));
        let s = butterfly_support(&complete(2, 3));
        assert!(s.i.values().all(|&v| v == 3));
        assert!(s.j.values().all(|&v| v == 2));
        let s = butterfly_support(&caterpillar());
        assert_eq!(s.total(), 0);
        assert_eq!(s.i.len(), 2);
    }

    #[test]
    fn incident_fixtures() {
        assert_eq!(count_incident_butterflies(&complete(2, 2), 0, 1), Ok(1));
        assert_eq!(count_incident_butterflies(&caterpillar(), 2, 1), Ok(0));
        assert_eq!(
            count_incident_butterflies(&caterpillar(), 1, 2),
            Err(ExactError::AbsentEdge { i: 1, j: 2 })
        );
    }

    #[test]
    fn intersections() {
        assert_eq!(intersect_count(&[1, 3, 5], &[2, 3, 5, 7]), 2);
        let big: Vec<u32> = (0..200).collect();
        assert_eq!(intersect_count(&[5, 50, 500], &big), 2);
        assert_eq!(intersect_count(&[], &big), 0);
    }
}
