//! Planar trees, non-crossing chord diagrams and non-crossing trees.

use crate::portrait::{CanonicalCode, PlaneMultigraph, Policies, VertexColor};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;
use thiserror::Error;

pub const MAX_PLANAR_TREE_VERTICES: usize = 12;
pub const MAX_NC_TREE_EDGES: usize = 9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CombinatError {
    #[error("{what} of size {size} exceeds the enumeration budget {max}")]
    Budget {
        what: &'static str,
        size: usize,
        max: usize,
    },
    #[error("chords {0:?} and {1:?} cross")]
    Crossing((usize, usize), (usize, usize)),
    #[error("edge set is not a spanning tree on {0} vertices")]
    NotATree(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn totient(mut n: u128) -> u128 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Closed-form count of planar trees with `d` vertices up to
/// orientation-preserving homeomorphism.
///
/// The formula is evaluated over the common denominator `4(d-1)d`. At
/// `d = 2` the middle-binomial summand double counts the single edge, so
/// that case returns 1 directly.
pub fn count_planar_trees(d: usize) -> u128 {
    if d < 2 {
        return 0;
    }
    if d == 2 {
        return 1;
    }
    let dd = d as u128;
    let n = dd - 1;
    let mut num = 2 * binom(2 * n, n) + 4 * dd * totient(n);
    if d.is_multiple_of(2) {
        num += dd * binom(dd, dd / 2);
    }
    for k in 2..n {
        if n.is_multiple_of(k) {
            num += 2 * dd * binom(2 * k, k) * totient(n / k);
        }
    }
    let den = 4 * n * dd;
    debug_assert_eq!(num % den, 0);
    num / den
}

/// Closed-form count of nc-trees with `d'` edges up to rotation and
/// reflection.
pub fn count_nc_trees(d_prime: usize) -> u128 {
    if d_prime == 0 {
        return 1;
    }
    let m = d_prime as u128;
    let (n1, d1) = (binom(3 * m, m), (2 * m + 1) * (2 * m + 2));
    let (n2, d2) = if d_prime % 2 == 1 {
        (3 * binom((3 * m).div_ceil(2), (m - 1) / 2), 3 * m + 1)
    } else {
        (binom(3 * m / 2, m / 2), 2 * m + 2)
    };
    let num = n1 * d2 + n2 * d1;
    let den = d1 * d2;
    debug_assert_eq!(num % den, 0);
    num / den
}

/// Non-crossing perfect matching on `2(d-1)` boundary points at angles
/// `β_k = π(k + 1/2)/(d-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChordDiagram {
    pub points: usize,
    pub chords: Vec<(usize, usize)>,
}

fn chords_cross(a: (usize, usize), b: (usize, usize)) -> bool {
    let (a0, a1) = (a.0.min(a.1), a.0.max(a.1));
    let (b0, b1) = (b.0.min(b.1), b.0.max(b.1));
    (a0 < b0 && b0 < a1 && a1 < b1) || (b0 < a0 && a0 < b1 && b1 < a1)
}

impl ChordDiagram {
    pub fn new(points: usize, chords: Vec<(usize, usize)>) -> Result<Self, CombinatError> {
        if !points.is_multiple_of(2) || chords.len() * 2 != points {
            return Err(CombinatError::Invalid("chords must match all points".into()));
        }
        let mut seen = vec![false; points];
        for &(a, b) in &chords {
            if a >= points || b >= points || a == b || seen[a] || seen[b] {
                return Err(CombinatError::Invalid(format!("bad chord ({a}, {b})")));
            }
            seen[a] = true;
            seen[b] = true;
        }
        for i in 0..chords.len() {
            for j in i + 1..chords.len() {
                if chords_cross(chords[i], chords[j]) {
                    return Err(CombinatError::Crossing(chords[i], chords[j]));
                }
            }
        }
        let mut chords: Vec<(usize, usize)> = chords.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        chords.sort();
        Ok(ChordDiagram { points, chords })
    }

    pub fn angle(&self, k: usize) -> f64 {
        PI * (k as f64 + 0.5) / (self.points / 2) as f64
    }

    fn partner(&self) -> Vec<usize> {
        let mut m = vec![0; self.points];
        for &(a, b) in &self.chords {
            m[a] = b;
            m[b] = a;
        }
        m
    }

    /// Rotated by `k` points.
    pub fn rotated(&self, k: usize) -> ChordDiagram {
        let p = self.points;
        let chords = self.chords.iter().map(|&(a, b)| ((a + k) % p, (b + k) % p)).collect();
        ChordDiagram::new(p, chords).expect("rotation preserves validity")
    }
}

/// Chord diagram of the boundary walk of a tree started at dart `start`:
/// contour position `k` holds dart `φ^k(start)`, and each edge becomes the
/// chord between the positions of its two darts.
pub fn tree_to_chords(t: &PlaneMultigraph, start: usize) -> Result<ChordDiagram, CombinatError> {
    if !t.is_tree() || t.darts.is_empty() {
        return Err(CombinatError::NotATree(t.num_vertices()));
    }
    let m = t.darts.len();
    let mut pos = vec![usize::MAX; m];
    let mut d = start;
    for k in 0..m {
        pos[d] = k;
        d = t.face_step(d);
    }
    let chords = t
        .darts
        .iter()
        .filter(|x| x.id < x.twin)
        .map(|x| (pos[x.id], pos[x.twin]))
        .collect();
    ChordDiagram::new(m, chords)
}

/// Inverse of [`tree_to_chords`]: dart `k` has twin `m(k)` and
/// `next_ccw(k) = m(k) + 1`.
pub fn chords_to_tree(c: &ChordDiagram) -> PlaneMultigraph {
    let m = c.points;
    let partner = c.partner();
    let next: Vec<usize> = (0..m).map(|j| (partner[j] + 1) % m).collect();
    let mut vertex = vec![usize::MAX; m];
    let mut rotations: Vec<Vec<usize>> = Vec::new();
    for s in 0..m {
        if vertex[s] != usize::MAX {
            continue;
        }
        let v = rotations.len();
        let mut cyc = Vec::new();
        let mut d = s;
        while vertex[d] == usize::MAX {
            vertex[d] = v;
            cyc.push(d);
            d = next[d];
        }
        rotations.push(cyc);
    }
    if m == 0 {
        rotations.push(Vec::new());
    }
    let colors = vec![VertexColor::Plain; rotations.len()];
    PlaneMultigraph::from_rotation(&colors, &rotations, &partner, &vec![None; m])
}

fn dyck_words(n: usize) -> Vec<Vec<bool>> {
    fn rec(open: usize, close: usize, n: usize, cur: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if cur.len() == 2 * n {
            out.push(cur.clone());
            return;
        }
        if open < n {
            cur.push(true);
            rec(open + 1, close, n, cur, out);
            cur.pop();
        }
        if close < open {
            cur.push(false);
            rec(open, close + 1, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, 0, n, &mut Vec::new(), &mut out);
    out
}

fn dyck_to_chords(w: &[bool]) -> ChordDiagram {
    let mut stack = Vec::new();
    let mut chords = Vec::new();
    for (i, &up) in w.iter().enumerate() {
        if up {
            stack.push(i);
        } else {
            chords.push((stack.pop().expect("balanced"), i));
        }
    }
    ChordDiagram::new(w.len(), chords).expect("Dyck matchings are non-crossing")
}

/// One representative per isomorphism class of planar trees with `d`
/// vertices, keyed by canonical code.
pub fn planar_trees(
    d: usize,
    policies: Policies,
) -> Result<BTreeMap<CanonicalCode, PlaneMultigraph>, CombinatError> {
    if d > MAX_PLANAR_TREE_VERTICES {
        return Err(CombinatError::Budget {
            what: "planar tree",
            size: d,
            max: MAX_PLANAR_TREE_VERTICES,
        });
    }
    if d < 2 {
        return Err(CombinatError::Invalid("planar trees need d >= 2".into()));
    }
    let mut out = BTreeMap::new();
    for w in dyck_words(d - 1) {
        let t = chords_to_tree(&dyck_to_chords(&w));
        out.entry(t.canonical_code(policies)).or_insert(t);
    }
    Ok(out)
}

/// Canonical codes of all planar trees with `d` vertices.
pub fn enumerate_planar_trees(d: usize, policies: Policies) -> Result<Vec<CanonicalCode>, CombinatError> {
    Ok(planar_trees(d, policies)?.into_keys().collect())
}

/// The two proper red/blue colorings of a tree, red first at vertex 0.
pub fn bicolorations(t: &PlaneMultigraph) -> [PlaneMultigraph; 2] {
    let n = t.num_vertices();
    let mut side = vec![usize::MAX; n];
    side[0] = 0;
    let mut stack = vec![0];
    while let Some(v) = stack.pop() {
        for d in t.darts.iter().filter(|d| d.vertex == v) {
            let u = t.darts[d.twin].vertex;
            if side[u] == usize::MAX {
                side[u] = 1 - side[v];
                stack.push(u);
            }
        }
    }
    let mut a = t.clone();
    for (v, s) in a.vertices.iter_mut().zip(&side) {
        v.color = if *s == 0 {
            VertexColor::RedSource
        } else {
            VertexColor::BlueSink
        };
        v.index = v.color.morse_index();
    }
    let b = a.color_swapped();
    [a, b]
}

/// Tree with straight-chord edges on `n` circle points labeled
/// counterclockwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NcTree {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl NcTree {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, CombinatError> {
        let mut edges: Vec<(usize, usize)> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort();
        if n == 0 || edges.len() + 1 != n || edges.iter().any(|&(a, b)| a == b || b >= n) {
            return Err(CombinatError::NotATree(n));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(CombinatError::NotATree(n));
            }
            parent[ra] = rb;
        }
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                if chords_cross(edges[i], edges[j]) {
                    return Err(CombinatError::Crossing(edges[i], edges[j]));
                }
            }
        }
        Ok(NcTree { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_prime(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn mapped<F: Fn(usize) -> usize>(&self, f: F) -> NcTree {
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (f(a), f(b));
                (x.min(y), x.max(y))
            })
            .collect();
        edges.sort();
        NcTree { n: self.n, edges }
    }

    /// Relabel `i -> i + k mod n`.
    pub fn rotated(&self, k: usize) -> NcTree {
        let n = self.n;
        self.mapped(|i| (i + k) % n)
    }

    /// Relabel `i -> -i mod n`.
    pub fn reflected(&self) -> NcTree {
        let n = self.n;
        self.mapped(|i| (n - i) % n)
    }

    /// Least edge list over rotations, and reflections when allowed.
    pub fn canonical_form(&self, allow_reflection: bool) -> NcTree {
        let mut best = self.clone();
        let mut variants = vec![self.clone()];
        if allow_reflection {
            variants.push(self.reflected());
        }
        for v in variants {
            for k in 0..self.n {
                let r = v.rotated(k);
                if r.edges < best.edges {
                    best = r;
                }
            }
        }
        best
    }

    /// Canonical code string, e.g. `nc5:0-1,0-2,2-3,3-4`.
    pub fn canonical(&self, allow_reflection: bool) -> String {
        let c = self.canonical_form(allow_reflection);
        let body: Vec<String> = c.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        format!("nc{}:{}", self.n, body.join(","))
    }

    /// Parses the output of [`NcTree::canonical`].
    pub fn parse(code: &str) -> Result<NcTree, CombinatError> {
        let bad = || CombinatError::Invalid(format!("not an nc-tree code: {code}"));
        let rest = code.strip_prefix("nc").ok_or_else(bad)?;
        let (n, body) = rest.split_once(':').ok_or_else(bad)?;
        let n: usize = n.parse().map_err(|_| bad())?;
        let mut edges = Vec::new();
        for part in body.split(',').filter(|s| !s.is_empty()) {
            let (a, b) = part.split_once('-').ok_or_else(bad)?;
            edges.push((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
        }
        NcTree::new(n, edges)
    }

    /// Dual tree on the interleaved points. Red point `p` sits between
    /// dual points `p` and `p + 1`; two dual points are joined when exactly
    /// one chord separates them.
    pub fn dual(&self) -> NcTree {
        let n = self.n;
        let separates = |(u, v): (usize, usize), j: usize| u < j && j <= v;
        let mut edges = Vec::new();
        for j in 0..n {
            for k in j + 1..n {
                let count = self
                    .edges
                    .iter()
                    .filter(|&&e| separates(e, j) != separates(e, k))
                    .count();
                if count == 1 {
                    edges.push((j, k));
                }
            }
        }
        NcTree::new(n, edges).expect("dual of an nc-tree is an nc-tree")
    }

    pub fn is_self_dual(&self, allow_reflection: bool) -> bool {
        self.canonical(allow_reflection) == self.dual().canonical(allow_reflection)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Plane tree with the rotation system induced by the circle.
    pub fn to_plane_tree(&self) -> PlaneMultigraph {
        let n = self.n;
        let mut twin = Vec::new();
        let mut ends = Vec::new();
        for &(a, b) in &self.edges {
            let d = twin.len();
            twin.push(d + 1);
            twin.push(d);
            ends.push((a, b));
            ends.push((b, a));
        }
        let mut rotations = vec![Vec::new(); n];
        for (d, &(v, u)) in ends.iter().enumerate() {
            rotations[v].push((d, u));
        }
        // ccw around v: neighbors ordered by circle position starting after v
        let rotations: Vec<Vec<usize>> = rotations
            .into_iter()
            .enumerate()
            .map(|(v, mut r)| {
                r.sort_by_key(|&(_, u)| (u + n - v) % n);
                r.into_iter().map(|x| x.0).collect()
            })
            .collect();
        PlaneMultigraph::from_rotation(&vec![VertexColor::Plain; n], &rotations, &twin, &vec![None; twin.len()])
    }
}

/// All non-crossing spanning trees on points `0..n` (labeled).
pub fn labeled_nc_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    type Memo = HashMap<(usize, usize), Vec<Vec<(usize, usize)>>>;
    fn spanning(i: usize, j: usize, s: &mut Memo, e: &mut Memo) -> Vec<Vec<(usize, usize)>> {
        if i == j {
            return vec![vec![]];
        }
        if let Some(v) = s.get(&(i, j)) {
            return v.clone();
        }
        let mut out = Vec::new();
        for k in i + 1..=j {
            let left = with_edge(i, k, s, e);
            let right = spanning(k, j, s, e);
            for l in &left {
                for r in &right {
                    let mut x = l.clone();
                    x.extend_from_slice(r);
                    out.push(x);
                }
            }
        }
        s.insert((i, j), out.clone());
        out
    }
    fn with_edge(i: usize, j: usize, s: &mut Memo, e: &mut Memo) -> Vec<Vec<(usize, usize)>> {
        if let Some(v) = e.get(&(i, j)) {
            return v.clone();
        }
        let mut out = Vec::new();
        for p in i..j {
            let left = spanning(i, p, s, e);
            let right = spanning(p + 1, j, s, e);
            for l in &left {
                for r in &right {
                    let mut x = l.clone();
                    x.extend_from_slice(r);
                    x.push((i, j));
                    out.push(x);
                }
            }
        }
        e.insert((i, j), out.clone());
        out
    }
    if n == 0 {
        return vec![];
    }
    spanning(0, n - 1, &mut HashMap::new(), &mut HashMap::new())
}

/// Canonical representatives of nc-trees with `d'` edges.
pub fn enumerate_nc_trees(d_prime: usize, allow_reflection: bool) -> Result<Vec<NcTree>, CombinatError> {
    if d_prime > MAX_NC_TREE_EDGES {
        return Err(CombinatError::Budget {
            what: "nc-tree",
            size: d_prime,
            max: MAX_NC_TREE_EDGES,
        });
    }
    let n = d_prime + 1;
    let mut set = BTreeSet::new();
    for edges in labeled_nc_trees(n) {
        let t = NcTree::new(n, edges).expect("generator yields nc-trees");
        set.insert(t.canonical_form(allow_reflection));
    }
    Ok(set.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PLANAR: [u128; 15] = [1, 1, 2, 3, 6, 14, 34, 95, 280, 854, 2694, 8714, 28640, 95640, 323396];
    const NC: [u128; 13] = [1, 1, 3, 7, 28, 108, 507, 2431, 12441, 65169, 351156, 1926372, 10746856];

    #[test]
    fn closed_forms_match_reference_sequences() {
        for (i, &v) in PLANAR.iter().enumerate() {
            assert_eq!(count_planar_trees(i + 2), v, "d={}", i + 2);
        }
        for (i, &v) in NC.iter().enumerate() {
            assert_eq!(count_nc_trees(i + 1), v, "d'={}", i + 1);
        }
    }

    #[test]
    fn enumeration_matches_small_counts() {
        for d in 2..=8 {
            assert_eq!(enumerate_planar_trees(d, Policies::STRICT).unwrap().len() as u128, PLANAR[d - 2]);
        }
        for dp in 1..=6 {
            assert_eq!(enumerate_nc_trees(dp, true).unwrap().len() as u128, NC[dp - 1]);
        }
    }

    #[test]
    fn labeled_counts_are_fuss_catalan() {
        // (1/(2n-1)) C(3n-3, n-1) non-crossing spanning trees on n points
        for n in 1..=7u128 {
            let want = binom(3 * n - 3, n - 1) / (2 * n - 1);
            assert_eq!(labeled_nc_trees(n as usize).len() as u128, want);
        }
    }

    #[test]
    fn d7_has_mirror_pairs() {
        let strict = enumerate_planar_trees(7, Policies::STRICT).unwrap().len();
        let loose = enumerate_planar_trees(7, Policies::UNORIENTED).unwrap().len();
        assert_eq!(strict, 14);
        // two mirror pairs collapse
        assert_eq!(loose, 12);
    }

    #[test]
    fn budgets() {
        assert!(matches!(enumerate_planar_trees(13, Policies::STRICT), Err(CombinatError::Budget { .. })));
        assert!(matches!(enumerate_nc_trees(10, true), Err(CombinatError::Budget { .. })));
    }

    #[test]
    fn chord_examples() {
        let trees = planar_trees(2, Policies::STRICT).unwrap();
        let t = trees.values().next().unwrap();
        let c = tree_to_chords(t, 0).unwrap();
        assert_eq!(c.chords, vec![(0, 1)]);
        // star with three leaves: three short chords
        for t in planar_trees(4, Policies::STRICT).unwrap().values() {
            let c = tree_to_chords(t, 0).unwrap();
            let back = chords_to_tree(&c);
            assert_eq!(back.canonical_code(Policies::STRICT), t.canonical_code(Policies::STRICT));
            let is_star = (0..4).any(|v| t.degree(v) == 3);
            // under some rotation the star has no nesting, the path always nests one chord
            let min_nested = (0..6)
                .map(|k| {
                    let r = c.rotated(k);
                    r.chords.iter().filter(|a| r.chords.iter().any(|b| b.0 < a.0 && a.1 < b.1)).count()
                })
                .min()
                .unwrap();
            assert_eq!(min_nested, if is_star { 0 } else { 1 });
        }
        assert!(matches!(ChordDiagram::new(4, vec![(0, 2), (1, 3)]), Err(CombinatError::Crossing(..))));
        let c = ChordDiagram::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!((c.angle(0) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn chord_bijection_round_trips_up_to_d8() {
        for d in 2..=8 {
            for (code, t) in planar_trees(d, Policies::STRICT).unwrap() {
                for start in 0..t.darts.len() {
                    let back = chords_to_tree(&tree_to_chords(&t, start).unwrap());
                    assert_eq!(back.canonical_code(Policies::STRICT), code);
                }
            }
        }
    }

    #[test]
    fn every_tree_has_two_bicolorations() {
        for t in planar_trees(6, Policies::STRICT).unwrap().values() {
            let [a, b] = bicolorations(t);
            for g in [&a, &b] {
                assert!(g.darts.iter().all(|d| g.vertices[d.vertex].color != g.vertices[g.darts[d.twin].vertex].color));
            }
            assert_eq!(a.color_swapped(), b);
        }
    }

    #[test]
    fn d4_nc_trees_and_self_duals() {
        let trees = enumerate_nc_trees(4, true).unwrap();
        assert_eq!(trees.len(), 7);
        assert_eq!(trees.iter().filter(|t| t.is_self_dual(true)).count(), 3);
    }

    #[test]
    fn single_chord_dual_is_rotated_chord() {
        let t = NcTree::new(2, vec![(0, 1)]).unwrap();
        assert_eq!(t.dual(), t);
    }

    #[test]
    fn dual_is_an_involution_on_codes() {
        for dp in 1..=6 {
            for t in enumerate_nc_trees(dp, false).unwrap() {
                assert_eq!(t.dual().dual().canonical(false), t.canonical(false));
                // exactly: the double dual is the rotation by one
                assert_eq!(t.dual().dual(), t.rotated(1));
            }
        }
    }

    #[test]
    fn nc_code_round_trip() {
        for t in enumerate_nc_trees(5, true).unwrap() {
            let code = t.canonical(true);
            assert_eq!(NcTree::parse(&code).unwrap().canonical(true), code);
        }
        assert!(NcTree::parse("nc3:0-1").is_err());
    }

    proptest! {
        #[test]
        fn canonical_nc_form_is_rotation_invariant(idx in 0usize..55, k in 0usize..5, refl in any::<bool>()) {
            let all = labeled_nc_trees(5);
            let t = NcTree::new(5, all[idx % all.len()].clone()).unwrap();
            let mut u = t.rotated(k);
            if refl { u = u.reflected(); }
            prop_assert_eq!(t.canonical(true), u.canonical(true));
            prop_assert_eq!(t.rotated(k).canonical(false), t.canonical(false));
        }
    }
}
