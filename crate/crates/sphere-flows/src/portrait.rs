//! Blow-up and blow-down portraits as embedded plane multigraphs.

use crate::combinat::NcTree;
use crate::field::{Chart, EquilibriumKind, EquilibriumRecord, Linearization, Mode, RationalField};
use crate::poly::C64;
use crate::separatrix::{Color, Owner, Separatrix, Terminal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PortraitError {
    #[error("separatrix {index} has no terminal")]
    MissingTerminal { index: usize },
    #[error("separatrix {index} ends at equilibrium {id} of kind {kind:?}")]
    WrongTerminal {
        index: usize,
        id: usize,
        kind: EquilibriumKind,
    },
    #[error("saddle {0} does not have four traced branches")]
    IncompleteSaddle(usize),
    #[error("field mode {0:?} is not supported here")]
    WrongMode(Mode),
    #[error("boundary contour does not alternate between sources and sinks")]
    BadContour,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexColor {
    RedSource,
    BlueSink,
    Saddle,
    Plain,
}

impl VertexColor {
    fn token(self, swap: bool) -> u32 {
        match (self, swap) {
            (VertexColor::Plain, _) => 0,
            (VertexColor::RedSource, false) | (VertexColor::BlueSink, true) => 1,
            (VertexColor::BlueSink, false) | (VertexColor::RedSource, true) => 2,
            (VertexColor::Saddle, _) => 3,
        }
    }

    pub fn swap(self) -> Self {
        match self {
            VertexColor::RedSource => VertexColor::BlueSink,
            VertexColor::BlueSink => VertexColor::RedSource,
            c => c,
        }
    }

    pub fn morse_index(self) -> u8 {
        match self {
            VertexColor::RedSource => 2,
            VertexColor::Saddle => 1,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub color: VertexColor,
    pub index: u8,
    /// Equilibrium id or slot the vertex was built from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dart {
    pub id: usize,
    pub vertex: usize,
    pub twin: usize,
    pub next_ccw: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub dart: usize,
    pub saddle: Option<usize>,
}

/// Connected embedded multigraph given by a rotation system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneMultigraph {
    pub vertices: Vec<Vertex>,
    pub darts: Vec<Dart>,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationPolicy {
    Preserve,
    AllowReflection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimePolicy {
    Directed,
    AllowReversal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policies {
    pub orientation: OrientationPolicy,
    pub time: TimePolicy,
}

impl Policies {
    pub const STRICT: Policies = Policies {
        orientation: OrientationPolicy::Preserve,
        time: TimePolicy::Directed,
    };
    pub const UNORIENTED: Policies = Policies {
        orientation: OrientationPolicy::AllowReflection,
        time: TimePolicy::Directed,
    };
}

impl Default for Policies {
    fn default() -> Self {
        Policies::STRICT
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalCode {
    pub code: String,
    pub orientation_policy: OrientationPolicy,
    pub time_policy: TimePolicy,
}

impl std::fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.code)
    }
}

impl PlaneMultigraph {
    /// Graph from vertex colors, a twin involution, and per-vertex ccw dart
    /// lists. Dart `i` gets id `i`.
    pub fn from_rotation(
        colors: &[VertexColor],
        rotations: &[Vec<usize>],
        twin: &[usize],
        saddles: &[Option<usize>],
    ) -> Self {
        let n = twin.len();
        let mut darts = vec![
            Dart {
                id: 0,
                vertex: 0,
                twin: 0,
                next_ccw: 0
            };
            n
        ];
        for (v, rot) in rotations.iter().enumerate() {
            for (i, &d) in rot.iter().enumerate() {
                darts[d] = Dart {
                    id: d,
                    vertex: v,
                    twin: twin[d],
                    next_ccw: rot[(i + 1) % rot.len()],
                };
            }
        }
        let edges = (0..n)
            .filter(|&d| d < twin[d])
            .map(|d| Edge {
                dart: d,
                saddle: saddles.get(d).copied().flatten(),
            })
            .collect();
        let vertices = colors
            .iter()
            .enumerate()
            .map(|(id, &color)| Vertex {
                id,
                color,
                index: color.morse_index(),
                equilibrium: None,
            })
            .collect();
        PlaneMultigraph {
            vertices,
            darts,
            edges,
        }
    }

    pub fn single_vertex(color: VertexColor) -> Self {
        PlaneMultigraph::from_rotation(&[color], &[vec![]], &[], &[])
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.darts.len() / 2
    }

    pub fn prev_ccw(&self) -> Vec<usize> {
        let mut prev = vec![0; self.darts.len()];
        for d in &self.darts {
            prev[d.next_ccw] = d.id;
        }
        prev
    }

    /// `φ(d) = next_ccw(twin(d))`.
    pub fn face_step(&self, d: usize) -> usize {
        self.darts[self.darts[d].twin].next_ccw
    }

    /// Face index of every dart. A graph without edges has one face.
    pub fn faces(&self) -> (usize, Vec<usize>) {
        let n = self.darts.len();
        let mut face = vec![usize::MAX; n];
        let mut count = 0;
        for d in 0..n {
            if face[d] != usize::MAX {
                continue;
            }
            let mut x = d;
            while face[x] == usize::MAX {
                face[x] = count;
                x = self.face_step(x);
            }
            count += 1;
        }
        (count.max(1), face)
    }

    pub fn num_faces(&self) -> usize {
        self.faces().0
    }

    pub fn components(&self) -> usize {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for d in &self.darts {
            let a = find(&mut parent, d.vertex);
            let b = find(&mut parent, self.darts[d.twin].vertex);
            parent[a] = b;
        }
        (0..n).filter(|&v| find(&mut parent, v) == v).count()
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Checks the rotation system: twin is a fixed-point-free involution
    /// and `next_ccw` permutes the darts of each vertex.
    pub fn is_consistent(&self) -> bool {
        let n = self.darts.len();
        let mut seen = vec![false; n];
        for d in &self.darts {
            if d.twin >= n || d.twin == d.id || self.darts[d.twin].twin != d.id {
                return false;
            }
            if d.next_ccw >= n || self.darts[d.next_ccw].vertex != d.vertex || seen[d.next_ccw] {
                return false;
            }
            seen[d.next_ccw] = true;
        }
        true
    }

    pub fn degree(&self, v: usize) -> usize {
        self.darts.iter().filter(|d| d.vertex == v).count()
    }

    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.num_edges() + 1 == self.num_vertices()
    }

    /// Same map with every vertex colored `Plain`.
    pub fn uncolored(&self) -> Self {
        let mut g = self.clone();
        for v in &mut g.vertices {
            v.color = VertexColor::Plain;
        }
        g
    }

    /// Mirror image: reversed rotation at every vertex.
    pub fn mirrored(&self) -> Self {
        let prev = self.prev_ccw();
        let mut g = self.clone();
        for d in &mut g.darts {
            d.next_ccw = prev[d.id];
        }
        g
    }

    /// Colors swapped between sources and sinks.
    pub fn color_swapped(&self) -> Self {
        let mut g = self.clone();
        for v in &mut g.vertices {
            v.color = v.color.swap();
            v.index = v.color.morse_index();
        }
        g
    }

    /// Ccw dart cycle at every vertex, starting from its least dart.
    pub fn rotations(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        let mut seen = vec![false; self.darts.len()];
        for d in &self.darts {
            if seen[d.id] {
                continue;
            }
            let mut x = d.id;
            while !seen[x] {
                seen[x] = true;
                out[d.vertex].push(x);
                x = self.darts[x].next_ccw;
            }
        }
        out
    }

    fn rebuild(&self, keep_dart: &[bool], keep_vertex: &[bool]) -> PlaneMultigraph {
        let mut dmap = vec![usize::MAX; self.darts.len()];
        let mut n = 0;
        for d in 0..self.darts.len() {
            if keep_dart[d] {
                dmap[d] = n;
                n += 1;
            }
        }
        let mut vmap = vec![usize::MAX; self.vertices.len()];
        let mut colors = Vec::new();
        for (v, vert) in self.vertices.iter().enumerate() {
            if keep_vertex[v] {
                vmap[v] = colors.len();
                colors.push(vert.color);
            }
        }
        let mut rotations = vec![Vec::new(); colors.len()];
        for (v, rot) in self.rotations().into_iter().enumerate() {
            if keep_vertex[v] {
                rotations[vmap[v]] = rot.into_iter().filter(|&d| keep_dart[d]).map(|d| dmap[d]).collect();
            }
        }
        let mut twin = vec![0; n];
        let mut saddles = vec![None; n];
        let label: BTreeMap<usize, Option<usize>> = self
            .edges
            .iter()
            .flat_map(|e| [(e.dart, e.saddle), (self.darts[e.dart].twin, e.saddle)])
            .collect();
        for d in 0..self.darts.len() {
            if keep_dart[d] {
                twin[dmap[d]] = dmap[self.darts[d].twin];
                saddles[dmap[d]] = label.get(&d).copied().flatten();
            }
        }
        let mut g = PlaneMultigraph::from_rotation(&colors, &rotations, &twin, &saddles);
        for (v, vert) in self.vertices.iter().enumerate() {
            if keep_vertex[v] {
                g.vertices[vmap[v]].equilibrium = vert.equilibrium;
            }
        }
        g
    }

    /// Deletes edge `e` (an index into `edges`), keeping all vertices.
    pub fn without_edge(&self, e: usize) -> PlaneMultigraph {
        let d = self.edges[e].dart;
        let t = self.darts[d].twin;
        let keep: Vec<bool> = (0..self.darts.len()).map(|x| x != d && x != t).collect();
        self.rebuild(&keep, &vec![true; self.vertices.len()])
    }

    /// Deletes a degree-one vertex together with its edge.
    pub fn without_leaf(&self, v: usize) -> Option<PlaneMultigraph> {
        if self.degree(v) != 1 || self.vertices.len() < 2 {
            return None;
        }
        let d = self.darts.iter().find(|x| x.vertex == v)?.id;
        let t = self.darts[d].twin;
        let keep: Vec<bool> = (0..self.darts.len()).map(|x| x != d && x != t).collect();
        let keep_v: Vec<bool> = (0..self.vertices.len()).map(|x| x != v).collect();
        Some(self.rebuild(&keep, &keep_v))
    }

    /// Dual map on the sphere, colors swapped. Edge `k` with lower dart
    /// `d` becomes dual darts `2k` at the face of `twin(d)` and `2k + 1` at
    /// the face of `d`, keeping its saddle label, so a portrait pair built
    /// this way satisfies [`check_duality`].
    pub fn dual(&self) -> PlaneMultigraph {
        let color = self.vertices.first().map_or(VertexColor::Plain, |v| v.color.swap());
        if self.darts.is_empty() {
            return PlaneMultigraph::single_vertex(color);
        }
        let n = self.darts.len();
        let (nf, face) = self.faces();
        let mut dual_of = vec![0; n];
        let mut twin = vec![0; n];
        let mut saddles = vec![None; n];
        for (k, e) in self.edges.iter().enumerate() {
            let d = e.dart;
            let t = self.darts[d].twin;
            dual_of[t] = 2 * k;
            dual_of[d] = 2 * k + 1;
            twin[2 * k] = 2 * k + 1;
            twin[2 * k + 1] = 2 * k;
            saddles[2 * k] = e.saddle;
            saddles[2 * k + 1] = e.saddle;
        }
        // a face walk keeps the face on its right, so it runs clockwise
        // around the dual vertex
        let mut rotations = vec![Vec::new(); nf];
        let mut seen = vec![false; n];
        for d in 0..n {
            if seen[d] {
                continue;
            }
            let mut x = d;
            let mut orbit = Vec::new();
            while !seen[x] {
                seen[x] = true;
                orbit.push(dual_of[x]);
                x = self.face_step(x);
            }
            orbit.reverse();
            rotations[face[d]] = orbit;
        }
        PlaneMultigraph::from_rotation(&vec![color; nf], &rotations, &twin, &saddles)
    }

    fn code_from(&self, root: usize, rot: &[usize], swap: bool) -> Vec<u32> {
        let n = self.darts.len();
        let mut num = vec![u32::MAX; n];
        let mut order = Vec::with_capacity(n);
        num[root] = 0;
        order.push(root);
        let mut i = 0;
        while i < order.len() {
            let d = order[i];
            for nb in [rot[d], self.darts[d].twin] {
                if num[nb] == u32::MAX {
                    num[nb] = order.len() as u32;
                    order.push(nb);
                }
            }
            i += 1;
        }
        let mut out = Vec::with_capacity(3 * n);
        for &d in &order {
            out.push(num[rot[d]]);
            out.push(num[self.darts[d].twin]);
            out.push(self.vertices[self.darts[d].vertex].color.token(swap));
        }
        out
    }

    /// Lexicographically least traversal code over all roots and the
    /// variants allowed by `policies`.
    pub fn canonical_code(&self, policies: Policies) -> CanonicalCode {
        let mut best: Option<Vec<u32>> = None;
        let swaps: &[bool] = match policies.time {
            TimePolicy::Directed => &[false],
            TimePolicy::AllowReversal => &[false, true],
        };
        if self.darts.is_empty() {
            let tokens: Vec<u32> = self.vertices.iter().map(|v| v.color.token(false)).collect();
            let alt: Vec<u32> = self.vertices.iter().map(|v| v.color.token(true)).collect();
            let t = if swaps.len() == 2 { tokens.min(alt) } else { tokens };
            return CanonicalCode {
                code: format!("v{}", t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".")),
                orientation_policy: policies.orientation,
                time_policy: policies.time,
            };
        }
        let next: Vec<usize> = self.darts.iter().map(|d| d.next_ccw).collect();
        let prev = self.prev_ccw();
        let mut rots: Vec<&[usize]> = vec![&next];
        if policies.orientation == OrientationPolicy::AllowReflection {
            rots.push(&prev);
        }
        for rot in rots {
            for &swap in swaps {
                for root in 0..self.darts.len() {
                    let c = self.code_from(root, rot, swap);
                    if best.as_ref().is_none_or(|b| c < *b) {
                        best = Some(c);
                    }
                }
            }
        }
        let best = best.expect("nonempty");
        let mut s = String::with_capacity(best.len() * 3);
        for (i, chunk) in best.chunks(3).enumerate() {
            if i > 0 {
                s.push(';');
            }
            s.push_str(&format!("{},{},{}", chunk[0], chunk[1], chunk[2]));
        }
        CanonicalCode {
            code: s,
            orientation_policy: policies.orientation,
            time_policy: policies.time,
        }
    }
}

impl PlaneMultigraph {
    /// Rebuilds a map from the string of a [`CanonicalCode`]. Dart `i` is
    /// the `i`-th dart of the traversal; vertices are the rotation cycles.
    pub fn from_code(code: &str) -> Result<PlaneMultigraph, String> {
        let color = |t: u32| match t {
            0 => Ok(VertexColor::Plain),
            1 => Ok(VertexColor::RedSource),
            2 => Ok(VertexColor::BlueSink),
            3 => Ok(VertexColor::Saddle),
            _ => Err(format!("unknown color token {t}")),
        };
        if let Some(rest) = code.strip_prefix('v') {
            let tokens: Vec<u32> = rest
                .split('.')
                .map(|t| t.parse().map_err(|_| format!("bad token {t:?}")))
                .collect::<Result<_, _>>()?;
            if tokens.len() != 1 {
                return Err("an edgeless map on the sphere has one vertex".into());
            }
            return Ok(PlaneMultigraph::single_vertex(color(tokens[0])?));
        }
        let mut next = Vec::new();
        let mut twin = Vec::new();
        let mut tok = Vec::new();
        for part in code.split(';') {
            let f: Vec<usize> = part
                .split(',')
                .map(|t| t.parse().map_err(|_| format!("bad field {t:?}")))
                .collect::<Result<_, _>>()?;
            if f.len() != 3 {
                return Err(format!("dart entry {part:?} needs three fields"));
            }
            next.push(f[0]);
            twin.push(f[1]);
            tok.push(f[2] as u32);
        }
        let n = next.len();
        if next.iter().chain(&twin).any(|&x| x >= n) {
            return Err("dart index out of range".into());
        }
        let mut rotations: Vec<Vec<usize>> = Vec::new();
        let mut colors = Vec::new();
        let mut seen = vec![false; n];
        for d in 0..n {
            if seen[d] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = d;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x);
                x = next[x];
            }
            if x != d || cycle.iter().any(|&y| tok[y] != tok[d]) {
                return Err("rotation is not a permutation with constant colors".into());
            }
            colors.push(color(tok[d])?);
            rotations.push(cycle);
        }
        let g = PlaneMultigraph::from_rotation(&colors, &rotations, &twin, &vec![None; n]);
        if !g.is_consistent() {
            return Err("twin is not a fixed-point-free involution".into());
        }
        Ok(g)
    }
}

/// Free function form of [`PlaneMultigraph::canonical_code`].
pub fn canonical_code(g: &PlaneMultigraph, policies: Policies) -> CanonicalCode {
    g.canonical_code(policies)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectionEdge {
    pub from: usize,
    pub to: usize,
    /// Index into the separatrix list.
    pub separatrix: usize,
}

/// Directed graph of equilibria graded by Morse index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectionGraph {
    /// `(equilibrium id, Morse index)`.
    pub vertices: Vec<(usize, u8)>,
    pub edges: Vec<ConnectionEdge>,
}

impl ConnectionGraph {
    pub fn index_of(&self, id: usize) -> Option<u8> {
        self.vertices.iter().find(|v| v.0 == id).map(|v| v.1)
    }

    /// Every edge drops the index by one and every saddle has two incoming
    /// and two outgoing edges.
    pub fn is_graded(&self) -> bool {
        let ok_edges = self.edges.iter().all(|e| {
            matches!((self.index_of(e.from), self.index_of(e.to)), (Some(a), Some(b)) if a == b + 1)
        });
        let ok_saddles = self.vertices.iter().filter(|v| v.1 == 1).all(|&(id, _)| {
            self.edges.iter().filter(|e| e.to == id).count() == 2
                && self.edges.iter().filter(|e| e.from == id).count() == 2
        });
        ok_edges && ok_saddles
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Portraits {
    /// Blow-up portrait: sources joined by red separatrix pairs.
    pub c_plus: PlaneMultigraph,
    /// Blow-down portrait: sinks joined by blue separatrix pairs.
    pub c_minus: PlaneMultigraph,
    pub connection: ConnectionGraph,
}

/// Phase of a trajectory end at a hyperbolic zero, invariant along orbits
/// of the linearization: `arg(x-e) - (Im λ/Re λ) ln|x-e|`.
fn approach_phase(rec: &EquilibriumRecord, sep: &Separatrix) -> f64 {
    let p = sep.trajectory.last().point;
    let chart = rec.location.canonical().chart;
    let e = rec.location.canonical().value;
    let x = p.coord(chart).unwrap_or(p.value) - e;
    let twist = match rec.linearization {
        Linearization::Zero { lambda } if lambda.re != 0.0 => lambda.im / lambda.re,
        _ => 0.0,
    };
    (x.arg() - twist * x.norm().ln()).rem_euclid(2.0 * PI)
}

fn terminal_id(seps: &[Separatrix], i: usize) -> Result<usize, PortraitError> {
    match seps[i].terminal {
        Some(Terminal::Equilibrium { id }) => Ok(id),
        _ => Err(PortraitError::MissingTerminal { index: i }),
    }
}

fn one_portrait(
    records: &[EquilibriumRecord],
    seps: &[Separatrix],
    color: Color,
) -> Result<PlaneMultigraph, PortraitError> {
    let (want, vcolor) = match color {
        Color::Red => (EquilibriumKind::Source, VertexColor::RedSource),
        Color::Blue => (EquilibriumKind::Sink, VertexColor::BlueSink),
    };
    let verts: Vec<usize> = records.iter().filter(|r| r.kind == want).map(|r| r.id).collect();
    let vindex: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    // per saddle, the plus and minus separatrix indices
    let mut by_saddle: BTreeMap<usize, [Option<usize>; 2]> = BTreeMap::new();
    for (i, s) in seps.iter().enumerate() {
        if s.color != color {
            continue;
        }
        if let Owner::Pole { equilibrium } = s.owner {
            let slot = match s.branch {
                crate::separatrix::Branch::Plus => 0,
                crate::separatrix::Branch::Minus => 1,
            };
            by_saddle.entry(equilibrium).or_insert([None, None])[slot] = Some(i);
        }
    }
    let mut twin = Vec::new();
    let mut saddles = Vec::new();
    let mut dart_vertex = Vec::new();
    let mut dart_phase = Vec::new();
    for (&saddle, pair) in &by_saddle {
        let (a, b) = match pair {
            [Some(a), Some(b)] => (*a, *b),
            _ => return Err(PortraitError::IncompleteSaddle(saddle)),
        };
        let base = twin.len();
        for (k, &si) in [a, b].iter().enumerate() {
            let id = terminal_id(seps, si)?;
            let rec = &records[id];
            if rec.kind != want {
                return Err(PortraitError::WrongTerminal {
                    index: si,
                    id,
                    kind: rec.kind,
                });
            }
            twin.push(base + 1 - k);
            saddles.push(Some(saddle));
            dart_vertex.push(vindex[&id]);
            dart_phase.push(approach_phase(rec, &seps[si]));
        }
    }
    let mut rotations = vec![Vec::new(); verts.len()];
    for (d, &v) in dart_vertex.iter().enumerate() {
        rotations[v].push(d);
    }
    for rot in &mut rotations {
        rot.sort_by(|&x, &y| dart_phase[x].total_cmp(&dart_phase[y]));
    }
    let colors = vec![vcolor; verts.len()];
    let mut g = PlaneMultigraph::from_rotation(&colors, &rotations, &twin, &saddles);
    for (v, &id) in verts.iter().enumerate() {
        g.vertices[v].equilibrium = Some(id);
    }
    Ok(g)
}

/// `C+`, `C-` and the connection graph of a field whose pole separatrices
/// are traced. Darts are numbered per saddle in pole-id order, plus branch
/// first.
pub fn build_portraits(
    field: &RationalField,
    seps: &[Separatrix],
) -> Result<Portraits, PortraitError> {
    let records = field.classify();
    let c_plus = one_portrait(&records, seps, Color::Red)?;
    let c_minus = one_portrait(&records, seps, Color::Blue)?;
    let vertices = records
        .iter()
        .map(|r| {
            let idx = match r.kind {
                EquilibriumKind::Source => 2,
                EquilibriumKind::PoleSaddle => 1,
                _ => 0,
            };
            (r.id, idx)
        })
        .collect();
    let mut edges = Vec::new();
    for (i, s) in seps.iter().enumerate() {
        if let (Owner::Pole { equilibrium }, Ok(t)) = (s.owner, terminal_id(seps, i)) {
            let (from, to) = match s.color {
                Color::Red => (t, equilibrium),
                Color::Blue => (equilibrium, t),
            };
            edges.push(ConnectionEdge {
                from,
                to,
                separatrix: i,
            });
        }
    }
    Ok(Portraits {
        c_plus,
        c_minus,
        connection: ConnectionGraph { vertices, edges },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DualityVerdict {
    Pass,
    Fail { reason: String },
}

impl DualityVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, DualityVerdict::Pass)
    }
}

/// Checks that `C+` and `C-` are dual: the darts of both portraits must be
/// labeled by saddles, with the plus branch first; the face right of the
/// red dart at position `p` of a saddle must contain the sink reached by
/// the blue branch at position `p+1 mod 4`, and faces must correspond to
/// vertices bijectively in both directions.
pub fn check_duality(c_plus: &PlaneMultigraph, c_minus: &PlaneMultigraph) -> DualityVerdict {
    let fail = |reason: String| DualityVerdict::Fail { reason };
    if c_plus.num_edges() != c_minus.num_edges() {
        return fail(format!(
            "edge counts differ: {} vs {}",
            c_plus.num_edges(),
            c_minus.num_edges()
        ));
    }
    if c_plus.num_faces() != c_minus.num_vertices() || c_minus.num_faces() != c_plus.num_vertices() {
        return fail("face and vertex counts do not match".into());
    }
    if c_plus.num_edges() == 0 {
        return DualityVerdict::Pass;
    }
    // position of each dart at its saddle: red plus 1, red minus 3, blue plus 0, blue minus 2
    let index = |g: &PlaneMultigraph, offset: usize| -> Result<BTreeMap<(usize, usize), usize>, String> {
        let mut m = BTreeMap::new();
        for e in &g.edges {
            let s = e.saddle.ok_or("edge without saddle label")?;
            let d = e.dart;
            let t = g.darts[d].twin;
            let (first, second) = if d < t { (d, t) } else { (t, d) };
            m.insert((s, offset), first);
            m.insert((s, offset + 2), second);
        }
        Ok(m)
    };
    let (red, blue) = match (index(c_plus, 1), index(c_minus, 0)) {
        (Ok(r), Ok(b)) => (r, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    let check = |g: &PlaneMultigraph,
                 own: &BTreeMap<(usize, usize), usize>,
                 other: &PlaneMultigraph,
                 other_map: &BTreeMap<(usize, usize), usize>|
     -> Result<(), String> {
        let (nf, face) = g.faces();
        let mut face_vertex = vec![usize::MAX; nf];
        for (&(s, p), &d) in own {
            let od = other_map
                .get(&(s, (p + 1) % 4))
                .ok_or(format!("saddle {s} missing in dual"))?;
            let v = other.darts[*od].vertex;
            let f = face[d];
            if face_vertex[f] == usize::MAX {
                face_vertex[f] = v;
            } else if face_vertex[f] != v {
                return Err(format!("face {f} contains two dual vertices"));
            }
        }
        let mut seen = face_vertex.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != nf || seen.contains(&usize::MAX) {
            return Err("faces do not biject onto dual vertices".into());
        }
        Ok(())
    };
    if let Err(e) = check(c_plus, &red, c_minus, &blue) {
        return fail(e);
    }
    if let Err(e) = check(c_minus, &blue, c_plus, &red) {
        return fail(e);
    }
    DualityVerdict::Pass
}

/// Reduced connection graph of a polynomial field from its boundary
/// separatrices: the terminals around the Poincaré circle form the
/// boundary walk of a planar tree.
pub fn reduced_connection_graph(
    field: &RationalField,
    seps: &[Separatrix],
) -> Result<PlaneMultigraph, PortraitError> {
    if field.mode() != Mode::Polynomial {
        return Err(PortraitError::WrongMode(field.mode()));
    }
    let records = field.classify();
    let mut labeled: Vec<(usize, usize)> = Vec::new();
    for (i, s) in seps.iter().enumerate() {
        if let Owner::Boundary { label } = s.owner {
            let id = terminal_id(seps, i)?;
            let want = match s.color {
                Color::Red => EquilibriumKind::Source,
                Color::Blue => EquilibriumKind::Sink,
            };
            if records[id].kind != want {
                return Err(PortraitError::WrongTerminal {
                    index: i,
                    id,
                    kind: records[id].kind,
                });
            }
            labeled.push((label, id));
        }
    }
    labeled.sort();
    let terminals: Vec<usize> = labeled.iter().map(|x| x.1).collect();
    contour_tree(&records, &terminals)
}

/// Tree whose boundary walk visits `terminals` in ccw order.
pub(crate) fn contour_tree(
    records: &[EquilibriumRecord],
    terminals: &[usize],
) -> Result<PlaneMultigraph, PortraitError> {
    let m = terminals.len();
    if m == 0 || !m.is_multiple_of(2) {
        return Err(PortraitError::BadContour);
    }
    let mut verts: Vec<usize> = terminals.to_vec();
    verts.sort();
    verts.dedup();
    let vindex: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    // dart k: T_k -> T_{k+1}
    let mut twin = vec![usize::MAX; m];
    for k in 0..m {
        if twin[k] != usize::MAX {
            continue;
        }
        let (a, b) = (terminals[k], terminals[(k + 1) % m]);
        if a == b {
            return Err(PortraitError::BadContour);
        }
        let j = (0..m)
            .find(|&j| j != k && twin[j] == usize::MAX && terminals[j] == b && terminals[(j + 1) % m] == a)
            .ok_or(PortraitError::BadContour)?;
        twin[k] = j;
        twin[j] = k;
    }
    // next_ccw(twin(out_{k-1})) = out_k
    let mut next = vec![usize::MAX; m];
    for k in 0..m {
        let prev = (k + m - 1) % m;
        next[twin[prev]] = k;
    }
    let mut rotations = vec![Vec::new(); verts.len()];
    let mut visited = vec![false; m];
    for start in 0..m {
        if visited[start] {
            continue;
        }
        let v = vindex[&terminals[start]];
        let mut d = start;
        let mut cycle = Vec::new();
        while !visited[d] {
            visited[d] = true;
            cycle.push(d);
            d = next[d];
        }
        if !rotations[v].is_empty() {
            return Err(PortraitError::BadContour);
        }
        rotations[v] = cycle;
    }
    let colors: Vec<VertexColor> = verts
        .iter()
        .map(|&id| match records[id].kind {
            EquilibriumKind::Source => VertexColor::RedSource,
            EquilibriumKind::Sink => VertexColor::BlueSink,
            _ => VertexColor::Plain,
        })
        .collect();
    let mut g = PlaneMultigraph::from_rotation(&colors, &rotations, &twin, &vec![None; m]);
    for (v, &id) in verts.iter().enumerate() {
        g.vertices[v].equilibrium = Some(id);
    }
    if !g.is_consistent() || !g.is_tree() {
        return Err(PortraitError::BadContour);
    }
    Ok(g)
}

/// Red and blue nc-trees of an anti-polynomial field from its saddle
/// separatrices. Source slot `n` is red vertex `(n-1)/2`, sink slot `n` is
/// blue vertex `n/2`.
pub fn antipolynomial_trees(
    field: &RationalField,
    seps: &[Separatrix],
) -> Result<(NcTree, NcTree), PortraitError> {
    if field.mode() != Mode::AntiPolynomial {
        return Err(PortraitError::WrongMode(field.mode()));
    }
    let n = field.d_prime() + 1;
    let mut red = Vec::new();
    let mut blue = Vec::new();
    let mut by_saddle: BTreeMap<(usize, Color), Vec<usize>> = BTreeMap::new();
    for (i, s) in seps.iter().enumerate() {
        let slot = match s.terminal {
            Some(Terminal::BoundarySlot { slot, .. }) => slot,
            _ => return Err(PortraitError::MissingTerminal { index: i }),
        };
        let want_odd = s.color == Color::Red;
        if (slot % 2 == 1) != want_odd {
            return Err(PortraitError::BadContour);
        }
        if let Owner::Pole { equilibrium } = s.owner {
            by_saddle.entry((equilibrium, s.color)).or_default().push(slot);
        }
    }
    for ((saddle, color), slots) in by_saddle {
        if slots.len() != 2 {
            return Err(PortraitError::IncompleteSaddle(saddle));
        }
        let v: Vec<usize> = slots
            .iter()
            .map(|&s| if color == Color::Red { (s - 1) / 2 } else { s / 2 })
            .collect();
        let e = (v[0].min(v[1]), v[0].max(v[1]));
        match color {
            Color::Red => red.push(e),
            Color::Blue => blue.push(e),
        }
    }
    let red = NcTree::new(n, red).map_err(|_| PortraitError::BadContour)?;
    let blue = NcTree::new(n, blue).map_err(|_| PortraitError::BadContour)?;
    Ok((red, blue))
}

/// Angular order check helper for tests and rendering: location of an
/// equilibrium as a finite point of the given chart.
pub fn chart_location(rec: &EquilibriumRecord, chart: Chart) -> Option<C64> {
    rec.location.coord(chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_field;
    use crate::separatrix::{trace_all, trace_boundary_separatrices, SeparatrixConfig};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn analyze(f: &RationalField) -> Portraits {
        let seps = trace_all(f, &SeparatrixConfig::default()).unwrap();
        build_portraits(f, &seps).unwrap()
    }

    fn cubic() -> RationalField {
        build_field(&[c(1.0, 0.0), c(-2.0, 0.0)], &[c(0.0, 0.0)], c(-1.0, 0.0)).unwrap()
    }

    /// Path with `n` vertices.
    fn path(n: usize) -> PlaneMultigraph {
        let mut rot = vec![Vec::new(); n];
        let mut twin = Vec::new();
        for i in 0..n - 1 {
            let d = twin.len();
            twin.push(d + 1);
            twin.push(d);
            rot[i].push(d);
            rot[i + 1].push(d + 1);
        }
        PlaneMultigraph::from_rotation(&vec![VertexColor::Plain; n], &rot, &twin, &vec![None; twin.len()])
    }

    fn star(leaves: usize) -> PlaneMultigraph {
        let mut rot = vec![Vec::new(); leaves + 1];
        let mut twin = Vec::new();
        for i in 0..leaves {
            twin.push(2 * i + 1);
            twin.push(2 * i);
            rot[0].push(2 * i);
            rot[i + 1].push(2 * i + 1);
        }
        PlaneMultigraph::from_rotation(&vec![VertexColor::Plain; leaves + 1], &rot, &twin, &vec![None; twin.len()])
    }

    fn relabel(g: &PlaneMultigraph, perm: &[usize]) -> PlaneMultigraph {
        let mut darts = g.darts.clone();
        for d in &g.darts {
            darts[perm[d.id]] = Dart {
                id: perm[d.id],
                vertex: d.vertex,
                twin: perm[d.twin],
                next_ccw: perm[d.next_ccw],
            };
        }
        PlaneMultigraph {
            vertices: g.vertices.clone(),
            darts,
            edges: vec![],
        }
    }

    #[test]
    fn quadratic_portraits_are_single_vertices() {
        let f = build_field(&[c(1.0, 0.0), c(-1.0, 0.0)], &[], c(1.0, 0.0)).unwrap();
        let p = analyze(&f);
        assert_eq!(p.c_plus.num_vertices(), 1);
        assert_eq!(p.c_plus.num_edges(), 0);
        assert_eq!(p.c_plus.vertices[0].equilibrium, Some(0));
        assert_eq!(p.c_minus.vertices[0].equilibrium, Some(1));
        assert!(check_duality(&p.c_plus, &p.c_minus).passed());
        assert_eq!(p.c_plus.euler_characteristic(), 2);
    }

    #[test]
    fn cubic_example_loop_and_edge() {
        let p = analyze(&cubic());
        assert_eq!(p.c_plus.num_vertices(), 1);
        assert_eq!(p.c_plus.num_edges(), 1);
        assert_eq!(p.c_plus.num_faces(), 2);
        assert_eq!(p.c_minus.num_vertices(), 2);
        assert_eq!(p.c_minus.num_edges(), 1);
        assert_eq!(p.c_minus.num_faces(), 1);
        assert!(check_duality(&p.c_plus, &p.c_minus).passed());
        assert!(p.connection.is_graded());
        for g in [&p.c_plus, &p.c_minus] {
            assert!(g.is_consistent());
            assert_eq!(g.euler_characteristic(), 2);
        }
    }

    #[test]
    fn cubic_polynomial_after_mobius_has_loop_and_edge() {
        let roots = [c(1.0, 0.0), C64::from_polar(1.0, 2.0 * PI / 3.0), C64::from_polar(1.0, -2.0 * PI / 3.0)];
        let f = build_field(&roots, &[], c(1.0, 0.0)).unwrap();
        let g = f.apply_mobius(&crate::field::Mobius::new(c(1.0, 0.0), c(0.0, 0.0), c(0.3, 0.2), c(1.0, 0.0))).unwrap();
        assert_eq!(g.mode(), Mode::Normalized);
        let p = analyze(&g);
        assert_eq!((p.c_plus.num_vertices(), p.c_plus.num_edges()), (1, 1));
        assert_eq!((p.c_minus.num_vertices(), p.c_minus.num_edges()), (2, 1));
        assert!(check_duality(&p.c_plus, &p.c_minus).passed());
    }

    #[test]
    fn mismatched_pair_fails_duality() {
        let p = analyze(&cubic());
        // swap the rotation so the sink assignment breaks: pair C+ with itself recolored
        let bogus = p.c_plus.color_swapped();
        assert!(!check_duality(&p.c_plus, &bogus).passed());
        let mut broken = p.c_minus.clone();
        for e in &mut broken.edges {
            e.saddle = Some(99);
        }
        assert!(!check_duality(&p.c_plus, &broken).passed());
    }

    #[test]
    fn time_reversal_swaps_portraits() {
        let f = build_field(&[c(1.0, 0.2), c(-0.7, 1.1), c(0.1, -1.3), c(0.8, -0.5)], &[c(0.2, 0.1), c(-0.4, -0.3)], c(0.6, 0.8)).unwrap();
        let p = analyze(&f);
        let r = analyze(&f.reversed());
        let code = |g: &PlaneMultigraph| g.canonical_code(Policies::STRICT);
        assert_eq!(code(&p.c_plus), code(&r.c_minus.color_swapped()));
        assert_eq!(code(&p.c_minus), code(&r.c_plus.color_swapped()));
        assert!(check_duality(&p.c_plus, &p.c_minus).passed());
        assert_eq!(p.c_plus.num_vertices() + p.c_minus.num_vertices(), f.d_prime() + 2);
    }

    #[test]
    fn canonical_code_basics() {
        let p3 = path(4);
        let k13 = star(3);
        assert_ne!(p3.canonical_code(Policies::STRICT), k13.canonical_code(Policies::STRICT));
        assert_ne!(p3.canonical_code(Policies::UNORIENTED), k13.canonical_code(Policies::UNORIENTED));
        // rotating the star's dart order at the center is the same embedded tree
        let mut rotated = k13.clone();
        let center: Vec<usize> = vec![2, 4, 0];
        for (i, &d) in center.iter().enumerate() {
            rotated.darts[d].next_ccw = center[(i + 1) % 3];
        }
        assert_eq!(rotated.canonical_code(Policies::STRICT), k13.canonical_code(Policies::STRICT));
    }

    #[test]
    fn mirror_pair_distinct_unless_reflection_allowed() {
        // spider with legs 1, 2, 3 around the center: chiral with 7 vertices
        let legs = [1usize, 2, 3];
        let mut rot = vec![Vec::new(); 7];
        let mut twin = Vec::new();
        let mut next_vertex = 1;
        for &len in &legs {
            let mut prev = 0;
            for _ in 0..len {
                let d = twin.len();
                twin.push(d + 1);
                twin.push(d);
                rot[prev].push(d);
                rot[next_vertex].push(d + 1);
                prev = next_vertex;
                next_vertex += 1;
            }
        }
        let g = PlaneMultigraph::from_rotation(&[VertexColor::Plain; 7], &rot, &twin, &[None; 12]);
        let m = g.mirrored();
        assert_ne!(g.canonical_code(Policies::STRICT), m.canonical_code(Policies::STRICT));
        assert_eq!(g.canonical_code(Policies::UNORIENTED), m.canonical_code(Policies::UNORIENTED));
    }

    proptest! {
        #[test]
        fn canonical_code_invariant_under_relabel(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = if seed % 2 == 0 { path(5) } else { star(4) };
            let mut perm: Vec<usize> = (0..g.darts.len()).collect();
            perm.shuffle(&mut rng);
            let h = relabel(&g, &perm);
            prop_assert!(h.is_consistent());
            prop_assert_eq!(g.canonical_code(Policies::STRICT), h.canonical_code(Policies::STRICT));
        }
    }

    #[test]
    fn dual_matches_traced_blow_down_portrait() {
        let fields = [
            cubic(),
            build_field(&[c(1.0, 0.2), c(-0.7, 1.1), c(0.1, -1.3), c(0.8, -0.5)], &[c(0.2, 0.1), c(-0.4, -0.3)], c(0.6, 0.8)).unwrap(),
            build_field(
                &[c(1.3, 0.1), c(-0.2, 1.0), c(-1.1, -0.4), c(0.4, -1.2), c(2.0, 1.5)],
                &[c(0.1, 0.2), c(-0.5, 0.3), c(0.6, -0.4)],
                c(-0.3, 0.9),
            )
            .unwrap(),
        ];
        for f in &fields {
            let p = analyze(f);
            let d = p.c_plus.dual();
            assert!(d.is_consistent());
            assert!(check_duality(&p.c_plus, &d).passed());
            assert_eq!(d.canonical_code(Policies::STRICT), p.c_minus.canonical_code(Policies::STRICT));
            assert_eq!(d.dual().canonical_code(Policies::STRICT), p.c_plus.canonical_code(Policies::STRICT));
        }
    }

    #[test]
    fn leaf_and_edge_removal() {
        let p = path(4);
        let q = p.without_leaf(0).unwrap();
        assert!(q.is_consistent());
        assert_eq!(q.canonical_code(Policies::STRICT), path(3).canonical_code(Policies::STRICT));
        assert!(p.without_leaf(1).is_none());
        let s = star(3).without_edge(0);
        assert_eq!(s.num_vertices(), 4);
        assert_eq!(s.components(), 2);
    }

    #[test]
    fn code_round_trip() {
        let p = analyze(&cubic());
        for g in [path(5), star(4), p.c_plus.clone(), p.c_minus.clone(), PlaneMultigraph::single_vertex(VertexColor::BlueSink)] {
            let c = g.canonical_code(Policies::STRICT);
            let h = PlaneMultigraph::from_code(&c.code).unwrap();
            assert_eq!(h.canonical_code(Policies::STRICT), c);
        }
        assert!(PlaneMultigraph::from_code("0,0,0").is_err());
        assert!(PlaneMultigraph::from_code("x").is_err());
    }

    #[test]
    fn reduced_graph_of_small_polynomials() {
        let f2 = build_field(&[c(1.0, 0.0), c(-1.0, 0.0)], &[], c(1.0, 0.0)).unwrap();
        let seps = trace_boundary_separatrices(&f2, &SeparatrixConfig::default()).unwrap();
        let t = reduced_connection_graph(&f2, &seps).unwrap();
        assert_eq!(t.uncolored().canonical_code(Policies::STRICT), path(2).canonical_code(Policies::STRICT));
        assert!(t.is_tree());
        let roots = [c(1.0, 0.0), C64::from_polar(1.0, 2.0 * PI / 3.0), C64::from_polar(1.0, -2.0 * PI / 3.0)];
        let f3 = build_field(&roots, &[], c(1.0, 0.0)).unwrap();
        let seps = trace_boundary_separatrices(&f3, &SeparatrixConfig::default()).unwrap();
        let t = reduced_connection_graph(&f3, &seps).unwrap();
        assert_eq!(t.uncolored().canonical_code(Policies::STRICT), path(3).canonical_code(Policies::STRICT));
        // the middle vertex is the source 1
        let mid = (0..3).find(|&v| t.degree(v) == 2).unwrap();
        assert_eq!(t.vertices[mid].equilibrium, Some(0));
    }

    #[test]
    fn antipolynomial_trees_of_quadratic_q() {
        let q = crate::poly::ComplexPoly::new(vec![c(0.0, -1.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let f = RationalField::from_antipolynomial(&q, 1e-12).unwrap();
        let seps = trace_boundary_separatrices(&f, &SeparatrixConfig::default()).unwrap();
        let (red, blue) = antipolynomial_trees(&f, &seps).unwrap();
        assert_eq!(red.edges().len(), 2);
        assert_eq!(red.dual(), blue);
    }
}
