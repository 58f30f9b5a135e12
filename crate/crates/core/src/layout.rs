// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Coupling maps, interaction graphs, and enumeration of every way a
//! circuit's interaction graph embeds into a device.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::transpile::{remap, Layout, TranspileError};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("edge {0}-{1} is outside the {2}-qubit map")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("circuit interaction graph does not embed in `{0}` (routing is not supported)")]
    NoEmbedding(String),
    #[error("circuit uses {0} qubits, device `{1}` has {2}")]
    TooManyQubits(usize, String, usize),
    #[error(transparent)]
    Transpile(#[from] TranspileError),
    #[error("scorer failed: {0}")]
    Scorer(String),
}

/// Undirected device connectivity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CouplingMapFile", into = "CouplingMapFile")]
pub struct CouplingMap {
    name: String,
    n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct CouplingMapFile {
    name: String,
    n_qubits: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<CouplingMapFile> for CouplingMap {
    type Error = LayoutError;

    fn try_from(f: CouplingMapFile) -> Result<Self, Self::Error> {
        CouplingMap::new(f.name, f.n_qubits, f.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<CouplingMap> for CouplingMapFile {
    fn from(c: CouplingMap) -> Self {
        CouplingMapFile {
            name: c.name,
            n_qubits: c.n_qubits,
            edges: c.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl CouplingMap {
    pub fn new(
        name: impl Into<String>,
        n_qubits: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<CouplingMap, LayoutError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n_qubits || b >= n_qubits {
                return Err(LayoutError::EdgeOutOfRange(a, b, n_qubits));
            }
            if a == b {
                return Err(LayoutError::SelfLoop(a));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(LayoutError::DuplicateEdge(a.min(b), a.max(b)));
            }
        }
        let mut adj = vec![Vec::new(); n_qubits];
        for &(a, b) in &set {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj.iter_mut().for_each(|v| v.sort_unstable());
        Ok(CouplingMap {
            name: name.into(),
            n_qubits,
            edges: set,
            adj,
        })
    }

    /// The 7-qubit IBM Nairobi (Falcon r5.11H) map.
    pub fn nairobi() -> CouplingMap {
        CouplingMap::new(
            "nairobi",
            7,
            [(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)],
        )
        .expect("static map")
    }

    /// The 27-qubit IBM Montreal (Falcon r4) heavy-hex map.
    pub fn montreal() -> CouplingMap {
        CouplingMap::new(
            "montreal",
            27,
            [
                (0, 1),
                (1, 2),
                (1, 4),
                (2, 3),
                (3, 5),
                (4, 7),
                (5, 8),
                (6, 7),
                (7, 10),
                (8, 9),
                (8, 11),
                (10, 12),
                (11, 14),
                (12, 13),
                (12, 15),
                (13, 14),
                (14, 16),
                (15, 18),
                (16, 19),
                (17, 18),
                (18, 21),
                (19, 20),
                (19, 22),
                (21, 23),
                (22, 25),
                (23, 24),
                (24, 25),
                (25, 26),
            ],
        )
        .expect("static map")
    }

    pub fn by_name(name: &str) -> Option<CouplingMap> {
        match name {
            "nairobi" | "ibm_nairobi" => Some(CouplingMap::nairobi()),
            "montreal" | "ibmq_montreal" => Some(CouplingMap::montreal()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adj[q]
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adj[q].len()
    }
}

/// Logical qubits a circuit touches and the pairs its 2q gates couple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    pub vertices: Vec<usize>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl InteractionGraph {
    fn neighbors(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut m: BTreeMap<usize, Vec<usize>> =
            self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &(a, b) in &self.edges {
            m.get_mut(&a).expect("vertex").push(b);
            m.get_mut(&b).expect("vertex").push(a);
        }
        m
    }
}

pub fn interaction_graph(c: &Circuit) -> InteractionGraph {
    let edges = c
        .gates()
        .iter()
        .filter(|g| g.qubits.len() == 2)
        .map(|g| (g.qubits[0].min(g.qubits[1]), g.qubits[0].max(g.qubits[1])))
        .collect();
    InteractionGraph {
        vertices: c.active_qubits(),
        edges,
    }
}

/// Every injective map of `g`'s vertices onto `cm` that sends each
/// interaction edge to a coupling edge. Results are ordered
/// lexicographically by the images of the vertices in ascending order.
///
/// The search is VF2-style backtracking: vertices are matched in an order
/// where each new vertex is adjacent to an already-matched one whenever
/// possible, candidates come from the neighborhood of a matched neighbor's
/// image, and a physical qubit is only tried if its degree covers the
/// logical degree.
pub fn enumerate_embeddings(g: &InteractionGraph, cm: &CouplingMap) -> Vec<Vec<usize>> {
    let k = g.vertices.len();
    if k > cm.n_qubits() {
        return Vec::new();
    }
    if k == 0 {
        return vec![Vec::new()];
    }
    let nbrs = g.neighbors();
    let pos: BTreeMap<usize, usize> = g.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let ldeg: Vec<usize> = g.vertices.iter().map(|v| nbrs[v].len()).collect();
    let lnbr: Vec<Vec<usize>> = g
        .vertices
        .iter()
        .map(|v| nbrs[v].iter().map(|u| pos[u]).collect())
        .collect();

    // Matching order: repeatedly take the unmatched vertex with the most
    // matched neighbors, then the highest degree, then the lowest index.
    let mut order = Vec::with_capacity(k);
    let mut placed = vec![false; k];
    for _ in 0..k {
        let next = (0..k)
            .filter(|&i| !placed[i])
            .max_by_key(|&i| {
                let conn = lnbr[i].iter().filter(|&&j| placed[j]).count();
                (conn, ldeg[i], std::cmp::Reverse(i))
            })
            .expect("unplaced vertex");
        placed[next] = true;
        order.push(next);
    }

    struct Search<'a> {
        cm: &'a CouplingMap,
        order: Vec<usize>,
        ldeg: Vec<usize>,
        lnbr: Vec<Vec<usize>>,
        image: Vec<usize>,
        used: Vec<bool>,
        out: Vec<Vec<usize>>,
    }

    impl Search<'_> {
        fn feasible(&self, v: usize, p: usize) -> bool {
            !self.used[p]
                && self.cm.degree(p) >= self.ldeg[v]
                && self.lnbr[v]
                    .iter()
                    .all(|&u| self.image[u] == usize::MAX || self.cm.has_edge(self.image[u], p))
        }

        fn go(&mut self, depth: usize) {
            if depth == self.order.len() {
                self.out.push(self.image.clone());
                return;
            }
            let v = self.order[depth];
            let anchor = self.lnbr[v].iter().copied().find(|&u| self.image[u] != usize::MAX);
            let candidates: Vec<usize> = match anchor {
                Some(u) => self.cm.neighbors(self.image[u]).to_vec(),
                None => (0..self.cm.n_qubits()).collect(),
            };
            for p in candidates {
                if self.feasible(v, p) {
                    self.image[v] = p;
                    self.used[p] = true;
                    self.go(depth + 1);
                    self.used[p] = false;
                    self.image[v] = usize::MAX;
                }
            }
        }
    }

    let mut s = Search {
        cm,
        order,
        ldeg,
        lnbr,
        image: vec![usize::MAX; k],
        used: vec![false; cm.n_qubits()],
        out: Vec::new(),
    };
    s.go(0);
    let mut out = s.out;
    out.sort_unstable();
    out
}

/// Turns a vertex embedding into a [`Layout`] over logical qubits
/// `0..=max vertex`; logical qubits the circuit never touches take the
/// lowest unused physical qubits.
fn to_layout(g: &InteractionGraph, image: &[usize], device_width: usize) -> Layout {
    let width = g.vertices.last().map(|&v| v + 1).unwrap_or(0);
    let mut map = vec![usize::MAX; width];
    let mut used = vec![false; device_width];
    for (&v, &p) in g.vertices.iter().zip(image) {
        map[v] = p;
        used[p] = true;
    }
    let mut free = (0..device_width).filter(|&p| !used[p]);
    for m in map.iter_mut().filter(|m| **m == usize::MAX) {
        *m = free.next().expect("device wider than circuit");
    }
    Layout::new(map)
}

pub fn enumerate_layouts(g: &InteractionGraph, cm: &CouplingMap) -> Vec<Layout> {
    enumerate_embeddings(g, cm)
        .iter()
        .map(|img| to_layout(g, img, cm.n_qubits()))
        .collect()
}

/// Size of the top-10% subset: `n / 10` rounded half up, at least one
/// layout when any exist.
pub fn top_decile_len(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        ((n + 5) / 10).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedLayout {
    pub layout: Layout,
    pub circuit: Circuit,
    pub score: f64,
}

/// Scores `c` under every embedding and sorts by descending score; equal
/// scores keep enumeration order.
pub fn rank_layouts<F, E>(
    c: &Circuit,
    cm: &CouplingMap,
    mut scorer: F,
) -> Result<Vec<RankedLayout>, LayoutError>
where
    F: FnMut(&Circuit) -> Result<f64, E>,
    E: std::fmt::Display,
{
    let g = interaction_graph(c);
    if g.vertices.len() > cm.n_qubits() {
        return Err(LayoutError::TooManyQubits(
            g.vertices.len(),
            cm.name().to_string(),
            cm.n_qubits(),
        ));
    }
    let layouts = enumerate_layouts(&g, cm);
    if layouts.is_empty() {
        return Err(LayoutError::NoEmbedding(cm.name().to_string()));
    }
    let mut ranked = Vec::with_capacity(layouts.len());
    for layout in layouts {
        let circuit = remap(c, &layout, cm.n_qubits())?;
        let score = scorer(&circuit).map_err(|e| LayoutError::Scorer(e.to_string()))?;
        ranked.push(RankedLayout {
            layout,
            circuit,
            score,
        });
    }
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(ranked)
}
