//! Exhaustive generation and classification of the labeled graph families
//! behind the expansion coefficients.
//!
//! Families: connected graphs `C_n`, two-connected (cut-point free) graphs
//! `B_n`, the bipartite star classes `G*_{m,k}` / `C*_{m,k}` of big vertices
//! and clouds, the big-cut-point-free class `B*_{n,k}`, and white-vertex
//! articulation-free graphs. Enumeration is labeled and duplicate-free;
//! coefficients need labeled graphs with their multiplicities, so no
//! isomorphism reduction is performed anywhere.
//!
//! Internally a graph on `n <= 8` vertices is an edge bitmask over the
//! triangular pair index `(i, j) -> j(j-1)/2 + i`, which keeps the per-sample
//! integrand loops branch-free.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Hard cap of the mask representation.
pub const MAX_VERTICES: usize = 8;

/// Vertex colors: big sphere, small sphere or cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Color {
    Big,
    Small,
    Cloud,
}

/// Labeled graph with per-vertex colors and an optional white subset of the
/// small vertices (the ones linked to a big sphere).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoredGraph {
    pub n: usize,
    pub colors: Vec<Color>,
    pub white: BTreeSet<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl ColoredGraph {
    /// Uniformly small-colored graph from an edge list.
    pub fn small(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        ColoredGraph::new(n, vec![Color::Small; n], BTreeSet::new(), edges)
    }

    pub fn new(
        n: usize,
        colors: Vec<Color>,
        white: BTreeSet<usize>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::limit(format!("at most {MAX_VERTICES} vertices")));
        }
        if colors.len() != n {
            return Err(Error::invalid("one color per vertex required"));
        }
        let mut sorted: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::invalid("self-loops are not allowed"));
            }
            if a >= n || b >= n {
                return Err(Error::invalid("edge endpoint out of range"));
            }
            sorted.push((a.min(b), a.max(b)));
        }
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != edges.len() {
            return Err(Error::invalid("duplicate edges"));
        }
        for &w in &white {
            if w >= n || colors[w] != Color::Small {
                return Err(Error::invalid("white set must consist of small vertices"));
            }
        }
        Ok(ColoredGraph {
            n,
            colors,
            white,
            edges: sorted,
        })
    }

    pub fn edge_mask(&self) -> u32 {
        self.edges
            .iter()
            .fold(0u32, |m, &(a, b)| m | (1 << pair_index(a, b)))
    }

    /// Canonical text form: vertex count, color string, sorted edge list.
    /// Colors: `B` big, `s` small, `w` white small, `c` cloud.
    pub fn canonical_text(&self) -> String {
        let colors: String = (0..self.n)
            .map(|v| match self.colors[v] {
                Color::Big => 'B',
                Color::Cloud => 'c',
                Color::Small => {
                    if self.white.contains(&v) {
                        'w'
                    } else {
                        's'
                    }
                }
            })
            .collect();
        let edges = if self.edges.is_empty() {
            "-".to_string()
        } else {
            self.edges
                .iter()
                .map(|(a, b)| format!("{a}-{b}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("{} {} {}", self.n, colors, edges)
    }
}

/// Per-cloud adjacent big-vertex sets, recovering the hypergraph from the
/// bipartite leaf-constrained representation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperedges(pub Vec<BTreeSet<usize>>);

/// Triangular pair index for `i != j`, independent of the vertex count.
#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    j * (j - 1) / 2 + i
}

#[inline]
fn n_pairs(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Adjacency bitmasks per vertex for an edge mask.
#[inline]
fn adjacency(n: usize, mask: u32) -> [u32; MAX_VERTICES] {
    let mut adj = [0u32; MAX_VERTICES];
    for j in 1..n {
        for i in 0..j {
            if mask >> pair_index(i, j) & 1 == 1 {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    adj
}

/// Connectivity of the subgraph induced on `vertices` (a vertex bitmask).
fn connected_on(adj: &[u32; MAX_VERTICES], vertices: u32) -> bool {
    if vertices == 0 {
        return true;
    }
    let start = vertices.trailing_zeros() as usize;
    let mut seen = 1u32 << start;
    let mut frontier = seen;
    while frontier != 0 {
        let mut next = 0u32;
        let mut f = frontier;
        while f != 0 {
            let v = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= adj[v] & vertices & !seen;
        }
        seen |= next;
        frontier = next;
    }
    seen == vertices
}

fn full_vertex_mask(n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        (1u32 << n) - 1
    }
}

fn mask_connected(n: usize, mask: u32) -> bool {
    connected_on(&adjacency(n, mask), full_vertex_mask(n))
}

/// Cut vertices of a connected graph given as a mask, by removal.
fn mask_cut_vertices(n: usize, mask: u32) -> u32 {
    let adj = adjacency(n, mask);
    let all = full_vertex_mask(n);
    let mut cuts = 0u32;
    for v in 0..n {
        let rest = all & !(1 << v);
        if rest.count_ones() >= 2 && !connected_on(&adj, rest) {
            cuts |= 1 << v;
        }
    }
    cuts
}

/// Enumeration caps. Connected and two-connected classes stop at
/// `n_max` vertices, bipartite classes at `bipartite_max` total vertices;
/// the defaults mark the desk-scale frontier.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Enumerator {
    pub n_max: usize,
    pub bipartite_max: usize,
}

impl Default for Enumerator {
    fn default() -> Self {
        Enumerator {
            n_max: 7,
            bipartite_max: 8,
        }
    }
}

impl Enumerator {
    fn check_n(&self, n: usize, lower: usize) -> Result<()> {
        if n < lower {
            return Err(Error::invalid(format!("need at least {lower} vertices")));
        }
        if n > self.n_max || n > MAX_VERTICES {
            return Err(Error::limit(format!(
                "n = {n} exceeds the enumeration cap {}",
                self.n_max.min(MAX_VERTICES)
            )));
        }
        Ok(())
    }

    /// Visit every labeled connected graph on `[n]` as an edge mask.
    pub fn visit_connected(&self, n: usize, mut f: impl FnMut(u32)) -> Result<()> {
        self.check_n(n, 1)?;
        if n == 1 {
            f(0);
            return Ok(());
        }
        for mask in 0..(1u64 << n_pairs(n)) {
            let mask = mask as u32;
            if mask_connected(n, mask) {
                f(mask);
            }
        }
        Ok(())
    }

    /// Visit every labeled two-connected graph on `[n]`. For `n = 2` the
    /// single-edge graph is admitted so that the first irreducible
    /// coefficient equals the single-bond integral.
    pub fn visit_two_connected(&self, n: usize, mut f: impl FnMut(u32)) -> Result<()> {
        self.check_n(n, 2)?;
        if n == 2 {
            f(1);
            return Ok(());
        }
        for mask in 0..(1u64 << n_pairs(n)) {
            let mask = mask as u32;
            if mask_connected(n, mask) && mask_cut_vertices(n, mask) == 0 {
                f(mask);
            }
        }
        Ok(())
    }

    /// All labeled connected graphs on `[n]`, each exactly once.
    pub fn connected(&self, n: usize) -> Result<Vec<ColoredGraph>> {
        let mut out = Vec::new();
        self.visit_connected(n, |m| out.push(graph_from_mask(n, m)))?;
        Ok(out)
    }

    /// All labeled connected graphs on `[n]` in compact mask form.
    pub fn connected_masks(&self, n: usize) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        self.visit_connected(n, |m| out.push(m))?;
        Ok(out)
    }

    /// All labeled two-connected graphs on `[n]`.
    pub fn two_connected(&self, n: usize) -> Result<Vec<ColoredGraph>> {
        let mut out = Vec::new();
        self.visit_two_connected(n, |m| out.push(graph_from_mask(n, m)))?;
        Ok(out)
    }

    pub fn two_connected_masks(&self, n: usize) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        self.visit_two_connected(n, |m| out.push(m))?;
        Ok(out)
    }

    /// Connected graphs on `[n]` that are articulation-free with respect to
    /// the white set `{0, .., n_white - 1}`, in mask form.
    pub fn articulation_free_masks(&self, n: usize, n_white: usize) -> Result<Vec<u32>> {
        if n_white > n {
            return Err(Error::invalid("white set larger than the vertex set"));
        }
        let white = full_vertex_mask(n_white);
        let mut out = Vec::new();
        self.visit_connected(n, |m| {
            if mask_articulation_vertices(n, m, white) == 0 {
                out.push(m);
            }
        })?;
        Ok(out)
    }

    /// Visit the bipartite star class: graphs on `m` big vertices
    /// (`0..m`) and `k` clouds (`m..m+k`) with no cloud-cloud edges and
    /// every cloud adjacent to at least two distinct big vertices.
    /// With `connected_only`, intersect with connectivity.
    pub fn visit_bipartite_star(
        &self,
        m: usize,
        k: usize,
        connected_only: bool,
        mut f: impl FnMut(u32, &[u32]),
    ) -> Result<()> {
        let n = m + k;
        if n == 0 {
            return Err(Error::invalid("need at least one vertex"));
        }
        if n > self.bipartite_max || n > MAX_VERTICES {
            return Err(Error::limit(format!(
                "m + k = {n} exceeds the bipartite cap {}",
                self.bipartite_max.min(MAX_VERTICES)
            )));
        }
        // A cloud needs two distinct big neighbors, so k > 0 requires m >= 2.
        if k > 0 && m < 2 {
            return Ok(());
        }
        // Candidate neighbor sets per cloud: big subsets of size >= 2.
        let mut cloud_choices: Vec<u32> = Vec::new();
        for s in 0..(1u32 << m) {
            if s.count_ones() >= 2 {
                cloud_choices.push(s);
            }
        }
        let bigbig_count = 1u64 << n_pairs(m);
        let mut cloud_sets = vec![0u32; k];
        loop_cloud_assignments(&cloud_choices, &mut cloud_sets, 0, &mut |sets| {
            for bb in 0..bigbig_count {
                let mut mask = 0u32;
                for j in 1..m {
                    for i in 0..j {
                        if bb >> pair_index(i, j) & 1 == 1 {
                            mask |= 1 << pair_index(i, j);
                        }
                    }
                }
                for (c, &set) in sets.iter().enumerate() {
                    let cloud = m + c;
                    let mut s = set;
                    while s != 0 {
                        let b = s.trailing_zeros() as usize;
                        s &= s - 1;
                        mask |= 1 << pair_index(b, cloud);
                    }
                }
                if !connected_only || mask_connected(n, mask) {
                    f(mask, sets);
                }
            }
        });
        Ok(())
    }

    /// The bipartite star class as colored graphs.
    pub fn bipartite_star(
        &self,
        m: usize,
        k: usize,
        connected_only: bool,
    ) -> Result<Vec<ColoredGraph>> {
        let mut out = Vec::new();
        self.visit_bipartite_star(m, k, connected_only, |mask, _| {
            out.push(bipartite_graph_from_mask(m, k, mask));
        })?;
        Ok(out)
    }

    /// The class with `n` big vertices and `k` clouds, connected, such that
    /// no big vertex is a cut-point; hyperedges extracted per cloud.
    pub fn big_two_connected(&self, n: usize, k: usize) -> Result<Vec<(ColoredGraph, Hyperedges)>> {
        if n < 1 || (n < 2 && k == 0) {
            return Err(Error::invalid("need n >= 2, or n >= 1 with k >= 1"));
        }
        let big_mask = full_vertex_mask(n);
        let mut out = Vec::new();
        self.visit_bipartite_star(n, k, true, |mask, sets| {
            if mask_cut_vertices(n + k, mask) & big_mask == 0 {
                let hyper = Hyperedges(
                    sets.iter()
                        .map(|&s| {
                            let mut set = BTreeSet::new();
                            let mut bits = s;
                            while bits != 0 {
                                set.insert(bits.trailing_zeros() as usize);
                                bits &= bits - 1;
                            }
                            set
                        })
                        .collect(),
                );
                out.push((bipartite_graph_from_mask(n, k, mask), hyper));
            }
        })?;
        Ok(out)
    }
}

fn loop_cloud_assignments(
    choices: &[u32],
    sets: &mut Vec<u32>,
    depth: usize,
    f: &mut impl FnMut(&[u32]),
) {
    if depth == sets.len() {
        f(sets);
        return;
    }
    for &c in choices {
        sets[depth] = c;
        loop_cloud_assignments(choices, sets, depth + 1, f);
    }
}

fn graph_from_mask(n: usize, mask: u32) -> ColoredGraph {
    let mut edges = Vec::new();
    for j in 1..n {
        for i in 0..j {
            if mask >> pair_index(i, j) & 1 == 1 {
                edges.push((i, j));
            }
        }
    }
    ColoredGraph::small(n, &edges).expect("mask produces a valid graph")
}

fn bipartite_graph_from_mask(m: usize, k: usize, mask: u32) -> ColoredGraph {
    let n = m + k;
    let mut g = graph_from_mask(n, mask);
    g.colors = (0..n)
        .map(|v| if v < m { Color::Big } else { Color::Cloud })
        .collect();
    g
}

/// Exact set of cut vertices of a connected graph, by removal.
pub fn cut_points(g: &ColoredGraph) -> Result<BTreeSet<usize>> {
    let mask = g.edge_mask();
    if !mask_connected(g.n, mask) {
        return Err(Error::invalid("cut points are defined on connected graphs"));
    }
    let cuts = mask_cut_vertices(g.n, mask);
    Ok(bits_to_set(cuts))
}

/// Articulation vertices with respect to a white set: vertices whose removal
/// separates the graph into pieces at least one of which contains no white
/// vertex. With an empty white set this coincides with the cut points.
pub fn articulation_vertices(g: &ColoredGraph, white: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    let mask = g.edge_mask();
    if !mask_connected(g.n, mask) {
        return Err(Error::invalid(
            "articulation vertices are defined on connected graphs",
        ));
    }
    let white_mask = white.iter().fold(0u32, |m, &v| {
        debug_assert!(v < g.n);
        m | (1 << v)
    });
    Ok(bits_to_set(mask_articulation_vertices(
        g.n, mask, white_mask,
    )))
}

fn mask_articulation_vertices(n: usize, mask: u32, white: u32) -> u32 {
    let adj = adjacency(n, mask);
    let all = full_vertex_mask(n);
    let mut arts = 0u32;
    for v in 0..n {
        let rest = all & !(1 << v);
        if rest == 0 {
            continue;
        }
        // Component decomposition of the graph minus v.
        let mut remaining = rest;
        let mut pieces = 0;
        let mut white_free_piece = false;
        while remaining != 0 {
            let start = remaining.trailing_zeros() as usize;
            let mut comp = 1u32 << start;
            let mut frontier = comp;
            while frontier != 0 {
                let mut next = 0u32;
                let mut fr = frontier;
                while fr != 0 {
                    let u = fr.trailing_zeros() as usize;
                    fr &= fr - 1;
                    next |= adj[u] & rest & !comp;
                }
                comp |= next;
                frontier = next;
            }
            remaining &= !comp;
            pieces += 1;
            if comp & white == 0 {
                white_free_piece = true;
            }
        }
        if pieces >= 2 && white_free_piece {
            arts |= 1 << v;
        }
    }
    arts
}

fn bits_to_set(bits: u32) -> BTreeSet<usize> {
    let mut s = BTreeSet::new();
    let mut b = bits;
    while b != 0 {
        s.insert(b.trailing_zeros() as usize);
        b &= b - 1;
    }
    s
}

/// All labeled trees on `[n]` as edge masks, generated from Prufer
/// sequences (`n^{n-2}` of them).
pub fn tree_masks(n: usize) -> Result<Vec<u32>> {
    if !(1..=MAX_VERTICES).contains(&n) {
        return Err(Error::limit("trees supported for 1 <= n <= 8"));
    }
    if n == 1 {
        return Ok(vec![0]);
    }
    if n == 2 {
        return Ok(vec![1]);
    }
    let count = (n as u64).pow(n as u32 - 2);
    let mut out = Vec::with_capacity(count as usize);
    let mut prufer = vec![0usize; n - 2];
    for code in 0..count {
        let mut c = code;
        for p in prufer.iter_mut() {
            *p = (c % n as u64) as usize;
            c /= n as u64;
        }
        out.push(tree_from_prufer(n, &prufer));
    }
    Ok(out)
}

fn tree_from_prufer(n: usize, prufer: &[usize]) -> u32 {
    let mut degree = vec![1u32; n];
    for &p in prufer {
        degree[p] += 1;
    }
    let mut mask = 0u32;
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    for &p in prufer {
        let leaf = *leaves.iter().next().unwrap();
        leaves.remove(&leaf);
        mask |= 1 << pair_index(leaf, p);
        degree[p] -= 1;
        if degree[p] == 1 {
            leaves.insert(p);
        }
    }
    let mut it = leaves.iter();
    let a = *it.next().unwrap();
    let b = *it.next().unwrap();
    mask | (1 << pair_index(a, b))
}
