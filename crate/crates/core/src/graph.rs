//! Small undirected graphs: reference constructions and isomorphism tests.

use petgraph::graph::UnGraph;
use std::collections::BTreeSet;

/// A simple undirected graph on `0..n` with string node names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub names: Vec<String>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(names: Vec<String>) -> Self {
        Graph { names, edges: BTreeSet::new() }
    }

    pub fn unnamed(n: usize) -> Self {
        Graph::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a != b, "loops are not allowed");
        let e = if a < b { (a, b) } else { (b, a) };
        self.edges.insert(e);
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let e = if a < b { (a, b) } else { (b, a) };
        self.edges.contains(&e)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|(a, b)| *a == v || *b == v).count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    /// `Some(k)` when every vertex has degree `k`.
    pub fn regular_degree(&self) -> Option<usize> {
        let degs: Vec<usize> = (0..self.n()).map(|v| self.degree(v)).collect();
        let first = *degs.first()?;
        degs.iter().all(|&d| d == first).then_some(first)
    }

    /// Strongly regular parameters `(n, k, λ, μ)` if the graph is strongly regular.
    pub fn srg_parameters(&self) -> Option<(usize, usize, usize, usize)> {
        let k = self.regular_degree()?;
        let n = self.n();
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|a| (0..n).map(|b| a != b && self.has_edge(a, b)).collect())
            .collect();
        let mut lambda = None;
        let mut mu = None;
        for a in 0..n {
            for b in a + 1..n {
                let common = (0..n).filter(|&c| adj[a][c] && adj[b][c]).count();
                let slot = if adj[a][b] { &mut lambda } else { &mut mu };
                match slot {
                    None => *slot = Some(common),
                    Some(x) if *x != common => return None,
                    _ => {}
                }
            }
        }
        Some((n, k, lambda.unwrap_or(0), mu.unwrap_or(0)))
    }

    fn to_petgraph(&self) -> UnGraph<(), ()> {
        let mut g = UnGraph::<(), ()>::with_capacity(self.n(), self.edges.len());
        let nodes: Vec<_> = (0..self.n()).map(|_| g.add_node(())).collect();
        for &(a, b) in &self.edges {
            g.add_edge(nodes[a], nodes[b], ());
        }
        g
    }

    pub fn is_isomorphic(&self, other: &Graph) -> bool {
        if self.n() != other.n() || self.edges.len() != other.edges.len() {
            return false;
        }
        let mut da: Vec<usize> = (0..self.n()).map(|v| self.degree(v)).collect();
        let mut db: Vec<usize> = (0..other.n()).map(|v| other.degree(v)).collect();
        da.sort_unstable();
        db.sort_unstable();
        if da != db {
            return false;
        }
        petgraph::algo::is_isomorphic(&self.to_petgraph(), &other.to_petgraph())
    }

    /// DOT rendering with node names as labels.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("graph {name} {{\n");
        for (i, nm) in self.names.iter().enumerate() {
            s.push_str(&format!("  n{i} [label=\"{nm}\"];\n"));
        }
        for &(a, b) in &self.edges {
            s.push_str(&format!("  n{a} -- n{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// Kneser graph K(5,2).
pub fn petersen() -> Graph {
    let pairs: Vec<(usize, usize)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
    let mut g = Graph::new(pairs.iter().map(|(a, b)| format!("{}{}", a + 1, b + 1)).collect());
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let (a, b) = pairs[i];
            let (c, d) = pairs[j];
            if a != c && a != d && b != c && b != d {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Folded 5-cube: `Z_2^4` with unit vectors and the all-ones vector as connection set.
pub fn clebsch() -> Graph {
    let mut g = Graph::unnamed(16);
    for a in 0..16usize {
        for b in a + 1..16 {
            let x = a ^ b;
            if x.count_ones() == 1 || x == 15 {
                g.add_edge(a, b);
            }
        }
    }
    g
}

/// Complete bipartite graph `K_{3,3}`.
pub fn k33() -> Graph {
    let mut g = Graph::unnamed(6);
    for a in 0..3 {
        for b in 3..6 {
            g.add_edge(a, b);
        }
    }
    g
}

/// Schläfli graph in double-six notation: vertices `a_i`, `b_i` (i = 1..6) and `c_ij`;
/// `a_i ~ b_j` for `i ≠ j`, `a_i ~ c_ij`, `b_i ~ c_ij`, and `c_ij ~ c_kl` for disjoint pairs.
pub fn schlafli() -> Graph {
    let mut names: Vec<String> = (1..=6).map(|i| format!("a{i}")).collect();
    names.extend((1..=6).map(|i| format!("b{i}")));
    let mut pairs = Vec::new();
    for i in 1..=6 {
        for j in i + 1..=6 {
            pairs.push((i, j));
            names.push(format!("c{i}{j}"));
        }
    }
    let mut g = Graph::new(names);
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                g.add_edge(i, 6 + j);
            }
        }
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        g.add_edge(i - 1, 12 + k);
        g.add_edge(j - 1, 12 + k);
        g.add_edge(6 + i - 1, 12 + k);
        g.add_edge(6 + j - 1, 12 + k);
        for (l, &(a, b)) in pairs.iter().enumerate().skip(k + 1) {
            if a != i && a != j && b != i && b != j {
                g.add_edge(12 + k, 12 + l);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_graphs_are_strongly_regular() {
        assert_eq!(petersen().srg_parameters(), Some((10, 3, 0, 1)));
        assert_eq!(clebsch().srg_parameters(), Some((16, 5, 0, 2)));
        assert_eq!(schlafli().srg_parameters(), Some((27, 10, 1, 5)));
        assert_eq!(k33().regular_degree(), Some(3));
    }

    #[test]
    fn isomorphism_distinguishes() {
        assert!(petersen().is_isomorphic(&petersen()));
        let mut c6 = Graph::unnamed(6);
        for i in 0..6 {
            c6.add_edge(i, (i + 1) % 6);
        }
        assert!(!c6.is_isomorphic(&k33()));
    }
}
