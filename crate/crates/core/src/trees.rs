//! Metric trees with labeled leaves: comparison, restriction, quotients by leaf
//! involutions, relabeling between lines, and arrangement classification.

use num_traits::{One, Signed, Zero};
use serde_json::json;
use std::collections::{BTreeMap, BTreeSet};

use crate::num::{fmt_q, parse_q, q, Q};
use crate::rootsys::LineLabel;
use crate::{Error, Result};

/// A tree whose leaves carry line labels. Leaf edges have no length; internal edges carry
/// positive rational lengths.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetricTree {
    pub label: Vec<Option<LineLabel>>,
    pub edges: Vec<(usize, usize, Option<Q>)>,
}

impl MetricTree {
    pub fn add_leaf(&mut self, l: LineLabel) -> usize {
        self.label.push(Some(l));
        self.label.len() - 1
    }

    pub fn add_internal(&mut self) -> usize {
        self.label.push(None);
        self.label.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize, len: Option<Q>) {
        self.edges.push((a, b, len));
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.label[v].is_some()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|(a, b, _)| *a == v || *b == v).count()
    }

    fn adjacency(&self) -> Vec<Vec<(usize, Q)>> {
        let mut adj = vec![Vec::new(); self.label.len()];
        for (a, b, l) in &self.edges {
            let l = l.clone().unwrap_or_else(Q::zero);
            adj[*a].push((*b, l.clone()));
            adj[*b].push((*a, l));
        }
        adj
    }

    /// Leaf labels in sorted order.
    pub fn leaves(&self) -> Vec<LineLabel> {
        let mut v: Vec<LineLabel> = self.label.iter().flatten().copied().collect();
        v.sort();
        v
    }

    pub fn leaf_node(&self, l: LineLabel) -> Option<usize> {
        self.label.iter().position(|x| *x == Some(l))
    }

    pub fn internal_nodes(&self) -> Vec<usize> {
        (0..self.label.len()).filter(|&v| !self.is_leaf(v) && self.degree(v) > 0).collect()
    }

    pub fn internal_degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.internal_nodes().iter().map(|&v| self.degree(v)).collect();
        d.sort_unstable();
        d
    }

    pub fn max_internal_degree(&self) -> usize {
        self.internal_degrees().last().copied().unwrap_or(0)
    }

    pub fn is_trivalent(&self) -> bool {
        self.internal_degrees().iter().all(|&d| d == 3)
    }

    /// Lengths of the internal edges, sorted.
    pub fn internal_lengths(&self) -> Vec<Q> {
        let mut v: Vec<Q> = self
            .edges
            .iter()
            .filter(|(a, b, _)| !self.is_leaf(*a) && !self.is_leaf(*b))
            .map(|(_, _, l)| l.clone().unwrap_or_else(Q::zero))
            .collect();
        v.sort();
        v
    }

    /// Removes internal vertices of degree two and contracts internal edges of length zero.
    pub fn suppress_degree_two(&mut self) {
        loop {
            let zero = self.edges.iter().position(|(a, b, l)| {
                !self.is_leaf(*a) && !self.is_leaf(*b) && l.as_ref().map_or(true, |x| x.is_zero())
            });
            if let Some(k) = zero {
                let (a, b, _) = self.edges.remove(k);
                for e in self.edges.iter_mut() {
                    if e.0 == b {
                        e.0 = a;
                    }
                    if e.1 == b {
                        e.1 = a;
                    }
                }
                continue;
            }
            let Some(v) = (0..self.label.len()).find(|&v| !self.is_leaf(v) && self.degree(v) == 2) else {
                break;
            };
            let inc: Vec<usize> = (0..self.edges.len())
                .filter(|&k| self.edges[k].0 == v || self.edges[k].1 == v)
                .collect();
            let (e1, e2) = (self.edges[inc[0]].clone(), self.edges[inc[1]].clone());
            let o1 = if e1.0 == v { e1.1 } else { e1.0 };
            let o2 = if e2.0 == v { e2.1 } else { e2.0 };
            let len = if self.is_leaf(o1) || self.is_leaf(o2) {
                None
            } else {
                Some(e1.2.clone().unwrap_or_else(Q::zero) + e2.2.clone().unwrap_or_else(Q::zero))
            };
            self.edges.remove(inc[1]);
            self.edges.remove(inc[0]);
            self.edges.push((o1, o2, len));
        }
        self.compact();
    }

    fn compact(&mut self) {
        let used: BTreeSet<usize> = self.edges.iter().flat_map(|(a, b, _)| [*a, *b]).collect();
        let keep: Vec<usize> = (0..self.label.len()).filter(|v| used.contains(v) || self.is_leaf(*v)).collect();
        let map: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        self.label = keep.iter().map(|&v| self.label[v]).collect();
        for e in self.edges.iter_mut() {
            e.0 = map[&e.0];
            e.1 = map[&e.1];
        }
    }

    /// Distances from one node, with leaf edges of length `leaf`.
    fn dist_from(&self, adj: &[Vec<(usize, Q)>], s: usize, leaf: &Q) -> Vec<Option<Q>> {
        let mut d: Vec<Option<Q>> = vec![None; self.label.len()];
        d[s] = Some(Q::zero());
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for (w, l) in &adj[v] {
                if d[*w].is_none() {
                    let step = if self.is_leaf(v) || self.is_leaf(*w) { leaf.clone() } else { l.clone() };
                    d[*w] = Some(d[v].clone().unwrap() + step);
                    stack.push(*w);
                }
            }
        }
        d
    }

    /// Distances between leaves along internal edges only.
    pub fn leaf_distances(&self) -> BTreeMap<(LineLabel, LineLabel), Q> {
        let adj = self.adjacency();
        let mut out = BTreeMap::new();
        let zero = Q::zero();
        for (v, l) in self.label.iter().enumerate() {
            let Some(a) = l else { continue };
            let d = self.dist_from(&adj, v, &zero);
            for (w, m) in self.label.iter().enumerate() {
                if let (Some(b), Some(x)) = (m, &d[w]) {
                    if a != b {
                        out.insert((*a, *b), x.clone());
                    }
                }
            }
        }
        out
    }

    /// Label-preserving metric equality.
    pub fn same_metric_tree(&self, other: &MetricTree) -> bool {
        self.leaves() == other.leaves() && self.leaf_distances() == other.leaf_distances()
    }

    /// Splits of the internal edges, each given by the side avoiding the smallest leaf.
    pub fn splits(&self) -> BTreeSet<(BTreeSet<LineLabel>, Q)> {
        let leaves = self.leaves();
        let adj = self.adjacency();
        let mut out = BTreeSet::new();
        for (a, b, l) in &self.edges {
            if self.is_leaf(*a) || self.is_leaf(*b) {
                continue;
            }
            // leaves on b's side
            let mut side = BTreeSet::new();
            let mut seen = vec![false; self.label.len()];
            seen[*a] = true;
            seen[*b] = true;
            let mut stack = vec![*b];
            while let Some(v) = stack.pop() {
                if let Some(x) = self.label[v] {
                    side.insert(x);
                }
                for (w, _) in &adj[v] {
                    if !seen[*w] {
                        seen[*w] = true;
                        stack.push(*w);
                    }
                }
            }
            if side.contains(&leaves[0]) {
                side = leaves.iter().copied().filter(|x| !side.contains(x)).collect();
            }
            out.insert((side, l.clone().unwrap_or_else(Q::zero)));
        }
        out
    }

    /// Combinatorial type up to relabeling, as a canonical unlabeled Newick string.
    pub fn shape(&self) -> String {
        let centre = self.internal_nodes().into_iter().map(|c| self.canonical_string(c, None, true)).min();
        centre.unwrap_or_else(|| "()".into())
    }

    fn canonical_string(&self, v: usize, parent: Option<usize>, anonymous: bool) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (a, b, l) in &self.edges {
            let w = if *a == v {
                *b
            } else if *b == v {
                *a
            } else {
                continue;
            };
            if Some(w) == parent {
                continue;
            }
            if let Some(x) = self.label[w] {
                parts.push(if anonymous { "*".into() } else { x.to_string() });
            } else {
                let inner = self.canonical_string(w, Some(v), anonymous);
                let len = l.clone().unwrap_or_else(Q::zero);
                parts.push(if anonymous { inner } else { format!("{inner}:{}", fmt_q(&len)) });
            }
        }
        parts.sort();
        format!("({})", parts.join(","))
    }

    /// Canonical Newick form rooted at the vertex carrying the smallest leaf.
    pub fn to_newick(&self) -> String {
        let leaves = self.leaves();
        let Some(first) = leaves.first() else { return "();".into() };
        let lv = self.leaf_node(*first).unwrap();
        let root = self
            .edges
            .iter()
            .find_map(|(a, b, _)| if *a == lv { Some(*b) } else if *b == lv { Some(*a) } else { None });
        match root {
            Some(r) if !self.is_leaf(r) => format!("{};", self.canonical_string(r, None, false)),
            _ => format!("({});", leaves.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")),
        }
    }

    pub fn from_newick(s: &str) -> Result<MetricTree> {
        let s = s.trim().trim_end_matches(';');
        let mut t = MetricTree::default();
        let root = t.add_internal();
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        if chars.first() != Some(&'(') {
            return Err(Error::Parse("newick string must start with '('".into()));
        }
        parse_children(&chars, &mut pos, &mut t, root)?;
        if pos != chars.len() {
            return Err(Error::Parse(format!("trailing characters in newick string {s:?}")));
        }
        t.suppress_degree_two();
        Ok(t)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let splits: Vec<serde_json::Value> = self
            .splits()
            .into_iter()
            .map(|(side, l)| json!({"side": side.iter().map(|x| x.to_string()).collect::<Vec<_>>(), "length": fmt_q(&l)}))
            .collect();
        json!({
            "leaves": self.leaves().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "newick": self.to_newick(),
            "splits": splits,
        })
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("graph {name} {{\n");
        for (v, l) in self.label.iter().enumerate() {
            match l {
                Some(x) => s.push_str(&format!("  n{v} [label=\"{x}\"];\n")),
                None => s.push_str(&format!("  n{v} [shape=point];\n")),
            }
        }
        for (a, b, l) in &self.edges {
            match l {
                Some(x) => s.push_str(&format!("  n{a} -- n{b} [label=\"{}\"];\n", fmt_q(x))),
                None => s.push_str(&format!("  n{a} -- n{b};\n")),
            }
        }
        s.push_str("}\n");
        s
    }

    /// Applies a relabeling of the leaves.
    pub fn relabel(&self, f: impl Fn(LineLabel) -> LineLabel) -> MetricTree {
        let mut t = self.clone();
        for l in t.label.iter_mut().flatten() {
            *l = f(*l);
        }
        t
    }

    /// Rebuilds a tree from its leaf distances.
    pub fn from_distances(labels: &[LineLabel], d: &BTreeMap<(LineLabel, LineLabel), Q>) -> Result<MetricTree> {
        let get = |a: LineLabel, b: LineLabel| -> Result<Q> {
            if a == b {
                return Ok(Q::zero());
            }
            d.get(&(a, b))
                .or_else(|| d.get(&(b, a)))
                .cloned()
                .ok_or_else(|| Error::Lookup(format!("missing distance {a}-{b}")))
        };
        // leaf edges of length one turn leaf distances into a proper tree metric
        let big = |a: LineLabel, b: LineLabel| -> Result<Q> { Ok(get(a, b)? + if a == b { q(0) } else { q(2) }) };
        let mut t = MetricTree::default();
        if labels.len() < 2 {
            for l in labels {
                t.add_leaf(*l);
            }
            return Ok(t);
        }
        // explicit lengths for every edge during construction
        let mut len: Vec<(usize, usize, Q)> = Vec::new();
        let a0 = t.add_leaf(labels[0]);
        let b0 = t.add_leaf(labels[1]);
        len.push((a0, b0, big(labels[0], labels[1])?));
        for &k in &labels[2..] {
            let mut best: Option<(Q, LineLabel)> = None;
            for &b in labels.iter().take_while(|&&x| x != k).skip(1) {
                let x = (big(labels[0], k)? + big(labels[0], b)? - big(b, k)?) / q(2);
                if best.as_ref().map_or(true, |(y, _)| x > *y) {
                    best = Some((x, b));
                }
            }
            let (x, b) = best.unwrap();
            let pendant = big(labels[0], k)? - &x;
            if !pendant.is_positive() {
                return Err(Error::Domain("leaf distances do not form a tree metric".into()));
            }
            let from = t.leaf_node(labels[0]).unwrap();
            let to = t.leaf_node(b).unwrap();
            let path = path_nodes(&len, t.label.len(), from, to);
            let mut acc = Q::zero();
            let mut attach = None;
            for w in path.windows(2) {
                let k_e = len
                    .iter()
                    .position(|(p, r, _)| (*p == w[0] && *r == w[1]) || (*p == w[1] && *r == w[0]))
                    .unwrap();
                let l = len[k_e].2.clone();
                if acc == x {
                    attach = Some(w[0]);
                    break;
                }
                if acc.clone() + &l > x {
                    let mid = t.add_internal();
                    let first = x.clone() - &acc;
                    let rest = l - &first;
                    len.remove(k_e);
                    len.push((w[0], mid, first));
                    len.push((mid, w[1], rest));
                    attach = Some(mid);
                    break;
                }
                acc += l;
            }
            let attach = attach.ok_or_else(|| Error::Domain("leaf distances do not form a tree metric".into()))?;
            let leaf = t.add_leaf(k);
            len.push((attach, leaf, pendant));
        }
        for (a, b, l) in len {
            if t.is_leaf(a) || t.is_leaf(b) {
                if l != q(1) {
                    return Err(Error::Domain("leaf distances do not form a tree metric".into()));
                }
                t.add_edge(a, b, None);
            } else {
                t.add_edge(a, b, Some(l));
            }
        }
        t.suppress_degree_two();
        for (&(a, b), x) in d {
            if a != b && t.leaf_distances().get(&(a, b)) != Some(x) {
                return Err(Error::Domain("leaf distances do not form a tree metric".into()));
            }
        }
        Ok(t)
    }

    /// Induced subtree on a subset of leaves, with degree-two vertices suppressed.
    pub fn restrict(&self, keep: &[LineLabel]) -> Result<MetricTree> {
        for k in keep {
            if self.leaf_node(*k).is_none() {
                return Err(Error::Lookup(format!("{k} is not a leaf")));
            }
        }
        let mut t = self.clone();
        loop {
            let drop = (0..t.label.len()).find(|&v| {
                let deg = t.degree(v);
                match t.label[v] {
                    Some(l) => deg > 0 && !keep.contains(&l),
                    None => deg == 1,
                }
            });
            let Some(v) = drop else { break };
            t.edges.retain(|(a, b, _)| *a != v && *b != v);
            if t.label[v].is_some() {
                t.label[v] = None;
            }
        }
        // a former internal vertex may now sit at the end of an internal edge: make it a leaf edge
        t.suppress_degree_two();
        t.compact();
        Ok(t)
    }

    /// Images of internal vertices under the leaf permutation `sigma`, if it extends to a
    /// metric automorphism.
    fn extend_automorphism(&self, sigma: &BTreeMap<LineLabel, LineLabel>) -> Option<Vec<usize>> {
        let adj = self.adjacency();
        let one = Q::one();
        let dists: Vec<Vec<Option<Q>>> = (0..self.label.len()).map(|v| self.dist_from(&adj, v, &one)).collect();
        let leaf_nodes: Vec<usize> = (0..self.label.len()).filter(|&v| self.is_leaf(v)).collect();
        let mut img = vec![usize::MAX; self.label.len()];
        for &v in &leaf_nodes {
            let l = self.label[v].unwrap();
            img[v] = self.leaf_node(*sigma.get(&l)?)?;
        }
        for v in 0..self.label.len() {
            if self.is_leaf(v) {
                continue;
            }
            let w = (0..self.label.len()).find(|&w| {
                !self.is_leaf(w) && leaf_nodes.iter().all(|&x| dists[w][img[x]] == dists[v][x])
            })?;
            img[v] = w;
        }
        Some(img)
    }
}

fn parse_children(chars: &[char], pos: &mut usize, t: &mut MetricTree, node: usize) -> Result<()> {
    let err = |m: &str| Error::Parse(format!("bad newick: {m}"));
    if chars.get(*pos) != Some(&'(') {
        return Err(err("expected '('"));
    }
    *pos += 1;
    loop {
        if chars.get(*pos) == Some(&'(') {
            let child = t.add_internal();
            parse_children(chars, pos, t, child)?;
            let mut len = None;
            if chars.get(*pos) == Some(&':') {
                *pos += 1;
                let start = *pos;
                while *pos < chars.len() && !matches!(chars[*pos], ',' | ')') {
                    *pos += 1;
                }
                len = Some(parse_q(&chars[start..*pos].iter().collect::<String>())?);
            }
            t.add_edge(node, child, Some(len.unwrap_or_else(Q::zero)));
        } else {
            let start = *pos;
            while *pos < chars.len() && !matches!(chars[*pos], ',' | ')' | '(') {
                *pos += 1;
            }
            let name: String = chars[start..*pos].iter().collect();
            let leaf = t.add_leaf(LineLabel::parse(&name)?);
            t.add_edge(node, leaf, None);
        }
        match chars.get(*pos) {
            Some(',') => *pos += 1,
            Some(')') => {
                *pos += 1;
                return Ok(());
            }
            _ => return Err(err("unbalanced parentheses")),
        }
    }
}

fn path_nodes(len: &[(usize, usize, Q)], n: usize, from: usize, to: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        for (a, b, _) in len {
            let w = if *a == v {
                *b
            } else if *b == v {
                *a
            } else {
                continue;
            };
            if !seen[w] {
                seen[w] = true;
                prev[w] = v;
                stack.push(w);
            }
        }
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

/// Builds a caterpillar: groups of leaves attached along a path with the given lengths.
pub fn caterpillar(groups: &[Vec<LineLabel>], lengths: &[Q]) -> Result<MetricTree> {
    if groups.len() != lengths.len() + 1 || groups.len() < 2 {
        return Err(Error::Domain("a caterpillar needs one length fewer than groups".into()));
    }
    let mut t = MetricTree::default();
    let spine: Vec<usize> = groups.iter().map(|_| t.add_internal()).collect();
    for (i, g) in groups.iter().enumerate() {
        for l in g {
            let leaf = t.add_leaf(*l);
            t.add_edge(spine[i], leaf, None);
        }
        if i > 0 {
            t.add_edge(spine[i - 1], spine[i], Some(lengths[i - 1].clone()));
        }
    }
    t.suppress_degree_two();
    Ok(t)
}

/// Checks that the involution of the ten lines meeting `l` extends to a metric
/// automorphism of the tree.
pub fn involution_check(t: &MetricTree, l: LineLabel) -> Result<bool> {
    let sigma = crate::coxideal::line_involution(l)?;
    Ok(t.extend_automorphism(&sigma).is_some())
}

/// Quotient of a ten-leaf tree by the involution of `l`, with the Riemann–Hurwitz
/// inequality checked at every fixed vertex. Leaves of the quotient are named by the
/// smaller label of each pair.
pub fn quotient_5leaf(t: &MetricTree, l: LineLabel) -> Result<(MetricTree, bool)> {
    let sigma = crate::coxideal::line_involution(l)?;
    let img = t
        .extend_automorphism(&sigma)
        .ok_or_else(|| Error::NonGeneric(format!("involution of {l} is not a tree automorphism")))?;
    // orbit graph: one node per node orbit, one edge per edge orbit; the cover is ramified
    // along edges fixed pointwise, whose images are twice as long
    let mut quot = MetricTree::default();
    let mut node: BTreeMap<usize, usize> = BTreeMap::new();
    for v in 0..t.label.len() {
        let rep = v.min(img[v]);
        if !node.contains_key(&rep) {
            let id = match t.label[rep] {
                Some(x) => quot.add_leaf(x.min(sigma[&x])),
                None => quot.add_internal(),
            };
            node.insert(rep, id);
        }
    }
    let mut seen = BTreeSet::new();
    for (a, b, len) in &t.edges {
        let (ra, rb) = (a.min(&img[*a]), b.min(&img[*b]));
        // a flipped edge folds onto a dangling half-edge, which is pruned
        if ra != rb && seen.insert((ra.min(rb), ra.max(rb))) {
            let fixed = img[*a] == *a && img[*b] == *b;
            let len = len.clone().map(|x| if fixed { x * q(2) } else { x });
            quot.add_edge(node[ra], node[rb], len);
        }
    }
    while let Some(v) = (0..quot.label.len()).find(|&v| !quot.is_leaf(v) && quot.degree(v) == 1) {
        quot.edges.retain(|(a, b, _)| *a != v && *b != v);
    }
    quot.suppress_degree_two();
    // Riemann-Hurwitz at fixed vertices: deg(v) - 2 (deg h(v) - 2) - 2 >= 0
    let mut rh = true;
    for v in t.internal_nodes() {
        if img[v] != v {
            continue;
        }
        let mut orbits = BTreeSet::new();
        for (a, b, _) in &t.edges {
            if *a == v || *b == v {
                let w = if *a == v { *b } else { *a };
                orbits.insert(w.min(img[w]));
            }
        }
        let dv = t.degree(v) as i64;
        let dh = orbits.len() as i64;
        if dv - 2 * (dh - 2) - 2 < 0 {
            rh = false;
        }
    }
    Ok((quot, rh))
}

/// For disjoint lines `l` and `l2` with trees `t` and `t2`: the quotient of `t` by the
/// involution of `l`, its leaves renamed into the five common labels, against the subtree
/// of `t2` spanned by those labels. Returns whether they agree as metric trees.
pub fn restriction_identity(t: &MetricTree, l: LineLabel, t2: &MetricTree, l2: LineLabel) -> Result<bool> {
    let sigma = crate::coxideal::line_involution(l)?;
    let own: BTreeSet<LineLabel> = t.leaves().into_iter().collect();
    let common: Vec<LineLabel> = t2.leaves().into_iter().filter(|x| own.contains(x)).collect();
    if common.len() != 5 {
        return Err(Error::Labeling(format!("{l} and {l2} share {} leaves, not 5", common.len())));
    }
    let (quot, _) = quotient_5leaf(t, l)?;
    let rename = |x: LineLabel| if common.contains(&x) { x } else { sigma[&x] };
    if quot.leaves().iter().any(|x| !common.contains(&rename(*x))) {
        return Err(Error::Labeling(format!("an involution pair of {l} misses the common leaves")));
    }
    Ok(quot.relabel(rename).same_metric_tree(&t2.restrict(&common)?))
}

/// Relabels the degree-4 tree of `G` into the tree of another line.
pub fn relabel_d4(t: &MetricTree, target: LineLabel) -> Result<MetricTree> {
    let map: BTreeMap<LineLabel, LineLabel> = match target {
        LineLabel::G(0) => return Ok(t.clone()),
        LineLabel::F(i, j) => {
            let rest: Vec<u8> = (1..=5).filter(|&k| k != i && k != j).collect();
            let (k, l, m) = (rest[0], rest[1], rest[2]);
            BTreeMap::from([
                (LineLabel::E(i), LineLabel::E(j)),
                (LineLabel::E(j), LineLabel::E(i)),
                (LineLabel::E(k), LineLabel::f(l, m)),
                (LineLabel::E(l), LineLabel::f(k, m)),
                (LineLabel::E(m), LineLabel::f(k, l)),
            ])
        }
        LineLabel::E(i) => {
            let mut m = BTreeMap::from([(LineLabel::E(i), LineLabel::G(0))]);
            for j in (1..=5).filter(|&j| j != i) {
                m.insert(LineLabel::E(j), LineLabel::f(i, j));
            }
            m
        }
        other => return Err(Error::Domain(format!("{other} is not a degree-4 line"))),
    };
    for leaf in t.leaves() {
        if !map.contains_key(&leaf) {
            return Err(Error::Domain(format!("leaf {leaf} is not among E1..E5")));
        }
    }
    Ok(t.relabel(|x| map[&x]))
}

/// Arrangement types of the 27 boundary trees of a cubic surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrangementType {
    AllTrivalent,
    ThreeFourValent,
    Degenerate,
}

impl std::fmt::Display for ArrangementType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArrangementType::AllTrivalent => "all_trivalent",
            ArrangementType::ThreeFourValent => "three_fourvalent",
            ArrangementType::Degenerate => "degenerate",
        })
    }
}

pub fn classify_arrangement(trees: &[MetricTree]) -> ArrangementType {
    let mut four = 0;
    for t in trees {
        let degs = t.internal_degrees();
        let high: Vec<usize> = degs.iter().copied().filter(|&d| d > 3).collect();
        match high.as_slice() {
            [] => {}
            [4] => four += 1,
            _ => return ArrangementType::Degenerate,
        }
    }
    match four {
        0 => ArrangementType::AllTrivalent,
        3 => ArrangementType::ThreeFourValent,
        _ => ArrangementType::Degenerate,
    }
}

/// Completes a tree whose leaves are missing the partners of some marked points under the
/// involution of `l`. Every way of inserting the missing leaves is tried; insertion positions
/// are unknowns fixed by requiring the involution to be an isometry of leaf distances.
pub fn complete_line_tree(partial: &MetricTree, l: LineLabel) -> Result<MetricTree> {
    let sigma = crate::coxideal::line_involution(l)?;
    let known: Vec<LineLabel> = partial.leaves();
    for k in &known {
        if !sigma.contains_key(k) {
            return Err(Error::Domain(format!("{k} does not meet {l}")));
        }
    }
    let missing: Vec<LineLabel> = sigma.keys().copied().filter(|a| !known.contains(a)).collect();
    for m in &missing {
        if !known.contains(&sigma[m]) {
            return Err(Error::Domain(format!("neither {m} nor its partner is known")));
        }
    }
    let np = missing.len();
    let konst = |x: &Q| -> Aff {
        let mut v = vec![Q::zero(); np + 1];
        v[np] = x.clone();
        v
    };
    let start = ATree {
        label: partial.label.clone(),
        edges: partial.edges.iter().map(|(a, b, len)| (*a, *b, len.as_ref().map(konst))).collect(),
    };
    let mut found: Vec<MetricTree> = Vec::new();
    let mut undetermined = false;
    let mut stack = vec![(start, 0usize, 0usize)];
    while let Some((t, depth, used)) = stack.pop() {
        if depth == np {
            match t.solve(&sigma, np, used) {
                Solved::Tree(x) => {
                    if !found.iter().any(|y| y.same_metric_tree(&x)) {
                        found.push(x);
                    }
                }
                Solved::Free => undetermined = true,
                Solved::None => {}
            }
            continue;
        }
        let m = missing[depth];
        for v in 0..t.label.len() {
            if t.label[v].is_none() && t.edges.iter().any(|(a, b, _)| *a == v || *b == v) {
                let mut u = t.clone();
                let leaf = u.add_node(Some(m));
                u.edges.push((v, leaf, None));
                stack.push((u, depth + 1, used));
            }
        }
        for k in 0..t.edges.len() {
            let (a, b, len) = t.edges[k].clone();
            let mut u = t.clone();
            let mid = u.add_node(None);
            let leaf = u.add_node(Some(m));
            let mut par = vec![Q::zero(); np + 1];
            par[used] = Q::one();
            u.edges.remove(k);
            match len {
                None => {
                    let (inner, outer) = if t.label[a].is_some() { (b, a) } else { (a, b) };
                    u.edges.push((inner, mid, Some(par)));
                    u.edges.push((mid, outer, None));
                }
                Some(len) => {
                    let rest: Aff = len.iter().zip(&par).map(|(x, y)| x - y).collect();
                    u.edges.push((a, mid, Some(par)));
                    u.edges.push((mid, b, Some(rest)));
                }
            }
            u.edges.push((mid, leaf, None));
            stack.push((u, depth + 1, used + 1));
        }
    }
    match found.len() {
        1 if !undetermined => Ok(found.pop().unwrap()),
        0 if !undetermined => Err(Error::NonGeneric(format!("involution of {l} is inconsistent with the partial metric"))),
        _ => Err(Error::NonGeneric(format!("missing markings on the tree of {l} are not determined"))),
    }
}

type Aff = Vec<Q>;

#[derive(Clone)]
struct ATree {
    label: Vec<Option<LineLabel>>,
    edges: Vec<(usize, usize, Option<Aff>)>,
}

enum Solved {
    Tree(MetricTree),
    Free,
    None,
}

impl ATree {
    fn add_node(&mut self, l: Option<LineLabel>) -> usize {
        self.label.push(l);
        self.label.len() - 1
    }

    fn leaf_dists(&self, np: usize) -> BTreeMap<(LineLabel, LineLabel), Aff> {
        let n = self.label.len();
        let mut out = BTreeMap::new();
        for s in 0..n {
            let Some(a) = self.label[s] else { continue };
            let mut d: Vec<Option<Aff>> = vec![None; n];
            d[s] = Some(vec![Q::zero(); np + 1]);
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for (x, y, len) in &self.edges {
                    let w = if *x == v {
                        *y
                    } else if *y == v {
                        *x
                    } else {
                        continue;
                    };
                    if d[w].is_none() {
                        let base = d[v].clone().unwrap();
                        d[w] = Some(match len {
                            Some(l) => base.iter().zip(l).map(|(p, q)| p + q).collect(),
                            None => base,
                        });
                        stack.push(w);
                    }
                }
            }
            for (w, lb) in self.label.iter().enumerate() {
                if let (Some(b), Some(x)) = (lb, &d[w]) {
                    if a < *b {
                        out.insert((a, *b), x.clone());
                    }
                }
            }
        }
        out
    }

    fn solve(&self, sigma: &BTreeMap<LineLabel, LineLabel>, np: usize, used: usize) -> Solved {
        let d = self.leaf_dists(np);
        let key = |a: LineLabel, b: LineLabel| if a < b { (a, b) } else { (b, a) };
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for ((a, b), x) in &d {
            let y = &d[&key(sigma[a], sigma[b])];
            let diff: Vec<Q> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            rows.push(diff[..used].to_vec());
            rhs.push(-diff[np].clone());
        }
        let sol = if used == 0 {
            if rhs.iter().all(|r| r.is_zero()) {
                Some((Vec::new(), 0))
            } else {
                None
            }
        } else {
            crate::num::solve_linear(&rows, &rhs)
        };
        let Some((x, free)) = sol else { return Solved::None };
        if free > 0 {
            return Solved::Free;
        }
        let eval = |a: &Aff| -> Q { a[np].clone() + a[..used].iter().zip(&x).fold(Q::zero(), |s, (c, v)| s + c * v) };
        let mut t = MetricTree { label: self.label.clone(), edges: Vec::new() };
        for (a, b, len) in &self.edges {
            match len {
                Some(l) => {
                    let v = eval(l);
                    if !v.is_positive() {
                        return Solved::None;
                    }
                    t.edges.push((*a, *b, Some(v)));
                }
                None => t.edges.push((*a, *b, None)),
            }
        }
        t.suppress_degree_two();
        Solved::Tree(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::qf;

    fn e(i: u8) -> LineLabel {
        LineLabel::E(i)
    }

    #[test]
    fn newick_round_trip_and_distances() {
        let t = caterpillar(&[vec![e(1), e(4)], vec![e(3)], vec![e(2), e(5)]], &[q(1), q(2)]).unwrap();
        let d = t.leaf_distances();
        assert_eq!(d[&(e(1), e(4))], q(0));
        assert_eq!(d[&(e(1), e(5))], q(3));
        assert_eq!(d[&(e(3), e(5))], q(2));
        let s = t.to_newick();
        let back = MetricTree::from_newick(&s).unwrap();
        assert!(back.same_metric_tree(&t));
        assert!(t.is_trivalent());
        assert_eq!(t.internal_lengths(), vec![q(1), q(2)]);
    }

    #[test]
    fn reconstruction_from_distances() {
        let t = caterpillar(&[vec![e(1), e(2)], vec![e(3)], vec![e(4)], vec![e(5), LineLabel::G(0)]], &[qf(1, 2), q(3), q(1)]).unwrap();
        let r = MetricTree::from_distances(&t.leaves(), &t.leaf_distances()).unwrap();
        assert!(r.same_metric_tree(&t));
        let star = t.restrict(&[e(1), e(3), e(5)]).unwrap();
        assert_eq!(star.internal_nodes().len(), 1);
        assert_eq!(star.leaf_distances()[&(e(1), e(5))], q(0));
        let sub = t.restrict(&[e(1), e(2), e(4), e(5)]).unwrap();
        assert_eq!(sub.internal_lengths(), vec![qf(7, 2)]);
        assert_eq!(sub.leaf_distances()[&(e(1), e(5))], qf(7, 2));
    }

    #[test]
    fn star_and_shapes() {
        let star = caterpillar(&[vec![e(1), e(2), e(3)], vec![e(4), e(5)]], &[q(1)]).unwrap();
        assert_eq!(star.internal_degrees(), vec![3, 4]);
        let a = caterpillar(&[vec![e(1), e(2)], vec![e(3)], vec![e(4), e(5)]], &[q(1), q(1)]).unwrap();
        let b = caterpillar(&[vec![e(5), e(2)], vec![e(1)], vec![e(4), e(3)]], &[q(2), q(1)]).unwrap();
        assert_eq!(a.shape(), b.shape());
        assert_ne!(a.shape(), star.shape());
    }

    #[test]
    fn relabel_rules_degree_four() {
        let t = caterpillar(&[vec![e(1), e(4)], vec![e(3)], vec![e(2), e(5)]], &[q(1), q(2)]).unwrap();
        let f = relabel_d4(&t, LineLabel::f(1, 2)).unwrap();
        assert_eq!(
            f.leaves(),
            vec![e(1), e(2), LineLabel::f(3, 4), LineLabel::f(3, 5), LineLabel::f(4, 5)]
        );
        let g = relabel_d4(&t, e(3)).unwrap();
        assert!(g.leaves().contains(&LineLabel::G(0)));
        assert!(relabel_d4(&t, LineLabel::G(2)).is_err());
    }

    #[test]
    fn quotient_doubles_fixed_edges() {
        let f = |j: u8| LineLabel::F(1, j);
        let t = caterpillar(
            &[vec![e(2), f(2)], vec![e(3), f(3)], vec![e(4), f(4), e(5), f(5)], vec![e(6), f(6)]],
            &[q(1), q(2), q(3)],
        )
        .unwrap();
        assert!(involution_check(&t, LineLabel::G(1)).unwrap());
        let (quot, rh) = quotient_5leaf(&t, LineLabel::G(1)).unwrap();
        assert!(rh);
        let want = caterpillar(&[vec![e(2), e(3)], vec![e(4), e(5), e(6)]], &[q(4)]).unwrap();
        assert!(quot.same_metric_tree(&want), "{}", quot.to_newick());
    }
}
