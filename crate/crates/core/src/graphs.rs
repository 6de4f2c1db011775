//! Colored bipartite graphs and colored digraphs with degree-witness audits.
//!
//! Vertices are numbered globally (left side first for bipartite graphs);
//! parts are contiguous index ranges in declaration order.

use std::collections::BTreeSet;
use std::fmt;

use crate::extnat::DegreeMatrix;

/// An edge-colored bipartite graph together with its part structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredBipartiteGraph {
    pub left_sizes: Vec<usize>,
    pub right_sizes: Vec<usize>,
    pub colors: usize,
    /// Per color: set of (left index, right index); indices are side-local.
    pub edges: Vec<BTreeSet<(u32, u32)>>,
}

impl ColoredBipartiteGraph {
    pub fn empty(left_sizes: Vec<usize>, right_sizes: Vec<usize>, colors: usize) -> Self {
        ColoredBipartiteGraph {
            left_sizes,
            right_sizes,
            colors,
            edges: vec![BTreeSet::new(); colors],
        }
    }

    pub fn left_total(&self) -> usize {
        self.left_sizes.iter().sum()
    }

    pub fn right_total(&self) -> usize {
        self.right_sizes.iter().sum()
    }

    /// Part index of a side-local vertex index.
    pub fn part_of(sizes: &[usize], v: usize) -> usize {
        let mut acc = 0;
        for (i, &s) in sizes.iter().enumerate() {
            acc += s;
            if v < acc {
                return i;
            }
        }
        panic!("vertex {} out of range", v)
    }

    pub fn left_degree(&self, color: usize, v: u32) -> u32 {
        self.edges[color].iter().filter(|&&(u, _)| u == v).count() as u32
    }

    pub fn right_degree(&self, color: usize, v: u32) -> u32 {
        self.edges[color].iter().filter(|&&(_, w)| w == v).count() as u32
    }

    /// Check all structural invariants against a degree witness (C left, D
    /// right). Reports the first violation.
    pub fn audit(&self, c: &DegreeMatrix, d: &DegreeMatrix) -> Result<(), String> {
        if c.rows != self.colors || d.rows != self.colors {
            return Err("color count does not match matrices".into());
        }
        if c.cols != self.left_sizes.len() || d.cols != self.right_sizes.len() {
            return Err("part count does not match matrices".into());
        }
        let lt = self.left_total() as u32;
        let rt = self.right_total() as u32;
        // Colors pairwise disjoint and in range.
        let mut seen: BTreeSet<(u32, u32)> = BTreeSet::new();
        for (i, set) in self.edges.iter().enumerate() {
            for &(u, v) in set {
                if u >= lt || v >= rt {
                    return Err(format!("edge ({},{}) out of range in color {}", u, v, i));
                }
                if !seen.insert((u, v)) {
                    return Err(format!("pair ({},{}) carries more than one edge", u, v));
                }
            }
        }
        // Degrees.
        let mut left_deg = vec![vec![0u32; self.colors]; lt as usize];
        let mut right_deg = vec![vec![0u32; self.colors]; rt as usize];
        for (i, set) in self.edges.iter().enumerate() {
            for &(u, v) in set {
                left_deg[u as usize][i] += 1;
                right_deg[v as usize][i] += 1;
            }
        }
        for u in 0..lt as usize {
            let part = Self::part_of(&self.left_sizes, u);
            for i in 0..self.colors {
                let spec = c.get(i, part);
                if !spec.admits(left_deg[u][i]) {
                    return Err(format!(
                        "left vertex {} (part {}) has color-{} degree {} but spec {}",
                        u, part, i, left_deg[u][i], spec
                    ));
                }
            }
        }
        for v in 0..rt as usize {
            let part = Self::part_of(&self.right_sizes, v);
            for i in 0..self.colors {
                let spec = d.get(i, part);
                if !spec.admits(right_deg[v][i]) {
                    return Err(format!(
                        "right vertex {} (part {}) has color-{} degree {} but spec {}",
                        v, part, i, right_deg[v][i], spec
                    ));
                }
            }
        }
        Ok(())
    }

    /// Is every left-right pair covered by some color?
    pub fn is_complete(&self) -> bool {
        let covered: usize = self.edges.iter().map(|s| s.len()).sum();
        covered == self.left_total() * self.right_total()
    }
}

impl fmt::Display for ColoredBipartiteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bipartite left={:?} right={:?}", self.left_sizes, self.right_sizes)?;
        for (i, set) in self.edges.iter().enumerate() {
            let edges: Vec<String> =
                set.iter().map(|&(u, v)| format!("({},{})", u, v)).collect();
            writeln!(f, "E{}: {}", i + 1, edges.join(" "))?;
        }
        Ok(())
    }
}

/// An edge-colored digraph with a part structure: irreflexive, antisymmetric
/// across all colors, colors pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredDigraph {
    pub part_sizes: Vec<usize>,
    pub colors: usize,
    pub edges: Vec<BTreeSet<(u32, u32)>>,
}

impl ColoredDigraph {
    pub fn empty(part_sizes: Vec<usize>, colors: usize) -> Self {
        ColoredDigraph { part_sizes, colors, edges: vec![BTreeSet::new(); colors] }
    }

    pub fn total(&self) -> usize {
        self.part_sizes.iter().sum()
    }

    /// Check invariants against in-degree matrix `c` and out-degree matrix
    /// `d`.
    pub fn audit(&self, c: &DegreeMatrix, d: &DegreeMatrix) -> Result<(), String> {
        if c.rows != self.colors || d.rows != self.colors {
            return Err("color count does not match matrices".into());
        }
        if c.cols != self.part_sizes.len() || d.cols != self.part_sizes.len() {
            return Err("part count does not match matrices".into());
        }
        let n = self.total() as u32;
        let mut seen: BTreeSet<(u32, u32)> = BTreeSet::new();
        for (i, set) in self.edges.iter().enumerate() {
            for &(u, v) in set {
                if u >= n || v >= n {
                    return Err(format!("edge ({},{}) out of range in color {}", u, v, i));
                }
                if u == v {
                    return Err(format!("self-loop at {} in color {}", u, i));
                }
                if !seen.insert((u, v)) {
                    return Err(format!("ordered pair ({},{}) carries more than one edge", u, v));
                }
            }
        }
        for &(u, v) in &seen {
            if seen.contains(&(v, u)) && u < v {
                return Err(format!("antisymmetry violated between {} and {}", u, v));
            }
        }
        let mut in_deg = vec![vec![0u32; self.colors]; n as usize];
        let mut out_deg = vec![vec![0u32; self.colors]; n as usize];
        for (i, set) in self.edges.iter().enumerate() {
            for &(u, v) in set {
                out_deg[u as usize][i] += 1;
                in_deg[v as usize][i] += 1;
            }
        }
        for v in 0..n as usize {
            let part = ColoredBipartiteGraph::part_of(&self.part_sizes, v);
            for i in 0..self.colors {
                let in_spec = c.get(i, part);
                if !in_spec.admits(in_deg[v][i]) {
                    return Err(format!(
                        "vertex {} (part {}) has color-{} in-degree {} but spec {}",
                        v, part, i, in_deg[v][i], in_spec
                    ));
                }
                let out_spec = d.get(i, part);
                if !out_spec.admits(out_deg[v][i]) {
                    return Err(format!(
                        "vertex {} (part {}) has color-{} out-degree {} but spec {}",
                        v, part, i, out_deg[v][i], out_spec
                    ));
                }
            }
        }
        Ok(())
    }

    /// Does every unordered pair carry exactly one oriented edge?
    pub fn is_complete(&self) -> bool {
        let n = self.total();
        let covered: usize = self.edges.iter().map(|s| s.len()).sum();
        covered == n * (n - 1) / 2
    }
}

impl fmt::Display for ColoredDigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "digraph parts={:?}", self.part_sizes)?;
        for (i, set) in self.edges.iter().enumerate() {
            let edges: Vec<String> =
                set.iter().map(|&(u, v)| format!("({},{})", u, v)).collect();
            writeln!(f, "E{}: {}", i + 1, edges.join(" "))?;
        }
        Ok(())
    }
}
