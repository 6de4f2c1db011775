//! Brute-force ground truth, independent of the compilation pipeline.
//!
//! Everything here decides by exhaustive backtracking; the only permitted
//! optimizations are symmetry pruning and local degree-feasibility cuts.
//! The formula layer reuses the same searches (behind cheap necessary-count
//! prefilters) for its small-size lookup tables, since those tables are
//! brute-force by construction.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::extnat::DegreeMatrix;
use crate::graphs::{ColoredBipartiteGraph, ColoredDigraph};
use crate::presburger::{Formula, Node, Var};

// ---------------------------------------------------------------------------
// Colored biregular realization search.
// ---------------------------------------------------------------------------

struct BipartiteSearch<'a> {
    c: &'a DegreeMatrix,
    d: &'a DegreeMatrix,
    colors: usize,
    left_part: Vec<usize>,
    right_part: Vec<usize>,
    l: usize,
    r: usize,
    complete: bool,
    /// columns[v] = colors received by right vertex v from completed rows
    columns: Vec<Vec<u8>>,
    right_deg: Vec<Vec<u32>>,
    rows: Vec<Vec<u8>>,
}

impl<'a> BipartiteSearch<'a> {
    fn run(mut self) -> Option<ColoredBipartiteGraph> {
        if self.solve_row(0) {
            let mut g = ColoredBipartiteGraph::empty(
                part_sizes(&self.left_part),
                part_sizes(&self.right_part),
                self.colors,
            );
            for (u, row) in self.rows.iter().enumerate() {
                for (v, &col) in row.iter().enumerate() {
                    if col > 0 {
                        g.edges[(col - 1) as usize].insert((u as u32, v as u32));
                    }
                }
            }
            Some(g)
        } else {
            None
        }
    }

    fn solve_row(&mut self, u: usize) -> bool {
        if u == self.l {
            // Final right-degree audit.
            return (0..self.r).all(|v| {
                (0..self.colors).all(|i| {
                    self.d.get(i, self.right_part[v]).admits(self.right_deg[v][i])
                })
            });
        }
        let row = vec![0u8; self.r];
        let used = vec![0u32; self.colors];
        let tight = u > 0 && self.left_part[u] == self.left_part[u - 1];
        self.fill_row(u, 0, row, used, tight)
    }

    #[allow(clippy::too_many_arguments)]
    fn fill_row(&mut self, u: usize, v: usize, mut row: Vec<u8>, used: Vec<u32>, tight: bool) -> bool {
        if v == self.r {
            // Left budgets final for this row.
            let part = self.left_part[u];
            for i in 0..self.colors {
                if !self.c.get(i, part).admits(used[i]) {
                    return false;
                }
            }
            // Right feasibility: remaining rows can still meet exact specs.
            let remaining = (self.l - u - 1) as u32;
            for w in 0..self.r {
                let deg_new: Vec<u32> = (0..self.colors)
                    .map(|i| self.right_deg[w][i] + u32::from(row[w] == (i + 1) as u8))
                    .collect();
                let rp = self.right_part[w];
                for i in 0..self.colors {
                    let spec = self.d.get(i, rp);
                    if spec.is_exact() && deg_new[i] > spec.floor() {
                        return false;
                    }
                    if deg_new[i] + remaining < spec.floor() {
                        return false;
                    }
                }
            }
            // Commit.
            for w in 0..self.r {
                if row[w] > 0 {
                    self.right_deg[w][(row[w] - 1) as usize] += 1;
                }
                self.columns[w].push(row[w]);
            }
            self.rows.push(row.clone());
            if self.solve_row(u + 1) {
                return true;
            }
            self.rows.pop();
            for w in 0..self.r {
                self.columns[w].pop();
                if row[w] > 0 {
                    self.right_deg[w][(row[w] - 1) as usize] -= 1;
                }
            }
            return false;
        }

        let part = self.left_part[u];
        // Color choices for right vertex v: 0 = none (unless complete).
        let lo = u8::from(self.complete);
        let mut hi = self.colors as u8;
        // Canonical columns: among same-part right vertices with identical
        // history, the current row must be non-increasing.
        if v > 0 && self.right_part[v] == self.right_part[v - 1] && self.columns[v] == self.columns[v - 1]
        {
            hi = hi.min(row[v - 1]);
            if self.complete && hi == 0 {
                return false;
            }
        }
        // Canonical rows: within a left part, rows are non-increasing.
        let prev_cap = if tight { self.rows[u - 1][v] } else { u8::MAX };

        // Try colors high-to-low is not required; ascending with 0 first finds
        // sparse solutions quickly, but canonical ordering wants descending.
        let mut color = hi.min(prev_cap);
        loop {
            let mut ok = true;
            if color > 0 {
                let i = (color - 1) as usize;
                // Left budget.
                let spec = self.c.get(i, part);
                if spec.is_exact() && used[i] + 1 > spec.floor() {
                    ok = false;
                }
                // Right budget.
                let rspec = self.d.get(i, self.right_part[v]);
                if ok && rspec.is_exact() && self.right_deg[v][i] + 1 > rspec.floor() {
                    ok = false;
                }
            }
            // Left lower-bound feasibility: enough slots remain per color.
            if ok {
                let slots_left = (self.r - v - 1) as u32;
                let mut need = 0u32;
                for i in 0..self.colors {
                    let spec = self.c.get(i, part);
                    let have = used[i] + u32::from(color == (i + 1) as u8);
                    need += spec.floor().saturating_sub(have);
                }
                if need > slots_left {
                    ok = false;
                }
            }
            if ok {
                row[v] = color;
                let mut used2 = used.clone();
                if color > 0 {
                    used2[(color - 1) as usize] += 1;
                }
                let tight2 = tight && color == self.rows[u - 1][v];
                if self.fill_row(u, v + 1, row.clone(), used2, tight2) {
                    return true;
                }
            }
            if color == lo {
                return false;
            }
            color -= 1;
        }
    }
}

fn part_sizes(part_of: &[usize]) -> Vec<usize> {
    let mut sizes = vec![0usize; part_of.iter().copied().max().map_or(0, |m| m + 1)];
    for &p in part_of {
        sizes[p] += 1;
    }
    sizes
}

fn expand_parts(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, &s) in sizes.iter().enumerate() {
        out.extend(std::iter::repeat(i).take(s));
    }
    out
}

/// Cheap necessary conditions; `false` means definitely unrealizable.
fn bipartite_necessary(
    c: &DegreeMatrix,
    d: &DegreeMatrix,
    m_sizes: &[usize],
    n_sizes: &[usize],
    complete: bool,
) -> bool {
    let l: u64 = m_sizes.iter().map(|&s| s as u64).sum();
    let r: u64 = n_sizes.iter().map(|&s| s as u64).sum();
    // Per-part total degree must fit in the opposite side.
    for (j, &sz) in m_sizes.iter().enumerate() {
        if sz == 0 {
            continue;
        }
        let floors: u64 = (0..c.rows).map(|i| c.get(i, j).floor() as u64).sum();
        if floors > r {
            return false;
        }
        if complete {
            let col_exact = (0..c.rows).all(|i| c.get(i, j).is_exact());
            if col_exact && floors != r {
                return false;
            }
        }
    }
    for (j, &sz) in n_sizes.iter().enumerate() {
        if sz == 0 {
            continue;
        }
        let floors: u64 = (0..d.rows).map(|i| d.get(i, j).floor() as u64).sum();
        if floors > l {
            return false;
        }
        if complete {
            let col_exact = (0..d.rows).all(|i| d.get(i, j).is_exact());
            if col_exact && floors != l {
                return false;
            }
        }
    }
    // Per-color edge count intervals must intersect.
    let mut total_min = 0u64;
    let mut total_max = 0u64;
    for i in 0..c.rows {
        let lmin: u64 = m_sizes
            .iter()
            .enumerate()
            .map(|(j, &s)| s as u64 * c.get(i, j).floor() as u64)
            .sum();
        let lmax: u64 = m_sizes
            .iter()
            .enumerate()
            .map(|(j, &s)| s as u64 * if c.get(i, j).is_exact() { c.get(i, j).floor() as u64 } else { r })
            .sum();
        let rmin: u64 = n_sizes
            .iter()
            .enumerate()
            .map(|(j, &s)| s as u64 * d.get(i, j).floor() as u64)
            .sum();
        let rmax: u64 = n_sizes
            .iter()
            .enumerate()
            .map(|(j, &s)| s as u64 * if d.get(i, j).is_exact() { d.get(i, j).floor() as u64 } else { l })
            .sum();
        if lmax < rmin || rmax < lmin {
            return false;
        }
        total_min += lmin.max(rmin);
        total_max += lmax.min(rmax);
    }
    // Simplicity: at most one edge per pair overall.
    if total_min > l * r {
        return false;
    }
    if complete && total_max < l * r {
        return false;
    }
    true
}

/// Exhaustive search for an ℓ-type (C,D)-biregular graph of the given size;
/// `complete` additionally requires every pair to carry an edge.
pub fn search_biregular(
    c: &DegreeMatrix,
    d: &DegreeMatrix,
    m_sizes: &[usize],
    n_sizes: &[usize],
    complete: bool,
    prefilter: bool,
) -> Option<ColoredBipartiteGraph> {
    assert_eq!(c.rows, d.rows, "matrices must share the color count");
    assert_eq!(c.cols, m_sizes.len());
    assert_eq!(d.cols, n_sizes.len());
    if prefilter && !bipartite_necessary(c, d, m_sizes, n_sizes, complete) {
        return None;
    }
    let left_part = expand_parts(m_sizes);
    let right_part = expand_parts(n_sizes);
    let l = left_part.len();
    let r = right_part.len();
    let search = BipartiteSearch {
        c,
        d,
        colors: c.rows,
        l,
        r,
        left_part,
        right_part,
        complete,
        columns: vec![Vec::new(); r],
        right_deg: vec![vec![0; c.rows]; r],
        rows: Vec::new(),
    };
    search.run()
}

/// Oracle entry point: does an ℓ-type (C,D)-biregular graph of size
/// (M̄,N̄) exist? Pure backtracking with symmetry and degree pruning only.
pub fn oracle_biregular(
    c: &DegreeMatrix,
    d: &DegreeMatrix,
    m_sizes: &[usize],
    n_sizes: &[usize],
    cap: u64,
) -> Result<Option<ColoredBipartiteGraph>> {
    let total = (m_sizes.iter().sum::<usize>() + n_sizes.iter().sum::<usize>()) as u64;
    if total > cap {
        return Err(Error::budget("oracle_biregular universe", total, cap));
    }
    Ok(search_biregular(c, d, m_sizes, n_sizes, false, false))
}

/// Complete-bipartite variant: every pair carries exactly one colored edge.
pub fn oracle_complete_biregular(
    c: &DegreeMatrix,
    d: &DegreeMatrix,
    m_sizes: &[usize],
    n_sizes: &[usize],
    cap: u64,
) -> Result<Option<ColoredBipartiteGraph>> {
    let total = (m_sizes.iter().sum::<usize>() + n_sizes.iter().sum::<usize>()) as u64;
    if total > cap {
        return Err(Error::budget("oracle_complete_biregular universe", total, cap));
    }
    Ok(search_biregular(c, d, m_sizes, n_sizes, true, false))
}

// ---------------------------------------------------------------------------
// Colored regular digraph realization search.
// ---------------------------------------------------------------------------

/// Pair state: 0 none, 1..=ℓ forward (u→v) color, ℓ+1..=2ℓ backward color.
struct DigraphSearch<'a> {
    c_in: &'a DegreeMatrix,
    d_out: &'a DegreeMatrix,
    colors: usize,
    part: Vec<usize>,
    n: usize,
    complete: bool,
    in_deg: Vec<Vec<u32>>,
    out_deg: Vec<Vec<u32>>,
    states: Vec<Vec<u8>>,
}

impl<'a> DigraphSearch<'a> {
    fn run(mut self) -> Option<ColoredDigraph> {
        if self.n == 0 {
            return Some(ColoredDigraph::empty(part_sizes(&self.part), self.colors));
        }
        if self.solve(0, 1) {
            let mut g = ColoredDigraph::empty(part_sizes(&self.part), self.colors);
            for u in 0..self.n {
                for v in u + 1..self.n {
                    let s = self.states[u][v - u - 1];
                    if s == 0 {
                        continue;
                    }
                    let s = s as usize;
                    if s <= self.colors {
                        g.edges[s - 1].insert((u as u32, v as u32));
                    } else {
                        g.edges[s - self.colors - 1].insert((v as u32, u as u32));
                    }
                }
            }
            Some(g)
        } else {
            None
        }
    }

    fn spec_ok_final(&self, v: usize) -> bool {
        let p = self.part[v];
        (0..self.colors).all(|i| {
            self.c_in.get(i, p).admits(self.in_deg[v][i])
                && self.d_out.get(i, p).admits(self.out_deg[v][i])
        })
    }

    /// Remaining-degree feasibility for vertex w given `slots` future pairs
    /// touching w.
    fn feasible(&self, w: usize, slots: u32) -> bool {
        let p = self.part[w];
        let mut need = 0u32;
        for i in 0..self.colors {
            let ci = self.c_in.get(i, p);
            let di = self.d_out.get(i, p);
            if ci.is_exact() && self.in_deg[w][i] > ci.floor() {
                return false;
            }
            if di.is_exact() && self.out_deg[w][i] > di.floor() {
                return false;
            }
            need += ci.floor().saturating_sub(self.in_deg[w][i]);
            need += di.floor().saturating_sub(self.out_deg[w][i]);
        }
        need <= slots
    }

    fn solve(&mut self, u: usize, v: usize) -> bool {
        if u == self.n {
            return true;
        }
        if v == self.n {
            // All pairs touching u are now assigned.
            if !self.spec_ok_final(u) {
                return false;
            }
            let nu = u + 1;
            return self.solve(nu, nu + 1);
        }
        // slots remaining for u after this pair; for v, pairs with sources
        // u+1..v plus its own later sweep.
        let u_slots = (self.n - 1 - v) as u32;
        let v_slots = (self.n - 1 - u - 1) as u32;
        let max_state = (2 * self.colors) as u8;
        let lo = u8::from(self.complete);
        for state in lo..=max_state {
            let mut delta: Option<(usize, usize, usize)> = None; // (src, dst, color)
            if state > 0 {
                let s = state as usize;
                if s <= self.colors {
                    delta = Some((u, v, s - 1));
                } else {
                    delta = Some((v, u, s - self.colors - 1));
                }
            }
            if let Some((src, dst, i)) = delta {
                let sp = self.part[src];
                let dp = self.part[dst];
                let out_spec = self.d_out.get(i, sp);
                if out_spec.is_exact() && self.out_deg[src][i] + 1 > out_spec.floor() {
                    continue;
                }
                let in_spec = self.c_in.get(i, dp);
                if in_spec.is_exact() && self.in_deg[dst][i] + 1 > in_spec.floor() {
                    continue;
                }
                self.out_deg[src][i] += 1;
                self.in_deg[dst][i] += 1;
            }
            let ok = self.feasible(u, u_slots) && self.feasible(v, v_slots);
            if ok {
                self.states[u][v - u - 1] = state;
                if self.solve(u, v + 1) {
                    return true;
                }
            }
            if let Some((src, dst, i)) = delta {
                self.out_deg[src][i] -= 1;
                self.in_deg[dst][i] -= 1;
            }
        }
        self.states[u][v - u - 1] = 0;
        false
    }
}

fn digraph_necessary(c_in: &DegreeMatrix, d_out: &DegreeMatrix, sizes: &[usize], complete: bool) -> bool {
    let n: u64 = sizes.iter().map(|&s| s as u64).sum();
    for (j, &sz) in sizes.iter().enumerate() {
        if sz == 0 {
            continue;
        }
        let floors: u64 = (0..c_in.rows)
            .map(|i| c_in.get(i, j).floor() as u64 + d_out.get(i, j).floor() as u64)
            .sum();
        if floors > n.saturating_sub(1) {
            return false;
        }
        if complete {
            let all_exact = (0..c_in.rows)
                .all(|i| c_in.get(i, j).is_exact() && d_out.get(i, j).is_exact());
            if all_exact && floors != n - 1 {
                return false;
            }
        }
    }
    // Per-color: total in-degrees = total out-degrees when both sides exact.
    for i in 0..c_in.rows {
        let in_min: u64 =
            sizes.iter().enumerate().map(|(j, &s)| s as u64 * c_in.get(i, j).floor() as u64).sum();
        let in_max: u64 = sizes
            .iter()
            .enumerate()
            .map(|(j, &s)| {
                s as u64 * if c_in.get(i, j).is_exact() { c_in.get(i, j).floor() as u64 } else { n }
            })
            .sum();
        let out_min: u64 =
            sizes.iter().enumerate().map(|(j, &s)| s as u64 * d_out.get(i, j).floor() as u64).sum();
        let out_max: u64 = sizes
            .iter()
            .enumerate()
            .map(|(j, &s)| {
                s as u64 * if d_out.get(i, j).is_exact() { d_out.get(i, j).floor() as u64 } else { n }
            })
            .sum();
        if in_max < out_min || out_max < in_min {
            return false;
        }
    }
    true
}

/// Exhaustive search for a (C,D)-regular digraph (in-degrees C, out-degrees
/// D) of size N̄; `complete` requires an oriented edge on every pair.
pub fn search_digraph(
    c_in: &DegreeMatrix,
    d_out: &DegreeMatrix,
    sizes: &[usize],
    complete: bool,
    prefilter: bool,
) -> Option<ColoredDigraph> {
    assert_eq!(c_in.rows, d_out.rows);
    assert_eq!(c_in.cols, sizes.len());
    assert_eq!(d_out.cols, sizes.len());
    if prefilter && !digraph_necessary(c_in, d_out, sizes, complete) {
        return None;
    }
    let part = expand_parts(sizes);
    let n = part.len();
    let search = DigraphSearch {
        c_in,
        d_out,
        colors: c_in.rows,
        part,
        n,
        complete,
        in_deg: vec![vec![0; c_in.rows]; n],
        out_deg: vec![vec![0; c_in.rows]; n],
        states: (0..n).map(|u| vec![0u8; n - u - 1]).collect(),
    };
    search.run()
}

pub fn oracle_digraph(
    c_in: &DegreeMatrix,
    d_out: &DegreeMatrix,
    sizes: &[usize],
    cap: u64,
) -> Result<Option<ColoredDigraph>> {
    let total: u64 = sizes.iter().map(|&s| s as u64).sum();
    if total > cap {
        return Err(Error::budget("oracle_digraph universe", total, cap));
    }
    Ok(search_digraph(c_in, d_out, sizes, false, false))
}

pub fn oracle_complete_digraph(
    c_in: &DegreeMatrix,
    d_out: &DegreeMatrix,
    sizes: &[usize],
    cap: u64,
) -> Result<Option<ColoredDigraph>> {
    let total: u64 = sizes.iter().map(|&s| s as u64).sum();
    if total > cap {
        return Err(Error::budget("oracle_complete_digraph universe", total, cap));
    }
    Ok(search_digraph(c_in, d_out, sizes, true, false))
}

// ---------------------------------------------------------------------------
// Presburger sweep oracle.
// ---------------------------------------------------------------------------

/// Exhaustive bound-variable sweep in `[0, var_cap]^k`. Sound for `true`;
/// sound for `false` when `var_cap` dominates the solver's small-solution
/// bound for the formula.
pub fn oracle_presburger(formula: &Formula, assignment: &BTreeMap<Var, u64>, var_cap: u64) -> bool {
    fn eval(f: &Formula, asg: &mut BTreeMap<Var, u64>, cap: u64) -> bool {
        match f.node() {
            Node::True => true,
            Node::False => false,
            Node::Atom(a) => {
                let lookup = |v: Var| asg.get(&v).copied();
                match (a.lhs.eval(&lookup), a.rhs.eval(&lookup)) {
                    (Some(l), Some(r)) => a.cmp.holds(l, r),
                    _ => panic!("oracle_presburger: unassigned variable in atom"),
                }
            }
            Node::Table { vars, rel } => {
                let point: Vec<u64> = vars.iter().map(|v| asg[v]).collect();
                rel.contains(&point)
            }
            Node::And(parts) => parts.iter().all(|p| eval(p, asg, cap)),
            Node::Or(parts) => parts.iter().any(|p| eval(p, asg, cap)),
            Node::Exists(vars, body) => {
                fn sweep(
                    vars: &[Var],
                    body: &Formula,
                    asg: &mut BTreeMap<Var, u64>,
                    cap: u64,
                ) -> bool {
                    match vars.split_first() {
                        None => eval(body, asg, cap),
                        Some((&v, rest)) => {
                            for value in 0..=cap {
                                asg.insert(v, value);
                                if sweep(rest, body, asg, cap) {
                                    asg.remove(&v);
                                    return true;
                                }
                            }
                            asg.remove(&v);
                            false
                        }
                    }
                }
                sweep(vars, body, asg, cap)
            }
        }
    }
    let mut asg = assignment.clone();
    eval(formula, &mut asg, var_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extnat::ExtendedNat as E;

    fn m(entries: &[&[E]]) -> DegreeMatrix {
        let rows = entries.len();
        let cols = entries[0].len();
        DegreeMatrix::new(rows, cols, entries.iter().flat_map(|r| r.iter().copied()).collect())
    }

    #[test]
    fn k32_exists() {
        // (2,3)-biregular of size (3,2): K_{3,2}
        let c = m(&[&[E::exact(2)]]);
        let d = m(&[&[E::exact(3)]]);
        let g = oracle_biregular(&c, &d, &[3], &[2], 12).unwrap().expect("K_{3,2}");
        g.audit(&c, &d).unwrap();
    }

    #[test]
    fn mismatched_counts_fail() {
        let c = m(&[&[E::exact(2)]]);
        let d = m(&[&[E::exact(3)]]);
        assert!(oracle_biregular(&c, &d, &[3], &[3], 12).unwrap().is_none());
    }

    #[test]
    fn empty_graph_ok() {
        let c = m(&[&[E::exact(0)]]);
        let d = m(&[&[E::exact(0)]]);
        assert!(oracle_biregular(&c, &d, &[7], &[5], 12).unwrap().is_some());
    }

    #[test]
    fn two_disjoint_matchings() {
        let c = m(&[&[E::exact(1)], &[E::exact(1)]]);
        let d = m(&[&[E::exact(1)], &[E::exact(1)]]);
        let g = oracle_biregular(&c, &d, &[6], &[6], 12).unwrap().expect("two matchings");
        g.audit(&c, &d).unwrap();
        // size below 2 per side with two disjoint colors on one pair: impossible
        assert!(oracle_biregular(&c, &d, &[1], &[1], 12).unwrap().is_none());
    }

    #[test]
    fn digraph_one_in_one_out() {
        let c = m(&[&[E::exact(1)]]);
        let d = m(&[&[E::exact(1)]]);
        assert!(oracle_digraph(&c, &d, &[3], 12).unwrap().is_some());
        // 2-cycle forbidden by antisymmetry
        assert!(oracle_digraph(&c, &d, &[2], 12).unwrap().is_none());
        assert!(oracle_digraph(&c, &d, &[1], 12).unwrap().is_none());
        let g = oracle_digraph(&c, &d, &[5], 12).unwrap().expect("5-cycle");
        g.audit(&c, &d).unwrap();
    }

    #[test]
    fn complete_digraph_triangle() {
        let c = m(&[&[E::exact(1)]]);
        let d = m(&[&[E::exact(1)]]);
        let g = oracle_complete_digraph(&c, &d, &[3], 12).unwrap().expect("triangle");
        assert!(g.is_complete());
        g.audit(&c, &d).unwrap();
        for n in [1usize, 2, 4, 5, 6] {
            assert!(
                oracle_complete_digraph(&c, &d, &[n], 12).unwrap().is_none(),
                "complete in=out=1 must force a triangle, n={}",
                n
            );
        }
    }

    #[test]
    fn complete_bipartite_fill() {
        // C=[>=0], D=[>=0]: any complete coloring works
        let c = m(&[&[E::at_least(0)]]);
        let d = m(&[&[E::at_least(0)]]);
        let g = oracle_complete_biregular(&c, &d, &[3], &[4], 12).unwrap().expect("fill");
        assert!(g.is_complete());
    }

    #[test]
    fn tournament_always_exists() {
        let c = m(&[&[E::at_least(0)]]);
        let d = m(&[&[E::at_least(0)]]);
        for n in 0..6usize {
            assert!(oracle_complete_digraph(&c, &d, &[n], 12).unwrap().is_some(), "n={}", n);
        }
    }
}
