//! Positive-existential Presburger formulas over the naturals.
//!
//! The fragment built here is what the compilation pipeline emits: existential
//! blocks, conjunction, disjunction and linear atoms `L ⋈ L'` with
//! nonnegative coefficients. There is no negation node; negated counting
//! atoms are pre-encoded as `≤ k−1` upstream. A compact `Table` node records
//! a finite relation (a disjunction of equality conjunctions) without
//! spelling it out; it expands to plain atoms on emission.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

pub type Var = u32;

/// Allocates variable ids and remembers display names.
#[derive(Debug, Default, Clone)]
pub struct VarPool {
    names: Vec<String>,
}

impl VarPool {
    pub fn new() -> Self {
        VarPool::default()
    }

    pub fn fresh(&mut self, name: impl Into<String>) -> Var {
        let id = self.names.len() as Var;
        self.names.push(name.into());
        id
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A linear term `constant + Σ coeff_i · var_i` with nonnegative coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LinearTerm {
    pub constant: u64,
    pub coefficients: BTreeMap<Var, u64>,
}

impl LinearTerm {
    pub fn constant(c: u64) -> Self {
        LinearTerm { constant: c, coefficients: BTreeMap::new() }
    }

    pub fn var(v: Var) -> Self {
        LinearTerm::scaled(v, 1)
    }

    pub fn scaled(v: Var, coeff: u64) -> Self {
        let mut coefficients = BTreeMap::new();
        if coeff > 0 {
            coefficients.insert(v, coeff);
        }
        LinearTerm { constant: 0, coefficients }
    }

    pub fn sum(terms: impl IntoIterator<Item = LinearTerm>) -> Self {
        let mut acc = LinearTerm::default();
        for t in terms {
            acc.add_assign(&t);
        }
        acc
    }

    pub fn weighted_sum(pairs: impl IntoIterator<Item = (Var, u64)>) -> Self {
        let mut acc = LinearTerm::default();
        for (v, c) in pairs {
            acc.add_var(v, c);
        }
        acc
    }

    pub fn add_assign(&mut self, other: &LinearTerm) {
        self.constant += other.constant;
        for (&v, &c) in &other.coefficients {
            self.add_var(v, c);
        }
    }

    pub fn add_var(&mut self, v: Var, coeff: u64) {
        if coeff > 0 {
            *self.coefficients.entry(v).or_insert(0) += coeff;
        }
    }

    pub fn add_const(&mut self, c: u64) {
        self.constant += c;
    }

    pub fn is_constant(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn eval(&self, assignment: &dyn Fn(Var) -> Option<u64>) -> Option<u64> {
        let mut total = self.constant as u128;
        for (&v, &c) in &self.coefficients {
            total += assignment(v)? as u128 * c as u128;
        }
        u64::try_from(total).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Eq,
    Le,
    Ge,
}

impl Cmp {
    pub fn holds(self, lhs: u64, rhs: u64) -> bool {
        match self {
            Cmp::Eq => lhs == rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearAtom {
    pub lhs: LinearTerm,
    pub cmp: Cmp,
    pub rhs: LinearTerm,
}

/// A finite relation over a tuple of variables. Semantically sugar for the
/// disjunction `⋁_row ⋀_i (var_i = row_i)`; rows may be listed explicitly or
/// decided on demand by a predicate within a bounding box.
pub struct TableRel {
    pub name: String,
    /// Inclusive upper bounds per position; membership is false outside.
    pub bounds: Vec<u64>,
    kind: TableKind,
    cache: Mutex<HashMap<Vec<u64>, bool>>,
}

enum TableKind {
    Materialized(BTreeSet<Vec<u64>>),
    Lazy(Box<dyn Fn(&[u64]) -> bool + Send + Sync>),
}

impl TableRel {
    pub fn materialized(name: impl Into<String>, bounds: Vec<u64>, rows: BTreeSet<Vec<u64>>) -> Arc<Self> {
        Arc::new(TableRel {
            name: name.into(),
            bounds,
            kind: TableKind::Materialized(rows),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn lazy(
        name: impl Into<String>,
        bounds: Vec<u64>,
        pred: impl Fn(&[u64]) -> bool + Send + Sync + 'static,
    ) -> Arc<Self> {
        Arc::new(TableRel {
            name: name.into(),
            bounds,
            kind: TableKind::Lazy(Box::new(pred)),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn contains(&self, point: &[u64]) -> bool {
        assert_eq!(point.len(), self.bounds.len());
        if point.iter().zip(&self.bounds).any(|(p, b)| p > b) {
            return false;
        }
        match &self.kind {
            TableKind::Materialized(rows) => rows.contains(point),
            TableKind::Lazy(pred) => {
                if let Some(&hit) = self.cache.lock().unwrap().get(point) {
                    return hit;
                }
                let value = pred(point);
                self.cache.lock().unwrap().insert(point.to_vec(), value);
                value
            }
        }
    }

    /// All rows inside the bounding box. Exact but potentially expensive for
    /// lazy tables; guarded by `max_rows`.
    pub fn materialize(&self, max_rows: u64) -> Result<BTreeSet<Vec<u64>>> {
        if let TableKind::Materialized(rows) = &self.kind {
            return Ok(rows.clone());
        }
        let mut box_size: u128 = 1;
        for &b in &self.bounds {
            box_size = box_size.saturating_mul(b as u128 + 1);
        }
        if box_size > max_rows as u128 {
            return Err(Error::budget(
                format!("materializing table `{}`", self.name),
                box_size.min(u64::MAX as u128) as u64,
                max_rows,
            ));
        }
        let mut rows = BTreeSet::new();
        let mut point = vec![0u64; self.bounds.len()];
        loop {
            if self.contains(&point) {
                rows.insert(point.clone());
            }
            // odometer increment
            let mut i = 0;
            loop {
                if i == point.len() {
                    return Ok(rows);
                }
                if point[i] < self.bounds[i] {
                    point[i] += 1;
                    break;
                }
                point[i] = 0;
                i += 1;
            }
        }
    }
}

impl fmt::Debug for TableRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TableRel({}, bounds={:?})", self.name, self.bounds)
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    True,
    False,
    Atom(LinearAtom),
    Table { vars: Vec<Var>, rel: Arc<TableRel> },
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Vec<Var>, Formula),
}

/// A positive-existential Presburger formula, shared as a DAG.
#[derive(Clone)]
pub struct Formula {
    node: Arc<Node>,
    free: OnceLock<Arc<Vec<Var>>>,
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.node)
    }
}

impl Formula {
    fn wrap(node: Node) -> Formula {
        Formula { node: Arc::new(node), free: OnceLock::new() }
    }

    pub fn tt() -> Formula {
        Formula::wrap(Node::True)
    }

    pub fn ff() -> Formula {
        Formula::wrap(Node::False)
    }

    pub fn atom(lhs: LinearTerm, cmp: Cmp, rhs: LinearTerm) -> Formula {
        // constant-fold ground atoms
        if lhs.is_constant() && rhs.is_constant() {
            return if cmp.holds(lhs.constant, rhs.constant) { Formula::tt() } else { Formula::ff() };
        }
        Formula::wrap(Node::Atom(LinearAtom { lhs, cmp, rhs }))
    }

    pub fn var_eq_const(v: Var, c: u64) -> Formula {
        Formula::atom(LinearTerm::var(v), Cmp::Eq, LinearTerm::constant(c))
    }

    pub fn table(vars: Vec<Var>, rel: Arc<TableRel>) -> Formula {
        Formula::wrap(Node::Table { vars, rel })
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match &*p.node {
                Node::True => {}
                Node::False => return Formula::ff(),
                Node::And(inner) => flat.extend(inner.iter().cloned()),
                _ => flat.push(p),
            }
        }
        match flat.len() {
            0 => Formula::tt(),
            1 => flat.pop().unwrap(),
            _ => Formula::wrap(Node::And(flat)),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match &*p.node {
                Node::False => {}
                Node::True => return Formula::tt(),
                Node::Or(inner) => flat.extend(inner.iter().cloned()),
                _ => flat.push(p),
            }
        }
        match flat.len() {
            0 => Formula::ff(),
            1 => flat.pop().unwrap(),
            _ => Formula::wrap(Node::Or(flat)),
        }
    }

    pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
        if vars.is_empty() {
            return body;
        }
        match &*body.node {
            Node::True => Formula::tt(),
            Node::False => Formula::ff(),
            _ => Formula::wrap(Node::Exists(vars, body)),
        }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    fn key(&self) -> usize {
        Arc::as_ptr(&self.node) as usize
    }

    /// Free variables, sorted. Bound variables of inner blocks are removed;
    /// builders must not shadow variables (ids are pool-unique).
    pub fn free_vars(&self) -> Arc<Vec<Var>> {
        self.free
            .get_or_init(|| {
                let mut set = BTreeSet::new();
                self.collect_free(&mut set, &mut BTreeSet::new());
                Arc::new(set.into_iter().collect())
            })
            .clone()
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>, bound: &mut BTreeSet<Var>) {
        match &*self.node {
            Node::True | Node::False => {}
            Node::Atom(a) => {
                for &v in a.lhs.coefficients.keys().chain(a.rhs.coefficients.keys()) {
                    if !bound.contains(&v) {
                        out.insert(v);
                    }
                }
            }
            Node::Table { vars, .. } => {
                for &v in vars {
                    if !bound.contains(&v) {
                        out.insert(v);
                    }
                }
            }
            Node::And(parts) | Node::Or(parts) => {
                for p in parts {
                    p.collect_free(out, bound);
                }
            }
            Node::Exists(vars, body) => {
                let fresh: Vec<Var> = vars.iter().copied().filter(|v| bound.insert(*v)).collect();
                body.collect_free(out, bound);
                for v in fresh {
                    bound.remove(&v);
                }
            }
        }
    }

    /// Count AST nodes (DAG nodes counted once).
    pub fn size(&self) -> usize {
        let mut seen = BTreeSet::new();
        self.size_inner(&mut seen);
        seen.len()
    }

    fn size_inner(&self, seen: &mut BTreeSet<usize>) {
        if !seen.insert(self.key()) {
            return;
        }
        match &*self.node {
            Node::And(parts) | Node::Or(parts) => {
                for p in parts {
                    p.size_inner(seen);
                }
            }
            Node::Exists(_, body) => body.size_inner(seen),
            _ => {}
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation: exact satisfiability of the existential fragment.
// ---------------------------------------------------------------------------

/// Normalized constraint `Σ coeff_i · x_i ⋈ bound` over unassigned vars,
/// with integer coefficients (negatives arise from moving the rhs over).
#[derive(Debug, Clone)]
struct Constraint {
    coeffs: Vec<(Var, i64)>,
    cmp: Cmp,
    bound: i64,
}

impl Constraint {
    /// Build from an atom under a partial assignment; returns Err(false-atom)
    /// as None when already violated, Some(None) when already satisfied.
    fn from_atom(atom: &LinearAtom, asg: &Assignment) -> std::result::Result<Option<Constraint>, ()> {
        let mut coeffs: BTreeMap<Var, i64> = BTreeMap::new();
        let mut bound: i128 = 0;
        bound -= atom.lhs.constant as i128;
        bound += atom.rhs.constant as i128;
        for (&v, &c) in &atom.lhs.coefficients {
            match asg.get(v) {
                Some(val) => bound -= val as i128 * c as i128,
                None => *coeffs.entry(v).or_insert(0) += c as i64,
            }
        }
        for (&v, &c) in &atom.rhs.coefficients {
            match asg.get(v) {
                Some(val) => bound += val as i128 * c as i128,
                None => *coeffs.entry(v).or_insert(0) -= c as i64,
            }
        }
        let coeffs: Vec<(Var, i64)> = coeffs.into_iter().filter(|&(_, c)| c != 0).collect();
        let bound = i64::try_from(bound).map_err(|_| ())?;
        if coeffs.is_empty() {
            let ok = match atom.cmp {
                Cmp::Eq => bound == 0,
                Cmp::Le => bound >= 0,
                Cmp::Ge => bound <= 0,
            };
            return if ok { Ok(None) } else { Err(()) };
        }
        Ok(Some(Constraint { coeffs, cmp: atom.cmp, bound }))
    }
}

#[derive(Debug, Clone, Default)]
struct Assignment {
    values: HashMap<Var, u64>,
}

impl Assignment {
    fn get(&self, v: Var) -> Option<u64> {
        self.values.get(&v).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Domain {
    lo: u64,
    hi: Option<u64>,
}

impl Domain {
    const FULL: Domain = Domain { lo: 0, hi: None };

    fn width(&self) -> Option<u64> {
        self.hi.map(|h| h - self.lo + 1)
    }

    fn fixed(&self) -> Option<u64> {
        match self.hi {
            Some(h) if h == self.lo => Some(self.lo),
            _ => None,
        }
    }
}

/// Work item: a subformula not yet decomposed (an `Or`, or anything whose
/// free vars may later become fully assigned and thus memo-resolvable).
#[derive(Clone)]
struct Pending {
    formula: Formula,
}

/// Identity key for a shared node; holds the Arc so the address stays unique
/// for the lifetime of the memo entry.
struct NodeKey(Arc<Node>);

impl PartialEq for NodeKey {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}
impl Eq for NodeKey {}
impl std::hash::Hash for NodeKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (Arc::as_ptr(&self.0) as usize).hash(state);
    }
}

/// Evaluator with cross-query memoization of closed subformula evaluations.
pub struct Evaluator {
    memo: Mutex<HashMap<(NodeKey, Vec<u64>), bool>>,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator::new()
    }
}

impl Evaluator {
    pub fn new() -> Self {
        Evaluator { memo: Mutex::new(HashMap::new()) }
    }

    /// Decide truth under the given assignment of free variables.
    pub fn evaluate(&self, formula: &Formula, free: &BTreeMap<Var, u64>) -> bool {
        self.solve(formula, free).is_some()
    }

    /// Like `evaluate` but returns a witness for all existential variables.
    pub fn solve(&self, formula: &Formula, free: &BTreeMap<Var, u64>) -> Option<BTreeMap<Var, u64>> {
        let mut asg = Assignment::default();
        for (&v, &val) in free {
            asg.values.insert(v, val);
        }
        let mut state = State::default();
        if state.push(formula.clone(), &asg, self).is_err() {
            return None;
        }
        self.search(state, asg).map(|a| a.values.into_iter().collect())
    }

    /// Memoized evaluation of a formula at a full assignment of its free vars.
    fn eval_closed(&self, formula: &Formula, asg: &Assignment) -> bool {
        let fv = formula.free_vars();
        let key_vals: Vec<u64> = fv.iter().map(|&v| asg.get(v).expect("closed eval")).collect();
        let key = (NodeKey(formula.node.clone()), key_vals);
        if let Some(&hit) = self.memo.lock().unwrap().get(&key) {
            return hit;
        }
        let mut inner = Assignment::default();
        for (i, &v) in fv.iter().enumerate() {
            inner.values.insert(v, key.1[i]);
        }
        // Disjunctions are split here rather than through `push`, which would
        // route closed disjunctions right back to this function.
        let value = match &*formula.node {
            Node::Or(parts) => parts.iter().any(|p| self.eval_closed(p, &inner)),
            _ => {
                let mut state = State::default();
                match state.push(formula.clone(), &inner, self) {
                    Err(()) => false,
                    Ok(()) => self.search(state, inner).is_some(),
                }
            }
        };
        self.memo.lock().unwrap().insert(key, value);
        value
    }

    fn search(&self, mut state: State, mut asg: Assignment) -> Option<Assignment> {
        // Resolve pendings whose free vars became assigned, propagate, repeat.
        loop {
            match state.propagate(&mut asg, self) {
                Err(()) => return None,
                Ok(true) => {}
                Ok(false) => break,
            }
        }

        // Branch on a pending disjunction if any remains.
        if let Some(pending) = state.pop_pending() {
            if let Node::Or(parts) = &*pending.formula.node {
                for part in parts {
                    let mut st = state.clone();
                    let a = asg.clone();
                    if st.push(part.clone(), &a, self).is_ok() {
                        if let Some(found) = self.search(st, a) {
                            return Some(found);
                        }
                    }
                }
                return None;
            }
            unreachable!("only Or nodes are ever pending");
        }

        // Pure system of constraints: branch on the tightest variable.
        let branch_var = state.pick_branch_var();
        match branch_var {
            None => {
                // All constraints ground-satisfied.
                Some(asg)
            }
            Some((v, dom)) => {
                let hi = match dom.hi {
                    Some(h) => h,
                    None => state.fallback_bound(),
                };
                for val in dom.lo..=hi {
                    let mut st = state.clone();
                    let mut a = asg.clone();
                    a.values.insert(v, val);
                    st.note_assigned(v);
                    if st.reground(&a).is_ok() {
                        if let Some(found) = self.search(st, a) {
                            return Some(found);
                        }
                    }
                }
                None
            }
        }
    }
}

#[derive(Default, Clone)]
struct State {
    constraints: Vec<Constraint>,
    tables: Vec<(Vec<Var>, Arc<TableRel>)>,
    pendings: Vec<Pending>,
    domains: BTreeMap<Var, Domain>,
    dirty: bool,
}

impl State {
    /// Decompose a formula into the state under the current assignment.
    /// Fails fast on definite falsity.
    fn push(&mut self, formula: Formula, asg: &Assignment, ev: &Evaluator) -> std::result::Result<(), ()> {
        match &*formula.node {
            Node::True => Ok(()),
            Node::False => Err(()),
            Node::Atom(atom) => match Constraint::from_atom(atom, asg) {
                Err(()) => Err(()),
                Ok(None) => Ok(()),
                Ok(Some(c)) => {
                    for &(v, _) in &c.coeffs {
                        self.domains.entry(v).or_insert(Domain::FULL);
                    }
                    self.constraints.push(c);
                    self.dirty = true;
                    Ok(())
                }
            },
            Node::Table { vars, rel } => {
                let values: Option<Vec<u64>> = vars.iter().map(|&v| asg.get(v)).collect();
                match values {
                    Some(point) => {
                        if rel.contains(&point) {
                            Ok(())
                        } else {
                            Err(())
                        }
                    }
                    None => {
                        for (i, &v) in vars.iter().enumerate() {
                            let d = self.domains.entry(v).or_insert(Domain::FULL);
                            let cap = rel.bounds[i];
                            d.hi = Some(d.hi.map_or(cap, |h| h.min(cap)));
                        }
                        self.tables.push((vars.clone(), rel.clone()));
                        self.dirty = true;
                        Ok(())
                    }
                }
            }
            Node::And(parts) => {
                for p in parts {
                    self.push(p.clone(), asg, ev)?;
                }
                Ok(())
            }
            Node::Or(_) => {
                // Closed disjunctions resolve by memoized evaluation.
                let fv = formula.free_vars();
                if fv.iter().all(|&v| asg.get(v).is_some()) {
                    if ev.eval_closed(&formula, asg) {
                        Ok(())
                    } else {
                        Err(())
                    }
                } else {
                    self.pendings.push(Pending { formula });
                    Ok(())
                }
            }
            Node::Exists(vars, body) => {
                for &v in vars {
                    self.domains.entry(v).or_insert(Domain::FULL);
                }
                self.push(body.clone(), asg, ev)
            }
        }
    }

    fn note_assigned(&mut self, _v: Var) {
        self.dirty = true;
    }

    /// Re-normalize constraints/tables against the assignment; detect ground
    /// violations.
    fn reground(&mut self, asg: &Assignment) -> std::result::Result<(), ()> {
        let mut kept = Vec::with_capacity(self.constraints.len());
        for c in self.constraints.drain(..) {
            let mut coeffs = Vec::with_capacity(c.coeffs.len());
            let mut bound = c.bound as i128;
            for (v, k) in c.coeffs {
                match asg.get(v) {
                    Some(val) => bound -= val as i128 * k as i128,
                    None => coeffs.push((v, k)),
                }
            }
            let bound = i64::try_from(bound).map_err(|_| ())?;
            if coeffs.is_empty() {
                let ok = match c.cmp {
                    Cmp::Eq => bound == 0,
                    Cmp::Le => bound >= 0,
                    Cmp::Ge => bound <= 0,
                };
                if !ok {
                    return Err(());
                }
            } else {
                kept.push(Constraint { coeffs, cmp: c.cmp, bound });
            }
        }
        self.constraints = kept;

        let mut kept_tables = Vec::with_capacity(self.tables.len());
        for (vars, rel) in self.tables.drain(..) {
            let values: Option<Vec<u64>> = vars.iter().map(|&v| asg.get(v)).collect();
            match values {
                Some(point) => {
                    if !rel.contains(&point) {
                        return Err(());
                    }
                }
                None => kept_tables.push((vars, rel)),
            }
        }
        self.tables = kept_tables;
        for (v, _) in asg.values.iter() {
            self.domains.remove(v);
        }
        self.dirty = true;
        Ok(())
    }

    /// One round of: resolve newly-closed pendings, then interval-propagate.
    /// Returns Ok(true) if anything changed.
    fn propagate(&mut self, asg: &mut Assignment, ev: &Evaluator) -> std::result::Result<bool, ()> {
        let mut changed = false;

        // Newly closed pendings resolve via memoized evaluation.
        let mut still_pending = Vec::with_capacity(self.pendings.len());
        for p in self.pendings.drain(..) {
            let fv = p.formula.free_vars();
            if fv.iter().all(|&v| asg.get(v).is_some()) {
                if !ev.eval_closed(&p.formula, asg) {
                    return Err(());
                }
                changed = true;
            } else {
                still_pending.push(p);
            }
        }
        self.pendings = still_pending;

        if !self.dirty && !changed {
            return Ok(false);
        }
        self.dirty = false;

        // Interval narrowing to fixpoint (bounded rounds).
        for _round in 0..64 {
            let mut narrowed = false;
            for ci in 0..self.constraints.len() {
                let c = self.constraints[ci].clone();
                narrowed |= self.narrow_with(&c)?;
            }
            // Fix any variables whose domain collapsed to a point.
            let fixed: Vec<(Var, u64)> = self
                .domains
                .iter()
                .filter_map(|(&v, d)| d.fixed().map(|val| (v, val)))
                .collect();
            if !fixed.is_empty() {
                for (v, val) in fixed {
                    asg.values.insert(v, val);
                }
                self.reground(asg)?;
                narrowed = true;
                changed = true;
            }
            if !narrowed {
                break;
            }
            changed = true;
        }
        Ok(changed)
    }

    /// Narrow domains using one constraint. Detects definite infeasibility.
    /// Bounds are tracked in an extended range where `None` means +∞ (for
    /// maxima) or −∞ (for minima).
    fn narrow_with(&mut self, c: &Constraint) -> std::result::Result<bool, ()> {
        // Contribution range of a single summand k·x over domain d.
        let contrib = |k: i64, d: Domain| -> (Option<i128>, Option<i128>) {
            // returns (min, max); None = unbounded in that direction
            if k >= 0 {
                (Some(k as i128 * d.lo as i128), d.hi.map(|h| k as i128 * h as i128))
            } else {
                (d.hi.map(|h| k as i128 * h as i128), Some(k as i128 * d.lo as i128))
            }
        };
        let dom = |s: &Self, v: Var| s.domains.get(&v).copied().unwrap_or(Domain::FULL);

        let ranges: Vec<(Option<i128>, Option<i128>)> =
            c.coeffs.iter().map(|&(v, k)| contrib(k, dom(self, v))).collect();
        let total_min: Option<i128> =
            ranges.iter().try_fold(0i128, |acc, r| r.0.map(|m| acc + m));
        let total_max: Option<i128> =
            ranges.iter().try_fold(0i128, |acc, r| r.1.map(|m| acc + m));

        // Definite violation checks.
        let b = c.bound as i128;
        match c.cmp {
            Cmp::Eq => {
                if let Some(mn) = total_min {
                    if mn > b {
                        return Err(());
                    }
                }
                if let Some(mx) = total_max {
                    if mx < b {
                        return Err(());
                    }
                }
                let g = c.coeffs.iter().fold(0i64, |g, &(_, k)| gcd(g, k.abs()));
                if g > 1 && c.bound.rem_euclid(g) != 0 {
                    return Err(());
                }
            }
            Cmp::Le => {
                if let Some(mn) = total_min {
                    if mn > b {
                        return Err(());
                    }
                }
            }
            Cmp::Ge => {
                if let Some(mx) = total_max {
                    if mx < b {
                        return Err(());
                    }
                }
            }
        }

        // Per-variable narrowing: bounds on k·x from bounds on the others.
        let mut any = false;
        for (i, &(v, k)) in c.coeffs.iter().enumerate() {
            let d = dom(self, v);
            let others_min: Option<i128> = c
                .coeffs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .try_fold(0i128, |acc, (j, _)| ranges[j].0.map(|m| acc + m));
            let others_max: Option<i128> = c
                .coeffs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .try_fold(0i128, |acc, (j, _)| ranges[j].1.map(|m| acc + m));

            let mut new_d = d;
            // Upper side: k·x ≤ bound − others_min  (for Le and Eq)
            if matches!(c.cmp, Cmp::Le | Cmp::Eq) {
                if let Some(omin) = others_min {
                    let slack = b - omin;
                    if k > 0 {
                        if slack < 0 {
                            return Err(());
                        }
                        let cap = (slack / k as i128).min(u64::MAX as i128) as u64;
                        new_d.hi = Some(new_d.hi.map_or(cap, |h| h.min(cap)));
                    } else if k < 0 {
                        // k·x ≤ slack, k<0 → x ≥ ceil(slack/k)
                        let need = div_ceil_i128(slack, k as i128);
                        if need > 0 {
                            new_d.lo = new_d.lo.max(need.min(u64::MAX as i128) as u64);
                        }
                    }
                }
            }
            // Lower side: k·x ≥ bound − others_max  (for Ge and Eq)
            if matches!(c.cmp, Cmp::Ge | Cmp::Eq) {
                if let Some(omax) = others_max {
                    let need = b - omax;
                    if k > 0 {
                        let lo = div_ceil_i128(need, k as i128);
                        if lo > 0 {
                            new_d.lo = new_d.lo.max(lo.min(u64::MAX as i128) as u64);
                        }
                    } else if k < 0 {
                        if need > 0 {
                            // k·x ≥ need > 0 impossible for x ≥ 0, k < 0
                            return Err(());
                        }
                        // k·x ≥ need → x ≤ floor(need/k) (both negative)
                        let cap = (need / k as i128).min(u64::MAX as i128) as u64;
                        new_d.hi = Some(new_d.hi.map_or(cap, |h| h.min(cap)));
                    }
                }
            }
            if let Some(h) = new_d.hi {
                if new_d.lo > h {
                    return Err(());
                }
            }
            if new_d != d {
                self.domains.insert(v, new_d);
                any = true;
            }
        }
        Ok(any)
    }

    fn pop_pending(&mut self) -> Option<Pending> {
        self.pendings.pop()
    }

    /// Choose the unassigned variable with the smallest domain that actually
    /// occurs in a constraint or table.
    fn pick_branch_var(&self) -> Option<(Var, Domain)> {
        let mut relevant: BTreeSet<Var> = BTreeSet::new();
        for c in &self.constraints {
            for &(v, _) in &c.coeffs {
                relevant.insert(v);
            }
        }
        for (vars, _) in &self.tables {
            relevant.extend(vars.iter().copied());
        }
        for p in &self.pendings {
            relevant.extend(p.formula.free_vars().iter().copied());
        }
        relevant
            .into_iter()
            .map(|v| (v, self.domains.get(&v).copied().unwrap_or(Domain::FULL)))
            .min_by_key(|(v, d)| (d.width().unwrap_or(u64::MAX), *v))
    }

    /// Small-solution bound used when propagation leaves a variable
    /// unbounded: if the accumulated system is feasible over the naturals it
    /// has a solution with every coordinate below this bound (standard
    /// integer-programming small-solution bound; see README notes).
    fn fallback_bound(&self) -> u64 {
        let n = self
            .constraints
            .iter()
            .flat_map(|c| c.coeffs.iter().map(|&(v, _)| v))
            .collect::<BTreeSet<_>>()
            .len() as u128;
        let m = self.constraints.len() as u128;
        let a = self
            .constraints
            .iter()
            .flat_map(|c| c.coeffs.iter().map(|&(_, k)| k.unsigned_abs() as u128))
            .max()
            .unwrap_or(1);
        let b = self.constraints.iter().map(|c| c.bound.unsigned_abs() as u128).max().unwrap_or(0);
        let base = (m + 2) * (a + b + 2);
        let exp = (m.min(n) + 1).min(12) as u32;
        base.saturating_pow(exp).min(u64::MAX as u128 / 2) as u64
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn div_ceil_i128(a: i128, b: i128) -> i128 {
    // ceil(a/b) for b != 0
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

// ---------------------------------------------------------------------------
// Semilinear sets in one dimension.
// ---------------------------------------------------------------------------

/// A finite union of arithmetic progressions `{base + i·period}`;
/// `period == 0` means the singleton `{base}`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SemilinearSet1D {
    pub pairs: Vec<(u64, u64)>,
}

impl SemilinearSet1D {
    pub fn new(mut pairs: Vec<(u64, u64)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        SemilinearSet1D { pairs }
    }

    pub fn empty() -> Self {
        SemilinearSet1D { pairs: Vec::new() }
    }

    pub fn contains(&self, n: u64) -> bool {
        self.pairs.iter().any(|&(base, period)| {
            if period == 0 {
                n == base
            } else {
                n >= base && (n - base) % period == 0
            }
        })
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Membership bitvector on `[0, bound]`.
    pub fn bitvector(&self, bound: u64) -> Vec<bool> {
        (0..=bound).map(|n| self.contains(n)).collect()
    }
}

impl fmt::Display for SemilinearSet1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .pairs
            .iter()
            .map(|&(b, p)| if p == 0 { format!("{{{}}}", b) } else { format!("{}+{}N", b, p) })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Outcome of the eventually-periodic hypothesis search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extraction {
    Set(SemilinearSet1D),
    Inconclusive,
}

/// Detect the least (threshold, period) consistent with a membership
/// bitvector, verify it on the trailing window, and report base/period pairs.
/// Sound: never returns a set that disagrees with the bitvector.
pub fn extract_semilinear_from_bits(bits: &[bool], verify_window: usize) -> Extraction {
    let n = bits.len();
    if n == 0 {
        return Extraction::Inconclusive;
    }
    if verify_window == 0 || verify_window > n {
        return Extraction::Inconclusive;
    }
    // Hypothesize smallest (period, threshold) lexicographically by period
    // then threshold, requiring the periodic tail to cover at least the
    // verification window.
    for period in 1..=n / 2 {
        // Largest threshold t such that bits[i] == bits[i+period] for all
        // i ≥ t with i+period < n; find minimal consistent t.
        let mut t = n - period;
        while t > 0 && bits[t - 1] == bits[t - 1 + period] {
            t -= 1;
        }
        // The hypothesis must be verified on a trailing window of fully
        // periodic behavior.
        if n - (t + period) >= verify_window {
            let mut pairs: Vec<(u64, u64)> = Vec::new();
            for (i, &b) in bits.iter().enumerate().take(t) {
                if b {
                    pairs.push((i as u64, 0));
                }
            }
            for i in t..t + period {
                if bits[i] {
                    pairs.push((i as u64, period as u64));
                }
            }
            let set = SemilinearSet1D::new(pairs);
            // Soundness audit on the probed window.
            if bits.iter().enumerate().all(|(i, &b)| set.contains(i as u64) == b) {
                return Extraction::Set(set);
            }
        }
    }
    Extraction::Inconclusive
}

/// Exact complement of an eventually periodic set, described by pairs again.
/// The input must be eventually periodic with a derivable threshold (as
/// produced by `extract_semilinear_from_bits`).
pub fn complement_1d(set: &SemilinearSet1D, _bound: u64) -> SemilinearSet1D {
    // Threshold: beyond the largest singleton and all periodic bases the set
    // is a union of full residue classes.
    let period = set.pairs.iter().map(|&(_, p)| p).filter(|&p| p > 0).fold(0u64, lcm);
    let period = if period == 0 { 1 } else { period };
    let threshold = set
        .pairs
        .iter()
        .map(|&(b, p)| if p == 0 { b + 1 } else { b })
        .max()
        .unwrap_or(0);
    let mut pairs = Vec::new();
    for n in 0..threshold {
        if !set.contains(n) {
            pairs.push((n, 0));
        }
    }
    for n in threshold..threshold + period {
        if !set.contains(n) {
            pairs.push((n, period));
        }
    }
    SemilinearSet1D::new(pairs)
}

fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 {
        b
    } else if b == 0 {
        a
    } else {
        a / gcd_u64(a, b) * b
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

// ---------------------------------------------------------------------------
// Emission: SMT-LIB and a native compact text form.
// ---------------------------------------------------------------------------

/// Render as an SMT-LIB term over `Int` with nonnegativity guards for bound
/// variables. Tables are expanded to explicit disjunctions (budget-guarded).
pub fn to_smtlib(formula: &Formula, pool: &VarPool, max_table_rows: u64) -> Result<String> {
    fn term(t: &LinearTerm, pool: &VarPool) -> String {
        let mut parts: Vec<String> = Vec::new();
        if t.constant != 0 || t.coefficients.is_empty() {
            parts.push(t.constant.to_string());
        }
        for (&v, &c) in &t.coefficients {
            if c == 1 {
                parts.push(pool.name(v).to_string());
            } else {
                parts.push(format!("(* {} {})", c, pool.name(v)));
            }
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            format!("(+ {})", parts.join(" "))
        }
    }
    fn go(f: &Formula, pool: &VarPool, max_rows: u64) -> Result<String> {
        Ok(match f.node() {
            Node::True => "true".into(),
            Node::False => "false".into(),
            Node::Atom(a) => {
                let op = match a.cmp {
                    Cmp::Eq => "=",
                    Cmp::Le => "<=",
                    Cmp::Ge => ">=",
                };
                format!("({} {} {})", op, term(&a.lhs, pool), term(&a.rhs, pool))
            }
            Node::Table { vars, rel } => {
                let rows = rel.materialize(max_rows)?;
                let mut disjuncts = Vec::with_capacity(rows.len());
                for row in rows {
                    let conj: Vec<String> = vars
                        .iter()
                        .zip(&row)
                        .map(|(&v, &c)| format!("(= {} {})", pool.name(v), c))
                        .collect();
                    disjuncts.push(format!("(and {})", conj.join(" ")));
                }
                if disjuncts.is_empty() {
                    "false".into()
                } else {
                    format!("(or {})", disjuncts.join(" "))
                }
            }
            Node::And(parts) => {
                let inner: Result<Vec<String>> = parts.iter().map(|p| go(p, pool, max_rows)).collect();
                format!("(and {})", inner?.join(" "))
            }
            Node::Or(parts) => {
                let inner: Result<Vec<String>> = parts.iter().map(|p| go(p, pool, max_rows)).collect();
                format!("(or {})", inner?.join(" "))
            }
            Node::Exists(vars, body) => {
                let binders: Vec<String> =
                    vars.iter().map(|&v| format!("({} Int)", pool.name(v))).collect();
                let guards: Vec<String> =
                    vars.iter().map(|&v| format!("(>= {} 0)", pool.name(v))).collect();
                format!(
                    "(exists ({}) (and {} {}))",
                    binders.join(" "),
                    guards.join(" "),
                    go(body, pool, max_rows)?
                )
            }
        })
    }
    go(formula, pool, max_table_rows)
}

/// Native compact text form (one-line, prefix operators).
pub fn to_compact(formula: &Formula, pool: &VarPool) -> String {
    fn term(t: &LinearTerm, pool: &VarPool) -> String {
        let mut parts: Vec<String> = Vec::new();
        if t.constant != 0 || t.coefficients.is_empty() {
            parts.push(t.constant.to_string());
        }
        for (&v, &c) in &t.coefficients {
            if c == 1 {
                parts.push(pool.name(v).to_string());
            } else {
                parts.push(format!("{}*{}", c, pool.name(v)));
            }
        }
        parts.join("+")
    }
    fn go(f: &Formula, pool: &VarPool, out: &mut String) {
        match f.node() {
            Node::True => out.push_str("true"),
            Node::False => out.push_str("false"),
            Node::Atom(a) => {
                let op = match a.cmp {
                    Cmp::Eq => "=",
                    Cmp::Le => "<=",
                    Cmp::Ge => ">=",
                };
                out.push_str(&format!("{} {} {}", term(&a.lhs, pool), op, term(&a.rhs, pool)));
            }
            Node::Table { vars, rel } => {
                let names: Vec<&str> = vars.iter().map(|&v| pool.name(v)).collect();
                out.push_str(&format!("{}({})", rel.name, names.join(",")));
            }
            Node::And(parts) => {
                out.push_str("and(");
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    go(p, pool, out);
                }
                out.push(')');
            }
            Node::Or(parts) => {
                out.push_str("or(");
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    go(p, pool, out);
                }
                out.push(')');
            }
            Node::Exists(vars, body) => {
                let names: Vec<&str> = vars.iter().map(|&v| pool.name(v)).collect();
                out.push_str(&format!("exists {} . ", names.join(" ")));
                go(body, pool, out);
            }
        }
    }
    let mut out = String::new();
    go(formula, pool, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev() -> Evaluator {
        Evaluator::new()
    }

    #[test]
    fn evenness() {
        // ∃Z (X = Z+Z)
        let mut pool = VarPool::new();
        let x = pool.fresh("X");
        let z = pool.fresh("Z");
        let f = Formula::exists(
            vec![z],
            Formula::atom(LinearTerm::var(x), Cmp::Eq, LinearTerm::scaled(z, 2)),
        );
        let e = ev();
        assert!(e.evaluate(&f, &BTreeMap::from([(x, 4)])));
        assert!(!e.evaluate(&f, &BTreeMap::from([(x, 5)])));
    }

    #[test]
    fn two_x_eq_three_y() {
        let mut pool = VarPool::new();
        let x = pool.fresh("X");
        let y = pool.fresh("Y");
        let f = Formula::atom(LinearTerm::scaled(x, 2), Cmp::Eq, LinearTerm::scaled(y, 3));
        let e = ev();
        assert!(e.evaluate(&f, &BTreeMap::from([(x, 3), (y, 2)])));
        assert!(!e.evaluate(&f, &BTreeMap::from([(x, 2), (y, 3)])));
    }

    #[test]
    fn disjunction_under_exists() {
        // ∃Z ((Z = 3 ∨ Z = 5) ∧ X = Z + 1)
        let mut pool = VarPool::new();
        let x = pool.fresh("X");
        let z = pool.fresh("Z");
        let f = Formula::exists(
            vec![z],
            Formula::and(vec![
                Formula::or(vec![Formula::var_eq_const(z, 3), Formula::var_eq_const(z, 5)]),
                Formula::atom(
                    LinearTerm::var(x),
                    Cmp::Eq,
                    LinearTerm::sum([LinearTerm::var(z), LinearTerm::constant(1)]),
                ),
            ]),
        );
        let e = ev();
        assert!(e.evaluate(&f, &BTreeMap::from([(x, 4)])));
        assert!(e.evaluate(&f, &BTreeMap::from([(x, 6)])));
        assert!(!e.evaluate(&f, &BTreeMap::from([(x, 5)])));
    }

    #[test]
    fn table_membership() {
        let mut pool = VarPool::new();
        let x = pool.fresh("X");
        let y = pool.fresh("Y");
        let rel = TableRel::materialized(
            "H",
            vec![10, 10],
            BTreeSet::from([vec![2, 2], vec![3, 3]]),
        );
        let f = Formula::table(vec![x, y], rel);
        let e = ev();
        assert!(e.evaluate(&f, &BTreeMap::from([(x, 2), (y, 2)])));
        assert!(!e.evaluate(&f, &BTreeMap::from([(x, 2), (y, 3)])));
    }

    #[test]
    fn infeasible_parity_detected() {
        // ∃Z (2Z = 2X + 1): never
        let mut pool = VarPool::new();
        let x = pool.fresh("X");
        let z = pool.fresh("Z");
        let mut rhs = LinearTerm::scaled(x, 2);
        rhs.add_const(1);
        let f = Formula::exists(vec![z], Formula::atom(LinearTerm::scaled(z, 2), Cmp::Eq, rhs));
        let e = ev();
        assert!(!e.evaluate(&f, &BTreeMap::from([(x, 7)])));
    }

    #[test]
    fn witness_extraction() {
        // ∃A ∃B (A + B = X ∧ A ≥ 2 ∧ B ≥ 3)
        let mut pool = VarPool::new();
        let x = pool.fresh("X");
        let a = pool.fresh("A");
        let b = pool.fresh("B");
        let f = Formula::exists(
            vec![a, b],
            Formula::and(vec![
                Formula::atom(
                    LinearTerm::sum([LinearTerm::var(a), LinearTerm::var(b)]),
                    Cmp::Eq,
                    LinearTerm::var(x),
                ),
                Formula::atom(LinearTerm::var(a), Cmp::Ge, LinearTerm::constant(2)),
                Formula::atom(LinearTerm::var(b), Cmp::Ge, LinearTerm::constant(3)),
            ]),
        );
        let e = ev();
        let sol = e.solve(&f, &BTreeMap::from([(x, 7)])).unwrap();
        assert_eq!(sol[&a] + sol[&b], 7);
        assert!(sol[&a] >= 2 && sol[&b] >= 3);
        assert!(e.solve(&f, &BTreeMap::from([(x, 4)])).is_none());
    }

    #[test]
    fn extract_progression() {
        // {2,5,8,...} probed to 60
        let bits: Vec<bool> = (0..=60u64).map(|n| n >= 2 && (n - 2) % 3 == 0).collect();
        match extract_semilinear_from_bits(&bits, 10) {
            Extraction::Set(s) => assert_eq!(s.pairs, vec![(2, 3)]),
            Extraction::Inconclusive => panic!("expected set"),
        }
    }

    #[test]
    fn extract_all_false_and_singleton() {
        let bits = vec![false; 40];
        assert_eq!(
            extract_semilinear_from_bits(&bits, 5),
            Extraction::Set(SemilinearSet1D::empty())
        );
        let mut bits = vec![false; 40];
        bits[0] = true;
        match extract_semilinear_from_bits(&bits, 5) {
            Extraction::Set(s) => {
                assert!(s.contains(0));
                assert!(!s.contains(1));
                assert!((1..40).all(|n| !s.contains(n)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn complement_examples() {
        // complement of 2+3N = {0,1} ∪ (3+3N) ∪ (4+3N)
        let s = SemilinearSet1D::new(vec![(2, 3)]);
        let c = complement_1d(&s, 100);
        for n in 0..100u64 {
            assert_eq!(c.contains(n), !s.contains(n), "n={}", n);
        }
        assert_eq!(c.pairs, vec![(0, 0), (1, 0), (3, 3), (4, 3)]);

        let empty = SemilinearSet1D::empty();
        let all = complement_1d(&empty, 50);
        assert!((0..50u64).all(|n| all.contains(n)));
        let none = complement_1d(&SemilinearSet1D::new(vec![(0, 1)]), 50);
        assert!(none.is_empty());
    }

    #[test]
    fn complement_involution_on_window() {
        let s = SemilinearSet1D::new(vec![(1, 0), (5, 4)]);
        let cc = complement_1d(&complement_1d(&s, 60), 60);
        for n in 0..60u64 {
            assert_eq!(cc.contains(n), s.contains(n), "n={}", n);
        }
    }

    #[test]
    fn smtlib_emission() {
        let mut pool = VarPool::new();
        let x = pool.fresh("X");
        let z = pool.fresh("Z");
        let f = Formula::exists(
            vec![z],
            Formula::atom(LinearTerm::var(x), Cmp::Eq, LinearTerm::scaled(z, 2)),
        );
        let text = to_smtlib(&f, &pool, 1000).unwrap();
        assert!(text.contains("(exists ((Z Int))"));
        assert!(text.contains("(= X (* 2 Z))"));
    }
}
