//! Index assignments `T`, permutations `sigma` of `Range(T)`, and the
//! classification of the resulting `(T, sigma)`-graphs.
//!
//! Vertices are the slots `(i, j)` of `m` tuples of length `k`. Black edges
//! join consecutive slots of one tuple, solid red edges join slots carrying
//! the same label, and dotted red edges join slots whose labels `p != q`
//! satisfy `sigma(p) = q` or `sigma(q) = p`. Labels are kept in canonical
//! first-use order, so each equivalence class under relabeling has exactly
//! one representative.

use std::fmt::{self, Write as _};

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_M: usize = 4;
pub const MAX_K: usize = 3;
/// Largest `|T|` for which every permutation of the range is enumerated.
pub const MAX_SIGMA_SIZE: usize = 8;

fn guard(m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 || m > MAX_M || k > MAX_K {
        return Err(Error::SizeGuard(format!(
            "(m, k) = ({m}, {k}) is outside 1 <= m <= {MAX_M}, 1 <= k <= {MAX_K}"
        )));
    }
    Ok(())
}

/// Canonical representative of an equivalence class of maps `[m] -> [km]^k_*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TAssignment {
    m: usize,
    k: usize,
    size: usize,
    labels: Vec<u8>,
}

impl TAssignment {
    /// Canonicalizes arbitrary labels by order of first use.
    pub fn from_labels(tuples: &[Vec<usize>]) -> Result<Self> {
        let m = tuples.len();
        let k = tuples.first().map_or(0, Vec::len);
        if m == 0 || k == 0 {
            return Err(Error::Structure("an assignment needs at least one non-empty tuple".into()));
        }
        let mut map: Vec<(usize, u8)> = Vec::new();
        let mut labels = Vec::with_capacity(m * k);
        for t in tuples {
            if t.len() != k {
                return Err(Error::Structure("all tuples must have the same length".into()));
            }
            if t.iter().duplicates().next().is_some() {
                return Err(Error::Structure(format!("tuple {t:?} repeats an index")));
            }
            for &x in t {
                let id = match map.iter().find(|p| p.0 == x) {
                    Some(p) => p.1,
                    None => {
                        let id = map.len() as u8;
                        map.push((x, id));
                        id
                    }
                };
                labels.push(id);
            }
        }
        Ok(Self { m, k, size: map.len(), labels })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `|T|`, the number of distinct labels.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn tuple(&self, i: usize) -> &[u8] {
        &self.labels[i * self.k..(i + 1) * self.k]
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[u8]> {
        self.labels.chunks(self.k)
    }

    /// Tuples containing each label.
    pub fn occurrences(&self) -> Vec<Vec<usize>> {
        let mut occ = vec![Vec::new(); self.size];
        for (v, &q) in self.labels.iter().enumerate() {
            occ[q as usize].push(v / self.k);
        }
        occ
    }

    /// Component of each label in the `T`-graph, and the component count.
    pub fn label_components(&self) -> (Vec<usize>, usize) {
        let mut uf = UnionFind::new(self.size);
        for t in self.tuples() {
            for w in t.windows(2) {
                uf.union(w[0] as usize, w[1] as usize);
            }
        }
        uf.labels()
    }
}

impl fmt::Display for TAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.tuples() {
            write!(f, "({})", t.iter().map(|q| q + 1).join(","))?;
        }
        Ok(())
    }
}

/// Calls `visit` on each canonical assignment, building tuples slot by slot
/// and allowing either a used label (absent from the current tuple) or the
/// next fresh one.
pub fn for_each_class(m: usize, k: usize, mut visit: impl FnMut(&TAssignment)) -> Result<()> {
    guard(m, k)?;
    let mut t = TAssignment { m, k, size: 0, labels: vec![0; m * k] };
    fn rec(t: &mut TAssignment, pos: usize, next: u8, visit: &mut dyn FnMut(&TAssignment)) {
        if pos == t.labels.len() {
            t.size = next as usize;
            visit(t);
            return;
        }
        let start = pos - pos % t.k;
        for l in 0..=next {
            if t.labels[start..pos].contains(&l) {
                continue;
            }
            t.labels[pos] = l;
            rec(t, pos + 1, if l == next { next + 1 } else { next }, visit);
        }
    }
    rec(&mut t, 0, 0, &mut visit);
    Ok(())
}

/// All canonical assignments for `(m, k)`.
pub fn enumerate_classes(m: usize, k: usize) -> Result<Vec<TAssignment>> {
    let mut out = Vec::new();
    for_each_class(m, k, |t| out.push(t.clone()))?;
    Ok(out)
}

#[derive(Debug, Clone)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut ids = vec![usize::MAX; n];
        let mut out = vec![0; n];
        let mut count = 0;
        for x in 0..n {
            let r = self.find(x);
            if ids[r] == usize::MAX {
                ids[r] = count;
                count += 1;
            }
            out[x] = ids[r];
        }
        (out, count)
    }
}

/// A permutation of `0..n`, stored as its image vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// From disjoint cycles over `0..n` (0-based).
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut map: Vec<usize> = (0..n).collect();
        let mut seen = vec![false; n];
        for c in cycles {
            for (idx, &x) in c.iter().enumerate() {
                if x >= n || seen[x] {
                    return Err(Error::Structure(format!("invalid cycle {c:?} on {n} labels")));
                }
                seen[x] = true;
                map[x] = c[(idx + 1) % c.len()];
            }
        }
        Ok(Self(map))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (x, &y) in self.0.iter().enumerate() {
            inv[y] = x;
        }
        Self(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(x, &y)| x == y)
    }

    /// `a(sigma)`, the number of moved points.
    pub fn moved(&self) -> usize {
        self.0.iter().enumerate().filter(|&(x, &y)| x != y).count()
    }

    /// Cycles including fixed points, each starting at its least element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut c = vec![s];
            seen[s] = true;
            let mut x = self.0[s];
            while x != s {
                seen[x] = true;
                c.push(x);
                x = self.0[x];
            }
            out.push(c);
        }
        out
    }

    pub fn sign(&self) -> i32 {
        let even_cycles = self.cycles().iter().filter(|c| c.len() % 2 == 0).count();
        if even_cycles % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Cycle notation with 1-based labels, `id` for the identity.
    pub fn cycle_notation(&self) -> String {
        let mut s = String::new();
        for c in self.cycles().iter().filter(|c| c.len() > 1) {
            let _ = write!(s, "({})", c.iter().map(|x| x + 1).join(" "));
        }
        if s.is_empty() {
            s.push_str("id");
        }
        s
    }
}

/// Whether the `(T, sigma)`-graph is connected; works at label level since
/// all slots of one tuple are joined by black edges.
pub fn is_connected(t: &TAssignment, sigma: &Permutation) -> bool {
    let mut uf = UnionFind::new(t.size);
    for tu in t.tuples() {
        for w in tu.windows(2) {
            uf.union(w[0] as usize, w[1] as usize);
        }
    }
    for (x, &y) in sigma.0.iter().enumerate() {
        uf.union(x, y);
    }
    let r = uf.find(0);
    (1..t.size).all(|x| uf.find(x) == r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Flags {
    pub connected: bool,
    pub reducible: bool,
    pub circle_like: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    /// `|T|`.
    pub size: usize,
    /// `a(sigma)`.
    pub moved: usize,
    pub sign: i32,
    /// `M(i, j)`: number of tuples containing `T_{i,j}`.
    pub multiplicity: Vec<Vec<usize>>,
    /// `Delta(i, j)`: whether `sigma` moves `T_{i,j}`.
    pub moved_slot: Vec<Vec<bool>>,
}

/// The cyclic order of a circle-like graph: tuple `i` leaves through slot
/// `ends[i].1` into slot `ends[next[i]].0` of tuple `next[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CircleStructure {
    pub next: Vec<usize>,
    pub ends: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct TSigmaGraph {
    pub t: TAssignment,
    pub sigma: Permutation,
    pub flags: Flags,
    pub stats: GraphStats,
    pub circle: Option<CircleStructure>,
}

/// A red neighbor of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    tuple: usize,
    label: usize,
}

fn red_neighbors(t: &TAssignment, occ: &[Vec<usize>], sigma: &Permutation, inv: &Permutation, at: Slot) -> Vec<Slot> {
    let q = at.label;
    let mut out: Vec<Slot> = occ[q].iter().filter(|&&i| i != at.tuple).map(|&i| Slot { tuple: i, label: q }).collect();
    let s = sigma.apply(q);
    if s != q {
        out.extend(occ[s].iter().map(|&i| Slot { tuple: i, label: s }));
        let r = inv.apply(q);
        if r != s {
            out.extend(occ[r].iter().map(|&i| Slot { tuple: i, label: r }));
        }
    }
    let _ = t;
    out
}

/// Classifies one `(T, sigma)` pair. `sigma` must act on `0..|T|`.
pub fn classify(t: &TAssignment, sigma: &Permutation) -> Result<TSigmaGraph> {
    if sigma.len() != t.size {
        return Err(Error::Structure(format!(
            "sigma acts on {} labels but |T| = {}",
            sigma.len(),
            t.size
        )));
    }
    let (m, k) = (t.m, t.k);
    let occ = t.occurrences();
    let inv = sigma.inverse();
    let connected = is_connected(t, sigma);

    let mut multiplicity = vec![vec![0; k]; m];
    let mut moved_slot = vec![vec![false; k]; m];
    let mut neighbors: Vec<Vec<Vec<Slot>>> = vec![vec![Vec::new(); k]; m];
    for i in 0..m {
        for (j, &q) in t.tuple(i).iter().enumerate() {
            let q = q as usize;
            multiplicity[i][j] = occ[q].len();
            moved_slot[i][j] = sigma.apply(q) != q;
            neighbors[i][j] = red_neighbors(t, &occ, sigma, &inv, Slot { tuple: i, label: q });
        }
    }
    let is_connection = |i: usize, j: usize| neighbors[i][j].iter().any(|s| s.tuple != i);

    let mut reducible = false;
    if connected {
        'outer: for i in 0..m {
            let points: Vec<usize> = (0..k).filter(|&j| is_connection(i, j)).collect();
            if points.len() == 1 {
                let j0 = points[0];
                if (0..k).filter(|&j| j != j0).all(|j| !moved_slot[i][j]) {
                    reducible = true;
                    break 'outer;
                }
            }
        }
    }

    let mut circle = None;
    if connected && !reducible {
        circle = circle_structure(t, &neighbors);
    }
    Ok(TSigmaGraph {
        t: t.clone(),
        sigma: sigma.clone(),
        flags: Flags { connected, reducible, circle_like: circle.is_some() },
        stats: GraphStats { size: t.size, moved: sigma.moved(), sign: sigma.sign(), multiplicity, moved_slot },
        circle,
    })
}

fn circle_structure(t: &TAssignment, neighbors: &[Vec<Vec<Slot>>]) -> Option<CircleStructure> {
    let (m, k) = (t.m, t.k);
    let mut red_slots = Vec::with_capacity(m);
    for i in 0..m {
        let slots: Vec<usize> = (0..k).filter(|&j| !neighbors[i][j].is_empty()).collect();
        if slots.len() != 2 {
            return None;
        }
        for &j in &slots {
            if neighbors[i][j].len() != 1 || neighbors[i][j][0].tuple == i {
                return None;
            }
        }
        red_slots.push((slots[0], slots[1]));
    }
    let slot_of = |s: Slot| t.tuple(s.tuple).iter().position(|&q| q as usize == s.label).unwrap();
    // Walk the contracted cycle starting from tuple 0.
    let mut next = vec![usize::MAX; m];
    let mut ends = vec![(0, 0); m];
    let (mut i, mut entry) = (0usize, red_slots[0].0);
    for _ in 0..m {
        let (a, b) = red_slots[i];
        let exit = if entry == a { b } else { a };
        ends[i] = (entry, exit);
        let nb = neighbors[i][exit][0];
        if next[i] != usize::MAX {
            return None;
        }
        next[i] = nb.tuple;
        entry = slot_of(nb);
        i = nb.tuple;
    }
    if i != 0 || entry != ends[0].0 || next.contains(&usize::MAX) {
        return None;
    }
    Some(CircleStructure { next, ends })
}

impl TSigmaGraph {
    /// `km - |T| + a(sigma)`.
    pub fn tree_lhs(&self) -> usize {
        self.t.m * self.t.k - self.t.size + self.stats.moved
    }

    /// `m - 1 + 1[sigma != id]`.
    pub fn tree_rhs(&self) -> usize {
        self.t.m - 1 + usize::from(self.stats.moved > 0)
    }

    /// `2 (km - |T|) + a(sigma)`, twice the left side of the irreducible bound.
    pub fn dm_lhs_twice(&self) -> usize {
        2 * (self.t.m * self.t.k - self.t.size) + self.stats.moved
    }

    /// `sum_{i,j} (M-1)/M + Delta/(2M)`.
    pub fn slot_sum(&self) -> f64 {
        let mut s = 0.0;
        for (mi, di) in self.stats.multiplicity.iter().zip(&self.stats.moved_slot) {
            for (&mm, &dd) in mi.iter().zip(di) {
                let mf = mm as f64;
                s += (mf - 1.0) / mf + if dd { 0.5 / mf } else { 0.0 };
            }
        }
        s
    }

    /// One census line: `T`, `sigma`, flags, `|T|`, `a(sigma)`.
    pub fn census_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.t,
            self.sigma.cycle_notation(),
            u8::from(self.flags.connected),
            u8::from(self.flags.reducible),
            u8::from(self.flags.circle_like),
            self.stats.size,
            self.stats.moved
        )
    }
}

pub const CENSUS_HEADER: &str = "T\tsigma\tconnected\treducible\tcircle_like\tsize\tmoved";

/// Visits every connected `(T, sigma)` with all permutations of the range
/// enumerated; requires `km <= 8` so that `|T| <= 8`.
pub fn for_each_connected(m: usize, k: usize, mut visit: impl FnMut(&TSigmaGraph)) -> Result<()> {
    guard(m, k)?;
    if m * k > MAX_SIGMA_SIZE {
        return Err(Error::SizeGuard(format!(
            "(m, k) = ({m}, {k}) admits |T| = {} > {MAX_SIGMA_SIZE}; use inequality_sweep for this range",
            m * k
        )));
    }
    let mut err = None;
    for_each_class(m, k, |t| {
        if err.is_some() {
            return;
        }
        for p in (0..t.size).permutations(t.size) {
            let sigma = Permutation(p);
            if !is_connected(t, &sigma) {
                continue;
            }
            match classify(t, &sigma) {
                Ok(g) => visit(&g),
                Err(e) => err = Some(e),
            }
        }
    })?;
    err.map_or(Ok(()), Err)
}

/// The set of connected pairs, materialized.
pub fn enumerate_connected(m: usize, k: usize) -> Result<Vec<TSigmaGraph>> {
    let mut out = Vec::new();
    for_each_connected(m, k, |g| out.push(g.clone()))?;
    Ok(out)
}

/// Tab-separated census of the connected pairs, with a header line.
pub fn census_tsv(m: usize, k: usize) -> Result<String> {
    let mut s = String::from(CENSUS_HEADER);
    s.push('\n');
    for_each_connected(m, k, |g| {
        s.push_str(&g.census_line());
        s.push('\n');
    })?;
    Ok(s)
}

/// Outcome of [`inequality_sweep`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub m: usize,
    pub k: usize,
    pub classes: usize,
    /// Pairs that were actually examined.
    pub pairs_examined: u64,
    pub tree_violations: u64,
    pub irreducible_violations: u64,
    pub circle_like: u64,
    /// Circle-like graphs found off the equality `km - |T| + a/2 = m`.
    pub circle_off_equality: u64,
}

impl SweepReport {
    pub fn clean(&self) -> bool {
        self.tree_violations == 0 && self.irreducible_violations == 0 && self.circle_off_equality == 0
    }
}

/// Exhaustive search for violations of the tree bound
/// `km - |T| + a >= m - 1 + 1[sigma != id]` over connected pairs and of
/// `km - |T| + a/2 >= m` over irreducible ones (`m >= 2`).
///
/// Both left sides grow with `a(sigma)`, so only permutations with few moved
/// points can violate them: for each class the search visits every `sigma`
/// whose support is small enough to matter (at most `2(m + |T| - km)` moved
/// points) and, when the `T`-graph has several components, whose support
/// meets all of them, which connectivity requires. The equality level is
/// included so that circle-like graphs are counted as well.
pub fn inequality_sweep(m: usize, k: usize) -> Result<SweepReport> {
    let mut rep = SweepReport { m, k, ..Default::default() };
    let km = (m * k) as i64;
    let mi = m as i64;
    for_each_class(m, k, |t| {
        rep.classes += 1;
        let s = t.size;
        let si = s as i64;
        let (comp, ncomp) = t.label_components();
        // sigma = id: connected iff the T-graph is.
        let id = Permutation::identity(s);
        let tree_thr = mi + si - km; // violation iff a < tree_thr (sigma != id)
        let dm_thr = 2 * (mi + si - km); // violation iff a < dm_thr (irreducible)
        let check = |sigma: &Permutation, rep: &mut SweepReport| {
            rep.pairs_examined += 1;
            if !is_connected(t, sigma) {
                return;
            }
            let a = sigma.moved() as i64;
            let rhs = mi - 1 + i64::from(a > 0);
            if km - si + a < rhs {
                rep.tree_violations += 1;
            }
            if m >= 2 && a <= dm_thr {
                let g = classify(t, sigma).expect("sigma has the right size");
                if !g.flags.reducible {
                    if a < dm_thr {
                        rep.irreducible_violations += 1;
                    }
                    if g.flags.circle_like {
                        rep.circle_like += 1;
                        if a != dm_thr {
                            rep.circle_off_equality += 1;
                        }
                    }
                }
            }
        };
        check(&id, &mut rep);
        let a_max = ((tree_thr - 1).max(dm_thr)).min(si);
        for a in 2..=a_max.max(0) as usize {
            for support in (0..s).combinations(a) {
                if ncomp > 1 {
                    let mut hit = vec![false; ncomp];
                    support.iter().for_each(|&x| hit[comp[x]] = true);
                    if hit.iter().any(|h| !h) {
                        continue;
                    }
                }
                for img in support.iter().copied().permutations(a) {
                    if support.iter().zip(&img).any(|(x, y)| x == y) {
                        continue;
                    }
                    let mut map: Vec<usize> = (0..s).collect();
                    for (&x, &y) in support.iter().zip(&img) {
                        map[x] = y;
                    }
                    check(&Permutation(map), &mut rep);
                }
            }
        }
    })?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t_of(v: &[&[usize]]) -> TAssignment {
        TAssignment::from_labels(&v.iter().map(|t| t.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn class_counts() {
        for k in 1..=3 {
            assert_eq!(enumerate_classes(1, k).unwrap().len(), 1);
        }
        assert_eq!(enumerate_classes(2, 1).unwrap().len(), 2);
        assert_eq!(enumerate_classes(2, 2).unwrap().len(), 7);
        assert_eq!(enumerate_classes(3, 2).unwrap().len(), 87);
        assert_eq!(enumerate_classes(4, 1).unwrap().len(), 15);
        assert!(enumerate_classes(5, 1).is_err());
        assert!(enumerate_classes(2, 4).is_err());
    }

    #[test]
    fn equivalent_assignments_share_a_canonical_form() {
        let t = t_of(&[&[1, 2], &[1, 4], &[2, 4]]);
        let t2 = t_of(&[&[1, 3], &[1, 6], &[3, 6]]);
        let t3 = t_of(&[&[1, 2], &[1, 4], &[5, 6]]);
        assert_eq!(t, t2);
        assert_ne!(t, t3);
        assert_eq!(t.size(), 3);
        assert_eq!(t.to_string(), "(1,2)(1,3)(2,3)");
        assert!(TAssignment::from_labels(&[vec![1, 1]]).is_err());
    }

    #[test]
    fn worked_examples() {
        let t = t_of(&[&[1, 2], &[1, 4], &[2, 4]]);
        let g = classify(&t, &Permutation::identity(3)).unwrap();
        assert!(g.flags.connected && !g.flags.reducible);
        assert!(g.flags.circle_like);
        let tpp = t_of(&[&[1, 2], &[1, 4], &[5, 6]]);
        // Labels 1, 2, 4, 5, 6 become 0, 1, 2, 3, 4.
        let g = classify(&tpp, &Permutation::identity(5)).unwrap();
        assert!(!g.flags.connected);
        let s = Permutation::from_cycles(5, &[&[0, 3]]).unwrap();
        let g = classify(&tpp, &s).unwrap();
        assert!(g.flags.connected && g.flags.reducible);
        assert!(classify(&tpp, &Permutation::identity(4)).is_err());
    }

    #[test]
    fn circle_structure_of_the_triangle() {
        let t = t_of(&[&[1, 2], &[1, 4], &[2, 4]]);
        let g = classify(&t, &Permutation::identity(3)).unwrap();
        let c = g.circle.unwrap();
        let mut i = 0;
        let mut seen = vec![false; 3];
        for _ in 0..3 {
            seen[i] = true;
            i = c.next[i];
        }
        assert_eq!(i, 0);
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn connected_pairs_for_two_points() {
        let g = enumerate_connected(2, 1).unwrap();
        assert_eq!(g.len(), 2);
        let sizes: Vec<(usize, String)> = g.iter().map(|g| (g.stats.size, g.sigma.cycle_notation())).collect();
        assert!(sizes.contains(&(1, "id".into())));
        assert!(sizes.contains(&(2, "(1 2)".into())));
    }

    #[test]
    fn circle_like_count_for_pairs() {
        let n = enumerate_connected(2, 2).unwrap().iter().filter(|g| g.flags.circle_like).count();
        assert_eq!(n, 8);
    }

    #[test]
    fn slot_identity_and_inequalities_on_small_sets() {
        for (m, k) in [(2, 1), (3, 1), (4, 1), (2, 2), (3, 2), (2, 3)] {
            for_each_connected(m, k, |g| {
                let lhs2 = g.dm_lhs_twice() as f64 / 2.0;
                assert!((lhs2 - g.slot_sum()).abs() < 1e-12);
                assert!(g.tree_lhs() >= g.tree_rhs());
                if !g.flags.reducible {
                    assert!(g.dm_lhs_twice() >= 2 * m);
                }
                if g.flags.circle_like {
                    assert_eq!(g.dm_lhs_twice(), 2 * m);
                }
            })
            .unwrap();
        }
    }

    #[test]
    fn sweep_agrees_with_full_enumeration() {
        for (m, k) in [(2, 2), (3, 2), (2, 3), (4, 1)] {
            let rep = inequality_sweep(m, k).unwrap();
            assert!(rep.clean(), "{rep:?}");
            let full = enumerate_connected(m, k).unwrap().iter().filter(|g| g.flags.circle_like).count();
            assert_eq!(rep.circle_like as usize, full, "({m}, {k})");
        }
    }

    #[test]
    fn permutation_basics() {
        let p = Permutation::from_cycles(5, &[&[0, 2, 4]]).unwrap();
        assert_eq!(p.moved(), 3);
        assert_eq!(p.sign(), 1);
        assert_eq!(p.cycle_notation(), "(1 3 5)");
        assert_eq!(Permutation::from_cycles(3, &[&[0, 1]]).unwrap().sign(), -1);
        assert!(Permutation::identity(4).is_identity());
    }
}
