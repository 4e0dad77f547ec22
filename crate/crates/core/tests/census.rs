//! Graph census counts against a brute-force recount over restricted growth
//! strings, plus frozen counts too large to recount here.

use itertools::Itertools;
use spheredpp::graphs::{enumerate_classes, enumerate_connected, inequality_sweep};

/// Label assignments of `m` tuples of `k` slots, distinct within each tuple,
/// up to relabelling.
fn restricted_growth(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn grow(m: usize, k: usize, cur: &mut Vec<usize>, top: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m * k {
            out.push(cur.clone());
            return;
        }
        let start = cur.len() - cur.len() % k;
        for label in 0..=top {
            if cur[start..].contains(&label) {
                continue;
            }
            cur.push(label);
            grow(m, k, cur, top.max(label + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    grow(m, k, &mut Vec::new(), 0, &mut out);
    out
}

fn find(p: &mut [usize], x: usize) -> usize {
    if p[x] != x {
        let r = find(p, p[x]);
        p[x] = r;
    }
    p[x]
}

fn connected_count(m: usize, k: usize) -> usize {
    let mut total = 0;
    for labels in restricted_growth(m, k) {
        let size = labels.iter().max().unwrap() + 1;
        let owners: Vec<Vec<usize>> = (0..size).map(|q| (0..m * k).filter(|&s| labels[s] == q).map(|s| s / k).collect()).collect();
        for sigma in (0..size).permutations(size) {
            let mut parent: Vec<usize> = (0..m).collect();
            for q in 0..size {
                for &t in owners[q].iter().chain(&owners[sigma[q]]) {
                    let (a, b) = (find(&mut parent, owners[q][0]), find(&mut parent, t));
                    parent[a] = b;
                }
            }
            let root = find(&mut parent, 0);
            if (0..m).all(|t| find(&mut parent, t) == root) {
                total += 1;
            }
        }
    }
    total
}

#[test]
fn class_counts_match_recount() {
    for (m, k) in [(1, 2), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3), (4, 1), (4, 2)] {
        assert_eq!(enumerate_classes(m, k).unwrap().len(), restricted_growth(m, k).len(), "m = {m}, k = {k}");
    }
}

#[test]
fn connected_counts_match_recount() {
    for (m, k) in [(1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 1)] {
        assert_eq!(enumerate_connected(m, k).unwrap().len(), connected_count(m, k), "m = {m}, k = {k}");
    }
}

#[test]
fn frozen_census() {
    let want = [
        (2, 2, 7, 8),
        (2, 3, 34, 72),
        (3, 2, 87, 64),
        (3, 3, 2971, 1728),
        (4, 1, 15, 0),
        (4, 2, 1657, 768),
    ];
    for (m, k, classes, circle) in want {
        let r = inequality_sweep(m, k).unwrap();
        assert_eq!((r.classes, r.circle_like), (classes, circle), "m = {m}, k = {k}");
        assert!(r.clean());
    }
}

#[test]
fn large_class_count() {
    assert_eq!(restricted_growth(4, 3).len(), 513_559);
}
