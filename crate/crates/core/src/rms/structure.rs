use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::partial::PartialPermutation;
use crate::cmono::Permutation;

/// One value of `G_k`: the ordered images reachable from the increasing tuple `q`.
/// Labels are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GEntry {
    pub q: Vec<usize>,
    pub images: Vec<Vec<usize>>,
}

/// Tuples sharing one image set; only groups that move something are listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListingGroup {
    pub qs: Vec<Vec<usize>>,
    pub images: Vec<Vec<usize>>,
}

/// The maps `G_1..G_R`; `g[k - 1]` holds one entry per increasing `k`-tuple, in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealMonodromyStructure {
    pub r: usize,
    pub g: Vec<Vec<GEntry>>,
}

/// Increasing `k`-subsets of `{1..n}` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..=n {
            if n + 1 - x < k - cur.len() {
                break;
            }
            cur.push(x);
            rec(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(1, n, k, &mut cur, &mut out);
    out
}

fn falling_factorial(n: usize, k: usize) -> usize {
    (n + 1 - k..=n).product()
}

impl RealMonodromyStructure {
    /// `G_k(Q)` collects `(pi(q_1), ..., pi(q_k))` over closure elements `pi`
    /// (0-based, on `r` labels) whose domain contains `Q`. The identity is
    /// always included.
    pub fn build(elements: &[PartialPermutation], r: usize) -> Self {
        let mut sets: Vec<BTreeMap<Vec<usize>, BTreeSet<Vec<usize>>>> =
            (1..=r).map(|k| combinations(r, k).into_iter().map(|q| (q.clone(), BTreeSet::from([q]))).collect()).collect();
        for pi in elements {
            if pi.source() != r || pi.target() != r {
                continue;
            }
            let dom = pi.domain();
            for mask in 1u64..1 << dom.len() {
                let q: Vec<usize> = dom.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect();
                let img: Vec<usize> = q.iter().map(|&i| pi.get(i).expect("in domain") + 1).collect();
                let q1: Vec<usize> = q.iter().map(|i| i + 1).collect();
                sets[q.len() - 1].get_mut(&q1).expect("all tuples present").insert(img);
            }
        }
        let g =
            sets.into_iter().map(|m| m.into_iter().map(|(q, imgs)| GEntry { q, images: imgs.into_iter().collect() }).collect()).collect();
        RealMonodromyStructure { r, g }
    }

    /// The same structure after renaming label `i` to `sigma[i - 1]` (1-based).
    pub fn relabel(&self, sigma: &[usize]) -> Self {
        let g = self
            .g
            .iter()
            .map(|row| {
                let mut out: Vec<GEntry> = row
                    .iter()
                    .map(|e| {
                        let mapped: Vec<usize> = e.q.iter().map(|&x| sigma[x - 1]).collect();
                        let mut order: Vec<usize> = (0..mapped.len()).collect();
                        order.sort_by_key(|&m| mapped[m]);
                        let q = order.iter().map(|&m| mapped[m]).collect();
                        let mut images: Vec<Vec<usize>> =
                            e.images.iter().map(|s| order.iter().map(|&m| sigma[s[m] - 1]).collect()).collect();
                        images.sort();
                        GEntry { q, images }
                    })
                    .collect();
                out.sort_by(|a, b| a.q.cmp(&b.q));
                out
            })
            .collect();
        RealMonodromyStructure { r: self.r, g }
    }

    pub fn entry(&self, q: &[usize]) -> Option<&GEntry> {
        let row = self.g.get(q.len().checked_sub(1)?)?;
        row.binary_search_by(|e| e.q.as_slice().cmp(q)).ok().map(|i| &row[i])
    }

    /// `G_k(Q)` is all ordered `k`-tuples of distinct labels, for every `Q`.
    pub fn is_k_transitive(&self, k: usize) -> bool {
        if k == 0 || k > self.r {
            return false;
        }
        let full = falling_factorial(self.r, k);
        self.g[k - 1].iter().all(|e| e.images.len() == full)
    }

    /// Permutations realized on all `R` labels, read from `G_R`.
    pub fn real_monodromy_group(&self) -> Vec<Permutation> {
        if self.r == 0 {
            return vec![Permutation::identity(0)];
        }
        let e = &self.g[self.r - 1][0];
        e.images
            .iter()
            .map(|img| Permutation::new(img.iter().map(|x| x - 1).collect()).expect("image of the full tuple is a permutation"))
            .collect()
    }

    /// Unordered pairs `{i, j}` with `{j}` in `G_1({i})`.
    pub fn assembly_mode_changes(&self) -> Vec<(usize, usize)> {
        let mut out = BTreeSet::new();
        if let Some(g1) = self.g.first() {
            for e in g1 {
                for img in &e.images {
                    if img[0] != e.q[0] {
                        out.insert((e.q[0].min(img[0]), e.q[0].max(img[0])));
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Nontrivial part of `G_k`, grouping tuples with identical image sets.
    pub fn listing(&self, k: usize) -> Vec<ListingGroup> {
        let mut groups: BTreeMap<Vec<Vec<usize>>, Vec<Vec<usize>>> = BTreeMap::new();
        for e in &self.g[k - 1] {
            if e.images.len() > 1 || e.images[0] != e.q {
                groups.entry(e.images.clone()).or_default().push(e.q.clone());
            }
        }
        let mut out: Vec<ListingGroup> = groups.into_iter().map(|(images, qs)| ListingGroup { qs, images }).collect();
        out.sort_by(|a, b| a.qs[0].cmp(&b.qs[0]));
        out
    }

    /// Labels grouped by behaviour: nontrivial `G_1` orbits; labels that occur
    /// in some nontrivial entry but only ever map to themselves; and all labels
    /// that every `G_k` leaves fixed.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut involved = BTreeSet::new();
        for k in 1..=self.r {
            for grp in self.listing(k) {
                for q in &grp.qs {
                    involved.extend(q.iter().copied());
                }
            }
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut inert = Vec::new();
        for i in 1..=self.r {
            if seen.contains(&i) {
                continue;
            }
            let orbit: Vec<usize> = self.entry(&[i]).map(|e| e.images.iter().map(|v| v[0]).collect()).unwrap_or_default();
            seen.extend(orbit.iter().copied());
            if orbit.len() == 1 && !involved.contains(&i) {
                inert.push(i);
            } else {
                out.push(orbit);
            }
        }
        if !inert.is_empty() {
            out.push(inert);
        }
        out.sort();
        out
    }

    /// Every position-restriction of every recorded image appears in the
    /// corresponding lower `G_j`.
    pub fn is_downward_consistent(&self) -> bool {
        for row in &self.g {
            for e in row {
                for img in &e.images {
                    let k = e.q.len();
                    for mask in 1u64..(1 << k) - 1 {
                        let pos: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).collect();
                        let q: Vec<usize> = pos.iter().map(|&p| e.q[p]).collect();
                        let s: Vec<usize> = pos.iter().map(|&p| img[p]).collect();
                        if !self.entry(&q).is_some_and(|lower| lower.images.contains(&s)) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Bullet layout: nontrivial groups per `G_k`, with the trivial rest elided.
    pub fn report(&self) -> String {
        let set = |v: &[usize]| format!("{{{}}}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        let generic = |k: usize| set_str((1..=k).map(|i| format!("q{i}")).collect());
        fn set_str(v: Vec<String>) -> String {
            format!("{{{}}}", v.join(","))
        }
        let mut s = String::new();
        for k in 1..=self.r {
            let _ = writeln!(s, "G_{k}");
            let groups = self.listing(k);
            for grp in &groups {
                let qs: Vec<String> = grp.qs.iter().map(|q| set(q)).collect();
                let imgs: Vec<String> = grp.images.iter().map(|q| set(q)).collect();
                let _ = writeln!(s, "  {} -> {{{}}}", qs.join(","), imgs.join(","));
            }
            let g = generic(k);
            let listed: usize = groups.iter().map(|grp| grp.qs.len()).sum();
            if groups.is_empty() {
                let _ = writeln!(s, "  {g} -> {{{g}}}");
            } else if listed < self.g[k - 1].len() {
                let _ = writeln!(s, "  {g} -> {{{g}}} for all others");
            }
        }
        let parts: Vec<String> = self.partition().iter().map(|p| set(p)).collect();
        let _ = writeln!(s, "partition: {}", parts.join(" | "));
        s
    }
}
