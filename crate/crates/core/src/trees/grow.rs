use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use crate::par::{self, Execution};

use super::data::TrainingSet;
use super::model::{Tree, TreeNode};

pub(crate) const NO_NODE: u32 = u32::MAX;

/// Split objective. Node statistics are additive over rows.
pub(crate) trait Criterion: Sync {
    type Stats: Copy + Default + Send + Sync;

    fn row(&self, r: usize) -> Self::Stats;
    fn add(acc: &mut Self::Stats, s: &Self::Stats);
    fn diff(total: &Self::Stats, part: &Self::Stats) -> Self::Stats;
    /// Whether a node is worth scanning at all.
    fn splittable(&self, node: &Self::Stats) -> bool;
    /// `None` when the children violate a size constraint.
    fn gain(&self, parent: &Self::Stats, left: &Self::Stats, right: &Self::Stats) -> Option<f64>;
    fn accept(&self, gain: f64) -> bool;
    fn leaf(&self, node: &Self::Stats) -> f64;
}

pub(crate) enum FeaturePick<'a> {
    All,
    Subset { k: usize, rng: &'a mut ChaCha8Rng },
}

pub(crate) struct Grown {
    pub tree: Tree,
    /// Leaf node index per row, `NO_NODE` for excluded rows.
    pub leaf_of: Vec<u32>,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    threshold: f64,
}

/// Midpoint of two consecutive distinct values such that `a < t <= b`.
#[inline]
pub(crate) fn split_threshold(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid > a && mid <= b {
        mid
    } else {
        b
    }
}

/// Sorted `(value, row, stats)` triples of one feature, grouped into one
/// contiguous segment per frontier node.
struct FeatureList<S> {
    values: Vec<f64>,
    rows: Vec<u32>,
    stats: Vec<S>,
}

pub(crate) fn grow<C: Criterion>(
    data: &TrainingSet,
    crit: &C,
    include: Option<&[bool]>,
    max_depth: usize,
    mut pick: FeaturePick<'_>,
    exec: Execution,
) -> Grown {
    let n = data.n_rows();
    let d = data.n_features();
    let included = |r: usize| include.is_none_or(|m| m[r]);
    let stats: Vec<C::Stats> = (0..n).map(|r| crit.row(r)).collect();
    let mut node_of = vec![NO_NODE; n];
    let mut leaf_of = vec![NO_NODE; n];
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];

    let mut root = C::Stats::default();
    let mut n_in = 0;
    for (r, slot) in node_of.iter_mut().enumerate() {
        if included(r) {
            *slot = 0;
            C::add(&mut root, &stats[r]);
            n_in += 1;
        }
    }
    let mut lists: Vec<FeatureList<C::Stats>> = par::map_range(exec, d, |f| {
        let col = data.column(f);
        let rows: Vec<u32> = data.order(f).iter().copied().filter(|&r| included(r as usize)).collect();
        FeatureList {
            values: rows.iter().map(|&r| col[r as usize]).collect(),
            stats: rows.iter().map(|&r| stats[r as usize]).collect(),
            rows,
        }
    });
    // (node index, stats) per frontier slot, and each slot's segment
    let mut frontier = vec![(0usize, root)];
    let mut segments = vec![(0usize, n_in)];

    for depth in 0.. {
        let m = frontier.len();
        let open: Vec<bool> = frontier.iter().map(|(_, s)| depth < max_depth && crit.splittable(s)).collect();
        let mut chosen: Vec<Option<(usize, f64)>> = vec![None; m];

        if open.iter().any(|&o| o) {
            let allowed: Vec<Vec<bool>> = match &mut pick {
                FeaturePick::All => vec![open.clone(); d],
                FeaturePick::Subset { k, rng } => {
                    let mut a = vec![vec![false; m]; d];
                    for (s, _) in open.iter().enumerate().filter(|(_, &o)| o) {
                        for f in index::sample(*rng, d, *k) {
                            a[f][s] = true;
                        }
                    }
                    a
                }
            };
            let totals: Vec<C::Stats> = frontier.iter().map(|(_, s)| *s).collect();
            let per_feature = par::map_range(exec, d, |f| scan(crit, &lists[f], &segments, &totals, &allowed[f]));

            for (s, slot) in chosen.iter_mut().enumerate() {
                let mut best: Option<(usize, Candidate)> = None;
                for (f, cands) in per_feature.iter().enumerate() {
                    if let Some(c) = cands[s] {
                        if best.is_none_or(|(_, b)| c.gain > b.gain) {
                            best = Some((f, c));
                        }
                    }
                }
                if let Some((f, c)) = best {
                    if crit.accept(c.gain) {
                        *slot = Some((f, c.threshold));
                    }
                }
            }
        }

        let mut next: Vec<(usize, C::Stats)> = Vec::new();
        let mut children = vec![(NO_NODE, NO_NODE); m];
        for (s, &(idx, stats)) in frontier.iter().enumerate() {
            match chosen[s] {
                Some((feature, threshold)) => {
                    let left = nodes.len();
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes[idx] = TreeNode::Split { feature, threshold, left, right: left + 1 };
                    children[s] = (next.len() as u32, next.len() as u32 + 1);
                    next.push((left, C::Stats::default()));
                    next.push((left + 1, C::Stats::default()));
                }
                None => nodes[idx] = TreeNode::Leaf { value: crit.leaf(&stats) },
            }
        }

        let mut sizes = vec![0usize; next.len()];
        for r in 0..n {
            let s = node_of[r];
            if s == NO_NODE {
                continue;
            }
            let s = s as usize;
            match chosen[s] {
                Some((f, thr)) => {
                    let c = if data.column(f)[r] < thr { children[s].0 } else { children[s].1 };
                    node_of[r] = c;
                    C::add(&mut next[c as usize].1, &stats[r]);
                    sizes[c as usize] += 1;
                }
                None => {
                    leaf_of[r] = frontier[s].0 as u32;
                    node_of[r] = NO_NODE;
                }
            }
        }

        if next.is_empty() {
            break;
        }
        if depth + 1 >= max_depth || !next.iter().any(|(_, st)| crit.splittable(st)) {
            for r in 0..n {
                let c = node_of[r];
                if c != NO_NODE {
                    leaf_of[r] = next[c as usize].0 as u32;
                }
            }
            for &(idx, st) in &next {
                nodes[idx] = TreeNode::Leaf { value: crit.leaf(&st) };
            }
            break;
        }
        segments.clear();
        let mut start = 0;
        for &len in &sizes {
            segments.push((start, start + len));
            start += len;
        }
        let starts: Vec<usize> = segments.iter().map(|s| s.0).collect();
        lists = par::map(exec, &lists, |l| regroup(l, &node_of, &starts, start));
        frontier = next;
    }

    Grown { tree: Tree::from_nodes(nodes), leaf_of }
}

/// Stable counting scatter of a feature list into the new frontier's
/// segments, dropping rows that reached a leaf.
fn regroup<S: Copy + Default>(list: &FeatureList<S>, node_of: &[u32], starts: &[usize], len: usize) -> FeatureList<S> {
    let mut pos = starts.to_vec();
    let mut values = vec![0.0; len];
    let mut rows = vec![0u32; len];
    let mut stats = vec![S::default(); len];
    for ((&v, &r), s) in list.values.iter().zip(&list.rows).zip(&list.stats) {
        let c = node_of[r as usize];
        if c != NO_NODE {
            let p = &mut pos[c as usize];
            values[*p] = v;
            rows[*p] = r;
            stats[*p] = *s;
            *p += 1;
        }
    }
    FeatureList { values, rows, stats }
}

/// Best split of every allowed frontier node on one feature.
fn scan<C: Criterion>(
    crit: &C,
    list: &FeatureList<C::Stats>,
    segments: &[(usize, usize)],
    totals: &[C::Stats],
    allowed: &[bool],
) -> Vec<Option<Candidate>> {
    let mut best: Vec<Option<Candidate>> = vec![None; segments.len()];
    for (s, &(lo, hi)) in segments.iter().enumerate() {
        if !allowed[s] || hi - lo < 2 {
            continue;
        }
        let values = &list.values[lo..hi];
        let stats = &list.stats[lo..hi];
        let total = &totals[s];
        let mut left = C::Stats::default();
        C::add(&mut left, &stats[0]);
        let mut prev = values[0];
        let mut found: Option<Candidate> = None;
        for (&v, st) in values[1..].iter().zip(&stats[1..]) {
            if v > prev {
                let right = C::diff(total, &left);
                if let Some(g) = crit.gain(total, &left, &right) {
                    if g.is_finite() && found.is_none_or(|b| g > b.gain) {
                        found = Some(Candidate { gain: g, threshold: split_threshold(prev, v) });
                    }
                }
            }
            C::add(&mut left, st);
            prev = v;
        }
        best[s] = found;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_separates() {
        assert_eq!(split_threshold(1.0, 2.0), 1.5);
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let t = split_threshold(a, b);
        assert!(a < t && t <= b);
        assert_eq!(split_threshold(0.0, 5e-324), 5e-324);
    }
}
