//! Control-flow utilities: reverse postorder, dominator tree, frontiers.

use std::collections::BTreeSet;

use crate::ir::{Code, Location};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomInfo {
    /// Immediate dominator per block; `None` for the entry and unreachable blocks.
    pub idom: Vec<Option<usize>>,
    pub frontier: Vec<BTreeSet<usize>>,
    /// Reachable blocks in reverse postorder.
    pub rpo: Vec<usize>,
    pub preds: Vec<Vec<usize>>,
    pub succs: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
    rpo_index: Vec<Option<usize>>,
    pre: Vec<usize>,
    post: Vec<usize>,
}

pub fn compute_dominators(code: &Code) -> DomInfo {
    dominators_from_edges(&code.successors())
}

/// Dominator information for a graph given as successor lists; block 0 is the entry.
pub fn dominators_from_edges(succs: &[Vec<usize>]) -> DomInfo {
    let n = succs.len();
    let mut preds = vec![Vec::new(); n];
    for (b, ss) in succs.iter().enumerate() {
        for &s in ss {
            if !preds[s].contains(&b) {
                preds[s].push(b);
            }
        }
    }

    // Iterative DFS for postorder.
    let mut post_order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    if n > 0 {
        let mut stack = vec![(0usize, 0usize)];
        seen[0] = true;
        while let Some(&mut (b, ref mut k)) = stack.last_mut() {
            if *k < succs[b].len() {
                let s = succs[b][*k];
                *k += 1;
                if !seen[s] {
                    seen[s] = true;
                    stack.push((s, 0));
                }
            } else {
                post_order.push(b);
                stack.pop();
            }
        }
    }
    let rpo: Vec<usize> = post_order.iter().rev().copied().collect();
    let mut rpo_index = vec![None; n];
    for (i, &b) in rpo.iter().enumerate() {
        rpo_index[b] = Some(i);
    }

    // Cooper, Harvey, Kennedy.
    let mut idom: Vec<Option<usize>> = vec![None; n];
    if n > 0 {
        idom[0] = Some(0);
    }
    let intersect = |idom: &[Option<usize>], mut a: usize, mut b: usize| -> usize {
        while a != b {
            while rpo_index[a] > rpo_index[b] {
                a = idom[a].unwrap();
            }
            while rpo_index[b] > rpo_index[a] {
                b = idom[b].unwrap();
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &b in rpo.iter().skip(1) {
            let mut new: Option<usize> = None;
            for &p in &preds[b] {
                if idom[p].is_none() {
                    continue;
                }
                new = Some(match new {
                    None => p,
                    Some(cur) => intersect(&idom, p, cur),
                });
            }
            if new.is_some() && idom[b] != new {
                idom[b] = new;
                changed = true;
            }
        }
    }
    if n > 0 {
        idom[0] = None;
    }

    let mut children = vec![Vec::new(); n];
    for &b in &rpo {
        if let Some(d) = idom[b] {
            children[d].push(b);
        }
    }

    let mut frontier = vec![BTreeSet::new(); n];
    for &b in &rpo {
        let reachable_preds: Vec<usize> = preds[b].iter().copied().filter(|p| rpo_index[*p].is_some()).collect();
        if reachable_preds.len() < 2 && !(b == 0 && !reachable_preds.is_empty()) {
            continue;
        }
        for p in reachable_preds {
            let mut runner = Some(p);
            while let Some(r) = runner {
                if Some(r) == idom[b] {
                    break;
                }
                frontier[r].insert(b);
                runner = idom[r];
            }
        }
    }

    // Pre/post numbering of the dominator tree for constant-time queries.
    let mut pre = vec![usize::MAX; n];
    let mut post = vec![usize::MAX; n];
    if n > 0 {
        let mut clock = 0;
        let mut stack = vec![(0usize, 0usize)];
        pre[0] = clock;
        clock += 1;
        while let Some(&mut (b, ref mut k)) = stack.last_mut() {
            if *k < children[b].len() {
                let c = children[b][*k];
                *k += 1;
                pre[c] = clock;
                clock += 1;
                stack.push((c, 0));
            } else {
                post[b] = clock;
                clock += 1;
                stack.pop();
            }
        }
    }

    DomInfo { idom, frontier, rpo, preds, succs: succs.to_vec(), children, rpo_index, pre, post }
}

impl DomInfo {
    pub fn is_reachable(&self, b: usize) -> bool {
        self.rpo_index[b].is_some()
    }

    /// Reflexive block dominance.
    pub fn block_dominates(&self, a: usize, b: usize) -> bool {
        if !self.is_reachable(a) || !self.is_reachable(b) {
            return false;
        }
        self.pre[a] <= self.pre[b] && self.post[b] <= self.post[a]
    }

    pub fn block_strictly_dominates(&self, a: usize, b: usize) -> bool {
        a != b && self.block_dominates(a, b)
    }

    /// Strict dominance between instruction locations.
    pub fn dominates(&self, a: Location, b: Location) -> bool {
        if a.block == b.block {
            a.index < b.index && self.is_reachable(a.block)
        } else {
            self.block_strictly_dominates(a.block, b.block)
        }
    }

    /// Iterated dominance frontier of a set of blocks.
    pub fn iterated_frontier(&self, blocks: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut work: Vec<usize> = blocks.into_iter().collect();
        while let Some(b) = work.pop() {
            for &f in &self.frontier[b] {
                if out.insert(f) {
                    work.push(f);
                }
            }
        }
        out
    }
}

pub fn dominates(dom: &DomInfo, a: Location, b: Location) -> bool {
    dom.dominates(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block() {
        let d = dominators_from_edges(&[vec![]]);
        assert_eq!(d.idom, vec![None]);
        assert!(d.frontier[0].is_empty());
    }

    #[test]
    fn diamond() {
        let d = dominators_from_edges(&[vec![1, 2], vec![3], vec![3], vec![]]);
        assert_eq!(d.idom[3], Some(0));
        assert_eq!(d.frontier[1], BTreeSet::from([3]));
        assert_eq!(d.frontier[2], BTreeSet::from([3]));
        assert!(d.frontier[0].is_empty());
    }

    #[test]
    fn loop_frontier_contains_header() {
        // 0 -> 1 (header) -> 2 (body) -> 1, 1 -> 3
        let d = dominators_from_edges(&[vec![1], vec![2, 3], vec![1], vec![]]);
        assert_eq!(d.frontier[2], BTreeSet::from([1]));
        assert_eq!(d.frontier[1], BTreeSet::from([1]));
        assert_eq!(d.idom[3], Some(1));
    }

    #[test]
    fn strict_location_dominance() {
        let d = dominators_from_edges(&[vec![1], vec![]]);
        let l = Location::new(0, 2);
        assert!(!d.dominates(l, l));
        assert!(d.dominates(Location::new(0, 1), l));
        assert!(d.dominates(Location::new(0, 5), Location::new(1, 0)));
        assert!(!d.dominates(Location::new(1, 0), Location::new(0, 5)));
    }

    #[test]
    fn unreachable_blocks_have_no_idom() {
        let d = dominators_from_edges(&[vec![], vec![0]]);
        assert!(!d.is_reachable(1));
        assert_eq!(d.idom[1], None);
    }
}
