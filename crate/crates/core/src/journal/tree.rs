use serde::Serialize;

use super::SolutionRun;

/// Position in a merged tree: slot 0 is the synthetic root, slot `i + 1`
/// holds node `i`.
pub type Slot = usize;

/// A run's forest joined under one synthetic root (N + 1 slots).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergedTree {
    parent: Vec<Option<Slot>>,
    children: Vec<Vec<Slot>>,
    depth: Vec<usize>,
}

impl MergedTree {
    pub const ROOT: Slot = 0;

    pub fn from_run(run: &SolutionRun) -> Self {
        let n = run.len() + 1;
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0; n];
        // parents precede children, so one pass in id order suffices and
        // children lists come out sorted by step id
        for node in run.nodes() {
            let slot = node.id + 1;
            let p = node.parent_id.map_or(Self::ROOT, |pid| pid + 1);
            parent[slot] = Some(p);
            children[p].push(slot);
            depth[slot] = depth[p] + 1;
        }
        MergedTree {
            parent,
            children,
            depth,
        }
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn slot_of(node_id: usize) -> Slot {
        node_id + 1
    }

    pub fn node_of(slot: Slot) -> Option<usize> {
        slot.checked_sub(1)
    }

    pub fn children(&self, slot: Slot) -> &[Slot] {
        &self.children[slot]
    }

    pub fn parent(&self, slot: Slot) -> Option<Slot> {
        self.parent[slot]
    }

    pub fn depth(&self, slot: Slot) -> usize {
        self.depth[slot]
    }

    /// Depth of a journal node (drafts are at depth 1).
    pub fn node_depth(&self, node_id: usize) -> usize {
        self.depth[node_id + 1]
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn is_leaf(&self, slot: Slot) -> bool {
        self.children[slot].is_empty()
    }

    pub fn descendant_count(&self, slot: Slot) -> usize {
        let mut stack = self.children[slot].clone();
        let mut count = 0;
        while let Some(s) = stack.pop() {
            count += 1;
            stack.extend_from_slice(&self.children[s]);
        }
        count
    }

    /// Ancestors of a slot from its parent up to the root.
    pub fn ancestors(&self, slot: Slot) -> impl Iterator<Item = Slot> + '_ {
        std::iter::successors(self.parent[slot], move |&s| self.parent[s])
    }
}

pub fn merge_forest(run: &SolutionRun) -> MergedTree {
    MergedTree::from_run(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::journal::testing::*;
    use crate::journal::MetricDirection;

    #[test]
    fn thirty_nodes_three_drafts() {
        let nodes = (0..30)
            .map(|i| {
                let parent = if i < 3 { None } else { Some(i % 3) };
                node(i, parent, None, "")
            })
            .collect();
        let run = SolutionRun::new("r", config(30, 3, MetricDirection::LowerBetter), nodes).unwrap();
        let tree = merge_forest(&run);
        assert_eq!(tree.len(), 31);
        assert_eq!(tree.children(MergedTree::ROOT), &[1, 2, 3]);
        assert_eq!(tree.descendant_count(MergedTree::ROOT), 30);
    }

    #[test]
    fn empty_run_is_lone_root() {
        let run = SolutionRun::new("r", config(3, 1, MetricDirection::LowerBetter), vec![]).unwrap();
        let tree = merge_forest(&run);
        assert_eq!(tree.len(), 1);
        assert!(tree.is_leaf(MergedTree::ROOT));
        assert_eq!(tree.max_depth(), 0);
    }

    #[test]
    fn five_drafts_form_a_star() {
        let nodes = (0..5).map(|i| node(i, None, None, "")).collect();
        let run = SolutionRun::new("r", config(5, 5, MetricDirection::LowerBetter), nodes).unwrap();
        let tree = merge_forest(&run);
        assert_eq!(tree.children(MergedTree::ROOT).len(), 5);
        assert_eq!(tree.max_depth(), 1);
    }

    #[test]
    fn depth_follows_parent_chain() {
        let nodes = vec![
            node(0, None, None, ""),
            node(1, Some(0), None, ""),
            node(2, Some(1), Some(1.0), ""),
        ];
        let run = SolutionRun::new("r", config(3, 1, MetricDirection::LowerBetter), nodes).unwrap();
        let tree = merge_forest(&run);
        assert_eq!(tree.node_depth(2), 3);
        assert_eq!(tree.ancestors(3).collect::<Vec<_>>(), vec![2, 1, 0]);
    }
}
