//! The tree of iterated endomorphism rings of maximal ideals.
//!
//! Every node is a local ring. A node that is not a product of discrete
//! valuation rings has `S = End(𝔪)` computed as a colon lattice; `S` splits into
//! local factors along its idempotents and each factor becomes a child. Leaves
//! are copies of `F[[t]]`, and the depth of the tree is the chain length `n`.

use std::sync::Arc;

use serde::Serialize;

use crate::curve_ring::CurveRing;
use crate::error::{Error, Result};
use crate::lattice::{hom_lattice, Lattice};

pub const DEFAULT_DEPTH_CAP: usize = 64;

/// `End_R(𝔪)` as a subring of `K`.
pub fn end_of_maximal_ideal(ring: &Arc<CurveRing>) -> Result<Arc<CurveRing>> {
    if !ring.is_local() {
        return Err(Error::NotLocal {
            blocks: ring.branch_idempotents().len(),
        });
    }
    if ring.is_dvr_product() {
        return Err(Error::AlreadyNormal);
    }
    let m = Lattice::radical_of(ring);
    let s = hom_lattice(&m, &m).lattice.as_ring()?;
    if s.same_ring(ring) {
        return Err(Error::ChainDiverged(0));
    }
    Ok(s)
}

#[derive(Clone, Debug)]
pub struct ChainNode {
    pub ring: Arc<CurveRing>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
    /// `End(𝔪)` of this node, before splitting.
    pub endo: Option<Arc<CurveRing>>,
}

#[derive(Clone, Debug)]
pub struct ChainTree {
    pub nodes: Vec<ChainNode>,
    /// Set when the tree was cut below its natural leaves.
    pub truncated: bool,
}

impl ChainTree {
    pub fn build(ring: &Arc<CurveRing>) -> Result<ChainTree> {
        Self::build_with_cap(ring, DEFAULT_DEPTH_CAP)
    }

    pub fn build_with_cap(ring: &Arc<CurveRing>, cap: usize) -> Result<ChainTree> {
        if !ring.is_local() {
            return Err(Error::NotLocal {
                blocks: ring.branch_idempotents().len(),
            });
        }
        let mut nodes = vec![ChainNode {
            ring: ring.clone(),
            parent: None,
            children: Vec::new(),
            depth: 0,
            endo: None,
        }];
        let mut next = 0;
        while next < nodes.len() {
            let id = next;
            next += 1;
            let r = nodes[id].ring.clone();
            if r.is_dvr_product() {
                continue;
            }
            if nodes[id].depth >= cap {
                return Err(Error::ChainDiverged(cap));
            }
            let s = end_of_maximal_ideal(&r)?;
            if s.delta() >= r.delta() {
                return Err(Error::ChainDiverged(nodes[id].depth));
            }
            for block in s.branch_idempotents() {
                let child = if block.len() == s.branches() {
                    s.clone()
                } else {
                    s.factor(&block)?
                };
                let cid = nodes.len();
                nodes.push(ChainNode {
                    ring: child,
                    parent: Some(id),
                    children: Vec::new(),
                    depth: nodes[id].depth + 1,
                    endo: None,
                });
                nodes[id].children.push(cid);
            }
            nodes[id].endo = Some(s);
        }
        Ok(ChainTree {
            nodes,
            truncated: false,
        })
    }

    pub fn root(&self) -> &Arc<CurveRing> {
        &self.nodes[0].ring
    }

    /// Longest number of strict inclusions from the root to a leaf.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ChainNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    /// Copy of the tree without nodes deeper than `depth`.
    pub fn truncate(&self, depth: usize) -> ChainTree {
        let keep: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].depth <= depth)
            .collect();
        let remap = |i: usize| keep.iter().position(|&k| k == i);
        let nodes = keep
            .iter()
            .map(|&i| {
                let n = &self.nodes[i];
                ChainNode {
                    ring: n.ring.clone(),
                    parent: n.parent.and_then(remap),
                    children: n.children.iter().filter_map(|&c| remap(c)).collect(),
                    depth: n.depth,
                    endo: n.endo.clone(),
                }
            })
            .collect();
        ChainTree {
            nodes,
            truncated: depth < self.depth(),
        }
    }

    /// `None` when the leaves multiply out to the normalization; otherwise a reason.
    pub fn normalization_diagnostic(&self) -> Option<String> {
        let mut covered: Vec<usize> = Vec::new();
        for leaf in self.leaves() {
            if !leaf.ring.is_dvr_product() {
                return Some(format!(
                    "leaf on branches {:?} is not normal (delta {})",
                    leaf.ring.support(),
                    leaf.ring.delta()
                ));
            }
            covered.extend_from_slice(leaf.ring.support());
        }
        covered.sort_unstable();
        if covered != self.root().support() {
            return Some(format!("leaves cover branches {covered:?}"));
        }
        None
    }

    pub fn normalization_check(&self) -> bool {
        self.normalization_diagnostic().is_none()
    }

    /// Every edge is a strict inclusion: delta drops from a node to its children.
    pub fn strictness_check(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.children.is_empty()
                || n.children.iter().map(|&c| self.nodes[c].ring.delta()).sum::<usize>() < n.ring.delta()
        })
    }

    /// Deduplicated node rings in breadth-first order, root first.
    pub fn family(&self) -> EFamily {
        let mut members: Vec<Arc<CurveRing>> = Vec::new();
        for n in &self.nodes {
            if !members.iter().any(|m| m.same_ring(&n.ring)) {
                members.push(n.ring.clone());
            }
        }
        EFamily {
            root: self.root().clone(),
            members,
        }
    }

    /// Structural summary used for reports and determinism checks.
    pub fn summary(&self) -> ChainSummary {
        ChainSummary {
            n: self.depth(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSummary {
                    parent: n.parent,
                    depth: n.depth,
                    branches: n.ring.support().to_vec(),
                    description: describe(&n.ring),
                    conductor: n.ring.conductor().to_vec(),
                    delta: n.ring.delta(),
                    multiplicity: n.ring.report().map(|r| r.multiplicity).unwrap_or(0),
                    is_dvr_product: n.ring.is_dvr_product(),
                    endo_blocks: n.endo.as_ref().map(|s| s.branch_idempotents()),
                })
                .collect(),
            normalization_check: self.normalization_check(),
            strict: self.strictness_check(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeSummary {
    pub parent: Option<usize>,
    pub depth: usize,
    pub branches: Vec<usize>,
    pub description: String,
    pub conductor: Vec<i64>,
    pub delta: usize,
    pub multiplicity: usize,
    pub is_dvr_product: bool,
    pub endo_blocks: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainSummary {
    pub n: usize,
    pub nodes: Vec<NodeSummary>,
    pub normalization_check: bool,
    pub strict: bool,
}

/// Short human-readable name: the value semigroup for one branch, otherwise
/// the branch set with conductor and delta.
pub fn describe(ring: &CurveRing) -> String {
    if ring.branches() == 1 {
        let gens = ring.value_semigroup_generators();
        let list: Vec<String> = gens.iter().map(|g| g.to_string()).collect();
        format!("<{}> on branch {}", list.join(","), ring.support()[0])
    } else {
        format!(
            "branches {:?}, conductor {:?}, delta {}",
            ring.support(),
            ring.conductor(),
            ring.delta()
        )
    }
}

/// The family of rings met in the chain tree, including the root.
#[derive(Clone, Debug)]
pub struct EFamily {
    pub root: Arc<CurveRing>,
    pub members: Vec<Arc<CurveRing>>,
}

impl EFamily {
    /// Each member as a rank-one lattice over the root.
    pub fn as_lattices(&self) -> Vec<Lattice> {
        self.members
            .iter()
            .map(|m| Lattice::of_ring(m, self.root.clone()))
            .collect()
    }

    /// `M = ⊕ S` over the members.
    pub fn representation_module(&self) -> Lattice {
        Lattice::direct_sum_all(self.root.clone(), &self.as_lattices())
    }

    pub fn index_of(&self, ring: &CurveRing) -> Option<usize> {
        self.members.iter().position(|m| m.same_ring(ring))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::series::{BranchVector, LaurentPoly};

    fn q() -> FieldSpec {
        FieldSpec::Rational
    }

    fn sg(g: &[u64]) -> Arc<CurveRing> {
        CurveRing::semigroup(q(), g).unwrap()
    }

    fn node() -> Arc<CurveRing> {
        let t = LaurentPoly::t_pow(q(), 1);
        let z = LaurentPoly::zero();
        CurveRing::build(
            q(),
            2,
            vec![BranchVector(vec![t.clone(), z.clone()]), BranchVector(vec![z, t])],
        )
        .unwrap()
    }

    #[test]
    fn endomorphism_rings() {
        assert!(end_of_maximal_ideal(&sg(&[2, 3])).unwrap().is_dvr_product());
        assert!(end_of_maximal_ideal(&sg(&[2, 5])).unwrap().same_ring(&sg(&[2, 3])));
        let e = end_of_maximal_ideal(&node()).unwrap();
        assert_eq!(e.branch_idempotents(), vec![vec![0], vec![1]]);
        assert!(matches!(end_of_maximal_ideal(&sg(&[1])), Err(Error::AlreadyNormal)));
    }

    #[test]
    fn chain_lengths() {
        assert_eq!(ChainTree::build(&sg(&[1])).unwrap().depth(), 0);
        assert_eq!(ChainTree::build(&sg(&[2, 3])).unwrap().depth(), 1);
        let t = ChainTree::build(&sg(&[2, 5])).unwrap();
        assert_eq!(t.depth(), 2);
        assert!(t.normalization_check());
        assert!(t.strictness_check());
        assert_eq!(t.family().members.len(), 3);
        let nt = ChainTree::build(&node()).unwrap();
        assert_eq!(nt.depth(), 1);
        assert_eq!(nt.leaves().count(), 2);
        assert!(nt.normalization_check());
        assert_eq!(nt.family().members.len(), 3);
    }

    #[test]
    fn truncated_tree_fails_check() {
        let t = ChainTree::build(&sg(&[2, 5])).unwrap().truncate(1);
        assert!(t.truncated);
        assert!(!t.normalization_check());
        assert!(t.normalization_diagnostic().unwrap().contains("not normal"));
        assert!(matches!(
            ChainTree::build_with_cap(&sg(&[2, 5]), 1),
            Err(Error::ChainDiverged(1))
        ));
    }

    #[test]
    fn representation_module_ranks() {
        let fam = ChainTree::build(&sg(&[2, 3])).unwrap().family();
        let m = fam.representation_module();
        assert_eq!(m.rank(), 2);
        assert_eq!(m.minimal_generators().unwrap().len(), 3);
        let fam = ChainTree::build(&sg(&[1])).unwrap().family();
        assert_eq!(fam.representation_module(), Lattice::of_ring(&sg(&[1]), sg(&[1])));
    }

    #[test]
    fn descriptions() {
        assert_eq!(describe(&sg(&[3, 4, 5])), "<3,4,5> on branch 0");
        let t = ChainTree::build(&sg(&[3, 4])).unwrap();
        let names: Vec<String> = t.nodes.iter().map(|n| describe(&n.ring)).collect();
        assert_eq!(
            names,
            vec!["<3,4> on branch 0", "<3,4,5> on branch 0", "<1> on branch 0"]
        );
    }
}
