use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::rates::BlockCounts;
use crate::{Error, Result};

/// Ground-set element `(ty, index)`: the `index`-th individual of type `ty`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    pub ty: usize,
    pub index: usize,
}

impl Element {
    pub fn new(ty: usize, index: usize) -> Self {
        Self { ty, index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypedBlock {
    /// Sorted, non-empty.
    pub members: Vec<Element>,
    pub colour: usize,
}

/// A `d`-type partition: disjoint coloured blocks covering a ground set.
///
/// Blocks are kept in canonical order (sorted by least member), so two
/// partitions are equal iff they have the same blocks and colours.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TypedPartition {
    d: usize,
    blocks: Vec<TypedBlock>,
}

impl TypedPartition {
    pub fn new(d: usize, blocks: Vec<TypedBlock>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut canon = Vec::with_capacity(blocks.len());
        for mut b in blocks {
            if b.members.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            if b.colour >= d {
                return Err(Error::InvalidPartition(format!("colour {} out of range for d = {d}", b.colour)));
            }
            for e in &b.members {
                if e.ty >= d {
                    return Err(Error::InvalidPartition(format!("element type {} out of range", e.ty)));
                }
                if !seen.insert(*e) {
                    return Err(Error::InvalidPartition(format!("element {e:?} in two blocks")));
                }
            }
            b.members.sort_unstable();
            canon.push(b);
        }
        if canon.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        canon.sort_unstable_by_key(|b| b.members[0]);
        Ok(Self { d, blocks: canon })
    }

    /// Singleton blocks `{(i, p)}` of colour `i`, for `p < n_i`.
    pub fn singletons(n: &BlockCounts) -> Result<Self> {
        let blocks = n
            .0
            .iter()
            .enumerate()
            .flat_map(|(ty, &c)| (0..c).map(move |p| TypedBlock { members: vec![Element::new(ty, p)], colour: ty }))
            .collect();
        Self::new(n.dim(), blocks)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> &[TypedBlock] {
        &self.blocks
    }

    pub fn ground_set(&self) -> Vec<Element> {
        let mut g: Vec<Element> = self.blocks.iter().flat_map(|b| b.members.iter().copied()).collect();
        g.sort_unstable();
        g
    }

    /// Number of blocks of each colour.
    pub fn counts(&self) -> BlockCounts {
        let mut c = BlockCounts::zeros(self.d);
        for b in &self.blocks {
            c.0[b.colour] += 1;
        }
        c
    }

    /// Restriction to `subset`: blocks intersected, empty ones dropped, colours kept.
    pub fn project(&self, subset: &[Element]) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::InvalidPartition("empty subset".into()));
        }
        let keep: BTreeSet<Element> = subset.iter().copied().collect();
        let ground: BTreeSet<Element> = self.ground_set().into_iter().collect();
        if let Some(e) = keep.iter().find(|e| !ground.contains(e)) {
            return Err(Error::InvalidPartition(format!("{e:?} is not in the ground set")));
        }
        let blocks = self
            .blocks
            .iter()
            .filter_map(|b| {
                let members: Vec<Element> = b.members.iter().copied().filter(|e| keep.contains(e)).collect();
                (!members.is_empty()).then_some(TypedBlock { members, colour: b.colour })
            })
            .collect();
        Self::new(self.d, blocks)
    }

    /// Relabels ground-set elements by `perm`, which must be a bijection of
    /// the ground set mapping each element to one of the same type.
    pub fn permute(&self, perm: &BTreeMap<Element, Element>) -> Result<Self> {
        let ground = self.ground_set();
        let mut image = BTreeSet::new();
        for e in &ground {
            let f = perm.get(e).copied().unwrap_or(*e);
            if f.ty != e.ty {
                return Err(Error::InvalidPartition(format!("permutation maps {e:?} to another type")));
            }
            image.insert(f);
        }
        if image.len() != ground.len() || image.iter().zip(&ground).any(|(a, b)| a != b) {
            return Err(Error::InvalidPartition("permutation is not a bijection of the ground set".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| TypedBlock {
                members: b.members.iter().map(|e| perm.get(e).copied().unwrap_or(*e)).collect(),
                colour: b.colour,
            })
            .collect();
        Self::new(self.d, blocks)
    }
}
