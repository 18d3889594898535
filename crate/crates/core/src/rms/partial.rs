use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Injective map from a subset of `{0..source}` into `{0..target}`.
///
/// Serialized with 1-based labels as `{"source": n, "target": m, "map": [[i, j], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialPermutation {
    map: Vec<Option<usize>>,
    target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartialError {
    #[error("image {0} is outside the target range {1}")]
    OutOfRange(usize, usize),
    #[error("image {0} is hit twice")]
    NotInjective(usize),
    #[error("cannot compose maps into {0} labels with maps from {1} labels")]
    Mismatch(usize, usize),
}

impl PartialPermutation {
    pub fn new(map: Vec<Option<usize>>, target: usize) -> Result<Self, PartialError> {
        let mut hit = vec![false; target];
        for &j in map.iter().flatten() {
            if j >= target {
                return Err(PartialError::OutOfRange(j, target));
            }
            if std::mem::replace(&mut hit[j], true) {
                return Err(PartialError::NotInjective(j));
            }
        }
        Ok(PartialPermutation { map, target })
    }

    pub fn identity(n: usize) -> Self {
        PartialPermutation { map: (0..n).map(Some).collect(), target: n }
    }

    pub fn empty(source: usize, target: usize) -> Self {
        PartialPermutation { map: vec![None; source], target }
    }

    /// Full permutation from its image list.
    pub fn from_images(images: &[usize]) -> Result<Self, PartialError> {
        Self::new(images.iter().map(|&j| Some(j)).collect(), images.len())
    }

    pub fn source(&self) -> usize {
        self.map.len()
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.map.get(i).copied().flatten()
    }

    pub fn map(&self) -> &[Option<usize>] {
        &self.map
    }

    pub fn domain(&self) -> Vec<usize> {
        (0..self.map.len()).filter(|&i| self.map[i].is_some()).collect()
    }

    pub fn image(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.map.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn len(&self) -> usize {
        self.map.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Defined everywhere on a square index set.
    pub fn is_total(&self) -> bool {
        self.map.len() == self.target && self.map.iter().all(Option::is_some)
    }

    pub fn is_identity_on_domain(&self) -> bool {
        self.map.iter().enumerate().all(|(i, m)| m.is_none_or(|j| j == i))
    }

    /// `self` followed by `next`: `i -> next(self(i))`.
    pub fn then(&self, next: &PartialPermutation) -> Result<PartialPermutation, PartialError> {
        if self.target != next.source() {
            return Err(PartialError::Mismatch(self.target, next.source()));
        }
        Ok(PartialPermutation { map: self.map.iter().map(|m| m.and_then(|j| next.map[j])).collect(), target: next.target })
    }

    pub fn inverse(&self) -> PartialPermutation {
        let mut map = vec![None; self.target];
        for (i, m) in self.map.iter().enumerate() {
            if let Some(j) = *m {
                map[j] = Some(i);
            }
        }
        PartialPermutation { map, target: self.map.len() }
    }

    /// Keeps only the domain points in `keep`.
    pub fn restrict(&self, keep: &[usize]) -> PartialPermutation {
        let map = self.map.iter().enumerate().map(|(i, &m)| if keep.contains(&i) { m } else { None }).collect();
        PartialPermutation { map, target: self.target }
    }

    /// Every restriction to a subset of the domain (including the empty map).
    pub fn restrictions(&self) -> Vec<PartialPermutation> {
        let dom = self.domain();
        (0u64..1 << dom.len())
            .map(|mask| {
                let keep: Vec<usize> = dom.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect();
                self.restrict(&keep)
            })
            .collect()
    }
}

impl fmt::Display for PartialPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.map.iter().enumerate().filter_map(|(i, m)| m.map(|j| format!("{}->{}", i + 1, j + 1))).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct Repr {
    source: usize,
    target: usize,
    map: Vec<(usize, usize)>,
}

impl Serialize for PartialPermutation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map = self.map.iter().enumerate().filter_map(|(i, m)| m.map(|j| (i + 1, j + 1))).collect();
        Repr { source: self.map.len(), target: self.target, map }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PartialPermutation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = Repr::deserialize(d)?;
        let mut map = vec![None; r.source];
        for (i, j) in r.map {
            if i == 0 || i > r.source || j == 0 {
                return Err(D::Error::custom("labels are 1-based and within range"));
            }
            if map[i - 1].replace(j - 1).is_some() {
                return Err(D::Error::custom(format!("label {i} mapped twice")));
            }
        }
        PartialPermutation::new(map, r.target).map_err(D::Error::custom)
    }
}
