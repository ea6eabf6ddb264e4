use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest site set the dense backend accepts.
pub const DENSE_SITE_CAP: usize = 14;

/// A lattice site, identified by its index in the underlying lattice.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(pub u32);

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// An ordered finite set of sites; the order fixes the Jordan-Wigner string.
#[derive(Clone, PartialEq, Eq)]
pub struct SiteSet {
    sites: Vec<Site>,
    index: BTreeMap<Site, usize>,
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.sites.iter()).finish()
    }
}

impl SiteSet {
    pub fn new(sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let sites: Vec<Site> = sites.into_iter().collect();
        let mut index = BTreeMap::new();
        for (k, &s) in sites.iter().enumerate() {
            if index.insert(s, k).is_some() {
                return Err(Error::DuplicateSite(s));
            }
        }
        if sites.len() > 63 {
            return Err(Error::TooLarge(sites.len()));
        }
        Ok(Self { sites, index })
    }

    /// Sites `0..n` in natural order.
    pub fn chain(n: usize) -> Self {
        Self::new((0..n as u32).map(Site)).expect("chain sites are distinct")
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Fock space dimension `2^|Λ|`.
    pub fn dim(&self) -> usize {
        1usize << self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn position(&self, site: Site) -> Result<usize> {
        self.index.get(&site).copied().ok_or(Error::SiteNotInLattice(site))
    }

    pub fn contains(&self, site: Site) -> bool {
        self.index.contains_key(&site)
    }

    pub fn region(&self) -> Region {
        Region::from_iter(self.sites.iter().copied())
    }

    /// Bit mask of the positions of `region` in this ordering.
    pub fn mask(&self, region: &Region) -> Result<u64> {
        let mut m = 0u64;
        for &s in region.iter() {
            m |= 1u64 << self.position(s).map_err(|_| Error::NotSubset)?;
        }
        Ok(m)
    }

    pub fn contains_region(&self, region: &Region) -> bool {
        region.iter().all(|&s| self.contains(s))
    }

    /// Same sites, ordered by site index.
    pub fn from_region(region: &Region) -> Self {
        Self::new(region.iter().copied()).expect("regions hold distinct sites")
    }

    pub(crate) fn check_dense(&self) -> Result<()> {
        if self.len() > DENSE_SITE_CAP {
            Err(Error::TooLarge(self.len()))
        } else {
            Ok(())
        }
    }
}

/// A finite subset of sites (the `X`, `Y`, `Z` of local algebras).
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region(BTreeSet<Site>);

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl FromIterator<Site> for Region {
    fn from_iter<T: IntoIterator<Item = Site>>(iter: T) -> Self {
        Region(iter.into_iter().collect())
    }
}

impl Region {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(site: Site) -> Self {
        Self::from_iter([site])
    }

    /// Convenience for integer-labelled sites.
    pub fn of(indices: &[u32]) -> Self {
        indices.iter().map(|&i| Site(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: Site) -> bool {
        self.0.contains(&site)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> + '_ {
        self.0.iter()
    }

    pub fn insert(&mut self, site: Site) -> bool {
        self.0.insert(site)
    }

    pub fn union(&self, other: &Region) -> Region {
        Region(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region(self.0.intersection(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region(self.0.difference(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn intersects(&self, other: &Region) -> bool {
        !self.is_disjoint(other)
    }
}
