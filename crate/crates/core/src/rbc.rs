//! Random Ball Cover with incremental representative growth.
//!
//! A set of randomly chosen representatives each own the items nearest to
//! them, caching every member's distance to its owner and the ball radius
//! `ψ` (the largest cached distance). Queries rank the representatives by
//! distance to the query and expand only balls that can still contain a
//! k-th neighbor.
//!
//! Two search procedures are provided: [`RbcIndex::knn_original`] applies
//! the two static ball bounds and then brute-forces the retained balls;
//! [`RbcIndex::knn_improved`] grows the result list while visiting balls in
//! ascending order, tightening the bounds with the running k-th distance and
//! pruning single members through their cached owner distance.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::KnnIndex;
use crate::item::Item;
use crate::metrics::Metric;
use crate::neighbors::NeighborList;
use crate::scalar::{cmp_dist, max_dist, Distance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RbcSearch {
    Original,
    Improved,
}

impl fmt::Display for RbcSearch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RbcSearch::Original => "original",
            RbcSearch::Improved => "improved",
        })
    }
}

impl FromStr for RbcSearch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" | "orig" => Ok(RbcSearch::Original),
            "improved" | "imp" => Ok(RbcSearch::Improved),
            other => Err(Error::InvalidInput(format!("unknown RBC search `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwnedMember<D> {
    pub slot: usize,
    /// Distance to the owning representative.
    pub dist: D,
}

#[derive(Debug, Clone)]
pub struct Representative<D> {
    pub slot: usize,
    pub members: Vec<OwnedMember<D>>,
    pub psi: D,
}

impl<D: Distance> Representative<D> {
    fn new(slot: usize) -> Self {
        Self {
            slot,
            members: Vec::new(),
            psi: D::zero(),
        }
    }

    fn recompute_psi(&mut self) {
        self.psi = self
            .members
            .iter()
            .fold(D::zero(), |acc, m| max_dist(acc, m.dist));
    }
}

pub struct RbcIndex<P, M: Metric<P>> {
    metric: M,
    items: Vec<Item<P>>,
    reps: Vec<Representative<M::Distance>>,
    /// Which representative owns each slot; `None` for representatives.
    owner: Vec<Option<usize>>,
    search: RbcSearch,
    rng: ChaCha8Rng,
}

/// `⌈√n⌉`, exactly.
pub fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

impl<P, M: Metric<P>> RbcIndex<P, M> {
    /// An empty index; the first inserted item becomes the first representative.
    pub fn new(metric: M, search: RbcSearch, seed: u64) -> Self {
        Self {
            metric,
            items: Vec::new(),
            reps: Vec::new(),
            owner: Vec::new(),
            search,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Samples `⌈√n⌉` representatives without replacement and assigns every
    /// other item to its nearest one (ties to the smaller representative id).
    pub fn build(items: Vec<Item<P>>, metric: M, search: RbcSearch, seed: u64) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInput("cannot batch-build from no items".into()));
        }
        let mut index = Self::new(metric, search, seed);
        let n = items.len();
        index.items = items;
        index.owner = vec![None; n];
        let mut rep_slots = sample(&mut index.rng, n, ceil_sqrt(n)).into_vec();
        rep_slots.sort_unstable();
        index.reps = rep_slots.iter().map(|&s| Representative::new(s)).collect();
        let mut is_rep = vec![false; n];
        for &s in &rep_slots {
            is_rep[s] = true;
        }
        for (slot, _) in is_rep.iter().enumerate().filter(|(_, &rep)| !rep) {
            index.assign(slot);
        }
        Ok(index)
    }

    pub fn search(&self) -> RbcSearch {
        self.search
    }

    pub fn set_search(&mut self, search: RbcSearch) {
        self.search = search;
    }

    pub fn metric(&self) -> &M {
        &self.metric
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item<P>] {
        &self.items
    }

    pub fn representatives(&self) -> &[Representative<M::Distance>] {
        &self.reps
    }

    pub fn max_psi(&self) -> M::Distance {
        self.reps
            .iter()
            .fold(M::Distance::zero(), |acc, r| max_dist(acc, r.psi))
    }

    /// Adds `slot` to the ball of its nearest representative.
    fn assign(&mut self, slot: usize) {
        let payload = &self.items[slot].payload;
        let mut best: Option<(usize, M::Distance)> = None;
        for (r, rep) in self.reps.iter().enumerate() {
            let d = self.metric.distance(payload, &self.items[rep.slot].payload);
            let better = match best {
                None => true,
                Some((b, bd)) => cmp_dist(&d, &bd)
                    .then(self.items[rep.slot].id.cmp(&self.items[self.reps[b].slot].id))
                    .is_lt(),
            };
            if better {
                best = Some((r, d));
            }
        }
        let (r, dist) = best.expect("at least one representative");
        let rep = &mut self.reps[r];
        rep.members.push(OwnedMember { slot, dist });
        rep.psi = max_dist(rep.psi, dist);
        self.owner[slot] = Some(r);
    }

    /// Inserts one item; when the item count reaches a perfect square a
    /// random owned item is promoted to a new representative and takes over
    /// every item now closer to it than to its old owner.
    pub fn insert(&mut self, item: Item<P>) {
        let slot = self.items.len();
        self.items.push(item);
        self.owner.push(None);
        if self.reps.is_empty() {
            self.reps.push(Representative::new(slot));
            return;
        }
        self.assign(slot);

        let n = self.items.len();
        let root = ceil_sqrt(n);
        if root * root != n {
            return;
        }
        let owned: usize = self.reps.iter().map(|r| r.members.len()).sum();
        if owned == 0 {
            return;
        }
        self.promote(owned);
    }

    fn promote(&mut self, owned: usize) {
        // Uniform pick over the union of all balls.
        let mut pick = self.rng.gen_range(0..owned);
        let mut old = 0;
        while pick >= self.reps[old].members.len() {
            pick -= self.reps[old].members.len();
            old += 1;
        }
        let new_slot = self.reps[old].members.swap_remove(pick).slot;
        self.reps[old].recompute_psi();
        self.owner[new_slot] = None;

        let radius = self.max_psi();
        let candidates = self.radius_candidates(&self.items[new_slot].payload, radius);

        let new_rep = self.reps.len();
        self.reps.push(Representative::new(new_slot));
        let mut touched = Vec::new();
        for (r, member_idx, d_new) in candidates {
            let member = self.reps[r].members[member_idx];
            if member.dist > d_new {
                touched.push((r, member.slot));
                self.reps[new_rep].members.push(OwnedMember {
                    slot: member.slot,
                    dist: d_new,
                });
                self.owner[member.slot] = Some(new_rep);
            }
        }
        touched.sort_unstable();
        touched.dedup_by_key(|t| t.0);
        for (r, _) in touched {
            self.reps[r]
                .members
                .retain(|m| self.owner[m.slot] == Some(r));
            self.reps[r].recompute_psi();
        }
        self.reps[new_rep].recompute_psi();
    }

    /// Owned members within `radius` of `query`, as
    /// `(representative, member index, distance)`. Representatives
    /// themselves are skipped.
    fn radius_candidates(&self, query: &P, radius: M::Distance) -> Vec<(usize, usize, M::Distance)> {
        let mut out = Vec::new();
        for (r, rep) in self.reps.iter().enumerate() {
            let dqr = self.metric.distance(query, &self.items[rep.slot].payload);
            if dqr > radius + rep.psi {
                continue;
            }
            for (i, m) in rep.members.iter().enumerate() {
                if dqr > m.dist + radius || m.dist > dqr + radius {
                    continue;
                }
                let d = self.metric.distance(query, &self.items[m.slot].payload);
                if d <= radius {
                    out.push((r, i, d));
                }
            }
        }
        out
    }

    /// Every item within `radius` of `query`, inclusive.
    pub fn radius_search(&self, query: &P, radius: M::Distance) -> NeighborList<M::Distance> {
        let mut list = NeighborList::unbounded();
        for rep in &self.reps {
            let item = &self.items[rep.slot];
            let dqr = self.metric.distance(query, &item.payload);
            if dqr <= radius {
                list.push(item.id, dqr);
            }
            if dqr > radius + rep.psi {
                continue;
            }
            for m in &rep.members {
                if dqr > m.dist + radius || m.dist > dqr + radius {
                    continue;
                }
                let item = &self.items[m.slot];
                let d = self.metric.distance(query, &item.payload);
                if d <= radius {
                    list.push(item.id, d);
                }
            }
        }
        list
    }

    /// Representatives sorted by distance to `query` (ties by id).
    fn ranked_reps(&self, query: &P) -> Vec<(usize, M::Distance)> {
        let mut ranked: Vec<(usize, M::Distance)> = self
            .reps
            .iter()
            .enumerate()
            .map(|(r, rep)| (r, self.metric.distance(query, &self.items[rep.slot].payload)))
            .collect();
        ranked.sort_by(|a, b| {
            cmp_dist(&a.1, &b.1).then(
                self.items[self.reps[a.0].slot]
                    .id
                    .cmp(&self.items[self.reps[b.0].slot].id),
            )
        });
        ranked
    }

    /// Distance to the k-th nearest representative, or `None` when fewer
    /// than k representatives exist, in which case the ball bounds are
    /// disabled.
    fn kth_rep_distance(ranked: &[(usize, M::Distance)], k: usize) -> Option<M::Distance> {
        ranked.get(k - 1).map(|r| r.1)
    }

    fn check_query(&self, k: usize) -> Result<()> {
        if k < 1 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if self.reps.is_empty() {
            return Err(Error::InvalidInput("index is empty".into()));
        }
        Ok(())
    }

    pub fn knn(&self, query: &P, k: usize) -> Result<NeighborList<M::Distance>> {
        match self.search {
            RbcSearch::Original => self.knn_original(query, k),
            RbcSearch::Improved => self.knn_improved(query, k),
        }
    }

    /// Static ball bounds, then brute force over the representatives and
    /// every retained ball.
    pub fn knn_original(&self, query: &P, k: usize) -> Result<NeighborList<M::Distance>> {
        self.check_query(k)?;
        let ranked = self.ranked_reps(query);
        let rk = Self::kth_rep_distance(&ranked, k);
        let three = M::Distance::from_usize_exact(3);
        let mut list = NeighborList::with_capacity(k);
        let mut retained = Vec::new();
        for &(r, dqr) in &ranked {
            let rep = &self.reps[r];
            list.push(self.items[rep.slot].id, dqr);
            let keep = match rk {
                None => true,
                Some(rk) => dqr < rk + rep.psi && dqr < three * rk,
            };
            if keep {
                retained.push(r);
            }
        }
        for r in retained {
            for m in &self.reps[r].members {
                let item = &self.items[m.slot];
                list.push(item.id, self.metric.distance(query, &item.payload));
            }
        }
        Ok(list)
    }

    /// Incremental list growth in ascending ball order with per-member
    /// pruning through cached owner distances.
    pub fn knn_improved(&self, query: &P, k: usize) -> Result<NeighborList<M::Distance>> {
        self.check_query(k)?;
        let ranked = self.ranked_reps(query);
        let rk = Self::kth_rep_distance(&ranked, k);
        let three = M::Distance::from_usize_exact(3);
        let mut list = NeighborList::with_capacity(k);

        let (first, d_first) = ranked[0];
        let rep = &self.reps[first];
        list.push(self.items[rep.slot].id, d_first);
        for m in &rep.members {
            let item = &self.items[m.slot];
            list.push(item.id, self.metric.distance(query, &item.payload));
        }

        for &(r, qr) in &ranked[1..] {
            let rep = &self.reps[r];
            list.push(self.items[rep.slot].id, qr);
            let within_ball = list.kth_distance().is_none_or(|t| qr < t + rep.psi);
            let within_triple = rk.is_none_or(|rk| qr < three * rk);
            if !(within_ball && within_triple) {
                continue;
            }
            for m in &rep.members {
                if list.kth_distance().is_some_and(|t| qr >= t + m.dist) {
                    continue;
                }
                let item = &self.items[m.slot];
                list.push(item.id, self.metric.distance(query, &item.payload));
            }
        }
        Ok(list)
    }

    /// Checks the ownership partition, cached distances and exact radii.
    pub fn audit(&self) -> Result<()> {
        let n = self.items.len();
        let owned: usize = self.reps.iter().map(|r| r.members.len()).sum();
        if owned + self.reps.len() != n {
            return Err(Error::Audit(format!(
                "partition broken: {} owned + {} representatives != {n} items",
                owned,
                self.reps.len()
            )));
        }
        let mut seen = vec![false; n];
        for (r, rep) in self.reps.iter().enumerate() {
            if std::mem::replace(&mut seen[rep.slot], true) {
                return Err(Error::Audit(format!("slot {} appears twice", rep.slot)));
            }
            let rep_payload = &self.items[rep.slot].payload;
            let mut psi = M::Distance::zero();
            for m in &rep.members {
                if std::mem::replace(&mut seen[m.slot], true) {
                    return Err(Error::Audit(format!("slot {} appears twice", m.slot)));
                }
                if self.owner[m.slot] != Some(r) {
                    return Err(Error::Audit(format!("owner table disagrees for slot {}", m.slot)));
                }
                let d = self.metric.distance(&self.items[m.slot].payload, rep_payload);
                if d != m.dist {
                    return Err(Error::Audit(format!(
                        "cached distance {} for item {} but metric gives {d}",
                        m.dist, self.items[m.slot].id
                    )));
                }
                psi = max_dist(psi, d);
            }
            if psi != rep.psi {
                return Err(Error::Audit(format!(
                    "representative {}: psi {} but max member distance {psi}",
                    self.items[rep.slot].id, rep.psi
                )));
            }
        }
        Ok(())
    }

    /// Checks that every member is owned by a nearest representative.
    pub fn audit_nearest_owner(&self) -> Result<()> {
        for rep in &self.reps {
            for m in &rep.members {
                let payload = &self.items[m.slot].payload;
                for other in &self.reps {
                    let d = self.metric.distance(payload, &self.items[other.slot].payload);
                    if d < m.dist {
                        return Err(Error::Audit(format!(
                            "item {} is closer to representative {} than to its owner",
                            self.items[m.slot].id, self.items[other.slot].id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl<P, M: Metric<P>> KnnIndex<P> for RbcIndex<P, M> {
    type Distance = M::Distance;

    fn insert(&mut self, item: Item<P>) -> Result<()> {
        RbcIndex::insert(self, item);
        Ok(())
    }

    fn knn(&self, query: &P, k: usize) -> Result<NeighborList<M::Distance>> {
        RbcIndex::knn(self, query, k)
    }

    fn len(&self) -> usize {
        RbcIndex::len(self)
    }
}
