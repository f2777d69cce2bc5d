//! Footprints: compound spatial entities built by convex closure over tiles,
//! their RCC2 connectivity, and identity of unit groups across timepoints.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::sim::{City, CityId, Coord, GameMap, GameState, Timepoint, Unit, INVADER};
use crate::symbolic::Symbol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpatialError {
    #[error("convex hull of an empty tile set")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    tiles: BTreeSet<Coord>,
}

impl Region {
    pub fn tiles(&self) -> &BTreeSet<Coord> {
        &self.tiles
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.tiles.contains(&c)
    }
}

fn cross(o: Coord, a: Coord, b: Coord) -> i64 {
    (a.x - o.x) as i64 * (b.y - o.y) as i64 - (a.y - o.y) as i64 * (b.x - o.x) as i64
}

/// Counter-clockwise hull vertices of the given points (monotone chain).
fn hull_vertices(points: &BTreeSet<Coord>) -> Vec<Coord> {
    let mut pts: Vec<Coord> = points.iter().copied().collect();
    pts.sort_by_key(|c| (c.x, c.y));
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Coord> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Coord> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn on_segment(a: Coord, b: Coord, p: Coord) -> bool {
    cross(a, b, p) == 0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Every tile whose center lies inside or on the convex hull of the input
/// tile centers.
pub fn convex_hull_tiles(tiles: &BTreeSet<Coord>) -> Result<Region, SpatialError> {
    if tiles.is_empty() {
        return Err(SpatialError::EmptyInput);
    }
    let hull = hull_vertices(tiles);
    let (min_x, max_x) = (tiles.iter().map(|c| c.x).min().unwrap(), tiles.iter().map(|c| c.x).max().unwrap());
    let (min_y, max_y) = (tiles.iter().map(|c| c.y).min().unwrap(), tiles.iter().map(|c| c.y).max().unwrap());
    let mut out = BTreeSet::new();
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            let p = Coord::new(x, y);
            let inside = match hull.len() {
                1 => p == hull[0],
                2 => on_segment(hull[0], hull[1], p),
                n => (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0),
            };
            if inside {
                out.insert(p);
            }
        }
    }
    Ok(Region { tiles: out })
}

/// Regions of closed unit squares share a point iff some pair of tiles is
/// equal or 8-adjacent.
pub fn rcc2_connected(a: &Region, b: &Region) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .tiles
        .iter()
        .any(|t| (-1..=1).any(|dx| (-1..=1).any(|dy| large.tiles.contains(&Coord::new(t.x + dx, t.y + dy)))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FootprintKind {
    CityFootprint,
    UnitFootprint,
    UnitGroupFootprint,
}

impl FootprintKind {
    pub fn collection(self) -> &'static str {
        match self {
            FootprintKind::CityFootprint => "CityFootprint",
            FootprintKind::UnitFootprint => "UnitFootprint",
            FootprintKind::UnitGroupFootprint => "UnitGroupFootprint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Footprint {
    pub id: Symbol,
    pub kind: FootprintKind,
    pub constituents: BTreeSet<Symbol>,
    pub region: Region,
}

impl Footprint {
    pub fn size(&self) -> usize {
        self.region.len()
    }
}

pub fn city_symbol(id: CityId) -> Symbol {
    Symbol::new(format!("City-{id}"))
}

pub fn city_region_symbol(id: CityId) -> Symbol {
    Symbol::new(format!("CityRegion-{id}"))
}

pub fn unit_symbol(id: u32) -> Symbol {
    Symbol::new(format!("Unit-{id}"))
}

fn clipped_hull(tiles: impl IntoIterator<Item = Coord>, map: &GameMap) -> Region {
    let on_map: BTreeSet<Coord> = tiles.into_iter().filter(|c| map.contains(*c)).collect();
    convex_hull_tiles(&on_map).expect("footprint source tiles include an on-map center")
}

/// The 5x5 block around the city minus its four corners, clipped to the map.
pub fn city_footprint(city: &City, map: &GameMap) -> Footprint {
    let c = city.center;
    let tiles = (-2..=2)
        .flat_map(|dy| (-2..=2).map(move |dx| (dx, dy)))
        .filter(|(dx, dy): &(i32, i32)| !(dx.abs() == 2 && dy.abs() == 2))
        .map(|(dx, dy)| Coord::new(c.x + dx, c.y + dy));
    Footprint {
        id: city_region_symbol(city.id),
        kind: FootprintKind::CityFootprint,
        constituents: BTreeSet::from([city_symbol(city.id)]),
        region: clipped_hull(tiles, map),
    }
}

/// Convex hull of tiles within `movement` orthogonal steps of the unit.
pub fn unit_footprint(unit: &Unit, map: &GameMap) -> Footprint {
    let m = unit.movement.max(0);
    let p = unit.pos;
    let tiles = (-m..=m)
        .flat_map(|dy| (-m..=m).map(move |dx| (dx, dy)))
        .filter(|(dx, dy): &(i32, i32)| dx.abs() + dy.abs() <= m)
        .map(|(dx, dy)| Coord::new(p.x + dx, p.y + dy));
    Footprint {
        id: Symbol::new(format!("UnitRegion-{}", unit.id)),
        kind: FootprintKind::UnitFootprint,
        constituents: BTreeSet::from([unit_symbol(unit.id)]),
        region: clipped_hull(tiles, map),
    }
}

/// Partitions units into connected components of their footprints; each
/// component becomes a group footprint. Ids are provisional
/// (`PendingGroup-k`, ordered by smallest member id).
pub fn group_unit_footprints(units: &[&Unit], map: &GameMap) -> Vec<Footprint> {
    let mut sorted: Vec<&Unit> = units.to_vec();
    sorted.sort_by_key(|u| u.id);
    let fps: Vec<Footprint> = sorted.iter().map(|u| unit_footprint(u, map)).collect();
    let n = fps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if rcc2_connected(&fps[i].region, &fps[j].region) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }
    comps
        .into_values()
        .enumerate()
        .map(|(k, members)| {
            let tiles: BTreeSet<Coord> = members.iter().flat_map(|&i| fps[i].region.tiles.iter().copied()).collect();
            Footprint {
                id: Symbol::new(format!("PendingGroup-{k:04}")),
                kind: FootprintKind::UnitGroupFootprint,
                constituents: members.iter().flat_map(|&i| fps[i].constituents.iter().cloned()).collect(),
                region: convex_hull_tiles(&tiles).expect("non-empty group"),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PersistenceMap {
    /// previous id -> current id
    pub persisted: BTreeMap<Symbol, Symbol>,
    pub removed: BTreeSet<Symbol>,
    pub appeared: BTreeSet<Symbol>,
}

/// Identity of compound entities across two timepoints by constituent
/// overlap; an entity persists as its largest overlapping successor.
pub fn persist_compounds(prev: &[Footprint], curr: &[Footprint]) -> PersistenceMap {
    let mut claims: BTreeMap<&Symbol, Vec<&Footprint>> = BTreeMap::new();
    let mut out = PersistenceMap::default();
    for p in prev {
        let best = curr
            .iter()
            .filter(|c| !c.constituents.is_disjoint(&p.constituents))
            .min_by(|a, b| b.constituents.len().cmp(&a.constituents.len()).then_with(|| a.id.cmp(&b.id)));
        match best {
            Some(c) => claims.entry(&c.id).or_default().push(p),
            None => {
                out.removed.insert(p.id.clone());
            }
        }
    }
    for (cid, mut claimants) in claims {
        claimants.sort_by(|a, b| b.constituents.len().cmp(&a.constituents.len()).then_with(|| a.id.cmp(&b.id)));
        out.persisted.insert(claimants[0].id.clone(), cid.clone());
        for loser in &claimants[1..] {
            out.removed.insert(loser.id.clone());
        }
    }
    let successors: BTreeSet<&Symbol> = out.persisted.values().collect();
    for c in curr {
        if !successors.contains(&c.id) {
            out.appeared.insert(c.id.clone());
        }
    }
    out
}

/// Footprints observed at one timepoint.
#[derive(Debug, Clone, Default)]
pub struct FootprintFrame {
    pub time: Option<Timepoint>,
    pub cities: BTreeMap<CityId, Footprint>,
    pub groups: Vec<Footprint>,
}

impl FootprintFrame {
    /// Invader groups spatially local to the city.
    pub fn local_groups(&self, city: CityId) -> Vec<&Footprint> {
        let Some(cf) = self.cities.get(&city) else { return Vec::new() };
        self.groups.iter().filter(|g| rcc2_connected(&g.region, &cf.region)).collect()
    }

    pub fn footprint(&self, id: &Symbol) -> Option<&Footprint> {
        self.cities.values().chain(self.groups.iter()).find(|f| &f.id == id)
    }
}

/// Recomputes footprints per sample and carries group identity forward.
#[derive(Debug, Clone, Default)]
pub struct SpatialTracker {
    previous: Vec<Footprint>,
    next_group: u32,
}

impl SpatialTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, state: &GameState, t: Timepoint) -> FootprintFrame {
        let cities = state.learner_cities().map(|c| (c.id, city_footprint(c, &state.map))).collect();
        let invaders: Vec<&Unit> = state.units.values().filter(|u| u.owner == INVADER).collect();
        let mut groups = group_unit_footprints(&invaders, &state.map);
        let pm = persist_compounds(&self.previous, &groups);
        let successor: BTreeMap<&Symbol, &Symbol> = pm.persisted.iter().map(|(p, c)| (c, p)).collect();
        let renamed: Vec<Symbol> = groups
            .iter()
            .map(|g| match successor.get(&g.id) {
                Some(prev) => (*prev).clone(),
                None => {
                    self.next_group += 1;
                    Symbol::new(format!("UnitGroup-{}", self.next_group))
                }
            })
            .collect();
        for (g, id) in groups.iter_mut().zip(renamed) {
            g.id = id;
        }
        self.previous = groups.clone();
        FootprintFrame { time: Some(t), cities, groups }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Terrain, UnitKind, LEARNER};

    fn set(pts: &[(i32, i32)]) -> BTreeSet<Coord> {
        pts.iter().map(|&(x, y)| Coord::new(x, y)).collect()
    }

    fn region(pts: &[(i32, i32)]) -> Region {
        convex_hull_tiles(&set(pts)).unwrap()
    }

    fn unit(id: u32, x: i32, y: i32, movement: i32) -> Unit {
        Unit {
            id,
            owner: INVADER,
            kind: UnitKind::Attacker,
            attack: 3,
            defense: 1,
            hp: 10,
            movement,
            pos: Coord::new(x, y),
            home: None,
            site: None,
        }
    }

    fn fp(id: &str, members: &[&str]) -> Footprint {
        Footprint {
            id: Symbol::new(id),
            kind: FootprintKind::UnitGroupFootprint,
            constituents: members.iter().map(Symbol::new).collect(),
            region: region(&[(0, 0)]),
        }
    }

    #[test]
    fn hull_degenerate_and_triangle() {
        assert_eq!(region(&[(3, 4)]).tiles(), &set(&[(3, 4)]));
        assert_eq!(convex_hull_tiles(&BTreeSet::new()), Err(SpatialError::EmptyInput));
        // brute force point-in-triangle over the bounding box
        let tri = [(0i64, 0i64), (2, 0), (0, 2)];
        let mut expected = BTreeSet::new();
        for y in 0..=2 {
            for x in 0..=2 {
                let s = |(ax, ay): (i64, i64), (bx, by): (i64, i64)| (bx - ax) * (y - ay) - (by - ay) * (x - ax);
                if s(tri[0], tri[1]) >= 0 && s(tri[1], tri[2]) >= 0 && s(tri[2], tri[0]) >= 0 {
                    expected.insert(Coord::new(x as i32, y as i32));
                }
            }
        }
        assert_eq!(expected.len(), 6);
        assert_eq!(region(&[(0, 0), (2, 0), (0, 2)]).tiles(), &expected);
        assert_eq!(region(&[(0, 0), (3, 3)]).len(), 4);
    }

    #[test]
    fn rcc2_examples() {
        let a = region(&[(0, 0)]);
        assert!(rcc2_connected(&a, &a));
        assert!(!rcc2_connected(&a, &region(&[(5, 5)])));
        assert!(rcc2_connected(&a, &region(&[(1, 1)])));
        assert!(!rcc2_connected(&a, &region(&[(2, 0)])));
    }

    #[test]
    fn city_footprints() {
        let map = GameMap::uniform(20, 20, Terrain::Plains);
        let mk = |id, x, y| City {
            id,
            owner: LEARNER,
            center: Coord::new(x, y),
            walls: false,
            economy: false,
            hp: 20,
            production: None,
            gold_yield: 2,
        };
        let f = city_footprint(&mk(1, 10, 10), &map);
        assert_eq!(f.size(), 21);
        assert!(!f.region.contains(Coord::new(8, 8)));
        let corner = city_footprint(&mk(2, 0, 0), &map);
        assert!(corner.size() < 21);
        assert!(corner.region.tiles().iter().all(|c| map.contains(*c)));
        let far = city_footprint(&mk(3, 0, 10), &map);
        let other = city_footprint(&mk(4, 10, 10), &map);
        assert!(!rcc2_connected(&far.region, &other.region));
    }

    #[test]
    fn unit_footprints() {
        let map = GameMap::uniform(20, 20, Terrain::Plains);
        let f = unit_footprint(&unit(1, 5, 5, 1), &map);
        assert_eq!(f.region.tiles(), &set(&[(5, 5), (4, 5), (6, 5), (5, 4), (5, 6)]));
        assert_eq!(unit_footprint(&unit(1, 5, 5, 0), &map).size(), 1);
        let g = unit_footprint(&unit(2, 7, 5, 1), &map);
        assert!(rcc2_connected(&f.region, &g.region));
    }

    #[test]
    fn grouping_components() {
        let map = GameMap::uniform(30, 30, Terrain::Plains);
        let one = unit(1, 5, 5, 1);
        assert_eq!(group_unit_footprints(&[&one], &map).len(), 1);
        let (a, b, c) = (unit(1, 2, 2, 1), unit(2, 12, 2, 1), unit(3, 22, 22, 1));
        assert_eq!(group_unit_footprints(&[&a, &b, &c], &map).len(), 3);
        // chain: u1~u2 and u2~u3 but u1 and u3 apart
        let (u1, u2, u3) = (unit(1, 2, 2, 1), unit(2, 5, 2, 1), unit(3, 8, 2, 1));
        let f1 = unit_footprint(&u1, &map);
        let f3 = unit_footprint(&u3, &map);
        assert!(!rcc2_connected(&f1.region, &f3.region));
        let groups = group_unit_footprints(&[&u3, &u1, &u2], &map);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].constituents.len(), 3);
        assert!(groups[0].region.tiles().is_superset(f1.region.tiles()));
    }

    #[test]
    fn persistence_simple_and_complex() {
        let pm = persist_compounds(&[fp("CE1", &["e1", "e2"])], &[fp("X", &["e1", "e2"])]);
        assert_eq!(pm.persisted.get(&Symbol::new("CE1")), Some(&Symbol::new("X")));
        assert!(pm.appeared.is_empty() && pm.removed.is_empty());

        let pm =
            persist_compounds(&[fp("CE2", &["e3", "e4", "e5"])], &[fp("A", &["e4", "e5", "e6"]), fp("B", &["e3"])]);
        assert_eq!(pm.persisted.get(&Symbol::new("CE2")), Some(&Symbol::new("A")));
        assert_eq!(pm.appeared, BTreeSet::from([Symbol::new("B")]));

        let pm = persist_compounds(&[], &[fp("A", &["e1"])]);
        assert_eq!(pm.appeared.len(), 1);
    }

    #[test]
    fn persistence_conflict_larger_previous_wins() {
        let pm = persist_compounds(&[fp("P1", &["a"]), fp("P2", &["b", "c"])], &[fp("M", &["a", "b", "c"])]);
        assert_eq!(pm.persisted.get(&Symbol::new("P2")), Some(&Symbol::new("M")));
        assert!(pm.removed.contains(&Symbol::new("P1")));
    }

    #[test]
    fn tracker_keeps_ids() {
        let cfg = crate::sim::SimConfig { waves_enabled: false, ..Default::default() };
        let mut s = GameState::empty(cfg, GameMap::uniform(20, 20, Terrain::Plains), 1);
        s.add_unit(INVADER, UnitKind::Attacker, Coord::new(2, 2), None);
        let mut tr = SpatialTracker::new();
        let f1 = tr.observe(&s, Timepoint::new(0, 0));
        let id = f1.groups[0].id.clone();
        s.units.values_mut().next().unwrap().pos = Coord::new(3, 2);
        let f2 = tr.observe(&s, Timepoint::new(1, 0));
        assert_eq!(f2.groups[0].id, id);
        s.add_unit(INVADER, UnitKind::Attacker, Coord::new(15, 15), None);
        let f3 = tr.observe(&s, Timepoint::new(2, 0));
        assert_eq!(f3.groups.len(), 2);
        assert!(f3.groups.iter().any(|g| g.id == id));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_tiles() -> impl Strategy<Value = BTreeSet<Coord>> {
            prop::collection::btree_set((0i32..12, 0i32..12).prop_map(|(x, y)| Coord::new(x, y)), 1..8)
        }

        proptest! {
            #[test]
            fn hull_contains_input_and_is_idempotent(s in arb_tiles()) {
                let h = convex_hull_tiles(&s).unwrap();
                prop_assert!(h.tiles().is_superset(&s));
                prop_assert_eq!(convex_hull_tiles(h.tiles()).unwrap(), h);
            }

            #[test]
            fn rcc2_symmetric(a in arb_tiles(), b in arb_tiles()) {
                let (ra, rb) = (convex_hull_tiles(&a).unwrap(), convex_hull_tiles(&b).unwrap());
                prop_assert_eq!(rcc2_connected(&ra, &rb), rcc2_connected(&rb, &ra));
                prop_assert!(rcc2_connected(&ra, &ra));
            }

            #[test]
            fn groups_partition_units(pos in prop::collection::vec((0i32..20, 0i32..20), 1..10)) {
                let map = GameMap::uniform(20, 20, Terrain::Plains);
                let units: Vec<Unit> = pos.iter().enumerate().map(|(i, &(x, y))| unit(i as u32 + 1, x, y, 1)).collect();
                let refs: Vec<&Unit> = units.iter().collect();
                let groups = group_unit_footprints(&refs, &map);
                let total: usize = groups.iter().map(|g| g.constituents.len()).sum();
                prop_assert_eq!(total, units.len());
                let all: BTreeSet<&Symbol> = groups.iter().flat_map(|g| g.constituents.iter()).collect();
                prop_assert_eq!(all.len(), units.len());
                // no unit footprint touches a unit footprint in another group
                let fps: BTreeMap<Symbol, Footprint> = units.iter().map(|u| (unit_symbol(u.id), unit_footprint(u, &map))).collect();
                for (i, g) in groups.iter().enumerate() {
                    for h in &groups[i + 1..] {
                        for a in &g.constituents {
                            for b in &h.constituents {
                                prop_assert!(!rcc2_connected(&fps[a].region, &fps[b].region));
                            }
                        }
                    }
                }
            }

            #[test]
            fn persistence_injective(
                prev in prop::collection::vec(prop::collection::btree_set(0u8..8, 1..4), 0..4),
                curr in prop::collection::vec(prop::collection::btree_set(0u8..8, 1..4), 0..4),
            ) {
                let mk = |p: &str, sets: &[BTreeSet<u8>]| -> Vec<Footprint> {
                    sets.iter().enumerate().map(|(i, s)| Footprint {
                        id: Symbol::new(format!("{p}{i}")),
                        kind: FootprintKind::UnitGroupFootprint,
                        constituents: s.iter().map(|e| Symbol::new(format!("e{e}"))).collect(),
                        region: region(&[(0, 0)]),
                    }).collect()
                };
                let pm = persist_compounds(&mk("P", &prev), &mk("C", &curr));
                let targets: BTreeSet<&Symbol> = pm.persisted.values().collect();
                prop_assert_eq!(targets.len(), pm.persisted.len());
                prop_assert_eq!(pm.persisted.len() + pm.removed.len(), prev.len());
                prop_assert_eq!(pm.persisted.len() + pm.appeared.len(), curr.len());
            }
        }
    }
}
