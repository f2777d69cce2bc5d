//! Deterministic micro strategy world.
//!
//! A small stand-in for a full strategy game: a tiled map, cities with a one
//! item production slot, gold income, a single gating technology, scripted
//! invasion waves and a one-draw combat rule. Randomness comes from named
//! streams so that the agent's own random choices never shift combat or
//! wave draws.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type CityId = u32;
pub type UnitId = u32;
pub type PlayerId = u32;

/// The player whose cities the agent defends.
pub const LEARNER: PlayerId = 0;
/// The scripted invading player.
pub const INVADER: PlayerId = 1;

pub const ROCKETRY: &str = "rocketry-analog";

pub const STREAM_WORLD: &str = "world";
pub const STREAM_COMBAT: &str = "combat";
pub const STREAM_WAVES: &str = "waves";
pub const STREAM_DECISIONS: &str = "decisions";

/// A point in the event-indexed timeline: turn plus position within the turn.
/// `seq` 0 is the start of the turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timepoint {
    pub turn: u32,
    pub seq: u32,
}

impl Timepoint {
    pub const fn new(turn: u32, seq: u32) -> Self {
        Timepoint { turn, seq }
    }
}

impl std::fmt::Display for Timepoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.turn, self.seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub x: i32,
    pub y: i32,
}

impl Coord {
    pub const fn new(x: i32, y: i32) -> Self {
        Coord { x, y }
    }

    pub fn chebyshev(self, other: Coord) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn manhattan(self, other: Coord) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    /// One king-move toward `goal`.
    pub fn step_toward(self, goal: Coord) -> Coord {
        Coord::new(self.x + (goal.x - self.x).signum(), self.y + (goal.y - self.y).signum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terrain {
    Plains,
    Hill,
    Desert,
}

impl Terrain {
    pub fn defense_multiplier(self) -> f64 {
        match self {
            Terrain::Hill => 1.5,
            Terrain::Plains | Terrain::Desert => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub coord: Coord,
    pub terrain: Terrain,
    pub defense_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameMap {
    pub width: i32,
    pub height: i32,
    tiles: Vec<Tile>,
}

impl GameMap {
    pub fn contains(&self, c: Coord) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn tile(&self, c: Coord) -> Option<&Tile> {
        self.contains(c).then(|| &self.tiles[(c.y * self.width + c.x) as usize])
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn uniform(width: i32, height: i32, terrain: Terrain) -> Self {
        let tiles = (0..height)
            .flat_map(|y| (0..width).map(move |x| Coord::new(x, y)))
            .map(|coord| Tile { coord, terrain, defense_multiplier: terrain.defense_multiplier() })
            .collect();
        GameMap { width, height, tiles }
    }

    pub fn set_terrain(&mut self, c: Coord, terrain: Terrain) {
        if self.contains(c) {
            let i = (c.y * self.width + c.x) as usize;
            self.tiles[i].terrain = terrain;
            self.tiles[i].defense_multiplier = terrain.defense_multiplier();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnitKind {
    Defender,
    Attacker,
    EliteDefender,
    Settler,
}

impl UnitKind {
    pub fn is_military(self) -> bool {
        !matches!(self, UnitKind::Settler)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub id: UnitId,
    pub owner: PlayerId,
    pub kind: UnitKind,
    pub attack: i32,
    pub defense: i32,
    pub hp: i32,
    pub movement: i32,
    pub pos: Coord,
    /// City a learner unit belongs to, or the city an invader is marching on.
    pub home: Option<CityId>,
    /// Settler destination.
    pub site: Option<Coord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionSpec {
    NoOp,
    BuildDefender,
    BuildEliteDefender,
    BuildAttacker,
    BuildWalls,
    BuildEconomy,
}

impl ActionSpec {
    pub fn name(self) -> &'static str {
        match self {
            ActionSpec::NoOp => "NoOp",
            ActionSpec::BuildDefender => "BuildDefender",
            ActionSpec::BuildEliteDefender => "BuildEliteDefender",
            ActionSpec::BuildAttacker => "BuildAttacker",
            ActionSpec::BuildWalls => "BuildWalls",
            ActionSpec::BuildEconomy => "BuildEconomy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Production {
    pub item: ActionSpec,
    pub progress: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct City {
    pub id: CityId,
    pub owner: PlayerId,
    pub center: Coord,
    pub walls: bool,
    pub economy: bool,
    pub hp: i32,
    pub production: Option<Production>,
    pub gold_yield: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub id: PlayerId,
    pub gold: i64,
    pub techs: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackTarget {
    City(CityId),
    Unit(UnitId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombatOutcome {
    pub win_probability: f64,
    pub attacker_won: bool,
    /// The unit that died, if any.
    pub destroyed: Option<UnitId>,
    pub conquered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SimEventKind {
    TurnStart,
    UnitMoved { unit: UnitId, from: Coord, to: Coord },
    AttackResolved { attacker: UnitId, target: AttackTarget, outcome: CombatOutcome },
    UnitCreated { unit: UnitId, owner: PlayerId, kind: UnitKind },
    UnitDestroyed { unit: UnitId },
    CityConquered { city: CityId, by: PlayerId },
    CityFounded { city: CityId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: Timepoint,
    pub kind: SimEventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitStats {
    pub attack: i32,
    pub defense: i32,
    pub movement: i32,
    pub cost: i32,
}

/// World and rules parameters. Loaded from the experiment config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub map_width: i32,
    pub map_height: i32,
    pub max_cities: u32,
    pub growth_deadline: u32,
    pub city_spacing: i32,
    pub city_margin: i32,
    pub city_production: i32,
    pub base_gold_yield: i64,
    pub economy_gold_bonus: i64,
    pub walls_cost: i32,
    pub economy_cost: i32,
    pub defender: UnitStats,
    pub elite_defender: UnitStats,
    pub attacker: UnitStats,
    pub wall_bonus: f64,
    pub tech_turn: Option<u32>,
    pub waves_enabled: bool,
    pub first_wave_turn: u32,
    pub wave_interval: u32,
    pub max_wave_size: u32,
    /// How far from its home city a learner attacker will go to engage.
    pub engage_radius: i32,
    pub terrain_hill: f64,
    pub terrain_desert: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            map_width: 24,
            map_height: 24,
            max_cities: 6,
            growth_deadline: 40,
            city_spacing: 6,
            city_margin: 3,
            city_production: 4,
            base_gold_yield: 2,
            economy_gold_bonus: 2,
            walls_cost: 12,
            economy_cost: 12,
            defender: UnitStats { attack: 1, defense: 2, movement: 1, cost: 8 },
            elite_defender: UnitStats { attack: 1, defense: 4, movement: 1, cost: 12 },
            attacker: UnitStats { attack: 3, defense: 1, movement: 1, cost: 8 },
            wall_bonus: 2.0,
            tech_turn: Some(90),
            waves_enabled: true,
            first_wave_turn: 60,
            wave_interval: 6,
            max_wave_size: 5,
            engage_radius: 4,
            terrain_hill: 0.2,
            terrain_desert: 0.3,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.map_width < 20 || self.map_height < 20 {
            return fail("map must be at least 20x20");
        }
        if self.max_cities < 1 {
            return fail("at least one starting city is required");
        }
        if self.city_production < 1 {
            return fail("city_production must be positive");
        }
        for (name, s) in
            [("defender", &self.defender), ("elite_defender", &self.elite_defender), ("attacker", &self.attacker)]
        {
            if s.movement < 1 || s.cost < 1 || s.defense < 1 {
                return Err(SimError::InvalidConfig(format!("{name}: movement, cost and defense must be >= 1")));
            }
        }
        if self.wave_interval == 0 {
            return fail("wave_interval must be positive");
        }
        if !(0.0..=1.0).contains(&(self.terrain_hill + self.terrain_desert)) {
            return fail("terrain fractions must sum to at most 1");
        }
        if self.wall_bonus < 1.0 {
            return fail("wall_bonus must be >= 1");
        }
        Ok(())
    }

    fn stats(&self, kind: UnitKind) -> UnitStats {
        match kind {
            UnitKind::Defender => self.defender.clone(),
            UnitKind::EliteDefender => self.elite_defender.clone(),
            UnitKind::Attacker => self.attacker.clone(),
            UnitKind::Settler => UnitStats { attack: 0, defense: 1, movement: 1, cost: 0 },
        }
    }

    pub fn cost(&self, item: ActionSpec) -> i32 {
        match item {
            ActionSpec::NoOp => 0,
            ActionSpec::BuildDefender => self.defender.cost,
            ActionSpec::BuildEliteDefender => self.elite_defender.cost,
            ActionSpec::BuildAttacker => self.attacker.cost,
            ActionSpec::BuildWalls => self.walls_cost,
            ActionSpec::BuildEconomy => self.economy_cost,
        }
    }

    /// The shipped escalation: wave k has size min(1 + k/2, max_wave_size).
    pub fn wave_schedule(&self, turns: u32) -> Vec<WaveSpec> {
        if !self.waves_enabled {
            return Vec::new();
        }
        (0..)
            .map(|k: u32| WaveSpec {
                index: k,
                turn: self.first_wave_turn + k * self.wave_interval,
                size: (1 + k / 2).min(self.max_wave_size),
                target: None,
            })
            .take_while(|w| w.turn < turns)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSpec {
    pub index: u32,
    pub turn: u32,
    pub size: u32,
    /// Fixed target; drawn from the `waves` stream when absent.
    pub target: Option<CityId>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown city {0}")]
    UnknownCity(CityId),
    #[error("city {0} is not owned by the learning player")]
    NotOwned(CityId),
    #[error("unknown unit {0}")]
    UnknownUnit(UnitId),
    #[error("illegal action {action:?} for city {city}")]
    IllegalAction { city: CityId, action: ActionSpec },
    #[error("duplicate action for city {0}")]
    DuplicateAction(CityId),
    #[error("unit {0} cannot attack")]
    NotMilitary(UnitId),
    #[error("unit {attacker} is not adjacent to its target")]
    NotAdjacent { attacker: UnitId },
    #[error("wave scheduled for turn {wave} spawned at turn {now}")]
    WaveTurnMismatch { wave: u32, now: u32 },
}

fn stream_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a over the stream name, mixed with the game seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub turn: u32,
    pub map: GameMap,
    pub cities: BTreeMap<CityId, City>,
    pub units: BTreeMap<UnitId, Unit>,
    pub players: BTreeMap<PlayerId, Player>,
    pub config: SimConfig,
    rngs: BTreeMap<String, ChaCha8Rng>,
    /// Events emitted during the last processed turn.
    pub event_log: Vec<SimEvent>,
    /// Scripted combat results consumed before drawing from the rng; used by
    /// hand-built scenarios.
    pub combat_script: VecDeque<bool>,
    pub pending_waves: VecDeque<WaveSpec>,
    next_unit: UnitId,
    next_city: CityId,
    seq: u32,
}

impl GameState {
    /// An empty world with no cities, for scripted scenarios and tests.
    pub fn empty(config: SimConfig, map: GameMap, seed: u64) -> Self {
        let rngs = [STREAM_WORLD, STREAM_COMBAT, STREAM_WAVES, STREAM_DECISIONS]
            .into_iter()
            .map(|n| (n.to_string(), ChaCha8Rng::seed_from_u64(stream_seed(seed, n))))
            .collect();
        let players =
            [LEARNER, INVADER].into_iter().map(|id| (id, Player { id, gold: 0, techs: BTreeSet::new() })).collect();
        GameState {
            turn: 0,
            map,
            cities: BTreeMap::new(),
            units: BTreeMap::new(),
            players,
            config,
            rngs,
            event_log: Vec::new(),
            combat_script: VecDeque::new(),
            pending_waves: VecDeque::new(),
            next_unit: 1,
            next_city: 1,
            seq: 0,
        }
    }

    pub fn rng(&mut self, stream: &str) -> &mut ChaCha8Rng {
        self.rngs.get_mut(stream).unwrap_or_else(|| panic!("unknown rng stream {stream}"))
    }

    pub fn serialize(&self) -> String {
        serde_json::to_string(self).expect("game state serializes")
    }

    pub fn learner_cities(&self) -> impl Iterator<Item = &City> {
        self.cities.values().filter(|c| c.owner == LEARNER)
    }

    pub fn invader_count(&self) -> usize {
        self.units.values().filter(|u| u.owner == INVADER).count()
    }

    pub fn gold(&self, player: PlayerId) -> i64 {
        self.players.get(&player).map_or(0, |p| p.gold)
    }

    pub fn has_tech(&self, player: PlayerId, tech: &str) -> bool {
        self.players.get(&player).is_some_and(|p| p.techs.contains(tech))
    }

    pub fn city_at(&self, c: Coord) -> Option<&City> {
        self.cities.values().find(|city| city.center == c)
    }

    /// Military units of the city's owner standing on the city tile.
    pub fn garrison(&self, city: CityId) -> Vec<&Unit> {
        let Some(city) = self.cities.get(&city) else { return Vec::new() };
        self.units.values().filter(|u| u.owner == city.owner && u.kind.is_military() && u.pos == city.center).collect()
    }

    pub fn add_city(&mut self, owner: PlayerId, center: Coord) -> CityId {
        let id = self.next_city;
        self.next_city += 1;
        let gold_yield = self.config.base_gold_yield;
        self.cities
            .insert(id, City { id, owner, center, walls: false, economy: false, hp: 20, production: None, gold_yield });
        id
    }

    pub fn add_unit(&mut self, owner: PlayerId, kind: UnitKind, pos: Coord, home: Option<CityId>) -> UnitId {
        let id = self.next_unit;
        self.next_unit += 1;
        let s = self.config.stats(kind);
        self.units.insert(
            id,
            Unit {
                id,
                owner,
                kind,
                attack: s.attack,
                defense: s.defense,
                hp: 10,
                movement: s.movement,
                pos,
                home,
                site: None,
            },
        );
        id
    }

    fn emit(&mut self, kind: SimEventKind, observer: &mut dyn FnMut(&GameState, &SimEvent)) {
        self.seq += 1;
        let ev = SimEvent { time: Timepoint::new(self.turn, self.seq), kind };
        self.event_log.push(ev.clone());
        observer(self, &ev);
    }

    /// Current timepoint: the last emitted event of this turn, or its start.
    pub fn now(&self) -> Timepoint {
        Timepoint::new(self.turn, self.seq)
    }
}

/// Builds the initial world: terrain, a capital with settlers bound for the
/// remaining city sites, and the invasion schedule.
pub fn new_game(config: &SimConfig, seed: u64, turns: u32) -> Result<GameState, SimError> {
    config.validate()?;
    let mut s =
        GameState::empty(config.clone(), GameMap::uniform(config.map_width, config.map_height, Terrain::Plains), seed);
    let (w, h) = (config.map_width, config.map_height);
    for y in 0..h {
        for x in 0..w {
            let r: f64 = s.rng(STREAM_WORLD).gen();
            let terrain = if r < config.terrain_hill {
                Terrain::Hill
            } else if r < config.terrain_hill + config.terrain_desert {
                Terrain::Desert
            } else {
                Terrain::Plains
            };
            s.map.set_terrain(Coord::new(x, y), terrain);
        }
    }
    let m = config.city_margin;
    let mut sites: Vec<Coord> = Vec::new();
    let capital = Coord::new(w / 2, h / 2);
    sites.push(capital);
    let reach = config.growth_deadline as i32 - 2;
    for _ in 0..2000 {
        if sites.len() as u32 >= config.max_cities {
            break;
        }
        let x = s.rng(STREAM_WORLD).gen_range(m..w - m);
        let y = s.rng(STREAM_WORLD).gen_range(m..h - m);
        let c = Coord::new(x, y);
        if sites.iter().all(|o| o.chebyshev(c) >= config.city_spacing) && capital.chebyshev(c) <= reach {
            sites.push(c);
        }
    }
    if (sites.len() as u32) < config.max_cities {
        return Err(SimError::InvalidConfig(format!(
            "could not place {} cities on a {w}x{h} map with spacing {}",
            config.max_cities, config.city_spacing
        )));
    }
    let cap = s.add_city(LEARNER, capital);
    for site in &sites[1..] {
        let id = s.add_unit(LEARNER, UnitKind::Settler, capital, Some(cap));
        s.units.get_mut(&id).expect("fresh unit").site = Some(*site);
    }
    s.pending_waves = config.wave_schedule(turns).into();
    Ok(s)
}

/// `attack / (attack + defense * terrain * walls)`.
pub fn win_probability(attack: i32, defense: i32, terrain: f64, walls: bool, wall_bonus: f64) -> f64 {
    let d = defense as f64 * terrain * if walls { wall_bonus } else { 1.0 };
    attack as f64 / (attack as f64 + d)
}

impl GameState {
    /// Buildable items for a learner city. Busy production slots only allow
    /// `NoOp`.
    pub fn legal_city_actions(&self, city: CityId) -> Result<BTreeSet<ActionSpec>, SimError> {
        let c = self.cities.get(&city).ok_or(SimError::UnknownCity(city))?;
        if c.owner != LEARNER {
            return Err(SimError::NotOwned(city));
        }
        let mut out = BTreeSet::from([ActionSpec::NoOp]);
        if c.production.is_some() {
            return Ok(out);
        }
        out.insert(ActionSpec::BuildDefender);
        out.insert(ActionSpec::BuildAttacker);
        if !c.walls {
            out.insert(ActionSpec::BuildWalls);
        }
        if !c.economy {
            out.insert(ActionSpec::BuildEconomy);
        }
        if self.has_tech(c.owner, ROCKETRY) {
            out.insert(ActionSpec::BuildEliteDefender);
        }
        Ok(out)
    }

    /// Computes the combat result of `attacker` striking `target`, drawing
    /// once from the `combat` stream. Nothing is applied to the world.
    pub fn resolve_attack(&mut self, attacker: UnitId, target: AttackTarget) -> Result<CombatOutcome, SimError> {
        let a = self.units.get(&attacker).ok_or(SimError::UnknownUnit(attacker))?;
        if !a.kind.is_military() {
            return Err(SimError::NotMilitary(attacker));
        }
        let (attack, from) = (a.attack, a.pos);
        let (defender, tile, walls) = match target {
            AttackTarget::City(cid) => {
                let city = self.cities.get(&cid).ok_or(SimError::UnknownCity(cid))?;
                let best = self
                    .garrison(cid)
                    .into_iter()
                    .max_by(|x, y| x.defense.cmp(&y.defense).then(y.id.cmp(&x.id)))
                    .map(|u| (u.id, u.defense));
                (best, city.center, city.walls)
            }
            AttackTarget::Unit(uid) => {
                let u = self.units.get(&uid).ok_or(SimError::UnknownUnit(uid))?;
                (Some((u.id, u.defense)), u.pos, false)
            }
        };
        if from.chebyshev(tile) != 1 {
            return Err(SimError::NotAdjacent { attacker });
        }
        let Some((def_id, defense)) = defender else {
            return Ok(CombatOutcome { win_probability: 1.0, attacker_won: true, destroyed: None, conquered: true });
        };
        let terrain = self.map.tile(tile).map_or(1.0, |t| t.defense_multiplier);
        let p = win_probability(attack, defense, terrain, walls, self.config.wall_bonus);
        let won = match self.combat_script.pop_front() {
            Some(forced) => forced,
            None => self.rng(STREAM_COMBAT).gen_bool(p),
        };
        Ok(CombatOutcome {
            win_probability: p,
            attacker_won: won,
            destroyed: Some(if won { def_id } else { attacker }),
            conquered: false,
        })
    }

    /// Creates the wave's invaders on the map edge nearest the target city.
    pub fn spawn_wave(&mut self, wave: &WaveSpec) -> Result<(), SimError> {
        self.spawn_wave_observed(wave, &mut |_, _| {})
    }

    fn spawn_wave_observed(
        &mut self,
        wave: &WaveSpec,
        obs: &mut dyn FnMut(&GameState, &SimEvent),
    ) -> Result<(), SimError> {
        if wave.turn != self.turn {
            return Err(SimError::WaveTurnMismatch { wave: wave.turn, now: self.turn });
        }
        let target = match wave.target {
            Some(t) => {
                let c = self.cities.get(&t).ok_or(SimError::UnknownCity(t))?;
                if c.owner != LEARNER {
                    return Err(SimError::NotOwned(t));
                }
                t
            }
            None => {
                let ids: Vec<CityId> = self.learner_cities().map(|c| c.id).collect();
                if ids.is_empty() {
                    return Ok(());
                }
                let k = self.rng(STREAM_WAVES).gen_range(0..ids.len());
                ids[k]
            }
        };
        let center = self.cities[&target].center;
        let (w, h) = (self.map.width, self.map.height);
        // west, east, north, south
        let edges = [(center.x, 0), (w - 1 - center.x, 1), (center.y, 2), (h - 1 - center.y, 3)];
        let edge = edges.iter().min_by_key(|(d, i)| (*d, *i)).map(|e| e.1).unwrap_or(0);
        for k in 0..wave.size as i32 {
            let offset = if k % 2 == 0 { k / 2 } else { -(k / 2 + 1) };
            let pos = match edge {
                0 => Coord::new(0, (center.y + offset).clamp(0, h - 1)),
                1 => Coord::new(w - 1, (center.y + offset).clamp(0, h - 1)),
                2 => Coord::new((center.x + offset).clamp(0, w - 1), 0),
                _ => Coord::new((center.x + offset).clamp(0, w - 1), h - 1),
            };
            let id = self.add_unit(INVADER, UnitKind::Attacker, pos, Some(target));
            self.emit(SimEventKind::UnitCreated { unit: id, owner: INVADER, kind: UnitKind::Attacker }, obs);
        }
        Ok(())
    }

    fn validate_actions(&self, actions: &[(CityId, ActionSpec)]) -> Result<(), SimError> {
        let mut seen = BTreeSet::new();
        for &(city, action) in actions {
            if !seen.insert(city) {
                return Err(SimError::DuplicateAction(city));
            }
            if !self.legal_city_actions(city)?.contains(&action) {
                return Err(SimError::IllegalAction { city, action });
            }
        }
        Ok(())
    }

    /// Processes one turn. Every emitted event is also handed to `observer`
    /// together with the world as it stands right after that event.
    pub fn step_observed(
        &mut self,
        actions: &[(CityId, ActionSpec)],
        observer: &mut dyn FnMut(&GameState, &SimEvent),
    ) -> Result<Vec<SimEvent>, SimError> {
        self.validate_actions(actions)?;
        self.event_log.clear();
        for &(city, action) in actions {
            if action != ActionSpec::NoOp {
                self.cities.get_mut(&city).expect("validated").production =
                    Some(Production { item: action, progress: 0 });
            }
        }
        if self.config.tech_turn.is_some_and(|t| self.turn >= t) {
            self.players.get_mut(&LEARNER).expect("learner").techs.insert(ROCKETRY.to_string());
        }
        while self.pending_waves.front().is_some_and(|w| w.turn <= self.turn) {
            let wave = self.pending_waves.pop_front().expect("front");
            if wave.turn == self.turn {
                self.spawn_wave_observed(&wave, observer)?;
            }
        }
        self.produce(observer);
        self.collect_gold();
        self.move_settlers(observer);
        self.learner_attackers_act(observer)?;
        self.invaders_act(observer)?;
        self.turn += 1;
        self.seq = 0;
        let start = SimEvent { time: Timepoint::new(self.turn, 0), kind: SimEventKind::TurnStart };
        self.event_log.push(start.clone());
        observer(self, &start);
        Ok(self.event_log.clone())
    }

    pub fn step(&mut self, actions: &[(CityId, ActionSpec)]) -> Result<Vec<SimEvent>, SimError> {
        self.step_observed(actions, &mut |_, _| {})
    }

    fn produce(&mut self, obs: &mut dyn FnMut(&GameState, &SimEvent)) {
        let ids: Vec<CityId> = self.learner_cities().map(|c| c.id).collect();
        for id in ids {
            let rate = self.config.city_production;
            let done = {
                let city = self.cities.get_mut(&id).expect("city");
                let Some(prod) = city.production.as_mut() else { continue };
                prod.progress += rate;
                let item = prod.item;
                (prod.progress >= self.config.cost(item)).then_some(item)
            };
            let Some(item) = done else { continue };
            let city = self.cities.get_mut(&id).expect("city");
            city.production = None;
            let center = city.center;
            let kind = match item {
                ActionSpec::BuildWalls => {
                    city.walls = true;
                    None
                }
                ActionSpec::BuildEconomy => {
                    city.economy = true;
                    city.gold_yield = self.config.base_gold_yield + self.config.economy_gold_bonus;
                    None
                }
                ActionSpec::BuildDefender => Some(UnitKind::Defender),
                ActionSpec::BuildEliteDefender => Some(UnitKind::EliteDefender),
                ActionSpec::BuildAttacker => Some(UnitKind::Attacker),
                ActionSpec::NoOp => None,
            };
            if let Some(kind) = kind {
                let uid = self.add_unit(LEARNER, kind, center, Some(id));
                self.emit(SimEventKind::UnitCreated { unit: uid, owner: LEARNER, kind }, obs);
            }
        }
    }

    fn collect_gold(&mut self) {
        let income: i64 = self.learner_cities().map(|c| c.gold_yield).sum();
        let p = self.players.get_mut(&LEARNER).expect("learner");
        p.gold += income;
    }

    fn move_settlers(&mut self, obs: &mut dyn FnMut(&GameState, &SimEvent)) {
        let settlers: Vec<UnitId> =
            self.units.values().filter(|u| u.kind == UnitKind::Settler && u.owner == LEARNER).map(|u| u.id).collect();
        for id in settlers {
            let (pos, site) = {
                let u = &self.units[&id];
                (u.pos, u.site)
            };
            let Some(site) = site else { continue };
            if self.turn >= self.config.growth_deadline {
                self.units.remove(&id);
                self.emit(SimEventKind::UnitDestroyed { unit: id }, obs);
                continue;
            }
            if pos != site {
                let to = pos.step_toward(site);
                self.units.get_mut(&id).expect("settler").pos = to;
                self.emit(SimEventKind::UnitMoved { unit: id, from: pos, to }, obs);
            }
            if self.units[&id].pos == site && self.city_at(site).is_none() {
                self.units.remove(&id);
                let city = self.add_city(LEARNER, site);
                self.emit(SimEventKind::CityFounded { city }, obs);
            }
        }
    }

    fn apply_outcome(
        &mut self,
        attacker: UnitId,
        target: AttackTarget,
        outcome: CombatOutcome,
        obs: &mut dyn FnMut(&GameState, &SimEvent),
    ) {
        if let Some(dead) = outcome.destroyed {
            self.units.remove(&dead);
            if let (AttackTarget::City(cid), true) = (target, outcome.attacker_won) {
                if let Some(c) = self.cities.get_mut(&cid) {
                    c.hp = (c.hp - 1).max(0);
                }
            }
        }
        if outcome.conquered {
            if let AttackTarget::City(cid) = target {
                let by = self.units[&attacker].owner;
                let city = self.cities.get_mut(&cid).expect("target city");
                city.owner = by;
                city.production = None;
                let center = city.center;
                self.units.get_mut(&attacker).expect("attacker").pos = center;
            }
        }
        self.emit(SimEventKind::AttackResolved { attacker, target, outcome }, obs);
        if let Some(dead) = outcome.destroyed {
            self.emit(SimEventKind::UnitDestroyed { unit: dead }, obs);
        }
        if outcome.conquered {
            if let AttackTarget::City(city) = target {
                let by = self.cities[&city].owner;
                self.emit(SimEventKind::CityConquered { city, by }, obs);
            }
        }
    }

    fn move_unit(&mut self, id: UnitId, goal: Coord, obs: &mut dyn FnMut(&GameState, &SimEvent)) {
        let from = self.units[&id].pos;
        let mut to = from.step_toward(goal);
        // only conquest puts a unit onto a foreign city tile
        if let Some(c) = self.city_at(to) {
            if c.owner != self.units[&id].owner {
                to = from;
            }
        }
        if to != from && self.map.contains(to) {
            self.units.get_mut(&id).expect("unit").pos = to;
            self.emit(SimEventKind::UnitMoved { unit: id, from, to }, obs);
        }
    }

    fn learner_attackers_act(&mut self, obs: &mut dyn FnMut(&GameState, &SimEvent)) -> Result<(), SimError> {
        let ids: Vec<UnitId> =
            self.units.values().filter(|u| u.owner == LEARNER && u.kind == UnitKind::Attacker).map(|u| u.id).collect();
        for id in ids {
            let Some(u) = self.units.get(&id) else { continue };
            let pos = u.pos;
            let home = u.home.and_then(|h| self.cities.get(&h)).filter(|c| c.owner == LEARNER).map(|c| c.center);
            let Some(home) = home else { continue };
            let radius = self.config.engage_radius;
            let prey = self
                .units
                .values()
                .filter(|e| e.owner == INVADER && e.pos.chebyshev(home) <= radius)
                .filter(|e| self.city_at(e.pos).is_none())
                .min_by_key(|e| (e.pos.chebyshev(pos), e.id))
                .map(|e| (e.id, e.pos));
            match prey {
                Some((eid, epos)) if epos.chebyshev(pos) == 1 => {
                    let outcome = self.resolve_attack(id, AttackTarget::Unit(eid))?;
                    self.apply_outcome(id, AttackTarget::Unit(eid), outcome, obs);
                }
                Some((_, epos)) => self.move_unit(id, epos, obs),
                None if pos != home => self.move_unit(id, home, obs),
                None => {}
            }
        }
        Ok(())
    }

    fn invaders_act(&mut self, obs: &mut dyn FnMut(&GameState, &SimEvent)) -> Result<(), SimError> {
        let ids: Vec<UnitId> = self.units.values().filter(|u| u.owner == INVADER).map(|u| u.id).collect();
        for id in ids {
            let Some(u) = self.units.get(&id) else { continue };
            let pos = u.pos;
            let Some(target) = u.home.and_then(|h| self.cities.get(&h)) else { continue };
            let (tid, center, owner) = (target.id, target.center, target.owner);
            if owner != LEARNER {
                // captured: garrison it
                if pos != center {
                    self.move_unit(id, center, obs);
                }
                continue;
            }
            if pos.chebyshev(center) == 1 {
                let outcome = self.resolve_attack(id, AttackTarget::City(tid))?;
                self.apply_outcome(id, AttackTarget::City(tid), outcome, obs);
            } else {
                self.move_unit(id, center, obs);
            }
        }
        Ok(())
    }
}

/// Functional form of a turn step: returns the successor state and the event
/// log, leaving `s` untouched.
pub fn step_turn(s: &GameState, actions: &[(CityId, ActionSpec)]) -> Result<(GameState, Vec<SimEvent>), SimError> {
    let mut next = s.clone();
    let events = next.step(actions)?;
    Ok((next, events))
}
