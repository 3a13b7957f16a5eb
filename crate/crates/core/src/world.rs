//! Airport grid: zone layout, connectivity and movement.
//!
//! Movement is 4-neighbour, one cell per tick. Several agents may share a
//! cell. Every zone cell (anything other than `Open` or `Wall`) gets a
//! precomputed breadth-first distance field so agents can walk towards it
//! without searching every tick.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use thiserror::Error;

use crate::engine::SetupParameters;
use crate::ontology::{Position, ShopType};

/// Neighbour visit order used for every tie-break on the grid.
const STEPS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ZoneKind {
    Entrance,
    FlightInfoPanel,
    CheckinCounter,
    PassportControl,
    Shop(ShopType),
    BoardingInfoPanel,
    BoardingGate,
    BaggageInfoPanel,
    BaggageBelt,
    Wall,
    Open,
    Exit,
}

impl ZoneKind {
    pub fn is_panel(self) -> bool {
        matches!(
            self,
            ZoneKind::FlightInfoPanel | ZoneKind::BoardingInfoPanel | ZoneKind::BaggageInfoPanel
        )
    }

    /// Cells staffed by a provider agent (services and information panels).
    pub fn has_provider(self) -> bool {
        self.is_panel()
            || matches!(
                self,
                ZoneKind::CheckinCounter
                    | ZoneKind::PassportControl
                    | ZoneKind::Shop(_)
                    | ZoneKind::BoardingGate
                    | ZoneKind::BaggageBelt
            )
    }

    pub fn glyph(self) -> char {
        match self {
            ZoneKind::Entrance => 'E',
            ZoneKind::FlightInfoPanel => 'f',
            ZoneKind::CheckinCounter => 'C',
            ZoneKind::PassportControl => 'P',
            ZoneKind::Shop(t) => char::from_digit(t.0 as u32, 10).unwrap_or('*'),
            ZoneKind::BoardingInfoPanel => 'g',
            ZoneKind::BoardingGate => 'G',
            ZoneKind::BaggageInfoPanel => 'b',
            ZoneKind::BaggageBelt => 'B',
            ZoneKind::Wall => '#',
            ZoneKind::Open => '.',
            ZoneKind::Exit => 'X',
        }
    }

    pub fn from_glyph(c: char) -> Option<Self> {
        Some(match c {
            'E' => ZoneKind::Entrance,
            'f' => ZoneKind::FlightInfoPanel,
            'C' => ZoneKind::CheckinCounter,
            'P' => ZoneKind::PassportControl,
            '0'..='9' => ZoneKind::Shop(ShopType(c as u8 - b'0')),
            'g' => ZoneKind::BoardingInfoPanel,
            'G' => ZoneKind::BoardingGate,
            'b' => ZoneKind::BaggageInfoPanel,
            'B' => ZoneKind::BaggageBelt,
            '#' => ZoneKind::Wall,
            '.' => ZoneKind::Open,
            'X' => ZoneKind::Exit,
            _ => return None,
        })
    }

    /// Label used in rendered positions (`Position: Belt (patch 18 6)`).
    pub fn label(self) -> &'static str {
        match self {
            ZoneKind::Entrance => "Entrance",
            ZoneKind::FlightInfoPanel => "Flight-Info",
            ZoneKind::CheckinCounter => "Counter",
            ZoneKind::PassportControl => "Control",
            ZoneKind::Shop(_) => "Shop",
            ZoneKind::BoardingInfoPanel => "Boarding-Info",
            ZoneKind::BoardingGate => "Gate",
            ZoneKind::BaggageInfoPanel => "Baggage-Info",
            ZoneKind::BaggageBelt => "Belt",
            ZoneKind::Wall => "Wall",
            ZoneKind::Open => "Hall",
            ZoneKind::Exit => "Exit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("{what}: {count} cells do not fit a row of width {width}")]
    DoesNotFit {
        what: &'static str,
        count: u32,
        width: u32,
    },
    #[error("grid {width}x{height} is too small (minimum {min_width}x{min_height})")]
    GridTooSmall {
        width: u32,
        height: u32,
        min_width: u32,
        min_height: u32,
    },
    #[error("{0} required by the configured population")]
    MissingZone(&'static str),
    #[error("too many shop types: {0} (maximum {max})", max = ShopType::MAX_TYPES)]
    TooManyShopTypes(u32),
    #[error("cell {0} is not reachable from the entrance")]
    Disconnected(Position),
    #[error("no path from {from} to {to}")]
    NoPath { from: Position, to: Position },
    #[error("cell {0} is a wall")]
    WallCell(Position),
    #[error("cell {0} is outside the grid")]
    OutOfBounds(Position),
    #[error("bad map text at line {line}, column {column}: {reason}")]
    BadText {
        line: usize,
        column: usize,
        reason: String,
    },
}

#[derive(Debug)]
pub struct AirportMap {
    width: u32,
    height: u32,
    cells: Vec<ZoneKind>,
    zones: BTreeMap<ZoneKind, Vec<Position>>,
    fields: HashMap<Position, Vec<u32>>,
    /// Connected area per cell, ignoring walls and passport controls.
    area: Vec<Option<u32>>,
    diameter: OnceLock<u32>,
}

impl AirportMap {
    /// Builds a map from raw cells (row-major, `y * width + x`). Checks that
    /// every non-wall cell is reachable from the entrance (or from the first
    /// open cell when there is no entrance).
    pub fn from_cells(width: u32, height: u32, cells: Vec<ZoneKind>) -> Result<Self, WorldError> {
        assert_eq!(
            cells.len(),
            (width * height) as usize,
            "cell count mismatch"
        );
        let mut zones: BTreeMap<ZoneKind, Vec<Position>> = BTreeMap::new();
        for y in 0..height {
            for x in 0..width {
                let kind = cells[(y * width + x) as usize];
                if !matches!(kind, ZoneKind::Open | ZoneKind::Wall) {
                    zones.entry(kind).or_default().push(Position { x, y });
                }
            }
        }
        let mut map = AirportMap {
            width,
            height,
            cells,
            zones,
            fields: HashMap::new(),
            area: Vec::new(),
            diameter: OnceLock::new(),
        };

        let origin = map
            .zones
            .get(&ZoneKind::Entrance)
            .and_then(|v| v.first().copied())
            .or_else(|| map.positions().find(|p| map.is_walkable(*p)));
        if let Some(origin) = origin {
            let reach = map.bfs(origin);
            if let Some(p) = map
                .positions()
                .find(|p| map.is_walkable(*p) && reach[map.index(*p)] == UNREACHABLE)
            {
                return Err(WorldError::Disconnected(p));
            }
        }

        let targets: Vec<Position> = map.zones.values().flatten().copied().collect();
        for t in targets {
            let field = map.bfs(t);
            map.fields.insert(t, field);
        }
        map.area = map.label_areas();
        Ok(map)
    }

    /// Parses the text dump produced by `Display` (top row first).
    pub fn from_text(text: &str) -> Result<Self, WorldError> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let height = rows.len() as u32;
        let width = rows.first().map(|r| r.chars().count()).unwrap_or(0) as u32;
        let mut cells = vec![ZoneKind::Open; (width * height) as usize];
        for (line, row) in rows.iter().enumerate() {
            if row.chars().count() as u32 != width {
                return Err(WorldError::BadText {
                    line: line + 1,
                    column: 0,
                    reason: format!("expected {width} columns"),
                });
            }
            let y = height - 1 - line as u32;
            for (x, c) in row.chars().enumerate() {
                let kind = ZoneKind::from_glyph(c).ok_or_else(|| WorldError::BadText {
                    line: line + 1,
                    column: x + 1,
                    reason: format!("unknown glyph `{c}`"),
                })?;
                cells[(y * width + x as u32) as usize] = kind;
            }
        }
        Self::from_cells(width, height, cells)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn index(&self, p: Position) -> usize {
        (p.y * self.width + p.x) as usize
    }

    pub fn contains(&self, p: Position) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn kind(&self, p: Position) -> ZoneKind {
        self.cells[self.index(p)]
    }

    pub fn is_walkable(&self, p: Position) -> bool {
        self.contains(p) && self.kind(p) != ZoneKind::Wall
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Position { x, y }))
    }

    /// Zone index: positions of every cell of `kind`, in row-major order.
    pub fn zone(&self, kind: ZoneKind) -> &[Position] {
        self.zones.get(&kind).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn zone_index(&self) -> &BTreeMap<ZoneKind, Vec<Position>> {
        &self.zones
    }

    /// All shop cells, any type.
    pub fn shops(&self) -> Vec<(Position, ShopType)> {
        self.zones
            .iter()
            .filter_map(|(k, v)| match k {
                ZoneKind::Shop(t) => Some(v.iter().map(move |p| (*p, *t))),
                _ => None,
            })
            .flatten()
            .collect()
    }

    pub fn neighbors(&self, p: Position) -> impl Iterator<Item = Position> + '_ {
        STEPS.iter().filter_map(move |(dx, dy)| {
            let x = p.x as i64 + dx;
            let y = p.y as i64 + dy;
            if x < 0 || y < 0 {
                return None;
            }
            let q = Position {
                x: x as u32,
                y: y as u32,
            };
            self.is_walkable(q).then_some(q)
        })
    }

    fn bfs(&self, from: Position) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.cells.len()];
        if !self.is_walkable(from) {
            return dist;
        }
        let mut queue = VecDeque::new();
        dist[self.index(from)] = 0;
        queue.push_back(from);
        while let Some(p) = queue.pop_front() {
            let d = dist[self.index(p)];
            for q in self.neighbors(p) {
                let i = self.index(q);
                if dist[i] == UNREACHABLE {
                    dist[i] = d + 1;
                    queue.push_back(q);
                }
            }
        }
        dist
    }

    fn label_areas(&self) -> Vec<Option<u32>> {
        let mut area = vec![None; self.cells.len()];
        let mut next = 0;
        for start in self.positions() {
            let k = self.kind(start);
            if matches!(k, ZoneKind::Wall | ZoneKind::PassportControl)
                || area[self.index(start)].is_some()
            {
                continue;
            }
            let mut queue = VecDeque::from([start]);
            area[self.index(start)] = Some(next);
            while let Some(p) = queue.pop_front() {
                for q in self.neighbors(p) {
                    let i = self.index(q);
                    if self.kind(q) != ZoneKind::PassportControl && area[i].is_none() {
                        area[i] = Some(next);
                        queue.push_back(q);
                    }
                }
            }
            next += 1;
        }
        area
    }

    /// Areas a cell belongs to. Passport controls sit between areas and
    /// belong to every area they touch.
    pub fn areas_of(&self, p: Position) -> Vec<u32> {
        if let Some(a) = self.area[self.index(p)] {
            return vec![a];
        }
        let mut out: Vec<u32> = self
            .neighbors(p)
            .filter_map(|q| self.area[self.index(q)])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn share_area(&self, a: Position, b: Position) -> bool {
        let aa = self.areas_of(a);
        self.areas_of(b).iter().any(|x| aa.contains(x))
    }

    /// Path length between two cells, using the precomputed field of `to`
    /// when there is one.
    pub fn distance(&self, from: Position, to: Position) -> Option<u32> {
        if !self.is_walkable(from) || !self.is_walkable(to) {
            return None;
        }
        let d = match self.fields.get(&to) {
            Some(field) => field[self.index(from)],
            None => self.bfs(to)[self.index(from)],
        };
        (d != UNREACHABLE).then_some(d)
    }

    fn next_on_field(&self, field: &[u32], at: Position) -> Option<Position> {
        let d = field[self.index(at)];
        if d == 0 || d == UNREACHABLE {
            return None;
        }
        self.neighbors(at).find(|q| field[self.index(*q)] == d - 1)
    }

    /// One step along a shortest path towards `to`. `None` when already
    /// there or unreachable.
    pub fn step_toward(&self, at: Position, to: Position) -> Option<Position> {
        match self.fields.get(&to) {
            Some(field) => self.next_on_field(field, at),
            None => self.next_on_field(&self.bfs(to), at),
        }
    }

    /// Minimal-length 4-neighbour path from `from` to `to`, excluding `from`
    /// and including `to`. Empty when `from == to`. Ties are broken by the
    /// fixed neighbour order +x, -x, +y, -y.
    pub fn shortest_path(&self, from: Position, to: Position) -> Result<Vec<Position>, WorldError> {
        for p in [from, to] {
            if !self.contains(p) {
                return Err(WorldError::OutOfBounds(p));
            }
            if !self.is_walkable(p) {
                return Err(WorldError::WallCell(p));
            }
        }
        let owned;
        let field = match self.fields.get(&to) {
            Some(f) => f.as_slice(),
            None => {
                owned = self.bfs(to);
                owned.as_slice()
            }
        };
        if field[self.index(from)] == UNREACHABLE {
            return Err(WorldError::NoPath { from, to });
        }
        let mut path = Vec::with_capacity(field[self.index(from)] as usize);
        let mut at = from;
        while let Some(next) = self.next_on_field(field, at) {
            path.push(next);
            at = next;
        }
        Ok(path)
    }

    /// Uniformly chosen walkable neighbour. Exactly one draw from `rng`.
    /// Returns `at` itself on an isolated cell (not possible on a built map).
    pub fn random_walk_step<R: Rng + ?Sized>(&self, at: Position, rng: &mut R) -> Position {
        let options: Vec<Position> = self.neighbors(at).collect();
        let pick = rng.gen_range(0..options.len().max(1) as u32) as usize;
        options.get(pick).copied().unwrap_or(at)
    }

    /// Longest shortest path between any two walkable cells.
    pub fn diameter(&self) -> u32 {
        *self.diameter.get_or_init(|| {
            self.positions()
                .filter(|p| self.is_walkable(*p))
                .map(|p| {
                    self.bfs(p)
                        .into_iter()
                        .filter(|d| *d != UNREACHABLE)
                        .max()
                        .unwrap_or(0)
                })
                .max()
                .unwrap_or(0)
        })
    }

    /// Nearest cell of `kind` from `at` by path length; ties go to the
    /// earliest cell in the zone index.
    pub fn nearest(&self, at: Position, kind: ZoneKind) -> Option<Position> {
        self.zone(kind)
            .iter()
            .filter_map(|p| self.distance(at, *p).map(|d| (d, *p)))
            .min_by_key(|(d, _)| *d)
            .map(|(_, p)| p)
    }
}

impl fmt::Display for AirportMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                write!(f, "{}", self.kind(Position { x, y }).glyph())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Row indices of the horizontal bands, bottom (entrance) to top (gates).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bands {
    pub entrance: u32,
    pub flight_info: u32,
    pub checkin: u32,
    pub control: u32,
    pub shops: u32,
    pub belts: u32,
    pub info: u32,
    pub gates: u32,
}

impl Bands {
    pub const MIN_HEIGHT: u32 = 16;
    pub const MIN_WIDTH: u32 = 5;

    pub fn for_height(h: u32) -> Self {
        Bands {
            entrance: 0,
            flight_info: h * 3 / 16,
            checkin: h * 5 / 16,
            control: h / 2,
            shops: h * 11 / 16,
            belts: h * 13 / 16,
            info: h * 15 / 16 - 1,
            gates: h - 1,
        }
    }
}

/// `n` distinct columns spread evenly over `width`.
fn spread(n: u32, width: u32) -> impl Iterator<Item = u32> {
    (0..n).map(move |i| ((2 * i + 1) * width) / (2 * n))
}

/// Lays out the airport as horizontal bands in traversal order: entrance
/// and exit, flight information panel, check-in counters, the wall with
/// passport controls, shops, baggage belts, boarding/baggage information
/// panels and boarding gates. Pure function of the configuration.
pub fn build_layout(config: &SetupParameters) -> Result<AirportMap, WorldError> {
    let (w, h) = (config.grid_width, config.grid_height);
    if w < Bands::MIN_WIDTH || h < Bands::MIN_HEIGHT {
        return Err(WorldError::GridTooSmall {
            width: w,
            height: h,
            min_width: Bands::MIN_WIDTH,
            min_height: Bands::MIN_HEIGHT,
        });
    }
    if config.shop_types as usize > ShopType::MAX_TYPES {
        return Err(WorldError::TooManyShopTypes(config.shop_types));
    }
    let outgoing = config.outgoing_nonami + config.outgoing_ami;
    let ingoing = config.ingoing_nonami + config.ingoing_ami;
    if outgoing > 0 && config.boarding_gates == 0 {
        return Err(WorldError::MissingZone("boarding gate"));
    }
    if outgoing > 0 && config.checkin_counters == 0 {
        return Err(WorldError::MissingZone("check-in counter"));
    }
    if ingoing > 0 && config.baggage_belts == 0 {
        return Err(WorldError::MissingZone("baggage belt"));
    }
    if ingoing + outgoing > 0 && config.passport_controls == 0 {
        return Err(WorldError::MissingZone("passport control"));
    }
    // Ingoing passengers start at a gate even if nobody departs.
    if ingoing > 0 && config.boarding_gates == 0 {
        return Err(WorldError::MissingZone("boarding gate"));
    }
    let shops = config.shop_types * config.shops_per_type;
    for (what, count) in [
        ("check-in counters", config.checkin_counters),
        ("shops", shops),
        ("boarding gates", config.boarding_gates),
        ("baggage belts", config.baggage_belts),
        ("passport controls", config.passport_controls),
    ] {
        if count > w {
            return Err(WorldError::DoesNotFit {
                what,
                count,
                width: w,
            });
        }
    }

    let bands = Bands::for_height(h);
    let mut cells = vec![ZoneKind::Open; (w * h) as usize];
    let mut set = |x: u32, y: u32, k: ZoneKind| cells[(y * w + x) as usize] = k;

    let mid = w / 2;
    set(mid - 1, bands.entrance, ZoneKind::Entrance);
    set(mid + 1, bands.entrance, ZoneKind::Exit);
    set(0, bands.flight_info, ZoneKind::FlightInfoPanel);
    for x in spread(config.checkin_counters, w) {
        set(x, bands.checkin, ZoneKind::CheckinCounter);
    }
    for x in 0..w {
        set(x, bands.control, ZoneKind::Wall);
    }
    if config.passport_controls == 0 {
        set(mid, bands.control, ZoneKind::Open);
    }
    for x in spread(config.passport_controls, w) {
        set(x, bands.control, ZoneKind::PassportControl);
    }
    for (i, x) in spread(shops, w).enumerate() {
        let kind = ShopType((i as u32 % config.shop_types.max(1)) as u8);
        set(x, bands.shops, ZoneKind::Shop(kind));
    }
    for x in spread(config.baggage_belts, w) {
        set(x, bands.belts, ZoneKind::BaggageBelt);
    }
    set(w - 1, bands.info, ZoneKind::BoardingInfoPanel);
    set(w - 2, bands.info, ZoneKind::BaggageInfoPanel);
    for x in spread(config.boarding_gates, w) {
        set(x, bands.gates, ZoneKind::BoardingGate);
    }
    AirportMap::from_cells(w, h, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> SetupParameters {
        SetupParameters {
            checkin_counters: 2,
            passport_controls: 1,
            shop_types: 3,
            shops_per_type: 1,
            boarding_gates: 2,
            baggage_belts: 1,
            ..SetupParameters::default()
        }
    }

    #[test]
    fn zone_counts_match_config() {
        let map = build_layout(&params()).unwrap();
        assert_eq!(map.zone(ZoneKind::CheckinCounter).len(), 2);
        assert_eq!(map.zone(ZoneKind::PassportControl).len(), 1);
        assert_eq!(map.shops().len(), 3);
        assert_eq!(map.zone(ZoneKind::BoardingGate).len(), 2);
        assert_eq!(map.zone(ZoneKind::BaggageBelt).len(), 1);
        assert_eq!(map.zone(ZoneKind::Entrance).len(), 1);
        assert_eq!(map.zone(ZoneKind::Exit).len(), 1);
    }

    #[test]
    fn zero_gates_with_departures_rejected() {
        let p = SetupParameters {
            boarding_gates: 0,
            outgoing_nonami: 1,
            ..params()
        };
        assert_eq!(
            build_layout(&p).unwrap_err(),
            WorldError::MissingZone("boarding gate")
        );
    }

    #[test]
    fn oversized_zone_count_rejected() {
        let p = SetupParameters {
            grid_width: 10,
            shop_types: 3,
            shops_per_type: 4,
            ..params()
        };
        assert!(matches!(
            build_layout(&p),
            Err(WorldError::DoesNotFit { what: "shops", .. })
        ));
    }

    #[test]
    fn every_legend_element_present() {
        let map = build_layout(&SetupParameters::default()).unwrap();
        for kind in [
            ZoneKind::CheckinCounter,
            ZoneKind::FlightInfoPanel,
            ZoneKind::PassportControl,
            ZoneKind::Wall,
            ZoneKind::BoardingInfoPanel,
            ZoneKind::BaggageInfoPanel,
            ZoneKind::BoardingGate,
            ZoneKind::BaggageBelt,
        ] {
            assert!(
                map.cells.contains(&kind),
                "missing {kind:?} in default layout"
            );
        }
        assert!(!map.shops().is_empty());
    }

    #[test]
    fn bands_are_monotone_along_the_axis() {
        let map = build_layout(&SetupParameters::default()).unwrap();
        let row = |k: ZoneKind| map.zone(k)[0].y;
        let shop_row = map.shops()[0].0.y;
        assert!(row(ZoneKind::Entrance) < row(ZoneKind::CheckinCounter));
        assert!(row(ZoneKind::CheckinCounter) < row(ZoneKind::PassportControl));
        assert!(row(ZoneKind::PassportControl) < shop_row);
        assert!(shop_row < row(ZoneKind::BaggageBelt));
        assert!(row(ZoneKind::BaggageBelt) < row(ZoneKind::BoardingGate));
    }

    #[test]
    fn layout_is_deterministic() {
        let a = build_layout(&SetupParameters::default()).unwrap();
        let b = build_layout(&SetupParameters::default()).unwrap();
        assert_eq!(a.zone_index(), b.zone_index());
        assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn text_round_trip() {
        let map = build_layout(&SetupParameters::default()).unwrap();
        let again = AirportMap::from_text(&map.to_string()).unwrap();
        assert_eq!(again.to_string(), map.to_string());
    }

    #[test]
    fn controls_separate_landside_from_airside() {
        let map = build_layout(&params()).unwrap();
        let entrance = map.zone(ZoneKind::Entrance)[0];
        let gate = map.zone(ZoneKind::BoardingGate)[0];
        let control = map.zone(ZoneKind::PassportControl)[0];
        assert!(!map.share_area(entrance, gate));
        assert!(map.share_area(entrance, control));
        assert!(map.share_area(gate, control));
    }

    #[test]
    fn path_identity_is_empty() {
        let map = build_layout(&params()).unwrap();
        let p = Position::new(3, 3);
        assert!(map.shortest_path(p, p).unwrap().is_empty());
    }

    #[test]
    fn straight_corridor() {
        let map = AirportMap::from_text("#######\n.......\n#######\n").unwrap();
        let path = map
            .shortest_path(Position::new(0, 1), Position::new(5, 1))
            .unwrap();
        assert_eq!(path.len(), 5);
        assert_eq!(path.last(), Some(&Position::new(5, 1)));
    }

    #[test]
    fn routes_around_wall_end() {
        // Wall from x=0..4 at y=2; target straight above the start.
        let map = AirportMap::from_text(".......\n.......\n#####..\n.......\n").unwrap();
        let from = Position::new(1, 0);
        let to = Position::new(1, 3);
        let path = map.shortest_path(from, to).unwrap();
        // Over to x=5, up three rows, back to x=1.
        assert_eq!(path.len(), 4 + 3 + 4);
        for w in path.windows(2) {
            assert_eq!(w[0].manhattan(w[1]), 1);
            assert!(map.is_walkable(w[1]));
        }
    }

    #[test]
    fn unreachable_target_is_error() {
        let text = "...\n###\n...\n";
        // Disconnected maps are rejected outright.
        assert!(matches!(
            AirportMap::from_text(text),
            Err(WorldError::Disconnected(_))
        ));
    }

    #[test]
    fn wall_endpoints_rejected() {
        let map = AirportMap::from_text("..#\n...\n").unwrap();
        assert_eq!(
            map.shortest_path(Position::new(0, 0), Position::new(2, 1)),
            Err(WorldError::WallCell(Position::new(2, 1)))
        );
    }

    #[test]
    fn forced_random_step() {
        let map = AirportMap::from_text("#.#\n#.#\n###\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            assert_eq!(
                map.random_walk_step(Position::new(1, 0), &mut rng),
                Position::new(1, 1)
            );
        }
    }

    #[test]
    fn random_step_replays_with_seed() {
        let map = AirportMap::from_text("...\n...\n...\n").unwrap();
        let centre = Position::new(1, 1);
        let walk = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..8)
                .map(|_| map.random_walk_step(centre, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(walk(42), walk(42));
    }

    #[test]
    fn random_step_is_uniform() {
        let map = AirportMap::from_text("...\n...\n...\n").unwrap();
        let centre = Position::new(1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts: HashMap<Position, u32> = HashMap::new();
        let n = 10_000;
        for _ in 0..n {
            *counts
                .entry(map.random_walk_step(centre, &mut rng))
                .or_default() += 1;
        }
        assert_eq!(counts.len(), 4);
        for c in counts.values() {
            let freq = *c as f64 / n as f64;
            assert!((freq - 0.25).abs() < 0.05, "frequency {freq}");
        }
    }

    #[test]
    fn random_step_uses_one_draw() {
        let map = AirportMap::from_text("...\n...\n...\n").unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        map.random_walk_step(Position::new(1, 1), &mut a);
        let _: u32 = b.gen_range(0..4);
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn diameter_of_open_grid() {
        let map = AirportMap::from_text("....\n....\n....\n").unwrap();
        assert_eq!(map.diameter(), 3 + 2);
    }
}
