//! Node placement, distances, and random-waypoint mobility on two crossing roads.
//!
//! The road network is a horizontal segment `y = road_y, x ∈ [0, width]` and
//! a vertical segment `x = road_x, y ∈ [0, height]`. Vehicles move along the
//! segments only; travelling between the two roads goes through the
//! intersection.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Tolerance (meters) for "lies on a road" checks.
pub const ROAD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn lerp(&self, to: &Position, t: f64) -> Position {
        Position::new(self.x + (to.x - self.x) * t, self.y + (to.y - self.y) * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub source: Position,
    pub destination: Position,
}

/// Snapshot of the K source/destination pairs and the RSU. The order of
/// `pairs` defines the pair index used everywhere else (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGeometry {
    pairs: Vec<Pair>,
    rsu: Position,
}

impl NetworkGeometry {
    pub fn new(pairs: Vec<Pair>, rsu: Position) -> Result<Self> {
        if pairs.is_empty() {
            return Err(invalid("pairs", "at least one source/destination pair is required"));
        }
        let all_finite = rsu.is_finite()
            && pairs
                .iter()
                .all(|p| p.source.is_finite() && p.destination.is_finite());
        if !all_finite {
            return Err(invalid("pairs", "coordinates must be finite"));
        }
        Ok(NetworkGeometry { pairs, rsu })
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn rsu(&self) -> Position {
        self.rsu
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    /// Vehicles in the order (S_0, D_0, S_1, D_1, ...).
    pub fn vehicles(&self) -> impl Iterator<Item = Position> + '_ {
        self.pairs.iter().flat_map(|p| [p.source, p.destination])
    }

    fn with_vehicles(&self, vehicles: &[Position]) -> NetworkGeometry {
        let pairs = vehicles
            .chunks_exact(2)
            .map(|c| Pair {
                source: c[0],
                destination: c[1],
            })
            .collect();
        NetworkGeometry {
            pairs,
            rsu: self.rsu,
        }
    }
}

/// Per-pair link distances: V2V `|S_i - D_i|` and V2R `(|S_i - R|, |R - D_i|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceInfo {
    pub v2v: Vec<f64>,
    pub v2r: Vec<(f64, f64)>,
}

impl DistanceInfo {
    pub fn k(&self) -> usize {
        self.v2v.len()
    }

    /// All 3K distances rounded to a `step_m` grid, in the order
    /// (v2v_0, sr_0, rd_0, v2v_1, ...).
    pub fn quantized(&self, step_m: f64) -> Vec<i64> {
        self.v2v
            .iter()
            .zip(&self.v2r)
            .flat_map(|(&d, &(sr, rd))| [d, sr, rd])
            .map(|d| (d / step_m).round() as i64)
            .collect()
    }

    /// Inverse of [`DistanceInfo::quantized`].
    pub fn from_quantized(key: &[i64], step_m: f64) -> Result<Self> {
        if key.is_empty() || !key.len().is_multiple_of(3) {
            return Err(invalid("distances", "quantized key length must be a positive multiple of 3"));
        }
        let mut v2v = Vec::with_capacity(key.len() / 3);
        let mut v2r = Vec::with_capacity(key.len() / 3);
        for c in key.chunks_exact(3) {
            v2v.push(c[0] as f64 * step_m);
            v2r.push((c[1] as f64 * step_m, c[2] as f64 * step_m));
        }
        Ok(DistanceInfo { v2v, v2r })
    }

    /// Copy with every distance raised to at least `min_m`.
    pub fn clamped_below(&self, min_m: f64) -> DistanceInfo {
        DistanceInfo {
            v2v: self.v2v.iter().map(|d| d.max(min_m)).collect(),
            v2r: self
                .v2r
                .iter()
                .map(|&(a, b)| (a.max(min_m), b.max(min_m)))
                .collect(),
        }
    }
}

pub fn distances(geometry: &NetworkGeometry) -> DistanceInfo {
    let rsu = geometry.rsu;
    let v2v = geometry
        .pairs
        .iter()
        .map(|p| p.source.distance(&p.destination))
        .collect();
    let v2r = geometry
        .pairs
        .iter()
        .map(|p| (p.source.distance(&rsu), rsu.distance(&p.destination)))
        .collect();
    DistanceInfo { v2v, v2r }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityParams {
    pub width_m: f64,
    pub height_m: f64,
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    /// y coordinate of the horizontal road; `None` puts it mid-area.
    pub road_y: Option<f64>,
    /// x coordinate of the vertical road; `None` puts it mid-area.
    pub road_x: Option<f64>,
    /// RSU location; `None` puts it at the road intersection.
    pub rsu: Option<Position>,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams {
            width_m: 1000.0,
            height_m: 1000.0,
            speed_min_kmh: 20.0,
            speed_max_kmh: 80.0,
            road_y: None,
            road_x: None,
            rsu: None,
        }
    }
}

impl MobilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.width_m >= 0.0 && self.height_m >= 0.0)
            || !self.width_m.is_finite()
            || !self.height_m.is_finite()
        {
            return Err(invalid("area", "side lengths must be finite and nonnegative"));
        }
        if !(self.speed_min_kmh >= 0.0 && self.speed_min_kmh <= self.speed_max_kmh)
            || !self.speed_max_kmh.is_finite()
        {
            return Err(invalid("speed", "require 0 <= speed_min <= speed_max"));
        }
        let roads = self.roads();
        if !(0.0..=self.height_m).contains(&roads.road_y) || !(0.0..=self.width_m).contains(&roads.road_x) {
            return Err(invalid("road", "roads must cross inside the area"));
        }
        Ok(())
    }

    pub fn roads(&self) -> RoadNetwork {
        RoadNetwork {
            width: self.width_m,
            height: self.height_m,
            road_y: self.road_y.unwrap_or(self.height_m / 2.0),
            road_x: self.road_x.unwrap_or(self.width_m / 2.0),
        }
    }

    pub fn rsu_position(&self) -> Position {
        self.rsu.unwrap_or_else(|| self.roads().intersection())
    }

    fn draw_speed_mps<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let kmh = if self.speed_max_kmh > self.speed_min_kmh {
            rng.random_range(self.speed_min_kmh..=self.speed_max_kmh)
        } else {
            self.speed_min_kmh
        };
        kmh / 3.6
    }
}

/// Two axis-aligned roads crossing at `(road_x, road_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadNetwork {
    pub width: f64,
    pub height: f64,
    pub road_y: f64,
    pub road_x: f64,
}

impl RoadNetwork {
    pub fn intersection(&self) -> Position {
        Position::new(self.road_x, self.road_y)
    }

    pub fn total_length(&self) -> f64 {
        self.width + self.height
    }

    pub fn on_horizontal(&self, p: &Position) -> bool {
        (p.y - self.road_y).abs() <= ROAD_TOLERANCE
            && p.x >= -ROAD_TOLERANCE
            && p.x <= self.width + ROAD_TOLERANCE
    }

    pub fn on_vertical(&self, p: &Position) -> bool {
        (p.x - self.road_x).abs() <= ROAD_TOLERANCE
            && p.y >= -ROAD_TOLERANCE
            && p.y <= self.height + ROAD_TOLERANCE
    }

    pub fn contains(&self, p: &Position) -> bool {
        self.on_horizontal(p) || self.on_vertical(p)
    }

    /// Uniform point over the union of both segments.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        let total = self.total_length();
        if total <= 0.0 {
            return self.intersection();
        }
        let s = rng.random_range(0.0..total);
        if s < self.width {
            Position::new(s, self.road_y)
        } else {
            Position::new(self.road_x, s - self.width)
        }
    }

    /// Nearest point on the road network.
    pub fn project(&self, p: &Position) -> Position {
        let h = Position::new(p.x.clamp(0.0, self.width), self.road_y);
        let v = Position::new(self.road_x, p.y.clamp(0.0, self.height));
        if p.distance(&h) <= p.distance(&v) {
            h
        } else {
            v
        }
    }

    /// Corner points of the shortest along-road path from `from` to `to`,
    /// excluding `from` and including `to`.
    pub fn route(&self, from: &Position, to: &Position) -> VecDeque<Position> {
        let mut route = VecDeque::new();
        let mut start = *from;
        if !self.contains(&start) {
            start = self.project(&start);
            route.push_back(start);
        }
        let same_road = (self.on_horizontal(&start) && self.on_horizontal(to))
            || (self.on_vertical(&start) && self.on_vertical(to));
        if !same_road {
            route.push_back(self.intersection());
        }
        route.push_back(*to);
        route
    }

    /// Snaps a position that drifted by rounding back onto the road it is on.
    fn snap(&self, p: Position) -> Position {
        let dy = (p.y - self.road_y).abs();
        let dx = (p.x - self.road_x).abs();
        if dy <= dx {
            Position::new(p.x.clamp(0.0, self.width), self.road_y)
        } else {
            Position::new(self.road_x, p.y.clamp(0.0, self.height))
        }
    }
}

/// Places K sources and K destinations uniformly on the roads, the RSU at
/// the configured position (the intersection by default).
pub fn initial_layout<R: Rng + ?Sized>(
    k: usize,
    params: &MobilityParams,
    rng: &mut R,
) -> Result<NetworkGeometry> {
    if k == 0 {
        return Err(invalid("k", "K must be at least 1"));
    }
    params.validate()?;
    let roads = params.roads();
    let pairs = (0..k)
        .map(|_| Pair {
            source: roads.sample_point(rng),
            destination: roads.sample_point(rng),
        })
        .collect();
    NetworkGeometry::new(pairs, params.rsu_position())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleLeg {
    /// Remaining corner points; the last one is the waypoint.
    pub route: VecDeque<Position>,
    pub speed_mps: f64,
}

/// Per-vehicle waypoint state, indexed like [`NetworkGeometry::vehicles`].
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityState {
    legs: Vec<VehicleLeg>,
}

impl MobilityState {
    /// Draws a first waypoint and speed for every vehicle.
    pub fn new<R: Rng + ?Sized>(
        geometry: &NetworkGeometry,
        params: &MobilityParams,
        rng: &mut R,
    ) -> Result<Self> {
        params.validate()?;
        let roads = params.roads();
        let legs = geometry
            .vehicles()
            .map(|pos| VehicleLeg {
                route: roads.route(&pos, &roads.sample_point(rng)),
                speed_mps: params.draw_speed_mps(rng),
            })
            .collect();
        Ok(MobilityState { legs })
    }

    /// Like [`MobilityState::new`] with one random stream per vehicle, so
    /// each vehicle's path does not depend on how the others move.
    pub fn with_streams<R: Rng>(geometry: &NetworkGeometry, params: &MobilityParams, rngs: &mut [R]) -> Result<Self> {
        params.validate()?;
        check_streams(geometry, rngs.len())?;
        let roads = params.roads();
        let legs = geometry
            .vehicles()
            .zip(rngs.iter_mut())
            .map(|(pos, rng)| VehicleLeg {
                route: roads.route(&pos, &roads.sample_point(rng)),
                speed_mps: params.draw_speed_mps(rng),
            })
            .collect();
        Ok(MobilityState { legs })
    }

    pub fn from_legs(legs: Vec<VehicleLeg>) -> Self {
        MobilityState { legs }
    }

    pub fn legs(&self) -> &[VehicleLeg] {
        &self.legs
    }
}

/// Advances every vehicle along its route for `elapsed_s` seconds. On
/// reaching a waypoint a new waypoint and speed are drawn. The RSU does
/// not move.
pub fn mobility_step<R: Rng + ?Sized>(
    geometry: &NetworkGeometry,
    state: &mut MobilityState,
    params: &MobilityParams,
    elapsed_s: f64,
    rng: &mut R,
) -> Result<NetworkGeometry> {
    if !(elapsed_s > 0.0) || !elapsed_s.is_finite() {
        return Err(invalid("elapsed", "mobility step requires a positive duration"));
    }
    if state.legs.len() != 2 * geometry.k() {
        return Err(Error::DegenerateGeometry(format!(
            "mobility state tracks {} vehicles, geometry has {}",
            state.legs.len(),
            2 * geometry.k()
        )));
    }
    let roads = params.roads();
    let mut moved = Vec::with_capacity(state.legs.len());
    for (pos, leg) in geometry.vehicles().zip(state.legs.iter_mut()) {
        moved.push(advance_vehicle(pos, leg, &roads, params, elapsed_s, rng));
    }
    Ok(geometry.with_vehicles(&moved))
}

fn check_streams(geometry: &NetworkGeometry, n: usize) -> Result<()> {
    if n != 2 * geometry.k() {
        return Err(invalid("rngs", "need one random stream per vehicle"));
    }
    Ok(())
}

/// [`mobility_step`] with one random stream per vehicle, in the order of
/// [`NetworkGeometry::vehicles`].
pub fn mobility_step_streams<R: Rng>(
    geometry: &NetworkGeometry,
    state: &mut MobilityState,
    params: &MobilityParams,
    elapsed_s: f64,
    rngs: &mut [R],
) -> Result<NetworkGeometry> {
    if !(elapsed_s > 0.0) || !elapsed_s.is_finite() {
        return Err(invalid("elapsed", "mobility step requires a positive duration"));
    }
    check_streams(geometry, rngs.len())?;
    if state.legs.len() != rngs.len() {
        return Err(Error::DegenerateGeometry(format!(
            "mobility state tracks {} vehicles, geometry has {}",
            state.legs.len(),
            rngs.len()
        )));
    }
    let roads = params.roads();
    let moved: Vec<Position> = geometry
        .vehicles()
        .zip(state.legs.iter_mut())
        .zip(rngs.iter_mut())
        .map(|((pos, leg), rng)| advance_vehicle(pos, leg, &roads, params, elapsed_s, rng))
        .collect();
    Ok(geometry.with_vehicles(&moved))
}

fn advance_vehicle<R: Rng + ?Sized>(
    mut pos: Position,
    leg: &mut VehicleLeg,
    roads: &RoadNetwork,
    params: &MobilityParams,
    elapsed_s: f64,
    rng: &mut R,
) -> Position {
    let mut remaining = elapsed_s;
    // Bounded so that a zero-length road network cannot spin forever.
    let mut redraws = 0;
    while remaining > 0.0 {
        if leg.speed_mps <= 0.0 {
            break;
        }
        let Some(&next) = leg.route.front() else {
            if redraws >= 64 {
                break;
            }
            redraws += 1;
            leg.route = roads.route(&pos, &roads.sample_point(rng));
            leg.speed_mps = params.draw_speed_mps(rng);
            continue;
        };
        let gap = pos.distance(&next);
        let reach = leg.speed_mps * remaining;
        if reach >= gap {
            pos = next;
            remaining -= gap / leg.speed_mps;
            leg.route.pop_front();
        } else {
            pos = pos.lerp(&next, reach / gap);
            remaining = 0.0;
        }
    }
    if roads.contains(&pos) {
        return pos;
    }
    // Off-road start positions (explicit layouts) are left alone; only
    // rounding drift is snapped back.
    let snapped = roads.snap(pos);
    if snapped.distance(&pos) < 1e-3 {
        snapped
    } else {
        pos
    }
}
