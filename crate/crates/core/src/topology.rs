//! Manhattan-grid deployment: canyon geometry, gNB/relay placement, UE drops
//! and rectilinear street routes.
//!
//! Avenues run north-south (constant x), streets run east-west (constant y).
//! Indices start at the west and south boundaries. Azimuths are degrees
//! counter-clockwise from east.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamforming::ArrayGeometry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Azimuth from `self` toward `other`, degrees in `(-180, 180]`.
    pub fn azimuth_to(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }
}

/// Antenna array shapes (azimuth x elevation) used by every node type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaSpec {
    pub gnb: ArrayGeometry,
    pub relay_bh: ArrayGeometry,
    pub relay_ac: ArrayGeometry,
    pub ue: ArrayGeometry,
}

impl Default for AntennaSpec {
    fn default() -> Self {
        AntennaSpec {
            gnb: ArrayGeometry::new(16, 4),
            relay_bh: ArrayGeometry::new(4, 1),
            relay_ac: ArrayGeometry::new(16, 4),
            ue: ArrayGeometry::new(2, 1),
        }
    }
}

/// Grid layout parameters.
///
/// gNBs sit on streets with `index % gnb_street_stride == gnb_street_offset`, at
/// every `gnb_avenue_stride`-th avenue; with `gnb_stagger` the avenue phase
/// advances by one on each successive gNB street so that every relay has a
/// donor on its own avenue. Relays sit on streets with
/// `index % relay_street_stride == relay_street_offset` at every
/// `relay_avenue_stride`-th avenue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub avenues: usize,
    pub streets: usize,
    pub avenue_spacing: f64,
    pub street_spacing: f64,
    pub avenue_width: f64,
    pub street_width: f64,
    pub gnb_street_stride: usize,
    pub gnb_street_offset: usize,
    pub gnb_avenue_stride: usize,
    pub gnb_stagger: bool,
    pub relay_street_stride: usize,
    pub relay_street_offset: usize,
    pub relay_avenue_stride: usize,
    /// Scan range (half width) of the relay access panels around their
    /// east/west boresights.
    pub relay_ac_half_arc_deg: f64,
    pub ue_count: usize,
    pub antennas: AntennaSpec,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            avenues: 12,
            streets: 27,
            avenue_spacing: 200.0,
            street_spacing: 80.0,
            avenue_width: 14.0,
            street_width: 8.0,
            gnb_street_stride: 2,
            gnb_street_offset: 0,
            gnb_avenue_stride: 2,
            gnb_stagger: true,
            relay_street_stride: 2,
            relay_street_offset: 1,
            relay_avenue_stride: 1,
            relay_ac_half_arc_deg: 65.0,
            ue_count: 840,
            antennas: AntennaSpec::default(),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    format!("grid.{name}"),
                    format!("must be > 0, got {v}"),
                ))
            }
        };
        positive("avenue_width", self.avenue_width)?;
        positive("street_width", self.street_width)?;
        if !(self.relay_ac_half_arc_deg > 0.0 && self.relay_ac_half_arc_deg <= 90.0) {
            return Err(Error::config(
                "grid.relay_ac_half_arc_deg",
                "must lie in (0, 90]",
            ));
        }
        if !(self.avenue_spacing > self.avenue_width) {
            return Err(Error::config(
                "grid.avenue_spacing",
                "must exceed avenue_width",
            ));
        }
        if !(self.street_spacing > self.street_width) {
            return Err(Error::config(
                "grid.street_spacing",
                "must exceed street_width",
            ));
        }
        for (name, v) in [
            ("avenues", self.avenues),
            ("streets", self.streets),
            ("gnb_street_stride", self.gnb_street_stride),
            ("gnb_avenue_stride", self.gnb_avenue_stride),
            ("relay_street_stride", self.relay_street_stride),
            ("relay_avenue_stride", self.relay_avenue_stride),
        ] {
            if v == 0 {
                return Err(Error::config(format!("grid.{name}"), "must be >= 1"));
            }
        }
        if self.gnb_street_offset >= self.gnb_street_stride {
            return Err(Error::config(
                "grid.gnb_street_offset",
                "must be smaller than gnb_street_stride",
            ));
        }
        if self.relay_street_offset >= self.relay_street_stride {
            return Err(Error::config(
                "grid.relay_street_offset",
                "must be smaller than relay_street_stride",
            ));
        }
        for (name, arr) in [
            ("gnb", self.antennas.gnb),
            ("relay_bh", self.antennas.relay_bh),
            ("relay_ac", self.antennas.relay_ac),
            ("ue", self.antennas.ue),
        ] {
            arr.validate()
                .map_err(|e| Error::config(format!("grid.antennas.{name}"), e.to_string()))?;
        }
        Ok(())
    }

    pub fn avenue_x(&self, index: usize) -> f64 {
        index as f64 * self.avenue_spacing
    }

    pub fn street_y(&self, index: usize) -> f64 {
        index as f64 * self.street_spacing
    }

    /// Outer extent (width, height) of the canyon network in metres.
    pub fn area(&self) -> (f64, f64) {
        (
            self.avenue_x(self.avenues - 1) + self.avenue_width,
            self.street_y(self.streets - 1) + self.street_width,
        )
    }

    fn x_bounds(&self) -> (f64, f64) {
        let h = self.avenue_width / 2.0;
        (-h, self.avenue_x(self.avenues - 1) + h)
    }

    fn y_bounds(&self) -> (f64, f64) {
        let h = self.street_width / 2.0;
        (-h, self.street_y(self.streets - 1) + h)
    }

    pub fn is_gnb_intersection(&self, avenue: usize, street: usize) -> bool {
        if street % self.gnb_street_stride != self.gnb_street_offset {
            return false;
        }
        let phase = if self.gnb_stagger {
            street / self.gnb_street_stride
        } else {
            0
        };
        (avenue + phase).is_multiple_of(self.gnb_avenue_stride)
    }

    pub fn is_relay_intersection(&self, avenue: usize, street: usize) -> bool {
        street % self.relay_street_stride == self.relay_street_offset
            && avenue.is_multiple_of(self.relay_avenue_stride)
            && !self.is_gnb_intersection(avenue, street)
    }

    /// Canyons containing `p`; empty when `p` is inside a building block.
    pub fn canyons_of(&self, p: Point) -> Vec<Canyon> {
        let mut out = Vec::with_capacity(2);
        let (x0, x1) = self.x_bounds();
        let (y0, y1) = self.y_bounds();
        if p.x < x0 || p.x > x1 || p.y < y0 || p.y > y1 {
            return out;
        }
        let a = (p.x / self.avenue_spacing).round();
        if a >= 0.0
            && (a as usize) < self.avenues
            && (p.x - a * self.avenue_spacing).abs() <= self.avenue_width / 2.0
        {
            out.push(Canyon::Avenue(a as usize));
        }
        let s = (p.y / self.street_spacing).round();
        if s >= 0.0
            && (s as usize) < self.streets
            && (p.y - s * self.street_spacing).abs() <= self.street_width / 2.0
        {
            out.push(Canyon::Street(s as usize));
        }
        out
    }

    pub fn is_outdoor(&self, p: Point) -> bool {
        !self.canyons_of(p).is_empty()
    }

    /// True for points on a relay street outside every avenue canyon: the
    /// locations relays are deployed to cover.
    pub fn is_coverage_gap(&self, p: Point) -> bool {
        let canyons = self.canyons_of(p);
        !canyons.iter().any(|c| matches!(c, Canyon::Avenue(_)))
            && canyons.iter().any(|c| {
                matches!(c, Canyon::Street(s) if s % self.relay_street_stride == self.relay_street_offset)
            })
    }

    /// Shortest rectilinear route between two outdoor points.
    ///
    /// Routes with fewer corners are preferred, then shorter ones; remaining
    /// ties go to the route whose corners sit closest to an endpoint.
    pub fn route(&self, a: Point, b: Point) -> Result<StreetRoute> {
        let ca = self.canyons_of(a);
        let cb = self.canyons_of(b);
        if ca.is_empty() {
            return Err(Error::invalid(format!(
                "point ({}, {}) is not in a canyon",
                a.x, a.y
            )));
        }
        if cb.is_empty() {
            return Err(Error::invalid(format!(
                "point ({}, {}) is not in a canyon",
                b.x, b.y
            )));
        }
        if ca.iter().any(|c| cb.contains(c)) {
            return Ok(StreetRoute::line_of_sight(a, b));
        }

        fn consider(best: &mut Option<StreetRoute>, cand: StreetRoute) {
            if best.as_ref().is_none_or(|cur| cand.better_than(cur)) {
                *best = Some(cand);
            }
        }
        let mut best: Option<StreetRoute> = None;

        for &p in &ca {
            for &q in &cb {
                match (p, q) {
                    (Canyon::Street(_), Canyon::Avenue(_)) => {
                        consider(
                            &mut best,
                            StreetRoute::through(a, b, &[Point::new(b.x, a.y)]),
                        );
                    }
                    (Canyon::Avenue(_), Canyon::Street(_)) => {
                        consider(
                            &mut best,
                            StreetRoute::through(a, b, &[Point::new(a.x, b.y)]),
                        );
                    }
                    _ => {}
                }
            }
        }
        if let Some(r) = best.take() {
            return Ok(r);
        }

        for &p in &ca {
            for &q in &cb {
                match (p, q) {
                    (Canyon::Street(_), Canyon::Street(_)) => {
                        for k in 0..self.avenues {
                            let x = self.avenue_x(k);
                            consider(
                                &mut best,
                                StreetRoute::through(
                                    a,
                                    b,
                                    &[Point::new(x, a.y), Point::new(x, b.y)],
                                ),
                            );
                        }
                    }
                    (Canyon::Avenue(_), Canyon::Avenue(_)) => {
                        for k in 0..self.streets {
                            let y = self.street_y(k);
                            consider(
                                &mut best,
                                StreetRoute::through(
                                    a,
                                    b,
                                    &[Point::new(a.x, y), Point::new(b.x, y)],
                                ),
                            );
                        }
                    }
                    _ => {}
                }
            }
        }
        best.ok_or_else(|| Error::invalid("no street route between points"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Canyon {
    Avenue(usize),
    Street(usize),
}

/// Rectilinear path along canyons: legs between consecutive waypoints and the
/// turn angle at each corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreetRoute {
    pub corners: Vec<Point>,
    pub legs: Vec<f64>,
    pub deviations_deg: Vec<f64>,
    pub length: f64,
}

impl StreetRoute {
    fn line_of_sight(a: Point, b: Point) -> Self {
        let d = a.distance(&b);
        StreetRoute {
            corners: Vec::new(),
            legs: vec![d],
            deviations_deg: Vec::new(),
            length: d,
        }
    }

    fn through(a: Point, b: Point, corners: &[Point]) -> Self {
        let mut pts = Vec::with_capacity(corners.len() + 2);
        pts.push(a);
        pts.extend_from_slice(corners);
        pts.push(b);
        let legs: Vec<f64> = pts.windows(2).map(|w| w[0].distance(&w[1])).collect();
        let deviations_deg = pts
            .windows(3)
            .map(|w| {
                let h1 = w[0].azimuth_to(&w[1]);
                let h2 = w[1].azimuth_to(&w[2]);
                crate::units::wrap_deg(h2 - h1).abs()
            })
            .collect();
        StreetRoute {
            corners: corners.to_vec(),
            length: legs.iter().sum(),
            legs,
            deviations_deg,
        }
    }

    pub fn corner_count(&self) -> usize {
        self.corners.len()
    }

    pub fn is_line_of_sight(&self) -> bool {
        self.corners.is_empty()
    }

    /// Sum over corners of `sqrt(d1*d2/(d1+d2))`, the geometric part of the
    /// knife-edge parameter; smaller means less diffraction.
    fn corner_proxy(&self) -> f64 {
        (0..self.corners.len())
            .map(|k| {
                let (d1, d2) = (self.legs[k], self.legs[k + 1]);
                if d1 + d2 > 0.0 {
                    (d1 * d2 / (d1 + d2)).sqrt()
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn better_than(&self, other: &StreetRoute) -> bool {
        const EPS: f64 = 1e-9;
        if self.corners.len() != other.corners.len() {
            return self.corners.len() < other.corners.len();
        }
        if (self.length - other.length).abs() > EPS {
            return self.length < other.length;
        }
        self.corner_proxy() < other.corner_proxy() - EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Gnb,
    Relay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorRole {
    GnbAccess,
    RelayBh,
    RelayAc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub boresight_deg: f64,
    pub role: SectorRole,
    pub array: ArrayGeometry,
    /// Half-width of the azimuth arc the sector serves and steers within.
    pub half_arc_deg: f64,
}

impl Sector {
    /// Target azimuth relative to boresight, in `[-180, 180)`.
    pub fn offset_deg(&self, azimuth_deg: f64) -> f64 {
        crate::units::wrap_deg(azimuth_deg - self.boresight_deg)
    }
}

const EAST: f64 = 0.0;
const NORTH: f64 = 90.0;
const WEST: f64 = 180.0;
const SOUTH: f64 = -90.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSite {
    pub id: usize,
    pub kind: NodeKind,
    pub position: Point,
    pub avenue: usize,
    pub street: usize,
    pub sectors: Vec<Sector>,
}

impl NodeSite {
    /// Index of the sector of `role` whose boresight is closest to `azimuth_deg`.
    pub fn facing_sector(&self, role: SectorRole, azimuth_deg: f64) -> Option<usize> {
        self.sectors
            .iter()
            .enumerate()
            .filter(|(_, s)| s.role == role)
            .min_by(|(_, a), (_, b)| {
                a.offset_deg(azimuth_deg)
                    .abs()
                    .total_cmp(&b.offset_deg(azimuth_deg).abs())
            })
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSite {
    pub id: usize,
    pub position: Point,
}

/// A full deployment: fixed infrastructure plus one UE drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScene {
    pub spec: GridSpec,
    pub nodes: Vec<NodeSite>,
    pub ues: Vec<UeSite>,
}

impl GridScene {
    pub fn gnbs(&self) -> impl Iterator<Item = &NodeSite> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Gnb)
    }

    pub fn relays(&self) -> impl Iterator<Item = &NodeSite> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Relay)
    }

    pub fn gnb_count(&self) -> usize {
        self.gnbs().count()
    }

    pub fn relay_count(&self) -> usize {
        self.relays().count()
    }

    /// Key for a UE in the shared site namespace (nodes first, then UEs).
    pub fn ue_site_key(&self, ue: usize) -> u64 {
        (self.nodes.len() + ue) as u64
    }

    /// Replaces the UE drop, keeping the infrastructure.
    pub fn with_ues(&self, seed: u64) -> GridScene {
        GridScene {
            spec: self.spec.clone(),
            nodes: self.nodes.clone(),
            ues: drop_ues(&self.spec, seed),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<GridScene> {
        Ok(serde_json::from_str(text)?)
    }
}

fn gnb_sectors(arr: ArrayGeometry) -> Vec<Sector> {
    [EAST, NORTH, WEST, SOUTH]
        .into_iter()
        .map(|b| Sector {
            boresight_deg: b,
            role: SectorRole::GnbAccess,
            array: arr,
            half_arc_deg: 45.0,
        })
        .collect()
}

fn relay_sectors(bh: ArrayGeometry, ac: ArrayGeometry, ac_half_arc_deg: f64) -> Vec<Sector> {
    vec![
        Sector {
            boresight_deg: NORTH,
            role: SectorRole::RelayBh,
            array: bh,
            half_arc_deg: 90.0,
        },
        Sector {
            boresight_deg: SOUTH,
            role: SectorRole::RelayBh,
            array: bh,
            half_arc_deg: 90.0,
        },
        Sector {
            boresight_deg: EAST,
            role: SectorRole::RelayAc,
            array: ac,
            half_arc_deg: ac_half_arc_deg,
        },
        Sector {
            boresight_deg: WEST,
            role: SectorRole::RelayAc,
            array: ac,
            half_arc_deg: ac_half_arc_deg,
        },
    ]
}

/// Places gNBs and relays; independent of any seed.
pub fn build_infrastructure(spec: &GridSpec) -> Result<Vec<NodeSite>> {
    spec.validate()?;
    let mut nodes = Vec::new();
    for kind in [NodeKind::Gnb, NodeKind::Relay] {
        for street in 0..spec.streets {
            for avenue in 0..spec.avenues {
                let hit = match kind {
                    NodeKind::Gnb => spec.is_gnb_intersection(avenue, street),
                    NodeKind::Relay => spec.is_relay_intersection(avenue, street),
                };
                if !hit {
                    continue;
                }
                let sectors = match kind {
                    NodeKind::Gnb => gnb_sectors(spec.antennas.gnb),
                    NodeKind::Relay => relay_sectors(
                        spec.antennas.relay_bh,
                        spec.antennas.relay_ac,
                        spec.relay_ac_half_arc_deg,
                    ),
                };
                nodes.push(NodeSite {
                    id: nodes.len(),
                    kind,
                    position: Point::new(spec.avenue_x(avenue), spec.street_y(street)),
                    avenue,
                    street,
                    sectors,
                });
            }
        }
    }
    if !nodes.iter().any(|n| n.kind == NodeKind::Gnb) {
        return Err(Error::invalid("grid strides place no gNBs"));
    }
    Ok(nodes)
}

/// Drops `spec.ue_count` UEs uniformly over the outdoor canyon area.
pub fn drop_ues(spec: &GridSpec, seed: u64) -> Vec<UeSite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce9_e0d5_0000_0001);
    let (x0, x1) = spec.x_bounds();
    let (y0, y1) = spec.y_bounds();
    let mut ues = Vec::with_capacity(spec.ue_count);
    while ues.len() < spec.ue_count {
        let p = Point::new(rng.random_range(x0..x1), rng.random_range(y0..y1));
        if spec.is_outdoor(p) {
            ues.push(UeSite {
                id: ues.len(),
                position: p,
            });
        }
    }
    ues
}

/// Builds the deployment and drops UEs with `seed`.
pub fn generate_grid(spec: &GridSpec, seed: u64) -> Result<GridScene> {
    let nodes = build_infrastructure(spec)?;
    Ok(GridScene {
        spec: spec.clone(),
        nodes,
        ues: drop_ues(spec, seed),
    })
}

/// Route between two points of a scene.
pub fn street_route(a: Point, b: Point, scene: &GridScene) -> Result<StreetRoute> {
    scene.spec.route(a, b)
}
