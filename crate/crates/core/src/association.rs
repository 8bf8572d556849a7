//! One-hop received-power association: relays pick a donor gNB, UEs pick the
//! strongest gNB or relay.

use serde::{Deserialize, Serialize};

use crate::beamforming::{pattern_lin, tx_power_dbm, ArrayGeometry, BeamShape};
use crate::error::{Error, Result};
use crate::propagation::{
    diffraction_loss_db, noise_floor_dbm, pathloss_db, shadow_for, LinkId, LinkKind, NoiseParams,
    PathlossParams,
};
use crate::relay_math::Sinr;
use crate::scheduler::CaseProfile;
use crate::topology::{GridScene, NodeKind, NodeSite, Point, SectorRole};
use crate::units::{db_to_lin, dbm_to_mw, mw_to_dbm};

/// Link-budget inputs shared by every transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub pathloss: PathlossParams,
    pub noise: NoiseParams,
    pub power_per_pa_dbm: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            pathloss: PathlossParams::default(),
            noise: NoiseParams::default(),
            power_per_pa_dbm: 7.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        self.pathloss.validate()?;
        self.noise.validate()?;
        if !self.power_per_pa_dbm.is_finite() {
            return Err(Error::config("radio.power_per_pa_dbm", "must be finite"));
        }
        Ok(())
    }

    /// Base receiver noise power in mW.
    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(noise_floor_dbm(&self.noise, 0.0))
    }

    pub fn tx_power_mw(&self, arr: &ArrayGeometry) -> f64 {
        dbm_to_mw(tx_power_dbm(arr, self.power_per_pa_dbm))
    }
}

/// Unit vector `(cos, sin)` of an azimuth.
pub type Dir = (f64, f64);

fn unit(from: Point, to: Point) -> Dir {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    let d = dx.hypot(dy);
    if d == 0.0 {
        (1.0, 0.0)
    } else {
        (dx / d, dy / d)
    }
}

/// `(cos, sin)` of the angle from `reference` to `dir`.
#[inline]
pub fn relative(dir: Dir, reference: Dir) -> Dir {
    (
        dir.0 * reference.0 + dir.1 * reference.1,
        dir.1 * reference.0 - dir.0 * reference.1,
    )
}

#[inline]
fn boresight(deg: f64) -> Dir {
    let r = deg.to_radians();
    (r.cos(), r.sin())
}

/// Nodes closer than this are treated as this far apart.
const MIN_DISTANCE_M: f64 = 1.0;

/// Large-scale channel of one drop: linear channel gain (pathloss,
/// diffraction and shadowing) and direction for every node-UE pair and every
/// gNB-relay pair.
#[derive(Debug, Clone)]
pub struct LinkTable {
    n_nodes: usize,
    n_ues: usize,
    node_ue_gain: Vec<f64>,
    node_ue_dir: Vec<Dir>,
    node_node_gain: Vec<f64>,
    node_node_dir: Vec<Dir>,
}

impl LinkTable {
    pub fn build(scene: &GridScene, radio: &RadioParams, drop_seed: u64) -> Result<LinkTable> {
        let n_nodes = scene.nodes.len();
        let n_ues = scene.ues.len();
        let lambda = radio.pathloss.wavelength();
        let mut node_ue_gain = Vec::with_capacity(n_nodes * n_ues);
        let mut node_ue_dir = Vec::with_capacity(n_nodes * n_ues);
        for node in &scene.nodes {
            for ue in &scene.ues {
                let loss = link_loss_db(
                    scene,
                    radio,
                    lambda,
                    node.position,
                    ue.position,
                    LinkId::new(node.id as u64, scene.ue_site_key(ue.id)),
                    LinkKind::Ac,
                    drop_seed,
                )?;
                node_ue_gain.push(db_to_lin(-loss));
                node_ue_dir.push(unit(node.position, ue.position));
            }
        }
        let mut node_node_gain = vec![0.0; n_nodes * n_nodes];
        let mut node_node_dir = vec![(1.0, 0.0); n_nodes * n_nodes];
        for g in scene.gnbs() {
            for r in scene.relays() {
                let loss = link_loss_db(
                    scene,
                    radio,
                    lambda,
                    g.position,
                    r.position,
                    LinkId::new(g.id as u64, r.id as u64),
                    LinkKind::Bh,
                    drop_seed,
                )?;
                let gain = db_to_lin(-loss);
                let d = unit(g.position, r.position);
                node_node_gain[g.id * n_nodes + r.id] = gain;
                node_node_gain[r.id * n_nodes + g.id] = gain;
                node_node_dir[g.id * n_nodes + r.id] = d;
                node_node_dir[r.id * n_nodes + g.id] = (-d.0, -d.1);
            }
        }
        Ok(LinkTable {
            n_nodes,
            n_ues,
            node_ue_gain,
            node_ue_dir,
            node_node_gain,
            node_node_dir,
        })
    }

    pub fn ue_count(&self) -> usize {
        self.n_ues
    }

    #[inline]
    pub fn node_ue_gain(&self, node: usize, ue: usize) -> f64 {
        self.node_ue_gain[node * self.n_ues + ue]
    }

    /// Direction from `node` toward `ue`.
    #[inline]
    pub fn node_ue_dir(&self, node: usize, ue: usize) -> Dir {
        self.node_ue_dir[node * self.n_ues + ue]
    }

    #[inline]
    pub fn node_node_gain(&self, a: usize, b: usize) -> f64 {
        self.node_node_gain[a * self.n_nodes + b]
    }

    /// Direction from node `a` toward node `b` (gNB-relay pairs only).
    #[inline]
    pub fn node_node_dir(&self, a: usize, b: usize) -> Dir {
        self.node_node_dir[a * self.n_nodes + b]
    }
}

#[allow(clippy::too_many_arguments)]
fn link_loss_db(
    scene: &GridScene,
    radio: &RadioParams,
    lambda: f64,
    a: Point,
    b: Point,
    link: LinkId,
    kind: LinkKind,
    seed: u64,
) -> Result<f64> {
    let route = scene.spec.route(a, b)?;
    let pl = pathloss_db(route.length.max(MIN_DISTANCE_M), kind, &radio.pathloss)?;
    let diff = diffraction_loss_db(&route, lambda);
    Ok(pl + diff - shadow_for(link, kind, &radio.pathloss, seed))
}

/// Linear transmit-side gain (azimuth pattern and elevation) of `sector` of
/// `node` toward direction `dir`.
#[inline]
pub fn sector_gain(node: &NodeSite, sector: usize, shape: &BeamShape, dir: Dir) -> f64 {
    let s = &node.sectors[sector];
    let (c, sn) = relative(dir, boresight(s.boresight_deg));
    pattern_lin(&s.array, shape, c, sn) * s.array.n_elevation as f64
}

/// Steering toward `dir` from `sector` of `node`, limited to the sector's
/// scan range.
#[inline]
pub fn steer_toward(node: &NodeSite, sector: usize, dir: Dir) -> BeamShape {
    let s = &node.sectors[sector];
    let (_, sn) = relative(dir, boresight(s.boresight_deg));
    let sin_steer = if s.half_arc_deg >= 90.0 {
        sn
    } else {
        let lim = s.half_arc_deg.to_radians().sin();
        sn.clamp(-lim, lim)
    };
    BeamShape::Steered { sin_steer }
}

/// Receive gain of a UE array pointed at direction `serving` for a signal
/// arriving from direction `arrival` (both as seen from the UE).
#[inline]
pub fn ue_rx_gain(arr: &ArrayGeometry, serving: Dir, arrival: Dir) -> f64 {
    let (c, s) = relative(arrival, serving);
    pattern_lin(arr, &BeamShape::Steered { sin_steer: 0.0 }, c, s) * arr.n_elevation as f64
}

/// Donor link of a relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayLink {
    pub donor: usize,
    pub donor_sector: usize,
    pub bh_sector: usize,
    /// Backhaul signal power received at the relay, mW.
    pub bh_rx_mw: f64,
    /// Access-side transmit power used for association and interference, mW.
    pub ac_tx_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UeAssociation {
    pub server: usize,
    pub sector: usize,
    pub indirect: bool,
}

/// Serving assignment of every UE and donor of every deployed relay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationMap {
    pub ues: Vec<UeAssociation>,
    /// Indexed by node id; `None` for gNBs and for relays not deployed.
    pub relays: Vec<Option<RelayLink>>,
}

impl AssociationMap {
    pub fn indirect_count(&self) -> usize {
        self.ues.iter().filter(|u| u.indirect).count()
    }

    pub fn indirect_share(&self) -> f64 {
        if self.ues.is_empty() {
            0.0
        } else {
            self.indirect_count() as f64 / self.ues.len() as f64
        }
    }

    /// gNB sector that carries traffic for a UE (the donor sector for
    /// indirect UEs).
    pub fn anchor_sector(&self, ue: usize) -> (usize, usize) {
        let a = self.ues[ue];
        if a.indirect {
            let link = self.relays[a.server].expect("indirect UE served by a relay without donor");
            (link.donor, link.donor_sector)
        } else {
            (a.server, a.sector)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Signal power in mW at a relay from `gnb` beaming at it on its facing sector.
pub fn bh_rx_power_mw(
    scene: &GridScene,
    links: &LinkTable,
    radio: &RadioParams,
    gnb: usize,
    relay: usize,
) -> (f64, usize, usize) {
    let g = &scene.nodes[gnb];
    let r = &scene.nodes[relay];
    let dir_gr = links.node_node_dir(gnb, relay);
    let dir_rg = links.node_node_dir(relay, gnb);
    let gs = g
        .facing_sector(SectorRole::GnbAccess, g.position.azimuth_to(&r.position))
        .expect("gNB without sectors");
    let rs = r
        .facing_sector(SectorRole::RelayBh, r.position.azimuth_to(&g.position))
        .expect("relay without backhaul sectors");
    let tx = radio.tx_power_mw(&g.sectors[gs].array);
    let tx_gain = sector_gain(g, gs, &steer_toward(g, gs, dir_gr), dir_gr);
    let rx_gain = sector_gain(r, rs, &steer_toward(r, rs, dir_rg), dir_rg);
    (
        tx * tx_gain * rx_gain * links.node_node_gain(gnb, relay),
        gs,
        rs,
    )
}

/// Received power in dBm at `ue` from `sector` of `node` transmitting
/// `tx_mw` with beam `shape`; the UE points its array at the node.
pub fn rx_power_dbm(
    scene: &GridScene,
    links: &LinkTable,
    node: usize,
    sector: usize,
    shape: &BeamShape,
    tx_mw: f64,
    ue: usize,
) -> f64 {
    let n = &scene.nodes[node];
    let dir = links.node_ue_dir(node, ue);
    let ue_arr = scene.spec.antennas.ue;
    let rx_gain = ue_arr.n_azimuth as f64 * ue_arr.n_elevation as f64;
    mw_to_dbm(tx_mw * sector_gain(n, sector, shape, dir) * rx_gain * links.node_ue_gain(node, ue))
}

/// Relay access transmit power under `profile`, given its backhaul signal.
pub fn relay_ac_power_mw(
    profile: &CaseProfile,
    radio: &RadioParams,
    ac_arr: &ArrayGeometry,
    bh_rx_mw: f64,
) -> f64 {
    let p_max = radio.tx_power_mw(ac_arr);
    match profile.af_gain_limit() {
        Some(g_max) => {
            let noise = radio.noise_mw();
            let sinr = Sinr::saturating(bh_rx_mw / noise);
            let p_y1 = noise * (sinr.value() + profile.delta_nf_lin());
            p_max.min(g_max * p_y1)
        }
        None => p_max,
    }
}

/// Associates relays with donors and UEs with servers for one case.
pub fn associate(
    scene: &GridScene,
    links: &LinkTable,
    radio: &RadioParams,
    profile: &CaseProfile,
) -> AssociationMap {
    let mut relays = vec![None; scene.nodes.len()];
    if profile.has_relays() {
        for r in scene.relays() {
            let mut best: Option<(f64, usize, usize, usize)> = None;
            for g in scene.gnbs() {
                let (p, gs, rs) = bh_rx_power_mw(scene, links, radio, g.id, r.id);
                if best.is_none_or(|(bp, ..)| p > bp) {
                    best = Some((p, g.id, gs, rs));
                }
            }
            if let Some((p, donor, donor_sector, bh_sector)) = best {
                let ac_tx_mw = relay_ac_power_mw(profile, radio, &scene.spec.antennas.relay_ac, p);
                relays[r.id] = Some(RelayLink {
                    donor,
                    donor_sector,
                    bh_sector,
                    bh_rx_mw: p,
                    ac_tx_mw,
                });
            }
        }
    }

    let ues = (0..scene.ues.len())
        .map(|u| {
            let mut best: Option<(f64, UeAssociation)> = None;
            for node in &scene.nodes {
                let dir = links.node_ue_dir(node.id, u);
                let az = dir.1.atan2(dir.0).to_degrees();
                let (sector, shape, tx_mw, indirect) = match node.kind {
                    NodeKind::Gnb => {
                        let s = node
                            .facing_sector(SectorRole::GnbAccess, az)
                            .expect("gNB sector");
                        (
                            s,
                            steer_toward(node, s, dir),
                            radio.tx_power_mw(&node.sectors[s].array),
                            false,
                        )
                    }
                    NodeKind::Relay => {
                        let Some(link) = relays[node.id] else {
                            continue;
                        };
                        let s = node
                            .facing_sector(SectorRole::RelayAc, az)
                            .expect("relay sector");
                        (s, profile.ac_beam_shape(node, s, dir), link.ac_tx_mw, true)
                    }
                };
                let p = rx_power_dbm(scene, links, node.id, sector, &shape, tx_mw, u);
                if best.as_ref().is_none_or(|(bp, _)| p > *bp) {
                    best = Some((
                        p,
                        UeAssociation {
                            server: node.id,
                            sector,
                            indirect,
                        },
                    ));
                }
            }
            best.expect("scene without gNBs").1
        })
        .collect();

    AssociationMap { ues, relays }
}
