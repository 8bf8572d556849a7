//! Slot-level downlink simulation: per-sector round robin, optional spatial
//! reuse for decode-and-forward relays, repeater on/off behaviour and
//! interference accounting.
//!
//! Backhaul transmissions (gNB to relay) only interfere with backhaul
//! receivers and access transmissions only with UEs. A full-duplex relay
//! additionally leaks its own access transmission into its backhaul receiver
//! through the configured isolation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::association::{
    associate, relative, sector_gain, steer_toward, ue_rx_gain, AssociationMap, Dir, LinkTable,
    RadioParams,
};
use crate::beamforming::{pattern_lin, BeamConfig, BeamShape, DEFAULT_BROAD_LOSS_DB};
use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricStore};
use crate::propagation::mix_seed;
use crate::relay_math::{
    af_dl_sinr, capacity, capacity_inverse, fddf_rate, hddf_rate, AfParams, CapacityLaw,
    ResourceSplit, Sinr,
};
use crate::topology::{GridScene, NodeKind, NodeSite};
use crate::units::db_to_lin;

/// The deployment variants compared by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RelayCase {
    NoRepeaterRelay,
    ConventionalRepeater,
    SemiSmartRepeater,
    SmartRepeater,
    HdRelayNoReuse,
    HdRelayReuse,
    FdRelayNoReuse,
    FdRelayReuse,
}

impl RelayCase {
    pub const ALL: [RelayCase; 8] = [
        RelayCase::NoRepeaterRelay,
        RelayCase::ConventionalRepeater,
        RelayCase::SemiSmartRepeater,
        RelayCase::SmartRepeater,
        RelayCase::HdRelayNoReuse,
        RelayCase::HdRelayReuse,
        RelayCase::FdRelayNoReuse,
        RelayCase::FdRelayReuse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelayCase::NoRepeaterRelay => "noRepeaterRelay",
            RelayCase::ConventionalRepeater => "conventionalRepeater",
            RelayCase::SemiSmartRepeater => "semiSmartRepeater",
            RelayCase::SmartRepeater => "smartRepeater",
            RelayCase::HdRelayNoReuse => "hdRelayNoReuse",
            RelayCase::HdRelayReuse => "hdRelayReuse",
            RelayCase::FdRelayNoReuse => "fdRelayNoReuse",
            RelayCase::FdRelayReuse => "fdRelayReuse",
        }
    }

    pub fn profile(self, params: &RelayParams) -> CaseProfile {
        let broad = AcBeam::Broad {
            loss_db: params.broad_loss_db,
            half_arc_deg: params.broad_half_arc_deg,
        };
        let af = |g_max_db: f64, beam: AcBeam, always_on: bool| RelayKind::AmplifyForward {
            g_max: db_to_lin(g_max_db),
            delta_nf: db_to_lin(params.delta_nf_db),
            beam,
            always_on,
        };
        let df = |duplex: Duplex, spatial_reuse: bool| RelayKind::DecodeForward {
            duplex,
            spatial_reuse,
            isolation: db_to_lin(-params.fd_isolation_db),
        };
        let kind = match self {
            RelayCase::NoRepeaterRelay => RelayKind::None,
            RelayCase::ConventionalRepeater => af(params.conventional_g_max_db, broad, true),
            RelayCase::SemiSmartRepeater => af(params.semi_smart_g_max_db, broad, true),
            RelayCase::SmartRepeater => af(params.smart_g_max_db, AcBeam::Steered, false),
            RelayCase::HdRelayNoReuse => df(Duplex::Half, false),
            RelayCase::HdRelayReuse => df(Duplex::Half, true),
            RelayCase::FdRelayNoReuse => df(Duplex::Full, false),
            RelayCase::FdRelayReuse => df(Duplex::Full, true),
        };
        CaseProfile { case: self, kind }
    }
}

impl fmt::Display for RelayCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelayCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RelayCase::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown relay case `{s}`")))
    }
}

/// Relay parameter table shared by the cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelayParams {
    pub conventional_g_max_db: f64,
    pub semi_smart_g_max_db: f64,
    pub smart_g_max_db: f64,
    pub delta_nf_db: f64,
    pub fd_isolation_db: f64,
    /// Loss of the fixed broad access beam relative to a steered beam.
    pub broad_loss_db: f64,
    pub broad_half_arc_deg: f64,
}

impl Default for RelayParams {
    fn default() -> Self {
        RelayParams {
            conventional_g_max_db: 50.0,
            semi_smart_g_max_db: 70.0,
            smart_g_max_db: 70.0,
            delta_nf_db: 1.0,
            fd_isolation_db: 130.0,
            broad_loss_db: DEFAULT_BROAD_LOSS_DB,
            broad_half_arc_deg: 84.0,
        }
    }
}

impl RelayParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("conventional_g_max_db", self.conventional_g_max_db),
            ("semi_smart_g_max_db", self.semi_smart_g_max_db),
            ("smart_g_max_db", self.smart_g_max_db),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("relay.{name}"), "must be finite"));
            }
        }
        if !(self.delta_nf_db >= 0.0 && self.delta_nf_db.is_finite()) {
            return Err(Error::config("relay.delta_nf_db", "must be >= 0 dB"));
        }
        if !(self.fd_isolation_db >= 0.0 && self.fd_isolation_db.is_finite()) {
            return Err(Error::config("relay.fd_isolation_db", "must be >= 0 dB"));
        }
        BeamConfig::broad(self.broad_loss_db, self.broad_half_arc_deg)
            .validate()
            .map_err(|e| Error::config("relay.broad_loss_db", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcBeam {
    Steered,
    Broad { loss_db: f64, half_arc_deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Duplex {
    Half,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelayKind {
    None,
    AmplifyForward {
        g_max: f64,
        delta_nf: f64,
        beam: AcBeam,
        always_on: bool,
    },
    DecodeForward {
        duplex: Duplex,
        spatial_reuse: bool,
        /// Linear self-interference coupling (full duplex only).
        isolation: f64,
    },
}

/// Resolved parameters of one case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseProfile {
    pub case: RelayCase,
    pub kind: RelayKind,
}

impl CaseProfile {
    pub fn has_relays(&self) -> bool {
        !matches!(self.kind, RelayKind::None)
    }

    pub fn af_gain_limit(&self) -> Option<f64> {
        match self.kind {
            RelayKind::AmplifyForward { g_max, .. } => Some(g_max),
            _ => None,
        }
    }

    pub fn delta_nf_lin(&self) -> f64 {
        match self.kind {
            RelayKind::AmplifyForward { delta_nf, .. } => delta_nf,
            _ => 1.0,
        }
    }

    pub fn always_on(&self) -> bool {
        matches!(
            self.kind,
            RelayKind::AmplifyForward {
                always_on: true,
                ..
            }
        )
    }

    pub fn spatial_reuse(&self) -> bool {
        matches!(
            self.kind,
            RelayKind::DecodeForward {
                spatial_reuse: true,
                ..
            }
        )
    }

    pub fn ac_beam(&self) -> AcBeam {
        match self.kind {
            RelayKind::AmplifyForward { beam, .. } => beam,
            _ => AcBeam::Steered,
        }
    }

    pub fn f_bf(&self) -> f64 {
        match self.ac_beam() {
            AcBeam::Steered => 1.0,
            AcBeam::Broad { loss_db, .. } => db_to_lin(loss_db),
        }
    }

    /// Access beam of relay `node` sector `sector` serving direction `dir`.
    pub fn ac_beam_shape(&self, node: &NodeSite, sector: usize, dir: Dir) -> BeamShape {
        match self.ac_beam() {
            AcBeam::Steered => steer_toward(node, sector, dir),
            AcBeam::Broad {
                loss_db,
                half_arc_deg,
            } => BeamConfig::broad(loss_db, half_arc_deg).shape(),
        }
    }
}

/// Round-robin service order of one gNB sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSchedule {
    pub gnb: usize,
    pub sector: usize,
    /// Direct and indirect UEs in service order.
    pub order: Vec<usize>,
}

impl SectorSchedule {
    pub fn ue_at(&self, slot: usize) -> Option<usize> {
        if self.order.is_empty() {
            None
        } else {
            Some(self.order[slot % self.order.len()])
        }
    }

    /// First direct UE after the slot's round-robin position, cyclically.
    pub fn next_direct_after(&self, slot: usize, assoc: &AssociationMap) -> Option<usize> {
        let n = self.order.len();
        (1..=n)
            .map(|k| self.order[(slot + k) % n])
            .find(|&u| !assoc.ues[u].indirect)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub sectors: Vec<SectorSchedule>,
}

/// Per-sector round-robin order: UEs by id, rotated by a seed-derived offset.
pub fn build_schedule(scene: &GridScene, assoc: &AssociationMap, seed: u64) -> Schedule {
    let mut sectors = Vec::new();
    for g in scene.gnbs() {
        for s in 0..g.sectors.len() {
            let mut order: Vec<usize> = (0..assoc.ues.len())
                .filter(|&u| assoc.anchor_sector(u) == (g.id, s))
                .collect();
            if !order.is_empty() {
                let k = (mix_seed(&[seed, g.id as u64, s as u64]) % order.len() as u64) as usize;
                order.rotate_left(k);
            }
            sectors.push(SectorSchedule {
                gnb: g.id,
                sector: s,
                order,
            });
        }
    }
    Schedule { sectors }
}

/// An access-class transmission active in a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcTx {
    pub node: usize,
    pub sector: usize,
    pub shape: BeamShape,
    pub power_mw: f64,
}

/// A backhaul transmission from a donor gNB toward one of its relays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BhTx {
    pub gnb: usize,
    pub sector: usize,
    pub shape: BeamShape,
    pub power_mw: f64,
    pub target_relay: usize,
}

/// Transmitters active during one slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InterferenceLedger {
    pub ac: Vec<AcTx>,
    pub bh: Vec<BhTx>,
    /// Linear coupling from a full-duplex relay's access transmitter into
    /// its own backhaul receiver.
    pub self_isolation: Option<f64>,
}

/// A receiver whose interference is evaluated against a ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Victim {
    /// A UE pointed at its server. Transmissions of the serving sector (of
    /// any sector, when the server is a relay) are not interference.
    Ue {
        ue: usize,
        server: usize,
        server_sector: usize,
    },
    /// The backhaul receiver of a relay pointed at its donor.
    RelayBh {
        relay: usize,
        bh_sector: usize,
        donor: usize,
    },
}

/// Total interference power (mW) at `victim`.
pub fn slot_interference(
    ledger: &InterferenceLedger,
    victim: Victim,
    scene: &GridScene,
    links: &LinkTable,
) -> f64 {
    match victim {
        Victim::Ue {
            ue,
            server,
            server_sector,
        } => {
            let server_is_relay = scene.nodes[server].kind == NodeKind::Relay;
            let to_server = neg(links.node_ue_dir(server, ue));
            let ue_arr = scene.spec.antennas.ue;
            ledger
                .ac
                .iter()
                .filter(|tx| {
                    !(tx.node == server && (server_is_relay || tx.sector == server_sector))
                })
                .map(|tx| {
                    let dir = links.node_ue_dir(tx.node, ue);
                    tx.power_mw
                        * sector_gain(&scene.nodes[tx.node], tx.sector, &tx.shape, dir)
                        * ue_rx_gain(&ue_arr, to_server, neg(dir))
                        * links.node_ue_gain(tx.node, ue)
                })
                .sum()
        }
        Victim::RelayBh {
            relay,
            bh_sector,
            donor,
        } => {
            let r = &scene.nodes[relay];
            let rx_shape = steer_toward(r, bh_sector, links.node_node_dir(relay, donor));
            let bore = r.sectors[bh_sector].boresight_deg.to_radians();
            let bore = (bore.cos(), bore.sin());
            let rx_arr = r.sectors[bh_sector].array;
            let external: f64 = ledger
                .bh
                .iter()
                .filter(|tx| !(tx.target_relay == relay && tx.gnb == donor))
                .map(|tx| {
                    let dir = links.node_node_dir(tx.gnb, relay);
                    let (c, s) = relative(neg(dir), bore);
                    tx.power_mw
                        * sector_gain(&scene.nodes[tx.gnb], tx.sector, &tx.shape, dir)
                        * pattern_lin(&rx_arr, &rx_shape, c, s)
                        * rx_arr.n_elevation as f64
                        * links.node_node_gain(tx.gnb, relay)
                })
                .sum();
            let own: f64 = match ledger.self_isolation {
                Some(iso) => ledger
                    .ac
                    .iter()
                    .filter(|tx| tx.node == relay)
                    .map(|tx| tx.power_mw * iso)
                    .sum(),
                None => 0.0,
            };
            external + own
        }
    }
}

#[inline]
fn neg(d: Dir) -> Dir {
    (-d.0, -d.1)
}

/// Everything a drop needs, built once per (drop, case).
pub struct DropContext<'a> {
    pub scene: &'a GridScene,
    pub links: &'a LinkTable,
    pub radio: &'a RadioParams,
    pub profile: CaseProfile,
    pub assoc: AssociationMap,
    pub schedule: Schedule,
    pub law: CapacityLaw,
    /// When false every interference term (including full-duplex
    /// self-interference) is zero.
    pub interference: bool,
    noise_mw: f64,
}

impl<'a> DropContext<'a> {
    pub fn new(
        scene: &'a GridScene,
        links: &'a LinkTable,
        radio: &'a RadioParams,
        profile: CaseProfile,
        law: CapacityLaw,
        seed: u64,
    ) -> Self {
        let assoc = associate(scene, links, radio, &profile);
        let schedule = build_schedule(scene, &assoc, seed);
        DropContext {
            scene,
            links,
            radio,
            profile,
            assoc,
            schedule,
            law,
            interference: true,
            noise_mw: radio.noise_mw(),
        }
    }

    fn interference_mw(&self, ledger: &InterferenceLedger, victim: Victim) -> f64 {
        if self.interference {
            slot_interference(ledger, victim, self.scene, self.links)
        } else {
            0.0
        }
    }

    fn gnb_power(&self, gnb: usize) -> f64 {
        self.radio
            .tx_power_mw(&self.scene.nodes[gnb].sectors[0].array)
    }

    /// Steered signal power at `ue` from `sector` of `node` sending `tx_mw`.
    fn steered_signal(&self, node: usize, sector: usize, tx_mw: f64, ue: usize) -> f64 {
        let n = &self.scene.nodes[node];
        let dir = self.links.node_ue_dir(node, ue);
        let ue_arr = self.scene.spec.antennas.ue;
        tx_mw
            * sector_gain(n, sector, &steer_toward(n, sector, dir), dir)
            * (ue_arr.n_azimuth * ue_arr.n_elevation) as f64
            * self.links.node_ue_gain(node, ue)
    }

    fn direct_sinr(
        &self,
        ledger: &InterferenceLedger,
        ue: usize,
        gnb: usize,
        sector: usize,
    ) -> Sinr {
        let s = self.steered_signal(gnb, sector, self.gnb_power(gnb), ue);
        let i = self.interference_mw(
            ledger,
            Victim::Ue {
                ue,
                server: gnb,
                server_sector: sector,
            },
        );
        Sinr::saturating(s / (self.noise_mw + i))
    }
}

/// Direct-UE service within a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectService {
    pub ue: usize,
    pub sinr: Sinr,
    /// Fraction of the slot the UE is served.
    pub fraction: f64,
    pub rate: f64,
}

/// Indirect-UE service within a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndirectService {
    pub ue: usize,
    pub relay: usize,
    pub sinr_bh: Sinr,
    pub sinr_ac: Sinr,
    /// End-to-end effective SINR (uncapped capacity inverse of the rate).
    pub effective_sinr: Sinr,
    pub split: ResourceSplit,
    pub rate: f64,
}

/// What one gNB sector did in one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotOutcome {
    pub slot: usize,
    pub gnb: usize,
    pub sector: usize,
    pub direct: Option<DirectService>,
    pub indirect: Option<IndirectService>,
    /// Direct UE co-scheduled while the gNB is idle on the backhaul.
    pub reuse: Option<DirectService>,
    /// Identifier of the ledger the SINRs were computed against.
    pub ledger_id: usize,
}

impl SlotOutcome {
    /// Sum of rates delivered through this sector in the slot.
    pub fn throughput(&self) -> f64 {
        self.direct.map_or(0.0, |d| d.rate)
            + self.indirect.map_or(0.0, |d| d.rate)
            + self.reuse.map_or(0.0, |d| d.rate)
    }
}

enum Plan {
    Direct {
        sched: usize,
        ue: usize,
    },
    /// `reuse` holds the co-scheduled direct UE and the gNB idle fraction
    /// estimated before reuse transmissions are added.
    Indirect {
        sched: usize,
        ue: usize,
        reuse: Option<(usize, f64)>,
    },
}

/// Builds the slot's ledger and evaluates every scheduled service.
pub fn simulate_slot(ctx: &DropContext, slot: usize) -> Vec<SlotOutcome> {
    let (plans, ledger) = plan_slot(ctx, slot);
    plans
        .iter()
        .map(|plan| evaluate(ctx, &ledger, plan, slot))
        .collect()
}

/// Transmitters active in `slot`.
pub fn slot_ledger(ctx: &DropContext, slot: usize) -> InterferenceLedger {
    plan_slot(ctx, slot).1
}

fn plan_slot(ctx: &DropContext, slot: usize) -> (Vec<Plan>, InterferenceLedger) {
    let scene = ctx.scene;
    let assoc = &ctx.assoc;
    let mut plans = Vec::new();
    let mut ledger = InterferenceLedger {
        self_isolation: match ctx.profile.kind {
            RelayKind::DecodeForward {
                duplex: Duplex::Full,
                isolation,
                ..
            } => Some(isolation),
            _ => None,
        },
        ..Default::default()
    };

    for (idx, sec) in ctx.schedule.sectors.iter().enumerate() {
        let Some(ue) = sec.ue_at(slot) else { continue };
        let g = &scene.nodes[sec.gnb];
        let p_gnb = ctx.gnb_power(sec.gnb);
        let a = assoc.ues[ue];
        if !a.indirect {
            let dir = ctx.links.node_ue_dir(sec.gnb, ue);
            ledger.ac.push(AcTx {
                node: sec.gnb,
                sector: sec.sector,
                shape: steer_toward(g, sec.sector, dir),
                power_mw: p_gnb,
            });
            plans.push(Plan::Direct { sched: idx, ue });
            continue;
        }
        let relay = a.server;
        let link = assoc.relays[relay].expect("indirect UE without donor link");
        let dir_r = ctx.links.node_node_dir(sec.gnb, relay);
        ledger.bh.push(BhTx {
            gnb: sec.gnb,
            sector: sec.sector,
            shape: steer_toward(g, sec.sector, dir_r),
            power_mw: p_gnb,
            target_relay: relay,
        });
        if !ctx.profile.always_on() {
            let r = &scene.nodes[relay];
            let dir = ctx.links.node_ue_dir(relay, ue);
            ledger.ac.push(AcTx {
                node: relay,
                sector: a.sector,
                shape: ctx.profile.ac_beam_shape(r, a.sector, dir),
                power_mw: link.ac_tx_mw,
            });
        }
        let reuse = if ctx.profile.spatial_reuse() {
            sec.next_direct_after(slot, assoc).map(|d| (d, 0.0))
        } else {
            None
        };
        plans.push(Plan::Indirect {
            sched: idx,
            ue,
            reuse,
        });
    }

    if ctx.profile.always_on() {
        for r in scene.relays() {
            let Some(link) = assoc.relays[r.id] else {
                continue;
            };
            for (s, sector) in r.sectors.iter().enumerate() {
                if sector.role != crate::topology::SectorRole::RelayAc {
                    continue;
                }
                ledger.ac.push(AcTx {
                    node: r.id,
                    sector: s,
                    shape: ctx.profile.ac_beam_shape(r, s, (1.0, 0.0)),
                    power_mw: link.ac_tx_mw,
                });
            }
        }
    }

    // Reuse transmissions only occupy the part of the slot the gNB leaves
    // idle on the backhaul; they enter the ledger with their time-averaged
    // power, the idle fraction being taken from the ledger without them.
    let mut reuse_txs = Vec::new();
    for plan in plans.iter_mut() {
        if let Plan::Indirect {
            sched,
            ue,
            reuse: Some((d, ref mut fraction)),
        } = *plan
        {
            *fraction = indirect_service(ctx, &ledger, ue).1;
            if *fraction > 0.0 {
                let sec = &ctx.schedule.sectors[sched];
                let dir = ctx.links.node_ue_dir(sec.gnb, d);
                reuse_txs.push(AcTx {
                    node: sec.gnb,
                    sector: sec.sector,
                    shape: steer_toward(&scene.nodes[sec.gnb], sec.sector, dir),
                    power_mw: ctx.gnb_power(sec.gnb) * *fraction,
                });
            }
        }
    }
    ledger.ac.extend(reuse_txs);
    (plans, ledger)
}

fn evaluate(
    ctx: &DropContext,
    ledger: &InterferenceLedger,
    plan: &Plan,
    slot: usize,
) -> SlotOutcome {
    let (sched, direct, indirect, reuse) = match *plan {
        Plan::Direct { sched, ue } => {
            let sec = &ctx.schedule.sectors[sched];
            let sinr = ctx.direct_sinr(ledger, ue, sec.gnb, sec.sector);
            let rate = capacity(sinr, ctx.law).value();
            (
                sched,
                Some(DirectService {
                    ue,
                    sinr,
                    fraction: 1.0,
                    rate,
                }),
                None,
                None,
            )
        }
        Plan::Indirect { sched, ue, reuse } => {
            let sec = &ctx.schedule.sectors[sched];
            let (service, idle) = indirect_service(ctx, ledger, ue);
            let reuse = reuse.map(|(d, planned)| {
                let idle_fraction = idle.min(planned);
                let sinr = ctx.direct_sinr(ledger, d, sec.gnb, sec.sector);
                DirectService {
                    ue: d,
                    sinr,
                    fraction: idle_fraction,
                    rate: idle_fraction * capacity(sinr, ctx.law).value(),
                }
            });
            (sched, None, Some(service), reuse)
        }
    };
    let sec = &ctx.schedule.sectors[sched];
    SlotOutcome {
        slot,
        gnb: sec.gnb,
        sector: sec.sector,
        direct,
        indirect,
        reuse,
        ledger_id: slot,
    }
}

/// Computes an indirect UE's service and the fraction of the slot the donor
/// gNB leaves idle on the backhaul.
fn indirect_service(
    ctx: &DropContext,
    ledger: &InterferenceLedger,
    ue: usize,
) -> (IndirectService, f64) {
    let a = ctx.assoc.ues[ue];
    let relay = a.server;
    let link = ctx.assoc.relays[relay].expect("indirect UE without donor link");
    let noise = ctx.noise_mw;

    let i_bh = ctx.interference_mw(
        ledger,
        Victim::RelayBh {
            relay,
            bh_sector: link.bh_sector,
            donor: link.donor,
        },
    );
    let sinr_bh = Sinr::saturating(link.bh_rx_mw / (noise + i_bh));

    let p_t2_max = ctx
        .radio
        .tx_power_mw(&ctx.scene.nodes[relay].sectors[a.sector].array);
    let s_ac = ctx.steered_signal(relay, a.sector, p_t2_max, ue);
    let i_ac = ctx.interference_mw(
        ledger,
        Victim::Ue {
            ue,
            server: relay,
            server_sector: a.sector,
        },
    );
    let sinr_ac = Sinr::saturating(s_ac / (noise + i_ac));
    let shannon = CapacityLaw::SHANNON;
    let law = ctx.law;

    let (effective_sinr, split, rate, idle) = match ctx.profile.kind {
        RelayKind::AmplifyForward {
            g_max, delta_nf, ..
        } => {
            let params = AfParams {
                g_max,
                delta_nf,
                p_t2_max,
                sigma1_sq: noise + i_bh,
                f_bf: ctx.profile.f_bf(),
            };
            let eff = af_dl_sinr(sinr_bh, sinr_ac, &params);
            (eff, ResourceSplit::FULL, capacity(eff, law).value(), 0.0)
        }
        RelayKind::DecodeForward { duplex, .. } => {
            let (c_bh, c_ac) = (capacity(sinr_bh, law), capacity(sinr_ac, law));
            let (u_bh, u_ac) = (capacity(sinr_bh, shannon), capacity(sinr_ac, shannon));
            match duplex {
                Duplex::Half => {
                    let (rate, split) = hddf_rate(c_bh, c_ac);
                    let eff = inverse_or_zero(hddf_rate(u_bh, u_ac).0.value());
                    (eff, split, rate.value(), split.beta_ac)
                }
                Duplex::Full => {
                    let rate = fddf_rate(c_bh, c_ac).value();
                    let eff = inverse_or_zero(fddf_rate(u_bh, u_ac).value());
                    let idle = if c_bh.value() > c_ac.value() {
                        1.0 - c_ac.value() / c_bh.value()
                    } else {
                        0.0
                    };
                    (eff, ResourceSplit::FULL, rate, idle)
                }
            }
        }
        RelayKind::None => unreachable!("indirect UE in a case without relays"),
    };
    (
        IndirectService {
            ue,
            relay,
            sinr_bh,
            sinr_ac,
            effective_sinr,
            split,
            rate,
        },
        idle,
    )
}

fn inverse_or_zero(rate: f64) -> Sinr {
    crate::relay_math::Rate::new(rate)
        .ok()
        .and_then(|r| capacity_inverse(r, CapacityLaw::SHANNON).ok())
        .unwrap_or(Sinr::ZERO)
}

#[derive(Default, Clone, Copy)]
struct UeAccumulator {
    rate: f64,
    shannon: f64,
    slots: usize,
}

/// Runs `n_slots` slots of one drop and collects its metric samples.
pub fn run_drop_with(ctx: &DropContext, n_slots: usize) -> MetricStore {
    let n_ues = ctx.scene.ues.len();
    let mut per_ue = vec![UeAccumulator::default(); n_ues];
    let mut per_sector = vec![0.0; ctx.schedule.sectors.len()];

    for slot in 0..n_slots {
        let (plans, ledger) = plan_slot(ctx, slot);
        for plan in &plans {
            let out = evaluate(ctx, &ledger, plan, slot);
            let sched = match *plan {
                Plan::Direct { sched, .. } | Plan::Indirect { sched, .. } => sched,
            };
            per_sector[sched] += out.throughput();
            let (ue, rate, eff) = match (out.direct, out.indirect) {
                (Some(d), _) => (d.ue, d.rate, d.sinr),
                (None, Some(i)) => (i.ue, i.rate, i.effective_sinr),
                (None, None) => continue,
            };
            let acc = &mut per_ue[ue];
            acc.rate += rate;
            acc.shannon += capacity(eff, CapacityLaw::SHANNON).value();
            acc.slots += 1;
        }
    }

    let mut store = MetricStore {
        drops: 1,
        ue_count: n_ues,
        indirect_count: ctx.assoc.indirect_count(),
        ..Default::default()
    };
    for (u, acc) in per_ue.iter().enumerate() {
        if acc.slots == 0 {
            continue;
        }
        let mean_shannon = acc.shannon / acc.slots as f64;
        let eff_db = inverse_or_zero(mean_shannon).db().max(MIN_SINR_DB);
        let indirect = ctx.assoc.ues[u].indirect;
        if indirect {
            store.push(Metric::SinrIndirect, eff_db);
            store.push(Metric::SeIndirect, acc.rate / acc.slots as f64);
        } else {
            store.push(Metric::SinrDirect, eff_db);
        }
        if ctx.scene.spec.is_coverage_gap(ctx.scene.ues[u].position) {
            store.push(Metric::SinrGap, eff_db);
        }
    }
    let to_mbps = ctx.radio.noise.bandwidth_hz / 1e6;
    if n_slots > 0 {
        for total in per_sector {
            store.push(Metric::SectorThroughput, total / n_slots as f64 * to_mbps);
        }
    }
    store
}

/// Floor applied to reported SINRs so that CDF samples stay finite.
pub const MIN_SINR_DB: f64 = -100.0;

/// Builds the link table and association for a scene and runs one drop.
pub fn run_drop(
    scene: &GridScene,
    radio: &RadioParams,
    case: CaseProfile,
    law: CapacityLaw,
    n_slots: usize,
    seed: u64,
) -> Result<MetricStore> {
    let links = LinkTable::build(scene, radio, seed)?;
    let ctx = DropContext::new(scene, &links, radio, case, law, seed);
    Ok(run_drop_with(&ctx, n_slots))
}
