//! Large-scale channel: dual-slope pathloss, corner knife-edge diffraction,
//! log-normal shadowing and receiver noise floors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::StreetRoute;
use crate::units::lin_to_db;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// gNB to relay.
    Bh,
    /// Anything to a UE.
    Ac,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathlossParams {
    pub carrier_freq_hz: f64,
    /// Loss at 1 m; free-space loss at the carrier when absent.
    pub reference_loss_1m_db: Option<f64>,
    pub near_exponent: f64,
    pub far_exponent: f64,
    pub breakpoint_bh_m: f64,
    pub breakpoint_ac_m: f64,
    pub shadow_sigma_ac_db: f64,
    pub shadow_sigma_bh_db: f64,
}

impl Default for PathlossParams {
    fn default() -> Self {
        PathlossParams {
            carrier_freq_hz: 28e9,
            reference_loss_1m_db: None,
            near_exponent: 2.0,
            far_exponent: 3.2,
            breakpoint_bh_m: 200.0,
            breakpoint_ac_m: 30.0,
            shadow_sigma_ac_db: 8.0,
            shadow_sigma_bh_db: 4.0,
        }
    }
}

impl PathlossParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("carrier_freq_hz", self.carrier_freq_hz > 0.0),
            ("near_exponent", self.near_exponent > 0.0),
            ("far_exponent", self.far_exponent > 0.0),
            ("breakpoint_bh_m", self.breakpoint_bh_m > 0.0),
            ("breakpoint_ac_m", self.breakpoint_ac_m > 0.0),
            ("shadow_sigma_ac_db", self.shadow_sigma_ac_db >= 0.0),
            ("shadow_sigma_bh_db", self.shadow_sigma_bh_db >= 0.0),
            (
                "reference_loss_1m_db",
                self.reference_loss_1m_db.is_none_or(|v| v.is_finite()),
            ),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::config(format!("pathloss.{name}"), "out of range"));
            }
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn reference_loss_db(&self) -> f64 {
        self.reference_loss_1m_db
            .unwrap_or_else(|| 20.0 * (4.0 * std::f64::consts::PI / self.wavelength()).log10())
    }

    pub fn breakpoint(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::Bh => self.breakpoint_bh_m,
            LinkKind::Ac => self.breakpoint_ac_m,
        }
    }

    pub fn shadow_sigma(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::Bh => self.shadow_sigma_bh_db,
            LinkKind::Ac => self.shadow_sigma_ac_db,
        }
    }
}

/// Dual-slope pathloss, continuous at the breakpoint.
pub fn pathloss_db(distance: f64, kind: LinkKind, params: &PathlossParams) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::invalid(format!(
            "distance must be > 0, got {distance}"
        )));
    }
    let l0 = params.reference_loss_db();
    let bp = params.breakpoint(kind);
    if distance < bp {
        Ok(l0 + 10.0 * params.near_exponent * distance.log10())
    } else {
        Ok(l0
            + 10.0 * params.near_exponent * bp.log10()
            + 10.0 * params.far_exponent * (distance / bp).log10())
    }
}

/// Single knife-edge loss `J(nu)` in dB.
pub fn knife_edge_loss_db(nu: f64) -> f64 {
    if nu <= -0.78 {
        return 0.0;
    }
    let v = nu - 0.1;
    6.9 + 20.0 * ((v * v + 1.0).sqrt() + v).log10()
}

/// Knife-edge parameter of a corner that turns by `theta_rad` between legs
/// of length `d1` and `d2`.
pub fn corner_nu(theta_rad: f64, d1: f64, d2: f64, wavelength: f64) -> f64 {
    if d1 + d2 <= 0.0 {
        return 0.0;
    }
    theta_rad * (2.0 * d1 * d2 / (wavelength * (d1 + d2))).sqrt()
}

/// Total corner diffraction loss of a route; corners add in dB.
pub fn diffraction_loss_db(route: &StreetRoute, wavelength: f64) -> f64 {
    route
        .deviations_deg
        .iter()
        .enumerate()
        .map(|(k, theta)| {
            let nu = corner_nu(
                theta.to_radians(),
                route.legs[k],
                route.legs[k + 1],
                wavelength,
            );
            knife_edge_loss_db(nu)
        })
        .sum()
}

/// Unordered pair of site keys; shadowing is reciprocal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(u64, u64);

impl LinkId {
    pub fn new(a: u64, b: u64) -> Self {
        if a <= b {
            LinkId(a, b)
        } else {
            LinkId(b, a)
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes several words into a stream seed.
pub fn mix_seed(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x243f_6a88_85a3_08d3, |acc, &w| splitmix(acc ^ splitmix(w)))
}

/// Log-normal shadowing sample in dB, frozen per `(link, seed)`.
pub fn shadow_sample_db(link: LinkId, sigma_db: f64, seed: u64) -> f64 {
    if sigma_db == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, link.0, link.1]));
    let z: f64 = StandardNormal.sample(&mut rng);
    sigma_db * z
}

/// Shadowing of a link of `kind` using that kind's sigma.
pub fn shadow_for(link: LinkId, kind: LinkKind, params: &PathlossParams, seed: u64) -> f64 {
    shadow_sample_db(link, params.shadow_sigma(kind), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    pub bandwidth_hz: f64,
    pub base_noise_figure_db: f64,
    pub thermal_density_dbm_hz: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            bandwidth_hz: 0.8e9,
            base_noise_figure_db: 7.0,
            thermal_density_dbm_hz: -174.0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::config("noise.bandwidth_hz", "must be > 0"));
        }
        if !self.base_noise_figure_db.is_finite() || self.base_noise_figure_db < 0.0 {
            return Err(Error::config("noise.base_noise_figure_db", "must be >= 0"));
        }
        if !self.thermal_density_dbm_hz.is_finite() {
            return Err(Error::config(
                "noise.thermal_density_dbm_hz",
                "must be finite",
            ));
        }
        Ok(())
    }
}

/// Receiver noise floor in dBm with an extra noise figure on top of the base.
pub fn noise_floor_dbm(n: &NoiseParams, extra_nf_db: f64) -> f64 {
    n.thermal_density_dbm_hz + lin_to_db(n.bandwidth_hz) + n.base_noise_figure_db + extra_nf_db
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{GridSpec, Point};

    #[test]
    fn reference_loss_at_28ghz() {
        let p = PathlossParams::default();
        // 20 log10(4 pi f / c)
        assert!((p.reference_loss_db() - 61.390_943_848_727_76).abs() < 1e-9);
        assert!(
            (pathloss_db(1.0, LinkKind::Ac, &p).unwrap() - p.reference_loss_db()).abs() < 1e-12
        );
    }

    #[test]
    fn near_branch_and_far_branch() {
        let p = PathlossParams::default();
        let l100 = pathloss_db(100.0, LinkKind::Bh, &p).unwrap();
        assert!((l100 - (p.reference_loss_db() + 40.0)).abs() < 1e-9);
        let a = pathloss_db(120.0, LinkKind::Ac, &p).unwrap();
        let b = pathloss_db(240.0, LinkKind::Ac, &p).unwrap();
        assert!((b - a - 9.632_959_861_247_398).abs() < 1e-9);
    }

    #[test]
    fn continuous_at_breakpoints() {
        let p = PathlossParams::default();
        for (kind, bp) in [(LinkKind::Bh, 200.0), (LinkKind::Ac, 30.0)] {
            let below = pathloss_db(bp * (1.0 - 1e-12), kind, &p).unwrap();
            let at = pathloss_db(bp, kind, &p).unwrap();
            assert!((below - at).abs() < 1e-6);
        }
    }

    #[test]
    fn pathloss_rejects_nonpositive_distance() {
        let p = PathlossParams::default();
        assert!(pathloss_db(0.0, LinkKind::Ac, &p).is_err());
        assert!(pathloss_db(-3.0, LinkKind::Bh, &p).is_err());
    }

    #[test]
    fn knife_edge_at_grazing() {
        assert!((knife_edge_loss_db(0.0) - 6.032_852_208_563_606).abs() < 1e-9);
        assert_eq!(knife_edge_loss_db(-1.0), 0.0);
    }

    #[test]
    fn diffraction_adds_per_corner() {
        let spec = GridSpec::default();
        let lambda = PathlossParams::default().wavelength();
        let los = spec
            .route(Point::new(10.0, 0.0), Point::new(150.0, 0.0))
            .unwrap();
        assert_eq!(diffraction_loss_db(&los, lambda), 0.0);

        let one = spec
            .route(Point::new(100.0, 80.0), Point::new(200.0, 30.0))
            .unwrap();
        let single = diffraction_loss_db(&one, lambda);
        assert!(single > 0.0);
        let twice = StreetRoute {
            corners: vec![one.corners[0], one.corners[0]],
            legs: vec![one.legs[0], one.legs[1], one.legs[0]],
            deviations_deg: vec![90.0, 90.0],
            length: 0.0,
        };
        // symmetric legs so both corners see (d1, d2) swapped
        let expect = knife_edge_loss_db(corner_nu(
            std::f64::consts::FRAC_PI_2,
            one.legs[0],
            one.legs[1],
            lambda,
        )) * 2.0;
        assert!((diffraction_loss_db(&twice, lambda) - expect).abs() < 1e-9);
        assert!((expect - 2.0 * single).abs() < 1e-9);
    }

    #[test]
    fn shadow_is_deterministic_and_reciprocal() {
        let a = shadow_sample_db(LinkId::new(3, 900), 8.0, 42);
        let b = shadow_sample_db(LinkId::new(900, 3), 8.0, 42);
        assert_eq!(a, b);
        assert_ne!(a, shadow_sample_db(LinkId::new(3, 900), 8.0, 43));
        assert_eq!(shadow_sample_db(LinkId::new(1, 2), 0.0, 7), 0.0);
    }

    #[test]
    fn noise_floor_examples() {
        let n = NoiseParams::default();
        assert!((noise_floor_dbm(&n, 0.0) - (-77.969_100_130_080_56)).abs() < 1e-9);
        assert!((noise_floor_dbm(&n, 1.0) - (-76.969_100_130_080_56)).abs() < 1e-9);
        let half = NoiseParams {
            bandwidth_hz: 0.4e9,
            ..n
        };
        assert!((noise_floor_dbm(&n, 0.0) - noise_floor_dbm(&half, 0.0) - 3.0103).abs() < 1e-4);
    }
}
