//! End-to-end SINR and achievable-rate models for relay nodes.
//!
//! Covers decode-and-forward relays (full-duplex and half-duplex with the
//! optimal time split), amplify-and-forward repeaters in downlink and uplink
//! with their finite-gain, noise-forwarding and beamforming loss factors, and
//! the N-hop generalizations of all three.
//!
//! Everything here is pure: identical inputs give bit-identical outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_lin, lin_to_db};

/// Tolerance on the HDDF split summing to one.
pub const SPLIT_SUM_TOLERANCE: f64 = 1e-12;

/// Linear signal-to-interference-plus-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Sinr(f64);

impl Sinr {
    pub const ZERO: Sinr = Sinr(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::invalid(format!(
                "SINR must be finite and non-negative, got {value}"
            )));
        }
        Ok(Sinr(value))
    }

    /// Builds a SINR from a value already known to be valid (e.g. a ratio of
    /// positive powers). Non-finite or negative input is clamped into range.
    pub(crate) fn saturating(value: f64) -> Self {
        if value.is_nan() || value <= 0.0 {
            Sinr(0.0)
        } else {
            Sinr(value.min(f64::MAX))
        }
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Sinr::new(db_to_lin(db))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        lin_to_db(self.0)
    }
}

/// Spectral efficiency in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Rate(f64);

impl Rate {
    pub const ZERO: Rate = Rate(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::invalid(format!(
                "rate must be finite and non-negative, got {value}"
            )));
        }
        Ok(Rate(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Mapping from SINR to spectral efficiency: Shannon, optionally capped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CapacityLaw {
    cap: Option<f64>,
}

impl CapacityLaw {
    /// Uncapped Shannon law.
    pub const SHANNON: CapacityLaw = CapacityLaw { cap: None };

    pub fn new(cap: Option<f64>) -> Result<Self> {
        if let Some(c) = cap {
            if !c.is_finite() || c <= 0.0 {
                return Err(Error::invalid(format!(
                    "capacity cap must be positive, got {c}"
                )));
            }
        }
        Ok(CapacityLaw { cap })
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }
}

/// Time-domain resource fractions of the backhaul and access hops.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResourceSplit {
    pub beta_bh: f64,
    pub beta_ac: f64,
}

impl ResourceSplit {
    /// Both hops active for the whole slot (full duplex).
    pub const FULL: ResourceSplit = ResourceSplit {
        beta_bh: 1.0,
        beta_ac: 1.0,
    };

    pub fn is_half_duplex_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.beta_bh)
            && (0.0..=1.0).contains(&self.beta_ac)
            && self.beta_bh + self.beta_ac <= 1.0 + SPLIT_SUM_TOLERANCE
    }
}

/// Amplify-and-forward repeater parameters, all linear (powers in mW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfParams {
    pub g_max: f64,
    pub delta_nf: f64,
    pub p_t2_max: f64,
    pub sigma1_sq: f64,
    pub f_bf: f64,
}

impl AfParams {
    pub fn new(
        g_max: f64,
        delta_nf: f64,
        p_t2_max: f64,
        sigma1_sq: f64,
        f_bf: f64,
    ) -> Result<Self> {
        let p = AfParams {
            g_max,
            delta_nf,
            p_t2_max,
            sigma1_sq,
            f_bf,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        // g_max may be +inf (ideal unlimited gain).
        if self.g_max.is_nan() || self.g_max <= 0.0 {
            return Err(Error::invalid(format!(
                "g_max must be > 0, got {}",
                self.g_max
            )));
        }
        if !self.delta_nf.is_finite() || self.delta_nf < 1.0 {
            return Err(Error::invalid(format!(
                "delta_nf must be >= 1 (linear), got {}",
                self.delta_nf
            )));
        }
        if !self.p_t2_max.is_finite() || self.p_t2_max <= 0.0 {
            return Err(Error::invalid(format!(
                "p_t2_max must be > 0, got {}",
                self.p_t2_max
            )));
        }
        if !self.sigma1_sq.is_finite() || self.sigma1_sq <= 0.0 {
            return Err(Error::invalid(format!(
                "sigma1_sq must be > 0, got {}",
                self.sigma1_sq
            )));
        }
        if !(self.f_bf > 0.0 && self.f_bf <= 1.0) {
            return Err(Error::invalid(format!(
                "f_bf must lie in (0, 1], got {}",
                self.f_bf
            )));
        }
        Ok(())
    }

    /// Power the repeater actually radiates: `min(P_T2,max, G_max * P_y1)`.
    pub fn tx_power(&self, sinr_first_hop: Sinr) -> f64 {
        af_loss_fp(self, sinr_first_hop) * self.p_t2_max
    }
}

/// Spectral efficiency achieved at `s`.
pub fn capacity(s: Sinr, law: CapacityLaw) -> Rate {
    let c = s.0.ln_1p() / std::f64::consts::LN_2;
    match law.cap {
        Some(cap) => Rate(c.min(cap)),
        None => Rate(c),
    }
}

/// SINR whose capacity equals `r`.
pub fn capacity_inverse(r: Rate, law: CapacityLaw) -> Result<Sinr> {
    if let Some(cap) = law.cap {
        if r.0 >= cap {
            return Err(Error::invalid(format!(
                "rate {} is not below the capacity cap {cap}",
                r.0
            )));
        }
    }
    let s = (r.0 * std::f64::consts::LN_2).exp_m1();
    if !s.is_finite() {
        return Err(Error::invalid(format!("rate {} has no finite SINR", r.0)));
    }
    Ok(Sinr(s))
}

/// Full-duplex decode-and-forward: the weaker hop limits the rate.
pub fn fddf_rate(c_bh: Rate, c_ac: Rate) -> Rate {
    Rate(c_bh.0.min(c_ac.0))
}

/// Half-duplex decode-and-forward with the rate-optimal time split.
///
/// The split satisfies `beta_bh / beta_ac = c_ac / c_bh` and uses the whole
/// slot. A dead hop yields rate 0 with an all-zero split.
pub fn hddf_rate(c_bh: Rate, c_ac: Rate) -> (Rate, ResourceSplit) {
    if c_bh.0 <= 0.0 || c_ac.0 <= 0.0 {
        return (Rate::ZERO, ResourceSplit::default());
    }
    let sum = c_bh.0 + c_ac.0;
    let split = ResourceSplit {
        beta_bh: c_ac.0 / sum,
        beta_ac: c_bh.0 / sum,
    };
    // Written as beta_bh * c_bh so that equal hops give exactly c / 2.
    (Rate(split.beta_bh * c_bh.0), split)
}

/// Finite-gain power loss factor `f_P`.
pub fn af_loss_fp(p: &AfParams, sinr_first_hop: Sinr) -> f64 {
    let p_y1 = p.sigma1_sq * (sinr_first_hop.0 + p.delta_nf);
    let ratio = p_y1 * p.g_max / p.p_t2_max;
    if ratio.is_nan() {
        1.0
    } else {
        ratio.min(1.0)
    }
}

/// Noise-forwarding loss factor `f_n`: share of signal in the forwarded power.
pub fn af_loss_fn(sinr_first_hop: Sinr, delta_nf: f64) -> f64 {
    sinr_first_hop.0 / (delta_nf + sinr_first_hop.0)
}

fn harmonic2(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    1.0 / (1.0 / a + 1.0 / b)
}

/// Effective end-to-end downlink SINR through an amplify-and-forward repeater.
///
/// The noise-figure penalty hits the backhaul (first) hop, the gain-limit,
/// noise-forwarding and beamforming losses hit the access hop.
pub fn af_dl_sinr(sinr_bh: Sinr, sinr_ac: Sinr, p: &AfParams) -> Sinr {
    let bh = sinr_bh.0 / p.delta_nf;
    let ac = p.f_bf * af_loss_fp(p, sinr_bh) * af_loss_fn(sinr_bh, p.delta_nf) * sinr_ac.0;
    Sinr::saturating(harmonic2(bh, ac))
}

/// Uplink counterpart of [`af_dl_sinr`].
///
/// The access hop comes first: `p.sigma1_sq` is the repeater's noise on the
/// access receiver and `p.p_t2_max` its backhaul transmit budget. The loss
/// factors are driven by the access-hop SINR and land on the backhaul hop,
/// while the beamforming loss stays on the access hop.
pub fn af_ul_sinr(sinr_bh: Sinr, sinr_ac: Sinr, p: &AfParams) -> Sinr {
    let ac = p.f_bf * sinr_ac.0 / p.delta_nf;
    let bh = af_loss_fp(p, sinr_ac) * af_loss_fn(sinr_ac, p.delta_nf) * sinr_bh.0;
    Sinr::saturating(harmonic2(bh, ac))
}

fn require_hops<T>(hops: &[T]) -> Result<()> {
    if hops.is_empty() {
        return Err(Error::invalid("hop list must contain at least one hop"));
    }
    Ok(())
}

/// N-hop full-duplex decode-and-forward rate.
pub fn nhop_fddf_rate(rates: &[Rate]) -> Result<Rate> {
    require_hops(rates)?;
    Ok(rates.iter().copied().fold(Rate(f64::INFINITY), fddf_rate))
}

/// N-hop half-duplex decode-and-forward rate.
///
/// Every pair of adjacent hops forms a two-hop half-duplex system with the
/// optimal split; the chain runs at the slowest such pair. One hop is just
/// that hop's rate.
pub fn nhop_hddf_rate(rates: &[Rate]) -> Result<Rate> {
    require_hops(rates)?;
    if rates.len() == 1 {
        return Ok(rates[0]);
    }
    Ok(rates
        .windows(2)
        .map(|w| hddf_rate(w[0], w[1]).0)
        .fold(Rate(f64::INFINITY), fddf_rate))
}

/// N-hop amplify-and-forward effective SINR from per-hop adjusted SINRs.
///
/// Each entry must already include that hop's loss factors.
pub fn nhop_af_sinr(hop_sinrs: &[Sinr]) -> Result<Sinr> {
    require_hops(hop_sinrs)?;
    let mut eff = hop_sinrs[0].0;
    for s in &hop_sinrs[1..] {
        eff = harmonic2(eff, s.0);
    }
    Ok(Sinr::saturating(eff))
}
