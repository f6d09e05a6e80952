//! Network description, channel/rate/load models and constraint residuals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semcom;
use crate::solver::AuxState;

/// Physical constants shared by every cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysConstants {
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    /// Air-to-ground reference power gain at 1 m, linear.
    pub beta0: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Computation power coefficient, W per (Gcycles/s)^3.
    pub zeta0: f64,
    /// FLOPs per CPU cycle.
    pub flops_per_cycle: f64,
    /// FLOPs per effective bit for semantic forwarding.
    pub g_sem: f64,
    /// FLOPs per effective bit for semantic-to-bit conversion.
    pub g_con: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self {
            noise_psd: 1e-20,
            beta0: 1e-6,
            alpha: 2.0,
            zeta0: 1e-3,
            flops_per_cycle: 2.0,
            g_sem: 2.0,
            g_con: 4.0,
        }
    }
}

impl PhysConstants {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("noise_psd", self.noise_psd),
            ("beta0", self.beta0),
            ("zeta0", self.zeta0),
            ("flops_per_cycle", self.flops_per_cycle),
            ("g_sem", self.g_sem),
            ("g_con", self.g_con),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("phys.{name}"), "must be finite and > 0"));
            }
        }
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(Error::config("phys.alpha", "must be >= 1"));
        }
        Ok(())
    }
}

/// Semantic coding parameters and the similarity-curve coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticParams {
    /// Bits per data unit under conventional coding.
    pub mu1: f64,
    /// Bits per semantic symbol.
    pub mu2: f64,
    /// Semantic symbols per semantic block.
    pub q_symbols: f64,
    /// Semantic units per data unit; only used for reporting.
    pub m_suts: f64,
    pub a1: f64,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for SemanticParams {
    fn default() -> Self {
        Self {
            mu1: 48.0,
            mu2: 4.0,
            q_symbols: 4.0,
            m_suts: 1.0,
            a1: 0.3980,
            a2: 0.5385,
            c1: 0.2815,
            c2: -1.3135,
        }
    }
}

impl SemanticParams {
    /// Equivalent bits carried per satellite-hop hertz at unit similarity.
    pub fn kappa(&self) -> f64 {
        self.mu1 / self.q_symbols
    }

    /// Rate multiplier of a semantic downlink relative to a bit link.
    pub fn sem_weight(&self) -> f64 {
        self.mu1 / (self.mu2 * self.q_symbols)
    }

    pub fn weight(&self, kind: UserKind) -> f64 {
        match kind {
            UserKind::Sem => self.sem_weight(),
            UserKind::Con => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2), ("q_symbols", self.q_symbols), ("m_suts", self.m_suts)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("semantic.{name}"), "must be finite and > 0"));
            }
        }
        if !(self.a1 >= 0.0) {
            return Err(Error::config("semantic.a1", "must be >= 0"));
        }
        if !(self.a2 > 0.0) {
            return Err(Error::config("semantic.a2", "must be > 0"));
        }
        if self.a1 + self.a2 > 1.0 {
            return Err(Error::config("semantic.a2", "a1 + a2 must be <= 1"));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::config("semantic.c1", "must be > 0"));
        }
        if !self.c2.is_finite() {
            return Err(Error::config("semantic.c2", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserKind {
    Sem,
    Con,
}

impl UserKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UserKind::Sem => "sem",
            UserKind::Con => "con",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundUser {
    pub kind: UserKind,
    pub position: [f64; 2],
}

/// Satellite-to-UAV hop collapsed to a scalar power gain `|h|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteLink {
    pub gain: f64,
}

impl SatelliteLink {
    /// Free-space gain under MRT beamforming: `beam_gain * (wavelength / (4 pi d))^2`.
    pub fn from_geometry(beam_gain: f64, wavelength: f64, distance: f64) -> Result<Self> {
        if !(beam_gain > 0.0 && wavelength > 0.0 && distance > 0.0) {
            return Err(Error::domain("beam gain, wavelength and distance must be > 0"));
        }
        let r = wavelength / (4.0 * std::f64::consts::PI * distance);
        Ok(Self { gain: beam_gain * r * r })
    }

    pub fn from_db(gain_db: f64) -> Self {
        Self { gain: 10f64.powf(gain_db / 10.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub index: usize,
    pub uav_height: f64,
    pub users: Vec<GroundUser>,
    pub sat_link: SatelliteLink,
}

impl Cluster {
    pub fn centroid(&self) -> [f64; 2] {
        let n = self.users.len().max(1) as f64;
        let (sx, sy) = self
            .users
            .iter()
            .fold((0.0, 0.0), |(x, y), u| (x + u.position[0], y + u.position[1]));
        [sx / n, sy / n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Satellite total bandwidth, Hz.
    pub sat_bandwidth: f64,
    /// Satellite total power, W.
    pub sat_power: f64,
    /// Per-UAV bandwidth, Hz.
    pub uav_bandwidth: f64,
    /// Per-UAV power for transmission plus computation, W.
    pub uav_power: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { sat_bandwidth: 10e6, sat_power: 1e3, uav_bandwidth: 10e6, uav_power: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    pub clusters: Vec<Cluster>,
    pub budgets: Budgets,
    pub phys: PhysConstants,
    pub sem: SemanticParams,
}

impl NetworkInstance {
    pub fn validate(&self) -> Result<()> {
        self.phys.validate()?;
        self.sem.validate()?;
        let b = &self.budgets;
        for (name, v) in [
            ("sat_bandwidth", b.sat_bandwidth),
            ("sat_power", b.sat_power),
            ("uav_bandwidth", b.uav_bandwidth),
            ("uav_power", b.uav_power),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("budgets.{name}"), "must be finite and > 0"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.clusters {
            if !seen.insert(c.index) {
                return Err(Error::config("clusters.index", format!("duplicate cluster index {}", c.index)));
            }
            if !(c.uav_height.is_finite() && c.uav_height > 0.0) {
                return Err(Error::config("clusters.uav_height", "must be > 0"));
            }
            if c.users.is_empty() {
                return Err(Error::config("clusters.users", format!("cluster {} has no users", c.index)));
            }
            if !(c.sat_link.gain.is_finite() && c.sat_link.gain > 0.0) {
                return Err(Error::config("clusters.sat_link.gain", "must be > 0"));
            }
            for u in &c.users {
                if !(u.position[0].is_finite() && u.position[1].is_finite()) {
                    return Err(Error::config("clusters.users.position", "must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.clusters.iter().map(|c| c.users.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkAlloc {
    pub bandwidth: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAlloc {
    pub b_s2r: f64,
    pub p_s2r: f64,
    pub uav_xy: [f64; 2],
    /// One entry per user, in the cluster's user order.
    pub links: Vec<LinkAlloc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub clusters: Vec<ClusterAlloc>,
}

impl Allocation {
    pub fn zeros(instance: &NetworkInstance) -> Self {
        Self {
            clusters: instance
                .clusters
                .iter()
                .map(|c| ClusterAlloc {
                    b_s2r: 0.0,
                    p_s2r: 0.0,
                    uav_xy: c.centroid(),
                    links: vec![LinkAlloc::default(); c.users.len()],
                })
                .collect(),
        }
    }

    pub fn check_shape(&self, instance: &NetworkInstance) -> Result<()> {
        if self.clusters.len() != instance.clusters.len() {
            return Err(Error::Dimension(format!(
                "allocation has {} clusters, instance has {}",
                self.clusters.len(),
                instance.clusters.len()
            )));
        }
        for (n, (a, c)) in self.clusters.iter().zip(&instance.clusters).enumerate() {
            if a.links.len() != c.users.len() {
                return Err(Error::Dimension(format!(
                    "cluster {n}: {} links for {} users",
                    a.links.len(),
                    c.users.len()
                )));
            }
        }
        Ok(())
    }
}

/// `beta0 * d^-alpha` with `d` the 3-D distance.
pub fn air_channel_gain(uav_xyz: [f64; 3], user_xy: [f64; 2], phys: &PhysConstants) -> Result<f64> {
    if uav_xyz.iter().chain(user_xy.iter()).any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite position"));
    }
    let dx = uav_xyz[0] - user_xy[0];
    let dy = uav_xyz[1] - user_xy[1];
    let d2 = dx * dx + dy * dy + uav_xyz[2] * uav_xyz[2];
    if d2 <= 0.0 {
        return Err(Error::domain("zero distance"));
    }
    Ok(phys.beta0 * d2.powf(-0.5 * phys.alpha))
}

/// Satellite-hop SNR in dB. Zero power maps to `-inf`.
pub fn snr_s2r_db(p: f64, gain: f64, b: f64, phys: &PhysConstants) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain("satellite-hop bandwidth must be > 0"));
    }
    if !(p >= 0.0) {
        return Err(Error::domain("power must be >= 0"));
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * (p * gain / (b * phys.noise_psd)).log10())
}

pub fn snr_linear(p: f64, gain: f64, b: f64, phys: &PhysConstants) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain("bandwidth must be > 0"));
    }
    if !(p >= 0.0) {
        return Err(Error::domain("power must be >= 0"));
    }
    Ok(p * gain / (b * phys.noise_psd))
}

pub fn bit_rate(b: f64, snr: f64) -> f64 {
    if b <= 0.0 || snr <= 0.0 {
        return 0.0;
    }
    b * snr.ln_1p() / std::f64::consts::LN_2
}

/// Downlink bit rate `b log2(1 + s/b)` written in terms of `s = gain*p/N0`
/// so that `b -> 0` is well defined.
pub fn link_capacity(b: f64, s: f64) -> f64 {
    if b <= 0.0 || s <= 0.0 {
        return 0.0;
    }
    b * (s / b).ln_1p() / std::f64::consts::LN_2
}

/// Relay compute frequency in Gcycles/s.
pub fn compute_load(gamma_sum_su: f64, gamma_sum_cu: f64, phys: &PhysConstants) -> f64 {
    (phys.g_sem * gamma_sum_su + phys.g_con * gamma_sum_cu) / phys.flops_per_cycle / 1e9
}

/// Satellite-hop equivalent bit rate delivered to cluster `n`'s relay.
pub fn s2r_rate(instance: &NetworkInstance, n: usize, b: f64, p: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    let r = snr_s2r_db(p, instance.clusters[n].sat_link.gain, b, &instance.phys).unwrap_or(f64::NEG_INFINITY);
    semcom::semantic_to_bit_s2r(b, r, &instance.sem)
}

/// Per-cluster downlink quantities evaluated at true channel gains.
#[derive(Debug, Clone)]
pub struct ClusterRates {
    pub gains: Vec<f64>,
    pub snr: Vec<f64>,
    /// Equivalent bit rate per link (weighted for semantic users).
    pub gamma: Vec<f64>,
    pub gamma_su: f64,
    pub gamma_cu: f64,
    /// Relay compute frequency, Gcycles/s.
    pub load: f64,
}

impl ClusterRates {
    pub fn total(&self) -> f64 {
        self.gamma_su + self.gamma_cu
    }
}

pub fn cluster_rates(instance: &NetworkInstance, n: usize, a: &ClusterAlloc) -> ClusterRates {
    let c = &instance.clusters[n];
    let ph = &instance.phys;
    let mut out = ClusterRates {
        gains: Vec::with_capacity(c.users.len()),
        snr: Vec::with_capacity(c.users.len()),
        gamma: Vec::with_capacity(c.users.len()),
        gamma_su: 0.0,
        gamma_cu: 0.0,
        load: 0.0,
    };
    let uav = [a.uav_xy[0], a.uav_xy[1], c.uav_height];
    for (u, l) in c.users.iter().zip(&a.links) {
        let g = air_channel_gain(uav, u.position, ph).unwrap_or(0.0);
        let snr = if l.bandwidth > 0.0 { g * l.power / (l.bandwidth * ph.noise_psd) } else { 0.0 };
        let rate = link_capacity(l.bandwidth, g * l.power / ph.noise_psd);
        let gamma = match u.kind {
            UserKind::Sem => semcom::semantic_to_bit_r2su(rate, &instance.sem),
            UserKind::Con => rate,
        };
        match u.kind {
            UserKind::Sem => out.gamma_su += gamma,
            UserKind::Con => out.gamma_cu += gamma,
        }
        out.gains.push(g);
        out.snr.push(snr);
        out.gamma.push(gamma);
    }
    out.load = compute_load(out.gamma_su, out.gamma_cu, ph);
    out
}

pub fn sum_rate(instance: &NetworkInstance, allocation: &Allocation) -> f64 {
    allocation
        .clusters
        .iter()
        .enumerate()
        .map(|(n, a)| cluster_rates(instance, n, a).total())
        .sum()
}

/// Signed residual (`<= 0` satisfied) together with the scale used to
/// express it relatively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    fn new(value: f64, scale: f64) -> Self {
        let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
        Self { value, scale }
    }

    pub fn rel(&self) -> f64 {
        self.value / self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxResiduals {
    pub c6: Vec<Vec<Residual>>,
    pub c6p: Vec<Vec<Residual>>,
    pub c7: Vec<Residual>,
    pub c7p: Vec<Residual>,
    pub c8: Vec<Vec<Residual>>,
    pub c9: Vec<Vec<Residual>>,
    pub c9p: Vec<Vec<Residual>>,
    pub c10: Vec<Residual>,
    pub c11: Vec<Residual>,
    pub c11p: Vec<Residual>,
    pub c12: Vec<Residual>,
    /// Number of C11' evaluations whose similarity argument was clamped.
    pub c11p_clamped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub c1: Vec<Residual>,
    pub c2: Residual,
    pub c3: Vec<Residual>,
    pub c4: Residual,
    pub c5: Vec<Residual>,
    pub aux: Option<AuxResiduals>,
}

impl Residuals {
    /// Largest relative violation of the original constraints C1-C5.
    pub fn max_original(&self) -> f64 {
        self.c1
            .iter()
            .chain(&self.c3)
            .chain(&self.c5)
            .chain([&self.c2, &self.c4])
            .map(Residual::rel)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest relative violation over the auxiliary constraints, if present.
    pub fn max_aux(&self) -> Option<f64> {
        let a = self.aux.as_ref()?;
        let flat = a.c6.iter().chain(&a.c6p).chain(&a.c8).chain(&a.c9).chain(&a.c9p).flatten();
        let per = a.c7.iter().chain(&a.c7p).chain(&a.c10).chain(&a.c11).chain(&a.c11p).chain(&a.c12);
        Some(flat.chain(per).map(Residual::rel).fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn max_violation(&self) -> f64 {
        let m = self.max_original();
        match self.max_aux() {
            Some(a) => m.max(a),
            None => m,
        }
    }
}

pub fn constraint_residuals(instance: &NetworkInstance, allocation: &Allocation, aux: Option<&AuxState>) -> Residuals {
    let b = &instance.budgets;
    let ph = &instance.phys;
    let sem = &instance.sem;
    let mut c1 = Vec::new();
    let mut c3 = Vec::new();
    let mut c5 = Vec::new();
    let mut rates = Vec::new();
    let (mut sum_bs, mut sum_ps) = (0.0, 0.0);
    for (n, a) in allocation.clusters.iter().enumerate() {
        let r = cluster_rates(instance, n, a);
        let s = s2r_rate(instance, n, a.b_s2r, a.p_s2r);
        c1.push(Residual::new(r.total() - s, s.max(r.total())));
        let bw: f64 = a.links.iter().map(|l| l.bandwidth).sum();
        c3.push(Residual::new(a.b_s2r + bw - b.uav_bandwidth, b.uav_bandwidth));
        let pw: f64 = a.links.iter().map(|l| l.power).sum();
        c5.push(Residual::new(ph.zeta0 * r.load.powi(3) + pw - b.uav_power, b.uav_power));
        sum_bs += a.b_s2r;
        sum_ps += a.p_s2r;
        rates.push(r);
    }
    let c2 = Residual::new(sum_bs - b.sat_bandwidth, b.sat_bandwidth);
    let c4 = Residual::new(sum_ps - b.sat_power, b.sat_power);
    let aux = aux.map(|x| aux_residuals(instance, allocation, x, &rates, sem));
    Residuals { c1, c2, c3, c4, c5, aux }
}

fn aux_residuals(
    instance: &NetworkInstance,
    allocation: &Allocation,
    aux: &AuxState,
    rates: &[ClusterRates],
    sem: &SemanticParams,
) -> AuxResiduals {
    let ph = &instance.phys;
    let b = &instance.budgets;
    let mut out = AuxResiduals {
        c6: vec![],
        c6p: vec![],
        c7: vec![],
        c7p: vec![],
        c8: vec![],
        c9: vec![],
        c9p: vec![],
        c10: vec![],
        c11: vec![],
        c11p: vec![],
        c12: vec![],
        c11p_clamped: 0,
    };
    for (n, (a, ca)) in allocation.clusters.iter().zip(&aux.clusters).enumerate() {
        let c = &instance.clusters[n];
        let (mut r6, mut r6p, mut r8, mut r9, mut r9p) = (vec![], vec![], vec![], vec![], vec![]);
        let (mut g_su, mut g_cu) = (0.0, 0.0);
        for (k, u) in c.users.iter().enumerate() {
            let la = &ca.links[k];
            let l = &a.links[k];
            let h = rates[n].gains[k];
            let dx = a.uav_xy[0] - u.position[0];
            let dy = a.uav_xy[1] - u.position[1];
            let d2 = dx * dx + dy * dy + c.uav_height * c.uav_height;
            r6.push(Residual::new(la.h_hat - h, h));
            let d2_bound = (ph.beta0 / la.h_hat).powf(2.0 / ph.alpha);
            r6p.push(Residual::new(d2 - d2_bound, d2_bound));
            let snr = if l.bandwidth > 0.0 { la.h_hat * l.power / (l.bandwidth * ph.noise_psd) } else { 0.0 };
            r8.push(Residual::new(snr - la.gamma_hat, la.gamma_hat.max(snr)));
            let inv = 1.0 / (1.0 + la.gamma_hat);
            r9.push(Residual::new((-la.eta_hat * std::f64::consts::LN_2).exp() - inv, inv));
            let lvl = la.eta_hat.exp2() - 1.0;
            r9p.push(Residual::new(la.gamma_hat * la.gamma_hat - lvl * la.gamma_hat, (la.gamma_hat * lvl).max(la.gamma_hat * la.gamma_hat)));
            let gamma = sem.weight(u.kind) * l.bandwidth * la.eta_hat;
            match u.kind {
                UserKind::Sem => g_su += gamma,
                UserKind::Con => g_cu += gamma,
            }
        }
        out.c6.push(r6);
        out.c6p.push(r6p);
        out.c8.push(r8);
        out.c9.push(r9);
        out.c9p.push(r9p);

        let r_true = if a.b_s2r > 0.0 {
            snr_s2r_db(a.p_s2r, c.sat_link.gain, a.b_s2r, ph).unwrap_or(f64::NEG_INFINITY)
        } else {
            f64::NEG_INFINITY
        };
        out.c7.push(Residual::new(ca.r_hat - r_true, ca.r_hat.abs().max(1.0)));
        let lhs = ph.noise_psd * 10f64.powf(ca.r_hat / 10.0) * a.b_s2r * a.b_s2r;
        let rhs = c.sat_link.gain * a.p_s2r * a.b_s2r;
        out.c7p.push(Residual::new(lhs - rhs, lhs.max(rhs)));

        let load = compute_load(g_su, g_cu, ph);
        out.c10.push(Residual::new(load - ca.nu_hat, ca.nu_hat.max(load)));
        let s = semcom::semantic_to_bit_s2r(a.b_s2r, ca.r_hat, sem);
        let gs = g_su + g_cu;
        out.c11.push(Residual::new(gs - s, gs.max(s)));
        let (r11p, clamped) = if a.b_s2r > 0.0 {
            let (eps, clamped) = semcom::clamp_similarity(gs / (sem.kappa() * a.b_s2r), sem);
            let rinv = semcom::similarity_inverse(eps, sem).unwrap_or(f64::INFINITY);
            ((rinv - ca.r_hat).exp() - 1.0, clamped)
        } else {
            (if gs > 0.0 { f64::INFINITY } else { 0.0 }, false)
        };
        if clamped {
            out.c11p_clamped += 1;
        }
        out.c11p.push(Residual::new(r11p, 1.0));
        let pw: f64 = a.links.iter().map(|l| l.power).sum();
        out.c12.push(Residual::new(ph.zeta0 * ca.nu_hat.powi(3) + pw - b.uav_power, b.uav_power));
    }
    out
}
