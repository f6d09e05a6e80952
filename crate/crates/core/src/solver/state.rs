use serde::{Deserialize, Serialize};

use super::config::DualSteps;
use crate::netmodel::{self, Allocation, NetworkInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkAux {
    /// Lower bound on the downlink channel gain.
    pub h_hat: f64,
    /// Upper bound on the downlink SNR, linear.
    pub gamma_hat: f64,
    /// Upper bound on the spectral efficiency, bits/s/Hz.
    pub eta_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAux {
    /// Lower bound on the satellite-hop SNR, dB.
    pub r_hat: f64,
    /// Upper bound on the relay compute frequency, Gcycles/s.
    pub nu_hat: f64,
    pub links: Vec<LinkAux>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxState {
    pub clusters: Vec<ClusterAux>,
}

impl AuxState {
    /// Auxiliaries equal to the quantities they bound, so C6-C10 hold with equality.
    pub fn tight(instance: &NetworkInstance, alloc: &Allocation) -> Self {
        let clusters = alloc
            .clusters
            .iter()
            .enumerate()
            .map(|(n, a)| tight_cluster(instance, n, a))
            .collect();
        Self { clusters }
    }
}

pub(crate) fn tight_cluster(instance: &NetworkInstance, n: usize, a: &netmodel::ClusterAlloc) -> ClusterAux {
    let c = &instance.clusters[n];
    let rates = netmodel::cluster_rates(instance, n, a);
    let links = rates
        .gains
        .iter()
        .zip(&rates.snr)
        .map(|(&h, &snr)| LinkAux { h_hat: h, gamma_hat: snr, eta_hat: snr.ln_1p() / std::f64::consts::LN_2 })
        .collect();
    let r_hat = if a.b_s2r > 0.0 {
        netmodel::snr_s2r_db(a.p_s2r, c.sat_link.gain, a.b_s2r, &instance.phys).unwrap_or(f64::NEG_INFINITY)
    } else {
        f64::NEG_INFINITY
    };
    ClusterAux { r_hat, nu_hat: rates.load, links }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkDuals {
    pub l6: f64,
    pub l6p: f64,
    pub l8: f64,
    pub l9: f64,
    pub l9p: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterDuals {
    pub l3: f64,
    /// Shared multiplier of the relay power budget (C5 / C12).
    pub l5: f64,
    pub l7: f64,
    pub l7p: f64,
    pub l10: f64,
    pub l11: f64,
    pub l11p: f64,
    pub links: Vec<LinkDuals>,
}

/// Multiplier values; also used as the shape of a subgradient.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Multipliers {
    pub l2: f64,
    pub l4: f64,
    pub clusters: Vec<ClusterDuals>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
}

impl Multipliers {
    pub fn zeros(instance: &NetworkInstance) -> Self {
        Self {
            l2: 0.0,
            l4: 0.0,
            clusters: instance
                .clusters
                .iter()
                .map(|c| ClusterDuals { links: vec![LinkDuals::default(); c.users.len()], ..Default::default() })
                .collect(),
        }
    }

    /// Visits every multiplier with the matching entry of `other`.
    pub fn zip_mut(&mut self, other: &Multipliers, mut f: impl FnMut(Family, &mut f64, f64)) {
        f(Family::C2, &mut self.l2, other.l2);
        f(Family::C4, &mut self.l4, other.l4);
        for (c, o) in self.clusters.iter_mut().zip(&other.clusters) {
            f(Family::C3, &mut c.l3, o.l3);
            f(Family::C5, &mut c.l5, o.l5);
            f(Family::C7, &mut c.l7, o.l7);
            f(Family::C7, &mut c.l7p, o.l7p);
            f(Family::C10, &mut c.l10, o.l10);
            f(Family::C11, &mut c.l11, o.l11);
            f(Family::C11, &mut c.l11p, o.l11p);
            for (l, ol) in c.links.iter_mut().zip(&o.links) {
                f(Family::C6, &mut l.l6, ol.l6);
                f(Family::C6, &mut l.l6p, ol.l6p);
                f(Family::C8, &mut l.l8, ol.l8);
                f(Family::C9, &mut l.l9, ol.l9);
                f(Family::C9, &mut l.l9p, ol.l9p);
            }
        }
    }

    /// All multiplier values in visiting order.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.clone().zip_mut(self, |_, v, _| out.push(*v));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub lambda: Multipliers,
    /// Step counter of the diminishing schedule; starts at 1.
    pub k: u64,
    pub base_steps: DualSteps,
}

impl DualState {
    pub fn new(instance: &NetworkInstance, base_steps: DualSteps) -> Self {
        Self { lambda: Multipliers::zeros(instance), k: 1, base_steps }
    }

    pub fn step(&self, family: Family) -> f64 {
        let s = &self.base_steps;
        let base = match family {
            Family::C2 => s.c2,
            Family::C3 => s.c3,
            Family::C4 => s.c4,
            Family::C5 => s.c5,
            Family::C6 => s.c6,
            Family::C7 => s.c7,
            Family::C8 => s.c8,
            Family::C9 => s.c9,
            Family::C10 => s.c10,
            Family::C11 => s.c11,
        };
        base / (self.k as f64).sqrt()
    }
}

/// Counters of safeguards that altered a block's raw output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Events {
    /// Similarity arguments clamped before inversion.
    pub clamps: usize,
    /// Primal values projected onto floors or bounds.
    pub projections: usize,
    /// Satellite bandwidths rescaled onto the shared budget.
    pub rescales: usize,
    /// Location updates skipped because all centroid weights vanished.
    pub frozen_uav: usize,
    /// Blocks reverted because they lowered the objective.
    pub reverts: usize,
    /// Downlink bandwidth limited by the relay compute budget.
    pub load_capped: usize,
}

impl std::ops::AddAssign for Events {
    fn add_assign(&mut self, o: Self) {
        self.clamps += o.clamps;
        self.projections += o.projections;
        self.rescales += o.rescales;
        self.frozen_uav += o.frozen_uav;
        self.reverts += o.reverts;
        self.load_capped += o.load_capped;
    }
}
