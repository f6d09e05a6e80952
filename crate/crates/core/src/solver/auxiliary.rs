//! Auxiliary block: channel-gain, spectral-efficiency and compute bounds at
//! fixed bandwidths, powers and positions.

use std::f64::consts::LN_2;

use super::config::SolverConfig;
use super::dual::{complementary_slackness, dual_update};
use super::state::{AuxState, DualState, Multipliers};
use crate::error::Result;
use crate::netmodel::{self, Allocation, NetworkInstance, UserKind};

/// Relative residual below which an auxiliary constraint counts as met.
const PRIMAL_TOL: f64 = 1e-12;

/// `H_hat = (1/A) [ (w b / ln2) A / (l6 + l8 A) - 1 ]` with `A = p/(b N0)`.
pub fn closed_form_h_hat(weight_b: f64, a_h: f64, lambda6: f64, lambda8: f64) -> f64 {
    let den = lambda6 + lambda8 * a_h;
    if den <= 0.0 {
        return f64::INFINITY;
    }
    ((weight_b / LN_2) * a_h / den - 1.0) / a_h
}

/// `eta_hat = -log2( (l10 G/z + l11) w b / (l9 ln2) )`.
pub fn closed_form_eta_hat(weight_b: f64, g_over_z: f64, lambda9: f64, lambda10: f64, lambda11: f64) -> f64 {
    let num = (lambda10 * g_over_z + lambda11) * weight_b;
    if lambda9 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -(num / (lambda9 * LN_2)).log2()
}

/// `nu_hat = sqrt(l10 / (3 l12 zeta0))`.
pub fn closed_form_nu_hat(lambda10: f64, lambda12: f64, zeta0: f64) -> f64 {
    if lambda10 <= 0.0 {
        return 0.0;
    }
    if lambda12 <= 0.0 {
        return f64::INFINITY;
    }
    (lambda10 / (3.0 * lambda12 * zeta0)).sqrt()
}

pub struct AuxOutcome {
    pub aux: AuxState,
    pub duals: DualState,
    pub iterations: usize,
    pub warning: bool,
    pub projections: usize,
}

pub fn solve_auxiliary(
    instance: &NetworkInstance,
    alloc: &Allocation,
    aux: &AuxState,
    duals: &DualState,
    cfg: &SolverConfig,
) -> Result<(AuxState, DualState)> {
    let o = solve_auxiliary_with(instance, alloc, aux, duals, cfg)?;
    Ok((o.aux, o.duals))
}

/// Primal-dual loop over the auxiliary bounds.
///
/// Each pass evaluates the closed forms at the current multipliers, projects
/// them onto the bounds their constraints impose, then takes a projected
/// subgradient step on the multipliers. Stops when every projected residual
/// is non-positive and complementary slackness holds to `kkt_tol`.
pub fn solve_auxiliary_with(
    instance: &NetworkInstance,
    alloc: &Allocation,
    aux: &AuxState,
    duals: &DualState,
    cfg: &SolverConfig,
) -> Result<AuxOutcome> {
    alloc.check_shape(instance)?;
    let ph = &instance.phys;
    let sem = &instance.sem;
    let mut d = duals.clone();
    // the block's own multipliers restart from zero each call
    for c in d.lambda.clusters.iter_mut() {
        c.l10 = 0.0;
        for l in c.links.iter_mut() {
            l.l6 = 0.0;
            l.l8 = 0.0;
            l.l9 = 0.0;
        }
    }
    let mut out = aux.clone();
    let mut projections = 0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.dual_max_iters {
        iterations += 1;
        projections = 0;
        // subgradients are relative residuals, which fixes the step scale per family
        let mut g = Multipliers::zeros(instance);
        for (n, (ca, xa)) in alloc.clusters.iter().zip(out.clusters.iter_mut()).enumerate() {
            let cl = &instance.clusters[n];
            let rates = netmodel::cluster_rates(instance, n, ca);
            let dn = &d.lambda.clusters[n];
            let (mut g_su, mut g_cu) = (0.0, 0.0);
            let p_sum: f64 = ca.links.iter().map(|l| l.power).sum();
            for (k, u) in cl.users.iter().enumerate() {
                let l = &ca.links[k];
                let la = &mut xa.links[k];
                let w = sem.weight(u.kind);
                let h_true = rates.gains[k];
                if l.bandwidth > 0.0 && l.power > 0.0 {
                    let a_h = l.power / (l.bandwidth * ph.noise_psd);
                    let raw = closed_form_h_hat(w * l.bandwidth, a_h, dn.links[k].l6, dn.links[k].l8);
                    let cap = h_true.min(la.gamma_hat / a_h);
                    if !(raw <= cap) {
                        projections += 1;
                    }
                    la.h_hat = raw.min(cap).max(f64::MIN_POSITIVE);
                    g.clusters[n].links[k].l6 = (la.h_hat - h_true) / h_true;
                    g.clusters[n].links[k].l8 = (la.h_hat * a_h - la.gamma_hat) / la.gamma_hat.max(f64::MIN_POSITIVE);
                } else {
                    la.h_hat = h_true;
                }
                let goz = match u.kind {
                    UserKind::Sem => ph.g_sem,
                    UserKind::Con => ph.g_con,
                } / ph.flops_per_cycle
                    / 1e9;
                let raw = closed_form_eta_hat(w * l.bandwidth, goz, dn.links[k].l9, dn.l10, dn.l11);
                let lo = la.gamma_hat.ln_1p() / LN_2;
                if !(raw >= lo) {
                    projections += 1;
                }
                la.eta_hat = if raw >= lo { raw } else { lo };
                g.clusters[n].links[k].l9 = (-la.eta_hat * LN_2).exp() * (1.0 + la.gamma_hat) - 1.0;
                let gamma = w * l.bandwidth * la.eta_hat;
                match u.kind {
                    UserKind::Sem => g_su += gamma,
                    UserKind::Con => g_cu += gamma,
                }
            }
            let load = netmodel::compute_load(g_su, g_cu, ph);
            let raw = closed_form_nu_hat(dn.l10, dn.l5, ph.zeta0);
            let hi = ((instance.budgets.uav_power - p_sum).max(0.0) / ph.zeta0).cbrt();
            if !(raw >= load && raw <= hi) {
                projections += 1;
            }
            xa.nu_hat = raw.clamp(load, hi.max(load));
            g.clusters[n].l10 = (load - xa.nu_hat) / xa.nu_hat.max(f64::MIN_POSITIVE);
        }
        let cs = complementary_slackness(&d.lambda, &g);
        let primal_ok = g.values().iter().all(|v| *v <= PRIMAL_TOL);
        if primal_ok && cs <= cfg.kkt_tol {
            converged = true;
            break;
        }
        let mut step = g.clone();
        // only this block's constraint families are ascended here
        step.l2 = 0.0;
        step.l4 = 0.0;
        for c in step.clusters.iter_mut() {
            c.l3 = 0.0;
            c.l5 = 0.0;
            c.l7 = 0.0;
            c.l7p = 0.0;
            c.l11 = 0.0;
            c.l11p = 0.0;
            for l in c.links.iter_mut() {
                l.l6p = 0.0;
                l.l9p = 0.0;
            }
        }
        d = dual_update(&d, &step, cfg);
    }
    // recover the multipliers that reproduce the tight bounds through the closed forms
    for (n, (ca, xa)) in alloc.clusters.iter().zip(&out.clusters).enumerate() {
        let cl = &instance.clusters[n];
        let l11 = d.lambda.clusters[n].l11;
        for (k, u) in cl.users.iter().enumerate() {
            let l = &ca.links[k];
            let la = &xa.links[k];
            let w = sem.weight(u.kind);
            let dk = &mut d.lambda.clusters[n].links[k];
            if l.bandwidth > 0.0 && l.power > 0.0 {
                let a_h = l.power / (l.bandwidth * ph.noise_psd);
                dk.l6 = w * l.bandwidth * a_h / ((1.0 + a_h * la.h_hat) * LN_2);
                dk.l8 = 0.0;
            }
            dk.l9 = l11 * w * l.bandwidth * la.eta_hat.exp2() / LN_2;
        }
    }
    Ok(AuxOutcome { aux: out, duals: d, iterations, warning: !converged, projections })
}
