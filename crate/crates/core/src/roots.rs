//! Bracketed scalar root finding.
//!
//! Every caller in the solver needs to know which side of a monotone
//! constraint the answer lies on, so the finders return the final bracket
//! rather than a single point.

#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    /// Endpoint with `f(lo) >= 0` when the bracket was built from an
    /// increasing-to-decreasing sign change, see [`find_root`].
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Finds a sign change of `f` inside `[lo, hi]`.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs (or one of them zero).
/// Uses the Illinois variant of regula falsi with a bisection fallback, so
/// the bracket always shrinks. Stops once `hi - lo <= xtol`.
pub fn find_root<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Bracket {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Bracket { lo, hi: lo, f_lo, f_hi: f_lo, iterations: 0, converged: true };
    }
    if f_hi == 0.0 {
        return Bracket { lo: hi, hi, f_lo: f_hi, f_hi, iterations: 0, converged: true };
    }
    debug_assert!(f_lo.signum() != f_hi.signum(), "root not bracketed");
    let mut side = 0i8;
    let mut it = 0;
    while it < max_iter {
        if (hi - lo).abs() <= xtol {
            return Bracket { lo, hi, f_lo, f_hi, iterations: it, converged: true };
        }
        it += 1;
        let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let width = hi - lo;
        // fall back to bisection when the secant point hugs an endpoint
        if !x.is_finite() || x <= lo + 0.01 * width || x >= hi - 0.01 * width || it % 4 == 0 {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Bracket { lo: x, hi: x, f_lo: fx, f_hi: fx, iterations: it, converged: true };
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    let converged = (hi - lo).abs() <= xtol;
    Bracket { lo, hi, f_lo, f_hi, iterations: it, converged }
}

/// Largest `x` in `[lo, hi]` with `pred(x)` true, assuming `pred` is true
/// on a prefix of the interval and `pred(lo)` holds.
pub fn last_true<F: FnMut(f64) -> bool>(
    mut pred: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
) -> (f64, usize) {
    if pred(hi) {
        return (hi, 0);
    }
    let mut it = 0;
    while hi - lo > xtol && it < max_iter {
        it += 1;
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, it)
}
