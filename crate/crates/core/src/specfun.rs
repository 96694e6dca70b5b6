//! First-order Marcum-Q and the two real branches of Lambert W.

use std::f64::consts::E;

use crate::error::{ensure_nonneg, Error, Result};

/// Branch point of the real Lambert W function, `-1/e`.
pub const BRANCH_POINT: f64 = -1.0 / E;

/// Inputs this close below the branch point are treated as the branch point
/// itself. Covers rounding in callers that compute `-1/e` by a different route.
const BRANCH_SNAP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LambertBranch {
    /// `W0`, values >= -1.
    Principal,
    /// `W-1`, values <= -1.
    NegativeOne,
}

/// First-order Marcum-Q function `Q1(a, b)`.
///
/// With `u = a^2/2`, `v = b^2/2` and independent `N_u ~ Pois(u)`,
/// `N_v ~ Pois(v)`, `Q1(a, b) = P[N_v <= N_u]`. That probability is summed
/// directly when `a <= b`; otherwise its complement `P[N_v > N_u]` is summed
/// and subtracted from one, so values close to 1 keep full precision. Both
/// series have positive terms with Poisson weights carried in log space.
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    ensure_nonneg("a", a)?;
    ensure_nonneg("b", b)?;
    if b == 0.0 {
        return Ok(1.0);
    }
    let v = 0.5 * b * b;
    if a == 0.0 {
        return Ok((-v).exp());
    }
    let u = 0.5 * a * a;
    let q = if a <= b {
        poisson_mixture(u, v, 0)
    } else {
        1.0 - poisson_mixture(v, u, 1)
    };
    Ok(q.clamp(0.0, 1.0))
}

/// `sum_k Pois(k; weight_mean) * P[Pois(cdf_mean) <= k - lag]`.
///
/// Stops once `k` is past the weight mean and a geometric bound on the
/// remaining weight drops below `1e-17`.
fn poisson_mixture(weight_mean: f64, cdf_mean: f64, lag: u64) -> f64 {
    let (ln_w, ln_c) = (weight_mean.ln(), cdf_mean.ln());
    let mut ln_wk = -weight_mean; // ln Pois(k; weight_mean)
    let mut ln_ck = -cdf_mean; // ln Pois(k - lag; cdf_mean)
    let mut cdf = if lag == 0 { ln_ck.exp() } else { 0.0 };
    let mut sum = ln_wk.exp() * cdf;
    let mut k = 0u64;
    loop {
        k += 1;
        let kf = k as f64;
        ln_wk += ln_w - kf.ln();
        if k >= lag {
            let j = k - lag;
            if j > 0 {
                ln_ck += ln_c - (j as f64).ln();
            }
            cdf = (cdf + ln_ck.exp()).min(1.0);
        }
        let wk = ln_wk.exp();
        sum += wk * cdf;
        if kf > weight_mean {
            let ratio = weight_mean / (kf + 1.0);
            let tail = wk * ratio / (1.0 - ratio);
            if tail < 1e-17 {
                break;
            }
        }
    }
    sum
}

/// Real Lambert W on the requested branch: the `w` with `w * exp(w) = x`.
///
/// Halley iteration from a branch-specific starting point; near the branch
/// point the series in `p = sqrt(2(e x + 1))` is used directly because the
/// Newton-type denominator vanishes there. Falls back to bisection if Halley
/// fails to meet the residual bound.
pub fn lambert_w(x: f64, branch: LambertBranch) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("x", x, "must be finite"));
    }
    if x < BRANCH_POINT {
        if x >= BRANCH_POINT - BRANCH_SNAP {
            return Ok(-1.0);
        }
        return Err(Error::domain("x", x, "Lambert W is not real below -1/e"));
    }
    if branch == LambertBranch::NegativeOne && x >= 0.0 {
        return Err(Error::domain("x", x, "W-1 is only defined on [-1/e, 0)"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let p2 = 2.0 * (E * x + 1.0);
    let p = p2.max(0.0).sqrt();
    let sign = match branch {
        LambertBranch::Principal => 1.0,
        LambertBranch::NegativeOne => -1.0,
    };
    if p < 1e-3 {
        return Ok(branch_series(sign * p));
    }

    let guess = initial_guess(x, p, sign, branch);
    if let Some(w) = halley(x, guess, branch) {
        return Ok(w);
    }
    Ok(bisect(x, branch))
}

fn branch_series(p: f64) -> f64 {
    // Coefficients of W around -1/e in powers of p.
    const C: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    C.iter().rev().fold(0.0, |acc, c| acc * p + c)
}

fn initial_guess(x: f64, p: f64, sign: f64, branch: LambertBranch) -> f64 {
    match branch {
        LambertBranch::Principal if x < -0.25 => branch_series(sign * p),
        LambertBranch::Principal if x < 3.0 => {
            let l = x.ln_1p();
            l * (1.0 - l / (2.0 + l)).max(0.5)
        }
        LambertBranch::Principal => {
            let l1 = x.ln();
            let l2 = l1.ln();
            l1 - l2 + l2 / l1
        }
        LambertBranch::NegativeOne if x < -0.25 => branch_series(sign * p),
        LambertBranch::NegativeOne => {
            let l1 = (-x).ln();
            let l2 = (-l1).ln();
            l1 - l2 + l2 / l1
        }
    }
}

fn residual_ok(w: f64, x: f64) -> bool {
    (w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0)
}

fn on_branch(w: f64, branch: LambertBranch) -> bool {
    match branch {
        LambertBranch::Principal => w >= -1.0,
        LambertBranch::NegativeOne => w <= -1.0,
    }
}

fn halley(x: f64, mut w: f64, branch: LambertBranch) -> Option<f64> {
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if !w.is_finite() {
            return None;
        }
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    (residual_ok(w, x) && on_branch(w, branch)).then_some(w)
}

fn bisect(x: f64, branch: LambertBranch) -> f64 {
    // w e^w is increasing on [-1, inf) and decreasing on (-inf, -1].
    let g = |w: f64| w * w.exp() - x;
    let (mut lo, mut hi) = match branch {
        LambertBranch::Principal => {
            let mut hi = 1.0f64.max(x.ln_1p());
            while g(hi) < 0.0 {
                hi *= 2.0;
            }
            (-1.0, hi)
        }
        LambertBranch::NegativeOne => {
            let mut lo = -2.0f64;
            while g(lo) < 0.0 {
                lo *= 2.0;
            }
            (lo, -1.0)
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let below = g(mid) < 0.0;
        match (branch, below) {
            (LambertBranch::Principal, true) | (LambertBranch::NegativeOne, false) => lo = mid,
            _ => hi = mid,
        }
    }
    0.5 * (lo + hi)
}
