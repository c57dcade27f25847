//! Quadrature in the logarithmic variable `u = ln(e/t)`.
//!
//! Every integral over `(0,1)` in this crate is carried out in `u`, which maps
//! `(0,1]` onto `[1, ∞)` and turns the measure `dt/t` into `du`. Geometric grids
//! become uniform in `u`, and the singular endpoint `t = 0` becomes a tail at
//! `u = ∞` that can be integrated on geometrically growing panels.

const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Largest `u` visited by tail integration before giving up on convergence.
pub const TAIL_U_MAX: f64 = 1.0e12;

/// `u = ln(e/t)`.
#[inline]
pub fn u_of(t: f64) -> f64 {
    1.0 - t.ln()
}

/// `t = e^{1-u}`.
#[inline]
pub fn t_of(u: f64) -> f64 {
    (1.0 - u).exp()
}

/// 8-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..4 {
        let dx = h * GL_X[k];
        acc += GL_W[k] * (f(c - dx) + f(c + dx));
    }
    acc * h
}

/// Composite Gauss–Legendre on `[a, b]` with panels no wider than `max_width`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, max_width: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            gauss8(&f, lo, hi)
        })
        .sum()
}

/// `∫_{u0}^{∞} f(u) du` on panels of width at most `max(scale, u/4)`.
///
/// Returns `None` when the integral has not settled by [`TAIL_U_MAX`], which
/// is how callers detect divergence at `t = 0`.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: F, u0: f64, scale: f64) -> Option<f64> {
    let mut total = 0.0;
    let mut lo = u0;
    let mut width = 0.125_f64.min(scale);
    let mut quiet = 0;
    let mut prev = f64::NAN;
    let mut piece = 0.0;
    while lo < TAIL_U_MAX {
        let hi = lo + width;
        prev = piece;
        piece = gauss8(&f, lo, hi);
        if !piece.is_finite() {
            return None;
        }
        total += piece;
        if piece.abs() <= 1e-17 * total.abs() || (total == 0.0 && piece == 0.0 && lo > u0 + 64.0) {
            quiet += 1;
            if quiet >= 3 {
                return Some(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width = (2.0 * width).min(scale.max(0.25 * lo));
    }
    // power-law tails: panels now grow geometrically, so successive pieces of
    // a convergent integral shrink by a fixed ratio
    let ratio = piece / prev;
    if ratio.is_finite() && ratio > 0.0 && ratio < 0.99 {
        Some(total + piece * ratio / (1.0 - ratio))
    } else {
        None
    }
}

/// `∫_{t0}^{t1} t^a (ln(e/t))^b dt/t` for `0 ≤ t0 < t1 ≤ 1`.
///
/// `None` means the integral diverges at `t = 0` (only possible for `t0 = 0`).
pub fn powerlog(a: f64, b: f64, t0: f64, t1: f64) -> Option<f64> {
    if t1 <= t0 {
        return Some(0.0);
    }
    let u1 = u_of(t1);
    if t0 == 0.0 {
        if a > 0.0 && b == 0.0 {
            return Some(t1.powf(a) / a);
        }
        if a > 0.0 {
            let f = |u: f64| (a * (1.0 - u) + b * u.ln()).exp();
            return integrate_tail(f, u1, 2.0 / a);
        }
        if a == 0.0 && b < -1.0 {
            return Some(u1.powf(b + 1.0) / (-b - 1.0));
        }
        return None;
    }
    if b == 0.0 {
        // closed form, written to avoid cancellation on narrow cells
        let lr = (t1 / t0).ln();
        return Some(if a == 0.0 {
            lr
        } else {
            t0.powf(a) * (a * lr).exp_m1() / a
        });
    }
    let u0 = u_of(t0);
    if a == 0.0 {
        return Some(if (b + 1.0).abs() < 1e-15 {
            (u0 / u1).ln()
        } else {
            (u0.powf(b + 1.0) - u1.powf(b + 1.0)) / (b + 1.0)
        });
    }
    let f = |u: f64| (a * (1.0 - u) + b * u.ln()).exp();
    Some(integrate(f, u1, u0, 0.5_f64.min(1.0 / a.abs())))
}
