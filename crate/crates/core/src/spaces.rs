//! Catalog of rearrangement-invariant spaces: norms, fundamental functions,
//! associates, convexifications, Boyd indices and estimate orders.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RioError};
use crate::grid::{rearrange, Grid, GridFunction};
use crate::quad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpaceKind {
    Lp { p: f64 },
    Lorentz { p: f64, q: f64 },
    Zygmund { p: f64, a: f64 },
    ExpL { beta: f64 },
    /// Exact associate (Köthe dual) of the inner space.
    Assoc(Box<Space>),
}

/// A catalog space `X` together with a convexification power `s`, standing
/// for `X^{(s)}` with `‖f‖ = ‖|f|^s‖_X^{1/s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Space {
    pub kind: SpaceKind,
    pub convexify: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexPair {
    pub lower: f64,
    pub upper: f64,
}

/// Largest catalogued `α` with a lower `α`-estimate and smallest `ρ` with an
/// upper `ρ`-estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOrders {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

fn conj(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn bad(msg: String) -> RioError {
    RioError::InvalidParameter(msg)
}

impl Space {
    pub fn new(kind: SpaceKind) -> Result<Self> {
        let s = Space { kind, convexify: 1.0 };
        s.validate()?;
        Ok(s)
    }
    pub fn lp(p: f64) -> Result<Self> {
        Self::new(SpaceKind::Lp { p })
    }
    pub fn lorentz(p: f64, q: f64) -> Result<Self> {
        Self::new(SpaceKind::Lorentz { p, q })
    }
    pub fn zygmund(p: f64, a: f64) -> Result<Self> {
        Self::new(SpaceKind::Zygmund { p, a })
    }
    pub fn exp_l(beta: f64) -> Result<Self> {
        Self::new(SpaceKind::ExpL { beta })
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(bad(format!("{name} must be a positive finite number, got {v}")))
            }
        };
        pos("convexification power", self.convexify)?;
        match &self.kind {
            SpaceKind::Lp { p } => pos("p", *p),
            SpaceKind::Lorentz { p, q } => pos("p", *p).and(pos("q", *q)),
            SpaceKind::Zygmund { p, a } => {
                pos("p", *p)?;
                if a.is_finite() {
                    Ok(())
                } else {
                    Err(bad(format!("a must be finite, got {a}")))
                }
            }
            SpaceKind::ExpL { beta } => pos("beta", *beta),
            SpaceKind::Assoc(inner) => inner.validate(),
        }
    }

    /// `X^{(s)}`; powers compose multiplicatively.
    pub fn convexified(&self, s: f64) -> Result<Space> {
        let out = Space { kind: self.kind.clone(), convexify: self.convexify * s };
        out.validate()?;
        Ok(out)
    }

    /// Folds the convexification power into the parameters where the catalog
    /// is closed under it.
    pub fn canonical(&self) -> Space {
        let s = self.convexify;
        if s == 1.0 {
            return self.clone();
        }
        let kind = match self.kind {
            SpaceKind::Lp { p } => SpaceKind::Lp { p: p * s },
            SpaceKind::Lorentz { p, q } => SpaceKind::Lorentz { p: p * s, q: q * s },
            SpaceKind::Zygmund { p, a } => SpaceKind::Zygmund { p: p * s, a: a / s },
            SpaceKind::ExpL { beta } => SpaceKind::ExpL { beta: beta * s },
            SpaceKind::Assoc(_) => return self.clone(),
        };
        Space { kind, convexify: 1.0 }
    }

    /// `(q, c, d)` with `‖f‖^q = ∫ (f*)^q t^c (ln e/t)^d dt/t`, for the
    /// power-weighted members of the catalog.
    pub(crate) fn lambda_params(&self) -> Option<(f64, f64, f64)> {
        if self.convexify != 1.0 {
            return None;
        }
        match self.kind {
            SpaceKind::Lp { p } => Some((p, 1.0, 0.0)),
            SpaceKind::Lorentz { p, q } => Some((q, q / p, 0.0)),
            SpaceKind::Zygmund { p, a } => Some((p, 1.0, a * p)),
            _ => None,
        }
    }

    /// Whether the defining `f*` functional is itself a norm, so that `φ_X φ_{X'} = t`.
    /// Otherwise `φ_X φ_{X'} ≥ t` with strict inequality.
    pub fn functional_is_norm(&self) -> bool {
        self.is_banach() && !matches!(self.canonical().lambda_params(), Some((_, c, d)) if rising_density(c, d))
    }

    pub fn is_banach(&self) -> bool {
        let c = self.canonical();
        if c.convexify != 1.0 {
            return true;
        }
        match c.kind {
            SpaceKind::Lp { p } => p >= 1.0,
            SpaceKind::Lorentz { p, q } => (p > 1.0 && q >= 1.0) || (p == 1.0 && q == 1.0),
            SpaceKind::Zygmund { p, a } => p > 1.0 || (p == 1.0 && a >= 0.0),
            SpaceKind::ExpL { beta } => beta >= 1.0,
            SpaceKind::Assoc(_) => true,
        }
    }

    /// The associate space `X'`, represented exactly so that
    /// `φ_X(t)·φ_{X'}(t) = t` and Hölder's inequality holds with constant 1.
    pub fn associate(&self) -> Result<Space> {
        let c = self.canonical();
        let unsupported = || RioError::UnsupportedAssociate(self.to_string());
        if c.convexify != 1.0 {
            return Err(unsupported());
        }
        let wrap = |s: Space| Space { kind: SpaceKind::Assoc(Box::new(s)), convexify: 1.0 };
        match c.kind {
            SpaceKind::Lp { p } if p > 1.0 => Space::lp(conj(p)),
            SpaceKind::Lorentz { p, q } if p > 1.0 && p == q => Space::lp(conj(p)),
            SpaceKind::Zygmund { p, a } if p > 1.0 && a == 0.0 => Space::lp(conj(p)),
            SpaceKind::Assoc(inner) => Ok(*inner),
            _ if c.is_banach() => {
                if let SpaceKind::Lorentz { q, .. } = c.kind {
                    if q < 1.0 {
                        return Err(unsupported());
                    }
                }
                Ok(wrap(c))
            }
            _ => Err(unsupported()),
        }
    }

    /// Boyd indices `(α̲_X, ᾱ_X)`.
    pub fn boyd_indices(&self) -> IndexPair {
        let c = self.canonical();
        let base = match &c.kind {
            SpaceKind::Lp { p } | SpaceKind::Lorentz { p, .. } | SpaceKind::Zygmund { p, .. } => {
                IndexPair { lower: 1.0 / p, upper: 1.0 / p }
            }
            SpaceKind::ExpL { .. } => IndexPair { lower: 0.0, upper: 0.0 },
            SpaceKind::Assoc(inner) => {
                let b = inner.boyd_indices();
                IndexPair { lower: 1.0 - b.upper, upper: 1.0 - b.lower }
            }
        };
        IndexPair { lower: base.lower / c.convexify, upper: base.upper / c.convexify }
    }

    pub fn estimate_orders(&self) -> EstimateOrders {
        let c = self.canonical();
        let base = match &c.kind {
            SpaceKind::Lp { p } | SpaceKind::Zygmund { p, .. } => EstimateOrders { lower: Some(*p), upper: Some(*p) },
            SpaceKind::Lorentz { p, q } => EstimateOrders { lower: Some(p.max(*q)), upper: Some(p.min(*q)) },
            SpaceKind::ExpL { .. } => EstimateOrders { lower: None, upper: None },
            SpaceKind::Assoc(inner) => {
                let b = inner.estimate_orders();
                let dual = |x: Option<f64>| x.filter(|&v| v > 1.0).map(conj);
                EstimateOrders { lower: dual(b.upper), upper: dual(b.lower) }
            }
        };
        let s = c.convexify;
        EstimateOrders { lower: base.lower.map(|v| v * s), upper: base.upper.map(|v| v * s) }
    }

    /// `ln φ_X(t)` at `t = e^{1-u}`; usable far below the smallest double.
    pub fn ln_fundamental_u(&self, u: f64) -> f64 {
        let c = self.canonical();
        let base = match &c.kind {
            SpaceKind::Lp { p } => (1.0 - u) / p,
            SpaceKind::Lorentz { p, q } => (p / q).ln() / q + (1.0 - u) / p,
            SpaceKind::Zygmund { p, a } => {
                let m = a * p;
                let j = if m == 0.0 {
                    1.0
                } else {
                    quad::integrate_tail(|w| (-w + m * (w / u).ln_1p()).exp(), 0.0, 2.0).unwrap_or(f64::INFINITY)
                };
                ((1.0 - u) + m * u.ln() + j.ln()) / p
            }
            SpaceKind::ExpL { beta } => {
                let x = u - 1.0;
                let l = if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
                -l.ln() / beta
            }
            SpaceKind::Assoc(inner) => match inner.canonical().lambda_params() {
                Some((q, cc, d)) if rising_density(cc, d) => {
                    if q == 1.0 {
                        f64::INFINITY
                    } else {
                        let qq = conj(q);
                        let t = quad::t_of(u);
                        quad::powerlog(1.0 + (cc - 1.0) * (1.0 - qq), d * (1.0 - qq), 0.0, t)
                            .map_or(f64::INFINITY, |v| v.ln() / qq)
                    }
                }
                _ => (1.0 - u) - inner.ln_fundamental_u(u),
            },
        };
        base / c.convexify
    }

    /// `φ_X(t) = ‖χ_{(0,t)}‖_X`.
    pub fn fundamental(&self, t: f64) -> f64 {
        self.ln_fundamental_u(quad::u_of(t)).exp()
    }

    /// Constant `c` with `‖f‖_X ≥ c‖f‖_{L¹}`.
    pub fn l1_floor_constant(&self) -> f64 {
        // Hölder in L^q(dt/t) against the weight t^{1-c/q} (ln e/t)^{-d/q}
        match self.canonical().lambda_params() {
            Some((q, c, d)) if q > 1.0 => {
                let qc = conj(q);
                quad::powerlog((1.0 - c / q) * qc, -d * qc / q, 0.0, 1.0)
                    .map_or(0.0, |v| v.powf(-1.0 / qc))
            }
            _ if self.is_banach() => self.fundamental(1.0),
            _ => 0.0,
        }
    }

    /// Exponent `k` for which `‖·‖^k` is additive over disjoint level sets;
    /// used to compare truncation depths.
    pub fn additive_power(&self) -> f64 {
        let c = self.canonical();
        let s = c.convexify;
        let base = match &c.kind {
            SpaceKind::Assoc(inner) => match inner.canonical().lambda_params() {
                Some((q, _, _)) if q > 1.0 => conj(q),
                _ => 1.0,
            },
            _ => c.lambda_params().map_or(1.0, |p| p.0),
        };
        base * s
    }

    /// `‖f‖_X` of a grid function.
    pub fn norm(&self, f: &GridFunction) -> f64 {
        norm_pieces(self, &decreasing_pieces(&rearrange(f)))
    }
}

/// `(value, start, end)` pieces of a nonincreasing grid function.
pub fn decreasing_pieces(fstar: &GridFunction) -> Vec<(f64, f64, f64)> {
    match fstar.profile() {
        Some(p) => p.pieces().collect(),
        None => {
            let g = fstar.grid();
            (0..g.n()).map(|i| (fstar.values()[i], g.cell_bounds(i).0, g.node(i))).collect()
        }
    }
}

pub fn norm(x: &Space, f: &GridFunction) -> f64 {
    x.norm(f)
}

/// Norm of the nonincreasing step function with the given pieces.
pub fn norm_pieces(x: &Space, pieces: &[(f64, f64, f64)]) -> f64 {
    let vmax = pieces.iter().map(|p| p.0).fold(0.0, f64::max);
    if vmax == 0.0 {
        return 0.0;
    }
    let c = x.canonical();
    if c.convexify != 1.0 {
        let s = c.convexify;
        let base = Space { kind: c.kind.clone(), convexify: 1.0 };
        let powered: Vec<_> = pieces.iter().map(|&(v, a, b)| (v.powf(s), a, b)).collect();
        return norm_pieces(&base, &powered).powf(1.0 / s);
    }
    let scaled: Vec<(f64, f64, f64)> = pieces.iter().map(|&(v, a, b)| (v / vmax, a, b)).collect();
    let unit = if let Some((q, cc, d)) = c.lambda_params() {
        lambda_functional(&scaled, q, cc, d).powf(1.0 / q)
    } else {
        match &c.kind {
            SpaceKind::ExpL { beta } => luxemburg_exp(&scaled, *beta),
            SpaceKind::Assoc(inner) => {
                let inner = inner.canonical();
                match (&inner.kind, inner.lambda_params()) {
                    (_, Some((q, cc, d))) => level_dual(&scaled, q, cc, d),
                    (SpaceKind::ExpL { beta }, None) => amemiya_exp_dual(&scaled, *beta),
                    _ => f64::NAN,
                }
            }
            _ => unreachable!(),
        }
    };
    vmax * unit
}

fn lambda_functional(pieces: &[(f64, f64, f64)], q: f64, c: f64, d: f64) -> f64 {
    pieces
        .iter()
        .filter(|p| p.0 > 0.0)
        .map(|&(v, a, b)| v.powf(q) * quad::powerlog(c, d, a, b).unwrap_or(f64::INFINITY))
        .sum()
}

fn luxemburg_exp(pieces: &[(f64, f64, f64)], beta: f64) -> f64 {
    let f = |mu: f64| -> f64 {
        pieces
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|&(v, a, b)| (b - a) * (v / mu).powf(beta).exp_m1())
            .sum()
    };
    let mut hi = 2f64.ln().powf(-1.0 / beta);
    let mut lo = hi;
    while f(lo) < 1.0 {
        hi = lo;
        lo *= 0.5;
    }
    for _ in 0..200 {
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if f(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `t^{c-1} (ln e/t)^d` strictly increasing on (0,1); the `f*` functional is then not a norm.
pub(crate) fn rising_density(c: f64, d: f64) -> bool {
    c >= 1.0 && c - 1.0 >= d && (c > 1.0 || d < 0.0)
}

/// Associate norm of `Λ^q` with weight `t^c (ln e/t)^d dt/t`, via the least
/// concave majorant of the cumulative mass against the cumulative weight.
fn level_dual(pieces: &[(f64, f64, f64)], q: f64, c: f64, d: f64) -> f64 {
    // g*/w decreases, so the majorant is G itself
    if rising_density(c, d) {
        let live = pieces.iter().filter(|p| p.0 > 0.0);
        if q == 1.0 {
            let dens = |t: f64| t.powf(c - 1.0) * (1.0 - t.ln()).powf(d);
            return live.map(|&(v, a, _)| v / dens(a)).fold(0.0, f64::max);
        }
        let qq = conj(q);
        return live
            .map(|&(v, a, b)| {
                v.powf(qq) * quad::powerlog(1.0 + (c - 1.0) * (1.0 - qq), d * (1.0 - qq), a, b).unwrap_or(f64::INFINITY)
            })
            .sum::<f64>()
            .powf(1.0 / qq);
    }
    let mut hull: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let (mut w, mut g) = (0.0, 0.0);
    for &(v, a, b) in pieces {
        w += quad::powerlog(c, d, a, b).unwrap_or(f64::INFINITY);
        g += v * (b - a);
        let pt = (w, g);
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            if (y2 - y1) * (pt.0 - x2) <= (pt.1 - y2) * (x2 - x1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let segs = hull.windows(2).map(|s| (s[1].0 - s[0].0, s[1].1 - s[0].1));
    if q == 1.0 {
        return segs.map(|(dw, dg)| dg / dw).fold(0.0, f64::max);
    }
    let qq = conj(q);
    segs.map(|(dw, dg)| dg.powf(qq) / dw.powf(qq - 1.0)).sum::<f64>().powf(1.0 / qq)
}

/// `Ψ(y) = sup_x (xy − (e^{x^β} − 1))`.
pub fn exp_young_conjugate(beta: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if beta == 1.0 {
        return if y <= 1.0 { 0.0 } else { y * y.ln() - y + 1.0 };
    }
    // maximiser x = e^z solves ln β + (β−1)z + e^{βz} = ln y
    let ly = y.ln();
    let g = |z: f64| beta.ln() + (beta - 1.0) * z + (beta * z).exp() - ly;
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo) > 0.0 {
        lo *= 2.0;
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gz = g(z);
        if gz > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let step = gz / ((beta - 1.0) + beta * (beta * z).exp());
        let mut next = z - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-15 * (1.0 + z.abs()) {
            z = next;
            break;
        }
        z = next;
    }
    let x = z.exp();
    (x * y - (x.powf(beta)).exp_m1()).max(0.0)
}

fn amemiya_exp_dual(pieces: &[(f64, f64, f64)], beta: f64) -> f64 {
    let h = |lk: f64| -> f64 {
        let k = lk.exp();
        let s: f64 = pieces
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|&(v, a, b)| (b - a) * exp_young_conjugate(beta, k * v))
            .sum();
        (1.0 + s) / k
    };
    let mut mid = 0.0;
    while h(mid + 1.0) < h(mid) {
        mid += 1.0;
    }
    while h(mid - 1.0) < h(mid) {
        mid -= 1.0;
    }
    let (mut a, mut b) = (mid - 1.0, mid + 1.0);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut h1, mut h2) = (h(x1), h(x2));
    while b - a > 1e-10 {
        if h1 <= h2 {
            b = x2;
            x2 = x1;
            h2 = h1;
            x1 = b - r * (b - a);
            h1 = h(x1);
        } else {
            a = x1;
            x1 = x2;
            h1 = h2;
            x2 = a + r * (b - a);
            h2 = h(x2);
        }
    }
    h1.min(h2)
}

/// `∫ f g` for two functions on the same grid.
pub fn pairing(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if !f.grid().same_as(g.grid()) {
        return Err(RioError::GridMismatch);
    }
    Ok(f.values().iter().zip(g.values()).zip(f.grid().cell_lens()).map(|((a, b), l)| a * b * l).sum())
}

/// `‖f‖_{Λ^p(X)} = (∫ (f* φ_X)^p dt/t)^{1/p}`; `+∞` when the integral diverges.
pub fn lambda_p_norm(x: &Space, p: f64, f: &GridFunction) -> Result<f64> {
    if p <= 0.0 {
        return Err(bad(format!("p must be positive, got {p}")));
    }
    let pieces = decreasing_pieces(&rearrange(f));
    let vmax = pieces.iter().map(|q| q.0).fold(0.0, f64::max);
    if vmax == 0.0 {
        return Ok(0.0);
    }
    let w = |u: f64| (p * x.ln_fundamental_u(u)).exp();
    let mut s = 0.0;
    for &(v, a, b) in pieces.iter().filter(|q| q.0 > 0.0) {
        let ub = quad::u_of(b);
        let piece = if a == 0.0 {
            quad::integrate_tail(w, ub, 2.0)
        } else {
            Some(quad::integrate(w, ub, quad::u_of(a), 0.5))
        };
        match piece {
            Some(val) => s += (v / vmax).powf(p) * val,
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(vmax * s.powf(1.0 / p))
}

/// Lower estimate of `‖E_s‖_{X→X}`, `E_s f(t) = f(t/s)`, over indicators
/// and truncated powers.
pub fn dilation_function_estimate(x: &Space, s: f64, grid: &Grid) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(bad(format!("dilation factor must be positive, got {s}")));
    }
    let dilate = |pieces: &[(f64, f64, f64)]| -> Vec<(f64, f64, f64)> {
        pieces
            .iter()
            .filter(|p| p.1 * s < 1.0)
            .map(|&(v, a, b)| (v, a * s, (b * s).min(1.0)))
            .collect()
    };
    let mut candidates: Vec<Vec<(f64, f64, f64)>> = (0..=30).map(|k| vec![(1.0, 0.0, 2f64.powi(-k))]).collect();
    for theta in [0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9] {
        let cells = (0..grid.n())
            .map(|i| {
                let (a, b) = grid.cell_bounds(i);
                let mass = quad::powerlog(1.0 - theta, 0.0, a, b).unwrap_or(0.0);
                (mass / (b - a), a, b)
            })
            .collect();
        candidates.push(cells);
    }
    let mut best = 0.0_f64;
    for c in &candidates {
        let n0 = norm_pieces(x, c);
        if n0 > 0.0 && n0.is_finite() {
            best = best.max(norm_pieces(x, &dilate(c)) / n0);
        }
    }
    Ok(best)
}

/// Grids `t_min = τ, τ², τ⁴` with the log step of `grid`.
pub fn depth_ladder(grid: &Grid) -> Result<[Arc<Grid>; 3]> {
    Ok([Arc::new(grid.clone()), Arc::new(grid.deepened(2)?), Arc::new(grid.deepened(4)?)])
}

/// `true` when three values of an additive functional at depths `τ, τ², τ⁴`
/// keep growing at a non-decaying rate.
pub fn diverges_with_depth(s: [f64; 3]) -> bool {
    if s.iter().any(|v| !v.is_finite()) {
        return true;
    }
    let (d1, d2) = (s[1] - s[0], s[2] - s[1]);
    d2 > 1e-9 * s[2].abs().max(f64::MIN_POSITIVE) && d2 >= 0.8 * d1
}

/// `‖f‖_X` for a function given by a sampling rule, or `+∞` when the value
/// keeps growing as the grid reaches deeper towards `0`.
pub fn norm_of_recipe<F>(x: &Space, grid: &Grid, make: F) -> Result<f64>
where
    F: Fn(&Arc<Grid>) -> Result<GridFunction>,
{
    let k = x.additive_power();
    let ladder = depth_ladder(grid)?;
    let mut s = [0.0; 3];
    for (slot, g) in s.iter_mut().zip(ladder.iter()) {
        *slot = x.norm(&make(g)?).powf(k);
    }
    Ok(if diverges_with_depth(s) { f64::INFINITY } else { s[2].powf(1.0 / k) })
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SpaceKind::Lp { p } => write!(f, "Lp:{p}")?,
            SpaceKind::Lorentz { p, q } => write!(f, "Lorentz:{p},{q}")?,
            SpaceKind::Zygmund { p, a } => write!(f, "Zygmund:{p},{a}")?,
            SpaceKind::ExpL { beta } => write!(f, "ExpL:{beta}")?,
            SpaceKind::Assoc(inner) => write!(f, "Assoc({inner})")?,
        }
        if self.convexify != 1.0 {
            write!(f, "^({})", self.convexify)?;
        }
        Ok(())
    }
}

impl FromStr for Space {
    type Err = RioError;

    fn from_str(s: &str) -> Result<Self> {
        let perr = |m: &str| RioError::Parse(format!("{m}: `{s}`"));
        let s = s.trim();
        let (body, power) = match s.strip_suffix(')').and_then(|x| x.rsplit_once("^(")) {
            Some((b, pw)) => (b, pw.trim().parse::<f64>().map_err(|_| perr("bad convexification power"))?),
            None => (s, 1.0),
        };
        let base = if let Some(inner) = body.strip_prefix("Assoc(").and_then(|x| x.strip_suffix(')')) {
            let inner: Space = inner.parse()?;
            Space { kind: SpaceKind::Assoc(Box::new(inner)), convexify: 1.0 }
        } else {
            let (name, args) = body.split_once(':').ok_or_else(|| perr("expected `Name:params`"))?;
            let nums = args
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| perr("bad number"))?;
            let kind = match (name.trim(), nums.as_slice()) {
                ("Lp", [p]) => SpaceKind::Lp { p: *p },
                ("Lorentz", [p, q]) => SpaceKind::Lorentz { p: *p, q: *q },
                ("Zygmund", [p, a]) => SpaceKind::Zygmund { p: *p, a: *a },
                ("ExpL", [b]) => SpaceKind::ExpL { beta: *b },
                _ => return Err(perr("unknown space or wrong number of parameters")),
            };
            Space { kind, convexify: 1.0 }
        };
        let out = Space { convexify: base.convexify * power, ..base };
        out.validate().map_err(|e| RioError::Parse(e.to_string()))?;
        Ok(out)
    }
}
