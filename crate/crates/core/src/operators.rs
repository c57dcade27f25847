//! Hardy-type operators `P_r`, `Q̄_{ψ,r}`, `T̄_{ψ,r}`, their oscillation
//! identity, kernel norms and the optimal-range functional.

use std::sync::Arc;

use crate::error::{Result, RioError};
use crate::grid::{cell_means_of, rearrange, Complement, Grid, GridFunction};
use crate::quad;
use crate::spaces::{norm_of_recipe, Space, SpaceKind};
use crate::weights::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    P,
    Qbar,
    Tbar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub weight: Weight,
    pub r: f64,
}

pub(crate) fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(RioError::InvalidParameter(format!("r must lie in (0,1], got {r}")))
    }
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, weight: Weight, r: f64) -> Result<Self> {
        check_r(r)?;
        Ok(OperatorSpec { kind, weight, r })
    }
    pub fn qbar(weight: Weight, r: f64) -> Result<Self> {
        Self::new(OperatorKind::Qbar, weight, r)
    }
    pub fn tbar(weight: Weight, r: f64) -> Result<Self> {
        Self::new(OperatorKind::Tbar, weight, r)
    }
}

/// Prefix masses `F_i = ∫_0^{t_i} g` of a piecewise-constant function.
pub(crate) fn prefix_mass(g: &GridFunction) -> Vec<f64> {
    let grid = g.grid();
    let mut acc = 0.0;
    g.values()
        .iter()
        .zip(grid.cell_lens())
        .map(|(v, l)| {
            acc += v * l;
            acc
        })
        .collect()
}

/// `(1/t)∫_0^t g` for `t` inside cell `i`.
pub(crate) fn average_in_cell(g: &GridFunction, mass: &[f64], i: usize, t: f64) -> f64 {
    if i == 0 {
        g.values()[0]
    } else {
        let lo = g.grid().node(i - 1);
        (mass[i - 1] + g.values()[i] * (t - lo)) / t
    }
}

/// `P_r f(t) = ((1/t)∫_0^t |f|^r)^{1/r}`.
pub fn apply_p(r: f64, f: &GridFunction) -> Result<GridFunction> {
    check_r(r)?;
    let g = f.powf(r);
    let grid = f.grid().clone();
    let mass = prefix_mass(&g);
    let nodes: Vec<f64> = (0..grid.n()).map(|i| (mass[i] / grid.node(i)).powf(1.0 / r)).collect();
    let means = if r == 1.0 {
        let h = grid.log_step();
        (0..grid.n())
            .map(|i| {
                if i == 0 {
                    g.values()[0]
                } else {
                    let c = (mass[i - 1] - g.values()[i] * grid.node(i - 1)).max(0.0);
                    (c * h + g.values()[i] * grid.cell_len(i)) / grid.cell_len(i)
                }
            })
            .collect()
    } else {
        cell_means_of(&grid, |i, t| average_in_cell(&g, &mass, i, t).powf(1.0 / r))?
    };
    GridFunction::with_nodes(grid, means, nodes)
}

fn cell_integral(grid: &Grid, i: usize, f: impl Fn(f64) -> f64) -> f64 {
    let lo = grid.node_u(i);
    quad::integrate(f, lo, lo + grid.log_step(), 0.05_f64.min(grid.log_step()))
}

/// `T̄h(t) = ∫_t^1 ψ(s)^r h(s) ds/s`, exact per cell.
pub fn apply_tbar(spec: &OperatorSpec, h: &GridFunction) -> Result<GridFunction> {
    check_r(spec.r)?;
    let wr = spec.weight.powf(spec.r);
    let (a, b) = (wr.gamma, wr.delta);
    let grid = h.grid().clone();
    let n = grid.n();
    let hv = h.values();
    let mut w = vec![0.0; n];
    for (i, wi) in w.iter_mut().enumerate() {
        let (lo, hi) = grid.cell_bounds(i);
        *wi = match quad::powerlog(a, b, lo, hi) {
            Some(v) => v,
            None if hv[i] == 0.0 => 0.0,
            None => return Err(RioError::Divergent(format!("T̄h is infinite near 0 for ψ^r = {wr}"))),
        };
    }
    let mut gaps = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += hv[i] * w[i];
        gaps[i] = acc;
    }
    let top = acc;
    let mut nodes = vec![0.0; n];
    let mut suffix = 0.0;
    for i in (0..n).rev() {
        nodes[i] = suffix;
        suffix += hv[i] * w[i];
    }
    let mut means = vec![0.0; n];
    let mut mean_gaps = vec![0.0; n];
    for i in 0..n {
        if hv[i] == 0.0 {
            means[i] = nodes[i];
            mean_gaps[i] = if i == 0 { 0.0 } else { gaps[i - 1] };
            continue;
        }
        let len = grid.cell_len(i);
        // ∫_cell ψ^r(σ)(σ − t_{i-1}) dσ/σ and ∫_cell ψ^r(σ)(t_i − σ) dσ/σ
        let (above, below) = if i == 0 {
            let above = quad::powerlog(a + 1.0, b, 0.0, grid.node(0)).unwrap_or(0.0);
            (above, grid.node(0) * w[0] - above)
        } else {
            let (lo, hi) = (grid.node(i - 1), grid.node(i));
            let (ulo, uhi) = (grid.node_u(i), grid.node_u(i - 1));
            let above = cell_integral(&grid, i, |u| (wr.ln_psi_u(u)).exp() * lo * (uhi - u).exp_m1());
            let below = cell_integral(&grid, i, |u| (wr.ln_psi_u(u)).exp() * hi * -(ulo - u).exp_m1());
            (above, below)
        };
        means[i] = nodes[i] + hv[i] * above / len;
        mean_gaps[i] = if i == 0 { 0.0 } else { gaps[i - 1] } + hv[i] * below / len;
    }
    GridFunction::with_nodes(grid, means, nodes)?.with_complement(Complement {
        top,
        power: 1.0,
        node_gaps: gaps,
        mean_gaps,
    })
}

/// `Q̄f = (T̄(|f|^r))^{1/r}`.
pub fn apply_qbar(spec: &OperatorSpec, f: &GridFunction) -> Result<GridFunction> {
    Ok(apply_tbar(spec, &f.powf(spec.r))?.powf(1.0 / spec.r))
}

/// `(1/t)∫_0^t (ψ|f|)^r` at the nodes, which equals `O((Q̄f)^r, t)`.
pub fn oscillation_of_qbar(spec: &OperatorSpec, f: &GridFunction) -> Result<GridFunction> {
    check_r(spec.r)?;
    let wr = spec.weight.powf(spec.r);
    let g = f.powf(spec.r);
    let grid = f.grid().clone();
    let mut acc = 0.0;
    let mut nodes = Vec::with_capacity(grid.n());
    for i in 0..grid.n() {
        let (lo, hi) = grid.cell_bounds(i);
        if g.values()[i] > 0.0 {
            acc += g.values()[i] * quad::powerlog(wr.gamma + 1.0, wr.delta, lo, hi).unwrap_or(f64::INFINITY);
        }
        nodes.push(acc / hi);
    }
    GridFunction::with_nodes(grid, nodes.clone(), nodes)
}

/// `f/ψ` with exact cell means for piecewise-constant `f`.
pub fn divide_by_weight(f: &GridFunction, w: &Weight) -> Result<GridFunction> {
    let grid = f.grid().clone();
    let mut means = Vec::with_capacity(grid.n());
    for i in 0..grid.n() {
        let v = f.values()[i];
        if v == 0.0 {
            means.push(0.0);
            continue;
        }
        let (lo, hi) = grid.cell_bounds(i);
        let m = quad::powerlog(1.0 - w.gamma, -w.delta, lo, hi)
            .ok_or_else(|| RioError::Divergent(format!("1/ψ is not integrable near 0 for {w}")))?;
        means.push(v * m / grid.cell_len(i));
    }
    let nodes = (0..grid.n()).map(|i| f.at_node(i) / w.psi(grid.node(i))).collect();
    GridFunction::with_nodes(grid, means, nodes)
}

/// The associate of `X^{(1/r)}`.
pub fn kernel_space(x: &Space, r: f64) -> Result<Space> {
    check_r(r)?;
    x.convexified(1.0 / r)?.canonical().associate()
}

fn kernel_function(w: &Weight, r: f64, at: f64, grid: &Arc<Grid>) -> Result<Option<GridFunction>> {
    let wr = w.powf(r);
    let mut means = Vec::with_capacity(grid.n());
    for i in 0..grid.n() {
        let (lo, hi) = grid.cell_bounds(i);
        if hi <= at {
            means.push(0.0);
            continue;
        }
        match quad::powerlog(wr.gamma, wr.delta, lo.max(at), hi) {
            Some(m) => means.push(m / grid.cell_len(i)),
            None => return Ok(None),
        }
    }
    let nodes = grid
        .nodes()
        .iter()
        .map(|&t| if t > at { wr.psi(t) / t } else { 0.0 })
        .collect();
    Ok(Some(GridFunction::with_nodes(grid.clone(), means, nodes)?))
}

/// `‖ψ(s)^r/s · χ_{(x,1]}‖_{(X^{(1/r)})'}`; `+∞` when it diverges.
pub fn kernel_norm(x: &Space, w: &Weight, r: f64, at: f64, grid: &Grid) -> Result<f64> {
    if !(0.0..1.0).contains(&at) {
        return Err(RioError::InvalidParameter(format!("kernel cut must lie in [0,1), got {at}")));
    }
    let d = kernel_space(x, r)?;
    if let (SpaceKind::Lp { p: q }, 1.0) = (&d.kind, d.convexify) {
        let q = *q;
        let e = (r * w.gamma - 1.0) * q + 1.0;
        let e = if e.abs() < 1e-12 { 0.0 } else { e };
        return Ok(quad::powerlog(e, r * w.delta * q, at, 1.0).map_or(f64::INFINITY, |v| v.powf(1.0 / q)));
    }
    if at >= grid.t_min() {
        let g = Arc::new(grid.clone());
        return Ok(match kernel_function(w, r, at, &g)? {
            Some(k) => d.norm(&k),
            None => f64::INFINITY,
        });
    }
    let probe = kernel_function(w, r, at, &Arc::new(grid.clone()))?;
    if probe.is_none() {
        return Ok(f64::INFINITY);
    }
    norm_of_recipe(&d, grid, |g| {
        kernel_function(w, r, at, g)?.ok_or_else(|| RioError::Divergent("kernel".into()))
    })
}

/// `‖ψ^r g**‖_{(X^{(1/r)})'}`.
pub fn optimal_range_norm(x: &Space, w: &Weight, r: f64, g: &GridFunction) -> Result<f64> {
    let d = kernel_space(x, r)?;
    let gs = rearrange(g);
    let wr = w.powf(r);
    let grid = g.grid().clone();
    let mass = prefix_mass(&gs);
    let means = cell_means_of(&grid, |i, t| wr.psi(t) * average_in_cell(&gs, &mass, i, t))?;
    let nodes = (0..grid.n()).map(|i| wr.psi(grid.node(i)) * mass[i] / grid.node(i)).collect();
    Ok(d.norm(&GridFunction::with_nodes(grid, means, nodes)?))
}

/// Supremum of per-function ratios; zero or non-finite denominators are
/// excluded and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioAudit {
    pub sup: f64,
    pub worst: Option<usize>,
    pub ratios: Vec<Option<f64>>,
    pub excluded: usize,
}

impl RatioAudit {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut out = RatioAudit { sup: 0.0, worst: None, ratios: Vec::new(), excluded: 0 };
        for (k, (num, den)) in pairs.into_iter().enumerate() {
            if den > 0.0 && den.is_finite() && num.is_finite() {
                let q = num / den;
                if out.worst.is_none() || q > out.sup {
                    out.sup = q;
                    out.worst = Some(k);
                }
                out.ratios.push(Some(q));
            } else {
                out.excluded += 1;
                out.ratios.push(None);
            }
        }
        out
    }
}

/// `‖P_r f/ψ‖_Y / ‖f/ψ‖_Y` for each corpus member.
pub fn p_r_ratios(w: &Weight, y: &Space, r: f64, corpus: &[GridFunction]) -> Result<Vec<(f64, f64)>> {
    check_r(r)?;
    corpus
        .iter()
        .map(|f| {
            let den = y.norm(&divide_by_weight(f, w)?);
            let g = f.powf(r);
            let mass = prefix_mass(&g);
            let grid = f.grid().clone();
            let means = cell_means_of(&grid, |i, t| average_in_cell(&g, &mass, i, t).powf(1.0 / r) / w.psi(t))?;
            let nodes = (0..grid.n()).map(|i| (mass[i] / grid.node(i)).powf(1.0 / r) / w.psi(grid.node(i))).collect();
            let num = y.norm(&GridFunction::with_nodes(grid, means, nodes)?);
            Ok((num, den))
        })
        .collect()
}

/// Upper bound `(∫_0^1 m_{ψ^r}(s) ds/s)^{1/r}` for the `P_r` ratio.
pub fn p_r_bound(w: &Weight, r: f64) -> Result<f64> {
    Ok(w.powf(r).mpsi_integral()?.powf(1.0 / r))
}

pub fn p_r_constant_audit(w: &Weight, y: &Space, r: f64, corpus: &[GridFunction]) -> Result<RatioAudit> {
    Ok(RatioAudit::from_pairs(p_r_ratios(w, y, r, corpus)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::new(2049, 2f64.powi(-40)).unwrap())
    }

    #[test]
    fn p_examples() {
        let g = grid();
        let c = GridFunction::constant(g.clone(), 3.0).unwrap();
        for r in [1.0, 0.5] {
            assert!(apply_p(r, &c).unwrap().node_values().iter().all(|v| (v - 3.0).abs() < 1e-12));
        }
        let a = 0.1;
        let chi = GridFunction::indicator(g.clone(), 0.0, a).unwrap();
        let p = apply_p(1.0, &chi).unwrap();
        for (i, &t) in g.nodes().iter().enumerate() {
            assert_relative_eq!(p.at_node(i), (a / t).min(1.0), max_relative = 1e-12);
        }
        let f = GridFunction::from_fn(g.clone(), |t| t).unwrap();
        let p = apply_p(0.5, &f).unwrap();
        for (i, &t) in g.nodes().iter().enumerate().filter(|(_, &t)| t > 1e-8) {
            assert_relative_eq!(p.at_node(i), 4.0 / 9.0 * t, max_relative = 1e-4);
        }
    }

    #[test]
    fn qbar_examples() {
        let g = grid();
        let one = GridFunction::constant(g.clone(), 1.0).unwrap();
        let gam = 0.4;
        let q = apply_qbar(&OperatorSpec::qbar(Weight::power(gam).unwrap(), 1.0).unwrap(), &one).unwrap();
        for (i, &t) in g.nodes().iter().enumerate() {
            assert_relative_eq!(q.at_node(i), (1.0 - t.powf(gam)) / gam, max_relative = 1e-12, epsilon = 1e-15);
        }
        let q = apply_qbar(&OperatorSpec::qbar(Weight::power(0.5).unwrap(), 0.5).unwrap(), &one).unwrap();
        for (i, &t) in g.nodes().iter().enumerate() {
            let want = (4.0 * (1.0 - t.powf(0.25))).powi(2);
            assert_relative_eq!(q.at_node(i), want, max_relative = 1e-11, epsilon = 1e-14);
        }
        let t0 = 0.01;
        let low = GridFunction::indicator(g.clone(), 0.0, t0).unwrap();
        let q = apply_qbar(&OperatorSpec::qbar(Weight::power(0.5).unwrap(), 1.0).unwrap(), &low).unwrap();
        for (i, &t) in g.nodes().iter().enumerate() {
            if t >= t0 {
                assert_eq!(q.at_node(i), 0.0);
            }
        }
    }

    #[test]
    fn tbar_matches_qbar_power() {
        let g = grid();
        let f = GridFunction::from_steps(g.clone(), &[(0.0, 0.3, 2.0), (0.5, 0.7, 5.0)]).unwrap();
        let w = Weight::new(0.5, -0.5).unwrap();
        for r in [1.0, 0.5, 0.25] {
            let t = apply_tbar(&OperatorSpec::tbar(w, r).unwrap(), &f.powf(r)).unwrap();
            let q = apply_qbar(&OperatorSpec::qbar(w, r).unwrap(), &f).unwrap();
            for i in 0..g.n() {
                assert!((q.at_node(i).powf(r) - t.at_node(i)).abs() <= 1e-12 * t.at_node(i).max(1e-300));
            }
        }
        let zero = GridFunction::constant(g.clone(), 0.0).unwrap();
        let t = apply_tbar(&OperatorSpec::tbar(w, 1.0).unwrap(), &zero).unwrap();
        assert!(t.node_values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oscillation_identity_closed_form() {
        let g = grid();
        let one = GridFunction::constant(g.clone(), 1.0).unwrap();
        let gam = 0.3;
        let spec = OperatorSpec::qbar(Weight::power(gam).unwrap(), 1.0).unwrap();
        let rhs = oscillation_of_qbar(&spec, &one).unwrap();
        for (i, &t) in g.nodes().iter().enumerate() {
            assert_relative_eq!(rhs.at_node(i), t.powf(gam) / (gam + 1.0), max_relative = 1e-12);
        }
        let zero = GridFunction::constant(g.clone(), 0.0).unwrap();
        assert!(oscillation_of_qbar(&spec, &zero).unwrap().node_values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oscillation_identity_on_steps() {
        let g = grid();
        let f = GridFunction::from_steps(g.clone(), &[(0.0, 0.3, 2.0), (0.5, 0.7, 5.0), (1e-6, 1e-4, 9.0)]).unwrap();
        for gam in [0.3, 0.5, 0.7] {
            for r in [1.0, 0.5] {
                let spec = OperatorSpec::qbar(Weight::power(gam).unwrap(), r).unwrap();
                let lhs = crate::grid::oscillation(&apply_qbar(&spec, &f).unwrap(), r).unwrap();
                let rhs = oscillation_of_qbar(&spec, &f).unwrap();
                for i in 0..g.n() {
                    let (a, b) = (lhs.at_node(i), rhs.at_node(i));
                    assert!((a - b).abs() <= 1e-8 * b, "{gam} {r} {i} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn kernel_examples() {
        let g = Grid::new(1025, 2f64.powi(-30)).unwrap();
        let x = Space::lp(2.0).unwrap();
        let (p, gam) = (2.0, 0.7);
        let pp = p / (p - 1.0);
        let k = kernel_norm(&x, &Weight::power(gam).unwrap(), 1.0, 0.0, &g).unwrap();
        assert_relative_eq!(k, ((gam - 1.0) * pp + 1.0).powf(-1.0 / pp), max_relative = 1e-12);
        assert!(kernel_norm(&x, &Weight::power(0.5).unwrap(), 1.0, 0.0, &g).unwrap().is_infinite());
        let k = kernel_norm(&x, &Weight::power(0.5).unwrap(), 1.0, 0.5, &g).unwrap();
        assert_relative_eq!(k, 2f64.ln().sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn kernel_in_non_lebesgue_associates() {
        let g = Grid::new(513, 2f64.powi(-20)).unwrap();
        let x = Space::lorentz(2.0, 1.5).unwrap();
        let fin = kernel_norm(&x, &Weight::power(0.7).unwrap(), 1.0, 0.0, &g).unwrap();
        assert!(fin.is_finite() && fin > 0.0);
        let inf = kernel_norm(&x, &Weight::power(0.5).unwrap(), 1.0, 0.0, &g).unwrap();
        assert!(inf.is_infinite());
        let cut = kernel_norm(&x, &Weight::power(0.5).unwrap(), 1.0, 0.25, &g).unwrap();
        assert!(cut.is_finite());
    }

    #[test]
    fn optimal_range_indicator() {
        let g = grid();
        let (p, gam, a): (f64, f64, f64) = (2.0, 0.4, 0.2);
        let pp = p / (p - 1.0);
        let chi = GridFunction::indicator(g.clone(), 0.0, a).unwrap();
        let v = optimal_range_norm(&Space::lp(p).unwrap(), &Weight::power(gam).unwrap(), 1.0, &chi).unwrap();
        let e = (gam - 1.0) * pp + 1.0;
        let want = (a.powf(gam * pp + 1.0) / (gam * pp + 1.0) + a.powf(pp) * (1.0 - a.powf(e)) / e).powf(1.0 / pp);
        assert_relative_eq!(v, want, max_relative = 2e-5);
        let zero = GridFunction::constant(g, 0.0).unwrap();
        assert_eq!(optimal_range_norm(&Space::lp(p).unwrap(), &Weight::power(gam).unwrap(), 1.0, &zero).unwrap(), 0.0);
    }

    #[test]
    fn p_r_constant_on_flat_quotient() {
        let g = grid();
        let w = Weight::power(0.5).unwrap();
        let f = GridFunction::from_fn(g.clone(), |t| t.sqrt()).unwrap();
        let zero = GridFunction::constant(g, 0.0).unwrap();
        let audit = p_r_constant_audit(&w, &Space::lp(2.0).unwrap(), 1.0, &[f, zero]).unwrap();
        assert_eq!(audit.excluded, 1);
        assert!(audit.sup <= w.mpsi_integral().unwrap());
        assert_relative_eq!(audit.sup, 2.0 / 3.0, max_relative = 1e-3);
    }
}
