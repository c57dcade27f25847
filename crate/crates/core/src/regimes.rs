//! Regime classification and the endpoint audits built on the oscillation
//! functional `‖O(|f|^r,·)^{1/r}/ψ‖_X`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RioError};
use crate::grid::{cell_means_of, oscillation, rearrange, Grid, GridFunction};
use crate::operators::{
    apply_qbar, apply_tbar, average_in_cell, check_r, kernel_norm, p_r_bound, prefix_mass, OperatorSpec, RatioAudit,
};
use crate::quad;
use crate::spaces::{depth_ladder, diverges_with_depth, IndexPair, Space, SpaceKind};
use crate::weights::{deviation, deviation_gate, DeviationFunction, Weight};

/// Index differences below this count as coincidence.
pub const INDEX_TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Supercritical,
    Subcritical,
    Critical,
    Indeterminate,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Supercritical => "supercritical",
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelVerdict {
    Finite,
    Divergent,
    Unknown,
}

impl fmt::Display for KernelVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelVerdict::Finite => "finite",
            KernelVerdict::Divergent => "divergent",
            KernelVerdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub boyd: IndexPair,
    pub psi_indices: IndexPair,
    pub kernel_finite: KernelVerdict,
    pub evidence: BTreeMap<String, f64>,
}

pub fn classify(x: &Space, w: &Weight, r: f64, grid: &Grid) -> Result<RegimeReport> {
    check_r(r)?;
    if !w.in_a0() {
        return Err(RioError::InvalidParameter(format!("{w} is not in A_0")));
    }
    let boyd = x.boyd_indices();
    let psi = w.fundamental_indices();
    let sup_gap = psi.lower - boyd.upper;
    let sub_gap = boyd.lower - psi.upper;
    let mut evidence = BTreeMap::new();
    evidence.insert("supercritical_gap".to_string(), sup_gap);
    evidence.insert("subcritical_gap".to_string(), sub_gap);
    let kernel = match kernel_norm(x, w, r, 0.0, grid) {
        Ok(k) => {
            evidence.insert("kernel_at_0".to_string(), k);
            if k.is_finite() {
                KernelVerdict::Finite
            } else {
                KernelVerdict::Divergent
            }
        }
        Err(_) => KernelVerdict::Unknown,
    };
    if kernel != KernelVerdict::Unknown {
        for k in [10, 20, 30] {
            if let Ok(v) = kernel_norm(x, w, r, 2f64.powi(-k), grid) {
                evidence.insert(format!("kernel_at_2^-{k}"), v);
            }
        }
    }
    let regime = if sup_gap > INDEX_TIE || kernel == KernelVerdict::Finite {
        Regime::Supercritical
    } else if sub_gap > INDEX_TIE {
        Regime::Subcritical
    } else if sup_gap.abs() <= INDEX_TIE && sub_gap.abs() <= INDEX_TIE && kernel == KernelVerdict::Divergent {
        Regime::Critical
    } else {
        Regime::Indeterminate
    };
    Ok(RegimeReport { regime, boyd, psi_indices: psi, kernel_finite: kernel, evidence })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub lhs: f64,
    pub rhs: f64,
}

impl CertificateRow {
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0 && self.rhs.is_finite() && self.lhs.is_finite()).then(|| self.lhs / self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCertificate {
    pub inequality_id: String,
    pub constant_forward: f64,
    pub constant_backward: Option<f64>,
    pub worst_function: Option<usize>,
    pub corpus_size: usize,
    pub excluded: usize,
    pub grid_n: usize,
    pub grid_tmin: f64,
    pub reference_bound: Option<f64>,
    pub rows: Vec<CertificateRow>,
}

impl EmbeddingCertificate {
    fn from_rows(id: &str, grid: &Grid, rows: Vec<(f64, f64)>) -> Self {
        let audit = RatioAudit::from_pairs(rows.iter().cloned());
        EmbeddingCertificate {
            inequality_id: id.to_string(),
            constant_forward: audit.sup,
            constant_backward: None,
            worst_function: audit.worst,
            corpus_size: rows.len(),
            excluded: audit.excluded,
            grid_n: grid.n(),
            grid_tmin: grid.t_min(),
            reference_bound: None,
            rows: rows.into_iter().map(|(lhs, rhs)| CertificateRow { lhs, rhs }).collect(),
        }
    }
}

fn corpus_grid(corpus: &[GridFunction]) -> Result<Arc<Grid>> {
    let first = corpus.first().ok_or_else(|| RioError::InvalidParameter("empty corpus".into()))?;
    let g = first.grid().clone();
    if corpus.iter().any(|f| !f.grid().same_as(&g)) {
        return Err(RioError::GridMismatch);
    }
    Ok(g)
}

fn refuse(msg: impl Into<String>) -> RioError {
    RioError::Refused(msg.into())
}

/// `‖O(|f|^r,·)^{1/r}/ψ‖_X`, evaluated as `‖O(|f|^r,·)/ψ^r‖_{X^{(1/r)}}^{1/r}`
/// with `ψ^r` taken at the logarithmic midpoint of each cell.
pub fn osc_norm(x: &Space, w: &Weight, r: f64, f: &GridFunction) -> Result<f64> {
    let o = oscillation(f, r)?;
    let wr = w.powf(r);
    let g = f.grid();
    let half = 0.5 * g.log_step();
    let cells: Vec<f64> = (0..g.n()).map(|i| o.values()[i] / wr.ln_psi_u(g.node_u(i) + half).exp()).collect();
    let y = x.convexified(1.0 / r)?;
    Ok(y.norm(&GridFunction::from_cells(g.clone(), cells)?).powf(1.0 / r))
}

/// `‖f‖_{L^r}`.
pub fn lr_norm(f: &GridFunction, r: f64) -> f64 {
    f.powf(r).mass().powf(1.0 / r)
}

/// `‖f**/ψ‖_X`.
pub fn maximal_over_weight_norm(x: &Space, w: &Weight, f: &GridFunction) -> Result<f64> {
    let fs = rearrange(f);
    let mass = prefix_mass(&fs);
    let g = f.grid().clone();
    let means = cell_means_of(&g, |i, t| average_in_cell(&fs, &mass, i, t) / w.psi(t))?;
    Ok(x.norm(&GridFunction::from_cells(g, means)?))
}

/// `‖f‖_∞ ≤ C(‖O(|f|^r)^{1/r}/ψ‖_X + ‖f‖_{L^r})` over a corpus; the reference
/// bound is `max(K,1)^{1/r}·2^{1/r−1}` with `K` the global kernel norm.
pub fn supercritical_linfty_audit(
    x: &Space,
    w: &Weight,
    r: f64,
    corpus: &[GridFunction],
) -> Result<EmbeddingCertificate> {
    let grid = corpus_grid(corpus)?;
    let k = kernel_norm(x, w, r, 0.0, &grid)?;
    if !k.is_finite() {
        return Err(refuse("the kernel ψ(s)^r/s diverges in the associate space"));
    }
    let rows = corpus
        .iter()
        .map(|f| Ok((f.sup(), osc_norm(x, w, r, f)? + lr_norm(f, r))))
        .collect::<Result<Vec<_>>>()?;
    let mut cert = EmbeddingCertificate::from_rows("supercritical-linfty", &grid, rows);
    cert.reference_bound = Some(k.max(1.0).powf(1.0 / r) * 2f64.powf(1.0 / r - 1.0));
    Ok(cert)
}

/// `f_n = (T̄h_n)^{1/r}` where `h_n` is the normalized extremal for the
/// kernel on `(2^{-n}, 1)` in `X^{(1/r)}`.
pub fn witness_functions(x: &Space, w: &Weight, r: f64, grid: &Arc<Grid>, ns: &[usize]) -> Result<Vec<GridFunction>> {
    check_r(r)?;
    let base = x.convexified(1.0 / r)?.canonical();
    let q = match (&base.kind, base.convexify) {
        (SpaceKind::Lp { p }, s) if s == 1.0 => *p,
        _ => 1.0 / base.boyd_indices().lower,
    };
    if !(q > 1.0 && q.is_finite()) {
        return Err(refuse(format!("no extremal profile for {base}")));
    }
    let e = q / (q - 1.0) - 1.0;
    let wr = w.powf(r);
    let (a, b) = ((wr.gamma - 1.0) * e + 1.0, wr.delta * e);
    let spec = OperatorSpec::tbar(*w, r)?;
    ns.iter()
        .map(|&n| {
            let cut = 2f64.powi(-(n as i32));
            if n == 0 || cut < grid.t_min() {
                return Err(RioError::InvalidParameter(format!("witness depth 2^-{n} is outside the grid")));
            }
            let means = (0..grid.n())
                .map(|i| {
                    let (lo, hi) = grid.cell_bounds(i);
                    if hi <= cut {
                        0.0
                    } else {
                        quad::powerlog(a, b, lo.max(cut), hi).unwrap_or(0.0) / grid.cell_len(i)
                    }
                })
                .collect();
            let h = GridFunction::from_cells(grid.clone(), means)?;
            let h = h.scaled(1.0 / base.norm(&h));
            Ok(apply_tbar(&spec, &h)?.powf(1.0 / r))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub n: usize,
    pub sup_norm: f64,
    pub osc_norm: f64,
    pub lr_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub rows: Vec<WitnessRow>,
    /// Uniform bound on the oscillation norms.
    pub osc_bound: f64,
}

pub fn supercritical_witness(x: &Space, w: &Weight, r: f64, n_terms: usize, grid: &Arc<Grid>) -> Result<WitnessReport> {
    if n_terms == 0 {
        return Err(RioError::InvalidParameter("n_terms must be positive".into()));
    }
    if kernel_norm(x, w, r, 0.0, grid)?.is_finite() {
        return Err(refuse("the kernel is finite, so no witness sequence exists"));
    }
    let ns: Vec<usize> = (1..=n_terms).collect();
    let fs = witness_functions(x, w, r, grid, &ns)?;
    let rows = ns
        .iter()
        .zip(&fs)
        .map(|(&n, f)| Ok(WitnessRow { n, sup_norm: f.sup(), osc_norm: osc_norm(x, w, r, f)?, lr_norm: lr_norm(f, r) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(WitnessReport { rows, osc_bound: p_r_bound(w, r)? })
}

/// Forward: `(osc + ‖f‖_{L^r}) / ‖f**/ψ‖_X`; backward: the reciprocal.
pub fn subcritical_equivalence_audit(
    x: &Space,
    w: &Weight,
    r: f64,
    corpus: &[GridFunction],
) -> Result<EmbeddingCertificate> {
    check_r(r)?;
    if x.boyd_indices().lower - w.fundamental_indices().upper <= INDEX_TIE {
        return Err(refuse("not subcritical: the lower Boyd index of X does not exceed the upper index of ψ"));
    }
    let grid = corpus_grid(corpus)?;
    let rows = corpus
        .iter()
        .map(|f| Ok((osc_norm(x, w, r, f)? + lr_norm(f, r), maximal_over_weight_norm(x, w, f)?)))
        .collect::<Result<Vec<_>>>()?;
    let back = RatioAudit::from_pairs(rows.iter().map(|&(a, b)| (b, a)));
    let mut cert = EmbeddingCertificate::from_rows("subcritical-equivalence", &grid, rows);
    cert.constant_backward = Some(back.sup);
    Ok(cert)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(RioError::InvalidParameter(format!("alpha must exceed 1, got {alpha}")))
    }
}

/// `β' = α/(α − r)`.
pub fn beta_prime(alpha: f64, r: f64) -> f64 {
    alpha / (alpha - r)
}

/// Worst node of `[(|f|^r)**(t) − (|f|^r)**(1)] / [(ln e/t)^{1/β'} M(t)^r A]`
/// with `A = osc^r`, as `(lhs, rhs)`.
pub fn critical_ratio(
    x: &Space,
    w: &Weight,
    r: f64,
    alpha: f64,
    m: &DeviationFunction,
    f: &GridFunction,
) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let bp = beta_prime(alpha, r);
    let a = osc_norm(x, w, r, f)?.powf(r);
    let g = f.grid();
    let mass = prefix_mass(&rearrange(&f.powf(r)));
    let total = mass[g.n() - 1];
    let mut best = (0.0, 0.0);
    let mut best_q = f64::NEG_INFINITY;
    for i in 0..g.n() {
        let lhs = mass[i] / g.node(i) - total;
        let lhs = if lhs <= 1e-12 * total { 0.0 } else { lhs };
        let rhs = g.node_u(i).powf(1.0 / bp) * m.at_node(i).powf(r) * a;
        let q = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        if q > best_q {
            best_q = q;
            best = (lhs, rhs);
        }
    }
    Ok(best)
}

pub fn critical_estimate_audit(
    x: &Space,
    w: &Weight,
    r: f64,
    alpha: f64,
    corpus: &[GridFunction],
) -> Result<EmbeddingCertificate> {
    check_r(r)?;
    let grid = corpus_grid(corpus)?;
    let m = deviation(w, x, grid.clone());
    let rows = corpus.iter().map(|f| critical_ratio(x, w, r, alpha, &m, f)).collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingCertificate::from_rows("critical-log", &grid, rows))
}

/// `∫_0^1 F(t) dt` where `F(i, t)` is evaluated inside cell `i`.
pub fn exp_integral(grid: &Grid, f: impl Fn(usize, f64) -> f64) -> f64 {
    let h = grid.log_step();
    let width = 0.05_f64.min(h);
    let tail = quad::integrate_tail(|u| f(0, quad::t_of(u)) * quad::t_of(u), grid.node_u(0), 1.0);
    let Some(mut total) = tail else {
        return f64::INFINITY;
    };
    for i in 1..grid.n() {
        let u = grid.node_u(i);
        total += quad::integrate(|v| f(i, quad::t_of(v)) * quad::t_of(v), u, u + h, width);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrudingerResult {
    pub plain: f64,
    pub shifted: f64,
    pub c: f64,
    pub c_shifted: f64,
    pub a: f64,
    pub m: f64,
    pub beta_prime: f64,
}

/// Exponential integrals of `H = (|f|^r)** − (|f|^r)**(1)` with
/// `c = 1/(2C₀^{β'})`; the shifted integral uses `c/2^{max(β'−1,0)}`.
pub fn trudinger_audit(x: &Space, w: &Weight, r: f64, alpha: f64, c0: f64, f: &GridFunction) -> Result<TrudingerResult> {
    check_r(r)?;
    check_alpha(alpha)?;
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(RioError::InvalidParameter(format!("critical constant must be positive, got {c0}")));
    }
    let g = f.grid();
    if !deviation(w, x, g.clone()).looks_bounded() {
        return Err(refuse("the deviation function is unbounded"));
    }
    let bp = beta_prime(alpha, r);
    let c = 0.5 / c0.powf(bp);
    let c_shifted = c / 2f64.powf((bp - 1.0).max(0.0));
    let a = osc_norm(x, w, r, f)?.powf(r);
    let gs = rearrange(&f.powf(r));
    let mass = prefix_mass(&gs);
    let m = mass[g.n() - 1];
    let avg = |i: usize, t: f64| average_in_cell(&gs, &mass, i, t);
    let plain = if a == 0.0 {
        1.0
    } else {
        exp_integral(g, |i, t| (c * ((avg(i, t) - m).max(0.0) / a).powf(bp)).exp())
    };
    let shifted = if a + m == 0.0 {
        1.0
    } else {
        exp_integral(g, |i, t| (c_shifted * (avg(i, t) / (a + m)).powf(bp)).exp())
    };
    Ok(TrudingerResult { plain, shifted, c, c_shifted, a, m, beta_prime: bp })
}

/// `∫_0^1 (f**(t)/((ln e/t)^{1/r} M(t)))^α dt/t` and its `f*`-version, with
/// `M` constant on cells.
pub fn hansson_integrals(alpha: f64, r: f64, m: &DeviationFunction, f: &GridFunction) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    check_r(r)?;
    let g = f.grid();
    if !m.grid().same_as(g) {
        return Err(RioError::GridMismatch);
    }
    let fs = rearrange(f);
    let mass = prefix_mass(&fs);
    let e = alpha / r;
    let h = g.log_step();
    let width = 0.05_f64.min(h);
    let u0 = g.node_u(0);
    let v0 = fs.values()[0] / m.at_node(0);
    let head = v0.powf(alpha) * u0.powf(1.0 - e) / (e - 1.0);
    let (mut dbl, mut star) = (head, head);
    for i in 1..g.n() {
        let mi = m.at_node(i);
        let u = g.node_u(i);
        dbl += quad::integrate(
            |v| (average_in_cell(&fs, &mass, i, quad::t_of(v)) / mi).powf(alpha) * v.powf(-e),
            u,
            u + h,
            width,
        );
        let (lo, hi) = g.cell_bounds(i);
        star += (fs.values()[i] / mi).powf(alpha) * quad::powerlog(0.0, -e, lo, hi).unwrap_or(0.0);
    }
    Ok((dbl, star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HanssonNorm {
    pub norm: f64,
    pub star_norm: f64,
    /// `norm / star_norm`.
    pub ratio: f64,
}

pub fn hansson_norm(alpha: f64, r: f64, m: &DeviationFunction, f: &GridFunction) -> Result<HanssonNorm> {
    if !deviation_gate(m) {
        return Err(refuse("the deviation function has nonzero indices"));
    }
    let (d, s) = hansson_integrals(alpha, r, m, f)?;
    let (norm, star_norm) = (d.powf(1.0 / alpha), s.powf(1.0 / alpha));
    let ratio = if star_norm > 0.0 { norm / star_norm } else { f64::NAN };
    Ok(HanssonNorm { norm, star_norm, ratio })
}

/// Hansson norm of a sampled function, `+∞` when it keeps growing as the grid
/// reaches deeper towards `0`.
pub fn hansson_norm_of_recipe<F>(alpha: f64, r: f64, w: &Weight, x: &Space, grid: &Grid, make: F) -> Result<f64>
where
    F: Fn(&Arc<Grid>) -> Result<GridFunction>,
{
    let mut s = [0.0; 3];
    for (slot, g) in s.iter_mut().zip(depth_ladder(grid)?.iter()) {
        let m = deviation(w, x, g.clone());
        if !deviation_gate(&m) {
            return Err(refuse("the deviation function has nonzero indices"));
        }
        *slot = hansson_integrals(alpha, r, &m, &make(g)?)?.0;
    }
    Ok(if diverges_with_depth(s) { f64::INFINITY } else { s[2].powf(1.0 / alpha) })
}

/// `φ_H(t_k)` for the Hansson space, exact for indicators when `M` is
/// constant on cells.
pub fn hansson_fundamental(alpha: f64, r: f64, m: &DeviationFunction) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_r(r)?;
    let g = m.grid();
    let n = g.n();
    let e = alpha / r;
    let h = g.log_step();
    let width = 0.05_f64.min(h);
    let mut head = vec![0.0; n];
    let mut acc = 0.0;
    for (i, slot) in head.iter_mut().enumerate() {
        let (lo, hi) = g.cell_bounds(i);
        acc += m.at_node(i).powf(-alpha) * quad::powerlog(0.0, -e, lo, hi).unwrap_or(0.0);
        *slot = acc;
    }
    // tail_k = t_k^α Σ_{i>k} M_i^{-α} ∫_cell t^{-α} L^{-e} dt/t, rescaled cell by cell
    let step = (-alpha * h).exp();
    let mut tail = 0.0;
    let mut out = vec![0.0; n];
    for k in (0..n).rev() {
        out[k] = (head[k] + tail).powf(1.0 / alpha);
        if k > 0 {
            let u = g.node_u(k);
            let cell = quad::integrate(|v| (alpha * (v - u)).exp() * v.powf(-e), u, u + h, width);
            tail = (tail + m.at_node(k).powf(-alpha) * cell) * step;
        }
    }
    Ok(out)
}

/// Fundamental function of a target space `Y` in the Berezhnoi condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Space(Space),
    /// `H_{α,r,M}` with `M` the deviation function of the audited pair.
    Hansson { alpha: f64 },
    /// `φ ≡ 1`.
    Constant,
}

impl Target {
    fn fundamental(&self, r: f64, w: &Weight, x: &Space, g: &Arc<Grid>) -> Result<Vec<f64>> {
        match self {
            Target::Space(y) => Ok(g.nodes().iter().map(|&t| y.fundamental(t)).collect()),
            Target::Hansson { alpha } => hansson_fundamental(*alpha, r, &deviation(w, x, g.clone())),
            Target::Constant => Ok(vec![1.0; g.n()]),
        }
    }

    fn upper_order(&self) -> Option<f64> {
        match self {
            Target::Space(y) => y.estimate_orders().upper,
            Target::Hansson { alpha } => Some(*alpha),
            Target::Constant => Some(f64::INFINITY),
        }
    }
}

fn sample_nodes(n: usize) -> impl Iterator<Item = usize> {
    let stride = (n / 256).max(1);
    (0..n - 1).step_by(stride)
}

fn ladder_sup(grid: &Grid, mut at: impl FnMut(&Arc<Grid>) -> Result<f64>) -> Result<f64> {
    let mut s = [0.0; 3];
    for (slot, g) in s.iter_mut().zip(depth_ladder(grid)?.iter()) {
        *slot = at(g)?;
    }
    Ok(if diverges_with_depth(s) { f64::INFINITY } else { s[2] })
}

/// `sup_x φ_Y(x)^r (ln e/x)^{1/β'} M(x)^r`.
pub fn hansson_condition_check(alpha: f64, r: f64, w: &Weight, x: &Space, target: &Target, grid: &Grid) -> Result<f64> {
    check_alpha(alpha)?;
    let bp = beta_prime(alpha, r);
    ladder_sup(grid, |g| {
        let phi = target.fundamental(r, w, x, g)?;
        let m = deviation(w, x, g.clone());
        Ok((0..g.n())
            .map(|i| phi[i].powf(r) * g.node_u(i).powf(1.0 / bp) * m.at_node(i).powf(r))
            .fold(0.0, f64::max))
    })
}

/// `sup_x φ_{Y^{(1/r)}}(x)·‖ψ(s)^r/s χ_{(x,1]}‖_{(X^{(1/r)})'}`, `+∞` on a
/// growing trend.
pub fn berezhnoi_check(x: &Space, target: &Target, w: &Weight, r: f64, grid: &Grid) -> Result<f64> {
    check_r(r)?;
    let lower = x
        .estimate_orders()
        .lower
        .ok_or_else(|| refuse(format!("not a Berezhnoi pair: {x} has no lower estimate")))?;
    let upper = target
        .upper_order()
        .ok_or_else(|| refuse("not a Berezhnoi pair: the target has no upper estimate"))?;
    if lower > upper * (1.0 + 1e-12) {
        return Err(refuse(format!("not a Berezhnoi pair: lower order {lower} exceeds upper order {upper}")));
    }
    ladder_sup(grid, |g| {
        let phi = target.fundamental(r, w, x, g)?;
        let mut best: f64 = 0.0;
        for i in sample_nodes(g.n()) {
            best = best.max(phi[i].powf(r) * kernel_norm(x, w, r, g.node(i), g)?);
        }
        Ok(best)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HanssonParams {
    pub alpha: f64,
    pub rho: f64,
    pub r: f64,
    pub beta_prime: f64,
    pub s: f64,
}

impl HanssonParams {
    pub fn new(alpha: f64, rho: f64, r: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_r(r)?;
        if !(rho > 1.0 && rho <= alpha) {
            return Err(RioError::InvalidParameter(format!("need 1 < rho <= alpha, got rho = {rho}")));
        }
        Ok(HanssonParams { alpha, rho, r, beta_prime: beta_prime(alpha, r), s: alpha / rho })
    }

    /// Orders taken from the catalog estimates of `x`.
    pub fn from_space(x: &Space, r: f64) -> Result<Self> {
        let o = x.estimate_orders();
        match (o.lower, o.upper) {
            (Some(a), Some(p)) => Self::new(a, p, r),
            _ => Err(refuse(format!("estimate orders of {x} are not catalogued"))),
        }
    }
}

/// `‖f**/(φ_{X^{(s)}} (ln e/·)^{1/r} M)‖_{X^{(s)}}`.
pub fn convexified_hansson_norm(x: &Space, params: &HanssonParams, m: &DeviationFunction, f: &GridFunction) -> Result<f64> {
    if !deviation_gate(m) {
        return Err(refuse("the deviation function has nonzero indices"));
    }
    let y = x.convexified(params.s)?.canonical();
    if let (SpaceKind::Lp { p }, s) = (&y.kind, y.convexify) {
        if s == 1.0 && *p > 1.0 {
            return Ok(hansson_integrals(*p, params.r, m, f)?.0.powf(1.0 / p));
        }
    }
    convexified_hansson_generic(&y, params.r, m, f)
}

fn convexified_hansson_generic(y: &Space, r: f64, m: &DeviationFunction, f: &GridFunction) -> Result<f64> {
    let fs = rearrange(f);
    let mass = prefix_mass(&fs);
    let g = f.grid().clone();
    let value = |i: usize, t: f64| {
        average_in_cell(&fs, &mass, i, t) / (y.fundamental(t) * quad::u_of(t).powf(1.0 / r) * m.at_node(i))
    };
    if let Some((q, c, d)) = y.lambda_params() {
        // the weighted maximal function is equivalent to a decreasing one, so
        // the Lorentz-type functional is integrated directly
        let dens = |i: usize, u: f64| {
            let a = average_in_cell(&fs, &mass, i, quad::t_of(u));
            if a == 0.0 {
                return 0.0;
            }
            let ln_g = a.ln() - m.at_node(i).ln() - u.ln() / r - y.ln_fundamental_u(u);
            (q * ln_g + c * (1.0 - u) + d * u.ln()).exp()
        };
        let h = g.log_step();
        let mut total = quad::integrate_tail(|u| dens(0, u), g.node_u(0), 1.0).unwrap_or(f64::INFINITY);
        for i in 1..g.n() {
            let u = g.node_u(i);
            total += quad::integrate(|v| dens(i, v), u, u + h, 0.05_f64.min(h));
        }
        return Ok(total.powf(1.0 / q));
    }
    let means = cell_means_of(&g, value)?;
    Ok(y.norm(&GridFunction::from_cells(g, means)?))
}

/// `(X, ψ, r) ↦ (X^{(1/r)}, ψ^r, 1)`.
pub fn quasi_banach_reduce(x: &Space, w: &Weight, r: f64) -> Result<(Space, Weight, f64)> {
    check_r(r)?;
    let reduced = x.convexified(1.0 / r)?.canonical();
    if !reduced.is_banach() {
        return Err(refuse(format!("{x} is not {r}-convex: {reduced} is not a Banach space")));
    }
    Ok((reduced, w.powf(r), 1.0))
}

/// `(‖O(|f|^r)^{1/r}/ψ‖_X^r, ‖O(|f|^r)/ψ^r‖_{X^{(1/r)}})`.
pub fn quasi_banach_identity(x: &Space, w: &Weight, r: f64, f: &GridFunction) -> Result<(f64, f64)> {
    let (xr, wr, _) = quasi_banach_reduce(x, w, r)?;
    Ok((osc_norm(x, w, r, f)?.powf(r), osc_norm(&xr, &wr, 1.0, &f.powf(r))?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrend {
    pub ratios: Vec<f64>,
    pub growing: bool,
}

impl GrowthTrend {
    fn new(ratios: Vec<f64>) -> Self {
        let k = ratios.len();
        let growing = ratios.iter().any(|v| !v.is_finite()) || (k >= 2 && ratios[k - 1] > 1.1 * ratios[k - 2]);
        GrowthTrend { ratios, growing }
    }
}

/// Ratios of the three equivalent statements along indicator families
/// `χ_{(0,2^{-k})}`: the embedding into `Y`, `T̄: X^{(1/r)} → Y^{(1/r)}` and
/// `Q̄: X → Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionAudit {
    pub scales: Vec<f64>,
    pub embedding: GrowthTrend,
    pub tbar: GrowthTrend,
    pub qbar: GrowthTrend,
}

impl InclusionAudit {
    pub fn consistent(&self) -> bool {
        self.embedding.growing == self.tbar.growing && self.tbar.growing == self.qbar.growing
    }
}

pub fn inclusion_audit(x: &Space, w: &Weight, r: f64, y: &Space, grid: &Arc<Grid>) -> Result<InclusionAudit> {
    check_r(r)?;
    let scales: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&k| 2f64.powi(-k))
        .filter(|&s| s >= 16.0 * grid.t_min())
        .collect();
    if scales.len() < 2 {
        return Err(RioError::InvalidParameter("grid is too shallow for the inclusion audit".into()));
    }
    let (xr, yr) = (x.convexified(1.0 / r)?, y.convexified(1.0 / r)?);
    let spec = OperatorSpec::qbar(*w, r)?;
    let tspec = OperatorSpec::tbar(*w, r)?;
    let (mut emb, mut tb, mut qb) = (Vec::new(), Vec::new(), Vec::new());
    for &s in &scales {
        let chi = GridFunction::indicator(grid.clone(), 0.0, s)?;
        let q = apply_qbar(&spec, &chi)?;
        qb.push(y.norm(&q) / x.norm(&chi));
        tb.push(yr.norm(&apply_tbar(&tspec, &chi)?) / xr.norm(&chi));
        emb.push(y.norm(&q) / (osc_norm(x, w, r, &q)? + lr_norm(&q, r)));
    }
    Ok(InclusionAudit {
        scales,
        embedding: GrowthTrend::new(emb),
        tbar: GrowthTrend::new(tb),
        qbar: GrowthTrend::new(qb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize, depth: i32) -> Arc<Grid> {
        Arc::new(Grid::new(n, 2f64.powi(-depth)).unwrap())
    }

    fn lp(p: f64) -> Space {
        Space::lp(p).unwrap()
    }

    fn psi(g: f64) -> Weight {
        Weight::power(g).unwrap()
    }

    fn steps(g: &Arc<Grid>) -> Vec<GridFunction> {
        vec![
            GridFunction::constant(g.clone(), 2.0).unwrap(),
            GridFunction::indicator(g.clone(), 0.0, 0.01).unwrap(),
            GridFunction::from_steps(g.clone(), &[(0.0, 0.3, 2.0), (0.5, 0.7, 5.0), (1e-6, 1e-4, 9.0)]).unwrap(),
            GridFunction::from_fn(g.clone(), |t| (1.0 - t.ln()).sqrt()).unwrap(),
        ]
    }

    #[test]
    fn classify_examples() {
        let g = Grid::new(1025, 2f64.powi(-30)).unwrap();
        let sup = classify(&lp(2.0), &psi(0.7), 1.0, &g).unwrap();
        assert_eq!(sup.regime, Regime::Supercritical);
        assert_eq!(sup.kernel_finite, KernelVerdict::Finite);
        assert_eq!(classify(&lp(2.0), &psi(0.3), 1.0, &g).unwrap().regime, Regime::Subcritical);
        for p in [1.5, 2.0, 3.0, 6.0] {
            let c = classify(&lp(p), &psi(1.0 / p), 1.0, &g).unwrap();
            assert_eq!(c.regime, Regime::Critical, "{p}");
            assert_eq!(c.kernel_finite, KernelVerdict::Divergent);
        }
        assert!(classify(&lp(2.0), &psi(1.2), 1.0, &g).is_err());
    }

    #[test]
    fn supercritical_audit_and_refusal() {
        let g = grid(1025, 30);
        let corpus = steps(&g);
        let cert = supercritical_linfty_audit(&lp(2.0), &psi(0.7), 1.0, &corpus).unwrap();
        let first = cert.rows[0].ratio().unwrap();
        assert_relative_eq!(first, 1.0, max_relative = 1e-12);
        assert!(cert.constant_forward <= cert.reference_bound.unwrap());
        assert!(matches!(
            supercritical_linfty_audit(&lp(2.0), &psi(0.5), 1.0, &corpus),
            Err(RioError::Refused(_))
        ));
    }

    #[test]
    fn critical_witness_grows_like_log() {
        let g = grid(2049, 40);
        let rep = supercritical_witness(&lp(2.0), &psi(0.5), 1.0, 12, &g).unwrap();
        assert_eq!(rep.rows.len(), 12);
        for w in rep.rows.windows(2) {
            assert!(w[1].sup_norm > w[0].sup_norm);
        }
        for row in &rep.rows[4..] {
            let want = (row.n as f64 * 2f64.ln()).sqrt();
            assert!((row.sup_norm / want - 1.0).abs() < 0.1, "{row:?}");
            assert!(row.osc_norm <= rep.osc_bound);
        }
        assert!(matches!(supercritical_witness(&lp(2.0), &psi(0.7), 1.0, 3, &g), Err(RioError::Refused(_))));
    }

    #[test]
    fn subcritical_indicator_closed_form() {
        let g = grid(2049, 40);
        let (a, gam): (f64, f64) = (0.1, 0.3);
        let chi = GridFunction::indicator(g.clone(), 0.0, a).unwrap();
        let v = maximal_over_weight_norm(&lp(2.0), &psi(gam), &chi).unwrap();
        let e = 1.0 - 2.0 * gam;
        let want = (a.powf(e) / e + a * a * (a.powf(-1.0 - 2.0 * gam) - 1.0) / (1.0 + 2.0 * gam)).sqrt();
        assert_relative_eq!(v, want, max_relative = 1e-4);
        let corpus = steps(&g);
        let cert = subcritical_equivalence_audit(&lp(2.0), &psi(gam), 1.0, &corpus).unwrap();
        assert!(cert.constant_forward.is_finite() && cert.constant_backward.unwrap().is_finite());
        assert!(matches!(
            subcritical_equivalence_audit(&lp(2.0), &psi(0.5), 1.0, &corpus),
            Err(RioError::Refused(_))
        ));
    }

    #[test]
    fn critical_ratio_stays_below_one_for_lebesgue() {
        let g = grid(2049, 40);
        let (x, w) = (lp(2.0), psi(0.5));
        let m = deviation(&w, &x, g.clone());
        let constant = GridFunction::constant(g.clone(), 3.0).unwrap();
        assert_eq!(critical_ratio(&x, &w, 1.0, 2.0, &m, &constant).unwrap().0, 0.0);
        let family = witness_functions(&x, &w, 1.0, &g, &[10, 30]).unwrap();
        let q: Vec<f64> = family
            .iter()
            .map(|f| {
                let (l, r) = critical_ratio(&x, &w, 1.0, 2.0, &m, f).unwrap();
                l / r
            })
            .collect();
        assert!(q.iter().all(|&v| v <= 1.0 + 1e-3), "{q:?}");
        assert!(q[1] > 0.8, "{q:?}");
    }

    #[test]
    fn trudinger_closed_form_and_constant() {
        let g = grid(2049, 40);
        for c in [0.25, 0.5, 0.75] {
            let v = exp_integral(&g, |_, t| (c * quad::u_of(t)).exp());
            assert_relative_eq!(v, c.exp() / (1.0 - c), max_relative = 1e-6);
        }
        let f = GridFunction::constant(g.clone(), 2.0).unwrap();
        let t = trudinger_audit(&lp(2.0), &psi(0.5), 1.0, 2.0, 1.0, &f).unwrap();
        assert_eq!(t.plain, 1.0);
        assert!(trudinger_audit(&lp(2.0), &Weight::new(0.5, 0.5).unwrap(), 1.0, 2.0, 1.0, &f).is_err());
    }

    #[test]
    fn hansson_examples() {
        let g = grid(2049, 40);
        let m = deviation(&psi(0.5), &lp(2.0), g.clone());
        let one = GridFunction::constant(g.clone(), 1.0).unwrap();
        let h = hansson_norm(2.0, 1.0, &m, &one).unwrap();
        assert_relative_eq!(h.norm, 1.0, max_relative = 1e-9);
        let h3 = hansson_norm(3.0, 1.0, &deviation(&psi(1.0 / 3.0), &lp(3.0), g.clone()), &one).unwrap();
        assert_relative_eq!(h3.norm, 0.5f64.powf(1.0 / 3.0), max_relative = 1e-6);
        let zero = GridFunction::constant(g.clone(), 0.0).unwrap();
        assert_eq!(hansson_norm(2.0, 1.0, &m, &zero).unwrap().norm, 0.0);
        let div = hansson_norm_of_recipe(2.0, 1.0, &psi(0.5), &lp(2.0), &g, |g| {
            GridFunction::from_fn(g.clone(), |t| quad::u_of(t).sqrt())
        })
        .unwrap();
        assert!(div.is_infinite());
        let fin = hansson_norm_of_recipe(2.0, 1.0, &psi(0.5), &lp(2.0), &g, |g| {
            GridFunction::from_fn(g.clone(), |t| quad::u_of(t).powf(0.2))
        })
        .unwrap();
        assert!(fin.is_finite());
        for f in steps(&g) {
            let h = hansson_norm(2.0, 1.0, &m, &f).unwrap();
            assert!(h.ratio >= 1.0 - 1e-9 && h.ratio < 10.0, "{h:?}");
        }
        let bad = deviation(&psi(0.3), &lp(2.0), g.clone());
        assert!(matches!(hansson_norm(2.0, 1.0, &bad, &one), Err(RioError::Refused(_))));
    }

    #[test]
    fn hansson_fundamental_matches_indicator_norm() {
        let g = grid(1025, 30);
        let m = deviation(&psi(0.5), &lp(2.0), g.clone());
        let phi = hansson_fundamental(2.0, 1.0, &m).unwrap();
        for k in [100, 500, 1000] {
            let chi = GridFunction::indicator(g.clone(), 0.0, g.node(k)).unwrap();
            let h = hansson_integrals(2.0, 1.0, &m, &chi).unwrap().0.sqrt();
            assert_relative_eq!(phi[k], h, max_relative = 1e-6);
        }
    }

    #[test]
    fn fundamental_conditions() {
        let g = Grid::new(513, 2f64.powi(-40)).unwrap();
        let (x, w) = (lp(2.0), psi(0.5));
        let h = hansson_condition_check(2.0, 1.0, &w, &x, &Target::Hansson { alpha: 2.0 }, &g).unwrap();
        assert!(h.is_finite() && h > 0.0);
        assert!(hansson_condition_check(2.0, 1.0, &w, &x, &Target::Constant, &g).unwrap().is_infinite());
        assert!(berezhnoi_check(&x, &Target::Constant, &w, 1.0, &g).unwrap().is_infinite());
        assert!(berezhnoi_check(&x, &Target::Hansson { alpha: 2.0 }, &w, 1.0, &g).unwrap().is_finite());
        assert!(berezhnoi_check(&x, &Target::Space(lp(2.0)), &psi(0.7), 1.0, &g).unwrap().is_finite());
        assert!(matches!(
            berezhnoi_check(&lp(3.0), &Target::Space(lp(2.0)), &psi(0.7), 1.0, &g),
            Err(RioError::Refused(_))
        ));
    }

    #[test]
    fn convexified_hansson_reduces_for_lebesgue() {
        let g = grid(2049, 40);
        let (x, w) = (lp(2.0), psi(0.5));
        let m = deviation(&w, &x, g.clone());
        let params = HanssonParams::from_space(&x, 1.0).unwrap();
        assert_eq!(params.s, 1.0);
        for (k, f) in steps(&g).iter().enumerate() {
            let c = convexified_hansson_norm(&x, &params, &m, f).unwrap();
            let h = hansson_norm(2.0, 1.0, &m, f).unwrap().norm;
            assert!((c - h).abs() <= 1e-10 * h);
            if k < 4 {
                let generic = convexified_hansson_generic(&x, 1.0, &m, f).unwrap();
                assert_relative_eq!(generic, h, max_relative = 1e-6);
            }
        }
        assert!(HanssonParams::new(2.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn quasi_banach_reduction() {
        let g = grid(1025, 30);
        let w = psi(0.5);
        let (x, v, r) = quasi_banach_reduce(&lp(2.0), &w, 1.0).unwrap();
        assert_eq!((x, v, r), (lp(2.0), w, 1.0));
        let (x, v, _) = quasi_banach_reduce(&lp(1.0), &w, 0.5).unwrap();
        assert_eq!(x, lp(2.0));
        assert_relative_eq!(v.gamma, 0.25);
        let quasi = lp(1.0).convexified(0.5).unwrap();
        assert_eq!(quasi_banach_reduce(&quasi, &w, 0.5).unwrap().0, lp(1.0));
        assert!(quasi_banach_reduce(&quasi, &w, 1.0).is_err());
        for f in steps(&g) {
            let (a, b) = quasi_banach_identity(&quasi, &w, 0.5, &f).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn inclusion_audit_trichotomy() {
        let g = grid(4096, 40);
        let (p, gam) = (2.0, 0.3);
        let pstar = 1.0 / (1.0 / p - gam);
        let bounded = inclusion_audit(&lp(p), &psi(gam), 1.0, &Space::lorentz(pstar, p).unwrap(), &g).unwrap();
        assert!(bounded.consistent() && !bounded.qbar.growing, "{bounded:?}");
        let small = inclusion_audit(&lp(p), &psi(gam), 1.0, &lp(pstar + 3.0), &g).unwrap();
        assert!(small.consistent() && small.qbar.growing, "{small:?}");
    }
}
