//! Weights `ψ(t) = t^γ (ln e/t)^δ`, their dilation envelope `m_ψ`, indices
//! and the deviation function `M(t) = sup_{t<s<1} ψ(s)/φ_X(s)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RioError};
use crate::grid::Grid;
use crate::quad;
use crate::spaces::{IndexPair, Space};

/// Gate on the indices of the deviation function.
pub const DEVIATION_INDEX_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub gamma: f64,
    pub delta: f64,
}

impl Weight {
    pub fn new(gamma: f64, delta: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite() && delta.is_finite()) {
            return Err(RioError::InvalidParameter(format!("weight needs gamma >= 0 and finite delta, got ({gamma}, {delta})")));
        }
        Ok(Weight { gamma, delta })
    }

    pub fn power(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0)
    }

    /// `ln ψ` at `t = e^{1-u}`.
    pub fn ln_psi_u(&self, u: f64) -> f64 {
        self.gamma * (1.0 - u) + if self.delta == 0.0 { 0.0 } else { self.delta * u.ln() }
    }

    pub fn psi(&self, t: f64) -> f64 {
        self.ln_psi_u(quad::u_of(t)).exp()
    }

    /// `ψ^r` as a weight of the same family.
    pub fn powf(&self, r: f64) -> Weight {
        Weight { gamma: self.gamma * r, delta: self.delta * r }
    }

    /// `ln m_ψ(t)` as a function of `ln t`.
    pub fn ln_m_psi(&self, ln_t: f64) -> f64 {
        let x = ln_t.abs();
        let log_part = if ln_t < 0.0 {
            (self.delta * x.ln_1p()).max(0.0)
        } else {
            (-self.delta * x.ln_1p()).max(0.0)
        };
        self.gamma * ln_t + log_part
    }

    /// `m_ψ(t) = sup_s ψ(st)/ψ(s)` over `0 < s < min(1, 1/t)`.
    pub fn m_psi(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(RioError::InvalidParameter(format!("m_psi needs t > 0, got {t}")));
        }
        Ok(self.ln_m_psi(t.ln()).exp())
    }

    pub fn fundamental_indices(&self) -> IndexPair {
        IndexPair { lower: self.gamma, upper: self.gamma }
    }

    /// `sup_{t<1} ln m(t)/ln t` and `inf_{t>1} ln m(t)/ln t` over
    /// `t = 2^{∓2^k}`, `k ≤ 30`.
    pub fn estimated_indices(&self) -> IndexPair {
        index_estimate(|lt| self.ln_m_psi(lt))
    }

    pub fn in_a0(&self) -> bool {
        self.gamma > 0.0 && self.gamma < 1.0
    }

    /// `∫_0^1 m_ψ(s) ds/s`, the bound on the `P_r` operator constant.
    pub fn mpsi_integral(&self) -> Result<f64> {
        if self.gamma <= 0.0 {
            return Err(RioError::Divergent(format!("∫ m_ψ(s) ds/s diverges for {self}")));
        }
        if !self.in_a0() {
            return Err(RioError::InvalidParameter(format!("{self} is not in A_0")));
        }
        if self.delta <= 0.0 {
            return Ok(1.0 / self.gamma);
        }
        quad::powerlog(self.gamma, self.delta, 0.0, 1.0).ok_or_else(|| RioError::Divergent(self.to_string()))
    }
}

/// Index estimate from `ln m` given as a function of `ln t`.
pub fn index_estimate(ln_m: impl Fn(f64) -> f64) -> IndexPair {
    let ln2 = 2f64.ln();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for k in 0..=30 {
        let lt = ln2 * 2f64.powi(k);
        lower = lower.max(ln_m(-lt) / -lt);
        upper = upper.min(ln_m(lt) / lt);
    }
    IndexPair { lower, upper }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "psi:gamma={},delta={}", self.gamma, self.delta)
    }
}

impl FromStr for Weight {
    type Err = RioError;

    fn from_str(s: &str) -> Result<Self> {
        let perr = |m: &str| RioError::Parse(format!("{m}: `{s}`"));
        let body = s.trim().strip_prefix("psi:").ok_or_else(|| perr("expected `psi:gamma=..,delta=..`"))?;
        let (mut gamma, mut delta) = (None, 0.0);
        for part in body.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(|| perr("expected key=value"))?;
            let v: f64 = v.trim().parse().map_err(|_| perr("bad number"))?;
            match k.trim() {
                "gamma" => gamma = Some(v),
                "delta" => delta = v,
                _ => return Err(perr("unknown key")),
            }
        }
        let gamma = gamma.ok_or_else(|| perr("missing gamma"))?;
        Weight::new(gamma, delta).map_err(|e| RioError::Parse(e.to_string()))
    }
}

/// `M(t_i)` on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct DeviationFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl DeviationFunction {
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(RioError::GridMismatch);
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(RioError::InvalidParameter("deviation values must be positive and finite".into()));
        }
        Ok(DeviationFunction { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn at_node(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Within 1% at the two deepest nodes that are a factor 4 apart.
    pub fn looks_bounded(&self) -> bool {
        let k = (4f64.ln() / self.grid.log_step()).round() as usize;
        let k = k.min(self.grid.n() - 1);
        let (a, b) = (self.values[0], self.values[k]);
        (a - b).abs() <= 0.01 * b
    }

    /// Indices of `M` from the fit `ln M = −b·x + c·ln(1+x) + d`,
    /// `x = ln(1/t)`, through the nodes nearest `x₀, x₀/2, x₀/4`.
    pub fn indices(&self) -> IndexPair {
        let g = &self.grid;
        let x0 = -g.node(0).ln();
        let pick = |x: f64| g.cell_of((-x).exp());
        let idx = [pick(x0), pick(x0 / 2.0), pick(x0 / 4.0)];
        let rows: Vec<[f64; 4]> = idx
            .iter()
            .map(|&i| {
                let x = -g.node(i).ln();
                [-x, x.ln_1p(), 1.0, self.values[i].ln()]
            })
            .collect();
        let b = solve3(&rows).map_or(f64::NAN, |s| s[0]);
        IndexPair { lower: b, upper: b }
    }
}

fn solve3(rows: &[[f64; 4]]) -> Option<[f64; 3]> {
    let mut m: Vec<[f64; 4]> = rows.to_vec();
    for c in 0..3 {
        let piv = (c..3).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[piv][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, piv);
        for r in 0..3 {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..4 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// `M(t_i) = max_{j ≥ i} ψ(t_j)/φ_X(t_j)`.
pub fn deviation(w: &Weight, x: &Space, grid: Arc<Grid>) -> DeviationFunction {
    let n = grid.n();
    let mut values = vec![0.0; n];
    let mut best = f64::NEG_INFINITY;
    for i in (0..n).rev() {
        let u = grid.node_u(i);
        best = best.max(w.ln_psi_u(u) - x.ln_fundamental_u(u));
        values[i] = best.exp();
    }
    DeviationFunction { grid, values }
}

/// Gate for the endpoint theorems: both deviation indices within tolerance of 0.
pub fn deviation_gate(m: &DeviationFunction) -> bool {
    let ix = m.indices();
    ix.lower.abs() <= DEVIATION_INDEX_TOLERANCE && ix.upper.abs() <= DEVIATION_INDEX_TOLERANCE
}
