//! Geometric grids on `(0,1)`, piecewise-constant grid functions and the
//! rearrangement engine (`f*`, `f**`, oscillation).

use std::io::Write;
use std::sync::Arc;

use crate::error::{Result, RioError};
use crate::quad;

const MONOTONE_SLACK: f64 = 1e-12;

/// Log-equispaced nodes `t_min = t_0 < … < t_{n-1} = 1`; cell `i` is
/// `(t_{i-1}, t_i]` with `t_{-1} = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    t_min: f64,
    log_step: f64,
    nodes: Vec<f64>,
    lens: Vec<f64>,
}

pub fn make_grid(n: usize, t_min: f64) -> Result<Grid> {
    Grid::new(n, t_min)
}

impl Grid {
    pub fn new(n: usize, t_min: f64) -> Result<Self> {
        if n < 2 {
            return Err(RioError::InvalidParameter(format!("grid needs at least 2 nodes, got {n}")));
        }
        if !(t_min > 0.0 && t_min < 1.0) {
            return Err(RioError::InvalidParameter(format!("t_min must lie in (0,1), got {t_min}")));
        }
        let lt = t_min.ln();
        let m = (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| (lt * (1.0 - i as f64 / m)).exp()).collect();
        nodes[0] = t_min;
        nodes[n - 1] = 1.0;
        let lens = (0..n)
            .map(|i| if i == 0 { nodes[0] } else { nodes[i] - nodes[i - 1] })
            .collect();
        Ok(Grid { t_min, log_step: -lt / m, nodes, lens })
    }

    /// `n = 4096`, `t_min = 2^-40`.
    pub fn standard() -> Self {
        Grid::new(4096, 2f64.powi(-40)).expect("standard grid")
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }
    pub fn t_min(&self) -> f64 {
        self.t_min
    }
    /// `ln(t_{i+1}/t_i)`.
    pub fn log_step(&self) -> f64 {
        self.log_step
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }
    pub fn cell_len(&self, i: usize) -> f64 {
        self.lens[i]
    }
    pub fn cell_lens(&self) -> &[f64] {
        &self.lens
    }
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        (if i == 0 { 0.0 } else { self.nodes[i - 1] }, self.nodes[i])
    }
    /// `ln(e/t_i)`.
    pub fn node_u(&self, i: usize) -> f64 {
        1.0 + self.log_step * (self.n() - 1 - i) as f64
    }

    /// Index of the cell containing `t`, i.e. the smallest `i` with `t ≤ t_i`.
    pub fn cell_of(&self, t: f64) -> usize {
        self.nodes.partition_point(|&x| x < t).min(self.n() - 1)
    }

    /// Same log step, extended down to `t_min^k`.
    pub fn deepened(&self, k: usize) -> Result<Grid> {
        Grid::new((self.n() - 1) * k + 1, self.t_min.powi(k as i32))
    }

    /// Half the log step over the same range.
    pub fn refined(&self) -> Result<Grid> {
        Grid::new(2 * self.n() - 1, self.t_min)
    }

    /// Twice the log step over the same range; needs an odd node count.
    pub fn coarsened(&self) -> Result<Grid> {
        if (self.n() - 1) % 2 != 0 || self.n() < 3 {
            return Err(RioError::InvalidParameter("coarsening needs an odd node count".into()));
        }
        Grid::new((self.n() - 1) / 2 + 1, self.t_min)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n() == other.n() && self.t_min == other.t_min
    }
}

/// A nonincreasing step function given by `(value, length)` pieces laid out
/// left to right from `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
    ends: Vec<f64>,
}

impl Profile {
    /// Sorts pieces by value, largest first, and merges equal levels.
    pub fn from_pieces(pieces: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut p: Vec<(f64, f64)> = pieces.into_iter().filter(|&(_, l)| l > 0.0).collect();
        p.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut values = Vec::with_capacity(p.len());
        let mut lens: Vec<f64> = Vec::with_capacity(p.len());
        for (v, l) in p {
            match values.last() {
                Some(&last) if last == v => *lens.last_mut().unwrap() += l,
                _ => {
                    values.push(v);
                    lens.push(l);
                }
            }
        }
        let mut acc = 0.0;
        let ends = lens
            .iter()
            .map(|l| {
                acc += l;
                acc
            })
            .collect();
        Profile { values, ends }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(value, start, end)` for each piece.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (v, if k == 0 { 0.0 } else { self.ends[k - 1] }, self.ends[k]))
    }

    pub fn mass(&self) -> f64 {
        self.pieces().map(|(v, a, b)| v * (b - a)).sum()
    }

    /// Measure of `{f > λ}`.
    pub fn distribution(&self, level: f64) -> f64 {
        self.pieces().filter(|&(v, _, _)| v > level).map(|(_, a, b)| b - a).sum()
    }

    /// Left-continuous value at `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let k = self.ends.partition_point(|&e| e < t).min(self.values.len() - 1);
        self.values[k]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Profile {
        let pieces: Vec<_> = self.pieces().map(|(v, a, b)| (f(v), b - a)).collect();
        Profile::from_pieces(pieces)
    }

    /// Cell means of the profile on `grid`, computed by exact overlaps.
    pub fn cell_means(&self, grid: &Grid) -> Vec<f64> {
        let mut out = vec![0.0; grid.n()];
        let mut k = 0;
        for (i, slot) in out.iter_mut().enumerate() {
            let (lo, hi) = grid.cell_bounds(i);
            while k < self.values.len() && self.ends[k] <= lo {
                k += 1;
            }
            let mut j = k;
            let mut mass = 0.0;
            let mut touched = 0;
            let mut start = if j == 0 { 0.0 } else { self.ends[j - 1] };
            while j < self.values.len() && start < hi {
                let ov = self.ends[j].min(hi) - start.max(lo);
                if ov > 0.0 {
                    mass += self.values[j] * ov;
                    touched += 1;
                }
                start = self.ends[j];
                j += 1;
            }
            *slot = if touched == 1 {
                self.values[self.ends.partition_point(|&e| e <= lo).min(self.values.len() - 1)]
            } else {
                mass / grid.cell_len(i)
            };
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub est_error: f64,
}

/// A nonnegative function on `(0,1)`: cell means on a [`Grid`], optional exact
/// node samples, and, when known, the exact profile of its decreasing
/// rearrangement.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    nodes: Option<Vec<f64>>,
    profile: Option<Arc<Profile>>,
    complement: Option<Arc<Complement>>,
}

/// `f^power = top − gap`, stored for nonincreasing functions whose values
/// near `0` sit on a large plateau, so that their oscillation is computed
/// from the gaps without cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Complement {
    pub top: f64,
    pub power: f64,
    pub node_gaps: Vec<f64>,
    pub mean_gaps: Vec<f64>,
}

fn check_values(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite() || *x < 0.0) {
        Some(i) => Err(RioError::InvalidParameter(format!("value {} at index {i} is not a finite nonnegative number", v[i]))),
        None => Ok(()),
    }
}

impl GridFunction {
    /// Piecewise-constant function with the given cell values (absolute values are taken).
    pub fn from_cells(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(RioError::GridMismatch);
        }
        let values: Vec<f64> = values.into_iter().map(f64::abs).collect();
        check_values(&values)?;
        Ok(GridFunction { grid, values, nodes: None, profile: None, complement: None })
    }

    /// Cell means together with separate node samples.
    pub fn with_nodes(grid: Arc<Grid>, means: Vec<f64>, nodes: Vec<f64>) -> Result<Self> {
        if means.len() != grid.n() || nodes.len() != grid.n() {
            return Err(RioError::GridMismatch);
        }
        check_values(&means)?;
        check_values(&nodes)?;
        Ok(GridFunction { grid, values: means, nodes: Some(nodes), profile: None, complement: None })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        let n = grid.n();
        Self::from_cells(grid, vec![c; n])
    }

    /// `Σ v·χ_(a,b)` with exact cell overlaps.
    pub fn from_steps(grid: Arc<Grid>, steps: &[(f64, f64, f64)]) -> Result<Self> {
        let n = grid.n();
        let mut means = vec![0.0; n];
        let mut nodes = vec![0.0; n];
        for &(a, b, v) in steps {
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err(RioError::InvalidParameter(format!("step ({a},{b}) outside (0,1)")));
            }
            let first = grid.cell_of(a);
            for i in first..n {
                let (lo, hi) = grid.cell_bounds(i);
                if lo >= b {
                    break;
                }
                let ov = hi.min(b) - lo.max(a);
                if ov > 0.0 {
                    means[i] += v.abs() * ov / grid.cell_len(i);
                }
                if a < hi && hi <= b {
                    nodes[i] += v.abs();
                }
            }
        }
        for (m, i) in means.iter_mut().zip(0..) {
            let (lo, hi) = grid.cell_bounds(i);
            if steps.iter().all(|&(a, b, _)| b <= lo || a >= hi || (a <= lo && hi <= b)) {
                *m = nodes[i];
            }
        }
        let mut cuts: Vec<f64> = steps.iter().flat_map(|&(a, b, _)| [a, b]).chain([0.0, 1.0]).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pieces = cuts.windows(2).map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let v: f64 = steps.iter().filter(|s| s.0 < mid && mid < s.1).map(|s| s.2.abs()).sum();
            (v, w[1] - w[0])
        });
        let profile = Profile::from_pieces(pieces.collect::<Vec<_>>());
        let mut out = Self::with_nodes(grid, means, nodes)?;
        out.profile = Some(Arc::new(profile));
        Ok(out)
    }

    pub fn indicator(grid: Arc<Grid>, a: f64, b: f64) -> Result<Self> {
        Self::from_steps(grid, &[(a, b, 1.0)])
    }

    /// Samples `|f|` at the nodes and averages it over each cell by
    /// Gauss–Legendre quadrature in `u = ln(e/t)`.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let means = cell_means_of(&grid, |_, t| f(t).abs())?;
        let nodes: Vec<f64> = grid.nodes().iter().map(|&t| f(t).abs()).collect();
        Self::with_nodes(grid, means, nodes)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    /// Cell means.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn node_values(&self) -> Vec<f64> {
        (0..self.grid.n()).map(|i| self.at_node(i)).collect()
    }
    pub fn has_node_samples(&self) -> bool {
        self.nodes.is_some()
    }
    pub fn at_node(&self, i: usize) -> f64 {
        match &self.nodes {
            Some(v) => v[i],
            None => self.values[i],
        }
    }
    pub fn profile(&self) -> Option<&Profile> {
        self.profile.as_deref()
    }
    pub fn complement(&self) -> Option<&Complement> {
        self.complement.as_deref()
    }

    /// Attaches an exact complement; the function must be nonincreasing.
    pub fn with_complement(mut self, c: Complement) -> Result<Self> {
        if c.node_gaps.len() != self.grid.n() || c.mean_gaps.len() != self.grid.n() {
            return Err(RioError::GridMismatch);
        }
        if let Some(i) = first_increase(&self.values) {
            return Err(RioError::NotDecreasing(i + 1));
        }
        self.complement = Some(Arc::new(c));
        Ok(self)
    }

    pub fn mass(&self) -> f64 {
        match &self.profile {
            Some(p) => p.mass(),
            None => self.values.iter().zip(self.grid.cell_lens()).map(|(v, l)| v * l).sum(),
        }
    }

    pub fn sup(&self) -> f64 {
        let m = self.values.iter().cloned().fold(0.0, f64::max);
        match &self.nodes {
            Some(v) => v.iter().cloned().fold(m, f64::max),
            None => m,
        }
    }

    /// Measure of `{f > λ}` for the step function this object represents.
    pub fn distribution(&self, level: f64) -> f64 {
        match &self.profile {
            Some(p) => p.distribution(level),
            None => self
                .values
                .iter()
                .zip(self.grid.cell_lens())
                .filter(|(v, _)| **v > level)
                .map(|(_, l)| l)
                .sum(),
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        first_increase(&self.values).is_none()
            && self.nodes.as_ref().map_or(true, |v| first_increase(v).is_none())
    }

    /// `c·f`.
    pub fn scaled(&self, c: f64) -> GridFunction {
        let c = c.abs();
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            nodes: self.nodes.as_ref().map(|v| v.iter().map(|x| x * c).collect()),
            profile: self.profile.as_ref().map(|p| Arc::new(p.map(|v| v * c))),
            complement: self.complement.as_ref().map(|k| {
                let m = c.powf(k.power);
                Arc::new(Complement {
                    top: k.top * m,
                    power: k.power,
                    node_gaps: k.node_gaps.iter().map(|x| x * m).collect(),
                    mean_gaps: k.mean_gaps.iter().map(|x| x * m).collect(),
                })
            }),
        }
    }

    /// `|f|^r`, applied levelwise so that rearrangement profiles stay exact.
    pub fn powf(&self, r: f64) -> GridFunction {
        if r == 1.0 {
            return self.clone();
        }
        let profile = self.profile.as_ref().map(|p| Arc::new(p.map(|v| v.powf(r))));
        let values = match &profile {
            Some(p) if self.is_nonincreasing() => p.cell_means(&self.grid),
            _ => self.values.iter().map(|v| v.powf(r)).collect(),
        };
        GridFunction {
            grid: self.grid.clone(),
            values,
            nodes: self.nodes.as_ref().map(|v| v.iter().map(|x| x.powf(r)).collect()),
            profile,
            complement: self
                .complement
                .as_ref()
                .map(|k| Arc::new(Complement { power: k.power / r, ..k.as_ref().clone() })),
        }
    }

    /// `∫_a^b f` for the piecewise-constant representation, with the
    /// difference from a pairwise-merged half-resolution sum as error estimate.
    pub fn integrate(&self, a: f64, b: f64) -> Result<Integral> {
        integrate(self, a, b)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value")?;
        for i in 0..self.grid.n() {
            writeln!(w, "{:.17e},{:.17e}", self.grid.node(i), self.at_node(i))?;
        }
        Ok(())
    }
}

fn first_increase(v: &[f64]) -> Option<usize> {
    v.windows(2)
        .position(|w| w[1] > w[0] * (1.0 + MONOTONE_SLACK) + f64::MIN_POSITIVE)
}

/// Cell averages of `f(cell, t)` in `u = ln(e/t)`; the first cell integrates
/// out to `t = 0`.
pub fn cell_means_of(grid: &Grid, f: impl Fn(usize, f64) -> f64) -> Result<Vec<f64>> {
    let n = grid.n();
    let h = grid.log_step();
    let width = 0.05_f64.min(h);
    let mut out = Vec::with_capacity(n);
    let u0 = grid.node_u(0);
    let num = quad::integrate_tail(|u| f(0, quad::t_of(u)) * (u0 - u).exp(), u0, 1.0);
    let den = quad::integrate_tail(|u| (u0 - u).exp(), u0, 1.0).unwrap_or(1.0);
    match num {
        Some(x) if x.is_finite() => out.push(x / den),
        _ => return Err(RioError::Divergent("function is not integrable near 0".into())),
    }
    for i in 1..n {
        let lo = grid.node_u(i);
        let hi = lo + h;
        let num = quad::integrate(|u| f(i, quad::t_of(u)) * (lo - u).exp(), lo, hi, width);
        let den = quad::integrate(|u| (lo - u).exp(), lo, hi, width);
        out.push(num / den);
    }
    Ok(out)
}

pub fn integrate(f: &GridFunction, a: f64, b: f64) -> Result<Integral> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(RioError::InvalidParameter(format!("invalid range ({a},{b})")));
    }
    let g = &f.grid;
    let overlap = |lo: f64, hi: f64| (hi.min(b) - lo.max(a)).max(0.0);
    let mut fine = 0.0;
    for i in g.cell_of(a)..g.n() {
        let (lo, hi) = g.cell_bounds(i);
        if lo >= b {
            break;
        }
        fine += f.values[i] * overlap(lo, hi);
    }
    let mut coarse = 0.0;
    let mut i = 0;
    while i < g.n() {
        let j = (i + 1).min(g.n() - 1);
        let lo = g.cell_bounds(i).0;
        let hi = g.node(j);
        if lo < b && hi > a {
            let mass = f.values[i] * g.cell_len(i) + if j > i { f.values[j] * g.cell_len(j) } else { 0.0 };
            coarse += mass / (hi - lo) * overlap(lo, hi);
        }
        i += 2;
    }
    Ok(Integral { value: fine, est_error: (fine - coarse).abs() })
}

/// `f*`: equimeasurable nonincreasing rearrangement. Nonincreasing inputs are
/// returned unchanged; otherwise the level sets are sorted into an exact
/// profile which is then averaged back onto the grid cells.
pub fn rearrange(f: &GridFunction) -> GridFunction {
    if f.is_nonincreasing() {
        return f.clone();
    }
    let profile = match &f.profile {
        Some(p) => p.as_ref().clone(),
        None => Profile::from_pieces(f.values.iter().cloned().zip(f.grid.cell_lens().iter().cloned())),
    };
    let values = profile.cell_means(&f.grid);
    let nodes = f.grid.nodes().iter().map(|&t| profile.value_at(t)).collect();
    GridFunction { grid: f.grid.clone(), values, nodes: Some(nodes), profile: Some(Arc::new(profile)), complement: None }
}

/// `f**(t) = (1/t)∫_0^t f*`, exact at the nodes; cell means are those of the
/// piecewise-constant input.
pub fn maximal_average(fstar: &GridFunction) -> Result<GridFunction> {
    if let Some(i) = first_increase(&fstar.values) {
        return Err(RioError::NotDecreasing(i + 1));
    }
    let g = &fstar.grid;
    let h = g.log_step();
    let v = &fstar.values;
    let mut nodes = Vec::with_capacity(g.n());
    let mut means = Vec::with_capacity(g.n());
    let mut cum = 0.0;
    for i in 0..g.n() {
        let prev = cum;
        cum += v[i] * g.cell_len(i);
        nodes.push(cum / g.node(i));
        if i == 0 {
            means.push(v[0]);
        } else {
            let c = (prev - v[i] * g.node(i - 1)).max(0.0);
            means.push((c * h + v[i] * g.cell_len(i)) / g.cell_len(i));
        }
    }
    GridFunction::with_nodes(g.clone(), means, nodes)
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(RioError::InvalidParameter(format!("r must lie in (0,1], got {r}")))
    }
}

/// `O(|f|^r, t) = (|f|^r)**(t) − (|f|^r)*(t)`.
pub fn oscillation(f: &GridFunction, r: f64) -> Result<GridFunction> {
    check_r(r)?;
    let gs = rearrange(&f.powf(r));
    let gss = maximal_average(&gs)?;
    let g = &f.grid;
    let h = g.log_step();
    let mut means = vec![0.0; g.n()];
    if let Some(k) = gs.complement().filter(|k| k.power == 1.0) {
        // g** − g* = gap − average of the gaps over (0, t); where g* is
        // already small next to g** the plain difference is the sharper one
        let mut nodes = vec![0.0; g.n()];
        let (mut cum, mut mass) = (0.0, 0.0);
        for i in 0..g.n() {
            let v = gs.values[i];
            if i > 0 {
                let lo = g.node(i - 1);
                let c = if 2.0 * v * lo <= mass { mass - v * lo } else { k.mean_gaps[i] * lo - cum };
                means[i] = c.max(0.0) * h / g.cell_len(i);
            }
            cum += k.mean_gaps[i] * g.cell_len(i);
            mass += v * g.cell_len(i);
            let (star, dbl) = (gs.at_node(i), gss.at_node(i));
            nodes[i] = if 2.0 * star <= dbl { dbl - star } else { (k.node_gaps[i] - cum / g.node(i)).max(0.0) };
        }
        return GridFunction::with_nodes(g.clone(), means, nodes);
    }
    let nodes = (0..g.n()).map(|i| (gss.at_node(i) - gs.at_node(i)).max(0.0)).collect();
    let mut cum = gs.values[0] * g.cell_len(0);
    for i in 1..g.n() {
        let c = (cum - gs.values[i] * g.node(i - 1)).max(0.0);
        means[i] = c * h / g.cell_len(i);
        cum += gs.values[i] * g.cell_len(i);
    }
    GridFunction::with_nodes(g.clone(), means, nodes)
}

/// `∫_{t_i}^1 O(|f|^r, s) ds/s` at every node, exact for the step function
/// `(|f|^r)*`.
pub fn oscillation_log_tail(f: &GridFunction, r: f64) -> Result<Vec<f64>> {
    check_r(r)?;
    let gs = rearrange(&f.powf(r));
    let g = &f.grid;
    let pieces: Vec<(f64, f64, f64)> = match gs.profile() {
        Some(p) => p.pieces().collect(),
        None => (0..g.n()).map(|i| (gs.values[i], g.cell_bounds(i).0, g.node(i))).collect(),
    };
    // O(s) = (F(a) − v·a)/s on each piece (a, b]
    let mut coef = Vec::with_capacity(pieces.len());
    let mut cum = 0.0;
    for &(v, a, b) in &pieces {
        coef.push((cum - v * a).max(0.0));
        cum += v * (b - a);
    }
    let piece_int = |k: usize, from: f64| {
        let (_, a, b) = pieces[k];
        let lo = a.max(from);
        if coef[k] == 0.0 || lo >= b {
            0.0
        } else {
            coef[k] * (b - lo) / (lo * b)
        }
    };
    let mut suffix = vec![0.0; pieces.len() + 1];
    for k in (0..pieces.len()).rev() {
        suffix[k] = suffix[k + 1] + piece_int(k, 0.0);
    }
    let ends: Vec<f64> = pieces.iter().map(|p| p.2).collect();
    Ok(g
        .nodes()
        .iter()
        .map(|&t| {
            let k = ends.partition_point(|&e| e <= t);
            if k >= pieces.len() {
                0.0
            } else {
                piece_int(k, t) + suffix[k + 1]
            }
        })
        .collect())
}
