use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rio_cli::Corpus;
use rio_core::grid::{maximal_average, oscillation, oscillation_log_tail, rearrange};
use rio_core::operators::{apply_qbar, oscillation_of_qbar, p_r_ratios, OperatorSpec, RatioAudit};
use rio_core::regimes::{
    berezhnoi_check, classify, convexified_hansson_norm, critical_estimate_audit, critical_ratio, exp_integral,
    hansson_condition_check, hansson_norm, hansson_norm_of_recipe, quasi_banach_identity, quasi_banach_reduce,
    subcritical_equivalence_audit, supercritical_linfty_audit, supercritical_witness, trudinger_audit, witness_functions,
    HanssonParams, KernelVerdict, Regime, Target,
};
use rio_core::spaces::pairing;
use rio_core::weights::deviation;
use rio_core::{quad, DeviationFunction, Grid, GridFunction, Space, Weight};

const ENGINE_ABS: f64 = 1e-14;
const ENGINE_MASS_REL: f64 = 1e-13;
const ENGINE_SECONDS: f64 = 5.0;
const FTC_REL: f64 = 1e-8;
const DUALITY_REL: f64 = 1e-6;
const HOELDER_SLACK: f64 = 1e-9;
const QBAR_OSC_REL: f64 = 1e-8;
const MPUS_FACTOR: f64 = 1.05;
const MPSI_CLOSED_REL: f64 = 1e-12;
const SUPER_GRID_DRIFT: f64 = 0.10;
const WITNESS_REL: f64 = 0.10;
const SUB_DRIFT: f64 = 0.05;
const SUB_R_FACTOR: f64 = 10.0;
const CRIT_DRIFT: f64 = 0.05;
const CRIT_EXTREMAL_SHARE: f64 = 0.80;
const TRUDINGER_CLOSED_REL: f64 = 1e-3;
const TRUDINGER_GRID_REL: f64 = 0.01;
const HANSSON_ONE_REL: f64 = 0.005;
const CONVEX_REL: f64 = 1e-10;
const QUASI_REL: f64 = 1e-12;

type Check = Result<String, String>;

fn default_grid() -> Arc<Grid> {
    Arc::new(Grid::standard())
}

fn refined(g: &Grid) -> Arc<Grid> {
    Arc::new(g.refined().unwrap())
}

fn lp(p: f64) -> Space {
    Space::lp(p).unwrap()
}

fn psi(gamma: f64) -> Weight {
    Weight::power(gamma).unwrap()
}

fn corpus(seed: u64, size: usize, x: &Space) -> Corpus {
    Corpus::generate(seed, size, x, 36.0)
}

fn build(c: &Corpus, g: &Arc<Grid>, w: &Weight, r: f64) -> Vec<GridFunction> {
    c.build(g, w, r).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_steps(rng: &mut ChaCha8Rng) -> Vec<(f64, f64, f64)> {
    let levels = rng.gen_range(5..=50);
    (0..levels)
        .map(|_| {
            let (x, y) = (rng.gen_range(0.0..38.0), rng.gen_range(0.0..38.0));
            let (a, b) = (2f64.powf(-f64::max(x, y) - 0.05), 2f64.powf(-f64::min(x, y) - 0.01));
            (a, b, rng.gen_range(0.0..10.0))
        })
        .collect()
}

/// `|{Σ c_k χ_(a_k,b_k) > λ}|` from the breakpoints.
fn step_distribution(steps: &[(f64, f64, f64)], level: f64) -> f64 {
    let mut cuts: Vec<f64> = steps.iter().flat_map(|s| [s.0, s.1]).chain([0.0, 1.0]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            steps.iter().filter(|s| s.0 < mid && mid < s.1).map(|s| s.2).sum::<f64>() > level
        })
        .map(|w| w[1] - w[0])
        .sum()
}

fn rearrangement_engine() -> Check {
    let start = Instant::now();
    let g = default_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut dist_err, mut mass_err, mut order_violations) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..1000 {
        let steps = random_steps(&mut rng);
        let fs = rearrange(&GridFunction::from_steps(g.clone(), &steps).unwrap());
        let fss = maximal_average(&fs).unwrap();
        let mut levels: Vec<f64> = steps.iter().map(|s| s.2).collect();
        levels.extend((0..4).map(|_| rng.gen_range(0.0..20.0)));
        for l in levels {
            dist_err = dist_err.max((fs.distribution(l) - step_distribution(&steps, l)).abs());
        }
        let mass: f64 = steps.iter().map(|s| s.2 * (s.1 - s.0)).sum();
        mass_err = mass_err.max(rel(fs.mass(), mass));
        order_violations += (0..g.n())
            .filter(|&i| fs.at_node(i) > fss.at_node(i) * (1.0 + 1e-12) || fs.values()[i] > fss.values()[i] * (1.0 + 1e-12))
            .count();
        if !(fs.is_nonincreasing() && fss.is_nonincreasing()) {
            order_violations += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        dist_err <= ENGINE_ABS && mass_err <= ENGINE_MASS_REL && order_violations == 0 && secs < ENGINE_SECONDS,
        format!("distribution err {dist_err:.1e}, mass rel err {mass_err:.1e}, f*>f** violations {order_violations}, {secs:.2}s"),
    )
}

fn ftc_identity() -> Check {
    let g = default_grid();
    let x = lp(2.0);
    let mut worst = 0.0f64;
    for r in [1.0, 0.5] {
        for f in build(&corpus(2, 100, &x), &g, &psi(0.5), r) {
            let gss = maximal_average(&rearrange(&f.powf(r))).unwrap();
            let tail = oscillation_log_tail(&f, r).unwrap();
            let end = gss.at_node(g.n() - 1);
            for i in 0..g.n() {
                let lhs = gss.at_node(i);
                if lhs > 0.0 {
                    worst = worst.max((lhs - tail[i] - end).abs() / lhs);
                }
            }
        }
    }
    ensure(worst <= FTC_REL, format!("max relative residual {worst:.2e} over 100 functions, r in {{1, 1/2}}"))
}

fn catalog() -> Vec<Space> {
    [
        "Lp:1.5", "Lp:2", "Lp:4", "Lorentz:3,2", "Lorentz:2,4", "Lorentz:4,4", "Zygmund:2,1", "Zygmund:3,-0.5", "ExpL:1",
        "ExpL:2",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect()
}

fn duality_and_hoelder() -> Check {
    let g = default_grid();
    let (mut worst, mut violations, mut pairs) = (0.0f64, 0usize, 0usize);
    let (mut below, mut indicator_err) = (0usize, 0.0f64);
    let mut tightest = (0.0, String::new());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for x in catalog() {
        let d = x.associate().unwrap();
        for &t in g.nodes() {
            let prod = x.fundamental(t) * d.fundamental(t);
            if x.functional_is_norm() {
                worst = worst.max((prod - t).abs() / t);
            } else if prod < t * (1.0 - DUALITY_REL) {
                below += 1;
            }
        }
        for k in [1, 5, 20, 39] {
            let t = g.node(g.n() - 1 - k * g.n() / 40);
            let chi = GridFunction::from_steps(g.clone(), &[(0.0, t, 1.0)]).unwrap();
            for s in [&x, &d] {
                indicator_err = indicator_err.max((s.norm(&chi) / s.fundamental(t) - 1.0).abs());
            }
        }
        for _ in 0..50 {
            let f = GridFunction::from_steps(g.clone(), &random_steps(&mut rng)).unwrap();
            let h = GridFunction::from_steps(g.clone(), &random_steps(&mut rng)).unwrap();
            let q = pairing(&f, &h).unwrap() / (x.norm(&f) * d.norm(&h));
            if q > 1.0 + HOELDER_SLACK {
                violations += 1;
            }
            if q > tightest.0 {
                tightest = (q, x.to_string());
            }
            pairs += 1;
        }
    }
    ensure(
        worst <= DUALITY_REL && below == 0 && indicator_err <= DUALITY_REL && violations == 0,
        format!(
            "max |φφ'-t|/t {worst:.1e} (normed functionals), φφ'<t {below}; ‖χ‖ vs φ {indicator_err:.1e}; Hölder violations {violations}/{pairs}, tightest pairing/bound {:.12} in {}",
            tightest.0, tightest.1
        ),
    )
}

fn qbar_oscillation() -> Check {
    let g = default_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut fs: Vec<GridFunction> = (0..10).map(|_| GridFunction::from_steps(g.clone(), &random_steps(&mut rng)).unwrap()).collect();
    for k in [1, 10, 30] {
        fs.push(GridFunction::indicator(g.clone(), 0.0, 2f64.powi(-k)).unwrap());
    }
    fs.push(GridFunction::from_fn(g.clone(), |t| t.max(1e-9).powf(-0.3)).unwrap());
    let mut worst = 0.0f64;
    for gamma in [0.3, 0.5, 0.7] {
        for r in [1.0, 0.5] {
            let spec = OperatorSpec::qbar(psi(gamma), r).unwrap();
            for f in &fs {
                let lhs = oscillation(&apply_qbar(&spec, f).unwrap(), r).unwrap();
                let rhs = oscillation_of_qbar(&spec, f).unwrap();
                for i in 0..g.n() {
                    let (a, b) = (lhs.at_node(i), rhs.at_node(i));
                    if b > 0.0 {
                        worst = worst.max((a - b).abs() / b);
                    }
                }
            }
        }
    }
    ensure(worst <= QBAR_OSC_REL, format!("max relative deviation {worst:.2e} over 14 functions × 6 cases"))
}

fn mpus_constant() -> Check {
    let g = default_grid();
    let x = lp(2.0);
    let mut parts = Vec::new();
    let mut ok = true;
    for gamma in [0.3, 0.5, 0.7] {
        let w = psi(gamma);
        let closed = w.mpsi_integral().unwrap();
        let audit = RatioAudit::from_pairs(p_r_ratios(&w, &x, 1.0, &build(&corpus(5, 100, &x), &g, &w, 1.0)).unwrap());
        ok &= rel(closed, 1.0 / gamma) <= MPSI_CLOSED_REL && audit.sup <= MPUS_FACTOR * closed;
        parts.push(format!("γ={gamma}: sup {:.4} vs ∫m={:.4}", audit.sup, closed));
    }
    ensure(ok, parts.join("; "))
}

fn parametric_grid() -> Vec<(f64, f64, f64)> {
    let mut cells = Vec::new();
    for p in [1.5, 2.0, 3.0, 4.0, 6.0] {
        let ip: f64 = 1.0 / p;
        for d in [-0.6, -0.3, 0.0, 0.3, 0.6] {
            cells.push((p, ip + d * ip.min(1.0 - ip), d));
        }
    }
    cells
}

fn classifier() -> Check {
    let g = default_grid();
    let mut bad = Vec::new();
    for (p, gamma, d) in parametric_grid() {
        let rep = classify(&lp(p), &psi(gamma), 1.0, &g).unwrap();
        let want = match d {
            d if d > 0.0 => Regime::Supercritical,
            d if d < 0.0 => Regime::Subcritical,
            _ => Regime::Critical,
        };
        // s^{γ-1} lies in L^{p'}(0,1) exactly when (γ-1)p' + 1 > 0
        let finite = (gamma - 1.0) * p / (p - 1.0) + 1.0 > 1e-12;
        let verdict = if finite { KernelVerdict::Finite } else { KernelVerdict::Divergent };
        if rep.regime != want || rep.kernel_finite != verdict {
            bad.push(format!("p={p} γ={gamma:.3}: {} / {}", rep.regime, rep.kernel_finite));
        }
    }
    ensure(bad.is_empty(), if bad.is_empty() { "25/25 cells".into() } else { bad.join("; ") })
}

fn rio_exit(args: &[&str]) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_rio")).args(args).output().ok()?.status.code()
}

fn supercritical() -> Check {
    let (x, w) = (lp(2.0), psi(0.7));
    let c = corpus(7, 100, &x);
    let g = default_grid();
    let coarse = supercritical_linfty_audit(&x, &w, 1.0, &build(&c, &g, &w, 1.0)).unwrap();
    let fine = supercritical_linfty_audit(&x, &w, 1.0, &build(&c, &refined(&g), &w, 1.0)).unwrap();
    let bound = coarse.reference_bound.unwrap();
    let code = rio_exit(&["witness", "--space", "Lp:2", "--weight", "psi:gamma=0.7", "--grid-n", "1024"]);
    let drift = rel(coarse.constant_forward, fine.constant_forward);
    ensure(
        coarse.constant_forward.is_finite() && drift <= SUPER_GRID_DRIFT && coarse.constant_forward <= bound && code == Some(4),
        format!(
            "constant {:.4} (refined {:.4}, drift {:.2}%), reference bound {bound:.4}, witness exit {code:?}",
            coarse.constant_forward,
            fine.constant_forward,
            100.0 * drift
        ),
    )
}

fn critical_witness() -> Check {
    let rep = supercritical_witness(&lp(2.0), &psi(0.5), 1.0, 20, &default_grid()).unwrap();
    let mut worst = 0.0f64;
    for row in rep.rows.iter().filter(|r| r.n >= 5) {
        worst = worst.max(rel(row.sup_norm, (row.n as f64 * 2f64.ln()).sqrt()));
    }
    let osc = rep.rows.iter().map(|r| r.osc_norm).fold(0.0, f64::max);
    let increasing = rep.rows.windows(2).all(|w| w[1].sup_norm > w[0].sup_norm);
    ensure(
        worst <= WITNESS_REL && osc <= rep.osc_bound && increasing,
        format!("max deviation from (n ln 2)^(1/2) {:.2}%, max osc norm {osc:.4} ≤ {:.4}", 100.0 * worst, rep.osc_bound),
    )
}

fn subcritical() -> Check {
    let (x, w) = (lp(2.0), psi(0.3));
    let g = default_grid();
    let mut consts = Vec::new();
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [1.0, 0.5] {
        let small = corpus(9, 100, &x);
        let big = corpus(9, 1000, &x);
        let base = subcritical_equivalence_audit(&x, &w, r, &build(&small, &g, &w, r)).unwrap();
        let fine = subcritical_equivalence_audit(&x, &w, r, &build(&small, &refined(&g), &w, r)).unwrap();
        let wide = subcritical_equivalence_audit(&x, &w, r, &build(&big, &g, &w, r)).unwrap();
        let (f0, b0) = (base.constant_forward, base.constant_backward.unwrap());
        let drift = [
            rel(f0, fine.constant_forward),
            rel(b0, fine.constant_backward.unwrap()),
            rel(f0, wide.constant_forward),
            rel(b0, wide.constant_backward.unwrap()),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        ok &= f0.is_finite() && b0.is_finite() && drift <= SUB_DRIFT;
        parts.push(format!("r={r}: forward {f0:.4}, backward {b0:.4}, max drift {:.2}%", 100.0 * drift));
        consts.push((f0, b0));
    }
    let spread = (consts[0].0 / consts[1].0).max(consts[1].0 / consts[0].0).max((consts[0].1 / consts[1].1).max(consts[1].1 / consts[0].1));
    ok &= spread <= SUB_R_FACTOR;
    parts.push(format!("r-spread {spread:.2}"));
    ensure(ok, parts.join("; "))
}

fn critical_log() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [2.0, 3.0] {
        let (x, w) = (lp(p), psi(1.0 / p));
        let c = corpus(10, 100, &x);
        let mut sups = Vec::new();
        let mut extremal = 0.0;
        for g in [default_grid(), refined(&default_grid())] {
            let cert = critical_estimate_audit(&x, &w, 1.0, p, &build(&c, &g, &w, 1.0)).unwrap();
            let m = deviation(&w, &x, g.clone());
            let ns: Vec<usize> = (5..=20).collect();
            let fam = witness_functions(&x, &w, 1.0, &g, &ns).unwrap();
            let best = fam
                .iter()
                .map(|f| {
                    let (l, r) = critical_ratio(&x, &w, 1.0, p, &m, f).unwrap();
                    l / r
                })
                .fold(0.0, f64::max);
            extremal = best;
            sups.push(cert.constant_forward.max(best));
        }
        let drift = rel(sups[0], sups[1]);
        let share = extremal / sups[1];
        ok &= sups[0].is_finite() && drift <= CRIT_DRIFT && share >= CRIT_EXTREMAL_SHARE;
        parts.push(format!("p={p}: constant {:.4}, drift {:.2}%, extremal share {:.1}%", sups[0], 100.0 * drift, 100.0 * share));
    }
    ensure(ok, parts.join("; "))
}

fn trudinger() -> Check {
    let g = default_grid();
    let mut closed_err = 0.0f64;
    for c in [0.25, 0.5, 0.75] {
        let v = exp_integral(&g, |_, t| (c * quad::u_of(t)).exp());
        closed_err = closed_err.max(rel(v, c.exp() / (1.0 - c)));
    }
    let (x, w) = (lp(2.0), psi(0.5));
    let c = corpus(11, 100, &x);
    let coarse = build(&c, &g, &w, 1.0);
    let c0 = critical_estimate_audit(&x, &w, 1.0, 2.0, &coarse).unwrap().constant_forward;
    let fine = build(&c, &refined(&g), &w, 1.0);
    let (mut drift, mut finite, mut worst) = (0.0f64, true, 0.0f64);
    for (a, b) in coarse.iter().zip(&fine) {
        let (ta, tb) = (trudinger_audit(&x, &w, 1.0, 2.0, c0, a).unwrap(), trudinger_audit(&x, &w, 1.0, 2.0, c0, b).unwrap());
        finite &= ta.plain.is_finite() && ta.shifted.is_finite();
        drift = drift.max(rel(ta.plain, tb.plain)).max(rel(ta.shifted, tb.shifted));
        worst = worst.max(ta.plain);
    }
    let geometric = 2.0 * 0.5f64.exp();
    ensure(
        closed_err <= TRUDINGER_CLOSED_REL && finite && drift <= TRUDINGER_GRID_REL,
        format!(
            "closed form err {:.3}%; corpus grid drift {:.3}%, max plain integral {worst:.4} (geometric bound {geometric:.4})",
            100.0 * closed_err,
            100.0 * drift
        ),
    )
}

fn hansson() -> Check {
    let g = default_grid();
    let (x, w) = (lp(2.0), psi(0.5));
    let ones = DeviationFunction::from_values(g.clone(), vec![1.0; g.n()]).unwrap();
    let one = hansson_norm(2.0, 1.0, &ones, &GridFunction::constant(g.clone(), 1.0).unwrap()).unwrap().norm;
    let divergent =
        hansson_norm_of_recipe(2.0, 1.0, &w, &x, &g, |h| GridFunction::from_fn(h.clone(), |t| quad::u_of(t).sqrt())).unwrap();
    let m = deviation(&w, &x, g.clone());
    let ratios: Vec<f64> =
        build(&corpus(12, 100, &x), &g, &w, 1.0).iter().map(|f| hansson_norm(2.0, 1.0, &m, f).unwrap().ratio).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let target = Target::Hansson { alpha: 2.0 };
    let bz = berezhnoi_check(&x, &target, &w, 1.0, &g).unwrap();
    let cond = hansson_condition_check(2.0, 1.0, &w, &x, &target, &g).unwrap();
    ensure(
        rel(one, 1.0) <= HANSSON_ONE_REL && divergent.is_infinite() && lo > 0.0 && hi.is_finite() && bz.is_finite() && cond.is_finite(),
        format!(
            "‖1‖ = {one:.5}; (ln e/t)^(1/2) norm {divergent}; f**/f* ratio in [{lo:.3}, {hi:.3}]; Berezhnoi sup {bz:.4}; fundamental condition {cond:.4}"
        ),
    )
}

fn convexified_hansson() -> Check {
    let g = default_grid();
    let mut worst = 0.0f64;
    let mut generic = 0.0f64;
    for p in [2.0, 3.0] {
        let (x, w) = (lp(p), psi(1.0 / p));
        let m = deviation(&w, &x, g.clone());
        let params = HanssonParams::from_space(&x, 1.0).unwrap();
        let same: Space = format!("Lorentz:{p},{p}").parse().unwrap();
        for f in build(&corpus(13, 50, &x), &g, &w, 1.0) {
            let conv = convexified_hansson_norm(&x, &params, &m, &f).unwrap();
            let intrinsic = hansson_norm(p, 1.0, &m, &f).unwrap().norm;
            worst = worst.max(rel(conv, intrinsic));
            generic = generic.max(rel(convexified_hansson_norm(&same, &params, &m, &f).unwrap(), intrinsic));
        }
    }
    let (x, w) = ("Lorentz:2,4".parse::<Space>().unwrap(), psi(0.5));
    let params = HanssonParams::from_space(&x, 1.0).unwrap();
    let m = deviation(&w, &x, g.clone());
    let pairs: Vec<(f64, f64)> = build(&corpus(14, 50, &x), &g, &w, 1.0)
        .iter()
        .map(|f| (convexified_hansson_norm(&x, &params, &m, f).unwrap(), hansson_norm(params.alpha, 1.0, &m, f).unwrap().norm))
        .collect();
    let dom = RatioAudit::from_pairs(pairs).sup;
    ensure(
        worst <= CONVEX_REL && dom.is_finite(),
        format!(
            "s=1 agreement {worst:.1e} (Λ-route agreement {generic:.1e}); Lorentz:2,4 domination constant {dom:.4} (s={})",
            params.s
        ),
    )
}

fn quasi_banach() -> Check {
    let g = default_grid();
    let mut worst = 0.0f64;
    for (x, gamma) in [(lp(1.0), 0.6), (lp(0.75), 0.4)] {
        let w = psi(gamma);
        for f in build(&corpus(15, 100, &x), &g, &w, 0.5) {
            let (a, b) = quasi_banach_identity(&x, &w, 0.5, &f).unwrap();
            worst = worst.max(rel(a, b));
        }
    }
    let mut disagreements = 0;
    for (p, gamma, _) in parametric_grid() {
        for r in [1.0, 0.5] {
            let (x, w) = (lp(p), psi(gamma));
            let (xr, wr, one) = quasi_banach_reduce(&x, &w, r).unwrap();
            if classify(&x, &w, r, &g).unwrap().regime != classify(&xr, &wr, one, &g).unwrap().regime {
                disagreements += 1;
            }
        }
    }
    ensure(
        worst <= QUASI_REL && disagreements == 0,
        format!("identity residual {worst:.1e} over 200 functions; classifier disagreements {disagreements}/50"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 14] = [
        ("rearrangement engine", rearrangement_engine),
        ("oscillation FTC identity", ftc_identity),
        ("duality and Hölder", duality_and_hoelder),
        ("Q̄ oscillation identity", qbar_oscillation),
        ("P_r constant", mpus_constant),
        ("regime classifier", classifier),
        ("supercritical L∞ embedding", supercritical),
        ("critical witness", critical_witness),
        ("subcritical equivalence", subcritical),
        ("critical log estimate", critical_log),
        ("Trudinger integrals", trudinger),
        ("Hansson target", hansson),
        ("convexified Hansson target", convexified_hansson),
        ("quasi-Banach reduction", quasi_banach),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1}s]", k + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1}s]", k + 1)
            }
        }
    }
    println!("acceptance: {}/{} passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
