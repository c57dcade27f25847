use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use clap::ValueEnum;
use rayon::prelude::*;
use rio_core::operators::{p_r_bound, p_r_ratios, RatioAudit};
use rio_core::regimes::{
    self, berezhnoi_check, classify as classify_triple, convexified_hansson_norm, critical_estimate_audit, hansson_norm,
    inclusion_audit, lr_norm, osc_norm, subcritical_equivalence_audit, supercritical_linfty_audit, supercritical_witness,
    trudinger_audit, CertificateRow, EmbeddingCertificate, HanssonParams, KernelVerdict, Regime, RegimeReport, Target,
    WitnessReport,
};
use rio_core::weights::{deviation, deviation_gate};
use rio_core::{Grid, GridFunction, Space};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::corpus::Corpus;
use crate::error::CliError;
use crate::json::format_float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    SupercriticalLinfty,
    SubcriticalEquivalence,
    CriticalLog,
    Trudinger,
    Hansson,
    HanssonConvexified,
    Berezhnoi,
    Mpus,
    TheoremInclu,
}

impl Inequality {
    pub const ALL: [Inequality; 9] = [
        Inequality::SupercriticalLinfty,
        Inequality::SubcriticalEquivalence,
        Inequality::CriticalLog,
        Inequality::Trudinger,
        Inequality::Hansson,
        Inequality::HanssonConvexified,
        Inequality::Berezhnoi,
        Inequality::Mpus,
        Inequality::TheoremInclu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Inequality::SupercriticalLinfty => "supercritical-linfty",
            Inequality::SubcriticalEquivalence => "subcritical-equivalence",
            Inequality::CriticalLog => "critical-log",
            Inequality::Trudinger => "trudinger",
            Inequality::Hansson => "hansson",
            Inequality::HanssonConvexified => "hansson-convexified",
            Inequality::Berezhnoi => "berezhnoi",
            Inequality::Mpus => "mpus",
            Inequality::TheoremInclu => "theorem-inclu",
        }
    }

    /// Regime an audit is restricted to, if any.
    pub fn gate(self) -> Option<Regime> {
        match self {
            Inequality::SupercriticalLinfty => Some(Regime::Supercritical),
            Inequality::SubcriticalEquivalence => Some(Regime::Subcritical),
            Inequality::CriticalLog | Inequality::Trudinger | Inequality::Hansson | Inequality::HanssonConvexified => {
                Some(Regime::Critical)
            }
            Inequality::Berezhnoi | Inequality::Mpus | Inequality::TheoremInclu => None,
        }
    }

    fn needs_corpus(self) -> bool {
        !matches!(self, Inequality::Berezhnoi | Inequality::TheoremInclu)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyOutput {
    pub space: String,
    pub weight: String,
    pub r: f64,
    pub regime: Regime,
    pub boyd_lower: f64,
    pub boyd_upper: f64,
    pub psi_lower: f64,
    pub psi_upper: f64,
    /// `null` when the kernel test was inconclusive.
    pub kernel_finite: Option<bool>,
    pub evidence: BTreeMap<String, f64>,
    pub grid_n: usize,
    pub grid_tmin: f64,
    pub seed: u64,
}

impl ClassifyOutput {
    fn new(cfg: &RunConfig, rep: &RegimeReport) -> Self {
        ClassifyOutput {
            space: cfg.space.to_string(),
            weight: cfg.weight.to_string(),
            r: cfg.r,
            regime: rep.regime,
            boyd_lower: rep.boyd.lower,
            boyd_upper: rep.boyd.upper,
            psi_lower: rep.psi_indices.lower,
            psi_upper: rep.psi_indices.upper,
            kernel_finite: match rep.kernel_finite {
                KernelVerdict::Finite => Some(true),
                KernelVerdict::Divergent => Some(false),
                KernelVerdict::Unknown => None,
            },
            evidence: rep.evidence.clone(),
            grid_n: cfg.grid_n,
            grid_tmin: cfg.grid_tmin(),
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutput {
    pub inequality: &'static str,
    pub space: String,
    pub weight: String,
    pub r: f64,
    pub regime: Regime,
    pub constant_forward: f64,
    pub constant_backward: Option<f64>,
    pub reference_bound: Option<f64>,
    pub worst_function: Option<usize>,
    pub corpus_size: usize,
    pub excluded: usize,
    pub grid_n: usize,
    pub grid_tmin: f64,
    pub seed: u64,
    pub details: Value,
    #[serde(skip)]
    pub rows: Vec<CertificateRow>,
}

impl VerifyOutput {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "function_id,lhs,rhs,ratio")?;
        for (k, row) in self.rows.iter().enumerate() {
            let ratio = row.ratio().map_or_else(String::new, format_float);
            writeln!(out, "{k},{},{},{ratio}", csv_float(row.lhs), csv_float(row.rhs))?;
        }
        Ok(())
    }
}

fn csv_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Grid, classification and (when needed) the sampled corpus of one run.
pub struct Context {
    pub cfg: RunConfig,
    pub grid: Arc<Grid>,
    pub report: RegimeReport,
    pub corpus: Vec<GridFunction>,
}

impl Context {
    pub fn new(cfg: RunConfig, with_corpus: bool) -> Result<Self, CliError> {
        let grid = cfg.grid()?;
        let report = classify_triple(&cfg.space, &cfg.weight, cfg.r, &grid)?;
        let corpus = if with_corpus {
            if cfg.corpus_size == 0 {
                return Err(CliError::Parse("--corpus must be positive".into()));
            }
            Corpus::generate(cfg.seed, cfg.corpus_size, &cfg.space, cfg.grid_tmin_log2.min(60.0) * 0.9)
                .build(&grid, &cfg.weight, cfg.r)?
        } else {
            Vec::new()
        };
        Ok(Context { cfg, grid, report, corpus })
    }

    fn output(&self, ineq: Inequality, details: Value) -> VerifyOutput {
        VerifyOutput {
            inequality: ineq.name(),
            space: self.cfg.space.to_string(),
            weight: self.cfg.weight.to_string(),
            r: self.cfg.r,
            regime: self.report.regime,
            constant_forward: f64::NAN,
            constant_backward: None,
            reference_bound: None,
            worst_function: None,
            corpus_size: self.corpus.len(),
            excluded: 0,
            grid_n: self.grid.n(),
            grid_tmin: self.grid.t_min(),
            seed: self.cfg.seed,
            details,
            rows: Vec::new(),
        }
    }

    fn from_certificate(&self, ineq: Inequality, cert: EmbeddingCertificate, details: Value) -> VerifyOutput {
        VerifyOutput {
            constant_forward: cert.constant_forward,
            constant_backward: cert.constant_backward,
            reference_bound: cert.reference_bound,
            worst_function: cert.worst_function,
            corpus_size: cert.corpus_size,
            excluded: cert.excluded,
            rows: cert.rows,
            ..self.output(ineq, details)
        }
    }

    fn from_pairs(&self, ineq: Inequality, pairs: Vec<(f64, f64)>, details: Value) -> VerifyOutput {
        let audit = RatioAudit::from_pairs(pairs.iter().cloned());
        VerifyOutput {
            constant_forward: audit.sup,
            worst_function: audit.worst,
            corpus_size: pairs.len(),
            excluded: audit.excluded,
            rows: pairs.into_iter().map(|(lhs, rhs)| CertificateRow { lhs, rhs }).collect(),
            ..self.output(ineq, details)
        }
    }

    fn target(&self) -> Result<Target, CliError> {
        Ok(match self.cfg.target.as_deref().map(str::trim) {
            None => Target::Space(self.cfg.space.clone()),
            Some("hansson") => Target::Hansson { alpha: self.cfg.alpha()? },
            Some("const") | Some("Linfty") => Target::Constant,
            Some(s) => Target::Space(s.parse::<Space>()?),
        })
    }

    pub fn verify(&self, ineq: Inequality) -> Result<VerifyOutput, CliError> {
        if let Some(want) = ineq.gate() {
            if self.report.regime != want {
                return Err(CliError::Refused(format!(
                    "{} applies to the {want} regime, but the triple is {}",
                    ineq.name(),
                    self.report.regime
                )));
            }
        }
        if ineq.needs_corpus() && self.corpus.is_empty() {
            return Err(CliError::Parse("--corpus must be positive".into()));
        }
        let (x, w, r) = (&self.cfg.space, &self.cfg.weight, self.cfg.r);
        let corpus = &self.corpus;
        Ok(match ineq {
            Inequality::SupercriticalLinfty => {
                self.from_certificate(ineq, supercritical_linfty_audit(x, w, r, corpus)?, json!({}))
            }
            Inequality::SubcriticalEquivalence => {
                self.from_certificate(ineq, subcritical_equivalence_audit(x, w, r, corpus)?, json!({}))
            }
            Inequality::CriticalLog => {
                let alpha = self.cfg.alpha()?;
                let cert = critical_estimate_audit(x, w, r, alpha, corpus)?;
                self.from_certificate(ineq, cert, json!({"alpha": alpha, "beta_prime": regimes::beta_prime(alpha, r)}))
            }
            Inequality::Trudinger => self.trudinger()?,
            Inequality::Hansson => self.hansson()?,
            Inequality::HanssonConvexified => self.hansson_convexified()?,
            Inequality::Berezhnoi => {
                let target = self.target()?;
                let value = berezhnoi_check(x, &target, w, r, &self.grid)?;
                VerifyOutput {
                    constant_forward: value,
                    corpus_size: 0,
                    ..self.output(ineq, json!({"target": target_name(&target), "finite": value.is_finite()}))
                }
            }
            Inequality::Mpus => {
                let pairs = p_r_ratios(w, x, r, corpus)?;
                let bound = p_r_bound(w, r)?;
                VerifyOutput {
                    reference_bound: Some(bound),
                    ..self.from_pairs(ineq, pairs, json!({"mpsi_integral": w.powf(r).mpsi_integral()?}))
                }
            }
            Inequality::TheoremInclu => {
                let y = match self.target()? {
                    Target::Space(y) => y,
                    _ => return Err(CliError::Parse("theorem-inclu needs a space descriptor as --target".into())),
                };
                let audit = inclusion_audit(x, w, r, &y, &self.grid)?;
                let worst = if audit.qbar.growing {
                    f64::INFINITY
                } else {
                    audit.qbar.ratios.iter().cloned().fold(0.0, f64::max)
                };
                VerifyOutput {
                    constant_forward: worst,
                    corpus_size: 0,
                    ..self.output(
                        ineq,
                        json!({"target": y.to_string(), "consistent": audit.consistent(), "audit": audit}),
                    )
                }
            }
        })
    }

    fn trudinger(&self) -> Result<VerifyOutput, CliError> {
        let (x, w, r) = (&self.cfg.space, &self.cfg.weight, self.cfg.r);
        let alpha = self.cfg.alpha()?;
        let c0 = critical_estimate_audit(x, w, r, alpha, &self.corpus)?.constant_forward;
        let c0 = if c0 > 0.0 && c0.is_finite() { c0 } else { 1.0 };
        let results = self
            .corpus
            .par_iter()
            .map(|f| trudinger_audit(x, w, r, alpha, c0, f))
            .collect::<Result<Vec<_>, _>>()?;
        let shifted = results.iter().map(|t| t.shifted).fold(0.0, f64::max);
        let first = results[0];
        let bound = 2.0 * 0.5f64.exp();
        Ok(VerifyOutput {
            reference_bound: Some(bound),
            ..self.from_pairs(
                Inequality::Trudinger,
                results.iter().map(|t| (t.plain, 1.0)).collect(),
                json!({
                    "alpha": alpha,
                    "beta_prime": first.beta_prime,
                    "critical_constant": c0,
                    "c": first.c,
                    "c_shifted": first.c_shifted,
                    "max_shifted_integral": shifted,
                }),
            )
        })
    }

    fn hansson(&self) -> Result<VerifyOutput, CliError> {
        let (x, w, r) = (&self.cfg.space, &self.cfg.weight, self.cfg.r);
        let alpha = self.cfg.alpha()?;
        let m = deviation(w, x, self.grid.clone());
        if !deviation_gate(&m) {
            return Err(CliError::Refused("the deviation function has nonzero indices".into()));
        }
        let rows = self
            .corpus
            .par_iter()
            .map(|f| Ok((hansson_norm(alpha, r, &m, f)?, osc_norm(x, w, r, f)? + lr_norm(f, r))))
            .collect::<Result<Vec<_>, rio_core::RioError>>()?;
        let ratios: Vec<f64> = rows.iter().map(|(h, _)| h.ratio).filter(|v| v.is_finite()).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let fundamental = berezhnoi_check(x, &Target::Hansson { alpha }, w, r, &self.grid)?;
        Ok(self.from_pairs(
            Inequality::Hansson,
            rows.iter().map(|(h, rhs)| (h.norm, *rhs)).collect(),
            json!({
                "alpha": alpha,
                "star_ratio_min": lo,
                "star_ratio_max": hi,
                "berezhnoi_hansson_target": fundamental,
            }),
        ))
    }

    fn hansson_convexified(&self) -> Result<VerifyOutput, CliError> {
        let (x, w, r) = (&self.cfg.space, &self.cfg.weight, self.cfg.r);
        let params = match (self.cfg.alpha, self.cfg.rho) {
            (Some(a), Some(p)) => HanssonParams::new(a, p, r)?,
            (Some(a), None) => HanssonParams::new(a, x.estimate_orders().upper.unwrap_or(a).min(a), r)?,
            _ => HanssonParams::from_space(x, r)?,
        };
        let m = deviation(w, x, self.grid.clone());
        let rows = self
            .corpus
            .par_iter()
            .map(|f| Ok((convexified_hansson_norm(x, &params, &m, f)?, hansson_norm(params.alpha, r, &m, f)?.norm)))
            .collect::<Result<Vec<_>, rio_core::RioError>>()?;
        Ok(self.from_pairs(Inequality::HanssonConvexified, rows, json!({"params": params})))
    }
}

fn target_name(t: &Target) -> String {
    match t {
        Target::Space(y) => y.to_string(),
        Target::Hansson { alpha } => format!("hansson(alpha={alpha})"),
        Target::Constant => "const".into(),
    }
}

pub fn classify(cfg: &RunConfig) -> Result<ClassifyOutput, CliError> {
    let ctx = Context::new(cfg.clone(), false)?;
    Ok(ClassifyOutput::new(cfg, &ctx.report))
}

pub fn verify(cfg: &RunConfig, ineq: Inequality) -> Result<VerifyOutput, CliError> {
    Context::new(cfg.clone(), ineq.needs_corpus())?.verify(ineq)
}

pub fn witness(cfg: &RunConfig) -> Result<WitnessReport, CliError> {
    let grid = cfg.grid()?;
    Ok(supercritical_witness(&cfg.space, &cfg.weight, cfg.r, cfg.n_terms, &grid)?)
}

pub fn write_witness_csv<W: Write>(rep: &WitnessReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,sup_norm,osc_norm,lr_norm")?;
    for row in &rep.rows {
        writeln!(out, "{},{},{},{}", row.n, csv_float(row.sup_norm), csv_float(row.osc_norm), csv_float(row.lr_norm))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditEntry {
    pub inequality: &'static str,
    pub status: &'static str,
    pub reason: Option<String>,
    pub result: Option<VerifyOutput>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub classification: ClassifyOutput,
    pub audits: Vec<AuditEntry>,
}

impl ReportBundle {
    pub fn all_failed(&self) -> bool {
        !self.audits.is_empty() && self.audits.iter().all(|a| a.status != "ok")
    }
}

/// Classification followed by every audit whose regime gate admits the triple.
pub fn report(cfg: &RunConfig) -> Result<ReportBundle, CliError> {
    let ctx = Context::new(cfg.clone(), true)?;
    let applicable: Vec<Inequality> = Inequality::ALL
        .into_iter()
        .filter(|i| i.gate().is_none_or(|g| g == ctx.report.regime))
        .collect();
    let audits = applicable
        .par_iter()
        .map(|&ineq| match ctx.verify(ineq) {
            Ok(out) => AuditEntry { inequality: ineq.name(), status: "ok", reason: None, result: Some(out) },
            Err(e) => AuditEntry {
                inequality: ineq.name(),
                status: if matches!(e, CliError::Refused(_)) { "refused" } else { "error" },
                reason: Some(e.to_string()),
                result: None,
            },
        })
        .collect();
    Ok(ReportBundle { classification: ClassifyOutput::new(cfg, &ctx.report), audits })
}
