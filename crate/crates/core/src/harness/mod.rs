//! End-to-end experiments: weight generators, theorem verification sweeps
//! and the kernel domination probe.
//!
//! Every sweep instance becomes one row. The left side of both theorems is
//! estimated through sparse operators: for each adjacent dyadic system a
//! small catalog of sparse families is drawn (stopping cubes of `sigma`, of
//! `w`, of a seeded random function, and the top cube alone) and the largest
//! norm over the catalog is reported.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{build_family, DyadicFamily};
use crate::error::{Error, Result};
use crate::orlicz::{bp_constant, power_complement_bp, YoungFunction};
use crate::scalar::conjugate;
use crate::space::{Space, SpaceProfile};
use crate::sparse::{
    extract_sparse, norm_exact_p2, norm_lower_bound, testing_constants, SparseFamily,
};
use crate::weights::{
    ap_constant, bump_constant, compose_rhs, weak_ainfty_constant, BumpSide, Scope, WeightPair,
};

pub mod config;
pub mod inspect;
pub mod report;

pub use config::{
    BackendChoice, BumpSpec, DyadicSpec, ExperimentConfig, Format, MetricKind, Model, NormSpec,
    OutputSpec, SpaceSpec, Sweep, WeightSpec,
};
pub use report::{emit_report, from_csv, to_csv, to_table, ReportRow};

/// Default multiplier turning the testing sum into an upper norm estimate.
pub const C_TEST: f64 = 0.6296634853487271;

/// `r` values of the blow-up sweep as `r` decreases to 1.
pub const SLOPE_RS: [f64; 4] = [1.5, 1.25, 1.125, 1.0625];

/// Samples a weight on the points of `space`.
pub fn generate_weight(spec: &WeightSpec, space: &Space<f64>, seed: u64) -> Result<Vec<f64>> {
    let n = space.len();
    let first = |i: usize| space.coords(i)[0];
    let w = match *spec {
        WeightSpec::Constant { c } => vec![c; n],
        WeightSpec::Power { a, x0, floor } => {
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let d = distance_to(space, i, x0);
                if d == 0.0 && a < 0.0 && floor == 0.0 {
                    return Err(Error::Config(format!(
                        "|x - {x0}|^{a} is infinite at point {i}"
                    )));
                }
                out.push(d.powf(a) + floor);
            }
            out
        }
        WeightSpec::Indicator { lo, hi } => (0..n)
            .map(|i| {
                if (lo..hi).contains(&first(i)) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
        WeightSpec::TwoValue { m, split } => (0..n)
            .map(|i| if first(i) < split { m } else { 1.0 })
            .collect(),
        WeightSpec::LognormalRandom { s } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| (s * rng.sample::<f64, _>(StandardNormal)).exp())
                .collect()
        }
    };
    Ok(w)
}

fn distance_to(space: &Space<f64>, i: usize, x0: f64) -> f64 {
    space
        .coords(i)
        .iter()
        .map(|&x| {
            let d = (x - x0).abs();
            match space.period() {
                Some(per) => {
                    let d = d % per;
                    d.min(per - d)
                }
                None => d,
            }
        })
        .map(|d| d * d)
        .sum::<f64>()
        .sqrt()
}

/// One point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: String,
    pub p: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// The swept `r`, used for both bumps.
    pub r: Option<f64>,
    pub w: WeightSpec,
    pub sigma: WeightSpec,
    pub bumps: BumpSpec,
}

/// The cartesian product of the sweep axes, each sorted ascending, in the
/// order `p, a, b, r`.
pub fn instances(cfg: &ExperimentConfig) -> Result<Vec<Instance>> {
    cfg.validate()?;
    let sorted = |v: &Option<Vec<f64>>| -> Vec<Option<f64>> {
        match v {
            Some(v) => {
                let mut v = v.clone();
                v.sort_by(f64::total_cmp);
                v.into_iter().map(Some).collect()
            }
            None => vec![None],
        }
    };
    let mut out = Vec::new();
    for p in sorted(&cfg.sweep.p) {
        for a in sorted(&cfg.sweep.a) {
            for b in sorted(&cfg.sweep.b) {
                for r in sorted(&cfg.sweep.r) {
                    let p = p.unwrap_or(cfg.p);
                    let mut id = format!("p={p}");
                    for (k, v) in [("a", a), ("b", b), ("r", r)] {
                        if let Some(v) = v {
                            id.push_str(&format!(" {k}={v}"));
                        }
                    }
                    let w = match a {
                        Some(a) => cfg.w.with_exponent(a)?,
                        None => cfg.w.clone(),
                    };
                    let sigma = match b {
                        Some(b) => cfg.sigma.with_exponent(b)?,
                        None => cfg.sigma.clone(),
                    };
                    let bumps = match r {
                        Some(r) => BumpSpec::Powers { r, s: r },
                        None => cfg.bumps.clone(),
                    };
                    out.push(Instance {
                        id,
                        p,
                        a,
                        b,
                        r,
                        w,
                        sigma,
                        bumps,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// The space, its structure constants and the adjacent dyadic systems.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub space: Space<f64>,
    pub profile: SpaceProfile<f64>,
    pub family: DyadicFamily<f64>,
}

impl Workspace {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let space = cfg.space.build(cfg.seed)?;
        let profile = SpaceProfile::measure(&space)?;
        let family = build_family(&space, &profile, &cfg.dyadic.options(&space))?;
        Ok(Workspace {
            space,
            profile,
            family,
        })
    }

    /// Dilation used for weak A_inf characteristics.
    pub fn delta(&self) -> f64 {
        2.0 * self.profile.kappa()
    }
}

/// A labelled sparse family, e.g. `t1:sigma`.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub label: String,
    pub family: SparseFamily<f64>,
}

/// Per system: stopping cubes of `sigma`, `w` and a seeded random function,
/// then the top cube alone. Stopping families that cannot be formed (no mass
/// on the top cube) are left out.
pub fn sparse_catalog(
    pair: &WeightPair<f64>,
    ws: &Workspace,
    seed: u64,
) -> Result<Vec<CatalogEntry>> {
    let space = &ws.space;
    let mut out = Vec::new();
    for (t, sys) in ws.family.systems.iter().enumerate() {
        let root = sys.root();
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (t as u64 + 1).wrapping_mul(0x2545_F491_4F6C_DD1D));
        let noise: Vec<f64> = (0..space.len()).map(|_| rng.gen::<f64>()).collect();
        for (name, f) in [("sigma", &pair.sigma), ("w", &pair.w), ("f", &noise)] {
            match extract_sparse(f, sys, root, space) {
                Ok(family) => out.push(CatalogEntry {
                    label: format!("t{t}:{name}"),
                    family,
                }),
                Err(Error::Input(_)) | Err(Error::Precondition(_)) => {}
                Err(e) => return Err(e),
            }
        }
        out.push(CatalogEntry {
            label: format!("t{t}:top"),
            family: SparseFamily::new(sys, &[root], space)?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub instance: String,
    pub theorem: u8,
    pub p: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    /// Catalog entry attaining the reported norm.
    pub family: String,
    pub families: usize,
    pub ap: f64,
    pub weak_w: f64,
    pub weak_sigma: f64,
    pub bump_phi: Option<f64>,
    pub bump_psi: Option<f64>,
    pub bp_phi: Option<f64>,
    pub bp_psi: Option<f64>,
    pub t_sigma: f64,
    pub t_w: f64,
    /// `norm_lo == norm_hi` is the exact norm when set.
    pub exact: bool,
    pub norm_lo: f64,
    pub norm_hi: f64,
    pub rhs: f64,
    pub implied_lo: Option<f64>,
    pub implied_hi: Option<f64>,
    /// Second-theorem bump term at `r = 1 + 1/[sigma]_weak` over
    /// `[w,sigma]_{A_p}^{1/p} [sigma]_weak^{1/p}`.
    pub reduction: Option<f64>,
    pub degenerate: bool,
}

impl ReportRow for VerificationRow {
    fn axes(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("p", self.p)];
        out.extend(
            [("a", self.a), ("b", self.b), ("r", self.r)]
                .into_iter()
                .filter_map(|(k, v)| v.map(|v| (k, v))),
        );
        out
    }

    fn series_value(&self) -> Option<f64> {
        self.implied_hi
    }
}

impl VerificationRow {
    fn degenerate(inst: &Instance, theorem: u8) -> Self {
        let (r, s) = bump_rs(inst);
        VerificationRow {
            instance: inst.id.clone(),
            theorem,
            p: inst.p,
            a: inst.a,
            b: inst.b,
            r,
            s,
            family: String::new(),
            families: 0,
            ap: 0.0,
            weak_w: 0.0,
            weak_sigma: 0.0,
            bump_phi: None,
            bump_psi: None,
            bp_phi: None,
            bp_psi: None,
            t_sigma: 0.0,
            t_w: 0.0,
            exact: false,
            norm_lo: 0.0,
            norm_hi: 0.0,
            rhs: 0.0,
            implied_lo: None,
            implied_hi: None,
            reduction: None,
            degenerate: true,
        }
    }

    /// Broken invariants of this row, if any.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.degenerate {
            return out;
        }
        let slack = 1.0 + 1e-9;
        if self.norm_lo > 0.0 && !self.implied_lo.is_some_and(|c| c.is_finite() && c > 0.0) {
            out.push(format!(
                "{}: implied constant not finite and positive",
                self.instance
            ));
        }
        if self.norm_lo > self.norm_hi * slack {
            out.push(format!(
                "{}: norm interval [{}, {}] is empty",
                self.instance, self.norm_lo, self.norm_hi
            ));
        }
        if self.exact && self.t_sigma.max(self.t_w) > self.norm_hi * slack {
            out.push(format!(
                "{}: testing constant exceeds the exact norm",
                self.instance
            ));
        }
        out
    }
}

fn bump_rs(inst: &Instance) -> (Option<f64>, Option<f64>) {
    match inst.bumps {
        BumpSpec::Powers { r, s } => (Some(r), Some(s)),
        BumpSpec::Young { .. } => (None, None),
    }
}

/// Left side of either theorem over the catalog.
#[derive(Clone, Debug, PartialEq)]
pub struct Lhs {
    pub lo: f64,
    pub hi: f64,
    pub exact: bool,
    pub t_sigma: f64,
    pub t_w: f64,
    pub family: String,
}

/// Exact norms at `p = 2`; otherwise
/// `[lower bound, c_test max(p, p') / 2 (T_sigma + T_w)]`.
pub fn evaluate_lhs(
    pair: &WeightPair<f64>,
    p: f64,
    space: &Space<f64>,
    catalog: &[CatalogEntry],
    norm: &NormSpec,
    seed: u64,
) -> Result<Lhs> {
    let exact = (p - 2.0).abs() < 1e-12;
    let per: Vec<(f64, f64, f64)> = catalog
        .par_iter()
        .map(|e| {
            let t = testing_constants(&e.family, pair, p, space)?;
            let n = if exact {
                norm_exact_p2(&e.family, pair, space, norm.dense_cap)?
            } else {
                norm_lower_bound(&e.family, pair, p, norm.trials, seed, space)?
            };
            Ok((n, t.t_sigma, t.t_w))
        })
        .collect::<Result<_>>()?;
    let argmax = |key: &dyn Fn(&(f64, f64, f64)) -> f64| {
        per.iter()
            .enumerate()
            .fold(0, |bi, (i, v)| if key(v) > key(&per[bi]) { i } else { bi })
    };
    if per.is_empty() {
        return Ok(Lhs {
            lo: 0.0,
            hi: 0.0,
            exact,
            t_sigma: 0.0,
            t_w: 0.0,
            family: String::new(),
        });
    }
    let lhs = if exact {
        let i = argmax(&|v| v.0);
        let (n, ts, tw) = per[i];
        Lhs {
            lo: n,
            hi: n,
            exact,
            t_sigma: ts,
            t_w: tw,
            family: catalog[i].label.clone(),
        }
    } else {
        let lo = per.iter().map(|v| v.0).fold(0.0, f64::max);
        let i = argmax(&|v| v.1 + v.2);
        let (_, ts, tw) = per[i];
        Lhs {
            lo,
            hi: norm.c_test * p.max(p / (p - 1.0)) / 2.0 * (ts + tw),
            exact,
            t_sigma: ts,
            t_w: tw,
            family: catalog[i].label.clone(),
        }
    };
    Ok(lhs)
}

struct Prepared {
    inst: Instance,
    pair: WeightPair<f64>,
    keys: (String, String),
}

/// Weights per instance plus the weak A_inf value of every distinct weight.
fn prepare(
    cfg: &ExperimentConfig,
    ws: &Workspace,
    insts: Vec<Instance>,
) -> Result<(Vec<Prepared>, HashMap<String, f64>)> {
    let (w_seed, s_seed) = (cfg.seed, cfg.seed.wrapping_add(1));
    let key = |spec: &WeightSpec, seed: u64| {
        format!(
            "{}#{seed}",
            serde_json::to_string(spec).expect("plain data")
        )
    };
    let mut distinct: HashMap<String, Vec<f64>> = HashMap::new();
    let mut prepared = Vec::with_capacity(insts.len());
    for inst in insts {
        let at = Error::at(&inst.id);
        let w = generate_weight(&inst.w, &ws.space, w_seed).map_err(Error::at(&inst.id))?;
        let sigma = generate_weight(&inst.sigma, &ws.space, s_seed).map_err(Error::at(&inst.id))?;
        let keys = (key(&inst.w, w_seed), key(&inst.sigma, s_seed));
        distinct.entry(keys.0.clone()).or_insert_with(|| w.clone());
        distinct
            .entry(keys.1.clone())
            .or_insert_with(|| sigma.clone());
        let pair = WeightPair::new(&ws.space, w, sigma).map_err(at)?;
        prepared.push(Prepared { inst, pair, keys });
    }
    let mut entries: Vec<(String, Vec<f64>)> = distinct.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let delta = ws.delta();
    let weak = entries
        .par_iter()
        .map(|(k, w)| {
            let v = if w.iter().all(|v| *v == 0.0) {
                0.0
            } else {
                weak_ainfty_constant(w, delta, &ws.space)?.value
            };
            Ok((k.clone(), v))
        })
        .collect::<Result<HashMap<_, _>>>()?;
    Ok((prepared, weak))
}

struct Common {
    ap: f64,
    weak_w: f64,
    weak_sigma: f64,
    lhs: Lhs,
    families: usize,
}

fn common(
    cfg: &ExperimentConfig,
    ws: &Workspace,
    pr: &Prepared,
    weak: &HashMap<String, f64>,
) -> Result<Common> {
    let space = &ws.space;
    let catalog = sparse_catalog(&pr.pair, ws, cfg.seed)?;
    let lhs = evaluate_lhs(&pr.pair, pr.inst.p, space, &catalog, &cfg.norm, cfg.seed)?;
    let ap = ap_constant(&pr.pair, pr.inst.p, space, Scope::Balls)?.value;
    Ok(Common {
        ap,
        weak_w: weak[&pr.keys.0],
        weak_sigma: weak[&pr.keys.1],
        lhs,
        families: catalog.len(),
    })
}

fn base_row(pr: &Prepared, theorem: u8, c: &Common, rhs: f64) -> VerificationRow {
    let (r, s) = if theorem == 2 {
        bump_rs(&pr.inst)
    } else {
        (pr.inst.r, None)
    };
    let implied = |v: f64| if rhs > 0.0 { Some(v / rhs) } else { None };
    VerificationRow {
        instance: pr.inst.id.clone(),
        theorem,
        p: pr.inst.p,
        a: pr.inst.a,
        b: pr.inst.b,
        r,
        s,
        family: c.lhs.family.clone(),
        families: c.families,
        ap: c.ap,
        weak_w: c.weak_w,
        weak_sigma: c.weak_sigma,
        bump_phi: None,
        bump_psi: None,
        bp_phi: None,
        bp_psi: None,
        t_sigma: c.lhs.t_sigma,
        t_w: c.lhs.t_w,
        exact: c.lhs.exact,
        norm_lo: c.lhs.lo,
        norm_hi: c.lhs.hi,
        rhs,
        implied_lo: implied(c.lhs.lo),
        implied_hi: implied(c.lhs.hi),
        reduction: None,
        degenerate: false,
    }
}

/// One row per instance: the sparse-operator norm against
/// `[w,sigma]_{A_p}^{1/p} ([w]_weak^{1/p'} + [sigma]_weak^{1/p})`.
pub fn verify_theorem_1(cfg: &ExperimentConfig) -> Result<Vec<VerificationRow>> {
    let ws = Workspace::build(cfg)?;
    verify_theorem_1_in(cfg, &ws)
}

pub fn verify_theorem_1_in(cfg: &ExperimentConfig, ws: &Workspace) -> Result<Vec<VerificationRow>> {
    let (prepared, weak) = prepare(cfg, ws, instances(cfg)?)?;
    let one = |pr: &Prepared| -> Result<VerificationRow> {
        if pr.pair.is_degenerate() {
            return Ok(VerificationRow::degenerate(&pr.inst, 1));
        }
        let c = common(cfg, ws, pr, &weak)?;
        let rhs = compose_rhs(c.ap, c.weak_w, c.weak_sigma, pr.inst.p);
        Ok(base_row(pr, 1, &c, rhs))
    };
    prepared
        .par_iter()
        .map(|pr| one(pr).map_err(Error::at(&pr.inst.id)))
        .collect()
}

/// `[Phi-bar]_{B_p}` for the complement of `phi`; closed form for powers.
pub fn complement_bp(phi: &YoungFunction<f64>, p: f64) -> Result<f64> {
    match phi.power_exponent() {
        Some(q) if conjugate(q) < p => Ok(power_complement_bp(q, p)),
        Some(_) => Ok(f64::INFINITY),
        None => bp_constant(&phi.clone().complement(), p),
    }
}

/// `(Phi, Psi)` of an instance: `t^{p' r}`, `t^{p s}` or the configured pair.
pub fn bump_functions(inst: &Instance) -> Result<(YoungFunction<f64>, YoungFunction<f64>)> {
    let p = inst.p;
    match &inst.bumps {
        BumpSpec::Powers { r, s } => {
            if !(*r > 1.0 && *s > 1.0) {
                return Err(Error::Config(format!(
                    "bump exponents r = {r}, s = {s} must exceed 1"
                )));
            }
            Ok((
                YoungFunction::power(conjugate(p) * r)?,
                YoungFunction::power(p * s)?,
            ))
        }
        BumpSpec::Young { phi, psi } => Ok((phi.clone().validate()?, psi.clone().validate()?)),
    }
}

/// One row per instance: the sparse-operator norm against
/// `[w,sigma]_{Phi,p} [Phi-bar]_{B_p}^{1/p} + [sigma,w]_{Psi,p} [Psi-bar]_{B_p'}^{1/p'}`.
pub fn verify_theorem_2(cfg: &ExperimentConfig) -> Result<Vec<VerificationRow>> {
    let ws = Workspace::build(cfg)?;
    verify_theorem_2_in(cfg, &ws)
}

pub fn verify_theorem_2_in(cfg: &ExperimentConfig, ws: &Workspace) -> Result<Vec<VerificationRow>> {
    let insts = instances(cfg)?;
    // bump ranges are checked before any expensive work
    for inst in &insts {
        let (phi, psi) = bump_functions(inst).map_err(Error::at(&inst.id))?;
        let (bp_phi, bp_psi) = (
            complement_bp(&phi, inst.p)?,
            complement_bp(&psi, conjugate(inst.p))?,
        );
        if !bp_phi.is_finite() || !bp_psi.is_finite() {
            return Err(Error::at(&inst.id)(Error::Config(
                "bump outside the admissible range: B_p constant is infinite".into(),
            )));
        }
    }
    let (prepared, weak) = prepare(cfg, ws, insts)?;
    let space = &ws.space;
    let one = |pr: &Prepared| -> Result<VerificationRow> {
        if pr.pair.is_degenerate() {
            return Ok(VerificationRow::degenerate(&pr.inst, 2));
        }
        let p = pr.inst.p;
        let pc = conjugate(p);
        let (phi, psi) = bump_functions(&pr.inst)?;
        let bump_phi =
            bump_constant(&pr.pair, &phi, p, BumpSide::OnSigma, space, Scope::Balls)?.value;
        let bump_psi = bump_constant(&pr.pair, &psi, p, BumpSide::OnW, space, Scope::Balls)?.value;
        let bp_phi = complement_bp(&phi, p)?;
        let bp_psi = complement_bp(&psi, pc)?;
        let rhs = bump_phi * bp_phi.powf(1.0 / p) + bump_psi * bp_psi.powf(1.0 / pc);
        let c = common(cfg, ws, pr, &weak)?;
        let reduction = if c.weak_sigma > 0.0 && c.ap > 0.0 {
            let star = YoungFunction::power(pc * (1.0 + 1.0 / c.weak_sigma))?;
            let bump =
                bump_constant(&pr.pair, &star, p, BumpSide::OnSigma, space, Scope::Balls)?.value;
            let term = bump * complement_bp(&star, p)?.powf(1.0 / p);
            Some(term / (c.ap * c.weak_sigma).powf(1.0 / p))
        } else {
            None
        };
        let mut row = base_row(pr, 2, &c, rhs);
        row.bump_phi = Some(bump_phi);
        row.bump_psi = Some(bump_psi);
        row.bp_phi = Some(bp_phi);
        row.bp_psi = Some(bp_psi);
        row.reduction = reduction;
        Ok(row)
    };
    prepared
        .par_iter()
        .map(|pr| one(pr).map_err(Error::at(&pr.inst.id)))
        .collect()
}

/// Least-squares slope of `ln [Phi-bar]_{B_p}` against `ln (r - 1)` for
/// `Phi = t^{p' r}`, with the constants integrated numerically.
pub fn bp_blowup_slope(p: f64, rs: &[f64]) -> Result<f64> {
    if rs.len() < 2 || rs.iter().any(|r| !(*r > 1.0)) {
        return Err(Error::Config(
            "blow-up sweep needs at least two r > 1".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = rs
        .iter()
        .map(|&r| {
            let phi = YoungFunction::power(conjugate(p) * r)?.complement();
            Ok(((r - 1.0).ln(), bp_constant(&phi, p)?.ln()))
        })
        .collect::<Result<_>>()?;
    Ok(slope(&pts))
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|v| v.0).sum::<f64>() / n;
    let my = pts.iter().map(|v| v.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub degenerate: usize,
    /// Largest upper implied constant over nondegenerate rows.
    pub max_implied: f64,
    /// `max / min` implied constant over nondegenerate exact rows.
    pub spread: Option<f64>,
    pub min_reduction: Option<f64>,
    pub violations: Vec<String>,
}

pub fn summarize(rows: &[VerificationRow]) -> SweepSummary {
    let live: Vec<&VerificationRow> = rows.iter().filter(|r| !r.degenerate).collect();
    let max_implied = live.iter().filter_map(|r| r.implied_hi).fold(0.0, f64::max);
    let exact: Vec<f64> = live
        .iter()
        .filter(|r| r.exact)
        .filter_map(|r| r.implied_hi)
        .filter(|c| *c > 0.0)
        .collect();
    let spread = if exact.is_empty() {
        None
    } else {
        let hi = exact.iter().copied().fold(0.0, f64::max);
        let lo = exact.iter().copied().fold(f64::INFINITY, f64::min);
        Some(hi / lo)
    };
    let min_reduction = live.iter().filter_map(|r| r.reduction).reduce(f64::min);
    SweepSummary {
        rows: rows.len(),
        degenerate: rows.len() - live.len(),
        max_implied,
        spread,
        min_reduction,
        violations: rows.iter().flat_map(VerificationRow::violations).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub instance: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Catalog entry with the largest sparse norm.
    pub family: String,
    pub kernel_norm: f64,
    pub sparse_norm: f64,
    /// `kernel_norm / sparse_norm`, absent when both vanish.
    pub ratio: Option<f64>,
    pub degenerate: bool,
}

impl ReportRow for ProbeRow {
    fn axes(&self) -> Vec<(&'static str, f64)> {
        [("a", self.a), ("b", self.b)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect()
    }

    fn series_value(&self) -> Option<f64> {
        self.ratio
    }
}

/// `L^2(sigma) -> L^2(w)` norm of `f -> sum_y f(y) sigma(y) mu(y) / (x - y)`,
/// zero on the diagonal.
pub fn truncated_kernel_norm(
    pair: &WeightPair<f64>,
    space: &Space<f64>,
    cap: usize,
) -> Result<f64> {
    if space.dimension() != 1 {
        return Err(Error::Unsupported(
            "the truncated kernel probe needs a 1-D space".into(),
        ));
    }
    let n = space.len();
    if n > cap {
        return Err(Error::Size { n, cap });
    }
    let rows: Vec<usize> = (0..n).filter(|&x| pair.w[x] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&y| pair.sigma[y] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Ok(0.0);
    }
    let m = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        let (x, y) = (rows[i], cols[j]);
        if x == y {
            return 0.0;
        }
        let a = (pair.w[x] * space.mass(x)).sqrt();
        let b = (pair.sigma[y] * space.mass(y)).sqrt();
        a * b / (space.coords(x)[0] - space.coords(y)[0])
    });
    Ok(m.singular_values().iter().copied().fold(0.0, f64::max))
}

/// Ratio of the truncated `1/(x - y)` kernel norm to the best sparse norm
/// over the catalog, per instance, at `p = 2`.
pub fn sparse_domination_probe(cfg: &ExperimentConfig) -> Result<Vec<ProbeRow>> {
    cfg.validate()?;
    let space = cfg.space.build(cfg.seed)?;
    if space.dimension() != 1 {
        return Err(Error::Unsupported(
            "the truncated kernel probe needs a 1-D space".into(),
        ));
    }
    let ws = Workspace::build(cfg)?;
    sparse_domination_probe_in(cfg, &ws)
}

pub fn sparse_domination_probe_in(cfg: &ExperimentConfig, ws: &Workspace) -> Result<Vec<ProbeRow>> {
    let insts = instances(cfg)?;
    if insts.iter().any(|i| (i.p - 2.0).abs() > 1e-12) {
        return Err(Error::Config(
            "the domination probe runs at p = 2 only".into(),
        ));
    }
    let space = &ws.space;
    let one = |inst: &Instance| -> Result<ProbeRow> {
        let w = generate_weight(&inst.w, space, cfg.seed)?;
        let sigma = generate_weight(&inst.sigma, space, cfg.seed.wrapping_add(1))?;
        let pair = WeightPair::new(space, w, sigma)?;
        let kernel_norm = truncated_kernel_norm(&pair, space, cfg.norm.dense_cap)?;
        let catalog = sparse_catalog(&pair, ws, cfg.seed)?;
        let norms: Vec<f64> = catalog
            .par_iter()
            .map(|e| norm_exact_p2(&e.family, &pair, space, cfg.norm.dense_cap))
            .collect::<Result<_>>()?;
        let best = norms
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (i, &v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((i, v)),
            });
        let (family, sparse_norm) =
            best.map_or((String::new(), 0.0), |(i, v)| (catalog[i].label.clone(), v));
        let ratio = if sparse_norm > 0.0 {
            Some(kernel_norm / sparse_norm)
        } else {
            None
        };
        Ok(ProbeRow {
            instance: inst.id.clone(),
            a: inst.a,
            b: inst.b,
            family,
            kernel_norm,
            sparse_norm,
            ratio,
            degenerate: pair.is_degenerate(),
        })
    };
    insts
        .par_iter()
        .map(|inst| one(inst).map_err(Error::at(&inst.id)))
        .collect()
}
