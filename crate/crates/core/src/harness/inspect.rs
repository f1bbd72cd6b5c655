//! Row types for the inspection commands: structure constants, dyadic
//! systems, weight characteristics, per-family sparse norms and coronas.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::ReportRow;
use super::{
    bump_functions, evaluate_lhs, generate_weight, instances, sparse_catalog, ExperimentConfig,
    Instance, Workspace,
};
use crate::dyadic::validate_family;
use crate::error::{Error, Result};
use crate::sparse::corona;
use crate::weights::{
    ap_constant, bump_constant, compose_rhs, weak_ainfty_constant, BumpSide, Scope, WeightPair,
};

fn axes_of(p: f64, a: Option<f64>, b: Option<f64>) -> Vec<(&'static str, f64)> {
    let mut out = vec![("p", p)];
    out.extend(
        [("a", a), ("b", b)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v))),
    );
    out
}

fn pair_of(cfg: &ExperimentConfig, ws: &Workspace, inst: &Instance) -> Result<WeightPair<f64>> {
    let w = generate_weight(&inst.w, &ws.space, cfg.seed)?;
    let sigma = generate_weight(&inst.sigma, &ws.space, cfg.seed.wrapping_add(1))?;
    WeightPair::new(&ws.space, w, sigma)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceRow {
    pub points: usize,
    pub dimension: usize,
    pub periodic: bool,
    pub kappa: f64,
    pub doubling: f64,
    pub covering: usize,
    pub weak_floor: f64,
    pub min_distance: f64,
    pub diameter: f64,
}

impl ReportRow for SpaceRow {
    fn axes(&self) -> Vec<(&'static str, f64)> {
        vec![("points", self.points as f64)]
    }

    fn series_value(&self) -> Option<f64> {
        Some(self.doubling)
    }
}

pub fn space_rows(ws: &Workspace) -> Vec<SpaceRow> {
    let s = &ws.space;
    vec![SpaceRow {
        points: s.len(),
        dimension: s.dimension(),
        periodic: s.is_periodic(),
        kappa: ws.profile.kappa(),
        doubling: ws.profile.doubling(),
        covering: ws.profile.covering(),
        weak_floor: ws.profile.weak_ainfty_floor(),
        min_distance: s.min_positive_distance(),
        diameter: s.diameter(),
    }]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicRow {
    pub system: usize,
    pub cubes: usize,
    pub k_min: i32,
    pub k_max: i32,
    pub eta: f64,
    pub inner: f64,
    pub outer: f64,
    pub violations: usize,
}

impl ReportRow for DyadicRow {
    fn axes(&self) -> Vec<(&'static str, f64)> {
        vec![("system", self.system as f64)]
    }

    fn series_value(&self) -> Option<f64> {
        Some(self.cubes as f64)
    }
}

/// One row per system with the violations the validator attributes to it.
pub fn dyadic_rows(ws: &Workspace) -> Vec<DyadicRow> {
    let report = validate_family(&ws.family, &ws.space, ws.profile.doubling());
    let owner = |v: &crate::dyadic::Violation| -> usize {
        use crate::dyadic::Violation::*;
        match *v {
            Uncovered { system, .. }
            | Overlap { system, .. }
            | NotNested { system, .. }
            | CenterOutside { system, .. }
            | InnerBall { system, .. }
            | OuterBall { system, .. }
            | Comparability { system, .. } => system,
        }
    };
    ws.family
        .systems
        .iter()
        .map(|sys| DyadicRow {
            system: sys.index,
            cubes: sys.cubes.len(),
            k_min: sys.k_min,
            k_max: sys.k_max,
            eta: ws.family.eta,
            inner: report.sandwich.0,
            outer: report.sandwich.1,
            violations: report
                .violations
                .iter()
                .filter(|v| owner(v) == sys.index)
                .count(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRow {
    pub instance: String,
    pub p: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub ap: f64,
    /// Largest `A_p` characteristic over the cubes of all systems.
    pub ap_dyadic: f64,
    pub weak_w: Option<f64>,
    pub weak_sigma: Option<f64>,
    pub bump_phi: f64,
    pub bump_psi: f64,
    pub rhs: Option<f64>,
}

impl ReportRow for ConstantsRow {
    fn axes(&self) -> Vec<(&'static str, f64)> {
        axes_of(self.p, self.a, self.b)
    }

    fn series_value(&self) -> Option<f64> {
        Some(self.ap)
    }
}

pub fn constants_rows(cfg: &ExperimentConfig, ws: &Workspace) -> Result<Vec<ConstantsRow>> {
    let space = &ws.space;
    let weak = |w: &[f64]| -> Result<Option<f64>> {
        if w.iter().all(|v| *v == 0.0) {
            return Ok(None);
        }
        Ok(Some(weak_ainfty_constant(w, ws.delta(), space)?.value))
    };
    instances(cfg)?
        .par_iter()
        .map(|inst| {
            let one = || -> Result<ConstantsRow> {
                let pair = pair_of(cfg, ws, inst)?;
                let p = inst.p;
                let ap = ap_constant(&pair, p, space, Scope::Balls)?.value;
                let mut ap_dyadic: f64 = 0.0;
                for sys in &ws.family.systems {
                    ap_dyadic =
                        ap_dyadic.max(ap_constant(&pair, p, space, Scope::Dyadic(sys))?.value);
                }
                let (phi, psi) = bump_functions(inst)?;
                let bump_phi =
                    bump_constant(&pair, &phi, p, BumpSide::OnSigma, space, Scope::Balls)?.value;
                let bump_psi =
                    bump_constant(&pair, &psi, p, BumpSide::OnW, space, Scope::Balls)?.value;
                let (weak_w, weak_sigma) = (weak(&pair.w)?, weak(&pair.sigma)?);
                let rhs = weak_w
                    .zip(weak_sigma)
                    .map(|(ww, wsg)| compose_rhs(ap, ww, wsg, p));
                Ok(ConstantsRow {
                    instance: inst.id.clone(),
                    p,
                    a: inst.a,
                    b: inst.b,
                    ap,
                    ap_dyadic,
                    weak_w,
                    weak_sigma,
                    bump_phi,
                    bump_psi,
                    rhs,
                })
            };
            one().map_err(Error::at(&inst.id))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub instance: String,
    pub p: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub family: String,
    pub cubes: usize,
    pub t_sigma: f64,
    pub t_w: f64,
    pub exact: bool,
    pub norm_lo: f64,
    pub norm_hi: f64,
}

impl ReportRow for SparseRow {
    fn axes(&self) -> Vec<(&'static str, f64)> {
        axes_of(self.p, self.a, self.b)
    }

    fn series_value(&self) -> Option<f64> {
        Some(self.norm_hi)
    }
}

/// Norm estimates of every catalog family, one row each.
pub fn sparse_rows(cfg: &ExperimentConfig, ws: &Workspace) -> Result<Vec<SparseRow>> {
    let per: Vec<Vec<SparseRow>> = instances(cfg)?
        .par_iter()
        .map(|inst| {
            let one = || -> Result<Vec<SparseRow>> {
                let pair = pair_of(cfg, ws, inst)?;
                let catalog = sparse_catalog(&pair, ws, cfg.seed)?;
                catalog
                    .iter()
                    .map(|e| {
                        let lhs = evaluate_lhs(
                            &pair,
                            inst.p,
                            &ws.space,
                            std::slice::from_ref(e),
                            &cfg.norm,
                            cfg.seed,
                        )?;
                        Ok(SparseRow {
                            instance: inst.id.clone(),
                            p: inst.p,
                            a: inst.a,
                            b: inst.b,
                            family: e.label.clone(),
                            cubes: e.family.len(),
                            t_sigma: lhs.t_sigma,
                            t_w: lhs.t_w,
                            exact: lhs.exact,
                            norm_lo: lhs.lo,
                            norm_hi: lhs.hi,
                        })
                    })
                    .collect()
            };
            one().map_err(Error::at(&inst.id))
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoronaRow {
    pub instance: String,
    pub p: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub family: String,
    /// Stratum index: `2^a < <w>_Q <sigma>_Q^{p-1} <= 2^{a+1}`.
    pub stratum: i32,
    pub cubes: usize,
    pub principal: usize,
    pub generations: usize,
}

impl ReportRow for CoronaRow {
    fn axes(&self) -> Vec<(&'static str, f64)> {
        vec![("stratum", self.stratum as f64)]
    }

    fn series_value(&self) -> Option<f64> {
        Some(self.cubes as f64)
    }
}

/// Strata of the corona decomposition below the top cube of every stopping
/// family in the catalog.
pub fn corona_rows(cfg: &ExperimentConfig, ws: &Workspace) -> Result<Vec<CoronaRow>> {
    let per: Vec<Vec<CoronaRow>> = instances(cfg)?
        .par_iter()
        .map(|inst| {
            let one = || -> Result<Vec<CoronaRow>> {
                let pair = pair_of(cfg, ws, inst)?;
                let mut out = Vec::new();
                if pair.is_degenerate() {
                    return Ok(out);
                }
                for e in sparse_catalog(&pair, ws, cfg.seed)? {
                    let c = corona(&e.family, &pair, inst.p, 0, &ws.space)?;
                    for (a, s) in &c.strata {
                        out.push(CoronaRow {
                            instance: inst.id.clone(),
                            p: inst.p,
                            a: inst.a,
                            b: inst.b,
                            family: e.label.clone(),
                            stratum: *a,
                            cubes: s.cubes.len(),
                            principal: s.principal.len(),
                            generations: s
                                .principal
                                .iter()
                                .map(|q| q.generation + 1)
                                .max()
                                .unwrap_or(0),
                        });
                    }
                }
                Ok(out)
            };
            one().map_err(Error::at(&inst.id))
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}
