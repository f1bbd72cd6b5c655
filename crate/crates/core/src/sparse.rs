//! Sparse families of dyadic cubes and the sparse operator.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicFamily, DyadicSystem};
use crate::error::{Error, Result};
use crate::orlicz::{bp_constant, YoungFunction};
use crate::scalar::{conjugate, Real};
use crate::space::Space;
use crate::weights::{bump_constant, BumpSide, Scope, WeightPair};

/// Largest matrix side the dense norm computation accepts by default.
pub const DENSE_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SparseCube<T> {
    /// Canonical cube id in the dyadic system.
    pub id: usize,
    pub level: i32,
    pub members: Vec<usize>,
    pub mass: T,
    /// Smallest strictly larger cube of the family.
    pub parent: Option<usize>,
    /// `E(Q)`: points of `Q` outside every strictly smaller family cube.
    pub exceptional: Vec<usize>,
    pub exceptional_mass: T,
}

/// A set of cubes from one dyadic system, compared as point sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SparseFamily<T> {
    pub system: usize,
    /// Coarsest first; parents precede children.
    pub cubes: Vec<SparseCube<T>>,
    /// Deepest family cube containing each point.
    deepest: Vec<Option<usize>>,
}

impl<T: Real> SparseFamily<T> {
    /// Family of the given cube ids; cubes with equal member sets collapse.
    pub fn new(system: &DyadicSystem<T>, ids: &[usize], space: &Space<T>) -> Result<Self> {
        if let Some(&bad) = ids.iter().find(|&&id| id >= system.cubes.len()) {
            return Err(Error::input(format!(
                "cube {bad} is not in system {}",
                system.index
            )));
        }
        let mut canon: Vec<usize> = ids.iter().map(|&id| system.cube(id).canonical).collect();
        canon.sort_by_key(|&id| (system.cube(id).level, id));
        canon.dedup();
        let index: HashMap<usize, usize> =
            canon.iter().enumerate().map(|(i, &id)| (id, i)).collect();

        let mut deepest = vec![None; space.len()];
        for x in 0..space.len() {
            for q in system.chain(x) {
                if let Some(&i) = index.get(&system.cube(q).canonical) {
                    deepest[x] = Some(i);
                }
            }
        }
        let mut cubes: Vec<SparseCube<T>> = canon
            .iter()
            .map(|&id| {
                let c = system.cube(id);
                let mut parent = None;
                let mut up = c.parent;
                while let Some(u) = up {
                    let cu = system.cube(u).canonical;
                    if cu != id {
                        if let Some(&i) = index.get(&cu) {
                            parent = Some(i);
                            break;
                        }
                    }
                    up = system.cube(u).parent;
                }
                SparseCube {
                    id,
                    level: c.level,
                    members: c.members.clone(),
                    mass: c.mass,
                    parent,
                    exceptional: Vec::new(),
                    exceptional_mass: T::zero(),
                }
            })
            .collect();
        for (x, d) in deepest.iter().enumerate() {
            if let Some(i) = *d {
                cubes[i].exceptional.push(x);
                cubes[i].exceptional_mass = cubes[i].exceptional_mass + space.mass(x);
            }
        }
        Ok(SparseFamily {
            system: system.index,
            cubes,
            deepest,
        })
    }

    /// Family from `(system, cube)` pairs, all from one system.
    pub fn from_pairs(
        family: &DyadicFamily<T>,
        pairs: &[(usize, usize)],
        space: &Space<T>,
    ) -> Result<Self> {
        let Some(&(t, _)) = pairs.first() else {
            return Err(Error::input("empty cube list"));
        };
        if pairs.iter().any(|&(s, _)| s != t) {
            return Err(Error::input(
                "sparse families must come from a single dyadic system",
            ));
        }
        if t >= family.len() {
            return Err(Error::input(format!("no dyadic system {t}")));
        }
        let ids: Vec<usize> = pairs.iter().map(|&(_, q)| q).collect();
        SparseFamily::new(family.system(t), &ids, space)
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Family indices of cubes containing `x`, deepest first.
    pub fn chain(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.deepest[x], move |&i| self.cubes[i].parent)
    }

    /// `true` when family cube `q` is contained in family cube `r`.
    pub fn within(&self, q: usize, r: usize) -> bool {
        std::iter::successors(Some(q), |&i| self.cubes[i].parent).any(|i| i == r)
    }

    /// Family indices of cubes contained in `r` (including `r`).
    pub fn below(&self, r: usize) -> Vec<usize> {
        (r..self.cubes.len())
            .filter(|&q| self.within(q, r))
            .collect()
    }

    /// Family index of the cube with canonical id `id`.
    pub fn position(&self, id: usize) -> Option<usize> {
        self.cubes.iter().position(|c| c.id == id)
    }

    fn average(&self, q: usize, f: &[T], space: &Space<T>) -> T {
        let c = &self.cubes[q];
        space.integral(f, c.members.iter().copied()) / c.mass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SparseReport<T> {
    /// `(family index, mu(E(Q)) / mu(Q))` for every cube below one half.
    pub violations: Vec<(usize, T)>,
    pub worst_ratio: T,
}

impl<T: Real> SparseReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `mu(E(Q)) >= mu(Q) / 2` for every cube.
pub fn is_sparse<T: Real>(family: &SparseFamily<T>) -> SparseReport<T> {
    let half = T::lit(0.5);
    let mut worst = T::one();
    let mut violations = Vec::new();
    for (i, c) in family.cubes.iter().enumerate() {
        let ratio = c.exceptional_mass / c.mass;
        worst = worst.min(ratio);
        // relative slack for masses summed in different orders
        if ratio < half * (T::one() - T::lit(64.0) * T::epsilon()) {
            violations.push((i, ratio));
        }
    }
    SparseReport {
        violations,
        worst_ratio: worst,
    }
}

/// Stopping cubes of `f` below `root`: the root, then recursively the
/// maximal subcubes whose average exceeds twice that of their stopping parent.
pub fn extract_sparse<T: Real>(
    f: &[T],
    system: &DyadicSystem<T>,
    root: usize,
    space: &Space<T>,
) -> Result<SparseFamily<T>> {
    if f.len() != space.len() || f.iter().any(|v| !(*v >= T::zero())) {
        return Err(Error::input(
            "f must be a nonnegative function on the space",
        ));
    }
    if root >= system.cubes.len() {
        return Err(Error::input(format!(
            "cube {root} is not in system {}",
            system.index
        )));
    }
    let avg = |q: usize| system.average(q, f, space);
    if !(avg(root) > T::zero()) {
        return Err(Error::input("f has no mass on the root cube"));
    }
    let mut chosen = vec![root];
    let mut stack = vec![root];
    while let Some(top) = stack.pop() {
        let bar = T::lit(2.0) * avg(top);
        let mut frontier: Vec<usize> = system.cube(top).children.clone();
        while let Some(q) = frontier.pop() {
            if avg(q) > bar {
                chosen.push(q);
                stack.push(q);
            } else {
                frontier.extend(system.cube(q).children.iter().copied());
            }
        }
    }
    let family = SparseFamily::new(system, &chosen, space)?;
    let report = is_sparse(&family);
    if !report.passed() {
        return Err(Error::Precondition(format!(
            "stopping family is not sparse (worst ratio {})",
            report.worst_ratio
        )));
    }
    Ok(family)
}

/// `T^S g = sum_Q <g>_Q 1_Q`.
pub fn apply_sparse<T: Real>(family: &SparseFamily<T>, g: &[T], space: &Space<T>) -> Vec<T> {
    let avgs: Vec<T> = (0..family.len())
        .map(|q| family.average(q, g, space))
        .collect();
    (0..space.len())
        .map(|x| {
            family
                .chain(x)
                .map(|q| avgs[q])
                .fold(T::zero(), |a, b| a + b)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TestingConstants<T> {
    pub t_sigma: T,
    pub t_w: T,
    /// Family indices of the maximizing cubes `R`.
    pub r_sigma: Option<usize>,
    pub r_w: Option<usize>,
}

/// `sup_R || sum_{Q <= R} <u>_Q 1_Q ||_{L^q(v)} / u(R)^{1/q}` over family cubes
/// with `u(R) > 0`.
fn testing_sup<T: Real>(
    family: &SparseFamily<T>,
    u: &[T],
    v: &[T],
    q: T,
    space: &Space<T>,
) -> (T, Option<usize>) {
    let avgs: Vec<T> = (0..family.len())
        .map(|i| family.average(i, u, space))
        .collect();
    // running sums from the top of the family down to each cube
    let mut above = vec![T::zero(); family.len()];
    for i in 0..family.len() {
        above[i] = family.cubes[i]
            .parent
            .map_or(T::zero(), |p| above[p] + avgs[p]);
    }
    let total: Vec<T> = (0..space.len())
        .map(|x| family.deepest[x].map_or(T::zero(), |d| above[d] + avgs[d]))
        .collect();
    let vals: Vec<T> = (0..family.len())
        .into_par_iter()
        .map(|r| {
            let c = &family.cubes[r];
            let mass = space.integral(u, c.members.iter().copied());
            if !(mass > T::zero()) {
                return T::neg_infinity();
            }
            let norm: T = c
                .members
                .iter()
                .map(|&x| (total[x] - above[r]).powf(q) * v[x] * space.mass(x))
                .sum::<T>()
                .powf(T::one() / q);
            norm / mass.powf(T::one() / q)
        })
        .collect();
    vals.into_iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold((T::zero(), None), |(bv, bi), (i, v)| {
            if v > bv {
                (v, Some(i))
            } else {
                (bv, bi)
            }
        })
}

/// Sawyer-type testing constants of the sparse operator, with `Q <= R`
/// taken non-strictly.
pub fn testing_constants<T: Real>(
    family: &SparseFamily<T>,
    pair: &WeightPair<T>,
    p: T,
    space: &Space<T>,
) -> Result<TestingConstants<T>> {
    if !(p > T::one()) {
        return Err(Error::input("testing constants need p > 1"));
    }
    let (t_sigma, r_sigma) = testing_sup(family, &pair.sigma, &pair.w, p, space);
    let (t_w, r_w) = testing_sup(family, &pair.w, &pair.sigma, conjugate(p), space);
    Ok(TestingConstants {
        t_sigma,
        t_w,
        r_sigma,
        r_w,
    })
}

/// Exact `L^2(sigma) -> L^2(w)` norm of `f -> T^S(f sigma)` as the top
/// singular value of the symmetrized kernel matrix.
pub fn norm_exact_p2<T: Real>(
    family: &SparseFamily<T>,
    pair: &WeightPair<T>,
    space: &Space<T>,
    cap: usize,
) -> Result<T> {
    let n = space.len();
    if n > cap {
        return Err(Error::Size { n, cap });
    }
    let rows: Vec<usize> = (0..n).filter(|&x| pair.w[x] > T::zero()).collect();
    let cols: Vec<usize> = (0..n).filter(|&y| pair.sigma[y] > T::zero()).collect();
    if rows.is_empty() || cols.is_empty() {
        return Ok(T::zero());
    }
    let a: Vec<f64> = rows
        .iter()
        .map(|&x| (pair.w[x] * space.mass(x)).sqrt().as_f64())
        .collect();
    let b: Vec<f64> = cols
        .iter()
        .map(|&y| (pair.sigma[y] * space.mass(y)).sqrt().as_f64())
        .collect();
    let inv: Vec<f64> = family
        .cubes
        .iter()
        .map(|c| T::one().as_f64() / c.mass.as_f64())
        .collect();
    // sum over common cubes: the chains of x and y share a top segment
    let cum = |x: usize| -> HashMap<usize, f64> {
        let chain: Vec<usize> = family.chain(x).collect();
        let mut acc = 0.0;
        let mut out = HashMap::with_capacity(chain.len());
        for &q in chain.iter().rev() {
            acc += inv[q];
            out.insert(q, acc);
        }
        out
    };
    let col_deepest: Vec<Option<usize>> = cols.iter().map(|&y| family.deepest[y]).collect();
    let entries: Vec<f64> = rows
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, &x)| {
            let cx = cum(x);
            let a_i = a[i];
            let b = &b;
            col_deepest.iter().enumerate().map(move |(j, dy)| {
                let shared = std::iter::successors(*dy, |&q| family.cubes[q].parent)
                    .find_map(|q| cx.get(&q).copied());
                a_i * shared.unwrap_or(0.0) * b[j]
            })
        })
        .collect();
    let m = DMatrix::from_row_slice(rows.len(), cols.len(), &entries);
    let top = m.singular_values().iter().copied().fold(0.0, f64::max);
    Ok(T::lit(top))
}

fn weighted_norm<T: Real>(f: &[T], weight: &[T], q: T, space: &Space<T>) -> T {
    f.iter()
        .enumerate()
        .map(|(i, v)| v.abs().powf(q) * weight[i] * space.mass(i))
        .sum::<T>()
        .powf(T::one() / q)
}

/// Ratio `||T^S(f sigma)||_{L^p(w)} / ||f||_{L^p(sigma)}`; 0 when `f` vanishes
/// in `L^p(sigma)`.
pub fn sparse_ratio<T: Real>(
    family: &SparseFamily<T>,
    pair: &WeightPair<T>,
    p: T,
    f: &[T],
    space: &Space<T>,
) -> T {
    let den = weighted_norm(f, &pair.sigma, p, space);
    if !(den > T::zero()) {
        return T::zero();
    }
    let fs: Vec<T> = f.iter().zip(&pair.sigma).map(|(a, b)| *a * *b).collect();
    weighted_norm(&apply_sparse(family, &fs, space), &pair.w, p, space) / den
}

/// Lower estimate of the `L^p(sigma) -> L^p(w)` norm by nonlinear power
/// iteration from structured starts (the constant, then cube indicators)
/// followed by seeded random starts; the first `trials` starts are used.
pub fn norm_lower_bound<T: Real>(
    family: &SparseFamily<T>,
    pair: &WeightPair<T>,
    p: T,
    trials: usize,
    seed: u64,
    space: &Space<T>,
) -> Result<T> {
    if !(p > T::one()) || trials == 0 {
        return Err(Error::input(
            "norm lower bound needs p > 1 and at least one trial",
        ));
    }
    if pair.is_degenerate() {
        return Ok(T::zero());
    }
    let n = space.len();
    let structured = 1 + family.len();
    let best = (0..trials)
        .into_par_iter()
        .map(|t| {
            let start: Vec<T> = if t == 0 {
                vec![T::one(); n]
            } else if t < structured {
                let mut f = vec![T::zero(); n];
                for &x in &family.cubes[t - 1].members {
                    f[x] = T::one();
                }
                f
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                (0..n).map(|_| T::lit(rng.gen::<f64>().powi(3))).collect()
            };
            power_iterate(family, pair, p, start, space)
        })
        .collect::<Vec<T>>();
    Ok(best.into_iter().fold(T::zero(), T::max))
}

/// Boyd iteration `f <- (T((T(f sigma))^{p-1} w))^{p'-1}` keeping the best ratio.
fn power_iterate<T: Real>(
    family: &SparseFamily<T>,
    pair: &WeightPair<T>,
    p: T,
    mut f: Vec<T>,
    space: &Space<T>,
) -> T {
    let pc = conjugate(p);
    let mut best = sparse_ratio(family, pair, p, &f, space);
    for _ in 0..60 {
        let fs: Vec<T> = f.iter().zip(&pair.sigma).map(|(a, b)| *a * *b).collect();
        let tf = apply_sparse(family, &fs, space);
        let g: Vec<T> = tf
            .iter()
            .zip(&pair.w)
            .map(|(v, w)| v.powf(p - T::one()) * *w)
            .collect();
        let back = apply_sparse(family, &g, space);
        let next: Vec<T> = back.iter().map(|v| v.powf(pc - T::one())).collect();
        let scale = weighted_norm(&next, &pair.sigma, p, space);
        if !(scale > T::zero()) || !scale.is_finite() {
            break;
        }
        f = next.into_iter().map(|v| v / scale).collect();
        let r = sparse_ratio(family, pair, p, &f, space);
        let gain = r - best;
        best = best.max(r);
        if gain <= best * T::lit(1e-12) {
            break;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    /// Family index.
    pub cube: usize,
    pub generation: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Stratum<T> {
    pub a: i32,
    /// Family indices with `2^a < <w>_Q <sigma>_Q^{p-1} <= 2^{a+1}`.
    pub cubes: Vec<usize>,
    pub products: Vec<T>,
    pub principal: Vec<Principal>,
    /// `pi(Q)` for each entry of `cubes`, as a family index.
    pub pi: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Corona<T> {
    pub root: usize,
    pub p: T,
    pub strata: BTreeMap<i32, Stratum<T>>,
}

impl<T: Real> Corona<T> {
    /// `S_a(P)`: cubes of stratum `a` whose principal cube is `P`.
    pub fn assigned(&self, a: i32, principal: usize) -> Vec<usize> {
        self.strata.get(&a).map_or_else(Vec::new, |s| {
            s.cubes
                .iter()
                .zip(&s.pi)
                .filter(|(_, &pi)| pi == principal)
                .map(|(&q, _)| q)
                .collect()
        })
    }
}

/// Stratum index `a` with `2^a < x <= 2^{a+1}`.
pub fn stratum_of<T: Real>(x: T) -> i32 {
    let mut a = x.log2().ceil().to_i32().unwrap_or(0) - 1;
    let two = T::lit(2.0);
    while x <= two.powi(a) {
        a -= 1;
    }
    while x > two.powi(a + 1) {
        a += 1;
    }
    a
}

/// Corona decomposition of the family cubes below `root` by the size of
/// `<w>_Q <sigma>_Q^{p-1}`, with principal cubes where `<sigma>` doubles.
pub fn corona<T: Real>(
    family: &SparseFamily<T>,
    pair: &WeightPair<T>,
    p: T,
    root: usize,
    space: &Space<T>,
) -> Result<Corona<T>> {
    if root >= family.len() {
        return Err(Error::input(format!("root {root} is not a family cube")));
    }
    if !(p > T::one()) {
        return Err(Error::input("corona needs p > 1"));
    }
    let sigma_avg: Vec<T> = (0..family.len())
        .map(|q| family.average(q, &pair.sigma, space))
        .collect();
    let mut strata: BTreeMap<i32, Stratum<T>> = BTreeMap::new();
    for q in family.below(root) {
        let prod = family.average(q, &pair.w, space) * sigma_avg[q].powf(p - T::one());
        if !(prod > T::zero()) {
            continue;
        }
        let a = stratum_of(prod);
        let s = strata.entry(a).or_insert_with(|| Stratum {
            a,
            cubes: vec![],
            products: vec![],
            principal: vec![],
            pi: vec![],
        });
        s.cubes.push(q);
        s.products.push(prod);
    }
    for s in strata.values_mut() {
        // cubes are in family order, so every cube comes after the cubes above it
        let mut pi = vec![usize::MAX; s.cubes.len()];
        let mut generation: HashMap<usize, usize> = HashMap::new();
        for (k, &q) in s.cubes.iter().enumerate() {
            // nearest principal cube of this stratum above q
            let mut up = family.cubes[q].parent;
            let mut holder = None;
            while let Some(u) = up {
                if generation.contains_key(&u) {
                    holder = Some(u);
                    break;
                }
                up = family.cubes[u].parent;
            }
            match holder {
                None => {
                    generation.insert(q, 0);
                    pi[k] = q;
                }
                Some(h) if sigma_avg[q] > T::lit(2.0) * sigma_avg[h] => {
                    generation.insert(q, generation[&h] + 1);
                    pi[k] = q;
                }
                Some(h) => pi[k] = h,
            }
        }
        s.principal = s
            .cubes
            .iter()
            .filter_map(|q| {
                generation.get(q).map(|&g| Principal {
                    cube: *q,
                    generation: g,
                })
            })
            .collect();
        s.pi = pi;
    }
    Ok(Corona { root, p, strata })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct LevelProfile<T> {
    pub a: i32,
    pub principal: usize,
    pub sigma_avg: T,
    /// `m_j = w(P ∩ {j <= T sigma / <sigma>_P < j + 1})`, `j = 0, 1, ...`.
    pub levels: Vec<T>,
    /// `m(t) = w(P ∩ {T sigma > t <sigma>_P})`, `t = 0, 1, ...` while positive.
    pub superlevel: Vec<T>,
    pub w_principal: T,
    /// `w(P ∩ {T sigma > 0})`.
    pub w_support: T,
}

/// Level masses of `T^{S_a(P)} sigma` on `P` in units of `<sigma>_P`.
pub fn decay_profile<T: Real>(
    corona: &Corona<T>,
    family: &SparseFamily<T>,
    a: i32,
    principal: usize,
    pair: &WeightPair<T>,
    space: &Space<T>,
) -> Result<LevelProfile<T>> {
    let stratum = corona
        .strata
        .get(&a)
        .ok_or_else(|| Error::input(format!("no stratum {a}")))?;
    if !stratum.principal.iter().any(|pc| pc.cube == principal) {
        return Err(Error::input(format!(
            "cube {principal} is not principal in stratum {a}"
        )));
    }
    let sigma_avg = family.average(principal, &pair.sigma, space);
    if !(sigma_avg > T::zero()) {
        return Err(Error::Degenerate(format!(
            "sigma vanishes on principal cube {principal}"
        )));
    }
    let members = &family.cubes[principal].members;
    let mut value: HashMap<usize, T> = members.iter().map(|&x| (x, T::zero())).collect();
    for q in corona.assigned(a, principal) {
        let avg = family.average(q, &pair.sigma, space);
        for x in &family.cubes[q].members {
            if let Some(v) = value.get_mut(x) {
                *v = *v + avg;
            }
        }
    }
    let mut levels: Vec<T> = Vec::new();
    let mut w_support = T::zero();
    let mut w_principal = T::zero();
    let mut scaled: Vec<(T, T)> = Vec::with_capacity(members.len());
    for &x in members {
        let wx = pair.w[x] * space.mass(x);
        let s = value[&x] / sigma_avg;
        w_principal = w_principal + wx;
        if value[&x] > T::zero() {
            w_support = w_support + wx;
        }
        let j = s.floor().to_usize().unwrap_or(0);
        if levels.len() <= j {
            levels.resize(j + 1, T::zero());
        }
        levels[j] = levels[j] + wx;
        scaled.push((s, wx));
    }
    let mut superlevel = Vec::new();
    for t in 0.. {
        let tt = T::from_usize_lossy(t);
        let m: T = scaled
            .iter()
            .filter(|(s, _)| *s > tt)
            .map(|(_, w)| *w)
            .sum();
        if !(m > T::zero()) {
            break;
        }
        superlevel.push(m);
    }
    Ok(LevelProfile {
        a,
        principal,
        sigma_avg,
        levels,
        superlevel,
        w_principal,
        w_support,
    })
}

/// Least-squares slope of `ln m(t)` against `t` and the fit's `R^2`, when at
/// least three super-level masses are positive.
pub fn decay_fit<T: Real>(profile: &LevelProfile<T>) -> Option<(T, T)> {
    let pts: Vec<(T, T)> = profile
        .superlevel
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > T::zero())
        .map(|(t, m)| (T::from_usize_lossy(t), m.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / k;
    let my = pts.iter().map(|p| p.1).sum::<T>() / k;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: T = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > T::zero() {
        sxy * sxy / (sxx * syy)
    } else {
        T::one()
    };
    Some((slope, r2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ChainRow<T> {
    pub a: i32,
    /// `sum_{P in P^a} <sigma>_P^p w(P)`
    pub lhs: T,
    /// `[w,sigma]_{Phi,p}^{p(1-gamma)} 2^{(a+1) gamma} [bar Phi]_{B_p} sigma(R)`
    pub rhs: T,
    pub implied: T,
}

/// Per-stratum sides of the principal-cube estimate, with the bump
/// characteristic taken over the cubes of `system`.
#[allow(clippy::too_many_arguments)]
pub fn corona_chain_check<T: Real>(
    corona: &Corona<T>,
    family: &SparseFamily<T>,
    system: &DyadicSystem<T>,
    pair: &WeightPair<T>,
    phi: &YoungFunction<T>,
    r: T,
    space: &Space<T>,
) -> Result<Vec<ChainRow<T>>> {
    let p = corona.p;
    let bp = bp_constant(&phi.clone().complement(), p)?;
    if !bp.is_finite() {
        return Err(Error::Precondition(
            "the complementary Young function is not in B_p".into(),
        ));
    }
    let gamma = T::one() / (T::lit(2.0) * (r + T::one()));
    let bump = bump_constant(
        pair,
        phi,
        p,
        BumpSide::OnSigma,
        space,
        Scope::Dyadic(system),
    )?
    .value;
    let root = &family.cubes[corona.root];
    let sigma_r = space.integral(&pair.sigma, root.members.iter().copied());
    Ok(corona
        .strata
        .values()
        .map(|s| {
            let lhs: T = s
                .principal
                .iter()
                .map(|pc| {
                    let c = &family.cubes[pc.cube];
                    let wp = space.integral(&pair.w, c.members.iter().copied());
                    family.average(pc.cube, &pair.sigma, space).powf(p) * wp
                })
                .sum();
            let rhs = bump.powf(p * (T::one() - gamma))
                * T::lit(2.0).powf(T::from_i32(s.a + 1).unwrap() * gamma)
                * bp
                * sigma_r;
            ChainRow {
                a: s.a,
                lhs,
                rhs,
                implied: lhs / rhs,
            }
        })
        .collect())
}
