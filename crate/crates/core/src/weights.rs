//! Weight characteristics and maximal operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicFamily, DyadicSystem};
use crate::error::{Error, Result};
use crate::orlicz::{bp_constant, luxemburg_norm, YoungFunction};
use crate::scalar::{conjugate, Real};
use crate::space::{Ball, Space, SpaceProfile};

/// A pair `(w, sigma)` of nonnegative weights on the points of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct WeightPair<T> {
    pub w: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Real> WeightPair<T> {
    pub fn new(space: &Space<T>, w: Vec<T>, sigma: Vec<T>) -> Result<Self> {
        check_weight(space, &w, "w")?;
        check_weight(space, &sigma, "sigma")?;
        Ok(WeightPair { w, sigma })
    }

    pub fn swapped(&self) -> Self {
        WeightPair {
            w: self.sigma.clone(),
            sigma: self.w.clone(),
        }
    }

    /// `true` when either weight vanishes identically.
    pub fn is_degenerate(&self) -> bool {
        self.w.iter().all(|v| *v == T::zero()) || self.sigma.iter().all(|v| *v == T::zero())
    }
}

fn check_weight<T: Real>(space: &Space<T>, w: &[T], name: &str) -> Result<()> {
    if w.len() != space.len() {
        return Err(Error::input(format!(
            "{name} has {} values for {} points",
            w.len(),
            space.len()
        )));
    }
    if w.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
        return Err(Error::input(format!(
            "{name} must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// Where a supremum was attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub enum Witness<T> {
    Ball {
        center: usize,
        radius: T,
        count: usize,
    },
    Cube {
        system: usize,
        cube: usize,
    },
}

impl<T: Real> Witness<T> {
    fn of(ball: &Ball<T>) -> Self {
        Witness::Ball {
            center: ball.center,
            radius: ball.radius,
            count: ball.count,
        }
    }

    /// Sorted member points of the witness set.
    pub fn members(
        &self,
        space: &Space<T>,
        family: Option<&DyadicFamily<T>>,
    ) -> Result<Vec<usize>> {
        match *self {
            Witness::Ball { center, radius, .. } => space.ball(center, radius),
            Witness::Cube { system, cube } => {
                let fam =
                    family.ok_or_else(|| Error::input("cube witness needs its dyadic family"))?;
                Ok(fam.system(system).cube(cube).members.clone())
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            Witness::Ball { center, count, .. } => format!("B({center};{count})"),
            Witness::Cube { system, cube } => format!("Q({system};{cube})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ball,
    Dyadic(usize),
}

/// Sets a characteristic is a supremum over.
#[derive(Clone, Copy, Debug)]
pub enum Scope<'a, T> {
    Balls,
    Dyadic(&'a DyadicSystem<T>),
}

impl<T> Scope<'_, T> {
    fn method(&self) -> Method {
        match self {
            Scope::Balls => Method::Ball,
            Scope::Dyadic(s) => Method::Dyadic(s.index),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct CharacteristicReport<T> {
    pub value: T,
    pub witness: Witness<T>,
    pub method: Method,
}

/// Which weight carries the Orlicz bump.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpSide {
    /// `<w>_B^{1/p} ||sigma^{1/p'}||_{Phi,B}`
    OnSigma,
    /// `||w^{1/p}||_{Psi,B} <sigma>_B^{1/p'}`
    OnW,
}

fn better<T: Real>(cand: T, best: T) -> bool {
    cand > best || (best.is_nan() && !cand.is_nan())
}

/// Sup of `local(center, count, prefixes)` over critical balls, where
/// `prefixes[i]` are the running integrals of `fns[i]` along the center's
/// order and the last entry is the running mass.
fn scan_balls<T, F>(space: &Space<T>, fns: &[&[T]], local: F) -> (T, Ball<T>)
where
    T: Real,
    F: Fn(usize, usize, &[Vec<T>]) -> T + Sync,
{
    let ones = vec![T::one(); space.len()];
    let per_center: Vec<(T, Ball<T>)> = (0..space.len())
        .into_par_iter()
        .map(|c| {
            let mut prefixes: Vec<Vec<T>> =
                fns.iter().map(|f| space.prefix_integrals(c, f)).collect();
            prefixes.push(space.prefix_integrals(c, &ones));
            let mut best: Option<(T, Ball<T>)> = None;
            for b in space.critical_balls(c) {
                let v = local(c, b.count, &prefixes);
                if best.as_ref().is_none_or(|(bv, _)| better(v, *bv)) {
                    best = Some((v, b));
                }
            }
            best.expect("every center has a ball")
        })
        .collect();
    per_center
        .into_iter()
        .reduce(|a, b| if better(b.0, a.0) { b } else { a })
        .expect("nonempty space")
}

/// Sup of `local(cube)` over every cube of a system.
fn scan_cubes<T, F>(system: &DyadicSystem<T>, local: F) -> (usize, T)
where
    T: Real,
    F: Fn(usize) -> T + Sync,
{
    let vals: Vec<T> = (0..system.cubes.len())
        .into_par_iter()
        .map(&local)
        .collect();
    vals.into_iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bi, bv), (i, v)| {
            if better(v, bv) {
                (i, v)
            } else {
                (bi, bv)
            }
        })
}

fn report<T: Real>(
    scope: Scope<'_, T>,
    space: &Space<T>,
    sets: impl Fn(&[usize]) -> T + Sync,
    ball_local: impl Fn(usize, usize, &[Vec<T>]) -> T + Sync,
    fns: &[&[T]],
) -> CharacteristicReport<T> {
    match scope {
        Scope::Balls => {
            let (value, ball) = scan_balls(space, fns, ball_local);
            CharacteristicReport {
                value,
                witness: Witness::of(&ball),
                method: Method::Ball,
            }
        }
        Scope::Dyadic(sys) => {
            let (cube, value) = scan_cubes(sys, |q| sets(&sys.cube(q).members));
            CharacteristicReport {
                value,
                witness: Witness::Cube {
                    system: sys.index,
                    cube,
                },
                method: scope.method(),
            }
        }
    }
}

fn mean_on<T: Real>(space: &Space<T>, f: &[T], set: &[usize]) -> T {
    let mass: T = set.iter().map(|&i| space.mass(i)).sum();
    space.integral(f, set.iter().copied()) / mass
}

/// `<w>_E <sigma>_E^{p-1}` on a point set.
pub fn ap_on<T: Real>(pair: &WeightPair<T>, p: T, space: &Space<T>, set: &[usize]) -> T {
    mean_on(space, &pair.w, set) * mean_on(space, &pair.sigma, set).powf(p - T::one())
}

/// Joint characteristic `sup <w>_B <sigma>_B^{p-1}`.
pub fn ap_constant<T: Real>(
    pair: &WeightPair<T>,
    p: T,
    space: &Space<T>,
    scope: Scope<'_, T>,
) -> Result<CharacteristicReport<T>> {
    if !(p > T::one()) {
        return Err(Error::input("A_p needs p > 1"));
    }
    let pm1 = p - T::one();
    Ok(report(
        scope,
        space,
        |set| ap_on(pair, p, space, set),
        |_, k, pre| {
            let m = pre[2][k];
            (pre[0][k] / m) * (pre[1][k] / m).powf(pm1)
        },
        &[&pair.w, &pair.sigma],
    ))
}

/// Bump functional on a point set, see [`BumpSide`].
pub fn bump_on<T: Real>(
    pair: &WeightPair<T>,
    phi: &YoungFunction<T>,
    p: T,
    side: BumpSide,
    space: &Space<T>,
    set: &[usize],
) -> Result<T> {
    let (plain, bumped, e_plain, e_bump) = bump_roles(pair, p, side);
    let g: Vec<T> = set.iter().map(|&i| bumped[i].powf(e_bump)).collect();
    let mu: Vec<T> = set.iter().map(|&i| space.mass(i)).collect();
    Ok(mean_on(space, plain, set).powf(e_plain) * luxemburg_norm(&g, &mu, phi)?)
}

fn bump_roles<T: Real>(pair: &WeightPair<T>, p: T, side: BumpSide) -> (&[T], &[T], T, T) {
    let pc = conjugate(p);
    match side {
        BumpSide::OnSigma => (&pair.w, &pair.sigma, T::one() / p, T::one() / pc),
        BumpSide::OnW => (&pair.sigma, &pair.w, T::one() / pc, T::one() / p),
    }
}

/// Orlicz bump characteristic over balls or the cubes of one system.
pub fn bump_constant<T: Real>(
    pair: &WeightPair<T>,
    phi: &YoungFunction<T>,
    p: T,
    side: BumpSide,
    space: &Space<T>,
    scope: Scope<'_, T>,
) -> Result<CharacteristicReport<T>> {
    if !(p > T::one()) {
        return Err(Error::input("bump constant needs p > 1"));
    }
    let (plain, bumped, e_plain, e_bump) = bump_roles(pair, p, side);
    let g: Vec<T> = bumped.iter().map(|v| v.powf(e_bump)).collect();
    // power Young functions reduce to power means, which prefix sums give exactly
    let (gq, q) = match phi.power_exponent() {
        Some(q) => (g.iter().map(|v| v.powf(q)).collect::<Vec<T>>(), Some(q)),
        None => (Vec::new(), None),
    };
    let fns: Vec<&[T]> = if q.is_some() {
        vec![plain, &gq]
    } else {
        vec![plain]
    };
    let set_value = |set: &[usize]| -> T {
        let vals: Vec<T> = set.iter().map(|&i| g[i]).collect();
        let mu: Vec<T> = set.iter().map(|&i| space.mass(i)).collect();
        mean_on(space, plain, set).powf(e_plain)
            * luxemburg_norm(&vals, &mu, phi).unwrap_or(T::nan())
    };
    let ball_local = |c: usize, k: usize, pre: &[Vec<T>]| -> T {
        let m = pre[pre.len() - 1][k];
        let outer = (pre[0][k] / m).powf(e_plain);
        match q {
            Some(q) => outer * (pre[1][k] / m).powf(T::one() / q),
            None => {
                let idx: Vec<usize> = space.members(c, k).iter().map(|&y| y as usize).collect();
                let vals: Vec<T> = idx.iter().map(|&i| g[i]).collect();
                let mu: Vec<T> = idx.iter().map(|&i| space.mass(i)).collect();
                outer * luxemburg_norm(&vals, &mu, phi).unwrap_or(T::nan())
            }
        }
    };
    Ok(report(scope, space, set_value, ball_local, &fns))
}

/// `Mf(y) = max` of ball averages of `f` over critical balls containing `y`.
pub fn uncentered_maximal<T: Real>(f: &[T], space: &Space<T>) -> Result<Vec<T>> {
    check_weight(space, f, "f")?;
    let per_center: Vec<Vec<T>> = (0..space.len())
        .into_par_iter()
        .map(|c| centered_sweep(space, c, f))
        .collect();
    let mut out = vec![T::zero(); space.len()];
    for v in per_center {
        for (o, x) in out.iter_mut().zip(v) {
            *o = o.max(x);
        }
    }
    Ok(out)
}

/// For one center: value at `y` is the largest average over critical balls
/// at this center that contain `y`.
fn centered_sweep<T: Real>(space: &Space<T>, c: usize, f: &[T]) -> Vec<T> {
    let fi = space.prefix_integrals(c, f);
    let ones = vec![T::one(); space.len()];
    let mi = space.prefix_integrals(c, &ones);
    let balls: Vec<usize> = space.critical_balls(c).map(|b| b.count).collect();
    let mut suffix: Vec<T> = balls.iter().map(|&k| fi[k] / mi[k]).collect();
    for i in (0..suffix.len().saturating_sub(1)).rev() {
        suffix[i] = suffix[i].max(suffix[i + 1]);
    }
    let order = space.order(c);
    let mut out = vec![T::zero(); space.len()];
    let mut lo = 0;
    for (&k, &v) in balls.iter().zip(&suffix) {
        for &y in &order[lo..k] {
            out[y as usize] = v;
        }
        lo = k;
    }
    out
}

/// `[w]_{A_inf^delta} = sup_B (1 / w(delta B)) int_B M(1_B w) dmu`.
pub fn weak_ainfty_constant<T: Real>(
    w: &[T],
    delta: T,
    space: &Space<T>,
) -> Result<CharacteristicReport<T>> {
    check_weight(space, w, "w")?;
    if !(delta > T::one()) {
        return Err(Error::input("dilation must exceed 1"));
    }
    if w.iter().all(|v| *v == T::zero()) {
        return Err(Error::input("weak A_inf characteristic of the zero weight"));
    }
    let balls: Vec<Ball<T>> = space.all_balls().collect();
    let vals: Vec<T> = balls
        .par_iter()
        .map(|b| weak_ainfty_on(w, delta, space, b))
        .collect();
    let (i, value) = vals
        .iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| {
            if better(v, bv) {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    Ok(CharacteristicReport {
        value,
        witness: Witness::of(&balls[i]),
        method: Method::Ball,
    })
}

/// The weak A_inf ratio of one ball; 0 when `w(delta B) = 0`.
pub fn weak_ainfty_on<T: Real>(w: &[T], delta: T, space: &Space<T>, ball: &Ball<T>) -> T {
    let members = space.members(ball.center, ball.count);
    let mut g = vec![T::zero(); space.len()];
    let mut mass_b = T::zero();
    for &y in members {
        g[y as usize] = w[y as usize];
        mass_b = mass_b + w[y as usize];
    }
    if mass_b == T::zero() {
        return T::zero();
    }
    let big = space.dilate(ball, delta);
    let denom: T = space.integral(
        w,
        space
            .members(big.center, big.count)
            .iter()
            .map(|&y| y as usize),
    );
    let mg = uncentered_maximal(&g, space).expect("valid restriction");
    let num: T = members
        .iter()
        .map(|&y| mg[y as usize] * space.mass(y as usize))
        .sum();
    num / denom
}

/// `M^D_Phi f(x) = max over cubes Q containing x of ||f||_{Phi,Q}`.
pub fn dyadic_orlicz_maximal<T: Real>(
    f: &[T],
    system: &DyadicSystem<T>,
    phi: &YoungFunction<T>,
    space: &Space<T>,
) -> Result<Vec<T>> {
    check_weight(space, f, "f")?;
    let norms: Vec<T> = system
        .cubes
        .par_iter()
        .map(|q| {
            let vals: Vec<T> = q.members.iter().map(|&i| f[i]).collect();
            let mu: Vec<T> = q.members.iter().map(|&i| space.mass(i)).collect();
            luxemburg_norm(&vals, &mu, phi)
        })
        .collect::<Result<_>>()?;
    Ok((0..space.len())
        .map(|x| system.chain(x).map(|q| norms[q]).fold(T::zero(), T::max))
        .collect())
}

fn lp_norm<T: Real>(f: &[T], p: T, space: &Space<T>) -> T {
    f.iter()
        .enumerate()
        .map(|(i, v)| v.powf(p) * space.mass(i))
        .sum::<T>()
        .powf(T::one() / p)
}

/// `||M^D_Phi f||_p / ([Phi]_{B_p}^{1/p} ||f||_p)`, zero for `f = 0`.
pub fn maximal_ratio<T: Real>(
    f: &[T],
    system: &DyadicSystem<T>,
    phi: &YoungFunction<T>,
    p: T,
    space: &Space<T>,
) -> Result<T> {
    let bp = bp_constant(phi, p)?;
    if !bp.is_finite() {
        return Err(Error::Precondition(
            "the Young function is not in B_p".into(),
        ));
    }
    let nf = lp_norm(f, p, space);
    if nf == T::zero() {
        return Ok(T::zero());
    }
    let mf = dyadic_orlicz_maximal(f, system, phi, space)?;
    Ok(lp_norm(&mf, p, space) / (bp.powf(T::one() / p) * nf))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct MaximalCheck<T> {
    pub worst_ratio: T,
    pub bp: T,
    pub trials: usize,
}

impl<T: Real> MaximalCheck<T> {
    pub fn exceeds(&self, ceiling: T) -> bool {
        self.worst_ratio > ceiling
    }
}

/// Worst normalized maximal ratio over seeded random test functions:
/// smooth noise, sparse spikes and cube indicators in turn.
pub fn maximal_norm_check<T: Real>(
    system: &DyadicSystem<T>,
    phi: &YoungFunction<T>,
    p: T,
    trials: usize,
    seed: u64,
    space: &Space<T>,
) -> Result<MaximalCheck<T>> {
    let bp = bp_constant(phi, p)?;
    if !bp.is_finite() {
        return Err(Error::Precondition(
            "the Young function is not in B_p".into(),
        ));
    }
    let n = space.len();
    let mut worst = T::zero();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let f: Vec<T> = match trial % 3 {
            0 => (0..n).map(|_| T::lit(rng.gen::<f64>())).collect(),
            1 => (0..n)
                .map(|_| {
                    if rng.gen_bool(0.05) {
                        T::lit(rng.gen_range(1.0..100.0))
                    } else {
                        T::zero()
                    }
                })
                .collect(),
            _ => {
                let q = system.cube(rng.gen_range(0..system.cubes.len()));
                let mut f = vec![T::zero(); n];
                for &i in &q.members {
                    f[i] = T::one();
                }
                f
            }
        };
        worst = worst.max(maximal_ratio(&f, system, phi, p, space)?);
    }
    Ok(MaximalCheck {
        worst_ratio: worst,
        bp,
        trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ReverseHolder<T> {
    /// Largest passing `2^{-j}`, or 0 when none passes.
    pub eps_max: T,
    pub found: bool,
    /// A ball violating the inequality at the next larger exponent.
    pub witness: Option<Witness<T>>,
}

/// Largest `eps = 2^{-j}`, `j = 0..=30`, with
/// `(avg_B w^{1+eps})^{1/(1+eps)} <= target * avg_{delta B} w` on every ball.
pub fn reverse_holder_probe<T: Real>(
    w: &[T],
    space: &Space<T>,
    target: T,
    delta: T,
) -> Result<ReverseHolder<T>> {
    check_weight(space, w, "w")?;
    if w.iter().all(|v| *v == T::zero()) {
        return Err(Error::input("reverse Hoelder probe of the zero weight"));
    }
    if !(target >= T::one()) {
        return Err(Error::input("target constant must be at least 1"));
    }
    let mut witness = None;
    for j in 0..=30 {
        let eps = T::lit(0.5).powi(j);
        match reverse_holder_violation(w, space, target, delta, eps) {
            None => {
                return Ok(ReverseHolder {
                    eps_max: eps,
                    found: true,
                    witness,
                })
            }
            Some(b) => witness = Some(Witness::of(&b)),
        }
    }
    Ok(ReverseHolder {
        eps_max: T::zero(),
        found: false,
        witness,
    })
}

/// First ball (in center-major order) failing the reverse Hoelder inequality.
pub fn reverse_holder_violation<T: Real>(
    w: &[T],
    space: &Space<T>,
    target: T,
    delta: T,
    eps: T,
) -> Option<Ball<T>> {
    let e = T::one() + eps;
    let we: Vec<T> = w.iter().map(|v| v.powf(e)).collect();
    let ones = vec![T::one(); space.len()];
    let fails: Vec<Option<Ball<T>>> = (0..space.len())
        .into_par_iter()
        .map(|c| {
            let pe = space.prefix_integrals(c, &we);
            let pw = space.prefix_integrals(c, w);
            let pm = space.prefix_integrals(c, &ones);
            space.critical_balls(c).find(|b| {
                let big = space.dilate(b, delta).count;
                if pw[big] == T::zero() {
                    return false;
                }
                let lhs = (pe[b.count] / pm[b.count]).powf(T::one() / e);
                lhs > target * (pw[big] / pm[big]) * (T::one() + T::lit(1e-12))
            })
        })
        .collect();
    fails.into_iter().flatten().next()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TheoremRhs<T> {
    pub ap: CharacteristicReport<T>,
    pub weak_w: CharacteristicReport<T>,
    pub weak_sigma: CharacteristicReport<T>,
    pub value: T,
}

/// `[w,sigma]_{A_p}^{1/p} ([w]_{weak}^{1/p'} + [sigma]_{weak}^{1/p})`
/// with weak characteristics at dilation `2 kappa`.
pub fn theorem_rhs<T: Real>(
    pair: &WeightPair<T>,
    p: T,
    space: &Space<T>,
    profile: &SpaceProfile<T>,
) -> Result<TheoremRhs<T>> {
    let delta = T::lit(2.0) * profile.kappa();
    let ap = ap_constant(pair, p, space, Scope::Balls)?;
    let weak_w = weak_ainfty_constant(&pair.w, delta, space)?;
    let weak_sigma = weak_ainfty_constant(&pair.sigma, delta, space)?;
    let value = compose_rhs(ap.value, weak_w.value, weak_sigma.value, p);
    Ok(TheoremRhs {
        ap,
        weak_w,
        weak_sigma,
        value,
    })
}

pub fn compose_rhs<T: Real>(ap: T, weak_w: T, weak_sigma: T, p: T) -> T {
    let pc = conjugate(p);
    ap.powf(T::one() / p) * (weak_w.powf(T::one() / pc) + weak_sigma.powf(T::one() / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_sweep_assigns_largest_containing_average() {
        let s = Space::<f64>::uniform_interval(5).unwrap();
        let f = vec![0.0, 0.0, 5.0, 0.0, 0.0];
        let v = centered_sweep(&s, 0, &f);
        // balls at 0 hold 1..=5 points; averages 0, 0, 5/3, 5/4, 1
        for (a, b) in v.iter().zip([5.0 / 3.0, 5.0 / 3.0, 5.0 / 3.0, 1.25, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_weights() {
        let s = Space::<f64>::uniform_interval(3).unwrap();
        assert!(WeightPair::new(&s, vec![1.0, -1.0, 1.0], vec![1.0; 3]).is_err());
        assert!(WeightPair::new(&s, vec![1.0; 2], vec![1.0; 3]).is_err());
        assert!(weak_ainfty_constant(&[0.0; 3], 2.0, &s).is_err());
    }
}
