//! Adjacent dyadic systems on a finite space.
//!
//! Two constructions are available. The general one builds nested
//! `eta^k`-separated nets from coarse to fine (seeded random visiting order),
//! attaches each center to the nearest center one level up and defines a
//! cube as the set of finest-level points whose center chain ends at it. The
//! Euclidean backend covers one-dimensional models with `eta = 1/2` using the
//! one-third shifted dyadic grids, which nest exactly and place every
//! interval inside a cube three levels up in one of the three systems.
//!
//! Whatever the construction, [`validate_family`] re-checks the partition,
//! nesting and containment-ball properties from the member lists alone.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::{Metric, Space, SpaceProfile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Cube<T> {
    pub system: usize,
    pub level: i32,
    /// Point index of the cube's center.
    pub center: usize,
    /// Sorted point indices.
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub mass: T,
    /// Coarsest cube of the system with the same member set.
    pub canonical: usize,
}

impl<T> Cube<T> {
    pub fn contains(&self, point: usize) -> bool {
        self.members.binary_search(&point).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct DyadicSystem<T> {
    pub index: usize,
    pub k_min: i32,
    pub k_max: i32,
    pub cubes: Vec<Cube<T>>,
    /// Cube ids per level, coarsest first.
    by_level: Vec<Vec<usize>>,
    /// `point_cube[level][point]` is the cube containing the point.
    point_cube: Vec<Vec<usize>>,
}

impl<T: Real> DyadicSystem<T> {
    fn assemble(
        index: usize,
        k_min: i32,
        space: &Space<T>,
        levels: Vec<Vec<(usize, Vec<usize>)>>,
    ) -> Self {
        // levels[i] lists (center, members) at level k_min + i; members sorted
        let n = space.len();
        let mut cubes = Vec::new();
        let mut by_level = Vec::with_capacity(levels.len());
        let mut point_cube: Vec<Vec<usize>> = Vec::with_capacity(levels.len());
        for (i, level) in levels.into_iter().enumerate() {
            let mut ids = Vec::with_capacity(level.len());
            let mut map = vec![usize::MAX; n];
            for (center, members) in level {
                let id = cubes.len();
                for &p in &members {
                    map[p] = id;
                }
                let mass = members.iter().map(|&p| space.mass(p)).sum();
                let parent = (i > 0).then(|| point_cube[i - 1][center]);
                cubes.push(Cube {
                    system: index,
                    level: k_min + i as i32,
                    center,
                    members,
                    parent,
                    children: Vec::new(),
                    mass,
                    canonical: id,
                });
                ids.push(id);
            }
            by_level.push(ids);
            point_cube.push(map);
        }
        for id in 0..cubes.len() {
            if let Some(p) = cubes[id].parent {
                cubes[p].children.push(id);
                if cubes[p].members.len() == cubes[id].members.len() {
                    cubes[id].canonical = cubes[p].canonical;
                }
            }
        }
        DyadicSystem {
            index,
            k_min,
            k_max: k_min + by_level.len() as i32 - 1,
            cubes,
            by_level,
            point_cube,
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    pub fn level_index(&self, level: i32) -> Option<usize> {
        (level >= self.k_min && level <= self.k_max).then(|| (level - self.k_min) as usize)
    }

    /// Cubes at `level`, empty outside the level range.
    pub fn cubes_at(&self, level: i32) -> &[usize] {
        self.level_index(level).map_or(&[], |i| &self.by_level[i])
    }

    /// The cube at `level` containing `point`.
    pub fn cube_of(&self, point: usize, level: i32) -> Option<usize> {
        let i = self.level_index(level)?;
        let id = self.point_cube[i][point];
        (id != usize::MAX).then_some(id)
    }

    /// Cubes containing `point`, coarsest first.
    pub fn chain(&self, point: usize) -> impl Iterator<Item = usize> + '_ {
        self.point_cube
            .iter()
            .map(move |m| m[point])
            .filter(|&c| c != usize::MAX)
    }

    pub fn root(&self) -> usize {
        self.by_level[0][0]
    }

    pub fn cube(&self, id: usize) -> &Cube<T> {
        &self.cubes[id]
    }

    /// `true` when `inner` is a subset of `outer` (as point sets).
    pub fn is_subcube(&self, inner: usize, outer: usize) -> bool {
        let (a, b) = (&self.cubes[inner], &self.cubes[outer]);
        a.members.len() <= b.members.len() && b.contains(a.members[0]) && a.level >= b.level
    }

    /// Average of `f` over a cube.
    pub fn average(&self, id: usize, f: &[T], space: &Space<T>) -> T {
        let c = &self.cubes[id];
        space.integral(f, c.members.iter().copied()) / c.mass
    }

    /// Mutable access for constructing counterexamples in tests.
    #[doc(hidden)]
    pub fn cubes_mut(&mut self) -> &mut Vec<Cube<T>> {
        &mut self.cubes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Nets,
    Euclidean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct DyadicFamily<T> {
    pub eta: T,
    pub kappa: T,
    pub backend: Backend,
    pub k_min: i32,
    pub k_max: i32,
    /// Inner and outer containment-ball constants `(c1, C1)` the validator uses.
    pub sandwich: (T, T),
    /// A ball at scale `eta^k` is looked up among cubes of level `k - offset`.
    pub ball_level_offset: i32,
    pub systems: Vec<DyadicSystem<T>>,
}

impl<T: Real> DyadicFamily<T> {
    pub fn system(&self, t: usize) -> &DyadicSystem<T> {
        &self.systems[t]
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    /// The net-construction constants `c1 = (12 kappa^4)^-1`, `C1 = 4 kappa^2`.
    pub fn standard_sandwich(kappa: T) -> (T, T) {
        (
            T::one() / (T::lit(12.0) * kappa.powi(4)),
            T::lit(4.0) * kappa * kappa,
        )
    }

    /// `D^m` with `m` the number of doublings from the inner ball of a child
    /// to a ball around its center containing the parent's outer ball.
    pub fn parent_child_bound(&self, doubling: T) -> T {
        let (c1, big) = self.sandwich;
        let ratio = T::lit(2.0) * self.kappa * big / (c1 * self.eta);
        doubling.powf(ratio.log2().ceil().max(T::zero()))
    }

    /// Upper bound for `mu(Q_B) / mu(B)` implied by doubling and the outer ball.
    pub fn ball_comparability_bound(&self, doubling: T) -> T {
        let (_, big) = self.sandwich;
        let ratio = T::lit(2.0) * self.kappa * big / self.eta.powi(self.ball_level_offset + 1);
        doubling.powf(ratio.log2().ceil().max(T::zero()))
    }

    /// The largest `k` with `eta^k >= r`, so `eta^(k+1) < r <= eta^k`.
    pub fn scale_level(&self, r: T) -> i32 {
        let mut k = (r.ln() / self.eta.ln())
            .floor()
            .to_i32()
            .expect("level in range");
        while self.eta.powi(k) < r {
            k -= 1;
        }
        while self.eta.powi(k + 1) >= r {
            k += 1;
        }
        k
    }
}

#[derive(Clone, Debug)]
pub struct BuildOptions<T> {
    pub eta: T,
    pub systems: usize,
    pub seed: u64,
    /// Permit the shifted-grid construction for 1-D Euclidean models.
    pub euclidean_backend: bool,
    pub max_attempts: usize,
}

impl<T: Real> BuildOptions<T> {
    pub fn new(eta: T, systems: usize, seed: u64) -> Self {
        BuildOptions {
            eta,
            systems,
            seed,
            euclidean_backend: false,
            max_attempts: 20,
        }
    }

    pub fn euclidean(systems: usize, seed: u64) -> Self {
        BuildOptions {
            eta: T::lit(0.5),
            systems,
            seed,
            euclidean_backend: true,
            max_attempts: 20,
        }
    }
}

/// Builds `K` adjacent dyadic systems and checks them with [`validate_family`].
pub fn build_family<T: Real>(
    space: &Space<T>,
    profile: &SpaceProfile<T>,
    opts: &BuildOptions<T>,
) -> Result<DyadicFamily<T>> {
    if opts.systems == 0 {
        return Err(Error::input("at least one dyadic system is required"));
    }
    if !(opts.eta > T::zero() && opts.eta < T::one()) {
        return Err(Error::input("eta must lie in (0, 1)"));
    }
    let kappa = profile.kappa();
    let product = T::lit(96.0) * kappa.powi(6) * opts.eta;
    let euclidean_ok = opts.euclidean_backend
        && kappa == T::one()
        && space.dimension() == 1
        && matches!(space.metric(), Metric::Euclidean);
    if euclidean_ok && product > T::one() {
        return build_euclidean(space, opts);
    }
    if product > T::one() {
        return Err(Error::Constraint {
            product: product.as_f64(),
        });
    }

    let mut last = String::new();
    for attempt in 0..opts.max_attempts.max(1) {
        let systems: Vec<DyadicSystem<T>> = (0..opts.systems)
            .into_par_iter()
            .map(|t| build_net_system(space, opts.eta, t, derive_seed(opts.seed, t, attempt)))
            .collect();
        let family = uniform_levels(
            space,
            opts.eta,
            kappa,
            Backend::Nets,
            DyadicFamily::standard_sandwich(kappa),
            1,
            systems,
        );
        let report = validate_family(&family, space, profile.doubling());
        match report.violations.first() {
            None => return Ok(family),
            Some(v) => last = format!("{v:?}"),
        }
    }
    Err(Error::ConstructionFailed {
        attempts: opts.max_attempts.max(1),
        violation: last,
    })
}

fn derive_seed(seed: u64, system: usize, attempt: usize) -> u64 {
    seed ^ (system as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (attempt as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

fn net_level_range<T: Real>(space: &Space<T>, eta: T) -> (i32, i32) {
    if space.len() == 1 {
        return (0, 1);
    }
    let diam = space.diameter();
    let dmin = space.min_positive_distance();
    let lne = eta.ln();
    // coarsest: eta^k > diam, so one center; finest: eta^k <= dmin, so every point
    let mut k_min = ((diam.ln() / lne).ceil() - T::one())
        .to_i32()
        .expect("level");
    while eta.powi(k_min) <= diam {
        k_min -= 1;
    }
    while eta.powi(k_min + 1) > diam {
        k_min += 1;
    }
    let mut k_max = (dmin.ln() / lne).ceil().to_i32().expect("level");
    while eta.powi(k_max) > dmin {
        k_max += 1;
    }
    while k_max > k_min + 1 && eta.powi(k_max - 1) <= dmin {
        k_max -= 1;
    }
    (k_min, k_max.max(k_min + 1))
}

fn build_net_system<T: Real>(space: &Space<T>, eta: T, t: usize, seed: u64) -> DyadicSystem<T> {
    let n = space.len();
    let (k_min, k_max) = net_level_range(space, eta);
    let mut visit: Vec<usize> = (0..n).collect();
    visit.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    // nested nets, coarsest first
    let mut nets: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for k in k_min..=k_max {
        let sep = eta.powi(k);
        for &p in &visit {
            if current.contains(&p) {
                continue;
            }
            if current.iter().all(|&c| space.dist(c, p) >= sep) {
                current.push(p);
            }
        }
        let mut sorted = current.clone();
        sorted.sort_unstable();
        nets.push(sorted);
    }

    // parent center of each center, one level up
    let levels = nets.len();
    let mut parent_of: Vec<Vec<usize>> = vec![Vec::new(); levels];
    for i in 1..levels {
        parent_of[i] = nets[i]
            .iter()
            .map(|&z| {
                let mut best = nets[i - 1][0];
                for &c in &nets[i - 1] {
                    let (dc, db) = (space.dist(z, c), space.dist(z, best));
                    if dc < db || (dc == db && c < best) {
                        best = c;
                    }
                }
                best
            })
            .collect();
    }

    // bottom-up members
    let mut members: Vec<Vec<Vec<usize>>> = vec![Vec::new(); levels];
    members[levels - 1] = nets[levels - 1].iter().map(|&z| vec![z]).collect();
    for i in (1..levels).rev() {
        let mut up: Vec<Vec<usize>> = vec![Vec::new(); nets[i - 1].len()];
        for (j, &pz) in parent_of[i].iter().enumerate() {
            let slot = nets[i - 1].binary_search(&pz).expect("nested nets");
            up[slot].extend_from_slice(&members[i][j]);
        }
        for m in &mut up {
            m.sort_unstable();
        }
        members[i - 1] = up;
    }
    let levels_data = nets
        .into_iter()
        .zip(members)
        .map(|(centers, ms)| centers.into_iter().zip(ms).collect())
        .collect();
    DyadicSystem::assemble(t, k_min, space, levels_data)
}

/// Pads every system with copies of its top cube so all share `k_min`.
fn uniform_levels<T: Real>(
    space: &Space<T>,
    eta: T,
    kappa: T,
    backend: Backend,
    sandwich: (T, T),
    ball_level_offset: i32,
    systems: Vec<DyadicSystem<T>>,
) -> DyadicFamily<T> {
    let k_min = systems.iter().map(|s| s.k_min).min().expect("nonempty");
    let k_max = systems.iter().map(|s| s.k_max).max().expect("nonempty");
    let systems = systems
        .into_iter()
        .map(|s| {
            if s.k_min == k_min && s.k_max == k_max {
                return s;
            }
            let mut levels: Vec<Vec<(usize, Vec<usize>)>> = Vec::new();
            let top = s.cube(s.root());
            for _ in k_min..s.k_min {
                levels.push(vec![(top.center, top.members.clone())]);
            }
            for k in s.levels() {
                levels.push(
                    s.cubes_at(k)
                        .iter()
                        .map(|&c| (s.cubes[c].center, s.cubes[c].members.clone()))
                        .collect(),
                );
            }
            let finest: Vec<(usize, Vec<usize>)> = s
                .cubes_at(s.k_max)
                .iter()
                .map(|&c| (s.cubes[c].center, s.cubes[c].members.clone()))
                .collect();
            for _ in s.k_max..k_max {
                levels.push(finest.clone());
            }
            DyadicSystem::assemble(s.index, k_min, space, levels)
        })
        .collect();
    DyadicFamily {
        eta,
        kappa,
        backend,
        k_min,
        k_max,
        sandwich,
        ball_level_offset,
        systems,
    }
}

/// Shift numerators `sigma_k` (in thirds of the cube side) for system `t`.
fn third_shift(t: usize, k: i32) -> i64 {
    let t = t as i64;
    if k.rem_euclid(2) == 0 {
        t
    } else {
        -t
    }
}

fn build_euclidean<T: Real>(space: &Space<T>, opts: &BuildOptions<T>) -> Result<DyadicFamily<T>> {
    if opts.eta != T::lit(0.5) {
        return Err(Error::input("the Euclidean backend uses eta = 1/2"));
    }
    if opts.systems > 3 {
        return Err(Error::input(
            "the one-third shifted grids provide at most three distinct systems",
        ));
    }
    let n = space.len();
    let xs: Vec<T> = (0..n).map(|i| space.coords(i)[0]).collect();
    let period = space.period();
    let three = T::lit(3.0);

    // finest level: every occupied cell holds one point
    let scale = |k: i32| period.unwrap_or(T::one()) * T::lit(2.0).powi(-k);
    let finest_index = |t: usize, k: i32, x: T| -> i64 {
        let s = T::from_i64(third_shift(t, k)).expect("small");
        ((three * x / scale(k) - s) / three)
            .floor()
            .to_i64()
            .expect("index")
    };
    let mut k_fine = match period {
        Some(_) => 0,
        None => (-space.diameter().max(T::epsilon()).log2())
            .floor()
            .to_i32()
            .unwrap_or(0),
    };
    while n > 1
        && !(0..opts.systems).all(|t| {
            let mut idx: Vec<i64> = xs.iter().map(|&x| finest_index(t, k_fine, x)).collect();
            idx.sort_unstable();
            idx.windows(2).all(|w| w[0] != w[1])
        })
    {
        k_fine += 1;
        if k_fine > 60 {
            return Err(Error::input("points too close for the dyadic grid"));
        }
    }

    let mut systems = Vec::with_capacity(opts.systems);
    for t in 0..opts.systems {
        // indices per level, finest first, going up until a single cube remains
        let wrap = |k: i32, m: i64| -> i64 {
            if period.is_some() {
                m.rem_euclid(1i64 << k.max(0))
            } else {
                m
            }
        };
        let mut per_level: Vec<Vec<i64>> = vec![xs
            .iter()
            .map(|&x| wrap(k_fine, finest_index(t, k_fine, x)))
            .collect()];
        let mut k = k_fine;
        loop {
            let cur = per_level.last().expect("nonempty");
            if cur.iter().all(|&m| m == cur[0]) {
                break;
            }
            let (sc, sp) = (third_shift(t, k), third_shift(t, k - 1));
            let up: Vec<i64> = cur
                .iter()
                .map(|&m| wrap(k - 1, (3 * m + sc - 2 * sp).div_euclid(3).div_euclid(2)))
                .collect();
            per_level.push(up);
            k -= 1;
        }
        per_level.reverse();
        let k_min = k;
        let levels: Vec<Vec<(usize, Vec<usize>)>> = per_level
            .iter()
            .enumerate()
            .map(|(i, idx)| {
                let level = k_min + i as i32;
                let mut groups: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
                for (p, &m) in idx.iter().enumerate() {
                    groups.entry(m).or_default().push(p);
                }
                groups
                    .into_iter()
                    .map(|(m, members)| {
                        let s = T::from_i64(third_shift(t, level)).expect("small");
                        let mid = scale(level)
                            * (T::from_i64(m).expect("index") + s / three + T::lit(0.5));
                        let center = *members
                            .iter()
                            .min_by(|&&a, &&b| {
                                let (da, db) = (
                                    line_distance(xs[a], mid, period),
                                    line_distance(xs[b], mid, period),
                                );
                                da.partial_cmp(&db).expect("finite").then(a.cmp(&b))
                            })
                            .expect("nonempty cube");
                        (center, members)
                    })
                    .collect()
            })
            .collect();
        systems.push(DyadicSystem::assemble(t, k_min, space, levels));
    }

    let mut family = uniform_levels(
        space,
        opts.eta,
        T::one(),
        Backend::Euclidean,
        (T::one(), T::one()),
        3,
        systems,
    );
    family.sandwich = measured_sandwich(&family, space);
    Ok(family)
}

fn line_distance<T: Real>(a: T, b: T, period: Option<T>) -> T {
    let d = (a - b).abs();
    match period {
        Some(l) => {
            let d = d % l;
            d.min(l - d)
        }
        None => d,
    }
}

/// Smallest inner and largest outer containment radii over all cubes, in
/// units of `eta^k`.
pub fn measured_sandwich<T: Real>(family: &DyadicFamily<T>, space: &Space<T>) -> (T, T) {
    let mut inner = T::infinity();
    let mut outer = T::zero();
    for sys in &family.systems {
        for c in &sys.cubes {
            let scale = family.eta.powi(c.level);
            let mut r_in = T::infinity();
            let mut r_out = T::zero();
            for y in 0..space.len() {
                let d = space.dist(c.center, y);
                if c.contains(y) {
                    r_out = r_out.max(d);
                } else {
                    r_in = r_in.min(d);
                }
            }
            inner = inner.min(r_in / scale);
            outer = outer.max(r_out / scale);
        }
    }
    if !inner.is_finite() {
        inner = T::one();
    }
    (
        inner,
        (outer * (T::one() + T::radius_nudge())).max(T::epsilon()),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// A point missing from every cube of a level.
    Uncovered {
        system: usize,
        level: i32,
        point: usize,
    },
    /// Two cubes of one level share a point.
    Overlap {
        system: usize,
        level: i32,
        point: usize,
        cubes: (usize, usize),
    },
    /// A cube meets two cubes of the next coarser level.
    NotNested {
        system: usize,
        cube: usize,
        others: (usize, usize),
    },
    /// A cube's center is not one of its members.
    CenterOutside { system: usize, cube: usize },
    /// A point of the inner containment ball lies outside the cube.
    InnerBall {
        system: usize,
        cube: usize,
        point: usize,
    },
    /// A member lies outside the outer containment ball.
    OuterBall {
        system: usize,
        cube: usize,
        point: usize,
    },
    /// `mu(parent) / mu(child)` exceeds the doubling-chain bound.
    Comparability {
        system: usize,
        cube: usize,
        ratio: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ValidationReport<T> {
    pub violations: Vec<Violation>,
    pub cubes_checked: usize,
    pub worst_parent_child_ratio: T,
    pub parent_child_bound: T,
    pub sandwich: (T, T),
}

impl<T> ValidationReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks partition, nesting, containment balls and parent/child measure
/// comparability using only the cubes' member lists.
pub fn validate_family<T: Real>(
    family: &DyadicFamily<T>,
    space: &Space<T>,
    doubling: T,
) -> ValidationReport<T> {
    let n = space.len();
    let (c1, big_c1) = family.sandwich;
    let bound = family.parent_child_bound(doubling);
    let per_system: Vec<(Vec<Violation>, T, usize)> = family
        .systems
        .par_iter()
        .map(|sys| {
            let mut v = Vec::new();
            let mut worst = T::one();
            // owners[level][point] from member lists
            let mut owners: Vec<Vec<Vec<usize>>> = Vec::new();
            for k in sys.levels() {
                let mut own = vec![Vec::new(); n];
                for &c in sys.cubes_at(k) {
                    for &p in &sys.cubes[c].members {
                        own[p].push(c);
                    }
                }
                for (p, o) in own.iter().enumerate() {
                    match o.len() {
                        0 => v.push(Violation::Uncovered {
                            system: sys.index,
                            level: k,
                            point: p,
                        }),
                        1 => {}
                        _ => v.push(Violation::Overlap {
                            system: sys.index,
                            level: k,
                            point: p,
                            cubes: (o[0], o[1]),
                        }),
                    }
                }
                owners.push(own);
            }
            for (id, c) in sys.cubes.iter().enumerate() {
                let li = (c.level - sys.k_min) as usize;
                if li > 0 {
                    let mut hit: Vec<usize> = c
                        .members
                        .iter()
                        .flat_map(|&p| owners[li - 1][p].iter().copied())
                        .collect();
                    hit.sort_unstable();
                    hit.dedup();
                    if hit.len() > 1 {
                        v.push(Violation::NotNested {
                            system: sys.index,
                            cube: id,
                            others: (hit[0], hit[1]),
                        });
                    }
                }
                if !c.contains(c.center) {
                    v.push(Violation::CenterOutside {
                        system: sys.index,
                        cube: id,
                    });
                }
                let scale = family.eta.powi(c.level);
                let (r_in, r_out) = (c1 * scale, big_c1 * scale);
                for y in 0..n {
                    let d = space.dist(c.center, y);
                    let inside = c.contains(y);
                    if d < r_in && !inside {
                        v.push(Violation::InnerBall {
                            system: sys.index,
                            cube: id,
                            point: y,
                        });
                    }
                    if inside && !(d < r_out) {
                        v.push(Violation::OuterBall {
                            system: sys.index,
                            cube: id,
                            point: y,
                        });
                    }
                }
                if let Some(p) = c.parent {
                    let ratio = sys.cubes[p].mass / c.mass;
                    worst = worst.max(ratio);
                    if ratio > bound {
                        v.push(Violation::Comparability {
                            system: sys.index,
                            cube: id,
                            ratio: ratio.as_f64(),
                        });
                    }
                }
            }
            (v, worst, sys.cubes.len())
        })
        .collect();
    let mut report = ValidationReport {
        violations: Vec::new(),
        cubes_checked: 0,
        worst_parent_child_ratio: T::one(),
        parent_child_bound: bound,
        sandwich: family.sandwich,
    };
    for (v, w, c) in per_system {
        report.violations.extend(v);
        report.worst_parent_child_ratio = report.worst_parent_child_ratio.max(w);
        report.cubes_checked += c;
    }
    report
}

/// Result of [`ball_to_cube`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BallCover<T> {
    pub system: usize,
    pub cube: usize,
    /// Level `k - offset` mandated by the ball's scale (before clamping to the
    /// family's level range).
    pub mandated_level: i32,
    /// Level of the returned cube.
    pub level: i32,
    /// `mu(Q_B) / mu(B)`.
    pub mass_ratio: T,
}

/// Finds a cube of the mandated level, in any system, containing `B(center, r)`.
pub fn ball_to_cube<T: Real>(
    family: &DyadicFamily<T>,
    space: &Space<T>,
    center: usize,
    r: T,
) -> Result<BallCover<T>> {
    let members = space.ball(center, r)?;
    let k = family.scale_level(r);
    let mandated = k - family.ball_level_offset;
    let level = mandated.clamp(family.k_min, family.k_max);
    let ball_mass: T = members.iter().map(|&p| space.mass(p)).sum();
    for sys in &family.systems {
        let Some(q) = sys.cube_of(members[0], level) else {
            continue;
        };
        if members.iter().all(|&p| sys.cube_of(p, level) == Some(q)) {
            return Ok(BallCover {
                system: sys.index,
                cube: q,
                mandated_level: mandated,
                level,
                mass_ratio: sys.cubes[q].mass / ball_mass,
            });
        }
    }
    Err(Error::Lookup {
        center,
        radius: r.as_f64(),
        level: mandated,
    })
}
