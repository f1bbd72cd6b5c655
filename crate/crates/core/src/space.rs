//! Finite models of spaces of homogeneous type.
//!
//! A [`Space`] is a finite point set carrying a quasi-metric and strictly
//! positive point masses. Integrals are mass-weighted sums and every
//! supremum over balls becomes a finite scan over *critical* balls: for each
//! center, one ball per distinct distance to another point, with the radius
//! nudged just above that distance so the strict inequality `rho < r`
//! admits it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// How pairwise distances are derived from coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Metric<T> {
    Euclidean,
    /// Squared Euclidean distance; a quasi-metric with `kappa <= 2`.
    Squared,
    /// Full symmetric distance table, row-major by point index.
    Custom {
        table: Vec<Vec<T>>,
    },
}

/// A critical ball: `count` nearest points of `center`, realized by `radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball<T> {
    pub center: usize,
    pub radius: T,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc<T>", into = "SpaceDoc<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Space<T: Real> {
    coords: Vec<Vec<T>>,
    masses: Vec<T>,
    metric: Metric<T>,
    /// Circumference of the circle when the ambient model is periodic.
    period: Option<T>,
    dist: Vec<T>,
    order: Vec<Vec<u32>>,
    sorted: Vec<Vec<T>>,
    balls: Vec<Vec<(u32, T)>>,
    min_positive: T,
}

/// Serialized form of a [`Space`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SpaceDoc<T> {
    pub points: Vec<PointDoc<T>>,
    pub metric: Metric<T>,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct PointDoc<T> {
    pub id: usize,
    pub coords: Vec<T>,
    pub mass: T,
}

impl<T: Real> TryFrom<SpaceDoc<T>> for Space<T> {
    type Error = Error;

    fn try_from(doc: SpaceDoc<T>) -> Result<Self> {
        let n = doc.points.len();
        let mut slots: Vec<Option<PointDoc<T>>> = vec![None; n];
        for p in doc.points {
            if p.id >= n || slots[p.id].is_some() {
                return Err(Error::input(format!(
                    "point ids must be a permutation of 0..{n}, got {}",
                    p.id
                )));
            }
            let id = p.id;
            slots[id] = Some(p);
        }
        let (coords, masses): (Vec<_>, Vec<_>) = slots
            .into_iter()
            .map(|p| {
                let p = p.expect("filled");
                (p.coords, p.mass)
            })
            .unzip();
        let period = match (doc.periodic, doc.period) {
            (true, Some(l)) => Some(l),
            (true, None) => Some(T::one()),
            (false, _) => None,
        };
        Space::new(coords, masses, doc.metric, period)
    }
}

impl<T: Real> From<Space<T>> for SpaceDoc<T> {
    fn from(s: Space<T>) -> Self {
        SpaceDoc {
            points: (0..s.len())
                .map(|i| PointDoc {
                    id: i,
                    coords: s.coords[i].clone(),
                    mass: s.masses[i],
                })
                .collect(),
            metric: s.metric.clone(),
            periodic: s.period.is_some(),
            period: s.period,
        }
    }
}

impl<T: Real> Space<T> {
    /// Builds a space and precomputes the distance matrix and per-center
    /// distance orderings.
    pub fn new(
        coords: Vec<Vec<T>>,
        masses: Vec<T>,
        metric: Metric<T>,
        period: Option<T>,
    ) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::input("space must contain at least one point"));
        }
        if masses.len() != n {
            return Err(Error::input(format!(
                "{} masses for {} points",
                masses.len(),
                n
            )));
        }
        if let Some(i) = masses
            .iter()
            .position(|m| !(m.is_finite() && *m > T::zero()))
        {
            return Err(Error::input(format!(
                "mass of point {i} must be finite and positive"
            )));
        }
        if let Some(l) = period {
            if !(l > T::zero()) {
                return Err(Error::input("period must be positive"));
            }
            if coords.iter().any(|c| c.len() != 1) {
                return Err(Error::input("periodic spaces are one-dimensional"));
            }
        }
        if let Metric::Custom { table } = &metric {
            if table.len() != n || table.iter().any(|row| row.len() != n) {
                return Err(Error::input("custom distance table must be n x n"));
            }
        } else {
            let dim = coords[0].len();
            if dim == 0 || coords.iter().any(|c| c.len() != dim) {
                return Err(Error::input(
                    "all points need the same nonzero number of coordinates",
                ));
            }
        }

        let mut dist = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = pair_distance(&coords, &metric, period, i, j);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() || d < T::zero() {
                    return Err(Error::input(format!(
                        "distance ({i},{j}) is not a finite nonnegative number"
                    )));
                }
                if i == j && d != T::zero() {
                    return Err(Error::input(format!("rho({i},{i}) must be zero")));
                }
                if i != j && d == T::zero() {
                    return Err(Error::input(format!("points {i} and {j} coincide")));
                }
                if d != dist[j * n + i] {
                    return Err(Error::input(format!("distance ({i},{j}) is not symmetric")));
                }
            }
        }
        let min_positive = if n > 1 {
            dist.iter()
                .copied()
                .filter(|d| *d > T::zero())
                .fold(T::infinity(), T::min)
        } else {
            T::one()
        };

        let order: Vec<Vec<u32>> = (0..n)
            .map(|c| {
                let mut o: Vec<u32> = (0..n as u32).collect();
                o.sort_by(|&a, &b| {
                    dist[c * n + a as usize]
                        .partial_cmp(&dist[c * n + b as usize])
                        .expect("finite")
                        .then(a.cmp(&b))
                });
                o
            })
            .collect();
        let sorted: Vec<Vec<T>> = (0..n)
            .map(|c| order[c].iter().map(|&y| dist[c * n + y as usize]).collect())
            .collect();
        let tiny = min_positive * T::radius_nudge();
        let balls = sorted
            .iter()
            .map(|row| {
                let mut out: Vec<(u32, T)> = Vec::new();
                for &d in row {
                    let r = if d == T::zero() {
                        tiny
                    } else {
                        d * (T::one() + T::radius_nudge())
                    };
                    let count = row.partition_point(|&x| x < r) as u32;
                    if out.last().is_none_or(|&(c, _)| c != count) {
                        out.push((count, r));
                    }
                }
                out
            })
            .collect();

        Ok(Space {
            coords,
            masses,
            metric,
            period,
            dist,
            order,
            sorted,
            balls,
            min_positive,
        })
    }

    /// `n` points `i / (n - 1)` on `[0, 1]` (endpoints included), unit total mass.
    pub fn uniform_interval(n: usize) -> Result<Self> {
        let step = if n > 1 {
            T::one() / T::from_usize_lossy(n - 1)
        } else {
            T::zero()
        };
        let coords = (0..n)
            .map(|i| vec![T::from_usize_lossy(i) * step])
            .collect();
        Self::new(coords, uniform_masses(n), Metric::Euclidean, None)
    }

    /// `n` cell midpoints `(i + 1/2) / n` of `[0, 1)`, unit total mass. For `n`
    /// a power of two every dyadic subinterval holds the same number of points.
    pub fn uniform_cells(n: usize) -> Result<Self> {
        let nn = T::from_usize_lossy(n);
        let coords = (0..n)
            .map(|i| vec![(T::from_usize_lossy(i) + T::lit(0.5)) / nn])
            .collect();
        Self::new(coords, uniform_masses(n), Metric::Euclidean, None)
    }

    /// `n` equally spaced points `i / n` on the circle of circumference 1.
    pub fn uniform_circle(n: usize) -> Result<Self> {
        let nn = T::from_usize_lossy(n);
        let coords = (0..n).map(|i| vec![T::from_usize_lossy(i) / nn]).collect();
        Self::new(coords, uniform_masses(n), Metric::Euclidean, Some(T::one()))
    }

    /// `n` seeded uniform random points in the unit square.
    pub fn random_cloud(n: usize, seed: u64, metric: Metric<T>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords = (0..n)
            .map(|_| vec![T::lit(rng.gen::<f64>()), T::lit(rng.gen::<f64>())])
            .collect();
        Self::new(coords, uniform_masses(n), metric, None)
    }

    /// `m x m` lattice with unit spacing.
    pub fn lattice(m: usize, metric: Metric<T>) -> Result<Self> {
        let coords = (0..m * m)
            .map(|i| vec![T::from_usize_lossy(i % m), T::from_usize_lossy(i / m)])
            .collect();
        Self::new(coords, uniform_masses(m * m), metric, None)
    }

    /// Same points and metric with new masses.
    pub fn with_masses(&self, masses: Vec<T>) -> Result<Self> {
        Self::new(
            self.coords.clone(),
            masses,
            self.metric.clone(),
            self.period,
        )
    }

    /// Same points and masses under a different metric.
    pub fn with_metric(&self, metric: Metric<T>) -> Result<Self> {
        Self::new(
            self.coords.clone(),
            self.masses.clone(),
            metric,
            self.period,
        )
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn coords(&self, i: usize) -> &[T] {
        &self.coords[i]
    }

    pub fn dimension(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    pub fn metric(&self) -> &Metric<T> {
        &self.metric
    }

    pub fn period(&self) -> Option<T> {
        self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    pub fn mass(&self, i: usize) -> T {
        self.masses[i]
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn total_mass(&self) -> T {
        self.masses.iter().copied().sum()
    }

    pub fn min_positive_distance(&self) -> T {
        self.min_positive
    }

    pub fn diameter(&self) -> T {
        self.dist.iter().copied().fold(T::zero(), T::max)
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> T {
        self.dist[x * self.len() + y]
    }

    /// Points sorted by distance from `center` (ties by index).
    pub fn order(&self, center: usize) -> &[u32] {
        &self.order[center]
    }

    /// Number of points with `rho(center, y) < r`.
    pub fn ball_count(&self, center: usize, r: T) -> usize {
        self.sorted[center].partition_point(|&d| d < r)
    }

    /// The ball `{y : rho(center, y) < r}` as sorted point indices.
    pub fn ball(&self, center: usize, r: T) -> Result<Vec<usize>> {
        if center >= self.len() {
            return Err(Error::input(format!("unknown center {center}")));
        }
        if !(r > T::zero()) {
            return Err(Error::input("ball radius must be positive"));
        }
        let mut pts: Vec<usize> = self
            .members(center, self.ball_count(center, r))
            .iter()
            .map(|&y| y as usize)
            .collect();
        pts.sort_unstable();
        Ok(pts)
    }

    /// The `count` nearest points of `center`, in distance order.
    pub fn members(&self, center: usize, count: usize) -> &[u32] {
        &self.order[center][..count]
    }

    /// Critical balls at `center`, smallest first; the last is the whole space.
    pub fn critical_balls(&self, center: usize) -> impl Iterator<Item = Ball<T>> + '_ {
        self.balls[center].iter().map(move |&(count, radius)| Ball {
            center,
            radius,
            count: count as usize,
        })
    }

    /// Every critical ball of the space, grouped by center.
    pub fn all_balls(&self) -> impl Iterator<Item = Ball<T>> + '_ {
        (0..self.len()).flat_map(move |c| self.critical_balls(c))
    }

    /// Ball with the same center and radius scaled by `factor`.
    pub fn dilate(&self, ball: &Ball<T>, factor: T) -> Ball<T> {
        let radius = ball.radius * factor;
        Ball {
            center: ball.center,
            radius,
            count: self.ball_count(ball.center, radius),
        }
    }

    /// Cumulative sums of `f * mu` along the distance order of `center`;
    /// entry `k` is the integral of `f` over the `k` nearest points.
    pub fn prefix_integrals(&self, center: usize, f: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut acc = T::zero();
        out.push(acc);
        for &y in &self.order[center] {
            let y = y as usize;
            acc = acc + f[y] * self.masses[y];
            out.push(acc);
        }
        out
    }

    pub fn ball_mass(&self, ball: &Ball<T>) -> T {
        self.members(ball.center, ball.count)
            .iter()
            .map(|&y| self.masses[y as usize])
            .sum()
    }

    /// `int_E f dmu` over an index set.
    pub fn integral(&self, f: &[T], set: impl IntoIterator<Item = usize>) -> T {
        set.into_iter().map(|y| f[y] * self.masses[y]).sum()
    }
}

fn uniform_masses<T: Real>(n: usize) -> Vec<T> {
    let m = T::one() / T::from_usize_lossy(n.max(1));
    vec![m; n]
}

fn pair_distance<T: Real>(
    coords: &[Vec<T>],
    metric: &Metric<T>,
    period: Option<T>,
    i: usize,
    j: usize,
) -> T {
    if let Metric::Custom { table } = metric {
        return table[i][j];
    }
    if i == j {
        return T::zero();
    }
    let sq: T = match period {
        Some(l) => {
            let d = (coords[i][0] - coords[j][0]).abs() % l;
            let d = d.min(l - d);
            d * d
        }
        None => coords[i]
            .iter()
            .zip(&coords[j])
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum(),
    };
    match metric {
        Metric::Euclidean => sq.sqrt(),
        Metric::Squared => sq,
        Metric::Custom { .. } => unreachable!(),
    }
}

/// A constant together with the configuration attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witnessed<T, W> {
    pub value: T,
    /// `None` when the value is a floor rather than an attained ratio.
    pub witness: Option<W>,
}

/// Structure constants of a finite space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SpaceProfile<T> {
    /// Quasi-triangle constant with its witness triple `(x, y, z)`.
    pub kappa: Witnessed<T, [usize; 3]>,
    /// Doubling constant with its witness `(center, radius)`.
    pub doubling: Witnessed<T, (usize, T)>,
    /// Greedy covering number with the witness ball `(center, radius)`.
    pub covering: Witnessed<usize, (usize, T)>,
}

impl<T: Real> SpaceProfile<T> {
    /// Measures all three constants. A single point has `kappa = 1`.
    pub fn measure(space: &Space<T>) -> Result<Self> {
        let kappa = if space.len() < 2 {
            Witnessed {
                value: T::one(),
                witness: None,
            }
        } else {
            quasi_triangle_constant(space)?
        };
        Ok(SpaceProfile {
            kappa,
            doubling: doubling_constant(space),
            covering: covering_number(space),
        })
    }

    pub fn kappa(&self) -> T {
        self.kappa.value
    }

    pub fn doubling(&self) -> T {
        self.doubling.value
    }

    pub fn covering(&self) -> usize {
        self.covering.value
    }

    /// Lower bound `1 / (2 (2 kappa)^{log2 N})` for weak A-infinity characteristics.
    pub fn weak_ainfty_floor(&self) -> T {
        let two = T::lit(2.0);
        let n = T::from_usize_lossy(self.covering.value);
        T::one() / (two * (two * self.kappa()).powf(n.log2()))
    }

    /// Re-evaluates the stored witnesses; returns the relative discrepancies
    /// `(kappa, doubling)`.
    pub fn recheck(&self, space: &Space<T>) -> (T, T) {
        let k = match self.kappa.witness {
            Some([x, y, z]) => {
                let v = space.dist(x, z) / (space.dist(x, y) + space.dist(y, z));
                ((v - self.kappa.value) / self.kappa.value).abs()
            }
            None => T::zero(),
        };
        let d = match self.doubling.witness {
            Some((x, r)) => {
                let small = Ball {
                    center: x,
                    radius: r,
                    count: space.ball_count(x, r),
                };
                let big = space.dilate(&small, T::lit(2.0));
                let v = space.ball_mass(&big) / space.ball_mass(&small);
                ((v - self.doubling.value) / self.doubling.value).abs()
            }
            None => T::zero(),
        };
        (k, d)
    }
}

/// Exact maximum of `rho(x,z) / (rho(x,y) + rho(y,z))` over ordered triples
/// of distinct points, floored at 1.
pub fn quasi_triangle_constant<T: Real>(space: &Space<T>) -> Result<Witnessed<T, [usize; 3]>> {
    let n = space.len();
    if n < 2 {
        return Err(Error::input(
            "quasi-triangle constant needs at least two points",
        ));
    }
    let per_x: Vec<Option<(T, [usize; 3])>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best: Option<(T, [usize; 3])> = None;
            for y in 0..n {
                if y == x {
                    continue;
                }
                let dxy = space.dist(x, y);
                for z in 0..n {
                    if z == x || z == y {
                        continue;
                    }
                    let v = space.dist(x, z) / (dxy + space.dist(y, z));
                    if best.is_none_or(|(b, _)| v > b) {
                        best = Some((v, [x, y, z]));
                    }
                }
            }
            best
        })
        .collect();
    let best =
        per_x
            .into_iter()
            .flatten()
            .fold(None, |acc: Option<(T, [usize; 3])>, cand| match acc {
                Some(a) if a.0 >= cand.0 => Some(a),
                _ => Some(cand),
            });
    // collinear triples of a true metric may round a hair above 1
    let snap = T::one() + T::epsilon() * T::lit(16.0);
    Ok(match best {
        Some((v, w)) if v > snap => Witnessed {
            value: v,
            witness: Some(w),
        },
        _ => Witnessed {
            value: T::one(),
            witness: None,
        },
    })
}

/// Maximum of `mu(B(x, 2r)) / mu(B(x, r))` over all centers and critical radii.
pub fn doubling_constant<T: Real>(space: &Space<T>) -> Witnessed<T, (usize, T)> {
    let two = T::lit(2.0);
    let per_x: Vec<(T, (usize, T))> = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let cum = space.prefix_integrals(x, &vec![T::one(); space.len()]);
            let mut best = (T::one(), (x, T::zero()));
            for b in space.critical_balls(x) {
                let big = space.ball_count(x, b.radius * two);
                let v = cum[big] / cum[b.count];
                if v > best.0 {
                    best = (v, (x, b.radius));
                }
            }
            best
        })
        .collect();
    let mut best: Option<(T, (usize, T))> = None;
    for cand in per_x {
        if best.is_none_or(|b| cand.0 > b.0) {
            best = Some(cand);
        }
    }
    match best {
        Some((v, w)) if v > T::one() => Witnessed {
            value: v,
            witness: Some(w),
        },
        _ => Witnessed {
            value: T::one(),
            witness: None,
        },
    }
}

/// Size of the greedy cover of `ball` by half-radius balls centered at its
/// own points: scanning members outward from the center, every point not yet
/// covered becomes a new center.
pub fn greedy_half_cover<T: Real>(space: &Space<T>, ball: &Ball<T>) -> usize {
    let members = space.members(ball.center, ball.count);
    let half = ball.radius / T::lit(2.0);
    let mut covered = vec![false; members.len()];
    let mut count = 0;
    for i in 0..members.len() {
        if covered[i] {
            continue;
        }
        count += 1;
        let c = members[i] as usize;
        for (j, &y) in members.iter().enumerate().skip(i) {
            if !covered[j] && space.dist(c, y as usize) < half {
                covered[j] = true;
            }
        }
    }
    count
}

/// Largest greedy half-radius cover over all critical balls; an upper bound
/// on the minimal covering number.
pub fn covering_number<T: Real>(space: &Space<T>) -> Witnessed<usize, (usize, T)> {
    let per_x: Vec<(usize, (usize, T))> = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let mut best = (1, (x, T::zero()));
            for b in space.critical_balls(x) {
                let k = greedy_half_cover(space, &b);
                if k > best.0 {
                    best = (k, (x, b.radius));
                }
            }
            best
        })
        .collect();
    let mut best: Option<(usize, (usize, T))> = None;
    for cand in per_x {
        if best.is_none_or(|b| cand.0 > b.0) {
            best = Some(cand);
        }
    }
    match best {
        Some((v, w)) if v > 1 => Witnessed {
            value: v,
            witness: Some(w),
        },
        _ => Witnessed {
            value: 1,
            witness: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_uses_strict_inequality() {
        let s = Space::<f64>::uniform_interval(16).unwrap();
        assert_eq!(s.ball(0, 0.10).unwrap(), vec![0, 1]);
        // 1/15 exactly on the boundary is excluded
        let edge = s.dist(0, 1);
        assert_eq!(s.ball(0, edge).unwrap(), vec![0]);
    }

    #[test]
    fn huge_radius_gives_everything() {
        let s = Space::<f64>::random_cloud(20, 3, Metric::Euclidean).unwrap();
        assert_eq!(s.ball(7, 1e9).unwrap(), (0..20).collect::<Vec<_>>());
        assert_eq!(s.critical_balls(7).last().unwrap().count, 20);
    }

    #[test]
    fn squared_metric_minimal_ball_is_singleton() {
        let s = Space::<f64>::random_cloud(30, 11, Metric::Squared).unwrap();
        let mut min = f64::INFINITY;
        for x in 0..30 {
            for y in 0..30 {
                if x != y {
                    min = min.min(s.dist(x, y));
                }
            }
        }
        for p in 0..30 {
            assert_eq!(s.ball(p, min).unwrap(), vec![p]);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Space::<f64>::new(vec![], vec![], Metric::Euclidean, None).is_err());
        assert!(Space::new(
            vec![vec![0.0], vec![0.0]],
            vec![0.5, 0.5],
            Metric::Euclidean,
            None
        )
        .is_err());
        assert!(Space::new(
            vec![vec![0.0], vec![1.0]],
            vec![0.5, 0.0],
            Metric::Euclidean,
            None
        )
        .is_err());
        let asym = Metric::Custom {
            table: vec![vec![0.0, 1.0], vec![2.0, 0.0]],
        };
        assert!(Space::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5], asym, None).is_err());
        let s = Space::<f64>::uniform_interval(4).unwrap();
        assert!(s.ball(9, 1.0).is_err());
        assert!(s.ball(0, 0.0).is_err());
    }

    #[test]
    fn circle_wraps() {
        let s = Space::<f64>::uniform_circle(8).unwrap();
        assert!((s.dist(0, 7) - 0.125).abs() < 1e-15);
        assert_eq!(s.ball(0, 0.2).unwrap(), vec![0, 1, 7]);
    }

    #[test]
    fn kappa_of_metric_is_one() {
        let s = Space::<f64>::random_cloud(25, 1, Metric::Euclidean).unwrap();
        assert_eq!(quasi_triangle_constant(&s).unwrap().value, 1.0);
        let two = Space::<f64>::uniform_interval(2).unwrap();
        assert_eq!(quasi_triangle_constant(&two).unwrap().value, 1.0);
        let one = Space::<f64>::uniform_interval(1).unwrap();
        assert!(quasi_triangle_constant(&one).is_err());
    }

    #[test]
    fn single_point_profile() {
        let s = Space::<f64>::uniform_interval(1).unwrap();
        let p = SpaceProfile::measure(&s).unwrap();
        assert_eq!(p.kappa(), 1.0);
        assert_eq!(p.doubling(), 1.0);
        assert_eq!(p.covering(), 1);
    }

    #[test]
    fn uniform_line_covering_is_small() {
        let s = Space::<f64>::uniform_interval(40).unwrap();
        assert!(covering_number(&s).value <= 3);
    }

    #[test]
    fn serialization_round_trip() {
        let s = Space::<f64>::random_cloud(6, 2, Metric::Squared).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: Space<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        assert_eq!(back.dist(1, 4), s.dist(1, 4));
    }
}
