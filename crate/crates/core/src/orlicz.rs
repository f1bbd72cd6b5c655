//! Young functions and Orlicz averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{conjugate, Real};
use crate::space::Space;

/// A Young function `phi: [0, inf) -> [0, inf)`: convex, increasing,
/// `phi(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub enum YoungFunction<T> {
    /// `t^q`, `q > 1`.
    Power { q: T },
    /// `t^q log(e + t)^(q - 1 + delta)`.
    LogBump { q: T, delta: T },
    /// Piecewise-linear interpolant of knots `(t_i, phi_i)` starting at the
    /// origin, continued linearly with the last slope.
    Custom { knots: Vec<(T, T)> },
    /// `factor * inner(t)`.
    Scaled {
        factor: T,
        inner: Box<YoungFunction<T>>,
    },
    /// The complementary function of `inner`.
    Complement { inner: Box<YoungFunction<T>> },
}

impl<T: Real> YoungFunction<T> {
    pub fn power(q: T) -> Result<Self> {
        if !(q > T::one()) || !q.is_finite() {
            return Err(Error::input(format!(
                "t^{q} is not a Young function (need q > 1)"
            )));
        }
        Ok(YoungFunction::Power { q })
    }

    pub fn log_bump(q: T, delta: T) -> Result<Self> {
        let b = q - T::one() + delta;
        if q < T::one() || b < T::zero() || (q == T::one() && b == T::zero()) {
            return Err(Error::input(
                "log bump needs q >= 1, q - 1 + delta >= 0 and superlinear growth",
            ));
        }
        Ok(YoungFunction::LogBump { q, delta })
    }

    /// Validates convexity and monotonicity of the knot table.
    pub fn custom(mut knots: Vec<(T, T)>) -> Result<Self> {
        knots.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite knots"));
        if knots.len() < 2 || knots[0] != (T::zero(), T::zero()) {
            return Err(Error::input(
                "custom table needs at least two knots starting at (0, 0)",
            ));
        }
        let mut prev_slope = T::zero();
        for w in knots.windows(2) {
            let dt = w[1].0 - w[0].0;
            if !(dt > T::zero()) {
                return Err(Error::input("custom knots must have distinct abscissae"));
            }
            let slope = (w[1].1 - w[0].1) / dt;
            if !(slope > T::zero()) || slope < prev_slope {
                return Err(Error::input("custom table must be increasing and convex"));
            }
            prev_slope = slope;
        }
        Ok(YoungFunction::Custom { knots })
    }

    pub fn scaled(self, factor: T) -> Result<Self> {
        if !(factor > T::zero()) {
            return Err(Error::input("scale factor must be positive"));
        }
        Ok(YoungFunction::Scaled {
            factor,
            inner: Box::new(self),
        })
    }

    pub fn complement(self) -> Self {
        match self {
            YoungFunction::Complement { inner } => *inner,
            other => YoungFunction::Complement {
                inner: Box::new(other),
            },
        }
    }

    /// Re-runs the constructor checks, e.g. after deserializing.
    pub fn validate(self) -> Result<Self> {
        match self {
            YoungFunction::Power { q } => Self::power(q),
            YoungFunction::LogBump { q, delta } => Self::log_bump(q, delta),
            YoungFunction::Custom { knots } => Self::custom(knots),
            YoungFunction::Scaled { factor, inner } => inner.validate()?.scaled(factor),
            YoungFunction::Complement { inner } => Ok(inner.validate()?.complement()),
        }
    }

    /// Exponent `q` when `phi(t) = t^q` exactly.
    pub fn power_exponent(&self) -> Option<T> {
        match self {
            YoungFunction::Power { q } => Some(*q),
            _ => None,
        }
    }

    pub fn eval(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        match self {
            YoungFunction::Power { q } => t.powf(*q),
            YoungFunction::LogBump { q, delta } => {
                t.powf(*q) * (T::E() + t).ln().powf(*q - T::one() + *delta)
            }
            YoungFunction::Custom { knots } => {
                let i = knots.partition_point(|k| k.0 <= t);
                let (a, b) = if i >= knots.len() {
                    (knots[knots.len() - 2], knots[knots.len() - 1])
                } else {
                    (knots[i - 1], knots[i])
                };
                a.1 + (t - a.0) * (b.1 - a.1) / (b.0 - a.0)
            }
            YoungFunction::Scaled { factor, inner } => *factor * inner.eval(t),
            YoungFunction::Complement { inner } => complementary(inner, t).unwrap_or(T::infinity()),
        }
    }

    /// `inf { t : phi(t) >= y }`.
    pub fn inverse(&self, y: T) -> T {
        if y <= T::zero() {
            return T::zero();
        }
        if let YoungFunction::Power { q } = self {
            return y.powf(T::one() / *q);
        }
        let mut hi = T::one();
        while self.eval(hi) < y {
            hi = hi * T::lit(2.0);
            if !hi.is_finite() {
                return T::infinity();
            }
        }
        let mut lo = T::zero();
        while hi - lo > T::solver_tol() * hi {
            let mid = (lo + hi) / T::lit(2.0);
            if self.eval(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Power `a` with `phi(t) = t^a` up to logarithmic factors as `t -> inf`.
    fn growth(&self) -> T {
        match self {
            YoungFunction::Power { q } | YoungFunction::LogBump { q, .. } => *q,
            YoungFunction::Custom { .. } => T::one(),
            YoungFunction::Scaled { inner, .. } => inner.growth(),
            YoungFunction::Complement { inner } => match inner.growth() {
                a if a > T::one() => conjugate(a),
                // conjugates of linear growth blow up at a finite point
                _ => T::infinity(),
            },
        }
    }
}

/// `sup_{s > 0} (s t - phi(s))`; closed form where one exists.
pub fn complementary<T: Real>(phi: &YoungFunction<T>, t: T) -> Result<T> {
    if t < T::zero() || t.is_nan() {
        return Err(Error::input("complementary function is defined for t >= 0"));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    Ok(match phi {
        YoungFunction::Power { q } => {
            let q = *q;
            t.powf(conjugate(q)) * (T::one() / q).powf(T::one() / (q - T::one())) * (q - T::one())
                / q
        }
        YoungFunction::Scaled { factor, inner } => *factor * complementary(inner, t / *factor)?,
        YoungFunction::Complement { inner } => inner.eval(t),
        _ => complementary_numeric(phi, t)?,
    })
}

/// Golden-section maximization of the concave map `s -> s t - phi(s)`.
pub fn complementary_numeric<T: Real>(phi: &YoungFunction<T>, t: T) -> Result<T> {
    if t < T::zero() || t.is_nan() {
        return Err(Error::input("complementary function is defined for t >= 0"));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let two = T::lit(2.0);
    // beyond any s with phi(s)/s >= t the objective decreases
    let mut hi = T::one();
    while phi.eval(hi) / hi < t {
        hi = hi * two;
        if !hi.is_finite() || hi > T::max_value() / T::lit(4.0) {
            return Ok(T::infinity());
        }
    }
    while hi > T::min_positive_value() * T::lit(1e6) && phi.eval(hi / two) / (hi / two) >= t {
        hi = hi / two;
    }
    let g = |s: T| s * t - phi.eval(s);
    let ratio = (T::lit(5.0).sqrt() - T::one()) / two;
    let (mut a, mut b) = (T::zero(), hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..400 {
        if b - a <= T::solver_tol() * b {
            break;
        }
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + ratio * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - ratio * (b - a);
            g1 = g(x1);
        }
    }
    Ok(g1.max(g2).max(g((a + b) / two)).max(T::zero()))
}

/// Luxemburg norm `inf { lambda > 0 : avg phi(f / lambda) <= 1 }` of the
/// values `f` under point masses `mu`, by geometric bisection.
pub fn luxemburg_norm<T: Real>(f: &[T], mu: &[T], phi: &YoungFunction<T>) -> Result<T> {
    if f.len() != mu.len() || f.is_empty() {
        return Err(Error::input(
            "luxemburg norm needs matching nonempty values and masses",
        ));
    }
    if f.iter().any(|v| *v < T::zero() || !v.is_finite()) {
        return Err(Error::input(
            "luxemburg norm expects finite nonnegative values",
        ));
    }
    let total: T = mu.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::input("region must have positive measure"));
    }
    let fmax = f.iter().copied().fold(T::zero(), T::max);
    if fmax == T::zero() {
        return Ok(T::zero());
    }
    let avg = |lambda: T| -> T {
        f.iter()
            .zip(mu)
            .map(|(&v, &m)| phi.eval(v / lambda) * m)
            .sum::<T>()
            / total
    };
    let two = T::lit(2.0);
    let mut hi = fmax;
    while avg(hi) > T::one() {
        hi = hi * two;
    }
    let mut lo = hi;
    while avg(lo) <= T::one() {
        lo = lo / two;
        if lo == T::zero() {
            return Ok(T::zero());
        }
    }
    while hi / lo - T::one() > T::solver_tol() {
        let mid = (lo * hi).sqrt();
        if avg(mid) <= T::one() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Luxemburg norm of `f` restricted to `region` of `space`.
pub fn luxemburg_norm_on<T: Real>(
    space: &Space<T>,
    f: &[T],
    region: &[usize],
    phi: &YoungFunction<T>,
) -> Result<T> {
    if region.iter().any(|&i| i >= space.len()) || f.len() != space.len() {
        return Err(Error::input("region or function does not match the space"));
    }
    let vals: Vec<T> = region.iter().map(|&i| f[i]).collect();
    let mu: Vec<T> = region.iter().map(|&i| space.mass(i)).collect();
    luxemburg_norm(&vals, &mu, phi)
}

/// `[phi]_{B_p} = int_{1/2}^inf phi(t) / t^p dt / t`; `+inf` when the
/// integral diverges.
pub fn bp_constant<T: Real>(phi: &YoungFunction<T>, p: T) -> Result<T> {
    if !(p > T::one()) {
        return Err(Error::input("B_p needs p > 1"));
    }
    let a = phi.growth();
    if !(a < p) {
        return Ok(T::infinity());
    }
    match phi {
        YoungFunction::Scaled { factor, inner } => return Ok(*factor * bp_constant(inner, p)?),
        YoungFunction::Custom { knots } => return Ok(piecewise_linear_bp(knots, p)),
        _ => {}
    }
    // in u = ln t the integrand phi(e^u) e^{-p u} decays like e^{-(p - a) u}
    let h = |u: T| -> T { phi.eval(u.exp()) * (-p * u).exp() };
    let u0 = T::lit(0.5).ln();
    let u_cap = (T::max_value().ln() * T::lit(0.45)).min(T::lit(300.0));
    let mut u1 = T::lit(8.0).min(u_cap);
    let mut total = adaptive_simpson(&h, u0, u1, T::lit(1e-14));
    // extend while the remaining mass is not negligible and the growth is not a pure power
    if !phi.strip_scale().has_power_tail() {
        while u1 < u_cap {
            let next = (u1 + T::lit(8.0)).min(u_cap);
            let piece = adaptive_simpson(&h, u1, next, T::lit(1e-14));
            total = total + piece;
            u1 = next;
            if piece <= total * T::lit(1e-15) {
                return Ok(total);
            }
        }
    }
    // analytic tail with the local power exponent at the cut
    let step = T::lit(0.01);
    let local = (phi.eval((u1 + step).exp()).ln() - phi.eval((u1 - step).exp()).ln())
        / (step * T::lit(2.0));
    if !(local < p) {
        return Ok(T::infinity());
    }
    Ok(total + h(u1) / (p - local))
}

impl<T: Real> YoungFunction<T> {
    fn has_power_tail(&self) -> bool {
        match self {
            YoungFunction::Power { .. } => true,
            YoungFunction::Complement { inner } => {
                matches!(inner.strip_scale(), YoungFunction::Power { .. })
            }
            _ => false,
        }
    }

    fn strip_scale(&self) -> &YoungFunction<T> {
        match self {
            YoungFunction::Scaled { inner, .. } => inner.strip_scale(),
            other => other,
        }
    }
}

/// Exact integral for `phi(t) = alpha + beta t` on each segment, the last one
/// running to infinity.
fn piecewise_linear_bp<T: Real>(knots: &[(T, T)], p: T) -> T {
    // int t^{-e-1} from a to b, b possibly infinite
    let seg = |e: T, a: T, b: T| -> T {
        if e == T::zero() {
            b.ln() - a.ln()
        } else {
            (a.powf(-e) - if b.is_finite() { b.powf(-e) } else { T::zero() }) / e
        }
    };
    let half = T::lit(0.5);
    let mut total = T::zero();
    for i in 1..=knots.len() - 1 {
        let (t0, y0) = knots[i - 1];
        let (t1, y1) = knots[i];
        let beta = (y1 - y0) / (t1 - t0);
        let alpha = y0 - beta * t0;
        let lo = t0.max(half);
        let hi = if i == knots.len() - 1 {
            T::infinity()
        } else {
            t1
        };
        if hi <= lo {
            continue;
        }
        total = total + alpha * seg(p, lo, hi) + beta * seg(p - T::one(), lo, hi);
    }
    total
}

fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> T {
    fn rec<T: Real, F: Fn(T) -> T>(
        f: &F,
        a: T,
        b: T,
        fa: T,
        fm: T,
        fb: T,
        whole: T,
        tol: T,
        depth: u32,
    ) -> T {
        let two = T::lit(2.0);
        let m = (a + b) / two;
        let (lm, rm) = ((a + m) / two, (m + b) / two);
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / T::lit(6.0) * (fa + T::lit(4.0) * flm + fm);
        let right = (b - m) / T::lit(6.0) * (fm + T::lit(4.0) * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= T::lit(15.0) * tol {
            return left + right + diff / T::lit(15.0);
        }
        rec(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
    }
    let m = (a + b) / T::lit(2.0);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    let scale = whole.abs().max(T::min_positive_value());
    rec(f, a, b, fa, fm, fb, whole, tol * scale, 40)
}

/// `[bar Phi]_{B_p}` for `Phi(t) = t^q` in closed form:
/// `c_q 2^{p - q'} / (p - q')` with `c_q = q^{-1/(q-1)} (q-1)/q`.
pub fn power_complement_bp<T: Real>(q: T, p: T) -> T {
    let qc = conjugate(q);
    if qc >= p {
        return T::infinity();
    }
    let c = (T::one() / q).powf(T::one() / (q - T::one())) * (q - T::one()) / q;
    c * T::lit(2.0).powf(p - qc) / (p - qc)
}

/// Both sides of the Hoelder split
/// `||f||_{Phi_0} <= ||f||_{Phi}^{1 - gamma} ||f||_{p'}^{gamma}` with
/// `Phi_0(t) = t^{p'(r+1)/2}` and `gamma = 1 / (2 (r + 1))`.
pub fn interpolation_check<T: Real>(
    f: &[T],
    mu: &[T],
    phi: &YoungFunction<T>,
    p: T,
    r: T,
) -> Result<(T, T)> {
    if !(p > T::one() && r > T::one()) {
        return Err(Error::input("interpolation check needs p > 1 and r > 1"));
    }
    let pc = conjugate(p);
    let two = T::lit(2.0);
    let phi0 = YoungFunction::power(pc * (r + T::one()) / two)?;
    let gamma = T::one() / (two * (r + T::one()));
    let lhs = luxemburg_norm(f, mu, &phi0)?;
    let big = luxemburg_norm(f, mu, phi)?;
    let plain = luxemburg_norm(f, mu, &YoungFunction::power(pc)?)?;
    Ok((lhs, big.powf(T::one() - gamma) * plain.powf(gamma)))
}
