//! Exponent calculus on the Riesz square `[1/2, 1] x [0, 1/2]`.
//!
//! Points are pairs `(1/p, 1/q)`. Everything is generic over [`Coord`], which
//! is implemented exactly for `Rational64` and with an absolute tolerance of
//! `1e-12` for `f64`. `q = infinity` is `qr = 0`.

use crate::error::{Error, Result};
use num_rational::Rational64;
use serde::Serialize;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

pub const FLOAT_TOL: f64 = 1e-12;

pub trait Coord:
    Clone
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn ratio(num: i64, den: i64) -> Self;
    fn le(&self, other: &Self) -> bool;
    fn to_f64(&self) -> f64;

    fn int(n: i64) -> Self {
        Self::ratio(n, 1)
    }
    fn same(&self, other: &Self) -> bool {
        self.le(other) && other.le(self)
    }
    fn lt(&self, other: &Self) -> bool {
        !other.le(self)
    }
    fn max_of(self, other: Self) -> Self {
        if self.le(&other) {
            other
        } else {
            self
        }
    }
    fn min_of(self, other: Self) -> Self {
        if self.le(&other) {
            self
        } else {
            other
        }
    }
}

impl Coord for Rational64 {
    fn ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }
    fn le(&self, other: &Self) -> bool {
        self <= other
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Coord for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn le(&self, other: &Self) -> bool {
        *self <= *other + FLOAT_TOL
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentPoint<T> {
    pub pr: T,
    pub qr: T,
}

impl<T: Coord> ExponentPoint<T> {
    pub fn new(pr: T, qr: T) -> Result<Self> {
        if in_square(&pr, &qr) {
            Ok(ExponentPoint { pr, qr })
        } else {
            Err(Error::domain(format!(
                "({pr}, {qr}) is outside [1/2, 1] x [0, 1/2]"
            )))
        }
    }

    pub fn dual(&self) -> Self {
        ExponentPoint {
            pr: T::int(1) - self.qr.clone(),
            qr: T::int(1) - self.pr.clone(),
        }
    }

    pub fn same(&self, other: &Self) -> bool {
        self.pr.same(&other.pr) && self.qr.same(&other.qr)
    }

    fn raw(pr: T, qr: T) -> Self {
        ExponentPoint { pr, qr }
    }
}

impl<T: Display> Display for ExponentPoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.pr, self.qr)
    }
}

fn in_square<T: Coord>(pr: &T, qr: &T) -> bool {
    T::ratio(1, 2).le(pr) && pr.le(&T::int(1)) && T::int(0).le(qr) && qr.le(&T::ratio(1, 2))
}

pub fn dual_point<T: Coord>(x: &ExponentPoint<T>) -> Result<ExponentPoint<T>> {
    ExponentPoint::new(x.pr.clone(), x.qr.clone()).map(|p| p.dual())
}

#[derive(Clone, Debug)]
pub struct CanonicalPoints<T> {
    pub a: ExponentPoint<T>,
    pub b: ExponentPoint<T>,
    pub c: ExponentPoint<T>,
    pub d: ExponentPoint<T>,
    pub f: ExponentPoint<T>,
    pub a_dual: ExponentPoint<T>,
    pub b_dual: ExponentPoint<T>,
    pub c_dual: ExponentPoint<T>,
    pub d_dual: ExponentPoint<T>,
    pub f_dual: ExponentPoint<T>,
}

impl<T: Coord> CanonicalPoints<T> {
    pub fn named(&self) -> [(&'static str, &ExponentPoint<T>); 10] {
        [
            ("A", &self.a),
            ("B", &self.b),
            ("C", &self.c),
            ("D", &self.d),
            ("F", &self.f),
            ("A'", &self.a_dual),
            ("B'", &self.b_dual),
            ("C'", &self.c_dual),
            ("D'", &self.d_dual),
            ("F'", &self.f_dual),
        ]
    }
}

fn check_d(d: u32) -> Result<i64> {
    if d == 0 {
        return Err(Error::domain("dimension d must be at least 1"));
    }
    Ok(d as i64)
}

pub fn canonical_points<T: Coord>(d: u32) -> Result<CanonicalPoints<T>> {
    let d = check_d(d)?;
    let a = ExponentPoint::raw(T::ratio(2 * d + 3, 2 * (2 * d + 1)), T::ratio(1, 2));
    let b = ExponentPoint::raw(
        T::ratio(4 * d * d + 8 * d - 1, 4 * d * (2 * d + 1)),
        T::ratio(2 * d - 1, 4 * d),
    );
    let c = ExponentPoint::raw(T::int(1), T::ratio(2 * d - 1, 4 * d));
    let dd = ExponentPoint::raw(T::ratio(d + 1, 2 * d), T::ratio(1, 2));
    // F sits on pr - qr = 1/d; at d = 1 the formula degenerates to (1, 0).
    let f = ExponentPoint::raw(
        T::ratio(4 * d * d + 4 * d - 4, 4 * d * (2 * d - 1)),
        T::ratio(d - 1, 2 * d - 1),
    );
    Ok(CanonicalPoints {
        a_dual: a.dual(),
        b_dual: b.dual(),
        c_dual: c.dual(),
        d_dual: dd.dual(),
        f_dual: f.dual(),
        a,
        b,
        c,
        d: dd,
        f,
    })
}

/// The four affine pieces whose maximum is the sharp exponent.
pub fn rho_pieces<T: Coord>(x: &ExponentPoint<T>, d: u32) -> [T; 4] {
    let dd = T::int(d as i64);
    let diff = x.pr.clone() - x.qr.clone();
    let sum = x.pr.clone() + x.qr.clone();
    [
        -(T::ratio(1, 2) * diff.clone()),
        dd.clone() * diff - T::int(1),
        T::ratio(2 * d as i64 - 1, 2) - dd.clone() * sum.clone(),
        dd * sum - T::ratio(2 * d as i64 + 1, 2),
    ]
}

pub fn rho<T: Coord>(x: &ExponentPoint<T>, d: u32) -> Result<T> {
    check_d(d)?;
    let x = ExponentPoint::new(x.pr.clone(), x.qr.clone())?;
    let [f1, f2, f3, f4] = rho_pieces(&x, d);
    Ok(f1.max_of(f2).max_of(f3).max_of(f4))
}

/// Piecewise exponent read off from the region the point falls in.
pub fn rho_piecewise<T: Coord>(x: &ExponentPoint<T>, d: u32) -> Result<T> {
    let region = classify_region(x, d)?;
    let [f1, f2, f3, f4] = rho_pieces(x, d);
    Ok(match region {
        Region::R1 => f1,
        Region::R2 => f4,
        Region::R2Dual => f3,
        Region::R3Closed | Region::SegmentBC | Region::SegmentBCdual => f2,
        Region::OutsideRieszSquare => unreachable!("validated above"),
    })
}

/// Exponent of the `L^2 -> L^q` bound, taking `qr = 1/q`.
pub fn rho_2q<T: Coord>(qr: &T, d: u32) -> Result<T> {
    let d = check_d(d)?;
    if !(T::int(0).le(qr) && qr.le(&T::ratio(1, 2))) {
        return Err(Error::domain(format!("1/q = {qr} requires q >= 2")));
    }
    // q <= 2(2d+1)/(2d-1)  <=>  1/q >= (2d-1)/(2(2d+1))
    let brk = T::ratio(2 * d - 1, 2 * (2 * d + 1));
    if brk.le(qr) {
        Ok(-(T::ratio(1, 2) * (T::ratio(1, 2) - qr.clone())))
    } else {
        Ok(T::ratio(d - 1, 2) - T::int(d) * qr.clone())
    }
}

/// Converts `q` (possibly infinite) to `1/q`.
pub fn q_to_qr(q: f64) -> Result<f64> {
    if q.is_nan() || q < 2.0 {
        return Err(Error::domain(format!("q = {q} must be at least 2")));
    }
    Ok(if q.is_infinite() { 0.0 } else { 1.0 / q })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    R1,
    R2,
    R2Dual,
    R3Closed,
    SegmentBC,
    SegmentBCdual,
    OutsideRieszSquare,
}

impl Region {
    pub fn tag(&self) -> &'static str {
        match self {
            Region::R1 => "R1",
            Region::R2 => "R2",
            Region::R2Dual => "R2_dual",
            Region::R3Closed => "R3_closed",
            Region::SegmentBC => "SegmentBC",
            Region::SegmentBCdual => "SegmentBCdual",
            Region::OutsideRieszSquare => "OutsideRieszSquare",
        }
    }
}

fn cross<T: Coord>(o: &ExponentPoint<T>, a: &ExponentPoint<T>, p: &ExponentPoint<T>) -> T {
    (a.pr.clone() - o.pr.clone()) * (p.qr.clone() - o.qr.clone())
        - (a.qr.clone() - o.qr.clone()) * (p.pr.clone() - o.pr.clone())
}

/// Closed convex polygon membership, either orientation.
fn in_convex<T: Coord>(poly: &[ExponentPoint<T>], p: &ExponentPoint<T>) -> bool {
    let zero = T::int(0);
    let (mut pos, mut neg) = (true, true);
    for i in 0..poly.len() {
        let c = cross(&poly[i], &poly[(i + 1) % poly.len()], p);
        pos &= zero.le(&c);
        neg &= c.le(&zero);
    }
    pos || neg
}

fn on_segment<T: Coord>(a: &ExponentPoint<T>, b: &ExponentPoint<T>, p: &ExponentPoint<T>) -> bool {
    let zero = T::int(0);
    if !cross(a, b, p).same(&zero) {
        return false;
    }
    let in_range = |u: &T, v: &T, w: &T| u.clone().min_of(v.clone()).le(w) && w.le(&u.clone().max_of(v.clone()));
    in_range(&a.pr, &b.pr, &p.pr) && in_range(&a.qr, &b.qr, &p.qr)
}

/// Region of a raw pair; points off the square get [`Region::OutsideRieszSquare`].
pub fn locate<T: Coord>(pr: &T, qr: &T, d: u32) -> Result<Region> {
    let cp = canonical_points::<T>(d)?;
    if !in_square(pr, qr) {
        return Ok(Region::OutsideRieszSquare);
    }
    let x = ExponentPoint::raw(pr.clone(), qr.clone());
    if on_segment(&cp.b, &cp.c, &x) {
        return Ok(Region::SegmentBC);
    }
    if on_segment(&cp.b_dual, &cp.c_dual, &x) {
        return Ok(Region::SegmentBCdual);
    }
    let half = ExponentPoint::raw(T::ratio(1, 2), T::ratio(1, 2));
    let r1 = [
        half,
        cp.a.clone(),
        cp.b.clone(),
        cp.b_dual.clone(),
        cp.a_dual.clone(),
    ];
    if in_convex(&r1, &x) {
        return Ok(Region::R1);
    }
    let r2 = [
        cp.a.clone(),
        ExponentPoint::raw(T::int(1), T::ratio(1, 2)),
        cp.c.clone(),
        cp.b.clone(),
    ];
    if in_convex(&r2, &x) {
        return Ok(Region::R2);
    }
    if in_convex(&r2, &x.dual()) {
        return Ok(Region::R2Dual);
    }
    let r3 = [
        cp.b.clone(),
        cp.c.clone(),
        ExponentPoint::raw(T::int(1), T::int(0)),
        cp.c_dual.clone(),
        cp.b_dual.clone(),
    ];
    if in_convex(&r3, &x) {
        return Ok(Region::R3Closed);
    }
    Err(Error::domain(format!("{x} is not covered by any region")))
}

pub fn classify_region<T: Coord>(x: &ExponentPoint<T>, d: u32) -> Result<Region> {
    match locate(&x.pr, &x.qr, d)? {
        Region::OutsideRieszSquare => Err(Error::domain(format!(
            "{x} is outside [1/2, 1] x [0, 1/2]"
        ))),
        r => Ok(r),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EstimateTag {
    Strong,
    Weak,
    RestrictedWeak,
    StrongFailsNoLorentzClaim,
}

impl EstimateTag {
    pub fn tag(&self) -> &'static str {
        match self {
            EstimateTag::Strong => "Strong",
            EstimateTag::Weak => "Weak",
            EstimateTag::RestrictedWeak => "RestrictedWeak",
            EstimateTag::StrongFailsNoLorentzClaim => "StrongFailsNoLorentzClaim",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimateClass<T> {
    pub tag: EstimateTag,
    pub exponent: T,
}

pub fn classify_estimate<T: Coord>(x: &ExponentPoint<T>, d: u32) -> Result<EstimateClass<T>> {
    let region = classify_region(x, d)?;
    let cp = canonical_points::<T>(d)?;
    let tag = match region {
        Region::SegmentBC if x.same(&cp.b) => EstimateTag::RestrictedWeak,
        Region::SegmentBC => EstimateTag::Weak,
        Region::SegmentBCdual if x.same(&cp.b_dual) => EstimateTag::RestrictedWeak,
        Region::SegmentBCdual => EstimateTag::StrongFailsNoLorentzClaim,
        _ => EstimateTag::Strong,
    };
    Ok(EstimateClass {
        tag,
        exponent: rho(x, d)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PentagonVerdict {
    InteriorOrEdge,
    RestrictedWeakVertex,
    Outside,
}

impl PentagonVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            PentagonVerdict::InteriorOrEdge => "interior-or-edge",
            PentagonVerdict::RestrictedWeakVertex => "restricted-weak-vertex",
            PentagonVerdict::Outside => "outside",
        }
    }
}

/// Vertices `(1/2, 1/2), D, F, F', D'` of the uniform resolvent pentagon.
pub fn resolvent_pentagon<T: Coord>(d: u32) -> Result<[ExponentPoint<T>; 5]> {
    if d < 2 {
        return Err(Error::domain("the resolvent pentagon needs d >= 2"));
    }
    let cp = canonical_points::<T>(d)?;
    Ok([
        ExponentPoint::raw(T::ratio(1, 2), T::ratio(1, 2)),
        cp.d,
        cp.f,
        cp.f_dual,
        cp.d_dual,
    ])
}

pub fn in_resolvent_pentagon<T: Coord>(x: &ExponentPoint<T>, d: u32) -> Result<PentagonVerdict> {
    let poly = resolvent_pentagon::<T>(d)?;
    let x = ExponentPoint::new(x.pr.clone(), x.qr.clone())?;
    if x.same(&poly[2]) || x.same(&poly[3]) {
        return Ok(PentagonVerdict::RestrictedWeakVertex);
    }
    Ok(if in_convex(&poly, &x) {
        PentagonVerdict::InteriorOrEdge
    } else {
        PentagonVerdict::Outside
    })
}

/// Parses `"a/b"` or an integer as an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d != 0).then(|| Rational64::new(n, d))
        }
        None => s.parse::<i64>().ok().map(Rational64::from_integer),
    }
}
