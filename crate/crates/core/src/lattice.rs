//! Numerical classes on the ambient Calabi-Yau 3-fold containing `D = P^2`.
//!
//! A [`P2Class`] is a Chern character `(r, c, m)` on `P^2`; an [`XClass`]
//! lives in `rank + Q[D] + H^4 + H^6` with `H^4` split into a multiple of the
//! line class `[l]` and a multiple of one formal external curve class `beta0`.
//!
//! Intersection constants: `D^3 = 9`, `D^2 = -3[l]`, `D.[l] = -3`,
//! `L.[l] = 1`, `L.D = [l]`, `L^2.D = 1` and `c2(X).D = -6`.

use crate::rational::{as_i64, half, qi, qr, Q};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Neg;
use thiserror::Error;

/// `c2(X).D`, fixed by requiring the Riemann-Roch pairing to reproduce the
/// closed-form pairing between classes on `D` and rank-one classes.
pub const C2_DOT_D: i64 = -6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("parity violation: {0}")]
    ParityViolation(String),
    #[error("class has nonzero rank {0}; operation needs rank 0")]
    RankNonzero(i64),
    #[error("intersection number not determined by the fixed constants: {0}")]
    UndefinedProduct(String),
}

/// Chern character `(r, c, m)` on `P^2`, stored with `m2 = 2m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct P2Class {
    pub r: i64,
    pub c: i64,
    pub m2: i64,
}

impl P2Class {
    pub fn new(r: i64, c: i64, m2: i64) -> Result<Self, LatticeError> {
        if (m2 - c).rem_euclid(2) != 0 {
            return Err(LatticeError::ParityViolation(format!(
                "2m = {m2} and c = {c} have different parity"
            )));
        }
        Ok(P2Class { r, c, m2 })
    }

    pub fn from_m(r: i64, c: i64, m: &Q) -> Result<Self, LatticeError> {
        let m2 = as_i64(&(m * qi(2))).ok_or_else(|| {
            LatticeError::ParityViolation(format!("m = {m} is not a half-integer"))
        })?;
        P2Class::new(r, c, m2)
    }

    pub fn m(&self) -> Q {
        half(self.m2)
    }

    pub fn r_hat(&self) -> Q {
        qi(self.r)
    }

    /// `c + r/2`
    pub fn c_hat(&self) -> Q {
        qr(self.ch2(), 2)
    }

    /// `m + c/2 + r/8`
    pub fn m_hat(&self) -> Q {
        qr(self.mh8(), 8)
    }

    /// `2 * c_hat`, an integer.
    pub fn ch2(&self) -> i64 {
        2 * self.c + self.r
    }

    /// `8 * m_hat`, an integer.
    pub fn mh8(&self) -> i64 {
        4 * self.m2 + 4 * self.c + self.r
    }

    pub fn is_zero(&self) -> bool {
        self.r == 0 && self.c == 0 && self.m2 == 0
    }

    /// Bogomolov test `c^2 >= 2 r m`.
    pub fn bogomolov(&self) -> bool {
        self.c * self.c >= self.r * self.m2
    }

    /// `(r, c + r, m + c + r/2)`: tensoring with `O(1)`.
    pub fn shift(&self) -> P2Class {
        P2Class {
            r: self.r,
            c: self.c + self.r,
            m2: self.m2 + 2 * self.c + self.r,
        }
    }

    /// Inverse of [`P2Class::shift`].
    pub fn unshift(&self) -> P2Class {
        P2Class {
            r: self.r,
            c: self.c - self.r,
            m2: self.m2 - 2 * self.c + self.r,
        }
    }

    pub fn dual(&self) -> P2Class {
        P2Class {
            r: self.r,
            c: -self.c,
            m2: self.m2,
        }
    }

    /// True when `self = a * other` for some positive rational `a`.
    pub fn proportional(&self, other: &P2Class) -> bool {
        let (a, b) = (self, other);
        a.r * b.c == b.r * a.c
            && a.r * b.m2 == b.r * a.m2
            && a.c * b.m2 == b.c * a.m2
            && (a.ch2() > 0) == (b.ch2() > 0)
    }
}

impl Neg for P2Class {
    type Output = P2Class;
    fn neg(self) -> P2Class {
        P2Class {
            r: -self.r,
            c: -self.c,
            m2: -self.m2,
        }
    }
}

impl fmt::Display for P2Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m2 % 2 == 0 {
            write!(f, "({}, {}, {})", self.r, self.c, self.m2 / 2)
        } else {
            write!(f, "({}, {}, {}/2)", self.r, self.c, self.m2)
        }
    }
}

/// A class `(rank, d[D], l[l] + b0*beta0, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XClass {
    pub rank: i64,
    pub d: Q,
    pub l: Q,
    pub b0: i64,
    pub n: Q,
}

impl XClass {
    pub fn new(rank: i64, d: Q, l: Q, b0: i64, n: Q) -> Self {
        XClass { rank, d, l, b0, n }
    }

    pub fn zero() -> Self {
        XClass::new(0, Q::zero(), Q::zero(), 0, Q::zero())
    }

    /// `D . (H^4 part)`
    pub fn d_dot_curve(&self, amb: &AmbientData) -> Q {
        qi(-3) * &self.l + qi(self.b0) * &amb.d_beta0
    }

    /// `L . (H^4 part)`
    pub fn l_dot_curve(&self, amb: &AmbientData) -> Q {
        self.l.clone() + qi(self.b0) * &amb.l_beta0
    }

    /// Recovers `(r, c, m)` when the class is `i_sharp` of a `P^2` class.
    pub fn to_p2(&self) -> Option<P2Class> {
        if self.rank != 0 || self.b0 != 0 {
            return None;
        }
        let r = as_i64(&self.d)?;
        let c = as_i64(&(self.l.clone() - qr(3 * r, 2)))?;
        let m = self.n.clone() - qr(3 * r, 2) - qr(3 * c, 2);
        let p = P2Class::from_m(r, c, &m).ok()?;
        (i_sharp(&p) == *self).then_some(p)
    }
}

impl Neg for XClass {
    type Output = XClass;
    fn neg(self) -> XClass {
        XClass {
            rank: -self.rank,
            d: -self.d,
            l: -self.l,
            b0: -self.b0,
            n: -self.n,
        }
    }
}

impl fmt::Display for XClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}[D], {}[l]", self.rank, self.d, self.l)?;
        if self.b0 != 0 {
            write!(f, " + {}b0", self.b0)?;
        }
        write!(f, ", {})", self.n)
    }
}

/// Intersection data of the formal curve class `beta0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbientData {
    pub d_beta0: Q,
    pub l_beta0: Q,
}

impl AmbientData {
    pub fn new(d_beta0: Q, l_beta0: Q) -> Self {
        AmbientData { d_beta0, l_beta0 }
    }
}

impl Default for AmbientData {
    fn default() -> Self {
        AmbientData::new(Q::zero(), Q::zero())
    }
}

pub fn i_sharp(a: &P2Class) -> XClass {
    let r = qi(a.r);
    let c = qi(a.c);
    XClass::new(
        0,
        r.clone(),
        qr(3, 2) * &r + &c,
        0,
        qr(3, 2) * &r + qr(3, 2) * &c + a.m(),
    )
}

/// `e^{rD} (1, 0, -beta, -n)` with `beta = beta_l [l] + b0 beta0`.
pub fn exp_rd_pair_class(r: i64, beta_l: &Q, b0: i64, n: &Q, amb: &AmbientData) -> XClass {
    let rq = qi(r);
    let d_beta = qi(-3) * beta_l + qi(b0) * &amb.d_beta0;
    XClass::new(
        1,
        rq.clone(),
        qr(-3, 2) * &rq * &rq - beta_l,
        -b0,
        qr(3, 2) * &rq * &rq * &rq - &rq * d_beta - n,
    )
}

pub fn chi_ab(a: &P2Class, b: &P2Class) -> i64 {
    3 * (a.r * b.c - b.r * a.c)
}

fn require_integer(x: Q, what: &str) -> Result<Q, LatticeError> {
    if x.denom() == &num_bigint::BigInt::from(1) {
        Ok(x)
    } else {
        Err(LatticeError::ParityViolation(format!(
            "{what} = {x} is not an integer"
        )))
    }
}

/// Pairing of the sheaf class `-i_*a` with the rank-one class
/// `e^{rD}(1, 0, -beta, -n)`, where `d_beta = D.beta`.
pub fn chi_ae(a: &P2Class, r: i64, d_beta: &Q) -> Result<Q, LatticeError> {
    let (ra, ca) = (qi(a.r), qi(a.c));
    let rq = qi(r);
    let v = ra.clone() + a.m() + qi(3) * &rq * &ca - &ra * d_beta
        + qr(3, 2) * &ca
        + qr(9, 2) * &rq * &ra
        + qr(9, 2) * &rq * &rq * &ra;
    require_integer(v, "chi(v_a, v_e)")
}

/// Same pairing against the `L`-twisted rank-one class
/// `e^{rD + c1(L)}(1, 0, -beta, -n)`.
pub fn chi_ae_l(a: &P2Class, r: i64, d_beta: &Q) -> Result<Q, LatticeError> {
    let (ra, ca) = (qi(a.r), qi(a.c));
    let rq = qi(r);
    let v = a.m() + qr(1, 2) * &ca + qi(3) * &rq * &ca - &ra * d_beta
        + qr(3, 2) * &rq * &ra
        + qr(9, 2) * &rq * &rq * &ra;
    require_integer(v, "chi_L(v_a, v_e)")
}

/// Integer fast path of [`chi_ae`] for integral `D.beta`.
pub fn chi_ae_int(a: &P2Class, r: i64, d_beta: i64) -> Result<i64, LatticeError> {
    let twice =
        2 * a.r + a.m2 + 6 * r * a.c - 2 * a.r * d_beta + 3 * a.c + 9 * r * a.r + 9 * r * r * a.r;
    if twice % 2 != 0 {
        return Err(LatticeError::ParityViolation(format!(
            "chi(v_a, v_e) = {twice}/2 for a = {a}"
        )));
    }
    Ok(twice / 2)
}

/// Integer fast path of [`chi_ae_l`].
pub fn chi_ae_l_int(a: &P2Class, r: i64, d_beta: i64) -> Result<i64, LatticeError> {
    let twice = a.m2 + a.c + 6 * r * a.c - 2 * a.r * d_beta + 3 * r * a.r + 9 * r * r * a.r;
    if twice % 2 != 0 {
        return Err(LatticeError::ParityViolation(format!(
            "chi_L(v_a, v_e) = {twice}/2 for a = {a}"
        )));
    }
    Ok(twice / 2)
}

/// Riemann-Roch pairing
/// `sum_j (-1)^j ch_j(E) ch_{3-j}(F) + c2/12 (ch0 E ch1 F - ch1 E ch0 F)`.
pub fn euler_pairing(e: &XClass, f: &XClass, amb: &AmbientData) -> Q {
    let e1_f2 = &e.d * f.d_dot_curve(amb);
    let e2_f1 = &f.d * e.d_dot_curve(amb);
    let c2_term = qr(C2_DOT_D, 12) * (qi(e.rank) * &f.d - &e.d * qi(f.rank));
    qi(e.rank) * &f.n - e1_f2 + e2_f1 - &e.n * qi(f.rank) + c2_term
}

/// Pairing of `E` with `F (x) L`. Only defined for `E` of rank 0: otherwise
/// the self-intersections `L^3`, `L^2 . beta0` would be needed.
pub fn euler_pairing_l_twisted(
    e: &XClass,
    f: &XClass,
    amb: &AmbientData,
) -> Result<Q, LatticeError> {
    if e.rank != 0 {
        return Err(LatticeError::UndefinedProduct(
            "pairing a positive-rank class with an L-twisted class needs L^3".into(),
        ));
    }
    let f0 = qi(f.rank);
    // ch(F (x) L) = ch(F) e^L with L.D = [l], L^2.D = 1, L.[l] = 1.
    let d_ch2 = f.d_dot_curve(amb) + qi(-3) * &f.d + &f0 * qr(1, 2);
    let e2_ch1 =
        qi(-3) * &e.l * &f.d + &e.l * &f0 + qi(e.b0) * (&f.d * &amb.d_beta0 + &f0 * &amb.l_beta0);
    let c2_term = qr(C2_DOT_D, 12) * (-(&e.d) * &f0);
    Ok(-(&e.d) * d_ch2 + e2_ch1 - &e.n * &f0 + c2_term)
}

/// Spherical-twist action on rank-zero classes.
pub fn theta_sharp(v: &XClass, amb: &AmbientData) -> Result<XClass, LatticeError> {
    if v.rank != 0 {
        return Err(LatticeError::RankNonzero(v.rank));
    }
    let bd = v.d_dot_curve(amb);
    let lb = v.l_dot_curve(amb);
    let r = v.d.clone();
    Ok(XClass::new(
        0,
        qr(5, 2) * &r + &bd,
        v.l.clone() + qr(13, 4) * &r + qr(3, 2) * &bd,
        v.b0,
        v.n.clone() + qr(11, 4) * &r + qr(3, 2) * &bd + lb,
    ))
}
