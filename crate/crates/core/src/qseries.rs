//! Truncated `q`-series with exact rational exponents and coefficients.
//!
//! A series is known exactly for every exponent `<= order`; nothing is
//! claimed beyond it. Products follow the rule
//! `order(a*b) = min(order(a) + min(v(b), 0), order(b) + min(v(a), 0))`
//! where `v` is the lowest stored exponent, so with non-negative valuations
//! the product order is the smaller input order.

use crate::rational::{fmt_q, qi, qr, Q};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("requested order {requested} exceeds the known order {known}")]
    OrderUnderflow { requested: String, known: String },
    #[error("series is not invertible: {0}")]
    NotInvertible(String),
    #[error("exponent {exp} lies beyond the series order {order}")]
    OutOfOrder { exp: String, order: String },
    #[error("no series source for rank {0}")]
    UnsupportedRank(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    terms: BTreeMap<Q, Q>,
    order: Q,
}

impl QSeries {
    pub fn zero(order: Q) -> Self {
        QSeries {
            terms: BTreeMap::new(),
            order,
        }
    }

    pub fn one(order: Q) -> Self {
        QSeries::monomial(Q::one(), Q::zero(), order)
    }

    pub fn monomial(coef: Q, exp: Q, order: Q) -> Self {
        let mut s = QSeries::zero(order);
        s.add_term(exp, coef);
        s
    }

    /// Builds a series from `(exponent, coefficient)` pairs, dropping terms
    /// beyond `order` and merging repeated exponents.
    pub fn from_terms<I: IntoIterator<Item = (Q, Q)>>(terms: I, order: Q) -> Self {
        let mut s = QSeries::zero(order);
        for (e, c) in terms {
            s.add_term(e, c);
        }
        s
    }

    /// Integer-exponent series from a coefficient list starting at `q^0`.
    pub fn from_coeffs(coeffs: &[Q], order: Q) -> Self {
        QSeries::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (qi(i as i64), c.clone())),
            order,
        )
    }

    fn add_term(&mut self, exp: Q, coef: Q) {
        if exp > self.order || coef.is_zero() {
            return;
        }
        let slot = self.terms.entry(exp.clone()).or_insert_with(Q::zero);
        *slot += coef;
        if slot.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn order(&self) -> &Q {
        &self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Q, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient at `exp`; zero for absent exponents within the order.
    pub fn coeff(&self, exp: &Q) -> Result<Q, SeriesError> {
        if exp > &self.order {
            return Err(SeriesError::OutOfOrder {
                exp: fmt_q(exp),
                order: fmt_q(&self.order),
            });
        }
        Ok(self.terms.get(exp).cloned().unwrap_or_else(Q::zero))
    }

    /// Lowest stored exponent, or the order when nothing is stored.
    pub fn valuation(&self) -> Q {
        self.terms
            .keys()
            .next()
            .cloned()
            .unwrap_or_else(|| self.order.clone())
    }

    pub fn truncate(&self, order: Q) -> Result<Self, SeriesError> {
        if order > self.order {
            return Err(SeriesError::OrderUnderflow {
                requested: fmt_q(&order),
                known: fmt_q(&self.order),
            });
        }
        Ok(QSeries::from_terms(
            self.terms.iter().map(|(e, c)| (e.clone(), c.clone())),
            order,
        ))
    }

    pub fn add(&self, other: &QSeries) -> QSeries {
        let order = self.order.clone().min(other.order.clone());
        QSeries::from_terms(
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(e, c)| (e.clone(), c.clone())),
            order,
        )
    }

    pub fn neg(&self) -> QSeries {
        QSeries {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), -c.clone()))
                .collect(),
            order: self.order.clone(),
        }
    }

    pub fn sub(&self, other: &QSeries) -> QSeries {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Q) -> QSeries {
        QSeries::from_terms(
            self.terms.iter().map(|(e, c)| (e.clone(), c * k)),
            self.order.clone(),
        )
    }

    pub fn mul(&self, other: &QSeries) -> QSeries {
        let zero = Q::zero();
        let va = self.valuation().min(zero.clone());
        let vb = other.valuation().min(zero);
        let order = (self.order.clone() + vb).min(other.order.clone() + va);
        let mut acc: BTreeMap<Q, Q> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea + eb;
                if e > order {
                    continue;
                }
                *acc.entry(e).or_insert_with(Q::zero) += ca * cb;
            }
        }
        QSeries {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            order,
        }
    }

    /// Multiplicative inverse up to the order; needs a nonzero `q^0` term as
    /// the lowest term.
    pub fn invert(&self) -> Result<QSeries, SeriesError> {
        let (e0, c0) = match self.terms.iter().next() {
            Some(t) => t,
            None => return Err(SeriesError::NotInvertible("zero series".into())),
        };
        if !e0.is_zero() {
            return Err(SeriesError::NotInvertible(format!(
                "lowest exponent is {e0}, not 0"
            )));
        }
        let inv0 = c0.recip();
        // a = c0 (1 + x) with x of positive valuation; 1/a = inv0 * sum (-x)^j.
        let x = QSeries::from_terms(
            self.terms
                .iter()
                .skip(1)
                .map(|(e, c)| (e.clone(), c * &inv0)),
            self.order.clone(),
        );
        let mut total = QSeries::one(self.order.clone());
        if !x.is_empty() {
            let step = x.valuation();
            let mut power = QSeries::one(self.order.clone());
            let minus_x = x.neg();
            let mut reach = Q::zero();
            loop {
                reach += &step;
                if reach > self.order {
                    break;
                }
                power = power.mul(&minus_x);
                total = total.add(&power);
            }
        }
        Ok(total.scale(&inv0))
    }

    /// Terms with the exponent denominators dividing `den`.
    pub fn exponents_divide(&self, den: i64) -> bool {
        let d = BigInt::from(den);
        self.terms.keys().all(|e| d.is_multiple_of(e.denom()))
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*q^({})", c, e)?;
        }
        write!(f, " + O(q^({}))", self.order)
    }
}

/// `prod_{k >= 1} (1 - q^k)^{-power}` as exact integer coefficients up to
/// `q^n`.
pub fn eta_product_coeffs(power: u32, n: usize) -> Vec<BigInt> {
    let mut a = vec![BigInt::zero(); n + 1];
    a[0] = BigInt::one();
    for k in 1..=n {
        for _ in 0..power {
            for i in k..=n {
                let t = a[i - k].clone();
                a[i] += t;
            }
        }
    }
    a
}

fn floor_to_usize(x: &Q) -> usize {
    if x.is_negative() {
        0
    } else {
        x.floor().to_integer().to_usize().unwrap_or(usize::MAX)
    }
}

/// Generating function of sheaves of rank one on `P^2`:
/// `prod_{k>=1} (1 - q^k)^{-3}`.
pub fn goettsche_series(order: &Q) -> QSeries {
    let n = floor_to_usize(order);
    let coeffs: Vec<Q> = eta_product_coeffs(3, n)
        .into_iter()
        .map(Q::from_integer)
        .collect();
    QSeries::from_coeffs(&coeffs, order.clone())
}

/// Classical theta series
/// `sum_{k in (a/r, .., a/r) + Z^{r-1}} q^{sum_{i<=j} k_i k_j}`.
pub fn vartheta(r: i64, a: i64, order: &Q) -> QSeries {
    assert!(r >= 1, "vartheta needs r >= 1");
    let dim = (r - 1) as usize;
    if dim == 0 {
        return QSeries::one(order.clone());
    }
    // The form is at least (1/2) sum k_i^2, so |k_i| <= sqrt(2 * order).
    let bound = (order * qi(2))
        .ceil()
        .to_integer()
        .to_i64()
        .unwrap_or(0)
        .max(0);
    let mut kmax = 0i64;
    while kmax * kmax <= bound * r * r {
        kmax += 1;
    }
    let shift = a.rem_euclid(r);
    let lo = -kmax - 1;
    let hi = kmax + 1;
    let mut s = QSeries::zero(order.clone());
    let mut idx = vec![lo; dim];
    loop {
        // coordinates k_i = (shift + r * idx_i) / r
        let ks: Vec<i64> = idx.iter().map(|&j| shift + r * j).collect();
        let mut form = 0i64;
        for i in 0..dim {
            for j in i..dim {
                form += ks[i] * ks[j];
            }
        }
        let e = qr(form, r * r);
        if &e <= order {
            s.add_term(e, Q::one());
        }
        let mut pos = 0;
        loop {
            if pos == dim {
                return s;
            }
            idx[pos] += 1;
            if idx[pos] <= hi {
                break;
            }
            idx[pos] = lo;
            pos += 1;
        }
    }
}

/// Indefinite theta sum `sum_{a in Z, b in 1/2 + Z, a > b > 0} (2a - 6b) q^{a^2 - b^2}`.
pub fn indefinite_theta(order: &Q) -> QSeries {
    let mut s = QSeries::zero(order.clone());
    // a^2 - b^2 = (a - b)(a + b) >= (a + b)/2, so a + b <= 2 * order.
    let lim = (order * qi(4))
        .floor()
        .to_integer()
        .to_i64()
        .unwrap_or(0)
        .max(0);
    for a in 1..=lim {
        for b2 in (1..2 * a).step_by(2) {
            let e = qr(4 * a * a - b2 * b2, 4);
            if &e > order {
                continue;
            }
            s.add_term(e, qi(2 * a - 3 * b2));
        }
    }
    s
}

/// Generating function of rank two, odd degree sheaves on `P^2`:
/// `prod (1 - q^k)^{-6} / (sum_k q^{k^2}) * indefinite_theta`.
pub fn dt21_series(order: &Q) -> QSeries {
    let n = floor_to_usize(order);
    let eta6: Vec<Q> = eta_product_coeffs(6, n)
        .into_iter()
        .map(Q::from_integer)
        .collect();
    let eta6 = QSeries::from_coeffs(&eta6, order.clone());
    let theta = vartheta(2, 0, order);
    let inv = theta.invert().expect("theta series has constant term 1");
    eta6.mul(&inv).mul(&indefinite_theta(order))
}

/// Reads `DT(r, c, m)` off a generating series
/// `sum_m DT(r, c, m) (-q^{1/(2r)})^{c^2 - 2rm}`.
pub fn extract_dt(r: i64, c: i64, m: &Q, series: &QSeries) -> Result<Q, SeriesError> {
    if r != 1 && r != 2 {
        return Err(SeriesError::UnsupportedRank(r));
    }
    let power = qi(c * c) - qi(2 * r) * m;
    let exp = &power / qi(2 * r);
    let coef = series.coeff(&exp)?;
    let odd = power.to_integer().is_odd();
    Ok(if odd { -coef } else { coef })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_q;
    use proptest::prelude::*;

    fn qs(terms: &[(&str, &str)], order: &str) -> QSeries {
        QSeries::from_terms(
            terms
                .iter()
                .map(|(e, c)| (parse_q(e).unwrap(), parse_q(c).unwrap())),
            parse_q(order).unwrap(),
        )
    }

    #[test]
    fn ring_examples() {
        let a = qs(&[("0", "1"), ("1", "1")], "5");
        let b = qs(&[("0", "1"), ("1", "-1")], "5");
        assert_eq!(a.mul(&b), qs(&[("0", "1"), ("2", "-1")], "5"));
        let c = qs(&[("0", "1"), ("1", "3"), ("2", "9")], "5");
        assert_eq!(c.mul(&QSeries::one(qi(5))), c);
        assert!(a.add(&a.neg()).is_empty());
    }

    #[test]
    fn invert_examples() {
        let a = qs(&[("0", "1"), ("1", "-1")], "3");
        assert_eq!(
            a.invert().unwrap(),
            qs(&[("0", "1"), ("1", "1"), ("2", "1"), ("3", "1")], "3")
        );
        let b = qs(&[("0", "1"), ("1", "2"), ("4", "2")], "4");
        assert_eq!(
            b.invert().unwrap(),
            qs(
                &[
                    ("0", "1"),
                    ("1", "-2"),
                    ("2", "4"),
                    ("3", "-8"),
                    ("4", "14")
                ],
                "4"
            )
        );
        assert_eq!(QSeries::one(qi(3)).invert().unwrap(), QSeries::one(qi(3)));
        assert!(qs(&[("1", "1")], "3").invert().is_err());
        assert!(QSeries::zero(qi(3)).invert().is_err());
    }

    #[test]
    fn negative_valuation_shifts_order() {
        let a = qs(&[("-1", "1")], "4");
        let b = qs(&[("0", "1"), ("1", "1")], "4");
        assert_eq!(a.mul(&b).order(), &qi(3));
    }

    #[test]
    fn truncation_is_checked() {
        let a = qs(&[("0", "1")], "2");
        assert!(matches!(
            a.truncate(qi(3)),
            Err(SeriesError::OrderUnderflow { .. })
        ));
        assert!(matches!(
            a.coeff(&qi(3)),
            Err(SeriesError::OutOfOrder { .. })
        ));
        assert_eq!(a.truncate(qi(1)).unwrap().order(), &qi(1));
    }

    #[test]
    fn goettsche_values() {
        let g = goettsche_series(&qi(5));
        let got: Vec<Q> = (0..=5).map(|i| g.coeff(&qi(i)).unwrap()).collect();
        let want: Vec<Q> = [1, 3, 9, 22, 51, 108].iter().map(|&v| qi(v)).collect();
        assert_eq!(got, want);
    }

    /// Number of 3-colored partitions by direct enumeration of multisets of
    /// colored parts.
    fn colored_partitions(n: i64, colors: i64) -> i64 {
        fn rec(n: i64, max_part: i64, max_color: i64, colors: i64) -> i64 {
            if n == 0 {
                return 1;
            }
            let mut total = 0;
            for p in (1..=max_part.min(n)).rev() {
                let top = if p == max_part { max_color } else { colors - 1 };
                for col in 0..=top {
                    total += rec(n - p, p, col, colors);
                }
            }
            total
        }
        rec(n, n, colors - 1, colors)
    }

    #[test]
    fn goettsche_counts_colored_partitions() {
        let g = goettsche_series(&qi(12));
        for n in 0..=12 {
            assert_eq!(
                g.coeff(&qi(n)).unwrap(),
                qi(colored_partitions(n, 3)),
                "n = {n}"
            );
        }
    }

    #[test]
    fn vartheta_examples() {
        assert_eq!(vartheta(1, 5, &qi(7)), QSeries::one(qi(7)));
        assert_eq!(
            vartheta(2, 0, &qi(4)),
            qs(&[("0", "1"), ("1", "2"), ("4", "2")], "4")
        );
        assert_eq!(
            vartheta(2, 1, &qr(9, 4)),
            qs(&[("1/4", "2"), ("9/4", "2")], "9/4")
        );
        assert!(vartheta(3, 1, &qi(6)).exponents_divide(9));
    }

    #[test]
    fn vartheta_depends_on_a_mod_r() {
        for a in -4..=4 {
            assert_eq!(vartheta(2, a, &qi(9)), vartheta(2, a + 2, &qi(9)));
            assert_eq!(vartheta(3, a, &qi(6)), vartheta(3, a + 3, &qi(6)));
        }
    }

    #[test]
    fn dt21_examples() {
        let s = dt21_series(&qr(3, 4));
        assert_eq!(s, qs(&[("3/4", "-1")], "3/4"));
        let s = dt21_series(&qi(10));
        assert!(s.terms().all(|(e, _)| (e - qr(3, 4)).is_integer()));
        let want = [-1, -9, -48, -203, -729];
        for (j, w) in want.iter().enumerate() {
            assert_eq!(s.coeff(&(qr(3, 4) + qi(j as i64))).unwrap(), qi(*w));
        }
        let t = dt21_series(&qi(12)).truncate(qi(10)).unwrap();
        assert_eq!(t, s);
    }

    #[test]
    fn extraction_examples() {
        let g = goettsche_series(&qi(4));
        assert_eq!(extract_dt(1, 0, &qi(0), &g).unwrap(), qi(1));
        assert_eq!(extract_dt(1, 0, &qi(-1), &g).unwrap(), qi(3));
        let d = dt21_series(&qi(2));
        assert_eq!(extract_dt(2, 1, &qr(-1, 2), &d).unwrap(), qi(1));
        assert!(matches!(
            extract_dt(1, 0, &qi(-9), &g),
            Err(SeriesError::OutOfOrder { .. })
        ));
    }

    fn arb_series() -> impl Strategy<Value = QSeries> {
        proptest::collection::vec((0i64..40, -5i64..=5, 1i64..=3), 0..8).prop_map(|v| {
            QSeries::from_terms(
                v.into_iter().map(|(e2, c, d)| (qr(e2, 2), qr(c, d))),
                qi(20),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn ring_laws(a in arb_series(), b in arb_series(), c in arb_series()) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.add(&b), b.add(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        }

        #[test]
        fn invert_is_two_sided(a in arb_series(), c0 in 1i64..=4) {
            let a = QSeries::monomial(qi(c0), qi(0), qi(20)).add(&a.sub(&QSeries::from_terms(
                a.terms().filter(|(e, _)| e.is_zero()).map(|(e, c)| (e.clone(), c.clone())), qi(20))));
            let inv = a.invert().unwrap();
            prop_assert_eq!(a.mul(&inv), QSeries::one(qi(20)));
            prop_assert_eq!(inv.mul(&a), QSeries::one(qi(20)));
        }
    }
}
