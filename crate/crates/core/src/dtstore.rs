//! Generalized DT invariants `DT(r, c, m)` of sheaves on local `P^2`.
//!
//! Values are keyed by a canonical representative of the orbit under
//! tensoring by `O(1)`, duality and global negation. A lookup tries, in
//! order: Bogomolov vanishing, built-in constants, the rank one and rank two
//! generating series, the rank-zero formula in terms of stable pair
//! invariants, and finally user-supplied values.

use crate::lattice::P2Class;
use crate::qseries::{dt21_series, extract_dt, goettsche_series, QSeries, SeriesError};
use crate::rational::{qi, qr, serde_q, Q};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DtError {
    #[error("the zero class has no DT invariant")]
    ZeroClass,
    #[error("DT{0} is not available from any source")]
    NotAvailable(P2Class),
    #[error("stable pair value P(n = {n}, c = {c}) is missing: {reason}")]
    MissingPairValue { c: i64, n: i64, reason: String },
    #[error("conflicting values for DT{key}: {old} vs {new}")]
    Conflict {
        key: P2Class,
        old: String,
        new: String,
    },
    #[error("table is frozen")]
    Frozen,
    #[error("cannot read DT table: {0}")]
    Load(String),
    #[error(transparent)]
    Series(Box<SeriesError>),
}

impl From<SeriesError> for DtError {
    fn from(e: SeriesError) -> Self {
        DtError::Series(Box::new(e))
    }
}

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Bogomolov,
    Builtin,
    Series,
    Rankzero,
    User,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Source::Bogomolov => "bogomolov",
            Source::Builtin => "builtin",
            Source::Series => "series",
            Source::Rankzero => "rankzero",
            Source::User => "user",
        };
        f.write_str(s)
    }
}

/// Canonical orbit representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DtKey(pub P2Class);

impl fmt::Display for DtKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn in_negative_cone(a: &P2Class) -> bool {
    a.r < 0 || (a.r == 0 && a.c < 0) || (a.r == 0 && a.c == 0 && a.m2 < 0)
}

/// Brings a nonzero class to its canonical representative.
pub fn normalize(cls: &P2Class) -> Result<DtKey, DtError> {
    if cls.is_zero() {
        return Err(DtError::ZeroClass);
    }
    let mut a = if in_negative_cone(cls) { -*cls } else { *cls };
    if a.r > 0 {
        let r = a.r;
        let steps = a.c.div_euclid(r);
        // shift^j: c -> c + j r, m2 -> m2 + 2 j c + j^2 r
        a = P2Class {
            r,
            c: a.c - steps * r,
            m2: a.m2 - 2 * steps * a.c + steps * steps * r,
        };
        if 2 * a.c > r {
            a = a.dual().shift();
        }
    } else if a.r == 0 && a.c > 0 {
        // shifts move m by c; duality followed by negation sends m to -m
        let m2 = a.m2.rem_euclid(2 * a.c).min((-a.m2).rem_euclid(2 * a.c));
        a = P2Class { r: 0, c: a.c, m2 };
    }
    Ok(DtKey(a))
}

pub fn bogomolov_nonzero(cls: &P2Class) -> bool {
    cls.bogomolov()
}

/// `n_min(c) = c(3 - c)/2`: no stable pair of degree `c` has `chi` below it.
pub fn n_min(c: i64) -> i64 {
    c * (3 - c) / 2
}

/// Stable pair invariants `P_{n, c[l]}` of local `P^2`, as consumed by the
/// rank-zero formula.
pub trait PairSource {
    fn pair(&self, c: i64, n: i64) -> Result<Q, DtError>;
}

/// Coefficient of `P_{N,c} - P_{-N,c}` in `DT(0, c, m)`, `N = 3c/2 + m`.
pub fn rankzero_k1_coefficient(c: i64, m2: i64) -> Q {
    let big_n = (3 * c + m2) / 2;
    let sign = if (big_n - 1).rem_euclid(2) == 0 {
        1
    } else {
        -1
    };
    qr(sign, big_n)
}

/// `DT(0, c, m)` from stable pair invariants: a sum over ordered
/// compositions `(c_1, n_1), ..., (c_k, n_k)` with `c_j >= 1`,
/// `sum c_j = c`, `sum n_j = N = 3c/2 + m` of
/// `(-1)^{N-k}/(N k) (prod P_{n_j, c_j} - prod P_{-n_j, c_j})`.
/// When `N = 0` the class is first shifted to `N = c`.
pub fn rankzero_dt(c: i64, m2: i64, pairs: &dyn PairSource) -> Result<Q, DtError> {
    assert!(c > 0, "rank-zero DT needs c > 0");
    let twice_n = 3 * c + m2;
    assert!(twice_n % 2 == 0, "parity of (0, {c}, {m2}/2)");
    let mut big_n = twice_n / 2;
    if big_n == 0 {
        big_n = c;
    }
    let mut total = Q::zero();
    for comp in compositions(c) {
        let k = comp.len() as i64;
        let plus = product_sum(&comp, big_n, pairs)?;
        let minus = product_sum(&comp, -big_n, pairs)?;
        let diff = plus - minus;
        if diff.is_zero() {
            continue;
        }
        let sign = if (big_n - k).rem_euclid(2) == 0 {
            1
        } else {
            -1
        };
        total += diff * qr(sign, big_n * k);
    }
    Ok(total)
}

fn compositions(c: i64) -> Vec<Vec<i64>> {
    if c == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=c {
        for mut rest in compositions(c - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `sum prod_j P_{n_j, c_j}` over `n_j >= n_min(c_j)` with `sum n_j = total`.
fn product_sum(degrees: &[i64], total: i64, pairs: &dyn PairSource) -> Result<Q, DtError> {
    let floor: i64 = degrees.iter().map(|&c| n_min(c)).sum();
    if total < floor {
        return Ok(Q::zero());
    }
    fn rec(
        degrees: &[i64],
        left: i64,
        rest_floor: i64,
        pairs: &dyn PairSource,
    ) -> Result<Q, DtError> {
        let (&c, tail) = degrees.split_first().expect("nonempty");
        if tail.is_empty() {
            return pairs.pair(c, left);
        }
        let tail_floor = rest_floor - n_min(c);
        let mut s = Q::zero();
        for n in n_min(c)..=(left - tail_floor) {
            let p = pairs.pair(c, n)?;
            if p.is_zero() {
                continue;
            }
            s += p * rec(tail, left - n, tail_floor, pairs)?;
        }
        Ok(s)
    }
    rec(degrees, total, floor, pairs)
}

#[derive(Debug, Serialize, Deserialize)]
struct UserEntry {
    r: i64,
    c: i64,
    m2: i64,
    #[serde(with = "serde_q")]
    value: Q,
}

/// Layered store of DT invariants.
pub struct DtTable {
    user: HashMap<DtKey, Q>,
    line_value: Q,
    frozen: bool,
    cache: Mutex<HashMap<DtKey, (Q, Source)>>,
    goettsche: Mutex<Option<QSeries>>,
    dt21: Mutex<Option<QSeries>>,
}

impl Default for DtTable {
    fn default() -> Self {
        DtTable::new()
    }
}

impl Clone for DtTable {
    /// Copies the configured sources; resolved values are not carried over.
    fn clone(&self) -> Self {
        DtTable {
            user: self.user.clone(),
            line_value: self.line_value.clone(),
            frozen: self.frozen,
            cache: Mutex::new(HashMap::new()),
            goettsche: Mutex::new(None),
            dt21: Mutex::new(None),
        }
    }
}

impl fmt::Debug for DtTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DtTable")
            .field("user_entries", &self.user.len())
            .field("frozen", &self.frozen)
            .finish()
    }
}

impl DtTable {
    pub fn new() -> Self {
        DtTable {
            user: HashMap::new(),
            line_value: qi(3),
            frozen: false,
            cache: Mutex::new(HashMap::new()),
            goettsche: Mutex::new(None),
            dt21: Mutex::new(None),
        }
    }

    /// Replaces the built-in `DT(0, 1, m)`; used for negative controls.
    pub fn override_line_value(&mut self, value: Q) -> Result<(), DtError> {
        if self.frozen {
            return Err(DtError::Frozen);
        }
        self.line_value = value;
        Ok(())
    }

    pub fn insert_user(&mut self, cls: &P2Class, value: Q) -> Result<(), DtError> {
        if self.frozen {
            return Err(DtError::Frozen);
        }
        let key = normalize(cls)?;
        if let Some(old) = self.user.get(&key) {
            if *old != value {
                return Err(DtError::Conflict {
                    key: key.0,
                    old: crate::rational::fmt_q(old),
                    new: crate::rational::fmt_q(&value),
                });
            }
            return Ok(());
        }
        self.user.insert(key, value);
        Ok(())
    }

    /// Reads a JSON array of `{"r", "c", "m2", "value"}` objects.
    pub fn load_user_json(&mut self, text: &str) -> Result<usize, DtError> {
        let entries: Vec<UserEntry> =
            serde_json::from_str(text).map_err(|e| DtError::Load(e.to_string()))?;
        let n = entries.len();
        for e in entries {
            let cls = P2Class::new(e.r, e.c, e.m2).map_err(|x| DtError::Load(x.to_string()))?;
            self.insert_user(&cls, e.value)?;
        }
        Ok(n)
    }

    pub fn load_user_file(&mut self, path: &Path) -> Result<usize, DtError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DtError::Load(format!("{}: {e}", path.display())))?;
        self.load_user_json(&text)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Every value resolved so far, sorted by key.
    pub fn resolved(&self) -> Vec<(DtKey, Q, Source)> {
        let mut v: Vec<_> = self
            .cache
            .lock()
            .unwrap()
            .iter()
            .map(|(k, (q, s))| (*k, q.clone(), *s))
            .collect();
        v.sort_by_key(|a| a.0);
        v
    }

    fn series_value(
        &self,
        slot: &Mutex<Option<QSeries>>,
        build: fn(&Q) -> QSeries,
        r: i64,
        key: &P2Class,
    ) -> Result<Q, DtError> {
        let exp = (qi(key.c * key.c) - qi(r * key.m2)) / qi(2 * r);
        let mut guard = slot.lock().unwrap();
        let stale = guard.as_ref().is_none_or(|s| s.order() < &exp);
        if stale {
            let order = std::cmp::max(exp.ceil() + qi(4), qi(12));
            *guard = Some(build(&order));
        }
        Ok(extract_dt(r, key.c, &key.m(), guard.as_ref().unwrap())?)
    }

    fn resolve_without_pairs(&self, key: &DtKey) -> Result<Option<(Q, Source)>, DtError> {
        let a = key.0;
        if a.r == 0 && a.c == 1 {
            return Ok(Some((self.line_value.clone(), Source::Builtin)));
        }
        if a == (P2Class { r: 2, c: 0, m2: 0 }) {
            return Ok(Some((qr(1, 4), Source::Builtin)));
        }
        if a.r == 1 {
            let v = self.series_value(&self.goettsche, goettsche_series, 1, &a)?;
            return Ok(Some((v, Source::Series)));
        }
        if a.r == 2 && a.c == 1 {
            let v = self.series_value(&self.dt21, dt21_series, 2, &a)?;
            return Ok(Some((v, Source::Series)));
        }
        Ok(None)
    }

    /// Resolves `DT(cls)` without any stable pair data: rank-zero classes of
    /// degree at least two come only from the user table.
    pub fn lookup_static(&self, cls: &P2Class) -> Result<(Q, Source), DtError> {
        self.lookup_inner(cls, None)
    }

    /// Resolves `DT(cls)` with its provenance, using `pairs` for rank-zero
    /// classes of degree at least two.
    pub fn lookup(&self, cls: &P2Class, pairs: &dyn PairSource) -> Result<(Q, Source), DtError> {
        self.lookup_inner(cls, Some(pairs))
    }

    pub fn value(&self, cls: &P2Class, pairs: &dyn PairSource) -> Result<Q, DtError> {
        Ok(self.lookup(cls, pairs)?.0)
    }

    fn lookup_inner(
        &self,
        cls: &P2Class,
        pairs: Option<&dyn PairSource>,
    ) -> Result<(Q, Source), DtError> {
        if cls.is_zero() {
            return Err(DtError::ZeroClass);
        }
        if !bogomolov_nonzero(cls) {
            return Ok((Q::zero(), Source::Bogomolov));
        }
        let key = normalize(cls)?;
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let resolved = match self.resolve_without_pairs(&key)? {
            Some(v) => Some(v),
            None if key.0.r == 0 && key.0.c >= 2 && pairs.is_some() => {
                // Representative with N = 3c/2 + m in [1, c].
                let c = key.0.c;
                let n = (3 * c + key.0.m2) / 2;
                let rep_n = (n - 1).rem_euclid(c) + 1;
                let m2 = 2 * rep_n - 3 * c;
                Some((rankzero_dt(c, m2, pairs.unwrap())?, Source::Rankzero))
            }
            None => None,
        };
        let resolved = match resolved {
            Some(v) => v,
            None => match self.user.get(&key) {
                Some(v) => (v.clone(), Source::User),
                None => return Err(DtError::NotAvailable(key.0)),
            },
        };
        self.cache.lock().unwrap().insert(key, resolved.clone());
        Ok(resolved)
    }
}

/// Pair source reading fixed values; anything below the support bound is 0.
pub struct FixedPairs(pub HashMap<(i64, i64), Q>);

impl PairSource for FixedPairs {
    fn pair(&self, c: i64, n: i64) -> Result<Q, DtError> {
        if c == 0 {
            return Ok(if n == 0 { Q::one() } else { Q::zero() });
        }
        if n < n_min(c) {
            return Ok(Q::zero());
        }
        self.0
            .get(&(c, n))
            .cloned()
            .ok_or(DtError::MissingPairValue {
                c,
                n,
                reason: "not in the supplied table".into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(r: i64, c: i64, m2: i64) -> P2Class {
        P2Class::new(r, c, m2).unwrap()
    }

    fn line_pairs(max_n: i64) -> FixedPairs {
        FixedPairs(
            (1..=max_n)
                .map(|n| ((1, n), qi(3 * n * if n % 2 == 1 { 1 } else { -1 })))
                .collect(),
        )
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&p(-1, 1, -1)).unwrap(), DtKey(p(1, 0, 0)));
        assert_eq!(normalize(&p(0, 0, 10)).unwrap(), DtKey(p(0, 0, 10)));
        assert_eq!(normalize(&p(-2, 2, 2)).unwrap(), DtKey(p(2, 0, -4)));
        assert_eq!(normalize(&p(0, 0, 0)), Err(DtError::ZeroClass));
        assert_eq!(normalize(&p(0, 2, 5 * 2)).unwrap(), DtKey(p(0, 2, 2)));
        assert_eq!(
            normalize(&p(0, 3, 1)).unwrap(),
            normalize(&p(0, 3, -1)).unwrap()
        );
        assert_eq!(normalize(&p(3, 2, 0)).unwrap(), DtKey(p(3, 1, -1)));
    }

    #[test]
    fn bogomolov_examples() {
        assert!(bogomolov_nonzero(&p(1, 0, 0)));
        assert!(!bogomolov_nonzero(&p(1, 0, 2)));
        assert!(bogomolov_nonzero(&p(-1, 1, -1)));
    }

    #[test]
    fn static_lookups() {
        let t = DtTable::new();
        assert_eq!(
            t.lookup_static(&p(0, 1, 7)).unwrap(),
            (qi(3), Source::Builtin)
        );
        assert_eq!(
            t.lookup_static(&p(2, 0, 0)).unwrap(),
            (qr(1, 4), Source::Builtin)
        );
        assert_eq!(
            t.lookup_static(&p(1, 0, 0)).unwrap(),
            (qi(1), Source::Series)
        );
        assert_eq!(
            t.lookup_static(&p(1, 0, -2)).unwrap(),
            (qi(3), Source::Series)
        );
        assert_eq!(
            t.lookup_static(&p(2, 1, -1)).unwrap(),
            (qi(1), Source::Series)
        );
        assert_eq!(
            t.lookup_static(&p(1, 0, 2)).unwrap(),
            (qi(0), Source::Bogomolov)
        );
        assert_eq!(
            t.lookup_static(&p(0, 2, 0)),
            Err(DtError::NotAvailable(p(0, 2, 0)))
        );
        assert_eq!(
            t.lookup_static(&p(3, 0, -2)),
            Err(DtError::NotAvailable(p(3, 0, -2)))
        );
    }

    #[test]
    fn rank_two_odd_values() {
        let t = DtTable::new();
        // DT(2, 1, m) at q^{3/4 + j}, j = 0..4
        let expect = [1, 9, 48, 203, 729];
        for (j, v) in expect.iter().enumerate() {
            let m2 = -1 - 2 * j as i64;
            assert_eq!(t.lookup_static(&p(2, 1, m2)).unwrap().0, qi(*v));
        }
    }

    #[test]
    fn user_entries() {
        let mut t = DtTable::new();
        let n = t
            .load_user_json(r#"[{"r": 3, "c": 0, "m2": -2, "value": "5/3"}, {"r": -3, "c": 0, "m2": 2, "value": "5/3"}]"#)
            .unwrap();
        assert_eq!(n, 2);
        t.freeze();
        assert_eq!(
            t.lookup_static(&p(3, 3, 1)).unwrap(),
            (qr(5, 3), Source::User)
        );
        assert_eq!(t.insert_user(&p(3, 0, -4), qi(1)), Err(DtError::Frozen));

        let mut bad = DtTable::new();
        let err = bad
            .load_user_json(r#"[{"r": 3, "c": 0, "m2": -2, "value": "1"}, {"r": 3, "c": 3, "m2": 1, "value": "2"}]"#)
            .unwrap_err();
        assert!(matches!(err, DtError::Conflict { .. }));
    }

    #[test]
    fn rankzero_line_class() {
        let pairs = line_pairs(10);
        for m2 in [-1, 1, 3] {
            assert_eq!(rankzero_dt(1, m2, &pairs).unwrap(), qi(3));
        }
        assert_eq!(rankzero_dt(1, -3, &pairs).unwrap(), qi(3));
        assert_eq!(rankzero_k1_coefficient(2, 0), qr(1, 3));
    }

    #[test]
    fn missing_pairs_surface() {
        let err = rankzero_dt(1, 11, &line_pairs(3)).unwrap_err();
        assert!(matches!(err, DtError::MissingPairValue { c: 1, n: 7, .. }));
    }

    fn arb_class() -> impl Strategy<Value = P2Class> {
        (-3i64..=3, -6i64..=6, -12i64..=12)
            .prop_map(|(r, c, m2)| P2Class {
                r,
                c,
                m2: m2 - (m2 - c).rem_euclid(2),
            })
            .prop_filter("nonzero", |a| !a.is_zero())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn keys_are_orbit_invariants(a in arb_class()) {
            let k = normalize(&a).unwrap();
            prop_assert_eq!(normalize(&a.shift()).unwrap(), k);
            prop_assert_eq!(normalize(&a.unshift()).unwrap(), k);
            prop_assert_eq!(normalize(&a.dual()).unwrap(), k);
            prop_assert_eq!(normalize(&-a).unwrap(), k);
            prop_assert_eq!(normalize(&k.0).unwrap(), k);
            prop_assert_eq!(k.0.c * k.0.c - k.0.r * k.0.m2, a.c * a.c - a.r * a.m2);
        }

        #[test]
        fn lookup_is_orbit_invariant(a in arb_class()) {
            let t = DtTable::new();
            let base = t.lookup_static(&a).map(|v| v.0);
            for b in [a.shift(), a.dual(), -a] {
                prop_assert_eq!(t.lookup_static(&b).map(|v| v.0), base.clone());
            }
            if !a.bogomolov() {
                prop_assert_eq!(base, Ok(qi(0)));
            }
        }
    }
}
