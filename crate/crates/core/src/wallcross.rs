//! Evaluation of the wall-crossing sums.
//!
//! Every sum runs over tuples `(k, e, parts, r, curve, n')`: a rank-one class
//! `e^{rD}(1, 0, -beta, -n')` in slot `e` and classes `parts` on `P^2` in the
//! other slots, subject to a linear constraint on the total class. For fixed
//! `(r, curve, n')` the constraint only fixes the sums
//! `R = sum r_j`, `2C = sum (2c_j + r_j)` and `8M = sum 8 m_hat_j` of the
//! parts; such a slice is called a stratum here.
//!
//! Inside a stratum the tuples are produced by joining two pools: sequences
//! of parts that may stand left of `e` and sequences that may stand right of
//! it. Because the `U` coefficient factors over the two sides, each pool only
//! keeps sequences whose own factor is nonzero.
//!
//! Unbounded directions are cut by [`WindowConfig`]: `|r_j| <= r_window`,
//! `|8 m_hat_j| <= |8M| + 4 m_window`, and `n'` at most `n_pad` above the
//! target. [`saturation_check`] reruns a computation with larger windows.

use crate::combinat::{
    kirchhoff_tree_sum, left_gap_factor, left_side_u, right_gap_factor, right_side_u, small_to_q,
    PartsTuple, SmallQ,
};
use crate::dtstore::{n_min, DtError, DtTable, PairSource};
use crate::lattice::{
    chi_ab, chi_ae_int, chi_ae_l_int, AmbientData, LatticeError, P2Class, XClass,
};
use crate::rational::{as_i64, fmt_q, parse_q, qi, qr, serde_q, Q};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WallcrossError {
    #[error(transparent)]
    Dt(Box<DtError>),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("window overflow: {what} has more than {cap} candidates")]
    WindowOverflow { what: String, cap: usize },
    #[error("P(n = {n}, c = {c}) = {value} below the support bound")]
    SupportViolation { c: i64, n: i64, value: String },
    #[error("sign parity mismatch: {0}")]
    ParityViolation(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("cannot parse table: {0}")]
    Parse(String),
}

impl From<DtError> for WallcrossError {
    fn from(e: DtError) -> Self {
        WallcrossError::Dt(Box::new(e))
    }
}

type Result<T> = std::result::Result<T, WallcrossError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Behrend,
    Euler,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Behrend => "behrend",
            Mode::Euler => "euler",
        })
    }
}

impl FromStr for Mode {
    type Err = WallcrossError;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "behrend" => Ok(Mode::Behrend),
            "euler" => Ok(Mode::Euler),
            _ => Err(WallcrossError::Invalid(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Extra room for each `|2 m_j|` beyond the stratum's own `|M|`.
    pub m_window: i64,
    pub r_window: i64,
    pub n_pad: i64,
    pub saturation_steps: u32,
    /// Hard cap on pool sizes and on joined candidates per stratum.
    pub max_candidates: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            m_window: 8,
            r_window: 3,
            n_pad: 6,
            saturation_steps: 2,
            max_candidates: 4_000_000,
        }
    }
}

impl WindowConfig {
    pub fn enlarged(&self, by: i64) -> WindowConfig {
        WindowConfig {
            m_window: self.m_window + by,
            r_window: self.r_window + by,
            n_pad: self.n_pad + by,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_window < 0 || self.r_window < 0 || self.n_pad < 0 {
            return Err(WallcrossError::Invalid(format!(
                "negative window in {self:?}"
            )));
        }
        Ok(())
    }
}

/// Which pairing the rank-one slot uses: plain, or against the `L`-twisted
/// class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pairing {
    Plain,
    Twisted,
}

#[derive(Debug, Clone)]
struct Stratum {
    r: i64,
    curve: i64,
    nprime: i64,
    d_beta: i64,
    pairing: Pairing,
    rsum: i64,
    ch2: i64,
    mh8: i64,
}

/// One evaluated summand: `coefficient` is the sign times `f` (or `g`);
/// DT and stable pair factors are not included.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub parts: PartsTuple,
    pub r: i64,
    pub curve: i64,
    pub nprime: i64,
    pub sign: i32,
    pub coefficient: Q,
}

#[derive(Debug, Clone)]
struct PoolEntry {
    parts: Vec<P2Class>,
    ch2: i64,
    r: i64,
    mh8: i64,
    max_abs_mh8: i64,
    u: SmallQ,
}

struct Pool {
    w8: i64,
    entries: Vec<PoolEntry>,
    index: HashMap<(i64, i64, i64), Vec<usize>>,
}

fn sgn(x: i64) -> i32 {
    if x > 0 {
        1
    } else {
        -1
    }
}

fn candidate_parts(budget: i64, r_window: i64, w8: i64) -> Vec<P2Class> {
    let mut out = Vec::new();
    for ch2 in 1..=budget {
        for r in -r_window..=r_window {
            if (ch2 - r).rem_euclid(2) != 0 {
                continue;
            }
            let c = (ch2 - r) / 2;
            // mh8 = 4 m2 + 4c + r
            let lo = (-w8 - 4 * c - r).div_euclid(4) - 1;
            let hi = (w8 - 4 * c - r).div_euclid(4) + 1;
            for m2 in lo..=hi {
                let mh8 = 4 * m2 + 4 * c + r;
                if mh8.abs() > w8 || (m2 - c).rem_euclid(2) != 0 || c * c < r * m2 {
                    continue;
                }
                out.push(P2Class { r, c, m2 });
            }
        }
    }
    out
}

struct PoolBuilder<'a> {
    cands: &'a [P2Class],
    budget: i64,
    cap: usize,
    out: Vec<PoolEntry>,
    seq: Vec<P2Class>,
}

impl PoolBuilder<'_> {
    fn push(&mut self, parts: Vec<P2Class>, u: SmallQ) -> Result<()> {
        if self.out.len() >= self.cap {
            return Err(WallcrossError::WindowOverflow {
                what: format!("side pool of budget {}", self.budget),
                cap: self.cap,
            });
        }
        let entry = PoolEntry {
            ch2: parts.iter().map(|p| p.ch2()).sum(),
            r: parts.iter().map(|p| p.r).sum(),
            mh8: parts.iter().map(|p| p.mh8()).sum(),
            max_abs_mh8: parts.iter().map(|p| p.mh8().abs()).max().unwrap_or(0),
            parts,
            u,
        };
        self.out.push(entry);
        Ok(())
    }

    /// Left of `e`, grown from slot 1 towards `e`; `mh8` is the prefix sum.
    fn left(&mut self, ch2: i64, mh8: i64) -> Result<()> {
        // candidates come sorted by ch2
        let end = self.cands.partition_point(|q| q.ch2() <= self.budget - ch2);
        for i in 0..end {
            self.left_step(self.cands[i], ch2, mh8)?;
        }
        Ok(())
    }

    fn left_step(&mut self, q: P2Class, ch2: i64, mh8: i64) -> Result<()> {
        if ch2 + q.ch2() > self.budget {
            return Ok(());
        }
        if let Some(last) = self.seq.last() {
            if !last.proportional(&q) && left_gap_factor(last, &q, mh8) == 0 {
                return Ok(());
            }
        }
        self.seq.push(q);
        let total = mh8 + q.mh8();
        if sgn(-q.r) != sgn(total) {
            let u = left_side_u(&self.seq);
            if !u.is_zero() {
                self.push(self.seq.clone(), u)?;
            }
        }
        self.left(ch2 + q.ch2(), total)?;
        self.seq.pop();
        Ok(())
    }

    /// Right of `e`, grown from the last slot towards `e`; `self.seq` holds
    /// the parts in reverse slot order and `mh8` is their sum.
    fn right(&mut self, ch2: i64, mh8: i64) -> Result<()> {
        // candidates come sorted by ch2
        let end = self.cands.partition_point(|q| q.ch2() <= self.budget - ch2);
        for i in 0..end {
            self.right_step(self.cands[i], ch2, mh8)?;
        }
        Ok(())
    }

    fn right_step(&mut self, q: P2Class, ch2: i64, mh8: i64) -> Result<()> {
        if ch2 + q.ch2() > self.budget {
            return Ok(());
        }
        if let Some(first) = self.seq.last() {
            if !q.proportional(first) && right_gap_factor(&q, first, mh8) == 0 {
                return Ok(());
            }
        }
        self.seq.push(q);
        let total = mh8 + q.mh8();
        if sgn(-q.r) != sgn(total) {
            let ordered: Vec<P2Class> = self.seq.iter().rev().copied().collect();
            let u = right_side_u(&ordered);
            if !u.is_zero() {
                self.push(ordered, u)?;
            }
        }
        self.right(ch2 + q.ch2(), total)?;
        self.seq.pop();
        Ok(())
    }
}

fn build_pool(left: bool, budget: i64, r_window: i64, w8: i64, cap: usize) -> Result<Pool> {
    let cands = candidate_parts(budget, r_window, w8);
    let branches: Vec<Result<Vec<PoolEntry>>> = cands
        .par_iter()
        .map(|&q| {
            let mut b = PoolBuilder {
                cands: &cands,
                budget,
                cap,
                out: Vec::new(),
                seq: Vec::new(),
            };
            if left {
                b.left_step(q, 0, 0)?;
            } else {
                b.right_step(q, 0, 0)?;
            }
            Ok(b.out)
        })
        .collect();
    let mut entries = vec![PoolEntry {
        parts: Vec::new(),
        ch2: 0,
        r: 0,
        mh8: 0,
        max_abs_mh8: 0,
        u: SmallQ::one(),
    }];
    for b in branches {
        entries.extend(b?);
        if entries.len() > cap {
            return Err(WallcrossError::WindowOverflow {
                what: format!("side pool of budget {budget}"),
                cap,
            });
        }
    }
    let mut index: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        index.entry((e.ch2, e.r, e.mh8)).or_default().push(i);
    }
    Ok(Pool { w8, entries, index })
}

/// Counters for the integrality checks made while evaluating terms.
#[derive(Debug, Default)]
pub struct Checks {
    pub pairings: AtomicU64,
    pub sign_parities: AtomicU64,
    pub terms: AtomicU64,
}

impl Checks {
    pub fn snapshot(&self) -> (u64, u64, u64) {
        (
            self.pairings.load(Ordering::Relaxed),
            self.sign_parities.load(Ordering::Relaxed),
            self.terms.load(Ordering::Relaxed),
        )
    }
}

/// Stable pair table of local `P^2` in one mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairTable {
    pub mode: Mode,
    pub values: BTreeMap<(i64, i64), Q>,
}

#[derive(Serialize, Deserialize)]
struct PairEntryJson {
    c: i64,
    n: i64,
    #[serde(with = "serde_q")]
    value: Q,
}

#[derive(Serialize, Deserialize)]
struct PairTableJson {
    mode: Mode,
    entries: Vec<PairEntryJson>,
}

impl PairTable {
    pub fn new(mode: Mode) -> Self {
        PairTable {
            mode,
            values: BTreeMap::new(),
        }
    }

    pub fn get(&self, c: i64, n: i64) -> Option<&Q> {
        self.values.get(&(c, n))
    }

    pub fn to_json(&self) -> String {
        let j = PairTableJson {
            mode: self.mode,
            entries: self
                .values
                .iter()
                .map(|(&(c, n), v)| PairEntryJson {
                    c,
                    n,
                    value: v.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&j).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: PairTableJson =
            serde_json::from_str(text).map_err(|e| WallcrossError::Parse(e.to_string()))?;
        Ok(PairTable {
            mode: j.mode,
            values: j
                .entries
                .into_iter()
                .map(|e| ((e.c, e.n), e.value))
                .collect(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# mode={}\nc,n,value\n", self.mode);
        for (&(c, n), v) in &self.values {
            s.push_str(&format!("{c},{n},{}\n", fmt_q(v)));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut mode = None;
        let mut values = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(m) = line.strip_prefix("# mode=") {
                mode = Some(m.parse()?);
                continue;
            }
            if line.is_empty() || line == "c,n,value" {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(WallcrossError::Parse(format!("bad csv line {line:?}")));
            }
            let c = f[0]
                .parse()
                .map_err(|_| WallcrossError::Parse(line.to_string()))?;
            let n = f[1]
                .parse()
                .map_err(|_| WallcrossError::Parse(line.to_string()))?;
            let v = parse_q(f[2]).map_err(|e| WallcrossError::Parse(e.to_string()))?;
            values.insert((c, n), v);
        }
        let mode = mode.ok_or_else(|| WallcrossError::Parse("missing mode line".into()))?;
        Ok(PairTable { mode, values })
    }
}

impl PairSource for PairTable {
    fn pair(&self, c: i64, n: i64) -> std::result::Result<Q, DtError> {
        if c < 0 {
            return Ok(Q::zero());
        }
        if c == 0 {
            return Ok(if n == 0 { Q::one() } else { Q::zero() });
        }
        if n < n_min(c) {
            return Ok(Q::zero());
        }
        self.get(c, n).cloned().ok_or(DtError::MissingPairValue {
            c,
            n,
            reason: "absent from the pair table".into(),
        })
    }
}

/// Symbol `P_{n, beta0 + c_shift [l]}` of a formal relation.
pub type Symbol = (i64, i64);

/// Two formal linear combinations of stable pair symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormalRelation {
    pub lhs: BTreeMap<Symbol, Q>,
    pub rhs: BTreeMap<Symbol, Q>,
}

#[derive(Serialize, Deserialize)]
struct SymbolJson {
    n: i64,
    c_shift: i64,
    #[serde(with = "serde_q")]
    coef: Q,
}

#[derive(Serialize, Deserialize)]
struct RelationJson {
    lhs: Vec<SymbolJson>,
    rhs: Vec<SymbolJson>,
}

fn side_json(side: &BTreeMap<Symbol, Q>) -> Vec<SymbolJson> {
    side.iter()
        .map(|(&(n, c_shift), v)| SymbolJson {
            n,
            c_shift,
            coef: v.clone(),
        })
        .collect()
}

fn side_from_json(v: Vec<SymbolJson>) -> BTreeMap<Symbol, Q> {
    v.into_iter()
        .filter(|s| !s.coef.is_zero())
        .map(|s| ((s.n, s.c_shift), s.coef))
        .collect()
}

impl FormalRelation {
    pub fn is_empty(&self) -> bool {
        self.lhs.is_empty() && self.rhs.is_empty()
    }

    /// `symbol = sum coef * other` obtained by moving everything except
    /// `symbol` to the right.
    pub fn solved_for(&self, symbol: Symbol) -> Option<BTreeMap<Symbol, Q>> {
        let lead = self.lhs.get(&symbol).cloned().unwrap_or_else(Q::zero)
            - self.rhs.get(&symbol).cloned().unwrap_or_else(Q::zero);
        if lead.is_zero() {
            return None;
        }
        let mut out: BTreeMap<Symbol, Q> = BTreeMap::new();
        for (s, v) in &self.rhs {
            if *s != symbol {
                *out.entry(*s).or_insert_with(Q::zero) += v;
            }
        }
        for (s, v) in &self.lhs {
            if *s != symbol {
                *out.entry(*s).or_insert_with(Q::zero) -= v;
            }
        }
        out.retain(|_, v| !v.is_zero());
        Some(out.into_iter().map(|(s, v)| (s, v / &lead)).collect())
    }

    pub fn to_json(&self) -> String {
        let j = RelationJson {
            lhs: side_json(&self.lhs),
            rhs: side_json(&self.rhs),
        };
        serde_json::to_string_pretty(&j).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: RelationJson =
            serde_json::from_str(text).map_err(|e| WallcrossError::Parse(e.to_string()))?;
        Ok(FormalRelation {
            lhs: side_from_json(j.lhs),
            rhs: side_from_json(j.rhs),
        })
    }
}

pub fn format_side(side: &BTreeMap<Symbol, Q>) -> String {
    if side.is_empty() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (i, (&(n, cs), v)) in side.iter().enumerate() {
        let neg = v.is_negative();
        let mag = fmt_q(&v.abs());
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if mag != "1" {
            s.push_str(&mag);
            s.push('*');
        }
        s.push_str(&format!("P({n}, b0{cs:+}l)"));
    }
    s
}

impl fmt::Display for FormalRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", format_side(&self.lhs), format_side(&self.rhs))
    }
}

/// Target and cut-offs of the constraint identity for the class
/// `u = (0, 0, beta0 + target_shift [l], n0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintParams {
    pub n0: i64,
    pub amb: AmbientData,
    pub target_shift: i64,
    /// Smallest `[l]`-shift treated as effective.
    pub min_shift: i64,
    /// Lowest `n` kept in the relation; defaults to `n0 - n_pad`.
    pub n_floor: Option<i64>,
}

impl ConstraintParams {
    pub fn new(n0: i64, amb: AmbientData) -> Self {
        ConstraintParams {
            n0,
            amb,
            target_shift: 1,
            min_shift: 0,
            n_floor: None,
        }
    }
}

fn q_to_i64(x: &Q, what: &str) -> Result<i64> {
    as_i64(x).ok_or_else(|| WallcrossError::Invalid(format!("{what} = {x} must be an integer")))
}

/// Stratum for a rank-one class with twist `r`, curve `curve [l]` (plus a
/// `beta0` part already folded into `d_beta`) and Euler characteristic `n'`,
/// given the required part sums `R`, `2C` and `8M` as rationals.
#[allow(clippy::too_many_arguments)]
fn stratum(
    r: i64,
    curve: i64,
    nprime: i64,
    d_beta: i64,
    pairing: Pairing,
    rsum: &Q,
    ch2: &Q,
    mh8: &Q,
) -> Option<Stratum> {
    let (rsum, ch2, mh8) = (as_i64(rsum)?, as_i64(ch2)?, as_i64(mh8)?);
    if ch2 < 0 {
        return None;
    }
    Some(Stratum {
        r,
        curve,
        nprime,
        d_beta,
        pairing,
        rsum,
        ch2,
        mh8,
    })
}

/// Twists `r` for which `3 r^2 + 2 r <= bound` may hold.
fn twist_range(bound: &Q) -> std::ops::RangeInclusive<i64> {
    let b = bound.ceil().to_integer();
    let b = i64::try_from(b).unwrap_or(i64::MAX / 8).max(0);
    let k = ((b as f64 / 3.0).sqrt() as i64) + 2;
    -k..=k
}

struct RawTerm {
    parts: Vec<P2Class>,
    e: usize,
    sign: i32,
    coefficient: Q,
}

/// Lazily evaluated stable pair invariants of local `P^2` together with the
/// DT data they depend on.
pub struct Engine {
    dt: DtTable,
    w: WindowConfig,
    memo: Mutex<HashMap<(Mode, i64, i64), Q>>,
    in_progress: Mutex<HashSet<(Mode, i64, i64)>>,
    pools: Mutex<HashMap<(bool, i64), Arc<Pool>>>,
    checks: Checks,
}

struct BehrendPairs<'a>(&'a Engine);

impl PairSource for BehrendPairs<'_> {
    fn pair(&self, c: i64, n: i64) -> std::result::Result<Q, DtError> {
        self.0.pair(Mode::Behrend, c, n).map_err(|e| match e {
            WallcrossError::Dt(d) => *d,
            other => DtError::MissingPairValue {
                c,
                n,
                reason: other.to_string(),
            },
        })
    }
}

impl Engine {
    pub fn new(dt: DtTable, w: WindowConfig) -> Result<Engine> {
        w.validate()?;
        Ok(Engine {
            dt,
            w,
            memo: Mutex::new(HashMap::new()),
            in_progress: Mutex::new(HashSet::new()),
            pools: Mutex::new(HashMap::new()),
            checks: Checks::default(),
        })
    }

    pub fn windows(&self) -> &WindowConfig {
        &self.w
    }

    pub fn dt_table(&self) -> &DtTable {
        &self.dt
    }

    pub fn checks(&self) -> &Checks {
        &self.checks
    }

    /// `DT(cls)`, resolving rank-zero classes through this engine's
    /// Behrend-weighted pair invariants.
    pub fn dt(&self, cls: &P2Class) -> Result<(Q, crate::dtstore::Source)> {
        Ok(self.dt.lookup(cls, &BehrendPairs(self))?)
    }

    fn pool(&self, left: bool, budget: i64, w8: i64) -> Result<Arc<Pool>> {
        let key = (left, budget);
        if let Some(p) = self.pools.lock().unwrap().get(&key) {
            if p.w8 >= w8 {
                return Ok(p.clone());
            }
        }
        let w8 = (w8 + 31) / 32 * 32;
        let pool = Arc::new(build_pool(
            left,
            budget,
            self.w.r_window,
            w8,
            self.w.max_candidates,
        )?);
        let mut guard = self.pools.lock().unwrap();
        let slot = guard.entry(key).or_insert_with(|| pool.clone());
        if slot.w8 < pool.w8 {
            *slot = pool.clone();
        }
        Ok(slot.clone())
    }

    fn sign_of(&self, parts: &[P2Class], chi_e: &[i64], st: &Stratum, mode: Mode) -> Result<i32> {
        let k = parts.len() as i64 + 1;
        let exponent = match mode {
            Mode::Behrend => {
                let mut pairing_sum: i64 = chi_e.iter().sum();
                let mut twice_expanded: i64 = 0;
                for (i, a) in parts.iter().enumerate() {
                    for b in &parts[i + 1..] {
                        pairing_sum += chi_ab(a, b);
                        twice_expanded += 2 * (a.r * b.c - b.r * a.c);
                    }
                    let r = st.r;
                    twice_expanded += match st.pairing {
                        Pairing::Plain => {
                            2 * a.r + a.m2 + 2 * r * a.c - 2 * a.r * st.d_beta
                                + 3 * a.c
                                + r * a.r
                                + r * r * a.r
                        }
                        Pairing::Twisted => {
                            a.m2 + a.c
                                + 2 * r * a.c
                                + 2 * a.r * st.d_beta
                                + 3 * r * a.r
                                + r * r * a.r
                        }
                    };
                }
                self.checks.sign_parities.fetch_add(1, Ordering::Relaxed);
                if twice_expanded % 2 != 0 || (twice_expanded / 2 - pairing_sum) % 2 != 0 {
                    return Err(WallcrossError::ParityViolation(format!(
                        "expanded exponent {twice_expanded}/2 vs pairing sum {pairing_sum} for {parts:?}"
                    )));
                }
                k - 1 + pairing_sum
            }
            Mode::Euler => k - 1 + parts.iter().map(|a| a.r + a.c + a.r * a.m2).sum::<i64>(),
        };
        Ok(if exponent.rem_euclid(2) == 0 { 1 } else { -1 })
    }

    /// Sign and `f`/`g` coefficient of one tuple; `None` when it vanishes.
    fn evaluate(
        &self,
        parts: Vec<P2Class>,
        e: usize,
        u: SmallQ,
        st: &Stratum,
        mode: Mode,
    ) -> Result<Option<RawTerm>> {
        let k = parts.len() + 1;
        let mut chi_e = Vec::with_capacity(parts.len());
        for a in &parts {
            let v = match st.pairing {
                Pairing::Plain => chi_ae_int(a, st.r, st.d_beta)?,
                Pairing::Twisted => chi_ae_l_int(a, st.r, st.d_beta)?,
            };
            chi_e.push(v);
        }
        self.checks
            .pairings
            .fetch_add(parts.len() as u64, Ordering::Relaxed);
        // slot s (1-based) -> index into parts
        let idx = |s: usize| if s < e { s - 1 } else { s - 2 };
        let weight = |a: usize, b: usize| -> BigInt {
            if b == e {
                BigInt::from(chi_e[idx(a)])
            } else if a == e {
                BigInt::from(-chi_e[idx(b)])
            } else {
                BigInt::from(chi_ab(&parts[idx(a)], &parts[idx(b)]))
            }
        };
        let trees = kirchhoff_tree_sum(k, &weight);
        if trees.is_zero() {
            return Ok(None);
        }
        let f = small_to_q(&u) * Q::from_integer(trees) / qi(1i64 << (k - 1));
        let sign = self.sign_of(&parts, &chi_e, st, mode)?;
        self.checks.terms.fetch_add(1, Ordering::Relaxed);
        let coefficient = if sign > 0 { f } else { -f };
        Ok(Some(RawTerm {
            parts,
            e,
            sign,
            coefficient,
        }))
    }

    fn stratum_terms(&self, st: &Stratum, mode: Mode) -> Result<Vec<RawTerm>> {
        if st.ch2 == 0 {
            if st.rsum == 0 && st.mh8 == 0 {
                return Ok(vec![RawTerm {
                    parts: vec![],
                    e: 1,
                    sign: 1,
                    coefficient: Q::one(),
                }]);
            }
            return Ok(vec![]);
        }
        let w8 = st.mh8.abs() + 4 * self.w.m_window;
        let left = self.pool(true, st.ch2, w8)?;
        let right = self.pool(false, st.ch2, w8)?;
        let chunks: Vec<Result<Vec<RawTerm>>> = left
            .entries
            .par_iter()
            .filter(|le| le.ch2 <= st.ch2 && le.max_abs_mh8 <= w8)
            .map(|le| {
                let mut out = Vec::new();
                let key = (st.ch2 - le.ch2, st.rsum - le.r, st.mh8 - le.mh8);
                let Some(ids) = right.index.get(&key) else {
                    return Ok(out);
                };
                for &i in ids {
                    let re = &right.entries[i];
                    if re.max_abs_mh8 > w8 {
                        continue;
                    }
                    let mut parts = le.parts.clone();
                    parts.extend_from_slice(&re.parts);
                    let e = le.parts.len() + 1;
                    if let Some(t) = self.evaluate(parts, e, le.u * re.u, st, mode)? {
                        out.push(t);
                    }
                }
                Ok(out)
            })
            .collect();
        let mut all = Vec::new();
        for c in chunks {
            all.extend(c?);
        }
        if all.len() > self.w.max_candidates {
            return Err(WallcrossError::WindowOverflow {
                what: format!("stratum {st:?}"),
                cap: self.w.max_candidates,
            });
        }
        Ok(all)
    }

    /// Sum of `coefficient * prod DT(parts)` over the given terms.
    fn dt_weighted_sum(&self, terms: &[RawTerm]) -> Result<Q> {
        let mut total = Q::zero();
        for t in terms {
            let mut prod = t.coefficient.clone();
            for p in &t.parts {
                let (v, _) = self.dt(p)?;
                if v.is_zero() {
                    prod = Q::zero();
                    break;
                }
                prod *= v;
            }
            total += prod;
        }
        Ok(total)
    }

    fn terms_by_symbol(
        &self,
        strata: Vec<Stratum>,
        mode: Mode,
    ) -> Result<Vec<(Stratum, Vec<RawTerm>)>> {
        let mut out = Vec::with_capacity(strata.len());
        for st in strata {
            let terms = self.stratum_terms(&st, mode)?;
            if !terms.is_empty() {
                out.push((st, terms));
            }
        }
        Ok(out)
    }

    /// Strata of the orbifold identity for `u = (0, d[D], l[l], n)`.
    /// `nprime` chooses the `n'` range for each curve degree.
    fn orbifold_strata(
        &self,
        d: &Q,
        l: &Q,
        n_u: &Q,
        nprime: &dyn Fn(i64) -> Vec<i64>,
        curves: &dyn Fn(i64) -> bool,
    ) -> Result<Vec<Stratum>> {
        let d_int = q_to_i64(d, "D-component")?;
        let mut out = Vec::new();
        let bound = l * qi(2) - qi(2 * d_int) + qi(4);
        for r in twist_range(&bound.abs()) {
            let rq = qi(r);
            let rsum = qi(r + d_int);
            for cp in 0i64.. {
                let ch2 = l * qi(2) - qi(3 * r * r) - qi(2 * cp) - &rsum * qi(2);
                if ch2.is_negative() {
                    break;
                }
                if !curves(cp) {
                    continue;
                }
                for np in nprime(cp) {
                    let mh8 = n_u * qi(8) - qi(8 * np) + qi(12) * &rq * &rq * &rq + qi(24 * r * cp)
                        - &ch2 * qi(4)
                        - &rsum * qi(7);
                    if let Some(st) = stratum(r, cp, np, -3 * cp, Pairing::Plain, &rsum, &ch2, &mh8)
                    {
                        out.push(st);
                    }
                }
            }
        }
        Ok(out)
    }

    fn pair_nprimes(&self, n_top: i64) -> impl Fn(i64) -> Vec<i64> {
        let pad = self.w.n_pad;
        move |cp: i64| {
            if cp == 0 {
                vec![0]
            } else {
                (n_min(cp)..=n_top + pad).collect()
            }
        }
    }

    /// `P_{n, c[l]}` in the given mode; values below the support bound read
    /// as 0 and `P_{n, 0} = delta_{n, 0}`.
    pub fn pair(&self, mode: Mode, c: i64, n: i64) -> Result<Q> {
        if c < 0 {
            return Ok(Q::zero());
        }
        if c == 0 {
            return Ok(if n == 0 { Q::one() } else { Q::zero() });
        }
        if n < n_min(c) {
            return Ok(Q::zero());
        }
        let key = (mode, c, n);
        if let Some(v) = self.memo.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        if !self.in_progress.lock().unwrap().insert(key) {
            return Err(WallcrossError::Invalid(format!(
                "cyclic dependency on P({n}, {c}) ({mode})"
            )));
        }
        let v = self.pair_by_formula(mode, c, n);
        self.in_progress.lock().unwrap().remove(&key);
        let v = v?;
        self.memo.lock().unwrap().insert(key, v.clone());
        Ok(v)
    }

    /// Evaluates the recursion for `P_{n, c[l]}` without the support
    /// shortcut at the top level.
    pub fn pair_by_formula(&self, mode: Mode, c: i64, n: i64) -> Result<Q> {
        let coeffs = self.recursion_coefficients(mode, c, n)?;
        let mut total = Q::zero();
        for ((cp, np), coef) in coeffs {
            let p = self.pair(mode, cp, np)?;
            total += coef * p;
        }
        Ok(total)
    }

    /// Aggregated coefficients `(c', n') -> sum -sign f prod DT` of the
    /// recursion for `P_{n, c[l]}`, restricted to `n' >= n_min(c')`.
    pub fn recursion_coefficients(
        &self,
        mode: Mode,
        c: i64,
        n: i64,
    ) -> Result<BTreeMap<(i64, i64), Q>> {
        let np = self.pair_nprimes(n);
        let strata = self.orbifold_strata(&Q::zero(), &qi(c), &qi(n), &np, &|cp| cp < c)?;
        self.collect_coefficients(strata, mode, true)
    }

    /// Coefficients of `P_{n', c'[l]}` in the recursion for `P_{n, c[l]}`
    /// for one curve degree `c'`, over `n'` in `[n - n_pad, n + n_pad]`
    /// without any support restriction.
    pub fn stratum_coefficients(
        &self,
        mode: Mode,
        c: i64,
        n: i64,
        cprime: i64,
    ) -> Result<BTreeMap<i64, Q>> {
        let pad = self.w.n_pad;
        let np = move |_: i64| (n - pad..=n + pad).collect::<Vec<_>>();
        let strata = self.orbifold_strata(&Q::zero(), &qi(c), &qi(n), &np, &|cp| cp == cprime)?;
        Ok(self
            .collect_coefficients(strata, mode, true)?
            .into_iter()
            .map(|((_, np), v)| (np, v))
            .collect())
    }

    fn collect_coefficients(
        &self,
        strata: Vec<Stratum>,
        mode: Mode,
        negate: bool,
    ) -> Result<BTreeMap<(i64, i64), Q>> {
        let mut out: BTreeMap<(i64, i64), Q> = BTreeMap::new();
        for (st, terms) in self.terms_by_symbol(strata, mode)? {
            let v = self.dt_weighted_sum(&terms)?;
            if v.is_zero() {
                continue;
            }
            let v = if negate { -v } else { v };
            *out.entry((st.curve, st.nprime)).or_insert_with(Q::zero) += v;
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// Terms of the recursion for `P_{n, c[l]}` with nonzero `f`.
    pub fn recursion_terms(&self, mode: Mode, c: i64, n: i64) -> Result<Vec<Term>> {
        let np = self.pair_nprimes(n);
        let strata = self.orbifold_strata(&Q::zero(), &qi(c), &qi(n), &np, &|cp| cp < c)?;
        let mut out = Vec::new();
        for (st, terms) in self.terms_by_symbol(strata, mode)? {
            for t in terms {
                out.push(Term {
                    parts: PartsTuple {
                        e: t.e,
                        parts: t.parts,
                    },
                    r: st.r,
                    curve: st.curve,
                    nprime: st.nprime,
                    sign: t.sign,
                    coefficient: t.coefficient,
                });
            }
        }
        Ok(out)
    }

    /// `P_{n, c[l]}` for `1 <= c <= c_max`, `n_min(c) <= n <= n_max`. The
    /// two values just below each support bound are evaluated through the
    /// recursion and must vanish.
    pub fn pt_local(&self, mode: Mode, c_max: i64, n_max: i64) -> Result<PairTable> {
        let mut table = PairTable::new(mode);
        for c in 1..=c_max {
            for n in (n_min(c) - 2)..n_min(c) {
                let v = self.pair_by_formula(mode, c, n)?;
                if !v.is_zero() {
                    return Err(WallcrossError::SupportViolation {
                        c,
                        n,
                        value: fmt_q(&v),
                    });
                }
            }
            for n in n_min(c)..=n_max {
                table.values.insert((c, n), self.pair(mode, c, n)?);
            }
        }
        Ok(table)
    }

    /// Stable pair invariant of the orbifold for the class `u`: the full
    /// signed sum including the term with no parts.
    pub fn orbifold_pt(&self, u: &XClass, mode: Mode) -> Result<Q> {
        if u.rank != 0 || u.b0 != 0 {
            return Err(WallcrossError::Invalid(format!(
                "orbifold class {u} needs rank 0 and no beta0 part"
            )));
        }
        let n_top = u.n.ceil().to_integer();
        let n_top =
            i64::try_from(n_top).map_err(|_| WallcrossError::Invalid("n too large".into()))?;
        let np = self.pair_nprimes(n_top);
        let strata = self.orbifold_strata(&u.d, &u.l, &u.n, &np, &|_| true)?;
        let coeffs = self.collect_coefficients(strata, mode, false)?;
        let mut total = Q::zero();
        for ((cp, npr), coef) in coeffs {
            total += coef * self.pair(mode, cp, npr)?;
        }
        Ok(total)
    }

    /// Both sides of the constraint identity for
    /// `u = (0, 0, beta0 + s[l], n0)`, as formal combinations of
    /// `P_{n, beta0 + s'[l]}`.
    pub fn constraint_relation(&self, p: &ConstraintParams, mode: Mode) -> Result<FormalRelation> {
        let d_beta0 = q_to_i64(&p.amb.d_beta0, "D.beta0")?;
        let s = p.target_shift;
        let n_floor = p.n_floor.unwrap_or(p.n0 - self.w.n_pad);
        let n_top = p.n0 + self.w.n_pad;
        if n_floor > n_top {
            return Err(WallcrossError::Invalid(format!(
                "n_floor {n_floor} above {n_top}"
            )));
        }

        let mut plain = Vec::new();
        let budget3 = qi(2 * (s - p.min_shift) + 4);
        for r in twist_range(&budget3) {
            for sp in p.min_shift.. {
                let ch2 = qi(2 * s - 2 * sp - 3 * r * r - 2 * r);
                if ch2.is_negative() {
                    break;
                }
                let d_beta = d_beta0 - 3 * sp;
                for n in n_floor..=n_top {
                    let mh8 = qi(8 * p.n0 - 8 * n + 12 * r * r * r - 8 * r * d_beta - 7 * r)
                        - &ch2 * qi(4);
                    if let Some(st) = stratum(r, sp, n, d_beta, Pairing::Plain, &qi(r), &ch2, &mh8)
                    {
                        plain.push(st);
                    }
                }
            }
        }

        let mut twisted = Vec::new();
        let beta_d = qi(d_beta0 - 3 * s);
        let theta_n = qi(p.n0) + qr(3, 2) * &beta_d + &p.amb.l_beta0 + qi(s);
        let budget4 = (qi(2 * s) + &beta_d - qi(2 * p.min_shift)).abs() + qi(4);
        for r in twist_range(&budget4) {
            let rq = qi(r);
            let rsum = &rq + &beta_d;
            for sp in p.min_shift.. {
                let ch2 = qi(2 * s) + &beta_d - qi(3 * r * r) - qi(2 * sp);
                if ch2.is_negative() {
                    break;
                }
                let d_beta = d_beta0 - 3 * sp;
                let l_dot_beta = &p.amb.l_beta0 + qi(sp);
                for n in n_floor..=n_top {
                    let m_hat = &theta_n - qi(n) + qr(r, 2) - qr(3 * r * r, 2)
                        + qr(3 * r * r * r, 2)
                        - &l_dot_beta
                        - qi(r * d_beta)
                        - &ch2 / qi(2)
                        - qr(7, 8) * &rsum;
                    let mh8 = m_hat * qi(8);
                    if let Some(st) = stratum(r, sp, n, d_beta, Pairing::Twisted, &rsum, &ch2, &mh8)
                    {
                        twisted.push(st);
                    }
                }
            }
        }

        let lhs = self.collect_coefficients(plain, mode, false)?;
        let rhs = self.collect_coefficients(twisted, mode, false)?;
        let swap =
            |m: BTreeMap<(i64, i64), Q>| m.into_iter().map(|((cs, n), v)| ((n, cs), v)).collect();
        Ok(FormalRelation {
            lhs: swap(lhs),
            rhs: swap(rhs),
        })
    }
}

/// What [`saturation_check`] recomputes.
#[derive(Debug, Clone)]
pub enum Computation {
    PtLocal {
        mode: Mode,
        c_max: i64,
        n_max: i64,
    },
    Orbifold {
        u: XClass,
        mode: Mode,
    },
    Constraint {
        params: ConstraintParams,
        mode: Mode,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Table(PairTable),
    Value(Q),
    Relation(FormalRelation),
}

pub fn run(comp: &Computation, dt: &DtTable, w: &WindowConfig) -> Result<Outcome> {
    let engine = Engine::new(dt.clone(), w.clone())?;
    run_on(&engine, comp)
}

pub fn run_on(engine: &Engine, comp: &Computation) -> Result<Outcome> {
    Ok(match comp {
        Computation::PtLocal { mode, c_max, n_max } => {
            Outcome::Table(engine.pt_local(*mode, *c_max, *n_max)?)
        }
        Computation::Orbifold { u, mode } => Outcome::Value(engine.orbifold_pt(u, *mode)?),
        Computation::Constraint { params, mode } => {
            Outcome::Relation(engine.constraint_relation(params, *mode)?)
        }
    })
}

/// Reruns `comps` with every window enlarged by one, `saturation_steps`
/// times, and reports whether all results agree exactly.
pub fn saturation_check(comps: &[Computation], dt: &DtTable, w: &WindowConfig) -> Result<bool> {
    Ok(saturation_diff(comps, dt, w)?.is_none())
}

/// Like [`saturation_check`], but names the first disagreement: the index
/// into `comps` and the enlargement step.
pub fn saturation_diff(
    comps: &[Computation],
    dt: &DtTable,
    w: &WindowConfig,
) -> Result<Option<(usize, i64)>> {
    let engine = Engine::new(dt.clone(), w.clone())?;
    let base: Vec<Outcome> = comps
        .iter()
        .map(|c| run_on(&engine, c))
        .collect::<Result<_>>()?;
    for step in 1..=w.saturation_steps as i64 {
        let engine = Engine::new(dt.clone(), w.enlarged(step))?;
        for (i, c) in comps.iter().enumerate() {
            if run_on(&engine, c)? != base[i] {
                return Ok(Some((i, step)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::u_coeff;

    fn p(r: i64, c: i64, m2: i64) -> P2Class {
        P2Class::new(r, c, m2).unwrap()
    }

    fn engine() -> Engine {
        Engine::new(DtTable::new(), WindowConfig::default()).unwrap()
    }

    #[test]
    fn pools_only_hold_nonzero_sides() {
        for left in [true, false] {
            let pool = build_pool(left, 3, 2, 24, 1_000_000).unwrap();
            assert!(pool.entries.len() > 1);
            for en in &pool.entries {
                let u = if left {
                    left_side_u(&en.parts)
                } else {
                    right_side_u(&en.parts)
                };
                assert_eq!(u, en.u);
                assert!(!u.is_zero());
                let e = if left { en.parts.len() + 1 } else { 1 };
                if !en.parts.is_empty() {
                    let pt = PartsTuple::new(e, en.parts.clone()).unwrap();
                    assert_eq!(u_coeff(&pt), small_to_q(&u));
                }
            }
        }
    }

    #[test]
    fn pool_is_complete_for_small_budget() {
        // every single part with nonzero U on the left appears in the pool
        let pool = build_pool(true, 2, 2, 16, 1_000_000).unwrap();
        for a in candidate_parts(2, 2, 16) {
            let pt = PartsTuple::new(2, vec![a]).unwrap();
            let present = pool.entries.iter().any(|en| en.parts == vec![a]);
            assert_eq!(present, !u_coeff(&pt).is_zero(), "{a}");
        }
    }

    #[test]
    fn line_class_families() {
        let eng = engine();
        let terms = eng.recursion_terms(Mode::Behrend, 1, 1).unwrap();
        // the untwisted pairs of parts cancel among their orderings
        let untwisted: Q = terms
            .iter()
            .filter(|t| t.r == 0)
            .map(|t| t.coefficient.clone())
            .sum();
        assert_eq!(untwisted, qi(0));
        assert!(terms.iter().all(|t| t.curve == 0 && t.nprime == 0));
        let coeffs = eng.recursion_coefficients(Mode::Behrend, 1, 1).unwrap();
        assert_eq!(
            coeffs.into_iter().collect::<Vec<_>>(),
            vec![((0, 0), qi(3))]
        );
        assert!(eng
            .recursion_terms(Mode::Behrend, 1, -1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn line_class_values() {
        let eng = engine();
        for n in 1..=5 {
            let sign = if n % 2 == 1 { 1 } else { -1 };
            assert_eq!(
                eng.pair(Mode::Behrend, 1, n).unwrap(),
                qi(3 * n * sign),
                "n = {n}"
            );
            assert_eq!(eng.pair(Mode::Euler, 1, n).unwrap(), qi(3 * n), "n = {n}");
        }
        for n in -2..=0 {
            assert_eq!(eng.pair_by_formula(Mode::Behrend, 1, n).unwrap(), qi(0));
        }
    }

    #[test]
    fn json_and_csv_round_trip() {
        let mut t = PairTable::new(Mode::Euler);
        t.values.insert((1, 1), qi(3));
        t.values.insert((2, 3), qr(-21, 4));
        assert_eq!(PairTable::from_json(&t.to_json()).unwrap(), t);
        assert_eq!(PairTable::from_csv(&t.to_csv()).unwrap(), t);
        let mut rel = FormalRelation::default();
        rel.lhs.insert((5, 1), qi(1));
        rel.rhs.insert((4, 0), qi(3));
        assert_eq!(FormalRelation::from_json(&rel.to_json()).unwrap(), rel);
        assert_eq!(rel.to_string(), "P(5, b0+1l) = 3*P(4, b0+0l)");
        assert_eq!(FormalRelation::default().to_string(), "0 = 0");
    }

    #[test]
    fn solved_form() {
        let mut rel = FormalRelation::default();
        rel.lhs.insert((5, 1), qi(1));
        rel.lhs.insert((3, 0), qi(2));
        rel.rhs.insert((4, 0), qi(3));
        let s = rel.solved_for((5, 1)).unwrap();
        assert_eq!(s.get(&(3, 0)), Some(&qi(-2)));
        assert_eq!(s.get(&(4, 0)), Some(&qi(3)));
        assert!(rel.solved_for((9, 9)).is_none());
    }

    #[test]
    fn zero_and_point_classes() {
        let eng = engine();
        let zero = XClass::zero();
        assert_eq!(eng.orbifold_pt(&zero, Mode::Behrend).unwrap(), qi(1));
        let pt = XClass::new(0, qi(0), qi(0), 0, qi(2));
        assert_eq!(eng.orbifold_pt(&pt, Mode::Behrend).unwrap(), qi(0));
    }

    fn alternating(n: i64, np: i64) -> Q {
        let d = n - np;
        qi(if (d - 1) % 2 == 0 { 3 * d } else { -3 * d })
    }

    #[test]
    fn stratum_coefficients_low_degree() {
        let eng = engine();
        let n = 5;
        for c in 1..=2 {
            let got = eng
                .stratum_coefficients(Mode::Behrend, c, n, c - 1)
                .unwrap();
            let mut want = BTreeMap::new();
            for np in n - 6..n - 1 {
                want.insert(np, alternating(n, np));
            }
            if c == 1 {
                want.insert(n - 1, qi(3));
            } else {
                *want.get_mut(&(n - 4)).unwrap() -= qi(6);
                want.insert(n - 1, qi(-21));
            }
            assert_eq!(got, want, "c = {c}");
        }
    }

    #[test]
    fn diagonal_coefficient_is_one() {
        let eng = engine();
        for c in 1..=2 {
            let got = eng.stratum_coefficients(Mode::Behrend, c, 4, c).unwrap();
            assert_eq!(got.get(&4), Some(&qi(-1)), "c = {c}");
        }
    }

    fn constraint(eng: &Engine, n0: i64, d: i64, mode: Mode) -> FormalRelation {
        let mut p = ConstraintParams::new(n0, AmbientData::new(qi(d), qi(0)));
        if d < 0 {
            p.target_shift = 0;
            p.min_shift = -1;
        }
        eng.constraint_relation(&p, mode).unwrap()
    }

    #[test]
    fn constraint_solves_to_line_recursion() {
        let eng = engine();
        for n0 in 3..=5 {
            let rel = constraint(&eng, n0, 1, Mode::Behrend);
            let got = rel.solved_for((n0, 1)).unwrap();
            let mut want = BTreeMap::new();
            for n in n0 - 6..n0 - 1 {
                want.insert((n, 0), alternating(n0, n));
            }
            want.insert((n0 - 1, 0), qi(3));
            want.insert((n0, 0), qi(-2));
            assert_eq!(got, want, "n0 = {n0}");
        }
    }

    #[test]
    fn constraint_negative_degree_keeps_target_alone() {
        let eng = engine();
        let rel = constraint(&eng, 5, -1, Mode::Behrend);
        assert_eq!(rel.lhs.get(&(5, 0)), Some(&qi(1)));
        assert!(rel
            .lhs
            .keys()
            .chain(rel.rhs.keys())
            .all(|&(n, s)| s == -1 || (n, s) == (5, 0)));
        let got: Vec<Q> = rel.solved_for((5, 0)).unwrap().into_values().collect();
        let want: Vec<Q> = [-18, 15, -12, 9, -6, 4, -2, 1]
            .into_iter()
            .map(qi)
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn constraint_euler_pin() {
        let eng = engine();
        let got: Vec<Q> = constraint(&eng, 5, 1, Mode::Euler)
            .solved_for((5, 1))
            .unwrap()
            .into_values()
            .collect();
        assert_eq!(
            got,
            [18, 15, 12, 9, 6, 3, 2]
                .into_iter()
                .map(qi)
                .collect::<Vec<_>>()
        );
        let got: Vec<Q> = constraint(&eng, 5, -1, Mode::Euler)
            .solved_for((5, 0))
            .unwrap()
            .into_values()
            .collect();
        assert_eq!(
            got,
            [18, 15, 12, 9, 6, 4, 2, 1]
                .into_iter()
                .map(qi)
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn orbifold_vanishes_on_curve_classes() {
        let eng = engine();
        for c in 1..=2 {
            for n in n_min(c)..=4 {
                let u = XClass::new(0, qi(0), qi(c), 0, qi(n));
                assert_eq!(
                    eng.orbifold_pt(&u, Mode::Behrend).unwrap(),
                    qi(0),
                    "c = {c}, n = {n}"
                );
            }
        }
    }

    #[test]
    fn rank_zero_from_pairs() {
        let eng = engine();
        assert_eq!(eng.dt(&p(0, 2, 0)).unwrap().0, qi(-6));
        assert_eq!(eng.dt(&p(0, 2, 2)).unwrap().0, qr(-21, 4));
        assert_eq!(eng.dt(&p(0, 1, 1)).unwrap().0, qi(3));
    }

    #[test]
    fn zero_m_window_is_not_saturated() {
        let comps = [Computation::PtLocal {
            mode: Mode::Behrend,
            c_max: 2,
            n_max: 3,
        }];
        let w = WindowConfig {
            m_window: 0,
            ..Default::default()
        };
        assert!(!saturation_check(&comps, &DtTable::new(), &w).unwrap());
        assert!(saturation_check(&comps, &DtTable::new(), &WindowConfig::default()).unwrap());
    }

    #[test]
    fn mode_parse() {
        assert_eq!("euler".parse::<Mode>().unwrap(), Mode::Euler);
        assert!("x".parse::<Mode>().is_err());
        assert!(WindowConfig {
            m_window: -1,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
