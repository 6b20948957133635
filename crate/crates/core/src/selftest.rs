//! Acceptance checks. Each check recomputes a family of known values and
//! compares exactly; [`run_selftest`] returns one report per check.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::combinat::{enumerate_trees, u_coeff, u_coeff_oracle, PartsTuple};
use crate::dtstore::{n_min, rankzero_dt, DtError, DtTable, Source};
use crate::lattice::{
    chi_ab, chi_ae_int, chi_ae_l_int, AmbientData, LatticeError, P2Class, XClass,
};
use crate::qseries::{dt21_series, extract_dt, goettsche_series};
use crate::rational::{fmt_q, qi, qr, Q};
use crate::wallcross::{
    saturation_diff, Computation, ConstraintParams, Engine, Mode, WallcrossError, WindowConfig,
};

/// DT values that the recursion cannot produce on its own; shipped with the
/// crate and loaded by the self test.
pub const EXTRA_DT_JSON: &str = include_str!("../data/extra_dt.json");

pub const CRITERIA: [&str; 12] = [
    "line class values",
    "low-degree recursion coefficients",
    "tree enumeration",
    "U against the oracle",
    "rank-zero DT from pair invariants",
    "series values",
    "DT symmetries",
    "Euler-weighted line class",
    "constraint relation",
    "orbifold invariants on curve classes",
    "window saturation",
    "integrality",
];

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

/// The DT table used by the self test: builtins plus [`EXTRA_DT_JSON`].
pub fn shipped_table() -> DtTable {
    let mut t = DtTable::new();
    t.load_user_json(EXTRA_DT_JSON)
        .expect("shipped DT data parses");
    t
}

enum Fail {
    Mismatch(String),
    Error(WallcrossError),
}

impl From<WallcrossError> for Fail {
    fn from(e: WallcrossError) -> Self {
        Fail::Error(e)
    }
}

impl From<DtError> for Fail {
    fn from(e: DtError) -> Self {
        Fail::Error(e.into())
    }
}

type Check = std::result::Result<String, Fail>;

/// Exact-value rendering for mismatch messages.
trait Shown {
    fn shown(&self) -> String;
}

impl Shown for Q {
    fn shown(&self) -> String {
        fmt_q(self)
    }
}

impl Shown for usize {
    fn shown(&self) -> String {
        self.to_string()
    }
}

impl<T: Shown> Shown for Option<T> {
    fn shown(&self) -> String {
        self.as_ref().map_or("none".into(), |x| x.shown())
    }
}

impl Shown for (Q, Q) {
    fn shown(&self) -> String {
        format!("{} q^{}", fmt_q(&self.1), fmt_q(&self.0))
    }
}

impl<K: fmt::Debug> Shown for BTreeMap<K, Q> {
    fn shown(&self) -> String {
        let v: Vec<String> = self
            .iter()
            .map(|(k, q)| format!("{k:?}: {}", fmt_q(q)))
            .collect();
        format!("{{{}}}", v.join(", "))
    }
}

fn expect_eq<T: PartialEq + Shown>(got: T, want: T, what: &str) -> std::result::Result<(), Fail> {
    if got == want {
        Ok(())
    } else {
        Err(Fail::Mismatch(format!(
            "{what}: got {}, expected {}",
            got.shown(),
            want.shown()
        )))
    }
}

/// `3 (-1)^(d-1) d` with `d = n - n'`.
fn alternating(n: i64, np: i64) -> Q {
    let d = n - np;
    qi(if (d - 1) % 2 == 0 { 3 * d } else { -3 * d })
}

struct Ctx {
    engine: Engine,
    dt: DtTable,
    w: WindowConfig,
    rng: StdRng,
}

fn line_class(cx: &mut Ctx) -> Check {
    let t = cx.engine.pt_local(Mode::Behrend, 1, 8)?;
    for n in 1..=8 {
        let want = if n % 2 == 1 { qi(3 * n) } else { qi(-3 * n) };
        expect_eq(t.get(1, n).cloned(), Some(want), &format!("P({n}, 1)"))?;
    }
    for n in -3..=0 {
        expect_eq(
            cx.engine.pair_by_formula(Mode::Behrend, 1, n)?,
            qi(0),
            &format!("P({n}, 1)"),
        )?;
    }
    Ok("P(n, 1) = 3(-1)^(n-1) n for n <= 8, zero for n <= 0".into())
}

fn recursion_coefficients(cx: &mut Ctx) -> Check {
    let mut shown = Vec::new();
    for n in [5, 6] {
        for c in 1..=2 {
            let got = cx.engine.stratum_coefficients(Mode::Behrend, c, n, c - 1)?;
            let mut want = BTreeMap::new();
            let pad = cx.w.n_pad;
            for np in n - pad..n - 1 {
                want.insert(np, alternating(n, np));
            }
            if c == 1 {
                want.insert(n - 1, qi(3));
            } else {
                if let Some(v) = want.get_mut(&(n - 4)) {
                    *v -= qi(6);
                }
                want.insert(n - 1, qi(-21));
            }
            if got != want {
                return Err(Fail::Mismatch(format!(
                    "c = {c}, n = {n}: got {}, expected {}",
                    got.shown(),
                    want.shown()
                )));
            }
            if n == 5 {
                shown.push(format!("c={c}: {}", got.shown()));
            }
        }
    }
    Ok(format!("n=5 {}", shown.join("; ")))
}

fn trees(_: &mut Ctx) -> Check {
    for k in 2..=6usize {
        let t = enumerate_trees(k);
        expect_eq(
            t.len(),
            k.pow(k as u32 - 2),
            &format!("trees on {k} vertices"),
        )?;
        if !t.iter().all(|t| t.is_spanning_tree()) {
            return Err(Fail::Mismatch(format!("non-tree among {k} vertices")));
        }
    }
    Ok("k^(k-2) trees for k = 2..6".into())
}

fn random_part(rng: &mut StdRng) -> P2Class {
    loop {
        let r = rng.gen_range(-2..=2);
        let c = rng.gen_range(-3..=3);
        let m2 = rng.gen_range(-6..=6);
        if let Ok(p) = P2Class::new(r, c, m2) {
            if p.ch2() > 0 {
                return p;
            }
        }
    }
}

fn u_oracle(cx: &mut Ctx) -> Check {
    let mut nonzero = 0;
    for i in 0..500 {
        let k = cx.rng.gen_range(1..=4usize);
        let parts: Vec<P2Class> = (1..k).map(|_| random_part(&mut cx.rng)).collect();
        let e = cx.rng.gen_range(1..=k);
        let pt = PartsTuple::new(e, parts).expect("valid tuple");
        let (a, b) = (u_coeff(&pt), u_coeff_oracle(&pt));
        if a != b {
            return Err(Fail::Mismatch(format!(
                "tuple {i} {pt:?}: {a} vs oracle {b}"
            )));
        }
        if !a.is_zero() {
            nonzero += 1;
        }
    }
    Ok(format!("500 tuples agree, {nonzero} nonzero"))
}

fn rank_zero(cx: &mut Ctx) -> Check {
    let table = cx.engine.pt_local(Mode::Behrend, 2, 6)?;
    let cases = [
        (1, -1, qi(3)),
        (1, 1, qi(3)),
        (1, 3, qi(3)),
        (2, 0, qi(-6)),
        (2, 2, qr(-21, 4)),
    ];
    for (c, m2, want) in cases {
        expect_eq(
            rankzero_dt(c, m2, &table)?,
            want,
            &format!("DT(0, {c}, {m2}/2)"),
        )?;
    }
    let mut closed = 0;
    for (key, v, src) in cx.engine.dt_table().resolved() {
        let k = key.0;
        if src == Source::Rankzero && k.c <= 2 {
            expect_eq(rankzero_dt(k.c, k.m2, &table)?, v, &format!("DT{k}"))?;
            closed += 1;
        }
    }
    Ok(format!(
        "DT(0,1,m) = 3, DT(0,2,0) = -6, DT(0,2,1) = -21/4; {closed} resolved values reproduced"
    ))
}

fn series(_: &mut Ctx) -> Check {
    let g = goettsche_series(&qi(6));
    let want = [1, 3, 9, 22, 51, 108];
    for (i, w) in want.iter().enumerate() {
        expect_eq(
            g.coeff(&qi(i as i64))
                .map_err(|e| Fail::Error(WallcrossError::Invalid(e.to_string())))?,
            qi(*w),
            &format!("q^{i}"),
        )?;
    }
    let d = dt21_series(&qi(3));
    let lead = d.terms().next().map(|(e, c)| (e.clone(), c.clone()));
    expect_eq(
        lead,
        Some((qr(3, 4), qi(-1))),
        "lowest term of the rank-two series",
    )?;
    let ex = |r, c, m: Q, s| {
        extract_dt(r, c, &m, s).map_err(|e| Fail::Error(WallcrossError::Invalid(e.to_string())))
    };
    expect_eq(ex(1, 0, qi(0), &g)?, qi(1), "DT(1,0,0)")?;
    expect_eq(ex(1, 0, qi(-1), &g)?, qi(3), "DT(1,0,-1)")?;
    expect_eq(ex(2, 1, qr(-1, 2), &d)?, qi(1), "DT(2,1,-1/2)")?;
    Ok("eta^-3 coefficients 1,3,9,22,51,108; rank-two series starts -q^(3/4)".into())
}

fn symmetries(cx: &mut Ctx) -> Check {
    let mut checked = 0;
    let mut vanishing = 0;
    while checked < 1000 {
        let r = cx.rng.gen_range(-3..=3);
        let c = cx.rng.gen_range(-3..=3);
        let m2 = cx.rng.gen_range(-10..=10);
        let Ok(a) = P2Class::new(r, c, m2) else {
            continue;
        };
        if a.is_zero() || (r == 0 && c == 0) {
            continue;
        }
        checked += 1;
        let base = cx.engine.dt(&a).map(|x| x.0);
        if !a.bogomolov() {
            expect_eq(
                base.clone().ok(),
                Some(qi(0)),
                &format!("DT{a} outside the Bogomolov range"),
            )?;
            vanishing += 1;
        }
        for (what, b) in [
            ("shift", a.shift()),
            ("unshift", a.unshift()),
            ("dual", a.dual()),
            ("negation", -a),
        ] {
            let other = cx.engine.dt(&b).map(|x| x.0);
            if format!("{other:?}") != format!("{base:?}") {
                return Err(Fail::Mismatch(format!(
                    "DT{a} = {base:?} but its {what} DT{b} = {other:?}"
                )));
            }
        }
    }
    Ok(format!(
        "1000 classes invariant under shift, duality and negation; {vanishing} vanish by Bogomolov"
    ))
}

fn euler_line(cx: &mut Ctx) -> Check {
    let t = cx.engine.pt_local(Mode::Euler, 1, 8)?;
    for n in 1..=8 {
        expect_eq(
            t.get(1, n).cloned(),
            Some(qi(3 * n)),
            &format!("Euler P({n}, 1)"),
        )?;
    }
    Ok("P(n, 1) = 3n for n <= 8".into())
}

/// Relation for `D.beta0 = 1`, solved for the target.
pub fn constraint_line_params(n0: i64) -> ConstraintParams {
    ConstraintParams::new(n0, AmbientData::new(qi(1), qi(0)))
}

fn constraint(cx: &mut Ctx) -> Check {
    let mut shown = String::new();
    for n0 in 3..=5 {
        let rel = cx
            .engine
            .constraint_relation(&constraint_line_params(n0), Mode::Behrend)?;
        let Some(got) = rel.solved_for((n0, 1)) else {
            return Err(Fail::Mismatch(format!(
                "n0 = {n0}: target missing from {rel}"
            )));
        };
        let mut want = BTreeMap::new();
        let floor = n0 - cx.w.n_pad;
        for n in floor..n0 - 1 {
            want.insert((n, 0), alternating(n0, n));
        }
        want.insert((n0 - 1, 0), qi(3));
        want.insert((n0, 0), qi(-2));
        expect_eq(got.clone(), want, &format!("n0 = {n0}"))?;
        if n0 == 5 {
            let v: Vec<String> = got.values().map(fmt_q).collect();
            shown = v.join(", ");
        }
    }
    let mut p = ConstraintParams::new(5, AmbientData::new(qi(-1), qi(0)));
    p.target_shift = 0;
    p.min_shift = -1;
    let rel = cx.engine.constraint_relation(&p, Mode::Behrend)?;
    if rel.lhs.get(&(5, 0)) != Some(&qi(1))
        || !rel
            .lhs
            .keys()
            .chain(rel.rhs.keys())
            .all(|&(n, s)| s == -1 || (n, s) == (5, 0))
    {
        return Err(Fail::Mismatch(format!(
            "D.beta0 = -1: target not isolated in {rel}"
        )));
    }
    Ok(format!(
        "n0 = 3..5 solved; n0 = 5 coefficients [{shown}]; D.beta0 = -1 isolates the target"
    ))
}

fn orbifold(cx: &mut Ctx) -> Check {
    let mut count = 0;
    for c in 1..=2 {
        for n in n_min(c)..=6 {
            let u = XClass::new(0, qi(0), qi(c), 0, qi(n));
            expect_eq(
                cx.engine.orbifold_pt(&u, Mode::Behrend)?,
                qi(0),
                &format!("orbifold PT at {u}"),
            )?;
            count += 1;
        }
    }
    expect_eq(
        cx.engine.orbifold_pt(&XClass::zero(), Mode::Behrend)?,
        qi(1),
        "orbifold PT at 0",
    )?;
    Ok(format!("{count} curve classes vanish, zero class gives 1"))
}

fn saturation(cx: &mut Ctx) -> Check {
    let comps = [
        Computation::PtLocal {
            mode: Mode::Behrend,
            c_max: 3,
            n_max: 6,
        },
        Computation::PtLocal {
            mode: Mode::Euler,
            c_max: 3,
            n_max: 6,
        },
        Computation::Constraint {
            params: ConstraintParams {
                n_floor: Some(5 - cx.w.n_pad),
                ..constraint_line_params(5)
            },
            mode: Mode::Behrend,
        },
    ];
    match saturation_diff(&comps, &cx.dt, &cx.w)? {
        None => Ok(format!(
            "c <= 3, n <= 6 unchanged over {} enlargements of {:?}",
            cx.w.saturation_steps,
            (cx.w.m_window, cx.w.r_window, cx.w.n_pad)
        )),
        Some((i, step)) => Err(Fail::Mismatch(format!(
            "{} changes when the windows grow by {step}",
            [
                "Behrend pair table",
                "Euler pair table",
                "constraint relation"
            ][i]
        ))),
    }
}

fn integrality(cx: &mut Ctx, errors: &[WallcrossError]) -> Check {
    let parity = |e: &&WallcrossError| {
        matches!(
            e,
            WallcrossError::ParityViolation(_)
                | WallcrossError::Lattice(LatticeError::ParityViolation(_))
        )
    };
    if let Some(e) = errors.iter().find(parity) {
        return Err(Fail::Mismatch(format!("integrality failure earlier: {e}")));
    }
    let mut n = 0;
    while n < 1000 {
        let a = random_part(&mut cx.rng);
        let b = random_part(&mut cx.rng);
        let r = cx.rng.gen_range(-3..=3);
        let d = cx.rng.gen_range(-4..=4);
        chi_ae_int(&a, r, d).map_err(|e| Fail::Error(e.into()))?;
        chi_ae_l_int(&a, r, d).map_err(|e| Fail::Error(e.into()))?;
        let _ = chi_ab(&a, &b);
        n += 1;
    }
    let (p, s, t) = cx.engine.checks().snapshot();
    if p == 0 || s == 0 {
        return Err(Fail::Mismatch(
            "no integrality checks were exercised".into(),
        ));
    }
    Ok(format!(
        "{p} pairings and {s} sign parities over {t} terms, plus 1000 random classes"
    ))
}

/// Runs every check with the given DT table and windows.
pub fn run_selftest(dt: &DtTable, w: &WindowConfig) -> Vec<CriterionReport> {
    let mut dt = dt.clone();
    dt.freeze();
    let engine = match Engine::new(dt.clone(), w.clone()) {
        Ok(e) => e,
        Err(e) => {
            return CRITERIA
                .iter()
                .enumerate()
                .map(|(i, name)| CriterionReport {
                    id: i + 1,
                    name,
                    passed: false,
                    detail: e.to_string(),
                })
                .collect()
        }
    };
    let mut cx = Ctx {
        engine,
        dt,
        w: w.clone(),
        rng: StdRng::seed_from_u64(20240611),
    };
    let checks: [fn(&mut Ctx) -> Check; 11] = [
        line_class,
        recursion_coefficients,
        trees,
        u_oracle,
        rank_zero,
        series,
        symmetries,
        euler_line,
        constraint,
        orbifold,
        saturation,
    ];
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    let mut record = |id: usize, res: Check, errors: &mut Vec<WallcrossError>| {
        let (passed, detail) = match res {
            Ok(d) => (true, d),
            Err(Fail::Mismatch(m)) => (false, m),
            Err(Fail::Error(e)) => {
                let d = format!("error: {e}");
                errors.push(e);
                (false, d)
            }
        };
        reports.push(CriterionReport {
            id,
            name: CRITERIA[id - 1],
            passed,
            detail,
        });
    };
    for (i, f) in checks.iter().enumerate() {
        let res = f(&mut cx);
        record(i + 1, res, &mut errors);
    }
    let res = integrality(&mut cx, &errors);
    record(12, res, &mut errors);
    reports
}
