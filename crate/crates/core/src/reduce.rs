//! Elimination of skew-normal partial derivatives onto the independent
//! basis F = {κ : κ1 ≤ 1, and κ3 = 0 or (κ2 = 0, κ3 ≥ 1)}, and of Gaussian
//! derivatives onto pure location derivatives.
//!
//! The two rewrite rules used for the skew-normal kernel are
//!
//!   R1: f_θθ  = 2 f_v − ((m³+m)/v) f_m
//!   R2: f_vm  = −(1/v) f_m − ((m²+1)/(2vm)) f_mm
//!
//! Every coefficient they generate has a monomial denominator, so
//! coefficients are kept as Laurent polynomials in (m, v) over ℚ.

use crate::classify::Setting;
use crate::error::{Error, Result};
use crate::kernels;
use crate::mixing::{delta_quantities, ConvergentRep, Family, MixingMeasure, ParamVec};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

pub const MAX_REDUCE_ORDER: usize = 6;

pub type Multi = [u32; 3];

/// Exact rational function of (m, v) whose denominator is a monomial.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RationalCoef {
    // (exponent of m, exponent of v) → coefficient
    terms: BTreeMap<(i32, i32), BigRational>,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl RationalCoef {
    pub fn zero() -> Self {
        RationalCoef::default()
    }

    pub fn constant(n: i64, d: i64) -> Self {
        RationalCoef::monomial(rat(n, d), 0, 0)
    }

    pub fn one() -> Self {
        RationalCoef::constant(1, 1)
    }

    pub fn m() -> Self {
        RationalCoef::monomial(BigRational::one(), 1, 0)
    }

    pub fn v() -> Self {
        RationalCoef::monomial(BigRational::one(), 0, 1)
    }

    pub fn monomial(c: BigRational, em: i32, ev: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((em, ev), c);
        }
        RationalCoef { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(RationalCoef::one(), |acc, _| &acc * self)
    }

    /// Division by m^em v^ev.
    pub fn div_monomial(&self, em: i32, ev: i32) -> Self {
        RationalCoef { terms: self.terms.iter().map(|(&(a, b), c)| ((a - em, b - ev), c.clone())).collect() }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        if s.is_zero() {
            return RationalCoef::zero();
        }
        RationalCoef { terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect() }
    }

    pub fn d_m(&self) -> Self {
        let mut out = RationalCoef::zero();
        for (&(a, b), c) in &self.terms {
            if a != 0 {
                out.add_term((a - 1, b), c * BigRational::from_integer(BigInt::from(a)));
            }
        }
        out
    }

    pub fn d_v(&self) -> Self {
        let mut out = RationalCoef::zero();
        for (&(a, b), c) in &self.terms {
            if b != 0 {
                out.add_term((a, b - 1), c * BigRational::from_integer(BigInt::from(b)));
            }
        }
        out
    }

    fn add_term(&mut self, k: (i32, i32), c: BigRational) {
        let e = self.terms.entry(k).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn eval(&self, m: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b), c)| c.to_f64().unwrap_or(f64::NAN) * m.powi(a) * v.powi(b))
            .sum()
    }

    fn min_exponents(&self) -> (i32, i32) {
        let a = self.terms.keys().map(|k| k.0).min().unwrap_or(0).min(0);
        let b = self.terms.keys().map(|k| k.1).min().unwrap_or(0).min(0);
        (a, b)
    }

    fn coefficient_lcm(&self) -> BigInt {
        use num_integer::Integer;
        self.terms.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Polynomial numerator N with integer coefficients such that self = N / denominator().
    pub fn numerator(&self) -> RationalCoef {
        let (a, b) = self.min_exponents();
        let l = BigRational::from_integer(self.coefficient_lcm());
        self.div_monomial(a, b).scale(&l)
    }

    /// Monomial denominator L·m^a·v^b.
    pub fn denominator(&self) -> RationalCoef {
        let (a, b) = self.min_exponents();
        RationalCoef::monomial(BigRational::from_integer(self.coefficient_lcm()), -a, -b)
    }

    fn fmt_poly(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(a, b), c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mut parts = Vec::new();
            if !mag.is_one() || (a == 0 && b == 0) {
                parts.push(format!("{mag}"));
            }
            for (sym, e) in [("m", a), ("v", b)] {
                match e {
                    0 => {}
                    1 => parts.push(sym.to_string()),
                    _ => parts.push(format!("{sym}^{e}")),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Display for RationalCoef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = self.numerator();
        let den = self.denominator();
        let trivial_den = den.terms.get(&(0, 0)).map(|c| c.is_one()).unwrap_or(false);
        let multi = num.terms.len() > 1;
        if trivial_den {
            return num.fmt_poly(f);
        }
        if multi {
            write!(f, "(")?;
        }
        num.fmt_poly(f)?;
        if multi {
            write!(f, ")")?;
        }
        write!(f, "/(")?;
        den.fmt_poly(f)?;
        write!(f, ")")
    }
}

impl fmt::Debug for RationalCoef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Add for &RationalCoef {
    type Output = RationalCoef;
    fn add(self, o: &RationalCoef) -> RationalCoef {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(*k, c.clone());
        }
        out
    }
}

impl Sub for &RationalCoef {
    type Output = RationalCoef;
    fn sub(self, o: &RationalCoef) -> RationalCoef {
        self + &(-o)
    }
}

impl Neg for &RationalCoef {
    type Output = RationalCoef;
    fn neg(self) -> RationalCoef {
        RationalCoef { terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect() }
    }
}

impl Mul for &RationalCoef {
    type Output = RationalCoef;
    fn mul(self, o: &RationalCoef) -> RationalCoef {
        let mut out = RationalCoef::zero();
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &o.terms {
                out.add_term((a1 + a2, b1 + b2), c1 * c2);
            }
        }
        out
    }
}

macro_rules! owned_ops {
    ($tr:ident, $f:ident) => {
        impl $tr for RationalCoef {
            type Output = RationalCoef;
            fn $f(self, o: RationalCoef) -> RationalCoef {
                (&self).$f(&o)
            }
        }
        impl $tr<i64> for RationalCoef {
            type Output = RationalCoef;
            fn $f(self, o: i64) -> RationalCoef {
                (&self).$f(&RationalCoef::constant(o, 1))
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for RationalCoef {
    type Output = RationalCoef;
    fn neg(self) -> RationalCoef {
        -&self
    }
}

pub fn in_basis(k: Multi) -> bool {
    k[0] <= 1 && (k[2] == 0 || (k[1] == 0 && k[2] >= 1))
}

pub fn weighted_degree(k: Multi) -> u32 {
    k[0] + 2 * k[1] + 2 * k[2]
}

pub fn order(k: Multi) -> u32 {
    k.iter().sum()
}

pub type Combination = BTreeMap<Multi, RationalCoef>;

fn add_into(out: &mut Combination, k: Multi, c: RationalCoef) {
    if c.is_zero() {
        return;
    }
    let e = out.entry(k).or_default();
    *e = &*e + &c;
    if e.is_zero() {
        out.remove(&k);
    }
}

fn rule_r1() -> Combination {
    let (m, v) = (RationalCoef::m(), RationalCoef::v());
    let _ = v;
    let mut c = Combination::new();
    c.insert([0, 1, 0], RationalCoef::constant(2, 1));
    c.insert([0, 0, 1], -(m.pow(3) + m).div_monomial(0, 1));
    c
}

fn rule_r2() -> Combination {
    let m = RationalCoef::m();
    let mut c = Combination::new();
    c.insert([0, 0, 1], -RationalCoef::one().div_monomial(0, 1));
    c.insert([0, 0, 2], -(m.pow(2) + 1).div_monomial(1, 1).scale(&rat(1, 2)));
    c
}

fn binom(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

fn cache() -> &'static RwLock<HashMap<Multi, Arc<Combination>>> {
    static C: OnceLock<RwLock<HashMap<Multi, Arc<Combination>>>> = OnceLock::new();
    C.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Applies ∂^op to Σ c_κ(m,v) ∂^κ f and renormalizes.
fn apply_operator(op: Multi, expr: &Combination) -> Combination {
    let mut out = Combination::new();
    for (k, c) in expr {
        for g2 in 0..=op[1] {
            let mut dc_v = c.clone();
            for _ in 0..g2 {
                dc_v = dc_v.d_v();
            }
            for g3 in 0..=op[2] {
                let mut dc = dc_v.clone();
                for _ in 0..g3 {
                    dc = dc.d_m();
                }
                if dc.is_zero() {
                    continue;
                }
                let w = RationalCoef::constant(binom(op[1], g2) * binom(op[2], g3), 1);
                let dc = &w * &dc;
                let target = [k[0] + op[0], k[1] + op[1] - g2, k[2] + op[2] - g3];
                for (kb, cb) in reduce_raw(target).iter() {
                    add_into(&mut out, *kb, &dc * cb);
                }
            }
        }
    }
    out
}

fn reduce_raw(alpha: Multi) -> Arc<Combination> {
    if let Some(hit) = cache().read().expect("reduction cache poisoned").get(&alpha) {
        return hit.clone();
    }
    let result = if in_basis(alpha) {
        let mut c = Combination::new();
        c.insert(alpha, RationalCoef::one());
        c
    } else if alpha[0] >= 2 {
        apply_operator([alpha[0] - 2, alpha[1], alpha[2]], &rule_r1())
    } else {
        apply_operator([alpha[0], alpha[1] - 1, alpha[2] - 1], &rule_r2())
    };
    let result = Arc::new(result);
    cache().write().expect("reduction cache poisoned").insert(alpha, result.clone());
    result
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDerivative {
    pub family: Family,
    pub source: Multi,
    pub terms: Combination,
}

impl ReducedDerivative {
    /// Σ c_κ(m, v) ∂^κ f(x|η) evaluated with the kernel module.
    pub fn evaluate(&self, eta: &ParamVec, x: f64) -> Result<f64> {
        let c = eta.coords();
        let (v, m) = (c[1], if self.family == Family::SkewNormal { c[2] } else { 0.0 });
        let d = eta.family().dim();
        let mut total = 0.0;
        for (k, coef) in &self.terms {
            let alpha: Vec<usize> = k[..d].iter().map(|&a| a as usize).collect();
            total += coef.eval(m, v) * kernels::partial(eta, x, &alpha)?;
        }
        Ok(total)
    }
}

pub fn reduce_skew(alpha: Multi) -> Result<ReducedDerivative> {
    let o = order(alpha) as usize;
    if o > MAX_REDUCE_ORDER {
        return Err(Error::OrderTooHigh(o, MAX_REDUCE_ORDER));
    }
    Ok(ReducedDerivative { family: Family::SkewNormal, source: alpha, terms: (*reduce_raw(alpha)).clone() })
}

/// Normal form of an arbitrary combination Σ c ∂^κ f.
pub fn normalize(expr: &[(RationalCoef, Multi)]) -> Combination {
    let mut out = Combination::new();
    for (c, k) in expr {
        for (kb, cb) in reduce_raw(*k).iter() {
            add_into(&mut out, *kb, c * cb);
        }
    }
    out
}

/// ∂^{α1+α2}/∂θ^{α1}∂v^{α2} = 2^{−α2} ∂^{α1+2α2}/∂θ^{α1+2α2}.
pub fn reduce_gaussian(alpha: [u32; 2]) -> ReducedDerivative {
    let mut terms = Combination::new();
    terms.insert([alpha[0] + 2 * alpha[1], 0, 0], RationalCoef::constant(1, 1i64 << alpha[1]));
    ReducedDerivative { family: Family::Gaussian, source: [alpha[0], alpha[1], 0], terms }
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

fn multi_indices(max_order: u32) -> Vec<Multi> {
    let mut out = Vec::new();
    for o in 0..=max_order {
        for a in (0..=o).rev() {
            for b in (0..=o - a).rev() {
                out.push([a, b, o - a - b]);
            }
        }
    }
    out
}

/// Skew-normal basis indices of order ≤ r, sorted by (order, lexicographic descending).
pub fn basis_indices(r: u32) -> Vec<Multi> {
    multi_indices(r).into_iter().filter(|k| in_basis(*k)).collect()
}

/// Human-readable table of the normal forms of every order-`order` derivative.
pub fn reduction_table(order_: u32) -> Result<Vec<(Multi, ReducedDerivative)>> {
    multi_indices(order_)
        .into_iter()
        .filter(|k| order(*k) == order_)
        .map(|k| reduce_skew(k).map(|r| (k, r)))
        .collect()
}

pub fn format_combination(c: &Combination) -> String {
    if c.is_empty() {
        return "0".into();
    }
    c.iter()
        .rev()
        .map(|(k, coef)| format!("[{coef}] d{}", fmt_multi(*k)))
        .collect::<Vec<_>>()
        .join(" + ")
}

pub fn fmt_multi(k: Multi) -> String {
    format!("({},{},{})", k[0], k[1], k[2])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableRow {
    pub alpha: Multi,
    pub terms: Vec<(Multi, String)>,
}

pub fn table_rows(order_: u32) -> Result<Vec<TableRow>> {
    Ok(reduction_table(order_)?
        .into_iter()
        .map(|(a, r)| TableRow { alpha: a, terms: r.terms.iter().rev().map(|(k, c)| (*k, c.to_string())).collect() })
        .collect())
}

/// One term c·(Δη)^α of a minimal-form coefficient, summed over the members
/// of a group with their masses.
#[derive(Clone, Debug)]
pub struct XiTerm {
    pub alpha: Multi,
    pub symbolic: RationalCoef,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct XiEntry {
    pub atom: usize,
    pub kappa: Multi,
    pub terms: Vec<XiTerm>,
}

/// r-minimal form of p_G − p_{G0} for a skew-normal G0 in S0.
#[derive(Clone, Debug)]
pub struct MinimalForm {
    pub r: u32,
    pub setting: Setting,
    pub base: MixingMeasure,
    pub entries: Vec<XiEntry>,
}

impl MinimalForm {
    /// ξ_l evaluated on a grouped sequence aligned with the base measure.
    pub fn evaluate(&self, rep: &ConvergentRep) -> Result<Vec<f64>> {
        if rep.base() != &self.base || rep.extra_count() != 0 {
            return Err(Error::BadParams("representation must group exactly around the base atoms".into()));
        }
        if self.setting == Setting::Exact && rep.groups().iter().any(|g| g.len() != 1) {
            return Err(Error::BadParams("exact-fitted forms take one atom per group".into()));
        }
        let deltas = delta_quantities(rep);
        Ok(self
            .entries
            .iter()
            .map(|e| {
                let mut s = 0.0;
                for (j, (p, _)) in rep.groups()[e.atom].iter().enumerate() {
                    let d = &deltas.eta[e.atom][j];
                    for t in &e.terms {
                        if order(t.alpha) == 0 {
                            continue;
                        }
                        s += p * t.value * d[0].powi(t.alpha[0] as i32) * d[1].powi(t.alpha[1] as i32) * d[2].powi(t.alpha[2] as i32);
                    }
                }
                if e.kappa == [0, 0, 0] {
                    s += deltas.p[e.atom];
                }
                s
            })
            .collect())
    }

    /// H_l(x) = ∂^κ f(x | η_i^0).
    pub fn basis_value(&self, l: usize, x: f64) -> f64 {
        let e = &self.entries[l];
        let k = e.kappa;
        kernels::partial(self.base.atom(e.atom), x, &[k[0] as usize, k[1] as usize, k[2] as usize])
            .expect("basis order within kernel limits")
    }

    pub fn entry(&self, atom: usize, kappa: Multi) -> Option<&XiEntry> {
        self.entries.iter().find(|e| e.atom == atom && e.kappa == kappa)
    }
}

pub fn build_minimal_form(g0: &MixingMeasure, r: u32, setting: Setting) -> Result<MinimalForm> {
    if g0.family() != Family::SkewNormal {
        return Err(Error::BadParams("minimal forms are built for the skew-normal family".into()));
    }
    if r as usize > MAX_REDUCE_ORDER {
        return Err(Error::OrderTooHigh(r as usize, MAX_REDUCE_ORDER));
    }
    if !crate::classify::is_s0(g0) {
        return Err(Error::NotS0("basis independence is only guaranteed in S0".into()));
    }
    let alphas: Vec<Multi> = multi_indices(r).into_iter().filter(|a| order(*a) >= 1).collect();
    let mut entries = Vec::new();
    for (i, atom) in g0.atoms().iter().enumerate() {
        let (v0, m0) = (atom.get(1), atom.get(2));
        let mut per_kappa: BTreeMap<Multi, Vec<XiTerm>> = BTreeMap::new();
        for k in basis_indices(r) {
            per_kappa.insert(k, Vec::new());
        }
        for a in &alphas {
            let fact = factorial(a[0]) * factorial(a[1]) * factorial(a[2]);
            for (k, c) in reduce_raw(*a).iter() {
                let sym = c.scale(&rat(1, fact));
                let value = sym.eval(m0, v0);
                per_kappa.entry(*k).or_default().push(XiTerm { alpha: *a, symbolic: sym, value });
            }
        }
        for (k, terms) in per_kappa {
            entries.push(XiEntry { atom: i, kappa: k, terms });
        }
    }
    Ok(MinimalForm { r, setting, base: g0.clone(), entries })
}
