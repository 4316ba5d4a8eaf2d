//! Dictionary between simplicial cones and diagonal cyclic quotients.
//!
//! A type `1/l(c_1,...,c_n)` is the quotient of affine `n`-space by the
//! cyclic group of order `l` whose generator scales `x_i` by `zeta^{c_i}`.
//! For a full simplicial cone `<v_1,...,v_n>` the group is `Z^n / N` with
//! `N` the span of the generators, and a generator of the group written as
//! `sum (c_i / l) v_i` gives the character `c_i` on the coordinate of the
//! divisor of `v_i`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::lattice::{
    hermite_normal_form, primitive, rational_coordinates, smith_normal_form, IntegerMatrix,
    IntegerVector,
};

/// Residue characteristic of the base field: zero or a prime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Characteristic(u64);

impl Characteristic {
    pub const ZERO: Characteristic = Characteristic(0);

    pub fn new(p: u64) -> Result<Self> {
        if p == 0 || is_prime(p) {
            Ok(Characteristic(p))
        } else {
            Err(Error::Domain(format!("characteristic {p} is neither 0 nor prime")))
        }
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// A group of this order acts tamely iff the characteristic does not
    /// divide it.
    pub fn is_tame_order(self, order: u64) -> bool {
        self.0 == 0 || order % self.0 != 0
    }
}

impl TryFrom<u64> for Characteristic {
    type Error = Error;
    fn try_from(p: u64) -> Result<Self> {
        Characteristic::new(p)
    }
}

impl From<Characteristic> for u64 {
    fn from(p: Characteristic) -> u64 {
        p.0
    }
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Inverse of a unit modulo `l`.
pub(crate) fn inverse_mod(a: u64, l: u64) -> Option<u64> {
    if l == 1 {
        return Some(0);
    }
    let e = (a as i128).extended_gcd(&(l as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(l as i128) as u64)
}

/// A diagonal cyclic quotient type `1/l(c_1,...,c_n)`.
///
/// Characters are kept in the coordinate order they were given in, reduced
/// into `[0, l)`; [`CyclicQuotientType::canonical`] gives the normal form
/// up to unit rescaling and permutation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicQuotientType {
    order: u64,
    characters: Vec<u64>,
}

impl CyclicQuotientType {
    pub fn new(order: u64, characters: &[u64]) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("group order must be positive".into()));
        }
        if characters.is_empty() {
            return Err(Error::Domain("a quotient type needs at least one coordinate".into()));
        }
        let characters: Vec<u64> = characters.iter().map(|c| c % order).collect();
        let g = characters.iter().fold(order, |g, &c| gcd(g, c));
        if g != 1 {
            return Err(Error::Domain(format!(
                "characters {characters:?} do not generate a faithful action of order {order}"
            )));
        }
        Ok(CyclicQuotientType { order, characters })
    }

    pub fn trivial(rank: usize) -> Self {
        CyclicQuotientType {
            order: 1,
            characters: vec![0; rank],
        }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn characters(&self) -> &[u64] {
        &self.characters
    }

    pub fn rank(&self) -> usize {
        self.characters.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    /// Multiplies every character by the unit `u` mod `l`.
    pub fn rescale(&self, u: u64) -> Self {
        CyclicQuotientType {
            order: self.order,
            characters: self
                .characters
                .iter()
                .map(|&c| (c * u) % self.order)
                .collect(),
        }
    }

    /// Rescales so that coordinate `i` (0-based) carries character 1.
    pub fn normalized_at(&self, i: usize) -> Option<Self> {
        let inv = inverse_mod(self.characters[i], self.order)?;
        Some(self.rescale(inv))
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        CyclicQuotientType {
            order: self.order,
            characters: perm.iter().map(|&i| self.characters[i]).collect(),
        }
    }

    /// Lexicographically least tuple over all unit rescalings and
    /// permutations.
    pub fn canonical(&self) -> Self {
        let l = self.order;
        let best = (1..=l.max(1))
            .filter(|&u| gcd(u, l) == 1)
            .map(|u| {
                let mut t: Vec<u64> = self.characters.iter().map(|&c| (c * u) % l).collect();
                t.sort_unstable();
                t
            })
            .min()
            .expect("1 is always a unit");
        CyclicQuotientType {
            order: l,
            characters: best,
        }
    }

    pub fn is_canonical(&self) -> bool {
        *self == self.canonical()
    }

    pub fn has_unit_character(&self) -> bool {
        self.characters.iter().any(|&c| gcd(c, self.order) == 1)
    }

    /// 0-based index of the last coordinate with a unit character.
    pub fn last_unit(&self) -> Option<usize> {
        self.characters
            .iter()
            .rposition(|&c| gcd(c, self.order) == 1)
    }
}

impl fmt::Display for CyclicQuotientType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1/{}(", self.order)?;
        for (i, c) in self.characters.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for CyclicQuotientType {
    type Err = Error;

    /// Parses `1/l(c_1,...,c_n)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            line: 1,
            column: 1,
            message: format!("expected a quotient type like 1/5(2,1), got {s:?}"),
        };
        let s = s.trim();
        let rest = s.strip_prefix("1/").ok_or_else(bad)?;
        let open = rest.find('(').ok_or_else(bad)?;
        let close = rest.strip_suffix(')').ok_or_else(bad)?;
        let order: u64 = rest[..open].trim().parse().map_err(|_| bad())?;
        let inner = &close[open + 1..];
        let chars = inner
            .split(',')
            .map(|c| c.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        CyclicQuotientType::new(order, &chars)
    }
}

/// Group structure of `Z^n / N` for a full cone and, when cyclic, its type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientDescriptor {
    pub group_invariants: Vec<BigInt>,
    pub cyclic: bool,
    pub cqs: Option<CyclicQuotientType>,
}

impl fmt::Display for QuotientDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.cqs {
            Some(q) if q.is_trivial() => write!(f, "trivial group"),
            Some(q) => write!(f, "cyclic {q}"),
            None => {
                write!(f, "non-cyclic ")?;
                for (i, d) in self.group_invariants.iter().enumerate() {
                    if i > 0 {
                        write!(f, " x ")?;
                    }
                    write!(f, "Z/{d}")?;
                }
                Ok(())
            }
        }
    }
}

/// Characters attached to the generators of a cone, in the cone's
/// (canonical) generator order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeAction {
    pub quotient: CyclicQuotientType,
}

impl ConeAction {
    pub fn order(&self) -> u64 {
        self.quotient.order()
    }

    pub fn characters(&self) -> &[u64] {
        self.quotient.characters()
    }
}

fn to_order(m: &BigInt) -> Result<u64> {
    m.to_u64()
        .ok_or_else(|| Error::Unsupported(format!("group order {m} exceeds the supported range")))
}

fn invariant_chain(cone: &Cone) -> Result<(Vec<BigInt>, crate::lattice::SmithDecomposition)> {
    if !cone.is_full() {
        return Err(Error::Domain(format!("cone {cone} is not full-dimensional")));
    }
    let snf = smith_normal_form(&cone.generator_matrix());
    Ok((snf.torsion_chain(), snf))
}

/// The group `Z^n / N` of a full cone together with the characters of a
/// distinguished generator on each generator's divisor, ordered as the
/// cone's generators. The generator comes from the Smith transform and is
/// renormalized so that the last unit character equals 1 (or, with no unit
/// character, so the tuple is least).
pub fn cone_action(cone: &Cone) -> Result<ConeAction> {
    let (chain, snf) = invariant_chain(cone)?;
    let n = cone.rank();
    if chain.is_empty() {
        return Ok(ConeAction {
            quotient: CyclicQuotientType::trivial(n),
        });
    }
    if chain.len() > 1 {
        let shown: Vec<String> = chain.iter().map(ToString::to_string).collect();
        return Err(Error::Unsupported(format!(
            "cone {cone} has non-cyclic quotient Z/{}",
            shown.join(" x Z/")
        )));
    }
    let l = to_order(&chain[0])?;
    let lb = BigInt::from(l);
    let y = rational_coordinates(&snf.right, &IntegerVector::unit(n, n - 1))?;
    let y = IntegerVector::new(
        y.into_iter()
            .map(|r| {
                debug_assert!(r.is_integer());
                r.to_integer()
            })
            .collect(),
    );
    let x = cone.coordinates(&y)?;
    let chars: Vec<u64> = x
        .iter()
        .map(|xi| {
            let scaled = xi * num_rational::BigRational::from_integer(lb.clone());
            debug_assert!(scaled.is_integer());
            to_order(&scaled.to_integer().mod_floor(&lb)).expect("residue below order")
        })
        .collect();
    let q = CyclicQuotientType::new(l, &chars)?;
    let q = match q.last_unit() {
        Some(i) => q.normalized_at(i).expect("unit"),
        None => (1..l)
            .filter(|&u| gcd(u, l) == 1)
            .map(|u| q.rescale(u))
            .min()
            .expect("1 is a unit"),
    };
    Ok(ConeAction { quotient: q })
}

/// Classifies the quotient singularity of a full cone.
pub fn cone_to_quotient(cone: &Cone) -> Result<QuotientDescriptor> {
    let (chain, _) = invariant_chain(cone)?;
    if chain.len() > 1 {
        return Ok(QuotientDescriptor {
            group_invariants: chain,
            cyclic: false,
            cqs: None,
        });
    }
    let action = cone_action(cone)?;
    Ok(QuotientDescriptor {
        group_invariants: chain,
        cyclic: true,
        cqs: Some(action.quotient.canonical()),
    })
}

/// The chart of a quotient type: one lattice vector per coordinate of the
/// type (possibly non-primitive when the action has pseudoreflections),
/// spanning the cone whose toric variety is the quotient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientChart {
    pub quotient: CyclicQuotientType,
    pub coordinate_vectors: Vec<IntegerVector>,
    pub cone: Cone,
}

/// Builds `<e_1,...,e_{n-1}, l e_n - sum c_i e_i>` after moving the last
/// unit character to the final slot and rescaling it to 1. Types with no
/// unit character fall back to the orthant in the overlattice
/// `Z^n + Z (c / l)`, written in a Hermite basis.
pub fn quotient_chart(q: &CyclicQuotientType) -> Result<QuotientChart> {
    let n = q.rank();
    let l = q.order();
    let vectors = match q.last_unit() {
        Some(j) => {
            let normalized = q.normalized_at(j).expect("unit");
            let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            let mut vectors = vec![IntegerVector::zero(n); n];
            let mut last = IntegerVector::unit(n, n - 1).scale(&BigInt::from(l));
            for (pos, &i) in others.iter().enumerate() {
                vectors[i] = IntegerVector::unit(n, pos);
                let c = BigInt::from(normalized.characters()[i]);
                last = &last - &IntegerVector::unit(n, pos).scale(&c);
            }
            vectors[j] = last;
            vectors
        }
        None => {
            let lb = BigInt::from(l);
            let mut rows: Vec<IntegerVector> =
                (0..n).map(|i| IntegerVector::unit(n, i).scale(&lb)).collect();
            rows.push(IntegerVector::new(
                q.characters().iter().map(|&c| BigInt::from(c)).collect(),
            ));
            let basis = hermite_normal_form(&IntegerMatrix::from_rows(rows, n)?);
            (0..n)
                .map(|i| {
                    let x = rational_coordinates(&basis, &IntegerVector::unit(n, i).scale(&lb))?;
                    Ok(IntegerVector::new(x.into_iter().map(|r| r.to_integer()).collect()))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let cone = Cone::new(
        n,
        vectors
            .iter()
            .map(primitive)
            .collect::<Result<Vec<_>>>()?,
    )?;
    Ok(QuotientChart {
        quotient: q.clone(),
        coordinate_vectors: vectors,
        cone,
    })
}

/// The cone of a quotient type with a unit character.
pub fn quotient_to_cone(q: &CyclicQuotientType) -> Result<Cone> {
    if !q.has_unit_character() {
        return Err(Error::NotRepresentable(format!(
            "{q} has no unit character, so no coordinate divisor carries a faithful action"
        )));
    }
    Ok(quotient_chart(q)?.cone)
}

pub fn is_tame(q: &CyclicQuotientType, p: Characteristic) -> bool {
    p.is_tame_order(q.order())
}

/// Elements `k` in `1..l` scaling exactly one coordinate nontrivially.
pub fn pseudoreflections(q: &CyclicQuotientType) -> Vec<u64> {
    let l = q.order();
    (1..l)
        .filter(|&k| q.characters().iter().filter(|&&c| (k * c) % l != 0).count() == 1)
        .collect()
}

/// Quotients out the subgroup generated by pseudoreflections, returning the
/// residual action on the coordinates `x_i^{m_i}` of the (smooth) invariant
/// ring of that subgroup.
pub fn pseudoreflection_reduce(q: &CyclicQuotientType) -> CyclicQuotientType {
    let mut q = q.clone();
    loop {
        let prs = pseudoreflections(&q);
        if prs.is_empty() {
            return q;
        }
        let l = q.order();
        // Subgroup generated by the pseudoreflections is <h>, of order l/h.
        let h = prs.iter().fold(l, |g, &k| gcd(g, k));
        let step = l / h;
        let characters: Vec<u64> = q
            .characters()
            .iter()
            .map(|&c| {
                let m = l / gcd(l, (h * c) % l);
                debug_assert_eq!((c * m) % step, 0);
                ((c * m) / step) % h
            })
            .collect();
        q = CyclicQuotientType::new(h, &characters).expect("residual action is faithful");
    }
}

/// 1-based coordinates whose character is a unit mod the order.
pub fn faithful_rays(q: &CyclicQuotientType) -> BTreeSet<usize> {
    q.characters()
        .iter()
        .enumerate()
        .filter(|(_, &c)| gcd(c, q.order()) == 1)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Characters of the cone action read in the order of `rays`, which must
/// be a permutation of the cone's generators.
pub fn characters_along(action: &ConeAction, cone: &Cone, rays: &[IntegerVector]) -> Result<CyclicQuotientType> {
    let perm = rays
        .iter()
        .map(|r| {
            cone.generator_index(r)
                .ok_or_else(|| Error::Domain(format!("{r} is not a generator of {cone}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(action.quotient.permuted(&perm))
}

/// Helper used by reports: the type normalized so its last unit character
/// is 1, like the `1/l(a_1,...,a_{n-1},1)` shape.
pub fn last_unit_normalized(q: &CyclicQuotientType) -> CyclicQuotientType {
    match q.last_unit() {
        Some(i) => q.normalized_at(i).expect("unit"),
        None => q.clone(),
    }
}
