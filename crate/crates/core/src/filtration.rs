//! Weighted monomial filtrations, invariant monomials and their dual-cone
//! counterparts, the automorphism-invariance test for weighted algebras, and
//! the combinatorial Cartification cover.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use rand::Rng;

use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::lattice::{adjugate, determinant, IntegerMatrix, IntegerVector};
use crate::quotient::{gcd, is_prime, CyclicQuotientType, QuotientChart};

/// Default truncation degree for power-series statements.
pub const DEFAULT_TRUNCATION: u32 = 12;

/// An exponent vector `x_1^{a_1} ... x_n^{a_n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn weighted_degree(&self, weights: &[u64]) -> u64 {
        self.0.iter().zip(weights).map(|(&e, &w)| e as u64 * w).sum()
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

const VARS: [&str; 4] = ["x", "y", "z", "w"];

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let named = self.0.len() <= VARS.len();
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if named {
                write!(f, "{}", VARS[i])?;
            } else {
                write!(f, "x{}", i + 1)?;
            }
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// All exponent vectors with `1 <= degree <= bound`, in order of increasing
/// degree.
fn monomials_up_to(n: usize, bound: u32) -> Vec<Monomial> {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(Monomial(cur.clone()));
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
    }
    let mut out = Vec::new();
    for d in 1..=bound {
        rec(0, d, &mut vec![0; n], &mut out);
    }
    out
}

/// Divisibility-minimal elements of a set of monomials.
pub fn minimal_elements<'a>(ms: impl IntoIterator<Item = &'a Monomial>) -> BTreeSet<Monomial> {
    let mut sorted: Vec<&Monomial> = ms.into_iter().collect();
    sorted.sort_by_key(|m| (m.degree(), (*m).clone()));
    let mut kept: Vec<&Monomial> = Vec::new();
    for m in sorted {
        if !kept.iter().any(|k| k.divides(m)) {
            kept.push(m);
        }
    }
    kept.into_iter().cloned().collect()
}

/// The filtration `I_k = (x^a : sum w_i a_i >= k)` attached to characters
/// normalized so that the divisor coordinate has weight 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedFiltration {
    order: u64,
    weights: Vec<u64>,
    divisor: usize,
}

impl WeightedFiltration {
    /// `divisor` is a 0-based coordinate index and must carry weight 1.
    pub fn new(order: u64, weights: &[u64], divisor: usize) -> Result<Self> {
        if divisor >= weights.len() {
            return Err(Error::Domain(format!("divisor coordinate {divisor} out of range")));
        }
        if weights[divisor] != 1 {
            return Err(Error::Precondition(format!(
                "divisor coordinate {divisor} has weight {} instead of 1",
                weights[divisor]
            )));
        }
        if order == 0 {
            return Err(Error::Domain("order must be positive".into()));
        }
        Ok(WeightedFiltration {
            order,
            weights: weights.to_vec(),
            divisor,
        })
    }

    /// The filtration of `q` made faithful across coordinate `divisor`:
    /// characters are rescaled so that coordinate carries character 1.
    pub fn from_quotient(q: &CyclicQuotientType, divisor: usize) -> Result<Self> {
        let normalized = q.normalized_at(divisor).ok_or_else(|| {
            Error::NoFaithfulDivisor(format!(
                "coordinate {} of {q} does not carry a unit character",
                divisor + 1
            ))
        })?;
        let weights: Vec<u64> = if q.order() == 1 {
            // trivial group: only the divisor coordinate is weighted
            let mut w = vec![0; q.rank()];
            w[divisor] = 1;
            w
        } else {
            normalized.characters().to_vec()
        };
        Self::new(q.order(), &weights, divisor)
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn divisor(&self) -> usize {
        self.divisor
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn contains(&self, m: &Monomial, k: u64) -> bool {
        m.weighted_degree(&self.weights) >= k
    }

    /// Minimal monomial generators of `I_k`.
    pub fn ideal_generators(&self, k: u64) -> BTreeSet<Monomial> {
        let n = self.rank();
        let caps: Vec<u32> = self
            .weights
            .iter()
            .map(|&w| if w == 0 { 0 } else { k.div_ceil(w) as u32 })
            .collect();
        let mut out = BTreeSet::new();
        let mut cur = vec![0u32; n];
        loop {
            let m = Monomial(cur.clone());
            let deg = m.weighted_degree(&self.weights);
            let minimal = deg >= k
                && (0..n).all(|i| cur[i] == 0 || deg - self.weights[i] < k);
            if minimal {
                out.insert(m);
            }
            // odometer over the box
            let mut i = 0;
            loop {
                if i == n {
                    return out;
                }
                if cur[i] < caps[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }
}

pub fn ideal_generators(w: &WeightedFiltration, k: u64) -> BTreeSet<Monomial> {
    w.ideal_generators(k)
}

/// Minimal nonconstant monomials of degree at most `bound` fixed by the
/// group, found by direct enumeration of the congruence `sum c_i a_i = 0`.
pub fn invariant_generators(q: &CyclicQuotientType, bound: u32) -> BTreeSet<Monomial> {
    let l = q.order();
    let invariant: Vec<Monomial> = monomials_up_to(q.rank(), bound)
        .into_iter()
        .filter(|m| m.weighted_degree(q.characters()) % l == 0)
        .collect();
    minimal_elements(&invariant)
}

/// Lattice points of a dual cone expressed in chart coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualConePoints {
    /// Every point with coordinate sum at most the bound, origin included.
    pub points: BTreeSet<Monomial>,
    /// The divisibility-minimal nonzero points.
    pub minimal: BTreeSet<Monomial>,
}

/// Lattice points `m` of the dual cone of `<rows>`, reported through the
/// exponents `a_i = <m, rows_i>`. A candidate exponent vector is accepted
/// when `rows^{-1} a` is integral.
fn dual_points(rows: &[IntegerVector], bound: u32) -> Result<DualConePoints> {
    let n = rows.len();
    let g = IntegerMatrix::from_rows(rows.to_vec(), n)?;
    if !g.is_square() {
        return Err(Error::Domain("dual cone points need a full cone".into()));
    }
    let det = determinant(&g)?;
    if det.is_zero() {
        return Err(Error::Domain("generators are dependent".into()));
    }
    let adj = adjugate(&g)?;
    let mut points = BTreeSet::from([Monomial::one(n)]);
    for m in monomials_up_to(n, bound) {
        let a = IntegerVector::new(m.0.iter().map(|&e| BigInt::from(e)).collect());
        let integral = adj.rows().iter().all(|r| (r.dot(&a) % &det).is_zero());
        if integral {
            points.insert(m);
        }
    }
    let minimal = minimal_elements(points.iter().filter(|m| m.degree() > 0));
    Ok(DualConePoints { points, minimal })
}

/// Dual-cone lattice points of a full cone in the coordinates of its
/// (sorted) generators.
pub fn dual_cone_points(c: &Cone, bound: u32) -> Result<DualConePoints> {
    if !c.is_full() {
        return Err(Error::Domain(format!("cone {c} is not full-dimensional")));
    }
    dual_points(c.generators(), bound)
}

/// Dual-cone lattice points in the coordinates of the quotient type the
/// chart was built from.
pub fn chart_dual_points(chart: &QuotientChart, bound: u32) -> Result<DualConePoints> {
    dual_points(&chart.coordinate_vectors, bound)
}

/// Smallest prime `q` with `q = 1 mod l`; its multiplicative group holds
/// the `l`-th roots of unity.
pub fn coefficient_field(l: u64) -> u64 {
    (1..)
        .map(|t| t * l.max(1) + 1)
        .find(|&q| is_prime(q))
        .expect("Dirichlet")
}

/// A polynomial over `F_q`, keyed by monomial.
pub type Polynomial = BTreeMap<Monomial, u64>;

fn poly_mul(a: &Polynomial, b: &Polynomial, field: u64, bound: u32) -> Polynomial {
    let mut out = Polynomial::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let m = ma.mul(mb);
            if m.degree() > bound {
                continue;
            }
            let c = out.entry(m).or_insert(0);
            *c = (*c + ca * cb) % field;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// A substitution `x_i -> phi_i(x)` over `F_q`, considered modulo monomials
/// of degree above `truncation`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedAutomorphism {
    field: u64,
    truncation: u32,
    images: Vec<Polynomial>,
}

impl TruncatedAutomorphism {
    /// Accepts images with no constant term and an invertible linear part.
    pub fn new(field: u64, truncation: u32, images: Vec<Polynomial>) -> Result<Self> {
        if !is_prime(field) {
            return Err(Error::Domain(format!("{field} is not prime")));
        }
        let n = images.len();
        let mut linear = vec![vec![BigInt::zero(); n]; n];
        let mut clean = Vec::with_capacity(n);
        for (i, img) in images.into_iter().enumerate() {
            let mut p = Polynomial::new();
            for (m, c) in img {
                if m.0.len() != n {
                    return Err(Error::Dimension(format!("monomial {m} has wrong length")));
                }
                let c = c % field;
                if c == 0 || m.degree() > truncation {
                    continue;
                }
                if m.degree() == 0 {
                    return Err(Error::Precondition(format!(
                        "image of coordinate {} has a constant term",
                        i + 1
                    )));
                }
                if m.degree() == 1 {
                    let j = m.0.iter().position(|&e| e == 1).expect("linear");
                    linear[i][j] = BigInt::from(c);
                }
                p.insert(m, c);
            }
            clean.push(p);
        }
        let lin = IntegerMatrix::from_rows(linear.into_iter().map(IntegerVector::new).collect(), n)?;
        let det = determinant(&lin)?.mod_floor(&BigInt::from(field));
        if det.is_zero() {
            return Err(Error::Precondition("linear part is not invertible".into()));
        }
        Ok(TruncatedAutomorphism {
            field,
            truncation,
            images: clean,
        })
    }

    pub fn identity(n: usize, field: u64, truncation: u32) -> Self {
        let images = (0..n)
            .map(|i| Polynomial::from([(Monomial::var(n, i), 1)]))
            .collect();
        Self::new(field, truncation, images).expect("identity is an automorphism")
    }

    /// `x_i -> u_i x_i + sum corrections_i`.
    pub fn diagonal_plus(
        field: u64,
        truncation: u32,
        units: &[u64],
        corrections: &[Vec<(u64, Monomial)>],
    ) -> Result<Self> {
        let n = units.len();
        let images = (0..n)
            .map(|i| {
                let mut p = Polynomial::from([(Monomial::var(n, i), units[i] % field)]);
                for (c, m) in corrections.get(i).into_iter().flatten() {
                    let e = p.entry(m.clone()).or_insert(0);
                    *e = (*e + c) % field;
                }
                p
            })
            .collect();
        Self::new(field, truncation, images)
    }

    pub fn field(&self) -> u64 {
        self.field
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn images(&self) -> &[Polynomial] {
        &self.images
    }

    /// Whether the image of `x_d` is `x_d` times a unit, up to truncation.
    pub fn fixes_divisor(&self, d: usize) -> bool {
        let n = self.images.len();
        let xd = Monomial::var(n, d);
        let img = &self.images[d];
        img.get(&xd).is_some_and(|&c| c != 0) && img.keys().all(|m| m.0[d] >= 1)
    }

    /// `phi(m)` truncated.
    pub fn apply(&self, m: &Monomial) -> Polynomial {
        let n = self.images.len();
        let mut out = Polynomial::from([(Monomial::one(n), 1)]);
        for (i, &e) in m.0.iter().enumerate() {
            for _ in 0..e {
                out = poly_mul(&out, &self.images[i], self.field, self.truncation);
                if out.is_empty() {
                    return out;
                }
            }
        }
        out
    }

    /// Random automorphism commuting with the group action of `w`: every
    /// correction term of `phi(x_i)` carries the character of `x_i`, and the
    /// divisor coordinate is sent to itself times a unit.
    pub fn sample_equivariant<R: Rng>(w: &WeightedFiltration, truncation: u32, rng: &mut R) -> Self {
        let n = w.rank();
        let l = w.order();
        let field = coefficient_field(l);
        let pool = monomials_up_to(n, truncation);
        let d = w.divisor();
        let units: Vec<u64> = (0..n).map(|_| rng.gen_range(1..field)).collect();
        let corrections: Vec<Vec<(u64, Monomial)>> = (0..n)
            .map(|i| {
                let target = w.weights()[i] % l;
                let candidates: Vec<&Monomial> = pool
                    .iter()
                    .filter(|m| m.degree() >= 2)
                    .filter(|m| m.weighted_degree(w.weights()) % l == target)
                    .filter(|m| i != d || m.0[d] >= 1)
                    .collect();
                if candidates.is_empty() {
                    return Vec::new();
                }
                let terms = rng.gen_range(0..=3);
                (0..terms)
                    .map(|_| {
                        let m = candidates[rng.gen_range(0..candidates.len())].clone();
                        (rng.gen_range(1..field), m)
                    })
                    .collect()
            })
            .collect();
        Self::diagonal_plus(field, truncation, &units, &corrections)
            .expect("diagonal linear part with unit entries")
    }
}

/// Checks that `phi` maps every generator of `I_k`, `k <= k_max`, back into
/// `I_k` modulo the truncation.
pub fn glue_check(w: &WeightedFiltration, phi: &TruncatedAutomorphism, k_max: u64) -> Result<bool> {
    if phi.images().len() != w.rank() {
        return Err(Error::Dimension("automorphism and filtration ranks differ".into()));
    }
    if !phi.fixes_divisor(w.divisor()) {
        return Err(Error::Precondition(format!(
            "automorphism does not fix the divisor ideal (x_{})",
            w.divisor() + 1
        )));
    }
    for k in 0..=k_max {
        for g in w.ideal_generators(k) {
            if g.degree() > phi.truncation() {
                continue;
            }
            if phi.apply(&g).keys().any(|m| !w.contains(m, k)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Kernel of the character of coordinate `ray` (1-based), i.e. the cover on
/// which that coordinate divisor becomes Cartier. Coordinates keep their
/// order; the kernel generator `g^{l/g'}` acts on `x_j` by `c_j mod g'`
/// where `g' = gcd(l, c_ray)`.
pub fn cartify(q: &CyclicQuotientType, ray: usize) -> Result<CyclicQuotientType> {
    if ray == 0 || ray > q.rank() {
        return Err(Error::Domain(format!("ray {ray} out of range for {q}")));
    }
    let l = q.order();
    let kernel = gcd(l, q.characters()[ray - 1]);
    let chars: Vec<u64> = q.characters().iter().map(|&c| c % kernel).collect();
    CyclicQuotientType::new(kernel, &chars)
}

/// Weight of a monomial under the group, as a residue.
pub fn character_of(q: &CyclicQuotientType, m: &Monomial) -> u64 {
    m.weighted_degree(q.characters()) % q.order()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::{quotient_chart, quotient_to_cone};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mono(e: &[u32]) -> Monomial {
        Monomial(e.to_vec())
    }

    fn set(ms: &[&[u32]]) -> BTreeSet<Monomial> {
        ms.iter().map(|e| mono(e)).collect()
    }

    fn q(s: &str) -> CyclicQuotientType {
        s.parse().unwrap()
    }

    #[test]
    fn ideal_generator_examples() {
        let w = WeightedFiltration::new(2, &[1, 1], 1).unwrap();
        assert_eq!(w.ideal_generators(2), set(&[&[2, 0], &[1, 1], &[0, 2]]));
        let w = WeightedFiltration::new(3, &[2, 1], 1).unwrap();
        assert_eq!(w.ideal_generators(2), set(&[&[1, 0], &[0, 2]]));
        assert_eq!(w.ideal_generators(0), set(&[&[0, 0]]));
        let w = WeightedFiltration::new(5, &[0, 1], 1).unwrap();
        assert_eq!(w.ideal_generators(3), set(&[&[0, 3]]));
    }

    #[test]
    fn display_monomials() {
        let s: Vec<String> = set(&[&[2, 0], &[1, 1], &[0, 2]]).iter().map(ToString::to_string).collect();
        assert_eq!(s, vec!["y^2", "x*y", "x^2"]);
    }

    #[test]
    fn invariant_generator_examples() {
        assert_eq!(
            invariant_generators(&q("1/2(1,1)"), 2),
            set(&[&[2, 0], &[1, 1], &[0, 2]])
        );
        assert_eq!(
            invariant_generators(&q("1/3(1,1)"), 3),
            set(&[&[3, 0], &[2, 1], &[1, 2], &[0, 3]])
        );
        assert_eq!(
            invariant_generators(&CyclicQuotientType::trivial(2), 1),
            set(&[&[1, 0], &[0, 1]])
        );
        // the example ring k[x^l, y^l, xy] for characters (1,-1)
        assert_eq!(
            invariant_generators(&q("1/4(1,3)"), 6),
            set(&[&[4, 0], &[1, 1], &[0, 4]])
        );
    }

    #[test]
    fn dual_cone_examples() {
        let c = quotient_to_cone(&q("1/2(1,1)")).unwrap();
        assert_eq!(
            dual_cone_points(&c, 2).unwrap().minimal,
            set(&[&[2, 0], &[1, 1], &[0, 2]])
        );
        let smooth = Cone::from_i64s(&[&[1, 0], &[0, 1]]).unwrap();
        let d = dual_cone_points(&smooth, 1).unwrap();
        assert_eq!(d.minimal, set(&[&[1, 0], &[0, 1]]));
        assert_eq!(d.points.len(), 3);
        let c = quotient_to_cone(&q("1/3(1,1)")).unwrap();
        assert_eq!(
            dual_cone_points(&c, 3).unwrap().minimal,
            set(&[&[3, 0], &[2, 1], &[1, 2], &[0, 3]])
        );
        let ray = Cone::from_i64s(&[&[1, 0]]).unwrap();
        assert!(matches!(dual_cone_points(&ray, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn chart_points_see_pseudoreflections() {
        // 1/2(0,1): invariants k[x, y^2]
        let t = q("1/2(0,1)");
        let chart = quotient_chart(&t).unwrap();
        assert_eq!(
            chart_dual_points(&chart, 4).unwrap().minimal,
            set(&[&[1, 0], &[0, 2]])
        );
        assert_eq!(invariant_generators(&t, 4), set(&[&[1, 0], &[0, 2]]));
    }

    #[test]
    fn field_choice() {
        assert_eq!(coefficient_field(2), 3);
        assert_eq!(coefficient_field(3), 7);
        assert_eq!(coefficient_field(5), 11);
        assert_eq!(coefficient_field(7), 29);
    }

    #[test]
    fn glue_examples() {
        let w = WeightedFiltration::from_quotient(&q("1/5(2,1)"), 1).unwrap();
        assert_eq!(w.weights(), &[2, 1]);
        let id = TruncatedAutomorphism::identity(2, 11, 12);
        assert!(glue_check(&w, &id, 12).unwrap());

        let phi = TruncatedAutomorphism::diagonal_plus(11, 12, &[1, 1], &[vec![(1, mono(&[1, 5]))], vec![]])
            .unwrap();
        assert!(glue_check(&w, &phi, 12).unwrap());

        // x -> x + y breaks the filtration: y has weight 1 < 2
        let bad = TruncatedAutomorphism::diagonal_plus(11, 12, &[1, 1], &[vec![(1, mono(&[0, 1]))], vec![]])
            .unwrap();
        assert!(!glue_check(&w, &bad, 12).unwrap());

        // the swap x <-> y does not fix the divisor (y)
        let l = 5;
        let w = WeightedFiltration::new(l, &[l - 1, 1], 1).unwrap();
        let swap = TruncatedAutomorphism::new(
            coefficient_field(l),
            12,
            vec![
                Polynomial::from([(mono(&[0, 1]), 1)]),
                Polynomial::from([(mono(&[1, 0]), 1)]),
            ],
        )
        .unwrap();
        assert!(matches!(glue_check(&w, &swap, 12), Err(Error::Precondition(_))));
    }

    #[test]
    fn sampled_automorphisms_are_equivariant() {
        let t = q("1/7(3,1)");
        let w = WeightedFiltration::from_quotient(&t, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let phi = TruncatedAutomorphism::sample_equivariant(&w, 12, &mut rng);
            assert!(phi.fixes_divisor(1));
            for (i, img) in phi.images().iter().enumerate() {
                for m in img.keys() {
                    assert_eq!(character_of(&t, m), t.characters()[i]);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_automorphisms() {
        let constant = TruncatedAutomorphism::new(3, 4, vec![Polynomial::from([(mono(&[0]), 1)])]);
        assert!(matches!(constant, Err(Error::Precondition(_))));
        let singular = TruncatedAutomorphism::new(
            3,
            4,
            vec![
                Polynomial::from([(mono(&[1, 0]), 1)]),
                Polynomial::from([(mono(&[1, 0]), 2)]),
            ],
        );
        assert!(matches!(singular, Err(Error::Precondition(_))));
    }

    #[test]
    fn cartify_examples() {
        assert_eq!(cartify(&q("1/2(1,1)"), 1).unwrap(), CyclicQuotientType::trivial(2));
        assert_eq!(cartify(&q("1/6(2,3,1)"), 1).unwrap(), q("1/2(0,1,1)"));
        assert_eq!(cartify(&q("1/6(0,5,1)"), 1).unwrap(), q("1/6(0,5,1)"));
        assert!(cartify(&q("1/6(2,3,1)"), 4).is_err());
    }
}
