//! Independent oracles: Hirzebruch–Jung continued fractions for surface
//! cyclic quotients and brute-force enumeration of finite quotient groups.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::lattice::{adjugate, determinant, hermite_normal_form, IntegerMatrix, IntegerVector};
use crate::quotient::{cone_action, gcd, inverse_mod};

/// `l/a = b_1 - 1/(b_2 - 1/(... - 1/b_r))` with every `b_i >= 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HJExpansion {
    pub l: u64,
    pub a: u64,
    pub coefficients: Vec<u64>,
}

impl HJExpansion {
    /// Folds the continued fraction back into a rational.
    pub fn value(&self) -> BigRational {
        let mut it = self.coefficients.iter().rev();
        let last = it.next().expect("nonempty expansion");
        let mut x = BigRational::from_integer(BigInt::from(*last));
        for &b in it {
            x = BigRational::from_integer(BigInt::from(b)) - x.recip();
        }
        x
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

fn check_pair(l: u64, a: u64) -> Result<()> {
    if a == 0 || a >= l || gcd(a, l) != 1 {
        return Err(Error::Domain(format!(
            "expected coprime 0 < a < l, got l = {l}, a = {a}"
        )));
    }
    Ok(())
}

/// Greedy ceiling expansion of `l/a`.
pub fn hj_expansion(l: u64, a: u64) -> Result<HJExpansion> {
    check_pair(l, a)?;
    let (mut num, mut den) = (l, a);
    let mut coefficients = Vec::new();
    while den != 0 {
        let b = num.div_ceil(den);
        coefficients.push(b);
        (num, den) = (den, b * den - num);
    }
    Ok(HJExpansion { l, a, coefficients })
}

/// `1/l(a,1)` rewritten as `1/l(1,a')`: rescale by `a' = a^{-1} mod l` and
/// swap the coordinates. The expansion of `l/a'` is that of `l/a` reversed.
pub fn classical_form(l: u64, a: u64) -> Result<(u64, u64)> {
    check_pair(l, a)?;
    Ok((l, inverse_mod(a, l).expect("coprime")))
}

/// Interior rays of the minimal resolution of `<e_1, l e_2 - a e_1>`,
/// ordered from `e_1`: `w_0 = e_1`, `w_1 = e_2`, `w_{i+1} = b_i w_i - w_{i-1}`,
/// ending at `w_{r+1} = l e_2 - a e_1`.
pub fn hj_rays(l: u64, a: u64) -> Result<Vec<IntegerVector>> {
    let exp = hj_expansion(l, a)?;
    let mut prev = IntegerVector::from_i64s(&[1, 0]);
    let mut cur = IntegerVector::from_i64s(&[0, 1]);
    let mut rays = Vec::with_capacity(exp.len());
    for &b in &exp.coefficients {
        rays.push(cur.clone());
        let next = &cur.scale(&BigInt::from(b)) - &prev;
        prev = cur;
        cur = next;
    }
    let end = IntegerVector::new(vec![-BigInt::from(a), BigInt::from(l)]);
    if cur != end {
        return Err(Error::InternalAssertion(format!(
            "recursion for {l}/{a} ended at {cur} instead of {end}"
        )));
    }
    Ok(rays)
}

/// Minimal-resolution rays of an arbitrary 2D cone `<v_1, v_2>`, found by
/// carrying [`hj_rays`] over by the unimodular map `e_1 -> v_1`,
/// `e_2 -> (a v_1 + v_2) / l`, where the action is `1/l(a,1)` along
/// `(v_1, v_2)`. Empty for smooth cones.
pub fn cone_hj_rays(cone: &Cone) -> Result<Vec<IntegerVector>> {
    if cone.rank() != 2 || !cone.is_full() {
        return Err(Error::Dimension(format!("{cone} is not a full cone in rank 2")));
    }
    let action = cone_action(cone)?;
    let l = action.order();
    if l == 1 {
        return Ok(Vec::new());
    }
    let q = action.quotient.normalized_at(1).ok_or_else(|| {
        Error::InternalAssertion(format!("{cone}: generator character is not a unit"))
    })?;
    let a = q.characters()[0];
    let (v1, v2) = (&cone.generators()[0], &cone.generators()[1]);
    let sum = &v1.scale(&BigInt::from(a)) + v2;
    let lb = BigInt::from(l);
    let u = IntegerVector::new(sum.entries().iter().map(|e| e / &lb).collect());
    if u.scale(&lb) != sum {
        return Err(Error::InternalAssertion(format!("{cone}: group element is not integral")));
    }
    Ok(hj_rays(l, a)?
        .into_iter()
        .map(|w| &v1.scale(&w[0]) + &u.scale(&w[1]))
        .collect())
}

/// Desk-scale limit on the group order enumerated by [`brute_quotient`].
pub const BRUTE_LIMIT: u64 = 10_000;

/// Invariant factors greater than one of `Z^n / (row lattice)`, found by
/// listing coset representatives from a Hermite basis and counting elements
/// by order. Never consults a Smith form.
pub fn brute_quotient(m: &IntegerMatrix) -> Result<Vec<BigInt>> {
    if !m.is_square() {
        return Err(Error::Dimension("brute_quotient expects a square matrix".into()));
    }
    let det = determinant(m)?.abs();
    if det.is_zero() {
        return Err(Error::InfiniteQuotient);
    }
    let size = det
        .to_u64()
        .filter(|&s| s <= BRUTE_LIMIT)
        .ok_or_else(|| Error::Domain(format!("group order {det} exceeds {BRUTE_LIMIT}")))?;
    if size == 1 {
        return Ok(Vec::new());
    }
    let h = hermite_normal_form(m);
    let n = h.ncols();
    let diag: Vec<u64> = (0..n).map(|i| h.get(i, i).to_u64().expect("bounded")).collect();
    let adj = adjugate(&h)?;
    let hdet = determinant(&h)?.abs();

    // order of x in Z^n / L is det / gcd(det, x . adj(H)) for the basis H
    let mut orders: BTreeMap<u64, u64> = BTreeMap::new();
    let mut x = vec![0u64; n];
    loop {
        let v = IntegerVector::new(x.iter().map(|&e| BigInt::from(e)).collect());
        let y = adj.left_mul_vector(&v);
        let g = y.entries().iter().fold(hdet.clone(), |g, e| g.gcd(e));
        let ord = (&hdet / g).to_u64().expect("bounded");
        *orders.entry(ord).or_default() += 1;
        let mut i = 0;
        loop {
            if i == n {
                return Ok(chain_from_orders(size, &orders));
            }
            x[i] += 1;
            if x[i] < diag[i] {
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

/// Recovers the invariant factors of a finite abelian group of order
/// `size` from the histogram of element orders, via the counts
/// `|G[p^e]| = prod_i gcd(p^e, d_i)`.
fn chain_from_orders(size: u64, orders: &BTreeMap<u64, u64>) -> Vec<BigInt> {
    let killed_by = |k: u64| -> u64 {
        orders
            .iter()
            .filter(|(&o, _)| k % o == 0)
            .map(|(_, &c)| c)
            .sum()
    };
    let mut exps: Vec<(u64, Vec<u32>)> = Vec::new();
    let mut rest = size;
    let mut p = 2;
    while rest > 1 {
        if rest % p == 0 {
            while rest % p == 0 {
                rest /= p;
            }
            // r[e-1] = number of factors divisible by p^e
            let mut r = Vec::new();
            let mut prev_log = 0u32;
            let mut pe = 1u64;
            loop {
                pe *= p;
                let c = killed_by(pe);
                let log = c.ilog(p);
                if log == prev_log {
                    break;
                }
                r.push(log - prev_log);
                prev_log = log;
            }
            exps.push((p, r));
        }
        p += 1;
    }
    let len = exps.iter().map(|(_, r)| r.first().copied().unwrap_or(0)).max().unwrap_or(0) as usize;
    // position t from the top: v_p = #{e : r_e > t}
    let mut chain: Vec<BigInt> = (0..len)
        .map(|t| {
            exps.iter()
                .map(|(p, r)| {
                    let e = r.iter().filter(|&&re| re as usize > t).count() as u32;
                    BigInt::from(*p).pow(e)
                })
                .product()
        })
        .collect();
    chain.reverse();
    debug_assert!(chain.iter().all(|d| d.is_positive() && !d.is_one()));
    chain
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[i64]]) -> IntegerMatrix {
        IntegerMatrix::from_i64s(rows).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn expansions() {
        assert_eq!(hj_expansion(2, 1).unwrap().coefficients, vec![2]);
        assert_eq!(hj_expansion(5, 2).unwrap().coefficients, vec![3, 2]);
        assert_eq!(hj_expansion(7, 1).unwrap().coefficients, vec![7]);
        assert_eq!(hj_expansion(5, 4).unwrap().coefficients, vec![2, 2, 2, 2]);
        assert!(matches!(hj_expansion(6, 4), Err(Error::Domain(_))));
        assert!(hj_expansion(3, 3).is_err());
    }

    #[test]
    fn reconstruction_and_reversal() {
        for l in 2..40u64 {
            for a in 1..l {
                if gcd(a, l) != 1 {
                    continue;
                }
                let e = hj_expansion(l, a).unwrap();
                assert_eq!(e.value(), BigRational::new(l.into(), a.into()));
                assert!(e.coefficients.iter().all(|&b| b >= 2));
                let (_, a2) = classical_form(l, a).unwrap();
                let mut rev = hj_expansion(l, a2).unwrap().coefficients;
                rev.reverse();
                assert_eq!(rev, e.coefficients);
            }
        }
    }

    #[test]
    fn rays() {
        assert_eq!(hj_rays(2, 1).unwrap(), vec![IntegerVector::from_i64s(&[0, 1])]);
        assert_eq!(hj_rays(3, 1).unwrap(), vec![IntegerVector::from_i64s(&[0, 1])]);
        assert_eq!(
            hj_rays(5, 2).unwrap(),
            vec![IntegerVector::from_i64s(&[0, 1]), IntegerVector::from_i64s(&[-1, 3])]
        );
    }

    #[test]
    fn rays_of_general_cones() {
        let c = Cone::from_i64s(&[&[1, 0], &[-2, 5]]).unwrap();
        let mut got = cone_hj_rays(&c).unwrap();
        got.sort();
        assert_eq!(got, vec![IntegerVector::from_i64s(&[-1, 3]), IntegerVector::from_i64s(&[0, 1])]);
        // the same singularity after a unimodular change of basis
        let c = Cone::from_i64s(&[&[1, 1], &[3, 8]]).unwrap();
        let mut got = cone_hj_rays(&c).unwrap();
        got.sort();
        assert_eq!(got, vec![IntegerVector::from_i64s(&[1, 2]), IntegerVector::from_i64s(&[2, 5])]);
        assert!(cone_hj_rays(&Cone::from_i64s(&[&[1, 0], &[0, 1]]).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn brute_force_groups() {
        assert_eq!(brute_quotient(&IntegerMatrix::identity(3)).unwrap(), ints(&[]));
        assert_eq!(brute_quotient(&mat(&[&[2, 0], &[0, 3]])).unwrap(), ints(&[6]));
        assert_eq!(brute_quotient(&mat(&[&[2, 0], &[0, 2]])).unwrap(), ints(&[2, 2]));
        assert_eq!(
            brute_quotient(&mat(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]])).unwrap(),
            ints(&[2, 6, 12])
        );
        assert_eq!(brute_quotient(&mat(&[&[4, 0], &[0, 6]])).unwrap(), ints(&[2, 12]));
        assert!(matches!(
            brute_quotient(&mat(&[&[1, 2], &[2, 4]])),
            Err(Error::InfiniteQuotient)
        ));
    }
}
