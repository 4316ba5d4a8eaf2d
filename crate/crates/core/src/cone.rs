//! Simplicial rational cones and fans of full-dimensional simplicial cones.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{
    adjugate, determinant, kernel_vector, rational_coordinates, smith_normal_form, IntegerMatrix,
    IntegerVector,
};

/// A simplicial cone spanned by linearly independent primitive vectors.
///
/// Generators are kept sorted lexicographically, so two cones are equal
/// exactly when they are the same subset of the lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cone {
    rank: usize,
    generators: Vec<IntegerVector>,
}

impl Cone {
    pub fn new(rank: usize, mut generators: Vec<IntegerVector>) -> Result<Self> {
        for g in &generators {
            if g.rank() != rank {
                return Err(Error::Dimension(format!(
                    "generator {g} does not live in rank {rank}"
                )));
            }
            if !g.is_primitive() {
                return Err(Error::DegenerateInput(format!("generator {g} is not primitive")));
            }
        }
        generators.sort();
        let matrix = IntegerMatrix::from_rows(generators.clone(), rank)?;
        if matrix.rank() != generators.len() {
            return Err(Error::DegenerateInput(
                "cone generators are not linearly independent".into(),
            ));
        }
        Ok(Cone { rank, generators })
    }

    pub fn from_i64s(rows: &[&[i64]]) -> Result<Self> {
        let rank = rows.first().map_or(0, |r| r.len());
        Self::new(rank, rows.iter().map(|r| IntegerVector::from_i64s(r)).collect())
    }

    /// The zero face.
    pub fn origin(rank: usize) -> Self {
        Cone {
            rank,
            generators: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.rank
    }

    pub fn generators(&self) -> &[IntegerVector] {
        &self.generators
    }

    pub fn has_generator(&self, v: &IntegerVector) -> bool {
        self.generators.binary_search(v).is_ok()
    }

    pub fn generator_index(&self, v: &IntegerVector) -> Option<usize> {
        self.generators.binary_search(v).ok()
    }

    pub fn generator_matrix(&self) -> IntegerMatrix {
        IntegerMatrix::from_rows(self.generators.clone(), self.rank)
            .expect("generators share the cone rank")
    }

    /// Index of the sublattice spanned by the generators inside the
    /// saturated lattice of their real span.
    pub fn multiplicity(&self) -> BigInt {
        let m = self.generator_matrix();
        if self.is_full() {
            return determinant(&m).expect("square").abs();
        }
        smith_normal_form(&m)
            .diagonal
            .into_iter()
            .filter(|d| !d.is_zero())
            .product()
    }

    pub fn is_smooth(&self) -> bool {
        self.multiplicity().is_one()
    }

    /// All faces including the zero face and the cone itself.
    pub fn faces(&self) -> BTreeSet<Cone> {
        let n = self.dim();
        (0u32..1 << n)
            .map(|mask| Cone {
                rank: self.rank,
                generators: (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| self.generators[i].clone())
                    .collect(),
            })
            .collect()
    }

    /// Coordinates of `v` in the generator basis. Full cones only.
    pub fn coordinates(&self, v: &IntegerVector) -> Result<Vec<BigRational>> {
        if !self.is_full() {
            return Err(Error::Domain(format!("cone {self} is not full-dimensional")));
        }
        rational_coordinates(&self.generator_matrix(), v)
    }

    /// Membership test for full cones.
    pub fn contains(&self, v: &IntegerVector) -> bool {
        self.coordinates(v)
            .map(|x| x.iter().all(|c| !c.is_negative()))
            .unwrap_or(false)
    }

    /// The cone with generator `i` replaced by `u`.
    pub fn replace(&self, i: usize, u: &IntegerVector) -> Result<Cone> {
        let mut g = self.generators.clone();
        g[i] = u.clone();
        Cone::new(self.rank, g)
    }

    /// Inner facet normals `n_i` with `n_i . v_j = |det| * delta_ij`.
    fn facet_normals(&self) -> Vec<IntegerVector> {
        let g = self.generator_matrix();
        let adj = adjugate(&g).expect("square");
        let flip = determinant(&g).expect("square").is_negative();
        let adj_t = adj.transpose();
        adj_t
            .rows()
            .iter()
            .map(|r| if flip { -r } else { r.clone() })
            .collect()
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, ">")
    }
}

/// A fan given by its maximal cones, all full-dimensional and simplicial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fan {
    rank: usize,
    cones: BTreeSet<Cone>,
}

impl Fan {
    pub fn new(rank: usize, cones: impl IntoIterator<Item = Cone>) -> Result<Self> {
        let cones: BTreeSet<Cone> = cones.into_iter().collect();
        for c in &cones {
            if c.rank() != rank {
                return Err(Error::Dimension(format!("cone {c} does not live in rank {rank}")));
            }
            if !c.is_full() {
                return Err(Error::Unsupported(format!(
                    "maximal cone {c} is not full-dimensional"
                )));
            }
        }
        Ok(Fan { rank, cones })
    }

    pub fn single(cone: Cone) -> Result<Self> {
        Self::new(cone.rank(), [cone])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cones(&self) -> &BTreeSet<Cone> {
        &self.cones
    }

    pub fn rays(&self) -> BTreeSet<IntegerVector> {
        self.cones
            .iter()
            .flat_map(|c| c.generators().iter().cloned())
            .collect()
    }

    pub fn has_ray(&self, v: &IntegerVector) -> bool {
        self.cones.iter().any(|c| c.has_generator(v))
    }

    /// Whether `v` lies in the support.
    pub fn contains(&self, v: &IntegerVector) -> bool {
        self.cones.iter().any(|c| c.contains(v))
    }

    pub fn is_smooth(&self) -> bool {
        self.cones.iter().all(Cone::is_smooth)
    }

    /// Star subdivision at the primitive vector `u`: every cone containing
    /// `u` is replaced by the cones obtained by swapping `u` in for each
    /// generator carrying a positive coordinate of `u`. Cones containing `u`
    /// in a proper face are all subdivided, so the whole star of that face
    /// is refined compatibly.
    pub fn star_subdivide(&self, u: &IntegerVector) -> Result<Fan> {
        if u.rank() != self.rank {
            return Err(Error::Dimension(format!("{u} does not live in rank {}", self.rank)));
        }
        if !u.is_primitive() {
            return Err(Error::DegenerateInput(format!("{u} is not primitive")));
        }
        let mut out = BTreeSet::new();
        let mut hit = false;
        for cone in &self.cones {
            let x = cone.coordinates(u)?;
            if x.iter().any(Signed::is_negative) {
                out.insert(cone.clone());
                continue;
            }
            hit = true;
            for (i, xi) in x.iter().enumerate() {
                if xi.is_positive() {
                    out.insert(cone.replace(i, u)?);
                }
            }
        }
        if !hit {
            return Err(Error::Domain(format!("{u} lies outside the fan support")));
        }
        Ok(Fan {
            rank: self.rank,
            cones: out,
        })
    }

    /// True iff every pairwise intersection of maximal cones is a common face.
    pub fn validate(&self) -> bool {
        let cones: Vec<&Cone> = self.cones.iter().collect();
        for (i, a) in cones.iter().enumerate() {
            for b in &cones[i + 1..] {
                if !meets_in_common_face(a, b) {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Display for Fan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.cones.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

pub fn multiplicity(c: &Cone) -> BigInt {
    c.multiplicity()
}

pub fn is_smooth(c: &Cone) -> bool {
    c.is_smooth()
}

pub fn faces(c: &Cone) -> BTreeSet<Cone> {
    c.faces()
}

pub fn star_subdivide(f: &Fan, u: &IntegerVector) -> Result<Fan> {
    f.star_subdivide(u)
}

pub fn validate_fan(f: &Fan) -> bool {
    f.validate()
}

/// Two full simplicial cones meet in a common face iff every extreme ray of
/// their intersection lies in the cone over their shared generators. The
/// extreme rays are enumerated from `rank - 1` tight facet inequalities.
fn meets_in_common_face(a: &Cone, b: &Cone) -> bool {
    let n = a.rank();
    let na = a.facet_normals();
    let nb = b.facet_normals();
    // Normals of facets opposite generators that are not shared.
    let off_a: Vec<&IntegerVector> = a
        .generators()
        .iter()
        .zip(&na)
        .filter(|(g, _)| !b.has_generator(g))
        .map(|(_, nrm)| nrm)
        .collect();
    let off_b: Vec<&IntegerVector> = b
        .generators()
        .iter()
        .zip(&nb)
        .filter(|(g, _)| !a.has_generator(g))
        .map(|(_, nrm)| nrm)
        .collect();
    if off_a.is_empty() && off_b.is_empty() {
        return true;
    }
    let all: Vec<&IntegerVector> = na.iter().chain(nb.iter()).collect();
    if n == 1 {
        // Rays are +/-e1; two distinct full cones in rank 1 are opposite.
        return true;
    }
    let mut bad = false;
    for_each_subset(all.len(), n - 1, &mut |subset| {
        if bad {
            return;
        }
        let rows: Vec<IntegerVector> = subset.iter().map(|&i| all[i].clone()).collect();
        let m = IntegerMatrix::from_rows(rows, n).expect("rank n rows");
        let k = kernel_vector(&m).expect("shape (n-1) x n");
        if k.is_zero() {
            return;
        }
        for s in [k.clone(), -&k] {
            if all.iter().all(|nrm| !nrm.dot(&s).is_negative())
                && (off_a.iter().chain(off_b.iter()).any(|nrm| !nrm.dot(&s).is_zero()))
            {
                bad = true;
            }
        }
    });
    !bad
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[i64]) -> IntegerVector {
        IntegerVector::from_i64s(x)
    }

    fn cone(rows: &[&[i64]]) -> Cone {
        Cone::from_i64s(rows).unwrap()
    }

    #[test]
    fn multiplicities() {
        assert_eq!(cone(&[&[1, 0], &[0, 1]]).multiplicity(), 1.into());
        for (l, a) in [(2, 1), (5, 2), (7, 3)] {
            assert_eq!(cone(&[&[1, 0], &[-a, l]]).multiplicity(), l.into());
        }
        assert_eq!(
            cone(&[&[1, 0, 0], &[0, 1, 0], &[-1, -1, 3]]).multiplicity(),
            3.into()
        );
        // non-full: the ray (1,2) spans a saturated line; <(1,1,0),(1,-1,0)> has index 2
        assert_eq!(cone(&[&[1, 2]]).multiplicity(), 1.into());
        assert_eq!(cone(&[&[1, 1, 0], &[1, -1, 0]]).multiplicity(), 2.into());
    }

    #[test]
    fn smoothness() {
        assert!(cone(&[&[1, 0], &[0, 1]]).is_smooth());
        assert!(!cone(&[&[1, 0], &[-1, 2]]).is_smooth());
        assert!(cone(&[&[0, 1], &[-1, 3]]).is_smooth());
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(matches!(Cone::from_i64s(&[&[2, 0], &[0, 1]]), Err(Error::DegenerateInput(_))));
        assert!(matches!(Cone::from_i64s(&[&[1, 1], &[-1, -1]]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn face_enumeration() {
        let f = cone(&[&[1, 0]]).faces();
        assert_eq!(f.len(), 2);
        assert!(f.contains(&Cone::origin(2)));
        let f = cone(&[&[1, 0], &[0, 1]]).faces();
        assert_eq!(f.len(), 4);
        assert!(f.contains(&cone(&[&[0, 1]])));
        assert_eq!(cone(&[&[1, 0, 0], &[0, 1, 0], &[-1, -1, 3]]).faces().len(), 8);
    }

    #[test]
    fn star_subdivision_examples() {
        let f = Fan::single(cone(&[&[1, 0], &[-1, 3]])).unwrap();
        let s = f.star_subdivide(&v(&[0, 1])).unwrap();
        let expected =
            Fan::new(2, [cone(&[&[1, 0], &[0, 1]]), cone(&[&[0, 1], &[-1, 3]])]).unwrap();
        assert_eq!(s, expected);
        assert!(s.is_smooth());

        let f = Fan::single(cone(&[&[1, 0], &[0, 1]])).unwrap();
        assert_eq!(f.star_subdivide(&v(&[1, 0])).unwrap(), f);

        let s = f.star_subdivide(&v(&[1, 1])).unwrap();
        let expected =
            Fan::new(2, [cone(&[&[1, 0], &[1, 1]]), cone(&[&[0, 1], &[1, 1]])]).unwrap();
        assert_eq!(s, expected);

        assert!(matches!(f.star_subdivide(&v(&[-1, 1])), Err(Error::Domain(_))));
    }

    #[test]
    fn star_of_shared_face() {
        // u = (1,1,0) lies in the shared face <e1,e2> of two cones
        let f = Fan::new(
            3,
            [
                cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]),
                cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, -1]]),
            ],
        )
        .unwrap();
        let s = f.star_subdivide(&v(&[1, 1, 0])).unwrap();
        assert_eq!(s.cones().len(), 4);
        assert!(s.validate());
    }

    #[test]
    fn fan_validation() {
        assert!(Fan::single(cone(&[&[1, 0], &[0, 1]])).unwrap().validate());
        let good = Fan::new(2, [cone(&[&[1, 0], &[0, 1]]), cone(&[&[0, 1], &[-1, 0]])]).unwrap();
        assert!(good.validate());
        let bad = Fan::new(2, [cone(&[&[1, 0], &[0, 1]]), cone(&[&[1, 1], &[-1, 0]])]).unwrap();
        assert!(!bad.validate());
        // opposite quadrants meet only at the origin
        let opp = Fan::new(2, [cone(&[&[1, 0], &[0, 1]]), cone(&[&[-1, 0], &[0, -1]])]).unwrap();
        assert!(opp.validate());
        // 3d: cones sharing a ray but overlapping in volume
        let overlap = Fan::new(
            3,
            [
                cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]),
                cone(&[&[1, 0, 0], &[1, 1, 0], &[0, 0, 1]]),
            ],
        )
        .unwrap();
        assert!(!overlap.validate());
    }
}
