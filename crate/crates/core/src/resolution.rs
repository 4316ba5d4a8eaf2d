//! Iterated weighted blow-ups on marked fans.
//!
//! A [`MarkedFan`] carries an ordered list of marked divisor rays. Every
//! singular chart is cyclic; its center is the group element normalized so
//! the most recently marked ray with unit character has character 1, and
//! blowing up is the star subdivision at that lattice point. Exceptional
//! rays are appended to the marking.
//!
//! The loop alternates two kinds of steps. A *maximal* step blows up every
//! cone of maximal order. A *non-tame* step blows up every cone of maximal
//! order divisible by the characteristic. After a maximal step, non-tame
//! steps run until every singular chart is tame; the pair (maximal order,
//! number of cones attaining it) must then have dropped. Within non-tame
//! steps the pair (maximal non-tame order, count) drops at every step.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use crate::cone::{Cone, Fan};
use crate::error::{Error, Result};
use crate::lattice::IntegerVector;
use crate::quotient::{cone_action, gcd, Characteristic, ConeAction, CyclicQuotientType};

/// A fan with ordered marked divisor rays over a base characteristic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedFan {
    fan: Fan,
    marked: Vec<IntegerVector>,
    characteristic: Characteristic,
}

impl MarkedFan {
    pub fn new(fan: Fan, marked: Vec<IntegerVector>, characteristic: Characteristic) -> Result<Self> {
        if !fan.validate() {
            return Err(Error::Precondition(
                "cones do not meet along common faces".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for r in &marked {
            if !fan.has_ray(r) {
                return Err(Error::Precondition(format!("marked vector {r} is not a ray of the fan")));
            }
            if !seen.insert(r.clone()) {
                return Err(Error::Precondition(format!("ray {r} is marked twice")));
            }
        }
        Ok(MarkedFan {
            fan,
            marked,
            characteristic,
        })
    }

    /// A single cone with the given generators marked, in order.
    pub fn from_cone(cone: Cone, marked: Vec<IntegerVector>, characteristic: Characteristic) -> Result<Self> {
        Self::new(Fan::single(cone)?, marked, characteristic)
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn marked(&self) -> &[IntegerVector] {
        &self.marked
    }

    pub fn characteristic(&self) -> Characteristic {
        self.characteristic
    }

    pub fn with_characteristic(&self, p: Characteristic) -> Self {
        MarkedFan {
            characteristic: p,
            ..self.clone()
        }
    }

    /// Stable text form hashed by [`MarkedFan::digest`].
    pub fn canonical_text(&self) -> String {
        let marked: Vec<String> = self.marked.iter().map(ToString::to_string).collect();
        format!(
            "rank={};cones={};marked=[{}];p={}",
            self.fan.rank(),
            self.fan,
            marked.join(","),
            self.characteristic
        )
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    fn mark_index(&self, r: &IntegerVector) -> Option<usize> {
        self.marked.iter().position(|m| m == r)
    }
}

/// Lexicographic pair (order, number of cones with that order).
pub type Measure = (u64, usize);

/// Which cones a step targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    /// Cones of maximal order.
    Maximal,
    /// Cones of maximal order among those divisible by the characteristic.
    NonTame,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Maximal => "maximal",
            Phase::NonTame => "non-tame",
        })
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximal" => Ok(Phase::Maximal),
            "non-tame" => Ok(Phase::NonTame),
            _ => Err(Error::Invalid(format!("unknown phase {s:?}"))),
        }
    }
}

/// A blow-up center chosen inside one cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Center {
    pub cone: Cone,
    pub order: u64,
    /// Characters along the cone's generators, with the divisor at 1.
    pub characters: CyclicQuotientType,
    pub divisor: IntegerVector,
    /// Position of the divisor in the marking (its creation index).
    pub divisor_mark: usize,
    pub center: IntegerVector,
}

/// A cone produced by a step inside one of its target cones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartRecord {
    pub parent: Cone,
    pub cone: Cone,
    pub order: u64,
    /// Characters along the chart's generators (trivial when smooth).
    pub characters: CyclicQuotientType,
    pub tame: bool,
    /// Character of the exceptional ray in this chart.
    pub exceptional_character: u64,
}

impl ChartRecord {
    pub fn exceptional_is_faithful(&self) -> bool {
        gcd(self.exceptional_character, self.order) == 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub index: usize,
    pub round: usize,
    pub phase: Phase,
    pub targets: Vec<Center>,
    /// Distinct centers in the order they were subdivided at.
    pub added_rays: Vec<IntegerVector>,
    pub charts: Vec<ChartRecord>,
    pub invariant_before: Measure,
    pub invariant_after: Measure,
    pub measure_before: Measure,
    pub measure_after: Measure,
}

impl StepRecord {
    pub fn has_non_tame_chart(&self) -> bool {
        self.charts.iter().any(|c| !c.tame)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolutionTrace {
    pub input_digest: String,
    pub characteristic: Characteristic,
    pub steps: Vec<StepRecord>,
    pub final_fan: Fan,
    pub final_marked: Vec<IntegerVector>,
    /// Every final cone has multiplicity 1.
    pub smooth: bool,
    /// Every recorded measure decreased as required.
    pub measures_decrease: bool,
}

impl ResolutionTrace {
    pub fn exceptional_rays(&self) -> Vec<IntegerVector> {
        self.steps.iter().flat_map(|s| s.added_rays.iter().cloned()).collect()
    }

    /// Checks the recorded measures: within every step the step's own
    /// measure dropped, and across rounds the maximal-order invariant
    /// dropped.
    pub fn check_measures(&self) -> bool {
        let stepwise = self.steps.iter().all(|s| s.measure_after < s.measure_before);
        let mut round_starts: BTreeMap<usize, Measure> = BTreeMap::new();
        for s in &self.steps {
            round_starts.entry(s.round).or_insert(s.invariant_before);
        }
        let mut starts: Vec<Measure> = round_starts.into_values().collect();
        if let Some(last) = self.steps.last() {
            starts.push(last.invariant_after);
        }
        let rounds = starts.windows(2).all(|w| w[1] < w[0]);
        stepwise && rounds
    }
}

/// Per-cone group data, memoized across steps.
#[derive(Default)]
struct ActionCache(BTreeMap<Cone, ConeAction>);

impl ActionCache {
    fn get(&mut self, c: &Cone) -> Result<&ConeAction> {
        if !self.0.contains_key(c) {
            let a = cone_action(c)?;
            self.0.insert(c.clone(), a);
        }
        Ok(&self.0[c])
    }

    fn orders(&mut self, fan: &Fan) -> Result<Vec<(Cone, u64)>> {
        fan.cones()
            .iter()
            .map(|c| Ok((c.clone(), self.get(c)?.order())))
            .collect()
    }
}

fn measure_of(orders: impl Iterator<Item = u64>) -> Measure {
    let orders: Vec<u64> = orders.collect();
    let max = orders.iter().copied().max().unwrap_or(1);
    (max, orders.iter().filter(|&&o| o == max).count())
}

fn invariant_cached(m: &MarkedFan, cache: &mut ActionCache) -> Result<Measure> {
    Ok(measure_of(cache.orders(m.fan())?.into_iter().map(|(_, o)| o)))
}

/// `(j, count)` over singular non-tame cones, `(0, 0)` when there are none.
fn nontame_cached(m: &MarkedFan, cache: &mut ActionCache) -> Result<Measure> {
    let p = m.characteristic();
    let bad: Vec<u64> = cache
        .orders(m.fan())?
        .into_iter()
        .map(|(_, o)| o)
        .filter(|&o| o > 1 && !p.is_tame_order(o))
        .collect();
    if bad.is_empty() {
        return Ok((0, 0));
    }
    Ok(measure_of(bad.into_iter()))
}

/// Maximal cone multiplicity and the number of maximal cones attaining it.
pub fn invariant(m: &MarkedFan) -> Result<Measure> {
    invariant_cached(m, &mut ActionCache::default())
}

/// Maximal non-tame order and its count, `(0, 0)` if all charts are tame.
pub fn nontame_invariant(m: &MarkedFan) -> Result<Measure> {
    nontame_cached(m, &mut ActionCache::default())
}

fn center_in(m: &MarkedFan, cone: &Cone, action: &ConeAction) -> Result<Center> {
    let l = action.order();
    let chosen = cone
        .generators()
        .iter()
        .zip(action.characters())
        .filter(|(_, &c)| gcd(c, l) == 1)
        .filter_map(|(g, _)| m.mark_index(g).map(|i| (i, g)))
        .max_by_key(|(i, _)| *i);
    let Some((divisor_mark, divisor)) = chosen else {
        return Err(Error::NoFaithfulDivisor(format!(
            "cone {cone} of type {} has no marked ray with unit character",
            action.quotient
        )));
    };
    let d = cone.generator_index(divisor).expect("generator");
    let characters = action.quotient.normalized_at(d).expect("unit character");
    let mut sum = IntegerVector::zero(cone.rank());
    for (g, &c) in cone.generators().iter().zip(characters.characters()) {
        sum = &sum + &g.scale(&BigInt::from(c));
    }
    let lb = BigInt::from(l);
    if sum.entries().iter().any(|e| !(e % &lb).is_zero()) {
        return Err(Error::InternalAssertion(format!(
            "center of {cone} is not a lattice point"
        )));
    }
    let center = IntegerVector::new(sum.entries().iter().map(|e| e / &lb).collect());
    if !center.is_primitive() || !cone.contains(&center) {
        return Err(Error::InternalAssertion(format!(
            "center {center} of {cone} is not a primitive point of the cone"
        )));
    }
    Ok(Center {
        cone: cone.clone(),
        order: l,
        characters,
        divisor: divisor.clone(),
        divisor_mark,
        center,
    })
}

fn centers_cached(m: &MarkedFan, phase: Phase, cache: &mut ActionCache) -> Result<Vec<Center>> {
    let orders = cache.orders(m.fan())?;
    let target = match phase {
        Phase::Maximal => invariant_cached(m, cache)?.0,
        Phase::NonTame => nontame_cached(m, cache)?.0,
    };
    if target <= 1 {
        return Err(Error::Precondition(match phase {
            Phase::Maximal => "fan is already smooth".to_string(),
            Phase::NonTame => "no non-tame singular cone".to_string(),
        }));
    }
    orders
        .into_iter()
        .filter(|(_, o)| *o == target)
        .map(|(c, _)| {
            let a = cache.get(&c)?.clone();
            center_in(m, &c, &a)
        })
        .collect()
}

/// Centers of a step of the given kind, one per targeted cone, in cone
/// order.
pub fn select_centers(m: &MarkedFan, phase: Phase) -> Result<Vec<Center>> {
    centers_cached(m, phase, &mut ActionCache::default())
}

/// Centers for the maximal-order cones.
pub fn select_center(m: &MarkedFan) -> Result<Vec<Center>> {
    select_centers(m, Phase::Maximal)
}

fn subdivide(m: &MarkedFan, rays: &[IntegerVector]) -> Result<MarkedFan> {
    let mut fan = m.fan.clone();
    let mut marked = m.marked.clone();
    for u in rays {
        fan = fan.star_subdivide(u)?;
        if !marked.contains(u) {
            marked.push(u.clone());
        }
    }
    Ok(MarkedFan {
        fan,
        marked,
        characteristic: m.characteristic,
    })
}

fn distinct_centers(centers: &[Center]) -> Vec<IntegerVector> {
    let mut seen = BTreeSet::new();
    centers
        .iter()
        .filter(|c| seen.insert(c.center.clone()))
        .map(|c| c.center.clone())
        .collect()
}

fn inside(parent: &Cone, child: &Cone) -> bool {
    child.generators().iter().all(|g| parent.contains(g))
}

fn step_cached(m: &MarkedFan, phase: Phase, round: usize, index: usize, cache: &mut ActionCache) -> Result<(MarkedFan, StepRecord)> {
    let invariant_before = invariant_cached(m, cache)?;
    let measure = |m: &MarkedFan, cache: &mut ActionCache| match phase {
        Phase::Maximal => invariant_cached(m, cache),
        Phase::NonTame => nontame_cached(m, cache),
    };
    let measure_before = measure(m, cache)?;
    let targets = centers_cached(m, phase, cache)?;
    let added_rays = distinct_centers(&targets);
    let next = subdivide(m, &added_rays)?;
    let p = m.characteristic();

    let mut charts = Vec::new();
    for t in &targets {
        let mut expected: Vec<u64> = t.characters.characters().iter().copied().filter(|&c| c > 0).collect();
        expected.sort_unstable();
        let mut got = Vec::new();
        for chart in next.fan.cones().iter().filter(|c| inside(&t.cone, c)) {
            let action = cache.get(chart)?.clone();
            let Some(ei) = chart.generator_index(&t.center) else {
                return Err(Error::InternalAssertion(format!(
                    "chart {chart} of {} misses its exceptional ray {}",
                    t.cone, t.center
                )));
            };
            let exceptional_character = action.characters()[ei];
            // in rank 2 the exceptional ray is always faithful; in general
            // some marked ray must stay faithful for the loop to continue
            let faithful = |i: usize| gcd(action.characters()[i], action.order()) == 1;
            if chart.rank() == 2 && !faithful(ei) {
                return Err(Error::InternalAssertion(format!(
                    "exceptional ray {} has non-unit character {exceptional_character} in {chart}",
                    t.center
                )));
            }
            let keeps_divisor = (0..chart.dim()).any(|i| faithful(i) && next.mark_index(&chart.generators()[i]).is_some());
            if action.order() > 1 && !keeps_divisor {
                return Err(Error::InternalAssertion(format!(
                    "chart {chart} of {} has no faithful marked ray",
                    t.cone
                )));
            }
            let mult = chart.multiplicity().to_u64().unwrap_or(u64::MAX);
            if mult != action.order() {
                return Err(Error::InternalAssertion(format!(
                    "chart {chart}: multiplicity {mult} differs from group order {}",
                    action.order()
                )));
            }
            got.push(mult);
            charts.push(ChartRecord {
                parent: t.cone.clone(),
                cone: chart.clone(),
                order: action.order(),
                characters: action.quotient.clone(),
                tame: p.is_tame_order(action.order()),
                exceptional_character,
            });
        }
        got.sort_unstable();
        if got != expected {
            return Err(Error::InternalAssertion(format!(
                "charts of {} have orders {got:?}, expected {expected:?}",
                t.cone
            )));
        }
    }

    let invariant_after = invariant_cached(&next, cache)?;
    let measure_after = measure(&next, cache)?;
    if measure_after >= measure_before {
        return Err(Error::InternalAssertion(format!(
            "{phase} step {index}: measure {measure_before:?} did not decrease (now {measure_after:?})"
        )));
    }
    let record = StepRecord {
        index,
        round,
        phase,
        targets,
        added_rays,
        charts,
        invariant_before,
        invariant_after,
        measure_before,
        measure_after,
    };
    Ok((next, record))
}

/// One step of the given kind.
pub fn step(m: &MarkedFan, phase: Phase) -> Result<(MarkedFan, StepRecord)> {
    step_cached(m, phase, 0, 0, &mut ActionCache::default())
}

/// One weighted blow-up of all maximal-order cones.
pub fn blowup_step(m: &MarkedFan) -> Result<(MarkedFan, StepRecord)> {
    step(m, Phase::Maximal)
}

/// Rejects inputs that the loop could not process: non-cyclic cones and
/// singular cones without a faithful marked divisor.
pub fn check_resolvable(m: &MarkedFan) -> Result<()> {
    let mut cache = ActionCache::default();
    for c in m.fan().cones() {
        let a = cache.get(c)?.clone();
        if a.order() > 1 {
            center_in(m, c, &a)?;
        }
    }
    Ok(())
}

/// Runs the two-phase loop to a smooth fan.
pub fn resolve(m: &MarkedFan) -> Result<ResolutionTrace> {
    check_resolvable(m)?;
    let mut cache = ActionCache::default();
    let mut state = m.clone();
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut round = 0;
    let mut round_start = invariant_cached(&state, &mut cache)?;
    loop {
        let (max, _) = invariant_cached(&state, &mut cache)?;
        if max == 1 {
            break;
        }
        let phase = if nontame_cached(&state, &mut cache)?.0 > 1 {
            Phase::NonTame
        } else {
            Phase::Maximal
        };
        if phase == Phase::Maximal && !steps.is_empty() {
            let now = invariant_cached(&state, &mut cache)?;
            if now >= round_start {
                return Err(Error::InternalAssertion(format!(
                    "round {round}: invariant {round_start:?} did not decrease (now {now:?})"
                )));
            }
            round += 1;
            round_start = now;
        }
        let (next, record) = step_cached(&state, phase, round, steps.len(), &mut cache)?;
        steps.push(record);
        state = next;
    }
    let final_inv = invariant_cached(&state, &mut cache)?;
    if !steps.is_empty() && final_inv >= round_start {
        return Err(Error::InternalAssertion(format!(
            "final round: invariant {round_start:?} did not decrease (now {final_inv:?})"
        )));
    }
    let mut trace = ResolutionTrace {
        input_digest: m.digest(),
        characteristic: m.characteristic(),
        steps,
        smooth: state.fan.is_smooth(),
        final_fan: state.fan,
        final_marked: state.marked,
        measures_decrease: false,
    };
    trace.measures_decrease = trace.check_measures();
    if !trace.measures_decrease || !trace.smooth {
        return Err(Error::InternalAssertion("trace certificates failed".into()));
    }
    Ok(trace)
}

/// Re-applies the recorded subdivisions to `input`, checking each recorded
/// center against the center rule, and returns the final fan.
pub fn replay(input: &MarkedFan, trace: &ResolutionTrace) -> Result<Fan> {
    if input.digest() != trace.input_digest {
        return Err(Error::Replay(format!(
            "trace was produced from input {}, not {}",
            trace.input_digest,
            input.digest()
        )));
    }
    let mut cache = ActionCache::default();
    let mut state = input.clone();
    for s in &trace.steps {
        let expected = centers_cached(&state, s.phase, &mut cache)
            .map_err(|e| Error::Replay(format!("step {}: {e}", s.index)))?;
        let want = distinct_centers(&expected);
        if want != s.added_rays {
            return Err(Error::Replay(format!(
                "step {}: recorded rays {:?} differ from the centers {:?}",
                s.index,
                s.added_rays.iter().map(ToString::to_string).collect::<Vec<_>>(),
                want.iter().map(ToString::to_string).collect::<Vec<_>>()
            )));
        }
        let targets: Vec<&Cone> = expected.iter().map(|c| &c.cone).collect();
        let recorded: Vec<&Cone> = s.targets.iter().map(|c| &c.cone).collect();
        if targets != recorded {
            return Err(Error::Replay(format!("step {}: target cones differ", s.index)));
        }
        state = subdivide(&state, &s.added_rays).map_err(|e| Error::Replay(e.to_string()))?;
    }
    if state.fan != trace.final_fan {
        return Err(Error::Replay("replayed fan differs from the recorded final fan".into()));
    }
    if state.marked != trace.final_marked {
        return Err(Error::Replay("replayed marking differs from the recorded one".into()));
    }
    Ok(state.fan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::quotient_to_cone;

    fn v(x: &[i64]) -> IntegerVector {
        IntegerVector::from_i64s(x)
    }

    fn q(s: &str) -> CyclicQuotientType {
        s.parse().unwrap()
    }

    fn p(n: u64) -> Characteristic {
        Characteristic::new(n).unwrap()
    }

    fn marked_2d(l: i64, a: i64, char_p: u64) -> MarkedFan {
        let cone = Cone::from_i64s(&[&[1, 0], &[-a, l]]).unwrap();
        MarkedFan::from_cone(cone, vec![v(&[-a, l])], p(char_p)).unwrap()
    }

    #[test]
    fn invariant_examples() {
        let smooth = MarkedFan::from_cone(
            Cone::from_i64s(&[&[1, 0], &[0, 1]]).unwrap(),
            vec![],
            p(0),
        )
        .unwrap();
        assert_eq!(invariant(&smooth).unwrap(), (1, 1));
        let m = marked_2d(5, 2, 0);
        assert_eq!(invariant(&m).unwrap(), (5, 1));
        let (next, _) = blowup_step(&m).unwrap();
        assert_eq!(invariant(&next).unwrap(), (2, 1));
    }

    #[test]
    fn center_examples() {
        let m = marked_2d(5, 2, 0);
        let c = select_center(&m).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].center, v(&[0, 1]));
        assert_eq!(c[0].divisor, v(&[-2, 5]));

        let cone = quotient_to_cone(&q("1/3(1,1,1)")).unwrap();
        let m = MarkedFan::from_cone(cone, vec![v(&[-1, -1, 3])], p(0)).unwrap();
        assert_eq!(select_center(&m).unwrap()[0].center, v(&[0, 0, 1]));

        let smooth = MarkedFan::from_cone(Cone::from_i64s(&[&[1, 0], &[0, 1]]).unwrap(), vec![], p(0)).unwrap();
        assert!(matches!(select_center(&smooth), Err(Error::Precondition(_))));

        let unmarked = MarkedFan::from_cone(Cone::from_i64s(&[&[1, 0], &[-2, 5]]).unwrap(), vec![], p(0)).unwrap();
        assert!(matches!(select_center(&unmarked), Err(Error::NoFaithfulDivisor(_))));
    }

    #[test]
    fn h_rule_prefers_latest_mark() {
        // both rays faithful; the later mark decides the center
        let cone = Cone::from_i64s(&[&[1, 0], &[-2, 5]]).unwrap();
        let m = MarkedFan::from_cone(cone.clone(), vec![v(&[-2, 5]), v(&[1, 0])], p(0)).unwrap();
        let c = &select_center(&m).unwrap()[0];
        assert_eq!(c.divisor, v(&[1, 0]));
        // characters normalized at e1: (1, 3) -> center (1/5) e1 + (3/5)(-2,5) = (-1, 3)
        assert_eq!(c.center, v(&[-1, 3]));
    }

    #[test]
    fn blowup_examples() {
        let (next, rec) = blowup_step(&marked_2d(5, 2, 0)).unwrap();
        let mut orders: Vec<u64> = rec.charts.iter().map(|c| c.order).collect();
        orders.sort_unstable();
        assert_eq!(orders, vec![1, 2]);
        assert_eq!(next.marked().last(), Some(&v(&[0, 1])));
        let two = rec.charts.iter().find(|c| c.order == 2).unwrap();
        assert_eq!(two.characters.canonical(), q("1/2(1,1)"));

        let (next, rec) = blowup_step(&marked_2d(2, 1, 0)).unwrap();
        assert!(next.fan().is_smooth());
        assert_eq!(rec.added_rays.len(), 1);

        let cone = quotient_to_cone(&q("1/3(1,1,1)")).unwrap();
        let m = MarkedFan::from_cone(cone, vec![v(&[-1, -1, 3])], p(0)).unwrap();
        let (next, rec) = blowup_step(&m).unwrap();
        assert_eq!(next.fan().cones().len(), 3);
        assert!(next.fan().is_smooth());
        assert!(rec.charts.iter().all(|c| c.order == 1));
    }

    #[test]
    fn resolve_examples() {
        let m = marked_2d(5, 2, 0);
        let t = resolve(&m).unwrap();
        assert_eq!(t.steps.len(), 2);
        assert_eq!(t.exceptional_rays(), vec![v(&[0, 1]), v(&[-1, 3])]);
        assert!(t.smooth && t.measures_decrease);

        let t2 = resolve(&m.with_characteristic(p(2))).unwrap();
        assert_eq!(t2.final_fan, t.final_fan);
        assert!(t2.steps.iter().any(|s| s.has_non_tame_chart()));
        assert_eq!(t2.steps[1].phase, Phase::NonTame);

        let smooth = MarkedFan::from_cone(Cone::from_i64s(&[&[1, 0], &[0, 1]]).unwrap(), vec![], p(0)).unwrap();
        let t = resolve(&smooth).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(&t.final_fan, smooth.fan());
    }

    #[test]
    fn resolve_four_three_in_char_three() {
        let m = marked_2d(4, 3, 3);
        let t = resolve(&m).unwrap();
        let phases: Vec<Phase> = t.steps.iter().map(|s| s.phase).collect();
        assert_eq!(phases[0], Phase::Maximal);
        assert_eq!(phases[1], Phase::NonTame);
        let t0 = resolve(&m.with_characteristic(p(0))).unwrap();
        assert_eq!(t.final_fan, t0.final_fan);
    }

    #[test]
    fn resolve_rejects_unfaithful_marking() {
        // 1/6(2,3,1): mark only the rays with characters 2 and 3
        let cone = quotient_to_cone(&q("1/6(2,3,1)")).unwrap();
        let m = MarkedFan::from_cone(cone, vec![v(&[1, 0, 0]), v(&[0, 1, 0])], p(0)).unwrap();
        assert!(matches!(resolve(&m), Err(Error::NoFaithfulDivisor(_))));
    }

    #[test]
    fn replay_checks() {
        let m = marked_2d(7, 3, 0);
        let t = resolve(&m).unwrap();
        assert_eq!(replay(&m, &t).unwrap(), t.final_fan);

        let smooth = MarkedFan::from_cone(Cone::from_i64s(&[&[1, 0], &[0, 1]]).unwrap(), vec![], p(0)).unwrap();
        let empty = resolve(&smooth).unwrap();
        assert_eq!(&replay(&smooth, &empty).unwrap(), smooth.fan());

        let mut forged = t.clone();
        forged.steps[0].added_rays[0] = v(&[1, 1]);
        assert!(matches!(replay(&m, &forged), Err(Error::Replay(_))));
        assert!(matches!(replay(&marked_2d(7, 2, 0), &t), Err(Error::Replay(_))));
    }

    #[test]
    fn exceptional_ray_need_not_stay_faithful() {
        // chart over the first coordinate is 1/21(15,2,1) along (u, e_2, divisor)
        let cone = quotient_to_cone(&q("1/27(21,23,1)")).unwrap();
        let m = MarkedFan::from_cone(cone, vec![v(&[-21, -23, 27])], p(0)).unwrap();
        let (next, rec) = blowup_step(&m).unwrap();
        let chart = rec.charts.iter().find(|c| c.order == 21).unwrap();
        assert_eq!(chart.characters.canonical(), q("1/21(15,2,1)").canonical());
        assert_eq!(gcd(chart.exceptional_character, 21), 3);
        assert!(!chart.exceptional_is_faithful());
        let c = center_in(&next, &chart.cone, &cone_action(&chart.cone).unwrap()).unwrap();
        assert_eq!(c.divisor, v(&[-21, -23, 27]));
        assert!(resolve(&m).unwrap().smooth);
    }

    #[test]
    fn shared_face_center_is_applied_once() {
        // two copies of 1/2(1,1) x A^1 glued along the singular face
        let a = Cone::from_i64s(&[&[1, 0, 0], &[-1, 2, 0], &[0, 0, 1]]).unwrap();
        let b = Cone::from_i64s(&[&[1, 0, 0], &[-1, 2, 0], &[0, 0, -1]]).unwrap();
        let fan = Fan::new(3, [a, b]).unwrap();
        let m = MarkedFan::new(fan, vec![v(&[-1, 2, 0])], p(0)).unwrap();
        let (next, rec) = blowup_step(&m).unwrap();
        assert_eq!(rec.targets.len(), 2);
        assert_eq!(rec.added_rays, vec![v(&[0, 1, 0])]);
        assert!(next.fan().is_smooth());
        assert!(next.fan().validate());
    }
}
