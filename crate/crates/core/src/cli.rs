//! Command implementations behind the `qres` binary. Each returns the text
//! to print on stdout; errors carry the exit status via
//! [`Error::exit_code`].

use std::cmp::Reverse;
use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::filtration::{
    cartify, chart_dual_points, glue_check, invariant_generators, Monomial, TruncatedAutomorphism,
    WeightedFiltration, DEFAULT_TRUNCATION,
};
use crate::hj::{cone_hj_rays, hj_expansion, hj_rays};
use crate::io::{emit_marked_fan, parse_fan_file, parse_marked_fan, parse_trace, ParsedFan};
use crate::lattice::{primitive, IntegerVector};
use crate::quotient::{
    characters_along, cone_action, cone_to_quotient, faithful_rays, last_unit_normalized, quotient_chart,
    Characteristic, CyclicQuotientType,
};
use crate::resolution::{blowup_step, replay, resolve, MarkedFan, ResolutionTrace, StepRecord};

/// Environment variable overriding the default degree bound.
pub const MAX_DEGREE_VAR: &str = "QRES_MAX_DEGREE";

/// Degree bound from `QRES_MAX_DEGREE`, else the built-in default.
pub fn default_degree() -> Result<u32> {
    match std::env::var(MAX_DEGREE_VAR) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("{MAX_DEGREE_VAR}={s:?} is not a degree bound"))),
        Err(_) => Ok(DEFAULT_TRUNCATION),
    }
}

fn characteristic(p: u64) -> Result<Characteristic> {
    Characteristic::new(p)
}

fn json_line(v: Value) -> String {
    let mut s = serde_json::to_string(&v).expect("serializable");
    s.push('\n');
    s
}

fn vec_json(v: &IntegerVector) -> Value {
    Value::Array(v.entries().iter().map(|e| Value::String(e.to_string())).collect())
}

fn set_text(s: &BTreeSet<usize>) -> String {
    let items: Vec<String> = s.iter().map(ToString::to_string).collect();
    format!("{{{}}}", items.join(","))
}

fn tame_text(p: Characteristic, order: u64) -> String {
    if p.is_tame_order(order) {
        format!("tame for p={p}")
    } else {
        format!("not tame for p={p}")
    }
}

fn file_rays(parsed: &ParsedFan, idx: &[usize]) -> Vec<IntegerVector> {
    idx.iter().map(|&i| parsed.rays[i].clone()).collect()
}

/// Per-cone group, tameness and faithful rays.
pub fn classify(text: &str, p: Option<u64>, as_json: bool) -> Result<String> {
    let parsed = parse_fan_file(text)?;
    let p = match p {
        Some(p) => characteristic(p)?,
        None => parsed.marked_fan.characteristic(),
    };
    let mut out = String::new();
    let mut records = Vec::new();
    for (k, (idx, cone)) in parsed.cones.iter().enumerate() {
        let desc = cone_to_quotient(cone)?;
        let order: u64 = desc
            .group_invariants
            .iter()
            .map(|d| u64::try_from(d).unwrap_or(u64::MAX))
            .product();
        let ray_list = format!("rays {}", idx.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
        if order == 1 {
            out.push_str(&format!("cone {k} ({ray_list}): trivial group\n"));
            records.push(json!({"cone": k, "rays": idx, "group": "trivial", "order": 1}));
            continue;
        }
        match &desc.cqs {
            None => {
                out.push_str(&format!("cone {k} ({ray_list}): {desc}, {}\n", tame_text(p, order)));
                records.push(json!({
                    "cone": k, "rays": idx, "group": "non-cyclic", "order": order,
                    "invariants": desc.group_invariants.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "tame": p.is_tame_order(order),
                }));
            }
            Some(canonical) => {
                let action = cone_action(cone)?;
                let along = last_unit_normalized(&characters_along(&action, cone, &file_rays(&parsed, idx))?);
                let faithful = faithful_rays(&along);
                out.push_str(&format!(
                    "cone {k} ({ray_list}): cyclic {along}, {}, faithful rays {}, canonical {canonical}\n",
                    tame_text(p, order),
                    set_text(&faithful)
                ));
                records.push(json!({
                    "cone": k, "rays": idx, "group": "cyclic", "order": order,
                    "type": along.to_string(), "canonical": canonical.to_string(),
                    "tame": p.is_tame_order(order), "faithful_rays": faithful,
                }));
            }
        }
    }
    if as_json {
        return Ok(json_line(json!({"characteristic": p.value(), "cones": records})));
    }
    Ok(out)
}

/// Where `resolve` and `blowup` read their input from.
pub enum FanSource<'a> {
    File(&'a str),
    /// A quotient type, realized as its cone with the unit divisor marked.
    Type(&'a str),
}

/// The single cone of `q` with the ray of its last unit coordinate marked.
pub fn marked_cone_of_type(q: &CyclicQuotientType, p: Characteristic) -> Result<MarkedFan> {
    let Some(j) = q.last_unit() else {
        return Err(Error::NoFaithfulDivisor(format!(
            "{q}: no coordinate has a unit character, so no divisor carries a faithful action"
        )));
    };
    let chart = quotient_chart(q)?;
    let divisor = primitive(&chart.coordinate_vectors[j])?;
    MarkedFan::from_cone(chart.cone, vec![divisor], p)
}

fn load(source: &FanSource<'_>, p: Option<u64>) -> Result<MarkedFan> {
    match source {
        FanSource::File(text) => {
            let m = parse_marked_fan(text)?;
            Ok(match p {
                Some(p) => m.with_characteristic(characteristic(p)?),
                None => m,
            })
        }
        FanSource::Type(s) => {
            let q: CyclicQuotientType = s.parse()?;
            marked_cone_of_type(&q, characteristic(p.unwrap_or(0))?)
        }
    }
}

fn chart_label(q: &CyclicQuotientType) -> String {
    if q.is_trivial() {
        "smooth".into()
    } else {
        q.canonical().to_string()
    }
}

fn step_text(s: &StepRecord) -> String {
    let centers: Vec<String> = s.added_rays.iter().map(ToString::to_string).collect();
    let charts: Vec<String> = s
        .charts
        .iter()
        .map(|c| {
            let mut t = chart_label(&c.characters);
            if !c.tame {
                t.push_str(" (non-tame)");
            }
            t
        })
        .collect();
    format!(
        "step {} (round {}, {}): {} cone(s) of order {} blown up at {}; charts: {}; measure {:?} -> {:?}\n",
        s.index,
        s.round,
        s.phase,
        s.targets.len(),
        s.targets.first().map(|t| t.order).unwrap_or(1),
        centers.join(" "),
        charts.join(", "),
        s.measure_before,
        s.measure_after
    )
}

fn step_json(s: &StepRecord) -> Value {
    json!({
        "index": s.index,
        "round": s.round,
        "phase": s.phase.to_string(),
        "centers": s.added_rays.iter().map(vec_json).collect::<Vec<_>>(),
        "charts": s.charts.iter().map(|c| json!({
            "type": chart_label(&c.characters),
            "order": c.order,
            "tame": c.tame,
        })).collect::<Vec<_>>(),
        "measure_before": s.measure_before,
        "measure_after": s.measure_after,
    })
}

/// Hirzebruch–Jung rays of every input cone that the final fan lacks.
pub fn oracle_missing(input: &MarkedFan, trace: &ResolutionTrace) -> Result<Vec<IntegerVector>> {
    let rays = trace.final_fan.rays();
    let mut missing = Vec::new();
    for c in input.fan().cones() {
        for r in cone_hj_rays(c)? {
            if !rays.contains(&r) {
                missing.push(r);
            }
        }
    }
    Ok(missing)
}

/// Output of [`resolve_command`].
#[derive(Debug)]
pub struct ResolveOutput {
    pub report: String,
    pub trace: String,
}

/// Runs the resolution and renders the report and the trace file.
pub fn resolve_command(source: &FanSource<'_>, p: Option<u64>, oracle_check: bool, as_json: bool) -> Result<ResolveOutput> {
    let m = load(source, p)?;
    let t = resolve(&m)?;
    let mut oracle: Option<Value> = None;
    let mut oracle_text = String::new();
    if oracle_check {
        if m.fan().rank() == 2 {
            let missing = oracle_missing(&m, &t)?;
            if !missing.is_empty() {
                let list: Vec<String> = missing.iter().map(ToString::to_string).collect();
                return Err(Error::InternalAssertion(format!(
                    "final fan lacks minimal-resolution rays {}",
                    list.join(" ")
                )));
            }
            oracle_text = "oracle: final rays contain the Hirzebruch-Jung rays\n".into();
            oracle = Some(Value::Bool(true));
        } else {
            oracle_text = format!("oracle: skipped in rank {}\n", m.fan().rank());
        }
    }
    let exceptional = t.exceptional_rays();
    let report = if as_json {
        json_line(json!({
            "input_digest": t.input_digest,
            "characteristic": t.characteristic.value(),
            "steps": t.steps.iter().map(step_json).collect::<Vec<_>>(),
            "exceptional_rays": exceptional.iter().map(vec_json).collect::<Vec<_>>(),
            "final_cones": t.final_fan.cones().len(),
            "smooth": t.smooth,
            "measures_decrease": t.measures_decrease,
            "oracle": oracle,
        }))
    } else {
        let mut out = String::new();
        for s in &t.steps {
            out.push_str(&step_text(s));
        }
        let list: Vec<String> = exceptional.iter().map(ToString::to_string).collect();
        out.push_str(&format!(
            "resolved in {} step(s) with {} exceptional ray(s){}{}; final fan has {} smooth cone(s)\n",
            t.steps.len(),
            exceptional.len(),
            if list.is_empty() { "" } else { ": " },
            list.join(" "),
            t.final_fan.cones().len()
        ));
        out.push_str(&oracle_text);
        out
    };
    Ok(ResolveOutput {
        report,
        trace: crate::io::emit_trace(&t),
    })
}

/// One blow-up of the maximal-order cones; prints the step and the new fan.
pub fn blowup_command(source: &FanSource<'_>, p: Option<u64>, as_json: bool) -> Result<String> {
    let m = load(source, p)?;
    let (next, s) = blowup_step(&m)?;
    let fan_line = emit_marked_fan(&next);
    if as_json {
        let fan: Value = serde_json::from_str(&fan_line).expect("valid json");
        return Ok(json_line(json!({"step": step_json(&s), "fan": fan})));
    }
    Ok(format!("{}{fan_line}\n", step_text(&s)))
}

fn display_order(ms: &BTreeSet<Monomial>) -> Vec<&Monomial> {
    let mut v: Vec<&Monomial> = ms.iter().collect();
    v.sort_by_key(|m| (m.degree(), Reverse(m.exponents().to_vec())));
    v
}

/// Minimal invariant monomials of degree at most `bound`.
pub fn hilbert_command(ty: &str, bound: Option<u32>, oracle_check: bool, as_json: bool) -> Result<String> {
    let q: CyclicQuotientType = ty.parse()?;
    let bound = match bound {
        Some(b) => b,
        None => default_degree()?,
    };
    let gens = invariant_generators(&q, bound);
    if oracle_check {
        let dual = chart_dual_points(&quotient_chart(&q)?, bound)?;
        if dual.minimal != gens {
            return Err(Error::InternalAssertion(format!(
                "invariant monomials of {q} differ from the dual cone points up to degree {bound}"
            )));
        }
    }
    let shown: Vec<String> = display_order(&gens).iter().map(ToString::to_string).collect();
    if as_json {
        return Ok(json_line(json!({
            "type": q.to_string(),
            "bound": bound,
            "generators": shown,
            "exponents": display_order(&gens).iter().map(|m| m.exponents().to_vec()).collect::<Vec<_>>(),
            "oracle": oracle_check,
        })));
    }
    let mut out = format!("{}\n", shown.join(", "));
    if oracle_check {
        out.push_str("oracle: matches the dual cone lattice points\n");
    }
    Ok(out)
}

/// Continued fraction of `l/a`, optionally with its resolution rays.
pub fn hj_command(l: u64, a: u64, with_rays: bool, as_json: bool) -> Result<String> {
    let e = hj_expansion(l, a)?;
    let coeffs: Vec<String> = e.coefficients.iter().map(ToString::to_string).collect();
    let rays = if with_rays { hj_rays(l, a)? } else { Vec::new() };
    if as_json {
        let mut v = json!({"l": l, "a": a, "coefficients": e.coefficients});
        if with_rays {
            v["rays"] = Value::Array(rays.iter().map(vec_json).collect());
        }
        return Ok(json_line(v));
    }
    let mut out = format!("[{}]\n", coeffs.join(","));
    if with_rays {
        let list: Vec<String> = rays.iter().map(ToString::to_string).collect();
        out.push_str(&format!("{}\n", list.join(" ")));
    }
    Ok(out)
}

/// Kernel of the character of coordinate `ray` (1-based).
pub fn cartify_command(ty: &str, ray: usize, as_json: bool) -> Result<String> {
    let q: CyclicQuotientType = ty.parse()?;
    let c = cartify(&q, ray)?;
    if as_json {
        return Ok(json_line(json!({
            "input": q.to_string(), "ray": ray, "order": c.order(), "characters": c.characters(), "type": c.to_string(),
        })));
    }
    Ok(format!("{c}\n"))
}

/// Parameters of [`glue_command`].
pub struct GlueOptions {
    /// 1-based divisor coordinate; defaults to the last unit character.
    pub divisor: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub truncation: Option<u32>,
}

/// Samples divisor-fixing equivariant automorphisms and checks that each
/// preserves every `I_k` up to the truncation degree.
pub fn glue_command(ty: &str, opts: &GlueOptions, as_json: bool) -> Result<String> {
    let q: CyclicQuotientType = ty.parse()?;
    let d = match opts.divisor {
        Some(0) => return Err(Error::Domain("divisor coordinates are numbered from 1".into())),
        Some(d) if d > q.rank() => return Err(Error::Domain(format!("divisor {d} out of range for {q}"))),
        Some(d) => d - 1,
        None => q
            .last_unit()
            .ok_or_else(|| Error::NoFaithfulDivisor(format!("{q} has no unit character")))?,
    };
    let qn = q
        .normalized_at(d)
        .ok_or_else(|| Error::NoFaithfulDivisor(format!("coordinate {} of {q} is not a unit character", d + 1)))?;
    let w = WeightedFiltration::from_quotient(&qn, d)?;
    let truncation = match opts.truncation {
        Some(t) => t,
        None => default_degree()?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut failures = Vec::new();
    for i in 0..opts.samples {
        let phi = TruncatedAutomorphism::sample_equivariant(&w, truncation, &mut rng);
        if !glue_check(&w, &phi, u64::from(truncation))? {
            failures.push(i);
        }
    }
    let passed = opts.samples - failures.len();
    let report = if as_json {
        json_line(json!({
            "type": qn.to_string(), "divisor": d + 1, "seed": opts.seed, "truncation": truncation,
            "samples": opts.samples, "passed": passed, "failures": failures,
        }))
    } else {
        format!(
            "glue-check {qn} along x_{}: {passed}/{} samples preserve the filtration (truncation {truncation}, seed {})\n",
            d + 1,
            opts.samples,
            opts.seed
        )
    };
    if !failures.is_empty() {
        return Err(Error::InternalAssertion(format!(
            "{} sample(s) broke the filtration: {}",
            failures.len(),
            report.trim_end()
        )));
    }
    Ok(report)
}

/// Re-applies a trace to its input and confirms the final fan.
pub fn replay_command(input: &str, trace: &str, as_json: bool) -> Result<String> {
    let m = parse_marked_fan(input)?;
    let t = parse_trace(trace)?;
    let fan = replay(&m, &t)?;
    if as_json {
        return Ok(json_line(json!({"ok": true, "steps": t.steps.len(), "final_cones": fan.cones().len()})));
    }
    Ok(format!(
        "replay ok: {} step(s) reproduce the recorded fan of {} cone(s)\n",
        t.steps.len(),
        fan.cones().len()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIVE_TWO: &str = r#"{"rank":2,"rays":[["1","0"],["-2","5"]],"cones":[[0,1]],"marked":[1],"characteristic":2}"#;

    #[test]
    fn classify_reports() {
        let r = classify(FIVE_TWO, None, false).unwrap();
        assert_eq!(r, "cone 0 (rays 0,1): cyclic 1/5(2,1), tame for p=2, faithful rays {1,2}, canonical 1/5(1,2)\n");
        let smooth = r#"{"rank":2,"rays":[["1","0"],["0","1"]],"cones":[[0,1]]}"#;
        assert_eq!(classify(smooth, None, false).unwrap(), "cone 0 (rays 0,1): trivial group\n");
        let e = classify(r#"{"rank":2,"rays":[["2","0"],["0","1"]],"cones":[[0,1]]}"#, None, false).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("not primitive"));
    }

    #[test]
    fn resolve_reports() {
        let out = resolve_command(&FanSource::File(FIVE_TWO), Some(0), true, false).unwrap();
        assert_eq!(out.trace.lines().count(), 4);
        assert!(out.report.contains("resolved in 2 step(s)"));
        let e = resolve_command(&FanSource::Type("1/6(2,3)"), None, false, false).unwrap_err();
        assert!(matches!(e, Error::NoFaithfulDivisor(_)));
        assert_eq!(e.exit_code(), 2);
        let smooth = r#"{"rank":2,"rays":[["1","0"],["0","1"]],"cones":[[0,1]]}"#;
        let out = resolve_command(&FanSource::File(smooth), None, true, false).unwrap();
        assert_eq!(out.trace.lines().count(), 2);
    }

    #[test]
    fn tool_reports() {
        assert_eq!(hj_command(5, 2, false, false).unwrap(), "[3,2]\n");
        assert_eq!(hilbert_command("1/3(1,1)", Some(3), true, false).unwrap().lines().next().unwrap(), "x^3, x^2*y, x*y^2, y^3");
        assert_eq!(cartify_command("1/6(2,3,1)", 1, false).unwrap(), "1/2(0,1,1)\n");
        let opts = GlueOptions {
            divisor: None,
            samples: 5,
            seed: 1,
            truncation: Some(8),
        };
        assert!(glue_command("1/5(2,1)", &opts, false).unwrap().contains("5/5"));
    }
}
