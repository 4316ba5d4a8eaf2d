//! Fan files and trace files.
//!
//! Both are UTF-8 JSON with integers written as decimal strings (plain JSON
//! integers are accepted on input). A fan file is one JSON object:
//!
//! ```text
//! {"rank":2,"rays":[["1","0"],["-2","5"]],"cones":[[0,1]],"marked":[1],"characteristic":0}
//! ```
//!
//! `cones` and `marked` index into `rays` from 0. A trace file is JSON
//! Lines: a header, one line per step, and a final line with the resulting
//! fan and its certificates.

use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::cone::{Cone, Fan};
use crate::error::{Error, Result};
use crate::lattice::IntegerVector;
use crate::quotient::{Characteristic, CyclicQuotientType};
use crate::resolution::{Center, ChartRecord, MarkedFan, Measure, Phase, ResolutionTrace, StepRecord};

/// A JSON integer or decimal string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Str(String),
    Num(serde_json::Number),
}

impl IntRepr {
    fn to_bigint(&self) -> std::result::Result<BigInt, String> {
        let s = match self {
            IntRepr::Str(s) => s.trim().to_string(),
            IntRepr::Num(n) if n.is_i64() || n.is_u64() => n.to_string(),
            IntRepr::Num(n) => return Err(format!("{n} is not an integer")),
        };
        BigInt::from_str(&s).map_err(|_| format!("{s:?} is not a decimal integer"))
    }
}

type VectorRepr = Vec<IntRepr>;

fn vector_repr(v: &IntegerVector) -> VectorRepr {
    v.entries().iter().map(|e| IntRepr::Str(e.to_string())).collect()
}

fn vector_from(r: &VectorRepr) -> Result<IntegerVector> {
    r.iter()
        .map(|e| e.to_bigint().map_err(Error::Invalid))
        .collect::<Result<Vec<_>>>()
        .map(IntegerVector::new)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanFile {
    rank: usize,
    rays: Vec<VectorRepr>,
    cones: Vec<Vec<usize>>,
    #[serde(default)]
    marked: Vec<usize>,
    #[serde(default)]
    characteristic: u64,
}

/// A fan file read with its rays in file order, so reports can refer to
/// the author's numbering.
#[derive(Clone, Debug)]
pub struct ParsedFan {
    pub marked_fan: MarkedFan,
    pub rays: Vec<IntegerVector>,
    /// Each cone's rays in file order, paired with the built cone.
    pub cones: Vec<(Vec<usize>, Cone)>,
}

/// `line_offset` shifts serde's position for input parsed line by line.
/// Errors raised after buffering carry no position; they are pinned to the
/// start of the line.
fn parse_error(e: &serde_json::Error, line_offset: usize) -> Error {
    let (line, column) = match e.line() {
        0 => (line_offset + 1, 1),
        l => (l + line_offset, e.column()),
    };
    Error::Parse {
        line,
        column,
        message: e.to_string(),
    }
}

fn semantic(ff: &FanFile) -> Result<ParsedFan> {
    if ff.rank == 0 {
        return Err(Error::Invalid("rank must be positive".into()));
    }
    let mut rays = Vec::with_capacity(ff.rays.len());
    for (i, r) in ff.rays.iter().enumerate() {
        let v = vector_from(r).map_err(|e| Error::Invalid(format!("ray {i}: {e}")))?;
        if v.rank() != ff.rank {
            return Err(Error::Invalid(format!(
                "ray {i} has {} entries, expected {}",
                v.rank(),
                ff.rank
            )));
        }
        if !v.is_primitive() {
            return Err(Error::Invalid(format!(
                "ray {i} = {v} is not primitive (content {})",
                v.content()
            )));
        }
        if rays.contains(&v) {
            return Err(Error::Invalid(format!("ray {i} = {v} is listed twice")));
        }
        rays.push(v);
    }
    let lookup = |i: usize, what: &str| {
        rays.get(i)
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("{what} refers to ray {i}, but there are {} rays", rays.len())))
    };
    let mut cones = Vec::with_capacity(ff.cones.len());
    for (k, idx) in ff.cones.iter().enumerate() {
        let gens = idx
            .iter()
            .map(|&i| lookup(i, &format!("cone {k}")))
            .collect::<Result<Vec<_>>>()?;
        let cone = Cone::new(ff.rank, gens).map_err(|e| Error::Invalid(format!("cone {k}: {e}")))?;
        if !cone.is_full() {
            return Err(Error::Invalid(format!(
                "cone {k} has {} rays; only full-dimensional simplicial cones are accepted",
                cone.dim()
            )));
        }
        cones.push((idx.clone(), cone));
    }
    let fan = Fan::new(ff.rank, cones.iter().map(|(_, c)| c.clone()))
        .map_err(|e| Error::Invalid(e.to_string()))?;
    for (i, r) in rays.iter().enumerate() {
        if !fan.has_ray(r) {
            return Err(Error::Invalid(format!("ray {i} = {r} is not used by any cone")));
        }
    }
    let marked = ff
        .marked
        .iter()
        .map(|&i| lookup(i, "marked"))
        .collect::<Result<Vec<_>>>()?;
    let p = Characteristic::new(ff.characteristic).map_err(|e| Error::Invalid(e.to_string()))?;
    let marked_fan = MarkedFan::new(fan, marked, p).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(ParsedFan {
        marked_fan,
        rays,
        cones,
    })
}

/// Parses a fan file, keeping the file's ray numbering.
pub fn parse_fan_file(text: &str) -> Result<ParsedFan> {
    let ff: FanFile = serde_json::from_str(text).map_err(|e| parse_error(&e, 0))?;
    semantic(&ff)
}

pub fn parse_marked_fan(text: &str) -> Result<MarkedFan> {
    parse_fan_file(text).map(|p| p.marked_fan)
}

fn fan_file_of(m: &MarkedFan) -> FanFile {
    let rays: Vec<IntegerVector> = m.fan().rays().into_iter().collect();
    let index = |v: &IntegerVector| rays.binary_search(v).expect("ray of the fan");
    FanFile {
        rank: m.fan().rank(),
        rays: rays.iter().map(vector_repr).collect(),
        cones: m
            .fan()
            .cones()
            .iter()
            .map(|c| c.generators().iter().map(index).collect())
            .collect(),
        marked: m.marked().iter().map(index).collect(),
        characteristic: m.characteristic().value(),
    }
}

/// One-line fan file with rays sorted.
pub fn emit_marked_fan(m: &MarkedFan) -> String {
    serde_json::to_string(&fan_file_of(m)).expect("serializable")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct TypeRepr {
    order: u64,
    characters: Vec<u64>,
}

impl TypeRepr {
    fn of(q: &CyclicQuotientType) -> Self {
        TypeRepr {
            order: q.order(),
            characters: q.characters().to_vec(),
        }
    }

    fn build(&self) -> Result<CyclicQuotientType> {
        CyclicQuotientType::new(self.order, &self.characters)
    }
}

fn cone_repr(c: &Cone) -> Vec<VectorRepr> {
    c.generators().iter().map(vector_repr).collect()
}

fn cone_from(rank: usize, r: &[VectorRepr]) -> Result<Cone> {
    Cone::new(rank, r.iter().map(vector_from).collect::<Result<Vec<_>>>()?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct CenterRepr {
    cone: Vec<VectorRepr>,
    #[serde(rename = "type")]
    quotient: TypeRepr,
    divisor: VectorRepr,
    divisor_mark: usize,
    center: VectorRepr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct ChartRepr {
    parent: Vec<VectorRepr>,
    cone: Vec<VectorRepr>,
    #[serde(rename = "type")]
    quotient: TypeRepr,
    tame: bool,
    exceptional_character: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TraceLine {
    Header {
        format: String,
        input_digest: String,
        rank: usize,
        characteristic: u64,
    },
    Step {
        index: usize,
        round: usize,
        phase: String,
        invariant_before: Measure,
        invariant_after: Measure,
        measure_before: Measure,
        measure_after: Measure,
        targets: Vec<CenterRepr>,
        added_rays: Vec<VectorRepr>,
        charts: Vec<ChartRepr>,
    },
    Final {
        cones: Vec<Vec<VectorRepr>>,
        marked: Vec<VectorRepr>,
        smooth: bool,
        measures_decrease: bool,
    },
}

const TRACE_FORMAT: &str = "qres-trace/1";

fn step_line(s: &StepRecord) -> TraceLine {
    TraceLine::Step {
        index: s.index,
        round: s.round,
        phase: s.phase.to_string(),
        invariant_before: s.invariant_before,
        invariant_after: s.invariant_after,
        measure_before: s.measure_before,
        measure_after: s.measure_after,
        targets: s
            .targets
            .iter()
            .map(|c| CenterRepr {
                cone: cone_repr(&c.cone),
                quotient: TypeRepr::of(&c.characters),
                divisor: vector_repr(&c.divisor),
                divisor_mark: c.divisor_mark,
                center: vector_repr(&c.center),
            })
            .collect(),
        added_rays: s.added_rays.iter().map(vector_repr).collect(),
        charts: s
            .charts
            .iter()
            .map(|c| ChartRepr {
                parent: cone_repr(&c.parent),
                cone: cone_repr(&c.cone),
                quotient: TypeRepr::of(&c.characters),
                tame: c.tame,
                exceptional_character: c.exceptional_character,
            })
            .collect(),
    }
}

/// Serializes a trace as JSON Lines, one record per line, newline
/// terminated.
pub fn emit_trace(t: &ResolutionTrace) -> String {
    let mut lines = vec![TraceLine::Header {
        format: TRACE_FORMAT.into(),
        input_digest: t.input_digest.clone(),
        rank: t.final_fan.rank(),
        characteristic: t.characteristic.value(),
    }];
    lines.extend(t.steps.iter().map(step_line));
    lines.push(TraceLine::Final {
        cones: t.final_fan.cones().iter().map(cone_repr).collect(),
        marked: t.final_marked.iter().map(vector_repr).collect(),
        smooth: t.smooth,
        measures_decrease: t.measures_decrease,
    });
    let mut out = String::new();
    for l in &lines {
        out.push_str(&serde_json::to_string(l).expect("serializable"));
        out.push('\n');
    }
    out
}

fn at_line(line: usize, e: Error) -> Error {
    match e {
        Error::Parse { .. } => e,
        other => Error::Parse {
            line,
            column: 1,
            message: other.to_string(),
        },
    }
}

fn build_step(rank: usize, line: TraceLine) -> Result<StepRecord> {
    let TraceLine::Step {
        index,
        round,
        phase,
        invariant_before,
        invariant_after,
        measure_before,
        measure_after,
        targets,
        added_rays,
        charts,
    } = line
    else {
        unreachable!()
    };
    let targets = targets
        .iter()
        .map(|c| {
            let cone = cone_from(rank, &c.cone)?;
            Ok(Center {
                order: c.quotient.order,
                characters: c.quotient.build()?,
                divisor: vector_from(&c.divisor)?,
                divisor_mark: c.divisor_mark,
                center: vector_from(&c.center)?,
                cone,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let charts = charts
        .iter()
        .map(|c| {
            Ok(ChartRecord {
                parent: cone_from(rank, &c.parent)?,
                cone: cone_from(rank, &c.cone)?,
                order: c.quotient.order,
                characters: c.quotient.build()?,
                tame: c.tame,
                exceptional_character: c.exceptional_character,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StepRecord {
        index,
        round,
        phase: phase.parse::<Phase>()?,
        targets,
        added_rays: added_rays.iter().map(vector_from).collect::<Result<Vec<_>>>()?,
        charts,
        invariant_before,
        invariant_after,
        measure_before,
        measure_after,
    })
}

/// Parses a trace written by [`emit_trace`].
pub fn parse_trace(text: &str) -> Result<ResolutionTrace> {
    let mut header: Option<(String, usize, Characteristic)> = None;
    let mut steps = Vec::new();
    let mut last: Option<(Fan, Vec<IntegerVector>, bool, bool)> = None;
    let mut count = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        count += 1;
        let line: TraceLine = serde_json::from_str(raw).map_err(|e| parse_error(&e, i))?;
        if last.is_some() {
            return Err(at_line(lineno, Error::Invalid("records after the final line".into())));
        }
        match line {
            TraceLine::Header {
                format,
                input_digest,
                rank,
                characteristic,
            } => {
                if count != 1 {
                    return Err(at_line(lineno, Error::Invalid("header must come first".into())));
                }
                if format != TRACE_FORMAT {
                    return Err(at_line(lineno, Error::Invalid(format!("unknown trace format {format:?}"))));
                }
                let p = Characteristic::new(characteristic).map_err(|e| at_line(lineno, e))?;
                header = Some((input_digest, rank, p));
            }
            step @ TraceLine::Step { .. } => {
                let rank = header
                    .as_ref()
                    .ok_or_else(|| at_line(lineno, Error::Invalid("missing header".into())))?
                    .1;
                steps.push(build_step(rank, step).map_err(|e| at_line(lineno, e))?);
            }
            TraceLine::Final {
                cones,
                marked,
                smooth,
                measures_decrease,
            } => {
                let rank = header
                    .as_ref()
                    .ok_or_else(|| at_line(lineno, Error::Invalid("missing header".into())))?
                    .1;
                let built = (|| {
                    let fan = Fan::new(
                        rank,
                        cones.iter().map(|c| cone_from(rank, c)).collect::<Result<Vec<_>>>()?,
                    )?;
                    let marked = marked.iter().map(vector_from).collect::<Result<Vec<_>>>()?;
                    Ok((fan, marked, smooth, measures_decrease))
                })()
                .map_err(|e| at_line(lineno, e))?;
                last = Some(built);
            }
        }
    }
    let (input_digest, _, characteristic) =
        header.ok_or_else(|| Error::Invalid("trace has no header".into()))?;
    let (final_fan, final_marked, smooth, measures_decrease) =
        last.ok_or_else(|| Error::Invalid("trace has no final line".into()))?;
    Ok(ResolutionTrace {
        input_digest,
        characteristic,
        steps,
        final_fan,
        final_marked,
        smooth,
        measures_decrease,
    })
}
