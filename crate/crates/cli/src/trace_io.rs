//! Trace files.
//!
//! A trace is newline-delimited JSON: one header record, then for every
//! simulated round a world record, one record per agent and one exchange
//! record, in that order. The writer emits keys in sorted order and floats
//! with 17 significant digits, so a trace has exactly one serialized form
//! and write-read-write reproduces a file byte for byte.

use std::fs;
use std::path::Path;

use satrack_core::{
    AgentStepLog, MessageLog, Mode, OverlapLog, PayloadLog, StepLog, Trace, TruthLog,
};
use serde::Deserialize;

/// Format version, MAJOR.MINOR. The reader accepts any minor version of a
/// major it knows; unknown majors are rejected outright.
pub const SCHEMA_VERSION: &str = "1.0";

const KNOWN_MAJOR: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("cannot {op} {path}")]
    Io {
        op: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trace line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("unsupported trace schema version {version}; this build reads major {KNOWN_MAJOR}")]
    UnsupportedSchema { version: String },
    #[error("non-finite {field} cannot be serialized")]
    NonFinite { field: &'static str },
}

/// Serializes a trace to its canonical byte form.
pub fn write_trace(trace: &Trace, seed: u64) -> Result<String, TraceError> {
    check_finite(trace)?;
    let mut out = String::new();
    out.push_str(&format!(
        "{{\"kind\":\"header\",\"schema_version\":\"{SCHEMA_VERSION}\",\"seed\":{seed}}}\n"
    ));
    for step in &trace.steps {
        emit_world(&mut out, step);
        for a in &step.agents {
            emit_agent(&mut out, step.step, a);
        }
        emit_exchange(&mut out, step);
    }
    Ok(out)
}

pub fn write_trace_file(trace: &Trace, seed: u64, path: &Path) -> Result<(), TraceError> {
    let text = write_trace(trace, seed)?;
    fs::write(path, text).map_err(|source| TraceError::Io {
        op: "write",
        path: path.display().to_string(),
        source,
    })
}

pub fn read_trace_file(path: &Path) -> Result<(u64, Trace), TraceError> {
    let text = fs::read_to_string(path).map_err(|source| TraceError::Io {
        op: "read",
        path: path.display().to_string(),
        source,
    })?;
    read_trace(&text)
}

/// Parses a trace, enforcing the header version and the per-round record
/// order the writer produces.
pub fn read_trace(text: &str) -> Result<(u64, Trace), TraceError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(TraceError::Malformed {
        line: 1,
        detail: "empty file, expected a header record".to_string(),
    })?;
    let header: HeaderRec = parse_line(first, 1)?;
    if header.kind != "header" {
        return Err(TraceError::Malformed {
            line: 1,
            detail: format!("expected a header record, found kind {:?}", header.kind),
        });
    }
    let major = header.schema_version.split('.').next().unwrap_or("");
    if major.is_empty() || major.parse::<u64>().is_err() {
        return Err(TraceError::Malformed {
            line: 1,
            detail: format!(
                "schema_version {:?} is not MAJOR.MINOR",
                header.schema_version
            ),
        });
    }
    if major != KNOWN_MAJOR {
        return Err(TraceError::UnsupportedSchema {
            version: header.schema_version,
        });
    }

    let mut steps: Vec<StepLog> = Vec::new();
    let mut cur: Option<Pending> = None;
    for (i, text) in lines {
        let line = i + 1;
        let probe: KindProbe = parse_line(text, line)?;
        match probe.kind.as_str() {
            "world" => {
                if let Some(p) = cur.take() {
                    steps.push(p.finish(line)?);
                }
                let rec: WorldRec = parse_line(text, line)?;
                let expected = steps.len() + 1;
                if rec.step != expected {
                    return Err(TraceError::Malformed {
                        line,
                        detail: format!("expected step {expected}, found step {}", rec.step),
                    });
                }
                cur = Some(Pending {
                    step: StepLog {
                        step: rec.step,
                        truth: rec
                            .targets
                            .into_iter()
                            .map(|t| TruthLog {
                                id: t.id,
                                state: t.state,
                            })
                            .collect(),
                        agents: Vec::new(),
                        messages: Vec::new(),
                        overlaps: Vec::new(),
                        union_coverage: rec.union_coverage,
                    },
                    exchange_seen: false,
                });
            }
            "agent" => {
                let rec: AgentRec = parse_line(text, line)?;
                let p = in_step(&mut cur, rec.step, line, "agent")?;
                if p.exchange_seen {
                    return Err(TraceError::Malformed {
                        line,
                        detail: "agent record after the step's exchange record".to_string(),
                    });
                }
                p.step.agents.push(AgentStepLog {
                    id: rec.id,
                    position: rec.position,
                    mode: rec.mode.into(),
                    n_hat: rec.n_hat,
                    estimates: rec.estimates,
                    action_index: rec.action_index,
                    action: rec.action,
                    coverage: rec.coverage,
                    gains: rec.gains,
                });
            }
            "exchange" => {
                let rec: ExchangeRec = parse_line(text, line)?;
                let p = in_step(&mut cur, rec.step, line, "exchange")?;
                if p.exchange_seen {
                    return Err(TraceError::Malformed {
                        line,
                        detail: "duplicate exchange record".to_string(),
                    });
                }
                p.step.messages = rec
                    .messages
                    .into_iter()
                    .map(|m| MessageLog {
                        from: m.from,
                        to: m.to,
                        payload: m.payload.into(),
                    })
                    .collect();
                p.step.overlaps = rec
                    .overlaps
                    .into_iter()
                    .map(|o| OverlapLog {
                        a: o.a,
                        b: o.b,
                        score: o.score,
                        score_sum: o.score_sum,
                        run_len: o.run_len,
                        exited: o.exited,
                    })
                    .collect();
                p.exchange_seen = true;
            }
            "header" => {
                return Err(TraceError::Malformed {
                    line,
                    detail: "duplicate header record".to_string(),
                });
            }
            other => {
                return Err(TraceError::Malformed {
                    line,
                    detail: format!("unknown record kind {other:?}"),
                });
            }
        }
    }
    if let Some(p) = cur.take() {
        let line = text.lines().count();
        steps.push(p.finish(line)?);
    }
    Ok((header.seed, Trace { steps }))
}

struct Pending {
    step: StepLog,
    exchange_seen: bool,
}

impl Pending {
    fn finish(self, line: usize) -> Result<StepLog, TraceError> {
        if !self.exchange_seen {
            return Err(TraceError::Malformed {
                line,
                detail: format!("step {} ended without an exchange record", self.step.step),
            });
        }
        Ok(self.step)
    }
}

fn in_step<'a>(
    cur: &'a mut Option<Pending>,
    step: usize,
    line: usize,
    kind: &str,
) -> Result<&'a mut Pending, TraceError> {
    let Some(p) = cur.as_mut() else {
        return Err(TraceError::Malformed {
            line,
            detail: format!("{kind} record before any world record"),
        });
    };
    if p.step.step != step {
        return Err(TraceError::Malformed {
            line,
            detail: format!("{kind} record for step {step} inside step {}", p.step.step),
        });
    }
    Ok(p)
}

fn parse_line<'a, T: Deserialize<'a>>(text: &'a str, line: usize) -> Result<T, TraceError> {
    serde_json::from_str(text).map_err(|e| TraceError::Malformed {
        line,
        detail: e.to_string(),
    })
}

// 17 significant digits: enough for every f64 to survive a parse round trip,
// so equal values have equal spellings and vice versa.
fn jf(x: f64) -> String {
    format!("{x:.16e}")
}

fn jpoint(p: &[f64; 2]) -> String {
    format!("[{},{}]", jf(p[0]), jf(p[1]))
}

fn jpoints(ps: &[[f64; 2]]) -> String {
    let mut s = String::from("[");
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&jpoint(p));
    }
    s.push(']');
    s
}

fn jfloats(xs: &[f64]) -> String {
    let mut s = String::from("[");
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&jf(*x));
    }
    s.push(']');
    s
}

fn mode_str(m: Mode) -> &'static str {
    match m {
        Mode::Search => "search",
        Mode::Track => "track",
    }
}

fn emit_world(out: &mut String, step: &StepLog) {
    out.push_str(&format!(
        "{{\"kind\":\"world\",\"step\":{},\"targets\":[",
        step.step
    ));
    for (i, t) in step.truth.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"id\":{},\"state\":[{},{},{},{}]}}",
            t.id,
            jf(t.state[0]),
            jf(t.state[1]),
            jf(t.state[2]),
            jf(t.state[3])
        ));
    }
    out.push_str(&format!(
        "],\"union_coverage\":{}}}\n",
        jf(step.union_coverage)
    ));
}

fn emit_agent(out: &mut String, step: usize, a: &AgentStepLog) {
    out.push_str(&format!(
        "{{\"action\":{},\"action_index\":{},\"coverage\":{},\"estimates\":{},\"gains\":{},\"id\":{},\"kind\":\"agent\",\"mode\":\"{}\",\"n_hat\":{},\"position\":{},\"step\":{}}}\n",
        jpoint(&a.action),
        a.action_index,
        jf(a.coverage),
        jpoints(&a.estimates),
        jfloats(&a.gains),
        a.id,
        mode_str(a.mode),
        a.n_hat,
        jpoint(&a.position),
        step,
    ));
}

fn emit_exchange(out: &mut String, step: &StepLog) {
    out.push_str("{\"kind\":\"exchange\",\"messages\":[");
    for (i, m) in step.messages.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let payload = match &m.payload {
            PayloadLog::Mode(mode) => {
                format!("{{\"kind\":\"mode\",\"mode\":\"{}\"}}", mode_str(*mode))
            }
            PayloadLog::SearchGrid(values) => {
                format!(
                    "{{\"kind\":\"search_grid\",\"values\":{}}}",
                    jfloats(values)
                )
            }
            PayloadLog::PredictedStates(states) => format!(
                "{{\"kind\":\"predicted_states\",\"states\":{}}}",
                jpoints(states)
            ),
        };
        out.push_str(&format!(
            "{{\"from\":{},\"payload\":{},\"to\":{}}}",
            m.from, payload, m.to
        ));
    }
    out.push_str("],\"overlaps\":[");
    for (i, o) in step.overlaps.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let exited = match o.exited {
            Some(id) => id.to_string(),
            None => "null".to_string(),
        };
        out.push_str(&format!(
            "{{\"a\":{},\"b\":{},\"exited\":{},\"run_len\":{},\"score\":{},\"score_sum\":{}}}",
            o.a,
            o.b,
            exited,
            o.run_len,
            jf(o.score),
            jf(o.score_sum)
        ));
    }
    out.push_str(&format!("],\"step\":{}}}\n", step.step));
}

fn check_finite(trace: &Trace) -> Result<(), TraceError> {
    let ok = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
    for step in &trace.steps {
        if !step.union_coverage.is_finite() {
            return Err(TraceError::NonFinite {
                field: "union_coverage",
            });
        }
        for t in &step.truth {
            if !ok(&t.state) {
                return Err(TraceError::NonFinite {
                    field: "target state",
                });
            }
        }
        for a in &step.agents {
            if !ok(&a.position) || !ok(&a.action) || !a.coverage.is_finite() {
                return Err(TraceError::NonFinite {
                    field: "agent kinematics",
                });
            }
            if !a.estimates.iter().all(|e| ok(e)) || !ok(&a.gains) {
                return Err(TraceError::NonFinite {
                    field: "agent estimates",
                });
            }
        }
        for m in &step.messages {
            let fine = match &m.payload {
                PayloadLog::Mode(_) => true,
                PayloadLog::SearchGrid(values) => ok(values),
                PayloadLog::PredictedStates(states) => states.iter().all(|s| ok(s)),
            };
            if !fine {
                return Err(TraceError::NonFinite {
                    field: "message payload",
                });
            }
        }
        for o in &step.overlaps {
            if !o.score.is_finite() || !o.score_sum.is_finite() {
                return Err(TraceError::NonFinite {
                    field: "overlap score",
                });
            }
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct KindProbe {
    kind: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRec {
    kind: String,
    schema_version: String,
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldRec {
    #[serde(rename = "kind")]
    _kind: String,
    step: usize,
    targets: Vec<TargetRec>,
    union_coverage: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetRec {
    id: usize,
    state: [f64; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentRec {
    action: [f64; 2],
    action_index: usize,
    coverage: f64,
    estimates: Vec<[f64; 2]>,
    gains: Vec<f64>,
    id: usize,
    #[serde(rename = "kind")]
    _kind: String,
    mode: ModeRec,
    n_hat: usize,
    position: [f64; 2],
    step: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExchangeRec {
    #[serde(rename = "kind")]
    _kind: String,
    messages: Vec<MessageRec>,
    overlaps: Vec<OverlapRec>,
    step: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageRec {
    from: usize,
    payload: PayloadRec,
    to: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OverlapRec {
    a: usize,
    b: usize,
    exited: Option<usize>,
    run_len: usize,
    score: f64,
    score_sum: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum ModeRec {
    Search,
    Track,
}

impl From<ModeRec> for Mode {
    fn from(m: ModeRec) -> Self {
        match m {
            ModeRec::Search => Mode::Search,
            ModeRec::Track => Mode::Track,
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PayloadRec {
    Mode { mode: ModeRec },
    SearchGrid { values: Vec<f64> },
    PredictedStates { states: Vec<[f64; 2]> },
}

impl From<PayloadRec> for PayloadLog {
    fn from(p: PayloadRec) -> Self {
        match p {
            PayloadRec::Mode { mode } => PayloadLog::Mode(mode.into()),
            PayloadRec::SearchGrid { values } => PayloadLog::SearchGrid(values),
            PayloadRec::PredictedStates { states } => PayloadLog::PredictedStates(states),
        }
    }
}
