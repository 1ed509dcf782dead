//! Post-run metrics computed from a trace alone.

use std::collections::BTreeMap;

use nalgebra::Point2;
use satrack_core::{ospa, OverlapConfig, Trace};
use serde::Serialize;

/// One resolved pairwise overlap: `agent` dropped to search mode at `step`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExitEvent {
    pub agent: usize,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Fraction of search cells seen recently by at least one agent, per
    /// round.
    pub coverage: Vec<f64>,
    /// Rounds from each target's birth to the first round, strictly after
    /// the birth round, where any agent's extracted states contain a point
    /// within the OSPA cutoff of the target's true position. None when the
    /// target is never picked up. The birth round itself cannot count: an
    /// estimate needs at least one full update behind it.
    pub detection_latency: BTreeMap<usize, Option<usize>>,
    /// OSPA distance between the union of all agents' extracted states and
    /// the alive targets' positions, per round.
    pub ospa: Vec<f64>,
    /// Confirmed same-target overlaps and the agents that yielded.
    pub overlap_exits: Vec<ExitEvent>,
}

/// Computes the report. `ocfg.cutoff` doubles as the OSPA cutoff and the
/// detection radius.
pub fn compute_metrics(trace: &Trace, ocfg: &OverlapConfig) -> MetricsReport {
    let c = ocfg.cutoff;
    let mut ospa_series = Vec::with_capacity(trace.steps.len());
    let mut coverage = Vec::with_capacity(trace.steps.len());
    let mut overlap_exits = Vec::new();
    let mut births: BTreeMap<usize, usize> = BTreeMap::new();

    for step in &trace.steps {
        let truth: Vec<Point2<f64>> = step
            .truth
            .iter()
            .map(|t| Point2::new(t.state[0], t.state[2]))
            .collect();
        let estimates: Vec<Point2<f64>> = step
            .agents
            .iter()
            .flat_map(|a| a.estimates.iter().map(|e| Point2::new(e[0], e[1])))
            .collect();
        ospa_series.push(ospa(&estimates, &truth, c));
        coverage.push(step.union_coverage);
        for t in &step.truth {
            births.entry(t.id).or_insert(step.step);
        }
        for o in &step.overlaps {
            if let Some(agent) = o.exited {
                overlap_exits.push(ExitEvent {
                    agent,
                    step: step.step,
                });
            }
        }
    }

    let mut detection_latency: BTreeMap<usize, Option<usize>> = BTreeMap::new();
    for (&id, &birth) in &births {
        let mut latency = None;
        'steps: for step in &trace.steps {
            if step.step <= birth {
                continue;
            }
            let Some(t) = step.truth.iter().find(|t| t.id == id) else {
                break;
            };
            let pos = Point2::new(t.state[0], t.state[2]);
            for a in &step.agents {
                for e in &a.estimates {
                    if (Point2::new(e[0], e[1]) - pos).norm() <= c {
                        latency = Some(step.step - birth);
                        break 'steps;
                    }
                }
            }
        }
        detection_latency.insert(id, latency);
    }

    MetricsReport {
        coverage,
        detection_latency,
        ospa: ospa_series,
        overlap_exits,
    }
}
