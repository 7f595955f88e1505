//! Hidden stable-flow chasing: a witness checker for monotone update sequences.
//!
//! A length increase is logged as a deletion followed by a re-insertion of the
//! same edge in one batch. Stage `0` is the empty graph; stage `t` is the graph
//! after batch `t`.

use alloc::vec;
use alloc::vec::Vec;

use super::MrcUpdate;
use crate::graph::{EdgeId, IncrementalGraph, SparseFlow, VertexId, CIRCULATION_TOL};
use crate::numeric::norm_inf;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogOp {
    Insert {
        edge: EdgeId,
        tail: VertexId,
        head: VertexId,
        gradient: f64,
        length: f64,
    },
    Delete {
        edge: EdgeId,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateLog {
    vertex_count: usize,
    endpoints: Vec<(VertexId, VertexId)>,
    batches: Vec<Vec<LogOp>>,
}

/// Graph state after a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub present: Vec<bool>,
    pub length: Vec<f64>,
    /// Edges inserted or deleted by the batch that produced this stage.
    pub touched: Vec<bool>,
}

impl UpdateLog {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            vertex_count,
            ..Default::default()
        }
    }

    pub fn record(&mut self, update: &MrcUpdate) {
        match *update {
            MrcUpdate::InsertEdge {
                edge,
                tail,
                head,
                gradient,
                length,
            } => {
                if self.endpoints.len() <= edge {
                    self.endpoints.resize(edge + 1, (0, 0));
                }
                self.endpoints[edge] = (tail, head);
                self.batches.push(vec![LogOp::Insert {
                    edge,
                    tail,
                    head,
                    gradient,
                    length,
                }]);
            }
            MrcUpdate::IncreaseLength { edge, length } => {
                let (tail, head) = self.endpoints[edge];
                let gradient = self.gradient_of(edge);
                self.batches.push(vec![
                    LogOp::Delete { edge },
                    LogOp::Insert {
                        edge,
                        tail,
                        head,
                        gradient,
                        length,
                    },
                ]);
            }
        }
    }

    fn gradient_of(&self, edge: EdgeId) -> f64 {
        self.batches
            .iter()
            .rev()
            .flatten()
            .find_map(|op| match *op {
                LogOp::Insert { edge: e, gradient, .. } if e == edge => Some(gradient),
                _ => None,
            })
            .unwrap_or(0.0)
    }

    pub fn batches(&self) -> &[Vec<LogOp>] {
        &self.batches
    }

    pub fn edge_slots(&self) -> usize {
        self.endpoints.len()
    }

    pub fn stage_count(&self) -> usize {
        self.batches.len() + 1
    }

    /// The full multigraph over all edge ids ever inserted.
    pub fn graph(&self) -> IncrementalGraph {
        let mut g = IncrementalGraph::new(self.vertex_count);
        for &(u, v) in &self.endpoints {
            g.add_edge(u, v).expect("logged edges are valid");
        }
        g
    }

    pub fn stages(&self) -> Vec<Stage> {
        let m = self.edge_slots();
        let mut present = vec![false; m];
        let mut length = vec![0.0; m];
        let mut out = vec![Stage {
            present: present.clone(),
            length: length.clone(),
            touched: vec![false; m],
        }];
        for batch in &self.batches {
            let mut touched = vec![false; m];
            for op in batch {
                match *op {
                    LogOp::Insert { edge, length: l, .. } => {
                        present[edge] = true;
                        length[edge] = l;
                        touched[edge] = true;
                    }
                    LogOp::Delete { edge } => {
                        present[edge] = false;
                        touched[edge] = true;
                    }
                }
            }
            out.push(Stage {
                present: present.clone(),
                length: length.clone(),
                touched,
            });
        }
        out
    }
}

/// Which of the four witness conditions held at every stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WitnessReport {
    pub circulation: bool,
    pub width_bound: bool,
    pub width_stable: bool,
    pub total_monotone: bool,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.circulation && self.width_bound && self.width_stable && self.total_monotone
    }
}

/// Checks a hidden circulation sequence and width sequence against the log.
///
/// `circulations[t]` and `widths[t]` are indexed by edge id over all slots.
pub fn hsfc_witness_check(
    log: &UpdateLog,
    circulations: &[Vec<f64>],
    widths: &[Vec<f64>],
) -> Result<WitnessReport> {
    let stages = log.stages();
    let m = log.edge_slots();
    for seq in [circulations, widths] {
        if seq.len() != stages.len() {
            return Err(Error::DimensionMismatch {
                expected: stages.len(),
                got: seq.len(),
            });
        }
        if let Some(bad) = seq.iter().find(|v| v.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, got: bad.len() });
        }
    }
    let graph = log.graph();
    let mut report = WitnessReport {
        circulation: true,
        width_bound: true,
        width_stable: true,
        total_monotone: true,
    };
    let mut prev_total = 0.0;
    for (t, stage) in stages.iter().enumerate() {
        let c = &circulations[t];
        let w = &widths[t];
        let off_graph = (0..m).any(|e| !stage.present[e] && c[e] != 0.0);
        let net = graph.net_demand(c)?;
        let scale = 1.0 + norm_inf(c);
        if off_graph || net.iter().any(|x| x.abs() > CIRCULATION_TOL * scale) {
            report.circulation = false;
        }
        for e in (0..m).filter(|&e| stage.present[e]) {
            if (stage.length[e] * c[e]).abs() > w[e] * (1.0 + 1e-12) + 1e-300 {
                report.width_bound = false;
            }
            // earliest stage since which e has been untouched
            let mut since = t;
            while since > 0 && !stages[since].touched[e] {
                since -= 1;
            }
            for earlier in since..t {
                if stages[earlier].present[e] && w[e] > 2.0 * widths[earlier][e] * (1.0 + 1e-12) {
                    report.width_stable = false;
                }
            }
        }
        let total: f64 = (0..m).filter(|&e| stage.present[e]).map(|e| w[e]).sum();
        if total < prev_total * (1.0 - 1e-12) {
            report.total_monotone = false;
        }
        prev_total = total;
    }
    Ok(report)
}

/// The canonical witness for a fixed hidden circulation `c_star`: the hidden
/// circulation is `c_star` once its support is present and zero before, and the
/// width of an edge is `|l_e c*_e|` on the support of `c_star`, zero elsewhere.
pub fn canonical_witness(log: &UpdateLog, c_star: &SparseFlow) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let m = log.edge_slots();
    let dense = c_star.to_dense(m);
    let mut circs = Vec::new();
    let mut widths = Vec::new();
    for stage in log.stages() {
        let supported = (0..m).all(|e| dense[e] == 0.0 || stage.present[e]);
        circs.push(if supported { dense.clone() } else { vec![0.0; m] });
        widths.push(
            (0..m)
                .map(|e| {
                    if stage.present[e] {
                        (stage.length[e] * dense[e]).abs()
                    } else {
                        0.0
                    }
                })
                .collect(),
        );
    }
    (circs, widths)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Square 0-1-2-3 with a chord; c* runs around the square.
    fn four_edge_log() -> (UpdateLog, SparseFlow) {
        let mut log = UpdateLog::new(4);
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0)];
        for (e, &(u, v)) in edges.iter().enumerate() {
            log.record(&MrcUpdate::InsertEdge {
                edge: e,
                tail: u,
                head: v,
                gradient: -1.0,
                length: 1.0,
            });
        }
        log.record(&MrcUpdate::IncreaseLength { edge: 1, length: 2.0 });
        log.record(&MrcUpdate::IncreaseLength { edge: 1, length: 5.0 });
        log.record(&MrcUpdate::IncreaseLength { edge: 3, length: 1.5 });
        let c = SparseFlow(vec![(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)]);
        (log, c)
    }

    #[test]
    fn canonical_witness_passes() {
        let (log, c) = four_edge_log();
        assert_eq!(log.batches()[4].len(), 2);
        let (circs, widths) = canonical_witness(&log, &c);
        let report = hsfc_witness_check(&log, &circs, &widths).unwrap();
        assert!(report.passed(), "{report:?}");
        // before the last edge arrives the hidden circulation is zero
        assert!(circs[3].iter().all(|&x| x == 0.0));
        assert_eq!(circs[4][0], 1.0);
    }

    #[test]
    fn width_below_flow_length_fails() {
        let (log, c) = four_edge_log();
        let (circs, mut widths) = canonical_witness(&log, &c);
        widths[6][1] *= 0.5;
        let report = hsfc_witness_check(&log, &circs, &widths).unwrap();
        assert!(!report.width_bound);
    }

    #[test]
    fn halving_widths_on_an_untouched_edge_fails() {
        let (log, c) = four_edge_log();
        let (circs, mut widths) = canonical_witness(&log, &c);
        let last = widths.len() - 1;
        widths[last][0] *= 0.5;
        assert!(!hsfc_witness_check(&log, &circs, &widths).unwrap().passed());
    }

    #[test]
    fn each_mutation_breaks_exactly_its_item() {
        let (log, c) = four_edge_log();
        let (circs, widths) = canonical_witness(&log, &c);
        let last = widths.len() - 1;

        let mut bad_c = circs.clone();
        bad_c[last][2] += 0.5;
        let mut wide = widths.clone();
        wide[last][2] *= 2.0; // keep the width bound satisfied
        let r = hsfc_witness_check(&log, &bad_c, &wide).unwrap();
        assert!(!r.circulation && r.width_bound && r.width_stable && r.total_monotone);

        let mut narrow = widths.clone();
        narrow[4][0] = 0.5;
        narrow[4][2] += 0.5; // keep the total unchanged
        let r = hsfc_witness_check(&log, &circs, &narrow).unwrap();
        assert!(r.circulation && !r.width_bound && r.total_monotone);

        let mut jump = widths.clone();
        jump[last][0] *= 3.0;
        let r = hsfc_witness_check(&log, &circs, &jump).unwrap();
        assert!(r.circulation && r.width_bound && !r.width_stable && r.total_monotone);
    }

    #[test]
    fn index_mismatch_is_an_error() {
        let (log, c) = four_edge_log();
        let (circs, widths) = canonical_witness(&log, &c);
        assert!(hsfc_witness_check(&log, &circs[1..], &widths).is_err());
    }
}
