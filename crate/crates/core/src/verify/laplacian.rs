use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::graph::{DemandTracker, IncrementalGraph, VertexId};
use crate::{Error, Result};

/// Solves `B^T diag(conductance) B x = demand` with one grounded vertex
/// (potential 0) per connected component. Returns `None` when the demand of
/// some component does not sum to zero within `1e-9 * ||d||_1`.
pub fn grounded_solve(graph: &IncrementalGraph, conductance: &[f64], demand: &[f64]) -> Option<Vec<f64>> {
    let n = graph.vertex_count();
    let mut dsu = DemandTracker::new(demand);
    for (u, v) in graph.edges() {
        dsu.union(u, v);
    }
    if !dsu.routable() {
        return None;
    }
    // index every vertex that is not the grounded representative
    let mut index = vec![usize::MAX; n];
    let mut size = 0;
    for v in 0..n {
        if dsu.find(v) != v {
            index[v] = size;
            size += 1;
        }
    }
    let mut lap = DMatrix::<f64>::zeros(size, size);
    for (e, (u, v)) in graph.edges().enumerate() {
        let c = conductance[e];
        let (iu, iv) = (index[u], index[v]);
        if iu != usize::MAX {
            lap[(iu, iu)] += c;
        }
        if iv != usize::MAX {
            lap[(iv, iv)] += c;
        }
        if iu != usize::MAX && iv != usize::MAX {
            lap[(iu, iv)] -= c;
            lap[(iv, iu)] -= c;
        }
    }
    let mut rhs = DVector::<f64>::zeros(size);
    for v in 0..n {
        if index[v] != usize::MAX {
            rhs[index[v]] = demand[v];
        }
    }
    let x = solve_spd(lap, rhs)?;
    Some((0..n).map(|v| if index[v] == usize::MAX { 0.0 } else { x[index[v]] }).collect())
}

// Conductances spanning many orders of magnitude can make the plain
// factorization lose definiteness to rounding. Symmetric diagonal scaling
// usually restores it; full-pivot LU is the last resort.
fn solve_spd(lap: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    let finite = |x: DVector<f64>| x.iter().all(|v| v.is_finite()).then_some(x);
    if let Some(x) = lap.clone().cholesky().map(|c| c.solve(&rhs)).and_then(finite) {
        return Some(x);
    }
    let scale = DVector::from_iterator(lap.nrows(), lap.diagonal().iter().map(|d| 1.0 / libm::sqrt(*d)));
    if scale.iter().all(|s| s.is_finite()) {
        let scaled = DMatrix::from_fn(lap.nrows(), lap.ncols(), |i, j| scale[i] * lap[(i, j)] * scale[j]);
        let b = rhs.component_mul(&scale);
        if let Some(y) = scaled.cholesky().map(|c| c.solve(&b)).and_then(finite) {
            return Some(y.component_mul(&scale));
        }
    }
    lap.full_piv_lu().solve(&rhs).and_then(finite)
}

/// `R_eff(s, t)` of the resistor network.
pub fn effective_resistance(graph: &IncrementalGraph, resistances: &[f64], s: VertexId, t: VertexId) -> Result<f64> {
    graph.check_vertex(s)?;
    graph.check_vertex(t)?;
    if resistances.len() != graph.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.edge_count(),
            got: resistances.len(),
        });
    }
    if s == t {
        return Ok(0.0);
    }
    let mut demand = vec![0.0; graph.vertex_count()];
    demand[s] = -1.0;
    demand[t] = 1.0;
    let conductance: Vec<f64> = resistances.iter().map(|r| 1.0 / r).collect();
    let phi = grounded_solve(graph, &conductance, &demand).ok_or(Error::Disconnected(s, t))?;
    // the flow C B phi runs from s up to t, and its energy is phi_t - phi_s
    Ok(phi[t] - phi[s])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> IncrementalGraph {
        let mut g = IncrementalGraph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v).unwrap();
        }
        g
    }

    #[test]
    fn series_and_parallel_laws() {
        let g = graph(2, &[(0, 1)]);
        assert!((effective_resistance(&g, &[1.0], 0, 1).unwrap() - 1.0).abs() < 1e-12);
        let g = graph(2, &[(0, 1), (0, 1)]);
        assert!((effective_resistance(&g, &[1.0, 1.0], 0, 1).unwrap() - 0.5).abs() < 1e-12);
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert!((effective_resistance(&g, &[1.0, 1.0], 0, 2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wheatstone_bridge() {
        // balanced bridge: the middle resistor carries no current
        let g = graph(4, &[(0, 1), (0, 2), (1, 3), (2, 3), (1, 2)]);
        let r = effective_resistance(&g, &[1.0, 1.0, 1.0, 1.0, 7.0], 0, 3).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_pair_is_an_error() {
        let g = graph(3, &[(0, 1)]);
        assert_eq!(effective_resistance(&g, &[1.0], 0, 2), Err(Error::Disconnected(0, 2)));
    }
}
