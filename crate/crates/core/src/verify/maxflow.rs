use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{IncrementalGraph, VertexId};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxflowResult {
    pub value: u64,
    /// Signed flow per edge, positive from tail to head.
    pub flow: Vec<i64>,
}

struct Dinic<'a> {
    graph: &'a IncrementalGraph,
    out: Vec<Vec<usize>>,
    // residual capacity of arc 2e (tail -> head) and 2e+1 (head -> tail)
    residual: Vec<u64>,
    level: Vec<u32>,
    cursor: Vec<usize>,
}

impl Dinic<'_> {
    fn head(&self, a: usize) -> VertexId {
        let (u, v) = self.graph.endpoints(a / 2);
        if a % 2 == 0 {
            v
        } else {
            u
        }
    }

    fn bfs(&mut self, s: VertexId, t: VertexId) -> bool {
        self.level.fill(u32::MAX);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &a in &self.out[x] {
                let y = self.head(a);
                if self.residual[a] > 0 && self.level[y] == u32::MAX {
                    self.level[y] = self.level[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        self.level[t] != u32::MAX
    }

    fn dfs(&mut self, x: VertexId, t: VertexId, limit: u64) -> u64 {
        if x == t {
            return limit;
        }
        while self.cursor[x] < self.out[x].len() {
            let a = self.out[x][self.cursor[x]];
            let y = self.head(a);
            if self.residual[a] > 0 && self.level[y] == self.level[x] + 1 {
                let pushed = self.dfs(y, t, limit.min(self.residual[a]));
                if pushed > 0 {
                    self.residual[a] -= pushed;
                    self.residual[a ^ 1] += pushed;
                    return pushed;
                }
            }
            self.cursor[x] += 1;
        }
        0
    }
}

/// Maximum `s`-`t` flow in the undirected graph with integral capacities.
pub fn exact_maxflow(graph: &IncrementalGraph, capacities: &[u64], s: VertexId, t: VertexId) -> Result<MaxflowResult> {
    graph.check_vertex(s)?;
    graph.check_vertex(t)?;
    if s == t {
        return Err(Error::InvalidParameter("source and sink coincide".into()));
    }
    if capacities.len() != graph.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.edge_count(),
            got: capacities.len(),
        });
    }
    let mut out = vec![Vec::new(); graph.vertex_count()];
    let mut residual = Vec::with_capacity(2 * capacities.len());
    for (e, (u, v)) in graph.edges().enumerate() {
        out[u].push(2 * e);
        out[v].push(2 * e + 1);
        residual.push(capacities[e]);
        residual.push(capacities[e]);
    }
    let n = graph.vertex_count();
    let mut d = Dinic {
        graph,
        out,
        residual,
        level: vec![0; n],
        cursor: vec![0; n],
    };
    let mut value = 0;
    while d.bfs(s, t) {
        d.cursor.fill(0);
        loop {
            let pushed = d.dfs(s, t, u64::MAX);
            if pushed == 0 {
                break;
            }
            value += pushed;
        }
    }
    let flow = (0..capacities.len())
        .map(|e| capacities[e] as i64 - d.residual[2 * e] as i64)
        .collect();
    Ok(MaxflowResult { value, flow })
}
