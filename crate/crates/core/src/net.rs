//! Communication graphs, TTL flooding with message accounting, and
//! Metropolis-Hastings consensus weights.
//!
//! Nodes are 0-based; node `i` hosts agent `i + 1`.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream, Purpose};
use crate::sensing::BroadcastMsg;
use crate::AgentId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("invalid graph parameters: {0}")]
    InvalidParameters(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown topology `{0}`")]
    UnknownTopology(String),
}

/// Undirected simple graph as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, NetError> {
        let mut sets = vec![BTreeSet::new(); n];
        for (a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(NetError::InvalidParameters(format!("bad edge ({a}, {b})")));
            }
            sets[a].insert(b);
            sets[b].insert(a);
        }
        Ok(Graph {
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Hop distances from `src`; `None` for unreachable nodes.
    pub fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::from([src]);
        dist[src] = Some(0);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("queued nodes have a distance");
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || self.bfs(0).iter().all(Option::is_some)
    }

    /// Largest BFS eccentricity.
    pub fn diameter(&self) -> Result<usize, NetError> {
        let mut best = 0;
        for s in 0..self.n() {
            for d in self.bfs(s) {
                best = best.max(d.ok_or(NetError::Disconnected)?);
            }
        }
        Ok(best)
    }
}

/// Cycle on `n >= 3` nodes.
pub fn ring(n: usize) -> Result<Graph, NetError> {
    if n < 3 {
        return Err(NetError::InvalidParameters(format!(
            "ring needs n >= 3, got {n}"
        )));
    }
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Node 0 joined to every other node.
pub fn star(n: usize) -> Result<Graph, NetError> {
    if n < 2 {
        return Err(NetError::InvalidParameters(format!(
            "star needs n >= 2, got {n}"
        )));
    }
    Graph::from_edges(n, (1..n).map(|i| (0, i)))
}

/// Watts-Strogatz graph: a ring lattice of even degree `k`, each lattice
/// edge rewired with probability `p` to a uniform non-neighbour. Redrawn from
/// the next sub-stream until connected.
pub fn small_world(n: usize, k: usize, p: f64, seed: u64) -> Result<Graph, NetError> {
    if k < 2 || k % 2 == 1 || n <= k || !(0.0..=1.0).contains(&p) {
        return Err(NetError::InvalidParameters(format!(
            "small_world(n={n}, k={k}, p={p})"
        )));
    }
    for attempt in 0u64.. {
        let mut rng = stream(seed, attempt, 0, Purpose::Graph);
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for i in 0..n {
            for j in 1..=k / 2 {
                let t = (i + j) % n;
                sets[i].insert(t);
                sets[t].insert(i);
            }
        }
        for j in 1..=k / 2 {
            for i in 0..n {
                let t = (i + j) % n;
                if !sets[i].contains(&t) || rng.random::<f64>() >= p {
                    continue;
                }
                if sets[i].len() >= n - 1 {
                    continue;
                }
                let new = loop {
                    let c = rng.random_range(0..n);
                    if c != i && !sets[i].contains(&c) {
                        break c;
                    }
                };
                sets[i].remove(&t);
                sets[t].remove(&i);
                sets[i].insert(new);
                sets[new].insert(i);
            }
        }
        let g = Graph {
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        };
        if g.is_connected() {
            return Ok(g);
        }
    }
    unreachable!("attempt counter is unbounded")
}

/// Graph family selector used by configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Topology {
    Ring,
    SmallWorld { mean_degree: usize, rewire: f64 },
}

impl Topology {
    pub fn name(&self) -> &'static str {
        match self {
            Topology::Ring => "ring",
            Topology::SmallWorld { .. } => "smallworld",
        }
    }

    pub fn build(&self, n: usize, seed: u64) -> Result<Graph, NetError> {
        match *self {
            Topology::Ring => ring(n),
            Topology::SmallWorld {
                mean_degree,
                rewire,
            } => small_world(n, mean_degree, rewire, seed),
        }
    }
}

impl FromStr for Topology {
    type Err = NetError;
    fn from_str(s: &str) -> Result<Self, NetError> {
        match s.to_ascii_lowercase().as_str() {
            "ring" => Ok(Topology::Ring),
            "smallworld" | "small-world" | "small_world" => Ok(Topology::SmallWorld {
                mean_degree: 4,
                rewire: 0.1,
            }),
            other => Err(NetError::UnknownTopology(other.into())),
        }
    }
}

/// Sparse symmetric doubly-stochastic mixing matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusWeights {
    rows: Vec<Vec<(usize, f64)>>,
}

impl ConsensusWeights {
    /// `w_ij = 1/(1 + max(d_i, d_j))` on edges, remainder on the diagonal.
    pub fn metropolis_hastings(g: &Graph) -> Result<Self, NetError> {
        if !g.is_connected() {
            return Err(NetError::Disconnected);
        }
        let rows = (0..g.n())
            .map(|i| {
                let mut row: Vec<(usize, f64)> = g
                    .neighbors(i)
                    .iter()
                    .map(|&j| (j, 1.0 / (1.0 + g.degree(i).max(g.degree(j)) as f64)))
                    .collect();
                let off: f64 = row.iter().map(|e| e.1).sum();
                row.push((i, 1.0 - off));
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        Ok(ConsensusWeights { rows })
    }

    /// Uniform averaging over all nodes (complete graph).
    pub fn exact_average(n: usize) -> Self {
        let w = 1.0 / n as f64;
        ConsensusWeights {
            rows: (0..n).map(|_| (0..n).map(|j| (j, w)).collect()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `x' = W x` applied to each coordinate of per-node vectors.
    pub fn mix(&self, values: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, NetError> {
        if values.len() != self.n() {
            return Err(NetError::DimensionMismatch {
                expected: self.n(),
                got: values.len(),
            });
        }
        let dim = values.first().map_or(0, Vec::len);
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(NetError::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| {
                let mut out = vec![0.0; dim];
                for &(j, w) in row {
                    for (o, x) in out.iter_mut().zip(&values[j]) {
                        *o += w * x;
                    }
                }
                out
            })
            .collect())
    }
}

#[derive(Clone, Debug)]
struct Packet {
    from: usize,
    to: usize,
    msg: BroadcastMsg,
}

/// Lockstep message transport: whatever is sent during step `t` is delivered
/// by the `deliver` call of step `t + 1`.
#[derive(Clone, Debug)]
pub struct MessageBus {
    graph: Graph,
    in_flight: Vec<Packet>,
    seen: HashSet<(usize, AgentId, usize)>,
    flood_messages: u64,
    consensus_messages: u64,
}

impl MessageBus {
    pub fn new(graph: Graph) -> Self {
        MessageBus {
            graph,
            in_flight: Vec::new(),
            seen: HashSet::new(),
            flood_messages: 0,
            consensus_messages: 0,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Start flooding `msg` from `node` to all of its neighbours.
    pub fn originate(&mut self, node: usize, msg: BroadcastMsg) {
        assert!(msg.ttl >= 1, "flood needs ttl >= 1");
        self.seen.insert((node, msg.sender, msg.timestamp));
        for &to in self.graph.neighbors(node) {
            self.in_flight.push(Packet {
                from: node,
                to,
                msg: msg.clone(),
            });
            self.flood_messages += 1;
        }
    }

    /// Deliver packets sent last step. Each node keeps the first copy of a
    /// message id, with `ttl` reduced by the hop, and forwards it while hops
    /// remain to every neighbour it did not hear it from this step.
    pub fn deliver(&mut self) -> Vec<(usize, BroadcastMsg)> {
        let mut packets = std::mem::take(&mut self.in_flight);
        packets.sort_by_key(|p| (p.to, p.msg.sender, p.msg.timestamp, p.from));
        let mut receipts = Vec::new();
        let mut i = 0;
        while i < packets.len() {
            let key = (
                packets[i].to,
                packets[i].msg.sender,
                packets[i].msg.timestamp,
            );
            let mut j = i;
            while j < packets.len()
                && (
                    packets[j].to,
                    packets[j].msg.sender,
                    packets[j].msg.timestamp,
                ) == key
            {
                j += 1;
            }
            if self.seen.insert(key) {
                let node = key.0;
                let mut msg = packets[i].msg.clone();
                msg.ttl -= 1;
                if msg.ttl >= 1 {
                    let senders: Vec<usize> = packets[i..j].iter().map(|p| p.from).collect();
                    for &to in self.graph.neighbors(node) {
                        if !senders.contains(&to) {
                            self.in_flight.push(Packet {
                                from: node,
                                to,
                                msg: msg.clone(),
                            });
                            self.flood_messages += 1;
                        }
                    }
                }
                receipts.push((node, msg));
            }
            i = j;
        }
        receipts
    }

    pub fn is_idle(&self) -> bool {
        self.in_flight.is_empty()
    }

    /// Account one consensus round: one payload each way over every edge.
    pub fn count_consensus_round(&mut self) {
        self.consensus_messages += 2 * self.graph.edge_count() as u64;
    }

    pub fn flood_messages(&self) -> u64 {
        self.flood_messages
    }

    pub fn consensus_messages(&self) -> u64 {
        self.consensus_messages
    }

    pub fn total_messages(&self) -> u64 {
        self.flood_messages + self.consensus_messages
    }
}

/// Who received a single flood and when, and how many edge messages it cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FloodRecord {
    /// Step of first receipt per node (the origin at step 0).
    pub received_at: Vec<Option<usize>>,
    pub messages: u64,
}

/// Flood one message from `origin` on an otherwise idle network.
pub fn flood_broadcast(graph: &Graph, origin: usize, ttl: usize) -> FloodRecord {
    let mut bus = MessageBus::new(graph.clone());
    let mut received_at = vec![None; graph.n()];
    received_at[origin] = Some(0);
    bus.originate(
        origin,
        BroadcastMsg {
            sender: origin + 1,
            timestamp: 0,
            hypothesis: 0,
            score: 0.0,
            ttl,
        },
    );
    let mut step = 0;
    while !bus.is_idle() {
        step += 1;
        for (node, _) in bus.deliver() {
            received_at[node].get_or_insert(step);
        }
    }
    FloodRecord {
        received_at,
        messages: bus.flood_messages(),
    }
}
