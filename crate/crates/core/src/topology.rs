//! Sensor deployment, connectivity graph and the multipath parent DAG.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::{self, Write as _};

use rand::Rng;
use thiserror::Error;

use crate::config::{SimConfig, SinkPlacement};
use crate::rng;
use crate::scalar::Scalar;

/// Dense node identifier, `0..node_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u16);

impl NodeId {
    pub fn index(self) -> usize {
        usize::from(self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error(
        "topology disconnected: no path to the sink from nodes {}",
        id_list(unreachable)
    )]
    Disconnected { unreachable: Vec<NodeId> },
    #[error("no path found from node {0} to the sink")]
    NoPathFound(NodeId),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("invalid deployment: {0}")]
    InvalidDeployment(&'static str),
}

fn id_list(ids: &[NodeId]) -> String {
    ids.iter()
        .map(NodeId::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<F> {
    pub x: F,
    pub y: F,
}

impl<F: Scalar> Point<F> {
    pub fn new(x: F, y: F) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point<F>) -> F {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeSite<F> {
    pub id: NodeId,
    pub position: Point<F>,
}

/// Search budget for [`Topology::find_path_length`], counted in node
/// expansions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchBudget {
    Unlimited,
    Expansions(usize),
}

/// Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology<F> {
    sites: Vec<NodeSite<F>>,
    sink: NodeId,
    range: F,
    neighbors: Vec<Vec<NodeId>>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    hops: Vec<u32>,
}

impl<F: Scalar> Topology<F> {
    /// Random uniform deployment from `config`, deterministic in `seed`.
    pub fn generate(config: &SimConfig, seed: u64) -> Result<Self, TopologyError> {
        if config.node_count < 2 || config.node_count > usize::from(u16::MAX) {
            return Err(TopologyError::InvalidDeployment(
                "node_count must lie in [2, 65535]",
            ));
        }
        if config.field_side.is_nan()
            || config.field_side <= 0.0
            || config.tx_range.is_nan()
            || config.tx_range <= 0.0
        {
            return Err(TopologyError::InvalidDeployment(
                "field side and transmission range must be positive",
            ));
        }
        let mut rng = rng::stream(seed, rng::STREAM_TOPOLOGY);
        let side = config.field_side;
        let positions: Vec<Point<F>> = (0..config.node_count)
            .map(|_| {
                let x: f64 = rng.gen_range(0.0..=side);
                let y: f64 = rng.gen_range(0.0..=side);
                Point::new(F::lit(x), F::lit(y))
            })
            .collect();
        let sink = match config.sink {
            SinkPlacement::Node(id) => NodeId(id),
            SinkPlacement::Center => {
                let c = Point::new(F::lit(side / 2.0), F::lit(side / 2.0));
                let (idx, _) = positions.iter().enumerate().fold(
                    (0, F::infinity()),
                    |(best, dist), (i, p)| {
                        let d = p.distance(c);
                        if d < dist {
                            (i, d)
                        } else {
                            (best, dist)
                        }
                    },
                );
                NodeId(idx as u16)
            }
        };
        Self::from_positions(positions, sink, F::lit(config.tx_range))
    }

    /// Builds from explicit coordinates. Ids are assigned in order.
    pub fn from_positions(
        positions: Vec<Point<F>>,
        sink: NodeId,
        range: F,
    ) -> Result<Self, TopologyError> {
        let n = positions.len();
        if n == 0 || n > usize::from(u16::MAX) {
            return Err(TopologyError::InvalidDeployment("node count out of range"));
        }
        if sink.index() >= n {
            return Err(TopologyError::UnknownNode(sink));
        }
        if range.is_nan() || range <= F::zero() {
            return Err(TopologyError::InvalidDeployment("range must be positive"));
        }
        let sites: Vec<NodeSite<F>> = positions
            .into_iter()
            .enumerate()
            .map(|(i, position)| NodeSite {
                id: NodeId(i as u16),
                position,
            })
            .collect();

        let mut neighbors = vec![Vec::new(); n];
        for u in 0..n {
            for v in (u + 1)..n {
                if sites[u].position.distance(sites[v].position) <= range {
                    neighbors[u].push(NodeId(v as u16));
                    neighbors[v].push(NodeId(u as u16));
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        let hops = bfs_hops(&neighbors, sink);
        let unreachable: Vec<NodeId> = hops
            .iter()
            .enumerate()
            .filter(|(_, h)| h.is_none())
            .map(|(i, _)| NodeId(i as u16))
            .collect();
        if !unreachable.is_empty() {
            return Err(TopologyError::Disconnected { unreachable });
        }
        let hops: Vec<u32> = hops.into_iter().map(|h| h.unwrap_or(u32::MAX)).collect();

        // Every strictly closer neighbor becomes a parent.
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for u in 0..n {
            for &v in &neighbors[u] {
                if hops[v.index()] + 1 == hops[u] {
                    parents[u].push(v);
                    children[v.index()].push(NodeId(u as u16));
                }
            }
        }

        Ok(Topology {
            sites,
            sink,
            range,
            neighbors,
            parents,
            children,
            hops,
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn range(&self) -> F {
        self.range
    }

    pub fn sites(&self) -> &[NodeSite<F>] {
        &self.sites
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.sites.iter().map(|s| s.id)
    }

    pub fn position(&self, id: NodeId) -> Point<F> {
        self.sites[id.index()].position
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.neighbors[id.index()]
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.index()]
    }

    /// Nodes that list `id` as a parent.
    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.index()]
    }

    /// BFS hop distance to the sink.
    pub fn hop_distance(&self, id: NodeId) -> u32 {
        self.hops[id.index()]
    }

    pub fn is_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors[a.index()].binary_search(&b).is_ok()
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> F {
        self.position(a).distance(self.position(b))
    }

    /// Hop count of the best path from `source` to the sink found by
    /// expanding neighbors outward until the budget runs out.
    ///
    /// Every path reaching the sink is a candidate and the shortest one is
    /// kept. Expansion is breadth-first, so the first candidate is already
    /// optimal; with an unlimited budget the result is the hop distance.
    pub fn find_path_length(
        &self,
        source: NodeId,
        budget: SearchBudget,
    ) -> Result<u32, TopologyError> {
        if source.index() >= self.len() {
            return Err(TopologyError::UnknownNode(source));
        }
        if source == self.sink {
            return Ok(0);
        }
        let limit = match budget {
            SearchBudget::Unlimited => usize::MAX,
            SearchBudget::Expansions(n) => n,
        };
        let mut best: Option<u32> = None;
        let mut seen = vec![false; self.len()];
        let mut frontier = VecDeque::from([(source, 0u32)]);
        seen[source.index()] = true;
        let mut expansions = 0usize;
        while let Some((node, depth)) = frontier.pop_front() {
            if expansions >= limit {
                break;
            }
            if best.is_some_and(|b| depth + 1 >= b) {
                break;
            }
            expansions += 1;
            for &next in self.neighbors(node) {
                if next == self.sink {
                    let k = depth + 1;
                    if best.is_none_or(|b| k < b) {
                        best = Some(k);
                    }
                } else if !seen[next.index()] {
                    seen[next.index()] = true;
                    frontier.push_back((next, depth + 1));
                }
            }
        }
        best.ok_or(TopologyError::NoPathFound(source))
    }

    /// Mean discovered path length per BFS hop bucket, over non-sink
    /// sources. A sink-only topology reports `{0: 0.0}`.
    pub fn average_path_length(
        &self,
        budget: SearchBudget,
    ) -> Result<BTreeMap<u32, F>, TopologyError> {
        if self.len() == 1 {
            return Ok(BTreeMap::from([(0, F::zero())]));
        }
        let mut acc: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for id in self.node_ids().filter(|&id| id != self.sink) {
            let len = self.find_path_length(id, budget)?;
            let slot = acc.entry(self.hop_distance(id)).or_insert((0, 0));
            slot.0 += u64::from(len);
            slot.1 += 1;
        }
        Ok(acc
            .into_iter()
            .map(|(d, (sum, count))| (d, F::lit(sum as f64) / F::lit(count as f64)))
            .collect())
    }

    /// Serializes to the `wsn-topology v1` text table.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# wsn-topology v1\n");
        for site in &self.sites {
            let parents = &self.parents[site.id.index()];
            let parent_text = if parents.is_empty() {
                "-".to_string()
            } else {
                parents
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let _ = writeln!(
                out,
                "{} {:.6} {:.6} {} {}",
                site.id,
                site.position.x.to_f64_lossy(),
                site.position.y.to_f64_lossy(),
                u8::from(site.id == self.sink),
                parent_text
            );
        }
        out
    }
}

fn bfs_hops(neighbors: &[Vec<NodeId>], root: NodeId) -> Vec<Option<u32>> {
    let mut hops = vec![None; neighbors.len()];
    hops[root.index()] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let next = hops[u.index()].map(|h| h + 1);
        for &v in &neighbors[u.index()] {
            if hops[v.index()].is_none() {
                hops[v.index()] = next;
                queue.push_back(v);
            }
        }
    }
    hops
}
