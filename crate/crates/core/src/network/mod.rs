//! Two-terminal series-parallel networks, their routes, and path sets.

mod recognize;
mod sptree;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use recognize::recognize_sp;
pub use sptree::SpTree;

/// Default upper bound on the number of routes a network may have.
pub const DEFAULT_ROUTE_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

/// Index of an edge in its network's edge list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub name: String,
    pub tail: VertexId,
    pub head: VertexId,
}

/// Where series-parallel reduction got stuck.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Vertex(String),
    Edge(String),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Vertex(v) => write!(f, "vertex `{v}`"),
            Witness::Edge(e) => write!(f, "edge `{e}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("network is not series-parallel: no reduction applies at {witness}")]
    NotSeriesParallel { witness: Witness },
    #[error("graph is disconnected: vertex `{vertex}` is unreachable from the origin")]
    DisconnectedGraph { vertex: String },
    #[error("bad terminals: {0}")]
    BadTerminals(String),
    #[error("edge `{0}` connects a vertex to itself")]
    SelfLoop(String),
    #[error("edge `{edge}` references unknown vertex `{vertex}`")]
    UnknownVertex { edge: String, vertex: String },
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("invalid id `{0}`: ids must be non-empty and use only letters, digits, `_`, `-`, `.`")]
    InvalidId(String),
    #[error("invalid series-parallel expression at byte {position}: {message}")]
    InvalidExpression { position: usize, message: String },
    #[error("series-parallel expression does not match the edge list: {0}")]
    ExpressionMismatch(String),
    #[error("network has more than {cap} routes")]
    TooManyRoutes { cap: usize },
    #[error("path {0} is not an origin-destination route of the network")]
    PathNotARoute(String),
    #[error("path set is empty")]
    EmptyPathSet,
}

pub(crate) fn is_id_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.')
}

fn check_id(id: &str) -> Result<(), NetworkError> {
    if id.is_empty() || !id.bytes().all(is_id_byte) {
        return Err(NetworkError::InvalidId(id.to_string()));
    }
    Ok(())
}

/// An origin-to-destination route as its edge sequence in travel order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(Vec<EdgeId>);

impl Path {
    pub fn new(edges: Vec<EdgeId>) -> Self {
        Path(edges)
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.0
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.0.contains(&e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A non-empty, sorted, duplicate-free set of routes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathSet(Vec<Path>);

impl PathSet {
    pub fn paths(&self) -> &[Path] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Path> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: &Path) -> bool {
        self.0.binary_search(p).is_ok()
    }

    pub fn index_of(&self, p: &Path) -> Option<usize> {
        self.0.binary_search(p).ok()
    }

    pub fn is_subset(&self, other: &PathSet) -> bool {
        self.0.iter().all(|p| other.contains(p))
    }
}

impl<'a> IntoIterator for &'a PathSet {
    type Item = &'a Path;
    type IntoIter = std::slice::Iter<'a, Path>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Textual description of a network prior to validation.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    pub vertices: Vec<String>,
    /// `(id, tail, head)` triples.
    pub edges: Vec<(String, String, String)>,
    pub origin: String,
    pub destination: String,
    pub sp_expression: Option<String>,
    pub route_cap: usize,
}

impl NetworkSpec {
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<(String, String, String)>,
        origin: impl Into<String>,
        destination: impl Into<String>,
    ) -> Self {
        NetworkSpec {
            vertices,
            edges,
            origin: origin.into(),
            destination: destination.into(),
            sp_expression: None,
            route_cap: DEFAULT_ROUTE_CAP,
        }
    }

    pub fn build(&self) -> Result<Network, NetworkError> {
        let mut vertex_index = HashMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            check_id(v)?;
            if vertex_index.insert(v.as_str(), VertexId(i)).is_some() {
                return Err(NetworkError::DuplicateVertex(v.clone()));
            }
        }
        let resolve = |edge: &str, v: &str| {
            vertex_index
                .get(v)
                .copied()
                .ok_or_else(|| NetworkError::UnknownVertex {
                    edge: edge.to_string(),
                    vertex: v.to_string(),
                })
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut edge_index = HashMap::new();
        for (i, (id, tail, head)) in self.edges.iter().enumerate() {
            check_id(id)?;
            if edge_index.insert(id.as_str(), EdgeId(i)).is_some() {
                return Err(NetworkError::DuplicateEdge(id.clone()));
            }
            edges.push(Edge {
                id: EdgeId(i),
                name: id.clone(),
                tail: resolve(id, tail)?,
                head: resolve(id, head)?,
            });
        }
        let terminal = |v: &str, role: &str| {
            vertex_index
                .get(v)
                .copied()
                .ok_or_else(|| NetworkError::BadTerminals(format!("{role} `{v}` is not a vertex")))
        };
        let origin = terminal(&self.origin, "origin")?;
        let destination = terminal(&self.destination, "destination")?;

        let sp_tree = match &self.sp_expression {
            None => recognize_sp(&self.vertices, &edges, origin, destination)?,
            Some(expr) => {
                if origin == destination {
                    return Err(NetworkError::BadTerminals(
                        "origin and destination coincide".into(),
                    ));
                }
                let tree = SpTree::parse_expression(expr, |name| edge_index.get(name).copied())?;
                tree.validate(self.vertices.len(), &edges, origin, destination)
                    .map_err(NetworkError::ExpressionMismatch)?;
                tree
            }
        };

        let mut network = Network {
            vertices: self.vertices.clone(),
            edges,
            origin,
            destination,
            sp_tree,
            routes: Vec::new(),
        };
        network.routes = network.search_routes(self.route_cap)?;
        Ok(network)
    }
}

/// A validated two-terminal series-parallel network with its routes cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    origin: VertexId,
    destination: VertexId,
    sp_tree: SpTree,
    routes: Vec<Path>,
}

impl Network {
    /// Builds a network from `(id, tail, head)` triples; vertices are taken
    /// in order of first appearance.
    pub fn from_edges(
        edges: &[(&str, &str, &str)],
        origin: &str,
        destination: &str,
    ) -> Result<Self, NetworkError> {
        let mut vertices: Vec<String> = Vec::new();
        for name in [origin, destination]
            .into_iter()
            .chain(edges.iter().flat_map(|&(_, t, h)| [t, h]))
        {
            if !vertices.iter().any(|v| v == name) {
                vertices.push(name.to_string());
            }
        }
        let edges = edges
            .iter()
            .map(|&(id, t, h)| (id.to_string(), t.to_string(), h.to_string()))
            .collect();
        NetworkSpec::new(vertices, edges, origin, destination).build()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn origin(&self) -> VertexId {
        self.origin
    }

    pub fn destination(&self) -> VertexId {
        self.destination
    }

    pub fn sp_tree(&self) -> &SpTree {
        &self.sp_tree
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertices[v.0]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edges[e.0].name
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edges.iter().find(|e| e.name == name).map(|e| e.id)
    }

    /// The route set R in lexicographic order of edge ids.
    pub fn routes(&self) -> &[Path] {
        &self.routes
    }

    pub fn sp_expression(&self) -> String {
        self.sp_tree.to_expression(|e| self.edges[e.0].name.clone())
    }

    /// Renders a path as `(e1,e3)`.
    pub fn path_label(&self, path: &Path) -> String {
        let names: Vec<&str> = path.edges().iter().map(|e| self.edge_name(*e)).collect();
        format!("({})", names.join(","))
    }

    pub fn is_route(&self, path: &Path) -> bool {
        self.routes.binary_search(path).is_ok()
    }

    /// Orders an unordered collection of edges into a walk from the origin and
    /// returns it if it is a route.
    pub fn route_from_edges(&self, edges: &[EdgeId]) -> Option<Path> {
        let mut remaining: Vec<EdgeId> = edges.to_vec();
        let mut ordered = Vec::with_capacity(edges.len());
        let mut at = self.origin;
        while !remaining.is_empty() {
            let i = remaining
                .iter()
                .position(|e| self.edges.get(e.0).is_some_and(|edge| edge.tail == at))?;
            let e = remaining.swap_remove(i);
            at = self.edges[e.0].head;
            ordered.push(e);
        }
        let path = Path(ordered);
        self.is_route(&path).then_some(path)
    }

    /// Validates and canonicalizes a collection of routes into a path set.
    pub fn path_set(&self, paths: impl IntoIterator<Item = Path>) -> Result<PathSet, NetworkError> {
        let mut out = Vec::new();
        for p in paths {
            if !self.is_route(&p) {
                return Err(NetworkError::PathNotARoute(self.path_label(&p)));
            }
            out.push(p);
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(NetworkError::EmptyPathSet);
        }
        Ok(PathSet(out))
    }

    /// The full route set as a path set.
    pub fn all_routes(&self) -> PathSet {
        PathSet(self.routes.clone())
    }

    fn search_routes(&self, cap: usize) -> Result<Vec<Path>, NetworkError> {
        if self.sp_tree.route_count() > cap as u128 {
            return Err(NetworkError::TooManyRoutes { cap });
        }
        let mut out_edges = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            out_edges[e.tail.0].push(e.id);
        }
        let mut routes = Vec::new();
        let mut on_path = vec![false; self.vertices.len()];
        let mut stack = Vec::new();
        self.dfs(
            self.origin,
            &out_edges,
            &mut on_path,
            &mut stack,
            &mut routes,
            cap,
        )?;
        routes.sort();
        Ok(routes)
    }

    fn dfs(
        &self,
        at: VertexId,
        out_edges: &[Vec<EdgeId>],
        on_path: &mut [bool],
        stack: &mut Vec<EdgeId>,
        routes: &mut Vec<Path>,
        cap: usize,
    ) -> Result<(), NetworkError> {
        if at == self.destination {
            if routes.len() == cap {
                return Err(NetworkError::TooManyRoutes { cap });
            }
            routes.push(Path(stack.clone()));
            return Ok(());
        }
        on_path[at.0] = true;
        for &e in &out_edges[at.0] {
            let next = self.edges[e.0].head;
            if !on_path[next.0] {
                stack.push(e);
                self.dfs(next, out_edges, on_path, stack, routes, cap)?;
                stack.pop();
            }
        }
        on_path[at.0] = false;
        Ok(())
    }
}

/// All simple origin-destination paths of the network.
pub fn enumerate_routes(network: &Network) -> PathSet {
    network.all_routes()
}

/// True iff the path set admits every route of the network.
pub fn is_braess_resistant(network: &Network, paths: &PathSet) -> Result<bool, NetworkError> {
    for p in paths {
        if !network.is_route(p) {
            return Err(NetworkError::PathNotARoute(network.path_label(p)));
        }
    }
    let available: BTreeSet<&Path> = paths.iter().collect();
    Ok(network.routes().iter().all(|r| available.contains(r)))
}
