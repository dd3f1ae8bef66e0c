//! Series-parallel composition trees.
//!
//! A tree is the constructive witness that a two-terminal network is
//! series-parallel. The textual form used in network files is
//! `S(a, b, ...)` for series and `P(a, b, ...)` for parallel composition,
//! with edge ids as leaves. Operators are n-ary and associate to the left.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{Edge, EdgeId, NetworkError, Path, VertexId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpTree {
    Leaf(EdgeId),
    /// Destination of the left child is identified with the origin of the right.
    Series(Box<SpTree>, Box<SpTree>),
    /// Both terminals are identified.
    Parallel(Box<SpTree>, Box<SpTree>),
}

impl SpTree {
    pub fn series(left: SpTree, right: SpTree) -> SpTree {
        SpTree::Series(Box::new(left), Box::new(right))
    }

    pub fn parallel(left: SpTree, right: SpTree) -> SpTree {
        SpTree::Parallel(Box::new(left), Box::new(right))
    }

    /// Edge ids in left-to-right leaf order.
    pub fn leaves(&self) -> Vec<EdgeId> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<EdgeId>) {
        match self {
            SpTree::Leaf(e) => out.push(*e),
            SpTree::Series(a, b) | SpTree::Parallel(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    pub fn edge_count(&self) -> usize {
        match self {
            SpTree::Leaf(_) => 1,
            SpTree::Series(a, b) | SpTree::Parallel(a, b) => a.edge_count() + b.edge_count(),
        }
    }

    /// Routes computed structurally: the product of the children's routes for
    /// series nodes, their union for parallel nodes. Sorted lexicographically.
    pub fn routes(&self) -> Vec<Path> {
        let mut routes: Vec<Path> = self.routes_unsorted().into_iter().map(Path::new).collect();
        routes.sort();
        routes
    }

    fn routes_unsorted(&self) -> Vec<Vec<EdgeId>> {
        match self {
            SpTree::Leaf(e) => vec![vec![*e]],
            SpTree::Parallel(a, b) => {
                let mut out = a.routes_unsorted();
                out.extend(b.routes_unsorted());
                out
            }
            SpTree::Series(a, b) => {
                let left = a.routes_unsorted();
                let right = b.routes_unsorted();
                let mut out = Vec::with_capacity(left.len() * right.len());
                for l in &left {
                    for r in &right {
                        let mut p = l.clone();
                        p.extend_from_slice(r);
                        out.push(p);
                    }
                }
                out
            }
        }
    }

    /// Number of routes without materializing them.
    pub fn route_count(&self) -> u128 {
        match self {
            SpTree::Leaf(_) => 1,
            SpTree::Parallel(a, b) => a.route_count().saturating_add(b.route_count()),
            SpTree::Series(a, b) => a.route_count().saturating_mul(b.route_count()),
        }
    }

    /// Builds a fresh graph from the tree. Vertex 0 is the origin and vertex 1
    /// the destination; the returned edge list is indexed by leaf edge id, so
    /// leaves must carry ids `0..n` exactly once.
    pub fn realize(&self) -> (usize, Vec<(VertexId, VertexId)>) {
        let n = self.edge_count();
        let mut ends = vec![None; n];
        let mut next = 2;
        self.realize_into(VertexId(0), VertexId(1), &mut next, &mut ends);
        let ends = ends
            .into_iter()
            .map(|e| e.expect("leaf ids must be 0..edge_count"))
            .collect();
        (next, ends)
    }

    fn realize_into(
        &self,
        src: VertexId,
        dst: VertexId,
        next: &mut usize,
        ends: &mut [Option<(VertexId, VertexId)>],
    ) {
        match self {
            SpTree::Leaf(e) => ends[e.0] = Some((src, dst)),
            SpTree::Parallel(a, b) => {
                a.realize_into(src, dst, next, ends);
                b.realize_into(src, dst, next, ends);
            }
            SpTree::Series(a, b) => {
                let mid = VertexId(*next);
                *next += 1;
                a.realize_into(src, mid, next, ends);
                b.realize_into(mid, dst, next, ends);
            }
        }
    }

    /// Checks that realizing this tree reproduces the given graph exactly:
    /// every edge used once, terminals matching, and every series junction
    /// mapping to a distinct non-terminal vertex so that the vertex set is
    /// covered bijectively.
    pub fn validate(
        &self,
        vertex_count: usize,
        edges: &[Edge],
        origin: VertexId,
        destination: VertexId,
    ) -> Result<(), String> {
        let mut used = vec![false; edges.len()];
        let mut junctions = Vec::new();
        let (src, dst) = self.terminals(edges, &mut used, &mut junctions)?;
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(format!(
                "edge `{}` does not appear in the expression",
                edges[i].name
            ));
        }
        if (src, dst) != (origin, destination) {
            return Err("expression terminals do not match origin/destination".into());
        }
        let mut seen = BTreeSet::from([origin, destination]);
        for j in &junctions {
            if !seen.insert(*j) {
                return Err(format!(
                    "vertex {} is identified twice by the expression",
                    j.0
                ));
            }
        }
        if seen.len() != vertex_count {
            return Err("expression does not cover every vertex".into());
        }
        Ok(())
    }

    fn terminals(
        &self,
        edges: &[Edge],
        used: &mut [bool],
        junctions: &mut Vec<VertexId>,
    ) -> Result<(VertexId, VertexId), String> {
        match self {
            SpTree::Leaf(e) => {
                let edge = edges
                    .get(e.0)
                    .ok_or_else(|| format!("unknown edge index {}", e.0))?;
                if std::mem::replace(&mut used[e.0], true) {
                    return Err(format!("edge `{}` appears more than once", edge.name));
                }
                Ok((edge.tail, edge.head))
            }
            SpTree::Series(a, b) => {
                let (s1, t1) = a.terminals(edges, used, junctions)?;
                let (s2, t2) = b.terminals(edges, used, junctions)?;
                if t1 != s2 {
                    return Err("series composition does not share a junction vertex".into());
                }
                junctions.push(t1);
                Ok((s1, t2))
            }
            SpTree::Parallel(a, b) => {
                let ta = a.terminals(edges, used, junctions)?;
                let tb = b.terminals(edges, used, junctions)?;
                if ta != tb {
                    return Err("parallel composition joins blocks with different terminals".into());
                }
                Ok(ta)
            }
        }
    }

    /// Renders the tree in `S(..)`/`P(..)` form, flattening chains of the
    /// same operator.
    pub fn to_expression(&self, edge_name: impl Fn(EdgeId) -> String + Copy) -> String {
        let mut s = String::new();
        self.write_expression(&mut s, edge_name);
        s
    }

    fn write_expression(&self, out: &mut String, edge_name: impl Fn(EdgeId) -> String + Copy) {
        match self {
            SpTree::Leaf(e) => out.push_str(&edge_name(*e)),
            SpTree::Series(..) | SpTree::Parallel(..) => {
                let series = matches!(self, SpTree::Series(..));
                let mut parts = Vec::new();
                self.flatten(series, &mut parts);
                let _ = write!(out, "{}(", if series { 'S' } else { 'P' });
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    p.write_expression(out, edge_name);
                }
                out.push(')');
            }
        }
    }

    fn flatten<'a>(&'a self, series: bool, out: &mut Vec<&'a SpTree>) {
        match self {
            SpTree::Series(a, b) if series => {
                a.flatten(series, out);
                b.flatten(series, out);
            }
            SpTree::Parallel(a, b) if !series => {
                a.flatten(series, out);
                b.flatten(series, out);
            }
            other => out.push(other),
        }
    }

    /// Parses the textual form, resolving leaf names with `lookup`.
    pub fn parse_expression(
        text: &str,
        lookup: impl Fn(&str) -> Option<EdgeId>,
    ) -> Result<SpTree, NetworkError> {
        let mut p = ExprParser {
            src: text.as_bytes(),
            pos: 0,
            lookup: &lookup,
        };
        let tree = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(tree)
    }
}

struct ExprParser<'a, F: Fn(&str) -> Option<EdgeId>> {
    src: &'a [u8],
    pos: usize,
    lookup: &'a F,
}

impl<F: Fn(&str) -> Option<EdgeId>> ExprParser<'_, F> {
    fn error(&self, message: &str) -> NetworkError {
        NetworkError::InvalidExpression {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<&str, NetworkError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && super::is_id_byte(self.src[self.pos]) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an edge id or S(...)/P(...)"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii id"))
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<SpTree, NetworkError> {
        let start = self.pos;
        let name = self.ident()?.to_string();
        if self.peek() == Some(b'(') {
            let series = match name.as_str() {
                "S" => true,
                "P" => false,
                _ => {
                    self.pos = start;
                    return Err(self.error("operator must be `S` or `P`"));
                }
            };
            self.pos += 1;
            let mut acc = self.expr()?;
            let mut arity = 1;
            loop {
                match self.peek() {
                    Some(b',') => {
                        self.pos += 1;
                        let next = self.expr()?;
                        acc = if series {
                            SpTree::series(acc, next)
                        } else {
                            SpTree::parallel(acc, next)
                        };
                        arity += 1;
                    }
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected `,` or `)`")),
                }
            }
            if arity < 2 {
                return Err(self.error("composition needs at least two operands"));
            }
            Ok(acc)
        } else {
            match (self.lookup)(&name) {
                Some(e) => Ok(SpTree::Leaf(e)),
                None => {
                    self.pos = start;
                    Err(NetworkError::UnknownEdge(name))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lookup(name: &str) -> Option<EdgeId> {
        name.strip_prefix('e')
            .and_then(|n| n.parse::<usize>().ok())
            .map(|n| EdgeId(n - 1))
    }

    fn name(e: EdgeId) -> String {
        format!("e{}", e.0 + 1)
    }

    #[test]
    fn parse_and_render_round_trip() {
        let t = SpTree::parse_expression("P(S(P(e1, e2), P(e3,e4)), e5)", lookup).unwrap();
        assert_eq!(t.edge_count(), 5);
        assert_eq!(t.to_expression(name), "P(S(P(e1, e2), P(e3, e4)), e5)");
        assert_eq!(t.route_count(), 5);
    }

    #[test]
    fn nary_operators_associate_left() {
        let t = SpTree::parse_expression("P(e1,e2,e3)", lookup).unwrap();
        let expected = SpTree::parallel(
            SpTree::parallel(SpTree::Leaf(EdgeId(0)), SpTree::Leaf(EdgeId(1))),
            SpTree::Leaf(EdgeId(2)),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn malformed_expressions_are_rejected() {
        for bad in ["", "S(e1)", "Q(e1,e2)", "S(e1,e2", "S(e1,e2))", "S(e1 e2)"] {
            assert!(SpTree::parse_expression(bad, lookup).is_err(), "{bad:?}");
        }
        assert_eq!(
            SpTree::parse_expression("S(e1,x)", lookup),
            Err(NetworkError::UnknownEdge("x".into()))
        );
    }

    #[test]
    fn realize_numbers_junctions_after_terminals() {
        let t = SpTree::parse_expression("S(e1, P(e2, e3))", lookup).unwrap();
        let (n, ends) = t.realize();
        assert_eq!(n, 3);
        assert_eq!(ends[0], (VertexId(0), VertexId(2)));
        assert_eq!(ends[1], (VertexId(2), VertexId(1)));
        assert_eq!(ends[2], (VertexId(2), VertexId(1)));
    }
}
