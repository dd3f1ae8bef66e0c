use std::collections::BTreeMap;

use super::{Edge, NetworkError, SpTree, VertexId, Witness};

#[derive(Debug)]
struct Block {
    tail: VertexId,
    head: VertexId,
    tree: SpTree,
}

/// Recognizes a two-terminal series-parallel network by reduction.
///
/// Parallel blocks between the same ordered vertex pair are merged, and
/// interior vertices with exactly one incoming and one outgoing block are
/// contracted into a series block. The network is series-parallel iff this
/// ends with a single `origin -> destination` block, whose tree is returned.
pub fn recognize_sp(
    vertices: &[String],
    edges: &[Edge],
    origin: VertexId,
    destination: VertexId,
) -> Result<SpTree, NetworkError> {
    if origin == destination {
        return Err(NetworkError::BadTerminals(
            "origin and destination coincide".into(),
        ));
    }
    for (v, role) in [(origin, "origin"), (destination, "destination")] {
        if v.0 >= vertices.len() {
            return Err(NetworkError::BadTerminals(format!(
                "{role} is not a vertex"
            )));
        }
    }
    for e in edges {
        if e.tail == e.head {
            return Err(NetworkError::SelfLoop(e.name.clone()));
        }
    }
    check_connected(vertices, edges, origin)?;

    let mut blocks: Vec<Option<Block>> = edges
        .iter()
        .map(|e| {
            Some(Block {
                tail: e.tail,
                head: e.head,
                tree: SpTree::Leaf(e.id),
            })
        })
        .collect();

    loop {
        let mut changed = false;

        // Parallel reductions. BTreeMap keeps the merge order deterministic.
        let mut by_pair: BTreeMap<(VertexId, VertexId), Vec<usize>> = BTreeMap::new();
        for (i, b) in blocks.iter().enumerate() {
            if let Some(b) = b {
                by_pair.entry((b.tail, b.head)).or_default().push(i);
            }
        }
        for group in by_pair.values().filter(|g| g.len() > 1) {
            let mut acc = blocks[group[0]].take().expect("live block");
            for &other in &group[1..] {
                let rhs = blocks[other].take().expect("live block");
                acc.tree = SpTree::parallel(acc.tree, rhs.tree);
            }
            blocks[group[0]] = Some(acc);
            changed = true;
        }

        // Series reductions, one vertex at a time so incidences stay fresh.
        for v in (0..vertices.len()).map(VertexId) {
            if v == origin || v == destination {
                continue;
            }
            let (ins, outs) = incidence(&blocks, v);
            if ins.len() == 1 && outs.len() == 1 {
                let (i, o) = (ins[0], outs[0]);
                let into = blocks[i].take().expect("live block");
                let out = blocks[o].take().expect("live block");
                if into.tail == out.head {
                    return Err(NetworkError::NotSeriesParallel {
                        witness: Witness::Vertex(vertices[v.0].clone()),
                    });
                }
                blocks[i] = Some(Block {
                    tail: into.tail,
                    head: out.head,
                    tree: SpTree::series(into.tree, out.tree),
                });
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }

    let live: Vec<&Block> = blocks.iter().flatten().collect();
    if live.len() == 1 && live[0].tail == origin && live[0].head == destination {
        return Ok(blocks.into_iter().flatten().next().expect("one block").tree);
    }
    Err(NetworkError::NotSeriesParallel {
        witness: stuck_witness(vertices, edges, &blocks, origin, destination),
    })
}

fn incidence(blocks: &[Option<Block>], v: VertexId) -> (Vec<usize>, Vec<usize>) {
    let mut ins = Vec::new();
    let mut outs = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        if let Some(b) = b {
            if b.head == v {
                ins.push(i);
            }
            if b.tail == v {
                outs.push(i);
            }
        }
    }
    (ins, outs)
}

/// The lowest-numbered interior vertex where no reduction applies, or else a
/// block that runs against the terminals.
fn stuck_witness(
    vertices: &[String],
    edges: &[Edge],
    blocks: &[Option<Block>],
    origin: VertexId,
    destination: VertexId,
) -> Witness {
    for v in (0..vertices.len()).map(VertexId) {
        if v == origin || v == destination {
            continue;
        }
        let (ins, outs) = incidence(blocks, v);
        if !ins.is_empty() || !outs.is_empty() {
            return Witness::Vertex(vertices[v.0].clone());
        }
    }
    let first = blocks
        .iter()
        .flatten()
        .find(|b| b.tail != origin || b.head != destination)
        .or_else(|| blocks.iter().flatten().next())
        .map(|b| b.tree.leaves()[0]);
    match first {
        Some(e) => Witness::Edge(edges[e.0].name.clone()),
        None => Witness::Vertex(vertices[origin.0].clone()),
    }
}

fn check_connected(
    vertices: &[String],
    edges: &[Edge],
    origin: VertexId,
) -> Result<(), NetworkError> {
    let mut adj = vec![Vec::new(); vertices.len()];
    for e in edges {
        adj[e.tail.0].push(e.head.0);
        adj[e.head.0].push(e.tail.0);
    }
    let mut seen = vec![false; vertices.len()];
    let mut stack = vec![origin.0];
    seen[origin.0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(v) => Err(NetworkError::DisconnectedGraph {
            vertex: vertices[v].clone(),
        }),
        None => Ok(()),
    }
}
