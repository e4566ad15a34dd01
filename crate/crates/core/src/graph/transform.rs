use serde::{Deserialize, Serialize};

use super::DirectedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentMode {
    Weak,
    Strong,
}

impl DirectedGraph {
    /// Adds the reverse of every arc.
    pub fn to_undirected(&self) -> DirectedGraph {
        let mut g = DirectedGraph::undirected(self.num_nodes, self.edges.iter().copied())
            .expect("indices already validated");
        g.labels = self.labels.clone();
        g
    }

    /// Adds an arc `i -> i` for every node.
    pub fn add_self_loops(&self) -> DirectedGraph {
        let arcs = self.edges.iter().copied().chain((0..self.num_nodes).map(|i| (i, i)));
        let mut g = DirectedGraph::new(self.num_nodes, arcs).expect("indices already validated");
        g.labels = self.labels.clone();
        g.directed = self.directed;
        g
    }

    /// Induced subgraph on `nodes` (old indices, in the order given).
    pub fn induced_subgraph(&self, nodes: &[usize]) -> DirectedGraph {
        let mut new_index = vec![usize::MAX; self.num_nodes];
        for (k, &v) in nodes.iter().enumerate() {
            new_index[v] = k;
        }
        let arcs = self.edges.iter().filter_map(|&(s, d)| {
            let (a, b) = (new_index[s], new_index[d]);
            (a != usize::MAX && b != usize::MAX).then_some((a, b))
        });
        let mut g = DirectedGraph::new(nodes.len().max(1), arcs).expect("remapped indices in range");
        g.labels = self.labels.as_ref().map(|l| nodes.iter().map(|&v| l[v]).collect());
        g.directed = self.directed;
        g
    }

    /// Component id per node, numbered in order of each component's smallest node.
    pub fn components(&self, mode: ComponentMode) -> Vec<usize> {
        let raw = match mode {
            ComponentMode::Weak => self.weak_components(),
            ComponentMode::Strong => self.strong_components(),
        };
        let mut relabel = vec![usize::MAX; self.num_nodes];
        let mut next = 0;
        raw.into_iter()
            .map(|c| {
                if relabel[c] == usize::MAX {
                    relabel[c] = next;
                    next += 1;
                }
                relabel[c]
            })
            .collect()
    }

    fn weak_components(&self) -> Vec<usize> {
        let n = self.num_nodes;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(s, d) in &self.edges {
            let (a, b) = (find(&mut parent, s), find(&mut parent, d));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..n).map(|v| find(&mut parent, v)).collect()
    }

    /// Iterative Tarjan.
    fn strong_components(&self) -> Vec<usize> {
        let n = self.num_nodes;
        let out = self.out_neighbors();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut comp = vec![usize::MAX; n];
        let mut counter = 0;
        let mut ncomp = 0;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut next)) = call.last_mut() {
                if *next < out[v].len() {
                    let w = out[v][*next];
                    *next += 1;
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w] = false;
                            comp[w] = ncomp;
                            if w == v {
                                break;
                            }
                        }
                        ncomp += 1;
                    }
                }
            }
        }
        comp
    }
}

/// Largest component with nodes renumbered densely in their original order.
/// Returns the subgraph and the map from new to old indices. Ties go to the
/// component containing the smallest node index.
pub fn largest_connected_component(
    graph: &DirectedGraph,
    mode: ComponentMode,
) -> (DirectedGraph, Vec<usize>) {
    let comp = graph.components(mode);
    let ncomp = comp.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; ncomp];
    for &c in &comp {
        sizes[c] += 1;
    }
    let best = (0..ncomp).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap_or(0);
    let keep: Vec<usize> = (0..graph.num_nodes()).filter(|&v| comp[v] == best).collect();
    (graph.induced_subgraph(&keep), keep)
}
