use std::collections::{BTreeMap, BTreeSet};

use super::EngineError;
use crate::netlist::{self, AmpParam, Netlist, SocketId, Topology};
use crate::panel::Ohms;

/// Upstream dependency of a node: its driver for sinks, or the amplifier
/// input for an amplifier output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Input {
    pub node: usize,
    /// Series resistance between driver and this node.
    pub series: Ohms,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Node {
    pub socket: SocketId,
    pub input: Option<Input>,
}

/// Directed signal-flow graph, nodes stored in evaluation order.
#[derive(Debug, Clone)]
pub struct SignalGraph {
    pub(crate) nodes: Vec<Node>,
    index: BTreeMap<SocketId, usize>,
    topology: Topology,
    pub(crate) inserted: BTreeMap<AmpParam, Ohms>,
    pub(crate) gain_resistor: Option<Ohms>,
    pub(crate) ccs_load: Option<Ohms>,
    pub(crate) v5_loads: Vec<Ohms>,
}

impl SignalGraph {
    /// Builds the graph for a netlist that lints without errors.
    pub fn build(netlist: &Netlist) -> Result<Self, EngineError> {
        let diagnostics = netlist::lint(netlist);
        if netlist::has_errors(&diagnostics) {
            return Err(EngineError::LintErrorsPresent(
                diagnostics.into_iter().filter(|d| d.is_error()).collect(),
            ));
        }
        Self::build_unchecked(netlist)
    }

    /// Builds without consulting the linter. Structural problems (cycles,
    /// contention) are still rejected. Used to inject wiring faults.
    pub fn build_unchecked(netlist: &Netlist) -> Result<Self, EngineError> {
        let topology = Topology::new(netlist);
        if let Some(c) = topology.contentions().first() {
            return Err(EngineError::Contention(c.first, c.second));
        }

        let mut sockets: BTreeSet<SocketId> = BTreeSet::new();
        for s in topology.members() {
            sockets.insert(s);
            if let Some(amp) = s.amplifier() {
                sockets.insert(amp.input());
                sockets.insert(amp.output());
            }
        }

        // Each node has at most one upstream socket.
        let upstream: BTreeMap<SocketId, (SocketId, Ohms)> = sockets
            .iter()
            .filter_map(|&s| {
                if s.is_sink() {
                    topology.driver_path(s).map(|p| (s, (p.driver, p.ohms)))
                } else {
                    s.amplifier()
                        .filter(|amp| amp.output() == s)
                        .map(|amp| (s, (amp.input(), 0.0)))
                }
            })
            .collect();

        let mut downstream: BTreeMap<SocketId, Vec<SocketId>> = BTreeMap::new();
        for (&v, &(u, _)) in &upstream {
            downstream.entry(u).or_default().push(v);
        }
        let mut ready: BTreeSet<SocketId> = sockets
            .iter()
            .copied()
            .filter(|s| !upstream.contains_key(s))
            .collect();
        let mut order = Vec::with_capacity(sockets.len());
        while let Some(s) = ready.pop_first() {
            order.push(s);
            if let Some(children) = downstream.get(&s) {
                ready.extend(children.iter().copied());
            }
        }

        if order.len() < sockets.len() {
            let placed: BTreeSet<_> = order.iter().copied().collect();
            let start = *sockets.iter().find(|s| !placed.contains(s)).unwrap();
            // Walk upstream until a socket repeats; that repeat closes the cycle.
            let mut seen = Vec::new();
            let mut s = start;
            while !seen.contains(&s) {
                seen.push(s);
                s = upstream[&s].0;
            }
            let pos = seen.iter().position(|&x| x == s).unwrap();
            let mut cycle: Vec<_> = seen[pos..].to_vec();
            cycle.reverse();
            return Err(EngineError::CycleDetected(cycle));
        }

        let index: BTreeMap<SocketId, usize> =
            order.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let nodes = order
            .iter()
            .map(|&s| Node {
                socket: s,
                input: upstream.get(&s).map(|&(u, series)| Input {
                    node: index[&u],
                    series,
                }),
            })
            .collect();

        Ok(SignalGraph {
            nodes,
            index,
            topology,
            inserted: netlist.inserted(),
            gain_resistor: netlist.gain_resistor(),
            ccs_load: netlist.load_on(SocketId::Ccs),
            v5_loads: netlist
                .loads()
                .iter()
                .filter(|l| l.socket == SocketId::V5)
                .map(|l| l.r_to_gnd)
                .collect(),
        })
    }

    pub fn empty() -> Self {
        Self::build_unchecked(&Netlist::new()).expect("empty netlist always builds")
    }

    /// Sockets in evaluation order.
    pub fn order(&self) -> Vec<SocketId> {
        self.nodes.iter().map(|n| n.socket).collect()
    }

    /// Directed edges as (upstream, downstream) socket pairs.
    pub fn edges(&self) -> Vec<(SocketId, SocketId)> {
        self.nodes
            .iter()
            .filter_map(|n| n.input.map(|i| (self.nodes[i.node].socket, n.socket)))
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, socket: SocketId) -> Option<usize> {
        self.index.get(&socket).copied()
    }

    /// The source driving `socket`'s net, if it is wired to one.
    pub fn driver_of(&self, socket: SocketId) -> Option<SocketId> {
        self.topology.driver_of(socket).filter(|&d| d != socket)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }
}
