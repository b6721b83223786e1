//! Electrical nets formed by the wires of a netlist.

use std::collections::BTreeMap;

use super::{Netlist, SocketId, Span};
use crate::panel::Ohms;

/// An undirected wire with its series resistance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wire {
    pub a: SocketId,
    pub b: SocketId,
    pub ohms: Ohms,
    pub span: Span,
}

/// A wire that joined two driven nets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contention {
    pub span: Span,
    pub first: SocketId,
    pub second: SocketId,
}

/// Result of tracing a sink back to its driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverPath {
    pub driver: SocketId,
    /// Smallest total series resistance over all paths.
    pub ohms: Ohms,
    /// Statement of the final wire into the sink on that path.
    pub last_hop: Span,
}

#[derive(Debug, Clone)]
pub struct Topology {
    wires: Vec<Wire>,
    parent: BTreeMap<SocketId, SocketId>,
    drivers: BTreeMap<SocketId, SocketId>,
    contentions: Vec<Contention>,
}

impl Topology {
    /// Builds nets from every modeled wire. Wires touching NONINV.RG are
    /// not part of any net.
    pub fn new(netlist: &Netlist) -> Self {
        let mut topo = Topology {
            wires: Vec::new(),
            parent: BTreeMap::new(),
            drivers: BTreeMap::new(),
            contentions: Vec::new(),
        };
        for conn in netlist.connections() {
            if conn.from == SocketId::NoninvRg || conn.to == SocketId::NoninvRg {
                continue;
            }
            topo.add_wire(Wire {
                a: conn.from,
                b: conn.to,
                ohms: conn.series_r,
                span: conn.span,
            });
        }
        topo
    }

    fn add_wire(&mut self, wire: Wire) {
        for s in [wire.a, wire.b] {
            if let std::collections::btree_map::Entry::Vacant(e) = self.parent.entry(s) {
                e.insert(s);
                if s.is_source() {
                    self.drivers.insert(s, s);
                }
            }
        }
        self.wires.push(wire);
        let ra = self.find(wire.a);
        let rb = self.find(wire.b);
        if ra == rb {
            return;
        }
        let da = self.drivers.remove(&ra);
        let db = self.drivers.remove(&rb);
        let driver = match (da, db) {
            (Some(first), Some(second)) => {
                self.contentions.push(Contention {
                    span: wire.span,
                    first,
                    second,
                });
                Some(first)
            }
            (a, b) => a.or(b),
        };
        let (root, child) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent.insert(child, root);
        if let Some(d) = driver {
            self.drivers.insert(root, d);
        }
    }

    fn find(&self, mut s: SocketId) -> SocketId {
        while let Some(&p) = self.parent.get(&s) {
            if p == s {
                break;
            }
            s = p;
        }
        s
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn contentions(&self) -> &[Contention] {
        &self.contentions
    }

    /// Every socket touched by a modeled wire, in socket order.
    pub fn members(&self) -> impl Iterator<Item = SocketId> + '_ {
        self.parent.keys().copied()
    }

    pub fn is_wired(&self, s: SocketId) -> bool {
        self.parent.contains_key(&s)
    }

    /// Source driving the net `s` belongs to.
    pub fn driver_of(&self, s: SocketId) -> Option<SocketId> {
        if !self.is_wired(s) {
            return None;
        }
        self.drivers.get(&self.find(s)).copied()
    }

    /// Lowest-resistance route from the net's driver to `sink`.
    pub fn driver_path(&self, sink: SocketId) -> Option<DriverPath> {
        let driver = self.driver_of(sink)?;
        if driver == sink {
            return None;
        }
        let mut best: BTreeMap<SocketId, (Ohms, Option<Span>)> = BTreeMap::new();
        best.insert(driver, (0.0, None));
        // Nets hold a handful of wires; plain relaxation is enough.
        loop {
            let mut changed = false;
            for w in &self.wires {
                for (u, v) in [(w.a, w.b), (w.b, w.a)] {
                    // Current does not pass through another source.
                    if v == driver || (u != driver && u.is_source()) {
                        continue;
                    }
                    if let Some(&(du, _)) = best.get(&u) {
                        let cand = du + w.ohms;
                        if best.get(&v).is_none_or(|&(dv, _)| cand < dv) {
                            best.insert(v, (cand, Some(w.span)));
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let (ohms, last_hop) = *best.get(&sink)?;
        Some(DriverPath {
            driver,
            ohms,
            last_hop: last_hop?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse;

    #[test]
    fn chained_series_resistances_add() {
        let n = parse("connect INV1.OUT ADC0 series 500\nconnect ADC0 DIN0 series 500\n").unwrap();
        let t = Topology::new(&n);
        let p = t.driver_path(SocketId::Din0).unwrap();
        assert_eq!(p.driver, SocketId::Inv1Out);
        assert_eq!(p.ohms, 1000.0);
        assert_eq!(p.last_hop.line, 2);
    }

    #[test]
    fn shortest_route_wins() {
        let n = parse(
            "connect INV1.OUT DIN0 series 10k\nconnect INV1.OUT ADC0\nconnect ADC0 DIN0 series 2\n",
        )
        .unwrap();
        let p = Topology::new(&n).driver_path(SocketId::Din0).unwrap();
        assert_eq!(p.ohms, 3.0);
        assert_eq!(p.last_hop.line, 3);
    }

    #[test]
    fn contention_reported_at_joining_wire() {
        let n = parse("connect DAC ADC0\nconnect PWG ADC1\nconnect ADC0 ADC1\n").unwrap();
        let t = Topology::new(&n);
        assert_eq!(t.contentions().len(), 1);
        assert_eq!(t.contentions()[0].span.line, 3);
        assert_eq!(t.driver_of(SocketId::Adc1), Some(SocketId::Dac));
    }

    #[test]
    fn undriven_net_has_no_driver() {
        let n = parse("connect ADC0 CMP\n").unwrap();
        let t = Topology::new(&n);
        assert_eq!(t.driver_of(SocketId::Cmp), None);
        assert!(t.driver_path(SocketId::Cmp).is_none());
    }
}
