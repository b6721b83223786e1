use super::{
    resistor_role, AmpParam, Diagnostic, Netlist, ResistorRole, Rule, Severity, SocketId,
    Statement, Topology,
};
use crate::panel::{PanelConstants, SignalClass};

/// Checks a netlist against the panel wiring rules using the default constants.
pub fn lint(netlist: &Netlist) -> Vec<Diagnostic> {
    lint_with(netlist, &PanelConstants::default())
}

/// Diagnostics are ordered by line, then rule id.
pub fn lint_with(netlist: &Netlist, pc: &PanelConstants) -> Vec<Diagnostic> {
    let topo = Topology::new(netlist);
    let mut out = Vec::new();

    for sink in topo.members().filter(|s| s.is_sink()) {
        let Some(path) = topo.driver_path(sink) else {
            continue;
        };
        if path.driver.class() != SignalClass::Bipolar55 {
            continue;
        }
        if sink.is_din() && path.ohms < pc.r_series_min {
            out.push(Diagnostic::new(
                Severity::Error,
                Rule::R1,
                path.last_hop,
                format!(
                    "{} swings -5..+5 V into {sink} through {} Ω; at least {} Ω in series is required",
                    path.driver,
                    path.ohms,
                    pc.r_series_min
                ),
            ));
        }
        if sink == SocketId::Cntr {
            out.push(Diagnostic::new(
                Severity::Error,
                Rule::R2,
                path.last_hop,
                format!("CNTR accepts only 0..5 V pulses but {} is bipolar", path.driver),
            ));
        }
        if sink.is_adc() {
            out.push(Diagnostic::new(
                Severity::Warning,
                Rule::R3,
                path.last_hop,
                format!(
                    "{} is bipolar and {sink} reads only 0..5 V; route it through OFF1 or OFF2 first",
                    path.driver
                ),
            ));
        }
    }

    let mut supply = 0.0;
    for load in netlist.loads().iter().filter(|l| l.socket == SocketId::V5) {
        let before = supply;
        supply += pc.v_supply / load.r_to_gnd;
        if before <= pc.i_supply_max && supply > pc.i_supply_max {
            out.push(Diagnostic::new(
                Severity::Warning,
                Rule::R4,
                load.span,
                format!(
                    "5V OUT loads draw {:.1} mA, above the {:.0} mA budget",
                    supply * 1e3,
                    pc.i_supply_max * 1e3
                ),
            ));
        }
    }

    let inserted = netlist.inserted();
    for (socks, rin, rf, name) in [
        (
            [SocketId::Inv1In, SocketId::Inv1Out],
            AmpParam::Inv1Rin,
            AmpParam::Inv1Rf,
            "INV1",
        ),
        (
            [SocketId::Inv2In, SocketId::Inv2Out],
            AmpParam::Inv2Rin,
            AmpParam::Inv2Rf,
            "INV2",
        ),
    ] {
        let first_use = netlist
            .spanned()
            .find(|(stmt, _)| stmt.sockets().iter().any(|s| socks.contains(s)));
        let Some((_, span)) = first_use else {
            continue;
        };
        let missing: Vec<_> = [rin, rf]
            .into_iter()
            .filter(|p| !inserted.contains_key(p))
            .map(|p| p.name())
            .collect();
        if !missing.is_empty() {
            out.push(Diagnostic::new(
                Severity::Error,
                Rule::R5,
                span,
                format!(
                    "{name} is wired but {} not inserted; the amplifier runs open loop",
                    missing.join(" and ")
                ),
            ));
        }
    }

    for c in topo.contentions() {
        out.push(Diagnostic::new(
            Severity::Error,
            Rule::R6,
            c.span,
            format!("output contention: {} and {} drive the same net", c.first, c.second),
        ));
    }

    let ccs_loads: Vec<_> = netlist
        .loads()
        .into_iter()
        .filter(|l| l.socket == SocketId::Ccs)
        .collect();
    match (ccs_loads.last(), netlist.load_on(SocketId::Ccs)) {
        (Some(last), Some(r)) if pc.ccs_node_voltage(Some(r)).compliance => {
            out.push(Diagnostic::new(
                Severity::Warning,
                Rule::R7,
                last.span,
                format!(
                    "CCS load of {r} Ω needs {:.2} V, beyond the {} V compliance",
                    r * pc.i_ccs,
                    pc.v_ccs_compliance
                ),
            ));
        }
        (None, _) => {
            if let Some(w) = topo
                .wires()
                .iter()
                .find(|w| w.a == SocketId::Ccs || w.b == SocketId::Ccs)
            {
                out.push(Diagnostic::new(
                    Severity::Warning,
                    Rule::R7,
                    w.span,
                    format!(
                        "CCS has no load to GND and sits at its {} V compliance limit",
                        pc.v_ccs_compliance
                    ),
                ));
            }
        }
        _ => {}
    }

    for (stmt, span) in netlist.spanned() {
        let unmodeled = match *stmt {
            Statement::Resistor { a, b, .. } => resistor_role(a, b) == ResistorRole::Unmodeled,
            Statement::Connect { from, to, .. } => {
                from == SocketId::NoninvRg || to == SocketId::NoninvRg
            }
            Statement::Insert { .. } => false,
        };
        if unmodeled {
            out.push(Diagnostic::new(
                Severity::Warning,
                Rule::R8,
                span,
                "unmodeled network: this element is ignored by the simulator",
            ));
        }
    }

    out.sort_by_key(|d| (d.line, d.rule));
    out
}
