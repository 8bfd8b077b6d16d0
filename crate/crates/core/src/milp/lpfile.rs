//! CPLEX LP text dump of an instance, for cross-checking with other solvers.

use std::fmt::Write as _;

use super::bnb::Sense;
use super::MmsaInstance;
use crate::system::System;

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

fn var_names(sys: &System, inst: &MmsaInstance) -> Vec<String> {
    let net = &sys.network;
    let mut names = Vec::with_capacity(inst.var_count());
    for prefix in ["x", "y"] {
        for arc in &inst.arcs {
            names.push(format!(
                "{prefix}_{}_{}_{}",
                net.bus_id(arc.tail),
                net.bus_id(arc.head),
                sanitize(&net.branch(arc.branch).id)
            ));
        }
    }
    for z in &inst.injections {
        names.push(format!(
            "z_{}_{}",
            net.bus_id(z.bus),
            sanitize(&net.branch(z.branch).id)
        ));
    }
    names
}

fn term(out: &mut String, first: bool, coef: f64, name: &str) {
    let sign = if coef < 0.0 { "-" } else if first { "" } else { "+" };
    let mag = coef.abs();
    if mag == 1.0 {
        let _ = write!(out, " {sign} {name}");
    } else {
        let _ = write!(out, " {sign} {mag} {name}");
    }
}

/// Renders the instance with the objective scaled by `w` (integral
/// coefficients); bounds include any pinned variables.
pub fn write_lp(sys: &System, inst: &MmsaInstance) -> String {
    let names = var_names(sys, inst);
    let model = &inst.model;
    let mut out = String::new();
    let _ = writeln!(out, "\\ minimum measured Steiner arborescence, w = {}", inst.w);
    let _ = writeln!(out, "\\ objective scaled by w: w * sum x + sum z");
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for (i, v) in model.vars.iter().enumerate() {
        if v.obj != 0.0 {
            term(&mut out, first, v.obj, &names[i]);
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for (k, row) in model.rows.iter().enumerate() {
        let _ = write!(out, " c{}:", k + 1);
        for (j, &(v, c)) in row.coefs.iter().enumerate() {
            term(&mut out, j == 0, c, &names[v]);
        }
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for (i, v) in model.vars.iter().enumerate() {
        if v.lb == v.ub {
            let _ = writeln!(out, " {} = {}", names[i], v.lb);
        } else if v.ub.is_infinite() {
            let _ = writeln!(out, " {} >= {}", names[i], v.lb);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", v.lb, names[i], v.ub);
        }
    }
    out.push_str("Binaries\n");
    for (i, v) in model.vars.iter().enumerate() {
        if v.class.is_some() {
            let _ = writeln!(out, " {}", names[i]);
        }
    }
    out.push_str("End\n");
    out
}
