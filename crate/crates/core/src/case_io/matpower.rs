//! MATPOWER matrix-text case files.
//!
//! Reading goes through a [`CaseDocument`] (raw numeric tables keyed by
//! section name) and then into a validated [`Network`] in per-unit.
//!
//! Columns used:
//!
//! | section   | columns                                                                  |
//! |-----------|--------------------------------------------------------------------------|
//! | `bus`     | `bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin`                |
//! | `gen`     | `bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin [...]`                    |
//! | `branch`  | `fbus tbus r x b rateA rateB rateC ratio angle status [angmin angmax]`   |
//! | `gencost` | `2 startup shutdown n c(n-1) ... c0` (polynomial model only)             |
//! | `genfuel` | cell array of fuel names, one per generator row (optional)               |
//! | `load`    | `id bus Pd Qd` (optional; overrides bus `Pd`/`Qd` when present)          |
//! | `shunt`   | `id bus Gs Bs` (optional; overrides bus `Gs`/`Bs` when present)          |
//!
//! Powers are in MW/MVAr on `baseMVA`; angles in degrees. `rateA = 0`
//! means unlimited. Angle limits beyond ±90° (or 0) are treated as
//! unbounded and replaced with ±60°.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::network::{Branch, Bus, Fuel, Generator, Load, Network, Shunt};

/// Angle limit used when the case leaves a branch unbounded.
pub const DEFAULT_ANGLE_MAX: f64 = FRAC_PI_3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    /// Rows of reals with the 1-based source line of each row.
    pub rows: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaseDocument {
    pub base_mva: f64,
    pub tables: BTreeMap<String, Table>,
    pub cells: BTreeMap<String, Vec<String>>,
}

fn strip_comment(line: &str) -> &str {
    // '%' inside a quoted cell string is not a comment
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        match c {
            '\'' => in_quote = !in_quote,
            '%' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    match tok {
        "Inf" | "inf" => Ok(f64::INFINITY),
        "-Inf" | "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().map_err(|_| Error::Parse {
            line,
            msg: format!("not a number: '{tok}'"),
        }),
    }
}

/// Splits a text into the raw numeric/cell sections of a MATPOWER case.
pub fn parse_document(text: &str) -> Result<CaseDocument> {
    let mut doc = CaseDocument {
        base_mva: 100.0,
        ..Default::default()
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    while i < lines.len() {
        let lineno = i + 1;
        let line = strip_comment(lines[i]).trim();
        i += 1;
        let Some(rest) = line.strip_prefix("mpc.") else {
            continue;
        };
        let Some((name, rhs)) = rest.split_once('=') else {
            continue;
        };
        let name = name.trim().to_string();
        let rhs = rhs.trim();
        if let Some(body) = rhs.strip_prefix('[') {
            let mut table = Table::default();
            let mut chunk = body.to_string();
            let mut chunk_line = lineno;
            loop {
                let (content, done) = match chunk.find(']') {
                    Some(pos) => (chunk[..pos].to_string(), true),
                    None => (chunk.clone(), false),
                };
                for row in content.split(';') {
                    let toks: Vec<&str> = row
                        .split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|t| !t.is_empty())
                        .collect();
                    if toks.is_empty() {
                        continue;
                    }
                    let vals = toks
                        .iter()
                        .map(|t| parse_value(t, chunk_line))
                        .collect::<Result<Vec<_>>>()?;
                    table.rows.push((chunk_line, vals));
                }
                if done {
                    break;
                }
                if i >= lines.len() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unterminated matrix 'mpc.{name}'"),
                    });
                }
                chunk = strip_comment(lines[i]).to_string();
                chunk_line = i + 1;
                i += 1;
            }
            doc.tables.insert(name, table);
        } else if let Some(body) = rhs.strip_prefix('{') {
            let mut cells = Vec::new();
            let mut chunk = body.to_string();
            loop {
                let (content, done) = match chunk.find('}') {
                    Some(pos) => (chunk[..pos].to_string(), true),
                    None => (chunk.clone(), false),
                };
                for item in content.split(';') {
                    let item = item.trim().trim_matches(',').trim();
                    if item.is_empty() {
                        continue;
                    }
                    cells.push(item.trim_matches('\'').trim_matches('"').to_string());
                }
                if done || i >= lines.len() {
                    break;
                }
                chunk = strip_comment(lines[i]).to_string();
                i += 1;
            }
            doc.cells.insert(name, cells);
        } else if name == "baseMVA" {
            let v = rhs.trim_end_matches(';').trim();
            doc.base_mva = parse_value(v, lineno)?;
        }
    }
    Ok(doc)
}

fn required<'a>(doc: &'a CaseDocument, name: &str) -> Result<&'a Table> {
    doc.tables
        .get(name)
        .ok_or_else(|| Error::MissingSection(format!("missing {name} section")))
}

fn check_arity(table: &Table, name: &str, min: usize) -> Result<()> {
    for (line, row) in &table.rows {
        if row.len() < min {
            return Err(Error::Parse {
                line: *line,
                msg: format!(
                    "{name} row has {} columns, expected at least {min}",
                    row.len()
                ),
            });
        }
    }
    Ok(())
}

fn as_id(v: f64, line: usize, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(Error::Parse {
            line,
            msg: format!("{what} must be a non-negative integer, got {v}"),
        })
    }
}

fn angle_limit(angmin_deg: f64, angmax_deg: f64) -> f64 {
    let bounded = |a: f64| a != 0.0 && a.abs() <= 90.0;
    let mut lim = f64::INFINITY;
    for a in [angmin_deg, angmax_deg] {
        if bounded(a) {
            lim = lim.min(a.abs().to_radians());
        }
    }
    if lim.is_finite() {
        lim.min(FRAC_PI_2)
    } else {
        DEFAULT_ANGLE_MAX
    }
}

/// Converts a parsed document into a validated per-unit [`Network`].
pub fn document_to_network(doc: &CaseDocument) -> Result<Network> {
    let base = doc.base_mva;
    if !(base > 0.0) {
        return Err(Error::InvalidNetwork(format!(
            "baseMVA must be positive, got {base}"
        )));
    }
    let bus_t = required(doc, "bus")?;
    let gen_t = required(doc, "gen")?;
    let branch_t = required(doc, "branch")?;
    check_arity(bus_t, "bus", 13)?;
    check_arity(gen_t, "gen", 10)?;
    check_arity(branch_t, "branch", 11)?;

    let mut buses = Vec::new();
    let mut loads = Vec::new();
    let mut shunts = Vec::new();
    for (line, row) in &bus_t.rows {
        let id = as_id(row[0], *line, "bus id")?;
        if row[1] == 4.0 {
            // isolated bus
            continue;
        }
        buses.push(Bus {
            id,
            vmin: row[12],
            vmax: row[11],
            setpoint_vm: Some(row[7]),
        });
        if row[2] != 0.0 || row[3] != 0.0 {
            loads.push(Load::new(loads.len() + 1, id, row[2] / base, row[3] / base));
        }
        if row[4] != 0.0 || row[5] != 0.0 {
            shunts.push(Shunt {
                id: shunts.len() + 1,
                bus: id,
                gs: row[4] / base,
                bs: row[5] / base,
            });
        }
    }
    if let Some(t) = doc.tables.get("load") {
        check_arity(t, "load", 4)?;
        loads = t
            .rows
            .iter()
            .map(|(line, r)| {
                Ok(Load::new(
                    as_id(r[0], *line, "load id")?,
                    as_id(r[1], *line, "load bus")?,
                    r[2] / base,
                    r[3] / base,
                ))
            })
            .collect::<Result<_>>()?;
    }
    if let Some(t) = doc.tables.get("shunt") {
        check_arity(t, "shunt", 4)?;
        shunts = t
            .rows
            .iter()
            .map(|(line, r)| {
                Ok(Shunt {
                    id: as_id(r[0], *line, "shunt id")?,
                    bus: as_id(r[1], *line, "shunt bus")?,
                    gs: r[2] / base,
                    bs: r[3] / base,
                })
            })
            .collect::<Result<_>>()?;
    }

    let costs = doc.tables.get("gencost");
    if let Some(c) = costs {
        check_arity(c, "gencost", 4)?;
        if c.rows.len() < gen_t.rows.len() {
            return Err(Error::Parse {
                line: c.rows.last().map(|r| r.0).unwrap_or(0),
                msg: format!(
                    "gencost has {} rows for {} generators",
                    c.rows.len(),
                    gen_t.rows.len()
                ),
            });
        }
    }
    let fuels = doc.cells.get("genfuel");
    let mut generators = Vec::new();
    for (k, (line, row)) in gen_t.rows.iter().enumerate() {
        if row[7] <= 0.0 {
            continue;
        }
        let fuel = fuels
            .and_then(|f| f.get(k))
            .and_then(|s| s.parse::<Fuel>().ok())
            .unwrap_or(Fuel::Thermal);
        let (c2, c1, c0) = match costs {
            Some(c) => polynomial_cost(&c.rows[k].1, c.rows[k].0, base)?,
            None => fuel.default_cost(),
        };
        generators.push(Generator {
            id: generators.len() + 1,
            bus: as_id(row[0], *line, "generator bus")?,
            pmin: row[9] / base,
            pmax: row[8] / base,
            qmin: row[4] / base,
            qmax: row[3] / base,
            fuel,
            cost_c2: c2,
            cost_c1: c1,
            cost_c0: c0,
        });
    }

    let mut branches = Vec::new();
    for (line, row) in &branch_t.rows {
        if row[10] <= 0.0 {
            continue;
        }
        let (angmin, angmax) = if row.len() >= 13 {
            (row[11], row[12])
        } else {
            (-360.0, 360.0)
        };
        branches.push(Branch {
            id: branches.len() + 1,
            from_bus: as_id(row[0], *line, "branch from bus")?,
            to_bus: as_id(row[1], *line, "branch to bus")?,
            r: row[2],
            x: row[3],
            charge_b: row[4],
            tap: if row[8] == 0.0 { 1.0 } else { row[8] },
            shift: row[9].to_radians(),
            s_max: if row[5] <= 0.0 {
                f64::INFINITY
            } else {
                row[5] / base
            },
            angle_max: angle_limit(angmin, angmax),
            current_max: None,
        });
    }

    Network::new(base, buses, branches, generators, loads, shunts)
}

fn polynomial_cost(row: &[f64], line: usize, base: f64) -> Result<(f64, f64, f64)> {
    if row[0] != 2.0 {
        return Err(Error::Parse {
            line,
            msg: format!("unsupported cost model {} (only polynomial model 2)", row[0]),
        });
    }
    let n = as_id(row[3], line, "cost coefficient count")?;
    if row.len() < 4 + n {
        return Err(Error::Parse {
            line,
            msg: format!("gencost row declares {n} coefficients but has {}", row.len() - 4),
        });
    }
    // highest order first
    let coefs = &row[4..4 + n];
    let mut c = [0.0; 3];
    for (k, &v) in coefs.iter().rev().enumerate() {
        if k < 3 {
            c[k] = v;
        } else if v != 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("polynomial cost of degree {} not supported", n - 1),
            });
        }
    }
    Ok((c[2] * base * base, c[1] * base, c[0]))
}

/// Parses MATPOWER text into a validated [`Network`].
pub fn parse_case(text: &str) -> Result<Network> {
    document_to_network(&parse_document(text)?)
}

/// Formats a real with 14 significant digits, shortest form.
pub(crate) fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let prec = (13 - mag).clamp(0, 40) as usize;
    let mut s = format!("{x:.prec$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn write_row(out: &mut String, vals: &[f64]) {
    out.push('\t');
    let cells: Vec<String> = vals.iter().map(|&v| fmt_num(v)).collect();
    out.push_str(&cells.join("\t"));
    out.push_str(";\n");
}

/// Serializes a network as MATPOWER text. Loads and shunts are written both
/// as bus aggregates and as explicit `mpc.load`/`mpc.shunt` tables so that
/// reading the output back reproduces them record by record.
pub fn write_case(net: &Network) -> String {
    let base = net.base_mva();
    let mut out = String::new();
    out.push_str("function mpc = opfgap_case\n");
    out.push_str("mpc.version = '2';\n");
    let _ = writeln!(out, "mpc.baseMVA = {};", fmt_num(base));

    let ref_bus = net.reference_bus();
    let gens_by_bus = net.generators_by_bus();
    let demand = net.bus_demand(1.0, &Default::default());
    let shunt = net.bus_shunt();
    out.push_str("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n");
    out.push_str("mpc.bus = [\n");
    for (k, bus) in net.buses().iter().enumerate() {
        let kind = if k == ref_bus {
            3.0
        } else if !gens_by_bus[k].is_empty() {
            2.0
        } else {
            1.0
        };
        write_row(
            &mut out,
            &[
                bus.id as f64,
                kind,
                demand[k].re * base,
                demand[k].im * base,
                shunt[k].re * base,
                shunt[k].im * base,
                1.0,
                bus.setpoint_vm.unwrap_or(1.0),
                0.0,
                0.0,
                1.0,
                bus.vmax,
                bus.vmin,
            ],
        );
    }
    out.push_str("];\n");

    out.push_str("%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n");
    out.push_str("mpc.gen = [\n");
    for g in net.generators() {
        write_row(
            &mut out,
            &[
                g.bus as f64,
                0.0,
                0.0,
                g.qmax * base,
                g.qmin * base,
                1.0,
                base,
                1.0,
                g.pmax * base,
                g.pmin * base,
            ],
        );
    }
    out.push_str("];\n");

    out.push_str("%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n");
    out.push_str("mpc.branch = [\n");
    for br in net.branches() {
        let rate = if br.s_max.is_finite() {
            br.s_max * base
        } else {
            0.0
        };
        let ang = if br.angle_max == DEFAULT_ANGLE_MAX {
            360.0
        } else {
            br.angle_max.to_degrees()
        };
        write_row(
            &mut out,
            &[
                br.from_bus as f64,
                br.to_bus as f64,
                br.r,
                br.x,
                br.charge_b,
                rate,
                rate,
                rate,
                br.tap,
                br.shift.to_degrees(),
                1.0,
                -ang,
                ang,
            ],
        );
    }
    out.push_str("];\n");

    out.push_str("%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0\n");
    out.push_str("mpc.gencost = [\n");
    for g in net.generators() {
        write_row(
            &mut out,
            &[
                2.0,
                0.0,
                0.0,
                3.0,
                g.cost_c2 / (base * base),
                g.cost_c1 / base,
                g.cost_c0,
            ],
        );
    }
    out.push_str("];\n");

    out.push_str("mpc.genfuel = {\n");
    for g in net.generators() {
        let _ = writeln!(out, "\t'{}';", g.fuel);
    }
    out.push_str("};\n");

    out.push_str("%\tid\tbus\tPd\tQd\n");
    out.push_str("mpc.load = [\n");
    for l in net.loads() {
        write_row(&mut out, &[l.id as f64, l.bus as f64, l.p * base, l.q * base]);
    }
    out.push_str("];\n");

    out.push_str("%\tid\tbus\tGs\tBs\n");
    out.push_str("mpc.shunt = [\n");
    for s in net.shunts() {
        write_row(&mut out, &[s.id as f64, s.bus as f64, s.gs * base, s.bs * base]);
    }
    out.push_str("];\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn case9_counts() {
        let net = parse_case(fixtures::CASE9).unwrap();
        assert_eq!(net.buses().len(), 9);
        assert_eq!(net.branches().len(), 9);
        assert_eq!(net.generators().len(), 3);
        assert_eq!(net.loads().len(), 3);
        assert!(net.shunts().is_empty());
        let g = &net.generators()[0];
        assert!((g.pmax - 2.5).abs() < 1e-15);
        assert!((g.cost_c2 - 1100.0).abs() < 1e-9);
        assert!((g.cost_c1 - 500.0).abs() < 1e-12);
        assert_eq!(g.cost_c0, 150.0);
        assert_eq!(net.branches()[0].angle_max, DEFAULT_ANGLE_MAX);
        assert!((net.branches()[2].s_max - 1.5).abs() < 1e-15);
    }

    #[test]
    fn empty_input_is_missing_bus() {
        let err = parse_case("").unwrap_err();
        assert_eq!(err.to_string(), "parse error: missing bus section");
    }

    #[test]
    fn dangling_branch() {
        let text = fixtures::CASE9.replacen("\t9\t4\t0.01", "\t99\t4\t0.01", 1);
        assert!(matches!(
            parse_case(&text),
            Err(Error::DanglingBus { bus: 99, .. })
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = fixtures::CASE9.replacen("\t5\t1\t90\t30", "\t5\t1\tninety\t30", 1);
        match parse_case(&text) {
            Err(Error::Parse { line, .. }) => {
                assert_eq!(fixtures::CASE9.lines().nth(line - 1).unwrap().trim_start().split_whitespace().next(), Some("5"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = fixtures::CASE9.replacen("\t5\t1\t90\t30\t0\t0\t1\t1\t0\t345\t1\t1.1\t0.9;", "\t5\t1\t90;", 1);
        assert!(matches!(parse_case(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_bus_id() {
        let text = fixtures::CASE9.replacen("\t6\t1\t0\t0", "\t5\t1\t0\t0", 1);
        assert!(matches!(parse_case(&text), Err(Error::DuplicateId { .. })));
    }

    #[test]
    fn single_bus_network_writes_empty_branch_table() {
        let net = Network::new(
            100.0,
            vec![Bus {
                id: 1,
                vmin: 0.9,
                vmax: 1.1,
                setpoint_vm: Some(1.0),
            }],
            vec![],
            vec![],
            vec![],
            vec![],
        )
        .unwrap();
        let text = write_case(&net);
        assert!(text.contains("mpc.branch = [\n];"));
        assert_eq!(parse_case(&text).unwrap(), net);
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(250.0), "250");
        assert_eq!(fmt_num(-0.2), "-0.2");
        assert_eq!(fmt_num(0.0430292599), "0.0430292599");
        assert_eq!(fmt_num(f64::INFINITY), "Inf");
        assert_eq!(fmt_num(1.0 / 3.0), "0.33333333333333");
    }

    #[test]
    fn genfuel_and_cells() {
        let text = format!(
            "{}\nmpc.genfuel = {{\n\t'hydro';\n\t'nuclear';\n\t'coal';\n}};\n",
            fixtures::CASE9.replace("0.11\t5\t150", "0\t5\t150")
        );
        let net = parse_case(&text).unwrap();
        let fuels: Vec<Fuel> = net.generators().iter().map(|g| g.fuel).collect();
        assert_eq!(fuels, vec![Fuel::Hydro, Fuel::Nuclear, Fuel::Thermal]);
    }
}
