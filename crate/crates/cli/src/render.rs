//! Aligned text tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use pcr_fusion::{Bba, Element, Frame};

use crate::report::{Report, RuleResult, COINCIDENCE};

/// Decimal rounding half away from zero, applied to the value first cut to
/// twelve decimals so that a double just below a tie (0.4962025 stored as
/// 0.49620249999...) still rounds up.
pub fn number(v: f64, precision: usize) -> String {
    if precision >= 12 || !v.is_finite() {
        return format!("{v:.precision$}");
    }
    let cut = format!("{:.12}", v.abs());
    let (whole, frac) = cut.split_once('.').expect("fixed notation");
    let mut digits: Vec<u8> = whole.bytes().chain(frac.bytes().take(precision)).collect();
    if frac.as_bytes()[precision] >= b'5' {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - precision;
    let mut out = String::from_utf8(digits[..split].to_vec()).expect("ascii digits");
    if precision > 0 {
        out.push('.');
        out.push_str(std::str::from_utf8(&digits[split..]).expect("ascii digits"));
    }
    if v < 0.0 && out.bytes().any(|b| (b'1'..=b'9').contains(&b)) {
        out.insert(0, '-');
    }
    out
}

/// Rules linked by coinciding pairs, in report order.
fn groups(rules: &[String], pairs: &[[String; 2]]) -> Vec<Vec<String>> {
    let mut group: Vec<usize> = (0..rules.len()).collect();
    let index = |name: &str| rules.iter().position(|r| r == name).expect("known rule");
    for [a, b] in pairs {
        let (ga, gb) = (group[index(a)], group[index(b)]);
        for g in group.iter_mut() {
            if *g == gb {
                *g = ga;
            }
        }
    }
    let mut out: Vec<Vec<String>> = Vec::new();
    let mut seen = Vec::new();
    for (i, &g) in group.iter().enumerate() {
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let members: Vec<String> = (i..rules.len())
            .filter(|&j| group[j] == g)
            .map(|j| rules[j].clone())
            .collect();
        if members.len() > 1 {
            out.push(members);
        }
    }
    out
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render(&self, out: &mut String) {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String], out: &mut String| {
            let mut text = String::new();
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                let pad = w.saturating_sub(cell.chars().count());
                if i == 0 {
                    text.push_str(cell);
                    text.push_str(&" ".repeat(pad));
                } else {
                    text.push_str("  ");
                    text.push_str(&" ".repeat(pad));
                    text.push_str(cell);
                }
            }
            for cell in cells.iter().skip(widths.len()) {
                text.push_str("  ");
                text.push_str(cell);
            }
            out.push_str(text.trim_end());
            out.push('\n');
        };
        line(&self.header, out);
        for row in &self.rows {
            line(row, out);
        }
    }
}

fn columns<'a>(bbas: impl IntoIterator<Item = &'a Bba>) -> Vec<Element> {
    let set: BTreeSet<Element> = bbas
        .into_iter()
        .flat_map(|b| b.focal_elements().cloned())
        .collect();
    let mut list: Vec<Element> = set.into_iter().collect();
    list.sort_by_key(|e| {
        (
            e.is_classically_empty() || e.is_closure(),
            e.clauses().len(),
            e.label_mask().count_ones(),
        )
    });
    list
}

fn masses(bba: &Bba, columns: &[Element], precision: usize) -> Vec<String> {
    columns
        .iter()
        .map(|e| {
            let m = bba.mass(e);
            if m == 0.0 {
                "-".to_string()
            } else {
                number(m, precision)
            }
        })
        .collect()
}

fn header(first: &str, frame: &Frame, columns: &[Element]) -> Vec<String> {
    [first.to_string(), "k".to_string()]
        .into_iter()
        .chain(columns.iter().map(|e| frame.show(e)))
        .collect()
}

fn notes(result: &RuleResult, precision: usize, out: &mut Vec<String>) {
    let name = &result.rule;
    for (i, step) in result.steps.iter().enumerate() {
        let at = if result.steps.len() > 1 {
            format!("{name} step {}", i + 1)
        } else {
            name.clone()
        };
        if step.under_normalized {
            out.push(format!(
                "{at}: masses sum to {}, below 1",
                number(step.mass_sum, precision)
            ));
        }
        if step.output == "open" {
            out.push(format!("{at}: open world, the empty set keeps its mass"));
        }
        if let Some(order) = &step.order {
            let order: Vec<String> = order.iter().map(ToString::to_string).collect();
            out.push(format!("{at}: source order {}", order.join(",")));
        }
        let mut fallbacks: BTreeMap<&str, usize> = BTreeMap::new();
        for f in &step.fallbacks {
            *fallbacks.entry(f.kind).or_default() += 1;
        }
        for (kind, count) in fallbacks {
            out.push(format!("{at}: {count} fallback transfer(s) via {kind}"));
        }
    }
    if let Some(e) = &result.error {
        out.push(format!("{name}: error: {e}"));
    }
}

fn describe(report: &Report) -> String {
    let mut model = report.model.kind.to_string();
    if !report.model.empty.is_empty() {
        let _ = write!(model, " with {} empty", report.model.empty.join(", "));
    }
    let mut text = format!(
        "{}: frame {{{}}}, {} model, {} world",
        report.scenario,
        report.frame.join(", "),
        model,
        report.model.world
    );
    if report.model.theta0 {
        text.push_str(", theta0 closure");
    }
    if report.mode == "sequential" {
        let _ = write!(text, ", prior and {} observation(s)", report.observations);
    } else {
        let _ = write!(text, ", {} source(s)", report.sources);
    }
    text
}

pub fn table(report: &Report, frame: &Frame, precision: usize) -> String {
    let mut out = describe(report);
    out.push_str("\n\n");
    let mut remarks = Vec::new();
    if report.mode == "sequential" {
        for result in &report.results {
            let columns = columns(&result.bbas);
            let mut table = Table {
                header: header(&result.rule, frame, &columns),
                rows: Vec::new(),
            };
            for (i, (step, bba)) in result.steps.iter().zip(&result.bbas).enumerate() {
                let mut row = vec![format!("step {}", i + 1), number(step.conflict, precision)];
                row.extend(masses(bba, &columns, precision));
                table.rows.push(row);
            }
            table.render(&mut out);
            out.push('\n');
            notes(result, precision, &mut remarks);
        }
    } else {
        let columns = columns(report.results.iter().filter_map(|r| r.bbas.last()));
        let mut table = Table {
            header: header("rule", frame, &columns),
            rows: Vec::new(),
        };
        for result in &report.results {
            let mut row = vec![result.rule.clone()];
            match (result.steps.last(), result.bbas.last()) {
                (Some(step), Some(bba)) => {
                    row.push(number(step.conflict, precision));
                    row.extend(masses(bba, &columns, precision));
                }
                _ => row.push("error".to_string()),
            }
            table.rows.push(row);
            notes(result, precision, &mut remarks);
        }
        table.render(&mut out);
        out.push('\n');
    }
    if !remarks.is_empty() {
        out.push_str("notes:\n");
        for r in remarks {
            let _ = writeln!(out, "  {r}");
        }
        out.push('\n');
    }
    if let Some(c) = &report.comparison {
        out.push_str("max |difference| between final outputs:\n");
        let mut table = Table {
            header: std::iter::once(String::new())
                .chain(c.rules.iter().cloned())
                .collect(),
            rows: Vec::new(),
        };
        for (name, row) in c.rules.iter().zip(&c.max_abs_diff) {
            let mut cells = vec![name.clone()];
            cells.extend(row.iter().map(|g| match g {
                Some(g) => number(*g, precision),
                None => "-".to_string(),
            }));
            table.rows.push(cells);
        }
        table.render(&mut out);
        if c.coincident.is_empty() {
            let _ = writeln!(out, "\nno two rules coincide within {COINCIDENCE:e}");
        } else {
            let classes: Vec<String> = groups(&c.rules, &c.coincident)
                .iter()
                .map(|g| g.join(" = "))
                .collect();
            let _ = writeln!(
                out,
                "\ncoincide within {COINCIDENCE:e}: {}",
                classes.join("; ")
            );
        }
    }
    out
}
