//! Throughput analysis: per-instruction port occupations, the Zen
//! load-behind-store hiding rule, per-slot totals and the bottleneck.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::asm::{InstKind, Instruction, MarkedKernel};
use crate::cycles::{format_exact, format_two_decimals, Cy};
use crate::model::{derive_vector, InstructionForm, MicroOpGroup, ModelDatabase, PortModel};

/// One report row: an instruction (or label/directive) with its micro-op
/// groups and which of them are hidden behind a store.
#[derive(Debug, Clone)]
pub struct OccupationRow {
    pub instruction: Instruction,
    /// Groups of the matched entry; empty for labels, directives and
    /// unmatched instructions.
    pub groups: Vec<MicroOpGroup>,
    /// Indices into `groups` excluded from the totals (rendered
    /// parenthesized).
    pub hidden_groups: Vec<usize>,
    pub matched: bool,
}

impl OccupationRow {
    /// Occupation of all groups, hidden ones included.
    pub fn per_slot(&self, n_slots: usize) -> Vec<Cy> {
        derive_vector(&self.groups, n_slots)
    }

    /// Occupation of hidden groups only.
    pub fn hidden_per_slot(&self, n_slots: usize) -> Vec<Cy> {
        let hidden: Vec<MicroOpGroup> = self
            .hidden_groups
            .iter()
            .map(|&i| self.groups[i].clone())
            .collect();
        derive_vector(&hidden, n_slots)
    }

    /// Occupation counted into the totals.
    pub fn visible_per_slot(&self, n_slots: usize) -> Vec<Cy> {
        let all = self.per_slot(n_slots);
        let hidden = self.hidden_per_slot(n_slots);
        all.iter().zip(&hidden).map(|(a, h)| *a - *h).collect()
    }

    fn is_instruction(&self) -> bool {
        self.instruction.kind == InstKind::Instruction
    }

    /// Destination-last convention: an instruction whose final operand is a
    /// memory reference writes memory.
    fn is_store(&self) -> bool {
        self.is_instruction()
            && self
                .instruction
                .operands
                .last()
                .map(|o| o.class() == crate::model::OperandClass::Mem)
                .unwrap_or(false)
    }
}

#[derive(Debug, Clone)]
pub struct KernelAnalysis {
    pub rows: Vec<OccupationRow>,
    pub totals: Vec<Cy>,
    pub bottleneck_cycles: Cy,
    /// All slots attaining the maximum total (ties report every slot).
    pub bottleneck_slots: Vec<usize>,
    pub unmatched_forms: BTreeSet<InstructionForm>,
}

/// Match every kernel line against the database and total the per-slot
/// pressure. Unmatched forms are collected, never fatal.
pub fn analyze_kernel(kernel: &MarkedKernel, db: &ModelDatabase) -> KernelAnalysis {
    let n_slots = db.port_model.slots.len();
    let mut rows = Vec::new();
    let mut unmatched_forms = BTreeSet::new();
    for line in &kernel.lines {
        let mut groups = Vec::new();
        let mut matched = line.kind != InstKind::Instruction;
        if let Some(form) = line.form() {
            match db.lookup(&form) {
                Some(entry) => {
                    groups = entry.groups.clone();
                    matched = true;
                }
                None => {
                    unmatched_forms.insert(form);
                }
            }
        }
        rows.push(OccupationRow {
            instruction: line.clone(),
            groups,
            hidden_groups: Vec::new(),
            matched,
        });
    }
    let rows = apply_load_hiding(rows, &db.port_model);

    let mut totals = vec![Cy::zero(); n_slots];
    for row in &rows {
        for (t, v) in totals.iter_mut().zip(row.visible_per_slot(n_slots)) {
            *t += v;
        }
    }
    let bottleneck_cycles = totals.iter().copied().max().unwrap_or_else(Cy::zero);
    let bottleneck_slots = totals
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == bottleneck_cycles)
        .map(|(i, _)| i)
        .collect();
    KernelAnalysis {
        rows,
        totals,
        bottleneck_cycles,
        bottleneck_slots,
        unmatched_forms,
    }
}

/// On AGU-sharing architectures each store hides one earlier load micro-op
/// on the shared AGU ports: scanning in program order, a store pairs with the
/// earliest not-yet-hidden load group over exactly the AGU slot pair. No-op
/// elsewhere.
pub fn apply_load_hiding(mut rows: Vec<OccupationRow>, model: &PortModel) -> Vec<OccupationRow> {
    let Some(agu) = model.agu_slots() else {
        return rows;
    };
    let mut pending: Vec<(usize, usize)> = Vec::new(); // (row, group) FIFO
    for i in 0..rows.len() {
        if rows[i].is_store() {
            if !pending.is_empty() {
                let (r, g) = pending.remove(0);
                rows[r].hidden_groups.push(g);
            }
            continue;
        }
        if !rows[i].is_instruction() {
            continue;
        }
        for (gi, group) in rows[i].groups.iter().enumerate() {
            if group.slots == agu {
                pending.push((i, gi));
            }
        }
    }
    rows
}

/// Fixed-width report in the style of the tool's table output. Divider-pipe
/// columns appear (as `-- DV`, adjacent to the parent port) only when some
/// row occupies them.
pub fn render_report(analysis: &KernelAnalysis, model: &PortModel) -> String {
    let n_slots = model.slots.len();
    let per_row: Vec<Vec<Cy>> = analysis.rows.iter().map(|r| r.per_slot(n_slots)).collect();
    let hidden_row: Vec<Vec<Cy>> = analysis
        .rows
        .iter()
        .map(|r| r.hidden_per_slot(n_slots))
        .collect();

    let displayed: Vec<usize> = (0..n_slots)
        .filter(|&s| {
            if !model.is_divider(s) {
                return true;
            }
            per_row.iter().any(|r| !r[s].is_zero()) || !analysis.totals[s].is_zero()
        })
        .collect();

    // cell text per displayed column, rows then totals
    let mut cells: Vec<Vec<String>> = Vec::new();
    for row_idx in 0..analysis.rows.len() {
        let mut line = Vec::new();
        for &s in &displayed {
            let all = per_row[row_idx][s];
            let hid = hidden_row[row_idx][s];
            let vis = all - hid;
            let mut text = String::new();
            if !vis.is_zero() {
                text.push_str(&format_two_decimals(vis));
            }
            if !hid.is_zero() {
                if !text.is_empty() {
                    text.push(' ');
                }
                text.push_str(&format!("({})", format_two_decimals(hid)));
            }
            line.push(text);
        }
        cells.push(line);
    }
    let totals_line: Vec<String> = displayed
        .iter()
        .map(|&s| {
            let t = format_two_decimals(analysis.totals[s]);
            if analysis.bottleneck_slots.contains(&s) && !analysis.bottleneck_cycles.is_zero() {
                format!("*{t}*")
            } else {
                t
            }
        })
        .collect();

    let headers: Vec<String> = displayed
        .iter()
        .map(|&s| {
            if model.is_divider(s) {
                "-- DV".to_string()
            } else {
                model.slots[s].clone()
            }
        })
        .collect();

    let widths: Vec<usize> = (0..displayed.len())
        .map(|c| {
            let mut w = headers[c].len().max(totals_line[c].len());
            for row in &cells {
                w = w.max(row[c].len());
            }
            w
        })
        .collect();

    let fmt_line = |parts: &[String]| -> String {
        parts
            .iter()
            .enumerate()
            .map(|(c, p)| format!("{:>width$}", p, width = widths[c]))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let rule_len = widths.iter().sum::<usize>() + widths.len().saturating_sub(1);
    let mut out = String::new();
    out.push_str(&fmt_line(&headers));
    out.push_str("  Assembly Instructions\n");
    out.push_str(&"-".repeat(rule_len + 24));
    out.push('\n');
    for (row_idx, row) in analysis.rows.iter().enumerate() {
        out.push_str(&fmt_line(&cells[row_idx]));
        out.push_str("  ");
        out.push_str(row.instruction.raw_text.trim_end());
        if !row.matched {
            out.push_str("   <- no entry");
        }
        out.push('\n');
    }
    out.push_str(&"-".repeat(rule_len + 24));
    out.push('\n');
    out.push_str(&fmt_line(&totals_line));
    out.push('\n');
    let slot_names: Vec<&str> = analysis
        .bottleneck_slots
        .iter()
        .map(|&s| model.slots[s].as_str())
        .collect();
    out.push_str(&format!(
        "Total throughput: {} cy per assembly iteration, bottleneck: {}\n",
        format_two_decimals(analysis.bottleneck_cycles),
        slot_names.join(", ")
    ));
    if !analysis.unmatched_forms.is_empty() {
        out.push_str(&format!(
            "WARNING: {} instruction form(s) without a database entry (counted as zero occupation):\n",
            analysis.unmatched_forms.len()
        ));
        for form in &analysis.unmatched_forms {
            out.push_str(&format!("  {}\n", form.key()));
        }
    }
    out
}

/// Line-oriented key-value emission of the analysis for downstream tools.
/// Values are exact rationals.
pub fn render_machine_readable(analysis: &KernelAnalysis, model: &PortModel) -> String {
    let n_slots = model.slots.len();
    let mut out = String::new();
    out.push_str(&format!("arch {}\n", model.arch_id));
    out.push_str(&format!("slots {}\n", model.slots.join(",")));
    for (i, row) in analysis.rows.iter().enumerate() {
        let vis = row.visible_per_slot(n_slots);
        let hid = row.hidden_per_slot(n_slots);
        out.push_str(&format!(
            "row {} matched={} occupation={} hidden={} text={}\n",
            i + 1,
            row.matched as u8,
            join_exact(&vis),
            join_exact(&hid),
            row.instruction.raw_text.trim()
        ));
    }
    out.push_str(&format!("totals {}\n", join_exact(&analysis.totals)));
    out.push_str(&format!(
        "bottleneck_cycles {}\n",
        format_exact(analysis.bottleneck_cycles)
    ));
    let slots: Vec<&str> = analysis
        .bottleneck_slots
        .iter()
        .map(|&s| model.slots[s].as_str())
        .collect();
    out.push_str(&format!("bottleneck_slots {}\n", slots.join(",")));
    for form in &analysis.unmatched_forms {
        out.push_str(&format!("unmatched {}\n", form.key()));
    }
    out
}

fn join_exact(v: &[Cy]) -> String {
    v.iter()
        .map(|x| format_exact(*x))
        .collect::<Vec<_>>()
        .join(",")
}
