//! Per-architecture machine model: port layout plus the instruction-form
//! database with micro-op port groups and derived occupation vectors.
//!
//! Model files are line-oriented UTF-8 text:
//!
//! ```text
//! arch: skl
//! slots: P0, 0DV, P1, P2, P3, P4, P5, P6, P7
//! divider: 0DV->P0
//! agu_sharing: false
//! vfmadd132pd-xmm_xmm_mem, 0.5, 4.0, "(0.5,0,0.5,0.5,0.5,0,0,0,0)"
//! vmovsd-mem_xmm, 1.0, 4.0, "(0,0,0,0.5,0.5,1,0,0,0)", "[{P2|P3};{P4}]"
//! ```
//!
//! Groups are the source of truth; the quoted vector is the derived per-slot
//! occupation under equal spreading inside each group. Lines without the
//! explicit group field get their groups inferred from the vector (see
//! [`infer_groups`]). `\` continues a line, `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_rational::Ratio;
use num_traits::Zero;
use thiserror::Error;

use crate::cycles::{format_exact, format_exact_min1, parse_cy, Cy};

/// Operand type as it appears in a database key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OperandClass {
    Gpr8,
    Gpr16,
    Gpr32,
    Gpr64,
    Xmm,
    Ymm,
    Imm,
    Mem,
    Label,
}

impl OperandClass {
    pub fn as_str(self) -> &'static str {
        match self {
            OperandClass::Gpr8 => "gpr8",
            OperandClass::Gpr16 => "gpr16",
            OperandClass::Gpr32 => "gpr32",
            OperandClass::Gpr64 => "gpr64",
            OperandClass::Xmm => "xmm",
            OperandClass::Ymm => "ymm",
            OperandClass::Imm => "imm",
            OperandClass::Mem => "mem",
            OperandClass::Label => "label",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gpr8" => OperandClass::Gpr8,
            "gpr16" => OperandClass::Gpr16,
            "gpr32" => OperandClass::Gpr32,
            "gpr64" => OperandClass::Gpr64,
            "xmm" => OperandClass::Xmm,
            "ymm" => OperandClass::Ymm,
            "imm" => OperandClass::Imm,
            "mem" => OperandClass::Mem,
            "label" => OperandClass::Label,
            _ => return None,
        })
    }

    pub fn is_register(self) -> bool {
        matches!(
            self,
            OperandClass::Gpr8
                | OperandClass::Gpr16
                | OperandClass::Gpr32
                | OperandClass::Gpr64
                | OperandClass::Xmm
                | OperandClass::Ymm
        )
    }
}

/// Mnemonic plus ordered operand classes in AT&T source order
/// (destination last). The unit of database lookup.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstructionForm {
    pub mnemonic: String,
    pub operands: Vec<OperandClass>,
}

impl InstructionForm {
    pub fn new(mnemonic: &str, operands: Vec<OperandClass>) -> Self {
        InstructionForm {
            mnemonic: mnemonic.to_ascii_lowercase(),
            operands,
        }
    }

    /// Database key. Operand classes are listed destination-first, matching
    /// the key spelling used by the benchmark harness (`vfmadd132pd
    /// mem,xmm,xmm` keys as `vfmadd132pd-xmm_xmm_mem`).
    pub fn key(&self) -> String {
        if self.operands.is_empty() {
            return self.mnemonic.clone();
        }
        let classes: Vec<&str> = self.operands.iter().rev().map(|c| c.as_str()).collect();
        format!("{}-{}", self.mnemonic, classes.join("_"))
    }

    /// Inverse of [`InstructionForm::key`].
    pub fn parse_key(key: &str) -> Option<Self> {
        let key = key.trim();
        if key.is_empty() {
            return None;
        }
        match key.split_once('-') {
            None => Some(InstructionForm::new(key, Vec::new())),
            Some((mnemonic, classes)) => {
                if mnemonic.is_empty() {
                    return None;
                }
                let mut operands = classes
                    .split('_')
                    .map(OperandClass::parse)
                    .collect::<Option<Vec<_>>>()?;
                operands.reverse();
                Some(InstructionForm::new(mnemonic, operands))
            }
        }
    }
}

impl fmt::Display for InstructionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

/// The architecture's slot list: execution ports plus divider pipes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortModel {
    pub arch_id: String,
    pub slots: Vec<String>,
    /// divider slot index -> parent port index
    pub divider_slots: BTreeMap<usize, usize>,
    pub agu_load_store_sharing: bool,
}

impl PortModel {
    pub fn new(
        arch_id: &str,
        slots: Vec<String>,
        dividers: &[(String, String)],
        agu_load_store_sharing: bool,
    ) -> Result<Self, ModelError> {
        for (i, s) in slots.iter().enumerate() {
            if slots[..i].contains(s) {
                return Err(ModelError::Invalid(format!("duplicate slot name {s}")));
            }
        }
        let mut divider_slots = BTreeMap::new();
        for (slot, parent) in dividers {
            let si = slots
                .iter()
                .position(|s| s == slot)
                .ok_or_else(|| ModelError::UnknownSlot(slot.clone()))?;
            let pi = slots
                .iter()
                .position(|s| s == parent)
                .ok_or_else(|| ModelError::UnknownSlot(parent.clone()))?;
            divider_slots.insert(si, pi);
        }
        let model = PortModel {
            arch_id: arch_id.to_string(),
            slots,
            divider_slots,
            agu_load_store_sharing,
        };
        model.check_known_arch()?;
        Ok(model)
    }

    /// The shipped skl/zen ids carry fixed layouts; reject files that claim
    /// one of those ids with a different slot list.
    fn check_known_arch(&self) -> Result<(), ModelError> {
        let expect: Option<(&[&str], bool)> = match self.arch_id.as_str() {
            "skl" => Some((
                &["P0", "0DV", "P1", "P2", "P3", "P4", "P5", "P6", "P7"],
                false,
            )),
            "zen" => Some((
                &["P0", "P1", "P2", "P3", "3DV", "P4", "P5", "P6", "P7", "P8", "P9"],
                true,
            )),
            _ => None,
        };
        if let Some((slots, sharing)) = expect {
            if self.slots != slots {
                return Err(ModelError::Invalid(format!(
                    "arch {} requires slots {}",
                    self.arch_id,
                    slots.join(", ")
                )));
            }
            if self.agu_load_store_sharing != sharing {
                return Err(ModelError::Invalid(format!(
                    "arch {} requires agu_sharing: {sharing}",
                    self.arch_id
                )));
            }
        }
        Ok(())
    }

    pub fn slot_index(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s == name)
    }

    pub fn is_divider(&self, idx: usize) -> bool {
        self.divider_slots.contains_key(&idx)
    }

    /// Load/store AGU slot pair on sharing architectures: the last two slots
    /// of the model (P8/P9 on Zen).
    pub fn agu_slots(&self) -> Option<[usize; 2]> {
        if self.agu_load_store_sharing && self.slots.len() >= 2 {
            Some([self.slots.len() - 2, self.slots.len() - 1])
        } else {
            None
        }
    }
}

/// One micro-op: a set of eligible slots (indices into the port model) over
/// which its cycles spread with equal probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroOpGroup {
    /// sorted, non-empty
    pub slots: Vec<usize>,
    pub cycles: Cy,
}

impl MicroOpGroup {
    pub fn new(mut slots: Vec<usize>, cycles: Cy) -> Self {
        slots.sort_unstable();
        slots.dedup();
        MicroOpGroup { slots, cycles }
    }
}

/// Database record for one instruction form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelEntry {
    pub form: InstructionForm,
    pub reciprocal_throughput: Cy,
    pub latency: Cy,
    pub groups: Vec<MicroOpGroup>,
    /// Derived: occupation[s] = sum over groups containing s of
    /// cycles / |slots|.
    pub occupation_vector: Vec<Cy>,
}

impl ModelEntry {
    pub fn new(
        form: InstructionForm,
        reciprocal_throughput: Cy,
        latency: Cy,
        groups: Vec<MicroOpGroup>,
        model: &PortModel,
    ) -> Result<Self, ModelError> {
        if reciprocal_throughput < Cy::zero() || latency < Cy::zero() {
            return Err(ModelError::Invalid(format!(
                "{}: negative rTP or latency",
                form.key()
            )));
        }
        for g in &groups {
            if g.slots.is_empty() {
                return Err(ModelError::Invalid(format!("{}: empty group", form.key())));
            }
            if g.cycles <= Cy::zero() {
                return Err(ModelError::Invalid(format!(
                    "{}: non-positive group cycles",
                    form.key()
                )));
            }
            for &s in &g.slots {
                if s >= model.slots.len() {
                    return Err(ModelError::UnknownSlot(format!("slot index {s}")));
                }
            }
        }
        let occupation_vector = derive_vector(&groups, model.slots.len());
        Ok(ModelEntry {
            form,
            reciprocal_throughput,
            latency,
            groups,
            occupation_vector,
        })
    }

    /// The classic four-field database line (no explicit group field).
    pub fn vector_line(&self) -> String {
        let vec: Vec<String> = self.occupation_vector.iter().map(|v| format_exact(*v)).collect();
        format!(
            "{}, {}, {}, \"({})\"",
            self.form.key(),
            format_exact_min1(self.reciprocal_throughput),
            format_exact_min1(self.latency),
            vec.join(",")
        )
    }

    /// Full canonical file line; appends the explicit group field whenever
    /// vector-only inference would not reproduce the stored groups.
    pub fn file_line(&self, model: &PortModel) -> String {
        let base = self.vector_line();
        let (inferred, _) = infer_groups(&self.occupation_vector, self.reciprocal_throughput);
        if inferred == self.groups {
            base
        } else {
            format!("{}, \"{}\"", base, format_groups(&self.groups, model))
        }
    }
}

/// occupation[s] = sum over groups containing s of cycles / |slots|.
pub fn derive_vector(groups: &[MicroOpGroup], n_slots: usize) -> Vec<Cy> {
    let mut v = vec![Cy::zero(); n_slots];
    for g in groups {
        let share = g.cycles / Ratio::from_integer(g.slots.len() as i64);
        for &s in &g.slots {
            v[s] += share;
        }
    }
    v
}

/// Reconstruct micro-op groups from a bare occupation vector.
///
/// Slots sharing an identical positive value form one cluster. A cluster is
/// kept as a single group unless the reciprocal throughput suggests the
/// instruction spreads over k = round(1/rTP) ports and the cluster divides
/// evenly into runs of k slots; then it is split into consecutive groups of k
/// (in slot order). Returns the groups and whether such an ambiguous split
/// happened.
pub fn infer_groups(vector: &[Cy], rtp: Cy) -> (Vec<MicroOpGroup>, bool) {
    let mut clusters: Vec<(Cy, Vec<usize>)> = Vec::new();
    for (i, &v) in vector.iter().enumerate() {
        if v <= Cy::zero() {
            continue;
        }
        match clusters.iter_mut().find(|(cv, _)| *cv == v) {
            Some((_, slots)) => slots.push(i),
            None => clusters.push((v, vec![i])),
        }
    }
    // keep groups in first-slot order
    clusters.sort_by_key(|(_, slots)| slots[0]);
    let k = if rtp > Cy::zero() {
        let ports = (Cy::from_integer(1) / rtp).round().to_integer();
        ports.max(1) as usize
    } else {
        1
    };
    let mut groups = Vec::new();
    let mut split = false;
    for (v, slots) in clusters {
        if slots.len() > k && slots.len() % k == 0 {
            split = true;
            for chunk in slots.chunks(k) {
                groups.push(MicroOpGroup::new(
                    chunk.to_vec(),
                    v * Ratio::from_integer(k as i64),
                ));
            }
        } else {
            let len = slots.len() as i64;
            groups.push(MicroOpGroup::new(slots, v * Ratio::from_integer(len)));
        }
    }
    (groups, split)
}

fn format_groups(groups: &[MicroOpGroup], model: &PortModel) -> String {
    let parts: Vec<String> = groups
        .iter()
        .map(|g| {
            let slots: Vec<&str> = g.slots.iter().map(|&s| model.slots[s].as_str()).collect();
            if g.cycles == Cy::from_integer(1) {
                format!("{{{}}}", slots.join("|"))
            } else {
                format!("{{{}:{}}}", slots.join("|"), format_exact(g.cycles))
            }
        })
        .collect();
    format!("[{}]", parts.join(";"))
}

fn parse_groups(text: &str, model: &PortModel) -> Result<Vec<MicroOpGroup>, String> {
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or("group field must be bracketed")?;
    let mut groups = Vec::new();
    if inner.trim().is_empty() {
        return Ok(groups);
    }
    for part in inner.split(';') {
        let body = part
            .trim()
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or("group must be brace-enclosed")?;
        let (slot_text, cycles) = match body.rsplit_once(':') {
            Some((s, c)) => (
                s,
                parse_cy(c).ok_or_else(|| format!("bad group cycles {c:?}"))?,
            ),
            None => (body, Cy::from_integer(1)),
        };
        let mut slots = Vec::new();
        for name in slot_text.split('|') {
            let name = name.trim();
            let idx = model
                .slot_index(name)
                .ok_or_else(|| format!("unknown slot name {name:?}"))?;
            slots.push(idx);
        }
        groups.push(MicroOpGroup::new(slots, cycles));
    }
    Ok(groups)
}

/// Immutable after load; share freely across analyses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDatabase {
    pub port_model: PortModel,
    pub entries: BTreeMap<InstructionForm, ModelEntry>,
}

/// Result of a load: the database plus non-fatal findings (soft-check and
/// group-inference warnings).
#[derive(Debug)]
pub struct Loaded {
    pub db: ModelDatabase,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: vector length {got}, model has {want} slots")]
    VectorLength { line: usize, got: usize, want: usize },
    #[error("line {line}: stored vector does not match vector derived from groups")]
    VectorGroupMismatch { line: usize },
    #[error("unknown slot name {0}")]
    UnknownSlot(String),
    #[error("duplicate form {0}")]
    DuplicateForm(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

impl ModelDatabase {
    pub fn new(port_model: PortModel) -> Self {
        ModelDatabase {
            port_model,
            entries: BTreeMap::new(),
        }
    }

    pub fn load_path(path: &Path) -> Result<Loaded, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::load_str(&text)
    }

    pub fn load_str(text: &str) -> Result<Loaded, ModelError> {
        let mut arch: Option<String> = None;
        let mut slots: Option<Vec<String>> = None;
        let mut dividers: Vec<(String, String)> = Vec::new();
        let mut agu_sharing = false;
        let mut warnings = Vec::new();
        let mut model: Option<PortModel> = None;
        let mut entries: BTreeMap<InstructionForm, ModelEntry> = BTreeMap::new();

        let mut lines = text.lines().enumerate().peekable();
        while let Some((idx, raw)) = lines.next() {
            let line_no = idx + 1;
            // join continuation lines before stripping comments
            let mut joined = raw.to_string();
            while joined.trim_end().ends_with('\\') {
                let trimmed = joined.trim_end();
                joined = trimmed[..trimmed.len() - 1].to_string();
                match lines.next() {
                    Some((_, next)) => joined.push_str(next.trim_start()),
                    None => {
                        return Err(ModelError::Malformed {
                            line: line_no,
                            msg: "dangling line continuation".into(),
                        })
                    }
                }
            }
            let line = strip_comment(&joined);
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("arch:") {
                arch = Some(rest.trim().to_string());
                continue;
            }
            if let Some(rest) = line.strip_prefix("slots:") {
                slots = Some(rest.split(',').map(|s| s.trim().to_string()).collect());
                continue;
            }
            if let Some(rest) = line.strip_prefix("divider:") {
                let (slot, parent) =
                    rest.trim()
                        .split_once("->")
                        .ok_or_else(|| ModelError::Malformed {
                            line: line_no,
                            msg: "divider line must be <slot>-><parent>".into(),
                        })?;
                dividers.push((slot.trim().to_string(), parent.trim().to_string()));
                continue;
            }
            if let Some(rest) = line.strip_prefix("agu_sharing:") {
                agu_sharing = match rest.trim() {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(ModelError::Malformed {
                            line: line_no,
                            msg: format!("agu_sharing must be true or false, got {other:?}"),
                        })
                    }
                };
                continue;
            }

            // first entry line freezes the port model
            if model.is_none() {
                let arch = arch.clone().ok_or_else(|| ModelError::Malformed {
                    line: line_no,
                    msg: "entry before arch: header".into(),
                })?;
                let slots = slots.clone().ok_or_else(|| ModelError::Malformed {
                    line: line_no,
                    msg: "entry before slots: header".into(),
                })?;
                model = Some(PortModel::new(&arch, slots, &dividers, agu_sharing)?);
            }
            let pm = model.as_ref().unwrap();
            let entry = parse_entry_line(line, line_no, pm, &mut warnings)?;
            let key = entry.form.key();
            if entries.insert(entry.form.clone(), entry).is_some() {
                return Err(ModelError::DuplicateForm(key));
            }
        }

        // a file may define only the port model
        let model = match model {
            Some(m) => m,
            None => {
                let arch = arch.ok_or(ModelError::Invalid("missing arch: header".into()))?;
                let slots = slots.ok_or(ModelError::Invalid("missing slots: header".into()))?;
                PortModel::new(&arch, slots, &dividers, agu_sharing)?
            }
        };

        for entry in entries.values() {
            soft_check(entry, &model, &mut warnings);
        }
        Ok(Loaded {
            db: ModelDatabase {
                port_model: model,
                entries,
            },
            warnings,
        })
    }

    /// Canonical text form: headers, then entries sorted by form key.
    pub fn save(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("arch: {}\n", self.port_model.arch_id));
        out.push_str(&format!("slots: {}\n", self.port_model.slots.join(", ")));
        for (&slot, &parent) in &self.port_model.divider_slots {
            out.push_str(&format!(
                "divider: {}->{}\n",
                self.port_model.slots[slot], self.port_model.slots[parent]
            ));
        }
        out.push_str(&format!(
            "agu_sharing: {}\n",
            self.port_model.agu_load_store_sharing
        ));
        let mut keys: Vec<&ModelEntry> = self.entries.values().collect();
        keys.sort_by_key(|e| e.form.key());
        for entry in keys {
            out.push_str(&entry.file_line(&self.port_model));
            out.push('\n');
        }
        out
    }

    pub fn save_path(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.save())?;
        Ok(())
    }

    /// Exact match on (mnemonic, signature); absence is a value.
    pub fn lookup(&self, form: &InstructionForm) -> Option<&ModelEntry> {
        self.entries.get(form)
    }

    /// Returns a new database with the entry added.
    pub fn add_entry(&self, entry: ModelEntry) -> Result<ModelDatabase, ModelError> {
        if entry.occupation_vector.len() != self.port_model.slots.len() {
            return Err(ModelError::VectorLength {
                line: 0,
                got: entry.occupation_vector.len(),
                want: self.port_model.slots.len(),
            });
        }
        for g in &entry.groups {
            for &s in &g.slots {
                if s >= self.port_model.slots.len() {
                    return Err(ModelError::UnknownSlot(format!("slot index {s}")));
                }
            }
        }
        if self.entries.contains_key(&entry.form) {
            return Err(ModelError::DuplicateForm(entry.form.key()));
        }
        if derive_vector(&entry.groups, self.port_model.slots.len()) != entry.occupation_vector {
            return Err(ModelError::VectorGroupMismatch { line: 0 });
        }
        let mut db = self.clone();
        db.entries.insert(entry.form.clone(), entry);
        Ok(db)
    }
}

/// Non-divider occupations above the reciprocal throughput are suspicious but
/// not fatal.
fn soft_check(entry: &ModelEntry, model: &PortModel, warnings: &mut Vec<String>) {
    let max = entry
        .occupation_vector
        .iter()
        .enumerate()
        .filter(|(i, _)| !model.is_divider(*i))
        .map(|(_, v)| *v)
        .max();
    if let Some(max) = max {
        if max > entry.reciprocal_throughput {
            warnings.push(format!(
                "{}: max non-divider occupation {} exceeds rTP {}",
                entry.form.key(),
                format_exact(max),
                format_exact(entry.reciprocal_throughput)
            ));
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Split an entry line into fields on top-level commas (commas inside quoted
/// fields stay put).
fn split_fields(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    for c in line.chars() {
        match c {
            '"' => in_quotes = !in_quotes,
            ',' if !in_quotes => {
                fields.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    fields.push(cur.trim().to_string());
    fields
}

fn unquote(field: &str) -> Option<&str> {
    field.strip_prefix('"').and_then(|f| f.strip_suffix('"'))
}

fn parse_entry_line(
    line: &str,
    line_no: usize,
    model: &PortModel,
    warnings: &mut Vec<String>,
) -> Result<ModelEntry, ModelError> {
    let malformed = |msg: String| ModelError::Malformed { line: line_no, msg };
    let fields = split_fields(line);
    if fields.len() != 4 && fields.len() != 5 {
        return Err(malformed(format!(
            "expected 4 or 5 fields, got {}",
            fields.len()
        )));
    }
    let form = InstructionForm::parse_key(&fields[0])
        .ok_or_else(|| malformed(format!("bad form key {:?}", fields[0])))?;
    let rtp = parse_cy(&fields[1]).ok_or_else(|| malformed(format!("bad rTP {:?}", fields[1])))?;
    let lat =
        parse_cy(&fields[2]).ok_or_else(|| malformed(format!("bad latency {:?}", fields[2])))?;
    let vec_text = unquote(&fields[3])
        .and_then(|f| f.strip_prefix('('))
        .and_then(|f| f.strip_suffix(')'))
        .ok_or_else(|| malformed("vector field must look like \"(...)\"".into()))?;
    let vector: Vec<Cy> = vec_text
        .split(',')
        .map(parse_cy)
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| malformed(format!("bad vector {:?}", fields[3])))?;
    if vector.len() != model.slots.len() {
        return Err(ModelError::VectorLength {
            line: line_no,
            got: vector.len(),
            want: model.slots.len(),
        });
    }
    if vector.iter().any(|v| *v < Cy::zero()) {
        return Err(malformed("negative vector entry".into()));
    }
    let groups = if fields.len() == 5 {
        let group_text =
            unquote(&fields[4]).ok_or_else(|| malformed("group field must be quoted".into()))?;
        parse_groups(group_text, model).map_err(malformed)?
    } else {
        let (groups, split) = infer_groups(&vector, rtp);
        if split {
            warnings.push(format!(
                "line {line_no}: {} groups inferred by splitting an equal-value slot cluster; \
                 add an explicit group field if this is wrong",
                form.key()
            ));
        }
        groups
    };
    let entry = ModelEntry::new(form, rtp, lat, groups, model)?;
    if entry.occupation_vector != vector {
        return Err(ModelError::VectorGroupMismatch { line: line_no });
    }
    Ok(entry)
}
