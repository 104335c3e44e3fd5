//! AT&T-syntax x86 assembly parsing and IACA-style marker extraction.
//!
//! The marked kernel is whatever sits strictly between the
//! `mov $111, %ebx` / `.byte 100,103,144` pair and the matching `$222` pair.
//! Everything is pure text processing; no object files involved.

use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::model::{InstructionForm, OperandClass};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemRef {
    pub base: Option<String>,
    pub index: Option<String>,
    pub scale: u8,
    pub displacement: i64,
    pub segment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Register { class: OperandClass, name: String },
    Immediate { value: i64 },
    Memory(MemRef),
    Label { symbol: String },
}

impl Operand {
    pub fn class(&self) -> OperandClass {
        match self {
            Operand::Register { class, .. } => *class,
            Operand::Immediate { .. } => OperandClass::Imm,
            Operand::Memory(_) => OperandClass::Mem,
            Operand::Label { .. } => OperandClass::Label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstKind {
    Instruction,
    Label,
    Directive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub kind: InstKind,
    /// Lowercased mnemonic for instructions; label symbol (without the
    /// colon) for labels; directive name for directives.
    pub mnemonic: String,
    pub operands: Vec<Operand>,
    /// Verbatim source line; round-trips into the report unchanged.
    pub raw_text: String,
    pub line_no: usize,
}

impl Instruction {
    /// Erase operand detail down to the database key: classes in source
    /// (destination-last) order, all addressing modes collapsed to `mem`.
    pub fn form(&self) -> Option<InstructionForm> {
        if self.kind != InstKind::Instruction {
            return None;
        }
        Some(InstructionForm::new(
            &self.mnemonic,
            self.operands.iter().map(|o| o.class()).collect(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedKernel {
    pub lines: Vec<Instruction>,
    pub source_path: Option<String>,
}

#[derive(Debug, Error)]
pub enum AsmError {
    #[error("start marker not found")]
    StartMarkerNotFound,
    #[error("end marker not found")]
    EndMarkerNotFound,
    #[error("end marker before start marker (line {0})")]
    EndBeforeStart(usize),
    #[error("nested start marker (line {0})")]
    NestedMarkers(usize),
    #[error("marker mov at line {0} is not followed by .byte 100,103,144")]
    IncompleteMarker(usize),
    #[error("line {line}, col {col}: cannot parse operand {token:?}: {msg}")]
    BadOperand {
        line: usize,
        col: usize,
        token: String,
        msg: String,
    },
    #[error("line {0}: empty line where an instruction was expected")]
    EmptyLine(usize),
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn marker_res() -> &'static (Regex, Regex, Regex) {
    static RE: OnceLock<(Regex, Regex, Regex)> = OnceLock::new();
    RE.get_or_init(|| {
        (
            Regex::new(r"^\s*movl?\s+\$111\s*,\s*%ebx\s*$").unwrap(),
            Regex::new(r"^\s*movl?\s+\$222\s*,\s*%ebx\s*$").unwrap(),
            Regex::new(r"^\s*\.byte\s+100\s*,\s*103\s*,\s*144\s*$").unwrap(),
        )
    })
}

/// Pull the marked kernel out of an assembly listing and parse every line in
/// it. Blank and comment-only lines inside the region are dropped; the marker
/// lines themselves are excluded.
pub fn extract_marked_kernel(text: &str) -> Result<MarkedKernel, AsmError> {
    let (start_re, end_re, byte_re) = marker_res();
    let lines: Vec<&str> = text.lines().collect();

    // a marker is the mov line plus the .byte line on the next non-blank line
    let marker_at = |idx: usize, re: &Regex| -> Result<Option<usize>, AsmError> {
        if !re.is_match(strip_comment(lines[idx])) {
            return Ok(None);
        }
        for (j, l) in lines.iter().enumerate().skip(idx + 1) {
            let l = strip_comment(l);
            if l.trim().is_empty() {
                continue;
            }
            if byte_re.is_match(l) {
                return Ok(Some(j));
            }
            break;
        }
        Err(AsmError::IncompleteMarker(idx + 1))
    };

    let mut start: Option<usize> = None; // index of the start .byte line
    let mut end: Option<usize> = None; // index of the end mov line
    let mut i = 0;
    while i < lines.len() {
        if let Some(byte_idx) = marker_at(i, start_re)? {
            if end.is_some() {
                // a second region after a complete one is not supported
                return Err(AsmError::NestedMarkers(i + 1));
            }
            if start.is_some() {
                return Err(AsmError::NestedMarkers(i + 1));
            }
            start = Some(byte_idx);
            i = byte_idx + 1;
            continue;
        }
        if marker_at(i, end_re)?.is_some() {
            if start.is_none() {
                return Err(AsmError::EndBeforeStart(i + 1));
            }
            if end.is_none() {
                end = Some(i);
            }
            i += 2;
            continue;
        }
        i += 1;
    }

    let start = start.ok_or(AsmError::StartMarkerNotFound)?;
    let end = end.ok_or(AsmError::EndMarkerNotFound)?;

    let mut parsed = Vec::new();
    for (idx, raw) in lines.iter().enumerate().take(end).skip(start + 1) {
        if strip_comment(raw).trim().is_empty() {
            continue;
        }
        parsed.push(parse_instruction(raw, idx + 1)?);
    }
    Ok(MarkedKernel {
        lines: parsed,
        source_path: None,
    })
}

/// Parse one non-empty assembly line into an instruction, label or directive.
pub fn parse_instruction(line: &str, line_no: usize) -> Result<Instruction, AsmError> {
    let code = strip_comment(line).trim();
    if code.is_empty() {
        return Err(AsmError::EmptyLine(line_no));
    }
    // single token ending in ':' is a label
    if code.ends_with(':') && !code[..code.len() - 1].contains(char::is_whitespace) {
        return Ok(Instruction {
            kind: InstKind::Label,
            mnemonic: code[..code.len() - 1].to_string(),
            operands: Vec::new(),
            raw_text: line.to_string(),
            line_no,
        });
    }
    let (head, rest) = match code.find(char::is_whitespace) {
        Some(i) => (&code[..i], code[i..].trim_start()),
        None => (code, ""),
    };
    if head.starts_with('.') {
        return Ok(Instruction {
            kind: InstKind::Directive,
            mnemonic: head.to_string(),
            operands: Vec::new(),
            raw_text: line.to_string(),
            line_no,
        });
    }
    let mut operands = Vec::new();
    if !rest.is_empty() {
        let mut col = code.len() - rest.len();
        for token in split_operands(rest) {
            let trimmed = token.trim();
            if trimmed.is_empty() {
                return Err(AsmError::BadOperand {
                    line: line_no,
                    col: col + 1,
                    token: token.clone(),
                    msg: "empty operand".into(),
                });
            }
            operands.push(classify_operand(trimmed).map_err(|msg| AsmError::BadOperand {
                line: line_no,
                col: col + 1,
                token: trimmed.to_string(),
                msg,
            })?);
            col += token.len() + 1;
        }
    }
    Ok(Instruction {
        kind: InstKind::Instruction,
        mnemonic: head.to_ascii_lowercase(),
        operands,
        raw_text: line.to_string(),
        line_no,
    })
}

/// Split the operand list on commas that are not inside parentheses.
fn split_operands(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out
}

/// Classify one comma-delimited operand token.
pub fn classify_operand(token: &str) -> Result<Operand, String> {
    let token = token.trim();
    if let Some(imm) = token.strip_prefix('$') {
        let value = parse_int(imm).ok_or_else(|| format!("bad immediate {imm:?}"))?;
        return Ok(Operand::Immediate { value });
    }
    if token.starts_with('%') && !token.contains('(') && !token.contains(':') {
        let name = &token[1..];
        let class = register_class(name).ok_or_else(|| format!("unknown register %{name}"))?;
        return Ok(Operand::Register {
            class,
            name: name.to_string(),
        });
    }
    if token.contains('(') || token.contains(':') || parse_int(token).is_some() {
        return parse_mem(token).map(Operand::Memory);
    }
    // bare symbol, e.g. a jump target
    if token
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '$' | '@'))
    {
        return Ok(Operand::Label {
            symbol: token.to_string(),
        });
    }
    Err("unrecognized operand".into())
}

fn parse_int(s: &str) -> Option<i64> {
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, s),
    };
    let v = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16).ok()?
    } else {
        body.parse::<i64>().ok()?
    };
    Some(sign * v)
}

/// `disp(base,index,scale)` with every part optional, plus an optional
/// `%seg:` prefix. At least one of base, index, displacement must be present.
fn parse_mem(token: &str) -> Result<MemRef, String> {
    let mut rest = token;
    let mut segment = None;
    if rest.starts_with('%') {
        if let Some(colon) = rest.find(':') {
            let seg = &rest[1..colon];
            if !matches!(seg, "cs" | "ds" | "es" | "fs" | "gs" | "ss") {
                return Err(format!("unknown segment register %{seg}"));
            }
            segment = Some(seg.to_string());
            rest = &rest[colon + 1..];
        }
    }
    let (disp_text, paren) = match rest.find('(') {
        Some(i) => {
            let inner = rest[i..]
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or("unbalanced parentheses")?;
            (&rest[..i], Some(inner))
        }
        None => (rest, None),
    };
    let displacement = if disp_text.is_empty() {
        0
    } else {
        parse_int(disp_text).ok_or_else(|| format!("bad displacement {disp_text:?}"))?
    };
    let mut base = None;
    let mut index = None;
    let mut scale = 1u8;
    if let Some(inner) = paren {
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() > 3 {
            return Err("too many fields in memory expression".into());
        }
        let reg_name = |t: &str| -> Result<String, String> {
            let name = t
                .strip_prefix('%')
                .ok_or_else(|| format!("expected register, got {t:?}"))?;
            if name != "rip" && register_class(name).is_none() {
                return Err(format!("unknown register %{name}"));
            }
            Ok(name.to_string())
        };
        if !parts[0].is_empty() {
            base = Some(reg_name(parts[0])?);
        }
        if parts.len() >= 2 && !parts[1].is_empty() {
            index = Some(reg_name(parts[1])?);
        }
        if parts.len() == 3 && !parts[2].is_empty() {
            scale = match parts[2] {
                "1" => 1,
                "2" => 2,
                "4" => 4,
                "8" => 8,
                other => return Err(format!("scale must be 1, 2, 4 or 8, got {other:?}")),
            };
        }
    }
    if base.is_none() && index.is_none() && disp_text.is_empty() {
        return Err("memory expression needs a base, index or displacement".into());
    }
    Ok(MemRef {
        base,
        index,
        scale,
        displacement,
        segment,
    })
}

/// Register name to operand class, by width.
pub fn register_class(name: &str) -> Option<OperandClass> {
    const GPR64: &[&str] = &[
        "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp", "r8", "r9", "r10", "r11", "r12",
        "r13", "r14", "r15",
    ];
    const GPR32: &[&str] = &[
        "eax", "ebx", "ecx", "edx", "esi", "edi", "ebp", "esp", "r8d", "r9d", "r10d", "r11d",
        "r12d", "r13d", "r14d", "r15d",
    ];
    const GPR16: &[&str] = &[
        "ax", "bx", "cx", "dx", "si", "di", "bp", "sp", "r8w", "r9w", "r10w", "r11w", "r12w",
        "r13w", "r14w", "r15w",
    ];
    const GPR8: &[&str] = &[
        "al", "bl", "cl", "dl", "ah", "bh", "ch", "dh", "sil", "dil", "bpl", "spl", "r8b", "r9b",
        "r10b", "r11b", "r12b", "r13b", "r14b", "r15b",
    ];
    if GPR64.contains(&name) {
        return Some(OperandClass::Gpr64);
    }
    if GPR32.contains(&name) {
        return Some(OperandClass::Gpr32);
    }
    if GPR16.contains(&name) {
        return Some(OperandClass::Gpr16);
    }
    if GPR8.contains(&name) {
        return Some(OperandClass::Gpr8);
    }
    if let Some(n) = name.strip_prefix("xmm") {
        if n.parse::<u8>().map(|n| n < 16).unwrap_or(false) {
            return Some(OperandClass::Xmm);
        }
    }
    if let Some(n) = name.strip_prefix("ymm") {
        if n.parse::<u8>().map(|n| n < 16).unwrap_or(false) {
            return Some(OperandClass::Ymm);
        }
    }
    None
}

/// Wrap kernel text in a fresh marker pair (used by tests and benchmark
/// generation round-trips).
pub fn wrap_with_markers(body: &str) -> String {
    let mut out = String::new();
    out.push_str("\tmovl\t$111, %ebx\n\t.byte\t100,103,144\n");
    out.push_str(body);
    if !body.ends_with('\n') {
        out.push('\n');
    }
    out.push_str("\tmovl\t$222, %ebx\n\t.byte\t100,103,144\n");
    out
}
