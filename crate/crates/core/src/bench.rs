//! Microbenchmark kernel generation, measurement-log ingestion and
//! parameter inference for building new database entries.
//!
//! Nothing here runs on hardware: kernels are emitted as assembly files for
//! an ibench-style harness, and measurement results come back as log files.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::cycles::{format_exact, parse_cy, Cy};
use crate::model::{InstructionForm, MicroOpGroup, ModelEntry, ModelError, OperandClass, PortModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    Latency,
    Throughput,
    Conflict,
}

impl BenchMode {
    pub fn tag(self) -> &'static str {
        match self {
            BenchMode::Latency => "lat",
            BenchMode::Throughput => "tp",
            BenchMode::Conflict => "conflict",
        }
    }
}

/// A generated benchmark loop.
#[derive(Debug, Clone)]
pub struct BenchmarkKernel {
    pub form: InstructionForm,
    pub companion: Option<InstructionForm>,
    pub mode: BenchMode,
    /// Number of independent chains (1 for latency kernels).
    pub parallelism: u32,
    /// Instructions per loop iteration (scaffold excluded).
    pub body_length: u32,
    /// Body instruction lines, without the loop scaffold.
    pub body: Vec<String>,
    /// Complete assembly source.
    pub asm_text: String,
}

impl BenchmarkKernel {
    /// `<form-key>-<mode>-<parallelism>.s`
    pub fn file_name(&self) -> String {
        format!(
            "{}-{}-{}.s",
            self.form.key(),
            self.mode.tag(),
            self.parallelism
        )
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("form {0} has no register destination; unsupported for this benchmark mode")]
    UnsupportedForm(String),
    #[error("register budget exhausted: need {need} registers of class {class}, have {have}")]
    RegisterBudget {
        class: &'static str,
        need: usize,
        have: usize,
    },
    #[error("bad form key {0:?}")]
    BadKey(String),
    #[error("line {line}: malformed measurement line: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: cycle value must be positive")]
    NonPositive { line: usize },
    #[error("series {0}: missing required sample ({1})")]
    MissingSample(String, &'static str),
    #[error("slot hypothesis inconsistent with inferred port count {0}")]
    HypothesisMismatch(u32),
    #[error("body length must be at least the number of chains")]
    InvalidBodyLength,
    #[error(transparent)]
    Model(#[from] ModelError),
}

// rax is the memory base, r15 the loop counter, rsp stays untouched.
const GPR64_POOL: &[&str] = &[
    "rdi", "rsi", "rdx", "rcx", "r8", "r9", "r10", "r11", "rbx", "rbp", "r12", "r13", "r14",
];
const GPR32_POOL: &[&str] = &[
    "edi", "esi", "edx", "ecx", "r8d", "r9d", "r10d", "r11d", "ebx", "ebp", "r12d", "r13d", "r14d",
];
const GPR16_POOL: &[&str] = &[
    "di", "si", "dx", "cx", "r8w", "r9w", "r10w", "r11w", "bx", "bp", "r12w", "r13w", "r14w",
];
const GPR8_POOL: &[&str] = &[
    "dil", "sil", "dl", "cl", "r8b", "r9b", "r10b", "r11b", "bl", "bpl", "r12b", "r13b", "r14b",
];
const XMM_POOL: &[&str] = &[
    "xmm0", "xmm1", "xmm2", "xmm3", "xmm4", "xmm5", "xmm6", "xmm7", "xmm8", "xmm9", "xmm10",
    "xmm11", "xmm12", "xmm13", "xmm14", "xmm15",
];
const YMM_POOL: &[&str] = &[
    "ymm0", "ymm1", "ymm2", "ymm3", "ymm4", "ymm5", "ymm6", "ymm7", "ymm8", "ymm9", "ymm10",
    "ymm11", "ymm12", "ymm13", "ymm14", "ymm15",
];

fn register_pool(class: OperandClass) -> Option<&'static [&'static str]> {
    Some(match class {
        OperandClass::Gpr8 => GPR8_POOL,
        OperandClass::Gpr16 => GPR16_POOL,
        OperandClass::Gpr32 => GPR32_POOL,
        OperandClass::Gpr64 => GPR64_POOL,
        OperandClass::Xmm => XMM_POOL,
        OperandClass::Ymm => YMM_POOL,
        _ => return None,
    })
}

/// Operand positions (indices into the form) that drive register renaming:
/// the destination (last operand) and the chain source (nearest preceding
/// register operand of any class).
struct FormShape {
    dest: usize,
    chain_source: Option<usize>,
}

fn form_shape(form: &InstructionForm) -> Result<FormShape, BenchError> {
    let last = form.operands.len().checked_sub(1);
    let dest = match last {
        Some(i) if form.operands[i].is_register() => i,
        _ => return Err(BenchError::UnsupportedForm(form.key())),
    };
    let chain_source = (0..dest).rev().find(|&i| form.operands[i].is_register());
    Ok(FormShape { dest, chain_source })
}

/// Render one instruction of the form with the destination (and chain
/// source) bound to `chain_reg` and every other operand fixed: fillers from
/// the high end of the register pool, memory as `(%rax)`, immediates as `$1`.
fn render_instruction(
    form: &InstructionForm,
    shape: &FormShape,
    chain_reg: &str,
    filler_base: usize,
) -> Result<String, BenchError> {
    let mut filler = filler_base;
    let mut ops = Vec::new();
    for (i, class) in form.operands.iter().enumerate() {
        if i == shape.dest || Some(i) == shape.chain_source {
            ops.push(format!("%{chain_reg}"));
            continue;
        }
        match class {
            OperandClass::Mem => ops.push("(%rax)".to_string()),
            OperandClass::Imm => ops.push("$1".to_string()),
            OperandClass::Label => return Err(BenchError::UnsupportedForm(form.key())),
            c => {
                let pool = register_pool(*c).unwrap();
                if filler == 0 {
                    return Err(BenchError::RegisterBudget {
                        class: c.as_str(),
                        need: 1,
                        have: 0,
                    });
                }
                filler -= 1;
                ops.push(format!("%{}", pool[filler]));
            }
        }
    }
    if ops.is_empty() {
        Ok(format!("\t{}", form.mnemonic))
    } else {
        Ok(format!("\t{}\t{}", form.mnemonic, ops.join(", ")))
    }
}

/// Count register operands of the form that are neither destination nor
/// chain source; those consume fillers.
fn filler_count(form: &InstructionForm, shape: &FormShape) -> usize {
    form.operands
        .iter()
        .enumerate()
        .filter(|(i, c)| c.is_register() && *i != shape.dest && Some(*i) != shape.chain_source)
        .count()
}

fn scaffold(kind: &str, form_key: &str, body: &[String]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {kind} benchmark kernel for {form_key}\n"));
    out.push_str("# reserved: %r15 loop counter, %rax memory base, %xmm0/%ymm0 chain anchor\n");
    out.push_str("# $TRIP_COUNT is a placeholder for the harness to substitute\n");
    out.push_str("loop:\n");
    out.push_str("\tinc\t%r15\n");
    for line in body {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("\tcmp\t$TRIP_COUNT, %r15\n");
    out.push_str("\tjl\tloop\n");
    out
}

/// Serial dependency chain: n copies of the form, destination and chain
/// source pinned to the anchor register of the destination class.
pub fn gen_latency_kernel(form: &InstructionForm, n: u32) -> Result<BenchmarkKernel, BenchError> {
    assert!(n >= 1, "latency kernel needs at least one instruction");
    let shape = form_shape(form)?;
    let pool = register_pool(form.operands[shape.dest]).unwrap();
    let anchor = pool[0];
    let fillers = filler_count(form, &shape);
    if 1 + fillers > pool.len() {
        return Err(BenchError::RegisterBudget {
            class: form.operands[shape.dest].as_str(),
            need: 1 + fillers,
            have: pool.len(),
        });
    }
    let line = render_instruction(form, &shape, anchor, pool.len())?;
    let body: Vec<String> = (0..n).map(|_| line.clone()).collect();
    Ok(BenchmarkKernel {
        form: form.clone(),
        companion: None,
        mode: BenchMode::Latency,
        parallelism: 1,
        body_length: n,
        asm_text: scaffold("latency", &form.key(), &body),
        body,
    })
}

/// Independent chains: the destination register (and its chain source)
/// cycles through `chains` distinct registers, so consecutive uses of any
/// register are `chains` instructions apart.
pub fn gen_throughput_kernel(
    form: &InstructionForm,
    chains: u32,
    body_length: u32,
) -> Result<BenchmarkKernel, BenchError> {
    assert!(chains >= 1);
    if body_length < chains {
        return Err(BenchError::InvalidBodyLength);
    }
    let shape = form_shape(form)?;
    let pool = register_pool(form.operands[shape.dest]).unwrap();
    let fillers = filler_count(form, &shape);
    if chains as usize + fillers > pool.len() {
        return Err(BenchError::RegisterBudget {
            class: form.operands[shape.dest].as_str(),
            need: chains as usize + fillers,
            have: pool.len(),
        });
    }
    let mut body = Vec::new();
    for i in 0..body_length {
        let reg = pool[(i % chains) as usize];
        body.push(render_instruction(form, &shape, reg, pool.len())?);
    }
    Ok(BenchmarkKernel {
        form: form.clone(),
        companion: None,
        mode: BenchMode::Throughput,
        parallelism: chains,
        body_length,
        asm_text: scaffold("throughput", &form.key(), &body),
        body,
    })
}

/// Port-conflict probe: the throughput-bound kernel of `form_a` interleaved
/// with `form_b` instances drawn from a disjoint register pool.
pub fn gen_conflict_kernel(
    form_a: &InstructionForm,
    form_b: &InstructionForm,
    chains: u32,
) -> Result<BenchmarkKernel, BenchError> {
    assert!(chains >= 1);
    let shape_a = form_shape(form_a)?;
    let shape_b = form_shape(form_b)?;
    let class_a = form_a.operands[shape_a.dest];
    let class_b = form_b.operands[shape_b.dest];
    let pool_a = register_pool(class_a).unwrap();
    let pool_b = register_pool(class_b).unwrap();
    let fillers_a = filler_count(form_a, &shape_a);
    let fillers_b = filler_count(form_b, &shape_b);
    // B's chain registers come from the high end; same-class pools must fit
    // side by side
    let (b_offset, budget_needed, budget_have) = if class_a == class_b {
        (
            pool_a.len() - chains as usize,
            2 * chains as usize + fillers_a + fillers_b,
            pool_a.len(),
        )
    } else {
        (
            pool_b.len() - chains as usize,
            chains as usize + fillers_b,
            pool_b.len(),
        )
    };
    if budget_needed > budget_have
        || (class_a != class_b && chains as usize + fillers_a > pool_a.len())
    {
        return Err(BenchError::RegisterBudget {
            class: class_a.as_str(),
            need: budget_needed,
            have: budget_have,
        });
    }
    let filler_base_b = b_offset; // B fillers sit just below B's chain block
    let mut body = Vec::new();
    let body_pairs = 10 * chains;
    for i in 0..body_pairs {
        let ra = pool_a[(i % chains) as usize];
        let rb = pool_b[b_offset + (i % chains) as usize];
        body.push(render_instruction(form_a, &shape_a, ra, filler_base_b)?);
        body.push(render_instruction(form_b, &shape_b, rb, filler_base_b)?);
    }
    Ok(BenchmarkKernel {
        form: form_a.clone(),
        companion: Some(form_b.clone()),
        mode: BenchMode::Conflict,
        parallelism: chains,
        body_length: 2 * body_pairs,
        asm_text: scaffold("conflict", &form_a.key(), &body),
        body,
    })
}

/// Parsed measurements for one instruction form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementSeries {
    pub form_key: String,
    /// parallelism -> cycles per instruction
    pub samples: BTreeMap<u32, Cy>,
    /// the dependency-free TP benchmark, if present
    pub throughput: Option<Cy>,
    /// companion mnemonic -> cycles of the combined benchmark
    pub combined: BTreeMap<String, Cy>,
    /// informational, GHz
    pub frequency_ghz: Option<Cy>,
}

/// Parse an ibench-style measurement log:
///
/// ```text
/// Using frequency 1.80GHz.
/// vfmadd132pd-xmm_xmm_mem-1:         5.011 (clk cy)
/// vfmadd132pd-xmm_xmm_mem-TP:        0.500 (clk cy)
/// vfmadd132pd-xmm_xmm_mem-TP-vaddpd: 0.522 (clk cy)
/// ```
pub fn parse_measurements(text: &str) -> Result<Vec<MeasurementSeries>, BenchError> {
    let mut order: Vec<String> = Vec::new();
    let mut series: BTreeMap<String, MeasurementSeries> = BTreeMap::new();
    let mut frequency: Option<Cy> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Using frequency ") {
            let ghz = rest
                .trim()
                .trim_end_matches('.')
                .strip_suffix("GHz")
                .and_then(parse_cy)
                .ok_or_else(|| BenchError::Malformed {
                    line: line_no,
                    msg: "bad frequency header".into(),
                })?;
            frequency = Some(ghz);
            continue;
        }
        let (name, rest) = line.split_once(':').ok_or_else(|| BenchError::Malformed {
            line: line_no,
            msg: "expected `name: value (clk cy)`".into(),
        })?;
        let value_text = rest
            .trim()
            .strip_suffix("(clk cy)")
            .ok_or_else(|| BenchError::Malformed {
                line: line_no,
                msg: "line must end in `(clk cy)`".into(),
            })?
            .trim();
        let value = parse_cy(value_text).ok_or_else(|| BenchError::Malformed {
            line: line_no,
            msg: format!("bad cycle value {value_text:?}"),
        })?;
        if value <= Cy::zero() {
            return Err(BenchError::NonPositive { line: line_no });
        }
        let name = name.trim();
        let (key, suffix) = split_suffix(name).ok_or_else(|| BenchError::Malformed {
            line: line_no,
            msg: format!("cannot split form key and suffix in {name:?}"),
        })?;
        let entry = series.entry(key.to_string()).or_insert_with(|| {
            order.push(key.to_string());
            MeasurementSeries {
                form_key: key.to_string(),
                samples: BTreeMap::new(),
                throughput: None,
                combined: BTreeMap::new(),
                frequency_ghz: None,
            }
        });
        if entry.frequency_ghz.is_none() {
            entry.frequency_ghz = frequency;
        }
        match suffix {
            Suffix::Parallelism(p) => {
                entry.samples.insert(p, value);
            }
            Suffix::Throughput => entry.throughput = Some(value),
            Suffix::Combined(companion) => {
                entry.combined.insert(companion.to_string(), value);
            }
        }
    }
    Ok(order.into_iter().map(|k| series.remove(&k).unwrap()).collect())
}

enum Suffix<'a> {
    Parallelism(u32),
    Throughput,
    Combined(&'a str),
}

fn split_suffix(name: &str) -> Option<(&str, Suffix<'_>)> {
    if let Some(key) = name.strip_suffix("-TP") {
        return Some((key, Suffix::Throughput));
    }
    if let Some(pos) = name.find("-TP-") {
        return Some((&name[..pos], Suffix::Combined(&name[pos + 4..])));
    }
    let (key, tail) = name.rsplit_once('-')?;
    let p: u32 = tail.parse().ok()?;
    Some((key, Suffix::Parallelism(p)))
}

/// Render series back to the log format (inverse of [`parse_measurements`]
/// for well-formed series).
pub fn render_measurements(series: &[MeasurementSeries]) -> String {
    let mut out = String::new();
    let mut current_freq: Option<Cy> = None;
    for s in series {
        if s.frequency_ghz.is_some() && s.frequency_ghz != current_freq {
            current_freq = s.frequency_ghz;
            out.push_str(&format!(
                "Using frequency {}GHz.\n",
                format_exact(current_freq.unwrap())
            ));
        }
        for (p, v) in &s.samples {
            out.push_str(&format!("{}-{}: {} (clk cy)\n", s.form_key, p, format_exact(*v)));
        }
        if let Some(tp) = s.throughput {
            out.push_str(&format!("{}-TP: {} (clk cy)\n", s.form_key, format_exact(tp)));
        }
        for (c, v) in &s.combined {
            out.push_str(&format!(
                "{}-TP-{}: {} (clk cy)\n",
                s.form_key, c, format_exact(*v)
            ));
        }
    }
    out
}

/// Latency, throughput and port-conflict verdicts inferred from one series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferredParams {
    pub form_key: String,
    pub latency: Cy,
    pub latency_raw: Cy,
    pub reciprocal_throughput: Cy,
    pub rtp_raw: Cy,
    pub port_count_estimate: u32,
    pub conflicts: BTreeSet<String>,
    pub non_conflicts: BTreeSet<String>,
    pub indeterminate: BTreeSet<String>,
    pub warnings: Vec<String>,
}

const CONFLICT_TOLERANCE: (i64, i64) = (1, 10); // 0.1 cy

/// Snap measured values onto the expected grids and classify port conflicts.
///
/// Latency snaps to the nearest multiple of 0.5 within 5% relative
/// tolerance; reciprocal throughput to the nearest of {n, 1/n : 1 <= n <= 8}
/// within 15%. Out-of-tolerance values are kept raw with a warning.
pub fn infer_params(series: &MeasurementSeries) -> Result<InferredParams, BenchError> {
    let mut warnings = Vec::new();
    let latency_raw = *series
        .samples
        .get(&1)
        .ok_or_else(|| BenchError::MissingSample(series.form_key.clone(), "parallelism 1"))?;
    let rtp_raw = match series.throughput {
        Some(tp) => tp,
        // fall back to the deepest-parallelism sample as the plateau
        None => *series
            .samples
            .iter()
            .next_back()
            .ok_or_else(|| BenchError::MissingSample(series.form_key.clone(), "TP"))?
            .1,
    };

    let latency = {
        let snapped = (latency_raw * Ratio::from_integer(2)).round() / Ratio::from_integer(2);
        if snapped > Cy::zero() && rel_err(latency_raw, snapped) <= Ratio::new(1, 20) {
            snapped
        } else {
            warnings.push(format!(
                "{}: latency {} does not snap to a 0.5 grid; keeping raw value",
                series.form_key,
                format_exact(latency_raw)
            ));
            latency_raw
        }
    };

    let reciprocal_throughput = {
        let mut best: Option<(Cy, Cy)> = None; // (grid value, rel err)
        for n in 1..=8i64 {
            for g in [Ratio::from_integer(n), Ratio::new(1, n)] {
                let e = rel_err(rtp_raw, g);
                if best.map(|(_, be)| e < be).unwrap_or(true) {
                    best = Some((g, e));
                }
            }
        }
        let (grid, err) = best.unwrap();
        if err <= Ratio::new(3, 20) {
            grid
        } else {
            warnings.push(format!(
                "{}: reciprocal throughput {} does not snap to the {{n, 1/n}} grid; keeping raw value",
                series.form_key,
                format_exact(rtp_raw)
            ));
            rtp_raw
        }
    };

    let port_count_estimate = if reciprocal_throughput <= Ratio::from_integer(1)
        && reciprocal_throughput > Cy::zero()
    {
        (Ratio::from_integer(1) / reciprocal_throughput)
            .round()
            .to_integer() as u32
    } else {
        1
    };

    let tol = Ratio::new(CONFLICT_TOLERANCE.0, CONFLICT_TOLERANCE.1);
    let mut conflicts = BTreeSet::new();
    let mut non_conflicts = BTreeSet::new();
    let mut indeterminate = BTreeSet::new();
    for (companion, &combined) in &series.combined {
        // companion rTP is taken to equal this form's rTP: the combined
        // benchmark interleaves it at the same parallelism
        let rtp_b = reciprocal_throughput;
        if combined >= reciprocal_throughput + rtp_b - tol {
            conflicts.insert(companion.clone());
        } else if combined <= reciprocal_throughput.max(rtp_b) + tol {
            non_conflicts.insert(companion.clone());
        } else {
            indeterminate.insert(companion.clone());
            warnings.push(format!(
                "{}: combined run with {} at {} is neither clearly hidden nor clearly serialized",
                series.form_key,
                companion,
                format_exact(combined)
            ));
        }
    }

    Ok(InferredParams {
        form_key: series.form_key.clone(),
        latency,
        latency_raw,
        reciprocal_throughput,
        rtp_raw,
        port_count_estimate,
        conflicts,
        non_conflicts,
        indeterminate,
        warnings,
    })
}

fn rel_err(v: Cy, grid: Cy) -> Cy {
    ((v - grid) / grid).abs()
}

/// Combine inferred parameters with an operator-supplied port hypothesis
/// into a database entry ready for `add_entry`. The hypothesis must contain
/// at least one group matching the inferred port count.
pub fn propose_entry(
    params: &InferredParams,
    slot_hypothesis: Vec<MicroOpGroup>,
    model: &PortModel,
) -> Result<ModelEntry, BenchError> {
    let form = InstructionForm::parse_key(&params.form_key)
        .ok_or_else(|| BenchError::BadKey(params.form_key.clone()))?;
    if !slot_hypothesis
        .iter()
        .any(|g| g.slots.len() == params.port_count_estimate as usize)
    {
        return Err(BenchError::HypothesisMismatch(params.port_count_estimate));
    }
    Ok(ModelEntry::new(
        form,
        params.reciprocal_throughput,
        params.latency,
        slot_hypothesis,
        model,
    )?)
}

/// cy/it = clock (cy/s) / performance (it/s).
pub fn cycles_per_iteration(clock_hz: f64, iterations_per_second: f64) -> f64 {
    assert!(clock_hz > 0.0 && iterations_per_second > 0.0);
    clock_hz / iterations_per_second
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::cy;

    fn form(key: &str) -> InstructionForm {
        InstructionForm::parse_key(key).unwrap()
    }

    #[test]
    fn latency_kernel_chains_through_anchor() {
        let k = gen_latency_kernel(&form("vaddpd-xmm_xmm_xmm"), 4).unwrap();
        assert_eq!(k.body.len(), 4);
        for line in &k.body {
            assert_eq!(line, "\tvaddpd\t%xmm15, %xmm0, %xmm0");
        }
        assert!(k.asm_text.contains("loop:"));
        assert!(k.asm_text.contains("\tinc\t%r15"));
        assert!(k.asm_text.contains("\tjl\tloop"));
        assert_eq!(k.file_name(), "vaddpd-xmm_xmm_xmm-lat-1.s");
    }

    #[test]
    fn latency_kernel_with_memory_source() {
        let k = gen_latency_kernel(&form("vfmadd132pd-xmm_xmm_mem"), 2).unwrap();
        for line in &k.body {
            assert_eq!(line, "\tvfmadd132pd\t(%rax), %xmm0, %xmm0");
        }
    }

    #[test]
    fn latency_kernel_minimal_and_unsupported() {
        let k = gen_latency_kernel(&form("incl-gpr32"), 1).unwrap();
        assert_eq!(k.body, vec!["\tincl\t%edi"]);
        // pure store has no register destination
        assert!(matches!(
            gen_latency_kernel(&form("vmovsd-mem_xmm"), 2),
            Err(BenchError::UnsupportedForm(_))
        ));
    }

    #[test]
    fn throughput_kernel_round_robins_destinations() {
        let k = gen_throughput_kernel(&form("vaddpd-xmm_xmm_xmm"), 10, 100).unwrap();
        assert_eq!(k.body.len(), 100);
        for (i, line) in k.body.iter().enumerate() {
            let reg = format!("xmm{}", i % 10);
            assert_eq!(line, &format!("\tvaddpd\t%xmm15, %{reg}, %{reg}"));
        }
    }

    #[test]
    fn throughput_chains_one_is_latency_body() {
        let lat = gen_latency_kernel(&form("vaddpd-xmm_xmm_xmm"), 10).unwrap();
        let tp = gen_throughput_kernel(&form("vaddpd-xmm_xmm_xmm"), 1, 10).unwrap();
        assert_eq!(lat.body, tp.body);
    }

    #[test]
    fn throughput_register_budget() {
        assert!(matches!(
            gen_throughput_kernel(&form("vaddpd-xmm_xmm_xmm"), 16, 160),
            Err(BenchError::RegisterBudget { .. })
        ));
        assert!(matches!(
            gen_throughput_kernel(&form("vaddpd-xmm_xmm_xmm"), 10, 5),
            Err(BenchError::InvalidBodyLength)
        ));
    }

    #[test]
    fn conflict_kernel_uses_disjoint_pools() {
        let k = gen_conflict_kernel(
            &form("vfmadd132pd-xmm_xmm_mem"),
            &form("vaddpd-xmm_xmm_xmm"),
            5,
        )
        .unwrap();
        assert_eq!(k.body.len(), 100);
        // even lines are A over xmm0..4, odd lines are B over xmm11..15
        assert!(k.body[0].contains("%xmm0"));
        assert!(k.body[1].starts_with("\tvaddpd"));
        assert!(k.body[1].contains("%xmm11"));
        let a_regs: BTreeSet<&str> = ["xmm0", "xmm1", "xmm2", "xmm3", "xmm4"].into();
        for (i, line) in k.body.iter().enumerate() {
            if i % 2 == 1 {
                for r in &a_regs {
                    assert!(
                        !line.contains(&format!("%{r},")) && !line.ends_with(&format!("%{r}")),
                        "companion line {line:?} touches A register {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn conflict_self_combination_budget() {
        assert!(gen_conflict_kernel(
            &form("vaddpd-xmm_xmm_xmm"),
            &form("vaddpd-xmm_xmm_xmm"),
            7
        )
        .unwrap()
        .body
        .len()
            == 140);
        assert!(matches!(
            gen_conflict_kernel(&form("vaddpd-xmm_xmm_xmm"), &form("vaddpd-xmm_xmm_xmm"), 8),
            Err(BenchError::RegisterBudget { .. })
        ));
    }

    #[test]
    fn parses_measurement_log() {
        let log = "\
Using frequency 1.80GHz.
vfmadd132pd-xmm_xmm_mem-1:         5.011 (clk cy)
vfmadd132pd-xmm_xmm_mem-2:         2.506 (clk cy)
vfmadd132pd-xmm_xmm_mem-TP:        0.500 (clk cy)
vfmadd132pd-xmm_xmm_xmm-TP:        0.502 (clk cy)
vfmadd132pd-xmm_xmm_mem-TP-vaddpd: 0.522 (clk cy)
vfmadd132pd-xmm_xmm_mem-TP-vmulpd: 1.024 (clk cy)
";
        let series = parse_measurements(log).unwrap();
        assert_eq!(series.len(), 2);
        let s = &series[0];
        assert_eq!(s.form_key, "vfmadd132pd-xmm_xmm_mem");
        assert_eq!(s.samples[&1], cy(5011, 1000));
        assert_eq!(s.throughput, Some(cy(1, 2)));
        assert_eq!(s.combined["vaddpd"], cy(522, 1000));
        assert_eq!(s.combined["vmulpd"], cy(1024, 1000));
        assert_eq!(s.frequency_ghz, Some(cy(9, 5)));
        assert_eq!(series[1].form_key, "vfmadd132pd-xmm_xmm_xmm");
        assert_eq!(series[1].throughput, Some(cy(502, 1000)));
    }

    #[test]
    fn measurement_errors() {
        assert!(parse_measurements("").unwrap().is_empty());
        assert!(matches!(
            parse_measurements("not a line\n"),
            Err(BenchError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_measurements("x-1: 0.0 (clk cy)\n"),
            Err(BenchError::NonPositive { line: 1 })
        ));
        assert!(matches!(
            parse_measurements("x-1: 1.0\n"),
            Err(BenchError::Malformed { .. })
        ));
    }

    #[test]
    fn render_parse_round_trip() {
        let log = "Using frequency 1.8GHz.\nvaddpd-xmm_xmm_xmm-1: 3.0 (clk cy)\nvaddpd-xmm_xmm_xmm-TP: 0.5 (clk cy)\nvaddpd-xmm_xmm_xmm-TP-vmulpd: 0.51 (clk cy)\n";
        let series = parse_measurements(log).unwrap();
        assert_eq!(parse_measurements(&render_measurements(&series)).unwrap(), series);
    }

    #[test]
    fn infers_single_port_unpipelined() {
        let s = MeasurementSeries {
            form_key: "slowop-gpr64".into(),
            samples: [(1u32, cy(3, 1))].into(),
            throughput: Some(cy(3, 1)),
            combined: BTreeMap::new(),
            frequency_ghz: None,
        };
        let p = infer_params(&s).unwrap();
        assert_eq!(p.latency, cy(3, 1));
        assert_eq!(p.reciprocal_throughput, cy(3, 1));
        assert_eq!(p.port_count_estimate, 1);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn infer_needs_parallelism_one_sample() {
        let s = MeasurementSeries {
            form_key: "x".into(),
            samples: BTreeMap::new(),
            throughput: Some(cy(1, 2)),
            combined: BTreeMap::new(),
            frequency_ghz: None,
        };
        assert!(matches!(
            infer_params(&s),
            Err(BenchError::MissingSample(_, _))
        ));
    }

    #[test]
    fn out_of_grid_values_stay_raw_with_warning() {
        let s = MeasurementSeries {
            form_key: "oddball-gpr64".into(),
            samples: [(1u32, cy(17, 10))].into(), // 1.7: 13% off the 0.5 grid
            throughput: Some(cy(12, 5)),          // 2.4: 20% off 2
            combined: BTreeMap::new(),
            frequency_ghz: None,
        };
        let p = infer_params(&s).unwrap();
        assert_eq!(p.latency, cy(17, 10));
        assert_eq!(p.reciprocal_throughput, cy(12, 5));
        assert_eq!(p.warnings.len(), 2);
    }

    #[test]
    fn cycles_per_iteration_identity() {
        assert_eq!(cycles_per_iteration(1.8e9, 1.8e9), 1.0);
        assert!((cycles_per_iteration(1.8e9, 898e6) - 2.00).abs() < 0.01);
    }
}
