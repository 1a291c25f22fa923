//! Line-oriented model file.
//!
//! ```text
//! LCDMODEL v1
//! d=2
//! n=8
//! sigma=<hexfloat>
//! bias=<hexfloat>
//! mode=certified|empirical
//! prov.<key>=<value>        (any number)
//! guar.<key>=<value>        (any number)
//! weights <count>
//! <hexfloat>                (count lines, feature order)
//! checksum=<FNV-1a 64 of every preceding byte, 16 hex digits>
//! ```
//!
//! Every float is written as a hexadecimal float so a load reproduces it
//! bit for bit. Loading checks the header version first, then the
//! structure, then the checksum.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{GuaranteeReport, Mode, Provenance, TraceEntry, TraceStatus, TrainedLcd};
use crate::featuremap::FeatureMapParams;
use crate::hexfloat;
use crate::rng::fnv1a64;
use crate::svm::{LinearModel, SolverDiagnostics};

pub const MAGIC: &str = "LCDMODEL";
pub const VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("unsupported model file version `{0}` (expected `{MAGIC} {VERSION}`)")]
    Version(String),
    #[error("model file is truncated")]
    Truncated,
    #[error("checksum mismatch: file says {stored:016x}, content hashes to {computed:016x}")]
    Checksum { stored: u64, computed: u64 },
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn report_fields(r: &GuaranteeReport) -> Vec<(&'static str, String)> {
    vec![
        ("sample_count", r.sample_count.to_string()),
        ("interior_count", r.interior_count.to_string()),
        ("p_hat", hexfloat::format(r.p_hat)),
        ("z", hexfloat::format(r.z)),
        ("epsilon_interior", hexfloat::format(r.epsilon_interior)),
        ("required_m", hexfloat::format(r.required_m)),
        ("c1", r.c1.to_string()),
        ("c2", r.c2.to_string()),
        ("normal_approx_valid", r.normal_approx_valid.to_string()),
        ("confidence", hexfloat::format(r.confidence)),
    ]
}

fn trace_value(t: &TraceEntry) -> String {
    let mut parts = vec![
        format!("iteration={}", t.iteration),
        format!("m={}", t.m),
        format!("delta={}", hexfloat::format(t.delta)),
        format!("seed={}", t.seed),
        format!("status={}", t.status.as_str()),
    ];
    if let Some(r) = &t.report {
        parts.extend(report_fields(r).into_iter().map(|(k, v)| format!("{k}={v}")));
    }
    parts.join(";")
}

/// Serialises a model to the text format.
pub fn model_to_string(lcd: &TrainedLcd) -> String {
    let mut out = String::new();
    let p = &lcd.provenance;
    let diag = &lcd.model.diagnostics;
    let h = hexfloat::format;
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "d={}", lcd.featuremap.d());
    let _ = writeln!(out, "n={}", lcd.featuremap.n());
    let _ = writeln!(out, "sigma={}", h(lcd.featuremap.sigma()));
    let _ = writeln!(out, "bias={}", h(lcd.model.b));
    let _ = writeln!(out, "mode={}", p.mode);
    let prov: Vec<(&str, String)> = vec![
        ("scene", p.scene_id.clone()),
        ("seed", p.seed.to_string()),
        ("m", p.m.to_string()),
        ("delta", h(p.delta)),
        ("epsilon", h(p.epsilon)),
        ("xi", h(p.xi)),
        ("rng", p.rng.clone()),
        ("feature_cap", p.feature_cap.to_string()),
        ("svm.c", h(diag.c)),
        ("svm.kkt_tol", h(diag.kkt_tol)),
        ("svm.max_iterations", diag.max_iterations.to_string()),
        ("svm.use_bias", diag.use_bias.to_string()),
        ("svm.iterations", diag.iterations.to_string()),
        ("svm.kkt_gap", h(diag.kkt_gap)),
        ("svm.max_kkt_violation", h(diag.max_kkt_violation)),
        ("svm.min_functional_margin", h(diag.min_functional_margin)),
        ("svm.margin", h(diag.margin)),
        ("svm.support_vectors", diag.support_vectors.to_string()),
        ("trace.len", p.trace.len().to_string()),
    ];
    for (k, v) in prov {
        let _ = writeln!(out, "prov.{k}={v}");
    }
    for (i, t) in p.trace.iter().enumerate() {
        let _ = writeln!(out, "prov.trace.{i}={}", trace_value(t));
    }
    for (k, v) in &p.notes {
        let _ = writeln!(out, "prov.note.{k}={v}");
    }
    for (k, v) in report_fields(&lcd.guarantee) {
        let _ = writeln!(out, "guar.{k}={v}");
    }
    let _ = writeln!(out, "weights {}", lcd.model.w.len());
    for w in &lcd.model.w {
        let _ = writeln!(out, "{}", h(*w));
    }
    let checksum = fnv1a64(out.as_bytes());
    let _ = writeln!(out, "checksum={checksum:016x}");
    out
}

pub fn save_model(lcd: &TrainedLcd, path: &Path) -> Result<(), ModelFileError> {
    for (k, v) in &lcd.provenance.notes {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(ModelFileError::Parse {
                line: 0,
                message: format!("note `{k}` cannot be stored on one line"),
            });
        }
    }
    std::fs::write(path, model_to_string(lcd))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedLcd, ModelFileError> {
    let bytes = std::fs::read(path)?;
    parse_model(&bytes)
}

struct Fields {
    map: BTreeMap<String, (usize, String)>,
}

impl Fields {
    fn take(&mut self, key: &str, header_line: usize) -> Result<(usize, String), ModelFileError> {
        self.map.remove(key).ok_or_else(|| ModelFileError::Parse {
            line: header_line,
            message: format!("missing field `{key}`"),
        })
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, at: usize) -> Result<T, ModelFileError> {
        let (line, v) = self.take(key, at)?;
        v.parse().map_err(|_| bad(line, format!("`{key}` has invalid value `{v}`")))
    }

    fn float(&mut self, key: &str, at: usize) -> Result<f64, ModelFileError> {
        let (line, v) = self.take(key, at)?;
        hexfloat::parse(&v).map_err(|e| bad(line, format!("`{key}`: {e}")))
    }
}

fn bad(line: usize, message: impl Into<String>) -> ModelFileError {
    ModelFileError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_bool(v: &str, line: usize) -> Result<bool, ModelFileError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(line, format!("expected true or false, got `{v}`"))),
    }
}

fn parse_report(f: &mut Fields, prefix: &str, at: usize) -> Result<GuaranteeReport, ModelFileError> {
    let key = |k: &str| format!("{prefix}{k}");
    let flag = |f: &mut Fields, k: &str| -> Result<bool, ModelFileError> {
        let (line, v) = f.take(&key(k), at)?;
        parse_bool(&v, line)
    };
    Ok(GuaranteeReport {
        sample_count: f.parse(&key("sample_count"), at)?,
        interior_count: f.parse(&key("interior_count"), at)?,
        p_hat: f.float(&key("p_hat"), at)?,
        z: f.float(&key("z"), at)?,
        epsilon_interior: f.float(&key("epsilon_interior"), at)?,
        required_m: f.float(&key("required_m"), at)?,
        c1: flag(f, "c1")?,
        c2: flag(f, "c2")?,
        normal_approx_valid: flag(f, "normal_approx_valid")?,
        confidence: f.float(&key("confidence"), at)?,
    })
}

fn parse_trace(value: &str, line: usize) -> Result<TraceEntry, ModelFileError> {
    let mut f = Fields {
        map: BTreeMap::new(),
    };
    for part in value.split(';') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(line, format!("trace field `{part}` lacks `=`")))?;
        f.map.insert(k.to_string(), (line, v.to_string()));
    }
    let iteration = f.parse("iteration", line)?;
    let m = f.parse("m", line)?;
    let delta = f.float("delta", line)?;
    let seed = f.parse("seed", line)?;
    let (_, status) = f.take("status", line)?;
    let status = match status.as_str() {
        "fail" => TraceStatus::Fail,
        "trained" => TraceStatus::Trained,
        "infeasible" => TraceStatus::Infeasible,
        other => return Err(bad(line, format!("unknown trace status `{other}`"))),
    };
    let report = if f.map.is_empty() {
        None
    } else {
        Some(parse_report(&mut f, "", line)?)
    };
    if let Some(k) = f.map.keys().next() {
        return Err(bad(line, format!("unknown trace field `{k}`")));
    }
    Ok(TraceEntry {
        iteration,
        m,
        delta,
        seed,
        status,
        report,
    })
}

/// Parses model-file bytes. See the module docs for the check order.
pub fn parse_model(bytes: &[u8]) -> Result<TrainedLcd, ModelFileError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&c| c == b'\n').count() + 1;
        bad(line, "invalid UTF-8")
    })?;
    let mut lines = text.split_inclusive('\n').enumerate().map(|(i, l)| (i + 1, l));

    let Some((_, raw_header)) = lines.next() else {
        return Err(ModelFileError::Truncated);
    };
    let header = raw_header.trim_end_matches(['\n', '\r']);
    if header != format!("{MAGIC} {VERSION}") {
        if let Some(v) = header.strip_prefix(MAGIC) {
            return Err(ModelFileError::Version(v.trim().to_string()));
        }
        return Err(bad(1, format!("expected `{MAGIC} {VERSION}` header")));
    }
    let mut offset = raw_header.len();

    let mut fields = Fields {
        map: BTreeMap::new(),
    };
    let mut traces = Vec::new();
    let mut notes = Vec::new();
    let (weights_line, count) = loop {
        let Some((no, raw)) = lines.next() else {
            return Err(ModelFileError::Truncated);
        };
        offset += raw.len();
        if !raw.ends_with('\n') {
            return Err(ModelFileError::Truncated);
        }
        let line = raw.trim_end_matches(['\n', '\r']);
        if let Some(c) = line.strip_prefix("weights ") {
            let count: usize = c
                .parse()
                .map_err(|_| bad(no, format!("invalid weight count `{c}`")))?;
            break (no, count);
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(no, format!("expected `key=value`, got `{line}`")))?;
        if let Some(idx) = k.strip_prefix("prov.trace.").filter(|s| *s != "len") {
            let idx: usize = idx
                .parse()
                .map_err(|_| bad(no, format!("invalid trace index `{idx}`")))?;
            traces.push((idx, parse_trace(v, no)?));
        } else if let Some(note) = k.strip_prefix("prov.note.") {
            notes.push((note.to_string(), v.to_string()));
        } else if fields.map.insert(k.to_string(), (no, v.to_string())).is_some() {
            return Err(bad(no, format!("duplicate field `{k}`")));
        }
    };

    let mut w = Vec::with_capacity(count);
    for _ in 0..count {
        let Some((no, raw)) = lines.next() else {
            return Err(ModelFileError::Truncated);
        };
        offset += raw.len();
        if !raw.ends_with('\n') {
            return Err(ModelFileError::Truncated);
        }
        let v = raw.trim_end_matches(['\n', '\r']);
        w.push(hexfloat::parse(v).map_err(|e| bad(no, format!("weight: {e}")))?);
    }
    let body_len = offset;

    let Some((check_no, raw)) = lines.next() else {
        return Err(ModelFileError::Truncated);
    };
    let check = raw.trim_end_matches(['\n', '\r']);
    let Some(hex) = check.strip_prefix("checksum=") else {
        return Err(bad(check_no, format!("expected `checksum=`, got `{check}`")));
    };
    if hex.len() != 16 {
        return Err(if raw.ends_with('\n') {
            bad(check_no, "checksum must be 16 hex digits")
        } else {
            ModelFileError::Truncated
        });
    }
    let stored = u64::from_str_radix(hex, 16).map_err(|_| bad(check_no, "invalid checksum"))?;
    if let Some((no, _)) = lines.next() {
        return Err(bad(no, "content after the checksum line"));
    }

    let at = weights_line;
    let d: usize = fields.parse("d", at)?;
    let n: usize = fields.parse("n", at)?;
    let sigma = fields.float("sigma", at)?;
    let b = fields.float("bias", at)?;
    let (mode_line, mode) = fields.take("mode", at)?;
    let mode = Mode::parse(&mode).ok_or_else(|| bad(mode_line, format!("unknown mode `{mode}`")))?;
    let scene_id = fields.take("prov.scene", at)?.1;
    let seed = fields.parse("prov.seed", at)?;
    let m = fields.parse("prov.m", at)?;
    let delta = fields.float("prov.delta", at)?;
    let epsilon = fields.float("prov.epsilon", at)?;
    let xi = fields.float("prov.xi", at)?;
    let rng = fields.take("prov.rng", at)?.1;
    let feature_cap = fields.parse("prov.feature_cap", at)?;
    let (ub_line, use_bias) = fields.take("prov.svm.use_bias", at)?;
    let diagnostics = SolverDiagnostics {
        c: fields.float("prov.svm.c", at)?,
        kkt_tol: fields.float("prov.svm.kkt_tol", at)?,
        max_iterations: fields.parse("prov.svm.max_iterations", at)?,
        use_bias: parse_bool(&use_bias, ub_line)?,
        iterations: fields.parse("prov.svm.iterations", at)?,
        kkt_gap: fields.float("prov.svm.kkt_gap", at)?,
        max_kkt_violation: fields.float("prov.svm.max_kkt_violation", at)?,
        min_functional_margin: fields.float("prov.svm.min_functional_margin", at)?,
        margin: fields.float("prov.svm.margin", at)?,
        support_vectors: fields.parse("prov.svm.support_vectors", at)?,
    };
    let trace_len: usize = fields.parse("prov.trace.len", at)?;
    let guarantee = parse_report(&mut fields, "guar.", at)?;
    if let Some((k, (line, _))) = fields.map.iter().next() {
        return Err(bad(*line, format!("unknown field `{k}`")));
    }
    traces.sort_by_key(|(i, _)| *i);
    if traces.len() != trace_len || traces.iter().enumerate().any(|(i, (j, _))| i != *j) {
        return Err(bad(at, "trace entries do not match prov.trace.len"));
    }

    let featuremap = FeatureMapParams::from_parts(d, n, sigma, Some(delta), feature_cap)
        .map_err(|e| bad(at, e.to_string()))?;
    if featuremap.feature_dim() != count {
        return Err(bad(
            weights_line,
            format!("{count} weights for a {}-entry feature map", featuremap.feature_dim()),
        ));
    }

    let computed = fnv1a64(&bytes[..body_len]);
    if computed != stored {
        return Err(ModelFileError::Checksum { stored, computed });
    }

    Ok(TrainedLcd {
        model: LinearModel { w, b, diagnostics },
        featuremap,
        guarantee,
        provenance: Provenance {
            scene_id,
            seed,
            m,
            delta,
            epsilon,
            xi,
            rng,
            mode,
            feature_cap,
            trace: traces.into_iter().map(|(_, t)| t).collect(),
            notes,
        },
    })
}
