//! Minimal WFDB reader/writer: `.hea` headers plus format-16 `.dat` signals.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// WFDB default ADC gain (units per millivolt) when a header omits it.
pub const DEFAULT_GAIN: f64 = 200.0;
/// PTB-XL resolution: 1 µV per LSB, i.e. 1000 ADC units per mV.
pub const PTBXL_GAIN: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: u32,
    pub byte_offset: usize,
    /// ADC units per physical unit.
    pub gain: f64,
    pub baseline: i32,
    pub units: String,
    pub adc_res: u32,
    pub adc_zero: i32,
    pub init_value: i32,
    pub checksum: i32,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WfdbHeader {
    pub record_id: String,
    pub n_leads: usize,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub signals: Vec<SignalSpec>,
}

impl WfdbHeader {
    pub fn gains(&self) -> Vec<f64> {
        self.signals.iter().map(|s| s.gain).collect()
    }

    pub fn lead_names(&self) -> Vec<String> {
        self.signals.iter().map(|s| s.description.clone()).collect()
    }

    /// Render the header in WFDB text form.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {}\n",
            self.record_id,
            self.n_leads,
            fmt_num(self.sample_rate_hz),
            self.n_samples
        );
        for s in &self.signals {
            out.push_str(&format!(
                "{} {} {}({})/{} {} {} {} {} 0 {}\n",
                s.file_name,
                s.format,
                fmt_num(s.gain),
                s.baseline,
                s.units,
                s.adc_res,
                s.adc_zero,
                s.init_value,
                s.checksum,
                s.description
            ));
        }
        out
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parse a WFDB `.hea` header. Only single-segment records stored in
/// format 16 are accepted.
pub fn parse_wfdb_header(header_text: &str) -> Result<WfdbHeader> {
    let mut lines = header_text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (rec_line_no, rec_line) = lines.next().ok_or_else(|| perr(1, "empty header"))?;
    let fields: Vec<&str> = rec_line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(perr(rec_line_no, "record line needs a name and signal count"));
    }
    let record_id = fields[0];
    if record_id.contains('/') {
        return Err(perr(rec_line_no, "multi-segment records are not supported"));
    }
    let n_leads: usize = fields[1]
        .parse()
        .map_err(|_| perr(rec_line_no, format!("bad signal count {:?}", fields[1])))?;
    let sample_rate_hz = match fields.get(2) {
        Some(f) => {
            let base = f.split(['/', '(']).next().unwrap_or(f);
            base.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x > 0.0)
                .ok_or_else(|| perr(rec_line_no, format!("bad sampling frequency {f:?}")))?
        }
        None => 250.0,
    };
    let n_samples: usize = match fields.get(3) {
        Some(f) => f
            .parse()
            .map_err(|_| perr(rec_line_no, format!("bad sample count {f:?}")))?,
        None => return Err(perr(rec_line_no, "missing sample count")),
    };

    let mut signals = Vec::with_capacity(n_leads);
    for (line_no, line) in lines.by_ref().take(n_leads) {
        signals.push(parse_signal_line(line_no, line)?);
    }
    if signals.len() != n_leads {
        return Err(perr(
            rec_line_no,
            format!("header declares {n_leads} signals but lists {}", signals.len()),
        ));
    }

    Ok(WfdbHeader {
        record_id: record_id.to_string(),
        n_leads,
        sample_rate_hz,
        n_samples,
        signals,
    })
}

fn parse_signal_line(line_no: usize, line: &str) -> Result<SignalSpec> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(perr(line_no, "signal line needs a file name and format"));
    }
    let file_name = fields[0].to_string();

    // format[xspf][:skew][+offset]
    let fmt_field = fields[1];
    let digits: String = fmt_field.chars().take_while(|c| c.is_ascii_digit()).collect();
    let format: u32 = digits
        .parse()
        .map_err(|_| perr(line_no, format!("bad format field {fmt_field:?}")))?;
    if format != 16 {
        return Err(Error::UnsupportedFormat(format));
    }
    let rest = &fmt_field[digits.len()..];
    if let Some(spf) = rest.strip_prefix('x') {
        let spf: String = spf.chars().take_while(|c| c.is_ascii_digit()).collect();
        if spf != "1" {
            return Err(perr(line_no, "multiple samples per frame are not supported"));
        }
    }
    let byte_offset = match rest.split_once('+') {
        Some((_, off)) => off
            .parse()
            .map_err(|_| perr(line_no, format!("bad byte offset in {fmt_field:?}")))?,
        None => 0,
    };

    let int_field = |idx: usize, default: i64| -> Result<i64> {
        match fields.get(idx) {
            Some(f) => f
                .parse::<i64>()
                .map_err(|_| perr(line_no, format!("bad integer field {f:?}"))),
            None => Ok(default),
        }
    };

    let adc_res = int_field(3, 16)? as u32;
    let adc_zero = int_field(4, 0)? as i32;
    let init_value = int_field(5, 0)? as i32;
    let checksum = int_field(6, 0)? as i32;
    let description = if fields.len() > 8 {
        fields[8..].join(" ")
    } else {
        String::new()
    };

    let (gain, baseline, units) = match fields.get(2) {
        Some(f) => parse_gain_field(line_no, f, adc_zero)?,
        None => (DEFAULT_GAIN, adc_zero, "mV".to_string()),
    };

    Ok(SignalSpec {
        file_name,
        format,
        byte_offset,
        gain,
        baseline,
        units,
        adc_res,
        adc_zero,
        init_value,
        checksum,
        description,
    })
}

/// `gain[(baseline)][/units]`
fn parse_gain_field(line_no: usize, field: &str, adc_zero: i32) -> Result<(f64, i32, String)> {
    let (value, units) = match field.split_once('/') {
        Some((v, u)) => (v, u.to_string()),
        None => (field, "mV".to_string()),
    };
    let (gain_str, baseline) = match value.split_once('(') {
        Some((g, b)) => {
            let b = b
                .strip_suffix(')')
                .ok_or_else(|| perr(line_no, format!("unterminated baseline in {field:?}")))?;
            let b: i32 = b
                .parse()
                .map_err(|_| perr(line_no, format!("bad baseline in {field:?}")))?;
            (g, b)
        }
        None => (value, adc_zero),
    };
    let gain: f64 = gain_str
        .parse()
        .map_err(|_| perr(line_no, format!("bad gain {gain_str:?}")))?;
    if !gain.is_finite() || gain < 0.0 {
        return Err(perr(line_no, format!("bad gain {gain_str:?}")));
    }
    let gain = if gain == 0.0 { DEFAULT_GAIN } else { gain };
    Ok((gain, baseline, units))
}

/// Decode frame-interleaved little-endian 16-bit samples into an
/// `n_leads × n_samples` matrix of physical units (`raw / gain`).
pub fn decode_signal_16(
    bytes: &[u8],
    n_leads: usize,
    n_samples: usize,
    gains: &[f64],
) -> Result<Array2<f64>> {
    if gains.len() != n_leads {
        return Err(Error::invalid(format!(
            "{} gains supplied for {n_leads} leads",
            gains.len()
        )));
    }
    let expected = 2 * n_leads * n_samples;
    if bytes.len() != expected {
        return Err(Error::TruncatedSignal {
            expected,
            found: bytes.len(),
        });
    }
    let mut out = Array2::zeros((n_leads, n_samples));
    for (frame_idx, frame) in bytes.chunks_exact(2 * n_leads.max(1)).enumerate() {
        for (lead, pair) in frame.chunks_exact(2).enumerate() {
            let raw = i16::from_le_bytes([pair[0], pair[1]]);
            out[[lead, frame_idx]] = f64::from(raw) / gains[lead];
        }
    }
    Ok(out)
}

/// Quantize physical-unit samples to format-16 bytes (round to nearest LSB,
/// saturating at the i16 range).
pub fn encode_signal_16(leads: &Array2<f64>, gains: &[f64]) -> Vec<u8> {
    let (n_leads, n_samples) = leads.dim();
    let mut out = Vec::with_capacity(2 * n_leads * n_samples);
    for t in 0..n_samples {
        for lead in 0..n_leads {
            let raw = (leads[[lead, t]] * gains[lead]).round();
            let raw = raw.clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16;
            out.extend_from_slice(&raw.to_le_bytes());
        }
    }
    out
}

/// Read a record given the path of its header (with or without `.hea`).
pub fn read_record(path: &Path) -> Result<(WfdbHeader, Array2<f64>)> {
    let hea = if path.extension().is_some_and(|e| e == "hea") {
        path.to_path_buf()
    } else {
        path.with_extension("hea")
    };
    let header = parse_wfdb_header(&fs::read_to_string(&hea)?)?;
    let dir = hea.parent().unwrap_or(Path::new("."));
    let first = header
        .signals
        .first()
        .ok_or_else(|| perr(1, "record has no signals"))?;
    if header
        .signals
        .iter()
        .any(|s| s.file_name != first.file_name || s.byte_offset != first.byte_offset)
    {
        return Err(perr(2, "signals split across several files are not supported"));
    }
    let bytes = fs::read(dir.join(&first.file_name))?;
    let start = first.byte_offset.min(bytes.len());
    let mut leads = decode_signal_16(
        &bytes[start..],
        header.n_leads,
        header.n_samples,
        &header.gains(),
    )?;
    for (lead, s) in header.signals.iter().enumerate() {
        if s.baseline != 0 {
            let shift = f64::from(s.baseline) / s.gain;
            leads.row_mut(lead).mapv_inplace(|v| v - shift);
        }
    }
    Ok((header, leads))
}

/// Write `leads` as `<dir>/<record_id>.hea` + `<dir>/<record_id>.dat`.
pub fn write_record(
    dir: &Path,
    record_id: &str,
    sample_rate_hz: f64,
    leads: &Array2<f64>,
    lead_names: &[&str],
) -> Result<WfdbHeader> {
    let (n_leads, n_samples) = leads.dim();
    let gains = vec![PTBXL_GAIN; n_leads];
    let bytes = encode_signal_16(leads, &gains);
    let file_name = format!("{record_id}.dat");
    let signals = (0..n_leads)
        .map(|lead| {
            let first = i16::from_le_bytes([bytes[2 * lead], bytes[2 * lead + 1]]);
            let checksum = bytes
                .chunks_exact(2)
                .skip(lead)
                .step_by(n_leads)
                .fold(0i16, |acc, p| acc.wrapping_add(i16::from_le_bytes([p[0], p[1]])));
            SignalSpec {
                file_name: file_name.clone(),
                format: 16,
                byte_offset: 0,
                gain: PTBXL_GAIN,
                baseline: 0,
                units: "mV".into(),
                adc_res: 16,
                adc_zero: 0,
                init_value: i32::from(first),
                checksum: i32::from(checksum),
                description: lead_names.get(lead).copied().unwrap_or("").to_string(),
            }
        })
        .collect();
    let header = WfdbHeader {
        record_id: record_id.to_string(),
        n_leads,
        sample_rate_hz,
        n_samples,
        signals,
    };
    fs::create_dir_all(dir)?;
    fs::write(dir.join(&file_name), &bytes)?;
    fs::write(dir.join(format!("{record_id}.hea")), header.to_text())?;
    Ok(header)
}
