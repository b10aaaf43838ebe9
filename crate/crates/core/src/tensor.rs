//! Log-score tensors, target sequences, validation, and bit-exact serialization.
//!
//! The central type is [`LogProbTensor`], a dense row-major `[T, U+1, V]` array of
//! natural-log scores produced by a joint network. Vocabulary index 0 is the blank
//! unit everywhere inside this crate; external data with blank elsewhere is
//! converted at the boundary via [`LogProbTensor::remap_blank`].

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Storage precision of a tensor's payload.
///
/// Scores may be stored single-precision, but all forward-backward accumulation
/// happens in double precision regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    fn dtype_code(self) -> u8 {
        match self {
            Precision::Single => 1,
            Precision::Double => 2,
        }
    }

    fn from_dtype_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(Precision::Single),
            2 => Ok(Precision::Double),
            other => Err(Error::UnknownDtype(other)),
        }
    }

    /// Byte width of one payload element.
    pub fn width(self) -> usize {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    /// Default normalization tolerance for this precision.
    pub fn default_tol(self) -> f64 {
        match self {
            Precision::Single => 1e-3,
            Precision::Double => 1e-6,
        }
    }
}

/// Shape and precision of a tensor, without its payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorShape {
    /// `[T, U+1, V]`.
    pub dims: [usize; 3],
    pub precision: Precision,
}

#[derive(Debug, Clone, PartialEq)]
enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

/// Dense per-(frame, emitted-unit-count, vocab-entry) log-score tensor.
///
/// Shape is `[T, U+1, V]`, row-major: `T` frames, `U+1` unit rows, `V` vocabulary
/// entries including blank at index 0. Entries are finite or negative infinity
/// (an explicit "arc forbidden" marker); positive infinity and NaN are rejected
/// at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbTensor {
    dims: [usize; 3],
    normalized: bool,
    data: TensorData,
}

/// One row whose log-sum-exp deviates from zero by more than the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDeviation {
    pub t: usize,
    pub u: usize,
    pub deviation: f64,
}

/// Outcome of [`LogProbTensor::validate`]. Empty report iff valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Rows failing the normalization check, when it was requested.
    pub bad_rows: Vec<RowDeviation>,
    /// Entries that are `+inf` or NaN (should be impossible for tensors built
    /// through this crate's constructors).
    pub bad_entries: Vec<(usize, usize, usize)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.bad_rows.is_empty() && self.bad_entries.is_empty()
    }
}

fn check_dims(t: usize, u_rows: usize, v: usize) -> Result<()> {
    if t < 1 || u_rows < 1 || v < 2 {
        return Err(Error::InvalidDimensions(format!(
            "need T >= 1, U >= 0, V >= 2; got dims [{t}, {u_rows}, {v}]"
        )));
    }
    Ok(())
}

fn checked_len(dims: [usize; 3]) -> Result<usize> {
    dims[0]
        .checked_mul(dims[1])
        .and_then(|n| n.checked_mul(dims[2]))
        .ok_or(Error::DimensionOverflow)
}

fn entry_ok(x: f64) -> bool {
    x.is_finite() || x == f64::NEG_INFINITY
}

impl LogProbTensor {
    /// Builds a double-precision tensor from a flat row-major vector.
    pub fn from_vec_f64(dims: [usize; 3], data: Vec<f64>, normalized: bool) -> Result<Self> {
        check_dims(dims[0], dims[1], dims[2])?;
        if checked_len(dims)? != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {:?} imply {} entries, got {}",
                dims,
                checked_len(dims)?,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !entry_ok(*x)) {
            return Err(Error::Parse(format!(
                "entry {i} is {}; entries must be finite or -inf",
                data[i]
            )));
        }
        Ok(Self {
            dims,
            normalized,
            data: TensorData::F64(data),
        })
    }

    /// Builds a single-precision tensor from a flat row-major vector.
    pub fn from_vec_f32(dims: [usize; 3], data: Vec<f32>, normalized: bool) -> Result<Self> {
        check_dims(dims[0], dims[1], dims[2])?;
        if checked_len(dims)? != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {:?} imply {} entries, got {}",
                dims,
                checked_len(dims)?,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !entry_ok(f64::from(*x))) {
            return Err(Error::Parse(format!(
                "entry {i} is {}; entries must be finite or -inf",
                data[i]
            )));
        }
        Ok(Self {
            dims,
            normalized,
            data: TensorData::F32(data),
        })
    }

    /// Internal constructor for data known finite (gradient scatters); the
    /// entry scan runs in debug builds only.
    pub(crate) fn from_finite_vec(dims: [usize; 3], data: Vec<f64>) -> Self {
        debug_assert_eq!(dims[0] * dims[1] * dims[2], data.len());
        debug_assert!(data.iter().all(|x| x.is_finite()));
        Self {
            dims,
            normalized: false,
            data: TensorData::F64(data),
        }
    }

    pub(crate) fn from_finite_vec_f32(dims: [usize; 3], data: Vec<f32>) -> Self {
        debug_assert_eq!(dims[0] * dims[1] * dims[2], data.len());
        debug_assert!(data.iter().all(|x| x.is_finite()));
        Self {
            dims,
            normalized: false,
            data: TensorData::F32(data),
        }
    }

    /// `[T, U+1, V]`.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Frame count.
    pub fn frames(&self) -> usize {
        self.dims[0]
    }

    /// Unit rows (`U + 1`).
    pub fn unit_rows(&self) -> usize {
        self.dims[1]
    }

    /// Vocabulary size including blank.
    pub fn vocab(&self) -> usize {
        self.dims[2]
    }

    pub fn precision(&self) -> Precision {
        match self.data {
            TensorData::F32(_) => Precision::Single,
            TensorData::F64(_) => Precision::Double,
        }
    }

    pub fn shape(&self) -> TensorShape {
        TensorShape {
            dims: self.dims,
            precision: self.precision(),
        }
    }

    /// Whether the tensor claims per-row normalization.
    pub fn is_normalized_flagged(&self) -> bool {
        self.normalized
    }

    fn index(&self, t: usize, u: usize, v: usize) -> usize {
        debug_assert!(t < self.dims[0] && u < self.dims[1] && v < self.dims[2]);
        (t * self.dims[1] + u) * self.dims[2] + v
    }

    /// Entry at `(t, u, v)`, widened to `f64`.
    pub fn get(&self, t: usize, u: usize, v: usize) -> f64 {
        let i = self.index(t, u, v);
        match &self.data {
            TensorData::F32(d) => f64::from(d[i]),
            TensorData::F64(d) => d[i],
        }
    }

    /// Flat row-major view widened to `f64`.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F32(d) => d.iter().map(|x| f64::from(*x)).collect(),
            TensorData::F64(d) => d.clone(),
        }
    }

    /// Checks structural entry validity and, when `require_normalized`, that each
    /// `(t, u)` row satisfies `|logsumexp_v data[t,u,.]| <= tol`.
    ///
    /// This is a reporting operation: it never fails, it lists offenders.
    pub fn validate(&self, require_normalized: bool, tol: f64) -> ValidationReport {
        let mut report = ValidationReport::default();
        for t in 0..self.dims[0] {
            for u in 0..self.dims[1] {
                let mut row_max = f64::NEG_INFINITY;
                for v in 0..self.dims[2] {
                    let x = self.get(t, u, v);
                    if !entry_ok(x) {
                        report.bad_entries.push((t, u, v));
                    }
                    if x > row_max {
                        row_max = x;
                    }
                }
                if require_normalized {
                    let lse = if row_max == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        let sum: f64 = (0..self.dims[2])
                            .map(|v| (self.get(t, u, v) - row_max).exp())
                            .sum();
                        row_max + sum.ln()
                    };
                    if lse.abs() > tol {
                        report.bad_rows.push(RowDeviation {
                            t,
                            u,
                            deviation: lse,
                        });
                    }
                }
            }
        }
        report
    }

    /// Deterministic normalized random tensor: log-softmax of i.i.d. standard
    /// normal draws, double precision.
    pub fn random_normalized(t: usize, u: usize, v: usize, seed: u64) -> Result<Self> {
        Self::random_normalized_in(t, u, v, seed, Precision::Double)
    }

    /// As [`random_normalized`](Self::random_normalized) but with explicit storage
    /// precision. Draws and the log-softmax happen in double precision either way;
    /// single precision only narrows the stored payload.
    pub fn random_normalized_in(
        t: usize,
        u: usize,
        v: usize,
        seed: u64,
        precision: Precision,
    ) -> Result<Self> {
        let u_rows = u + 1;
        check_dims(t, u_rows, v)?;
        let len = checked_len([t, u_rows, v])?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let mut data: Vec<f64> = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(normal.sample(&mut rng));
        }
        // log-softmax per (t, u) row
        for row in data.chunks_mut(v) {
            let row_max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = row_max + row.iter().map(|x| (x - row_max).exp()).sum::<f64>().ln();
            for x in row.iter_mut() {
                *x -= lse;
            }
        }
        match precision {
            Precision::Double => Self::from_vec_f64([t, u_rows, v], data, true),
            Precision::Single => Self::from_vec_f32(
                [t, u_rows, v],
                data.into_iter().map(|x| x as f32).collect(),
                true,
            ),
        }
    }

    /// Permutes the vocabulary axis so the entry formerly at `blank_index` sits at
    /// index 0 and all other entries keep their relative order.
    pub fn remap_blank(&self, blank_index: usize) -> Result<Self> {
        let v = self.dims[2];
        if blank_index >= v {
            return Err(Error::IndexOutOfRange {
                index: blank_index,
                len: v,
            });
        }
        // old index of the entry that lands at new index j
        let source: Vec<usize> = std::iter::once(blank_index)
            .chain((0..v).filter(|&j| j != blank_index))
            .collect();
        let remap_f64 = |d: &[f64]| -> Vec<f64> {
            d.chunks(v)
                .flat_map(|row| source.iter().map(|&j| row[j]).collect::<Vec<_>>())
                .collect()
        };
        let data = match &self.data {
            TensorData::F64(d) => TensorData::F64(remap_f64(d)),
            TensorData::F32(d) => TensorData::F32(
                d.chunks(v)
                    .flat_map(|row| source.iter().map(|&j| row[j]).collect::<Vec<_>>())
                    .collect(),
            ),
        };
        Ok(Self {
            dims: self.dims,
            normalized: self.normalized,
            data,
        })
    }

    /// Copy with `c` added to every entry (`-inf` stays `-inf`).
    pub fn shifted(&self, c: f64) -> Self {
        let map64 = |d: &[f64]| d.iter().map(|x| x + c).collect::<Vec<_>>();
        let data = match &self.data {
            TensorData::F64(d) => TensorData::F64(map64(d)),
            TensorData::F32(d) => {
                TensorData::F32(d.iter().map(|x| (f64::from(*x) + c) as f32).collect())
            }
        };
        Self {
            dims: self.dims,
            normalized: false,
            data,
        }
    }

    /// Copy with entry `(t, u, v)` replaced by `value`. Clears the normalized flag.
    pub fn with_entry(&self, t: usize, u: usize, v: usize, value: f64) -> Self {
        let i = self.index(t, u, v);
        let mut out = self.clone();
        out.normalized = false;
        match &mut out.data {
            TensorData::F64(d) => d[i] = value,
            TensorData::F32(d) => d[i] = value as f32,
        }
        out
    }

    /// Binary serialization. Little-endian layout: magic `RNTL`, version u8 = 1,
    /// dtype u8 (1 = single, 2 = double), normalized u8, reserved u8 = 0,
    /// ndim u8 = 3, dims 3 x u64, then the raw row-major payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(33 + self.len_bytes());
        out.extend_from_slice(b"RNTL");
        out.push(1);
        out.push(self.precision().dtype_code());
        out.push(u8::from(self.normalized));
        out.push(0);
        out.push(3);
        for d in self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &self.data {
            TensorData::F32(d) => {
                for x in d {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            TensorData::F64(d) => {
                for x in d {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out
    }

    fn len_bytes(&self) -> usize {
        let n = self.dims[0] * self.dims[1] * self.dims[2];
        n * self.precision().width()
    }

    /// Parses the binary format written by [`to_bytes`](Self::to_bytes).
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[0..4] != b"RNTL" {
            return Err(Error::BadMagic);
        }
        if bytes.len() < 33 {
            return Err(Error::Truncated {
                expected: 33,
                found: bytes.len(),
            });
        }
        if bytes[4] != 1 {
            return Err(Error::UnknownVersion(bytes[4]));
        }
        let precision = Precision::from_dtype_code(bytes[5])?;
        let normalized = match bytes[6] {
            0 => false,
            1 => true,
            other => return Err(Error::Parse(format!("bad normalized flag {other}"))),
        };
        if bytes[8] != 3 {
            return Err(Error::Parse(format!("unsupported ndim {}", bytes[8])));
        }
        let mut dims = [0usize; 3];
        for (i, d) in dims.iter_mut().enumerate() {
            let off = 9 + 8 * i;
            let raw = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            *d = usize::try_from(raw).map_err(|_| Error::DimensionOverflow)?;
        }
        check_dims(dims[0], dims[1], dims[2])?;
        let n = checked_len(dims)?;
        let payload_len = n
            .checked_mul(precision.width())
            .ok_or(Error::DimensionOverflow)?;
        let payload = &bytes[33..];
        if payload.len() != payload_len {
            return Err(Error::Truncated {
                expected: payload_len,
                found: payload.len(),
            });
        }
        match precision {
            Precision::Single => {
                let data = payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                Self::from_vec_f32(dims, data, normalized)
            }
            Precision::Double => {
                let data = payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                Self::from_vec_f64(dims, data, normalized)
            }
        }
    }

    /// JSON serialization: `{"dims": [...], "dtype": "...", "normalized": ..., "data": [...]}`.
    pub fn to_json(&self) -> String {
        let doc = TensorJson {
            dims: self.dims,
            dtype: self.precision(),
            normalized: self.normalized,
            data: self.to_f64_vec(),
        };
        serde_json::to_string(&doc).expect("tensor JSON serialization cannot fail")
    }

    /// Parses the JSON form produced by [`to_json`](Self::to_json).
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TensorJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("tensor JSON: {e}")))?;
        match doc.dtype {
            Precision::Double => Self::from_vec_f64(doc.dims, doc.data, doc.normalized),
            Precision::Single => Self::from_vec_f32(
                doc.dims,
                doc.data.into_iter().map(|x| x as f32).collect(),
                doc.normalized,
            ),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    dims: [usize; 3],
    dtype: Precision,
    normalized: bool,
    data: Vec<f64>,
}

/// Target unit sequence. Units are vocabulary indices in `[1, V-1]`; blank (0)
/// and sentinel ids (negative) are excluded by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSeq {
    units: Vec<u32>,
}

impl TargetSeq {
    pub fn new(units: Vec<u32>) -> Result<Self> {
        if let Some(&u) = units.iter().find(|&&u| u == 0) {
            return Err(Error::UnitOutOfRange {
                unit: i64::from(u),
                vocab: 0,
            });
        }
        Ok(Self { units })
    }

    pub fn empty() -> Self {
        Self { units: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn units(&self) -> &[u32] {
        &self.units
    }

    /// Checks all units lie in `[1, vocab-1]`.
    pub fn check_vocab(&self, vocab: usize) -> Result<()> {
        for &u in &self.units {
            if u as usize >= vocab {
                return Err(Error::UnitOutOfRange {
                    unit: i64::from(u),
                    vocab,
                });
            }
        }
        Ok(())
    }

    /// Parses either a JSON array of ints or whitespace-separated ints.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let raw: Vec<i64> = if trimmed.starts_with('[') {
            serde_json::from_str(trimmed).map_err(|e| Error::Parse(format!("targets JSON: {e}")))?
        } else {
            trimmed
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<i64>()
                        .map_err(|e| Error::Parse(format!("target token `{tok}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        let mut units = Vec::with_capacity(raw.len());
        for x in raw {
            if x <= 0 {
                return Err(Error::UnitOutOfRange { unit: x, vocab: 0 });
            }
            units.push(u32::try_from(x).map_err(|_| Error::UnitOutOfRange { unit: x, vocab: 0 })?);
        }
        Ok(Self { units })
    }
}

/// A batch of (tensor, targets) items sharing vocabulary size and precision.
#[derive(Debug, Clone)]
pub struct Batch {
    items: Vec<(LogProbTensor, TargetSeq)>,
}

impl Batch {
    pub fn new(items: Vec<(LogProbTensor, TargetSeq)>) -> Result<Self> {
        if let Some((first, _)) = items.first() {
            let v = first.vocab();
            let p = first.precision();
            for (i, (x, y)) in items.iter().enumerate() {
                if x.vocab() != v || x.precision() != p {
                    return Err(Error::ShapeMismatch(format!(
                        "batch item {i} has vocab {} / {:?}, expected {} / {:?}",
                        x.vocab(),
                        x.precision(),
                        v,
                        p
                    )));
                }
                if x.unit_rows() != y.len() + 1 {
                    return Err(Error::ShapeMismatch(format!(
                        "batch item {i}: tensor has {} unit rows, targets need {}",
                        x.unit_rows(),
                        y.len() + 1
                    )));
                }
                y.check_vocab(x.vocab())?;
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[(LogProbTensor, TargetSeq)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
