//! Operator payloads and their byte layout.
//!
//! The byte layout exists to make the bit accounting checkable; it is not a
//! wire format. All integers and floats are little-endian.
//!
//! ```text
//! tag u8
//! 0 Dense      dim u32 | dim × f64
//! 1 Sparse     dim u32 | n u32 | n × u32 index | n × f64 value
//! 2 Exponent   dim u32 | base f64 | dim × i8 sign | dim × i32 exponent
//! 3 Dithered   dim u32 | base f64 | levels u32 | norm f64 | has_idx u8
//!              | [n u32 | n × u32 index] | m u32 | m × i8 sign | m × u32 code
//! 4 Decimal    dim u32 | dim × i8 sign | dim × u8 mantissa | dim × i32 exponent
//! ```
//!
//! A sign of 0 marks a zero coordinate. Dithering code 0 is the zero level
//! and code j ∈ 1..=s the level b^(j−s). Decimal values are
//! `mantissa × 10^exponent`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Dense {
        values: Vec<f64>,
    },
    Sparse {
        dim: usize,
        indices: Vec<u32>,
        values: Vec<f64>,
    },
    Exponent {
        base: f64,
        signs: Vec<i8>,
        exponents: Vec<i32>,
    },
    Dithered {
        dim: usize,
        base: f64,
        levels: u32,
        norm: f64,
        /// Present when only a subset of coordinates is transmitted.
        indices: Option<Vec<u32>>,
        signs: Vec<i8>,
        codes: Vec<u32>,
    },
    Decimal {
        signs: Vec<i8>,
        mantissas: Vec<u8>,
        exponents: Vec<i32>,
    },
}

/// bᵏ, evaluated the same way everywhere so decoding is reproducible.
pub(crate) fn power(base: f64, k: i32) -> f64 {
    base.powi(k)
}

/// `m × 10^e`, correctly rounded for |e| ≤ 22.
pub(crate) fn decimal_value(mantissa: u8, exponent: i32) -> f64 {
    let m = f64::from(mantissa);
    if exponent.abs() > 22 {
        let h = exponent / 2;
        m * 10f64.powi(h) * 10f64.powi(exponent - h)
    } else if exponent >= 0 {
        m * 10f64.powi(exponent)
    } else {
        m / 10f64.powi(-exponent)
    }
}

pub(crate) fn dither_level(base: f64, levels: u32, code: u32) -> f64 {
    if code == 0 {
        0.0
    } else {
        power(base, code as i32 - levels as i32)
    }
}

impl Payload {
    pub fn dim(&self) -> usize {
        match self {
            Payload::Dense { values } => values.len(),
            Payload::Sparse { dim, .. } | Payload::Dithered { dim, .. } => *dim,
            Payload::Exponent { signs, .. } | Payload::Decimal { signs, .. } => signs.len(),
        }
    }

    /// Number of explicitly transmitted coordinates.
    pub fn transmitted(&self) -> usize {
        match self {
            Payload::Sparse { indices, .. } => indices.len(),
            Payload::Dithered { indices: Some(idx), .. } => idx.len(),
            other => other.dim(),
        }
    }

    pub fn decode(&self) -> Vec<f64> {
        match self {
            Payload::Dense { values } => values.clone(),
            Payload::Sparse { dim, indices, values } => {
                let mut out = vec![0.0; *dim];
                for (&i, &v) in indices.iter().zip(values) {
                    out[i as usize] = v;
                }
                out
            }
            Payload::Exponent { base, signs, exponents } => signs
                .iter()
                .zip(exponents)
                .map(|(&s, &e)| if s == 0 { 0.0 } else { f64::from(s) * power(*base, e) })
                .collect(),
            Payload::Dithered { dim, base, levels, norm, indices, signs, codes } => {
                let mut out = vec![0.0; *dim];
                let value = |s: i8, c: u32| norm * (f64::from(s) * dither_level(*base, *levels, c));
                match indices {
                    Some(idx) => {
                        for ((&i, &s), &c) in idx.iter().zip(signs).zip(codes) {
                            out[i as usize] = value(s, c);
                        }
                    }
                    None => {
                        for ((o, &s), &c) in out.iter_mut().zip(signs).zip(codes) {
                            *o = value(s, c);
                        }
                    }
                }
                out
            }
            Payload::Decimal { signs, mantissas, exponents } => signs
                .iter()
                .zip(mantissas)
                .zip(exponents)
                .map(|((&s, &m), &e)| if s == 0 { 0.0 } else { f64::from(s) * decimal_value(m, e) })
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        match self {
            Payload::Dense { values } => {
                w.push(0);
                put_u32(&mut w, values.len());
                values.iter().for_each(|v| w.extend_from_slice(&v.to_le_bytes()));
            }
            Payload::Sparse { dim, indices, values } => {
                w.push(1);
                put_u32(&mut w, *dim);
                put_u32(&mut w, indices.len());
                indices.iter().for_each(|i| w.extend_from_slice(&i.to_le_bytes()));
                values.iter().for_each(|v| w.extend_from_slice(&v.to_le_bytes()));
            }
            Payload::Exponent { base, signs, exponents } => {
                w.push(2);
                put_u32(&mut w, signs.len());
                w.extend_from_slice(&base.to_le_bytes());
                signs.iter().for_each(|s| w.extend_from_slice(&s.to_le_bytes()));
                exponents.iter().for_each(|e| w.extend_from_slice(&e.to_le_bytes()));
            }
            Payload::Dithered { dim, base, levels, norm, indices, signs, codes } => {
                w.push(3);
                put_u32(&mut w, *dim);
                w.extend_from_slice(&base.to_le_bytes());
                w.extend_from_slice(&levels.to_le_bytes());
                w.extend_from_slice(&norm.to_le_bytes());
                match indices {
                    Some(idx) => {
                        w.push(1);
                        put_u32(&mut w, idx.len());
                        idx.iter().for_each(|i| w.extend_from_slice(&i.to_le_bytes()));
                    }
                    None => w.push(0),
                }
                put_u32(&mut w, signs.len());
                signs.iter().for_each(|s| w.extend_from_slice(&s.to_le_bytes()));
                codes.iter().for_each(|c| w.extend_from_slice(&c.to_le_bytes()));
            }
            Payload::Decimal { signs, mantissas, exponents } => {
                w.push(4);
                put_u32(&mut w, signs.len());
                signs.iter().for_each(|s| w.extend_from_slice(&s.to_le_bytes()));
                w.extend_from_slice(mantissas);
                exponents.iter().for_each(|e| w.extend_from_slice(&e.to_le_bytes()));
            }
        }
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let payload = match r.u8()? {
            0 => {
                let n = r.len()?;
                Payload::Dense { values: r.many(n, Reader::f64)? }
            }
            1 => {
                let dim = r.len()?;
                let n = r.len()?;
                let indices = r.many(n, Reader::u32)?;
                let values = r.many(n, Reader::f64)?;
                Payload::Sparse { dim, indices, values }
            }
            2 => {
                let n = r.len()?;
                let base = r.f64()?;
                let signs = r.many(n, Reader::i8)?;
                let exponents = r.many(n, Reader::i32)?;
                Payload::Exponent { base, signs, exponents }
            }
            3 => {
                let dim = r.len()?;
                let base = r.f64()?;
                let levels = r.u32()?;
                let norm = r.f64()?;
                let indices = match r.u8()? {
                    0 => None,
                    1 => {
                        let n = r.len()?;
                        Some(r.many(n, Reader::u32)?)
                    }
                    t => return Err(malformed(format!("bad index flag {t}"))),
                };
                let m = r.len()?;
                let signs = r.many(m, Reader::i8)?;
                let codes = r.many(m, Reader::u32)?;
                Payload::Dithered { dim, base, levels, norm, indices, signs, codes }
            }
            4 => {
                let n = r.len()?;
                let signs = r.many(n, Reader::i8)?;
                let mantissas = r.many(n, Reader::u8)?;
                let exponents = r.many(n, Reader::i32)?;
                Payload::Decimal { signs, mantissas, exponents }
            }
            t => return Err(malformed(format!("unknown payload tag {t}"))),
        };
        if r.pos != bytes.len() {
            return Err(malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(payload)
    }
}

fn put_u32(w: &mut Vec<u8>, n: usize) {
    let n = u32::try_from(n).expect("payload length fits in u32");
    w.extend_from_slice(&n.to_le_bytes());
}

fn malformed(msg: String) -> Error {
    Error::InvalidParameter(format!("malformed payload: {msg}"))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| malformed("truncated".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice has length N"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }

    fn i8(&mut self) -> Result<i8> {
        Ok(i8::from_le_bytes(self.take()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn len(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn many<T>(&mut self, n: usize, f: fn(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        (0..n).map(|_| f(self)).collect()
    }
}
