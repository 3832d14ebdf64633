//! Dense complex 4-index tensors, the exact index permutation used to turn
//! a two-variable Wigner transform into an operator kernel, and the binary
//! export format (JSON header + raw complex payload).

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 8] = b"PLTENS01";

/// Axis metadata: a tag name plus the affine sample rule `v_i = origin + i*spacing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub tag: String,
    pub origin: f64,
    pub spacing: f64,
    pub points: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    /// True when the sample set is symmetric about 0 up to one sample,
    /// i.e. origin = -(points/2)*spacing.
    pub fn is_symmetric(&self) -> bool {
        (self.origin + self.points as f64 / 2.0 * self.spacing).abs()
            <= 1e-9 * self.spacing.abs().max(1.0)
    }
}

/// Row-major complex tensor over four tagged axes.
#[derive(Debug, Clone)]
pub struct Tensor4 {
    pub axes: [Axis; 4],
    pub values: Vec<Complex64>,
}

impl Tensor4 {
    pub fn zeros(axes: [Axis; 4]) -> Self {
        let n: usize = axes.iter().map(|a| a.points).product();
        Tensor4 { axes, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn dims(&self) -> [usize; 4] {
        [
            self.axes[0].points,
            self.axes[1].points,
            self.axes[2].points,
            self.axes[3].points,
        ]
    }

    #[inline]
    pub fn flat(&self, i: [usize; 4]) -> usize {
        let d = self.dims();
        ((i[0] * d[1] + i[1]) * d[2] + i[2]) * d[3] + i[3]
    }

    #[inline]
    pub fn get(&self, i: [usize; 4]) -> Complex64 {
        self.values[self.flat(i)]
    }

    #[inline]
    pub fn set(&mut self, i: [usize; 4], v: Complex64) {
        let f = self.flat(i);
        self.values[f] = v;
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sup_diff(&self, other: &Tensor4) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `T_p F(x, xi, y, eta) = F(x, y, xi, -eta)`: an index permutation plus a
/// reflection of the last axis, exact (no arithmetic on values).
///
/// The input axes must be tagged and the last axis symmetric about 0; the
/// reflection uses the lattice periodicity of the frequency axis, so index
/// `0` (the unpaired `-max` sample) stays fixed.
pub fn permute_tp(k: &Tensor4) -> Result<Tensor4> {
    if k.axes.iter().any(|a| a.tag.is_empty()) {
        return Err(Error::Precondition("permute_tp requires tagged axes".into()));
    }
    if !k.axes[3].is_symmetric() {
        return Err(Error::Precondition(
            "permute_tp requires the last axis symmetric about 0".into(),
        ));
    }
    let d = k.dims();
    let out_axes = [
        k.axes[0].clone(),
        k.axes[2].clone(),
        k.axes[1].clone(),
        k.axes[3].clone(),
    ];
    let mut out = Tensor4::zeros(out_axes);
    let m3 = d[3];
    for i0 in 0..d[0] {
        for i1 in 0..d[2] {
            for i2 in 0..d[1] {
                for i3 in 0..m3 {
                    // eta index i3 corresponds to value (i3 - m3/2)*spacing;
                    // negation maps it to (m3 - i3) mod m3.
                    let neg = (m3 - i3) % m3;
                    let v = k.get([i0, i2, i1, neg]);
                    out.set([i0, i1, i2, i3], v);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorHeader {
    pub shape: Vec<usize>,
    pub axes: Vec<Axis>,
    pub dtype: String,
    pub order: String,
    pub payload_bytes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

/// Binary tensor export: magic, little-endian u64 header length, JSON
/// header, then the raw payload as interleaved little-endian f64 pairs in
/// row-major index order.
pub fn write_tensor(
    w: &mut impl Write,
    t: &Tensor4,
    provenance: Option<serde_json::Value>,
) -> Result<()> {
    let header = TensorHeader {
        shape: t.dims().to_vec(),
        axes: t.axes.to_vec(),
        dtype: "complex128-le-interleaved".into(),
        order: "row-major".into(),
        payload_bytes: t.values.len() * 16,
        provenance,
    };
    let hjson = serde_json::to_vec(&header)?;
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&(hjson.len() as u64).to_le_bytes())?;
    w.write_all(&hjson)?;
    let mut buf = Vec::with_capacity(t.values.len() * 16);
    for v in &t.values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor(r: &mut impl Read) -> Result<(Tensor4, TensorHeader)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::InvalidArgument("bad tensor magic".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let hlen = u64::from_le_bytes(len) as usize;
    let mut hjson = vec![0u8; hlen];
    r.read_exact(&mut hjson)?;
    let header: TensorHeader = serde_json::from_slice(&hjson)?;
    if header.shape.len() != 4 || header.axes.len() != 4 {
        return Err(Error::InvalidArgument("tensor is not 4-index".into()));
    }
    let n: usize = header.shape.iter().product();
    let mut payload = vec![0u8; n * 16];
    r.read_exact(&mut payload)?;
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    let axes: [Axis; 4] = header.axes.clone().try_into().map_err(|_| {
        Error::InvalidArgument("tensor header axes".into())
    })?;
    Ok((Tensor4 { axes, values }, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_axes(m: usize) -> [Axis; 4] {
        let sp = Axis { tag: "x".into(), origin: -(m as f64) / 2.0 * 0.5, spacing: 0.5, points: m };
        let fr = Axis { tag: "eta".into(), origin: -(m as f64) / 2.0 * 0.25, spacing: 0.25, points: m };
        [
            sp.clone(),
            Axis { tag: "y".into(), ..sp },
            Axis { tag: "xi".into(), ..fr.clone() },
            fr,
        ]
    }

    #[test]
    fn permute_tp_involution_and_delta() {
        let m = 6;
        let mut t = Tensor4::zeros(test_axes(m));
        // delta concentrated at (a, b, c, e)
        let (a, b, c, e) = (1, 4, 2, 5);
        t.set([a, b, c, e], Complex64::new(1.0, -2.0));
        let p = permute_tp(&t).unwrap();
        // concentrates at (a, c, b, -e): index of -eta_5 = (6-5) % 6 = 1
        assert_eq!(p.get([a, c, b, 1]), Complex64::new(1.0, -2.0));
        assert_eq!(p.values.iter().filter(|v| v.norm() > 0.0).count(), 1);

        let pp = permute_tp(&p).unwrap();
        assert_eq!(pp.values, t.values);
        assert_eq!(pp.axes[1].tag, t.axes[1].tag);

        // norm preservation, exact
        let n1: f64 = t.values.iter().map(|v| v.norm_sqr()).sum();
        let n2: f64 = p.values.iter().map(|v| v.norm_sqr()).sum();
        assert_eq!(n1, n2);
    }

    #[test]
    fn permute_tp_rejects_asymmetric_axis() {
        let mut axes = test_axes(4);
        axes[3].origin = 0.0;
        let t = Tensor4::zeros(axes);
        assert!(permute_tp(&t).is_err());
    }

    #[test]
    fn tensor_io_round_trip() {
        let mut t = Tensor4::zeros(test_axes(4));
        for (i, v) in t.values.iter_mut().enumerate() {
            *v = Complex64::new(i as f64, -(i as f64) / 3.0);
        }
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t, Some(serde_json::json!({"route": "test"}))).unwrap();
        let (back, header) = read_tensor(&mut buf.as_slice()).unwrap();
        assert_eq!(back.values, t.values);
        assert_eq!(header.provenance.unwrap()["route"], "test");
    }
}
