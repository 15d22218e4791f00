//! Stacked bidirectional GRU with an affine softmax head.
//!
//! Weight file layout (little endian):
//!
//! ```text
//! "NUVAGRU1"
//! u32 n_layers, u32 units, u32 input_dim, u32 n_classes, u32 n_tensors
//! n_tensors x (u32 rows, u32 cols)
//! f32 payload, tensors back to back, row-major
//! ```
//!
//! Tensor order: for each layer, forward then backward direction, each as
//! `W_z W_r W_h` (units x in), `U_z U_r U_h` (units x units),
//! `b_z b_r b_h` (units x 1); then the output `W` (n_classes x 2*units) and
//! `b` (n_classes x 1). Weights are inference-ready (normalisation folded in).

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{ModelError, PosteriorgramSequence};
use crate::frontend::FeatureSequence;
use crate::N_CLASSES;

pub const MODEL_MAGIC: &[u8; 8] = b"NUVAGRU1";

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out[r] = bias[r] + sum_c m[r, c] * v[c]` for a row-major matrix.
fn affine(m: &[f64], bias: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &m[r * cols..(r + 1) * cols];
        *o = bias[r] + row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn matvec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o = m[r * cols..(r + 1) * cols]
            .iter()
            .zip(v)
            .map(|(a, b)| a * b)
            .sum::<f64>();
    }
}

/// Weights of one GRU direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub input_dim: usize,
    pub units: usize,
    pub w_z: Vec<f64>,
    pub w_r: Vec<f64>,
    pub w_h: Vec<f64>,
    pub u_z: Vec<f64>,
    pub u_r: Vec<f64>,
    pub u_h: Vec<f64>,
    pub b_z: Vec<f64>,
    pub b_r: Vec<f64>,
    pub b_h: Vec<f64>,
}

impl GruCell {
    pub fn zeros(input_dim: usize, units: usize) -> Self {
        let w = vec![0.0; units * input_dim];
        let u = vec![0.0; units * units];
        let b = vec![0.0; units];
        Self {
            input_dim,
            units,
            w_z: w.clone(),
            w_r: w.clone(),
            w_h: w,
            u_z: u.clone(),
            u_r: u.clone(),
            u_h: u,
            b_z: b.clone(),
            b_r: b.clone(),
            b_h: b,
        }
    }

    fn tensors(&self) -> [(&[f64], usize, usize); 9] {
        let (i, u) = (self.input_dim, self.units);
        [
            (&self.w_z, u, i),
            (&self.w_r, u, i),
            (&self.w_h, u, i),
            (&self.u_z, u, u),
            (&self.u_r, u, u),
            (&self.u_h, u, u),
            (&self.b_z, u, 1),
            (&self.b_r, u, 1),
            (&self.b_h, u, 1),
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 9] {
        [
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    fn step(&self, x: &[f64], h: &[f64], scratch: &mut Scratch) -> Vec<f64> {
        let n = self.units;
        let Scratch { z, r, rh, cand, tmp } = scratch;
        affine(&self.w_z, &self.b_z, x, z);
        matvec(&self.u_z, h, tmp);
        for k in 0..n {
            z[k] = sigmoid(z[k] + tmp[k]);
        }
        affine(&self.w_r, &self.b_r, x, r);
        matvec(&self.u_r, h, tmp);
        for k in 0..n {
            r[k] = sigmoid(r[k] + tmp[k]);
            rh[k] = r[k] * h[k];
        }
        affine(&self.w_h, &self.b_h, x, cand);
        matvec(&self.u_h, rh, tmp);
        (0..n)
            .map(|k| {
                let c = (cand[k] + tmp[k]).tanh();
                (1.0 - z[k]) * h[k] + z[k] * c
            })
            .collect()
    }

    /// Runs the cell over `inputs` in order, returning every hidden state.
    fn run<'a>(&self, inputs: impl Iterator<Item = &'a Vec<f64>>) -> Vec<Vec<f64>> {
        let mut scratch = Scratch::new(self.units);
        let mut h = vec![0.0; self.units];
        inputs
            .map(|x| {
                h = self.step(x, &h, &mut scratch);
                h.clone()
            })
            .collect()
    }
}

struct Scratch {
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    cand: Vec<f64>,
    tmp: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            z: vec![0.0; n],
            r: vec![0.0; n],
            rh: vec![0.0; n],
            cand: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// One GRU step:
///
/// ```text
/// z  = sigmoid(W_z x + U_z h + b_z)
/// r  = sigmoid(W_r x + U_r h + b_r)
/// h~ = tanh(W_h x + U_h (r * h) + b_h)
/// h' = (1 - z) * h + z * h~
/// ```
pub fn gru_cell(x: &[f64], h_prev: &[f64], cell: &GruCell) -> Result<Vec<f64>, ModelError> {
    if x.len() != cell.input_dim || h_prev.len() != cell.units {
        return Err(ModelError::DimensionMismatch(format!(
            "cell expects input {} and state {}, got {} and {}",
            cell.input_dim,
            cell.units,
            x.len(),
            h_prev.len()
        )));
    }
    Ok(cell.step(x, h_prev, &mut Scratch::new(cell.units)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiGruLayer {
    pub forward: GruCell,
    pub backward: GruCell,
}

impl BiGruLayer {
    /// Forward and backward passes concatenated per frame as `[fwd, bwd]`.
    pub fn run(&self, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let fwd = self.forward.run(inputs.iter());
        let mut bwd = self.backward.run(inputs.iter().rev());
        bwd.reverse();
        fwd.into_iter()
            .zip(bwd)
            .map(|(mut f, b)| {
                f.extend(b);
                f
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruModel {
    pub input_dim: usize,
    pub units: usize,
    pub n_classes: usize,
    pub layers: Vec<BiGruLayer>,
    /// `n_classes x 2*units`, row-major.
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

impl GruModel {
    fn empty(n_layers: usize, units: usize, input_dim: usize, n_classes: usize) -> Self {
        let layers = (0..n_layers)
            .map(|l| {
                let in_dim = if l == 0 { input_dim } else { 2 * units };
                BiGruLayer {
                    forward: GruCell::zeros(in_dim, units),
                    backward: GruCell::zeros(in_dim, units),
                }
            })
            .collect();
        Self {
            input_dim,
            units,
            n_classes,
            layers,
            out_w: vec![0.0; n_classes * 2 * units],
            out_b: vec![0.0; n_classes],
        }
    }

    /// All weights and biases zero.
    pub fn zeros(n_layers: usize, units: usize, input_dim: usize, n_classes: usize) -> Self {
        Self::empty(n_layers, units, input_dim, n_classes)
    }

    /// Uniform weights in `[-scale, scale)` from a seeded generator. Values
    /// are rounded through `f32` so a saved copy reloads identically.
    pub fn random(
        n_layers: usize,
        units: usize,
        input_dim: usize,
        n_classes: usize,
        scale: f64,
        seed: u64,
    ) -> Self {
        let mut model = Self::empty(n_layers, units, input_dim, n_classes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in model.tensors_mut() {
            for v in t.iter_mut() {
                *v = (rng.gen_range(-scale..scale) as f32) as f64;
            }
        }
        model
    }

    fn shape_table(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        for layer in &self.layers {
            for cell in [&layer.forward, &layer.backward] {
                shapes.extend(cell.tensors().iter().map(|&(_, r, c)| (r, c)));
            }
        }
        shapes.push((self.n_classes, 2 * self.units));
        shapes.push((self.n_classes, 1));
        shapes
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for layer in &mut self.layers {
            out.extend(layer.forward.tensors_mut());
            out.extend(layer.backward.tensors_mut());
        }
        out.push(&mut self.out_w);
        out.push(&mut self.out_b);
        out
    }

    fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.layers {
            for cell in [&layer.forward, &layer.backward] {
                out.extend(cell.tensors().iter().map(|t| t.0));
            }
        }
        out.push(&self.out_w);
        out.push(&self.out_b);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.shape_table().iter().map(|(r, c)| r * c).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let shapes = self.shape_table();
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        for v in [
            self.layers.len(),
            self.units,
            self.input_dim,
            self.n_classes,
            shapes.len(),
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for (r, c) in &shapes {
            out.extend_from_slice(&(*r as u32).to_le_bytes());
            out.extend_from_slice(&(*c as u32).to_le_bytes());
        }
        for t in self.tensors() {
            for &v in t {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| ModelError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Stable identifier derived from the serialized weights.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.to_bytes());
        format!("gru-{}", hex::encode(&digest[..8]))
    }

    /// Raw output logits per frame.
    pub fn logits(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
        if let Some(bad) = inputs.iter().find(|x| x.len() != self.input_dim) {
            return Err(ModelError::ModelDimensionError(format!(
                "model expects {}-dim input, got {}",
                self.input_dim,
                bad.len()
            )));
        }
        let mut h: Vec<Vec<f64>> = inputs.to_vec();
        for layer in &self.layers {
            h = layer.run(&h);
        }
        Ok(h.iter()
            .map(|v| {
                let mut out = vec![0.0; self.n_classes];
                affine(&self.out_w, &self.out_b, v, &mut out);
                out
            })
            .collect())
    }

    /// Softmax probabilities per frame.
    pub fn forward(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
        Ok(self.logits(inputs)?.into_iter().map(softmax).collect())
    }

    pub fn infer_posteriorgrams(
        &self,
        features: &FeatureSequence,
    ) -> Result<PosteriorgramSequence, ModelError> {
        if self.n_classes != N_CLASSES {
            return Err(ModelError::ModelDimensionError(format!(
                "model has {} output classes, posteriorgrams need {N_CLASSES}",
                self.n_classes
            )));
        }
        let inputs: Vec<Vec<f64>> = features.frames.iter().map(|f| f.to_vec()).collect();
        let frames = self
            .forward(&inputs)?
            .into_iter()
            .map(|p| {
                let mut row = [0.0; N_CLASSES];
                row.copy_from_slice(&p);
                row
            })
            .collect();
        Ok(PosteriorgramSequence {
            frames,
            source_id: self.id(),
        })
    }
}

pub(crate) fn softmax(logits: Vec<f64>) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GruModel, ModelError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_model(&bytes)
}

pub fn parse_model(bytes: &[u8]) -> Result<GruModel, ModelError> {
    if bytes.len() < 8 || &bytes[..8] != MODEL_MAGIC {
        return Err(ModelError::BadMagic);
    }
    let mut cursor = 8;
    let mut next_u32 = |what: &str| -> Result<usize, ModelError> {
        let b = bytes
            .get(cursor..cursor + 4)
            .ok_or_else(|| ModelError::ShapeMismatch(format!("file ends inside {what}")))?;
        cursor += 4;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    };
    let n_layers = next_u32("header")?;
    let units = next_u32("header")?;
    let input_dim = next_u32("header")?;
    let n_classes = next_u32("header")?;
    let n_tensors = next_u32("header")?;
    if n_layers == 0 || units == 0 || input_dim == 0 || n_classes == 0 {
        return Err(ModelError::ShapeMismatch("zero-sized dimension".into()));
    }

    let mut model = GruModel::empty(n_layers, units, input_dim, n_classes);
    let expected = model.shape_table();
    if n_tensors != expected.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "expected {} tensors, header lists {n_tensors}",
            expected.len()
        )));
    }
    for (i, &(er, ec)) in expected.iter().enumerate() {
        let r = next_u32("shape table")?;
        let c = next_u32("shape table")?;
        if (r, c) != (er, ec) {
            return Err(ModelError::ShapeMismatch(format!(
                "tensor {i}: expected {er}x{ec}, found {r}x{c}"
            )));
        }
    }

    let total: usize = expected.iter().map(|(r, c)| r * c).sum();
    let payload = &bytes[cursor..];
    if payload.len() != total * 4 {
        return Err(ModelError::ShapeMismatch(format!(
            "expected {} payload bytes, found {}",
            total * 4,
            payload.len()
        )));
    }
    let mut values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    for (i, t) in model.tensors_mut().into_iter().enumerate() {
        for slot in t.iter_mut() {
            let v = values.next().expect("payload length checked");
            if !v.is_finite() {
                return Err(ModelError::NonFiniteWeight { tensor: i });
            }
            *slot = v as f64;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cell_halves_state() {
        let cell = GruCell::zeros(3, 4);
        let h = [0.4, -1.0, 2.0, 0.0];
        let out = gru_cell(&[1.0, 2.0, 3.0], &h, &cell).unwrap();
        for (o, p) in out.iter().zip(h) {
            assert!((o - 0.5 * p).abs() < 1e-15);
        }
    }

    #[test]
    fn saturated_update_gate_selects_candidate() {
        let mut cell = GruCell::zeros(2, 3);
        cell.b_z = vec![1e3; 3];
        let out = gru_cell(&[0.3, 0.2], &[5.0, -3.0, 1.0], &cell).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn cell_dimension_check() {
        let cell = GruCell::zeros(2, 3);
        assert!(matches!(
            gru_cell(&[1.0], &[0.0; 3], &cell),
            Err(ModelError::DimensionMismatch(_))
        ));
        assert!(matches!(
            gru_cell(&[1.0, 1.0], &[0.0; 2], &cell),
            Err(ModelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn zero_model_is_uniform() {
        let model = GruModel::zeros(2, 8, 26, N_CLASSES);
        let out = model.forward(&vec![vec![0.3; 26]; 4]).unwrap();
        for row in out {
            for p in row {
                assert!((p - 1.0 / 45.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn paper_scale_parameter_count() {
        let model = GruModel::zeros(7, 128, 26, N_CLASSES);
        assert_eq!(model.parameter_count(), 1_904_685);
    }

    #[test]
    fn serialization_round_trip() {
        let model = GruModel::random(2, 8, 26, N_CLASSES, 0.5, 7);
        let back = parse_model(&model.to_bytes()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.id(), model.id());
    }

    #[test]
    fn parse_errors() {
        let bytes = GruModel::random(2, 8, 26, N_CLASSES, 0.5, 7).to_bytes();
        assert_eq!(parse_model(b"NOTAGRU!xxxx"), Err(ModelError::BadMagic));
        assert!(matches!(
            parse_model(&bytes[..bytes.len() - 3]),
            Err(ModelError::ShapeMismatch(_))
        ));
        assert!(matches!(
            parse_model(&bytes[..20]),
            Err(ModelError::ShapeMismatch(_))
        ));
        let mut nan = bytes.clone();
        let last = nan.len() - 4;
        nan[last..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            parse_model(&nan),
            Err(ModelError::NonFiniteWeight { .. })
        ));
        let mut wrong_shape = bytes.clone();
        // first shape-table entry rows
        wrong_shape[28..32].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            parse_model(&wrong_shape),
            Err(ModelError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn rejects_wrong_input_width() {
        let model = GruModel::zeros(1, 4, 26, N_CLASSES);
        assert!(matches!(
            model.forward(&[vec![0.0; 25]]),
            Err(ModelError::ModelDimensionError(_))
        ));
        let narrow = GruModel::zeros(1, 4, 26, 10);
        let feats = FeatureSequence {
            frames: vec![[0.0; 26]],
            frame_times_s: vec![0.0],
        };
        assert!(matches!(
            narrow.infer_posteriorgrams(&feats),
            Err(ModelError::ModelDimensionError(_))
        ));
    }

    #[test]
    fn softmax_is_stable() {
        let p = softmax(vec![1000.0, 1000.0, -1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && p[2] == 0.0);
    }
}
