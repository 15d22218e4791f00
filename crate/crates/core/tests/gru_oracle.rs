use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordverify::model::{load_model, BiGruLayer, GruCell, GruModel};
use wordverify::{FeatureSequence, N_CLASSES, N_FEATURES};

// Plain index loops, written against the update equations directly.
fn oracle_step(c: &GruCell, x: &[f64], h: &[f64]) -> Vec<f64> {
    let (n, d) = (c.units, c.input_dim);
    let mut z = vec![0.0; n];
    let mut r = vec![0.0; n];
    for k in 0..n {
        let mut az = c.b_z[k];
        let mut ar = c.b_r[k];
        for i in 0..d {
            az += c.w_z[k * d + i] * x[i];
            ar += c.w_r[k * d + i] * x[i];
        }
        for i in 0..n {
            az += c.u_z[k * n + i] * h[i];
            ar += c.u_r[k * n + i] * h[i];
        }
        z[k] = 1.0 / (1.0 + (-az).exp());
        r[k] = 1.0 / (1.0 + (-ar).exp());
    }
    let mut out = vec![0.0; n];
    for k in 0..n {
        let mut a = c.b_h[k];
        for i in 0..d {
            a += c.w_h[k * d + i] * x[i];
        }
        for i in 0..n {
            a += c.u_h[k * n + i] * r[i] * h[i];
        }
        out[k] = (1.0 - z[k]) * h[k] + z[k] * a.tanh();
    }
    out
}

fn oracle_forward(m: &GruModel, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let t = xs.len();
    let mut layer_in = xs.to_vec();
    for layer in &m.layers {
        let mut fwd = vec![vec![]; t];
        let mut h = vec![0.0; m.units];
        for s in 0..t {
            h = oracle_step(&layer.forward, &layer_in[s], &h);
            fwd[s] = h.clone();
        }
        let mut bwd = vec![vec![]; t];
        let mut h = vec![0.0; m.units];
        for s in (0..t).rev() {
            h = oracle_step(&layer.backward, &layer_in[s], &h);
            bwd[s] = h.clone();
        }
        layer_in = (0..t).map(|s| [fwd[s].clone(), bwd[s].clone()].concat()).collect();
    }
    let w = 2 * m.units;
    layer_in
        .iter()
        .map(|v| {
            let logits: Vec<f64> = (0..m.n_classes)
                .map(|c| m.out_b[c] + (0..w).map(|i| m.out_w[c * w + i] * v[i]).sum::<f64>())
                .collect();
            let max = logits.iter().cloned().fold(f64::MIN, f64::max);
            let e: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        })
        .collect()
}

fn random_inputs(rng: &mut ChaCha8Rng, t: usize, d: usize) -> Vec<Vec<f64>> {
    (0..t).map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect()
}

#[test]
fn matches_scalar_oracle() {
    let model = GruModel::random(2, 8, N_FEATURES, N_CLASSES, 0.5, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = rng.gen_range(1..25);
        let xs = random_inputs(&mut rng, t, N_FEATURES);
        let got = model.forward(&xs).unwrap();
        let want = oracle_forward(&model, &xs);
        for (g, w) in got.iter().zip(&want) {
            for (a, b) in g.iter().zip(w) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    assert!(worst <= 1e-6, "max abs diff {worst}");
}

fn swap_halves(m: &[f64], rows: usize, units: usize) -> Vec<f64> {
    let cols = 2 * units;
    let mut out = m.to_vec();
    for r in 0..rows {
        for i in 0..units {
            out[r * cols + i] = m[r * cols + units + i];
            out[r * cols + units + i] = m[r * cols + i];
        }
    }
    out
}

fn mirror(m: &GruModel) -> GruModel {
    let mut out = m.clone();
    for (l, layer) in m.layers.iter().enumerate() {
        let mut fwd = layer.backward.clone();
        let mut bwd = layer.forward.clone();
        if l > 0 {
            for c in [&mut fwd, &mut bwd] {
                c.w_z = swap_halves(&c.w_z, c.units, m.units);
                c.w_r = swap_halves(&c.w_r, c.units, m.units);
                c.w_h = swap_halves(&c.w_h, c.units, m.units);
            }
        }
        out.layers[l] = BiGruLayer { forward: fwd, backward: bwd };
    }
    out.out_w = swap_halves(&m.out_w, m.n_classes, m.units);
    out
}

#[test]
fn mirrored_model_on_reversed_input_gives_reversed_output() {
    let model = GruModel::random(3, 6, 5, 7, 0.8, 3);
    let mirrored = mirror(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let t = rng.gen_range(1..15);
        let xs = random_inputs(&mut rng, t, 5);
        let mut rev = xs.clone();
        rev.reverse();
        let a = model.forward(&xs).unwrap();
        let mut b = mirrored.forward(&rev).unwrap();
        b.reverse();
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_model_is_uniform_on_features() {
    let model = GruModel::zeros(2, 8, N_FEATURES, N_CLASSES);
    let feats = FeatureSequence {
        frames: vec![[0.3; N_FEATURES]; 12],
        frame_times_s: (0..12).map(|i| i as f64 * 0.01).collect(),
    };
    let pg = model.infer_posteriorgrams(&feats).unwrap();
    assert_eq!(pg.len(), 12);
    for row in &pg.frames {
        for &p in row {
            assert!((p - 1.0 / 45.0).abs() < 1e-6);
        }
    }
}

#[test]
fn bundled_tiny_model_is_stable() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/tiny_model.bin");
    let loaded = load_model(path).unwrap();
    assert_eq!(loaded, GruModel::random(2, 8, N_FEATURES, N_CLASSES, 0.5, 2024));
    // per direction 3(8*in + 8*8 + 8); inputs 26 then 16; head 45*16 + 45
    assert_eq!(loaded.parameter_count(), 2 * 840 + 2 * 600 + 765);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs = random_inputs(&mut rng, 10, N_FEATURES);
    let got = loaded.forward(&xs).unwrap();
    let want = oracle_forward(&loaded, &xs);
    for (a, b) in got.iter().flatten().zip(want.iter().flatten()) {
        assert!((a - b).abs() < 1e-9);
    }
}
