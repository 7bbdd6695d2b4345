use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabeledExample;
use crate::ingest::io::{read_to_string, write_file};
use crate::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Logistic,
    Softmax,
}

/// Fully connected layer; `weights` is row-major `outputs × inputs`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Mlp {
    pub version: u32,
    pub layers: Vec<Layer>,
}

impl Layer {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        match self.activation {
            Activation::Logistic => z.iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp())),
            Activation::Softmax => {
                let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                z.iter_mut().for_each(|v| *v = (*v - max).exp());
                let s: f64 = z.iter().sum();
                z.iter_mut().for_each(|v| *v /= s);
            }
        }
        z
    }
}

impl Mlp {
    /// Logistic hidden layers and a softmax output; Glorot-uniform weights,
    /// zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "a network needs an input and an output layer");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let r = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Layer {
                    inputs: w[0],
                    outputs: w[1],
                    activation: if i + 2 == sizes.len() {
                        Activation::Softmax
                    } else {
                        Activation::Logistic
                    },
                    weights: (0..w[0] * w[1]).map(|_| rng.gen_range(-r..r)).collect(),
                    biases: vec![0.0; w[1]],
                }
            })
            .collect();
        Self {
            version: MODEL_VERSION,
            layers,
        }
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().expect("validated network").outputs
    }

    /// Outputs of every layer, input included.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for l in &self.layers {
            let next = l.forward(acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().expect("non-empty")
    }

    /// Cross-entropy of the softmax output against a one-hot `target`.
    pub fn loss(&self, x: &[f64], target: &[f64]) -> f64 {
        let p = self.predict(x);
        -target
            .iter()
            .zip(&p)
            .filter(|(t, _)| **t > 0.0)
            .map(|(t, p)| t * p.max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
    }

    /// Backpropagated gradient of [`Mlp::loss`] for every layer.
    pub fn gradients(&self, x: &[f64], target: &[f64]) -> Vec<LayerGradient> {
        let acts = self.activations(x);
        let mut delta: Vec<f64> = acts
            .last()
            .expect("non-empty")
            .iter()
            .zip(target)
            .map(|(p, t)| p - t)
            .collect();
        let mut grads = Vec::with_capacity(self.layers.len());
        for (k, l) in self.layers.iter().enumerate().rev() {
            let input = &acts[k];
            let mut gw = vec![0.0; l.weights.len()];
            for o in 0..l.outputs {
                for i in 0..l.inputs {
                    gw[o * l.inputs + i] = delta[o] * input[i];
                }
            }
            grads.push(LayerGradient {
                weights: gw,
                biases: delta.clone(),
            });
            if k > 0 {
                delta = (0..l.inputs)
                    .map(|i| {
                        let back: f64 = (0..l.outputs).map(|o| l.weights[o * l.inputs + i] * delta[o]).sum();
                        back * input[i] * (1.0 - input[i])
                    })
                    .collect();
            }
        }
        grads.reverse();
        grads
    }

    fn apply(&mut self, grads: &[LayerGradient], lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(grads) {
            l.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= lr * d);
            l.biases.iter_mut().zip(&g.biases).for_each(|(b, d)| *b -= lr * d);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::format("classifier model", m));
        if self.version != MODEL_VERSION {
            return bad(format!("unsupported version {}, expected {MODEL_VERSION}", self.version));
        }
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        for (k, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return bad(format!("layer {k}: weight or bias count does not match {}x{}", l.outputs, l.inputs));
            }
            if k > 0 && self.layers[k - 1].outputs != l.inputs {
                return bad(format!("layer {k} expects {} inputs, previous layer gives {}", l.inputs, self.layers[k - 1].outputs));
            }
            let last = k + 1 == self.layers.len();
            if last != (l.activation == Activation::Softmax) {
                return bad(format!("layer {k}: softmax must be the output activation and only there"));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return bad(format!("layer {k} has non-finite parameters"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::format("classifier model", e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            epochs: 20,
            learning_rate: 0.01,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean per-example loss seen during each epoch.
    pub epoch_loss: Vec<f64>,
}

/// Per-example stochastic gradient descent on cross-entropy, visiting the
/// examples in a freshly shuffled order every epoch.
pub fn train(examples: &[LabeledExample], config: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    if examples.is_empty() {
        return Err(Error::invalid("cannot train the classifier on an empty dataset"));
    }
    if config.epochs == 0 {
        return Err(Error::invalid("training needs at least one epoch"));
    }
    let mut model = Mlp::new(&[4, config.hidden, 2], config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let x = examples[i].features.to_array();
            let t = examples[i].label.target();
            total += model.loss(&x, &t);
            let g = model.gradients(&x, &t);
            model.apply(&g, config.learning_rate);
        }
        epoch_loss.push(total / examples.len() as f64);
    }
    Ok((model, TrainReport { epoch_loss }))
}
