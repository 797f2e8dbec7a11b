//! Three-layer perceptron (inputs, one sigmoid hidden layer, one sigmoid
//! output) trained by backpropagation on squared error.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Range of the uniform weight initialization, `[-INIT_RANGE, INIT_RANGE]`.
pub const INIT_RANGE: f64 = 0.5;

/// Logistic function, kept strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    (1.0 / (1.0 + (-z).exp())).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perceptron {
    pub n_in: usize,
    pub n_hidden: usize,
    /// Row-major `n_hidden x (n_in + 1)`; the last column is the bias.
    pub weights1: Vec<f64>,
    /// `n_hidden + 1` output weights; the last entry is the bias.
    pub weights2: Vec<f64>,
}

/// Weight-shaped gradient of `0.5 * (output - target)^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub weights1: Vec<f64>,
    pub weights2: Vec<f64>,
}

impl Gradient {
    fn zeros_like(p: &Perceptron) -> Self {
        Self {
            weights1: vec![0.0; p.weights1.len()],
            weights2: vec![0.0; p.weights2.len()],
        }
    }

    fn add_scaled(&mut self, other: &Gradient, scale: f64) {
        for (a, b) in self.weights1.iter_mut().zip(&other.weights1) {
            *a += scale * b;
        }
        for (a, b) in self.weights2.iter_mut().zip(&other.weights2) {
            *a += scale * b;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// One update per sample, in a freshly shuffled order every epoch.
    Stochastic,
    /// One update per epoch with the mean gradient.
    FullBatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub target_mse: f64,
    pub seed: u64,
    pub mode: UpdateMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.9,
            max_epochs: 1000,
            target_mse: 1e-3,
            seed: 0,
            mode: UpdateMode::Stochastic,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must be in [0, 1)".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// One training example: inputs and a target in {0, 1}.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: f64,
}

impl Sample {
    pub fn new(input: Vec<f64>, target: f64) -> Self {
        Self { input, target }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub epochs: usize,
    /// Mean of `(output - target)^2` over the training set after the last
    /// epoch.
    pub mse: f64,
}

impl Perceptron {
    /// Uniform weights in `[-0.5, 0.5]` from a seeded generator.
    pub fn init(n_in: usize, n_hidden: usize, seed: u64) -> Self {
        assert!(n_in >= 1 && n_hidden >= 1, "perceptron needs at least one input and hidden unit");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
                .collect()
        };
        let weights1 = draw(n_hidden * (n_in + 1));
        let weights2 = draw(n_hidden + 1);
        Self {
            n_in,
            n_hidden,
            weights1,
            weights2,
        }
    }

    /// Checks weight-array shapes against the declared sizes.
    pub fn check_shape(&self) -> Result<()> {
        let expected1 = self.n_hidden * (self.n_in + 1);
        if self.n_in == 0 || self.n_hidden == 0 {
            return Err(Error::SchemaViolation("perceptron has an empty layer".into()));
        }
        if self.weights1.len() != expected1 {
            return Err(Error::DimensionMismatch {
                expected: expected1,
                got: self.weights1.len(),
            });
        }
        if self.weights2.len() != self.n_hidden + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n_hidden + 1,
                got: self.weights2.len(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights1.iter().chain(&self.weights2).all(|w| w.is_finite())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_in {
            return Err(Error::DimensionMismatch {
                expected: self.n_in,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        let stride = self.n_in + 1;
        self.weights1
            .chunks_exact(stride)
            .map(|w| {
                let z = w[..self.n_in].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[self.n_in];
                sigmoid(z)
            })
            .collect()
    }

    fn output(&self, hidden: &[f64]) -> f64 {
        let z = self.weights2[..self.n_hidden]
            .iter()
            .zip(hidden)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.weights2[self.n_hidden];
        sigmoid(z)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.output(&self.hidden(x)))
    }

    pub fn gradient(&self, x: &[f64], target: f64) -> Result<Gradient> {
        self.check_input(x)?;
        let hidden = self.hidden(x);
        let out = self.output(&hidden);
        let delta_out = (out - target) * out * (1.0 - out);

        let mut g = Gradient::zeros_like(self);
        for (j, &h) in hidden.iter().enumerate() {
            g.weights2[j] = delta_out * h;
        }
        g.weights2[self.n_hidden] = delta_out;

        let stride = self.n_in + 1;
        for (j, &h) in hidden.iter().enumerate() {
            let delta_h = delta_out * self.weights2[j] * h * (1.0 - h);
            let row = &mut g.weights1[j * stride..(j + 1) * stride];
            for (gw, &xi) in row.iter_mut().zip(x) {
                *gw = delta_h * xi;
            }
            row[self.n_in] = delta_h;
        }
        Ok(g)
    }

    pub fn mse(&self, samples: &[Sample]) -> Result<f64> {
        let mut total = 0.0;
        for s in samples {
            let e = self.forward(&s.input)? - s.target;
            total += e * e;
        }
        Ok(total / samples.len() as f64)
    }

    fn apply_step(&mut self, grad: &Gradient, velocity: &mut Gradient, cfg: &TrainConfig) {
        for ((w, v), g) in self
            .weights1
            .iter_mut()
            .zip(&mut velocity.weights1)
            .zip(&grad.weights1)
        {
            *v = cfg.momentum * *v - cfg.learning_rate * g;
            *w += *v;
        }
        for ((w, v), g) in self
            .weights2
            .iter_mut()
            .zip(&mut velocity.weights2)
            .zip(&grad.weights2)
        {
            *v = cfg.momentum * *v - cfg.learning_rate * g;
            *w += *v;
        }
    }

    /// Trains a copy of this network and returns it with the final epoch MSE.
    ///
    /// Stops after the first epoch whose training MSE is at or below
    /// `cfg.target_mse`, or after `cfg.max_epochs`.
    pub fn train(&self, samples: &[Sample], cfg: &TrainConfig) -> Result<(Perceptron, TrainOutcome)> {
        cfg.validate()?;
        if samples.is_empty() {
            return Err(Error::TooFewSamples { min: 1, got: 0 });
        }
        for s in samples {
            self.check_input(&s.input)?;
        }
        let mut net = self.clone();
        let mut velocity = Gradient::zeros_like(&net);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut mse = f64::NAN;
        let mut epochs = 0;
        for _ in 0..cfg.max_epochs {
            match cfg.mode {
                UpdateMode::Stochastic => {
                    order.shuffle(&mut rng);
                    for &i in &order {
                        let g = net.gradient(&samples[i].input, samples[i].target)?;
                        net.apply_step(&g, &mut velocity, cfg);
                    }
                }
                UpdateMode::FullBatch => {
                    let mut sum = Gradient::zeros_like(&net);
                    for s in samples {
                        sum.add_scaled(&net.gradient(&s.input, s.target)?, 1.0 / samples.len() as f64);
                    }
                    net.apply_step(&sum, &mut velocity, cfg);
                }
            }
            epochs += 1;
            mse = net.mse(samples)?;
            if !mse.is_finite() || !net.is_finite() {
                return Err(Error::NonFiniteLoss);
            }
            if mse <= cfg.target_mse {
                break;
            }
        }
        Ok((net, TrainOutcome { epochs, mse }))
    }
}
