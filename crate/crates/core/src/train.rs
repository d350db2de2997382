//! Minibatch training of a small MLP classifier on a synthetic dataset with
//! any of the optimizers.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{stream_rng, ParamVector, Stream};
use crate::objectives::{make_blobs, make_two_moons, mlp_objective, Batch, Dataset, Mlp};
use crate::optim::{step, Hyper, OptimizerConfig, OptimizerKind, OptimizerState};

/// Offset between the training-set and test-set generator seeds.
pub const TEST_SEED_OFFSET: u64 = 1_000_003;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum DatasetSpec {
    TwoMoons { n: usize, noise: f64 },
    Blobs { n: usize, k: usize, spread: f64 },
}

impl DatasetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetSpec::TwoMoons { .. } => "two_moons",
            DatasetSpec::Blobs { .. } => "blobs",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            DatasetSpec::TwoMoons { n, .. } | DatasetSpec::Blobs { n, .. } => n,
        }
    }

    pub fn num_classes(&self) -> usize {
        match *self {
            DatasetSpec::TwoMoons { .. } => 2,
            DatasetSpec::Blobs { k, .. } => k,
        }
    }

    /// The same generator with a different size.
    pub fn with_n(&self, n: usize) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            DatasetSpec::TwoMoons { n: m, .. } | DatasetSpec::Blobs { n: m, .. } => *m = n,
        }
        spec
    }

    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        match *self {
            DatasetSpec::TwoMoons { n, noise } => make_two_moons(n, noise, seed),
            DatasetSpec::Blobs { n, k, spread } => make_blobs(n, k, spread, seed),
        }
    }
}

/// How epoch budgets compare across methods with different gradient costs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochParity {
    /// Equal gradient evaluations: one-backprop methods run twice the
    /// epochs, with the learning-rate schedule stretched to match.
    #[default]
    Flops,
    Equal,
}

impl fmt::Display for EpochParity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpochParity::Flops => "flops",
            EpochParity::Equal => "equal",
        })
    }
}

impl FromStr for EpochParity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flops" => Ok(EpochParity::Flops),
            "equal" => Ok(EpochParity::Equal),
            _ => Err(Error::InvalidConfig(format!("unknown epoch_parity {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub hyper: Hyper,
    pub dataset: DatasetSpec,
    pub n_test: usize,
    /// Hidden layer widths; input and output widths follow from the data.
    pub hidden: Vec<usize>,
    pub label_smoothing: f64,
    /// Budget of a two-backprop method.
    pub epochs: usize,
    pub batch_size: usize,
    pub epoch_parity: EpochParity,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Sgd,
            hyper: Hyper::default(),
            dataset: DatasetSpec::TwoMoons { n: 400, noise: 0.1 },
            n_test: 400,
            hidden: vec![32],
            label_smoothing: 0.1,
            epochs: 100,
            batch_size: 32,
            epoch_parity: EpochParity::Flops,
        }
    }
}

impl TrainConfig {
    /// Epochs this method actually runs.
    pub fn effective_epochs(&self) -> usize {
        self.epochs * self.epoch_multiplier()
    }

    fn epoch_multiplier(&self) -> usize {
        match self.epoch_parity {
            EpochParity::Flops if self.optimizer.backprops() == 1 => 2,
            _ => 1,
        }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![2];
        w.extend(&self.hidden);
        w.push(self.dataset.num_classes());
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub mean_sigma2: f64,
}

impl EpochMetrics {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,test_loss,test_acc,mean_sigma2";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.epoch, self.train_loss, self.train_acc, self.test_loss, self.test_acc, self.mean_sigma2
        )
    }
}

/// Owns the model, data and optimizer state; advances one epoch per call.
pub struct Trainer {
    config: TrainConfig,
    optimizer: OptimizerConfig,
    model: Mlp,
    test: Dataset,
    state: OptimizerState,
    epoch: usize,
    order: Vec<usize>,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        if config.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if config.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be positive".into()));
        }
        let seed = config.hyper.seed;
        let train = config.dataset.generate(seed)?;
        let test = config
            .dataset
            .with_n(config.n_test.max(1))
            .generate(seed.wrapping_add(TEST_SEED_OFFSET))?;
        let model = mlp_objective(&config.widths(), config.dataset.num_classes(), config.label_smoothing, train)?;
        let mut hyper = config.hyper.clone();
        hyper.n_train = config.dataset.n();
        if config.epoch_multiplier() > 1 {
            hyper.schedule = hyper.schedule.stretched(config.epoch_multiplier());
        }
        let p = model.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let optimizer = OptimizerConfig::preset(config.optimizer, &hyper, p)?;
        let mu = ParamVector::new(model.init_params(seed))?;
        let state = OptimizerState::new(mu, &optimizer)?;
        let order = (0..model.data().n).collect();
        Ok(Self {
            config,
            optimizer,
            model,
            test,
            state,
            epoch: 0,
            order,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn optimizer(&self) -> &OptimizerConfig {
        &self.optimizer
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    pub fn model(&self) -> &Mlp {
        &self.model
    }

    pub fn test_set(&self) -> &Dataset {
        &self.test
    }

    pub fn total_epochs(&self) -> usize {
        self.config.effective_epochs()
    }

    pub fn finished(&self) -> bool {
        self.epoch >= self.total_epochs()
    }

    pub fn run_epoch(&mut self) -> Result<EpochMetrics> {
        let epoch = self.epoch;
        let mut rng = stream_rng(self.state.seed, Stream::Shuffle(epoch as u64));
        self.order.sort_unstable();
        self.order.shuffle(&mut rng);
        for chunk in self.order.chunks(self.config.batch_size) {
            step(&mut self.state, &self.model, Batch::Indices(chunk), &self.optimizer, epoch)?;
        }
        self.epoch += 1;
        let (train_loss, train_acc) = self.model.evaluate(&self.state.mu, self.model.data());
        let (test_loss, test_acc) = self.model.evaluate(&self.state.mu, &self.test);
        Ok(EpochMetrics {
            epoch,
            train_loss,
            train_acc,
            test_loss,
            test_acc,
            mean_sigma2: self.state.mean_sigma2(),
        })
    }
}

/// Runs the full budget.
pub fn train(config: TrainConfig) -> Result<Vec<EpochMetrics>> {
    let mut trainer = Trainer::new(config)?;
    let mut out = Vec::with_capacity(trainer.total_epochs());
    while !trainer.finished() {
        out.push(trainer.run_epoch()?);
    }
    Ok(out)
}
