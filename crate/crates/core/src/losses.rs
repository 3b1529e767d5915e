//! Training losses as pure functions of discriminator scores and image
//! batches.
//!
//! The adversarial terms are linear in the scores, `E[1 − D(·)]` and
//! `E[D(·)]`; scores are used as given with no clamping or log. Squared-L2
//! terms sum over all elements of an image and average over the batch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Discriminator outputs, one per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBatch(Vec<f64>);

impl ScoreBatch {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyBatch);
        }
        Ok(Self(scores))
    }

    pub fn scores(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// `mean(1 − s)`.
    pub fn mean_complement(&self) -> f64 {
        self.0.iter().map(|s| 1.0 - s).sum::<f64>() / self.0.len() as f64
    }
}

/// Equal-shape images.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBatch(Vec<Grid>);

impl ImageBatch {
    pub fn new(images: Vec<Grid>) -> Result<Self> {
        let first = images.first().ok_or(Error::EmptyBatch)?;
        if let Some(bad) = images.iter().find(|g| g.shape() != first.shape()) {
            return Err(Error::Shape(format!(
                "batch mixes {:?} and {:?}",
                first.shape(),
                bad.shape()
            )));
        }
        Ok(Self(images))
    }

    pub fn images(&self) -> &[Grid] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_gan: f64,
    pub lambda_cycle: f64,
}

impl LossWeights {
    pub fn new(lambda_gan: f64, lambda_cycle: f64) -> Result<Self> {
        if !(lambda_gan >= 0.0 && lambda_cycle >= 0.0) {
            return Err(Error::Invalid(format!(
                "loss weights must be non-negative, got ({lambda_gan}, {lambda_cycle})"
            )));
        }
        Ok(Self {
            lambda_gan,
            lambda_cycle,
        })
    }
}

impl Default for LossWeights {
    /// `λ_GAN = 1`, `λ_cycle = 5`.
    fn default() -> Self {
        Self {
            lambda_gan: 1.0,
            lambda_cycle: 5.0,
        }
    }
}

/// `E[1 − D(Ŷ)]`.
pub fn loss_g(fake: &ScoreBatch) -> f64 {
    fake.mean_complement()
}

/// `E[D(Ŷ)] + E[1 − D(Y)]`.
pub fn loss_d(fake: &ScoreBatch, real: &ScoreBatch) -> f64 {
    fake.mean() + real.mean_complement()
}

/// `‖a − b‖²` summed per image, averaged over the batch.
pub fn loss_recon(a: &ImageBatch, b: &ImageBatch) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "batch sizes {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    let mut total = 0.0;
    for (x, y) in a.images().iter().zip(b.images()) {
        x.check_same_shape(y)?;
        total += x
            .data()
            .iter()
            .zip(y.data())
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>();
    }
    Ok(total / a.len() as f64)
}

/// `‖X − E(Ŷ)‖²` with the same reduction as [`loss_recon`].
pub fn loss_cycle(x: &ImageBatch, emptied_fake: &ImageBatch) -> Result<f64> {
    loss_recon(x, emptied_fake)
}

/// Emptier pretraining loss `L_Gemp + L_Demp + L_recon` with
/// `L_Gemp = E[1 − D_emp(E(Y))]` and
/// `L_Demp = E[1 − D_emp(X)] + E[D_emp(E(Y))]`.
pub fn loss_emp(
    real_empty: &ScoreBatch,
    fake_empty: &ScoreBatch,
    x: &ImageBatch,
    emptied: &ImageBatch,
) -> Result<f64> {
    let g_emp = fake_empty.mean_complement();
    let d_emp = real_empty.mean_complement() + fake_empty.mean();
    Ok(g_emp + d_emp + loss_recon(x, emptied)?)
}

/// `λ_GAN·(L_G + L_D) + λ_cycle·L_cycle`.
pub fn loss_total(g: f64, d: f64, cycle: f64, w: &LossWeights) -> f64 {
    w.lambda_gan * (g + d) + w.lambda_cycle * cycle
}

/// Image as stored in a loss fixture.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

fn batch(images: &[FixtureImage]) -> Result<ImageBatch> {
    ImageBatch::new(
        images
            .iter()
            .map(|i| Grid::from_vec(i.width, i.height, i.channels, i.data.clone()))
            .collect::<Result<_>>()?,
    )
}

/// One loss evaluation in a fixture file.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "loss", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossInput {
    G {
        fake: Vec<f64>,
    },
    D {
        fake: Vec<f64>,
        real: Vec<f64>,
    },
    Recon {
        a: Vec<FixtureImage>,
        b: Vec<FixtureImage>,
    },
    Cycle {
        x: Vec<FixtureImage>,
        emptied: Vec<FixtureImage>,
    },
    Emp {
        real_scores: Vec<f64>,
        fake_scores: Vec<f64>,
        x: Vec<FixtureImage>,
        emptied: Vec<FixtureImage>,
    },
    Total {
        g: f64,
        d: f64,
        cycle: f64,
        #[serde(default)]
        weights: Option<LossWeights>,
    },
}

impl LossInput {
    pub fn evaluate(&self) -> Result<f64> {
        match self {
            LossInput::G { fake } => Ok(loss_g(&ScoreBatch::new(fake.clone())?)),
            LossInput::D { fake, real } => Ok(loss_d(
                &ScoreBatch::new(fake.clone())?,
                &ScoreBatch::new(real.clone())?,
            )),
            LossInput::Recon { a, b } => loss_recon(&batch(a)?, &batch(b)?),
            LossInput::Cycle { x, emptied } => loss_cycle(&batch(x)?, &batch(emptied)?),
            LossInput::Emp {
                real_scores,
                fake_scores,
                x,
                emptied,
            } => loss_emp(
                &ScoreBatch::new(real_scores.clone())?,
                &ScoreBatch::new(fake_scores.clone())?,
                &batch(x)?,
                &batch(emptied)?,
            ),
            LossInput::Total {
                g,
                d,
                cycle,
                weights,
            } => {
                let w = match weights {
                    Some(w) => LossWeights::new(w.lambda_gan, w.lambda_cycle)?,
                    None => LossWeights::default(),
                };
                Ok(loss_total(*g, *d, *cycle, &w))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct FixtureCase {
    pub name: String,
    #[serde(flatten)]
    pub input: LossInput,
    #[serde(default)]
    pub expected: Option<f64>,
    #[serde(default)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LossFixture {
    pub cases: Vec<FixtureCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub value: f64,
    pub expected: Option<f64>,
    pub ok: bool,
}

impl LossFixture {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Evaluates every case; a case with an expected value passes when within
    /// its tolerance (exact by default).
    pub fn evaluate(&self) -> Result<Vec<CaseResult>> {
        self.cases
            .iter()
            .map(|case| {
                let value = case.input.evaluate()?;
                let ok = case
                    .expected
                    .is_none_or(|e| (value - e).abs() <= case.tolerance);
                Ok(CaseResult {
                    name: case.name.clone(),
                    value,
                    expected: case.expected,
                    ok,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> ScoreBatch {
        ScoreBatch::new(v.to_vec()).unwrap()
    }

    fn images(v: &[&[f64]]) -> ImageBatch {
        ImageBatch::new(
            v.iter()
                .map(|d| Grid::from_vec(d.len(), 1, 1, d.to_vec()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn generator_loss() {
        assert_eq!(loss_g(&scores(&[1.0, 1.0, 1.0])), 0.0);
        assert_eq!(loss_g(&scores(&[0.0, 0.5, 1.0])), 0.5);
        assert!(ScoreBatch::new(vec![]).is_err());
    }

    #[test]
    fn discriminator_loss() {
        assert_eq!(loss_d(&scores(&[0.0, 0.0]), &scores(&[1.0])), 0.0);
        assert_eq!(loss_d(&scores(&[1.0]), &scores(&[0.0, 0.0])), 2.0);
    }

    #[test]
    fn reconstruction_losses() {
        let a = images(&[&[0.2, 0.4]]);
        assert_eq!(loss_recon(&a, &a).unwrap(), 0.0);
        assert_eq!(loss_recon(&images(&[&[0.0]]), &images(&[&[3.0]])).unwrap(), 9.0);
        let x = images(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let y = images(&[&[0.0, 0.0], &[1.0, 1.5]]);
        assert_eq!(loss_cycle(&x, &y).unwrap(), 0.25 / 2.0);
        assert!(loss_recon(&images(&[&[0.0]]), &images(&[&[0.0, 1.0]])).is_err());
        assert!(loss_recon(&x, &images(&[&[0.0, 0.0]])).is_err());
        assert!(ImageBatch::new(vec![Grid::zeros(1, 1, 1), Grid::zeros(2, 1, 1)]).is_err());
    }

    #[test]
    fn emptier_loss() {
        let same = images(&[&[0.3, 0.1]]);
        let v = loss_emp(&scores(&[0.5, 0.5]), &scores(&[0.5]), &same, &same).unwrap();
        assert_eq!(v, 1.5);
        let zero = images(&[&[0.0, 0.0]]);
        let v = loss_emp(&scores(&[1.0]), &scores(&[0.0]), &zero, &zero).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn total_loss() {
        let w = LossWeights::default();
        assert_eq!((w.lambda_gan, w.lambda_cycle), (1.0, 5.0));
        assert_eq!(loss_total(1.0, 1.0, 1.0, &w), 7.0);
        assert_eq!(loss_total(0.3, 0.9, 2.0, &LossWeights::new(0.0, 0.0).unwrap()), 0.0);
        assert!(LossWeights::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn fixture_cases() {
        let text = r#"{"cases":[
            {"name":"g","loss":"g","fake":[0,0.5,1],"expected":0.5},
            {"name":"total","loss":"total","g":1,"d":1,"cycle":1,"expected":7},
            {"name":"recon","loss":"recon",
             "a":[{"width":1,"height":1,"channels":1,"data":[0]}],
             "b":[{"width":1,"height":1,"channels":1,"data":[3]}],"expected":9},
            {"name":"wrong","loss":"d","fake":[1],"real":[0],"expected":1.5}
        ]}"#;
        let results = LossFixture::from_json(text).unwrap().evaluate().unwrap();
        assert_eq!(results.iter().filter(|r| r.ok).count(), 3);
        assert!(!results[3].ok);
        assert!(LossFixture::from_json(r#"{"cases":[{"name":"x","loss":"hinge"}]}"#).is_err());
    }
}
