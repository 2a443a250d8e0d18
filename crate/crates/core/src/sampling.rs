//! Measurement emulation: Born-rule sampling under the general sampling law,
//! history dilation and norm-estimation perturbations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, invalid, Error, Result};
use crate::observables::{l2_norm, Amplitude};

fn ceil_tolerant(x: f64) -> f64 {
    (x - 1e-9 * x.abs()).ceil()
}

/// Repetition count `n = ceil(Var / ((1 - p) eps^2))` and its context.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub eps: f64,
    pub confidence: f64,
    pub variance: f64,
    pub n_samples: usize,
    /// Multiplicative factor (for example `n_L^4`), reported only.
    pub factor: Option<f64>,
    /// Decay factor of the history, reported only.
    pub decay: Option<f64>,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn new(eps: f64, confidence: f64, variance: f64, seed: u64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid("eps", format!("{eps} must be positive")));
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(invalid("confidence", format!("{confidence} outside (0, 1)")));
        }
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(invalid("variance", format!("{variance} must be finite and >= 0")));
        }
        let n = ceil_tolerant(variance / ((1.0 - confidence) * eps * eps)).max(1.0);
        Ok(Self {
            eps,
            confidence,
            variance,
            n_samples: n as usize,
            factor: None,
            decay: None,
            seed,
        })
    }

    pub fn with_factor(mut self, factor: f64) -> Self {
        self.factor = Some(factor);
        self
    }

    pub fn with_decay(mut self, decay: Option<f64>) -> Self {
        self.decay = decay;
        self
    }
}

/// Observables with a classically known eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// Diagonal in the computational basis, with the given eigenvalues.
    Diagonal(Vec<f64>),
    /// Projector onto the normalized direction of the given vector.
    RankOne(Vec<Complex64>),
}

impl Observable {
    /// Classify a dense Hermitian matrix as diagonal or a rank-one projector.
    pub fn from_matrix(m: &DMatrix<Complex64>, tol: f64) -> Result<Self> {
        let n = m.nrows();
        let off = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)].norm())
            .fold(0.0, f64::max);
        if off <= tol {
            return Ok(Observable::Diagonal((0..n).map(|k| m[(k, k)].re).collect()));
        }
        let (col, best) = (0..n)
            .map(|c| (c, m[(c, c)].re))
            .fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        if best > tol {
            let v: Vec<Complex64> = (0..n).map(|r| m[(r, col)] / best.sqrt()).collect();
            let rebuilt = DMatrix::from_fn(n, n, |r, c| v[r] * v[c].conj());
            let norm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if (m - &rebuilt).iter().all(|e| e.norm() <= tol) && (norm2 - 1.0).abs() <= tol.sqrt() {
                return Ok(Observable::RankOne(v));
            }
        }
        Err(Error::Unsupported(
            "sampling needs a diagonal or rank-one projector observable".into(),
        ))
    }

    /// Outcome values and Born probabilities for `state`.
    fn outcomes<T: Amplitude + Into<Complex64>>(&self, state: &[T]) -> Result<(Vec<f64>, Vec<f64>)> {
        let norm2: f64 = state.iter().map(|c| c.modulus_sqr()).sum();
        if norm2 == 0.0 {
            return Err(invalid("state", "zero state cannot be sampled"));
        }
        match self {
            Observable::Diagonal(values) => {
                check_len(state.len(), values.len())?;
                let probs = state.iter().map(|c| c.modulus_sqr() / norm2).collect();
                Ok((values.clone(), probs))
            }
            Observable::RankOne(g) => {
                check_len(state.len(), g.len())?;
                let gn2: f64 = g.iter().map(|c| c.norm_sqr()).sum();
                let overlap: Complex64 = g
                    .iter()
                    .zip(state)
                    .map(|(a, b)| a.conj() * (*b).into())
                    .sum();
                let p1 = (overlap.norm_sqr() / (gn2 * norm2)).clamp(0.0, 1.0);
                Ok((vec![0.0, 1.0], vec![1.0 - p1, p1]))
            }
        }
    }

    /// Exact expectation and variance in the normalized state.
    pub fn moments<T: Amplitude + Into<Complex64>>(&self, state: &[T]) -> Result<(f64, f64)> {
        let (values, probs) = self.outcomes(state)?;
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        let second: f64 = values.iter().zip(&probs).map(|(v, p)| v * v * p).sum();
        Ok((mean, (second - mean * mean).max(0.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOutcome {
    pub empirical_mean: f64,
    pub exact_mean: f64,
    pub variance: f64,
    pub n_used: usize,
}

/// Draw `plan.n_samples` Born outcomes of `observable` in `state`.
pub fn born_sample<T: Amplitude + Into<Complex64>>(
    state: &[T],
    observable: &Observable,
    plan: &SamplingPlan,
) -> Result<SampleOutcome> {
    let (values, probs) = observable.outcomes(state)?;
    let (exact_mean, variance) = observable.moments(state)?;
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::Internal(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let n = plan.n_samples;
    let total: f64 = (0..n).map(|_| values[dist.sample(&mut rng)]).sum();
    Ok(SampleOutcome {
        empirical_mean: total / n as f64,
        exact_mean,
        variance,
        n_used: n,
    })
}

/// Inner product magnitude `n_g n_psi sqrt(Upsilon)` from a projector estimate.
pub fn reconstruct_inner_product(n_g: f64, n_psi: f64, upsilon: f64) -> f64 {
    n_g * n_psi * upsilon.max(0.0).sqrt()
}

/// History padded with repeated copies of its final state.
#[derive(Debug, Clone, PartialEq)]
pub struct Dilation<T> {
    pub padded: Vec<Vec<T>>,
    /// Number of time steps `N_t`; the input history holds `N_t + 1` states.
    pub steps: usize,
    /// Squared norm of the whole padded history.
    pub total_norm_sqr: f64,
    /// Share of the squared norm carried by the final-state blocks.
    pub final_share: f64,
}

impl<T: Amplitude> Dilation<T> {
    pub fn final_blocks(&self) -> usize {
        self.steps + 1
    }

    /// Final-state quadratic form recovered from the normalized padded
    /// expectation restricted to the final blocks.
    pub fn rescale(&self, padded_expectation: f64) -> f64 {
        padded_expectation * self.total_norm_sqr / self.final_blocks() as f64
    }

    /// Normalized expectation of `diag(g)` on the final blocks of the padding.
    pub fn padded_expectation(&self, g: &[f64]) -> Result<f64> {
        let start = self.padded.len() - self.final_blocks();
        let mut total = 0.0;
        for block in &self.padded[start..] {
            check_len(g.len(), block.len())?;
            total += block.iter().zip(g).map(|(v, w)| w * v.modulus_sqr()).sum::<f64>();
        }
        Ok(total / self.total_norm_sqr)
    }
}

/// Append `N_t` copies of the final state to a history of `N_t + 1` states.
pub fn dilate_history<T: Amplitude + Clone>(history: &[Vec<T>]) -> Result<Dilation<T>> {
    let last = history
        .last()
        .ok_or_else(|| invalid("history", "history must be nonempty"))?;
    let steps = history.len() - 1;
    let mut padded = history.to_vec();
    padded.extend(std::iter::repeat_n(last.clone(), steps));
    let block_norm = |b: &Vec<T>| b.iter().map(|v| v.modulus_sqr()).sum::<f64>();
    let total_norm_sqr: f64 = padded.iter().map(block_norm).sum();
    let final_share = if total_norm_sqr > 0.0 {
        (steps + 1) as f64 * block_norm(last) / total_norm_sqr
    } else {
        0.0
    };
    Ok(Dilation {
        padded,
        steps,
        total_norm_sqr,
        final_share,
    })
}

/// Emulated output of a norm-estimation subroutine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub true_norm: f64,
    pub estimate: f64,
    pub eta: f64,
}

impl NormEstimate {
    pub fn relative_error(&self) -> f64 {
        if self.true_norm == 0.0 {
            0.0
        } else {
            (self.estimate - self.true_norm).abs() / self.true_norm
        }
    }

    /// Observable rescaled by the squared estimate relative to the true norm.
    pub fn perturb_observable(&self, exact: f64) -> f64 {
        if self.true_norm == 0.0 {
            exact
        } else {
            exact * (self.estimate / self.true_norm).powi(2)
        }
    }
}

/// `eta (2 + eta) |O|`.
pub fn norm_error_bound(eta: f64, observable: f64) -> f64 {
    eta * (2.0 + eta) * observable.abs()
}

/// `||x|| (1 + xi)` with `xi ~ U[-eta, eta]` drawn from `seed`.
pub fn emulate_norm_estimate<T: Amplitude>(x: &[T], eta: f64, seed: u64) -> Result<NormEstimate> {
    if !(0.0..1.0).contains(&eta) {
        return Err(invalid("eta", format!("{eta} outside [0, 1)")));
    }
    let true_norm = l2_norm(x);
    let xi = if eta == 0.0 {
        0.0
    } else {
        let u = Uniform::new_inclusive(-eta, eta).map_err(|e| Error::Internal(e.to_string()))?;
        u.sample(&mut ChaCha8Rng::seed_from_u64(seed))
    };
    Ok(NormEstimate {
        true_norm,
        estimate: true_norm * (1.0 + xi),
        eta,
    })
}
