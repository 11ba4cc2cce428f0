//! Source/target dataset generation from a linear-Gaussian structural
//! causal model in which every context edge is scaled by an intervention
//! strength `gamma`: the context variable C1 shifts both the protected
//! attribute's base rate (C1 -> D) and the measurement X1 (C1 -> X1), so
//! `gamma` near zero yields matched domains and large `gamma` a strong
//! covariate/selection shift.
//!
//! Generated columns, in order: C1 (domain indicator), X1, X2 (features),
//! D (protected, ±1), Y (outcome, ±1).

use alloc::vec;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{Column, ColumnRole, Dataset};
use crate::logistic::sigmoid;
use crate::rng::row_rng;

/// Structural coefficients. `lambda1` (C1 -> D) and `lambda4` (C1 -> X1)
/// are fixed constants that set the shift magnitude scale; the rest are
/// drawn by [`sample_coefficients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScmCoefficients {
    /// C1 -> D, fixed.
    pub lambda1: f64,
    /// D -> Y.
    pub lambda2: f64,
    /// X2 -> Y.
    pub lambda3: f64,
    /// C1 -> X1, fixed.
    pub lambda4: f64,
    /// Y -> X1.
    pub lambda5: f64,
    /// D -> X1.
    pub lambda6: f64,
}

pub const LAMBDA1: f64 = 0.1;
pub const LAMBDA4: f64 = 0.8;
/// Noise scale of u1, u2, u3.
pub const NOISE_SD_123: f64 = 0.8;
/// Noise scale of u4 (the X1 equation).
pub const NOISE_SD_4: f64 = 1.4;

/// Draw the free coefficients: each of lambda2, lambda3, lambda5, lambda6
/// independently from N(0.8, 0.8²), sign-flipped with probability 1/2
/// (independent flips per coefficient). Draw order per coefficient is
/// sign-uniform then magnitude, in index order — part of the
/// reproducibility contract.
pub fn sample_coefficients(seed: u64) -> ScmCoefficients {
    let mut rng = row_rng(seed, 0);
    let base = Normal::new(0.8, 0.8).expect("valid scale");
    let mut draw = || {
        let flip: f64 = rng.random();
        let mag: f64 = base.sample(&mut rng);
        if flip < 0.5 {
            mag
        } else {
            -mag
        }
    };
    ScmCoefficients {
        lambda1: LAMBDA1,
        lambda2: draw(),
        lambda3: draw(),
        lambda4: LAMBDA4,
        lambda5: draw(),
        lambda6: draw(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScmConfig {
    pub coefficients: ScmCoefficients,
    /// Context-intervention strength; > 0.
    pub gamma: f64,
    /// Rows per generated domain; >= 1.
    pub n: usize,
    pub seed: u64,
}

/// Generate one domain at context value `c1` (0 = source, 1 = target).
///
/// Structural equations, per row:
///   D  = +1 with probability sigmoid(gamma*lambda1*c1 + u1), else -1
///   X2 = z + u2,  z ~ N(0,1)
///   Y  = +1 with probability sigmoid(lambda2*D + lambda3*X2 + u3), else -1
///   X1 = gamma*lambda4*c1 + lambda5*Y + lambda6*D + u4
/// with u1,u2,u3 ~ N(0, 0.8²) and u4 ~ N(0, 1.4²). The +1 level of D is
/// the group whose share grows with the intervention (the advantaged group
/// a); D = -1 is the disadvantaged group d, whose share falls from about
/// one half to about 0.3 at gamma = 10.
///
/// Each row has its own RNG substream; within a row the draw order is
/// u1, D-uniform, X2-base, u2, u3, Y-uniform, u4 (frozen for
/// reproducibility).
pub fn generate_domain(cfg: &ScmConfig, c1: f64) -> Dataset {
    assert!(cfg.gamma > 0.0, "gamma must be positive");
    assert!(cfg.n >= 1, "need at least one row");
    let co = &cfg.coefficients;
    let noise123 = Normal::new(0.0, NOISE_SD_123).expect("valid scale");
    let noise4 = Normal::new(0.0, NOISE_SD_4).expect("valid scale");

    let n = cfg.n;
    let mut x1 = vec![0.0; n];
    let mut x2 = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut rng = row_rng(cfg.seed, i as u64);
        let u1: f64 = noise123.sample(&mut rng);
        let du: f64 = rng.random();
        d[i] = if du < sigmoid(cfg.gamma * co.lambda1 * c1 + u1) { 1.0 } else { -1.0 };
        let z: f64 = rng.sample(StandardNormal);
        let u2: f64 = noise123.sample(&mut rng);
        x2[i] = z + u2;
        let u3: f64 = noise123.sample(&mut rng);
        let yu: f64 = rng.random();
        y[i] = if yu < sigmoid(co.lambda2 * d[i] + co.lambda3 * x2[i] + u3) { 1.0 } else { -1.0 };
        let u4: f64 = noise4.sample(&mut rng);
        x1[i] = cfg.gamma * co.lambda4 * c1 + co.lambda5 * y[i] + co.lambda6 * d[i] + u4;
    }

    Dataset::new(vec![
        Column::numeric("C1", ColumnRole::DomainIndicator, vec![c1; n]),
        Column::numeric("X1", ColumnRole::Feature, x1),
        Column::numeric("X2", ColumnRole::Feature, x2),
        Column::binary("D", ColumnRole::Protected, d),
        Column::binary("Y", ColumnRole::Outcome, y),
    ])
    .expect("generator schema is consistent")
}
