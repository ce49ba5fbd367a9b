use std::fmt;
use std::str::FromStr;

use crate::error::{Result, VqError};
use crate::numerics::{gaussian_sample, Matrix, RngStream};

/// How codebook coefficients are drawn at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodebookInit {
    /// i.i.d. `N(0, 1)`.
    Gaussian,
    /// i.i.d. `U(-sqrt(3), sqrt(3))`, i.e. zero mean and unit variance.
    Uniform,
}

impl fmt::Display for CodebookInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodebookInit::Gaussian => "gaussian",
            CodebookInit::Uniform => "uniform",
        })
    }
}

impl FromStr for CodebookInit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(CodebookInit::Gaussian),
            "uniform" => Ok(CodebookInit::Uniform),
            other => Err(format!("unknown codebook init `{other}`")),
        }
    }
}

/// Coefficient matrix `C` (`K x d`).
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub coeffs: Matrix,
    pub frozen: bool,
    pub init: CodebookInit,
}

impl Codebook {
    pub fn new(coeffs: Matrix, frozen: bool, init: CodebookInit) -> Result<Self> {
        if coeffs.rows() == 0 || coeffs.cols() == 0 {
            return Err(VqError::InvalidArgument(format!(
                "codebook must be at least 1x1, got {}x{}",
                coeffs.rows(),
                coeffs.cols()
            )));
        }
        Ok(Self {
            coeffs,
            frozen,
            init,
        })
    }

    pub fn sample(
        rng: &mut RngStream,
        size: usize,
        dim: usize,
        init: CodebookInit,
        frozen: bool,
    ) -> Result<Self> {
        let coeffs = match init {
            CodebookInit::Gaussian => gaussian_sample(rng, size, dim, 0.0, 1.0)?,
            CodebookInit::Uniform => {
                let a = 3f64.sqrt();
                rng.uniform_matrix(size, dim, -a, a)
            }
        };
        Self::new(coeffs, frozen, init)
    }

    pub fn size(&self) -> usize {
        self.coeffs.rows()
    }

    pub fn dim(&self) -> usize {
        self.coeffs.cols()
    }
}

/// Square latent basis `W` (`d x d`). No bias.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentBasis {
    pub basis: Matrix,
}

impl LatentBasis {
    pub fn new(basis: Matrix) -> Result<Self> {
        if basis.rows() != basis.cols() {
            return Err(VqError::dims(
                "LatentBasis::new",
                format!(
                    "basis must be square, got {}x{}",
                    basis.rows(),
                    basis.cols()
                ),
            ));
        }
        Ok(Self { basis })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            basis: Matrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }
}
