use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use polytope_metropolis::builtin;
use polytope_metropolis::chain::{birkhoff, birkhoff_center};
use polytope_metropolis::geometry::{AffineEmbedding, DirectionFamily, Polytope, SphereDensity};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub polytope: PolytopeSpec,
    pub family: FamilySpec,
    #[serde(default)]
    pub chain: Option<ChainSection>,
    #[serde(default)]
    pub spectral: Option<SpectralSection>,
    #[serde(default)]
    pub diagnostics: Option<DiagnosticsSection>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolytopeSpec {
    Square {},
    Triangle {},
    Cube {
        dim: usize,
    },
    Birkhoff {
        n: usize,
    },
    Custom {
        forms: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        #[serde(default)]
        embedding: Option<EmbeddingSpec>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DensitySpec {
    Uniform,
    Cos2,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Canonical {},
    Birkhoff {},
    Vectors {
        vectors: Vec<Vec<f64>>,
    },
    Angles {
        degrees: Vec<f64>,
    },
    Sphere {
        #[serde(default = "uniform")]
        density: DensitySpec,
        #[serde(default = "sixty_four")]
        quadrature: usize,
        #[serde(default)]
        bound: Option<f64>,
        #[serde(default)]
        witnesses: Option<Vec<Vec<f64>>>,
    },
}

fn uniform() -> DensitySpec {
    DensitySpec::Uniform
}

fn sixty_four() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub h: f64,
    pub steps: u64,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    /// Step scales, strictly decreasing.
    pub h: Vec<f64>,
    /// Grid spacing `s = h / divisor` unless `cell_size` is set.
    #[serde(default = "eight")]
    pub divisor: f64,
    #[serde(default)]
    pub cell_size: Option<f64>,
    #[serde(default = "twelve")]
    pub eigen_count: usize,
    /// Weyl window sizes.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// Known `ν₁`; otherwise computed from the Laplacian when
    /// `laplacian_cell_size` is set.
    #[serde(default)]
    pub nu1_reference: Option<f64>,
    #[serde(default)]
    pub laplacian_cell_size: Option<f64>,
    #[serde(default)]
    pub export_matrix: bool,
}

fn eight() -> f64 {
    8.0
}

fn twelve() -> usize {
    12
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum TvModeSpec {
    Exact,
    Empirical,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub h: f64,
    pub cell_size: f64,
    #[serde(default = "exact")]
    pub mode: TvModeSpec,
    pub start: Vec<f64>,
    #[serde(default = "six_hundred")]
    pub n_max: usize,
    /// Cell size of the histogram bins; defaults to `cell_size`.
    #[serde(default)]
    pub bin_size: Option<f64>,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default = "hundred_thousand")]
    pub replicas: usize,
    #[serde(default)]
    pub window: Option<(usize, usize)>,
}

fn exact() -> TvModeSpec {
    TvModeSpec::Exact
}

fn six_hundred() -> usize {
    600
}

fn hundred_thousand() -> usize {
    100_000
}

pub fn parse(text: &str) -> Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))
}

impl PolytopeSpec {
    pub fn build(&self) -> Result<Polytope> {
        Ok(match self {
            PolytopeSpec::Square {} => builtin::unit_square(),
            PolytopeSpec::Triangle {} => builtin::triangle(),
            PolytopeSpec::Cube { dim } => {
                if *dim == 0 {
                    bail!("cube dimension must be positive");
                }
                builtin::cube(*dim)
            }
            PolytopeSpec::Birkhoff { n } => birkhoff(*n)?.0,
            PolytopeSpec::Custom {
                forms,
                offsets,
                embedding,
            } => {
                let p = Polytope::new(forms.clone(), offsets.clone())?;
                match embedding {
                    Some(e) => p.with_embedding(AffineEmbedding {
                        matrix: e.matrix.clone(),
                        offset: e.offset.clone(),
                    })?,
                    None => p,
                }
            }
        })
    }

    pub fn is_triangle(&self) -> bool {
        matches!(self, PolytopeSpec::Triangle {})
    }

    /// Default chain start: the center for Birkhoff, the stored witness otherwise.
    pub fn default_start(&self, p: &Polytope) -> Vec<f64> {
        match self {
            PolytopeSpec::Birkhoff { n } => birkhoff_center(*n),
            _ => p.interior_point().to_vec(),
        }
    }
}

impl FamilySpec {
    pub fn build(&self, polytope: &PolytopeSpec, dim: usize) -> Result<DirectionFamily> {
        Ok(match self {
            FamilySpec::Canonical {} => builtin::canonical_family(dim),
            FamilySpec::Birkhoff {} => match polytope {
                PolytopeSpec::Birkhoff { n } => birkhoff(*n)?.1,
                _ => bail!("the birkhoff family needs the birkhoff polytope"),
            },
            FamilySpec::Vectors { vectors } => DirectionFamily::discrete(vectors.clone())?,
            FamilySpec::Angles { degrees } => {
                if dim != 2 {
                    bail!("angle families are planar, the polytope has dimension {dim}");
                }
                let fam = builtin::angle_family(degrees);
                DirectionFamily::discrete(fam.check_vectors().to_vec())?
            }
            FamilySpec::Sphere {
                density,
                quadrature,
                bound,
                witnesses,
            } => {
                let rho = match density {
                    DensitySpec::Uniform => SphereDensity::Uniform,
                    DensitySpec::Cos2 => SphereDensity::CosSquared,
                };
                let witnesses = match witnesses {
                    Some(w) => w.clone(),
                    None => builtin::canonical_family(dim).check_vectors().to_vec(),
                };
                DirectionFamily::continuous(dim, rho, *bound, *quadrature, witnesses)?
            }
        })
    }
}

pub struct Built {
    pub polytope: Polytope,
    pub family: DirectionFamily,
}

pub fn build(cfg: &ExperimentConfig) -> Result<Built> {
    let polytope = cfg.polytope.build().context("building the polytope")?;
    let family = cfg
        .family
        .build(&cfg.polytope, polytope.dim())
        .context("building the direction family")?;
    if family.dim() != polytope.dim() {
        bail!(
            "family dimension {} does not match polytope dimension {}",
            family.dim(),
            polytope.dim()
        );
    }
    Ok(Built { polytope, family })
}
