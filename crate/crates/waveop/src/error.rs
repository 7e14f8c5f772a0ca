use thiserror::Error;

/// Error type shared by all pipelines.
#[derive(Debug, Error)]
pub enum WaveopError {
    #[error("grid spacing {spacing} does not resolve potential width {width} (need spacing <= width)")]
    UnresolvedPotential { spacing: f64, width: f64 },

    #[error("field tail outside the trusted region carries {fraction:.3e} of the L2 mass (limit {limit:.3e})")]
    TailTooLarge { fraction: f64, limit: f64 },

    #[error("unsupported sphere rule order {0}")]
    UnsupportedOrder(usize),

    #[error("kernel evaluated at coincident points")]
    SingularPoint,

    #[error("frequency {lambda} not resolvable on grid with spacing {spacing} (need lambda*spacing <= pi/2)")]
    UnresolvedFrequency { lambda: f64, spacing: f64 },

    #[error("I + R0(z)V is numerically singular at lambda={lambda}, eps={epsilon} (condition {condition:.3e})")]
    NearSingular {
        lambda: f64,
        epsilon: f64,
        condition: f64,
    },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("s-quadrature cannot resolve the oscillation: r_max*ds = {product:.3e} exceeds pi/2")]
    UnresolvedOscillation { product: f64 },

    #[error("zero energy is not regular for this potential")]
    NotRegular,

    #[error("Born series does not contract (fitted ratio {ratio:.3})")]
    BornDivergent { ratio: f64 },

    #[error("1 + f_hat vanishes (min modulus {min_modulus:.3e})")]
    NotInvertible { min_modulus: f64 },

    #[error("Neumann series did not converge within {cap} terms (last increment {increment:.3e})")]
    NoConvergence { cap: usize, increment: f64 },

    #[error("local patch contraction unsatisfiable at minimum patch radius {eps_min:.3e}")]
    PatchFailure { eps_min: f64 },

    #[error("time step {dt} too large for grid (need dt*eta_max^2 <= 0.5, have {product:.3})")]
    StepTooLarge { dt: f64, product: f64 },

    #[error("free wave wraps around the box before the damped integrand is negligible (tail {tail:.3e} at t_max)")]
    WrapAround { tail: f64 },

    #[error("gamma must lie in (0, 1/2], got {0}")]
    DomainError(f64),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl WaveopError {
    /// Stable machine-readable code for CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            WaveopError::UnresolvedPotential { .. } => "UnresolvedPotential",
            WaveopError::TailTooLarge { .. } => "TailTooLarge",
            WaveopError::UnsupportedOrder(_) => "UnsupportedOrder",
            WaveopError::SingularPoint => "SingularPoint",
            WaveopError::UnresolvedFrequency { .. } => "UnresolvedFrequency",
            WaveopError::NearSingular { .. } => "NearSingular",
            WaveopError::GridMismatch => "GridMismatch",
            WaveopError::UnresolvedOscillation { .. } => "UnresolvedOscillation",
            WaveopError::NotRegular => "NotRegular",
            WaveopError::BornDivergent { .. } => "BornDivergent",
            WaveopError::NotInvertible { .. } => "NotInvertible",
            WaveopError::NoConvergence { .. } => "NoConvergence",
            WaveopError::PatchFailure { .. } => "PatchFailure",
            WaveopError::StepTooLarge { .. } => "StepTooLarge",
            WaveopError::WrapAround { .. } => "WrapAround",
            WaveopError::DomainError(_) => "DomainError",
            WaveopError::ConfigInvalid(_) => "ConfigInvalid",
            WaveopError::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, WaveopError>;
