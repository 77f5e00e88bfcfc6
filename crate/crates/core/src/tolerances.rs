//! Numerical tolerances shared by every analysis routine.
//!
//! Defaults are the values the library is validated against. Tests may
//! construct a tighter [`Tolerances`] and pass it through the `*_with`
//! entry points.

/// Row sums of P must equal 1 within this.
pub const STOCHASTIC: f64 = 1e-12;

/// Input symmetry check for the symmetric eigensolver.
pub const SYMMETRY: f64 = 1e-10;

/// Jacobi stops once the off-diagonal Frobenius norm is below this times ‖M‖_F.
pub const JACOBI_OFF_DIAGONAL: f64 = 1e-12;

/// Maximum number of full cyclic sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative change between successive repeated-squaring estimates.
pub const RADIUS_RELATIVE: f64 = 1e-8;

/// Squaring cap for the spectral radius.
pub const RADIUS_MAX_SQUARINGS: usize = 60;

/// Half-width of the band around 1 classified as critical.
pub const CRITICAL_BAND: f64 = 1e-7;

/// Margin used by the mean-square classification.
pub const MEAN_SQUARE_MARGIN: f64 = 1e-9;

/// Slope threshold for the finite-horizon product diagnostics.
pub const PRODUCT_SLOPE: f64 = 1e-6;

/// Commutation check for the threshold hypotheses.
pub const COMMUTATION: f64 = 1e-10;

/// States beyond this magnitude abort a run as diverged.
pub const OVERFLOW_GUARD: f64 = 1e150;

/// Relative spread at which a non-exact run counts as having reached consensus.
pub const APPROXIMATE_CONSENSUS: f64 = 1e-12;

/// `|slope of log 𝓜(k)|` below this leaves a run undecided.
pub const TREND_SLOPE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub symmetry: f64,
    pub jacobi_off_diagonal: f64,
    pub jacobi_max_sweeps: usize,
    pub radius_relative: f64,
    pub radius_max_squarings: usize,
    pub critical_band: f64,
    pub mean_square_margin: f64,
    pub product_slope: f64,
    pub commutation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: SYMMETRY,
            jacobi_off_diagonal: JACOBI_OFF_DIAGONAL,
            jacobi_max_sweeps: JACOBI_MAX_SWEEPS,
            radius_relative: RADIUS_RELATIVE,
            radius_max_squarings: RADIUS_MAX_SQUARINGS,
            critical_band: CRITICAL_BAND,
            mean_square_margin: MEAN_SQUARE_MARGIN,
            product_slope: PRODUCT_SLOPE,
            commutation: COMMUTATION,
        }
    }
}
