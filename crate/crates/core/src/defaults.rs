//! Default parameters shared by the library, the CLI, and the test suite.
//!
//! Everything tunable lives here so that runs, docs, and tests cite one
//! source of truth. Units are SI unless a name says otherwise.

/// Feature schema version embedded in dataset bundles, weight files, and
/// reports. Bump on any change to feature ordering or dimensionality.
pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Fluid and environment
// ---------------------------------------------------------------------------

/// Gravitational acceleration magnitude (m/s^2).
pub const GRAVITY: f64 = 9.81;

/// Dynamic viscosity of water at 20 C (Pa s), used by the Reynolds feature.
pub const WATER_VISCOSITY: f64 = 1.002e-3;

// ---------------------------------------------------------------------------
// Signed distance field
// ---------------------------------------------------------------------------

/// Bounding box expansion applied on every side before gridding (m).
pub const SDF_MARGIN: f64 = 0.5;

/// The longest expanded axis is divided into this many cells; the resulting
/// spacing is reused on the other axes so cells stay cubic.
pub const SDF_RESOLUTION: usize = 64;

/// Nodes with |value| below this many cell widths are flagged near-hull.
pub const SDF_NEAR_HULL_CELLS: f64 = 2.0;

// ---------------------------------------------------------------------------
// Surface sampling and submergence
// ---------------------------------------------------------------------------

/// Surface points drawn per patch for depth distributions. At this count the
/// submergence fraction resolves steps of about 0.05%.
pub const DEPTH_SAMPLES_PER_PATCH: usize = 2048;

/// Minimum sample count accepted by the patch sampler.
pub const DEPTH_SAMPLES_MIN: usize = 100;

/// Normal-degeneracy threshold: if the summed face normal of a patch has
/// magnitude below this, a +X fallback normal is used and flagged.
pub const PATCH_NORMAL_EPS: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// Global feature vector length.
pub const GLOBAL_DIM: usize = 12;

/// Per-surface feature vector length.
pub const SURFACE_DIM: usize = 15;

/// Depth-based Froude number is clipped to [0, this] so shallow water does
/// not blow up the feature scale.
pub const FROUDE_DEPTH_MAX: f64 = 10.0;

/// Reynolds feature scale: Re is multiplied by this to land near unit range.
pub const REYNOLDS_SCALE: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Campaign generation
// ---------------------------------------------------------------------------

/// Latin hypercube case count for a standard campaign.
pub const CAMPAIGN_CASES: usize = 175;

/// Simulated record length per case (s).
pub const CASE_DURATION: f64 = 4.0;

/// Sample spacing of generated case records (s).
pub const CASE_DT: f64 = 0.02;

/// Samples earlier than this are discarded as transient (s).
pub const TRANSIENT_CUTOFF: f64 = 2.0;

/// Number of averaging sections taken from the retained steady window.
pub const SECTION_COUNT: usize = 20;

/// Multiplicative noise sigma applied per force component by the synthetic
/// oracle, as a fraction of the component magnitude.
pub const ORACLE_NOISE_FRAC: f64 = 0.03;

/// Drag coefficient per semantic surface type used by the synthetic oracle,
/// in the one-hot vocabulary order (bottom, front, rear, side, wheel).
pub const ORACLE_DRAG_COEFF: [f64; 5] = [0.4, 1.1, 0.9, 0.7, 1.0];

/// Fraction of cases that land in the training split.
pub const TRAIN_FRACTION: f64 = 0.8;

/// Inclusive parameter ranges swept by a campaign.
#[derive(Debug, Clone, Copy)]
pub struct CampaignRanges {
    /// Speed magnitude (m/s).
    pub speed: (f64, f64),
    /// Heading relative to +X (degrees); positive only, lateral symmetry is
    /// recovered by augmentation.
    pub heading_deg: (f64, f64),
    /// Fluid density (kg/m^3), spanning water through dense slurries.
    pub density: (f64, f64),
    /// Quiescent water depth above the ground plane (m).
    pub depth: (f64, f64),
}

/// Campaign ranges for the small skid-steer class of vehicle.
pub const RANGES_MINI_HUSKY: CampaignRanges = CampaignRanges {
    speed: (0.2, 1.0),
    heading_deg: (30.0, 90.0),
    density: (1000.0, 1900.0),
    depth: (0.06, 0.20),
};

/// Campaign ranges for the larger UGV class of vehicle.
pub const RANGES_MINI_WARTHOG: CampaignRanges = CampaignRanges {
    speed: (0.5, 4.0),
    heading_deg: (30.0, 90.0),
    density: (1000.0, 1900.0),
    depth: (0.10, 0.40),
};

// ---------------------------------------------------------------------------
// Model and training
// ---------------------------------------------------------------------------

/// Width of both hidden layers.
pub const HIDDEN_WIDTH: usize = 256;

/// Training batch size (samples, each expanding to K surface rows).
pub const BATCH_SIZE: usize = 16;

/// Validation batch size.
pub const VAL_BATCH_SIZE: usize = 64;

/// Adam initial learning rate.
pub const LEARNING_RATE: f64 = 1e-3;

/// Adam moment decay rates.
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;

/// Adam denominator fuzz.
pub const ADAM_EPS: f64 = 1e-8;

/// Hybrid loss blend between plain and relative MSE.
pub const LOSS_ALPHA: f64 = 0.5;

/// Relative-error denominator floor (normalized target units).
pub const LOSS_REL_EPS: f64 = 0.01;

/// Weight of the net-force consistency term.
pub const LAMBDA_NET: f64 = 0.1;

/// Weight of the dry-surface suppression term.
pub const LAMBDA_PHYS: f64 = 0.5;

/// Reserved weight for a direct force-magnitude term. Kept at zero; the
/// config knob exists so sweeps can record it.
pub const LAMBDA_FORCE: f64 = 0.0;

/// Default epoch budget.
pub const EPOCHS: usize = 1000;

/// Plateau scheduler: learning rate multiplier on trigger.
pub const SCHED_FACTOR: f64 = 0.5;

/// Plateau scheduler: epochs without improvement before triggering.
pub const SCHED_PATIENCE: usize = 20;

/// Improvement below this margin counts as no improvement.
pub const SCHED_MIN_DELTA: f64 = 1e-8;

/// Surfaces with submergence fraction below this are treated as dry by the
/// suppression loss term.
pub const DRY_THRESHOLD: f64 = 0.01;

/// Standard-deviation floor applied when fitting normalization stats.
pub const SIGMA_FLOOR: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Symmetric MAPE denominator floor (N); keeps near-zero forces from
/// dominating the percentage.
pub const SMAPE_FLOOR: f64 = 1.0;

// ---------------------------------------------------------------------------
// Trial validation
// ---------------------------------------------------------------------------

/// Fresh-water density assumed for trial predictions (kg/m^3).
pub const WATER_DENSITY: f64 = 1000.0;

/// Uniform resampling rate for tracked trajectories (Hz).
pub const RESAMPLE_HZ: f64 = 111.0;

/// Savitzky-Golay differentiation window (samples, odd).
pub const SG_WINDOW: usize = 9;

/// Savitzky-Golay polynomial order.
pub const SG_POLYORDER: usize = 2;

/// Marker-to-COM lever arm in the vehicle frame (m).
pub const COM_OFFSET: [f64; 3] = [0.2, 0.0, -0.63];

/// Input gaps larger than this many median periods abort resampling.
pub const GAP_FACTOR: f64 = 5.0;

/// Minimum planar-section duration (s).
pub const SECTION_MIN_DURATION: f64 = 0.2;

/// Maximum |vertical velocity| inside a planar section (m/s).
pub const SECTION_VZ_LIMIT: f64 = 0.05;

/// Speed-matching tolerance for cross-depth pairs (m/s).
pub const PAIR_SPEED_TOL: f64 = 0.3;

/// Minimum section speed considered for pairing (m/s).
pub const PAIR_MIN_SPEED: f64 = 0.6;

/// Goodness-of-fit threshold used by validation pass/fail summaries.
pub const R2_THRESHOLD: f64 = 0.97;

/// Synthetic trial depths per vehicle class (m). Chosen inside each
/// campaign's depth range, toward the top where hydrostatic force is
/// closest to linear in depth.
pub const VALIDATION_DEPTHS_MINI_HUSKY: [f64; 3] = [0.12, 0.16, 0.20];
pub const VALIDATION_DEPTHS_MINI_WARTHOG: [f64; 3] = [0.24, 0.32, 0.40];

/// Synthetic trial speed spans per vehicle class (m/s), interior to each
/// campaign's speed range.
pub const VALIDATION_SPEEDS_MINI_HUSKY: (f64, f64) = (0.3, 0.95);
pub const VALIDATION_SPEEDS_MINI_WARTHOG: (f64, f64) = (0.6, 3.0);

/// Speeds per depth in a synthetic trial campaign.
pub const VALIDATION_SPEED_COUNT: usize = 19;

// ---------------------------------------------------------------------------
// Latency benchmark
// ---------------------------------------------------------------------------

/// Warm-up iterations excluded from statistics.
pub const BENCH_WARMUP: usize = 100;

/// Minimum timed iterations for the single-sample benchmark.
pub const BENCH_MIN_ITERS: usize = 1000;

/// Duration of the sustained-throughput run (s).
pub const BENCH_SUSTAINED_SECS: f64 = 10.0;

/// Sustained throughput floor (samples/s).
pub const BENCH_TARGET_HZ: f64 = 500.0;

/// Single-sample median latency bound (ms).
pub const BENCH_MEDIAN_BOUND_MS: f64 = 5.0;

/// Timer granularity above this is reported as an error (s).
pub const BENCH_MAX_TIMER_RESOLUTION: f64 = 10e-6;
