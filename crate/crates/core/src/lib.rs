//! Link-level simulation of multi-way massive MIMO decode-and-forward relaying.
//!
//! `K` single-antenna users exchange one symbol each through a relay with
//! `M` antennas. After a single multiple-access slot (MRC at the relay), the
//! relay broadcasts. Two broadcast protocols are modelled:
//!
//! - **conventional**: `K - 1` broadcast slots; every user removes only its
//!   own symbol before detection.
//! - **proposed**: `t' = ceil((K-1)/2)` broadcast slots with successive
//!   cancelation of every symbol decoded so far, after which each user
//!   recovers the remaining `K - t' - 1` symbols by zero-forcing the
//!   residual system formed from its `t'` observations.
//!
//! The crate computes instantaneous SINRs ([`rates`]), closed-form bounds
//! and large-array limits ([`bounds`]), Monte Carlo ergodic rates and sum
//! spectral efficiency ([`montecarlo`]), and runs symbol-level rounds that
//! check the decoding chain ([`e2e`]). [`experiment`] turns those into CSV
//! tables; the `mwrelay` binary is a thin front end over it.
//!
//! ```
//! use mwrelay::prelude::*;
//!
//! let cfg = SystemConfig::from_db(100, 10, 0.0, 10.0).unwrap();
//! let beta = LargeScaleProfile::uniform(10);
//! let analytic = montecarlo::analytic_sum_se(&cfg, &beta, Scheme::Proposed).unwrap();
//! assert!(analytic.sum > 40.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod e2e;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod montecarlo;
pub mod protocol;
pub mod rates;
pub mod rng;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::bounds::{self, BoundReport};
    pub use crate::channel::{self, db_to_linear, ChannelRealization, GeometryModel, LargeScaleProfile, SystemConfig};
    pub use crate::e2e;
    pub use crate::error::{Error, Result};
    pub use crate::montecarlo::{self, McOptions, MonteCarloEstimate, ProfileSource, Scheme, SumSeReport};
    pub use crate::protocol::{partner_index, slot_count, SlotIndexer};
    pub use crate::rates::{self, Gram, ZfStage};
}
