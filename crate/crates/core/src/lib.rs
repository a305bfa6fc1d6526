//! Aerial coverage and mobility simulation for UAVs served by terrestrial
//! cellular networks.
//!
//! The crate models sectorized antennas whose upward sidelobes scatter
//! coverage in the sky, computes best-server maps at any height, flies UAVs
//! through the network with measurement-report driven handover, and applies
//! the beyond-conic-section (BCS) filter that only lets mainlobe signals of
//! paired aerial-coverage cells attract a handover.
//!
//! Everything is deterministic. There is no randomness anywhere in the core.

pub mod antenna;
pub mod coverage;
pub mod error;
pub mod geometry;
pub mod handover;
pub mod mobility;
pub mod network;
pub mod propagation;
pub mod scenario;

pub use antenna::{AntennaConfig, AntennaModel, PatternPlane, SidelobeCone};
pub use coverage::{CoverageGrid, FragmentationReport, GridBounds};
pub use error::{Error, Result, ScenarioError};
pub use geometry::{ConicKind, ConicSection, FootprintIntervals, LobeCone, LobeId, LobeKind, Point3};
pub use handover::{DecisionReason, HandoverDecision, HandoverPolicy, MeasurementReport, Outcome, PolicyKind};
pub use mobility::{FlightTrace, MobilityMetrics, Trajectory, UeConfig};
pub use network::{
    AerialCoverageGroup, Cell, CellId, CellPair, CellRole, Network, PairReport, PairValidationConfig, PairViolation,
};
pub use propagation::LinkBudgetConfig;
pub use scenario::{parse_scenario, serialize_scenario, FlightRequest, GridFilter, GridRequest, Scenario};
