//! Discretized GSBV^p functions on uniform grids and the concentration
//! compactness machinery in their range: exact concentration profiles,
//! bubble extraction, domain partitions, renormalization and the numerical
//! checks of the compactness conclusions.

pub mod analysis;
pub mod bubbles;
pub mod concentration;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod io;
pub mod partition;
pub mod report;

pub use analysis::{
    compactness_report, lsc_report, vanishing_certificate, SequenceParams, SequenceReport,
    SliceLscReport, VanishingCertificate,
};
pub use bubbles::{
    classify, extract_bubbles, track_sequence, Bubble, BubbleDecomposition, BubbleTracks,
    ExtractionParams, TrichotomyKind, TrichotomyVerdict,
};
pub use concentration::{concentration_profile, ConcentrationProfile, LevyMax};
pub use error::{Error, Result};
pub use grid::{
    boundary_outside_jump, energy, kyfan_distance, level_set, CellSet, EnergyReport, Face, FaceId,
    GridFunction, GridGeometry,
};
pub use io::{LoadedManifest, Manifest};
pub use partition::{
    build_partition, reduce_by_datum, renormalize, select_radii, CellLabel, DomainPartition,
    RadiusChoice, RadiusParams, Renormalized,
};
pub use report::Inequality;
