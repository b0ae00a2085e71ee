//! Checks of the compactness conclusions: the vanishing-volume certificate,
//! slicing and jump lower semicontinuity, and the whole-sequence report.

pub mod compactness;
pub mod slicing;
pub mod vanishing;

pub use compactness::{compactness_report, SequenceParams, SequenceReport};
pub use slicing::{
    directional_jump_measure, jump_count_1d, lsc_report, slice, CellBox, SliceLscReport,
};
pub use vanishing::{vanishing_certificate, VanishingCertificate, ISOPERIMETRIC_2D};
