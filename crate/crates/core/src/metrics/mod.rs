//! Metric tensors: closed forms, the Hübner engine, numeric Fisher
//! information and degeneracy detection.

pub mod closed;
pub mod degeneracy;
pub mod ffun;
pub mod fisher;
pub mod hubner;
pub mod tensor;

pub use closed::{
    aberaj_metric_q1, aberaj_volume_printed, bures_bloch_closed, bures_extended_closed,
    bures_extended_tangential, fisher_husimi_closed, fisher_husimi_extended_q1_closed,
    spin1_bures_closed, spin1_qext_tangential, AbeRajVariant,
};
pub use degeneracy::{degeneracy_scan, DegeneracyReport};
pub use ffun::{f_eval, FFunctionId};
pub use fisher::{fisher_block, fisher_numeric, FisherBlock};
pub use hubner::{
    bures_distance, hubner_metric, hubner_metric_richardson, BlochFamily, DensityFamily,
    EscortFamily, SpinOneEscortFamily, SpinOneFamily, DEFAULT_STEP,
    RICHARDSON_STEP,
};
pub use tensor::{volume_element, Coord, MetricTensor, VolumeElement, DEGENERACY_TOL};
