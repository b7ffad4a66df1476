//! The three reference applications: mixed-noise removal of hyperspectral cubes,
//! hyperspectral unmixing and graph signal recovery, with synthetic data and
//! task metrics.

pub mod data;
pub mod gsr;
pub mod metrics;
pub mod mnr;
pub mod unmix;

pub use data::{
    add_gaussian, add_salt_pepper, gen_abundances, gen_endmembers, gen_graph, gen_graph_signal, gen_hsi_phantom,
    gen_sampling_mask, gen_stripes,
};
pub use gsr::{build_gsr, gsr_data, gsr_metric, GsrConfig, GsrData};
pub use metrics::{mpsnr, psnr, snr};
pub use mnr::{build_mnr, mnr_data, mnr_metric, MnrConfig, MnrData};
pub use unmix::{build_unmix, unmix_data, unmix_metric, UnmixConfig, UnmixData};
