//! Run configuration and field serialization.

mod config;
mod export;

pub use config::{
    parse_config, CouplingConfig, CouplingFamily, DataConfig, ExportFormat, FieldSpec, GridConfig, HamiltonianConfig,
    LongtimeConfig, Mode, ModelConfig, OutputConfig, Preset, RunConfig, VerifyConfig, SCHEMA_VERSION,
};
pub use export::{
    decode_binary, export_field, export_flux, export_stationary, field_from_bytes, flux_from_bytes, import_binary,
    import_csv, import_field, import_flux, ExportSummary, FieldHeader, FieldKind, HEADER_BYTES, MAGIC,
};
