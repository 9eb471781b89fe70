#![allow(dead_code)]

use std::sync::OnceLock;

use hiermod::capacity::IntegrationSpec;
use hiermod::thresholds::{build_modcod_table, shipped_references, ModCodTable, PUBLISHED_ALPHAS};

/// Modcod table built from the shipped references, shared by a test binary.
pub fn table() -> &'static ModCodTable {
    static TABLE: OnceLock<ModCodTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        build_modcod_table(
            &PUBLISHED_ALPHAS,
            &shipped_references(),
            0.0,
            &IntegrationSpec::default(),
        )
        .expect("table builds")
    })
}
