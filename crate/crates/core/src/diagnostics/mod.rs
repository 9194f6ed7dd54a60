//! Checks of the scheme's quantitative estimates: contraction, decay
//! inheritance, the Gaussian moment bound, the viscosity sweep,
//! incompressibility, the singularity and kink probes, the force term, the
//! arctan compactification and a manufactured solution.

mod blowup;
mod contraction;
mod force;
mod manufactured;
mod moment;

use std::io::Write;

use sha2::{Digest, Sha256};

pub use blowup::{blowup_indicator, kink_order_probe, ExponentFit, KinkReport, Refinement, BOUNDED_TOL, PROBE_CELLS};
pub use contraction::{
    contraction_ratios, decay_envelope_table, decay_growth_over_k, divergence_growth, divergence_growth_pointwise, divergence_refinement_slope,
    incompressibility_residual, sup_ratios, viscosity_sweep, ContractionRatio, DecayRow, ViscositySweep, RATIO_GUARD,
};
pub use force::{compactified_derivative_ratio, compactify_field, force_term, CompactField, ForceTerm};
pub use manufactured::{all_sign_packs, ManufacturedCase, ManufacturedReport};
pub use moment::{measured_lipschitz, moment_bound_check, MomentCheck};

use crate::error::{Error, Result};

/// Hex SHA-256 of a canonical configuration text.
pub fn fingerprint(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// One named numeric table; `units` runs parallel to `columns`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.0.to_string()).collect(),
            units: columns.iter().map(|c| c.1.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV with a `# fingerprint=` line, a `# units:` line and the header.
    pub fn write_csv<W: Write>(&self, mut w: W, fingerprint: &str) -> std::io::Result<()> {
        writeln!(w, "# fingerprint={fingerprint}")?;
        writeln!(w, "# units: {}", self.units.join(","))?;
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Tables and pass/fail contracts of one experiment, tagged with the
/// fingerprint of the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub fingerprint: String,
    pub tables: Vec<Table>,
    pub contracts: Vec<Contract>,
}

impl DiagnosticsReport {
    pub fn new(fingerprint: String) -> Self {
        Self {
            fingerprint,
            ..Default::default()
        }
    }

    pub fn contract(&mut self, name: &str, passed: bool, detail: String) {
        self.contracts.push(Contract {
            name: name.into(),
            passed,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.contracts.iter().all(|c| c.passed)
    }

    /// Fails on the first non-finite table entry.
    pub fn validate(&self) -> Result<()> {
        for t in &self.tables {
            if let Some(row) = t.rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
                return Err(Error::Format(format!("non-finite entry in table {} row {row}", t.name)));
            }
        }
        Ok(())
    }

    /// Plain-text summary, one line per contract.
    pub fn summary(&self) -> String {
        let mut s = format!("fingerprint {}\n", self.fingerprint);
        for c in &self.contracts {
            s.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        s
    }
}
