//! Plain-text export of a lowered program for external cross-checking.
//!
//! Format (`# swipt-conic v1`):
//!
//! ```text
//! vars <n>
//! objective_constant <c>
//! objective <nnz>          # lines: <var> <coeff>
//! cones <count>            # lines: nonneg <rows> | soc <dim> | psd <side>
//! matrix <rows> <nnz>      # lines: <row> <var> <coeff>   (A of  Ax + s = b)
//! rhs <rows>               # lines: <row> <value>
//! ```
//!
//! PSD cones are the real embeddings of the complex blocks: `side` is twice
//! the complex dimension and rows pack the scaled upper triangle.

use std::fmt::Write as _;
use std::path::Path;

use clarabel::solver::SupportedConeT;

use crate::error::Result;

use super::solve::lower;
use super::ConicProgram;

/// Render the lowered triplet form of a program.
pub fn dump_program(program: &ConicProgram) -> String {
    let lowered = lower(program);
    let mut out = String::new();
    let _ = writeln!(out, "# swipt-conic v1");
    let _ = writeln!(out, "vars {}", program.layout.total);
    let _ = writeln!(out, "objective_constant {:.17e}", program.objective_constant);
    let _ = writeln!(out, "objective {}", program.objective.len());
    for &(v, c) in &program.objective {
        let _ = writeln!(out, "{v} {c:.17e}");
    }
    let _ = writeln!(out, "cones {}", lowered.cones.len());
    for cone in &lowered.cones {
        match cone {
            SupportedConeT::NonnegativeConeT(n) => {
                let _ = writeln!(out, "nonneg {n}");
            }
            SupportedConeT::SecondOrderConeT(n) => {
                let _ = writeln!(out, "soc {n}");
            }
            SupportedConeT::PSDTriangleConeT(n) => {
                let _ = writeln!(out, "psd {n}");
            }
            _ => {
                let _ = writeln!(out, "other");
            }
        }
    }
    let nnz = lowered.a.nzval.len();
    let _ = writeln!(out, "matrix {} {}", lowered.b.len(), nnz);
    for col in 0..lowered.a.n {
        for idx in lowered.a.colptr[col]..lowered.a.colptr[col + 1] {
            let _ = writeln!(
                out,
                "{} {} {:.17e}",
                lowered.a.rowval[idx], col, lowered.a.nzval[idx]
            );
        }
    }
    let _ = writeln!(out, "rhs {}", lowered.b.len());
    for (row, v) in lowered.b.iter().enumerate() {
        let _ = writeln!(out, "{row} {v:.17e}");
    }
    out
}

/// Write [`dump_program`] output to a file.
pub fn write_program(program: &ConicProgram, path: &Path) -> Result<()> {
    std::fs::write(path, dump_program(program))?;
    Ok(())
}
