//! Artifact writers. CSV files have fixed column order with a header row;
//! JSON artifacts carry the effective configuration next to their payload.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use csh_core::functional::FiberSample;
use csh_core::mountainpass::{SolutionBundle, SweepRow};
use csh_core::verify::CheckResult;
use serde::Serialize;

use crate::config::RunConfig;

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `{"config": ..., <key>: <value>, ...}` as pretty JSON.
    pub fn json(&self, name: &str, config: &RunConfig, entries: Vec<(&str, serde_json::Value)>) -> anyhow::Result<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("config".into(), serde_json::to_value(config)?);
        for (key, value) in entries {
            doc.insert(key.into(), value);
        }
        let text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
        fs::write(self.path(name), text + "\n").with_context(|| format!("cannot write {name}"))
    }

    /// Echo of the effective configuration, so CSV-only runs can be repeated.
    pub fn config(&self, config: &RunConfig) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(config)?;
        fs::write(self.path("config.json"), text + "\n").context("cannot write config.json")
    }

    fn csv<R: Serialize>(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> anyhow::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(self.path(name))
            .with_context(|| format!("cannot write {name}"))?;
        w.write_record(header)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn profile(&self, b: &SolutionBundle) -> anyhow::Result<()> {
        let rows = (0..b.r.len()).map(|i| {
            (
                b.r[i],
                b.u.values()[i],
                b.n_field.values()[i],
                b.h.values()[i],
                b.a0.values()[i],
            )
        });
        self.csv("profile.csv", &["r", "u", "N", "h", "A0"], rows)
    }

    pub fn checks(&self, rows: &[CheckResult]) -> anyhow::Result<()> {
        let header = [
            "name",
            "trial",
            "passed",
            "measured",
            "bound_or_target",
            "tolerance",
            "anchor",
            "note",
        ];
        self.csv("checks.csv", &header, rows)
    }

    pub fn sweep(&self, rows: &[SweepRow]) -> anyhow::Result<()> {
        let header = [
            "e",
            "converged",
            "h1_norm",
            "norm_over_T",
            "k_t",
            "energy",
            "residual_u",
            "residual_n",
            "iterations",
        ];
        let rows = rows.iter().map(|r| {
            (
                r.e,
                r.converged,
                r.h1_norm,
                r.norm_over_t,
                r.k_t,
                r.energy,
                r.residual_u,
                r.residual_n,
                r.iterations,
            )
        });
        self.csv("sweep.csv", &header, rows)
    }

    pub fn fiber(&self, samples: &[FiberSample]) -> anyhow::Result<()> {
        let rows = samples.iter().map(|s| (s.t, s.value, s.t2_term, s.t4_term, s.t6_term));
        self.csv("fiber.csv", &["t", "J", "t2", "t4", "t6"], rows)
    }
}
