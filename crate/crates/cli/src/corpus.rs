use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use trirank::slicerank::cmp_ratio;
use trirank::{parse_tensor, Field, Generator, Tensor3};

use crate::report::{RankReport, SummaryRow, SCHEMA};
use crate::{analyze, RunConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    /// Field for generator items without their own.
    #[serde(default = "default_field")]
    pub field: String,
    #[serde(default)]
    pub decompose: bool,
    #[serde(default, rename = "item")]
    pub items: Vec<CorpusItem>,
}

fn default_field() -> String {
    "3^1".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusItem {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub generator: Option<Generator>,
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub field: Option<String>,
}

impl CorpusItem {
    fn generated(g: Generator) -> CorpusItem {
        CorpusItem {
            id: None,
            generator: Some(g),
            file: None,
            field: None,
        }
    }

    fn label(&self, index: usize) -> String {
        if let Some(id) = &self.id {
            return id.clone();
        }
        if let Some(g) = &self.generator {
            return g.label();
        }
        if let Some(f) = &self.file {
            if let Some(stem) = f.file_stem() {
                return stem.to_string_lossy().into_owned();
            }
        }
        format!("item{index}")
    }

    fn load(&self, default_field: &str, base: &Path) -> Result<Tensor3, String> {
        match (&self.generator, &self.file) {
            (Some(g), None) => {
                let desig = self.field.as_deref().unwrap_or(default_field);
                let field = desig
                    .parse()
                    .and_then(Field::from_designation)
                    .map_err(|e| e.to_string())?;
                g.build(&field).map_err(|e| e.to_string())
            }
            (None, Some(path)) => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                let t = parse_tensor(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                match &self.field {
                    None => Ok(t),
                    Some(d) => {
                        let f = d.parse().and_then(Field::from_designation).map_err(|e| e.to_string())?;
                        t.lift(&f).map_err(|e| e.to_string())
                    }
                }
            }
            _ => Err("item needs exactly one of `generator` and `file`".into()),
        }
    }
}

/// Identity tensors `I_1..I_4`, Levi-Civita, its double and 50 random
/// `3 x 3 x 3` tensors, all over `F_3`.
pub fn builtin() -> CorpusSpec {
    let mut items: Vec<CorpusItem> = (1..=4).map(|n| CorpusItem::generated(Generator::Identity { n })).collect();
    items.push(CorpusItem::generated(Generator::LeviCivita));
    items.push(CorpusItem::generated(Generator::TkFamily { k: 2 }));
    items.extend((0..50).map(|seed| {
        CorpusItem::generated(Generator::Random {
            dims: [3, 3, 3],
            seed,
        })
    }));
    CorpusSpec {
        field: default_field(),
        decompose: false,
        items,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub schema: u32,
    pub items: usize,
    pub completed: usize,
    pub errored: usize,
    /// Items where some checked inequality failed.
    pub failed: usize,
    pub max_sr_gr: Option<String>,
    pub max_sr_gr_ids: Vec<String>,
    /// Smallest `SR / AR`, using the lower end of any SR interval.
    pub min_sr_ar: Option<f64>,
    pub min_sr_ar_id: Option<String>,
}

pub struct CorpusRun {
    pub reports: Vec<(String, Result<RankReport, String>)>,
    pub rows: Vec<SummaryRow>,
    pub summary: CorpusSummary,
}

pub fn run_corpus(spec: &CorpusSpec, base: &Path, cfg: &RunConfig, jobs: Option<usize>) -> CorpusRun {
    let work = || {
        spec.items
            .par_iter()
            .enumerate()
            .map(|(i, item)| {
                let id = item.label(i);
                log::info!("corpus item {i}: {id}");
                let seed = cfg.seed ^ i as u64;
                let res = item
                    .load(&spec.field, base)
                    .and_then(|t| analyze(&id, &t, cfg, seed, spec.decompose || cfg.decompose).map_err(|e| e.to_string()));
                (id, res)
            })
            .collect::<Vec<_>>()
    };
    let reports = match jobs.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(work),
        None => work(),
    };

    let mut rows = Vec::new();
    let mut max_ratio: Option<(u64, u64)> = None;
    let mut max_ids = Vec::new();
    let mut min_sr_ar: Option<(f64, String)> = None;
    let (mut completed, mut errored, mut failed) = (0, 0, 0);
    for (id, res) in &reports {
        match res {
            Err(e) => {
                errored += 1;
                rows.push(SummaryRow::errored(id, e));
            }
            Ok(r) => {
                completed += 1;
                if r.failed() {
                    failed += 1;
                }
                rows.push(SummaryRow::from_report(r));
                if let Some(ratio) = r.chain.ratio_sr_gr {
                    match max_ratio.map(|m| cmp_ratio(ratio, m)) {
                        None | Some(std::cmp::Ordering::Greater) => {
                            max_ratio = Some(ratio);
                            max_ids = vec![id.clone()];
                        }
                        Some(std::cmp::Ordering::Equal) => max_ids.push(id.clone()),
                        Some(std::cmp::Ordering::Less) => {}
                    }
                }
                let ar = r.chain.ar.value;
                if ar > 0.0 && ar.is_finite() {
                    let ratio = r.chain.sr.lo as f64 / ar;
                    if min_sr_ar.as_ref().is_none_or(|(m, _)| ratio < *m) {
                        min_sr_ar = Some((ratio, id.clone()));
                    }
                }
            }
        }
    }
    let summary = CorpusSummary {
        schema: SCHEMA,
        items: reports.len(),
        completed,
        errored,
        failed,
        max_sr_gr: max_ratio.map(|(a, b)| format!("{a}/{b}")),
        max_sr_gr_ids: max_ids,
        min_sr_ar: min_sr_ar.as_ref().map(|m| m.0),
        min_sr_ar_id: min_sr_ar.map(|m| m.1),
    };
    CorpusRun { reports, rows, summary }
}
