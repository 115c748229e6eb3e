//! Desk-scale ablations: fusion variant parameter counts and the MRB
//! rows x columns sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mirnet_core::blocks::{count_parameters, fusion_parameter_count, FusionKind, Mirnet, ParamStore};
use mirnet_core::data::ImageBuffer;
use mirnet_core::metrics::Psnr;

use crate::config::RunConfig;
use crate::eval::{evaluate, EvalReport};
use crate::failure::{Failure, Result};
use crate::infer::Model;
use crate::manifest::{load_images, read_manifest};
use crate::train::{train_images, write_config, TrainFaults};

/// Reference width and branch count for the fusion comparison.
pub const FUSION_CHANNELS: usize = 64;
pub const FUSION_BRANCHES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Aggregation,
    Layout,
}

impl Which {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "aggregation" => Some(Which::Aggregation),
            "layout" => Some(Which::Layout),
            _ => None,
        }
    }
}

/// Training and held-out images for the toy task.
pub struct ToyData {
    pub train: Vec<ImageBuffer>,
    pub test_names: Vec<String>,
    pub test: Vec<ImageBuffer>,
}

impl ToyData {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let train = RunConfig::require_manifest(None, &cfg.data.manifest, "data.manifest")?;
        let test = RunConfig::require_manifest(None, &cfg.eval.manifest, "eval.manifest")?;
        let test_entries = read_manifest(&test)?;
        Ok(ToyData {
            train: load_images(&read_manifest(&train)?)?,
            test: load_images(&test_entries)?,
            test_names: test_entries.into_iter().map(|e| e.name).collect(),
        })
    }
}

/// Trains `cfg` on the toy data in memory and evaluates the held-out set.
pub fn train_and_evaluate(cfg: &RunConfig, data: &ToyData) -> Result<EvalReport> {
    let outcome = train_images(cfg, &data.train, None, TrainFaults::default())?;
    let model = Model::new(cfg, outcome.params)?;
    evaluate(cfg, &model, &data.test_names, &data.test)
}

fn network_parameters(cfg: &RunConfig) -> Result<usize> {
    let (_, store): (_, ParamStore<f32>) = Mirnet::build(&cfg.network, 0)?;
    Ok(count_parameters(&store).total)
}

#[derive(Clone, Debug)]
pub struct AggregationRow {
    pub fusion: FusionKind,
    /// One fusion module at the reference width and branch count.
    pub fusion_params: usize,
    /// The configured network with this fusion.
    pub network_params: usize,
    pub psnr: Option<Psnr>,
}

#[derive(Clone, Debug)]
pub struct Aggregation {
    pub rows: Vec<AggregationRow>,
}

impl Aggregation {
    pub fn count(&self, kind: FusionKind) -> usize {
        self.rows.iter().find(|r| r.fusion == kind).map_or(0, |r| r.fusion_params)
    }

    /// How many times more parameters concatenation needs than SKFF.
    pub fn concat_over_skff(&self) -> f64 {
        self.count(FusionKind::Concat) as f64 / self.count(FusionKind::Skff) as f64
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# fusion parameters at C={FUSION_CHANNELS}, {FUSION_BRANCHES} branches\n");
        out.push_str("fusion\tfusion_params\tnetwork_params\tpsnr_db\n");
        for r in &self.rows {
            let psnr = r.psnr.map_or_else(|| "-".to_string(), |p| p.to_string());
            writeln!(out, "{}\t{}\t{}\t{psnr}", r.fusion.name(), r.fusion_params, r.network_params).unwrap();
        }
        writeln!(out, "concat/skff\t{:.3}", self.concat_over_skff()).unwrap();
        out
    }
}

pub fn aggregation(cfg: &RunConfig, data: Option<&ToyData>) -> Result<Aggregation> {
    let mut rows = Vec::new();
    for fusion in [FusionKind::Sum, FusionKind::Concat, FusionKind::Skff] {
        let mut variant = cfg.clone();
        variant.network.fusion = fusion;
        let psnr = match data {
            Some(d) => Some(train_and_evaluate(&variant, d)?.restored.mean_psnr()),
            None => None,
        };
        rows.push(AggregationRow {
            fusion,
            fusion_params: fusion_parameter_count(fusion, FUSION_CHANNELS, FUSION_BRANCHES),
            network_params: network_parameters(&variant)?,
            psnr,
        });
    }
    Ok(Aggregation { rows })
}

#[derive(Clone, Debug)]
pub struct LayoutCell {
    pub rows: usize,
    pub cols: usize,
    pub params: usize,
    pub psnr: Psnr,
    pub baseline: Psnr,
}

#[derive(Clone, Debug)]
pub struct Layout {
    pub cells: Vec<LayoutCell>,
}

impl Layout {
    pub fn cell(&self, rows: usize, cols: usize) -> Option<&LayoutCell> {
        self.cells.iter().find(|c| c.rows == rows && c.cols == cols)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("rows\tcols\tparams\tpsnr_db\tnoisy_psnr_db\n");
        for c in &self.cells {
            writeln!(out, "{}\t{}\t{}\t{}\t{}", c.rows, c.cols, c.params, c.psnr, c.baseline).unwrap();
        }
        out
    }
}

pub const LAYOUT_GRID: [usize; 3] = [1, 2, 3];

/// Trains and scores one layout variant per `(rows, cols)` pair.
pub fn layout_cells(cfg: &RunConfig, data: &ToyData, grid: &[(usize, usize)]) -> Result<Layout> {
    let mut cells = Vec::new();
    for &(rows, cols) in grid {
        let mut variant = cfg.clone();
        variant.network.n_streams = rows;
        variant.network.n_columns = cols;
        variant.validate().map_err(|f| f.context(format!("rows={rows} cols={cols}")))?;
        let report = train_and_evaluate(&variant, data)?;
        cells.push(LayoutCell {
            rows,
            cols,
            params: network_parameters(&variant)?,
            psnr: report.restored.mean_psnr(),
            baseline: report.baseline.mean_psnr(),
        });
    }
    Ok(Layout { cells })
}

pub fn layout(cfg: &RunConfig, data: &ToyData) -> Result<Layout> {
    let grid: Vec<_> = LAYOUT_GRID.iter().flat_map(|&r| LAYOUT_GRID.iter().map(move |&c| (r, c))).collect();
    layout_cells(cfg, data, &grid)
}

/// Runs one ablation, writing the echoed config and the table into `out_dir`
/// when given. Returns the table text.
pub fn run(which: Which, cfg: &RunConfig, out_dir: Option<&Path>, train: bool) -> Result<String> {
    if let Some(dir) = out_dir {
        write_config(cfg, dir)?;
    }
    let (text, file) = match which {
        Which::Aggregation => {
            let data = if train { Some(ToyData::load(cfg)?) } else { None };
            (aggregation(cfg, data.as_ref())?.to_text(), "aggregation.tsv")
        }
        Which::Layout => (layout(cfg, &ToyData::load(cfg)?)?.to_text(), "layout.tsv"),
    };
    if let Some(dir) = out_dir {
        fs::write(dir.join(file), &text).map_err(|e| Failure::data(e.to_string()))?;
    }
    Ok(text)
}
