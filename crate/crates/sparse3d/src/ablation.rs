//! Ablation grid (descriptor kind x reconstruction weight) and the
//! sparsity sweep (one matched train/test point budget per run).

use crate::config::ExperimentConfig;
use crate::descriptor::DescriptorType;
use crate::error::Result;
use crate::evaluate::evaluate_classification;
use crate::train::run_training;

#[derive(Debug, Clone)]
pub struct AblationCell {
    pub kind: DescriptorType,
    pub lambda_rec: f64,
    pub accuracy: f64,
}

/// Train and evaluate one configuration.
pub fn train_and_score(config: &ExperimentConfig) -> Result<f64> {
    let mut outcome = run_training(config)?;
    let report = evaluate_classification(&mut outcome.net, &outcome.dataset, config)?;
    Ok(report.overall_accuracy)
}

/// One training+eval per (kind, lambda) cell, all from the same seed.
pub fn run_ablation(base: &ExperimentConfig) -> Result<Vec<AblationCell>> {
    let mut cells = Vec::with_capacity(8);
    for kind in DescriptorType::ALL {
        for lambda_rec in [0.0, 1.0] {
            let mut config = base.clone();
            config.kind = kind;
            config.lambda_rec = lambda_rec;
            let accuracy = train_and_score(&config)?;
            cells.push(AblationCell {
                kind,
                lambda_rec,
                accuracy,
            });
        }
    }
    Ok(cells)
}

pub fn ablation_csv(cells: &[AblationCell]) -> String {
    let mut out = String::from("kind,lambda_rec,accuracy\n");
    for cell in cells {
        out.push_str(&format!(
            "{},{},{:.6}\n",
            cell.kind.as_str(),
            cell.lambda_rec,
            cell.accuracy
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub k: usize,
    pub accuracy: f64,
}

/// Train and test one model per point budget (matched K, as in training
/// and testing with the same number of points).
pub fn sparsity_sweep(base: &ExperimentConfig, ks: &[usize]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut config = base.clone();
        config.k = k;
        let accuracy = train_and_score(&config)?;
        rows.push(SweepRow { k, accuracy });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("k,accuracy\n");
    for row in rows {
        out.push_str(&format!("{},{:.6}\n", row.k, row.accuracy));
    }
    out
}
