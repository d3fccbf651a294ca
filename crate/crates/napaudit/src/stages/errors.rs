use std::path::Path;

use napaudit_core::probe::{error_table, ErrorRecord};
use napaudit_core::{Schema, Variable};

use super::ingest::load_groups;
use super::probe::{dataset, load_model};
use super::{CsvOut, Pipeline};
use crate::error::Result;

pub const HEADER: [&str; 8] = [
    "race",
    "age",
    "gender",
    "pred_race",
    "pred_age",
    "pred_gender",
    "differing",
    "error_rate_pct",
];

pub fn write_error_csv(records: &[ErrorRecord], schema: &Schema, path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, &HEADER)?;
    for r in records {
        let mut row: Vec<String> = Vec::with_capacity(8);
        for key in [r.label, r.prediction] {
            row.extend(Variable::ALL.iter().map(|&v| schema.label(v, key.get(v)).to_string()));
        }
        row.push(r.differing.iter().map(|v| v.name()).collect::<Vec<_>>().join("+"));
        row.push(format!("{:.2}", r.error_rate_pct));
        out.row(&row)?;
    }
    out.finish()
}

pub(super) fn run(p: &Pipeline, dir: &Path) -> Result<()> {
    let cfg = p.cfg();
    let split = cfg.error_split()?;
    let assignment = load_groups(p)?.assignment()?;
    for layer in p.selected_layers()? {
        let model = load_model(p, &layer)?;
        let pd = dataset(p, &layer, &assignment)?;
        if model.dim != pd.dim || model.classes != pd.num_classes {
            return Err(crate::error::AuditError::Validation(format!(
                "saved probe for {} does not match its data; rerun `napaudit probe --force`",
                layer.dir_name()
            )));
        }
        let records = error_table(&model, &pd, split, assignment.schema(), cfg.probe.top_k);
        write_error_csv(
            &records,
            assignment.schema(),
            &dir.join(format!("{}.csv", layer.dir_name())),
        )?;
    }
    Ok(())
}
