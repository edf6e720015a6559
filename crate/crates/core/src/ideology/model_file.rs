//! Text format for a fitted model:
//!
//! ```text
//! # segiso ca-model v1
//! dims=3
//! singular_values=0.61,0.33,0.2
//! mean=0.01
//! sd=0.82
//! orientation_sign=-1
//! training_rows=50000
//! elite_id,mass,std_1,std_2,std_3
//! e001,0.004,1.2,-0.3,0.8
//! ```
//!
//! Floats use shortest round-trip formatting, so reading a written model
//! gives back identical values.

use std::path::Path;

use nalgebra::DMatrix;

use super::CaModel;
use crate::error::{Error, Result};

pub const MODEL_HEADER: &str = "# segiso ca-model v1";

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn write_model(model: &CaModel) -> Vec<u8> {
    let d = model.dims();
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    out.push_str(&format!("dims={d}\n"));
    out.push_str(&format!("singular_values={}\n", join(&model.singular_values)));
    out.push_str(&format!("mean={}\n", model.mean));
    out.push_str(&format!("sd={}\n", model.sd));
    out.push_str(&format!("orientation_sign={}\n", model.orientation_sign));
    out.push_str(&format!("training_rows={}\n", model.training_rows));
    let header: Vec<String> = ["elite_id".to_string(), "mass".to_string()]
        .into_iter()
        .chain((1..=d).map(|k| format!("std_{k}")))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for (j, id) in model.col_ids.iter().enumerate() {
        let mut rec = vec![id.clone(), model.col_masses[j].to_string()];
        rec.extend((0..d).map(|k| model.std_col_coords[(j, k)].to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"));
    out.into_bytes()
}

pub fn read_model(path: &Path) -> Result<CaModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_model(&path.display().to_string(), &bytes)
}

pub fn parse_model(file: &str, bytes: &[u8]) -> Result<CaModel> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::schema(file, 1, "", "not valid UTF-8"))?;
    let mut lines = text.split_inclusive('\n');
    if lines.next().map(str::trim_end) != Some(MODEL_HEADER) {
        return Err(Error::schema(file, 1, "", format!("expected `{MODEL_HEADER}`")));
    }
    let keys = ["dims", "singular_values", "mean", "sd", "orientation_sign", "training_rows"];
    let mut values = Vec::with_capacity(keys.len());
    for (offset, key) in keys.iter().enumerate() {
        let line_no = offset as u64 + 2;
        let line = lines.next().unwrap_or("").trim_end();
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| Error::schema(file, line_no, *key, format!("expected `{key}=`")))?;
        values.push((line_no, *key, value.to_string()));
    }
    let num = |i: usize| -> Result<f64> {
        let (line, key, v) = &values[i];
        v.parse().map_err(|_| Error::schema(file, *line, *key, format!("bad number `{v}`")))
    };
    let dims: usize = values[0]
        .2
        .parse()
        .map_err(|_| Error::schema(file, 2, "dims", "bad integer"))?;
    let singular_values: Vec<f64> = values[1]
        .2
        .split(',')
        .map(|v| v.parse().map_err(|_| Error::schema(file, 3, "singular_values", format!("bad number `{v}`"))))
        .collect::<Result<_>>()?;
    if singular_values.len() != dims {
        return Err(Error::schema(file, 3, "singular_values", format!("expected {dims} values")));
    }
    let (mean, sd, orientation_sign) = (num(2)?, num(3)?, num(4)?);
    let training_rows: usize = values[5]
        .2
        .parse()
        .map_err(|_| Error::schema(file, 7, "training_rows", "bad integer"))?;

    let table_start: usize = text.split_inclusive('\n').take(keys.len() + 1).map(str::len).sum();
    let mut reader = csv::ReaderBuilder::new().from_reader(&bytes[table_start..]);
    let header_line = keys.len() as u64 + 2;
    let headers = reader
        .headers()
        .map_err(|e| Error::schema(file, header_line, "", e.to_string()))?
        .clone();
    if headers.len() != dims + 2 || &headers[0] != "elite_id" || &headers[1] != "mass" {
        return Err(Error::schema(file, header_line, "", "unexpected column header"));
    }
    let mut col_ids = Vec::new();
    let mut masses = Vec::new();
    let mut coords = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let line = header_line + 1 + r as u64;
        let rec = rec.map_err(|e| Error::schema(file, line, "", e.to_string()))?;
        if rec.len() != dims + 2 {
            return Err(Error::schema(file, line, "", "wrong field count"));
        }
        col_ids.push(rec[0].to_string());
        for (k, field) in rec.iter().enumerate().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::schema(file, line, &headers[k], format!("bad number `{field}`")))?;
            if k == 1 {
                masses.push(v);
            } else {
                coords.push(v);
            }
        }
    }
    let std_col_coords = DMatrix::from_row_slice(col_ids.len(), dims, &coords);
    CaModel::new(
        col_ids,
        masses,
        std_col_coords,
        singular_values,
        mean,
        sd,
        orientation_sign,
        training_rows,
    )
}
