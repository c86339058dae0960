//! CSV ingestion and plot-ready outputs.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::bounds::BoundResult;
use crate::error::{IcpError, Result};
use crate::invariance::EnvDataset;
use crate::subset::{check_m, full_bits};

/// A dataset read from CSV along with the original environment labels.
#[derive(Clone, Debug)]
pub struct LoadedData {
    pub data: EnvDataset,
    /// `env_labels[e - 1]` is the label mapped to environment `e`.
    pub env_labels: Vec<String>,
}

pub fn load_csv(path: impl AsRef<Path>, response: &str, env: &str) -> Result<LoadedData> {
    let file = std::fs::File::open(path)?;
    read_csv(file, response, env)
}

/// Reads a headed CSV. Every column other than `response` and `env` must be numeric.
pub fn read_csv<R: Read>(reader: R, response: &str, env: &str) -> Result<LoadedData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let find =
        |name: &str| header.iter().position(|h| h == name).ok_or_else(|| IcpError::MissingColumn(name.to_string()));
    let y_col = find(response)?;
    let e_col = find(env)?;
    if y_col == e_col {
        return Err(IcpError::Config("response and environment must be different columns".into()));
    }
    let pred_cols: Vec<usize> = (0..header.len()).filter(|&c| c != y_col && c != e_col).collect();
    if pred_cols.is_empty() {
        return Err(IcpError::Config("no predictor columns".into()));
    }

    let mut columns = vec![Vec::new(); pred_cols.len()];
    let mut y = Vec::new();
    let mut env_ids = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = row + 1;
        let numeric = |c: usize| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| IcpError::NonNumeric {
                column: header[c].clone(),
                row,
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(IcpError::NonFinite { column: header[c].clone(), row });
            }
            Ok(v)
        };
        for (col, &c) in columns.iter_mut().zip(&pred_cols) {
            col.push(numeric(c)?);
        }
        y.push(numeric(y_col)?);
        let label = rec.get(e_col).unwrap_or("").to_string();
        let next = labels.len() + 1;
        let id = *label_ids.entry(label.clone()).or_insert_with(|| {
            labels.push(label);
            next
        });
        env_ids.push(id);
    }
    if labels.len() < 2 {
        return Err(IcpError::SingleEnvironment(env.to_string()));
    }
    let names = pred_cols.iter().map(|&c| header[c].clone()).collect();
    let data = EnvDataset::new(columns, y, env_ids, names)?;
    Ok(LoadedData { data, env_labels: labels })
}

/// Writes predictors, then the response and environment columns.
pub fn write_csv<W: Write>(data: &EnvDataset, writer: W, response: &str, env: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = data.names().iter().map(String::as_str).collect();
    header.push(response);
    header.push(env);
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = (0..data.m()).map(|j| format!("{:?}", data.column(j)[i])).collect();
        rec.push(format!("{:?}", data.y()[i]));
        rec.push(data.env()[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// All masks ordered by size, then lexicographically by their sorted members.
///
/// This is the set indexing used for the bound plots: position 0 is the empty
/// set and the last position is the full set.
pub fn size_ordered_masks(m: usize) -> Result<Vec<u32>> {
    check_m(m)?;
    let mut masks: Vec<u32> = (0..=full_bits(m)).collect();
    // reversing bit order turns colexicographic into lexicographic order
    masks.sort_by_key(|&s| (s.count_ones(), std::cmp::Reverse(s.reverse_bits())));
    Ok(masks)
}

/// CSV with one row per set: `set_index,set_size,td_lower,fd_upper,set`.
pub fn write_bounds_csv<W: Write>(bounds: &[BoundResult], names: &[String], writer: W) -> Result<()> {
    let m = names.len();
    let by_mask: HashMap<u32, &BoundResult> = bounds.iter().map(|b| (b.set.bits(), b)).collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["set_index", "set_size", "td_lower", "fd_upper", "set"])?;
    let mut index = 0;
    for mask in size_ordered_masks(m)? {
        if let Some(b) = by_mask.get(&mask) {
            index += 1;
            w.write_record([
                index.to_string(),
                b.set.len().to_string(),
                b.td_lower.to_string(),
                b.fd_upper.to_string(),
                b.set.names(names).join(" "),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Averaged bounds from a simulation, same layout as [`write_bounds_csv`].
pub fn write_mean_bounds_csv<W: Write>(mean_td: &[f64], mean_fd: &[f64], names: &[String], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["set_index", "set_size", "td_lower", "fd_upper", "set"])?;
    for (index, mask) in size_ordered_masks(names.len())?.into_iter().enumerate() {
        let members: Vec<&str> =
            (0..names.len()).filter(|&i| mask & (1 << i) != 0).map(|i| names[i].as_str()).collect();
        w.write_record([
            (index + 1).to_string(),
            mask.count_ones().to_string(),
            mean_td[mask as usize].to_string(),
            mean_fd[mask as usize].to_string(),
            members.join(" "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "x1,x2,y,env\n1,2,3,a\n2,1,4,a\n3,5,1,b\n4,4,2,b\n5,3,7,a\n6,0,2,b\n";

    #[test]
    fn toy_labels_in_first_appearance_order() {
        let l = read_csv(TOY.as_bytes(), "y", "env").unwrap();
        assert_eq!(l.data.n_env(), 2);
        assert_eq!(l.env_labels, vec!["a", "b"]);
        assert_eq!(l.data.env(), &[1, 1, 2, 2, 1, 2]);
        assert_eq!(l.data.names(), &["x1", "x2"]);
        assert_eq!(l.data.y()[2], 1.0);
    }

    #[test]
    fn error_codes() {
        let e = read_csv(TOY.as_bytes(), "nope", "env").unwrap_err();
        assert_eq!(e.code(), "MISSING_COLUMN");
        let single = "x,y,env\n1,2,a\n2,3,a\n3,1,a\n4,4,a\n";
        assert_eq!(read_csv(single.as_bytes(), "y", "env").unwrap_err().code(), "SINGLE_ENVIRONMENT");
        let cat = "x,y,env\n1,2,a\nred,3,a\n3,1,b\n4,4,b\n";
        assert_eq!(read_csv(cat.as_bytes(), "y", "env").unwrap_err().code(), "NON_NUMERIC");
        let inf = "x,y,env\n1,2,a\ninf,3,a\n3,1,b\n4,4,b\n";
        assert_eq!(read_csv(inf.as_bytes(), "y", "env").unwrap_err().code(), "NON_FINITE");
    }

    #[test]
    fn size_order_layout() {
        let order = size_ordered_masks(9).unwrap();
        let one_based = |s: u32| (0..9).filter(|i| s & (1 << i) != 0).map(|i| i + 1).collect::<Vec<_>>();
        assert_eq!(order[0], 0);
        assert_eq!(one_based(order[1]), vec![1]);
        assert_eq!(one_based(order[10]), vec![1, 2]);
        assert_eq!(one_based(order[11]), vec![1, 3]);
        assert_eq!(one_based(order[130]), vec![1, 2, 3, 4]);
        assert_eq!(one_based(order[256]), vec![1, 2, 3, 4, 5]);
        assert_eq!(order[511], 511);
    }
}
