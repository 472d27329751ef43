use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{ResultRow, Scheme};
use crate::{Error, Result};

/// Writes rows with the header
/// `sweep,scheme,nmse_mean,nmse_se,resources,infeasible_rate,iters,seed`.
pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no result rows to write".into()));
    }
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn parse_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Whitespace-separated `sweep nmse_mean nmse_se` blocks, one per scheme,
/// separated by two blank lines so each is a gnuplot `index`.
pub fn plot_data(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no result rows to plot".into()));
    }
    let mut groups: BTreeMap<Scheme, Vec<&ResultRow>> = BTreeMap::new();
    let mut order = Vec::new();
    for row in rows {
        groups
            .entry(row.scheme)
            .or_insert_with(|| {
                order.push(row.scheme);
                Vec::new()
            })
            .push(row);
    }
    let mut out = String::new();
    for (i, scheme) in order.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {scheme}\n# sweep nmse_mean nmse_se\n"));
        for row in &groups[scheme] {
            out.push_str(&format!("{} {:e} {:e}\n", row.sweep, row.nmse_mean, row.nmse_se));
        }
    }
    Ok(out)
}

pub fn write_plot_data<W: Write>(rows: &[ResultRow], mut w: W) -> Result<()> {
    w.write_all(plot_data(rows)?.as_bytes())?;
    Ok(())
}
