//! The time-series CSV: fixed columns, 17 significant digits, one flushed
//! row per checkpoint.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::Checkpoint;
use crate::identities::{residuals_at, IdentityResiduals, ScaleRow};

pub const COLUMNS: [&str; 20] = [
    "t",
    "mass",
    "energy",
    "energy_kinetic",
    "energy_defocusing",
    "energy_potential",
    "energy_plus",
    "morawetz_I",
    "modified_E",
    "interaction_B",
    "h1",
    "shell_mass",
    "diss_mass_cum",
    "led_cum",
    "a_int_cum",
    "l4_cum",
    "l2s2_cum",
    "mass_residual",
    "energy_residual",
    "virial_residual",
];

/// Renders a float with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn row_values(initial: &Checkpoint, cp: &Checkpoint) -> [Option<f64>; 20] {
    let r = &cp.record;
    let a = &cp.accumulators;
    let res = residuals_at(initial, cp);
    [
        Some(r.t),
        Some(r.mass),
        Some(r.energy),
        Some(r.energy_kinetic),
        Some(r.energy_defocusing),
        Some(r.energy_potential),
        Some(r.energy_plus),
        Some(r.morawetz_i),
        Some(r.modified_e),
        r.interaction_b,
        Some(r.h1),
        Some(r.shell_mass),
        Some(a.diss_mass),
        Some(a.led),
        Some(a.a_int),
        Some(a.l4),
        Some(a.l2s2),
        Some(res.mass),
        Some(res.energy),
        Some(res.virial),
    ]
}

/// Append-only writer.
pub struct SeriesWriter<W: Write> {
    inner: csv::Writer<W>,
    initial: Option<Checkpoint>,
}

impl SeriesWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        SeriesWriter::new(BufWriter::new(file))
    }
}

impl<W: Write> SeriesWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(COLUMNS)?;
        inner.flush().map_err(|e| Error::io("series.csv", e))?;
        Ok(SeriesWriter { inner, initial: None })
    }

    pub fn push(&mut self, cp: &Checkpoint) -> Result<()> {
        let initial = self.initial.get_or_insert_with(|| cp.clone());
        let fields: Vec<String> = row_values(initial, cp)
            .iter()
            .map(|v| v.map(format_float).unwrap_or_default())
            .collect();
        self.inner.write_record(&fields)?;
        self.inner.flush().map_err(|e| Error::io("series.csv", e))?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Series(format!("flush failed: {}", e.error())))
    }
}

/// One parsed CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesRow {
    pub values: [Option<f64>; 20],
}

impl SeriesRow {
    pub fn get(&self, column: &str) -> Option<f64> {
        COLUMNS.iter().position(|c| *c == column).and_then(|i| self.values[i])
    }

    pub fn scale_row(&self) -> ScaleRow {
        let v = |i: usize| self.values[i].unwrap_or(f64::NAN);
        ScaleRow {
            t: v(0),
            mass: v(1),
            energy_kinetic: v(3),
            energy_defocusing: v(4),
            energy_potential: v(5),
            h1: v(10),
            shell_mass: v(11),
        }
    }

    pub fn residuals(&self) -> IdentityResiduals {
        let v = |i: usize| self.values[i].unwrap_or(f64::NAN);
        IdentityResiduals {
            t: v(0),
            mass: v(17),
            energy: v(18),
            virial: v(19),
        }
    }
}

/// Parses a series CSV. Only `interaction_B` may be empty.
pub fn read_series(reader: impl Read) -> Result<Vec<SeriesRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::Series(format!(
            "unexpected header; expected {}",
            COLUMNS.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != COLUMNS.len() {
            return Err(Error::Series(format!("row {}: {} fields", line + 1, record.len())));
        }
        let mut values = [None; 20];
        for (i, field) in record.iter().enumerate() {
            if field.is_empty() {
                if COLUMNS[i] == "interaction_B" {
                    continue;
                }
                return Err(Error::Series(format!("row {}: empty `{}`", line + 1, COLUMNS[i])));
            }
            let v: f64 = field.parse().map_err(|_| {
                Error::Series(format!("row {}: `{}` is not a number: {field:?}", line + 1, COLUMNS[i]))
            })?;
            values[i] = Some(v);
        }
        rows.push(SeriesRow { values });
    }
    Ok(rows)
}

pub fn load_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_series(std::io::BufReader::new(file))
}
