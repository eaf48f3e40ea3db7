//! Telemetry CSV. Column order is fixed; numbers use Rust's shortest
//! round-trip scientific form so a parse reproduces every bit.

use std::io::Write;
use std::path::Path;

use crate::dynamics::Mode;
use crate::telemetry::TelemetryRecord;

pub const COLUMNS: [&str; 19] = [
    "t", "q_M", "q_eq", "delta_l", "qd_M", "qd_m", "tau_M_cmd", "tau_m_cmd", "tau_spring", "I_M", "I_m", "p_M_elec",
    "p_m_elec", "p_M_mech", "p_m_mech", "E_M", "E_m", "E_spring", "mode",
];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Read(#[from] csv::Error),
    #[error("bad telemetry row: {0}")]
    Format(String),
}

fn row(r: &TelemetryRecord) -> [String; 19] {
    let nums = [
        r.t, r.q_main, r.q_eq, r.delta_l, r.qd_main, r.qd_adjuster, r.tau_main_cmd, r.tau_adjuster_cmd, r.tau_spring,
        r.i_main, r.i_adjuster, r.p_main_elec, r.p_adjuster_elec, r.p_main_mech, r.p_adjuster_mech, r.e_main,
        r.e_adjuster, r.e_spring,
    ];
    std::array::from_fn(|i| if i < 18 { format!("{:e}", nums[i]) } else { r.mode.label().to_string() })
}

pub fn write_records<W: Write>(records: &[TelemetryRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(records: &[TelemetryRecord], path: &Path) -> Result<(), CsvError> {
    let wrap = |source: csv::Error| CsvError::Write { path: path.display().to_string(), source };
    let file = std::fs::File::create(path).map_err(|e| wrap(e.into()))?;
    write_records(records, std::io::BufWriter::new(file)).map_err(wrap)
}

/// Parses a telemetry CSV back into records.
pub fn read_records<R: std::io::Read>(input: R) -> Result<Vec<TelemetryRecord>, CsvError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(CsvError::Format(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, CsvError> {
            rec[i].parse::<f64>().map_err(|_| CsvError::Format(format!("column {} = {:?}", COLUMNS[i], &rec[i])))
        };
        let mode = match &rec[18] {
            "PE" => Mode::ParallelElastic,
            "VDD" => Mode::VirtualDirectDrive,
            other => return Err(CsvError::Format(format!("mode {other:?}"))),
        };
        out.push(TelemetryRecord {
            t: num(0)?,
            q_main: num(1)?,
            q_eq: num(2)?,
            delta_l: num(3)?,
            qd_main: num(4)?,
            qd_adjuster: num(5)?,
            tau_main_cmd: num(6)?,
            tau_adjuster_cmd: num(7)?,
            tau_spring: num(8)?,
            i_main: num(9)?,
            i_adjuster: num(10)?,
            p_main_elec: num(11)?,
            p_adjuster_elec: num(12)?,
            p_main_mech: num(13)?,
            p_adjuster_mech: num(14)?,
            e_main: num(15)?,
            e_adjuster: num(16)?,
            e_spring: num(17)?,
            mode,
        });
    }
    Ok(out)
}
