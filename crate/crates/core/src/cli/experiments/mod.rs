mod geometry;
mod pde;
mod probes;

use super::{CliError, Config, Experiment, Report};
use crate::parabolic::Verdict;

pub const ALL: &[Experiment] = &[
    pde::POROUS,
    pde::COMMUTATOR,
    pde::PRODUCTLIMIT,
    geometry::MOVEDOM,
    geometry::DIVFREE,
    probes::NSPROBE,
    probes::KRUZHKOV,
];

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> crate::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn table<const N: usize>(header: [&str; N], rows: &[[String; N]]) -> Result<Vec<u8>, CliError> {
    csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn record_verdict(report: &mut Report, v: &Verdict) {
    report.note("verdict", if v.is_consistent() { "consistent" } else { "inconsistent" });
    if let Verdict::Inconsistent(why) = v {
        report.failures.extend(why.iter().cloned());
    }
}

fn one_of<'a>(cfg: &Config, key: &str, choices: &[&'a str]) -> Result<&'a str, CliError> {
    let v = cfg.text(key);
    choices
        .iter()
        .copied()
        .find(|c| *c == v)
        .ok_or_else(|| CliError::Config(format!("[{}] {key} = `{v}` is not one of {}", cfg.section(), choices.join(", "))))
}

fn point(cfg: &Config, key: &str) -> Result<[f64; 2], CliError> {
    match cfg.list::<f64>(key)?.as_slice() {
        &[x, y] => Ok([x, y]),
        _ => Err(CliError::Config(format!("[{}] {key} needs two coordinates", cfg.section()))),
    }
}
