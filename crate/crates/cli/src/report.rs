//! CSV and text rendering with a self-describing header: every output embeds
//! the fully resolved config and its content hash, and is byte-identical
//! across reruns of the same config and seed.

use crate::sweep::{CrcRow, GfdpcRow};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

/// Hex SHA-256 of the resolved config JSON.
pub fn config_hash(resolved_json: &str) -> String {
    let digest = Sha256::digest(resolved_json.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn header(kind: &str, resolved_json: &str) -> String {
    format!(
        "# cogdpc {kind}\n# config: {resolved_json}\n# config_sha256: {}\n",
        config_hash(resolved_json)
    )
}

pub fn render_gfdpc_csv(resolved_json: &str, rows: &[GfdpcRow], emit_timing: bool) -> String {
    let mut out = header("gfdpc-sweep", resolved_json);
    out.push_str("snr_db,rate_lb,rate_lb_stderr,rate_opt,rate_opt_stderr,rate_nos,rate_nos_stderr");
    if emit_timing {
        out.push_str(",wall_time_s");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.snr_db,
            r.rate_lb,
            r.rate_lb_stderr,
            r.rate_opt,
            r.rate_opt_stderr,
            r.rate_nos,
            r.rate_nos_stderr
        );
        if emit_timing {
            let _ = write!(out, ",{}", r.wall_time_s);
        }
        out.push('\n');
    }
    out
}

pub fn render_crc_csv(resolved_json: &str, rows: &[CrcRow], emit_timing: bool) -> String {
    let mut out = header("crc-sweep", resolved_json);
    out.push_str("pp_db");
    if let Some(first) = rows.first() {
        for cell in &first.cells {
            let _ = write!(
                out,
                ",{l}_r_p,{l}_r_c,{l}_r_sum,{l}_stderr,{l}_restarts",
                l = cell.label
            );
        }
    }
    out.push_str(",ub,ub_stderr");
    if emit_timing {
        out.push_str(",wall_time_s");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{}", r.pp_db);
        for cell in &r.cells {
            let _ = write!(
                out,
                ",{},{},{},{},{}",
                cell.r_p, cell.r_c, cell.r_sum, cell.stderr, cell.restarts
            );
        }
        let _ = write!(out, ",{},{}", r.ub, r.ub_stderr);
        if emit_timing {
            let _ = write!(out, ",{}", r.wall_time_s);
        }
        out.push('\n');
    }
    out
}

pub fn render_scaling_report(resolved_json: &str, body: &str) -> String {
    let mut out = header("scaling-table", resolved_json);
    out.push_str(body);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_hex() {
        let h = config_hash("{}");
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash("{}"));
        assert_ne!(h, config_hash("{ }"));
    }

    #[test]
    fn gfdpc_csv_layout() {
        let rows = vec![GfdpcRow {
            snr_db: 10.0,
            rate_lb: 1.5,
            rate_lb_stderr: 0.01,
            rate_opt: 1.75,
            rate_opt_stderr: 0.01,
            rate_nos: 2.0,
            rate_nos_stderr: 0.02,
            wall_time_s: 0.5,
        }];
        let csv = render_gfdpc_csv("{\"kind\":\"gfdpc-sweep\"}", &rows, false);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# cogdpc gfdpc-sweep"));
        assert!(lines[1].starts_with("# config: "));
        assert!(lines[2].starts_with("# config_sha256: "));
        assert_eq!(
            lines[3],
            "snr_db,rate_lb,rate_lb_stderr,rate_opt,rate_opt_stderr,rate_nos,rate_nos_stderr"
        );
        assert_eq!(lines[4], "10,1.5,0.01,1.75,0.01,2,0.02");
        // timing column only on request
        let csv_t = render_gfdpc_csv("{}", &rows, true);
        assert!(csv_t.lines().nth(3).unwrap().ends_with(",wall_time_s"));
    }
}
