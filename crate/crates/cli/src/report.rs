//! Restore reports: JSON for machines, aligned text for people. Both carry
//! the full run configuration and the library version.

use std::fmt::Write as _;

use ctmg_core::metrics::format_psnr;
use ctmg_core::RestorationReport;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub config: RunConfig,
    pub result: RestorationReport,
}

impl RunReport {
    pub fn new(config: RunConfig, result: RestorationReport) -> Self {
        Self {
            version: ctmg_core::VERSION,
            config,
            result,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn to_text(&self) -> String {
        let r = &self.result;
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "ctmg {}", self.version);
        let _ = writeln!(s, "method        {} / {}", r.method, r.smoother);
        let _ = writeln!(s, "sigma         {}", r.sigma);
        if r.method != ctmg_core::Method::Baseline {
            let _ = writeln!(s, "levels        {}", c.levels);
        }
        let iters: Vec<String> = r.iters_per_level.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "iters/level   {}", iters.join(" "));
        let _ = writeln!(s, "total iters   {}", r.total_smoothing_iters);
        let _ = writeln!(s, "rel residual  {:.3e}", r.final_rel_residual);
        let _ = writeln!(s, "seconds       {:.3}", r.wall_seconds);
        if let Some(q) = &r.quality {
            let psnr = if q.psnr.is_finite() { format!("{:.4}", q.psnr) } else { format_psnr(q.psnr) };
            let _ = writeln!(s, "psnr (dB)     {psnr}");
            let _ = writeln!(s, "re            {:.6}", q.re);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctmg_core::metrics::score;
    use ctmg_core::{Dims3, ImageTensor, Method, SmootherKind};

    fn report(quality: bool) -> RunReport {
        let f = ImageTensor::filled(Dims3::new(2, 2, 3), 0.5);
        RunReport::new(
            RunConfig::default(),
            RestorationReport {
                method: Method::Ctmg,
                smoother: SmootherKind::Cr,
                sigma: 0.9,
                levels: Vec::new(),
                iters_per_level: vec![0, 4],
                total_smoothing_iters: 4,
                wall_seconds: 0.0,
                final_rel_residual: 0.0,
                quality: quality.then(|| score(&f, &f).unwrap()),
            },
        )
    }

    #[test]
    fn infinite_psnr_is_written_as_inf() {
        let r = report(true);
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["result"]["quality"]["psnr"], "inf");
        assert_eq!(json["result"]["quality"]["re"], 0.0);
        assert!(r.to_text().contains("psnr (dB)     inf"));
    }

    #[test]
    fn report_embeds_config_and_version() {
        let r = report(false);
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["version"], ctmg_core::VERSION);
        assert_eq!(json["config"]["levels"], 4);
        assert!(json["result"]["quality"].is_null());
        assert!(!r.to_text().contains("psnr"));
    }
}
