use std::path::Path;
use std::time::Instant;

use dstrain_core::fem::run_history;
use dstrain_core::scenario::Scenario;

#[test]
#[ignore]
fn probe_opening_mode() {
    let s = Scenario::from_doc_str(
        "name = \"demo\"\n[mesh]\nbuiltin = \"opening_mode\"\nrefinement = 2\n",
        Path::new("."),
    )
    .unwrap();
    let only: Option<f64> = std::env::var("DSTRAIN_ONLY").ok().and_then(|v| v.parse().ok());
    for dcr in &s.sweep {
        if let Some(pick) = only {
            if (dcr - pick).abs() > 1e-9 {
                continue;
            }
        }
        let params = s.params.with_critical_damage(*dcr).unwrap();
        let mut solver = s.solver.clone();
        solver.max_iter = 60;
        let t0 = Instant::now();
        let mut peak_damage = 0.0f64;
        let mut crack_gps = 0usize;
        let curve = std::env::var_os("DSTRAIN_CURVE").is_some();
        let out = run_history(
            &s.mesh,
            &params,
            &s.bcs,
            &s.probes,
            &s.reactions,
            &solver,
            &mut |ctx| {
                let mut n = 0;
                for egs in &ctx.store.gps {
                    for g in egs {
                        peak_damage = peak_damage.max(g.damage);
                        if g.state.regime.label() == "crack_open" {
                            n += 1;
                        }
                    }
                }
                crack_gps = crack_gps.max(n);
                if curve {
                    let r = ctx.record;
                    println!(
                        "  t={:.6} bc={:+.4e} cmd={:.4e} load={:+.4e} iters={} cuts={} open={} relaxed={}",
                        r.time, r.bc_values[3], r.probes[0], r.reactions[0], r.iterations, r.cuts, n, r.relaxed
                    );
                }
                Ok(())
            },
        );
        match out {
            Ok(out) => {
                let total_cuts: usize = out.records.iter().map(|r| r.cuts).sum();
                let total_iters: usize = out.records.iter().map(|r| r.iterations).sum();
                // Find the last record with zero load amplitude before the final ramp.
                let mut residual_cmd = f64::NAN;
                for r in &out.records {
                    if r.bc_values[3].abs() < 1.0e-15 && r.time > 0.5 {
                        residual_cmd = r.probes[0];
                    }
                }
                let last = out.records.last().unwrap();
                println!(
                    "dcr={dcr:.2} wall={:?} records={} cuts={total_cuts} iters={total_iters} peak_d={peak_damage:.4} crack_gps={crack_gps} residual_cmd={residual_cmd:.4e} final_cmd={:.4e} final_load={:.3e}",
                    t0.elapsed(),
                    out.records.len(),
                    last.probes[0],
                    last.reactions[0],
                );
            }
            Err(e) => println!("dcr={dcr:.2} FAILED after {:?}: {e}", t0.elapsed()),
        }
    }
}
