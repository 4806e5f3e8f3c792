//! Generated matplotlib scripts. Each script lives next to its CSV, reads
//! it by relative name, and renders a PNG — so results stay diff-able
//! text and plotting needs nothing but a stock Python with matplotlib.

fn log_scale_line(log2_x: bool) -> &'static str {
    if log2_x {
        "ax.set_xscale(\"log\", base=2)\n"
    } else {
        ""
    }
}

/// Band plot for case studies: model line over the simulated p1-p99 band
/// and median.
pub fn case_plot(
    csv_name: &str,
    png_name: &str,
    xlabel: &str,
    title: &str,
    log2_x: bool,
) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Render {png_name} from {csv_name}."""
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open("{csv_name}", newline="") as fh:
    rows = list(csv.DictReader(fh))
x = [float(r["value"]) for r in rows]
model = [float(r["model"]) for r in rows]
p1 = [float(r["p1"]) for r in rows]
p50 = [float(r["p50"]) for r in rows]
p99 = [float(r["p99"]) for r in rows]

fig, ax = plt.subplots(figsize=(5.0, 3.5))
ax.fill_between(x, p1, p99, color="tab:orange", alpha=0.3, label="simulation p1-p99")
ax.plot(x, p50, color="tab:orange", label="simulation median")
ax.plot(x, model, color="tab:blue", marker="o", label="model")
{log_scale}ax.set_xlabel("{xlabel}")
ax.set_ylabel("success rate")
ax.set_title("{title}")
ax.legend()
fig.savefig("{png_name}", dpi=150, bbox_inches="tight")
"#,
        log_scale = log_scale_line(log2_x),
    )
}

/// Measured-versus-predicted plot for latency sweeps.
pub fn latency_plot(
    csv_name: &str,
    png_name: &str,
    xlabel: &str,
    title: &str,
    log2_x: bool,
) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Render {png_name} from {csv_name}."""
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open("{csv_name}", newline="") as fh:
    rows = list(csv.DictReader(fh))
x = [float(r["value"]) for r in rows]
measured = [float(r["measured"]) for r in rows]
predicted = [float(r["predicted"]) for r in rows]
saturated = [r["saturated"] == "true" for r in rows]

fig, ax = plt.subplots(figsize=(5.0, 3.5))
ax.plot(x, measured, color="tab:orange", marker="s", label="measured")
ax.plot(x, predicted, color="tab:blue", marker="o", label="predicted")
flagged = [(xi, mi) for xi, mi, s in zip(x, measured, saturated) if s]
if flagged:
    ax.scatter(
        [f[0] for f in flagged],
        [f[1] for f in flagged],
        color="tab:red",
        zorder=3,
        label="saturated",
    )
{log_scale}ax.set_xlabel("{xlabel}")
ax.set_ylabel("latency (s)")
ax.set_title("{title}")
ax.legend()
fig.savefig("{png_name}", dpi=150, bbox_inches="tight")
"#,
        log_scale = log_scale_line(log2_x),
    )
}
