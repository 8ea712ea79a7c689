"""The full importance-cloud pipeline, end to end, through the CLI entry point.

Writes the synthetic benchmark to CSV, runs every stage (fit, Rashomon
sampling, per-model VIF-gated Shapley importance, random-effects pooling,
pairwise ranking, SVG reports), and prints the pooled table with 95%
prediction intervals. Non-significant variables (interval reaching zero) are
the ones the bar chart renders in grey.

Run:  python3 demos/04_full_pipeline.py
"""

import json
import tempfile
from pathlib import Path

from shapcloud import write_csv
from shapcloud.cli import main
from shapcloud.pooling import read_pooled_csv
from shapcloud.synthetic import make_benchmark

workdir = Path(tempfile.mkdtemp(prefix="shapcloud_demo_"))
data_path = workdir / "benchmark.csv"
out = workdir / "out"
write_csv(make_benchmark(n=3000, seed=7), data_path, "outcome")

config = {
    "data": str(data_path),
    "outcome": "outcome",
    "out": str(out),
    "seed": 0,
    "instance_cap": 200,  # keep the per-instance SHAP summary quick
}
config_path = workdir / "config.json"
config_path.write_text(json.dumps(config, indent=2))

print(f"running: shapcloud run --config {config_path}")
code = main(["run", "--config", str(config_path)])
assert code == 0, f"pipeline exited with {code}"

print(f"\npooled importance across the model cloud ({out / 'pooled.csv'}):")
print(f"{'variable':>10s} {'pooled':>9s} {'95% PI':>22s}  verdict")
for p in read_pooled_csv(out / "pooled.csv"):
    verdict = "significant" if p.significant else "PI reaches zero -> grey"
    print(
        f"{p.variable:>10s} {p.pooled_mean:9.5f} "
        f"[{p.pi_low:9.5f}, {p.pi_high:9.5f}]  {verdict}"
    )

manifest = json.loads((out / "manifest.json").read_text())
print(f"\nstatus: {manifest['status']}; artifacts written to {out}:")
for name in sorted(manifest["artifacts"]):
    print(f"  {name}")
print("\nopen bar.svg / violin.svg / shap_summary.svg in a browser to view the figures.")
