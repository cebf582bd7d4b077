"""
Scanning the domain and shrinking it
====================================

With every gene redrawn each generation, the GA samples the box uniformly.
Keeping the best-fitness fraction of those samples and histogramming each
parameter shows where good solutions live. Sparse bins at the edges are then
trimmed, and the ensemble runs on the smaller box.
"""
import numpy as np

from hybrid_ident.config import load_config
from hybrid_ident.fixtures import fixture_path
from hybrid_ident.strategy import classify_all, reduce_domain, strategy_loop, uniform_scan

cfg = load_config(fixture_path("creep3"))
data = cfg.dataset()
cloud = uniform_scan(cfg.model, data, cfg.space, cfg.scan)
print(f"{len(cloud.genes)} points scanned, {cloud.retained.sum()} kept (fitness quantile {cfg.scan.quantile})")

classes = classify_all(cloud, cfg.strategy)
reduced = reduce_domain(cfg.space, classes, cloud)
for d, lo0, hi0, lo, hi in zip(classes, cfg.space.lower, cfg.space.upper, reduced.lower, reduced.upper):
    bar = " ".join(f"{c:3d}" for c in d.counts)
    print(f"{d.name:>4} {d.label.value:<9} [{lo0:g}, {hi0:g}] -> [{lo:g}, {hi:g}]")
    print(f"     {bar}")

# A parameter the data cannot see stays Uniform: d in the restricted sloppy problem
sloppy = load_config(fixture_path("sloppy_restricted"))
labels = classify_all(uniform_scan(sloppy.model, sloppy.dataset(), sloppy.space, sloppy.scan))
print("\nrestricted sloppy labels:", {d.name: d.label.value for d in labels})

# The whole loop: scan, reduce, ensemble, refine while the verdict asks for it
result = strategy_loop(cfg.model, data, cfg.space, cfg.ga, cfg.lm, cfg.strategy, cfg.scan)
print("\nverdict:", result.report.verdict.value)
print("mean:", result.report.mean, "std:", result.report.std)
for entry in result.history:
    print(entry["step"], {k: v for k, v in entry.items() if k in ("verdict", "labels", "reduced")})
