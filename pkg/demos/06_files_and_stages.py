"""
Data files, staged identification and the command line
=======================================================

Measurements live in CSV files listed by a manifest. Parameters can be
identified in stages: some first, on the tests most sensitive to them, then
the rest with the first group held fixed.
"""
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from hybrid_ident import CreepModel, ParameterSpace, TestDefinition
from hybrid_ident.dataio import generate_synthetic, load_dataset, write_dataset
from hybrid_ident.fixtures import fixture_path
from hybrid_ident.strategy import Stage, StrategyConfig, run_stages

truth = np.array([1000.0, 2000.0, 5.0])
t_short = np.geomspace(0.01, 0.5, 8)
t_long = np.linspace(0.0, 40.0, 41)
tests = [
    TestDefinition("quick", {"axial": t_short}, {"steps": [[0.0, 10.0]]}),
    TestDefinition("long", {"axial": t_long}, {"steps": [[0.0, 10.0], [20.0, 0.0]]}),
]
data = generate_synthetic(CreepModel(), truth, tests, noise_std=0.002, seed=1)

with tempfile.TemporaryDirectory() as tmp:
    manifest = write_dataset(data, tmp)
    print(manifest.read_text())
    data = load_dataset(manifest, {t.test_id: t.loading for t in tests})

    # Stage 1: the elastic modulus from the quick test, viscous parameters guessed.
    # Stage 2: the viscous parameters on every test, E taken from stage 1.
    space = ParameterSpace(("E", "E_v", "tau"), [500.0, 1000.0, 1.0], [1500.0, 3000.0, 9.0])
    stages = [
        Stage("elastic", ("E",), tests=("quick",), fixed={"E_v": 2500.0, "tau": 6.0}, method="hybrid"),
        Stage("viscous", ("E_v", "tau"), method="ensemble"),
        Stage("all", ("E", "E_v", "tau"), method="hybrid"),
    ]
    values, outcomes = run_stages(CreepModel(), data, space, stages, config=StrategyConfig(seed=5))
    for name, free, result in outcomes:
        verdict = getattr(result, "verdict", None)
        print(name, free, verdict.value if verdict else f"cost {result.cost:.3e}")
    print("identified:", values)

    # The same machinery from the shell
    out = Path(tmp) / "run"
    cmd = [sys.executable, "-m", "hybrid_ident.cli", "ensemble", str(fixture_path("creep3")), "-o", str(out)]
    print(subprocess.run(cmd, capture_output=True, text=True).stdout)
    print((out / "ensemble.csv").read_text())
