"""
The command line workflow
=========================

Write a dataset in TU format, then drive ``prepare``, ``train`` and
``report`` through the same entry point the ``avcn`` script uses.
"""

import os
import tempfile

from avcn.cli import main
from avcn.graphs import write_tu_dataset
from avcn.synthetic import make_dataset

root = tempfile.mkdtemp()
write_tu_dataset(make_dataset(60, seed=2), os.path.join(root, "data"), "SYNTH")
print(sorted(os.listdir(os.path.join(root, "data"))))

common = ["--dataset-dir", os.path.join(root, "data"), "--dataset", "SYNTH",
          "--out", os.path.join(root, "runs"), "--prototypes", "16", "--depth", "3",
          "--channels", "4", "--filter-sizes", "3,5", "--epochs", "5", "--folds", "3"]

###############################################################################
# ``prepare`` caches the grids; ``train`` reuses them when the config matches.

print("prepare ->", main(["prepare"] + common))
print("train   ->", main(["train"] + common))
print("report  ->", main(["report", "--dataset", "SYNTH", "--out", os.path.join(root, "runs")]))

###############################################################################
# Bad input maps to exit codes: 1 for usage, 2 for data problems.

print("bad flag    ->", main(["train", "--epochs", "many"]))
print("no dataset  ->", main(["prepare", "--dataset-dir", root, "--dataset", "NOPE"]))
