"""The MUTAG-scale checks, run on a synthetic dataset of the same size."""

import numpy as np
import pytest

from avcn.harness import RunConfig, fit_dataset_prototypes, prepare, run_cv
from avcn.synthetic import make_dataset

from checks import check_alignment_invariants, check_transitivity


@pytest.fixture(scope="module")
def synth188():
    ds = make_dataset(188, seed=0, max_vertices=28)
    reps, prototypes = fit_dataset_prototypes(ds, RunConfig())
    return ds, reps, prototypes


def test_alignment_invariants(synth188):
    ds, reps, prototypes = synth188
    check_alignment_invariants(ds, reps, prototypes, (64, len(ds.label_alphabet)), permutations=3)


def test_transitivity(synth188):
    _, reps, prototypes = synth188
    check_transitivity(reps, prototypes)


def test_prepare_defaults_grid_shape(synth188, tmp_path):
    ds = synth188[0]
    cache = prepare(RunConfig(out=str(tmp_path)), ds, use_cache=False)
    assert cache.grids.shape == (188, 64, 7)


def test_short_cv_learns(tmp_path):
    ds = make_dataset(100, seed=4)
    cfg = RunConfig(out=str(tmp_path), dataset="SYNTH", prototypes=32, depth=5, channels=8,
                    filter_sizes=(3, 5), layers_per_branch=2, epochs=15, folds=4)
    rep = run_cv(cfg, ds)
    assert rep.mean_accuracy > 0.75
    assert all(c[-1] < c[0] for r in rep.train_curves for c in r)
