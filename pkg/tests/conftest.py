import numpy as np
import pytest

import driftadapt.adversarial
import driftadapt.methods
import driftadapt.trees
import driftadapt.trees.gbdt
from driftadapt.data_model import (
    Column,
    ColumnKind,
    Dataset,
    EncodedMatrix,
    KEEP_MISSING,
)

# Every gbdt fit anywhere in the suite is checked against the
# early-stopping contract: the holdout loss at best_iteration is minimal
# over all later rounds, and best_iteration is the earliest minimum.
GBDT_FITS_SEEN = []

_real_fit_gbdt = driftadapt.trees.gbdt.fit_gbdt


def _checked_fit_gbdt(*args, **kwargs):
    model = _real_fit_gbdt(*args, **kwargs)
    hist = np.asarray(model.eval_history)
    best = model.best_iteration
    assert 0 <= best < len(hist)
    assert hist[best] <= hist[best:].min() + 0.0
    assert best == int(np.argmin(hist))
    GBDT_FITS_SEEN.append(len(model.trees))
    return model


@pytest.fixture(scope="session", autouse=True)
def _gbdt_early_stopping_guard():
    patched = [
        driftadapt.trees.gbdt,
        driftadapt.trees,
        driftadapt.adversarial,
        driftadapt.methods,
    ]
    for mod in patched:
        mod.fit_gbdt = _checked_fit_gbdt
    try:
        yield
    finally:
        for mod in patched:
            mod.fit_gbdt = _real_fit_gbdt


def make_matrix(values, feature_names=None, mask=None,
                policy=KEEP_MISSING, codebooks=None) -> EncodedMatrix:
    """EncodedMatrix straight from an array, for learner-level tests."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    n, d = values.shape
    names = feature_names or [f"f{j}" for j in range(d)]
    if mask is None:
        mask = np.isnan(values)
    return EncodedMatrix(
        values=values,
        missing_mask=np.asarray(mask, dtype=bool),
        feature_names=list(names),
        codebooks=codebooks or {},
        policy=policy,
    )


def make_dataset(name="ds", label=None, **columns) -> Dataset:
    """Dataset from keyword columns; float arrays become numerical,
    anything else categorical (None cells = missing)."""
    cols, data = [], {}
    n = None
    for col_name, cells in columns.items():
        cells = list(cells)
        n = len(cells) if n is None else n
        if all(isinstance(c, (int, float)) or c is None for c in cells):
            arr = np.array([np.nan if c is None else float(c) for c in cells])
            cols.append(Column(col_name, ColumnKind.NUMERICAL))
        else:
            arr = np.empty(len(cells), dtype=object)
            for i, c in enumerate(cells):
                arr[i] = c
            cols.append(Column(col_name, ColumnKind.CATEGORICAL))
        data[col_name] = arr
    return Dataset(name=name, columns=cols, data=data, n_rows=n,
                   label=None if label is None else np.asarray(label, dtype=np.int8))
