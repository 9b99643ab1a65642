"""Per-feature explanation of a single prediction.

For each feature of a policy, the model restricted to that feature alone is
used to predict the claim rate of anyone holding the policy's value; the
ratio of that one-feature prediction to the global mean is the feature's
impact. Values above 1 push the predicted rate up, below 1 pull it down.
The impacts are independent one-feature views, not an additive or
multiplicative decomposition of the overall prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import PolicyRecord
from .encoder import encode_value
from .predictor import KernelModel, kernel_weights, predict_record


@dataclass(frozen=True)
class ImpactRow:
    feature: str
    value: object
    single_feature_prediction: float
    impact: float


@dataclass(frozen=True)
class ImpactReport:
    """One impact per fitted feature plus the overall predicted rate and its
    ratio to the training mean."""

    rows: tuple[ImpactRow, ...]
    predicted_rate: float
    overall_ratio: float
    kappa: float
    cbar: float
    label: str = ""


def single_feature_prediction(feature: str, value, model: KernelModel,
                              kappa: float | None = None) -> float:
    """Kernel prediction using only one feature's distance.

    At kappa = 0 this is the global training mean for every value; as kappa
    grows it approaches the plain category mean of the value.
    """
    if kappa is None:
        kappa = model.kappa
    column = model.stats.feature_names.index(feature)
    coord = encode_value(model.stats, feature, value)
    d = np.abs(coord - model.train_coords[:, column])
    if model.normalize_distance:
        d = d / model.stats.cbar
    w = kernel_weights(d, kappa)
    return float(np.sum(w * model.train_rates) / np.sum(w))


def explain(record, model: KernelModel, kappa: float | None = None,
            label: str = "") -> ImpactReport:
    """Impact report for one policy record (or feature-value mapping).

    ``label`` names the training subset the model was fitted on, since the
    impacts are normalized by that subset's mean claim rate.
    """
    if kappa is None:
        kappa = model.kappa
    values = record.values if isinstance(record, PolicyRecord) else record
    cbar = model.stats.cbar
    rows = []
    for name in model.stats.feature_names:
        c_tilde = single_feature_prediction(name, values.get(name), model, kappa)
        rows.append(ImpactRow(feature=name, value=values.get(name),
                              single_feature_prediction=c_tilde, impact=c_tilde / cbar))
    overall = predict_record(values, model.with_kappa(kappa))
    return ImpactReport(rows=tuple(rows), predicted_rate=overall.value,
                        overall_ratio=overall.value / cbar, kappa=kappa,
                        cbar=cbar, label=label)
