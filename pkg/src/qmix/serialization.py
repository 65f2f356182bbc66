"""JSON and CSV encodings shared by the library and the CLI.

Operator: ``{"dim": d, "entries": [[re, im], ...]}`` row-major, ``d*d`` pairs.
Channel: ``{"dim": d, "kraus": [<operator>, ...]}`` plus optional ``family`` and
``params`` recording the zoo constructor. Floats go through :func:`repr`, which is
the shortest round-trip decimal; an infinite rate is the string ``"inf"``.
"""

from __future__ import annotations

import json
import math

import numpy as np

from qmix.channels import ChannelError, KrausChannel, ValidationReport
from qmix.dobrushin import ContractionReport, KappaBound
from qmix.dynamics import BoundReport, ChannelClassification, Trajectory


class FormatError(ValueError):
    """Input document does not match the expected schema."""


def _f(x) -> float | str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def _complex_list(values) -> list:
    return [[_f(z.real), _f(z.imag)] for z in np.asarray(values, dtype=complex).ravel()]


def operator_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"dim": int(a.shape[0]), "entries": _complex_list(a)}


def operator_from_json(doc) -> np.ndarray:
    try:
        dim = doc["dim"]
        entries = doc["entries"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"operator needs 'dim' and 'entries': {exc}") from exc
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise FormatError(f"operator dim must be a positive integer, got {dim!r}")
    if not isinstance(entries, list) or len(entries) != dim * dim:
        raise FormatError(f"operator of dim {dim} needs {dim * dim} entries")
    try:
        flat = np.array([complex(float(re), float(im)) for re, im in entries])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"entries must be [re, im] pairs of numbers: {exc}") from exc
    if not np.all(np.isfinite(flat)):
        raise FormatError("operator entries must be finite")
    return flat.reshape(dim, dim)


def channel_to_json(ch: KrausChannel) -> dict:
    doc = {"dim": ch.dim, "kraus": [operator_to_json(k) for k in ch.kraus]}
    if ch.family is not None:
        doc["family"] = ch.family
        doc["params"] = {k: (_f(v) if isinstance(v, float) else v) for k, v in ch.params.items()}
    return doc


def channel_from_json(doc) -> KrausChannel:
    if not isinstance(doc, dict) or "kraus" not in doc or "dim" not in doc:
        raise FormatError("channel needs 'dim' and 'kraus'")
    if not isinstance(doc["kraus"], list) or not doc["kraus"]:
        raise FormatError("'kraus' must be a nonempty list")
    ops = [operator_from_json(k) for k in doc["kraus"]]
    if any(k.shape[0] != doc["dim"] for k in ops):
        raise FormatError(f"Kraus operator dims do not match declared dim {doc['dim']!r}")
    try:
        return KrausChannel(tuple(ops), family=doc.get("family"), params=dict(doc.get("params") or {}))
    except ChannelError as exc:
        raise FormatError(str(exc)) from exc


def validation_to_json(report: ValidationReport) -> dict:
    return {k: (_f(v) if isinstance(v, float) else v) for k, v in report.to_dict().items()}


def kappa_to_json(kb: KappaBound) -> dict:
    doc = {
        "trace_kappa": _f(kb.trace_kappa),
        "theta": _f(kb.theta),
        "method": kb.method,
        "lower_bound": operator_to_json(kb.lower_bound),
    }
    cert = kb.certificate
    if "argmin_state" in cert:
        doc["argmin_state"] = _complex_list(cert["argmin_state"])
        doc["c_star"] = _f(cert["c_star"])
        doc["validation_residual"] = _f(cert["validation_residual"])
    doc["flags"] = list(kb.flags)
    return doc


def contraction_to_json(rep: ContractionReport) -> dict:
    return {
        "passed": rep.passed,
        "pairs_tested": rep.pairs_tested,
        "max_ratio": _f(rep.max_ratio),
        "bound": _f(rep.bound),
        "violations": list(rep.violations),
    }


def classification_to_json(c: ChannelClassification) -> dict:
    return {
        "verdict": c.verdict,
        "unit_multiplicity": c.profile.unit_multiplicity,
        "peripheral_count": c.profile.peripheral_count,
        "spectral_gap": _f(c.profile.spectral_gap),
        "eigenvalues": _complex_list(c.profile.eigenvalues),
        "fixed_points": [operator_to_json(fp) for fp in c.fixed_points],
        "evidence_distance": _f(c.evidence_distance),
        "diagnostics": list(c.diagnostics),
    }


def bound_report_to_json(rep: BoundReport) -> dict:
    return {
        "passed": rep.passed,
        "trials": rep.trials,
        "steps": rep.steps,
        "trace_kappa": _f(rep.trace_kappa),
        "theta": _f(rep.theta),
        "tightest_margin": _f(rep.tightest_margin),
        "max_distance_by_step": [_f(x) for x in rep.max_distance_by_step],
        "violations": [{k: (_f(v) if isinstance(v, float) else v) for k, v in viol.items()}
                       for viol in rep.violations],
    }


def trajectory_to_csv(traj: Trajectory) -> str:
    lines = ["n,tv_distance"]
    lines += [f"{s.n},{s.tv_to_reference:.17g}" for s in traj.steps]
    return "\n".join(lines) + "\n"


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False)


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
