"""Plain-text model files.

Sphere model::

    rdwd-model v1
    d <int>
    R <float, 17 significant digits>
    O <index> <float>          one line per nonzero center entry, 0-based index
    meta <key> <value>         zero or more

Hyperplane model (mean difference or linear DWD)::

    hyperplane-model v1
    d <int>
    w <index> <float>          one line per nonzero normal entry
    beta <float>
    meta <key> <value>

Lines end with ``\\n``; files are UTF-8. Unknown headers or versions are rejected.
"""
from __future__ import annotations

import numpy as np

from .baselines import HyperplaneModel
from .core import RdwdError, SphereModel


class ModelFormatError(RdwdError, ValueError):
    pass


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def _meta_lines(meta: dict) -> list[str]:
    lines = []
    for key in sorted(meta):
        value = str(meta[key])
        if not key or any(ch.isspace() for ch in key) or "\n" in value:
            raise ValueError(f"meta entry {key!r} cannot be written")
        lines.append(f"meta {key} {value}")
    return lines


def sphere_meta(model: SphereModel) -> dict:
    meta = {"iterations": model.iterations, "converged": str(model.converged).lower(),
            "objective": fmt_float(model.objective)}
    cfg = model.config
    if cfg is not None:
        meta.update({
            "penalty": fmt_float(cfg.penalty) if cfg.penalty is not None else "auto",
            "stop_eps": fmt_float(cfg.stop_eps),
            "step_length": fmt_float(cfg.step_length),
            "max_outer_iters": cfg.max_outer_iters,
            "init": cfg.init_mode,
        })
        if cfg.weights is not None:
            meta["weights"] = ",".join(fmt_float(w) for w in cfg.weights)
    for k, v in model.meta.items():
        meta.setdefault(k, v)
    return meta


def dumps(model) -> str:
    if isinstance(model, SphereModel):
        lines = ["rdwd-model v1", f"d {model.d}", f"R {fmt_float(model.radius)}"]
        lines += [f"O {i} {fmt_float(v)}" for i, v in enumerate(model.center) if v != 0]
        lines += _meta_lines(sphere_meta(model))
    elif isinstance(model, HyperplaneModel):
        lines = ["hyperplane-model v1", f"d {model.d}"]
        lines += [f"w {i} {fmt_float(v)}" for i, v in enumerate(model.normal) if v != 0]
        lines.append(f"beta {fmt_float(model.intercept)}")
        meta = {"method": model.method}
        meta.update({k: (fmt_float(v) if isinstance(v, float) else v)
                     for k, v in model.meta.items()})
        lines += _meta_lines(meta)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return "\n".join(lines) + "\n"


def loads(text: str):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ModelFormatError("empty model file")
    header = lines[0].strip()
    if header == "rdwd-model v1":
        kind = "sphere"
    elif header == "hyperplane-model v1":
        kind = "hyperplane"
    else:
        raise ModelFormatError(f"unrecognized model header {header!r}")

    d = None
    scalars = {}
    entries = []
    meta = {}
    vec_tag = "O" if kind == "sphere" else "w"
    scalar_tag = "R" if kind == "sphere" else "beta"
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split(" ")
        tag = parts[0]
        try:
            if tag == "d" and len(parts) == 2:
                d = int(parts[1])
            elif tag == scalar_tag and len(parts) == 2:
                scalars[tag] = float(parts[1])
            elif tag == vec_tag and len(parts) == 3:
                entries.append((int(parts[1]), float(parts[2])))
            elif tag == "meta" and len(parts) >= 3:
                meta[parts[1]] = " ".join(parts[2:])
            else:
                raise ModelFormatError(f"line {lineno}: unexpected record {line!r}")
        except ValueError as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(f"line {lineno}: malformed number in {line!r}") from None
    if d is None or d < 1:
        raise ModelFormatError("missing or invalid dimension line")
    if scalar_tag not in scalars:
        raise ModelFormatError(f"missing {scalar_tag} line")
    vec = np.zeros(d)
    for i, v in entries:
        if not 0 <= i < d:
            raise ModelFormatError(f"index {i} out of range for d={d}")
        vec[i] = v
    if kind == "sphere":
        return SphereModel(vec, scalars["R"], iterations=int(meta.get("iterations", 0)),
                           converged=meta.get("converged", "true") == "true",
                           objective=float(meta.get("objective", "nan")), meta=meta)
    return HyperplaneModel(vec, scalars["beta"], meta.get("method", "md"), meta=meta)


def save(model, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
