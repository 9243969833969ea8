"""Channel description files and built-in presets.

A channel file is JSON::

    {"type": "single",
     "P_Y_given_X": [[0.9, 0.1], [0.1, 0.9]],
     "P_Z": [[0.9, 0.1], [0.1, 0.9]],
     "labels": {"X": ["0", "1"]}}

Two-user files use ``"type": "two_user"``, ``P_Y1_given_X1``, ``P_Y2_given_X2``
and a 3-axis ``P_Z`` indexed ``[x1][x2][z]``. ``labels`` is optional; each
list must match the size of its alphabet.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .capacity import SingleUserChannel
from .prob import MASS_TOLERANCE, ProbabilityError, as_cond_pmf
from .region import TwoUserChannel, example1_channel


class ChannelFileError(ValueError):
    """Malformed or invalid channel description."""


@dataclass(frozen=True)
class ChannelSpec:
    channel: SingleUserChannel | TwoUserChannel
    labels: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return "single" if isinstance(self.channel, SingleUserChannel) else "two_user"


_SINGLE_KEYS = {"P_Y_given_X": ("X", "Y"), "P_Z": ("X", "Z")}
_TWO_KEYS = {"P_Y1_given_X1": ("X1", "Y1"), "P_Y2_given_X2": ("X2", "Y2"),
             "P_Z": ("X1", "X2", "Z")}


def _matrix(obj: dict, key: str, ndim: int) -> np.ndarray:
    if key not in obj:
        raise ChannelFileError(f"missing key {key!r}")
    try:
        a = np.array(obj[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ChannelFileError(f"{key}: not a rectangular numeric array ({exc})") from None
    if a.ndim != ndim or 0 in a.shape:
        raise ChannelFileError(f"{key}: expected a non-empty {ndim}-axis array, got shape {a.shape}")
    # locate bad rows before handing over to the generic validator
    flat = a.reshape(-1, a.shape[-1])
    for i, row in enumerate(flat):
        loc = np.unravel_index(i, a.shape[:-1])
        where = "row " + ",".join(str(int(v)) for v in loc)
        if not np.all(np.isfinite(row)):
            raise ChannelFileError(f"{key} {where}: non-finite entry")
        neg = np.flatnonzero(row < 0)
        if len(neg):
            raise ChannelFileError(f"{key} {where}, column {int(neg[0])}: negative probability")
        s = row.sum()
        if abs(s - 1.0) > MASS_TOLERANCE:
            raise ChannelFileError(f"{key} {where}: sums to {s:.12g}, not 1")
    try:
        return as_cond_pmf(flat).reshape(a.shape)
    except ProbabilityError as exc:
        raise ChannelFileError(f"{key}: {exc}") from None


def _check_labels(labels, sizes: dict) -> dict:
    if labels is None:
        return {}
    if not isinstance(labels, dict):
        raise ChannelFileError("labels must be an object mapping alphabet names to lists")
    out = {}
    for name, lst in labels.items():
        if name not in sizes:
            raise ChannelFileError(f"labels: unknown alphabet {name!r} (expected one of {sorted(sizes)})")
        if not isinstance(lst, list) or len(lst) != sizes[name]:
            raise ChannelFileError(
                f"labels[{name!r}] has {len(lst) if isinstance(lst, list) else 'no'} entries, "
                f"alphabet size is {sizes[name]}"
            )
        out[name] = [str(v) for v in lst]
    return out


def parse_channel_spec(obj: dict) -> ChannelSpec:
    if not isinstance(obj, dict):
        raise ChannelFileError("top level must be a JSON object")
    kind = obj.get("type")
    if kind == "single":
        wy = _matrix(obj, "P_Y_given_X", 2)
        wz = _matrix(obj, "P_Z", 2)
        if wy.shape[0] != wz.shape[0]:
            raise ChannelFileError(
                f"P_Y_given_X has {wy.shape[0]} rows but P_Z has {wz.shape[0]}"
            )
        sizes = {"X": wy.shape[0], "Y": wy.shape[1], "Z": wz.shape[1]}
        return ChannelSpec(SingleUserChannel(wy, wz), _check_labels(obj.get("labels"), sizes))
    if kind == "two_user":
        w1 = _matrix(obj, "P_Y1_given_X1", 2)
        w2 = _matrix(obj, "P_Y2_given_X2", 2)
        wz = _matrix(obj, "P_Z", 3)
        if wz.shape[:2] != (w1.shape[0], w2.shape[0]):
            raise ChannelFileError(
                f"P_Z is indexed by {wz.shape[:2]} but P_Y1_given_X1 / P_Y2_given_X2 "
                f"have {w1.shape[0]} / {w2.shape[0]} rows"
            )
        sizes = {"X1": w1.shape[0], "Y1": w1.shape[1], "X2": w2.shape[0],
                 "Y2": w2.shape[1], "Z": wz.shape[2]}
        return ChannelSpec(TwoUserChannel(w1, w2, wz), _check_labels(obj.get("labels"), sizes))
    raise ChannelFileError(f"type must be 'single' or 'two_user', got {kind!r}")


def parse_channel_file(path) -> SingleUserChannel | TwoUserChannel:
    """Read and validate a JSON channel file."""
    return load_channel_spec(path).channel


def load_channel_spec(path) -> ChannelSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ChannelFileError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ChannelFileError(f"{path}: {exc.strerror}") from None
    try:
        return parse_channel_spec(obj)
    except ChannelFileError as exc:
        raise ChannelFileError(f"{path}: {exc}") from None


def channel_to_dict(ch, labels: dict | None = None) -> dict:
    # tolist() keeps full float precision, so json round-trips are exact
    if isinstance(ch, SingleUserChannel):
        d = {"type": "single", "P_Y_given_X": ch.p_y_given_x.tolist(),
             "P_Z": ch.p_z_given_x.tolist()}
    elif isinstance(ch, TwoUserChannel):
        d = {"type": "two_user", "P_Y1_given_X1": ch.p_y1_given_x1.tolist(),
             "P_Y2_given_X2": ch.p_y2_given_x2.tolist(), "P_Z": ch.p_z_given_x1x2.tolist()}
    else:
        raise TypeError(f"not a channel: {type(ch).__name__}")
    if labels:
        d["labels"] = labels
    return d


def serialize_channel(ch, labels: dict | None = None) -> str:
    return json.dumps(channel_to_dict(ch, labels), indent=1)


def bsc(p: float) -> np.ndarray:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover probability {p} outside [0, 1]")
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def preset(name: str) -> SingleUserChannel | TwoUserChannel:
    """Built-in channels: ``example1``, ``bsc:<p>`` (Y = Z = BSC output), ``identity:<k>``."""
    head, _, arg = name.partition(":")
    try:
        if head == "example1" and not arg:
            return example1_channel()
        if head == "bsc" and arg:
            w = bsc(float(arg))
            return SingleUserChannel(w, w)
        if head == "identity" and arg:
            k = int(arg)
            if k < 1:
                raise ValueError("alphabet size must be positive")
            return SingleUserChannel(np.eye(k), np.eye(k))
    except ValueError as exc:
        raise ChannelFileError(f"preset {name!r}: {exc}") from None
    raise ChannelFileError(f"unknown preset {name!r} (try example1, bsc:<p>, identity:<k>)")


def resolve_channel(name_or_path: str) -> SingleUserChannel | TwoUserChannel:
    """A file path if one exists, otherwise a preset name."""
    if os.path.exists(name_or_path):
        return parse_channel_file(name_or_path)
    return preset(name_or_path)
