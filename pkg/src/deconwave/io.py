"""Flat-file formats.

All files are UTF-8, comma-separated, with a header row.  Observation and
kernel files may start with ``# key = <json>`` metadata lines.

* observations / kernels: ``l,v,re,im`` (``v`` counts channels from 1)
* signals: ``t,value``
* coefficients: ``j,k,re,im,block,kept`` (``block = -1`` marks the
  approximation coefficients at level ``j1``)
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .fourier import FourierSeries
from .model import BlurKernel, ChannelSet, ObservationSet


def fmt(x) -> str:
    """Shortest round-trip text for a float; ``inf`` is written as ``exact``."""
    x = float(x)
    if math.isinf(x) and x > 0:
        return "exact"
    return repr(x)


def parse_float(text: str) -> float:
    return math.inf if text == "exact" else float(text)


def _read_with_meta(path):
    meta, rows = {}, []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = json.loads(value)
            else:
                lines.append(line)
    reader = csv.DictReader(lines)
    rows = list(reader)
    return meta, reader.fieldnames, rows


def _write_with_meta(path, meta, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, value in meta.items():
            fh.write(f"# {key} = {json.dumps(value)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _spectral_rows(matrix, nmax):
    for i, l in enumerate(range(-nmax, nmax + 1)):
        for v in range(matrix.shape[1]):
            z = matrix[i, v]
            yield (l, v + 1, fmt(z.real), fmt(z.imag))


def _spectral_matrix(rows):
    ell = np.array([int(r["l"]) for r in rows])
    v = np.array([int(r["v"]) for r in rows]) - 1
    vals = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
    nmax = int(np.abs(ell).max())
    out = np.full((2 * nmax + 1, v.max() + 1), np.nan + 0j)
    out[ell + nmax, v] = vals
    if np.isnan(out.real).any():
        raise ValueError("spectral table does not cover a full -nmax..nmax band for every channel")
    return out


def write_observations(path, obs: ObservationSet, **meta):
    meta = {"epsilon": obs.epsilon, "seed": obs.seed, **obs.meta, **meta}
    _write_with_meta(path, meta, ["l", "v", "re", "im"], _spectral_rows(obs.y, obs.nmax))


def read_observations(path) -> ObservationSet:
    meta, _, rows = _read_with_meta(path)
    y = _spectral_matrix(rows)
    eps = meta.pop("epsilon")
    seed = meta.pop("seed", None)
    return ObservationSet(y, float(eps), seed, meta)


def write_kernels(path, channels: ChannelSet):
    nmax = channels.nmax
    ell = np.arange(-nmax, nmax + 1)
    meta = {
        "delta": channels.delta,
        "sigmas": [float(s) for s in channels.sigmas],
        "taus": [k.tau for k in channels.kernels],
    }
    _write_with_meta(path, meta, ["l", "v", "re", "im"],
                     _spectral_rows(channels.transfer_matrix(ell), nmax))


def read_kernels(path) -> ChannelSet:
    meta, _, rows = _read_with_meta(path)
    matrix = _spectral_matrix(rows)
    taus = meta.get("taus") or [None] * matrix.shape[1]
    kernels = tuple(
        BlurKernel(sigma=s, delta=meta["delta"], transfer=FourierSeries(matrix[:, v]), tau=tau)
        for v, (s, tau) in enumerate(zip(meta["sigmas"], taus))
    )
    return ChannelSet(kernels)


def write_signal(path, values, t=None):
    values = np.asarray(values, dtype=float)
    if t is None:
        t = np.arange(values.size) / values.size
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        w.writerows((fmt(a), fmt(b)) for a, b in zip(t, values))


def read_signal(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["t"]) for r in rows]),
            np.array([float(r["value"]) for r in rows]))


def coefficient_rows(coeffs, layouts=None, kept=None):
    """Rows ``(j, k, re, im, block, kept)`` for every coefficient."""
    for k, a in enumerate(coeffs.alpha):
        yield (coeffs.j1, k, a.real, a.imag, -1, True)
    for i, (j, beta) in enumerate(zip(coeffs.levels, coeffs.beta)):
        ids = layouts[i].block_ids if layouts is not None else np.full(beta.size, -1)
        flags = kept[i] if kept is not None else np.abs(beta) > 0
        for k, b in enumerate(beta):
            yield (j, k, b.real, b.imag, int(ids[k]), bool(flags[k]))


def write_coefficients(path, coeffs, layouts=None, kept=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "k", "re", "im", "block", "kept"])
        for j, k, re, im, block, flag in coefficient_rows(coeffs, layouts, kept):
            w.writerow([j, k, fmt(re), fmt(im), block, int(flag)])


def read_coefficients(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
