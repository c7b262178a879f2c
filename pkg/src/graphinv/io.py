"""Deterministic JSON/CSV reading and writing for graphs, a-priori data and spectral data."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import MalformedInput
from .graph import AprioriData, HeightCertificate, WeightedBoundaryGraph, build_graph
from .spectral import SpectralData


def _fmt_shortest(x: float) -> str:
    return repr(float(x))


def _fmt_17(x: float) -> str:
    return format(float(x), ".17g")


def dumps(obj, float_format=_fmt_shortest, indent: int = 2) -> str:
    """JSON text with a chosen float format; key order is preserved."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            if not math.isfinite(float(o)):
                raise ValueError(f"cannot serialise non-finite number {o!r}")
            return float_format(o)
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            if len(o) == 0:
                return "[]"
            if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            items = [pad + enc(v, level + 1) for v in o]
            return "[\n" + ",\n".join(items) + "\n" + end + "]"
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(obj, 0) + "\n"


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON ({exc})") from None


def write_text(path, text: str):
    Path(path).write_text(text, encoding="utf-8")


def graph_to_json(graph: WeightedBoundaryGraph) -> str:
    return dumps(graph.to_dict())


def load_graph(path) -> WeightedBoundaryGraph:
    return build_graph(read_json(path))


def save_graph(graph: WeightedBoundaryGraph, path):
    write_text(path, graph_to_json(graph))


def load_apriori(path) -> AprioriData:
    return AprioriData.from_dict(read_json(path))


def save_apriori(apriori: AprioriData, path):
    write_text(path, dumps(apriori.to_dict()))


def spectral_to_json(data: SpectralData) -> str:
    return dumps(data.to_dict(), float_format=_fmt_17)


def load_spectral(path) -> SpectralData:
    return SpectralData.from_dict(read_json(path))


def save_spectral(data: SpectralData, path):
    write_text(path, spectral_to_json(data))


def load_certificate(path) -> HeightCertificate:
    d = read_json(path)
    try:
        return HeightCertificate(d["h"] if "h" in d else d)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"bad certificate: {exc}") from None


def save_certificate(cert: HeightCertificate, path):
    write_text(path, dumps(cert.to_dict()))


def write_trace_csv(path, field_values: np.ndarray, vertex_order):
    """Rows `vertex,t,value` ordered by vertex then time."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex", "t", "value"])
        for v, row in zip(vertex_order, field_values):
            for t, value in enumerate(row):
                w.writerow([v, t, _fmt_17(value)])
