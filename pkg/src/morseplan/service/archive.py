"""Self-describing surface archive: JSON header + raw float64 sections.

Layout:  16-byte magic | uint64 header length | canonical-JSON header |
concatenated little-endian float64 arrays.  The header carries an array
directory (name, offset, shape), the config, frontier topology, and engine
metadata, so a reader needs nothing but this file.  Loading and re-saving
produces identical bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..serialize import canonical_json
from ..surface import ControlGrid, FrontierSet, ProbabilitySurface
from .config import PlanConfig, config_to_dict, parse_config

__all__ = ["SurfaceArchive", "ArchiveError"]

_MAGIC = b"MORSEPLAN-SURF1\n"


class ArchiveError(RuntimeError):
    """Unreadable or corrupt archive file."""


@dataclass
class SurfaceArchive:
    """Everything a consumer needs to answer queries against one build."""

    config: PlanConfig
    surface: ProbabilitySurface
    frontiers: FrontierSet | None = None
    _meta: dict = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        arrays: list[tuple[str, np.ndarray]] = [
            ("y_nodes", self.surface.grid.y_nodes),
            ("xi_nodes", self.surface.grid.xi_nodes),
            ("p_values", self.surface.p_values),
            ("raw_values", self.surface.raw_values),
        ]
        frontier_header = None
        if self.frontiers is not None:
            frontier_header = {"levels": list(self.frontiers.levels),
                               "empty_levels": list(self.frontiers.empty_levels),
                               "polyline_counts": []}
            for li, level in enumerate(self.frontiers.levels):
                pls = self.frontiers.polylines.get(level, [])
                frontier_header["polyline_counts"].append(len(pls))
                for pi, pol in enumerate(pls):
                    arrays.append((f"frontier/{li}/poly/{pi}", np.asarray(pol, dtype=float)))
                    res = self.frontiers.residuals.get(level, [])
                    arrays.append((f"frontier/{li}/res/{pi}", np.asarray(res[pi], dtype=float)))

        directory = []
        offset = 0
        blobs = []
        for name, arr in arrays:
            a = np.ascontiguousarray(arr, dtype="<f8")
            directory.append({"name": name, "offset": offset, "shape": list(a.shape)})
            blobs.append(a.tobytes())
            offset += a.nbytes

        header = {
            "format": "morseplan-surface",
            "version": 1,
            "engine_version": self.surface.meta.get("engine_version", ""),
            "config": config_to_dict(self.config),
            "provenance": self.surface.grid.provenance,
            "meta": self.surface.meta,
            "frontiers": frontier_header,
            "arrays": directory,
        }
        header_bytes = canonical_json(header).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<Q", len(header_bytes)))
            fh.write(header_bytes)
            for blob in blobs:
                fh.write(blob)

    @staticmethod
    def load(path: str | Path) -> "SurfaceArchive":
        raw = Path(path).read_bytes()
        if raw[: len(_MAGIC)] != _MAGIC:
            raise ArchiveError(f"{path}: not a surface archive (bad magic)")
        (hlen,) = struct.unpack_from("<Q", raw, len(_MAGIC))
        hstart = len(_MAGIC) + 8
        import json

        try:
            header = json.loads(raw[hstart : hstart + hlen].decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ArchiveError(f"{path}: corrupt header: {exc}") from exc
        body = raw[hstart + hlen :]

        def read_array(entry):
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            start = entry["offset"]
            return np.frombuffer(body, dtype="<f8", count=count, offset=start).reshape(shape).copy()

        arrays = {e["name"]: read_array(e) for e in header["arrays"]}
        config = parse_config(header["config"])
        grid = ControlGrid(y_nodes=arrays["y_nodes"], xi_nodes=arrays["xi_nodes"],
                           provenance=header["provenance"])
        surface = ProbabilitySurface(grid=grid, p_values=arrays["p_values"],
                                     raw_values=arrays["raw_values"], meta=header["meta"])
        frontiers = None
        fh = header.get("frontiers")
        if fh is not None:
            polylines = {}
            residuals = {}
            for li, level in enumerate(fh["levels"]):
                pls = []
                ress = []
                for pi in range(fh["polyline_counts"][li]):
                    pls.append(arrays[f"frontier/{li}/poly/{pi}"])
                    ress.append(arrays[f"frontier/{li}/res/{pi}"])
                polylines[float(level)] = pls
                residuals[float(level)] = ress
            frontiers = FrontierSet(levels=tuple(float(l) for l in fh["levels"]),
                                    polylines=polylines, residuals=residuals,
                                    empty_levels=tuple(float(l) for l in fh["empty_levels"]))
        return SurfaceArchive(config=config, surface=surface, frontiers=frontiers,
                              _meta=header.get("meta", {}))

    def to_csv(self, path: str | Path) -> None:
        """Long-format CSV export: one row per grid node."""
        grid = self.surface.grid
        with open(path, "w") as fh:
            fh.write("y,xi,p,p_raw\n")
            for j, xi in enumerate(grid.xi_nodes):
                for i, y in enumerate(grid.y_nodes):
                    fh.write(f"{float(y)!r},{float(xi)!r},"
                             f"{float(self.surface.p_values[i, j])!r},"
                             f"{float(self.surface.raw_values[i, j])!r}\n")
