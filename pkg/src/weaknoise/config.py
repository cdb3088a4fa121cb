"""
Run configuration stored as a YAML document.

Every field has a default, so an empty file is a valid configuration.
:meth:`RunConfig.to_yaml` emits a canonical form (sorted keys, fixed float
formatting) whose hash identifies a run in output headers.
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .errors import ContractError
from .maps import MapSpec, linear_map, polynomial_map, quartic_map
from .operators import NoiseKernel, kernel_moments
from .spectral import MatrixSizes

__all__ = ["RunConfig", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one cycles -> perturb -> direct run.

    ``map`` is ``{"name": "quartic"}``, ``{"name": "linear", "slope": L}`` or
    ``{"name": "polynomial", "coefficients": [...], "breakpoints": [...],
    "domain": [lo, hi]}``.  ``kernel`` is ``{"kind": "gaussian"}`` or
    ``{"kind": "custom", "moments": [...]}``.  ``sizes`` maps the trace
    order ``n`` to the L-matrix size, with ``default`` for all other orders;
    a ``sizes`` entry in a file replaces the default table as a whole.
    """

    map: dict = field(default_factory=lambda: {"name": "quartic"})
    kernel: dict = field(default_factory=lambda: {"kind": "gaussian"})
    n_max: int = 10
    sigma_order: int = 10
    sizes: dict = field(default_factory=lambda: {"default": 16, 1: 26, 2: 20})
    sigma_grid: tuple = (0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08,
                         0.1, 0.12, 0.15, 0.2, 0.25, 0.3)
    direct: dict = field(default_factory=lambda: {"basis_size": 30, "lattice_bins": 1024})
    out: str = "out"
    workers: int = 1
    tolerances: dict = field(default_factory=lambda: {
        "cycle_residual": 1e-12,
        "newton": 1e-13,
        "quadrature": 1e-10,
    })

    def __post_init__(self):
        if self.n_max < 1 or self.sigma_order < 0:
            raise ContractError("n_max must be >= 1 and sigma_order >= 0")
        if any(int(v) < 1 for v in self.sizes.values()):
            raise ContractError("matrix sizes must be positive")
        if "default" not in self.sizes:
            raise ContractError("sizes needs a 'default' entry")
        grid = list(self.sigma_grid)
        if any(s < 0 for s in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ContractError("sigma_grid must be non-negative and ascending")
        for k, v in self.tolerances.items():
            if not 0.0 < float(v) < 1.0:
                raise ContractError(f"tolerance {k} must lie in (0, 1)")
        if self.workers < 1:
            raise ContractError("workers must be >= 1")
        object.__setattr__(self, "sigma_grid", tuple(float(s) for s in grid))
        sizes = {("default" if k == "default" else int(k)): int(v) for k, v in self.sizes.items()}
        object.__setattr__(self, "sizes", sizes)

    # ------------------------------------------------------------------ io

    @classmethod
    def from_dict(cls, data: dict | None) -> "RunConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        base = cls()
        merged = {}
        for f in fields(cls):
            if f.name not in data:
                continue
            value = data[f.name]
            default = getattr(base, f.name)
            if isinstance(default, dict) and f.name not in ("map", "kernel", "sizes"):
                value = {**default, **(value or {})}
            merged[f.name] = value
        return cls(**merged)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sigma_grid"] = list(self.sigma_grid)
        return d

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        return cls.from_dict(yaml.safe_load(text))

    def to_yaml(self) -> str:
        d = self.to_dict()
        d["sizes"] = {str(k): v for k, v in d["sizes"].items()}
        return yaml.safe_dump(d, sort_keys=True, default_flow_style=None)

    def digest(self) -> str:
        """Hash of the parameters that determine the results.

        ``out`` and ``workers`` are excluded: neither changes any number.
        """
        d = yaml.safe_load(self.to_yaml())
        del d["out"], d["workers"]
        text = yaml.safe_dump(d, sort_keys=True, default_flow_style=None)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_overrides(self, **kw: Any) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    # ------------------------------------------------------------- builders

    def build_map(self) -> MapSpec:
        m = dict(self.map)
        name = m.pop("name", None)
        if name == "quartic":
            return quartic_map()
        if name == "linear":
            return linear_map(float(m.get("slope", 2.0)))
        if name == "polynomial":
            return polynomial_map(
                m["coefficients"],
                m.get("breakpoints", ()),
                tuple(m.get("domain", (0.0, 1.0))),
                name=m.get("label", "polynomial"),
                basis_center=m.get("basis_center"),
            )
        raise ContractError(f"unknown map {name!r}")

    def build_kernel(self) -> NoiseKernel:
        k = dict(self.kernel)
        return kernel_moments(k.get("kind", "gaussian"), self.sigma_order, k.get("moments"))

    def build_sizes(self) -> MatrixSizes:
        by_length = {k: v for k, v in self.sizes.items() if k != "default"}
        return MatrixSizes(default=self.sizes["default"], by_length=by_length)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig.from_yaml(Path(path).read_text())
