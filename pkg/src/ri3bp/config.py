"""Run configuration shared by the CLI and the verification suite."""

import hashlib
import json
from dataclasses import asdict, dataclass, fields

from .dynamics import ClassifyThresholds, IntegratorSettings
from .errors import DomainError


@dataclass(frozen=True)
class RunConfig:
    G: float = 2.0
    G0: float = 1.0
    tol_int: float = 1e-12
    tol_bisect: float = 1e-12
    tol_newton: float = 1e-10
    r_switch: float = 1e3
    r_floor: float = 1e-8
    # stable-manifold tables
    table_r_min: float = 10.0
    table_r_max: float = 40.0
    table_n_r: int = 7
    table_n_t: int = 16
    r_far: float = 1e4
    band_c: float = 10.0
    # classification
    min_horizon: float = 1e3
    r_esc: float = 1e3
    e_min: float = 1e-4
    r_bound: float = 1e2
    k_alternations: int = 3
    # windows and grids
    window_lo: float = 3.0
    window_hi: float = 10.0
    n_samples: int = 41
    half_width_periods: int = 4
    nodes_per_period: int = 512
    # connectors and multibumps
    eps0: float = 0.05
    eps_hyp: float = 0.005
    shadow_fraction: float = 0.1
    twobody: bool = False
    seed: int = 0
    output_dir: str = "out"

    def __post_init__(self):
        for name in ("tol_int", "tol_bisect", "tol_newton"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.G0 == 0:
            raise DomainError("G0 must be nonzero")
        if self.window_hi <= self.window_lo:
            raise DomainError("window must be increasing")

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data):
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **kw):
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig.from_dict(d)

    def digest(self):
        """Short hash of the canonical JSON form (output directory excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def half_width(self):
        import math

        return 2.0 * math.pi * self.half_width_periods

    def settings(self):
        return IntegratorSettings(tol=self.tol_int, r_switch=self.r_switch,
                                  r_floor=self.r_floor, twobody=self.twobody)

    def thresholds(self):
        return ClassifyThresholds(self.min_horizon, self.r_esc, self.e_min, self.r_bound,
                                  self.k_alternations)

    def tolerances(self):
        return {"integration": self.tol_int, "bisection": self.tol_bisect,
                "newton": self.tol_newton}
