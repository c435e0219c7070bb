"""JSON run configuration shared by all CLI subcommands."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import control as ctl
from .dynamics import MAX_DT, EvolutionConfig
from .spectral import HermiteBasis, SpectralState, build_basis, ground_state, read_state_csv


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dim: int = 1
    n_modes: int = 32
    sigma: int = 1
    T: float = 1.0
    dt: float = 1e-3
    integrator: str = "strang"
    control: dict = field(default_factory=lambda: {"kind": "zero"})
    initial_state: object = "ground"
    seed: int = 0
    output_dir: str = "out"
    picard_tol: float = 1e-12
    picard_max_iter: int = 60
    snapshot_every: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(ok, name, why):
            if not ok:
                raise ConfigError(f"{name}: {why}")

        def is_int(v):
            return isinstance(v, (int, np.integer)) and not isinstance(v, bool)

        def is_num(v):
            return isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)

        need(is_int(self.dim) and self.dim in (1, 2, 3), "dim", "must be 1, 2 or 3")
        need(is_int(self.n_modes) and self.n_modes >= 2 and self.n_modes % 2 == 0, "n_modes",
             "must be an even integer >= 2")
        need(is_int(self.sigma) and self.sigma in (0, 1), "sigma", "must be 0 or 1")
        need(is_num(self.T) and self.T > 0, "T", "must be a positive number")
        need(is_num(self.dt) and 0 < self.dt <= MAX_DT, "dt", f"must lie in (0, {MAX_DT}]")
        need(self.integrator in ("strang", "picard"), "integrator", "must be 'strang' or 'picard'")
        need(is_int(self.seed) and 0 <= self.seed < 2 ** 64, "seed", "must be an unsigned 64-bit integer")
        need(isinstance(self.output_dir, str) and self.output_dir != "", "output_dir", "must be a non-empty string")
        need(is_num(self.picard_tol) and self.picard_tol > 0, "picard_tol", "must be positive")
        need(is_int(self.picard_max_iter) and self.picard_max_iter >= 1, "picard_max_iter", "must be >= 1")
        need(is_int(self.snapshot_every) and self.snapshot_every >= 1, "snapshot_every", "must be >= 1")
        need(isinstance(self.control, dict), "control", "must be a JSON object")
        try:
            self.build_control()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"control: {exc}") from exc
        init = self.initial_state
        if isinstance(init, str):
            need(init == "ground", "initial_state", "string form must be 'ground'")
        elif isinstance(init, dict) and set(init) == {"file"}:
            need(isinstance(init["file"], str), "initial_state", "'file' must be a path")
        elif isinstance(init, dict) and set(init) == {"coeffs"}:
            for row in init["coeffs"]:
                need(isinstance(row, (list, tuple)) and len(row) == self.dim + 2, "initial_state",
                     f"coefficient rows must be [k_1..k_{self.dim}, re, im]")
                need(all(is_int(k) and 0 <= k < self.n_modes for k in row[: self.dim]), "initial_state",
                     f"indices must lie in 0..{self.n_modes - 1}")
        else:
            raise ConfigError("initial_state: expected 'ground', {'file': path} or {'coeffs': [...]}")

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown key")
        return cls(**d)

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def basis(self) -> HermiteBasis:
        return build_basis(self.dim, self.n_modes)

    def build_control(self) -> ctl.ControlSignal:
        u = ctl.from_json(self.control, horizon=self.T)
        if u.horizon is not None and u.horizon < self.T * (1 - 1e-12):
            raise ValueError(f"control domain ends at {u.horizon} < T = {self.T}")
        return u

    def evolution(self) -> EvolutionConfig:
        return EvolutionConfig(self.sigma, self.dt, self.T, self.integrator, self.picard_tol, self.picard_max_iter)

    def initial(self) -> SpectralState:
        b = self.basis()
        init = self.initial_state
        if init == "ground":
            return ground_state(b)
        if "file" in init:
            try:
                return read_state_csv(init["file"], b)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"initial_state: {exc}") from exc
        c = np.zeros(b.shape, complex)
        for row in init["coeffs"]:
            c[tuple(row[: self.dim])] = complex(row[-2], row[-1])
        return SpectralState(b, c)
