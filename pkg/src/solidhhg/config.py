"""Run configuration: loading, unit conversion, overrides and fingerprinting.

Config files are TOML (hand-written) or JSON (machine-generated), organized in
sections. Quantities may carry a unit suffix (``"4.0 GV/m"``, ``"300 fs"``,
``"5.2 A"``); bare numbers are read as atomic units, which is also how
``RunConfig.to_dict`` serializes them, so a dumped config reloads exactly.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .bands import DEFAULT_M, DEFAULT_NBANDS, DEFAULT_NK
from .dynamics import RelaxationRates
from .errors import ConfigError
from .potential import CosineParams, PotentialKind, PotentialSpec, SinhParams
from .pulse import DEFAULT_DURATION, DEFAULT_F0, DEFAULT_WAVELENGTH, PulseParams
from .units import gvm_to_au, parse_quantity, wavelength_to_omega

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENT_MODES = ("full", "single", "pair", "interval", "list")
DEFAULT_FRACTIONS = (0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_F0_LIST = tuple(gvm_to_au(f) for f in (0.25, 0.5, 0.75, 1.0))


@dataclass(frozen=True)
class BandOptions:
    n_k: int = DEFAULT_NK
    n_bands: int = DEFAULT_NBANDS
    M: int = DEFAULT_M
    valence_index: int | str = 0
    energy_ceiling: float = math.inf


@dataclass(frozen=True)
class IntegratorOptions:
    dt: float | None = None
    steps_per_cycle: int = 512
    tail: float = 0.0


@dataclass(frozen=True)
class SpectrumOptions:
    window: str = "hann"
    pad_factor: int = 4
    max_order: int | None = None


@dataclass(frozen=True)
class ExperimentOptions:
    mode: str = "full"
    k_index: int | None = None
    k: float | None = None
    fraction: float | None = None
    indices: tuple[int, ...] = ()
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    F0_list: tuple[float, ...] = DEFAULT_F0_LIST


@dataclass(frozen=True)
class RunConfig:
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    bands: BandOptions = field(default_factory=BandOptions)
    pulse: PulseParams = field(default_factory=lambda: PulseParams.from_field(DEFAULT_F0))
    relaxation: RelaxationRates = field(default_factory=RelaxationRates)
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    spectrum: SpectrumOptions = field(default_factory=SpectrumOptions)
    experiment: ExperimentOptions = field(default_factory=ExperimentOptions)
    output_dir: str = "runs/default"

    def to_dict(self) -> dict:
        p = self.potential
        return {
            "potential": {
                "kind": p.kind.value,
                "lattice_constant": p.lattice_constant,
                "cosine": {"U0": p.cosine.U0, "width_ratio": p.cosine.width_ratio,
                           "centers": list(p.cosine.centers)},
                "sinh": {"U_shift": p.sinh.U_shift, "U0": p.sinh.U0, "centers": list(p.sinh.centers)},
            },
            "bands": {
                "n_k": self.bands.n_k,
                "n_bands": self.bands.n_bands,
                "M": self.bands.M,
                "valence_index": self.bands.valence_index,
                "energy_ceiling": None if math.isinf(self.bands.energy_ceiling) else self.bands.energy_ceiling,
            },
            "pulse": {
                "A0": self.pulse.A0,
                "wavelength": self.pulse.wavelength,
                "duration": self.pulse.tau,
                "cep": self.pulse.phi,
            },
            "relaxation": {"gamma_d": self.relaxation.gamma_d, "gamma_od": self.relaxation.gamma_od},
            "integrator": {
                "dt": self.integrator.dt,
                "steps_per_cycle": self.integrator.steps_per_cycle,
                "tail": self.integrator.tail,
            },
            "spectrum": {
                "window": self.spectrum.window,
                "pad_factor": self.spectrum.pad_factor,
                "max_order": self.spectrum.max_order,
            },
            "experiment": {
                "mode": self.experiment.mode,
                "k_index": self.experiment.k_index,
                "k": self.experiment.k,
                "fraction": self.experiment.fraction,
                "indices": list(self.experiment.indices),
                "fractions": list(self.experiment.fractions),
                "F0_list": list(self.experiment.F0_list),
            },
            "output": {"dir": self.output_dir},
        }

    def physics_dict(self) -> dict:
        """The part of the config that determines per-k currents."""
        d = self.to_dict()
        return {key: d[key] for key in ("potential", "bands", "pulse", "relaxation", "integrator")}

    def fingerprint(self) -> str:
        """Hash of everything except the output location."""
        d = self.to_dict()
        d.pop("output")
        return _hash(d)

    def physics_fingerprint(self) -> str:
        return _hash(self.physics_dict())

    def with_field(self, F0: float) -> "RunConfig":
        p = self.pulse
        return replace(self, pulse=PulseParams.from_field(F0, p.wavelength, p.tau, p.phi))

    def with_cep(self, phi: float) -> "RunConfig":
        return replace(self, pulse=replace(self.pulse, phi=phi))


def _hash(d: dict) -> str:
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode()).hexdigest()


# --- parsing -------------------------------------------------------------

_SCHEMA: dict[str, Any] = {
    "potential": {
        "kind": None,
        "lattice_constant": None,
        "cosine": {"U0": None, "width_ratio": None, "centers": None},
        "sinh": {"U_shift": None, "U0": None, "centers": None},
    },
    "bands": {"n_k": None, "n_bands": None, "M": None, "valence_index": None, "energy_ceiling": None},
    "pulse": {"F0": None, "A0": None, "wavelength": None, "duration": None, "cep": None},
    "relaxation": {"gamma_d": None, "gamma_od": None},
    "integrator": {"dt": None, "steps_per_cycle": None, "tail": None},
    "spectrum": {"window": None, "pad_factor": None, "max_order": None},
    "experiment": {"mode": None, "k_index": None, "k": None, "fraction": None, "indices": None,
                   "fractions": None, "F0_list": None},
    "output": {"dir": None},
}


def _check_keys(data: dict, schema: dict, prefix: str = "") -> None:
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a table of keys")
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(path, "unknown key")
        if isinstance(schema[key], dict):
            _check_keys(value, schema[key], path + ".")


def _get(d: dict, path: str, default=None):
    cur = d
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return default
        cur = cur[part]
    return cur


def _int(value, key) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return int(value)


def _float(value, key) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    return float(value)


def _floats(value, key) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(key, f"expected a list, got {value!r}")
    return tuple(_float(v, f"{key}[{i}]") for i, v in enumerate(value))


def _opt(d, path, conv, default):
    v = _get(d, path)
    return default if v is None else conv(v, path)


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a nested dict; missing keys take the defaults."""
    _check_keys(data, _SCHEMA)
    q = parse_quantity

    kind_raw = _get(data, "potential.kind", "cosine")
    try:
        kind = PotentialKind(str(kind_raw).lower())
    except ValueError:
        raise ConfigError("potential.kind", f"must be 'cosine' or 'sinh', got {kind_raw!r}") from None
    dc, ds = CosineParams(), SinhParams()
    cosine = CosineParams(
        U0=_opt(data, "potential.cosine.U0", lambda v, k: q(v, "energy", k), dc.U0),
        width_ratio=_opt(data, "potential.cosine.width_ratio", _float, dc.width_ratio),
        centers=_opt(data, "potential.cosine.centers", _floats, dc.centers),
    )
    sinh = SinhParams(
        U_shift=_opt(data, "potential.sinh.U_shift", lambda v, k: q(v, "energy", k), ds.U_shift),
        U0=_opt(data, "potential.sinh.U0", lambda v, k: q(v, "energy", k), ds.U0),
        centers=_opt(data, "potential.sinh.centers", _floats, ds.centers),
    )
    base = PotentialSpec()
    potential = PotentialSpec(
        kind=kind,
        lattice_constant=_opt(data, "potential.lattice_constant", lambda v, k: q(v, "length", k),
                              base.lattice_constant),
        cosine=cosine,
        sinh=sinh,
    )

    vi = _get(data, "bands.valence_index", 0)
    if vi != "auto":
        vi = _int(vi, "bands.valence_index")
    bands = BandOptions(
        n_k=_opt(data, "bands.n_k", _int, DEFAULT_NK),
        n_bands=_opt(data, "bands.n_bands", _int, DEFAULT_NBANDS),
        M=_opt(data, "bands.M", _int, DEFAULT_M),
        valence_index=vi,
        energy_ceiling=_opt(data, "bands.energy_ceiling", lambda v, k: q(v, "energy", k), math.inf),
    )
    if bands.n_k < 1 or bands.n_k % 2 == 0:
        raise ConfigError("bands.n_k", f"must be a positive odd integer, got {bands.n_k}")
    if bands.M < 1:
        raise ConfigError("bands.M", "must be >= 1")
    if not 2 <= bands.n_bands <= 2 * bands.M + 1:
        raise ConfigError("bands.n_bands", f"must lie in [2, 2M+1], got {bands.n_bands}")

    wavelength = _opt(data, "pulse.wavelength", lambda v, k: q(v, "length", k), DEFAULT_WAVELENGTH)
    tau = _opt(data, "pulse.duration", lambda v, k: q(v, "time", k), DEFAULT_DURATION)
    phi = _opt(data, "pulse.cep", _float, 0.0)
    F0 = _get(data, "pulse.F0")
    A0 = _get(data, "pulse.A0")
    if F0 is not None and A0 is not None:
        raise ConfigError("pulse", "give either F0 or A0, not both")
    if wavelength <= 0:
        raise ConfigError("pulse.wavelength", "must be positive")
    if A0 is not None:
        pulse = PulseParams(_float(A0, "pulse.A0"), wavelength, tau, phi)
    else:
        f = DEFAULT_F0 if F0 is None else q(F0, "field", "pulse.F0")
        pulse = PulseParams(f / wavelength_to_omega(wavelength), wavelength, tau, phi)

    rd = RelaxationRates()
    relaxation = RelaxationRates(
        gamma_d=_opt(data, "relaxation.gamma_d", lambda v, k: q(v, "rate", k), rd.gamma_d),
        gamma_od=_opt(data, "relaxation.gamma_od", lambda v, k: q(v, "rate", k), rd.gamma_od),
    )

    integrator = IntegratorOptions(
        dt=_opt(data, "integrator.dt", lambda v, k: q(v, "time", k), None),
        steps_per_cycle=_opt(data, "integrator.steps_per_cycle", _int, 512),
        tail=_opt(data, "integrator.tail", lambda v, k: q(v, "time", k), 0.0),
    )
    if integrator.dt is not None and integrator.dt <= 0:
        raise ConfigError("integrator.dt", "must be positive")
    if integrator.steps_per_cycle < 1:
        raise ConfigError("integrator.steps_per_cycle", "must be >= 1")
    if integrator.tail < 0:
        raise ConfigError("integrator.tail", "must be >= 0")

    window = str(_get(data, "spectrum.window", "hann")).lower()
    if window not in ("hann", "rect"):
        raise ConfigError("spectrum.window", f"must be 'hann' or 'rect', got {window!r}")
    spectrum = SpectrumOptions(
        window=window,
        pad_factor=_opt(data, "spectrum.pad_factor", _int, 4),
        max_order=_opt(data, "spectrum.max_order", _int, None),
    )
    if spectrum.pad_factor < 1:
        raise ConfigError("spectrum.pad_factor", "must be >= 1")

    mode = str(_get(data, "experiment.mode", "full")).lower()
    if mode not in EXPERIMENT_MODES:
        raise ConfigError("experiment.mode", f"must be one of {EXPERIMENT_MODES}, got {mode!r}")
    experiment = ExperimentOptions(
        mode=mode,
        k_index=_opt(data, "experiment.k_index", _int, None),
        k=_opt(data, "experiment.k", _float, None),
        fraction=_opt(data, "experiment.fraction", _float, None),
        indices=tuple(_int(v, f"experiment.indices[{i}]") for i, v in enumerate(_get(data, "experiment.indices") or [])),
        fractions=_opt(data, "experiment.fractions", _floats, DEFAULT_FRACTIONS),
        F0_list=tuple(q(v, "field", f"experiment.F0_list[{i}]")
                      for i, v in enumerate(_get(data, "experiment.F0_list", DEFAULT_F0_LIST))),
    )
    out = _get(data, "output.dir", "runs/default")
    return RunConfig(potential, bands, pulse, relaxation, integrator, spectrum, experiment, str(out))


def _parse_value(text: str):
    """Interpret a ``--set`` value as TOML when possible, else as a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.path=value`` strings to a nested dict (returns a copy)."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like section.key=value")
        key, text = item.split("=", 1)
        key = key.strip()
        parts = key.split(".")
        cur = data
        for part in parts[:-1]:
            cur = cur.setdefault(part, {})
            if not isinstance(cur, dict):
                raise ConfigError(key, "path crosses a non-table value")
        cur[parts[-1]] = _parse_value(text.strip())
        if parts[-1] in ("F0", "A0") and parts[0] == "pulse":
            cur.pop("A0" if parts[-1] == "F0" else "F0", None)
    return data


def read_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config file: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(str(path), f"malformed config file: {exc}") from exc


def load_config(path=None, overrides=None) -> RunConfig:
    """RunConfig from an optional file plus ``section.key=value`` overrides."""
    data = read_config_file(path) if path is not None else {}
    return config_from_dict(apply_overrides(data, overrides))
