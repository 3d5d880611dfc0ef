"""Run configuration: YAML with unit-suffixed keys.

One file drives every subcommand; the CLI overrides seed/budget/threads
from flags. Switch-model element values are mandatory inputs (transcribe
them from the switch vendor's datasheet); nothing here hard-codes them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .em_model import (FrequencyGrid, PowerAngularSpectrum, SurrogateParams,
                       load_network, load_pattern_bundle, synth_pixel_surrogate)
from .impm import CircuitBranch, SwitchModel
from .numerics import QuadratureGrid, build_quadrature
from .search import GAParams


def _num(value, name):
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number, got {value!r}") from exc


def _numeric_dict(d: dict, context: str) -> dict:
    out = {}
    for key, value in d.items():
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                pass
        out[key] = value
    return out


@dataclass
class RunConfig:
    # model source: either explicit files or surrogate parameters
    network_path: str | None = None
    pattern_bundle_path: str | None = None
    surrogate: dict | None = None
    # design targets
    n_ports: int = 12
    aperture_wavelengths: float = 0.5
    p_switches: int = 6
    z0_ohm: float = 50.0
    # frequency window
    f_lower_hz: float = 2.5e9
    f_upper_hz: float = 2.5e9
    t_samples: int = 1
    # PAS and quadrature
    pas_support: str = "upper-hemisphere"
    pas_density: float = 1.0
    n_theta: int = 64
    n_phi: int = 128
    # switch model (mandatory for search/eval)
    switch_on: dict | None = None
    switch_off: dict | None = None
    # GA
    ga: dict = field(default_factory=dict)
    # search controls
    seed: int = 0
    budget: int = 10_000
    target_matched_sets: int = 100
    threads: int = 1
    # reporting
    figures: bool = True
    # eval-only: fixed configuration space for a user-supplied state table
    switch_positions: list | None = None
    hardwire_x: list | None = None
    # provenance
    source_path: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        # PyYAML reads exponent literals without a sign (2.5e9) as strings
        for name in ("aperture_wavelengths", "z0_ohm", "f_lower_hz",
                     "f_upper_hz", "pas_density"):
            setattr(self, name, _num(getattr(self, name), name))
        for name in ("n_ports", "p_switches", "t_samples", "n_theta", "n_phi",
                     "seed", "budget", "target_matched_sets", "threads"):
            setattr(self, name, int(_num(getattr(self, name), name)))
        if self.z0_ohm <= 0:
            raise ConfigError("z0_ohm must be positive")
        if self.n_ports > 2 ** self.p_switches:
            raise ConfigError(
                f"n_ports={self.n_ports} exceeds 2^P={2 ** self.p_switches}: "
                "no single matched set can supply enough states"
            )
        if self.surrogate is None and self.network_path is None:
            raise ConfigError("config needs either model paths or surrogate parameters")
        for key in ("network_path", "pattern_bundle_path"):
            value = getattr(self, key)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{key} does not exist: {value}")

    # -- builders ----------------------------------------------------------

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.f_lower_hz, self.f_upper_hz, self.t_samples)

    def quadrature(self) -> QuadratureGrid:
        return build_quadrature(self.pas_support, self.n_theta, self.n_phi)

    def pas(self) -> PowerAngularSpectrum:
        return PowerAngularSpectrum(self.pas_support, self.pas_density)

    def surrogate_params(self) -> SurrogateParams:
        if self.surrogate is None:
            raise ConfigError("config has no surrogate section")
        try:
            return SurrogateParams(**_numeric_dict(self.surrogate, "surrogate"))
        except TypeError as exc:
            raise ConfigError(f"bad surrogate parameters: {exc}") from exc

    def load_model(self):
        """(network, patterns) from files when given, else the seeded surrogate."""
        if self.network_path is not None:
            net = load_network(self.network_path)
            if self.pattern_bundle_path is None:
                raise ConfigError("network_path given without pattern_bundle_path")
            patterns = load_pattern_bundle(self.pattern_bundle_path,
                                           expected_ports=net.q + 1)
            return net, patterns
        return synth_pixel_surrogate(self.surrogate_params(), self.quadrature(),
                                     self.frequency_grid())

    def switch_model(self) -> SwitchModel:
        if self.switch_on is None or self.switch_off is None:
            raise ConfigError(
                "switch_model on/off branches are required; transcribe the "
                "element values from the switch datasheet"
            )
        try:
            return SwitchModel(
                on_branch=CircuitBranch(**_numeric_dict(self.switch_on, "switch on")),
                off_branch=CircuitBranch(**_numeric_dict(self.switch_off, "switch off")))
        except TypeError as exc:
            raise ConfigError(f"bad switch branch: {exc}") from exc

    def ga_params(self) -> GAParams:
        try:
            return GAParams(**_numeric_dict(self.ga, "ga"))
        except TypeError as exc:
            raise ConfigError(f"bad GA parameters: {exc}") from exc


_SECTION_KEYS = {
    "model": ("network_path", "pattern_bundle_path"),
    "design": ("n_ports", "aperture_wavelengths", "p_switches", "z0_ohm",
               "switch_positions", "hardwire_x"),
    "frequency": ("f_lower_hz", "f_upper_hz", "t_samples"),
    "pas": ("support", "density"),
    "quadrature": ("n_theta", "n_phi"),
    "search": ("seed", "budget", "target_matched_sets", "threads"),
    "report": ("figures",),
}


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"unreadable config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    kwargs: dict = {"source_path": str(path), "raw": data}
    for section, keys in _SECTION_KEYS.items():
        sub = data.get(section, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key in sub:
            if key not in keys:
                raise ConfigError(f"unknown key {section}.{key}")
        for key in keys:
            if key in sub:
                dest = {"support": "pas_support", "density": "pas_density"}.get(key, key)
                kwargs[dest] = sub[key]
    if "surrogate" in data:
        kwargs["surrogate"] = data["surrogate"]
    if "switch_model" in data:
        sw = data["switch_model"]
        if not isinstance(sw, dict) or "on_branch" not in sw or "off_branch" not in sw:
            raise ConfigError("switch_model must contain 'on_branch' and 'off_branch'")
        kwargs["switch_on"] = sw["on_branch"]
        kwargs["switch_off"] = sw["off_branch"]
    if "ga" in data:
        kwargs["ga"] = data["ga"]
    # model paths are relative to the config file
    for key in ("network_path", "pattern_bundle_path"):
        if kwargs.get(key) is not None and not Path(kwargs[key]).is_absolute():
            kwargs[key] = str(path.parent / kwargs[key])
    known = {"model", "design", "frequency", "pas", "quadrature", "search",
             "report", "surrogate", "switch_model", "ga"}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config section {key!r}")
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
