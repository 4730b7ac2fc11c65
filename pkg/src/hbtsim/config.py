"""Experiment configuration: strict TOML schema with embedded defaults."""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .detector import DetectorConfig, GaussianJitter
from .field import SpectrumModel, SpectrumShape
from .optics import ScanConfig
from .units import MS, NS, PS, S


class ConfigError(ValueError):
    pass


@dataclass
class RunSection:
    master_seed: int = 1
    duration_s: float = 200.0
    segments: int = 20
    save_tags: bool = False


@dataclass
class SourceSection:
    kind: str = "thermal"  # thermal | coherent
    generator: str = "auto"  # auto | field | sparse
    shape: str = "gaussian"  # gaussian | lorentzian
    coherence_fwhm_ps: float = 50.0
    wavelength_nm: float = 810.0
    rate_hz: float = 2.0e6  # photon rate before the beam splitter
    dt_fs: float = 5000.0  # sampling step for the field-trace generator


@dataclass
class OpticsSection:
    transmittance: float = 0.5
    delay_ns: float = 0.0
    loss_a: float = 1.0
    loss_b: float = 1.0


@dataclass
class DetectorSection:
    quantum_efficiency: float = 1.0
    dark_rate_hz: float = 0.0
    jitter_fwhm_ps: float = 200.0 / math.sqrt(2.0)  # per detector; pair combines to 200 ps
    dead_time_ns: float = 0.0
    saturation_rate_hz: float = 1.1e6
    tag_resolution_ps: float = 82.2


@dataclass
class CorrelationSection:
    bin_width_ps: float = 82.2
    max_lag_ns: float = 10.0
    plateau_lo_ns: float = 2.0
    plateau_hi_ns: float = 10.0
    peak_lo_ps: float = -300.0
    peak_hi_ps: float = 300.0


@dataclass
class CalibrationSection:
    pair_rate_hz: float = 2.0e5
    pair_spread_ps: float = 0.5
    duration_s: float = 20.0


@dataclass
class ScanSection:
    mirror_speed_mm_s: float = 0.01
    scan_range_mm: float = 45.0
    window_ms: float = 2.0
    base_rate_hz: float = 2.0e5
    background_rate_hz: float = 5.0e3
    max_visibility: float = 0.9
    window_fringes: int = 2


@dataclass
class PredictionSection:
    shift_ps: float = 0.0
    use_analytic_envelope: bool = False


@dataclass
class ExperimentConfig:
    run: RunSection = field(default_factory=RunSection)
    source: SourceSection = field(default_factory=SourceSection)
    optics: OpticsSection = field(default_factory=OpticsSection)
    detector_a: DetectorSection = field(default_factory=DetectorSection)
    detector_b: DetectorSection = field(default_factory=DetectorSection)
    correlation: CorrelationSection = field(default_factory=CorrelationSection)
    calibration: CalibrationSection = field(default_factory=CalibrationSection)
    scan: ScanSection = field(default_factory=ScanSection)
    prediction: PredictionSection = field(default_factory=PredictionSection)

    # ---- views onto module-level types ----

    def spectrum(self) -> SpectrumModel:
        try:
            shape = SpectrumShape(self.source.shape)
        except ValueError:
            raise ConfigError(f"unknown spectrum shape {self.source.shape!r}") from None
        return SpectrumModel(
            shape=shape,
            coherence_fwhm_fs=self.source.coherence_fwhm_ps * PS,
            center_wavelength_nm=self.source.wavelength_nm,
        )

    def detector(self, which: str) -> DetectorConfig:
        sec = self.detector_a if which == "a" else self.detector_b
        return DetectorConfig(
            quantum_efficiency=sec.quantum_efficiency,
            dark_rate_hz=sec.dark_rate_hz,
            jitter=GaussianJitter(fwhm_fs=sec.jitter_fwhm_ps * PS),
            dead_time_fs=sec.dead_time_ns * NS,
            saturation_rate_hz=sec.saturation_rate_hz,
            tag_resolution_fs=int(round(sec.tag_resolution_ps * PS)),
        )

    def scan_config(self) -> ScanConfig:
        return ScanConfig(
            mirror_speed_mm_s=self.scan.mirror_speed_mm_s,
            scan_range_mm=self.scan.scan_range_mm,
            window_s=self.scan.window_ms * MS / S,
            base_rate_hz=self.scan.base_rate_hz,
            background_rate_hz=self.scan.background_rate_hz,
            max_visibility=self.scan.max_visibility,
        )


def reference_config() -> ExperimentConfig:
    """Headline experiment parameters (not desk-runnable by brute force)."""
    cfg = ExperimentConfig()
    cfg.run = RunSection(master_seed=1, duration_s=16 * 3600.0, segments=57600, save_tags=False)
    cfg.source = SourceSection(
        kind="thermal",
        generator="sparse",
        shape="gaussian",
        coherence_fwhm_ps=2.8,
        wavelength_nm=810.0,
        rate_hz=4.0e6,
        dt_fs=280.0,
    )
    det = DetectorSection(
        quantum_efficiency=0.5,
        dark_rate_hz=500.0,
        jitter_fwhm_ps=640.0 / math.sqrt(2.0),
        dead_time_ns=50.0,
        saturation_rate_hz=1.0e6,
        tag_resolution_ps=82.2,
    )
    cfg.detector_a = det
    cfg.detector_b = dataclasses.replace(det)
    cfg.optics = OpticsSection(transmittance=0.5, delay_ns=500.0, loss_a=1.0, loss_b=1.0)
    cfg.calibration = CalibrationSection(pair_rate_hz=1.0e5, pair_spread_ps=0.5, duration_s=600.0)
    cfg.scan = ScanSection(
        mirror_speed_mm_s=0.002,
        scan_range_mm=3.0,
        window_ms=2.0,
        base_rate_hz=2.0e5,
        background_rate_hz=5.0e3,
        max_visibility=0.9,
        window_fringes=2,
    )
    return cfg


_SECTIONS = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _apply_section(obj, name: str, data: dict):
    known = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key '{name}.{key}'")
        current = getattr(obj, key)
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"'{name}.{key}' must be a boolean")
        elif isinstance(current, int) and not isinstance(current, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
                raise ConfigError(f"'{name}.{key}' must be an integer")
            value = int(value)
        elif isinstance(current, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"'{name}.{key}' must be a number")
            value = float(value)
        elif isinstance(current, str):
            if not isinstance(value, str):
                raise ConfigError(f"'{name}.{key}' must be a string")
        setattr(obj, key, value)


def config_from_dict(data: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for section, body in data.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section '{section}'")
        if not isinstance(body, dict):
            raise ConfigError(f"section '{section}' must be a table")
        _apply_section(getattr(cfg, section), section, body)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize a config as TOML text (keys in schema order)."""
    lines = []
    for section in _SECTIONS:
        lines.append(f"[{section}]")
        for f in dataclasses.fields(getattr(cfg, section)):
            value = getattr(getattr(cfg, section), f.name)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, str):
                text = f'"{value}"'
            else:
                text = repr(value)
            lines.append(f"{f.name} = {text}")
        lines.append("")
    return "\n".join(lines)
