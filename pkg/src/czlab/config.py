"""INI experiment configuration with ``section.key=value`` overrides."""
from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path

from .curve import CurveError, LipschitzCurve, builtin_curve


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"seed": "20240607", "refine": "true", "refine_tol": "0.3"},
    "grid": {"lo": "-8", "hi": "8", "step": "0.015625"},
    "curve": {"name": "flat", "path": "", "lip": ""},
    "params": {"p": "2", "lam": "0.5"},
    "boundedness": {
        "symbols": "heaviside, clipped-log, smooth-bump, sawtooth-bmo, random-step@1, random-step@2, "
        "random-step@3, 2*heaviside, 0.5*clipped-log, 3*smooth-bump, constant",
        "p": "1.5, 2, 3",
        "lam": "0.25, 0.5, 0.75",
        "min_cells": "8",
        "band_width": "10",
    },
    "compactness": {
        "lo": "-64",
        "hi": "64",
        "step": "0.02",
        "cmo_symbols": "smooth-bump, constant",
        "family_size": "20",
        "family_lo": "-1",
        "family_pieces": "10",
        "z_list": "0.16, 0.08, 0.04, 0.02",
        "alpha_list": "4, 8, 16, 32",
        "equicontinuity_ratio": "0.2",
        "slope_tol": "0.15",
        "witness_symbols": "clipped-log",
        "witness_lo": "-8",
        "witness_hi": "8",
        "witness_step": "0.001953125",
        "scenario": "shrinking",
        "count": "4",
        "delta": "",
        "distance_ratio": "0.1",
    },
    "factorization": {
        "N": "1024",
        "L": "4",
        "radius": "1",
        "N_max": "16384",
        "kappa_target": "0.5",
        "homogeneity_curves": "flat, sawtooth, sawtooth1, bump",
        "homogeneity_N": "16, 32, 64, 128, 256, 512, 1024",
        "probes": "4000",
    },
    "lowerbound": {
        "lo": "-64",
        "hi": "64",
        "step": "0.0078125",
        "symbols": "heaviside, 2*heaviside, -1*heaviside",
        "center": "0",
        "radius": "0.125",
        "k_list": "4, 5, 6, 7, 8",
        "A1": "16",
        "delta": "0.1",
        "stability": "0.3",
    },
    "kernelcheck": {
        "samples": "20000",
        "curves": "flat, sawtooth",
        "intervals": "10",
        "step": "0.001",
        "oracle_tol": "0.001",
    },
}


@dataclass
class ExperimentConfig:
    parser: configparser.ConfigParser

    @classmethod
    def load(cls, path=None, overrides=()) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_dict(DEFAULTS)
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file {path} not found")
            try:
                cp.read_string(p.read_text())
            except configparser.Error as e:
                raise ConfigError(str(e)) from None
        for item in overrides:
            key, sep, value = item.partition("=")
            sec, dot, opt = key.strip().partition(".")
            if not (sep and dot and sec and opt):
                raise ConfigError(f"override {item!r} must look like section.key=value")
            if not cp.has_section(sec):
                raise ConfigError(f"unknown section {sec!r}")
            cp.set(sec, opt, value.strip())
        for sec in cp.sections():
            if sec not in DEFAULTS:
                raise ConfigError(f"unknown section {sec!r}")
            for opt in cp[sec]:
                if opt not in DEFAULTS[sec]:
                    raise ConfigError(f"unknown key {sec}.{opt}")
        cfg = cls(cp)
        cfg.validate()
        return cfg

    # typed accessors ---------------------------------------------------------
    def get(self, sec: str, key: str) -> str:
        return self.parser.get(sec, key)

    def float(self, sec: str, key: str) -> float:
        try:
            return self.parser.getfloat(sec, key)
        except ValueError:
            raise ConfigError(f"{sec}.{key} must be a number") from None

    def int(self, sec: str, key: str) -> int:
        try:
            return self.parser.getint(sec, key)
        except ValueError:
            raise ConfigError(f"{sec}.{key} must be an integer") from None

    def bool(self, sec: str, key: str) -> bool:
        try:
            return self.parser.getboolean(sec, key)
        except ValueError:
            raise ConfigError(f"{sec}.{key} must be a boolean") from None

    def floats(self, sec: str, key: str) -> list[float]:
        try:
            return [float(v) for v in self.list(sec, key)]
        except ValueError:
            raise ConfigError(f"{sec}.{key} must be a comma-separated list of numbers") from None

    def ints(self, sec: str, key: str) -> list[int]:
        try:
            return [int(v) for v in self.list(sec, key)]
        except ValueError:
            raise ConfigError(f"{sec}.{key} must be a comma-separated list of integers") from None

    def list(self, sec: str, key: str) -> list[str]:
        return [v.strip() for v in self.get(sec, key).split(",") if v.strip()]

    def optional_float(self, sec: str, key: str):
        return self.float(sec, key) if self.get(sec, key).strip() else None

    def grid(self, sec: str = "grid") -> tuple[float, float, float]:
        src = sec if all(self.parser.has_option(sec, k) for k in ("lo", "hi", "step")) else "grid"
        return self.float(src, "lo"), self.float(src, "hi"), self.float(src, "step")

    def curve(self) -> LipschitzCurve:
        path = self.get("curve", "path").strip()
        try:
            if path:
                return LipschitzCurve.from_csv(path, self.optional_float("curve", "lip"))
            return builtin_curve(self.get("curve", "name").strip())
        except (CurveError, OSError) as e:
            raise ConfigError(str(e)) from None

    def validate(self):
        lo, hi, step = self.grid()
        if not (hi > lo and step > 0 and step < hi - lo):
            raise ConfigError("grid needs lo < hi and 0 < step < hi - lo")
        for sec in ("compactness", "lowerbound"):
            lo, hi, step = self.grid(sec)
            if not (hi > lo and step > 0):
                raise ConfigError(f"{sec} grid needs lo < hi and step > 0")
        self.int("run", "seed")
        self.bool("run", "refine")
        for p in self.floats("params", "p") + self.floats("boundedness", "p"):
            if not p > 1:
                raise ConfigError("p must exceed 1")
        for lam in self.floats("params", "lam") + self.floats("boundedness", "lam"):
            if not 0 < lam < 1:
                raise ConfigError("lambda must lie in (0, 1)")
        if self.int("factorization", "N") <= 10:
            raise ConfigError("factorization.N must exceed 10")
        if self.int("factorization", "L") < 0:
            raise ConfigError("factorization.L must be non-negative")
        self.curve()

    def resolved(self) -> str:
        buf = io.StringIO()
        for sec in DEFAULTS:
            buf.write(f"[{sec}]\n")
            for key in DEFAULTS[sec]:
                buf.write(f"{key} = {self.get(sec, key)}\n")
            buf.write("\n")
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.resolved().encode()).hexdigest()
