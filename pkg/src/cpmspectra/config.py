"""
Run configuration: a flat ``key = value`` text file plus built-in presets.

Example::

    # quaternary multi-h CPFSK
    M = 4
    L = 1
    phase = cpfsk
    h = 4/16, 5/16, 8/16, 10/16
    fmin = -4
    fmax = 4
    points = 2001

Keys
----
M, L, phase, h
    Format.  ``phase`` is ``cpfsk``/``lrec``, ``rc``/``lrc`` or ``gmsk``;
    ``h`` is a comma separated list of ``num/den`` values.
q
    Optional comma separated symbol probabilities (default equiprobable).
bt
    Gaussian bandwidth-time product for ``gmsk`` (default 0.25).
fmin, fmax, points
    Frequency grid in units of ``f*T`` (default -2, 2, 2001).
mode
    ``closed-form``, ``series-oracle``, ``simulate`` or ``compare``.
backend
    Resolvent backend, ``direct`` or ``poly``.
quadrature_order, truncation
    Gauss-Legendre nodes per symbol and series truncation N.
symbols, sample_rate, segment_symbols, seed
    Welch simulation settings (``sample_rate`` is samples per T).
offset, word_budget
    Polyphase anchor offset and the output-word enumeration budget.
"""

import configparser
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .chain import DEFAULT_WORD_BUDGET
from .errors import ConfigError, CpmError
from .model import CpmFormat, PhaseResponse, normalize_indices
from .oracle import WelchConfig

MODES = ("closed-form", "series-oracle", "simulate", "compare")
BACKENDS = ("direct", "poly")

PRESETS = {
    "msk": "M=2\nL=1\nphase=cpfsk\nh=1/2\n",
    "multih-4-16": "M=4\nL=1\nphase=cpfsk\nh=4/16, 5/16, 8/16, 10/16\n",
    "cpfsk-l1": "M=4\nL=1\nphase=cpfsk\nh=4/16, 5/16\n",
    "rc-l1": "M=4\nL=1\nphase=rc\nh=4/16, 5/16\n",
    "rc-l2": "M=4\nL=2\nphase=rc\nh=4/16, 5/16\n",
    "gmsk-l4": "M=2\nL=4\nphase=gmsk\nh=1/2\n",
    "cpfsk-h1": "M=2\nL=1\nphase=cpfsk\nh=1\n",
}
PRESET_GRID = "fmin=-4\nfmax=4\npoints=2001\n"

KNOWN_KEYS = {"m", "l", "phase", "h", "q", "bt", "fmin", "fmax", "points", "mode",
              "backend", "quadrature_order", "truncation", "symbols", "sample_rate",
              "segment_symbols", "seed", "offset", "word_budget"}


@dataclass(frozen=True, eq=False)
class RunConfig:
    fmt: CpmFormat
    fmin: float = -2.0
    fmax: float = 2.0
    points: int = 2001
    mode: str = "closed-form"
    backend: str = "direct"
    quadrature_order: int = 32
    truncation: int = 400
    welch: WelchConfig = field(default_factory=WelchConfig)
    offset: int = 0
    word_budget: int = DEFAULT_WORD_BUDGET
    name: str = "config"

    @property
    def grid(self):
        return np.linspace(self.fmin, self.fmax, self.points)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        seed = kw.pop("seed", None)
        out = replace(self, **kw)
        if seed is not None:
            out = replace(out, welch=replace(out.welch, seed=seed))
        out.check()
        return out

    def check(self):
        if not self.fmin < self.fmax:
            raise ConfigError("fmin must be smaller than fmax")
        if self.points < 2:
            raise ConfigError("points must be >= 2")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {', '.join(BACKENDS)}")
        if self.quadrature_order < 4:
            raise ConfigError("quadrature_order must be >= 4")
        if self.truncation < 0:
            raise ConfigError("truncation must be >= 0")
        return self


def _get(sec, key, conv, default):
    if key not in sec:
        return default
    raw = sec[key].strip()
    try:
        return conv(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def _int(raw):
    v = Fraction(raw)
    if v.denominator != 1:
        raise ValueError(raw)
    return int(v)


def parse_config(text, name="config"):
    """Parse config text into a validated :class:`RunConfig`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    sec = cp["run"]
    unknown = set(sec) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    for key in ("m", "l", "phase", "h"):
        if key not in sec:
            raise ConfigError(f"missing required key {key!r}")
    try:
        phase = PhaseResponse(sec["phase"].strip(), _get(sec, "l", _int, 1),
                              _get(sec, "bt", float, 0.25))
        indices = normalize_indices([h for h in sec["h"].split(",") if h.strip()])
        q = _get(sec, "q", lambda s: [float(v) for v in s.split(",")], None)
        fmt = CpmFormat(_get(sec, "m", _int, 2), phase, indices, q)
    except CpmError as exc:
        raise ConfigError(str(exc)) from exc
    welch = WelchConfig(
        symbols=_get(sec, "symbols", _int, WelchConfig.symbols),
        samples_per_symbol=_get(sec, "sample_rate", _int, WelchConfig.samples_per_symbol),
        segment_symbols=_get(sec, "segment_symbols", _int, None),
        seed=_get(sec, "seed", _int, 0),
    )
    cfg = RunConfig(
        fmt=fmt,
        fmin=_get(sec, "fmin", float, -2.0),
        fmax=_get(sec, "fmax", float, 2.0),
        points=_get(sec, "points", _int, 2001),
        mode=_get(sec, "mode", str, "closed-form"),
        backend=_get(sec, "backend", str, "direct"),
        quadrature_order=_get(sec, "quadrature_order", _int, 32),
        truncation=_get(sec, "truncation", _int, 400),
        welch=welch,
        offset=_get(sec, "offset", _int, 0),
        word_budget=_get(sec, "word_budget", _int, DEFAULT_WORD_BUDGET),
        name=name,
    )
    return cfg.check()


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, name=str(path))


def preset_text(name):
    try:
        return PRESETS[name] + PRESET_GRID
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def load_preset(name):
    return parse_config(preset_text(name), name=name)
