"""Run configuration as a flat ``key=value`` text file.

Keys are the field names of the individual config dataclasses (they are
unique across sections). Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .appearance import CoffConfig
from .association import AssociationConfig
from .cmc import CmcConfig
from .errors import ConfigInvalid
from .motion import KalmanConfig
from .tracker import TrackerConfig

_SECTIONS = ("tracker", "association", "coff", "kalman", "cmc")
_NESTED = {"association", "coff", "kalman"}


@dataclass
class RunConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    cmc: CmcConfig = field(default_factory=CmcConfig)

    def section(self, name: str):
        if name == "tracker":
            return self.tracker
        if name == "cmc":
            return self.cmc
        return getattr(self.tracker, name)


def _keys() -> dict[str, tuple[str, type]]:
    out = {}
    defaults = RunConfig()
    for sec in _SECTIONS:
        obj = defaults.section(sec)
        for f in dataclasses.fields(obj):
            if f.name in _NESTED:
                continue
            out[f.name] = (sec, type(getattr(obj, f.name)))
    return out


KEYS = _keys()


def _convert(key: str, raw: str, typ: type):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            v = float(raw)
            if v != int(v):
                raise ValueError(raw)
            return int(v)
        return typ(raw)
    except ValueError:
        raise ConfigInvalid(f"{key}: cannot parse {raw!r} as {typ.__name__}") from None


def parse_config(text: str) -> RunConfig:
    values: dict[str, dict[str, object]] = {s: {} for s in _SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        sec, typ = KEYS[key]
        values[sec][key] = _convert(key, val, typ)
    return build_config(values)


def build_config(values: dict[str, dict[str, object]]) -> RunConfig:
    def make(cls, sec, **extra):
        try:
            return cls(**values.get(sec, {}), **extra)
        except ConfigInvalid as e:
            bad = [k for k in values.get(sec, {}) if k in str(e)]
            raise ConfigInvalid(f"{bad[0] if bad else sec}: {e}") from None

    tracker = make(
        TrackerConfig,
        "tracker",
        association=make(AssociationConfig, "association"),
        coff=make(CoffConfig, "coff"),
        kalman=make(KalmanConfig, "kalman"),
    )
    return RunConfig(tracker, make(CmcConfig, "cmc"))


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for key, (sec, _) in KEYS.items():
        v = getattr(cfg.section(sec), key)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key}={v}\n")
    return "".join(lines)
