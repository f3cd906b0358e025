"""Text formats: profiles, flat key/value configs, CSV reports and run manifests.

Profile files hold one record per line::

    interval 1 2
    knot 1 0.5
    jump 1.5 0.8 0.4      # x, left limit, right limit
    knot 2 0.4
    cut 1.7 0.1 0.4       # x, y_bottom, y_top

Config files hold ``key = value`` lines; ``#`` starts a comment.  See
``CONFIG_KEYS`` for the accepted keys and their defaults.
"""
from __future__ import annotations

import hashlib
import io as _io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fem
from .energy import EnergyReport
from .materials import Materials, MaterialError, TransitionParams, isotropic
from .profile import Cut, Interval, Profile, ProfileError

TOOL_VERSION = "0.1.0"


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """17 significant digits, always with a '.' decimal point."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


# ----------------------------------------------------------------------
# profiles


def _floats(parts, n, where):
    if len(parts) != n:
        raise ProfileError(f"{where}: expected {n} numbers, got {len(parts)}")
    try:
        return [float(s) for s in parts]
    except ValueError as exc:
        raise ProfileError(f"{where}: {exc}") from None


def parse_profile(text: str, source: str = "<profile>") -> Profile:
    interval, knots, cuts = None, [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        where = f"{source}:{lineno}"
        if head == "interval":
            if interval is not None:
                raise ProfileError(f"{where}: duplicate interval")
            interval = Interval(*_floats(rest, 2, where))
        elif head == "knot":
            knots.append(tuple(_floats(rest, 2, where)))
        elif head == "jump":
            x, yl, yr = _floats(rest, 3, where)
            if yl == yr:
                raise ProfileError(f"{where}: jump needs distinct left and right limits")
            knots += [(x, yl), (x, yr)]
        elif head == "cut":
            x, yb, yt = _floats(rest, 3, where)
            cuts.append(Cut(x, yb, yt))
        else:
            raise ProfileError(f"{where}: unknown record {head!r}")
    if interval is None:
        if not knots:
            raise ProfileError(f"{source}: no knots")
        interval = Interval(knots[0][0], knots[-1][0])
    return Profile(interval, tuple(knots), tuple(cuts))


def format_profile(p: Profile) -> str:
    out = [f"interval {p.a!r} {p.b!r}"]
    k = list(p.knots)
    i = 0
    while i < len(k):
        x, y = k[i]
        if i + 1 < len(k) and k[i + 1][0] == x:
            out.append(f"jump {x!r} {y!r} {k[i + 1][1]!r}")
            i += 2
        else:
            out.append(f"knot {x!r} {y!r}")
            i += 1
    for c in p.cuts:
        out.append(f"cut {c.x!r} {c.y_bottom!r} {c.y_top!r}")
    return "\n".join(out) + "\n"


def load_profile(path) -> Profile:
    path = Path(path)
    return parse_profile(path.read_text(), str(path))


def save_profile(p: Profile, path) -> None:
    Path(path).write_text(format_profile(p))


# ----------------------------------------------------------------------
# configuration


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str):
    return None if s.strip().lower() in ("auto", "none", "") else float(s)


def _floats_list(s: str) -> tuple:
    if s.strip().lower() in ("auto", "none", ""):
        return ()
    return tuple(float(t) for t in s.replace(",", " ").split())


def _str(s: str) -> str:
    return s.strip()


# key -> (parser, default); None as default means "required"
CONFIG_KEYS = {
    "gamma_f": (float, None),
    "gamma_s": (float, None),
    "gamma_fs": (float, None),
    "e0": (float, 0.0),
    "lame_f.lambda": (float, 1.0),
    "lame_f.mu": (float, 1.0),
    "lame_s.lambda": (_opt_float, "auto"),
    "lame_s.mu": (_opt_float, "auto"),
    "C_f": (_floats_list, "auto"),
    "C_s": (_floats_list, "auto"),
    "delta": (_opt_float, "none"),
    "f": (_str, "atan"),
    "relaxed_mismatch": (_str, "E0"),
    "fem.depth": (_opt_float, "auto"),
    "fem.resolution": (_opt_float, "auto"),
    "fem.tol_solve": (float, 1e-10),
    "fem.lateral": (_str, "free"),
    "fem.clamp_bottom": (_bool, "true"),
    "min.mu": (float, 0.5),
    "min.target_area": (_opt_float, "auto"),
    "min.lambda_schedule": (_floats_list, "1 2 4 8 16"),
    "min.knot_count": (int, 33),
    "min.max_iters": (int, 400),
    "min.step_tol": (float, 1e-10),
    "min.grad_tol": (float, 1e-9),
    "min.area_tol": (float, 1e-6),
    "min.fd_rel_step": (float, 1e-6),
    "min.perimeter_tol": (float, 1e-9),
    "min.certify_samples": (int, 200),
    "min.certify_tol": (float, 1e-6),
    "relax.steps": (int, 11),
    "relax.r": (float, 0.5),
    "relax.mode": (_str, "auto"),
    "relax.lift_scale": (float, 1.0),
    "relax.L0": (_opt_float, "auto"),
    "sweep.lift": (_str, "auto"),
    "sweep.lift_scale": (float, 1.0),
    "ball.n_dirs": (int, 32),
    "ball.circle_dirs": (int, 720),
    "seed": (int, 0),
}


def _mandel(v, name):
    if len(v) != 6:
        raise ConfigError(f"{name} needs 6 entries c11 c12 c13 c22 c23 c33, got {len(v)}")
    c11, c12, c13, c22, c23, c33 = v
    return np.array([[c11, c12, c13], [c12, c22, c23], [c13, c23, c33]])


@dataclass(frozen=True, eq=False)
class Config:
    materials: Materials
    transition: TransitionParams | None
    values: dict = field(repr=False)
    text: str = field(default="", repr=False)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def bc(self) -> fem.BCSpec:
        return fem.BCSpec(self.values["fem.clamp_bottom"], self.values["fem.lateral"])

    @property
    def depth(self):
        return self.values["fem.depth"]

    @property
    def resolution(self):
        return self.values["fem.resolution"]

    @property
    def tol_solve(self) -> float:
        return self.values["fem.tol_solve"]

    @property
    def seed(self) -> int:
        return self.values["seed"]

    def snapshot(self) -> dict:
        """Every key with its effective value, as strings."""
        out = {}
        for k in sorted(self.values):
            v = self.values[k]
            if v is None:
                out[k] = "auto"
            elif isinstance(v, tuple):
                out[k] = " ".join(fmt(t) for t in v)
            else:
                out[k] = fmt(v)
        return out


def parse_config(text: str, source: str = "<config>") -> Config:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        parser = CONFIG_KEYS[key][0]
        try:
            raw[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    values = {}
    for key, (parser, default) in CONFIG_KEYS.items():
        if key in raw:
            values[key] = raw[key]
        elif default is None:
            raise ConfigError(f"{source}: missing required key {key!r}")
        else:
            values[key] = parser(default) if isinstance(default, str) else default
    try:
        C_f = (_mandel(values["C_f"], "C_f") if values["C_f"]
               else isotropic(values["lame_f.lambda"], values["lame_f.mu"]))
        ls, ms = values["lame_s.lambda"], values["lame_s.mu"]
        if values["C_s"]:
            C_s = _mandel(values["C_s"], "C_s")
        elif ls is None and ms is None:
            C_s = C_f  # substrate defaults to the film tensor
        else:
            C_s = isotropic(values["lame_f.lambda"] if ls is None else ls,
                            values["lame_f.mu"] if ms is None else ms)
        m = Materials(values["gamma_f"], values["gamma_s"], values["gamma_fs"], values["e0"], C_f, C_s)
        t = None
        if values["delta"] is not None:
            t = TransitionParams(values["delta"], values["f"])
            m.check_transition()
        fem.BCSpec(values["fem.clamp_bottom"], values["fem.lateral"])
    except (MaterialError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if values["relaxed_mismatch"] not in ("E0", "Edelta"):
        raise ConfigError(f"{source}: relaxed_mismatch must be E0 or Edelta")
    if values["relax.mode"] not in ("auto", "wetting", "dewetting"):
        raise ConfigError(f"{source}: relax.mode must be auto, wetting or dewetting")
    if values["sweep.lift"] not in ("auto", "on", "off"):
        raise ConfigError(f"{source}: sweep.lift must be auto, on or off")
    return Config(m, t, values, text)


def load_config(path) -> Config:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    return parse_config(path.read_text(), str(path))


def format_config(cfg: Config) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.snapshot().items())


# ----------------------------------------------------------------------
# CSV


REPORT_COLUMNS = ("functional", "bulk", "surface", "cut_term", "wetting_term", "total",
                  "truncation_depth", "resolution")


def write_csv(stream, header, rows) -> None:
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def emit_report(report: EnergyReport, stream, header: bool = True) -> None:
    row = (report.functional_tag, report.bulk, report.surface, report.cut_term,
           report.wetting_term, report.total, report.truncation_depth, report.resolution)
    if header:
        stream.write(",".join(REPORT_COLUMNS) + "\n")
    stream.write(",".join(fmt(v) for v in row) + "\n")


def report_csv(report: EnergyReport) -> str:
    buf = _io.StringIO()
    emit_report(report, buf)
    return buf.getvalue()


# ----------------------------------------------------------------------
# run manifests


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    arguments: dict
    config: dict
    inputs: dict
    seed: int
    tolerances: dict
    version: str = TOOL_VERSION

    def to_json(self) -> str:
        return json.dumps({
            "command": self.command, "arguments": self.arguments, "config": self.config,
            "inputs": self.inputs, "seed": self.seed, "tolerances": self.tolerances,
            "version": self.version,
        }, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        return cls(d["command"], d["arguments"], d["config"], d["inputs"], d["seed"],
                   d["tolerances"], d.get("version", TOOL_VERSION))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls.from_json(Path(path).read_text())


def build_manifest(command: str, arguments: dict, cfg: Config | None, input_paths: dict) -> RunManifest:
    inputs = {k: {"path": str(v), "sha256": sha256_file(v)} for k, v in sorted(input_paths.items())}
    snap = cfg.snapshot() if cfg is not None else {}
    tol = {k: v for k, v in snap.items() if "tol" in k}
    seed = cfg.seed if cfg is not None else 0
    return RunManifest(command, {k: arguments[k] for k in sorted(arguments)}, snap, inputs, seed, tol)
