"""Run configuration: JSON parsing, validation, presets and hashing."""

import copy
import hashlib
import json
from dataclasses import dataclass, field, asdict
from importlib import resources

from .errors import ConfigurationError
from .problems import get_problem
from .trainer import GradeConfig, Stage2Config

METHODS = ("ts-mgdl", "sgl")


@dataclass
class ProblemConfig:
    name: str
    nu: float = None
    re: float = None
    T: float = None
    bounds: list = None
    quad_nodes: int = None

    def build(self):
        return get_problem(self.name, nu=self.nu, re=self.re, T=self.T,
                           bounds=None if self.bounds is None else tuple(tuple(b) for b in self.bounds),
                           quad_nodes=self.quad_nodes)


@dataclass
class SampleConfig:
    n_f: int
    n_0: int
    n_b: int
    seed: int = 0


@dataclass
class RunConfig:
    problem: ProblemConfig
    samples: SampleConfig
    method: str = "ts-mgdl"
    seed: int = 0
    grades: list = field(default_factory=list)
    stage2: Stage2Config = None
    sgl: GradeConfig = None
    test_grid: list = None
    slice_t: list = field(default_factory=list)
    deterministic: bool = True
    output_dir: str = None

    def to_dict(self):
        d = asdict(self)
        d["problem"] = {k: v for k, v in d["problem"].items() if v is not None}
        for g in d["grades"]:
            g["widths"] = list(g["widths"])
        if d["sgl"] is not None:
            d["sgl"]["widths"] = list(d["sgl"]["widths"])
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def hash(self):
        d = self.to_dict()
        d.pop("output_dir", None)
        return hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# --- parsing ---------------------------------------------------------------

def _req(d, key, path, kind):
    if key not in d:
        raise ConfigurationError(f"{path}.{key}: missing required field")
    return _typed(d[key], f"{path}.{key}", kind)


def _opt(d, key, path, kind, default=None):
    if key not in d or d[key] is None:
        return default
    return _typed(d[key], f"{path}.{key}", kind)


def _typed(v, path, kind):
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigurationError(f"{path}: expected a number, got {v!r}")
        return float(v)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigurationError(f"{path}: expected an integer, got {v!r}")
        return v
    if kind is bool:
        if not isinstance(v, bool):
            raise ConfigurationError(f"{path}: expected true/false, got {v!r}")
        return v
    if kind is str:
        if not isinstance(v, str):
            raise ConfigurationError(f"{path}: expected a string, got {v!r}")
        return v
    if kind is list:
        if not isinstance(v, list):
            raise ConfigurationError(f"{path}: expected a list, got {v!r}")
        return v
    if kind is dict:
        if not isinstance(v, dict):
            raise ConfigurationError(f"{path}: expected an object, got {v!r}")
        return v
    raise TypeError(kind)


def _check_keys(d, allowed, path):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigurationError(f"{path}: unknown field(s) {sorted(extra)}")


def _widths(v, path):
    v = _typed(v, path, list)
    if len(v) < 2 or not all(isinstance(w, int) and not isinstance(w, bool) and w >= 1 for w in v):
        raise ConfigurationError(f"{path}: expected a list of at least two positive integers, got {v!r}")
    return tuple(v)


def _phase(d, path, with_widths=True):
    d = _typed(d, path, dict)
    keys = ("widths", "lr", "decay", "epochs") if with_widths else ("k", "lr", "decay", "epochs")
    _check_keys(d, keys, path)
    lr = _req(d, "lr", path, float)
    decay = _opt(d, "decay", path, float, 0.0)
    epochs = _req(d, "epochs", path, int)
    if lr < 0 or decay < 0:
        raise ConfigurationError(f"{path}: learning rate and decay must be non-negative")
    if with_widths:
        if "widths" not in d:
            raise ConfigurationError(f"{path}.widths: missing required field")
        if epochs < 1:
            raise ConfigurationError(f"{path}.epochs: must be >= 1")
        return GradeConfig(_widths(d["widths"], f"{path}.widths"), lr, decay, epochs)
    if epochs < 0:
        raise ConfigurationError(f"{path}.epochs: must be >= 0")
    return Stage2Config(_req(d, "k", path, int), lr, decay, epochs)


def parse_config(d):
    """Validate a JSON-like dict into a :class:`RunConfig`; errors name the field path."""
    d = _typed(d, "config", dict)
    _check_keys(d, ("problem", "samples", "method", "seed", "grades", "stage2", "sgl", "test_grid",
                    "slice_t", "deterministic", "output_dir"), "config")
    p = _typed(d.get("problem"), "config.problem", dict) if "problem" in d else None
    if p is None:
        raise ConfigurationError("config.problem: missing required field")
    _check_keys(p, ("name", "nu", "re", "T", "bounds", "quad_nodes"), "config.problem")
    problem = ProblemConfig(_req(p, "name", "config.problem", str), _opt(p, "nu", "config.problem", float),
                            _opt(p, "re", "config.problem", float), _opt(p, "T", "config.problem", float),
                            _opt(p, "bounds", "config.problem", list), _opt(p, "quad_nodes", "config.problem", int))
    s = _typed(d.get("samples"), "config.samples", dict) if "samples" in d else None
    if s is None:
        raise ConfigurationError("config.samples: missing required field")
    _check_keys(s, ("n_f", "n_0", "n_b", "seed"), "config.samples")
    samples = SampleConfig(*(_req(s, k, "config.samples", int) for k in ("n_f", "n_0", "n_b")),
                           _opt(s, "seed", "config.samples", int, 0))
    for k in ("n_f", "n_0", "n_b"):
        if getattr(samples, k) < 1:
            raise ConfigurationError(f"config.samples.{k}: must be >= 1")
    method = _opt(d, "method", "config", str, "ts-mgdl")
    if method not in METHODS:
        raise ConfigurationError(f"config.method: expected one of {METHODS}, got {method!r}")
    grades = [_phase(g, f"config.grades[{i}]") for i, g in enumerate(_opt(d, "grades", "config", list, []))]
    stage2 = None if d.get("stage2") is None else _phase(d["stage2"], "config.stage2", with_widths=False)
    sgl = None if d.get("sgl") is None else _phase(d["sgl"], "config.sgl")
    grid = _opt(d, "test_grid", "config", list)
    if grid is not None and not all(isinstance(g, int) and g >= 2 for g in grid):
        raise ConfigurationError(f"config.test_grid: expected integers >= 2, got {grid!r}")
    slice_t = [_typed(t, f"config.slice_t[{i}]", float) for i, t in enumerate(_opt(d, "slice_t", "config", list, []))]
    cfg = RunConfig(problem, samples, method, _opt(d, "seed", "config", int, 0), grades, stage2, sgl, grid,
                    slice_t, _opt(d, "deterministic", "config", bool, True),
                    _opt(d, "output_dir", "config", str))
    validate(cfg)
    return cfg


def validate(cfg):
    prob = cfg.problem.build()
    if cfg.method == "sgl":
        if cfg.sgl is None:
            raise ConfigurationError("config.sgl: required when method is 'sgl'")
        if cfg.stage2 is not None:
            raise ConfigurationError("config.stage2: not allowed when method is 'sgl'")
        if cfg.grades:
            raise ConfigurationError("config.grades: not allowed when method is 'sgl'")
        if cfg.sgl.widths[0] != prob.input_dim:
            raise ConfigurationError(f"config.sgl.widths: input width must be {prob.input_dim}")
        return
    if cfg.sgl is not None:
        raise ConfigurationError("config.sgl: only allowed when method is 'sgl'")
    if not cfg.grades:
        raise ConfigurationError("config.grades: TS-MGDL needs at least one grade")
    prev = prob.input_dim
    for i, g in enumerate(cfg.grades):
        if g.widths[0] != prev:
            raise ConfigurationError(
                f"config.grades[{i}].widths: input width {g.widths[0]} must equal "
                f"{'the problem input dimension' if i == 0 else 'the previous grade last hidden width'} ({prev})")
        if len(g.widths) < 3 and i < len(cfg.grades) - 1:
            raise ConfigurationError(f"config.grades[{i}].widths: a grade followed by another needs a hidden layer")
        prev = g.widths[-2]
    if cfg.stage2 is not None:
        k_L = len(cfg.grades[-1].widths) - 2
        total = sum(len(g.widths) - 2 for g in cfg.grades)
        k = cfg.stage2.k
        if not (k_L < k <= total):
            raise ConfigurationError(
                f"config.stage2.k: k={k} must satisfy k > k_L={k_L} (the stage-2 loss-reduction "
                f"proposition requires unfreezing more layers than the last grade has) and k <= {total}")


def load_config(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data)


def preset(name):
    """Load a shipped config (``burgers1d_tsmgdl`` etc.)."""
    try:
        text = resources.files("mgpinn.configs").joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        raise ConfigurationError(f"no shipped config named {name!r}") from None
    return parse_config(json.loads(text))


def preset_names():
    return sorted(p.name[:-5] for p in resources.files("mgpinn.configs").iterdir() if p.name.endswith(".json"))


DESK = {
    "burgers1d": dict(
        grades=[([2, 64, 64, 1], 3000), ([64, 64, 64, 1], 5000), ([64, 64, 64, 1], 5000)],
        k=5, stage2_epochs=10000, sgl=([2, 64, 64, 64, 64, 64, 64, 1], 23000),
        samples=(2000, 400, 200), grid=[100, 256],
        # short schedules need a faster first grade to place the shock
        lrs=(1e-2, 1e-3, 1e-3), stage2_lr=1e-3),
    "burgers2d": dict(
        grades=[([3, 64, 64, 1], 1000), ([64, 64, 64, 1], 2000), ([64, 64, 64, 1], 2000)],
        k=5, stage2_epochs=3000, sgl=([3, 64, 64, 64, 64, 64, 64, 1], 8000),
        samples=(2000, 200, 400), grid=[56, 15, 15]),
    "burgers3d": dict(
        grades=[([4, 48, 48, 1], 500), ([48, 48, 48, 1], 1000), ([48, 48, 48, 1], 1000)],
        k=5, stage2_epochs=2500, sgl=([4, 48, 48, 48, 48, 48, 48, 1], 5000),
        samples=(2000, 200, 600), grid=[27, 7, 7, 7]),
}


def desk_scale(cfg):
    """Shrink widths, epochs and sample counts to the CPU desk preset of the same problem.

    Decay rates and seeds are kept.  Learning rates are kept unless the
    preset lists its own; the grade count is the preset's.
    """
    desk = DESK[cfg.problem.name]
    out = copy.deepcopy(cfg)
    n_f, n_0, n_b = desk["samples"]
    out.samples = SampleConfig(n_f, n_0, n_b, cfg.samples.seed)
    out.test_grid = list(desk["grid"])
    if cfg.method == "sgl":
        widths, epochs = desk["sgl"]
        out.sgl = GradeConfig(tuple(widths), cfg.sgl.lr, cfg.sgl.decay, epochs)
    else:
        src = cfg.grades + [cfg.grades[-1]] * (len(desk["grades"]) - len(cfg.grades))
        lrs = desk.get("lrs") or [g.lr for g in src]
        out.grades = [GradeConfig(tuple(w), lr, g.decay, e) for (w, e), g, lr in zip(desk["grades"], src, lrs)]
        if cfg.stage2 is not None:
            out.stage2 = Stage2Config(desk["k"], desk.get("stage2_lr", cfg.stage2.lr), cfg.stage2.decay,
                                      desk["stage2_epochs"])
    validate(out)
    return out
