"""Flat key-value experiment configuration.

A config document is plain text: one ``key = value`` assignment per line,
``#`` comments, no sections, no code.  Keys are namespaced with dots
(``model.d1``, ``gibbs.omega``).  Parsing is strict: unknown keys, duplicate
keys, and malformed values are rejected.  ``render`` re-serializes the
resolved document (defaults included, keys sorted) so a run can be
reproduced byte-for-byte from the config it writes next to its outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConstraintError


def _parse_bool(text: str) -> bool:
    if text in ("true", "false"):
        return text == "true"
    raise ConstraintError(f"expected true/false, got {text!r}")


def _parse_int_list(text: str) -> tuple:
    return tuple(int(v.strip()) for v in text.split(","))


def _parse_str_list(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _parse_float_or_auto(text: str):
    return "auto" if text == "auto" else float(text)


def _render_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_render_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class _Field:
    parse: object
    default: object
    help: str


_SCHEMA = {
    "model.family": _Field(str, None, "completion | relu"),
    "model.d1": _Field(int, 2, "completion: number of rows"),
    "model.d2": _Field(int, 2, "completion: number of columns"),
    "model.rank": _Field(int, 1, "completion: true rank"),
    "model.width": _Field(int, 2, "completion: factorization width H"),
    "model.noise_sigma": _Field(float, 0.5, "observation noise scale"),
    "model.entry_bound": _Field(float, 1.0, "completion: entrywise bound on the truth"),
    "model.truth": _Field(str, "canonical", "completion truth: canonical | random"),
    "model.truth_seed": _Field(int, 0, "seed for a random truth"),
    "model.widths": _Field(_parse_int_list, (2, 4, 4, 1), "relu: candidate layer widths"),
    "model.true_widths": _Field(_parse_int_list, (2, 2, 1), "relu: true layer widths"),
    "model.true_seed": _Field(int, 1, "relu: seed for the true network weights"),
    "model.input_box": _Field(_parse_float_or_auto, 1.0,
                              "relu: inputs are uniform on [-v, v]"),
    "gibbs.omega": _Field(_parse_float_or_auto, "auto",
                          "learning rate; auto = half the squared-loss cap"),
    "gibbs.box": _Field(float, 1.0, "prior box half-width per coordinate"),
    "gibbs.chain_length": _Field(int, 30000, "total Metropolis steps per chain"),
    "gibbs.burn_in": _Field(int, 5000, "discarded initial steps"),
    "gibbs.thinning": _Field(int, 5, "keep every k-th draw"),
    "gibbs.chains": _Field(int, 1, "independent chains per run"),
    "gibbs.proposal_scale": _Field(_parse_float_or_auto, "auto",
                                   "proposal std; auto = 0.2 width / sqrt(dim)"),
    "gibbs.seed": _Field(int, 0, "master seed"),
    "grid.n": _Field(_parse_int_list, (50, 150, 500, 1500, 5000),
                     "sample sizes for scaling studies"),
    "grid.replicates": _Field(int, 1, "independent datasets per n"),
    "certify.n": _Field(int, 2000, "sample size of the certificate"),
    "certify.delta": _Field(float, 0.05, "certificate failure probability"),
    "certify.c0": _Field(_parse_float_or_auto, "auto",
                         "additive constant; auto derives it for completion"),
    "certify.rlct_source": _Field(str, "h-min",
                                  "h-min | closed-form | relu-bound | bic"),
    "thermo.enabled": _Field(_parse_bool, False, "run thermodynamic integration"),
    "thermo.beta": _Field(float, 1.0, "inverse temperature of the partition integral"),
    "thermo.rungs": _Field(int, 16, "tempering rungs (schedule (t/T)^2)"),
    "thermo.chain_length": _Field(int, 4000, "steps per rung"),
    "thermo.burn_in": _Field(int, 1000, "burn-in per rung"),
    "thermo.fit_loglog": _Field(_parse_bool, False,
                                "include the -log log n regressor in the fit"),
    "output.dir": _Field(str, "out", "output directory"),
    "output.formats": _Field(_parse_str_list, ("csv", "svg", "json"),
                             "subset of csv,svg,json"),
}

_FAMILIES = ("completion", "relu")


class ExperimentConfig:
    """Typed view over a resolved flat config document."""

    def __init__(self, values: dict):
        self._values = values

    def __getitem__(self, key: str):
        return self._values[key]

    def keys(self):
        return self._values.keys()

    def with_value(self, key: str, value) -> "ExperimentConfig":
        """Copy of the config with one key replaced (revalidated)."""
        if key not in _SCHEMA:
            raise ConstraintError(f"unknown key {key!r}")
        values = dict(self._values)
        values[key] = value
        _validate(values)
        return ExperimentConfig(values)

    @property
    def family(self) -> str:
        return self._values["model.family"]

    def render(self) -> str:
        lines = [f"{key} = {_render_value(self._values[key])}"
                 for key in sorted(self._values)]
        return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse and validate a config document against the schema."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConstraintError(f"line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key in raw:
            raise ConstraintError(f"line {lineno}: duplicate key {key!r}")
        if key not in _SCHEMA:
            raise ConstraintError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value
    if "model.family" not in raw:
        raise ConstraintError("config must set model.family")
    values = {}
    for key, f in _SCHEMA.items():
        if key in raw:
            try:
                values[key] = f.parse(raw[key])
            except (ValueError, TypeError) as exc:
                raise ConstraintError(f"bad value for {key!r}: {raw[key]!r}") from exc
        else:
            values[key] = f.default
    _validate(values)
    return ExperimentConfig(values)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())


def _validate(values: dict):
    if values["model.family"] not in _FAMILIES:
        raise ConstraintError(f"model.family must be one of {_FAMILIES}")
    if values["certify.rlct_source"] not in ("h-min", "closed-form", "relu-bound", "bic"):
        raise ConstraintError("unknown certify.rlct_source")
    if not set(values["output.formats"]) <= {"csv", "svg", "json"}:
        raise ConstraintError("output.formats entries must be csv, svg or json")
    if values["gibbs.box"] <= 0:
        raise ConstraintError("gibbs.box must be positive")
    if values["grid.replicates"] < 1:
        raise ConstraintError("grid.replicates must be positive")
    if values["model.family"] == "relu" and values["gibbs.omega"] == "auto":
        raise ConstraintError(
            "gibbs.omega must be explicit for relu models: the worst-case "
            "squared-loss cap over a weight box is too small to be useful")
    if len(values["model.true_widths"]) > len(values["model.widths"]):
        raise ConstraintError("true network cannot have more layers than the candidate")


def config_help() -> str:
    """One line per key: name, default, meaning (for --help output)."""
    lines = []
    for key in sorted(_SCHEMA):
        f = _SCHEMA[key]
        default = "required" if f.default is None else _render_value(f.default)
        lines.append(f"  {key:24s} (default {default}): {f.help}")
    return "\n".join(lines)
