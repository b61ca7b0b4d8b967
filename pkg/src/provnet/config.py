"""Pipeline configuration: a flat ``key = value`` text file.

Recognized keys (defaults in parentheses)::

    regions                 regions.csv or .geojson (required)
    counts                  long counts.csv; chapter ratios become outcomes
    attributes              wide attributes.csv holding outcome columns
    covariates              wide CSV with covariates (defaults to attributes)
    outcomes                comma list of outcome columns (all available)
    covariate_columns       comma list of covariate columns (none: skip SDM)
    k                       neighbors per region (7)
    nsim                    permutations (999)
    seed                    unsigned 64-bit seed (12345)
    alpha                   significance level (0.05)
    standardize_covariates  z-score covariates before SDM (true)
    lisa_tail               directed | greater | two-sided (directed)
    fdr                     Benjamini-Hochberg gate for LISA labels (false)
    render_maps             write SVG maps when polygons exist (true)
    value_ramp              two colors, low,high (#fff5eb,#7f2704)
    map_width               SVG map width in px (480)
    out                     output directory (out)

Relative paths resolve against the config file's directory. Lines starting
with ``#`` are comments.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

__all__ = ["PipelineConfig", "load_config", "parse_config"]

_PATH_KEYS = ("regions", "counts", "attributes", "covariates", "out")
_TAILS = ("directed", "greater", "two-sided")


@dataclass(frozen=True)
class PipelineConfig:
    regions: str | None = None
    counts: str | None = None
    attributes: str | None = None
    covariates: str | None = None
    outcomes: tuple = ()
    covariate_columns: tuple = ()
    k: int = 7
    nsim: int = 999
    seed: int = 12345
    alpha: float = 0.05
    standardize_covariates: bool = True
    lisa_tail: str = "directed"
    fdr: bool = False
    render_maps: bool = True
    value_ramp: tuple = ("#fff5eb", "#7f2704")
    map_width: int = 480
    out: str = "out"

    def validate(self) -> "PipelineConfig":
        """Check values that do not need the input files."""
        if not self.regions:
            raise ConfigError("'regions' is required")
        if bool(self.counts) == bool(self.attributes):
            raise ConfigError("give exactly one of 'counts' or 'attributes'")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.nsim < 99:
            raise ConfigError(f"nsim must be >= 99, got {self.nsim}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.lisa_tail not in _TAILS:
            raise ConfigError(f"lisa_tail must be one of {', '.join(_TAILS)}")
        if len(self.value_ramp) != 2:
            raise ConfigError("value_ramp needs exactly two colors")
        for key in ("regions", "counts", "attributes", "covariates"):
            p = getattr(self, key)
            if p and not Path(p).is_file():
                raise ConfigError(f"{key}: file not found: {p}")
        return self

    def with_overrides(self, **kw) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def canonical(self) -> str:
        """Stable ``key=value`` rendering of every field."""
        lines = []
        for k, v in sorted(asdict(self).items()):
            if isinstance(v, (tuple, list)):
                v = ",".join(map(str, v))
            lines.append(f"{k}={v}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


def _bool(key, value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _list(value):
    return tuple(s.strip() for s in value.split(",") if s.strip())


def parse_config(text: str, base_dir=None) -> PipelineConfig:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=None)
    parser.optionxform = str
    try:
        parser.read_string("[pipeline]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    known = {f.name: f for f in fields(PipelineConfig)}
    kw = {}
    for key, raw in parser["pipeline"].items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        raw = raw.strip()
        try:
            if key in ("k", "nsim", "seed", "map_width"):
                kw[key] = int(raw)
            elif key == "alpha":
                kw[key] = float(raw)
            elif key in ("standardize_covariates", "fdr", "render_maps"):
                kw[key] = _bool(key, raw)
            elif key in ("outcomes", "covariate_columns", "value_ramp"):
                kw[key] = _list(raw)
            else:
                kw[key] = raw or None
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    if base_dir is not None:
        for key in _PATH_KEYS:
            if kw.get(key) and not Path(kw[key]).is_absolute():
                kw[key] = str(Path(base_dir) / kw[key])
    return PipelineConfig(**kw)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)
