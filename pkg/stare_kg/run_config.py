# stare_kg/run_config.py
"""Declarative run configuration.

A run config is a flat text file of `dotted.key = value` lines; the keys
mirror the nested pydantic models below. Defaults are the selected values
of the reference hyperparameter search (2 layers, dim 200, rotate, weighted
sum with alpha 0.8, sum aggregation, dropout 0.3, 2x512x4 transformer).
"""
import logging
import re
from enum import Enum
from typing import Dict, Iterable, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from stare_kg.errors import ConfigKeyError, ConfigValueError
from stare_kg.model.compose import GammaKind, PhiKind

log = logging.getLogger(__name__)


class Activation(str, Enum):
    TANH = "tanh"
    RELU = "relu"
    IDENTITY = "identity"


class QualifierAggregation(str, Enum):
    SUM = "sum"
    MEAN = "mean"


class DecoderKind(str, Enum):
    POOLED_TRANSFORMER = "transformer"
    CONVE = "conve"
    CONVKB = "convkb"
    MASKED_TRANSFORMER = "masked_transformer"


class EncoderKind(str, Enum):
    STARE = "stare"
    NONE = "none"


class LiteralMode(str, Enum):
    DROP_STATEMENT = "drop_statement"   # WikiPeople
    DROP_QUALIFIER = "drop_qualifier"   # WD50K construction


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False, validate_assignment=True)


class DataConfig(_Section):
    dir: str = "data/wd50k"
    out_dir: Optional[str] = None
    literal_mode: LiteralMode = LiteralMode.DROP_QUALIFIER
    literal_pattern: Optional[str] = None
    rare_min_count: int = 0           # 0 = rarity filter off
    rare_fixed_point: bool = True
    ratio: float = 1.0
    truncate: int = 6
    valid_fraction: float = 0.1
    test_fraction: float = 0.2


class EncoderConfig(_Section):
    num_layers: int = Field(2, ge=1)
    dim: int = Field(200, ge=1)
    phi_r: PhiKind = PhiKind.ROTATE
    phi_q: PhiKind = PhiKind.ROTATE
    gamma: GammaKind = GammaKind.WEIGHTED_SUM
    alpha: float = Field(0.8, ge=0.0, le=1.0)
    qual_aggregation: QualifierAggregation = QualifierAggregation.SUM
    dropout: float = Field(0.3, ge=0.0, lt=1.0)
    activation: Activation = Activation.TANH
    degree_norm: bool = False


class DecoderConfig(_Section):
    kind: DecoderKind = DecoderKind.POOLED_TRANSFORMER
    max_len: int = Field(15, ge=2)
    trf_layers: int = Field(2, ge=1)
    trf_hidden: int = Field(512, ge=1)
    trf_heads: int = Field(4, ge=1)
    trf_dropout: float = Field(0.1, ge=0.0, lt=1.0)
    trf_activation: str = "relu"
    conv_filters: int = Field(200, ge=1)
    conv_kernel: int = Field(7, ge=1)
    conve_height: int = Field(40, ge=1)

    @field_validator("trf_activation")
    @classmethod
    def _activation(cls, v: str) -> str:
        if v not in ("relu", "gelu"):
            raise ValueError("trf_activation must be relu or gelu")
        return v


class ModelConfig(_Section):
    encoder: EncoderKind = EncoderKind.STARE
    use_qualifiers: bool = True       # False = (T) mode
    dtype: str = "float32"

    @field_validator("dtype")
    @classmethod
    def _dtype(cls, v: str) -> str:
        if v not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")
        return v


class TrainConfig(_Section):
    epochs: int = Field(400, ge=0)    # 500 for WikiPeople-style data
    batch_size: int = Field(128, ge=1)
    lr: float = Field(1e-4, ge=0.0)
    label_smoothing: float = Field(0.1, ge=0.0, le=1.0)
    checkpoint_every: int = Field(50, ge=0)
    eval_every: int = Field(0, ge=0)


class EvalConfig(_Section):
    split: str = "test"
    batch_size: int = Field(256, ge=1)
    hits_at: List[int] = [1, 5, 10]


class GradCheckConfig(_Section):
    step: float = 1e-5
    tolerance: float = 1e-4
    max_entries: int = Field(48, ge=0)   # 0 = every entry
    batch_size: int = Field(4, ge=1)
    # 합성 토이 KG 크기
    num_entities: int = Field(5, ge=2)
    num_relations: int = Field(2, ge=1)
    num_statements: int = Field(8, ge=1)
    max_qualifiers: int = Field(2, ge=0)


class RunConfig(_Section):
    seed: int = 42
    output_dir: Optional[str] = None
    data: DataConfig = DataConfig()
    model: ModelConfig = ModelConfig()
    encoder: EncoderConfig = EncoderConfig()
    decoder: DecoderConfig = DecoderConfig()
    train: TrainConfig = TrainConfig()
    eval: EvalConfig = EvalConfig()
    gradcheck: GradCheckConfig = GradCheckConfig()


# ---------------- flat text <-> nested dict ----------------
_COMMENT_RE = re.compile(r"(^|\s)#.*$")

def _parse_value(raw: str):
    v = raw.strip()
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    if v.lower() in ("none", "null", ""):
        return None
    if v.startswith("[") and v.endswith("]"):
        return [_parse_value(p) for p in v[1:-1].split(",") if p.strip()]
    return v   # pydantic이 타입 변환 담당


def _known_keys(model_cls=RunConfig, prefix: str = "") -> Dict[str, type]:
    keys = {}
    for name, field in model_cls.model_fields.items():
        ann = field.annotation
        if isinstance(ann, type) and issubclass(ann, BaseModel):
            keys.update(_known_keys(ann, f"{prefix}{name}."))
        else:
            keys[f"{prefix}{name}"] = ann
    return keys


def parse_flat_lines(lines: Iterable[str], source: str = "<config>") -> Dict[str, object]:
    flat = {}
    for line_no, line in enumerate(lines, start=1):
        line = _COMMENT_RE.sub("", line).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigValueError(f"{source}:{line_no}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        flat[key.strip()] = _parse_value(value)
    return flat


def _nest(flat: Dict[str, object]) -> dict:
    known = _known_keys()
    tree: dict = {}
    for key, value in flat.items():
        if key not in known:
            raise ConfigKeyError(key)
        node = tree
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return tree


def load_run_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> RunConfig:
    flat: Dict[str, object] = {}
    if path:
        with open(path, "r", encoding="utf-8") as f:
            flat.update(parse_flat_lines(f, source=path))
    flat.update(parse_flat_lines(overrides, source="<override>"))
    tree = _nest(flat)
    try:
        config = RunConfig.model_validate(tree)
    except ValidationError as e:
        err = e.errors()[0]
        loc = ".".join(str(p) for p in err["loc"])
        if err["type"] == "extra_forbidden":
            raise ConfigKeyError(loc) from e
        raise ConfigValueError(f"{loc}: {err['msg']}") from e
    log.info(f"Run config loaded | path={path} | overrides={len(flat)} keys")
    return config


def _flatten(model: BaseModel, prefix: str = "") -> List[str]:
    lines = []
    for name in type(model).model_fields:
        value = getattr(model, name)
        if isinstance(value, BaseModel):
            lines.extend(_flatten(value, f"{prefix}{name}."))
            continue
        if isinstance(value, Enum):
            value = value.value
        elif isinstance(value, list):
            value = "[" + ", ".join(str(v) for v in value) + "]"
        elif value is None:
            value = "none"
        lines.append(f"{prefix}{name} = {value}")
    return lines


def dump_run_config(config: RunConfig) -> str:
    return "\n".join(_flatten(config)) + "\n"
