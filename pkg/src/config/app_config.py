import os
from typing import Dict, List, Mapping, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field, ValidationError

from src.aligner.alignment import AlignCosts, FragmentMode
from src.aligner.normalizer import NormPolicy
from src.utils.errors import InvalidArgumentError

TRUE_VALUES = ("1", "true", "yes", "on")


def _flag(values: Mapping[str, str], key: str, default: bool) -> bool:
    raw = values.get(key)
    if raw is None or not raw.strip():
        return default
    return raw.strip().lower() in TRUE_VALUES


def _list(raw: str) -> List[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def parse_nonlexical_classes(raw: str) -> List[List[str]]:
    """"uh-huh|uh-hum;mm-hmm|um-hum" -> [["uh-huh", "uh-hum"], ["mm-hmm", "um-hum"]]"""
    classes = []
    for group in raw.split(";"):
        members = [m.strip() for m in group.split("|") if m.strip()]
        if members:
            classes.append(members)
    return classes


def parse_contractions(raw: str) -> Dict[str, List[str]]:
    """"gonna=gon+na,wanna=wan+na" -> {"gonna": ["gon", "na"], ...}"""
    splits: Dict[str, List[str]] = {}
    for item in _list(raw):
        word, sep, pieces = item.partition("=")
        if not sep or not word.strip():
            raise InvalidArgumentError(f"缩略拆分格式应为 word=piece+piece: {item!r}")
        splits[word.strip()] = [p.strip() for p in pieces.split("+")]
    return splits


class AppConfig(BaseModel):
    """应用全局配置"""
    log_level: str = "INFO"
    log_file: Optional[str] = None
    log_dir: str = "data/logs"
    norm: NormPolicy = Field(default_factory=NormPolicy)
    costs: AlignCosts = Field(default_factory=AlignCosts)
    fragment_mode: FragmentMode = FragmentMode.STRICT
    merge_tolerance: str = "0"
    min_match_rate: float = Field(default=0.5, ge=0.0, le=1.0)
    jobs: int = Field(default=1, ge=1)

    @classmethod
    def from_values(cls, values: Mapping[str, str]) -> "AppConfig":
        """从 KEY=VALUE 映射创建配置，缺省的键取默认值"""
        defaults = NormPolicy()
        try:
            norm_fields = {
                "case_fold": _flag(values, "NORM_CASE_FOLD", defaults.case_fold),
                "strip_attached_punct": _flag(values, "NORM_STRIP_PUNCT", defaults.strip_attached_punct),
                "split_clitics": _flag(values, "NORM_SPLIT_CLITICS", defaults.split_clitics),
            }
            if values.get("NORM_FRAGMENT_SUFFIXES"):
                norm_fields["fragment_suffixes"] = _list(values["NORM_FRAGMENT_SUFFIXES"])
            if values.get("NORM_NONLEXICAL_CLASSES"):
                norm_fields["nonlexical_classes"] = parse_nonlexical_classes(values["NORM_NONLEXICAL_CLASSES"])
            if values.get("NORM_CONTRACTIONS"):
                norm_fields["contraction_splits"] = parse_contractions(values["NORM_CONTRACTIONS"])

            return cls(
                log_level=values.get("LOG_LEVEL") or "INFO",
                log_file=values.get("LOG_FILE") or None,
                log_dir=values.get("LOG_DIR") or "data/logs",
                norm=NormPolicy(**norm_fields),
                costs=AlignCosts(
                    substitution=int(values.get("ALIGN_SUB_COST") or 4),
                    insertion=int(values.get("ALIGN_INS_COST") or 3),
                    deletion=int(values.get("ALIGN_DEL_COST") or 3),
                ),
                fragment_mode=FragmentMode((values.get("FRAGMENT_MODE") or "strict").lower()),
                merge_tolerance=values.get("MERGE_TOLERANCE") or "0",
                min_match_rate=float(values.get("MIN_MATCH_RATE") or 0.5),
                jobs=int(values.get("JOBS") or 1),
            )
        except (ValidationError, ValueError) as e:
            raise InvalidArgumentError(f"配置不合法: {str(e)}")

    @classmethod
    def from_env(cls, config_file: Optional[str] = None) -> "AppConfig":
        """
        从环境变量创建配置

        Args:
            config_file: KEY=VALUE 配置文件，其中的值优先于环境变量
        """
        load_dotenv()
        values: Dict[str, str] = dict(os.environ)
        if config_file:
            if not os.path.exists(config_file):
                raise InvalidArgumentError(f"配置文件不存在: {config_file}")
            values.update({k: v for k, v in dotenv_values(config_file).items() if v is not None})
        return cls.from_values(values)


app_config = AppConfig.from_env()
