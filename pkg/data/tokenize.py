import re
from typing import Optional

from errors import ConfigError, DataError

# Shared by geo_in and zh_en_in.
PUNCTUATION = ".,?!'\";:。？！，"

MODES = ("colors", "geo_in", "geo_out", "wsj", "zh_en_in", "zh_out")

# domain -> (input mode, output mode)
DOMAINS = {
    "colors": ("colors", "colors"),
    "geo": ("geo_in", "geo_out"),
    "wsj": ("wsj", "wsj"),
    "zh": ("zh_en_in", "zh_out"),
}

_PUNCT_CLASS = re.escape(PUNCTUATION)
_STRIP_PUNCT = str.maketrans("", "", PUNCTUATION)
# parentheses, single-letter variables A-D, and everything else up to the next of those
_GEO_OUT = re.compile(r"[()]|[A-D]|[^\s()A-D]+")
_ZH_EN_IN = re.compile(rf"[^\s{_PUNCT_CLASS}]+|[{_PUNCT_CLASS}]")
_ZH_OUT = re.compile(r"[A-Za-z0-9]+|\S")


def _split_spaces(text):
    return [tok for tok in text.split(" ") if tok]


def _geo_in(text):
    words = (w.translate(_STRIP_PUNCT) for w in text.split())
    return [w for w in words if w]


def _geo_out(text):
    # commas become separators so adjacent arguments never fuse
    return _GEO_OUT.findall(text.replace(",", " "))


_TOKENIZERS = {
    "colors": _split_spaces,
    "wsj": lambda text: text.split(),
    "geo_in": _geo_in,
    "geo_out": _geo_out,
    "zh_en_in": _ZH_EN_IN.findall,
    "zh_out": _ZH_OUT.findall,
}


def tokenize(text: str, mode: str, line_no: Optional[int] = None) -> list[str]:
    try:
        fn = _TOKENIZERS[mode]
    except KeyError:
        raise ConfigError(f"unknown tokenization mode '{mode}' (expected one of {', '.join(MODES)})") from None
    tokens = fn(text)
    if not tokens:
        where = f"line {line_no}: " if line_no is not None else ""
        raise DataError(f"{where}nothing left after {mode} tokenization of {text!r}")
    return tokens


def domain_modes(domain: str) -> tuple[str, str]:
    try:
        return DOMAINS[domain]
    except KeyError:
        raise ConfigError(f"unknown domain '{domain}' (expected one of {', '.join(DOMAINS)})") from None
