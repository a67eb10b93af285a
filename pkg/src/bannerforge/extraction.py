"""Attribute extraction: render the chat prompt, call text generation, clean the reply.

The reply sentence ("subject with keywords in setting") is what gets fed to
the image model; tuple parsing is best-effort metadata and never blocks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

PLACEHOLDER = "{{PRODUCT_NAME}}"

SYS_OPEN, SYS_CLOSE = "<<SYS>>", "<</SYS>>"
INST_OPEN, INST_CLOSE = "[INST]", "[/INST]"


class TemplateError(Exception):
    pass


class ExtractionError(Exception):
    """Non-retryable extraction failure (empty or degenerate model reply)."""


@dataclass(frozen=True)
class PromptTemplate:
    system_text: str
    user_text: str
    wrapper: str = "none"  # none | inst_sys

    def __post_init__(self):
        if self.wrapper not in ("none", "inst_sys"):
            raise TemplateError(f"unknown wrapper {self.wrapper!r}")
        if self.user_text.count(PLACEHOLDER) != 1:
            raise TemplateError(f"user_text must contain {PLACEHOLDER} exactly once")
        if PLACEHOLDER in self.system_text:
            raise TemplateError("system_text must not contain the placeholder")


def load_template(path) -> PromptTemplate:
    """Load a template file.

    Files with <<SYS>>/[INST] chat delimiters parse into system/user blocks
    (wrapper inst_sys); anything else is a bare user template (wrapper none).
    """
    text = Path(path).read_text(encoding="utf-8")
    return parse_template(text)


def parse_template(text: str) -> PromptTemplate:
    if SYS_OPEN in text:
        m = re.search(
            re.escape(SYS_OPEN) + r"\n(.*?)\n" + re.escape(SYS_CLOSE) + r".*?"
            + re.escape(INST_OPEN) + r"\n(.*?)\n" + re.escape(INST_CLOSE),
            text,
            flags=re.DOTALL,
        )
        if m is None:
            raise TemplateError("malformed chat template: expected <<SYS>>..<</SYS>> then [INST]..[/INST]")
        system_text = m.group(1).strip("\n")
        user_text = m.group(2).strip("\n")
        return PromptTemplate(system_text=system_text, user_text=user_text, wrapper="inst_sys")
    return PromptTemplate(system_text="", user_text=text, wrapper="none")


def render_llm_prompt(product, template: PromptTemplate) -> str:
    """Substitute the product name into the template (single pass) and wrap."""
    user = template.user_text.replace(PLACEHOLDER, product.name, 1)
    if template.wrapper == "none":
        return user
    return (
        f"{SYS_OPEN}\n\n{template.system_text}\n\n{SYS_CLOSE}\n\n\n"
        f"{INST_OPEN}\n\n{user}\n\n{INST_CLOSE}\n"
    )


# Character rules. Only ASCII letters, space, comma, period, hyphen,
# apostrophe and double quote survive strict mode; lenient keeps digits too.
_ALLOWED = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ ,.'\"-")

_EMOJI_RANGES = (
    (0x1F000, 0x1FAFF),
    (0x2600, 0x27BF),
    (0x2B00, 0x2BFF),
    (0xFE00, 0xFE0F),
    (0x200D, 0x200D),
)


def _is_emoji(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def sanitize_output(raw: str, mode: str = "lenient") -> tuple[str, list[str]]:
    """Apply the output character rules and trim to the first sentence.

    Returns (sanitized text, violation categories in first-hit order).
    Categories: "emoji", "digits", "disallowed". Digits are a recorded hit in
    both modes but are only removed in strict mode.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown sanitize mode {mode!r}")
    if not raw:
        raise ExtractionError("empty model output")

    violations: list[str] = []

    def hit(category: str):
        if category not in violations:
            violations.append(category)

    out = []
    for ch in raw:
        if ch.isspace():
            out.append(" ")
        elif ch in _ALLOWED:
            out.append(ch)
        elif ch.isdigit() and ch.isascii():
            hit("digits")
            if mode == "lenient":
                out.append(ch)
        elif _is_emoji(ch):
            hit("emoji")
        else:
            hit("disallowed")

    text = re.sub(r" {2,}", " ", "".join(out)).strip()
    dot = text.find(".")
    if dot >= 0:
        text = text[: dot + 1]
    text = text.strip()
    if not text:
        raise ExtractionError(f"model output empty after sanitation (violations: {violations})")
    return text, violations


def parse_tuple(sentence: str):
    """Best-effort split into (subject, keywords, setting).

    Setting is whatever follows the last standalone " in "; subject/keywords
    split on the first standalone " with " before it. Returns None when
    either delimiter is absent; never raises.
    """
    idx_in = sentence.rfind(" in ")
    if idx_in < 0:
        return None
    head, setting = sentence[:idx_in], sentence[idx_in + 4 :]
    idx_with = head.find(" with ")
    if idx_with < 0:
        return None
    subject, keywords = head[:idx_with], head[idx_with + 6 :]
    return subject.strip(), keywords.strip(), setting.strip()


@dataclass
class ExtractionResult:
    product_id: str
    raw_output: str
    sanitized_output: str
    parsed: tuple[str, str, str] | None = None
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "product_id": self.product_id,
            "raw_output": self.raw_output,
            "sanitized_output": self.sanitized_output,
            "parsed": None
            if self.parsed is None
            else {"subject": self.parsed[0], "keywords": self.parsed[1], "setting": self.parsed[2]},
            "violations": list(self.violations),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExtractionResult":
        parsed = data.get("parsed")
        return cls(
            product_id=str(data["product_id"]),
            raw_output=str(data.get("raw_output", "")),
            sanitized_output=str(data["sanitized_output"]),
            parsed=None if parsed is None
            else (parsed["subject"], parsed["keywords"], parsed["setting"]),
            violations=list(data.get("violations", [])),
        )


def extract_attributes(product, template: PromptTemplate, client, mode: str = "lenient",
                       ledger=None) -> ExtractionResult:
    """Run one product through the text-generation service.

    The client owns transport retries; an empty (or empty-after-sanitation)
    reply is non-retryable and surfaces as ExtractionError so the caller can
    flag the product. The result is appended to the run ledger when given.
    """
    prompt = render_llm_prompt(product, template)
    raw = client.generate(prompt)
    if not raw:
        raise ExtractionError(f"product {product.product_id!r}: text generation returned empty output")
    sanitized, violations = sanitize_output(raw, mode)
    result = ExtractionResult(
        product_id=product.product_id,
        raw_output=raw,
        sanitized_output=sanitized,
        parsed=parse_tuple(sanitized),
        violations=violations,
    )
    if ledger is not None:
        ledger.append(result.to_dict())
    return result
