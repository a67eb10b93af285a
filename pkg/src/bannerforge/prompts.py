"""Image-prompt construction for the three prompting strategies."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Strategy(str, Enum):
    LLM = "LLM"
    PNAME = "PNAME"
    PTYPE = "PTYPE"


_SOURCE = {
    Strategy.LLM: "extraction",
    Strategy.PNAME: "product_name",
    Strategy.PTYPE: "product_type",
}


class PromptBuildError(Exception):
    pass


def source_for(strategy: Strategy) -> str:
    """Name of the text source a strategy draws its prompt from."""
    return _SOURCE[Strategy(strategy)]


@dataclass(frozen=True)
class ImagePrompt:
    product_id: str
    strategy: Strategy
    text: str
    source: str

    def __post_init__(self):
        if not self.text:
            raise PromptBuildError(f"empty prompt text for product {self.product_id!r}")
        if self.source != _SOURCE[self.strategy]:
            raise PromptBuildError(
                f"strategy {self.strategy.value} must have source {_SOURCE[self.strategy]!r}"
            )


def build_prompt(product, strategy: Strategy, extraction=None, prompt_suffix: str = "") -> ImagePrompt:
    """Produce the image-generation prompt for one product under one strategy.

    LLM uses the sanitized extraction sentence, PNAME the raw product name,
    PTYPE the product-type label. prompt_suffix is appended verbatim when set
    (defaults to empty so metric comparisons stay suffix-free).
    """
    strategy = Strategy(strategy)
    if strategy is Strategy.LLM:
        if extraction is None or not extraction.sanitized_output:
            raise PromptBuildError(
                f"strategy LLM requires an extraction result for product {product.product_id!r}"
            )
        text = extraction.sanitized_output
    elif strategy is Strategy.PNAME:
        text = product.name
    else:
        text = product.product_type
    if prompt_suffix:
        text = f"{text}{prompt_suffix}"
    return ImagePrompt(
        product_id=product.product_id,
        strategy=strategy,
        text=text,
        source=_SOURCE[strategy],
    )
