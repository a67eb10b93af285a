"""End-to-end banner run: extract attributes, build prompts, generate images.

Per-product failures are aggregated into the run summary and never abort
the batch; the exit-code policy on top of that summary belongs to the CLI.
"""

from __future__ import annotations

from .clients import BackendRejection, TransportError
from .extraction import ExtractionError, ExtractionResult, PromptTemplate, extract_attributes
from .generation import GenParams, ImageStore, generate_batch
from .ledger import LedgerWriter
from .prompts import PromptBuildError, Strategy, build_prompt

STRATEGY_ORDER = (Strategy.LLM, Strategy.PNAME, Strategy.PTYPE)


def run_pipeline(products, template: PromptTemplate, textgen_client, imagegen_client,
                 params: GenParams, store: ImageStore, run_ledger: LedgerWriter | None,
                 strategies=STRATEGY_ORDER, sanitize_mode: str = "lenient",
                 prompt_suffix: str = "", max_inflight: int = 4,
                 extraction_ledger: LedgerWriter | None = None) -> dict:
    """Run the full chain over `products` and return a summary dict.

    The summary counts requested and produced generations and lists every
    per-product failure with its stage and reason.
    """
    products = list(products)
    strategies = tuple(strategies)
    failures: list[dict] = []

    extractions: dict[str, ExtractionResult] = {}
    if Strategy.LLM in strategies:
        for product in products:
            try:
                extractions[product.product_id] = extract_attributes(
                    product, template, textgen_client, mode=sanitize_mode,
                    ledger=extraction_ledger)
            except (TransportError, BackendRejection, ExtractionError) as exc:
                failures.append({"product_id": product.product_id,
                                 "strategy": Strategy.LLM.value,
                                 "stage": "extract", "reason": str(exc)})

    prompts = []
    for product in products:
        for strategy in strategies:
            if strategy is Strategy.LLM and product.product_id not in extractions:
                continue  # extraction already failed and was flagged above
            try:
                prompts.append(build_prompt(
                    product, strategy,
                    extraction=extractions.get(product.product_id),
                    prompt_suffix=prompt_suffix))
            except PromptBuildError as exc:
                failures.append({"product_id": product.product_id,
                                 "strategy": strategy.value,
                                 "stage": "build_prompt", "reason": str(exc)})

    records, gen_failures = generate_batch(prompts, params, imagegen_client, store,
                                           ledger=run_ledger, max_inflight=max_inflight)
    failures.extend(gen_failures)

    return {
        "products": len(products),
        "strategies": [s.value for s in strategies],
        "requested": len(products) * len(strategies),
        "records": len(records),
        "failure_count": len(failures),
        "failures": failures,
        "record_ids": [r.record_id for r in records],
    }
