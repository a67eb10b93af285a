"""Command-line interface for the banner pipeline.

Every subcommand prints a json result to stdout and diagnostics to stderr.
Exit code 0 means the primary artifact was produced; per-item failures are
reported inside the summary, total failure exits 1.
"""

from __future__ import annotations

import functools
import json
import random
import sys
from importlib import resources
from pathlib import Path

import click

from .adherence import AdherenceError, extract_objects, par_report, presence
from .brisque import BrisqueError, brisque_features, summarize_scores, to_luminance
from .catalog import CatalogError, ingest_catalog, sample_items, word_count_stats
from .clients import (BackendRejection, DetectorHttpClient, ImageGenHttpClient,
                      MockDetectorClient, MockImageGenClient, MockTextGenClient,
                      TextGenHttpClient, TransportError)
from .config import Config, ConfigError, load_config
from .extraction import (ExtractionError, ExtractionResult, TemplateError,
                         extract_attributes, load_template, parse_template)
from .generation import GenerationError, ImageStore
from .human_eval import HumanEvalError, RatingStore, create_survey, survey_report
from .ledger import LedgerWriter, read_ledger
from .personalization import PersonalizationError, load_affinities, select_item
from .pipeline import STRATEGY_ORDER, run_pipeline
from .prompts import ImagePrompt, PromptBuildError, Strategy, source_for
from .svr import SvrModelError, brisque_score, parse_svr_model

_DOMAIN_ERRORS = (CatalogError, TemplateError, ExtractionError, PromptBuildError,
                  GenerationError, PersonalizationError, BrisqueError, SvrModelError,
                  AdherenceError, HumanEvalError, ConfigError, TransportError,
                  BackendRejection, OSError)

_STRATEGY_CHOICES = [s.value for s in STRATEGY_ORDER]


def _emit(data) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


def _diag(message: str) -> None:
    click.echo(message, err=True)


def _clean_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _DOMAIN_ERRORS as exc:
            _diag(f"error: {exc}")
            sys.exit(1)
    return wrapper


def _cfg(ctx) -> Config:
    return load_config(ctx.obj.get("config_path"))


def _catalog(cfg: Config, flag):
    path = flag or cfg.paths["catalog"]
    if not path:
        raise ConfigError("no catalog configured: pass --catalog or set paths.catalog")
    return ingest_catalog(path)


def _template(cfg: Config, flag):
    path = flag or cfg.paths["template"]
    if path:
        return load_template(path)
    bundled = resources.files("bannerforge").joinpath("data/llm_prompt_template.txt")
    return parse_template(bundled.read_text(encoding="utf-8"))


def _textgen_client(cfg: Config, backend: str, fail_contains=()):
    if backend == "mock":
        return MockTextGenClient(fail_if_contains=fail_contains)
    tg = cfg.textgen
    return TextGenHttpClient(tg["base_url"], auth_header=tg["auth_header"],
                             temperature=tg["temperature"], max_tokens=tg["max_tokens"])


def _imagegen_client(cfg: Config, backend: str):
    if backend == "mock":
        return MockImageGenClient()
    ig = cfg.imagegen
    return ImageGenHttpClient(ig["base_url"], auth_header=ig["auth_header"])


def _detector_client(cfg: Config, backend: str):
    if backend == "mock":
        return MockDetectorClient()
    return DetectorHttpClient(cfg.detector["base_url"])


def _product_dict(product) -> dict:
    return {"product_id": product.product_id, "name": product.name,
            "product_type": product.product_type, "cohort": product.cohort}


def _pick_products(catalog, product_ids):
    if not product_ids:
        return list(catalog)
    return [catalog.get(pid) for pid in product_ids]


backend_option = click.option("--backend", type=click.Choice(["http", "mock"]),
                              default="http", show_default=True,
                              help="Real HTTP services or the deterministic offline mocks.")


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Path to a json config file.")
@click.pass_context
def cli(ctx, config_path):
    """Banner generation pipeline: catalog to prompts to images to evaluation."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@cli.command()
@click.option("--catalog", "catalog_path", type=click.Path(), default=None)
@click.option("--format", "format_", type=click.Choice(["csv", "jsonl"]), default=None)
@click.pass_context
@_clean_errors
def ingest(ctx, catalog_path, format_):
    """Validate a catalog file and summarize its contents."""
    cfg = _cfg(ctx)
    path = catalog_path or cfg.paths["catalog"]
    if not path:
        raise ConfigError("no catalog configured: pass --catalog or set paths.catalog")
    catalog = ingest_catalog(path, format=format_)
    _emit({
        "path": str(path),
        "products": len(catalog),
        "product_types": sorted({p.product_type for p in catalog}),
        "cohorts": sorted({p.cohort for p in catalog}),
    })


@cli.command()
@click.option("--catalog", "catalog_path", type=click.Path(), default=None)
@click.pass_context
@_clean_errors
def stats(ctx, catalog_path):
    """Word-count statistics of product names."""
    catalog = _catalog(_cfg(ctx), catalog_path)
    _emit(word_count_stats(catalog).to_dict())


@cli.command()
@click.option("--catalog", "catalog_path", type=click.Path(), default=None)
@click.option("--product-type", required=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.pass_context
@_clean_errors
def sample(ctx, catalog_path, product_type, n, seed):
    """Deterministically sample n products of one type."""
    catalog = _catalog(_cfg(ctx), catalog_path)
    picked = sample_items(catalog, product_type, n, seed)
    _emit({"product_type": product_type, "n": n, "seed": seed,
           "products": [_product_dict(p) for p in picked]})


@cli.command()
@click.option("--catalog", "catalog_path", type=click.Path(), default=None)
@click.option("--product-id", "product_ids", multiple=True)
@click.option("--template", "template_path", type=click.Path(), default=None)
@click.option("--mode", type=click.Choice(["lenient", "strict"]), default=None)
@click.option("--ledgers-dir", type=click.Path(), default=None)
@backend_option
@click.pass_context
@_clean_errors
def extract(ctx, catalog_path, product_ids, template_path, mode, ledgers_dir, backend):
    """Extract subject/keywords/setting sentences via text generation."""
    cfg = _cfg(ctx)
    if ledgers_dir:
        cfg.paths["ledgers_dir"] = ledgers_dir
    catalog = _catalog(cfg, catalog_path)
    products = _pick_products(catalog, product_ids)
    template = _template(cfg, template_path)
    client = _textgen_client(cfg, backend)
    ledger = LedgerWriter(cfg.ledger_path("extraction.jsonl"))
    results, failures = [], []
    for product in products:
        try:
            results.append(extract_attributes(
                product, template, client,
                mode=mode or cfg.sanitize_mode, ledger=ledger).to_dict())
        except (TransportError, BackendRejection, ExtractionError) as exc:
            failures.append({"product_id": product.product_id, "reason": str(exc)})
    _emit({"extractions": results, "failure_count": len(failures), "failures": failures})
    if not results:
        sys.exit(1)


def _run_products(catalog, product_type, n, seed):
    if product_type is not None and n is not None:
        return sample_items(catalog, product_type, n, seed)
    pool = [p for p in catalog if product_type is None or p.product_type == product_type]
    if not pool:
        raise CatalogError(f"no products of type {product_type!r} in catalog")
    if n is None:
        return pool
    if len(pool) < n:
        raise CatalogError(f"not enough products: have {len(pool)}, requested {n}")
    return random.Random(seed).sample(pool, n)


def _run_and_emit(cfg, products, strategies, backend, seed, width, height, steps,
                  guidance, max_inflight, prompt_suffix, mode, textgen_fail_contains):
    params_over = {k: v for k, v in
                   (("width", width), ("height", height), ("steps", steps),
                    ("guidance", guidance)) if v is not None}
    params = cfg.gen_params(seed=seed, **params_over)
    store = ImageStore(cfg.paths["image_store"])
    run_ledger = LedgerWriter(cfg.ledger_path("generation.jsonl"))
    extraction_ledger = LedgerWriter(cfg.ledger_path("extraction.jsonl"))
    strategy_list = tuple(Strategy(s) for s in strategies) if strategies else STRATEGY_ORDER
    template = None
    if Strategy.LLM in strategy_list:
        template = _template(cfg, None)
    summary = run_pipeline(
        products, template,
        _textgen_client(cfg, backend, fail_contains=textgen_fail_contains),
        _imagegen_client(cfg, backend),
        params, store, run_ledger,
        strategies=strategy_list,
        sanitize_mode=mode or cfg.sanitize_mode,
        prompt_suffix=prompt_suffix if prompt_suffix is not None else cfg.prompt_suffix,
        max_inflight=max_inflight or cfg.imagegen["max_inflight"],
        extraction_ledger=extraction_ledger,
    )
    summary["image_store"] = str(store.root)
    summary["run_ledger"] = str(run_ledger.path)
    _emit(summary)
    if summary["records"] == 0:
        sys.exit(1)


_generation_options = [
    click.option("--catalog", "catalog_path", type=click.Path(), default=None),
    click.option("--strategy", "strategies", multiple=True,
                 type=click.Choice(_STRATEGY_CHOICES)),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--width", type=int, default=None),
    click.option("--height", type=int, default=None),
    click.option("--steps", type=int, default=None),
    click.option("--guidance", type=float, default=None),
    click.option("--max-inflight", type=int, default=None),
    click.option("--prompt-suffix", default=None),
    click.option("--mode", type=click.Choice(["lenient", "strict"]), default=None),
    click.option("--image-store", "image_store", type=click.Path(), default=None),
    click.option("--ledgers-dir", type=click.Path(), default=None),
    click.option("--textgen-fail-contains", "textgen_fail_contains", multiple=True,
                 help="Fault injection: the mock text backend fails on prompts "
                      "containing this substring."),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@cli.command()
@_with_options(_generation_options)
@click.option("--product-id", "product_ids", multiple=True)
@backend_option
@click.pass_context
@_clean_errors
def generate(ctx, catalog_path, strategies, seed, width, height, steps, guidance,
             max_inflight, prompt_suffix, mode, image_store, ledgers_dir,
             textgen_fail_contains, product_ids, backend):
    """Generate banner images for chosen products and strategies."""
    cfg = _cfg(ctx)
    if image_store:
        cfg.paths["image_store"] = image_store
    if ledgers_dir:
        cfg.paths["ledgers_dir"] = ledgers_dir
    catalog = _catalog(cfg, catalog_path)
    products = _pick_products(catalog, product_ids)
    _run_and_emit(cfg, products, strategies, backend, seed, width, height, steps,
                  guidance, max_inflight, prompt_suffix, mode, textgen_fail_contains)


@cli.command()
@_with_options(_generation_options)
@click.option("--product-type", default=None)
@click.option("--n", type=int, default=None)
@backend_option
@click.pass_context
@_clean_errors
def run(ctx, catalog_path, strategies, seed, width, height, steps, guidance,
        max_inflight, prompt_suffix, mode, image_store, ledgers_dir,
        textgen_fail_contains, product_type, n, backend):
    """Full pipeline: sample, extract, build prompts, generate, ledger."""
    cfg = _cfg(ctx)
    if image_store:
        cfg.paths["image_store"] = image_store
    if ledgers_dir:
        cfg.paths["ledgers_dir"] = ledgers_dir
    catalog = _catalog(cfg, catalog_path)
    products = _run_products(catalog, product_type, n, seed)
    _run_and_emit(cfg, products, strategies, backend, seed, width, height, steps,
                  guidance, max_inflight, prompt_suffix, mode, textgen_fail_contains)


@cli.command()
@click.option("--affinities", "affinities_path", type=click.Path(), required=True)
@click.option("--user-id", "user_ids", multiple=True)
@click.option("--catalog", "catalog_path", type=click.Path(), default=None)
@click.pass_context
@_clean_errors
def personalize(ctx, affinities_path, user_ids, catalog_path):
    """Select the best-matching product for each user by cohort affinity."""
    catalog = _catalog(_cfg(ctx), catalog_path)
    users = load_affinities(affinities_path)
    if user_ids:
        by_id = {u.user_id: u for u in users}
        missing = [uid for uid in user_ids if uid not in by_id]
        if missing:
            raise PersonalizationError(f"unknown user ids: {', '.join(missing)}")
        users = [by_id[uid] for uid in user_ids]
    selections = []
    for user in users:
        sel = select_item(user, catalog.products)
        selections.append({"user_id": sel.user_id, "product_id": sel.product_id,
                           "cohort": sel.cohort, "affinity_used": sel.affinity_used})
    _emit({"selections": selections})


@cli.group()
def evaluate():
    """Quality and adherence metrics."""


@evaluate.command(name="brisque")
@click.option("--images", "images_dir", type=click.Path(), required=True)
@click.option("--model", "model_path", type=click.Path(), default=None)
@click.option("--range", "range_path", type=click.Path(), default=None)
@click.option("--features", "with_features", is_flag=True,
              help="Include the 36-component feature vector per image.")
@click.pass_context
@_clean_errors
def evaluate_brisque(ctx, images_dir, model_path, range_path, with_features):
    """Score every PNG under a directory; report per-image and summary stats."""
    cfg = _cfg(ctx)
    model_path = model_path or cfg.paths["svr_model"]
    range_path = range_path or cfg.paths["svr_range"]
    if not model_path or not range_path:
        raise ConfigError("pass --model/--range or set paths.svr_model/paths.svr_range")
    model = parse_svr_model(model_path, range_path)
    files = sorted(Path(images_dir).rglob("*.png"))
    if not files:
        raise BrisqueError(f"no png images under {images_dir}")
    per_image = []
    scores = []
    for file in files:
        features = brisque_features(to_luminance(file.read_bytes()))
        score = brisque_score(features, model)
        entry = {"path": str(file.relative_to(images_dir)), "score": score}
        if with_features:
            entry["features"] = [float(v) for v in features]
        per_image.append(entry)
        scores.append(score)
    mean, std_dev = summarize_scores(scores)
    _emit({"per_image": per_image, "mean": mean, "std_dev": std_dev,
           "count": len(scores)})


@evaluate.command(name="par")
@click.option("--run-ledger", "run_ledger_path", type=click.Path(), default=None)
@click.option("--extraction-ledger", "extraction_ledger_path", type=click.Path(), default=None)
@click.option("--image-store", "image_store", type=click.Path(), default=None)
@click.option("--threshold", type=float, default=None)
@backend_option
@click.pass_context
@_clean_errors
def evaluate_par(ctx, run_ledger_path, extraction_ledger_path, image_store,
                 threshold, backend):
    """Prompt adherence recall over a completed generation run."""
    cfg = _cfg(ctx)
    run_ledger_path = run_ledger_path or cfg.ledger_path("generation.jsonl")
    extraction_ledger_path = extraction_ledger_path or cfg.ledger_path("extraction.jsonl")
    store = ImageStore(image_store or cfg.paths["image_store"])
    threshold = cfg.detector["threshold"] if threshold is None else threshold
    detector = _detector_client(cfg, backend)

    records = read_ledger(run_ledger_path)
    if not records:
        raise AdherenceError(f"no generation records in {run_ledger_path}")
    extractions = {}
    for row in read_ledger(extraction_ledger_path):
        extractions[row["product_id"]] = ExtractionResult.from_dict(row)

    batch = []
    detail = []
    for row in records:
        strategy = Strategy(row["strategy"])
        prompt = ImagePrompt(product_id=row["product_id"], strategy=strategy,
                             text=row["prompt_text"], source=source_for(strategy))
        extraction = extractions.get(row["product_id"]) if strategy is Strategy.LLM else None
        objects = extract_objects(prompt, extraction)
        detections = detector.detect(store.read(row["image_hash"]))
        batch.append((objects, detections))
        detail.append({"prompt_id": objects.prompt_id,
                       "labels": list(objects.labels),
                       "presence": presence(objects, detections, threshold)})
    report = par_report(batch, threshold)
    report["per_prompt"] = detail
    _emit(report)


@cli.group()
def survey():
    """Human relevance survey: HTTP service and score reports."""


@survey.command(name="serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--catalog", "catalog_path", type=click.Path(), default=None)
@click.option("--run-ledger", "run_ledger_path", type=click.Path(), default=None)
@click.option("--ratings-ledger", "ratings_ledger_path", type=click.Path(), default=None)
@click.option("--image-store", "image_store", type=click.Path(), default=None)
@click.pass_context
@_clean_errors
def survey_serve(ctx, host, port, catalog_path, run_ledger_path, ratings_ledger_path,
                 image_store):
    """Serve the survey API over the generation ledger."""
    import uvicorn

    from .survey_api import create_app

    cfg = _cfg(ctx)
    catalog = _catalog(cfg, catalog_path)
    run_ledger_path = run_ledger_path or cfg.ledger_path("generation.jsonl")
    ratings_ledger_path = ratings_ledger_path or cfg.ledger_path("ratings.jsonl")
    manifest = create_survey(catalog.products, read_ledger(run_ledger_path))
    store = RatingStore(ratings_ledger_path, manifest=manifest)
    images = ImageStore(image_store or cfg.paths["image_store"])
    app = create_app(manifest, store, images)
    _diag(f"survey api listening on http://{host}:{port} "
          f"({len(manifest.tasks)} tasks, ratings ledger {ratings_ledger_path})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@survey.command(name="report")
@click.option("--ratings-ledger", "ratings_ledger_path", type=click.Path(), default=None)
@click.option("--catalog", "catalog_path", type=click.Path(), default=None)
@click.pass_context
@_clean_errors
def survey_report_cmd(ctx, ratings_ledger_path, catalog_path):
    """Aggregate recorded ratings into method and per-product scores."""
    cfg = _cfg(ctx)
    ratings_ledger_path = ratings_ledger_path or cfg.ledger_path("ratings.jsonl")
    store = RatingStore(ratings_ledger_path)
    product_ids = None
    catalog_source = catalog_path or cfg.paths["catalog"]
    if catalog_source and Path(catalog_source).exists():
        product_ids = [p.product_id for p in ingest_catalog(catalog_source)]
    _emit(survey_report(store.effective_ratings(), product_ids=product_ids))


def main():
    cli(prog_name="bannerforge")


if __name__ == "__main__":
    main()
