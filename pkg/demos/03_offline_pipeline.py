"""
End-to-end offline run and ledger replay
========================================

Runs the whole pipeline (extract -> prompts -> images -> ledger) twice over
three products with the deterministic mock backends and shows that both runs
produce identical image hashes and record ids - only timestamps differ.
"""

import tempfile
from pathlib import Path

from bannerforge.catalog import ingest_catalog
from bannerforge.clients import MockImageGenClient, MockTextGenClient
from bannerforge.extraction import load_template
from bannerforge.generation import GenParams, ImageStore
from bannerforge.ledger import LedgerWriter, read_ledger
from bannerforge.pipeline import run_pipeline

ROOT = Path(__file__).resolve().parent.parent
catalog = ingest_catalog(ROOT / "tests" / "fixtures" / "sample_catalog.csv")
template = load_template(ROOT / "src" / "bannerforge" / "data" / "llm_prompt_template.txt")
products = list(catalog)[:3]
params = GenParams(width=256, height=192, steps=2, seed=7)

work = Path(tempfile.mkdtemp(prefix="bannerforge-demo-"))
ledgers = []
for attempt in ("first", "second"):
    run_dir = work / attempt
    summary = run_pipeline(
        products, template, MockTextGenClient(), MockImageGenClient(), params,
        ImageStore(run_dir / "images"), LedgerWriter(run_dir / "generation.jsonl"))
    print(f"{attempt} run: {summary['records']}/{summary['requested']} records, "
          f"{summary['failure_count']} failures")
    ledgers.append(read_ledger(run_dir / "generation.jsonl"))

print("\nledger comparison (hash prefix per product x strategy):")
for a, b in zip(*ledgers):
    same = a["image_hash"] == b["image_hash"] and a["record_id"] == b["record_id"]
    print(f"  {a['product_id']} {a['strategy']:5s} {a['image_hash'][:12]}  "
          f"replay identical: {same}")

print(f"\nartifacts under {work}")
