"""
Adherence recall and the blinded relevance survey
=================================================

Measures prompt adherence over a small mock run with the offline detector,
then simulates three raters submitting blinded ratings and prints the
aggregated per-method report.
"""

import tempfile
from pathlib import Path

from bannerforge.adherence import PromptObjects, extract_objects, par_report, presence
from bannerforge.catalog import ingest_catalog
from bannerforge.clients import (MockDetectorClient, MockImageGenClient,
                                 MockTextGenClient)
from bannerforge.extraction import load_template
from bannerforge.generation import GenParams, ImageStore
from bannerforge.human_eval import (Rating, RatingRecord, RatingStore,
                                    create_survey, survey_report, utc_now)
from bannerforge.ledger import LedgerWriter, read_ledger
from bannerforge.pipeline import run_pipeline
from bannerforge.prompts import ImagePrompt, Strategy, source_for

ROOT = Path(__file__).resolve().parent.parent
catalog = ingest_catalog(ROOT / "tests" / "fixtures" / "sample_catalog.csv")
template = load_template(ROOT / "src" / "bannerforge" / "data" / "llm_prompt_template.txt")
products = list(catalog)[:3]

work = Path(tempfile.mkdtemp(prefix="bannerforge-demo-"))
store = ImageStore(work / "images")
run_pipeline(products, template, MockTextGenClient(), MockImageGenClient(),
             GenParams(width=256, height=192, steps=2, seed=3), store,
             LedgerWriter(work / "generation.jsonl"))
records = read_ledger(work / "generation.jsonl")

# Presence semantics on a hand-made case: label found iff a detection
# matches it (case-insensitive) at or above the confidence threshold.
expected = PromptObjects(prompt_id="demo:LLM", labels=("bed",))
detections = [{"label": "Bed", "confidence": 0.82}, {"label": "person", "confidence": 0.4}]
print(f"expected {expected.labels} vs detections {detections}")
print(f"presence: {presence(expected, detections)}")

# PAR over the mock run. The offline detector is a deterministic stand-in
# that labels from a fixed vocabulary, so this number is arbitrary; with a
# real detector it measures how often the prompted object appears.
detector = MockDetectorClient()
batch = []
for row in records:
    strategy = Strategy(row["strategy"])
    prompt = ImagePrompt(product_id=row["product_id"], strategy=strategy,
                         text=row["prompt_text"], source=source_for(strategy))
    objects = extract_objects(prompt)
    batch.append((objects, detector.detect(store.read(row["image_hash"]))))
report = par_report(batch)
print(f"\nPAR over {report['prompts']} prompts / {report['labels']} labels: "
      f"{report['par']:.3f} (threshold {report['threshold']})")

# Blinded survey: slots hide which strategy produced which image.
manifest = create_survey(products, records)
ratings = RatingStore(work / "ratings.jsonl", manifest=manifest)
preference = {Strategy.LLM: Rating.HIGH, Strategy.PNAME: Rating.MEDIUM,
              Strategy.PTYPE: Rating.LOW}
for rater in ("r1", "r2", "r3"):
    view = manifest.rater_view(rater)
    for task in view["tasks"]:
        for slot in range(len(task["image_hashes"])):
            method = manifest.method_for_slot(rater, task["product_id"], slot)
            ratings.record_rating(RatingRecord(
                rater_id=rater, product_id=task["product_id"], method=method,
                rating=preference[method], submitted_at=utc_now()))

slots = manifest.slots_for("r1", products[0].product_id)
print(f"\nslot order for r1 on {products[0].product_id}: "
      f"{[s.value for s in slots]} (server-side secret)")

result = survey_report(ratings.effective_ratings())
print("\nper-method scores (3 raters x 3 products, mean of 1/2/3 ratings):")
for method, stats in result["methods"].items():
    print(f"  {method:5s} mean {stats['mean']:.3f} std {stats['std_dev']:.3f} "
          f"n {stats['n']}")
