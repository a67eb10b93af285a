"""
Attribute extraction and the three prompting strategies
=======================================================

Runs the text-generation chain with the offline mock backend: render the
instruction template for a product, sanitize the reply, parse the
subject/keywords/setting sentence, then build all three image prompts.
"""

from pathlib import Path

from bannerforge.catalog import ingest_catalog
from bannerforge.clients import MockTextGenClient
from bannerforge.extraction import extract_attributes, load_template, render_llm_prompt
from bannerforge.prompts import Strategy, build_prompt

ROOT = Path(__file__).resolve().parent.parent
catalog = ingest_catalog(ROOT / "tests" / "fixtures" / "sample_catalog.csv")
template = load_template(ROOT / "src" / "bannerforge" / "data" / "llm_prompt_template.txt")

product = catalog.get("p01")
print("product:", product.name)

prompt_text = render_llm_prompt(product, template)
print("\ninstruction prompt sent to the text backend:")
print("  " + prompt_text.replace("\n", "\n  ")[:400])

client = MockTextGenClient()
result = extract_attributes(product, template, client)
print("\nsanitized reply:", result.sanitized_output)
print("parsed tuple:   ", result.parsed)
print("violations:     ", result.violations or "none")

print("\nimage prompts per strategy:")
for strategy in Strategy:
    prompt = build_prompt(product, strategy, extraction=result)
    print(f"  {strategy.value:5s} <- {prompt.source:12s}: {prompt.text[:70]}")
