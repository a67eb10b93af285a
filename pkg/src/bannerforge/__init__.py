"""Banner generation pipeline: product catalogs in, evaluated banner images out.

The chain: sample catalog items, extract a scene sentence via a text
service, feed it (or the raw name / type) to an image service, then score
outputs with a no-reference quality metric, prompt-adherence recall, and a
blinded human survey.
"""

__version__ = "0.1.0"
