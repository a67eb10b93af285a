from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bannerforge.adherence import (AdherenceError, Detection, PromptObjects,
                                   extract_objects, par_report, par_score, presence)
from bannerforge.extraction import ExtractionResult
from bannerforge.prompts import ImagePrompt, Strategy


def objects(labels, pid="p:PTYPE"):
    return PromptObjects(prompt_id=pid, labels=tuple(labels))


def det(label, confidence=0.9):
    return Detection(label=label, confidence=confidence)


class TestHeadNoun:
    def _prompt(self, text, strategy=Strategy.PNAME):
        source = {"LLM": "extraction", "PNAME": "product_name", "PTYPE": "product_type"}
        return ImagePrompt(product_id="p7", strategy=strategy, text=text,
                           source=source[strategy.value])

    def test_last_token_lowercased_stripped(self):
        objs = extract_objects(self._prompt("Fluffy Gray Area Rug."))
        assert objs.labels == ("rug",)
        assert objs.prompt_id == "p7:PNAME"

    def test_parsed_extraction_supplies_subject_head(self):
        prompt = self._prompt("plush dog bed with soft walls in a den", Strategy.LLM)
        extraction = ExtractionResult(
            product_id="p7", raw_output="", sanitized_output=prompt.text,
            parsed=("plush dog bed", "soft walls", "a den"), violations=[])
        assert extract_objects(prompt, extraction).labels == ("bed",)

    def test_unparsed_extraction_falls_back_to_prompt_text(self):
        prompt = self._prompt("a cozy reading lamp", Strategy.LLM)
        extraction = ExtractionResult(product_id="p7", raw_output="",
                                      sanitized_output=prompt.text,
                                      parsed=None, violations=[])
        assert extract_objects(prompt, extraction).labels == ("lamp",)

    def test_punctuation_only_token_rejected(self):
        with pytest.raises(AdherenceError):
            extract_objects(self._prompt("ends with ..."))


class TestPresence:
    def test_case_insensitive_match(self):
        got = presence(objects(["rug"]), [det("RUG", 0.8)])
        assert got == {"rug": 1}

    def test_below_threshold_misses(self):
        assert presence(objects(["rug"]), [det("rug", 0.2)]) == {"rug": 0}
        assert presence(objects(["rug"]), [det("rug", 0.25)]) == {"rug": 1}

    def test_custom_threshold(self):
        assert presence(objects(["rug"]), [det("rug", 0.5)], threshold=0.6) == {"rug": 0}

    def test_dict_detections_accepted(self):
        got = presence(objects(["bed"]), [{"label": "bed", "confidence": 0.7}])
        assert got == {"bed": 1}

    def test_invalid_threshold_rejected(self):
        with pytest.raises(AdherenceError):
            presence(objects(["rug"]), [], threshold=1.5)

    def test_invalid_confidence_rejected(self):
        with pytest.raises(AdherenceError):
            det("rug", 1.2)


class TestPromptObjects:
    def test_empty_labels_rejected(self):
        with pytest.raises(AdherenceError):
            objects([])

    def test_duplicate_labels_rejected(self):
        with pytest.raises(AdherenceError):
            objects(["rug", "rug"])


class TestParScore:
    def test_hand_worked_mixed_batch(self):
        # Presence vectors (1,2,1 labels): [1], [1,0], [0] -> 2/4.
        batch = [
            (objects(["rug"], "a:PNAME"), [det("rug")]),
            (objects(["bed", "lamp"], "b:PNAME"), [det("bed")]),
            (objects(["sofa"], "c:PNAME"), []),
        ]
        assert par_score(batch) == pytest.approx(0.5)

    def test_flat_mean_not_prompt_mean(self):
        # (1,1,0,0) over prompts with 1,1,2,2 labels: flat = 2/6.
        batch = [
            (objects(["a"], "1:PNAME"), [det("a")]),
            (objects(["b"], "2:PNAME"), [det("b")]),
            (objects(["c", "d"], "3:PNAME"), []),
            (objects(["e", "f"], "4:PNAME"), []),
        ]
        assert par_score(batch) == pytest.approx(2 / 6)
        report = par_report(batch)
        assert report["par"] == pytest.approx(2 / 6)
        assert report["per_prompt_mean_par"] == pytest.approx(0.5)

    def test_bounds(self):
        full = [(objects(["x"]), [det("x")])]
        empty = [(objects(["x"]), [])]
        assert par_score(full) == 1.0
        assert par_score(empty) == 0.0

    def test_empty_batch_rejected(self):
        with pytest.raises(AdherenceError):
            par_score([])

    def test_flipping_one_miss_to_hit_raises_score(self):
        batch = [
            (objects(["rug", "bed"], "a:PNAME"), [det("rug")]),
            (objects(["sofa"], "b:PNAME"), []),
        ]
        before = par_score(batch)
        batch[1] = (batch[1][0], [det("sofa")])
        after = par_score(batch)
        assert after == pytest.approx(before + 1 / 3)

    def test_order_invariant(self):
        batch = [
            (objects(["rug"], "a:PNAME"), [det("rug")]),
            (objects(["bed", "lamp"], "b:PNAME"), [det("lamp")]),
            (objects(["sofa"], "c:PNAME"), []),
        ]
        assert par_score(batch) == par_score(list(reversed(batch)))

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_matches_exact_fraction_oracle(self, data):
        n_prompts = data.draw(st.integers(min_value=1, max_value=12))
        batch = []
        hits = 0
        total = 0
        for i in range(n_prompts):
            n_labels = data.draw(st.integers(min_value=1, max_value=4))
            labels = [f"obj{i}_{j}" for j in range(n_labels)]
            detections = []
            for label in labels:
                present = data.draw(st.booleans())
                conf = data.draw(st.floats(min_value=0.25, max_value=1.0)) if present \
                    else data.draw(st.floats(min_value=0.0, max_value=0.249))
                if present or data.draw(st.booleans()):
                    detections.append(det(label, conf))
                hits += 1 if present else 0
                total += 1
            batch.append((objects(labels, f"{i}:PNAME"), detections))
        expected = Fraction(hits, total)
        assert par_score(batch) == pytest.approx(float(expected), abs=1e-12)

    def test_report_fields(self):
        batch = [(objects(["rug"]), [det("rug")])]
        report = par_report(batch, threshold=0.4)
        assert report == {"par": 1.0, "per_prompt_mean_par": 1.0,
                          "prompts": 1, "labels": 1, "threshold": 0.4}
