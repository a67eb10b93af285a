import io
import json

import pytest
from fastapi.testclient import TestClient
from PIL import Image

from bannerforge.catalog import Product
from bannerforge.generation import ImageStore
from bannerforge.human_eval import RatingStore, create_survey
from bannerforge.prompts import Strategy
from bannerforge.survey_api import create_app


@pytest.fixture
def survey_env(tmp_path):
    image_store = ImageStore(tmp_path / "images")
    products = []
    records = []
    for i in range(3):
        product = Product(product_id=f"p{i}", name=f"Product {i}",
                          product_type="things", cohort="parent")
        products.append(product)
        for j, strategy in enumerate(Strategy):
            buf = io.BytesIO()
            Image.new("RGB", (16, 16), (40 * i + 10, 60 * j + 5, 90)).save(
                buf, format="PNG")
            image_hash = image_store.store(buf.getvalue())
            records.append({"product_id": product.product_id,
                            "strategy": strategy.value, "image_hash": image_hash})
    manifest = create_survey(products, records)
    store = RatingStore(tmp_path / "ratings.jsonl", manifest=manifest)
    app = create_app(manifest, store, image_store)
    return TestClient(app), manifest, store


class TestSurveyEndpoint:
    def test_returns_blinded_tasks(self, survey_env):
        client, manifest, _ = survey_env
        resp = client.get("/api/survey", params={"rater_id": "r1"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["rater_id"] == "r1"
        assert len(body["tasks"]) == 3
        for task in body["tasks"]:
            assert len(task["image_hashes"]) == 3

    def test_no_strategy_names_on_the_wire(self, survey_env):
        client, _, _ = survey_env
        text = client.get("/api/survey", params={"rater_id": "r1"}).text
        for token in ("LLM", "PNAME", "PTYPE"):
            assert token not in text

    def test_rater_id_required(self, survey_env):
        client, _, _ = survey_env
        assert client.get("/api/survey").status_code == 422

    def test_slot_order_varies_by_rater(self, survey_env):
        client, _, _ = survey_env
        views = [client.get("/api/survey", params={"rater_id": f"r{i}"}).json()
                 for i in range(6)]
        orders = {tuple(v["tasks"][0]["image_hashes"]) for v in views}
        assert len(orders) > 1


class TestImageEndpoint:
    def test_serves_png(self, survey_env):
        client, manifest, _ = survey_env
        image_hash = manifest.tasks[0].images[Strategy.LLM]
        resp = client.get(f"/api/image/{image_hash}")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        assert Image.open(io.BytesIO(resp.content)).format == "PNG"

    def test_unknown_hash_is_404(self, survey_env):
        client, _, _ = survey_env
        assert client.get(f"/api/image/{'0' * 64}").status_code == 404


class TestRatingsEndpoint:
    def submit(self, client, slot=0, rating="high", rater="r1", product="p0"):
        return client.post("/api/ratings", json={
            "rater_id": rater, "product_id": product,
            "method_slot": slot, "rating": rating})

    def test_created_and_resolved_to_method(self, survey_env):
        client, manifest, store = survey_env
        resp = self.submit(client, slot=1)
        assert resp.status_code == 201
        assert resp.json() == {"stored": True, "audit_count": 1}
        effective = store.effective_ratings()
        assert len(effective) == 1
        assert effective[0].method == manifest.method_for_slot("r1", "p0", 1)

    def test_resubmission_overwrites_with_audit(self, survey_env):
        client, _, store = survey_env
        self.submit(client, rating="low")
        resp = self.submit(client, rating="high")
        assert resp.status_code == 201
        assert resp.json()["audit_count"] == 2
        assert len(store.effective_ratings()) == 1
        assert store.effective_ratings()[0].rating.value == "high"

    def test_invalid_rating_is_400(self, survey_env):
        client, _, _ = survey_env
        resp = self.submit(client, rating="amazing")
        assert resp.status_code == 400
        assert "legal ratings" in resp.json()["detail"]

    def test_invalid_slot_is_400(self, survey_env):
        client, _, _ = survey_env
        assert self.submit(client, slot=7).status_code == 400

    def test_unknown_product_is_400(self, survey_env):
        client, _, _ = survey_env
        assert self.submit(client, product="nope").status_code == 400

    def test_missing_field_is_422(self, survey_env):
        client, _, _ = survey_env
        resp = client.post("/api/ratings", json={"rater_id": "r1"})
        assert resp.status_code == 422


class TestReportEndpoint:
    def test_aggregates_submissions(self, survey_env):
        client, manifest, _ = survey_env
        # One rater rates every slot of every product high.
        for product_id in manifest.product_ids():
            for slot in range(3):
                client.post("/api/ratings", json={
                    "rater_id": "r1", "product_id": product_id,
                    "method_slot": slot, "rating": "high"})
        report = client.get("/api/report").json()
        assert report["rating_count"] == 9
        assert report["rater_count"] == 1
        for stats in report["methods"].values():
            assert stats["complete_grid"] is True
            assert stats["mean"] == 3.0
        assert report["missing_cells"] == []

    def test_empty_report_lists_missing_cells(self, survey_env):
        client, _, _ = survey_env
        report = client.get("/api/report").json()
        assert report["rating_count"] == 0
        assert report["product_count"] == 3
