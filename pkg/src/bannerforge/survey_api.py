"""HTTP API for the rating survey.

Endpoints:
  GET  /api/survey?rater_id=R   blinded task manifest for one rater
  GET  /api/image/<hash>        stored PNG
  POST /api/ratings             {rater_id, product_id, method_slot, rating} -> 201
  GET  /api/report              aggregate score report

Slots are opaque integers; the strategy behind a slot is resolved
server-side so the wire never carries strategy names next to images.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .generation import ImageStore
from .human_eval import (HumanEvalError, RatingRecord, RatingStore, SurveyManifest,
                         parse_rating, survey_report, utc_now)


class RatingSubmission(BaseModel):
    rater_id: str
    product_id: str
    method_slot: int
    rating: str


def create_app(manifest: SurveyManifest, store: RatingStore,
               image_store: ImageStore) -> FastAPI:
    app = FastAPI(title="banner survey")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.get("/api/survey")
    def get_survey(rater_id: str = Query(..., min_length=1)):
        return manifest.rater_view(rater_id)

    @app.get("/api/image/{image_hash}")
    def get_image(image_hash: str):
        if not image_store.has(image_hash):
            raise HTTPException(status_code=404, detail=f"no image {image_hash}")
        return Response(content=image_store.read(image_hash), media_type="image/png")

    @app.post("/api/ratings")
    def post_rating(submission: RatingSubmission):
        try:
            method = manifest.method_for_slot(submission.rater_id,
                                              submission.product_id,
                                              submission.method_slot)
            record = RatingRecord(
                rater_id=submission.rater_id,
                product_id=submission.product_id,
                method=method,
                rating=parse_rating(submission.rating),
                submitted_at=utc_now(),
            )
            outcome = store.record_rating(record)
        except HumanEvalError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return JSONResponse(status_code=201, content=outcome)

    @app.get("/api/report")
    def get_report():
        return survey_report(store.effective_ratings(),
                             product_ids=manifest.product_ids())

    return app
