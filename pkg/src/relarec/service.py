"""HTTP recommendation endpoint.

``GET /v1/recommendations?doc_id=&scenario=&k=`` serves one delivery;
``POST /v1/clicks`` with ``{"delivery_id", "rank"}`` records a click.
Arms and scores stay hidden from clients unless the app runs in debug mode.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel

from .corpus import CorpusStore, DocumentNotFound
from .experiment import Engine, InvalidRank, NoRecommendations, UnknownDelivery


class Item(BaseModel):
    rank: int
    doc_id: str
    title: str


class RecommendationResponse(BaseModel):
    delivery_id: str
    items: list[Item]
    arm: Optional[str] = None
    params: Optional[dict] = None
    fallback: Optional[bool] = None
    scores: Optional[list[float]] = None


class Click(BaseModel):
    delivery_id: str
    rank: int


def create_app(
    engine: Engine | None,
    store: CorpusStore | None,
    debug: bool = False,
    unavailable_reason: str = "recommender artifacts are not built",
) -> FastAPI:
    """Wrap an engine. With ``engine=None`` every recommendation request answers 503."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        if engine is not None:
            engine.close()

    app = FastAPI(title="relarec", lifespan=lifespan)

    @app.get("/v1/recommendations", response_model=RecommendationResponse, response_model_exclude_none=True)
    def recommendations(doc_id: str, scenario: str, k: int = Query(6, ge=1)):
        if engine is None:
            raise HTTPException(503, unavailable_reason)
        if scenario not in {s.name for s in engine.config.scenarios}:
            raise HTTPException(400, f"unknown scenario {scenario!r}")
        try:
            record = engine.deliver(scenario, doc_id, k=k)
        except DocumentNotFound:
            raise HTTPException(404, f"unknown document {doc_id!r}") from None
        except NoRecommendations as exc:
            raise HTTPException(404, str(exc)) from None
        items = [Item(rank=i, doc_id=d, title=store.get(d).title if store else "")
                 for i, d in enumerate(record.items, start=1)]
        body = RecommendationResponse(delivery_id=record.delivery_id, items=items)
        if debug:
            body.arm, body.params, body.fallback, body.scores = (
                record.arm, record.params, record.fallback, record.scores)
        return body

    @app.post("/v1/clicks", status_code=204)
    def clicks(click: Click):
        if engine is None:
            raise HTTPException(503, unavailable_reason)
        try:
            engine.record_click(click.delivery_id, click.rank)
        except UnknownDelivery:
            raise HTTPException(404, f"unknown delivery {click.delivery_id!r}") from None
        except InvalidRank as exc:
            raise HTTPException(422, str(exc)) from None
        return Response(status_code=204)

    return app
