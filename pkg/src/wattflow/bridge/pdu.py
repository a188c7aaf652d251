"""HTTP push bridge for PDU-style meters.

PDUs post one JSON message covering all their outlets, possibly with
several samples per outlet and several metrics per sample batch. Only
active power survives; voltage, current, and anything else is filtered
out. Records are keyed ``<pduId>/<outletId>`` so outlets stay unique
across PDUs.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ValidationError

from ..msglog import TOPIC_RECORDS, Broker
from ..records import ActivePowerRecord
from .pipeline import pipeline

ACTIVE_POWER_METRIC = "active-power"


class PduSample(BaseModel):
    timestamp: int
    metric: str
    value: float


class PduOutlet(BaseModel):
    outletId: str
    samples: list[PduSample]


class PduPushMessage(BaseModel):
    pduId: str
    outlets: list[PduOutlet]


def pdu_pipeline(msg: PduPushMessage):
    """Bridge pipeline: explode outlets/samples, keep active power, build records."""
    return (
        pipeline([msg])
        .flat_map(lambda m: [(m.pduId, o.outletId, s) for o in m.outlets for s in o.samples])
        .filter(lambda t: t[2].metric == ACTIVE_POWER_METRIC)
        .map(lambda t: ActivePowerRecord(f"{t[0]}/{t[1]}", t[2].timestamp, t[2].value))
    )


def pdu_records(msg: PduPushMessage) -> list[ActivePowerRecord]:
    return pdu_pipeline(msg).collect()


def push_pdu_message(broker: Broker, msg: PduPushMessage, topic: str = TOPIC_RECORDS) -> int:
    """Publish the message's active-power records; returns how many."""
    stats = pdu_pipeline(msg).to(broker, topic).run()
    return stats.emitted


def create_app(broker: Broker, topic: str = TOPIC_RECORDS) -> FastAPI:
    app = FastAPI(title="wattflow pdu bridge", docs_url=None, redoc_url=None)
    broker.partition_count(topic)  # fail fast if the records topic is missing

    @app.post("/ingest/pdu")
    async def ingest(request: Request):
        try:
            body = await request.json()
            msg = PduPushMessage.model_validate(body)
        except (ValueError, ValidationError) as e:
            return JSONResponse(status_code=400, content={"error": str(e)})
        published = push_pdu_message(broker, msg, topic)
        return {"published": published}

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    return app
