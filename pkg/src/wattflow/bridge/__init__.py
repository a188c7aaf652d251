"""Record bridges: stream DSL, PDU push endpoint, and the load simulator."""

from .pdu import PduOutlet, PduPushMessage, PduSample, pdu_records, push_pdu_message
from .pipeline import Pipeline, PipelineStats, RunnablePipeline, pipeline
from .simulator import Simulator, sim_hierarchy

__all__ = [
    "PduOutlet",
    "PduPushMessage",
    "PduSample",
    "Pipeline",
    "PipelineStats",
    "RunnablePipeline",
    "Simulator",
    "pdu_records",
    "pipeline",
    "push_pdu_message",
    "sim_hierarchy",
]
