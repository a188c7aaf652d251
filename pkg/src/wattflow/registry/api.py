"""HTTP surface of the configuration service."""

from __future__ import annotations

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .model import HierarchyValidationError
from .service import Registry


class PutHierarchyResult(BaseModel):
    version: int


def create_app(registry: Registry) -> FastAPI:
    app = FastAPI(title="wattflow registry", docs_url=None, redoc_url=None)

    @app.get("/api/hierarchy")
    def get_hierarchy() -> dict:
        return registry.get_hierarchy().to_doc()

    @app.put("/api/hierarchy", response_model=PutHierarchyResult)
    def put_hierarchy(doc: dict = Body(...)):
        try:
            version = registry.put_hierarchy(doc)
        except HierarchyValidationError as e:
            return JSONResponse(status_code=422, content={"violations": e.violations})
        return PutHierarchyResult(version=version)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "version": registry.get_hierarchy().version}

    return app
