"""
API module - FastAPI app and router for the perimeter defense lab.

Serve with:  uvicorn perimeter_defense.api:app
"""

from typing import Any, Dict

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from perimeter_defense.api.routes import router


def create_app() -> FastAPI:
    app = FastAPI(title="Perimeter Defense Lab API")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=False,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.include_router(router)

    @app.get("/health")
    async def health() -> Dict[str, Any]:
        return {"status": "ok"}

    return app


app = create_app()

__all__ = ["router", "create_app", "app"]
