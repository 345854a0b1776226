"""HTTP layer: /generate and /health over one model runtime.

Status codes: 400 malformed request, 503 while the model is loading (or
failed to load, or timed out waiting), 429 when the request queue is
full, 500 on inference failure.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .model import ModelRuntime, QueueFull, QueueTimeout, timed_generate


class GenerateRequest(BaseModel):
    seed: str
    n: int = Field(ge=1)
    length: int = Field(default=512, ge=1)
    temperature: float = Field(default=0.5, gt=0)
    top_p: float = Field(default=0.95, gt=0, le=1)
    top_k: int = Field(default=40, ge=0)
    rng_seed: int | None = None

    model_config = {"extra": "forbid"}


class GenerateResponse(BaseModel):
    texts: list[str]
    model_tag: str
    elapsed_ms: int


def create_app(runtime: ModelRuntime) -> FastAPI:
    app = FastAPI(title="genserver")
    app.state.runtime = runtime

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/health")
    def health():
        return {"status": runtime.status, "model_tag": runtime.model_tag}

    @app.post("/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest):
        if runtime.status != "ready":
            detail = runtime.load_error or "model is loading"
            return JSONResponse(status_code=503, content={"detail": detail})
        try:
            texts, elapsed_ms = timed_generate(
                runtime,
                seed=req.seed,
                n=req.n,
                length=req.length,
                temperature=req.temperature,
                top_p=req.top_p,
                top_k=req.top_k,
                rng_seed=req.rng_seed,
            )
        except QueueFull as exc:
            return JSONResponse(status_code=429, content={"detail": str(exc)})
        except QueueTimeout as exc:
            return JSONResponse(status_code=503, content={"detail": str(exc)})
        except Exception as exc:
            return JSONResponse(status_code=500, content={"detail": f"inference failed: {exc}"})
        response = GenerateResponse(texts=texts, model_tag=runtime.model_tag, elapsed_ms=elapsed_ms)
        if len(response.texts) != req.n:
            return JSONResponse(status_code=500, content={"detail": "text count mismatch"})
        return response

    return app
