"""HTTP service implementing the QG/QA wire protocol.

POST /v1/generate {"caption", "answer", "n"} -> {"questions": [{"text", "score"}]}
POST /v1/answer   {"question", "context"}    -> {"answer", "score"}
GET  /v1/health                              -> 200 with model identifiers

Malformed bodies get a 400 with a reason; inference failures get a 500.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

MAX_TEXT_LENGTH = 8192


class GenerateRequest(BaseModel):
    caption: str = Field(min_length=1, max_length=MAX_TEXT_LENGTH)
    answer: str = Field(min_length=1, max_length=MAX_TEXT_LENGTH)
    n: int = Field(default=1, ge=1, le=50)


class GeneratedQuestion(BaseModel):
    text: str
    score: float


class GenerateResponse(BaseModel):
    questions: list[GeneratedQuestion]


class AnswerRequest(BaseModel):
    question: str = Field(min_length=1, max_length=MAX_TEXT_LENGTH)
    context: str = Field(min_length=1, max_length=MAX_TEXT_LENGTH)


class AnswerResponse(BaseModel):
    answer: str
    score: float


def create_app(engine) -> FastAPI:
    app = FastAPI(title="vq2a model shim", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def bad_request(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    @app.post("/v1/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest) -> GenerateResponse:
        try:
            questions = engine.generate(req.caption, req.answer, req.n)
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"generation failed: {exc}")
        ranked = sorted(questions, key=lambda q: -float(q["score"]))[: req.n]
        return GenerateResponse(
            questions=[GeneratedQuestion(text=q["text"], score=q["score"]) for q in ranked]
        )

    @app.post("/v1/answer", response_model=AnswerResponse)
    def answer(req: AnswerRequest) -> AnswerResponse:
        try:
            text, score = engine.answer(req.question, req.context)
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"answering failed: {exc}")
        return AnswerResponse(answer=text, score=score)

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", **engine.info()}

    return app
