# stare_kg/main.py
import logging
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from stare_kg.api.predict import Predictor, router as predict_router
from stare_kg.config import CHECKPOINT_PATH, DEVICE

logger = logging.getLogger(__name__)

# 로컬 개발용 프론트/노트북 origin
ALLOWED_ORIGINS = [
    "http://localhost:3000",
    "http://localhost:5173",
    "http://localhost:8000",
    "http://localhost:8888",
]


def create_app(predictor: Optional[Predictor] = None, checkpoint_path: Optional[str] = CHECKPOINT_PATH,
               device: str = DEVICE) -> FastAPI:
    """Predictor is loaded lazily from `checkpoint_path` on the first request unless given."""
    app = FastAPI(title="stare-kg link prediction")
    app.state.predictor = predictor
    app.state.checkpoint_path = checkpoint_path
    app.state.device = device
    app.include_router(predict_router)

    app.add_middleware(
        CORSMiddleware,
        allow_origins=ALLOWED_ORIGINS,
        allow_methods=["*"],
        allow_headers=["*"],
        allow_credentials=False,
    )

    # 잘못된 요청 본문은 422 대신 400
    @app.exception_handler(RequestValidationError)
    async def _malformed(request: Request, exc: RequestValidationError):
        logger.warning(f"Malformed request | path={request.url.path} | errors={len(exc.errors())}")
        return JSONResponse(status_code=400, content={"detail": jsonable_encoder(exc.errors())})

    return app


app = create_app()
