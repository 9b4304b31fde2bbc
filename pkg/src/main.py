from fastapi import FastAPI

from src.infrastructure.api.v1.endpoints import oracles as oracles_v1_router
from src.infrastructure.api.v1.endpoints import presets as presets_v1_router
from src.infrastructure.api.v1.endpoints import runs as runs_v1_router
from src.infrastructure.api.v1.endpoints import verifications as verifications_v1_router
from src.infrastructure.config.settings import get_settings
from src.infrastructure.logging_config import configure_logging

configure_logging(get_settings().FRAP_LOG_LEVEL)

# --- FastAPI App Initialization ---
app = FastAPI(
    title="FRAP Planning API",
    version="0.1.0",
    description="Composable tabular planning and reinforcement learning: run algorithm presets on MDPs "
    "and check them against exact oracles.",
)

# Include routers
app.include_router(presets_v1_router.router)
app.include_router(runs_v1_router.router)
app.include_router(oracles_v1_router.router)
app.include_router(verifications_v1_router.router)


@app.get("/health", tags=["Health"])
async def health_check():
    return {"status": "ok"}

# To run this app:
# uvicorn src.main:app --reload
