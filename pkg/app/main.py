"""Relaxation Lab - FastAPI service.

Exposes the experiment harness: gas constants, tau sweeps comparing the
relaxing and relaxed systems, and analytic oracle checks.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from datetime import datetime
from typing import Any, Optional

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ValidationError

from app.errors import ConfigError
from app.harness.config import scenario_from_mapping
from app.harness.oracle_check import run_oracle_checks
from app.harness.registry import SweepRegistry
from app.models.base import GasConstants, TorusGrid
from app.physics.eos import make_constants
from app.settings import load_settings

settings = load_settings()
logging.basicConfig(level=getattr(logging, settings.log_level, logging.INFO))
logger = logging.getLogger(__name__)

registry: Optional[SweepRegistry] = None
executor: Optional[ThreadPoolExecutor] = None


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Create the sweep registry and its worker thread on startup."""
    global registry, executor

    logger.info("Initializing Relaxation Lab...")
    registry = SweepRegistry(max_workers=settings.max_workers)
    executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix="sweep")
    logger.info(f"Relaxation Lab ready (sweep parallelism {settings.max_workers})")

    yield

    logger.info("Shutting down Relaxation Lab...")
    executor.shutdown(wait=False, cancel_futures=True)


app = FastAPI(
    title="Relaxation Lab",
    description="Relaxation limit of damped non-isentropic Euler flow on the torus",
    version="1.0.0",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class ConstantsRequest(BaseModel):
    gamma: float
    bigA: float = 1.0
    p_bar: float = 1.0
    s_bar: float = 0.0


class OracleCheckRequest(BaseModel):
    grid: dict[str, Any] = {}
    constants: dict[str, Any] = {"gamma": 1.4}


def _require_registry() -> SweepRegistry:
    if not registry:
        raise HTTPException(status_code=503, detail="System not initialized")
    return registry


@app.get("/healthz")
async def healthz():
    """Health check endpoint."""
    return {"status": "ok", "timestamp": datetime.now().isoformat()}


@app.get("/")
async def root():
    """Root endpoint with API information."""
    return {
        "name": "Relaxation Lab",
        "version": "1.0.0",
        "description": "Relaxing vs relaxed damped Euler flow, initial layers and energy bounds",
        "solvers": ["relaxing (strang, etdrk4)", "fast-time", "relaxed (integrating-factor midpoint)"],
        "outputs": [
            "errors.csv", "eta.csv", "energy.csv", "layer.csv", "eta_dt.csv", "relaxed_energy.csv",
            "layer_trajectory.csv",
        ],
    }


@app.post("/api/constants")
async def derive_constants(request: ConstantsRequest):
    """Validate gas constants and return the derived background quantities."""
    try:
        constants = make_constants(request.gamma, request.bigA, request.p_bar, request.s_bar)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return {**constants.model_dump(), **constants.derived()}


@app.post("/api/sweeps", status_code=202)
async def submit_sweep(
    config: dict[str, Any] = Body(...),
    wait: bool = Query(False, description="Run the sweep before responding"),
):
    """Submit a sweep; the body holds the grid/constants/scenario/sweep sections."""
    reg = _require_registry()
    try:
        scenario = scenario_from_mapping(config)
    except ConfigError as e:
        raise HTTPException(status_code=400, detail=str(e))

    entry = reg.submit(scenario)
    if wait:
        entry = await run_in_threadpool(reg.execute, entry.id)
    else:
        executor.submit(reg.execute, entry.id)
    return {"id": entry.id, "status": entry.status.value, "config_hash": entry.config_hash}


@app.get("/api/sweeps")
async def list_sweeps():
    """List submitted sweeps, newest first."""
    reg = _require_registry()
    return [
        {
            "id": e.id,
            "status": e.status.value,
            "scenario": e.scenario.name,
            "config_hash": e.config_hash,
            "submitted_at": e.submitted_at.isoformat(),
        }
        for e in reg.list()
    ]


@app.get("/api/sweeps/{sweep_id}")
async def get_sweep(sweep_id: str):
    """Full sweep entry including the result when finished."""
    entry = _require_registry().get(sweep_id)
    if not entry:
        raise HTTPException(status_code=404, detail=f"Sweep not found: {sweep_id}")
    return entry.model_dump(mode="json")


@app.get("/api/sweeps/{sweep_id}/layers")
async def get_sweep_layers(sweep_id: str):
    """Layer reports of a finished sweep, one per tau."""
    entry = _require_registry().get(sweep_id)
    if not entry:
        raise HTTPException(status_code=404, detail=f"Sweep not found: {sweep_id}")
    if entry.result is None:
        raise HTTPException(status_code=409, detail=f"Sweep {sweep_id} is {entry.status.value}")
    return [
        {
            "tau": r.tau,
            "success": r.success,
            "layer": r.layer.model_dump(exclude={"trajectory"}) if r.layer else None,
        }
        for r in entry.result.records
    ]


@app.post("/api/oracle-check")
async def oracle_check(request: OracleCheckRequest):
    """Run the analytic oracle checks on the requested grid and constants."""
    try:
        grid = TorusGrid.model_validate(request.grid)
        constants = GasConstants.model_validate(request.constants)
    except ValidationError as e:
        raise HTTPException(status_code=400, detail=str(e))
    checks = await run_in_threadpool(run_oracle_checks, grid, constants)
    return {
        "passed": all(c.passed for c in checks),
        "checks": [c.model_dump() for c in checks],
    }
