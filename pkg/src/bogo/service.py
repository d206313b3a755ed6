"""HTTP front end for live campaigns.

Thin JSON layer over :class:`bogo.store.CampaignStore`: every number the
dashboard shows comes from these endpoints.  Mutations carry an
``If-Match: <revision>`` header for optimistic concurrency; a stale
revision is answered with 409 and the current revision, never a partial
write.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import campaign as camp
from .errors import CorruptStateFile, NoModelYet, NumericalError, ValidationError
from .store import CampaignStore, RevisionMismatch


def _error_body(code: str, message: str, **extra) -> dict:
    return {"error": {"code": code, "message": message, **extra}}


def _view(state: camp.CampaignState) -> dict:
    return {
        "campaign_id": state.campaign_id,
        "config": state.config.to_dict(),
        "revision": state.revision,
        "n": state.n,
        "observations": [obs.to_dict() for obs in state.history],
        "pending_suggestion": None if state.pending is None else state.pending.to_dict(),
    }


def build_app(store: CampaignStore, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="bogo campaign service")

    @app.exception_handler(RevisionMismatch)
    async def _revision_conflict(request: Request, exc: RevisionMismatch):
        return JSONResponse(
            status_code=409,
            content=_error_body(
                "revision_mismatch", str(exc), expected=exc.expected, actual=exc.actual
            ),
        )

    @app.exception_handler(KeyError)
    async def _not_found(request: Request, exc: KeyError):
        return JSONResponse(
            status_code=404,
            content=_error_body("not_found", f"unknown campaign {exc.args[0]!r}"),
        )

    @app.exception_handler(NoModelYet)
    async def _no_model(request: Request, exc: NoModelYet):
        return JSONResponse(status_code=409, content=_error_body("no_model_yet", str(exc)))

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return JSONResponse(
            status_code=400, content=_error_body(type(exc).__name__, str(exc))
        )

    @app.exception_handler(NumericalError)
    async def _numerical(request: Request, exc: NumericalError):
        return JSONResponse(
            status_code=500, content=_error_body("numerical_failure", str(exc))
        )

    @app.exception_handler(CorruptStateFile)
    async def _corrupt(request: Request, exc: CorruptStateFile):
        return JSONResponse(
            status_code=500, content=_error_body("corrupt_state_file", str(exc))
        )

    def _require_revision(if_match: str | None, state_revision_of) -> int:
        if if_match is None:
            raise RevisionMismatch(expected=-1, actual=state_revision_of)
        try:
            return int(if_match.strip().strip('"'))
        except ValueError:
            raise RevisionMismatch(expected=-1, actual=state_revision_of) from None

    @app.post("/campaigns", status_code=201)
    async def create_campaign(body: dict):
        config = camp.CampaignConfig.from_dict(body)
        state = store.create(config)
        return {"campaign_id": state.campaign_id, "revision": state.revision}

    @app.get("/campaigns")
    async def list_campaigns():
        return {"campaigns": store.list_ids()}

    @app.get("/campaigns/{campaign_id}")
    async def get_campaign(campaign_id: str):
        return _view(store.load(campaign_id))

    @app.post("/campaigns/{campaign_id}/observations")
    async def post_observation(
        campaign_id: str, body: dict, if_match: str | None = Header(default=None)
    ):
        current = store.load(campaign_id)
        expected = _require_revision(if_match, current.revision)
        state = store.tell(
            campaign_id,
            body.get("x"),
            float(body.get("y")),
            tag=str(body.get("tag", "")),
            expected_revision=expected,
        )
        return {"campaign_id": campaign_id, "revision": state.revision, "n": state.n}

    @app.get("/campaigns/{campaign_id}/suggestion")
    async def get_suggestion(campaign_id: str):
        state, suggestion = store.ask(campaign_id)
        return {"campaign_id": campaign_id, "revision": state.revision, "suggestion": suggestion.to_dict()}

    @app.get("/campaigns/{campaign_id}/curve")
    async def get_curve(
        campaign_id: str, axis: int = 0, resolution: int = 200, slice: str | None = None
    ):
        state = store.load(campaign_id)
        slice_values = None
        if slice:
            slice_values = [float(v) for v in slice.split(",")]
        rows = camp.posterior_curve(state, axis=axis, slice_values=slice_values, resolution=resolution)
        return {
            "campaign_id": campaign_id,
            "revision": state.revision,
            "axis": axis,
            "rows": [row.to_dict() for row in rows],
            "markers": [{"x": obs.x[axis], "y": obs.y} for obs in state.history],
        }

    @app.get("/campaigns/{campaign_id}/diagnostics")
    async def get_diagnostics(campaign_id: str, refit_per_fold: bool | None = None):
        state = store.load(campaign_id)
        report = camp.diagnose(state, refit_per_fold=refit_per_fold)
        return {
            "campaign_id": campaign_id,
            "revision": state.revision,
            "coverage": report.coverage,
            "refit_per_fold": report.refit_per_fold,
            "records": [
                {
                    "actual": r.actual,
                    "predicted": r.predicted_mean,
                    "halfwidth": r.halfwidth,
                    "covered": r.covered,
                    "replicates": r.replicates,
                }
                for r in report.records
            ],
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(state_dir, port: int, host: str = "127.0.0.1", ui_dir=None) -> None:
    """Run the campaign service until interrupted."""
    import uvicorn

    app = build_app(CampaignStore(state_dir), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
