import asyncio

from fastapi import APIRouter, HTTPException, Query

from api.schemas import Report, VarietySpecFile
from config.settings import get_settings
from services.errors import FocalFramesError, InputError
from services.reporting import (
    OPERATIONS,
    digest_document,
    report_all,
    run_operation,
)

router = APIRouter()


@router.post(
    "/reports/{operation}",
    summary="Run a report",
    description="Run one subcommand on a posted input document and return its report",
)
async def create_report(
    operation: str,
    document: VarietySpecFile,
    tolerance: float | None = Query(default=None, gt=0),
    steps: int | None = Query(default=None, ge=2),
    seed: int | None = None,
) -> Report:
    """
    Same sections and status as the command line; validation failures come
    back as a report with status "failed", not as an HTTP error.

    Args:
        operation: one of the subcommand names, e.g. "focal" or "report-all"
        document: the input document

    Returns:
        The report, with wall time included
    """
    if operation not in OPERATIONS:
        raise HTTPException(status_code=404, detail=f"Unknown operation '{operation}'")
    try:
        settings = get_settings(tolerance, steps, seed, timings=True)
        digest = digest_document(document)
        if operation == "report-all":
            report = await report_all(document, digest, settings)
        else:
            report = await asyncio.to_thread(run_operation, operation, document, digest, settings)
        return Report.model_validate(report)
    except InputError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except FocalFramesError as e:
        raise HTTPException(status_code=422, detail=f"{type(e).__name__}: {e}")
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Internal server error: {str(e)}")
