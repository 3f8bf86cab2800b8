from contextlib import asynccontextmanager

from dotenv import load_dotenv
from fastapi import FastAPI

from api.routes import router
from config.logging import configure_logging
from config.settings import get_log_level
from services.reporting import TOOL, VERSION

load_dotenv()


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Lifespan context manager to handle startup and shutdown events.
    """
    configure_logging(get_log_level())
    yield


app = FastAPI(
    title="Focal Frames API",
    description=f"{TOOL}: curvature, focal loci and transport reports for normalized varieties",
    version=VERSION,
    lifespan=lifespan,
)

app.include_router(router)
