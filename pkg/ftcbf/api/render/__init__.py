from ftcbf.api.render.run_store import RunNotFoundError, RunStore, StoredRun, summarize
from ftcbf.api.render.svg_generator import SvgPlotGenerator

__all__ = ["RunNotFoundError", "RunStore", "StoredRun", "SvgPlotGenerator", "summarize"]
