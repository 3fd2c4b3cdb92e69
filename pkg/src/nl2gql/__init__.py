"""Natural-language to nGQL translation with an embedded executor and evaluation metrics."""

__version__ = "0.1.0"

from .errors import Nl2GqlError  # noqa: E402
from .graph_store import GraphSchema, GraphStore, load_graph, load_schema, neighbors  # noqa: E402

__all__ = ["__version__", "Nl2GqlError", "GraphSchema", "GraphStore", "load_graph", "load_schema", "neighbors"]
