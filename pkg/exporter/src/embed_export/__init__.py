from .export import ExportConfig, export_embeddings, write_pvem

__all__ = ["ExportConfig", "export_embeddings", "write_pvem"]

__version__ = "0.1.0"
