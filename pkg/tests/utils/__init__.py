from .loader import data_path, load_json

__all__ = ["data_path", "load_json"]
