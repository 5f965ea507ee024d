from .adapters import Adapter, ColorRegionAdapter, load_adapter
from .app import create_app
from .codecs import ProtocolError

__all__ = ["Adapter", "ColorRegionAdapter", "ProtocolError", "create_app", "load_adapter"]
__version__ = "0.1.0"
