"""genserver: HTTP sidecar for causal-LM text generation and fine-tuning."""

__version__ = "0.1.0"

from .app import GenerateRequest, GenerateResponse, create_app
from .model import ModelRuntime, QueueFull, QueueTimeout
from .finetune import finetune
from .tiny import make_tiny_model

__all__ = [
    "__version__",
    "create_app",
    "GenerateRequest",
    "GenerateResponse",
    "ModelRuntime",
    "QueueFull",
    "QueueTimeout",
    "finetune",
    "make_tiny_model",
]
