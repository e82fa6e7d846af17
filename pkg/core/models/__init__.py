from .run_models import RunSummary

__all__ = ['RunSummary']
