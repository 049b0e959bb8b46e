from .app import BundleHolder, create_app, create_scorer_app, record_from_raw

__all__ = ["BundleHolder", "create_app", "create_scorer_app", "record_from_raw"]
